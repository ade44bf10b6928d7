use clap::Parser;

fn main() {
    let cli = musielak::Cli::parse();
    std::process::exit(musielak::run(&cli));
}
