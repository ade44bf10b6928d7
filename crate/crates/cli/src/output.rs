//! CSV artifacts and plain-text tables.
//!
//! Numbers are written in Rust's shortest round-trip form, so files are
//! byte-identical whenever the computed values are.

use std::io::Write;
use std::path::{Path, PathBuf};

use musielak_core::fem::Mesh;
use musielak_core::modular::DiscreteField;

use crate::CliError;

pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `name` under `dir` with the given header and rows.
pub fn write_csv<I>(dir: &Path, name: &str, header: &[String], rows: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(header).map_err(|e| csv_err(&path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

/// `prefix_1, …, prefix_d`.
pub fn indexed(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("{prefix}_{k}")).collect()
}

pub fn header(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub fn nums(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| num(*v)).collect()
}

/// Vertices with boundary flags, and cells as vertex index lists.
pub fn write_mesh(dir: &Path, mesh: &Mesh) -> Result<(), CliError> {
    let d = mesh.dim();
    write_csv(
        dir,
        "mesh_vertices.csv",
        &header(&[&names(&["vertex"]), &indexed("x", d), &names(&["boundary"])]),
        (0..mesh.vertex_count()).map(|v| {
            let mut row = vec![v.to_string()];
            row.extend(nums(mesh.vertex(v)));
            row.push(u8::from(mesh.is_boundary(v)).to_string());
            row
        }),
    )?;
    write_csv(
        dir,
        "mesh_cells.csv",
        &header(&[&names(&["cell"]), &indexed("v", d + 1)]),
        (0..mesh.cell_count()).map(|c| {
            let mut row = vec![c.to_string()];
            row.extend(mesh.cell(c).iter().map(|v| v.to_string()));
            row
        }),
    )?;
    Ok(())
}

/// One row per quadrature point: coordinates, weight, then the values of
/// every field in order.
pub fn write_fields(dir: &Path, name: &str, fields: &[(&str, &DiscreteField<'_>)]) -> Result<PathBuf, CliError> {
    let quad = fields[0].1.quadrature();
    let d = quad.dim();
    let mut head = header(&[&indexed("x", d), &names(&["weight"])]);
    for (label, f) in fields {
        if f.components() == 1 {
            head.push(label.to_string());
        } else {
            head.extend(indexed(label, f.components()));
        }
    }
    write_csv(
        dir,
        name,
        &head,
        (0..quad.len()).map(|q| {
            let mut row = nums(quad.point(q));
            row.push(num(quad.weight(q)));
            for (_, f) in fields {
                row.extend(nums(f.value(q)));
            }
            row
        }),
    )
}

/// Left-aligned plain-text table.
pub fn table(w: &mut dyn Write, head: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut widths: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (k, cell) in row.iter().enumerate() {
            widths[k] = widths[k].max(cell.chars().count());
        }
    }
    let line = |w: &mut dyn Write, cells: &mut dyn Iterator<Item = &str>| -> std::io::Result<()> {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, n)| format!("{c}{}", " ".repeat(n - c.chars().count())))
            .collect();
        writeln!(w, "  {}", parts.join("  ").trim_end())
    };
    line(w, &mut head.iter().copied())?;
    for row in rows {
        line(w, &mut row.iter().map(String::as_str))?;
    }
    Ok(())
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Short scientific notation for reports.
pub fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use musielak_core::fem::{build_mesh, Domain};

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e10, 0.0, 2.5e-17, 7e20] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(2.5e-17), "2.5e-17");
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn mesh_and_table_serialize() {
        let dir = std::env::temp_dir().join(format!("musielak-output-{}", std::process::id()));
        let mesh = build_mesh(Domain::unit_interval(), 2).unwrap();
        write_mesh(&dir, &mesh).unwrap();
        let v = std::fs::read_to_string(dir.join("mesh_vertices.csv")).unwrap();
        assert_eq!(v, "vertex,x_1,boundary\n0,0,1\n1,0.5,0\n2,1,1\n");
        let c = std::fs::read_to_string(dir.join("mesh_cells.csv")).unwrap();
        assert_eq!(c.lines().count(), 3);
        std::fs::remove_dir_all(&dir).unwrap();

        let mut buf = Vec::new();
        table(&mut buf, &["a", "long"], &[vec!["xyz".into(), "1".into()]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "  a    long\n  xyz  1\n");
    }
}
