//! Subcommand pipelines.

use std::io::Write;
use std::path::Path;

use musielak_core::balance::{check_balance as run_balance, smallest_passing_constant, BalanceReport};
use musielak_core::fem::{build_mesh, BasisSet};
use musielak_core::galerkin::{
    convergence_study, dual_bound_check, energy_diagnostics, phi_lemma_check, uniqueness_probe, GalerkinSolution,
    GalerkinSystem, SolverSettings, Start,
};
use musielak_core::nfunction::{duality_suite, random_triples};
use musielak_core::problem::{gradient_consistency, validate_structure};
use musielak_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, RunConfig};
use crate::output::{header, indexed, names, num, nums, sci, table, verdict, write_csv, write_fields, write_mesh};
use crate::{CliError, ExitStatus};

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub out: &'a Path,
}

impl Context<'_> {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

type Outcome = Result<ExitStatus, CliError>;

fn status(ok: bool) -> ExitStatus {
    if ok {
        ExitStatus::Pass
    } else {
        ExitStatus::Violation
    }
}

fn summary_csv(out: &Path, name: &str, rows: &[(&str, String)]) -> Result<(), CliError> {
    write_csv(
        out,
        name,
        &names(&["quantity", "value"]),
        rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )?;
    Ok(())
}

pub fn check_nfunction(ctx: &Context<'_>, w: &mut dyn Write) -> Outcome {
    let cfg = ctx.config;
    let check = &cfg.check;
    if !(check.xi_min > 0.0 && check.xi_min < check.xi_max) {
        return Err(ConfigError::new("check.xi_min", "need 0 < xi_min < xi_max").into());
    }
    let m = cfg.nfunction()?;
    let d = m.dim();
    let mut rng = ctx.rng();
    let invariants = m.check_invariants(&mut rng, check.invariant_samples);
    let samples = random_triples(&m, check.samples, check.xi_min, check.xi_max, &mut rng);
    let suite = duality_suite(&m, &cfg.conjugate_settings(), &samples, cfg.duality_tolerances())?;
    let tol = suite.tolerances;

    write_csv(
        ctx.out,
        "fenchel_young.csv",
        &header(&[
            &names(&["sample"]),
            &indexed("x", d),
            &indexed("xi", d),
            &indexed("eta", d),
            &names(&["lhs", "rhs", "margin"]),
        ]),
        suite.fenchel_young.entries.iter().enumerate().map(|(k, e)| {
            let mut row = vec![k.to_string()];
            for part in [&e.x, &e.xi, &e.eta] {
                row.extend(nums(part));
            }
            row.extend(nums(&[e.lhs, e.rhs, e.margin]));
            row
        }),
    )?;
    write_csv(
        ctx.out,
        "biconjugation.csv",
        &header(&[
            &names(&["sample"]),
            &indexed("x", d),
            &indexed("xi", d),
            &names(&["m", "m_biconjugate", "deviation"]),
        ]),
        suite
            .biconjugation
            .entries
            .iter()
            .enumerate()
            .map(|(k, (x, xi, v, vv, dev))| {
                let mut row = vec![k.to_string()];
                row.extend(nums(x));
                row.extend(nums(xi));
                row.extend(nums(&[*v, *vv, *dev]));
                row
            }),
    )?;
    let closed = suite.closed_form_deviation.map(num).unwrap_or_default();
    write_csv(
        ctx.out,
        "nfunction_summary.csv",
        &names(&["check", "samples", "value", "tolerance", "passed"]),
        [
            vec![
                "invariants".into(),
                invariants.samples.to_string(),
                invariants.violations.len().to_string(),
                "0".into(),
                invariants.passed().to_string(),
            ],
            vec![
                "fenchel_young_min_margin".into(),
                samples.len().to_string(),
                num(suite.fenchel_young.min_margin()),
                num(-tol.fenchel_young),
                suite.fenchel_young.passed().to_string(),
            ],
            vec![
                "biconjugation_max_deviation".into(),
                samples.len().to_string(),
                num(suite.biconjugation.max_deviation()),
                num(tol.biconjugation),
                suite.biconjugation.passed().to_string(),
            ],
            vec![
                "closed_form_max_deviation".into(),
                samples.len().to_string(),
                closed,
                num(tol.closed_form),
                suite.closed_form_passed().to_string(),
            ],
        ],
    )?;

    let e = CliError::Report;
    writeln!(w, "check-nfunction: {} (d = {d}), seed {}", m.tag(), ctx.seed).map_err(e)?;
    let cf = suite.closed_form_deviation.map_or_else(|| "n/a".to_string(), sci);
    table(
        w,
        &["check", "samples", "value", "tolerance", "result"],
        &[
            vec![
                "N-function invariants".into(),
                invariants.samples.to_string(),
                format!("{} violations", invariants.violations.len()),
                "0".into(),
                verdict(invariants.passed()).into(),
            ],
            vec![
                "Fenchel–Young min margin".into(),
                samples.len().to_string(),
                sci(suite.fenchel_young.min_margin()),
                sci(-tol.fenchel_young),
                verdict(suite.fenchel_young.passed()).into(),
            ],
            vec![
                "biconjugation max deviation".into(),
                samples.len().to_string(),
                sci(suite.biconjugation.max_deviation()),
                sci(tol.biconjugation),
                verdict(suite.biconjugation.passed()).into(),
            ],
            vec![
                "closed form vs search".into(),
                samples.len().to_string(),
                cf,
                sci(tol.closed_form),
                verdict(suite.closed_form_passed()).into(),
            ],
        ],
    )
    .map_err(e)?;
    for v in &invariants.violations {
        writeln!(w, "  invariant violation: {v}").map_err(e)?;
    }
    Ok(status(invariants.passed() && suite.passed()))
}

pub fn check_balance(ctx: &Context<'_>, w: &mut dyn Write) -> Outcome {
    let cfg = ctx.config;
    let m = cfg.nfunction()?;
    let d = m.dim();
    let probe = cfg.balance_probe()?;
    let mut rng = ctx.rng();
    let schedule = &cfg.balance.schedule;
    let (smallest, reports): (Option<f64>, Vec<BalanceReport>) = if schedule.is_empty() {
        let r = run_balance(&m, &probe, &mut rng)?;
        (r.passed().then_some(r.c_m), vec![r])
    } else {
        smallest_passing_constant(&m, &probe, schedule, &mut rng)?
    };
    let passed = smallest.is_some();

    write_csv(
        ctx.out,
        "balance_summary.csv",
        &names(&[
            "c_m",
            "balls_tested",
            "points_tested",
            "xi_tested",
            "empty_balls",
            "violations",
            "max_violation",
            "passed",
        ]),
        reports.iter().map(|r| {
            vec![
                num(r.c_m),
                r.balls_tested.to_string(),
                r.points_tested.to_string(),
                r.xi_tested.to_string(),
                r.empty_balls.to_string(),
                r.violations.to_string(),
                num(r.witnesses.first().map_or(0.0, |w| w.violation)),
                r.passed().to_string(),
            ]
        }),
    )?;
    write_csv(
        ctx.out,
        "witnesses.csv",
        &header(&[
            &names(&["c_m"]),
            &indexed("center", d),
            &names(&["radius"]),
            &indexed("x", d),
            &indexed("xi", d),
            &indexed("y", d),
            &names(&["sup_value", "bound", "violation"]),
        ]),
        reports.iter().flat_map(|r| {
            r.witnesses.iter().map(move |wt| {
                let mut row = vec![num(r.c_m)];
                row.extend(nums(&wt.center));
                row.push(num(wt.radius));
                row.extend(nums(&wt.x));
                row.extend(nums(&wt.xi));
                row.extend(nums(&wt.y));
                row.extend(nums(&[wt.sup_value, wt.bound, wt.violation]));
                row
            })
        }),
    )?;

    let e = CliError::Report;
    writeln!(w, "check-balance: {} (d = {d}), seed {}", m.tag(), ctx.seed).map_err(e)?;
    let pre = match reports[0].prescreen {
        Some(true) => "q/p <= 1 + alpha/d holds",
        Some(false) => "q/p <= 1 + alpha/d fails",
        None => "not applicable",
    };
    writeln!(w, "  analytic pre-screen: {pre}").map_err(e)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                num(r.c_m),
                r.balls_tested.to_string(),
                r.points_tested.to_string(),
                r.xi_tested.to_string(),
                r.violations.to_string(),
                verdict(r.passed()).into(),
            ]
        })
        .collect();
    table(w, &["C_M", "balls", "points", "xi", "violations", "result"], &rows).map_err(e)?;
    if let Some(wt) = reports.iter().flat_map(|r| r.witnesses.first()).next() {
        writeln!(
            w,
            "  worst witness: ball center {:?} radius {}, sup M(y, xi) = {} > M(x, C xi) = {}",
            wt.center,
            num(wt.radius),
            sci(wt.sup_value),
            sci(wt.bound)
        )
        .map_err(e)?;
    }
    match smallest {
        Some(c) => writeln!(w, "  no counterexample found at C_M = {}", num(c)),
        None => writeln!(w, "  balance condition violated at every tested C_M"),
    }
    .map_err(e)?;
    Ok(status(passed))
}

pub fn validate_problem(ctx: &Context<'_>, w: &mut dyn Write) -> Outcome {
    let cfg = ctx.config;
    let mut rng = ctx.rng();
    let data = cfg.problem(&mut rng)?;
    let report = validate_structure(&data, &cfg.fit_settings(), &mut rng)?;
    let grad = gradient_consistency(&data.a, cfg.check.gradient_samples, &mut rng);
    let grad_ok = grad <= cfg.check.gradient_tol;
    let k = data.a.constants();

    let mut rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                c.samples.to_string(),
                num(c.worst_margin),
                c.passed().to_string(),
                c.witness.clone().unwrap_or_default(),
            ]
        })
        .collect();
    rows.push(vec![
        "gradient consistency".into(),
        cfg.check.gradient_samples.to_string(),
        num(cfg.check.gradient_tol - grad),
        grad_ok.to_string(),
        String::new(),
    ]);
    write_csv(
        ctx.out,
        "structure.csv",
        &names(&["check", "samples", "worst_margin", "passed", "witness"]),
        rows.clone(),
    )?;
    summary_csv(
        ctx.out,
        "constants.csv",
        &[
            ("c1", num(k.c1)),
            ("c2", num(k.c2)),
            ("c3", num(k.c3)),
            ("c4", num(k.c4)),
            ("h1", num(k.h1)),
            ("h2", num(k.h2)),
        ],
    )?;

    let e = CliError::Report;
    writeln!(
        w,
        "validate-problem: {} (d = {}), seed {}",
        data.nfunction().tag(),
        data.dim(),
        ctx.seed
    )
    .map_err(e)?;
    writeln!(
        w,
        "  constants: c1 = {}, c2 = {}, c3 = {}, c4 = {}, h1 = {}, h2 = {}",
        num(k.c1),
        num(k.c2),
        num(k.c3),
        num(k.c4),
        num(k.h1),
        num(k.h2)
    )
    .map_err(e)?;
    let shown: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r[0].clone(),
                r[1].clone(),
                sci(r[2].parse().unwrap_or(f64::NAN)),
                verdict(r[3] == "true").into(),
                r[4].clone(),
            ]
        })
        .collect();
    table(
        w,
        &["assumption", "samples", "worst margin", "result", "witness"],
        &shown,
    )
    .map_err(e)?;
    writeln!(w, "  gradient consistency: worst relative error {}", sci(grad)).map_err(e)?;
    Ok(status(report.passed() && grad_ok))
}

fn history_csv(out: &Path, history: &[f64]) -> Result<(), CliError> {
    write_csv(
        out,
        "history.csv",
        &names(&["iteration", "residual_inf"]),
        history.iter().enumerate().map(|(k, r)| vec![k.to_string(), num(*r)]),
    )?;
    Ok(())
}

pub fn solve(ctx: &Context<'_>, w: &mut dyn Write) -> Outcome {
    let cfg = ctx.config;
    let mut rng = ctx.rng();
    let data = cfg.problem(&mut rng)?;
    let res = cfg.resolution()?;
    let basis = BasisSet::new(build_mesh(cfg.domain()?, res)?);
    let sys = GalerkinSystem::new(&basis, &data, cfg.solver_settings(ctx.seed)?)?;
    let e = CliError::Report;
    writeln!(
        w,
        "solve: {} (d = {}), resolution {res}, {} unknowns",
        data.nfunction().tag(),
        data.dim(),
        basis.len()
    )
    .map_err(e)?;
    write_mesh(ctx.out, basis.mesh())?;
    let sol = match sys.solve() {
        Ok(sol) => sol,
        Err(Error::NotConverged {
            residual,
            iterations,
            history,
            ..
        }) => {
            history_csv(ctx.out, &history)?;
            writeln!(
                w,
                "  solver did not converge: |s|_inf = {} after {iterations} iterations",
                sci(residual)
            )
            .map_err(e)?;
            return Ok(ExitStatus::NotConverged);
        }
        Err(err) => return Err(err.into()),
    };
    history_csv(ctx.out, &sol.history)?;
    let conj = cfg.conjugate_settings();
    let energy = energy_diagnostics(&sys, &sol, conj)?;
    let dual = dual_bound_check(&sys, &sol, conj)?;
    let phi = phi_lemma_check(&sys, &sol)?;
    let c1 = data.a.constants().c1;
    let sign_ok = energy.energy_b >= -1e-14;

    let mesh = basis.mesh();
    let d = mesh.dim();
    write_csv(
        ctx.out,
        "solution.csv",
        &header(&[&names(&["vertex"]), &indexed("x", d), &names(&["u"])]),
        (0..mesh.vertex_count()).map(|v| {
            let mut row = vec![v.to_string()];
            row.extend(nums(mesh.vertex(v)));
            row.push(num(basis.dof_of(v).map_or(0.0, |k| sol.alpha[k])));
            row
        }),
    )?;
    let (u, grad) = basis.interpolate(&sol.alpha)?;
    write_fields(ctx.out, "field.csv", &[("u", &u), ("grad_u", &grad)])?;
    let rows = lemma_rows(&energy, c1, &dual, &phi, sign_ok);
    write_csv(
        ctx.out,
        "diagnostics.csv",
        &names(&["lemma", "value", "bound", "passed"]),
        rows.iter()
            .map(|r| vec![r.0.to_string(), num(r.1), num(r.2), r.3.to_string()]),
    )?;

    writeln!(
        w,
        "  converged: |s|_inf = {} after {} iterations{}",
        sci(sol.residual_inf),
        sol.iterations,
        if sol.used_fallback { " (fallback used)" } else { "" }
    )
    .map_err(e)?;
    let shown: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.0.to_string(), sci(r.1), sci(r.2), verdict(r.3).into()])
        .collect();
    table(w, &["lemma", "value", "bound", "result"], &shown).map_err(e)?;
    let ok = rows.iter().all(|r| r.3);
    Ok(status(ok))
}

type LemmaRow = (&'static str, f64, f64, bool);

fn lemma_rows(
    energy: &musielak_core::galerkin::EnergyReport,
    c1: f64,
    dual: &musielak_core::galerkin::DualBoundReport,
    phi: &musielak_core::galerkin::PhiLemmaReport,
    sign_ok: bool,
) -> Vec<LemmaRow> {
    let tol = 1e-9;
    vec![
        (
            "energy: int A.grad u <= 2R",
            energy.energy_a,
            energy.bound_a(),
            energy.energy_a <= energy.bound_a() * (1.0 + tol) + 1e-14,
        ),
        (
            "energy: int b(u) u <= R",
            energy.energy_b,
            energy.bound_b(),
            energy.energy_b <= energy.bound_b() * (1.0 + tol) + 1e-14,
        ),
        (
            "energy: |grad u|_M <= (4R+1)/c1",
            energy.norm_lm,
            energy.bound_norm(c1),
            energy.norm_lm <= energy.bound_norm(c1) * (1.0 + tol),
        ),
        ("sign: int b(u) u >= 0", energy.energy_b, 0.0, sign_ok),
        (
            "Phi: |int Phi(u).grad u| <= tol",
            phi.integral.abs(),
            phi.tolerance,
            phi.passed(),
        ),
        ("dual: |A(grad u)|_M* <= C", dual.norm, dual.bound, dual.passed()),
    ]
}

pub fn converge(ctx: &Context<'_>, w: &mut dyn Write) -> Outcome {
    let cfg = ctx.config;
    let mut rng = ctx.rng();
    let data = cfg.problem(&mut rng)?;
    let settings = cfg.study_settings(ctx.seed)?;
    let exact = cfg.exact_solution()?;
    if cfg.study.expected_slope.is_some() && exact.is_none() {
        return Err(ConfigError::new("study.expected_slope", "needs source.exact").into());
    }
    let exact_fn = exact.as_ref().map(|e| move |x: &[f64]| e.value(x));
    let report = convergence_study(&data, &settings, exact_fn.as_ref().map(|f| f as &dyn Fn(&[f64]) -> f64))?;
    let modes = report.levels[0].weak_form.len();

    let mut head = names(&[
        "level",
        "n",
        "h",
        "newton_iters",
        "residual_inf",
        "energy_A",
        "norm_LM",
        "energy_b",
        "dual_bound_margin",
        "modular_dist_prev",
    ]);
    head.extend((1..=modes).map(|k| format!("weakform_residual_mode_{k}")));
    head.extend(names(&[
        "l2_error",
        "used_fallback",
        "energy_bound",
        "dual_norm",
        "dual_bound",
        "phi_integral",
        "lemmas_passed",
    ]));
    write_csv(
        ctx.out,
        "convergence.csv",
        &head,
        report.levels.iter().enumerate().map(|(i, l)| {
            let mut row = vec![
                i.to_string(),
                l.n.to_string(),
                num(l.h),
                l.iterations.to_string(),
                num(l.residual_inf),
                num(l.energy.energy_a),
                num(l.energy.norm_lm),
                num(l.energy.energy_b),
                num(l.dual.margin()),
                l.modular_dist_prev.first().map(|v| num(*v)).unwrap_or_default(),
            ];
            row.extend(nums(&l.weak_form));
            row.push(l.l2_error.map(num).unwrap_or_default());
            row.push(l.used_fallback.to_string());
            row.extend(nums(&[l.energy.bound, l.dual.norm, l.dual.bound, l.phi.integral]));
            row.push(l.passed().to_string());
            row
        }),
    )?;
    write_csv(
        ctx.out,
        "modular_distances.csv",
        &names(&["level", "lambda", "distance"]),
        report.levels.iter().enumerate().skip(1).flat_map(|(i, l)| {
            report
                .lambdas
                .iter()
                .zip(&l.modular_dist_prev)
                .map(move |(lam, dist)| vec![i.to_string(), num(*lam), num(*dist)])
        }),
    )?;
    write_csv(
        ctx.out,
        "truncation.csv",
        &names(&["k", "modular_distance"]),
        report.truncation.iter().map(|(k, v)| vec![num(*k), num(*v)]),
    )?;

    let monotone = report.smallest_monotone_lambda();
    let weak = report.weak_form_decreases();
    let lemmas = report.lemmas_hold();
    let trunc = report.truncation_vanishes();
    let slope_ok = match (cfg.study.expected_slope, report.l2_slope) {
        (Some(expect), Some(s)) => (s - expect).abs() <= cfg.study.slope_tolerance.unwrap_or(0.2),
        _ => true,
    };
    summary_csv(
        ctx.out,
        "summary.csv",
        &[
            ("l2_slope", report.l2_slope.map(num).unwrap_or_default()),
            ("smallest_monotone_lambda", monotone.map(num).unwrap_or_default()),
            ("weak_form_decreases", weak.to_string()),
            ("truncation_vanishes", trunc.to_string()),
            ("lemmas_hold", lemmas.to_string()),
            ("slope_within_tolerance", slope_ok.to_string()),
        ],
    )?;

    let e = CliError::Report;
    writeln!(
        w,
        "converge: {} (d = {}), resolutions {:?}, seed {}",
        data.nfunction().tag(),
        data.dim(),
        settings.resolutions,
        ctx.seed
    )
    .map_err(e)?;
    let rows: Vec<Vec<String>> = report
        .levels
        .iter()
        .map(|l| {
            vec![
                l.resolution.to_string(),
                l.n.to_string(),
                l.iterations.to_string(),
                sci(l.residual_inf),
                l.modular_dist_prev
                    .first()
                    .map(|v| sci(*v))
                    .unwrap_or_else(|| "-".into()),
                sci(l.weak_form_norm()),
                l.l2_error.map(sci).unwrap_or_else(|| "-".into()),
                verdict(l.passed()).into(),
            ]
        })
        .collect();
    table(
        w,
        &[
            "resolution",
            "n",
            "iters",
            "|s|_inf",
            "modular dist",
            "weak-form",
            "L2 error",
            "lemmas",
        ],
        &rows,
    )
    .map_err(e)?;
    if let Some(s) = report.l2_slope {
        writeln!(w, "  fitted L2 slope: {s:.4}").map_err(e)?;
    }
    match monotone {
        Some(l) => writeln!(w, "  modular distances decrease for lambda = {}", num(l)),
        None => writeln!(w, "  modular distances do not decrease for any lambda"),
    }
    .map_err(e)?;
    writeln!(w, "  weak-form panel decreases: {}", verdict(weak)).map_err(e)?;
    writeln!(w, "  truncation distances vanish: {}", verdict(trunc)).map_err(e)?;
    Ok(status(monotone.is_some() && weak && lemmas && trunc && slope_ok))
}

pub fn unique_probe(ctx: &Context<'_>, w: &mut dyn Write) -> Outcome {
    let cfg = ctx.config;
    let spec = &cfg.uniqueness;
    let mut rng = ctx.rng();
    let data = cfg.problem(&mut rng)?;
    let res = spec.resolution.map_or_else(|| cfg.resolution(), Ok)?;
    let basis = BasisSet::new(build_mesh(cfg.domain()?, res)?);
    let base = cfg.solver_settings(ctx.seed)?;
    let random: Vec<f64> = (0..basis.len())
        .map(|_| spec.start_scale * rng.gen_range(-1.0..=1.0))
        .collect();
    let sys1 = GalerkinSystem::new(
        &basis,
        &data,
        SolverSettings {
            start: Start::Zero,
            ..base.clone()
        },
    )?;
    let sys2 = GalerkinSystem::new(
        &basis,
        &data,
        SolverSettings {
            start: Start::Given(random),
            ..base
        },
    )?;
    let e = CliError::Report;
    writeln!(
        w,
        "unique-probe: {} (d = {}), resolution {res}, seed {}",
        data.nfunction().tag(),
        data.dim(),
        ctx.seed
    )
    .map_err(e)?;
    let solve = |sys: &GalerkinSystem<'_>| -> Result<Option<GalerkinSolution>, CliError> {
        match sys.solve() {
            Ok(s) => Ok(Some(s)),
            Err(Error::NotConverged { .. }) => Ok(None),
            Err(err) => Err(err.into()),
        }
    };
    let (Some(s1), Some(s2)) = (solve(&sys1)?, solve(&sys2)?) else {
        writeln!(w, "  a solve did not converge").map_err(e)?;
        return Ok(ExitStatus::NotConverged);
    };
    let report = uniqueness_probe(&sys1, &s1, &s2, &spec.deltas, spec.tolerance)?;
    let j1_ok = report.j1_nonnegative(spec.j1_tolerance);
    let sup_ok = report.sup_distance <= spec.tolerance;
    write_csv(
        ctx.out,
        "uniqueness.csv",
        &names(&["delta", "j1", "j2", "j3", "j2_bound"]),
        report
            .levels
            .iter()
            .map(|l| nums(&[l.delta, l.j1, l.j2, l.j3, l.j2_bound])),
    )?;
    summary_csv(
        ctx.out,
        "uniqueness_summary.csv",
        &[
            ("l1_distance", num(report.l1_distance)),
            ("sup_distance", num(report.sup_distance)),
            ("j1_nonnegative", j1_ok.to_string()),
            ("j2_within_bound", report.j2_within_bound().to_string()),
            ("j2_decreases", report.j2_decreases().to_string()),
            ("solutions_agree", (report.solutions_agree() && sup_ok).to_string()),
        ],
    )?;
    let rows: Vec<Vec<String>> = report
        .levels
        .iter()
        .map(|l| vec![num(l.delta), sci(l.j1), sci(l.j2), sci(l.j3), sci(l.j2_bound)])
        .collect();
    table(w, &["delta", "J1", "J2", "J3", "L_Phi int|grad w|"], &rows).map_err(e)?;
    writeln!(
        w,
        "  distance between solutions: sup {}, L1 {}",
        sci(report.sup_distance),
        sci(report.l1_distance)
    )
    .map_err(e)?;
    writeln!(
        w,
        "  J1 >= -{}: {}; |J2| <= L_Phi int|grad w|: {}; J2 decreases: {}; solutions agree: {}",
        sci(spec.j1_tolerance),
        verdict(j1_ok),
        verdict(report.j2_within_bound()),
        verdict(report.j2_decreases()),
        verdict(report.solutions_agree() && sup_ok)
    )
    .map_err(e)?;
    let ok = j1_ok && report.j2_within_bound() && report.j2_decreases() && report.solutions_agree() && sup_ok;
    Ok(status(ok))
}
