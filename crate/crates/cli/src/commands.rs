//! Execution of a resolved [`RunConfig`].

use std::fmt::Write as _;
use std::path::Path;

use compgeo_core::riccati::Direction;
use compgeo_core::stochastic::write_outcomes_csv;
use compgeo_core::warping::RadialWarping;
use compgeo_core::{
    check_criterion, evaluate_scenario, integrate_profile, integrate_riccati, model_warping, simulate_radial_diffusion,
    solve_jacobi, survival_curve, tolerances, verify_hessian_comparison, verify_inequality,
    verify_profile_mean_curvature, verify_with_refinement, CmcParams, DiffusionConfig, Horizon, Matrix, Verdict,
};
use serde_json::{json, Value};

use crate::config::{BmParams, CmcRun, Command, JacobiParams, RiccatiParams, RunConfig, VerifyRun};
use crate::error::{CliError, CliResult};
use crate::suite;
use crate::svg::{emit_svg, Series};

/// What a command reports back to `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub text: String,
    pub json: Value,
}

impl Outcome {
    fn info(text: String, json: Value) -> Self {
        Self { pass: true, text, json }
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Write `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

fn write_csv_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::io(path))?;
    write_file(path, &buf)
}

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    match &cfg.command {
        Command::Jacobi(p) => jacobi(cfg, p),
        Command::Riccati(p) => riccati(cfg, p),
        Command::Bound { scenario } => {
            let r = evaluate_scenario(scenario)?;
            let rel = if r.strict { ">" } else { ">=" };
            let mut text = format!("{}\nsup |H| {rel} {}", r.bound, r.bound);
            if let Some(e) = &r.exact {
                let _ = write!(text, " (exact {e})");
            }
            if r.construction_dependent {
                text.push_str("\nvalue depends on the barrier construction");
            }
            for n in &r.notes {
                let _ = write!(text, "\nnote: {n}");
            }
            Ok(Outcome::info(text, serde_json::to_value(&r).expect("report serializes")))
        }
        Command::Criterion { profile, tail } => {
            let v = check_criterion(profile, *tail)?;
            let text = format!(
                "G(0) > 0: {}\nnondecreasing: {}\nintegral of G^(-1/2): {:?}\nverdict: {:?}",
                v.g0_positive, v.nondecreasing, v.integral_divergent, v.overall
            );
            Ok(Outcome::info(text, serde_json::to_value(&v).expect("verdict serializes")))
        }
        Command::Bm(p) => bm(cfg, p),
        Command::Cmc(p) => cmc(cfg, p),
        Command::Verify(p) => verify(cfg, p),
        Command::Suite => {
            let out = cfg.output.out.clone().unwrap_or_else(|| "suite-out".into());
            suite::run_suite(cfg.resolved_seed()?, &out)
        }
    }
}

fn jacobi(cfg: &RunConfig, p: &JacobiParams) -> CliResult<Outcome> {
    let w = solve_jacobi(&p.profile, p.t0, p.h0, p.dh0, Horizon::new(p.lo, p.hi))?;
    let pos = w.positivity();
    let residual = w.max_residual(p.samples.max(1));
    if let Some(path) = &cfg.output.out {
        write_csv_with(path, |b| w.write_csv(b, p.samples.max(1)))?;
    }
    if let Some(path) = &cfg.output.svg {
        let (lo, hi) = (pos.lower, pos.upper);
        let n = p.samples.max(1);
        let pts = (0..=n)
            .map(|j| lo + (hi - lo) * j as f64 / n as f64)
            .filter_map(|t| w.h(t).ok().map(|h| (t, h)))
            .collect();
        emit_svg(&[Series::new("h", pts)], "t", "h", path)?;
    }
    let focal = pos.focal_radius();
    let mut text = format!("positivity interval: ({}, {})\n", pos.lower, pos.upper);
    match focal {
        Some(d) => {
            let _ = writeln!(text, "focal radius: {d}");
        }
        None => text.push_str("no zero of h within the horizon\n"),
    }
    let _ = write!(text, "max residual: {residual:e}");
    let json = json!({ "positivity": pos, "focal_radius": focal, "max_residual": residual });
    Ok(Outcome::info(text, json))
}

fn riccati(cfg: &RunConfig, p: &RiccatiParams) -> CliResult<Outcome> {
    let a0 = Matrix::scaled_identity(p.path.dimension, p.a0);
    let state = integrate_riccati(&p.path, &a0, Horizon::new(p.t0, p.t1))?;
    let model = model_warping(&state, p.direction)?;
    let tol = cfg.tolerances.compare.unwrap_or(tolerances::COMPARE);
    let report = verify_hessian_comparison(&state, p.direction, &model, tol);
    let rows: Vec<[f64; 4]> = state
        .knot_times()
        .filter_map(|t| {
            let ev = state.at(t).ok()?.sym_eigenvalues();
            Some([t, ev[0], ev[ev.len() - 1], model.log_derivative(t).unwrap_or(f64::NAN)])
        })
        .collect();
    if let Some(path) = &cfg.output.out {
        let mut s = String::from("t,lambda_min,lambda_max,model_ratio\n");
        for r in &rows {
            let _ = writeln!(s, "{},{},{},{}", r[0], r[1], r[2], r[3]);
        }
        write_file(path, s.as_bytes())?;
    }
    if let Some(path) = &cfg.output.svg {
        let col = |k: usize| rows.iter().map(|r| (r[0], r[k])).collect();
        let series = [Series::new("lambda_min", col(1)), Series::new("lambda_max", col(2)), Series::new("h'/h", col(3))];
        emit_svg(&series, "t", "eigenvalue", path)?;
    }
    let side = match p.direction {
        Direction::Lower => "lambda_min(A) - h'/h",
        Direction::Upper => "h'/h - lambda_max(A)",
    };
    let mut text = format!("{:?}: {side} >= {:e} at t = {}", report.verdict, report.margin_min, report.t_argmin);
    if let Some(b) = report.blowup_time {
        let _ = write!(text, "\nblow-up at t = {b}");
    }
    for n in &report.notes {
        let _ = write!(text, "\nnote: {n}");
    }
    let pass = report.verdict == Verdict::Pass;
    Ok(Outcome { pass, text, json: serde_json::to_value(&report).expect("report serializes") })
}

fn bm(cfg: &RunConfig, p: &BmParams) -> CliResult<Outcome> {
    if p.n < 2 {
        return Err(CliError::Usage(format!("n = {} must be at least 2", p.n)));
    }
    let mut dc = DiffusionConfig::new(p.n - 1, p.r0, p.horizon, p.dt, p.paths, cfg.resolved_seed()?);
    dc.explosion_radius = p.explosion_radius;
    let sim = if p.numeric {
        let lo = if p.model.positivity().lower_is_zero { 0.0 } else { -p.explosion_radius };
        let w = p.model.solve(Horizon::new(lo, p.explosion_radius))?;
        simulate_radial_diffusion(&w as &dyn RadialWarping, &dc)?
    } else {
        simulate_radial_diffusion(&p.model, &dc)?
    };
    if let Some(path) = &cfg.output.out {
        write_csv_with(path, |b| write_outcomes_csv(&sim, b))?;
    }
    if let Some(path) = &cfg.output.svg {
        let times: Vec<f64> = (0..=100).map(|j| p.horizon * j as f64 / 100.0).collect();
        let pts = survival_curve(&sim, &times).into_iter().map(|s| (s.t, s.survival)).collect();
        emit_svg(&[Series::new("survival", pts)], "t", "P(no explosion)", path)?;
    }
    let s = &sim.stats;
    let mut text = format!(
        "paths: {}\nexploded: {}\nsurvival: {} ± {}",
        s.paths, s.exploded, s.survival_probability, s.standard_error
    );
    if let Some(m) = s.mean_exit_time_of_exploded {
        let _ = write!(text, "\nmean explosion time: {m}");
    }
    Ok(Outcome::info(text, serde_json::to_value(s).expect("stats serialize")))
}

fn cmc(cfg: &RunConfig, run: &CmcRun) -> CliResult<Outcome> {
    let p = CmcParams::new(run.n, run.h)?;
    let curve = integrate_profile(&p, run.rmax, run.spacing)?;
    let flux_tol = cfg.tolerances.flux.unwrap_or(tolerances::FLUX);
    let mc_tol = cfg.tolerances.cmc_mean_curvature.unwrap_or(tolerances::CMC_MEAN_CURVATURE);
    let drift = curve.flux_drift();
    let mc = verify_profile_mean_curvature(&curve.samples, &p, mc_tol)?;
    let pass = drift <= flux_tol && mc.pass;
    let out = cfg.output.out.clone().unwrap_or_else(|| format!("cmc_n{}_H{}.csv", run.n, run.h).into());
    write_csv_with(&out, |b| curve.write_csv(b))?;
    if let Some(path) = &cfg.output.svg {
        let mut pts: Vec<(f64, f64)> = curve.samples.iter().map(|s| (s.r, s.u)).collect();
        pts.extend(curve.mirrored.iter().map(|s| (s.r, s.u)));
        emit_svg(&[Series::new(format!("n={} H={}", run.n, run.h), pts)], "r", "u", path)?;
    }
    let mut text = match curve.critical_radius {
        Some(r0) => format!("r0 = {r0}\n"),
        None => "r0: none (profile is an entire graph)\n".to_string(),
    };
    let _ = write!(
        text,
        "regime: {:?}\nflux drift: {drift:e} ({})\nmean curvature deviation: {:e} ({})\nprofile: {}",
        curve.regime,
        verdict_word(drift <= flux_tol),
        mc.max_deviation,
        verdict_word(mc.pass),
        out.display()
    );
    let json = json!({
        "critical_radius": curve.critical_radius,
        "regime": curve.regime,
        "max_height": curve.max_height,
        "flux_drift": drift,
        "flux_tolerance": flux_tol,
        "mean_curvature": mc,
        "pass": pass,
    });
    Ok(Outcome { pass, text, json })
}

fn verify(cfg: &RunConfig, run: &VerifyRun) -> CliResult<Outcome> {
    let mut report = if run.refine.is_empty() {
        verify_inequality(&run.config)?
    } else {
        let grids: Vec<usize> = std::iter::once(run.config.grid).chain(run.refine.iter().copied()).collect();
        verify_with_refinement(&run.config, &grids)?
    };
    if let Some(f) = cfg.tolerances.inequality_grid_factor {
        report.tolerance = f * report.h_grid;
        report.pass = report.margin_min >= -report.tolerance;
    }
    if let Some(path) = &cfg.output.out {
        write_csv_with(path, |b| report.write_csv(b))?;
    }
    let improving = report.convergence.as_ref().is_none_or(|c| c.improving);
    let pass = report.pass && improving;
    let c = &report.config;
    let mut text = format!(
        "{} {} {:?}, grid {}: margin_min = {:e} (tolerance {:e}) {}",
        c.chart,
        c.patch.name(),
        c.form,
        c.grid,
        report.margin_min,
        report.tolerance,
        verdict_word(report.pass)
    );
    if let Some(conv) = &report.convergence {
        for (g, m) in conv.grids.iter().zip(&conv.margin_min) {
            let _ = write!(text, "\n  grid {g}: margin_min = {m:e}");
        }
        let _ = write!(text, "\n  improving: {}", conv.improving);
    }
    Ok(Outcome { pass, text, json: serde_json::to_value(&report).expect("report serializes") })
}
