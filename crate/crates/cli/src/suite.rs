//! The acceptance battery. Each criterion returns its verdict, a few
//! metrics and the files it wants written; `run_suite` writes them under
//! one directory. File contents never include timings, so two runs with
//! the same seed are byte-identical.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use compgeo_core::estimates::{Ambient, Estimate, Initial, Scenario, Tube};
use compgeo_core::{
    build_cmc_sphere, check_criterion, critical_radius, evaluate_scenario, integrate_profile, integrate_riccati,
    model_warping, simulate_radial_diffusion, solve_jacobi, sturm_compare, survival_curve, tolerances,
    verify_forward_inequality, verify_hessian_comparison, verify_inequality, verify_profile_mean_curvature,
    verify_with_refinement, BoundSide, ChartId, CmcParams, Completeness, CurvatureOperatorPath, CurvatureProfile,
    DiffusionConfig, Direction, ExactWarping, Form, Horizon, Matrix, PatchSpec, VerifyConfig,
};
use serde::Serialize;
use serde_json::json;

use crate::commands::{write_file, Outcome};
use crate::error::CliResult;
use crate::svg::{render_svg, Series};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionRun {
    pub result: CriterionResult,
    pub artifacts: Vec<Artifact>,
}

pub type CriterionFn = fn(u64) -> CliResult<CriterionRun>;

/// `(id, name, runner)` for every criterion computed in-process.
pub const CRITERIA: [(u8, &str, CriterionFn); 7] = [
    (1, "jacobi closed forms", jacobi_closed_forms),
    (2, "sturm ordering", sturm_ordering),
    (3, "riccati comparison", riccati_comparison),
    (4, "bound constants", bound_constants),
    (5, "cmc profiles", cmc_profiles),
    (6, "stochastic separation", stochastic_separation),
    (7, "inequality verification", inequality_verification),
];

struct Builder {
    id: u8,
    name: &'static str,
    failures: Vec<String>,
    metrics: BTreeMap<String, f64>,
    artifacts: Vec<Artifact>,
}

impl Builder {
    fn new(id: u8) -> Self {
        let name = CRITERIA[usize::from(id) - 1].1;
        Self { id, name, failures: Vec::new(), metrics: BTreeMap::new(), artifacts: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn file(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.artifacts.push(Artifact { name: name.to_string(), bytes: bytes.into() });
    }

    fn finish(self, ok_detail: String) -> CliResult<CriterionRun> {
        let pass = self.failures.is_empty();
        let detail = if pass { ok_detail } else { self.failures.join("; ") };
        Ok(CriterionRun {
            result: CriterionResult { id: self.id, name: self.name, pass, detail, metrics: self.metrics },
            artifacts: self.artifacts,
        })
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// `solve_jacobi` against sin, sinh, e^t, t and cosh on `[0, 5]` (sin up to
/// its zero at π), absolute error at 1e-8, and `d* = π` for `G = -1`.
pub fn jacobi_closed_forms(_seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(1);
    let models = [
        ("sin", ExactWarping::Sin),
        ("sinh", ExactWarping::Sinh),
        ("exp", ExactWarping::Exp),
        ("linear", ExactWarping::Linear),
        ("cosh", ExactWarping::Cosh),
    ];
    let mut csv = String::from("model,max_abs_error,max_rel_error\n");
    let mut worst = 0.0f64;
    for (name, m) in models {
        let w = m.solve(Horizon::new(0.0, 5.0))?;
        let hi = w.positivity().upper.min(5.0);
        let (mut abs, mut rel) = (0.0f64, 0.0f64);
        for j in 0..=1000 {
            let t = hi * j as f64 / 1000.0;
            let exact = m.h(t);
            let err = (w.h(t)? - exact).abs();
            abs = abs.max(err);
            rel = rel.max(err / exact.abs().max(1.0));
        }
        let _ = writeln!(csv, "{name},{abs:e},{rel:e}");
        b.metric(&format!("max_abs_error_{name}"), abs);
        b.check(abs <= 1e-8, || format!("{name}: max error {abs:e} > 1e-8"));
        worst = worst.max(abs);
    }
    let sine = solve_jacobi(&CurvatureProfile::constant(-1.0), 0.0, 0.0, 1.0, Horizon::new(0.0, 5.0))?;
    let d = sine.positivity().focal_radius();
    let d_err = d.map_or(f64::INFINITY, |d| (d - PI).abs());
    b.metric("focal_radius_error", d_err);
    b.check(d_err <= 1e-8, || format!("d* = {d:?}, error {d_err:e}"));
    b.file("c1_jacobi_errors.csv", csv);
    let mut sinh_csv = Vec::new();
    ExactWarping::Sinh.solve(Horizon::new(0.0, 5.0))?.write_csv(&mut sinh_csv, 100).expect("vec write");
    b.file("c1_jacobi_sinh.csv", sinh_csv);
    b.finish(format!("max error {worst:.2e}, |d* - pi| = {d_err:.2e}"))
}

/// 50 seeded ordered pairs `G1 <= G2`, common start; Sturm margin >= -1e-7.
pub fn sturm_ordering(seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(2);
    let mut csv = String::from("seed,h0,dh0,margin_min,t_argmin,verdict\n");
    let mut worst = f64::INFINITY;
    for k in 0..50u64 {
        let s = seed.wrapping_add(k);
        let (g1, g2) = CurvatureProfile::random_ordered_pair(s, 5.0, 11)?;
        let (h0, dh0) = if k % 2 == 0 { (0.0, 1.0) } else { (1.0, 0.3) };
        let w1 = solve_jacobi(&g1, 0.0, h0, dh0, Horizon::new(0.0, 5.0))?;
        let w2 = solve_jacobi(&g2, 0.0, h0, dh0, Horizon::new(0.0, 5.0))?;
        let r = sturm_compare(&w1, &w2, tolerances::STURM);
        let _ = writeln!(csv, "{s},{h0},{dh0},{:e},{},{:?}", r.margin_min, r.t_argmin, r.verdict);
        b.check(r.pass, || format!("seed {s}: {:?} margin {:e}", r.verdict, r.margin_min));
        worst = worst.min(r.margin_min);
    }
    b.metric("worst_margin", worst);
    b.file("c2_sturm.csv", csv);
    b.finish(format!("50 pairs, worst margin {worst:.2e}"))
}

/// 100 seeded saturating paths per direction in dimensions 2..=6, plus the
/// scalar closed forms `tanh t` and `k tanh(k t + artanh(1/k))`, `k = √(1+p)`.
pub fn riccati_comparison(seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(3);
    let mut csv = String::from("seed,direction,dim,margin_min,blowup_time,verdict\n");
    let mut worst = f64::INFINITY;
    for (dir, side) in [(Direction::Lower, BoundSide::Upper), (Direction::Upper, BoundSide::Lower)] {
        for k in 0..100u64 {
            let s = seed.wrapping_add(k);
            let dim = 2 + (k as usize % 5);
            let path = CurvatureOperatorPath::random_saturating(dim, CurvatureProfile::constant(1.0), side, s);
            let state = integrate_riccati(&path, &Matrix::identity(dim), Horizon::new(0.0, 3.0))?;
            let model = model_warping(&state, dir)?;
            let r = verify_hessian_comparison(&state, dir, &model, tolerances::COMPARE);
            let bt = r.blowup_time.map_or(String::new(), |t| t.to_string());
            let _ = writeln!(csv, "{s},{dir:?},{dim},{:e},{bt},{:?}", r.margin_min, r.verdict);
            b.check(r.pass, || format!("{dir:?} seed {s}: {:?} margin {:e}", r.verdict, r.margin_min));
            worst = worst.min(r.margin_min);
        }
    }
    b.metric("worst_margin", worst);

    let mut scalar_err = 0.0f64;
    let path = CurvatureOperatorPath::scalar(3, -1.0, CurvatureProfile::constant(1.0), BoundSide::Upper);
    let state = integrate_riccati(&path, &Matrix::zeros(3), Horizon::new(0.0, 4.0))?;
    for j in 0..=80 {
        let t = 4.0 * j as f64 / 80.0;
        let a = state.at(t)?;
        for i in 0..3 {
            scalar_err = scalar_err.max((a[(i, i)] - t.tanh()).abs());
        }
    }
    for p in [0.5f64, 1.0, 3.0] {
        let kk = (1.0 + p).sqrt();
        let path = CurvatureOperatorPath::scalar(2, -(1.0 + p), CurvatureProfile::constant(1.0), BoundSide::Upper);
        let state = integrate_riccati(&path, &Matrix::identity(2), Horizon::new(0.0, 4.0))?;
        for j in 0..=80 {
            let t = 4.0 * j as f64 / 80.0;
            let exact = kk * (kk * t + (1.0 / kk).atanh()).tanh();
            let a = state.at(t)?;
            for i in 0..2 {
                scalar_err = scalar_err.max((a[(i, i)] - exact).abs());
            }
        }
    }
    b.metric("scalar_closed_form_error", scalar_err);
    b.check(scalar_err <= 1e-7, || format!("scalar closed forms off by {scalar_err:e}"));
    b.file("c3_riccati.csv", csv);
    b.finish(format!("200 paths, worst margin {worst:.2e}, scalar error {scalar_err:.2e}"))
}

struct BoundCase {
    label: String,
    scenario: Scenario,
    exact: Option<&'static str>,
    value: f64,
    strict: bool,
}

fn bound_cases() -> Vec<BoundCase> {
    let none = |estimate, ambient, m| Scenario { estimate, ambient, m, tube: None, initial: None };
    let mut v = Vec::new();
    for (m, l, e) in [(2u32, 1u32, "1/2"), (3, 1, "2/3"), (4, 2, "1/2"), (5, 1, "4/5"), (6, 5, "1/6")] {
        v.push(BoundCase {
            label: format!("horocylinder m={m} l={l}"),
            scenario: none(Estimate::Horocylinder, Ambient::HyperbolicProduct { n: 2, l }, m),
            exact: Some(e),
            value: f64::from(m - l) / f64::from(m),
            strict: false,
        });
    }
    for (c, m, l, e, val) in [(1.0, 3u32, 1u32, "2/3", 2.0 / 3.0), (2.0, 4, 2, "1/1", 1.0), (0.5, 5, 2, "3/10", 0.3)] {
        v.push(BoundCase {
            label: format!("wedge c={c} m={m} l={l}"),
            scenario: none(Estimate::Wedge, Ambient::Wedge { c, aperture: 0.5, l, t0: None }, m),
            exact: Some(e),
            value: val,
            strict: false,
        });
    }
    for (m, kappa, e, val) in [(2u32, 0.0, "1/2", 0.5), (2, 0.25, "3/4", 0.75), (3, 0.5, "7/6", 7.0 / 6.0)] {
        v.push(BoundCase {
            label: format!("submersion m={m} kappa={kappa}"),
            scenario: Scenario {
                estimate: Estimate::Submersion,
                ambient: Ambient::Submersion { profile: CurvatureProfile::constant(1.0), kappa },
                m,
                tube: Some(Tube { lo: 0.0, hi: 5.0 }),
                initial: Some(Initial::LogDerivative(1.0)),
            },
            exact: Some(e),
            value: val,
            strict: false,
        });
    }
    for (m, l, kappa, e, val) in [(3u32, 1u32, 0.0, "2/3", 2.0 / 3.0), (4, 2, 0.5, "3/4", 0.75), (5, 2, 1.0, "1/1", 1.0)] {
        v.push(BoundCase {
            label: format!("hyperbolic submersion m={m} l={l} kappa={kappa}"),
            scenario: none(Estimate::HyperbolicSubmersion, Ambient::HyperbolicSubmersion { n: 3, l, kappa }, m),
            exact: Some(e),
            value: val,
            strict: false,
        });
    }
    for (m, d0) in [(2u32, Some(2.0)), (3, Some(1.0)), (3, None)] {
        let factor = f64::from(m - 1) / f64::from(m);
        v.push(BoundCase {
            label: format!("mean-convex side m={m} d0={d0:?}"),
            scenario: none(Estimate::MeanConvexSide, Ambient::SphereCylinder { n: m, d0 }, m),
            exact: None,
            value: d0.map_or(factor, |d| factor / d.tanh()),
            strict: true,
        });
    }
    v
}

/// Published constants of the bound calculators: exact rationals where the
/// inputs are rational, 1e-12 otherwise; strictness on the mean-convex side.
pub fn bound_constants(_seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(4);
    let cases = bound_cases();
    let mut worst = 0.0f64;
    let mut reports = Vec::new();
    for c in &cases {
        let r = evaluate_scenario(&c.scenario)?;
        let err = (r.bound - c.value).abs();
        worst = worst.max(err);
        match c.exact {
            Some(e) => b.check(r.exact.as_deref() == Some(e), || format!("{}: exact {:?} != {e}", c.label, r.exact)),
            None => b.check(err <= tolerances::BOUND, || format!("{}: {} vs {} ({err:e})", c.label, r.bound, c.value)),
        }
        b.check(r.strict == c.strict, || format!("{}: strict = {}", c.label, r.strict));
        reports.push(json!({ "case": c.label, "expected": c.value, "report": r }));
    }
    b.metric("max_abs_error", worst);
    b.file("c4_bounds.json", json_bytes(&reports));
    b.finish(format!("{} cases, max error {worst:.2e}", cases.len()))
}

/// CMC profiles: the `H = 1/2` closed form, `r0 = ln 3` for `H = 1`, flux
/// conservation and mean-curvature re-verification on every curve.
pub fn cmc_profiles(_seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(5);
    let half = integrate_profile(&CmcParams::new(2, 0.5)?, 5.0, 0.01)?;
    let closed_err =
        half.samples.iter().map(|s| (s.u - 2.0 * ((0.5 * s.r).cosh() - 1.0)).abs()).fold(0.0f64, f64::max);
    b.metric("closed_form_error", closed_err);
    b.check(closed_err <= 1e-6, || format!("H=1/2 profile off by {closed_err:e}"));

    let p1 = CmcParams::new(2, 1.0)?;
    let r0 = critical_radius(&p1).unwrap_or(f64::NAN);
    let r0_err = (r0 - 3f64.ln()).abs();
    b.metric("critical_radius_error", r0_err);
    b.check(r0_err <= 1e-8, || format!("r0 = {r0}, error {r0_err:e}"));

    let mut csv = String::from("n,H,regime,critical_radius,flux_drift,mean_curvature_deviation\n");
    let (mut worst_flux, mut worst_mc) = (0.0f64, 0.0f64);
    for (n, h) in [(2u32, 0.4), (2, 0.5), (2, 1.0), (2, 2.0), (3, 0.5), (3, 0.9), (3, 1.5), (4, 0.75), (4, 1.2)] {
        let p = CmcParams::new(n, h)?;
        let curve = integrate_profile(&p, 5.0, 0.01)?;
        let drift = curve.flux_drift();
        let mc = verify_profile_mean_curvature(&curve.samples, &p, tolerances::CMC_MEAN_CURVATURE)?;
        let r0 = curve.critical_radius.map_or(String::new(), |r| r.to_string());
        let _ = writeln!(csv, "{n},{h},{:?},{r0},{drift:e},{:e}", curve.regime, mc.max_deviation);
        b.check(drift <= tolerances::FLUX, || format!("n={n} H={h}: flux drift {drift:e}"));
        b.check(mc.max_deviation < tolerances::CMC_MEAN_CURVATURE, || {
            format!("n={n} H={h}: mean curvature deviation {:e}", mc.max_deviation)
        });
        worst_flux = worst_flux.max(drift);
        worst_mc = worst_mc.max(mc.max_deviation);
    }
    b.metric("worst_flux_drift", worst_flux);
    b.metric("worst_mean_curvature_deviation", worst_mc);

    let sphere = build_cmc_sphere(&p1, 0.01)?;
    let mut sphere_csv = Vec::new();
    sphere.write_csv(&mut sphere_csv).expect("vec write");
    let mut pts: Vec<(f64, f64)> = sphere.samples.iter().map(|s| (s.r, s.u)).collect();
    pts.extend(sphere.mirrored.iter().map(|s| (s.r, s.u)));
    let half_pts = half.samples.iter().map(|s| (s.r, s.u)).collect();
    let svg = render_svg(&[Series::new("n=2 H=1", pts), Series::new("n=2 H=1/2", half_pts)], "r", "u")?;
    b.file("c5_cmc_table.csv", csv);
    b.file("c5_cmc_sphere_n2_H1.csv", sphere_csv);
    b.file("c5_cmc_profiles.svg", svg);
    b.finish(format!("r0 error {r0_err:.2e}, flux drift {worst_flux:.2e}, mean curvature {worst_mc:.2e}"))
}

/// sinh versus exp(r^4) radial diffusion, n = 2, r0 = 1, T = 5, dt = 1e-3,
/// 10^4 paths; the criterion verdicts must agree with the simulations.
pub fn stochastic_separation(seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(6);
    let cfg = DiffusionConfig::new(1, 1.0, 5.0, 1e-3, 10_000, seed);
    let sinh = simulate_radial_diffusion(&ExactWarping::Sinh, &cfg)?;
    let quartic = simulate_radial_diffusion(&ExactWarping::ExpQuartic, &cfg)?;
    let survival = sinh.stats.survival_probability;
    let explosion = quartic.stats.exploded as f64 / quartic.stats.paths as f64;
    b.metric("sinh_survival", survival);
    b.metric("exp_quartic_explosion", explosion);
    b.check(survival >= 0.99, || format!("sinh survival {survival} < 0.99"));
    b.check(explosion >= 0.9, || format!("exp(r^4) explosion {explosion} < 0.9"));

    let v_sinh = check_criterion(&ExactWarping::Sinh.profile(), 100.0)?;
    let v_quartic = check_criterion(&ExactWarping::ExpQuartic.profile(), 100.0)?;
    b.check(v_sinh.overall == Completeness::Complete, || format!("sinh verdict {:?}", v_sinh.overall));
    b.check(v_quartic.overall == Completeness::IncompleteSuspected, || {
        format!("exp(r^4) verdict {:?}", v_quartic.overall)
    });

    let times: Vec<f64> = (0..=100).map(|j| 0.05 * j as f64).collect();
    let (cs, cq) = (survival_curve(&sinh, &times), survival_curve(&quartic, &times));
    let mut csv = String::from("t,sinh,exp_quartic\n");
    for (a, q) in cs.iter().zip(&cq) {
        let _ = writeln!(csv, "{},{},{}", a.t, a.survival, q.survival);
    }
    let svg = render_svg(
        &[
            Series::new("sinh", cs.iter().map(|s| (s.t, s.survival)).collect()),
            Series::new("exp(r^4)", cq.iter().map(|s| (s.t, s.survival)).collect()),
        ],
        "t",
        "P(no explosion)",
    )?;
    b.file("c6_survival.csv", csv);
    b.file("c6_survival.svg", svg);
    b.file(
        "c6_stochastic.json",
        json_bytes(&json!({
            "sinh": { "stats": sinh.stats, "criterion": v_sinh },
            "exp_quartic": { "stats": quartic.stats, "criterion": v_quartic },
        })),
    );
    b.finish(format!("sinh survival {survival}, exp(r^4) explosion {explosion}"))
}

/// Equality case on equidistant patches, the tilted reverse inequality
/// under refinement 128/256/512, and a negative control that must fail.
pub fn inequality_verification(_seed: u64) -> CliResult<CriterionRun> {
    let mut b = Builder::new(7);
    let mut summary = Vec::new();
    let mut worst_ratio = 0.0f64;
    for chart in [ChartId::WarpedExp, ChartId::WarpedCosh] {
        for level in [0.0, 0.25, 0.5] {
            let r = verify_forward_inequality(chart, PatchSpec::equidistant(level), 128)?;
            let bound = 10.0 * r.h_grid * r.h_grid;
            worst_ratio = worst_ratio.max(r.max_abs_laplacian / bound);
            b.check(r.max_abs_laplacian <= bound, || {
                format!("{chart} level {level}: |Δf| = {:e} > {bound:e}", r.max_abs_laplacian)
            });
            b.check(r.pass, || format!("{chart} level {level}: margin {:e}", r.margin_min));
            summary.push(json!({ "case": format!("equality {chart} level {level}"), "report": r }));
        }
    }
    b.metric("equality_worst_ratio_to_10h2", worst_ratio);

    let cfg = VerifyConfig::new(ChartId::H2xrHorocylinder, PatchSpec::tilted(1.0), Form::Reverse, 128);
    let tilted = verify_with_refinement(&cfg, &[128, 256, 512])?;
    let conv = tilted.convergence.clone().expect("refinement table");
    b.metric("tilted_margin_128", tilted.margin_min);
    b.check(tilted.margin_min >= -1e-2, || format!("tilted margin {:e} < -1e-2", tilted.margin_min));
    b.check(conv.improving, || format!("tilted margins not improving: {:?}", conv.margin_min));
    let mut tilted_csv = Vec::new();
    tilted.write_csv(&mut tilted_csv).expect("vec write");
    b.file("c7_tilted_reverse_128.csv", tilted_csv);
    summary.push(json!({ "case": "tilted reverse h2xr-horocylinder", "report": tilted }));

    let mut neg = VerifyConfig::new(ChartId::WarpedExp, PatchSpec::equidistant(0.0), Form::Forward, 128);
    neg.mean_curvature_scale = 0.5;
    let control = verify_inequality(&neg)?;
    b.metric("negative_control_margin", control.margin_min);
    b.check(!control.pass, || format!("negative control passed with margin {:e}", control.margin_min));
    summary.push(json!({ "case": "negative control", "report": control }));

    b.file("c7_verify.json", json_bytes(&summary));
    b.finish(format!(
        "equality ratio {worst_ratio:.2}, tilted margins {:?}, control margin {:.3}",
        conv.margin_min, control.margin_min
    ))
}

/// Run all criteria, write their files and `summary.json` under `out`.
/// Timings go to stdout only.
pub fn run_suite(seed: u64, out: &Path) -> CliResult<Outcome> {
    let mut results = Vec::new();
    let mut text = String::new();
    let mut timings = BTreeMap::new();
    for (id, name, f) in CRITERIA {
        let start = Instant::now();
        let run = f(seed)?;
        let secs = start.elapsed().as_secs_f64();
        for a in &run.artifacts {
            write_file(&out.join(&a.name), &a.bytes)?;
        }
        let word = if run.result.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(text, "{word} {id} {name}: {} ({secs:.2} s)", run.result.detail);
        timings.insert(id, secs);
        results.push(run.result);
    }
    let pass = results.iter().all(|r| r.pass);
    let summary = json!({ "seed": seed, "pass": pass, "criteria": results });
    write_file(&out.join("summary.json"), &json_bytes(&summary))?;
    let _ = write!(text, "{} ({})", if pass { "suite PASS" } else { "suite FAIL" }, out.display());
    let json = json!({ "seed": seed, "pass": pass, "criteria": results, "timings_s": timings, "out": out });
    Ok(Outcome { pass, text, json })
}
