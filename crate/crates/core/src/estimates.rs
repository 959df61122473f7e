//! Mean-curvature lower bounds for submanifolds confined to tubes, horoball
//! cylinders, mean-convex regions and wedges, computed from a [`Scenario`].

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{CurvatureProfile, ProfileKind};
use crate::tolerances;
use crate::warping::{inf_log_derivative, solve_jacobi, BarrierFunction, ExactWarping, Horizon, Truncation};

/// Initial data of the model warping function at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// `h(0) = 1`, `h'(0) = λ0`
    LogDerivative(f64),
    /// `h(0) = 0`, `h'(0) = 1`: the model has a pole at 0
    Pole,
}

impl Initial {
    fn values(self) -> (f64, f64) {
        match self {
            Initial::LogDerivative(l) => (1.0, l),
            Initial::Pole => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ambient {
    /// `R ×_h F` with `dim F = fiber_dim`; `H_d = h'/h`
    WarpedModel { profile: CurvatureProfile, fiber_dim: u32 },
    /// tube in a manifold of dimension `n` whose equidistants have sampled
    /// mean curvature `(d, H_d)`
    SampledTube { profile: CurvatureProfile, n: u32, mean_curvature: Vec<[f64; 2]> },
    /// `N × R^l` with `K_N` controlled by `G`
    ProductWithFlat { profile: CurvatureProfile, n: u32, l: u32 },
    /// Riemannian submersion whose vertical fibers have geodesic curvature
    /// `kappa`
    Submersion { profile: CurvatureProfile, kappa: f64 },
    /// submersion over `H^n` with `l`-dimensional fibers of mean curvature
    /// at least `kappa`, confined to a horosphere preimage
    HyperbolicSubmersion { n: u32, l: u32, kappa: f64 },
    /// `H^n × R^l`, confined to a horocylinder
    HyperbolicProduct { n: u32, l: u32 },
    /// mean-convex side, barrier by the cylinder over a geodesic sphere of
    /// radius `d0` (`None` for the limit `d0 -> ∞`)
    SphereCylinder { n: u32, d0: Option<f64> },
    /// wedge `C(p, v, a) × L^l` with `K_N <= -c^2` in the cone; `t0` is
    /// the barrier radius used for the construction-dependent value at
    /// `c = 0`
    Wedge { c: f64, aperture: f64, l: u32, t0: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    ProductTube,
    CodimOneTube,
    Submersion,
    HyperbolicSubmersion,
    Horocylinder,
    MeanConvexSide,
    Wedge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    #[serde(default)]
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub estimate: Estimate,
    pub ambient: Ambient,
    /// dimension of the submanifold
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tube: Option<Tube>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: Estimate,
    pub bound: f64,
    /// `p/q` when the bound is an exact rational of rational inputs
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// the conclusion is `sup |H| > bound` rather than `>=`
    pub strict: bool,
    /// the value depends on a choice made in the construction and is not
    /// a constant of the estimate
    pub construction_dependent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attaining_point: Option<f64>,
    pub inputs: Scenario,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EstimateReport {
    fn new(s: &Scenario, bound: f64, exact: Option<Ratio<i64>>) -> Self {
        Self {
            estimate: s.estimate,
            bound,
            exact: exact.map(|r| format!("{}/{}", r.numer(), r.denom())),
            strict: false,
            construction_dependent: false,
            attaining_point: None,
            inputs: s.clone(),
            notes: Vec::new(),
        }
    }
}

/// `x` as a ratio of small integers when that is exact in f64.
pub fn exact_ratio(x: f64) -> Option<Ratio<i64>> {
    let r = Ratio::<i64>::approximate_float(x)?;
    (*r.numer() as f64 / *r.denom() as f64 == x).then_some(r)
}

fn ratio(p: u32, q: u32) -> Ratio<i64> {
    Ratio::new(p as i64, q as i64)
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn require_codim(m: u32, l: u32) -> Result<()> {
    if m < l + 1 {
        return Err(Error::Precondition(format!("m = {m} must be at least l + 1 = {}", l + 1)));
    }
    Ok(())
}

fn tube(s: &Scenario) -> Result<Tube> {
    let t = s.tube.ok_or_else(|| Error::ScenarioMismatch("a tube interval is required".into()))?;
    if !(t.hi > t.lo && t.lo >= 0.0 && t.hi.is_finite()) {
        return Err(Error::Precondition(format!("tube [{}, {}] must satisfy 0 <= lo < hi < ∞", t.lo, t.hi)));
    }
    Ok(t)
}

/// `h'/h` constant and known exactly: constant `G >= 0` with
/// `λ0^2 = G`, `λ0 >= 0` (so `h = e^{λ0 t}`).
fn constant_ratio(profile: &CurvatureProfile, initial: Initial) -> Option<f64> {
    match (&profile.kind, initial) {
        (ProfileKind::Constant { k }, Initial::LogDerivative(l)) if l >= 0.0 && l * l == *k => Some(l),
        _ => None,
    }
}

/// `inf_{[lo, hi]} h'/h` and where it is attained, for the model solved
/// from `profile` with `initial` data at 0.
fn model_infimum(profile: &CurvatureProfile, initial: Initial, t: Tube) -> Result<(f64, f64)> {
    let (h0, dh0) = initial.values();
    let w = solve_jacobi(profile, 0.0, h0, dh0, Horizon::new(0.0, t.hi))?;
    let pos = w.positivity();
    if pos.upper_is_zero && pos.upper <= t.hi {
        return Err(Error::FocalRadiusReached { radius: pos.upper, depth: t.hi });
    }
    inf_log_derivative(&w, t.lo, t.hi)
}

fn initial(s: &Scenario) -> Result<Initial> {
    s.initial.ok_or_else(|| Error::ScenarioMismatch("initial data for the model is required".into()))
}

/// `((m - l)/m) inf_{[0,d]} h'/h` for a product with a flat factor.
pub fn bound_product_tube(s: &Scenario) -> Result<EstimateReport> {
    let Ambient::ProductWithFlat { profile, l, .. } = &s.ambient else {
        return Err(Error::ScenarioMismatch("product tube needs a product_with_flat ambient".into()));
    };
    require_codim(s.m, *l)?;
    let t = tube(s)?;
    let init = initial(s)?;
    let (inf, at) = model_infimum(profile, init, t)?;
    let factor = ratio(s.m - l, s.m);
    let exact = constant_ratio(profile, init).and_then(exact_ratio).and_then(|r| factor.checked_mul(&r));
    let bound = exact.map(to_f64).unwrap_or(to_f64(factor) * inf);
    let mut rep = EstimateReport::new(s, bound, exact);
    rep.attaining_point = Some(at);
    Ok(rep)
}

/// `inf H_d` over the tube, for hypersurfaces.
pub fn bound_codim_one_tube(s: &Scenario) -> Result<EstimateReport> {
    let t = tube(s)?;
    match &s.ambient {
        Ambient::WarpedModel { profile, fiber_dim } => {
            if s.m != *fiber_dim {
                return Err(Error::Precondition(format!(
                    "hypersurface of R ×_h F^{fiber_dim} has dimension {fiber_dim}, got m = {}",
                    s.m
                )));
            }
            let init = initial(s)?;
            let (inf, at) = model_infimum(profile, init, t)?;
            let exact = constant_ratio(profile, init).and_then(exact_ratio);
            let mut rep = EstimateReport::new(s, exact.map(to_f64).unwrap_or(inf), exact);
            rep.attaining_point = Some(at);
            Ok(rep)
        }
        Ambient::SampledTube { profile, n, mean_curvature } => {
            if s.m + 1 != *n {
                return Err(Error::Precondition(format!("hypersurface needs m = n - 1 = {}, got {}", n - 1, s.m)));
            }
            let inside: Vec<_> = mean_curvature.iter().filter(|[d, _]| *d >= t.lo && *d <= t.hi).collect();
            if inside.is_empty() {
                return Err(Error::TooFewSamples { needed: 1, got: 0 });
            }
            let (hd, at) = inside
                .iter()
                .map(|[d, h]| (*h, *d))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("nonempty");
            let mut rep = EstimateReport::new(s, hd, None);
            rep.attaining_point = Some(at);
            // H_d <= h'/h must hold for a model that controls the tube
            if let Some(init) = s.initial {
                let (h0, dh0) = init.values();
                let w = solve_jacobi(profile, 0.0, h0, dh0, Horizon::new(0.0, t.hi))?;
                for [d, h] in &inside {
                    if let Ok(r) = w.log_derivative(*d) {
                        if *h > r + 1e-9 * r.abs().max(1.0) {
                            rep.notes.push(format!("H_d = {h} exceeds the model h'/h = {r} at d = {d}"));
                        }
                    }
                }
            }
            Ok(rep)
        }
        _ => Err(Error::ScenarioMismatch("codimension-one tube needs a warped_model or sampled_tube ambient".into())),
    }
}

/// `((m - 1)/m) inf h'/h + κ` for a submersion with fibers of geodesic
/// curvature κ.
pub fn bound_submersion(s: &Scenario) -> Result<EstimateReport> {
    let Ambient::Submersion { profile, kappa } = &s.ambient else {
        return Err(Error::ScenarioMismatch("submersion estimate needs a submersion ambient".into()));
    };
    require_codim(s.m, 1)?;
    let t = tube(s)?;
    let init = initial(s)?;
    let (inf, at) = model_infimum(profile, init, t)?;
    let factor = ratio(s.m - 1, s.m);
    let exact = match (constant_ratio(profile, init).and_then(exact_ratio), exact_ratio(*kappa)) {
        (Some(r), Some(k)) => factor.checked_mul(&r).and_then(|x| x.checked_add(&k)),
        _ => None,
    };
    let bound = exact.map(to_f64).unwrap_or(to_f64(factor) * inf + kappa);
    let mut rep = EstimateReport::new(s, bound, exact);
    rep.attaining_point = Some(at);
    Ok(rep)
}

/// `(m - l)/m + (l/m) κ` over a horosphere preimage in a submersion onto
/// hyperbolic space (`h = e^t`, so `inf h'/h = 1`).
pub fn bound_hyperbolic_submersion(s: &Scenario) -> Result<EstimateReport> {
    let Ambient::HyperbolicSubmersion { l, kappa, .. } = &s.ambient else {
        return Err(Error::ScenarioMismatch("needs a hyperbolic_submersion ambient".into()));
    };
    if s.m == 0 || s.m < *l {
        return Err(Error::Precondition(format!("m = {} must be positive and at least l = {l}", s.m)));
    }
    let base = ratio(s.m - l, s.m);
    let fiber = ratio(*l, s.m);
    let exact = exact_ratio(*kappa).and_then(|k| fiber.checked_mul(&k)).and_then(|x| x.checked_add(&base));
    let bound = exact.map(to_f64).unwrap_or(to_f64(base) + to_f64(fiber) * kappa);
    Ok(EstimateReport::new(s, bound, exact))
}

/// `(m - l)/m` in `H^n × R^l` inside a horocylinder.
///
/// The model is the horosphere warping `h = e^t`, solved numerically over
/// `[0, 50]`; its infimum must come out as 1 to `1e-12`.
pub fn bound_horocylinder(s: &Scenario) -> Result<EstimateReport> {
    let Ambient::HyperbolicProduct { l, .. } = &s.ambient else {
        return Err(Error::ScenarioMismatch("horocylinder estimate needs a hyperbolic_product ambient".into()));
    };
    require_codim(s.m, *l)?;
    let t = s.tube.unwrap_or(Tube { lo: 0.0, hi: 50.0 });
    let (inf, at) = model_infimum(&CurvatureProfile::constant(1.0), Initial::LogDerivative(1.0), t)?;
    if (inf - 1.0).abs() > tolerances::BOUND {
        return Err(Error::Precondition(format!("horosphere model gave inf h'/h = {inf}, expected 1")));
    }
    let exact = ratio(s.m - l, s.m);
    let mut rep = EstimateReport::new(s, to_f64(exact), Some(exact));
    rep.attaining_point = Some(at);
    Ok(rep)
}

/// `((m - 1)/m) coth d0`, strict, on the mean-convex side of the entire
/// rotational graph of constant mean curvature `(n-1)/n`.
pub fn bound_mean_convex_side(s: &Scenario) -> Result<EstimateReport> {
    let Ambient::SphereCylinder { d0, .. } = &s.ambient else {
        return Err(Error::ScenarioMismatch("mean-convex estimate needs a sphere_cylinder ambient".into()));
    };
    require_codim(s.m, 1)?;
    let factor = ratio(s.m - 1, s.m);
    let mut rep = match d0 {
        None => EstimateReport::new(s, to_f64(factor), Some(factor)),
        Some(d) if *d > 0.0 && d.is_finite() => {
            let coth = ExactWarping::Sinh.log_derivative(*d);
            let mut rep = EstimateReport::new(s, to_f64(factor) * coth, None);
            rep.attaining_point = Some(*d);
            rep
        }
        Some(d) => return Err(Error::NegativeRadius(*d)),
    };
    rep.strict = true;
    Ok(rep)
}

/// `(m - l) c / m` for `c > 0`; strict positivity for `c = 0`, with the
/// value `((m - l)/m) inf_{(0, t0]} 1/t` of the `t^2/2` barrier reported as
/// construction-dependent when `t0` is given.
pub fn bound_wedge(s: &Scenario) -> Result<EstimateReport> {
    let Ambient::Wedge { c, aperture, l, t0 } = &s.ambient else {
        return Err(Error::ScenarioMismatch("wedge estimate needs a wedge ambient".into()));
    };
    require_codim(s.m, *l)?;
    if !(*aperture > 0.0 && *aperture < 1.0) {
        return Err(Error::Precondition(format!("aperture {aperture} must lie in (0, 1)")));
    }
    if !(*c >= 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("c = {c} must be finite and nonnegative")));
    }
    let factor = ratio(s.m - l, s.m);
    if *c > 0.0 {
        let exact = exact_ratio(*c).and_then(|c| factor.checked_mul(&c));
        let bound = exact.map(to_f64).unwrap_or(to_f64(factor) * c);
        return Ok(EstimateReport::new(s, bound, exact));
    }
    let mut rep = match t0 {
        None => EstimateReport::new(s, 0.0, Some(Ratio::from_integer(0))),
        Some(t0) if *t0 > 0.0 && t0.is_finite() => {
            let barrier = BarrierFunction::wedge(0.0, *t0, Truncation::None)?;
            let (inf, at) = inf_log_derivative(barrier.base(), 0.0, *t0)?;
            let exact = exact_ratio(*t0).and_then(|t| factor.checked_div(&t));
            let bound = exact.map(to_f64).unwrap_or(to_f64(factor) * inf);
            let mut rep = EstimateReport::new(s, bound, exact);
            rep.attaining_point = Some(at);
            rep.construction_dependent = true;
            rep.notes.push("construction-dependent, not a constant of the estimate".into());
            rep
        }
        Some(t0) => return Err(Error::NegativeRadius(*t0)),
    };
    rep.strict = true;
    Ok(rep)
}

pub fn evaluate(s: &Scenario) -> Result<EstimateReport> {
    match s.estimate {
        Estimate::ProductTube => bound_product_tube(s),
        Estimate::CodimOneTube => bound_codim_one_tube(s),
        Estimate::Submersion => bound_submersion(s),
        Estimate::HyperbolicSubmersion => bound_hyperbolic_submersion(s),
        Estimate::Horocylinder => bound_horocylinder(s),
        Estimate::MeanConvexSide => bound_mean_convex_side(s),
        Estimate::Wedge => bound_wedge(s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCurvatureReport {
    pub holds: bool,
    /// samples with `rho >= threshold`
    pub checked: usize,
    /// smallest `s - (-c^2 rho^2 log(rho + 1))` over checked samples
    pub worst_margin: Option<f64>,
    pub worst_rho: Option<f64>,
    pub threshold: f64,
}

/// Whether `s >= -c^2 rho^2 log(rho + 1)` at every sample `(rho, s)` with
/// `rho >= threshold`. Equality is accepted up to a relative `1e-12`.
pub fn check_scalar_curvature_condition(samples: &[(f64, f64)], c: f64, threshold: f64) -> Result<ScalarCurvatureReport> {
    if let Some((rho, _)) = samples.iter().find(|(rho, _)| *rho < 0.0) {
        return Err(Error::NegativeRadius(*rho));
    }
    let mut report = ScalarCurvatureReport { holds: true, checked: 0, worst_margin: None, worst_rho: None, threshold };
    for &(rho, s) in samples.iter().filter(|(rho, _)| *rho >= threshold) {
        let floor = -c * c * rho * rho * (rho + 1.0).ln();
        let margin = s - floor;
        report.checked += 1;
        if report.worst_margin.is_none_or(|w| margin < w) {
            report.worst_margin = Some(margin);
            report.worst_rho = Some(rho);
        }
        if margin < -1e-12 * floor.abs().max(s.abs()) {
            report.holds = false;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn product(m: u32, l: u32, g: f64, lambda0: f64, d: f64) -> Scenario {
        Scenario {
            estimate: Estimate::ProductTube,
            ambient: Ambient::ProductWithFlat { profile: CurvatureProfile::constant(g), n: 2, l },
            m,
            tube: Some(Tube { lo: 0.0, hi: d }),
            initial: Some(Initial::LogDerivative(lambda0)),
        }
    }

    #[test]
    fn product_tube_constants() {
        let r = bound_product_tube(&product(2, 1, 1.0, 1.0, 3.0)).unwrap();
        assert_eq!(r.bound, 0.5);
        assert_eq!(r.exact.as_deref(), Some("1/2"));
        let r = bound_product_tube(&product(3, 1, 1.0, 1.0, 7.0)).unwrap();
        assert_eq!(r.exact.as_deref(), Some("2/3"));
        assert!(matches!(bound_product_tube(&product(1, 1, 1.0, 1.0, 1.0)), Err(Error::Precondition(_))));
        // numeric path: G = 1, h'(0)/h(0) = 0.5 gives h'/h = tanh(t + artanh 0.5)
        let r = bound_product_tube(&product(2, 1, 1.0, 0.5, 2.0)).unwrap();
        assert!(r.exact.is_none());
        assert_relative_eq!(r.bound, 0.25, epsilon = 1e-10);
        // sine model reaches its focal radius before d
        assert!(matches!(
            bound_product_tube(&product(2, 1, -1.0, 0.0, 2.0)),
            Err(Error::FocalRadiusReached { .. })
        ));
    }

    #[test]
    fn codim_one_examples() {
        let warped = |g: f64, init: Initial, lo: f64, hi: f64| Scenario {
            estimate: Estimate::CodimOneTube,
            ambient: Ambient::WarpedModel { profile: CurvatureProfile::constant(g), fiber_dim: 2 },
            m: 2,
            tube: Some(Tube { lo, hi }),
            initial: Some(init),
        };
        let r = bound_codim_one_tube(&warped(1.0, Initial::Pole, 0.5, 2.0)).unwrap();
        assert_relative_eq!(r.bound, 1.0 / 2f64.tanh(), max_relative = 1e-10);
        let r = bound_codim_one_tube(&warped(1.0, Initial::LogDerivative(1.0), 0.0, 4.0)).unwrap();
        assert_eq!(r.bound, 1.0);
        let r = bound_codim_one_tube(&warped(1.0, Initial::LogDerivative(0.0), 0.0, 3.0)).unwrap();
        assert!(r.bound.abs() < 1e-12 && r.attaining_point == Some(0.0));

        let sampled = Scenario {
            estimate: Estimate::CodimOneTube,
            ambient: Ambient::SampledTube {
                profile: CurvatureProfile::constant(1.0),
                n: 3,
                mean_curvature: vec![[0.0, 1.2], [1.0, 1.1], [2.0, 1.05], [9.0, 0.1]],
            },
            m: 2,
            tube: Some(Tube { lo: 0.0, hi: 2.0 }),
            initial: Some(Initial::LogDerivative(1.0)),
        };
        let r = bound_codim_one_tube(&sampled).unwrap();
        assert_eq!((r.bound, r.attaining_point), (1.05, Some(2.0)));
        assert_eq!(r.notes.len(), 3, "samples above h'/h = 1 are flagged");
    }

    #[test]
    fn submersion_examples() {
        let sub = |m: u32, kappa: f64| Scenario {
            estimate: Estimate::Submersion,
            ambient: Ambient::Submersion { profile: CurvatureProfile::constant(1.0), kappa },
            m,
            tube: Some(Tube { lo: 0.0, hi: 5.0 }),
            initial: Some(Initial::LogDerivative(1.0)),
        };
        assert_eq!(bound_submersion(&sub(2, 0.0)).unwrap().bound, 0.5);
        assert_eq!(bound_submersion(&sub(2, 0.25)).unwrap().exact.as_deref(), Some("3/4"));
        let r = bound_submersion(&sub(4, -0.2)).unwrap();
        assert_relative_eq!(r.bound, 0.55, epsilon = 1e-15);
        // κ = 0 submersion equals the product tube with l = 1
        for m in 2..7 {
            assert_eq!(
                bound_submersion(&sub(m, 0.0)).unwrap().bound,
                bound_product_tube(&product(m, 1, 1.0, 1.0, 5.0)).unwrap().bound
            );
        }
    }

    #[test]
    fn hyperbolic_examples() {
        let hs = |m, l, kappa| Scenario {
            estimate: Estimate::HyperbolicSubmersion,
            ambient: Ambient::HyperbolicSubmersion { n: 3, l, kappa },
            m,
            tube: None,
            initial: None,
        };
        assert_eq!(bound_hyperbolic_submersion(&hs(3, 1, 0.0)).unwrap().exact.as_deref(), Some("2/3"));
        assert_eq!(bound_hyperbolic_submersion(&hs(2, 0, 0.0)).unwrap().bound, 1.0);
        assert_eq!(bound_hyperbolic_submersion(&hs(4, 2, 0.5)).unwrap().exact.as_deref(), Some("3/4"));

        let hp = |m, l| Scenario {
            estimate: Estimate::Horocylinder,
            ambient: Ambient::HyperbolicProduct { n: 2, l },
            m,
            tube: None,
            initial: None,
        };
        assert_eq!(bound_horocylinder(&hp(2, 1)).unwrap().exact.as_deref(), Some("1/2"));
        assert_eq!(bound_horocylinder(&hp(5, 1)).unwrap().exact.as_deref(), Some("4/5"));
        for (m, l) in [(2, 1), (3, 1), (4, 2), (6, 5)] {
            let a = bound_horocylinder(&hp(m, l)).unwrap().bound;
            let b = bound_product_tube(&product(m, l, 1.0, 1.0, 50.0)).unwrap().bound;
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn mean_convex_examples() {
        let mc = |m, d0| Scenario {
            estimate: Estimate::MeanConvexSide,
            ambient: Ambient::SphereCylinder { n: m, d0 },
            m,
            tube: None,
            initial: None,
        };
        let r = bound_mean_convex_side(&mc(2, None)).unwrap();
        assert!(r.strict && r.bound == 0.5);
        let r = bound_mean_convex_side(&mc(3, Some(1.0))).unwrap();
        assert_relative_eq!(r.bound, 2.0 / 3.0 / 1f64.tanh(), epsilon = 1e-15);
        assert!((r.bound - 0.8754).abs() < 1e-4);
        let r = bound_mean_convex_side(&mc(2, Some(2.0))).unwrap();
        assert_relative_eq!(r.bound, 0.5 / 2f64.tanh(), epsilon = 1e-15);
        assert!(bound_mean_convex_side(&mc(2, Some(0.0))).is_err());
    }

    #[test]
    fn wedge_examples() {
        let w = |c, m, l, t0| Scenario {
            estimate: Estimate::Wedge,
            ambient: Ambient::Wedge { c, aperture: 0.5, l, t0 },
            m,
            tube: None,
            initial: None,
        };
        assert_eq!(bound_wedge(&w(1.0, 3, 1, None)).unwrap().exact.as_deref(), Some("2/3"));
        assert_eq!(bound_wedge(&w(2.0, 4, 2, None)).unwrap().bound, 1.0);
        let r = bound_wedge(&w(0.0, 2, 0, None)).unwrap();
        assert!(r.strict && r.bound == 0.0 && !r.construction_dependent);
        let r = bound_wedge(&w(0.0, 3, 1, Some(4.0))).unwrap();
        assert!(r.strict && r.construction_dependent);
        assert_eq!(r.exact.as_deref(), Some("1/6"));
        let bad = Scenario { ambient: Ambient::Wedge { c: 1.0, aperture: 1.0, l: 0, t0: None }, ..w(1.0, 2, 0, None) };
        assert!(bound_wedge(&bad).is_err());
    }

    #[test]
    fn mismatched_ambient_rejected() {
        let s = Scenario { estimate: Estimate::Wedge, ..product(2, 1, 1.0, 1.0, 1.0) };
        assert!(matches!(evaluate(&s), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn report_round_trip() {
        let s = product(3, 1, 1.0, 0.7, 2.5);
        let r = evaluate(&s).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: EstimateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(evaluate(&back.inputs).unwrap(), r);
    }

    #[test]
    fn scalar_curvature_examples() {
        let rhos: Vec<f64> = (0..50).map(|k| 5.0 + 10.0 * k as f64).collect();
        let zero: Vec<_> = rhos.iter().map(|&r| (r, 0.0)).collect();
        assert!(check_scalar_curvature_condition(&zero, 0.3, 10.0).unwrap().holds);
        let cubic: Vec<_> = rhos.iter().map(|&r| (r, -r * r * r)).collect();
        assert!(!check_scalar_curvature_condition(&cubic, 1.0, 10.0).unwrap().holds);
        let edge: Vec<_> = rhos.iter().map(|&r| (r, -4.0 * r * r * (r + 1.0).ln())).collect();
        let rep = check_scalar_curvature_condition(&edge, 2.0, 10.0).unwrap();
        assert!(rep.holds && rep.checked == 49);
        assert!(check_scalar_curvature_condition(&[(-1.0, 0.0)], 1.0, 10.0).is_err());
    }

    proptest! {
        #[test]
        fn product_bound_monotone(m in 2u32..8, lambda0 in 0.0f64..2.0, d in 0.5f64..5.0) {
            let mut prev = f64::INFINITY;
            for l in 0..m {
                let b = bound_product_tube(&product(m, l, 1.0, lambda0, d)).unwrap().bound;
                prop_assert!(b <= prev + 1e-15);
                prev = b;
            }
            let lo = bound_product_tube(&product(m, 1, 1.0, lambda0, d)).unwrap().bound;
            let hi = bound_product_tube(&product(m, 1, 1.0, lambda0 + 0.3, d)).unwrap().bound;
            prop_assert!(hi >= lo - 1e-12);
        }
    }
}
