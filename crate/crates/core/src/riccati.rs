//! Matrix Riccati flow `A' = -A^2 - R(t)` of the shape operator along a
//! geodesic, and the eigenvalue comparison against the model `(h'/h) Id`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{givens, orthonormalize, Matrix};
use crate::ode::{self, OdeOptions, StepControl, Trajectory};
use crate::profile::CurvatureProfile;
use crate::report::ComparisonReport;
use crate::tolerances;
use crate::warping::{solve_jacobi, Horizon, WarpingFunction};

/// Which one-sided sectional curvature bound the path satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    /// `K <= -G`, i.e. `R(t) <= -G(t) Id`
    Upper,
    /// `K >= -G`, i.e. `R(t) >= -G(t) Id`
    Lower,
}

/// Which Hessian inequality is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `A >= (h'/h) Id`, from `K <= -G` and `A0 >= (h'/h)(t0) Id`
    Lower,
    /// `A <= (h'/h) Id`, from `K >= -G` and `A0 <= (h'/h)(t0) Id`
    Upper,
}

impl Direction {
    pub fn required_side(self) -> BoundSide {
        match self {
            Direction::Lower => BoundSide::Upper,
            Direction::Upper => BoundSide::Lower,
        }
    }
}

/// `P(t) = Q Rot(ωt) D Rot(ωt)^T Q^T`, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub q: Matrix,
    pub diag: Vec<f64>,
    pub omega: f64,
}

impl Perturbation {
    pub fn at(&self, t: f64) -> Matrix {
        let n = self.diag.len();
        let rot = if n >= 2 { givens(n, 0, n - 1, self.omega * t) } else { Matrix::identity(n) };
        let u = self.q.matmul(&rot);
        let mut p = u.matmul(&Matrix::from_diagonal(&self.diag)).matmul(&u.transpose());
        p.symmetrize();
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSource {
    /// `R = k Id`
    Scalar { k: f64 },
    /// constant diagonal `R`
    Diagonal { entries: Vec<f64> },
    /// `R = -G(t) Id - P(t)` on the upper side, `-G(t) Id + P(t)` on the
    /// lower side, so the bound is saturated when `P` is small
    Saturating { perturbation: Perturbation },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureOperatorPath {
    pub dimension: usize,
    pub source: OperatorSource,
    pub bound_profile: CurvatureProfile,
    pub bound_side: BoundSide,
}

impl CurvatureOperatorPath {
    pub fn scalar(dimension: usize, k: f64, bound_profile: CurvatureProfile, bound_side: BoundSide) -> Self {
        Self { dimension, source: OperatorSource::Scalar { k }, bound_profile, bound_side }
    }

    /// Seeded saturating family with `P = Q Rot(ωt) D Rot^T Q^T`, `Q`
    /// orthogonal from Gaussian entries, `D` uniform on `[0, 2]`, `ω`
    /// uniform on `[0.5, 2]`.
    pub fn random_saturating(dimension: usize, bound_profile: CurvatureProfile, bound_side: BoundSide, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(dimension);
        for i in 0..dimension {
            for j in 0..dimension {
                m[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let q = orthonormalize(&m);
        let diag = (0..dimension).map(|_| rng.random_range(0.0..2.0)).collect();
        let omega = rng.random_range(0.5..2.0);
        Self {
            dimension,
            source: OperatorSource::Saturating { perturbation: Perturbation { q, diag, omega } },
            bound_profile,
            bound_side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension;
        match &self.source {
            OperatorSource::Diagonal { entries } if entries.len() != n => {
                Err(Error::DimensionMismatch { expected: n, got: entries.len() })
            }
            OperatorSource::Saturating { perturbation } if perturbation.q.dim() != n || perturbation.diag.len() != n => {
                Err(Error::DimensionMismatch { expected: n, got: perturbation.diag.len() })
            }
            OperatorSource::Saturating { perturbation } if perturbation.diag.iter().any(|d| *d < 0.0) => {
                Err(Error::Precondition("perturbation must be positive semidefinite".into()))
            }
            _ => self.bound_profile.validate(),
        }
    }

    pub fn operator(&self, t: f64) -> Matrix {
        let n = self.dimension;
        match &self.source {
            OperatorSource::Scalar { k } => Matrix::scaled_identity(n, *k),
            OperatorSource::Diagonal { entries } => Matrix::from_diagonal(entries),
            OperatorSource::Saturating { perturbation } => {
                let base = Matrix::scaled_identity(n, -self.bound_profile.value(t));
                let p = perturbation.at(t);
                match self.bound_side {
                    BoundSide::Upper => base.sub(&p),
                    BoundSide::Lower => base.add(&p),
                }
            }
        }
    }

    /// Worst violation of the declared curvature bound on `samples + 1`
    /// points of `[a, b]`; nonpositive when the bound holds.
    pub fn bound_violation(&self, a: f64, b: f64, samples: usize) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..=samples {
            let t = a + (b - a) * j as f64 / samples as f64;
            let ev = self.operator(t).sym_eigenvalues();
            let g = self.bound_profile.value(t);
            let v = match self.bound_side {
                BoundSide::Upper => ev[0] + g,
                BoundSide::Lower => -g - ev[ev.len() - 1],
            };
            worst = worst.max(v);
        }
        worst
    }
}

/// Dense solution of the Riccati flow with its blow-up record.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiState {
    path: CurvatureOperatorPath,
    a0: Matrix,
    traj: Trajectory,
    blowup_time: Option<f64>,
    max_asymmetry: f64,
}

impl RiccatiState {
    pub fn path(&self) -> &CurvatureOperatorPath {
        &self.path
    }

    pub fn initial(&self) -> &Matrix {
        &self.a0
    }

    pub fn t0(&self) -> f64 {
        self.traj.t_start()
    }

    /// Last bounded sample.
    pub fn t_last(&self) -> f64 {
        self.traj.t_end()
    }

    /// Extrapolated time where an eigenvalue escapes to infinity.
    pub fn blowup_time(&self) -> Option<f64> {
        self.blowup_time
    }

    /// Largest `|A - A^T|` entry seen before symmetrization.
    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }

    pub fn knot_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.traj.knots().iter().map(|k| k.t)
    }

    pub fn at(&self, t: f64) -> Result<Matrix> {
        if !self.traj.covers(t) {
            return Err(Error::Precondition(format!(
                "t = {t} outside solved range [{}, {}]",
                self.t0(),
                self.t_last()
            )));
        }
        let mut a = Matrix::from_row_major(self.path.dimension, self.traj.eval(t))?;
        a.symmetrize();
        Ok(a)
    }
}

pub fn integrate_riccati(path: &CurvatureOperatorPath, a0: &Matrix, horizon: Horizon) -> Result<RiccatiState> {
    integrate_riccati_with(path, a0, horizon, &OdeOptions::default())
}

pub fn integrate_riccati_with(
    path: &CurvatureOperatorPath,
    a0: &Matrix,
    horizon: Horizon,
    opts: &OdeOptions,
) -> Result<RiccatiState> {
    path.validate()?;
    let n = path.dimension;
    if a0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a0.dim() });
    }
    let asym = a0.asymmetry();
    if asym > 1e-12 * a0.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if !(horizon.hi > horizon.lo) {
        return Err(Error::EmptyInterval { a: horizon.lo, b: horizon.hi });
    }

    let mut blowup = None;
    let mut max_asym = 0.0f64;
    let traj = ode::integrate(
        |t, y, dy| {
            let r = path.operator(t);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += y[i * n + k] * y[k * n + j];
                    }
                    dy[i * n + j] = -s - r[(i, j)];
                }
            }
        },
        horizon.lo,
        a0.as_slice(),
        horizon.hi,
        opts,
        |t, y| {
            let mut a = Matrix::from_row_major(n, y.to_vec()).expect("state has n^2 entries");
            let asym = a.asymmetry();
            max_asym = max_asym.max(asym);
            let ev = a.sym_eigenvalues();
            let big = ev[0].abs().max(ev[n - 1].abs());
            if big > tolerances::RICCATI_BLOWUP {
                blowup = Some(t + 1.0 / big);
                return StepControl::Stop;
            }
            if asym > 0.0 {
                a.symmetrize();
                y.copy_from_slice(a.as_slice());
                StepControl::Modified
            } else {
                StepControl::Continue
            }
        },
    )?;
    Ok(RiccatiState { path: path.clone(), a0: a0.clone(), traj, blowup_time: blowup, max_asymmetry: max_asym })
}

/// Model solution for `state`: `h'' = G h` with `h(t0) = 1` and `h'(t0)`
/// the extreme eigenvalue of `A0` on the side of `direction`.
pub fn model_warping(state: &RiccatiState, direction: Direction) -> Result<WarpingFunction> {
    let ev = state.a0.sym_eigenvalues();
    let lambda0 = match direction {
        Direction::Lower => ev[ev.len() - 1],
        Direction::Upper => ev[0],
    };
    let t0 = state.t0();
    solve_jacobi(&state.path.bound_profile, t0, 1.0, lambda0, Horizon::new(t0, state.t_last().max(t0)))
}

const HYPOTHESIS_SAMPLES: usize = 256;

/// Eigenvalue comparison of `A` against `(h'/h) Id`.
///
/// The margin is `λ_min(A) - h'/h` (lower) or `h'/h - λ_max(A)` (upper),
/// divided by `max(1, |h'/h|)`, sampled at every accepted step and on a
/// uniform grid up to the last bounded sample or the first zero of `h`.
/// Hypotheses are checked on a 256-point grid before anything is asserted.
pub fn verify_hessian_comparison(
    state: &RiccatiState,
    direction: Direction,
    model: &WarpingFunction,
    tolerance: f64,
) -> ComparisonReport {
    let t0 = state.t0();
    let t_last = state.t_last();
    let path = &state.path;
    let mut unmet = Vec::new();

    if path.bound_side != direction.required_side() {
        unmet.push(format!(
            "{direction:?} comparison needs a {:?} curvature bound, path declares {:?}",
            direction.required_side(),
            path.bound_side
        ));
    }
    let violation = path.bound_violation(t0, t_last, HYPOTHESIS_SAMPLES);
    if violation > tolerance {
        unmet.push(format!("curvature bound violated by {violation:e} on the sample grid"));
    }
    if model.initial_point() != t0 {
        unmet.push(format!("model starts at {} but the flow starts at {t0}", model.initial_point()));
    }
    for j in 0..=HYPOTHESIS_SAMPLES {
        let t = t0 + (t_last - t0) * j as f64 / HYPOTHESIS_SAMPLES as f64;
        let (g1, g2) = (model.profile().value(t), path.bound_profile.value(t));
        if (g1 - g2).abs() > 1e-12 * (1.0 + g2.abs()) {
            unmet.push(format!("model profile differs from the bound profile at t = {t}"));
            break;
        }
    }
    let lambda0 = model.initial_log_derivative();
    let ev0 = state.a0.sym_eigenvalues();
    let ordered = match direction {
        Direction::Lower => ev0[ev0.len() - 1] >= lambda0 - tolerance,
        Direction::Upper => ev0[0] <= lambda0 + tolerance,
    };
    if !ordered {
        unmet.push(format!("A0 eigenvalues {ev0:?} not ordered against h'/h = {lambda0}"));
    }
    if !unmet.is_empty() {
        return ComparisonReport::hypotheses_unmet(unmet.join("; "), tolerance);
    }

    let pos = model.positivity();
    let end = t_last.min(pos.upper);
    let mut times: Vec<f64> = state.knot_times().filter(|t| *t <= end).collect();
    const GRID: usize = 1000;
    times.extend((0..=GRID).map(|j| t0 + (end - t0) * j as f64 / GRID as f64));

    let mut margin_min = f64::INFINITY;
    let mut t_argmin = t0;
    for t in times {
        let Ok(r) = model.log_derivative(t) else { continue };
        let Ok(a) = state.at(t) else { continue };
        let ev = a.sym_eigenvalues();
        let raw = match direction {
            Direction::Lower => ev[ev.len() - 1] - r,
            Direction::Upper => r - ev[0],
        };
        let m = raw / r.abs().max(1.0);
        if m < margin_min {
            margin_min = m;
            t_argmin = t;
        }
    }
    let mut report = ComparisonReport::decided(margin_min, t_argmin, tolerance);
    report.blowup_time = state.blowup_time;
    if state.max_asymmetry > tolerances::SYMMETRY {
        report.notes.push(format!("symmetry drift {:e} before symmetrization", state.max_asymmetry));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn h(lo: f64, hi: f64) -> Horizon {
        Horizon::new(lo, hi)
    }

    #[test]
    fn stationary_identity() {
        let path = CurvatureOperatorPath::scalar(3, -1.0, CurvatureProfile::constant(1.0), BoundSide::Upper);
        let s = integrate_riccati(&path, &Matrix::identity(3), h(0.0, 5.0)).unwrap();
        assert!(s.at(5.0).unwrap().sub(&Matrix::identity(3)).max_abs() < 1e-12);
        let model = model_warping(&s, Direction::Lower).unwrap();
        let r = verify_hessian_comparison(&s, Direction::Lower, &model, 1e-6);
        assert!(r.pass && r.margin_min.abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn scalar_closed_forms() {
        let path = CurvatureOperatorPath::scalar(1, -1.0, CurvatureProfile::constant(1.0), BoundSide::Upper);
        let s = integrate_riccati(&path, &Matrix::zeros(1), h(0.0, 4.0)).unwrap();
        for t in [0.5, 1.0, 3.0, 4.0] {
            assert_relative_eq!(s.at(t).unwrap()[(0, 0)], t.tanh(), epsilon = 1e-9);
        }
        let flat = CurvatureOperatorPath::scalar(2, 0.0, CurvatureProfile::constant(0.0), BoundSide::Upper);
        let s = integrate_riccati(&flat, &Matrix::identity(2), h(0.0, 10.0)).unwrap();
        assert!(s.blowup_time().is_none());
        assert_relative_eq!(s.at(10.0).unwrap()[(1, 1)], 1.0 / 11.0, epsilon = 1e-10);
    }

    #[test]
    fn blowup_matches_focal_radius() {
        let path = CurvatureOperatorPath::scalar(1, 1.0, CurvatureProfile::constant(-1.0), BoundSide::Lower);
        let s = integrate_riccati(&path, &Matrix::zeros(1), h(0.0, 3.0)).unwrap();
        let bt = s.blowup_time().expect("blows up");
        assert!((bt - FRAC_PI_2).abs() < 1e-6, "{bt}");
        let model = model_warping(&s, Direction::Upper).unwrap();
        let r = verify_hessian_comparison(&s, Direction::Upper, &model, 1e-6);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.blowup_time, Some(bt));
    }

    #[test]
    fn pinched_scalar_case() {
        let p = 0.5f64;
        let path = CurvatureOperatorPath::scalar(1, -(1.0 + p), CurvatureProfile::constant(1.0), BoundSide::Upper);
        let s = integrate_riccati(&path, &Matrix::identity(1), h(0.0, 6.0)).unwrap();
        let k = (1.0 + p).sqrt();
        for t in [0.3, 1.0, 2.5, 6.0] {
            let exact = k * (k * t + (1.0 / k).atanh()).tanh();
            assert_relative_eq!(s.at(t).unwrap()[(0, 0)], exact, epsilon = 1e-9);
        }
        let model = model_warping(&s, Direction::Lower).unwrap();
        let r = verify_hessian_comparison(&s, Direction::Lower, &model, 1e-6);
        assert!(r.pass && r.margin_min >= -1e-9);
    }

    #[test]
    fn hypotheses_flagged() {
        let path = CurvatureOperatorPath::scalar(2, -0.5, CurvatureProfile::constant(1.0), BoundSide::Upper);
        let s = integrate_riccati(&path, &Matrix::identity(2), h(0.0, 2.0)).unwrap();
        let model = model_warping(&s, Direction::Lower).unwrap();
        let r = verify_hessian_comparison(&s, Direction::Lower, &model, 1e-6);
        assert_eq!(r.verdict, crate::report::Verdict::HypothesesUnmet);
        let r = verify_hessian_comparison(&s, Direction::Upper, &model, 1e-6);
        assert_eq!(r.verdict, crate::report::Verdict::HypothesesUnmet);
    }

    #[test]
    fn rejects_bad_input() {
        let path = CurvatureOperatorPath::scalar(2, -1.0, CurvatureProfile::constant(1.0), BoundSide::Upper);
        let asym = Matrix::from_row_major(2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(integrate_riccati(&path, &asym, h(0.0, 1.0)), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            integrate_riccati(&path, &Matrix::identity(3), h(0.0, 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_paths_respect_bounds_and_stay_symmetric() {
        for seed in 0..10u64 {
            let dim = 2 + (seed as usize % 5);
            for side in [BoundSide::Upper, BoundSide::Lower] {
                let path = CurvatureOperatorPath::random_saturating(dim, CurvatureProfile::constant(1.0), side, seed);
                assert!(path.bound_violation(0.0, 5.0, 100) <= 1e-12);
                let a0 = Matrix::identity(dim);
                let s = integrate_riccati(&path, &a0, h(0.0, 3.0)).unwrap();
                assert!(s.max_asymmetry() <= tolerances::SYMMETRY);
                let dir = if side == BoundSide::Upper { Direction::Lower } else { Direction::Upper };
                let model = model_warping(&s, dir).unwrap();
                let r = verify_hessian_comparison(&s, dir, &model, tolerances::COMPARE);
                assert!(r.pass, "seed {seed} {side:?}: {r:?}");
            }
        }
    }

    #[test]
    fn half_step_cross_check() {
        let path = CurvatureOperatorPath::random_saturating(4, CurvatureProfile::constant(1.0), BoundSide::Upper, 7);
        let a0 = Matrix::identity(4);
        let coarse = integrate_riccati(&path, &a0, h(0.0, 3.0)).unwrap();
        let fine = integrate_riccati_with(&path, &a0, h(0.0, 3.0), &OdeOptions::default().with_max_step(0.005)).unwrap();
        for t in [0.5, 1.7, 3.0] {
            assert!(coarse.at(t).unwrap().sub(&fine.at(t).unwrap()).max_abs() < 1e-8);
        }
    }

    #[test]
    fn path_json_round_trip() {
        let path = CurvatureOperatorPath::random_saturating(3, CurvatureProfile::constant(1.0), BoundSide::Lower, 3);
        let s = serde_json::to_string(&path).unwrap();
        let back: CurvatureOperatorPath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, path);
    }
}
