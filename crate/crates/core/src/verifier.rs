//! Pointwise check of the Laplacian inequalities for `f = g(ϱ∘φ)`,
//! `g' = h`, on parametrized surfaces in three-dimensional model charts,
//! using a discrete Laplace-Beltrami operator on a structured grid.
//!
//! Forward form (curvature bounded below, shape operator bounded above):
//! `Δf/h ≥ (n-1)H_d - (n-1)h'/h - m|H| + m h'/h`.
//! Reverse form: `Δf/h ≥ m(h'/h - |H|)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CurvatureProfile;
use crate::tolerances;
use crate::warping::{build_barrier, solve_jacobi, BarrierFunction, Horizon, Truncation, WarpingFunction};

pub type Point = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// Ambient dimension.
pub const AMBIENT_DIM: usize = 3;
/// Surface dimension.
pub const SURFACE_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartId {
    /// `H^2 × R` in half-plane coordinates `(x, y, z)`, `ϱ = log y`
    H2xrHorocylinder,
    /// `dt^2 + e^{2t}(dx^2 + dy^2)`, `ϱ = t`
    WarpedExp,
    /// `dt^2 + cosh^2 t (dx^2 + dy^2)`, `ϱ = t`
    WarpedCosh,
    /// `R^3`, `ϱ = z`
    Euclidean,
}

impl ChartId {
    pub const ALL: [ChartId; 4] = [ChartId::H2xrHorocylinder, ChartId::WarpedExp, ChartId::WarpedCosh, ChartId::Euclidean];

    pub fn name(self) -> &'static str {
        match self {
            ChartId::H2xrHorocylinder => "h2xr-horocylinder",
            ChartId::WarpedExp => "warped-exp",
            ChartId::WarpedCosh => "warped-cosh",
            ChartId::Euclidean => "euclidean",
        }
    }

    pub fn metric(self, p: &Point) -> Mat3 {
        match self {
            ChartId::H2xrHorocylinder => {
                let s = 1.0 / (p[1] * p[1]);
                diag(s, s, 1.0)
            }
            ChartId::WarpedExp => {
                let s = (2.0 * p[0]).exp();
                diag(1.0, s, s)
            }
            ChartId::WarpedCosh => {
                let s = p[0].cosh().powi(2);
                diag(1.0, s, s)
            }
            ChartId::Euclidean => diag(1.0, 1.0, 1.0),
        }
    }

    pub fn rho(self, p: &Point) -> f64 {
        match self {
            ChartId::H2xrHorocylinder => p[1].ln(),
            ChartId::WarpedExp | ChartId::WarpedCosh => p[0],
            ChartId::Euclidean => p[2],
        }
    }

    /// Mean curvature of the level set of `ϱ` through `p`, `Δϱ/(n-1)`.
    pub fn equidistant_mean_curvature(self, p: &Point) -> f64 {
        match self {
            ChartId::H2xrHorocylinder => -0.5,
            ChartId::WarpedExp => 1.0,
            ChartId::WarpedCosh => p[0].tanh(),
            ChartId::Euclidean => 0.0,
        }
    }

    pub fn in_domain(self, p: &Point) -> bool {
        p.iter().all(|x| x.is_finite()) && (self != ChartId::H2xrHorocylinder || p[1] > 0.0)
    }

    /// Box the eikonal check samples from.
    fn sample_box(self) -> [(f64, f64); 3] {
        match self {
            ChartId::H2xrHorocylinder => [(-5.0, 5.0), (0.05, 20.0), (-5.0, 5.0)],
            _ => [(-3.0, 3.0), (-5.0, 5.0), (-5.0, 5.0)],
        }
    }

    /// Constant comparison curvature `G` and initial shape-operator bound
    /// `λ0 = h'(0)/h(0)` for which the chart satisfies the hypotheses of
    /// the given form, derived by hand:
    ///
    /// * horocylinder: radial curvatures are `-1` (horocycle direction) and
    ///   `0` (line direction); the level sets have shape operator
    ///   eigenvalues `-1` and `0`. Forward: `K ≥ -1`, `A ≤ 0`, so `G = 1`,
    ///   `λ0 = 0`. Reverse: `K ≤ 0`, `A ≥ -1`, so `G = 0`, `λ0 = -1`.
    /// * warped charts: `K = -h''/h` and `A = h'/h` exactly, so both forms
    ///   hold with `G = h''/h` and `λ0 = h'(0)/h(0)`.
    pub fn certificate(self, form: Form) -> Certificate {
        let (g, lambda0, note) = match (self, form) {
            (ChartId::H2xrHorocylinder, Form::Forward) => (1.0, 0.0, "K in {-1, 0} >= -1, A in {-1, 0} <= 0"),
            (ChartId::H2xrHorocylinder, Form::Reverse) => (0.0, -1.0, "K in {-1, 0} <= 0, A in {-1, 0} >= -1"),
            (ChartId::WarpedExp, _) => (1.0, 1.0, "K = -1, A = 1 identically"),
            (ChartId::WarpedCosh, _) => (1.0, 0.0, "K = -1, A = tanh(t), A(0) = 0"),
            (ChartId::Euclidean, _) => (0.0, 0.0, "flat, level planes"),
        };
        Certificate { chart: self, form, g, lambda0, note: note.to_string() }
    }

    /// `max | |∇ϱ| - 1 |` over `samples` seeded points, gradient by central
    /// differences.
    pub fn eikonal_defect(self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bx = self.sample_box();
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let p: Point = std::array::from_fn(|k| rng.random_range(bx[k].0..bx[k].1));
            let grad: [f64; 3] = std::array::from_fn(|k| {
                let eps = 1e-6 * p[k].abs().max(1.0);
                let (mut a, mut b) = (p, p);
                a[k] += eps;
                b[k] -= eps;
                (self.rho(&a) - self.rho(&b)) / (2.0 * eps)
            });
            let inv = inverse(&self.metric(&p));
            let norm2: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| inv[i][j] * grad[i] * grad[j]).sum();
            worst = worst.max((norm2.sqrt() - 1.0).abs());
        }
        worst
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChartId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChartId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::UnknownEntry(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub chart: ChartId,
    pub form: Form,
    pub g: f64,
    pub lambda0: f64,
    pub note: String,
}

impl Certificate {
    /// Solve `h'' = G h`, `h(0) = 1`, `h'(0) = λ0` over `[lo, hi]`.
    pub fn warping(&self, lo: f64, hi: f64) -> Result<WarpingFunction> {
        solve_jacobi(&CurvatureProfile::constant(self.g), 0.0, 1.0, self.lambda0, Horizon::new(lo.min(0.0), hi.max(0.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatchSpec {
    /// level set `ϱ = level`, parameters in `[-half_width, half_width]^2`
    Equidistant { level: f64, half_width: f64 },
    /// horocylinder chart: `z = α log y` over `x ∈ [-half_width, half_width]`,
    /// `log y ∈ [-depth, depth]`; warped and flat charts: `ϱ = α u`
    Tilted { alpha: f64, half_width: f64, depth: f64 },
    /// Euclidean chart only: round sphere of `radius` centred on the `z`
    /// axis at `center_height`, polar angle in `[0.3, 1.3]`, azimuth in `[0, 1.5]`
    Sphere { radius: f64, center_height: f64 },
}

impl PatchSpec {
    pub fn equidistant(level: f64) -> Self {
        PatchSpec::Equidistant { level, half_width: 1.0 }
    }

    pub fn tilted(alpha: f64) -> Self {
        PatchSpec::Tilted { alpha, half_width: 1.0, depth: 0.5 }
    }

    pub fn unit_sphere() -> Self {
        PatchSpec::Sphere { radius: 1.0, center_height: 0.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PatchSpec::Equidistant { .. } => "equidistant",
            PatchSpec::Tilted { .. } => "tilted",
            PatchSpec::Sphere { .. } => "sphere",
        }
    }

    fn domain(&self) -> [(f64, f64); 2] {
        match *self {
            PatchSpec::Equidistant { half_width, .. } => [(-half_width, half_width); 2],
            PatchSpec::Tilted { half_width, depth, .. } => [(-half_width, half_width), (-depth, depth)],
            PatchSpec::Sphere { .. } => [(0.3, 1.3), (0.0, 1.5)],
        }
    }

    fn map(&self, chart: ChartId, u: f64, v: f64) -> Result<Point> {
        Ok(match (*self, chart) {
            (PatchSpec::Equidistant { level, .. }, ChartId::H2xrHorocylinder) => [u, level.exp(), v],
            (PatchSpec::Equidistant { level, .. }, ChartId::Euclidean) => [u, v, level],
            (PatchSpec::Equidistant { level, .. }, _) => [level, u, v],
            (PatchSpec::Tilted { alpha, .. }, ChartId::H2xrHorocylinder) => [u, v.exp(), alpha * v],
            (PatchSpec::Tilted { alpha, .. }, ChartId::Euclidean) => [u, v, alpha * u],
            (PatchSpec::Tilted { alpha, .. }, _) => [alpha * u, u, v],
            (PatchSpec::Sphere { radius, center_height }, ChartId::Euclidean) => {
                [radius * u.sin() * v.cos(), radius * u.sin() * v.sin(), center_height + radius * u.cos()]
            }
            (PatchSpec::Sphere { .. }, c) => {
                return Err(Error::Precondition(format!("the sphere patch is only defined in the euclidean chart, not {c}")))
            }
        })
    }
}

/// Patch sampled on an `n × n` grid.
#[derive(Debug, Clone)]
pub struct SampledPatch {
    pub chart: ChartId,
    pub spec: PatchSpec,
    pub n: usize,
    /// parameter spacings `(du, dv)`
    pub spacing: [f64; 2],
    pub origin: [f64; 2],
    /// ambient coordinates, row-major in `(i, j)` with `u` along `i`
    pub points: Vec<Point>,
}

impl SampledPatch {
    pub fn new(chart: ChartId, spec: PatchSpec, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::TooFewSamples { needed: 5, got: n });
        }
        let dom = spec.domain();
        let du = (dom[0].1 - dom[0].0) / (n - 1) as f64;
        let dv = (dom[1].1 - dom[1].0) / (n - 1) as f64;
        let mut points = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = spec.map(chart, dom[0].0 + i as f64 * du, dom[1].0 + j as f64 * dv)?;
                if !chart.in_domain(&p) {
                    return Err(Error::PatchExitsTube { rho: chart.rho(&p) });
                }
                points.push(p);
            }
        }
        Ok(Self { chart, spec, n, spacing: [du, dv], origin: [dom[0].0, dom[1].0], points })
    }

    /// Largest parameter spacing.
    pub fn h_grid(&self) -> f64 {
        self.spacing[0].max(self.spacing[1])
    }

    pub fn parameter(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.spacing[0], self.origin[1] + j as f64 * self.spacing[1]]
    }

    fn at(&self, i: usize, j: usize) -> &Point {
        &self.points[i * self.n + j]
    }

    /// Tangent vectors `(X_u, X_v)` by central differences, `1 ≤ i, j ≤ n-2`.
    fn tangents(&self, i: usize, j: usize) -> [Point; 2] {
        let [du, dv] = self.spacing;
        [
            sub_scaled(self.at(i + 1, j), self.at(i - 1, j), 0.5 / du),
            sub_scaled(self.at(i, j + 1), self.at(i, j - 1), 0.5 / dv),
        ]
    }

    /// Induced metric at an interior node.
    pub fn induced_metric(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        let g = self.chart.metric(self.at(i, j));
        let [xu, xv] = self.tangents(i, j);
        [[inner(&g, &xu, &xu), inner(&g, &xu, &xv)], [inner(&g, &xu, &xv), inner(&g, &xv, &xv)]]
    }

    /// Mean curvature vector length `|H| = |tr II| / m` at an interior node.
    pub fn mean_curvature(&self, i: usize, j: usize) -> Result<f64> {
        let [du, dv] = self.spacing;
        let p = self.at(i, j);
        let g = self.chart.metric(p);
        let ginv = inverse(&g);
        let gamma = christoffel(self.chart, p);
        let [xu, xv] = self.tangents(i, j);
        let c = self.at(i, j);
        let second = |a: &Point, b: &Point, h: f64| -> Point { std::array::from_fn(|k| (a[k] - 2.0 * c[k] + b[k]) / (h * h)) };
        let xuu = second(self.at(i + 1, j), self.at(i - 1, j), du);
        let xvv = second(self.at(i, j + 1), self.at(i, j - 1), dv);
        let xuv: Point = std::array::from_fn(|k| {
            (self.at(i + 1, j + 1)[k] - self.at(i + 1, j - 1)[k] - self.at(i - 1, j + 1)[k] + self.at(i - 1, j - 1)[k])
                / (4.0 * du * dv)
        });
        let cov = |x: &Point, a: &Point, b: &Point| -> Point {
            std::array::from_fn(|k| {
                let mut s = x[k];
                for (l, al) in a.iter().enumerate() {
                    for (m, bm) in b.iter().enumerate() {
                        s += gamma[k][l][m] * al * bm;
                    }
                }
                s
            })
        };
        let duu = cov(&xuu, &xu, &xu);
        let dvv = cov(&xvv, &xv, &xv);
        let duv = cov(&xuv, &xu, &xv);
        // the cross product is a covector annihilating both tangents
        let co = cross(&xu, &xv);
        let nu: Point = std::array::from_fn(|k| (0..3).map(|l| ginv[k][l] * co[l]).sum());
        let len = inner(&g, &nu, &nu).sqrt();
        let ind = [[inner(&g, &xu, &xu), inner(&g, &xu, &xv)], [inner(&g, &xu, &xv), inner(&g, &xv, &xv)]];
        let det = ind[0][0] * ind[1][1] - ind[0][1] * ind[0][1];
        if !(det > 0.0) || !(len > 0.0) {
            return Err(Error::DegenerateMetric { i, j });
        }
        let (e, f, gg) = (inner(&g, &duu, &nu) / len, inner(&g, &duv, &nu) / len, inner(&g, &dvv, &nu) / len);
        let trace = (ind[1][1] * e - 2.0 * ind[0][1] * f + ind[0][0] * gg) / det;
        Ok((trace / SURFACE_DIM as f64).abs())
    }
}

/// `Δf = (1/√det γ) ∂_a(√det γ γ^{ab} ∂_b f)` with every derivative a
/// central difference. Returns an `n × n` array, `NaN` within two nodes of
/// the boundary.
pub fn discrete_laplace_beltrami(patch: &SampledPatch, f: &[f64]) -> Result<Vec<f64>> {
    let n = patch.n;
    if f.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: f.len() });
    }
    let [du, dv] = patch.spacing;
    // flux √det γ γ^{ab} ∂_b f and √det γ on the nodes one step inside
    let mut flux = vec![[f64::NAN; 2]; n * n];
    let mut vol = vec![f64::NAN; n * n];
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let m = patch.induced_metric(i, j);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::DegenerateMetric { i, j });
            }
            let sq = det.sqrt();
            let fu = (f[(i + 1) * n + j] - f[(i - 1) * n + j]) / (2.0 * du);
            let fv = (f[i * n + j + 1] - f[i * n + j - 1]) / (2.0 * dv);
            flux[i * n + j] = [sq * (m[1][1] * fu - m[0][1] * fv) / det, sq * (m[0][0] * fv - m[1][0] * fu) / det];
            vol[i * n + j] = sq;
        }
    }
    let mut out = vec![f64::NAN; n * n];
    for i in 2..n - 2 {
        for j in 2..n - 2 {
            let div = (flux[(i + 1) * n + j][0] - flux[(i - 1) * n + j][0]) / (2.0 * du)
                + (flux[i * n + j + 1][1] - flux[i * n + j - 1][1]) / (2.0 * dv);
            out[i * n + j] = div / vol[i * n + j];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub chart: ChartId,
    pub patch: PatchSpec,
    pub form: Form,
    /// nodes per side
    pub grid: usize,
    /// multiplies `|H|` before it enters the bound; values below 1 give
    /// negative controls
    #[serde(default = "unit")]
    pub mean_curvature_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl VerifyConfig {
    pub fn new(chart: ChartId, patch: PatchSpec, form: Form, grid: usize) -> Self {
        Self { chart, patch, form, grid, mean_curvature_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySample {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub laplacian: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub mean_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: VerifyConfig,
    pub certificate: Certificate,
    pub h_grid: f64,
    pub tolerance: f64,
    pub margin_min: f64,
    /// parameter point of the smallest margin
    pub margin_min_at: [f64; 2],
    pub max_abs_laplacian: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<GridConvergence>,
    #[serde(skip)]
    pub samples: Vec<InequalitySample>,
}

impl VerificationReport {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u,v,rho,laplacian,lhs,rhs,mean_curvature")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{},{},{},{}", s.u, s.v, s.rho, s.laplacian, s.lhs, s.rhs, s.mean_curvature)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConvergence {
    pub grids: Vec<usize>,
    pub margin_min: Vec<f64>,
    /// `max(0, -margin_min)`
    pub violation: Vec<f64>,
    /// `|margin_min(k+1) - margin_min(k)|`
    pub increments: Vec<f64>,
    /// violations never grow and increments never grow
    pub improving: bool,
}

/// Check the chosen inequality at every node two or more steps inside the
/// grid. Passes iff `min(lhs - rhs) ≥ -10 h_grid`.
pub fn verify_inequality(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let patch = SampledPatch::new(cfg.chart, cfg.patch, cfg.grid)?;
    let cert = cfg.chart.certificate(cfg.form);
    let rhos: Vec<f64> = patch.points.iter().map(|p| cfg.chart.rho(p)).collect();
    let lo = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rhos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = cert.warping(lo, hi)?;
    let pos = w.positivity();
    if let Some(&bad) = rhos.iter().find(|r| !pos.contains_open(**r)) {
        return Err(Error::PatchExitsTube { rho: bad });
    }
    let barrier: BarrierFunction = build_barrier(&w, 0.0, Truncation::None)?;
    let f: Vec<f64> = rhos.iter().map(|&r| barrier.value(r)).collect::<Result<_>>()?;
    let lap = discrete_laplace_beltrami(&patch, &f)?;
    let n = patch.n;
    let m = SURFACE_DIM as f64;
    let nn = AMBIENT_DIM as f64;
    let rows: Vec<Result<Vec<InequalitySample>>> = (2..n - 2)
        .into_par_iter()
        .map(|i| {
            (2..n - 2)
                .map(|j| {
                    let p = patch.at(i, j);
                    let rho = rhos[i * n + j];
                    let h = w.h(rho)?;
                    let ld = w.log_derivative(rho)?;
                    let hd = cfg.chart.equidistant_mean_curvature(p);
                    let hm = cfg.mean_curvature_scale * patch.mean_curvature(i, j)?;
                    let rhs = match cfg.form {
                        Form::Forward => (nn - 1.0) * hd - (nn - 1.0) * ld - m * hm + m * ld,
                        Form::Reverse => m * (ld - hm),
                    };
                    let [u, v] = patch.parameter(i, j);
                    let laplacian = lap[i * n + j];
                    Ok(InequalitySample { u, v, rho, laplacian, lhs: laplacian / h, rhs, mean_curvature: hm })
                })
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity((n - 4) * (n - 4));
    for row in rows {
        samples.extend(row?);
    }
    let mut margin_min = f64::INFINITY;
    let mut at = [f64::NAN; 2];
    let mut max_abs_laplacian = 0.0f64;
    for s in &samples {
        let margin = s.lhs - s.rhs;
        if margin < margin_min || margin.is_nan() {
            margin_min = margin;
            at = [s.u, s.v];
        }
        max_abs_laplacian = max_abs_laplacian.max(s.laplacian.abs());
    }
    let h_grid = patch.h_grid();
    let tolerance = tolerances::INEQUALITY_GRID_FACTOR * h_grid;
    Ok(VerificationReport {
        config: *cfg,
        certificate: cert,
        h_grid,
        tolerance,
        margin_min,
        margin_min_at: at,
        max_abs_laplacian,
        pass: margin_min >= -tolerance,
        convergence: None,
        samples,
    })
}

/// Forward form for the given chart and patch.
pub fn verify_forward_inequality(chart: ChartId, patch: PatchSpec, grid: usize) -> Result<VerificationReport> {
    verify_inequality(&VerifyConfig::new(chart, patch, Form::Forward, grid))
}

/// Reverse form for the given chart and patch.
pub fn verify_reverse_inequality(chart: ChartId, patch: PatchSpec, grid: usize) -> Result<VerificationReport> {
    verify_inequality(&VerifyConfig::new(chart, patch, Form::Reverse, grid))
}

/// Run `cfg` at each grid size and collect the smallest margins. The
/// returned report is the one at the first grid, with `convergence` set.
pub fn verify_with_refinement(cfg: &VerifyConfig, grids: &[usize]) -> Result<VerificationReport> {
    let first = *grids.first().ok_or_else(|| Error::Precondition("no grids given".into()))?;
    let reports: Vec<VerificationReport> =
        grids.iter().map(|&g| verify_inequality(&VerifyConfig { grid: g, ..*cfg })).collect::<Result<_>>()?;
    let margin_min: Vec<f64> = reports.iter().map(|r| r.margin_min).collect();
    let violation: Vec<f64> = margin_min.iter().map(|m| (-m).max(0.0)).collect();
    let increments: Vec<f64> = margin_min.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let improving = violation.windows(2).all(|w| w[1] <= w[0]) && increments.windows(2).all(|w| w[1] <= w[0]);
    let mut report = reports.into_iter().next().expect("at least one grid");
    debug_assert_eq!(report.config.grid, first);
    report.convergence = Some(GridConvergence { grids: grids.to_vec(), margin_min, violation, increments, improving });
    Ok(report)
}

fn diag(a: f64, b: f64, c: f64) -> Mat3 {
    [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
}

fn inner(g: &Mat3, a: &Point, b: &Point) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += g[i][j] * a[i] * b[j];
        }
    }
    s
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub_scaled(a: &Point, b: &Point, s: f64) -> Point {
    std::array::from_fn(|k| (a[k] - b[k]) * s)
}

fn inverse(m: &Mat3) -> Mat3 {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    std::array::from_fn(|i| std::array::from_fn(|j| c(j, i) / det))
}

/// `Γ^k_{ij}` from central differences of the metric.
fn christoffel(chart: ChartId, p: &Point) -> [[[f64; 3]; 3]; 3] {
    let dg: [Mat3; 3] = std::array::from_fn(|l| {
        let eps = 1e-5 * p[l].abs().max(1.0);
        let (mut a, mut b) = (*p, *p);
        a[l] += eps;
        b[l] -= eps;
        let (ga, gb) = (chart.metric(&a), chart.metric(&b));
        std::array::from_fn(|i| std::array::from_fn(|j| (ga[i][j] - gb[i][j]) / (2.0 * eps)))
    });
    let ginv = inverse(&chart.metric(p));
    std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                0.5 * (0..3).map(|l| ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])).sum::<f64>()
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eikonal_on_registry() {
        for c in ChartId::ALL {
            assert!(c.eikonal_defect(1000, 7) < tolerances::EIKONAL, "{c}");
            assert_eq!(c.name().parse::<ChartId>().unwrap(), c);
        }
        assert!("klein-bottle".parse::<ChartId>().is_err());
    }

    #[test]
    fn equidistant_mean_curvature_matches_laplacian_of_rho() {
        // Δϱ = (1/√g) ∂_i(√g g^{ij} ∂_j ϱ) by nested central differences
        let lap = |c: ChartId, p: Point| {
            let e = 1e-4;
            let flux = |q: Point, i: usize| {
                let g = c.metric(&q);
                let det = g[0][0] * g[1][1] * g[2][2];
                let inv = inverse(&g);
                let mut a = q;
                let mut b = q;
                a[i] += e;
                b[i] -= e;
                det.sqrt() * inv[i][i] * (c.rho(&a) - c.rho(&b)) / (2.0 * e)
            };
            let g = c.metric(&p);
            let mut s = 0.0;
            for i in 0..3 {
                let mut a = p;
                let mut b = p;
                a[i] += e;
                b[i] -= e;
                s += (flux(a, i) - flux(b, i)) / (2.0 * e);
            }
            s / (g[0][0] * g[1][1] * g[2][2]).sqrt()
        };
        for c in ChartId::ALL {
            for p in [[0.3, 1.2, -0.4], [-0.7, 0.6, 1.1]] {
                let hd = c.equidistant_mean_curvature(&p);
                assert!((lap(c, p) / 2.0 - hd).abs() < 1e-5, "{c}");
            }
        }
    }

    #[test]
    fn laplace_beltrami_examples() {
        let flat = SampledPatch::new(ChartId::Euclidean, PatchSpec::equidistant(0.0), 33).unwrap();
        let f: Vec<f64> = flat.points.iter().map(|p| p[0] * p[0]).collect();
        let lap = discrete_laplace_beltrami(&flat, &f).unwrap();
        assert!(lap.iter().filter(|x| !x.is_nan()).all(|x| (x - 2.0).abs() < 1e-10));
        let constant = vec![3.5; f.len()];
        let lap = discrete_laplace_beltrami(&flat, &constant).unwrap();
        assert!(lap.iter().filter(|x| !x.is_nan()).all(|x| *x == 0.0));

        let mut errs = vec![];
        for n in [65, 129] {
            let sphere = SampledPatch::new(ChartId::Euclidean, PatchSpec::unit_sphere(), n).unwrap();
            let f: Vec<f64> = sphere.points.iter().map(|p| p[2]).collect();
            let lap = discrete_laplace_beltrami(&sphere, &f).unwrap();
            let err = lap
                .iter()
                .zip(&f)
                .filter(|(l, _)| !l.is_nan())
                .map(|(l, z)| (l + 2.0 * z).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 1e-2 && errs[1] < errs[0] / 3.0, "{errs:?}");
        assert!(discrete_laplace_beltrami(&flat, &[0.0; 3]).is_err());
    }

    #[test]
    fn mean_curvature_of_known_surfaces() {
        let sphere = SampledPatch::new(ChartId::Euclidean, PatchSpec::Sphere { radius: 2.0, center_height: 0.0 }, 65).unwrap();
        assert!((sphere.mean_curvature(30, 30).unwrap() - 0.5).abs() < 1e-3);
        let horo = SampledPatch::new(ChartId::WarpedExp, PatchSpec::equidistant(0.3), 17).unwrap();
        assert!((horo.mean_curvature(8, 8).unwrap() - 1.0).abs() < 1e-8);
        let horocyl = SampledPatch::new(ChartId::H2xrHorocylinder, PatchSpec::equidistant(0.2), 17).unwrap();
        assert!((horocyl.mean_curvature(8, 8).unwrap() - 0.5).abs() < 1e-8);
        // z = α log y: one principal curvature α/√(1+α^2), the other 0
        let tilted = SampledPatch::new(ChartId::H2xrHorocylinder, PatchSpec::tilted(1.0), 129).unwrap();
        assert!((tilted.mean_curvature(64, 64).unwrap() - 0.5 / 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn equality_case_on_equidistants() {
        for chart in [ChartId::WarpedExp, ChartId::WarpedCosh, ChartId::Euclidean] {
            let r = verify_forward_inequality(chart, PatchSpec::equidistant(0.4), 65).unwrap();
            assert!(r.pass, "{chart}: {}", r.margin_min);
            assert!(r.max_abs_laplacian <= 10.0 * r.h_grid * r.h_grid);
            assert!(r.margin_min.abs() < 1e-6, "{chart}: {}", r.margin_min);
        }
    }

    #[test]
    fn tilted_reverse_margin() {
        let cfg = VerifyConfig::new(ChartId::H2xrHorocylinder, PatchSpec::tilted(1.0), Form::Reverse, 65);
        let r = verify_inequality(&cfg).unwrap();
        assert!(r.pass);
        // Δf/h = (h'/h - 1)/2 and |H| = 1/(2√2) with h = 1 - ϱ, so the
        // margin is 3/(2(1-ϱ)) + 1/√2 - 1/2, smallest at the lowest level
        let rho = r.samples.iter().map(|s| s.rho).fold(f64::INFINITY, f64::min);
        let exact = 1.5 / (1.0 - rho) + 0.5f64.sqrt() - 0.5;
        assert!((r.margin_min - exact).abs() < 1e-3, "{} vs {exact}", r.margin_min);
        let r0 = r.samples.iter().min_by(|a, b| a.rho.abs().total_cmp(&b.rho.abs())).unwrap();
        assert!((r0.lhs - r0.rhs - (1.0 + 0.5f64.sqrt())).abs() < 1e-2);
    }

    #[test]
    fn negative_control_fails() {
        let mut cfg = VerifyConfig::new(ChartId::WarpedExp, PatchSpec::equidistant(0.0), Form::Forward, 65);
        cfg.mean_curvature_scale = 0.5;
        let r = verify_inequality(&cfg).unwrap();
        assert!(!r.pass);
        assert!((r.margin_min + 1.0).abs() < 1e-6);
    }

    #[test]
    fn tube_and_patch_errors() {
        // h = 1 - ϱ vanishes at ϱ = 1
        let r = verify_reverse_inequality(ChartId::H2xrHorocylinder, PatchSpec::equidistant(1.5), 17);
        assert!(matches!(r, Err(Error::PatchExitsTube { .. })));
        assert!(SampledPatch::new(ChartId::WarpedExp, PatchSpec::unit_sphere(), 17).is_err());
        let r = SampledPatch::new(ChartId::H2xrHorocylinder, PatchSpec::Tilted { alpha: 1.0, half_width: 1.0, depth: 800.0 }, 9);
        assert!(r.is_err());
    }

    #[test]
    fn refinement_report() {
        let cfg = VerifyConfig::new(ChartId::Euclidean, PatchSpec::unit_sphere(), Form::Forward, 33);
        let r = verify_with_refinement(&cfg, &[33, 65, 129]).unwrap();
        let c = r.convergence.unwrap();
        assert!(r.pass && c.improving, "{c:?}");
        assert_eq!(c.margin_min.len(), 3);
    }
}
