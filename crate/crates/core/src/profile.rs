//! Curvature-bound functions `G(t)` with derivative access.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval on which a profile may be evaluated. `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Domain {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl Domain {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo: Some(lo), hi: Some(hi) }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo.is_none_or(|lo| t >= lo) && self.hi.is_none_or(|hi| t <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Cubic Hermite with centred finite-difference slopes.
    Cubic,
}

/// Named closed-form profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// `1 + t^2`
    OnePlusTSquared,
    /// `(1 + t)^6`, taken at `|t|`
    OnePlusTSixth,
    /// `16 t^6 + 12 t^2`, the profile whose even solution is `exp(t^4)`
    QuarticExponential,
    /// `1 + P sin^2(t)`, an even bounded oscillating profile with `P = 1`
    OnePlusSinSquared,
}

impl ClosedForm {
    fn value(self, t: f64) -> f64 {
        match self {
            ClosedForm::OnePlusTSquared => 1.0 + t * t,
            ClosedForm::OnePlusTSixth => (1.0 + t.abs()).powi(6),
            ClosedForm::QuarticExponential => 16.0 * t.powi(6) + 12.0 * t * t,
            ClosedForm::OnePlusSinSquared => 1.0 + t.sin().powi(2),
        }
    }

    fn derivative(self, t: f64) -> f64 {
        match self {
            ClosedForm::OnePlusTSquared => 2.0 * t,
            ClosedForm::OnePlusTSixth => 6.0 * (1.0 + t.abs()).powi(5) * t.signum(),
            ClosedForm::QuarticExponential => 96.0 * t.powi(5) + 24.0 * t,
            ClosedForm::OnePlusSinSquared => (2.0 * t).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Constant {
        k: f64,
    },
    /// `sum_i coeffs[i] t^i`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `scale * t^2 * prod_{i=1..depth} (log^(i) t)^2` for `t >= t_min`,
    /// held constant below `t_min`.
    PowerLog {
        #[serde(default = "one")]
        scale: f64,
        depth: u32,
    },
    Tabulated {
        t: Vec<f64>,
        g: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
    ClosedForm {
        name: ClosedForm,
    },
}

fn one() -> f64 {
    1.0
}

/// A curvature bound `G` on a declared domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    #[serde(flatten)]
    pub kind: ProfileKind,
    #[serde(default)]
    pub domain: Domain,
}

impl CurvatureProfile {
    pub fn constant(k: f64) -> Self {
        Self { kind: ProfileKind::Constant { k }, domain: Domain::unbounded() }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self { kind: ProfileKind::Polynomial { coeffs }, domain: Domain::unbounded() }
    }

    pub fn power_log(scale: f64, depth: u32) -> Self {
        Self { kind: ProfileKind::PowerLog { scale, depth }, domain: Domain::unbounded() }
    }

    pub fn closed_form(name: ClosedForm) -> Self {
        Self { kind: ProfileKind::ClosedForm { name }, domain: Domain::unbounded() }
    }

    pub fn tabulated(t: Vec<f64>, g: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        let p = Self {
            domain: Domain::new(
                *t.first().ok_or_else(|| Error::InvalidProfile("empty table".into()))?,
                *t.last().unwrap(),
            ),
            kind: ProfileKind::Tabulated { t, g, interpolation },
        };
        p.validate()?;
        Ok(p)
    }

    /// Seeded pair of piecewise-linear tables on `[0, extent]` with
    /// `G1 <= G2` at every node, hence everywhere: `G1` uniform in
    /// `[-1, 2]`, `G2 - G1` uniform in `[0, 1.5]`.
    pub fn random_ordered_pair(seed: u64, extent: f64, nodes: usize) -> Result<(Self, Self)> {
        if nodes < 2 || !(extent > 0.0) {
            return Err(Error::InvalidProfile(format!("need at least 2 nodes on a positive extent, got {nodes} on {extent}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<f64> = (0..nodes).map(|j| extent * j as f64 / (nodes - 1) as f64).collect();
        let g1: Vec<f64> = (0..nodes).map(|_| rng.random_range(-1.0..2.0)).collect();
        let g2: Vec<f64> = g1.iter().map(|g| g + rng.random_range(0.0..1.5)).collect();
        Ok((
            Self::tabulated(t.clone(), g1, Interpolation::Linear)?,
            Self::tabulated(t, g2, Interpolation::Linear)?,
        ))
    }

    /// Check the structural invariants: finite parameters, strictly
    /// increasing tables.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProfileKind::Constant { k } if !k.is_finite() => {
                Err(Error::InvalidProfile(format!("constant {k} is not finite")))
            }
            ProfileKind::Polynomial { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::InvalidProfile("polynomial coefficient not finite".into()))
            }
            ProfileKind::PowerLog { scale, .. } if !(scale.is_finite() && *scale > 0.0) => {
                Err(Error::InvalidProfile("power_log scale must be positive".into()))
            }
            ProfileKind::Tabulated { t, g, .. } => {
                if t.len() != g.len() || t.len() < 2 {
                    return Err(Error::InvalidProfile(
                        "table needs at least two (t, G) pairs of equal length".into(),
                    ));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidProfile("table abscissae must be strictly increasing".into()));
                }
                if t.iter().chain(g.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProfile("table contains non-finite entries".into()));
                }
                let (lo, hi) = (t[0], t[t.len() - 1]);
                if self.domain.lo.is_none_or(|d| d < lo) || self.domain.hi.is_none_or(|d| d > hi) {
                    return Err(Error::InvalidProfile(format!(
                        "tabulated domain must lie inside [{lo}, {hi}]"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `G(t)`. Callers are expected to stay on the domain; see
    /// [`CurvatureProfile::checked_value`].
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { k } => *k,
            ProfileKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            ProfileKind::PowerLog { scale, depth } => power_log_value(*scale, *depth, t),
            ProfileKind::Tabulated { t: ts, g, interpolation } => table_value(ts, g, *interpolation, t).0,
            ProfileKind::ClosedForm { name } => name.value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
            ProfileKind::PowerLog { scale, depth } => power_log_derivative(*scale, *depth, t),
            ProfileKind::Tabulated { t: ts, g, interpolation } => table_value(ts, g, *interpolation, t).1,
            ProfileKind::ClosedForm { name } => name.derivative(t),
        }
    }

    /// Points where `G` is continuous but not smooth. Integrators stop on
    /// them so no interpolation segment straddles a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ProfileKind::PowerLog { depth, .. } => {
                let tm = power_log_t_min(*depth);
                vec![-tm, 0.0, tm]
            }
            ProfileKind::Tabulated { t, interpolation: Interpolation::Linear, .. } => t.clone(),
            ProfileKind::ClosedForm { name: ClosedForm::OnePlusTSixth } => vec![0.0],
            _ => Vec::new(),
        }
    }

    pub fn checked_value(&self, t: f64) -> Result<f64> {
        if !self.domain.contains(t) {
            return Err(Error::OutsideDomain { t });
        }
        let v = self.value(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OutsideDomain { t })
        }
    }

    /// Sampled evenness test on `[0, extent]`, restricted to the domain.
    pub fn is_even(&self, extent: f64, samples: usize) -> bool {
        (0..=samples).all(|j| {
            let t = extent * j as f64 / samples as f64;
            if !(self.domain.contains(t) && self.domain.contains(-t)) {
                return false;
            }
            let (a, b) = (self.value(t), self.value(-t));
            (a - b).abs() <= 1e-12 * (1.0 + a.abs())
        })
    }
}

/// Lower cutoff of the power-log family: every iterated logarithm up to
/// `depth` is positive from here on. This is 3 for depths 1 and 2.
pub fn power_log_t_min(depth: u32) -> f64 {
    // log^(k)(t) > 0 iff t > exp^(k-1)(1)
    let mut tower = 1.0f64;
    for _ in 1..depth {
        tower = tower.exp();
    }
    (tower + 1.0).max(3.0)
}

fn iterated_logs(depth: u32, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(depth as usize);
    let mut x = t;
    for _ in 0..depth {
        x = x.ln();
        out.push(x);
    }
    out
}

fn power_log_value(scale: f64, depth: u32, t: f64) -> f64 {
    let t = t.abs().max(power_log_t_min(depth));
    let logs = iterated_logs(depth, t);
    scale * t * t * logs.iter().map(|l| l * l).product::<f64>()
}

fn power_log_derivative(scale: f64, depth: u32, t: f64) -> f64 {
    let tm = power_log_t_min(depth);
    if t.abs() <= tm {
        return 0.0;
    }
    let s = t.signum();
    let t = t.abs();
    // d/dt log G = 2/t + sum_i 2 (log^(i))' / log^(i)
    let logs = iterated_logs(depth, t);
    let mut dlog = 2.0 / t;
    let mut chain = 1.0 / t; // derivative of log^(1)
    for (i, l) in logs.iter().enumerate() {
        if i > 0 {
            chain /= logs[i - 1];
        }
        dlog += 2.0 * chain / l;
    }
    s * power_log_value(scale, depth, t) * dlog
}

fn table_value(ts: &[f64], g: &[f64], interp: Interpolation, t: f64) -> (f64, f64) {
    let n = ts.len();
    let k = ts.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
    let (t0, t1) = (ts[k], ts[k + 1]);
    let h = t1 - t0;
    let s = (t - t0) / h;
    match interp {
        Interpolation::Linear => (g[k] + s * (g[k + 1] - g[k]), (g[k + 1] - g[k]) / h),
        Interpolation::Cubic => {
            let slope = |i: usize| -> f64 {
                if i == 0 {
                    (g[1] - g[0]) / (ts[1] - ts[0])
                } else if i == n - 1 {
                    (g[n - 1] - g[n - 2]) / (ts[n - 1] - ts[n - 2])
                } else {
                    (g[i + 1] - g[i - 1]) / (ts[i + 1] - ts[i - 1])
                }
            };
            let (m0, m1) = (slope(k), slope(k + 1));
            let s2 = s * s;
            let s3 = s2 * s;
            let v = (2.0 * s3 - 3.0 * s2 + 1.0) * g[k]
                + (s3 - 2.0 * s2 + s) * h * m0
                + (-2.0 * s3 + 3.0 * s2) * g[k + 1]
                + (s3 - s2) * h * m1;
            let d = ((6.0 * s2 - 6.0 * s) * g[k] + (-6.0 * s2 + 6.0 * s) * g[k + 1]) / h
                + (3.0 * s2 - 4.0 * s + 1.0) * m0
                + (3.0 * s2 - 2.0 * s) * m1;
            (v, d)
        }
    }
}
