//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) with
//! cubic Hermite dense output on the accepted steps.
//!
//! The engine is shared by the Jacobi solver, the matrix Riccati flow and
//! the rotational CMC profile code. Systems are small, so states are plain
//! `Vec<f64>`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on accepted step length. It also bounds the cubic
    /// Hermite interpolation error, which is O(step^4).
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 1e-2,
            min_step: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
pub enum OdeError {
    #[error("step size underflow at t = {last_t}")]
    StepSizeUnderflow { last_t: f64 },
    #[error("non-finite state encountered after t = {last_t}")]
    NonFinite { last_t: f64 },
    #[error("step budget exhausted at t = {last_t}")]
    TooManySteps { last_t: f64 },
}

impl OdeError {
    pub fn last_t(&self) -> f64 {
        match *self {
            OdeError::StepSizeUnderflow { last_t }
            | OdeError::NonFinite { last_t }
            | OdeError::TooManySteps { last_t } => last_t,
        }
    }
}

/// What the step observer wants the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    /// The observer rewrote the state in place; the derivative is re-evaluated.
    Modified,
    /// Stop after this step. The step is kept in the trajectory.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

/// Accepted steps of one integration, ordered along the direction of
/// integration (which may be backwards in t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    knots: Vec<Knot>,
}

impl Trajectory {
    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn dim(&self) -> usize {
        self.knots[0].y.len()
    }

    /// Append a continuation starting where this trajectory ends; its first
    /// knot duplicates our last one and is dropped.
    pub fn extend(&mut self, next: Trajectory) {
        self.knots.extend(next.knots.into_iter().skip(1));
    }

    pub fn t_start(&self) -> f64 {
        self.knots[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.knots[self.knots.len() - 1].t
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t_start()
    }

    /// Whether `t` lies in the closed range covered by the trajectory.
    pub fn covers(&self, t: f64) -> bool {
        let (a, b) = (self.t_start(), self.t_end());
        t >= a.min(b) && t <= a.max(b)
    }

    /// Index `k` of the segment [knot k, knot k+1] containing `t`.
    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        if n < 2 {
            return 0;
        }
        let fwd = self.forward();
        // first knot strictly past t in the direction of integration
        let idx = self.knots.partition_point(|k| if fwd { k.t <= t } else { k.t >= t });
        idx.clamp(1, n - 1) - 1
    }

    /// Dense output of every component at `t`. Values outside the covered
    /// range are extrapolated from the nearest segment.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.knots.len() == 1 {
            out.copy_from_slice(&self.knots[0].y);
            return;
        }
        let k = self.segment(t);
        let (a, b) = (&self.knots[k], &self.knots[k + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        for i in 0..out.len() {
            out[i] = h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i];
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        if self.knots.len() == 1 {
            return self.knots[0].y[i];
        }
        let k = self.segment(t);
        let (a, b) = (&self.knots[k], &self.knots[k + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i]
    }

    /// Exact integral of the Hermite interpolant of component `i` over
    /// segment `k`.
    pub fn segment_integral(&self, k: usize, i: usize) -> f64 {
        let (a, b) = (&self.knots[k], &self.knots[k + 1]);
        let h = b.t - a.t;
        h * (0.5 * (a.y[i] + b.y[i]) + h * (a.dy[i] - b.dy[i]) / 12.0)
    }

    /// Integral of the interpolant of component `i` from the segment start
    /// to `t` within segment `k`.
    pub fn partial_segment_integral(&self, k: usize, i: usize, t: f64) -> f64 {
        let (a, b) = (&self.knots[k], &self.knots[k + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        // antiderivatives of the Hermite basis, in units of s
        let i00 = 0.5 * s4 - s3 + s;
        let i10 = 0.25 * s4 - 2.0 / 3.0 * s3 + 0.5 * s2;
        let i01 = -0.5 * s4 + s3;
        let i11 = 0.25 * s4 - s3 / 3.0;
        h * (i00 * a.y[i] + i10 * h * a.dy[i] + i01 * b.y[i] + i11 * h * b.dy[i])
    }

    pub fn segment_index(&self, t: f64) -> usize {
        self.segment(t)
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights: b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `observer` sees every accepted step and may rewrite the state or stop
/// the integration.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &mut [f64]) -> StepControl,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut f = vec![0.0; n];
    rhs(t0, &y, &mut f);
    let mut knots = vec![Knot { t: t0, y: y.clone(), dy: f.clone() }];
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(Trajectory { knots });
    }
    let dir = span.signum();

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut t = t0;
    let mut h = opts.max_step.min(span.abs()).min(1e-3);
    let mut steps = 0usize;
    let mut rejected_last = false;

    while dir * (t_end - t) > 0.0 {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps { last_t: t });
        }
        steps += 1;
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = dir * h;

        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * f[i];
        }
        rhs(t + C2 * hs, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * f[i] + A32 * k2[i]);
        }
        rhs(t + C3 * hs, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * f[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * hs, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * hs, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i]
                + hs * (A61 * f[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + hs, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + hs * (B1 * f[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let t_new = if last { t_end } else { t + hs };
        rhs(t_new, &y_new, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // shrink and retry; give up once the step collapses
            h *= 0.25;
            if h < opts.min_step {
                return Err(OdeError::NonFinite { last_t: t });
            }
            rejected_last = true;
            continue;
        }

        if err <= 1.0 {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut f, &mut k7);
            let control = observer(t, &mut y);
            if control == StepControl::Modified {
                rhs(t, &y, &mut f);
            }
            knots.push(Knot { t, y: y.clone(), dy: f.clone() });
            if control == StepControl::Stop || last {
                break;
            }
            let mut factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            factor = factor.clamp(0.2, 5.0);
            if rejected_last {
                factor = factor.min(1.0);
            }
            rejected_last = false;
            h = (h * factor).min(opts.max_step);
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= factor;
            rejected_last = true;
            if h < opts.min_step {
                return Err(OdeError::StepSizeUnderflow { last_t: t });
            }
        }
    }
    Ok(Trajectory { knots })
}
