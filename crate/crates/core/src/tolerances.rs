//! Numerical tolerances shared by the solvers, the verifiers and the
//! acceptance battery. Every threshold used to decide PASS/FAIL lives here.

/// Relative tolerance of the embedded Runge-Kutta pair.
pub const ODE_RTOL: f64 = 1e-10;
/// Absolute tolerance of the embedded Runge-Kutta pair.
pub const ODE_ATOL: f64 = 1e-12;

/// Bisection stopping width for zeros of `h` and for critical radii.
pub const ROOT_WIDTH: f64 = 1e-12;

/// Bound on `|h'' - G h| / (1 + |h|)` at dense-output sample points. The
/// derivative of a cubic Hermite interpolant is only third-order accurate,
/// so this sits well above the integrator tolerance.
pub const ODE_RESIDUAL: f64 = 1e-6;

/// Default allowance on Sturm ratio ordering, relative to `max(1, |h2'/h2|)`.
pub const STURM: f64 = 1e-7;

/// Default allowance on the Riccati eigenvalue margin.
pub const COMPARE: f64 = 1e-6;

/// Eigenvalue magnitude at which the Riccati flow is declared to blow up.
pub const RICCATI_BLOWUP: f64 = 1e6;

/// Symmetry drift allowed along a Riccati integration.
pub const SYMMETRY: f64 = 1e-9;

/// Flux conservation along rotational CMC profiles.
pub const FLUX: f64 = 1e-6;

/// Mean-curvature re-verification of sampled CMC profiles.
pub const CMC_MEAN_CURVATURE: f64 = 1e-4;

/// Bound formulas that reduce to floating-point arithmetic on exact inputs.
pub const BOUND: f64 = 1e-12;

/// Eikonal check `| |grad rho| - 1 |` on chart registry entries.
pub const EIKONAL: f64 = 1e-8;

/// Inequality verification allowance is `INEQUALITY_GRID_FACTOR * h_grid`.
pub const INEQUALITY_GRID_FACTOR: f64 = 10.0;

/// Scalar-curvature predicates are evaluated where `rho >= this`.
pub const SCALAR_CURVATURE_THRESHOLD: f64 = 10.0;
