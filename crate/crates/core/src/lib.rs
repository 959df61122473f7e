//! Comparison geometry along geodesics.

pub mod cmc;
pub mod error;
pub mod estimates;
mod float_serde;
pub mod linalg;
pub mod ode;
pub mod profile;
pub mod report;
pub mod riccati;
pub mod stochastic;
pub mod tolerances;
pub mod verifier;
pub mod warping;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use profile::{ClosedForm, CurvatureProfile, Domain, Interpolation, ProfileKind};
pub use report::{ComparisonReport, Verdict};
pub use warping::{
    build_barrier, inf_log_derivative, solve_jacobi, sturm_compare, BarrierFunction, BarrierKind, ExactWarping,
    Horizon, PositivityInterval, RadialWarping, Truncation, WarpingFunction,
};
pub use riccati::{
    integrate_riccati, model_warping, verify_hessian_comparison, BoundSide, CurvatureOperatorPath, Direction,
    RiccatiState,
};
pub use estimates::{evaluate as evaluate_scenario, Ambient, Estimate, EstimateReport, Initial, Scenario, Tube};
pub use stochastic::{
    check_criterion, simulate_radial_diffusion, survival_curve, Completeness, CriterionVerdict, DiffusionConfig,
    ExplosionStats, IntegralClass, Simulation,
};
pub use cmc::{
    build_cmc_sphere, critical_radius, f_ratio, flux, integrate_profile, verify_profile_mean_curvature, CmcParams,
    MeanCurvatureReport, ProfileCurve, ProfileSample, Regime,
};
pub use verifier::{
    discrete_laplace_beltrami, verify_forward_inequality, verify_inequality, verify_reverse_inequality,
    verify_with_refinement, Certificate, ChartId, Form, GridConvergence, PatchSpec, SampledPatch, VerificationReport,
    VerifyConfig,
};
