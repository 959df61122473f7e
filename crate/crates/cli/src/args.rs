//! Command-line flags and their translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use compgeo_core::riccati::{BoundSide, CurvatureOperatorPath, Direction};
use compgeo_core::{ChartId, CurvatureProfile, ExactWarping, Form, PatchSpec, Scenario, VerifyConfig};
use serde::de::DeserializeOwned;

use crate::config::{
    read_json, BmParams, CmcRun, Command, JacobiParams, Outputs, RiccatiParams, RunConfig, ToleranceOverrides,
    VerifyRun,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "compgeo", version, about = "Comparison geometry experiments")]
pub struct Cli {
    /// machine-readable JSON on stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// run from a saved config instead of flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// print the resolved config as JSON and exit
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// defaults to $COMPGEO_SEED, then 42
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// CSV output (directory for `suite`)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_compare: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_flux: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_cmc: Option<f64>,
    #[arg(long, global = true, value_name = "FACTOR")]
    pub tol_grid_factor: Option<f64>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Solve h'' = G h and report its positivity interval
    Jacobi(JacobiArgs),
    /// Integrate the Riccati flow and check the Hessian comparison
    Riccati(RiccatiArgs),
    /// Evaluate a mean-curvature lower bound
    Bound(BoundArgs),
    /// Decide the completeness criterion for a curvature profile
    Criterion(CriterionArgs),
    /// Simulate the radial diffusion on a model
    Bm(BmArgs),
    /// Integrate a rotational constant mean curvature profile
    Cmc(CmcArgs),
    /// Check a Laplacian comparison inequality on a sampled patch
    Verify(VerifyArgs),
    /// Run the acceptance battery
    Suite,
}

#[derive(Debug, Args)]
pub struct JacobiArgs {
    /// closed-form model (sinh, sin, exp, cosh, linear, exp_quartic)
    #[arg(long, conflicts_with_all = ["constant", "profile"])]
    pub model: Option<String>,
    /// constant G
    #[arg(long, allow_hyphen_values = true, conflicts_with = "profile")]
    pub constant: Option<f64>,
    /// curvature profile JSON
    #[arg(long, value_name = "FILE")]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dh0: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct RiccatiArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// scalar operator R = k Id; a seeded saturating path when omitted
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// constant curvature bound G
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub bound: f64,
    /// lower or upper
    #[arg(long, default_value = "lower")]
    pub direction: String,
    /// A0 = a0 Id
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a0: f64,
    #[arg(long, default_value_t = 3.0)]
    pub t1: f64,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
}

#[derive(Debug, Args)]
pub struct CriterionArgs {
    /// curvature profile JSON
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    pub profile: Option<PathBuf>,
    /// profile of a closed-form model
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 100.0)]
    pub tail: f64,
}

#[derive(Debug, Args)]
pub struct BmArgs {
    #[arg(long, default_value = "sinh")]
    pub model: String,
    /// drift from the numerical Jacobi solution instead of the closed form
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long = "T", default_value_t = 5.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e3)]
    pub explosion_radius: f64,
}

#[derive(Debug, Args)]
pub struct CmcArgs {
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long = "H", allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 5.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 0.01)]
    pub spacing: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub chart: String,
    /// equidistant, tilted or sphere
    #[arg(long, default_value = "equidistant")]
    pub patch: String,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub level: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// forward or reverse; defaults to reverse for tilted patches
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// factor on |H| (below 1 gives a negative control)
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// additional grid sizes for a convergence table
    #[arg(long, value_delimiter = ',')]
    pub refine: Vec<usize>,
}

/// A unit enum variant from its snake_case name; `-` is accepted for `_`.
fn unit_variant<T: DeserializeOwned>(what: &str, name: &str) -> CliResult<T> {
    let v = serde_json::Value::String(name.replace('-', "_"));
    serde_json::from_value(v).map_err(|_| CliError::Usage(format!("unknown {what} `{name}`")))
}

fn model(name: &str) -> CliResult<ExactWarping> {
    let v = serde_json::json!({ "model": name.replace('-', "_") });
    serde_json::from_value(v).map_err(|_| {
        CliError::Usage(format!("unknown model `{name}` (sinh, sin, exp, cosh, linear, exp_quartic)"))
    })
}

impl Cli {
    /// Resolve flags, or the file named by `--config`, into a run.
    pub fn into_config(self) -> CliResult<RunConfig> {
        let mut cfg = match (&self.config, self.command) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(sub)) => RunConfig::new(sub.into_command(self.seed)?),
            (None, None) => return Err(CliError::Usage("a subcommand or --config FILE is required".into())),
        };
        cfg.json |= self.json;
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        let out = Outputs { out: self.out, svg: self.svg };
        if out.out.is_some() {
            cfg.output.out = out.out;
        }
        if out.svg.is_some() {
            cfg.output.svg = out.svg;
        }
        let t = ToleranceOverrides {
            compare: self.tol_compare,
            flux: self.tol_flux,
            cmc_mean_curvature: self.tol_cmc,
            inequality_grid_factor: self.tol_grid_factor,
        };
        let tol = &mut cfg.tolerances;
        tol.compare = t.compare.or(tol.compare);
        tol.flux = t.flux.or(tol.flux);
        tol.cmc_mean_curvature = t.cmc_mean_curvature.or(tol.cmc_mean_curvature);
        tol.inequality_grid_factor = t.inequality_grid_factor.or(tol.inequality_grid_factor);
        Ok(cfg)
    }
}

impl Sub {
    fn into_command(self, seed: Option<u64>) -> CliResult<Command> {
        Ok(match self {
            Sub::Jacobi(a) => {
                let (profile, init) = match (a.model, a.constant, a.profile) {
                    (Some(m), _, _) => {
                        let m = model(&m)?;
                        (m.profile(), Some(m.initial_values()))
                    }
                    (None, Some(k), _) => (CurvatureProfile::constant(k), None),
                    (None, None, Some(path)) => (read_json(&path)?, None),
                    (None, None, None) => {
                        return Err(CliError::Usage("jacobi needs --model, --constant or --profile".into()))
                    }
                };
                let (h0, dh0) = init.unwrap_or((0.0, 1.0));
                Command::Jacobi(JacobiParams {
                    profile,
                    t0: a.t0,
                    h0: a.h0.unwrap_or(h0),
                    dh0: a.dh0.unwrap_or(dh0),
                    lo: a.lo,
                    hi: a.hi,
                    samples: a.samples,
                })
            }
            Sub::Riccati(a) => {
                let direction: Direction = unit_variant("direction", &a.direction)?;
                let side: BoundSide = direction.required_side();
                let g = CurvatureProfile::constant(a.bound);
                let path = match a.k {
                    Some(k) => CurvatureOperatorPath::scalar(a.dim, k, g, side),
                    None => {
                        let seed = match seed {
                            Some(s) => s,
                            None => RunConfig::new(Command::Suite).resolved_seed()?,
                        };
                        CurvatureOperatorPath::random_saturating(a.dim, g, side, seed)
                    }
                };
                Command::Riccati(RiccatiParams { path, direction, a0: a.a0, t0: 0.0, t1: a.t1 })
            }
            Sub::Bound(a) => Command::Bound { scenario: read_json::<Scenario>(&a.scenario)? },
            Sub::Criterion(a) => {
                let profile = match (a.profile, a.model) {
                    (Some(path), _) => read_json(&path)?,
                    (None, Some(m)) => model(&m)?.profile(),
                    (None, None) => return Err(CliError::Usage("criterion needs --profile or --model".into())),
                };
                Command::Criterion { profile, tail: a.tail }
            }
            Sub::Bm(a) => Command::Bm(BmParams {
                model: model(&a.model)?,
                numeric: a.numeric,
                n: a.n,
                r0: a.r0,
                horizon: a.horizon,
                dt: a.dt,
                paths: a.paths,
                explosion_radius: a.explosion_radius,
            }),
            Sub::Cmc(a) => Command::Cmc(CmcRun { n: a.n, h: a.h, rmax: a.rmax, spacing: a.spacing }),
            Sub::Verify(a) => {
                let chart: ChartId = a.chart.parse()?;
                let patch = match a.patch.as_str() {
                    "equidistant" => PatchSpec::equidistant(a.level),
                    "tilted" => PatchSpec::tilted(a.alpha),
                    "sphere" => PatchSpec::unit_sphere(),
                    other => return Err(CliError::Usage(format!("unknown patch `{other}`"))),
                };
                let form = match a.form {
                    Some(f) => unit_variant::<Form>("form", &f)?,
                    None if matches!(patch, PatchSpec::Tilted { .. }) => Form::Reverse,
                    None => Form::Forward,
                };
                let mut config = VerifyConfig::new(chart, patch, form, a.grid);
                config.mean_curvature_scale = a.scale;
                Command::Verify(VerifyRun { config, refine: a.refine })
            }
            Sub::Suite => Command::Suite,
        })
    }
}
