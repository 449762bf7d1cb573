use std::path::PathBuf;

use clap::Args;
use mginf_core::params::{
    validate_beta, validate_queue_params, BetaSpec, BetaTable, QueueParams, ValidatedBeta,
};
use mginf_core::riccati::ServiceModel;
use mginf_core::transform::GridSpec;

use crate::error::CliError;

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Arrival rate λ.
    #[arg(long)]
    pub lambda: f64,
    /// Traffic intensity ρ = λα.
    #[arg(long)]
    pub rho: f64,
    /// Constant β.
    #[arg(
        long,
        allow_negative_numbers = true,
        conflicts_with = "beta_file",
        required_unless_present = "beta_file"
    )]
    pub beta: Option<f64>,
    /// CSV file with header `t,beta`, piecewise-linear β.
    #[arg(long)]
    pub beta_file: Option<PathBuf>,
    /// Horizon; defaults to twelve mean busy periods.
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Grid step; defaults to min(0.005/λ, α/200).
    #[arg(long, allow_negative_numbers = true)]
    pub step: Option<f64>,
    /// Number of simulated cycles.
    #[arg(long, default_value_t = 100_000)]
    pub cycles: usize,
    /// Seed of the simulation streams.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threshold for the series-versus-closed-form sup distance.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Validated inputs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: QueueParams,
    pub beta: ValidatedBeta,
    pub model: ServiceModel,
    pub grid: GridSpec,
    pub cycles: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let params = validate_queue_params(args.lambda, args.rho)?;
        let defaults = GridSpec::default_for(&params);
        let grid = GridSpec::new(
            args.step.unwrap_or(defaults.step()),
            args.t_max.unwrap_or(defaults.t_max()),
        )?;
        let spec = match (&args.beta, &args.beta_file) {
            (Some(b), None) => BetaSpec::Constant(*b),
            (None, Some(path)) => BetaSpec::Tabulated(BetaTable::from_csv_path(path)?),
            _ => {
                return Err(CliError::Validation(
                    "exactly one of --beta and --beta-file is required".into(),
                ))
            }
        };
        let beta = validate_beta(&params, spec, grid.t_max())?;
        let model = ServiceModel::new(&params, &beta)?;
        if let Some(tol) = args.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Validation(format!(
                    "--tol must be positive, got {tol}"
                )));
            }
        }
        Ok(RunConfig {
            params,
            beta,
            model,
            grid,
            cycles: args.cycles,
            seed: args.seed,
            out: args.out.clone(),
            tol: args.tol,
        })
    }
}
