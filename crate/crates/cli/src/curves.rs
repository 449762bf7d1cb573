use mginf_core::closed_form;
use mginf_core::params::QueueParams;
use mginf_core::riccati::ServiceModel;
use mginf_core::transform::{
    busy_cycle_cdf_series, busy_period_cdf_series, GridFunction, GridSpec, MAX_STEP_PRODUCT,
};
use mginf_core::Result;

/// Truncation tolerance of the convolution series.
pub const SERIES_TOL: f64 = 1e-8;

/// The busy-period and busy-cycle curves of one model: closed forms for
/// constant β, convolution series otherwise.
#[derive(Debug, Clone)]
pub enum Curves {
    Closed {
        params: QueueParams,
        beta: f64,
    },
    Series {
        bp: GridFunction,
        cycle: GridFunction,
    },
}

impl Curves {
    /// `grid` bounds the series step and sets its horizon.
    pub fn new(model: &ServiceModel, grid: &GridSpec) -> Result<Self> {
        if let Some(beta) = model
            .kernel()
            .map_or(Some(-model.params().lambda()), |k| k.beta().constant())
        {
            return Ok(Curves::Closed {
                params: *model.params(),
                beta,
            });
        }
        let ctx = model.kernel().expect("tabulated β has a kernel");
        let lambda = model.params().lambda();
        let coarsest = 0.8 * MAX_STEP_PRODUCT / (lambda + ctx.beta().spec().max_abs());
        let step = grid.step().min(0.005 / lambda).min(coarsest);
        let fine = GridSpec::new(step, grid.t_max())?;
        let bp = busy_period_cdf_series(model, &fine, SERIES_TOL)?;
        let cycle = busy_cycle_cdf_series(model.params(), &bp)?;
        Ok(Curves::Series {
            bp: bp.cdf,
            cycle: cycle.cdf,
        })
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self, Curves::Closed { .. })
    }

    pub fn busy_period(&self, t: f64) -> f64 {
        match self {
            Curves::Closed { params, beta } => {
                closed_form::busy_period_cdf(params, *beta, t.max(0.0)).unwrap_or(f64::NAN)
            }
            Curves::Series { bp, .. } => bp.interpolate(t),
        }
    }

    pub fn busy_cycle(&self, t: f64) -> f64 {
        match self {
            Curves::Closed { params, beta } => {
                closed_form::busy_cycle_cdf(params, *beta, t.max(0.0)).unwrap_or(f64::NAN)
            }
            Curves::Series { cycle, .. } => cycle.interpolate(t),
        }
    }
}
