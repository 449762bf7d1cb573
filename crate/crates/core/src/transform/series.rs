use crate::error::{Error, Result};
use crate::params::QueueParams;
use crate::riccati::ServiceModel;
use crate::transform::grid::{grid_convolve, GridFunction, GridKind, GridSpec};

/// Largest accepted `h·(λ + max|β|)`.
pub const MAX_STEP_PRODUCT: f64 = 0.05;

/// Most convolution terms the series will compute.
pub const TERM_BUDGET: usize = 2000;

/// Smallest `N` with `q^{N+1} / (1-q) < tol`, where `q = 1 - e^{-ρ}`.
pub fn series_truncation_order(params: &QueueParams, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "tol",
            value: tol,
        });
    }
    let q = params.one_minus_exp_neg_rho();
    let bound = tol * params.exp_neg_rho();
    if q < bound {
        return Ok(0);
    }
    // Start from the real-valued solution and correct for rounding.
    let mut n = ((bound.ln() / q.ln()).ceil() - 1.0).max(0.0) as usize;
    while n > 0 && q.powi(n as i32) < bound {
        n -= 1;
    }
    while q.powi(n as i32 + 1) >= bound {
        n += 1;
    }
    Ok(n)
}

/// A CDF computed by the convolution series.
#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub cdf: GridFunction,
    /// Index of the last term included.
    pub order: usize,
}

fn check_step(model: &ServiceModel, grid: &GridSpec) -> Result<()> {
    let max_beta = match model {
        ServiceModel::Degenerate(p) => p.lambda(),
        ServiceModel::Riccati(ctx) => ctx.beta().spec().max_abs(),
    };
    let product = grid.step() * (model.params().lambda() + max_beta);
    if product < MAX_STEP_PRODUCT {
        Ok(())
    } else {
        Err(Error::StepTooCoarse {
            step: grid.step(),
            product,
            limit: MAX_STEP_PRODUCT,
        })
    }
}

/// Busy-period CDF on `grid` as
///
/// ```text
/// B = Σₙ H * k^{*n},   H = 1 - (1-G(0))(f + λF),   k = λ(1-G(0)) f
/// ```
///
/// truncated at [`series_truncation_order`]`(tol)`.
pub fn busy_period_cdf_series(
    model: &ServiceModel,
    grid: &GridSpec,
    tol: f64,
) -> Result<SeriesResult> {
    check_step(model, grid)?;
    let order = series_truncation_order(model.params(), tol)?;
    if order + 1 > TERM_BUDGET {
        return Err(Error::TruncationBudgetExceeded {
            needed: order + 1,
            budget: TERM_BUDGET,
        });
    }
    let ctx = match model {
        ServiceModel::Degenerate(_) => {
            return Ok(SeriesResult {
                cdf: grid.sample(GridKind::Cdf, |_| 1.0),
                order: 0,
            })
        }
        ServiceModel::Riccati(ctx) => ctx,
    };
    let lambda = model.params().lambda();
    let spill = 1.0 - model.service_atom();

    let kernel: Vec<f64> = grid.times().map(|t| ctx.kernel(t)).collect();
    let integral = grid
        .times()
        .map(|t| ctx.kernel_integral(t))
        .collect::<Result<Vec<f64>>>()?;
    let head = GridFunction::new(
        grid.step(),
        kernel
            .iter()
            .zip(&integral)
            .map(|(f, big_f)| 1.0 - spill * (f + lambda * big_f))
            .collect(),
        GridKind::Cdf,
    )?;
    // Rescale so the trapezoid mass of k on the grid is exactly λ(1-G(0))F.
    let h = grid.step();
    let n = kernel.len();
    let trapezoid = h * (kernel.iter().sum::<f64>() - 0.5 * (kernel[0] + kernel[n - 1]));
    let scale = if n > 1 && trapezoid > 0.0 {
        integral[n - 1] / trapezoid
    } else {
        1.0
    };
    let k = GridFunction::new(
        h,
        kernel.iter().map(|f| lambda * spill * f * scale).collect(),
        GridKind::Density,
    )?;

    let mut sum = head.values().to_vec();
    let mut term = head;
    for _ in 0..order {
        term = grid_convolve(&term, &k)?;
        for (s, v) in sum.iter_mut().zip(term.values()) {
            *s += v;
        }
    }
    Ok(SeriesResult {
        cdf: GridFunction::new(grid.step(), sum, GridKind::Cdf)?,
        order,
    })
}

/// Busy-cycle CDF `Z = B * λe^{-λt}` on the grid of `bp`.
///
/// The exponential is integrated exactly against `B` taken linear on each
/// cell, which gives the recursion
///
/// ```text
/// Z_k = e^{-x} Z_{k-1} + w_a B_{k-1} + w_b B_k,   x = λh
/// ```
pub fn busy_cycle_cdf_series(params: &QueueParams, bp: &SeriesResult) -> Result<SeriesResult> {
    let x = params.lambda() * bp.cdf.step();
    let decay = (-x).exp();
    let mean_weight = -(-x).exp_m1() / x;
    let (wa, wb) = (mean_weight - decay, 1.0 - mean_weight);
    let b = bp.cdf.values();
    let mut z = Vec::with_capacity(b.len());
    z.push(0.0);
    for k in 1..b.len() {
        z.push(decay * z[k - 1] + wa * b[k - 1] + wb * b[k]);
    }
    Ok(SeriesResult {
        cdf: GridFunction::new(bp.cdf.step(), z, GridKind::Cdf)?,
        order: bp.order,
    })
}
