use crate::closed_form;
use crate::error::{Error, Result};
use crate::params::QueueParams;
use crate::quadrature::{integrate, PanelCache, Tolerance};
use crate::riccati::{KernelContext, ServiceModel};
use crate::transform::grid::GridFunction;

/// Below this, `1 - G` counts as exhausted when locating the end of the
/// service tail.
const SERVICE_TAIL_CUTOFF: f64 = 1e-16;
const MAX_SERVICE_PANELS: usize = 20_000;

/// A Laplace-Stieltjes transform value `E[e^{-sX}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint {
    pub s: f64,
    pub value: f64,
}

fn check_s(s: f64) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeS(s))
    }
}

/// Busy-period transform from an arbitrary service CDF:
///
/// ```text
/// B̄(s) = 1 + (s - 1/J(s)) / λ,   J(s) = ∫₀^∞ e^{-st - λ∫₀ᵗ(1-G)} dt
/// ```
///
/// The inner integral is cached on panels of width α until `1 - G` is
/// exhausted; past that point the outer integrand is `p00(T) e^{-st}`.
/// At `s = 0` the outer integral diverges and the value is 1 by
/// normalization.
pub fn busy_period_laplace_from_service<G>(
    params: &QueueParams,
    service_cdf: G,
    s: f64,
) -> Result<LaplacePoint>
where
    G: Fn(f64) -> f64,
{
    check_s(s)?;
    if s == 0.0 {
        return Ok(LaplacePoint { s, value: 1.0 });
    }
    let lambda = params.lambda();
    let survival = |t: f64| 1.0 - service_cdf(t);

    let width = params.alpha();
    let mut breakpoints = vec![0.0];
    loop {
        let end = *breakpoints.last().expect("nonempty");
        if survival(end) < SERVICE_TAIL_CUTOFF {
            break;
        }
        if breakpoints.len() > MAX_SERVICE_PANELS {
            return Err(Error::QuadratureFailure {
                a: 0.0,
                b: end,
                error: survival(end),
            });
        }
        breakpoints.push(end + width);
    }
    if breakpoints.len() == 1 {
        breakpoints.push(width);
    }
    let inner = PanelCache::build(&survival, breakpoints, Tolerance::TIGHT)?;

    let mut outer = 0.0;
    for w in inner.breakpoints().windows(2) {
        let integrand = |t: f64| match inner.value(&survival, t) {
            Ok(area) => (-s * t - lambda * area).exp(),
            Err(_) => f64::NAN,
        };
        outer += integrate(integrand, w[0], w[1], Tolerance::TIGHT)?;
    }
    let end = inner.end();
    outer += (-lambda * inner.total()).exp() * (-s * end).exp() / s;

    Ok(LaplacePoint {
        s,
        value: 1.0 + (s - 1.0 / outer) / lambda,
    })
}

/// Busy-period transform from the kernel:
///
/// ```text
/// B̄(s) = (1 - (s+λ)(1-G(0)) Lf(s)) / (1 - λ(1-G(0)) Lf(s))
/// ```
pub fn busy_period_laplace_general(ctx: &KernelContext, s: f64) -> Result<LaplacePoint> {
    check_s(s)?;
    let lambda = ctx.params().lambda();
    let spill = 1.0 - crate::riccati::riccati_service_atom(ctx);
    let lf = ctx.kernel_laplace(s)?;
    let value = (1.0 - (s + lambda) * spill * lf) / (1.0 - lambda * spill * lf);
    Ok(LaplacePoint { s, value })
}

/// [`busy_period_laplace_general`] for any [`ServiceModel`]; the degenerate
/// model has `B̄ ≡ 1`.
pub fn busy_period_laplace(model: &ServiceModel, s: f64) -> Result<LaplacePoint> {
    match model {
        ServiceModel::Degenerate(_) => {
            check_s(s)?;
            Ok(LaplacePoint { s, value: 1.0 })
        }
        ServiceModel::Riccati(ctx) => busy_period_laplace_general(ctx, s),
    }
}

/// Transform of the constant-β busy period read off its closed form: an
/// atom `G(0)` plus an exponential of rate `μ = e^{-ρ}(λ+β)`.
pub fn busy_period_laplace_closed_form(
    params: &QueueParams,
    beta: f64,
    s: f64,
) -> Result<LaplacePoint> {
    check_s(s)?;
    let atom = closed_form::service_atom(params, beta)?;
    if atom == 1.0 {
        return Ok(LaplacePoint { s, value: 1.0 });
    }
    let mu = params.exp_neg_rho() * (params.lambda() + beta);
    Ok(LaplacePoint {
        s,
        value: atom + (1.0 - atom) * mu / (s + mu),
    })
}

/// Busy-cycle transform `Z̄(s) = λ/(λ+s) · B̄(s)`.
pub fn busy_cycle_laplace(params: &QueueParams, bp: LaplacePoint) -> LaplacePoint {
    let lambda = params.lambda();
    LaplacePoint {
        s: bp.s,
        value: lambda / (lambda + bp.s) * bp.value,
    }
}

/// Laplace-Stieltjes transform of a CDF-like grid: the value at 0 is the
/// atom, each cell's increment sits at the cell midpoint, and the mass not
/// reached by the end of the grid is placed at the end.
pub fn grid_cdf_laplace(cdf: &GridFunction, s: f64) -> Result<LaplacePoint> {
    check_s(s)?;
    let v = cdf.values();
    let h = cdf.step();
    let mut acc = v[0];
    for (i, w) in v.windows(2).enumerate() {
        acc += (w[1] - w[0]) * (-s * (i as f64 + 0.5) * h).exp();
    }
    let last = *v.last().expect("nonempty");
    acc += (1.0 - last).max(0.0) * (-s * cdf.t_max()).exp();
    Ok(LaplacePoint { s, value: acc })
}

/// Mean read off a transform as `(1 - X̄(δ)) / δ`.
pub fn mean_from_transform<F>(transform: F, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<LaplacePoint>,
{
    Ok((1.0 - transform(delta)?.value) / delta)
}
