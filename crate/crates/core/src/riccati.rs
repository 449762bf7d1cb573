//! Service laws for a general β(t).
//!
//! The Riccati equation `G' = -λG² - (β-λ)G + β` is solved through the
//! kernel `f(t) = exp(-λt - ∫₀ᵗβ)` and its total mass `I = ∫₀^∞ f`:
//!
//! ```text
//! G(t) = 1 - q f(t) / (λ (I - q ∫₀ᵗ f)),    q = 1 - e^{-ρ}
//! G(0) = (λI + e^{-ρ} - 1) / (λI)
//! ```
//!
//! β is constant past its last knot, so `f` has an exact exponential tail
//! there and every infinite integral splits into quadrature on the knot
//! range plus a closed-form remainder.

use crate::closed_form::{self, DistributionCurve};
use crate::error::{Error, Result};
use crate::params::{BetaSpec, QueueParams, ValidatedBeta};
use crate::quadrature::{integrate, one_minus_exp_over, PanelCache, Tolerance};

/// Step for the finite-difference derivative used by [`riccati_residual`].
pub const RESIDUAL_STEP: f64 = 1e-6;

/// Everything derived once from `(λ, ρ, β)`: the kernel, its running
/// integral and its total mass.
#[derive(Debug, Clone)]
pub struct KernelContext {
    params: QueueParams,
    vbeta: ValidatedBeta,
    cache: PanelCache,
    total_integral: f64,
    horizon: f64,
    kernel_at_horizon: f64,
    tail_rate: f64,
}

/// Builds the kernel context; fails when `∫₀^∞ f` diverges.
pub fn build_kernel(params: &QueueParams, vbeta: &ValidatedBeta) -> Result<KernelContext> {
    let lambda = params.lambda();
    let tail_rate = lambda + vbeta.spec().tail_value();
    if vbeta.is_degenerate() || tail_rate <= 0.0 {
        return Err(Error::DivergentKernelIntegral { tail_rate });
    }

    let horizon = vbeta.spec().tail_start();
    let kernel = |t: f64| (-lambda * t - vbeta.cumulative(t)).exp();

    // Panels follow the knots (where f'' jumps), split to at most 1/λ wide.
    let width = 1.0 / lambda;
    let mut breakpoints = vec![0.0];
    let knots = match vbeta.spec() {
        BetaSpec::Constant(_) => vec![0.0],
        BetaSpec::Tabulated(table) => table.knot_times().to_vec(),
    };
    for w in knots.windows(2) {
        let pieces = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            breakpoints.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
        }
    }
    let cache = PanelCache::build(&kernel, breakpoints, Tolerance::TIGHT)?;
    let kernel_at_horizon = kernel(horizon);
    let total_integral = cache.total() + kernel_at_horizon / tail_rate;

    if !(total_integral.is_finite() && total_integral > 0.0) {
        return Err(Error::DivergentKernelIntegral { tail_rate });
    }

    Ok(KernelContext {
        params: *params,
        vbeta: vbeta.clone(),
        cache,
        total_integral,
        horizon,
        kernel_at_horizon,
        tail_rate,
    })
}

impl KernelContext {
    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    pub fn beta(&self) -> &ValidatedBeta {
        &self.vbeta
    }

    /// `I = ∫₀^∞ f`.
    pub fn total_integral(&self) -> f64 {
        self.total_integral
    }

    /// Time past which `f` is exactly exponential.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `λ + β` on the constant tail.
    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    /// `f(t) = exp(-λt - ∫₀ᵗβ)`.
    pub fn kernel(&self, t: f64) -> f64 {
        (-self.params.lambda() * t - self.vbeta.cumulative(t)).exp()
    }

    /// `∫₀ᵗ f`.
    pub fn kernel_integral(&self, t: f64) -> Result<f64> {
        if t <= self.horizon {
            self.cache.value(&|u| self.kernel(u), t)
        } else {
            let dt = t - self.horizon;
            Ok(self.cache.total()
                + self.kernel_at_horizon * dt * one_minus_exp_over(self.tail_rate * dt))
        }
    }

    /// `∫₀^∞ e^{-st} f(t) dt`.
    pub fn kernel_laplace(&self, s: f64) -> Result<f64> {
        let bp = self.cache.breakpoints();
        let mut acc = 0.0;
        for w in bp.windows(2) {
            acc += integrate(
                |t| (-s * t).exp() * self.kernel(t),
                w[0],
                w[1],
                Tolerance::TIGHT,
            )?;
        }
        Ok(acc + self.kernel_at_horizon * (-s * self.horizon).exp() / (s + self.tail_rate))
    }

    /// `I - q ∫₀ᵗ f`, bounded below by `e^{-ρ} I`.
    fn remaining(&self, t: f64) -> Result<f64> {
        Ok(self.total_integral - self.params.one_minus_exp_neg_rho() * self.kernel_integral(t)?)
    }

    /// `1 - G(t)`.
    fn survival(&self, t: f64) -> Result<f64> {
        let q = self.params.one_minus_exp_neg_rho();
        Ok(q * self.kernel(t) / (self.params.lambda() * self.remaining(t)?))
    }

    /// Service density `g(t) = (1 - G)(λ + β - q f/(I - qF))` from
    /// differentiating the closed form of `G`.
    pub fn service_density(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.survival(t)? * self.hazard(t)?)
    }

    fn hazard(&self, t: f64) -> Result<f64> {
        let q = self.params.one_minus_exp_neg_rho();
        Ok(self.params.lambda() + self.vbeta.value(t) - q * self.kernel(t) / self.remaining(t)?)
    }

    /// `p00(t) = exp(-λ∫₀ᵗ(1-G)) = (I - q∫₀ᵗf) / I`.
    pub fn empty_probability(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.remaining(t)? / self.total_integral)
    }

    /// `g/(1-G) - λG` computed from the solution curve.
    pub fn monotony_indicator(&self, t: f64) -> Result<f64> {
        let g = riccati_service_cdf(self, t)?;
        Ok(self.hazard(t)? - self.params.lambda() * g)
    }

    /// The service law as a [`DistributionCurve`].
    pub fn service_curve(&self) -> DistributionCurve {
        let ctx = self.clone();
        DistributionCurve::new(riccati_service_atom(self), self.tail_rate, move |t| {
            riccati_service_cdf(&ctx, t).unwrap_or(f64::NAN)
        })
    }
}

/// `G(t)` from the general solution.
pub fn riccati_service_cdf(ctx: &KernelContext, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok((1.0 - ctx.survival(t)?).clamp(0.0, 1.0))
}

/// `G(0) = (λI + e^{-ρ} - 1) / (λI)`.
pub fn riccati_service_atom(ctx: &KernelContext) -> f64 {
    let li = ctx.params.lambda() * ctx.total_integral;
    ((li + ctx.params.exp_neg_rho() - 1.0) / li).clamp(0.0, 1.0)
}

/// Right-hand side of `G' = -λG² - (β - λ)G + β`.
pub fn riccati_rhs(lambda: f64, beta: f64, g: f64) -> f64 {
    -lambda * g * g - (beta - lambda) * g + beta
}

/// Finite-difference `dG/dt` minus the Riccati right-hand side at `t`.
pub fn riccati_residual(ctx: &KernelContext, t: f64) -> Result<f64> {
    let h = RESIDUAL_STEP;
    let derivative = if t >= h {
        (riccati_service_cdf(ctx, t + h)? - riccati_service_cdf(ctx, t - h)?) / (2.0 * h)
    } else {
        (riccati_service_cdf(ctx, t + h)? - riccati_service_cdf(ctx, t)?) / h
    };
    let g = riccati_service_cdf(ctx, t)?;
    Ok(derivative - riccati_rhs(ctx.params.lambda(), ctx.vbeta.value(t), g))
}

/// A service law of the family: either the degenerate point mass at zero
/// (β ≡ -λ, where the kernel integral diverges) or a Riccati solution.
#[derive(Debug, Clone)]
pub enum ServiceModel {
    Degenerate(QueueParams),
    Riccati(Box<KernelContext>),
}

impl ServiceModel {
    /// Routes β ≡ -λ to the degenerate law and builds the kernel otherwise.
    pub fn new(params: &QueueParams, vbeta: &ValidatedBeta) -> Result<Self> {
        if vbeta.is_degenerate() {
            Ok(ServiceModel::Degenerate(*params))
        } else {
            build_kernel(params, vbeta).map(|k| ServiceModel::Riccati(Box::new(k)))
        }
    }

    pub fn params(&self) -> &QueueParams {
        match self {
            ServiceModel::Degenerate(p) => p,
            ServiceModel::Riccati(ctx) => ctx.params(),
        }
    }

    pub fn kernel(&self) -> Option<&KernelContext> {
        match self {
            ServiceModel::Degenerate(_) => None,
            ServiceModel::Riccati(ctx) => Some(ctx),
        }
    }

    /// `G(0)`.
    pub fn service_atom(&self) -> f64 {
        match self {
            ServiceModel::Degenerate(_) => 1.0,
            ServiceModel::Riccati(ctx) => riccati_service_atom(ctx),
        }
    }

    pub fn service_cdf(&self, t: f64) -> Result<f64> {
        match self {
            ServiceModel::Degenerate(_) if t >= 0.0 => Ok(1.0),
            ServiceModel::Degenerate(_) => Err(Error::NegativeTime(t)),
            ServiceModel::Riccati(ctx) => riccati_service_cdf(ctx, t),
        }
    }

    pub fn empty_probability(&self, t: f64) -> Result<f64> {
        match self {
            ServiceModel::Degenerate(_) if t >= 0.0 => Ok(1.0),
            ServiceModel::Degenerate(_) => Err(Error::NegativeTime(t)),
            ServiceModel::Riccati(ctx) => ctx.empty_probability(t),
        }
    }

    pub fn service_curve(&self) -> DistributionCurve {
        match self {
            ServiceModel::Degenerate(p) => {
                closed_form::service_curve(p, -p.lambda()).expect("β = -λ is admissible")
            }
            ServiceModel::Riccati(ctx) => ctx.service_curve(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form;
    use crate::params::{beta_bounds, validate_beta, BetaTable};
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    fn constant(lambda: f64, rho: f64, beta: f64) -> KernelContext {
        let p = QueueParams::new(lambda, rho).unwrap();
        let vb = validate_beta(&p, BetaSpec::Constant(beta), 50.0).unwrap();
        build_kernel(&p, &vb).unwrap()
    }

    fn ramp() -> KernelContext {
        let p = QueueParams::new(1.0, 1.0).unwrap();
        let table = BetaTable::new(vec![(0.0, 0.0), (1.0, 0.2)]).unwrap();
        let vb = validate_beta(&p, BetaSpec::Tabulated(table), 50.0).unwrap();
        build_kernel(&p, &vb).unwrap()
    }

    #[test]
    fn kernel_integral_examples() {
        assert_relative_eq!(
            constant(1.0, 1.0, 0.0).total_integral(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            constant(1.0, LN_2, 1.0).total_integral(),
            0.5,
            max_relative = 1e-15
        );
        let p = QueueParams::new(1.0, 1.0).unwrap();
        let vb = validate_beta(&p, BetaSpec::Constant(-1.0), 50.0).unwrap();
        assert!(matches!(
            build_kernel(&p, &vb),
            Err(Error::DivergentKernelIntegral { .. })
        ));
    }

    #[test]
    fn ramp_kernel_integral_matches_direct_quadrature() {
        // β(u) = 0.2u on [0,1], then 0.2: f = e^{-t-0.1t²}, then e^{-1.1-1.2(t-1)}.
        let ctx = ramp();
        let head = integrate(
            |t: f64| (-t - 0.1 * t * t).exp(),
            0.0,
            1.0,
            Tolerance::TIGHT,
        )
        .unwrap();
        let tail = (-1.1f64).exp() / 1.2;
        assert_relative_eq!(ctx.total_integral(), head + tail, max_relative = 1e-13);
        assert_relative_eq!(
            ctx.kernel_integral(0.5).unwrap(),
            integrate(
                |t: f64| (-t - 0.1 * t * t).exp(),
                0.0,
                0.5,
                Tolerance::TIGHT
            )
            .unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn service_cdf_examples() {
        assert_relative_eq!(
            riccati_service_cdf(&constant(1.0, 1.0, 0.0), 1.0).unwrap(),
            0.612_699_836_780_282,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            riccati_service_cdf(&constant(1.0, LN_2, 1.0), 1.0).unwrap(),
            f64::tanh(1.0),
            max_relative = 1e-13
        );
        let r = ramp();
        assert!((riccati_service_cdf(&r, 0.0).unwrap() - riccati_service_atom(&r)).abs() < 1e-10);
        assert!(riccati_service_cdf(&r, -1.0).is_err());
    }

    #[test]
    fn atom_examples() {
        assert_relative_eq!(
            riccati_service_atom(&constant(1.0, 1.0, 0.0)),
            1.0 / E,
            max_relative = 1e-15
        );
        assert!(riccati_service_atom(&constant(1.0, LN_2, 1.0)) < 1e-15);
        let p = QueueParams::new(1.0, 1.0).unwrap();
        let hi = beta_bounds(&p).1;
        assert!(riccati_service_atom(&constant(1.0, 1.0, hi)) < 1e-14);
        assert!(riccati_service_atom(&constant(1.0, 1.0, 0.581_976)) < 1e-5);
    }

    #[test]
    fn constant_beta_equivalence() {
        for &(l, r) in &[(1.0, 1.0), (1.0, LN_2), (2.0, 0.5), (0.5, 2.0)] {
            let p = QueueParams::new(l, r).unwrap();
            let (lo, hi) = beta_bounds(&p);
            for frac in [0.01, 0.25, 0.5, 0.75, 1.0] {
                let b = lo + frac * (hi - lo);
                let ctx = constant(l, r, b);
                for k in 0..100 {
                    let t = 0.1 * k as f64 / l;
                    let general = riccati_service_cdf(&ctx, t).unwrap();
                    let closed = closed_form::service_cdf(&p, b, t).unwrap();
                    assert!(
                        (general - closed).abs() < 1e-8,
                        "β={b} t={t}: {general} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn atom_identity_holds() {
        for ctx in [constant(1.0, 1.0, 0.3), constant(2.0, 0.5, -1.0), ramp()] {
            let p = ctx.params();
            let lhs = p.lambda() * (1.0 - riccati_service_atom(&ctx)) * ctx.total_integral();
            assert_relative_eq!(lhs, p.one_minus_exp_neg_rho(), max_relative = 1e-8);
        }
    }

    #[test]
    fn means_match_rho_over_lambda() {
        for ctx in [constant(1.0, 1.0, 0.3), constant(2.0, 0.5, -1.5), ramp()] {
            let p = *ctx.params();
            let mean = ctx.service_curve().mean().unwrap();
            assert_relative_eq!(mean, p.alpha(), max_relative = 1e-5);
        }
    }

    #[test]
    fn residual_is_small() {
        for ctx in [constant(1.0, 1.0, 0.0), constant(1.0, 1.0, -0.7), ramp()] {
            for k in 0..100 {
                let t = 0.05 * k as f64;
                let r = riccati_residual(&ctx, t).unwrap();
                assert!(r.abs() < 1e-3, "t={t}: {r}");
            }
        }
    }

    #[test]
    fn indicator_recovers_beta() {
        let r = ramp();
        for &t in &[0.0, 0.3, 0.9, 1.5, 6.0] {
            let want = r.beta().value(t);
            assert!((r.monotony_indicator(t).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn density_matches_finite_difference() {
        let r = ramp();
        for &t in &[0.2, 0.7, 2.0] {
            let fd = (riccati_service_cdf(&r, t + 1e-6).unwrap()
                - riccati_service_cdf(&r, t - 1e-6).unwrap())
                / 2e-6;
            assert_relative_eq!(r.service_density(t).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn empty_probability_matches_closed_form() {
        let p = QueueParams::new(1.0, 1.0).unwrap();
        let ctx = constant(1.0, 1.0, 0.4);
        for &t in &[0.0, 0.5, 3.0, 40.0] {
            assert_relative_eq!(
                ctx.empty_probability(t).unwrap(),
                closed_form::empty_probability(&p, 0.4, t).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn kernel_laplace_constant() {
        let ctx = constant(1.0, 1.0, 0.0);
        assert_relative_eq!(ctx.kernel_laplace(1.0).unwrap(), 0.5, max_relative = 1e-14);
        let r = ramp();
        assert_relative_eq!(
            r.kernel_laplace(0.0).unwrap(),
            r.total_integral(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn service_model_routes_degenerate() {
        let p = QueueParams::new(1.0, 1.0).unwrap();
        let vb = validate_beta(&p, BetaSpec::Constant(-1.0), 1.0).unwrap();
        let m = ServiceModel::new(&p, &vb).unwrap();
        assert!(m.kernel().is_none());
        assert_eq!(m.service_atom(), 1.0);
        assert_eq!(m.service_cdf(3.0).unwrap(), 1.0);
        assert_eq!(m.empty_probability(3.0).unwrap(), 1.0);
    }
}
