//! Closed forms for the constant-β members of the Riccati service family.
//!
//! With `c = λ + β`, `q = 1 - e^{-ρ}` and `μ = e^{-ρ} c`:
//!
//! * service CDF `G(t) = 1 - q c / (λ e^{-ρ}(e^{ct} - 1) + λ)`,
//! * busy period `B(t) = 1 - (c/λ) q e^{-μt}`, an atom `G(0)` plus an
//!   exponential of rate μ,
//! * busy cycle `Z`, the busy period convolved with the Exp(λ) idle period,
//!   a mixture of two exponentials that becomes an Erlang-type law when
//!   `μ = λ`,
//! * transient probabilities `p00(t) = e^{-ρ} + q e^{-ct}` and
//!   `p1'0(t) = p00(t) G(t)`.
//!
//! β = -λ is the degenerate member: service and busy period are zero with
//! probability one and the cycle is just the idle period.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::params::{beta_bounds, check_constant_beta, QueueParams};
use crate::quadrature::{exp_difference_quotient, integrate, Tolerance};

/// `|λ - μ|` below this fraction of λ switches the busy-cycle CDF to its
/// confluent limit.
pub const CONFLUENCE_EPS: f64 = 1e-9;

/// Tail bound used to cut the mean quadrature.
const MEAN_TAIL_CUTOFF: f64 = 1e-13;

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

pub(crate) fn is_degenerate(params: &QueueParams, beta: f64) -> bool {
    let (lo, hi) = beta_bounds(params);
    (beta - lo).abs() <= 1e-12 * lo.abs().max(hi)
}

fn check(params: &QueueParams, beta: f64, t: f64) -> Result<()> {
    check_constant_beta(params, beta)?;
    check_time(t)
}

// ---------------------------------------------------------------------------
// Unchecked kernels. Callers guarantee admissible β and t >= 0.

pub(crate) fn atom_unchecked(p: &QueueParams, beta: f64) -> f64 {
    if is_degenerate(p, beta) {
        return 1.0;
    }
    let c = p.lambda() + beta;
    (1.0 - p.one_minus_exp_neg_rho() * c / p.lambda()).clamp(0.0, 1.0)
}

pub(crate) fn service_cdf_unchecked(p: &QueueParams, beta: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if is_degenerate(p, beta) {
        return 1.0;
    }
    let lambda = p.lambda();
    let q = p.one_minus_exp_neg_rho();
    let c = lambda + beta;
    // Multiplied through by e^{-ct} so that large t cannot overflow.
    let x = (-c * t).exp();
    let g = 1.0 - q * c * x / (lambda * p.exp_neg_rho() + lambda * q * x);
    g.clamp(0.0, 1.0)
}

pub(crate) fn busy_period_cdf_unchecked(p: &QueueParams, beta: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if is_degenerate(p, beta) {
        return 1.0;
    }
    let lambda = p.lambda();
    let c = lambda + beta;
    let mu = p.exp_neg_rho() * c;
    let b = 1.0 - (c / lambda) * p.one_minus_exp_neg_rho() * (-mu * t).exp();
    b.clamp(0.0, 1.0)
}

pub(crate) fn busy_cycle_cdf_unchecked(p: &QueueParams, beta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let lambda = p.lambda();
    if is_degenerate(p, beta) {
        return -(-lambda * t).exp_m1();
    }
    let mu = p.exp_neg_rho() * (lambda + beta);
    // Z = 1 - e^{-μt} - β (e^{-μt} - e^{-λt}) / (λ - μ); the quotient is
    // replaced by its limit t e^{-λt} when the rates coincide.
    let quotient = if (lambda - mu).abs() < CONFLUENCE_EPS * lambda {
        t * (-lambda * t).exp()
    } else {
        exp_difference_quotient(mu, lambda, t)
    };
    let z = -(-mu * t).exp_m1() - beta * quotient;
    z.clamp(0.0, 1.0)
}

pub(crate) fn empty_probability_unchecked(p: &QueueParams, beta: f64, t: f64) -> f64 {
    if is_degenerate(p, beta) {
        return 1.0;
    }
    let c = p.lambda() + beta;
    p.exp_neg_rho() + p.one_minus_exp_neg_rho() * (-c * t).exp()
}

// ---------------------------------------------------------------------------
// Public operations.

/// Service-time CDF `G(t)` of the constant-β family member.
pub fn service_cdf(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    Ok(service_cdf_unchecked(params, beta, t))
}

/// Probability `G(0)` of a zero-length service.
pub fn service_atom(params: &QueueParams, beta: f64) -> Result<f64> {
    check_constant_beta(params, beta)?;
    Ok(atom_unchecked(params, beta))
}

/// Service density `g(t)` on `t > 0`.
pub fn service_density(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    if is_degenerate(params, beta) {
        return Err(Error::DegenerateDistribution);
    }
    let lambda = params.lambda();
    let q = params.one_minus_exp_neg_rho();
    let c = lambda + beta;
    let x = (-c * t).exp();
    let d = lambda * params.exp_neg_rho() + lambda * q * x;
    Ok(q * c * c * x * lambda * params.exp_neg_rho() / (d * d))
}

/// Inverse of [`service_cdf`]: 0 on the atom, the closed-form inversion of
/// `G` above it.
pub fn service_quantile(params: &QueueParams, beta: f64, u: f64) -> Result<f64> {
    check_constant_beta(params, beta)?;
    if !(0.0..1.0).contains(&u) {
        return Err(Error::ProbabilityOutOfRange(u));
    }
    Ok(quantile_unchecked(params, beta, u))
}

pub(crate) fn quantile_unchecked(p: &QueueParams, beta: f64, u: f64) -> f64 {
    if u <= atom_unchecked(p, beta) {
        return 0.0;
    }
    let lambda = p.lambda();
    let q = p.one_minus_exp_neg_rho();
    let c = lambda + beta;
    // e^{ct} = 1 + e^ρ (q c / (λ(1-u)) - 1)
    let ratio = q * c / (lambda * (1.0 - u));
    (p.rho().exp() * (ratio - 1.0)).ln_1p() / c
}

/// Busy-period CDF `B(t)`: atom `G(0)` plus an exponential of rate
/// `e^{-ρ}(λ+β)`.
pub fn busy_period_cdf(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    Ok(busy_period_cdf_unchecked(params, beta, t))
}

/// Busy-cycle CDF `Z(t)` (idle period plus busy period), including the
/// confluent limit `1 - e^{-λt} - β t e^{-λt}` when `e^{-ρ}(λ+β) = λ`.
pub fn busy_cycle_cdf(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    Ok(busy_cycle_cdf_unchecked(params, beta, t))
}

/// `p00(t) = P(N(t) = 0 | N(0) = 0)`.
pub fn empty_probability(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    Ok(empty_probability_unchecked(params, beta, t))
}

/// `p1'0(t) = p00(t) G(t)`, the probability of an empty system at `t` given
/// that a busy period starts at 0.
pub fn busy_start_empty_probability(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    Ok(empty_probability_unchecked(params, beta, t) * service_cdf_unchecked(params, beta, t))
}

/// `g(t)/(1-G(t)) - λG(t)`, the sign of `d/dt p1'0(t)`. Constant and equal
/// to β across the family.
pub fn monotony_indicator(params: &QueueParams, beta: f64, t: f64) -> Result<f64> {
    check(params, beta, t)?;
    if is_degenerate(params, beta) {
        return Err(Error::DegenerateDistribution);
    }
    let lambda = params.lambda();
    let c = lambda + beta;
    let x = (-c * t).exp();
    let d = lambda * params.exp_neg_rho() + lambda * params.one_minus_exp_neg_rho() * x;
    // g/(1-G) with the common factor q c x cancelled, so it stays finite
    // after 1 - G underflows.
    let hazard = c * lambda * params.exp_neg_rho() / d;
    Ok(hazard - lambda * service_cdf_unchecked(params, beta, t))
}

/// β-free reference curves built from the endpoint members of the family.
///
/// Only `cycle_ceiling` bounds every member. Interior members share their
/// means with the upper endpoint, so they cross both floors in the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    /// `1 - e^{-λt/(e^ρ-1)}`, lower bound on `B(t)`.
    pub bp_floor: f64,
    /// `Z` at the upper β endpoint, lower bound on `Z(t)`.
    pub cycle_floor: f64,
    /// `1 - e^{-λt}`, upper bound on `Z(t)`.
    pub cycle_ceiling: f64,
}

pub fn envelope_bounds(params: &QueueParams, t: f64) -> Result<Envelope> {
    check_time(t)?;
    let lambda = params.lambda();
    let em1 = params.exp_rho_minus_one();
    let slow = lambda / em1;
    let bp_floor = -(-slow * t).exp_m1();
    let cycle_ceiling = -(-lambda * t).exp_m1();
    // 1 - ((e^ρ-1) e^{-λt/(e^ρ-1)} - e^{-λt}) / (e^ρ-2), rewritten as
    // 1 - e^{-st} - s (e^{-st} - e^{-λt}) / (λ - s) with s = λ/(e^ρ-1).
    let cycle_floor = if (em1 - 1.0).abs() < CONFLUENCE_EPS {
        1.0 - (1.0 + lambda * t) * (-lambda * t).exp()
    } else {
        -(-slow * t).exp_m1() - slow * exp_difference_quotient(slow, lambda, t)
    };
    Ok(Envelope {
        bp_floor,
        cycle_floor: cycle_floor.max(0.0),
        cycle_ceiling,
    })
}

/// An evaluable CDF on `[0, ∞)` with an explicit atom at the origin.
///
/// `tail_rate` is the slowest exponential rate of `1 - F`; the mean is the
/// quadrature of `1 - F` up to a cutoff plus that exponential tail.
#[derive(Clone)]
pub struct DistributionCurve {
    atom_at_zero: f64,
    tail_rate: f64,
    cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mean: Arc<OnceLock<f64>>,
}

impl fmt::Debug for DistributionCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionCurve")
            .field("atom_at_zero", &self.atom_at_zero)
            .field("tail_rate", &self.tail_rate)
            .finish_non_exhaustive()
    }
}

impl DistributionCurve {
    pub fn new<F>(atom_at_zero: f64, tail_rate: f64, cdf: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DistributionCurve {
            atom_at_zero,
            tail_rate,
            cdf: Arc::new(cdf),
            mean: Arc::new(OnceLock::new()),
        }
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.atom_at_zero
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    /// `F(t)`; zero for negative `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            (self.cdf)(t)
        }
    }

    /// Expected value, computed once by quadrature.
    pub fn mean(&self) -> Result<f64> {
        if let Some(&m) = self.mean.get() {
            return Ok(m);
        }
        let m = self.compute_mean()?;
        Ok(*self.mean.get_or_init(|| m))
    }

    fn compute_mean(&self) -> Result<f64> {
        let survival = |t: f64| 1.0 - self.cdf(t);
        if !self.tail_rate.is_finite() || survival(0.0) == 0.0 {
            return Ok(0.0);
        }
        let panel = 1.0 / self.tail_rate;
        let mut horizon = panel;
        let mut acc = integrate(survival, 0.0, panel, Tolerance::TIGHT)?;
        for _ in 0..4096 {
            if survival(horizon) < MEAN_TAIL_CUTOFF {
                break;
            }
            acc += integrate(survival, horizon, horizon + panel, Tolerance::TIGHT)?;
            horizon += panel;
        }
        Ok(acc + survival(horizon) / self.tail_rate)
    }
}

/// The service law as a [`DistributionCurve`].
pub fn service_curve(params: &QueueParams, beta: f64) -> Result<DistributionCurve> {
    check_constant_beta(params, beta)?;
    let p = *params;
    let rate = if is_degenerate(&p, beta) {
        f64::INFINITY
    } else {
        p.lambda() + beta
    };
    Ok(DistributionCurve::new(
        atom_unchecked(&p, beta),
        rate,
        move |t| service_cdf_unchecked(&p, beta, t),
    ))
}

/// The busy-period law as a [`DistributionCurve`].
pub fn busy_period_curve(params: &QueueParams, beta: f64) -> Result<DistributionCurve> {
    check_constant_beta(params, beta)?;
    let p = *params;
    let rate = if is_degenerate(&p, beta) {
        f64::INFINITY
    } else {
        p.exp_neg_rho() * (p.lambda() + beta)
    };
    Ok(DistributionCurve::new(
        atom_unchecked(&p, beta),
        rate,
        move |t| busy_period_cdf_unchecked(&p, beta, t),
    ))
}

/// The busy-cycle law as a [`DistributionCurve`].
pub fn busy_cycle_curve(params: &QueueParams, beta: f64) -> Result<DistributionCurve> {
    check_constant_beta(params, beta)?;
    let p = *params;
    let rate = if is_degenerate(&p, beta) {
        p.lambda()
    } else {
        p.lambda().min(p.exp_neg_rho() * (p.lambda() + beta))
    };
    Ok(DistributionCurve::new(0.0, rate, move |t| {
        busy_cycle_cdf_unchecked(&p, beta, t)
    }))
}
