//! Regenerative Monte Carlo of the M|G|∞ queue.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::closed_form;
use crate::error::{Error, Result};
use crate::params::QueueParams;
use crate::riccati::{riccati_service_cdf, KernelContext, ServiceModel};

/// Bisection stops once the CDF bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;

/// Inverse-transform draw from the constant-β service law.
pub fn sample_service(params: &QueueParams, beta: f64, uniform: f64) -> Result<f64> {
    closed_form::service_quantile(params, beta, uniform)
}

/// Maps a uniform on `[0, 1)` to a service time.
#[derive(Debug, Clone)]
pub enum ServiceSampler {
    Degenerate,
    Constant { params: QueueParams, beta: f64 },
    Tabulated(Box<KernelContext>),
}

impl ServiceSampler {
    pub fn new(model: &ServiceModel) -> Self {
        match model {
            ServiceModel::Degenerate(_) => ServiceSampler::Degenerate,
            ServiceModel::Riccati(ctx) => match ctx.beta().constant() {
                Some(beta) => ServiceSampler::Constant {
                    params: *ctx.params(),
                    beta,
                },
                None => ServiceSampler::Tabulated(ctx.clone()),
            },
        }
    }

    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        match self {
            ServiceSampler::Degenerate => Ok(0.0),
            ServiceSampler::Constant { params, beta } => {
                Ok(closed_form::quantile_unchecked(params, *beta, u))
            }
            ServiceSampler::Tabulated(ctx) => bisect_quantile(ctx, u),
        }
    }
}

fn bisect_quantile(ctx: &KernelContext, u: f64) -> Result<f64> {
    let cdf = |t: f64| riccati_service_cdf(ctx, t);
    if u <= cdf(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut g_lo) = (0.0, cdf(0.0)?);
    let mut hi = ctx.params().alpha();
    let mut g_hi = cdf(hi)?;
    while g_hi < u {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = cdf(hi)?;
    }
    for _ in 0..MAX_BISECTIONS {
        if g_hi - g_lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = cdf(mid)?;
        if g_mid < u {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    Ok(hi)
}

/// Busy, idle and busy+idle durations of `n` independent cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSamples {
    pub busy: Vec<f64>,
    pub idle: Vec<f64>,
    pub cycle: Vec<f64>,
    pub seed: u64,
    pub n: usize,
}

/// [`run_cycles_with`] for constant β.
pub fn run_cycles(
    params: &QueueParams,
    beta: f64,
    n_cycles: usize,
    seed: u64,
) -> Result<CycleSamples> {
    crate::params::check_constant_beta(params, beta)?;
    let sampler = if closed_form::is_degenerate(params, beta) {
        ServiceSampler::Degenerate
    } else {
        ServiceSampler::Constant {
            params: *params,
            beta,
        }
    };
    run_cycles_with(params, &sampler, n_cycles, seed)
}

/// Simulates `n_cycles` regenerative cycles. Cycle `i` draws from stream
/// `i` of a ChaCha8 generator seeded with `seed`, so the output does not
/// depend on how cycles are scheduled across threads.
///
/// A busy period starts with an arrival to an empty system at time 0 and
/// ends at the largest departure epoch of its customers, reached before
/// the next arrival. The idle period is a fresh Exponential(λ) draw.
pub fn run_cycles_with(
    params: &QueueParams,
    sampler: &ServiceSampler,
    n_cycles: usize,
    seed: u64,
) -> Result<CycleSamples> {
    if n_cycles == 0 {
        return Err(Error::NonPositiveParameter {
            name: "cycles",
            value: 0.0,
        });
    }
    let gap = Exp::new(params.lambda()).map_err(|_| Error::NonPositiveParameter {
        name: "lambda",
        value: params.lambda(),
    })?;

    let one_cycle = |i: usize| -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut end = sampler.sample(rng.gen::<f64>())?;
        let mut now = 0.0;
        loop {
            now += gap.sample(&mut rng);
            if now > end {
                break;
            }
            end = end.max(now + sampler.sample(rng.gen::<f64>())?);
        }
        Ok((end, gap.sample(&mut rng)))
    };
    let pairs = (0..n_cycles)
        .into_par_iter()
        .map(one_cycle)
        .collect::<Result<Vec<_>>>()?;

    let (busy, idle): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let cycle = busy.iter().zip(&idle).map(|(b, i)| b + i).collect();
    Ok(CycleSamples {
        busy,
        idle,
        cycle,
        seed,
        n: n_cycles,
    })
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `#{xᵢ <= t} / n`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.sorted.len() as f64
    }

    /// `#{xᵢ < t} / n`.
    pub fn eval_left(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x < t) as f64 / self.sorted.len() as f64
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf { sorted })
}

/// Kolmogorov-Smirnov distance to a CDF that is continuous on `(0, ∞)`
/// and may carry an atom at 0.
///
/// At each distinct sample point both one-sided limits are compared. The
/// reference left limit is 0 at the origin and `F` at the next float down
/// elsewhere.
pub fn ks_distance<F: Fn(f64) -> f64>(emp: &EmpiricalCdf, analytic: F) -> Result<f64> {
    if emp.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = emp.len() as f64;
    let xs = emp.sorted();
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = analytic(x);
        let f_left = if x <= 0.0 {
            0.0
        } else {
            analytic(f64::from_bits(x.to_bits() - 1))
        };
        sup = sup
            .max((j as f64 / n - f).abs())
            .max((i as f64 / n - f_left).abs());
        i = j;
    }
    Ok(sup)
}

/// Sample means and standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSummary {
    pub mean_busy: f64,
    pub mean_idle: f64,
    pub mean_cycle: f64,
    pub stderr_busy: f64,
    pub stderr_idle: f64,
    pub stderr_cycle: f64,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn cycle_summary(samples: &CycleSamples) -> Result<CycleSummary> {
    if samples.busy.len() < 2 {
        return Err(Error::EmptySample);
    }
    let (mean_busy, stderr_busy) = mean_and_stderr(&samples.busy);
    let (mean_idle, stderr_idle) = mean_and_stderr(&samples.idle);
    let (mean_cycle, stderr_cycle) = mean_and_stderr(&samples.cycle);
    Ok(CycleSummary {
        mean_busy,
        mean_idle,
        mean_cycle,
        stderr_busy,
        stderr_idle,
        stderr_cycle,
    })
}

/// Pearson correlation; 0 when either sample is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Fraction of exactly-zero values.
pub fn zero_fraction(xs: &[f64]) -> f64 {
    xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_beta, BetaSpec, BetaTable};
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn p(l: f64, r: f64) -> QueueParams {
        QueueParams::new(l, r).unwrap()
    }

    #[test]
    fn service_sampling_examples() {
        let q = p(1.0, 1.0);
        assert_eq!(sample_service(&q, 0.0, 0.1).unwrap(), 0.0);
        assert_relative_eq!(
            sample_service(&q, 0.0, 0.5).unwrap(),
            0.541_324_854_612_918_1,
            max_relative = 1e-12
        );
        for u in [0.0, 0.5, 0.999] {
            assert_eq!(sample_service(&q, -1.0, u).unwrap(), 0.0);
        }
        assert!(sample_service(&q, 0.0, 1.0).is_err());
    }

    #[test]
    fn bisection_matches_closed_form_quantile() {
        let q = p(1.0, 1.0);
        // A one-knot table is constant β through the general machinery.
        let table = BetaTable::new(vec![(0.0, 0.2)]).unwrap();
        let vb = validate_beta(&q, BetaSpec::Tabulated(table), 10.0).unwrap();
        let model = ServiceModel::new(&q, &vb).unwrap();
        let s = ServiceSampler::new(&model);
        assert!(matches!(s, ServiceSampler::Tabulated(_)));
        for u in [0.1, 0.5, 0.7, 0.9, 0.999999] {
            let a = s.sample(u).unwrap();
            let g = closed_form::service_cdf(&q, 0.2, a).unwrap();
            if a == 0.0 {
                assert!(u <= g);
            } else {
                assert!(g >= u - 1e-12 && g - u < 2e-10, "{u}: G({a}) = {g}");
            }
        }
    }

    #[test]
    fn degenerate_cycles() {
        let s = run_cycles(&p(1.0, 1.0), -1.0, 10_000, 42).unwrap();
        assert!(s.busy.iter().all(|&b| b == 0.0));
        let m = cycle_summary(&s).unwrap();
        assert_eq!(m.mean_busy, 0.0);
        assert!((m.mean_cycle - 1.0).abs() < 0.03);
        assert_eq!(correlation(&s.busy, &s.idle).unwrap(), 0.0);
    }

    #[test]
    fn means_match_regenerative_targets() {
        let q = p(1.0, 1.0);
        let s = run_cycles(&q, 0.0, 100_000, 1).unwrap();
        let m = cycle_summary(&s).unwrap();
        assert!((m.mean_busy - q.exp_rho_minus_one()).abs() < 3.0 * m.stderr_busy);
        assert!((m.mean_idle - 1.0).abs() < 3.0 * m.stderr_idle);

        let q = p(1.0, LN_2);
        let s = run_cycles(&q, 1.0, 100_000, 1).unwrap();
        let m = cycle_summary(&s).unwrap();
        assert!((m.mean_cycle - 2.0).abs() < 3.0 * m.stderr_cycle);

        let q = p(2.0, 1.0);
        let s = run_cycles(&q, 0.2, 100_000, 1).unwrap();
        let m = cycle_summary(&s).unwrap();
        assert!((m.mean_cycle - 1.0f64.exp() / 2.0).abs() < 3.0 * m.stderr_cycle);
    }

    #[test]
    fn ks_against_closed_forms() {
        let q = p(1.0, 1.0);
        let s = run_cycles(&q, 0.0, 100_000, 1).unwrap();
        let busy = empirical_cdf(&s.busy).unwrap();
        let d = ks_distance(&busy, |t| closed_form::busy_period_cdf(&q, 0.0, t).unwrap()).unwrap();
        assert!(d < 0.01, "{d}");
        let idle = empirical_cdf(&s.idle).unwrap();
        assert!(ks_distance(&idle, |t| -(-t).exp_m1()).unwrap() < 0.01);
        let n = s.n as f64;
        let atom = closed_form::service_atom(&q, 0.0).unwrap();
        assert!((zero_fraction(&s.busy) - atom).abs() < 3.0 * (atom * (1.0 - atom) / n).sqrt());
        assert!(correlation(&s.busy, &s.idle).unwrap().abs() < 3.0 / n.sqrt());
    }

    #[test]
    fn deterministic_and_cycle_sums() {
        let q = p(1.0, 1.0);
        let a = run_cycles(&q, 0.3, 2_000, 7).unwrap();
        let b = run_cycles(&q, 0.3, 2_000, 7).unwrap();
        assert_eq!(a, b);
        let c = run_cycles(&q, 0.3, 2_000, 8).unwrap();
        assert_ne!(a.busy, c.busy);
        for i in 0..a.n {
            assert_eq!(a.cycle[i], a.busy[i] + a.idle[i]);
            assert!(a.idle[i] > 0.0 && a.busy[i] >= 0.0);
        }
        // Each cycle owns its stream, so a prefix run reproduces the prefix.
        let short = run_cycles(&q, 0.3, 100, 7).unwrap();
        assert_eq!(short.busy[..], a.busy[..100]);
        assert!(run_cycles(&q, 0.3, 0, 7).is_err());
    }

    #[test]
    fn empirical_cdf_examples() {
        let e = empirical_cdf(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(e.eval(0.0), 0.5);
        let e = empirical_cdf(&[3.0]).unwrap();
        assert_eq!(e.eval(2.9), 0.0);
        assert_eq!(e.eval(3.0), 1.0);
        assert_eq!(empirical_cdf(&[]), Err(Error::EmptySample));
    }

    #[test]
    fn ks_examples() {
        let xs = [0.3, 0.1, 0.1, 0.9];
        let e = empirical_cdf(&xs).unwrap();
        assert_eq!(ks_distance(&e, |t| e.eval(t)).unwrap(), 0.0);
        let e = empirical_cdf(&[0.5]).unwrap();
        assert_eq!(ks_distance(&e, |t| t.clamp(0.0, 1.0)).unwrap(), 0.5);
        // Atom at zero matched exactly.
        let e = empirical_cdf(&[0.0, 0.0, 1.0, 2.0]).unwrap();
        let d = ks_distance(&e, |t| 0.5 + 0.25 * t.min(2.0)).unwrap();
        assert_eq!(d, 0.25);
    }

    #[test]
    fn correlation_of_linear_data() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert_relative_eq!(correlation(&xs, &ys).unwrap(), 1.0, max_relative = 1e-15);
        assert!(correlation(&xs, &ys[..3]).is_err());
    }
}
