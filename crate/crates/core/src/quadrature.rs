//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals, plus a
//! panel cache for running integrals `t -> ∫₀ᵗ f`.
//!
//! Every infinite-range integral in this crate has a closed-form exponential
//! tail, so only finite intervals are handled here.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2000;

/// Absolute and relative error targets; the integral is accepted once the
/// summed error estimate falls below `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const TIGHT: Tolerance = Tolerance {
        abs: 1e-15,
        rel: 1e-13,
    };
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::TIGHT
    }
}

/// One G7/K15 panel: returns (kronrod estimate, |kronrod - gauss|).
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).abs())
}

/// Integrates `f` over `[a, b]` by globally adaptive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let (value, error) = kronrod15(&f, a, b);
    let mut intervals = vec![(a, b, value, error)];
    let mut total = value;
    let mut total_err = error;

    loop {
        if !total.is_finite() {
            return Err(Error::QuadratureFailure {
                a,
                b,
                error: total_err,
            });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure {
                a,
                b,
                error: total_err,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one interval");
        let (lo, hi, v, e) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further in f64; accept what we have.
            return Ok(total);
        }
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Prefix integrals of a function over fixed breakpoints.
///
/// The cache stores `∫₀^{b_k} f` at every breakpoint `b_k`; a query at `t`
/// adds an adaptive integral over the partial panel containing `t`. The
/// function itself is not stored, callers pass the same `f` on every query.
#[derive(Debug, Clone)]
pub struct PanelCache {
    breakpoints: Vec<f64>,
    prefix: Vec<f64>,
    tol: Tolerance,
}

impl PanelCache {
    /// `breakpoints` must start at 0 and be strictly increasing.
    pub fn build<F: Fn(f64) -> f64>(f: &F, breakpoints: Vec<f64>, tol: Tolerance) -> Result<Self> {
        debug_assert!(breakpoints.first() == Some(&0.0));
        let mut prefix = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in breakpoints.windows(2) {
            acc += integrate(f, w[0], w[1], tol)?;
            prefix.push(acc);
        }
        Ok(PanelCache {
            breakpoints,
            prefix,
            tol,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `∫₀^{end}` where `end` is the last breakpoint.
    pub fn total(&self) -> f64 {
        *self.prefix.last().expect("nonempty prefix")
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("nonempty breakpoints")
    }

    /// `∫₀ᵗ f` for `0 <= t <= end`.
    pub fn value<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> Result<f64> {
        let k = self.panel_index(t);
        let start = self.breakpoints[k];
        if t == start {
            return Ok(self.prefix[k]);
        }
        Ok(self.prefix[k] + integrate(f, start, t, self.tol)?)
    }

    fn panel_index(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.breakpoints.len() - 1)
    }
}

/// `t ↦ (1 - e^{-x}) / x` evaluated without cancellation; 1 at `x = 0`.
pub(crate) fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(e^{-a t} - e^{-b t}) / (b - a)`, symmetric in `a` and `b`, finite and
/// accurate when `a ≈ b` (limit `t e^{-a t}`).
pub(crate) fn exp_difference_quotient(a: f64, b: f64, t: f64) -> f64 {
    let slow = a.min(b);
    let gap = (a - b).abs();
    t * (-slow * t).exp() * one_minus_exp_over(gap * t)
}
