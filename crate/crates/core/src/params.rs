//! System parameters and the β-function that selects a member of the
//! Riccati service family.
//!
//! A service law belongs to the family when its indicator
//! `g(t)/(1-G(t)) - λG(t)` equals a prescribed β(t). The family is only
//! well defined while the running average `(1/t)∫₀ᵗβ` stays inside
//! `[-λ, λ/(e^ρ-1)]`, which [`validate_beta`] certifies.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Number of points in the admissibility check grid on `(0, t_max]`.
pub const CHECK_GRID_POINTS: usize = 10_000;

/// Relative slack on the admissible β range, so that an endpoint computed
/// along a different floating-point path is still accepted.
const BOUND_SLACK: f64 = 1e-12;

/// Arrival rate λ and traffic intensity ρ of an M|G|∞ queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    lambda: f64,
    rho: f64,
    alpha: f64,
    exp_neg_rho: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        validate_queue_params(lambda, rho)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Mean service time ρ/λ.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exp_neg_rho(&self) -> f64 {
        self.exp_neg_rho
    }

    /// `1 - e^{-ρ}`, the probability that a busy period contains more than
    /// its initial customer, and the total mass of the series kernel.
    pub fn one_minus_exp_neg_rho(&self) -> f64 {
        -(-self.rho).exp_m1()
    }

    /// `e^ρ - 1`.
    pub fn exp_rho_minus_one(&self) -> f64 {
        self.rho.exp_m1()
    }
}

pub fn validate_queue_params(lambda: f64, rho: f64) -> Result<QueueParams> {
    for (name, value) in [("lambda", lambda), ("rho", rho)] {
        if !value.is_finite() {
            return Err(Error::NonFiniteParameter { name, value });
        }
        if value <= 0.0 {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let exp_neg_rho = (-rho).exp();
    if exp_neg_rho <= 0.0 {
        // ρ so large that e^{-ρ} underflows.
        return Err(Error::NonFiniteParameter {
            name: "exp(-rho)",
            value: exp_neg_rho,
        });
    }
    Ok(QueueParams {
        lambda,
        rho,
        alpha: rho / lambda,
        exp_neg_rho,
    })
}

/// Admissible range `(-λ, λ/(e^ρ-1))` for the running average of β.
pub fn beta_bounds(params: &QueueParams) -> (f64, f64) {
    (-params.lambda, params.lambda / params.exp_rho_minus_one())
}

fn slack(params: &QueueParams) -> f64 {
    let (lo, hi) = beta_bounds(params);
    BOUND_SLACK * lo.abs().max(hi)
}

/// True when `beta` lies in the closed admissible range (up to rounding).
pub fn beta_is_admissible(params: &QueueParams, beta: f64) -> bool {
    let (lo, hi) = beta_bounds(params);
    let eps = slack(params);
    beta.is_finite() && beta >= lo - eps && beta <= hi + eps
}

pub(crate) fn check_constant_beta(params: &QueueParams, beta: f64) -> Result<()> {
    if beta_is_admissible(params, beta) {
        Ok(())
    } else {
        let (lo, hi) = beta_bounds(params);
        Err(Error::ConstantBetaOutOfRange { beta, lo, hi })
    }
}

/// Piecewise-linear β(t) through `(t, β)` knots, held constant past the
/// last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTable {
    times: Vec<f64>,
    values: Vec<f64>,
    // ∫₀^{times[k]} β, exact for the linear interpolant.
    areas: Vec<f64>,
}

impl BetaTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::EmptyTable);
        }
        if knots[0].0 != 0.0 {
            return Err(Error::InvalidTable(format!(
                "first knot must be at t = 0, found t = {}",
                knots[0].0
            )));
        }
        for &(t, b) in &knots {
            if !t.is_finite() || !b.is_finite() {
                return Err(Error::InvalidTable(format!("non-finite knot ({t}, {b})")));
            }
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidTable(format!(
                    "knot times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        let (times, values): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        let mut areas = Vec::with_capacity(times.len());
        areas.push(0.0);
        for k in 1..times.len() {
            let trapezoid = 0.5 * (values[k - 1] + values[k]) * (times[k] - times[k - 1]);
            areas.push(areas[k - 1] + trapezoid);
        }
        Ok(BetaTable {
            times,
            values,
            areas,
        })
    }

    /// Reads a two-column `t,beta` CSV with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut knots = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidTable(e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::InvalidTable(format!(
                    "row {}: expected 2 columns, found {}",
                    line + 2,
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::InvalidTable(format!("row {}: cannot parse {s:?}: {e}", line + 2))
                })
            };
            knots.push((parse(&record[0])?, parse(&record[1])?));
        }
        BetaTable::new(knots)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        BetaTable::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.times
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("nonempty table")
    }

    /// β beyond the last knot.
    pub fn tail_value(&self) -> f64 {
        *self.values.last().expect("nonempty table")
    }

    fn segment(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t).saturating_sub(1)
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = self.segment(t);
        if k + 1 >= self.times.len() {
            return self.tail_value();
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// `∫₀ᵗ β`, exact for the piecewise-linear interpolant.
    pub fn cumulative(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let t0 = self.times[k];
        self.areas[k] + 0.5 * (self.values[k] + self.value(t)) * (t - t0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The β(t) that selects a member of the service family.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaSpec {
    Constant(f64),
    Tabulated(BetaTable),
}

impl BetaSpec {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            BetaSpec::Constant(b) => *b,
            BetaSpec::Tabulated(table) => table.value(t),
        }
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            BetaSpec::Constant(b) => b * t,
            BetaSpec::Tabulated(table) => table.cumulative(t),
        }
    }

    /// β on `[last knot, ∞)`.
    pub fn tail_value(&self) -> f64 {
        match self {
            BetaSpec::Constant(b) => *b,
            BetaSpec::Tabulated(table) => table.tail_value(),
        }
    }

    /// Time from which β is constant.
    pub fn tail_start(&self) -> f64 {
        match self {
            BetaSpec::Constant(_) => 0.0,
            BetaSpec::Tabulated(table) => table.last_time(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            BetaSpec::Constant(b) => b.abs(),
            BetaSpec::Tabulated(table) => table.max_abs(),
        }
    }
}

/// A β certified against the admissible running-average range.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedBeta {
    spec: BetaSpec,
    params: QueueParams,
    t_max_checked: f64,
}

impl ValidatedBeta {
    pub fn spec(&self) -> &BetaSpec {
        &self.spec
    }

    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    pub fn t_max_checked(&self) -> f64 {
        self.t_max_checked
    }

    /// The constant value, if β is constant.
    pub fn constant(&self) -> Option<f64> {
        match self.spec {
            BetaSpec::Constant(b) => Some(b),
            BetaSpec::Tabulated(_) => None,
        }
    }

    /// β ≡ -λ: the service time is zero with probability one.
    pub fn is_degenerate(&self) -> bool {
        self.constant()
            .is_some_and(|b| (b + self.params.lambda).abs() <= slack(&self.params))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.spec.value(t)
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        self.spec.cumulative(t)
    }
}

/// Certifies `spec` for the queue `params` over `(0, t_max]`.
///
/// Constant β is checked directly. Tabulated β is checked on a uniform grid
/// of [`CHECK_GRID_POINTS`] points, and its constant tail (the limit of the
/// running average) must be admissible too.
pub fn validate_beta(params: &QueueParams, spec: BetaSpec, t_max: f64) -> Result<ValidatedBeta> {
    if t_max.is_nan() || t_max <= 0.0 || t_max.is_infinite() {
        return Err(Error::NonPositiveTime(t_max));
    }
    let (lo, hi) = beta_bounds(params);
    let eps = slack(params);
    match &spec {
        BetaSpec::Constant(b) => check_constant_beta(params, *b)?,
        BetaSpec::Tabulated(table) => {
            let step = t_max / CHECK_GRID_POINTS as f64;
            for j in 1..=CHECK_GRID_POINTS {
                let t = step * j as f64;
                let average = table.cumulative(t) / t;
                if !(average >= lo - eps && average <= hi + eps) {
                    return Err(Error::BetaOutOfRange { t, average, lo, hi });
                }
            }
            let tail = table.tail_value();
            if !(tail >= lo - eps && tail <= hi + eps) {
                return Err(Error::BetaOutOfRange {
                    t: f64::INFINITY,
                    average: tail,
                    lo,
                    hi,
                });
            }
        }
    }
    Ok(ValidatedBeta {
        spec,
        params: *params,
        t_max_checked: t_max,
    })
}

/// `∫₀ᵗ β(u) du`.
pub fn cumulative_beta(vbeta: &ValidatedBeta, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(vbeta.cumulative(t))
}

/// `(1/t) ∫₀ᵗ β(u) du`.
pub fn running_average_beta(vbeta: &ValidatedBeta, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(vbeta.cumulative(t) / t)
}
