use std::fmt;
use std::io::Write;

use mginf_core::closed_form;
use mginf_core::riccati::{riccati_residual, ServiceModel};
use mginf_core::transform::{
    busy_cycle_cdf_series, busy_cycle_laplace, busy_period_cdf_series, busy_period_laplace,
    busy_period_laplace_closed_form, busy_period_laplace_from_service, LaplacePoint,
};
use mginf_core::Result as CoreResult;

use crate::config::RunConfig;
use crate::curves::{Curves, SERIES_TOL};
use crate::error::CliError;
use crate::format::fmt17;
use crate::output::open_output;
use crate::simulate::simulate;

pub const SUP_DISTANCE_TOL: f64 = 1e-3;
pub const TRANSFORM_TOL: f64 = 1e-5;
pub const TRANSFORM_POINTS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
pub const RESIDUAL_TOL: f64 = 1e-3;
pub const RESIDUAL_POINTS: usize = 100;
pub const MEAN_REL_TOL: f64 = 1e-6;
pub const BOUND_POINTS: usize = 5000;
pub const BOUND_SLACK: f64 = 1e-9;
pub const CONFLUENT_TOL: f64 = 1e-4;
pub const CONFLUENT_HORIZON: f64 = 10.0;
pub const CONFLUENT_OFFSET: f64 = 1e-6;
/// Relative rate gap within which the confluent limit is checked.
pub const CONFLUENT_WINDOW: f64 = 1e-5;
pub const INDICATOR_TOL: f64 = 1e-6;
pub const SHAPE_RANGE_TOL: f64 = 1e-6;
pub const SHAPE_MONOTONE_TOL: f64 = 1e-8;
pub const KS_TOL: f64 = 0.01;
const MEAN_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn verdict(name: &'static str, ok: bool, detail: String) -> Self {
        Check {
            name,
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Check {
            name,
            status: Status::Skipped,
            detail: why.to_string(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.status, self.name, self.detail)
    }
}

/// `(1 - X̄(δ))/δ` extrapolated from δ and 2δ.
fn richardson_mean<F: Fn(f64) -> CoreResult<LaplacePoint>>(transform: F) -> CoreResult<f64> {
    let m = |d: f64| -> CoreResult<f64> { Ok((1.0 - transform(d)?.value) / d) };
    Ok(2.0 * m(MEAN_DELTA)? - m(2.0 * MEAN_DELTA)?)
}

fn rel_err(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs()
}

/// Runs every check for one parameter point.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let params = &cfg.params;
    let model = &cfg.model;
    let constant = cfg.beta.constant();
    let lambda = params.lambda();
    let mut checks = Vec::new();

    // Convolution series against the closed forms.
    let bp = busy_period_cdf_series(model, &cfg.grid, SERIES_TOL)?;
    let cycle = busy_cycle_cdf_series(params, &bp)?;
    let sup_tol = cfg.tol.unwrap_or(SUP_DISTANCE_TOL);
    match constant {
        Some(b) => {
            let d = bp
                .cdf
                .sup_distance(|t| closed_form::busy_period_cdf(params, b, t).unwrap_or(f64::NAN));
            checks.push(Check::verdict(
                "series_busy_period",
                d < sup_tol,
                format!("sup distance {} (limit {})", fmt17(d), fmt17(sup_tol)),
            ));
            let d = cycle
                .cdf
                .sup_distance(|t| closed_form::busy_cycle_cdf(params, b, t).unwrap_or(f64::NAN));
            checks.push(Check::verdict(
                "series_busy_cycle",
                d < sup_tol,
                format!("sup distance {} (limit {})", fmt17(d), fmt17(sup_tol)),
            ));
        }
        None => {
            checks.push(Check::skipped(
                "series_busy_period",
                "no closed form for tabulated beta",
            ));
            checks.push(Check::skipped(
                "series_busy_cycle",
                "no closed form for tabulated beta",
            ));
        }
    }
    let atom_gap = (bp.cdf.values()[0] - model.service_atom()).abs();
    let in_range = bp
        .cdf
        .values()
        .iter()
        .chain(cycle.cdf.values())
        .all(|v| (0.0..=1.0 + SHAPE_RANGE_TOL).contains(v));
    let ok = bp.cdf.is_nondecreasing(SHAPE_MONOTONE_TOL)
        && cycle.cdf.is_nondecreasing(SHAPE_MONOTONE_TOL)
        && in_range
        && atom_gap < 1e-12;
    checks.push(Check::verdict(
        "series_shape",
        ok,
        format!("B(0) - G(0) = {}, {} terms", fmt17(atom_gap), bp.order + 1),
    ));

    // Transforms.
    let service = |t: f64| model.service_cdf(t).unwrap_or(f64::NAN);
    let mut worst_routes = 0.0f64;
    let mut worst_mix = 0.0f64;
    for &s in &TRANSFORM_POINTS {
        let from_kernel = busy_period_laplace(model, s)?.value;
        let from_service = busy_period_laplace_from_service(params, service, s)?.value;
        worst_routes = worst_routes.max((from_service - from_kernel).abs());
        if let Some(b) = constant {
            let mix = busy_period_laplace_closed_form(params, b, s)?.value;
            worst_mix = worst_mix
                .max((from_service - mix).abs())
                .max((from_kernel - mix).abs());
        }
    }
    checks.push(Check::verdict(
        "transform_consistency",
        worst_routes < TRANSFORM_TOL,
        format!(
            "max |from_service - from_kernel| {} (limit {})",
            fmt17(worst_routes),
            fmt17(TRANSFORM_TOL)
        ),
    ));
    if constant.is_some() {
        checks.push(Check::verdict(
            "transform_mixture",
            worst_mix < TRANSFORM_TOL,
            format!(
                "max distance to mixture {} (limit {})",
                fmt17(worst_mix),
                fmt17(TRANSFORM_TOL)
            ),
        ));
    } else {
        checks.push(Check::skipped(
            "transform_mixture",
            "no closed form for tabulated beta",
        ));
    }

    // Riccati residual and the monotony indicator.
    match model {
        ServiceModel::Degenerate(_) => {
            checks.push(Check::skipped("riccati_residual", "degenerate service law"));
            checks.push(Check::skipped(
                "monotony_indicator",
                "degenerate service law",
            ));
        }
        ServiceModel::Riccati(ctx) => {
            let h = cfg.grid.t_max() / RESIDUAL_POINTS as f64;
            let mut worst = 0.0f64;
            let mut worst_ind = 0.0f64;
            for i in 1..=RESIDUAL_POINTS {
                let t = h * i as f64;
                worst = worst.max(riccati_residual(ctx, t)?.abs());
                let b = cfg.beta.value(t);
                let ind = match constant {
                    Some(b) => closed_form::monotony_indicator(params, b, t)?,
                    None => ctx.monotony_indicator(t)?,
                };
                worst_ind = worst_ind.max((ind - b).abs() / (1.0 + b.abs()));
            }
            checks.push(Check::verdict(
                "riccati_residual",
                worst < RESIDUAL_TOL,
                format!(
                    "max residual {} (limit {})",
                    fmt17(worst),
                    fmt17(RESIDUAL_TOL)
                ),
            ));
            checks.push(Check::verdict(
                "monotony_indicator",
                worst_ind < INDICATOR_TOL,
                format!("max |indicator - beta| / (1 + |beta|) {}", fmt17(worst_ind)),
            ));
        }
    }

    // Mean identities.
    let mean_g = model.service_curve().mean()?;
    let (mean_b, mean_z) = match constant {
        Some(b) => (
            closed_form::busy_period_curve(params, b)?.mean()?,
            closed_form::busy_cycle_curve(params, b)?.mean()?,
        ),
        None => (
            richardson_mean(|s| busy_period_laplace(model, s))?,
            richardson_mean(|s| Ok(busy_cycle_laplace(params, busy_period_laplace(model, s)?)))?,
        ),
    };
    let targets = [
        params.rho() / lambda,
        params.exp_rho_minus_one() / lambda,
        params.rho().exp() / lambda,
    ];
    let errs = [
        rel_err(mean_g, targets[0]),
        rel_err(mean_b, targets[1]),
        rel_err(mean_z, targets[2]),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    checks.push(Check::verdict(
        "mean_identities",
        worst < MEAN_REL_TOL,
        format!(
            "means G {} B {} Z {}, targets {} {} {}, max relative error {}",
            fmt17(mean_g),
            fmt17(mean_b),
            fmt17(mean_z),
            fmt17(targets[0]),
            fmt17(targets[1]),
            fmt17(targets[2]),
            fmt17(worst)
        ),
    ));

    // Envelope ordering.
    let curves = Curves::new(model, &cfg.grid)?;
    let (mut bp_gap, mut floor_gap, mut ceiling_gap) =
        (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let dt = cfg.grid.t_max() / (BOUND_POINTS - 1) as f64;
    for i in 0..BOUND_POINTS {
        let t = dt * i as f64;
        let env = closed_form::envelope_bounds(params, t)?;
        let (b, z) = (curves.busy_period(t), curves.busy_cycle(t));
        bp_gap = bp_gap.min(b - env.bp_floor);
        floor_gap = floor_gap.min(z - env.cycle_floor);
        ceiling_gap = ceiling_gap.min(env.cycle_ceiling - z);
    }
    for (name, gap) in [
        ("bound_bp_floor", bp_gap),
        ("bound_cycle_floor", floor_gap),
        ("bound_cycle_ceiling", ceiling_gap),
    ] {
        checks.push(Check::verdict(
            name,
            gap >= -BOUND_SLACK,
            format!("min slack {} over {BOUND_POINTS} points", fmt17(gap)),
        ));
    }

    // Confluent busy-cycle limit.
    match constant {
        Some(b) if model.kernel().is_some() => {
            let mu = params.exp_neg_rho() * (lambda + b);
            if (lambda - mu).abs() < CONFLUENT_WINDOW * lambda {
                let limit = |t: f64| 1.0 - (-lambda * t).exp() - b * t * (-lambda * t).exp();
                let nearby =
                    mginf_core::params::QueueParams::new(lambda, params.rho() - CONFLUENT_OFFSET)?;
                let mut worst = 0.0f64;
                for i in 0..=1000 {
                    let t = CONFLUENT_HORIZON * i as f64 / 1000.0;
                    worst = worst
                        .max((closed_form::busy_cycle_cdf(params, b, t)? - limit(t)).abs())
                        .max((closed_form::busy_cycle_cdf(&nearby, b, t)? - limit(t)).abs());
                }
                checks.push(Check::verdict(
                    "confluent_limit",
                    worst < CONFLUENT_TOL,
                    format!("max distance to the confluent limit {}", fmt17(worst)),
                ));
            } else {
                checks.push(Check::skipped("confluent_limit", "rates do not coincide"));
            }
        }
        _ => checks.push(Check::skipped(
            "confluent_limit",
            "needs a non-degenerate constant beta",
        )),
    }

    // Monte Carlo.
    let sim = simulate(cfg, &curves)?;
    let n = sim.samples.n as f64;
    for (name, d) in [
        ("ks_busy", sim.ks_busy),
        ("ks_idle", sim.ks_idle),
        ("ks_cycle", sim.ks_cycle),
    ] {
        checks.push(Check::verdict(
            name,
            d < KS_TOL,
            format!("{} (limit {})", fmt17(d), fmt17(KS_TOL)),
        ));
    }
    let atom_se = (sim.atom * (1.0 - sim.atom) / n).sqrt();
    checks.push(Check::verdict(
        "zero_busy_fraction",
        (sim.zero_fraction - sim.atom).abs() <= 3.0 * atom_se,
        format!(
            "{} vs G(0) {} (3 se {})",
            fmt17(sim.zero_fraction),
            fmt17(sim.atom),
            fmt17(3.0 * atom_se)
        ),
    ));
    checks.push(Check::verdict(
        "busy_idle_correlation",
        sim.correlation.abs() < 3.0 / n.sqrt(),
        format!(
            "{} (limit {})",
            fmt17(sim.correlation),
            fmt17(3.0 / n.sqrt())
        ),
    ));
    let s = &sim.summary;
    let (tb, ti, tc) = sim.targets;
    for (name, m, se, target) in [
        ("sim_mean_busy", s.mean_busy, s.stderr_busy, tb),
        ("sim_mean_idle", s.mean_idle, s.stderr_idle, ti),
        ("sim_mean_cycle", s.mean_cycle, s.stderr_cycle, tc),
    ] {
        checks.push(Check::verdict(
            name,
            (m - target).abs() <= 3.0 * se,
            format!(
                "{} vs {} (3 se {})",
                fmt17(m),
                fmt17(target),
                fmt17(3.0 * se)
            ),
        ));
    }
    Ok(checks)
}

/// Prints one line per check. Returns whether nothing failed.
pub fn run_verify(cfg: &RunConfig) -> Result<bool, CliError> {
    let checks = run_checks(cfg)?;
    let mut out = open_output(cfg.out.as_deref())?;
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    out.flush()?;
    Ok(checks.iter().all(|c| c.status != Status::Fail))
}
