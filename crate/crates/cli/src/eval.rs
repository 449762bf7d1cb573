use std::io::Write;

use mginf_core::closed_form;
use mginf_core::riccati::ServiceModel;

use crate::config::RunConfig;
use crate::curves::Curves;
use crate::error::CliError;
use crate::format::fmt17;
use crate::output::open_output;

pub const EVAL_HEADER: &str = "t,G,B,Z,p00,p10,indicator,bp_floor,cycle_floor,cycle_ceiling";

/// Writes every curve on the configured grid as CSV.
pub fn run_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let curves = Curves::new(&cfg.model, &cfg.grid)?;
    let mut rows = Vec::with_capacity(cfg.grid.len());
    for t in cfg.grid.times() {
        let g = cfg.model.service_cdf(t)?;
        let p00 = cfg.model.empty_probability(t)?;
        let indicator = match (&cfg.model, cfg.beta.constant()) {
            (ServiceModel::Degenerate(_), _) => f64::NAN,
            (_, Some(b)) => closed_form::monotony_indicator(&cfg.params, b, t)?,
            (ServiceModel::Riccati(ctx), None) => ctx.monotony_indicator(t)?,
        };
        let env = closed_form::envelope_bounds(&cfg.params, t)?;
        let row = [
            t,
            g,
            curves.busy_period(t),
            curves.busy_cycle(t),
            p00,
            p00 * g,
            indicator,
            env.bp_floor,
            env.cycle_floor,
            env.cycle_ceiling,
        ];
        rows.push(row.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(","));
    }

    let mut out = open_output(cfg.out.as_deref())?;
    writeln!(out, "{EVAL_HEADER}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}
