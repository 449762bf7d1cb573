use std::io::{self, Write};

use mginf_core::riccati::ServiceModel;
use mginf_core::simulator::{
    correlation, cycle_summary, empirical_cdf, ks_distance, run_cycles_with, zero_fraction,
    CycleSamples, CycleSummary, ServiceSampler,
};

use crate::config::RunConfig;
use crate::curves::Curves;
use crate::error::CliError;
use crate::format::fmt17;
use crate::output::open_output;

/// Means of the busy period, idle period and cycle.
pub fn target_means(model: &ServiceModel) -> (f64, f64, f64) {
    let p = model.params();
    let idle = 1.0 / p.lambda();
    match model {
        ServiceModel::Degenerate(_) => (0.0, idle, idle),
        ServiceModel::Riccati(_) => (
            p.exp_rho_minus_one() / p.lambda(),
            idle,
            p.rho().exp() / p.lambda(),
        ),
    }
}

/// Simulated cycles together with their statistics against the analytic
/// curves.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub samples: CycleSamples,
    pub summary: CycleSummary,
    pub targets: (f64, f64, f64),
    pub ks_busy: f64,
    pub ks_idle: f64,
    pub ks_cycle: f64,
    pub zero_fraction: f64,
    pub atom: f64,
    pub correlation: f64,
}

pub fn simulate(cfg: &RunConfig, curves: &Curves) -> Result<SimulationReport, CliError> {
    if cfg.cycles < 2 {
        return Err(CliError::Validation(format!(
            "--cycles must be at least 2, got {}",
            cfg.cycles
        )));
    }
    let sampler = ServiceSampler::new(&cfg.model);
    let samples = run_cycles_with(&cfg.params, &sampler, cfg.cycles, cfg.seed)?;
    let summary = cycle_summary(&samples)?;
    let lambda = cfg.params.lambda();
    let ks_busy = ks_distance(&empirical_cdf(&samples.busy)?, |t| curves.busy_period(t))?;
    let ks_idle = ks_distance(&empirical_cdf(&samples.idle)?, |t| -(-lambda * t).exp_m1())?;
    let ks_cycle = ks_distance(&empirical_cdf(&samples.cycle)?, |t| curves.busy_cycle(t))?;
    Ok(SimulationReport {
        zero_fraction: zero_fraction(&samples.busy),
        atom: cfg.model.service_atom(),
        correlation: correlation(&samples.busy, &samples.idle)?,
        targets: target_means(&cfg.model),
        samples,
        summary,
        ks_busy,
        ks_idle,
        ks_cycle,
    })
}

impl SimulationReport {
    pub fn summary_lines(&self) -> Vec<String> {
        let s = &self.summary;
        let (tb, ti, tc) = self.targets;
        vec![
            format!("cycles = {}", self.samples.n),
            format!("seed = {}", self.samples.seed),
            format!(
                "mean_busy = {} stderr {} target {}",
                fmt17(s.mean_busy),
                fmt17(s.stderr_busy),
                fmt17(tb)
            ),
            format!(
                "mean_idle = {} stderr {} target {}",
                fmt17(s.mean_idle),
                fmt17(s.stderr_idle),
                fmt17(ti)
            ),
            format!(
                "mean_cycle = {} stderr {} target {}",
                fmt17(s.mean_cycle),
                fmt17(s.stderr_cycle),
                fmt17(tc)
            ),
            format!("ks_busy = {}", fmt17(self.ks_busy)),
            format!("ks_idle = {}", fmt17(self.ks_idle)),
            format!("ks_cycle = {}", fmt17(self.ks_cycle)),
            format!(
                "zero_busy_fraction = {} service_atom {}",
                fmt17(self.zero_fraction),
                fmt17(self.atom)
            ),
            format!("busy_idle_correlation = {}", fmt17(self.correlation)),
        ]
    }
}

/// Writes `busy,idle,cycle` rows, then the summary: to standard output
/// when the rows go to `--out`, to standard error otherwise.
pub fn run_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let curves = Curves::new(&cfg.model, &cfg.grid)?;
    let report = simulate(cfg, &curves)?;
    let mut out = open_output(cfg.out.as_deref())?;
    writeln!(out, "busy,idle,cycle")?;
    let s = &report.samples;
    for i in 0..s.n {
        writeln!(
            out,
            "{},{},{}",
            fmt17(s.busy[i]),
            fmt17(s.idle[i]),
            fmt17(s.cycle[i])
        )?;
    }
    out.flush()?;
    drop(out);

    let lines = report.summary_lines().join("\n");
    if cfg.out.is_some() {
        writeln!(io::stdout().lock(), "{lines}")?;
    } else {
        writeln!(io::stderr().lock(), "{lines}")?;
    }
    Ok(())
}
