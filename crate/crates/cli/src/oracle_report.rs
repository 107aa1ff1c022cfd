//! Engine-versus-oracle comparisons for the `oracle` subcommand.

use std::fmt;
use std::str::FromStr;

use pulsedd::evolve::{evolve, Trajectory};
use pulsedd::model::PulseSchedule;
use pulsedd::oracle::{exact_dephasing_gamma, few_mode_evolve, golden_rule_rate, FewModeBath};
use pulsedd::rates::gamma11;

use crate::config::{ConfigError, ScenarioConfig};
use crate::run::run_one;
use crate::CliError;

/// Relative-error limits for the dephasing comparison.
pub const DEPHASING_LIMIT_FREE: f64 = 1e-4;
pub const DEPHASING_LIMIT_PULSED: f64 = 1e-3;
/// Relative-error limit and sample time for the golden-rule plateau.
pub const GOLDEN_LIMIT: f64 = 0.01;
pub const GOLDEN_TIME: f64 = 50.0;

pub const FEW_MODES: usize = 5;
pub const FEW_MODE_CUTOFF: usize = 2;
pub const FEW_MODE_SAMPLE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Dephasing,
    GoldenRule,
    FewMode,
}

impl FromStr for OracleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dephasing" => Ok(OracleKind::Dephasing),
            "golden_rule" | "golden-rule" => Ok(OracleKind::GoldenRule),
            "few_mode" | "few-mode" => Ok(OracleKind::FewMode),
            _ => Err(format!("unknown oracle `{s}`; expected dephasing, golden_rule or few_mode")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub lines: Vec<String>,
    pub pass: bool,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        write!(f, "{}", if self.pass { "PASS" } else { "FAIL" })
    }
}

pub fn run_oracle(kind: OracleKind, cfg: &ScenarioConfig) -> Result<Report, CliError> {
    match kind {
        OracleKind::Dephasing => dephasing(cfg),
        OracleKind::GoldenRule => golden_rule(cfg),
        OracleKind::FewMode => few_mode(cfg),
    }
}

fn dephasing(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    let params = cfg.params().map_err(ConfigError::from)?;
    if params.g_lambda != 0.0 {
        return Err(ConfigError::Value {
            key: "ratio".into(),
            reason: "the dephasing oracle needs g_lambda = 0 (ratio = inf or g_lambda = 0)".into(),
        }
        .into());
    }
    let quad = cfg.quadrature();
    let mut report = Report {
        lines: Vec::new(),
        pass: true,
    };
    for dt in cfg.sweep() {
        let schedule = cfg.schedule(dt.unwrap_or(1.0))?;
        let traj = run_one(cfg, dt)?;
        let c0 = traj.records[0].abs_rho10;
        let mut worst: f64 = 0.0;
        let mut worst_t = 0.0;
        for r in &traj.records {
            let gamma = exact_dephasing_gamma(r.t, &schedule, params.g_theta, params.beta, &quad)?;
            let exact = c0 * (-gamma).exp();
            let rel = (r.abs_rho10 - exact).abs() / exact;
            if rel > worst {
                worst = rel;
                worst_t = r.t;
            }
        }
        let limit = if schedule.is_empty() {
            DEPHASING_LIMIT_FREE
        } else {
            DEPHASING_LIMIT_PULSED
        };
        let ok = worst < limit;
        report.pass &= ok;
        report.lines.push(format!(
            "dephasing {}: max relative deviation {worst:.3e} at t = {worst_t:.4} over {} samples (limit {limit:e}) {}",
            describe(cfg, dt),
            traj.records.len(),
            if ok { "ok" } else { "FAIL" }
        ));
    }
    Ok(report)
}

fn golden_rule(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    let params = cfg.params().map_err(ConfigError::from)?;
    if params.g_lambda <= 0.0 {
        return Err(ConfigError::Value {
            key: "ratio".into(),
            reason: "the golden-rule oracle needs g_lambda > 0".into(),
        }
        .into());
    }
    let quad = cfg.quadrature();
    let golden = golden_rule_rate(&params);
    let mut lines = vec![format!("golden rule 2 pi I(w0) coth(beta w0 / 2) = {golden:.10}")];
    let mut pass = true;
    for t in [20.0, GOLDEN_TIME, 100.0, 200.0] {
        let rate = gamma11(t, &params, &PulseSchedule::empty(), &quad)?;
        let rel = rate / golden - 1.0;
        if t == GOLDEN_TIME {
            pass = rel.abs() < GOLDEN_LIMIT;
            lines.push(format!(
                "gamma11({t}) = {rate:.10}, deviation {:+.4}% (limit {}%) {}",
                100.0 * rel,
                100.0 * GOLDEN_LIMIT,
                if pass { "ok" } else { "FAIL" }
            ));
        } else {
            lines.push(format!("gamma11({t}) = {rate:.10}, deviation {:+.4}%", 100.0 * rel));
        }
    }
    Ok(Report { lines, pass })
}

// Linear interpolation of |rho10| between neighbouring records.
fn coherence_at(traj: &Trajectory, t: f64) -> f64 {
    let i = traj
        .records
        .partition_point(|r| r.t < t)
        .clamp(1, traj.records.len() - 1);
    let (a, b) = (&traj.records[i - 1], &traj.records[i]);
    let w = (t - a.t) / (b.t - a.t);
    a.abs_rho10 + w * (b.abs_rho10 - a.abs_rho10)
}

/// Compares the sign of `C(pulsed) - C(no pulses)` between the few-mode bath and the
/// engine on the first half of the recurrence window.
fn few_mode(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    let params = cfg.params().map_err(ConfigError::from)?;
    let rho0 = cfg.initial_state.state().map_err(ConfigError::from)?;
    let bath = FewModeBath::discretize(
        &params,
        FEW_MODES,
        FEW_MODE_CUTOFF,
        (0.0, 5.0 * params.omega0),
        false,
    )?;
    let window = bath.recurrence_time().min(cfg.t_max());
    let checked = 0.5 * window;
    let mut lines = vec![format!(
        "few-mode bath: {FEW_MODES} modes at {:?}, n_max {FEW_MODE_CUTOFF}, recurrence window {window:.3}, checked on (0, {checked:.3}]",
        bath.frequencies
    )];
    let mut pass = true;
    let free_bath = few_mode_evolve(&bath, &params, &PulseSchedule::empty(), rho0, window, FEW_MODE_SAMPLE)?;
    let free_engine = evolve(&params, &PulseSchedule::empty(), rho0, window, &cfg.options())?;
    for dt in cfg.sweep() {
        let schedule = cfg.schedule(dt.unwrap_or(1.0))?;
        let pulsed_bath = few_mode_evolve(&bath, &params, &schedule, rho0, window, FEW_MODE_SAMPLE)?;
        let pulsed_engine = evolve(&params, &schedule, rho0, window, &cfg.options())?;
        let mut raised = true;
        let mut agree = 0usize;
        let mut total = 0usize;
        for r in pulsed_bath.records.iter().filter(|r| r.t > 0.0 && r.t <= checked) {
            let bath_gain = r.abs_rho10 - coherence_at(&free_bath, r.t);
            let engine_gain = coherence_at(&pulsed_engine, r.t) - coherence_at(&free_engine, r.t);
            raised &= bath_gain > 0.0;
            total += 1;
            if (bath_gain > 0.0) == (engine_gain > 0.0) {
                agree += 1;
            }
        }
        let ok = raised && agree == total;
        pass &= ok;
        lines.push(format!(
            "{}: few-mode pulses raise |rho10| above no-pulse on the checked window: {}; engine trend agrees at {agree}/{total} samples {}",
            describe(cfg, dt),
            if raised { "yes" } else { "no" },
            if ok { "ok" } else { "FAIL" }
        ));
    }
    Ok(Report { lines, pass })
}

fn describe(cfg: &ScenarioConfig, dt: Option<f64>) -> String {
    let seq = match &cfg.sequence {
        crate::config::Sequence::None => "no pulses".to_string(),
        crate::config::Sequence::Bb => "bb".to_string(),
        crate::config::Sequence::Bp => "bp".to_string(),
        crate::config::Sequence::Custom(p) => format!("custom {}", p.display()),
    };
    match dt {
        Some(dt) => format!("{seq}, dt/tau_c = {dt}"),
        None => seq,
    }
}
