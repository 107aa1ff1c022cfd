//! Scenario execution and CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pulsedd::evolve::{evolve, Record, Trajectory};
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::CliError;

pub const CSV_HEADER: [&str; 11] = [
    "t",
    "t/tau_c",
    "rho11",
    "re_rho10",
    "im_rho10",
    "abs_rho10",
    "delta_theta",
    "gamma11",
    "eta11",
    "gamma10_re",
    "gamma10_im",
];

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(r: &Record, tau_c: f64) -> [String; 11] {
    [
        full(r.t),
        full(r.t / tau_c),
        full(r.state.rho11),
        full(r.state.rho10.re),
        full(r.state.rho10.im),
        full(r.abs_rho10),
        r.delta_theta.map(full).unwrap_or_default(),
        full(r.rates.gamma11),
        full(r.rates.eta11),
        full(r.rates.gamma10_re),
        full(r.rates.gamma10_im),
    ]
}

/// Writes a trajectory as CSV (LF line endings, 17 significant digits).
pub fn write_csv<W: Write>(out: W, traj: &Trajectory, tau_c: f64) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &traj.records {
        w.write_record(row(r, tau_c))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, traj: &Trajectory, tau_c: f64) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let file = fs::File::create(path).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(std::io::BufWriter::new(file), traj, tau_c).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

/// `0.125` -> `0p125`, for file names.
pub fn dt_tag(dt_over_tauc: f64) -> String {
    let exp = -dt_over_tauc.log2();
    if exp.fract() == 0.0 && exp > 0.0 {
        format!("dt2m{exp}")
    } else {
        format!("dt{}", format!("{dt_over_tauc}").replace('.', "p").replace('-', "m"))
    }
}

/// Output path for one run of a sweep: the configured path when there is a
/// single run, otherwise the configured stem with a spacing tag appended.
pub fn output_path(base: &Path, dt: Option<f64>, runs: usize) -> PathBuf {
    match dt {
        Some(dt) if runs > 1 => {
            let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            base.with_file_name(format!("{stem}_{}.{ext}", dt_tag(dt)))
        }
        _ => base.to_path_buf(),
    }
}

/// Integrates one point of a sweep.
pub fn run_one(cfg: &ScenarioConfig, dt: Option<f64>) -> Result<Trajectory, CliError> {
    let schedule = cfg.schedule(dt.unwrap_or(1.0))?;
    let params = cfg.params().map_err(crate::config::ConfigError::from)?;
    let rho0 = cfg
        .initial_state
        .state()
        .map_err(crate::config::ConfigError::from)?;
    Ok(evolve(&params, &schedule, rho0, cfg.t_max(), &cfg.options())?)
}

/// Runs every point of the configured sweep in parallel and writes one CSV per point.
///
/// `default_output` is used when the config names no output path. A relative
/// configured path is taken relative to the config file.
pub fn simulate(cfg: &ScenarioConfig, default_output: &Path) -> Result<Vec<PathBuf>, CliError> {
    let sweep = cfg.sweep();
    let base = match &cfg.output {
        Some(p) if p.is_relative() => cfg.base_dir.join(p),
        Some(p) => p.clone(),
        None => default_output.to_path_buf(),
    };
    sweep
        .par_iter()
        .map(|&dt| {
            let traj = run_one(cfg, dt)?;
            let path = output_path(&base, dt, sweep.len());
            write_csv_file(&path, &traj, cfg.tau_c)?;
            log::info!("wrote {} ({} rows)", path.display(), traj.records.len());
            Ok(path)
        })
        .collect()
}
