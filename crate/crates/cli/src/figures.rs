//! The published figure grid: which runs make up each panel and how to plot them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{Sequence, ScenarioConfig};
use crate::run::{dt_tag, run_one, write_csv_file};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    F1a,
    F1b,
    F2a,
    F2b,
    F2c,
    F3a,
    F3b,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::F1a,
        FigureId::F1b,
        FigureId::F2a,
        FigureId::F2b,
        FigureId::F2c,
        FigureId::F3a,
        FigureId::F3b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::F1a => "1a",
            FigureId::F1b => "1b",
            FigureId::F2a => "2a",
            FigureId::F2b => "2b",
            FigureId::F2c => "2c",
            FigureId::F3a => "3a",
            FigureId::F3b => "3b",
        }
    }

    /// CSV column on the vertical axis.
    pub fn column(self) -> &'static str {
        match self {
            FigureId::F1a | FigureId::F1b => "rho11",
            FigureId::F2a | FigureId::F2b | FigureId::F2c => "abs_rho10",
            FigureId::F3a | FigureId::F3b => "delta_theta",
        }
    }

    fn axis_label(self) -> &'static str {
        match self {
            FigureId::F1a | FigureId::F1b => "rho11",
            FigureId::F2a | FigureId::F2b | FigureId::F2c => "|rho10|",
            FigureId::F3a | FigureId::F3b => "delta theta",
        }
    }

    pub fn ratio(self) -> f64 {
        match self {
            FigureId::F2b => 5.0,
            FigureId::F2c => 50.0,
            _ => 2.0,
        }
    }

    /// Pulse spacings as powers `k` in `dt / tau_c = 2^-k`.
    pub fn exponents(self) -> &'static [i32] {
        match self {
            FigureId::F1a | FigureId::F3a => &[3],
            FigureId::F1b | FigureId::F3b => &[4],
            FigureId::F2a | FigureId::F2b | FigureId::F2c => &[2, 3, 4],
        }
    }

    pub fn curves(self) -> Vec<Curve> {
        let mut out = vec![Curve {
            sequence: CurveSequence::None,
            exponent: None,
        }];
        for &e in self.exponents() {
            for sequence in [CurveSequence::Bb, CurveSequence::Bp] {
                out.push(Curve {
                    sequence,
                    exponent: Some(e),
                });
            }
        }
        out
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().trim_start_matches("fig");
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| format!("unknown figure `{s}`; expected one of 1a, 1b, 2a, 2b, 2c, 3a, 3b"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSequence {
    None,
    Bb,
    Bp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Curve {
    pub sequence: CurveSequence,
    pub exponent: Option<i32>,
}

impl Curve {
    pub fn file_stem(&self, fig: FigureId) -> String {
        match (self.sequence, self.exponent) {
            (CurveSequence::None, _) => format!("fig{}_none", fig.name()),
            (CurveSequence::Bb, Some(e)) => format!("fig{}_bb_{}", fig.name(), dt_tag(2f64.powi(-e))),
            (CurveSequence::Bp, Some(e)) => format!("fig{}_bp_{}", fig.name(), dt_tag(2f64.powi(-e))),
            (_, None) => unreachable!("pulsed curves carry a spacing"),
        }
    }

    /// Scenario for this curve, starting from `base` (tolerances, step counts).
    pub fn config(&self, fig: FigureId, base: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = base.clone();
        cfg.ratio = fig.ratio();
        cfg.sequence = match self.sequence {
            CurveSequence::None => Sequence::None,
            CurveSequence::Bb => Sequence::Bb,
            CurveSequence::Bp => Sequence::Bp,
        };
        if let Some(e) = self.exponent {
            cfg.dt_over_tauc = vec![2f64.powi(-e)];
        }
        cfg.output = None;
        cfg
    }
}

/// Runs every curve of `fig` and writes `fig<id>_*.csv`, the matching
/// scenario files and `plot_fig<id>.py` into `outdir`.
pub fn reproduce(fig: FigureId, outdir: &Path, base: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(outdir).map_err(|source| CliError::Output {
        path: outdir.to_path_buf(),
        source,
    })?;
    let curves = fig.curves();
    let mut written: Vec<PathBuf> = curves
        .par_iter()
        .map(|curve| {
            let cfg = curve.config(fig, base);
            let stem = curve.file_stem(fig);
            let traj = run_one(&cfg, cfg.sweep()[0])?;
            let csv = outdir.join(format!("{stem}.csv"));
            write_csv_file(&csv, &traj, cfg.tau_c)?;
            let cfg_path = outdir.join(format!("{stem}.cfg"));
            let mut saved = cfg.clone();
            saved.output = Some(PathBuf::from(format!("{stem}.csv")));
            write_text(&cfg_path, &saved.to_text())?;
            log::info!("wrote {}", csv.display());
            Ok(csv)
        })
        .collect::<Result<_, CliError>>()?;
    let script = outdir.join(format!("plot_fig{}.py", fig.name()));
    write_text(&script, &plot_script(fig))?;
    written.push(script);
    Ok(written)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Matplotlib script: solid lines for bb, dotted for bp, dashed for no pulses.
pub fn plot_script(fig: FigureId) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Plots the CSV files next to this script. Requires matplotlib.");
    let _ = writeln!(s, "import csv");
    let _ = writeln!(s, "import os");
    let _ = writeln!(s, "import matplotlib");
    let _ = writeln!(s, "matplotlib.use(\"Agg\")");
    let _ = writeln!(s, "import matplotlib.pyplot as plt");
    let _ = writeln!(s);
    let _ = writeln!(s, "HERE = os.path.dirname(os.path.abspath(__file__))");
    let _ = writeln!(s, "COLUMN = \"{}\"", fig.column());
    let _ = writeln!(s, "CURVES = [");
    for curve in fig.curves() {
        let (style, label) = match (curve.sequence, curve.exponent) {
            (CurveSequence::None, _) => ("--", "no pulses".to_string()),
            (CurveSequence::Bb, Some(e)) => ("-", format!("bb, dt/tau_c = 2^-{e}")),
            (CurveSequence::Bp, Some(e)) => (":", format!("bp, dt/tau_c = 2^-{e}")),
            _ => unreachable!(),
        };
        let _ = writeln!(s, "    (\"{}.csv\", \"{style}\", \"{label}\"),", curve.file_stem(fig));
    }
    let _ = writeln!(s, "]");
    let _ = writeln!(s);
    let _ = writeln!(s, "def load(name):");
    let _ = writeln!(s, "    xs, ys = [], []");
    let _ = writeln!(s, "    with open(os.path.join(HERE, name), newline=\"\") as f:");
    let _ = writeln!(s, "        for row in csv.DictReader(f):");
    let _ = writeln!(s, "            if row[COLUMN] == \"\":");
    let _ = writeln!(s, "                continue");
    let _ = writeln!(s, "            xs.append(float(row[\"t/tau_c\"]))");
    let _ = writeln!(s, "            ys.append(float(row[COLUMN]))");
    let _ = writeln!(s, "    return xs, ys");
    let _ = writeln!(s);
    let _ = writeln!(s, "fig, ax = plt.subplots(figsize=(5, 4))");
    let _ = writeln!(s, "for name, style, label in CURVES:");
    let _ = writeln!(s, "    xs, ys = load(name)");
    let _ = writeln!(s, "    ax.plot(xs, ys, style, color=\"black\", linewidth=1, label=label)");
    let _ = writeln!(s, "ax.set_xlabel(\"t / tau_c\")");
    let _ = writeln!(s, "ax.set_ylabel(\"{}\")", fig.axis_label());
    let _ = writeln!(s, "ax.set_title(\"ratio = {}\")", fig.ratio());
    let _ = writeln!(s, "ax.legend(fontsize=\"small\")");
    let _ = writeln!(s, "fig.tight_layout()");
    let _ = writeln!(s, "fig.savefig(os.path.join(HERE, \"fig{}.png\"), dpi=150)", fig.name());
    s
}
