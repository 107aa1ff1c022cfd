//! Fixed-step integration of the toggling-frame equations of motion.
//!
//! ```text
//! d rho11 / dt = -gamma11 rho11 + eta11
//! d rho10 / dt = -gamma10_re Re(rho10) - i gamma10_im Im(rho10)
//! ```
//!
//! The decay-channel parts of `gamma10_re` and `gamma10_im` are complex. By
//! default they enter in full (their imaginary parts shift the coherence
//! phase); [`CoherenceModel::RealPart`] drops the imaginary parts.
//!
//! Each inter-pulse interval is integrated with classical RK4 on its own
//! uniform grid, so pulse times always fall on step boundaries and no step
//! sees a rate discontinuity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{PhysicalParams, PulseSchedule, Segment, Signs};
use crate::quadrature::QuadratureSpec;
use crate::rates::{RateEngine, RateSet};

/// Population violations larger than this are reported as warnings.
pub const POSITIVITY_SLACK: f64 = 1e-3;

/// Below this magnitude the coherence phase is undefined.
pub const PHASE_FLOOR: f64 = 1e-12;

/// Reduced density matrix in the toggling frame.
///
/// Only `rho11` and `rho10` are stored; `rho00 = 1 - rho11` and
/// `rho01 = conj(rho10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub rho11: f64,
    pub rho10: Complex64,
}

impl QubitState {
    pub fn new(rho11: f64, rho10: Complex64) -> Result<Self> {
        let state = Self { rho11, rho10 };
        state.validate()?;
        Ok(state)
    }

    /// `(|0> + |1>) / sqrt(2)`.
    pub fn plus() -> Self {
        Self {
            rho11: 0.5,
            rho10: Complex64::new(0.5, 0.0),
        }
    }

    /// `(|0> + i|1>) / sqrt(2)`.
    pub fn plus_i() -> Self {
        Self {
            rho11: 0.5,
            rho10: Complex64::new(0.0, 0.5),
        }
    }

    pub fn rho00(&self) -> f64 {
        1.0 - self.rho11
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho11) {
            return Err(invalid("rho11", format!("must lie in [0, 1], got {}", self.rho11)));
        }
        if !(self.rho10.re.is_finite() && self.rho10.im.is_finite()) {
            return Err(invalid("rho10", "must be finite"));
        }
        if self.rho10.norm_sqr() > self.rho11 * self.rho00() + 1e-12 {
            return Err(invalid(
                "rho10",
                format!(
                    "|rho10| = {} exceeds sqrt(rho11 rho00) = {}",
                    self.rho10.norm(),
                    (self.rho11 * self.rho00()).sqrt()
                ),
            ));
        }
        Ok(())
    }

    fn axpy(&self, h: f64, d: &Derivative) -> Self {
        Self {
            rho11: self.rho11 + h * d.rho11,
            rho10: self.rho10 + h * d.rho10,
        }
    }
}

/// How the complex decay-channel contributions to the coherence rates enter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoherenceModel {
    /// Keep only the real parts of `gamma10_re` and `gamma10_im`; the phase of
    /// `rho10` then stays fixed for `plus` and `plus_i` initial states.
    RealPart,
    /// Keep the full complex coefficients, including the frequency shift.
    #[default]
    Complex,
}

#[derive(Debug, Clone, Copy)]
struct Derivative {
    rho11: f64,
    rho10: Complex64,
}

fn derivative(state: &QubitState, r: &RateSet, model: CoherenceModel) -> Derivative {
    let x = state.rho10.re;
    let y = state.rho10.im;
    let gamma_re = Complex64::new(r.gamma10_re, 0.0);
    let gamma_im = Complex64::new(r.gamma10_im, 0.0);
    let (gamma_re, gamma_im) = match model {
        CoherenceModel::RealPart => (gamma_re, gamma_im),
        CoherenceModel::Complex => (
            gamma_re + Complex64::new(0.0, r.gamma10_re_shift),
            gamma_im + Complex64::new(0.0, r.gamma10_im_shift),
        ),
    };
    Derivative {
        rho11: -r.gamma11 * state.rho11 + r.eta11,
        rho10: -gamma_re * x - Complex64::i() * gamma_im * y,
    }
}

/// One sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub state: QubitState,
    pub abs_rho10: f64,
    /// Unwrapped `arg rho10(t) - arg rho10(0)`; `None` where `|rho10|` is below [`PHASE_FLOOR`].
    pub delta_theta: Option<f64>,
    /// Rates that drove the step ending at `t` (left limit at a pulse).
    pub rates: RateSet,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory holds the initial record")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    /// Record whose time is within `1e-9` (relative) of `t`.
    pub fn at(&self, t: f64) -> Option<&Record> {
        let tol = 1e-9 * t.abs().max(1.0);
        let i = self.records.partition_point(|r| r.t < t - tol);
        self.records.get(i).filter(|r| (r.t - t).abs() <= tol)
    }
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// RK4 substeps per inter-pulse interval; a power of two, at least 4.
    pub steps_per_interval: usize,
    /// Intervals longer than `steps_per_interval * max_step` are subdivided by
    /// further powers of two.
    pub max_step: f64,
    pub quad: QuadratureSpec,
    pub coherence: CoherenceModel,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            steps_per_interval: 16,
            max_step: 0.05,
            quad: QuadratureSpec::default(),
            coherence: CoherenceModel::default(),
        }
    }
}

impl EvolveOptions {
    pub fn validate(&self) -> Result<()> {
        let n = self.steps_per_interval;
        if n < 4 || !n.is_power_of_two() {
            return Err(invalid(
                "steps_per_interval",
                format!("must be a power of two >= 4, got {n}"),
            ));
        }
        if !(self.max_step > 0.0) {
            return Err(invalid("max_step", format!("must be positive, got {}", self.max_step)));
        }
        self.quad.validate()
    }

    /// The same setup with every step halved.
    pub fn halved(&self) -> Self {
        Self {
            steps_per_interval: 2 * self.steps_per_interval,
            max_step: 0.5 * self.max_step,
            ..*self
        }
    }

    fn substeps(&self, len: f64) -> usize {
        let mut n = self.steps_per_interval;
        while len / n as f64 > self.max_step {
            n *= 2;
        }
        n
    }
}

/// `(|rho10|, arg rho10 - arg rho10_initial)` with the phase wrapped to `(-pi, pi]`.
pub fn observables(state: &QubitState, rho10_initial: Complex64) -> (f64, Option<f64>) {
    let abs = state.rho10.norm();
    if abs < PHASE_FLOOR || rho10_initial.norm() < PHASE_FLOOR {
        return (abs, None);
    }
    (abs, Some(wrap_phase(state.rho10.arg() - rho10_initial.arg())))
}

fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

struct PhaseTracker {
    initial: Complex64,
    last: Option<f64>,
}

impl PhaseTracker {
    fn next(&mut self, state: &QubitState) -> (f64, Option<f64>) {
        let (abs, raw) = observables(state, self.initial);
        let unwrapped = raw.map(|raw| match self.last {
            Some(prev) => prev + wrap_phase(raw - prev),
            None => raw,
        });
        if unwrapped.is_some() {
            self.last = unwrapped;
        }
        (abs, unwrapped)
    }
}

/// Integrates the equations of motion from `rho0` at `t = 0` to `t_max`.
pub fn evolve(
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    rho0: QubitState,
    t_max: f64,
    options: &EvolveOptions,
) -> Result<Trajectory> {
    let mut engine = RateEngine::new(*params, options.quad)?;
    evolve_with(&mut engine, schedule, rho0, t_max, options)
}

/// As [`evolve`], reusing the lag cache of `engine`.
pub fn evolve_with(
    engine: &mut RateEngine,
    schedule: &PulseSchedule,
    rho0: QubitState,
    t_max: f64,
    options: &EvolveOptions,
) -> Result<Trajectory> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", format!("must be positive, got {t_max}")));
    }
    options.validate()?;
    rho0.validate()?;
    let omega0 = engine.params().omega0;

    // Events within rounding distance of t_max do not open a new interval.
    let cutoff = t_max * (1.0 - 1e-12);
    let mut boundaries = vec![0.0];
    let mut interval_signs = vec![Signs::IDENTITY];
    let mut signs = Signs::IDENTITY;
    for event in schedule.events().iter().take_while(|e| e.time < cutoff) {
        signs = signs.after(event.axis);
        boundaries.push(event.time);
        interval_signs.push(signs);
    }
    boundaries.push(t_max);

    let mut phase = PhaseTracker {
        initial: rho0.rho10,
        last: None,
    };
    let mut trajectory = Trajectory::default();
    let (abs, delta_theta) = phase.next(&rho0);
    trajectory.records.push(Record {
        t: 0.0,
        state: rho0,
        abs_rho10: abs,
        delta_theta,
        rates: RateSet::ZERO,
    });

    let mut history: Vec<Segment> = Vec::with_capacity(boundaries.len());
    let mut state = rho0;
    for (k, &current) in interval_signs.iter().enumerate() {
        let (start, end) = (boundaries[k], boundaries[k + 1]);
        let n = options.substeps(end - start);
        let h = (end - start) / n as f64;
        if h * omega0 >= 0.5 {
            return Err(Error::StepTooCoarse {
                step: h,
                product: h * omega0,
            });
        }
        let mut rates_at = |t: f64| -> Result<RateSet> {
            history.push(Segment {
                start,
                end: t,
                signs: current,
            });
            let r = engine.rates(t, &history, current);
            history.pop();
            r
        };
        let mut r0 = rates_at(start)?;
        for i in 0..n {
            let t0 = start + i as f64 * h;
            let t1 = if i + 1 == n {
                end
            } else {
                start + (i + 1) as f64 * h
            };
            let r_mid = rates_at(start + (i as f64 + 0.5) * h)?;
            let r1 = rates_at(t1)?;
            let step = t1 - t0;
            let k1 = derivative(&state, &r0, options.coherence);
            let k2 = derivative(&state.axpy(0.5 * step, &k1), &r_mid, options.coherence);
            let k3 = derivative(&state.axpy(0.5 * step, &k2), &r_mid, options.coherence);
            let k4 = derivative(&state.axpy(step, &k3), &r1, options.coherence);
            state = QubitState {
                rho11: state.rho11 + step / 6.0 * (k1.rho11 + 2.0 * (k2.rho11 + k3.rho11) + k4.rho11),
                rho10: state.rho10
                    + step / 6.0 * (k1.rho10 + 2.0 * (k2.rho10 + k3.rho10) + k4.rho10),
            };
            if !(state.rho11.is_finite() && state.rho10.re.is_finite() && state.rho10.im.is_finite())
            {
                return Err(Error::Numerical(format!("state diverged at t = {t1}")));
            }
            check_positivity(&state, t1, &mut trajectory.warnings);
            let (abs, delta_theta) = phase.next(&state);
            trajectory.records.push(Record {
                t: t1,
                state,
                abs_rho10: abs,
                delta_theta,
                rates: r1,
            });
            r0 = r1;
        }
        history.push(Segment {
            start,
            end,
            signs: current,
        });
    }
    Ok(trajectory)
}

const MAX_WARNINGS: usize = 16;

fn check_positivity(state: &QubitState, t: f64, warnings: &mut Vec<String>) {
    if warnings.len() >= MAX_WARNINGS {
        return;
    }
    let excess = (-state.rho11)
        .max(state.rho11 - 1.0)
        .max(state.rho10.norm_sqr() - state.rho11 * state.rho00());
    if excess > POSITIVITY_SLACK {
        let msg = format!(
            "positivity violated by {excess:.3e} at t = {t} (rho11 = {}, |rho10| = {})",
            state.rho11,
            state.rho10.norm()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
}

/// Largest `|d rho11|` or `|d rho10|` over the sample times the two trajectories share.
pub fn convergence_check(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    let mut max_dev: f64 = 0.0;
    let mut shared = 0usize;
    let mut j = 0;
    for a in &coarse.records {
        let tol = 1e-9 * a.t.abs().max(1.0);
        while j < fine.records.len() && fine.records[j].t < a.t - tol {
            j += 1;
        }
        if let Some(b) = fine.records.get(j).filter(|b| (b.t - a.t).abs() <= tol) {
            shared += 1;
            max_dev = max_dev
                .max((a.state.rho11 - b.state.rho11).abs())
                .max((a.state.rho10 - b.state.rho10).norm());
        }
    }
    if shared == 0 {
        return Err(Error::Numerical(
            "trajectories share no sample times".to_string(),
        ));
    }
    Ok(max_dev)
}
