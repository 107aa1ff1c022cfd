//! Physical parameters, spectral densities and pulse schedules.
//!
//! Units are dimensionless throughout: the bath cutoff frequency, `hbar` and
//! `k_B` are all 1, so frequencies are in units of the cutoff and times in
//! units of its inverse.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Below this value of `beta * omega` the thermal factor uses its Taylor series.
pub const THERMAL_SERIES_THRESHOLD: f64 = 1e-4;

/// Model constants of the qubit and its boson environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Qubit level splitting.
    pub omega0: f64,
    /// Inverse temperature. `f64::INFINITY` selects the zero-temperature limit.
    pub beta: f64,
    /// Coupling constant of the pure-dephasing (sigma_z) interaction.
    pub g_theta: f64,
    /// Coupling constant of the decay (sigma_+/-) interaction.
    pub g_lambda: f64,
}

impl PhysicalParams {
    pub fn new(omega0: f64, beta: f64, g_theta: f64, g_lambda: f64) -> Result<Self> {
        let params = Self {
            omega0,
            beta,
            g_theta,
            g_lambda,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid("omega0", format!("must be positive, got {}", self.omega0)));
        }
        if !(self.beta > 0.0) {
            return Err(invalid("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.g_theta >= 0.0 && self.g_theta.is_finite()) {
            return Err(invalid("g_theta", format!("must be non-negative, got {}", self.g_theta)));
        }
        if !(self.g_lambda >= 0.0 && self.g_lambda.is_finite()) {
            return Err(invalid(
                "g_lambda",
                format!("must be non-negative, got {}", self.g_lambda),
            ));
        }
        Ok(())
    }

    pub fn dephasing_density(&self) -> SpectralDensity {
        SpectralDensity::new(self.g_theta)
    }

    pub fn decay_density(&self) -> SpectralDensity {
        SpectralDensity::new(self.g_lambda)
    }

    /// Correlation time of the dephasing coupling, `(1 / 2 G_theta)^(1/2)`.
    pub fn tau_theta(&self) -> Option<f64> {
        (self.g_theta > 0.0).then(|| (0.5 / self.g_theta).sqrt())
    }

    /// Correlation time of the decay coupling, `(2 / G_lambda)^(1/2)`.
    pub fn tau_lambda(&self) -> Option<f64> {
        (self.g_lambda > 0.0).then(|| (2.0 / self.g_lambda).sqrt())
    }

    /// Combined correlation time, `tau_c^-2 = tau_theta^-2 + tau_lambda^-2`.
    pub fn tau_c(&self) -> Option<f64> {
        let inv_sq = 2.0 * self.g_theta + 0.5 * self.g_lambda;
        (inv_sq > 0.0).then(|| inv_sq.recip().sqrt())
    }
}

/// Coupling constants derived from a target correlation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub g_theta: f64,
    pub g_lambda: f64,
    pub tau_theta: f64,
    /// Infinite when `ratio` is infinite (pure dephasing).
    pub tau_lambda: f64,
}

/// Coupling constants for a combined correlation time `tau_c` and the ratio
/// `tau_lambda / tau_theta`. An infinite ratio switches the decay channel off.
pub fn params_from_tau(tau_c: f64, ratio: f64) -> Result<Couplings> {
    if !(tau_c > 0.0 && tau_c.is_finite()) {
        return Err(invalid("tau_c", format!("must be positive, got {tau_c}")));
    }
    if !(ratio > 0.0) {
        return Err(invalid("ratio", format!("must be positive, got {ratio}")));
    }
    let tau_theta = tau_c * (1.0 + ratio.powi(-2)).sqrt();
    let tau_lambda = ratio * tau_theta;
    Ok(Couplings {
        g_theta: 0.5 / (tau_theta * tau_theta),
        g_lambda: 2.0 / (tau_lambda * tau_lambda),
        tau_theta,
        tau_lambda,
    })
}

/// Ohmic spectral density with exponential cutoff, `I(w) = g w exp(-w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub g: f64,
}

impl SpectralDensity {
    pub fn new(g: f64) -> Self {
        Self { g }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.g * omega * (-omega).exp()
    }

    /// `I(w) coth(beta w / 2)`, finite at `w = 0`.
    pub fn thermal(&self, beta: f64, omega: f64) -> f64 {
        self.g * (-omega).exp() * omega_coth(beta, omega)
    }

    /// `I(w) (coth(beta w / 2) - sign)` for `sign = +/-1`.
    ///
    /// The `sign = +1` branch is evaluated as `2 I(w) nbar(w)` so it does not
    /// cancel at low temperature.
    pub fn thermal_shifted(&self, beta: f64, omega: f64, sign: f64) -> f64 {
        if sign > 0.0 {
            self.g * (-omega).exp() * omega_two_nbar(beta, omega)
        } else {
            self.g * (-omega).exp() * (omega_coth(beta, omega) + omega)
        }
    }

    /// `integral_0^inf I(w) dw`.
    pub fn total_weight(&self) -> f64 {
        self.g
    }
}

/// `w coth(beta w / 2)` including its `w -> 0` limit `2 / beta`.
pub fn omega_coth(beta: f64, omega: f64) -> f64 {
    if beta.is_infinite() {
        return omega;
    }
    let x = beta * omega;
    if x < THERMAL_SERIES_THRESHOLD {
        2.0 / beta + x * omega / 6.0
    } else {
        omega / (0.5 * x).tanh()
    }
}

/// `2 w nbar(w) = w (coth(beta w / 2) - 1)` including its `w -> 0` limit.
pub fn omega_two_nbar(beta: f64, omega: f64) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let x = beta * omega;
    if x < THERMAL_SERIES_THRESHOLD {
        2.0 / beta - omega + x * omega / 6.0
    } else {
        2.0 * omega / x.exp_m1()
    }
}

/// Thermal spectral weight `I(w) coth(beta w / 2)`.
pub fn thermal_weight(density: &SpectralDensity, beta: f64, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(invalid("omega", format!("must be non-negative, got {omega}")));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    Ok(density.thermal(beta, omega))
}

/// Axis of an instantaneous pi pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Bit flip.
    X,
    /// Phase flip.
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => f.write_str("X"),
            Axis::Z => f.write_str("Z"),
        }
    }
}

/// Parity of a flip counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(count: usize) -> Self {
        if count % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `(-1)^N`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// `((-1)^Nx, (-1)^Nz)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signs {
    pub x: Parity,
    pub z: Parity,
}

impl Signs {
    pub const IDENTITY: Signs = Signs {
        x: Parity::Even,
        z: Parity::Even,
    };

    pub fn sx(self) -> f64 {
        self.x.sign()
    }

    pub fn sz(self) -> f64 {
        self.z.sign()
    }

    pub fn after(self, axis: Axis) -> Self {
        match axis {
            Axis::X => Signs {
                x: self.x.flipped(),
                ..self
            },
            Axis::Z => Signs {
                z: self.z.flipped(),
                ..self
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub axis: Axis,
}

/// Ordered list of instantaneous flips.
///
/// Counters are right-continuous: an event at time `t` is already counted by
/// `counters(t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSchedule {
    events: Vec<PulseEvent>,
    // x_counts[i] = number of X events among events[..=i]
    x_counts: Vec<usize>,
}

impl PulseSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(events: Vec<PulseEvent>) -> Result<Self> {
        let mut previous = 0.0;
        for event in &events {
            if !event.time.is_finite() || event.time <= 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "event time {} is not positive and finite",
                    event.time
                )));
            }
            if event.time <= previous {
                return Err(Error::InvalidSchedule(format!(
                    "event times must be strictly increasing ({} follows {})",
                    event.time, previous
                )));
            }
            previous = event.time;
        }
        let x_counts = events
            .iter()
            .scan(0usize, |n, e| {
                if e.axis == Axis::X {
                    *n += 1;
                }
                Some(*n)
            })
            .collect();
        Ok(Self { events, x_counts })
    }

    /// Periodic bit flips at `j * dt`, `j >= 1`, up to `t_max`.
    pub fn bb(dt: f64, t_max: f64) -> Result<Self> {
        check_periodic(dt, t_max)?;
        let events = (1..)
            .map(|j| j as f64 * dt)
            .take_while(|&t| t <= t_max)
            .map(|time| PulseEvent {
                time,
                axis: Axis::X,
            })
            .collect();
        Self::new(events)
    }

    /// Alternating flips: X at `(2j - 1) dt`, Z at `2j dt`, up to `t_max`.
    pub fn bp(dt: f64, t_max: f64) -> Result<Self> {
        check_periodic(dt, t_max)?;
        let events = (1..)
            .map(|j: u64| (j, j as f64 * dt))
            .take_while(|&(_, t)| t <= t_max)
            .map(|(j, time)| PulseEvent {
                time,
                axis: if j % 2 == 1 { Axis::X } else { Axis::Z },
            })
            .collect();
        Self::new(events)
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn has_axis(&self, axis: Axis) -> bool {
        self.events.iter().any(|e| e.axis == axis)
    }

    /// Number of events with time `<= t`.
    fn applied(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.time <= t)
    }

    /// `(Nx(t), Nz(t))`.
    pub fn counters(&self, t: f64) -> Result<(usize, usize)> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("must be non-negative, got {t}")));
        }
        let n = self.applied(t);
        let nx = if n == 0 { 0 } else { self.x_counts[n - 1] };
        Ok((nx, n - nx))
    }

    /// `((-1)^Nx(t), (-1)^Nz(t))`.
    pub fn signs(&self, t: f64) -> Result<Signs> {
        let (nx, nz) = self.counters(t)?;
        Ok(Signs {
            x: Parity::of(nx),
            z: Parity::of(nz),
        })
    }

    /// Splits `[0, t]` at every event strictly before `t`.
    pub fn decompose(&self, t: f64) -> Result<SegmentDecomposition> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        let inside = self.events.partition_point(|e| e.time < t);
        let mut boundaries = Vec::with_capacity(inside + 2);
        let mut parities = Vec::with_capacity(inside + 1);
        let mut signs = Signs::IDENTITY;
        boundaries.push(0.0);
        parities.push(signs);
        for event in &self.events[..inside] {
            signs = signs.after(event.axis);
            boundaries.push(event.time);
            parities.push(signs);
        }
        boundaries.push(t);
        Ok(SegmentDecomposition {
            boundaries,
            parities,
        })
    }
}

fn check_periodic(dt: f64, t_max: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", format!("must be positive, got {t_max}")));
    }
    Ok(())
}

/// Partition of `[0, t]` into intervals of constant flip parity.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDecomposition {
    /// `0 = s_0 < s_1 < ... < s_m = t`.
    pub boundaries: Vec<f64>,
    /// Parity on the open interval `(s_i, s_{i+1})`.
    pub parities: Vec<Signs>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub signs: Signs,
}

impl SegmentDecomposition {
    pub fn end(&self) -> f64 {
        *self.boundaries.last().expect("decomposition is never empty")
    }

    /// Parity of the last segment, i.e. the left limit at `end()`.
    pub fn final_signs(&self) -> Signs {
        *self.parities.last().expect("decomposition is never empty")
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.boundaries
            .windows(2)
            .zip(&self.parities)
            .map(|(w, &signs)| Segment {
                start: w[0],
                end: w[1],
                signs,
            })
    }

    pub fn len(&self) -> usize {
        self.parities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parities.is_empty()
    }
}
