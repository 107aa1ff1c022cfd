//! Reference computations that share no code path with the rate engine.
//!
//! * [`exact_dephasing_gamma`]: the independent-boson decay exponent for a
//!   sign-switched `sigma_z` coupling, via the filter function.
//! * [`golden_rule_rate`]: long-time limit of the population decay rate.
//! * [`few_mode_evolve`]: brute-force evolution of the qubit coupled to a
//!   handful of discrete bosonic modes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::evolve::{observables, QubitState, Record, Trajectory};
use crate::model::{Axis, PhysicalParams, PulseSchedule, SpectralDensity};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::rates::RateSet;

/// Largest Hilbert-space dimension accepted by [`few_mode_evolve`].
pub const MAX_DIMENSION: usize = 1 << 14;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `F(w, t) = sum over segments of sx * integral_seg exp(i w t') dt'`.
///
/// Only bit flips change the sign of the `sigma_z` coupling, so phase flips are skipped.
pub fn filter_function(omega: f64, t: f64, schedule: &PulseSchedule) -> Complex64 {
    let mut f = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    let mut start = 0.0;
    for event in schedule.events().iter().take_while(|e| e.time < t) {
        if event.axis == Axis::X {
            f += sign * segment_phase(omega, start, event.time);
            sign = -sign;
            start = event.time;
        }
    }
    f + sign * segment_phase(omega, start, t)
}

fn segment_phase(omega: f64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    let mid = 0.5 * (a + b);
    Complex64::from_polar(len * sinc(0.5 * omega * len), omega * mid)
}

/// `Gamma(t) = 2 integral I_theta(w) coth(beta w / 2) |F(w, t)|^2 dw`, so that
/// `|rho10(t)| = |rho10(0)| exp(-Gamma(t))` when only the `sigma_z` coupling is present.
pub fn exact_dephasing_gamma(
    t: f64,
    schedule: &PulseSchedule,
    g_theta: f64,
    beta: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be non-negative, got {t}")));
    }
    if !(g_theta >= 0.0) {
        return Err(invalid("g_theta", format!("must be non-negative, got {g_theta}")));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    quad.validate()?;
    if t == 0.0 || g_theta == 0.0 {
        return Ok(0.0);
    }
    let density = SpectralDensity { g: g_theta };
    let est = integrate(
        |w| 2.0 * density.thermal(beta, w) * filter_function(w, t, schedule).norm_sqr(),
        0.0,
        quad.omega_max,
        QuadratureSpec::panel_width(t),
        quad,
    )?;
    Ok(est.value)
}

/// `2 pi I_lambda(w0) coth(beta w0 / 2)`.
pub fn golden_rule_rate(params: &PhysicalParams) -> f64 {
    let w0 = params.omega0;
    let coth = if params.beta.is_infinite() {
        1.0
    } else {
        1.0 / (0.5 * params.beta * w0).tanh()
    };
    2.0 * PI * params.g_lambda * w0 * (-w0).exp() * coth
}

/// A discrete bath standing in for the continuum `G w exp(-w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FewModeBath {
    pub frequencies: Vec<f64>,
    pub g_theta: Vec<f64>,
    pub g_lambda: Vec<f64>,
    /// Fock-space cutoff per mode.
    pub n_max: usize,
    /// Spectral weight `integral w exp(-w) dw` that the modes do not represent,
    /// per unit coupling constant.
    pub missing_weight: f64,
}

// integral_0^x w exp(-w) dw
fn weight_below(x: f64) -> f64 {
    1.0 - (1.0 + x) * (-x).exp()
}

// integral_0^x w^2 exp(-w) dw
fn first_moment_below(x: f64) -> f64 {
    2.0 - (x * x + 2.0 * x + 2.0) * (-x).exp()
}

impl FewModeBath {
    /// Splits `[lower, upper]` into `modes` bins of equal spectral weight; each
    /// mode sits at its bin's weighted mean frequency and carries the bin weight
    /// as `|g_k|^2`. With `normalize` the weights are rescaled so their total
    /// equals the full continuum weight.
    pub fn discretize(
        params: &PhysicalParams,
        modes: usize,
        n_max: usize,
        band: (f64, f64),
        normalize: bool,
    ) -> Result<Self> {
        let (lower, upper) = band;
        if modes == 0 {
            return Err(invalid("modes", "need at least one mode"));
        }
        if n_max == 0 {
            return Err(invalid("n_max", "Fock cutoff must be at least 1"));
        }
        if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
            return Err(invalid("band", format!("need 0 <= lower < upper, got [{lower}, {upper}]")));
        }
        let w_lo = weight_below(lower);
        let w_hi = weight_below(upper);
        let per_bin = (w_hi - w_lo) / modes as f64;
        let mut edges = vec![lower];
        for k in 1..modes {
            let target = w_lo + k as f64 * per_bin;
            let (mut a, mut b) = (lower, upper);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if weight_below(m) < target {
                    a = m;
                } else {
                    b = m;
                }
            }
            edges.push(0.5 * (a + b));
        }
        edges.push(upper);
        let scale = if normalize { 1.0 / (w_hi - w_lo) } else { 1.0 };
        let mut frequencies = Vec::with_capacity(modes);
        let mut weights = Vec::with_capacity(modes);
        for pair in edges.windows(2) {
            let w = weight_below(pair[1]) - weight_below(pair[0]);
            let m = first_moment_below(pair[1]) - first_moment_below(pair[0]);
            frequencies.push(m / w);
            weights.push(w * scale);
        }
        let coupling = |g: f64| weights.iter().map(|w| (g * w).sqrt()).collect::<Vec<_>>();
        Ok(Self {
            g_theta: coupling(params.g_theta),
            g_lambda: coupling(params.g_lambda),
            frequencies,
            n_max,
            missing_weight: if normalize { 0.0 } else { 1.0 - (w_hi - w_lo) },
        })
    }

    pub fn modes(&self) -> usize {
        self.frequencies.len()
    }

    /// `2 (n_max + 1)^modes`, or `None` on overflow.
    pub fn dimension(&self) -> Option<usize> {
        let per_mode = self.n_max + 1;
        (0..self.modes()).try_fold(2usize, |d, _| d.checked_mul(per_mode))
    }

    /// `2 pi / (largest gap between adjacent mode frequencies, or below the lowest)`; beyond this the
    /// discrete bath returns energy to the qubit.
    pub fn recurrence_time(&self) -> f64 {
        let mut sorted = self.frequencies.clone();
        sorted.sort_by(f64::total_cmp);
        let gap = sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(sorted.first().copied().unwrap_or(0.0), f64::max);
        if gap > 0.0 {
            2.0 * PI / gap
        } else {
            f64::INFINITY
        }
    }

    fn validate(&self) -> Result<()> {
        let m = self.modes();
        if self.g_theta.len() != m || self.g_lambda.len() != m {
            return Err(invalid("bath", "coupling lists must match the mode count"));
        }
        if self.frequencies.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("bath", "mode frequencies must be positive"));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max", "Fock cutoff must be at least 1"));
        }
        Ok(())
    }
}

/// Basis index: `q * (n_max + 1)^modes + sum_k n_k (n_max + 1)^k`, with `q = 1` the upper level.
fn hamiltonian(bath: &FewModeBath, omega0: f64, dim: usize) -> DMatrix<f64> {
    let base = bath.n_max + 1;
    let half = dim / 2;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut stride = vec![1usize; bath.modes()];
    for k in 1..bath.modes() {
        stride[k] = stride[k - 1] * base;
    }
    for idx in 0..dim {
        let q = idx / half;
        let sz = if q == 1 { 1.0 } else { -1.0 };
        let mut rest = idx % half;
        let mut diag = 0.5 * omega0 * sz;
        for k in 0..bath.modes() {
            let n = rest % base;
            rest /= base;
            diag += bath.frequencies[k] * n as f64;
            if n < bath.n_max {
                let amp = ((n + 1) as f64).sqrt();
                let up = idx + stride[k];
                // sigma_z (b + b^dagger)
                let v = bath.g_theta[k] * sz * amp;
                h[(up, idx)] += v;
                h[(idx, up)] += v;
                // sigma_- b^dagger + sigma_+ b: |1, n> <-> |0, n + 1>
                if q == 1 {
                    let lowered = up - half;
                    let v = bath.g_lambda[k] * amp;
                    h[(lowered, idx)] += v;
                    h[(idx, lowered)] += v;
                }
            }
        }
        h[(idx, idx)] = diag;
    }
    h
}

struct Propagator {
    vectors: DMatrix<f64>,
    energies: DVector<f64>,
}

impl Propagator {
    fn new(h: DMatrix<f64>) -> Result<Self> {
        let dim = h.nrows();
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100 * dim.max(100)).ok_or_else(|| {
            Error::Numerical("eigendecomposition of the few-mode Hamiltonian did not converge".into())
        })?;
        Ok(Self {
            vectors: eig.eigenvectors,
            energies: eig.eigenvalues,
        })
    }

    /// Coefficients of `psi` in the eigenbasis.
    fn project(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let re = self.vectors.tr_mul(&psi.map(|z| z.re));
        let im = self.vectors.tr_mul(&psi.map(|z| z.im));
        re.zip_map(&im, Complex64::new)
    }

    /// `exp(-i H tau) psi` given the eigenbasis coefficients of `psi`.
    fn advance(&self, coeffs: &DVector<Complex64>, tau: f64) -> DVector<Complex64> {
        let rotated = coeffs.zip_map(&self.energies, |c, e| c * Complex64::from_polar(1.0, -e * tau));
        let re = &self.vectors * rotated.map(|z| z.re);
        let im = &self.vectors * rotated.map(|z| z.im);
        re.zip_map(&im, Complex64::new)
    }
}

/// Lab-frame pulse at time `t`: `-i (sigma_x cos w0 t + sigma_y sin w0 t)` or `-i sigma_z`.
fn apply_pulse(psi: &mut DVector<Complex64>, axis: Axis, omega0: f64, t: f64) {
    let half = psi.len() / 2;
    let minus_i = Complex64::new(0.0, -1.0);
    match axis {
        Axis::X => {
            let raise = minus_i * Complex64::from_polar(1.0, -omega0 * t);
            let lower = minus_i * Complex64::from_polar(1.0, omega0 * t);
            for j in 0..half {
                let (g, e) = (psi[j], psi[j + half]);
                psi[j + half] = raise * g;
                psi[j] = lower * e;
            }
        }
        Axis::Z => {
            for j in 0..half {
                psi[j] *= Complex64::i();
                psi[j + half] *= minus_i;
            }
        }
    }
}

// Interaction-picture pulse operator on the qubit, basis (|1>, |0>).
fn frame_pulse(axis: Axis) -> Matrix2<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mi = Complex64::new(0.0, -1.0);
    match axis {
        Axis::X => Matrix2::new(zero, mi, mi, zero),
        Axis::Z => Matrix2::new(mi, zero, zero, -mi),
    }
}

// Reduced qubit matrix in the basis (|1>, |0>) for a set of weighted pure states.
fn reduced(states: &[(f64, DVector<Complex64>)]) -> Matrix2<Complex64> {
    let mut rho = Matrix2::<Complex64>::zeros();
    for (w, psi) in states {
        let half = psi.len() / 2;
        let (e, g) = (psi.rows(half, half), psi.rows(0, half));
        rho[(0, 0)] += *w * e.dotc(&e);
        rho[(1, 1)] += *w * g.dotc(&g);
        rho[(0, 1)] += *w * g.dotc(&e);
    }
    rho[(1, 0)] = rho[(0, 1)].conj();
    rho
}

// Eigen-decomposition of the initial qubit density matrix into weighted pure states,
// amplitudes ordered (|1>, |0>).
fn purify(rho0: &QubitState) -> Vec<(f64, [Complex64; 2])> {
    let a = rho0.rho11;
    let d = rho0.rho00();
    let c = rho0.rho10;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if c.norm() < 1e-15 {
        return [(a, [one, zero]), (d, [zero, one])]
            .into_iter()
            .filter(|(w, _)| *w > 1e-15)
            .collect();
    }
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + c.norm_sqr()).sqrt();
    [mean + radius, mean - radius]
        .into_iter()
        .filter(|lambda| *lambda > 1e-15)
        .map(|lambda| {
            // Null vectors of the two rows of rho - lambda; keep the longer one.
            let u = [c, Complex64::new(lambda - a, 0.0)];
            let v = [Complex64::new(lambda - d, 0.0), c.conj()];
            let norm = |x: &[Complex64; 2]| (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
            let (w, n) = if norm(&u) >= norm(&v) { (u, norm(&u)) } else { (v, norm(&v)) };
            (lambda, [w[0] / n, w[1] / n])
        })
        .collect()
}

/// Evolves qubit plus discrete bath under the full static Hamiltonian with
/// instantaneous pulses, sampling every `dt_exact`, at every pulse and at
/// `t_max`. Outputs are toggling-frame quantities comparable with
/// [`crate::evolve::evolve`]; the bath starts in its vacuum.
pub fn few_mode_evolve(
    bath: &FewModeBath,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    rho0: QubitState,
    t_max: f64,
    dt_exact: f64,
) -> Result<Trajectory> {
    bath.validate()?;
    rho0.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", format!("must be positive, got {t_max}")));
    }
    if !(dt_exact > 0.0) {
        return Err(invalid("dt_exact", format!("must be positive, got {dt_exact}")));
    }
    let dim = match bath.dimension() {
        Some(d) if d <= MAX_DIMENSION => d,
        d => {
            return Err(Error::DimensionOverflow {
                dimension: d.unwrap_or(usize::MAX),
                limit: MAX_DIMENSION,
            })
        }
    };
    let omega0 = params.omega0;
    let prop = Propagator::new(hamiltonian(bath, omega0, dim))?;
    let half = dim / 2;

    // Vacuum bath: the qubit amplitude sits on the zero-occupation index.
    let mut states: Vec<(f64, DVector<Complex64>)> = purify(&rho0)
        .into_iter()
        .map(|(w, v)| {
            let mut psi = DVector::<Complex64>::zeros(dim);
            psi[half] = v[0];
            psi[0] = v[1];
            (w, psi)
        })
        .collect();

    let mut frame = Matrix2::<Complex64>::identity();
    let mut trajectory = Trajectory::default();
    let sample = |t: f64, states: &[(f64, DVector<Complex64>)], frame: &Matrix2<Complex64>| {
        let lab = reduced(states);
        let mut interaction = lab;
        let rot = Complex64::from_polar(1.0, omega0 * t);
        interaction[(0, 1)] *= rot;
        interaction[(1, 0)] *= rot.conj();
        let toggled = frame.adjoint() * interaction * frame;
        QubitState {
            rho11: toggled[(0, 0)].re,
            rho10: toggled[(0, 1)],
        }
    };

    let mut last_phase: Option<f64> = None;
    let mut push = |trajectory: &mut Trajectory, t: f64, state: QubitState| -> Result<()> {
        let purity = state.rho11 * state.rho11
            + state.rho00() * state.rho00()
            + 2.0 * state.rho10.norm_sqr();
        if purity > 1.0 + 1e-10 {
            return Err(Error::Numerical(format!("purity {purity} exceeds 1 at t = {t}")));
        }
        let (abs, raw) = observables(&state, rho0.rho10);
        let delta_theta = raw.map(|raw| match last_phase {
            Some(prev) => prev + (raw - prev + PI).rem_euclid(2.0 * PI) - PI,
            None => raw,
        });
        if delta_theta.is_some() {
            last_phase = delta_theta;
        }
        trajectory.records.push(Record {
            t,
            state,
            abs_rho10: abs,
            delta_theta,
            rates: RateSet::ZERO,
        });
        Ok(())
    };
    push(&mut trajectory, 0.0, sample(0.0, &states, &frame))?;

    let cutoff = t_max * (1.0 - 1e-12);
    let mut boundaries: Vec<(f64, Option<Axis>)> = schedule
        .events()
        .iter()
        .take_while(|e| e.time < cutoff)
        .map(|e| (e.time, Some(e.axis)))
        .collect();
    boundaries.push((t_max, None));

    let mut start = 0.0;
    for (end, axis) in boundaries {
        let coeffs: Vec<DVector<Complex64>> = states.iter().map(|(_, psi)| prop.project(psi)).collect();
        let n = ((end - start) / dt_exact).ceil().max(1.0) as usize;
        for i in 1..=n {
            let t = if i == n {
                end
            } else {
                start + i as f64 * (end - start) / n as f64
            };
            for ((_, psi), c) in states.iter_mut().zip(&coeffs) {
                *psi = prop.advance(c, t - start);
            }
            for (w, psi) in &states {
                let norm = psi.norm_squared();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "norm drifted to {norm} at t = {t} (weight {w})"
                    )));
                }
            }
            if axis.is_some() && i == n {
                break;
            }
            push(&mut trajectory, t, sample(t, &states, &frame))?;
        }
        if let Some(axis) = axis {
            // Right-continuous convention: the record at a pulse time is taken after the pulse.
            for (_, psi) in states.iter_mut() {
                apply_pulse(psi, axis, omega0, end);
            }
            frame = frame_pulse(axis) * frame;
            push(&mut trajectory, end, sample(end, &states, &frame))?;
        }
        start = end;
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params_from_tau;

    #[test]
    fn golden_rule_examples() {
        let p = PhysicalParams::new(0.1, 1000.0, 0.0, 0.0633).unwrap();
        let r = golden_rule_rate(&p);
        assert!((r - 2.0 * PI * 0.0633 * 0.1 * (-0.1f64).exp()).abs() < 1e-15);
        assert!((r - 0.03598).abs() < 5e-5);
        let zero = PhysicalParams::new(0.1, 1000.0, 0.0, 0.0).unwrap();
        assert_eq!(golden_rule_rate(&zero), 0.0);
        let hot = PhysicalParams::new(0.1, 1.0, 0.0, 0.0633).unwrap();
        let ratio = golden_rule_rate(&hot) / r;
        assert!((ratio - 1.0 / 0.05f64.tanh()).abs() < 1e-12);
        assert!((ratio - 20.0).abs() < 0.02);
    }

    #[test]
    fn filter_function_without_pulses() {
        let s = PulseSchedule::empty();
        for (w, t) in [(0.0, 3.0), (1e-7, 2.0), (0.7, 5.0), (3.0, 0.4)] {
            let f = filter_function(w, t, &s);
            let expect = if w == 0.0 {
                t * t
            } else {
                (2.0 * (0.5 * w * t).sin() / w).powi(2)
            };
            assert!((f.norm_sqr() - expect).abs() < 1e-12 * expect.max(1.0), "{w} {t}");
        }
    }

    #[test]
    fn filter_function_ignores_phase_flips() {
        let bp = PulseSchedule::bp(0.5, 4.0).unwrap();
        let x_only = PulseSchedule::new(
            bp.events()
                .iter()
                .filter(|e| e.axis == Axis::X)
                .copied()
                .collect(),
        )
        .unwrap();
        for w in [0.0, 0.3, 2.0] {
            let a = filter_function(w, 3.7, &bp);
            let b = filter_function(w, 3.7, &x_only);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dephasing_closed_form_at_zero_temperature() {
        let quad = QuadratureSpec::default();
        let g = 0.05;
        for t in [0.1, 1.0, 4.0, 25.0] {
            let gamma = exact_dephasing_gamma(t, &PulseSchedule::empty(), g, f64::INFINITY, &quad).unwrap();
            let exact = 2.0 * g * (1.0 + t * t).ln();
            assert!((gamma - exact).abs() < 1e-8 * exact, "t = {t}: {gamma} vs {exact}");
        }
    }

    #[test]
    fn dephasing_short_time_gaussian() {
        let quad = QuadratureSpec::default();
        let t = 1e-3;
        let g = 0.08;
        let gamma = exact_dephasing_gamma(t, &PulseSchedule::empty(), g, f64::INFINITY, &quad).unwrap();
        assert!((gamma / (2.0 * g * t * t) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn hahn_echo_suppresses_dephasing() {
        let quad = QuadratureSpec::default();
        for t in [0.5, 1.0, 2.0] {
            let echo = PulseSchedule::new(vec![crate::model::PulseEvent {
                time: 0.5 * t,
                axis: Axis::X,
            }])
            .unwrap();
            let free = exact_dephasing_gamma(t, &PulseSchedule::empty(), 0.05, f64::INFINITY, &quad).unwrap();
            let echoed = exact_dephasing_gamma(t, &echo, 0.05, f64::INFINITY, &quad).unwrap();
            assert!(echoed < free, "t = {t}: {echoed} vs {free}");
        }
    }

    #[test]
    fn dephasing_rate_matches_engine() {
        let c = params_from_tau(0.8 * PI, f64::INFINITY).unwrap();
        let p = PhysicalParams::new(0.1, 1000.0, c.g_theta, 0.0).unwrap();
        let quad = QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            ..QuadratureSpec::default()
        };
        let s = PulseSchedule::empty();
        let h = 1e-2;
        for t in [0.5, 2.0, 7.0] {
            let g = |x: f64| exact_dephasing_gamma(x, &s, p.g_theta, p.beta, &quad).unwrap();
            let slope = (-g(t + 2.0 * h) + 8.0 * g(t + h) - 8.0 * g(t - h) + g(t - 2.0 * h)) / (12.0 * h);
            let rate = crate::rates::gamma10_re(t, &p, &s, &quad).unwrap();
            assert!((slope / rate - 1.0).abs() < 1e-6, "t = {t}: {slope} vs {rate}");
        }
    }

    #[test]
    fn binning_has_equal_weights() {
        let p = PhysicalParams::new(0.1, 1000.0, 0.02, 0.01).unwrap();
        let bath = FewModeBath::discretize(&p, 5, 2, (0.0, 0.5), false).unwrap();
        let w0 = bath.g_theta[0].powi(2);
        for (k, g) in bath.g_theta.iter().enumerate() {
            assert!((g * g - w0).abs() < 1e-14, "mode {k}");
        }
        let total: f64 = bath.g_theta.iter().map(|g| g * g).sum();
        assert!((total - 0.02 * weight_below(0.5)).abs() < 1e-14);
        assert!((bath.missing_weight - (1.0 - weight_below(0.5))).abs() < 1e-15);
        assert!(bath.frequencies.windows(2).all(|w| w[1] > w[0]));
        assert!(bath.frequencies[0] > 0.0 && bath.frequencies[4] < 0.5);
        assert_eq!(bath.dimension(), Some(2 * 243));
        let normalized = FewModeBath::discretize(&p, 5, 2, (0.0, 0.5), true).unwrap();
        let total: f64 = normalized.g_lambda.iter().map(|g| g * g).sum();
        assert!((total - 0.01).abs() < 1e-14);
    }

    #[test]
    fn dimension_limit_is_enforced() {
        let p = PhysicalParams::new(0.1, 1000.0, 0.01, 0.01).unwrap();
        let bath = FewModeBath::discretize(&p, 8, 3, (0.0, 0.5), false).unwrap();
        let err = few_mode_evolve(&bath, &p, &PulseSchedule::empty(), QubitState::plus(), 1.0, 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::DimensionOverflow { .. }));
    }

    #[test]
    fn zero_coupling_is_constant_in_toggling_frame() {
        let p = PhysicalParams::new(0.1, 1000.0, 0.0, 0.0).unwrap();
        let bath = FewModeBath::discretize(&p, 2, 1, (0.0, 0.5), false).unwrap();
        let rho0 = QubitState::new(0.3, Complex64::new(0.2, -0.3)).unwrap();
        let s = PulseSchedule::bp(0.7, 6.0).unwrap();
        let traj = few_mode_evolve(&bath, &p, &s, rho0, 6.0, 0.25).unwrap();
        for r in &traj.records {
            assert!((r.state.rho11 - 0.3).abs() < 1e-12, "t = {}", r.t);
            assert!((r.state.rho10 - rho0.rho10).norm() < 1e-12, "t = {}", r.t);
        }
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        let g = 0.03;
        let p = PhysicalParams::new(0.1, 1000.0, 0.0, 0.0).unwrap();
        let bath = FewModeBath {
            frequencies: vec![0.1],
            g_theta: vec![0.0],
            g_lambda: vec![g],
            n_max: 2,
            missing_weight: 0.0,
        };
        let traj = few_mode_evolve(&bath, &p, &PulseSchedule::empty(), QubitState::plus(), 80.0, 0.5).unwrap();
        for r in &traj.records {
            let expect = 0.5 * (g * r.t).cos().powi(2);
            assert!((r.state.rho11 - expect).abs() < 1e-10, "t = {}", r.t);
        }
    }

    #[test]
    fn few_mode_pure_dephasing_matches_mode_sum() {
        // A single sigma_z-coupled mode from vacuum: |rho10| = 1/2 exp(-4 g^2 (1 - cos w t) / w^2).
        let (g, w) = (0.05, 0.7);
        let p = PhysicalParams::new(0.1, 1000.0, 0.0, 0.0).unwrap();
        let bath = FewModeBath {
            frequencies: vec![w],
            g_theta: vec![g],
            g_lambda: vec![0.0],
            n_max: 6,
            missing_weight: 0.0,
        };
        let traj =
            few_mode_evolve(&bath, &p, &PulseSchedule::empty(), QubitState::plus_i(), 20.0, 0.5).unwrap();
        for r in &traj.records {
            let expect = 0.5 * (-4.0 * g * g * (1.0 - (w * r.t).cos()) / (w * w)).exp();
            assert!((r.abs_rho10 - expect).abs() < 1e-8, "t = {}: {} vs {expect}", r.t, r.abs_rho10);
        }
    }

    #[test]
    fn few_mode_records_follow_pulses() {
        let p = PhysicalParams::new(0.1, 1000.0, 0.01, 0.01).unwrap();
        let bath = FewModeBath::discretize(&p, 3, 1, (0.0, 0.5), false).unwrap();
        let s = PulseSchedule::bb(0.4, 2.0).unwrap();
        let traj = few_mode_evolve(&bath, &p, &s, QubitState::plus_i(), 2.0, 0.1).unwrap();
        assert!(traj.records.windows(2).all(|w| w[1].t > w[0].t));
        for e in s.events() {
            assert!(traj.records.iter().any(|r| r.t == e.time));
        }
        assert_eq!(traj.last().t, 2.0);
    }

    #[test]
    fn mixed_initial_state_is_purified() {
        for rho0 in [
            QubitState::new(0.3, Complex64::new(0.1, -0.2)).unwrap(),
            QubitState::new(0.5, Complex64::new(0.0, 0.0)).unwrap(),
            QubitState::new(1.0, Complex64::new(0.0, 0.0)).unwrap(),
            QubitState::plus_i(),
        ] {
            let parts = purify(&rho0);
            let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
            for (w, v) in &parts {
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += *w * v[i] * v[j].conj();
                    }
                }
            }
            assert!((m[0][0].re - rho0.rho11).abs() < 1e-14);
            assert!((m[0][1] - rho0.rho10).norm() < 1e-14, "{rho0:?}");
        }
    }

    #[test]
    fn recurrence_window() {
        let bath = FewModeBath {
            frequencies: vec![0.1, 0.2, 0.4],
            g_theta: vec![0.0; 3],
            g_lambda: vec![0.0; 3],
            n_max: 1,
            missing_weight: 0.0,
        };
        assert!((bath.recurrence_time() - 2.0 * PI / 0.2).abs() < 1e-12);
    }
}
