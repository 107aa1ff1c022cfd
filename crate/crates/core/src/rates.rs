//! Second-order time-convolutionless rate coefficients.
//!
//! Every rate is a frequency integral of a spectral weight times a kernel
//! built from the flip signs. On each interval of constant sign the time
//! integral has a closed form, so only the frequency integral is numeric.
//!
//! Two evaluation routes are provided. The free functions ([`gamma11`],
//! [`rate_set`], ...) integrate the full kernel over frequency at a single
//! time. [`RateEngine`] exchanges the order of summation: each segment
//! contributes `L(t - a) - L(t - b)` where
//! `L(s) = integral W(w) sin(Omega s) / Omega dw` depends only on the lag `s`,
//! and lag integrals are memoised. Both routes agree to quadrature tolerance.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{PhysicalParams, PulseSchedule, Segment, Signs, SpectralDensity};
use crate::quadrature::{integrate, Estimate, QuadratureSpec};

/// The four rate coefficients at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateSet {
    pub gamma11: f64,
    pub eta11: f64,
    pub gamma10_re: f64,
    pub gamma10_im: f64,
    /// Imaginary part of the decay-channel integral in `gamma10_re`.
    pub gamma10_re_shift: f64,
    /// Imaginary part of the decay-channel integral in `gamma10_im`.
    pub gamma10_im_shift: f64,
}

impl RateSet {
    pub const ZERO: RateSet = RateSet {
        gamma11: 0.0,
        eta11: 0.0,
        gamma10_re: 0.0,
        gamma10_im: 0.0,
        gamma10_re_shift: 0.0,
        gamma10_im_shift: 0.0,
    };

    pub fn is_finite(&self) -> bool {
        self.gamma11.is_finite()
            && self.eta11.is_finite()
            && self.gamma10_re.is_finite()
            && self.gamma10_im.is_finite()
            && self.gamma10_re_shift.is_finite()
            && self.gamma10_im_shift.is_finite()
    }
}

/// `sin(x) / x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `integral_a^b cos(Omega (t1 - t)) dt1`.
///
/// Evaluated as `(b - a) cos(Omega c) sinc(Omega (b - a) / 2)` with `c` the
/// segment midpoint relative to `t`, which has no cancellation at small `Omega`.
pub fn segment_cos(omega: f64, a: f64, b: f64, t: f64) -> f64 {
    let len = b - a;
    let c = 0.5 * (a + b) - t;
    len * (omega * c).cos() * sinc(0.5 * omega * len)
}

/// `integral_a^b exp(i Omega (t1 - t)) dt1`.
pub fn segment_exp(omega: f64, a: f64, b: f64, t: f64) -> Complex64 {
    let len = b - a;
    let c = 0.5 * (a + b) - t;
    let amp = len * sinc(0.5 * omega * len);
    let (s, co) = (omega * c).sin_cos();
    Complex64::new(amp * co, amp * s)
}

/// Sign structure of `[0, t]` as seen from the endpoint.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub t: f64,
    pub segments: Vec<Segment>,
    /// `((-1)^Nx(t), (-1)^Nz(t))`.
    pub end: Signs,
}

impl KernelContext {
    /// Right-continuous context: an event exactly at `t` is already applied to the endpoint signs.
    pub fn new(schedule: &PulseSchedule, t: f64) -> Result<Self> {
        let end = schedule.signs(t)?;
        let segments = if t > 0.0 {
            schedule.decompose(t)?.segments().collect()
        } else {
            Vec::new()
        };
        Ok(Self { t, segments, end })
    }

    /// Population kernel: segments whose x-parity differs from the endpoint drop out.
    pub fn population(&self, omega: f64) -> f64 {
        let (sx, sz) = (self.end.sx(), self.end.sz());
        self.segments
            .iter()
            .filter(|seg| seg.signs.sx() == sx)
            .map(|seg| sz * seg.signs.sz() * segment_cos(omega, seg.start, seg.end, self.t))
            .sum()
    }

    pub fn dephasing(&self, omega: f64) -> f64 {
        let sx = self.end.sx();
        self.segments
            .iter()
            .map(|seg| sx * seg.signs.sx() * segment_cos(omega, seg.start, seg.end, self.t))
            .sum()
    }

    pub fn decay(&self, omega: f64, include_x_parity: bool) -> Complex64 {
        let (sx, sz) = (self.end.sx(), self.end.sz());
        self.segments
            .iter()
            .map(|seg| {
                let mut w = sz * seg.signs.sz();
                if include_x_parity {
                    w *= sx * seg.signs.sx();
                }
                w * segment_exp(sx * omega, seg.start, seg.end, self.t)
            })
            .sum()
    }
}

/// `integral_0^t (-1)^{Nz(t)+Nz(t1)} [1 + (-1)^{Nx(t)+Nx(t1)}]/2 cos(Omega (t1 - t)) dt1`.
pub fn kernel_population(t: f64, omega: f64, schedule: &PulseSchedule) -> Result<f64> {
    Ok(KernelContext::new(schedule, t)?.population(omega))
}

/// `integral_0^t (-1)^{Nx(t)+Nx(t1)} cos(omega (t1 - t)) dt1`.
pub fn kernel_dephasing(t: f64, omega: f64, schedule: &PulseSchedule) -> Result<f64> {
    Ok(KernelContext::new(schedule, t)?.dephasing(omega))
}

/// `integral_0^t (-1)^{Nz(t)+Nz(t1)} [(-1)^{Nx(t)+Nx(t1)}] exp(i (-1)^{Nx(t)} Omega (t1 - t)) dt1`,
/// with the bracketed factor present only when `include_x_parity` is set.
pub fn kernel_decay(
    t: f64,
    omega: f64,
    schedule: &PulseSchedule,
    include_x_parity: bool,
) -> Result<Complex64> {
    Ok(KernelContext::new(schedule, t)?.decay(omega, include_x_parity))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(crate::error::invalid(
            "t",
            format!("must be non-negative, got {t}"),
        ));
    }
    Ok(())
}

fn omega_integral<F: Fn(f64) -> f64>(
    rate: &'static str,
    t: f64,
    quad: &QuadratureSpec,
    f: F,
) -> Result<Estimate> {
    integrate(f, 0.0, quad.omega_max, QuadratureSpec::panel_width(t), quad).map_err(|e| {
        Error::RateEvaluation {
            rate,
            time: t,
            source: Box::new(e),
        }
    })
}

fn gamma11_in(ctx: &KernelContext, params: &PhysicalParams, quad: &QuadratureSpec) -> Result<f64> {
    if ctx.segments.is_empty() || params.g_lambda == 0.0 {
        return Ok(0.0);
    }
    let decay = params.decay_density();
    let est = omega_integral("gamma11", ctx.t, quad, |w| {
        2.0 * decay.thermal(params.beta, w) * ctx.population(w - params.omega0)
    })?;
    Ok(est.value)
}

fn eta11_in(ctx: &KernelContext, params: &PhysicalParams, quad: &QuadratureSpec) -> Result<f64> {
    if ctx.segments.is_empty() || params.g_lambda == 0.0 {
        return Ok(0.0);
    }
    let decay = params.decay_density();
    let sx = ctx.end.sx();
    let est = omega_integral("eta11", ctx.t, quad, |w| {
        decay.thermal_shifted(params.beta, w, sx) * ctx.population(w - params.omega0)
    })?;
    Ok(est.value)
}

fn gamma10_in(
    ctx: &KernelContext,
    params: &PhysicalParams,
    quad: &QuadratureSpec,
    include_x_parity: bool,
) -> Result<f64> {
    if ctx.segments.is_empty() {
        return Ok(0.0);
    }
    let name = if include_x_parity {
        "gamma10_re"
    } else {
        "gamma10_im"
    };
    let dephasing = params.dephasing_density();
    let decay = params.decay_density();
    let mut total = 0.0;
    if params.g_theta > 0.0 {
        total += omega_integral(name, ctx.t, quad, |w| {
            4.0 * dephasing.thermal(params.beta, w) * ctx.dephasing(w)
        })?
        .value;
    }
    if params.g_lambda > 0.0 {
        total += omega_integral(name, ctx.t, quad, |w| {
            decay.thermal(params.beta, w) * ctx.decay(w - params.omega0, include_x_parity).re
        })?
        .value;
    }
    Ok(total)
}

/// Population decay rate `gamma11(t)`.
pub fn gamma11(
    t: f64,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_time(t)?;
    gamma11_in(&KernelContext::new(schedule, t)?, params, quad)
}

/// Population source term `eta11(t)`.
pub fn eta11(
    t: f64,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_time(t)?;
    eta11_in(&KernelContext::new(schedule, t)?, params, quad)
}

/// Decay rate of `Re rho10`. The decay-channel term is the real part of its complex integral.
pub fn gamma10_re(
    t: f64,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_time(t)?;
    gamma10_in(&KernelContext::new(schedule, t)?, params, quad, true)
}

/// Decay rate of `Im rho10`.
pub fn gamma10_im(
    t: f64,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_time(t)?;
    gamma10_in(&KernelContext::new(schedule, t)?, params, quad, false)
}

/// All four rates with one shared segment decomposition.
pub fn rate_set(
    t: f64,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    quad: &QuadratureSpec,
) -> Result<RateSet> {
    check_time(t)?;
    let ctx = KernelContext::new(schedule, t)?;
    Ok(RateSet {
        gamma11: gamma11_in(&ctx, params, quad)?,
        eta11: eta11_in(&ctx, params, quad)?,
        gamma10_re: gamma10_in(&ctx, params, quad, true)?,
        gamma10_im: gamma10_in(&ctx, params, quad, false)?,
        gamma10_re_shift: residue_in(&ctx, params, quad, true)?,
        gamma10_im_shift: residue_in(&ctx, params, quad, false)?,
    })
}

/// Imaginary part of the decay-channel integral that the coherence rates discard.
pub fn decay_imaginary_residue(
    t: f64,
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    quad: &QuadratureSpec,
    include_x_parity: bool,
) -> Result<f64> {
    check_time(t)?;
    residue_in(&KernelContext::new(schedule, t)?, params, quad, include_x_parity)
}

fn residue_in(
    ctx: &KernelContext,
    params: &PhysicalParams,
    quad: &QuadratureSpec,
    include_x_parity: bool,
) -> Result<f64> {
    if ctx.segments.is_empty() || params.g_lambda == 0.0 {
        return Ok(0.0);
    }
    let decay = params.decay_density();
    let est = omega_integral("decay_residue", ctx.t, quad, |w| {
        decay.thermal(params.beta, w) * ctx.decay(w - params.omega0, include_x_parity).im
    })?;
    Ok(est.value)
}

/// Which spectral weight a lag integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LagKind {
    /// `w exp(-w) coth(beta w / 2)` against `sin(w s) / w`.
    Dephasing,
    /// `w exp(-w) coth(beta w / 2)` against `sin((w - w0) s) / (w - w0)`.
    Decay,
    /// `w exp(-w) (coth(beta w / 2) - 1)` against `sin((w - w0) s) / (w - w0)`.
    DecayOccupation,
    /// `w exp(-w) coth(beta w / 2)` against `(cos((w - w0) s) - 1) / (w - w0)`.
    DecayShift,
}

/// `L(s) = integral_0^omega_max W(w) sin(Omega s) / Omega dw` for unit coupling
/// (`(cos(Omega s) - 1) / Omega` for [`LagKind::DecayShift`]).
pub fn lag_integral(
    kind: LagKind,
    s: f64,
    omega0: f64,
    beta: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let unit = SpectralDensity::new(1.0);
    let width = QuadratureSpec::panel_width(s);
    let est = match kind {
        LagKind::Dephasing => integrate(
            |w| unit.thermal(beta, w) * s * sinc(w * s),
            0.0,
            quad.omega_max,
            width,
            quad,
        ),
        LagKind::Decay => integrate(
            |w| unit.thermal(beta, w) * s * sinc((w - omega0) * s),
            0.0,
            quad.omega_max,
            width,
            quad,
        ),
        LagKind::DecayOccupation => integrate(
            |w| unit.thermal_shifted(beta, w, 1.0) * s * sinc((w - omega0) * s),
            0.0,
            quad.omega_max,
            width,
            quad,
        ),
        LagKind::DecayShift => integrate(
            |w| {
                let half = 0.5 * (w - omega0) * s;
                -unit.thermal(beta, w) * s * half.sin() * sinc(half)
            },
            0.0,
            quad.omega_max,
            width,
            quad,
        ),
    }?;
    Ok(est.value)
}

// Lags closer than 2^-36 share a cache entry.
const LAG_QUANTUM: f64 = 68_719_476_736.0;

/// Memoised rate evaluator for one set of physical parameters.
///
/// Not shared between threads; each trajectory owns its engine.
#[derive(Debug, Clone)]
pub struct RateEngine {
    params: PhysicalParams,
    quad: QuadratureSpec,
    cache: HashMap<(LagKind, i64), f64>,
}

impl RateEngine {
    pub fn new(params: PhysicalParams, quad: QuadratureSpec) -> Result<Self> {
        params.validate()?;
        quad.validate()?;
        Ok(Self {
            params,
            quad,
            cache: HashMap::new(),
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn cached_lags(&self) -> usize {
        self.cache.len()
    }

    fn lag(&mut self, kind: LagKind, s: f64, rate: &'static str, t: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        let key = (kind, (s * LAG_QUANTUM).round() as i64);
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = lag_integral(kind, s, self.params.omega0, self.params.beta, &self.quad).map_err(
            |e| Error::RateEvaluation {
                rate,
                time: t,
                source: Box::new(e),
            },
        )?;
        self.cache.insert(key, v);
        Ok(v)
    }

    fn segment_lag(
        &mut self,
        kind: LagKind,
        seg: &Segment,
        t: f64,
        rate: &'static str,
    ) -> Result<f64> {
        Ok(self.lag(kind, t - seg.start, rate, t)? - self.lag(kind, t - seg.end, rate, t)?)
    }

    /// Rates at `t` for the given sign history, seen from endpoint signs `end`.
    ///
    /// `segments` must tile `[0, t]`. Passing the last segment's own signs as
    /// `end` gives the left limit at an event time.
    pub fn rates(&mut self, t: f64, segments: &[Segment], end: Signs) -> Result<RateSet> {
        if t <= 0.0 || segments.is_empty() {
            return Ok(RateSet::ZERO);
        }
        let PhysicalParams {
            g_theta, g_lambda, ..
        } = self.params;
        let (sx, sz) = (end.sx(), end.sz());
        let mut out = RateSet::ZERO;

        if g_theta > 0.0 {
            let mut dephasing = 0.0;
            for seg in segments {
                dephasing +=
                    sx * seg.signs.sx() * self.segment_lag(LagKind::Dephasing, seg, t, "gamma10")?;
            }
            out.gamma10_re += 4.0 * g_theta * dephasing;
            out.gamma10_im += 4.0 * g_theta * dephasing;
        }

        if g_lambda > 0.0 {
            let mut population = 0.0;
            let mut occupation = 0.0;
            let mut with_x = 0.0;
            let mut without_x = 0.0;
            let mut shift_with_x = 0.0;
            let mut shift_without_x = 0.0;
            for seg in segments {
                let wz = sz * seg.signs.sz();
                let wx = sx * seg.signs.sx();
                let d = self.segment_lag(LagKind::Decay, seg, t, "gamma11")?;
                with_x += wz * wx * d;
                without_x += wz * d;
                // Im of integral exp(i sx Omega (t1 - t)) over the segment is sx (M(t - a) - M(t - b)).
                let m = sx * self.segment_lag(LagKind::DecayShift, seg, t, "gamma10_shift")?;
                shift_with_x += wz * wx * m;
                shift_without_x += wz * m;
                if wx > 0.0 {
                    population += wz * d;
                    occupation +=
                        wz * self.segment_lag(LagKind::DecayOccupation, seg, t, "eta11")?;
                }
            }
            out.gamma11 = 2.0 * g_lambda * population;
            // coth - sx: (coth - 1) directly, or 2 coth - (coth - 1).
            out.eta11 = if sx > 0.0 {
                g_lambda * occupation
            } else {
                g_lambda * (2.0 * population - occupation)
            };
            out.gamma10_re += g_lambda * with_x;
            out.gamma10_im += g_lambda * without_x;
            out.gamma10_re_shift = g_lambda * shift_with_x;
            out.gamma10_im_shift = g_lambda * shift_without_x;
        }
        Ok(out)
    }

    /// Right-continuous rates at `t`, matching [`rate_set`].
    pub fn rate_set(&mut self, t: f64, schedule: &PulseSchedule) -> Result<RateSet> {
        check_time(t)?;
        let ctx = KernelContext::new(schedule, t)?;
        self.rates(t, &ctx.segments, ctx.end)
    }
}
