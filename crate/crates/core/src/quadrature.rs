//! Globally adaptive Gauss-Kronrod (7/15) quadrature on a panel grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

/// Tolerances and domain truncation for frequency integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper frequency cutoff of the truncated integration domain.
    pub omega_max: f64,
    /// Maximum number of bisections of an initial panel.
    pub max_panel_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            omega_max: 40.0,
            max_panel_depth: 30,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", format!("must be positive, got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", format!("must be positive, got {}", self.abs_tol)));
        }
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(invalid(
                "omega_max",
                format!("must be positive, got {}", self.omega_max),
            ));
        }
        if (-self.omega_max).exp() >= self.abs_tol {
            return Err(invalid(
                "omega_max",
                format!(
                    "exp(-{}) is not below abs_tol = {:e}",
                    self.omega_max, self.abs_tol
                ),
            ));
        }
        if self.max_panel_depth == 0 {
            return Err(invalid("max_panel_depth", "must be at least 1"));
        }
        Ok(())
    }

    /// Initial panel width for an integrand oscillating like `sin(w t)`.
    pub fn panel_width(t: f64) -> f64 {
        1f64.min(std::f64::consts::PI / t.abs().max(1.0))
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss-Kronrod 15-point panel with a QUADPACK-style error estimate.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Estimate { value, error }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; ties broken by position so the refinement order is deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.est
            .error
            .total_cmp(&other.est.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

const MAX_PANELS: usize = 200_000;

/// Integrates `f` over `[a, b]` starting from panels of width `initial_width`
/// and bisecting the worst panel until the summed error estimate meets
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    initial_width: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if !(b > a) {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let n = ((b - a) / initial_width).ceil().max(1.0) as usize;
    let width = (b - a) / n as f64;
    let mut heap: BinaryHeap<Panel> = (0..n)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == n { b } else { a + (i + 1) as f64 * width };
            Panel {
                a: lo,
                b: hi,
                est: gauss_kronrod_15(&f, lo, hi),
                depth: 0,
            }
        })
        .collect();
    let mut finished: Vec<Panel> = Vec::new();
    let (mut value, mut error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.est.value, e + p.est.error));

    loop {
        let tolerance = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tolerance {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => {
                return Err(Error::QuadratureNonConvergence {
                    lower: a,
                    upper: b,
                    error_estimate: error,
                    tolerance,
                })
            }
        };
        if worst.depth >= spec.max_panel_depth || heap.len() + finished.len() > MAX_PANELS {
            finished.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        value -= worst.est.value;
        error -= worst.est.error;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let est = gauss_kronrod_15(&f, lo, hi);
            value += est.value;
            error += est.error;
            heap.push(Panel {
                a: lo,
                b: hi,
                est,
                depth: worst.depth + 1,
            });
        }
    }

    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(finished);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let (value, error) = panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.est.value, e + p.est.error));
    Ok(Estimate { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_polynomials() {
        // K15 integrates degree <= 22 exactly, G7 degree <= 13.
        for deg in 0..=13 {
            let f = |x: f64| x.powi(deg);
            let est = gauss_kronrod_15(&f, 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((est.value - exact).abs() < 1e-15, "degree {deg}");
            assert!(est.error < 1e-13, "degree {deg}: {}", est.error);
        }
        let f = |x: f64| x.powi(22);
        let est = gauss_kronrod_15(&f, -1.0, 1.0);
        assert!((est.value - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integral() {
        // integral_0^40 exp(-w) sin(25 w) dw = 25 / 626 (1 - exp(-40)(...)) ~ 25/626
        let spec = QuadratureSpec::default();
        let est = integrate(
            |w: f64| (-w).exp() * (25.0 * w).sin(),
            0.0,
            40.0,
            QuadratureSpec::panel_width(25.0),
            &spec,
        )
        .unwrap();
        let exact = 25.0 / 626.0;
        assert!((est.value - exact).abs() < 1e-10, "{} vs {exact}", est.value);
        assert!(est.error <= 1e-8 * exact);
    }

    #[test]
    fn sharp_feature_is_refined() {
        let spec = QuadratureSpec::default();
        let eps = 1e-3;
        let est = integrate(|x: f64| eps / (x * x + eps * eps), 0.0, 1.0, 1.0, &spec).unwrap();
        let exact = (1.0 / eps).atan();
        assert!(((est.value - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn non_convergence_is_reported() {
        let spec = QuadratureSpec {
            max_panel_depth: 2,
            ..QuadratureSpec::default()
        };
        let err = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let bad = QuadratureSpec {
            omega_max: 10.0,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            rel_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
