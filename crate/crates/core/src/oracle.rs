//! Independent cross-checks.
//!
//! Nothing here calls into [`crate::window`] or [`crate::measurement`]
//! numerics: detection probabilities are recomputed in the time domain by
//! adaptive quadrature or in closed form, POVMs are audited by full dense
//! eigendecomposition, and the parity formulas by exhaustive enumeration.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::Povm;
use crate::spectra::SpectralAmplitude;

/// Sine integral `Si(x) = int_0^x sin(t)/t dt`.
///
/// Power series below `|x| = 2`; above, the continued fraction for the
/// complex exponential integral `E1(ix)` (modified Lentz), which stays at
/// machine precision where the asymptotic series would not.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x < 2.0 {
        let mut sum = 0.0;
        let mut term = x; // x^(2k+1)/(2k+1)! with alternating sign
        let x2 = x * x;
        for k in 0..40 {
            let n = (2 * k + 1) as f64;
            let add = term / n;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
            term *= -x2 / ((n + 1.0) * (n + 2.0));
        }
        return sum;
    }
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += Complex64::new(2.0, 0.0);
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(x.cos(), -x.sin());
    FRAC_PI_2 + h.im
}

/// Detection probability of a flat spectrum of bandwidth `delta` in the
/// window `(-T, T)`: `(1/pi) (2 Si(x) - 2 (1 - cos x) / x)`, `x = delta T`.
pub fn detect_prob_flat_closed_form(delta: f64, half_width: f64) -> f64 {
    let x = delta * half_width;
    if x <= 0.0 {
        return 0.0;
    }
    let s = (0.5 * x).sin();
    // 1 - cos x = 2 sin^2(x/2)
    (2.0 * sine_integral(x) - 4.0 * s * s / x) / PI
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    ((kronrod * h), ((kronrod - gauss) * h).norm())
}

/// Adaptive Gauss–Kronrod integration of a complex integrand to absolute
/// tolerance `tol`.
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> Complex64 {
    fn go<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Complex64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 48 {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth + 1) + go(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    go(f, a, b, tol, 0)
}

/// `int_{-T}^{T} |psi(tau)|^2 dtau` with `psi(tau)` obtained by direct
/// quadrature of the Fourier integral; no window kernel involved.
pub fn detect_prob_time_domain(amplitude: &SpectralAmplitude, half_width: f64) -> f64 {
    if half_width <= 0.0 {
        return 0.0;
    }
    let support = amplitude.support();
    let kc = amplitude.center();
    let (lo, hi) = (support.lo - kc, support.hi - kc);
    let norm_sqr =
        integrate_adaptive(&|x: f64| Complex64::new(amplitude.eval(kc + x).norm_sqr(), 0.0), lo, hi, 1e-15).re;
    // |psi(tau)| is unchanged by the carrier e^{-i k_c tau}, so integrate in x = k - k_c.
    let profile_sqr = |tau: f64| {
        let v = integrate_adaptive(
            &|x: f64| amplitude.eval(kc + x) * Complex64::from_polar(1.0, -x * tau),
            lo,
            hi,
            1e-14 * (hi - lo).sqrt(),
        );
        Complex64::new(v.norm_sqr() / (2.0 * PI), 0.0)
    };
    let p = integrate_adaptive(&profile_sqr, -half_width, half_width, 1e-13).re;
    p / norm_sqr
}

/// Eigenvalue bounds and residuals of a POVM audit.
#[derive(Clone, Debug, Serialize)]
pub struct ElementReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub hermiticity_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidityReport {
    /// Reports for `M_1`, `M_2`, `M_perp`.
    pub elements: [ElementReport; 3],
    pub sum_min_eigenvalue: f64,
    pub sum_max_eigenvalue: f64,
    /// `max |(M_1 + M_2 + M_perp - I)_ij|`.
    pub completeness_residual: f64,
}

impl ValidityReport {
    pub const MIN_EIGENVALUE: f64 = -1e-9;
    pub const COMPLETENESS: f64 = 1e-8;
    pub const HERMITICITY: f64 = 1e-10;

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, e) in ["M1", "M2", "Mperp"].iter().zip(&self.elements) {
            if e.min_eigenvalue < Self::MIN_EIGENVALUE {
                out.push(format!("{name} not positive: min eigenvalue {:e}", e.min_eigenvalue));
            }
            if e.max_eigenvalue > 1.0 - Self::MIN_EIGENVALUE {
                out.push(format!("{name} exceeds identity: max eigenvalue {}", e.max_eigenvalue));
            }
            if e.hermiticity_residual > Self::HERMITICITY {
                out.push(format!("{name} not Hermitian: residual {:e}", e.hermiticity_residual));
            }
        }
        if self.completeness_residual > Self::COMPLETENESS {
            out.push(format!("elements do not sum to identity: residual {:e}", self.completeness_residual));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.elements.iter().map(|e| e.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn audit_element(m: &DMatrix<Complex64>) -> ElementReport {
    let adj = m.adjoint();
    let hermiticity_residual = max_abs(&(m - &adj));
    let sym = (m + adj) * Complex64::new(0.5, 0.0);
    let ev = sym.symmetric_eigenvalues();
    ElementReport { min_eigenvalue: ev.min(), max_eigenvalue: ev.max(), hermiticity_residual }
}

/// Full dense eigendecomposition of every element and of their sum.
pub fn povm_validity_bruteforce(povm: &Povm) -> ValidityReport {
    let [m1, m2, mp] = povm.elements();
    let elements = [audit_element(m1), audit_element(m2), audit_element(mp)];
    let sum = m1 + m2 + mp;
    let sum_report = audit_element(&sum);
    let n = sum.nrows();
    let completeness_residual = max_abs(&(sum - DMatrix::<Complex64>::identity(n, n)));
    ValidityReport {
        elements,
        sum_min_eigenvalue: sum_report.min_eigenvalue,
        sum_max_eigenvalue: sum_report.max_eigenvalue,
        completeness_residual,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityTable {
    pub channels: usize,
    pub p: f64,
    /// Probability that every channel yields a definite outcome.
    pub all_detected: f64,
    /// Success when B reads the parity off a full detection and otherwise
    /// guesses it with a fair coin.
    pub guess_success: f64,
    /// Probability of each detected/undetected pattern, bit `i` set when
    /// channel `i` fired.
    pub patterns: Vec<f64>,
}

/// Enumerates all `2^N` detection patterns for independent channels that
/// each fire with probability `p`.
pub fn parity_exhaustive(channels: usize, p: f64) -> Result<ParityTable> {
    if !(1..=16).contains(&channels) {
        return Err(Error::Config(format!("exhaustive enumeration supports 1..=16 channels, got {channels}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Probability(p));
    }
    let full = (1usize << channels) - 1;
    let patterns: Vec<f64> =
        (0..=full).map(|mask| (0..channels).map(|i| if mask >> i & 1 == 1 { p } else { 1.0 - p }).product()).collect();
    let all_detected = patterns[full];
    let guess_success = patterns.iter().enumerate().map(|(mask, q)| if mask == full { *q } else { 0.5 * q }).sum();
    Ok(ParityTable { channels, p, all_detected, guess_success, patterns })
}
