//! The time-window operator `W_T`.
//!
//! In the weighted grid coordinates `u_i = sqrt(w_i) psi(k_i)` the operator is
//! the dense matrix
//!
//! ```text
//! K_ij = sqrt(w_i w_j) sin((k_i - k_j) T) / (pi (k_i - k_j)),   K_ii = w_i T / pi
//! ```
//!
//! so that `<psi|W_T|psi> = u^H K u` is the probability of detection inside
//! the window `(-T, T)`. An offset window `(tau_a, tau_b)` is the same kernel
//! conjugated by the diagonal phase `e^{i k c}`, `c = (tau_a + tau_b) / 2`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::spectra::{same_grid, sample, GridPlan, KGrid, SampledState, SpectralAmplitude};

/// Negative quadrature noise tolerated before it is treated as a bug.
pub(crate) const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct WindowOperator {
    grid: Arc<KGrid>,
    half_width: f64,
    center: f64,
    kernel: DMatrix<f64>,
}

/// Symmetric window `(-T, T)`.
pub fn build_window(grid: &Arc<KGrid>, half_width: f64) -> Result<WindowOperator> {
    WindowOperator::build(grid, half_width, 0.0, Execution::default())
}

/// Window `(start, end)`, not necessarily centred on zero.
pub fn build_offset_window(grid: &Arc<KGrid>, start: f64, end: f64) -> Result<WindowOperator> {
    if !(end >= start) {
        return Err(Error::NegativeWindow(0.5 * (end - start)));
    }
    WindowOperator::build(grid, 0.5 * (end - start), 0.5 * (start + end), Execution::default())
}

impl WindowOperator {
    pub fn build(grid: &Arc<KGrid>, half_width: f64, center: f64, exec: Execution) -> Result<Self> {
        if !(half_width >= 0.0) || !half_width.is_finite() {
            return Err(Error::NegativeWindow(half_width));
        }
        if !center.is_finite() {
            return Err(Error::Invariant("non-finite window centre".into()));
        }
        let n = grid.len();
        let k = grid.nodes();
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let mut data = vec![0.0; n * n];
        if half_width > 0.0 {
            // column-major: chunk j is column j
            exec.for_each_chunk_mut(&mut data, n, |j, col| {
                for (i, entry) in col.iter_mut().enumerate() {
                    *entry = if i == j {
                        sw[i] * sw[i] * half_width / PI
                    } else {
                        let d = k[i] - k[j];
                        sw[i] * sw[j] * (d * half_width).sin() / (PI * d)
                    };
                }
            });
        }
        Ok(WindowOperator { grid: Arc::clone(grid), half_width, center, kernel: DMatrix::from_vec(n, n, data) })
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// The real symmetric kernel of the centred window of the same width.
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    fn centre_phase(&self, i: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.grid.nodes()[i] * self.center)
    }

    /// Full operator as a Hermitian matrix in weighted coordinates.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let mut m = self.kernel.map(|v| Complex64::new(v, 0.0));
        if self.center != 0.0 {
            let n = m.nrows();
            for j in 0..n {
                let pj = self.centre_phase(j).conj();
                for i in 0..n {
                    m[(i, j)] *= self.centre_phase(i) * pj;
                }
            }
        }
        m
    }

    /// `W u` for a vector in weighted coordinates.
    pub fn apply(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        let shifted = self.unshift(u);
        let re = &self.kernel * shifted.map(|z| z.re);
        let im = &self.kernel * shifted.map(|z| z.im);
        let mut out = DVector::from_iterator(u.len(), re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)));
        if self.center != 0.0 {
            for (i, z) in out.iter_mut().enumerate() {
                *z *= self.centre_phase(i);
            }
        }
        out
    }

    fn unshift(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        if self.center == 0.0 {
            return u.clone();
        }
        DVector::from_iterator(u.len(), u.iter().enumerate().map(|(i, z)| z * self.centre_phase(i).conj()))
    }

    /// `u^H W u` (real because `W` is Hermitian).
    pub fn quadratic_form(&self, u: &DVector<Complex64>) -> f64 {
        let v = self.unshift(u);
        let a = v.map(|z| z.re);
        let b = v.map(|z| z.im);
        a.dot(&(&self.kernel * &a)) + b.dot(&(&self.kernel * &b))
    }
}

/// Probability `<psi|W_T|psi>` that the detector fires inside the window.
pub fn detect_prob(w: &WindowOperator, state: &SampledState) -> Result<f64> {
    if !same_grid(w.grid(), state.grid()) {
        return Err(Error::GridMismatch);
    }
    let q = w.quadratic_form(&state.weighted());
    clamp_unit(q, "window detection probability")
}

/// Probability of no detection inside the window, `1 - detect_prob`.
pub fn perp_prob(w: &WindowOperator, state: &SampledState) -> Result<f64> {
    Ok(1.0 - detect_prob(w, state)?)
}

/// Eigenvalues of `W_T` on the grid, in descending order.
pub fn window_spectrum(w: &WindowOperator) -> Vec<f64> {
    if w.half_width == 0.0 {
        return vec![0.0; w.grid.len()];
    }
    let mut ev: Vec<f64> = w.kernel.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Detection probability of `amplitude` in `(-T, T)` on a grid laid out by
/// `plan` around its support.
pub fn detect_prob_for(amplitude: &SpectralAmplitude, half_width: f64, plan: &GridPlan) -> Result<f64> {
    let grid = Arc::new(plan.build(&[amplitude.support()], half_width)?);
    let state = sample(amplitude, &grid)?;
    detect_prob(&build_window(&grid, half_width)?, &state)
}

pub(crate) fn clamp_unit(p: f64, what: &str) -> Result<f64> {
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&p) {
        return Err(Error::Invariant(format!("{what} {p:e} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}
