//! Three-outcome windowed measurements `{1, 2, perp}`.
//!
//! Two families are provided:
//!
//! * **support**: `M_i = P_i W_T P_i` with `P_i` the indicator of support `E_i`.
//!   Blind to anything but where the spectrum lives; cross-probabilities for
//!   disjoint supports vanish identically.
//! * **state**: `M_i = W_T |psi_i><psi_i| W_T`, tuned to the exact agreed
//!   states and hence sensitive to spectral phases (delays).
//!
//! In both cases `M_perp = I - M_1 - M_2`. All matrices act on weighted grid
//! coordinates, where the identity is the plain identity matrix.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::spectra::{overlap, same_grid, Interval, KGrid, SampledState};
use crate::window::{clamp_unit, WindowOperator, CLAMP_TOLERANCE};
use crate::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmFamily {
    Support,
    State,
}

impl PovmFamily {
    pub fn name(self) -> &'static str {
        match self {
            PovmFamily::Support => "support",
            PovmFamily::State => "state",
        }
    }
}

impl std::fmt::Display for PovmFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PovmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "support" => Ok(PovmFamily::Support),
            "state" => Ok(PovmFamily::State),
            other => Err(Error::Config(format!("unknown POVM family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "perp")]
    Perp,
}

impl Outcome {
    pub fn is_definite(self) -> bool {
        self != Outcome::Perp
    }

    /// The channel bit announced by a definite outcome.
    pub fn bit(self) -> Option<u8> {
        match self {
            Outcome::One => Some(0),
            Outcome::Two => Some(1),
            Outcome::Perp => None,
        }
    }

    /// Outcome expected for a channel carrying `bit`.
    pub fn for_bit(bit: u8) -> Outcome {
        if bit == 0 {
            Outcome::One
        } else {
            Outcome::Two
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDist {
    pub p1: f64,
    pub p2: f64,
    pub p_perp: f64,
}

impl OutcomeDist {
    pub fn new(p1: f64, p2: f64, p_perp: f64) -> Result<Self> {
        let d = OutcomeDist { p1, p2, p_perp };
        for p in [p1, p2, p_perp] {
            check_probability(p)?;
        }
        if (p1 + p2 + p_perp - 1.0).abs() > 1e-8 {
            return Err(Error::Invariant(format!("outcome probabilities sum to {}", p1 + p2 + p_perp)));
        }
        Ok(d)
    }

    pub fn prob(&self, o: Outcome) -> f64 {
        match o {
            Outcome::One => self.p1,
            Outcome::Two => self.p2,
            Outcome::Perp => self.p_perp,
        }
    }
}

/// Three positive operators summing to the identity on a grid.
#[derive(Clone, Debug)]
pub struct Povm {
    family: PovmFamily,
    half_width: f64,
    grid: Arc<KGrid>,
    elements: [DMatrix<Complex64>; 3],
}

impl Povm {
    /// Assembles a POVM from raw elements without any checks. Used for audits
    /// and fault injection; see [`crate::oracle::povm_validity_bruteforce`].
    pub fn from_elements_unchecked(
        family: PovmFamily,
        half_width: f64,
        grid: Arc<KGrid>,
        elements: [DMatrix<Complex64>; 3],
    ) -> Self {
        Povm { family, half_width, grid, elements }
    }

    pub fn family(&self) -> PovmFamily {
        self.family
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    /// `[M_1, M_2, M_perp]`.
    pub fn elements(&self) -> &[DMatrix<Complex64>; 3] {
        &self.elements
    }

    pub fn element(&self, o: Outcome) -> &DMatrix<Complex64> {
        match o {
            Outcome::One => &self.elements[0],
            Outcome::Two => &self.elements[1],
            Outcome::Perp => &self.elements[2],
        }
    }
}

fn complete(m1: DMatrix<Complex64>, m2: DMatrix<Complex64>) -> [DMatrix<Complex64>; 3] {
    let n = m1.nrows();
    let perp = DMatrix::<Complex64>::identity(n, n) - &m1 - &m2;
    [m1, m2, perp]
}

/// Support-projector family windowed by `W_T`.
pub fn support_povm(grid: &Arc<KGrid>, e1: Interval, e2: Interval, half_width: f64) -> Result<Povm> {
    support_povm_with(grid, e1, e2, half_width, Execution::default())
}

pub fn support_povm_with(
    grid: &Arc<KGrid>,
    e1: Interval,
    e2: Interval,
    half_width: f64,
    exec: Execution,
) -> Result<Povm> {
    if e1.overlaps(&e2) {
        return Err(Error::OverlappingSupports {
            k1: 0.5 * (e1.lo + e1.hi),
            k2: 0.5 * (e2.lo + e2.hi),
            delta: e1.width().max(e2.width()),
        });
    }
    let w = WindowOperator::build(grid, half_width, 0.0, exec)?;
    let n = grid.len();
    let in1: Vec<bool> = grid.nodes().iter().map(|&k| e1.contains(k)).collect();
    let in2: Vec<bool> = grid.nodes().iter().map(|&k| e2.contains(k)).collect();
    let kernel = w.kernel();
    let project = |mask: &[bool]| {
        DMatrix::from_fn(n, n, |i, j| {
            if mask[i] && mask[j] {
                Complex64::new(kernel[(i, j)], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let m1 = project(&in1);
    let m2 = project(&in2);
    Ok(Povm { family: PovmFamily::Support, half_width, grid: Arc::clone(grid), elements: complete(m1, m2) })
}

/// State-projector family `W |psi_i><psi_i| W`.
pub fn state_povm(psi1: &SampledState, psi2: &SampledState, half_width: f64) -> Result<Povm> {
    state_povm_with(psi1, psi2, half_width, Execution::default())
}

pub fn state_povm_with(psi1: &SampledState, psi2: &SampledState, half_width: f64, exec: Execution) -> Result<Povm> {
    let o = overlap(psi1, psi2)?.norm();
    if o > 1e-10 {
        return Err(Error::NotOrthogonal(o));
    }
    let w = WindowOperator::build(psi1.grid(), half_width, 0.0, exec)?;
    let a1 = w.apply(&psi1.weighted());
    let a2 = w.apply(&psi2.weighted());
    let m1 = &a1 * a1.adjoint();
    let m2 = &a2 * a2.adjoint();
    Ok(Povm { family: PovmFamily::State, half_width, grid: Arc::clone(psi1.grid()), elements: complete(m1, m2) })
}

/// A density matrix in weighted grid coordinates.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    grid: Arc<KGrid>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// `sum_j p_j |psi_j><psi_j|`. Weights must be non-negative and sum to 1.
    pub fn mixture(components: &[(f64, &SampledState)]) -> Result<Self> {
        let (_, first) = components.first().ok_or_else(|| Error::Config("empty mixture".into()))?;
        let grid = Arc::clone(first.grid());
        let n = grid.len();
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if components.iter().any(|(p, _)| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mixture weights must be >= 0 and sum to 1, got {total}")));
        }
        let mut matrix = DMatrix::<Complex64>::zeros(n, n);
        for (p, s) in components {
            if !same_grid(&grid, s.grid()) {
                return Err(Error::GridMismatch);
            }
            let u = s.weighted();
            matrix += (&u * u.adjoint()) * Complex64::new(*p, 0.0);
        }
        Ok(DensityMatrix { grid, matrix })
    }

    /// Wraps a raw matrix. The trace is checked when it is used.
    pub fn from_matrix(grid: Arc<KGrid>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(DensityMatrix { grid, matrix })
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// What B receives in one channel.
#[derive(Clone, Debug)]
pub enum QuantumInput {
    Pure(SampledState),
    Mixed(DensityMatrix),
}

impl QuantumInput {
    pub fn grid(&self) -> &Arc<KGrid> {
        match self {
            QuantumInput::Pure(s) => s.grid(),
            QuantumInput::Mixed(r) => r.grid(),
        }
    }
}

impl From<SampledState> for QuantumInput {
    fn from(s: SampledState) -> Self {
        QuantumInput::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumInput {
    fn from(r: DensityMatrix) -> Self {
        QuantumInput::Mixed(r)
    }
}

/// `p_o = Tr(rho M_o)`, clamped to `[0, 1]` and renormalized against
/// rounding drift.
pub fn outcome_dist(povm: &Povm, input: &QuantumInput) -> Result<OutcomeDist> {
    if !same_grid(povm.grid(), input.grid()) {
        return Err(Error::GridMismatch);
    }
    let raw: Vec<f64> = match input {
        QuantumInput::Pure(s) => {
            let u = s.weighted();
            povm.elements.iter().map(|m| u.dotc(&(m * &u)).re).collect()
        }
        QuantumInput::Mixed(rho) => {
            let tr = rho.trace();
            if (tr - 1.0).abs() > 1e-8 {
                return Err(Error::Trace(tr));
            }
            // Tr(rho M) = sum_ij rho_ij M_ji = sum_ij rho_ij conj(M_ij) for Hermitian M
            povm.elements
                .iter()
                .map(|m| rho.matrix.iter().zip(m.iter()).map(|(r, x)| (r * x.conj()).re).sum())
                .collect()
        }
    };
    let mut p = [0.0; 3];
    for (slot, &v) in p.iter_mut().zip(&raw) {
        if v < -CLAMP_TOLERANCE {
            return Err(Error::Invariant(format!("negative outcome probability {v:e}")));
        }
        *slot = clamp_unit(v, "outcome probability")?;
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::Invariant(format!("outcome probabilities sum to {sum}")));
    }
    Ok(OutcomeDist { p1: p[0] / sum, p2: p[1] / sum, p_perp: p[2] / sum })
}

/// Draws one outcome from `dist`.
pub fn sample_outcome<R: Rng + ?Sized>(dist: &OutcomeDist, rng: &mut R) -> Outcome {
    let u: f64 = rng.random();
    if u < dist.p1 {
        Outcome::One
    } else if u < dist.p1 + dist.p2 {
        Outcome::Two
    } else {
        Outcome::Perp
    }
}

/// Diagnostic angle `arccos(1 - p)` between states distinguished with
/// probability `p`: 0 when indistinguishable, `pi/2` when fully distinguishable.
pub fn effective_angle(p: f64) -> Result<f64> {
    let p = check_probability(p)?;
    if p == 1.0 {
        return Ok(FRAC_PI_2);
    }
    Ok((1.0 - p).acos())
}
