//! One-dimensional single-photon spectral amplitudes, wavenumber grids and
//! sampled states.
//!
//! Units follow `c = 1`: wavenumbers and angular frequencies coincide, and a
//! spectral phase `e^{i k tau0}` delays the temporal profile by `tau0`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature::gauss_legendre;

/// Envelope family of a compactly supported amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Constant on the support, `|psi|^2 = 1/delta`.
    Rectangular,
    /// Gaussian with `|psi|^2` standard deviation `delta / 6`, cut at the support edges.
    TruncatedGaussian,
    /// `cos^2(pi (k - k_c) / delta)`, vanishing smoothly at both edges.
    RaisedCosine,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Rectangular, Shape::TruncatedGaussian, Shape::RaisedCosine];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Rectangular => "rectangular",
            Shape::TruncatedGaussian => "truncated-gaussian",
            Shape::RaisedCosine => "raised-cosine",
        }
    }

    /// Unnormalized envelope at relative position `u = (k - k_c) / delta`.
    fn envelope(self, u: f64) -> f64 {
        match self {
            Shape::Rectangular => 1.0,
            Shape::TruncatedGaussian => (-9.0 * u * u).exp(),
            Shape::RaisedCosine => {
                let c = (PI * u).cos();
                c * c
            }
        }
    }

    /// `int_{-1/2}^{1/2} envelope(u)^2 du`, by a 128-point Gauss–Legendre rule.
    fn envelope_energy(self) -> f64 {
        let (x, w) = gauss_legendre(128);
        x.iter()
            .zip(&w)
            .map(|(&x, &w)| {
                let e = self.envelope(0.5 * x);
                0.5 * w * e * e
            })
            .sum()
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown shape `{s}`")))
    }
}

/// Open wavenumber interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, k: f64) -> bool {
        k > self.lo && k < self.hi
    }

    /// True when the intersection has positive length. Touching intervals do
    /// not overlap.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo.max(other.lo) < self.hi.min(other.hi)
    }
}

/// Serialized form of a [`SpectralAmplitude`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSpec {
    pub shape: Shape,
    pub k_c: f64,
    pub delta: f64,
    #[serde(default)]
    pub tau0: f64,
}

/// A normalized single-photon spectral wavefunction with support
/// `(k_c - delta/2, k_c + delta/2)` on the positive half-line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmplitudeSpec", into = "AmplitudeSpec")]
pub struct SpectralAmplitude {
    shape: Shape,
    center: f64,
    bandwidth: f64,
    delay: f64,
    scale: f64,
}

impl SpectralAmplitude {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Phase delay `tau0`; the amplitude carries the factor `e^{i k tau0}`.
    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.center - 0.5 * self.bandwidth, self.center + 0.5 * self.bandwidth)
    }

    /// Same envelope with the delay replaced by `tau0`.
    pub fn with_delay(&self, tau0: f64) -> Result<Self> {
        make_amplitude(self.shape, self.center, self.bandwidth, tau0)
    }

    /// Modulus of the amplitude, `|psi(k)|`.
    pub fn magnitude(&self, k: f64) -> f64 {
        if self.support().contains(k) {
            self.scale * self.shape.envelope((k - self.center) / self.bandwidth)
        } else {
            0.0
        }
    }

    /// `psi(k)`, zero outside the open support.
    pub fn eval(&self, k: f64) -> Complex64 {
        let m = self.magnitude(k);
        if m == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(m, k * self.delay)
    }

    pub fn spec(&self) -> AmplitudeSpec {
        AmplitudeSpec { shape: self.shape, k_c: self.center, delta: self.bandwidth, tau0: self.delay }
    }
}

impl TryFrom<AmplitudeSpec> for SpectralAmplitude {
    type Error = Error;

    fn try_from(s: AmplitudeSpec) -> Result<Self> {
        make_amplitude(s.shape, s.k_c, s.delta, s.tau0)
    }
}

impl From<SpectralAmplitude> for AmplitudeSpec {
    fn from(a: SpectralAmplitude) -> Self {
        a.spec()
    }
}

/// Builds a normalized amplitude.
///
/// Fails when `delta <= 0` or when the support would reach `k <= 0`.
pub fn make_amplitude(shape: Shape, k_c: f64, delta: f64, tau0: f64) -> Result<SpectralAmplitude> {
    if !(k_c.is_finite() && delta.is_finite() && tau0.is_finite()) {
        return Err(Error::InvalidAmplitude("non-finite parameter".into()));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidAmplitude(format!("bandwidth must be positive, got {delta}")));
    }
    if k_c - 0.5 * delta <= 0.0 {
        return Err(Error::InvalidAmplitude(format!(
            "support ({}, {}) reaches non-positive wavenumbers",
            k_c - 0.5 * delta,
            k_c + 0.5 * delta
        )));
    }
    let scale = 1.0 / (delta * shape.envelope_energy()).sqrt();
    Ok(SpectralAmplitude { shape, center: k_c, bandwidth: delta, delay: tau0, scale })
}

/// Two amplitudes of equal shape and bandwidth centred at `k1` and `k2`.
/// Requires `|k1 - k2| >= delta`; touching supports are accepted.
pub fn disjoint_pair(k1: f64, k2: f64, delta: f64, shape: Shape) -> Result<(SpectralAmplitude, SpectralAmplitude)> {
    if (k1 - k2).abs() < delta {
        return Err(Error::OverlappingSupports { k1, k2, delta });
    }
    Ok((make_amplitude(shape, k1, delta, 0.0)?, make_amplitude(shape, k2, delta, 0.0)?))
}

/// Reproducible description of a grid of equal-width Gauss–Legendre panels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

/// Composite Gauss–Legendre discretization of `int dk` over `[k_min, k_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    k_min: f64,
    k_max: f64,
}

impl KGrid {
    pub fn uniform(spec: &GridSpec) -> Result<Self> {
        if spec.panels == 0 {
            return Err(Error::Grid("at least one panel required".into()));
        }
        if !(spec.k_max > spec.k_min) {
            return Err(Error::Grid(format!("empty range [{}, {}]", spec.k_min, spec.k_max)));
        }
        let h = (spec.k_max - spec.k_min) / spec.panels as f64;
        let breaks: Vec<f64> =
            (0..=spec.panels).map(|i| if i == spec.panels { spec.k_max } else { spec.k_min + h * i as f64 }).collect();
        Self::from_breakpoints(&breaks, spec.nodes_per_panel)
    }

    /// One panel per consecutive pair of breakpoints.
    pub fn from_breakpoints(breaks: &[f64], nodes_per_panel: usize) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Grid("need at least two breakpoints".into()));
        }
        if nodes_per_panel == 0 {
            return Err(Error::Grid("nodes_per_panel must be positive".into()));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Grid("breakpoints must be finite and strictly increasing".into()));
        }
        let (x, w) = gauss_legendre(nodes_per_panel);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * nodes_per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for p in breaks.windows(2) {
            let half = 0.5 * (p[1] - p[0]);
            let mid = 0.5 * (p[1] + p[0]);
            for (&xi, &wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        let grid = KGrid { nodes, weights, k_min: breaks[0], k_max: breaks[breaks.len() - 1] };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Grid("nodes not strictly increasing (panels too narrow)".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Grid("non-positive quadrature weight".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&k, &w)| w * f(k)).sum()
    }

    /// Indices of nodes strictly inside `interval`.
    pub fn indices_in(&self, interval: &Interval) -> impl Iterator<Item = usize> + '_ {
        let interval = *interval;
        self.nodes.iter().enumerate().filter(move |(_, &k)| interval.contains(k)).map(|(i, _)| i)
    }
}

/// How to lay out a grid around a set of supports.
///
/// Panel widths are capped both by the requested density and by the phase
/// `T * h` a panel may accumulate in the window kernel, so the double
/// integrals stay resolved for long windows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridPlan {
    pub nodes_per_bandwidth: usize,
    pub nodes_per_panel: usize,
    /// Largest kernel phase `T * (k_i - k_j)` per node across a panel.
    pub phase_per_node: f64,
}

impl Default for GridPlan {
    fn default() -> Self {
        GridPlan { nodes_per_bandwidth: 256, nodes_per_panel: 64, phase_per_node: 2.5 }
    }
}

impl GridPlan {
    pub fn with_density(nodes_per_bandwidth: usize) -> Self {
        GridPlan { nodes_per_bandwidth, ..GridPlan::default() }
    }

    /// Grid spanning the union of `supports` and the gaps between them, with
    /// panel boundaries on every support edge. `half_width` is the largest
    /// window the grid will be used with.
    pub fn build(&self, supports: &[Interval], half_width: f64) -> Result<KGrid> {
        if supports.is_empty() {
            return Err(Error::Grid("no supports given".into()));
        }
        if self.nodes_per_bandwidth == 0 || self.nodes_per_panel == 0 || !(self.phase_per_node > 0.0) {
            return Err(Error::Grid("grid plan parameters must be positive".into()));
        }
        if !(half_width >= 0.0) || !half_width.is_finite() {
            return Err(Error::NegativeWindow(half_width));
        }
        let reference = supports.iter().map(Interval::width).fold(f64::INFINITY, f64::min);
        if !(reference > 0.0) {
            return Err(Error::Grid("support of zero width".into()));
        }
        let m = self.nodes_per_panel as f64;
        let mut h_max = reference * m / self.nodes_per_bandwidth as f64;
        if half_width > 0.0 {
            h_max = h_max.min(self.phase_per_node * m / half_width);
        }

        let mut edges: Vec<f64> = supports.iter().flat_map(|s| [s.lo, s.hi]).collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let mut breaks = vec![edges[0]];
        for p in edges.windows(2) {
            let panels = ((p[1] - p[0]) / h_max).ceil().max(1.0) as usize;
            let h = (p[1] - p[0]) / panels as f64;
            for i in 1..panels {
                breaks.push(p[0] + h * i as f64);
            }
            breaks.push(p[1]);
        }
        KGrid::from_breakpoints(&breaks, self.nodes_per_panel)
    }
}

pub(crate) fn same_grid(a: &Arc<KGrid>, b: &Arc<KGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Values of a normalized state at the nodes of a grid.
#[derive(Clone, Debug)]
pub struct SampledState {
    grid: Arc<KGrid>,
    values: Vec<Complex64>,
    renormalization: f64,
}

impl SampledState {
    /// Wraps explicit node values. They must already be normalized to 1e-8.
    pub fn new(grid: Arc<KGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let n2 = quadrature_norm_sqr(&grid, &values);
        if (n2 - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(SampledState { grid, values, renormalization: 1.0 })
    }

    /// Rebuilds a state from its weighted coordinates `sqrt(w_i) psi(k_i)`.
    pub fn from_weighted(grid: Arc<KGrid>, u: &DVector<Complex64>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let values = u.iter().zip(grid.weights()).map(|(u, w)| u / w.sqrt()).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Factor applied after sampling to restore unit quadrature norm.
    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    pub fn norm_sqr(&self) -> f64 {
        quadrature_norm_sqr(&self.grid, &self.values)
    }

    /// Coordinates `sqrt(w_i) psi(k_i)` in which the grid inner product is Euclidean.
    pub fn weighted(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.values.len(),
            self.values.iter().zip(self.grid.weights()).map(|(v, w)| v * w.sqrt()),
        )
    }
}

fn quadrature_norm_sqr(grid: &KGrid, values: &[Complex64]) -> f64 {
    values.iter().zip(grid.weights()).map(|(v, w)| w * v.norm_sqr()).sum()
}

/// Samples `amplitude` on `grid` and renormalizes to unit quadrature norm.
///
/// The grid must cover the support, with node spacing at most `delta / 32`
/// inside it (one 64-node panel per bandwidth is the coarsest that passes).
pub fn sample(amplitude: &SpectralAmplitude, grid: &Arc<KGrid>) -> Result<SampledState> {
    let support = amplitude.support();
    if grid.k_min() > support.lo || grid.k_max() < support.hi {
        return Err(Error::Grid(format!(
            "grid [{}, {}] does not cover support ({}, {})",
            grid.k_min(),
            grid.k_max(),
            support.lo,
            support.hi
        )));
    }
    let inside: Vec<f64> = grid.indices_in(&support).map(|i| grid.nodes()[i]).collect();
    let max_gap = match (inside.first(), inside.last()) {
        (Some(&first), Some(&last)) => {
            inside.windows(2).map(|p| p[1] - p[0]).fold((first - support.lo).max(support.hi - last), f64::max)
        }
        _ => f64::INFINITY,
    };
    let limit = amplitude.bandwidth() / 32.0;
    if max_gap > limit {
        return Err(Error::Grid(format!("grid too coarse: node gap {max_gap:e} exceeds delta/32 = {limit:e}")));
    }
    let raw: Vec<Complex64> = grid.nodes().iter().map(|&k| amplitude.eval(k)).collect();
    let n2 = quadrature_norm_sqr(grid, &raw);
    if !(n2 > 0.0) {
        return Err(Error::Grid("amplitude vanishes at every node".into()));
    }
    let factor = 1.0 / n2.sqrt();
    Ok(SampledState {
        grid: Arc::clone(grid),
        values: raw.into_iter().map(|v| v * factor).collect(),
        renormalization: factor,
    })
}

/// `<a|b> = sum_i w_i conj(a_i) b_i`.
pub fn overlap(a: &SampledState, b: &SampledState) -> Result<Complex64> {
    if !same_grid(&a.grid, &b.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(a.values.iter().zip(&b.values).zip(a.grid.weights()).map(|((x, y), w)| x.conj() * y * *w).sum())
}

/// Temporal profile `psi(tau) = (2 pi)^{-1/2} int psi(k) e^{-i k tau} dk`
/// at each of `taus`.
pub fn time_profile(state: &SampledState, taus: &[f64], exec: Execution) -> Vec<Complex64> {
    let grid = &state.grid;
    let norm = 1.0 / (2.0 * PI).sqrt();
    exec.map(taus.len(), |j| {
        let tau = taus[j];
        let s: Complex64 = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(&state.values)
            .map(|((&k, &w), v)| v * Complex64::from_polar(w, -k * tau))
            .sum();
        s * norm
    })
}
