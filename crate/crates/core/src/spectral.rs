//! Fourier collocation on the 2π-periodic grid.
//!
//! A grid with `n_modes = n` has `2n` equispaced nodes. Fields are sampled
//! on the nodes; even wave profiles are stored as cosine coefficients
//! `a_1 .. a_{n-1}`. The Nyquist mode `n` is never retained, because its
//! sampled derivative is not representable on the grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest supported number of modes.
pub const MIN_MODES: usize = 8;

/// Default relative tolerance for the odd-part check in [`analyze_even`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Equispaced periodic grid together with cached FFT plans.
pub struct Grid {
    n_modes: usize,
    nodes: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pad_fwd: Arc<dyn Fft<f64>>,
    pad_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n_modes", &self.n_modes).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes
    }
}

impl Grid {
    /// Builds a grid with `2 * n_modes` nodes `x_j = 2πj / (2 n_modes)`.
    pub fn new(n_modes: usize) -> Result<Arc<Grid>> {
        if n_modes < MIN_MODES {
            return Err(Error::Domain(format!(
                "n_modes must be at least {MIN_MODES}, got {n_modes}"
            )));
        }
        let len = 2 * n_modes;
        let nodes = (0..len).map(|j| 2.0 * PI * j as f64 / len as f64).collect();
        let mut planner = FftPlanner::new();
        let pad = 3 * n_modes;
        Ok(Arc::new(Grid {
            n_modes,
            nodes,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            pad_fwd: planner.plan_fft_forward(pad),
            pad_inv: planner.plan_fft_inverse(pad),
        }))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of collocation nodes.
    pub fn len(&self) -> usize {
        2 * self.n_modes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Highest retained wavenumber.
    pub fn retained(&self) -> usize {
        self.n_modes - 1
    }

    /// Size of the 3/2-rule padded grid used for products.
    pub fn padded_len(&self) -> usize {
        3 * self.n_modes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Half spectrum `c_0 .. c_K` of nodal values, normalised so that
    /// `f = c_0 + 2 Re Σ c_k e^{ikx}`. The Nyquist coefficient is dropped.
    pub(crate) fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        half_spectrum(&*self.fwd, values, self.retained())
    }

    /// Nodal values of a half spectrum.
    pub(crate) fn synthesize(&self, half: &[Complex64]) -> Vec<f64> {
        from_half(&*self.inv, half, self.len())
    }

    /// Values of a half spectrum on the padded grid.
    pub(crate) fn to_padded(&self, half: &[Complex64]) -> Vec<f64> {
        from_half(&*self.pad_inv, half, self.padded_len())
    }

    /// Half spectrum (truncated to retained modes) of padded-grid values.
    pub(crate) fn project_padded(&self, values: &[f64]) -> Vec<Complex64> {
        half_spectrum(&*self.pad_fwd, values, self.retained())
    }
}

fn half_spectrum(plan: &dyn Fft<f64>, values: &[f64], k_max: usize) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.truncate(k_max + 1);
    for c in buf.iter_mut() {
        *c *= scale;
    }
    buf
}

fn from_half(plan: &dyn Fft<f64>, half: &[Complex64], n: usize) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let k_max = half.len().saturating_sub(1).min((n - 1) / 2);
    buf[0] = half[0];
    for k in 1..=k_max {
        buf[k] = half[k];
        buf[n - k] = half[k].conj();
    }
    plan.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Values of a half spectrum on an arbitrary uniform grid of `n` points.
pub(crate) fn half_to_uniform(half: &[Complex64], n: usize) -> Vec<f64> {
    let plan = FftPlanner::new().plan_fft_inverse(n);
    from_half(&*plan, half, n)
}

/// Real Fourier coefficients `ĝ_0 .. ĝ_{m_max}` of an even function sampled
/// on a uniform grid, `g = Σ ĝ_m e^{imx}`.
pub(crate) fn even_coefficients(samples: &[f64], m_max: usize) -> Vec<f64> {
    let n = samples.len();
    let plan = FftPlanner::new().plan_fft_forward(n);
    half_spectrum(&*plan, samples, m_max.min(n / 2 - 1))
        .into_iter()
        .map(|c| c.re)
        .chain(std::iter::repeat(0.0))
        .take(m_max + 1)
        .collect()
}

/// Samples of a function on the collocation grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "field has {} samples, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: grid.clone(),
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Field {
        Field { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// Pointwise product, taken without dealiasing.
    pub fn mul(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a * b)
    }

    /// L² norm on the period.
    pub fn l2_norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    pub(crate) fn half(&self) -> Vec<Complex64> {
        self.grid.analyze(&self.values)
    }

    pub(crate) fn from_half(grid: &Arc<Grid>, half: &[Complex64]) -> Field {
        Field { grid: grid.clone(), values: grid.synthesize(half) }
    }
}

/// Even, zero-mean profile stored as cosine coefficients `a_1 .. a_K`.
#[derive(Clone, Debug)]
pub struct WaveProfile {
    grid: Arc<Grid>,
    coeffs: Vec<f64>,
}

impl WaveProfile {
    /// Profile `Σ coeffs[k-1] cos(kx)`. Shorter coefficient lists are padded
    /// with zeros; longer lists are rejected.
    pub fn new(grid: &Arc<Grid>, mut coeffs: Vec<f64>) -> Result<WaveProfile> {
        let k = grid.retained();
        if coeffs.len() > k {
            return Err(Error::Domain(format!(
                "{} cosine coefficients exceed the {k} retained modes",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("non-finite cosine coefficient".into()));
        }
        coeffs.resize(k, 0.0);
        Ok(WaveProfile { grid: grid.clone(), coeffs })
    }

    pub fn zero(grid: &Arc<Grid>) -> WaveProfile {
        WaveProfile { grid: grid.clone(), coeffs: vec![0.0; grid.retained()] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Cosine coefficients; entry `k-1` multiplies `cos(kx)`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Moves the profile to another resolution, truncating or zero padding.
    pub fn resample(&self, grid: &Arc<Grid>) -> WaveProfile {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(grid.retained(), 0.0);
        WaveProfile { grid: grid.clone(), coeffs }
    }

    /// Half spectrum of the `order`-th derivative.
    pub(crate) fn derivative_half(&self, order: u32) -> Vec<Complex64> {
        let mut half = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            let k = (i + 1) as f64;
            half[i + 1] = Complex64::new(0.0, k).powu(order) * (0.5 * a);
        }
        half
    }

    /// Samples of the `order`-th derivative on the collocation grid.
    pub fn derivative(&self, order: u32) -> Field {
        Field::from_half(&self.grid, &self.derivative_half(order))
    }

    pub fn to_field(&self) -> Field {
        self.derivative(0)
    }

    /// Samples of the `order`-th derivative on the padded grid.
    pub(crate) fn padded(&self, order: u32) -> Vec<f64> {
        self.grid.to_padded(&self.derivative_half(order))
    }

    /// Samples of the `order`-th derivative on a uniform grid of `n` points.
    pub(crate) fn uniform(&self, order: u32, n: usize) -> Vec<f64> {
        half_to_uniform(&self.derivative_half(order), n)
    }

    /// `φ(x)`, `φ'(x)`, `φ''(x)` at an arbitrary point.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let rot = Complex64::new(x.cos(), x.sin());
        let mut e = Complex64::new(1.0, 0.0);
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (i, &a) in self.coeffs.iter().enumerate() {
            e *= rot;
            let k = (i + 1) as f64;
            v += a * e.re;
            d1 -= a * k * e.im;
            d2 -= a * k * k * e.re;
        }
        [v, d1, d2]
    }

    /// `A[φ] = (1/4π)∫φ'² + (3/4π)∫φ²`, evaluated exactly from the coefficients.
    pub fn a_functional(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let k = (i + 1) as f64;
                0.25 * (k * k + 3.0) * a * a
            })
            .sum()
    }

    /// `(1/2)∫(φ² + φ'²)`, exact from the coefficients.
    pub fn e_functional(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let k = (i + 1) as f64;
                0.5 * PI * (1.0 + k * k) * a * a
            })
            .sum()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Ratio of the largest coefficient in the top eighth of the retained
    /// band to the largest coefficient overall. Small values mean the
    /// profile is resolved on this grid.
    pub fn spectral_tail(&self) -> f64 {
        let k = self.coeffs.len();
        let peak = self.coeffs.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let start = k - (k / 8).max(1);
        self.coeffs[start..].iter().fold(0.0_f64, |m, a| m.max(a.abs())) / peak
    }
}

/// Samples an even profile on the collocation grid.
pub fn synthesize(profile: &WaveProfile) -> Field {
    profile.to_field()
}

/// Recovers the cosine coefficients of an even field.
///
/// The mean and the Nyquist component are discarded. Fails with
/// [`Error::SymmetryViolation`] when the odd part exceeds
/// `tol_sym * max|f|` in the sup norm.
pub fn analyze_even(field: &Field, tol_sym: f64) -> Result<WaveProfile> {
    let v = field.values();
    let n = v.len();
    let odd = (0..n).fold(0.0_f64, |m, j| m.max(0.5 * (v[j] - v[(n - j) % n]).abs()));
    let tol = tol_sym * field.max_abs();
    if odd > tol {
        return Err(Error::SymmetryViolation { odd_norm: odd, tol });
    }
    let half = field.half();
    let coeffs = half[1..].iter().map(|c| 2.0 * c.re).collect();
    WaveProfile::new(field.grid(), coeffs)
}

/// Spectral derivative of the given order. The Nyquist component is dropped,
/// so the result is exact for fields band-limited to the retained modes.
pub fn differentiate(field: &Field, order: u32) -> Field {
    let mut half = field.half();
    for (k, c) in half.iter_mut().enumerate() {
        *c *= Complex64::new(0.0, k as f64).powu(order);
    }
    Field::from_half(field.grid(), &half)
}

/// Trapezoidal rule on the period, spectrally accurate for smooth periodic data.
pub fn quadrature(field: &Field) -> f64 {
    field.grid().spacing() * field.values().iter().sum::<f64>()
}

/// L² inner product on the period.
pub fn inner(f: &Field, g: &Field) -> f64 {
    f.grid().spacing() * f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum::<f64>()
}
