//! Linearized operators around a wave as symmetric Galerkin matrices.
//!
//! Every operator here has the form `v ↦ -(p v')' + q v` with even, 2π-periodic
//! coefficients `p`, `q`. In the orthonormal trigonometric basis
//!
//! ```text
//! 1/√(2π),  cos(kx)/√π,  sin(kx)/√π      (k = 1..K)
//! ```
//!
//! the matrix entries only involve the Fourier coefficients `p̂_m`, `q̂_m`
//! (with `g = Σ ĝ_m e^{imx}`), so assembly is O(K²) and the result is exactly
//! symmetric and block diagonal by parity.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{even_coefficients, inner, Field, Grid, WaveProfile};
use crate::wave::WavePoint;

/// Condition number above which a deflated operator is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative tolerance for the kernel-orthogonality precondition.
pub const SOLVABILITY_TOL: f64 = 1e-8;

/// Relative residual accepted after a complement solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;

/// Oversampling factor for Fourier data of non-polynomial coefficients.
const FINE_FACTOR: usize = 8;

/// Which operator a matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// `𝓛 = -∂(c-φ)∂ + (c-ω-3φ+φ'')`.
    L,
    /// `𝓛` compressed to zero-mean functions.
    LPi,
    /// `ℳ = -∂² + Q`.
    Hill,
    /// `S ℳ S` with `S = (c-φ)^{1/2}`.
    WeightedSymmetrized,
    /// Multiplication by an even function.
    Multiplication,
}

/// Coordinate space of an operator matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Constant, cosines and sines; dimension `2K + 1`.
    Full,
    /// Cosines and sines; dimension `2K`.
    ZeroMean,
    /// Cosines only; dimension `K`.
    EvenZeroMean,
}

impl Basis {
    pub fn dim(self, k: usize) -> usize {
        match self {
            Basis::Full => 2 * k + 1,
            Basis::ZeroMean => 2 * k,
            Basis::EvenZeroMean => k,
        }
    }

    /// Number of leading coordinates belonging to even functions.
    pub fn even_len(self, k: usize) -> usize {
        match self {
            Basis::Full => k + 1,
            Basis::ZeroMean | Basis::EvenZeroMean => k,
        }
    }

    fn const_index(self) -> Option<usize> {
        match self {
            Basis::Full => Some(0),
            _ => None,
        }
    }

    fn cos_index(self, j: usize) -> usize {
        match self {
            Basis::Full => j,
            _ => j - 1,
        }
    }

    fn sin_index(self, j: usize, k: usize) -> Option<usize> {
        match self {
            Basis::Full => Some(k + j),
            Basis::ZeroMean => Some(k - 1 + j),
            Basis::EvenZeroMean => None,
        }
    }

    /// Coordinates of a field (orthogonal projection onto the basis span).
    pub fn coords(self, field: &Field) -> DVector<f64> {
        let grid = field.grid();
        let k = grid.retained();
        let half = field.half();
        let mut v = DVector::zeros(self.dim(k));
        if let Some(i) = self.const_index() {
            v[i] = half[0].re * (2.0 * PI).sqrt();
        }
        let s = PI.sqrt();
        for j in 1..=k {
            v[self.cos_index(j)] = 2.0 * half[j].re * s;
            if let Some(i) = self.sin_index(j, k) {
                v[i] = -2.0 * half[j].im * s;
            }
        }
        v
    }

    /// Coordinates of an even profile.
    pub fn profile_coords(self, profile: &WaveProfile) -> DVector<f64> {
        let k = profile.grid().retained();
        let mut v = DVector::zeros(self.dim(k));
        for (i, &a) in profile.coeffs().iter().enumerate() {
            v[self.cos_index(i + 1)] = a * PI.sqrt();
        }
        v
    }

    /// Field with the given coordinates.
    pub fn field(self, grid: &Arc<Grid>, v: &DVector<f64>) -> Field {
        use rustfft::num_complex::Complex64;
        let k = grid.retained();
        let mut half = vec![Complex64::new(0.0, 0.0); k + 1];
        if let Some(i) = self.const_index() {
            half[0].re = v[i] / (2.0 * PI).sqrt();
        }
        let s = PI.sqrt();
        for j in 1..=k {
            let a = v[self.cos_index(j)] / s;
            let b = self.sin_index(j, k).map_or(0.0, |i| v[i] / s);
            half[j] = Complex64::new(0.5 * a, -0.5 * b);
        }
        Field::from_half(grid, &half)
    }
}

/// Dense symmetric matrix of an operator in a trigonometric basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub entries: DMatrix<f64>,
    pub kind: OperatorKind,
    pub basis: Basis,
    grid: Arc<Grid>,
}

impl OperatorMatrix {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn coords(&self, field: &Field) -> DVector<f64> {
        self.basis.coords(field)
    }

    pub fn field(&self, v: &DVector<f64>) -> Field {
        self.basis.field(&self.grid, v)
    }

    /// Applies the operator to the projection of `field` onto the basis.
    pub fn apply(&self, field: &Field) -> Field {
        self.field(&(&self.entries * self.coords(field)))
    }

    /// `max|M - Mᵀ| / max|M|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.entries.amax().max(f64::MIN_POSITIVE);
        (&self.entries - self.entries.transpose()).amax() / scale
    }
}

pub(crate) fn split_parity(m: &DMatrix<f64>, split: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if split == 0 || split >= n {
        return None;
    }
    let off = m.view((0, split), (split, n - split));
    if off.iter().any(|&x| x != 0.0) {
        return None;
    }
    let off_t = m.view((split, 0), (n - split, split));
    if off_t.iter().any(|&x| x != 0.0) {
        return None;
    }
    Some((
        m.view((0, 0), (split, split)).into_owned(),
        m.view((split, split), (n - split, n - split)).into_owned(),
    ))
}

/// Symmetric eigen-decomposition exploiting parity blocks. Returns eigenvalues
/// in ascending order and the matching eigenvectors as columns.
pub(crate) fn sym_eigen(m: &DMatrix<f64>, split: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(n);
    match split_parity(m, split) {
        Some((even, odd)) => {
            let e = even.symmetric_eigen();
            for (i, &l) in e.eigenvalues.iter().enumerate() {
                let mut v = DVector::zeros(n);
                v.rows_mut(0, split).copy_from(&e.eigenvectors.column(i));
                pairs.push((l, v));
            }
            let o = odd.symmetric_eigen();
            for (i, &l) in o.eigenvalues.iter().enumerate() {
                let mut v = DVector::zeros(n);
                v.rows_mut(split, n - split).copy_from(&o.eigenvectors.column(i));
                pairs.push((l, v));
            }
        }
        None => {
            let e = m.clone().symmetric_eigen();
            for (i, &l) in e.eigenvalues.iter().enumerate() {
                pairs.push((l, e.eigenvectors.column(i).into_owned()));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    (values, vectors)
}

/// Galerkin matrix of `-(p v')' + q v` from the Fourier coefficients of the
/// even functions `p` and `q`. Missing high coefficients are treated as zero.
pub(crate) fn sturm_liouville(p_hat: &[f64], q_hat: &[f64], k: usize, basis: Basis) -> DMatrix<f64> {
    let at = |c: &[f64], m: usize| c.get(m).copied().unwrap_or(0.0);
    let n = basis.dim(k);
    let mut m = DMatrix::zeros(n, n);
    if let Some(i0) = basis.const_index() {
        m[(i0, i0)] = at(q_hat, 0);
        for j in 1..=k {
            let v = std::f64::consts::SQRT_2 * at(q_hat, j);
            let cj = basis.cos_index(j);
            m[(i0, cj)] = v;
            m[(cj, i0)] = v;
        }
    }
    for j in 1..=k {
        for l in 1..=k {
            let jl = (j * l) as f64;
            let d = j.abs_diff(l);
            let s = j + l;
            let (pd, ps, qd, qs) = (at(p_hat, d), at(p_hat, s), at(q_hat, d), at(q_hat, s));
            m[(basis.cos_index(j), basis.cos_index(l))] = jl * (pd - ps) + qd + qs;
            if let (Some(a), Some(b)) = (basis.sin_index(j, k), basis.sin_index(l, k)) {
                m[(a, b)] = jl * (pd + ps) + qd - qs;
            }
        }
    }
    m
}

/// Fourier coefficients `ĝ_m` of a band-limited even function given by a
/// constant and cosine coefficients.
fn band_limited_hat(constant: f64, cos: impl Iterator<Item = f64>) -> Vec<f64> {
    std::iter::once(constant).chain(cos.map(|a| 0.5 * a)).collect()
}

/// Coefficients `(p̂, q̂)` of `𝓛` at a wave.
pub(crate) fn l_coefficients(phi: &WaveProfile, c: f64, omega: f64) -> (Vec<f64>, Vec<f64>) {
    let p = band_limited_hat(c, phi.coeffs().iter().map(|a| -a));
    let q = band_limited_hat(
        c - omega,
        phi.coeffs().iter().enumerate().map(|(i, a)| {
            let k = (i + 1) as f64;
            -(3.0 + k * k) * a
        }),
    );
    (p, q)
}

fn check_gap(w: &WavePoint) -> Result<()> {
    if w.min_gap <= 0.0 {
        return Err(Error::GapViolation { c: w.c, min_gap: w.min_gap });
    }
    Ok(())
}

fn assemble_l_in(w: &WavePoint, basis: Basis, kind: OperatorKind) -> Result<OperatorMatrix> {
    check_gap(w)?;
    let grid = w.phi.grid();
    let (p, q) = l_coefficients(&w.phi, w.c, w.omega);
    Ok(OperatorMatrix {
        entries: sturm_liouville(&p, &q, grid.retained(), basis),
        kind,
        basis,
        grid: grid.clone(),
    })
}

/// `𝓛` on the full periodic space.
pub fn assemble_l(w: &WavePoint) -> Result<OperatorMatrix> {
    assemble_l_in(w, Basis::Full, OperatorKind::L)
}

/// `𝓛_Π = P𝓛P` on zero-mean functions. The two nonlocal rank-one terms of
/// the mean-zero linearization only add constants, which `P` removes.
pub fn assemble_l_pi(w: &WavePoint) -> Result<OperatorMatrix> {
    assemble_l_in(w, Basis::ZeroMean, OperatorKind::LPi)
}

/// `𝓛` restricted to even zero-mean functions (the Newton Jacobian).
pub fn assemble_l_even(w: &WavePoint) -> Result<OperatorMatrix> {
    assemble_l_in(w, Basis::EvenZeroMean, OperatorKind::LPi)
}

/// Data of the Liouville transform `v = w ((c-φ(0))/(c-φ))^{1/2}`.
#[derive(Clone, Debug)]
pub struct LiouvilleData {
    /// `D(x) = ln((c-φ(x))/(c-φ(0)))`.
    pub d: Field,
    /// Hill potential `Q`.
    pub q: Field,
    /// `(c-φ)^{-1}`.
    pub weight: Field,
    /// `((c-φ(0))/(c-φ))^{1/2}`.
    pub half_power: Field,
    c: f64,
    phi: WaveProfile,
    q_hat: Vec<f64>,
}

impl LiouvilleData {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn profile(&self) -> &WaveProfile {
        &self.phi
    }

    /// `D` at an arbitrary point.
    pub fn d_at(&self, x: f64) -> f64 {
        let phi0 = self.phi.eval(0.0)[0];
        ((self.c - self.phi.eval(x)[0]) / (self.c - phi0)).ln()
    }
}

/// Hill potential at one point from `φ, φ', φ''`.
pub fn hill_potential(c: f64, omega: f64, [v, d1, d2]: [f64; 3]) -> f64 {
    let p = c - v;
    (c - omega - 3.0 * v) / p + d2 / (2.0 * p) - 0.25 * (d1 / p).powi(2)
}

/// Fourier coefficients `ĝ_0..ĝ_{2K}` of `f(φ, φ', φ'')`, sampled on an
/// oversampled grid.
fn fine_coefficients(phi: &WaveProfile, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    let grid = phi.grid();
    let n = FINE_FACTOR * grid.n_modes();
    let (v, d1, d2) = (phi.uniform(0, n), phi.uniform(1, n), phi.uniform(2, n));
    let samples: Vec<f64> = (0..n).map(|j| f([v[j], d1[j], d2[j]])).collect();
    even_coefficients(&samples, 2 * grid.retained())
}

/// Liouville transform data of a wave.
pub fn liouville(w: &WavePoint) -> Result<LiouvilleData> {
    check_gap(w)?;
    let grid = w.phi.grid();
    let phi = w.phi.to_field();
    let d1 = w.phi.derivative(1);
    let d2 = w.phi.derivative(2);
    let (c, omega) = (w.c, w.omega);
    let gap0 = c - w.phi.eval(0.0)[0];
    let vals = |f: &dyn Fn(usize) -> f64| {
        Field::new(grid, (0..grid.len()).map(f).collect()).expect("grid length")
    };
    let pv = phi.values();
    Ok(LiouvilleData {
        d: vals(&|j| ((c - pv[j]) / gap0).ln()),
        q: vals(&|j| hill_potential(c, omega, [pv[j], d1.values()[j], d2.values()[j]])),
        weight: vals(&|j| 1.0 / (c - pv[j])),
        half_power: vals(&|j| (gap0 / (c - pv[j])).sqrt()),
        c,
        q_hat: fine_coefficients(&w.phi, |x| hill_potential(c, omega, x)),
        phi: w.phi.clone(),
    })
}

/// `ℳ = -∂² + Q` on the full periodic space.
pub fn assemble_hill(ld: &LiouvilleData) -> OperatorMatrix {
    let grid = ld.phi.grid();
    OperatorMatrix {
        entries: sturm_liouville(&[1.0], &ld.q_hat, grid.retained(), Basis::Full),
        kind: OperatorKind::Hill,
        basis: Basis::Full,
        grid: grid.clone(),
    }
}

/// Galerkin matrix of multiplication by `f(c - φ)` on the full space.
pub fn multiplication(w: &WavePoint, f: impl Fn(f64) -> f64) -> Result<OperatorMatrix> {
    check_gap(w)?;
    let c = w.c;
    let hat = fine_coefficients(&w.phi, |[v, _, _]| f(c - v));
    let grid = w.phi.grid();
    Ok(OperatorMatrix {
        entries: sturm_liouville(&[], &hat, grid.retained(), Basis::Full),
        kind: OperatorKind::Multiplication,
        basis: Basis::Full,
        grid: grid.clone(),
    })
}

/// `S ℳ S` with `S` the multiplication by `(c-φ)^{1/2}`.
pub fn assemble_weighted_symmetrized(w: &WavePoint, hill: &OperatorMatrix) -> Result<OperatorMatrix> {
    if hill.kind != OperatorKind::Hill || hill.basis != Basis::Full {
        return Err(Error::Domain("expected a Hill operator on the full basis".into()));
    }
    let s = multiplication(w, f64::sqrt)?;
    let m = &s.entries * &hill.entries * &s.entries;
    Ok(OperatorMatrix {
        entries: (&m + m.transpose()) * 0.5,
        kind: OperatorKind::WeightedSymmetrized,
        basis: Basis::Full,
        grid: hill.grid.clone(),
    })
}

/// Reusable solver for `L x = b` on the orthogonal complement of a kernel.
///
/// The deflated matrix `PLP + σ Σ k kᵀ` is LU-factorized once; its
/// condition number comes from a symmetric eigenvalue computation.
pub struct ComplementSolver<'a> {
    op: &'a OperatorMatrix,
    kernel: Vec<DVector<f64>>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl<'a> ComplementSolver<'a> {
    pub fn new(op: &'a OperatorMatrix, kernel: &[Field]) -> Result<Self> {
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for f in kernel {
            let mut v = op.coords(f);
            for b in &basis {
                let proj = b.dot(&v);
                v.axpy(-proj, b, 1.0);
            }
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::Domain("kernel vector vanishes in this basis".into()));
            }
            basis.push(v / norm);
        }
        let n = op.dim();
        let mut proj = DMatrix::<f64>::identity(n, n);
        for b in &basis {
            proj -= b * b.transpose();
        }
        let sigma = op.entries.diagonal().amax().max(1.0);
        let mut deflated = &proj * &op.entries * &proj;
        for b in &basis {
            deflated += b * b.transpose() * sigma;
        }
        deflated = (&deflated + deflated.transpose()) * 0.5;
        let split = op.basis.even_len(op.grid.retained());
        let eig = match split_parity(&deflated, split) {
            Some((e, o)) => {
                let mut v: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
                v.extend(o.symmetric_eigenvalues().iter());
                v
            }
            None => deflated.symmetric_eigenvalues().iter().copied().collect(),
        };
        let max = eig.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::NearSingular { condition });
        }
        Ok(ComplementSolver { op, kernel: basis, lu: deflated.lu(), condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves in coordinates; the result is orthogonal to the kernel.
    pub fn solve_coords(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let norm = rhs.norm();
        let mut b = rhs.clone();
        for k in &self.kernel {
            let proj = k.dot(rhs);
            if proj.abs() > SOLVABILITY_TOL * norm {
                return Err(Error::SolvabilityViolation { projection: proj / norm });
            }
            b.axpy(-proj, k, 1.0);
        }
        let mut x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::LinearAlgebra("singular deflated matrix".into()))?;
        for k in &self.kernel {
            let proj = k.dot(&x);
            x.axpy(-proj, k, 1.0);
        }
        let residual = (&self.op.entries * &x - &b).norm();
        if residual > SOLVE_RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::InaccurateSolve { residual: residual / norm });
        }
        Ok(x)
    }

    pub fn solve(&self, rhs: &Field) -> Result<Field> {
        Ok(self.op.field(&self.solve_coords(&self.op.coords(rhs))?))
    }
}

/// Minimum-norm solution of `L x = rhs` orthogonal to the given kernel.
pub fn solve_on_complement(op: &OperatorMatrix, rhs: &Field, kernel: &[Field]) -> Result<Field> {
    ComplementSolver::new(op, kernel)?.solve(rhs)
}

/// L² inner product of two coordinate vectors expressed as fields.
pub fn coord_inner(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b)
}

/// Sup-norm of `L f - g` relative to `max(1, |g|∞)`.
pub fn identity_residual(op: &OperatorMatrix, f: &Field, g: &Field) -> f64 {
    let lf = op.apply(f);
    lf.sub(g).max_abs() / g.max_abs().max(1.0)
}

/// Cosine similarity of two fields in L².
pub fn cosine_similarity(a: &Field, b: &Field) -> f64 {
    inner(a, b) / (a.l2_norm() * b.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use approx::assert_abs_diff_eq;

    fn trivial(c: f64, omega: f64) -> WavePoint {
        WavePoint::trivial(&Grid::new(16).unwrap(), c, omega).unwrap()
    }

    #[test]
    fn coords_roundtrip() {
        let g = Grid::new(16).unwrap();
        let f = Field::from_fn(&g, |x| 0.3 + x.cos() - 2.0 * (3.0 * x).sin());
        for basis in [Basis::Full, Basis::ZeroMean] {
            let v = basis.coords(&f);
            let back = basis.field(&g, &v);
            let expect = if basis == Basis::Full { 0.0 } else { 0.3 };
            for (a, b) in f.values().iter().zip(back.values()) {
                assert_abs_diff_eq!(a - b, expect, epsilon = 1e-13);
            }
            assert_abs_diff_eq!(v.norm(), f.sub(&Field::constant(&g, expect)).l2_norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn trivial_l_is_diagonal() {
        let w = trivial(1.0, 1.0);
        let l = assemble_l(&w).unwrap();
        let k = w.phi.grid().retained();
        assert_eq!(l.dim(), 2 * k + 1);
        assert_abs_diff_eq!(l.entries[(0, 0)], 0.0);
        for j in 1..=k {
            assert_abs_diff_eq!(l.entries[(j, j)], (j * j) as f64, epsilon = 1e-14);
            assert_abs_diff_eq!(l.entries[(k + j, k + j)], (j * j) as f64, epsilon = 1e-14);
        }
        assert_eq!(l.symmetry_defect(), 0.0);
    }

    #[test]
    fn constant_potential_hill() {
        let w = trivial(2.0, 1.0);
        let ld = liouville(&w).unwrap();
        assert!(ld.d.max_abs() < 1e-15);
        for &q in ld.q.values() {
            assert_abs_diff_eq!(q, 0.5, epsilon = 1e-15);
        }
        let m = assemble_hill(&ld);
        let (vals, _) = sym_eigen(&m.entries, 16);
        assert_abs_diff_eq!(vals[0], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(vals[1], 1.5, epsilon = 1e-13);
        let sms = assemble_weighted_symmetrized(&w, &m).unwrap();
        assert!((&sms.entries - &m.entries * 2.0).amax() < 1e-12);
    }

    #[test]
    fn multiplication_of_cos_field() {
        let g = Grid::new(16).unwrap();
        let p = WaveProfile::new(&g, vec![0.2, 0.05]).unwrap();
        let w = WavePoint::from_profile(p.clone(), 1.0, 1.0).unwrap();
        let m = multiplication(&w, |s| s).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * x).sin() + 0.5 * x.cos());
        let got = m.apply(&f);
        let gap = Field::constant(&g, 1.0).sub(&p.to_field());
        let expect = gap.mul(&f);
        for (a, b) in got.values().iter().zip(expect.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn solve_requires_orthogonal_rhs() {
        let w = trivial(1.0, 1.0);
        let l = assemble_l(&w).unwrap();
        let g = w.phi.grid().clone();
        let one = Field::constant(&g, 1.0);
        assert!(matches!(
            solve_on_complement(&l, &one, std::slice::from_ref(&one)),
            Err(Error::SolvabilityViolation { .. })
        ));
        let rhs = Field::from_fn(&g, |x| (2.0 * x).cos());
        let sol = solve_on_complement(&l, &rhs, &[one]).unwrap();
        for (x, v) in g.nodes().iter().zip(sol.values()) {
            assert_abs_diff_eq!(*v, (2.0 * x).cos() / 4.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn singular_deflation_detected() {
        let w = trivial(1.0, 1.0);
        let l = assemble_l(&w).unwrap();
        let g = w.phi.grid().clone();
        let rhs = Field::from_fn(&g, |x| (2.0 * x).cos());
        assert!(matches!(solve_on_complement(&l, &rhs, &[]), Err(Error::NearSingular { .. })));
    }
}
