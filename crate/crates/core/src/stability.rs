//! Eigenvalue counts, the 2×2 index matrix and the stability verdict.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::floquet::{
    classification_from_spectrum, floquet_report, weighted_hill_eigenvalues, Classification, FloquetReport,
};
use crate::operators::{
    assemble_hill, assemble_l, assemble_l_pi, assemble_weighted_symmetrized, cosine_similarity, liouville,
    sym_eigen, ComplementSolver, OperatorKind, OperatorMatrix,
};
use crate::spectral::{inner, quadrature, Field};
use crate::wave::{family_scalars, FamilyScalars, WavePoint};

/// Relative threshold for zero eigenvalues.
pub const TOL_ZERO: f64 = 1e-7;
/// Threshold for sign decisions on dE/dc and dA/dc.
pub const TOL_SIGN: f64 = 1e-8;

/// `TOL_ZERO · max(1, max|λ|)`.
pub fn zero_tol(eigenvalues: &[f64]) -> f64 {
    TOL_ZERO * eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()))
}

/// Tolerance for deciding `d_c = 0`.
pub fn fold_tol(c: f64, omega: f64) -> f64 {
    1e-6 * (1.0 + (omega * (c - omega)).abs())
}

/// Eigenvalues of a symmetric operator with negative and zero counts.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub n_neg: usize,
    pub n_zero: usize,
    /// Orthonormal eigenvectors of the zero eigenvalues.
    pub kernel_vectors: Vec<Field>,
    pub operator_kind: OperatorKind,
}

/// Symmetric eigensolve with zero threshold [`zero_tol`].
pub fn spectrum(op: &OperatorMatrix) -> SpectrumReport {
    let (values, vectors) = sym_eigen(&op.entries, op.basis.even_len(op.grid().retained()));
    let tol = zero_tol(&values);
    let n_neg = values.iter().filter(|&&l| l < -tol).count();
    let kernel_vectors: Vec<Field> = values
        .iter()
        .enumerate()
        .filter(|(_, l)| l.abs() <= tol)
        .map(|(i, _)| op.field(&vectors.column(i).into_owned()))
        .collect();
    SpectrumReport { n_zero: kernel_vectors.len(), eigenvalues: values, n_neg, kernel_vectors, operator_kind: op.kind }
}

/// Solutions of `𝓛u = f` on the complement of `φ'` for the right-hand sides
/// that enter the index matrix and its closed forms.
#[derive(Clone, Debug)]
pub struct ComplementSolutions {
    /// `h = 𝓛⁻¹1`.
    pub h: Field,
    /// `χ = 𝓛⁻¹φ`.
    pub chi: Field,
    /// `Φ = 𝓛⁻¹(-φ'')`.
    pub big_phi: Field,
    /// `𝓛⁻¹(φ - φ'')`.
    pub u: Field,
    pub condition: f64,
}

/// Solves the four even problems against `𝓛` deflated by `φ'`.
pub fn complement_solutions(w: &WavePoint, l: &OperatorMatrix) -> Result<ComplementSolutions> {
    let grid = w.grid();
    let dphi = w.phi.derivative(1);
    let solver = ComplementSolver::new(l, &[dphi])?;
    let phi = w.phi.to_field();
    let d2 = w.phi.derivative(2);
    Ok(ComplementSolutions {
        h: solver.solve(&Field::constant(grid, 1.0))?,
        chi: solver.solve(&phi)?,
        big_phi: solver.solve(&d2.scale(-1.0))?,
        u: solver.solve(&phi.sub(&d2))?,
        condition: solver.condition(),
    })
}

/// The symmetric matrix of `⟨𝓛⁻¹vᵢ, vⱼ⟩` for `v = (φ - φ'', 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexMatrix {
    pub entries: [[f64; 2]; 2],
    pub det: f64,
    pub n0: usize,
    pub z0: usize,
    pub p0: usize,
    pub z_inf: usize,
}

impl IndexMatrix {
    /// Builds the matrix and its inertia from the three distinct entries.
    pub fn new(a11: f64, a12: f64, a22: f64) -> IndexMatrix {
        let entries = [[a11, a12], [a12, a22]];
        let det = a11 * a22 - a12 * a12;
        let tr = a11 + a22;
        let disc = ((a11 - a22).powi(2) + 4.0 * a12 * a12).sqrt();
        let eig = [0.5 * (tr - disc), 0.5 * (tr + disc)];
        let norm = (a11 * a11 + 2.0 * a12 * a12 + a22 * a22).sqrt();
        let tol = 1e-8 * norm;
        let n0 = eig.iter().filter(|&&l| l < -tol).count();
        let z0 = eig.iter().filter(|&&l| l.abs() <= tol).count();
        IndexMatrix { entries, det, n0, z0, p0: 2 - n0 - z0, z_inf: 0 }
    }

    /// `⟨𝓛⁻¹1, 1⟩`.
    pub fn inner_l_inv_1_1(&self) -> f64 {
        self.entries[1][1]
    }
}

/// Index matrix from the complement solves. The off-diagonal entry is the
/// average of its two symmetric evaluations.
pub fn index_matrix_from(w: &WavePoint, sols: &ComplementSolutions) -> IndexMatrix {
    let grid = w.grid();
    let one = Field::constant(grid, 1.0);
    let v = w.phi.to_field().sub(&w.phi.derivative(2));
    let a11 = inner(&sols.u, &v);
    let a12 = 0.5 * (inner(&sols.u, &one) + inner(&sols.h, &v));
    let a22 = inner(&sols.h, &one);
    IndexMatrix::new(a11, a12, a22)
}

/// Index matrix of a wave, solving against the supplied `𝓛` matrix.
pub fn index_matrix(w: &WavePoint, l: &OperatorMatrix) -> Result<IndexMatrix> {
    Ok(index_matrix_from(w, &complement_solutions(w, l)?))
}

/// Constrained negative counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstrainedCounts {
    /// `n(𝓛)` on the complement of `{1, φ - φ''}`.
    pub constrained: usize,
    /// `n(𝓛_Π)` predicted from the single constraint `1`.
    pub predicted_n_l_pi: usize,
}

/// `n_L - n0 - z0`, plus the single-constraint prediction of `n(𝓛_Π)`.
pub fn constrained_count(n_l: usize, _z_l: usize, idx: &IndexMatrix) -> Result<ConstrainedCounts> {
    let constrained = n_l
        .checked_sub(idx.n0 + idx.z0)
        .ok_or(Error::NegativeCount { n_l, n0: idx.n0, z0: idx.z0 })?;
    let s = idx.inner_l_inv_1_1();
    let tol = 1e-8 * s.abs().max(f64::MIN_POSITIVE);
    let (n0s, z0s) = if s.abs() <= tol { (0, 1) } else if s < 0.0 { (1, 0) } else { (0, 0) };
    let predicted_n_l_pi =
        n_l.checked_sub(n0s + z0s).ok_or(Error::NegativeCount { n_l, n0: n0s, z0: z0s })?;
    Ok(ConstrainedCounts { constrained, predicted_n_l_pi })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    SpectrallyStable,
    Inconclusive,
    FlaggedFold,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::SpectrallyStable => "spectrally_stable",
            Decision::Inconclusive => "inconclusive",
            Decision::FlaggedFold => "flagged_fold",
        }
    }
}

/// Sufficient condition that produced a stable decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// `dE/dc > 0`.
    DePositive,
    /// `d_c ≠ 0`, `dA/dc > 0` and no negative directions under both constraints.
    DcDa,
    None,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::DePositive => "dE_positive",
            Criterion::DcDa => "dc_dA",
            Criterion::None => "none",
        }
    }
}

/// Numbers that enter the decision, collected from the upstream reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerdictInputs {
    pub c: f64,
    pub omega: f64,
    pub n_l: usize,
    pub z_l: usize,
    pub n_lpi: usize,
    pub z_lpi: usize,
    pub theta: f64,
    pub d_c: f64,
    pub da_dc: f64,
    pub de_dc: f64,
    /// `NaN` when the index matrix could not be formed (fold).
    pub det_a0: f64,
    pub inner_l_inv_1_1: f64,
    pub constrained_count: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub c: f64,
    pub omega: f64,
    pub n_l: usize,
    pub z_l: usize,
    pub n_lpi: usize,
    pub z_lpi: usize,
    pub theta: f64,
    pub d_c: f64,
    pub da_dc: f64,
    pub de_dc: f64,
    pub det_a0: f64,
    pub inner_l_inv_1_1: f64,
    pub decision: Decision,
    pub criterion: Criterion,
    /// Whether the `d_c`/`dA/dc` route holds on its own.
    pub dc_da_holds: bool,
    /// `|det 𝒜(0) + (dE/dc)⟨𝓛⁻¹1,1⟩| / (1 + |det 𝒜(0)|)`.
    pub det_consistency: f64,
}

/// Decision table. A failed sufficient condition never yields "unstable".
pub fn verdict(v: &VerdictInputs) -> StabilityVerdict {
    let fold = v.d_c.abs() <= fold_tol(v.c, v.omega);
    let de_positive = v.de_dc > TOL_SIGN;
    let dc_da_holds = !fold && v.da_dc > TOL_SIGN && v.constrained_count == Some(0);
    let (decision, criterion) = if fold {
        (Decision::FlaggedFold, if de_positive { Criterion::DePositive } else { Criterion::None })
    } else if de_positive {
        (Decision::SpectrallyStable, Criterion::DePositive)
    } else if dc_da_holds {
        (Decision::SpectrallyStable, Criterion::DcDa)
    } else {
        (Decision::Inconclusive, Criterion::None)
    };
    let det_consistency = (v.det_a0 + v.de_dc * v.inner_l_inv_1_1).abs() / (1.0 + v.det_a0.abs());
    StabilityVerdict {
        c: v.c,
        omega: v.omega,
        n_l: v.n_l,
        z_l: v.z_l,
        n_lpi: v.n_lpi,
        z_lpi: v.z_lpi,
        theta: v.theta,
        d_c: v.d_c,
        da_dc: v.da_dc,
        de_dc: v.de_dc,
        det_a0: v.det_a0,
        inner_l_inv_1_1: v.inner_l_inv_1_1,
        decision,
        criterion,
        dc_da_holds,
        det_consistency,
    }
}

/// Residuals of the operator identities satisfied by an exact wave.
/// Entries are relative unless stated otherwise; `NaN` marks checks that
/// could not be evaluated (for instance at a fold).
#[derive(Clone, Debug, Default)]
pub struct IdentityReport {
    /// `‖𝓛φ'‖ / ‖φ'‖`.
    pub l_dphi: f64,
    /// `‖𝓛_Π φ'‖ / ‖φ'‖`.
    pub lpi_dphi: f64,
    /// `𝓛φ = c(φ''-φ) + ωφ - 2A`, sup norm.
    pub l_phi: f64,
    /// `𝓛1 = c-ω-3φ+φ''`, sup norm.
    pub l_one: f64,
    /// `𝓛(ω+2φ-(ω+2c)dφ/dc) = d_c`, sup norm.
    pub l_dc: f64,
    /// `det 𝒜(0) = -(dE/dc)⟨𝓛⁻¹1,1⟩`.
    pub det_a0: f64,
    /// `⟨𝓛⁻¹(φ-φ''),1⟩ = -(dA/dc)⟨𝓛⁻¹1,1⟩`.
    pub entry_a12: f64,
    /// `⟨𝓛⁻¹1,1⟩ = 2πω/d_c`.
    pub inner_dc: f64,
    /// `∫h` against `-2y₁'(2π)(c-φ(0))/(2c+ω)`.
    pub int_h_closed: f64,
    /// `∫y₁` against `(c-φ(0)) h(0) y₁'(2π)`.
    pub int_y1: f64,
    /// `χ` against its closed form, after removing the kernel component.
    pub chi: f64,
    /// `Φ` against its closed form, after removing the kernel component.
    pub big_phi: f64,
    /// `𝓛⁻¹(φ-φ'')` against its closed form.
    pub u_closed: f64,
    /// `⟨𝓛_Π⁻¹(φ-φ''), φ-φ''⟩ = -dE/dc`.
    pub vakhitov_kolokolov: f64,
    /// `ℳ φ₂ = 0`, sup norm relative to `‖φ₂‖∞`.
    pub hill_phi2: f64,
    /// Cosine similarity of the zero eigenvector of `SℳS` with `φ'`.
    pub sms_kernel_alignment: f64,
    /// Cosine similarity of the kernel of `𝓛_Π` with `φ'`.
    pub lpi_kernel_alignment: f64,
}

/// Everything computed for one wave.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub scalars: FamilyScalars,
    pub spectrum_l: SpectrumReport,
    pub spectrum_lpi: SpectrumReport,
    pub spectrum_sms: SpectrumReport,
    pub hill_weighted: Vec<f64>,
    pub floquet: FloquetReport,
    pub hill_classification: Option<Classification>,
    pub index: Option<IndexMatrix>,
    pub counts: Option<ConstrainedCounts>,
    pub solutions: Option<ComplementSolutions>,
    /// `∫h`.
    pub int_h: f64,
    /// `h(0)`.
    pub h0: f64,
    /// `⟨𝓛_Π⁻¹(φ-φ''), φ-φ''⟩`.
    pub vk: f64,
    pub identities: IdentityReport,
    pub verdict: StabilityVerdict,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn sup_dist(a: &Field, b: &Field) -> f64 {
    a.sub(b).max_abs() / b.max_abs().max(1.0)
}

/// Removes the `φ'` component of a field.
fn project_off(f: &Field, k: &Field) -> Field {
    f.sub(&k.scale(inner(f, k) / inner(k, k)))
}

/// Runs the whole per-point pipeline.
pub fn analyze(w: &WavePoint, tol: f64, theta_scale: Option<f64>) -> Result<Analysis> {
    let grid = w.grid();
    let (c, omega, a) = (w.c, w.omega, w.a_const);
    let scalars = family_scalars(w, tol)?;
    let l = assemble_l(w)?;
    let l_pi = assemble_l_pi(w)?;
    let ld = liouville(w)?;
    let hill = assemble_hill(&ld);
    let sms = assemble_weighted_symmetrized(w, &hill)?;
    let spectrum_l = spectrum(&l);
    let spectrum_lpi = spectrum(&l_pi);
    let spectrum_sms = spectrum(&sms);
    let hill_weighted = weighted_hill_eigenvalues(w)?;
    let floquet = floquet_report(w, theta_scale)?;
    let hill_classification = classification_from_spectrum(&hill_weighted);

    let phi = w.phi.to_field();
    let dphi = w.phi.derivative(1);
    let d2 = w.phi.derivative(2);
    let one = Field::constant(grid, 1.0);
    let v = phi.sub(&d2);
    let mut id = IdentityReport {
        l_dphi: l.apply(&dphi).l2_norm() / dphi.l2_norm(),
        lpi_dphi: l_pi.apply(&dphi).l2_norm() / dphi.l2_norm(),
        l_phi: sup_dist(&l.apply(&phi), &d2.sub(&phi).scale(c).add(&phi.scale(omega)).map(|x| x - 2.0 * a)),
        l_one: sup_dist(&l.apply(&one), &phi.scale(-3.0).add(&d2).map(|x| x + c - omega)),
        ..Default::default()
    };
    let rhs4 = phi.scale(2.0).sub(&scalars.dphi_dc.to_field().scale(omega + 2.0 * c)).map(|x| x + omega);
    id.l_dc = sup_dist(&l.apply(&rhs4), &Field::constant(grid, scalars.d_c));

    // ℳ annihilates (c-φ)^{1/2} φ' up to a constant factor.
    let phi2 = ld.half_power.map(|g| 1.0 / g).mul(&dphi);
    id.hill_phi2 = hill.apply(&phi2).max_abs() / phi2.max_abs();
    id.sms_kernel_alignment = match spectrum_sms.kernel_vectors.as_slice() {
        [k] => cosine_similarity(k, &dphi).abs(),
        _ => f64::NAN,
    };
    id.lpi_kernel_alignment = match spectrum_lpi.kernel_vectors.as_slice() {
        [k] => cosine_similarity(k, &dphi).abs(),
        _ => f64::NAN,
    };

    let vk = ComplementSolver::new(&l_pi, std::slice::from_ref(&dphi))
        .and_then(|s| s.solve(&v))
        .map(|u| inner(&u, &v))
        .unwrap_or(f64::NAN);
    id.vakhitov_kolokolov = rel(vk, -scalars.de_dc);

    let [phi0, _, _] = w.phi.eval(0.0);
    let (solutions, index, counts, int_h, h0) = match complement_solutions(w, &l) {
        Ok(s) => {
            let idx = index_matrix_from(w, &s);
            let counts = constrained_count(spectrum_l.n_neg, spectrum_l.n_zero, &idx)?;
            let int_h = quadrature(&s.h);
            let h0 = s.h.values()[0];
            let k = (c * (c - omega) + 2.0 * a) / (2.0 * c + omega);
            let chi_closed = phi.map(|x| (x - c) / (2.0 * c + omega)).add(&s.h.scale(k));
            id.chi = sup_dist(&project_off(&s.chi, &dphi), &project_off(&chi_closed, &dphi));
            let kp = -((c - omega).powi(2) + 6.0 * a) / (2.0 * c + omega);
            let big_phi_closed = phi.map(|x| (c - omega - 3.0 * x) / (2.0 * c + omega)).add(&s.h.scale(kp));
            id.big_phi = sup_dist(&project_off(&s.big_phi, &dphi), &project_off(&big_phi_closed, &dphi));
            let ku = (c * omega - omega * omega - 4.0 * a) / (2.0 * c + omega);
            let u_closed = phi.map(|x| -(omega + 2.0 * x) / (2.0 * c + omega)).add(&s.h.scale(ku));
            id.u_closed = sup_dist(&project_off(&s.u, &dphi), &project_off(&u_closed, &dphi));
            id.det_a0 = rel(idx.det, -scalars.de_dc * idx.inner_l_inv_1_1());
            id.entry_a12 = rel(idx.entries[0][1], -scalars.da_dc * idx.inner_l_inv_1_1());
            id.inner_dc = rel(idx.inner_l_inv_1_1(), 2.0 * PI * omega / scalars.d_c);
            id.int_h_closed = rel(int_h, -2.0 * floquet.y1_deriv_2pi * (c - phi0) / (2.0 * c + omega));
            id.int_y1 = rel(floquet.y1_integral, (c - phi0) * h0 * floquet.y1_deriv_2pi);
            (Some(s), Some(idx), Some(counts), int_h, h0)
        }
        Err(Error::NearSingular { condition }) => {
            log::warn!("index matrix unavailable at c = {c}: condition number {condition:.3e}");
            id.det_a0 = f64::NAN;
            id.entry_a12 = f64::NAN;
            id.inner_dc = f64::NAN;
            id.int_h_closed = f64::NAN;
            id.int_y1 = f64::NAN;
            id.chi = f64::NAN;
            id.big_phi = f64::NAN;
            id.u_closed = f64::NAN;
            (None, None, None, f64::NAN, f64::NAN)
        }
        Err(e) => return Err(e),
    };

    let inputs = VerdictInputs {
        c,
        omega,
        n_l: spectrum_l.n_neg,
        z_l: spectrum_l.n_zero,
        n_lpi: spectrum_lpi.n_neg,
        z_lpi: spectrum_lpi.n_zero,
        theta: floquet.theta,
        d_c: scalars.d_c,
        da_dc: scalars.da_dc,
        de_dc: scalars.de_dc,
        det_a0: index.map_or(f64::NAN, |i| i.det),
        inner_l_inv_1_1: index.map_or(f64::NAN, |i| i.inner_l_inv_1_1()),
        constrained_count: counts.map(|c| c.constrained),
    };
    Ok(Analysis {
        verdict: verdict(&inputs),
        scalars,
        spectrum_l,
        spectrum_lpi,
        spectrum_sms,
        hill_weighted,
        floquet,
        hill_classification,
        index,
        counts,
        solutions,
        int_h,
        h0,
        vk,
        identities: id,
    })
}
