//! Even zero-mean periodic traveling waves and their continuation in the speed.
//!
//! A wave with speed `c` solves
//!
//! ```text
//! -(c-φ)φ'' + (c-ω)φ - (3/2)φ² + (1/2)φ'² + A = 0,
//! A = (1/4π)∫φ'² + (3/4π)∫φ²,
//! ```
//!
//! where the value of `A` is the one compatible with a zero-mean profile.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::{l_coefficients, sturm_liouville, Basis};
use crate::spectral::{Field, Grid, WaveProfile};

/// Default Newton tolerance on the sup norm of the residual.
pub const NEWTON_TOL: f64 = 1e-12;

/// Newton iteration cap.
pub const MAX_ITER: usize = 50;

/// Largest Stokes amplitude trusted as a raw seed, relative to ω.
pub const A_MAX_FACTOR: f64 = 0.1;

/// Relative spectral tail beyond which a point counts as unresolved.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Step in c for the finite-difference derivatives.
pub const FD_DELTA: f64 = 1e-4;

/// Norm below which an iterate is treated as the trivial solution.
const TRIVIAL_NORM: f64 = 1e-12;

/// Number of step halvings tolerated during continuation.
const MAX_HALVINGS: u32 = 8;

/// A converged (or seeded) traveling wave.
#[derive(Clone, Debug)]
pub struct WavePoint {
    pub phi: WaveProfile,
    pub c: f64,
    pub omega: f64,
    /// Integration constant `A[φ]`.
    pub a_const: f64,
    /// Sup norm of the dealiased residual on the collocation grid.
    pub residual_norm: f64,
    /// `min(c - φ)` over the padded grid.
    pub min_gap: f64,
    /// Relative size of the highest retained modes.
    pub spectral_tail: f64,
    pub iterations: usize,
    /// False for raw seeds that were never refined.
    pub converged: bool,
}

impl WavePoint {
    /// Wraps a profile with its diagnostics, without solving anything.
    pub fn from_profile(phi: WaveProfile, c: f64, omega: f64) -> Result<WavePoint> {
        check_params(c, omega)?;
        let min_gap = min_gap(&phi, c);
        let residual_norm = if min_gap > 0.0 { residual(&phi, c, omega)?.max_abs() } else { f64::NAN };
        Ok(WavePoint {
            a_const: phi.a_functional(),
            spectral_tail: phi.spectral_tail(),
            phi,
            c,
            omega,
            residual_norm,
            min_gap,
            iterations: 0,
            converged: false,
        })
    }

    /// The constant solution `φ = 0`, useful as a reference state.
    pub fn trivial(grid: &Arc<Grid>, c: f64, omega: f64) -> Result<WavePoint> {
        let mut w = WavePoint::from_profile(WaveProfile::zero(grid), c, omega)?;
        w.converged = true;
        Ok(w)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.phi.grid()
    }

    pub fn conserved(&self) -> ConservedTriple {
        conserved(&self.phi, self.omega)
    }

    /// `max φ`.
    pub fn amplitude(&self) -> f64 {
        self.phi.to_field().values().iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// Mass, momentum and energy functionals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedTriple {
    /// `∫u`.
    pub m: f64,
    /// `(1/2)∫(u² + u_x²)`.
    pub e: f64,
    /// `(1/2)∫(u³ + u u_x² + ω u²)`.
    pub f: f64,
}

impl ConservedTriple {
    /// Largest relative change of the three quantities.
    pub fn drift(&self, reference: &ConservedTriple) -> [f64; 3] {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        [
            (self.m - reference.m).abs() / reference.m.abs().max(1.0),
            rel(self.e, reference.e),
            rel(self.f, reference.f),
        ]
    }
}

fn check_params(c: f64, omega: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    if !(c > 0.5 * omega) || !c.is_finite() {
        return Err(Error::Domain(format!("wave speed c = {c} must exceed omega/2 = {}", 0.5 * omega)));
    }
    Ok(())
}

fn min_gap(phi: &WaveProfile, c: f64) -> f64 {
    phi.padded(0).iter().fold(f64::INFINITY, |m, &v| m.min(c - v))
}

/// Stokes speed `c(a) = ω/2 + 3a²/(2ω)`.
pub fn stokes_speed(a: f64, omega: f64) -> f64 {
    0.5 * omega + 1.5 * a * a / omega
}

/// Stokes amplitude `a(c) = sqrt(2ω(c - ω/2)/3)`.
pub fn stokes_amplitude(c: f64, omega: f64) -> f64 {
    (2.0 * omega * (c - 0.5 * omega) / 3.0).max(0.0).sqrt()
}

/// Two-mode small-amplitude profile `a cos x + (a²/ω) cos 2x` at its Stokes speed.
pub fn stokes_seed(grid: &Arc<Grid>, a: f64, omega: f64) -> Result<WavePoint> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let a_max = A_MAX_FACTOR * omega;
    if !(0.0..=a_max).contains(&a) {
        return Err(Error::Domain(format!("seed amplitude {a} outside [0, {a_max}]")));
    }
    let phi = WaveProfile::new(grid, vec![a, a * a / omega])?;
    let c = stokes_speed(a, omega);
    if a == 0.0 {
        // The bifurcation point itself; c = ω/2 is outside the open family.
        return Ok(WavePoint {
            phi,
            c,
            omega,
            a_const: 0.0,
            residual_norm: 0.0,
            min_gap: c,
            spectral_tail: 0.0,
            iterations: 0,
            converged: false,
        });
    }
    WavePoint::from_profile(phi, c, omega)
}

/// Pointwise residual on the padded grid.
fn padded_residual(phi: &WaveProfile, c: f64, omega: f64) -> Vec<f64> {
    let a = phi.a_functional();
    let (v, d1, d2) = (phi.padded(0), phi.padded(1), phi.padded(2));
    (0..v.len())
        .map(|j| -(c - v[j]) * d2[j] + (c - omega) * v[j] - 1.5 * v[j] * v[j] + 0.5 * d1[j] * d1[j] + a)
        .collect()
}

/// Dealiased residual of the wave equation on the collocation grid.
pub fn residual(phi: &WaveProfile, c: f64, omega: f64) -> Result<Field> {
    let gap = min_gap(phi, c);
    if gap <= 0.0 {
        return Err(Error::GapViolation { c, min_gap: gap });
    }
    let grid = phi.grid();
    let half = grid.project_padded(&padded_residual(phi, c, omega));
    Ok(Field::from_half(grid, &half))
}

/// Cosine coefficients of the dealiased residual and its sup norm.
fn galerkin_residual(phi: &WaveProfile, c: f64, omega: f64) -> (DVector<f64>, f64) {
    let grid = phi.grid();
    let half = grid.project_padded(&padded_residual(phi, c, omega));
    let r = DVector::from_iterator(grid.retained(), half[1..].iter().map(|z| 2.0 * z.re));
    let sup = grid.synthesize(&half).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (r, sup)
}

/// Newton's method on the cosine coefficients.
///
/// The Jacobian is the Galerkin matrix of the linearized operator on even
/// zero-mean functions; the derivative of `A` only contributes constants,
/// which the cosine projection removes.
pub fn newton_refine(seed: &WaveProfile, c: f64, omega: f64, tol: f64) -> Result<WavePoint> {
    check_params(c, omega)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let seed_norm = seed.coeff_norm();
    if seed_norm < TRIVIAL_NORM {
        return Err(Error::TrivialCollapse { c });
    }
    let k = seed.grid().retained();
    let mut phi = seed.clone();
    let mut polished = false;
    let mut last = f64::INFINITY;
    for it in 0..=MAX_ITER {
        let gap = min_gap(&phi, c);
        if gap <= 0.0 {
            return Err(Error::GapViolation { c, min_gap: gap });
        }
        let (r, sup) = galerkin_residual(&phi, c, omega);
        if !sup.is_finite() {
            return Err(Error::NoConvergence { c, iterations: it, residual: sup });
        }
        if sup <= tol {
            if polished || sup >= last {
                let mut w = WavePoint::from_profile(phi, c, omega)?;
                w.residual_norm = sup;
                w.iterations = it;
                w.converged = true;
                return Ok(w);
            }
            polished = true;
        }
        last = sup;
        if it == MAX_ITER {
            return Err(Error::NoConvergence { c, iterations: it, residual: sup });
        }
        let (p, q) = l_coefficients(&phi, c, omega);
        let jac = sturm_liouville(&p, &q, k, Basis::EvenZeroMean);
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(Error::NoConvergence { c, iterations: it, residual: sup })?;
        for (a, d) in phi.coeffs_mut().iter_mut().zip(delta.iter()) {
            *a -= d;
        }
        let norm = phi.coeff_norm();
        if norm < TRIVIAL_NORM || norm < 1e-3 * seed_norm {
            return Err(Error::TrivialCollapse { c });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Why continuation ended.
#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    /// `c_end` was reached.
    Completed,
    /// The next point would exceed the resolvable spectral tail.
    ResolutionLimit { c: f64, tail: f64 },
    /// `c - φ` is closing at the crest (the branch approaches a peaked wave).
    GapClosing { c: f64, min_gap: f64 },
}

/// A sampled curve of waves at fixed ω with increasing speed.
#[derive(Clone, Debug)]
pub struct FamilyCurve {
    pub omega: f64,
    pub points: Vec<WavePoint>,
    pub max_step: f64,
    pub stop: StopReason,
}

impl FamilyCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Last speed on the curve.
    pub fn c_reached(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.c)
    }

    /// Scalars at point `i`, with derivatives in c.
    pub fn scalars(&self, i: usize, tol: f64) -> Result<FamilyScalars> {
        let w = self
            .points
            .get(i)
            .ok_or_else(|| Error::Domain(format!("index {i} outside curve of length {}", self.len())))?;
        family_scalars(w, tol)
    }
}

/// Gap below which continuation stops and reports the approach to a peaked crest.
pub fn gap_floor(c: f64) -> f64 {
    1e-3 * c
}

fn resolution_stop(w: &WavePoint) -> Option<StopReason> {
    if w.spectral_tail > TAIL_LIMIT {
        Some(StopReason::ResolutionLimit { c: w.c, tail: w.spectral_tail })
    } else if w.min_gap < gap_floor(w.c) {
        Some(StopReason::GapClosing { c: w.c, min_gap: w.min_gap })
    } else {
        None
    }
}

/// Continues the wave family in c from `c_start` to `c_end`.
///
/// Steps never exceed `max_step`; a failed Newton solve halves the step up to
/// eight times. The sweep stops early, with a [`StopReason`], once the
/// profile can no longer be resolved on the grid or its crest approaches c.
pub fn continue_family(
    grid: &Arc<Grid>,
    omega: f64,
    c_start: f64,
    c_end: f64,
    max_step: f64,
    tol: f64,
) -> Result<FamilyCurve> {
    check_params(c_start, omega)?;
    if !(c_end > c_start) {
        return Err(Error::Domain(format!("c_end = {c_end} must exceed c_start = {c_start}")));
    }
    if !(max_step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {max_step}")));
    }
    let mut curve = FamilyCurve { omega, points: Vec::new(), max_step, stop: StopReason::Completed };

    let a_max = A_MAX_FACTOR * omega;
    let first = if stokes_amplitude(c_start, omega) <= a_max {
        let seed = stokes_seed(grid, stokes_amplitude(c_start, omega), omega)?;
        newton_refine(&seed.phi, c_start, omega, tol)?
    } else {
        let c_onset = stokes_speed(0.5 * a_max, omega);
        let lead = continue_family(grid, omega, c_onset, c_start, max_step, tol)?;
        match lead.stop {
            StopReason::Completed => lead.points.last().cloned().expect("nonempty curve"),
            stop => {
                curve.stop = stop;
                return Ok(curve);
            }
        }
    };
    if let Some(stop) = resolution_stop(&first) {
        curve.stop = stop;
        return Ok(curve);
    }
    curve.points.push(first);

    let mut h = max_step;
    let mut halvings = 0;
    let mut successes = 0;
    while curve.c_reached() < c_end {
        let prev = curve.points.last().expect("nonempty");
        let c_next = (prev.c + h).min(c_end);
        let seed = match curve.points.len() {
            1 => prev.phi.clone(),
            n => {
                let pp = &curve.points[n - 2];
                let t = (c_next - prev.c) / (prev.c - pp.c);
                let coeffs = prev
                    .phi
                    .coeffs()
                    .iter()
                    .zip(pp.phi.coeffs())
                    .map(|(a, b)| a + t * (a - b))
                    .collect();
                WaveProfile::new(grid, coeffs)?
            }
        };
        match newton_refine(&seed, c_next, omega, tol) {
            Ok(w) => {
                if let Some(stop) = resolution_stop(&w) {
                    curve.stop = stop;
                    return Ok(curve);
                }
                curve.points.push(w);
                halvings = 0;
                successes += 1;
                if successes >= 2 && h < max_step {
                    h = (2.0 * h).min(max_step);
                    successes = 0;
                }
            }
            Err(e @ (Error::NoConvergence { .. } | Error::GapViolation { .. } | Error::TrivialCollapse { .. })) => {
                halvings += 1;
                successes = 0;
                h *= 0.5;
                if halvings > MAX_HALVINGS {
                    if let Error::GapViolation { min_gap, .. } = e {
                        curve.stop = StopReason::GapClosing { c: c_next, min_gap };
                        return Ok(curve);
                    }
                    log::warn!("continuation failed at c = {c_next}: {e}");
                    return Err(Error::StepUnderflow { c: c_next, step: h });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// Mass, momentum and energy of a profile via padded quadrature.
pub fn conserved(phi: &WaveProfile, omega: f64) -> ConservedTriple {
    let (v, d1) = (phi.padded(0), phi.padded(1));
    let h = 2.0 * PI / v.len() as f64;
    let (mut m, mut e, mut f) = (0.0, 0.0, 0.0);
    for j in 0..v.len() {
        let (u, ux) = (v[j], d1[j]);
        m += u;
        e += 0.5 * (u * u + ux * ux);
        f += 0.5 * (u * u * u + u * ux * ux + omega * u * u);
    }
    ConservedTriple { m: h * m, e: h * e, f: h * f }
}

/// Scalars of the family at one point, including derivatives in c.
#[derive(Clone, Debug)]
pub struct FamilyScalars {
    pub c: f64,
    pub omega: f64,
    pub a_const: f64,
    pub e: f64,
    pub f: f64,
    pub da_dc: f64,
    pub de_dc: f64,
    pub dphi_dc: WaveProfile,
    /// `ω(c-ω) + (ω+2c) dA/dc - 4A`.
    pub d_c: f64,
    /// Finite-difference step actually used.
    pub delta: f64,
}

/// `d_c = ω(c-ω) + (ω+2c) dA/dc - 4A`.
pub fn d_c(c: f64, omega: f64, a_const: f64, da_dc: f64) -> f64 {
    omega * (c - omega) + (omega + 2.0 * c) * da_dc - 4.0 * a_const
}

/// Fourth-order central differences in c, re-solving the wave at
/// `c ± δ` and `c ± 2δ`.
pub fn family_scalars(w: &WavePoint, tol: f64) -> Result<FamilyScalars> {
    let delta = FD_DELTA.min(0.25 * (w.c - 0.5 * w.omega));
    let solve = |dc: f64| newton_refine(&w.phi, w.c + dc, w.omega, tol);
    let (m2, m1, p1, p2) = (solve(-2.0 * delta)?, solve(-delta)?, solve(delta)?, solve(2.0 * delta)?);
    let stencil = |f: &dyn Fn(&WavePoint) -> f64| {
        (f(&m2) - 8.0 * f(&m1) + 8.0 * f(&p1) - f(&p2)) / (12.0 * delta)
    };
    let da_dc = stencil(&|p| p.a_const);
    let de_dc = stencil(&|p| p.phi.e_functional());
    let coeffs = (0..w.phi.coeffs().len())
        .map(|i| stencil(&|p| p.phi.coeffs()[i]))
        .collect();
    let consts = w.conserved();
    Ok(FamilyScalars {
        c: w.c,
        omega: w.omega,
        a_const: w.a_const,
        e: w.phi.e_functional(),
        f: consts.f,
        da_dc,
        de_dc,
        dphi_dc: WaveProfile::new(w.grid(), coeffs)?,
        d_c: d_c(w.c, w.omega, w.a_const, da_dc),
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> Arc<Grid> {
        Grid::new(32).unwrap()
    }

    #[test]
    fn seed_values() {
        let w = stokes_seed(&grid(), 0.1, 1.0).unwrap();
        assert_abs_diff_eq!(w.phi.coeffs()[0], 0.1);
        assert_abs_diff_eq!(w.phi.coeffs()[1], 0.01);
        assert_abs_diff_eq!(w.c, 0.515, epsilon = 1e-15);
        assert!((w.a_const - 0.01).abs() <= 2.0 * 0.1f64.powi(4));
        let z = stokes_seed(&grid(), 0.0, 2.0).unwrap();
        assert_eq!(z.c, 1.0);
        assert_eq!(z.a_const, 0.0);
        assert!(stokes_seed(&grid(), 0.1, 0.0).is_err());
        assert!(stokes_seed(&grid(), 0.3, 1.0).is_err());
    }

    #[test]
    fn amplitude_speed_inverse() {
        let c = stokes_speed(0.07, 2.0);
        assert_abs_diff_eq!(stokes_amplitude(c, 2.0), 0.07, epsilon = 1e-15);
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let r = residual(&WaveProfile::zero(&grid()), 0.7, 1.0).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn residual_gap_violation() {
        let p = WaveProfile::new(&grid(), vec![1.0]).unwrap();
        assert!(matches!(residual(&p, 0.6, 1.0), Err(Error::GapViolation { .. })));
    }

    #[test]
    fn seed_residual_is_third_order() {
        let w = stokes_seed(&grid(), 0.05, 1.0).unwrap();
        assert!(w.residual_norm <= 1e-3, "{}", w.residual_norm);
    }

    #[test]
    fn newton_from_seed() {
        let seed = stokes_seed(&grid(), 0.05, 1.0).unwrap();
        let w = newton_refine(&seed.phi, seed.c, 1.0, NEWTON_TOL).unwrap();
        assert!(w.iterations <= 6, "{} iterations", w.iterations);
        assert!(w.residual_norm <= NEWTON_TOL);
        assert!(residual(&w.phi, w.c, 1.0).unwrap().mean().abs() < 1e-12);
        assert_abs_diff_eq!(w.a_const, w.phi.a_functional());
    }

    #[test]
    fn newton_rejects_bad_input() {
        let g = grid();
        assert!(matches!(
            newton_refine(&WaveProfile::zero(&g), 0.6, 1.0, NEWTON_TOL),
            Err(Error::TrivialCollapse { .. })
        ));
        let seed = stokes_seed(&g, 0.05, 1.0).unwrap();
        assert!(matches!(newton_refine(&seed.phi, 0.5, 1.0, NEWTON_TOL), Err(Error::Domain(_))));
    }

    #[test]
    fn conserved_of_cosine() {
        let p = WaveProfile::new(&grid(), vec![0.2]).unwrap();
        let t = conserved(&p, 1.0);
        assert_abs_diff_eq!(t.m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.e, 0.04 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(t.f, 0.5 * 0.04 * PI, epsilon = 1e-15);
        let z = conserved(&WaveProfile::zero(&grid()), 1.0);
        assert_eq!((z.m, z.e, z.f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn conserved_of_two_mode_seed() {
        let a: f64 = 0.1;
        let w = stokes_seed(&grid(), a, 1.0).unwrap();
        let e = PI * (a * a + 2.5 * a.powi(4));
        assert_abs_diff_eq!(w.conserved().e / e, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn continuation_rejects_bad_range() {
        assert!(matches!(continue_family(&grid(), 1.0, 0.4, 1.0, 0.01, NEWTON_TOL), Err(Error::Domain(_))));
        assert!(matches!(continue_family(&grid(), 1.0, 0.7, 0.6, 0.01, NEWTON_TOL), Err(Error::Domain(_))));
    }

    #[test]
    fn short_continuation() {
        let curve = continue_family(&Grid::new(64).unwrap(), 1.0, 0.51, 0.6, 0.01, NEWTON_TOL).unwrap();
        assert_eq!(curve.stop, StopReason::Completed);
        assert!(curve.len() >= 10);
        for pair in curve.points.windows(2) {
            assert!(pair[1].c > pair[0].c);
            assert!(pair[1].c - pair[0].c <= 0.01 + 1e-12);
            assert!(pair[1].amplitude() > pair[0].amplitude());
        }
        assert_abs_diff_eq!(curve.c_reached(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn onset_scalars_follow_stokes_branch() {
        let omega = 1.0;
        let seed = stokes_seed(&grid(), 0.02, omega).unwrap();
        let w = newton_refine(&seed.phi, seed.c, omega, NEWTON_TOL).unwrap();
        let s = family_scalars(&w, NEWTON_TOL).unwrap();
        assert!((s.da_dc - 2.0 * omega / 3.0).abs() < 0.02 * omega, "dA/dc = {}", s.da_dc);
        assert!((s.d_c - 5.0 * omega * omega / 6.0).abs() < 0.05, "d_c = {}", s.d_c);
        assert!(s.de_dc > 0.0);
    }
}
