//! Pseudo-spectral time integration of
//! `u_t = -(1-∂²)⁻¹∂[(3/2)u² - u u_xx - (1/2)u_x² + ωu]`
//! and orbital distances to a traveling wave.
//!
//! Products are formed on the 3/2-padded grid, so the semi-discrete system
//! conserves `∫u`, `E` and `F` exactly and a converged wave travels exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::assemble_l;
use crate::spectral::{half_to_uniform, Field, Grid, WaveProfile};
use crate::wave::{ConservedTriple, WavePoint};

/// State magnitude treated as blow-up.
pub const BLOWUP: f64 = 1e6;
/// Relative spectral tail that triggers an aliasing warning.
pub const ALIASING_TAIL: f64 = 1e-6;

/// A solution snapshot.
#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub u: Field,
    pub t: f64,
    pub conserved0: ConservedTriple,
}

impl EvolutionState {
    pub fn new(u: Field, omega: f64) -> EvolutionState {
        let conserved0 = conserved_field(&u, omega);
        EvolutionState { u, t: 0.0, conserved0 }
    }
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn times_ik(half: &[Complex64], power: u32) -> Vec<Complex64> {
    half.iter()
        .enumerate()
        .map(|(k, c)| c * Complex64::new(0.0, k as f64).powu(power))
        .collect()
}

/// Mass, momentum and energy of an arbitrary field.
pub fn conserved_field(u: &Field, omega: f64) -> ConservedTriple {
    conserved_half(u.grid(), &u.half(), omega)
}

fn conserved_half(grid: &Grid, half: &[Complex64], omega: f64) -> ConservedTriple {
    let v = grid.to_padded(half);
    let d = grid.to_padded(&times_ik(half, 1));
    let h = 2.0 * PI / v.len() as f64;
    let (mut e, mut f) = (0.0, 0.0);
    for (&u, &ux) in v.iter().zip(&d) {
        e += 0.5 * (u * u + ux * ux);
        f += 0.5 * (u * u * u + u * ux * ux + omega * u * u);
    }
    ConservedTriple { m: 2.0 * PI * half[0].re, e: h * e, f: h * f }
}

fn rhs_half(grid: &Grid, half: &[Complex64], omega: f64) -> Vec<Complex64> {
    let u = grid.to_padded(half);
    let ux = grid.to_padded(&times_ik(half, 1));
    let uxx = grid.to_padded(&times_ik(half, 2));
    let flux: Vec<f64> = (0..u.len())
        .map(|j| 1.5 * u[j] * u[j] - u[j] * uxx[j] - 0.5 * ux[j] * ux[j] + omega * u[j])
        .collect();
    grid.project_padded(&flux)
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let k = k as f64;
            c * Complex64::new(0.0, -k / (1.0 + k * k))
        })
        .collect()
}

fn tail_ratio(half: &[Complex64]) -> f64 {
    let k = half.len() - 1;
    let peak = half[1..].iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    let start = k + 1 - (k / 8).max(1);
    half[start..].iter().fold(0.0_f64, |m, c| m.max(c.norm())) / peak
}

/// Right-hand side of the evolution equation.
pub fn rhs(u: &Field, omega: f64) -> Field {
    let half = u.half();
    let tail = tail_ratio(&half);
    if tail > ALIASING_TAIL {
        log::warn!("aliasing risk: spectral tail {tail:.3e} exceeds {ALIASING_TAIL:e}");
    }
    Field::from_half(u.grid(), &rhs_half(u.grid(), &half, omega))
}

/// Largest admissible RK4 step for a state with sup norm `u_max`.
pub fn dt_max(grid: &Grid, u_max: f64, omega: f64) -> f64 {
    let n = grid.n_modes() as f64;
    0.5 / (u_max * n + omega * n / (1.0 + n * n))
}

fn rk4(grid: &Grid, y: &[Complex64], dt: f64, omega: f64) -> Vec<Complex64> {
    let axpy = |a: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
        a.iter().zip(k).map(|(x, d)| x + d * s).collect()
    };
    let k1 = rhs_half(grid, y, omega);
    let k2 = rhs_half(grid, &axpy(y, &k1, 0.5 * dt), omega);
    let k3 = rhs_half(grid, &axpy(y, &k2, 0.5 * dt), omega);
    let k4 = rhs_half(grid, &axpy(y, &k3, dt), omega);
    (0..y.len())
        .map(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
        .collect()
}

fn check_dt(grid: &Grid, sup: f64, dt: f64, omega: f64) -> Result<()> {
    let limit = dt_max(grid, sup, omega);
    if !(dt.abs() <= limit) || dt == 0.0 {
        return Err(Error::Domain(format!("|dt| = {} must lie in (0, {limit:.3e}]", dt.abs())));
    }
    Ok(())
}

/// One classical Runge-Kutta step. Negative `dt` integrates backwards.
pub fn step(s: &EvolutionState, dt: f64, omega: f64) -> Result<EvolutionState> {
    let grid = s.u.grid();
    check_dt(grid, s.u.max_abs(), dt, omega)?;
    let next = rk4(grid, &s.u.half(), dt, omega);
    let u = Field::from_half(grid, &next);
    let sup = u.max_abs();
    if !(sup <= BLOWUP) {
        return Err(Error::BlowupDetected { t: s.t + dt, sup });
    }
    Ok(EvolutionState { u, t: s.t + dt, conserved0: s.conserved0 })
}

/// Integrates `n_steps` RK4 steps without leaving spectral space.
pub fn evolve(s: &EvolutionState, dt: f64, n_steps: usize, omega: f64) -> Result<EvolutionState> {
    let grid = s.u.grid().clone();
    check_dt(&grid, s.u.max_abs(), dt, omega)?;
    let mut y = s.u.half();
    for i in 0..n_steps {
        y = rk4(&grid, &y, dt, omega);
        if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::BlowupDetected { t: s.t + (i + 1) as f64 * dt, sup: f64::INFINITY });
        }
    }
    let u = Field::from_half(&grid, &y);
    let t = s.t + n_steps as f64 * dt;
    let sup = u.max_abs();
    if !(sup <= BLOWUP) {
        return Err(Error::BlowupDetected { t, sup });
    }
    Ok(EvolutionState { u, t, conserved0: s.conserved0 })
}

/// `u(· - s)` by a spectral phase shift.
pub fn translate(u: &Field, s: f64) -> Field {
    let half: Vec<Complex64> = u
        .half()
        .iter()
        .enumerate()
        .map(|(k, c)| c * Complex64::from_polar(1.0, -(k as f64) * s))
        .collect();
    Field::from_half(u.grid(), &half)
}

fn h1_weights(k: usize) -> impl Iterator<Item = f64> {
    (0..=k).map(|j| if j == 0 { 1.0 } else { 2.0 * (1.0 + (j * j) as f64) })
}

/// H¹ norm on the period.
pub fn h1_norm(u: &Field) -> f64 {
    let half = u.half();
    (2.0 * PI * h1_weights(half.len() - 1).zip(&half).map(|(w, c)| w * c.norm_sqr()).sum::<f64>()).sqrt()
}

fn profile_half(phi: &WaveProfile) -> Vec<Complex64> {
    std::iter::once(zero()).chain(phi.coeffs().iter().map(|&a| Complex64::new(0.5 * a, 0.0))).collect()
}

/// `min_l ‖u - φ(· + l)‖_{H¹}`.
///
/// The H¹ cross-correlation is evaluated on a shift grid four times finer
/// than the collocation grid, and the best shift is refined by a
/// golden-section search on the distance itself.
pub fn orbital_distance(u: &Field, phi: &WaveProfile) -> f64 {
    let uh = u.half();
    let ph = profile_half(&phi.resample(u.grid()));
    let k = uh.len() - 1;
    let weights: Vec<f64> = h1_weights(k).collect();
    let corr: Vec<Complex64> = (0..=k)
        .map(|j| {
            let w = if j == 0 { 1.0 } else { 0.5 * weights[j] };
            uh[j].conj() * ph[j] * w
        })
        .collect();
    let fine = 4 * u.grid().len();
    let values = half_to_uniform(&corr, fine);
    let best = values.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0;
    let dist = |l: f64| -> f64 {
        let s: f64 = (0..=k)
            .map(|j| weights[j] * (uh[j] - ph[j] * Complex64::from_polar(1.0, j as f64 * l)).norm_sqr())
            .sum();
        (2.0 * PI * s).max(0.0).sqrt()
    };
    let spacing = 2.0 * PI / fine as f64;
    let center = best as f64 * spacing;
    let (mut a, mut b) = (center - spacing, center + spacing);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + center.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = dist(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = dist(x2);
        }
    }
    f1.min(f2).min(dist(center))
}

/// Shape of the initial perturbation.
#[derive(Clone, Debug)]
pub enum Perturbation {
    /// Fixed mix of even and odd modes: `cos 3x + sin 2x + 0.5 sin 5x`.
    Standard,
    /// Random coefficients on modes 1..8 with `1/k²` decay.
    Random { seed: u64 },
    /// User-supplied direction.
    Field(Field),
}

impl Perturbation {
    pub fn direction(&self, grid: &Arc<Grid>) -> Result<Field> {
        let v = match self {
            Perturbation::Standard => {
                Field::from_fn(grid, |x| (3.0 * x).cos() + (2.0 * x).sin() + 0.5 * (5.0 * x).sin())
            }
            Perturbation::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let modes: Vec<(f64, f64)> =
                    (1..=8).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                Field::from_fn(grid, |x| {
                    modes
                        .iter()
                        .enumerate()
                        .map(|(i, (a, b))| {
                            let k = (i + 1) as f64;
                            (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
                        })
                        .sum()
                })
            }
            Perturbation::Field(f) => {
                if f.grid().len() != grid.len() {
                    return Err(Error::Domain("perturbation lives on a different grid".into()));
                }
                f.clone()
            }
        };
        let mean = v.mean();
        Ok(v.map(|x| x - mean))
    }
}

/// Settings of an orbital stability run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// `‖δv‖_{H¹} / ‖φ‖_{H¹}`.
    pub perturbation_size: f64,
    pub t_final: f64,
    pub dt: f64,
    pub dt_out: f64,
    pub perturbation: Perturbation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            perturbation_size: 1e-2,
            t_final: 50.0,
            dt: 1e-3,
            dt_out: 0.5,
            perturbation: Perturbation::Standard,
        }
    }
}

/// One output sample of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub distance: f64,
    pub m: f64,
    pub e: f64,
    pub f: f64,
}

#[derive(Clone, Debug)]
pub struct OrbitalRun {
    pub samples: Vec<Sample>,
    pub initial_distance: f64,
    pub max_distance: f64,
    /// Largest relative drift of `(M, E, F)` over the samples.
    pub max_drift: [f64; 3],
    pub final_state: EvolutionState,
}

/// Evolves `φ + δv` and records the distance to the orbit of `φ`.
pub fn run_orbital_experiment(w: &WavePoint, cfg: &ExperimentConfig) -> Result<OrbitalRun> {
    if !(cfg.perturbation_size >= 0.0) || !(cfg.t_final > 0.0) || !(cfg.dt > 0.0) || !(cfg.dt_out > 0.0) {
        return Err(Error::Domain("perturbation size must be >= 0 and T, dt, dt_out positive".into()));
    }
    let grid = w.grid().clone();
    let phi = w.phi.to_field();
    let mut u0 = phi.clone();
    if cfg.perturbation_size > 0.0 {
        let v = cfg.perturbation.direction(&grid)?;
        let scale = cfg.perturbation_size * h1_norm(&phi) / h1_norm(&v);
        u0 = u0.add(&v.scale(scale));
    }
    let mut state = EvolutionState::new(u0, w.omega);
    let n_total = (cfg.t_final / cfg.dt).round() as usize;
    let per_out = ((cfg.dt_out / cfg.dt).round() as usize).max(1);
    let record = |s: &EvolutionState| {
        let q = conserved_field(&s.u, w.omega);
        Sample { t: s.t, distance: orbital_distance(&s.u, &w.phi), m: q.m, e: q.e, f: q.f }
    };
    let mut samples = vec![record(&state)];
    let mut done = 0;
    while done < n_total {
        let n = per_out.min(n_total - done);
        let t0 = state.t;
        state = evolve(&state, cfg.dt, n, w.omega)?;
        done += n;
        state.t = t0 + n as f64 * cfg.dt;
        if done == n_total {
            state.t = n_total as f64 * cfg.dt;
        }
        samples.push(record(&state));
    }
    let c0 = state.conserved0;
    let mut max_drift = [0.0_f64; 3];
    for s in &samples {
        let d = ConservedTriple { m: s.m, e: s.e, f: s.f }.drift(&c0);
        for i in 0..3 {
            max_drift[i] = max_drift[i].max(d[i]);
        }
    }
    Ok(OrbitalRun {
        initial_distance: samples[0].distance,
        max_distance: samples.iter().fold(0.0, |m, s| m.max(s.distance)),
        samples,
        max_drift,
        final_state: state,
    })
}

/// Right-hand side `(1-∂²)⁻¹∂(𝓛v)` of the linearization in the co-moving frame.
pub fn linearized_rhs(w: &WavePoint, v: &Field) -> Result<Field> {
    let l = assemble_l(w)?;
    Ok(apply_linearized(&l, v))
}

fn apply_linearized(l: &crate::operators::OperatorMatrix, v: &Field) -> Field {
    let lv = l.apply(v).half();
    let out: Vec<Complex64> = lv
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let k = k as f64;
            c * Complex64::new(0.0, k / (1.0 + k * k))
        })
        .collect();
    Field::from_half(v.grid(), &out)
}

/// RK4 integration of the linearized flow in the co-moving frame.
pub fn evolve_linearized(w: &WavePoint, v0: &Field, dt: f64, n_steps: usize) -> Result<Field> {
    let l = assemble_l(w)?;
    let mut v = v0.clone();
    for _ in 0..n_steps {
        let k1 = apply_linearized(&l, &v);
        let k2 = apply_linearized(&l, &v.add(&k1.scale(0.5 * dt)));
        let k3 = apply_linearized(&l, &v.add(&k2.scale(0.5 * dt)));
        let k4 = apply_linearized(&l, &v.add(&k3.scale(dt)));
        v = v.add(&k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4).scale(dt / 6.0));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{newton_refine, stokes_seed, NEWTON_TOL};
    use approx::assert_abs_diff_eq;

    fn wave() -> WavePoint {
        let g = Grid::new(32).unwrap();
        let s = stokes_seed(&g, 0.05, 1.0).unwrap();
        newton_refine(&s.phi, s.c, 1.0, NEWTON_TOL).unwrap()
    }

    #[test]
    fn zero_state_is_stationary() {
        let g = Grid::new(16).unwrap();
        let z = Field::constant(&g, 0.0);
        assert_eq!(rhs(&z, 1.0).max_abs(), 0.0);
        let s = step(&EvolutionState::new(z, 1.0), 1e-3, 1.0).unwrap();
        assert_eq!(s.u.max_abs(), 0.0);
    }

    #[test]
    fn linear_dispersion() {
        let g = Grid::new(16).unwrap();
        let eps = 1e-6;
        let u = Field::from_fn(&g, |x| eps * x.cos());
        let r = rhs(&u, 1.0);
        for (x, v) in g.nodes().iter().zip(r.values()) {
            assert_abs_diff_eq!(*v, 0.5 * eps * x.sin(), epsilon = 1e-11);
        }
    }

    #[test]
    fn wave_travels() {
        let w = wave();
        let r = rhs(&w.phi.to_field(), 1.0);
        let expect = w.phi.derivative(1).scale(-w.c);
        assert!(r.sub(&expect).max_abs() <= 1e-8);
        let s = step(&EvolutionState::new(w.phi.to_field(), 1.0), 1e-3, 1.0).unwrap();
        let shifted = translate(&w.phi.to_field(), w.c * 1e-3);
        assert!(s.u.sub(&shifted).max_abs() <= 1e-9);
        let d = conserved_field(&s.u, 1.0).drift(&s.conserved0);
        assert!(d[1] <= 1e-12);
    }

    #[test]
    fn distance_of_shifted_wave() {
        let w = wave();
        let u = translate(&w.phi.to_field(), 0.37);
        assert!(orbital_distance(&u, &w.phi) <= 1e-10);
    }

    #[test]
    fn distance_of_small_perturbation() {
        let w = wave();
        let g = w.grid();
        let v = Field::from_fn(g, |x| (3.0 * x).cos());
        let eps = 1e-3;
        let u = w.phi.to_field().add(&v.scale(eps / h1_norm(&v)));
        let d = orbital_distance(&u, &w.phi);
        assert!(d > 0.0 && d <= eps * (1.0 + 1e-12), "{d}");
    }

    #[test]
    fn rejects_large_step() {
        let w = wave();
        let s = EvolutionState::new(w.phi.to_field(), 1.0);
        assert!(matches!(step(&s, 1.0, 1.0), Err(Error::Domain(_))));
    }
}
