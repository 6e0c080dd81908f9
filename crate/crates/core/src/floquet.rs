//! Fundamental solutions of `𝓛y = 0` and the Floquet discriminant at zero.
//!
//! The equation `(c-φ)y'' - φ'y' - (c-ω-3φ+φ'')y = 0` is integrated as an
//! initial value problem. With `y₁(0) = 1/φ''(0)`, `y₁'(0) = 0` and
//! `y₂ = φ'`, the Wronskian is `(c-φ(0))/(c-φ(x))` and
//! `y₁(x+2π) = y₁(x) + θ φ'(x)` with `θ = y₁'(2π)/φ''(0)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{assemble_hill, liouville, multiplication, sym_eigen, Basis};
use crate::stability::zero_tol;
use crate::wave::WavePoint;

/// Relative tolerance of the adaptive integrator.
pub const RTOL: f64 = 1e-11;
/// Absolute tolerance of the adaptive integrator.
pub const ATOL: f64 = 1e-13;
/// Required relative agreement of the two θ estimates.
pub const THETA_AGREEMENT: f64 = 1e-5;

const MAX_STEPS: usize = 10_000_000;
const DIM: usize = 5;

/// Samples of a solution and its derivative at uniformly spaced points.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

/// Both fundamental solutions on `[0, 4π]`, sampled `samples` times per period.
#[derive(Clone, Debug)]
pub struct FundamentalSolutions {
    pub y1: Trajectory,
    /// Integrated from `y₂(0) = 0`, `y₂'(0) = φ''(0)`; should equal `φ'`.
    pub y2: Trajectory,
    pub samples: usize,
    /// `∫₀^{2π} y₁`, integrated alongside the solution.
    pub y1_integral: f64,
    /// `max |y₂ - φ'| / max|φ'|` over the trajectory.
    pub y2_error: f64,
    /// `max |W(x)(c-φ(x))/(c-φ(0)) - 1|` over the trajectory.
    pub wronskian_drift: f64,
    pub steps: usize,
}

/// Position of zero in the ordered spectrum of the weighted Hill problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// Zero is the simple second eigenvalue (θ > 0).
    SimpleSecond,
    /// Zero is double (θ = 0).
    Double,
    /// Zero is the simple third eigenvalue (θ < 0).
    SimpleThird,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::SimpleSecond => "simple_second",
            Classification::Double => "double",
            Classification::SimpleThird => "simple_third",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FloquetReport {
    pub theta: f64,
    /// θ from the least-squares fit of `φ₁(x+2π) - φ₁(x) = θ φ₂(x)`.
    pub theta_fit: f64,
    pub y1_deriv_2pi: f64,
    pub phi2pp0: f64,
    pub wronskian_drift: f64,
    pub y2_error: f64,
    pub y1_integral: f64,
    pub classification: Classification,
}

/// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Ode<'a> {
    w: &'a WavePoint,
}

impl Ode<'_> {
    fn rhs(&self, x: f64, s: &[f64; DIM]) -> [f64; DIM] {
        let [v, d1, d2] = self.w.phi.eval(x);
        let p = self.w.c - v;
        let q = self.w.c - self.w.omega - 3.0 * v + d2;
        [s[1], (d1 * s[1] + q * s[0]) / p, s[3], (d1 * s[3] + q * s[2]) / p, s[0]]
    }
}

/// Integrates `y₁`, `y₂` and `∫y₁` over two periods with DOPRI5.
pub fn fundamental_solutions(w: &WavePoint) -> Result<FundamentalSolutions> {
    let [phi0, _, phi2pp0] = w.phi.eval(0.0);
    if phi2pp0.abs() < 1e-14 {
        return Err(Error::Domain("φ''(0) vanishes; the fundamental solution y₁ is undefined".into()));
    }
    if w.min_gap <= 0.0 {
        return Err(Error::GapViolation { c: w.c, min_gap: w.min_gap });
    }
    let ode = Ode { w };
    let samples = 2 * w.grid().n_modes();
    let total = 2 * samples;
    let dx = 2.0 * PI / samples as f64;
    let mut state = [1.0 / phi2pp0, 0.0, 0.0, phi2pp0, 0.0];
    let mut y1 = Trajectory { x: vec![0.0], y: vec![state[0]], dy: vec![state[1]] };
    let mut y2 = Trajectory { x: vec![0.0], y: vec![state[2]], dy: vec![state[3]] };
    let mut y1_integral = f64::NAN;
    let mut x = 0.0;
    let mut h = 1e-3;
    let mut steps = 0;
    let mut k1 = ode.rhs(x, &state);
    for i in 1..=total {
        let target = i as f64 * dx;
        while x < target {
            let last = target - x <= h;
            let step = if last { target - x } else { h };
            let mut k = [[0.0; DIM]; 7];
            k[0] = k1;
            let mut trial = state;
            for s in 1..7 {
                let mut y = state;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for d in 0..DIM {
                        y[d] += step * A[s][j] * kj[d];
                    }
                }
                k[s] = ode.rhs(x + C[s] * step, &y);
                if s == 6 {
                    trial = y;
                }
            }
            let mut err: f64 = 0.0;
            for d in 0..DIM {
                let e: f64 = (0..7).map(|s| E[s] * k[s][d]).sum::<f64>() * step;
                let sc = ATOL + RTOL * state[d].abs().max(trial[d].abs());
                err = err.max(e.abs() / sc);
            }
            steps += 1;
            if steps > MAX_STEPS || !err.is_finite() {
                return Err(Error::IntegrationFailure { x, step });
            }
            if err <= 1.0 {
                x = if last { target } else { x + step };
                state = trial;
                k1 = k[6];
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // A step shortened to land on a sample node says little about the
            // admissible step size, so only full or rejected steps adapt h.
            if !last || err > 1.0 {
                h = step * factor;
            }
            if h < 1e-12 * 4.0 * PI {
                return Err(Error::IntegrationFailure { x, step: h });
            }
        }
        y1.x.push(x);
        y1.y.push(state[0]);
        y1.dy.push(state[1]);
        y2.x.push(x);
        y2.y.push(state[2]);
        y2.dy.push(state[3]);
        if i == samples {
            y1_integral = state[4];
        }
    }

    let gap0 = w.c - phi0;
    let mut drift: f64 = 0.0;
    let mut y2_err: f64 = 0.0;
    let mut d1_max: f64 = 0.0;
    for i in 0..=total {
        let [v, d1, _] = w.phi.eval(y1.x[i]);
        let wr = y1.y[i] * y2.dy[i] - y1.dy[i] * y2.y[i];
        drift = drift.max((wr * (w.c - v) / gap0 - 1.0).abs());
        y2_err = y2_err.max((y2.y[i] - d1).abs());
        d1_max = d1_max.max(d1.abs());
    }
    Ok(FundamentalSolutions {
        y1,
        y2,
        samples,
        y1_integral,
        y2_error: y2_err / d1_max,
        wronskian_drift: drift,
        steps,
    })
}

/// Classification from the sign of θ; `scale` is a typical magnitude of θ
/// (for instance its running maximum along a curve).
pub fn classify(theta: f64, scale: f64) -> Classification {
    if theta.abs() < 1e-6 * (1.0 + scale.abs()) {
        Classification::Double
    } else if theta > 0.0 {
        Classification::SimpleSecond
    } else {
        Classification::SimpleThird
    }
}

/// θ from the boundary derivative, cross-checked by a periodic fit.
pub fn extract_theta(w: &WavePoint, sol: &FundamentalSolutions, theta_scale: Option<f64>) -> Result<FloquetReport> {
    let [phi0, _, phi2pp0] = w.phi.eval(0.0);
    let n = sol.samples;
    let y1_deriv_2pi = sol.y1.dy[n];
    let theta = y1_deriv_2pi / phi2pp0;
    let gap0 = w.c - phi0;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let [v, d1, _] = w.phi.eval(sol.y1.x[i]);
        let g = ((w.c - v) / gap0).sqrt();
        let jump = g * (sol.y1.y[i + n] - sol.y1.y[i]);
        let phi2 = g * d1;
        num += jump * phi2;
        den += phi2 * phi2;
    }
    let theta_fit = num / den;
    let tol = THETA_AGREEMENT * theta.abs().max(theta_fit.abs()) + 1e-10;
    if (theta - theta_fit).abs() > tol {
        return Err(Error::InconsistentTheta { derivative: theta, fit: theta_fit });
    }
    Ok(FloquetReport {
        theta,
        theta_fit,
        y1_deriv_2pi,
        phi2pp0,
        wronskian_drift: sol.wronskian_drift,
        y2_error: sol.y2_error,
        y1_integral: sol.y1_integral,
        classification: classify(theta, theta_scale.unwrap_or(theta.abs())),
    })
}

/// Integrates and extracts θ in one call.
pub fn floquet_report(w: &WavePoint, theta_scale: Option<f64>) -> Result<FloquetReport> {
    let sol = fundamental_solutions(w)?;
    extract_theta(w, &sol, theta_scale)
}

/// Eigenvalues of `ℳw = λ(c-φ)^{-1}w`, computed by Cholesky reduction of
/// the weight matrix.
pub fn weighted_hill_eigenvalues(w: &WavePoint) -> Result<Vec<f64>> {
    let ld = liouville(w)?;
    let hill = assemble_hill(&ld);
    let weight = multiplication(w, |s| 1.0 / s)?;
    let chol = weight
        .entries
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("weight matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&hill.entries)
        .ok_or_else(|| Error::LinearAlgebra("singular Cholesky factor".into()))?;
    let c: DMatrix<f64> = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::LinearAlgebra("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let (values, _) = sym_eigen(&c, Basis::Full.even_len(w.grid().retained()));
    Ok(values)
}

/// Zero-based index of the first zero eigenvalue and its multiplicity.
pub fn zero_position(sorted: &[f64]) -> Option<(usize, usize)> {
    let tol = zero_tol(sorted);
    let first = sorted.iter().position(|l| l.abs() <= tol)?;
    let mult = sorted[first..].iter().take_while(|l| l.abs() <= tol).count();
    Some((first, mult))
}

/// Classification implied by the position of zero in an ordered spectrum.
pub fn classification_from_spectrum(sorted: &[f64]) -> Option<Classification> {
    match zero_position(sorted)? {
        (_, m) if m >= 2 => Some(Classification::Double),
        (1, 1) => Some(Classification::SimpleSecond),
        (2, 1) => Some(Classification::SimpleThird),
        _ => None,
    }
}
