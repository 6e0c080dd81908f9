//! Acceptance criteria 1-7. Each test prints one PASS/FAIL line, written
//! directly to stdout so it shows up even when output capture is on, and
//! then asserts the criterion as stated.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rchwave::cli::{cmd_sweep, RunConfig, Table};
use rchwave::evolution::{orbital_distance, run_orbital_experiment, ExperimentConfig, Perturbation};
use rchwave::floquet::{classification_from_spectrum, floquet_report, weighted_hill_eigenvalues};
use rchwave::spectral::{analyze_even, synthesize, Field, Grid, WaveProfile, SYMMETRY_TOL};
use rchwave::stability::{analyze, fold_tol, Analysis};
use rchwave::wave::{continue_family, newton_refine, stokes_seed, stokes_speed, WavePoint, NEWTON_TOL};

fn report(id: &str, name: &str, pass: bool, elapsed: Duration, details: &[String]) {
    let mut text = format!(
        "criterion {id} [{name}]: {} ({:.1}s)\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    for d in details {
        text.push_str(&format!("    {d}\n"));
    }
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// `count` converged waves spread evenly over `[1.01ω/2, min(ω/2 + 2, reach)]`,
/// where `reach` is the last speed the grid resolves.
fn curve_points(omega: f64, modes: usize, count: usize) -> (Vec<WavePoint>, f64) {
    let grid = Grid::new(modes).unwrap();
    let c_lo = 0.51 * omega;
    let c_hi = 0.5 * omega + 2.0;
    let probe = continue_family(&grid, omega, c_lo, c_hi, (c_hi - c_lo) / 40.0, NEWTON_TOL).unwrap();
    let c_top = probe.c_reached();
    let points = (0..count)
        .map(|i| {
            let c = c_lo + i as f64 * (c_top - c_lo) / (count - 1) as f64;
            let near = probe
                .points
                .iter()
                .min_by(|a, b| (a.c - c).abs().total_cmp(&(b.c - c).abs()))
                .unwrap();
            newton_refine(&near.phi, c, omega, NEWTON_TOL).unwrap()
        })
        .collect();
    (points, c_top)
}

const OMEGAS: [f64; 4] = [1.0, 2.0, 3.0, 5.0];

#[test]
fn criterion_1_stokes_order() {
    let t = Instant::now();
    let grid = Grid::new(64).unwrap();
    let amps = [0.02, 0.04, 0.08];
    let errs: Vec<f64> = amps
        .iter()
        .map(|&a| {
            let seed = stokes_seed(&grid, a, 1.0).unwrap();
            let w = newton_refine(&seed.phi, seed.c, 1.0, NEWTON_TOL).unwrap();
            w.phi.to_field().sub(&seed.phi.to_field()).max_abs()
        })
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = amps.iter().zip(&errs).map(|(a, e)| (a.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / 3.0;
    let my = ly.iter().sum::<f64>() / 3.0;
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let elapsed = t.elapsed();
    let pass = (2.7..=3.3).contains(&slope) && elapsed.as_secs_f64() < 10.0;
    report(
        "1",
        "Stokes-order convergence",
        pass,
        elapsed,
        &[format!("errors {:?} at a = {amps:?}; log-log slope {slope:.4} (required [2.7, 3.3])", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>())],
    );
    assert!(pass);
}

#[test]
fn criterion_2_small_amplitude_limits() {
    let t = Instant::now();
    let grid = Grid::new(64).unwrap();
    let seed = stokes_seed(&grid, 0.03, 1.0).unwrap();
    let w = newton_refine(&seed.phi, seed.c, 1.0, NEWTON_TOL).unwrap();
    let a = analyze(&w, NEWTON_TOL, None).unwrap();
    let v = &a.verdict;
    let target_dc = -1.0 / 6.0;
    let target_inner = -12.0 * std::f64::consts::PI;
    let dc_ok = ((v.d_c - target_dc) / target_dc).abs() <= 0.1;
    let inner_ok = ((v.inner_l_inv_1_1 - target_inner) / target_inner).abs() <= 0.1;
    let counts_ok = (v.n_l, v.z_l, v.n_lpi, v.z_lpi) == (2, 1, 1, 1);
    let theta_ok = v.theta < 0.0;
    let pass = dc_ok && inner_ok && counts_ok && theta_ok;
    report(
        "2",
        "small-amplitude limits",
        pass,
        t.elapsed(),
        &[
            format!("c = {:.6}, d_c = {:.6} (required {target_dc:.6} within 10%): {}", w.c, v.d_c, ok(dc_ok)),
            format!(
                "<L^-1 1,1> = {:.6} (required {target_inner:.6} within 10%): {}",
                v.inner_l_inv_1_1,
                ok(inner_ok)
            ),
            format!(
                "n(L), z(L), n(LPi), z(LPi) = {}, {}, {}, {} (required 2, 1, 1, 1): {}",
                v.n_l,
                v.z_l,
                v.n_lpi,
                v.z_lpi,
                ok(counts_ok)
            ),
            format!("theta = {:.6} (required < 0): {}", v.theta, ok(theta_ok)),
        ],
    );
    assert!(pass);
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

#[test]
fn criterion_3_identity_suite() {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut worst = [0.0_f64; 5];
    let mut inertia_ok = true;
    let mut failures = Vec::new();
    for omega in OMEGAS {
        let (points, reach) = curve_points(omega, 256, 20);
        let analyses: Vec<Analysis> = points.par_iter().map(|w| analyze(w, NEWTON_TOL, None).unwrap()).collect();
        details.push(format!(
            "omega = {omega}: 20 points on c in [{:.4}, {:.4}] (target end {}, resolved to {reach:.4})",
            points[0].c,
            points[19].c,
            0.5 * omega + 2.0
        ));
        for a in &analyses {
            let id = &a.identities;
            worst[0] = worst[0].max(id.det_a0);
            worst[1] = worst[1].max(id.entry_a12);
            worst[2] = worst[2].max(id.int_h_closed);
            if a.verdict.d_c.abs() > 10.0 * fold_tol(a.verdict.c, omega) {
                worst[3] = worst[3].max(id.inner_dc);
            }
            worst[4] = worst[4].max(id.chi).max(id.big_phi);
            let (l, s) = (&a.spectrum_l, &a.spectrum_sms);
            if (l.n_neg, l.n_zero) != (s.n_neg, s.n_zero) {
                inertia_ok = false;
                failures.push(format!("inertia mismatch at omega = {omega}, c = {}", a.verdict.c));
            }
        }
    }
    let limits = [1e-4, 1e-4, 1e-4, 1e-3, 1e-6];
    let names = [
        "(a) det A(0) = -(dE/dc)<L^-1 1,1>",
        "(b) <L^-1(phi - phi''),1> = -(dA/dc)<L^-1 1,1>",
        "(c) int h = -2 y1'(2pi)(c - phi(0))/(2c + omega)",
        "(d) <L^-1 1,1> = 2 pi omega/d_c",
        "(e) chi and Phi closed forms",
    ];
    let mut pass = inertia_ok;
    for i in 0..5 {
        let good = worst[i] <= limits[i];
        pass &= good;
        details.push(format!("{}: max rel {:.3e} (limit {:e}): {}", names[i], worst[i], limits[i], ok(good)));
    }
    details.push(format!("(f) inertia(L) = inertia(SMS) at every point: {}", ok(inertia_ok)));
    details.extend(failures);
    let elapsed = t.elapsed();
    pass &= elapsed.as_secs_f64() < 300.0;
    report("3", "identity suite", pass, elapsed, &details);
    assert!(pass);
}

#[test]
fn criterion_4_energy_monotone_sweeps() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for omega in OMEGAS {
        let cfg = RunConfig {
            omega,
            c_start: 0.51 * omega,
            c_end: 0.5 * omega + 2.0,
            c_step: 0.05,
            n_modes: 256,
            output_dir: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let mut sink = Vec::new();
        let out = cmd_sweep(&cfg, &mut sink).unwrap();
        let table = Table::read(&out.csv).unwrap();
        let c = table.column("c").unwrap();
        let e = table.column("E").unwrap();
        let increasing = e.windows(2).all(|p| p[1] > p[0]);
        let stable = out.rows.iter().all(|r| r.decision == "spectrally_stable");
        pass &= increasing && stable;
        details.push(format!(
            "omega = {omega}: {} rows, c in [{:.4}, {:.4}], E strictly increasing: {}, all spectrally_stable: {}",
            c.len(),
            c[0],
            c[c.len() - 1],
            ok(increasing),
            ok(stable)
        ));
    }
    let elapsed = t.elapsed();
    pass &= elapsed.as_secs_f64() < 600.0;
    report("4", "energy curves and verdicts", pass, elapsed, &details);
    assert!(pass);
}

#[test]
fn criterion_5_floquet_cross_validation() {
    let t = Instant::now();
    let mut worst = 0.0_f64;
    let mut mismatches = Vec::new();
    let mut tested = 0;
    for omega in OMEGAS {
        let (points, _) = curve_points(omega, 128, 8);
        for w in &points {
            tested += 1;
            match floquet_report(w, None) {
                Ok(f) => {
                    let rel = (f.theta - f.theta_fit).abs() / f.theta.abs().max(f.theta_fit.abs());
                    worst = worst.max(rel);
                    let direct = weighted_hill_eigenvalues(w).ok().and_then(|ev| classification_from_spectrum(&ev));
                    if direct != Some(f.classification) {
                        mismatches.push(format!(
                            "omega = {omega}, c = {:.4}: floquet {} vs eigensolve {:?}",
                            w.c,
                            f.classification.as_str(),
                            direct.map(|c| c.as_str())
                        ));
                    }
                }
                Err(e) => mismatches.push(format!("omega = {omega}, c = {:.4}: {e}", w.c)),
            }
        }
    }
    let pass = worst <= 1e-5 && mismatches.is_empty();
    let mut details = vec![
        format!("{tested} points; max relative theta disagreement {worst:.3e} (limit 1e-5)"),
        format!("classification mismatches: {}", mismatches.len()),
    ];
    details.extend(mismatches);
    report("5", "Floquet cross-validation", pass, t.elapsed(), &details);
    assert!(pass);
}

/// The ω = 1, c = 0.8 wave on the 128-point grid, continued on a finer grid
/// and re-solved after resampling.
fn evolution_wave() -> WavePoint {
    let fine = Grid::new(256).unwrap();
    let curve = continue_family(&fine, 1.0, 0.51, 0.8, 0.02, NEWTON_TOL).unwrap();
    assert!((curve.c_reached() - 0.8).abs() < 1e-12);
    let coarse = Grid::new(64).unwrap();
    let seed = curve.points.last().unwrap().phi.resample(&coarse);
    newton_refine(&seed, 0.8, 1.0, NEWTON_TOL).unwrap()
}

#[test]
fn criterion_6_evolution() {
    let t = Instant::now();
    let w = evolution_wave();
    let still = run_orbital_experiment(
        &w,
        &ExperimentConfig { perturbation_size: 0.0, t_final: 10.0, dt: 1e-3, dt_out: 0.5, perturbation: Perturbation::Standard },
    )
    .unwrap();
    let kicked = run_orbital_experiment(
        &w,
        &ExperimentConfig { perturbation_size: 1e-2, t_final: 50.0, dt: 1e-3, dt_out: 0.5, perturbation: Perturbation::Standard },
    )
    .unwrap();
    let still_ok = still.max_distance <= 1e-7;
    let ratio = kicked.max_distance / kicked.initial_distance;
    let ratio_ok = ratio <= 5.0;
    let drift = kicked.max_drift.iter().chain(&still.max_drift).fold(0.0_f64, |m, &d| m.max(d));
    let drift_ok = drift <= 1e-8;
    let elapsed = t.elapsed();
    let pass = still_ok && ratio_ok && drift_ok && elapsed.as_secs_f64() < 300.0;
    report(
        "6",
        "evolution corroboration",
        pass,
        elapsed,
        &[
            format!(
                "wave: c = 0.8, 128 points, spectral tail {:.2e}, residual {:.2e}",
                w.spectral_tail, w.residual_norm
            ),
            format!("unperturbed max distance to T = 10: {:.3e} (limit 1e-7): {}", still.max_distance, ok(still_ok)),
            format!(
                "1% perturbation: initial {:.4e}, max {:.4e}, ratio {ratio:.4} (limit 5) to T = 50: {}",
                kicked.initial_distance,
                kicked.max_distance,
                ok(ratio_ok)
            ),
            format!("max relative drift of M, E, F: {drift:.3e} (limit 1e-8): {}", ok(drift_ok)),
            format!("sanity: distance of the wave to its own orbit {:.1e}", orbital_distance(&w.phi.to_field(), &w.phi)),
        ],
    );
    assert!(pass);
}

fn trig_field(grid: &Arc<Grid>, coeffs: &[f64]) -> Field {
    Field::from_fn(grid, |x| coeffs.iter().enumerate().map(|(k, a)| a * (((k + 1) as f64) * x).cos()).sum())
}

#[test]
fn criterion_7_property_suite() {
    let t = Instant::now();
    let grid = Grid::new(64).unwrap();
    let mut round_trip = 0.0_f64;
    for coeffs in [vec![1.0], vec![0.3, -0.2, 0.1, 0.05], (1..=63).map(|k| 1.0 / (k * k) as f64).collect()] {
        let f = trig_field(&grid, &coeffs);
        let back = synthesize(&analyze_even(&f, SYMMETRY_TOL).unwrap());
        round_trip = round_trip.max(back.sub(&f).max_abs() / f.max_abs());
        let p = WaveProfile::new(&grid, coeffs.clone()).unwrap();
        let again = analyze_even(&synthesize(&p), SYMMETRY_TOL).unwrap();
        let err = p.coeffs().iter().zip(again.coeffs()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        round_trip = round_trip.max(err / p.coeff_norm());
    }

    let mut wronskian = 0.0_f64;
    let mut kernel = 0.0_f64;
    let mut operator = 0.0_f64;
    for omega in OMEGAS {
        let (points, _) = curve_points(omega, 128, 5);
        for w in &points {
            let a = analyze(w, NEWTON_TOL, None).unwrap();
            wronskian = wronskian.max(a.floquet.wronskian_drift);
            kernel = kernel.max(a.identities.l_dphi).max(a.identities.lpi_dphi);
            operator = operator.max(a.identities.l_phi).max(a.identities.l_one).max(a.identities.l_dc);
        }
    }

    let mut doubling = 0.0_f64;
    for (omega, c) in [(1.0, 0.6), (2.0, 1.3), (5.0, 3.0)] {
        let g64 = Grid::new(64).unwrap();
        let g128 = Grid::new(128).unwrap();
        let seed = stokes_seed(&g64, 0.05 * omega, omega).unwrap();
        let curve = continue_family(&g64, omega, seed.c.max(stokes_speed(0.05 * omega, omega)), c, 0.05, NEWTON_TOL).unwrap();
        let w64 = curve.points.last().unwrap();
        let w128 = newton_refine(&w64.phi.resample(&g128), c, omega, NEWTON_TOL).unwrap();
        let (e1, e2) = (w64.phi.e_functional(), w128.phi.e_functional());
        doubling = doubling.max((e1 - e2).abs() / e2);
    }

    let checks = [
        ("spectral round trips", round_trip, 1e-12),
        ("Wronskian/Abel drift", wronskian, 1e-8),
        ("L phi' and LPi phi' residuals", kernel, 1e-8),
        ("operator identities for L phi, L 1, L d(phi)/dc", operator, 1e-6),
        ("grid-doubling change of E", doubling, 1e-10),
    ];
    let pass = checks.iter().all(|(_, v, lim)| v <= lim);
    let details: Vec<String> =
        checks.iter().map(|(n, v, lim)| format!("{n}: {v:.3e} (limit {lim:e}): {}", ok(v <= lim))).collect();
    report("7", "property suite", pass, t.elapsed(), &details);
    assert!(pass);
}
