//! Command-line surface: configuration, commands, CSV tables and SVG plots.
//!
//! Every command writes its human-readable summary to a caller-supplied sink
//! and its tables under the configured output directory. Errors map onto
//! process exit codes through [`CliError::exit_code`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::Error;
use crate::evolution::{run_orbital_experiment, ExperimentConfig, Perturbation};
use crate::spectral::Grid;
use crate::stability::{analyze, Analysis};
use crate::wave::{
    continue_family, newton_refine, stokes_amplitude, stokes_seed, stokes_speed, StopReason, WavePoint,
    A_MAX_FACTOR,
};

/// Environment variable capping the number of sweep workers.
pub const THREADS_ENV: &str = "RCHWAVE_THREADS";

/// Columns of the sweep table, in order.
pub const SWEEP_COLUMNS: [&str; 15] = [
    "c",
    "A",
    "E",
    "F",
    "d_c",
    "dA_dc",
    "dE_dc",
    "theta",
    "n_L",
    "z_L",
    "n_LPi",
    "z_LPi",
    "det_A0",
    "inner_L_inv_1_1",
    "decision",
];

/// Columns of the family table written by `trace`.
pub const TRACE_COLUMNS: [&str; 11] =
    ["omega", "c", "A", "E", "F", "M", "amplitude", "min_gap", "residual_norm", "spectral_tail", "iterations"];

/// Columns of the time series written by `evolve`.
pub const EVOLVE_COLUMNS: [&str; 5] = ["t", "distance", "M", "E", "F"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure at c = {c}: {source}")]
    Numerical { c: f64, source: Error },
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 1 for configuration and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical { .. } => 2,
        }
    }
}

/// Attaches the speed at which a library call failed. Domain errors are
/// the user's input and count as configuration errors.
fn at_speed(c: f64) -> impl Fn(Error) -> CliError {
    move |e| match e {
        Error::Domain(msg) => CliError::Config(msg),
        e => CliError::Numerical { c: e.speed().unwrap_or(c), source: e },
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Settings of an evolution run.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolveSettings {
    pub perturbation_size: f64,
    pub t_final: f64,
    pub dt: f64,
    pub dt_out: f64,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        EvolveSettings { perturbation_size: d.perturbation_size, t_final: d.t_final, dt: d.dt, dt_out: d.dt_out }
    }
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    /// Target speed of `analyze` and `evolve`.
    pub c: Option<f64>,
    pub c_start: f64,
    pub c_end: f64,
    pub c_step: f64,
    pub n_modes: usize,
    pub newton_tol: f64,
    pub output_dir: PathBuf,
    pub seed_amplitude: f64,
    pub evolve: EvolveSettings,
    /// Seed of the random perturbation; `None` selects the fixed one.
    pub seed_rng: Option<u64>,
}

/// Values gathered from a config file and the command line before defaults
/// that depend on ω are filled in.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartialConfig {
    pub omega: Option<f64>,
    pub c: Option<f64>,
    pub c_start: Option<f64>,
    pub c_end: Option<f64>,
    pub c_step: Option<f64>,
    pub n_modes: Option<usize>,
    pub newton_tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub seed_amplitude: Option<f64>,
    pub perturbation_size: Option<f64>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub dt_out: Option<f64>,
    pub seed_rng: Option<u64>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("cannot parse value {value:?} for key {key:?}")))
}

impl PartialConfig {
    /// Sets one key. Accepts both the file names and the flag spellings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "omega" => self.omega = Some(parse_value(key, value)?),
            "c" => self.c = Some(parse_value(key, value)?),
            "c_start" | "c-start" => self.c_start = Some(parse_value(key, value)?),
            "c_end" | "c-end" => self.c_end = Some(parse_value(key, value)?),
            "c_step" | "c-step" => self.c_step = Some(parse_value(key, value)?),
            "n_modes" | "modes" => self.n_modes = Some(parse_value(key, value)?),
            "newton_tol" | "tol" => self.newton_tol = Some(parse_value(key, value)?),
            "output_dir" | "out" => self.output_dir = Some(PathBuf::from(value)),
            "seed_amplitude" | "amplitude" => self.seed_amplitude = Some(parse_value(key, value)?),
            "perturbation_size" | "perturbation" => self.perturbation_size = Some(parse_value(key, value)?),
            "T" | "t_final" => self.t_final = Some(parse_value(key, value)?),
            "dt" => self.dt = Some(parse_value(key, value)?),
            "dt_out" | "dt-out" => self.dt_out = Some(parse_value(key, value)?),
            "seed_rng" | "seed-rng" => self.seed_rng = Some(parse_value(key, value)?),
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<PartialConfig, CliError> {
        let mut cfg = PartialConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("line {}: {msg}", i + 1)),
                e => e,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PartialConfig, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        PartialConfig::parse(&text)
    }

    /// Values in `other` win.
    pub fn overlay(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            omega: other.omega.or(self.omega),
            c: other.c.or(self.c),
            c_start: other.c_start.or(self.c_start),
            c_end: other.c_end.or(self.c_end),
            c_step: other.c_step.or(self.c_step),
            n_modes: other.n_modes.or(self.n_modes),
            newton_tol: other.newton_tol.or(self.newton_tol),
            output_dir: other.output_dir.or(self.output_dir),
            seed_amplitude: other.seed_amplitude.or(self.seed_amplitude),
            perturbation_size: other.perturbation_size.or(self.perturbation_size),
            t_final: other.t_final.or(self.t_final),
            dt: other.dt.or(self.dt),
            dt_out: other.dt_out.or(self.dt_out),
            seed_rng: other.seed_rng.or(self.seed_rng),
        }
    }

    /// Fills defaults and validates.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let omega = self.omega.unwrap_or(1.0);
        check_omega(omega)?;
        let ev = EvolveSettings::default();
        let cfg = RunConfig {
            omega,
            c: self.c,
            c_start: self.c_start.unwrap_or(0.51 * omega),
            c_end: self.c_end.unwrap_or(0.5 * omega + 2.5),
            c_step: self.c_step.unwrap_or(0.02),
            n_modes: self.n_modes.unwrap_or(64),
            newton_tol: self.newton_tol.unwrap_or(crate::wave::NEWTON_TOL),
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            seed_amplitude: self.seed_amplitude.unwrap_or(0.1),
            evolve: EvolveSettings {
                perturbation_size: self.perturbation_size.unwrap_or(ev.perturbation_size),
                t_final: self.t_final.unwrap_or(ev.t_final),
                dt: self.dt.unwrap_or(ev.dt),
                dt_out: self.dt_out.unwrap_or(ev.dt_out),
            },
            seed_rng: self.seed_rng,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_omega(omega: f64) -> Result<(), CliError> {
    if omega == 0.0 {
        return Err(CliError::Config(
            "omega = 0 is not supported: for the classical equation the continuous curve of smooth \
             zero-mean periodic traveling waves does not exist"
                .into(),
        ));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(CliError::Config(format!("omega must be positive and finite, got {omega}")));
    }
    Ok(())
}

impl Default for RunConfig {
    fn default() -> Self {
        PartialConfig::default().resolve().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_omega(self.omega)?;
        let half = 0.5 * self.omega;
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.c_start > half) {
            return bad(format!("c_start = {} must exceed omega/2 = {half}", self.c_start));
        }
        if !(self.c_end > self.c_start) {
            return bad(format!("c_end = {} must exceed c_start = {}", self.c_end, self.c_start));
        }
        if let Some(c) = self.c {
            if !(c > half) {
                return bad(format!("c = {c} must exceed omega/2 = {half}"));
            }
        }
        if self.n_modes < 8 {
            return bad(format!("modes = {} is below the minimum of 8", self.n_modes));
        }
        let positive = [
            ("c_step", self.c_step),
            ("tol", self.newton_tol),
            ("amplitude", self.seed_amplitude),
            ("T", self.evolve.t_final),
            ("dt", self.evolve.dt),
            ("dt_out", self.evolve.dt_out),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.evolve.perturbation_size >= 0.0) {
            return bad(format!("perturbation must be non-negative, got {}", self.evolve.perturbation_size));
        }
        Ok(())
    }

    fn grid(&self) -> Result<std::sync::Arc<Grid>, CliError> {
        Grid::new(self.n_modes).map_err(at_speed(f64::NAN))
    }

    fn require_c(&self) -> Result<f64, CliError> {
        self.c.ok_or_else(|| CliError::Config("this command needs --c".into()))
    }

    fn output_path(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.output_dir).map_err(io_err(&self.output_dir))?;
        Ok(self.output_dir.join(name))
    }
}

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Io { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

/// Converged wave at speed `c`, reached by continuation from onset when the
/// Stokes seed is too far away.
pub fn wave_at(cfg: &RunConfig, c: f64) -> Result<WavePoint, CliError> {
    let grid = cfg.grid()?;
    let omega = cfg.omega;
    let a_max = A_MAX_FACTOR * omega;
    let a = stokes_amplitude(c, omega);
    if a <= a_max {
        let seed = stokes_seed(&grid, a, omega).map_err(at_speed(c))?;
        return newton_refine(&seed.phi, c, omega, cfg.newton_tol).map_err(at_speed(c));
    }
    let onset = stokes_speed(0.5 * a_max, omega);
    let curve = continue_family(&grid, omega, onset, c, cfg.c_step, cfg.newton_tol).map_err(at_speed(c))?;
    match curve.stop {
        StopReason::Completed => curve.points.last().cloned().ok_or_else(|| CliError::Config("empty family".into())),
        stop => Err(CliError::Numerical {
            c,
            source: Error::Domain(format!(
                "the branch cannot be resolved up to c = {c} with {} modes ({})",
                cfg.n_modes,
                describe_stop(&stop)
            )),
        }),
    }
}

fn describe_stop(stop: &StopReason) -> String {
    match stop {
        StopReason::Completed => "completed".into(),
        StopReason::ResolutionLimit { c, tail } => {
            format!("resolution limit at c = {c}: spectral tail {tail:.3e}; increase --modes")
        }
        StopReason::GapClosing { c, min_gap } => {
            format!("crest gap c - max(phi) = {min_gap:.3e} at c = {c}: the profile approaches a peaked wave")
        }
    }
}

/// Summary printed by `seed`.
#[derive(Clone, Debug)]
pub struct SeedSummary {
    pub seed: WavePoint,
    pub refined: Option<WavePoint>,
}

/// Stokes seed at amplitude `cfg.seed_amplitude`, followed by a Newton solve.
pub fn cmd_seed(cfg: &RunConfig, out: &mut dyn Write) -> Result<SeedSummary, CliError> {
    let grid = cfg.grid()?;
    let seed = stokes_seed(&grid, cfg.seed_amplitude, cfg.omega).map_err(at_speed(f64::NAN))?;
    let mut text = String::new();
    let _ = writeln!(text, "stokes seed: a = {}, omega = {}", cfg.seed_amplitude, cfg.omega);
    let _ = writeln!(text, "  c = {}", fmt_f64(seed.c));
    let _ = writeln!(text, "  A = {}", fmt_f64(seed.a_const));
    let _ = writeln!(text, "  max phi = {}", fmt_f64(seed.amplitude()));
    let _ = writeln!(text, "  seed residual = {:.3e}", seed.residual_norm);
    let refined = match newton_refine(&seed.phi, seed.c, cfg.omega, cfg.newton_tol) {
        Ok(w) => {
            let _ = writeln!(text, "newton: {} iterations, residual {:.3e}", w.iterations, w.residual_norm);
            let _ = writeln!(text, "  A = {}", fmt_f64(w.a_const));
            let _ = writeln!(text, "  max phi = {}", fmt_f64(w.amplitude()));
            let _ = writeln!(text, "  min(c - phi) = {}", fmt_f64(w.min_gap));
            let _ = writeln!(text, "  spectral tail = {:.3e}", w.spectral_tail);
            Some(w)
        }
        Err(e) => {
            let _ = writeln!(text, "newton: {e}");
            None
        }
    };
    emit(out, &text)?;
    Ok(SeedSummary { seed, refined })
}

fn omega_tag(omega: f64) -> String {
    format!("omega{omega}")
}

/// Traces the family and writes `trace_omega<ω>.csv`.
pub fn cmd_trace(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let grid = cfg.grid()?;
    let curve = continue_family(&grid, cfg.omega, cfg.c_start, cfg.c_end, cfg.c_step, cfg.newton_tol)
        .map_err(at_speed(cfg.c_start))?;
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|w| {
            let q = w.conserved();
            vec![
                fmt_f64(w.omega),
                fmt_f64(w.c),
                fmt_f64(w.a_const),
                fmt_f64(q.e),
                fmt_f64(q.f),
                fmt_f64(q.m),
                fmt_f64(w.amplitude()),
                fmt_f64(w.min_gap),
                fmt_f64(w.residual_norm),
                fmt_f64(w.spectral_tail),
                w.iterations.to_string(),
            ]
        })
        .collect();
    let path = cfg.output_path(&format!("trace_{}.csv", omega_tag(cfg.omega)))?;
    write_csv(&path, &TRACE_COLUMNS, &rows)?;
    emit(out, &format!("{} points, c up to {}; {}\nwrote {}\n", curve.len(), curve.c_reached(), describe_stop(&curve.stop), path.display()))?;
    Ok(path)
}

/// Multi-line report of one analysis.
pub fn format_analysis(a: &Analysis) -> String {
    let v = &a.verdict;
    let id = &a.identities;
    let mut s = String::new();
    let _ = writeln!(s, "decision = {}", v.decision.as_str());
    let _ = writeln!(s, "criterion = {}", v.criterion.as_str());
    let _ = writeln!(s, "dc_dA_route_holds = {}", v.dc_da_holds);
    for (k, x) in [
        ("c", v.c),
        ("omega", v.omega),
        ("A", a.scalars.a_const),
        ("E", a.scalars.e),
        ("F", a.scalars.f),
        ("d_c", v.d_c),
        ("dA_dc", v.da_dc),
        ("dE_dc", v.de_dc),
        ("theta", v.theta),
        ("theta_fit", a.floquet.theta_fit),
        ("det_A0", v.det_a0),
        ("inner_L_inv_1_1", v.inner_l_inv_1_1),
        ("vakhitov_kolokolov", a.vk),
        ("int_h", a.int_h),
        ("h0", a.h0),
        ("int_y1", a.floquet.y1_integral),
        ("wronskian_drift", a.floquet.wronskian_drift),
    ] {
        let _ = writeln!(s, "{k} = {}", fmt_f64(x));
    }
    for (k, n) in [("n_L", v.n_l), ("z_L", v.z_l), ("n_LPi", v.n_lpi), ("z_LPi", v.z_lpi)] {
        let _ = writeln!(s, "{k} = {n}");
    }
    if let Some(counts) = &a.counts {
        let _ = writeln!(s, "constrained_count = {}", counts.constrained);
    }
    let _ = writeln!(s, "floquet_classification = {}", a.floquet.classification.as_str());
    let _ = writeln!(
        s,
        "hill_classification = {}",
        a.hill_classification.map_or("undetermined", |c| c.as_str())
    );
    let _ = writeln!(s, "identity residuals:");
    for (k, x) in [
        ("L dphi", id.l_dphi),
        ("LPi dphi", id.lpi_dphi),
        ("L phi", id.l_phi),
        ("L 1", id.l_one),
        ("L dphi/dc", id.l_dc),
        ("det A(0)", id.det_a0),
        ("A12 entry", id.entry_a12),
        ("<L^-1 1,1> vs d_c", id.inner_dc),
        ("int h closed form", id.int_h_closed),
        ("int y1", id.int_y1),
        ("chi", id.chi),
        ("Phi", id.big_phi),
        ("L^-1(phi - phi'')", id.u_closed),
        ("vakhitov-kolokolov", id.vakhitov_kolokolov),
        ("M phi2", id.hill_phi2),
        ("SMS kernel alignment", id.sms_kernel_alignment),
        ("LPi kernel alignment", id.lpi_kernel_alignment),
    ] {
        let _ = writeln!(s, "  {k}: {x:.3e}");
    }
    s
}

/// Full analysis of the wave at `cfg.c`.
pub fn cmd_analyze(cfg: &RunConfig, out: &mut dyn Write) -> Result<Analysis, CliError> {
    let c = cfg.require_c()?;
    let w = wave_at(cfg, c)?;
    let a = analyze(&w, cfg.newton_tol, None).map_err(at_speed(c))?;
    emit(out, &format_analysis(&a))?;
    Ok(a)
}

/// One row of the sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub a: f64,
    pub e: f64,
    pub f: f64,
    pub d_c: f64,
    pub da_dc: f64,
    pub de_dc: f64,
    pub theta: f64,
    pub n_l: usize,
    pub z_l: usize,
    pub n_lpi: usize,
    pub z_lpi: usize,
    pub det_a0: f64,
    pub inner_l_inv_1_1: f64,
    pub decision: String,
}

impl SweepRow {
    pub fn from_analysis(a: &Analysis) -> SweepRow {
        let v = &a.verdict;
        SweepRow {
            c: v.c,
            a: a.scalars.a_const,
            e: a.scalars.e,
            f: a.scalars.f,
            d_c: v.d_c,
            da_dc: v.da_dc,
            de_dc: v.de_dc,
            theta: v.theta,
            n_l: v.n_l,
            z_l: v.z_l,
            n_lpi: v.n_lpi,
            z_lpi: v.z_lpi,
            det_a0: v.det_a0,
            inner_l_inv_1_1: v.inner_l_inv_1_1,
            decision: v.decision.as_str().to_string(),
        }
    }

    pub fn record(&self) -> Vec<String> {
        let mut r: Vec<String> =
            [self.c, self.a, self.e, self.f, self.d_c, self.da_dc, self.de_dc, self.theta].map(fmt_f64).into();
        r.extend([self.n_l, self.z_l, self.n_lpi, self.z_lpi].map(|n| n.to_string()));
        r.extend([fmt_f64(self.det_a0), fmt_f64(self.inner_l_inv_1_1), self.decision.clone()]);
        r
    }
}

/// Result of a sweep.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub stop: StopReason,
}

/// Worker count from the environment, or `None` for the rayon default.
pub fn worker_limit() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Continues the family sequentially, analyzes the points in parallel, and
/// writes `sweep_omega<ω>.csv` with an SVG of E against c.
pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<SweepOutput, CliError> {
    let grid = cfg.grid()?;
    let curve = continue_family(&grid, cfg.omega, cfg.c_start, cfg.c_end, cfg.c_step, cfg.newton_tol)
        .map_err(at_speed(cfg.c_start))?;
    if curve.is_empty() {
        return Err(CliError::Numerical {
            c: cfg.c_start,
            source: Error::Domain(format!("no resolved wave: {}", describe_stop(&curve.stop))),
        });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_limit()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let tol = cfg.newton_tol;
    let rows = pool.install(|| {
        curve
            .points
            .par_iter()
            .map(|w| analyze(w, tol, None).map(|a| SweepRow::from_analysis(&a)).map_err(at_speed(w.c)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let tag = omega_tag(cfg.omega);
    let csv = cfg.output_path(&format!("sweep_{tag}.csv"))?;
    write_csv(&csv, &SWEEP_COLUMNS, &rows.iter().map(SweepRow::record).collect::<Vec<_>>())?;
    let xs: Vec<f64> = rows.iter().map(|r| r.c).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.e).collect();
    let svg = cfg.output_path(&format!("sweep_{tag}_E.svg"))?;
    let doc = render_svg(&xs, &ys, "c", "E", &format!("E(φ) against c, ω = {}", cfg.omega))?;
    fs::write(&svg, doc).map_err(io_err(&svg))?;
    let stable = rows.iter().filter(|r| r.decision == "spectrally_stable").count();
    emit(
        out,
        &format!(
            "{} points, c in [{}, {}]; {}\n{stable} of {} spectrally stable\nwrote {}\nwrote {}\n",
            rows.len(),
            xs[0],
            xs[xs.len() - 1],
            describe_stop(&curve.stop),
            rows.len(),
            csv.display(),
            svg.display()
        ),
    )?;
    Ok(SweepOutput { rows, csv, svg, stop: curve.stop })
}

/// Perturbs the wave at `cfg.c`, evolves it and writes the time series.
pub fn cmd_evolve(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let c = cfg.require_c()?;
    let w = wave_at(cfg, c)?;
    let perturbation = match cfg.seed_rng {
        Some(seed) => {
            log::info!("random perturbation with seed {seed}");
            Perturbation::Random { seed }
        }
        None => Perturbation::Standard,
    };
    let ev = &cfg.evolve;
    let exp = ExperimentConfig {
        perturbation_size: ev.perturbation_size,
        t_final: ev.t_final,
        dt: ev.dt,
        dt_out: ev.dt_out,
        perturbation,
    };
    let run = run_orbital_experiment(&w, &exp).map_err(at_speed(c))?;
    let rows: Vec<Vec<String>> =
        run.samples.iter().map(|s| [s.t, s.distance, s.m, s.e, s.f].map(fmt_f64).into()).collect();
    let path = cfg.output_path(&format!("evolve_{}_c{c}.csv", omega_tag(cfg.omega)))?;
    write_csv(&path, &EVOLVE_COLUMNS, &rows)?;
    let ratio = if run.initial_distance > 0.0 { run.max_distance / run.initial_distance } else { f64::NAN };
    emit(
        out,
        &format!(
            "initial distance = {:.6e}\nmax distance = {:.6e} (ratio {ratio:.4})\ndrift M, E, F = {:.3e}, {:.3e}, {:.3e}\nwrote {}\n",
            run.initial_distance,
            run.max_distance,
            run.max_drift[0],
            run.max_drift[1],
            run.max_drift[2],
            path.display()
        ),
    )?;
    Ok(path)
}

/// A numeric table read back from CSV.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table, CliError> {
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if header.iter().all(|h| h.is_empty()) || rows.is_empty() {
            return Err(CliError::Config(format!("{} has no data rows", path.display())));
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let i = self.header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!("no column {name:?}; available: {}", self.header.join(", ")))
        })?;
        self.rows
            .iter()
            .map(|r| {
                r.get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| CliError::Config(format!("column {name:?} holds a non-numeric value")))
            })
            .collect()
    }
}

/// Renders one column against another as an SVG line chart.
pub fn cmd_plot(cfg: &RunConfig, csv_path: &Path, x: &str, y: &str, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let table = Table::read(csv_path)?;
    let xs = table.column(x)?;
    let ys = table.column(y)?;
    let omega = table.column("omega").ok().and_then(|o| o.first().copied()).unwrap_or(cfg.omega);
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let path = cfg.output_path(&format!("{stem}_{y}_vs_{x}.svg"))?;
    let doc = render_svg(&xs, &ys, x, y, &format!("{y} against {x}, ω = {omega}"))?;
    fs::write(&path, doc).map_err(io_err(&path))?;
    emit(out, &format!("wrote {}\n", path.display()))?;
    Ok(path)
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|i| first + i as f64 * step)
        .take_while(|&t| t <= hi + 1e-9 * span)
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static SVG line chart with labelled axes.
pub fn render_svg(xs: &[f64], ys: &[f64], x_label: &str, y_label: &str, title: &str) -> Result<String, CliError> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).map(|(&x, &y)| (x, y)).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.is_empty() {
        return Err(CliError::Config("nothing to plot: no finite data points".into()));
    }
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (90.0, 30.0, 50.0, 60.0);
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi > lo {
            (lo, hi)
        } else {
            let pad = 0.5 * lo.abs().max(1.0);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="18" font-family="sans-serif">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for t in nice_ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, h - bottom, h - bottom + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="12" font-family="sans-serif">{t:.4}</text>"#, h - bottom + 20.0);
    }
    for t in nice_ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="12" font-family="sans-serif">{t:.4e}</text>"#, left - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14" font-family="sans-serif">{}</text>"#, (left + w - right) / 2.0, h - 15.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="20" y="{0}" text-anchor="middle" font-size="14" font-family="sans-serif" transform="rotate(-90 20 {0})">{1}</text>"#, (top + h - bottom) / 2.0, escape(y_label));
    let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, poly.join(" "));
    s.push_str("</svg>\n");
    Ok(s)
}

/// Flags shared by all subcommands. Flags override config file values.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long = "c-start", global = true)]
    pub c_start: Option<f64>,
    #[arg(long = "c-end", global = true)]
    pub c_end: Option<f64>,
    #[arg(long = "c-step", global = true)]
    pub c_step: Option<f64>,
    /// Number of Fourier modes (grid has twice as many points).
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Newton tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key = value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed amplitude for `seed`.
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    /// Relative H¹ size of the perturbation for `evolve`.
    #[arg(long, global = true)]
    pub perturbation: Option<f64>,
    /// Final time for `evolve`.
    #[arg(long = "T", global = true)]
    pub t_final: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long = "dt-out", global = true)]
    pub dt_out: Option<f64>,
    /// Seed of a random perturbation direction (logged).
    #[arg(long = "seed-rng", global = true)]
    pub seed_rng: Option<u64>,
}

impl Flags {
    /// Loads the config file, if any, and applies the flags over it.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => PartialConfig::load(p)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            omega: self.omega,
            c: self.c,
            c_start: self.c_start,
            c_end: self.c_end,
            c_step: self.c_step,
            n_modes: self.modes,
            newton_tol: self.tol,
            output_dir: self.out.clone(),
            seed_amplitude: self.amplitude,
            perturbation_size: self.perturbation,
            t_final: self.t_final,
            dt: self.dt,
            dt_out: self.dt_out,
            seed_rng: self.seed_rng,
        };
        base.overlay(flags).resolve()
    }
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Stokes seed and its Newton refinement.
    Seed,
    /// Continue the family in c and write its table.
    Trace,
    /// Spectral analysis and stability verdict at --c.
    Analyze,
    /// Trace, analyze every point, and plot E against c.
    Sweep,
    /// Perturbed evolution at --c with orbital distances.
    Evolve,
    /// SVG line chart of two CSV columns.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "c")]
        x: String,
        #[arg(long, default_value = "E")]
        y: String,
    },
}

#[derive(Parser, Clone, Debug)]
#[command(name = "rchwave", version, about = "Periodic traveling waves of the regularized Camassa-Holm equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Runs a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.flags.resolve()?;
    match &cli.command {
        Command::Seed => cmd_seed(&cfg, out).map(drop),
        Command::Trace => cmd_trace(&cfg, out).map(drop),
        Command::Analyze => cmd_analyze(&cfg, out).map(drop),
        Command::Sweep => cmd_sweep(&cfg, out).map(drop),
        Command::Evolve => cmd_evolve(&cfg, out).map(drop),
        Command::Plot { csv, x, y } => cmd_plot(&cfg, csv, x, y, out).map(drop),
    }
}
