//! Command-line front end. Every subcommand produces a [`Table`] whose rows
//! start with `command`, `config_hash` and `seed`; the table is written as CSV
//! (header row, 17 significant digits) or as a JSON array of row objects.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::measures::{fit_scaling, measure_all};
use crate::oracles::{
    haar_flatness_std, haar_flatness_std_asymptotic, haar_mean_flatness, haar_mean_stabilizer_purity,
    sample_haar_state,
};
use crate::orbit::{
    orbit_average_mc, samples_to_accuracy, substream, theorem_reference, AccuracyConfig, McConfig,
    Protocol,
};
use crate::readout::{
    device_experiment, theta_grid, DeviceConfig, NegativityPolicy, ReadoutModel, DEFAULT_P, DEFAULT_Q,
    DEFAULT_REALIZATIONS, DEFAULT_SHOTS,
};
use crate::state::{Statevector, MAX_QUBITS};

/// Largest register for which the exact `M₂` is attached to orbit rows.
pub const EXACT_REFERENCE_MAX_QUBITS: usize = 12;

/// Stream index reserved for drawing Haar states, disjoint from sample streams.
const STATE_STREAM: u64 = 1 << 63;

#[derive(Parser, Debug, Clone)]
#[command(name = "magic-flatness", version, about = "Stabilizer entropy and multifractal flatness of pure qubit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum Command {
    /// Exact measures of one state.
    Measure(MeasureArgs),
    /// Clifford-orbit average of the flatness and the recovered M₂.
    Orbit(OrbitArgs),
    /// Samples needed for a target σ(M₂) as a function of N.
    Scaling(ScalingArgs),
    /// Simulated two-qubit readout experiment.
    Device(DeviceArgs),
    /// Haar-ensemble reference values.
    HaarStats(HaarArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Measure(_) => "measure",
            Command::Orbit(_) => "orbit",
            Command::Scaling(_) => "scaling",
            Command::Device(_) => "device",
            Command::HaarStats(_) => "haar-stats",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StateArgs {
    #[arg(long, default_value_t = 1)]
    pub n_qubits: usize,

    /// zero | basis:<bits> | <bits> | bloch | t | rxx | haar
    #[arg(long, default_value = "zero")]
    pub state: String,

    /// Polar angle for `bloch`, rotation angle for `rxx`.
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta: f64,

    /// Azimuth for `bloch`.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub phi: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub state: StateArgs,

    /// Comma-separated Rényi indices.
    #[arg(long, default_value = "1,2", value_delimiter = ',')]
    pub q_list: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub state: StateArgs,

    /// Comma-separated protocols: global, local-walk, layer-walk, exact.
    #[arg(long, default_value = "global", value_delimiter = ',')]
    pub protocol: Vec<String>,

    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,

    /// Independent chains for the walk protocols.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,

    /// Walk steps discarded before recording.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScalingArgs {
    /// haar | t | bloch (product states use --theta/--phi)
    #[arg(long, default_value = "haar")]
    pub state: String,

    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta: f64,

    #[arg(long, default_value_t = FRAC_PI_4)]
    pub phi: f64,

    #[arg(long, default_value_t = 2)]
    pub n_min: usize,

    #[arg(long, default_value_t = 7)]
    pub n_max: usize,

    #[arg(long, default_value = "global")]
    pub protocol: String,

    #[arg(long, default_value_t = 0.1)]
    pub target_sigma: f64,

    /// States averaged per N (only meaningful for haar).
    #[arg(long, default_value_t = 4)]
    pub repeats: usize,

    #[arg(long, default_value_t = 1 << 22)]
    pub max_samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DeviceArgs {
    /// Explicit comma-separated angles; overrides --theta-points.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,

    /// Evenly spaced angles over [0, 2π].
    #[arg(long, default_value_t = 33)]
    pub theta_points: usize,

    #[arg(long, default_value_t = DEFAULT_REALIZATIONS)]
    pub realizations: usize,

    /// Shots per realization; 0 uses exact probabilities.
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    pub shots: u64,

    #[arg(long, default_value_t = DEFAULT_P)]
    pub noise_p: f64,

    #[arg(long, default_value_t = DEFAULT_Q)]
    pub noise_q: f64,

    /// Clip negative mitigated entries and renormalize before the flatness.
    #[arg(long)]
    pub clip: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HaarArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,

    #[arg(long, default_value_t = 10)]
    pub n_max: usize,

    /// Haar states drawn per N for empirical comparison (0 = none).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

/// One output cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_owned())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => s.clone().into(),
            Cell::Int(i) => (*i).into(),
            // non-finite floats have no JSON number form
            Cell::Float(x) if x.is_finite() => (*x).into(),
            Cell::Float(x) => x.to_string().into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// Fixed-column result table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Keys keep column order.
    pub fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
            for (j, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", serde_json::Value::from(*col), cell.json());
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Result of one invocation.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    /// A numerical flag was raised (out-of-range estimator or saturated cap).
    pub flagged: bool,
    /// Human-readable notes for stderr.
    pub notes: Vec<String>,
}

/// Hex SHA-256 prefix of the command and its settings. Output path, format and
/// thread count are excluded so every rendering of a run shares one hash.
pub fn config_hash(command: &Command, seed: u64) -> String {
    let body = serde_json::to_string(&(command.name(), command, seed)).expect("plain data serializes");
    let digest = Sha256::digest(body.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Builds the state described by `args`.
pub fn build_state(args: &StateArgs, seed: u64) -> Result<Statevector> {
    let n = args.n_qubits;
    if n == 0 || n > MAX_QUBITS {
        return Err(invalid(format!("--n-qubits must be in 1..={MAX_QUBITS}")));
    }
    let spec = args.state.trim();
    match spec {
        "zero" => Statevector::zero(n),
        "bloch" => Statevector::bloch(args.theta, args.phi).tensor_power(n),
        "t" => Statevector::bloch(FRAC_PI_2, FRAC_PI_4).tensor_power(n),
        "rxx" => {
            if n < 2 {
                return Err(invalid("rxx needs --n-qubits >= 2"));
            }
            let mut s = Statevector::zero(n)?;
            s.apply_rxx(args.theta, 0, 1)?;
            Ok(s)
        }
        "haar" => sample_haar_state(n, &mut substream(seed, STATE_STREAM)),
        _ => {
            let bits = spec.strip_prefix("basis:").unwrap_or(spec);
            if bits.len() != n {
                return Err(invalid(format!(
                    "state {spec:?} is not a recognized spec or a {n}-character bit string"
                )));
            }
            Statevector::basis(n, bits)
        }
    }
}

/// Runs one parsed invocation without touching the filesystem.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let hash = config_hash(&cli.command, cli.seed);
    let prov = |cmd: &str| -> Vec<Cell> { vec![cmd.into(), hash.clone().into(), cli.seed.into()] };
    match &cli.command {
        Command::Measure(a) => cmd_measure(a, cli.seed, prov("measure")),
        Command::Orbit(a) => cmd_orbit(a, cli.seed, prov("orbit")),
        Command::Scaling(a) => cmd_scaling(a, cli.seed, prov("scaling")),
        Command::Device(a) => cmd_device(a, cli.seed, prov("device")),
        Command::HaarStats(a) => cmd_haar(a, cli.seed, prov("haar-stats")),
    }
}

const PROV: [&str; 3] = ["command", "config_hash", "seed"];

fn columns(rest: &[&'static str]) -> Vec<&'static str> {
    PROV.iter().chain(rest).copied().collect()
}

fn with_prov(prov: &[Cell], rest: Vec<Cell>) -> Vec<Cell> {
    prov.iter().cloned().chain(rest).collect()
}

fn cmd_measure(a: &MeasureArgs, seed: u64, prov: Vec<Cell>) -> Result<Outcome> {
    if a.q_list.is_empty() {
        return Err(invalid("--q-list is empty"));
    }
    let state = build_state(&a.state, seed)?;
    let mut table = Table::new(&columns(&["state", "n_qubits", "kind", "q", "value"]));
    for r in measure_all(&state, &a.q_list)? {
        let q: Cell = if r.kind == crate::measures::MeasureKind::Flatness { Cell::Empty } else { r.q.into() };
        table.push(with_prov(
            &prov,
            vec![a.state.state.as_str().into(), r.n_qubits.into(), r.kind.as_str().into(), q, r.value.into()],
        ));
    }
    Ok(Outcome { table, flagged: false, notes: Vec::new() })
}

fn cmd_orbit(a: &OrbitArgs, seed: u64, prov: Vec<Cell>) -> Result<Outcome> {
    let state = build_state(&a.state, seed)?;
    let n = state.n_qubits();
    let protocols = a.protocol.iter().map(|p| p.parse()).collect::<Result<Vec<Protocol>>>()?;
    let reference = if n <= EXACT_REFERENCE_MAX_QUBITS { Some(theorem_reference(&state)?) } else { None };
    let mut table = Table::new(&columns(&[
        "state",
        "n_qubits",
        "protocol",
        "n_samples",
        "mean_flatness",
        "std_error",
        "m2_estimate",
        "m2_std_error",
        "out_of_range",
        "m2_exact",
        "theorem_rhs",
        "cost_direct",
        "cost_sampling",
    ]));
    let mut flagged = false;
    for protocol in protocols {
        let cfg = McConfig { chains: a.chains, burn_in: a.burn_in, ..McConfig::new(protocol, a.samples, seed) };
        let est = orbit_average_mc(&state, &cfg)?;
        flagged |= est.out_of_range;
        table.push(with_prov(
            &prov,
            vec![
                a.state.state.as_str().into(),
                n.into(),
                protocol.as_str().into(),
                est.n_samples.into(),
                est.mean_flatness.into(),
                est.std_error.into(),
                est.m2_estimate.into(),
                est.m2_std_error.into(),
                est.out_of_range.into(),
                reference.map(|r| r.0).into(),
                reference.map(|r| r.1).into(),
                2f64.powi(3 * n as i32).into(),
                2f64.powi(2 * n as i32).into(),
            ],
        ));
    }
    let notes = vec![format!(
        "cost: direct Pauli enumeration ~2^(3N) = {:.3e} ops; orbit sampling ~2^(2N) = {:.3e} ops per unit accuracy",
        2f64.powi(3 * n as i32),
        2f64.powi(2 * n as i32)
    )];
    Ok(Outcome { table, flagged, notes })
}

fn scaling_state(a: &ScalingArgs, n: usize, seed: u64, repeat: usize) -> Result<Statevector> {
    match a.state.as_str() {
        "haar" => sample_haar_state(n, &mut substream(seed, STATE_STREAM | ((n as u64) << 32) | repeat as u64)),
        "t" => Statevector::bloch(FRAC_PI_2, FRAC_PI_4).tensor_power(n),
        "bloch" => Statevector::bloch(a.theta, a.phi).tensor_power(n),
        other => Err(invalid(format!("scaling supports haar, t or bloch states, got {other:?}"))),
    }
}

fn cmd_scaling(a: &ScalingArgs, seed: u64, prov: Vec<Cell>) -> Result<Outcome> {
    if a.n_min == 0 || a.n_max < a.n_min || a.n_max > MAX_QUBITS {
        return Err(invalid("need 1 <= --n-min <= --n-max"));
    }
    if a.repeats == 0 {
        return Err(invalid("--repeats must be positive"));
    }
    let protocol: Protocol = a.protocol.parse()?;
    if protocol == Protocol::Exact {
        return Err(invalid("scaling needs a sampling protocol"));
    }
    let repeats = if a.state == "haar" { a.repeats } else { 1 };
    let mut table = Table::new(&columns(&[
        "row_type",
        "state",
        "protocol",
        "n_qubits",
        "n_samples",
        "log2_samples",
        "saturated",
        "m2_estimate",
        "slope",
        "intercept",
        "residual",
    ]));
    let mut points = Vec::new();
    let mut flagged = false;
    for n in a.n_min..=a.n_max {
        let mut log_sum = 0.0;
        let mut count_sum = 0usize;
        let mut m2_sum = 0.0;
        let mut saturated = false;
        for r in 0..repeats {
            let state = scaling_state(a, n, seed, r)?;
            let run_seed = substream(seed, ((n as u64) << 32) | r as u64).next_u64();
            let cfg = AccuracyConfig {
                max_samples: a.max_samples,
                ..AccuracyConfig::new(protocol, a.target_sigma, run_seed)
            };
            let sc = samples_to_accuracy(&state, &cfg)?;
            saturated |= sc.saturated;
            log_sum += (sc.n_samples as f64).log2();
            count_sum += sc.n_samples;
            m2_sum += sc.m2_estimate;
        }
        flagged |= saturated;
        let log_mean = log_sum / repeats as f64;
        points.push((n as f64, log_mean));
        table.push(with_prov(
            &prov,
            vec![
                "point".into(),
                a.state.as_str().into(),
                protocol.as_str().into(),
                n.into(),
                (count_sum as f64 / repeats as f64).into(),
                log_mean.into(),
                saturated.into(),
                (m2_sum / repeats as f64).into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ],
        ));
    }
    if points.len() >= 2 {
        let fit = fit_scaling(f64::NAN, &points)?;
        table.push(with_prov(
            &prov,
            vec![
                "fit".into(),
                a.state.as_str().into(),
                protocol.as_str().into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                fit.d_q.into(),
                fit.c_q.into(),
                fit.residual.into(),
            ],
        ));
    }
    Ok(Outcome { table, flagged, notes: Vec::new() })
}

fn cmd_device(a: &DeviceArgs, seed: u64, prov: Vec<Cell>) -> Result<Outcome> {
    let thetas = if a.theta.is_empty() { theta_grid(a.theta_points) } else { a.theta.clone() };
    if thetas.is_empty() {
        return Err(invalid("empty angle grid"));
    }
    let cfg = DeviceConfig {
        thetas,
        n_realizations: a.realizations,
        n_shots: (a.shots > 0).then_some(a.shots),
        model: ReadoutModel::new(a.noise_p, a.noise_q)?,
        seed,
        negativity: if a.clip { NegativityPolicy::Clip } else { NegativityPolicy::Keep },
    };
    let mut table = Table::new(&columns(&[
        "theta",
        "n_realizations",
        "shots",
        "noise_p",
        "noise_q",
        "f_dig",
        "f_corr",
        "f_ex",
        "sigma_stat",
        "sigma_dig",
        "clipped_realizations",
    ]));
    for r in device_experiment(&cfg)? {
        table.push(with_prov(
            &prov,
            vec![
                r.theta.into(),
                a.realizations.into(),
                a.shots.into(),
                a.noise_p.into(),
                a.noise_q.into(),
                r.f_dig.into(),
                r.f_corr.into(),
                r.f_ex.into(),
                r.sigma_stat.into(),
                r.sigma_dig.into(),
                r.clipped_realizations.into(),
            ],
        ));
    }
    Ok(Outcome { table, flagged: false, notes: Vec::new() })
}

fn cmd_haar(a: &HaarArgs, seed: u64, prov: Vec<Cell>) -> Result<Outcome> {
    if a.n_min == 0 || a.n_max < a.n_min || a.n_max > 62 {
        return Err(invalid("need 1 <= --n-min <= --n-max <= 62"));
    }
    if a.samples > 0 && a.n_max > 16 {
        return Err(invalid("empirical Haar samples are limited to N <= 16"));
    }
    let mut table = Table::new(&columns(&[
        "n_qubits",
        "d",
        "mean_flatness",
        "std_flatness",
        "std_flatness_asymptotic",
        "mean_stabilizer_purity",
        "empirical_samples",
        "empirical_mean_flatness",
        "empirical_std_flatness",
    ]));
    for n in a.n_min..=a.n_max {
        let d = 1u64 << n;
        let (emp_mean, emp_std) = if a.samples >= 2 {
            let values: Vec<f64> = (0..a.samples)
                .map(|i| {
                    let s = sample_haar_state(n, &mut substream(seed, ((n as u64) << 32) | i as u64))?;
                    Ok(crate::measures::multifractal_flatness(&s))
                })
                .collect::<Result<_>>()?;
            let (m, se) = crate::orbit::mean_and_std_error(&values);
            (Some(m), Some(se * (values.len() as f64).sqrt()))
        } else {
            (None, None)
        };
        table.push(with_prov(
            &prov,
            vec![
                n.into(),
                d.into(),
                haar_mean_flatness(d)?.into(),
                haar_flatness_std(d)?.into(),
                haar_flatness_std_asymptotic(d).into(),
                haar_mean_stabilizer_purity(d)?.into(),
                a.samples.into(),
                emp_mean.into(),
                emp_std.into(),
            ],
        ));
    }
    Ok(Outcome { table, flagged: false, notes: Vec::new() })
}

/// Exit status for a finished run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;
pub const EXIT_IO: i32 = 1;

/// Entry point used by the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = {
        let go = || run(&cli);
        if cli.threads > 0 {
            match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
                Ok(pool) => pool.install(go),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        } else {
            go()
        }
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    let text = outcome.table.render(cli.format);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    if outcome.flagged {
        eprintln!("warning: numerical flag raised (out-of-range estimator or saturated sample cap)");
        EXIT_FLAGGED
    } else {
        EXIT_OK
    }
}
