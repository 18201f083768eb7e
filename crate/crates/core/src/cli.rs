//! Command-line front end and the in-process two-party protocol simulation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{born_probability_qubit, random_bloch, BlochVector};
use crate::harness::{
    self, case_rng, ExperimentConfig, ExperimentKind, ExperimentReport, SchemeKind, Z_BOUND,
};
use crate::patching::{self, PatchedOnticState, MESSAGE_LEN};
use crate::stats;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ONTIC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "ontic",
    version,
    about = "Hidden-variable model simulator and Born-rule verifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Structured,
    Tabular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat key/value (TOML) file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "reports")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Structured)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Qubit model against the Born rule (exact identity or Monte Carlo).
    VerifyQubit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// N-level model on in-region pairs.
    VerifyNdim {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long, value_enum)]
        scheme: Option<CliScheme>,
        #[arg(long)]
        pole_mass: Option<f64>,
        #[arg(long)]
        perturbation: Option<f64>,
    },
    /// Grid sweep of the conditional probabilities over the validity domain.
    SweepPositivity {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long)]
        event_points: Option<usize>,
    },
    /// Largest distance from random states to their icosahedron vertex.
    Covering {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Prepare, serialize, transmit and measure, round by round.
    SimulateProtocol {
        #[command(flatten)]
        common: CommonArgs,
        /// Prepared Bloch vector `x,y,z` (normalized on input).
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        v: Option<[f64; 3]>,
        /// Event Bloch vector `x,y,z` (normalized on input).
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        w: Option<[f64; 3]>,
        /// Also write the raw 10-byte messages to `messages.bin`.
        #[arg(long)]
        messages: bool,
    },
    /// Two states sharing an ontic state whose zenith rates differ.
    DemoNonmarkov {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi_a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi_b: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliScheme {
    Uniform,
    Ground,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyQubit { .. } => "verify-qubit",
            Command::VerifyNdim { .. } => "verify-ndim",
            Command::SweepPositivity { .. } => "sweep-positivity",
            Command::Covering { .. } => "covering",
            Command::SimulateProtocol { .. } => "simulate-protocol",
            Command::DemoNonmarkov { .. } => "demo-nonmarkov",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::VerifyQubit { common, .. }
            | Command::VerifyNdim { common, .. }
            | Command::SweepPositivity { common, .. }
            | Command::Covering { common }
            | Command::SimulateProtocol { common, .. }
            | Command::DemoNonmarkov { common, .. } => common,
        }
    }
}

fn read_table(path: &Path) -> Result<toml::Table> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn kind_from_mode(mode: Mode, exact: ExperimentKind, mc: ExperimentKind) -> ExperimentKind {
    match mode {
        Mode::Exact => exact,
        Mode::Mc => mc,
    }
}

/// Defaults, then the config file, then flags.
pub fn experiment_config(command: &Command) -> Result<ExperimentConfig> {
    let common = command.common();
    let (mut cfg, file_kind) = match &common.config {
        Some(path) => {
            let table = read_table(path)?;
            let has_kind = table.contains_key("kind");
            let cfg: ExperimentConfig = table
                .try_into()
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let kind = has_kind.then_some(cfg.kind);
            (cfg, kind)
        }
        None => (ExperimentConfig::default(), None),
    };

    let allowed: &[ExperimentKind] = match command {
        Command::VerifyQubit { .. } => &[ExperimentKind::ExactQubit, ExperimentKind::McQubit],
        Command::VerifyNdim { .. } => &[ExperimentKind::ExactNdim, ExperimentKind::McNdim],
        Command::SweepPositivity { .. } => &[ExperimentKind::PositivitySweep],
        Command::Covering { .. } => &[ExperimentKind::Covering],
        Command::DemoNonmarkov { .. } => &[ExperimentKind::Witness],
        Command::SimulateProtocol { .. } => {
            return Err(Error::Config(
                "simulate-protocol uses a protocol config".into(),
            ))
        }
    };
    cfg.kind = match file_kind {
        Some(k) if !allowed.contains(&k) => {
            return Err(Error::Config(format!(
                "config kind {} does not match subcommand {}",
                k.name(),
                command.name()
            )))
        }
        Some(k) => k,
        None => allowed[0],
    };

    match command {
        Command::VerifyQubit { mode, .. } => {
            if let Some(m) = mode {
                cfg.kind = kind_from_mode(*m, ExperimentKind::ExactQubit, ExperimentKind::McQubit);
            }
        }
        Command::VerifyNdim {
            mode,
            dimension,
            scheme,
            pole_mass,
            perturbation,
            ..
        } => {
            if let Some(m) = mode {
                cfg.kind = kind_from_mode(*m, ExperimentKind::ExactNdim, ExperimentKind::McNdim);
            }
            if let Some(d) = dimension {
                cfg.dimension = *d;
            }
            if let Some(s) = scheme {
                cfg.scheme = match s {
                    CliScheme::Uniform => SchemeKind::Uniform,
                    CliScheme::Ground => SchemeKind::Ground,
                };
            }
            if let Some(p) = pole_mass {
                cfg.pole_mass = *p;
            }
            if let Some(p) = perturbation {
                cfg.perturbation = *p;
            }
        }
        Command::SweepPositivity {
            grid_step,
            event_points,
            ..
        } => {
            if let Some(g) = grid_step {
                cfg.grid_step = *g;
            }
            if let Some(e) = event_points {
                cfg.event_points = *e;
            }
        }
        Command::DemoNonmarkov {
            theta,
            phi_a,
            phi_b,
            ..
        } => {
            if let Some(t) = theta {
                cfg.theta = *t;
            }
            if let Some(p) = phi_a {
                cfg.phi_a = *p;
            }
            if let Some(p) = phi_b {
                cfg.phi_b = *p;
            }
        }
        Command::Covering { .. } | Command::SimulateProtocol { .. } => {}
    }

    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(s) = common.samples {
        cfg.samples = s;
    }
    if let Some(p) = common.pairs {
        cfg.pairs = p;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Configuration of a protocol run. With `v` and `w` both set a single pair
/// is simulated; otherwise the listed `cases`, or `pairs` random pairs when
/// the list is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub pairs: usize,
    pub rounds: u64,
    pub seed: u64,
    pub v: Option<[f64; 3]>,
    pub w: Option<[f64; 3]>,
    /// Explicit `[v, w]` pairs.
    pub cases: Vec<[[f64; 3]; 2]>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            pairs: 1,
            rounds: 10_000,
            seed: 0,
            v: None,
            w: None,
            cases: Vec::new(),
        }
    }
}

impl ProtocolConfig {
    fn pair_list(&self) -> Result<Vec<(BlochVector, BlochVector)>> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        let unit = |name: &str, c: [f64; 3]| {
            BlochVector::normalize(c[0], c[1], c[2])
                .ok_or_else(|| Error::Config(format!("{name} must be a non-zero finite vector")))
        };
        match (self.v, self.w) {
            (Some(v), Some(w)) => Ok(vec![(unit("v", v)?, unit("w", w)?)]),
            (None, None) if !self.cases.is_empty() => self
                .cases
                .iter()
                .map(|[v, w]| Ok((unit("v", *v)?, unit("w", *w)?)))
                .collect(),
            (None, None) => {
                if self.pairs == 0 {
                    return Err(Error::Config("pairs must be at least 1".into()));
                }
                Ok((0..self.pairs)
                    .map(|i| {
                        let mut rng = case_rng(self.seed, i as u64);
                        (random_bloch(&mut rng), random_bloch(&mut rng))
                    })
                    .collect())
            }
            _ => Err(Error::Config("v and w must be given together".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub round: u64,
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTranscript {
    pub pair_index: usize,
    pub v: [f64; 3],
    pub w: [f64; 3],
    pub born_p: f64,
    pub rounds: u64,
    pub successes: u64,
    pub freq: f64,
    pub z: Option<f64>,
    pub within_bound: bool,
    /// Running frequency after 10, 100, 1000, ... rounds and at the end.
    pub checkpoints: Vec<Checkpoint>,
    pub message_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: ProtocolConfig,
    pub message_len: usize,
    pub pairs: Vec<PairTranscript>,
    pub total_message_bytes: u64,
    /// Messages whose decoded form differed from what was sent.
    pub round_trip_failures: u64,
    pub passed: bool,
}

/// Runs prepare, encode, decode, measure for every round. Raw messages are
/// appended to `sink` when given.
pub fn simulate_protocol(
    cfg: &ProtocolConfig,
    mut sink: Option<&mut dyn Write>,
) -> Result<Transcript> {
    let frame = patching::build_frame();
    let pairs = cfg.pair_list()?;
    let mut out = Vec::with_capacity(pairs.len());
    let mut round_trip_failures = 0;
    for (i, (v, w)) in pairs.into_iter().enumerate() {
        // stream offset keeps round draws apart from the pair draws above
        let mut rng = case_rng(cfg.seed, (1u64 << 32) + i as u64);
        let born = born_probability_qubit(&v, &w);
        let mut successes = 0u64;
        let mut checkpoints = Vec::new();
        let mut next_checkpoint = 10u64;
        for round in 1..=cfg.rounds {
            let sent = patching::prepare(&frame, &v, &mut rng);
            let bytes = sent.encode();
            if let Some(s) = sink.as_deref_mut() {
                s.write_all(&bytes)
                    .map_err(|e| Error::Config(format!("cannot write messages: {e}")))?;
            }
            let received = PatchedOnticState::decode(&bytes)?;
            if received.x.to_bits() != sent.x.to_bits()
                || received.branch != sent.branch
                || received.patch != sent.patch
            {
                round_trip_failures += 1;
            }
            successes += patching::simulate_outcome(&frame, &w, &received, &mut rng)? as u64;
            if round == next_checkpoint || round == cfg.rounds {
                checkpoints.push(Checkpoint {
                    round,
                    freq: successes as f64 / round as f64,
                });
                if round == next_checkpoint {
                    next_checkpoint = next_checkpoint.saturating_mul(10);
                }
            }
        }
        let z = stats::z_score(successes, cfg.rounds, born);
        let within_bound = match z {
            Some(z) => z.abs() <= Z_BOUND,
            None => successes == if born < 0.5 { 0 } else { cfg.rounds },
        };
        out.push(PairTranscript {
            pair_index: i,
            v: v.components(),
            w: w.components(),
            born_p: born,
            rounds: cfg.rounds,
            successes,
            freq: successes as f64 / cfg.rounds as f64,
            z,
            within_bound,
            checkpoints,
            message_bytes: cfg.rounds * MESSAGE_LEN as u64,
        });
    }
    let misses = out.iter().filter(|p| !p.within_bound).count();
    let passed = round_trip_failures == 0 && misses <= out.len() / 100;
    Ok(Transcript {
        config: cfg.clone(),
        message_len: MESSAGE_LEN,
        total_message_bytes: out.iter().map(|p| p.message_bytes).sum(),
        pairs: out,
        round_trip_failures,
        passed,
    })
}

/// Parses `x,y,z` into three reals.
fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    parts.try_into().map_err(|p: Vec<f64>| {
        format!("expected three comma-separated components, got {}", p.len())
    })
}

fn protocol_config(command: &Command) -> Result<ProtocolConfig> {
    let Command::SimulateProtocol { common, v, w, .. } = command else {
        unreachable!("only called for simulate-protocol");
    };
    let mut cfg = match &common.config {
        Some(path) => read_table(path)?
            .try_into()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => ProtocolConfig::default(),
    };
    if v.is_some() {
        cfg.v = *v;
    }
    if w.is_some() {
        cfg.w = *w;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(s) = common.samples {
        cfg.rounds = s;
    }
    if let Some(p) = common.pairs {
        cfg.pairs = p;
    }
    cfg.pair_list()?;
    Ok(cfg)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Creates `<out>/<subcommand>-<seed>-<timestamp>`, suffixing on collision.
pub fn run_directory(out_dir: &Path, subcommand: &str, seed: u64) -> io::Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{subcommand}-{seed}-{stamp}");
    for attempt in 0..1000 {
        let name = if attempt == 0 {
            base.clone()
        } else {
            format!("{base}-{attempt}")
        };
        let dir = out_dir.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    Err(io::Error::new(
        io::ErrorKind::AlreadyExists,
        "no free run directory name",
    ))
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("output error: {e}"))
}

fn print_criteria(out: &mut dyn Write, report: &ExperimentReport) -> io::Result<()> {
    for c in &report.summary.criteria {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", c.name, c.detail)?;
    }
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    let command = &cli.command;
    let common = command.common();

    if let Command::SimulateProtocol { messages, .. } = command {
        let cfg = protocol_config(command)?;
        let dir = run_directory(&common.out_dir, command.name(), cfg.seed).map_err(io_err)?;
        let transcript = if *messages {
            let tmp = dir.join(".messages.bin.tmp");
            let file = fs::File::create(&tmp).map_err(io_err)?;
            let mut buf = io::BufWriter::new(file);
            let t = simulate_protocol(&cfg, Some(&mut buf))?;
            buf.into_inner()
                .map_err(|e| io_err(e.into_error()))?
                .sync_all()
                .map_err(io_err)?;
            fs::rename(&tmp, dir.join("messages.bin")).map_err(io_err)?;
            t
        } else {
            simulate_protocol(&cfg, None)?
        };
        let json = serde_json::to_string_pretty(&transcript).expect("transcript serializes");
        let path = dir.join("transcript.json");
        write_atomic(&path, json.as_bytes()).map_err(io_err)?;
        for p in &transcript.pairs {
            writeln!(
                out,
                "pair {}: born {:.6} freq {:.6} z {} over {} rounds ({} message bytes)",
                p.pair_index,
                p.born_p,
                p.freq,
                p.z.map(|z| format!("{z:.3}"))
                    .unwrap_or_else(|| "exact".into()),
                p.rounds,
                p.message_bytes
            )
            .map_err(io_err)?;
        }
        writeln!(out, "transcript: {}", path.display()).map_err(io_err)?;
        return Ok(transcript.passed);
    }

    let cfg = experiment_config(command)?;
    let report = harness::run_experiment(&cfg)?;
    let dir = run_directory(&common.out_dir, command.name(), cfg.seed).map_err(io_err)?;
    let path = match common.format {
        Format::Structured => {
            let p = dir.join("report.json");
            write_atomic(&p, report.to_json().as_bytes()).map_err(io_err)?;
            p
        }
        Format::Tabular => {
            let p = dir.join("report.csv");
            write_atomic(&p, report.to_csv().as_bytes()).map_err(io_err)?;
            p
        }
    };
    if let Command::DemoNonmarkov { .. } = command {
        let m = &report.summary.metrics;
        writeln!(
            out,
            "theta = {}, shared ontic state (x = {}, n = 1)",
            cfg.theta, m["shared_ontic_x"]
        )
        .map_err(io_err)?;
        writeln!(out, "dtheta/dt at phi_a = {}: {}", cfg.phi_a, m["rate_a"]).map_err(io_err)?;
        writeln!(out, "dtheta/dt at phi_b = {}: {}", cfg.phi_b, m["rate_b"]).map_err(io_err)?;
        writeln!(out, "discrepancy: {}", m["discrepancy"]).map_err(io_err)?;
    }
    print_criteria(out, &report).map_err(io_err)?;
    writeln!(out, "report: {}", path.display()).map_err(io_err)?;
    Ok(report.passed())
}

/// Parses `args` and runs; returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
