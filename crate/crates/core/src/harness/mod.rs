//! Seeded experiment runner behind the `dcpsim` binary.
//!
//! Every command takes a JSON config (file, then CLI overrides), a master
//! seed, and produces one JSON report. Trials run on the rayon pool with one
//! derived stream each, and results are assembled in trial order, so a report
//! depends only on (config, seed).

mod commands;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub use commands::{
    involution_violations, load_instance, oracle_equivalence, DcpRunConfig, GenLatticeConfig, GeometryCheckConfig,
    MatchingStatsConfig, PrepareStateConfig, SelftestConfig, SubsetSumStatsConfig, SvpRunConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Io(_) => 2,
            HarnessError::Contract(_) => 3,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dcpsim",
    version,
    about = "Seeded experiments for the lattice → DCP → subset-sum chain"
)]
pub struct Cli {
    /// JSON config for the command; CLI flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (default 0, or the config's "seed").
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (rayon default when absent).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write `wall_time_secs: null` so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate planted unique-SVP instances with certified gaps.
    GenLattice(GenLatticeArgs),
    /// Run the full SVP pipeline on a generated or loaded instance.
    SolveSvp(SolveSvpArgs),
    /// Run the DCP solver against planted coset worlds.
    SolveDcp(SolveDcpArgs),
    /// Legal-input fractions and oracle equivalence.
    SubsetsumStats(SubsetSumArgs),
    /// Matching involution checks and pair-density bounds.
    MatchingStats(MatchingArgs),
    /// Ball intersection ratios, grid volume and boundary-layer checks.
    GeometryCheck(GeometryArgs),
    /// Ball-grid state preparation and its certificate.
    PrepareState(PrepareArgs),
    /// Quick battery over every module.
    Selftest,
}

#[derive(Args, Debug, Default)]
pub struct GenLatticeArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gap: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct SolveSvpArgs {
    /// Instance JSON (a bare instance or a gen-lattice report).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<u64>,
    /// Only try this residue m.
    #[arg(long)]
    pub m: Option<u64>,
    /// Coefficient range M.
    #[arg(long)]
    pub range: Option<u64>,
    #[arg(long, value_parser = ["cube", "ball"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub oracle: Option<String>,
    /// Return the LLL vector without running DCP.
    #[arg(long)]
    pub no_dcp: bool,
}

#[derive(Args, Debug, Default)]
pub struct SolveDcpArgs {
    #[arg(long = "N")]
    pub modulus: Option<u64>,
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub bad_prob: Option<f64>,
    #[arg(long)]
    pub oracle: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct SubsetSumArgs {
    #[arg(long = "N")]
    pub modulus: Option<u64>,
    /// CSV path for the legal-fraction table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct MatchingArgs {
    #[arg(long = "N")]
    pub modulus: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct GeometryArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// CSV path for the ratio table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct PrepareArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub l: Option<u64>,
}

/// One JSON object per run.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub wall_time_secs: Option<f64>,
    /// Whether the command's own criterion held.
    pub passed: bool,
    pub result: Value,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

pub(crate) struct Outcome {
    pub passed: bool,
    pub result: Value,
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Result<Value, HarnessError> {
    serde_json::to_value(v).map_err(|e| HarnessError::Contract(format!("report serialization: {e}")))
}

/// Reads the config file into `T`, returning it with the file's `seed`, if any.
fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(T, Option<u64>), HarnessError> {
    let Some(path) = path else {
        return Ok((T::default(), None));
    };
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    let seed = match value.as_object_mut().and_then(|o| o.remove("seed")) {
        None => None,
        Some(s) => Some(
            s.as_u64()
                .ok_or_else(|| HarnessError::Usage("config seed must be an unsigned integer".into()))?,
        ),
    };
    let config = serde_json::from_value(value).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    Ok((config, seed))
}

/// Runs a parsed command line and returns its report.
pub fn run(cli: &Cli) -> Result<Report, HarnessError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(HarnessError::Usage("--threads must be positive".into()));
        }
        // Fails only if the pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let start = Instant::now();
    let cfg = cli.config.as_deref();
    let (name, config, seed, outcome) = match &cli.command {
        Command::GenLattice(args) => {
            let (mut c, s): (GenLatticeConfig, _) = load_config(cfg)?;
            c.apply(args, cli.trials);
            let seed = cli.seed.or(s).unwrap_or(0);
            ("gen-lattice", to_value(&c)?, seed, commands::gen_lattice(&c, seed)?)
        }
        Command::SolveSvp(args) => {
            let (mut c, s): (SvpRunConfig, _) = load_config(cfg)?;
            c.apply(args, cli.trials)?;
            let seed = cli.seed.or(s).unwrap_or(0);
            ("solve-svp", to_value(&c)?, seed, commands::solve_svp(&c, seed)?)
        }
        Command::SolveDcp(args) => {
            let (mut c, s): (DcpRunConfig, _) = load_config(cfg)?;
            c.apply(args, cli.trials);
            let seed = cli.seed.or(s).unwrap_or(0);
            ("solve-dcp", to_value(&c)?, seed, commands::solve_dcp(&c, seed)?)
        }
        Command::SubsetsumStats(args) => {
            let (mut c, s): (SubsetSumStatsConfig, _) = load_config(cfg)?;
            c.apply(args, cli.trials);
            let seed = cli.seed.or(s).unwrap_or(0);
            (
                "subsetsum-stats",
                to_value(&c)?,
                seed,
                commands::subsetsum_stats(&c, seed)?,
            )
        }
        Command::MatchingStats(args) => {
            let (mut c, s): (MatchingStatsConfig, _) = load_config(cfg)?;
            c.apply(args, cli.trials);
            let seed = cli.seed.or(s).unwrap_or(0);
            (
                "matching-stats",
                to_value(&c)?,
                seed,
                commands::matching_stats(&c, seed)?,
            )
        }
        Command::GeometryCheck(args) => {
            let (mut c, s): (GeometryCheckConfig, _) = load_config(cfg)?;
            c.apply(args);
            let seed = cli.seed.or(s).unwrap_or(0);
            (
                "geometry-check",
                to_value(&c)?,
                seed,
                commands::geometry_check(&c, seed)?,
            )
        }
        Command::PrepareState(args) => {
            let (mut c, s): (PrepareStateConfig, _) = load_config(cfg)?;
            c.apply(args);
            let seed = cli.seed.or(s).unwrap_or(0);
            ("prepare-state", to_value(&c)?, seed, commands::prepare_state(&c, seed)?)
        }
        Command::Selftest => {
            let (c, s): (SelftestConfig, _) = load_config(cfg)?;
            let seed = cli.seed.or(s).unwrap_or(0);
            ("selftest", to_value(&c)?, seed, commands::selftest(&c, seed)?)
        }
    };
    Ok(Report {
        tool: "dcpsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        seed,
        config,
        wall_time_secs: (!cli.no_timing).then(|| start.elapsed().as_secs_f64()),
        passed: outcome.passed,
        result: outcome.result,
    })
}

/// Pretty JSON plus a trailing newline, to `out` or stdout.
pub fn write_report(report: &Report, out: Option<&Path>) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Contract(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Parses `args`, runs, writes the report and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli).and_then(|r| write_report(&r, cli.out.as_deref()).map(|()| r.exit_code())) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dcpsim: {e}");
            e.exit_code()
        }
    }
}
