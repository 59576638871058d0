mod commands;
mod output;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tetrakey", version, about = "Tetrahedron-measurement QKD: simulation, security curves, thresholds and sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample, twirl and sift a noisy-singlet record; report key accounting.
    Simulate(SimulateArgs),
    /// Mutual-information and Holevo curves over a noise grid.
    Curves(CurvesArgs),
    /// Computed noise thresholds next to their published values.
    Thresholds(ThresholdsArgs),
    /// Sacrifice a sample, reconstruct the two-qubit state and run the
    /// source-acceptance test.
    Tomography(TomographyArgs),
    /// Run a two-party session.
    Session {
        #[command(subcommand)]
        mode: SessionMode,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Noise admixture ε of the source.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Number of detected pairs N.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub pairs: u64,
    #[arg(long, env = "TETRAKEY_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct SiftArgs {
    /// Number of sifting rounds n.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    /// Resolve repeated letters of the last round by Renes pairing.
    #[arg(long)]
    pub final_pairing: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub sift: SiftArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CurvesArgs {
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    /// Upper end of the grid; defaults to 2/3.
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
    pub points: u64,
    /// Explicit comma-separated grid; overrides --from/--to/--points.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ThresholdsArgs {
    /// Also list the full published reference table.
    #[arg(long)]
    pub reference_table: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct TomographyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    #[arg(long, default_value_t = 0.3)]
    pub epsilon_max: f64,
    /// Multiplier c of the distance bound c·√(16/M).
    #[arg(long, default_value_t = 4.0)]
    pub multiplier: f64,
    #[arg(long, default_value_t = 1000)]
    pub min_sample: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SessionArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub sift: SiftArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Pairs sacrificed for the acceptance test.
    #[arg(long, default_value_t = 1000)]
    pub tomography: usize,
    /// Seed of the simulated source shared by both parties.
    #[arg(long, default_value_t = 0)]
    pub source_seed: u64,
    #[arg(long, default_value = "tetrakey")]
    pub session_id: String,
    /// Write the transcript as JSON lines.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Write the key as hex.
    #[arg(long)]
    pub key_out: Option<PathBuf>,
    /// Write the acceptance record as JSON.
    #[arg(long)]
    pub acceptance_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum SessionMode {
    /// Both parties in this process; Bob uses --peer-seed.
    Loopback {
        #[command(flatten)]
        args: SessionArgs,
        #[arg(long, default_value_t = 2)]
        peer_seed: u64,
        /// Carry the session over a local TCP connection instead of memory.
        #[arg(long)]
        tcp: bool,
    },
    /// Wait for the peer on a TCP address.
    Listen {
        #[command(flatten)]
        args: SessionArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        #[arg(long, value_enum, default_value_t = RoleArg::Bob)]
        role: RoleArg,
    },
    /// Connect to a listening peer.
    Connect {
        #[command(flatten)]
        args: SessionArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        #[arg(long, value_enum, default_value_t = RoleArg::Alice)]
        role: RoleArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Alice,
    Bob,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Curves(a) => commands::curves(&a),
        Command::Thresholds(a) => commands::thresholds(&a),
        Command::Tomography(a) => commands::tomography(&a),
        Command::Session { mode } => match mode {
            SessionMode::Loopback { args, peer_seed, tcp } => commands::session_loopback(&args, peer_seed, tcp),
            SessionMode::Listen { args, addr, role } => commands::session_listen(&args, addr, role),
            SessionMode::Connect { args, addr, role } => commands::session_connect(&args, addr, role),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tetrakey: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

impl From<RoleArg> for tetrakey_core::session::Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Alice => Self::Alice,
            RoleArg::Bob => Self::Bob,
        }
    }
}

