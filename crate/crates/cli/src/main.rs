//! `kprod`: energy thresholds for k-producible states from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use kprod_core::lattice::LatticeKind;
use kprod_core::models::ModelKind;
use serde::Serialize;

use output::Format;

#[derive(Parser, Debug, Serialize)]
#[command(name = "kprod", version, about = "Entanglement thresholds for k-producible spin states")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Base seed for optimizer restarts
    #[arg(long, global = true, default_value_t = 2007)]
    pub seed: u64,
    /// Random restarts per block optimization
    #[arg(long, global = true, default_value_t = 50)]
    pub restarts: usize,
    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; a `<file>.meta.json` sidecar is written next to it
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format (default: json for single results, csv for tables)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Threshold E_kp for one model, lattice and block size
    Bound {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long, value_parser = parse_lattice)]
        lattice: LatticeKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        field: f64,
    },
    /// Entanglement gap of a field model along a uniform field grid
    Sweep {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        bmin: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        bmax: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Multiple of the median second difference that flags a kink
        #[arg(long, default_value_t = 10.0)]
        kink_factor: f64,
    },
    /// Temperature-field map of where thermal states are detected
    Regions {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        tmin: f64,
        #[arg(long, default_value_t = 4.0)]
        tmax: f64,
        #[arg(long, default_value_t = 0.05)]
        tstep: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        bmin: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        bmax: f64,
        #[arg(long, default_value_t = 0.05)]
        bstep: f64,
    },
    /// Ground or thermal reference energy per bond
    Reference {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long, value_parser = parse_lattice)]
        lattice: LatticeKind,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        field: f64,
        /// Temperature; 0 for the ground state
        #[arg(long, default_value_t = 0.0)]
        temp: f64,
        /// Use the dense spectrum of a periodic chain of this many sites
        #[arg(long)]
        sites: Option<usize>,
    },
    /// Catalog of connected block shapes up to size k
    Shapes {
        #[arg(long, value_parser = parse_lattice)]
        lattice: LatticeKind,
        #[arg(long)]
        k: usize,
    },
    /// Closed-form pair bounds against the numeric optimizer
    VerifyLemmas {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5")]
        gammas: Vec<f64>,
    },
    /// Two-producible chain state that attains E_2p
    Witness {
        #[arg(long, default_value_t = 12)]
        n: usize,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: kprod_core::Error| e.to_string())
}

fn parse_lattice(s: &str) -> Result<LatticeKind, String> {
    s.parse().map_err(|e: kprod_core::Error| e.to_string())
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(String),
    Unsupported(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invalid(_) => 3,
            Failure::Unsupported(_) => 4,
            Failure::Numeric(_) => 5,
            Failure::Io(_) => 6,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Invalid(_) => "invalid_input",
            Failure::Unsupported(_) => "unsupported",
            Failure::Numeric(_) => "numeric",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::Unsupported(m) | Failure::Numeric(m) | Failure::Io(m) => m,
        }
    }
}

impl From<kprod_core::Error> for Failure {
    fn from(e: kprod_core::Error) -> Self {
        use kprod_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidInput(_) => Failure::Invalid(msg),
            E::Unsupported(_) | E::BlockSizeCap(_) | E::NoReference(_) => Failure::Unsupported(msg),
            E::NotConverged { .. } | E::ConventionMismatch(_) => Failure::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn report(f: &Failure) -> ExitCode {
    let record = serde_json::json!({
        "error": f.kind(),
        "message": f.message(),
        "exit_code": f.code(),
    });
    eprintln!("{record}");
    ExitCode::from(f.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return report(&Failure::Usage(first));
        }
    };
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return report(&Failure::Invalid("--threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report(&Failure::Io(e.to_string()));
        }
    }
    let start = Instant::now();
    match commands::run(&cli, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
