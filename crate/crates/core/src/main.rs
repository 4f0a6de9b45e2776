use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use fupcon::arith::{parse_rational, Moduli};
use fupcon::lifting::{size_guard_from_env, WindingVector};
use fupcon::report::{
    cmd_certify, cmd_combine, cmd_export, cmd_tower, exit_code_for, parse_list, parse_loops, parse_range,
    write_atomic, CertifyConfig, ExportConfig, Report, TowerConfig,
};
use fupcon::Result;

#[derive(Parser)]
#[command(
    name = "fupcon",
    version,
    about = "Exact lifting certificates and neighbourhood towers on the r-torus",
    after_help = "EXIT CODES:\n\
                  \n  0  success\
                  \n  1  a verdict contradicts its independent prediction\
                  \n  2  invalid input\
                  \n  3  size guard exceeded (override with FUPCON_SIZE_GUARD or --size-guard)\
                  \n  4  IO error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on enumerated points and period lengths
    #[arg(long, global = true)]
    size_guard: Option<u64>,

    /// Add wall-clock timing to the report
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certificate levels, hitting witnesses and preimage checks
    Certify {
        #[arg(long)]
        moduli: String,
        #[arg(long, allow_hyphen_values = true)]
        winding: String,
        /// Inclusive stage range, e.g. 0..3
        #[arg(long, default_value = "0..3")]
        range: String,
    },
    /// Build and check the neighbourhood tower
    Tower {
        #[arg(long)]
        moduli: String,
        #[arg(long, allow_hyphen_values = true)]
        winding: String,
        /// Target radius as p/q
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Preimage levels past n0 + n1
        #[arg(long, default_value_t = 2)]
        depth: u32,
        /// Coherent points checked against epsilon
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Use this n1 instead of the certificate level
        #[arg(long)]
        n1: Option<u32>,
    },
    /// Combine loop windings into one with no zero coordinate
    Combine {
        /// Windings separated by ';', e.g. "3,0;-2,1"
        #[arg(long, allow_hyphen_values = true)]
        loops: String,
    },
    /// Write canonical segment CSVs for lifted images or tower levels
    Export {
        #[arg(long)]
        moduli: String,
        #[arg(long, allow_hyphen_values = true)]
        winding: String,
        /// Stages n whose lifted image is written
        #[arg(long)]
        stages: Option<String>,
        /// Also write every tower level for this epsilon
        #[arg(long)]
        tower: Option<String>,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn moduli(s: &str) -> Result<Moduli> {
    Moduli::new(parse_list(s, "moduli")?)
}

fn winding(s: &str) -> Result<WindingVector> {
    Ok(WindingVector::new(parse_list(s, "winding")?))
}

fn run(cli: &Cli) -> Result<Report> {
    let guard = cli.size_guard.unwrap_or_else(size_guard_from_env);
    match &cli.command {
        Command::Certify { moduli: m, winding: w, range } => cmd_certify(&CertifyConfig {
            moduli: moduli(m)?,
            winding: winding(w)?,
            range: parse_range(range)?,
            guard,
        }),
        Command::Tower {
            moduli: m,
            winding: w,
            epsilon,
            depth,
            samples,
            n1,
        } => cmd_tower(&TowerConfig {
            moduli: moduli(m)?,
            winding: winding(w)?,
            epsilon: parse_rational(epsilon)?,
            depth: *depth,
            samples: *samples,
            n1_override: *n1,
            guard,
        }),
        Command::Combine { loops } => cmd_combine(&parse_loops(loops)?),
        Command::Export {
            moduli: m,
            winding: w,
            stages,
            tower,
            depth,
            out_dir,
        } => cmd_export(&ExportConfig {
            moduli: moduli(m)?,
            winding: winding(w)?,
            stages: match stages {
                Some(s) => parse_list(s, "stages")?,
                None => Vec::new(),
            },
            tower: match tower {
                Some(e) => Some((parse_rational(e)?, *depth)),
                None => None,
            },
            out_dir: out_dir.clone(),
            guard,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    let text = report.to_json();
    match &cli.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code_for(&e) as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.exit_code() as u8)
}
