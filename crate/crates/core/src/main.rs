use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use padiso::cli::{check_pipeline, exit_code, run_script, Flags, EXIT_OK, EXIT_VERIFICATION};
use padiso::dsl::parse_dsl;
use padiso::padic::DEFAULT_PRECISION;
use padiso::text::{parse_pipeline_file, parse_point};
use padiso::verify::show_point;
use padiso::Error;

/// Explicit p-adic semi-algebraic bijections.
#[derive(Parser)]
#[command(name = "padiso", version)]
struct Cli {
    /// Prime, overriding the one declared in the input.
    #[arg(long, global = true)]
    prime: Option<u32>,
    /// Digits carried by truncated values.
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    /// Samples per direction for bijection checks.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Modulus exponent M for residue oracles.
    #[arg(long, global = true)]
    modulus: Option<u32>,
    /// File receiving classify output in the pipeline text format.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs a script.
    Run { script: PathBuf },
    /// Applies a pipeline file to a point such as `(1, 1/5)`.
    Eval {
        pipeline: PathBuf,
        point: String,
        #[arg(long)]
        backward: bool,
    },
    /// Round-trip checks a pipeline file.
    Check { pipeline: PathBuf },
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn main_inner(cli: Cli) -> Result<i32, Error> {
    let flags = Flags {
        prime: cli.prime,
        precision: cli.precision,
        samples: cli.samples,
        seed: cli.seed,
        modulus: cli.modulus,
        out: cli.out,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Cmd::Run { script } => {
            let script = parse_dsl(&read(&script)?, flags.prime)?;
            let ok = run_script(&script, &flags, &mut out)?;
            Ok(if ok { EXIT_OK } else { EXIT_VERIFICATION })
        }
        Cmd::Eval {
            pipeline,
            point,
            backward,
        } => {
            let (p, pl) = parse_pipeline_file(&read(&pipeline)?, flags.prime)?;
            let x = parse_point(&point, p)?;
            let y = if backward { pl.backward(&x)? } else { pl.forward(&x)? };
            writeln!(out, "{}", show_point(&y)).map_err(|e| Error::Io(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Cmd::Check { pipeline } => {
            let (p, pl) = parse_pipeline_file(&read(&pipeline)?, flags.prime)?;
            let r = check_pipeline(p, &pl, &flags)?;
            writeln!(out, "{r}").map_err(|e| Error::Io(e.to_string()))?;
            Ok(if r.passed { EXIT_OK } else { EXIT_VERIFICATION })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match main_inner(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
