//! `ghostpath`: run two-path interferometric circuits from the command line.
//!
//! Exit codes: 0 on success (and a PASS verdict), 1 on a FAIL verdict,
//! 2 on usage or input errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ghostpath::circuit::{parse, parse_angle, prepare_empty, prepare_protocol, Circuit};
use ghostpath::classes::ClassLabel;
use ghostpath::geometry::{Spherical, UnitVec3};
use ghostpath::harness::{
    class_trace, compare, quantum_histories, run_exact, run_sample, CompareOptions, Demo,
    RunReport,
};
use ghostpath::ontic::Path;

#[derive(Parser)]
#[command(
    name = "ghostpath",
    version,
    about = "Simulate two-path interferometric circuits on three equivalent backends"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact branch-by-branch distribution of a circuit
    Exact {
        /// Circuit file
        circuit: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Monte Carlo outcome counts
    Sample {
        /// Circuit file
        circuit: PathBuf,
        /// Number of shots
        #[arg(long)]
        shots: u64,
        /// Master RNG seed; each shot derives its own stream
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Step-by-step class-label evolution
    Classes {
        /// Circuit file
        circuit: PathBuf,
    },
    /// History probabilities from the qubit backend
    Quantum {
        /// Circuit file
        circuit: PathBuf,
    },
    /// Check the three exact backends (and optionally Monte Carlo) agree
    Compare {
        /// Circuit file
        circuit: PathBuf,
        /// Also sample this many shots and hold them against the exact run
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Agreement tolerance on exact probabilities
        #[arg(long, default_value_t = ghostpath::harness::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Emit a circuit that prepares a requested state
    Prepare(PrepareSpec),
    /// Run a bundled demonstration circuit and compare all backends
    Demo {
        /// One of: mz, mz-phase, mz-detector
        name: String,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PrepareSpec {
    /// Class member: "theta,phi,alpha,beta" (label colatitude and azimuth,
    /// two ghost phases; angles accept PI forms)
    #[arg(long)]
    target: Option<String>,
    /// One-point state with an empty companion path: "i,theta,phi"
    #[arg(long)]
    empty: Option<String>,
}

fn main() -> ExitCode {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Exact { circuit, format } => {
            let circuit = load_circuit(&circuit)?;
            let tree = run_exact(&circuit)?;
            match format {
                Format::Json => println!("{}", tree.to_json()),
                Format::Csv => print!("{}", tree.to_csv()),
            }
            Ok(true)
        }
        Command::Sample { circuit, shots, seed, format } => {
            let circuit = load_circuit(&circuit)?;
            let report = run_sample(&circuit, shots, seed)?;
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()),
            }
            Ok(true)
        }
        Command::Classes { circuit } => {
            let circuit = load_circuit(&circuit)?;
            for step in class_trace(&circuit)? {
                println!("{}", step.label);
                for branch in &step.branches {
                    let [x, y, z] = branch.vector;
                    println!(
                        "  {:<32} p={:<12.9} [{x:+.9}, {y:+.9}, {z:+.9}]",
                        branch.history, branch.probability
                    );
                }
            }
            Ok(true)
        }
        Command::Quantum { circuit } => {
            let circuit = load_circuit(&circuit)?;
            let (table, selection) = quantum_histories(&circuit)?;
            println!("{:<32} probability", "history");
            for (history, probability) in &table {
                println!(
                    "{:<32} {probability:.12}",
                    ghostpath::harness::history_label(history)
                );
            }
            if (selection - 1.0).abs() > 1e-15 {
                println!("selection probability: {selection:.12}");
            }
            Ok(true)
        }
        Command::Compare { circuit, shots, seed, tol, format } => {
            let circuit = load_circuit(&circuit)?;
            let report = compare(&circuit, &CompareOptions { shots, seed, tol })?;
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()),
            }
            Ok(report.passed)
        }
        Command::Prepare(spec) => {
            let circuit = build_preparation(&spec)?;
            print!("{}", circuit.serialize()?);
            Ok(true)
        }
        Command::Demo { name, shots, seed } => {
            let demo = Demo::from_name(&name)
                .ok_or_else(|| anyhow!("unknown demo '{name}'; try mz, mz-phase, mz-detector"))?;
            let circuit = demo.circuit();
            println!("# {name}");
            print!("{}", circuit.serialize()?);
            println!();
            let options = CompareOptions { shots: Some(shots), seed, ..Default::default() };
            let report = compare(&circuit, &options)?;
            print_report_table(&report);
            Ok(report.passed)
        }
    }
}

fn load_circuit(path: &PathBuf) -> Result<Circuit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading circuit file {}", path.display()))?;
    let circuit =
        parse(&text).with_context(|| format!("parsing circuit file {}", path.display()))?;
    Ok(circuit)
}

fn parse_angles(value: &str, expected: usize, flag: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != expected {
        bail!("--{flag} expects {expected} comma-separated values, got {}", parts.len());
    }
    parts
        .iter()
        .map(|token| {
            parse_angle(token).ok_or_else(|| anyhow!("--{flag}: '{token}' is not an angle"))
        })
        .collect()
}

fn build_preparation(spec: &PrepareSpec) -> Result<Circuit> {
    if let Some(target) = &spec.target {
        let values = parse_angles(target, 4, "target")?;
        let label = ClassLabel::from_spherical(values[0], values[1]);
        return Ok(prepare_protocol(&label, values[2], values[3]));
    }
    let empty = spec.empty.as_ref().expect("clap enforces one of the two flags");
    let parts: Vec<&str> = empty.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("--empty expects i,theta,phi, got {} values", parts.len());
    }
    let path = match parts[0] {
        "0" => Path::P0,
        "1" => Path::P1,
        other => bail!("--empty: path must be 0 or 1, got '{other}'"),
    };
    let theta = parse_angle(parts[1]).ok_or_else(|| anyhow!("--empty: bad angle '{}'", parts[1]))?;
    let phi = parse_angle(parts[2]).ok_or_else(|| anyhow!("--empty: bad angle '{}'", parts[2]))?;
    let vec = UnitVec3::from_spherical(Spherical::new(theta, phi));
    Ok(prepare_empty(path, &vec)?)
}

fn print_report_table(report: &RunReport) {
    println!(
        "{:<24} {:>14} {:>14} {:>14} {:>10} {:>12} {:>8}",
        "history", "exact_p", "class_p", "quantum_p", "counts", "sigma", "verdict"
    );
    for row in &report.rows {
        let counts = row.counts.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
        let sigma = row.sigma.map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<24} {:>14.9} {:>14.9} {:>14.9} {:>10} {:>12} {:>8}",
            row.history, row.exact_p, row.class_p, row.quantum_p, counts, sigma, row.verdict
        );
    }
    if let (Some(shots), Some(discarded)) = (report.shots, report.discarded) {
        println!("shots: {shots}  discarded: {discarded}");
    }
    println!("selection probability: {:.9}", report.selection_probability);
    match &report.failure {
        None => println!("verdict: PASS"),
        Some(reason) => println!("verdict: FAIL ({reason})"),
    }
}
