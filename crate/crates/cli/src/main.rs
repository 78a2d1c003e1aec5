use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spqc_cli::config::{parse_assignment, ExperimentConfig};
use spqc_cli::experiments::{self, ModelRuns};
use spqc_core::SpqcError;

#[derive(Debug, Parser)]
#[command(name = "spqc", version, about = "Superposed parameterised quantum circuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file with `[section]` tables of `key = value` pairs.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set step_compare.depth=6`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Number of training seeds.
    #[arg(long, global = true)]
    seeds: Option<usize>,

    #[arg(long, global = true)]
    epochs: Option<usize>,

    /// Adam learning rate.
    #[arg(long, global = true)]
    lr: Option<f64>,

    /// Output directory for CSV and SVG files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write SVG figures.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Superposed model vs depth-matched baseline on the square wave.
    StepCompare,
    /// Address register sizes on the square wave.
    AncillaScan,
    /// Linear vs quadratic classifiers on the star dataset.
    Star,
    /// Run the self-check suites.
    Verify,
    /// Shot statistics of post-selected readout.
    Sample {
        #[arg(long)]
        shots: Option<u64>,
        /// Sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Input value.
        #[arg(long)]
        x: Option<f64>,
    },
    /// Print the effective configuration.
    ShowConfig,
}

fn overrides(cli: &Cli) -> Result<Vec<(String, String)>, SpqcError> {
    let mut out: Vec<(String, String)> = cli.overrides.iter().map(|s| parse_assignment(s)).collect::<Result<_, _>>()?;
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    };
    push("train.seeds", cli.seeds.map(|v| v.to_string()));
    push("train.epochs", cli.epochs.map(|v| v.to_string()));
    push("train.learning_rate", cli.lr.map(|v| format!("{v:?}")));
    push("output.dir", cli.out.as_ref().map(|p| toml::Value::String(p.display().to_string()).to_string()));
    push("output.svg", cli.svg.then(|| "true".to_string()));
    if let Command::Sample { shots, seed, x } = &cli.command {
        push("sample.shots", shots.map(|v| v.to_string()));
        push("sample.seed", seed.map(|v| v.to_string()));
        push("sample.x", x.map(|v| format!("{v:?}")));
    }
    Ok(out)
}

fn print_regression(title: &str, rows: &[(String, &ModelRuns)]) {
    println!("{title}");
    println!("{:>8} {:>12} {:>12} {:>12} {:>12} {:>9} {:>9}", "model", "mse_mean", "mse_std", "mae_mean", "mae_std", "r2_mean", "r2_std");
    for (name, r) in rows {
        let s = &r.summary;
        println!(
            "{name:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>9.5} {:>9.5}",
            s.mse.mean, s.mse.std, s.mae.mean, s.mae.std, s.r2.mean, s.r2.std
        );
    }
}

fn run(cli: &Cli) -> Result<bool, SpqcError> {
    let config = ExperimentConfig::load(cli.config.as_deref(), &overrides(cli)?)?;
    match &cli.command {
        Command::StepCompare => {
            let o = experiments::step_compare(&config)?;
            print_regression("step task", &[("spqc".into(), &o.spqc), ("pqc".into(), &o.pqc)]);
            report_files(&o.files);
        }
        Command::AncillaScan => {
            let o = experiments::ancilla_scan(&config)?;
            let rows: Vec<(String, &ModelRuns)> = o.by_m.iter().map(|(m, r)| (format!("m={m}"), r)).collect();
            print_regression("address register scan", &rows);
            report_files(&o.files);
        }
        Command::Star => {
            let o = experiments::star(&config)?;
            println!("star task ({:.1}% of grid points inside)", 100.0 * o.inside_fraction);
            for r in [&o.linear, &o.quadratic] {
                let s = &r.summary;
                let acc = s.accuracy.expect("classification summary has accuracy");
                println!(
                    "{:>10} ({} qubits): mse {:.4e} ± {:.2e}, accuracy {:.2}% ± {:.2}",
                    r.label, r.num_qubits, s.mse.mean, s.mse.std, acc.mean, acc.std
                );
            }
            report_files(&o.files);
        }
        Command::Verify => {
            let results = experiments::verify_all()?;
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                println!("ALL CHECKS PASSED");
            } else {
                println!("SOME CHECKS FAILED");
                return Ok(false);
            }
        }
        Command::Sample { .. } => println!("{}", experiments::sample(&config)?),
        Command::ShowConfig => print!("{}", config.to_toml()),
    }
    Ok(true)
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ SpqcError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
