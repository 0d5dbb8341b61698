use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sgcalc::corpus::{self, CORPUS};
use sgcalc::explain::{explain, TASKS};
use sgcalc::{run, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "sgcalc", version, about = "SG phase functions, Lagrangians and oscillatory integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name).
    Run {
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        eps_ell: f64,
        #[arg(long, default_value_t = 1e-10)]
        newton_tol: f64,
        /// Worker threads for inner parallel loops.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// List bundled scenarios; with --write, also store them in a directory.
    Corpus {
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Print the statement a task kind checks.
    Explain { task: String },
}

fn load(arg: &str) -> Result<Scenario, String> {
    let path = PathBuf::from(arg);
    if !path.exists() {
        if let Some(entry) = corpus::find(arg) {
            return Scenario::from_json(entry.json).map_err(|e| e.to_string());
        }
    }
    Scenario::load(&path).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            eps_ell,
            newton_tol,
            parallel,
        } => {
            let sc = match load(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let cfg = RunConfig {
                seed,
                eps_ell,
                newton_tol,
                parallel,
            };
            match run(&sc, &out, &cfg) {
                Ok(report) => {
                    for t in &report.tasks {
                        let mark = if t.expectation_met { "" } else { " (unexpected)" };
                        println!("[{:?}] {}: {}{mark}", t.verdict, t.kind, t.summary);
                    }
                    println!("report: {}", out.join("report.json").display());
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Corpus { write } => {
            for e in &CORPUS {
                let desc = Scenario::from_json(e.json)
                    .map(|s| s.file.description)
                    .unwrap_or_default();
                println!("{:<24} {desc}", e.name);
                if let Some(dir) = &write {
                    if let Err(err) = std::fs::create_dir_all(dir)
                        .and_then(|_| std::fs::write(dir.join(format!("{}.json", e.name)), e.json))
                    {
                        eprintln!("error: {err}");
                        return ExitCode::from(2);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Command::Explain { task } => match explain(&task) {
            Some(text) => {
                println!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("unknown task `{task}`; known: {}", TASKS.join(", "));
                ExitCode::from(2)
            }
        },
    }
}
