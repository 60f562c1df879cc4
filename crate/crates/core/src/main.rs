use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bogd::data::Manifest;
use bogd::harness::{self, ExperimentSpec, GridChoice, ReportRow};
use bogd::learners::LearnerKind;
use bogd::verify;

#[derive(Parser)]
#[command(
    name = "bogd",
    version,
    about = "Budgeted kernel online learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-search one algorithm on one dataset and write a report.
    Run {
        #[arg(long)]
        dataset: String,
        /// bogd, bogd++, perceptron, ogd or rbp
        #[arg(long)]
        algo: LearnerKind,
        /// Support-vector budget; defaults to the dataset's preset list.
        #[arg(long)]
        budget: Vec<usize>,
        /// default, tsquared, tlinear, or a path to a TOML grid file
        #[arg(long, default_value = "default")]
        grid: GridChoice,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian kernel width σ in exp(−‖x−x′‖²/(2σ²)).
        #[arg(long, default_value_t = 8.0)]
        width: f64,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property and oracle checks; exit status 0 iff all pass.
    Verify,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify => {
            let checks = verify::run_all();
            for check in &checks {
                println!("{check}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {} failed", checks.len(), failed);
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Run {
            dataset,
            algo,
            budget,
            grid,
            runs,
            seed,
            width,
            manifest,
            out,
        } => {
            let manifest = Manifest::from_path(&manifest)
                .with_context(|| format!("reading manifest {}", manifest.display()))?;
            let path = manifest
                .path_of(&dataset)
                .with_context(|| format!("dataset `{dataset}` not in manifest"))?
                .to_path_buf();
            let data = manifest.load(&dataset)?;
            log::info!(
                "{}: {} instances, {} features, from {}",
                dataset,
                data.len(),
                data.dimension,
                path.display()
            );

            let budgets: Vec<Option<usize>> = match (algo.is_budgeted(), budget.is_empty()) {
                (false, true) => vec![None],
                (false, false) => bail!("{algo} does not take a budget"),
                (true, false) => budget.into_iter().map(Some).collect(),
                (true, true) => match harness::default_budgets(&dataset) {
                    Some(list) => list.into_iter().map(Some).collect(),
                    None => bail!("{algo} needs --budget for dataset `{dataset}`"),
                },
            };

            let grid = grid.load()?;
            let log_path = out.with_extension("log");
            let mut side_log = BufWriter::new(
                File::create(&log_path)
                    .with_context(|| format!("creating {}", log_path.display()))?,
            );
            writeln!(side_log, "dataset {dataset} file {}", path.display())?;

            let mut rows = Vec::new();
            for b in budgets {
                let spec = ExperimentSpec {
                    learner: algo,
                    budget: b,
                    grid: grid.clone(),
                    runs,
                    base_seed: seed,
                    kernel_width: width,
                };
                let outcome = harness::grid_search(&spec, &data)?;
                let tag = b.map_or("-".to_string(), |b| b.to_string());
                for cell in &outcome.skipped {
                    writeln!(side_log, "budget {tag} skipped {cell}: lambda*eta > 1/2")?;
                }
                for result in &outcome.all {
                    let fallbacks = result.sampler_fallbacks();
                    if fallbacks > 0 {
                        writeln!(
                            side_log,
                            "budget {tag} cell {} sampler fallbacks {fallbacks}",
                            result.cell
                        )?;
                    }
                }
                let best = &outcome.best;
                println!(
                    "{dataset} {algo} B={tag}: {:.3}% ± {:.3} over {} runs, {:.1} SVs, {:.4}s, best {}",
                    100.0 * best.mean_mistake_rate,
                    100.0 * best.std,
                    best.runs.len(),
                    best.mean_sv_count,
                    best.mean_time,
                    best.cell
                );
                rows.push(ReportRow::from_grid(&dataset, &spec, best));
            }
            side_log.flush()?;
            harness::emit_report(&rows, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
