use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qcbm::codes::CodeKind;
use qcbm_cli::config::TrainFile;
use qcbm_cli::inspect::{check_codes, render_table, shipped_table};
use qcbm_cli::sweep::{self, SweepSpec};
use qcbm_cli::{report, run};

#[derive(Parser)]
#[command(name = "qcbm", version, about = "Train quantum circuit Born machines under different binary codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the binary codes.
    #[command(subcommand)]
    Codes(CodesCommand),
    /// Train one model from a TOML config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; defaults to `runs/<code>-n<n>-L<L>-<dataset>-nu<nu>-s<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of training runs.
    Sweep(SweepArgs),
    /// Aggregate a sweep or run directory into figure data.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Output directory; defaults to `<dir>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CodesCommand {
    /// Print the standard, reflected Gray and monotone Gray codes.
    Table {
        #[arg(long)]
        n: u32,
    },
    /// Check code properties for n = 1..=n-max.
    Check {
        #[arg(long, default_value_t = 16)]
        n_max: u32,
        /// Swap entries `I,J` of every monotone Gray table before checking.
        #[arg(long, hide = true, value_name = "I,J")]
        inject_mgc_swap: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SweepSource {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// One of fig3-mini, fig4-mini, fig5-mini.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SweepSource,
    /// Results directory; overrides the spec's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_swap(s: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = s.split_once(',').context("expected I,J")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn main() -> ExitCode {
    match run_cli(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run_cli(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Codes(CodesCommand::Table { n }) => {
            print!("{}", render_table(n)?);
        }
        Command::Codes(CodesCommand::Check { n_max, inject_mgc_swap }) => {
            let swap = inject_mgc_swap.as_deref().map(parse_swap).transpose()?;
            let report = check_codes(n_max, |kind, n| {
                let mut t = shipped_table(kind, n)?;
                if let (CodeKind::MonotoneGray, Some((i, j))) = (kind, swap) {
                    if i < t.len() && j < t.len() {
                        t.swap(i, j);
                    }
                }
                Ok(t)
            })?;
            for line in &report.lines {
                println!("{line}");
            }
            if !report.passed() {
                for f in &report.failures {
                    eprintln!("FAIL {f}");
                }
                return Ok(ExitCode::FAILURE);
            }
            println!("all checks passed for n = 1..={n_max}");
        }
        Command::Train { config, out } => {
            let cfg = TrainFile::load(&config)?;
            let dir = out.unwrap_or_else(|| {
                let key = sweep::RunKey {
                    code: cfg.code,
                    dataset: cfg.dataset.kind,
                    nu: cfg.dataset.nu,
                    qubits: cfg.qubits,
                    layers: cfg.layers,
                    seed: cfg.dataset_seed(),
                };
                PathBuf::from("runs").join(key.dir_name())
            });
            let r = run::execute(&cfg, &dir)?;
            println!(
                "{}: Q = {:.4e}, final loss = {:.4e}, reference = {:.4e}",
                dir.display(),
                r.record.q_score,
                r.record.final_loss(),
                r.record.reference_loss
            );
        }
        Command::Sweep(args) => {
            let spec = match (&args.source.spec, &args.source.preset) {
                (Some(path), _) => SweepSpec::load(path)?,
                (None, Some(name)) => SweepSpec::preset(name)?,
                (None, None) => unreachable!("clap enforces one source"),
            };
            let out = args.out.unwrap_or_else(|| spec.output.clone());
            let workers = sweep::worker_count();
            let total = spec.runs().len();
            eprintln!("{total} runs into {} with {workers} workers", out.display());
            let outcome = sweep::execute(&spec, &out, workers)?;
            println!(
                "{} rows ({} trained, {} already complete), {} failed",
                outcome.rows.len(),
                outcome.executed,
                outcome.skipped,
                outcome.failures.len()
            );
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("FAIL {}: {}", f.run_dir, f.error);
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Report { dir, out } => {
            let r = report::generate(&dir, out.as_deref())?;
            for w in &r.wins {
                println!(
                    "{}: reflected Gray best in {}/{} cells (rc {}, sc {}, mgc {}){}",
                    w.dataset,
                    w.rgc_best,
                    w.cells,
                    w.rc_best,
                    w.sc_best,
                    w.mgc_best,
                    if w.partial_cells > 0 { format!(", {} partial", w.partial_cells) } else { String::new() }
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
