//! `wavefd` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (instability, failed verification, backend mismatch).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use wavefd::bench::{csv_table, markdown_table, run_bench, BenchSpec, DEFAULT_REPETITIONS};
use wavefd::config::{cmd_run, RunOptions};
use wavefd::kernel::Backend;
use wavefd::numerics::{first_derivative_coefficients, second_derivative_coefficients};
use wavefd::verify::{
    analytical_study, mms_study, spatial_study, temporal_study, ConvergenceReport, MmsCase, PointSourceCase,
    MMS_SPACINGS, SPATIAL_DT, SPATIAL_SPACINGS, TEMPORAL_DTS,
};
use wavefd::Precision;

#[derive(Parser)]
#[command(name = "wavefd", version, about = "Finite-difference acoustic wave simulator")]
struct Cli {
    /// Progress lines on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    /// Parallel workers; 1 forces the serial backend.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Reserved; the numerics are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification study.
    Verify(VerifyArgs),
    /// Time the propagator across orders and backends.
    Bench(BenchArgs),
    /// Print finite-difference coefficients.
    Coeff {
        #[arg(long)]
        order: usize,
        /// First-derivative weights instead of second-derivative ones.
        #[arg(long)]
        first: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Temporal,
    Spatial,
    Analytical,
    Mms,
}

#[derive(Args)]
struct VerifyArgs {
    suite: Suite,
    /// Space orders for the spatial study.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    orders: Vec<usize>,
    /// Write `(study, resolution, error)` rows here.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Interior grid shape, e.g. 128,128,128.
    #[arg(long, value_delimiter = ',', default_value = "128,128,128")]
    shape: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    orders: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, value_enum, default_value = "double")]
    precision: PrecisionArg,
    #[arg(long)]
    emit_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Single,
    Double,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .downcast_ref::<wavefd::Error>()
                .map(wavefd::Error::is_numerical)
                .unwrap_or(false);
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let backend = match cli.workers {
        None | Some(0) | Some(1) => Backend::Serial,
        Some(w) => Backend::Parallel { workers: w },
    };
    match cli.command {
        Command::Run { config, out } => {
            let manifest = cmd_run(
                &config,
                &out,
                RunOptions {
                    verbose: cli.verbose,
                    workers: cli.workers,
                },
            )?;
            println!(
                "{} steps of {:.6e} s on {:?} (extended {:?}); stability {}; {:.3} s",
                manifest.n_steps,
                manifest.dt,
                manifest.interior_shape,
                manifest.extended_shape,
                manifest.stability,
                manifest.wall_seconds
            );
            println!("outputs in {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => verify(args, backend, cli.verbose),
        Command::Bench(args) => bench(args, cli.workers),
        Command::Coeff { order, first } => {
            let c = if first {
                first_derivative_coefficients(order)?
            } else {
                second_derivative_coefficients(order)?
            };
            let mut out = std::io::stdout().lock();
            for (j, v) in c.iter().enumerate() {
                let j = if first { j + 1 } else { j };
                writeln!(out, "{j} {v:.16e}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn verify(args: VerifyArgs, backend: Backend, verbose: bool) -> anyhow::Result<ExitCode> {
    let start = Instant::now();
    let mut reports: Vec<(ConvergenceReport, bool, bool)> = Vec::new();
    let mut passed = true;
    match args.suite {
        Suite::Temporal => {
            let base = PointSourceCase { backend, ..PointSourceCase::standard() };
            let r = temporal_study(&base, &TEMPORAL_DTS)?;
            let ok = (1.8..=2.2).contains(&r.slope);
            reports.push((r, ok, true));
        }
        Suite::Spatial => {
            if args.orders.is_empty() {
                bail!("--orders must list at least one order");
            }
            let base = PointSourceCase {
                backend,
                dt: SPATIAL_DT,
                ..PointSourceCase::standard()
            };
            for &order in &args.orders {
                let r = spatial_study(&base, &SPATIAL_SPACINGS, order)?;
                let gated = order <= 8;
                let ok = r.slope_within(0.5);
                if verbose {
                    eprintln!("order {order} done after {:.1} s", start.elapsed().as_secs_f64());
                }
                reports.push((r, ok, gated));
            }
        }
        Suite::Mms => {
            let case = MmsCase { backend, ..MmsCase::standard() };
            let r = mms_study(&case, &MMS_SPACINGS)?;
            let ok = r.ratios().iter().all(|q| *q >= 1.5);
            reports.push((r, ok, true));
        }
        Suite::Analytical => {
            let case = PointSourceCase { backend, ..PointSourceCase::analytical() };
            let o = analytical_study(&case)?;
            let rel = o.relative_error();
            let ok = rel <= 0.01;
            println!(
                "analytical: max |numeric - reference| = {:.4e} ({:.4}% of peak {:.4e}) {}",
                o.max_error,
                100.0 * rel,
                o.reference_peak,
                if ok { "PASS" } else { "FAIL" }
            );
            if let Some(path) = &args.emit_csv {
                let mut text = String::from("t,numeric,reference\n");
                for ((t, a), b) in o.times.iter().zip(&o.numeric).zip(&o.reference) {
                    text.push_str(&format!("{t:.8e},{a:.8e},{b:.8e}\n"));
                }
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            return Ok(outcome(ok));
        }
    }
    let mut csv = String::from("study,resolution,error\n");
    for (r, ok, gated) in &reports {
        let status = match (gated, ok) {
            (false, _) => "REPORTED",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!(
            "{}: slope {:.3} (nominal {}) {}  points {:?}",
            r.label, r.slope, r.nominal, status, r.points
        );
        if *gated && !ok {
            passed = false;
        }
        for (h, e) in &r.points {
            csv.push_str(&format!("{},{h:e},{e:.8e}\n", r.label));
        }
    }
    if let Some(path) = &args.emit_csv {
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(outcome(passed))
}

fn outcome(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn bench(args: BenchArgs, workers: Option<usize>) -> anyhow::Result<ExitCode> {
    let mut backends = vec![Backend::Serial];
    let w = workers.unwrap_or(0);
    if w != 1 {
        backends.push(Backend::Parallel { workers: w });
    }
    let spec = BenchSpec {
        shape: args.shape,
        orders: args.orders,
        steps: args.steps,
        backends,
        repetitions: args.repetitions,
        precision: match args.precision {
            PrecisionArg::Single => Precision::Single,
            PrecisionArg::Double => Precision::Double,
        },
    };
    let rows = run_bench(&spec)?;
    print!("{}", markdown_table(&rows));
    if let Some(path) = &args.emit_csv {
        std::fs::write(path, csv_table(&rows)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}
