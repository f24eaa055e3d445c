//! `pdsort`: exact and PDE-based approximate non-dominated sorting from the
//! command line.
//!
//! Points and ranks are exchanged as CSV, grid fields in the binary
//! container of `pdsort::GridField`, and reports as JSON. Every successful
//! run writes a manifest with its resolved configuration, input digests and
//! timings next to its primary output.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use commands::{CmdResult, Failure, Finished};
use manifest::{digest, manifest_path, Manifest, Timings};

fn thread_count(flag: Option<usize>) -> CmdResult<usize> {
    let env = match std::env::var("PD_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
            Failure::Usage(format!(
                "PD_THREADS: expected a positive integer, got {v:?}"
            ))
        })?),
        Err(_) => None,
    };
    let n = env
        .or(flag)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(Failure::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn run(cli: &Cli, argv: Vec<String>) -> CmdResult<()> {
    let threads = thread_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Run(e.to_string()))?;

    let start = Instant::now();
    let mut stdout = None;
    let finished: Finished = match &cli.command {
        Command::SortExact(a) => commands::sort_exact_cmd(a)?,
        Command::SolvePde(a) => commands::solve_pde_cmd(a)?,
        Command::EstimateDensity(a) => commands::estimate_density_cmd(a)?,
        Command::RankApprox(a) => commands::rank_approx_cmd(a)?,
        Command::EvalAccuracy(a) => {
            let (f, out) = commands::eval_accuracy_cmd(a)?;
            stdout = out;
            f
        }
        Command::Experiment(e) => commands::experiment_cmd(e)?,
    };
    let elapsed = start.elapsed();
    log::info!(
        "{} finished in {:.3}s",
        cli.command.name(),
        elapsed.as_secs_f64()
    );

    let inputs = finished
        .inputs
        .iter()
        .map(|p| digest(p))
        .collect::<std::io::Result<Vec<_>>>()?;
    let path = manifest_path(
        cli.out_dir.as_deref(),
        finished.outputs.first().map(|p| p.as_path()),
        cli.command.name(),
    );
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        argv,
        threads,
        config: serde_json::to_value(&cli.command).expect("config serializes"),
        resolved: finished.resolved,
        inputs,
        outputs: finished.outputs,
        timings_ms: Timings {
            total: elapsed.as_secs_f64() * 1e3,
        },
        result: finished.result,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    commands::write_atomic(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)
    })?;
    if let Some(text) = stdout {
        println!("{text}");
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&manifest.result).expect("json")
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(&cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
