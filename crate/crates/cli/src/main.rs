mod args;
mod commands;
mod error;
mod output;
mod volume;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use args::{merge_config, Cli, Command};
use error::{CliError, CliResult};
use output::{digest, write_json, OutDir, RunManifest, Status};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    if let Err(e) = run(argv) {
        eprintln!("error: {e}");
        std::process::exit(e.category.exit_code());
    }
}

fn parse(argv: &[String]) -> Cli {
    Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit())
}

/// Drops `--config` so a replay does not read the file again.
fn without_config(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--config" {
            skip = true;
        } else if !a.starts_with("--config=") {
            out.push(a.clone());
        }
    }
    out
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ (u64::from(std::process::id()) << 32)
}

fn inputs(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Volume(a) => vec![a.body.clone()],
        Command::Sample(_) => Vec::new(),
        Command::Copula(a) => vec![a.returns.clone()],
        Command::Indicator(a) => vec![a.returns.clone()],
    }
}

fn run(argv: Vec<String>) -> CliResult<()> {
    let mut cli = parse(&argv);
    let mut resolved = argv;
    if let Some(path) = cli.global.config.clone() {
        resolved = merge_config(&resolved, &path)?;
        cli = parse(&resolved);
    }
    let mut replay = without_config(&resolved);
    let seed_generated = cli.global.seed.is_none();
    let seed = cli.global.seed.unwrap_or_else(fresh_seed);
    if seed_generated {
        replay.push(format!("--seed={seed}"));
    }
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        std::env::set_var("SIMPLEXSLICE_THREADS", t.to_string());
    }
    let dir = OutDir::new(cli.global.out_dir.clone());
    let config = serde_json::to_value(&cli).map_err(volume::json_err)?;
    let mut manifest = RunManifest::new(
        cli.command.name(),
        replay,
        config,
        seed,
        seed_generated,
        cli.global.threads,
    );
    for p in inputs(&cli.command) {
        manifest.inputs.push(digest(&p)?);
    }
    let manifest_path = dir.manifest();
    write_json(&manifest_path, &manifest)?;
    let started = Instant::now();
    let result = match &cli.command {
        Command::Volume(a) => commands::volume(a, seed, &dir),
        Command::Sample(a) => commands::sample(a, seed, &dir),
        Command::Copula(a) => commands::copula(a, seed, &dir),
        Command::Indicator(a) => commands::indicator(a, seed, &dir),
    };
    manifest.wall_time_seconds = Some(started.elapsed().as_secs_f64());
    match &result {
        Ok(outputs) => {
            manifest.status = Status::Complete;
            manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        }
        Err(e) => {
            manifest.status = Status::Failed;
            manifest.error = Some(e.message.clone());
        }
    }
    write_json(&manifest_path, &manifest)?;
    result.map(|_| ())
}
