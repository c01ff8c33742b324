//! `radiant`: generate synthetic data, train object and background fields,
//! edit the object, compose and evaluate.

mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Target};
use error::{CliError, CliResult};

/// Every other `--name value` is a dot-path override of a configuration
/// field, e.g. `--idu.d 2` or `--object_train.iterations=300`.
#[derive(Debug, Parser)]
#[command(
    name = "radiant",
    version,
    about = "Disentangled voxel radiance fields: train, edit, compose"
)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render ground-truth datasets and inpainted background views.
    GenData,
    /// Fit the object or background field.
    Train {
        #[arg(value_enum)]
        target: Target,
    },
    /// Run the iterative dataset update on the trained object field.
    Edit,
    /// Render object and background together under the configured transform.
    Compose,
    /// Score composed renders against the reference views.
    Eval,
    /// All stages in order.
    Pipeline,
}

type Overrides = Vec<(String, String)>;

const VALUE_FLAGS: [&str; 3] = ["config", "seed", "out"];
const BOOL_FLAGS: [&str; 3] = ["quiet", "help", "version"];

/// Splits dot-path overrides out of `args`, leaving what clap understands.
fn split_overrides(args: Vec<OsString>) -> CliResult<(Vec<OsString>, Overrides)> {
    let mut keep = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    keep.extend(iter.next());
    while let Some(arg) = iter.next() {
        let Some(s) = arg.to_str() else {
            keep.push(arg);
            continue;
        };
        if s == "--" {
            keep.push(arg);
            keep.extend(iter);
            break;
        }
        let Some(body) = s.strip_prefix("--") else {
            keep.push(arg);
            continue;
        };
        let (name, inline) = match body.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (body, None),
        };
        if VALUE_FLAGS.contains(&name) || BOOL_FLAGS.contains(&name) {
            keep.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => iter
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| CliError::Input(format!("--{name} needs a value")))?,
        };
        overrides.push((name.to_string(), value));
    }
    Ok((keep, overrides))
}

fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var("RADIANT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Input(format!(
            "RADIANT_THREADS must be a non-negative integer, got {raw:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli, overrides: Overrides) -> CliResult {
    configure_threads()?;
    let mut cfg = config::load(cli.config.as_deref(), &overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    cfg.validate()?;
    let ctx = Ctx {
        cfg,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::GenData => commands::gen_data(&ctx),
        Command::Train { target } => commands::train(&ctx, target),
        Command::Edit => commands::edit(&ctx),
        Command::Compose => commands::compose(&ctx),
        Command::Eval => commands::eval(&ctx),
        Command::Pipeline => commands::pipeline(&ctx),
    }
}

fn main() -> ExitCode {
    let (args, overrides) = match split_overrides(std::env::args_os().collect()) {
        Ok(split) => split,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
