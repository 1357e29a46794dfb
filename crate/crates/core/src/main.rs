use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dissipon::cli::{self, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "dissipon", version, about = "Brownian motion in dissipative media: batch runs")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Execute the command named in the run file and write its outputs.
    Run(Common),
    /// Check every block of the run file without writing anything.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Run file (may also be given with --config).
    #[arg(value_name = "CONFIG")]
    path: Option<PathBuf>,
    #[arg(long = "config", value_name = "PATH")]
    config: Option<PathBuf>,
    /// `section.key=value`; repeatable, later ones win.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `run.output` or the current directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; falls back to DISSIPON_THREADS.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn config_path(&self) -> Result<PathBuf, RunError> {
        match (&self.path, &self.config) {
            (Some(a), Some(b)) if a != b => Err(RunError::Config(vec![format!(
                "two run files given: {} and {}",
                a.display(),
                b.display()
            )])),
            (Some(p), _) | (None, Some(p)) => Ok(p.clone()),
            (None, None) => Err(RunError::Config(vec!["no run file given; use --config <path>".into()])),
        }
    }
}

fn set_threads(n: Option<usize>) -> Result<(), RunError> {
    let n = match n {
        Some(n) => Some(n),
        None => match std::env::var("DISSIPON_THREADS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| {
                RunError::Config(vec![format!("DISSIPON_THREADS must be a positive integer, got `{s}`")])
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(RunError::Config(vec!["thread count must be >= 1".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(vec![format!("thread pool: {e}")]))?;
    }
    Ok(())
}

fn execute(args: &Common) -> Result<(), RunError> {
    set_threads(args.threads)?;
    let path = args.config_path()?;
    let cfg = RunConfig::load(&path, &args.overrides)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let (manifest, warnings) = cli::run(&cfg, &out)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if !args.quiet {
        for (name, _) in &manifest.files {
            println!("{}", out.join(name).display());
        }
        println!("{}", out.join(cli::MANIFEST_NAME).display());
    }
    Ok(())
}

fn check(args: &Common) -> Result<(), RunError> {
    let path = args.config_path()?;
    let report = cli::validate(&path, &args.overrides);
    if report.is_empty() {
        if !args.quiet {
            println!("{}: ok", path.display());
        }
        Ok(())
    } else {
        Err(RunError::Config(report))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.action {
        Action::Run(a) => execute(a),
        Action::Validate(a) => check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
