use std::path::PathBuf;
use std::process::ExitCode;

use biconserve_cli::{commands, init_thread_pool, CliError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "biconserve", version, about = "Biconservative PNMCV surfaces in E4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the mean curvature f(s) and write f_solution.csv.
    Solve(RunArgs),
    /// Build the profile and surface and export CSV and OBJ files.
    Build(RunArgs),
    /// Run every check on the verification grid and write report.json.
    Verify(RunArgs),
    /// Verify each (c, c2, f0) combination and write sweep.csv.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    c2: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    f0: Option<String>,
    /// Initial branch, +1 or -1.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<String>,
    /// Arc-length span A:B.
    #[arg(long, allow_hyphen_values = true)]
    span: Option<String>,
    /// Grid NxM.
    #[arg(long)]
    grid: Option<String>,
    /// Relative scaling of the third coordinate (negative control).
    #[arg(long, allow_negative_numbers = true)]
    perturb: Option<String>,
    /// Halve every default tolerance.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<String>,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated values of c.
    #[arg(long, allow_hyphen_values = true)]
    sweep_c: Option<String>,
    #[arg(long)]
    sweep_c2: Option<String>,
    #[arg(long)]
    sweep_f0: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            cfg.merge_text(&text)?;
        }
        let flags = [
            ("c", &self.c),
            ("c2", &self.c2),
            ("f0", &self.f0),
            ("eps", &self.eps),
            ("span", &self.span),
            ("grid", &self.grid),
            ("perturb", &self.perturb),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(CliError::Usage)?;
            }
        }
        if self.strict {
            cfg.strict = true;
        }
        for item in &self.tol {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got `{item}`")))?;
            cfg.set(&format!("tol.{}", name.trim()), value).map_err(CliError::Usage)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_thread_pool()?;
    match cli.command {
        Command::Solve(args) => commands::solve(&args.config()?),
        Command::Build(args) => commands::build(&args.config()?),
        Command::Verify(args) => commands::verify(&args.config()?),
        Command::Sweep(args) => {
            let mut cfg = args.run.config()?;
            for (key, value) in [("sweep_c", &args.sweep_c), ("sweep_c2", &args.sweep_c2), ("sweep_f0", &args.sweep_f0)]
            {
                if let Some(v) = value {
                    cfg.set(key, v).map_err(CliError::Usage)?;
                }
            }
            commands::sweep(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
