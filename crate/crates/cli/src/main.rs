use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sublinear_cli::acceptance::{self, Ctx};
use sublinear_cli::commands;
use sublinear_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "sublinear", version, about = "Ground states of -Δu = a(x) u^q with indefinite weights")]
struct Cli {
    /// Worker threads for parallel solves.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state at one exponent.
    Solve(ConfigArg),
    /// Positivity sweep, or branch toward q = 1 when `branch` is set.
    Sweep(ConfigArg),
    /// Principal eigenpair of the weight.
    Eigen(ConfigArg),
    /// Dirichlet Poisson solve with the weight as source.
    Poisson(ConfigArg),
    /// Structural and explicit sufficient conditions on the weight.
    Conditions(ConfigArg),
    /// Dead-core δ sweep and barrier prediction.
    Deadcore(ConfigArg),
    /// Built-in acceptance suite.
    Verify {
        /// Print check names without running them.
        #[arg(long)]
        list: bool,
        /// Run only these check ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[arg(long, hide = true)]
        corrupt_threshold: Option<u32>,
    },
}

fn run_config(arg: &ConfigArg, f: fn(&RunConfig, &std::path::Path) -> CliResult<()>) -> CliResult<()> {
    let cfg = RunConfig::load(&arg.config)?;
    let dir = cfg.output_dir()?;
    f(&cfg, &dir)
}

fn verify(list: bool, only: &[u32], corrupt: Option<u32>) -> CliResult<()> {
    if list {
        for (id, name) in acceptance::list() {
            println!("{id:>2} {name}");
        }
        return Ok(());
    }
    let outcomes = acceptance::run(&Ctx { corrupt }, only);
    for o in &outcomes {
        println!("{}", acceptance::format_line(o));
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{} {}", o.id, o.name))
        .collect();
    println!("{} of {} checks passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(c) => run_config(c, commands::cmd_solve),
        Command::Sweep(c) => run_config(c, commands::cmd_sweep),
        Command::Eigen(c) => run_config(c, commands::cmd_eigen),
        Command::Poisson(c) => run_config(c, commands::cmd_poisson),
        Command::Conditions(c) => run_config(c, commands::cmd_conditions),
        Command::Deadcore(c) => run_config(c, commands::cmd_deadcore),
        Command::Verify {
            list,
            only,
            corrupt_threshold,
        } => verify(*list, only, *corrupt_threshold),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(match (&cli.command, cli.verbose) {
            (_, true) => log::LevelFilter::Info,
            // the suite deliberately runs divergent cases
            (Command::Verify { .. }, false) => log::LevelFilter::Error,
            _ => log::LevelFilter::Warn,
        })
        .init();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
