use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use teleportsim_cli::{channel_map, load_config, simulate, sweep, threads_from_env, CliError, Mode, RunConfig};

#[derive(Parser)]
#[command(
    name = "teleportsim",
    version,
    about = "Heralded CV teleportation as a Gaussian channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run: moments, fidelity, (T_q, V_q), (tau, nu), class and E_F.
    Simulate(RunArgs),
    /// Parameter sweep written as CSV.
    Sweep(RunArgs),
    /// Inspect a (tau, nu) channel.
    ChannelMap {
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        #[arg(long, default_value_t = teleportsim::channel::DEFAULT_R_CHOI)]
        r_choi: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut c = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(mode) = self.mode {
            c.mode = mode;
        }
        if let Some(out) = &self.out {
            c.output = Some(out.clone());
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let c = args.load()?;
            let report = simulate(&c, threads_from_env()?)?;
            match &c.output {
                Some(path) => std::fs::write(path, report)?,
                None => print!("{report}"),
            }
        }
        Command::Sweep(args) => {
            let c = args.load()?;
            let threads = threads_from_env()?;
            match &c.output {
                Some(path) => {
                    sweep(&c, threads, BufWriter::new(File::create(path)?))?;
                }
                None => {
                    sweep(&c, threads, io::stdout().lock())?;
                }
            }
        }
        Command::ChannelMap { tau, nu, r_choi } => print!("{}", channel_map(tau, nu, r_choi)?),
    }
    io::stdout().flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
