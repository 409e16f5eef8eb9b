use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shg::commands::{self, SweepOverrides};
use shg::montecarlo::SweepParam;
use shg::{load_config, CliError, ScenarioConfig};

const CONFIG_HELP: &str = "\
Config file (TOML), defaults in parentheses:
  seed (0), output_dir (\"out\")
  [medium]       sigma_mu (0.02), l_mu (0.25), alpha (0.45),
                 support_box = [x0, y0, x1, y1] square ([-1, -1, 1, 1]), grid_n (64)
  [reflector]    z_r = [x, y], delta, sigma_r, chi = [[xx, xy], [xy, yy]] (all required),
                 shape (\"disk\")
  [illumination] omega (required), u_i (1), count (8)
  [sensors]      radius (\"auto\": 20 wavelengths), count (\"auto\": half-wavelength spacing)
  [search_grid]  n_x (128), n_y (128), box (medium support)
  [noise]        sigma (0)
  [sweep]        parameter (medium_noise | volume | measurement_noise), values, trials (120)

Exit status: 0 success, 2 usage, 3 config, 4 computation or failed selftest, 5 I/O or file format.";

/// Locate a small nonlinear reflector in a random medium from
/// fundamental and second-harmonic boundary data.
#[derive(Debug, Parser)]
#[command(name = "shg", version, after_help = CONFIG_HELP)]
struct Cli {
    /// Scenario file (TOML). Required by simulate, image and sweep.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides `seed` in the config (default 0).
    #[arg(long, global = true, env = "SHG_SEED")]
    seed: Option<u64>,

    /// Output directory; overrides `output_dir` in the config (default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw the medium and write boundary data at both frequencies.
    Simulate,
    /// Image boundary data with both functionals and report the peaks.
    Image {
        /// Directory holding the boundary data (default: the output directory).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Monte Carlo sweep of localization error.
    Sweep {
        /// medium_noise, volume or measurement_noise; overrides sweep.parameter.
        #[arg(long)]
        sweep_param: Option<SweepParam>,
        /// Comma-separated values; override sweep.values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sweep_values: Option<Vec<f64>>,
        /// Trials per value; overrides sweep.trials (default 120).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run built-in numerical checks.
    Selftest,
}

fn config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg = cfg.with_output_dir(out.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Simulate => {
            for p in commands::simulate(&config(&cli)?)? {
                println!("{}", p.display());
            }
        }
        Command::Image { data } => {
            let cfg = config(&cli)?;
            let dir = data.clone().unwrap_or_else(|| cfg.output_dir().to_path_buf());
            for p in commands::image(&cfg, &dir)? {
                println!("{}", p.display());
            }
        }
        Command::Sweep {
            sweep_param,
            sweep_values,
            trials,
        } => {
            let o = SweepOverrides {
                param: *sweep_param,
                values: sweep_values.clone(),
                trials: *trials,
            };
            for p in commands::sweep(&config(&cli)?, &o)? {
                println!("{}", p.display());
            }
        }
        Command::Selftest => {
            let checks = commands::selftest()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(CliError::SelfTest(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
