use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spincav_core::config::{load_config_file, load_preset, RunConfig};
use spincav_core::{Error, Result};

mod commands;
mod output;

/// Spin-ensemble cavity response: transition tables, reflectivity maps,
/// nonlinear onsets, sensitivity and parameter fits.
#[derive(Parser)]
#[command(name = "spincav", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Shipped configuration (nv_fig3, p1_fig4); used when --config is absent.
    #[arg(long, global = true, default_value = "nv_fig3")]
    preset: String,
    /// Override one config value, e.g. --set cavity.gamma_c_hz=2.6e5.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory. CSV and JSON results are also written here.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// NV ω± for all four classes along the configured field direction.
    NvFreqs {
        /// Single field value instead of the configured sweep.
        #[arg(long)]
        field_mt: Option<f64>,
    },
    /// P1 hyperfine lines.
    P1Freqs {
        #[arg(long, default_value_t = 89.0)]
        field_mt: f64,
        /// Angle between field and defect axis; default: the four ⟨111⟩ axes.
        #[arg(long)]
        cos2_theta: Option<f64>,
    },
    /// ODMR branch curves ω±(|B|) over the configured field sweep.
    OdmrLines,
    /// Reflectivity maps for every power and laser level.
    Cdmr,
    /// Ensemble coupling from the configured field map.
    Coupling,
    /// Shot-noise-limited spin-number sensitivity and cooperativity.
    Sensitivity {
        #[arg(long, default_value = "L0")]
        level: String,
    },
    /// Weak-nonlinearity expansion of the shift of one spin dip.
    Expand {
        #[arg(long, default_value = "L0")]
        level: String,
        /// Spin detuning ω_c − ω_s / 2π; default 1/(2π T2).
        #[arg(long)]
        detuning_mhz: Option<f64>,
    },
    /// Lowest bistability onset over spin detuning.
    Bistability {
        #[arg(long, default_value = "L0")]
        level: String,
    },
    /// Field rotation angles from ODMR lines.
    FitOrientation {
        /// `B_T,freq_Hz[,freq_Hz...]` CSV.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run this many noisy synthetic refits at the configured angles.
        #[arg(long, value_name = "TRIALS")]
        monte_carlo: Option<usize>,
        /// Noise standard deviation as a fraction of each line's |ω − D|.
        #[arg(long, default_value_t = 0.05)]
        noise_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Angle held fixed: x, y or z.
        #[arg(long, default_value = "z")]
        fixed_angle: char,
    },
    /// Cavity (ω_c, γ_c, γ_f) from a `freq_Hz,Rc` reflectivity trace.
    FitCavity {
        #[arg(long)]
        data: PathBuf,
    },
    /// Lorentzian FWHM of a single dip in a `freq_Hz,signal` trace.
    FitFwhm {
        #[arg(long)]
        data: PathBuf,
    },
    /// Field-map utilities.
    Fieldmap {
        #[command(subcommand)]
        command: FieldmapCommand,
    },
}

#[derive(Subcommand)]
enum FieldmapCommand {
    /// Current-loop field on the configured grid.
    GenLoop,
}

fn load(global: &GlobalArgs) -> Result<RunConfig> {
    match &global.config {
        Some(path) => load_config_file(path, &global.set),
        None => load_preset(&global.preset, &global.set),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SPINCAV_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("SPINCAV_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(Error::invalid("SPINCAV_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let cfg = load(&cli.global)?;
    let out = output::Output::new(cli.global.out.clone(), &cfg);
    use commands as c;
    match cli.command {
        Command::NvFreqs { field_mt } => c::nv_freqs(&cfg, &out, field_mt),
        Command::P1Freqs { field_mt, cos2_theta } => c::p1_freqs(&cfg, &out, field_mt, cos2_theta),
        Command::OdmrLines => c::odmr_lines(&cfg, &out),
        Command::Cdmr => c::cdmr(&cfg, &out),
        Command::Coupling => c::coupling(&cfg, &out),
        Command::Sensitivity { level } => c::sensitivity(&cfg, &out, &level),
        Command::Expand { level, detuning_mhz } => c::expand(&cfg, &out, &level, detuning_mhz),
        Command::Bistability { level } => c::bistability(&cfg, &out, &level),
        Command::FitOrientation { data, monte_carlo, noise_fraction, seed, fixed_angle } => {
            c::fit_orientation(&cfg, &out, data.as_deref(), monte_carlo, noise_fraction, seed, fixed_angle)
        }
        Command::FitCavity { data } => c::fit_cavity(&cfg, &out, &data),
        Command::FitFwhm { data } => c::fit_fwhm(&out, &data),
        Command::Fieldmap { command: FieldmapCommand::GenLoop } => c::fieldmap_gen_loop(&cfg, &out),
    }
}

fn report(err: &Error) {
    match err.root() {
        Error::Validation(list) if list.len() > 1 => {
            eprintln!("error: {} problems in the input", list.len());
            for item in list {
                eprintln!("  - {item}");
            }
        }
        _ => eprintln!("error: {err}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
