use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disloc::acceptance::Suite;
use disloc::config::*;
use disloc::{configure_threads, run_experiment, run_file, run_suite, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(
    name = "disloc",
    version,
    about = "Fractional Peierls-Nabarro experiments"
)]
struct Cli {
    /// Output directory; every file path is relative to it.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run { config: PathBuf },
    /// Run an acceptance suite and write report.json.
    Suite {
        #[arg(value_enum)]
        name: Suite,
    },
    /// Heteroclinic layer u⋆ and its mobility.
    Heteroclinic(HeteroclinicArgs),
    /// Constrained heteroclinic, homoclinic or multibump equilibrium.
    Multibump(MultibumpArgs),
    /// Particle system up to t_end or the first collision.
    Particles(ParticlesArgs),
    /// Scaled parabolic evolution from a JSON configuration.
    Parabolic {
        #[arg(long)]
        config: PathBuf,
    },
    /// Effective Hamiltonian samples from the cell problem.
    Cell(CellArgs),
    /// Orowan ratio scan.
    Orowan(OrowanArgs),
    /// Mean-field transport equation.
    Meanfield(MeanfieldArgs),
}

fn sign(text: &str) -> Result<i8, String> {
    parse_orientations(text).map(|v| v[0])
}

#[derive(Args)]
struct HeteroclinicArgs {
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Half-width of the grid.
    #[arg(long = "L", default_value_t = 200.0)]
    half_width: f64,
    #[arg(long, default_value_t = 8193)]
    n: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value = "reciprocal-norm-squared")]
    convention: String,
}

#[derive(Args)]
struct MultibumpArgs {
    /// Comma-separated levels, e.g. 0,1,0.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    levels: Vec<i64>,
    #[arg(long, default_value_t = 0.75)]
    s: f64,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    #[arg(long, default_value_t = 10.0)]
    period: f64,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    h: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Args)]
struct ParticlesArgs {
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    positions: Vec<f64>,
    /// Comma-separated signs, e.g. +,-,+.
    #[arg(long, value_delimiter = ',', value_parser = sign, allow_hyphen_values = true, required = true)]
    orientations: Vec<i8>,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// A number or `auto` for the heteroclinic mobility.
    #[arg(long, default_value = "auto")]
    gamma: GammaSpec,
    #[arg(long, default_value = "reciprocal-norm-squared")]
    convention: String,
    #[arg(long)]
    t_end: f64,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
}

#[derive(Args)]
struct CellArgs {
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// One value or a comma-separated list.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    p: Vec<f64>,
    #[arg(
        long = "L",
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    l: Vec<f64>,
    #[arg(long, default_value_t = 200.0)]
    tau_end: f64,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
}

#[derive(Args)]
struct OrowanArgs {
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    p0: f64,
    #[arg(long = "L0", default_value_t = 1.0)]
    l0: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1")]
    eps: Vec<f64>,
    #[arg(long, default_value = "auto")]
    gamma: GammaSpec,
}

#[derive(Args)]
struct MeanfieldArgs {
    /// JSON file with the initial profile.
    #[arg(long)]
    init: String,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt_out: f64,
    /// Transport by |u_x| for data that is not monotone.
    #[arg(long)]
    general: bool,
}

fn config_of(command: Command) -> Result<ExperimentConfig, LabError> {
    Ok(match command {
        Command::Heteroclinic(a) => ExperimentConfig::Heteroclinic(HeteroclinicSpec {
            s: a.s,
            layer: LayerGridSpec {
                half_width: a.half_width,
                n: a.n,
                tol: a.tol,
            },
            gamma_convention: a.convention,
            ..Default::default()
        }),
        Command::Multibump(a) => ExperimentConfig::Multibump(MultibumpSpec {
            s: a.s,
            modulation: ModulationSpec {
                amplitude: a.amplitude,
                period: a.period,
            },
            spacing: a.spacing,
            h: a.h,
            tol: a.tol,
            ..MultibumpSpec::new(a.levels)
        }),
        Command::Particles(a) => ExperimentConfig::Particles(ParticlesSpec {
            gamma: a.gamma,
            gamma_convention: a.convention,
            gap_tol: a.gap_tol,
            a0: a.a0,
            ..ParticlesSpec::new(a.s, a.positions, a.orientations, a.t_end)
        }),
        Command::Parabolic { config } => {
            let text = std::fs::read_to_string(&config).map_err(LabError::io(&config))?;
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| LabError::Config(format!("{}: {e}", config.display())))?;
            if let Some(obj) = value.as_object_mut() {
                obj.entry("experiment")
                    .or_insert_with(|| "parabolic".into());
            }
            let cfg: ExperimentConfig = serde_json::from_value(value)
                .map_err(|e| LabError::Config(format!("{}: {e}", config.display())))?;
            if !matches!(cfg, ExperimentConfig::Parabolic(_)) {
                return Err(LabError::Config(format!(
                    "{} is not a parabolic configuration",
                    config.display()
                )));
            }
            cfg
        }
        Command::Cell(a) => ExperimentConfig::Cell(CellSpec {
            s: a.s,
            tau_end: a.tau_end,
            h: a.h,
            ..CellSpec::new(a.p, a.l)
        }),
        Command::Orowan(a) => ExperimentConfig::Orowan(OrowanSpec {
            s: a.s,
            p0: a.p0,
            l0: a.l0,
            eps: a.eps,
            gamma: a.gamma,
            ..Default::default()
        }),
        Command::Meanfield(a) => ExperimentConfig::Meanfield(MeanfieldSpec {
            gamma: a.gamma,
            dt_out: a.dt_out,
            monotone: !a.general,
            ..MeanfieldSpec::new(InitSource::Path(a.init), a.t_end)
        }),
        Command::Run { .. } | Command::Suite { .. } => unreachable!("handled in main"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Run { config } => run_file(&config, &cli.out).map(|_| ()),
        Command::Suite { name } => match run_suite(name, &cli.out) {
            Ok(report) => {
                for c in &report.criteria {
                    println!("{}", c.line());
                }
                Ok(())
            }
            Err(e) => {
                if let Ok(text) = std::fs::read_to_string(cli.out.join("report.json")) {
                    if let Ok(report) = serde_json::from_str::<serde_json::Value>(&text) {
                        for c in report["criteria"].as_array().into_iter().flatten() {
                            let status = if c["passed"] == true { "PASS" } else { "FAIL" };
                            println!(
                                "{status} {}: {}",
                                c["id"].as_str().unwrap_or("?"),
                                c["summary"].as_str().unwrap_or("")
                            );
                        }
                    }
                }
                Err(e)
            }
        },
        command => config_of(command).and_then(|cfg| run_experiment(&cfg, &cli.out).map(|_| ())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
