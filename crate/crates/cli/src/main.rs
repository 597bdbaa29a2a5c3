use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vaopt::presets::{preset, PRESETS};
use vaopt::signal::SignalSpec;
use vaopt::{par, scenario, Execution, ScenarioConfig};

#[derive(Parser)]
#[command(name = "vaopt", version, about = "Transient vibroacoustic filter design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward run of the initial (or a saved) design.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Design variables written by `optimize` (design_final.csv).
        #[arg(long)]
        design: Option<PathBuf>,
        /// Also write M, C, K as triplet files.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Run the topology optimization.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Compare adjoint gradients with central differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
    },
    /// Frequency-domain transmission of a design.
    Harmonic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: Option<PathBuf>,
    },
    /// Compute (or load from cache) the empty-duct reference response.
    Baseline {
        #[command(flatten)]
        common: Common,
    },
    /// List the built-in scenarios.
    Presets,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the white-noise input and the gradient-check sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap of the optimizer.
    #[arg(long)]
    iterations: Option<usize>,
    /// Worker threads (1 runs sequentially).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> vaopt::Result<(ScenarioConfig, Execution)> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => preset("lowpass-coarse")?,
        };
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(seed) = self.seed {
            if let SignalSpec::WhiteNoise { seed: s, .. } = &mut cfg.signal {
                *s = seed;
            }
            cfg.gradcheck.seed = seed;
        }
        if let Some(k) = self.iterations {
            cfg.optimizer.iterations = k;
        }
        cfg.validate()?;
        let exec = match self.threads {
            Some(1) => Execution::Sequential,
            Some(n) => {
                par::init_threads(n);
                Execution::Parallel
            }
            None => Execution::default(),
        };
        Ok((cfg, exec))
    }
}

fn run(cli: Cli) -> vaopt::Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            design,
            dump_matrices,
        } => {
            let (cfg, exec) = common.resolve()?;
            let (_, eval) = scenario::simulate(cfg, exec, design.as_deref(), dump_matrices)?;
            println!("phi1 = {:e}\nphi2 = {:e}", eval.constraints[0], eval.constraints[1]);
        }
        Command::Optimize { common } => {
            let (cfg, exec) = common.resolve()?;
            let outcome = scenario::run_scenario(cfg, exec)?;
            for r in &outcome.result.history {
                println!("{:5}  z {:12.5e}  phi1 {:12.5e}  phi2 {:12.5e}", r.iter, r.z, r.phi1, r.phi2);
            }
            if let Some(h) = &outcome.harmonic {
                println!(
                    "harmonic: pass mean |dS| {:.4e}, stop mean S {:.4e} (transient {:.4e})",
                    h.pass_error, h.stop_harmonic, h.stop_transient
                );
            }
        }
        Command::Gradcheck { common } => {
            let (cfg, exec) = common.resolve()?;
            let rows = scenario::gradcheck(cfg, exec)?;
            for r in &rows {
                println!(
                    "var {:5}  phi{}  adjoint {:14.7e}  fd {:14.7e}  rel {:.2e}",
                    r.variable,
                    r.constraint + 1,
                    r.adjoint,
                    r.fd,
                    r.rel_error
                );
            }
        }
        Command::Harmonic { common, design } => {
            let (cfg, exec) = common.resolve()?;
            let h = scenario::harmonic(cfg, exec, design.as_deref())?;
            for ((f, t), s) in h.freqs.iter().zip(&h.transient).zip(&h.harmonic) {
                match s {
                    Some(s) => println!("{f:8.1} Hz  transient {t:.4e}  harmonic {s:.4e}"),
                    None => println!("{f:8.1} Hz  transient {t:.4e}  harmonic singular, skipped"),
                }
            }
        }
        Command::Baseline { common } => {
            let (cfg, exec) = common.resolve()?;
            let p = scenario::baseline(cfg, exec)?;
            println!("baseline: {} samples, output in {}", p.baseline.trace.len(), p.config.output.dir.display());
        }
        Command::Presets => {
            for name in PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
