use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jjtunnel::harness::{self, ExperimentResult, ExperimentSpec, Mode};

#[derive(Parser)]
#[command(name = "jjtunnel", version, about = "Josephson-junction phase tunneling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the ground state of the initial well.
    GroundState(Common),
    /// Scan the absorber strength and locate the rate plateau.
    CalibrateBeta(Common),
    /// Linear bias ramp and its switching-current distribution.
    Ramp(Common),
    /// Fixed bias with optional drive and the switching density in time.
    ConstantBias(Common),
    /// Grid of ramp or constant-bias runs.
    Sweep(Common),
    /// Ramp compared with the quasi-static Caldeira–Leggett distribution.
    CompareCl(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root directory.
    #[arg(long)]
    out: Option<String>,
    /// Maximum concurrent sweep cells.
    #[arg(long)]
    workers: Option<usize>,
    /// Propagation steps between trajectory samples.
    #[arg(long)]
    stride: Option<usize>,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::GroundState(c) => (Mode::GroundState, c),
            Command::CalibrateBeta(c) => (Mode::Calibrate, c),
            Command::Ramp(c) => (Mode::Ramp, c),
            Command::ConstantBias(c) => (Mode::ConstantBias, c),
            Command::Sweep(c) => (Mode::Sweep, c),
            Command::CompareCl(c) => (Mode::CompareCl, c),
        }
    }
}

fn build_spec(mode: Mode, common: &Common) -> jjtunnel::Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => harness::load_config(path)?,
        None => ExperimentSpec::new(mode),
    };
    if spec.mode != mode {
        return Err(jjtunnel::Error::Config(format!(
            "configuration is for mode `{}` but the `{}` command was given",
            spec.mode.name(),
            mode.name()
        )));
    }
    if let Some(out) = &common.out {
        spec.output.dir = out.clone();
    }
    if let Some(workers) = common.workers {
        spec.sweep.workers = workers;
    }
    if let Some(stride) = common.stride {
        spec.output.stride = stride;
    }
    spec.validate()?;
    Ok(spec)
}

fn report(result: &ExperimentResult) {
    match result {
        ExperimentResult::GroundState(g) => {
            let s = g.summary();
            println!(
                "ground state at I = {}: E − U_min = {:.6e} ({:.4} ħω_p), ⟨φ⟩ = {:.6}, {} iterations",
                s.bias,
                s.energy_above_min,
                s.energy_above_min / s.omega_p,
                s.phi_mean,
                s.iterations
            );
        }
        ExperimentResult::Ramp(r) | ExperimentResult::ConstantBias(r) => {
            let d = r.distribution.summary();
            println!(
                "switching mass {:.6}, final norm {:.6e}, peak {:?}, fwhm {:?}",
                d.total_mass,
                r.record.final_norm2(),
                d.peak,
                d.fwhm
            );
        }
        ExperimentResult::CompareCl(c) => {
            let m = &c.metrics;
            println!(
                "simulated peak {:.5}, quasi-static peak {:.5}, shift {:.5}, L1 {:.4}",
                m.peak_location_a, m.peak_location_b, m.peak_shift, m.l1_distance
            );
        }
        ExperimentResult::Calibrate(c) => {
            print!("{}", c.scan.table());
            match &c.report {
                Some(r) => println!(
                    "beta* = {:.4e} (plateau {:.3e}..{:.3e}), rate {:.4e}",
                    r.beta_star, r.plateau_lo, r.plateau_hi, r.rate_at_beta_star
                ),
                None => println!("no plateau found"),
            }
        }
        ExperimentResult::Sweep(s) => {
            println!("{} cells, {} failed, {:.1} s", s.cells.len(), s.failed(), s.wall_seconds);
        }
    }
}

fn execute(mode: Mode, common: Common) -> jjtunnel::Result<i32> {
    let spec = build_spec(mode, &common)?;
    let (result, wall) = harness::run_experiment(&spec)?;
    report(&result);
    let manifest = harness::emit_results(&result, &spec, wall)?;
    log::info!(
        "wrote {} files under {}/{} (config hash {})",
        manifest.files.len(),
        spec.output.dir,
        mode.name(),
        manifest.config_hash
    );
    Ok(result.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, common) = cli.command.split();
    let code = match execute(mode, common) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
