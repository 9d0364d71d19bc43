//! Command-line front end: run, compare and validate scenarios.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cotransport::objects::ObjectModel;
use cotransport::sim::{self, Simulation};
use cotransport::{ControllerMode, Error, Metrics, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cotransport", version, about = "Human-robot co-transportation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and print a summary line.
    Run(RunArgs),
    /// Run a scenario under every controller mode.
    Compare(CompareArgs),
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// List the built-in object presets.
    Presets,
}

#[derive(Debug, Args)]
pub struct Overrides {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// aci, admittance or teleop
    #[arg(long)]
    pub controller: Option<ControllerMode>,
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    #[arg(long)]
    pub out_metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Directory receiving `<mode>.csv` and `<mode>.toml` per mode.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    fn config(error: Error) -> Self {
        Self { code: EXIT_CONFIG, error }
    }

    fn runtime(error: Error) -> Self {
        let code = if error.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME };
        Self { code, error }
    }
}

fn load(o: &Overrides) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&o.scenario).map_err(Failure::config)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = o.dt {
        cfg.dt = dt;
    }
    if let Some(d) = o.duration {
        cfg.duration = d;
    }
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn execute(cfg: &ScenarioConfig) -> Result<(sim::Trace, Metrics), Failure> {
    let mut s = Simulation::from_config(cfg).map_err(Failure::config)?;
    s.run_to_end().map_err(Failure::runtime)?;
    let metrics = s.metrics().map_err(Failure::runtime)?;
    Ok((s.into_trace(), metrics))
}

fn write_outputs(trace: &sim::Trace, metrics: &Metrics, csv: Option<&Path>, toml: Option<&Path>) -> Result<(), Failure> {
    if let Some(p) = csv {
        trace.write(p).map_err(Failure::runtime)?;
    }
    if let Some(p) = toml {
        metrics.write(p).map_err(Failure::runtime)?;
    }
    Ok(())
}

pub fn run(args: &RunArgs, out: &mut impl Write) -> Result<Metrics, Failure> {
    let mut cfg = load(&args.common)?;
    if let Some(mode) = args.controller {
        cfg.controller = mode;
    }
    let (trace, metrics) = execute(&cfg)?;
    let csv = args.out_trace.as_deref().or(cfg.output.trace.as_deref());
    let toml = args.out_metrics.as_deref().or(cfg.output.metrics.as_deref());
    write_outputs(&trace, &metrics, csv, toml)?;
    let _ = writeln!(out, "{}", metrics.summary());
    Ok(metrics)
}

pub fn compare(args: &CompareArgs, out: &mut impl Write) -> Result<Vec<Metrics>, Failure> {
    let cfg = load(&args.common)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::runtime(Error::Io {
            path: dir.clone(),
            source: e,
        }))?;
    }
    let results: Vec<Result<(sim::Trace, Metrics), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ControllerMode::ALL
            .iter()
            .map(|&mode| {
                let mut c = cfg.clone();
                c.controller = mode;
                scope.spawn(move || execute(&c))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread")).collect()
    });
    let mut all = Vec::new();
    for (mode, result) in ControllerMode::ALL.iter().zip(results) {
        let (trace, metrics) = result?;
        if let Some(dir) = &args.out_dir {
            let csv = dir.join(format!("{mode}.csv"));
            let toml = dir.join(format!("{mode}.toml"));
            write_outputs(&trace, &metrics, Some(&csv), Some(&toml))?;
        }
        let _ = writeln!(out, "{mode:<10} {}", metrics.summary());
        for iv in &metrics.intervals {
            let _ = writeln!(
                out,
                "{:<10}   {:<16} mean_alpha={:.4} mean_force={:.3}",
                "", iv.name, iv.mean_alpha, iv.mean_force
            );
        }
        all.push(metrics);
    }
    Ok(all)
}

pub fn validate(path: &Path, out: &mut impl Write) -> Result<(), Failure> {
    let cfg = ScenarioConfig::load(path).map_err(Failure::config)?;
    cfg.resolve().map_err(Failure::config)?;
    let _ = writeln!(out, "{}: OK", path.display());
    Ok(())
}

pub fn presets(out: &mut impl Write) {
    for p in ObjectModel::presets() {
        let _ = writeln!(
            out,
            "{:<11} rest={:?} k_tension={} k_compression={} k_lateral={} k_vertical={} damping={} slack={}",
            p.label,
            p.rest_vector,
            p.axial_stiffness_tension,
            p.axial_stiffness_compression,
            p.lateral_stiffness,
            p.vertical(),
            p.damping,
            p.slack_length
        );
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn dispatch(cli: &Cli) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let result = match &cli.command {
        Command::Run(args) => run(args, &mut stdout).map(|_| ()),
        Command::Compare(args) => compare(args, &mut stdout).map(|_| ()),
        Command::Validate { scenario } => validate(scenario, &mut stdout),
        Command::Presets => {
            presets(&mut stdout);
            Ok(())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f.error {
                Error::Config(issues) => {
                    eprintln!("error: invalid configuration");
                    for i in issues {
                        eprintln!("  {i}");
                    }
                }
                e => eprintln!("error: {e}"),
            }
            f.code
        }
    }
}
