//! Command-line front end: analytical CIRs, particle simulations,
//! comparisons and figure sweeps, written as CSV plus a TOML manifest.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pulsatile_loop::bench::{
    self, emit_csv, emit_manifest, load_config, preset, presets, run_experiment, run_sweep,
    Experiment, OutputGrid, RunConfig, RunManifest, Sweep, SweepAssertion, SweepParameter,
    TimeSeries,
};
use pulsatile_loop::pbs::simulate;
use pulsatile_loop::{Error, PbsConfig};

#[derive(Parser)]
#[command(
    name = "pulsatile-loop",
    version,
    about = "Closed-loop molecular channel under pulsatile flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical received signal and its steady-flow baseline.
    Cir(Common),
    /// Particle simulation only.
    Pbs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Also dump final particle positions (`<label>.positions.csv`).
        #[arg(long)]
        snapshot: bool,
    },
    /// Analytical, steady and simulated series plus agreement metrics.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Exit with status 4 unless simulation and model agree.
        #[arg(long = "assert")]
        check: bool,
    },
    /// Parameter sweep, from a figure preset or a base config.
    Sweep(SweepArgs),
    /// List the figure presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the number of output grid points.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    /// Override the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Without a `[pbs]` section, use the reduced desk-scale setup instead
    /// of the full-scale one.
    #[arg(long)]
    desk: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Figure preset (see `presets`).
    #[arg(long, conflicts_with_all = ["config", "param", "values"])]
    preset: Option<String>,
    /// Base scenario for a custom sweep.
    #[arg(long, requires_all = ["param", "values"])]
    config: Option<PathBuf>,
    /// Swept parameter of a custom sweep.
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated parameter values of a custom sweep.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Trend checked by `--assert` for a custom sweep.
    #[arg(long, value_parser = ["deviation_decreasing", "peak_increasing"])]
    expect: Option<String>,
    /// Include particle simulations in every cell.
    #[arg(long)]
    pbs: bool,
    #[command(flatten)]
    sim: SimArgs,
    /// Exit with status 4 if the expected trend does not hold.
    #[arg(long = "assert")]
    check: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    grid_points: Option<usize>,
}

/// Failure carrying its process exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::Csv(_) => 2,
            Error::Regime(_) | Error::NotSlender { .. } => 3,
            Error::BesselOutOfRange(_)
            | Error::DegenerateDistribution(_)
            | Error::Quadrature { .. } => 5,
            Error::GridMismatch(_) => 5,
            Error::Io { .. } => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn assertion_failed(message: String) -> Failure {
    Failure { code: 4, message }
}

type Outcome = Result<(), Failure>;

fn read_config(path: &Path, grid_points: Option<usize>) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut config = load_config(&text)?;
    if let Some(points) = grid_points {
        config.output = OutputGrid::new(config.output.duration, points)?;
    }
    Ok(config)
}

fn pbs_config(config: &RunConfig, sim: &SimArgs) -> PbsConfig {
    let mut pbs = config.pbs.unwrap_or_else(|| {
        if sim.desk {
            PbsConfig::desk()
        } else {
            PbsConfig::default()
        }
    });
    if let Some(seed) = sim.seed {
        pbs.seed = seed;
    }
    pbs
}

fn prepare_out(out: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.display().to_string(),
        source,
    })
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || "-_.=".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_run(
    out: &Path,
    stem: &str,
    series: &[TimeSeries],
    mut manifest: RunManifest,
) -> Result<(), Error> {
    prepare_out(out)?;
    let csv = out.join(format!("{stem}.csv"));
    emit_csv(series, &csv)?;
    manifest.csv = format!("{stem}.csv");
    let path = out.join(format!("{stem}.manifest.toml"));
    emit_manifest(&manifest, &path)?;
    eprintln!("wrote {} and {}", csv.display(), path.display());
    Ok(())
}

fn report_regime(scenario: &bench::Scenario) {
    if scenario.regime.has_advisory() {
        eprintln!(
            "warning: `{}` is near the edge of the dispersive regime (see manifest)",
            scenario.label
        );
    }
    if scenario.regime.flow_reversal_detected {
        eprintln!(
            "note: `{}` has flow reversal (min u/ū = {:.3})",
            scenario.label, scenario.regime.min_relative_velocity
        );
    }
}

fn record(manifest: &mut RunManifest, e: &Experiment) {
    manifest.scenarios.push(e.scenario.clone());
    manifest.metrics.extend(e.metrics.iter().cloned());
    manifest.agreement.extend(e.agreement);
    manifest.pbs_runs.extend(e.pbs.clone());
}

fn cmd_cir(common: &Common) -> Outcome {
    let config = read_config(&common.config, common.grid_points)?;
    report_regime(&config.scenario);
    let e = run_experiment(&config.scenario, None, &config.output.times())?;
    let mut manifest = RunManifest::new("cir", "", config.output);
    record(&mut manifest, &e);
    write_run(
        &common.out,
        &file_stem(&config.scenario.label),
        &e.series,
        manifest,
    )?;
    Ok(())
}

fn cmd_pbs(common: &Common, sim: &SimArgs, snapshot: bool) -> Outcome {
    let config = read_config(&common.config, common.grid_points)?;
    report_regime(&config.scenario);
    let pbs = pbs_config(&config, sim);
    let run = simulate(&config.scenario, &pbs, &config.output.times())?;
    for w in &run.manifest.warnings {
        eprintln!("warning: {w}");
    }
    let stem = file_stem(&config.scenario.label);
    let mut manifest = RunManifest::new("pbs", "", config.output);
    manifest.seed = Some(pbs.seed);
    manifest.pbs_config = Some(pbs);
    manifest.scenarios.push(config.scenario.clone());
    manifest.pbs_runs.push(run.manifest.clone());
    write_run(
        &common.out,
        &stem,
        std::slice::from_ref(&run.series),
        manifest,
    )?;
    if snapshot {
        let path = common.out.join(format!("{stem}.positions.csv"));
        run.ensemble.write_positions_csv(&path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_compare(common: &Common, sim: &SimArgs, check: bool) -> Outcome {
    let config = read_config(&common.config, common.grid_points)?;
    report_regime(&config.scenario);
    let pbs = pbs_config(&config, sim);
    let e = run_experiment(&config.scenario, Some(&pbs), &config.output.times())?;
    let mut manifest = RunManifest::new("compare", "", config.output);
    manifest.seed = Some(pbs.seed);
    manifest.pbs_config = Some(pbs);
    record(&mut manifest, &e);
    write_run(
        &common.out,
        &file_stem(&config.scenario.label),
        &e.series,
        manifest,
    )?;
    let agreement = e.agreement.expect("simulation requested");
    println!(
        "rmse {:.4e} (limit {:.4e}), first peak {:.3} s vs {:.3} s (Δ {:+.3} s, limit {:.3} s): {}",
        agreement.rmse,
        agreement.rmse_limit,
        agreement.peak_time_analytical,
        agreement.peak_time_pbs,
        agreement.peak_time_delta,
        agreement.peak_time_tolerance,
        if agreement.passed {
            "agree"
        } else {
            "DISAGREE"
        }
    );
    if check && !agreement.passed {
        return Err(assertion_failed(
            "simulation and analytical model disagree".into(),
        ));
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Outcome {
    let (sweep, grid, configured_pbs): (Sweep, OutputGrid, Option<PbsConfig>) =
        match (&args.preset, &args.config) {
            (Some(name), _) => {
                let mut grid = OutputGrid::default();
                if let Some(points) = args.grid_points {
                    grid = OutputGrid::new(grid.duration, points)?;
                }
                (preset(name)?.sweep()?, grid, None)
            }
            (None, Some(path)) => {
                let config = read_config(path, args.grid_points)?;
                let parameter: SweepParameter =
                    args.param.as_deref().unwrap_or_default().parse()?;
                let assertion = args.expect.as_deref().map(|e| match e {
                    "deviation_decreasing" => SweepAssertion::DeviationDecreasing,
                    _ => SweepAssertion::PeakIncreasing,
                });
                let name = format!("{}_{}", config.scenario.label, parameter);
                let sweep = Sweep {
                    name,
                    base: config.scenario,
                    parameter,
                    values: args.values.clone().unwrap_or_default(),
                    assertion,
                };
                (sweep, config.output, config.pbs)
            }
            (None, None) => {
                return Err(Error::config(
                    "sweep",
                    "give --preset or --config with --param and --values",
                )
                .into())
            }
        };
    if sweep.values.is_empty() {
        return Err(Error::config("sweep.values", "no values").into());
    }
    let pbs = args.pbs.then(|| {
        let mut p = configured_pbs.unwrap_or_else(|| {
            if args.sim.desk || args.preset.is_some() {
                PbsConfig::desk()
            } else {
                PbsConfig::default()
            }
        });
        if let Some(seed) = args.sim.seed {
            p.seed = seed;
        }
        p
    });
    let outcome = run_sweep(&sweep, pbs.as_ref(), &grid.times())?;
    let mut manifest = RunManifest::new(format!("sweep {}", sweep.name), "", grid);
    manifest.seed = pbs.map(|p| p.seed);
    manifest.pbs_config = pbs;
    for (_, e) in &outcome.cells {
        record(&mut manifest, e);
        report_regime(&e.scenario);
    }
    let mut failed = None;
    if let Some(assertion) = sweep.assertion {
        let result = outcome.check(assertion)?;
        println!(
            "{:?} over {} = {:?}: {:?} {}",
            assertion,
            sweep.parameter,
            sweep.values,
            result.values,
            if result.passed { "holds" } else { "FAILS" }
        );
        if args.check && !result.passed {
            failed = Some(format!("expected trend {assertion:?} does not hold"));
        }
        manifest.assertions.push(result);
    } else if args.check {
        return Err(
            Error::config("sweep", "--assert needs a preset with a trend or --expect").into(),
        );
    }
    write_run(
        &args.out,
        &file_stem(&sweep.name),
        &outcome.series(),
        manifest,
    )?;
    match failed {
        Some(message) => Err(assertion_failed(message)),
        None => Ok(()),
    }
}

fn cmd_presets() -> Outcome {
    for p in presets() {
        let sweep = p.sweep()?;
        println!("{:<16} {}", p.name, p.description);
        println!(
            "{:<16} sweeps {} over {:?}, trend: {:?}",
            "", sweep.parameter, sweep.values, sweep.assertion
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Cir(common) => cmd_cir(common),
        Command::Pbs {
            common,
            sim,
            snapshot,
        } => cmd_pbs(common, sim, *snapshot),
        Command::Compare { common, sim, check } => cmd_compare(common, sim, *check),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Presets => cmd_presets(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
