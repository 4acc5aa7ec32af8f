//! Analytical / steady / simulated comparisons and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, WaveformSpec};
use super::{compare_series, ComparisonMetrics, TimeSeries};
use crate::cir::{cir_timeseries, steady_flow_reference};
use crate::pbs::{simulate, PbsConfig, PbsManifest};
use crate::{Error, Result};

/// Simulated and analytical series agree if their RMSE is below this many
/// mean binomial standard errors …
pub const RMSE_STANDARD_ERROR_FACTOR: f64 = 3.0;
/// … and their first-peak times are this close, s.
pub const PEAK_TIME_TOLERANCE: f64 = 0.05;
/// Half-width of the smoothing and parabola fit used to locate peaks, s.
pub const PEAK_FIT_HALF_WIDTH: f64 = 0.25;
/// Deviation from the steady baseline is measured from this time on, s,
/// once the initial transient has passed the receiver.
pub const DEVIATION_START: f64 = 2.0;

/// Standard error of a normalized count: `√(p(1−p)/N) / p∞` with
/// `p = value · p∞`.
pub fn binomial_standard_error(normalized: f64, particles: usize, p_inf: f64) -> f64 {
    let p = (normalized * p_inf).clamp(0.0, 1.0);
    (p * (1.0 - p) / particles as f64).sqrt() / p_inf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMetrics {
    pub reference: String,
    pub candidate: String,
    #[serde(flatten)]
    pub metrics: ComparisonMetrics,
}

/// Counting-statistics test of a simulated series against the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub particles: usize,
    pub rmse: f64,
    pub mean_standard_error: f64,
    pub rmse_limit: f64,
    pub peak_time_analytical: f64,
    pub peak_time_pbs: f64,
    pub peak_time_delta: f64,
    pub peak_time_tolerance: f64,
    pub passed: bool,
}

/// End of the window in which the first arrival at the receiver peaks:
/// the time for the mean flow to carry the pulse past the receiver and
/// half a loop further.
fn first_passage_end(scenario: &Scenario) -> f64 {
    let rx = scenario.receiver;
    (rx.center + rx.width / 2.0 + scenario.geometry.loop_length / 2.0)
        / scenario.waveform.mean_velocity()
}

/// Time and value of the first-arrival peak.
pub fn first_peak(scenario: &Scenario, series: &TimeSeries) -> Option<(f64, f64)> {
    let window = series.window(0.0, first_passage_end(scenario));
    let window = if window.len() >= 3 {
        window
    } else {
        series.clone()
    };
    Some((
        window.fitted_peak_time(PEAK_FIT_HALF_WIDTH)?,
        window.peak_value()?,
    ))
}

pub fn pbs_agreement(
    scenario: &Scenario,
    analytical: &TimeSeries,
    pbs: &TimeSeries,
    particles: usize,
) -> Result<Agreement> {
    let metrics = compare_series(analytical, pbs)?;
    let p_inf = scenario
        .receiver
        .equilibrium_fraction(scenario.geometry.loop_length);
    let mean_standard_error = analytical
        .values
        .iter()
        .map(|&v| binomial_standard_error(v, particles, p_inf))
        .sum::<f64>()
        / analytical.len() as f64;
    let rmse_limit = RMSE_STANDARD_ERROR_FACTOR * mean_standard_error;
    let missing = || Error::invalid("series", "too short to locate a peak");
    let (ta, _) = first_peak(scenario, analytical).ok_or_else(missing)?;
    let (tp, _) = first_peak(scenario, pbs).ok_or_else(missing)?;
    let delta = tp - ta;
    Ok(Agreement {
        particles,
        rmse: metrics.rmse,
        mean_standard_error,
        rmse_limit,
        peak_time_analytical: ta,
        peak_time_pbs: tp,
        peak_time_delta: delta,
        peak_time_tolerance: PEAK_TIME_TOLERANCE,
        passed: metrics.rmse < rmse_limit && delta.abs() <= PEAK_TIME_TOLERANCE,
    })
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    /// `analytical`, `steady` and, with a simulation, `pbs`.
    pub series: Vec<TimeSeries>,
    pub metrics: Vec<NamedMetrics>,
    pub pbs: Option<PbsManifest>,
    pub agreement: Option<Agreement>,
}

impl Experiment {
    pub fn get(&self, label: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.label == label)
    }

    pub fn analytical(&self) -> &TimeSeries {
        &self.series[0]
    }

    pub fn steady(&self) -> &TimeSeries {
        &self.series[1]
    }

    /// RMSE between the analytical and steady series from
    /// [`DEVIATION_START`] to the end of the grid.
    pub fn deviation_from_steady(&self) -> Result<f64> {
        let end = self.analytical().t.last().copied().unwrap_or(0.0);
        let a = self.analytical().window(DEVIATION_START, end);
        let b = self.steady().window(DEVIATION_START, end);
        Ok(compare_series(&a, &b)?.rmse)
    }

    /// `(time, value)` of the analytical first-arrival peak.
    pub fn first_peak(&self) -> Option<(f64, f64)> {
        first_peak(&self.scenario, self.analytical())
    }
}

/// Analytical and steady-baseline series on `t_grid`, plus a particle
/// simulation sampled on the same grid when `pbs` is given (its
/// `duration` and `sample_interval` are then ignored).
pub fn run_experiment(
    scenario: &Scenario,
    pbs: Option<&PbsConfig>,
    t_grid: &[f64],
) -> Result<Experiment> {
    let analytical = cir_timeseries(scenario, t_grid)?;
    let steady = steady_flow_reference(scenario, t_grid)?;
    let mut metrics = vec![NamedMetrics {
        reference: analytical.label.clone(),
        candidate: steady.label.clone(),
        metrics: compare_series(&analytical, &steady)?,
    }];
    let mut series = vec![analytical, steady];
    let (mut manifest, mut agreement) = (None, None);
    if let Some(config) = pbs {
        let run = simulate(scenario, config, t_grid)?;
        metrics.push(NamedMetrics {
            reference: series[0].label.clone(),
            candidate: run.series.label.clone(),
            metrics: compare_series(&series[0], &run.series)?,
        });
        agreement = Some(pbs_agreement(
            scenario,
            &series[0],
            &run.series,
            config.particles,
        )?);
        manifest = Some(run.manifest);
        series.push(run.series);
    }
    Ok(Experiment {
        scenario: scenario.clone(),
        series,
        metrics,
        pbs: manifest,
        agreement,
    })
}

/// Shortest exact text for a parameter value: `2.5e-9`, `0.5`, `8`.
fn short(value: f64) -> String {
    let plain = format!("{value}");
    let sci = format!("{value:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Frequency,
    MeanVelocity,
    Diffusion,
    ReceiverCenter,
    ReceiverWidth,
    Amplitude,
    DutyCycle,
    Radius,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 8] = [
        Self::Frequency,
        Self::MeanVelocity,
        Self::Diffusion,
        Self::ReceiverCenter,
        Self::ReceiverWidth,
        Self::Amplitude,
        Self::DutyCycle,
        Self::Radius,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Frequency => "frequency",
            Self::MeanVelocity => "mean_velocity",
            Self::Diffusion => "diffusion",
            Self::ReceiverCenter => "receiver_center",
            Self::ReceiverWidth => "receiver_width",
            Self::Amplitude => "amplitude",
            Self::DutyCycle => "duty_cycle",
            Self::Radius => "radius",
        }
    }

    /// `base` with this parameter set to `value`, fully revalidated.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        base.modified(|s| {
            match self {
                Self::Frequency => s.waveform_spec = s.waveform_spec.with_frequency(value)?,
                Self::MeanVelocity => s.waveform_spec = s.waveform_spec.with_mean_velocity(value),
                Self::Diffusion => s.transport.molecular_diffusion = value,
                Self::ReceiverCenter => s.receiver.center = value,
                Self::ReceiverWidth => s.receiver.width = value,
                Self::Radius => s.geometry.radius = value,
                Self::Amplitude => match &mut s.waveform_spec {
                    WaveformSpec::Sinusoidal { amplitude, .. } => *amplitude = value,
                    other => {
                        return Err(Error::invalid(
                            "amplitude",
                            format!("not a parameter of the {} waveform", other.kind()),
                        ))
                    }
                },
                Self::DutyCycle => match &mut s.waveform_spec {
                    WaveformSpec::Pulsed { duty_cycle, .. } => *duty_cycle = value,
                    other => {
                        return Err(Error::invalid(
                            "duty_cycle",
                            format!("not a parameter of the {} waveform", other.kind()),
                        ))
                    }
                },
            }
            s.label = format!("{}={}", self.name(), short(value));
            Ok(())
        })
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
                Error::config(
                    "sweep.param",
                    format!(
                        "unknown parameter `{s}`; expected one of {}",
                        names.join(", ")
                    ),
                )
            })
    }
}

/// Expected trend along a sweep, checked with `--assert`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAssertion {
    /// RMSE(analytical, steady) strictly decreases along the sweep.
    DeviationDecreasing,
    /// The analytical first-arrival peak strictly grows along the sweep.
    PeakIncreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub assertion: SweepAssertion,
    pub values: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub name: String,
    pub base: Scenario,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub assertion: Option<SweepAssertion>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub name: String,
    pub parameter: SweepParameter,
    pub cells: Vec<(f64, Experiment)>,
}

impl SweepOutcome {
    /// All cell series, relabelled `<label>@<parameter>=<value>`.
    pub fn series(&self) -> Vec<TimeSeries> {
        self.cells
            .iter()
            .flat_map(|(value, e)| {
                e.series.iter().map(move |s| {
                    s.clone()
                        .relabel(format!("{}@{}={}", s.label, self.parameter, short(*value)))
                })
            })
            .collect()
    }

    pub fn check(&self, assertion: SweepAssertion) -> Result<AssertionResult> {
        let values = match assertion {
            SweepAssertion::DeviationDecreasing => self
                .cells
                .iter()
                .map(|(_, e)| e.deviation_from_steady())
                .collect::<Result<Vec<_>>>()?,
            SweepAssertion::PeakIncreasing => self
                .cells
                .iter()
                .map(|(_, e)| {
                    e.first_peak()
                        .map(|(_, v)| v)
                        .ok_or_else(|| Error::invalid("t_grid", "too short"))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let passed = values.windows(2).all(|w| match assertion {
            SweepAssertion::DeviationDecreasing => w[1] < w[0],
            SweepAssertion::PeakIncreasing => w[1] > w[0],
        });
        Ok(AssertionResult {
            assertion,
            values,
            passed,
        })
    }
}

/// Runs every cell independently (in parallel).
pub fn run_sweep(sweep: &Sweep, pbs: Option<&PbsConfig>, t_grid: &[f64]) -> Result<SweepOutcome> {
    let cells = sweep
        .values
        .par_iter()
        .map(|&v| {
            let scenario = sweep.parameter.apply(&sweep.base, v)?;
            Ok((v, run_experiment(&scenario, pbs, t_grid)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        name: sweep.name.clone(),
        parameter: sweep.parameter,
        cells,
    })
}

/// Named sweep reproducing one published figure.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// Figures that include particle simulations.
    pub simulated: bool,
    waveform: fn() -> WaveformSpec,
    parameter: SweepParameter,
    values: &'static [f64],
    assertion: Option<SweepAssertion>,
}

impl Preset {
    pub fn sweep(&self) -> Result<Sweep> {
        Ok(Sweep {
            name: self.name.to_string(),
            base: Scenario::with_defaults(self.name, (self.waveform)())?,
            parameter: self.parameter,
            values: self.values.to_vec(),
            assertion: self.assertion,
        })
    }
}

pub fn presets() -> Vec<Preset> {
    const FREQUENCIES: &[f64] = &[0.5, 1.0, 2.0, 4.0, 8.0];
    const SYNTHETIC_MEANS: &[f64] = &[0.5e-4, 1e-4, 2e-4];
    vec![
        Preset {
            name: "fig_sin_f",
            description: "sinusoidal flow (A = 0.5, ū = 0.1 mm/s), pulsation frequency 0.5–8 Hz",
            simulated: true,
            waveform: || WaveformSpec::sinusoidal(1e-4, 0.5, 0.5),
            parameter: SweepParameter::Frequency,
            values: FREQUENCIES,
            assertion: Some(SweepAssertion::DeviationDecreasing),
        },
        Preset {
            name: "fig_pulse_f",
            description:
                "pulsed flow (d = 0.2, 50 harmonics, ū = 0.1 mm/s), pulsation frequency 0.5–8 Hz",
            simulated: true,
            waveform: || WaveformSpec::pulsed(1e-4, 0.2, 0.5),
            parameter: SweepParameter::Frequency,
            values: FREQUENCIES,
            assertion: Some(SweepAssertion::DeviationDecreasing),
        },
        Preset {
            name: "fig_sin_ubar",
            description: "sinusoidal flow at 0.5 Hz, mean velocity 0.05–0.2 mm/s",
            simulated: true,
            waveform: || WaveformSpec::sinusoidal(1e-4, 0.5, 0.5),
            parameter: SweepParameter::MeanVelocity,
            values: SYNTHETIC_MEANS,
            assertion: Some(SweepAssertion::PeakIncreasing),
        },
        Preset {
            name: "fig_pulse_ubar",
            description: "pulsed flow at 0.5 Hz, mean velocity 0.05–0.2 mm/s",
            simulated: true,
            waveform: || WaveformSpec::pulsed(1e-4, 0.2, 0.5),
            parameter: SweepParameter::MeanVelocity,
            values: SYNTHETIC_MEANS,
            assertion: Some(SweepAssertion::PeakIncreasing),
        },
        Preset {
            name: "fig_pbs_xrx",
            description: "physiological flow at ū = 0.2 mm/s, receiver position 0.3–0.7 mm",
            simulated: true,
            waveform: || WaveformSpec::physiological(2e-4),
            parameter: SweepParameter::ReceiverCenter,
            values: &[0.3e-3, 0.5e-3, 0.7e-3],
            assertion: None,
        },
        Preset {
            name: "fig_pbs_ubar",
            description: "physiological flow, receiver at 0.3 mm, mean velocity 0.1–0.4 mm/s",
            simulated: true,
            waveform: || WaveformSpec::physiological(2e-4),
            parameter: SweepParameter::MeanVelocity,
            values: &[1e-4, 2e-4, 4e-4],
            assertion: Some(SweepAssertion::PeakIncreasing),
        },
        Preset {
            name: "fig_pbs_d",
            description:
                "physiological flow at ū = 0.2 mm/s, receiver at 0.3 mm, diffusion 2.5–10·10⁻⁹ m²/s",
            simulated: true,
            waveform: || WaveformSpec::physiological(2e-4),
            parameter: SweepParameter::Diffusion,
            values: &[2.5e-9, 5e-9, 10e-9],
            assertion: Some(SweepAssertion::DeviationDecreasing),
        },
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| {
            let names: Vec<_> = presets().iter().map(|p| p.name).collect();
            Error::config(
                "preset",
                format!("unknown preset `{name}`; available: {}", names.join(", ")),
            )
        })
}
