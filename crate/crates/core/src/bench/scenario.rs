//! Scenarios and their TOML configuration files.
//!
//! ```toml
//! label = "sine"
//! [geometry]    # radius, loop_length (m)
//! [fluid]       # density (kg/m³), dynamic_viscosity (Pa·s)
//! [transport]   # diffusion (m²/s)
//! [waveform]    # kind = "sinusoidal" | "pulsed" | "physiological" | "steady" | "custom"
//! [receiver]    # center, width (m)
//! [regime]      # advisory_factor
//! [pbs]         # particles, timestep, duration, seed, sample_interval, workers
//! [output]      # duration (s), grid_points
//! ```
//!
//! Every section except `[waveform]` is optional and falls back to the
//! reference channel (R = 50 µm, L = 1 mm, blood-like fluid,
//! D = 5·10⁻⁹ m²/s, receiver at 0.3 mm of width 0.1 mm). Unknown keys are
//! errors.

use serde::{Deserialize, Serialize};

use crate::cir::ReceiverSpec;
use crate::dispersion::TransportParams;
use crate::pbs::PbsConfig;
use crate::waveform::{self, Harmonic, HarmonicSeries, DEFAULT_PULSED_HARMONICS};
use crate::womersley::{
    regime_check, ChannelGeometry, FluidProperties, RegimeReport, DEFAULT_ADVISORY_FACTOR,
};
use crate::{Error, Result};

/// How the velocity waveform was specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WaveformSpec {
    Sinusoidal {
        mean_velocity: f64,
        amplitude: f64,
        frequency: f64,
    },
    Pulsed {
        mean_velocity: f64,
        duty_cycle: f64,
        frequency: f64,
        harmonics: usize,
    },
    Physiological {
        mean_velocity: f64,
    },
    Steady {
        mean_velocity: f64,
    },
    Custom {
        mean_velocity: f64,
        frequency: f64,
        orders: Vec<u32>,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
    },
}

impl WaveformSpec {
    pub fn sinusoidal(mean_velocity: f64, amplitude: f64, frequency: f64) -> Self {
        Self::Sinusoidal {
            mean_velocity,
            amplitude,
            frequency,
        }
    }

    pub fn pulsed(mean_velocity: f64, duty_cycle: f64, frequency: f64) -> Self {
        Self::Pulsed {
            mean_velocity,
            duty_cycle,
            frequency,
            harmonics: DEFAULT_PULSED_HARMONICS,
        }
    }

    pub fn physiological(mean_velocity: f64) -> Self {
        Self::Physiological { mean_velocity }
    }

    pub fn custom(series: &HarmonicSeries) -> Self {
        let h = series.harmonics();
        Self::Custom {
            mean_velocity: series.mean_velocity(),
            frequency: series.frequency(),
            orders: h.iter().map(|h| h.order).collect(),
            amplitudes: h.iter().map(|h| h.amplitude).collect(),
            phases: h.iter().map(|h| h.phase).collect(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Sinusoidal { .. } => "sinusoidal",
            Self::Pulsed { .. } => "pulsed",
            Self::Physiological { .. } => "physiological",
            Self::Steady { .. } => "steady",
            Self::Custom { .. } => "custom",
        }
    }

    pub fn build(&self) -> Result<HarmonicSeries> {
        match self {
            Self::Sinusoidal {
                mean_velocity,
                amplitude,
                frequency,
            } => waveform::make_sinusoidal(*mean_velocity, *amplitude, *frequency),
            Self::Pulsed {
                mean_velocity,
                duty_cycle,
                frequency,
                harmonics,
            } => waveform::make_pulsed(*mean_velocity, *duty_cycle, *frequency, *harmonics),
            Self::Physiological { mean_velocity } => waveform::make_physiological(*mean_velocity),
            Self::Steady { mean_velocity } => HarmonicSeries::steady(*mean_velocity),
            Self::Custom {
                mean_velocity,
                frequency,
                orders,
                amplitudes,
                phases,
            } => {
                if orders.len() != amplitudes.len() || phases.len() != amplitudes.len() {
                    return Err(Error::invalid(
                        "amplitudes",
                        format!(
                            "{} orders, {} amplitudes and {} phases must have equal length",
                            orders.len(),
                            amplitudes.len(),
                            phases.len()
                        ),
                    ));
                }
                let harmonics = orders
                    .iter()
                    .zip(amplitudes)
                    .zip(phases)
                    .map(|((&order, &amplitude), &phase)| Harmonic {
                        order,
                        amplitude,
                        phase,
                    })
                    .collect();
                HarmonicSeries::new(*mean_velocity, *frequency, harmonics)
            }
        }
    }

    pub fn mean_velocity(&self) -> f64 {
        match self {
            Self::Sinusoidal { mean_velocity, .. }
            | Self::Pulsed { mean_velocity, .. }
            | Self::Physiological { mean_velocity }
            | Self::Steady { mean_velocity }
            | Self::Custom { mean_velocity, .. } => *mean_velocity,
        }
    }

    pub fn with_mean_velocity(&self, value: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Sinusoidal { mean_velocity, .. }
            | Self::Pulsed { mean_velocity, .. }
            | Self::Physiological { mean_velocity }
            | Self::Steady { mean_velocity }
            | Self::Custom { mean_velocity, .. } => *mean_velocity = value,
        }
        out
    }

    pub fn with_frequency(&self, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            Self::Sinusoidal { frequency, .. }
            | Self::Pulsed { frequency, .. }
            | Self::Custom { frequency, .. } => *frequency = value,
            other => {
                return Err(Error::invalid(
                    "frequency",
                    format!("the {} waveform has no adjustable frequency", other.kind()),
                ))
            }
        }
        Ok(out)
    }
}

/// One fully specified channel plus its regime verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub geometry: ChannelGeometry,
    pub fluid: FluidProperties,
    pub transport: TransportParams,
    pub waveform_spec: WaveformSpec,
    pub waveform: HarmonicSeries,
    pub receiver: ReceiverSpec,
    pub regime: RegimeReport,
}

impl Scenario {
    /// Validates every component and runs the regime check; any hard
    /// failure is an error.
    pub fn new(
        label: impl Into<String>,
        geometry: ChannelGeometry,
        fluid: FluidProperties,
        transport: TransportParams,
        waveform_spec: WaveformSpec,
        receiver: ReceiverSpec,
        advisory_factor: f64,
    ) -> Result<Self> {
        let geometry = ChannelGeometry::new(geometry.radius, geometry.loop_length)?;
        let fluid = FluidProperties::new(fluid.density, fluid.dynamic_viscosity)?;
        let transport = TransportParams::new(transport.molecular_diffusion)?;
        receiver.validate(geometry.loop_length)?;
        if !(advisory_factor.is_finite() && advisory_factor > 0.0 && advisory_factor <= 1.0) {
            return Err(Error::invalid(
                "advisory_factor",
                format!("must be in (0, 1], got {advisory_factor}"),
            ));
        }
        let waveform = waveform_spec.build()?;
        let regime = regime_check(&geometry, &fluid, &transport, &waveform, advisory_factor);
        if regime.has_failure() {
            return Err(Error::Regime(regime.failures().join("; ")));
        }
        Ok(Self {
            label: label.into(),
            geometry,
            fluid,
            transport,
            waveform_spec,
            waveform,
            receiver,
            regime,
        })
    }

    /// Reference channel with the given waveform.
    pub fn with_defaults(label: impl Into<String>, waveform: WaveformSpec) -> Result<Self> {
        Self::new(
            label,
            ChannelGeometry::default(),
            FluidProperties::default(),
            TransportParams::default(),
            waveform,
            ReceiverSpec::default(),
            DEFAULT_ADVISORY_FACTOR,
        )
    }

    /// Same channel with `series` as a custom waveform. The regime report is
    /// recomputed but not enforced, so this also serves for reference
    /// variants such as the steady baseline.
    pub fn with_waveform(&self, series: HarmonicSeries) -> Scenario {
        let regime = regime_check(
            &self.geometry,
            &self.fluid,
            &self.transport,
            &series,
            self.regime.advisory_factor,
        );
        Scenario {
            waveform_spec: WaveformSpec::custom(&series),
            waveform: series,
            regime,
            ..self.clone()
        }
    }

    /// Rebuilds through [`Scenario::new`] after `edit`, so every invariant
    /// and the regime check apply to the result.
    pub fn modified(&self, edit: impl FnOnce(&mut Scenario) -> Result<()>) -> Result<Scenario> {
        let mut next = self.clone();
        edit(&mut next)?;
        Scenario::new(
            next.label,
            next.geometry,
            next.fluid,
            next.transport,
            next.waveform_spec,
            next.receiver,
            next.regime.advisory_factor,
        )
    }
}

/// Output time grid `t_k = k · duration / points`, `k = 1..=points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputGrid {
    pub duration: f64,
    pub points: usize,
}

impl Default for OutputGrid {
    fn default() -> Self {
        Self {
            duration: 20.0,
            points: 2000,
        }
    }
}

impl OutputGrid {
    pub fn new(duration: f64, points: usize) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(
                "duration",
                format!("must be > 0, got {duration}"),
            ));
        }
        if points == 0 {
            return Err(Error::invalid("grid_points", "must be >= 1"));
        }
        Ok(Self { duration, points })
    }

    pub fn times(&self) -> Vec<f64> {
        let step = self.duration / self.points as f64;
        (1..=self.points).map(|k| k as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Present when the file has a `[pbs]` section.
    pub pbs: Option<PbsConfig>,
    /// `[output]`; without it, the `[pbs]` sampling grid or 2000 points
    /// over 20 s.
    pub output: OutputGrid,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    label: Option<String>,
    #[serde(default)]
    geometry: GeometrySection,
    #[serde(default)]
    fluid: FluidSection,
    #[serde(default)]
    transport: TransportSection,
    waveform: Option<WaveformSection>,
    #[serde(default)]
    receiver: ReceiverSection,
    #[serde(default)]
    regime: RegimeSection,
    pbs: Option<PbsSection>,
    output: Option<OutputSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    radius: Option<f64>,
    loop_length: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FluidSection {
    density: Option<f64>,
    dynamic_viscosity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransportSection {
    diffusion: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaveformSection {
    kind: String,
    mean_velocity: Option<f64>,
    amplitude: Option<f64>,
    frequency: Option<f64>,
    duty_cycle: Option<f64>,
    harmonics: Option<usize>,
    orders: Option<Vec<u32>>,
    amplitudes: Option<Vec<f64>>,
    phases: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverSection {
    center: Option<f64>,
    width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeSection {
    advisory_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PbsSection {
    particles: Option<usize>,
    timestep: Option<f64>,
    duration: Option<f64>,
    seed: Option<u64>,
    sample_interval: Option<f64>,
    workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    duration: Option<f64>,
    grid_points: Option<usize>,
}

/// Attaches the config section to parameter errors.
fn in_section(section: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidParameter { name, reason } => {
            Error::config(format!("{section}.{name}"), reason)
        }
        other => other,
    }
}

/// For errors whose parameter name is already a full key path.
fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other,
    }
}

fn parse_error(text: &str, err: toml::de::Error) -> Error {
    let Some(span) = err.span() else {
        return Error::config("<root>", err.message());
    };
    let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
    let in_header = text[line_start..].trim_start().starts_with('[');
    let section = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string())
        .filter(|_| !in_header);
    let token = text[span.clone()].trim();
    let key = token.split(['=', '\n']).next().unwrap_or("").trim();
    let is_key = !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-');
    let path = match (section, is_key) {
        (Some(s), true) if s != key => format!("{s}.{key}"),
        (Some(s), _) => s,
        (None, true) => key.to_string(),
        (None, false) => "<root>".to_string(),
    };
    let line = text[..span.start].matches('\n').count() + 1;
    Error::config(path, format!("{} (line {line})", err.message().trim()))
}

impl WaveformSection {
    fn into_spec(self) -> Result<WaveformSpec> {
        let allowed: &[&str] = match self.kind.as_str() {
            "sinusoidal" => &["mean_velocity", "amplitude", "frequency"],
            "pulsed" => &["mean_velocity", "duty_cycle", "frequency", "harmonics"],
            "physiological" | "steady" => &["mean_velocity"],
            "custom" => &["mean_velocity", "frequency", "orders", "amplitudes", "phases"],
            other => {
                return Err(Error::config(
                    "waveform.kind",
                    format!("unknown kind `{other}`; expected sinusoidal, pulsed, physiological, steady or custom"),
                ))
            }
        };
        let present = [
            ("mean_velocity", self.mean_velocity.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("frequency", self.frequency.is_some()),
            ("duty_cycle", self.duty_cycle.is_some()),
            ("harmonics", self.harmonics.is_some()),
            ("orders", self.orders.is_some()),
            ("amplitudes", self.amplitudes.is_some()),
            ("phases", self.phases.is_some()),
        ];
        if let Some((key, _)) = present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
            return Err(Error::config(
                format!("waveform.{key}"),
                format!("not a parameter of the {} waveform", self.kind),
            ));
        }
        let synthetic_mean = 1e-4;
        let spec = match self.kind.as_str() {
            "sinusoidal" => WaveformSpec::Sinusoidal {
                mean_velocity: self.mean_velocity.unwrap_or(synthetic_mean),
                amplitude: self.amplitude.unwrap_or(0.5),
                frequency: self.frequency.unwrap_or(0.5),
            },
            "pulsed" => WaveformSpec::Pulsed {
                mean_velocity: self.mean_velocity.unwrap_or(synthetic_mean),
                duty_cycle: self.duty_cycle.unwrap_or(0.2),
                frequency: self.frequency.unwrap_or(0.5),
                harmonics: self.harmonics.unwrap_or(DEFAULT_PULSED_HARMONICS),
            },
            "physiological" => WaveformSpec::Physiological {
                mean_velocity: self.mean_velocity.unwrap_or(2e-4),
            },
            "steady" => WaveformSpec::Steady {
                mean_velocity: self.mean_velocity.unwrap_or(synthetic_mean),
            },
            _ => {
                let need = |key: &'static str| {
                    Error::config(format!("waveform.{key}"), "required for a custom waveform")
                };
                let amplitudes = self.amplitudes.ok_or_else(|| need("amplitudes"))?;
                WaveformSpec::Custom {
                    mean_velocity: self.mean_velocity.ok_or_else(|| need("mean_velocity"))?,
                    frequency: self.frequency.ok_or_else(|| need("frequency"))?,
                    orders: self
                        .orders
                        .unwrap_or_else(|| (1..=amplitudes.len() as u32).collect()),
                    phases: self.phases.ok_or_else(|| need("phases"))?,
                    amplitudes,
                }
            }
        };
        Ok(spec)
    }
}

/// Parses a full run configuration.
pub fn load_config(text: &str) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| parse_error(text, e))?;

    let geometry = ChannelGeometry::default();
    let geometry = ChannelGeometry {
        radius: file.geometry.radius.unwrap_or(geometry.radius),
        loop_length: file.geometry.loop_length.unwrap_or(geometry.loop_length),
    };
    let fluid = FluidProperties::default();
    let fluid = FluidProperties {
        density: file.fluid.density.unwrap_or(fluid.density),
        dynamic_viscosity: file
            .fluid
            .dynamic_viscosity
            .unwrap_or(fluid.dynamic_viscosity),
    };
    let transport = TransportParams {
        molecular_diffusion: file
            .transport
            .diffusion
            .unwrap_or(TransportParams::default().molecular_diffusion),
    };
    let receiver = ReceiverSpec::default();
    let receiver = ReceiverSpec {
        center: file.receiver.center.unwrap_or(receiver.center),
        width: file.receiver.width.unwrap_or(receiver.width),
    };
    let advisory_factor = file
        .regime
        .advisory_factor
        .unwrap_or(DEFAULT_ADVISORY_FACTOR);

    // Validate section by section so errors carry their key path.
    ChannelGeometry::new(geometry.radius, geometry.loop_length).map_err(in_section("geometry"))?;
    FluidProperties::new(fluid.density, fluid.dynamic_viscosity).map_err(in_section("fluid"))?;
    TransportParams::new(transport.molecular_diffusion).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::config("transport.diffusion", reason),
        other => other,
    })?;
    receiver.validate(geometry.loop_length).map_err(as_config)?;
    let waveform_spec = file
        .waveform
        .ok_or_else(|| Error::config("waveform", "missing; set `kind`"))?
        .into_spec()?;
    waveform_spec.build().map_err(in_section("waveform"))?;

    let label = file
        .label
        .unwrap_or_else(|| waveform_spec.kind().to_string());
    let scenario = Scenario::new(
        label,
        geometry,
        fluid,
        transport,
        waveform_spec,
        receiver,
        advisory_factor,
    )
    .map_err(in_section("regime"))?;

    let pbs = file
        .pbs
        .map(|s| {
            let d = PbsConfig::default();
            let config = PbsConfig {
                particles: s.particles.unwrap_or(d.particles),
                timestep: s.timestep.unwrap_or(d.timestep),
                duration: s.duration.unwrap_or(d.duration),
                seed: s.seed.unwrap_or(d.seed),
                sample_interval: s.sample_interval.unwrap_or(d.sample_interval),
                workers: s.workers.unwrap_or(d.workers),
            };
            config
                .validate(&scenario.geometry, scenario.transport.molecular_diffusion)
                .map_err(as_config)?;
            Ok::<_, Error>(config)
        })
        .transpose()?;

    let fallback = match &pbs {
        Some(p) => OutputGrid {
            duration: p.duration,
            points: (p.duration / p.sample_interval + 1e-9).floor() as usize,
        },
        None => OutputGrid::default(),
    };
    let output = match file.output {
        Some(o) => OutputGrid::new(
            o.duration.unwrap_or(fallback.duration),
            o.grid_points.unwrap_or(fallback.points),
        )
        .map_err(in_section("output"))?,
        None => fallback,
    };
    Ok(RunConfig {
        scenario,
        pbs,
        output,
    })
}

/// Parses only the scenario part of a configuration.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    load_config(text).map(|c| c.scenario)
}
