//! Cross-sectionally averaged pulsatile velocity as a truncated harmonic
//! series,
//!
//! ```text
//! u(t) = ū (1 + Σ M_n cos(n ω t + φ_n)),   ω = 2π f
//! ```
//!
//! with sinusoidal, pulsed (rectangular Fourier fit) and physiological presets.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default harmonic count for the pulsed preset.
pub const DEFAULT_PULSED_HARMONICS: usize = 50;

/// Fundamental frequency of the physiological preset, Hz.
pub const PHYSIOLOGICAL_FREQUENCY: f64 = 1.15;

/// Amplitudes `M_1..M_12` of the physiological preset.
pub const PHYSIOLOGICAL_AMPLITUDES: [f64; 12] = [
    0.548, 0.684, 0.373, 0.489, 0.352, 0.166, 0.253, 0.135, 0.195, 0.134, 0.162, 0.190,
];

/// Phases `φ_1..φ_12` of the physiological preset, rad.
pub const PHYSIOLOGICAL_PHASES: [f64; 12] = [
    -0.869, -1.826, -3.009, 3.137, 1.815, 1.944, 1.252, 0.727, 0.287, -0.504, -0.605, -1.307,
];

/// Beyond this many fundamental periods the harmonic angle is reduced
/// modulo 2π before use.
const UNWRAPPED_PERIODS: f64 = 1e4;

/// One term `M cos(n ω t + φ)` of the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Harmonic index `n ≥ 1`.
    pub order: u32,
    /// Dimensionless amplitude `M_n ≥ 0`.
    pub amplitude: f64,
    /// Phase `φ_n`, rad. Stored as given, never re-wrapped.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSeries {
    mean_velocity: f64,
    frequency: f64,
    harmonics: Vec<Harmonic>,
}

impl HarmonicSeries {
    /// Builds a series from explicit harmonics.
    ///
    /// `mean_velocity` may be zero (pure diffusion), but not negative.
    /// Harmonic orders must be distinct and positive: two terms at the same
    /// frequency would make the cross-term integrals of the variance resonant.
    pub fn new(mean_velocity: f64, frequency: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        if !(mean_velocity.is_finite() && mean_velocity >= 0.0) {
            return Err(Error::invalid(
                "mean_velocity",
                format!("must be finite and >= 0, got {mean_velocity}"),
            ));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid(
                "frequency",
                format!("must be finite and > 0, got {frequency}"),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for h in &harmonics {
            if h.order == 0 {
                return Err(Error::invalid("harmonics", "harmonic order must be >= 1"));
            }
            if !seen.insert(h.order) {
                return Err(Error::invalid(
                    "harmonics",
                    format!("harmonic order {} appears twice", h.order),
                ));
            }
            if !(h.amplitude.is_finite() && h.amplitude >= 0.0) {
                return Err(Error::invalid(
                    "harmonics",
                    format!(
                        "amplitude of harmonic {} must be finite and >= 0, got {}",
                        h.order, h.amplitude
                    ),
                ));
            }
            if !h.phase.is_finite() {
                return Err(Error::invalid(
                    "harmonics",
                    format!("phase of harmonic {} is not finite", h.order),
                ));
            }
        }
        Ok(Self {
            mean_velocity,
            frequency,
            harmonics,
        })
    }

    /// Builds a series with orders `1..=N` from parallel amplitude/phase lists.
    pub fn from_lists(
        mean_velocity: f64,
        frequency: f64,
        amplitudes: &[f64],
        phases: &[f64],
    ) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(Error::invalid(
                "harmonics",
                format!(
                    "{} amplitudes but {} phases",
                    amplitudes.len(),
                    phases.len()
                ),
            ));
        }
        let harmonics = amplitudes
            .iter()
            .zip(phases)
            .enumerate()
            .map(|(i, (&amplitude, &phase))| Harmonic {
                order: i as u32 + 1,
                amplitude,
                phase,
            })
            .collect();
        Self::new(mean_velocity, frequency, harmonics)
    }

    /// Constant flow at `mean_velocity`.
    pub fn steady(mean_velocity: f64) -> Result<Self> {
        Self::new(mean_velocity, 1.0, Vec::new())
    }

    /// Same mean velocity and frequency, all harmonics dropped.
    pub fn without_harmonics(&self) -> Self {
        Self {
            mean_velocity: self.mean_velocity,
            frequency: self.frequency,
            harmonics: Vec::new(),
        }
    }

    /// Same shape rescaled to a different mean velocity.
    pub fn with_mean_velocity(&self, mean_velocity: f64) -> Result<Self> {
        Self::new(mean_velocity, self.frequency, self.harmonics.clone())
    }

    pub fn mean_velocity(&self) -> f64 {
        self.mean_velocity
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn angular_frequency(&self) -> f64 {
        TAU * self.frequency
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_steady(&self) -> bool {
        self.harmonics.is_empty()
    }

    /// Highest harmonic order present (0 for steady flow).
    pub fn max_order(&self) -> u32 {
        self.harmonics.iter().map(|h| h.order).max().unwrap_or(0)
    }

    /// `k ω t` for an integer multiple `k` of the fundamental, reduced
    /// modulo 2π once `t` spans more than 10⁴ periods.
    pub fn angle(&self, multiple: f64, t: f64) -> f64 {
        if t * self.frequency <= UNWRAPPED_PERIODS {
            multiple * self.angular_frequency() * t
        } else {
            TAU * (multiple * self.frequency * t).fract()
        }
    }

    /// Relative modulation `Σ M_n cos(n ω t + φ_n)`.
    pub fn modulation(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|h| h.amplitude * (self.angle(h.order as f64, t) + h.phase).cos())
            .sum()
    }

    /// `u(t)`, m/s.
    pub fn velocity(&self, t: f64) -> f64 {
        self.mean_velocity * (1.0 + self.modulation(t))
    }

    /// Minimum of `u(t)/ū` over one period sampled on `points` nodes.
    pub fn min_relative_velocity(&self, points: usize) -> f64 {
        let period = self.period();
        (0..points.max(1))
            .map(|i| 1.0 + self.modulation(period * i as f64 / points as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates `u(t)` for `series`.
pub fn eval_velocity(series: &HarmonicSeries, t: f64) -> f64 {
    series.velocity(t)
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// `ū (1 + A sin(2π f t))`, i.e. one harmonic with `M_1 = A`, `φ_1 = −π/2`.
pub fn make_sinusoidal(
    mean_velocity: f64,
    amplitude: f64,
    frequency: f64,
) -> Result<HarmonicSeries> {
    require_positive("mean_velocity", mean_velocity)?;
    require_positive("frequency", frequency)?;
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(
            "amplitude",
            format!("must be finite and >= 0, got {amplitude}"),
        ));
    }
    HarmonicSeries::new(
        mean_velocity,
        frequency,
        vec![Harmonic {
            order: 1,
            amplitude,
            phase: -FRAC_PI_2,
        }],
    )
}

/// Fourier coefficients `(A_n, B_n)` of the unit-mean rectangular pulse with
/// duty cycle `d`.
pub fn pulse_fourier_coefficients(duty_cycle: f64, order: u32) -> (f64, f64) {
    let x = PI * order as f64 * duty_cycle;
    let a = (2.0 * x).sin() / x;
    let b = (1.0 - (2.0 * x).cos()) / x;
    (a, b)
}

/// N-harmonic fit of the rectangular pulse that is `ū/d` for the first
/// fraction `d` of every period and zero otherwise.
pub fn make_pulsed(
    mean_velocity: f64,
    duty_cycle: f64,
    frequency: f64,
    harmonics: usize,
) -> Result<HarmonicSeries> {
    require_positive("mean_velocity", mean_velocity)?;
    require_positive("frequency", frequency)?;
    if !(duty_cycle > 0.0 && duty_cycle < 1.0) {
        return Err(Error::invalid(
            "duty_cycle",
            format!("must lie in (0, 1), got {duty_cycle}"),
        ));
    }
    if harmonics == 0 {
        return Err(Error::invalid(
            "harmonics",
            "pulsed waveform needs at least one harmonic",
        ));
    }
    let terms = (1..=harmonics as u32)
        .map(|order| {
            let cycles = order as f64 * duty_cycle;
            // sin(2πnd) and 1 − cos(2πnd) vanish exactly when n·d is an integer;
            // floating point leaves ~1e-16 residue with an arbitrary atan2 phase.
            if (cycles - cycles.round()).abs() < 1e-12 {
                return Harmonic {
                    order,
                    amplitude: 0.0,
                    phase: 0.0,
                };
            }
            let (a, b) = pulse_fourier_coefficients(duty_cycle, order);
            Harmonic {
                order,
                amplitude: a.hypot(b),
                phase: (-b).atan2(a),
            }
        })
        .collect();
    HarmonicSeries::new(mean_velocity, frequency, terms)
}

/// The ideal rectangular pulse the pulsed preset approximates.
pub fn ideal_pulse(mean_velocity: f64, duty_cycle: f64, frequency: f64, t: f64) -> f64 {
    let phase = (t * frequency).rem_euclid(1.0);
    if phase < duty_cycle {
        mean_velocity / duty_cycle
    } else {
        0.0
    }
}

/// 12-harmonic physiological waveform at 1.15 Hz, scaled to `mean_velocity`.
pub fn make_physiological(mean_velocity: f64) -> Result<HarmonicSeries> {
    require_positive("mean_velocity", mean_velocity)?;
    HarmonicSeries::from_lists(
        mean_velocity,
        PHYSIOLOGICAL_FREQUENCY,
        &PHYSIOLOGICAL_AMPLITUDES,
        &PHYSIOLOGICAL_PHASES,
    )
}
