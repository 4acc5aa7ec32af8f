use serde::{Deserialize, Serialize};

use super::{womersley_number, ChannelGeometry, FluidProperties};
use crate::dispersion::TransportParams;
use crate::waveform::HarmonicSeries;

/// A "much less than" ratio above this counts as an advisory.
pub const DEFAULT_ADVISORY_FACTOR: f64 = 0.1;

/// Grid used to look for negative instantaneous flow.
const REVERSAL_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Advisory,
    Fail,
}

impl Verdict {
    fn of_ratio(ratio: f64, advisory_factor: f64) -> Self {
        if !(ratio < 1.0) {
            Verdict::Fail
        } else if ratio > advisory_factor {
            Verdict::Advisory
        } else {
            Verdict::Pass
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub advisory_factor: f64,
    /// `R / L`
    pub ratio_slender: f64,
    /// `(R²/D) / (L/ū)`: radial mixing time over advective transit time.
    pub ratio_radial: f64,
    /// `(L/ū) / (L²/D)`: advective transit time over axial diffusion time.
    pub ratio_axial: f64,
    pub womersley_numbers: Vec<f64>,
    pub womersley_max: f64,
    pub min_relative_velocity: f64,
    pub flow_reversal_detected: bool,
    pub slender: Verdict,
    pub radial: Verdict,
    pub axial: Verdict,
    /// Advisory once any `a_n ≥ 1`: the quasi-steady dispersion coefficient
    /// is no longer justified. Never a hard failure.
    pub womersley: Verdict,
}

impl RegimeReport {
    pub fn has_failure(&self) -> bool {
        [self.slender, self.radial, self.axial, self.womersley].contains(&Verdict::Fail)
    }

    pub fn has_advisory(&self) -> bool {
        [self.slender, self.radial, self.axial, self.womersley].contains(&Verdict::Advisory)
    }

    /// Names of the failing conditions, for error messages.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.slender == Verdict::Fail {
            out.push(format!(
                "R/L = {:.3e} (channel must be slender)",
                self.ratio_slender
            ));
        }
        if self.radial == Verdict::Fail {
            out.push(format!(
                "(R²/D)/(L/ū) = {:.3e} (radial mixing too slow)",
                self.ratio_radial
            ));
        }
        if self.axial == Verdict::Fail {
            out.push(format!(
                "(L/ū)/(L²/D) = {:.3e} (axial diffusion dominates)",
                self.ratio_axial
            ));
        }
        out
    }
}

pub fn regime_check(
    geom: &ChannelGeometry,
    fluid: &FluidProperties,
    transport: &TransportParams,
    series: &HarmonicSeries,
    advisory_factor: f64,
) -> RegimeReport {
    let d = transport.molecular_diffusion;
    let u = series.mean_velocity();
    let (r, l) = (geom.radius, geom.loop_length);

    let ratio_slender = r / l;
    let ratio_radial = r * r * u / (d * l);
    let ratio_axial = d / (u * l);

    let omega = series.angular_frequency();
    let womersley_numbers: Vec<f64> = series
        .harmonics()
        .iter()
        .map(|h| womersley_number(geom, fluid, h.order, omega))
        .collect();
    let womersley_max = womersley_numbers.iter().copied().fold(0.0, f64::max);
    let min_relative_velocity = series.min_relative_velocity(REVERSAL_GRID);

    RegimeReport {
        advisory_factor,
        ratio_slender,
        ratio_radial,
        ratio_axial,
        womersley_numbers,
        womersley_max,
        min_relative_velocity,
        flow_reversal_detected: min_relative_velocity < 0.0,
        slender: Verdict::of_ratio(ratio_slender, advisory_factor),
        radial: Verdict::of_ratio(ratio_radial, advisory_factor),
        axial: Verdict::of_ratio(ratio_axial, advisory_factor),
        womersley: if womersley_max >= 1.0 {
            Verdict::Advisory
        } else {
            Verdict::Pass
        },
    }
}
