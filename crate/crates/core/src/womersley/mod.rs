//! Radial Womersley velocity field for pulsatile pipe flow and the
//! dispersive-regime checks.
//!
//! The axial field is a Poiseuille profile plus one Womersley mode per
//! harmonic of the averaged waveform:
//!
//! ```text
//! u(r, t) = 2ū (1 − r²/R²) + Σ ū M_n Re{Ψ_n(r) e^{j(nωt + φ_n)}}
//! ```
//!
//! Each `Ψ_n` has unit cross-sectional mean, so averaging `u(r, t)` over the
//! disc recovers the 1D series exactly.

mod bessel;
mod regime;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::waveform::HarmonicSeries;
use crate::{Error, Result};

pub use bessel::{complex_bessel_j01, BESSEL_ARGUMENT_CAP};
pub use regime::{regime_check, RegimeReport, Verdict, DEFAULT_ADVISORY_FACTOR};

/// Below this Womersley number `Ψ_n` is replaced by its parabolic limit.
pub const SMALL_WOMERSLEY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    /// Channel radius `R`, m.
    pub radius: f64,
    /// Loop circumference `L`, m.
    pub loop_length: f64,
}

impl ChannelGeometry {
    pub fn new(radius: f64, loop_length: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "radius",
                format!("must be finite and > 0, got {radius}"),
            ));
        }
        if !(loop_length.is_finite() && loop_length > 0.0) {
            return Err(Error::invalid(
                "loop_length",
                format!("must be finite and > 0, got {loop_length}"),
            ));
        }
        if radius >= loop_length {
            return Err(Error::NotSlender {
                radius,
                length: loop_length,
            });
        }
        Ok(Self {
            radius,
            loop_length,
        })
    }
}

impl Default for ChannelGeometry {
    fn default() -> Self {
        Self {
            radius: 50e-6,
            loop_length: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// kg/m³
    pub density: f64,
    /// Pa·s
    pub dynamic_viscosity: f64,
}

impl FluidProperties {
    pub fn new(density: f64, dynamic_viscosity: f64) -> Result<Self> {
        if !(density.is_finite() && density > 0.0) {
            return Err(Error::invalid(
                "density",
                format!("must be finite and > 0, got {density}"),
            ));
        }
        if !(dynamic_viscosity.is_finite() && dynamic_viscosity > 0.0) {
            return Err(Error::invalid(
                "dynamic_viscosity",
                format!("must be finite and > 0, got {dynamic_viscosity}"),
            ));
        }
        Ok(Self {
            density,
            dynamic_viscosity,
        })
    }

    /// `ν = μ/ρ`, m²/s.
    pub fn kinematic_viscosity(&self) -> f64 {
        self.dynamic_viscosity / self.density
    }
}

impl Default for FluidProperties {
    /// Blood-like carrier: ρ = 1060 kg/m³, μ = 3 mPa·s.
    fn default() -> Self {
        Self {
            density: 1060.0,
            dynamic_viscosity: 3e-3,
        }
    }
}

/// `a_n = R √(n ω / ν)`.
pub fn womersley_number(
    geom: &ChannelGeometry,
    fluid: &FluidProperties,
    order: u32,
    angular_frequency: f64,
) -> f64 {
    geom.radius * (order as f64 * angular_frequency / fluid.kinematic_viscosity()).sqrt()
}

/// `j^{3/2}` on the principal branch, `e^{j 3π/4}`.
fn j_three_halves() -> Complex64 {
    Complex64::from_polar(1.0, 0.75 * PI)
}

/// Radial profile of one Womersley mode, pre-evaluated at the wall argument.
#[derive(Debug, Clone, Copy)]
pub struct ShapeFunction {
    womersley: f64,
    argument: Complex64,
    wall_j0: Complex64,
    denominator: Complex64,
}

impl ShapeFunction {
    pub fn new(womersley: f64) -> Result<Self> {
        if !(womersley.is_finite() && womersley >= 0.0) {
            return Err(Error::invalid(
                "womersley",
                format!("must be finite and >= 0, got {womersley}"),
            ));
        }
        let argument = j_three_halves() * womersley;
        if womersley < SMALL_WOMERSLEY {
            let one = Complex64::new(1.0, 0.0);
            return Ok(Self {
                womersley,
                argument,
                wall_j0: one,
                denominator: one,
            });
        }
        let (wall_j0, wall_j1) = complex_bessel_j01(argument)?;
        let denominator = wall_j0 - 2.0 * wall_j1 / argument;
        Ok(Self {
            womersley,
            argument,
            wall_j0,
            denominator,
        })
    }

    pub fn womersley(&self) -> f64 {
        self.womersley
    }

    /// `Ψ(r)` at relative radius `s = r/R ∈ [0, 1]`.
    pub fn eval(&self, relative_radius: f64) -> Result<Complex64> {
        if self.womersley < SMALL_WOMERSLEY {
            return Ok(Complex64::new(
                2.0 * (1.0 - relative_radius * relative_radius),
                0.0,
            ));
        }
        let (j0, _) = complex_bessel_j01(self.argument * relative_radius)?;
        Ok((self.wall_j0 - j0) / self.denominator)
    }
}

/// `Ψ_n(r)` for harmonic `order` at angular frequency `ω`.
pub fn shape_function(
    geom: &ChannelGeometry,
    fluid: &FluidProperties,
    order: u32,
    angular_frequency: f64,
    r: f64,
) -> Result<Complex64> {
    if !(0.0..=geom.radius).contains(&r) {
        return Err(Error::invalid(
            "r",
            format!("must lie in [0, {}], got {r}", geom.radius),
        ));
    }
    let a = womersley_number(geom, fluid, order, angular_frequency);
    ShapeFunction::new(a)?.eval(r / geom.radius)
}

/// Full 3D axial field for one waveform: the shape functions of every
/// harmonic are set up once and reused for every `(r, t)`.
#[derive(Debug, Clone)]
pub struct WomersleyField {
    series: HarmonicSeries,
    radius: f64,
    shapes: Vec<ShapeFunction>,
}

impl WomersleyField {
    pub fn new(
        series: &HarmonicSeries,
        geom: &ChannelGeometry,
        fluid: &FluidProperties,
    ) -> Result<Self> {
        let omega = series.angular_frequency();
        let shapes = series
            .harmonics()
            .iter()
            .map(|h| ShapeFunction::new(womersley_number(geom, fluid, h.order, omega)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            series: series.clone(),
            radius: geom.radius,
            shapes,
        })
    }

    pub fn series(&self) -> &HarmonicSeries {
        &self.series
    }

    pub fn shapes(&self) -> &[ShapeFunction] {
        &self.shapes
    }

    /// Complex harmonic weights `M_n e^{j(nωt + φ_n)}` at time `t`.
    pub fn phasors(&self, t: f64) -> Vec<Complex64> {
        self.series
            .harmonics()
            .iter()
            .map(|h| {
                Complex64::from_polar(h.amplitude, self.series.angle(h.order as f64, t) + h.phase)
            })
            .collect()
    }

    /// `u(r, t)`, m/s.
    pub fn velocity(&self, r: f64, t: f64) -> Result<f64> {
        if !(0.0..=self.radius).contains(&r) {
            return Err(Error::invalid(
                "r",
                format!("must lie in [0, {}], got {r}", self.radius),
            ));
        }
        let s = r / self.radius;
        let mut relative = 2.0 * (1.0 - s * s);
        for (shape, phasor) in self.shapes.iter().zip(self.phasors(t)) {
            relative += (shape.eval(s)? * phasor).re;
        }
        Ok(self.series.mean_velocity() * relative)
    }
}

/// `u(r, t)` for a single query. Use [`WomersleyField`] when evaluating
/// repeatedly.
pub fn axial_velocity_3d(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    fluid: &FluidProperties,
    r: f64,
    t: f64,
) -> Result<f64> {
    WomersleyField::new(series, geom, fluid)?.velocity(r, t)
}
