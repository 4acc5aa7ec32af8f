//! Tabulated Womersley field for the particle loop.
//!
//! With `q = r²/R²` the relative velocity is
//!
//! ```text
//! u/ū = 2(1 − q)(1 + m(t)) + Σ Re{δ_n(q) c_n(t)},   δ_n = Ψ_n − 2(1 − q)
//! ```
//!
//! where `m(t)` is the series modulation and `c_n = M_n e^{j(nωt+φ_n)}`.
//! The deviations `δ_n` are O(a_n²) and smooth in `q`, so a uniform table in
//! `q` with linear interpolation is accurate far below 1e-8 and needs no
//! square root per particle. Each step collapses the harmonics into one
//! real table.

use num_complex::Complex64;

use crate::womersley::WomersleyField;
use crate::Result;

pub const TABLE_POINTS: usize = 4096;

#[derive(Debug, Clone)]
pub struct RadialTable {
    field: WomersleyField,
    /// `deviations[n][i] = δ_n(q_i)`
    deviations: Vec<Vec<Complex64>>,
    has_deviation: bool,
}

/// Per-step snapshot of the field, in m/s.
#[derive(Debug, Clone)]
pub struct StepVelocity {
    /// `2ū(1 + m(t))`: the parabolic part is `poiseuille · (1 − q)`.
    poiseuille: f64,
    /// `ū Σ Re{δ_n(q_i) c_n(t)}` on the table nodes; empty when all δ_n vanish.
    correction: Vec<f64>,
}

impl RadialTable {
    pub fn new(field: WomersleyField) -> Result<Self> {
        let mut deviations = Vec::with_capacity(field.shapes().len());
        let mut has_deviation = false;
        for shape in field.shapes() {
            let column = (0..TABLE_POINTS)
                .map(|i| {
                    let q = i as f64 / (TABLE_POINTS - 1) as f64;
                    Ok(shape.eval(q.sqrt())? - 2.0 * (1.0 - q))
                })
                .collect::<Result<Vec<_>>>()?;
            has_deviation |= column.iter().any(|d| d.norm() > 0.0);
            deviations.push(column);
        }
        Ok(Self {
            field,
            deviations,
            has_deviation,
        })
    }

    pub fn field(&self) -> &WomersleyField {
        &self.field
    }

    pub fn at(&self, t: f64) -> StepVelocity {
        let series = self.field.series();
        let mean = series.mean_velocity();
        let poiseuille = 2.0 * mean * (1.0 + series.modulation(t));
        if !self.has_deviation {
            return StepVelocity {
                poiseuille,
                correction: Vec::new(),
            };
        }
        let mut correction = vec![0.0; TABLE_POINTS];
        for (column, c) in self.deviations.iter().zip(self.field.phasors(t)) {
            let c = c * mean;
            for (acc, d) in correction.iter_mut().zip(column) {
                *acc += d.re * c.re - d.im * c.im;
            }
        }
        StepVelocity {
            poiseuille,
            correction,
        }
    }
}

impl StepVelocity {
    /// Velocity at squared relative radius `q ∈ [0, 1]`.
    #[inline]
    pub fn velocity(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let base = self.poiseuille * (1.0 - q);
        if self.correction.is_empty() {
            return base;
        }
        let pos = q * (TABLE_POINTS - 1) as f64;
        let i = (pos as usize).min(TABLE_POINTS - 2);
        let frac = pos - i as f64;
        base + self.correction[i] + frac * (self.correction[i + 1] - self.correction[i])
    }
}
