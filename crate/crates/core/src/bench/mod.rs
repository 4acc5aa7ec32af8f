//! Scenario configuration, experiment orchestration and data output.

mod experiment;
mod output;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use experiment::{
    binomial_standard_error, first_peak, pbs_agreement, preset, presets, run_experiment, run_sweep,
    Agreement, AssertionResult, Experiment, NamedMetrics, Preset, Sweep, SweepAssertion,
    SweepOutcome, SweepParameter, DEVIATION_START, PEAK_FIT_HALF_WIDTH, PEAK_TIME_TOLERANCE,
    RMSE_STANDARD_ERROR_FACTOR,
};
pub use output::{emit_csv, emit_manifest, read_csv, RunManifest};
pub use scenario::{load_config, load_scenario, OutputGrid, RunConfig, Scenario, WaveformSpec};

/// Normalized received signal sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("{} times but {} values", t.len(), values.len()),
            ));
        }
        if let Some(w) = t.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "t",
                format!("not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
        Ok(Self {
            label: label.into(),
            t,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Samples with `lo ≤ t ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> TimeSeries {
        let (t, values) = self
            .t
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| (lo..=hi).contains(*t))
            .map(|(t, v)| (*t, *v))
            .unzip();
        TimeSeries {
            label: self.label.clone(),
            t,
            values,
        }
    }

    fn argmax(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    }

    /// Time of the largest sample (the first one on ties).
    pub fn argmax_time(&self) -> Option<f64> {
        self.argmax().map(|i| self.t[i])
    }

    pub fn peak_value(&self) -> Option<f64> {
        self.argmax().map(|i| self.values[i])
    }

    /// Peak time from a least-squares parabola through every sample within
    /// `half_width` seconds of the maximum of a moving average of the same
    /// width. Robust to sample noise, unlike [`Self::argmax_time`].
    pub fn fitted_peak_time(&self, half_width: f64) -> Option<f64> {
        if self.len() < 3 {
            return self.argmax_time();
        }
        let dt = (self.t[self.len() - 1] - self.t[0]) / (self.len() - 1) as f64;
        let k = ((half_width / dt).round() as usize).max(1);
        let smoothed: Vec<f64> = (0..self.len())
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(k), (i + k).min(self.len() - 1));
                self.values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        let centre = TimeSeries {
            label: String::new(),
            t: self.t.clone(),
            values: smoothed,
        }
        .argmax()?;
        let (lo, hi) = (centre.saturating_sub(k), (centre + k).min(self.len() - 1));
        if hi - lo < 2 {
            return Some(self.t[centre]);
        }
        // Fit v = c0 + c1 s + c2 s² with s = t − t_centre.
        let t0 = self.t[centre];
        let mut m = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for i in lo..=hi {
            let s = self.t[i] - t0;
            let basis = [1.0, s, s * s];
            for r in 0..3 {
                rhs[r] += basis[r] * self.values[i];
                for c in 0..3 {
                    m[r][c] += basis[r] * basis[c];
                }
            }
        }
        let [_, c1, c2] = solve3(m, rhs)?;
        if !(c2 < 0.0) {
            return Some(t0);
        }
        let vertex = (-c1 / (2.0 * c2)).clamp(self.t[lo] - t0, self.t[hi] - t0);
        Some(t0 + vertex)
    }
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (v, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub rmse: f64,
    pub max_abs_error: f64,
    /// `argmax_t(b) − argmax_t(a)`, s.
    pub peak_time_delta: f64,
    pub grid_points: usize,
}

fn same_grid(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!(
            "`{}` has {} samples, `{}` has {}",
            a.label,
            a.len(),
            b.label,
            b.len()
        )));
    }
    if let Some((x, y)) =
        a.t.iter()
            .zip(&b.t)
            .find(|(x, y)| (*x - *y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::GridMismatch(format!(
            "`{}` has t = {x}, `{}` has t = {y}",
            a.label, b.label
        )));
    }
    Ok(())
}

pub fn compare_series(a: &TimeSeries, b: &TimeSeries) -> Result<ComparisonMetrics> {
    same_grid(a, b)?;
    if a.is_empty() {
        return Err(Error::GridMismatch("empty series".into()));
    }
    let (mut sq, mut max) = (0.0, 0.0f64);
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = (x - y).abs();
        sq += d * d;
        max = max.max(d);
    }
    let peak_time_delta = b.argmax_time().unwrap_or(0.0) - a.argmax_time().unwrap_or(0.0);
    Ok(ComparisonMetrics {
        rmse: (sq / a.len() as f64).sqrt(),
        max_abs_error: max,
        peak_time_delta,
        grid_points: a.len(),
    })
}
