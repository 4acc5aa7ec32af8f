//! Closed-loop channel impulse response.
//!
//! On a loop of circumference `L` the straight-duct Gaussian wraps onto the
//! circle:
//!
//! ```text
//! p(x, t) = Σ_k N(x − μ(t) + kL; 0, σ²(t))
//! ```
//!
//! A passive receiver integrates `p` over `[x_Rx − Δx/2, x_Rx + Δx/2]`;
//! normalizing by the equilibrium fraction `Δx/L` makes the long-time signal
//! tend to 1.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::bench::{Scenario, TimeSeries};
use crate::dispersion::{self, GaussianMoments};
use crate::{Error, Result};

/// Image terms farther than this many standard deviations are dropped.
pub const DEFAULT_TAIL_SIGMAS: f64 = 8.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    /// `x_Rx`, m.
    pub center: f64,
    /// `Δx_Rx`, m.
    pub width: f64,
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        Self {
            center: 0.3e-3,
            width: 0.1e-3,
        }
    }
}

impl ReceiverSpec {
    pub fn new(center: f64, width: f64, loop_length: f64) -> Result<Self> {
        let spec = Self { center, width };
        spec.validate(loop_length)?;
        Ok(spec)
    }

    pub fn validate(&self, loop_length: f64) -> Result<()> {
        if !(self.center.is_finite() && (0.0..loop_length).contains(&self.center)) {
            return Err(Error::invalid(
                "receiver.center",
                format!("must lie in [0, {loop_length}), got {}", self.center),
            ));
        }
        if !(self.width > 0.0 && self.width <= loop_length) {
            return Err(Error::invalid(
                "receiver.width",
                format!("must lie in (0, {loop_length}], got {}", self.width),
            ));
        }
        Ok(())
    }

    /// `p_∞ = Δx/L`.
    pub fn equilibrium_fraction(&self, loop_length: f64) -> f64 {
        self.width / loop_length
    }

    /// The window as one or two sub-intervals of `[0, L]`.
    pub fn segments(&self, loop_length: f64) -> Vec<(f64, f64)> {
        let a = self.center - 0.5 * self.width;
        let b = self.center + 0.5 * self.width;
        if a < 0.0 {
            vec![(a + loop_length, loop_length), (0.0, b)]
        } else if b > loop_length {
            vec![(a, loop_length), (0.0, b - loop_length)]
        } else {
            vec![(a, b)]
        }
    }

    /// Whether a wrapped coordinate `x ∈ [0, L)` lies inside the window.
    pub fn contains(&self, x: f64, loop_length: f64) -> bool {
        let start = self.center - 0.5 * self.width;
        (x - start).rem_euclid(loop_length) < self.width
    }
}

/// One analytical sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirSample {
    pub t: f64,
    /// Fraction of released molecules inside the window, `p_Rx(t)`.
    pub fraction: f64,
    /// `p_Rx(t) / p_∞`.
    pub normalized: f64,
}

/// Standard normal mass on `[lo, hi]`, evaluated on whichever tail keeps
/// the subtraction well conditioned.
pub fn normal_mass(lo: f64, hi: f64) -> f64 {
    let upper = |x: f64| 0.5 * libm::erfc(x * FRAC_1_SQRT_2);
    let lower = |x: f64| 0.5 * libm::erfc(-x * FRAC_1_SQRT_2);
    if lo >= 0.0 {
        upper(lo) - upper(hi)
    } else if hi <= 0.0 {
        lower(hi) - lower(lo)
    } else {
        1.0 - upper(hi) - lower(lo)
    }
}

/// Smallest `c` (in steps of 1/4) with two-sided Gaussian tail mass below `tol`.
pub fn tail_sigmas_for(tol: f64) -> f64 {
    let mut c = 1.0;
    while libm::erfc(c * FRAC_1_SQRT_2) > tol && c < 40.0 {
        c += 0.25;
    }
    c
}

/// Wrapped normal on a loop of length `L`.
#[derive(Debug, Clone, Copy)]
pub struct WrappedNormal {
    mean: f64,
    sigma: f64,
    loop_length: f64,
    tail_sigmas: f64,
}

impl WrappedNormal {
    pub fn new(moments: &GaussianMoments, loop_length: f64) -> Result<Self> {
        if !(moments.variance > 0.0) {
            return Err(Error::DegenerateDistribution(moments.t));
        }
        Ok(Self {
            mean: moments.mean,
            sigma: moments.variance.sqrt(),
            loop_length,
            tail_sigmas: DEFAULT_TAIL_SIGMAS,
        })
    }

    /// Truncation chosen so the dropped tail mass is below `tol`
    /// (never tighter than the default 8σ).
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tail_sigmas = tail_sigmas_for(tol).max(DEFAULT_TAIL_SIGMAS);
        self
    }

    pub fn with_tail_sigmas(mut self, tail_sigmas: f64) -> Self {
        self.tail_sigmas = tail_sigmas;
        self
    }

    /// Image indices `k` whose shifted interval `[lo − μ + kL, hi − μ + kL]`
    /// reaches within `cσ` of zero, plus one guard term either side.
    fn images(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
        let reach = self.tail_sigmas * self.sigma;
        let first = ((self.mean - hi - reach) / self.loop_length).ceil() as i64 - 1;
        let last = ((self.mean - lo + reach) / self.loop_length).floor() as i64 + 1;
        first..=last
    }

    /// `x − μ + kL`, formed so that the large `μ` and `kL` cancel first.
    fn offset(&self, x: f64, k: i64) -> f64 {
        (k as f64 * self.loop_length - self.mean) + x
    }

    /// Density at `x`, which is reduced modulo `L` first.
    pub fn pdf(&self, x: f64) -> f64 {
        let x = x.rem_euclid(self.loop_length);
        let norm = 1.0 / (self.sigma * (2.0 * PI).sqrt());
        self.images(x, x)
            .map(|k| {
                let z = self.offset(x, k) / self.sigma;
                norm * (-0.5 * z * z).exp()
            })
            .sum()
    }

    /// Probability mass in `[lo, hi]`, `0 ≤ lo ≤ hi ≤ L`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.images(lo, hi)
            .map(|k| {
                normal_mass(
                    self.offset(lo, k) / self.sigma,
                    self.offset(hi, k) / self.sigma,
                )
            })
            .sum()
    }

    pub fn received(&self, receiver: &ReceiverSpec) -> f64 {
        receiver
            .segments(self.loop_length)
            .into_iter()
            .map(|(a, b)| self.mass(a, b))
            .sum()
    }
}

/// Wrapped-normal density at `x`, truncated to tail mass below `tol`.
pub fn wrapped_pdf(moments: &GaussianMoments, loop_length: f64, x: f64, tol: f64) -> Result<f64> {
    Ok(WrappedNormal::new(moments, loop_length)?
        .with_tolerance(tol)
        .pdf(x))
}

/// Fraction of molecules inside the receiver window.
pub fn received_signal(
    moments: &GaussianMoments,
    loop_length: f64,
    receiver: &ReceiverSpec,
) -> Result<f64> {
    Ok(WrappedNormal::new(moments, loop_length)?.received(receiver))
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "empty"));
    }
    if !(t_grid[0] > 0.0) {
        return Err(Error::invalid(
            "t_grid",
            format!("times must be > 0, first is {}", t_grid[0]),
        ));
    }
    if let Some(w) = t_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "t_grid",
            format!("not strictly increasing at {} -> {}", w[0], w[1]),
        ));
    }
    Ok(())
}

/// Analytical samples for the scenario's waveform.
pub fn cir_samples(scenario: &Scenario, t_grid: &[f64]) -> Result<Vec<CirSample>> {
    check_grid(t_grid)?;
    let l = scenario.geometry.loop_length;
    let p_inf = scenario.receiver.equilibrium_fraction(l);
    t_grid
        .iter()
        .map(|&t| {
            let m = dispersion::moments(
                &scenario.waveform,
                &scenario.geometry,
                &scenario.transport,
                t,
            );
            let fraction = received_signal(&m, l, &scenario.receiver)?;
            Ok(CirSample {
                t,
                fraction,
                normalized: fraction / p_inf,
            })
        })
        .collect()
}

/// Normalized received signal predicted by the time-variant model,
/// labelled `analytical`.
pub fn cir_timeseries(scenario: &Scenario, t_grid: &[f64]) -> Result<TimeSeries> {
    let samples = cir_samples(scenario, t_grid)?;
    TimeSeries::new(
        "analytical",
        t_grid.to_vec(),
        samples.iter().map(|s| s.normalized).collect(),
    )
}

/// Same pipeline with the waveform replaced by constant flow at `ū`,
/// labelled `steady`.
pub fn steady_flow_reference(scenario: &Scenario, t_grid: &[f64]) -> Result<TimeSeries> {
    let steady = scenario.with_waveform(scenario.waveform.without_harmonics());
    let samples = cir_samples(&steady, t_grid)?;
    TimeSeries::new(
        "steady",
        t_grid.to_vec(),
        samples.iter().map(|s| s.normalized).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const L: f64 = 1e-3;

    fn moments(mean: f64, sigma: f64) -> GaussianMoments {
        GaussianMoments {
            t: 1.0,
            mean,
            variance: sigma * sigma,
        }
    }

    /// Fourier (dual) form of the wrapped normal; independent of the image sum.
    fn fourier_pdf(mean: f64, sigma: f64, x: f64) -> f64 {
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            let damp = (-2.0 * PI * PI * kf * kf * sigma * sigma / (L * L)).exp();
            if damp < 1e-300 {
                break;
            }
            sum += 2.0 * damp * (2.0 * PI * kf * (x - mean) / L).cos();
        }
        sum / L
    }

    fn fourier_mass(mean: f64, sigma: f64, a: f64, b: f64) -> f64 {
        let mut sum = (b - a) / L;
        for k in 1..200 {
            let kf = k as f64;
            let w = 2.0 * PI * kf / L;
            let damp = (-0.5 * w * w * sigma * sigma).exp();
            if damp < 1e-300 {
                break;
            }
            sum += 2.0 * damp * (((b - mean) * w).sin() - ((a - mean) * w).sin()) / (w * L);
        }
        sum
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let err = wrapped_pdf(&moments(0.0, 0.0), L, 0.1e-3, 1e-12).unwrap_err();
        assert!(matches!(err, Error::DegenerateDistribution(_)));
        assert!(received_signal(&moments(0.0, 0.0), L, &ReceiverSpec::default()).is_err());
    }

    #[test]
    fn large_variance_is_uniform() {
        for x in [0.0, 0.2e-3, 0.77e-3] {
            let p = wrapped_pdf(&moments(0.4e-3, 10.0 * L), L, x, 1e-12).unwrap();
            assert!((p * L - 1.0).abs() < 1e-9);
        }
        let r = received_signal(&moments(0.4e-3, 10.0 * L), L, &ReceiverSpec::default()).unwrap();
        assert!((r - 0.1).abs() < 1e-9);
    }

    #[test]
    fn narrow_peak_is_single_gaussian() {
        let sigma = L / 100.0;
        let p = wrapped_pdf(&moments(L / 2.0, sigma), L, L / 2.0, 1e-12).unwrap();
        let peak = 1.0 / (2.0 * PI * sigma * sigma).sqrt();
        assert!(((p - peak) / peak).abs() < 1e-12);
    }

    #[test]
    fn concentrated_mass_lands_in_window() {
        let rx = ReceiverSpec::default();
        let r = received_signal(&moments(rx.center + 7.0 * L, L / 1000.0), L, &rx).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn straddling_window_is_split() {
        let rx = ReceiverSpec::new(0.02e-3, 0.1e-3, L).unwrap();
        assert_eq!(rx.segments(L).len(), 2);
        let m = moments(0.0, 0.05e-3);
        let got = received_signal(&m, L, &rx).unwrap();
        let expected = fourier_mass(0.0, 0.05e-3, -0.03e-3, 0.07e-3);
        assert!((got - expected).abs() < 1e-12);
        assert!(rx.contains(0.99e-3, L) && rx.contains(0.06e-3, L) && !rx.contains(0.5e-3, L));
    }

    #[test]
    fn receiver_validation() {
        assert!(ReceiverSpec::new(L, 0.1e-3, L).is_err());
        assert!(ReceiverSpec::new(0.3e-3, 0.0, L).is_err());
        assert!(ReceiverSpec::new(0.3e-3, 2.0 * L, L).is_err());
        assert!(ReceiverSpec::new(0.0, L, L).is_ok());
    }

    #[test]
    fn flattening_is_monotone_in_sigma() {
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let sigma = 0.02e-3 * 1.15f64.powi(i);
            let wn = WrappedNormal::new(&moments(0.3e-3, sigma), L).unwrap();
            let vals: Vec<f64> = (0..500).map(|j| wn.pdf(j as f64 * L / 500.0)).collect();
            let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min);
            // Below ~1e-12 of the uniform density only rounding noise is left.
            assert!(
                spread <= prev * (1.0 + 1e-12) + 1e-12 / L,
                "i={i} sigma={sigma} spread={spread} prev={prev}"
            );
            prev = spread;
        }
    }

    #[test]
    fn steady_scenario_equals_its_reference() {
        use crate::bench::WaveformSpec;
        let spec = WaveformSpec::Steady {
            mean_velocity: 1e-4,
        };
        let s = Scenario::with_defaults("steady", spec).unwrap();
        let t: Vec<f64> = (1..=200).map(|k| k as f64 * 0.1).collect();
        let a = cir_timeseries(&s, &t).unwrap();
        let r = steady_flow_reference(&s, &t).unwrap();
        assert_eq!(a.values, r.values);
        assert_eq!(
            (a.label.as_str(), r.label.as_str()),
            ("analytical", "steady")
        );
    }

    #[test]
    fn default_signal_nears_equilibrium_by_twenty_seconds() {
        use crate::bench::WaveformSpec;
        let spec = WaveformSpec::Steady {
            mean_velocity: 1e-4,
        };
        let s = Scenario::with_defaults("steady", spec).unwrap();
        let v = cir_timeseries(&s, &[20.0]).unwrap().values[0];
        // Dual-series value for σ² = 2·D_1D·20 s, μ = 2 mm, window
        // [0.25, 0.35] mm: still 1.08 % short of equilibrium at 20 s.
        assert!((v - 0.989_195_473_468_552).abs() < 1e-12, "{v}");
        let late = cir_timeseries(&s, &[80.0]).unwrap().values[0];
        assert!((late - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn normalized_over_loop(mean in -5e-3f64..5e-2, sigma in 1e-5f64..3e-3) {
            let wn = WrappedNormal::new(&moments(mean, sigma), L).unwrap();
            let total = simpson(|x| wn.pdf(x), 0.0, L, 4000);
            prop_assert!((total - 1.0).abs() < 1e-9, "{}", total);
        }

        #[test]
        fn image_sum_matches_fourier_form(mean in 0.0f64..3e-2, sigma in 3e-5f64..2e-3, x in 0.0f64..1e-3) {
            let p = wrapped_pdf(&moments(mean, sigma), L, x, 1e-12).unwrap();
            let q = fourier_pdf(mean, sigma, x);
            prop_assert!((p - q).abs() <= 1e-9 * q.max(1.0 / L));
        }

        #[test]
        fn periodic_in_x(mean in 0.0f64..1e-2, sigma in 1e-5f64..2e-3, x in 0.0f64..1e-3) {
            let wn = WrappedNormal::new(&moments(mean, sigma), L).unwrap();
            prop_assert!((wn.pdf(x) - wn.pdf(x + L)).abs() <= 1e-9 * wn.pdf(x).max(1.0));
        }

        #[test]
        fn truncation_is_sound(mean in 0.0f64..1e-2, sigma in 1e-5f64..2e-3, x in 0.0f64..1e-3) {
            let wn = WrappedNormal::new(&moments(mean, sigma), L).unwrap();
            let wide = wn.with_tail_sigmas(2.0 * DEFAULT_TAIL_SIGMAS);
            prop_assert!((wn.pdf(x) - wide.pdf(x)).abs() * sigma < 1e-12);
        }

        #[test]
        fn window_mass_matches_quadrature(mean in 0.0f64..2e-2, sigma in 2e-5f64..2e-3) {
            let rx = ReceiverSpec::default();
            let wn = WrappedNormal::new(&moments(mean, sigma), L).unwrap();
            let (a, b) = (rx.center - rx.width / 2.0, rx.center + rx.width / 2.0);
            let quad = simpson(|x| wn.pdf(x), a, b, 2000);
            prop_assert!((wn.received(&rx) - quad).abs() < 1e-9);
        }
    }
}
