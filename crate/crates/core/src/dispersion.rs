//! Effective 1D transport coefficients and the time-variant moments of the
//! straight-duct Gaussian.
//!
//! With `u(t)` from [`crate::waveform`] and the quasi-steady Taylor
//! coefficient
//!
//! ```text
//! D_1D(t) = D + R² u(t)² / (48 D)
//! ```
//!
//! the mean and variance are `μ(t) = ∫₀ᵗ u` and `σ²(t) = 2 ∫₀ᵗ D_1D`. Both
//! integrals are trigonometric polynomials and are evaluated in closed form
//! here; [`moments_by_quadrature`] integrates the definitions numerically and
//! serves as the cross-check.

use serde::{Deserialize, Serialize};

use crate::quadrature::Simpson;
use crate::waveform::HarmonicSeries;
use crate::womersley::ChannelGeometry;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    /// Molecular diffusion coefficient `D`, m²/s.
    pub molecular_diffusion: f64,
}

impl TransportParams {
    pub fn new(molecular_diffusion: f64) -> Result<Self> {
        if !(molecular_diffusion.is_finite() && molecular_diffusion > 0.0) {
            return Err(Error::invalid(
                "molecular_diffusion",
                format!("must be finite and > 0, got {molecular_diffusion}"),
            ));
        }
        Ok(Self {
            molecular_diffusion,
        })
    }
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            molecular_diffusion: 5e-9,
        }
    }
}

/// Mean and variance of the axial Gaussian at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub t: f64,
    /// `μ(t)`, m. Unbounded: not reduced modulo the loop length.
    pub mean: f64,
    /// `σ²(t)`, m².
    pub variance: f64,
}

impl GaussianMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// `sin(φ + θ) − sin φ` without cancellation for small `θ`.
fn sin_increment(phase: f64, angle: f64) -> f64 {
    2.0 * (phase + 0.5 * angle).cos() * (0.5 * angle).sin()
}

/// Prefactor `R²/(48 D)` of the shear term.
fn shear_factor(geom: &ChannelGeometry, transport: &TransportParams) -> f64 {
    geom.radius * geom.radius / (48.0 * transport.molecular_diffusion)
}

/// `D_1D(t)`, m²/s.
pub fn effective_diffusion(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
    t: f64,
) -> f64 {
    let u = series.velocity(t);
    transport.molecular_diffusion + shear_factor(geom, transport) * u * u
}

/// Steady-flow Taylor–Aris coefficient `D + ū²R²/(48 D)`.
pub fn taylor_aris_diffusion(
    mean_velocity: f64,
    geom: &ChannelGeometry,
    transport: &TransportParams,
) -> f64 {
    transport.molecular_diffusion + shear_factor(geom, transport) * mean_velocity * mean_velocity
}

/// `μ(t) = ū [t + Σ M_n/(nω) (sin(nωt + φ_n) − sin φ_n)]`.
pub fn mean_displacement(series: &HarmonicSeries, t: f64) -> f64 {
    let omega = series.angular_frequency();
    let oscillating: f64 = series
        .harmonics()
        .iter()
        .map(|h| {
            let n = h.order as f64;
            h.amplitude * sin_increment(h.phase, series.angle(n, t)) / (n * omega)
        })
        .sum();
    series.mean_velocity() * (t + oscillating)
}

/// The bracket `t + 2Σ M_n S_n + Σ M_n² Q_n + 2Σ_{m<n} M_m M_n P_{m,n}`,
/// i.e. `∫₀ᵗ (u(s)/ū)² ds`.
fn squared_velocity_integral(series: &HarmonicSeries, t: f64) -> f64 {
    let omega = series.angular_frequency();
    let hs = series.harmonics();
    let mut linear = 0.0;
    let mut diagonal = 0.0;
    for h in hs {
        let n = h.order as f64;
        let s_n = sin_increment(h.phase, series.angle(n, t)) / (n * omega);
        let q_n =
            0.5 * t + sin_increment(2.0 * h.phase, series.angle(2.0 * n, t)) / (4.0 * n * omega);
        linear += h.amplitude * s_n;
        diagonal += h.amplitude * h.amplitude * q_n;
    }
    let mut cross = 0.0;
    for (i, hm) in hs.iter().enumerate() {
        for hn in &hs[i + 1..] {
            cross += hm.amplitude
                * hn.amplitude
                * cross_term(series, hm.order, hm.phase, hn.order, hn.phase, t);
        }
    }
    t + 2.0 * linear + diagonal + 2.0 * cross
}

/// `P_{m,n}(t) = ∫₀ᵗ cos(mωs + φ_m) cos(nωs + φ_n) ds` for `m ≠ n`.
fn cross_term(series: &HarmonicSeries, m: u32, phase_m: f64, n: u32, phase_n: f64, t: f64) -> f64 {
    let omega = series.angular_frequency();
    let diff = n as f64 - m as f64;
    let sum = n as f64 + m as f64;
    0.5 * (sin_increment(phase_n - phase_m, series.angle(diff, t)) / (diff * omega)
        + sin_increment(phase_n + phase_m, series.angle(sum, t)) / (sum * omega))
}

/// `σ²(t) = 2Dt + (R²ū²/24D) [t + 2Σ M_n S_n + Σ M_n² Q_n + 2Σ_{m<n} M_m M_n P_{m,n}]`.
pub fn variance(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
    t: f64,
) -> f64 {
    let u = series.mean_velocity();
    2.0 * transport.molecular_diffusion * t
        + 2.0 * shear_factor(geom, transport) * u * u * squared_velocity_integral(series, t)
}

/// Closed-form moments at `t`.
pub fn moments(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
    t: f64,
) -> GaussianMoments {
    GaussianMoments {
        t,
        mean: mean_displacement(series, t),
        variance: variance(series, geom, transport, t),
    }
}

fn quadrature_rule(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
) -> Simpson<2> {
    let peak: f64 = 1.0 + series.harmonics().iter().map(|h| h.amplitude).sum::<f64>();
    let u_scale = series.mean_velocity() * peak;
    let d_scale = 2.0 * taylor_aris_diffusion(u_scale, geom, transport);
    let max_order = series.max_order().max(1) as f64;
    Simpson {
        tolerance_density: [1e-12 * u_scale.max(f64::MIN_POSITIVE), 1e-12 * d_scale],
        // At least eight panels per period of the highest harmonic.
        max_panel_width: series.period() / (8.0 * max_order),
    }
}

fn integrand<'a>(
    series: &'a HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
) -> impl Fn(f64) -> [f64; 2] + 'a {
    let d = transport.molecular_diffusion;
    let shear = shear_factor(geom, transport);
    move |s| {
        let u = series.velocity(s);
        [u, 2.0 * (d + shear * u * u)]
    }
}

/// `μ(t)` and `σ²(t)` by adaptive Simpson quadrature of their defining
/// integrals.
pub fn moments_by_quadrature(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
    t: f64,
) -> Result<GaussianMoments> {
    let rule = quadrature_rule(series, geom, transport);
    let [mean, variance] = rule.integrate(&integrand(series, geom, transport), 0.0, t)?;
    Ok(GaussianMoments { t, mean, variance })
}

/// [`moments_by_quadrature`] at several times, integrating each interval
/// between consecutive (sorted) times once and accumulating.
pub fn moments_by_quadrature_many(
    series: &HarmonicSeries,
    geom: &ChannelGeometry,
    transport: &TransportParams,
    times: &[f64],
) -> Result<Vec<GaussianMoments>> {
    let rule = quadrature_rule(series, geom, transport);
    let f = integrand(series, geom, transport);
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut out = vec![
        GaussianMoments {
            t: 0.0,
            mean: 0.0,
            variance: 0.0
        };
        times.len()
    ];
    let (mut prev, mut acc) = (0.0, [0.0, 0.0]);
    for i in order {
        let t = times[i];
        let [dm, dv] = rule.integrate(&f, prev, t)?;
        acc = [acc[0] + dm, acc[1] + dv];
        prev = prev.max(t);
        out[i] = GaussianMoments {
            t,
            mean: acc[0],
            variance: acc[1],
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{make_physiological, make_pulsed, make_sinusoidal};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn defaults() -> (ChannelGeometry, TransportParams) {
        (ChannelGeometry::default(), TransportParams::default())
    }

    #[test]
    fn steady_variance_is_taylor_aris() {
        let (g, tr) = defaults();
        let s = HarmonicSeries::steady(1e-4).unwrap();
        let d_eff = taylor_aris_diffusion(1e-4, &g, &tr);
        assert!(rel(d_eff, 5.104166666666667e-9) < 1e-15);
        for t in [1e-3, 0.5, 3.0, 20.0] {
            assert!(rel(variance(&s, &g, &tr, t), 2.0 * d_eff * t) < 1e-12);
            assert_eq!(mean_displacement(&s, t), 1e-4 * t);
        }
    }

    #[test]
    fn effective_diffusion_values() {
        let (g, tr) = defaults();
        let steady = HarmonicSeries::steady(1e-4).unwrap();
        assert!(
            rel(
                effective_diffusion(&steady, &g, &tr, 2.0),
                5.104166666666667e-9
            ) < 1e-15
        );
        let doubled = HarmonicSeries::steady(2e-4).unwrap();
        let shear =
            |s: &HarmonicSeries| effective_diffusion(s, &g, &tr, 0.0) - tr.molecular_diffusion;
        assert!(rel(shear(&doubled), 4.0 * shear(&steady)) < 1e-12);
        // Sinusoid with A = 1 touches zero velocity at t = 3T/4.
        let s = make_sinusoidal(1e-4, 1.0, 0.5).unwrap();
        let d = effective_diffusion(&s, &g, &tr, 1.5);
        assert!((d - tr.molecular_diffusion).abs() < 1e-25);
    }

    #[test]
    fn moments_vanish_at_origin() {
        let (g, tr) = defaults();
        for s in [
            make_physiological(2e-4).unwrap(),
            make_pulsed(1e-4, 0.2, 0.5, 50).unwrap(),
        ] {
            assert_eq!(mean_displacement(&s, 0.0), 0.0);
            assert_eq!(variance(&s, &g, &tr, 0.0), 0.0);
            let q = moments_by_quadrature(&s, &g, &tr, 0.0).unwrap();
            assert_eq!((q.mean, q.variance), (0.0, 0.0));
        }
    }

    #[test]
    fn full_period_cancels_oscillation() {
        let s = make_sinusoidal(1e-4, 0.5, 0.5).unwrap();
        assert!(rel(mean_displacement(&s, 2.0), 2e-4) < 1e-14);
    }

    #[test]
    fn steady_quadrature_matches_hand_arithmetic() {
        let (g, tr) = defaults();
        let s = HarmonicSeries::steady(1e-4).unwrap();
        let q = moments_by_quadrature(&s, &g, &tr, 5.0).unwrap();
        assert!(rel(q.mean, 5e-4) < 1e-12);
        assert!(rel(q.variance, 2.0 * 5.104166666666667e-9 * 5.0) < 1e-12);
    }

    #[test]
    fn physiological_mean_against_quadrature() {
        let (g, tr) = defaults();
        let s = make_physiological(2e-4).unwrap();
        let q = moments_by_quadrature(&s, &g, &tr, 1.0).unwrap();
        assert!(rel(mean_displacement(&s, 1.0), q.mean) < 1e-10);
    }

    #[test]
    fn pulsed_variance_against_quadrature() {
        let (g, tr) = defaults();
        let s = make_pulsed(1e-4, 0.2, 0.5, 50).unwrap();
        let q = moments_by_quadrature(&s, &g, &tr, 3.3).unwrap();
        assert!(rel(variance(&s, &g, &tr, 3.3), q.variance) < 1e-9);
    }

    #[test]
    fn accumulated_quadrature_matches_single_shots() {
        let (g, tr) = defaults();
        let s = make_physiological(1e-4).unwrap();
        let times = [2.0, 0.1, 0.7];
        let many = moments_by_quadrature_many(&s, &g, &tr, &times).unwrap();
        for (m, &t) in many.iter().zip(&times) {
            let one = moments_by_quadrature(&s, &g, &tr, t).unwrap();
            assert_eq!(m.t, t);
            assert!(rel(m.mean, one.mean) < 1e-11);
            assert!(rel(m.variance, one.variance) < 1e-11);
        }
    }

    /// Half the full symmetric double sum over `m ≠ n`, instead of `m < n`.
    fn variance_symmetric(
        series: &HarmonicSeries,
        geom: &ChannelGeometry,
        transport: &TransportParams,
        t: f64,
    ) -> f64 {
        let omega = series.angular_frequency();
        let hs = series.harmonics();
        let mut linear = 0.0;
        let mut diagonal = 0.0;
        for h in hs {
            let n = h.order as f64;
            linear += h.amplitude * ((n * omega * t + h.phase).sin() - h.phase.sin()) / (n * omega);
            diagonal += h.amplitude
                * h.amplitude
                * (0.5 * t
                    + ((2.0 * n * omega * t + 2.0 * h.phase).sin() - (2.0 * h.phase).sin())
                        / (4.0 * n * omega));
        }
        let mut full = 0.0;
        for hm in hs {
            for hn in hs {
                if hm.order != hn.order {
                    full += hm.amplitude
                        * hn.amplitude
                        * cross_term(series, hm.order, hm.phase, hn.order, hn.phase, t);
                }
            }
        }
        let u = series.mean_velocity();
        let bracket = t + 2.0 * linear + diagonal + full;
        2.0 * transport.molecular_diffusion * t
            + geom.radius.powi(2) * u * u / (24.0 * transport.molecular_diffusion) * bracket
    }

    #[test]
    fn cross_terms_are_symmetric() {
        let (g, tr) = defaults();
        for s in [
            make_physiological(2e-4).unwrap(),
            make_pulsed(1e-4, 0.2, 0.5, 50).unwrap(),
        ] {
            for t in [0.37, 4.2, 17.9] {
                let a = variance(&s, &g, &tr, t);
                let b = variance_symmetric(&s, &g, &tr, t);
                assert!(rel(a, b) < 1e-12, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn variance_strictly_increasing() {
        let (g, tr) = defaults();
        let s = make_physiological(2e-4).unwrap();
        let mut prev = 0.0;
        for i in 1..=2000 {
            let v = variance(&s, &g, &tr, i as f64 * 0.01);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn long_times_use_reduced_angles() {
        let (g, tr) = defaults();
        let s = make_sinusoidal(1e-4, 0.5, 0.5).unwrap();
        // 10⁴ periods is 2·10⁴ s; beyond it the reduced path must agree with
        // the periodic structure of the closed form.
        let t = 2e4 + 0.3;
        let shifted = mean_displacement(&s, t) - 1e-4 * 2e4;
        assert!(rel(shifted, mean_displacement(&s, 0.3)) < 1e-8);
        let dv = variance(&s, &g, &tr, t) - variance(&s, &g, &tr, 2e4);
        assert!(rel(dv, variance(&s, &g, &tr, 0.3)) < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn derivatives_match_integrands(t in 0.01f64..20.0, which in 0usize..3) {
            let (g, tr) = defaults();
            let s = match which {
                0 => make_sinusoidal(1e-4, 0.5, 0.5).unwrap(),
                1 => make_pulsed(1e-4, 0.2, 0.5, 50).unwrap(),
                _ => make_physiological(2e-4).unwrap(),
            };
            let h = 1e-6;
            let dmu = (mean_displacement(&s, t + h) - mean_displacement(&s, t - h)) / (2.0 * h);
            let u = s.velocity(t);
            proptest::prop_assert!((dmu - u).abs() <= 1e-6 * u.abs().max(s.mean_velocity()));
            let dvar = (variance(&s, &g, &tr, t + h) - variance(&s, &g, &tr, t - h)) / (2.0 * h);
            let d = 2.0 * effective_diffusion(&s, &g, &tr, t);
            proptest::prop_assert!(rel(dvar, d) <= 1e-6);
        }
    }
}
