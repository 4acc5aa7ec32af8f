//! Particle-based Monte Carlo simulation of advection–diffusion in a
//! cylindrical closed loop.
//!
//! Particles start at `x = 0`, uniformly spread over the cross section. Each
//! step advects them with the Womersley field at their pre-step radius and
//! adds independent `N(0, 2DΔt)` increments on all three Cartesian axes.
//! The wall reflects specularly; the axial coordinate wraps modulo `L`.

mod field;
mod rng;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{Scenario, TimeSeries};
use crate::cir::ReceiverSpec;
use crate::waveform::HarmonicSeries;
use crate::womersley::{ChannelGeometry, FluidProperties, WomersleyField};
use crate::{Error, Result};

pub use field::{RadialTable, StepVelocity, TABLE_POINTS};
pub use rng::{StreamRng, INIT_STREAM};

/// Diffusive increments redrawn this many times before a particle that
/// overshoots the wall by more than `2R` is clamped onto it.
pub const MAX_RESAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbsConfig {
    pub particles: usize,
    /// `Δt`, s.
    pub timestep: f64,
    /// Total simulated time, s.
    pub duration: f64,
    pub seed: u64,
    /// Spacing of receiver counts, s.
    pub sample_interval: f64,
    /// Worker threads; 0 uses the global rayon pool. Never affects results.
    #[serde(default)]
    pub workers: usize,
}

impl Default for PbsConfig {
    /// Full-scale setup: 5·10⁵ particles, Δt = 0.1 ms, 20 s.
    fn default() -> Self {
        Self {
            particles: 500_000,
            timestep: 1e-4,
            duration: 20.0,
            seed: 1,
            sample_interval: 0.01,
            workers: 0,
        }
    }
}

impl PbsConfig {
    /// Reduced setup that runs in minutes: 5·10⁴ particles, Δt = 0.5 ms, 10 s.
    pub fn desk() -> Self {
        Self {
            particles: 50_000,
            timestep: 5e-4,
            duration: 10.0,
            ..Self::default()
        }
    }

    /// Rejects unusable settings; returns advisory warnings otherwise.
    pub fn validate(&self, geom: &ChannelGeometry, diffusion: f64) -> Result<Vec<String>> {
        if self.particles == 0 {
            return Err(Error::invalid("pbs.particles", "must be >= 1"));
        }
        if !(self.timestep.is_finite() && self.timestep > 0.0) {
            return Err(Error::invalid(
                "pbs.timestep",
                format!("must be > 0, got {}", self.timestep),
            ));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval >= self.timestep) {
            return Err(Error::invalid(
                "pbs.sample_interval",
                format!(
                    "must be >= timestep {}, got {}",
                    self.timestep, self.sample_interval
                ),
            ));
        }
        if !(self.duration.is_finite() && self.duration >= self.sample_interval) {
            return Err(Error::invalid(
                "pbs.duration",
                format!(
                    "must be >= sample_interval {}, got {}",
                    self.sample_interval, self.duration
                ),
            ));
        }
        let mut warnings = Vec::new();
        let step = (2.0 * diffusion * self.timestep).sqrt();
        if step > geom.radius / 10.0 {
            warnings.push(format!(
                "diffusive step {step:.3e} m exceeds R/10 = {:.3e} m; wall reflections lose accuracy",
                geom.radius / 10.0
            ));
        }
        Ok(warnings)
    }

    /// `k · sample_interval` for `k = 1, 2, …` up to the duration.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.duration / self.sample_interval + 1e-9).floor() as usize;
        (1..=n).map(|k| k as f64 * self.sample_interval).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    /// Axial position in `[0, L)`.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Net number of times the particle crossed `x = L` (negative for
    /// backward crossings), so `x + laps·L` is the unwrapped displacement.
    pub laps: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<Particle>,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn unwrapped_axial(&self, loop_length: f64) -> impl Iterator<Item = f64> + '_ {
        self.particles
            .iter()
            .map(move |p| p.x + p.laps as f64 * loop_length)
    }

    /// Mean and (population) variance of the unwrapped axial displacement.
    pub fn axial_moments(&self, loop_length: f64) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = self.unwrapped_axial(loop_length).sum::<f64>() / n;
        let var = self
            .unwrapped_axial(loop_length)
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / n;
        (mean, var)
    }

    /// Largest `r/R` and whether every `x` lies in `[0, L)`.
    pub fn containment(&self, geom: &ChannelGeometry) -> (f64, bool) {
        let max_r2 = self
            .particles
            .iter()
            .map(|p| p.y * p.y + p.z * p.z)
            .fold(0.0, f64::max);
        let axial_ok = self
            .particles
            .iter()
            .all(|p| p.x >= 0.0 && p.x < geom.loop_length);
        ((max_r2 / (geom.radius * geom.radius)).sqrt(), axial_ok)
    }

    /// Debug dump: `particle_id,x,y,z`.
    pub fn write_positions_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "particle_id,x,y,z").map_err(io)?;
        for (i, p) in self.particles.iter().enumerate() {
            writeln!(out, "{i},{:.16e},{:.16e},{:.16e}", p.x, p.y, p.z).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// All particles at `x = 0`, uniform over the disc of radius `R`.
pub fn init_particles(particles: usize, geom: &ChannelGeometry, seed: u64) -> ParticleEnsemble {
    let particles = (0..particles as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(seed, i, INIT_STREAM);
            let r = geom.radius * rng.uniform().sqrt();
            let theta = std::f64::consts::TAU * rng.uniform();
            Particle {
                x: 0.0,
                y: r * theta.cos(),
                z: r * theta.sin(),
                laps: 0,
            }
        })
        .collect();
    ParticleEnsemble { particles }
}

/// Specular reflection at the wall: a point at radius `r > R` moves to
/// `2R − r` along the same ray. `None` if it is still outside (overshoot
/// beyond `3R`).
#[inline]
pub fn reflect_wall(y: f64, z: f64, radius: f64) -> Option<(f64, f64)> {
    let r2 = y * y + z * z;
    if r2 <= radius * radius {
        return Some((y, z));
    }
    let r = r2.sqrt();
    let reflected = 2.0 * radius - r;
    if reflected.abs() > radius {
        return None;
    }
    let scale = reflected / r;
    let (ny, nz) = (y * scale, z * scale);
    // Rounding can leave the image a hair outside.
    if ny * ny + nz * nz > radius * radius {
        let fix = radius / ny.hypot(nz);
        return Some((ny * fix, nz * fix));
    }
    Some((ny, nz))
}

/// Parameters shared by every particle update.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub radius: f64,
    pub loop_length: f64,
    pub timestep: f64,
    pub diffusion: f64,
    pub seed: u64,
}

#[inline]
fn advance(
    p: &mut Particle,
    index: u64,
    step: u64,
    velocity: &StepVelocity,
    params: &StepParams,
) -> u64 {
    let inv_r2 = 1.0 / (params.radius * params.radius);
    let sd = (2.0 * params.diffusion * params.timestep).sqrt();
    let mut rng = StreamRng::new(params.seed, index, step);

    let u = velocity.velocity((p.y * p.y + p.z * p.z) * inv_r2);
    let dx: f64 = StandardNormal.sample(&mut rng);
    let x = p.x + u * params.timestep + sd * dx;

    let mut clamped = 0;
    for attempt in 0..=MAX_RESAMPLES {
        let dy: f64 = StandardNormal.sample(&mut rng);
        let dz: f64 = StandardNormal.sample(&mut rng);
        let (cy, cz) = (p.y + sd * dy, p.z + sd * dz);
        if let Some((ny, nz)) = reflect_wall(cy, cz, params.radius) {
            p.y = ny;
            p.z = nz;
            break;
        }
        if attempt == MAX_RESAMPLES {
            let fix = params.radius / cy.hypot(cz);
            p.y = cy * fix;
            p.z = cz * fix;
            clamped = 1;
        }
    }

    let (wrapped, laps) = wrap_axial(x, params.loop_length);
    p.x = wrapped;
    p.laps += laps;
    clamped
}

/// `x mod L` in `[0, L)` together with the number of whole loops removed.
#[inline]
pub fn wrap_axial(x: f64, loop_length: f64) -> (f64, i64) {
    let laps = (x / loop_length).floor();
    let mut wrapped = x - laps * loop_length;
    let mut laps = laps as i64;
    if wrapped >= loop_length {
        wrapped -= loop_length;
        laps += 1;
    }
    (wrapped.max(0.0), laps)
}

/// One explicit Euler–Maruyama step of every particle. `step` indexes the
/// random streams; returns how many particles had to be clamped to the wall.
pub fn step(
    ensemble: &mut ParticleEnsemble,
    velocity: &StepVelocity,
    params: &StepParams,
    step: u64,
) -> u64 {
    ensemble
        .particles
        .par_iter_mut()
        .enumerate()
        .map(|(i, p)| advance(p, i as u64, step, velocity, params))
        .sum()
}

/// Number of particles whose wrapped axial position lies in the window.
pub fn count_receiver(
    ensemble: &ParticleEnsemble,
    receiver: &ReceiverSpec,
    loop_length: f64,
) -> usize {
    ensemble
        .particles
        .par_iter()
        .filter(|p| receiver.contains(p.x, loop_length))
        .count()
}

/// Stepping state of one simulation run.
#[derive(Debug, Clone)]
pub struct Simulator {
    table: RadialTable,
    params: StepParams,
    ensemble: ParticleEnsemble,
    steps_taken: u64,
    clamped: u64,
}

impl Simulator {
    /// Builds a simulator directly from physical parameters. Unlike
    /// [`run_pbs`] this performs no regime check, so degenerate set-ups such
    /// as zero mean flow are allowed.
    pub fn new(
        series: &HarmonicSeries,
        geom: &ChannelGeometry,
        fluid: &FluidProperties,
        diffusion: f64,
        config: &PbsConfig,
    ) -> Result<Self> {
        config.validate(geom, diffusion)?;
        let table = RadialTable::new(WomersleyField::new(series, geom, fluid)?)?;
        let params = StepParams {
            radius: geom.radius,
            loop_length: geom.loop_length,
            timestep: config.timestep,
            diffusion,
            seed: config.seed,
        };
        let ensemble = init_particles(config.particles, geom, config.seed);
        Ok(Self {
            table,
            params,
            ensemble,
            steps_taken: 0,
            clamped: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.params.timestep
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> ParticleEnsemble {
        self.ensemble
    }

    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn advance(&mut self, steps: u64) {
        for _ in 0..steps {
            let velocity = self.table.at(self.time());
            self.clamped += step(
                &mut self.ensemble,
                &velocity,
                &self.params,
                self.steps_taken,
            );
            self.steps_taken += 1;
        }
    }
}

/// Run record written next to the PBS output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbsManifest {
    pub seed: u64,
    pub particles: usize,
    pub timestep: f64,
    pub duration: f64,
    pub sample_interval: f64,
    pub samples: usize,
    /// Smallest and largest ensemble size seen at the samples.
    pub particles_min: usize,
    pub particles_max: usize,
    pub max_relative_radius: f64,
    pub containment_violations: usize,
    /// Particles clamped onto the wall after exhausting resamples.
    pub wall_clamps: u64,
    pub warnings: Vec<String>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PbsRun {
    pub series: TimeSeries,
    pub counts: Vec<usize>,
    pub manifest: PbsManifest,
    /// Particle positions at the last sample.
    pub ensemble: ParticleEnsemble,
}

/// Full protocol on the configured sample grid.
pub fn run_pbs(scenario: &Scenario, config: &PbsConfig) -> Result<PbsRun> {
    simulate(scenario, config, &config.sample_times())
}

/// Full protocol, counting at `sample_times` (each a multiple of the step).
pub fn simulate(scenario: &Scenario, config: &PbsConfig, sample_times: &[f64]) -> Result<PbsRun> {
    if scenario.regime.has_failure() {
        return Err(Error::Regime(scenario.regime.failures().join("; ")));
    }
    let geom = scenario.geometry;
    let warnings = config.validate(&geom, scenario.transport.molecular_diffusion)?;
    let sample_steps = sample_steps(sample_times, config.timestep)?;

    let run = || -> Result<PbsRun> {
        let started = Instant::now();
        let mut warnings = warnings.clone();
        let mut sim = Simulator::new(
            &scenario.waveform,
            &geom,
            &scenario.fluid,
            scenario.transport.molecular_diffusion,
            config,
        )?;
        let l = geom.loop_length;
        let p_inf = scenario.receiver.equilibrium_fraction(l);
        let mut counts = Vec::with_capacity(sample_steps.len());
        let (mut pmin, mut pmax) = (usize::MAX, 0);
        let mut max_radius: f64 = 0.0;
        let mut violations = 0;
        for &target in &sample_steps {
            sim.advance(target - sim.steps_taken());
            let ensemble = sim.ensemble();
            pmin = pmin.min(ensemble.len());
            pmax = pmax.max(ensemble.len());
            let (radius, axial_ok) = ensemble.containment(&geom);
            max_radius = max_radius.max(radius);
            if radius > 1.0 || !axial_ok {
                violations += 1;
            }
            counts.push(count_receiver(ensemble, &scenario.receiver, l));
        }
        let n = config.particles as f64;
        let values = counts.iter().map(|&c| c as f64 / n / p_inf).collect();
        let series = TimeSeries::new("pbs", sample_times.to_vec(), values)?;
        if sim.clamped() > 0 {
            warnings.push(format!("{} particles clamped onto the wall", sim.clamped()));
        }
        let manifest = PbsManifest {
            seed: config.seed,
            particles: config.particles,
            timestep: config.timestep,
            duration: config.duration,
            sample_interval: config.sample_interval,
            samples: counts.len(),
            particles_min: pmin,
            particles_max: pmax,
            max_relative_radius: max_radius,
            containment_violations: violations,
            wall_clamps: sim.clamped(),
            warnings,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        };
        Ok(PbsRun {
            series,
            counts,
            manifest,
            ensemble: sim.into_ensemble(),
        })
    };

    if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::invalid("pbs.workers", e.to_string()))?
            .install(run)
    } else {
        run()
    }
}

fn sample_steps(times: &[f64], timestep: f64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut prev = 0;
    for &t in times {
        let exact = t / timestep;
        let k = exact.round();
        if !(k >= 1.0) || (exact - k).abs() > 1e-6 * k.max(1.0) {
            return Err(Error::invalid(
                "t_grid",
                format!("sample time {t} s is not a positive multiple of Δt = {timestep} s"),
            ));
        }
        let k = k as u64;
        if k <= prev {
            return Err(Error::invalid(
                "t_grid",
                "sample times must be strictly increasing",
            ));
        }
        out.push(k);
        prev = k;
    }
    Ok(out)
}
