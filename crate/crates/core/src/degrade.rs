//! Turns ground-truth trajectories into realistic ADS-B observation streams:
//! irregular sampling, dropout gaps, and per-field Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{lerp_angle_deg, normalize_track_deg, GeoPoint};
use crate::sim::{StateSample, Trajectory};

/// A degraded observation. Same shape as a truth sample, but timestamps are
/// fractional and every field carries noise.
pub type AdsbPoint = StateSample;

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("invalid degrade config: {0}")]
    InvalidConfig(String),
}

/// Per-field standard deviations of the added zero-mean Gaussian noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldSigmas {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_ft: f64,
    pub tas_kt: f64,
    pub vs_fpm: f64,
    pub track_deg: f64,
}

impl Default for FieldSigmas {
    fn default() -> Self {
        Self {
            lat_deg: 3e-5,
            lon_deg: 3e-5,
            alt_ft: 25.0,
            tas_kt: 2.0,
            vs_fpm: 50.0,
            track_deg: 2.0,
        }
    }
}

/// Observation inter-arrival model: a deterministic floor of
/// `mean_s - jitter_s` plus an exponential tail with mean `jitter_s`.
/// `jitter_s = 0` gives a fixed sampling interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct InterArrival {
    pub mean_s: f64,
    pub jitter_s: f64,
}

impl Default for InterArrival {
    fn default() -> Self {
        Self { mean_s: 1.5, jitter_s: 0.5 }
    }
}

/// Dropout model: gaps arrive as a Poisson process and erase every
/// observation inside them. `forced` adds fixed gap windows (absolute
/// seconds), mainly for tests and repro scenarios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GapModel {
    pub rate_per_min: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub forced: Vec<(f64, f64)>,
}

impl Default for GapModel {
    fn default() -> Self {
        Self {
            rate_per_min: 1.0,
            min_duration_s: 5.0,
            max_duration_s: 20.0,
            forced: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeConfig {
    pub sigmas: FieldSigmas,
    pub inter_arrival: InterArrival,
    pub gaps: GapModel,
}

impl DegradeConfig {
    pub fn validate(&self) -> Result<(), DegradeError> {
        let s = &self.sigmas;
        for (name, v) in [
            ("lat_deg", s.lat_deg),
            ("lon_deg", s.lon_deg),
            ("alt_ft", s.alt_ft),
            ("tas_kt", s.tas_kt),
            ("vs_fpm", s.vs_fpm),
            ("track_deg", s.track_deg),
        ] {
            if !(v >= 0.0) {
                return Err(DegradeError::InvalidConfig(format!("sigma {name} = {v}")));
            }
        }
        let ia = self.inter_arrival;
        if !(ia.mean_s > 0.0) || !(ia.jitter_s >= 0.0) || ia.jitter_s > ia.mean_s {
            return Err(DegradeError::InvalidConfig(format!(
                "inter-arrival mean {} / jitter {}",
                ia.mean_s, ia.jitter_s
            )));
        }
        let g = &self.gaps;
        if !(g.rate_per_min >= 0.0) || !(g.min_duration_s >= 0.0) || g.max_duration_s < g.min_duration_s
        {
            return Err(DegradeError::InvalidConfig("gap model".into()));
        }
        Ok(())
    }
}

/// Linear interpolation of truth state at time `t` (track wrap-aware).
/// Assumes `t` within the trajectory's time range.
fn interpolate(samples: &[StateSample], t: f64) -> StateSample {
    let idx = samples.partition_point(|s| s.time_s <= t);
    if idx == 0 {
        return samples[0];
    }
    if idx >= samples.len() {
        return *samples.last().unwrap();
    }
    let a = &samples[idx - 1];
    let b = &samples[idx];
    let u = (t - a.time_s) / (b.time_s - a.time_s);
    StateSample {
        time_s: t,
        pos: GeoPoint {
            lat_deg: a.pos.lat_deg + u * (b.pos.lat_deg - a.pos.lat_deg),
            lon_deg: a.pos.lon_deg + u * (b.pos.lon_deg - a.pos.lon_deg),
        },
        alt_ft: a.alt_ft + u * (b.alt_ft - a.alt_ft),
        tas_kt: a.tas_kt + u * (b.tas_kt - a.tas_kt),
        vs_fpm: a.vs_fpm + u * (b.vs_fpm - a.vs_fpm),
        track_deg: lerp_angle_deg(a.track_deg, b.track_deg, u),
    }
}

/// Degrade a 1 Hz trajectory into an ADS-B style point stream.
/// Deterministic given (trajectory, config, seed).
pub fn degrade(
    traj: &Trajectory,
    cfg: &DegradeConfig,
    seed: u64,
) -> Result<Vec<AdsbPoint>, DegradeError> {
    cfg.validate()?;
    if traj.samples.is_empty() {
        return Err(DegradeError::EmptyTrajectory);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = traj.samples[0].time_s;
    let t_end = traj.samples.last().unwrap().time_s;

    // 1) observation times from accumulated inter-arrival draws
    let base = cfg.inter_arrival.mean_s - cfg.inter_arrival.jitter_s;
    let jitter = if cfg.inter_arrival.jitter_s > 0.0 {
        Some(Exp::new(1.0 / cfg.inter_arrival.jitter_s).expect("positive rate"))
    } else {
        None
    };
    let mut times = Vec::new();
    let mut t = t0;
    while t <= t_end + 1e-9 {
        times.push(t.min(t_end));
        let step = base + jitter.map_or(0.0, |d| d.sample(&mut rng));
        t += step.max(1e-3);
    }

    // 2) dropout windows erase whole stretches
    let mut gaps = cfg.gaps.forced.clone();
    if cfg.gaps.rate_per_min > 0.0 && t_end > t0 {
        let arrival = Exp::new(cfg.gaps.rate_per_min / 60.0).expect("positive rate");
        let duration = Uniform::new_inclusive(cfg.gaps.min_duration_s, cfg.gaps.max_duration_s)
            .expect("valid range");
        let mut g = t0 + arrival.sample(&mut rng);
        while g < t_end {
            let d = duration.sample(&mut rng);
            gaps.push((g, g + d));
            g += d + arrival.sample(&mut rng);
        }
    }
    let in_gap = |t: f64| gaps.iter().any(|(a, b)| t >= *a && t < *b);

    // 3) interpolate truth and add per-field noise
    let noise = |sigma: f64| Normal::new(0.0, sigma).expect("non-negative sigma");
    let n_lat = noise(cfg.sigmas.lat_deg);
    let n_lon = noise(cfg.sigmas.lon_deg);
    let n_alt = noise(cfg.sigmas.alt_ft);
    let n_tas = noise(cfg.sigmas.tas_kt);
    let n_vs = noise(cfg.sigmas.vs_fpm);
    let n_track = noise(cfg.sigmas.track_deg);

    let mut out = Vec::new();
    for &t in times.iter().filter(|&&t| !in_gap(t)) {
        let truth = interpolate(&traj.samples, t);
        out.push(AdsbPoint {
            time_s: t,
            pos: GeoPoint {
                lat_deg: truth.pos.lat_deg + n_lat.sample(&mut rng),
                lon_deg: truth.pos.lon_deg + n_lon.sample(&mut rng),
            },
            alt_ft: truth.alt_ft + n_alt.sample(&mut rng),
            tas_kt: truth.tas_kt + n_tas.sample(&mut rng),
            vs_fpm: truth.vs_fpm + n_vs.sample(&mut rng),
            track_deg: normalize_track_deg(truth.track_deg + n_track.sample(&mut rng)),
        });
    }
    Ok(out)
}
