//! Mission generation and 1 Hz point-mass flight simulation.
//!
//! Missions are random waypoint sequences between two airports: the bounding
//! rectangle of the pair is inflated, cut into a grid, and one vertex of each
//! grid cell crossed by the direct course is drawn as a waypoint with its own
//! altitude, speed, and flyby/flyover mode. The simulator then integrates a
//! minimal kinematic model (limited turn rate, limited acceleration,
//! constant-rate altitude capture) and records state once per second.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{
    haversine_distance, initial_bearing, normalize_track_deg, project_forward, wrap_angle_deg,
    GeoPoint,
};

/// Knots to meters per second.
pub const KT_TO_MPS: f64 = 0.514444;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("origin/destination {dist_m:.0} m apart, below the 2 km minimum")]
    DegenerateArea { dist_m: f64 },
    #[error("waypoint {index} unreachable: leg shorter than the turn diameter or capture never converged")]
    UnreachableWaypoint { index: usize },
    #[error("mission needs at least two waypoints")]
    TooFewWaypoints,
    #[error("waypoints {a} and {b} are {dist_m:.0} m apart, below the 1 km minimum")]
    WaypointsTooClose { a: usize, b: usize, dist_m: f64 },
    #[error("need at least two samples")]
    TooFewSamples,
    #[error(transparent)]
    Geo(#[from] crate::geo::GeoError),
}

/// One timestamped aircraft state. Ground-truth samples sit on integer
/// seconds; degraded observations reuse the same shape with fractional times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub time_s: f64,
    #[serde(flatten)]
    pub pos: GeoPoint,
    pub alt_ft: f64,
    pub tas_kt: f64,
    pub vs_fpm: f64,
    pub track_deg: f64,
}

/// Ordered 1 Hz ground-truth sequence for one flight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub flight_id: String,
    pub samples: Vec<StateSample>,
}

impl Trajectory {
    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.time_s - a.time_s,
            _ => 0.0,
        }
    }

    pub fn cumulative_track_change(&self) -> Result<f64, SimError> {
        cumulative_track_change(&self.samples)
    }
}

/// Sum of wrap-aware |track step| over consecutive samples, degrees.
pub fn cumulative_track_change(samples: &[StateSample]) -> Result<f64, SimError> {
    if samples.len() < 2 {
        return Err(SimError::TooFewSamples);
    }
    Ok(samples
        .windows(2)
        .map(|w| wrap_angle_deg(w[1].track_deg - w[0].track_deg).abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaypointMode {
    /// Turn onto the next leg before reaching the waypoint.
    Flyby,
    /// Cross directly over the waypoint, then turn.
    Flyover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pos: GeoPoint,
    pub alt_ft: f64,
    pub speed_kt: f64,
    pub mode: WaypointMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airport {
    pub name: String,
    pub pos: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub origin: Airport,
    pub destination: Airport,
    pub waypoints: Vec<Waypoint>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionGenConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Fraction of the origin-destination span added on each side of the
    /// bounding rectangle before gridding.
    pub margin_frac: f64,
    pub min_alt_ft: f64,
    pub max_alt_ft: f64,
    pub min_speed_kt: f64,
    pub max_speed_kt: f64,
    pub flyover_prob: f64,
    pub min_leg_km: f64,
}

impl Default for MissionGenConfig {
    fn default() -> Self {
        Self {
            grid_rows: 4,
            grid_cols: 4,
            margin_frac: 0.2,
            min_alt_ft: 2_000.0,
            max_alt_ft: 12_000.0,
            min_speed_kt: 70.0,
            max_speed_kt: 250.0,
            flyover_prob: 0.5,
            // above the turn diameter at the fastest default speed, so every
            // generated leg is flyable
            min_leg_km: 6.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicsConfig {
    /// Standard-rate turn by default.
    pub turn_rate_dps: f64,
    pub accel_kt_per_s: f64,
    pub capture_radius_m: f64,
    pub climb_vs_fpm: f64,
    pub descent_vs_fpm: f64,
    /// Safety bound on simulated duration, seconds.
    pub max_duration_s: u64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            turn_rate_dps: 3.0,
            accel_kt_per_s: 1.0,
            capture_radius_m: 200.0,
            climb_vs_fpm: 700.0,
            descent_vs_fpm: 700.0,
            max_duration_s: 4 * 3600,
        }
    }
}

/// The mission area: bounding rectangle of the airport pair, inflated on
/// every side by `margin_frac` of the larger span. Scaling both margins by
/// the larger span keeps the area genuinely two-dimensional when the pair is
/// nearly aligned with a meridian or parallel.
pub fn bounding_box(origin: GeoPoint, destination: GeoPoint, cfg: &MissionGenConfig) -> (f64, f64, f64, f64) {
    let lat_lo = origin.lat_deg.min(destination.lat_deg);
    let lat_hi = origin.lat_deg.max(destination.lat_deg);
    let lon_lo = origin.lon_deg.min(destination.lon_deg);
    let lon_hi = origin.lon_deg.max(destination.lon_deg);
    let margin = cfg.margin_frac * (lat_hi - lat_lo).max(lon_hi - lon_lo);
    (lat_lo - margin, lat_hi + margin, lon_lo - margin, lon_hi + margin)
}

/// Randomized waypoint mission between two airports, deterministic per seed.
pub fn generate_mission(
    origin: &Airport,
    destination: &Airport,
    cfg: &MissionGenConfig,
    seed: u64,
) -> Result<MissionSpec, SimError> {
    let dist_m = haversine_distance(origin.pos, destination.pos);
    if dist_m < 2_000.0 {
        return Err(SimError::DegenerateArea { dist_m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lat_lo, lat_hi, lon_lo, lon_hi) = bounding_box(origin.pos, destination.pos, cfg);

    let rows = cfg.grid_rows.max(1);
    let cols = cfg.grid_cols.max(1);
    let cell_lat = (lat_hi - lat_lo) / rows as f64;
    let cell_lon = (lon_hi - lon_lo) / cols as f64;

    // Cells crossed by the direct course, found by marching the straight
    // segment in lat/lon space.
    let cell_of = |pt: GeoPoint| -> (usize, usize) {
        let r = (((pt.lat_deg - lat_lo) / cell_lat) as usize).min(rows - 1);
        let c = (((pt.lon_deg - lon_lo) / cell_lon) as usize).min(cols - 1);
        (r, c)
    };
    let steps = 8 * (rows + cols);
    let mut crossed: Vec<(usize, usize)> = Vec::new();
    for i in 0..=steps {
        let u = i as f64 / steps as f64;
        let pt = GeoPoint {
            lat_deg: origin.pos.lat_deg + u * (destination.pos.lat_deg - origin.pos.lat_deg),
            lon_deg: origin.pos.lon_deg + u * (destination.pos.lon_deg - origin.pos.lon_deg),
        };
        let cell = cell_of(pt);
        if crossed.last() != Some(&cell) {
            crossed.push(cell);
        }
    }

    // One random vertex per crossed cell becomes a waypoint candidate.
    let mut positions: Vec<GeoPoint> = vec![origin.pos];
    for (r, c) in crossed {
        let corner = rng.random_range(0..4u8);
        let (dr, dc) = match corner {
            0 => (0.0, 0.0),
            1 => (0.0, 1.0),
            2 => (1.0, 0.0),
            _ => (1.0, 1.0),
        };
        positions.push(GeoPoint {
            lat_deg: lat_lo + (r as f64 + dr) * cell_lat,
            lon_deg: lon_lo + (c as f64 + dc) * cell_lon,
        });
    }
    positions.push(destination.pos);

    // Enforce the minimum leg length; the destination always survives.
    let min_leg_m = cfg.min_leg_km * 1_000.0;
    let mut kept: Vec<GeoPoint> = vec![positions[0]];
    for pt in positions.iter().skip(1).take(positions.len() - 2) {
        if haversine_distance(*kept.last().unwrap(), *pt) >= min_leg_m
            && haversine_distance(*pt, destination.pos) >= min_leg_m
        {
            kept.push(*pt);
        }
    }
    kept.push(destination.pos);

    let waypoints: Vec<Waypoint> = kept
        .into_iter()
        .map(|pos| Waypoint {
            pos,
            alt_ft: rng.random_range(cfg.min_alt_ft..=cfg.max_alt_ft),
            speed_kt: rng.random_range(cfg.min_speed_kt..=cfg.max_speed_kt),
            mode: if rng.random_range(0.0..1.0) < cfg.flyover_prob {
                WaypointMode::Flyover
            } else {
                WaypointMode::Flyby
            },
        })
        .collect();

    let spec = MissionSpec {
        origin: origin.clone(),
        destination: destination.clone(),
        waypoints,
        seed,
    };
    validate_mission(&spec)?;
    Ok(spec)
}

fn validate_mission(mission: &MissionSpec) -> Result<(), SimError> {
    if mission.waypoints.len() < 2 {
        return Err(SimError::TooFewWaypoints);
    }
    for (i, pair) in mission.waypoints.windows(2).enumerate() {
        let d = haversine_distance(pair[0].pos, pair[1].pos);
        if d < 1_000.0 {
            return Err(SimError::WaypointsTooClose {
                a: i,
                b: i + 1,
                dist_m: d,
            });
        }
    }
    Ok(())
}

/// Integrate the mission at 1 Hz. Deterministic: all randomness lives in the
/// mission itself.
pub fn simulate(mission: &MissionSpec, kin: &KinematicsConfig) -> Result<Trajectory, SimError> {
    const DT: f64 = 1.0;
    validate_mission(mission)?;
    let wps = &mission.waypoints;
    let omega = kin.turn_rate_dps.to_radians();

    // A leg shorter than the turn diameter at its commanded speed cannot be
    // captured by a limited-rate turn.
    for (i, pair) in wps.windows(2).enumerate() {
        let gs = pair[0].speed_kt.max(pair[1].speed_kt) * KT_TO_MPS;
        let diameter = 2.0 * gs / omega;
        if haversine_distance(pair[0].pos, pair[1].pos) < diameter {
            return Err(SimError::UnreachableWaypoint { index: i + 1 });
        }
    }

    let mut pos = wps[0].pos;
    let mut alt = wps[0].alt_ft;
    let mut tas = wps[0].speed_kt;
    let mut track = initial_bearing(pos, wps[1].pos)?;
    let mut target = 1usize;
    let mut samples: Vec<StateSample> = Vec::new();

    for tick in 0..=kin.max_duration_s {
        let t = tick as f64;

        // Advance the target waypoint; tight geometry may pass several.
        let mut captured_final = false;
        loop {
            let wp = &wps[target];
            let dist = haversine_distance(pos, wp.pos);
            if target + 1 == wps.len() {
                captured_final = dist <= kin.capture_radius_m;
                break;
            }
            let advance = match wp.mode {
                WaypointMode::Flyover => dist <= kin.capture_radius_m,
                WaypointMode::Flyby => {
                    let to_wp = initial_bearing(pos, wp.pos).unwrap_or(track);
                    let next = initial_bearing(wp.pos, wps[target + 1].pos)?;
                    let dpsi = wrap_angle_deg(next - to_wp).abs();
                    let r_turn = tas.max(1.0) * KT_TO_MPS / omega;
                    let lead = r_turn * (dpsi.to_radians() / 2.0).tan();
                    dist <= lead.max(kin.capture_radius_m)
                }
            };
            if advance {
                target += 1;
            } else {
                break;
            }
        }

        if captured_final {
            samples.push(StateSample {
                time_s: t,
                pos,
                alt_ft: alt,
                tas_kt: tas,
                vs_fpm: 0.0,
                track_deg: normalize_track_deg(track),
            });
            return Ok(Trajectory {
                flight_id: String::new(),
                samples,
            });
        }

        let wp = &wps[target];
        let desired = initial_bearing(pos, wp.pos).unwrap_or(track);
        let turn = wrap_angle_deg(desired - track).clamp(
            -kin.turn_rate_dps * DT,
            kin.turn_rate_dps * DT,
        );

        let dalt = wp.alt_ft - alt;
        let alt_step = dalt.clamp(
            -kin.descent_vs_fpm / 60.0 * DT,
            kin.climb_vs_fpm / 60.0 * DT,
        );
        let vs_fpm = alt_step * 60.0 / DT;

        // The recorded state carries the rates applied over [t, t+1).
        samples.push(StateSample {
            time_s: t,
            pos,
            alt_ft: alt,
            tas_kt: tas,
            vs_fpm,
            track_deg: normalize_track_deg(track),
        });

        // Exact arc step: heading sweeps `turn` over the second, so the chord
        // shortens by sinc(turn/2) and points halfway into the turn.
        let arc_len = tas * KT_TO_MPS * DT;
        let half = turn.to_radians() / 2.0;
        let (chord, chord_bearing) = if half.abs() < 1e-12 {
            (arc_len, track)
        } else {
            (arc_len * half.sin() / half, track + turn / 2.0)
        };
        pos = project_forward(pos, normalize_track_deg(chord_bearing), chord);
        track = normalize_track_deg(track + turn);
        alt += alt_step;
        tas += (wp.speed_kt - tas).clamp(-kin.accel_kt_per_s * DT, kin.accel_kt_per_s * DT);
    }

    Err(SimError::UnreachableWaypoint { index: target })
}
