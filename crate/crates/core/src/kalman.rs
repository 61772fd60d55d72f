//! Constant-velocity Kalman filter with optional RTS smoothing, in a local
//! ENU frame anchored at the first observation.
//!
//! State is [east m, north m, up ft, v_east m/s, v_north m/s, v_up ft/s].
//! Every observation contributes a full six-dimensional measurement: position
//! from latitude/longitude/altitude plus velocity pseudo-measurements derived
//! from true airspeed, track, and vertical speed. Query times ride along the
//! event timeline as predict-only steps, so the smoother hands back estimates
//! between observations for free.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::degrade::AdsbPoint;
use crate::geo::{from_enu, normalize_track_deg, to_enu, EnuVector, GeoPoint};
use crate::reconstruct::{Estimate, ReconstructError, ReconstructionResult, SourceFlag};
use crate::sim::{StateSample, KT_TO_MPS};

type Vec6 = SVector<f64, 6>;
type Mat6 = SMatrix<f64, 6, 6>;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanConfig {
    /// Horizontal white-acceleration spectral density, m^2/s^3.
    pub q_horiz_m2_s3: f64,
    /// Vertical white-acceleration spectral density, ft^2/s^3.
    pub q_vert_ft2_s3: f64,
    /// Horizontal position measurement sigma, m.
    pub r_pos_horiz_m: f64,
    /// Vertical position measurement sigma, ft.
    pub r_pos_vert_ft: f64,
    /// Horizontal velocity pseudo-measurement sigma, m/s.
    pub r_vel_horiz_mps: f64,
    /// Vertical velocity pseudo-measurement sigma, ft/s.
    pub r_vel_vert_fps: f64,
    /// Run the backward RTS pass over the window.
    pub smoother: bool,
}

impl Default for KalmanConfig {
    /// Measurement sigmas follow the default degradation noise: 3e-5 deg of
    /// latitude is ~3.3 m, 2 kt of speed plus 2 deg of track at typical
    /// speeds is ~2 m/s, 50 fpm is ~0.83 ft/s.
    fn default() -> Self {
        Self {
            q_horiz_m2_s3: 2.0,
            q_vert_ft2_s3: 4.0,
            r_pos_horiz_m: 3.5,
            r_pos_vert_ft: 25.0,
            r_vel_horiz_mps: 2.0,
            r_vel_vert_fps: 0.9,
            smoother: true,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<(), ReconstructError> {
        for (name, v) in [
            ("q_horiz_m2_s3", self.q_horiz_m2_s3),
            ("q_vert_ft2_s3", self.q_vert_ft2_s3),
            ("r_pos_horiz_m", self.r_pos_horiz_m),
            ("r_pos_vert_ft", self.r_pos_vert_ft),
            ("r_vel_horiz_mps", self.r_vel_horiz_mps),
            ("r_vel_vert_fps", self.r_vel_vert_fps),
        ] {
            if !(v > 0.0) {
                return Err(ReconstructError::InvalidConfig(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

fn transition(dt: f64) -> Mat6 {
    let mut f = Mat6::identity();
    f[(0, 3)] = dt;
    f[(1, 4)] = dt;
    f[(2, 5)] = dt;
    f
}

fn process_noise(dt: f64, q_h: f64, q_v: f64) -> Mat6 {
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let mut q = Mat6::zeros();
    for (axis, qa) in [(0, q_h), (1, q_h), (2, q_v)] {
        q[(axis, axis)] = qa * dt3 / 3.0;
        q[(axis, axis + 3)] = qa * dt2 / 2.0;
        q[(axis + 3, axis)] = qa * dt2 / 2.0;
        q[(axis + 3, axis + 3)] = qa * dt;
    }
    q
}

fn measurement(origin: GeoPoint, origin_alt: f64, p: &AdsbPoint) -> Result<Vec6, ReconstructError> {
    let enu = to_enu(origin, origin_alt, p.pos, p.alt_ft)?;
    let speed = p.tas_kt * KT_TO_MPS;
    let track = p.track_deg.to_radians();
    Ok(Vec6::from_column_slice(&[
        enu.east_m,
        enu.north_m,
        enu.up_ft,
        speed * track.sin(),
        speed * track.cos(),
        p.vs_fpm / 60.0,
    ]))
}

fn symmetrize(p: &mut Mat6) {
    *p = (*p + p.transpose()) * 0.5;
}

struct Step {
    x_pred: Vec6,
    p_pred: Mat6,
    x_filt: Vec6,
    p_filt: Mat6,
    /// Transition used to reach this step from the previous one.
    f: Mat6,
}

enum Event {
    Obs(usize),
    Query(usize),
}

/// Reconstruct the window state at `query_times` (sorted ascending).
pub fn reconstruct_kalman(
    points: &[AdsbPoint],
    query_times: &[f64],
    cfg: &KalmanConfig,
) -> Result<ReconstructionResult, ReconstructError> {
    cfg.validate()?;
    if points.len() < 2 {
        return Err(ReconstructError::NoObservations);
    }
    if query_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(ReconstructError::UnsortedQueryTimes);
    }
    if query_times.is_empty() {
        return Ok(ReconstructionResult::default());
    }

    let origin = points[0].pos;
    let origin_alt = points[0].alt_ft;

    // Merge observations and queries into one ordered timeline. An
    // observation at the same instant as a query goes first so the query
    // reads the updated state.
    let mut events: Vec<(f64, Event)> = Vec::with_capacity(points.len() + query_times.len());
    for (i, p) in points.iter().enumerate() {
        events.push((p.time_s, Event::Obs(i)));
    }
    for (i, &t) in query_times.iter().enumerate() {
        events.push((t, Event::Query(i)));
    }
    events.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| match (&a.1, &b.1) {
                (Event::Obs(_), Event::Query(_)) => std::cmp::Ordering::Less,
                (Event::Query(_), Event::Obs(_)) => std::cmp::Ordering::Greater,
                _ => std::cmp::Ordering::Equal,
            })
    });

    // Initialize from the first observation, carried back to the start of
    // the timeline with inflated covariance; the smoother firms this up.
    let z0 = measurement(origin, origin_alt, &points[0])?;
    let t_start = events[0].0;
    let dt0 = t_start - points[0].time_s; // <= 0 by construction
    let mut x = transition(dt0) * z0;
    let rp = cfg.r_pos_horiz_m * cfg.r_pos_horiz_m;
    let rpv = cfg.r_pos_vert_ft * cfg.r_pos_vert_ft;
    let rv = cfg.r_vel_horiz_mps * cfg.r_vel_horiz_mps;
    let rvv = cfg.r_vel_vert_fps * cfg.r_vel_vert_fps;
    let r = Mat6::from_diagonal(&Vec6::from_column_slice(&[rp, rp, rpv, rv, rv, rvv]));
    let mut p = Mat6::from_diagonal(&Vec6::from_column_slice(&[
        4.0 * rp,
        4.0 * rp,
        4.0 * rpv,
        4.0 * rv,
        4.0 * rv,
        4.0 * rvv,
    ])) + process_noise(dt0.abs().max(1e-6), cfg.q_horiz_m2_s3, cfg.q_vert_ft2_s3);

    let mut t_prev = t_start;
    let mut steps: Vec<Step> = Vec::with_capacity(events.len());
    for (t, ev) in &events {
        let dt = t - t_prev;
        let f = transition(dt);
        let x_pred = f * x;
        let mut p_pred =
            f * p * f.transpose() + process_noise(dt, cfg.q_horiz_m2_s3, cfg.q_vert_ft2_s3);
        symmetrize(&mut p_pred);

        let (x_filt, p_filt) = match ev {
            Event::Obs(i) => {
                // H = I: the measurement covers the full state
                let z = measurement(origin, origin_alt, &points[*i])?;
                let s = p_pred + r;
                let s_inv = s
                    .try_inverse()
                    .ok_or(ReconstructError::SingularCovariance)?;
                let k = p_pred * s_inv;
                let x_new = x_pred + k * (z - x_pred);
                let mut p_new = (Mat6::identity() - k) * p_pred;
                symmetrize(&mut p_new);
                (x_new, p_new)
            }
            Event::Query(_) => (x_pred, p_pred),
        };

        steps.push(Step {
            x_pred,
            p_pred,
            x_filt,
            p_filt,
            f,
        });
        x = x_filt;
        p = p_filt;
        t_prev = *t;
    }

    let n = steps.len();
    let mut xs: Vec<Vec6> = steps.iter().map(|s| s.x_filt).collect();
    if cfg.smoother {
        let mut ps: Vec<Mat6> = steps.iter().map(|s| s.p_filt).collect();
        for k in (0..n - 1).rev() {
            let p_pred_next = steps[k + 1].p_pred;
            let Some(p_pred_inv) = p_pred_next.try_inverse() else {
                return Err(ReconstructError::SingularCovariance);
            };
            let g = steps[k].p_filt * steps[k + 1].f.transpose() * p_pred_inv;
            xs[k] = steps[k].x_filt + g * (xs[k + 1] - steps[k + 1].x_pred);
            let mut pk = steps[k].p_filt + g * (ps[k + 1] - p_pred_next) * g.transpose();
            symmetrize(&mut pk);
            ps[k] = pk;
        }
    }

    let obs_span = (points[0].time_s, points[points.len() - 1].time_s);
    let mut by_query: Vec<(usize, f64, Vec6)> = Vec::with_capacity(query_times.len());
    for (idx, (t, ev)) in events.iter().enumerate() {
        if let Event::Query(qi) = ev {
            by_query.push((*qi, *t, xs[idx]));
        }
    }
    by_query.sort_by_key(|(qi, _, _)| *qi);

    let estimates = by_query
        .into_iter()
        .map(|(_, t, x)| {
            let (pos, alt_ft) = from_enu(
                origin,
                origin_alt,
                EnuVector {
                    east_m: x[0],
                    north_m: x[1],
                    up_ft: x[2],
                },
            );
            let (ve, vn, vu) = (x[3], x[4], x[5]);
            let speed = (ve * ve + vn * vn).sqrt();
            let track_deg = if speed > 1e-9 {
                normalize_track_deg(ve.atan2(vn).to_degrees())
            } else {
                0.0
            };
            let source = if t >= obs_span.0 - 1e-9 && t <= obs_span.1 + 1e-9 {
                SourceFlag::MeasuredSupport
            } else {
                SourceFlag::Extrapolated
            };
            Estimate {
                sample: StateSample {
                    time_s: t,
                    pos,
                    alt_ft,
                    tas_kt: speed / KT_TO_MPS,
                    vs_fpm: vu * 60.0,
                    track_deg,
                },
                source,
            }
        })
        .collect();

    Ok(ReconstructionResult {
        estimates,
        ..ReconstructionResult::default()
    })
}
