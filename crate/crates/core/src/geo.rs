//! Spherical-earth geodesy primitives.
//!
//! Everything here assumes a sphere of radius [`EARTH_RADIUS_M`]; truth and
//! predictions share the model, so there is no datum to disagree about.
//! Altitude stays in feet throughout the crate and only rides along in the
//! local ENU frame as the `up` component.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius in meters used by all great-circle math.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Maximum origin separation (degrees, per component) accepted by the local
/// tangent-plane projection.
pub const ENU_MAX_SEPARATION_DEG: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    InvalidLatitude(f64),
    #[error("longitude {0} outside [-180, 180)")]
    InvalidLongitude(f64),
    #[error("coincident points: bearing undefined")]
    CoincidentPoints,
    #[error("point is {sep_deg:.4} deg from origin, beyond the {max_deg} deg local-frame bound")]
    OutOfLocalRange { sep_deg: f64, max_deg: f64 },
}

/// A position on the sphere, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    /// Validating constructor: lat in [-90, 90], lon in [-180, 180).
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !lat_deg.is_finite() || !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoError::InvalidLatitude(lat_deg));
        }
        if !lon_deg.is_finite() || !(-180.0..180.0).contains(&lon_deg) {
            return Err(GeoError::InvalidLongitude(lon_deg));
        }
        Ok(Self { lat_deg, lon_deg })
    }
}

/// Local tangent-plane offset from an origin. East/north in meters, up in
/// feet to match the 1 ft altitude precision used everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnuVector {
    pub east_m: f64,
    pub north_m: f64,
    pub up_ft: f64,
}

/// Wrap an angle difference into [-180, 180).
pub fn wrap_angle_deg(d: f64) -> f64 {
    let mut x = d % 360.0;
    if x < -180.0 {
        x += 360.0;
    } else if x >= 180.0 {
        x -= 360.0;
    }
    x
}

/// Normalize a track angle into [0, 360).
pub fn normalize_track_deg(t: f64) -> f64 {
    let mut x = t % 360.0;
    if x < 0.0 {
        x += 360.0;
    }
    // -1e-18 % 360 == -0.0; keep the canonical zero
    if x == 360.0 || x == 0.0 {
        x = 0.0;
    }
    x
}

/// Interpolate between two angles along the shorter arc, result in [0, 360).
pub fn lerp_angle_deg(a: f64, b: f64, u: f64) -> f64 {
    normalize_track_deg(a + wrap_angle_deg(b - a) * u)
}

/// Great-circle distance in meters (haversine form, stable at small angles).
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat_deg.to_radians();
    let phi2 = b.lat_deg.to_radians();
    let dphi = (b.lat_deg - a.lat_deg).to_radians();
    let dlam = wrap_angle_deg(b.lon_deg - a.lon_deg).to_radians();

    let s1 = (dphi / 2.0).sin();
    let s2 = (dlam / 2.0).sin();
    let h = s1 * s1 + phi1.cos() * phi2.cos() * s2 * s2;
    let central = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());
    EARTH_RADIUS_M * central
}

/// Forward azimuth from `a` to `b`, degrees in [0, 360).
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    if a == b {
        return Err(GeoError::CoincidentPoints);
    }
    let phi1 = a.lat_deg.to_radians();
    let phi2 = b.lat_deg.to_radians();
    let dlam = wrap_angle_deg(b.lon_deg - a.lon_deg).to_radians();

    let y = dlam.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlam.cos();
    Ok(normalize_track_deg(y.atan2(x).to_degrees()))
}

/// Destination point after travelling `distance_m` along the great circle
/// leaving `a` with the given initial bearing. `project_forward(a, b, 0) == a`.
pub fn project_forward(a: GeoPoint, bearing_deg: f64, distance_m: f64) -> GeoPoint {
    debug_assert!(distance_m >= 0.0);
    if distance_m == 0.0 {
        return a;
    }
    let delta = distance_m / EARTH_RADIUS_M;
    let theta = bearing_deg.to_radians();
    let phi1 = a.lat_deg.to_radians();
    let lam1 = a.lon_deg.to_radians();

    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
    let lam2 = lam1
        + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());

    let mut lon = lam2.to_degrees() % 360.0;
    if lon >= 180.0 {
        lon -= 360.0;
    } else if lon < -180.0 {
        lon += 360.0;
    }
    GeoPoint {
        lat_deg: phi2.to_degrees(),
        lon_deg: lon,
    }
}

/// Equirectangular projection of `p` into the local ENU frame at `origin`.
///
/// Valid while `p` stays within [`ENU_MAX_SEPARATION_DEG`] of the origin in
/// both latitude and longitude.
pub fn to_enu(
    origin: GeoPoint,
    origin_alt_ft: f64,
    p: GeoPoint,
    alt_ft: f64,
) -> Result<EnuVector, GeoError> {
    let dlat = p.lat_deg - origin.lat_deg;
    let dlon = wrap_angle_deg(p.lon_deg - origin.lon_deg);
    let sep = dlat.abs().max(dlon.abs());
    if sep > ENU_MAX_SEPARATION_DEG {
        return Err(GeoError::OutOfLocalRange {
            sep_deg: sep,
            max_deg: ENU_MAX_SEPARATION_DEG,
        });
    }
    Ok(EnuVector {
        east_m: EARTH_RADIUS_M * dlon.to_radians() * origin.lat_deg.to_radians().cos(),
        north_m: EARTH_RADIUS_M * dlat.to_radians(),
        up_ft: alt_ft - origin_alt_ft,
    })
}

/// Inverse of [`to_enu`]: position and altitude recovered from a local offset.
pub fn from_enu(origin: GeoPoint, origin_alt_ft: f64, v: EnuVector) -> (GeoPoint, f64) {
    let lat = origin.lat_deg + (v.north_m / EARTH_RADIUS_M).to_degrees();
    let mut lon = origin.lon_deg
        + (v.east_m / (EARTH_RADIUS_M * origin.lat_deg.to_radians().cos())).to_degrees();
    lon = wrap_angle_deg(lon - 0.0);
    (
        GeoPoint {
            lat_deg: lat,
            lon_deg: lon,
        },
        origin_alt_ft + v.up_ft,
    )
}
