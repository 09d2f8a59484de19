//! Local <-> WGS84 conversion.
//!
//! The building model lives in a level-local metric frame while occupant
//! fixes arrive in global coordinates. The conversion is an equirectangular
//! approximation plus a rotation about a configured origin, which is accurate
//! to well under a millimeter at building scale.

use serde::{Deserialize, Serialize};

use super::SpatialError;
use crate::geometry::Point;

/// Meters per degree of latitude (spherical approximation).
const METERS_PER_DEG_LAT: f64 = 111_320.0;
/// Valid radius of the small-angle regime around the origin.
const MAX_RANGE_M: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateTransform {
    pub origin_lat: f64,
    pub origin_lon: f64,
    /// Rotation of the local frame relative to east/north, degrees CCW.
    pub rotation_deg: f64,
    /// Meters-per-degree factors, precomputed from the origin latitude.
    pub m_per_deg_lat: f64,
    pub m_per_deg_lon: f64,
}

impl CoordinateTransform {
    pub fn new(origin_lat: f64, origin_lon: f64, rotation_deg: f64) -> Self {
        CoordinateTransform {
            origin_lat,
            origin_lon,
            rotation_deg,
            m_per_deg_lat: METERS_PER_DEG_LAT,
            m_per_deg_lon: METERS_PER_DEG_LAT * origin_lat.to_radians().cos(),
        }
    }

    /// Local metric point -> (lat, lon).
    pub fn local_to_global(&self, p: Point) -> Result<(f64, f64), SpatialError> {
        let r = p.x.hypot(p.y);
        if r >= MAX_RANGE_M {
            return Err(SpatialError::OutOfRange(r));
        }
        let theta = self.rotation_deg.to_radians();
        let (sin_t, cos_t) = theta.sin_cos();
        let east = p.x * cos_t - p.y * sin_t;
        let north = p.x * sin_t + p.y * cos_t;
        Ok((
            self.origin_lat + north / self.m_per_deg_lat,
            self.origin_lon + east / self.m_per_deg_lon,
        ))
    }

    /// (lat, lon) -> local metric point; exact inverse of `local_to_global`.
    pub fn global_to_local(&self, lat: f64, lon: f64) -> Result<Point, SpatialError> {
        let north = (lat - self.origin_lat) * self.m_per_deg_lat;
        let east = (lon - self.origin_lon) * self.m_per_deg_lon;
        let r = east.hypot(north);
        if r >= MAX_RANGE_M {
            return Err(SpatialError::OutOfRange(r));
        }
        let theta = self.rotation_deg.to_radians();
        let (sin_t, cos_t) = theta.sin_cos();
        Ok(Point::new(east * cos_t + north * sin_t, -east * sin_t + north * cos_t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn origin_is_a_fixed_point() {
        let t = CoordinateTransform::new(1.2975, 103.7767, 33.0);
        let (lat, lon) = t.local_to_global(Point::new(0.0, 0.0)).unwrap();
        assert_eq!((lat, lon), (1.2975, 103.7767));
    }

    #[test]
    fn eastward_meter_shift_matches_geodesic_formula() {
        // Moving 111_320 * delta meters east must shift longitude by
        // approximately delta / cos(lat) degrees.
        let lat0 = 1.2975_f64;
        let t = CoordinateTransform::new(lat0, 103.7767, 0.0);
        let delta = 0.001;
        let (lat, lon) = t
            .local_to_global(Point::new(111_320.0 * delta * 0.01, 0.0))
            .unwrap();
        let expected = 0.01 * delta / lat0.to_radians().cos();
        assert!((lon - 103.7767 - expected).abs() < 1e-12);
        assert!((lat - lat0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_error_below_micron() {
        let t = CoordinateTransform::new(1.2975, 103.7767, 17.5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut max_err: f64 = 0.0;
        for _ in 0..1000 {
            let p = Point::new(rng.gen_range(-900.0..900.0), rng.gen_range(-900.0..900.0));
            let (lat, lon) = t.local_to_global(p).unwrap();
            let back = t.global_to_local(lat, lon).unwrap();
            max_err = max_err.max(p.distance(back));
        }
        assert!(max_err < 1e-6, "max round-trip error {max_err}");
    }

    #[test]
    fn out_of_range_rejected() {
        let t = CoordinateTransform::new(1.2975, 103.7767, 0.0);
        assert!(matches!(
            t.local_to_global(Point::new(20_000.0, 0.0)),
            Err(SpatialError::OutOfRange(_))
        ));
    }
}
