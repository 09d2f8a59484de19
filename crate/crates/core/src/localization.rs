//! Indoor localization: BLE RSSI ranging, trilateration, location-stream
//! cleaning, and snapping fixes to grid cells.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::graph::{knn_query, GraphError, KnnIndex};
use crate::spatial::{CoordinateTransform, SpatialError};

/// Accepted accuracy range of the localization service, meters.
pub const ACCURACY_MIN_M: f64 = 0.25;
pub const ACCURACY_MAX_M: f64 = 5.0;

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("trilateration needs at least 3 observations, got {0}")]
    Underdetermined(usize),
    #[error("beacon positions are collinear; position is not identifiable")]
    CollinearBeacons,
    #[error("no cells indexed on level {0}")]
    NoCellOnLevel(i32),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("CSV error: {0}")]
    Csv(String),
}

/// One RSSI reading of a fixed beacon.
#[derive(Debug, Clone)]
pub struct BeaconObservation {
    pub beacon_id: String,
    pub position: Point,
    /// dBm, expected in [-120, 0].
    pub rssi: f64,
    pub timestamp: i64,
}

/// A time-stamped occupant position in global coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationFix {
    pub user_id: String,
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
    pub elevation: f64,
    pub floor: i32,
    pub accuracy: f64,
}

/// Log-distance path loss: d = 10^((p0 - rssi) / (10 n)).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathLossModel {
    /// Reference power at 1 m, dBm.
    pub p0_dbm: f64,
    pub exponent: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        // Free-space defaults; site-specific values are configurable.
        PathLossModel {
            p0_dbm: -59.0,
            exponent: 2.0,
        }
    }
}

pub fn rssi_to_distance(rssi: f64, model: &PathLossModel) -> f64 {
    10f64.powf((model.p0_dbm - rssi) / (10.0 * model.exponent))
}

/// Inverse of `rssi_to_distance`; used when synthesizing observations.
pub fn distance_to_rssi(distance: f64, model: &PathLossModel) -> f64 {
    model.p0_dbm - 10.0 * model.exponent * distance.log10()
}

/// Least-squares position from >=3 ranged beacons.
///
/// A linearized closed-form solution seeds Gauss-Newton iteration on the
/// range residuals sum((|x - b_i| - d_i)^2). Returns the position and the RMS
/// range error, which doubles as the accuracy estimate of the fix.
pub fn trilaterate(
    observations: &[BeaconObservation],
    model: &PathLossModel,
) -> Result<(Point, f64), LocalizationError> {
    if observations.len() < 3 {
        return Err(LocalizationError::Underdetermined(observations.len()));
    }
    let beacons: Vec<Point> = observations.iter().map(|o| o.position).collect();
    let distances: Vec<f64> = observations
        .iter()
        .map(|o| rssi_to_distance(o.rssi, model))
        .collect();
    let position = solve_ranges(&beacons, &distances)?;
    let rms = (beacons
        .iter()
        .zip(&distances)
        .map(|(b, d)| {
            let err = position.distance(*b) - d;
            err * err
        })
        .sum::<f64>()
        / beacons.len() as f64)
        .sqrt();
    Ok((position, rms))
}

fn solve_ranges(beacons: &[Point], distances: &[f64]) -> Result<Point, LocalizationError> {
    // Linearize against the first beacon:
    // 2(xi - x0) x + 2(yi - y0) y = d0^2 - di^2 + |bi|^2 - |b0|^2.
    let b0 = beacons[0];
    let d0 = distances[0];
    let mut ata = [[0.0f64; 2]; 2];
    let mut atb = [0.0f64; 2];
    for i in 1..beacons.len() {
        let bi = beacons[i];
        let a = [2.0 * (bi.x - b0.x), 2.0 * (bi.y - b0.y)];
        let rhs = d0 * d0 - distances[i] * distances[i] + bi.x * bi.x + bi.y * bi.y
            - b0.x * b0.x
            - b0.y * b0.y;
        for r in 0..2 {
            for c in 0..2 {
                ata[r][c] += a[r] * a[c];
            }
            atb[r] += a[r] * rhs;
        }
    }
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    let scale = (ata[0][0] + ata[1][1]).max(1e-12);
    if det.abs() < 1e-9 * scale * scale {
        return Err(LocalizationError::CollinearBeacons);
    }
    let mut x = Point::new(
        (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det,
        (atb[1] * ata[0][0] - atb[0] * ata[1][0]) / det,
    );

    // Gauss-Newton on the nonlinear range residuals.
    for _ in 0..25 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for (b, d) in beacons.iter().zip(distances) {
            let range = x.distance(*b).max(1e-12);
            let residual = range - d;
            let jac = [(x.x - b.x) / range, (x.y - b.y) / range];
            for r in 0..2 {
                for c in 0..2 {
                    jtj[r][c] += jac[r] * jac[c];
                }
                jtr[r] += jac[r] * residual;
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-15 {
            break;
        }
        let step = [
            (jtr[0] * jtj[1][1] - jtr[1] * jtj[0][1]) / det,
            (jtr[1] * jtj[0][0] - jtr[0] * jtj[1][0]) / det,
        ];
        x = Point::new(x.x - step[0], x.y - step[1]);
        if step[0].hypot(step[1]) < 1e-12 {
            break;
        }
    }
    Ok(x)
}

/// Turns a group of simultaneous observations into a location fix. The RMS
/// range error becomes the accuracy, clamped to the accepted range.
pub fn fix_from_observations(
    user_id: &str,
    floor: i32,
    elevation: f64,
    observations: &[BeaconObservation],
    model: &PathLossModel,
    transform: &CoordinateTransform,
) -> Result<LocationFix, LocalizationError> {
    let (position, rms) = trilaterate(observations, model)?;
    let (lat, lon) = transform.local_to_global(position)?;
    Ok(LocationFix {
        user_id: user_id.to_string(),
        timestamp: observations.iter().map(|o| o.timestamp).max().unwrap_or(0),
        lat,
        lon,
        elevation,
        floor,
        accuracy: rms.clamp(ACCURACY_MIN_M, ACCURACY_MAX_M),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct PreprocessConfig {
    pub max_accuracy_m: f64,
    pub min_displacement_m: f64,
    pub min_interval_s: i64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            max_accuracy_m: ACCURACY_MAX_M,
            min_displacement_m: 0.5,
            min_interval_s: 60,
        }
    }
}

fn displacement_m(a: &LocationFix, b: &LocationFix) -> f64 {
    let m_lat = 111_320.0;
    let m_lon = m_lat * a.lat.to_radians().cos();
    ((b.lat - a.lat) * m_lat).hypot((b.lon - a.lon) * m_lon)
}

/// Cleans a high-rate location stream.
///
/// Drops fixes above the accuracy cap, then collapses runs of fixes that
/// moved less than `min_displacement_m` and arrived within `min_interval_s`
/// of the last kept fix. Per user the output is a subsequence of the input
/// with strictly increasing timestamps; the pass is idempotent.
pub fn preprocess_stream(fixes: &[LocationFix], cfg: &PreprocessConfig) -> Vec<LocationFix> {
    let mut last_kept: std::collections::BTreeMap<&str, &LocationFix> =
        std::collections::BTreeMap::new();
    let mut out = Vec::new();
    for fix in fixes {
        if fix.accuracy > cfg.max_accuracy_m {
            continue;
        }
        if let Some(prev) = last_kept.get(fix.user_id.as_str()) {
            if fix.timestamp <= prev.timestamp {
                continue;
            }
            let dt = fix.timestamp - prev.timestamp;
            let moved = displacement_m(prev, fix);
            if dt < cfg.min_interval_s && moved < cfg.min_displacement_m {
                continue;
            }
        }
        last_kept.insert(fix.user_id.as_str(), fix);
        out.push(fix.clone());
    }
    out
}

/// Snaps one fix to its nearest cell on the indexed level (k = 1).
pub fn snap_to_cell(
    fix: &LocationFix,
    transform: &CoordinateTransform,
    index: &KnnIndex,
) -> Result<String, LocalizationError> {
    let local = transform.global_to_local(fix.lat, fix.lon)?;
    match knn_query(index, local, 1) {
        Ok(hits) if !hits.is_empty() => Ok(hits.into_iter().next().unwrap().0),
        Ok(_) | Err(GraphError::EmptyIndex) => Err(LocalizationError::NoCellOnLevel(fix.floor)),
        Err(e) => Err(LocalizationError::Csv(e.to_string())),
    }
}

/// Fix ingest CSV: `user_id,timestamp,lat,lon,elevation,floor,accuracy`.
pub fn read_fixes_csv<R: Read>(reader: R) -> Result<Vec<LocationFix>, LocalizationError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| LocalizationError::Csv(e.to_string()))?
        .clone();
    let expected = ["user_id", "timestamp", "lat", "lon", "elevation", "floor", "accuracy"];
    if headers.iter().ne(expected) {
        return Err(LocalizationError::Csv(format!(
            "expected header {expected:?}, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut fixes = Vec::new();
    for (i, row) in csv_reader.deserialize::<LocationFix>().enumerate() {
        fixes.push(row.map_err(|e| LocalizationError::Csv(format!("row {}: {e}", i + 2)))?);
    }
    Ok(fixes)
}

pub fn write_fixes_csv<W: Write>(writer: W, fixes: &[LocationFix]) -> Result<(), LocalizationError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for fix in fixes {
        csv_writer
            .serialize(fix)
            .map_err(|e| LocalizationError::Csv(e.to_string()))?;
    }
    csv_writer
        .flush()
        .map_err(|e| LocalizationError::Csv(e.to_string()))?;
    Ok(())
}

/// Beacon observation CSV: `beacon_id,x,y,rssi,timestamp`.
pub fn read_beacon_observations_csv<R: Read>(
    reader: R,
) -> Result<Vec<BeaconObservation>, LocalizationError> {
    #[derive(Deserialize)]
    struct Row {
        beacon_id: String,
        x: f64,
        y: f64,
        rssi: f64,
        timestamp: i64,
    }
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut observations = Vec::new();
    for (i, row) in csv_reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| LocalizationError::Csv(format!("row {}: {e}", i + 2)))?;
        if !(-120.0..=0.0).contains(&row.rssi) {
            return Err(LocalizationError::Csv(format!(
                "row {}: rssi {} outside [-120, 0]",
                i + 2,
                row.rssi
            )));
        }
        observations.push(BeaconObservation {
            beacon_id: row.beacon_id,
            position: Point::new(row.x, row.y),
            rssi: row.rssi,
            timestamp: row.timestamp,
        });
    }
    Ok(observations)
}
