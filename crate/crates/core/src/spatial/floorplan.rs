//! Canonical floor-plan JSON ingestion.
//!
//! Schema (lengths in meters, angles in degrees):
//!
//! ```json
//! {
//!   "transform": { "origin_lat": 1.2975, "origin_lon": 103.7767, "rotation_deg": 0.0 },
//!   "levels":  [ { "id": "L3", "name": "Level 3", "index": 3, "elevation_m": 10.5 } ],
//!   "spaces":  [ { "id": "S1", "name": "Studio", "level_id": "L3",
//!                  "ventilation_mode": "HC", "setpoint_c": 27.0,
//!                  "footprint": [[0,0],[16,0],[16,12],[0,12]] } ],
//!   "objects": [ { "id": "FAN1", "kind": "ceiling_fan", "space_id": "S1",
//!                  "position": [5.0,5.0,2.8],
//!                  "aoi": { "type": "fan", "radius_m": 0.9 } } ]
//! }
//! ```
//!
//! Unknown fields are ignored with a warning; missing required fields and
//! referential or geometric violations are errors.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use super::{
    AoiParams, CoordinateTransform, Level, ObjectKind, Space, SpatialError, SpatialModel,
    SpatialObject, VentilationMode,
};
use crate::geometry::Point;

#[derive(Deserialize)]
struct RawTransform {
    origin_lat: f64,
    origin_lon: f64,
    #[serde(default)]
    rotation_deg: f64,
    #[serde(flatten)]
    unknown: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawLevel {
    id: String,
    name: String,
    index: i32,
    #[serde(default)]
    elevation_m: f64,
    #[serde(flatten)]
    unknown: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawSpace {
    id: String,
    name: String,
    level_id: String,
    footprint: Vec<[f64; 2]>,
    ventilation_mode: VentilationMode,
    #[serde(default)]
    setpoint_c: Option<f64>,
    #[serde(flatten)]
    unknown: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawObject {
    id: String,
    kind: ObjectKind,
    space_id: String,
    position: [f64; 3],
    #[serde(default)]
    aoi: Option<AoiParams>,
    #[serde(flatten)]
    unknown: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawModel {
    transform: RawTransform,
    levels: Vec<RawLevel>,
    spaces: Vec<RawSpace>,
    objects: Vec<RawObject>,
    #[serde(flatten)]
    unknown: BTreeMap<String, Value>,
}

fn warn_unknown(warnings: &mut Vec<String>, scope: &str, unknown: &BTreeMap<String, Value>) {
    // Derived transform scale fields may legitimately round-trip back in.
    for key in unknown.keys() {
        if key == "m_per_deg_lat" || key == "m_per_deg_lon" {
            continue;
        }
        warnings.push(format!("ignored unknown field '{key}' in {scope}"));
    }
}

/// Parses a floor-plan document and validates every model invariant.
///
/// Returns the model plus warnings for ignored unknown fields.
pub fn parse_floorplan(bytes: &[u8]) -> Result<(SpatialModel, Vec<String>), SpatialError> {
    let raw: RawModel = serde_json::from_slice(bytes)
        .map_err(|e| SpatialError::Schema(e.to_string()))?;
    let mut warnings = Vec::new();

    warn_unknown(&mut warnings, "document root", &raw.unknown);
    warn_unknown(&mut warnings, "transform", &raw.transform.unknown);

    let transform = CoordinateTransform::new(
        raw.transform.origin_lat,
        raw.transform.origin_lon,
        raw.transform.rotation_deg,
    );

    let mut levels = Vec::with_capacity(raw.levels.len());
    for l in &raw.levels {
        warn_unknown(&mut warnings, &format!("level '{}'", l.id), &l.unknown);
        levels.push(Level {
            id: l.id.clone(),
            name: l.name.clone(),
            index: l.index,
            elevation_m: l.elevation_m,
        });
    }

    let mut spaces = Vec::with_capacity(raw.spaces.len());
    for s in &raw.spaces {
        warn_unknown(&mut warnings, &format!("space '{}'", s.id), &s.unknown);
        spaces.push(Space {
            id: s.id.clone(),
            name: s.name.clone(),
            level_id: s.level_id.clone(),
            footprint: s.footprint.iter().map(|&[x, y]| Point::new(x, y)).collect(),
            ventilation_mode: s.ventilation_mode,
            setpoint_c: s.setpoint_c,
        });
    }

    let mut objects = Vec::with_capacity(raw.objects.len());
    for o in &raw.objects {
        warn_unknown(&mut warnings, &format!("object '{}'", o.id), &o.unknown);
        if o.kind.has_aoi_rule() && o.aoi.is_none() {
            return Err(SpatialError::Schema(format!(
                "object '{}' of kind {:?} requires aoi parameters",
                o.id, o.kind
            )));
        }
        objects.push(SpatialObject {
            id: o.id.clone(),
            kind: o.kind,
            space_id: o.space_id.clone(),
            position: o.position,
            aoi: o.aoi.clone(),
        });
    }

    let model = SpatialModel {
        transform,
        levels,
        spaces,
        objects,
    };
    model.validate()?;
    Ok((model, warnings))
}

/// Serializes a model back to the canonical document form.
pub fn serialize_floorplan(model: &SpatialModel) -> String {
    // serde_json writes f64 in shortest round-trip form, so
    // parse(serialize(m)) == m field-for-field.
    serde_json::to_string_pretty(model).expect("model serialization cannot fail")
}
