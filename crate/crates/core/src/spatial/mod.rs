//! Building spatial model: levels, spaces with footprint polygons, placed
//! objects, and the rules mapping objects to their thermal area of impact.

mod floorplan;
mod step;
mod transform;

pub use floorplan::{parse_floorplan, serialize_floorplan};
pub use step::parse_ifc_subset;
pub use transform::CoordinateTransform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Point, Polygon};

/// Default window-band depth: 7 ft, the conservative end of the 2-7 ft range.
pub const DEFAULT_WINDOW_DEPTH_M: f64 = 2.13;
pub const DEFAULT_DIFFUSER_THROW_M: f64 = 2.0;
pub const DEFAULT_DIFFUSER_SPREAD_DEG: f64 = 90.0;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("dangling reference: {kind} '{id}' references missing {target}")]
    DanglingRef {
        kind: &'static str,
        id: String,
        target: String,
    },
    #[error("STEP syntax error at line {line}: {message}")]
    StepSyntax { line: usize, message: String },
    #[error("unresolved STEP reference #{0}")]
    UnresolvedRef(u64),
    #[error("point out of transform range: {0:.1} m from origin")]
    OutOfRange(f64),
    #[error("object '{0}' has an AoI rule but no AoI parameters")]
    MissingAoiParams(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// How a space is conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VentilationMode {
    /// Naturally ventilated.
    NV,
    /// Mechanically ventilated.
    MV,
    /// Conventional air conditioning.
    AC,
    /// Hybrid cooling: AC at an elevated setpoint plus ceiling fans.
    HC,
}

impl VentilationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VentilationMode::NV => "NV",
            VentilationMode::MV => "MV",
            VentilationMode::AC => "AC",
            VentilationMode::HC => "HC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    CeilingFan,
    VavDiffuser,
    Window,
    Door,
    SolidWall,
    CurtainWall,
    HandRail,
    AirCond,
    Chair,
    Desk,
    DiningTable,
    MultiTable,
    Sofa,
    Sensor,
}

impl ObjectKind {
    /// Graph node label for this kind, matching the census label set.
    pub fn node_label(&self) -> &'static str {
        match self {
            ObjectKind::CeilingFan => "Fan",
            ObjectKind::VavDiffuser => "VavDiffuser",
            ObjectKind::Window => "Window",
            ObjectKind::Door => "Door",
            ObjectKind::SolidWall => "SolidWall:Wall",
            ObjectKind::CurtainWall => "CurtainWall:Wall",
            ObjectKind::HandRail => "HandRail:Wall",
            ObjectKind::AirCond => "AirCond",
            ObjectKind::Chair => "Chair:Furniture",
            ObjectKind::Desk => "Desk:Furniture",
            ObjectKind::DiningTable => "DiningTable:Furniture",
            ObjectKind::MultiTable => "Furniture:MultiTable",
            ObjectKind::Sofa => "Furniture:Sofa",
            ObjectKind::Sensor => "Sensor",
        }
    }

    /// Kinds that cast a thermal area of impact around themselves.
    pub fn has_aoi_rule(&self) -> bool {
        matches!(
            self,
            ObjectKind::CeilingFan | ObjectKind::VavDiffuser | ObjectKind::Window
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub id: String,
    pub name: String,
    /// Floor number used in cell identifiers and location fixes.
    pub index: i32,
    pub elevation_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub id: String,
    pub name: String,
    pub level_id: String,
    /// Simple polygon in meters, local frame.
    pub footprint: Polygon,
    pub ventilation_mode: VentilationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoint_c: Option<f64>,
}

/// Kind-specific AoI parameters carried by an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AoiParams {
    Fan { radius_m: f64 },
    Diffuser {
        direction_deg: f64,
        throw_m: f64,
        spread_deg: f64,
    },
    Window {
        start: Point,
        end: Point,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth_m: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialObject {
    pub id: String,
    pub kind: ObjectKind,
    pub space_id: String,
    /// [x, y, z] meters; z is carried but all AoI geometry is 2D per level.
    pub position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aoi: Option<AoiParams>,
}

impl SpatialObject {
    pub fn xy(&self) -> Point {
        Point::new(self.position[0], self.position[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialModel {
    pub transform: CoordinateTransform,
    pub levels: Vec<Level>,
    pub spaces: Vec<Space>,
    pub objects: Vec<SpatialObject>,
}

impl SpatialModel {
    pub fn level(&self, id: &str) -> Option<&Level> {
        self.levels.iter().find(|l| l.id == id)
    }

    pub fn space(&self, id: &str) -> Option<&Space> {
        self.spaces.iter().find(|s| s.id == id)
    }

    /// Checks referential integrity and footprint geometry.
    pub fn validate(&self) -> Result<(), SpatialError> {
        for space in &self.spaces {
            if self.level(&space.level_id).is_none() {
                return Err(SpatialError::DanglingRef {
                    kind: "space",
                    id: space.id.clone(),
                    target: format!("level '{}'", space.level_id),
                });
            }
            if space.footprint.len() < 3 {
                return Err(SpatialError::Geometry(format!(
                    "space '{}' footprint has fewer than 3 vertices",
                    space.id
                )));
            }
            if !geometry::is_simple_polygon(&space.footprint) {
                return Err(SpatialError::Geometry(format!(
                    "space '{}' footprint is self-intersecting",
                    space.id
                )));
            }
            if geometry::area(&space.footprint) <= 0.0 {
                return Err(SpatialError::Geometry(format!(
                    "space '{}' footprint has zero area",
                    space.id
                )));
            }
        }
        for obj in &self.objects {
            if self.space(&obj.space_id).is_none() {
                return Err(SpatialError::DanglingRef {
                    kind: "object",
                    id: obj.id.clone(),
                    target: format!("space '{}'", obj.space_id),
                });
            }
        }
        Ok(())
    }
}

/// Thermal area of impact of a spatial object, as a 2D region.
#[derive(Debug, Clone, PartialEq)]
pub enum AoiRegion {
    /// Ceiling fan: disk of the fan radius around the fan axis.
    Disk { center: Point, radius: f64 },
    /// VAV diffuser: circular sector from the apex along a direction.
    Sector {
        apex: Point,
        direction_deg: f64,
        throw: f64,
        spread_deg: f64,
    },
    /// Window: strip extruded from the window segment by the band depth.
    /// Both sides of the segment are covered; cells only exist inside the
    /// space footprint, so the outdoor half is vacuously empty.
    Band { start: Point, end: Point, depth: f64 },
}

impl AoiRegion {
    /// Boundary-inclusive membership test.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            AoiRegion::Disk { center, radius } => p.distance(*center) <= *radius,
            AoiRegion::Sector {
                apex,
                direction_deg,
                throw,
                spread_deg,
            } => {
                let d = p.distance(*apex);
                if d > *throw {
                    return false;
                }
                if d < 1e-12 {
                    return true;
                }
                let angle = (p.y - apex.y).atan2(p.x - apex.x).to_degrees();
                let mut delta = (angle - direction_deg) % 360.0;
                if delta > 180.0 {
                    delta -= 360.0;
                } else if delta < -180.0 {
                    delta += 360.0;
                }
                delta.abs() <= spread_deg / 2.0 + 1e-12
            }
            AoiRegion::Band { start, end, depth } => {
                let (t, perp) = geometry::project_on_segment(p, *start, *end);
                (-1e-12..=1.0 + 1e-12).contains(&t) && perp <= *depth
            }
        }
    }
}

/// Resolves the AoI region of an object, or `None` for kinds with no rule.
pub fn aoi_region(obj: &SpatialObject) -> Result<Option<AoiRegion>, SpatialError> {
    if !obj.kind.has_aoi_rule() {
        return Ok(None);
    }
    let params = obj
        .aoi
        .as_ref()
        .ok_or_else(|| SpatialError::MissingAoiParams(obj.id.clone()))?;
    let region = match params {
        AoiParams::Fan { radius_m } => AoiRegion::Disk {
            center: obj.xy(),
            radius: *radius_m,
        },
        AoiParams::Diffuser {
            direction_deg,
            throw_m,
            spread_deg,
        } => AoiRegion::Sector {
            apex: obj.xy(),
            direction_deg: *direction_deg,
            throw: *throw_m,
            spread_deg: *spread_deg,
        },
        AoiParams::Window { start, end, depth_m } => AoiRegion::Band {
            start: *start,
            end: *end,
            depth: depth_m.unwrap_or(DEFAULT_WINDOW_DEPTH_M),
        },
    };
    Ok(Some(region))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fan(radius: f64) -> SpatialObject {
        SpatialObject {
            id: "FAN1".into(),
            kind: ObjectKind::CeilingFan,
            space_id: "S1".into(),
            position: [3.0, 3.0, 2.8],
            aoi: Some(AoiParams::Fan { radius_m: radius }),
        }
    }

    #[test]
    fn fan_region_is_disk_of_fan_radius() {
        let region = aoi_region(&fan(0.9)).unwrap().unwrap();
        assert_eq!(
            region,
            AoiRegion::Disk {
                center: Point::new(3.0, 3.0),
                radius: 0.9
            }
        );
        assert!(region.contains(Point::new(3.0, 3.9)));
        assert!(!region.contains(Point::new(3.0, 3.91)));
    }

    #[test]
    fn window_band_defaults_to_conservative_depth() {
        let obj = SpatialObject {
            id: "W1".into(),
            kind: ObjectKind::Window,
            space_id: "S1".into(),
            position: [5.0, 0.0, 1.5],
            aoi: Some(AoiParams::Window {
                start: Point::new(2.0, 0.0),
                end: Point::new(8.0, 0.0),
                depth_m: None,
            }),
        };
        match aoi_region(&obj).unwrap().unwrap() {
            AoiRegion::Band { depth, .. } => assert!((depth - 2.13).abs() < 1e-12),
            other => panic!("expected band, got {other:?}"),
        }
    }

    #[test]
    fn chair_has_no_region() {
        let obj = SpatialObject {
            id: "CH1".into(),
            kind: ObjectKind::Chair,
            space_id: "S1".into(),
            position: [1.0, 1.0, 0.4],
            aoi: None,
        };
        assert!(aoi_region(&obj).unwrap().is_none());
    }

    #[test]
    fn missing_params_is_an_error() {
        let mut obj = fan(0.9);
        obj.aoi = None;
        assert!(matches!(
            aoi_region(&obj),
            Err(SpatialError::MissingAoiParams(_))
        ));
    }

    #[test]
    fn membership_is_monotone_in_size_parameter() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let p = Point::new(rng.gen_range(-3.0..9.0), rng.gen_range(-3.0..9.0));
            let r = rng.gen_range(0.1..3.0);
            let disk_small = AoiRegion::Disk {
                center: Point::new(3.0, 3.0),
                radius: r,
            };
            let disk_big = AoiRegion::Disk {
                center: Point::new(3.0, 3.0),
                radius: r + rng.gen_range(0.0..2.0),
            };
            if disk_small.contains(p) {
                assert!(disk_big.contains(p));
            }
            let d = rng.gen_range(0.1..3.0);
            let band_small = AoiRegion::Band {
                start: Point::new(0.0, 0.0),
                end: Point::new(6.0, 0.0),
                depth: d,
            };
            let band_big = AoiRegion::Band {
                start: Point::new(0.0, 0.0),
                end: Point::new(6.0, 0.0),
                depth: d + rng.gen_range(0.0..2.0),
            };
            if band_small.contains(p) {
                assert!(band_big.contains(p));
            }
            let t = rng.gen_range(0.2..4.0);
            let sector_small = AoiRegion::Sector {
                apex: Point::new(3.0, 3.0),
                direction_deg: 45.0,
                throw: t,
                spread_deg: 90.0,
            };
            let sector_big = AoiRegion::Sector {
                apex: Point::new(3.0, 3.0),
                direction_deg: 45.0,
                throw: t + rng.gen_range(0.0..2.0),
                spread_deg: 90.0,
            };
            if sector_small.contains(p) {
                assert!(sector_big.contains(p));
            }
        }
    }

    #[test]
    fn sector_membership_by_angle() {
        let sector = AoiRegion::Sector {
            apex: Point::new(0.0, 0.0),
            direction_deg: 0.0,
            throw: 2.0,
            spread_deg: 90.0,
        };
        assert!(sector.contains(Point::new(1.0, 0.0)));
        assert!(sector.contains(Point::new(1.0, 0.9))); // ~42 deg
        assert!(!sector.contains(Point::new(0.0, 1.0))); // 90 deg off-axis
        assert!(!sector.contains(Point::new(3.0, 0.0))); // beyond throw
    }

    #[test]
    fn validate_catches_dangling_level() {
        let model = SpatialModel {
            transform: CoordinateTransform::new(1.3, 103.8, 0.0),
            levels: vec![],
            spaces: vec![Space {
                id: "S1".into(),
                name: "s".into(),
                level_id: "L9".into(),
                footprint: vec![
                    Point::new(0.0, 0.0),
                    Point::new(1.0, 0.0),
                    Point::new(1.0, 1.0),
                ],
                ventilation_mode: VentilationMode::NV,
                setpoint_c: None,
            }],
            objects: vec![],
        };
        assert!(matches!(
            model.validate(),
            Err(SpatialError::DanglingRef { .. })
        ));
    }
}
