//! Synthetic-scene harness.
//!
//! Generates desk-scale floor plans with a known micro-climate ground truth,
//! simulates occupants voting on thermal preference, and compares the
//! embedding feature set against conventional baselines under the same
//! validation protocol. Ground-truth comfort is driven by AoI membership
//! (fan zones feel cooler, window bands warmer, ventilation modes shift the
//! baseline), which is exactly the structure the spatially blind baselines
//! cannot see.

mod eval;

pub use eval::{
    evaluate, run_baselines, simulate_occupants, BaselineResult, EvaluateConfig,
    EvaluationArtifacts, EvaluationReport, GroundTruthVote, SimConfig, SimOutput,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::embedding::EmbeddingError;
use crate::geometry::Point;
use crate::graph::{discretize, GraphError};
use crate::localization::LocalizationError;
use crate::rng::derive_seed;
use crate::spatial::{
    aoi_region, AoiParams, AoiRegion, CoordinateTransform, Level, ObjectKind, Space, SpatialError,
    SpatialModel, SpatialObject, VentilationMode,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scene config error: {0}")]
    Config(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
}

/// Object counts and dimensions of one generated space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub name: String,
    pub width_m: f64,
    pub depth_m: f64,
    pub ventilation_mode: VentilationMode,
    #[serde(default)]
    pub setpoint_c: Option<f64>,
    #[serde(default)]
    pub fans: usize,
    #[serde(default)]
    pub windows: usize,
    #[serde(default)]
    pub diffusers: usize,
    #[serde(default)]
    pub ac_units: usize,
    #[serde(default)]
    pub chairs: usize,
    #[serde(default)]
    pub desks: usize,
    #[serde(default)]
    pub dining_tables: usize,
    #[serde(default)]
    pub multi_tables: usize,
    #[serde(default)]
    pub sofas: usize,
    #[serde(default)]
    pub solid_walls: usize,
    #[serde(default)]
    pub curtain_walls: usize,
    #[serde(default)]
    pub hand_rails: usize,
    #[serde(default)]
    pub doors: usize,
    #[serde(default)]
    pub sensors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub seed: u64,
    pub cell_size: f64,
    pub level_index: i32,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub rotation_deg: f64,
    pub fan_radius_m: f64,
    pub window_depth_m: f64,
    pub diffuser_throw_m: f64,
    pub diffuser_spread_deg: f64,
    /// Gap between neighboring spaces along the x axis.
    pub spacing_m: f64,
    pub spaces: Vec<SpaceSpec>,
}

impl SceneConfig {
    fn base(seed: u64) -> Self {
        SceneConfig {
            // TOML integers are i64, so scene seeds stay within 63 bits.
            seed: seed & (i64::MAX as u64),
            cell_size: 1.0,
            level_index: 3,
            origin_lat: 1.2975,
            origin_lon: 103.7767,
            rotation_deg: 0.0,
            fan_radius_m: 1.5,
            window_depth_m: 2.13,
            diffuser_throw_m: 2.0,
            diffuser_spread_deg: 90.0,
            spacing_m: 2.0,
            spaces: Vec::new(),
        }
    }

    /// Default heterogeneous floor: five spaces, two naturally ventilated
    /// and three hybrid cooled, with 9 ceiling fans and 15 AC units.
    pub fn heterogeneous(seed: u64) -> Self {
        let mut cfg = Self::base(seed);
        cfg.fan_radius_m = 2.3;
        cfg.diffuser_throw_m = 3.0;
        cfg.diffuser_spread_deg = 110.0;
        let hc = |name: &str| SpaceSpec {
            name: name.to_string(),
            width_m: 13.0,
            depth_m: 9.0,
            ventilation_mode: VentilationMode::HC,
            setpoint_c: Some(27.0),
            fans: 3,
            windows: 2,
            diffusers: 2,
            ac_units: 5,
            chairs: 6,
            desks: 4,
            dining_tables: 1,
            multi_tables: 0,
            sofas: 0,
            solid_walls: 2,
            curtain_walls: 1,
            hand_rails: 1,
            doors: 1,
            sensors: 1,
        };
        let nv = |name: &str| SpaceSpec {
            name: name.to_string(),
            width_m: 13.0,
            depth_m: 9.0,
            ventilation_mode: VentilationMode::NV,
            setpoint_c: None,
            fans: 0,
            windows: 3,
            diffusers: 0,
            ac_units: 0,
            chairs: 5,
            desks: 2,
            dining_tables: 1,
            multi_tables: 1,
            sofas: 1,
            solid_walls: 2,
            curtain_walls: 2,
            hand_rails: 2,
            doors: 1,
            sensors: 1,
        };
        cfg.spaces = vec![
            hc("Studio A"),
            nv("Terrace East"),
            hc("Studio B"),
            nv("Plaza"),
            hc("Studio C"),
        ];
        cfg
    }

    /// Negative control: same floor plate, single ventilation mode, no
    /// AoI-casting objects. The comfort field is flat within the mode.
    pub fn homogeneous(seed: u64) -> Self {
        let mut cfg = Self::heterogeneous(seed);
        for space in &mut cfg.spaces {
            space.ventilation_mode = VentilationMode::HC;
            space.setpoint_c = Some(27.0);
            space.fans = 0;
            space.windows = 0;
            space.diffusers = 0;
        }
        cfg
    }

    /// Case-study-scale replica: the object-label composition of the field
    /// study floor and a cell count of the same order (five spaces summing
    /// to 4,647 square cells at 1 m).
    pub fn case_study_replica(seed: u64) -> Self {
        let mut cfg = Self::base(seed);
        let sizes = [(32.0, 30.0), (31.0, 30.0), (31.0, 30.0), (32.0, 29.0), (29.0, 31.0)];
        let modes = [
            VentilationMode::HC,
            VentilationMode::NV,
            VentilationMode::HC,
            VentilationMode::NV,
            VentilationMode::HC,
        ];
        let fans = [3, 0, 3, 0, 3];
        let ac = [5, 0, 5, 0, 5];
        let chairs = [18, 17, 17, 17, 17];
        let dining = [5, 5, 5, 5, 4];
        let desks = [4, 4, 4, 4, 4];
        let solid = [4, 4, 4, 3, 3];
        let rails = [3, 3, 3, 2, 2];
        let curtains = [3, 2, 2, 2, 2];
        let doors = [2, 2, 1, 1, 1];
        let multi = [1, 1, 1, 0, 0];
        let sofas = [1, 0, 0, 1, 0];
        for i in 0..5 {
            cfg.spaces.push(SpaceSpec {
                name: format!("Zone {}", i + 1),
                width_m: sizes[i].0,
                depth_m: sizes[i].1,
                ventilation_mode: modes[i],
                setpoint_c: matches!(modes[i], VentilationMode::HC).then_some(27.0),
                fans: fans[i],
                windows: 0,
                diffusers: 0,
                ac_units: ac[i],
                chairs: chairs[i],
                desks: desks[i],
                dining_tables: dining[i],
                multi_tables: multi[i],
                sofas: sofas[i],
                solid_walls: solid[i],
                curtain_walls: curtains[i],
                hand_rails: rails[i],
                doors: doors[i],
                sensors: 0,
            });
        }
        cfg
    }

    /// Small scene for fast end-to-end determinism checks.
    pub fn small(seed: u64) -> Self {
        let mut cfg = Self::heterogeneous(seed);
        cfg.spaces.truncate(2);
        for space in &mut cfg.spaces {
            space.width_m = 10.0;
            space.depth_m = 8.0;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.spaces.is_empty() {
            return Err(HarnessError::Config("scene has no spaces".to_string()));
        }
        if self.cell_size <= 0.0 {
            return Err(HarnessError::Config(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            )));
        }
        for space in &self.spaces {
            if space.width_m < 2.0 || space.depth_m < 2.0 {
                return Err(HarnessError::Config(format!(
                    "space '{}' must be at least 2x2 m",
                    space.name
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene config serialization cannot fail")
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// Micro-climate zone of a cell, from AoI membership. Window bands dominate
/// fan disks, which dominate diffuser sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellZone {
    Plain,
    FanZone,
    WindowBand,
    DiffuserZone,
}

/// One simulated preference archetype: a bias toward cooler/warmer votes, a
/// comfy bias, and small physiological offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    /// Positive = runs hot (votes prefer-cooler more often).
    pub shift: f64,
    /// Mass moved toward the no-preference vote.
    pub comfy: f64,
    pub temp_offset_c: f64,
    pub hr_offset_bpm: f64,
}

pub const ARCHETYPE_COUNT: usize = 10;

fn archetypes() -> [Archetype; ARCHETYPE_COUNT] {
    let mut out = [Archetype {
        shift: 0.0,
        comfy: 0.0,
        temp_offset_c: 0.0,
        hr_offset_bpm: 0.0,
    }; ARCHETYPE_COUNT];
    let shifts = [-0.20, -0.10, 0.0, 0.10, 0.20];
    for (i, slot) in out.iter_mut().enumerate() {
        let shift = shifts[i % 5];
        let comfy = if i < 5 { 0.12 } else { -0.12 };
        *slot = Archetype {
            shift,
            comfy,
            temp_offset_c: 1.5 * shift,
            hr_offset_bpm: 20.0 * comfy,
        };
    }
    out
}

/// Ground-truth per-cell vote distributions: base probabilities by
/// (ventilation mode, zone), warped per archetype.
#[derive(Debug, Clone)]
pub struct ComfortField {
    zones: std::collections::BTreeMap<String, CellZone>,
    modes: std::collections::BTreeMap<String, VentilationMode>,
    archetypes: [Archetype; ARCHETYPE_COUNT],
}

fn base_probabilities(mode: VentilationMode, zone: CellZone) -> [f64; 3] {
    use CellZone::*;
    use VentilationMode::*;
    // [prefer cooler, no preference, prefer warmer]
    match (mode, zone) {
        (HC, Plain) => [0.08, 0.84, 0.08],
        (HC, FanZone) => [0.04, 0.18, 0.78],
        (HC, WindowBand) => [0.82, 0.13, 0.05],
        (HC, DiffuserZone) => [0.05, 0.33, 0.62],
        (NV, Plain) => [0.52, 0.38, 0.10],
        (NV, FanZone) => [0.10, 0.26, 0.64],
        (NV, WindowBand) => [0.85, 0.10, 0.05],
        (NV, DiffuserZone) => [0.08, 0.36, 0.56],
        (AC, Plain) => [0.10, 0.78, 0.12],
        (AC, FanZone) => [0.05, 0.25, 0.70],
        (AC, WindowBand) => [0.76, 0.17, 0.07],
        (AC, DiffuserZone) => [0.05, 0.35, 0.60],
        (MV, Plain) => [0.18, 0.68, 0.14],
        (MV, FanZone) => [0.07, 0.28, 0.65],
        (MV, WindowBand) => [0.72, 0.20, 0.08],
        (MV, DiffuserZone) => [0.07, 0.37, 0.56],
    }
}

/// Local felt-temperature offset of a zone, degrees C.
fn zone_thermal_offset(zone: CellZone) -> f64 {
    match zone {
        CellZone::Plain => 0.0,
        CellZone::FanZone => -1.2,
        CellZone::WindowBand => 1.6,
        CellZone::DiffuserZone => -0.8,
    }
}

fn mode_thermal_offset(mode: VentilationMode) -> f64 {
    match mode {
        VentilationMode::NV => 0.8,
        VentilationMode::MV => 0.2,
        VentilationMode::AC => -0.4,
        VentilationMode::HC => 0.0,
    }
}

impl ComfortField {
    pub fn zone(&self, cell_id: &str) -> CellZone {
        self.zones.get(cell_id).copied().unwrap_or(CellZone::Plain)
    }

    pub fn mode(&self, cell_id: &str) -> VentilationMode {
        self.modes
            .get(cell_id)
            .copied()
            .unwrap_or(VentilationMode::HC)
    }

    pub fn archetype(&self, index: usize) -> Archetype {
        self.archetypes[index % ARCHETYPE_COUNT]
    }

    /// Vote distribution of an archetype at a cell; sums to 1.
    pub fn probabilities(&self, cell_id: &str, archetype: usize) -> [f64; 3] {
        let base = base_probabilities(self.mode(cell_id), self.zone(cell_id));
        let a = self.archetype(archetype);
        let mut p = [
            base[0] + a.shift - a.comfy / 2.0,
            base[1] + a.comfy,
            base[2] - a.shift - a.comfy / 2.0,
        ];
        let mut total = 0.0;
        for v in p.iter_mut() {
            *v = v.max(0.02);
            total += *v;
        }
        for v in p.iter_mut() {
            *v /= total;
        }
        p
    }

    /// Archetype-averaged probability of a no-preference (comfortable) vote.
    pub fn comfort_probability(&self, cell_id: &str) -> f64 {
        (0..ARCHETYPE_COUNT)
            .map(|a| self.probabilities(cell_id, a)[1])
            .sum::<f64>()
            / ARCHETYPE_COUNT as f64
    }

    /// Expected near-body temperature at a cell for an archetype (noise-free).
    pub fn near_body_temp_mean(&self, cell_id: &str, archetype: usize) -> f64 {
        30.0 + zone_thermal_offset(self.zone(cell_id))
            + mode_thermal_offset(self.mode(cell_id))
            + self.archetype(archetype).temp_offset_c
    }

    pub fn heart_rate_mean(&self, archetype: usize) -> f64 {
        72.0 + self.archetype(archetype).hr_offset_bpm
    }

    /// Samples one vote label from the cell/archetype distribution.
    pub fn sample_label(
        &self,
        cell_id: &str,
        archetype: usize,
        rng: &mut ChaCha8Rng,
    ) -> crate::classifier::PreferenceLabel {
        let p = self.probabilities(cell_id, archetype);
        let r: f64 = rng.gen();
        let idx = if r < p[0] {
            0
        } else if r < p[0] + p[1] {
            1
        } else {
            2
        };
        crate::classifier::PreferenceLabel::from_index(idx)
    }
}

fn place_objects(
    cfg: &SceneConfig,
    spec: &SpaceSpec,
    space_id: &str,
    ordinal: usize,
    x0: f64,
    rng: &mut ChaCha8Rng,
    objects: &mut Vec<SpatialObject>,
) {
    let w = spec.width_m;
    let d = spec.depth_m;
    let mut push = |kind: ObjectKind, tag: &str, idx: usize, position: [f64; 3], aoi: Option<AoiParams>| {
        objects.push(SpatialObject {
            id: format!("{tag}-{ordinal:02}-{idx:02}"),
            kind,
            space_id: space_id.to_string(),
            position,
            aoi,
        });
    };

    // Ceiling fans along the center line, evenly spaced with jitter.
    for i in 0..spec.fans {
        let x = x0 + (i as f64 + 0.5) * w / spec.fans as f64 + rng.gen_range(-0.5..0.5);
        let y = d / 2.0 + rng.gen_range(-0.2 * d..0.2 * d);
        push(
            ObjectKind::CeilingFan,
            "fan",
            i + 1,
            [x, y, 2.8],
            Some(AoiParams::Fan {
                radius_m: cfg.fan_radius_m,
            }),
        );
    }

    // Windows along the south facade (y = 0).
    for i in 0..spec.windows {
        let slot = w / spec.windows as f64;
        let center = x0 + (i as f64 + 0.5) * slot;
        let half = (slot * 0.42).min(2.2);
        push(
            ObjectKind::Window,
            "win",
            i + 1,
            [center, 0.0, 1.5],
            Some(AoiParams::Window {
                start: Point::new(center - half, 0.0),
                end: Point::new(center + half, 0.0),
                depth_m: Some(cfg.window_depth_m),
            }),
        );
    }

    // VAV diffusers on the north half, throwing toward the room center.
    for i in 0..spec.diffusers {
        let x = x0 + (i as f64 + 0.5) * w / spec.diffusers as f64 + rng.gen_range(-0.4..0.4);
        let y = 0.75 * d;
        push(
            ObjectKind::VavDiffuser,
            "vav",
            i + 1,
            [x, y, 2.6],
            Some(AoiParams::Diffuser {
                direction_deg: 270.0,
                throw_m: cfg.diffuser_throw_m,
                spread_deg: cfg.diffuser_spread_deg,
            }),
        );
    }

    // AC units along the north wall.
    for i in 0..spec.ac_units {
        let x = x0 + (i as f64 + 0.5) * w / spec.ac_units as f64;
        push(ObjectKind::AirCond, "ac", i + 1, [x, d - 0.3, 2.4], None);
    }

    let interior = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        [
            x0 + rng.gen_range(0.5..w - 0.5),
            rng.gen_range(0.5..d - 0.5),
            0.5,
        ]
    };
    for (count, kind, tag) in [
        (spec.chairs, ObjectKind::Chair, "chair"),
        (spec.desks, ObjectKind::Desk, "desk"),
        (spec.dining_tables, ObjectKind::DiningTable, "dine"),
        (spec.multi_tables, ObjectKind::MultiTable, "multi"),
        (spec.sofas, ObjectKind::Sofa, "sofa"),
        (spec.solid_walls, ObjectKind::SolidWall, "wall"),
        (spec.curtain_walls, ObjectKind::CurtainWall, "curt"),
        (spec.hand_rails, ObjectKind::HandRail, "rail"),
        (spec.doors, ObjectKind::Door, "door"),
        (spec.sensors, ObjectKind::Sensor, "sens"),
    ] {
        for i in 0..count {
            let position = interior(rng);
            push(kind, tag, i + 1, position, None);
        }
    }
}

/// Generates a deterministic scene and its ground-truth comfort field.
pub fn generate_scene(cfg: &SceneConfig) -> Result<(SpatialModel, ComfortField), HarnessError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xC0FFEE));
    let level = Level {
        id: format!("L{}", cfg.level_index),
        name: format!("Level {}", cfg.level_index),
        index: cfg.level_index,
        elevation_m: 3.6 * cfg.level_index as f64,
    };
    let mut spaces = Vec::with_capacity(cfg.spaces.len());
    let mut objects = Vec::new();
    let mut x0 = 0.0;
    for (i, spec) in cfg.spaces.iter().enumerate() {
        let ordinal = i + 1;
        let space_id = format!("S{ordinal:02}");
        spaces.push(Space {
            id: space_id.clone(),
            name: spec.name.clone(),
            level_id: level.id.clone(),
            footprint: vec![
                Point::new(x0, 0.0),
                Point::new(x0 + spec.width_m, 0.0),
                Point::new(x0 + spec.width_m, spec.depth_m),
                Point::new(x0, spec.depth_m),
            ],
            ventilation_mode: spec.ventilation_mode,
            setpoint_c: spec.setpoint_c,
        });
        place_objects(cfg, spec, &space_id, ordinal, x0, &mut rng, &mut objects);
        x0 += spec.width_m + cfg.spacing_m;
    }
    let model = SpatialModel {
        transform: CoordinateTransform::new(cfg.origin_lat, cfg.origin_lon, cfg.rotation_deg),
        levels: vec![level],
        spaces,
        objects,
    };
    model.validate()?;
    let field = comfort_field(&model, cfg.cell_size)?;
    Ok((model, field))
}

/// Derives the ground-truth field for a model: per-cell zone from AoI
/// membership plus the fixed archetype table.
pub fn comfort_field(model: &SpatialModel, cell_size: f64) -> Result<ComfortField, HarnessError> {
    let (cells, _) = discretize(model, cell_size)?;
    let mode_of_space: std::collections::BTreeMap<&str, VentilationMode> = model
        .spaces
        .iter()
        .map(|s| (s.id.as_str(), s.ventilation_mode))
        .collect();
    let mut regions: Vec<(CellZone, AoiRegion)> = Vec::new();
    for obj in &model.objects {
        if let Some(region) = aoi_region(obj)? {
            let zone = match obj.kind {
                ObjectKind::CeilingFan => CellZone::FanZone,
                ObjectKind::Window => CellZone::WindowBand,
                ObjectKind::VavDiffuser => CellZone::DiffuserZone,
                _ => continue,
            };
            regions.push((zone, region));
        }
    }
    let mut zones = std::collections::BTreeMap::new();
    let mut modes = std::collections::BTreeMap::new();
    for cell in &cells {
        let mut zone = CellZone::Plain;
        for (candidate, region) in &regions {
            if region.contains(cell.center) {
                zone = match (zone, candidate) {
                    (CellZone::WindowBand, _) => CellZone::WindowBand,
                    (_, CellZone::WindowBand) => CellZone::WindowBand,
                    (CellZone::FanZone, _) => CellZone::FanZone,
                    (_, CellZone::FanZone) => CellZone::FanZone,
                    _ => CellZone::DiffuserZone,
                };
            }
        }
        zones.insert(cell.id.clone(), zone);
        modes.insert(cell.id.clone(), mode_of_space[cell.space_id.as_str()]);
    }
    Ok(ComfortField {
        zones,
        modes,
        archetypes: archetypes(),
    })
}

/// Virtual per-space environmental sensor sample.
#[derive(Debug, Clone, Copy)]
pub struct EnvSample {
    pub air_temp_c: f64,
    pub relative_humidity_pct: f64,
    pub noise_db: f64,
    pub illuminance_lux: f64,
}

/// Deterministic reading of the fixed sensor in a space at an hour of a day.
/// Readings vary by ventilation mode, a fixed per-space calibration offset,
/// a diurnal cycle, and hour-bucket noise; they carry no within-space
/// spatial information.
pub fn env_reading(
    scene_seed: u64,
    space_ordinal: usize,
    mode: VentilationMode,
    windows: usize,
    day: i64,
    hour: u32,
) -> EnvSample {
    let mode_base = match mode {
        VentilationMode::NV => 29.5,
        VentilationMode::MV => 27.5,
        VentilationMode::AC => 24.0,
        VentilationMode::HC => 26.5,
    };
    let mut calib_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(scene_seed, 0xE0 + space_ordinal as u64));
    let calibration: f64 = calib_rng.gen_range(-0.4..0.4);
    let diurnal = 1.5 * (std::f64::consts::PI * (hour as f64 - 9.0) / 14.0).sin();
    let bucket = derive_seed(
        scene_seed,
        0xE000_0000 + space_ordinal as u64 * 1_000_000 + day as u64 * 100 + hour as u64,
    );
    let mut noise_rng = ChaCha8Rng::seed_from_u64(bucket);
    let temp_noise: f64 = noise_rng.gen_range(-0.3..0.3);
    let rh_noise: f64 = noise_rng.gen_range(-3.0..3.0);
    let db_noise: f64 = noise_rng.gen_range(-2.0..2.0);
    let lux_noise: f64 = noise_rng.gen_range(-25.0..25.0);
    let rh_base = match mode {
        VentilationMode::NV => 75.0,
        VentilationMode::MV => 65.0,
        VentilationMode::AC => 55.0,
        VentilationMode::HC => 62.0,
    };
    EnvSample {
        air_temp_c: mode_base + calibration + diurnal + temp_noise,
        relative_humidity_pct: rh_base - 2.0 * diurnal + rh_noise,
        noise_db: 45.0 + db_noise,
        illuminance_lux: 280.0 + 30.0 * windows as f64 + 120.0 * diurnal.max(0.0) + lux_noise,
    }
}
