//! Minimal STEP physical-file (ISO-10303-21) reader.
//!
//! Only the entity whitelist needed for spatial extraction is interpreted:
//! storeys, spaces, doors, windows, furniture, sensors, containment
//! relations, and the polyline/point/placement chain that carries geometry.
//! Every other `#id = ENTITY(...);` record is skipped with a warning, one
//! warning per skipped record.
//!
//! Conventions for the subset:
//! - entity ids become `#n` strings in the model;
//! - an entity's display name is its second string argument (after the GUID),
//!   falling back to the first string or the id;
//! - space footprints are found by following references from the space record
//!   through whitelisted entities until an `IFCPOLYLINE` is reached;
//! - storeys are numbered in order of appearance starting at 1;
//! - conditioning information is not present in the subset, so spaces default
//!   to naturally ventilated;
//! - STEP windows carry no band geometry, so a 1 m segment along the local
//!   x-axis at the window position is synthesized with the default depth.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{
    AoiParams, CoordinateTransform, Level, ObjectKind, Space, SpatialError, SpatialModel,
    SpatialObject, VentilationMode,
};
use crate::geometry::Point;

const WHITELIST: &[&str] = &[
    "IFCSPACE",
    "IFCDOOR",
    "IFCWINDOW",
    "IFCFURNITURE",
    "IFCFURNISHINGELEMENT",
    "IFCSYSTEMFURNITUREELEMENT",
    "IFCSENSOR",
    "IFCBUILDINGSTOREY",
    "IFCRELCONTAINEDINSPATIALSTRUCTURE",
    "IFCPOLYLINE",
    "IFCCARTESIANPOINT",
    "IFCLOCALPLACEMENT",
    "IFCAXIS2PLACEMENT3D",
];

#[derive(Debug, Clone, PartialEq)]
enum StepValue {
    Null,
    Star,
    Number(f64),
    Str(String),
    Ref(u64),
    Enum(String),
    List(Vec<StepValue>),
}

impl StepValue {
    fn collect_refs(&self, out: &mut Vec<u64>) {
        match self {
            StepValue::Ref(id) => out.push(*id),
            StepValue::List(items) => {
                for item in items {
                    item.collect_refs(out);
                }
            }
            _ => {}
        }
    }
}

#[derive(Debug)]
struct StepRecord {
    id: u64,
    name: String,
    args: Vec<StepValue>,
    line: usize,
}

impl StepRecord {
    fn refs(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for a in &self.args {
            a.collect_refs(&mut out);
        }
        out
    }

    fn strings(&self) -> Vec<&str> {
        self.args
            .iter()
            .filter_map(|a| match a {
                StepValue::Str(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    fn display_name(&self) -> String {
        let strings = self.strings();
        match strings.len() {
            0 => format!("#{}", self.id),
            1 => strings[0].to_string(),
            _ => strings[1].to_string(),
        }
    }

    fn last_number(&self) -> Option<f64> {
        self.args.iter().rev().find_map(|a| match a {
            StepValue::Number(n) => Some(*n),
            _ => None,
        })
    }

    /// First argument that is a list of numbers (coordinate list).
    fn number_list(&self) -> Option<Vec<f64>> {
        self.args.iter().find_map(|a| match a {
            StepValue::List(items) => {
                let nums: Vec<f64> = items
                    .iter()
                    .filter_map(|v| match v {
                        StepValue::Number(n) => Some(*n),
                        _ => None,
                    })
                    .collect();
                if nums.len() == items.len() && !nums.is_empty() {
                    Some(nums)
                } else {
                    None
                }
            }
            _ => None,
        })
    }

    /// First argument that is a list of refs (related-elements list).
    fn ref_list(&self) -> Vec<u64> {
        for a in &self.args {
            if let StepValue::List(items) = a {
                let refs: Vec<u64> = items
                    .iter()
                    .filter_map(|v| match v {
                        StepValue::Ref(r) => Some(*r),
                        _ => None,
                    })
                    .collect();
                if refs.len() == items.len() && !refs.is_empty() {
                    return refs;
                }
            }
        }
        Vec::new()
    }

    fn last_ref(&self) -> Option<u64> {
        self.args.iter().rev().find_map(|a| match a {
            StepValue::Ref(r) => Some(*r),
            _ => None,
        })
    }
}

struct ArgParser<'a> {
    chars: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> ArgParser<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        ArgParser {
            chars: text.as_bytes(),
            pos: 0,
            line,
        }
    }

    fn error(&self, message: &str) -> SpatialError {
        SpatialError::StepSyntax {
            line: self.line,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).copied()
    }

    fn parse_list(&mut self) -> Result<Vec<StepValue>, SpatialError> {
        // Caller consumed '('.
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    return Ok(items);
                }
                Some(b',') => {
                    self.pos += 1;
                }
                Some(_) => {
                    items.push(self.parse_value()?);
                }
                None => return Err(self.error("unterminated argument list")),
            }
        }
    }

    fn parse_value(&mut self) -> Result<StepValue, SpatialError> {
        self.skip_ws();
        match self.peek() {
            Some(b'$') => {
                self.pos += 1;
                Ok(StepValue::Null)
            }
            Some(b'*') => {
                self.pos += 1;
                Ok(StepValue::Star)
            }
            Some(b'#') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                if self.pos == start {
                    return Err(self.error("reference '#' without digits"));
                }
                let text = std::str::from_utf8(&self.chars[start..self.pos]).unwrap();
                Ok(StepValue::Ref(text.parse().unwrap()))
            }
            Some(b'\'') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.peek() {
                        Some(b'\'') => {
                            // '' escapes a quote inside a string.
                            if self.chars.get(self.pos + 1) == Some(&b'\'') {
                                s.push('\'');
                                self.pos += 2;
                            } else {
                                self.pos += 1;
                                return Ok(StepValue::Str(s));
                            }
                        }
                        Some(c) => {
                            s.push(c as char);
                            self.pos += 1;
                        }
                        None => return Err(self.error("unterminated string literal")),
                    }
                }
            }
            Some(b'.') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c != b'.') {
                    self.pos += 1;
                }
                if self.peek().is_none() {
                    return Err(self.error("unterminated enum literal"));
                }
                let text = std::str::from_utf8(&self.chars[start..self.pos]).unwrap().to_string();
                self.pos += 1;
                Ok(StepValue::Enum(text))
            }
            Some(b'(') => {
                self.pos += 1;
                Ok(StepValue::List(self.parse_list()?))
            }
            Some(c) if c == b'-' || c == b'+' || c.is_ascii_digit() => {
                let start = self.pos;
                self.pos += 1;
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E' | b'-' | b'+'))
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.chars[start..self.pos]).unwrap();
                text.parse::<f64>()
                    .map(StepValue::Number)
                    .map_err(|_| self.error(&format!("invalid number '{text}'")))
            }
            Some(c) if (c as char).is_ascii_alphabetic() => {
                // Typed value like IFCPARAMETERVALUE(0.5): keep the payload.
                while self.peek().is_some_and(|c| c != b'(') {
                    self.pos += 1;
                }
                if self.peek() != Some(b'(') {
                    return Err(self.error("identifier without argument list"));
                }
                self.pos += 1;
                Ok(StepValue::List(self.parse_list()?))
            }
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of record")),
        }
    }
}

/// Splits the DATA section into records, tracking the starting line of each.
fn scan_records(text: &str) -> Result<Vec<(usize, String)>, SpatialError> {
    let mut records = Vec::new();
    let mut in_data = false;
    let mut pending = String::new();
    let mut pending_line = 0usize;
    let mut in_string = false;

    let mut first_content_line = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if first_content_line.is_none() {
            first_content_line = Some(lineno);
            if !line.starts_with("ISO-10303-21") {
                return Err(SpatialError::StepSyntax {
                    line: lineno,
                    message: "missing ISO-10303-21 header".to_string(),
                });
            }
            continue;
        }
        if !in_data {
            if line.eq_ignore_ascii_case("DATA;") {
                in_data = true;
            }
            continue;
        }
        if pending.is_empty() && (line.eq_ignore_ascii_case("ENDSEC;") || line.starts_with("END-ISO-10303-21")) {
            break;
        }
        if pending.is_empty() {
            pending_line = lineno;
        } else {
            pending.push(' ');
        }
        // Append up to an unquoted ';', which terminates the record.
        let mut terminated_at = None;
        for (i, c) in line.char_indices() {
            if c == '\'' {
                in_string = !in_string;
            } else if c == ';' && !in_string {
                terminated_at = Some(i);
                break;
            }
        }
        match terminated_at {
            Some(i) => {
                pending.push_str(&line[..i]);
                records.push((pending_line, std::mem::take(&mut pending)));
                let rest = line[i + 1..].trim();
                if !rest.is_empty() {
                    return Err(SpatialError::StepSyntax {
                        line: lineno,
                        message: "content after ';' on the same line".to_string(),
                    });
                }
            }
            None => pending.push_str(line),
        }
    }
    if first_content_line.is_none() {
        return Err(SpatialError::StepSyntax {
            line: 1,
            message: "empty file".to_string(),
        });
    }
    if !pending.is_empty() {
        return Err(SpatialError::StepSyntax {
            line: pending_line,
            message: "unterminated record (missing ';')".to_string(),
        });
    }
    Ok(records)
}

fn parse_record(line: usize, text: &str) -> Result<StepRecord, SpatialError> {
    let err = |message: &str| SpatialError::StepSyntax {
        line,
        message: message.to_string(),
    };
    let text = text.trim();
    let rest = text.strip_prefix('#').ok_or_else(|| err("record must start with '#'"))?;
    let eq = rest.find('=').ok_or_else(|| err("missing '=' in record"))?;
    let id: u64 = rest[..eq]
        .trim()
        .parse()
        .map_err(|_| err("invalid record id"))?;
    let after_eq = rest[eq + 1..].trim();
    let paren = after_eq
        .find('(')
        .ok_or_else(|| err("missing '(' after entity name"))?;
    let name = after_eq[..paren].trim().to_ascii_uppercase();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(err("invalid entity name"));
    }
    let args_text = &after_eq[paren + 1..];
    let mut parser = ArgParser::new(args_text, line);
    let args = parser.parse_list()?;
    parser.skip_ws();
    if parser.pos != args_text.len() {
        return Err(err("trailing content after argument list"));
    }
    Ok(StepRecord { id, name, args, line })
}

struct Assembler<'a> {
    records: &'a BTreeMap<u64, StepRecord>,
    defined: &'a BTreeSet<u64>,
}

impl<'a> Assembler<'a> {
    /// Breadth-first search through whitelisted records for the first record
    /// whose entity name satisfies `pred`.
    fn find_reachable(
        &self,
        start: &StepRecord,
        pred: impl Fn(&str) -> bool,
    ) -> Result<Option<&'a StepRecord>, SpatialError> {
        let mut queue: VecDeque<u64> = start.refs().into();
        let mut seen = BTreeSet::new();
        while let Some(id) = queue.pop_front() {
            if !seen.insert(id) {
                continue;
            }
            if !self.defined.contains(&id) {
                return Err(SpatialError::UnresolvedRef(id));
            }
            let Some(rec) = self.records.get(&id) else {
                continue; // defined but skipped entity: dead end
            };
            if pred(&rec.name) {
                return Ok(Some(rec));
            }
            queue.extend(rec.refs());
        }
        Ok(None)
    }

    fn footprint_of(&self, space: &StepRecord) -> Result<Vec<Point>, SpatialError> {
        let Some(polyline) = self.find_reachable(space, |n| n == "IFCPOLYLINE")? else {
            return Err(SpatialError::Geometry(format!(
                "space '#{}' has no resolvable footprint polyline",
                space.id
            )));
        };
        let mut points = Vec::new();
        for id in polyline.refs() {
            if !self.defined.contains(&id) {
                return Err(SpatialError::UnresolvedRef(id));
            }
            let Some(rec) = self.records.get(&id) else {
                continue;
            };
            if rec.name == "IFCCARTESIANPOINT" {
                if let Some(coords) = rec.number_list() {
                    if coords.len() >= 2 {
                        points.push(Point::new(coords[0], coords[1]));
                    }
                }
            }
        }
        // Polylines often repeat the first vertex to close the ring.
        if points.len() > 3 && points.first() == points.last() {
            points.pop();
        }
        Ok(points)
    }

    fn position_of(&self, rec: &StepRecord) -> Result<[f64; 3], SpatialError> {
        let Some(point) = self.find_reachable(rec, |n| n == "IFCCARTESIANPOINT")? else {
            return Ok([0.0, 0.0, 0.0]);
        };
        let coords = point.number_list().unwrap_or_default();
        Ok([
            coords.first().copied().unwrap_or(0.0),
            coords.get(1).copied().unwrap_or(0.0),
            coords.get(2).copied().unwrap_or(0.0),
        ])
    }
}

fn furniture_kind(name: &str) -> ObjectKind {
    let lowered = name.to_ascii_lowercase();
    if lowered.contains("sofa") {
        ObjectKind::Sofa
    } else if lowered.contains("dining") {
        ObjectKind::DiningTable
    } else if lowered.contains("multi") {
        ObjectKind::MultiTable
    } else if lowered.contains("desk") {
        ObjectKind::Desk
    } else {
        ObjectKind::Chair
    }
}

/// Parses the STEP subset into a spatial model.
///
/// Returns the model plus one warning per skipped (non-whitelisted) record.
pub fn parse_ifc_subset(text: &str) -> Result<(SpatialModel, Vec<String>), SpatialError> {
    let raw_records = scan_records(text)?;
    let mut records: BTreeMap<u64, StepRecord> = BTreeMap::new();
    let mut defined: BTreeSet<u64> = BTreeSet::new();
    let mut order: Vec<u64> = Vec::new();
    let mut warnings = Vec::new();

    for (line, text) in &raw_records {
        let rec = parse_record(*line, text)?;
        defined.insert(rec.id);
        if WHITELIST.contains(&rec.name.as_str()) {
            order.push(rec.id);
            records.insert(rec.id, rec);
        } else {
            warnings.push(format!(
                "skipped entity {} (#{}) at line {}",
                rec.name, rec.id, rec.line
            ));
        }
    }

    let assembler = Assembler {
        records: &records,
        defined: &defined,
    };

    let mut levels = Vec::new();
    for &id in &order {
        let rec = &records[&id];
        if rec.name == "IFCBUILDINGSTOREY" {
            levels.push(Level {
                id: format!("#{}", rec.id),
                name: rec.display_name(),
                index: levels.len() as i32 + 1,
                elevation_m: rec.last_number().unwrap_or(0.0),
            });
        }
    }

    // Containment: related elements list -> relating structure (last ref).
    let mut container: BTreeMap<u64, u64> = BTreeMap::new();
    for &id in &order {
        let rec = &records[&id];
        if rec.name == "IFCRELCONTAINEDINSPATIALSTRUCTURE" {
            let related = rec.ref_list();
            let Some(relating) = rec.last_ref() else {
                continue;
            };
            for element in related {
                if element != relating {
                    container.insert(element, relating);
                }
            }
            for cited in rec.refs() {
                if !defined.contains(&cited) {
                    return Err(SpatialError::UnresolvedRef(cited));
                }
            }
        }
    }

    let storey_ids: Vec<u64> = order
        .iter()
        .copied()
        .filter(|id| records[id].name == "IFCBUILDINGSTOREY")
        .collect();
    let space_ids: Vec<u64> = order
        .iter()
        .copied()
        .filter(|id| records[id].name == "IFCSPACE")
        .collect();

    let mut spaces = Vec::new();
    for &id in &space_ids {
        let rec = &records[&id];
        let level_ref = container
            .get(&id)
            .copied()
            .filter(|r| storey_ids.contains(r))
            .or_else(|| (storey_ids.len() == 1).then(|| storey_ids[0]));
        let Some(level_ref) = level_ref else {
            return Err(SpatialError::DanglingRef {
                kind: "space",
                id: format!("#{id}"),
                target: "a building storey".to_string(),
            });
        };
        spaces.push(Space {
            id: format!("#{id}"),
            name: rec.display_name(),
            level_id: format!("#{level_ref}"),
            footprint: assembler.footprint_of(rec)?,
            ventilation_mode: VentilationMode::NV,
            setpoint_c: None,
        });
    }

    let mut objects = Vec::new();
    for &id in &order {
        let rec = &records[&id];
        let kind = match rec.name.as_str() {
            "IFCDOOR" => ObjectKind::Door,
            "IFCWINDOW" => ObjectKind::Window,
            "IFCSENSOR" => ObjectKind::Sensor,
            "IFCFURNITURE" | "IFCFURNISHINGELEMENT" | "IFCSYSTEMFURNITUREELEMENT" => {
                furniture_kind(&rec.display_name())
            }
            _ => continue,
        };
        let space_ref = container
            .get(&id)
            .copied()
            .filter(|r| space_ids.contains(r))
            .or_else(|| (space_ids.len() == 1).then(|| space_ids[0]));
        let Some(space_ref) = space_ref else {
            return Err(SpatialError::DanglingRef {
                kind: "object",
                id: format!("#{id}"),
                target: "a space".to_string(),
            });
        };
        let position = assembler.position_of(rec)?;
        let aoi = (kind == ObjectKind::Window).then(|| AoiParams::Window {
            start: Point::new(position[0] - 0.5, position[1]),
            end: Point::new(position[0] + 0.5, position[1]),
            depth_m: None,
        });
        objects.push(SpatialObject {
            id: format!("#{id}"),
            kind,
            space_id: format!("#{space_ref}"),
            position,
            aoi,
        });
    }

    let model = SpatialModel {
        transform: CoordinateTransform::new(0.0, 0.0, 0.0),
        levels,
        spaces,
        objects,
    };
    if !model.spaces.is_empty() {
        model.validate()?;
    }
    Ok((model, warnings))
}
