//! Attributed heterogeneous cell graph.
//!
//! Spaces are discretized into a square cell lattice; cells, spaces, objects,
//! levels, and ventilation-mode attribute nodes are wired into one typed
//! graph. Occupant votes are linked to their nearest cell through the k-NN
//! index, becoming feedback nodes.

pub mod hnsw;

pub use hnsw::{knn_build, knn_query, KnnConfig, KnnIndex};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::classifier::{FeedbackRecord, PreferenceLabel};
use crate::geometry::{self, Point};
use crate::spatial::{aoi_region, SpatialModel};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("k-NN index is empty")]
    EmptyIndex,
    #[error("no cells indexed on level {0}")]
    NoCellOnLevel(i32),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// One lattice cell of a discretized space.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// `C{level}{space:02}{index:04}`, row-major per space.
    pub id: String,
    pub center: Point,
    pub space_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Adjacent,
    InAoiOf,
    ContainedIn,
    OnLevel,
    HasAttribute,
    VotedAt,
    BelongsToPersonality,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Adjacent => "ADJACENT",
            Relation::InAoiOf => "IN_AOI_OF",
            Relation::ContainedIn => "CONTAINED_IN",
            Relation::OnLevel => "ON_LEVEL",
            Relation::HasAttribute => "HAS_ATTRIBUTE",
            Relation::VotedAt => "VOTED_AT",
            Relation::BelongsToPersonality => "BELONGS_TO_PERSONALITY",
        }
    }

    pub fn parse(text: &str) -> Option<Relation> {
        Some(match text {
            "ADJACENT" => Relation::Adjacent,
            "IN_AOI_OF" => Relation::InAoiOf,
            "CONTAINED_IN" => Relation::ContainedIn,
            "ON_LEVEL" => Relation::OnLevel,
            "HAS_ATTRIBUTE" => Relation::HasAttribute,
            "VOTED_AT" => Relation::VotedAt,
            "BELONGS_TO_PERSONALITY" => Relation::BelongsToPersonality,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeData {
    pub label: String,
    pub attrs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: String,
    pub relation: Relation,
    pub dst: String,
}

/// Undirected attributed graph with typed nodes and edges.
///
/// Edges are stored once in their semantic orientation (cell -> space,
/// feedback -> cell, ...); the adjacency list is symmetric. Self-loops and
/// duplicate edges are rejected.
#[derive(Debug, Clone, Default)]
pub struct AttributedGraph {
    nodes: BTreeMap<String, NodeData>,
    edges: Vec<Edge>,
    edge_keys: BTreeSet<(String, String, Relation)>,
    adjacency: BTreeMap<String, Vec<String>>,
}

impl AttributedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str, label: &str) {
        self.nodes.entry(id.to_string()).or_insert_with(|| NodeData {
            label: label.to_string(),
            attrs: BTreeMap::new(),
        });
        self.adjacency.entry(id.to_string()).or_default();
    }

    pub fn set_attr(&mut self, id: &str, key: &str, value: String) {
        if let Some(node) = self.nodes.get_mut(id) {
            node.attrs.insert(key.to_string(), value);
        }
    }

    /// Adds an undirected edge; returns false for self-loops and duplicates.
    pub fn add_edge(&mut self, src: &str, relation: Relation, dst: &str) -> bool {
        if src == dst || !self.nodes.contains_key(src) || !self.nodes.contains_key(dst) {
            return false;
        }
        let (a, b) = if src < dst { (src, dst) } else { (dst, src) };
        if !self.edge_keys.insert((a.to_string(), b.to_string(), relation)) {
            return false;
        }
        self.edges.push(Edge {
            src: src.to_string(),
            relation,
            dst: dst.to_string(),
        });
        self.adjacency.get_mut(src).unwrap().push(dst.to_string());
        self.adjacency.get_mut(dst).unwrap().push(src.to_string());
        true
    }

    pub fn node(&self, id: &str) -> Option<&NodeData> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&String, &NodeData)> {
        self.nodes.iter()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &String> {
        self.nodes.keys()
    }

    pub fn neighbors(&self, id: &str) -> &[String] {
        self.adjacency.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: &str, b: &str, relation: Relation) -> bool {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edge_keys.contains(&(a.to_string(), b.to_string(), relation))
    }

    pub fn degree(&self, id: &str) -> usize {
        self.neighbors(id).len()
    }

    /// Node-label census, sorted by descending count then label.
    pub fn census(&self) -> Vec<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for node in self.nodes.values() {
            *counts.entry(node.label.as_str()).or_default() += 1;
        }
        let mut rows: Vec<(String, usize)> = counts
            .into_iter()
            .map(|(label, n)| (label.to_string(), n))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        rows
    }

    pub fn export_census_csv(&self) -> String {
        let mut out = String::from("label,count\n");
        for (label, count) in self.census() {
            out.push_str(&format!("{label},{count}\n"));
        }
        out
    }

    /// Canonically sorted edge list, one `src<TAB>relation<TAB>dst` per line.
    pub fn export_adjacency_list(&self) -> String {
        let mut lines: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{}\t{}\t{}", e.src, e.relation.as_str(), e.dst))
            .collect();
        lines.sort_unstable();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Rebuilds graph topology from an exported adjacency list. Node labels
    /// and attributes are not part of that format and come back empty.
    pub fn from_adjacency_list(text: &str) -> Result<AttributedGraph, GraphError> {
        let mut graph = AttributedGraph::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (src, rel, dst) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(r), Some(d), None) => (s, r, d),
                _ => {
                    return Err(GraphError::InvalidInput(format!(
                        "line {}: expected src<TAB>relation<TAB>dst",
                        lineno + 1
                    )))
                }
            };
            let relation = Relation::parse(rel).ok_or_else(|| {
                GraphError::InvalidInput(format!("line {}: unknown relation '{rel}'", lineno + 1))
            })?;
            graph.add_node(src, "");
            graph.add_node(dst, "");
            graph.add_edge(src, relation, dst);
        }
        Ok(graph)
    }
}

/// Grid geometry of one space, shared by discretization and adjacency wiring.
struct SpaceGrid {
    origin: Point,
    cols: usize,
    rows: usize,
}

impl SpaceGrid {
    fn new(footprint: &[Point], cell_size: f64) -> Self {
        let (min, max) = geometry::bounding_box(&footprint.to_vec());
        SpaceGrid {
            origin: min,
            cols: ((max.x - min.x) / cell_size).ceil() as usize,
            rows: ((max.y - min.y) / cell_size).ceil() as usize,
        }
    }

    fn center(&self, col: usize, row: usize, cell_size: f64) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * cell_size,
            self.origin.y + (row as f64 + 0.5) * cell_size,
        )
    }

    fn cell_coords(&self, center: Point, cell_size: f64) -> (i64, i64) {
        (
            ((center.x - self.origin.x) / cell_size - 0.5).round() as i64,
            ((center.y - self.origin.y) / cell_size - 0.5).round() as i64,
        )
    }
}

/// Discretizes every space into an axis-aligned square lattice. A cell exists
/// iff its center lies inside (or on the boundary of) the space footprint.
/// Returns the cells plus a warning per space too small to hold any cell.
pub fn discretize(
    model: &SpatialModel,
    cell_size: f64,
) -> Result<(Vec<Cell>, Vec<String>), GraphError> {
    if cell_size <= 0.0 {
        return Err(GraphError::InvalidInput(format!(
            "cell_size must be positive, got {cell_size}"
        )));
    }
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for level in &model.levels {
        let mut space_ordinal = 0usize;
        for space in model.spaces.iter().filter(|s| s.level_id == level.id) {
            space_ordinal += 1;
            let grid = SpaceGrid::new(&space.footprint, cell_size);
            let mut index = 0usize;
            for row in 0..grid.rows {
                for col in 0..grid.cols {
                    let center = grid.center(col, row, cell_size);
                    if geometry::point_in_polygon(center, &space.footprint) {
                        index += 1;
                        cells.push(Cell {
                            id: format!("C{}{:02}{:04}", level.index, space_ordinal, index),
                            center,
                            space_id: space.id.clone(),
                        });
                    }
                }
            }
            if index == 0 {
                warnings.push(format!(
                    "space '{}' is smaller than one cell at cell_size {cell_size}; no cells generated",
                    space.id
                ));
            }
        }
    }
    Ok((cells, warnings))
}

#[derive(Debug, Clone)]
pub struct GraphOptions {
    pub cell_size: f64,
    /// Wire 4-neighborhood ADJACENT edges between cells of the same space.
    /// Off switch exists as an ablation: element<->cell/space edges only.
    pub include_cell_adjacency: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            cell_size: 1.0,
            include_cell_adjacency: true,
        }
    }
}

/// Assembles the attributed graph from a model and its cells.
pub fn build_graph(model: &SpatialModel, cells: &[Cell], options: &GraphOptions) -> AttributedGraph {
    let mut graph = AttributedGraph::new();

    for level in &model.levels {
        graph.add_node(&level.id, "Level");
        graph.set_attr(&level.id, "name", level.name.clone());
        graph.set_attr(&level.id, "index", level.index.to_string());
    }

    let mut modes: BTreeSet<&'static str> = BTreeSet::new();
    for space in &model.spaces {
        graph.add_node(&space.id, "Space");
        graph.set_attr(&space.id, "name", space.name.clone());
        graph.set_attr(&space.id, "ventilation_mode", space.ventilation_mode.as_str().to_string());
        if let Some(sp) = space.setpoint_c {
            graph.set_attr(&space.id, "setpoint_c", format!("{sp}"));
        }
        modes.insert(space.ventilation_mode.as_str());
    }
    // One attribute node per ventilation mode present, shared by its spaces.
    for mode in &modes {
        let id = format!("attr:{mode}");
        graph.add_node(&id, &format!("Attribute:{mode}"));
    }

    for obj in &model.objects {
        graph.add_node(&obj.id, obj.kind.node_label());
        graph.set_attr(&obj.id, "x", format!("{}", obj.position[0]));
        graph.set_attr(&obj.id, "y", format!("{}", obj.position[1]));
    }

    for cell in cells {
        graph.add_node(&cell.id, "Cell");
        graph.set_attr(&cell.id, "x", format!("{}", cell.center.x));
        graph.set_attr(&cell.id, "y", format!("{}", cell.center.y));
        graph.set_attr(&cell.id, "space", cell.space_id.clone());
    }

    for space in &model.spaces {
        graph.add_edge(&space.id, Relation::OnLevel, &space.level_id);
        let attr_id = format!("attr:{}", space.ventilation_mode.as_str());
        graph.add_edge(&space.id, Relation::HasAttribute, &attr_id);
    }

    for obj in &model.objects {
        graph.add_edge(&obj.id, Relation::ContainedIn, &obj.space_id);
    }
    for cell in cells {
        graph.add_edge(&cell.id, Relation::ContainedIn, &cell.space_id);
    }

    // AoI membership: cell center inside the object's region.
    for obj in &model.objects {
        let region = match aoi_region(obj) {
            Ok(Some(region)) => region,
            _ => continue,
        };
        for cell in cells {
            if region.contains(cell.center) {
                graph.add_edge(&cell.id, Relation::InAoiOf, &obj.id);
            }
        }
    }

    if options.include_cell_adjacency {
        let mut by_space: BTreeMap<&str, Vec<&Cell>> = BTreeMap::new();
        for cell in cells {
            by_space.entry(cell.space_id.as_str()).or_default().push(cell);
        }
        for space in &model.spaces {
            let Some(space_cells) = by_space.get(space.id.as_str()) else {
                continue;
            };
            let grid = SpaceGrid::new(&space.footprint, options.cell_size);
            let mut lookup: HashMap<(i64, i64), &Cell> = HashMap::new();
            for cell in space_cells {
                lookup.insert(grid.cell_coords(cell.center, options.cell_size), cell);
            }
            for cell in space_cells {
                let (col, row) = grid.cell_coords(cell.center, options.cell_size);
                // Right and top neighbors cover each pair exactly once.
                for (dc, dr) in [(1i64, 0i64), (0, 1)] {
                    if let Some(other) = lookup.get(&(col + dc, row + dr)) {
                        graph.add_edge(&cell.id, Relation::Adjacent, &other.id);
                    }
                }
            }
        }
    }

    graph
}

/// An occupant vote carrying a local-frame position, ready for cell linking.
#[derive(Debug, Clone)]
pub struct LocatedVote {
    pub user_id: String,
    pub timestamp: i64,
    pub level_index: i32,
    pub position: Point,
    pub label: PreferenceLabel,
    pub heart_rate: f64,
    pub near_body_temp: f64,
}

/// Links votes and occupants into the graph.
///
/// Each vote becomes a `Feedback` node with a VOTED_AT edge to its nearest
/// cell (k = 1, equidistant ties resolved to the smaller cell id). Each
/// occupant becomes an `Occupant` node with a BELONGS_TO_PERSONALITY edge to
/// its `ThermalComfortPersonality` node. Returns the per-vote feedback
/// records with their linked cell ids, in input order.
pub fn link_feedback(
    graph: &mut AttributedGraph,
    votes: &[LocatedVote],
    personalities: &BTreeMap<String, usize>,
    indices: &BTreeMap<i32, KnnIndex>,
) -> Result<Vec<FeedbackRecord>, GraphError> {
    let mut records = Vec::with_capacity(votes.len());
    for (i, vote) in votes.iter().enumerate() {
        let index = indices
            .get(&vote.level_index)
            .ok_or(GraphError::NoCellOnLevel(vote.level_index))?;
        let hits = knn_query(index, vote.position, 1)?;
        let (cell_id, _) = hits
            .into_iter()
            .next()
            .ok_or(GraphError::NoCellOnLevel(vote.level_index))?;

        let feedback_id = format!("feedback:{i:05}");
        graph.add_node(&feedback_id, "Feedback");
        graph.set_attr(&feedback_id, "user", vote.user_id.clone());
        graph.set_attr(&feedback_id, "timestamp", vote.timestamp.to_string());
        graph.set_attr(&feedback_id, "label", vote.label.as_str().to_string());
        graph.add_edge(&feedback_id, Relation::VotedAt, &cell_id);

        records.push(FeedbackRecord {
            user_id: vote.user_id.clone(),
            timestamp: vote.timestamp,
            cell_id,
            label: vote.label,
            heart_rate: vote.heart_rate,
            near_body_temp: vote.near_body_temp,
        });
    }
    for (user, personality) in personalities {
        if !votes.iter().any(|v| &v.user_id == user) {
            continue;
        }
        let occupant_id = format!("occupant:{user}");
        let personality_id = format!("personality:{personality:02}");
        graph.add_node(&occupant_id, "Occupant");
        graph.add_node(&personality_id, "ThermalComfortPersonality");
        graph.add_edge(&occupant_id, Relation::BelongsToPersonality, &personality_id);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{
        AoiParams, CoordinateTransform, Level, ObjectKind, Space, SpatialObject, VentilationMode,
    };

    fn square_space(id: &str, level_id: &str, side: f64, mode: VentilationMode) -> Space {
        Space {
            id: id.into(),
            name: id.into(),
            level_id: level_id.into(),
            footprint: vec![
                Point::new(0.0, 0.0),
                Point::new(side, 0.0),
                Point::new(side, side),
                Point::new(0.0, side),
            ],
            ventilation_mode: mode,
            setpoint_c: None,
        }
    }

    fn one_space_model(side: f64) -> SpatialModel {
        SpatialModel {
            transform: CoordinateTransform::new(1.3, 103.8, 0.0),
            levels: vec![Level {
                id: "L1".into(),
                name: "Level 1".into(),
                index: 1,
                elevation_m: 0.0,
            }],
            spaces: vec![square_space("S1", "L1", side, VentilationMode::HC)],
            objects: vec![],
        }
    }

    #[test]
    fn aligned_square_yields_exact_cell_count() {
        let model = one_space_model(10.0);
        let (cells, warnings) = discretize(&model, 1.0).unwrap();
        assert_eq!(cells.len(), 100);
        assert!(warnings.is_empty());
        assert_eq!(cells[0].id, "C1010001");
        assert_eq!(cells[0].center, Point::new(0.5, 0.5));
        assert_eq!(cells[99].id, "C1010100");
    }

    #[test]
    fn l_shape_count_matches_brute_force_lattice_scan() {
        let mut model = one_space_model(10.0);
        model.spaces[0].footprint = vec![
            Point::new(0.0, 0.0),
            Point::new(12.0, 0.0),
            Point::new(12.0, 5.0),
            Point::new(5.0, 5.0),
            Point::new(5.0, 11.0),
            Point::new(0.0, 11.0),
        ];
        let cell = 1.0;
        let (cells, _) = discretize(&model, cell).unwrap();

        // Independent scan: ray-cast every lattice center over the bbox.
        let footprint = &model.spaces[0].footprint;
        let mut expected = 0usize;
        for row in 0..11 {
            for col in 0..12 {
                let p = Point::new(col as f64 + 0.5, row as f64 + 0.5);
                if geometry::point_in_polygon(p, footprint) {
                    expected += 1;
                }
            }
        }
        assert_eq!(cells.len(), expected);
        assert_eq!(expected, 12 * 5 + 5 * 6);
    }

    #[test]
    fn tiny_space_warns_and_yields_zero_cells() {
        let model = one_space_model(0.3);
        let (cells, warnings) = discretize(&model, 1.0).unwrap();
        assert!(cells.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn fan_disk_smaller_than_lattice_step_touches_one_cell() {
        let mut model = one_space_model(10.0);
        model.objects.push(SpatialObject {
            id: "FAN1".into(),
            kind: ObjectKind::CeilingFan,
            space_id: "S1".into(),
            position: [3.5, 3.5, 2.8], // exactly a cell center
            aoi: Some(AoiParams::Fan { radius_m: 0.9 }),
        });
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let graph = build_graph(&model, &cells, &GraphOptions::default());
        let aoi_edges: Vec<&Edge> = graph
            .edges()
            .iter()
            .filter(|e| e.relation == Relation::InAoiOf)
            .collect();
        assert_eq!(aoi_edges.len(), 1);
        assert_eq!(graph.node(&aoi_edges[0].src).unwrap().label, "Cell");
    }

    #[test]
    fn nv_spaces_share_one_attribute_node() {
        let mut model = one_space_model(4.0);
        model.spaces[0].ventilation_mode = VentilationMode::NV;
        for i in 2..=3 {
            let mut s = square_space(&format!("S{i}"), "L1", 4.0, VentilationMode::NV);
            s.footprint = s
                .footprint
                .iter()
                .map(|p| Point::new(p.x + 6.0 * (i - 1) as f64, p.y))
                .collect();
            model.spaces.push(s);
        }
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let graph = build_graph(&model, &cells, &GraphOptions::default());
        assert_eq!(graph.degree("attr:NV"), 3);
    }

    #[test]
    fn adjacency_edges_span_exactly_one_cell_size_within_a_space() {
        let mut model = one_space_model(6.0);
        let mut other = square_space("S2", "L1", 6.0, VentilationMode::NV);
        other.footprint = other
            .footprint
            .iter()
            .map(|p| Point::new(p.x + 6.0, p.y)) // flush against S1
            .collect();
        model.spaces.push(other);
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let graph = build_graph(&model, &cells, &GraphOptions::default());
        let by_id: HashMap<&str, &Cell> = cells.iter().map(|c| (c.id.as_str(), c)).collect();
        let mut adjacent = 0usize;
        for e in graph.edges() {
            if e.relation != Relation::Adjacent {
                continue;
            }
            adjacent += 1;
            let a = by_id[e.src.as_str()];
            let b = by_id[e.dst.as_str()];
            assert_eq!(a.space_id, b.space_id);
            assert!((a.center.distance(b.center) - 1.0).abs() < 1e-9);
        }
        // Two 6x6 grids: 2 * (5*6 + 6*5) undirected neighbor pairs.
        assert_eq!(adjacent, 2 * 60);
    }

    #[test]
    fn ablation_flag_removes_cell_adjacency() {
        let model = one_space_model(5.0);
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let options = GraphOptions {
            include_cell_adjacency: false,
            ..GraphOptions::default()
        };
        let graph = build_graph(&model, &cells, &options);
        assert!(graph
            .edges()
            .iter()
            .all(|e| e.relation != Relation::Adjacent));
    }

    #[test]
    fn aoi_edges_match_brute_force_membership_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut model = one_space_model(12.0);
        for i in 0..4 {
            model.objects.push(SpatialObject {
                id: format!("FAN{i}"),
                kind: ObjectKind::CeilingFan,
                space_id: "S1".into(),
                position: [rng.gen_range(1.0..11.0), rng.gen_range(1.0..11.0), 2.8],
                aoi: Some(AoiParams::Fan {
                    radius_m: rng.gen_range(0.5..2.5),
                }),
            });
        }
        for i in 0..2 {
            let x = rng.gen_range(2.0..10.0);
            model.objects.push(SpatialObject {
                id: format!("WIN{i}"),
                kind: ObjectKind::Window,
                space_id: "S1".into(),
                position: [x, 0.0, 1.5],
                aoi: Some(AoiParams::Window {
                    start: Point::new(x - 1.5, 0.0),
                    end: Point::new(x + 1.5, 0.0),
                    depth_m: Some(rng.gen_range(1.0..3.0)),
                }),
            });
        }
        model.objects.push(SpatialObject {
            id: "VAV0".into(),
            kind: ObjectKind::VavDiffuser,
            space_id: "S1".into(),
            position: [6.0, 6.0, 2.6],
            aoi: Some(AoiParams::Diffuser {
                direction_deg: rng.gen_range(0.0..360.0),
                throw_m: rng.gen_range(1.0..4.0),
                spread_deg: rng.gen_range(30.0..120.0),
            }),
        });

        let (cells, _) = discretize(&model, 1.0).unwrap();
        let graph = build_graph(&model, &cells, &GraphOptions::default());
        let got: BTreeSet<(String, String)> = graph
            .edges()
            .iter()
            .filter(|e| e.relation == Relation::InAoiOf)
            .map(|e| (e.src.clone(), e.dst.clone()))
            .collect();

        // Brute-force oracle over every (cell, object) pair with direct
        // scalar membership math.
        let mut expected: BTreeSet<(String, String)> = BTreeSet::new();
        for cell in &cells {
            let (px, py) = (cell.center.x, cell.center.y);
            for obj in &model.objects {
                let inside = match &obj.aoi {
                    Some(AoiParams::Fan { radius_m }) => {
                        let dx = px - obj.position[0];
                        let dy = py - obj.position[1];
                        dx * dx + dy * dy <= radius_m * radius_m
                    }
                    Some(AoiParams::Window { start, end, depth_m }) => {
                        let depth = depth_m.unwrap();
                        let (ex, ey) = (end.x - start.x, end.y - start.y);
                        let len2 = ex * ex + ey * ey;
                        let t = ((px - start.x) * ex + (py - start.y) * ey) / len2;
                        let perp =
                            ((px - start.x) * ey - (py - start.y) * ex).abs() / len2.sqrt();
                        (0.0..=1.0).contains(&t) && perp <= depth
                    }
                    Some(AoiParams::Diffuser {
                        direction_deg,
                        throw_m,
                        spread_deg,
                    }) => {
                        let dx = px - obj.position[0];
                        let dy = py - obj.position[1];
                        let d = (dx * dx + dy * dy).sqrt();
                        if d > *throw_m {
                            false
                        } else if d == 0.0 {
                            true
                        } else {
                            let dir = direction_deg.to_radians();
                            let cos_angle = (dx * dir.cos() + dy * dir.sin()) / d;
                            cos_angle >= (spread_deg / 2.0).to_radians().cos() - 1e-12
                        }
                    }
                    None => false,
                };
                if inside {
                    expected.insert((cell.id.clone(), obj.id.clone()));
                }
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn build_graph_is_deterministic() {
        let mut model = one_space_model(8.0);
        model.objects.push(SpatialObject {
            id: "FAN1".into(),
            kind: ObjectKind::CeilingFan,
            space_id: "S1".into(),
            position: [4.0, 4.0, 2.8],
            aoi: Some(AoiParams::Fan { radius_m: 1.4 }),
        });
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let a = build_graph(&model, &cells, &GraphOptions::default());
        let b = build_graph(&model, &cells, &GraphOptions::default());
        assert_eq!(a.export_adjacency_list(), b.export_adjacency_list());
        assert_eq!(a.export_census_csv(), b.export_census_csv());
    }

    #[test]
    fn adjacency_list_round_trips_topology() {
        let model = one_space_model(4.0);
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let graph = build_graph(&model, &cells, &GraphOptions::default());
        let text = graph.export_adjacency_list();
        let back = AttributedGraph::from_adjacency_list(&text).unwrap();
        assert_eq!(back.node_count(), graph.node_count());
        assert_eq!(back.edge_count(), graph.edge_count());
        assert_eq!(back.export_adjacency_list(), text);
    }

    #[test]
    fn vote_at_cell_center_links_to_that_cell() {
        let model = one_space_model(4.0);
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let mut graph = build_graph(&model, &cells, &GraphOptions::default());
        let items: Vec<(String, Point)> =
            cells.iter().map(|c| (c.id.clone(), c.center)).collect();
        let mut indices = BTreeMap::new();
        indices.insert(1, knn_build(&items, KnnConfig::default()));
        let votes = vec![LocatedVote {
            user_id: "u1".into(),
            timestamp: 1000,
            level_index: 1,
            position: cells[5].center,
            label: PreferenceLabel::NoPreference,
            heart_rate: 72.0,
            near_body_temp: 31.0,
        }];
        let personalities = BTreeMap::from([("u1".to_string(), 3usize)]);
        let records = link_feedback(&mut graph, &votes, &personalities, &indices).unwrap();
        assert_eq!(records[0].cell_id, cells[5].id);
        assert!(graph.has_edge("feedback:00000", &cells[5].id, Relation::VotedAt));
        assert!(graph.has_edge("occupant:u1", "personality:03", Relation::BelongsToPersonality));
    }

    #[test]
    fn equidistant_vote_links_to_smaller_cell_id() {
        let mut model = one_space_model(1.0);
        model.spaces[0].footprint = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let (cells, _) = discretize(&model, 1.0).unwrap();
        assert_eq!(cells.len(), 2);
        let mut graph = build_graph(&model, &cells, &GraphOptions::default());
        let items: Vec<(String, Point)> =
            cells.iter().map(|c| (c.id.clone(), c.center)).collect();
        let mut indices = BTreeMap::new();
        indices.insert(1, knn_build(&items, KnnConfig::default()));
        let votes = vec![LocatedVote {
            user_id: "u1".into(),
            timestamp: 0,
            level_index: 1,
            position: Point::new(1.0, 0.5), // equidistant to both centers
            label: PreferenceLabel::PreferCooler,
            heart_rate: 70.0,
            near_body_temp: 30.0,
        }];
        let records = link_feedback(&mut graph, &votes, &BTreeMap::new(), &indices).unwrap();
        assert_eq!(records[0].cell_id, "C1010001");
    }

    #[test]
    fn missing_level_is_an_error() {
        let model = one_space_model(2.0);
        let (cells, _) = discretize(&model, 1.0).unwrap();
        let mut graph = build_graph(&model, &cells, &GraphOptions::default());
        let votes = vec![LocatedVote {
            user_id: "u1".into(),
            timestamp: 0,
            level_index: 7,
            position: Point::new(0.5, 0.5),
            label: PreferenceLabel::PreferWarmer,
            heart_rate: 70.0,
            near_body_temp: 30.0,
        }];
        assert!(matches!(
            link_feedback(&mut graph, &votes, &BTreeMap::new(), &BTreeMap::new()),
            Err(GraphError::NoCellOnLevel(7))
        ));
    }
}
