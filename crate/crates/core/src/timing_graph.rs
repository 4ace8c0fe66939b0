//! The pin-level timing graph.
//!
//! Every cell pin and every design port is a node. Net edges run from a
//! net's driver to each of its sinks; cell edges run from a cell input pin
//! to an output pin of the same instance, one per Liberty timing arc. The
//! "forward" graph used for propagation is the union of both edge kinds in
//! those directions; backward traversal uses the same edges reversed.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corner::{Corner, Quad};
use crate::error::{Error, Result};
use crate::liberty::{LibrarySet, Lut, PinDirection, TableSet};
use crate::physical::{resolve_net_drivers, Connection, NetDiagnostic, PhysicalDesign, PortDirection};
use crate::sdf::{DelayLabels, PartialQuad, Quantity};

/// `(from, to, edge)` entry of an adjacency list before compression.
type Adjacency = (NodeId, NodeId, EdgeRef);

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Port { direction: PortDirection },
    Pin { instance: u32, pin: String },
}

/// Whether a pin receives (fanin) or drives (fanout) its net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FanDirection {
    Fanin,
    Fanout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinNode {
    pub name: String,
    pub kind: NodeKind,
    pub is_primary_io: bool,
    /// Distances to the die box edges in microns: left, bottom, right, top.
    pub boundary_distances: [f64; 4],
    /// ER, EF, LR, LF.
    pub capacitance: Quad,
    pub direction: FanDirection,
    pub is_clock_pin: bool,
    /// Microns. Pins share their instance's origin.
    pub location: [f64; 2],
}

impl PinNode {
    pub fn instance(&self) -> Option<u32> {
        match self.kind {
            NodeKind::Pin { instance, .. } => Some(instance),
            NodeKind::Port { .. } => None,
        }
    }

    pub fn port_direction(&self) -> Option<PortDirection> {
        match self.kind {
            NodeKind::Port { direction } => Some(direction),
            NodeKind::Pin { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub cell_class: String,
    pub pins: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetEdge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Manhattan distance in microns.
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellEdge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Index into [`TimingGraph::arc_tables`].
    pub tables: u32,
    /// One flag per table slot (early cell_rise .. late fall_transition).
    pub valid: [bool; 8],
}

impl CellEdge {
    /// True when all eight tables are present.
    pub fn fully_valid(&self) -> bool {
        self.valid.iter().all(|v| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeRef {
    Net(u32),
    Cell(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RemovedEdge {
    Net(NetEdge),
    Cell(CellEdge),
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Csr {
    offsets: Vec<u32>,
    items: Vec<EdgeRef>,
}

impl Csr {
    fn get(&self, n: NodeId) -> &[EdgeRef] {
        let n = n as usize;
        &self.items[self.offsets[n] as usize..self.offsets[n + 1] as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingGraph {
    pub nodes: Vec<PinNode>,
    pub instances: Vec<Instance>,
    pub net_edges: Vec<NetEdge>,
    pub cell_edges: Vec<CellEdge>,
    /// Deduplicated, resampled table sets referenced by cell edges.
    pub arc_tables: Vec<TableSet>,
    pub lut_shape: (usize, usize),
    /// Die box in microns: x0, y0, x1, y1.
    pub die: [f64; 4],
    pub removed_edges: Vec<RemovedEdge>,
    /// Nodes with no forward fanout, ascending.
    pub endpoints: Vec<NodeId>,
    /// Topological level per node; empty until [`TimingGraph::compute_levels`].
    pub levels: Vec<u32>,
    /// Nodes grouped by level, ascending id within a level.
    pub level_buckets: Vec<Vec<NodeId>>,
    fanin: Csr,
    fanout: Csr,
    by_name: HashMap<String, NodeId>,
}

fn table_key(t: &TableSet) -> Vec<u64> {
    let mut key = Vec::new();
    for slot in t {
        match slot {
            None => key.push(u64::MAX),
            Some(l) => {
                key.push(l.rows() as u64);
                key.push(l.cols() as u64);
                key.extend(
                    l.index1()
                        .iter()
                        .chain(l.index2())
                        .chain(l.values())
                        .map(|v| v.to_bits()),
                );
            }
        }
    }
    key
}

#[derive(Default)]
struct TableInterner {
    ids: HashMap<Vec<u64>, u32>,
    tables: Vec<TableSet>,
}

impl TableInterner {
    fn intern(&mut self, t: TableSet) -> u32 {
        let key = table_key(&t);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.tables.len() as u32;
        self.ids.insert(key, id);
        self.tables.push(t);
        id
    }
}

fn boundary_distances(loc: [f64; 2], die: [f64; 4]) -> [f64; 4] {
    let x = loc[0].clamp(die[0], die[2]);
    let y = loc[1].clamp(die[1], die[3]);
    [x - die[0], y - die[1], die[2] - x, die[3] - y]
}

impl TimingGraph {
    /// Build the raw graph of a driver-resolved design. Nets without a
    /// resolved driver contribute no edges. Cycles are not removed.
    pub fn build(design: &PhysicalDesign, libs: &LibrarySet, lut_shape: (usize, usize)) -> Result<Self> {
        if lut_shape.0 == 0 || lut_shape.1 == 0 {
            return Err(Error::Argument("LUT shape must be positive".into()));
        }
        let mut unresolved: BTreeMap<&str, &str> = BTreeMap::new();
        for c in &design.components {
            if libs.cell(&c.cell_class).is_none() {
                unresolved.insert(&c.cell_class, libs.missing_reason(&c.cell_class).unwrap_or(""));
            }
        }
        if !unresolved.is_empty() {
            let list: Vec<String> = unresolved.iter().map(|(c, r)| format!("{c} ({r})")).collect();
            return Err(Error::Graph(format!("unresolved cell classes: {}", list.join(", "))));
        }

        let dbu = design.dbu_per_micron;
        let um = |p: crate::physical::Point| [p.x as f64 / dbu, p.y as f64 / dbu];
        let d = design.die;
        let die = [
            d.lo.x as f64 / dbu,
            d.lo.y as f64 / dbu,
            d.hi.x as f64 / dbu,
            d.hi.y as f64 / dbu,
        ];

        let mut nodes = Vec::new();
        let mut by_name = HashMap::new();
        for p in &design.ports {
            let location = um(p.location);
            let id = nodes.len() as NodeId;
            if by_name.insert(p.name.clone(), id).is_some() {
                return Err(Error::Graph(format!("port {} declared twice", p.name)));
            }
            nodes.push(PinNode {
                name: p.name.clone(),
                kind: NodeKind::Port { direction: p.direction },
                is_primary_io: true,
                boundary_distances: boundary_distances(location, die),
                capacitance: [0.0; 4],
                direction: match p.direction {
                    PortDirection::Input | PortDirection::Inout => FanDirection::Fanout,
                    PortDirection::Output => FanDirection::Fanin,
                },
                is_clock_pin: false,
                location,
            });
        }

        let mut interner = TableInterner::default();
        let mut class_tables: HashMap<&str, Vec<u32>> = HashMap::new();
        let mut instances = Vec::with_capacity(design.components.len());
        let mut cell_edges = Vec::new();
        for (k, c) in design.components.iter().enumerate() {
            let cell = libs.cell(&c.cell_class).expect("checked above");
            let location = um(c.location);
            let mut pins = Vec::new();
            let mut local: HashMap<&str, NodeId> = HashMap::new();
            for lp in cell.pins.iter().filter(|p| p.direction != PinDirection::Internal) {
                let id = nodes.len() as NodeId;
                let name = format!("{}/{}", c.instance, lp.name);
                if by_name.insert(name.clone(), id).is_some() {
                    return Err(Error::Graph(format!("duplicate node name {name}")));
                }
                local.insert(lp.name.as_str(), id);
                pins.push(id);
                nodes.push(PinNode {
                    name,
                    kind: NodeKind::Pin {
                        instance: k as u32,
                        pin: lp.name.clone(),
                    },
                    is_primary_io: false,
                    boundary_distances: boundary_distances(location, die),
                    capacitance: lp.capacitance,
                    direction: if lp.direction == PinDirection::Output {
                        FanDirection::Fanout
                    } else {
                        FanDirection::Fanin
                    },
                    is_clock_pin: lp.is_clock,
                    location,
                });
            }
            if !class_tables.contains_key(c.cell_class.as_str()) {
                let mut ids = Vec::with_capacity(cell.arcs.len());
                for arc in &cell.arcs {
                    let mut t: TableSet = Default::default();
                    for (slot, src) in t.iter_mut().zip(&arc.tables) {
                        *slot = src
                            .as_ref()
                            .map(|l| l.interpolate(lut_shape.0, lut_shape.1))
                            .transpose()?;
                    }
                    ids.push(interner.intern(t));
                }
                class_tables.insert(c.cell_class.as_str(), ids);
            }
            let ids = &class_tables[c.cell_class.as_str()];
            for (arc, &tid) in cell.arcs.iter().zip(ids) {
                let (Some(&src), Some(&dst)) =
                    (local.get(arc.related_pin.as_str()), local.get(arc.output_pin.as_str()))
                else {
                    continue;
                };
                let valid = std::array::from_fn(|i| arc.tables[i].is_some());
                cell_edges.push(CellEdge {
                    src,
                    dst,
                    tables: tid,
                    valid,
                });
            }
            instances.push(Instance {
                name: c.instance.clone(),
                cell_class: c.cell_class.clone(),
                pins,
            });
        }

        let mut net_edges = Vec::new();
        let node_of = |conn: &Connection, net: &str| -> Result<NodeId> {
            by_name
                .get(&conn.node_name())
                .copied()
                .ok_or_else(|| Error::Graph(format!("net {net}: unknown pin {}", conn.node_name())))
        };
        for net in &design.nets {
            let Some(di) = net.driver else { continue };
            let src = node_of(&net.connections[di], &net.name)?;
            for (i, conn) in net.connections.iter().enumerate() {
                if i == di {
                    continue;
                }
                let dst = node_of(conn, &net.name)?;
                if dst == src {
                    continue;
                }
                let (a, b) = (nodes[src as usize].location, nodes[dst as usize].location);
                net_edges.push(NetEdge {
                    src,
                    dst,
                    length: (a[0] - b[0]).abs() + (a[1] - b[1]).abs(),
                });
                nodes[dst as usize].direction = FanDirection::Fanin;
            }
            nodes[src as usize].direction = FanDirection::Fanout;
        }

        let mut g = TimingGraph {
            nodes,
            instances,
            net_edges,
            cell_edges,
            arc_tables: interner.tables,
            lut_shape,
            die,
            removed_edges: Vec::new(),
            endpoints: Vec::new(),
            levels: Vec::new(),
            level_buckets: Vec::new(),
            fanin: Csr::default(),
            fanout: Csr::default(),
            by_name,
        };
        g.rebuild_adjacency();
        Ok(g)
    }

    fn rebuild_adjacency(&mut self) {
        let n = self.nodes.len();
        let mut outs: Vec<Adjacency> = Vec::with_capacity(self.net_edges.len() + self.cell_edges.len());
        for (i, e) in self.net_edges.iter().enumerate() {
            outs.push((e.src, e.dst, EdgeRef::Net(i as u32)));
        }
        for (i, e) in self.cell_edges.iter().enumerate() {
            outs.push((e.src, e.dst, EdgeRef::Cell(i as u32)));
        }
        let csr = |key: &dyn Fn(&Adjacency) -> Adjacency, list: &[Adjacency]| {
            let mut sorted: Vec<Adjacency> = list.iter().map(key).collect();
            sorted.sort_unstable();
            let mut offsets = vec![0u32; n + 1];
            for (a, _, _) in &sorted {
                offsets[*a as usize + 1] += 1;
            }
            for i in 0..n {
                offsets[i + 1] += offsets[i];
            }
            Csr {
                offsets,
                items: sorted.into_iter().map(|(_, _, e)| e).collect(),
            }
        };
        self.fanout = csr(&|&(s, d, e)| (s, d, e), &outs);
        self.fanin = csr(&|&(s, d, e)| (d, s, e), &outs);
        self.endpoints = (0..n as NodeId).filter(|&v| self.fanout.get(v).is_empty()).collect();
        self.levels.clear();
        self.level_buckets.clear();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &PinNode {
        &self.nodes[id as usize]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    /// Forward out-edges of `n`, ordered by destination id.
    pub fn fanout(&self, n: NodeId) -> &[EdgeRef] {
        self.fanout.get(n)
    }

    /// Forward in-edges of `n`, ordered by source id.
    pub fn fanin(&self, n: NodeId) -> &[EdgeRef] {
        self.fanin.get(n)
    }

    pub fn edge_ends(&self, e: EdgeRef) -> (NodeId, NodeId) {
        match e {
            EdgeRef::Net(i) => {
                let x = &self.net_edges[i as usize];
                (x.src, x.dst)
            }
            EdgeRef::Cell(i) => {
                let x = &self.cell_edges[i as usize];
                (x.src, x.dst)
            }
        }
    }

    pub fn tables(&self, e: &CellEdge) -> &TableSet {
        &self.arc_tables[e.tables as usize]
    }

    pub fn table(&self, e: &CellEdge, slot: usize) -> Option<&Lut> {
        self.arc_tables[e.tables as usize][slot].as_ref()
    }

    /// First clock pin of an instance, if any.
    pub fn clock_pin(&self, instance: u32) -> Option<NodeId> {
        self.instances[instance as usize]
            .pins
            .iter()
            .copied()
            .find(|&p| self.node(p).is_clock_pin)
    }

    /// Load seen by each pin: summed sink capacitance of the net it drives.
    pub fn pin_loads(&self) -> Vec<Quad> {
        let mut loads = vec![[0.0; 4]; self.nodes.len()];
        for e in &self.net_edges {
            let cap = self.nodes[e.dst as usize].capacitance;
            let l = &mut loads[e.src as usize];
            for c in Corner::ALL {
                l[c.index()] += cap[c.index()];
            }
        }
        loads
    }

    /// Break every forward cycle. Depth-first search runs from the
    /// zero-in-degree nodes in id order (then from any unvisited node, lowest
    /// id first) and back edges are cut. A back edge that is a net edge
    /// would orphan its sink, so the nearest cell edge on the same cycle is
    /// cut instead when one exists. Returns the number of edges removed.
    pub fn remove_cycles(&mut self) -> usize {
        let before = self.removed_edges.len();
        loop {
            let cut = self.find_cuts();
            if cut.is_empty() {
                break;
            }
            let mut dead_net = vec![false; self.net_edges.len()];
            let mut dead_cell = vec![false; self.cell_edges.len()];
            for e in cut {
                match e {
                    EdgeRef::Net(i) => dead_net[i as usize] = true,
                    EdgeRef::Cell(i) => dead_cell[i as usize] = true,
                }
            }
            let mut i = 0;
            self.net_edges.retain(|e| {
                let keep = !dead_net[i];
                i += 1;
                if !keep {
                    self.removed_edges.push(RemovedEdge::Net(*e));
                }
                keep
            });
            let mut i = 0;
            self.cell_edges.retain(|e| {
                let keep = !dead_cell[i];
                i += 1;
                if !keep {
                    self.removed_edges.push(RemovedEdge::Cell(*e));
                }
                keep
            });
            self.rebuild_adjacency();
        }
        self.removed_edges.len() - before
    }

    /// One DFS pass. Returns edges to cut; stops early after a substitution
    /// so the caller re-searches the modified graph.
    fn find_cuts(&self) -> Vec<EdgeRef> {
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let n = self.nodes.len();
        let mut color = vec![WHITE; n];
        let mut cuts = Vec::new();
        let roots = (0..n as NodeId)
            .filter(|&v| self.fanin(v).is_empty())
            .chain(0..n as NodeId);
        // frame: (node, next out-edge position, edge that entered the node)
        let mut stack: Vec<(NodeId, usize, Option<EdgeRef>)> = Vec::new();
        for root in roots {
            if color[root as usize] != WHITE {
                continue;
            }
            color[root as usize] = GRAY;
            stack.push((root, 0, None));
            while let Some(top) = stack.last_mut() {
                let (u, pos) = (top.0, top.1);
                let outs = self.fanout(u);
                if pos == outs.len() {
                    color[u as usize] = BLACK;
                    stack.pop();
                    continue;
                }
                top.1 += 1;
                let e = outs[pos];
                let v = self.edge_ends(e).1;
                match color[v as usize] {
                    WHITE => {
                        color[v as usize] = GRAY;
                        stack.push((v, 0, Some(e)));
                    }
                    GRAY => match e {
                        EdgeRef::Cell(_) => cuts.push(e),
                        EdgeRef::Net(_) => {
                            let start = stack.iter().rposition(|f| f.0 == v).unwrap_or(0);
                            let sub = stack[start + 1..]
                                .iter()
                                .rev()
                                .find_map(|f| f.2.filter(|x| matches!(x, EdgeRef::Cell(_))));
                            match sub {
                                Some(c) => {
                                    cuts.push(c);
                                    return cuts;
                                }
                                None => cuts.push(e),
                            }
                        }
                    },
                    _ => {}
                }
            }
        }
        cuts
    }

    /// Topological levels: sources are level 0, every other node is one more
    /// than its deepest forward predecessor. Also fills the level buckets.
    pub fn compute_levels(&mut self) -> Result<()> {
        let n = self.nodes.len();
        let mut indeg: Vec<u32> = (0..n as NodeId).map(|v| self.fanin(v).len() as u32).collect();
        let mut level = vec![0u32; n];
        let mut queue: std::collections::VecDeque<NodeId> =
            (0..n as NodeId).filter(|&v| indeg[v as usize] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &e in self.fanout(u) {
                let v = self.edge_ends(e).1 as usize;
                level[v] = level[v].max(level[u as usize] + 1);
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v as NodeId);
                }
            }
        }
        if seen != n {
            return Err(Error::Internal(format!(
                "levelization found a cycle through {} node(s); remove cycles first",
                n - seen
            )));
        }
        let depth = level.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut buckets = vec![Vec::new(); depth];
        for (v, &l) in level.iter().enumerate() {
            buckets[l as usize].push(v as NodeId);
        }
        self.levels = level;
        self.level_buckets = buckets;
        Ok(())
    }

    pub fn max_level(&self) -> Option<u32> {
        self.levels.iter().copied().max()
    }

    pub fn is_leveled(&self) -> bool {
        self.levels.len() == self.nodes.len()
    }
}

/// Resolve drivers, build, remove cycles and levelize.
pub fn build_timing_graph(
    design: &PhysicalDesign,
    libs: &LibrarySet,
    lut_shape: (usize, usize),
) -> Result<(TimingGraph, Vec<NetDiagnostic>)> {
    let mut design = design.clone();
    let diags = resolve_net_drivers(&mut design, libs)?;
    let mut g = TimingGraph::build(&design, libs, lut_shape)?;
    g.remove_cycles();
    g.compute_levels()?;
    Ok((g, diags))
}

pub const GRAPH_SCHEMA: &str = "prslack.timing-graph";
pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// Column names of [`GraphDocument::node_features`].
pub const NODE_FEATURE_COLUMNS: [&str; 10] = [
    "is_primary_io",
    "dist_left",
    "dist_bottom",
    "dist_right",
    "dist_top",
    "cap_early_rise",
    "cap_early_fall",
    "cap_late_rise",
    "cap_late_fall",
    "direction",
];

/// Table slot order of [`CellEdgeRecord::tables`].
pub const TABLE_SLOT_NAMES: [&str; 8] = [
    "early_cell_rise",
    "early_cell_fall",
    "early_rise_transition",
    "early_fall_transition",
    "late_cell_rise",
    "late_cell_fall",
    "late_rise_transition",
    "late_fall_transition",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTable {
    pub index1: Vec<f64>,
    pub index2: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: String,
    /// `input`/`output`/`inout` for ports.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub port: Option<PortDirection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub instance: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pin: Option<String>,
    pub is_clock_pin: bool,
    pub location: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEdgeRecord {
    pub src: NodeId,
    pub dst: NodeId,
    pub valid: [bool; 8],
    /// Eight tables in [`TABLE_SLOT_NAMES`] order; invalid slots are zero-filled.
    pub tables: Vec<FlatTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub name: String,
    pub cell_class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSection {
    /// Per node, ER/EF/LR/LF; `null` where unlabeled.
    pub at: Vec<PartialQuad>,
    pub slew: Vec<PartialQuad>,
    pub rat: Vec<PartialQuad>,
    /// Per cell edge.
    pub cell_delay: Vec<Option<Quad>>,
    /// Per net edge.
    pub net_delay: Vec<Option<Quad>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema: String,
    pub version: u32,
    pub lut_shape: [usize; 2],
    pub die: [f64; 4],
    pub node_feature_columns: Vec<String>,
    pub table_slots: Vec<String>,
    pub nodes: Vec<NodeRecord>,
    pub node_features: Vec<[f64; 10]>,
    pub instances: Vec<InstanceRecord>,
    /// `[src, dst, length]`.
    pub net_edges: Vec<(NodeId, NodeId, f64)>,
    pub cell_edges: Vec<CellEdgeRecord>,
    pub removed_net_edges: Vec<(NodeId, NodeId, f64)>,
    pub removed_cell_edges: Vec<CellEdgeRecord>,
    pub endpoints: Vec<NodeId>,
    pub levels: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<LabelSection>,
}

impl GraphDocument {
    /// Compact JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad(format!("malformed document: {e}")))
    }
}

impl TimingGraph {
    fn edge_record(&self, e: &CellEdge) -> CellEdgeRecord {
        let (r, c) = self.lut_shape;
        let tables = self
            .tables(e)
            .iter()
            .map(|t| match t {
                Some(l) => FlatTable {
                    index1: l.index1().to_vec(),
                    index2: l.index2().to_vec(),
                    values: l.values().to_vec(),
                },
                None => FlatTable {
                    index1: vec![0.0; r],
                    index2: vec![0.0; c],
                    values: vec![0.0; r * c],
                },
            })
            .collect();
        CellEdgeRecord {
            src: e.src,
            dst: e.dst,
            valid: e.valid,
            tables,
        }
    }
}

/// Export the graph (and optionally labels) as an interchange document.
/// Label entries for pins or arcs absent from the graph are returned as
/// warnings.
pub fn export_graph(g: &TimingGraph, labels: Option<&DelayLabels>) -> (GraphDocument, Vec<String>) {
    let mut warnings = Vec::new();
    let nodes = g
        .nodes
        .iter()
        .map(|n| NodeRecord {
            name: n.name.clone(),
            port: n.port_direction(),
            instance: n.instance(),
            pin: match &n.kind {
                NodeKind::Pin { pin, .. } => Some(pin.clone()),
                NodeKind::Port { .. } => None,
            },
            is_clock_pin: n.is_clock_pin,
            location: n.location,
        })
        .collect();
    let node_features = g
        .nodes
        .iter()
        .map(|n| {
            let b = n.boundary_distances;
            let c = n.capacitance;
            [
                if n.is_primary_io { 1.0 } else { 0.0 },
                b[0],
                b[1],
                b[2],
                b[3],
                c[0],
                c[1],
                c[2],
                c[3],
                match n.direction {
                    FanDirection::Fanin => 0.0,
                    FanDirection::Fanout => 1.0,
                },
            ]
        })
        .collect();
    let (mut removed_net_edges, mut removed_cell_edges) = (Vec::new(), Vec::new());
    for r in &g.removed_edges {
        match r {
            RemovedEdge::Net(e) => removed_net_edges.push((e.src, e.dst, e.length)),
            RemovedEdge::Cell(e) => removed_cell_edges.push(g.edge_record(e)),
        }
    }
    let labels = labels.map(|l| {
        let mut per_node = |q: Quantity| {
            let map = l.pin_map(q);
            for pin in map.keys() {
                if g.node_by_name(pin).is_none() {
                    warnings.push(format!("label pin {pin} ({}) is not in the graph", q.token()));
                }
            }
            g.nodes
                .iter()
                .map(|n| map.get(&n.name).copied().unwrap_or([None; 4]))
                .collect::<Vec<_>>()
        };
        let at = per_node(Quantity::At);
        let slew = per_node(Quantity::Slew);
        let rat = per_node(Quantity::Rat);
        let cell_delay = g
            .cell_edges
            .iter()
            .map(|e| {
                let (NodeKind::Pin { instance, pin: a }, NodeKind::Pin { pin: b, .. }) =
                    (&g.node(e.src).kind, &g.node(e.dst).kind)
                else {
                    return None;
                };
                let inst = &g.instances[*instance as usize].name;
                l.cell_delays.get(&(inst.clone(), a.clone(), b.clone())).copied()
            })
            .collect();
        let net_delay = g
            .net_edges
            .iter()
            .map(|e| {
                l.net_delays
                    .get(&(g.node(e.src).name.clone(), g.node(e.dst).name.clone()))
                    .copied()
            })
            .collect();
        LabelSection {
            at,
            slew,
            rat,
            cell_delay,
            net_delay,
        }
    });
    let doc = GraphDocument {
        schema: GRAPH_SCHEMA.to_string(),
        version: GRAPH_SCHEMA_VERSION,
        lut_shape: [g.lut_shape.0, g.lut_shape.1],
        die: g.die,
        node_feature_columns: NODE_FEATURE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        table_slots: TABLE_SLOT_NAMES.iter().map(|s| s.to_string()).collect(),
        nodes,
        node_features,
        instances: g
            .instances
            .iter()
            .map(|i| InstanceRecord {
                name: i.name.clone(),
                cell_class: i.cell_class.clone(),
            })
            .collect(),
        net_edges: g.net_edges.iter().map(|e| (e.src, e.dst, e.length)).collect(),
        cell_edges: g.cell_edges.iter().map(|e| g.edge_record(e)).collect(),
        removed_net_edges,
        removed_cell_edges,
        endpoints: g.endpoints.clone(),
        levels: g.levels.clone(),
        labels,
    };
    (doc, warnings)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Interchange(msg.into())
}

fn record_tables(r: &CellEdgeRecord) -> Result<TableSet> {
    if r.tables.len() != 8 {
        return Err(bad(format!(
            "cell edge {}->{} has {} tables",
            r.src,
            r.dst,
            r.tables.len()
        )));
    }
    let mut t: TableSet = Default::default();
    for (i, f) in r.tables.iter().enumerate() {
        if r.valid[i] {
            t[i] = Some(
                Lut::from_flat(f.index1.clone(), f.index2.clone(), f.values.clone())
                    .map_err(|e| bad(format!("cell edge {}->{}: {e}", r.src, r.dst)))?,
            );
        }
    }
    Ok(t)
}

/// Rebuild a graph from an interchange document.
pub fn import_graph(doc: &GraphDocument) -> Result<TimingGraph> {
    if doc.schema != GRAPH_SCHEMA {
        return Err(bad(format!("unknown schema {}", doc.schema)));
    }
    if doc.version != GRAPH_SCHEMA_VERSION {
        return Err(bad(format!("unsupported version {}", doc.version)));
    }
    if doc.nodes.len() != doc.node_features.len() {
        return Err(bad("node and feature counts differ"));
    }
    let n = doc.nodes.len() as NodeId;
    let check = |a: NodeId, b: NodeId| {
        if a >= n || b >= n {
            Err(bad(format!("edge {a}->{b} references a missing node")))
        } else {
            Ok(())
        }
    };
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    let mut by_name = HashMap::new();
    for (i, (r, f)) in doc.nodes.iter().zip(&doc.node_features).enumerate() {
        let kind = match (r.port, r.instance, &r.pin) {
            (Some(direction), None, None) => NodeKind::Port { direction },
            (None, Some(instance), Some(pin)) => {
                if instance as usize >= doc.instances.len() {
                    return Err(bad(format!("node {} references a missing instance", r.name)));
                }
                NodeKind::Pin {
                    instance,
                    pin: pin.clone(),
                }
            }
            _ => return Err(bad(format!("node {} is neither a port nor a pin", r.name))),
        };
        by_name.insert(r.name.clone(), i as NodeId);
        nodes.push(PinNode {
            name: r.name.clone(),
            kind,
            is_primary_io: f[0] != 0.0,
            boundary_distances: [f[1], f[2], f[3], f[4]],
            capacitance: [f[5], f[6], f[7], f[8]],
            direction: if f[9] != 0.0 {
                FanDirection::Fanout
            } else {
                FanDirection::Fanin
            },
            is_clock_pin: r.is_clock_pin,
            location: r.location,
        });
    }
    let mut instances: Vec<Instance> = doc
        .instances
        .iter()
        .map(|i| Instance {
            name: i.name.clone(),
            cell_class: i.cell_class.clone(),
            pins: Vec::new(),
        })
        .collect();
    for (i, node) in nodes.iter().enumerate() {
        if let Some(k) = node.instance() {
            instances[k as usize].pins.push(i as NodeId);
        }
    }
    let mut interner = TableInterner::default();
    let mut cell = |r: &CellEdgeRecord| -> Result<CellEdge> {
        check(r.src, r.dst)?;
        Ok(CellEdge {
            src: r.src,
            dst: r.dst,
            tables: interner.intern(record_tables(r)?),
            valid: r.valid,
        })
    };
    let cell_edges = doc.cell_edges.iter().map(&mut cell).collect::<Result<Vec<_>>>()?;
    let removed_cells = doc
        .removed_cell_edges
        .iter()
        .map(&mut cell)
        .collect::<Result<Vec<_>>>()?;
    let net = |&(src, dst, length): &(NodeId, NodeId, f64)| -> Result<NetEdge> {
        check(src, dst)?;
        Ok(NetEdge { src, dst, length })
    };
    let net_edges = doc.net_edges.iter().map(net).collect::<Result<Vec<_>>>()?;
    let mut removed_edges: Vec<RemovedEdge> = doc
        .removed_net_edges
        .iter()
        .map(net)
        .map(|e| e.map(RemovedEdge::Net))
        .collect::<Result<_>>()?;
    removed_edges.extend(removed_cells.into_iter().map(RemovedEdge::Cell));

    let mut g = TimingGraph {
        nodes,
        instances,
        net_edges,
        cell_edges,
        arc_tables: interner.tables,
        lut_shape: (doc.lut_shape[0], doc.lut_shape[1]),
        die: doc.die,
        removed_edges,
        endpoints: Vec::new(),
        levels: Vec::new(),
        level_buckets: Vec::new(),
        fanin: Csr::default(),
        fanout: Csr::default(),
        by_name,
    };
    g.rebuild_adjacency();
    if !doc.levels.is_empty() {
        g.compute_levels()?;
    }
    Ok(g)
}

impl TimingGraph {
    /// Removed edges in export order (nets first), for comparisons after a
    /// document round trip.
    pub fn removed_edges_canonical(&self) -> Vec<RemovedEdge> {
        let mut nets: Vec<RemovedEdge> = self
            .removed_edges
            .iter()
            .filter(|e| matches!(e, RemovedEdge::Net(_)))
            .copied()
            .collect();
        nets.extend(
            self.removed_edges
                .iter()
                .filter(|e| matches!(e, RemovedEdge::Cell(_)))
                .copied(),
        );
        nets
    }
}
