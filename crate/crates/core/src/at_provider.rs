//! Arrival-time sources for the slack engine.
//!
//! Providers implement [`AtProvider`] and are looked up by name in a
//! [`ProviderRegistry`]. The built-ins are `labels` (ground-truth pin ATs),
//! `external` (a prediction sidecar) and `propagate` (a pre-routing NLDM
//! forward sweep with zero or linear net delay).

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corner::{Analysis, Corner, Quad};
use crate::error::{Error, Result};
use crate::liberty::{table_slot, TableKind};
use crate::sdc::SdcConstraints;
use crate::sdf::{DelayLabels, Quantity};
use crate::timing_graph::{EdgeRef, NodeId, NodeKind, TimingGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtSource {
    Labels,
    External,
    Propagated,
}

/// Per-node arrival time and slew, indexed by node id, ER/EF/LR/LF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinTiming {
    pub at: Vec<Quad>,
    pub slew: Vec<Quad>,
    pub source: AtSource,
}

impl PinTiming {
    pub fn at(&self, n: NodeId, c: Corner) -> f64 {
        self.at[n as usize][c.index()]
    }
}

pub const DEFAULT_PI_SLEW: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    /// Slew at primary inputs, ns.
    pub pi_slew: f64,
    /// Linear net delay in ns per micron of Manhattan length; `None` means
    /// zero net delay.
    pub net_delay_per_micron: Option<f64>,
    /// Fill label gaps by propagating from neighbors instead of failing.
    pub permissive: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            pi_slew: DEFAULT_PI_SLEW,
            net_delay_per_micron: None,
            permissive: false,
        }
    }
}

pub struct ProviderInputs<'a> {
    pub graph: &'a TimingGraph,
    pub sdc: &'a SdcConstraints,
    pub labels: Option<&'a DelayLabels>,
    pub predictions: Option<&'a DelayLabels>,
    pub options: &'a PropagateOptions,
}

#[derive(Debug, Clone)]
pub struct Provided {
    pub timing: PinTiming,
    pub warnings: Vec<String>,
}

pub trait AtProvider: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn provide(&self, inputs: &ProviderInputs<'_>) -> Result<Provided>;
}

pub struct ProviderRegistry {
    providers: Vec<Box<dyn AtProvider>>,
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        let mut r = ProviderRegistry::empty();
        r.register(Box::new(LabelProvider));
        r.register(Box::new(ExternalProvider));
        r.register(Box::new(Propagator));
        r
    }
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        ProviderRegistry { providers: Vec::new() }
    }

    /// Add a provider, replacing any existing one of the same name.
    pub fn register(&mut self, p: Box<dyn AtProvider>) {
        self.providers.retain(|q| q.name() != p.name());
        self.providers.push(p);
    }

    pub fn get(&self, name: &str) -> Result<&dyn AtProvider> {
        self.providers
            .iter()
            .find(|p| p.name() == name)
            .map(|p| p.as_ref())
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown AT source {name:?} (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.providers.iter().map(|p| p.name()).collect()
    }
}

pub struct LabelProvider;
pub struct ExternalProvider;
pub struct Propagator;

impl AtProvider for LabelProvider {
    fn name(&self) -> &'static str {
        "labels"
    }

    fn description(&self) -> &'static str {
        "arrival times copied from SDF or sidecar labels"
    }

    fn provide(&self, inputs: &ProviderInputs<'_>) -> Result<Provided> {
        let labels = inputs
            .labels
            .ok_or_else(|| Error::Provider("the labels source needs an SDF or label file".into()))?;
        at_from_labels(inputs.graph, inputs.sdc, labels, inputs.options, AtSource::Labels)
    }
}

impl AtProvider for ExternalProvider {
    fn name(&self) -> &'static str {
        "external"
    }

    fn description(&self) -> &'static str {
        "arrival times read from a prediction sidecar"
    }

    fn provide(&self, inputs: &ProviderInputs<'_>) -> Result<Provided> {
        let p = inputs
            .predictions
            .ok_or_else(|| Error::Provider("the external source needs a prediction file".into()))?;
        at_from_labels(inputs.graph, inputs.sdc, p, inputs.options, AtSource::External)
    }
}

impl AtProvider for Propagator {
    fn name(&self) -> &'static str {
        "propagate"
    }

    fn description(&self) -> &'static str {
        "pre-routing NLDM forward propagation"
    }

    fn provide(&self, inputs: &ProviderInputs<'_>) -> Result<Provided> {
        propagate_at(inputs.graph, inputs.sdc, inputs.options)
    }
}

/// Copy pin ATs (and slews, where labeled) from `labels`. Pins missing any
/// AT corner are an error listing them, unless `options.permissive`, in
/// which case they are computed from their predecessors.
pub fn at_from_labels(
    graph: &TimingGraph,
    sdc: &SdcConstraints,
    labels: &DelayLabels,
    options: &PropagateOptions,
    source: AtSource,
) -> Result<Provided> {
    let mut warnings = Vec::new();
    let at_map = labels.pin_map(Quantity::At);
    let slew_map = labels.pin_map(Quantity::Slew);
    let extras = at_map.keys().filter(|p| graph.node_by_name(p).is_none()).count();
    if extras > 0 {
        warnings.push(format!("{extras} labeled pin(s) are not in the graph and were ignored"));
    }
    let mut fixed: Vec<Option<(Quad, Option<Quad>)>> = Vec::with_capacity(graph.node_count());
    let mut missing = Vec::new();
    let mut no_slew = 0usize;
    for n in &graph.nodes {
        let at = at_map.get(&n.name).and_then(full);
        let slew = slew_map.get(&n.name).and_then(full);
        match at {
            Some(at) => {
                if slew.is_none() {
                    no_slew += 1;
                }
                fixed.push(Some((at, slew)));
            }
            None => {
                missing.push(n.name.as_str());
                fixed.push(None);
            }
        }
    }
    if !missing.is_empty() && !options.permissive {
        return Err(Error::Provider(format!(
            "{} pin(s) lack a complete AT label: {}",
            missing.len(),
            abbreviate(&missing, 20)
        )));
    }
    if !missing.is_empty() {
        warnings.push(format!("{} pin(s) without AT labels were propagated", missing.len()));
    }
    if no_slew > 0 {
        warnings.push(format!(
            "{no_slew} labeled pin(s) have no slew label; slew was propagated"
        ));
    }
    let mut out = sweep(graph, sdc, options, &fixed)?;
    out.timing.source = source;
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

fn full(q: &[Option<f64>; 4]) -> Option<Quad> {
    Some([q[0]?, q[1]?, q[2]?, q[3]?])
}

fn abbreviate(items: &[&str], max: usize) -> String {
    let mut s = items.iter().take(max).copied().collect::<Vec<_>>().join(", ");
    if items.len() > max {
        s += &format!(", ... ({} more)", items.len() - max);
    }
    s
}

/// Forward NLDM propagation over the leveled graph.
pub fn propagate_at(graph: &TimingGraph, sdc: &SdcConstraints, options: &PropagateOptions) -> Result<Provided> {
    sweep(graph, sdc, options, &vec![None; graph.node_count()])
}

struct NodeEval {
    at: Quad,
    slew: Quad,
    skipped: u32,
    floating: bool,
}

/// Level-by-level sweep. Nodes with a `fixed` AT keep it (and their fixed
/// slew, when present); all others are computed from their fan-in.
fn sweep(
    graph: &TimingGraph,
    sdc: &SdcConstraints,
    options: &PropagateOptions,
    fixed: &[Option<(Quad, Option<Quad>)>],
) -> Result<Provided> {
    if !graph.is_leveled() {
        return Err(Error::Internal("propagation needs a leveled graph".into()));
    }
    let n = graph.node_count();
    let loads = graph.pin_loads();
    let mut at = vec![[0.0; 4]; n];
    let mut slew = vec![[0.0; 4]; n];
    let mut skipped = 0u64;
    let mut floating = Vec::new();
    for bucket in &graph.level_buckets {
        let evals: Vec<NodeEval> = bucket
            .par_iter()
            .map(|&v| eval_node(graph, sdc, options, &loads, &at, &slew, fixed, v))
            .collect();
        for (&v, e) in bucket.iter().zip(evals) {
            at[v as usize] = e.at;
            slew[v as usize] = e.slew;
            skipped += e.skipped as u64;
            if e.floating {
                floating.push(graph.node(v).name.as_str());
            }
        }
    }
    let mut warnings = Vec::new();
    if skipped > 0 {
        warnings.push(format!("{skipped} arc corner(s) skipped for missing delay tables"));
    }
    if !floating.is_empty() {
        warnings.push(format!(
            "{} pin(s) have no usable fan-in and start at AT 0: {}",
            floating.len(),
            abbreviate(&floating, 10)
        ));
    }
    Ok(Provided {
        timing: PinTiming {
            at,
            slew,
            source: AtSource::Propagated,
        },
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn eval_node(
    graph: &TimingGraph,
    sdc: &SdcConstraints,
    options: &PropagateOptions,
    loads: &[Quad],
    at: &[Quad],
    slew: &[Quad],
    fixed: &[Option<(Quad, Option<Quad>)>],
    v: NodeId,
) -> NodeEval {
    let fanin = graph.fanin(v);
    let source_slew = [options.pi_slew; 4];
    if let Some((fat, fslew)) = fixed[v as usize] {
        let slew = fslew.unwrap_or_else(|| {
            if fanin.is_empty() {
                source_slew
            } else {
                computed(graph, options, loads, at, slew, v).slew
            }
        });
        return NodeEval {
            at: fat,
            slew,
            skipped: 0,
            floating: false,
        };
    }
    if fanin.is_empty() {
        let node = graph.node(v);
        let t = match &node.kind {
            NodeKind::Port { .. } => sdc.input_delay(&node.name),
            NodeKind::Pin { .. } => 0.0,
        };
        return NodeEval {
            at: [t; 4],
            slew: source_slew,
            skipped: 0,
            floating: false,
        };
    }
    computed(graph, options, loads, at, slew, v)
}

fn computed(
    graph: &TimingGraph,
    options: &PropagateOptions,
    loads: &[Quad],
    at: &[Quad],
    slew: &[Quad],
    v: NodeId,
) -> NodeEval {
    let mut out_at = [0.0; 4];
    let mut out_slew = [options.pi_slew; 4];
    let mut skipped = 0;
    let mut floating = false;
    for c in Corner::ALL {
        let k = c.index();
        let early = c.analysis() == Analysis::Early;
        let delay_slot = table_slot(c.analysis(), TableKind::delay(c.transition()));
        let slew_slot = table_slot(c.analysis(), TableKind::slew(c.transition()));
        let load = loads[v as usize][k];
        let mut best: Option<(f64, f64)> = None;
        for &e in graph.fanin(v) {
            let (src, _) = graph.edge_ends(e);
            let (s_at, s_slew) = (at[src as usize][k], slew[src as usize][k]);
            let cand = match e {
                EdgeRef::Net(i) => {
                    let d = options
                        .net_delay_per_micron
                        .map_or(0.0, |kk| kk * graph.net_edges[i as usize].length);
                    (s_at + d, s_slew)
                }
                EdgeRef::Cell(i) => {
                    let edge = &graph.cell_edges[i as usize];
                    let Some(table) = graph.table(edge, delay_slot) else {
                        skipped += 1;
                        continue;
                    };
                    let d = table.lookup_unchecked(s_slew, load);
                    let out = graph
                        .table(edge, slew_slot)
                        .map_or(s_slew, |t| t.lookup_unchecked(s_slew, load));
                    (s_at + d, out)
                }
            };
            let better = match best {
                None => true,
                Some((b, _)) => {
                    if early {
                        cand.0 < b
                    } else {
                        cand.0 > b
                    }
                }
            };
            if better {
                best = Some(cand);
            }
        }
        match best {
            Some((a, s)) => {
                out_at[k] = a;
                out_slew[k] = s;
            }
            None => floating = true,
        }
    }
    NodeEval {
        at: out_at,
        slew: out_slew,
        skipped,
        floating,
    }
}

/// Pins whose AT labels are incomplete, in node order.
pub fn unlabeled_pins<'g>(graph: &'g TimingGraph, labels: &DelayLabels) -> BTreeSet<&'g str> {
    let map = labels.pin_map(Quantity::At);
    graph
        .nodes
        .iter()
        .filter(|n| map.get(&n.name).and_then(full).is_none())
        .map(|n| n.name.as_str())
        .collect()
}

/// Write propagated timing back as AT/SLEW pin labels.
pub fn timing_to_labels(graph: &TimingGraph, timing: &PinTiming, labels: &mut DelayLabels) {
    for (i, n) in graph.nodes.iter().enumerate() {
        for c in Corner::ALL {
            labels.set(&n.name, Quantity::At, c, timing.at[i][c.index()]);
            labels.set(&n.name, Quantity::Slew, c, timing.slew[i][c.index()]);
        }
    }
}
