//! Endpoint required times, critical paths, clock reconvergence pessimism
//! removal and TNS/WNS.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::at_provider::PinTiming;
use crate::corner::{Analysis, Corner, Transition};
use crate::error::{Error, Result};
use crate::liberty::{table_slot, TableKind};
use crate::physical::PortDirection;
use crate::sdc::SdcConstraints;
use crate::sdf::DelayLabels;
use crate::timing_graph::{EdgeRef, FanDirection, NodeId, NodeKind, TimingGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointKind {
    PrimaryOutput,
    Register,
    /// No clock pin or not a data input; excluded from TNS/WNS.
    Unconstrained,
}

/// Which early value stands for the minimum clock-path delay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockEarlyMode {
    #[default]
    EarlyRise,
    MinRiseFall,
}

impl ClockEarlyMode {
    pub fn token(self) -> &'static str {
        match self {
            ClockEarlyMode::EarlyRise => "early-rise",
            ClockEarlyMode::MinRiseFall => "min-rise-fall",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "early-rise" => Some(ClockEarlyMode::EarlyRise),
            "min-rise-fall" => Some(ClockEarlyMode::MinRiseFall),
            _ => None,
        }
    }

    pub fn early_at(self, timing: &PinTiming, n: NodeId) -> f64 {
        let er = timing.at(n, Corner::EarlyRise);
        match self {
            ClockEarlyMode::EarlyRise => er,
            ClockEarlyMode::MinRiseFall => er.min(timing.at(n, Corner::EarlyFall)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlackOptions {
    pub clock_early: ClockEarlyMode,
    /// Net delay model used when choosing critical predecessors.
    pub net_delay_per_micron: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointResult {
    pub endpoint: NodeId,
    pub name: String,
    pub kind: EndpointKind,
    /// Late-rise arrival time at the endpoint.
    pub at: f64,
    pub rat: f64,
    pub crp: f64,
    pub rat_corrected: f64,
    pub slack: f64,
    pub slack_corrected: f64,
    pub startpoint: Option<NodeId>,
    pub startpoint_name: Option<String>,
    pub is_po: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub clock_period: f64,
    pub clock_uncertainty: f64,
    pub lut_shape: [usize; 2],
    pub at_source: String,
    pub clock_early: ClockEarlyMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub settings: ReportSettings,
    pub tns: f64,
    pub wns: f64,
    /// Constrained endpoints.
    pub endpoint_count: usize,
    pub critical_count: usize,
    pub unconstrained: Vec<String>,
    /// Constrained endpoints in node order.
    pub endpoints: Vec<EndpointResult>,
    pub warnings: Vec<String>,
}

impl SlackReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Slack(format!("bad report document: {e}")))
    }

    pub fn to_text(&self) -> String {
        generate_text_report(self)
    }
}

/// Endpoint classification in node order.
pub fn classify_endpoints(graph: &TimingGraph) -> Vec<(NodeId, EndpointKind)> {
    graph
        .endpoints
        .iter()
        .map(|&e| {
            let n = graph.node(e);
            let kind = match &n.kind {
                NodeKind::Port { direction } => match direction {
                    PortDirection::Output | PortDirection::Inout => EndpointKind::PrimaryOutput,
                    PortDirection::Input => EndpointKind::Unconstrained,
                },
                NodeKind::Pin { instance, .. } => {
                    if n.direction == FanDirection::Fanin && graph.clock_pin(*instance).is_some() {
                        EndpointKind::Register
                    } else {
                        EndpointKind::Unconstrained
                    }
                }
            };
            (e, kind)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointRat {
    pub endpoint: NodeId,
    pub kind: EndpointKind,
    /// `None` for unconstrained endpoints.
    pub rat: Option<f64>,
}

/// Required arrival time per endpoint: `T - D_po - μ` at primary outputs,
/// `T + early clock AT - μ` at register data pins.
pub fn estimate_rat(
    graph: &TimingGraph,
    timing: &PinTiming,
    sdc: &SdcConstraints,
    mode: ClockEarlyMode,
) -> Vec<EndpointRat> {
    let t = sdc.clock_period;
    let mu = sdc.clock_uncertainty;
    classify_endpoints(graph)
        .into_iter()
        .map(|(e, kind)| {
            let rat = match kind {
                EndpointKind::PrimaryOutput => Some(t - sdc.output_delay(&graph.node(e).name) - mu),
                EndpointKind::Register => {
                    let inst = graph.node(e).instance().expect("register endpoints are pins");
                    let clk = graph.clock_pin(inst).expect("classified with a clock pin");
                    Some(t + mode.early_at(timing, clk) - mu)
                }
                EndpointKind::Unconstrained => None,
            };
            EndpointRat { endpoint: e, kind, rat }
        })
        .collect()
}

/// Late-rise edge delays used to pick critical predecessors. Label cell and
/// net delays are used where present; otherwise the graph's tables and the
/// net delay model are evaluated at the predecessor's slew.
pub struct ArcDelays<'a> {
    graph: &'a TimingGraph,
    timing: &'a PinTiming,
    labels: Option<&'a DelayLabels>,
    net_delay_per_micron: Option<f64>,
    loads: Vec<[f64; 4]>,
}

impl<'a> ArcDelays<'a> {
    pub fn new(
        graph: &'a TimingGraph,
        timing: &'a PinTiming,
        labels: Option<&'a DelayLabels>,
        net_delay_per_micron: Option<f64>,
    ) -> Self {
        ArcDelays {
            graph,
            timing,
            labels: labels.filter(|l| !l.cell_delays.is_empty() || !l.net_delays.is_empty()),
            net_delay_per_micron,
            loads: graph.pin_loads(),
        }
    }

    pub fn late_rise(&self, e: EdgeRef) -> f64 {
        let g = self.graph;
        let k = Corner::LateRise.index();
        let (src, dst) = g.edge_ends(e);
        match e {
            EdgeRef::Net(i) => {
                if let Some(l) = self.labels {
                    let key = (g.node(src).name.clone(), g.node(dst).name.clone());
                    if let Some(q) = l.net_delays.get(&key) {
                        return q[k];
                    }
                }
                self.net_delay_per_micron
                    .map_or(0.0, |c| c * g.net_edges[i as usize].length)
            }
            EdgeRef::Cell(i) => {
                if let (Some(l), NodeKind::Pin { instance, pin: a }, NodeKind::Pin { pin: b, .. }) =
                    (self.labels, &g.node(src).kind, &g.node(dst).kind)
                {
                    let key = (g.instances[*instance as usize].name.clone(), a.clone(), b.clone());
                    if let Some(q) = l.cell_delays.get(&key) {
                        return q[k];
                    }
                }
                let edge = &g.cell_edges[i as usize];
                let slot = table_slot(Analysis::Late, TableKind::delay(Transition::Rise));
                match g.table(edge, slot) {
                    Some(t) => t.lookup_unchecked(self.timing.slew[src as usize][k], self.loads[dst as usize][k]),
                    None => f64::NEG_INFINITY,
                }
            }
        }
    }
}

/// Walk backward from `endpoint`, taking at each pin the predecessor that
/// maximizes late-rise AT plus edge delay (lowest node id on ties), until a
/// register clock pin or a source is reached. Returns the path in forward
/// order.
pub fn backward_path(
    graph: &TimingGraph,
    timing: &PinTiming,
    delays: &ArcDelays<'_>,
    endpoint: NodeId,
) -> Result<Vec<NodeId>> {
    let k = Corner::LateRise.index();
    let mut path = vec![endpoint];
    let mut cur = endpoint;
    loop {
        if cur != endpoint && graph.node(cur).is_clock_pin {
            break;
        }
        let mut best: Option<(f64, NodeId)> = None;
        for &e in graph.fanin(cur) {
            let (p, _) = graph.edge_ends(e);
            let v = timing.at[p as usize][k] + delays.late_rise(e);
            let better = match best {
                None => true,
                Some((b, bp)) => v > b || (v == b && p < bp),
            };
            if better {
                best = Some((v, p));
            }
        }
        let Some((_, p)) = best else { break };
        path.push(p);
        cur = p;
        if path.len() > graph.node_count() {
            return Err(Error::Internal(format!(
                "backward walk from {} exceeded the node count",
                graph.node(endpoint).name
            )));
        }
    }
    path.reverse();
    Ok(path)
}

/// Critical paths for every endpoint whose uncorrected slack is negative.
pub fn find_critical_paths(
    graph: &TimingGraph,
    timing: &PinTiming,
    rats: &[EndpointRat],
    delays: &ArcDelays<'_>,
) -> Result<Vec<(NodeId, Vec<NodeId>)>> {
    rats.par_iter()
        .filter_map(|r| {
            let rat = r.rat?;
            (rat - timing.at(r.endpoint, Corner::LateRise) < 0.0).then_some(r.endpoint)
        })
        .map(|e| backward_path(graph, timing, delays, e).map(|p| (e, p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    /// Root first, the register clock pin last.
    pub pins: Vec<NodeId>,
    /// The root is the constrained clock port.
    pub from_source: bool,
    /// The walk stopped at a multi-input cell.
    pub gated: bool,
}

/// Trace a clock pin back to its source through net edges and single-input
/// cells.
pub fn clock_path(graph: &TimingGraph, sdc: &SdcConstraints, clock_pin: NodeId) -> ClockPath {
    let mut pins = vec![clock_pin];
    let mut cur = clock_pin;
    let mut gated = false;
    loop {
        let fanin = graph.fanin(cur);
        let Some(&first) = fanin.first() else { break };
        if let EdgeRef::Cell(_) = first {
            let srcs: std::collections::BTreeSet<NodeId> = fanin
                .iter()
                .filter(|e| matches!(e, EdgeRef::Cell(_)))
                .map(|&e| graph.edge_ends(e).0)
                .collect();
            if srcs.len() > 1 {
                gated = true;
                break;
            }
        }
        cur = graph.edge_ends(first).0;
        pins.push(cur);
        if pins.len() > graph.node_count() {
            break;
        }
    }
    pins.reverse();
    let root = graph.node(pins[0]);
    let from_source = !gated && matches!(root.kind, NodeKind::Port { .. }) && root.name == sdc.clock_port;
    ClockPath {
        pins,
        from_source,
        gated,
    }
}

/// CRP for a launch/capture clock pin pair: late minus early AT at the last
/// pin the two clock paths share, floored at zero. `None` when the paths
/// share no root or a path does not reach the clock source.
pub fn crp_between(timing: &PinTiming, launch: &ClockPath, capture: &ClockPath, mode: ClockEarlyMode) -> Option<f64> {
    if !(launch.from_source || launch.gated) || !(capture.from_source || capture.gated) {
        return None;
    }
    let common = launch
        .pins
        .iter()
        .zip(&capture.pins)
        .take_while(|(a, b)| a == b)
        .count();
    if common == 0 {
        return None;
    }
    let fork = launch.pins[common - 1];
    let late = timing.at(fork, Corner::LateRise);
    Some((late - mode.early_at(timing, fork)).max(0.0))
}

pub struct SlackInputs<'a> {
    pub graph: &'a TimingGraph,
    pub timing: &'a PinTiming,
    pub sdc: &'a SdcConstraints,
    /// Optional label cell/net delays for predecessor selection.
    pub labels: Option<&'a DelayLabels>,
    pub options: &'a SlackOptions,
}

/// Run the full slack computation.
pub fn analyze(inputs: &SlackInputs<'_>) -> Result<SlackReport> {
    let SlackInputs {
        graph,
        timing,
        sdc,
        labels,
        options,
    } = *inputs;
    if timing.at.len() != graph.node_count() {
        return Err(Error::Slack("arrival times do not cover the graph".into()));
    }
    let mode = options.clock_early;
    let rats = estimate_rat(graph, timing, sdc, mode);
    let delays = ArcDelays::new(graph, timing, labels, options.net_delay_per_micron);
    let critical = find_critical_paths(graph, timing, &rats, &delays)?;

    let mut warnings = Vec::new();
    let mut clock_paths: HashMap<NodeId, ClockPath> = HashMap::new();
    let mut path_of = |pin: NodeId, warnings: &mut Vec<String>| -> ClockPath {
        clock_paths
            .entry(pin)
            .or_insert_with(|| {
                let p = clock_path(graph, sdc, pin);
                if p.gated {
                    warnings.push(format!(
                        "clock path of {} stops at multi-input cell pin {}",
                        graph.node(pin).name,
                        graph.node(p.pins[0]).name
                    ));
                } else if !p.from_source {
                    warnings.push(format!(
                        "clock pin {} is not reachable from clock {}; CRP taken as 0",
                        graph.node(pin).name,
                        sdc.clock_port
                    ));
                }
                p
            })
            .clone()
    };

    let mut crp_of: HashMap<NodeId, (f64, NodeId)> = HashMap::new();
    for (e, path) in &critical {
        let head = path[0];
        let launch_clk = graph.node(head).is_clock_pin.then_some(head);
        let startpoint = match launch_clk {
            Some(_) if path.len() > 1 => path[1],
            _ => head,
        };
        let capture_clk = match classify_kind(&rats, *e) {
            EndpointKind::Register => graph.node(*e).instance().and_then(|i| graph.clock_pin(i)),
            _ => None,
        };
        let crp = match (launch_clk, capture_clk) {
            (Some(l), Some(c)) => {
                let lp = path_of(l, &mut warnings);
                let cp = path_of(c, &mut warnings);
                crp_between(timing, &lp, &cp, mode).unwrap_or(0.0)
            }
            _ => 0.0,
        };
        crp_of.insert(*e, (crp, startpoint));
    }

    let mut endpoints = Vec::new();
    let mut unconstrained = Vec::new();
    for r in &rats {
        let name = graph.node(r.endpoint).name.clone();
        let Some(rat) = r.rat else {
            unconstrained.push(name);
            continue;
        };
        let at = timing.at(r.endpoint, Corner::LateRise);
        let (crp, start) = match crp_of.get(&r.endpoint) {
            Some(&(c, s)) => (c, Some(s)),
            None => (0.0, None),
        };
        let rat_corrected = rat + crp;
        endpoints.push(EndpointResult {
            endpoint: r.endpoint,
            name,
            kind: r.kind,
            at,
            rat,
            crp,
            rat_corrected,
            slack: rat - at,
            slack_corrected: rat_corrected - at,
            startpoint: start,
            startpoint_name: start.map(|s| graph.node(s).name.clone()),
            is_po: r.kind == EndpointKind::PrimaryOutput,
        });
    }
    if !unconstrained.is_empty() {
        warnings.push(format!(
            "{} endpoint(s) are unconstrained and excluded from TNS/WNS",
            unconstrained.len()
        ));
    }
    let (tns, wns) = compute_tns_wns(endpoints.iter().map(|r| r.slack_corrected));
    let critical_count = endpoints.iter().filter(|r| r.slack_corrected < 0.0).count();
    Ok(SlackReport {
        settings: ReportSettings {
            clock_period: sdc.clock_period,
            clock_uncertainty: sdc.clock_uncertainty,
            lut_shape: [graph.lut_shape.0, graph.lut_shape.1],
            at_source: format!("{:?}", timing.source).to_lowercase(),
            clock_early: mode,
        },
        tns,
        wns,
        endpoint_count: endpoints.len(),
        critical_count,
        unconstrained,
        endpoints,
        warnings,
    })
}

fn classify_kind(rats: &[EndpointRat], e: NodeId) -> EndpointKind {
    rats.iter()
        .find(|r| r.endpoint == e)
        .map_or(EndpointKind::Unconstrained, |r| r.kind)
}

/// Sum and minimum of the negative slacks, summed in the given order.
pub fn compute_tns_wns(slacks: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let mut tns = 0.0;
    let mut wns = 0.0f64;
    for s in slacks {
        if s < 0.0 {
            tns += s;
            wns = wns.min(s);
        }
    }
    (tns, wns)
}

fn ns(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn generate_text_report(r: &SlackReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "TNS {} WNS {}", ns(r.tns), ns(r.wns));
    let _ = writeln!(
        out,
        "endpoints {} critical {} unconstrained {}",
        r.endpoint_count,
        r.critical_count,
        r.unconstrained.len()
    );
    let s = &r.settings;
    let _ = writeln!(
        out,
        "period {} uncertainty {} lut {}x{} at_source {} clock_early {}",
        s.clock_period,
        s.clock_uncertainty,
        s.lut_shape[0],
        s.lut_shape[1],
        s.at_source,
        s.clock_early.token()
    );
    let mut rows: Vec<&EndpointResult> = r.endpoints.iter().filter(|e| e.slack_corrected < 0.0).collect();
    rows.sort_by(|a, b| {
        a.slack_corrected
            .total_cmp(&b.slack_corrected)
            .then(a.endpoint.cmp(&b.endpoint))
    });
    let width = rows.iter().map(|e| e.name.len()).max().unwrap_or(0).max(8);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<width$} {:>10} {:>10} {:>10} {:>10}",
        "endpoint", "at", "rat", "crp", "slack"
    );
    for e in rows {
        let _ = writeln!(
            out,
            "{:<width$} {:>10} {:>10} {:>10} {:>10}",
            e.name,
            ns(e.at),
            ns(e.rat),
            ns(e.crp),
            ns(e.slack_corrected)
        );
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
