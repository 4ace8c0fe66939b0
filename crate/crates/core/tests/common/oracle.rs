//! Exhaustive path-enumeration timing oracle.
//!
//! Works straight from a placed design and its two cell maps, without the
//! timing graph: every path from a timing source to every pin is listed
//! explicitly and summed in forward order. Only constant (1x1) delay
//! tables and zero net delay are supported, which is what the synthetic
//! generator produces.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use prslack_core::corner::{Analysis, Corner, Quad};
use prslack_core::liberty::{CellMap, PinDirection, TableKind};
use prslack_core::physical::PortDirection;
use prslack_core::synth::SynthCircuit;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEndpoint {
    pub at: f64,
    pub rat: f64,
    pub crp: f64,
    pub slack: f64,
    pub slack_corrected: f64,
    pub startpoint: Option<String>,
}

pub struct Oracle {
    pub names: Vec<String>,
    /// Incoming edges `(from, delay per corner)`.
    preds: Vec<Vec<(usize, Quad)>>,
    is_clock: Vec<bool>,
    source_at: Vec<Quad>,
    /// Register data pins with the clock pin of the same instance.
    registers: Vec<(usize, usize)>,
    /// Output ports with their output delay.
    outputs: Vec<(usize, f64)>,
    period: f64,
    uncertainty: f64,
}

/// One source-to-pin path, forward order, with its arrival per corner.
#[derive(Debug, Clone)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub arrival: Quad,
}

fn constant(cells: &CellMap, class: &str, from: &str, to: &str, analysis: Analysis, kind: TableKind) -> f64 {
    let arc = cells[class]
        .arcs
        .iter()
        .find(|a| a.related_pin == from && a.output_pin == to)
        .expect("arc present in both libraries");
    let t = arc.table(analysis, kind).expect("table present");
    assert_eq!(t.shape(), (1, 1), "oracle needs constant tables");
    t.value(0, 0)
}

impl Oracle {
    pub fn new(c: &SynthCircuit) -> Oracle {
        let d = &c.design;
        let mut names = Vec::new();
        let mut is_clock = Vec::new();
        let mut drives = Vec::new();
        for p in &d.ports {
            names.push(p.name.clone());
            is_clock.push(false);
            drives.push(p.direction == PortDirection::Input);
        }
        for comp in &d.components {
            for pin in &c.late[&comp.cell_class].pins {
                if pin.direction == PinDirection::Internal {
                    continue;
                }
                names.push(format!("{}/{}", comp.instance, pin.name));
                is_clock.push(pin.is_clock);
                drives.push(matches!(pin.direction, PinDirection::Output | PinDirection::Inout));
            }
        }
        let id: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut preds = vec![Vec::new(); names.len()];

        for net in &d.nets {
            let ends: Vec<usize> = net.connections.iter().map(|c| id[c.node_name().as_str()]).collect();
            let drivers: Vec<usize> = ends.iter().copied().filter(|&n| drives[n]).collect();
            assert_eq!(drivers.len(), 1, "net {} needs one driver", net.name);
            for &s in ends.iter().filter(|&&n| n != drivers[0]) {
                preds[s].push((drivers[0], [0.0; 4]));
            }
        }
        let mut registers = Vec::new();
        for comp in &d.components {
            let cell = &c.late[&comp.cell_class];
            let pin_id = |p: &str| id[format!("{}/{p}", comp.instance).as_str()];
            for arc in &cell.arcs {
                let mut q = [0.0; 4];
                for corner in Corner::ALL {
                    let lib = match corner.analysis() {
                        Analysis::Early => &c.early,
                        Analysis::Late => &c.late,
                    };
                    q[corner.index()] = constant(
                        lib,
                        &comp.cell_class,
                        &arc.related_pin,
                        &arc.output_pin,
                        corner.analysis(),
                        TableKind::delay(corner.transition()),
                    );
                }
                preds[pin_id(&arc.output_pin)].push((pin_id(&arc.related_pin), q));
            }
            if let Some(ck) = cell.pins.iter().find(|p| p.is_clock) {
                for p in &cell.pins {
                    let has_arc = cell.arcs.iter().any(|a| a.related_pin == p.name);
                    if p.direction == PinDirection::Input && !p.is_clock && !has_arc {
                        registers.push((pin_id(&p.name), pin_id(&ck.name)));
                    }
                }
            }
        }
        let source_at = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if i < d.ports.len() {
                    [c.sdc.input_delay(n); 4]
                } else {
                    [0.0; 4]
                }
            })
            .collect();
        let outputs = d
            .ports
            .iter()
            .enumerate()
            .filter(|(_, p)| p.direction != PortDirection::Input)
            .map(|(i, p)| (i, c.sdc.output_delay(&p.name)))
            .collect();
        Oracle {
            names,
            preds,
            is_clock,
            source_at,
            registers,
            outputs,
            period: c.sdc.clock_period,
            uncertainty: c.sdc.clock_uncertainty,
        }
    }

    pub fn node(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).expect("known pin")
    }

    /// Every path from a source (a node without predecessors) to `v`.
    pub fn paths_to(&self, v: usize) -> Vec<Path> {
        let mut out = Vec::new();
        let mut rev = vec![v];
        let mut delays: Vec<Quad> = Vec::new();
        self.walk(&mut rev, &mut delays, &mut out);
        out
    }

    fn walk(&self, rev: &mut Vec<usize>, delays: &mut Vec<Quad>, out: &mut Vec<Path>) {
        let v = *rev.last().unwrap();
        if self.preds[v].is_empty() {
            let nodes: Vec<usize> = rev.iter().rev().copied().collect();
            let mut arrival = self.source_at[v];
            for d in delays.iter().rev() {
                for k in 0..4 {
                    arrival[k] += d[k];
                }
            }
            out.push(Path { nodes, arrival });
            return;
        }
        for &(p, d) in &self.preds[v] {
            rev.push(p);
            delays.push(d);
            self.walk(rev, delays, out);
            rev.pop();
            delays.pop();
        }
    }

    /// Late corners take the longest path, early corners the shortest.
    pub fn arrival(&self, v: usize) -> Quad {
        let paths = self.paths_to(v);
        let mut q = [0.0; 4];
        for c in Corner::ALL {
            let k = c.index();
            let vals = paths.iter().map(|p| p.arrival[k]);
            q[k] = match c.analysis() {
                Analysis::Late => vals.fold(f64::NEG_INFINITY, f64::max),
                Analysis::Early => vals.fold(f64::INFINITY, f64::min),
            };
        }
        q
    }

    pub fn all_arrivals(&self) -> BTreeMap<String, Quad> {
        (0..self.names.len())
            .map(|v| (self.names[v].clone(), self.arrival(v)))
            .collect()
    }

    /// The clock tree path of a clock pin, root first. Clock pins are fed
    /// by single-input buffers only, so the path is unique.
    fn clock_tree_path(&self, ck: usize) -> Vec<usize> {
        let paths = self.paths_to(ck);
        assert_eq!(paths.len(), 1, "clock pin {} has a unique source path", self.names[ck]);
        paths[0].nodes.clone()
    }

    /// Among the longest late-rise paths into `v`, the one whose reversed
    /// pin sequence is smallest, cut at the first clock pin before `v`.
    fn critical_path(&self, v: usize) -> Vec<usize> {
        let k = Corner::LateRise.index();
        let paths = self.paths_to(v);
        let best = paths.iter().map(|p| p.arrival[k]).fold(f64::NEG_INFINITY, f64::max);
        let chosen = paths
            .iter()
            .filter(|p| p.arrival[k] == best)
            .map(|p| p.nodes.iter().rev().copied().collect::<Vec<_>>())
            .min()
            .unwrap();
        let cut = chosen.iter().skip(1).position(|&n| self.is_clock[n]).map(|i| i + 1);
        let mut path: Vec<usize> = match cut {
            Some(i) => chosen[..=i].to_vec(),
            None => chosen,
        };
        path.reverse();
        path
    }

    /// Endpoint slacks keyed by pin name, for output ports and register
    /// data pins.
    pub fn endpoints(&self) -> BTreeMap<String, OracleEndpoint> {
        let lr = Corner::LateRise.index();
        let er = Corner::EarlyRise.index();
        let mut out = BTreeMap::new();
        let mut targets: Vec<(usize, Option<usize>, f64)> = Vec::new();
        for &(o, d) in &self.outputs {
            targets.push((o, None, self.period - d - self.uncertainty));
        }
        for &(dpin, ck) in &self.registers {
            targets.push((dpin, Some(ck), self.period + self.arrival(ck)[er] - self.uncertainty));
        }
        for (e, capture, rat) in targets {
            let at = self.arrival(e)[lr];
            let slack = rat - at;
            let (mut crp, mut startpoint) = (0.0, None);
            if slack < 0.0 {
                let path = self.critical_path(e);
                let launch = self.is_clock[path[0]].then_some(path[0]);
                let start = if launch.is_some() && path.len() > 1 {
                    path[1]
                } else {
                    path[0]
                };
                startpoint = Some(self.names[start].clone());
                if let (Some(l), Some(c)) = (launch, capture) {
                    let (lp, cp) = (self.clock_tree_path(l), self.clock_tree_path(c));
                    let common = lp.iter().zip(&cp).take_while(|(a, b)| a == b).count();
                    if common > 0 {
                        let a = self.arrival(lp[common - 1]);
                        crp = (a[lr] - a[er]).max(0.0);
                    }
                }
            }
            out.insert(
                self.names[e].clone(),
                OracleEndpoint {
                    at,
                    rat,
                    crp,
                    slack,
                    slack_corrected: rat + crp - at,
                    startpoint,
                },
            );
        }
        out
    }
}
