//! Random synthetic benchmark circuits.
//!
//! A circuit has one clock port feeding a tree of clock buffers, a set of
//! registers clocked from that tree, and a random combinational DAG over
//! the primary inputs and register outputs. Every cell table is a constant
//! 1x1 table, with early delays no larger than late ones.

pub mod fuzz;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::at_provider::{propagate_at, timing_to_labels, PropagateOptions};
use crate::corner::{Analysis, Corner, Quad, Transition};
use crate::error::Result;
use crate::liberty::{
    table_slot, write_liberty, CellMap, LibertyCell, LibertyPin, LibrarySet, Lut, PinDirection, TableKind, TableSet,
    TimingArc,
};
use crate::physical::{write_def, Component, Connection, Net, PhysicalDesign, Point, Port, PortDirection, Rect};
use crate::sdc::{write_sdc, SdcConstraints};
use crate::sdf::{write_sdf, DelayLabels, Quantity};
use crate::slack_engine::{analyze, SlackInputs, SlackOptions};
use crate::timing_graph::{build_timing_graph, NodeKind};

#[derive(Debug, Clone)]
pub struct SynthCircuit {
    pub name: String,
    pub early: CellMap,
    pub late: CellMap,
    pub design: PhysicalDesign,
    pub sdc: SdcConstraints,
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    /// Upper bound on cell pins plus ports; raised to 30 if smaller.
    pub max_pins: usize,
    pub seed: u64,
}

const COMBINATIONAL: [(&str, &[&str]); 5] = [
    ("BUF_X1", &["A"]),
    ("BUF_X2", &["A"]),
    ("INV_X1", &["A"]),
    ("AND2_X1", &["A", "B"]),
    ("AND3_X1", &["A", "B", "C"]),
];
const CLOCK_BUFFERS: [&str; 2] = ["CLKBUF_X1", "CLKBUF_X2"];
pub const REGISTER_CLASS: &str = "DFF_X1";

fn constant_tables(rng: &mut ChaCha8Rng) -> (TableSet, TableSet) {
    let mut early: TableSet = Default::default();
    let mut late: TableSet = Default::default();
    for t in [Transition::Rise, Transition::Fall] {
        for kind in [TableKind::delay(t), TableKind::slew(t)] {
            let l: f64 = rng.gen_range(0.05..1.0);
            let e = l * rng.gen_range(0.6..=1.0);
            late[table_slot(Analysis::Late, kind)] = Some(Lut::constant(l));
            early[table_slot(Analysis::Early, kind)] = Some(Lut::constant(e));
        }
    }
    (early, late)
}

fn pin(name: &str, direction: PinDirection, cap: Quad, is_clock: bool) -> LibertyPin {
    LibertyPin {
        name: name.to_string(),
        direction,
        capacitance: cap,
        is_clock,
    }
}

/// Random early and late libraries with the generator's cell set.
pub fn random_libraries(rng: &mut ChaCha8Rng) -> (CellMap, CellMap) {
    let mut early = CellMap::new();
    let mut late = CellMap::new();
    let cap = |rng: &mut ChaCha8Rng| -> Quad {
        let l: f64 = rng.gen_range(0.001..0.005);
        let e = l * rng.gen_range(0.9..=1.0);
        [e, e, l, l]
    };
    let mut add = |name: &str, inputs: &[(&str, bool)], output: &str, rng: &mut ChaCha8Rng| {
        let mut pins: Vec<LibertyPin> = inputs
            .iter()
            .map(|(p, clk)| pin(p, PinDirection::Input, cap(rng), *clk))
            .collect();
        pins.push(pin(output, PinDirection::Output, [0.0; 4], false));
        let (mut ea, mut la) = (Vec::new(), Vec::new());
        for (p, clk) in inputs {
            // a register's data pin has no arc to its output
            if name == REGISTER_CLASS && !clk {
                continue;
            }
            let (e, l) = constant_tables(rng);
            for (arcs, tables) in [(&mut ea, e), (&mut la, l)] {
                arcs.push(TimingArc {
                    related_pin: p.to_string(),
                    output_pin: output.to_string(),
                    tables,
                });
            }
        }
        for (map, arcs) in [(&mut early, ea), (&mut late, la)] {
            map.insert(
                name.to_string(),
                LibertyCell {
                    name: name.to_string(),
                    pins: pins.clone(),
                    arcs,
                },
            );
        }
    };
    for (name, inputs) in COMBINATIONAL {
        let ins: Vec<(&str, bool)> = inputs.iter().map(|p| (*p, false)).collect();
        add(name, &ins, "Y", rng);
    }
    for name in CLOCK_BUFFERS {
        add(name, &[("A", false)], "Y", rng);
    }
    add(REGISTER_CLASS, &[("CK", true), ("D", false)], "Q", rng);
    (early, late)
}

struct Builder {
    rng: ChaCha8Rng,
    die: i64,
    ports: Vec<Port>,
    components: Vec<Component>,
    /// Sinks per driver, in creation order.
    nets: Vec<(Connection, Vec<Connection>)>,
}

impl Builder {
    fn place(&mut self) -> Point {
        Point {
            x: self.rng.gen_range(0..=self.die),
            y: self.rng.gen_range(0..=self.die),
        }
    }

    fn port(&mut self, name: String, direction: PortDirection) -> Connection {
        let location = self.place();
        self.ports.push(Port {
            name: name.clone(),
            direction,
            location,
        });
        Connection::Port(name)
    }

    fn instance(&mut self, name: String, class: &str) {
        let location = self.place();
        self.components.push(Component {
            instance: name,
            cell_class: class.to_string(),
            location,
            orientation: "N".into(),
        });
    }

    /// New signal driven by `driver`; returns its net index.
    fn signal(&mut self, driver: Connection) -> usize {
        self.nets.push((driver, Vec::new()));
        self.nets.len() - 1
    }

    fn finish(self, name: String) -> PhysicalDesign {
        let nets = self
            .nets
            .into_iter()
            .enumerate()
            .filter(|(_, (_, sinks))| !sinks.is_empty())
            .map(|(i, (d, sinks))| {
                let mut connections = vec![d];
                connections.extend(sinks);
                Net {
                    name: format!("n{i}"),
                    connections,
                    driver: None,
                }
            })
            .collect();
        PhysicalDesign {
            name,
            dbu_per_micron: 1000.0,
            die: Rect {
                lo: Point { x: 0, y: 0 },
                hi: Point {
                    x: self.die,
                    y: self.die,
                },
            },
            ports: self.ports,
            components: self.components,
            nets,
        }
    }
}

/// Pick a signal, preferring ones nothing reads yet.
fn pick(rng: &mut ChaCha8Rng, all: &[usize], unread: &mut Vec<usize>) -> usize {
    if !unread.is_empty() && rng.gen_bool(0.7) {
        let i = rng.gen_range(0..unread.len());
        unread.swap_remove(i)
    } else {
        *all.choose(rng).expect("at least one signal")
    }
}

/// A random clocked circuit with at most `opts.max_pins` pins. The clock
/// period is set so that about half of the constrained endpoints violate.
pub fn generate(opts: &SynthOptions) -> Result<SynthCircuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (early, late) = random_libraries(&mut rng);
    let max = opts.max_pins.max(30);
    let large = max > 200;
    let n_pi = if large { max / 400 + 1 } else { rng.gen_range(1..=3) };
    let n_po = if large { max / 400 + 1 } else { rng.gen_range(1..=3) };
    let n_reg = if large { max / 30 } else { rng.gen_range(1..=4) };
    let n_buf = if large { n_reg / 8 + 1 } else { rng.gen_range(0..=4) };
    let die = if large {
        ((max as f64).sqrt() * 2000.0) as i64
    } else {
        100_000
    };
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(rng.gen()),
        die,
        ports: Vec::new(),
        components: Vec::new(),
        nets: Vec::new(),
    };

    let clk = b.port("clk".into(), PortDirection::Input);
    let mut clock_nets = vec![b.signal(clk)];
    for i in 0..n_buf {
        let name = format!("cb{i}");
        let class = *CLOCK_BUFFERS.choose(&mut rng).unwrap();
        b.instance(name.clone(), class);
        let src = *clock_nets.choose(&mut rng).unwrap();
        b.nets[src].1.push(Connection::pin(&name, "A"));
        clock_nets.push(b.signal(Connection::pin(&name, "Y")));
    }

    let mut signals = Vec::new();
    for i in 0..n_pi {
        let p = b.port(format!("in{i}"), PortDirection::Input);
        signals.push(b.signal(p));
    }
    let mut regs = Vec::new();
    for i in 0..n_reg {
        let name = format!("r{i}");
        b.instance(name.clone(), REGISTER_CLASS);
        let src = *clock_nets.choose(&mut rng).unwrap();
        b.nets[src].1.push(Connection::pin(&name, "CK"));
        signals.push(b.signal(Connection::pin(&name, "Q")));
        regs.push(name);
    }
    let mut unread = signals.clone();
    let used = 1 + 2 * n_buf + n_pi + n_po + 3 * n_reg;
    let mut budget = max.saturating_sub(used);
    let mut g = 0;
    while budget >= 2 {
        let (class, inputs) = *COMBINATIONAL
            .iter()
            .filter(|(_, ins)| ins.len() < budget)
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .unwrap();
        budget -= inputs.len() + 1;
        let name = format!("g{g}");
        g += 1;
        b.instance(name.clone(), class);
        for p in inputs.iter() {
            let s = pick(&mut rng, &signals, &mut unread);
            b.nets[s].1.push(Connection::pin(&name, p));
        }
        let s = b.signal(Connection::pin(&name, "Y"));
        signals.push(s);
        unread.push(s);
    }
    for r in &regs {
        let s = pick(&mut rng, &signals, &mut unread);
        b.nets[s].1.push(Connection::pin(r, "D"));
    }
    for i in 0..n_po {
        let s = pick(&mut rng, &signals, &mut unread);
        let p = b.port(format!("out{i}"), PortDirection::Output);
        b.nets[s].1.push(p);
    }

    let mut sdc = SdcConstraints {
        clock_period: 1.0,
        clock_name: "clk".into(),
        clock_port: "clk".into(),
        clock_uncertainty: if rng.gen_bool(0.5) {
            rng.gen_range(0.0..0.2)
        } else {
            0.0
        },
        output_delays: BTreeMap::new(),
        all_outputs_delay: None,
        input_delays: BTreeMap::new(),
        all_inputs_delay: None,
        ignored: Vec::new(),
    };
    for i in 0..n_pi {
        if rng.gen_bool(0.5) {
            sdc.input_delays.insert(format!("in{i}"), rng.gen_range(0.0..0.5));
        }
    }
    for i in 0..n_po {
        if rng.gen_bool(0.5) {
            sdc.output_delays.insert(format!("out{i}"), rng.gen_range(0.0..0.5));
        }
    }
    let name = format!("synth_{}", opts.seed);
    let mut c = SynthCircuit {
        name: name.clone(),
        early,
        late,
        design: b.finish(name),
        sdc,
    };
    c.sdc.clock_period = c.median_period()?;
    Ok(c)
}

impl SynthCircuit {
    pub fn library_set(&self) -> LibrarySet {
        LibrarySet::new(self.early.clone(), self.late.clone())
    }

    /// The period at which half the constrained endpoints have zero
    /// uncorrected slack.
    fn median_period(&self) -> Result<f64> {
        let (graph, _) = build_timing_graph(&self.design, &self.library_set(), (1, 1))?;
        let timing = propagate_at(&graph, &self.sdc, &PropagateOptions::default())?.timing;
        let mut probe = self.sdc.clone();
        probe.clock_period = 0.0;
        let report = analyze(&SlackInputs {
            graph: &graph,
            timing: &timing,
            sdc: &probe,
            labels: None,
            options: &SlackOptions::default(),
        })?;
        let mut need: Vec<f64> = report.endpoints.iter().map(|e| -e.slack).collect();
        if need.is_empty() {
            return Ok(1.0);
        }
        need.sort_by(f64::total_cmp);
        Ok(need[need.len() / 2].max(0.01))
    }

    /// Ground-truth labels: propagated AT and slew on every pin, corrected
    /// late-rise RAT on constrained endpoints, and cell and net delays.
    pub fn labels(&self, lut_shape: (usize, usize)) -> Result<DelayLabels> {
        let (graph, _) = build_timing_graph(&self.design, &self.library_set(), lut_shape)?;
        let timing = propagate_at(&graph, &self.sdc, &PropagateOptions::default())?.timing;
        let report = analyze(&SlackInputs {
            graph: &graph,
            timing: &timing,
            sdc: &self.sdc,
            labels: None,
            options: &SlackOptions::default(),
        })?;
        let mut labels = DelayLabels::default();
        timing_to_labels(&graph, &timing, &mut labels);
        for e in &report.endpoints {
            labels.set(&e.name, Quantity::Rat, Corner::LateRise, e.rat_corrected);
        }
        let loads = graph.pin_loads();
        for e in &graph.cell_edges {
            let (NodeKind::Pin { instance, pin: a }, NodeKind::Pin { pin: b, .. }) =
                (&graph.node(e.src).kind, &graph.node(e.dst).kind)
            else {
                continue;
            };
            let mut q = [0.0; 4];
            for c in Corner::ALL {
                let slot = table_slot(c.analysis(), TableKind::delay(c.transition()));
                if let Some(t) = graph.table(e, slot) {
                    q[c.index()] =
                        t.lookup(timing.slew[e.src as usize][c.index()], loads[e.dst as usize][c.index()])?;
                }
            }
            labels.cell_delays.insert(
                (graph.instances[*instance as usize].name.clone(), a.clone(), b.clone()),
                q,
            );
        }
        for e in &graph.net_edges {
            labels.net_delays.insert(
                (graph.node(e.src).name.clone(), graph.node(e.dst).name.clone()),
                [0.0; 4],
            );
        }
        Ok(labels)
    }

    /// Write the benchmark files into `dir`: early/late Liberty, DEF, SDC
    /// and an SDF with embedded labels.
    pub fn write_files(&self, dir: &std::path::Path, lut_shape: (usize, usize)) -> Result<SynthFiles> {
        let io = |path: &std::path::Path, e: std::io::Error| crate::Error::Io {
            path: path.display().to_string(),
            cause: e,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let files = SynthFiles {
            lib_early: dir.join(format!("{}_early.lib", self.name)),
            lib_late: dir.join(format!("{}_late.lib", self.name)),
            def: dir.join(format!("{}.def", self.name)),
            sdc: dir.join(format!("{}.sdc", self.name)),
            sdf: dir.join(format!("{}.sdf", self.name)),
        };
        let labels = self.labels(lut_shape)?;
        for (path, text) in [
            (&files.lib_early, write_liberty(&self.early, Analysis::Early)),
            (&files.lib_late, write_liberty(&self.late, Analysis::Late)),
            (&files.def, write_def(&self.design)),
            (&files.sdc, write_sdc(&self.sdc)),
            (&files.sdf, write_sdf(&labels, &self.name)),
        ] {
            std::fs::write(path, text).map_err(|e| io(path, e))?;
        }
        Ok(files)
    }
}

#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub lib_early: std::path::PathBuf,
    pub lib_late: std::path::PathBuf,
    pub def: std::path::PathBuf,
    pub sdc: std::path::PathBuf,
    pub sdf: std::path::PathBuf,
}

/// A buffer chain `in -> BUF x stages -> out` with every delay equal to
/// `stage_delay` and a period chosen so the only endpoint has `slack`.
/// With dyadic inputs (e.g. 0.5 and -1.0) the slack is exact.
pub fn known_slack_chain(stages: usize, stage_delay: f64, slack: f64) -> SynthCircuit {
    let mut early = CellMap::new();
    let mut late = CellMap::new();
    let mut tables: TableSet = Default::default();
    for (slot, table) in tables.iter_mut().enumerate() {
        let kind = TableKind::ALL[slot % 4];
        let v = if matches!(kind, TableKind::CellRise | TableKind::CellFall) {
            stage_delay
        } else {
            0.05
        };
        *table = Some(Lut::constant(v));
    }
    for map in [&mut early, &mut late] {
        map.insert(
            "BUF_X1".into(),
            LibertyCell {
                name: "BUF_X1".into(),
                pins: vec![
                    pin("A", PinDirection::Input, [0.001; 4], false),
                    pin("Y", PinDirection::Output, [0.0; 4], false),
                ],
                arcs: vec![TimingArc {
                    related_pin: "A".into(),
                    output_pin: "Y".into(),
                    tables: tables.clone(),
                }],
            },
        );
    }
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(0),
        die: 100_000,
        ports: Vec::new(),
        components: Vec::new(),
        nets: Vec::new(),
    };
    let clk = b.port("clk".into(), PortDirection::Input);
    b.signal(clk);
    let input = b.port("in".into(), PortDirection::Input);
    let mut cur = b.signal(input);
    for i in 0..stages {
        let name = format!("u{i}");
        b.instance(name.clone(), "BUF_X1");
        b.nets[cur].1.push(Connection::pin(&name, "A"));
        cur = b.signal(Connection::pin(&name, "Y"));
    }
    let out = b.port("out".into(), PortDirection::Output);
    b.nets[cur].1.push(out);
    let name = format!("chain{stages}");
    SynthCircuit {
        name: name.clone(),
        early,
        late,
        design: b.finish(name),
        sdc: SdcConstraints {
            clock_period: stages as f64 * stage_delay + slack,
            clock_name: "clk".into(),
            clock_port: "clk".into(),
            clock_uncertainty: 0.0,
            output_delays: BTreeMap::new(),
            all_outputs_delay: None,
            input_delays: BTreeMap::new(),
            all_inputs_delay: None,
            ignored: Vec::new(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pin_count(c: &SynthCircuit) -> usize {
        let libs = c.library_set();
        c.design.ports.len()
            + c.design
                .components
                .iter()
                .map(|k| libs.cell(&k.cell_class).unwrap().pins.len())
                .sum::<usize>()
    }

    #[test]
    fn small_circuits_respect_the_pin_budget() {
        for seed in 0..50 {
            let c = generate(&SynthOptions { max_pins: 50, seed }).unwrap();
            assert!(pin_count(&c) <= 50, "seed {seed}: {}", pin_count(&c));
            assert!(c.sdc.clock_period > 0.0);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(&SynthOptions { max_pins: 40, seed: 7 }).unwrap();
        let b = generate(&SynthOptions { max_pins: 40, seed: 7 }).unwrap();
        assert_eq!(a.design, b.design);
        assert_eq!(a.sdc, b.sdc);
        assert_eq!(a.late, b.late);
    }

    #[test]
    fn early_tables_never_exceed_late() {
        let c = generate(&SynthOptions { max_pins: 50, seed: 3 }).unwrap();
        for (name, l) in &c.late {
            let e = &c.early[name];
            for (ea, la) in e.arcs.iter().zip(&l.arcs) {
                for k in TableKind::ALL {
                    let ev = ea.table(Analysis::Early, k).unwrap().value(0, 0);
                    let lv = la.table(Analysis::Late, k).unwrap().value(0, 0);
                    assert!(ev <= lv);
                }
            }
        }
    }

    #[test]
    fn known_chain_slack() {
        let c = known_slack_chain(4, 0.5, -1.0);
        assert_eq!(c.sdc.clock_period, 1.0);
        let labels = c.labels((1, 1)).unwrap();
        assert_eq!(labels.get("out", Quantity::At, Corner::LateRise), Some(2.0));
        assert_eq!(labels.get("out", Quantity::Rat, Corner::LateRise), Some(1.0));
    }
}
