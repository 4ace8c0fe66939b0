//! End-to-end runs: load files, build the graph, obtain arrival times,
//! compute slack and compare against labels.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::at_provider::{PinTiming, PropagateOptions, ProviderInputs, ProviderRegistry};
use crate::corner::Analysis;
use crate::error::{Error, Result};
use crate::liberty::{merge_libraries, parse_liberty_as, Library, LibrarySet, DEFAULT_LUT_SHAPE};
use crate::metrics::{evaluate, EvalSummary};
use crate::physical::{parse_def, NetDiagnostic, PhysicalDesign};
use crate::sdc::{parse_sdc, SdcConstraints};
use crate::sdf::{parse_label_sidecar, parse_sdf, DelayLabels, ParsedLabels};
use crate::slack_engine::{analyze, ClockEarlyMode, SlackInputs, SlackOptions, SlackReport};
use crate::timing_graph::{export_graph, GraphDocument, TimingGraph};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lib_early: Vec<PathBuf>,
    pub lib_late: Vec<PathBuf>,
    pub def: Option<PathBuf>,
    pub sdc: Option<PathBuf>,
    pub sdf: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub at_source: String,
    pub lut_shape: (usize, usize),
    pub propagate: PropagateOptions,
    pub clock_early: ClockEarlyMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lib_early: Vec::new(),
            lib_late: Vec::new(),
            def: None,
            sdc: None,
            sdf: None,
            labels: None,
            predictions: None,
            at_source: "propagate".into(),
            lut_shape: DEFAULT_LUT_SHAPE,
            propagate: PropagateOptions::default(),
            clock_early: ClockEarlyMode::default(),
        }
    }
}

impl RunConfig {
    /// Check required inputs for a command. Failures are argument errors.
    pub fn validate(&self, needs_sdc: bool, needs_labels: bool) -> Result<()> {
        let arg = |m: &str| Err(Error::Argument(m.to_string()));
        if self.lib_early.is_empty() || self.lib_late.is_empty() {
            return arg("at least one early and one late Liberty file are required");
        }
        if self.def.is_none() {
            return arg("a DEF file is required");
        }
        if needs_sdc && self.sdc.is_none() {
            return arg("an SDC file is required");
        }
        let has_labels = self.sdf.is_some() || self.labels.is_some();
        if needs_labels && !has_labels {
            return arg("an SDF or label file is required");
        }
        match self.at_source.as_str() {
            "labels" if !has_labels => arg("--at labels needs an SDF or label file"),
            "external" if self.predictions.is_none() => arg("--at external needs a prediction file"),
            _ => Ok(()),
        }
    }
}

/// Wall time per phase, in order.
#[derive(Debug, Clone, Default)]
pub struct Phases {
    pub entries: Vec<(&'static str, f64)>,
}

impl Phases {
    fn time<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.entries.push((name, t.elapsed().as_secs_f64()));
        out
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, s)| s).sum()
    }

    pub fn line(&self) -> String {
        let mut parts: Vec<String> = self.entries.iter().map(|(n, s)| format!("{n}={s:.3}s")).collect();
        parts.push(format!("total={:.3}s", self.total()));
        parts.join(" ")
    }
}

pub struct Loaded {
    pub libs: LibrarySet,
    pub design: PhysicalDesign,
    pub sdc: Option<SdcConstraints>,
    pub labels: Option<DelayLabels>,
    pub predictions: Option<DelayLabels>,
    pub warnings: Vec<String>,
}

enum Parsed {
    Lib(Analysis, Library),
    Def(PhysicalDesign, Vec<String>),
    Sdc(SdcConstraints),
    Sdf(ParsedLabels),
    Labels(ParsedLabels),
    Predictions(ParsedLabels),
}

#[derive(Clone, Copy)]
enum Kind {
    LibEarly,
    LibLate,
    Def,
    Sdc,
    Sdf,
    Labels,
    Predictions,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        cause: e,
    })
}

fn parse_one(kind: Kind, path: &Path) -> Result<Parsed> {
    let text = read(path)?;
    let wrap = |e: Error| e.in_file(path.display().to_string());
    Ok(match kind {
        Kind::LibEarly => Parsed::Lib(Analysis::Early, parse_liberty_as(&text, Analysis::Early).map_err(wrap)?),
        Kind::LibLate => Parsed::Lib(Analysis::Late, parse_liberty_as(&text, Analysis::Late).map_err(wrap)?),
        Kind::Def => {
            let d = parse_def(&text).map_err(wrap)?;
            Parsed::Def(d.design, d.warnings)
        }
        Kind::Sdc => Parsed::Sdc(parse_sdc(&text).map_err(wrap)?),
        Kind::Sdf => Parsed::Sdf(parse_sdf(&text).map_err(wrap)?),
        Kind::Labels => Parsed::Labels(parse_label_sidecar(&text).map_err(wrap)?),
        Kind::Predictions => Parsed::Predictions(parse_label_sidecar(&text).map_err(wrap)?),
    })
}

/// Parse every input file concurrently on the current rayon pool. Results
/// are combined in argument order, so the outcome does not depend on
/// scheduling.
pub fn load(cfg: &RunConfig) -> Result<Loaded> {
    let mut jobs: Vec<(Kind, &Path)> = Vec::new();
    jobs.extend(cfg.lib_early.iter().map(|p| (Kind::LibEarly, p.as_path())));
    jobs.extend(cfg.lib_late.iter().map(|p| (Kind::LibLate, p.as_path())));
    let opt = [
        (Kind::Def, &cfg.def),
        (Kind::Sdc, &cfg.sdc),
        (Kind::Sdf, &cfg.sdf),
        (Kind::Labels, &cfg.labels),
        (Kind::Predictions, &cfg.predictions),
    ];
    for (k, p) in opt {
        if let Some(p) = p {
            jobs.push((k, p.as_path()));
        }
    }
    let parsed: Vec<Parsed> = jobs.par_iter().map(|&(k, p)| parse_one(k, p)).collect::<Result<_>>()?;

    let (mut early, mut late) = (Vec::new(), Vec::new());
    let mut design = None;
    let (mut sdc, mut sdf, mut sidecar, mut predictions) = (None, None, None, None);
    let mut warnings = Vec::new();
    for (p, (_, path)) in parsed.into_iter().zip(&jobs) {
        let path = path.display();
        match p {
            Parsed::Lib(a, lib) => {
                warnings.extend(lib.warnings.iter().map(|w| format!("{path}: {w}")));
                match a {
                    Analysis::Early => early.push(lib),
                    Analysis::Late => late.push(lib),
                }
            }
            Parsed::Def(d, w) => {
                warnings.extend(w.into_iter().map(|w| format!("{path}: {w}")));
                design = Some(d);
            }
            Parsed::Sdc(s) => {
                if !s.ignored.is_empty() {
                    warnings.push(format!("{path}: {} unsupported command(s) ignored", s.ignored.len()));
                }
                sdc = Some(s);
            }
            Parsed::Sdf(l) => sdf = Some(label_warnings(l, &path.to_string(), &mut warnings)),
            Parsed::Labels(l) => sidecar = Some(label_warnings(l, &path.to_string(), &mut warnings)),
            Parsed::Predictions(l) => predictions = Some(label_warnings(l, &path.to_string(), &mut warnings)),
        }
    }
    let mut merge = |libs: Vec<Library>| {
        let m = merge_libraries(libs);
        warnings.extend(m.warnings);
        m.cells
    };
    let libs = LibrarySet::new(merge(early), merge(late));
    let design = design.ok_or_else(|| Error::Argument("a DEF file is required".into()))?;
    if let Some(s) = &sdc {
        s.bind(&design)?;
    }
    let labels = match (sdf, sidecar) {
        (None, None) => None,
        (Some(a), None) | (None, Some(a)) => Some(a),
        (Some(mut a), Some(b)) => {
            a.merge(b);
            Some(a)
        }
    };
    Ok(Loaded {
        libs,
        design,
        sdc,
        labels,
        predictions,
        warnings,
    })
}

fn label_warnings(l: ParsedLabels, path: &str, warnings: &mut Vec<String>) -> DelayLabels {
    warnings.extend(l.warnings.iter().map(|w| format!("{path}: {w}")));
    l.labels
}

/// Counts reported by `parse`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub cell_edges: usize,
    pub net_edges: usize,
    pub endpoints: usize,
    pub removed_edges: usize,
}

impl GraphStats {
    pub fn of(g: &TimingGraph) -> Self {
        GraphStats {
            nodes: g.node_count(),
            cell_edges: g.cell_edges.len(),
            net_edges: g.net_edges.len(),
            endpoints: g.endpoints.len(),
            removed_edges: g.removed_edges.len(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "nodes={} cell_edges={} net_edges={} endpoints={} removed_edges={}",
            self.nodes, self.cell_edges, self.net_edges, self.endpoints, self.removed_edges
        )
    }
}

fn diag_warnings(diags: &[NetDiagnostic]) -> Vec<String> {
    diags.iter().map(|d| d.to_string()).collect()
}

pub struct ParseRun {
    pub loaded: Loaded,
    pub graph: TimingGraph,
    pub stats: GraphStats,
    pub phases: Phases,
    pub warnings: Vec<String>,
}

impl ParseRun {
    pub fn document(&self) -> (GraphDocument, Vec<String>) {
        export_graph(&self.graph, self.loaded.labels.as_ref())
    }
}

/// Parse inputs and build the leveled, acyclic graph.
pub fn run_parse(cfg: &RunConfig) -> Result<ParseRun> {
    cfg.validate(false, false)?;
    let mut phases = Phases::default();
    let loaded = phases.time("parse", || load(cfg)).map_err(|e| e.in_stage("parse"))?;
    let (graph, diags) = phases
        .time("graph", || {
            crate::timing_graph::build_timing_graph(&loaded.design, &loaded.libs, cfg.lut_shape)
        })
        .map_err(|e| e.in_stage("graph"))?;
    let mut warnings = loaded.warnings.clone();
    warnings.extend(diag_warnings(&diags));
    if !graph.removed_edges.is_empty() {
        warnings.push(format!("{} edge(s) removed to break cycles", graph.removed_edges.len()));
    }
    Ok(ParseRun {
        stats: GraphStats::of(&graph),
        loaded,
        graph,
        phases,
        warnings,
    })
}

pub struct SlackRun {
    pub parse: ParseRun,
    pub timing: PinTiming,
    pub report: SlackReport,
    pub warnings: Vec<String>,
}

/// The full slack flow with the AT source named in the config.
pub fn run_slack(cfg: &RunConfig, registry: &ProviderRegistry) -> Result<SlackRun> {
    cfg.validate(true, false)?;
    let provider = registry.get(&cfg.at_source)?;
    let mut run = run_parse(cfg)?;
    let sdc = run.loaded.sdc.clone().expect("validated");
    let provided = run
        .phases
        .time("arrival", || {
            provider.provide(&ProviderInputs {
                graph: &run.graph,
                sdc: &sdc,
                labels: run.loaded.labels.as_ref(),
                predictions: run.loaded.predictions.as_ref(),
                options: &cfg.propagate,
            })
        })
        .map_err(|e| e.in_stage("arrival"))?;
    let options = SlackOptions {
        clock_early: cfg.clock_early,
        net_delay_per_micron: cfg.propagate.net_delay_per_micron,
    };
    let mut report = run
        .phases
        .time("slack", || {
            analyze(&SlackInputs {
                graph: &run.graph,
                timing: &provided.timing,
                sdc: &sdc,
                labels: run.loaded.labels.as_ref(),
                options: &options,
            })
        })
        .map_err(|e| e.in_stage("slack"))?;
    report.settings.at_source = cfg.at_source.clone();
    let mut warnings = std::mem::take(&mut run.warnings);
    warnings.extend(provided.warnings);
    Ok(SlackRun {
        parse: run,
        timing: provided.timing,
        report,
        warnings,
    })
}

/// Slack flow followed by evaluation against the labels.
pub fn run_compare(cfg: &RunConfig, registry: &ProviderRegistry) -> Result<(SlackRun, EvalSummary)> {
    cfg.validate(true, true)?;
    let mut run = run_slack(cfg, registry)?;
    let labels = run.parse.loaded.labels.as_ref().expect("validated");
    let summary = run
        .parse
        .phases
        .time("compare", || {
            evaluate(&run.parse.graph, &run.report, labels, &run.timing)
        })
        .map_err(|e| e.in_stage("compare"))?;
    Ok((run, summary))
}
