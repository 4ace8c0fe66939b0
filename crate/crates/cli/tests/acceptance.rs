//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p prslack-cli --test acceptance`. Criterion 8 needs
//! the public benchmark dataset; point `PRSLACK_DATASET_DIR` at it to run it,
//! otherwise it reports NOT RUN.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use oracle::Oracle;
use prslack_core::at_provider::{at_from_labels, propagate_at, AtSource, PropagateOptions, ProviderRegistry};
use prslack_core::corner::{Analysis, Corner};
use prslack_core::liberty::{parse_liberty_as, write_liberty, Lut};
use prslack_core::physical::{parse_def, write_def};
use prslack_core::pipeline::{run_parse, run_slack, RunConfig};
use prslack_core::sdc::write_sdc;
use prslack_core::sdf::{parse_sdf, write_sdf};
use prslack_core::slack_engine::{analyze, SlackInputs, SlackOptions, SlackReport};
use prslack_core::synth::{fuzz, generate, known_slack_chain, SynthCircuit, SynthOptions};
use prslack_core::timing_graph::build_timing_graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_CIRCUITS: u64 = 500;
const ORACLE_MAX_PINS: usize = 50;
const SLACK_TOL: f64 = 1e-9;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const LUT_TABLES: usize = 10_000;
const LUT_TOL: f64 = 1e-12;
const FUZZ_CASES: u64 = 1000;
const JOBS: [&str; 2] = ["1", "8"];
const PERF_PINS: usize = 100_000;
const PERF_BUDGET: Duration = Duration::from_secs(30);
const TABLE2: [(&str, [usize; 4]); 2] = [("gcd", [1306, 835, 894, 53]), ("inverter", [8, 3, 4, 1])];
const USB_TNS_WNS: f64 = -0.69;
const USB_TOL: f64 = 0.01;
const SHAPE: (usize, usize) = (7, 7);

enum Verdict {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = fn() -> Verdict;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn verdict(r: Result<String, String>) -> Verdict {
    match r {
        Ok(s) => Verdict::Pass(s),
        Err(s) => Verdict::Fail(s),
    }
}

struct CorpusRun {
    circuit: SynthCircuit,
    report: SlackReport,
}

/// The oracle corpus, analyzed once with label ATs from the propagator.
fn corpus() -> &'static (Vec<CorpusRun>, Duration) {
    static CORPUS: OnceLock<(Vec<CorpusRun>, Duration)> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let start = Instant::now();
        let runs = (0..ORACLE_CIRCUITS)
            .map(|seed| {
                let circuit = generate(&SynthOptions {
                    max_pins: ORACLE_MAX_PINS,
                    seed,
                })
                .unwrap();
                let labels = circuit.labels(SHAPE).unwrap();
                let (g, _) = build_timing_graph(&circuit.design, &circuit.library_set(), SHAPE).unwrap();
                let timing = at_from_labels(
                    &g,
                    &circuit.sdc,
                    &labels,
                    &PropagateOptions::default(),
                    AtSource::Labels,
                )
                .unwrap()
                .timing;
                let report = analyze(&SlackInputs {
                    graph: &g,
                    timing: &timing,
                    sdc: &circuit.sdc,
                    labels: Some(&labels),
                    options: &SlackOptions::default(),
                })
                .unwrap();
                CorpusRun { circuit, report }
            })
            .collect();
        (runs, start.elapsed())
    })
}

fn criterion_1() -> Verdict {
    verdict((|| {
        let (runs, engine_time) = corpus();
        let start = Instant::now();
        let (mut endpoints, mut corrected, mut worst) = (0usize, 0usize, 0.0f64);
        for run in runs {
            let pins = build_timing_graph(&run.circuit.design, &run.circuit.library_set(), SHAPE)
                .unwrap()
                .0
                .node_count();
            ensure(pins <= ORACLE_MAX_PINS, || {
                format!("{} has {pins} pins", run.circuit.name)
            })?;
            let want = Oracle::new(&run.circuit).endpoints();
            let got: BTreeSet<&str> = run.report.endpoints.iter().map(|e| e.name.as_str()).collect();
            let exp: BTreeSet<&str> = want.keys().map(String::as_str).collect();
            ensure(got == exp, || format!("{}: endpoint sets differ", run.circuit.name))?;
            for e in &run.report.endpoints {
                let d = (e.slack_corrected - want[&e.name].slack_corrected).abs();
                worst = worst.max(d);
                ensure(d <= SLACK_TOL, || {
                    format!(
                        "{} {}: slack {} vs oracle {}",
                        run.circuit.name, e.name, e.slack_corrected, want[&e.name].slack_corrected
                    )
                })?;
                endpoints += 1;
                corrected += usize::from(e.crp > 0.0);
            }
        }
        let total = *engine_time + start.elapsed();
        ensure(total < ORACLE_BUDGET, || format!("took {total:.2?}"))?;
        Ok(format!(
            "{} circuits, {endpoints} endpoints ({corrected} with CRP > 0), max |diff| {worst:e}, {total:.2?}",
            runs.len()
        ))
    })())
}

fn criterion_2() -> Verdict {
    verdict((|| {
        let (runs, _) = corpus();
        let mut n = 0;
        for run in runs {
            let before: BTreeSet<&str> = run
                .report
                .endpoints
                .iter()
                .filter(|e| e.slack < 0.0)
                .map(|e| e.name.as_str())
                .collect();
            for e in &run.report.endpoints {
                ensure(e.crp >= 0.0, || {
                    format!("{} {}: CRP {}", run.circuit.name, e.name, e.crp)
                })?;
                ensure(e.slack_corrected >= e.slack, || {
                    format!(
                        "{} {}: corrected {} < {}",
                        run.circuit.name, e.name, e.slack_corrected, e.slack
                    )
                })?;
                if e.slack_corrected < 0.0 {
                    ensure(before.contains(e.name.as_str()), || {
                        format!("{} {}: critical only after correction", run.circuit.name, e.name)
                    })?;
                }
                n += 1;
            }
        }
        Ok(format!("{n} endpoints, 0 counterexamples"))
    })())
}

fn single_report(c: &SynthCircuit) -> SlackReport {
    let (g, _) = build_timing_graph(&c.design, &c.library_set(), SHAPE).unwrap();
    let timing = propagate_at(&g, &c.sdc, &PropagateOptions::default()).unwrap().timing;
    analyze(&SlackInputs {
        graph: &g,
        timing: &timing,
        sdc: &c.sdc,
        labels: None,
        options: &SlackOptions::default(),
    })
    .unwrap()
}

fn criterion_3() -> Verdict {
    verdict((|| {
        let mut po = known_slack_chain(3, 0.5, 0.0);
        po.sdc.clock_period = 10.0;
        po.sdc.clock_uncertainty = 0.5;
        po.sdc.output_delays.insert("out".into(), 2.0);
        let r = single_report(&po);
        let rat = r.endpoints.iter().find(|e| e.name == "out").map(|e| e.rat);
        ensure(rat == Some(7.5), || format!("PO RAT {rat:?}, expected 7.5"))?;

        // capture clock pins arriving at 0.8 on the early corner
        let mut reg = generate(&SynthOptions { max_pins: 50, seed: 3 }).unwrap();
        reg.sdc.clock_period = 10.0;
        reg.sdc.clock_uncertainty = 0.25;
        let (g, _) = build_timing_graph(&reg.design, &reg.library_set(), SHAPE).unwrap();
        let mut timing = propagate_at(&g, &reg.sdc, &PropagateOptions::default()).unwrap().timing;
        for (v, n) in g.nodes.iter().enumerate() {
            if n.is_clock_pin {
                timing.at[v][Corner::EarlyRise.index()] = 0.8;
            }
        }
        let r = analyze(&SlackInputs {
            graph: &g,
            timing: &timing,
            sdc: &reg.sdc,
            labels: None,
            options: &SlackOptions::default(),
        })
        .unwrap();
        let rats: Vec<f64> = r.endpoints.iter().filter(|e| !e.is_po).map(|e| e.rat).collect();
        ensure(!rats.is_empty(), || "no register endpoints".into())?;
        ensure(rats.iter().all(|&v| v == 10.55), || {
            format!("register RATs {rats:?}, expected 10.55")
        })?;
        Ok(format!("PO RAT 7.5, {} register RATs 10.55", rats.len()))
    })())
}

fn random_axis(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut x = rng.gen_range(0.0..1.0);
    (0..n)
        .map(|_| {
            let v = x;
            x += rng.gen_range(0.01..1.0);
            v
        })
        .collect()
}

fn criterion_4() -> Verdict {
    verdict((|| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checks = 0usize;
        for case in 0..LUT_TABLES {
            let (r, c) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let (a, b) = (random_axis(&mut rng, r), random_axis(&mut rng, c));
            let v: Vec<f64> = (0..r * c).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let t = Lut::from_flat(a.clone(), b.clone(), v).unwrap();
            for (i, &x) in a.iter().enumerate() {
                for (j, &y) in b.iter().enumerate() {
                    ensure(t.lookup(x, y).unwrap() == t.value(i, j), || {
                        format!("table {case}: grid ({i},{j}) not exact")
                    })?;
                    checks += 1;
                }
            }
            let (tr, tc) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let once = t.interpolate(tr, tc).unwrap();
            ensure(once.interpolate(tr, tc).unwrap() == once, || {
                format!("table {case}: resampling not idempotent")
            })?;

            // affine values: lookup and resampling reproduce the plane
            let (ar, ac) = (rng.gen_range(2..=8), rng.gen_range(2..=8));
            let (a, b) = (random_axis(&mut rng, ar), random_axis(&mut rng, ac));
            let (c0, c1, c2) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let f = |x: f64, y: f64| c0 + c1 * x + c2 * y;
            let vals: Vec<f64> = a.iter().flat_map(|&x| b.iter().map(move |&y| f(x, y))).collect();
            let t = Lut::from_flat(a.clone(), b.clone(), vals).unwrap();
            let r = t.interpolate(rng.gen_range(2..=8), rng.gen_range(2..=8)).unwrap();
            for _ in 0..8 {
                let x = rng.gen_range(a[0]..=a[ar - 1]);
                let y = rng.gen_range(b[0]..=b[ac - 1]);
                let got = t.lookup(x, y).unwrap();
                ensure((got - f(x, y)).abs() <= LUT_TOL, || {
                    format!("table {case}: lookup {got} vs {}", f(x, y))
                })?;
                let re = r.lookup(x, y).unwrap();
                ensure((re - got).abs() <= LUT_TOL, || {
                    format!("table {case}: resampled lookup {re} vs {got}")
                })?;
                checks += 2;
            }
        }
        Ok(format!("{} tables, {checks} point checks", 2 * LUT_TABLES))
    })())
}

fn criterion_5() -> Verdict {
    verdict((|| {
        let (runs, _) = corpus();
        let mut pins = 0usize;
        for run in runs {
            let c = &run.circuit;
            let (g, _) = build_timing_graph(&c.design, &c.library_set(), SHAPE).unwrap();
            let timing = propagate_at(&g, &c.sdc, &PropagateOptions::default()).unwrap().timing;
            let o = Oracle::new(c);
            for (v, n) in g.nodes.iter().enumerate() {
                ensure(o.names[v] == n.name, || {
                    format!("{}: pin order differs at {}", c.name, n.name)
                })?;
                let want = o.arrival(v);
                ensure(timing.at[v] == want, || {
                    format!("{} {}: {:?} vs oracle {want:?}", c.name, n.name, timing.at[v])
                })?;
                let at = timing.at[v];
                ensure(at[0] <= at[2] && at[1] <= at[3], || {
                    format!("{} {}: early above late {at:?}", c.name, n.name)
                })?;
                pins += 1;
            }
        }
        Ok(format!("{pins} pins exact, early <= late on all"))
    })())
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")
}

fn corpus_files() -> Vec<PathBuf> {
    let mut out = Vec::new();
    for dir in [data_dir(), data_dir().join("synth")] {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn roundtrip(path_or_case: &str, kind: &str, text: &str, analysis: Analysis) -> Result<(), String> {
    let fail = |e: String| format!("{kind} {path_or_case}: {e}");
    let same = match kind {
        "lib" => {
            let a = parse_liberty_as(text, analysis).map_err(|e| fail(e.to_string()))?.cells;
            let b = parse_liberty_as(&write_liberty(&a, analysis), analysis)
                .map_err(|e| fail(e.to_string()))?
                .cells;
            a == b
        }
        "def" => {
            let a = parse_def(text).map_err(|e| fail(e.to_string()))?.design;
            let b = parse_def(&write_def(&a)).map_err(|e| fail(e.to_string()))?.design;
            a == b
        }
        "sdf" => {
            let a = parse_sdf(text).map_err(|e| fail(e.to_string()))?.labels;
            let b = parse_sdf(&write_sdf(&a, "rt")).map_err(|e| fail(e.to_string()))?.labels;
            a == b
        }
        _ => true,
    };
    ensure(same, || fail("structure changed".into()))
}

fn criterion_6() -> Verdict {
    verdict((|| {
        let mut bundled = 0;
        for p in corpus_files() {
            let kind = p.extension().and_then(|e| e.to_str()).unwrap_or("").to_string();
            if !["lib", "def", "sdf"].contains(&kind.as_str()) {
                continue;
            }
            let text = std::fs::read_to_string(&p).unwrap();
            let name = p.file_name().unwrap().to_string_lossy().to_string();
            let analysis = if name.ends_with("_early.lib") {
                Analysis::Early
            } else {
                Analysis::Late
            };
            roundtrip(&name, &kind, &text, analysis)?;
            bundled += 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for case in 0..FUZZ_CASES {
            let id = format!("fuzz case {case}");
            let analysis = if case % 2 == 0 { Analysis::Late } else { Analysis::Early };
            roundtrip(&id, "lib", &fuzz::liberty_text(&mut rng), analysis)?;
            roundtrip(&id, "def", &fuzz::def_text(&mut rng), analysis)?;
            roundtrip(&id, "sdf", &fuzz::sdf_text(&mut rng), analysis)?;
        }
        Ok(format!("{bundled} bundled files, {FUZZ_CASES} fuzz cases per format"))
    })())
}

struct Design {
    name: String,
    args: Vec<String>,
}

fn design(name: &str, early: &Path, late: &Path, def: &Path, sdc: &Path, extra: &[&str]) -> Design {
    let mut args: Vec<String> = vec![
        "--lib-early".into(),
        early.display().to_string(),
        "--lib-late".into(),
        late.display().to_string(),
        "--def".into(),
        def.display().to_string(),
        "--sdc".into(),
        sdc.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    Design {
        name: name.to_string(),
        args,
    }
}

fn criterion_7() -> Verdict {
    verdict((|| {
        let tmp = tempfile::tempdir().unwrap();
        let d = data_dir();
        let s = d.join("synth");
        let mut designs = vec![
            design(
                "demo_top",
                &d.join("cells.lib"),
                &d.join("cells.lib"),
                &d.join("top.def"),
                &d.join("top.sdc"),
                &[],
            ),
            design(
                "demo_top labels",
                &d.join("cells.lib"),
                &d.join("cells.lib"),
                &d.join("top.def"),
                &d.join("top.sdc"),
                &[
                    "--sdf",
                    &d.join("top.sdf").display().to_string(),
                    "--at",
                    "labels",
                    "--permissive-labels",
                ],
            ),
        ];
        for n in ["synth_1", "synth_2", "synth_3", "chain4"] {
            let f = |suffix: &str| s.join(format!("{n}{suffix}"));
            designs.push(design(
                n,
                &f("_early.lib"),
                &f("_late.lib"),
                &f(".def"),
                &f(".sdc"),
                &[],
            ));
            let sdf = f(".sdf").display().to_string();
            designs.push(design(
                &format!("{n} labels"),
                &f("_early.lib"),
                &f("_late.lib"),
                &f(".def"),
                &f(".sdc"),
                &["--sdf", &sdf, "--at", "labels"],
            ));
        }
        let big = generate(&SynthOptions {
            max_pins: 20_000,
            seed: 7,
        })
        .unwrap();
        let files = big.write_files(tmp.path(), SHAPE).unwrap();
        let sdf = files.sdf.display().to_string();
        designs.push(design(
            "synth_7 20k",
            &files.lib_early,
            &files.lib_late,
            &files.def,
            &files.sdc,
            &[],
        ));
        designs.push(design(
            "synth_7 20k labels",
            &files.lib_early,
            &files.lib_late,
            &files.def,
            &files.sdc,
            &["--sdf", &sdf, "--at", "labels"],
        ));

        for (k, dsg) in designs.iter().enumerate() {
            let mut reports = Vec::new();
            for jobs in JOBS {
                let out = tmp.path().join(format!("report_{k}_{jobs}.json"));
                let status = Command::new(env!("CARGO_BIN_EXE_prslack"))
                    .arg("slack")
                    .args(&dsg.args)
                    .args(["--jobs", jobs, "--no-fail-on-wns", "--out-text"])
                    .arg(tmp.path().join("text.txt"))
                    .arg("--out-report")
                    .arg(&out)
                    .output()
                    .unwrap();
                ensure(status.status.success(), || {
                    format!(
                        "{} --jobs {jobs}: {}",
                        dsg.name,
                        String::from_utf8_lossy(&status.stderr)
                    )
                })?;
                reports.push(std::fs::read(&out).unwrap());
            }
            ensure(reports[0] == reports[1], || {
                format!("{}: reports differ between --jobs 1 and 8", dsg.name)
            })?;
        }
        Ok(format!(
            "{} runs byte-identical across --jobs {}",
            designs.len(),
            JOBS.join("/")
        ))
    })())
}

/// Expects `<dir>/<design>/<design>.{def,sdc,sdf}` and the corner libraries
/// under `<dir>/lib/early/` and `<dir>/lib/late/`.
fn criterion_8() -> Verdict {
    let Some(dir) = std::env::var_os("PRSLACK_DATASET_DIR").map(PathBuf::from) else {
        return Verdict::NotRun("public benchmark dataset not available; set PRSLACK_DATASET_DIR".into());
    };
    verdict((|| {
        let libs = |corner: &str| -> Vec<PathBuf> {
            let mut v: Vec<PathBuf> = std::fs::read_dir(dir.join("lib").join(corner))
                .map(|r| {
                    r.filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|p| p.extension().is_some_and(|e| e == "lib"))
                        .collect()
                })
                .unwrap_or_default();
            v.sort();
            v
        };
        let cfg = |name: &str, at: &str| {
            let f = |ext: &str| Some(dir.join(name).join(format!("{name}.{ext}")));
            RunConfig {
                lib_early: libs("early"),
                lib_late: libs("late"),
                def: f("def"),
                sdc: f("sdc"),
                sdf: f("sdf"),
                at_source: at.into(),
                ..RunConfig::default()
            }
        };
        let mut notes = Vec::new();
        for (name, want) in TABLE2 {
            let run = run_parse(&cfg(name, "propagate")).map_err(|e| format!("{name}: {e}"))?;
            let s = &run.stats;
            let got = [s.nodes, s.cell_edges, s.net_edges, s.endpoints];
            ensure(got == want, || {
                format!("{name}: nodes/cell/net/endpoints {got:?}, expected {want:?}")
            })?;
            notes.push(format!("{name} {got:?}"));
        }
        let run = run_slack(&cfg("usb", "labels"), &ProviderRegistry::default()).map_err(|e| format!("usb: {e}"))?;
        let (tns, wns) = (run.report.tns, run.report.wns);
        ensure(
            (tns - USB_TNS_WNS).abs() <= USB_TOL && (wns - USB_TNS_WNS).abs() <= USB_TOL,
            || format!("usb TNS {tns:.3} WNS {wns:.3}, expected {USB_TNS_WNS}"),
        )?;
        notes.push(format!("usb TNS {tns:.3} WNS {wns:.3}"));
        Ok(notes.join(", "))
    })())
}

fn criterion_9() -> Verdict {
    verdict((|| {
        let tmp = tempfile::tempdir().unwrap();
        let c = generate(&SynthOptions {
            max_pins: PERF_PINS + 1000,
            seed: 9,
        })
        .unwrap();
        let p = |ext: &str| tmp.path().join(format!("big.{ext}"));
        std::fs::write(p("early.lib"), write_liberty(&c.early, Analysis::Early)).unwrap();
        std::fs::write(p("late.lib"), write_liberty(&c.late, Analysis::Late)).unwrap();
        std::fs::write(p("def"), write_def(&c.design)).unwrap();
        std::fs::write(p("sdc"), write_sdc(&c.sdc)).unwrap();
        let cfg = RunConfig {
            lib_early: vec![p("early.lib")],
            lib_late: vec![p("late.lib")],
            def: Some(p("def")),
            sdc: Some(p("sdc")),
            ..RunConfig::default()
        };
        let start = Instant::now();
        let run = run_slack(&cfg, &ProviderRegistry::default()).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let pins = run.parse.stats.nodes;
        ensure(pins >= PERF_PINS, || format!("only {pins} pins"))?;
        ensure(took < PERF_BUDGET, || format!("{pins} pins took {took:.2?}"))?;
        let lr = run
            .timing
            .at
            .iter()
            .map(|q| q[Corner::LateRise.index()])
            .fold(0.0, f64::max);
        Ok(format!(
            "{pins} pins in {took:.2?} ({}; max AT {lr:.3})",
            run.parse.phases.line()
        ))
    })())
}

fn main() {
    let checks: [(u8, &str, Check); 9] = [
        (1, "oracle slack equivalence", criterion_1),
        (2, "CRPR safety", criterion_2),
        (3, "RAT spot checks", criterion_3),
        (4, "LUT suite", criterion_4),
        (5, "AT propagation oracle", criterion_5),
        (6, "parser round-trips", criterion_6),
        (7, "determinism across --jobs", criterion_7),
        (8, "benchmark graph statistics and TNS/WNS", criterion_8),
        (9, "100k-pin performance", criterion_9),
    ];
    let mut failed = 0;
    for (id, title, check) in checks {
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        match v {
            Verdict::Pass(d) => println!("criterion {id} PASS: {title}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("criterion {id} FAIL: {title}: {d}");
            }
            Verdict::NotRun(d) => println!("criterion {id} NOT RUN: {title}: {d}"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
