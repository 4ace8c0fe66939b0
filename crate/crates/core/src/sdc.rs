//! The SDC subset needed for required-time estimation: one clock, its
//! uncertainty, and per-port input/output delays.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physical::{PhysicalDesign, PortDirection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdcConstraints {
    /// Clock period T, ns.
    pub clock_period: f64,
    pub clock_name: String,
    pub clock_port: String,
    /// Setup uncertainty μ, ns.
    pub clock_uncertainty: f64,
    /// `-max` output delays by port.
    pub output_delays: BTreeMap<String, f64>,
    /// Delay applied to every output by `[all_outputs]`.
    pub all_outputs_delay: Option<f64>,
    pub input_delays: BTreeMap<String, f64>,
    pub all_inputs_delay: Option<f64>,
    /// Lines whose command is outside the subset.
    pub ignored: Vec<String>,
}

impl SdcConstraints {
    /// D^PO for a primary output; 0 when unconstrained.
    pub fn output_delay(&self, port: &str) -> f64 {
        self.output_delays
            .get(port)
            .copied()
            .or(self.all_outputs_delay)
            .unwrap_or(0.0)
    }

    pub fn input_delay(&self, port: &str) -> f64 {
        if port == self.clock_port {
            return 0.0;
        }
        self.input_delays
            .get(port)
            .copied()
            .or(self.all_inputs_delay)
            .unwrap_or(0.0)
    }

    /// Check the constraints against the design's ports.
    pub fn bind(&self, design: &PhysicalDesign) -> Result<()> {
        let dirs: HashMap<&str, PortDirection> = design.ports.iter().map(|p| (p.name.as_str(), p.direction)).collect();
        if !dirs.contains_key(self.clock_port.as_str()) {
            return Err(Error::Sdc {
                line: 0,
                msg: format!("clock port {} is not a design port", self.clock_port),
            });
        }
        for p in self.output_delays.keys().chain(self.input_delays.keys()) {
            if !dirs.contains_key(p.as_str()) {
                return Err(Error::Sdc {
                    line: 0,
                    msg: format!("constrained port {p} is not a design port"),
                });
            }
        }
        Ok(())
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Sdc { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum Word {
    Text(String),
    /// `[cmd args...]`
    Query(Vec<String>),
}

/// Split one logical command into words, collapsing `[...]` and `{...}`.
fn words(line: &str, vars: &HashMap<String, String>, ln: usize) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        match c {
            '[' => {
                chars.next();
                let mut depth = 1;
                let mut inner = String::new();
                for ch in chars.by_ref() {
                    match ch {
                        '[' => depth += 1,
                        ']' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    inner.push(ch);
                }
                if depth != 0 {
                    return Err(err(ln, "unbalanced `[`"));
                }
                let parts = inner
                    .replace(['{', '}', '"'], " ")
                    .split_whitespace()
                    .map(|w| subst(w, vars, ln))
                    .collect::<Result<Vec<_>>>()?;
                out.push(Word::Query(parts));
            }
            '{' | '"' => {
                let close = if c == '{' { '}' } else { '"' };
                chars.next();
                let mut inner = String::new();
                let mut closed = false;
                for ch in chars.by_ref() {
                    if ch == close {
                        closed = true;
                        break;
                    }
                    inner.push(ch);
                }
                if !closed {
                    return Err(err(ln, format!("unbalanced `{c}`")));
                }
                out.push(Word::Text(subst(inner.trim(), vars, ln)?));
            }
            _ => {
                let mut w = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '[' {
                        break;
                    }
                    w.push(ch);
                    chars.next();
                }
                out.push(Word::Text(subst(&w, vars, ln)?));
            }
        }
    }
    Ok(out)
}

fn subst(w: &str, vars: &HashMap<String, String>, ln: usize) -> Result<String> {
    match w.strip_prefix('$') {
        Some(name) => vars
            .get(name)
            .cloned()
            .ok_or_else(|| err(ln, format!("unknown variable ${name}"))),
        None => Ok(w.to_string()),
    }
}

/// Numeric argument, named options and object queries of one command.
struct Args {
    flags: Vec<String>,
    options: HashMap<String, String>,
    values: Vec<String>,
    queries: Vec<Vec<String>>,
}

const VALUED_OPTIONS: &[&str] = &["-period", "-name", "-waveform", "-clock", "-reference_pin"];

fn split_args(ws: &[Word]) -> Args {
    let mut a = Args {
        flags: Vec::new(),
        options: HashMap::new(),
        values: Vec::new(),
        queries: Vec::new(),
    };
    let mut i = 0;
    while i < ws.len() {
        match &ws[i] {
            Word::Text(t) if VALUED_OPTIONS.contains(&t.as_str()) => {
                if let Some(v) = ws.get(i + 1) {
                    let v = match v {
                        Word::Text(s) => s.clone(),
                        Word::Query(q) => q.join(" "),
                    };
                    a.options.insert(t.clone(), v);
                }
                i += 1;
            }
            Word::Text(t) if t.starts_with('-') && t.parse::<f64>().is_err() => a.flags.push(t.clone()),
            Word::Text(t) => a.values.push(t.clone()),
            Word::Query(q) => a.queries.push(q.clone()),
        }
        i += 1;
    }
    a
}

enum Target {
    Ports(Vec<String>),
    All,
}

fn target(a: &Args, all_query: &str, ln: usize) -> Result<Target> {
    for q in &a.queries {
        match q.first().map(String::as_str) {
            Some("get_ports") => return Ok(Target::Ports(q[1..].to_vec())),
            Some(c) if c == all_query => return Ok(Target::All),
            _ => {}
        }
    }
    // bare port names after the value
    if a.values.len() > 1 {
        return Ok(Target::Ports(a.values[1..].to_vec()));
    }
    Err(err(ln, "no target ports"))
}

fn number(s: Option<&String>, what: &str, ln: usize) -> Result<f64> {
    let s = s.ok_or_else(|| err(ln, format!("missing {what}")))?;
    s.parse::<f64>()
        .map_err(|_| err(ln, format!("{what} `{s}` is not a number")))
}

/// Logical lines with backslash continuations joined and comments removed.
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut start = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.trim_start().starts_with('#') {
            true => "",
            false => raw,
        };
        if buf.is_empty() {
            start = i + 1;
        }
        if let Some(stripped) = line.trim_end().strip_suffix('\\') {
            buf.push_str(stripped);
            buf.push(' ');
            continue;
        }
        buf.push_str(line);
        for cmd in buf.split(';') {
            if !cmd.trim().is_empty() {
                out.push((start, cmd.trim().to_string()));
            }
        }
        buf.clear();
    }
    if !buf.trim().is_empty() {
        out.push((start, buf.trim().to_string()));
    }
    out
}

pub fn parse_sdc(text: &str) -> Result<SdcConstraints> {
    let mut clock: Option<(f64, String, String)> = None;
    let mut sdc = SdcConstraints {
        clock_period: 0.0,
        clock_name: String::new(),
        clock_port: String::new(),
        clock_uncertainty: 0.0,
        output_delays: BTreeMap::new(),
        all_outputs_delay: None,
        input_delays: BTreeMap::new(),
        all_inputs_delay: None,
        ignored: Vec::new(),
    };
    let mut vars: HashMap<String, String> = HashMap::new();

    for (ln, line) in logical_lines(text) {
        let ws = words(&line, &vars, ln)?;
        let Some(Word::Text(cmd)) = ws.first() else {
            sdc.ignored.push(line);
            continue;
        };
        let a = split_args(&ws[1..]);
        match cmd.as_str() {
            "set" => {
                if let [Word::Text(name), value] = &ws[1..] {
                    let v = match value {
                        Word::Text(t) => t.clone(),
                        Word::Query(q) => q.join(" "),
                    };
                    vars.insert(name.clone(), v);
                } else {
                    sdc.ignored.push(line);
                }
            }
            "create_clock" => {
                if clock.is_some() {
                    return Err(err(ln, "second create_clock: only single-clock designs are supported"));
                }
                let period = number(a.options.get("-period"), "-period", ln)?;
                if period.is_nan() || period <= 0.0 {
                    return Err(err(ln, "clock period must be positive"));
                }
                let port = match target(&a, "", ln) {
                    Ok(Target::Ports(p)) if p.len() == 1 => p[0].clone(),
                    Ok(Target::Ports(_)) => return Err(err(ln, "clock must have exactly one source port")),
                    _ => return Err(err(ln, "virtual clocks are not supported")),
                };
                let name = a.options.get("-name").cloned().unwrap_or_else(|| port.clone());
                clock = Some((period, name, port));
            }
            "create_generated_clock" => {
                return Err(err(ln, "generated clocks are not supported"));
            }
            "set_clock_uncertainty" => {
                if a.flags.iter().any(|f| f == "-hold") && !a.flags.iter().any(|f| f == "-setup") {
                    continue;
                }
                let u = number(a.values.first(), "uncertainty", ln)?;
                if u < 0.0 {
                    return Err(err(ln, "negative clock uncertainty"));
                }
                sdc.clock_uncertainty = u;
            }
            "set_output_delay" | "set_input_delay" => {
                let is_out = cmd == "set_output_delay";
                let min_only = a.flags.iter().any(|f| f == "-min") && !a.flags.iter().any(|f| f == "-max");
                let v = number(a.values.first(), "delay", ln)?;
                let t = target(&a, if is_out { "all_outputs" } else { "all_inputs" }, ln)?;
                if min_only {
                    continue;
                }
                let (map, all) = if is_out {
                    (&mut sdc.output_delays, &mut sdc.all_outputs_delay)
                } else {
                    (&mut sdc.input_delays, &mut sdc.all_inputs_delay)
                };
                match t {
                    Target::All => *all = Some(v),
                    Target::Ports(ps) => {
                        for p in ps {
                            map.insert(p, v);
                        }
                    }
                }
            }
            _ => sdc.ignored.push(line),
        }
    }
    let (period, name, port) = clock.ok_or_else(|| err(0, "no create_clock"))?;
    sdc.clock_period = period;
    sdc.clock_name = name;
    sdc.clock_port = port;
    Ok(sdc)
}

/// Serialize the constraints in the parsed subset.
pub fn write_sdc(sdc: &SdcConstraints) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "create_clock -name {} -period {} [get_ports {}]",
        sdc.clock_name, sdc.clock_period, sdc.clock_port
    );
    let _ = writeln!(
        s,
        "set_clock_uncertainty {} [get_clocks {}]",
        sdc.clock_uncertainty, sdc.clock_name
    );
    if let Some(v) = sdc.all_inputs_delay {
        let _ = writeln!(s, "set_input_delay -max {v} -clock {} [all_inputs]", sdc.clock_name);
    }
    for (p, v) in &sdc.input_delays {
        let _ = writeln!(s, "set_input_delay -max {v} -clock {} [get_ports {p}]", sdc.clock_name);
    }
    if let Some(v) = sdc.all_outputs_delay {
        let _ = writeln!(s, "set_output_delay -max {v} -clock {} [all_outputs]", sdc.clock_name);
    }
    for (p, v) in &sdc.output_delays {
        let _ = writeln!(s, "set_output_delay -max {v} -clock {} [get_ports {p}]", sdc.clock_name);
    }
    s
}
