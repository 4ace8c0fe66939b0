//! SDF delay files and per-pin AT/RAT/slew labels.
//!
//! Cell (IOPATH) and net (INTERCONNECT) delays come from `DELAY/ABSOLUTE`
//! blocks; triplets map `min` to the early corner and `max` to the late one.
//! Pin labels come from a sidecar of `pin quantity corner value` records, or
//! from the same records embedded in an SDF file as `// LABEL ...` lines.
//! All times are normalized to nanoseconds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corner::{Corner, Quad};
use crate::error::{Error, Result};

/// Per-corner values where some corners may be absent.
pub type PartialQuad = [Option<f64>; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    At,
    Rat,
    Slew,
}

impl Quantity {
    pub fn token(self) -> &'static str {
        match self {
            Quantity::At => "AT",
            Quantity::Rat => "RAT",
            Quantity::Slew => "SLEW",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "AT" => Some(Quantity::At),
            "RAT" => Some(Quantity::Rat),
            "SLEW" => Some(Quantity::Slew),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayLabels {
    /// (instance, input pin, output pin) → delay.
    pub cell_delays: BTreeMap<(String, String, String), Quad>,
    /// (driver pin path, sink pin path) → delay.
    pub net_delays: BTreeMap<(String, String), Quad>,
    pub pin_at: BTreeMap<String, PartialQuad>,
    pub pin_rat: BTreeMap<String, PartialQuad>,
    pub pin_slew: BTreeMap<String, PartialQuad>,
}

impl DelayLabels {
    pub fn pin_map(&self, q: Quantity) -> &BTreeMap<String, PartialQuad> {
        match q {
            Quantity::At => &self.pin_at,
            Quantity::Rat => &self.pin_rat,
            Quantity::Slew => &self.pin_slew,
        }
    }

    pub fn pin_map_mut(&mut self, q: Quantity) -> &mut BTreeMap<String, PartialQuad> {
        match q {
            Quantity::At => &mut self.pin_at,
            Quantity::Rat => &mut self.pin_rat,
            Quantity::Slew => &mut self.pin_slew,
        }
    }

    pub fn set(&mut self, pin: &str, q: Quantity, corner: Corner, value: f64) -> bool {
        let slot = &mut self.pin_map_mut(q).entry(pin.to_string()).or_default()[corner.index()];
        slot.replace(value).is_some()
    }

    pub fn get(&self, pin: &str, q: Quantity, corner: Corner) -> Option<f64> {
        self.pin_map(q).get(pin).and_then(|v| v[corner.index()])
    }

    /// Field-wise union; entries from `other` win.
    pub fn merge(&mut self, mut other: DelayLabels) {
        self.cell_delays.append(&mut other.cell_delays);
        self.net_delays.append(&mut other.net_delays);
        for q in [Quantity::At, Quantity::Rat, Quantity::Slew] {
            let dst = self.pin_map_mut(q);
            for (pin, vals) in other.pin_map(q) {
                let e = dst.entry(pin.clone()).or_default();
                for (d, v) in e.iter_mut().zip(vals) {
                    if v.is_some() {
                        *d = *v;
                    }
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cell_delays.is_empty()
            && self.net_delays.is_empty()
            && self.pin_at.is_empty()
            && self.pin_rat.is_empty()
            && self.pin_slew.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLabels {
    pub labels: DelayLabels,
    pub warnings: Vec<String>,
    /// Records that overwrote an earlier record for the same key.
    pub duplicates: usize,
}

fn sdf_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Sdf { line, msg: msg.into() }
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => items.first().and_then(Sexp::atom),
            Sexp::Atom(..) => None,
        }
    }

    fn items(&self) -> &[Sexp] {
        match self {
            Sexp::List(items, _) => items,
            Sexp::Atom(..) => &[],
        }
    }
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>> {
    let b = text.as_bytes();
    let mut stack: Vec<(Vec<Sexp>, usize)> = vec![(Vec::new(), 1)];
    let mut line = 1;
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'/' if b.get(i + 1) == Some(&b'/') => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if b.get(i + 1) == Some(&b'*') => {
                i += 2;
                while i + 1 < b.len() && !(b[i] == b'*' && b[i + 1] == b'/') {
                    if b[i] == b'\n' {
                        line += 1;
                    }
                    i += 1;
                }
                i += 2;
            }
            b'(' => {
                stack.push((Vec::new(), line));
                i += 1;
            }
            b')' => {
                if stack.len() < 2 {
                    return Err(sdf_err(line, "unbalanced `)`"));
                }
                let (items, l) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.push(Sexp::List(items, l));
                i += 1;
            }
            b'"' => {
                let start = line;
                let mut j = i + 1;
                while j < b.len() && b[j] != b'"' {
                    if b[j] == b'\n' {
                        line += 1;
                    }
                    j += 1;
                }
                if j >= b.len() {
                    return Err(sdf_err(start, "unterminated string"));
                }
                stack
                    .last_mut()
                    .unwrap()
                    .0
                    .push(Sexp::Atom(text[i + 1..j].to_string(), start));
                i = j + 1;
            }
            _ => {
                let mut s = String::new();
                while i < b.len() && !b[i].is_ascii_whitespace() && !matches!(b[i], b'(' | b')' | b'"') {
                    if b[i] == b'\\' && i + 1 < b.len() {
                        i += 1;
                    }
                    let ch_len = text[i..].chars().next().map(char::len_utf8).unwrap_or(1);
                    s.push_str(&text[i..i + ch_len]);
                    i += ch_len;
                }
                stack.last_mut().unwrap().0.push(Sexp::Atom(s, line));
            }
        }
    }
    if stack.len() != 1 {
        let (_, l) = stack.last().unwrap();
        return Err(sdf_err(*l, "unbalanced `(`"));
    }
    Ok(stack.pop().unwrap().0)
}

fn timescale_ns(items: &[Sexp], line: usize) -> Result<f64> {
    let joined: String = items.iter().filter_map(Sexp::atom).collect();
    let split = joined
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| sdf_err(line, format!("bad TIMESCALE `{joined}`")))?;
    let (num, unit) = joined.split_at(split);
    let num: f64 = if num.is_empty() {
        1.0
    } else {
        num.parse()
            .map_err(|_| sdf_err(line, format!("bad TIMESCALE `{joined}`")))?
    };
    let unit_ns = match unit.to_ascii_lowercase().as_str() {
        "s" => 1e9,
        "ms" => 1e6,
        "us" => 1e3,
        "ns" => 1.0,
        "ps" => 1e-3,
        "fs" => 1e-6,
        u => return Err(sdf_err(line, format!("unknown time unit `{u}`"))),
    };
    Ok(num * unit_ns)
}

/// `(min:typ:max)`, `(v)` or `()` → (early, late).
fn rvalue(s: &Sexp, scale: f64) -> Result<Option<(f64, f64)>> {
    let items = match s {
        Sexp::List(items, _) => items,
        Sexp::Atom(a, l) => return Err(sdf_err(*l, format!("expected a delay value, found `{a}`"))),
    };
    let line = s.line();
    match items.as_slice() {
        [] => Ok(None),
        [Sexp::Atom(a, _)] => {
            let parts: Vec<&str> = a.split(':').collect();
            let num = |p: &str| -> Result<Option<f64>> {
                if p.is_empty() {
                    Ok(None)
                } else {
                    p.parse::<f64>()
                        .map(|v| Some(v * scale))
                        .map_err(|_| sdf_err(line, format!("malformed delay `{a}`")))
                }
            };
            match parts.as_slice() {
                [v] => Ok(num(v)?.map(|v| (v, v))),
                [lo, typ, hi] => {
                    let (lo, typ, hi) = (num(lo)?, num(typ)?, num(hi)?);
                    let min = lo.or(typ).or(hi);
                    let max = hi.or(typ).or(lo);
                    Ok(min.zip(max))
                }
                _ => Err(sdf_err(line, format!("malformed triplet `{a}`"))),
            }
        }
        _ => Err(sdf_err(line, "malformed delay value")),
    }
}

/// Rise/fall delays of an IOPATH/INTERCONNECT value list as a corner quad.
fn delay_quad(values: &[Sexp], scale: f64, line: usize) -> Result<Option<Quad>> {
    let rise = values.first().map(|v| rvalue(v, scale)).transpose()?.flatten();
    let fall = values.get(1).map(|v| rvalue(v, scale)).transpose()?.flatten();
    let (rise, fall) = match (rise, fall) {
        (None, None) => return Ok(None),
        (Some(r), None) => (r, r),
        (None, Some(f)) => (f, f),
        (Some(r), Some(f)) => (r, f),
    };
    let q = [rise.0, fall.0, rise.1, fall.1];
    if q.iter().any(|v| *v < 0.0) {
        return Err(sdf_err(line, "negative delay"));
    }
    if rise.0 > rise.1 || fall.0 > fall.1 {
        return Err(sdf_err(line, "early delay exceeds late delay"));
    }
    Ok(Some(q))
}

fn port_name(s: &Sexp) -> Option<String> {
    match s {
        Sexp::Atom(a, _) => Some(a.clone()),
        // (posedge CLK)
        Sexp::List(items, _) => items.last().and_then(Sexp::atom).map(str::to_string),
    }
}

fn join_path(prefix: &str, name: &str, divider: char) -> String {
    let name = if divider == '/' {
        name.to_string()
    } else {
        name.replace(divider, "/")
    };
    if prefix.is_empty() {
        name
    } else {
        format!("{prefix}/{name}")
    }
}

pub fn parse_sdf(text: &str) -> Result<ParsedLabels> {
    let mut out = ParsedLabels::default();
    // embedded label records
    let mut sidecar = String::new();
    for line in text.lines() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("// LABEL") {
            sidecar.push_str(rest);
        }
        sidecar.push('\n');
    }
    let embedded = parse_label_sidecar(&sidecar)?;

    let top = parse_sexps(text)?;
    let file = top
        .iter()
        .find(|s| s.head() == Some("DELAYFILE"))
        .ok_or_else(|| sdf_err(1, "no DELAYFILE"))?;
    let mut scale = 1.0;
    let mut divider = '/';
    for item in &file.items()[1..] {
        match item.head() {
            Some("TIMESCALE") => scale = timescale_ns(&item.items()[1..], item.line())?,
            Some("DIVIDER") => {
                if let Some(d) = item.items().get(1).and_then(Sexp::atom).and_then(|a| a.chars().next()) {
                    divider = d;
                }
            }
            Some("CELL") => parse_cell(item, scale, divider, &mut out)?,
            _ => {}
        }
    }
    out.duplicates += embedded.duplicates;
    out.warnings.extend(embedded.warnings);
    out.labels.merge(embedded.labels);
    Ok(out)
}

fn parse_cell(cell: &Sexp, scale: f64, divider: char, out: &mut ParsedLabels) -> Result<()> {
    let mut instance = String::new();
    for item in &cell.items()[1..] {
        match item.head() {
            Some("INSTANCE") => {
                instance = item
                    .items()
                    .get(1)
                    .and_then(Sexp::atom)
                    .map(|s| join_path("", s, divider))
                    .unwrap_or_default();
                if instance == "*" {
                    out.warnings
                        .push(format!("line {}: wildcard INSTANCE skipped", item.line()));
                    return Ok(());
                }
            }
            Some("DELAY") => {
                for block in &item.items()[1..] {
                    match block.head() {
                        Some("ABSOLUTE") => parse_absolute(block, &instance, scale, divider, out)?,
                        Some(kind) => {
                            return Err(sdf_err(
                                block.line(),
                                format!("{kind} delays are not supported; only ABSOLUTE"),
                            ))
                        }
                        None => {}
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn parse_absolute(block: &Sexp, instance: &str, scale: f64, divider: char, out: &mut ParsedLabels) -> Result<()> {
    for entry in &block.items()[1..] {
        let items = entry.items();
        let line = entry.line();
        match entry.head() {
            Some("IOPATH") => {
                let (Some(a), Some(b)) = (items.get(1).and_then(port_name), items.get(2).and_then(port_name)) else {
                    return Err(sdf_err(line, "IOPATH needs two ports"));
                };
                let Some(q) = delay_quad(&items[3..], scale, line)? else {
                    continue;
                };
                let key = (instance.to_string(), a, b);
                if out.labels.cell_delays.insert(key.clone(), q).is_some() {
                    out.duplicates += 1;
                    out.warnings.push(format!(
                        "line {line}: duplicate IOPATH {}/{}->{}, keeping the last",
                        key.0, key.1, key.2
                    ));
                }
            }
            Some("INTERCONNECT") => {
                let (Some(a), Some(b)) = (items.get(1).and_then(port_name), items.get(2).and_then(port_name)) else {
                    return Err(sdf_err(line, "INTERCONNECT needs two ports"));
                };
                let Some(q) = delay_quad(&items[3..], scale, line)? else {
                    continue;
                };
                let key = (join_path(instance, &a, divider), join_path(instance, &b, divider));
                if out.labels.net_delays.insert(key.clone(), q).is_some() {
                    out.duplicates += 1;
                    out.warnings.push(format!(
                        "line {line}: duplicate INTERCONNECT {}->{}, keeping the last",
                        key.0, key.1
                    ));
                }
            }
            // conditional delays and port/device delays are outside the subset
            _ => {}
        }
    }
    Ok(())
}

/// Parse `pin quantity corner value` records, one per line, `#` comments.
pub fn parse_label_sidecar(text: &str) -> Result<ParsedLabels> {
    let mut out = ParsedLabels::default();
    let mut bad = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [pin, q, c, v] = fields.as_slice() else {
            bad.push(format!("line {}: expected 4 fields", ln + 1));
            continue;
        };
        let Some(q) = Quantity::from_token(q) else {
            bad.push(format!("line {}: unknown quantity `{q}`", ln + 1));
            continue;
        };
        let Some(c) = Corner::from_token(c) else {
            bad.push(format!("line {}: unknown corner `{c}`", ln + 1));
            continue;
        };
        let Ok(v) = v.parse::<f64>() else {
            bad.push(format!("line {}: `{v}` is not a number", ln + 1));
            continue;
        };
        if out.labels.set(pin, q, c, v) {
            out.duplicates += 1;
            out.warnings.push(format!(
                "line {}: duplicate {pin} {} {}, keeping the last",
                ln + 1,
                q.token(),
                c.token()
            ));
        }
    }
    if !bad.is_empty() {
        let shown: Vec<&str> = bad.iter().take(10).map(String::as_str).collect();
        return Err(Error::Labels(format!(
            "{} bad record(s): {}",
            bad.len(),
            shown.join("; ")
        )));
    }
    Ok(out)
}

fn write_label_records(labels: &DelayLabels, prefix: &str, s: &mut String) {
    for q in [Quantity::At, Quantity::Rat, Quantity::Slew] {
        for (pin, vals) in labels.pin_map(q) {
            for c in Corner::ALL {
                if let Some(v) = vals[c.index()] {
                    let _ = writeln!(s, "{prefix}{pin} {} {} {v}", q.token(), c.token());
                }
            }
        }
    }
}

/// Serialize pin labels in the sidecar format.
pub fn write_label_sidecar(labels: &DelayLabels) -> String {
    let mut s = String::new();
    write_label_records(labels, "", &mut s);
    s
}

fn triplet(lo: f64, hi: f64) -> String {
    format!("({lo}::{hi})")
}

/// Serialize delays (and pin labels as `// LABEL` lines) as SDF in ns.
pub fn write_sdf(labels: &DelayLabels, design: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(DELAYFILE");
    let _ = writeln!(s, " (SDFVERSION \"3.0\")");
    let _ = writeln!(s, " (DESIGN \"{design}\")");
    let _ = writeln!(s, " (DIVIDER /)");
    let _ = writeln!(s, " (TIMESCALE 1ns)");
    if !labels.net_delays.is_empty() {
        let _ = writeln!(s, " (CELL (CELLTYPE \"{design}\") (INSTANCE)");
        let _ = writeln!(s, "  (DELAY (ABSOLUTE");
        for ((a, b), q) in &labels.net_delays {
            let _ = writeln!(
                s,
                "   (INTERCONNECT {a} {b} {} {})",
                triplet(q[0], q[2]),
                triplet(q[1], q[3])
            );
        }
        let _ = writeln!(s, "  ))\n )");
    }
    let mut current: Option<&str> = None;
    for ((inst, a, b), q) in &labels.cell_delays {
        if current != Some(inst.as_str()) {
            if current.is_some() {
                let _ = writeln!(s, "  ))\n )");
            }
            let _ = writeln!(s, " (CELL (CELLTYPE \"cell\") (INSTANCE {inst})");
            let _ = writeln!(s, "  (DELAY (ABSOLUTE");
            current = Some(inst);
        }
        let _ = writeln!(s, "   (IOPATH {a} {b} {} {})", triplet(q[0], q[2]), triplet(q[1], q[3]));
    }
    if current.is_some() {
        let _ = writeln!(s, "  ))\n )");
    }
    let _ = writeln!(s, ")");
    write_label_records(labels, "// LABEL ", &mut s);
    s
}
