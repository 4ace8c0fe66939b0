//! Liberty (.lib) cell libraries: pins, capacitances and NLDM timing arcs.
//!
//! Only the subset consumed by the timing graph is extracted: `cell`,
//! `pin` (direction, capacitance, rise/fall capacitance, clock), `timing`
//! (related_pin and the four delay/transition tables) and
//! `lu_table_template` resolution. Everything else is skipped.

mod lut;
mod syntax;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use lut::{Lut, EXTRAPOLATION_SPANS};
use syntax::{numbers, Group};

use crate::corner::{Analysis, Corner, Quad, Transition};
use crate::error::{Error, Result};

/// Default resampled table shape.
pub const DEFAULT_LUT_SHAPE: (usize, usize) = (7, 7);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableKind {
    CellRise,
    CellFall,
    RiseTransition,
    FallTransition,
}

impl TableKind {
    pub const ALL: [TableKind; 4] = [
        TableKind::CellRise,
        TableKind::CellFall,
        TableKind::RiseTransition,
        TableKind::FallTransition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableKind::CellRise => "cell_rise",
            TableKind::CellFall => "cell_fall",
            TableKind::RiseTransition => "rise_transition",
            TableKind::FallTransition => "fall_transition",
        }
    }

    pub fn delay(t: Transition) -> Self {
        match t {
            Transition::Rise => TableKind::CellRise,
            Transition::Fall => TableKind::CellFall,
        }
    }

    pub fn slew(t: Transition) -> Self {
        match t {
            Transition::Rise => TableKind::RiseTransition,
            Transition::Fall => TableKind::FallTransition,
        }
    }
}

/// Position of a table in the 8-slot set: early slots 0..4, late slots 4..8.
pub fn table_slot(analysis: Analysis, kind: TableKind) -> usize {
    let base = match analysis {
        Analysis::Early => 0,
        Analysis::Late => 4,
    };
    base + kind as usize
}

pub type TableSet = [Option<Lut>; 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PinDirection {
    Input,
    Output,
    Inout,
    Internal,
}

impl PinDirection {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "input" => Some(PinDirection::Input),
            "output" => Some(PinDirection::Output),
            "inout" => Some(PinDirection::Inout),
            "internal" => Some(PinDirection::Internal),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            PinDirection::Input => "input",
            PinDirection::Output => "output",
            PinDirection::Inout => "inout",
            PinDirection::Internal => "internal",
        }
    }

    pub fn can_drive(self) -> bool {
        matches!(self, PinDirection::Output | PinDirection::Inout)
    }

    pub fn can_sink(self) -> bool {
        matches!(self, PinDirection::Input | PinDirection::Inout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibertyPin {
    pub name: String,
    pub direction: PinDirection,
    /// ER, EF, LR, LF.
    pub capacitance: Quad,
    pub is_clock: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingArc {
    pub related_pin: String,
    pub output_pin: String,
    pub tables: TableSet,
}

impl TimingArc {
    pub fn table(&self, analysis: Analysis, kind: TableKind) -> Option<&Lut> {
        self.tables[table_slot(analysis, kind)].as_ref()
    }

    pub fn valid_count(&self) -> usize {
        self.tables.iter().filter(|t| t.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibertyCell {
    pub name: String,
    pub pins: Vec<LibertyPin>,
    pub arcs: Vec<TimingArc>,
}

impl LibertyCell {
    pub fn pin(&self, name: &str) -> Option<&LibertyPin> {
        self.pins.iter().find(|p| p.name == name)
    }
}

pub type CellMap = BTreeMap<String, LibertyCell>;

/// One parsed library file.
#[derive(Debug, Clone, Default)]
pub struct Library {
    pub cells: CellMap,
    pub warnings: Vec<String>,
}

fn structural(msg: String) -> Error {
    Error::LibertyStructure(msg)
}

/// Fallback clock recognition for pins without `clock : true`.
fn clock_by_name(name: &str) -> bool {
    matches!(name, "CLK" | "CK" | "CLKN" | "clk" | "ck")
}

/// `timing_type` values describing constraint checks rather than delay arcs.
fn is_constraint_timing(kind: &str) -> bool {
    [
        "setup",
        "hold",
        "recovery",
        "removal",
        "skew",
        "nochange",
        "min_pulse",
        "minimum_period",
        "non_seq",
    ]
    .iter()
    .any(|p| kind.starts_with(p))
}

#[derive(Debug, Default)]
struct Template {
    var1: Option<String>,
    var2: Option<String>,
    index1: Option<Vec<f64>>,
    index2: Option<Vec<f64>>,
}

fn is_load_var(v: &str) -> bool {
    v.contains("capacitance")
}

fn read_templates(lib: &Group) -> Result<BTreeMap<String, Template>> {
    let mut out = BTreeMap::new();
    for g in lib.children("lu_table_template") {
        let Some(name) = g.args.first() else { continue };
        let t = Template {
            var1: g.attr("variable_1").map(str::to_string),
            var2: g.attr("variable_2").map(str::to_string),
            index1: g.complex_attr("index_1").map(|a| numbers(a, g.line)).transpose()?,
            index2: g.complex_attr("index_2").map(|a| numbers(a, g.line)).transpose()?,
        };
        out.insert(name.clone(), t);
    }
    Ok(out)
}

fn read_table(g: &Group, templates: &BTreeMap<String, Template>, what: &str) -> Result<Lut> {
    let tmpl = g.args.first().and_then(|n| templates.get(n));
    let values = numbers(g.complex_attr("values").unwrap_or(&[]), g.line)?;
    let idx1 = match g.complex_attr("index_1") {
        Some(a) => Some(numbers(a, g.line)?),
        None => tmpl.and_then(|t| t.index1.clone()),
    };
    let idx2 = match g.complex_attr("index_2") {
        Some(a) => Some(numbers(a, g.line)?),
        None => tmpl.and_then(|t| t.index2.clone()),
    };
    let var1 = tmpl.and_then(|t| t.var1.as_deref()).unwrap_or("input_net_transition");
    let var2 = tmpl.and_then(|t| t.var2.as_deref());
    let bad_count = |r: usize, c: usize| {
        structural(format!(
            "{what}: {} values for a {r}x{c} table (line {})",
            values.len(),
            g.line
        ))
    };
    let lut = match (idx1, idx2) {
        (None, None) => {
            if values.len() != 1 {
                return Err(bad_count(1, 1));
            }
            Lut::constant(values[0])
        }
        (Some(a), None) => {
            let n = a.len();
            if values.len() != n {
                return Err(bad_count(n, 1));
            }
            if is_load_var(var1) {
                Lut::from_flat(vec![0.0], a, values)
            } else {
                Lut::from_flat(a, vec![0.0], values)
            }
            .map_err(|e| structural(format!("{what}: {e}")))?
        }
        (None, Some(_)) => return Err(structural(format!("{what}: index_2 without index_1 (line {})", g.line))),
        (Some(a), Some(b)) => {
            let (r, c) = (a.len(), b.len());
            if values.len() != r * c {
                return Err(bad_count(r, c));
            }
            let transposed = is_load_var(var1) && var2.is_some_and(|v| !is_load_var(v));
            if transposed {
                let mut t = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        t[j * r + i] = values[i * c + j];
                    }
                }
                Lut::from_flat(b, a, t)
            } else {
                Lut::from_flat(a, b, values)
            }
            .map_err(|e| structural(format!("{what}: {e}")))?
        }
    };
    Ok(lut)
}

fn read_cell(
    g: &Group,
    templates: &BTreeMap<String, Template>,
    analysis: Analysis,
    warnings: &mut Vec<String>,
) -> Result<LibertyCell> {
    let name = g.args.first().cloned().unwrap_or_default();
    let mut pins: Vec<LibertyPin> = Vec::new();
    let mut arcs: Vec<TimingArc> = Vec::new();
    let mut pending: Vec<(String, String, usize)> = Vec::new();

    for pg in g.children("pin") {
        for pin_name in &pg.args {
            let direction = match pg.attr("direction") {
                Some(d) => PinDirection::parse(d).ok_or_else(|| Error::Liberty {
                    line: pg.line,
                    msg: format!("cell {name} pin {pin_name}: unknown direction `{d}`"),
                })?,
                None => {
                    warnings.push(format!("cell {name} pin {pin_name}: no direction, assuming input"));
                    PinDirection::Input
                }
            };
            let num = |k: &str| -> Result<Option<f64>> {
                pg.attr(k)
                    .map(|v| {
                        v.parse::<f64>().map_err(|_| Error::Liberty {
                            line: pg.line,
                            msg: format!("cell {name} pin {pin_name}: bad {k} `{v}`"),
                        })
                    })
                    .transpose()
            };
            let cap = num("capacitance")?;
            let rise = num("rise_capacitance")?.or(cap);
            let fall = num("fall_capacitance")?.or(cap);
            if rise.is_none() && fall.is_none() && direction.can_sink() {
                warnings.push(format!("cell {name} pin {pin_name}: no capacitance, using 0"));
            }
            let (rise, fall) = match (rise, fall) {
                (Some(r), Some(f)) => (r, f),
                (Some(r), None) => (r, r),
                (None, Some(f)) => (f, f),
                (None, None) => (0.0, 0.0),
            };
            if rise < 0.0 || fall < 0.0 {
                return Err(structural(format!("cell {name} pin {pin_name}: negative capacitance")));
            }
            let is_clock = match pg.attr("clock") {
                Some(v) => v == "true",
                None => direction == PinDirection::Input && clock_by_name(pin_name),
            };
            pins.push(LibertyPin {
                name: pin_name.clone(),
                direction,
                capacitance: [rise, fall, rise, fall],
                is_clock,
            });

            for tg in pg.children("timing") {
                if tg.attr("timing_type").is_some_and(is_constraint_timing) {
                    continue;
                }
                let Some(related) = tg.attr("related_pin") else {
                    warnings.push(format!("cell {name} pin {pin_name}: timing group without related_pin"));
                    continue;
                };
                for rel in related.split_whitespace() {
                    let what = format!("cell {name} arc {rel}->{pin_name}");
                    let mut tables: TableSet = Default::default();
                    for kind in TableKind::ALL {
                        if let Some(t) = tg.children(kind.name()).last() {
                            tables[table_slot(analysis, kind)] =
                                Some(read_table(t, templates, &format!("{what} {}", kind.name()))?);
                        }
                    }
                    if let Some(existing) = arcs
                        .iter_mut()
                        .find(|a| a.related_pin == rel && a.output_pin == *pin_name)
                    {
                        for (slot, t) in existing.tables.iter_mut().zip(tables) {
                            if slot.is_none() {
                                *slot = t;
                            }
                        }
                    } else {
                        arcs.push(TimingArc {
                            related_pin: rel.to_string(),
                            output_pin: pin_name.clone(),
                            tables,
                        });
                        pending.push((rel.to_string(), pin_name.clone(), tg.line));
                    }
                }
            }
        }
    }

    for (rel, out, line) in pending {
        let dir = |n: &str| pins.iter().find(|p| p.name == n).map(|p| p.direction);
        match dir(&rel) {
            Some(d) if d.can_sink() => {}
            Some(_) => {
                return Err(structural(format!(
                    "cell {name} arc {rel}->{out} (line {line}): related pin is not an input"
                )))
            }
            None => {
                return Err(structural(format!(
                    "cell {name} arc {rel}->{out} (line {line}): unknown related pin"
                )))
            }
        }
        if !dir(&out).is_some_and(PinDirection::can_drive) {
            return Err(structural(format!(
                "cell {name} arc {rel}->{out} (line {line}): timing pin is not an output"
            )));
        }
    }

    Ok(LibertyCell { name, pins, arcs })
}

/// Parse a library, placing its tables in the late (setup) slots.
pub fn parse_liberty(text: &str) -> Result<Library> {
    parse_liberty_as(text, Analysis::Late)
}

/// Parse a library whose tables describe the given analysis corner.
pub fn parse_liberty_as(text: &str, analysis: Analysis) -> Result<Library> {
    let root = syntax::parse_groups(text)?;
    let mut out = Library::default();
    let libs: Vec<&Group> = if root.children("library").next().is_some() {
        root.children("library").collect()
    } else {
        vec![&root]
    };
    for lib in libs {
        let templates = read_templates(lib)?;
        for cg in lib.children("cell") {
            let cell = read_cell(cg, &templates, analysis, &mut out.warnings)?;
            if out.cells.insert(cell.name.clone(), cell).is_some() {
                out.warnings
                    .push(format!("cell {} defined twice, keeping the last", cg.args.join(",")));
            }
        }
    }
    Ok(out)
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("\"{}\"", parts.join(", "))
}

/// Serialize the supported subset. Capacitances and tables are taken from
/// the `analysis` slots.
pub fn write_liberty(cells: &CellMap, analysis: Analysis) -> String {
    let (rc, fc) = match analysis {
        Analysis::Early => (Corner::EarlyRise.index(), Corner::EarlyFall.index()),
        Analysis::Late => (Corner::LateRise.index(), Corner::LateFall.index()),
    };
    let mut s = String::new();
    s.push_str("library (prslack_subset) {\n");
    for cell in cells.values() {
        let _ = writeln!(s, "  cell (\"{}\") {{", cell.name);
        for pin in &cell.pins {
            let _ = writeln!(s, "    pin (\"{}\") {{", pin.name);
            let _ = writeln!(s, "      direction : {} ;", pin.direction.as_str());
            let _ = writeln!(s, "      rise_capacitance : {} ;", pin.capacitance[rc]);
            let _ = writeln!(s, "      fall_capacitance : {} ;", pin.capacitance[fc]);
            let _ = writeln!(s, "      clock : {} ;", pin.is_clock);
            for arc in cell.arcs.iter().filter(|a| a.output_pin == pin.name) {
                let _ = writeln!(s, "      timing () {{");
                let _ = writeln!(s, "        related_pin : \"{}\" ;", arc.related_pin);
                for kind in TableKind::ALL {
                    if let Some(t) = arc.table(analysis, kind) {
                        let _ = writeln!(s, "        {} (explicit) {{", kind.name());
                        let _ = writeln!(s, "          index_1 ({}) ;", fmt_list(t.index1()));
                        let _ = writeln!(s, "          index_2 ({}) ;", fmt_list(t.index2()));
                        let rows: Vec<String> = t.values().chunks(t.cols()).map(fmt_list).collect();
                        let _ = writeln!(s, "          values ({}) ;", rows.join(", \\\n            "));
                        let _ = writeln!(s, "        }}");
                    }
                }
                let _ = writeln!(s, "      }}");
            }
            let _ = writeln!(s, "    }}");
        }
        let _ = writeln!(s, "  }}");
    }
    s.push_str("}\n");
    s
}

/// Early and late libraries, merged per cell class.
#[derive(Debug, Clone, Default)]
pub struct LibrarySet {
    pub early: CellMap,
    pub late: CellMap,
    merged: CellMap,
}

/// Tables of `cell` for `analysis`, wherever the parse placed them.
fn corner_tables(arc: &TimingArc, analysis: Analysis) -> [Option<Lut>; 4] {
    TableKind::ALL.map(|k| {
        arc.table(analysis, k)
            .or_else(|| arc.table(Analysis::Early, k))
            .or_else(|| arc.table(Analysis::Late, k))
            .cloned()
    })
}

fn merge_cell(early: &LibertyCell, late: &LibertyCell) -> LibertyCell {
    let mut pins = late.pins.clone();
    for p in &mut pins {
        if let Some(e) = early.pin(&p.name) {
            p.capacitance[Corner::EarlyRise.index()] = e.capacitance[Corner::EarlyRise.index()];
            p.capacitance[Corner::EarlyFall.index()] = e.capacitance[Corner::EarlyFall.index()];
            p.is_clock |= e.is_clock;
        }
    }
    let mut arcs = Vec::new();
    let place = |tables: &mut TableSet, src: [Option<Lut>; 4], analysis: Analysis| {
        for (k, t) in TableKind::ALL.into_iter().zip(src) {
            tables[table_slot(analysis, k)] = t;
        }
    };
    for la in &late.arcs {
        let mut tables: TableSet = Default::default();
        place(&mut tables, corner_tables(la, Analysis::Late), Analysis::Late);
        if let Some(ea) = early
            .arcs
            .iter()
            .find(|a| a.related_pin == la.related_pin && a.output_pin == la.output_pin)
        {
            place(&mut tables, corner_tables(ea, Analysis::Early), Analysis::Early);
        }
        arcs.push(TimingArc {
            related_pin: la.related_pin.clone(),
            output_pin: la.output_pin.clone(),
            tables,
        });
    }
    for ea in &early.arcs {
        if !late
            .arcs
            .iter()
            .any(|a| a.related_pin == ea.related_pin && a.output_pin == ea.output_pin)
            && late.pin(&ea.related_pin).is_some()
            && late.pin(&ea.output_pin).is_some()
        {
            let mut tables: TableSet = Default::default();
            place(&mut tables, corner_tables(ea, Analysis::Early), Analysis::Early);
            arcs.push(TimingArc {
                related_pin: ea.related_pin.clone(),
                output_pin: ea.output_pin.clone(),
                tables,
            });
        }
    }
    LibertyCell {
        name: late.name.clone(),
        pins,
        arcs,
    }
}

impl LibrarySet {
    pub fn new(early: CellMap, late: CellMap) -> Self {
        let merged = late
            .iter()
            .filter_map(|(name, l)| early.get(name).map(|e| (name.clone(), merge_cell(e, l))))
            .collect();
        LibrarySet { early, late, merged }
    }

    /// The same library for both corners.
    pub fn single(cells: CellMap) -> Self {
        Self::new(cells.clone(), cells)
    }

    /// The merged 8-table view of a cell class resolvable in both corners.
    pub fn cell(&self, class: &str) -> Option<&LibertyCell> {
        self.merged.get(class)
    }

    /// Why `class` does not resolve, if it does not.
    pub fn missing_reason(&self, class: &str) -> Option<&'static str> {
        match (self.early.contains_key(class), self.late.contains_key(class)) {
            (true, true) => None,
            (false, true) => Some("missing from the early library"),
            (true, false) => Some("missing from the late library"),
            (false, false) => Some("missing from both libraries"),
        }
    }
}

/// Merge several parsed files of one corner in argument order. Later files
/// override earlier definitions of the same cell.
pub fn merge_libraries(libs: Vec<Library>) -> Library {
    let mut out = Library::default();
    for lib in libs {
        out.warnings.extend(lib.warnings);
        for (name, cell) in lib.cells {
            if out.cells.insert(name.clone(), cell).is_some() {
                out.warnings.push(format!("cell {name} redefined by a later library"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV: &str = r#"
library (tiny) {
  lu_table_template (t7) {
    variable_1 : input_net_transition;
    variable_2 : total_output_net_capacitance;
    index_1 ("0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07");
    index_2 ("0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007");
  }
  cell (INV) {
    pin (A) { direction : input; capacitance : 0.002; }
    pin (Y) {
      direction : output;
      timing () {
        related_pin : "A";
        timing_sense : negative_unate;
        cell_rise (t7) {
          values ("1,2,3,4,5,6,7", "1,2,3,4,5,6,7", "1,2,3,4,5,6,7", "1,2,3,4,5,6,7", \
                  "1,2,3,4,5,6,7", "1,2,3,4,5,6,7", "1,2,3,4,5,6,7");
        }
      }
    }
  }
}
"#;

    #[test]
    fn minimal_inverter() {
        let lib = parse_liberty(INV).unwrap();
        let inv = &lib.cells["INV"];
        assert_eq!(inv.arcs.len(), 1);
        assert_eq!(inv.arcs[0].valid_count(), 1);
        let t = inv.arcs[0].table(Analysis::Late, TableKind::CellRise).unwrap();
        assert_eq!(t.shape(), (7, 7));
        assert_eq!(inv.pin("A").unwrap().capacitance, [0.002; 4]);
        // output pin without capacitance is not a warning
        assert!(lib.warnings.is_empty(), "{:?}", lib.warnings);
    }

    #[test]
    fn explicit_indices() {
        let src = r#"library (x) { cell (B) {
            pin (A) { direction : input; capacitance : 1; }
            pin (Y) { direction : output;
              timing () { related_pin : "A";
                cell_rise (scalar) { index_1("0.01, 0.02"); index_2("0.1, 0.2"); values("1,2","3,4"); } } } } }"#;
        let lib = parse_liberty(src).unwrap();
        let t = lib.cells["B"].arcs[0]
            .table(Analysis::Late, TableKind::CellRise)
            .unwrap();
        assert_eq!(
            *t,
            Lut::new(vec![0.01, 0.02], vec![0.1, 0.2], vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
        );
    }

    #[test]
    fn value_count_mismatch_names_arc() {
        let src = r#"library (x) { cell (B) {
            pin (A) { direction : input; capacitance : 1; }
            pin (Y) { direction : output;
              timing () { related_pin : "A";
                cell_fall (scalar) { index_1("0.01, 0.02"); index_2("0.1, 0.2"); values("1,2,3"); } } } } }"#;
        let e = parse_liberty(src).unwrap_err().to_string();
        assert!(e.contains("cell B arc A->Y cell_fall"), "{e}");
    }

    #[test]
    fn missing_capacitance_defaults_with_warning() {
        let src = r#"library (x) { cell (B) { pin (A) { direction : input; } } }"#;
        let lib = parse_liberty(src).unwrap();
        assert_eq!(lib.cells["B"].pins[0].capacitance, [0.0; 4]);
        assert_eq!(lib.warnings.len(), 1);
    }

    #[test]
    fn constraint_arcs_and_clock_pins() {
        let src = r#"library (x) { cell (DFF) {
            ff (IQ, IQN) { next_state : "D"; clocked_on : "CLK"; }
            pin (CLK) { direction : input; capacitance : 0.001; }
            pin (D) { direction : input; rise_capacitance : 0.002; fall_capacitance : 0.003;
              timing () { related_pin : "CLK"; timing_type : setup_rising;
                rise_constraint (scalar) { values ("0.1"); } } }
            pin (Q) { direction : output;
              timing () { related_pin : "CLK"; timing_type : rising_edge;
                cell_rise (scalar) { values ("0.3"); }
                cell_fall (scalar) { values ("0.4"); } } } } }"#;
        let lib = parse_liberty(src).unwrap();
        let dff = &lib.cells["DFF"];
        assert!(dff.pin("CLK").unwrap().is_clock);
        assert!(!dff.pin("D").unwrap().is_clock);
        assert_eq!(dff.pin("D").unwrap().capacitance, [0.002, 0.003, 0.002, 0.003]);
        assert_eq!(dff.arcs.len(), 1);
        assert_eq!(dff.arcs[0].related_pin, "CLK");
        assert_eq!(dff.arcs[0].valid_count(), 2);
    }

    #[test]
    fn transposed_template() {
        let src = r#"library (x) {
          lu_table_template (t) { variable_1 : total_output_net_capacitance; variable_2 : input_net_transition;
             index_1 ("1, 2"); index_2 ("10, 20, 30"); }
          cell (B) {
            pin (A) { direction : input; capacitance : 1; }
            pin (Y) { direction : output;
              timing () { related_pin : "A";
                cell_rise (t) { values("1,2,3","4,5,6"); } } } } }"#;
        let lib = parse_liberty(src).unwrap();
        let t = lib.cells["B"].arcs[0]
            .table(Analysis::Late, TableKind::CellRise)
            .unwrap();
        assert_eq!(t.index1(), &[10.0, 20.0, 30.0]);
        assert_eq!(t.index2(), &[1.0, 2.0]);
        // load 2, slew 10 -> original row 1 col 0
        assert_eq!(t.lookup(10.0, 2.0).unwrap(), 4.0);
    }

    #[test]
    fn unknown_related_pin_is_structural() {
        let src = r#"library (x) { cell (B) {
            pin (Y) { direction : output; timing () { related_pin : "Z"; cell_rise (scalar) { values ("1"); } } } } }"#;
        assert!(matches!(parse_liberty(src), Err(Error::LibertyStructure(_))));
    }

    #[test]
    fn library_set_merges_corners() {
        let early = parse_liberty_as(
            &INV.replace("capacitance : 0.002", "capacitance : 0.001"),
            Analysis::Early,
        )
        .unwrap();
        let late = parse_liberty_as(INV, Analysis::Late).unwrap();
        let set = LibrarySet::new(early.cells, late.cells);
        let inv = set.cell("INV").unwrap();
        assert_eq!(inv.arcs[0].valid_count(), 2);
        assert_eq!(inv.pin("A").unwrap().capacitance, [0.001, 0.001, 0.002, 0.002]);
        assert!(set.cell("NAND").is_none());
        assert_eq!(set.missing_reason("NAND"), Some("missing from both libraries"));
    }

    #[test]
    fn writer_round_trip() {
        let lib = parse_liberty(INV).unwrap();
        let text = write_liberty(&lib.cells, Analysis::Late);
        let again = parse_liberty(&text).unwrap();
        assert_eq!(again.cells, lib.cells);
    }
}
