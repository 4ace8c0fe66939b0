//! Random but well-formed Liberty, DEF and SDF text. The generators vary
//! the surface syntax (templates, 1-D and scalar tables, multi-pin groups,
//! skipped sections, timescales, dividers, edge specifiers) so that a
//! parse of the emitted text exercises the readers, not just the writers.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

fn ident(rng: &mut impl Rng, prefix: &str) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    let n = rng.gen_range(1..6);
    let tail: String = (0..n).map(|_| *CHARS.choose(rng).unwrap() as char).collect();
    format!("{prefix}{tail}")
}

/// Distinct identifiers with a shared prefix; the count is drawn from `n`.
fn idents(rng: &mut impl Rng, prefix: &str, n: std::ops::Range<usize>) -> Vec<String> {
    let n = rng.gen_range(n);
    let mut out: Vec<String> = Vec::with_capacity(n);
    while out.len() < n {
        let s = ident(rng, prefix);
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Strictly increasing positive axis.
fn axis(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    axis_in(rng, n..n + 1)
}

fn axis_in(rng: &mut impl Rng, n: std::ops::Range<usize>) -> Vec<f64> {
    let n = rng.gen_range(n);
    let mut x = rng.gen_range(0.0..0.05);
    (0..n)
        .map(|_| {
            x += rng.gen_range(0.001..0.5);
            x
        })
        .collect()
}

fn quoted_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("\"{}\"", parts.join(", "))
}

struct Tmpl {
    name: String,
    i1: Vec<f64>,
    i2: Vec<f64>,
}

fn values_block(rng: &mut impl Rng, rows: usize, cols: usize, s: &mut String, indent: &str) {
    let rows: Vec<String> = (0..rows)
        .map(|_| {
            let r: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.0..3.0)).collect();
            quoted_list(&r)
        })
        .collect();
    let sep = if rng.gen_bool(0.5) {
        format!(", \\\n{indent}  ")
    } else {
        ", ".to_string()
    };
    let _ = writeln!(s, "{indent}values ({}) ;", rows.join(&sep));
}

fn table(rng: &mut impl Rng, kind: &str, templates: &[Tmpl], s: &mut String) {
    let ind = "          ";
    match rng.gen_range(0..5) {
        0 => {
            let _ = writeln!(s, "        {kind} (scalar) {{");
            let _ = writeln!(s, "{ind}values (\"{}\") ;", rng.gen_range(0.0..2.0));
        }
        1 if !templates.is_empty() => {
            let t = templates.choose(rng).unwrap();
            let _ = writeln!(s, "        {kind} ({}) {{", t.name);
            // values are laid out index_1-major whatever the variables are
            values_block(rng, t.i1.len(), t.i2.len(), s, ind);
        }
        2 if !templates.is_empty() => {
            // template supplies variables, table overrides the indices
            let t = templates.choose(rng).unwrap();
            let (r, c) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let _ = writeln!(s, "        {kind} ({}) {{", t.name);
            let _ = writeln!(s, "{ind}index_1 ({}) ;", quoted_list(&axis(rng, r)));
            let _ = writeln!(s, "{ind}index_2 ({}) ;", quoted_list(&axis(rng, c)));
            values_block(rng, r, c, s, ind);
        }
        3 => {
            let n = rng.gen_range(1..6);
            let _ = writeln!(s, "        {kind} (one_d) {{");
            let _ = writeln!(s, "{ind}index_1 ({}) ;", quoted_list(&axis(rng, n)));
            values_block(rng, 1, n, s, ind);
        }
        _ => {
            let (r, c) = (rng.gen_range(1..8), rng.gen_range(1..8));
            let _ = writeln!(s, "        {kind} (explicit) {{");
            let _ = writeln!(s, "{ind}index_1 ({}) ;", quoted_list(&axis(rng, r)));
            let _ = writeln!(s, "{ind}index_2 ({}) ;", quoted_list(&axis(rng, c)));
            values_block(rng, r, c, s, ind);
        }
    }
    let _ = writeln!(s, "        }}");
}

fn capacitance(rng: &mut impl Rng, s: &mut String) {
    match rng.gen_range(0..4) {
        0 => {
            let _ = writeln!(s, "      capacitance : {} ;", rng.gen_range(0.0..0.02));
        }
        1 => {
            let _ = writeln!(s, "      rise_capacitance : {} ;", rng.gen_range(0.0..0.02));
            let _ = writeln!(s, "      fall_capacitance : {} ;", rng.gen_range(0.0..0.02));
        }
        2 => {
            let _ = writeln!(s, "      capacitance : {} ;", rng.gen_range(0.0..0.02));
            let _ = writeln!(s, "      rise_capacitance : {} ;", rng.gen_range(0.0..0.02));
        }
        _ => {
            let _ = writeln!(s, "      fall_capacitance : {} ;", rng.gen_range(0.0..0.02));
        }
    }
}

/// A Liberty library with 1 to 5 cells.
pub fn liberty_text(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "/* generated library */");
    let _ = writeln!(s, "library ({}) {{", ident(rng, "lib"));
    let _ = writeln!(s, "  delay_model : table_lookup ;");
    let _ = writeln!(s, "  time_unit : \"1ns\" ;");
    let _ = writeln!(s, "  capacitive_load_unit (1, pf) ;");
    let mut templates = Vec::new();
    for name in idents(rng, "tmpl_", 0..3) {
        let load_first = rng.gen_bool(0.3);
        let t = Tmpl {
            name,
            i1: axis_in(rng, 1..6),
            i2: axis_in(rng, 1..6),
        };
        let (v1, v2) = if load_first {
            ("total_output_net_capacitance", "input_net_transition")
        } else {
            ("input_net_transition", "total_output_net_capacitance")
        };
        let _ = writeln!(s, "  lu_table_template ({}) {{", t.name);
        let _ = writeln!(s, "    variable_1 : {v1} ;");
        let _ = writeln!(s, "    variable_2 : {v2} ;");
        let _ = writeln!(s, "    index_1 ({}) ;", quoted_list(&t.i1));
        let _ = writeln!(s, "    index_2 ({}) ;", quoted_list(&t.i2));
        let _ = writeln!(s, "  }}");
        templates.push(t);
    }
    for cell in idents(rng, "C", 1..6) {
        let quote = if rng.gen_bool(0.5) { "\"" } else { "" };
        let _ = writeln!(s, "  cell ({quote}{cell}{quote}) {{");
        let _ = writeln!(s, "    area : {} ;", rng.gen_range(0.5..4.0));
        let names = idents(rng, "P", 2..6);
        let n_in = rng.gen_range(1..names.len());
        let (inputs, outputs) = names.split_at(n_in);
        let clock = rng.gen_bool(0.3).then(|| inputs[0].clone());
        // occasionally group data inputs into one `pin (A, B)` statement
        let grouped = inputs.len() >= 3 && rng.gen_bool(0.4);
        let mut i = 0;
        while i < inputs.len() {
            let group: Vec<&str> = if grouped && i == 1 {
                inputs[1..].iter().map(String::as_str).collect()
            } else {
                vec![inputs[i].as_str()]
            };
            i += group.len();
            let _ = writeln!(s, "    pin ({}) {{", group.join(", "));
            let _ = writeln!(s, "      direction : input ;");
            capacitance(rng, &mut s);
            if clock.as_deref() == Some(group[0]) {
                let _ = writeln!(s, "      clock : true ;");
            } else if rng.gen_bool(0.2) {
                let _ = writeln!(s, "      clock : false ;");
            }
            if let (Some(ck), false) = (&clock, clock.as_deref() == Some(group[0])) {
                if rng.gen_bool(0.5) {
                    let _ = writeln!(s, "      timing () {{");
                    let _ = writeln!(s, "        related_pin : \"{ck}\" ;");
                    let _ = writeln!(s, "        timing_type : setup_rising ;");
                    table(rng, "rise_constraint", &templates, &mut s);
                    let _ = writeln!(s, "      }}");
                }
            }
            let _ = writeln!(s, "    }}");
        }
        for out in outputs {
            let _ = writeln!(s, "    pin ({out}) {{");
            let dir = if rng.gen_bool(0.15) { "inout" } else { "output" };
            let _ = writeln!(s, "      direction : {dir} ;");
            if rng.gen_bool(0.3) {
                capacitance(rng, &mut s);
            }
            let _ = writeln!(s, "      function : \"!{}\" ;", inputs[0]);
            let related: Vec<&String> = match &clock {
                Some(ck) => vec![ck],
                None => inputs.iter().filter(|_| rng.gen_bool(0.7)).collect(),
            };
            if related.is_empty() {
                let _ = writeln!(s, "    }}");
                continue;
            }
            // one group with a multi-pin related_pin, or one group per pin
            let groups: Vec<Vec<&String>> = if rng.gen_bool(0.3) {
                vec![related]
            } else {
                related.into_iter().map(|r| vec![r]).collect()
            };
            for g in groups {
                let names: Vec<&str> = g.iter().map(|r| r.as_str()).collect();
                let _ = writeln!(s, "      timing () {{");
                let _ = writeln!(s, "        related_pin : \"{}\" ;", names.join(" "));
                if clock.is_some() {
                    let _ = writeln!(s, "        timing_type : rising_edge ;");
                } else if rng.gen_bool(0.3) {
                    let _ = writeln!(s, "        timing_type : combinational ;");
                }
                let _ = writeln!(s, "        timing_sense : negative_unate ;");
                for kind in ["cell_rise", "cell_fall", "rise_transition", "fall_transition"] {
                    if rng.gen_bool(0.85) {
                        table(rng, kind, &templates, &mut s);
                    }
                }
                let _ = writeln!(s, "      }}");
            }
            let _ = writeln!(s, "    }}");
        }
        let _ = writeln!(s, "  }}");
    }
    let _ = writeln!(s, "}}");
    s
}

const ORIENTS: &[&str] = &["N", "S", "E", "W", "FN", "FS", "FE", "FW"];

fn coord(rng: &mut impl Rng) -> i64 {
    rng.gen_range(0..200_000)
}

/// A DEF design with random ports, components and nets, plus sections the
/// reader skips.
pub fn def_text(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# generated design");
    let _ = writeln!(s, "VERSION 5.8 ;");
    let _ = writeln!(s, "DIVIDERCHAR \"/\" ;");
    let _ = writeln!(s, "BUSBITCHARS \"[]\" ;");
    let _ = writeln!(s, "DESIGN {} ;", ident(rng, "top_"));
    if rng.gen_bool(0.8) {
        let dbu = [100, 1000, 2000, 4000].choose(rng).unwrap();
        let _ = writeln!(s, "UNITS DISTANCE MICRONS {dbu} ;");
    }
    let (w, h) = (rng.gen_range(1000..400_000), rng.gen_range(1000..400_000));
    if rng.gen_bool(0.3) {
        let _ = writeln!(s, "DIEAREA ( 0 0 ) ( {w} 0 ) ( {w} {h} ) ( 0 {h} ) ;");
    } else {
        let _ = writeln!(s, "DIEAREA ( 0 0 ) ( {w} {h} ) ;");
    }
    if rng.gen_bool(0.5) {
        let _ = writeln!(s, "ROW row0 core 0 0 N DO 10 BY 1 STEP 200 0 ;");
        let _ = writeln!(s, "TRACKS X 0 DO 10 STEP 200 LAYER metal1 ;");
    }
    if rng.gen_bool(0.4) {
        let _ = writeln!(s, "VIAS 1 ;");
        let _ = writeln!(s, "  - via1 + RECT metal1 ( -10 -10 ) ( 10 10 ) ;");
        let _ = writeln!(s, "END VIAS");
    }

    let comps = idents(rng, "u", 0..12);
    let _ = writeln!(s, "COMPONENTS {} ;", comps.len());
    for c in &comps {
        let class = ident(rng, "CELL");
        match rng.gen_range(0..4) {
            0 => {
                let _ = writeln!(s, "  - {c} {class} ;");
            }
            1 => {
                let _ = writeln!(
                    s,
                    "  - {c} {class}\n      + SOURCE NETLIST + FIXED ( {} {} ) {} ;",
                    coord(rng),
                    coord(rng),
                    ORIENTS.choose(rng).unwrap()
                );
            }
            _ => {
                let _ = writeln!(
                    s,
                    "  - {c} {class} + PLACED ( {} {} ) {} ;",
                    coord(rng),
                    coord(rng),
                    ORIENTS.choose(rng).unwrap()
                );
            }
        }
    }
    let _ = writeln!(s, "END COMPONENTS");

    let ports = idents(rng, "p", 0..8);
    let _ = writeln!(s, "PINS {} ;", ports.len());
    for p in &ports {
        let dir = ["INPUT", "OUTPUT", "INOUT", "FEEDTHRU"].choose(rng).unwrap();
        let _ = write!(s, "  - {p} + NET {p} + DIRECTION {dir}");
        if rng.gen_bool(0.5) {
            let _ = write!(s, " + USE SIGNAL");
        }
        if rng.gen_bool(0.3) {
            let _ = write!(s, "\n      + LAYER metal2 ( -70 0 ) ( 70 140 )");
        }
        if rng.gen_bool(0.9) {
            let kw = ["PLACED", "FIXED", "COVER"].choose(rng).unwrap();
            let _ = write!(
                s,
                " + {kw} ( {} {} ) {}",
                coord(rng),
                coord(rng),
                ORIENTS.choose(rng).unwrap()
            );
        }
        let _ = writeln!(s, " ;");
    }
    let _ = writeln!(s, "END PINS");

    if rng.gen_bool(0.3) {
        let _ = writeln!(s, "SPECIALNETS 1 ;");
        let _ = writeln!(s, "  - VDD ( * VDD ) + USE POWER ;");
        let _ = writeln!(s, "END SPECIALNETS");
    }

    let nets = idents(rng, "n", 1..10);
    let _ = writeln!(s, "NETS {} ;", nets.len());
    for n in &nets {
        let _ = write!(s, "  - {n}");
        for _ in 0..rng.gen_range(0..5) {
            match rng.gen_range(0..6) {
                0 if !ports.is_empty() => {
                    let _ = write!(s, " ( PIN {} )", ports.choose(rng).unwrap());
                }
                1 => {
                    let _ = write!(s, " ( * VSS )");
                }
                _ if !comps.is_empty() => {
                    let c = comps.choose(rng).unwrap();
                    let pin = ident(rng, "");
                    if rng.gen_bool(0.1) {
                        let _ = write!(s, " ( {c} {pin} + SYNTHESIZED )");
                    } else {
                        let _ = write!(s, " ( {c} {pin} )");
                    }
                }
                _ => {}
            }
        }
        if rng.gen_bool(0.5) {
            let _ = write!(s, "\n      + ROUTED metal1 ( 0 0 ) ( 100 * )");
        }
        let _ = writeln!(s, " + USE SIGNAL ;");
    }
    let _ = writeln!(s, "END NETS");
    let _ = writeln!(s, "END DESIGN");
    s
}

/// Timescale text and the factor that converts its unit to the values we
/// emit (values are drawn in ns and divided by it).
const TIMESCALES: &[(&str, f64)] = &[
    ("1ns", 1.0),
    ("1 ns", 1.0),
    ("100ps", 0.1),
    ("10ps", 0.01),
    ("1ps", 0.001),
    ("1.0ns", 1.0),
    ("1us", 1000.0),
];

fn rvalue_text(rng: &mut impl Rng, unit: f64) -> String {
    let lo = rng.gen_range(0.0..1.0) / unit;
    let hi = lo + rng.gen_range(0.0..1.0) / unit;
    match rng.gen_range(0..6) {
        0 => format!("({lo})"),
        1 => "()".to_string(),
        2 => format!("({lo}::{hi})"),
        3 => format!("(::{hi})"),
        _ => format!("({lo}:{}:{hi})", (lo + hi) / 2.0),
    }
}

fn delay_values(rng: &mut impl Rng, unit: f64) -> String {
    let n = rng.gen_range(1..3);
    (0..n).map(|_| rvalue_text(rng, unit)).collect::<Vec<_>>().join(" ")
}

/// An SDF file with random IOPATH/INTERCONNECT entries and embedded pin
/// label lines.
pub fn sdf_text(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    let (ts, unit) = *TIMESCALES.choose(rng).unwrap();
    let divider = if rng.gen_bool(0.3) { '.' } else { '/' };
    let _ = writeln!(s, "(DELAYFILE");
    let _ = writeln!(s, "  (SDFVERSION \"3.0\")");
    let _ = writeln!(s, "  (DESIGN \"{}\")", ident(rng, "top_"));
    let _ = writeln!(s, "  (VENDOR \"gen\")");
    let _ = writeln!(s, "  (DIVIDER {divider})");
    let _ = writeln!(s, "  (TIMESCALE {ts})");
    let insts = idents(rng, "i", 1..8);
    // hierarchical instance names use the declared divider
    let inst_path = |i: &String, hier: bool| {
        if hier {
            format!("blk{divider}{i}")
        } else {
            i.clone()
        }
    };
    let mut pins: Vec<String> = Vec::new();
    let n_nets = rng.gen_range(0..6);
    if n_nets > 0 {
        let _ = writeln!(s, "  (CELL (CELLTYPE \"top\") (INSTANCE)");
        let _ = writeln!(s, "    (DELAY (ABSOLUTE");
        for _ in 0..n_nets {
            let a = format!("{}{divider}{}", insts.choose(rng).unwrap(), ident(rng, "Y"));
            let b = format!("{}{divider}{}", insts.choose(rng).unwrap(), ident(rng, "A"));
            let _ = writeln!(s, "      (INTERCONNECT {a} {b} {})", delay_values(rng, unit));
        }
        let _ = writeln!(s, "    ))");
        let _ = writeln!(s, "  )");
    }
    for i in &insts {
        let hier = rng.gen_bool(0.2);
        let path = inst_path(i, hier);
        let _ = writeln!(s, "  (CELL (CELLTYPE \"{}\")", ident(rng, "CELL"));
        let _ = writeln!(s, "    (INSTANCE {path})");
        let _ = writeln!(s, "    (DELAY");
        let _ = writeln!(s, "      (ABSOLUTE");
        let outs = idents(rng, "Z", 1..3);
        let ins = idents(rng, "A", 1..4);
        for o in &outs {
            for a in &ins {
                if rng.gen_bool(0.2) {
                    let _ = writeln!(s, "        (IOPATH (posedge {a}) {o} {})", delay_values(rng, unit));
                } else {
                    let _ = writeln!(s, "        (IOPATH {a} {o} {})", delay_values(rng, unit));
                }
                pins.push(format!("{}/{a}", path.replace(divider, "/")));
            }
            pins.push(format!("{}/{o}", path.replace(divider, "/")));
        }
        let _ = writeln!(s, "      )");
        let _ = writeln!(s, "    )");
        if rng.gen_bool(0.3) {
            let _ = writeln!(s, "    (TIMINGCHECK (SETUP D (posedge CK) (0.1)))");
        }
        let _ = writeln!(s, "  )");
    }
    let _ = writeln!(s, ")");
    pins.sort();
    pins.dedup();
    for p in &pins {
        for q in ["AT", "RAT", "SLEW"] {
            for c in ["ER", "EF", "LR", "LF"] {
                if rng.gen_bool(0.3) {
                    let _ = writeln!(s, "// LABEL {p} {q} {c} {}", rng.gen_range(-2.0..5.0));
                }
            }
        }
    }
    s
}
