//! DEF placement: die area, I/O pins, placed components and net connectivity.
//!
//! Geometry stays in integer database units; conversion to microns happens
//! once, in the timing graph.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liberty::LibrarySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

/// Axis-aligned die box in database units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    /// Corners counter-clockwise from the lower-left.
    pub fn corners(&self) -> [Point; 4] {
        [
            self.lo,
            Point {
                x: self.hi.x,
                y: self.lo.y,
            },
            self.hi,
            Point {
                x: self.lo.x,
                y: self.hi.y,
            },
        ]
    }

    pub fn width(&self) -> i64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> i64 {
        self.hi.y - self.lo.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortDirection {
    Input,
    Output,
    Inout,
}

impl PortDirection {
    fn as_def(self) -> &'static str {
        match self {
            PortDirection::Input => "INPUT",
            PortDirection::Output => "OUTPUT",
            PortDirection::Inout => "INOUT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub direction: PortDirection,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub instance: String,
    pub cell_class: String,
    pub location: Point,
    pub orientation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connection {
    Port(String),
    Pin { instance: String, pin: String },
}

impl Connection {
    pub fn pin(instance: &str, pin: &str) -> Self {
        Connection::Pin {
            instance: instance.to_string(),
            pin: pin.to_string(),
        }
    }

    /// Graph node name: the port name, or `instance/pin`.
    pub fn node_name(&self) -> String {
        match self {
            Connection::Port(p) => p.clone(),
            Connection::Pin { instance, pin } => format!("{instance}/{pin}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub connections: Vec<Connection>,
    /// Index into `connections` once drivers are resolved; `None` for
    /// unresolved or excluded nets.
    pub driver: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalDesign {
    pub name: String,
    /// `UNITS DISTANCE MICRONS`; 1000 when absent.
    pub dbu_per_micron: f64,
    pub die: Rect,
    pub ports: Vec<Port>,
    pub components: Vec<Component>,
    pub nets: Vec<Net>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDef {
    pub design: PhysicalDesign,
    pub warnings: Vec<String>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Def { line, msg: msg.into() }
}

struct Tokens<'a> {
    toks: Vec<(&'a str, usize)>,
    pos: usize,
}

fn tokenize(text: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            // `#` starts a comment unless escaped inside a name
            Some(k) if k == 0 || !line[..k].ends_with('\\') => &line[..k],
            _ => line,
        };
        for raw in line.split_whitespace() {
            split_punct(raw, ln + 1, &mut out);
        }
    }
    out
}

/// Split `(`, `)` and `;` glued to a word, leaving escaped characters alone.
fn split_punct<'a>(raw: &'a str, line: usize, out: &mut Vec<(&'a str, usize)>) {
    let b = raw.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'\\' {
            i += 2;
            continue;
        }
        if matches!(b[i], b'(' | b')' | b';') {
            if start < i {
                out.push((&raw[start..i], line));
            }
            out.push((&raw[i..i + 1], line));
            start = i + 1;
        }
        i += 1;
    }
    if start < b.len() {
        out.push((&raw[start..], line));
    }
}

impl<'a> Tokens<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.0)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map(|t| t.1).unwrap_or(0)
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        let line = self.line();
        self.next()
            .ok_or_else(|| err(line, format!("unexpected end of file, expected {what}")))
    }

    fn skip_statement(&mut self) {
        while let Some(t) = self.next() {
            if t == ";" {
                break;
            }
        }
    }

    fn int(&mut self) -> Result<i64> {
        let line = self.line();
        let t = self.expect("a number")?;
        t.parse::<i64>()
            .or_else(|_| t.parse::<f64>().map(|f| f.round() as i64))
            .map_err(|_| err(line, format!("`{t}` is not a coordinate")))
    }

    /// `( x y )`
    fn point(&mut self) -> Result<Point> {
        let line = self.line();
        if self.next() != Some("(") {
            return Err(err(line, "expected `(`"));
        }
        let x = self.int()?;
        let y = self.int()?;
        if self.next() != Some(")") {
            return Err(err(line, "expected `)`"));
        }
        Ok(Point { x, y })
    }

    /// Skip to the matching `END name`.
    fn skip_section(&mut self, name: &str) -> Result<()> {
        let line = self.line();
        while let Some(t) = self.next() {
            if t == "END" && self.peek() == Some(name) {
                self.pos += 1;
                return Ok(());
            }
        }
        Err(err(line, format!("section {name} is not terminated")))
    }
}

const SKIPPED_SECTIONS: &[&str] = &[
    "PROPERTYDEFINITIONS",
    "VIAS",
    "NONDEFAULTRULES",
    "REGIONS",
    "PINPROPERTIES",
    "BLOCKAGES",
    "SLOTS",
    "FILLS",
    "SPECIALNETS",
    "SCANCHAINS",
    "GROUPS",
    "STYLES",
    "BEGINEXT",
];

fn parse_pins(t: &mut Tokens, design: &mut PhysicalDesign, warnings: &mut Vec<String>) -> Result<()> {
    t.skip_statement();
    loop {
        let line = t.line();
        match t.expect("END PINS")? {
            "END" => {
                t.next();
                return Ok(());
            }
            "-" => {
                let name = t.expect("pin name")?.to_string();
                let mut direction = None;
                let mut location = None;
                while let Some(tok) = t.next() {
                    match tok {
                        ";" => break,
                        "DIRECTION" => {
                            direction = Some(match t.expect("direction")? {
                                "INPUT" => PortDirection::Input,
                                "OUTPUT" => PortDirection::Output,
                                "INOUT" | "FEEDTHRU" => PortDirection::Inout,
                                d => return Err(err(t.line(), format!("pin {name}: bad direction {d}"))),
                            })
                        }
                        "PLACED" | "FIXED" | "COVER" if location.is_none() => {
                            location = Some(t.point()?);
                        }
                        _ => {}
                    }
                }
                let direction = direction.unwrap_or_else(|| {
                    warnings.push(format!("pin {name}: no DIRECTION, assuming INPUT"));
                    PortDirection::Input
                });
                let location = location.unwrap_or_else(|| {
                    warnings.push(format!("pin {name}: not placed, using (0,0)"));
                    Point::default()
                });
                design.ports.push(Port {
                    name,
                    direction,
                    location,
                });
            }
            other => return Err(err(line, format!("unexpected `{other}` in PINS"))),
        }
    }
}

fn parse_components(t: &mut Tokens, design: &mut PhysicalDesign, warnings: &mut Vec<String>) -> Result<()> {
    t.skip_statement();
    loop {
        let line = t.line();
        match t.expect("END COMPONENTS")? {
            "END" => {
                t.next();
                return Ok(());
            }
            "-" => {
                let instance = t.expect("component name")?.to_string();
                let cell_class = t.expect("cell class")?.to_string();
                let mut placed = None;
                while let Some(tok) = t.next() {
                    match tok {
                        ";" => break,
                        "PLACED" | "FIXED" | "COVER" => {
                            let p = t.point()?;
                            let orient = t.expect("orientation")?.to_string();
                            placed = Some((p, orient));
                        }
                        _ => {}
                    }
                }
                let (location, orientation) = placed.unwrap_or_else(|| {
                    warnings.push(format!("component {instance}: not placed, using (0,0)"));
                    (Point::default(), "N".to_string())
                });
                design.components.push(Component {
                    instance,
                    cell_class,
                    location,
                    orientation,
                });
            }
            other => return Err(err(line, format!("unexpected `{other}` in COMPONENTS"))),
        }
    }
}

fn parse_nets(t: &mut Tokens, design: &mut PhysicalDesign, lines: &mut Vec<usize>) -> Result<()> {
    t.skip_statement();
    loop {
        let line = t.line();
        match t.expect("END NETS")? {
            "END" => {
                t.next();
                return Ok(());
            }
            "-" => {
                let name = t.expect("net name")?.to_string();
                let mut connections = Vec::new();
                let mut in_options = false;
                while let Some(tok) = t.next() {
                    match tok {
                        ";" => break,
                        "+" => in_options = true,
                        "(" if !in_options => {
                            let a = t.expect("connection")?;
                            let b = t.expect("connection pin")?;
                            // optional `+ SYNTHESIZED` inside the parens
                            while let Some(x) = t.next() {
                                if x == ")" {
                                    break;
                                }
                            }
                            if a == "PIN" {
                                connections.push(Connection::Port(b.to_string()));
                            } else if a != "*" {
                                connections.push(Connection::pin(a, b));
                            }
                        }
                        _ => {}
                    }
                }
                lines.push(line);
                design.nets.push(Net {
                    name,
                    connections,
                    driver: None,
                });
            }
            other => return Err(err(line, format!("unexpected `{other}` in NETS"))),
        }
    }
}

pub fn parse_def(text: &str) -> Result<ParsedDef> {
    let mut t = Tokens {
        toks: tokenize(text),
        pos: 0,
    };
    let mut design = PhysicalDesign {
        name: String::new(),
        dbu_per_micron: 1000.0,
        die: Rect::default(),
        ports: Vec::new(),
        components: Vec::new(),
        nets: Vec::new(),
    };
    let mut warnings = Vec::new();
    let mut have_die = false;
    let mut have_nets = false;
    let mut net_lines = Vec::new();

    while let Some(tok) = t.peek() {
        let line = t.line();
        match tok {
            "DESIGN" => {
                t.next();
                design.name = t.expect("design name")?.to_string();
                t.skip_statement();
            }
            "UNITS" => {
                t.next();
                let mut words = Vec::new();
                while let Some(w) = t.next() {
                    if w == ";" {
                        break;
                    }
                    words.push(w);
                }
                if let Some(v) = words.last() {
                    design.dbu_per_micron = v
                        .parse::<f64>()
                        .ok()
                        .filter(|v| *v > 0.0)
                        .ok_or_else(|| err(line, format!("bad UNITS value `{v}`")))?;
                }
            }
            "DIEAREA" => {
                t.next();
                let mut pts = Vec::new();
                while t.peek() == Some("(") {
                    pts.push(t.point()?);
                }
                t.skip_statement();
                if pts.len() < 2 {
                    return Err(err(line, "DIEAREA needs at least two points"));
                }
                // rectilinear dies reduce to their bounding box
                let lo = Point {
                    x: pts.iter().map(|p| p.x).min().unwrap(),
                    y: pts.iter().map(|p| p.y).min().unwrap(),
                };
                let hi = Point {
                    x: pts.iter().map(|p| p.x).max().unwrap(),
                    y: pts.iter().map(|p| p.y).max().unwrap(),
                };
                design.die = Rect { lo, hi };
                have_die = true;
            }
            "PINS" => {
                t.next();
                parse_pins(&mut t, &mut design, &mut warnings)?;
            }
            "COMPONENTS" => {
                t.next();
                parse_components(&mut t, &mut design, &mut warnings)?;
            }
            "NETS" => {
                t.next();
                parse_nets(&mut t, &mut design, &mut net_lines)?;
                have_nets = true;
            }
            "END" => {
                t.next();
                if t.next() == Some("DESIGN") {
                    break;
                }
                return Err(err(line, "unexpected END"));
            }
            s if SKIPPED_SECTIONS.contains(&s) => {
                t.next();
                t.skip_section(s)?;
            }
            _ => t.skip_statement(),
        }
    }
    if !have_die {
        return Err(err(t.line(), "missing DIEAREA"));
    }
    if !have_nets {
        return Err(err(t.line(), "missing NETS section"));
    }
    let declared: std::collections::HashSet<&str> = design.components.iter().map(|c| c.instance.as_str()).collect();
    for (net, line) in design.nets.iter().zip(&net_lines) {
        for c in &net.connections {
            if let Connection::Pin { instance, .. } = c {
                if !declared.contains(instance.as_str()) {
                    return Err(err(*line, format!("net {}: undeclared component {instance}", net.name)));
                }
            }
        }
    }
    Ok(ParsedDef { design, warnings })
}

/// Serialize the parsed subset back to DEF.
pub fn write_def(design: &PhysicalDesign) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "VERSION 5.8 ;");
    let _ = writeln!(s, "DIVIDERCHAR \"/\" ;");
    let _ = writeln!(s, "BUSBITCHARS \"[]\" ;");
    if !design.name.is_empty() {
        let _ = writeln!(s, "DESIGN {} ;", design.name);
    }
    let _ = writeln!(s, "UNITS DISTANCE MICRONS {} ;", design.dbu_per_micron);
    let d = design.die;
    let _ = writeln!(s, "DIEAREA ( {} {} ) ( {} {} ) ;", d.lo.x, d.lo.y, d.hi.x, d.hi.y);
    let _ = writeln!(s, "COMPONENTS {} ;", design.components.len());
    for c in &design.components {
        let _ = writeln!(
            s,
            "  - {} {} + PLACED ( {} {} ) {} ;",
            c.instance, c.cell_class, c.location.x, c.location.y, c.orientation
        );
    }
    let _ = writeln!(s, "END COMPONENTS");
    let _ = writeln!(s, "PINS {} ;", design.ports.len());
    for p in &design.ports {
        let _ = writeln!(
            s,
            "  - {} + NET {} + DIRECTION {} + USE SIGNAL + PLACED ( {} {} ) N ;",
            p.name,
            p.name,
            p.direction.as_def(),
            p.location.x,
            p.location.y
        );
    }
    let _ = writeln!(s, "END PINS");
    let _ = writeln!(s, "NETS {} ;", design.nets.len());
    for n in &design.nets {
        let _ = write!(s, "  - {}", n.name);
        for c in &n.connections {
            match c {
                Connection::Port(p) => {
                    let _ = write!(s, " ( PIN {p} )");
                }
                Connection::Pin { instance, pin } => {
                    let _ = write!(s, " ( {instance} {pin} )");
                }
            }
        }
        let _ = writeln!(s, " + USE SIGNAL ;");
    }
    let _ = writeln!(s, "END NETS");
    let _ = writeln!(s, "END DESIGN");
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetDiagnostic {
    MultiDriver { net: String, drivers: Vec<String> },
    Undriven { net: String },
}

impl std::fmt::Display for NetDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NetDiagnostic::MultiDriver { net, drivers } => {
                write!(f, "net {net}: multi-driver ({})", drivers.join(", "))
            }
            NetDiagnostic::Undriven { net } => write!(f, "net {net}: undriven"),
        }
    }
}

/// Role of one connection on a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Driver,
    Sink,
    Both,
}

/// Annotate every net with its unique driver. Input ports and cell outputs
/// drive; inout pins drive only when nothing else does. Nets with no driver
/// or several drivers are left unresolved and reported.
pub fn resolve_net_drivers(design: &mut PhysicalDesign, libs: &LibrarySet) -> Result<Vec<NetDiagnostic>> {
    let ports: HashMap<&str, PortDirection> = design.ports.iter().map(|p| (p.name.as_str(), p.direction)).collect();
    let classes: HashMap<&str, &str> = design
        .components
        .iter()
        .map(|c| (c.instance.as_str(), c.cell_class.as_str()))
        .collect();
    let mut diags = Vec::new();
    let mut missing: BTreeMap<String, &'static str> = BTreeMap::new();

    for net in &mut design.nets {
        let mut roles = Vec::with_capacity(net.connections.len());
        for c in &net.connections {
            let role = match c {
                Connection::Port(p) => match ports.get(p.as_str()) {
                    Some(PortDirection::Input) => Role::Driver,
                    Some(PortDirection::Output) => Role::Sink,
                    Some(PortDirection::Inout) => Role::Both,
                    None => return Err(Error::Graph(format!("net {}: unknown port {p}", net.name))),
                },
                Connection::Pin { instance, pin } => {
                    let class = classes[instance.as_str()];
                    let Some(cell) = libs.cell(class) else {
                        missing.insert(class.to_string(), libs.missing_reason(class).unwrap_or(""));
                        roles.push(Role::Sink);
                        continue;
                    };
                    let p = cell.pin(pin).ok_or_else(|| {
                        Error::Graph(format!(
                            "net {}: cell {class} has no pin {pin} (instance {instance})",
                            net.name
                        ))
                    })?;
                    use crate::liberty::PinDirection as D;
                    match p.direction {
                        D::Output => Role::Driver,
                        D::Input | D::Internal => Role::Sink,
                        D::Inout => Role::Both,
                    }
                }
            };
            roles.push(role);
        }
        let strict: Vec<usize> = (0..roles.len()).filter(|&i| roles[i] == Role::Driver).collect();
        let weak: Vec<usize> = (0..roles.len()).filter(|&i| roles[i] == Role::Both).collect();
        net.driver = match (strict.len(), weak.len()) {
            (1, _) => Some(strict[0]),
            (0, 1) => Some(weak[0]),
            (0, 0) => {
                diags.push(NetDiagnostic::Undriven { net: net.name.clone() });
                None
            }
            _ => {
                let drivers = if strict.is_empty() { &weak } else { &strict };
                diags.push(NetDiagnostic::MultiDriver {
                    net: net.name.clone(),
                    drivers: drivers.iter().map(|&i| net.connections[i].node_name()).collect(),
                });
                None
            }
        };
    }
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|(c, r)| format!("{c} ({r})")).collect();
        return Err(Error::Graph(format!("unresolved cell classes: {}", list.join(", "))));
    }
    Ok(diags)
}
