//! Liberty lexical syntax: a generic tree of groups, simple attributes
//! (`name : value ;`) and complex attributes (`name ( args ) ;`).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Liberty { line, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut line = 1;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                line += 1;
                i += 1;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'\\' => {
                // line continuation
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j] == b' ' || bytes[j] == b'\t' || bytes[j] == b'\r') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'\n' {
                    line += 1;
                    i = j + 1;
                } else {
                    let (w, n) = word(&text[i..]);
                    out.push((Tok::Word(w), line));
                    i += n;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                let start = line;
                let mut j = i + 2;
                loop {
                    if j + 1 >= bytes.len() {
                        return Err(err(start, "unterminated comment"));
                    }
                    if bytes[j] == b'*' && bytes[j + 1] == b'/' {
                        break;
                    }
                    if bytes[j] == b'\n' {
                        line += 1;
                    }
                    j += 1;
                }
                i = j + 2;
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'"' => {
                let start = line;
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => return Err(err(start, "unterminated string")),
                        Some(b'"') => break,
                        Some(b'\\') if matches!(bytes.get(j + 1), Some(b'\n') | Some(b'\r')) => {
                            // continuation inside a quoted list
                            j += 1;
                            if bytes.get(j) == Some(&b'\r') {
                                j += 1;
                            }
                            if bytes.get(j) == Some(&b'\n') {
                                line += 1;
                                j += 1;
                            }
                        }
                        Some(&b) => {
                            if b == b'\n' {
                                line += 1;
                            }
                            s.push(b as char);
                            j += 1;
                        }
                    }
                }
                // strings are ASCII in practice; fall back to a lossless slice
                let s = if s.is_ascii() { s } else { text[i + 1..j].to_string() };
                out.push((Tok::Str(s), start));
                i = j + 1;
            }
            b'{' => {
                out.push((Tok::LBrace, line));
                i += 1;
            }
            b'}' => {
                out.push((Tok::RBrace, line));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, line));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, line));
                i += 1;
            }
            b':' => {
                out.push((Tok::Colon, line));
                i += 1;
            }
            b';' => {
                out.push((Tok::Semi, line));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, line));
                i += 1;
            }
            _ => {
                let (w, n) = word(&text[i..]);
                out.push((Tok::Word(w), line));
                i += n;
            }
        }
    }
    Ok(out)
}

fn word(s: &str) -> (String, usize) {
    let n = s
        .char_indices()
        .find(|&(k, c)| k > 0 && (c.is_whitespace() || matches!(c, '{' | '}' | '(' | ')' | ':' | ';' | ',' | '"')))
        .map(|(k, _)| k)
        .unwrap_or(s.len());
    (s[..n].to_string(), n)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Group {
    pub kind: String,
    pub args: Vec<String>,
    pub line: usize,
    pub simple: Vec<(String, String)>,
    pub complex: Vec<(String, Vec<String>)>,
    pub groups: Vec<Group>,
}

impl Group {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.simple
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn complex_attr(&self, name: &str) -> Option<&[String]> {
        self.complex
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn children<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Group> + 'a {
        self.groups.iter().filter(move |g| g.kind == kind)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l)| *l)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_semi(&mut self) {
        if self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
        }
    }

    /// Statements up to the closing brace of `parent` (or end of input at top level).
    fn body(&mut self, parent: &mut Group, top: bool) -> Result<()> {
        loop {
            let Some((tok, line)) = self.next() else {
                if top {
                    return Ok(());
                }
                return Err(err(
                    parent.line,
                    format!("unbalanced braces: group `{}` is never closed", parent.kind),
                ));
            };
            match tok {
                Tok::RBrace if !top => return Ok(()),
                Tok::RBrace => return Err(err(line, "unbalanced braces: unexpected `}`")),
                Tok::Semi => {}
                Tok::Word(name) => match self.next() {
                    Some((Tok::Colon, _)) => {
                        let value = match self.next() {
                            Some((Tok::Word(v), _)) | Some((Tok::Str(v), _)) => v,
                            _ => return Err(err(line, format!("attribute `{name}` has no value"))),
                        };
                        // tolerate unquoted multi-token values such as `a + b`
                        let mut value = value;
                        while let Some(Tok::Word(_)) | Some(Tok::Str(_)) = self.peek() {
                            if self.toks.get(self.pos).map(|(_, l)| *l) != Some(line) {
                                break;
                            }
                            if let Some((Tok::Word(v), _)) | Some((Tok::Str(v), _)) = self.next() {
                                value.push(' ');
                                value.push_str(&v);
                            }
                        }
                        self.eat_semi();
                        parent.simple.push((name, value));
                    }
                    Some((Tok::LParen, _)) => {
                        let mut args = Vec::new();
                        loop {
                            match self.next() {
                                Some((Tok::RParen, _)) => break,
                                Some((Tok::Comma, _)) => {}
                                Some((Tok::Word(v), _)) | Some((Tok::Str(v), _)) => args.push(v),
                                Some((_, l)) => return Err(err(l, format!("unexpected token in `{name}(...)`"))),
                                None => return Err(err(line, format!("unbalanced parentheses in `{name}`"))),
                            }
                        }
                        if self.peek() == Some(&Tok::LBrace) {
                            self.pos += 1;
                            let mut g = Group {
                                kind: name,
                                args,
                                line,
                                ..Group::default()
                            };
                            self.body(&mut g, false)?;
                            parent.groups.push(g);
                        } else {
                            self.eat_semi();
                            parent.complex.push((name, args));
                        }
                    }
                    _ => return Err(err(line, format!("expected `:` or `(` after `{name}`"))),
                },
                _ => return Err(err(self.line().max(line), "unexpected token")),
            }
        }
    }
}

/// Parse Liberty text into a synthetic root group holding the top-level groups.
pub(crate) fn parse_groups(text: &str) -> Result<Group> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut root = Group {
        kind: "<root>".into(),
        line: 1,
        ..Group::default()
    };
    p.body(&mut root, true)?;
    Ok(root)
}

/// Numbers in a quoted list such as `"0.1, 0.2, 0.3"`.
pub(crate) fn numbers(args: &[String], line: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for a in args {
        for part in a.split(|c: char| c == ',' || c.is_whitespace()) {
            if part.is_empty() {
                continue;
            }
            out.push(
                part.parse::<f64>()
                    .map_err(|_| err(line, format!("`{part}` is not a number")))?,
            );
        }
    }
    Ok(out)
}
