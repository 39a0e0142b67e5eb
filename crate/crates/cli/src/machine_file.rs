//! Line-oriented machine description files.
//!
//! ```text
//! # comment
//! machine <name>
//! heads <int>
//! lattice <int> <cyclic|open>
//! rule <l> <s> <f> <R|L> <v00> <v01> <v10> <v11>
//! ```
//!
//! Complex literals are `<float>(+|-)<float>i`; a bare real or a bare
//! imaginary `<float>i` is also accepted. Tokens keep their source text so a
//! parsed file serializes back to the same tokens.

use std::collections::BTreeMap;
use std::fmt;

use ballistic_core::{
    gates, Direction, Gate, LatticeShape, Rule, RuleTable, ToleranceContext, Topology, C64,
};
use thiserror::Error;

/// Gates within this distance of a unitary are snapped onto it, so that
/// literals with a handful of digits are usable.
pub const UNITARITY_SLACK: f64 = 1e-6;

const ROUNDING: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Semantic,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Syntax => "syntax",
            ErrorKind::Semantic => "semantic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A source token with its 1-based column.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub text: String,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleLine {
    pub l: usize,
    pub s: u8,
    pub f: usize,
    pub d: Direction,
    /// `v00 v01 v10 v11` as written.
    pub v: [C64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Machine(String),
    Heads(usize),
    Lattice(usize, Topology),
    Rule(RuleLine),
}

impl Directive {
    fn keyword(&self) -> &'static str {
        match self {
            Directive::Machine(_) => "machine",
            Directive::Heads(_) => "heads",
            Directive::Lattice(..) => "lattice",
            Directive::Rule(_) => "rule",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub number: usize,
    pub directive: Directive,
    /// Argument tokens after the keyword.
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineFile {
    pub lines: Vec<Line>,
}

impl MachineFile {
    pub fn name(&self) -> &str {
        self.lines
            .iter()
            .find_map(|l| match &l.directive {
                Directive::Machine(n) => Some(n.as_str()),
                _ => None,
            })
            .expect("validated")
    }

    pub fn heads(&self) -> usize {
        self.lines
            .iter()
            .find_map(|l| match l.directive {
                Directive::Heads(h) => Some(h),
                _ => None,
            })
            .expect("validated")
    }

    pub fn shape(&self) -> LatticeShape {
        let (length, topology) = self
            .lines
            .iter()
            .find_map(|l| match l.directive {
                Directive::Lattice(n, t) => Some((n, t)),
                _ => None,
            })
            .expect("validated");
        LatticeShape::new(self.heads(), length, topology, true).expect("validated")
    }

    pub fn rule_lines(&self) -> impl Iterator<Item = (usize, &RuleLine)> {
        self.lines.iter().filter_map(|l| match &l.directive {
            Directive::Rule(r) => Some((l.number, r)),
            _ => None,
        })
    }

    /// The rule table. Gates that are unitary up to rounding are kept as
    /// written; the rest are snapped to the nearest unitary.
    pub fn rule_table(&self, tol: &ToleranceContext) -> RuleTable {
        let rules = self
            .rule_lines()
            .map(|(_, r)| {
                let v = gate(&r.v);
                let v = if gates::unitarity_residual(&v) <= ROUNDING {
                    v
                } else {
                    gates::nearest_unitary(&v)
                };
                Rule::new(r.l, r.s, r.f, r.d, v)
            })
            .collect();
        RuleTable::new(self.heads(), rules, tol).expect("validated during parsing")
    }

    /// One directive per line, tokens separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line.directive.keyword());
            for t in &line.tokens {
                out.push(' ');
                out.push_str(&t.text);
            }
            out.push('\n');
        }
        out
    }
}

fn gate(v: &[C64; 4]) -> Gate {
    Gate::new(v[0], v[1], v[2], v[3])
}

/// Text of a complex number in the file's literal syntax; round-trips exactly.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

/// Parses `a+bi`, `a-bi`, `a` or `bi`.
pub fn parse_complex(text: &str) -> Option<C64> {
    let real = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
    let Some(body) = text.strip_suffix('i') else {
        return real(text).map(|re| C64::new(re, 0.0));
    };
    // The split sign is the last + or - that is not a leading sign or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = real(&body[..k])?;
            let im = real(&body[k..])?;
            Some(C64::new(re, im))
        }
        None => real(body).map(|im| C64::new(0.0, im)),
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind: ErrorKind::Syntax,
        line,
        column,
        message: message.into(),
    }
}

fn semantic(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind: ErrorKind::Semantic,
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                tokens.push(Token {
                    text: text[s..i].to_string(),
                    column: text[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: text[s..].to_string(),
            column: text[..s].chars().count() + 1,
        });
    }
    tokens
}

fn parse_int(line: usize, t: &Token, what: &str) -> Result<usize, ParseError> {
    t.text.parse().map_err(|_| {
        syntax(
            line,
            t.column,
            format!("expected {what} (non-negative integer), found {:?}", t.text),
        )
    })
}

fn parse_directive(number: usize, keyword: &Token, args: &[Token]) -> Result<Directive, ParseError> {
    let arity = |n: usize| -> Result<(), ParseError> {
        if args.len() == n {
            return Ok(());
        }
        let column = args
            .get(n)
            .map_or(keyword.column + keyword.text.len(), |t| t.column);
        Err(syntax(
            number,
            column,
            format!("`{}` takes {n} argument(s), found {}", keyword.text, args.len()),
        ))
    };
    match keyword.text.as_str() {
        "machine" => {
            arity(1)?;
            let name = &args[0];
            if !name
                .text
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
            {
                return Err(syntax(
                    number,
                    name.column,
                    format!("invalid machine name {:?}", name.text),
                ));
            }
            Ok(Directive::Machine(name.text.clone()))
        }
        "heads" => {
            arity(1)?;
            Ok(Directive::Heads(parse_int(number, &args[0], "head-state count")?))
        }
        "lattice" => {
            arity(2)?;
            let length = parse_int(number, &args[0], "lattice length")?;
            let topology = match args[1].text.as_str() {
                "cyclic" => Topology::Cyclic,
                "open" => Topology::Open,
                other => {
                    return Err(syntax(
                        number,
                        args[1].column,
                        format!("expected `cyclic` or `open`, found {other:?}"),
                    ))
                }
            };
            Ok(Directive::Lattice(length, topology))
        }
        "rule" => {
            arity(8)?;
            let l = parse_int(number, &args[0], "head state")?;
            let s = match args[1].text.as_str() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(syntax(
                        number,
                        args[1].column,
                        format!("spin must be 0 or 1, found {other:?}"),
                    ))
                }
            };
            let f = parse_int(number, &args[2], "head state")?;
            let d = match args[3].text.as_str() {
                "R" => Direction::Right,
                "L" => Direction::Left,
                other => {
                    return Err(syntax(
                        number,
                        args[3].column,
                        format!("direction must be R or L, found {other:?}"),
                    ))
                }
            };
            let mut v = [C64::new(0.0, 0.0); 4];
            for (slot, t) in v.iter_mut().zip(&args[4..]) {
                *slot = parse_complex(&t.text).ok_or_else(|| {
                    syntax(number, t.column, format!("invalid complex literal {:?}", t.text))
                })?;
            }
            Ok(Directive::Rule(RuleLine { l, s, f, d, v }))
        }
        other => Err(syntax(
            number,
            keyword.column,
            format!("unknown directive {other:?}"),
        )),
    }
}

pub fn parse_machine_file(text: &str) -> Result<MachineFile, ParseError> {
    let mut lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let number = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some((keyword, args)) = tokens.split_first() else {
            continue;
        };
        let directive = parse_directive(number, keyword, args)?;
        lines.push(Line {
            number,
            directive,
            tokens: args.to_vec(),
        });
    }
    let file = MachineFile { lines };
    validate(&file)?;
    Ok(file)
}

fn validate(file: &MachineFile) -> Result<(), ParseError> {
    let last_line = file.lines.last().map_or(1, |l| l.number);
    let mut seen: BTreeMap<&'static str, usize> = BTreeMap::new();
    for line in &file.lines {
        let kw = line.directive.keyword();
        if kw == "rule" {
            continue;
        }
        if let Some(first) = seen.insert(kw, line.number) {
            return Err(semantic(
                line.number,
                1,
                format!("`{kw}` repeated (first given on line {first})"),
            ));
        }
    }
    for kw in ["machine", "heads", "lattice"] {
        if !seen.contains_key(kw) {
            return Err(semantic(last_line, 1, format!("missing `{kw}` directive")));
        }
    }
    let heads = file.heads();
    if heads == 0 {
        return Err(semantic(seen["heads"], 1, "at least one head state is required"));
    }
    let lattice_line = file
        .lines
        .iter()
        .find(|l| l.number == seen["lattice"])
        .expect("present");
    if let Directive::Lattice(length, topology) = lattice_line.directive {
        LatticeShape::new(heads, length, topology, true)
            .map_err(|e| semantic(lattice_line.number, lattice_line.tokens[0].column, e.to_string()))?;
    }

    let mut domain: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    let mut any = false;
    for line in &file.lines {
        let Directive::Rule(r) = &line.directive else {
            continue;
        };
        any = true;
        for (value, token) in [(r.l, &line.tokens[0]), (r.f, &line.tokens[2])] {
            if value >= heads {
                return Err(semantic(
                    line.number,
                    token.column,
                    format!("head state {value} out of range (heads = {heads})"),
                ));
            }
        }
        if let Some(first) = domain.insert((r.l, r.s), line.number) {
            return Err(semantic(
                line.number,
                1,
                format!(
                    "duplicate rule for (l, s) = ({}, {}) on lines {first} and {}",
                    r.l, r.s, line.number
                ),
            ));
        }
        let residual = gates::unitarity_residual(&gate(&r.v));
        if residual > UNITARITY_SLACK {
            return Err(semantic(
                line.number,
                line.tokens[4].column,
                format!("bit action is not unitary: max |v^dagger v - 1| = {residual:e}"),
            ));
        }
    }
    if !any {
        return Err(semantic(last_line, 1, "no `rule` lines"));
    }
    Ok(())
}

/// Machine file text for a rule table on a lattice.
pub fn render_machine(name: &str, comment: Option<&str>, rules: &RuleTable, shape: &LatticeShape) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    let topology = match shape.topology {
        Topology::Cyclic => "cyclic",
        Topology::Open => "open",
    };
    out.push_str(&format!(
        "machine {name}\nheads {}\nlattice {} {topology}\n",
        rules.n_head, shape.length
    ));
    for r in &rules.rules {
        let v = [r.v[(0, 0)], r.v[(0, 1)], r.v[(1, 0)], r.v[(1, 1)]].map(format_complex);
        out.push_str(&format!(
            "rule {} {} {} {} {}\n",
            r.l,
            r.s,
            r.f,
            r.d.symbol(),
            v.join(" ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "machine zero_motion\nheads 1\nlattice 4 open\nrule 0 0 0 R 1+0i 0+0i 0+0i 1+0i\n";

    #[test]
    #[allow(clippy::approx_constant)]
    fn complex_literals() {
        assert_eq!(parse_complex("0.70710678+0.0i"), Some(C64::new(0.70710678, 0.0)));
        assert_eq!(parse_complex("-1.5e-3-2E+1i"), Some(C64::new(-1.5e-3, -20.0)));
        assert_eq!(parse_complex("2"), Some(C64::new(2.0, 0.0)));
        assert_eq!(parse_complex("-0.5i"), Some(C64::new(0.0, -0.5)));
        assert_eq!(parse_complex("1+i"), None);
        assert_eq!(parse_complex("nan+0i"), None);
        assert_eq!(parse_complex("abc"), None);
        for z in [C64::new(0.1, -0.0), C64::new(-3e-300, 1.0 / 3.0)] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back, z);
            assert_eq!(back.im.is_sign_negative(), z.im.is_sign_negative());
        }
    }

    #[test]
    fn minimal_file_is_zero_motion() {
        let f = parse_machine_file(MINIMAL).unwrap();
        assert_eq!(f.name(), "zero_motion");
        let table = f.rule_table(&ToleranceContext::default());
        assert_eq!(table.rules.len(), 1);
        assert_eq!(table.rules[0].d, Direction::Right);
        assert_eq!(f.to_text(), MINIMAL);
    }

    #[test]
    fn duplicate_rule_names_both_lines() {
        let text = format!("{MINIMAL}# again\nrule 0 0 0 L 1 0 0 1\n");
        let e = parse_machine_file(&text).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Semantic);
        assert_eq!(e.line, 6);
        assert!(e.message.contains("lines 4 and 6"), "{}", e.message);
    }

    #[test]
    fn diagnostics_point_at_the_token() {
        let e =
            parse_machine_file("machine m\nheads 1\nlattice 4 open\nrule 0 0 0 R 1+0i 0 0 1x\n").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (ErrorKind::Syntax, 4, 23));
        let e = parse_machine_file("machine m\nheads 1\nlattice 4 sideways\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 11));
        let e = parse_machine_file("machine m\nheads 1\nlattice 4 open\nrule 0 0 1 R 1 0 0 1\n").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (ErrorKind::Semantic, 4, 10));
        let e = parse_machine_file("machine m\nheads 1\nlattice 4 open\nrule 0 0 0 R 1 1 0 1\n").unwrap_err();
        assert!(e.message.contains("not unitary"));
        let e = parse_machine_file("heads 1\nlattice 4 open\nrule 0 0 0 R 1 0 0 1\n").unwrap_err();
        assert!(e.message.contains("missing `machine`"));
    }

    #[test]
    fn truncated_literals_are_snapped() {
        let text =
            "machine h\nheads 1\nlattice 3 open\nrule 0 0 0 R 0.70710678 0.70710678 0.70710678 -0.70710678\n";
        let f = parse_machine_file(text).unwrap();
        let v = f.rule_table(&ToleranceContext::default()).rules[0].v;
        assert!(gates::unitarity_residual(&v) < 1e-15);
        assert!(gates::phase_distance(&v, &gates::fourier()) < 1e-8);
    }
}
