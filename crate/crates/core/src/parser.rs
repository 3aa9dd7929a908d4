//! Textual problem format and the policy expression parser.
//!
//! Expression syntax: `~` binds tightest, then `.`, then `+`; `f = v` is a
//! test, `f <- v` a modification, `0`/`1` the constants, `(e)^n` bounded
//! repetition, and parentheses group. Problem files are line oriented with
//! sections `domains:`, `let <name> = <policy>`, `policy:`, `topology:`,
//! `ingress:`, `egress:` and an optional `unfold: <nat>`; `#` starts a
//! comment. Section bodies may wrap onto following lines.

use std::collections::BTreeMap;

use crate::error::{Error, Pos, Result};
use crate::terms::{DomainMap, FieldId, Policy, Predicate, Value};

/// One in-out safety question: where packets enter, how they are forwarded,
/// and the hazardous egress they must not reach.
#[derive(Clone, Debug)]
pub struct SafetyProblem {
    pub ingress: Predicate,
    pub switch_policy: Policy,
    pub topology: Policy,
    pub egress: Predicate,
    pub domains: DomainMap,
    /// Explicit unfolding bound; defaults to the forwarding-link count.
    pub unfold_n: Option<u32>,
}

const MAX_NESTING: usize = 200;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Plus,
    Dot,
    Caret,
    Tilde,
    LParen,
    RParen,
    Eq,
    Arrow,
    Word(String),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Plus => write!(f, "`+`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Arrow => write!(f, "`<-`"),
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, base_line: usize) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: base_line, col: 1 }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<(Tok, usize, usize)> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let tok = match self.peek() {
            None => Tok::Eof,
            Some(b'+') => {
                self.bump();
                Tok::Plus
            }
            Some(b'.') => {
                self.bump();
                Tok::Dot
            }
            Some(b'^') => {
                self.bump();
                Tok::Caret
            }
            Some(b'~') => {
                self.bump();
                Tok::Tilde
            }
            Some(b'(') => {
                self.bump();
                Tok::LParen
            }
            Some(b')') => {
                self.bump();
                Tok::RParen
            }
            Some(b'=') => {
                self.bump();
                Tok::Eq
            }
            Some(b'<') => {
                self.bump();
                if self.peek() == Some(b'-') {
                    self.bump();
                    Tok::Arrow
                } else {
                    return Err(Error::Syntax {
                        pos: Pos::new(line, col),
                        message: "expected `<-`".into(),
                    });
                }
            }
            Some(b) if b.is_ascii_alphanumeric() || b == b'_' => {
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b.is_ascii_alphanumeric() || b == b'_' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Word(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            Some(b) => {
                return Err(Error::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{}`", b as char),
                });
            }
        };
        Ok((tok, line, col))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: (Tok, usize, usize),
    domains: &'a DomainMap,
    bindings: &'a BTreeMap<String, Policy>,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(
        src: &'a str,
        base_line: usize,
        domains: &'a DomainMap,
        bindings: &'a BTreeMap<String, Policy>,
    ) -> Result<Self> {
        let mut lexer = Lexer::new(src, base_line);
        let current = lexer.next_token()?;
        Ok(Parser { lexer, current, domains, bindings, depth: 0 })
    }

    fn advance(&mut self) -> Result<()> {
        self.current = self.lexer.next_token()?;
        Ok(())
    }

    fn err_here(&self, message: impl Into<String>) -> Error {
        Error::Syntax { pos: Pos::new(self.current.1, self.current.2), message: message.into() }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.current.0 == tok {
            self.advance()
        } else {
            Err(self.err_here(format!("expected {tok}, found {}", self.current.0)))
        }
    }

    fn parse_expr(&mut self) -> Result<Policy> {
        let mut terms = vec![self.parse_term()?];
        while self.current.0 == Tok::Plus {
            self.advance()?;
            terms.push(self.parse_term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Policy::union(terms) })
    }

    fn parse_term(&mut self) -> Result<Policy> {
        let mut acc = self.parse_factor()?;
        while self.current.0 == Tok::Dot {
            self.advance()?;
            acc = Policy::seq(acc, self.parse_factor()?);
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Policy> {
        let mut base = self.parse_atom()?;
        while self.current.0 == Tok::Caret {
            self.advance()?;
            let (line, col) = (self.current.1, self.current.2);
            let Tok::Word(word) = self.current.0.clone() else {
                return Err(self.err_here("expected a repetition exponent"));
            };
            let n: u32 = word.parse().map_err(|_| Error::Syntax {
                line,
                col,
                message: format!("repetition exponent must be a natural number, found `{word}`"),
            })?;
            self.advance()?;
            base = Policy::rep(base, n);
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Policy> {
        let (tok, line, col) = self.current.clone();
        match tok {
            Tok::Tilde => {
                self.advance()?;
                let inner = self.parse_atom()?;
                let pred = policy_to_predicate(&inner).map_err(|_| Error::Syntax {
                    line,
                    col,
                    message: "negation applied to a non-predicate".into(),
                })?;
                Ok(Policy::Filter(Predicate::neg(pred)))
            }
            Tok::LParen => {
                self.depth += 1;
                if self.depth > MAX_NESTING {
                    return Err(self.err_here("expression nested too deeply"));
                }
                self.advance()?;
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                self.depth -= 1;
                Ok(inner)
            }
            Tok::Word(word) => {
                self.advance()?;
                if word == "0" {
                    return Ok(Policy::zero());
                }
                if word == "1" {
                    return Ok(Policy::one());
                }
                match self.current.0 {
                    Tok::Eq => {
                        self.advance()?;
                        let field = self.field(&word, line, col)?;
                        let value = self.value(field)?;
                        Ok(Policy::test(field, value))
                    }
                    Tok::Arrow => {
                        self.advance()?;
                        let field = self.field(&word, line, col)?;
                        let value = self.value(field)?;
                        Ok(Policy::modify(field, value))
                    }
                    _ => match self.bindings.get(&word) {
                        Some(policy) => Ok(policy.clone()),
                        None => Err(Error::Syntax {
                            line,
                            col,
                            message: format!("unknown policy name `{word}`"),
                        }),
                    },
                }
            }
            other => Err(self.err_here(format!("expected a policy atom, found {other}"))),
        }
    }

    fn field(&self, name: &str, line: usize, col: usize) -> Result<FieldId> {
        let field = FieldId::new(name);
        if self.domains.has_field(field) {
            Ok(field)
        } else {
            Err(Error::UndeclaredField { field: field.name(), line, col })
        }
    }

    fn value(&mut self, field: FieldId) -> Result<Value> {
        let (tok, line, col) = self.current.clone();
        let Tok::Word(word) = tok else {
            return Err(self.err_here("expected a value"));
        };
        self.advance()?;
        let value = Value::new(&word);
        if self.domains.contains(field, value) {
            Ok(value)
        } else {
            Err(Error::ValueOutOfDomain { field: field.name(), value: value.text(), line, col })
        }
    }

    fn finish(self, policy: Policy) -> Result<Policy> {
        if self.current.0 == Tok::Eof {
            Ok(policy)
        } else {
            Err(self.err_here(format!("unexpected {} after expression", self.current.0)))
        }
    }
}

/// Lowers a policy built purely from filters, unions and sequencing to the
/// predicate it denotes. Fails on modifications and repetitions.
pub fn policy_to_predicate(p: &Policy) -> std::result::Result<Predicate, ()> {
    match p {
        Policy::Filter(a) => Ok(a.clone()),
        Policy::Union(ops) => {
            let lowered: std::result::Result<Vec<_>, ()> =
                ops.iter().map(policy_to_predicate).collect();
            Ok(Predicate::disj(lowered?))
        }
        Policy::Seq(a, b) => Ok(Predicate::conj(policy_to_predicate(a)?, policy_to_predicate(b)?)),
        Policy::Mod(..) | Policy::Rep(..) => Err(()),
    }
}

/// Parses a single policy expression against the given domains.
pub fn parse_policy(text: &str, domains: &DomainMap) -> Result<Policy> {
    parse_policy_at(text, 1, domains, &BTreeMap::new())
}

fn parse_policy_at(
    text: &str,
    base_line: usize,
    domains: &DomainMap,
    bindings: &BTreeMap<String, Policy>,
) -> Result<Policy> {
    let mut parser = Parser::new(text, base_line, domains, bindings)?;
    let policy = parser.parse_expr()?;
    parser.finish(policy)
}

#[derive(Debug)]
enum SectionKind {
    Domains,
    Let(String),
    Policy,
    Topology,
    Ingress,
    Egress,
    Unfold,
}

struct Section {
    kind: SectionKind,
    /// 1-based line of the section header.
    line: usize,
    /// Body text; starts on the header line, may span further lines.
    body: String,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn section_start(line: &str) -> Option<(SectionKind, &str)> {
    let trimmed = line.trim_start();
    for (kw, kind) in [
        ("domains:", SectionKind::Domains),
        ("policy:", SectionKind::Policy),
        ("topology:", SectionKind::Topology),
        ("ingress:", SectionKind::Ingress),
        ("egress:", SectionKind::Egress),
        ("unfold:", SectionKind::Unfold),
    ] {
        if let Some(rest) = trimmed.strip_prefix(kw) {
            return Some((kind, rest));
        }
    }
    if let Some(rest) = trimmed.strip_prefix("let") {
        if rest.starts_with(|c: char| c.is_whitespace()) {
            let rest = rest.trim_start();
            let name_end = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let name = &rest[..name_end];
            let after = rest[name_end..].trim_start();
            if name.is_empty() || !after.starts_with('=') {
                return None;
            }
            return Some((SectionKind::Let(name.to_owned()), &after[1..]));
        }
    }
    None
}

fn split_sections(contents: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in contents.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        match section_start(line) {
            Some((kind, rest)) => sections.push(Section {
                kind,
                line: line_no,
                body: rest.trim_end().to_owned(),
            }),
            None => match sections.last_mut() {
                Some(section) => {
                    section.body.push('\n');
                    section.body.push_str(line.trim_end());
                }
                None => {
                    return Err(Error::Syntax {
                        pos: Pos::new(line_no, 1),
                        message: "expected a section header (`domains:`, `let`, `policy:`, ...)"
                            .into(),
                    });
                }
            },
        }
    }
    Ok(sections)
}

fn parse_domain_block(body: &str, line: usize) -> Result<DomainMap> {
    let mut domains = DomainMap::new();
    for (offset, decl) in body.lines().enumerate() {
        let decl_line = line + offset;
        if decl.trim().is_empty() {
            continue;
        }
        let Some((name, values)) = decl.split_once(':') else {
            return Err(Error::Syntax {
                pos: Pos::new(decl_line, 1),
                message: format!("expected `field: v1, v2, ...`, found `{}`", decl.trim()),
            });
        };
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Syntax {
                pos: Pos::new(decl_line, 1),
                message: format!("invalid field name `{name}`"),
            });
        }
        let mut parsed = Vec::new();
        for value in values.split(',') {
            let value = value.trim();
            if value.is_empty() || !value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Syntax {
                    pos: Pos::new(decl_line, 1),
                    message: format!("invalid domain value `{value}` for field `{name}`"),
                });
            }
            parsed.push(Value::new(value));
        }
        if parsed.is_empty() {
            return Err(Error::Syntax {
                pos: Pos::new(decl_line, 1),
                message: format!("domain of `{name}` must list at least one value"),
            });
        }
        domains.declare(FieldId::new(name), parsed);
    }
    Ok(domains)
}

/// Parses a full problem file into a validated [`SafetyProblem`].
pub fn parse_problem(contents: &str) -> Result<SafetyProblem> {
    let sections = split_sections(contents)?;

    let mut domains: Option<DomainMap> = None;
    for section in &sections {
        if matches!(section.kind, SectionKind::Domains) {
            if domains.is_some() {
                return Err(Error::Syntax {
                    pos: Pos::new(section.line, 1),
                    message: "duplicate `domains:` section".into(),
                });
            }
            domains = Some(parse_domain_block(&section.body, section.line)?);
        }
    }
    let domains = domains.ok_or(Error::MissingSection { section: "domains" })?;

    let mut bindings: BTreeMap<String, Policy> = BTreeMap::new();
    let mut policy = None;
    let mut topology = None;
    let mut ingress = None;
    let mut egress = None;
    let mut unfold_n = None;

    let mut set = |slot: &mut Option<(Policy, usize)>, name: &str, value: Policy, line: usize| {
        if slot.is_some() {
            return Err(Error::Syntax {
                line,
                col: 1,
                message: format!("duplicate `{name}:` section"),
            });
        }
        *slot = Some((value, line));
        Ok(())
    };

    for section in &sections {
        match &section.kind {
            SectionKind::Domains => {}
            SectionKind::Let(name) => {
                let value = parse_policy_at(&section.body, section.line, &domains, &bindings)?;
                bindings.insert(name.clone(), value);
            }
            SectionKind::Policy => {
                let value = parse_policy_at(&section.body, section.line, &domains, &bindings)?;
                set(&mut policy, "policy", value, section.line)?;
            }
            SectionKind::Topology => {
                let value = parse_policy_at(&section.body, section.line, &domains, &bindings)?;
                set(&mut topology, "topology", value, section.line)?;
            }
            SectionKind::Ingress => {
                let value = parse_policy_at(&section.body, section.line, &domains, &bindings)?;
                set(&mut ingress, "ingress", value, section.line)?;
            }
            SectionKind::Egress => {
                let value = parse_policy_at(&section.body, section.line, &domains, &bindings)?;
                set(&mut egress, "egress", value, section.line)?;
            }
            SectionKind::Unfold => {
                if unfold_n.is_some() {
                    return Err(Error::Syntax {
                        pos: Pos::new(section.line, 1),
                        message: "duplicate `unfold:` section".into(),
                    });
                }
                let text = section.body.trim();
                let n: u32 = text.parse().map_err(|_| Error::Syntax {
                    pos: Pos::new(section.line, 1),
                    message: format!("unfold bound must be a natural number, found `{text}`"),
                })?;
                unfold_n = Some(n);
            }
        }
    }

    let as_predicate = |slot: Option<(Policy, usize)>, name: &'static str| match slot {
        None => Err(Error::MissingSection { section: name }),
        Some((p, line)) => policy_to_predicate(&p).map_err(|_| Error::Syntax {
            line,
            col: 1,
            message: format!("`{name}` must be a predicate (no modifications or repetitions)"),
        }),
    };

    Ok(SafetyProblem {
        ingress: as_predicate(ingress, "ingress")?,
        egress: as_predicate(egress, "egress")?,
        switch_policy: policy.ok_or(Error::MissingSection { section: "policy" })?.0,
        topology: topology.ok_or(Error::MissingSection { section: "topology" })?.0,
        domains,
        unfold_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::structural_eq;

    fn pt_domains() -> DomainMap {
        let mut d = DomainMap::new();
        d.declare(FieldId::new("pt"), (1..=6).map(Value::from));
        d
    }

    #[test]
    fn parses_hop_by_hop_policy() {
        let d = pt_domains();
        let pt = FieldId::new("pt");
        let got = parse_policy("pt = 1 . pt <- 5 + pt = 6 . pt <- 2", &d).unwrap();
        let want = Policy::union([
            Policy::seq(Policy::test(pt, Value::from(1)), Policy::modify(pt, Value::from(5))),
            Policy::seq(Policy::test(pt, Value::from(6)), Policy::modify(pt, Value::from(2))),
        ]);
        assert!(structural_eq(&got, &want));
    }

    #[test]
    fn parses_constants_and_repetition() {
        let d = pt_domains();
        assert_eq!(parse_policy("1", &d).unwrap(), Policy::one());
        let got = parse_policy("(pt = 1 . pt <- 5)^3", &d).unwrap();
        match got {
            Policy::Rep(_, 3) => {}
            other => panic!("expected repetition, got {other}"),
        }
    }

    #[test]
    fn precedence_tilde_dot_plus() {
        let mut d = pt_domains();
        d.declare(FieldId::new("sw"), [Value::new("A"), Value::new("B")]);
        let got = parse_policy("~pt = 1 . sw = A + pt = 2", &d).unwrap();
        // ~ binds to the single test, `.` before `+`.
        let want = Policy::union([
            Policy::seq(
                Policy::Filter(Predicate::neg(Predicate::test(
                    FieldId::new("pt"),
                    Value::from(1),
                ))),
                Policy::test(FieldId::new("sw"), Value::new("A")),
            ),
            Policy::test(FieldId::new("pt"), Value::from(2)),
        ]);
        assert!(structural_eq(&got, &want));
    }

    #[test]
    fn rejects_undeclared_field_and_out_of_domain_value() {
        let d = pt_domains();
        assert!(matches!(
            parse_policy("sw = A", &d),
            Err(Error::UndeclaredField { field: "sw", .. })
        ));
        assert!(matches!(
            parse_policy("pt = 9", &d),
            Err(Error::ValueOutOfDomain { field: "pt", .. })
        ));
    }

    #[test]
    fn rejects_negated_modification() {
        let d = pt_domains();
        assert!(matches!(parse_policy("~(pt <- 1)", &d), Err(Error::Syntax { .. })));
    }

    #[test]
    fn reports_position() {
        let d = pt_domains();
        match parse_policy("pt = 1 +\n  pt = ", &d) {
            Err(Error::Syntax { pos: Pos { line: 2, .. }, .. }) => {}
            other => panic!("expected syntax error on line 2, got {other:?}"),
        }
    }

    const SIMPLE_NETWORK: &str = "\
# the two-switch example network
domains:
  pt: 1, 2, 3, 4, 5, 6

let p1 = pt = 1 . pt <- 5 + pt = 6 . pt <- 2
let p2 = pt = 3 . pt <- 5 + pt = 6 . pt <- 4
let t = pt = 5 . pt <- 6 + pt = 6 . pt <- 5
      + pt = 1 + pt = 2 + pt = 3 + pt = 4

policy: p1 + p2
topology: t
ingress: pt = 1
egress: pt = 3 + pt = 4
unfold: 6
";

    #[test]
    fn parses_problem_file() {
        let problem = parse_problem(SIMPLE_NETWORK).unwrap();
        assert_eq!(problem.unfold_n, Some(6));
        let pt = FieldId::new("pt");
        let want_topology = Policy::union([
            Policy::seq(Policy::test(pt, Value::from(5)), Policy::modify(pt, Value::from(6))),
            Policy::seq(Policy::test(pt, Value::from(6)), Policy::modify(pt, Value::from(5))),
            Policy::test(pt, Value::from(1)),
            Policy::test(pt, Value::from(2)),
            Policy::test(pt, Value::from(3)),
            Policy::test(pt, Value::from(4)),
        ]);
        assert!(structural_eq(&problem.topology, &want_topology));
        assert_eq!(problem.ingress, Predicate::test(pt, Value::from(1)));
    }

    #[test]
    fn missing_section_is_reported() {
        let trimmed = SIMPLE_NETWORK.replace("egress: pt = 3 + pt = 4\n", "");
        assert!(matches!(
            parse_problem(&trimmed),
            Err(Error::MissingSection { section: "egress" })
        ));
    }

    #[test]
    fn egress_with_undeclared_field_is_rejected() {
        let broken = SIMPLE_NETWORK.replace("egress: pt = 3 + pt = 4", "egress: dst = 3");
        assert!(matches!(
            parse_problem(&broken),
            Err(Error::UndeclaredField { field: "dst", .. })
        ));
    }

    #[test]
    fn ingress_must_be_a_predicate() {
        let broken = SIMPLE_NETWORK.replace("ingress: pt = 1", "ingress: pt <- 1");
        assert!(matches!(parse_problem(&broken), Err(Error::Syntax { .. })));
    }
}
