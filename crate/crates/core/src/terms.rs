//! Core policy terms: the dup-free, star-free NetKAT fragment with bounded
//! repetition, plus tokens, paths and sums of paths (the normal form the
//! rewrite engine targets), and finite per-field value domains.
//!
//! Union is flattened into a set at construction time, so equality of
//! policies is already equality modulo commutativity, associativity and
//! idempotence of `+`. Sequencing stays ordered.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Pos, Result};

/// Global name interner. Names live for the program's lifetime so that
/// identifiers are `Copy` and compare by short string content.
fn intern(name: &str) -> &'static str {
    static TABLE: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    let mut table = TABLE.get_or_init(|| Mutex::new(HashSet::new())).lock().unwrap();
    match table.get(name) {
        Some(entry) => entry,
        None => {
            let entry: &'static str = Box::leak(name.to_owned().into_boxed_str());
            table.insert(entry);
            entry
        }
    }
}

/// A packet field identifier, interned; ordered lexicographically by name.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldId(&'static str);

impl FieldId {
    pub fn new(name: &str) -> Self {
        assert!(!name.is_empty(), "field names must be non-empty");
        FieldId(intern(name))
    }

    pub fn name(&self) -> &'static str {
        self.0
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Debug for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldId({})", self.0)
    }
}

impl Serialize for FieldId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.0)
    }
}

impl<'de> Deserialize<'de> for FieldId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        if name.is_empty() {
            return Err(D::Error::custom("empty field name"));
        }
        Ok(FieldId::new(&name))
    }
}

/// A field value drawn from a finite domain. Values are interned symbols;
/// numerals are kept as their text ("5"), symbolic labels as written ("SSH").
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(&'static str);

impl Value {
    pub fn new(text: &str) -> Self {
        assert!(!text.is_empty(), "values must be non-empty");
        Value(intern(text))
    }

    pub fn text(&self) -> &'static str {
        self.0
    }
}

impl From<u32> for Value {
    fn from(n: u32) -> Self {
        Value::new(&n.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Value({})", self.0)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.0)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text.is_empty() {
            return Err(D::Error::custom("empty value"));
        }
        Ok(Value::new(&text))
    }
}

/// Declared finite value domain per field. Domains are fixed for the whole
/// analysis run; the declaration order of values is preserved (it determines
/// the summand order produced by negation elimination).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DomainMap {
    domains: BTreeMap<FieldId, Vec<Value>>,
}

impl DomainMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a domain; duplicate values are dropped, keeping first occurrence.
    pub fn declare(&mut self, field: FieldId, values: impl IntoIterator<Item = Value>) {
        let mut seen = BTreeSet::new();
        let values: Vec<Value> = values.into_iter().filter(|v| seen.insert(*v)).collect();
        assert!(!values.is_empty(), "domain for {field} must be non-empty");
        self.domains.insert(field, values);
    }

    pub fn values(&self, field: FieldId) -> Result<&[Value]> {
        self.domains
            .get(&field)
            .map(Vec::as_slice)
            .ok_or(Error::UndeclaredField { field: field.name(), pos: Pos::new(0, 0) })
    }

    pub fn contains(&self, field: FieldId, value: Value) -> bool {
        self.domains.get(&field).is_some_and(|vs| vs.contains(&value))
    }

    pub fn has_field(&self, field: FieldId) -> bool {
        self.domains.contains_key(&field)
    }

    pub fn fields(&self) -> impl Iterator<Item = FieldId> + '_ {
        self.domains.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// Number of distinct packets over these domains, or `None` on overflow.
    pub fn packet_space_size(&self) -> Option<u64> {
        let mut size: u64 = 1;
        for values in self.domains.values() {
            size = size.checked_mul(values.len() as u64)?;
        }
        Some(size)
    }
}

/// A NetKAT predicate: the Boolean-algebra half of the language.
/// Disjunction is kept flattened as a set, mirroring `Policy::Union`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predicate {
    One,
    Zero,
    Test(FieldId, Value),
    Disj(BTreeSet<Predicate>),
    Conj(Box<Predicate>, Box<Predicate>),
    Neg(Box<Predicate>),
}

impl Predicate {
    pub fn test(field: FieldId, value: Value) -> Self {
        Predicate::Test(field, value)
    }

    /// Disjunction, flattened; an empty operand list is `0`.
    pub fn disj(operands: impl IntoIterator<Item = Predicate>) -> Self {
        let mut set = BTreeSet::new();
        for op in operands {
            match op {
                Predicate::Disj(inner) => set.extend(inner),
                other => {
                    set.insert(other);
                }
            }
        }
        match set.len() {
            0 => Predicate::Zero,
            1 => set.into_iter().next().unwrap(),
            _ => Predicate::Disj(set),
        }
    }

    pub fn conj(a: Predicate, b: Predicate) -> Self {
        Predicate::Conj(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Predicate) -> Self {
        Predicate::Neg(Box::new(a))
    }

    pub fn is_negation_free(&self) -> bool {
        match self {
            Predicate::One | Predicate::Zero | Predicate::Test(..) => true,
            Predicate::Disj(ops) => ops.iter().all(Predicate::is_negation_free),
            Predicate::Conj(a, b) => a.is_negation_free() && b.is_negation_free(),
            Predicate::Neg(_) => false,
        }
    }

    /// All `(field, value)` pairs mentioned by tests.
    pub fn tests(&self, out: &mut Vec<(FieldId, Value)>) {
        match self {
            Predicate::One | Predicate::Zero => {}
            Predicate::Test(f, v) => out.push((*f, *v)),
            Predicate::Disj(ops) => ops.iter().for_each(|p| p.tests(out)),
            Predicate::Conj(a, b) => {
                a.tests(out);
                b.tests(out);
            }
            Predicate::Neg(a) => a.tests(out),
        }
    }

    fn size(&self) -> usize {
        match self {
            Predicate::One | Predicate::Zero | Predicate::Test(..) => 1,
            Predicate::Disj(ops) => 1 + ops.iter().map(Predicate::size).sum::<usize>(),
            Predicate::Conj(a, b) => 1 + a.size() + b.size(),
            Predicate::Neg(a) => 1 + a.size(),
        }
    }
}

/// A policy of the dup-free, star-free fragment, extended with bounded
/// repetition `Rep(p, n)` (the n-fold self-composition of `p`; `Rep(p, 0)`
/// is the identity).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Policy {
    Filter(Predicate),
    Mod(FieldId, Value),
    Union(BTreeSet<Policy>),
    Seq(Box<Policy>, Box<Policy>),
    Rep(Box<Policy>, u32),
}

impl Policy {
    pub fn one() -> Self {
        Policy::Filter(Predicate::One)
    }

    pub fn zero() -> Self {
        Policy::Filter(Predicate::Zero)
    }

    pub fn filter(a: Predicate) -> Self {
        Policy::Filter(a)
    }

    pub fn test(field: FieldId, value: Value) -> Self {
        Policy::Filter(Predicate::Test(field, value))
    }

    pub fn modify(field: FieldId, value: Value) -> Self {
        Policy::Mod(field, value)
    }

    /// Union, flattened into a set; an empty operand list is `0`.
    pub fn union(operands: impl IntoIterator<Item = Policy>) -> Self {
        let mut set = BTreeSet::new();
        for op in operands {
            match op {
                Policy::Union(inner) => set.extend(inner),
                other => {
                    set.insert(other);
                }
            }
        }
        match set.len() {
            0 => Policy::zero(),
            1 => set.into_iter().next().unwrap(),
            _ => Policy::Union(set),
        }
    }

    pub fn seq(p: Policy, q: Policy) -> Self {
        Policy::Seq(Box::new(p), Box::new(q))
    }

    /// Left-associated sequential composition; the empty chain is `1`.
    pub fn seq_all(factors: impl IntoIterator<Item = Policy>) -> Self {
        let mut iter = factors.into_iter();
        match iter.next() {
            None => Policy::one(),
            Some(first) => iter.fold(first, Policy::seq),
        }
    }

    pub fn rep(p: Policy, n: u32) -> Self {
        Policy::Rep(Box::new(p), n)
    }

    pub fn is_negation_free(&self) -> bool {
        match self {
            Policy::Filter(a) => a.is_negation_free(),
            Policy::Mod(..) => true,
            Policy::Union(ops) => ops.iter().all(Policy::is_negation_free),
            Policy::Seq(p, q) => p.is_negation_free() && q.is_negation_free(),
            Policy::Rep(p, _) => p.is_negation_free(),
        }
    }

    pub fn is_rep_free(&self) -> bool {
        match self {
            Policy::Filter(_) | Policy::Mod(..) => true,
            Policy::Union(ops) => ops.iter().all(Policy::is_rep_free),
            Policy::Seq(p, q) => p.is_rep_free() && q.is_rep_free(),
            Policy::Rep(..) => false,
        }
    }
}

/// Structural equality modulo commutativity, associativity and idempotence
/// of union only. Sequencing is ordered, so `a . b` and `b . a` differ.
///
/// Because `Policy::union` flattens operands into a set at construction
/// time, this coincides with plain equality on well-formed values.
pub fn structural_eq(p: &Policy, q: &Policy) -> bool {
    p == q
}

/// Number of AST nodes; `Rep(p, n)` counts as `1 + size(p)`.
pub fn policy_size(p: &Policy) -> usize {
    match p {
        Policy::Filter(a) => a.size(),
        Policy::Mod(..) => 1,
        Policy::Union(ops) => 1 + ops.iter().map(policy_size).sum::<usize>(),
        Policy::Seq(a, b) => 1 + policy_size(a) + policy_size(b),
        Policy::Rep(a, _) => 1 + policy_size(a),
    }
}

/// A single test, a single modification, the identity policy or drop.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Token {
    One,
    Zero,
    Test { field: FieldId, value: Value },
    Mod { field: FieldId, value: Value },
}

impl Token {
    pub fn test(field: FieldId, value: Value) -> Self {
        Token::Test { field, value }
    }

    pub fn modify(field: FieldId, value: Value) -> Self {
        Token::Mod { field, value }
    }

    pub fn field(&self) -> Option<FieldId> {
        match self {
            Token::Test { field, .. } | Token::Mod { field, .. } => Some(*field),
            Token::One | Token::Zero => None,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::One => f.write_str("1"),
            Token::Zero => f.write_str("0"),
            Token::Test { field, value } => write!(f, "{field}={value}"),
            Token::Mod { field, value } => write!(f, "{field}<-{value}"),
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// One union-free summand: an ordered sequence of tokens. The empty
/// sequence denotes the identity policy (its canonical form is `[1]`).
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    pub tokens: Vec<Token>,
}

impl Path {
    pub fn new(tokens: impl Into<Vec<Token>>) -> Self {
        Path { tokens: tokens.into() }
    }

    pub fn identity() -> Self {
        Path { tokens: vec![Token::One] }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True for the canonical identity path (`[]` or `[1]`).
    pub fn is_identity(&self) -> bool {
        self.tokens.is_empty() || self.tokens == [Token::One]
    }

    pub fn concat(&self, other: &Path) -> Path {
        let mut tokens = Vec::with_capacity(self.tokens.len() + other.tokens.len());
        tokens.extend_from_slice(&self.tokens);
        tokens.extend_from_slice(&other.tokens);
        Path { tokens }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tokens.is_empty() {
            return f.write_str("1");
        }
        for (i, tk) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" . ")?;
            }
            write!(f, "{tk}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path({self})")
    }
}

/// A duplicate-free set of paths; set semantics encodes the
/// associativity/commutativity/idempotence of `+`. The empty set is `0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SumOfPaths {
    pub paths: BTreeSet<Path>,
}

impl SumOfPaths {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(path: Path) -> Self {
        let mut paths = BTreeSet::new();
        paths.insert(path);
        SumOfPaths { paths }
    }

    /// Inserting an existing path leaves the set unchanged.
    pub fn insert(&mut self, path: Path) -> bool {
        self.paths.insert(path)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Path> {
        self.paths.iter()
    }

    /// The policy this sum denotes: the union of its path embeddings.
    pub fn to_policy(&self) -> Policy {
        Policy::union(self.paths.iter().map(policy_of_path))
    }
}

impl FromIterator<Path> for SumOfPaths {
    fn from_iter<I: IntoIterator<Item = Path>>(iter: I) -> Self {
        SumOfPaths { paths: iter.into_iter().collect() }
    }
}

impl fmt::Display for SumOfPaths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.paths.is_empty() {
            return f.write_str("0");
        }
        for (i, path) in self.paths.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{path}")?;
        }
        Ok(())
    }
}

/// Embeds a path back into the policy AST as a left-associated sequential
/// composition; the empty token list maps to `1`.
pub fn policy_of_path(path: &Path) -> Policy {
    let token_policy = |tk: &Token| match tk {
        Token::One => Policy::one(),
        Token::Zero => Policy::zero(),
        Token::Test { field, value } => Policy::test(*field, *value),
        Token::Mod { field, value } => Policy::modify(*field, *value),
    };
    Policy::seq_all(path.tokens.iter().map(token_policy))
}

// Display uses the surface syntax the parser accepts: `.` for sequencing,
// `~` for negation, `(e)^n` for repetition.

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Predicate {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Predicate::One => f.write_str("1"),
            Predicate::Zero => f.write_str("0"),
            Predicate::Test(field, value) => write!(f, "{field} = {value}"),
            Predicate::Disj(ops) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                for (i, op) in ops.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    op.fmt_prec(f, 1)?;
                }
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Predicate::Conj(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str(" . ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Predicate::Neg(a) => {
                f.write_str("~")?;
                match **a {
                    Predicate::One | Predicate::Zero | Predicate::Test(..) => a.fmt_prec(f, 2),
                    _ => write!(f, "({a})"),
                }
            }
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Policy {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Policy::Filter(a) => a.fmt_prec(f, prec),
            Policy::Mod(field, value) => write!(f, "{field} <- {value}"),
            Policy::Union(ops) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                for (i, op) in ops.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    op.fmt_prec(f, 1)?;
                }
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Policy::Seq(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str(" . ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Policy::Rep(a, n) => write!(f, "({a})^{n}"),
        }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
