//! The normalization pipeline to sums of paths: negation elimination,
//! distribution of `.` over `+`, and path reduction under the modified
//! axiom set (same-field modifications are never collapsed and tests are
//! never absorbed into preceding same-value tests-of-modifications — the
//! two axioms that erase hop information are dropped).
//!
//! Path reduction applies, to a fixpoint:
//!   - contextual contradictions: a test on a field whose value is already
//!     pinned to something else (by an earlier test or modification, with
//!     no interfering reassignment in between) turns the path into `0`;
//!   - redundant-test removal: a test whose value is already pinned to the
//!     same value is dropped;
//!   - unit and drop token elimination;
//!   - adjacent swaps of tokens on *different* fields toward the field
//!     order (same-field tokens never swap, so per-field order is kept).
//!
//! The fixpoint is schedule independent; [`reduce_path`] computes it in one
//! pass and [`rules`] hosts the instrumented rule-by-rule engine used by the
//! confluence and termination suites.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Pos, Result};
use crate::terms::{DomainMap, FieldId, Path, Policy, Predicate, SumOfPaths, Token, Value};

/// A strict total order on fields, fixed for a run. Fields not explicitly
/// ranked compare after all ranked ones, lexicographically.
#[derive(Clone, Debug, Default)]
pub struct FieldOrder {
    rank: BTreeMap<FieldId, usize>,
}

impl FieldOrder {
    /// The default order: lexicographic on field names.
    pub fn lexicographic() -> Self {
        FieldOrder::default()
    }

    /// Ranks the listed fields first, in the given order.
    pub fn from_fields(fields: impl IntoIterator<Item = FieldId>) -> Self {
        let mut rank = BTreeMap::new();
        for field in fields {
            let next = rank.len();
            rank.entry(field).or_insert(next);
        }
        FieldOrder { rank }
    }

    pub fn cmp(&self, a: FieldId, b: FieldId) -> Ordering {
        let ra = self.rank.get(&a).copied().unwrap_or(usize::MAX);
        let rb = self.rank.get(&b).copied().unwrap_or(usize::MAX);
        ra.cmp(&rb).then_with(|| a.name().cmp(b.name()))
    }
}

/// What a path prefix pins down about each field: the most recent
/// modification, or the initial test when no modification intervened yet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldState {
    Unknown,
    InitiallyTested(Value),
    Known(Value),
}

impl FieldState {
    fn value(&self) -> Option<Value> {
        match self {
            FieldState::Unknown => None,
            FieldState::InitiallyTested(v) | FieldState::Known(v) => Some(*v),
        }
    }
}

/// The fate of a token under the symbolic walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenFate {
    /// The token stays on the path.
    Keep,
    /// The token is implied by the prefix and can be dropped.
    Redundant,
    /// The token can never pass; the whole path is `0`.
    Contradiction,
}

/// Forward symbolic evaluation of a path prefix, per field.
#[derive(Clone, Debug, Default)]
pub struct SymbolicState {
    states: BTreeMap<FieldId, FieldState>,
}

impl SymbolicState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self, field: FieldId) -> FieldState {
        self.states.get(&field).copied().unwrap_or(FieldState::Unknown)
    }

    /// Advances over one token and reports its fate.
    pub fn apply(&mut self, token: &Token) -> TokenFate {
        match token {
            Token::One => TokenFate::Redundant,
            Token::Zero => TokenFate::Contradiction,
            Token::Test { field, value } => match self.state(*field) {
                FieldState::Unknown => {
                    self.states.insert(*field, FieldState::InitiallyTested(*value));
                    TokenFate::Keep
                }
                state => {
                    if state.value() == Some(*value) {
                        TokenFate::Redundant
                    } else {
                        TokenFate::Contradiction
                    }
                }
            },
            Token::Mod { field, value } => {
                self.states.insert(*field, FieldState::Known(*value));
                TokenFate::Keep
            }
        }
    }

    /// A packet satisfying every initial test, with unconstrained fields
    /// set to the first value of their domain.
    pub fn witness_assignment(&self, domains: &DomainMap) -> Result<Vec<(FieldId, Value)>> {
        let mut assignment = Vec::new();
        for field in domains.fields() {
            let value = match self.state(field) {
                FieldState::InitiallyTested(v) => v,
                // Known states arose from modifications; the *input* packet
                // is unconstrained there unless it was initially tested.
                _ => domains.values(field)?[0],
            };
            assignment.push((field, value));
        }
        Ok(assignment)
    }
}

/// True iff the path denotes `0`: some test is unsatisfiable given the
/// symbolic state of its prefix. Coincides with oracle emptiness of the
/// path over all packets (for paths over declared domains).
pub fn symbolic_zero_check(path: &Path) -> bool {
    let mut state = SymbolicState::new();
    path.tokens.iter().any(|tk| state.apply(tk) == TokenFate::Contradiction)
}

/// Initial tests a path requires, per field (its input-packet constraints).
pub fn initial_tests(path: &Path) -> Option<SymbolicState> {
    let mut state = SymbolicState::new();
    for tk in &path.tokens {
        if state.apply(tk) == TokenFate::Contradiction {
            return None;
        }
    }
    Some(state)
}

/// Eliminates every negation from a policy, pushing `~` down to tests and
/// replacing each negated test by the sum of the other domain values.
/// The result is semantically equal to the input; negating a test over a
/// singleton domain yields `0`.
pub fn eliminate_negation(p: &Policy, domains: &DomainMap) -> Result<Policy> {
    fn pos(a: &Predicate, domains: &DomainMap) -> Result<Predicate> {
        Ok(match a {
            Predicate::One | Predicate::Zero | Predicate::Test(..) => a.clone(),
            Predicate::Disj(ops) => {
                let ops: Result<Vec<_>> = ops.iter().map(|op| pos(op, domains)).collect();
                Predicate::disj(ops?)
            }
            Predicate::Conj(x, y) => Predicate::conj(pos(x, domains)?, pos(y, domains)?),
            Predicate::Neg(x) => neg(x, domains)?,
        })
    }

    fn neg(a: &Predicate, domains: &DomainMap) -> Result<Predicate> {
        Ok(match a {
            Predicate::One => Predicate::Zero,
            Predicate::Zero => Predicate::One,
            Predicate::Test(field, value) => {
                if !domains.has_field(*field) {
                    return Err(Error::UndeclaredField { field: field.name(), pos: Pos::NONE });
                }
                let others = domains
                    .values(*field)?
                    .iter()
                    .filter(|v| *v != value)
                    .map(|v| Predicate::Test(*field, *v));
                Predicate::disj(others)
            }
            Predicate::Disj(ops) => {
                let mut acc: Option<Predicate> = None;
                for op in ops {
                    let n = neg(op, domains)?;
                    acc = Some(match acc {
                        None => n,
                        Some(prev) => Predicate::conj(prev, n),
                    });
                }
                acc.unwrap_or(Predicate::Zero)
            }
            Predicate::Conj(x, y) => Predicate::disj([neg(x, domains)?, neg(y, domains)?]),
            Predicate::Neg(x) => pos(x, domains)?,
        })
    }

    Ok(match p {
        Policy::Filter(a) => Policy::Filter(pos(a, domains)?),
        Policy::Mod(..) => p.clone(),
        Policy::Union(ops) => {
            let ops: Result<Vec<_>> = ops.iter().map(|op| eliminate_negation(op, domains)).collect();
            Policy::union(ops?)
        }
        Policy::Seq(a, b) => {
            Policy::seq(eliminate_negation(a, domains)?, eliminate_negation(b, domains)?)
        }
        Policy::Rep(body, n) => Policy::rep(eliminate_negation(body, domains)?, *n),
    })
}

/// Distributes `.` over `+` (both directions) until the policy is a sum of
/// token paths. Pure distribution: no path simplification is performed, so
/// `(a+b).(a+c)` yields four summands including `a.a`. The plus-over-plus
/// Boolean distribution is never applied.
///
/// The input must be negation-free; repetitions are expanded by repeated
/// composition. Materializes the full distribution — exponential in
/// general, so large programs go through [`normalize`] instead.
pub fn to_union_free_sum(p: &Policy) -> SumOfPaths {
    fn cross(a: &BTreeSet<Path>, b: &BTreeSet<Path>) -> BTreeSet<Path> {
        let mut out = BTreeSet::new();
        for x in a {
            for y in b {
                out.insert(x.concat(y));
            }
        }
        out
    }

    fn pred_paths(a: &Predicate) -> BTreeSet<Path> {
        match a {
            Predicate::One => BTreeSet::from([Path::new(vec![])]),
            Predicate::Zero => BTreeSet::new(),
            Predicate::Test(field, value) => {
                BTreeSet::from([Path::new(vec![Token::test(*field, *value)])])
            }
            Predicate::Disj(ops) => {
                let mut out = BTreeSet::new();
                for op in ops {
                    out.extend(pred_paths(op));
                }
                out
            }
            Predicate::Conj(x, y) => cross(&pred_paths(x), &pred_paths(y)),
            Predicate::Neg(_) => panic!("to_union_free_sum requires a negation-free policy"),
        }
    }

    fn policy_paths(p: &Policy) -> BTreeSet<Path> {
        match p {
            Policy::Filter(a) => pred_paths(a),
            Policy::Mod(field, value) => {
                BTreeSet::from([Path::new(vec![Token::modify(*field, *value)])])
            }
            Policy::Union(ops) => {
                let mut out = BTreeSet::new();
                for op in ops {
                    out.extend(policy_paths(op));
                }
                out
            }
            Policy::Seq(a, b) => cross(&policy_paths(a), &policy_paths(b)),
            Policy::Rep(body, n) => {
                let body = policy_paths(body);
                let mut acc = BTreeSet::from([Path::new(vec![])]);
                for _ in 0..*n {
                    acc = cross(&acc, &body);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
        }
    }

    SumOfPaths { paths: policy_paths(p) }
}

/// Reduces one path to its canonical form, or to `None` when it denotes
/// `0`. The rules applied (symbolically, in one pass — the rule-by-rule
/// engine in [`rules`] reaches the same fixpoint from any schedule):
/// contextual contradictions, redundant-test removal, unit/drop token
/// elimination, and the canonical reordering of commuting tokens.
///
/// Modifications are never dropped or merged, and a test is never absorbed
/// into a preceding same-field test the way the full axiom set would allow:
/// the hop trace survives reduction intact.
pub fn reduce_path(path: &Path, order: &FieldOrder) -> Option<Path> {
    let tokens = reduce_tokens(&path.tokens, order)?;
    Some(if tokens.is_empty() { Path::identity() } else { Path::new(tokens) })
}

/// Core of [`reduce_path`]; the identity path comes back as an empty vector.
fn reduce_tokens(tokens: &[Token], order: &FieldOrder) -> Option<Vec<Token>> {
    let mut state = SymbolicState::new();
    let mut kept: Vec<Token> = Vec::with_capacity(tokens.len());
    for tk in tokens {
        match state.apply(tk) {
            TokenFate::Keep => kept.push(*tk),
            TokenFate::Redundant => {}
            TokenFate::Contradiction => return None,
        }
    }
    // Stable sort by field rank = fixpoint of adjacent different-field
    // swaps; same-field relative order is preserved.
    kept.sort_by(|a, b| {
        let (fa, fb) = (a.field().expect("kept tokens carry a field"), b.field().unwrap());
        order.cmp(fa, fb)
    });
    Some(kept)
}

/// Counters for one normalization run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NormalizeStats {
    /// Candidate summands fed to path reduction across all distribution
    /// stages (before zero pruning and deduplication).
    pub summands_before_reduction: u64,
    /// Candidates that reduced to `0` and were dropped.
    pub zero_paths: u64,
    /// Candidates whose canonical form was already present.
    pub dedup_count: u64,
}

/// Reduces a policy to its canonical sum of paths: negation elimination,
/// repetition unfolding, distribution, per-summand reduction, dropping of
/// zero summands and deduplication. The empty sum means the policy is
/// provably `0`.
///
/// Distribution and reduction are fused and staged left-to-right so that
/// contradictions prune summands before they multiply; the result equals
/// the naive `to_union_free_sum` + `reduce_path` route.
pub fn normalize(p: &Policy, domains: &DomainMap, order: &FieldOrder) -> Result<SumOfPaths> {
    Ok(normalize_with_stats(p, domains, order)?.0)
}

/// As [`normalize`], also returning the run counters.
pub fn normalize_with_stats(
    p: &Policy,
    domains: &DomainMap,
    order: &FieldOrder,
) -> Result<(SumOfPaths, NormalizeStats)> {
    let negation_free = eliminate_negation(p, domains)?;
    let mut stats = NormalizeStats::default();
    let reduced = expand_reduced(&negation_free, order, &mut stats);
    let paths = reduced
        .into_iter()
        .map(|tokens| if tokens.is_empty() { Path::identity() } else { Path::new(tokens) })
        .collect();
    Ok((paths, stats))
}

type TokenSeq = Vec<Token>;

/// Sequential composition of two reduced summand sets, reducing and
/// deduplicating each concatenation. Reducing prefixes early is sound:
/// a token's fate depends only on the per-field state of its prefix, which
/// reduction preserves.
fn compose_sets(
    a: &BTreeSet<TokenSeq>,
    b: &BTreeSet<TokenSeq>,
    order: &FieldOrder,
    stats: &mut NormalizeStats,
) -> BTreeSet<TokenSeq> {
    let pairs: u64 = (a.len() as u64) * (b.len() as u64);
    stats.summands_before_reduction += pairs;

    let reduce_pair = |(x, y): (&TokenSeq, &TokenSeq)| -> Option<TokenSeq> {
        let mut joined = Vec::with_capacity(x.len() + y.len());
        joined.extend_from_slice(x);
        joined.extend_from_slice(y);
        reduce_tokens(&joined, order)
    };

    let candidates: Vec<Option<TokenSeq>> = if pairs >= 4096 {
        let pair_list: Vec<(&TokenSeq, &TokenSeq)> =
            a.iter().flat_map(|x| b.iter().map(move |y| (x, y))).collect();
        pair_list.into_par_iter().map(reduce_pair).collect()
    } else {
        a.iter().flat_map(|x| b.iter().map(move |y| (x, y))).map(reduce_pair).collect()
    };

    let mut out = BTreeSet::new();
    for candidate in candidates {
        match candidate {
            None => stats.zero_paths += 1,
            Some(tokens) => {
                if !out.insert(tokens) {
                    stats.dedup_count += 1;
                }
            }
        }
    }
    out
}

/// `init . body^n`, staged. When the body contains the identity summand,
/// `(1 + r)^n = 1 + r + ... + r^n`, so only the newly reached summands need
/// composing each round; the loop stops early once nothing new appears.
fn rep_compose(
    init: BTreeSet<TokenSeq>,
    body: &BTreeSet<TokenSeq>,
    n: u32,
    order: &FieldOrder,
    stats: &mut NormalizeStats,
) -> BTreeSet<TokenSeq> {
    if body.contains(&Vec::new()) {
        let rest: BTreeSet<TokenSeq> = body.iter().filter(|p| !p.is_empty()).cloned().collect();
        let mut acc = init.clone();
        let mut frontier = init;
        for _ in 0..n {
            let step = compose_sets(&frontier, &rest, order, stats);
            let fresh: BTreeSet<TokenSeq> =
                step.into_iter().filter(|p| !acc.contains(p)).collect();
            if fresh.is_empty() {
                break;
            }
            acc.extend(fresh.iter().cloned());
            frontier = fresh;
        }
        acc
    } else {
        let mut acc = init;
        for _ in 0..n {
            if acc.is_empty() {
                break;
            }
            acc = compose_sets(&acc, body, order, stats);
        }
        acc
    }
}

fn singleton(token: Token, stats: &mut NormalizeStats) -> BTreeSet<TokenSeq> {
    stats.summands_before_reduction += 1;
    BTreeSet::from([vec![token]])
}

fn expand_reduced(
    p: &Policy,
    order: &FieldOrder,
    stats: &mut NormalizeStats,
) -> BTreeSet<TokenSeq> {
    fn pred(a: &Predicate, order: &FieldOrder, stats: &mut NormalizeStats) -> BTreeSet<TokenSeq> {
        match a {
            Predicate::One => BTreeSet::from([Vec::new()]),
            Predicate::Zero => BTreeSet::new(),
            Predicate::Test(field, value) => singleton(Token::test(*field, *value), stats),
            Predicate::Disj(ops) => {
                let mut out = BTreeSet::new();
                for op in ops {
                    out.extend(pred(op, order, stats));
                }
                out
            }
            Predicate::Conj(x, y) => {
                let xs = pred(x, order, stats);
                let ys = pred(y, order, stats);
                compose_sets(&xs, &ys, order, stats)
            }
            Predicate::Neg(_) => unreachable!("negations are eliminated before expansion"),
        }
    }

    match p {
        Policy::Filter(a) => pred(a, order, stats),
        Policy::Mod(field, value) => singleton(Token::modify(*field, *value), stats),
        Policy::Union(ops) => {
            let mut out = BTreeSet::new();
            for op in ops {
                out.extend(expand_reduced(op, order, stats));
            }
            out
        }
        Policy::Seq(..) => {
            // Fold the whole spine left to right so upstream filters prune
            // downstream distribution.
            let mut spine = Vec::new();
            collect_seq_spine(p, &mut spine);
            let mut acc = BTreeSet::from([Vec::new()]);
            for factor in spine {
                if acc.is_empty() {
                    break;
                }
                acc = match factor {
                    Policy::Rep(body, n) => {
                        let body_paths = expand_reduced(body, order, stats);
                        rep_compose(acc, &body_paths, *n, order, stats)
                    }
                    other => {
                        let rhs = expand_reduced(other, order, stats);
                        compose_sets(&acc, &rhs, order, stats)
                    }
                };
            }
            acc
        }
        Policy::Rep(body, n) => {
            let body_paths = expand_reduced(body, order, stats);
            rep_compose(BTreeSet::from([Vec::new()]), &body_paths, *n, order, stats)
        }
    }
}

fn collect_seq_spine<'a>(p: &'a Policy, out: &mut Vec<&'a Policy>) {
    match p {
        Policy::Seq(a, b) => {
            collect_seq_spine(a, out);
            collect_seq_spine(b, out);
        }
        other => out.push(other),
    }
}

pub mod rules {
    //! The reduction rule set as explicit, individually applicable rewrite
    //! steps, used to check confluence (any schedule reaches the same
    //! canonical form) and termination (every step strictly decreases the
    //! lexicographic measure (token count, field-order inversions)).

    use super::*;
    use rand::Rng;

    /// One applicable rewrite at specific positions.
    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum RuleApp {
        /// Drop a `1` token (unit elimination).
        DropOne { at: usize },
        /// A `0` token: the whole path rewrites to the empty sum.
        ZeroToken { at: usize },
        /// Remove a test equal to an earlier test on the same field with no
        /// modification of that field in between.
        DropDuplicateTest { first: usize, dup: usize },
        /// Remove a test matching the value of an earlier modification of
        /// the same field with no further modification in between.
        AbsorbTestAfterMod { mod_at: usize, test_at: usize },
        /// Two tests on one field with different values, and the second
        /// value is never assigned in between: the path is `0`.
        ContradictTests { first: usize, second: usize },
        /// A modification followed by a mismatching test on the same field,
        /// with the tested value never assigned in between: the path is `0`.
        ContradictModTest { mod_at: usize, test_at: usize },
        /// Swap two adjacent tokens on different fields that are out of
        /// field order.
        SwapAdjacent { at: usize },
    }

    impl RuleApp {
        pub fn name(&self) -> &'static str {
            match self {
                RuleApp::DropOne { .. } => "drop-one",
                RuleApp::ZeroToken { .. } => "zero-token",
                RuleApp::DropDuplicateTest { .. } => "drop-duplicate-test",
                RuleApp::AbsorbTestAfterMod { .. } => "absorb-test-after-mod",
                RuleApp::ContradictTests { .. } => "contradict-tests",
                RuleApp::ContradictModTest { .. } => "contradict-mod-test",
                RuleApp::SwapAdjacent { .. } => "swap-adjacent",
            }
        }

        pub fn is_zero(&self) -> bool {
            matches!(
                self,
                RuleApp::ZeroToken { .. }
                    | RuleApp::ContradictTests { .. }
                    | RuleApp::ContradictModTest { .. }
            )
        }
    }

    /// `(token count, field-order inversion count)`; rewrites must decrease
    /// it lexicographically, and a rewrite to `0` bottoms out at `(0, 0)`.
    pub fn measure(tokens: &[Token], order: &FieldOrder) -> (usize, usize) {
        let mut inversions = 0;
        for i in 0..tokens.len() {
            for j in i + 1..tokens.len() {
                if let (Some(fi), Some(fj)) = (tokens[i].field(), tokens[j].field()) {
                    if fi != fj && order.cmp(fi, fj) == Ordering::Greater {
                        inversions += 1;
                    }
                }
            }
        }
        (tokens.len(), inversions)
    }

    /// True when no modification of `field` occurs strictly between `i` and `j`.
    fn unmodified_between(tokens: &[Token], field: FieldId, i: usize, j: usize) -> bool {
        tokens[i + 1..j]
            .iter()
            .all(|tk| !matches!(tk, Token::Mod { field: f, .. } if *f == field))
    }

    /// True when `field <- value` occurs nowhere strictly between `i` and `j`.
    fn not_assigned_between(tokens: &[Token], field: FieldId, value: Value, i: usize, j: usize) -> bool {
        tokens[i + 1..j].iter().all(
            |tk| !matches!(tk, Token::Mod { field: f, value: v } if *f == field && *v == value),
        )
    }

    /// Every rewrite applicable to the token sequence.
    pub fn applicable(tokens: &[Token], order: &FieldOrder) -> Vec<RuleApp> {
        let mut apps = Vec::new();
        for (at, tk) in tokens.iter().enumerate() {
            match tk {
                Token::Zero => apps.push(RuleApp::ZeroToken { at }),
                Token::One if tokens.len() > 1 => apps.push(RuleApp::DropOne { at }),
                _ => {}
            }
        }
        for j in 0..tokens.len() {
            let Token::Test { field, value } = tokens[j] else { continue };
            for i in 0..j {
                match tokens[i] {
                    Token::Test { field: f, value: v } if f == field => {
                        if v == value {
                            if unmodified_between(tokens, field, i, j) {
                                apps.push(RuleApp::DropDuplicateTest { first: i, dup: j });
                            }
                        } else if not_assigned_between(tokens, field, value, i, j) {
                            apps.push(RuleApp::ContradictTests { first: i, second: j });
                        }
                    }
                    Token::Mod { field: f, value: v } if f == field => {
                        if v == value {
                            if unmodified_between(tokens, field, i, j) {
                                apps.push(RuleApp::AbsorbTestAfterMod { mod_at: i, test_at: j });
                            }
                        } else if not_assigned_between(tokens, field, value, i, j) {
                            apps.push(RuleApp::ContradictModTest { mod_at: i, test_at: j });
                        }
                    }
                    _ => {}
                }
            }
        }
        for at in 0..tokens.len().saturating_sub(1) {
            if let (Some(fa), Some(fb)) = (tokens[at].field(), tokens[at + 1].field()) {
                if fa != fb && order.cmp(fa, fb) == Ordering::Greater {
                    apps.push(RuleApp::SwapAdjacent { at });
                }
            }
        }
        apps
    }

    /// Applies one rewrite; `None` means the path rewrote to the empty sum.
    pub fn apply(tokens: &[Token], app: RuleApp) -> Option<Vec<Token>> {
        if app.is_zero() {
            return None;
        }
        let mut out = tokens.to_vec();
        match app {
            RuleApp::DropOne { at } => {
                out.remove(at);
            }
            RuleApp::DropDuplicateTest { dup, .. } => {
                out.remove(dup);
            }
            RuleApp::AbsorbTestAfterMod { test_at, .. } => {
                out.remove(test_at);
            }
            RuleApp::SwapAdjacent { at } => out.swap(at, at + 1),
            _ => unreachable!(),
        }
        Some(out)
    }

    /// One recorded rewrite step.
    #[derive(Clone, Debug)]
    pub struct Step {
        pub rule: &'static str,
        pub before: (usize, usize),
        pub after: (usize, usize),
    }

    /// The outcome of a rule-by-rule reduction.
    #[derive(Clone, Debug)]
    pub struct Reduction {
        pub result: Option<Path>,
        pub steps: Vec<Step>,
    }

    /// Reduces by picking uniformly among applicable rewrites until none
    /// remain. The fixpoint equals [`super::reduce_path`] regardless of the
    /// schedule; every step's measure decrease is recorded for the
    /// termination suite.
    pub fn reduce_path_randomized(
        path: &Path,
        order: &FieldOrder,
        rng: &mut impl Rng,
    ) -> Reduction {
        let mut tokens = path.tokens.clone();
        let mut steps = Vec::new();
        loop {
            let apps = applicable(&tokens, order);
            if apps.is_empty() {
                let result = if tokens.is_empty() { Path::identity() } else { Path::new(tokens) };
                return Reduction { result: Some(result), steps };
            }
            let app = apps[rng.gen_range(0..apps.len())];
            let before = measure(&tokens, order);
            match apply(&tokens, app) {
                None => {
                    steps.push(Step { rule: app.name(), before, after: (0, 0) });
                    return Reduction { result: None, steps };
                }
                Some(next) => {
                    let after = measure(&next, order);
                    steps.push(Step { rule: app.name(), before, after });
                    tokens = next;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_policy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fid(s: &str) -> FieldId {
        FieldId::new(s)
    }

    fn v(s: &str) -> Value {
        Value::new(s)
    }

    fn pt_domains() -> DomainMap {
        let mut d = DomainMap::new();
        d.declare(fid("pt"), (1..=6).map(Value::from));
        d
    }

    fn parse_paths(text: &str, domains: &DomainMap) -> SumOfPaths {
        to_union_free_sum(&parse_policy(text, domains).unwrap())
    }

    #[test]
    fn negation_elimination_examples() {
        let d = pt_domains();
        let p = parse_policy("~(pt = 1)", &d).unwrap();
        let got = eliminate_negation(&p, &d).unwrap();
        let want = parse_policy("pt = 2 + pt = 3 + pt = 4 + pt = 5 + pt = 6", &d).unwrap();
        assert_eq!(got, want);

        let one = Policy::Filter(Predicate::neg(Predicate::One));
        assert_eq!(eliminate_negation(&one, &d).unwrap(), Policy::zero());

        let double = parse_policy("~(~(pt = 1))", &d).unwrap();
        assert_eq!(eliminate_negation(&double, &d).unwrap(), parse_policy("pt = 1", &d).unwrap());
    }

    #[test]
    fn negation_of_singleton_domain_is_zero() {
        let mut d = pt_domains();
        d.declare(fid("typ"), [v("SSH")]);
        let p = parse_policy("~(typ = SSH)", &d).unwrap();
        assert_eq!(eliminate_negation(&p, &d).unwrap(), Policy::zero());
    }

    #[test]
    fn distribution_examples() {
        let d = pt_domains();
        // (a+b).c with a,b,c tests on pt.
        let got = parse_paths("(pt = 1 + pt = 2) . pt = 3", &d);
        let want: SumOfPaths = [
            Path::new(vec![Token::test(fid("pt"), v("1")), Token::test(fid("pt"), v("3"))]),
            Path::new(vec![Token::test(fid("pt"), v("2")), Token::test(fid("pt"), v("3"))]),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);

        // (a+b).(a+c) keeps a.a: no simplification during distribution.
        let got = parse_paths("(pt = 1 + pt = 2) . (pt = 1 + pt = 3)", &d);
        assert_eq!(got.len(), 4);
        assert!(got
            .iter()
            .any(|p| p.tokens == vec![Token::test(fid("pt"), v("1")), Token::test(fid("pt"), v("1"))]));

        let got = parse_paths("0 . pt <- 5", &d);
        assert!(got.is_empty());
    }

    #[test]
    fn reduce_path_examples() {
        let order = FieldOrder::lexicographic();
        let pt = fid("pt");
        let sw = fid("sw");

        let contra = Path::new(vec![Token::test(pt, v("1")), Token::test(pt, v("2"))]);
        assert_eq!(reduce_path(&contra, &order), None);

        let contextual = Path::new(vec![
            Token::test(pt, v("1")),
            Token::modify(sw, v("A")),
            Token::test(pt, v("2")),
        ]);
        assert_eq!(reduce_path(&contextual, &order), None);
        assert!(symbolic_zero_check(&contextual));

        let mods = Path::new(vec![Token::modify(pt, v("5")), Token::modify(pt, v("6"))]);
        assert_eq!(reduce_path(&mods, &order), Some(mods.clone()));
    }

    #[test]
    fn reduce_orders_commuting_tokens() {
        let order = FieldOrder::lexicographic();
        let pt = fid("pt");
        let sw = fid("sw");
        let path = Path::new(vec![
            Token::test(sw, v("A")),
            Token::test(pt, v("1")),
            Token::modify(sw, v("B")),
            Token::modify(pt, v("2")),
        ]);
        let got = reduce_path(&path, &order).unwrap();
        // Stable sort by field: pt tokens first, per-field order kept.
        assert_eq!(
            got.tokens,
            vec![
                Token::test(pt, v("1")),
                Token::modify(pt, v("2")),
                Token::test(sw, v("A")),
                Token::modify(sw, v("B")),
            ]
        );
    }

    #[test]
    fn explicit_field_order_is_honored() {
        let order = FieldOrder::from_fields([fid("sw"), fid("pt")]);
        let path = Path::new(vec![Token::test(fid("pt"), v("1")), Token::test(fid("sw"), v("A"))]);
        let got = reduce_path(&path, &order).unwrap();
        assert_eq!(
            got.tokens,
            vec![Token::test(fid("sw"), v("A")), Token::test(fid("pt"), v("1"))]
        );
    }

    #[test]
    fn symbolic_zero_check_examples() {
        let pt = fid("pt");
        let sw = fid("sw");
        let ok = Path::new(vec![
            Token::test(pt, v("1")),
            Token::modify(pt, v("2")),
            Token::test(pt, v("2")),
        ]);
        assert!(!symbolic_zero_check(&ok));

        let bad = Path::new(vec![
            Token::test(pt, v("1")),
            Token::modify(pt, v("2")),
            Token::test(pt, v("3")),
        ]);
        assert!(symbolic_zero_check(&bad));

        let fine = Path::new(vec![
            Token::test(pt, v("1")),
            Token::modify(sw, v("B")),
            Token::test(pt, v("1")),
        ]);
        assert!(!symbolic_zero_check(&fine));
    }

    #[test]
    fn normalize_gives_golden_explanation() {
        let d = pt_domains();
        let order = FieldOrder::lexicographic();
        let text = "\
            (pt = 1) . ((1 + (pt = 1 . pt <- 5 + pt = 6 . pt <- 2 + pt = 3 . pt <- 5 + pt = 6 . pt <- 4)\
             . (pt = 5 . pt <- 6 + pt = 6 . pt <- 5 + pt = 1 + pt = 2 + pt = 3 + pt = 4))^6)\
             . (pt = 3 + pt = 4)";
        let program = parse_policy(text, &d).unwrap();
        let got = normalize(&program, &d, &order).unwrap();
        let want = SumOfPaths::singleton(Path::new(vec![
            Token::test(fid("pt"), v("1")),
            Token::modify(fid("pt"), v("5")),
            Token::modify(fid("pt"), v("6")),
            Token::modify(fid("pt"), v("4")),
        ]));
        assert_eq!(got, want);
    }

    #[test]
    fn normalize_p1_alone_is_safe() {
        let d = pt_domains();
        let order = FieldOrder::lexicographic();
        let text = "\
            (pt = 1) . ((1 + (pt = 1 . pt <- 5 + pt = 6 . pt <- 2)\
             . (pt = 5 . pt <- 6 + pt = 6 . pt <- 5 + pt = 1 + pt = 2 + pt = 3 + pt = 4))^6)\
             . (pt = 3 + pt = 4)";
        let program = parse_policy(text, &d).unwrap();
        let got = normalize(&program, &d, &order).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn normalize_matches_naive_route_on_small_policies() {
        let d = pt_domains();
        let order = FieldOrder::lexicographic();
        for text in [
            "(pt = 1 + pt <- 2) . (pt = 2 + pt = 1) . pt <- 3",
            "(pt = 1 . pt <- 5)^2 + 1",
            "(1 + pt <- 4 . pt = 4)^3",
            "pt = 1 . 0 . pt <- 2 + pt <- 5",
        ] {
            let p = parse_policy(text, &d).unwrap();
            let fused = normalize(&p, &d, &order).unwrap();
            let naive: SumOfPaths = to_union_free_sum(&p)
                .iter()
                .filter_map(|path| reduce_path(path, &order))
                .collect();
            assert_eq!(fused, naive, "mismatch for `{text}`");
        }
    }

    #[test]
    fn randomized_schedules_agree_with_direct_reduction() {
        let order = FieldOrder::lexicographic();
        let pt = fid("pt");
        let sw = fid("sw");
        let paths = [
            Path::new(vec![
                Token::test(pt, v("1")),
                Token::One,
                Token::modify(pt, v("5")),
                Token::test(pt, v("5")),
                Token::modify(sw, v("B")),
                Token::test(pt, v("5")),
                Token::modify(pt, v("6")),
            ]),
            Path::new(vec![
                Token::test(sw, v("A")),
                Token::modify(pt, v("2")),
                Token::test(pt, v("3")),
            ]),
            Path::new(vec![Token::One, Token::One]),
        ];
        for path in &paths {
            let direct = reduce_path(path, &order);
            for seed in 0..16 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let run = rules::reduce_path_randomized(path, &order, &mut rng);
                assert_eq!(run.result, direct, "schedule {seed} diverged on {path}");
                for step in &run.steps {
                    assert!(
                        step.after < step.before,
                        "measure did not decrease: {step:?}"
                    );
                }
            }
        }
    }
}
