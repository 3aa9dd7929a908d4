//! Brute-force denotational semantics over single packets with finite
//! domains. Since the fragment is dup-free, histories collapse to single
//! packets and every construct touches only the head packet.
//!
//! This module is the independent oracle the rewrite engine is checked
//! against; it must be exact or refuse (no sampling).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::parser::SafetyProblem;
use crate::terms::{DomainMap, FieldId, Policy, Predicate, Value};
use crate::unfold::build_program;

/// Default cap on the number of packets `is_empty_program` will enumerate.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// A packet: a total assignment of the declared fields.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Packet {
    fields: BTreeMap<FieldId, Value>,
}

impl Packet {
    /// A packet total on the given fields. Panics if a value is missing or
    /// outside its field's domain; packets are only built over declared domains.
    pub fn new(domains: &DomainMap, assignment: impl IntoIterator<Item = (FieldId, Value)>) -> Self {
        let fields: BTreeMap<FieldId, Value> = assignment.into_iter().collect();
        for field in domains.fields() {
            let value = fields
                .get(&field)
                .unwrap_or_else(|| panic!("packet not total: missing field {field}"));
            assert!(
                domains.contains(field, *value),
                "value {value} outside the domain of {field}"
            );
        }
        Packet { fields }
    }

    pub fn get(&self, field: FieldId) -> Option<Value> {
        self.fields.get(&field).copied()
    }

    pub fn set(&self, field: FieldId, value: Value) -> Packet {
        let mut fields = self.fields.clone();
        fields.insert(field, value);
        Packet { fields }
    }

    pub fn fields(&self) -> impl Iterator<Item = (FieldId, Value)> + '_ {
        self.fields.iter().map(|(f, v)| (*f, *v))
    }
}

impl std::fmt::Display for Packet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("{")?;
        for (i, (field, value)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{field} = {value}")?;
        }
        f.write_str("}")
    }
}

/// A duplicate-free set of packets.
pub type PacketSet = BTreeSet<Packet>;

/// All packets over the declared domains, in domain declaration order.
pub fn enumerate_packets(domains: &DomainMap) -> Vec<Packet> {
    let fields: Vec<FieldId> = domains.fields().collect();
    let mut packets = vec![Packet { fields: BTreeMap::new() }];
    for field in fields {
        let values = domains.values(field).expect("declared field");
        let mut next = Vec::with_capacity(packets.len() * values.len());
        for pk in &packets {
            for v in values {
                next.push(pk.set(field, *v));
            }
        }
        packets = next;
    }
    packets
}

fn eval_pred(a: &Predicate, pk: &Packet) -> bool {
    match a {
        Predicate::One => true,
        Predicate::Zero => false,
        Predicate::Test(field, value) => pk.get(*field) == Some(*value),
        Predicate::Disj(ops) => ops.iter().any(|op| eval_pred(op, pk)),
        Predicate::Conj(x, y) => eval_pred(x, pk) && eval_pred(y, pk),
        Predicate::Neg(x) => !eval_pred(x, pk),
    }
}

/// The exact denotation of a policy on one packet. Tests filter, `Neg` is
/// set difference (boolean complement on single packets), `Seq` is Kleisli
/// composition and `Rep(p, n)` composes `p` with itself n times.
pub fn eval(p: &Policy, pk: &Packet, domains: &DomainMap) -> PacketSet {
    match p {
        Policy::Filter(a) => {
            let mut out = PacketSet::new();
            if eval_pred(a, pk) {
                out.insert(pk.clone());
            }
            out
        }
        Policy::Mod(field, value) => {
            let mut out = PacketSet::new();
            out.insert(pk.set(*field, *value));
            out
        }
        Policy::Union(ops) => {
            let mut out = PacketSet::new();
            for op in ops {
                out.extend(eval(op, pk, domains));
            }
            out
        }
        Policy::Seq(a, b) => {
            let mut out = PacketSet::new();
            for mid in eval(a, pk, domains) {
                out.extend(eval(b, &mid, domains));
            }
            out
        }
        Policy::Rep(body, n) => {
            let mut current = PacketSet::new();
            current.insert(pk.clone());
            for _ in 0..*n {
                let mut next = PacketSet::new();
                for q in &current {
                    next.extend(eval(body, q, domains));
                }
                current = next;
                if current.is_empty() {
                    break;
                }
            }
            current
        }
    }
}

/// Semantic Kleene star: the least fixpoint of `S ↦ {pk} ∪ ⋃_{q∈S} eval(p, q)`.
/// Terminates because the packet space is finite.
pub fn eval_star(p: &Policy, pk: &Packet, domains: &DomainMap) -> PacketSet {
    let mut reached = PacketSet::new();
    reached.insert(pk.clone());
    let mut frontier: Vec<Packet> = vec![pk.clone()];
    while let Some(q) = frontier.pop() {
        for next in eval(p, &q, domains) {
            if reached.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    reached
}

/// Smallest `n` such that `eval(Rep(1 + p, n), pk)` has stabilized for every
/// packet; `eval_star(p, pk)` equals that stable set.
pub fn star_saturation_depth(p: &Policy, domains: &DomainMap) -> u32 {
    let once = Policy::union([Policy::one(), p.clone()]);
    let mut depth = 0u32;
    for pk in enumerate_packets(domains) {
        let target = eval_star(p, &pk, domains);
        let mut n = 0u32;
        loop {
            if eval(&Policy::rep(once.clone(), n), &pk, domains) == target {
                break;
            }
            n += 1;
        }
        depth = depth.max(n);
    }
    depth
}

/// Semantic emptiness of `in · (1 + p·t)^n · out` over every packet,
/// enumerated exhaustively with the default cap.
pub fn is_empty_program(problem: &SafetyProblem, n: u32) -> Result<bool> {
    is_empty_program_with_cap(problem, n, DEFAULT_ENUM_CAP)
}

/// As [`is_empty_program`], with an explicit enumeration cap. Refuses with
/// `DomainTooLarge` rather than sampling.
pub fn is_empty_program_with_cap(problem: &SafetyProblem, n: u32, cap: u64) -> Result<bool> {
    Ok(find_witness(problem, n, cap)?.is_none())
}

/// A packet the program forwards to the hazardous egress, if any.
pub fn find_witness(problem: &SafetyProblem, n: u32, cap: u64) -> Result<Option<Packet>> {
    let size = problem.domains.packet_space_size().unwrap_or(u64::MAX);
    if size > cap {
        return Err(Error::DomainTooLarge { size, cap });
    }
    let program = build_program(problem, n);
    let packets = enumerate_packets(&problem.domains);
    // Each packet is independent; combine by disjunction of witnesses.
    Ok(packets
        .par_iter()
        .find_first(|pk| !eval(&program, pk, &problem.domains).is_empty())
        .cloned())
}
