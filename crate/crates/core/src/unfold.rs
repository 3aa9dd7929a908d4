//! Construction of the bounded end-to-end program `in . (1 + p.t)^n . out`
//! and the default unfolding bound (the forwarding-link count of the
//! topology).

use crate::error::{Error, Result};
use crate::parser::SafetyProblem;
use crate::rewrite::to_union_free_sum;
use crate::terms::{Policy, Token};

/// Builds `in . (1 + p.t)^n . out` for the given bound.
pub fn build_program(problem: &SafetyProblem, n: u32) -> Policy {
    let hop = Policy::seq(problem.switch_policy.clone(), problem.topology.clone());
    let step = Policy::union([Policy::one(), hop]);
    Policy::seq(
        Policy::Filter(problem.ingress.clone()),
        Policy::seq(Policy::rep(step, n), Policy::Filter(problem.egress.clone())),
    )
}

/// Replaces every `Rep(q, m)` node, innermost first, by the explicit m-fold
/// sequential self-composition of its body. The result contains no `Rep`
/// nodes; expansion into a sum of powers is left to the distribution step.
pub fn expand_repetitions(p: &Policy) -> Policy {
    match p {
        Policy::Filter(_) | Policy::Mod(..) => p.clone(),
        Policy::Union(ops) => Policy::union(ops.iter().map(expand_repetitions)),
        Policy::Seq(a, b) => Policy::seq(expand_repetitions(a), expand_repetitions(b)),
        Policy::Rep(body, n) => {
            let body = expand_repetitions(body);
            Policy::seq_all(std::iter::repeat(body).take(*n as usize))
        }
    }
}

/// Counts the forwarding links of a topology policy: one per union-free
/// summand after distribution, whether an internal directed link
/// (`pt=a . pt<-b`, possibly sw-guarded) or a perimeter filter (`pt=k`).
///
/// The empty topology `0` has zero links and is not an error.
pub fn default_unfold_bound(topology: &Policy) -> Result<u32> {
    if !topology.is_negation_free() {
        return Err(Error::MalformedTopology {
            reason: "topology contains negation".into(),
        });
    }
    let summands = to_union_free_sum(topology);
    for path in summands.iter() {
        // Link-shaped: all tests precede all modifications.
        let mut seen_mod = false;
        for token in &path.tokens {
            match token {
                Token::Mod { .. } => seen_mod = true,
                Token::Test { .. } if seen_mod => {
                    return Err(Error::MalformedTopology {
                        reason: format!("summand `{path}` tests after modifying"),
                    });
                }
                _ => {}
            }
        }
    }
    Ok(summands.len() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_policy, parse_problem};
    use crate::terms::{structural_eq, DomainMap, FieldId, Predicate, Value};

    fn pt_domains() -> DomainMap {
        let mut d = DomainMap::new();
        d.declare(FieldId::new("pt"), (1..=6).map(Value::from));
        d
    }

    #[test]
    fn build_program_degenerates_at_zero() {
        let d = pt_domains();
        let pt = FieldId::new("pt");
        let problem = SafetyProblem {
            ingress: Predicate::test(pt, Value::from(1)),
            switch_policy: Policy::one(),
            topology: Policy::one(),
            egress: Predicate::test(pt, Value::from(2)),
            domains: d,
            unfold_n: None,
        };
        let program = build_program(&problem, 0);
        let want = Policy::seq(
            Policy::test(pt, Value::from(1)),
            Policy::seq(
                Policy::rep(Policy::union([Policy::one(), Policy::seq(Policy::one(), Policy::one())]), 0),
                Policy::test(pt, Value::from(2)),
            ),
        );
        assert!(structural_eq(&program, &want));
    }

    #[test]
    fn build_program_single_unrolling_shape() {
        let d = pt_domains();
        let pt = FieldId::new("pt");
        let problem = SafetyProblem {
            ingress: Predicate::One,
            switch_policy: Policy::modify(pt, Value::from(5)),
            topology: Policy::one(),
            egress: Predicate::One,
            domains: d,
            unfold_n: None,
        };
        match build_program(&problem, 1) {
            Policy::Seq(_, rest) => match *rest {
                Policy::Seq(rep, _) => assert!(matches!(*rep, Policy::Rep(_, 1))),
                other => panic!("unexpected shape {other}"),
            },
            other => panic!("unexpected shape {other}"),
        }
    }

    #[test]
    fn expand_repetitions_examples() {
        let d = pt_domains();
        let q = parse_policy("pt = 1 . pt <- 5", &d).unwrap();
        let unfolded = expand_repetitions(&Policy::rep(q.clone(), 3));
        let want = Policy::seq(Policy::seq(q.clone(), q.clone()), q.clone());
        assert!(structural_eq(&unfolded, &want));

        assert_eq!(expand_repetitions(&Policy::rep(q.clone(), 0)), Policy::one());

        let nested = Policy::rep(Policy::rep(q.clone(), 2), 2);
        let flat = expand_repetitions(&nested);
        assert!(flat.is_rep_free());
    }

    #[test]
    fn default_bound_counts_forwarding_links() {
        let d = pt_domains();
        let eq1 = parse_policy(
            "pt = 5 . pt <- 6 + pt = 6 . pt <- 5 + pt = 1 + pt = 2 + pt = 3 + pt = 4",
            &d,
        )
        .unwrap();
        assert_eq!(default_unfold_bound(&eq1).unwrap(), 6);
        assert_eq!(default_unfold_bound(&Policy::zero()).unwrap(), 0);
    }

    #[test]
    fn default_bound_firewall_topology() {
        let text = "\
domains:
  sw: A, B
  pt: 1, 2, 3, 4, 5, 6
  dst: H1, H2
  typ: SSH, OTHER
  firewalled: 0, 1
policy: 0
topology: sw = A . (pt = 2 . sw <- B . pt <- 4 + pt = 1 + pt = 3)
        + sw = B . pt = 5 . sw <- A . pt <- 6
ingress: 1
egress: 0
";
        let problem = parse_problem(text).unwrap();
        assert_eq!(default_unfold_bound(&problem.topology).unwrap(), 4);
    }

    #[test]
    fn malformed_topology_is_rejected() {
        let d = pt_domains();
        let bad = parse_policy("pt <- 5 . pt = 6", &d).unwrap();
        assert!(matches!(
            default_unfold_bound(&bad),
            Err(Error::MalformedTopology { .. })
        ));
    }
}
