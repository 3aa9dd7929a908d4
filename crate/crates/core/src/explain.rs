//! Verdicts and minimal failure explanations: the canonical sum of paths is
//! filtered down to its subsumption-minimal summands — a path obtainable
//! from another by deleting tokens explains strictly more.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::parser::SafetyProblem;
use crate::rewrite::{normalize_with_stats, FieldOrder, NormalizeStats};
use crate::terms::{Path, SumOfPaths};
use crate::unfold::{build_program, default_unfold_bound};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Unsafe,
}

/// Counters and timing for one analysis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplainStats {
    pub summands_before_reduction: u64,
    pub zero_paths: u64,
    pub dedup_count: u64,
    pub elapsed_seconds: f64,
}

/// The analysis result: `Safe` iff the path set is empty; when `Unsafe`,
/// the paths are the (minimal, unless disabled) failure explanations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub verdict: Verdict,
    pub unfold_n: u32,
    pub paths: SumOfPaths,
    pub stats: ExplainStats,
}

impl std::fmt::Display for Explanation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.verdict {
            Verdict::Safe => {
                writeln!(f, "verdict: safe (unfold bound {})", self.unfold_n)?;
                write!(f, "no forwarding path reaches the hazardous egress")
            }
            Verdict::Unsafe => {
                writeln!(f, "verdict: unsafe (unfold bound {})", self.unfold_n)?;
                write!(f, "failure explanations ({}):", self.paths.len())?;
                for path in self.paths.iter() {
                    write!(f, "\n  {path}")?;
                }
                Ok(())
            }
        }
    }
}

/// True iff `p`'s token sequence is a (not necessarily contiguous)
/// subsequence of `q`'s — `p` is obtained from `q` by deleting tokens.
pub fn subsumes(p: &Path, q: &Path) -> bool {
    let mut it = q.tokens.iter();
    p.tokens.iter().all(|tk| it.any(|other| other == tk))
}

/// Subsumption with at least one deletion.
pub fn strictly_subsumes(p: &Path, q: &Path) -> bool {
    p.tokens.len() < q.tokens.len() && subsumes(p, q)
}

/// Removes every path strictly subsumed by another path of the set.
/// Idempotent; the result has no strictly subsuming pair.
pub fn minimize(s: &SumOfPaths) -> SumOfPaths {
    // Only strictly shorter paths can strictly subsume, so order by length.
    let mut by_len: Vec<&Path> = s.iter().collect();
    by_len.sort_by_key(|p| p.len());
    s.iter()
        .filter(|q| {
            !by_len
                .iter()
                .take_while(|p| p.len() < q.len())
                .any(|p| subsumes(p, q))
        })
        .cloned()
        .collect()
}

/// Knobs for [`explain_with`].
#[derive(Clone, Debug)]
pub struct ExplainOptions {
    /// Overrides both the problem's bound and the default.
    pub unfold: Option<u32>,
    /// Keep only subsumption-minimal explanations (on by default).
    pub minimize: bool,
    pub field_order: Option<FieldOrder>,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions { unfold: None, minimize: true, field_order: None }
    }
}

/// Runs the full pipeline: build `in . (1 + p.t)^n . out`, normalize it to
/// a canonical sum of paths, minimize, and package the verdict.
pub fn explain(problem: &SafetyProblem) -> Result<Explanation> {
    explain_with(problem, &ExplainOptions::default())
}

pub fn explain_with(problem: &SafetyProblem, options: &ExplainOptions) -> Result<Explanation> {
    let start = Instant::now();
    let n = match options.unfold.or(problem.unfold_n) {
        Some(n) => n,
        None => default_unfold_bound(&problem.topology)?,
    };
    let order = options.field_order.clone().unwrap_or_else(FieldOrder::lexicographic);
    let program = build_program(problem, n);
    let (nfs, nstats) = normalize_with_stats(&program, &problem.domains, &order)?;
    let paths = if options.minimize { minimize(&nfs) } else { nfs };
    let verdict = if paths.is_empty() { Verdict::Safe } else { Verdict::Unsafe };
    Ok(Explanation {
        verdict,
        unfold_n: n,
        paths,
        stats: stats_from(nstats, start),
    })
}

fn stats_from(n: NormalizeStats, start: Instant) -> ExplainStats {
    ExplainStats {
        summands_before_reduction: n.summands_before_reduction,
        zero_paths: n.zero_paths,
        dedup_count: n.dedup_count,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}
