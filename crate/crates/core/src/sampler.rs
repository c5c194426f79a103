//! Searching `Alg N` for an `x` with `a x b` noncompact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compactness::{classify_nf, representative_cut, Verdict};
use crate::decision::{mult_weak_decision, MultKind};
use crate::error::Result;
use crate::expr::{Direction, OperatorExpr};
use crate::nest::{Cut, CutSet, Nest};
use crate::operator::{alg_membership, Operator};
use crate::rule::SeqRule;
use crate::task::MultiplicationTask;

/// Default number of members tried.
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x: OperatorExpr,
    /// Tail limit of `a x b`.
    pub delta: f64,
    /// Position of `x` in the sampling order.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerEvidence {
    pub samples: usize,
    pub seed: u64,
    pub tried: usize,
    pub compact_images: usize,
    pub unknown_images: usize,
    pub counterexample: Option<Counterexample>,
}

impl SamplerEvidence {
    pub fn consistent(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn parity(even: f64, odd: f64) -> SeqRule {
    SeqRule::Parity { even: Box::new(SeqRule::constant(even)), odd: Box::new(SeqRule::constant(odd)) }
}

fn weights() -> Vec<SeqRule> {
    vec![SeqRule::constant(1.0), parity(1.0, 0.0), parity(0.0, 1.0)]
}

fn finite_cuts(nest: &Nest) -> Vec<Cut> {
    match nest.cut_set() {
        CutSet::Explicit(v) => v.iter().map(|&c| Cut::At(c)).collect(),
        CutSet::All => vec![representative_cut(nest.basis())],
    }
}

/// Structured members tried before random ones: cut projections, shifts,
/// flips and corners from above a cut into below it.
fn structured(nest: &Nest) -> Vec<OperatorExpr> {
    let mut out = vec![OperatorExpr::Identity];
    for c in finite_cuts(nest) {
        out.push(OperatorExpr::cut(c));
        out.push(OperatorExpr::cut_complement(c));
    }
    for steps in 0..=3 {
        for w in weights() {
            for direction in [Direction::Lower, Direction::Raise] {
                if steps == 0 && direction == Direction::Raise {
                    continue;
                }
                out.push(OperatorExpr::Wshift { rule: w.clone(), direction, steps });
            }
        }
    }
    for center in -4..=4i64 {
        let half = (center + 1).div_euclid(2);
        for w in weights() {
            let upper = SeqRule::Product { factors: vec![w.clone(), SeqRule::indicator(Some(half), None)] };
            out.push(OperatorExpr::Flip { center, rule: upper });
        }
        out.push(OperatorExpr::Flip { center, rule: SeqRule::constant(1.0) });
    }
    for c in finite_cuts(nest) {
        let v = c.value().unwrap_or(0);
        for center in [2 * v + 1, 2 * v + 2] {
            out.push(OperatorExpr::chain(vec![
                OperatorExpr::cut(c),
                OperatorExpr::Flip { center, rule: SeqRule::constant(1.0) },
                OperatorExpr::cut_complement(c),
            ]));
        }
    }
    out
}

fn random_member(pool: &[OperatorExpr], rng: &mut ChaCha8Rng) -> OperatorExpr {
    let pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].clone();
    match rng.gen_range(0..3) {
        0 => OperatorExpr::sum(
            OperatorExpr::scale(rng.gen_range(-2.0..2.0), pick(rng)),
            OperatorExpr::scale(rng.gen_range(-2.0..2.0), pick(rng)),
        ),
        1 => OperatorExpr::product(pick(rng), pick(rng)),
        _ => {
            let i = rng.gen_range(1..32i64);
            let j = rng.gen_range(1..=i);
            OperatorExpr::sum(pick(rng), OperatorExpr::rank_one(SeqRule::delta(i), SeqRule::delta(j)))
        }
    }
}

/// Classifies `a x b` for structured and then random members `x` of `Alg N`,
/// stopping at the first noncompact image.
pub fn range_in_compacts_sampler(task: &MultiplicationTask, samples: usize, seed: u64) -> SamplerEvidence {
    let nest = task.nest();
    let basis = nest.basis();
    let is_member = |x: &OperatorExpr| {
        Operator::new(x.clone(), basis).ok().filter(|op| alg_membership(nest, op).is_member())
    };
    let pool: Vec<(OperatorExpr, Operator)> =
        structured(nest).into_iter().filter_map(|x| is_member(&x).map(|op| (x, op))).collect();
    let mut ev = SamplerEvidence {
        samples,
        seed,
        tried: 0,
        compact_images: 0,
        unknown_images: 0,
        counterexample: None,
    };
    let exprs: Vec<OperatorExpr> = pool.iter().map(|p| p.0.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0usize;
    let mut attempts = 0usize;
    while ev.tried < samples && attempts < 20 * samples.max(1) {
        attempts += 1;
        let candidate = if next < pool.len() {
            next += 1;
            Some(pool[next - 1].clone())
        } else {
            let x = random_member(&exprs, &mut rng);
            is_member(&x).map(|op| (x, op))
        };
        let Some((x, op)) = candidate else { continue };
        ev.tried += 1;
        let verdict = classify_nf(task.apply(&op).nf());
        match verdict.verdict {
            Verdict::Compact => ev.compact_images += 1,
            Verdict::Unknown => ev.unknown_images += 1,
            Verdict::NonCompact => {
                let delta = verdict.delta().unwrap_or(0.0);
                ev.counterexample = Some(Counterexample { x, delta, index: ev.tried - 1 });
                break;
            }
        }
    }
    ev
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientKind {
    ZeroInQuotient,
    NonzeroNotWeaklyCompact,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientVerdict {
    pub kind: QuotientKind,
    pub weak: MultKind,
    pub case_tag: Option<u8>,
    /// An `x ∈ Alg N` whose image is not compact, so the induced map on the
    /// quotient by the compacts is nonzero.
    pub witness: Option<Counterexample>,
}

/// Whether `M_{a,b}` induces the zero map on `Alg N / (Alg N ∩ K(H))`.
pub fn quotient_verdict(task: &MultiplicationTask) -> Result<QuotientVerdict> {
    let weak = mult_weak_decision(task)?;
    let positive = weak.kind.weakly_positive();
    let (kind, witness) = if positive == Some(true) {
        (QuotientKind::ZeroInQuotient, None)
    } else {
        let ev = range_in_compacts_sampler(task, DEFAULT_SAMPLES, 0);
        match (ev.counterexample, positive) {
            (Some(c), _) => (QuotientKind::NonzeroNotWeaklyCompact, Some(c)),
            (None, Some(false)) => (QuotientKind::NonzeroNotWeaklyCompact, None),
            (None, _) => (QuotientKind::Unknown, None),
        }
    };
    Ok(QuotientVerdict { kind, weak: weak.kind, case_tag: weak.case_tag, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nest::Basis;

    fn harmonic() -> OperatorExpr {
        OperatorExpr::diag(SeqRule::harmonic())
    }

    #[test]
    fn sampler_examples() {
        let n = Nest::maximal_natural();
        let t = MultiplicationTask::from_exprs(n.clone(), OperatorExpr::Identity, harmonic()).unwrap();
        let ev = range_in_compacts_sampler(&t, 50, 7);
        assert!(ev.consistent());
        assert_eq!(ev.tried, 50);

        let t = MultiplicationTask::from_exprs(n.clone(), OperatorExpr::Identity, OperatorExpr::Identity).unwrap();
        let ev = range_in_compacts_sampler(&t, 100, 7);
        assert_eq!(ev.counterexample.unwrap().x, OperatorExpr::Identity);

        let t = MultiplicationTask::from_exprs(n, OperatorExpr::Zero, OperatorExpr::Zero).unwrap();
        assert!(range_in_compacts_sampler(&t, 100, 1).consistent());
    }

    #[test]
    fn sampler_is_reproducible() {
        let n = Nest::maximal_natural();
        let t = MultiplicationTask::from_exprs(n, harmonic(), OperatorExpr::Identity).unwrap();
        assert_eq!(range_in_compacts_sampler(&t, 100, 3), range_in_compacts_sampler(&t, 100, 3));
    }

    #[test]
    fn quotient_examples() {
        let n = Nest::maximal_natural();
        let t = MultiplicationTask::from_exprs(n.clone(), OperatorExpr::Identity, harmonic()).unwrap();
        assert_eq!(quotient_verdict(&t).unwrap().kind, QuotientKind::ZeroInQuotient);
        let t = MultiplicationTask::from_exprs(Nest::trivial(Basis::Natural), OperatorExpr::Identity, OperatorExpr::Identity)
            .unwrap();
        let q = quotient_verdict(&t).unwrap();
        assert_eq!(q.kind, QuotientKind::NonzeroNotWeaklyCompact);
        assert!(q.witness.is_some());
        let t = MultiplicationTask::from_exprs(n, OperatorExpr::Zero, OperatorExpr::Zero).unwrap();
        assert_eq!(quotient_verdict(&t).unwrap().kind, QuotientKind::ZeroInQuotient);
    }
}
