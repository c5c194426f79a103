//! Diagonal expectations, the radical seminorm and the ideal generated by the
//! compact elements.

use serde::{Deserialize, Serialize};

use crate::compactness::{classify_compact, norm_interval, Verdict};
use crate::decision::{mult_compact_decision, MultKind};
use crate::error::{Error, Result};
use crate::expr::OperatorExpr;
use crate::nest::{Basis, Cut, CutSet, Dim, Nest};
use crate::normal::NormalForm;
use crate::numerics::NormInterval;
use crate::operator::Operator;
use crate::rule::End;
use crate::task::MultiplicationTask;

/// Cuts `0 = c_1 < … < c_n = I` of a nest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSubnest {
    cuts: Vec<Cut>,
}

impl FiniteSubnest {
    /// Adds the end cuts, sorts, and checks every cut against the nest.
    pub fn new(nest: &Nest, cuts: &[Cut]) -> Result<FiniteSubnest> {
        let mut out = vec![Cut::NegInf, Cut::PosInf];
        for &c in cuts {
            let c = nest.normalize(c);
            if !nest.contains(c) {
                return Err(Error::CutNotInNest(c.to_string()));
            }
            out.push(c);
        }
        out.sort();
        out.dedup();
        Ok(FiniteSubnest { cuts: out })
    }

    pub fn trivial() -> FiniteSubnest {
        FiniteSubnest { cuts: vec![Cut::NegInf, Cut::PosInf] }
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// Consecutive pairs `(c_{i-1}, c_i)`.
    pub fn blocks(&self) -> impl Iterator<Item = (Cut, Cut)> + '_ {
        self.cuts.windows(2).map(|w| (w[0], w[1]))
    }

    /// Member of the canonical refinement chain: the cuts of the nest with
    /// values in `[-2^k, 2^k]`.
    pub fn refinement(nest: &Nest, k: u32) -> FiniteSubnest {
        let r = 1i64 << k.min(40);
        let inner: Vec<Cut> = match nest.cut_set() {
            CutSet::Explicit(v) => v.iter().filter(|&&c| -r <= c && c <= r).map(|&c| Cut::At(c)).collect(),
            CutSet::All => {
                let lo = if nest.basis() == Basis::Natural { 1 } else { -r };
                (lo..=r).map(Cut::At).collect()
            }
        };
        FiniteSubnest::new(nest, &inner).expect("refinement cuts belong to the nest")
    }
}

fn block_nf(a: &NormalForm, (lo, hi): (Cut, Cut)) -> NormalForm {
    a.compress((lo, hi), (lo, hi))
}

/// `Δ_F(a) = Σ_i (P_{c_i} − P_{c_{i-1}}) a (P_{c_i} − P_{c_{i-1}})`.
pub fn diag_expectation_nf(a: &NormalForm, f: &FiniteSubnest) -> NormalForm {
    f.blocks().fold(NormalForm::zero(a.basis()), |acc, b| acc.add(&block_nf(a, b)))
}

/// [`diag_expectation_nf`] as a canonical expression.
pub fn diag_expectation(a: &Operator, f: &FiniteSubnest) -> OperatorExpr {
    Operator::from_normal_form(diag_expectation_nf(a.nf(), f)).canonical_expr()
}

/// `‖Δ_F(a)‖` as the largest block norm.
pub fn diag_norm(nest: &Nest, a: &NormalForm, f: &FiniteSubnest) -> NormInterval {
    let mut out = NormInterval::zero();
    for (lo, hi) in f.blocks() {
        let n = match (nest.gap_dimension(lo, hi), hi) {
            (Dim::Finite(1), Cut::At(i)) => NormInterval::exact(a.entry(i, i).abs()),
            _ => norm_interval(&block_nf(a, (lo, hi))),
        };
        out = NormInterval::new(out.lo.max(n.lo), out.hi.max(n.hi));
    }
    out
}

/// One step of the refinement chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub level: u32,
    pub cuts: usize,
    pub norm: NormInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadicalEstimate {
    pub seminorm: NormInterval,
    pub steps: Vec<RefinementStep>,
}

/// `inf_F ‖Δ_F(a)‖` along the refinement chain `F_0 ⊆ F_1 ⊆ … ⊆ F_budget`.
///
/// The upper end is the best block norm reached. The lower end uses the
/// diagonal entries and the band tails, which every `Δ_F(a)` keeps, or the
/// exact value once the chain has reached every cut of a finite nest.
pub fn radical_seminorm(nest: &Nest, a: &Operator, budget: u32) -> RadicalEstimate {
    let nf = a.nf();
    let mut steps = Vec::new();
    let mut hi = f64::INFINITY;
    let mut finest = None;
    for k in 0..=budget {
        let f = FiniteSubnest::refinement(nest, k);
        let norm = diag_norm(nest, nf, &f);
        hi = hi.min(norm.hi);
        steps.push(RefinementStep { level: k, cuts: f.cuts().len(), norm });
        if let CutSet::Explicit(v) = nest.cut_set() {
            if f.cuts().len() == v.len() + 2 {
                finest = Some(norm);
                break;
            }
        }
    }
    let lo = match finest {
        Some(n) => n.lo,
        None => {
            let r = 1i64 << budget.min(40);
            let first = nest.basis().first_index().unwrap_or(-r);
            let diag = (first..=r).map(|i| nf.entry(i, i).abs()).fold(0.0, f64::max);
            let ends: &[End] = match nest.basis() {
                Basis::Natural => &[End::Plus],
                Basis::Integer => &[End::Plus, End::Minus],
            };
            let tails = nf
                .bands()
                .values()
                .flat_map(|w| ends.iter().map(move |&e| w.limsup_abs(e)))
                .fold(0.0, f64::max);
            diag.max(tails)
        }
    };
    RadicalEstimate { seminorm: NormInterval::new(lo.min(hi), hi), steps }
}

/// `Δ_F(a) + Σ_i P_i P_{i-1}^⊥ a P_i^⊥`, which equals `a` for `a ∈ Alg F`.
pub fn reconstruction(a: &NormalForm, f: &FiniteSubnest) -> NormalForm {
    f.blocks()
        .map(|(lo, hi)| a.compress((lo, hi), (hi, Cut::PosInf)))
        .fold(diag_expectation_nf(a, f), |acc, part| acc.add(&part))
}

/// `M_{a,a}` compact, i.e. `a` is a compact element of `Alg N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementVerdict {
    pub verdict: Verdict,
    pub mult: MultKind,
}

pub fn compact_element_test(nest: &Nest, a: &Operator) -> Result<ElementVerdict> {
    let task = MultiplicationTask::new(nest.clone(), a.clone(), a.clone())?;
    let mult = mult_compact_decision(&task)?.kind;
    let verdict = match mult {
        MultKind::Zero | MultKind::Compact => Verdict::Compact,
        MultKind::NotCompact => Verdict::NonCompact,
        _ => Verdict::Unknown,
    };
    Ok(ElementVerdict { verdict, mult })
}

/// A corner `P_i P_{i-1}^⊥ a P_i^⊥` with its compact-element verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerPart {
    pub lo: Cut,
    pub hi: Cut,
    pub part: OperatorExpr,
    pub element: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealDecomposition {
    pub subnest: Vec<Cut>,
    pub diagonal_part: OperatorExpr,
    pub corner_parts: Vec<CornerPart>,
    pub diagonal_norm: NormInterval,
    /// Set when `a` itself is compact and so lies in the ideal directly.
    pub compact_part: Option<OperatorExpr>,
    /// Whether `‖Δ_F(a)‖ < ε` was certified.
    pub achieved: bool,
    pub residual: f64,
    pub diagnostic: String,
}

/// Splits `a` as `Δ_F(a) + Σ_i P_i P_{i-1}^⊥ a P_i^⊥` with `‖Δ_F(a)‖ < ε`
/// when the refinement chain reaches it; compact `a` is reported directly.
pub fn jc_decompose(nest: &Nest, a: &Operator, eps: f64, budget: u32) -> Result<IdealDecomposition> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
    }
    let nf = a.nf();
    if nf.is_zero() {
        return Ok(IdealDecomposition {
            subnest: FiniteSubnest::trivial().cuts().to_vec(),
            diagonal_part: OperatorExpr::Zero,
            corner_parts: Vec::new(),
            diagonal_norm: NormInterval::zero(),
            compact_part: None,
            achieved: true,
            residual: 0.0,
            diagnostic: "zero operator".into(),
        });
    }
    let compact = classify_compact(a).is_compact();
    let mut best: Option<(FiniteSubnest, NormInterval)> = None;
    for k in 0..=budget {
        let f = FiniteSubnest::refinement(nest, k);
        let norm = diag_norm(nest, nf, &f);
        let better = best.as_ref().is_none_or(|b| norm.hi < b.1.hi);
        let done = norm.hi < eps;
        if better {
            best = Some((f, norm));
        }
        if done {
            break;
        }
    }
    let (f, norm) = best.expect("chain has at least one step");
    let achieved = norm.hi < eps;
    let diag = diag_expectation_nf(nf, &f);
    let mut sum = diag.clone();
    let mut corner_parts = Vec::new();
    for (lo, hi) in f.blocks() {
        let part = nf.compress((lo, hi), (hi, Cut::PosInf));
        if part.is_zero() {
            continue;
        }
        sum = sum.add(&part);
        let op = Operator::from_normal_form(part);
        let element = compact_element_test(nest, &op)?.verdict;
        corner_parts.push(CornerPart { lo, hi, part: op.canonical_expr(), element });
    }
    let residual = norm_interval(&sum.sub(nf)).hi;
    let diagnostic = match (achieved, compact) {
        (true, _) => format!("diagonal part below {eps}"),
        (false, true) => "diagonal part does not shrink; the operator is compact and lies in the ideal as such".into(),
        (false, false) => format!("no subnest up to level {budget} brings the diagonal part below {eps}"),
    };
    Ok(IdealDecomposition {
        subnest: f.cuts().to_vec(),
        diagonal_part: Operator::from_normal_form(diag).canonical_expr(),
        corner_parts,
        diagonal_norm: norm,
        compact_part: compact.then(|| a.canonical_expr()),
        achieved,
        residual,
        diagnostic,
    })
}

/// Outcome of the test whether the compact elements of `Alg N` form an ideal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealPredicate {
    pub holds: bool,
    /// Interior cuts `P < S` with `S − P` infinite dimensional.
    pub witness: Option<(Cut, Cut)>,
    /// Interior cuts `Q` for which the compact elements are `K(N) + Q Alg N Q^⊥`
    /// (a sample when there are infinitely many).
    pub admissible_q: Vec<Cut>,
    /// `admissible_q` is a sample of infinitely many interior cuts.
    pub sampled: bool,
}

/// Compact elements form an ideal iff every pair of interior cuts has a
/// finite-dimensional gap.
pub fn compact_elements_ideal_predicate(nest: &Nest) -> IdealPredicate {
    let (interior, exhaustive) = nest.cuts_between(Cut::NegInf, Cut::PosInf, 64);
    // gaps are additive, so consecutive interior cuts suffice
    let witness = interior
        .windows(2)
        .find(|w| nest.gap_dimension(w[0], w[1]) == Dim::Infinite)
        .map(|w| (w[0], w[1]));
    let holds = witness.is_none();
    IdealPredicate {
        holds,
        witness,
        admissible_q: if holds { interior } else { Vec::new() },
        sampled: !exhaustive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Direction;
    use crate::rule::SeqRule;

    fn op(x: OperatorExpr) -> Operator {
        Operator::new(x, Basis::Natural).unwrap()
    }

    fn units(entries: &[(i64, i64)]) -> Operator {
        let e: Vec<(i64, i64, f64)> = entries.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        op(OperatorExpr::matrix_units(&e))
    }

    #[test]
    fn diagonal_expectation_examples() {
        let n = Nest::maximal_natural();
        let f = FiniteSubnest::new(&n, &[Cut::At(2)]).unwrap();
        let a = units(&[(1, 2), (1, 3), (3, 4)]);
        let d = Operator::new(diag_expectation(&a, &f), Basis::Natural).unwrap();
        assert_eq!(d.nf(), units(&[(1, 2), (3, 4)]).nf());
        let dd = Operator::new(diag_expectation(&d, &f), Basis::Natural).unwrap();
        assert_eq!(dd.nf(), d.nf());
        let i = Operator::identity(Basis::Natural);
        assert_eq!(op(diag_expectation(&i, &f)).nf(), i.nf());
        assert!(FiniteSubnest::new(&Nest::explicit(Basis::Natural, &[3]).unwrap(), &[Cut::At(2)]).is_err());
    }

    #[test]
    fn radical_seminorm_examples() {
        let n = Nest::maximal_natural();
        let r = op(OperatorExpr::rank_one(SeqRule::delta(2), SeqRule::delta(1)));
        assert_eq!(radical_seminorm(&n, &r, 6).seminorm, NormInterval::zero());
        let est = radical_seminorm(&n, &Operator::identity(Basis::Natural), 6);
        assert_eq!(est.seminorm, NormInterval::exact(1.0));
        let shift = op(OperatorExpr::shift(SeqRule::constant(1.0), Direction::Lower));
        let est = radical_seminorm(&n, &shift, 6);
        assert!(est.steps.iter().all(|s| s.norm.hi >= 1.0 - 1e-9));
        assert!(est.seminorm.contains(1.0));
    }

    #[test]
    fn decomposition_examples() {
        let n = Nest::maximal_natural();
        let r = op(OperatorExpr::rank_one(SeqRule::delta(2), SeqRule::delta(1)));
        let d = jc_decompose(&n, &r, 0.1, 6).unwrap();
        assert!(d.achieved);
        assert_eq!(d.diagonal_part, OperatorExpr::Zero);
        assert_eq!(d.corner_parts.len(), 1);
        assert_eq!(op(d.corner_parts[0].part.clone()).nf(), r.nf());
        assert_eq!(d.residual, 0.0);

        let h = op(OperatorExpr::diag(SeqRule::harmonic()));
        let d = jc_decompose(&n, &h, 0.1, 6).unwrap();
        assert!(!d.achieved);
        assert!(d.compact_part.is_some());
        assert!(d.diagonal_norm.contains(1.0));

        let z = jc_decompose(&n, &Operator::zero(Basis::Natural), 0.1, 6).unwrap();
        assert!(z.corner_parts.is_empty());
    }

    #[test]
    fn compact_element_examples() {
        let z = Nest::explicit(Basis::Integer, &[0]).unwrap();
        let corner = OperatorExpr::chain(vec![
            OperatorExpr::cut(Cut::At(0)),
            OperatorExpr::Flip { center: 1, rule: SeqRule::constant(1.0) },
            OperatorExpr::cut_complement(Cut::At(0)),
        ]);
        let c = Operator::new(corner, Basis::Integer).unwrap();
        assert_eq!(compact_element_test(&z, &c).unwrap().verdict, Verdict::Compact);
        let n = Nest::maximal_natural();
        assert_eq!(compact_element_test(&n, &Operator::identity(Basis::Natural)).unwrap().verdict, Verdict::NonCompact);
        let h = op(OperatorExpr::diag(SeqRule::harmonic()));
        assert_eq!(compact_element_test(&n, &h).unwrap().verdict, Verdict::Compact);
    }

    #[test]
    fn ideal_predicate_examples() {
        let p = compact_elements_ideal_predicate(&Nest::maximal_natural());
        assert!(p.holds && p.sampled);
        let p = compact_elements_ideal_predicate(&Nest::explicit(Basis::Integer, &[0, 5]).unwrap());
        assert!(p.holds && !p.sampled);
        assert_eq!(p.admissible_q, vec![Cut::At(0), Cut::At(5)]);
        let p = compact_elements_ideal_predicate(&Nest::explicit(Basis::Integer, &[0]).unwrap());
        assert!(p.holds);
    }
}
