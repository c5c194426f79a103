//! Compactness and weak compactness of multiplication operators on `Alg N`.

use serde::{Deserialize, Serialize};

use crate::compactness::{
    classify_compact, classify_nf, compact_above, compact_below, norm_interval_with, tail_norm, BoundaryProjections,
    Side, Verdict,
};
use crate::error::{Error, Result};
use crate::nest::{Basis, Cut, CutSet, Nest};
use crate::normal::NormalForm;
use crate::numerics::NormInterval;
use crate::operator::Operator;
use crate::rule::End;
use crate::task::{mult_zero_test, MultiplicationTask};

/// Cap on sampled cuts when a quantifier ranges over infinitely many cuts.
const CUT_SAMPLE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultKind {
    Zero,
    Compact,
    NotCompact,
    WeaklyCompact,
    WeaklyCompactNotCompact,
    NotWeaklyCompact,
    Unknown,
}

impl MultKind {
    /// Positive for weak compactness (zero and compact included).
    pub fn weakly_positive(self) -> Option<bool> {
        match self {
            MultKind::Zero | MultKind::Compact | MultKind::WeaklyCompact | MultKind::WeaklyCompactNotCompact => {
                Some(true)
            }
            MultKind::NotWeaklyCompact => Some(false),
            MultKind::NotCompact | MultKind::Unknown => None,
        }
    }
}

/// One compression `P T P` or `P^⊥ T P^⊥` consulted by a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionCheck {
    pub label: String,
    pub cut: Cut,
    pub verdict: Verdict,
}

/// A tail norm bracket consulted by a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub label: String,
    pub interval: NormInterval,
    /// Whether the bracket is the limit along a sequence of cuts.
    pub limit: bool,
}

/// A pair `P_1 ≤ P_2` meeting one threshold of the two-projection search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub epsilon: f64,
    pub p1: Cut,
    pub p2: Cut,
    pub value: NormInterval,
    /// The pair is the limit of a sequence of cuts rather than a single pair.
    pub limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultVerdict {
    pub kind: MultKind,
    /// Which of the four weak-compactness conditions fired.
    pub case_tag: Option<u8>,
    pub boundaries: BoundaryProjections,
    pub compressions: Vec<CompressionCheck>,
    pub tails: Vec<TailCheck>,
    pub pairs: Vec<PairRecord>,
    /// Condition (1) held with `U_a` the successor of `L_b` (an atom between them).
    pub atom_case: bool,
    pub notes: Vec<String>,
}

impl MultVerdict {
    fn new(kind: MultKind, boundaries: BoundaryProjections) -> MultVerdict {
        MultVerdict {
            kind,
            case_tag: None,
            boundaries,
            compressions: Vec::new(),
            tails: Vec::new(),
            pairs: Vec::new(),
            atom_case: false,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, cut: Cut, nf: &NormalForm) -> bool {
        let verdict = classify_nf(nf).verdict;
        self.compressions.push(CompressionCheck { label: label.to_string(), cut, verdict });
        verdict == Verdict::Compact
    }
}

fn corner_below(a: &Operator, p: Cut) -> NormalForm {
    a.nf().compress((Cut::NegInf, p), (Cut::NegInf, p))
}

fn corner_above(b: &Operator, p: Cut) -> NormalForm {
    b.nf().compress((p, Cut::PosInf), (p, Cut::PosInf))
}

/// Compactness of `M_{a,b}` from the boundary projections `R_a`, `Q_b`.
pub fn mult_compact_decision(task: &MultiplicationTask) -> Result<MultVerdict> {
    let bp = task.boundaries()?;
    let zt = mult_zero_test(task)?;
    if zt.zero {
        return Ok(MultVerdict::new(MultKind::Zero, bp));
    }
    let nest = task.nest();
    let (a, b) = (task.a(), task.b());
    let mut v = MultVerdict::new(MultKind::Compact, bp);
    let succ_r = nest.succ(bp.r_a)?;
    let mut compact = true;
    if succ_r == bp.q_b {
        compact &= v.check("Q_b a Q_b", bp.q_b, &corner_below(a, bp.q_b));
        compact &= v.check("R_a^perp b R_a^perp", bp.r_a, &corner_above(b, bp.r_a));
    } else {
        let (cuts, exhaustive) = nest.cuts_between(bp.r_a, bp.q_b, CUT_SAMPLE);
        if !exhaustive {
            // compactness of these compressions is the same at every finite cut
            v.notes.push(format!("sampled {} of infinitely many intermediate cuts", cuts.len()));
        }
        if cuts.is_empty() {
            return Err(Error::UndecidableBoundary(format!(
                "no cut strictly between {} and {}",
                bp.r_a, bp.q_b
            )));
        }
        for p in cuts {
            let (minus, plus) = nest.pred_succ(p)?;
            let ok_a = v.check("P_+ a P_+", plus, &corner_below(a, plus));
            let ok_b = v.check("P_-^perp b P_-^perp", minus, &corner_above(b, minus));
            compact &= ok_a && ok_b;
            if !compact {
                break;
            }
        }
    }
    v.kind = if compact { MultKind::Compact } else { MultKind::NotCompact };
    Ok(v)
}

/// Sum of band and flip tails at one end of the column index: an upper bound
/// for the limit of the norms of the corresponding compressions.
fn tail_sum(nf: &NormalForm, end: End) -> f64 {
    nf.bands().values().chain(nf.flips().values()).map(|w| w.limsup_abs(end)).sum()
}

/// Bracket for `lim ‖T P‖` over finite cuts `P` tending to the given end,
/// where `T` acts on the right (`columns`) or the left (`rows`).
fn limit_bracket(t: &Operator, end: End, columns: bool) -> NormInterval {
    let nf = if columns { t.nf().clone() } else { t.nf().adjoint() };
    NormInterval::new(nf.tail_at(end), tail_sum(&nf, end))
}

/// `inf_{P > S} ‖a(P − S)‖`, as a bracket and whether it is a limit.
fn inf_above(nest: &Nest, a: &Operator, s: Cut) -> Result<Option<(NormInterval, bool)>> {
    if s == Cut::PosInf {
        return Ok(None);
    }
    let next = nest.succ(s)?;
    if next > s {
        Ok(Some((tail_norm(a, s, Side::Right, next), false)))
    } else {
        // S is approached from above by finite cuts: ‖a P_c‖ as c → −∞
        Ok(Some((limit_bracket(a, End::Minus, true), true)))
    }
}

/// `inf_{P < S} ‖(S − P) b‖`.
fn inf_below(nest: &Nest, b: &Operator, s: Cut) -> Result<Option<(NormInterval, bool)>> {
    if s == Cut::NegInf {
        return Ok(None);
    }
    let prev = nest.pred(s)?;
    if prev < s {
        Ok(Some((tail_norm(b, s, Side::Left, prev), false)))
    } else {
        Ok(Some((limit_bracket(b, End::Plus, false), true)))
    }
}

/// Weak compactness via the four conditions on `U_a` and `L_b`.
pub fn mult_weak_decision(task: &MultiplicationTask) -> Result<MultVerdict> {
    let bp = task.boundaries()?;
    let nest = task.nest();
    let (a, b) = (task.a(), task.b());
    let mut v = MultVerdict::new(MultKind::NotWeaklyCompact, bp);
    let (u, l) = (bp.u_a, bp.l_b);
    if u > l {
        v.kind = MultKind::WeaklyCompact;
        v.case_tag = Some(1);
        let (between, _) = nest.cuts_between(l, u, 1);
        v.atom_case = between.is_empty() && nest.succ(l)? == u;
        return Ok(v);
    }
    if u < l {
        return Ok(v);
    }
    let s = u;
    let sas = v.check("S a S", s, &corner_below(a, s));
    let sbs = v.check("S^perp b S^perp", s, &corner_above(b, s));
    if sas && sbs {
        v.kind = MultKind::WeaklyCompact;
        v.case_tag = Some(2);
        return Ok(v);
    }
    let probe = match (sas, sbs) {
        (true, false) => inf_above(nest, a, s)?.map(|x| (3, "inf ||a(P - S)||", x)),
        (false, true) => inf_below(nest, b, s)?.map(|x| (4, "inf ||(S - P)b||", x)),
        _ => None,
    };
    if let Some((tag, label, (interval, limit))) = probe {
        v.tails.push(TailCheck { label: label.to_string(), interval, limit });
        if interval.hi == 0.0 {
            v.kind = MultKind::WeaklyCompact;
            v.case_tag = Some(tag);
        } else if interval.lo == 0.0 {
            v.kind = MultKind::Unknown;
            v.notes.push(Error::UndecidableTail(format!("{label} brackets zero: {interval:?}")).to_string());
        }
    }
    Ok(v)
}

/// Thresholds `1, 1/2, …, 2^-20` of the two-projection search.
pub fn epsilon_schedule() -> Vec<f64> {
    (0..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// Dense block size for pair norms.
const PAIR_BLOCK: i64 = 64;

/// Candidate cuts: every cut of an explicit nest, otherwise the ends and
/// finite cuts at powers of two.
fn pair_candidates(nest: &Nest) -> (Vec<Cut>, bool) {
    match nest.cut_set() {
        CutSet::Explicit(v) => {
            let mut out = vec![Cut::NegInf];
            out.extend(v.iter().map(|&c| Cut::At(c)));
            out.push(Cut::PosInf);
            (out, true)
        }
        CutSet::All => {
            let mut finite: Vec<i64> = (0..=24).map(|j| 1i64 << j).collect();
            if nest.basis() == Basis::Integer {
                finite.push(0);
                finite.extend((0..=24).map(|j| -(1i64 << j)));
            }
            finite.sort_unstable();
            let mut out = vec![Cut::NegInf];
            out.extend(finite.into_iter().map(Cut::At));
            out.push(Cut::PosInf);
            (out, false)
        }
    }
}

fn pair_value(a: &Operator, b: &Operator, p1: Cut, p2: Cut) -> NormInterval {
    let na = norm_interval_with(&a.nf().compress((Cut::NegInf, Cut::PosInf), (p1, p2)), PAIR_BLOCK);
    let nb = norm_interval_with(&b.nf().compress((p1, p2), (Cut::NegInf, Cut::PosInf)), PAIR_BLOCK);
    NormInterval::new(na.lo.min(nb.lo), na.hi.min(nb.hi))
}

/// Weak compactness via pairs `P_1 ≤ P_2` with `P_1 a P_1`, `P_2^⊥ b P_2^⊥`
/// compact and `‖a(P_2 − P_1)‖` or `‖(P_2 − P_1) b‖` below each threshold.
pub fn mult_weak_decision_2proj(task: &MultiplicationTask) -> Result<MultVerdict> {
    let bp = task.boundaries()?;
    let nest = task.nest();
    let (a, b) = (task.a(), task.b());
    let mut v = MultVerdict::new(MultKind::WeaklyCompact, bp);
    let (cands, exhaustive) = pair_candidates(nest);
    let ok_a: Vec<bool> = cands.iter().map(|&p| compact_below(a, p)).collect();
    let ok_b: Vec<bool> = cands.iter().map(|&p| compact_above(b, p)).collect();

    // for each admissible P_1 the nearest admissible P_2 above it; farther
    // pairs only have larger norms
    let mut pairs: Vec<(Cut, Cut, NormInterval)> = Vec::new();
    for i in (0..cands.len()).filter(|&i| ok_a[i]) {
        if let Some(j) = (i..cands.len()).find(|&j| ok_b[j]) {
            let value = pair_value(a, b, cands[i], cands[j]);
            let done = value.hi == 0.0;
            pairs.push((cands[i], cands[j], value));
            if done {
                break;
            }
        }
    }

    // pairs approaching a limit cut that is not itself admissible
    let mut limit: Option<(Cut, Cut, NormInterval)> = None;
    if !exhaustive {
        let fin = cands.len() / 2;
        let (a_fin, a_top) = (ok_a[fin], ok_a[cands.len() - 1]);
        let (b_fin, b_bot) = (ok_b[fin], ok_b[0]);
        if a_fin && !a_top && !b_fin {
            let x = limit_bracket(a, End::Plus, true);
            let y = limit_bracket(b, End::Plus, false);
            limit = Some((Cut::PosInf, Cut::PosInf, NormInterval::new(x.lo.min(y.lo), x.hi.min(y.hi))));
        } else if nest.basis() == Basis::Integer && !a_fin && b_fin && !b_bot {
            let x = limit_bracket(a, End::Minus, true);
            let y = limit_bracket(b, End::Minus, false);
            limit = Some((Cut::NegInf, Cut::NegInf, NormInterval::new(x.lo.min(y.lo), x.hi.min(y.hi))));
        }
    }

    for eps in epsilon_schedule() {
        let hit = pairs.iter().find(|p| p.2.hi < eps).map(|p| (p.0, p.1, p.2, false));
        let hit = hit.or_else(|| limit.filter(|p| p.2.hi < eps).map(|p| (p.0, p.1, p.2, true)));
        if let Some((p1, p2, value, is_limit)) = hit {
            v.pairs.push(PairRecord { epsilon: eps, p1, p2, value, limit: is_limit });
            continue;
        }
        let fails = pairs.iter().all(|p| p.2.lo >= eps) && limit.is_none_or(|p| p.2.lo >= eps);
        if fails {
            v.kind = MultKind::NotWeaklyCompact;
            v.notes.push(format!("no admissible pair below {eps}"));
        } else {
            v.kind = MultKind::Unknown;
            v.notes.push(Error::UndecidableTail(format!("pair norms straddle {eps}")).to_string());
        }
        break;
    }
    for &(p1, p2, interval) in pairs.iter().chain(limit.iter()) {
        let label = format!("pair ({p1}, {p2})");
        v.tails.push(TailCheck { label, interval, limit: false });
    }
    if let (Some(t), Some(_)) = (v.tails.last_mut(), limit) {
        t.limit = true;
    }
    Ok(v)
}

/// Compactness and weak compactness of `M_{a,b}` on `Alg N + K(H)`.
pub fn quasitriangular_decision(a: &Operator, b: &Operator) -> (Verdict, Verdict) {
    let va = classify_compact(a).verdict;
    let vb = classify_compact(b).verdict;
    let compact = match (va, vb) {
        (Verdict::Compact, Verdict::Compact) => Verdict::Compact,
        (Verdict::NonCompact, _) | (_, Verdict::NonCompact) => Verdict::NonCompact,
        _ => Verdict::Unknown,
    };
    let weak = match (va, vb) {
        (Verdict::Compact, _) | (_, Verdict::Compact) => Verdict::Compact,
        (Verdict::NonCompact, Verdict::NonCompact) => Verdict::NonCompact,
        _ => Verdict::Unknown,
    };
    (compact, weak)
}

/// Combined verdict: zero, compact, weakly compact but not compact, or not
/// weakly compact.
pub fn mult_classify(task: &MultiplicationTask) -> Result<MultVerdict> {
    let compact = mult_compact_decision(task)?;
    if matches!(compact.kind, MultKind::Zero | MultKind::Compact) {
        return Ok(compact);
    }
    let mut weak = mult_weak_decision(task)?;
    weak.compressions.extend(compact.compressions);
    weak.kind = match (compact.kind, weak.kind) {
        (MultKind::NotCompact, MultKind::WeaklyCompact) => MultKind::WeaklyCompactNotCompact,
        (_, MultKind::NotWeaklyCompact) => MultKind::NotWeaklyCompact,
        _ => MultKind::Unknown,
    };
    Ok(weak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::OperatorExpr;
    use crate::rule::SeqRule;

    fn harmonic() -> OperatorExpr {
        OperatorExpr::diag(SeqRule::harmonic())
    }

    fn task(nest: Nest, a: OperatorExpr, b: OperatorExpr) -> MultiplicationTask {
        MultiplicationTask::from_exprs(nest, a, b).unwrap()
    }

    #[test]
    fn compact_decision_examples() {
        let t = task(Nest::maximal_natural(), OperatorExpr::Identity, harmonic());
        assert_eq!(mult_compact_decision(&t).unwrap().kind, MultKind::Compact);
        let t = task(Nest::trivial(Basis::Natural), OperatorExpr::Identity, OperatorExpr::Identity);
        assert_eq!(mult_compact_decision(&t).unwrap().kind, MultKind::NotCompact);
        let t = task(Nest::maximal_natural(), OperatorExpr::Zero, OperatorExpr::Zero);
        assert_eq!(mult_compact_decision(&t).unwrap().kind, MultKind::Zero);
    }

    #[test]
    fn weak_decision_examples() {
        let n = Nest::maximal_natural();
        let t = task(n.clone(), OperatorExpr::Identity, OperatorExpr::Identity);
        let v = mult_weak_decision(&t).unwrap();
        assert_eq!(v.kind, MultKind::NotWeaklyCompact);
        assert_eq!(v.tails[0].interval, NormInterval::exact(1.0));
        assert_eq!(mult_weak_decision_2proj(&t).unwrap().kind, MultKind::NotWeaklyCompact);

        let t = task(n, OperatorExpr::Identity, harmonic());
        let v = mult_weak_decision(&t).unwrap();
        assert_eq!((v.kind, v.case_tag), (MultKind::WeaklyCompact, Some(1)));
        let p = mult_weak_decision_2proj(&t).unwrap();
        assert_eq!(p.kind, MultKind::WeaklyCompact);
        assert_eq!(p.pairs.len(), 21);

        let t = task(Nest::trivial(Basis::Natural), harmonic(), OperatorExpr::Identity);
        let v = mult_weak_decision(&t).unwrap();
        assert_eq!((v.kind, v.case_tag), (MultKind::WeaklyCompact, Some(2)));
        assert_eq!(mult_weak_decision_2proj(&t).unwrap().kind, MultKind::WeaklyCompact);
    }

    #[test]
    fn limit_conditions_on_integer_nest() {
        // S = I approached from below: ‖(I − P_c) b‖ → 0 for a decaying b
        let z = Nest::new(&crate::nest::NestDescriptor { basis: Basis::Integer, cuts: CutSet::All }).unwrap();
        let decaying_right = OperatorExpr::diag(SeqRule::Product {
            factors: vec![SeqRule::harmonic(), SeqRule::indicator(Some(1), None)],
        });
        let a = OperatorExpr::Identity;
        let b = OperatorExpr::sum(OperatorExpr::cut(Cut::At(0)), decaying_right);
        let t = task(z.clone(), a, b);
        let v = mult_weak_decision(&t).unwrap();
        assert_eq!(v.kind, MultKind::NotWeaklyCompact, "{v:?}");
        assert_eq!(mult_weak_decision_2proj(&t).unwrap().kind, MultKind::NotWeaklyCompact);

        let left_only = OperatorExpr::cut(Cut::At(0));
        let t = task(z, left_only.clone(), left_only);
        let v = mult_weak_decision(&t).unwrap();
        let p = mult_weak_decision_2proj(&t).unwrap();
        assert_eq!(v.kind.weakly_positive(), p.kind.weakly_positive(), "{v:?} {p:?}");
    }

    #[test]
    fn corner_case_on_explicit_nest() {
        let z = Nest::explicit(Basis::Integer, &[0]).unwrap();
        let corner = OperatorExpr::chain(vec![
            OperatorExpr::cut(Cut::At(0)),
            OperatorExpr::Flip { center: 1, rule: SeqRule::constant(1.0) },
            OperatorExpr::cut_complement(Cut::At(0)),
        ]);
        let t = task(z.clone(), corner.clone(), corner);
        assert_eq!(mult_compact_decision(&t).unwrap().kind, MultKind::Zero);
        let t = task(z, OperatorExpr::cut(Cut::At(0)), OperatorExpr::cut_complement(Cut::At(0)));
        let v = mult_classify(&t).unwrap();
        assert_eq!(v.kind, MultKind::NotWeaklyCompact);
        assert_eq!(mult_weak_decision_2proj(&t).unwrap().kind, MultKind::NotWeaklyCompact);
    }

    #[test]
    fn quasitriangular_examples() {
        let basis = Basis::Natural;
        let h = Operator::new(harmonic(), basis).unwrap();
        let g = Operator::new(OperatorExpr::diag(SeqRule::geometric(0.5)), basis).unwrap();
        let i = Operator::identity(basis);
        assert_eq!(quasitriangular_decision(&h, &g), (Verdict::Compact, Verdict::Compact));
        assert_eq!(quasitriangular_decision(&i, &h), (Verdict::NonCompact, Verdict::Compact));
        assert_eq!(quasitriangular_decision(&i, &i), (Verdict::NonCompact, Verdict::NonCompact));
    }
}
