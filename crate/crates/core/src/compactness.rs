//! Compactness of grammar operators and the boundary projections of a pair.
//!
//! Bands and flips are the only pieces that can fail to be compact, and their
//! diagonal and anti-diagonal extractions are contractions that preserve
//! compactness. An operator is therefore compact exactly when every band and
//! flip weight vanishes at both ends, and the largest tail limit is a lower
//! bound for the essential norm.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nest::{Basis, Cut, CutSet, Nest};
use crate::normal::{NormalForm, Piece, Range};
use crate::numerics::{op_norm, singular_values, NormInterval, Window};
use crate::operator::Operator;
use crate::rule::{End, Extent};

/// Largest dense block rendered for norm lower bounds.
const NORM_WINDOW: i64 = 256;
/// Level below which `σ_k` counts as decay evidence.
pub const DECAY_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Compact,
    NonCompact,
    Unknown,
}

/// Basis vectors along which a noncompact piece stays large.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFamily {
    /// `"band"` or `"flip"`.
    pub piece: String,
    /// Band offset or flip center.
    pub offset: i64,
    pub end: End,
    /// Restrict to indices of this parity, if set.
    pub parity: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Finite-rank part plus pieces whose weights vanish at infinity.
    Compact { finite_rank: usize, decaying_pieces: usize, norm_bound: f64 },
    /// `lim sup` of `‖T e_j‖` along `family` is at least `delta`.
    NonCompact { delta: f64, family: IndexFamily },
    Unknown { evidence: Option<Evidence> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactVerdict {
    pub verdict: Verdict,
    pub certificate: Certificate,
}

impl CompactVerdict {
    pub fn is_compact(&self) -> bool {
        self.verdict == Verdict::Compact
    }

    pub fn delta(&self) -> Option<f64> {
        match &self.certificate {
            Certificate::NonCompact { delta, .. } => Some(*delta),
            _ => None,
        }
    }
}

/// Exact classification of a normal form.
pub fn classify_nf(nf: &NormalForm) -> CompactVerdict {
    match nf.dominant_tail() {
        None => CompactVerdict {
            verdict: Verdict::Compact,
            certificate: Certificate::Compact {
                finite_rank: nf.rank_ones().len() + nf.finite_entries().len(),
                decaying_pieces: nf.bands().len() + nf.flips().len(),
                norm_bound: nf.norm_bound(),
            },
        },
        Some((piece, end, delta)) => {
            let rule = nf.piece_rule(piece).expect("dominant piece exists");
            let (even, odd) = rule.tail(end);
            let parity = if (even.abs() - odd.abs()).abs() <= 1e-12 {
                None
            } else {
                rule.plateau_parity(end)
            };
            let (name, offset) = match piece {
                Piece::Band(k) => ("band", k),
                Piece::Flip(c) => ("flip", c),
                _ => unreachable!("only bands and flips carry tails"),
            };
            CompactVerdict {
                verdict: Verdict::NonCompact,
                certificate: Certificate::NonCompact {
                    delta,
                    family: IndexFamily { piece: name.into(), offset, end, parity },
                },
            }
        }
    }
}

pub fn classify_compact(op: &Operator) -> CompactVerdict {
    classify_nf(op.nf())
}

/// The four boundary projections of a pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryProjections {
    pub r_a: Cut,
    pub q_b: Cut,
    pub u_a: Cut,
    pub l_b: Cut,
    /// Whether `U_a a U_a` itself is compact (false when `U_a` is only a limit).
    pub u_attained: bool,
    /// Whether `L_b^⊥ b L_b^⊥` itself is compact.
    pub l_attained: bool,
}

/// `R_a = ∨{P : aP = 0}` and `Q_b = ∧{P : P^⊥ b = 0}`.
pub fn boundary_rq(nest: &Nest, a: &Operator, b: &Operator) -> Result<(Cut, Cut)> {
    let r_a = match a.column_support()?.0 {
        Extent::Empty => Cut::PosInf,
        Extent::Unbounded => Cut::NegInf,
        Extent::At(j) => nest.floor_cut(j - 1),
    };
    let q_b = match b.row_support()?.1 {
        Extent::Empty => Cut::NegInf,
        Extent::Unbounded => Cut::PosInf,
        Extent::At(i) => nest.ceil_cut(i),
    };
    Ok((r_a, q_b))
}

/// Is `P a P` compact?
pub fn compact_below(a: &Operator, p: Cut) -> bool {
    classify_nf(&a.nf().compress((Cut::NegInf, p), (Cut::NegInf, p))).is_compact()
}

/// Is `P^⊥ b P^⊥` compact?
pub fn compact_above(b: &Operator, p: Cut) -> bool {
    classify_nf(&b.nf().compress((p, Cut::PosInf), (p, Cut::PosInf))).is_compact()
}

/// A finite cut standing for every finite cut of an all-integer nest: the
/// compactness of the compressions above does not depend on which one.
pub fn representative_cut(basis: Basis) -> Cut {
    match basis {
        Basis::Natural => Cut::At(1),
        Basis::Integer => Cut::At(0),
    }
}

/// `U_a` with its attainment flag.
pub fn boundary_u(nest: &Nest, a: &Operator) -> (Cut, bool) {
    match nest.cut_set() {
        CutSet::All => {
            if compact_below(a, Cut::PosInf) {
                (Cut::PosInf, true)
            } else if compact_below(a, representative_cut(nest.basis())) {
                (Cut::PosInf, false)
            } else {
                (Cut::NegInf, true)
            }
        }
        CutSet::Explicit(v) => {
            let mut best = Cut::NegInf;
            for c in v.iter().map(|&c| Cut::At(c)).chain([Cut::PosInf]) {
                if compact_below(a, c) {
                    best = c;
                } else {
                    break;
                }
            }
            (best, true)
        }
    }
}

/// `L_b` with its attainment flag.
pub fn boundary_l(nest: &Nest, b: &Operator) -> (Cut, bool) {
    match nest.cut_set() {
        CutSet::All => {
            if compact_above(b, Cut::NegInf) {
                (Cut::NegInf, true)
            } else if compact_above(b, representative_cut(nest.basis())) {
                (Cut::NegInf, false)
            } else {
                (Cut::PosInf, true)
            }
        }
        CutSet::Explicit(v) => {
            let mut best = Cut::PosInf;
            for c in [Cut::NegInf].into_iter().chain(v.iter().map(|&c| Cut::At(c))).rev() {
                if compact_above(b, c) {
                    best = c;
                } else {
                    break;
                }
            }
            (best, true)
        }
    }
}

pub fn boundary_ul(nest: &Nest, a: &Operator, b: &Operator) -> (Cut, Cut, bool, bool) {
    let (u, ua) = boundary_u(nest, a);
    let (l, la) = boundary_l(nest, b);
    (u, l, ua, la)
}

pub fn boundaries(nest: &Nest, a: &Operator, b: &Operator) -> Result<BoundaryProjections> {
    let (r_a, q_b) = boundary_rq(nest, a, b)?;
    let (u_a, l_b, u_attained, l_attained) = boundary_ul(nest, a, b);
    Ok(BoundaryProjections { r_a, q_b, u_a, l_b, u_attained, l_attained })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `‖T (P − S)‖` with `S < P`.
    Right,
    /// `‖(S − P) T‖` with `P < S`.
    Left,
}

/// Certified bracket for `‖T (P − S)‖` (right) or `‖(S − P) T‖` (left).
pub fn tail_norm(t: &Operator, s: Cut, side: Side, p: Cut) -> NormInterval {
    let nf = match side {
        Side::Right => t.nf().compress((Cut::NegInf, Cut::PosInf), (s, p)),
        Side::Left => t.nf().compress((p, s), (Cut::NegInf, Cut::PosInf)),
    };
    norm_interval(&nf)
}

/// Certified norm bracket for a normal form: a dense block gives the lower
/// end; the upper end is the smaller of the structural bound and the block
/// norm plus the structural bound of the remainder.
pub fn norm_interval(nf: &NormalForm) -> NormInterval {
    norm_interval_with(nf, NORM_WINDOW)
}

/// [`norm_interval`] with a dense block of at most `size × size` entries.
pub fn norm_interval_with(nf: &NormalForm, size: i64) -> NormInterval {
    if nf.is_zero() {
        return NormInterval::zero();
    }
    let rows = block(nf.row_hull(), size);
    let cols = block(nf.column_hull(), size);
    let m = render_rect(nf, rows, cols);
    let dense = op_norm(&m);
    let structural = nf.norm_bound();
    let window_part = nf.restrict((Some(rows.lo), Some(rows.hi)), (Some(cols.lo), Some(cols.hi)));
    let rest = nf.sub(&window_part);
    let split = dense.hi + nf.error_bound() + if rest.is_zero() { 0.0 } else { rest.norm_bound() };
    // the essential norm is at least every band and flip tail
    let lo = (dense.lo - nf.error_bound()).max(nf.tail_limsup()).max(0.0);
    NormInterval::new(lo, structural.min(split).max(lo))
}

fn block((lo, hi): Range, size: i64) -> Window {
    match (lo, hi) {
        (Some(l), Some(h)) => Window { lo: l, hi: h.min(l + size - 1) },
        (Some(l), None) => Window { lo: l, hi: l + size - 1 },
        (None, Some(h)) => Window { lo: h - size + 1, hi: h },
        (None, None) => Window { lo: -size / 2, hi: size / 2 - 1 },
    }
}

/// Dense block with the given row and column windows.
pub fn render_rect(nf: &NormalForm, rows: Window, cols: Window) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.size(), cols.size());
    for (r, i) in rows.indices().enumerate() {
        for (c, j) in cols.indices().enumerate() {
            m[(r, c)] = nf.entry(i, j);
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    Decay,
    Plateau,
}

/// Singular-value evidence across growing truncations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub sigma_k: Vec<f64>,
    pub windows: Vec<usize>,
    pub evidence: EvidenceKind,
    pub level: f64,
}

/// `σ_k` of the truncations to the default windows of the given sizes.
pub fn ess_norm_proxy(t: &Operator, windows: &[usize], k: usize) -> Evidence {
    let sigma_k: Vec<f64> = windows
        .iter()
        .map(|&n| {
            let (lo, hi) = t.basis().window(n);
            let m = crate::operator::render_nf(t.nf(), Window { lo, hi });
            singular_values(&m, k.max(1))[k.max(1) - 1]
        })
        .collect();
    let last = sigma_k.last().copied().unwrap_or(0.0);
    let level = sigma_k.iter().copied().fold(f64::INFINITY, f64::min).min(last);
    let evidence = if last <= DECAY_LEVEL { EvidenceKind::Decay } else { EvidenceKind::Plateau };
    let level = if evidence == EvidenceKind::Decay { last } else { level };
    Evidence { sigma_k, windows: windows.to_vec(), evidence, level }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Direction, OperatorExpr};
    use crate::rule::SeqRule;

    fn op(basis: Basis, e: OperatorExpr) -> Operator {
        Operator::new(e, basis).unwrap()
    }

    fn harmonic() -> OperatorExpr {
        OperatorExpr::diag(SeqRule::harmonic())
    }

    #[test]
    fn classification_examples() {
        assert!(classify_compact(&op(Basis::Natural, harmonic())).is_compact());
        let id = classify_compact(&op(Basis::Natural, OperatorExpr::Identity));
        assert_eq!(id.verdict, Verdict::NonCompact);
        assert_eq!(id.delta(), Some(1.0));
        // 1 on i ≤ 0 and 1/i on i > 0: noncompact with the full tail limit 1 at −∞
        let rule = SeqRule::Sum {
            terms: vec![
                SeqRule::indicator(None, Some(0)),
                SeqRule::Product { factors: vec![SeqRule::indicator(Some(1), None), SeqRule::harmonic()] },
            ],
        };
        let v = classify_compact(&op(Basis::Integer, OperatorExpr::diag(rule)));
        assert_eq!(v.delta(), Some(1.0));
        match v.certificate {
            Certificate::NonCompact { family, .. } => assert_eq!(family.end, End::Minus),
            _ => unreachable!(),
        }
        let shift = op(Basis::Natural, OperatorExpr::shift(SeqRule::geometric(0.5), Direction::Raise));
        assert!(classify_compact(&shift).is_compact());
    }

    #[test]
    fn boundary_rq_examples() {
        let n = Nest::maximal_natural();
        let r = op(Basis::Natural, OperatorExpr::rank_one(SeqRule::delta(2), SeqRule::delta(1)));
        assert_eq!(boundary_rq(&n, &r, &r).unwrap(), (Cut::At(1), Cut::At(1)));
        let z = Operator::zero(Basis::Natural);
        assert_eq!(boundary_rq(&n, &z, &z).unwrap(), (Cut::PosInf, Cut::NegInf));
    }

    #[test]
    fn boundary_ul_examples() {
        let n = Nest::maximal_natural();
        let id = Operator::identity(Basis::Natural);
        assert_eq!(boundary_u(&n, &id), (Cut::PosInf, false));
        assert_eq!(boundary_l(&n, &id), (Cut::PosInf, true));
        let z = Nest::explicit(Basis::Integer, &[0]).unwrap();
        let corner = op(
            Basis::Integer,
            OperatorExpr::chain(vec![
                OperatorExpr::cut(Cut::At(0)),
                OperatorExpr::Flip { center: 1, rule: SeqRule::constant(1.0) },
                OperatorExpr::cut_complement(Cut::At(0)),
            ]),
        );
        assert_eq!(boundary_u(&z, &corner), (Cut::At(0), true));
        assert_eq!(boundary_l(&z, &corner), (Cut::At(0), true));
    }

    #[test]
    fn tail_norm_examples() {
        let a = op(Basis::Natural, harmonic());
        let t = tail_norm(&a, Cut::At(4), Side::Right, Cut::PosInf);
        assert!(t.lo >= 0.2 - 1e-9 && t.hi <= 0.2 + 1e-12, "{t:?}");
        let z = Operator::zero(Basis::Natural);
        assert_eq!(tail_norm(&z, Cut::At(4), Side::Right, Cut::PosInf), NormInterval::zero());
        let id = Operator::identity(Basis::Natural);
        let t = tail_norm(&id, Cut::At(3), Side::Right, Cut::At(7));
        assert!(t.lo >= 1.0 - 1e-9 && t.hi <= 1.0 + 1e-9, "{t:?}");
    }

    #[test]
    fn evidence_examples() {
        let h = op(Basis::Natural, harmonic());
        let ev = ess_norm_proxy(&h, &[64, 256], 10);
        for s in &ev.sigma_k {
            assert!((s - 0.1).abs() < 1e-12);
        }
        let id = ess_norm_proxy(&Operator::identity(Basis::Natural), &[64, 256], 10);
        assert_eq!(id.evidence, EvidenceKind::Plateau);
        assert!((id.level - 1.0).abs() < 1e-12);
        let r = op(Basis::Natural, OperatorExpr::rank_one(SeqRule::delta(1), SeqRule::delta(1)));
        let ev = ess_norm_proxy(&r, &[64, 256], 2);
        assert!(ev.sigma_k.iter().all(|&s| s == 0.0));
        assert_eq!(ev.evidence, EvidenceKind::Decay);
    }
}
