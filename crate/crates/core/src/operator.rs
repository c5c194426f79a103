//! Operators: a document together with its normal form over a basis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::OperatorExpr;
use crate::nest::{Basis, Cut, CutSet, Nest};
use crate::normal::NormalForm;
use crate::numerics::Window;
use crate::rule::{End, Extent, Rule};

/// Nonzero entries below this magnitude are treated as zero.
pub const ENTRY_TOL: f64 = 1e-13;
/// Longest inward scan when locating the exact end of a support.
const SUPPORT_SCAN: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    expr: OperatorExpr,
    nf: NormalForm,
}

impl Operator {
    pub fn new(expr: OperatorExpr, basis: Basis) -> Result<Operator> {
        let nf = expr.normal_form(basis)?;
        Ok(Operator { expr, nf })
    }

    pub fn parse(json: &str, basis: Basis) -> Result<Operator> {
        Operator::new(OperatorExpr::from_json(json)?, basis)
    }

    pub fn from_normal_form(nf: NormalForm) -> Operator {
        Operator { expr: OperatorExpr::from_normal_form(&nf), nf }
    }

    pub fn zero(basis: Basis) -> Operator {
        Operator { expr: OperatorExpr::Zero, nf: NormalForm::zero(basis) }
    }

    pub fn identity(basis: Basis) -> Operator {
        Operator { expr: OperatorExpr::Identity, nf: NormalForm::identity(basis) }
    }

    pub fn expr(&self) -> &OperatorExpr {
        &self.expr
    }

    pub fn nf(&self) -> &NormalForm {
        &self.nf
    }

    pub fn basis(&self) -> Basis {
        self.nf.basis()
    }

    pub fn is_zero(&self) -> bool {
        self.nf.is_zero()
    }

    pub fn canonical_expr(&self) -> OperatorExpr {
        OperatorExpr::from_normal_form(&self.nf)
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        Operator {
            expr: OperatorExpr::product(self.expr.clone(), other.expr.clone()),
            nf: self.nf.mul(&other.nf),
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator {
            expr: OperatorExpr::sum(self.expr.clone(), other.expr.clone()),
            nf: self.nf.add(&other.nf),
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Operator {
        Operator { expr: OperatorExpr::scale(c, self.expr.clone()), nf: self.nf.scale(c) }
    }

    pub fn adjoint(&self) -> Operator {
        Operator { expr: OperatorExpr::adjoint(self.expr.clone()), nf: self.nf.adjoint() }
    }

    /// `(P_{rows.1} − P_{rows.0}) · T · (P_{cols.1} − P_{cols.0})`.
    pub fn compress(&self, rows: (Cut, Cut), cols: (Cut, Cut)) -> Operator {
        let proj = |(lo, hi): (Cut, Cut)| OperatorExpr::interval(lo, hi);
        Operator {
            expr: OperatorExpr::chain(vec![proj(rows), self.expr.clone(), proj(cols)]),
            nf: self.nf.compress(rows, cols),
        }
    }

    /// `P T P` for the cut `p`.
    pub fn corner_below(&self, p: Cut) -> Operator {
        self.compress((Cut::NegInf, p), (Cut::NegInf, p))
    }

    /// `P^⊥ T P^⊥` for the cut `p`.
    pub fn corner_above(&self, p: Cut) -> Operator {
        self.compress((p, Cut::PosInf), (p, Cut::PosInf))
    }

    pub fn entry(&self, i: i64, j: i64) -> f64 {
        self.nf.entry(i, j)
    }

    /// Dense truncation to rows and columns in `window`.
    pub fn render(&self, window: Window, cap: usize) -> Result<DMatrix<f64>> {
        window.check(cap)?;
        Ok(render_nf(&self.nf, window))
    }

    pub fn norm_bound(&self) -> f64 {
        self.nf.norm_bound()
    }

    /// Exact ends of the set of nonzero columns.
    pub fn column_support(&self) -> Result<(Extent, Extent)> {
        support(&self.nf)
    }

    /// Exact ends of the set of nonzero rows.
    pub fn row_support(&self) -> Result<(Extent, Extent)> {
        support(&self.nf.adjoint())
    }
}

/// Canonical document of an expression over a basis.
pub fn canonicalize(expr: &OperatorExpr, basis: Basis) -> Result<OperatorExpr> {
    Ok(OperatorExpr::from_normal_form(&expr.normal_form(basis)?))
}

/// Dense truncation of an expression.
pub fn render_truncation(expr: &OperatorExpr, basis: Basis, window: Window, cap: usize) -> Result<DMatrix<f64>> {
    window.check(cap)?;
    Ok(render_nf(&expr.normal_form(basis)?, window))
}

pub fn render_nf(nf: &NormalForm, w: Window) -> DMatrix<f64> {
    let n = w.size();
    let mut m = DMatrix::zeros(n, n);
    let at = |i: i64| -> Option<usize> { (i >= w.lo && i <= w.hi).then(|| (i - w.lo) as usize) };
    for (&k, rule) in nf.bands() {
        for j in w.indices() {
            if let Some(r) = at(j + k) {
                m[(r, (j - w.lo) as usize)] += rule.eval(j);
            }
        }
    }
    for (&c, rule) in nf.flips() {
        for j in w.indices() {
            if let Some(r) = at(c - j) {
                m[(r, (j - w.lo) as usize)] += rule.eval(j);
            }
        }
    }
    for (e, f) in nf.rank_ones() {
        let ev: Vec<f64> = w.indices().map(|j| e.eval(j)).collect();
        let fv: Vec<f64> = w.indices().map(|i| f.eval(i)).collect();
        for (r, fi) in fv.iter().enumerate() {
            if *fi == 0.0 {
                continue;
            }
            for (c, ej) in ev.iter().enumerate() {
                m[(r, c)] += fi * ej;
            }
        }
    }
    for (&(i, j), &v) in nf.finite_entries() {
        if let (Some(r), Some(c)) = (at(i), at(j)) {
            m[(r, c)] += v;
        }
    }
    m
}

fn support(nf: &NormalForm) -> Result<(Extent, Extent)> {
    let (lo, hi) = nf.column_hull();
    if let (Some(l), Some(h)) = (lo, hi) {
        if l > h {
            return Ok((Extent::Empty, Extent::Empty));
        }
    }
    let nonzero = |j: i64| !nf.apply(&Rule::delta(j)).0.is_zero();
    let scan = |from: i64, step: i64, stop: Option<i64>| -> Result<Extent> {
        let mut j = from;
        for _ in 0..SUPPORT_SCAN {
            if nonzero(j) {
                return Ok(Extent::At(j));
            }
            if stop == Some(j) {
                return Ok(Extent::Empty);
            }
            j += step;
        }
        Err(Error::UnknownSupport(format!("no nonzero column within {SUPPORT_SCAN} steps of {from}")))
    };
    // an unbounded structural hull always comes from a rule that is nonzero on
    // an infinite stretch, so that side of the support is unbounded
    let min = match lo {
        None => Extent::Unbounded,
        Some(l) => scan(l, 1, hi)?,
    };
    if min == Extent::Empty {
        return Ok((Extent::Empty, Extent::Empty));
    }
    let max = match hi {
        None => Extent::Unbounded,
        Some(h) => scan(h, -1, lo)?,
    };
    Ok((min, max))
}

/// Witness of non-membership: a cut `c` and an entry `(row, col)` with
/// `row > c ≥ col` and nonzero value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryWitness {
    pub cut: Cut,
    pub row: i64,
    pub col: i64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Membership {
    Member,
    NonMember { witness: EntryWitness },
    Unknown,
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member)
    }
}

/// Indices where `r` is nonzero, taken near each end of its support.
fn candidate_indices(r: &Rule, count: usize) -> Vec<i64> {
    let mut out = Vec::new();
    let push_scan = |from: i64, step: i64, out: &mut Vec<i64>| {
        let mut j = from;
        let mut found = 0;
        for _ in 0..256 {
            if r.eval(j).abs() > ENTRY_TOL {
                out.push(j);
                found += 1;
                if found == count {
                    break;
                }
            }
            match j.checked_add(step) {
                Some(n) => j = n,
                None => break,
            }
        }
    };
    match r.support_min() {
        Extent::At(m) => push_scan(m, 1, &mut out),
        Extent::Unbounded => {
            for k in 0..31 {
                out.push(-(1i64 << k));
            }
        }
        Extent::Empty => return out,
    }
    match r.support_max() {
        Extent::At(m) => push_scan(m, -1, &mut out),
        Extent::Unbounded => {
            for k in 0..31 {
                out.push(1i64 << k);
            }
        }
        Extent::Empty => {}
    }
    out.extend(-16..=16);
    out.retain(|&j| r.eval(j).abs() > ENTRY_TOL);
    out.sort_unstable();
    out.dedup();
    out
}

/// Some nonzero entry of a normal form, located from its structure.
pub fn nonzero_entry(nf: &NormalForm) -> Option<(i64, i64, f64)> {
    nonzero_entry_where(nf, |_, _| true)
}

fn nonzero_entry_where(nf: &NormalForm, keep: impl Fn(i64, i64) -> bool) -> Option<(i64, i64, f64)> {
    let check = |i: i64, j: i64| -> Option<(i64, i64, f64)> {
        if !keep(i, j) {
            return None;
        }
        let v = nf.entry(i, j);
        (v.abs() > ENTRY_TOL).then_some((i, j, v))
    };
    for &(i, j) in nf.finite_entries().keys() {
        if let Some(w) = check(i, j) {
            return Some(w);
        }
    }
    for (&k, w) in nf.bands() {
        for j in candidate_indices(w, 8) {
            if let Some(x) = j.checked_add(k).and_then(|i| check(i, j)) {
                return Some(x);
            }
        }
    }
    for (&c, w) in nf.flips() {
        for j in candidate_indices(w, 8) {
            if let Some(x) = c.checked_sub(j).and_then(|i| check(i, j)) {
                return Some(x);
            }
        }
    }
    for (e, f) in nf.rank_ones() {
        let js = candidate_indices(e, 8);
        for i in candidate_indices(f, 8) {
            for &j in &js {
                if let Some(x) = check(i, j) {
                    return Some(x);
                }
            }
        }
    }
    None
}

/// Decides `T ∈ Alg N`, i.e. `P^⊥ T P = 0` for every cut `P`.
pub fn alg_membership(nest: &Nest, op: &Operator) -> Membership {
    let nf = op.nf();
    match nest.cut_set() {
        CutSet::Explicit(cuts) => {
            let mut unknown = false;
            for &c in cuts {
                let corner = nf.restrict((Some(c + 1), None), (None, Some(c)));
                if corner.is_zero() {
                    continue;
                }
                match nonzero_entry(&corner) {
                    Some((row, col, value)) => {
                        return Membership::NonMember {
                            witness: EntryWitness { cut: Cut::At(c), row, col, value },
                        }
                    }
                    None => unknown = true,
                }
            }
            if unknown {
                Membership::Unknown
            } else {
                Membership::Member
            }
        }
        CutSet::All => all_cuts_membership(nf),
    }
}

fn all_cuts_membership(nf: &NormalForm) -> Membership {
    let mut suspicious = nf.bands().keys().any(|&k| k > 0);
    for (&c, w) in nf.flips() {
        if !w.mask(None, Some((c - 1).div_euclid(2))).is_zero() {
            suspicious = true;
        }
    }
    for (e, f) in nf.rank_ones() {
        let below = match (e.support_min(), f.support_max()) {
            (Extent::At(a), Extent::At(b)) => a < b,
            (Extent::Empty, _) | (_, Extent::Empty) => false,
            _ => true,
        };
        suspicious |= below;
    }
    suspicious |= nf.finite_entries().keys().any(|&(i, j)| i > j);
    if !suspicious {
        return Membership::Member;
    }
    match nonzero_entry_where(nf, |i, j| i > j) {
        Some((row, col, value)) => Membership::NonMember {
            witness: EntryWitness { cut: Cut::At(col), row, col, value },
        },
        None => Membership::Unknown,
    }
}

/// Is `e ⊗ f` in `Alg N`? Returns a cut `N` with `e ⊥ N_-` and `f ∈ N`.
pub fn rank_one_membership(nest: &Nest, e: &Rule, f: &Rule) -> Option<Cut> {
    let first = nest.basis().first_index();
    let e = e.mask(first, None);
    let f = f.mask(first, None);
    if f.is_zero() {
        return Some(Cut::NegInf);
    }
    if e.is_zero() {
        return Some(Cut::PosInf);
    }
    let n = match f.support_max() {
        Extent::At(m) => nest.ceil_cut(m),
        _ => Cut::PosInf,
    };
    let pred = nest.pred(n).ok()?;
    let ok = match e.support_min() {
        Extent::At(m) => !pred.covers(m),
        _ => pred == Cut::NegInf,
    };
    ok.then_some(n)
}

/// `lim sup` of band/flip weights at one end; zero for compact operators.
pub fn tail_at(op: &Operator, end: End) -> f64 {
    op.nf().tail_at(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Direction;
    use crate::rule::SeqRule;

    fn nat(expr: OperatorExpr) -> Operator {
        Operator::new(expr, Basis::Natural).unwrap()
    }

    fn delta_rank_one(e: i64, f: i64) -> OperatorExpr {
        OperatorExpr::rank_one(SeqRule::delta(e), SeqRule::delta(f))
    }

    #[test]
    fn render_examples() {
        let w = Window::new(1, 4).unwrap();
        let d = nat(OperatorExpr::diag(SeqRule::harmonic())).render(w, 64).unwrap();
        for i in 0..4 {
            assert_eq!(d[(i, i)], 1.0 / (i + 1) as f64);
        }
        let id = nat(OperatorExpr::Identity).render(Window::new(1, 3).unwrap(), 64).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));
        let r = nat(delta_rank_one(2, 1)).render(Window::new(1, 2).unwrap(), 64).unwrap();
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let err = nat(OperatorExpr::Identity).render(Window::new(1, 100).unwrap(), 10).unwrap_err();
        assert!(matches!(err, Error::WindowTooLarge { .. }));
    }

    #[test]
    fn canonicalize_examples() {
        let disjoint = OperatorExpr::product(
            OperatorExpr::interval(Cut::At(0), Cut::PosInf),
            OperatorExpr::interval(Cut::NegInf, Cut::At(0)),
        );
        assert_eq!(canonicalize(&disjoint, Basis::Integer).unwrap(), OperatorExpr::Zero);
        let absorbed = OperatorExpr::product(OperatorExpr::diag(SeqRule::harmonic()), delta_rank_one(2, 1));
        assert_eq!(
            canonicalize(&absorbed, Basis::Natural).unwrap(),
            canonicalize(&delta_rank_one(2, 1), Basis::Natural).unwrap()
        );
        let adj = OperatorExpr::adjoint(delta_rank_one(2, 1));
        assert_eq!(
            canonicalize(&adj, Basis::Natural).unwrap(),
            canonicalize(&delta_rank_one(1, 2), Basis::Natural).unwrap()
        );
    }

    #[test]
    fn membership_examples() {
        let n = Nest::maximal_natural();
        let diag = nat(OperatorExpr::diag(SeqRule::harmonic()));
        assert_eq!(alg_membership(&n, &diag), Membership::Member);
        let lower = nat(OperatorExpr::shift(SeqRule::constant(1.0), Direction::Lower));
        assert_eq!(alg_membership(&n, &lower), Membership::Member);
        let raise = nat(OperatorExpr::shift(SeqRule::constant(1.0), Direction::Raise));
        match alg_membership(&n, &raise) {
            Membership::NonMember { witness } => {
                assert!(witness.row > witness.col);
                assert_eq!(raise.entry(witness.row, witness.col), witness.value);
            }
            other => panic!("{other:?}"),
        }
        let trivial = Nest::trivial(Basis::Natural);
        assert_eq!(alg_membership(&trivial, &raise), Membership::Member);
        let z = Nest::explicit(Basis::Integer, &[0]).unwrap();
        let corner = Operator::new(
            OperatorExpr::chain(vec![
                OperatorExpr::cut(Cut::At(0)),
                OperatorExpr::Flip { center: 1, rule: SeqRule::constant(1.0) },
                OperatorExpr::cut_complement(Cut::At(0)),
            ]),
            Basis::Integer,
        )
        .unwrap();
        assert_eq!(alg_membership(&z, &corner), Membership::Member);
        match alg_membership(&z, &corner.adjoint()) {
            Membership::NonMember { witness } => assert_eq!(witness.cut, Cut::At(0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_one_membership_examples() {
        let n = Nest::maximal_natural();
        assert_eq!(rank_one_membership(&n, &Rule::delta(2), &Rule::delta(1)), Some(Cut::At(1)));
        assert_eq!(rank_one_membership(&n, &Rule::delta(1), &Rule::delta(2)), None);
        let t = Nest::trivial(Basis::Natural);
        assert_eq!(
            rank_one_membership(&t, &Rule::harmonic(0), &Rule::geometric(0.5, 0)),
            Some(Cut::PosInf)
        );
    }

    #[test]
    fn supports_are_exact() {
        let r = nat(delta_rank_one(2, 1));
        assert_eq!(r.column_support().unwrap(), (Extent::At(2), Extent::At(2)));
        assert_eq!(r.row_support().unwrap(), (Extent::At(1), Extent::At(1)));
        let z = Operator::zero(Basis::Natural);
        assert_eq!(z.column_support().unwrap(), (Extent::Empty, Extent::Empty));
        let id = nat(OperatorExpr::Identity);
        assert_eq!(id.column_support().unwrap(), (Extent::At(1), Extent::Unbounded));
    }
}
