//! Normal form of grammar operators.
//!
//! Every operator is held as a finite sum of
//! * bands: `e_j ↦ w(j) e_{j+k}` (entry `(j+k, j)`),
//! * flips: `e_j ↦ w(j) e_{c−j}` (entry `(c−j, j)`),
//! * rank-ones `e ⊗ f : h ↦ ⟨h, e⟩ f` (entry `f_i e_j`),
//! * a finite sparse matrix.
//!
//! Sums, products, adjoints and compressions by cut projections stay inside
//! this class, so membership, supports and compactness are read off exactly.
//! Pieces with short bounded support are always expanded into the finite
//! part, so cancellation among them is exact.

use std::collections::BTreeMap;

use crate::nest::{Basis, Cut};
use crate::rule::{End, Extent, Rule, ZERO_TOL};

/// Rank-ones whose two vectors have at most this many support pairs are
/// expanded into the finite part.
const EXPAND_PAIRS: usize = 4096;

/// Closed index range, `None` meaning unbounded on that side.
pub type Range = (Option<i64>, Option<i64>);

#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    basis: Basis,
    bands: BTreeMap<i64, Rule>,
    flips: BTreeMap<i64, Rule>,
    rank_ones: Vec<(Rule, Rule)>,
    finite: BTreeMap<(i64, i64), f64>,
    err: f64,
}

/// Structural pieces of a normal form, for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Band(i64),
    Flip(i64),
    RankOne(usize),
    Finite,
}

impl NormalForm {
    pub fn zero(basis: Basis) -> NormalForm {
        NormalForm {
            basis,
            bands: BTreeMap::new(),
            flips: BTreeMap::new(),
            rank_ones: Vec::new(),
            finite: BTreeMap::new(),
            err: 0.0,
        }
    }

    pub fn identity(basis: Basis) -> NormalForm {
        NormalForm::band(basis, 0, Rule::constant(1.0))
    }

    pub fn diag(basis: Basis, w: Rule) -> NormalForm {
        NormalForm::band(basis, 0, w)
    }

    pub fn band(basis: Basis, offset: i64, w: Rule) -> NormalForm {
        let mut nf = NormalForm::zero(basis);
        nf.bands.insert(offset, w);
        nf.normalized()
    }

    pub fn flip(basis: Basis, center: i64, w: Rule) -> NormalForm {
        let mut nf = NormalForm::zero(basis);
        nf.flips.insert(center, w);
        nf.normalized()
    }

    /// `h ↦ ⟨h, e⟩ f`.
    pub fn rank_one(basis: Basis, e: Rule, f: Rule) -> NormalForm {
        let mut nf = NormalForm::zero(basis);
        nf.rank_ones.push((e, f));
        nf.normalized()
    }

    /// Sparse matrix keyed by `(row, col)`.
    pub fn finite(basis: Basis, entries: BTreeMap<(i64, i64), f64>) -> NormalForm {
        let mut nf = NormalForm::zero(basis);
        nf.finite = entries;
        nf.normalized()
    }

    /// `P_hi − P_lo`, the projection onto indices in `(lo, hi]`.
    pub fn interval(basis: Basis, lo: Cut, hi: Cut) -> NormalForm {
        if hi <= lo {
            return NormalForm::zero(basis);
        }
        let l = match lo {
            Cut::NegInf => None,
            Cut::At(c) => Some(c + 1),
            Cut::PosInf => return NormalForm::zero(basis),
        };
        let h = match hi {
            Cut::NegInf => return NormalForm::zero(basis),
            Cut::At(c) => Some(c),
            Cut::PosInf => None,
        };
        NormalForm::diag(basis, Rule::indicator(l, h))
    }

    /// Projection onto indices `≤ c`.
    pub fn cut(basis: Basis, c: Cut) -> NormalForm {
        NormalForm::interval(basis, Cut::NegInf, c)
    }

    /// Projection onto indices `> c`.
    pub fn cut_complement(basis: Basis, c: Cut) -> NormalForm {
        NormalForm::interval(basis, c, Cut::PosInf)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn bands(&self) -> &BTreeMap<i64, Rule> {
        &self.bands
    }

    pub fn flips(&self) -> &BTreeMap<i64, Rule> {
        &self.flips
    }

    pub fn rank_ones(&self) -> &[(Rule, Rule)] {
        &self.rank_ones
    }

    pub fn finite_entries(&self) -> &BTreeMap<(i64, i64), f64> {
        &self.finite
    }

    /// Accumulated absolute error from truncated inner products.
    pub fn error_bound(&self) -> f64 {
        self.err
    }

    pub fn is_zero(&self) -> bool {
        self.bands.is_empty() && self.flips.is_empty() && self.rank_ones.is_empty() && self.finite.is_empty()
    }

    fn basis_lo(&self) -> Option<i64> {
        match self.basis {
            Basis::Natural => Some(1),
            Basis::Integer => None,
        }
    }

    fn normalized(mut self) -> NormalForm {
        let first = self.basis_lo();
        let mut bands = BTreeMap::new();
        for (k, w) in std::mem::take(&mut self.bands) {
            let w = match first {
                Some(f) => w.mask(Some(f.max(f - k)), None),
                None => w,
            };
            if let Some(pts) = finite_support(&w) {
                for (j, v) in pts {
                    *self.finite.entry((j + k, j)).or_insert(0.0) += v;
                }
            } else if !w.is_zero() {
                bands.insert(k, w);
            }
        }
        self.bands = bands;
        let mut flips = BTreeMap::new();
        for (c, w) in std::mem::take(&mut self.flips) {
            let w = match first {
                Some(f) => w.mask(Some(f), Some(c - f)),
                None => w,
            };
            if let Some(pts) = finite_support(&w) {
                for (j, v) in pts {
                    *self.finite.entry((c - j, j)).or_insert(0.0) += v;
                }
            } else if !w.is_zero() {
                flips.insert(c, w);
            }
        }
        self.flips = flips;

        let mut ones: Vec<(Rule, Rule)> = Vec::new();
        for (e, f) in std::mem::take(&mut self.rank_ones) {
            let (e, f) = match first {
                Some(l) => (e.mask(Some(l), None), f.mask(Some(l), None)),
                None => (e, f),
            };
            if e.is_zero() || f.is_zero() {
                continue;
            }
            if let (Some(es), Some(fs)) = (finite_support(&e), finite_support(&f)) {
                if es.len() * fs.len() <= EXPAND_PAIRS {
                    for &(i, fv) in &fs {
                        for &(j, ev) in &es {
                            *self.finite.entry((i, j)).or_insert(0.0) += fv * ev;
                        }
                    }
                    continue;
                }
            }
            match ones.iter_mut().find(|(e2, _)| *e2 == e) {
                Some(slot) => slot.1 = slot.1.add(&f),
                None => ones.push((e, f)),
            }
        }
        let mut merged: Vec<(Rule, Rule)> = Vec::new();
        for (e, f) in ones {
            if f.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(_, f2)| *f2 == f) {
                Some(slot) => slot.0 = slot.0.add(&e),
                None => merged.push((e, f)),
            }
        }
        merged.retain(|(e, f)| !e.is_zero() && !f.is_zero());
        self.rank_ones = merged;

        self.finite.retain(|&(i, j), v| {
            v.abs() > ZERO_TOL && first.is_none_or(|f| i >= f && j >= f)
        });
        // entries lying on a band or flip belong to its weight
        let entries: Vec<((i64, i64), f64)> = self.finite.iter().map(|(&k, &v)| (k, v)).collect();
        for ((i, j), v) in entries {
            let target = if self.bands.contains_key(&(i - j)) {
                self.bands.get_mut(&(i - j))
            } else {
                self.flips.get_mut(&(i + j))
            };
            if let Some(w) = target {
                *w = w.add(&Rule::delta(j).scale(v));
                self.finite.remove(&(i, j));
            }
        }
        self.bands.retain(|_, w| !w.is_zero());
        self.flips.retain(|_, w| !w.is_zero());
        self
    }

    pub fn add(&self, other: &NormalForm) -> NormalForm {
        let mut out = self.clone();
        for (k, w) in &other.bands {
            let slot = out.bands.entry(*k).or_default();
            *slot = slot.add(w);
        }
        for (c, w) in &other.flips {
            let slot = out.flips.entry(*c).or_default();
            *slot = slot.add(w);
        }
        out.rank_ones.extend(other.rank_ones.iter().cloned());
        for (k, v) in &other.finite {
            *out.finite.entry(*k).or_insert(0.0) += v;
        }
        out.err += other.err;
        out.normalized()
    }

    pub fn sub(&self, other: &NormalForm) -> NormalForm {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> NormalForm {
        if c == 0.0 {
            return NormalForm::zero(self.basis);
        }
        NormalForm {
            basis: self.basis,
            bands: self.bands.iter().map(|(k, w)| (*k, w.scale(c))).collect(),
            flips: self.flips.iter().map(|(k, w)| (*k, w.scale(c))).collect(),
            rank_ones: self.rank_ones.iter().map(|(e, f)| (e.clone(), f.scale(c))).collect(),
            finite: self.finite.iter().map(|(k, v)| (*k, v * c)).collect(),
            err: self.err * c.abs(),
        }
        .normalized()
    }

    pub fn adjoint(&self) -> NormalForm {
        NormalForm {
            basis: self.basis,
            bands: self.bands.iter().map(|(&k, w)| (-k, w.shift(k))).collect(),
            flips: self.flips.iter().map(|(&c, w)| (c, w.reflect(c))).collect(),
            rank_ones: self.rank_ones.iter().map(|(e, f)| (f.clone(), e.clone())).collect(),
            finite: self.finite.iter().map(|(&(i, j), &v)| ((j, i), v)).collect(),
            err: self.err,
        }
        .normalized()
    }

    /// `T g` together with an absolute ℓ² error bound.
    pub fn apply(&self, g: &Rule) -> (Rule, f64) {
        let mut out = Rule::zero();
        let mut err = 0.0;
        for (&k, w) in &self.bands {
            out = out.add(&w.mul(g).shift(k));
        }
        for (&c, w) in &self.flips {
            out = out.add(&w.mul(g).reflect(c));
        }
        for (e, f) in &self.rank_ones {
            let (ip, ip_err) = g.inner(e);
            out = out.add(&f.scale(ip));
            if ip_err > 0.0 {
                err += ip_err * f.l2_norm_bounds(None, None).1;
            }
        }
        let mut table: BTreeMap<i64, f64> = BTreeMap::new();
        for (&(i, j), &v) in &self.finite {
            let gj = g.eval(j);
            if gj != 0.0 {
                *table.entry(i).or_insert(0.0) += v * gj;
            }
        }
        out = out.add(&Rule::from_table(table));
        if let Some(l) = self.basis_lo() {
            out = out.mask(Some(l), None);
        }
        (out, err + self.err * g.l2_norm_bounds(None, None).1)
    }

    /// Product `self · other`.
    pub fn mul(&self, other: &NormalForm) -> NormalForm {
        let basis = self.basis;
        let mut out = NormalForm::zero(basis);
        out.err = self.err * other.norm_bound() + other.err * self.norm_bound();

        // banded and flipped parts
        for (&k, w) in &self.bands {
            for (&m, v) in &other.bands {
                add_rule(&mut out.bands, k + m, v.mul(&w.shift(-m)));
            }
            for (&c, v) in &other.flips {
                add_rule(&mut out.flips, c + k, v.mul(&w.reflect(c)));
            }
        }
        for (&c, w) in &self.flips {
            for (&m, v) in &other.bands {
                add_rule(&mut out.flips, c - m, v.mul(&w.shift(-m)));
            }
            for (&d, v) in &other.flips {
                add_rule(&mut out.bands, c - d, v.mul(&w.reflect(d)));
            }
        }

        // finite parts against banded and flipped parts
        let mut fin: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for (&(i, l), &x) in &self.finite {
            for (&m, v) in &other.bands {
                let j = l - m;
                add_entry(&mut fin, (i, j), x * v.eval(j));
            }
            for (&d, v) in &other.flips {
                let j = d - l;
                add_entry(&mut fin, (i, j), x * v.eval(j));
            }
            for (&(l2, j), &y) in other.finite.range((l, i64::MIN)..=(l, i64::MAX)) {
                debug_assert_eq!(l2, l);
                add_entry(&mut fin, (i, j), x * y);
            }
        }
        for (&(l, j), &y) in &other.finite {
            for (&k, w) in &self.bands {
                add_entry(&mut fin, (l + k, j), w.eval(l) * y);
            }
            for (&c, w) in &self.flips {
                add_entry(&mut fin, (c - l, j), w.eval(l) * y);
            }
        }
        out.finite = fin;

        // rank-one parts: X·(e⊗f) = e⊗(Xf) and (e⊗f)·Y = (Y*e)⊗f
        for (e, f) in &other.rank_ones {
            let (xf, err) = self.apply(f);
            out.err += err * e.l2_norm_bounds(None, None).1;
            out.rank_ones.push((e.clone(), xf));
        }
        if !self.rank_ones.is_empty() {
            let mut rest = other.clone();
            rest.rank_ones.clear();
            let rest_adj = rest.adjoint();
            for (e, f) in &self.rank_ones {
                let (ye, err) = rest_adj.apply(e);
                out.err += err * f.l2_norm_bounds(None, None).1;
                out.rank_ones.push((ye, f.clone()));
            }
        }
        out.normalized()
    }

    /// Compression `P_rows · T · P_cols` by coordinate projections.
    pub fn restrict(&self, rows: Range, cols: Range) -> NormalForm {
        let (rl, rh) = rows;
        let (cl, ch) = cols;
        let mut out = NormalForm::zero(self.basis);
        out.err = self.err;
        for (&k, w) in &self.bands {
            // column j with j+k in rows
            let lo = max_opt(cl, rl.map(|r| r.saturating_sub(k)));
            let hi = min_opt(ch, rh.map(|r| r.saturating_sub(k)));
            out.bands.insert(k, w.mask(lo, hi));
        }
        for (&c, w) in &self.flips {
            // column j with c−j in rows
            let lo = max_opt(cl, rh.map(|r| c.saturating_sub(r)));
            let hi = min_opt(ch, rl.map(|r| c.saturating_sub(r)));
            out.flips.insert(c, w.mask(lo, hi));
        }
        for (e, f) in &self.rank_ones {
            out.rank_ones.push((e.mask(cl, ch), f.mask(rl, rh)));
        }
        out.finite = self
            .finite
            .iter()
            .filter(|(&(i, j), _)| in_range(i, rows) && in_range(j, cols))
            .map(|(k, v)| (*k, *v))
            .collect();
        out.normalized()
    }

    /// Compression by cut projections: `rows` and `cols` are intervals `(lo, hi]` of cuts.
    pub fn compress(&self, rows: (Cut, Cut), cols: (Cut, Cut)) -> NormalForm {
        if rows.1 <= rows.0 || cols.1 <= cols.0 {
            return NormalForm::zero(self.basis);
        }
        self.restrict(cut_range(rows), cut_range(cols))
    }

    pub fn entry(&self, i: i64, j: i64) -> f64 {
        let mut v = self.finite.get(&(i, j)).copied().unwrap_or(0.0);
        if let Some(w) = i.checked_sub(j).and_then(|k| self.bands.get(&k)) {
            v += w.eval(j);
        }
        if let Some(w) = i.checked_add(j).and_then(|c| self.flips.get(&c)) {
            v += w.eval(j);
        }
        for (e, f) in &self.rank_ones {
            v += f.eval(i) * e.eval(j);
        }
        v
    }

    /// Column `T δ_j`.
    pub fn column(&self, j: i64) -> Rule {
        self.apply(&Rule::delta(j)).0
    }

    /// Row `T* δ_i`.
    pub fn row(&self, i: i64) -> Rule {
        self.adjoint().apply(&Rule::delta(i)).0
    }

    /// Upper bound of the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let bands: f64 = self.bands.values().map(|w| w.sup_bound()).sum();
        let flips: f64 = self.flips.values().map(|w| w.sup_bound()).sum();
        let ones: f64 = self
            .rank_ones
            .iter()
            .map(|(e, f)| e.l2_norm_bounds(None, None).1 * f.l2_norm_bounds(None, None).1)
            .sum();
        let fro = self.finite.values().map(|v| v * v).sum::<f64>().sqrt();
        bands + flips + ones + fro + self.err
    }

    /// Column indices that can carry nonzero entries, as a hull.
    pub fn column_hull(&self) -> Range {
        let mut hull = Hull::default();
        for w in self.bands.values().chain(self.flips.values()) {
            hull.add(w.hull());
        }
        for (e, _) in &self.rank_ones {
            hull.add(e.hull());
        }
        for &(_, j) in self.finite.keys() {
            hull.add((Some(j), Some(j)));
        }
        hull.get()
    }

    /// Row indices that can carry nonzero entries, as a hull.
    pub fn row_hull(&self) -> Range {
        self.adjoint().column_hull()
    }

    /// `lim sup` of band and flip weights at one end of the column index.
    pub fn tail_at(&self, end: End) -> f64 {
        self.bands
            .values()
            .chain(self.flips.values())
            .map(|w| w.limsup_abs(end))
            .fold(0.0, f64::max)
    }

    /// Essential-norm lower bound: largest tail limit of any band or flip.
    pub fn tail_limsup(&self) -> f64 {
        self.tail_at(End::Plus).max(self.tail_at(End::Minus))
    }

    /// The band or flip carrying the largest tail, with its end.
    pub fn dominant_tail(&self) -> Option<(Piece, End, f64)> {
        let mut best: Option<(Piece, End, f64)> = None;
        let mut consider = |p: Piece, w: &Rule| {
            for end in [End::Plus, End::Minus] {
                let t = w.limsup_abs(end);
                if t > 0.0 && best.is_none_or(|b| t > b.2) {
                    best = Some((p, end, t));
                }
            }
        };
        for (&k, w) in &self.bands {
            consider(Piece::Band(k), w);
        }
        for (&c, w) in &self.flips {
            consider(Piece::Flip(c), w);
        }
        best
    }

    /// Weight rule of a band or flip piece.
    pub fn piece_rule(&self, p: Piece) -> Option<&Rule> {
        match p {
            Piece::Band(k) => self.bands.get(&k),
            Piece::Flip(c) => self.flips.get(&c),
            _ => None,
        }
    }
}

fn add_rule(map: &mut BTreeMap<i64, Rule>, key: i64, r: Rule) {
    if r.is_zero() {
        return;
    }
    let slot = map.entry(key).or_default();
    *slot = slot.add(&r);
}

fn add_entry(map: &mut BTreeMap<(i64, i64), f64>, key: (i64, i64), v: f64) {
    if v != 0.0 {
        *map.entry(key).or_insert(0.0) += v;
    }
}

fn finite_support(r: &Rule) -> Option<Vec<(i64, f64)>> {
    match r.hull() {
        (Some(l), Some(h)) if h - l < EXPAND_PAIRS as i64 => {
            Some((l..=h).map(|i| (i, r.eval(i))).filter(|(_, v)| *v != 0.0).collect())
        }
        _ => None,
    }
}

pub(crate) fn max_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    }
}

pub(crate) fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

pub(crate) fn in_range(i: i64, r: Range) -> bool {
    r.0.is_none_or(|l| i >= l) && r.1.is_none_or(|h| i <= h)
}

/// Index range of `(lo, hi]` for cuts.
pub fn cut_range((lo, hi): (Cut, Cut)) -> Range {
    let l = match lo {
        Cut::NegInf => None,
        Cut::At(c) => Some(c + 1),
        Cut::PosInf => Some(i64::MAX),
    };
    let h = match hi {
        Cut::NegInf => Some(i64::MIN),
        Cut::At(c) => Some(c),
        Cut::PosInf => None,
    };
    (l, h)
}

#[derive(Default)]
struct Hull {
    seen: bool,
    lo: Option<i64>,
    hi: Option<i64>,
}

impl Hull {
    fn add(&mut self, (l, h): Range) {
        if let (Some(a), Some(b)) = (l, h) {
            if a > b {
                return;
            }
        }
        if !self.seen {
            self.seen = true;
            self.lo = l;
            self.hi = h;
        } else {
            self.lo = self.lo.zip(l).map(|(a, b)| a.min(b));
            self.hi = self.hi.zip(h).map(|(a, b)| a.max(b));
        }
    }

    fn get(&self) -> Range {
        if self.seen {
            (self.lo, self.hi)
        } else {
            (Some(0), Some(-1))
        }
    }
}

/// Support extent helper shared by callers that need exact ends.
pub fn extent_to_option(e: Extent) -> Option<Option<i64>> {
    match e {
        Extent::Empty => None,
        Extent::Unbounded => Some(None),
        Extent::At(i) => Some(Some(i)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(nf: &NormalForm, lo: i64, hi: i64) -> Vec<Vec<f64>> {
        (lo..=hi).map(|i| (lo..=hi).map(|j| nf.entry(i, j)).collect()).collect()
    }

    fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|m| a[i][m] * b[m][j]).sum()).collect())
            .collect()
    }

    fn samples(basis: Basis) -> Vec<NormalForm> {
        vec![
            NormalForm::identity(basis),
            NormalForm::diag(basis, Rule::harmonic(0)),
            NormalForm::band(basis, 1, Rule::constant(1.0)),
            NormalForm::band(basis, -2, Rule::geometric(0.5, 3)),
            NormalForm::flip(basis, 3, Rule::constant(1.0)),
            NormalForm::rank_one(basis, Rule::delta(2), Rule::delta(1)),
            NormalForm::rank_one(basis, Rule::geometric(0.5, 1), Rule::harmonic(0).mask(Some(1), None)),
            NormalForm::finite(basis, BTreeMap::from([((1, 3), 2.0), ((2, 2), -1.0)])),
            NormalForm::interval(basis, Cut::At(2), Cut::At(5)),
        ]
    }

    #[test]
    fn products_match_dense_on_inner_windows() {
        for basis in [Basis::Natural, Basis::Integer] {
            let s = samples(basis);
            for x in &s {
                for y in &s {
                    let p = x.mul(y);
                    // supports of the factors stay within a few indices of the window
                    // interior, so compare on an inner block of a larger window
                    let (lo, hi) = if basis == Basis::Natural { (1, 40) } else { (-30, 30) };
                    let dx = dense(x, lo, hi);
                    let dy = dense(y, lo, hi);
                    let d = dense_mul(&dx, &dy);
                    let dp = dense(&p, lo, hi);
                    let inner = if basis == Basis::Natural { 0..20 } else { 15..45 };
                    for i in inner.clone() {
                        for j in inner.clone() {
                            assert!(
                                (d[i][j] - dp[i][j]).abs() < 1e-9,
                                "{basis:?} entry {i},{j}: {} vs {}",
                                d[i][j],
                                dp[i][j]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn adjoint_is_transpose_and_involution() {
        for basis in [Basis::Natural, Basis::Integer] {
            for x in samples(basis) {
                let a = x.adjoint();
                for i in -5..10 {
                    for j in -5..10 {
                        assert!((a.entry(i, j) - x.entry(j, i)).abs() < 1e-12);
                    }
                }
                assert_eq!(a.adjoint(), x);
            }
        }
    }

    #[test]
    fn natural_basis_masks_outside_entries() {
        let s = NormalForm::band(Basis::Natural, -1, Rule::constant(1.0));
        assert_eq!(s.entry(0, 1), 0.0);
        assert_eq!(s.entry(1, 2), 1.0);
        let disjoint = NormalForm::interval(Basis::Integer, Cut::At(0), Cut::PosInf)
            .mul(&NormalForm::interval(Basis::Integer, Cut::NegInf, Cut::At(0)));
        assert!(disjoint.is_zero());
    }

    #[test]
    fn rank_one_absorbs_diagonal() {
        let b = NormalForm::diag(Basis::Natural, Rule::harmonic(0));
        let r = NormalForm::rank_one(Basis::Natural, Rule::delta(2), Rule::delta(1));
        assert_eq!(b.mul(&r), r);
        assert_eq!(r.adjoint().entry(2, 1), 1.0);
    }

    #[test]
    fn tails_and_restriction() {
        let i = NormalForm::identity(Basis::Natural);
        assert_eq!(i.tail_limsup(), 1.0);
        let p = i.compress((Cut::NegInf, Cut::At(7)), (Cut::NegInf, Cut::At(7)));
        assert_eq!(p.tail_limsup(), 0.0);
        assert_eq!(p.column_hull(), (Some(1), Some(7)));
    }
}
