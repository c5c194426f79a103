//! Coefficient sequences indexed by ℤ.
//!
//! [`SeqRule`] is the document form. [`Rule`] is the canonical form used for
//! all computation: a finite table plus a sum of terms
//! `coeff · 1_[lo,hi] · 1_{i ≡ p mod 2} · Π 1/|i−s| · Π r^{|i−s|}`.
//! Terms are split on the common breakpoints of their indicator intervals and
//! merged, so structural cancellation is exact and the support hull, the
//! limits at ±∞ and the decay envelope can be read off directly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients at or below this magnitude are treated as zero.
pub const ZERO_TOL: f64 = 1e-13;
/// Bounded terms at most this wide are folded into the finite table.
const FINITE_WIDTH: i64 = 4096;
/// Number of indices evaluated exactly before falling back to envelopes.
const EXACT_SCAN: i64 = 4096;
/// Half-width of the window used for inner products of infinite sequences.
const INNER_WINDOW: i64 = 1 << 15;

/// Document form of a coefficient sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqRule {
    Const { value: f64 },
    /// `1/|i − center|`, and 0 at `i = center`.
    Harmonic {
        #[serde(default)]
        center: i64,
    },
    /// `ratio^{|i − center|}` with `|ratio| < 1`.
    Geometric {
        ratio: f64,
        #[serde(default)]
        center: i64,
    },
    Finite {
        #[serde(with = "table_keys")]
        table: BTreeMap<i64, f64>,
    },
    /// 1 on `[lo, hi]` (missing bound = unbounded).
    Indicator {
        #[serde(default)]
        lo: Option<i64>,
        #[serde(default)]
        hi: Option<i64>,
    },
    /// `rule(i − by)`.
    Shift { by: i64, rule: Box<SeqRule> },
    Scale { factor: f64, rule: Box<SeqRule> },
    Sum { terms: Vec<SeqRule> },
    Product { factors: Vec<SeqRule> },
    /// `even(i)` on even indices, `odd(i)` on odd ones.
    Parity { even: Box<SeqRule>, odd: Box<SeqRule> },
    /// `rule(center − i)`.
    Reflect { center: i64, rule: Box<SeqRule> },
}

impl SeqRule {
    pub fn constant(value: f64) -> SeqRule {
        SeqRule::Const { value }
    }

    pub fn harmonic() -> SeqRule {
        SeqRule::Harmonic { center: 0 }
    }

    pub fn geometric(ratio: f64) -> SeqRule {
        SeqRule::Geometric { ratio, center: 0 }
    }

    pub fn delta(i: i64) -> SeqRule {
        SeqRule::Finite { table: BTreeMap::from([(i, 1.0)]) }
    }

    pub fn indicator(lo: Option<i64>, hi: Option<i64>) -> SeqRule {
        SeqRule::Indicator { lo, hi }
    }
}

/// Integer-keyed tables travel as JSON objects with string keys.
mod table_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &BTreeMap<i64, f64>, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<String, f64> = t.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        m.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, f64>, D::Error> {
        let m = BTreeMap::<String, f64>::deserialize(d)?;
        m.into_iter()
            .map(|(k, v)| k.trim().parse::<i64>().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("table key {k:?} is not an integer"))))
            .collect()
    }
}

/// End of the index line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    Minus,
    Plus,
}

/// Bound of a support hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extent {
    Empty,
    Unbounded,
    At(i64),
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    coeff: f64,
    lo: Option<i64>,
    hi: Option<i64>,
    parity: Option<u8>,
    harmonic: Vec<i64>,
    geometric: Vec<(f64, i64)>,
}

impl Term {
    fn constant(coeff: f64) -> Term {
        Term { coeff, lo: None, hi: None, parity: None, harmonic: Vec::new(), geometric: Vec::new() }
    }

    fn decays(&self) -> bool {
        !self.harmonic.is_empty() || !self.geometric.is_empty()
    }

    fn shape(&self, i: i64) -> f64 {
        if self.lo.is_some_and(|l| i < l) || self.hi.is_some_and(|h| i > h) {
            return 0.0;
        }
        if self.parity.is_some_and(|p| i.rem_euclid(2) as u8 != p) {
            return 0.0;
        }
        let mut v = 1.0;
        for &s in &self.harmonic {
            if i == s {
                return 0.0;
            }
            v /= (i - s).unsigned_abs() as f64;
        }
        for &(r, s) in &self.geometric {
            v *= r.powi((i - s).unsigned_abs().min(i32::MAX as u64) as i32);
        }
        v
    }

    fn eval(&self, i: i64) -> f64 {
        self.coeff * self.shape(i)
    }

    fn key(&self) -> (Option<i64>, Option<i64>, Option<u8>, Vec<i64>, Vec<(u64, i64)>) {
        (
            self.lo,
            self.hi,
            self.parity,
            self.harmonic.clone(),
            self.geometric.iter().map(|&(r, s)| (r.to_bits(), s)).collect(),
        )
    }

    fn rest_key(&self) -> (Option<u8>, Vec<i64>, Vec<(u64, i64)>) {
        let k = self.key();
        (k.2, k.3, k.4)
    }

    fn mul(&self, other: &Term) -> Option<Term> {
        let lo = max_opt(self.lo, other.lo);
        let hi = min_opt(self.hi, other.hi);
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return None;
            }
        }
        let parity = match (self.parity, other.parity) {
            (Some(a), Some(b)) if a != b => return None,
            (a, b) => a.or(b),
        };
        let mut harmonic = self.harmonic.clone();
        harmonic.extend_from_slice(&other.harmonic);
        harmonic.sort_unstable();
        let mut geometric = self.geometric.clone();
        for &(r, s) in &other.geometric {
            match geometric.iter_mut().find(|g| g.1 == s) {
                Some(g) => g.0 *= r,
                None => geometric.push((r, s)),
            }
        }
        geometric.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
        Some(Term { coeff: self.coeff * other.coeff, lo, hi, parity, harmonic, geometric })
    }

    fn shifted(&self, by: i64) -> Term {
        Term {
            coeff: self.coeff,
            lo: self.lo.map(|l| l + by),
            hi: self.hi.map(|h| h + by),
            parity: self.parity.map(|p| ((p as i64 + by).rem_euclid(2)) as u8),
            harmonic: self.harmonic.iter().map(|s| s + by).collect(),
            geometric: self.geometric.iter().map(|&(r, s)| (r, s + by)).collect(),
        }
    }

    fn reflected(&self, center: i64) -> Term {
        let mut harmonic: Vec<i64> = self.harmonic.iter().map(|s| center - s).collect();
        harmonic.sort_unstable();
        let mut geometric: Vec<(f64, i64)> =
            self.geometric.iter().map(|&(r, s)| (r, center - s)).collect();
        geometric.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
        Term {
            coeff: self.coeff,
            lo: self.hi.map(|h| center - h),
            hi: self.lo.map(|l| center - l),
            parity: self.parity.map(|p| ((center - p as i64).rem_euclid(2)) as u8),
            harmonic,
            geometric,
        }
    }

    /// Upper bound of `|term|` over `[lo, hi]`.
    fn sup_bound(&self, lo: Option<i64>, hi: Option<i64>) -> f64 {
        let lo = max_opt(lo, self.lo);
        let hi = min_opt(hi, self.hi);
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return 0.0;
            }
        }
        let dist = |s: i64| -> u64 {
            // distance from s to the interval, at least 1 when s lies inside
            let below = lo.is_some_and(|l| s < l);
            let above = hi.is_some_and(|h| s > h);
            if below {
                (lo.unwrap() - s) as u64
            } else if above {
                (s - hi.unwrap()) as u64
            } else {
                0
            }
        };
        let mut v = self.coeff.abs();
        for &s in &self.harmonic {
            v /= dist(s).max(1) as f64;
        }
        for &(r, s) in &self.geometric {
            v *= r.abs().powi(dist(s).min(i32::MAX as u64) as i32);
        }
        v
    }

    /// Upper bound of the ℓ² norm of the term restricted to `|i| ≥ n`, one end.
    /// Uses `|i − s| ≥ |i| − m` for `|i| ≥ n > m`, with `m` the largest center.
    fn tail_l2_bound(&self, n: i64) -> f64 {
        let centers = self.harmonic.iter().chain(self.geometric.iter().map(|g| &g.1));
        let m = centers.map(|s| s.abs()).max().unwrap_or(0);
        let n = n.max(2 * m + 1).max(1) as f64;
        let h = self.harmonic.len() as i32;
        let mut c = self.coeff.abs() * (n / (n - m as f64)).powi(h);
        let mut rho = 1.0;
        for &(r, s) in &self.geometric {
            rho *= r.abs();
            c *= r.abs().powi(-(s.abs().min(i32::MAX as i64) as i32));
        }
        if c == 0.0 {
            return 0.0;
        }
        let sq = if rho < 1.0 {
            c * c * n.powi(-2 * h) * rho.powf(2.0 * n) / (1.0 - rho * rho)
        } else if h >= 1 {
            c * c * (n.powi(-2 * h) + n.powi(1 - 2 * h) / (2 * h - 1) as f64)
        } else {
            f64::INFINITY
        };
        sq.sqrt()
    }
}

fn max_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    }
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Canonical coefficient sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rule {
    terms: Vec<Term>,
    finite: BTreeMap<i64, f64>,
}

impl Rule {
    pub fn zero() -> Rule {
        Rule::default()
    }

    pub fn constant(c: f64) -> Rule {
        Rule::from_parts(vec![Term::constant(c)], BTreeMap::new())
    }

    pub fn delta(i: i64) -> Rule {
        Rule::from_table(BTreeMap::from([(i, 1.0)]))
    }

    pub fn from_table(table: BTreeMap<i64, f64>) -> Rule {
        Rule::from_parts(Vec::new(), table)
    }

    pub fn indicator(lo: Option<i64>, hi: Option<i64>) -> Rule {
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Rule::zero();
            }
        }
        Rule::from_parts(vec![Term { lo, hi, ..Term::constant(1.0) }], BTreeMap::new())
    }

    pub fn harmonic(center: i64) -> Rule {
        Rule::from_parts(vec![Term { harmonic: vec![center], ..Term::constant(1.0) }], BTreeMap::new())
    }

    pub fn geometric(ratio: f64, center: i64) -> Rule {
        if ratio == 0.0 {
            return Rule::delta(center);
        }
        Rule::from_parts(
            vec![Term { geometric: vec![(ratio, center)], ..Term::constant(1.0) }],
            BTreeMap::new(),
        )
    }

    fn parity_mask(p: u8) -> Rule {
        Rule::from_parts(vec![Term { parity: Some(p), ..Term::constant(1.0) }], BTreeMap::new())
    }

    /// Validates and canonicalizes a document.
    pub fn from_doc(doc: &SeqRule) -> Result<Rule> {
        Ok(match doc {
            SeqRule::Const { value } => {
                check_finite(*value, "const value")?;
                Rule::constant(*value)
            }
            SeqRule::Harmonic { center } => Rule::harmonic(*center),
            SeqRule::Geometric { ratio, center } => {
                check_finite(*ratio, "geometric ratio")?;
                if ratio.abs() > 1.0 {
                    return Err(Error::UnboundedRule(format!("geometric ratio {ratio} has |r| > 1")));
                }
                if ratio.abs() == 1.0 {
                    return Err(Error::Schema(format!("geometric ratio {ratio} must satisfy |r| < 1")));
                }
                Rule::geometric(*ratio, *center)
            }
            SeqRule::Finite { table } => {
                for v in table.values() {
                    check_finite(*v, "finite table entry")?;
                }
                Rule::from_table(table.clone())
            }
            SeqRule::Indicator { lo, hi } => Rule::indicator(*lo, *hi),
            SeqRule::Shift { by, rule } => Rule::from_doc(rule)?.shift(*by),
            SeqRule::Scale { factor, rule } => {
                check_finite(*factor, "scale factor")?;
                Rule::from_doc(rule)?.scale(*factor)
            }
            SeqRule::Sum { terms } => {
                let mut acc = Rule::zero();
                for t in terms {
                    acc = acc.add(&Rule::from_doc(t)?);
                }
                acc
            }
            SeqRule::Product { factors } => {
                let mut acc = Rule::constant(1.0);
                for f in factors {
                    acc = acc.mul(&Rule::from_doc(f)?);
                }
                acc
            }
            SeqRule::Parity { even, odd } => Rule::from_doc(even)?
                .mul(&Rule::parity_mask(0))
                .add(&Rule::from_doc(odd)?.mul(&Rule::parity_mask(1))),
            SeqRule::Reflect { center, rule } => Rule::from_doc(rule)?.reflect(*center),
        })
    }

    /// Canonical document form.
    pub fn to_doc(&self) -> SeqRule {
        let mut parts = Vec::new();
        for t in &self.terms {
            let mut factors = Vec::new();
            if t.lo.is_some() || t.hi.is_some() {
                factors.push(SeqRule::Indicator { lo: t.lo, hi: t.hi });
            }
            if let Some(p) = t.parity {
                let (even, odd) = if p == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
                factors.push(SeqRule::Parity {
                    even: Box::new(SeqRule::constant(even)),
                    odd: Box::new(SeqRule::constant(odd)),
                });
            }
            factors.extend(t.harmonic.iter().map(|&center| SeqRule::Harmonic { center }));
            factors.extend(t.geometric.iter().map(|&(ratio, center)| SeqRule::Geometric { ratio, center }));
            let body = match factors.len() {
                0 => SeqRule::constant(t.coeff),
                1 if t.coeff == 1.0 => factors.pop().unwrap(),
                _ if t.coeff == 1.0 => SeqRule::Product { factors },
                1 => SeqRule::Scale { factor: t.coeff, rule: Box::new(factors.pop().unwrap()) },
                _ => SeqRule::Scale { factor: t.coeff, rule: Box::new(SeqRule::Product { factors }) },
            };
            parts.push(body);
        }
        if !self.finite.is_empty() {
            parts.push(SeqRule::Finite { table: self.finite.clone() });
        }
        match parts.len() {
            0 => SeqRule::constant(0.0),
            1 => parts.pop().unwrap(),
            _ => SeqRule::Sum { terms: parts },
        }
    }

    fn from_parts(terms: Vec<Term>, finite: BTreeMap<i64, f64>) -> Rule {
        normalize(terms, finite)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.finite.is_empty()
    }

    /// True when the rule is the constant `c` on all of ℤ.
    pub fn is_constant(&self, c: f64) -> bool {
        self.finite.is_empty()
            && self.terms.len() == 1
            && {
                let t = &self.terms[0];
                t.lo.is_none() && t.hi.is_none() && t.parity.is_none() && !t.decays()
                    && (t.coeff - c).abs() <= ZERO_TOL
            }
    }

    pub fn eval(&self, i: i64) -> f64 {
        let mut v = self.finite.get(&i).copied().unwrap_or(0.0);
        for t in &self.terms {
            v += t.eval(i);
        }
        v
    }

    pub fn add(&self, other: &Rule) -> Rule {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut finite = self.finite.clone();
        for (&k, &v) in &other.finite {
            *finite.entry(k).or_insert(0.0) += v;
        }
        Rule::from_parts(terms, finite)
    }

    pub fn sub(&self, other: &Rule) -> Rule {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Rule {
        if c == 0.0 {
            return Rule::zero();
        }
        let terms = self.terms.iter().map(|t| Term { coeff: t.coeff * c, ..t.clone() }).collect();
        let finite = self.finite.iter().map(|(&k, &v)| (k, v * c)).collect();
        Rule::from_parts(terms, finite)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Rule) -> Rule {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                if let Some(t) = a.mul(b) {
                    terms.push(t);
                }
            }
        }
        let mut finite = BTreeMap::new();
        for (&k, &v) in &self.finite {
            let w = other.eval(k);
            if w != 0.0 {
                *finite.entry(k).or_insert(0.0) += v * w;
            }
        }
        for (&k, &v) in &other.finite {
            let w: f64 = self.terms.iter().map(|t| t.eval(k)).sum();
            if w != 0.0 {
                *finite.entry(k).or_insert(0.0) += v * w;
            }
        }
        Rule::from_parts(terms, finite)
    }

    /// `i ↦ self(i − by)`.
    pub fn shift(&self, by: i64) -> Rule {
        if by == 0 {
            return self.clone();
        }
        let terms = self.terms.iter().map(|t| t.shifted(by)).collect();
        let finite = self.finite.iter().map(|(&k, &v)| (k + by, v)).collect();
        Rule::from_parts(terms, finite)
    }

    /// `i ↦ self(center − i)`.
    pub fn reflect(&self, center: i64) -> Rule {
        let terms = self.terms.iter().map(|t| t.reflected(center)).collect();
        let finite = self.finite.iter().map(|(&k, &v)| (center - k, v)).collect();
        Rule::from_parts(terms, finite)
    }

    /// Restriction to `[lo, hi]`.
    pub fn mask(&self, lo: Option<i64>, hi: Option<i64>) -> Rule {
        if lo.is_none() && hi.is_none() {
            return self.clone();
        }
        self.mul(&Rule::indicator(lo, hi))
    }

    /// Limits along even and odd indices at one end. Every canonical rule is
    /// eventually 2-periodic plus a vanishing part, so these always exist.
    pub fn tail(&self, end: End) -> (f64, f64) {
        let mut even = 0.0;
        let mut odd = 0.0;
        for t in &self.terms {
            let reaches = match end {
                End::Plus => t.hi.is_none(),
                End::Minus => t.lo.is_none(),
            };
            if !reaches || t.decays() {
                continue;
            }
            match t.parity {
                None => {
                    even += t.coeff;
                    odd += t.coeff;
                }
                Some(0) => even += t.coeff,
                Some(_) => odd += t.coeff,
            }
        }
        (clean(even), clean(odd))
    }

    /// `lim sup |rule|` at one end.
    pub fn limsup_abs(&self, end: End) -> f64 {
        let (e, o) = self.tail(end);
        e.abs().max(o.abs())
    }

    /// The limit at one end when it exists.
    pub fn limit(&self, end: End) -> Option<f64> {
        let (e, o) = self.tail(end);
        ((e - o).abs() <= ZERO_TOL).then_some(e)
    }

    /// Does the rule vanish at both ends?
    pub fn vanishes_at_infinity(&self) -> bool {
        self.limsup_abs(End::Plus) == 0.0 && self.limsup_abs(End::Minus) == 0.0
    }

    /// Square-summability; for canonical rules this is equivalent to
    /// vanishing at both ends (every vanishing term decays at least like 1/|i|).
    pub fn square_summable(&self) -> bool {
        self.vanishes_at_infinity()
    }

    /// Lowest index of the support.
    pub fn support_min(&self) -> Extent {
        self.support_extent(End::Minus)
    }

    /// Highest index of the support.
    pub fn support_max(&self) -> Extent {
        self.support_extent(End::Plus)
    }

    fn support_extent(&self, end: End) -> Extent {
        if self.is_zero() {
            return Extent::Empty;
        }
        let unbounded = self.terms.iter().any(|t| match end {
            End::Minus => t.lo.is_none(),
            End::Plus => t.hi.is_none(),
        });
        if unbounded {
            return Extent::Unbounded;
        }
        // hull end candidate, then walk inwards to the first actual nonzero;
        // cancellation only happens at isolated points
        let (lo, hi) = self.hull();
        let (from, step) = match end {
            End::Minus => (lo, 1),
            End::Plus => (hi, -1),
        };
        let Some(mut i) = from else { return Extent::Unbounded };
        let stop = match end {
            End::Minus => hi,
            End::Plus => lo,
        };
        for _ in 0..(1 << 22) {
            if self.eval(i).abs() > ZERO_TOL {
                return Extent::At(i);
            }
            if stop == Some(i) {
                return Extent::Empty;
            }
            i += step;
        }
        Extent::Unbounded
    }

    /// Structural support hull (`None` = unbounded on that side).
    pub fn hull(&self) -> (Option<i64>, Option<i64>) {
        let mut lo: Option<Option<i64>> = None;
        let mut hi: Option<Option<i64>> = None;
        let mut widen = |l: Option<i64>, h: Option<i64>| {
            lo = Some(match lo {
                None => l,
                Some(cur) => match (cur, l) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    _ => None,
                },
            });
            hi = Some(match hi {
                None => h,
                Some(cur) => match (cur, h) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                },
            });
        };
        for t in &self.terms {
            widen(t.lo, t.hi);
        }
        if let (Some(&a), Some(&b)) = (self.finite.keys().next(), self.finite.keys().next_back()) {
            widen(Some(a), Some(b));
        }
        (lo.unwrap_or(Some(0)), hi.unwrap_or(Some(-1)))
    }

    /// Is the rule nonzero somewhere in `[lo, hi]`?
    pub fn nonzero_in(&self, lo: Option<i64>, hi: Option<i64>) -> bool {
        for t in &self.terms {
            let l = max_opt(lo, t.lo);
            let h = min_opt(hi, t.hi);
            match (l, h) {
                (Some(a), Some(b)) if a > b => continue,
                (Some(_), Some(_)) => {}
                // an infinite stretch of a nonzero term; other terms can only
                // cancel it at finitely many points
                _ => return true,
            }
        }
        let (hl, hh) = self.hull();
        let l = max_opt(lo, hl);
        let h = min_opt(hi, hh);
        match (l, h) {
            (Some(a), Some(b)) => (a..=b).any(|i| self.eval(i).abs() > ZERO_TOL),
            _ => false,
        }
    }

    /// Upper bound of `sup |rule|` over `[lo, hi]`, exact when the range is
    /// short or the maximum is attained near a finite end.
    pub fn sup_abs(&self, lo: Option<i64>, hi: Option<i64>) -> f64 {
        let (hl, hh) = self.hull();
        let lo = max_opt(lo, hl);
        let hi = min_opt(hi, hh);
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return 0.0;
            }
            if (h as i128 - l as i128) <= 2 * EXACT_SCAN as i128 {
                return (l..=h).map(|i| self.eval(i).abs()).fold(0.0, f64::max);
            }
        }
        let mut best = 0.0f64;
        let mut rest_lo = lo;
        let mut rest_hi = hi;
        if let Some(l) = lo {
            best = best.max((l..l.saturating_add(EXACT_SCAN)).map(|i| self.eval(i).abs()).fold(0.0, f64::max));
            rest_lo = Some(l.saturating_add(EXACT_SCAN));
        }
        if let Some(h) = hi {
            best = best.max((h.saturating_sub(EXACT_SCAN - 1)..=h).map(|i| self.eval(i).abs()).fold(0.0, f64::max));
            rest_hi = Some(h.saturating_sub(EXACT_SCAN));
        }
        if lo.is_none() && hi.is_none() {
            best = best.max((-EXACT_SCAN..=EXACT_SCAN).map(|i| self.eval(i).abs()).fold(0.0, f64::max));
        }
        let finite_rest = self
            .finite
            .range(rest_lo.unwrap_or(i64::MIN)..=rest_hi.unwrap_or(i64::MAX))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        let terms: f64 = self.terms.iter().map(|t| t.sup_bound(rest_lo, rest_hi)).sum();
        best.max(finite_rest + terms)
    }

    /// Global supremum bound.
    pub fn sup_bound(&self) -> f64 {
        self.sup_abs(None, None)
    }

    /// Certified `(lower, upper)` bounds of the ℓ² norm over `[lo, hi]`.
    pub fn l2_norm_bounds(&self, lo: Option<i64>, hi: Option<i64>) -> (f64, f64) {
        let (hl, hh) = self.hull();
        let lo = max_opt(lo, hl);
        let hi = min_opt(hi, hh);
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return (0.0, 0.0);
            }
        }
        let l = lo.unwrap_or(-INNER_WINDOW).max(-INNER_WINDOW.max(hi.map_or(0, |h| h - 2 * INNER_WINDOW)));
        let h = hi.unwrap_or(INNER_WINDOW).min(INNER_WINDOW.max(l + 2 * INNER_WINDOW));
        let l = lo.map_or(l, |x| x.max(l).min(h));
        let partial: f64 = (l..=h).map(|i| self.eval(i).powi(2)).sum::<f64>().sqrt();
        let mut tail = 0.0;
        if hi.is_none_or(|x| x > h) {
            tail += self.tail_bound_beyond(End::Plus, h + 1);
        }
        if lo.is_none_or(|x| x < l) {
            tail += self.tail_bound_beyond(End::Minus, l - 1);
        }
        (partial, partial + tail)
    }

    /// ℓ² bound of the part of the rule beyond index `from` (inclusive) at one end.
    fn tail_bound_beyond(&self, end: End, from: i64) -> f64 {
        let in_range = |i: i64| match end {
            End::Plus => i >= from,
            End::Minus => i <= from,
        };
        let finite: f64 = self
            .finite
            .iter()
            .filter(|(&k, _)| in_range(k))
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt();
        let mut total = finite;
        for t in &self.terms {
            let reaches = match end {
                End::Plus => t.hi.is_none_or(|h| h >= from),
                End::Minus => t.lo.is_none_or(|l| l <= from),
            };
            if !reaches {
                continue;
            }
            let n = from.unsigned_abs().min(i64::MAX as u64) as i64;
            let same_side = match end {
                End::Plus => from >= 0,
                End::Minus => from <= 0,
            };
            if same_side {
                total += t.tail_l2_bound(n);
            } else {
                total += t.tail_l2_bound(1) * 2.0 + t.coeff.abs() * (n as f64 + 1.0).sqrt();
            }
        }
        total
    }

    /// Inner product with an error bound.
    pub fn inner(&self, other: &Rule) -> (f64, f64) {
        let (al, ah) = self.hull();
        let (bl, bh) = other.hull();
        let lo = max_opt(al, bl);
        let hi = min_opt(ah, bh);
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return (0.0, 0.0);
            }
            if h - l <= 4 * INNER_WINDOW {
                return ((l..=h).map(|i| self.eval(i) * other.eval(i)).sum(), 0.0);
            }
        }
        let l = lo.unwrap_or(-INNER_WINDOW).max(-INNER_WINDOW);
        let h = hi.unwrap_or(INNER_WINDOW).min(INNER_WINDOW).max(l);
        let value: f64 = (l..=h).map(|i| self.eval(i) * other.eval(i)).sum();
        let mut err = 0.0;
        if hi.is_none_or(|x| x > h) {
            err += self.tail_bound_beyond(End::Plus, h + 1) * other.tail_bound_beyond(End::Plus, h + 1);
        }
        if lo.is_none_or(|x| x < l) {
            err += self.tail_bound_beyond(End::Minus, l - 1) * other.tail_bound_beyond(End::Minus, l - 1);
        }
        (value, err)
    }

    /// A representative index family where `|rule| ≥ level` at one end:
    /// the parity class carrying the tail limit.
    pub fn plateau_parity(&self, end: End) -> Option<u8> {
        let (e, o) = self.tail(end);
        if e == 0.0 && o == 0.0 {
            None
        } else if e.abs() >= o.abs() {
            Some(0)
        } else {
            Some(1)
        }
    }
}

fn clean(x: f64) -> f64 {
    if x.abs() <= ZERO_TOL {
        0.0
    } else {
        x
    }
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::UnboundedRule(format!("{what} is not finite ({v})")))
    }
}

fn fold_bounded(terms: Vec<Term>, finite: &mut BTreeMap<i64, f64>) -> Vec<Term> {
    let mut kept = Vec::with_capacity(terms.len());
    for t in terms {
        if t.coeff.abs() <= ZERO_TOL {
            continue;
        }
        match (t.lo, t.hi) {
            (Some(l), Some(h)) if h < l => {}
            (Some(l), Some(h)) if h - l < FINITE_WIDTH => {
                for i in l..=h {
                    let v = t.eval(i);
                    if v != 0.0 {
                        *finite.entry(i).or_insert(0.0) += v;
                    }
                }
            }
            _ => kept.push(t),
        }
    }
    kept
}

fn normalize(terms: Vec<Term>, mut finite: BTreeMap<i64, f64>) -> Rule {
    let terms = fold_bounded(terms, &mut finite);

    // split every term on the common breakpoints
    let mut breaks = BTreeSet::new();
    for t in &terms {
        if let Some(l) = t.lo {
            breaks.insert(l);
        }
        if let Some(h) = t.hi {
            breaks.insert(h + 1);
        }
    }
    let breaks: Vec<i64> = breaks.into_iter().collect();
    let any_parity = terms.iter().any(|t| t.parity.is_some());
    let mut pieces = Vec::new();
    for t in terms {
        let inner: Vec<i64> = breaks
            .iter()
            .copied()
            .filter(|&b| t.lo.is_none_or(|l| b > l) && t.hi.is_none_or(|h| b <= h))
            .collect();
        let mut start = t.lo;
        for b in inner.iter().copied().chain(std::iter::once(i64::MAX)) {
            let end = if b == i64::MAX { t.hi } else { Some(b - 1) };
            let piece = Term { lo: start, hi: end, ..t.clone() };
            if any_parity && piece.parity.is_none() {
                pieces.push(Term { parity: Some(0), ..piece.clone() });
                pieces.push(Term { parity: Some(1), ..piece });
            } else {
                pieces.push(piece);
            }
            if b == i64::MAX {
                break;
            }
            start = Some(b);
        }
    }

    // merge like terms
    let mut merged: BTreeMap<_, Term> = BTreeMap::new();
    for p in pieces {
        merged
            .entry(p.key())
            .and_modify(|m: &mut Term| m.coeff += p.coeff)
            .or_insert(p);
    }
    let terms: Vec<Term> = merged.into_values().filter(|t| t.coeff.abs() > ZERO_TOL).collect();
    let terms = fold_bounded(terms, &mut finite);

    // recombine parity pairs with equal coefficients
    let mut by_rest: BTreeMap<_, Vec<Term>> = BTreeMap::new();
    for t in terms {
        let k = (t.lo, t.hi, t.harmonic.clone(), t.geometric.iter().map(|g| (g.0.to_bits(), g.1)).collect::<Vec<_>>());
        by_rest.entry(k).or_default().push(t);
    }
    let mut terms = Vec::new();
    for (_, mut group) in by_rest {
        if group.len() == 2
            && group[0].parity.is_some()
            && group[1].parity.is_some()
            && (group[0].coeff - group[1].coeff).abs() <= ZERO_TOL
        {
            let mut t = group.pop().unwrap();
            t.parity = None;
            terms.push(t);
        } else {
            terms.extend(group);
        }
    }

    // recombine adjacent pieces with identical shape and coefficient
    terms.sort_by(|a, b| {
        a.rest_key()
            .cmp(&b.rest_key())
            .then(cmp_lo(a.lo, b.lo))
    });
    let mut out: Vec<Term> = Vec::new();
    for t in terms {
        if let Some(last) = out.last_mut() {
            if last.rest_key() == t.rest_key()
                && (last.coeff - t.coeff).abs() <= ZERO_TOL
                && last.hi.is_some()
                && t.lo == last.hi.map(|h| h + 1)
            {
                last.hi = t.hi;
                continue;
            }
        }
        out.push(t);
    }
    for t in out.iter_mut() {
        absorb_table(t, &mut finite);
    }
    out.sort_by(|a, b| cmp_lo(a.lo, b.lo).then(a.rest_key().cmp(&b.rest_key())));

    finite.retain(|_, v| v.abs() > ZERO_TOL);
    Rule { terms: out, finite }
}

/// Moves table entries continuing a one-sided term into the term, so that a
/// truncated term plus its missing values has a single representation.
fn absorb_table(t: &mut Term, finite: &mut BTreeMap<i64, f64>) {
    let step: i64 = match (t.lo, t.hi) {
        (Some(_), None) => -1,
        (None, Some(_)) => 1,
        _ => return,
    };
    let mut edge = t.lo.or(t.hi).expect("one side is bounded");
    let Some(mut i) = edge.checked_add(step) else { return };
    let mut skipped = 0;
    loop {
        if t.harmonic.contains(&i) {
            break;
        }
        let probe = Term { lo: None, hi: None, ..t.clone() };
        let want = probe.eval(i);
        if want == 0.0 {
            skipped += 1;
            if t.parity.is_none() || skipped > 1 {
                break;
            }
            match i.checked_add(step) {
                Some(n) => i = n,
                None => break,
            }
            continue;
        }
        match finite.get(&i) {
            Some(&v) if (v - want).abs() <= ZERO_TOL * want.abs().max(1.0) => {
                skipped = 0;
                finite.remove(&i);
                edge = i;
                match i.checked_add(step) {
                    Some(n) => i = n,
                    None => break,
                }
            }
            _ => break,
        }
    }
    if step < 0 {
        t.lo = Some(edge);
    } else {
        t.hi = Some(edge);
    }
}

fn cmp_lo(a: Option<i64>, b: Option<i64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Less,
        (_, None) => Ordering::Greater,
        (Some(x), Some(y)) => x.cmp(&y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Rule {
        Rule::from_doc(&serde_json::from_str::<SeqRule>(s).unwrap()).unwrap()
    }

    #[test]
    fn documents_parse() {
        let h = parse(r#"{"kind":"harmonic"}"#);
        assert_eq!(h.eval(4), 0.25);
        assert_eq!(h.eval(0), 0.0);
        assert_eq!(h.eval(-2), 0.5);
        let f = parse(r#"{"kind":"finite","table":{"2":1.5}}"#);
        assert_eq!(f.eval(2), 1.5);
        assert_eq!(f.support_min(), Extent::At(2));
        let g = parse(r#"{"kind":"geometric","ratio":0.5}"#);
        assert_eq!(g.eval(3), 0.125);
        assert_eq!(g.eval(-1), 0.5);
    }

    #[test]
    fn bad_documents_are_rejected() {
        let err = Rule::from_doc(&SeqRule::geometric(1.5)).unwrap_err();
        assert!(matches!(err, Error::UnboundedRule(_)));
        let err = Rule::from_doc(&SeqRule::constant(f64::INFINITY)).unwrap_err();
        assert!(matches!(err, Error::UnboundedRule(_)));
        assert!(serde_json::from_str::<SeqRule>(r#"{"kind":"cubic"}"#).is_err());
    }

    #[test]
    fn tails_are_exact() {
        let h = Rule::harmonic(0);
        assert_eq!(h.tail(End::Plus), (0.0, 0.0));
        let mixed = parse(
            r#"{"kind":"sum","terms":[
                {"kind":"product","factors":[{"kind":"indicator","hi":0},{"kind":"const","value":1}]},
                {"kind":"product","factors":[{"kind":"indicator","lo":1},{"kind":"harmonic"}]}]}"#,
        );
        assert_eq!(mixed.limit(End::Minus), Some(1.0));
        assert_eq!(mixed.limit(End::Plus), Some(0.0));
        let parity = parse(
            r#"{"kind":"parity","even":{"kind":"const","value":1},"odd":{"kind":"harmonic"}}"#,
        );
        assert_eq!(parity.tail(End::Plus), (1.0, 0.0));
        assert_eq!(parity.limit(End::Plus), None);
        assert_eq!(parity.limsup_abs(End::Plus), 1.0);
        assert_eq!(parity.plateau_parity(End::Plus), Some(0));
    }

    #[test]
    fn structural_cancellation() {
        let h = Rule::harmonic(0);
        let upper = h.mask(Some(1), None);
        let diff = h.sub(&upper);
        assert_eq!(diff.support_max(), Extent::At(-1));
        assert!(h.sub(&h).is_zero());
        let c = Rule::constant(2.0);
        let split = c.mul(&Rule::parity_mask(0)).add(&c.mul(&Rule::parity_mask(1)));
        assert_eq!(split, c);
        let disjoint = Rule::indicator(Some(1), None).mul(&Rule::indicator(None, Some(0)));
        assert!(disjoint.is_zero());
    }

    #[test]
    fn sup_and_norm_bounds() {
        let h = Rule::harmonic(0);
        assert!((h.sup_abs(Some(5), None) - 0.2).abs() < 1e-15);
        let (lo, hi) = h.mask(Some(1), None).l2_norm_bounds(None, None);
        let exact = std::f64::consts::PI / 6f64.sqrt();
        assert!(lo <= exact && exact <= hi, "{lo} {exact} {hi}");
        assert!(hi - lo < 1e-2);
        let g = Rule::geometric(0.5, 0).mask(Some(1), None);
        let (lo, hi) = g.l2_norm_bounds(None, None);
        let exact = (1.0f64 / 3.0).sqrt();
        assert!(lo <= exact + 1e-15 && exact <= hi + 1e-15);
        assert!(hi - lo < 1e-12);
        assert!(!Rule::constant(1.0).square_summable());
        assert!(h.square_summable());
    }

    #[test]
    fn inner_products() {
        let g = Rule::geometric(0.5, 0).mask(Some(1), None);
        let (v, err) = g.inner(&g);
        assert!((v - 1.0 / 3.0).abs() <= err + 1e-14);
        let d = Rule::delta(3);
        assert_eq!(d.inner(&Rule::harmonic(0)), (1.0 / 3.0, 0.0));
    }

    fn arb_rule() -> impl Strategy<Value = SeqRule> {
        let leaf = prop_oneof![
            (-2.0f64..2.0).prop_map(SeqRule::constant),
            (-3i64..3).prop_map(|center| SeqRule::Harmonic { center }),
            (-0.9f64..0.9).prop_map(SeqRule::geometric),
            (-5i64..5, 0i64..8).prop_map(|(l, w)| SeqRule::indicator(Some(l), Some(l + w))),
            (-5i64..5).prop_map(|l| SeqRule::indicator(Some(l), None)),
            (-5i64..5).prop_map(|h| SeqRule::indicator(None, Some(h))),
            prop::collection::btree_map(-6i64..6, -2.0f64..2.0, 0..3)
                .prop_map(|table| SeqRule::Finite { table }),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..3).prop_map(|terms| SeqRule::Sum { terms }),
                prop::collection::vec(inner.clone(), 1..3).prop_map(|factors| SeqRule::Product { factors }),
                (-3i64..3, inner.clone()).prop_map(|(by, r)| SeqRule::Shift { by, rule: Box::new(r) }),
                (-3i64..3, inner.clone()).prop_map(|(center, r)| SeqRule::Reflect { center, rule: Box::new(r) }),
                (inner.clone(), inner).prop_map(|(e, o)| SeqRule::Parity { even: Box::new(e), odd: Box::new(o) }),
            ]
        })
    }

    fn naive(doc: &SeqRule, i: i64) -> f64 {
        match doc {
            SeqRule::Const { value } => *value,
            SeqRule::Harmonic { center } => {
                if i == *center { 0.0 } else { 1.0 / (i - center).abs() as f64 }
            }
            SeqRule::Geometric { ratio, center } => ratio.powi((i - center).abs() as i32),
            SeqRule::Finite { table } => table.get(&i).copied().unwrap_or(0.0),
            SeqRule::Indicator { lo, hi } => {
                (lo.is_none_or(|l| i >= l) && hi.is_none_or(|h| i <= h)) as i32 as f64
            }
            SeqRule::Shift { by, rule } => naive(rule, i - by),
            SeqRule::Scale { factor, rule } => factor * naive(rule, i),
            SeqRule::Sum { terms } => terms.iter().map(|t| naive(t, i)).sum(),
            SeqRule::Product { factors } => factors.iter().map(|t| naive(t, i)).product(),
            SeqRule::Parity { even, odd } => {
                if i.rem_euclid(2) == 0 { naive(even, i) } else { naive(odd, i) }
            }
            SeqRule::Reflect { center, rule } => naive(rule, center - i),
        }
    }

    proptest! {
        #[test]
        fn canonical_form_preserves_values(doc in arb_rule()) {
            let rule = Rule::from_doc(&doc).unwrap();
            for i in -40i64..40 {
                prop_assert!((rule.eval(i) - naive(&doc, i)).abs() < 1e-9);
            }
            let again = Rule::from_doc(&rule.to_doc()).unwrap();
            for i in -40i64..40 {
                prop_assert!((again.eval(i) - rule.eval(i)).abs() < 1e-12);
            }
        }

        #[test]
        fn tails_match_far_samples(doc in arb_rule()) {
            let rule = Rule::from_doc(&doc).unwrap();
            let (e, o) = rule.tail(End::Plus);
            // decaying parts are O(1/|i|) with small constants in this strategy
            let k = 1i64 << 20;
            prop_assert!((naive(&doc, k) - e).abs() < 1e-3);
            prop_assert!((naive(&doc, k + 1) - o).abs() < 1e-3);
            let (e, o) = rule.tail(End::Minus);
            prop_assert!((naive(&doc, -k) - e).abs() < 1e-3);
            prop_assert!((naive(&doc, -k + 1) - o).abs() < 1e-3);
        }

        #[test]
        fn sup_bound_dominates(doc in arb_rule(), lo in -30i64..0, w in 0i64..60) {
            let rule = Rule::from_doc(&doc).unwrap();
            let s = rule.sup_abs(Some(lo), None);
            for i in lo..lo + w {
                prop_assert!(rule.eval(i).abs() <= s + 1e-12);
            }
        }
    }
}
