//! Nests of coordinate cut projections on ℓ²(ℕ) or ℓ²(ℤ).
//!
//! A cut `c` denotes the orthogonal projection onto the closed span of the
//! basis vectors with index `≤ c`. Every nest carries the bottom cut
//! ([`Cut::NegInf`], the zero projection) and the top cut ([`Cut::PosInf`],
//! the identity). Interior cuts are either every integer or a finite sorted
//! list.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Index set of the orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Indices `1, 2, 3, …`.
    #[serde(rename = "N")]
    Natural,
    /// Indices `…, -1, 0, 1, …`.
    #[serde(rename = "Z")]
    Integer,
}

impl Basis {
    /// Smallest basis index, if any.
    pub fn first_index(self) -> Option<i64> {
        match self {
            Basis::Natural => Some(1),
            Basis::Integer => None,
        }
    }

    pub fn contains_index(self, i: i64) -> bool {
        match self {
            Basis::Natural => i >= 1,
            Basis::Integer => true,
        }
    }

    /// Default truncation window with `size` indices: `[1, size]` on ℕ and a
    /// window centred at the origin on ℤ.
    pub fn window(self, size: usize) -> (i64, i64) {
        let n = size.max(1) as i64;
        match self {
            Basis::Natural => (1, n),
            Basis::Integer => (-(n / 2) + 1, n - n / 2),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Natural => write!(f, "N"),
            Basis::Integer => write!(f, "Z"),
        }
    }
}

/// A cut of a nest. Variant order matches projection order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cut {
    NegInf,
    At(i64),
    PosInf,
}

impl Cut {
    pub fn value(self) -> Option<i64> {
        match self {
            Cut::At(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Cut::At(_))
    }

    /// Does the projection of this cut contain basis vector `i`?
    pub fn covers(self, i: i64) -> bool {
        match self {
            Cut::NegInf => false,
            Cut::At(c) => i <= c,
            Cut::PosInf => true,
        }
    }

    /// Largest index covered by the projection (`None` = unbounded).
    pub fn upper_index(self) -> Option<i64> {
        match self {
            Cut::NegInf => Some(i64::MIN),
            Cut::At(c) => Some(c),
            Cut::PosInf => None,
        }
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cut::NegInf => write!(f, "0"),
            Cut::At(c) => write!(f, "P_{c}"),
            Cut::PosInf => write!(f, "I"),
        }
    }
}

impl Serialize for Cut {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cut::NegInf => s.serialize_str("-inf"),
            Cut::At(c) => s.serialize_i64(*c),
            Cut::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cut {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(c) => Ok(Cut::At(c)),
            Raw::Str(s) => match s.as_str() {
                "-inf" => Ok(Cut::NegInf),
                "+inf" | "inf" => Ok(Cut::PosInf),
                other => other
                    .parse::<i64>()
                    .map(Cut::At)
                    .map_err(|_| serde::de::Error::custom(format!("bad cut `{other}`"))),
            },
        }
    }
}

/// Interior cut descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CutSet {
    All,
    Explicit(Vec<i64>),
}

impl Serialize for CutSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CutSet::All => s.serialize_str("all"),
            CutSet::Explicit(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CutSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<i64>),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(CutSet::Explicit(v)),
            Raw::Str(s) if s == "all" => Ok(CutSet::All),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad cut set `{s}`"))),
        }
    }
}

/// Nest descriptor document: `{"basis": "N"|"Z", "cuts": "all" | [int,…]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestDescriptor {
    pub basis: Basis,
    pub cuts: CutSet,
}

/// Dimension of a projection difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim {
    Finite(u64),
    Infinite,
}

/// A gap between consecutive cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomInterval {
    pub lo: Cut,
    pub hi: Cut,
    pub dimension: Dim,
}

/// The atoms of a nest. Maximal nests have infinitely many one-dimensional
/// atoms, so they are described rather than listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atoms {
    Finite(Vec<AtomInterval>),
    /// Every singleton `{n}` with `n ≥ from` (`None`: every integer).
    Singletons { from: Option<i64> },
}

impl Atoms {
    /// Atoms whose index range meets `[lo, hi]`.
    pub fn within(&self, lo: i64, hi: i64) -> Vec<AtomInterval> {
        match self {
            Atoms::Finite(v) => v
                .iter()
                .copied()
                .filter(|a| {
                    let a_lo = a.lo.value().map_or(i64::MIN, |c| c + 1);
                    let a_hi = a.hi.upper_index().unwrap_or(i64::MAX);
                    a_lo <= hi && a_hi >= lo
                })
                .collect(),
            Atoms::Singletons { from } => {
                let start = from.map_or(lo, |f| f.max(lo));
                (start..=hi)
                    .map(|n| AtomInterval {
                        lo: if from == &Some(n) { Cut::NegInf } else { Cut::At(n - 1) },
                        hi: Cut::At(n),
                        dimension: Dim::Finite(1),
                    })
                    .collect()
            }
        }
    }
}

/// A normalized nest. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Nest {
    basis: Basis,
    cuts: CutSet,
}

impl Nest {
    /// Builds a nest from a descriptor, adjoining the bottom and top cuts.
    pub fn new(desc: &NestDescriptor) -> Result<Nest> {
        let cuts = match &desc.cuts {
            CutSet::All => CutSet::All,
            CutSet::Explicit(v) => {
                if v.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::MalformedSpec(format!(
                        "explicit cuts must be strictly increasing: {v:?}"
                    )));
                }
                if desc.basis == Basis::Natural {
                    if let Some(bad) = v.iter().find(|&&c| c < 0) {
                        return Err(Error::IndexMismatch(format!(
                            "negative cut {bad} on the natural-number basis"
                        )));
                    }
                }
                // On ℕ the cut 0 is the zero projection, i.e. the bottom cut.
                let kept = v
                    .iter()
                    .copied()
                    .filter(|&c| desc.basis == Basis::Integer || c >= 1)
                    .collect();
                CutSet::Explicit(kept)
            }
        };
        Ok(Nest { basis: desc.basis, cuts })
    }

    /// The maximal atomic nest `{0, P_1, P_2, …, I}` on ℕ.
    pub fn maximal_natural() -> Nest {
        Nest { basis: Basis::Natural, cuts: CutSet::All }
    }

    /// Every cut `P_c`, `c ∈ ℤ`, with the limits `0` and `I`.
    pub fn maximal_integer() -> Nest {
        Nest { basis: Basis::Integer, cuts: CutSet::All }
    }

    /// The trivial nest `{0, I}`, whose algebra is all bounded operators.
    pub fn trivial(basis: Basis) -> Nest {
        Nest { basis, cuts: CutSet::Explicit(Vec::new()) }
    }

    pub fn explicit(basis: Basis, cuts: &[i64]) -> Result<Nest> {
        Nest::new(&NestDescriptor { basis, cuts: CutSet::Explicit(cuts.to_vec()) })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn cut_set(&self) -> &CutSet {
        &self.cuts
    }

    pub fn descriptor(&self) -> NestDescriptor {
        NestDescriptor { basis: self.basis, cuts: self.cuts.clone() }
    }

    pub fn is_all(&self) -> bool {
        matches!(self.cuts, CutSet::All)
    }

    /// Maps a cut to its normal form (`At(c)` with `c ≤ 0` on ℕ is the bottom).
    pub fn normalize(&self, cut: Cut) -> Cut {
        match (self.basis, cut) {
            (Basis::Natural, Cut::At(c)) if c <= 0 => Cut::NegInf,
            _ => cut,
        }
    }

    pub fn contains(&self, cut: Cut) -> bool {
        match self.normalize(cut) {
            Cut::NegInf | Cut::PosInf => true,
            Cut::At(c) => match &self.cuts {
                CutSet::All => true,
                CutSet::Explicit(v) => v.binary_search(&c).is_ok(),
            },
        }
    }

    fn check(&self, cut: Cut) -> Result<Cut> {
        let cut = self.normalize(cut);
        if self.contains(cut) {
            Ok(cut)
        } else {
            Err(Error::CutNotInNest(cut.to_string()))
        }
    }

    /// Largest cut whose projection does not contain index `x + 1`, i.e. the
    /// largest cut with value `≤ x`.
    pub fn floor_cut(&self, x: i64) -> Cut {
        if self.basis == Basis::Natural && x <= 0 {
            return Cut::NegInf;
        }
        match &self.cuts {
            CutSet::All => Cut::At(x),
            CutSet::Explicit(v) => match v.partition_point(|&c| c <= x) {
                0 => Cut::NegInf,
                k => Cut::At(v[k - 1]),
            },
        }
    }

    /// Smallest cut with value `≥ x`.
    pub fn ceil_cut(&self, x: i64) -> Cut {
        if self.basis == Basis::Natural && x <= 0 {
            return Cut::NegInf;
        }
        match &self.cuts {
            CutSet::All => Cut::At(x),
            CutSet::Explicit(v) => match v.partition_point(|&c| c < x) {
                k if k == v.len() => Cut::PosInf,
                k => Cut::At(v[k]),
            },
        }
    }

    /// `N_-`: join of the strictly smaller cuts (the cut itself when it is a
    /// limit from below).
    pub fn pred(&self, cut: Cut) -> Result<Cut> {
        let cut = self.check(cut)?;
        Ok(match cut {
            Cut::NegInf => Cut::NegInf,
            Cut::At(c) => self.floor_cut(c - 1),
            Cut::PosInf => match &self.cuts {
                CutSet::All => Cut::PosInf,
                CutSet::Explicit(v) => v.last().map_or(Cut::NegInf, |&c| Cut::At(c)),
            },
        })
    }

    /// `N_+`: meet of the strictly larger cuts.
    pub fn succ(&self, cut: Cut) -> Result<Cut> {
        let cut = self.check(cut)?;
        Ok(match cut {
            Cut::PosInf => Cut::PosInf,
            Cut::At(c) => self.ceil_cut(c + 1),
            Cut::NegInf => match (&self.cuts, self.basis) {
                (CutSet::All, Basis::Integer) => Cut::NegInf,
                (CutSet::All, Basis::Natural) => Cut::At(1),
                (CutSet::Explicit(v), _) => v.first().map_or(Cut::PosInf, |&c| Cut::At(c)),
            },
        })
    }

    pub fn pred_succ(&self, cut: Cut) -> Result<(Cut, Cut)> {
        Ok((self.pred(cut)?, self.succ(cut)?))
    }

    /// Dimension of the range of `P_hi − P_lo` for cuts `lo ≤ hi`.
    pub fn gap_dimension(&self, lo: Cut, hi: Cut) -> Dim {
        let lo = self.normalize(lo);
        let hi = self.normalize(hi);
        if hi <= lo {
            return Dim::Finite(0);
        }
        let lo_index = match (lo, self.basis) {
            (Cut::NegInf, Basis::Natural) => Some(0),
            (Cut::At(c), _) => Some(c),
            _ => None,
        };
        match (lo_index, hi) {
            (Some(l), Cut::At(h)) => Dim::Finite((h - l) as u64),
            _ => Dim::Infinite,
        }
    }

    pub fn atoms(&self) -> Atoms {
        match &self.cuts {
            CutSet::All => Atoms::Singletons { from: self.basis.first_index() },
            CutSet::Explicit(v) => {
                let mut chain = vec![Cut::NegInf];
                chain.extend(v.iter().map(|&c| Cut::At(c)));
                chain.push(Cut::PosInf);
                Atoms::Finite(
                    chain
                        .windows(2)
                        .map(|w| AtomInterval {
                            lo: w[0],
                            hi: w[1],
                            dimension: self.gap_dimension(w[0], w[1]),
                        })
                        .collect(),
                )
            }
        }
    }

    /// Cuts strictly between `lo` and `hi`. Exhaustive when there are at most
    /// `max` of them; otherwise a sample consisting of the cuts nearest to each
    /// end (and dyadic probes towards an infinite end). The flag reports
    /// exhaustiveness.
    pub fn cuts_between(&self, lo: Cut, hi: Cut, max: usize) -> (Vec<Cut>, bool) {
        let lo = self.normalize(lo);
        let hi = self.normalize(hi);
        match &self.cuts {
            CutSet::Explicit(v) => (
                v.iter().map(|&c| Cut::At(c)).filter(|&c| c > lo && c < hi).collect(),
                true,
            ),
            CutSet::All => {
                let first = match lo {
                    Cut::NegInf => self.basis.first_index(),
                    Cut::At(c) => Some(c + 1),
                    Cut::PosInf => return (Vec::new(), true),
                };
                let last = match hi {
                    Cut::PosInf => None,
                    Cut::At(c) => Some(c - 1),
                    Cut::NegInf => return (Vec::new(), true),
                };
                match (first, last) {
                    (Some(f), Some(l)) if l < f => (Vec::new(), true),
                    (Some(f), Some(l)) if ((l - f) as u64) < max as u64 => {
                        ((f..=l).map(Cut::At).collect(), true)
                    }
                    _ => (sample_range(first, last, max), false),
                }
            }
        }
    }

    /// Canonical text rendering, e.g. `Nest(N; cuts=all)`.
    pub fn render(&self) -> String {
        match &self.cuts {
            CutSet::All => format!("Nest({}; cuts=all)", self.basis),
            CutSet::Explicit(v) => {
                let list: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                format!("Nest({}; cuts=[{}])", self.basis, list.join(","))
            }
        }
    }
}

impl fmt::Display for Nest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn sample_range(first: Option<i64>, last: Option<i64>, max: usize) -> Vec<Cut> {
    let half = (max / 2).max(1) as i64;
    let mut out = Vec::new();
    let anchor_lo = first.or(last.map(|l| l - 2 * half)).unwrap_or(-half);
    let anchor_hi = last.or(first.map(|f| f + 2 * half)).unwrap_or(half);
    for i in 0..half {
        out.push(anchor_lo + i);
        out.push(anchor_hi - i);
    }
    for k in 0..24 {
        let step = 1i64 << k;
        if first.is_none() {
            out.push(anchor_lo - step);
        }
        if last.is_none() {
            out.push(anchor_hi + step);
        }
    }
    out.retain(|&c| first.is_none_or(|f| c >= f) && last.is_none_or(|l| c <= l));
    out.sort_unstable();
    out.dedup();
    out.into_iter().map(Cut::At).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_zero() -> Nest {
        Nest::explicit(Basis::Integer, &[0]).unwrap()
    }

    #[test]
    fn descriptor_parses_and_normalizes() {
        let d: NestDescriptor = serde_json::from_str(r#"{"basis":"N","cuts":"all"}"#).unwrap();
        assert_eq!(Nest::new(&d).unwrap(), Nest::maximal_natural());
        let d: NestDescriptor = serde_json::from_str(r#"{"basis":"N","cuts":[0,2]}"#).unwrap();
        let n = Nest::new(&d).unwrap();
        assert_eq!(n.cut_set(), &CutSet::Explicit(vec![2]));
        let again = Nest::new(&n.descriptor()).unwrap();
        assert_eq!(again, n);
        assert_eq!(Nest::maximal_natural().render(), "Nest(N; cuts=all)");
    }

    #[test]
    fn malformed_descriptors_are_rejected() {
        let bad = NestDescriptor { basis: Basis::Integer, cuts: CutSet::Explicit(vec![3, 1]) };
        assert!(matches!(Nest::new(&bad), Err(Error::MalformedSpec(_))));
        let dup = NestDescriptor { basis: Basis::Integer, cuts: CutSet::Explicit(vec![1, 1]) };
        assert!(matches!(Nest::new(&dup), Err(Error::MalformedSpec(_))));
        let neg = NestDescriptor { basis: Basis::Natural, cuts: CutSet::Explicit(vec![-1]) };
        assert!(matches!(Nest::new(&neg), Err(Error::IndexMismatch(_))));
    }

    #[test]
    fn pred_succ_examples() {
        let n = Nest::maximal_natural();
        assert_eq!(n.pred_succ(Cut::At(3)).unwrap(), (Cut::At(2), Cut::At(4)));
        assert_eq!(n.pred_succ(Cut::At(1)).unwrap(), (Cut::NegInf, Cut::At(2)));
        // I is a limit from below on the maximal nest.
        assert_eq!(n.pred(Cut::PosInf).unwrap(), Cut::PosInf);
        let t = Nest::trivial(Basis::Natural);
        assert_eq!(t.pred_succ(Cut::PosInf).unwrap(), (Cut::NegInf, Cut::PosInf));
        assert_eq!(z_zero().pred_succ(Cut::At(0)).unwrap(), (Cut::NegInf, Cut::PosInf));
        assert!(matches!(t.pred(Cut::At(4)), Err(Error::CutNotInNest(_))));
        let all_z = Nest::new(&NestDescriptor { basis: Basis::Integer, cuts: CutSet::All }).unwrap();
        assert_eq!(all_z.succ(Cut::NegInf).unwrap(), Cut::NegInf);
    }

    #[test]
    fn atoms_examples() {
        assert_eq!(
            Nest::maximal_natural().atoms().within(1, 3).iter().map(|a| a.dimension).collect::<Vec<_>>(),
            vec![Dim::Finite(1); 3]
        );
        match Nest::trivial(Basis::Natural).atoms() {
            Atoms::Finite(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].dimension, Dim::Infinite);
            }
            other => panic!("unexpected {other:?}"),
        }
        match z_zero().atoms() {
            Atoms::Finite(v) => {
                assert_eq!(v.len(), 2);
                assert!(v.iter().all(|a| a.dimension == Dim::Infinite));
            }
            other => panic!("unexpected {other:?}"),
        }
        let n = Nest::explicit(Basis::Natural, &[2, 5]).unwrap();
        match n.atoms() {
            Atoms::Finite(v) => assert_eq!(
                v.iter().map(|a| a.dimension).collect::<Vec<_>>(),
                vec![Dim::Finite(2), Dim::Finite(3), Dim::Infinite]
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn floor_and_ceil() {
        let n = Nest::explicit(Basis::Integer, &[0, 5]).unwrap();
        assert_eq!(n.floor_cut(4), Cut::At(0));
        assert_eq!(n.floor_cut(-1), Cut::NegInf);
        assert_eq!(n.ceil_cut(1), Cut::At(5));
        assert_eq!(n.ceil_cut(6), Cut::PosInf);
        assert_eq!(Nest::maximal_natural().floor_cut(0), Cut::NegInf);
    }

    #[test]
    fn cuts_between_samples_infinite_ranges() {
        let n = Nest::maximal_natural();
        let (v, exhaustive) = n.cuts_between(Cut::At(2), Cut::At(6), 64);
        assert!(exhaustive);
        assert_eq!(v, vec![Cut::At(3), Cut::At(4), Cut::At(5)]);
        let (v, exhaustive) = n.cuts_between(Cut::NegInf, Cut::PosInf, 16);
        assert!(!exhaustive);
        assert_eq!(v[0], Cut::At(1));
        assert!(v.iter().all(|c| c.value().unwrap() >= 1));
    }
}
