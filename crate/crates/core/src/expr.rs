//! Operator documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nest::{Basis, Cut};
use crate::normal::NormalForm;
use crate::rule::{Rule, SeqRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `e_i ↦ w(i) e_{i+steps}`
    #[default]
    Raise,
    /// `e_i ↦ w(i) e_{i−steps}`
    Lower,
}

fn one() -> i64 {
    1
}

fn is_one(x: &i64) -> bool {
    *x == 1
}

/// Symbolic operator expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorExpr {
    Zero,
    Identity,
    Diag { rule: SeqRule },
    /// `h ↦ ⟨h, e⟩ f`
    RankOne { e: SeqRule, f: SeqRule },
    Wshift {
        rule: SeqRule,
        #[serde(default)]
        direction: Direction,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        steps: i64,
    },
    /// `e_i ↦ w(i) e_{center−i}`
    Flip { center: i64, rule: SeqRule },
    /// Projection onto indices in `(lo, hi]`.
    IntervalProj { lo: Cut, hi: Cut },
    Sum { l: Box<OperatorExpr>, r: Box<OperatorExpr> },
    Scale { factor: f64, x: Box<OperatorExpr> },
    Product { l: Box<OperatorExpr>, r: Box<OperatorExpr> },
    Adjoint { x: Box<OperatorExpr> },
    /// Dense block on rows and columns `window.0 ..= window.1`.
    FiniteMatrix { window: (i64, i64), entries: Vec<Vec<f64>> },
}

impl OperatorExpr {
    pub fn diag(rule: SeqRule) -> OperatorExpr {
        OperatorExpr::Diag { rule }
    }

    pub fn rank_one(e: SeqRule, f: SeqRule) -> OperatorExpr {
        OperatorExpr::RankOne { e, f }
    }

    pub fn shift(rule: SeqRule, direction: Direction) -> OperatorExpr {
        OperatorExpr::Wshift { rule, direction, steps: 1 }
    }

    pub fn interval(lo: Cut, hi: Cut) -> OperatorExpr {
        OperatorExpr::IntervalProj { lo, hi }
    }

    /// Projection onto indices `≤ c`.
    pub fn cut(c: Cut) -> OperatorExpr {
        OperatorExpr::interval(Cut::NegInf, c)
    }

    /// Projection onto indices `> c`.
    pub fn cut_complement(c: Cut) -> OperatorExpr {
        OperatorExpr::interval(c, Cut::PosInf)
    }

    pub fn sum(l: OperatorExpr, r: OperatorExpr) -> OperatorExpr {
        OperatorExpr::Sum { l: Box::new(l), r: Box::new(r) }
    }

    pub fn product(l: OperatorExpr, r: OperatorExpr) -> OperatorExpr {
        OperatorExpr::Product { l: Box::new(l), r: Box::new(r) }
    }

    /// Left-nested product of several factors.
    pub fn chain(factors: Vec<OperatorExpr>) -> OperatorExpr {
        factors
            .into_iter()
            .reduce(OperatorExpr::product)
            .unwrap_or(OperatorExpr::Identity)
    }

    pub fn scale(factor: f64, x: OperatorExpr) -> OperatorExpr {
        OperatorExpr::Scale { factor, x: Box::new(x) }
    }

    pub fn adjoint(x: OperatorExpr) -> OperatorExpr {
        OperatorExpr::Adjoint { x: Box::new(x) }
    }

    /// Sparse matrix-unit sum `Σ v · E_{ij}`.
    pub fn matrix_units(units: &[(i64, i64, f64)]) -> OperatorExpr {
        units
            .iter()
            .map(|&(i, j, v)| {
                OperatorExpr::scale(v, OperatorExpr::rank_one(SeqRule::delta(j), SeqRule::delta(i)))
            })
            .reduce(OperatorExpr::sum)
            .unwrap_or(OperatorExpr::Zero)
    }

    /// Normal form over a basis.
    pub fn normal_form(&self, basis: Basis) -> Result<NormalForm> {
        Ok(match self {
            OperatorExpr::Zero => NormalForm::zero(basis),
            OperatorExpr::Identity => NormalForm::identity(basis),
            OperatorExpr::Diag { rule } => NormalForm::diag(basis, Rule::from_doc(rule)?),
            OperatorExpr::RankOne { e, f } => {
                let e = square_summable(e)?;
                let f = square_summable(f)?;
                NormalForm::rank_one(basis, e, f)
            }
            OperatorExpr::Wshift { rule, direction, steps } => {
                if *steps < 0 {
                    return Err(Error::Schema(format!("wshift steps must be nonnegative, got {steps}")));
                }
                let k = match direction {
                    Direction::Raise => *steps,
                    Direction::Lower => -*steps,
                };
                NormalForm::band(basis, k, Rule::from_doc(rule)?)
            }
            OperatorExpr::Flip { center, rule } => NormalForm::flip(basis, *center, Rule::from_doc(rule)?),
            OperatorExpr::IntervalProj { lo, hi } => NormalForm::interval(basis, *lo, *hi),
            OperatorExpr::Sum { l, r } => l.normal_form(basis)?.add(&r.normal_form(basis)?),
            OperatorExpr::Scale { factor, x } => {
                if !factor.is_finite() {
                    return Err(Error::UnboundedRule(format!("scale factor {factor} is not finite")));
                }
                x.normal_form(basis)?.scale(*factor)
            }
            OperatorExpr::Product { l, r } => l.normal_form(basis)?.mul(&r.normal_form(basis)?),
            OperatorExpr::Adjoint { x } => x.normal_form(basis)?.adjoint(),
            OperatorExpr::FiniteMatrix { window, entries } => {
                let (lo, hi) = *window;
                let n = (hi - lo + 1).max(0) as usize;
                if entries.len() != n || entries.iter().any(|r| r.len() != n) {
                    return Err(Error::Schema(format!(
                        "finite_matrix over window [{lo},{hi}] needs {n}x{n} entries"
                    )));
                }
                let mut map = BTreeMap::new();
                for (a, row) in entries.iter().enumerate() {
                    for (b, &v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::UnboundedRule("finite_matrix entry is not finite".into()));
                        }
                        if v == 0.0 {
                            continue;
                        }
                        let (i, j) = (lo + a as i64, lo + b as i64);
                        if !basis.contains_index(i) || !basis.contains_index(j) {
                            return Err(Error::IndexMismatch(format!(
                                "finite_matrix entry ({i},{j}) lies outside the {basis:?} basis"
                            )));
                        }
                        map.insert((i, j), v);
                    }
                }
                NormalForm::finite(basis, map)
            }
        })
    }

    /// Canonical document of a normal form.
    pub fn from_normal_form(nf: &NormalForm) -> OperatorExpr {
        let mut parts = Vec::new();
        for (&k, w) in nf.bands() {
            let rule = w.to_doc();
            parts.push(match k {
                0 if w.is_constant(1.0) => OperatorExpr::Identity,
                0 => OperatorExpr::Diag { rule },
                k if k > 0 => OperatorExpr::Wshift { rule, direction: Direction::Raise, steps: k },
                k => OperatorExpr::Wshift { rule, direction: Direction::Lower, steps: -k },
            });
        }
        for (&center, w) in nf.flips() {
            parts.push(OperatorExpr::Flip { center, rule: w.to_doc() });
        }
        for (e, f) in nf.rank_ones() {
            parts.push(OperatorExpr::RankOne { e: e.to_doc(), f: f.to_doc() });
        }
        let fin = nf.finite_entries();
        if !fin.is_empty() {
            let lo = fin.keys().map(|&(i, j)| i.min(j)).min().unwrap();
            let hi = fin.keys().map(|&(i, j)| i.max(j)).max().unwrap();
            let n = (hi - lo + 1) as usize;
            if n <= 64 {
                let mut entries = vec![vec![0.0; n]; n];
                for (&(i, j), &v) in fin {
                    entries[(i - lo) as usize][(j - lo) as usize] = v;
                }
                parts.push(OperatorExpr::FiniteMatrix { window: (lo, hi), entries });
            } else {
                let units: Vec<_> = fin.iter().map(|(&(i, j), &v)| (i, j, v)).collect();
                parts.push(OperatorExpr::matrix_units(&units));
            }
        }
        parts.into_iter().reduce(OperatorExpr::sum).unwrap_or(OperatorExpr::Zero)
    }

    pub fn from_json(s: &str) -> Result<OperatorExpr> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator documents always serialize")
    }
}

fn square_summable(doc: &SeqRule) -> Result<Rule> {
    let r = Rule::from_doc(doc)?;
    if !r.square_summable() {
        return Err(Error::UnboundedRule(
            "rank-one vectors must be square-summable (entries must vanish at infinity)".into(),
        ));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_round_trip() {
        let docs = [
            r#"{"op":"diag","rule":{"kind":"harmonic"}}"#,
            r#"{"op":"identity"}"#,
            r#"{"op":"rank_one","e":{"kind":"finite","table":{"2":1}},"f":{"kind":"finite","table":{"1":1}}}"#,
            r#"{"op":"wshift","rule":{"kind":"const","value":1},"direction":"lower"}"#,
            r#"{"op":"interval_proj","lo":"-inf","hi":0}"#,
            r#"{"op":"flip","center":1,"rule":{"kind":"const","value":1}}"#,
            r#"{"op":"finite_matrix","window":[1,2],"entries":[[0,1],[0,0]]}"#,
            r#"{"op":"adjoint","x":{"op":"scale","factor":2,"x":{"op":"zero"}}}"#,
        ];
        for d in docs {
            let e = OperatorExpr::from_json(d).unwrap();
            let again = OperatorExpr::from_json(&e.to_json()).unwrap();
            assert_eq!(e, again);
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(OperatorExpr::from_json(r#"{"op":"inverse"}"#), Err(Error::Schema(_))));
        let unbounded = OperatorExpr::rank_one(SeqRule::constant(1.0), SeqRule::delta(1));
        assert!(matches!(unbounded.normal_form(Basis::Natural), Err(Error::UnboundedRule(_))));
        let geo = OperatorExpr::diag(SeqRule::geometric(2.0));
        assert!(matches!(geo.normal_form(Basis::Natural), Err(Error::UnboundedRule(_))));
        let bad = OperatorExpr::FiniteMatrix { window: (0, 1), entries: vec![vec![1.0, 0.0], vec![0.0, 0.0]] };
        assert!(matches!(bad.normal_form(Basis::Natural), Err(Error::IndexMismatch(_))));
    }

    #[test]
    fn canonical_document_denotes_the_same_operator() {
        let e = OperatorExpr::sum(
            OperatorExpr::product(
                OperatorExpr::diag(SeqRule::harmonic()),
                OperatorExpr::shift(SeqRule::constant(1.0), Direction::Lower),
            ),
            OperatorExpr::matrix_units(&[(1, 3, 2.0)]),
        );
        let nf = e.normal_form(Basis::Natural).unwrap();
        let back = OperatorExpr::from_normal_form(&nf).normal_form(Basis::Natural).unwrap();
        for i in 1..12 {
            for j in 1..12 {
                assert!((nf.entry(i, j) - back.entry(i, j)).abs() < 1e-12);
            }
        }
    }
}
