//! Multiplication tasks `x ↦ a x b` on a nest algebra and the zero test.

use serde::{Deserialize, Serialize};

use crate::compactness::{boundaries, BoundaryProjections};
use crate::error::{Error, Result};
use crate::expr::OperatorExpr;
use crate::nest::{Cut, Nest, NestDescriptor};
use crate::operator::{alg_membership, nonzero_entry, rank_one_membership, Membership, Operator};
use crate::rule::{Extent, Rule, SeqRule};

/// Task document `{nest, a, b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDoc {
    pub nest: NestDescriptor,
    pub a: OperatorExpr,
    pub b: OperatorExpr,
}

#[derive(Debug, Clone)]
pub struct MultiplicationTask {
    nest: Nest,
    a: Operator,
    b: Operator,
}

impl MultiplicationTask {
    /// Builds a task, rejecting symbols outside `Alg N`.
    pub fn new(nest: Nest, a: Operator, b: Operator) -> Result<MultiplicationTask> {
        for (name, op) in [("a", &a), ("b", &b)] {
            if op.basis() != nest.basis() {
                return Err(Error::IndexMismatch(format!("{name} is built over a different basis")));
            }
            match alg_membership(&nest, op) {
                Membership::Member => {}
                Membership::NonMember { witness } => {
                    return Err(Error::NotInAlgebra(format!(
                        "{name} has entry {} at ({}, {}) below cut {}",
                        witness.value, witness.row, witness.col, witness.cut
                    )))
                }
                Membership::Unknown => {
                    return Err(Error::NotInAlgebra(format!("membership of {name} could not be decided")))
                }
            }
        }
        Ok(MultiplicationTask { nest, a, b })
    }

    pub fn from_exprs(nest: Nest, a: OperatorExpr, b: OperatorExpr) -> Result<MultiplicationTask> {
        let basis = nest.basis();
        MultiplicationTask::new(nest, Operator::new(a, basis)?, Operator::new(b, basis)?)
    }

    pub fn from_doc(doc: &TaskDoc) -> Result<MultiplicationTask> {
        MultiplicationTask::from_exprs(Nest::new(&doc.nest)?, doc.a.clone(), doc.b.clone())
    }

    pub fn to_doc(&self) -> TaskDoc {
        TaskDoc { nest: self.nest.descriptor(), a: self.a.expr().clone(), b: self.b.expr().clone() }
    }

    pub fn nest(&self) -> &Nest {
        &self.nest
    }

    pub fn a(&self) -> &Operator {
        &self.a
    }

    pub fn b(&self) -> &Operator {
        &self.b
    }

    /// `a x b`.
    pub fn apply(&self, x: &Operator) -> Operator {
        self.a.mul(x).mul(&self.b)
    }

    pub fn boundaries(&self) -> Result<BoundaryProjections> {
        boundaries(&self.nest, &self.a, &self.b)
    }
}

/// A rank-one `x = e ⊗ f ∈ Alg N` with `a x b ≠ 0`, and one nonzero entry of `a x b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroWitness {
    pub e_index: i64,
    pub f_index: i64,
    /// Cut `N` with `e ⊥ N_-` and `f ∈ N`.
    pub cut: Cut,
    pub x: OperatorExpr,
    pub image_entry: (i64, i64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTest {
    pub zero: bool,
    pub r_a: Cut,
    pub q_b: Cut,
    pub witness: Option<ZeroWitness>,
}

/// `M_{a,b} = 0` iff `Q_b ≤ R_a`; otherwise a rank-one witness.
pub fn mult_zero_test(task: &MultiplicationTask) -> Result<ZeroTest> {
    let nest = task.nest();
    let (r_a, q_b) = crate::compactness::boundary_rq(nest, task.a(), task.b())?;
    if q_b <= r_a {
        return Ok(ZeroTest { zero: true, r_a, q_b, witness: None });
    }
    let witness = zero_witness(task, r_a);
    Ok(ZeroTest { zero: false, r_a, q_b, witness })
}

fn zero_witness(task: &MultiplicationTask, r_a: Cut) -> Option<ZeroWitness> {
    let nest = task.nest();
    let a = task.a().nf();
    let b = task.b().nf();
    // f = δ_j for a nonzero column j of a just above R_a, e = δ_i for a nonzero
    // row i of b above the predecessor of the cut holding j
    let j = match task.a().column_support().ok()?.0 {
        Extent::At(j) => j,
        _ => {
            let upper = match task.b().row_support().ok()?.1 {
                Extent::At(i) => Some(i),
                _ => None,
            };
            nonzero_entry(&a.restrict((None, None), (None, upper)))?.1
        }
    };
    let n = nest.ceil_cut(j);
    let pred = nest.pred(n).ok()?;
    let above = match pred {
        Cut::At(v) => Some(v + 1),
        _ => None,
    };
    let i = match task.b().row_support().ok()?.1 {
        Extent::At(i) if above.is_none_or(|l| i >= l) => i,
        _ => nonzero_entry(&b.restrict((above, None), (None, None)))?.0,
    };
    let (e, f) = (Rule::delta(i), Rule::delta(j));
    let cut = rank_one_membership(nest, &e, &f)?;
    let x = OperatorExpr::rank_one(SeqRule::delta(i), SeqRule::delta(j));
    let xo = Operator::new(x.clone(), nest.basis()).ok()?;
    let image = task.apply(&xo);
    let image_entry = nonzero_entry(image.nf())?;
    debug_assert!(r_a < n);
    Some(ZeroWitness { e_index: i, f_index: j, cut, x, image_entry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Direction;
    use crate::nest::Basis;

    fn delta_rank_one(e: i64, f: i64) -> OperatorExpr {
        OperatorExpr::rank_one(SeqRule::delta(e), SeqRule::delta(f))
    }

    fn corner() -> OperatorExpr {
        OperatorExpr::chain(vec![
            OperatorExpr::cut(Cut::At(0)),
            OperatorExpr::Flip { center: 1, rule: SeqRule::constant(1.0) },
            OperatorExpr::cut_complement(Cut::At(0)),
        ])
    }

    #[test]
    fn zero_test_examples() {
        let z = Nest::explicit(Basis::Integer, &[0]).unwrap();
        let t = MultiplicationTask::from_exprs(z, corner(), corner()).unwrap();
        assert!(mult_zero_test(&t).unwrap().zero);

        let n = Nest::maximal_natural();
        let t = MultiplicationTask::from_exprs(n.clone(), OperatorExpr::Identity, OperatorExpr::Identity).unwrap();
        let zt = mult_zero_test(&t).unwrap();
        assert!(!zt.zero);
        let w = zt.witness.unwrap();
        assert_eq!((w.e_index, w.f_index), (1, 1));

        let t = MultiplicationTask::from_exprs(n, delta_rank_one(2, 1), delta_rank_one(3, 2)).unwrap();
        let zt = mult_zero_test(&t).unwrap();
        assert_eq!((zt.r_a, zt.q_b), (Cut::At(1), Cut::At(2)));
        assert!(!zt.zero);
        let w = zt.witness.unwrap();
        assert_ne!(w.image_entry.2, 0.0);
    }

    #[test]
    fn non_members_are_rejected() {
        let n = Nest::maximal_natural();
        let raise = OperatorExpr::shift(SeqRule::constant(1.0), Direction::Raise);
        let err = MultiplicationTask::from_exprs(n, raise, OperatorExpr::Identity).unwrap_err();
        assert!(matches!(err, Error::NotInAlgebra(_)));
    }
}
