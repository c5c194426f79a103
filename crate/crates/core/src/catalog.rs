//! Named operators, nests and tasks used by the verification suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Direction, OperatorExpr};
use crate::nest::{Basis, Cut, Nest};
use crate::operator::{alg_membership, Operator};
use crate::rule::SeqRule;
use crate::task::MultiplicationTask;

#[derive(Debug, Clone)]
pub struct CatalogTask {
    pub name: String,
    pub task: MultiplicationTask,
}

pub fn even_plateau() -> SeqRule {
    SeqRule::Parity { even: Box::new(SeqRule::constant(1.0)), odd: Box::new(SeqRule::harmonic()) }
}

fn shift(rule: SeqRule, direction: Direction) -> OperatorExpr {
    OperatorExpr::Wshift { rule, direction, steps: 1 }
}

/// Named grammar operators; the same list serves both bases.
pub fn operators(basis: Basis) -> Vec<(&'static str, OperatorExpr)> {
    let origin = match basis {
        Basis::Natural => 1,
        Basis::Integer => 0,
    };
    let d = SeqRule::delta;
    vec![
        ("zero", OperatorExpr::Zero),
        ("identity", OperatorExpr::Identity),
        ("harmonic", OperatorExpr::diag(SeqRule::harmonic())),
        ("geometric", OperatorExpr::diag(SeqRule::geometric(0.5))),
        ("plateau", OperatorExpr::diag(even_plateau())),
        ("lower_shift", shift(SeqRule::constant(1.0), Direction::Lower)),
        ("raise_shift", shift(SeqRule::constant(1.0), Direction::Raise)),
        ("harmonic_raise", shift(SeqRule::harmonic(), Direction::Raise)),
        ("unit_diag", OperatorExpr::rank_one(d(origin), d(origin))),
        ("unit_up", OperatorExpr::rank_one(d(origin + 1), d(origin))),
        ("unit_down", OperatorExpr::rank_one(d(origin), d(origin + 1))),
        ("window", OperatorExpr::interval(Cut::At(origin - 1), Cut::At(origin + 7))),
        ("tail", OperatorExpr::cut_complement(Cut::At(origin + 3))),
        ("head", OperatorExpr::cut(Cut::At(origin))),
        (
            "identity_plus_harmonic",
            OperatorExpr::sum(OperatorExpr::Identity, OperatorExpr::diag(SeqRule::harmonic())),
        ),
    ]
}

pub fn named_operator(basis: Basis, name: &str) -> OperatorExpr {
    operators(basis)
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, x)| x)
        .unwrap_or_else(|| panic!("unknown catalog operator {name}"))
}

/// Nests of the suite: the maximal and trivial nests on ℕ, `{0, P_0, I}`
/// and the maximal nest on ℤ, and `{0, P_2, P_5, I}` on ℕ.
pub fn nests() -> Vec<(&'static str, Nest)> {
    vec![
        ("maximal_n", Nest::maximal_natural()),
        ("trivial_n", Nest::trivial(Basis::Natural)),
        ("split_z", Nest::explicit(Basis::Integer, &[0]).expect("valid nest")),
        ("maximal_z", Nest::maximal_integer()),
        ("two_cuts_n", Nest::explicit(Basis::Natural, &[2, 5]).expect("valid nest")),
    ]
}

fn member(nest: &Nest, x: &OperatorExpr) -> bool {
    Operator::new(x.clone(), nest.basis()).is_ok_and(|op| alg_membership(nest, &op).is_member())
}

/// Every pair of catalog operators lying in `Alg N`, over every nest.
pub fn tasks() -> Vec<CatalogTask> {
    let mut out = Vec::new();
    for (nest_name, nest) in nests() {
        let ops: Vec<_> = operators(nest.basis()).into_iter().filter(|(_, x)| member(&nest, x)).collect();
        for (an, a) in &ops {
            for (bn, b) in &ops {
                let task = MultiplicationTask::from_exprs(nest.clone(), a.clone(), b.clone()).expect("members");
                out.push(CatalogTask { name: format!("{nest_name}:{an}*{bn}"), task });
            }
        }
    }
    out
}

fn pairs(nest: Nest, names: &[&str], count: usize) -> Vec<CatalogTask> {
    let basis = nest.basis();
    let mut out = Vec::new();
    for a in names {
        for b in names {
            if out.len() == count {
                return out;
            }
            let task =
                MultiplicationTask::from_exprs(nest.clone(), named_operator(basis, a), named_operator(basis, b))
                    .expect("members");
            out.push(CatalogTask { name: format!("{a}*{b}"), task });
        }
    }
    out
}

/// Twenty nonzero tasks on the trivial nest `{0, I}`.
pub fn trivial_nest_cases() -> Vec<CatalogTask> {
    pairs(
        Nest::trivial(Basis::Natural),
        &["identity", "harmonic", "geometric", "unit_down", "raise_shift"],
        20,
    )
}

/// Twenty tasks on the maximal ℕ-nest; the zero ones are dropped by callers.
pub fn maximal_nest_cases() -> Vec<CatalogTask> {
    pairs(
        Nest::maximal_natural(),
        &["identity", "harmonic", "geometric", "unit_diag", "tail"],
        20,
    )
}

fn random_leaf(ops: &[(&'static str, OperatorExpr)], rng: &mut ChaCha8Rng) -> OperatorExpr {
    ops[rng.gen_range(0..ops.len())].1.clone()
}

fn random_expr(ops: &[(&'static str, OperatorExpr)], rng: &mut ChaCha8Rng) -> OperatorExpr {
    let leaf = random_leaf(ops, rng);
    match rng.gen_range(0..4) {
        0 => OperatorExpr::sum(leaf, OperatorExpr::scale(rng.gen_range(-1.0..1.0), random_leaf(ops, rng))),
        1 => OperatorExpr::product(leaf, random_leaf(ops, rng)),
        _ => leaf,
    }
}

/// A member of `Alg N` drawn from sums and products of catalog operators.
pub fn random_member(nest: &Nest, rng: &mut ChaCha8Rng) -> OperatorExpr {
    let ops: Vec<_> = operators(nest.basis()).into_iter().filter(|(_, x)| member(nest, x)).collect();
    loop {
        let x = random_expr(&ops, rng);
        if member(nest, &x) {
            return x;
        }
    }
}

/// `count` seeded random tasks spread across the given nests.
pub fn random_tasks(nests: &[Nest], count: usize, seed: u64) -> Vec<CatalogTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let nest = nests[k % nests.len()].clone();
            let a = random_member(&nest, &mut rng);
            let b = random_member(&nest, &mut rng);
            let task = MultiplicationTask::from_exprs(nest, a, b).expect("members");
            CatalogTask { name: format!("random_{k}"), task }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_builds() {
        let all = tasks();
        assert!(all.len() > 100);
        assert_eq!(trivial_nest_cases().len(), 20);
        assert_eq!(maximal_nest_cases().len(), 20);
        let r = random_tasks(&[Nest::maximal_natural()], 5, 1);
        assert_eq!(r.len(), 5);
        let again = random_tasks(&[Nest::maximal_natural()], 5, 1);
        assert_eq!(r[3].task.to_doc(), again[3].task.to_doc());
    }
}
