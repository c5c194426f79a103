use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nestcalc::catalog;
use nestcalc::constructions::{
    counterexample_refuter, greedy_subsequence, noncompact_certificate_check, recompute_residual, witness_sequences,
};
use nestcalc::expr::OperatorExpr;
use nestcalc::ideal::{reconstruction, FiniteSubnest};
use nestcalc::nest::{Basis, Cut, Nest};
use nestcalc::numerics::{op_norm, singular_values, Window};
use nestcalc::operator::{render_nf, Operator};
use nestcalc::rule::SeqRule;
use nestcalc::task::MultiplicationTask;

fn window(n: usize) -> Window {
    let (lo, hi) = Basis::Natural.window(n);
    Window::new(lo, hi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certificate_subselections_reverify(mask in proptest::collection::vec(any::<bool>(), 12)) {
        let task = MultiplicationTask::from_exprs(Nest::maximal_natural(), OperatorExpr::Identity, OperatorExpr::Identity).unwrap();
        let seqs = witness_sequences(&task, 1.0, 12).unwrap();
        let cert = greedy_subsequence(&task, &seqs, 12, 12).unwrap();
        let keep: Vec<usize> = (0..12).filter(|&k| mask[k]).collect();
        prop_assume!(!keep.is_empty());
        prop_assert!(noncompact_certificate_check(&cert.restrict(&keep), 1.0));
    }

    #[test]
    fn reconstruction_is_exact(seed in any::<u64>(), cuts in proptest::collection::btree_set(1i64..64, 0..6)) {
        let cuts: Vec<i64> = cuts.into_iter().collect();
        let nest = Nest::explicit(Basis::Natural, &cuts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Operator::new(catalog::random_member(&nest, &mut rng), Basis::Natural).unwrap();
        let f = FiniteSubnest::new(&nest, &cuts.iter().map(|&c| Cut::At(c)).collect::<Vec<_>>()).unwrap();
        let w = window(96);
        let diff = (render_nf(&reconstruction(a.nf(), &f), w) - render_nf(a.nf(), w)).amax();
        prop_assert!(diff <= 1e-12);
    }

    #[test]
    fn refuter_residual_recomputes(ratio in 0.05f64..0.95) {
        let g = OperatorExpr::diag(SeqRule::geometric(ratio));
        let pair = (Operator::new(g.clone(), Basis::Natural).unwrap(), Operator::new(g, Basis::Natural).unwrap());
        let r = counterexample_refuter(std::slice::from_ref(&pair), 256).unwrap();
        prop_assert!(r.residual >= 0.5 / r.r as f64);
        prop_assert!((recompute_residual(&[pair], r.r, r.s) - r.residual).abs() <= 1e-10);
    }

    #[test]
    fn op_norm_brackets_diagonals(d in proptest::collection::vec(-3.0f64..3.0, 1..20)) {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
        let exact = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let n = op_norm(&m);
        prop_assert!(n.lo <= exact + 1e-9 && exact <= n.hi + 1e-9);
    }

    #[test]
    fn singular_values_are_adjoint_invariant(entries in proptest::collection::vec(-1.0f64..1.0, 36)) {
        let m = DMatrix::from_vec(6, 6, entries);
        let s = singular_values(&m, 4);
        let t = singular_values(&m.transpose(), 4);
        prop_assert!(s.windows(2).all(|w| w[0] + 1e-12 >= w[1]));
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() <= 1e-8 * x.max(1.0));
        }
    }

    #[test]
    fn products_render_as_matrix_products(seed in any::<u64>()) {
        let nest = Nest::maximal_natural();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Operator::new(catalog::random_member(&nest, &mut rng), Basis::Natural).unwrap();
        let b = Operator::new(catalog::random_member(&nest, &mut rng), Basis::Natural).unwrap();
        let w = window(48);
        let direct = render_nf(a.mul(&b).nf(), w);
        let product = render_nf(a.nf(), w) * render_nf(b.nf(), w);
        prop_assert!((direct - product).amax() <= 1e-12);
    }
}
