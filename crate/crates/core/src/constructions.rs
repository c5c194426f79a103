//! Witness sequences, the greedy almost-orthogonal subsequence with its
//! noncompactness certificate, the finite-sum refuter and the ℓ∞ embedding.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::compactness::{classify_compact, norm_interval, Verdict};
use crate::error::{Error, Result};
use crate::expr::OperatorExpr;
use crate::nest::Cut;
use crate::normal::NormalForm;
use crate::numerics::{singular_values, NormInterval};
use crate::operator::{rank_one_membership, Operator};
use crate::rule::{End, Rule, SeqRule};
use crate::task::MultiplicationTask;

/// How far the plateau scan walks before giving up.
pub const WITNESS_SCAN: i64 = 1 << 16;
/// Gram tolerance for witness sequences.
pub const GRAM_TOL: f64 = 1e-10;
/// Numerical slack in certificate comparisons.
pub const CERT_SLACK: f64 = 1e-9;

fn column_norm_lo(nf: &NormalForm, j: i64) -> f64 {
    nf.column(j).l2_norm_bounds(None, None).0
}

/// `count` basis vectors `δ_j` with `‖T δ_j‖ ≥ ε`, walking the column
/// family toward the end carrying the largest tail of `T`.
pub fn orthonormal_witness(t: &Operator, eps: f64, count: usize) -> Result<Vec<SeqRule>> {
    Ok(witness_indices(t.nf(), eps, count)?.into_iter().map(SeqRule::delta).collect())
}

fn witness_indices(nf: &NormalForm, eps: f64, count: usize) -> Result<Vec<i64>> {
    let cv = crate::compactness::classify_nf(nf);
    if cv.verdict != Verdict::NonCompact {
        return Err(Error::NotNonCompact(format!("verdict is {:?}", cv.verdict)));
    }
    let (piece, end, delta) = nf.dominant_tail().expect("noncompact operators carry a tail");
    if delta < eps {
        return Err(Error::WitnessBudgetExhausted(format!("largest tail {delta} is below {eps}")));
    }
    let (start, step) = match end {
        End::Plus => (1, 1),
        End::Minus => (-1, -1),
    };
    let (even, odd) = nf.piece_rule(piece).map_or((delta, delta), |w| w.tail(end));
    let on_plateau = |j: i64| if j.rem_euclid(2) == 0 { even.abs() >= eps } else { odd.abs() >= eps };
    let mut out = Vec::with_capacity(count);
    let mut j = start;
    for _ in 0..WITNESS_SCAN {
        if out.len() == count {
            return Ok(out);
        }
        if on_plateau(j) && column_norm_lo(nf, j) >= eps {
            out.push(j);
        }
        j += step;
    }
    if out.len() == count {
        return Ok(out);
    }
    Err(Error::WitnessBudgetExhausted(format!(
        "found {} of {count} columns with norm ≥ {eps} along {piece:?} at {end:?}",
        out.len()
    )))
}

/// Orthonormal `e_n`, `f_n` with `e_n ⊗ f_n ∈ Alg N`, `‖a f_n‖ ≥ ε` and `‖b^* e_n‖ ≥ ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSequences {
    pub e_seq: Vec<SeqRule>,
    pub f_seq: Vec<SeqRule>,
    pub eps: f64,
}

impl WitnessSequences {
    pub fn len(&self) -> usize {
        self.e_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_seq.is_empty()
    }

    fn rules(&self) -> Result<(Vec<Rule>, Vec<Rule>)> {
        let conv = |v: &[SeqRule]| v.iter().map(Rule::from_doc).collect::<Result<Vec<_>>>();
        Ok((conv(&self.e_seq)?, conv(&self.f_seq)?))
    }

    /// Checks orthonormality, the pairing bounds and nest membership.
    pub fn validate(&self, task: &MultiplicationTask) -> Result<()> {
        let (es, fs) = self.rules()?;
        if es.len() != fs.len() {
            return Err(Error::Schema("e and f sequences differ in length".into()));
        }
        for (name, vs) in [("e", &es), ("f", &fs)] {
            for (i, u) in vs.iter().enumerate() {
                for (j, v) in vs.iter().enumerate().skip(i) {
                    let (ip, err) = u.inner(v);
                    let target = if i == j { 1.0 } else { 0.0 };
                    if (ip - target).abs() + err > GRAM_TOL {
                        return Err(Error::Schema(format!("{name} Gram entry ({i},{j}) is {ip}")));
                    }
                }
            }
        }
        let bstar = task.b().nf().adjoint();
        for (n, (e, f)) in es.iter().zip(&fs).enumerate() {
            if rank_one_membership(task.nest(), e, f).is_none() {
                return Err(Error::NotInAlgebra(format!("e_{n} ⊗ f_{n}")));
            }
            let af = task.a().nf().apply(f).0.l2_norm_bounds(None, None).0;
            let be = bstar.apply(e).0.l2_norm_bounds(None, None).0;
            if af < self.eps - CERT_SLACK || be < self.eps - CERT_SLACK {
                return Err(Error::Schema(format!("pairing bound fails at n = {n}: {af}, {be}")));
            }
        }
        Ok(())
    }
}

/// Default threshold: half the smaller of the largest tails of `a` and `b^*`.
pub fn default_epsilon(task: &MultiplicationTask) -> Option<f64> {
    let ta = task.a().nf().dominant_tail()?.2;
    let tb = task.b().nf().adjoint().dominant_tail()?.2;
    Some(0.5 * ta.min(tb))
}

/// Pairs witness columns of `a` with witness columns of `b^*` so that each
/// `e_n ⊗ f_n` lies in `Alg N`.
pub fn witness_sequences(task: &MultiplicationTask, eps: f64, count: usize) -> Result<WitnessSequences> {
    let pool = 4 * count + 16;
    let fs = witness_indices(task.a().nf(), eps, pool)?;
    let es = witness_indices(&task.b().nf().adjoint(), eps, pool)?;
    let mut used = vec![false; es.len()];
    let (mut e_seq, mut f_seq) = (Vec::new(), Vec::new());
    for &j in &fs {
        if e_seq.len() == count {
            break;
        }
        let pick = es.iter().enumerate().find(|&(k, &i)| {
            !used[k] && rank_one_membership(task.nest(), &Rule::delta(i), &Rule::delta(j)).is_some()
        });
        if let Some((k, &i)) = pick {
            used[k] = true;
            e_seq.push(i);
            f_seq.push(j);
        }
    }
    if e_seq.len() < count {
        return Err(Error::WitnessBudgetExhausted(format!(
            "only {} of {count} pairs e ⊗ f lie in the nest algebra",
            e_seq.len()
        )));
    }
    Ok(WitnessSequences {
        e_seq: e_seq.into_iter().map(SeqRule::delta).collect(),
        f_seq: f_seq.into_iter().map(SeqRule::delta).collect(),
        eps,
    })
}

/// Threshold for the `n`-th selection (1-based): `ε²/(3·2ⁿ)`.
pub fn pair_threshold(eps: f64, n: usize) -> f64 {
    eps * eps / (3.0 * 2f64.powi(n as i32))
}

/// Selected indices with their full Gram tables and the certificate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubseqCertificate {
    pub eps: f64,
    /// 1-based positions `k_1 < k_2 < …` in the witness sequences.
    pub indices: Vec<usize>,
    /// `⟨a f_{k_m}, a f_{k_n}⟩`.
    pub a_gram: Vec<Vec<f64>>,
    /// `⟨b^* e_{k_m}, b^* e_{k_n}⟩`.
    pub b_gram: Vec<Vec<f64>>,
    /// Quadrature error bound on every table entry.
    pub table_err: f64,
    /// `v_{m0} = |Σ_n λ_n μ_n|` for each `m0`.
    pub values: Vec<f64>,
}

impl SubseqCertificate {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The certificate restricted to a subset of its positions (0-based).
    pub fn restrict(&self, keep: &[usize]) -> SubseqCertificate {
        let pick = |g: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            keep.iter().map(|&i| keep.iter().map(|&j| g[i][j]).collect()).collect()
        };
        let a_gram = pick(&self.a_gram);
        let b_gram = pick(&self.b_gram);
        let values = certificate_values(&a_gram, &b_gram);
        SubseqCertificate {
            eps: self.eps,
            indices: keep.iter().map(|&i| self.indices[i]).collect(),
            a_gram,
            b_gram,
            table_err: self.table_err,
            values,
        }
    }
}

/// `v_{m0} = |Σ_n λ_n μ_n|` with `λ_n = B[m0][n]` and `μ_n = A[n][m0]`.
pub fn certificate_values(a_gram: &[Vec<f64>], b_gram: &[Vec<f64>]) -> Vec<f64> {
    (0..a_gram.len())
        .map(|m0| (0..a_gram.len()).map(|n| b_gram[m0][n] * a_gram[n][m0]).sum::<f64>().abs())
        .collect()
}

/// `Σ_{n>m} (ε²/(3·2ⁿ))²`: what the selections beyond `m` could still add.
pub fn tail_slack(eps: f64, m: usize) -> f64 {
    eps.powi(4) / 27.0 * 4f64.powi(-(m as i32))
}

/// Selects `k_1 = 1` and then the smallest `k_n` meeting both pairwise
/// thresholds against every earlier selection.
pub fn greedy_subsequence(
    task: &MultiplicationTask,
    seqs: &WitnessSequences,
    m: usize,
    budget: usize,
) -> Result<SubseqCertificate> {
    let (es, fs) = seqs.rules()?;
    let eps = seqs.eps;
    let bstar = task.b().nf().adjoint();
    let limit = budget.min(es.len());
    let af: Vec<Rule> = fs.iter().take(limit).map(|f| task.a().nf().apply(f).0).collect();
    let be: Vec<Rule> = es.iter().take(limit).map(|e| bstar.apply(e).0).collect();
    let mut err: f64 = 0.0;
    let mut ip = |u: &Rule, v: &Rule| {
        let (x, e) = u.inner(v);
        err = err.max(e);
        (x, e)
    };
    let mut chosen: Vec<usize> = Vec::new();
    let mut next = 0usize;
    while chosen.len() < m {
        let n = chosen.len() + 1;
        let bound = pair_threshold(eps, n);
        let found = (next..limit).find(|&k| {
            chosen.iter().all(|&c| {
                let (x, ex) = ip(&af[c], &af[k]);
                let (y, ey) = ip(&be[c], &be[k]);
                x.abs() + ex < bound && y.abs() + ey < bound
            })
        });
        match found {
            Some(k) => {
                chosen.push(k);
                next = k + 1;
            }
            None => {
                return Err(Error::BudgetExhausted(format!(
                    "no admissible index for position {n} within {limit} candidates"
                )))
            }
        }
    }
    let table = |vs: &[Rule], ip: &mut dyn FnMut(&Rule, &Rule) -> (f64, f64)| -> Vec<Vec<f64>> {
        chosen.iter().map(|&i| chosen.iter().map(|&j| ip(&vs[i], &vs[j]).0).collect()).collect()
    };
    let a_gram = table(&af, &mut ip);
    let b_gram = table(&be, &mut ip);
    let values = certificate_values(&a_gram, &b_gram);
    Ok(SubseqCertificate {
        eps,
        indices: chosen.iter().map(|k| k + 1).collect(),
        a_gram,
        b_gram,
        table_err: err,
        values,
    })
}

/// Re-verifies a certificate from its tables alone: the diagonal pairings,
/// the pairwise thresholds, and `v_{m0} ≥ 8ε⁴/9` after the tail slack.
pub fn noncompact_certificate_check(cert: &SubseqCertificate, eps: f64) -> bool {
    let m = cert.len();
    if m == 0 || cert.a_gram.len() != m || cert.b_gram.len() != m {
        return false;
    }
    if cert.indices.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    let tol = cert.table_err + CERT_SLACK;
    let sq = eps * eps;
    for i in 0..m {
        if cert.a_gram[i][i] < sq - tol || cert.b_gram[i][i] < sq - tol {
            return false;
        }
        for j in 0..i {
            let bound = pair_threshold(eps, i + 1);
            for g in [&cert.a_gram, &cert.b_gram] {
                if g[i][j].abs() >= bound || g[j][i].abs() >= bound {
                    return false;
                }
            }
        }
    }
    let floor = 8.0 * eps.powi(4) / 9.0;
    let slack = tail_slack(eps, m) + m as f64 * tol * (1.0 + cert.a_gram[0][0].max(cert.b_gram[0][0]));
    certificate_values(&cert.a_gram, &cert.b_gram)
        .iter()
        .all(|&v| v - slack >= floor - CERT_SLACK)
}

/// Default number of diagonal positions scanned by the refuter.
pub const REFUTER_WINDOW: i64 = 1024;
/// Singular-value cutoff for the span-stabilization rank.
pub const RANK_TOL: f64 = 1e-8;

/// A pair `(r, s)` at which `Σ_i M_{c_i, d_i}` differs from `M_{I, b}`
/// with `b = Diag(1/n)`: the diagonal pairing of `δ_r ⊗ δ_{r-s}` misses `1/r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub r: i64,
    pub s: i64,
    pub residual: f64,
    pub n0: i64,
    pub rank: usize,
}

fn diagonals(ops: &[Operator], n: i64) -> Vec<Vec<f64>> {
    ops.iter().map(|op| (1..=n).map(|r| op.entry(r, r)).collect()).collect()
}

fn span_rank(c: &[Vec<f64>], n: usize) -> usize {
    if n < 2 || c.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n - 1, c.len(), |k, i| c[i][k + 1] - c[i][0]);
    singular_values(&m, c.len()).iter().filter(|&&s| s > RANK_TOL).count()
}

/// `|1/r − Σ_i D_{r,i} C_{r−s,i}|` evaluated from the candidates' entries.
pub fn recompute_residual(candidates: &[(Operator, Operator)], r: i64, s: i64) -> f64 {
    let sum: f64 = candidates
        .iter()
        .map(|(c, d)| d.adjoint().entry(r, r) * c.entry(r - s, r - s))
        .sum();
    (1.0 / r as f64 - sum).abs()
}

/// Finds `(r, s)` with residual at least `1/(2r)`, trying the
/// stabilization index `n0` first and then `r` upward.
pub fn counterexample_refuter(candidates: &[(Operator, Operator)], budget: i64) -> Result<Refutation> {
    if candidates.is_empty() || candidates.len() > 8 {
        return Err(Error::Config(format!("need 1 to 8 candidate pairs, got {}", candidates.len())));
    }
    for (k, (c, d)) in candidates.iter().enumerate() {
        for (name, op) in [("c", c), ("d", d)] {
            let v = classify_compact(op).verdict;
            if v != Verdict::Compact {
                return Err(Error::Config(format!("{name}_{} is {v:?}, not compact", k + 1)));
            }
        }
    }
    let window = budget.max(2);
    let cs: Vec<Operator> = candidates.iter().map(|p| p.0.clone()).collect();
    let c = diagonals(&cs, window);
    let full = span_rank(&c, window as usize);
    let n0 = (1..=window).find(|&n| span_rank(&c, n as usize) == full).unwrap_or(window);
    let mut best: Option<(i64, i64, f64)> = None;
    for r in std::iter::once(n0).chain((1..=window).filter(|&r| r != n0)) {
        for s in 0..r {
            let residual = recompute_residual(candidates, r, s);
            if residual >= 0.5 / r as f64 {
                return Ok(Refutation { r, s, residual, n0, rank: full });
            }
            if best.is_none_or(|b| residual * r as f64 > b.2 * b.0 as f64) {
                best = Some((r, s, residual));
            }
        }
    }
    let (r, s, res) = best.unwrap_or((0, 0, 0.0));
    Err(Error::BudgetExhausted(format!("best residual {res} at (r, s) = ({r}, {s})")))
}

/// The operator `Σ_n x_n Σ_{i∈A_n} e_i⊗f_i` with its certified bounds on
/// the quotient norm of `a X b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingWitness {
    /// Blocks `A_n` as 1-based positions in the witness sequences.
    pub blocks: Vec<Vec<usize>>,
    pub x: Vec<f64>,
    pub operator: OperatorExpr,
    /// Position paired against in the block of the largest `|x_n|`.
    pub i0: Option<usize>,
    pub pairing: f64,
    pub lower: f64,
    pub upper: f64,
    /// Norm of `a X b` with the finite part before `i0` removed.
    pub measured: NormInterval,
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn linf_embedding(
    task: &MultiplicationTask,
    cert: &SubseqCertificate,
    seqs: &WitnessSequences,
    block_size: usize,
    x: &[f64],
) -> Result<EmbeddingWitness> {
    let xnorm = sup_norm(x);
    if xnorm == 0.0 {
        return Ok(EmbeddingWitness {
            blocks: Vec::new(),
            x: x.to_vec(),
            operator: OperatorExpr::Zero,
            i0: None,
            pairing: 0.0,
            lower: 0.0,
            upper: 0.0,
            measured: NormInterval::zero(),
        });
    }
    if block_size == 0 || x.len() * block_size > cert.len() {
        return Err(Error::BlockTooSmall(format!(
            "{} blocks of size {block_size} need more than {} certified indices",
            x.len(),
            cert.len()
        )));
    }
    let eps = cert.eps;
    let blocks: Vec<Vec<usize>> = (0..x.len()).map(|n| (n * block_size..(n + 1) * block_size).collect()).collect();
    let mut terms = Vec::new();
    for (n, block) in blocks.iter().enumerate() {
        if x[n] == 0.0 {
            continue;
        }
        for &p in block {
            let k = cert.indices[p] - 1;
            let unit = OperatorExpr::rank_one(seqs.e_seq[k].clone(), seqs.f_seq[k].clone());
            terms.push(OperatorExpr::scale(x[n], unit));
        }
    }
    let operator = terms.into_iter().reduce(OperatorExpr::sum).unwrap_or(OperatorExpr::Zero);

    let n_max = (0..x.len()).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(j.cmp(&i))).unwrap();
    let p0 = *blocks[n_max].last().unwrap();
    let pairing: f64 = blocks
        .iter()
        .enumerate()
        .map(|(n, block)| x[n] * block.iter().map(|&p| cert.b_gram[p0][p] * cert.a_gram[p][p0]).sum::<f64>())
        .sum::<f64>()
        .abs();
    let scale = (cert.a_gram[p0][p0] * cert.b_gram[p0][p0]).sqrt().max(1.0);
    let lower = (pairing - 2.0 * eps.powi(4) / 9.0 * xnorm) / scale;
    let floor = eps.powi(4) / 3.0 * xnorm;
    if lower < floor - CERT_SLACK - cert.table_err {
        return Err(Error::BlockTooSmall(format!("pairing bound {lower} is below {floor}")));
    }

    let basis = task.nest().basis();
    let xop = Operator::new(operator.clone(), basis)?;
    let t = task.apply(&xop);
    let upper = xnorm * norm_interval(task.a().nf()).hi * norm_interval(task.b().nf()).hi;
    let y = task.b().nf().adjoint().apply(&Rule::from_doc(&seqs.e_seq[cert.indices[p0] - 1])?).0;
    let below = match y.support_min() {
        crate::rule::Extent::At(i) => Cut::At(i - 1),
        _ => Cut::NegInf,
    };
    let measured = norm_interval(&t.nf().compress((Cut::NegInf, Cut::PosInf), (below, Cut::PosInf)));
    Ok(EmbeddingWitness {
        blocks: blocks.iter().map(|b| b.iter().map(|&p| cert.indices[p]).collect()).collect(),
        x: x.to_vec(),
        operator,
        i0: Some(cert.indices[p0]),
        pairing,
        lower,
        upper,
        measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nest::{Basis, Nest};

    fn even_plateau() -> SeqRule {
        SeqRule::Parity { even: Box::new(SeqRule::constant(1.0)), odd: Box::new(SeqRule::harmonic()) }
    }

    fn op(x: OperatorExpr) -> Operator {
        Operator::new(x, Basis::Natural).unwrap()
    }

    #[test]
    fn witness_examples() {
        let w = orthonormal_witness(&op(OperatorExpr::Identity), 1.0, 5).unwrap();
        assert_eq!(w, (1..=5).map(SeqRule::delta).collect::<Vec<_>>());
        let w = orthonormal_witness(&op(OperatorExpr::diag(even_plateau())), 1.0, 4).unwrap();
        assert_eq!(w, [2, 4, 6, 8].map(SeqRule::delta).to_vec());
        let err = orthonormal_witness(&op(OperatorExpr::diag(SeqRule::harmonic())), 0.5, 3).unwrap_err();
        assert!(matches!(err, Error::NotNonCompact(_)));
    }

    fn identity_task(nest: Nest) -> MultiplicationTask {
        MultiplicationTask::from_exprs(nest, OperatorExpr::Identity, OperatorExpr::Identity).unwrap()
    }

    #[test]
    fn greedy_on_identity() {
        let t = identity_task(Nest::maximal_natural());
        let seqs = witness_sequences(&t, 1.0, 12).unwrap();
        seqs.validate(&t).unwrap();
        let cert = greedy_subsequence(&t, &seqs, 8, 64).unwrap();
        assert_eq!(cert.indices, (1..=8).collect::<Vec<_>>());
        assert!(cert.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(noncompact_certificate_check(&cert, 1.0));
        assert!(noncompact_certificate_check(&cert.restrict(&[0, 3, 5]), 1.0));
        assert!(noncompact_certificate_check(&cert.restrict(&[4]), 1.0));

        let mut forged = cert.clone();
        forged.a_gram[2][0] = 0.5;
        forged.a_gram[0][2] = 0.5;
        assert!(!noncompact_certificate_check(&forged, 1.0));
    }

    #[test]
    fn greedy_on_plateau() {
        let nest = Nest::maximal_natural();
        let t = MultiplicationTask::from_exprs(nest, OperatorExpr::diag(even_plateau()), OperatorExpr::Identity).unwrap();
        let seqs = witness_sequences(&t, 1.0, 6).unwrap();
        seqs.validate(&t).unwrap();
        let cert = greedy_subsequence(&t, &seqs, 6, 64).unwrap();
        assert!(cert.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(noncompact_certificate_check(&cert, 1.0));
    }

    #[test]
    fn refuter_examples() {
        let pair = |x: OperatorExpr| (op(x.clone()), op(x));
        let g = pair(OperatorExpr::diag(SeqRule::geometric(0.5)));
        let r = counterexample_refuter(&[g.clone()], 256).unwrap();
        assert_eq!((r.r, r.n0), (2, 2));
        assert!(r.residual >= 0.5 / r.r as f64);
        assert!((recompute_residual(&[g], r.r, r.s) - r.residual).abs() < 1e-10);

        let r = counterexample_refuter(&[pair(OperatorExpr::Zero)], 256).unwrap();
        assert_eq!((r.r, r.s, r.residual), (1, 0, 1.0));

        let p = pair(OperatorExpr::interval(Cut::At(0), Cut::At(100)));
        let r = counterexample_refuter(&[p.clone(), p], 256).unwrap();
        assert_eq!(r.r, 101);

        let err = counterexample_refuter(&[pair(OperatorExpr::Identity)], 16).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn embedding_examples() {
        let t = identity_task(Nest::trivial(Basis::Natural));
        let seqs = witness_sequences(&t, 1.0, 64).unwrap();
        let cert = greedy_subsequence(&t, &seqs, 64, 128).unwrap();
        let w = linf_embedding(&t, &cert, &seqs, 1, &[1.0]).unwrap();
        assert!(w.lower >= 1.0 / 3.0 && w.upper <= 1.0 + 1e-9);
        assert!(w.lower <= w.measured.hi && w.measured.hi <= w.upper + 1e-9);
        let w = linf_embedding(&t, &cert, &seqs, 32, &[1.0, -1.0]).unwrap();
        assert!(w.lower >= 1.0 / 3.0 - 1e-9 && w.upper <= 1.0 + 1e-9);
        assert_eq!(w.blocks.len(), 2);
        let w = linf_embedding(&t, &cert, &seqs, 32, &[0.0]).unwrap();
        assert_eq!((w.operator, w.lower, w.upper), (OperatorExpr::Zero, 0.0, 0.0));
        let err = linf_embedding(&t, &cert, &seqs, 32, &[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::BlockTooSmall(_)));
    }
}
