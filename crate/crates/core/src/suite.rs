//! The verification suite: one row per checked property, each driven by
//! the catalog and a seed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{self, CatalogTask};
use crate::compactness::{classify_compact, compact_above, compact_below, ess_norm_proxy, Verdict};
use crate::constructions::{
    counterexample_refuter, greedy_subsequence, linf_embedding, noncompact_certificate_check, pair_threshold,
    recompute_residual, witness_sequences,
};
use crate::decision::{mult_compact_decision, mult_weak_decision, mult_weak_decision_2proj, MultKind};
use crate::expr::OperatorExpr;
use crate::ideal::{radical_seminorm, reconstruction, FiniteSubnest};
use crate::nest::{Basis, Cut, CutSet, Nest};
use crate::numerics::Window;
use crate::operator::{alg_membership, render_nf, Operator};
use crate::rule::SeqRule;
use crate::sampler::{quotient_verdict, range_in_compacts_sampler, QuotientKind, DEFAULT_SAMPLES};
use crate::task::{mult_zero_test, MultiplicationTask};

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Corrupts one pairwise entry of the subsequence certificate.
    ForgedCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub id: u8,
    pub key: String,
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    pub detail: String,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub fault: Option<Fault>,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

struct Tally {
    checked: usize,
    violations: usize,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Tally {
        Tally { checked: 0, violations: 0, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.notes.len() < 5 {
                self.notes.push(what());
            }
        }
    }

    fn row(self, id: u8, key: &str, extra: Option<(bool, String)>, start: Instant) -> SuiteRow {
        let (extra_ok, extra_note) = extra.unwrap_or((true, String::new()));
        let mut detail = format!("{} checked, {} violations", self.checked, self.violations);
        if !extra_note.is_empty() {
            detail.push_str("; ");
            detail.push_str(&extra_note);
        }
        if !self.notes.is_empty() {
            detail.push_str("; first: ");
            detail.push_str(&self.notes.join(" | "));
        }
        SuiteRow {
            id,
            key: key.into(),
            passed: self.violations == 0 && extra_ok,
            checked: self.checked,
            violations: self.violations,
            detail,
            elapsed_ms: start.elapsed().as_millis(),
        }
    }
}

fn task_label(t: &MultiplicationTask) -> String {
    serde_json::to_string(&t.to_doc()).unwrap_or_default()
}

/// Whether the matrix unit in row `r`, column `c` lies in `Alg N`.
fn unit_member(nest: &Nest, r: i64, c: i64) -> bool {
    if r <= c {
        return true;
    }
    match nest.cut_set() {
        CutSet::All => false,
        CutSet::Explicit(v) => !v.iter().any(|&k| c <= k && k < r),
    }
}

/// Brute force on a window: `a E_{rc} b` is column `r` of `a` times row `c` of `b`.
fn brute_force_zero(task: &MultiplicationTask, size: usize) -> bool {
    let (lo, hi) = task.nest().basis().window(size);
    let w = Window { lo, hi };
    let a = render_nf(task.a().nf(), w);
    let b = render_nf(task.b().nf(), w);
    let n = a.nrows();
    let col_nonzero: Vec<bool> = (0..n).map(|j| a.column(j).amax() > 1e-10).collect();
    let row_nonzero: Vec<bool> = (0..n).map(|i| b.row(i).amax() > 1e-10).collect();
    for r in 0..n {
        for c in 0..n {
            if col_nonzero[r] && row_nonzero[c] && unit_member(task.nest(), lo + r as i64, lo + c as i64) {
                return false;
            }
        }
    }
    true
}

pub fn zero_test_oracle(seed: u64) -> SuiteRow {
    let start = Instant::now();
    let nests = [
        Nest::maximal_natural(),
        Nest::trivial(Basis::Natural),
        Nest::explicit(Basis::Integer, &[0]).expect("valid nest"),
    ];
    let mut t = Tally::new();
    let mut zeros = 0;
    for ct in catalog::random_tasks(&nests, 200, seed) {
        let decided = mult_zero_test(&ct.task).map(|z| z.zero);
        let brute = brute_force_zero(&ct.task, 64);
        zeros += usize::from(brute);
        t.check(decided.as_ref().is_ok_and(|&z| z == brute), || {
            format!("{}: decided {decided:?}, brute force {brute}", task_label(&ct.task))
        });
    }
    let note = format!("{zeros} zero by brute force");
    t.row(1, "zero-test-oracle", Some((true, note)), start)
}

fn is_compact_kind(k: MultKind) -> bool {
    matches!(k, MultKind::Zero | MultKind::Compact)
}

pub fn trivial_nest_compactness() -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    for ct in catalog::trivial_nest_cases() {
        let kind = mult_compact_decision(&ct.task).map(|v| v.kind);
        let both = classify_compact(ct.task.a()).is_compact() && classify_compact(ct.task.b()).is_compact();
        t.check(kind.as_ref().is_ok_and(|&k| is_compact_kind(k) == both), || {
            format!("{}: {kind:?}, both factors compact {both}", ct.name)
        });
    }
    t.row(2, "trivial-nest-compactness", None, start)
}

pub fn maximal_nest_compactness() -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    for ct in catalog::maximal_nest_cases() {
        let kind = mult_compact_decision(&ct.task).map(|v| v.kind);
        if kind.as_ref().is_ok_and(|&k| k == MultKind::Zero) {
            continue;
        }
        let b = classify_compact(ct.task.b()).is_compact();
        t.check(kind.as_ref().is_ok_and(|&k| (k == MultKind::Compact) == b), || {
            format!("{}: {kind:?}, b compact {b}", ct.name)
        });
    }
    let flagship = MultiplicationTask::from_exprs(
        Nest::maximal_natural(),
        OperatorExpr::Identity,
        OperatorExpr::diag(SeqRule::harmonic()),
    )
    .and_then(|task| mult_compact_decision(&task))
    .map(|v| v.kind);
    t.check(flagship.as_ref().is_ok_and(|&k| k == MultKind::Compact), || {
        format!("identity times harmonic: {flagship:?}")
    });
    t.row(3, "maximal-nest-compactness", None, start)
}

pub fn weak_decision_agreement(seed: u64) -> SuiteRow {
    let start = Instant::now();
    let nests = [
        Nest::maximal_natural(),
        Nest::trivial(Basis::Natural),
        Nest::explicit(Basis::Integer, &[0]).expect("valid nest"),
        Nest::maximal_integer(),
    ];
    let mut t = Tally::new();
    let mut total = 0usize;
    let mut decided = 0usize;
    let tasks = catalog::random_tasks(&nests, 500, seed).into_iter().chain(catalog::tasks());
    for ct in tasks {
        total += 1;
        let one = mult_weak_decision(&ct.task).ok().and_then(|v| v.kind.weakly_positive());
        let two = mult_weak_decision_2proj(&ct.task).ok().and_then(|v| v.kind.weakly_positive());
        if let (Some(x), Some(y)) = (one, two) {
            decided += 1;
            t.check(x == y, || format!("{}: four-case {x}, two-projection {y}", ct.name));
        }
    }
    let fraction = decided as f64 / total.max(1) as f64;
    let note = format!("decided by both on {decided} of {total} ({:.1}%)", 100.0 * fraction);
    t.row(4, "weak-decision-agreement", Some((fraction >= 0.9, note)), start)
}

/// Cuts probed per nest: every cut of an explicit nest, a window of cuts
/// and the ends otherwise.
fn probe_cuts(nest: &Nest) -> Vec<Cut> {
    let mut cuts = vec![Cut::NegInf];
    match nest.cut_set() {
        CutSet::Explicit(v) => cuts.extend(v.iter().map(|&c| Cut::At(c))),
        CutSet::All => {
            let lo = match nest.basis() {
                Basis::Natural => 1,
                Basis::Integer => -16,
            };
            cuts.extend((lo..=16).map(Cut::At));
        }
    }
    cuts.push(Cut::PosInf);
    cuts
}

pub fn weak_necessity_sufficiency() -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    for ct in catalog::tasks() {
        let CatalogTask { name, task } = ct;
        let Ok(verdict) = mult_weak_decision(&task) else { continue };
        let positive = verdict.kind.weakly_positive();
        let cuts = probe_cuts(task.nest());
        let below: Vec<bool> = cuts.iter().map(|&p| compact_below(task.a(), p)).collect();
        let above: Vec<bool> = cuts.iter().map(|&p| compact_above(task.b(), p)).collect();
        if positive == Some(true) {
            let bad = (0..cuts.len()).find(|&k| !below[k] && !above[k]);
            t.check(bad.is_none(), || format!("{name}: neither compression compact at {:?}", bad.map(|k| cuts[k])));
        }
        if let Some(k) = (0..cuts.len()).find(|&k| below[k] && above[k]) {
            t.check(positive == Some(true), || format!("{name}: both compact at {:?} but {:?}", cuts[k], verdict.kind));
        }
    }
    t.row(5, "weak-necessity-sufficiency", None, start)
}

pub fn subsequence_certificate(fault: Option<Fault>) -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    let plateau = SeqRule::Parity { even: Box::new(SeqRule::constant(0.5)), odd: Box::new(SeqRule::constant(0.0)) };
    let setups = [
        (OperatorExpr::Identity, 1.0, 1e-9),
        (OperatorExpr::diag(plateau), 0.5, 1e-6),
    ];
    for (a, eps, tol) in setups {
        let run = || -> crate::error::Result<(bool, bool, f64)> {
            let task = MultiplicationTask::from_exprs(Nest::maximal_natural(), a.clone(), OperatorExpr::Identity)?;
            let seqs = witness_sequences(&task, eps, 40)?;
            seqs.validate(&task)?;
            let mut cert = greedy_subsequence(&task, &seqs, 20, 40)?;
            if fault == Some(Fault::ForgedCertificate) {
                cert.a_gram[2][0] = eps * eps / 2.0;
                cert.a_gram[0][2] = eps * eps / 2.0;
            }
            let thresholds = (0..cert.len()).all(|i| {
                (0..i).all(|j| {
                    let bound = pair_threshold(eps, i + 1);
                    cert.a_gram[i][j].abs() < bound && cert.b_gram[i][j].abs() < bound
                })
            });
            let floor = 8.0 * eps.powi(4) / 9.0 - tol;
            let min_v = cert.values.iter().copied().fold(f64::INFINITY, f64::min);
            Ok((thresholds && min_v >= floor, noncompact_certificate_check(&cert, eps), min_v))
        };
        match run() {
            Ok((direct, recheck, min_v)) => {
                t.check(direct, || format!("eps {eps}: thresholds or values fail, min v {min_v}"));
                t.check(recheck, || format!("eps {eps}: certificate recheck fails"));
            }
            Err(e) => t.check(false, || format!("eps {eps}: {e}")),
        }
    }
    t.row(6, "subsequence-certificate", None, start)
}

fn refuter_families() -> Vec<(&'static str, Vec<(OperatorExpr, OperatorExpr)>)> {
    let diag = |r: SeqRule| OperatorExpr::diag(r);
    let geo = |r: f64| diag(SeqRule::geometric(r));
    let same = |x: OperatorExpr| (x.clone(), x);
    let window = |hi: i64| OperatorExpr::interval(Cut::At(0), Cut::At(hi));
    let unit = |i: i64| OperatorExpr::rank_one(SeqRule::delta(i), SeqRule::delta(i));
    vec![
        ("geometric_half", vec![same(geo(0.5))]),
        ("geometric_third", vec![same(geo(1.0 / 3.0))]),
        ("zero", vec![same(OperatorExpr::Zero)]),
        ("window_pair", vec![same(window(100)), same(window(100))]),
        ("window_and_geometric", vec![same(window(10)), same(geo(0.5))]),
        ("unit", vec![same(unit(1))]),
        ("unit_and_geometric", vec![same(unit(2)), (geo(0.9), geo(0.5))]),
        ("harmonic", vec![same(diag(SeqRule::harmonic()))]),
        ("three_terms", vec![same(diag(SeqRule::harmonic())), same(geo(0.5)), same(window(20))]),
        ("four_terms", vec![same(geo(0.5)), same(geo(0.25)), same(window(5)), same(unit(3))]),
    ]
}

pub fn finite_sum_refuter() -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    for (name, family) in refuter_families() {
        let ops: crate::error::Result<Vec<(Operator, Operator)>> = family
            .into_iter()
            .map(|(c, d)| Ok((Operator::new(c, Basis::Natural)?, Operator::new(d, Basis::Natural)?)))
            .collect();
        let clock = Instant::now();
        let outcome = ops.and_then(|ops| counterexample_refuter(&ops, 1024).map(|r| (r, ops)));
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok((r, ops)) => {
                let again = recompute_residual(&ops, r.r, r.s);
                let ok = r.residual >= 0.5 / r.r as f64 && (again - r.residual).abs() <= 1e-10 && secs < 5.0;
                t.check(ok, || format!("{name}: ({}, {}) residual {} in {secs:.2}s", r.r, r.s, r.residual));
            }
            Err(e) => t.check(false, || format!("{name}: {e}")),
        }
    }
    t.row(7, "finite-sum-refuter", None, start)
}

pub fn linf_embedding_bound(seed: u64) -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    let setup = || -> crate::error::Result<_> {
        let task =
            MultiplicationTask::from_exprs(Nest::trivial(Basis::Natural), OperatorExpr::Identity, OperatorExpr::Identity)?;
        let seqs = witness_sequences(&task, 1.0, 128)?;
        let cert = greedy_subsequence(&task, &seqs, 128, 128)?;
        Ok((task, seqs, cert))
    };
    let (task, seqs, cert) = match setup() {
        Ok(s) => s,
        Err(e) => {
            t.check(false, || format!("setup: {e}"));
            return t.row(8, "linf-embedding-bound", None, start);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..50 {
        let len = rng.gen_range(1..=4usize);
        let mut x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let top = rng.gen_range(0..len);
        x[top] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match linf_embedding(&task, &cert, &seqs, 32, &x) {
            Ok(w) => t.check(w.lower >= 1.0 / 3.0 - 0.05 && w.upper <= 1.0 + 1e-9, || {
                format!("x #{k} {x:?}: bounds ({}, {})", w.lower, w.upper)
            }),
            Err(e) => t.check(false, || format!("x #{k} {x:?}: {e}")),
        }
    }
    t.row(8, "linf-embedding-bound", None, start)
}

fn random_subnest(rng: &mut ChaCha8Rng) -> Vec<i64> {
    let count = rng.gen_range(0..=6usize);
    let mut cuts: Vec<i64> = (0..count).map(|_| rng.gen_range(1..128)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    cuts
}

pub fn decomposition_identity(seed: u64) -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = Basis::Natural.window(128);
    let w = Window { lo, hi };
    let mut produced = 0;
    while produced < 100 {
        let cuts = random_subnest(&mut rng);
        let nest = Nest::explicit(Basis::Natural, &cuts).expect("increasing cuts");
        let x = catalog::random_member(&nest, &mut rng);
        let Ok(a) = Operator::new(x, Basis::Natural) else { continue };
        if !alg_membership(&nest, &a).is_member() {
            continue;
        }
        produced += 1;
        let f = FiniteSubnest::new(&nest, &cuts.iter().map(|&c| Cut::At(c)).collect::<Vec<_>>())
            .expect("cuts of the nest");
        let back = render_nf(&reconstruction(a.nf(), &f), w);
        let orig = render_nf(a.nf(), w);
        let residual = (back - orig).amax();
        t.check(residual <= 1e-12, || format!("cuts {cuts:?}: residual {residual}"));
    }
    t.row(9, "decomposition-identity", None, start)
}

pub fn radical_monotonicity(seed: u64) -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    let nest = Nest::maximal_natural();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..100 {
        let x = catalog::random_member(&nest, &mut rng);
        let Ok(a) = Operator::new(x, Basis::Natural) else { continue };
        let est = radical_seminorm(&nest, &a, 5);
        let mono = est.steps.windows(2).all(|s| s[1].norm.hi <= s[0].norm.hi + 1e-10);
        t.check(mono, || format!("operator #{k}: upper bounds increase along the chain"));
    }
    let unit = Operator::new(OperatorExpr::rank_one(SeqRule::delta(2), SeqRule::delta(1)), Basis::Natural)
        .expect("grammar operator");
    let est = radical_seminorm(&nest, &unit, 5);
    t.check(est.seminorm.hi == 0.0, || format!("unit above the diagonal: {:?}", est.seminorm));
    let est = radical_seminorm(&nest, &Operator::identity(Basis::Natural), 5);
    t.check(est.steps.iter().all(|s| (s.norm.lo - 1.0).abs() < 1e-12 && (s.norm.hi - 1.0).abs() < 1e-12), || {
        format!("identity: {:?}", est.seminorm)
    });
    t.row(10, "radical-monotonicity", None, start)
}

pub fn classifier_numerics() -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    let mut ops: Vec<(String, Operator)> = Vec::new();
    for basis in [Basis::Natural, Basis::Integer] {
        for (name, x) in catalog::operators(basis) {
            if let Ok(op) = Operator::new(x, basis) {
                ops.push((format!("{basis:?}:{name}"), op));
            }
        }
    }
    for ct in catalog::tasks().into_iter().step_by(17) {
        ops.push((ct.name.clone(), ct.task.a().mul(ct.task.b())));
    }
    for (name, op) in ops {
        let v = classify_compact(&op);
        match v.verdict {
            Verdict::Compact => {
                let e = ess_norm_proxy(&op, &[512], 50);
                t.check(e.sigma_k[0] <= 0.05, || format!("{name}: compact but sigma_50 = {}", e.sigma_k[0]));
            }
            Verdict::NonCompact => {
                let delta = v.delta().unwrap_or(0.0);
                let e = ess_norm_proxy(&op, &[128, 256, 512], 10);
                t.check(e.sigma_k.iter().all(|&s| s >= delta / 2.0), || {
                    format!("{name}: delta {delta} but sigma_10 {:?}", e.sigma_k)
                });
            }
            Verdict::Unknown => {}
        }
    }
    t.row(11, "classifier-numerics", None, start)
}

pub fn quotient_chain(seed: u64) -> SuiteRow {
    let start = Instant::now();
    let mut t = Tally::new();
    for ct in catalog::tasks() {
        let (Ok(weak), Ok(q)) = (mult_weak_decision(&ct.task), quotient_verdict(&ct.task)) else {
            t.check(false, || format!("{}: decision error", ct.name));
            continue;
        };
        let ev = range_in_compacts_sampler(&ct.task, DEFAULT_SAMPLES, seed);
        let positive = weak.kind.weakly_positive();
        let zero = q.kind == QuotientKind::ZeroInQuotient;
        let ok = match positive {
            Some(p) => zero == p && ev.consistent() == p,
            None => q.kind == QuotientKind::Unknown || ev.counterexample.is_some(),
        } && (ev.consistent() || q.kind == QuotientKind::NonzeroNotWeaklyCompact);
        t.check(ok, || format!("{}: weak {:?}, quotient {:?}, sampler clean {}", ct.name, weak.kind, q.kind, ev.consistent()));
    }
    t.row(12, "quotient-chain", None, start)
}

/// Runs every row; `fault` plants a defect the suite must catch.
pub fn verify_suite_with(seed: u64, fault: Option<Fault>) -> SuiteReport {
    let rows = vec![
        zero_test_oracle(seed),
        trivial_nest_compactness(),
        maximal_nest_compactness(),
        weak_decision_agreement(seed),
        weak_necessity_sufficiency(),
        subsequence_certificate(fault),
        finite_sum_refuter(),
        linf_embedding_bound(seed),
        decomposition_identity(seed),
        radical_monotonicity(seed),
        classifier_numerics(),
        quotient_chain(seed),
    ];
    SuiteReport { seed, fault, rows }
}

pub fn verify_suite(seed: u64) -> SuiteReport {
    verify_suite_with(seed, None)
}
