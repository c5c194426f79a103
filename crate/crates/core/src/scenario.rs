//! Batch scenarios: a config file names a task and the analyses to run;
//! the result is a self-contained report with a CSV mirror.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::compactness::Verdict;
use crate::constructions::{
    counterexample_refuter, default_epsilon, greedy_subsequence, linf_embedding, noncompact_certificate_check,
    witness_sequences,
};
use crate::decision::{mult_compact_decision, mult_weak_decision, mult_weak_decision_2proj, MultKind};
use crate::error::{Error, Result};
use crate::expr::OperatorExpr;
use crate::ideal::{compact_element_test, compact_elements_ideal_predicate, jc_decompose, radical_seminorm};
use crate::nest::{Basis, Nest, NestDescriptor};
use crate::operator::Operator;
use crate::sampler::{quotient_verdict, range_in_compacts_sampler, QuotientKind};
use crate::suite::{verify_suite_with, Fault, SuiteReport};
use crate::task::{mult_zero_test, MultiplicationTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Decide,
    Ideal,
    Witness,
    Refute,
    Embed,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    All,
    Zero,
    Compact,
    Weak,
    #[serde(rename = "2proj")]
    TwoProj,
    Quotient,
    Sampler,
}

const DECIDE_ALL: [Analysis; 5] = [Analysis::Zero, Analysis::Compact, Analysis::Weak, Analysis::TwoProj, Analysis::Quotient];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub samples: usize,
    pub length: usize,
    pub candidates: usize,
    pub refinement: u32,
    pub refuter_window: i64,
    pub block_size: usize,
}

impl Default for Budgets {
    fn default() -> Budgets {
        Budgets { samples: 100, length: 20, candidates: 256, refinement: 6, refuter_window: 1024, block_size: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub nest: Option<NestDescriptor>,
    #[serde(default)]
    pub a: Option<OperatorExpr>,
    #[serde(default)]
    pub b: Option<OperatorExpr>,
    /// Absent means every analysis of the command; an empty list runs nothing.
    #[serde(default)]
    pub analyses: Option<Vec<Analysis>>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Pairs `(c_i, d_i)` for the refuter.
    #[serde(default)]
    pub candidates: Vec<(OperatorExpr, OperatorExpr)>,
    /// Sequences for the embedding.
    #[serde(default)]
    pub x: Vec<Vec<f64>>,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if b.samples == 0 || b.length == 0 || b.candidates == 0 || b.refuter_window <= 0 || b.block_size == 0 {
            return Err(Error::Config("budgets must be positive".into()));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
            }
        }
        Ok(())
    }

    fn nest(&self) -> Result<Nest> {
        Nest::new(self.nest.as_ref().ok_or_else(|| Error::Config("missing nest".into()))?)
    }

    fn operator(&self, which: &str, x: &Option<OperatorExpr>, basis: Basis) -> Result<Operator> {
        let x = x.clone().ok_or_else(|| Error::Config(format!("missing operator {which}")))?;
        Operator::new(x, basis)
    }

    fn task(&self) -> Result<MultiplicationTask> {
        let nest = self.nest()?;
        let a = self.operator("a", &self.a, nest.basis())?;
        let b = self.operator("b", &self.b, nest.basis())?;
        MultiplicationTask::new(nest, a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Decided,
    Unknown,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub analysis: String,
    pub status: Status,
    pub verdict: String,
    pub result: Value,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub seed: u64,
    pub records: Vec<Record>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteReport>,
}

impl Report {
    /// 1 on any failure, 3 when something is undecided, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.status == Status::Failed) {
            1
        } else if self.records.iter().any(|r| r.status == Status::Unknown) {
            3
        } else {
            0
        }
    }

    pub fn record(&self, analysis: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.analysis == analysis)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Config(format!("csv output: {e}"));
        w.write_record(["analysis", "status", "verdict", "elapsed_ms"]).map_err(io)?;
        for r in &self.records {
            let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            w.write_record([r.analysis.as_str(), status.as_str(), r.verdict.as_str(), &r.elapsed_ms.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(format!("csv output: {e}")))
    }
}

fn is_undecided(e: &Error) -> bool {
    matches!(
        e,
        Error::BudgetExhausted(_)
            | Error::WitnessBudgetExhausted(_)
            | Error::UndecidableBoundary(_)
            | Error::UndecidableTail(_)
            | Error::BlockTooSmall(_)
            | Error::UnknownSupport(_)
    )
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Runs one analysis; budget-type errors become an undecided record
/// instead of aborting the report.
fn timed(analysis: &str, f: impl FnOnce() -> Result<(Status, String, Value)>) -> Record {
    let start = Instant::now();
    let (status, verdict, result) = match f() {
        Ok(x) => x,
        Err(e) => {
            let status = if is_undecided(&e) { Status::Unknown } else { Status::Failed };
            (status, "error".into(), json!({ "error": e.to_string() }))
        }
    };
    Record { analysis: analysis.into(), status, verdict, result, elapsed_ms: start.elapsed().as_millis() }
}

fn kind_status(k: MultKind) -> Status {
    if k == MultKind::Unknown {
        Status::Unknown
    } else {
        Status::Decided
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn decide(sc: &Scenario, seed: u64) -> Result<Vec<Record>> {
    let analyses = expand(sc.analyses.as_deref(), &DECIDE_ALL);
    if analyses.is_empty() {
        return Ok(Vec::new());
    }
    let task = sc.task()?;
    let mut out = Vec::new();
    for a in analyses {
        let rec = match a {
            Analysis::Zero => timed("zero", || {
                let z = mult_zero_test(&task)?;
                let v = if z.zero { "zero" } else { "nonzero" };
                Ok((Status::Decided, v.into(), to_value(&z)))
            }),
            Analysis::Compact => timed("compact", || {
                let v = mult_compact_decision(&task)?;
                Ok((kind_status(v.kind), snake(&v.kind), to_value(&v)))
            }),
            Analysis::Weak => timed("weak", || {
                let v = mult_weak_decision(&task)?;
                Ok((kind_status(v.kind), snake(&v.kind), to_value(&v)))
            }),
            Analysis::TwoProj => timed("2proj", || {
                let v = mult_weak_decision_2proj(&task)?;
                Ok((kind_status(v.kind), snake(&v.kind), to_value(&v)))
            }),
            Analysis::Quotient => timed("quotient", || {
                let q = quotient_verdict(&task)?;
                let status = if q.kind == QuotientKind::Unknown { Status::Unknown } else { Status::Decided };
                Ok((status, snake(&q.kind), to_value(&q)))
            }),
            Analysis::Sampler => timed("sampler", || {
                let ev = range_in_compacts_sampler(&task, sc.budgets.samples, seed);
                let v = if ev.consistent() { "no_counterexample" } else { "counterexample" };
                Ok((Status::Decided, v.into(), to_value(&ev)))
            }),
            Analysis::All => unreachable!("expanded above"),
        };
        out.push(rec);
    }
    Ok(out)
}

fn expand(requested: Option<&[Analysis]>, all: &[Analysis]) -> Vec<Analysis> {
    match requested {
        None => all.to_vec(),
        Some(list) => {
            let mut out = Vec::new();
            for &a in list {
                let items = if a == Analysis::All { all.to_vec() } else { vec![a] };
                for i in items {
                    if !out.contains(&i) {
                        out.push(i);
                    }
                }
            }
            out
        }
    }
}

fn ideal(sc: &Scenario) -> Result<Vec<Record>> {
    let nest = sc.nest()?;
    let a = sc.operator("a", &sc.a, nest.basis())?;
    let eps = sc.eps.unwrap_or(0.1);
    let depth = sc.budgets.refinement;
    Ok(vec![
        timed("radical", || {
            let r = radical_seminorm(&nest, &a, depth);
            Ok((Status::Decided, format!("[{}, {}]", r.seminorm.lo, r.seminorm.hi), to_value(&r)))
        }),
        timed("element", || {
            let e = compact_element_test(&nest, &a)?;
            let status = if e.verdict == Verdict::Unknown { Status::Unknown } else { Status::Decided };
            let v = match e.verdict {
                Verdict::Compact => "compact",
                Verdict::NonCompact => "not_compact",
                Verdict::Unknown => "unknown",
            };
            Ok((status, v.into(), to_value(&e)))
        }),
        timed("decomposition", || {
            let d = jc_decompose(&nest, &a, eps, depth)?;
            let v = if d.achieved { "achieved" } else { "not_achieved" };
            Ok((Status::Decided, v.into(), to_value(&d)))
        }),
        timed("ideal_predicate", || {
            let p = compact_elements_ideal_predicate(&nest);
            Ok((Status::Decided, p.holds.to_string(), to_value(&p)))
        }),
    ])
}

fn epsilon(sc: &Scenario, task: &MultiplicationTask) -> Result<f64> {
    sc.eps
        .or_else(|| default_epsilon(task))
        .ok_or_else(|| Error::NotNonCompact("a or b has no noncompact tail; give eps explicitly".into()))
}

fn witness(sc: &Scenario) -> Result<Vec<Record>> {
    let task = sc.task()?;
    let b = sc.budgets;
    Ok(vec![timed("certificate", || {
        let eps = epsilon(sc, &task)?;
        let seqs = witness_sequences(&task, eps, b.candidates)?;
        let cert = greedy_subsequence(&task, &seqs, b.length, b.candidates)?;
        let ok = noncompact_certificate_check(&cert, eps);
        let status = if ok { Status::Decided } else { Status::Failed };
        let v = if ok { "not_compact" } else { "certificate_rejected" };
        Ok((status, v.into(), json!({ "eps": eps, "sequences": seqs, "certificate": cert, "verified": ok })))
    })])
}

fn refute(sc: &Scenario) -> Result<Vec<Record>> {
    if sc.candidates.is_empty() {
        return Err(Error::Config("refute needs candidates".into()));
    }
    let ops = sc
        .candidates
        .iter()
        .map(|(c, d)| Ok((Operator::new(c.clone(), Basis::Natural)?, Operator::new(d.clone(), Basis::Natural)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![timed("refutation", || {
        let r = counterexample_refuter(&ops, sc.budgets.refuter_window)?;
        Ok((Status::Decided, format!("({}, {})", r.r, r.s), to_value(&r)))
    })])
}

fn embed(sc: &Scenario) -> Result<Vec<Record>> {
    if sc.x.is_empty() {
        return Ok(Vec::new());
    }
    let task = sc.task()?;
    let b = sc.budgets;
    let blocks = sc.x.iter().map(Vec::len).max().unwrap_or(0);
    let length = blocks * b.block_size;
    let setup = (|| {
        let eps = epsilon(sc, &task)?;
        let seqs = witness_sequences(&task, eps, length.max(1))?;
        let cert = greedy_subsequence(&task, &seqs, length.max(1), b.candidates.max(length))?;
        Ok::<_, Error>((seqs, cert))
    })();
    let (seqs, cert) = match setup {
        Ok(s) => s,
        Err(e) => return Ok(vec![timed("embedding", || Err(e))]),
    };
    Ok(sc
        .x
        .iter()
        .enumerate()
        .map(|(k, x)| {
            timed(&format!("embedding_{k}"), || {
                let w = linf_embedding(&task, &cert, &seqs, b.block_size, x)?;
                Ok((Status::Decided, format!("[{}, {}]", w.lower, w.upper), to_value(&w)))
            })
        })
        .collect())
}

fn verify(seed: u64, fault: Option<Fault>) -> (Vec<Record>, SuiteReport) {
    let suite = verify_suite_with(seed, fault);
    let records = suite
        .rows
        .iter()
        .map(|row| Record {
            analysis: row.key.clone(),
            status: if row.passed { Status::Decided } else { Status::Failed },
            verdict: if row.passed { "pass" } else { "fail" }.into(),
            result: to_value(row),
            elapsed_ms: row.elapsed_ms,
        })
        .collect();
    (records, suite)
}

/// Runs a command; `seed` overrides the scenario's own seed.
pub fn run_scenario(command: Command, sc: &Scenario, seed: Option<u64>, fault: Option<Fault>) -> Result<Report> {
    sc.validate()?;
    let seed = seed.or(sc.seed).unwrap_or(0);
    let mut suite = None;
    let records = match command {
        Command::Decide => decide(sc, seed)?,
        Command::Ideal => ideal(sc)?,
        Command::Witness => witness(sc)?,
        Command::Refute => refute(sc)?,
        Command::Embed => embed(sc)?,
        Command::Verify => {
            let (r, s) = verify(seed, fault);
            suite = Some(s);
            r
        }
    };
    Ok(Report { command, seed, records, suite })
}

/// An empty scenario, enough for `verify`.
pub fn empty_scenario() -> Scenario {
    Scenario {
        nest: None,
        a: None,
        b: None,
        analyses: None,
        budgets: Budgets::default(),
        eps: None,
        seed: None,
        candidates: Vec::new(),
        x: Vec::new(),
    }
}
