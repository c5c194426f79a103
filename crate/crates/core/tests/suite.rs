use std::process::Command;

use nestcalc::catalog;
use nestcalc::decision::{mult_classify, MultKind};
use nestcalc::sampler::{quotient_verdict, range_in_compacts_sampler};
use nestcalc::suite::{subsequence_certificate, Fault};
use serde_json::Value;

#[test]
fn forged_certificate_fails_only_its_row() {
    assert!(subsequence_certificate(None).passed);
    assert!(!subsequence_certificate(Some(Fault::ForgedCertificate)).passed);

    let out = Command::new(env!("CARGO_BIN_EXE_nestcalc")).args(["verify", "--inject-fault"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "failed")
        .map(|r| r["analysis"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["subsequence-certificate"]);
}

#[test]
fn verdicts_do_not_depend_on_the_seed() {
    let tasks: Vec<_> = catalog::tasks().into_iter().step_by(7).collect();
    let base: Vec<_> = tasks.iter().map(|ct| quotient_verdict(&ct.task).unwrap().kind).collect();
    for seed in 1..=10u64 {
        for (ct, expected) in tasks.iter().zip(&base) {
            let ev = range_in_compacts_sampler(&ct.task, 100, seed);
            let q = quotient_verdict(&ct.task).unwrap();
            assert_eq!(q.kind, *expected, "{}", ct.name);
            let positive = q.weak.weakly_positive();
            if positive == Some(true) {
                assert!(ev.consistent(), "{} seed {seed}", ct.name);
            }
        }
    }
}

#[test]
fn decision_lattice_over_catalog() {
    for ct in catalog::tasks() {
        let v = mult_classify(&ct.task).unwrap();
        let weak = nestcalc::decision::mult_weak_decision(&ct.task).unwrap();
        if matches!(v.kind, MultKind::Zero | MultKind::Compact) {
            assert_ne!(weak.kind.weakly_positive(), Some(false), "{}", ct.name);
        }
    }
}
