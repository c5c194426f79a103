use nestcalc::suite::{self, SuiteRow};

const SEED: u64 = 0;

fn report(row: &SuiteRow) {
    let status = if row.passed { "PASS" } else { "FAIL" };
    println!("{status} criterion {:>2} {} ({} ms): {}", row.id, row.key, row.elapsed_ms, row.detail);
}

#[test]
fn acceptance_criteria() {
    let report_all = suite::verify_suite(SEED);
    for row in &report_all.rows {
        report(row);
    }
    assert_eq!(report_all.rows.len(), 12);
    let failed: Vec<u8> = report_all.rows.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
