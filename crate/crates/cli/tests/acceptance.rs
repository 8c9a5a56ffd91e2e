//! The nine acceptance criteria; one PASS/FAIL line each.

#[test]
fn acceptance() {
    let criteria = conetrace_cli::acceptance::run_all();
    for c in &criteria {
        println!("{c}");
    }
    assert_eq!(criteria.len(), 9);
    let failed: Vec<u8> = criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
