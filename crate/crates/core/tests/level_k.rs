mod support;

use support::suites::level_k_suite;

#[test]
fn best_responses_match_path_enumeration() {
    let (compared, mismatches) = level_k_suite(200, 42);
    assert!(compared >= 200 * 2);
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}
