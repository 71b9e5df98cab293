//! Runs every acceptance criterion, printing one line per criterion.
//! Use `cargo test -p weakprox-cli --test acceptance -- --nocapture` to see them.

use weakprox_cli::acceptance::{run_criterion, run_suite, SuiteOptions, CRITERIA, DEFAULT_SEED};

fn opts() -> SuiteOptions {
    SuiteOptions {
        seed: DEFAULT_SEED,
        corrupt_rho: false,
    }
}

#[test]
fn all_criteria_pass_within_budget() {
    let mut failed = Vec::new();
    for (id, _, _) in CRITERIA {
        let r = run_criterion(id, opts()).unwrap();
        println!("{}", r.summary_line());
        if !r.passed || !r.within_budget() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn report_is_byte_identical_for_a_seed() {
    let a = serde_json::to_string(&run_suite(opts())).unwrap();
    let b = serde_json::to_string(&run_suite(opts())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn misdeclared_modulus_fails_certification_with_witness() {
    let r = run_criterion(
        "Z0",
        SuiteOptions {
            corrupt_rho: true,
            ..opts()
        },
    )
    .unwrap();
    assert!(!r.passed);
    let wc = r
        .checks
        .iter()
        .find(|c| c.name == "example1/weak_convexity")
        .unwrap();
    assert!(!wc.passed);
    assert!(!wc.witness.is_empty());
    // the other instances are unaffected
    assert!(r
        .checks
        .iter()
        .filter(|c| !c.name.starts_with("example1/"))
        .all(|c| c.passed));
}
