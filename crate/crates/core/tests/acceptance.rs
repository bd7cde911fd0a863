//! The acceptance suite, one test per criterion. The suite runs once (twice
//! internally, for the determinism criterion) and each test reads its line.

use std::sync::OnceLock;

use qchan::acceptance::{run_full, AcceptanceReport};
use qchan::sampling::DEFAULT_SEED;

fn report() -> &'static AcceptanceReport {
    static REPORT: OnceLock<AcceptanceReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let r = run_full(DEFAULT_SEED);
        eprint!("{}", r.table());
        r
    })
}

fn check(id: usize) {
    let o = report().outcomes.iter().find(|o| o.id == id).expect("criterion present");
    println!("{}", o.detail);
    assert!(o.passed, "criterion {id} ({}): {}", o.title, o.detail);
}

macro_rules! criteria {
    ($($name:ident = $id:literal),* $(,)?) => {
        $(#[test] fn $name() { check($id); })*
    };
}

criteria! {
    c01_fisher_closed_form = 1,
    c02_d2_closed_vs_variational = 2,
    c03_d2_additivity = 3,
    c04_positivity_and_identity = 4,
    c05_taylor_expansion_slope = 5,
    c06_protocol_cost_scaling = 6,
    c07_protocol_error_scaling = 7,
    c08_rate_consistency = 8,
    c09_single_use_sandwich = 9,
    c10_metrology_standard_limit = 10,
    c11_heisenberg_exemplar = 11,
    c12_inequality_suites = 12,
    c13_condition_classifier = 13,
    c14_determinism = 14,
}

#[test]
fn every_criterion_has_a_test() {
    assert_eq!(report().outcomes.len(), qchan::acceptance::CRITERIA);
}
