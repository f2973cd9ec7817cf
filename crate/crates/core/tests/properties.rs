//! Property suites. Each one can be run on its own, e.g.
//! `cargo test -p whilesem --test properties no_up_from_down`.

mod support;

const CASES: u32 = 256;

fn check(result: Result<(), String>) {
    if let Err(e) = result {
        panic!("{e}");
    }
}

#[test]
fn no_up_from_down() {
    check(support::no_up_from_down(CASES));
}

#[test]
fn no_div_from_source() {
    check(support::no_div_from_source(CASES));
}

#[test]
fn finite_derivations_accepted() {
    check(support::finite_derivations_accepted(CASES));
}

#[test]
fn up_store_irrelevance() {
    check(support::up_store_irrelevance(CASES));
}

#[test]
fn parse_pretty_round_trip() {
    check(support::parse_pretty_round_trip(CASES * 4));
}

#[test]
fn fuel_monotonicity() {
    check(support::fuel_monotonicity(CASES));
}

#[test]
fn threading_idempotent() {
    check(support::threading_idempotent(64));
}

#[test]
fn metrics_invariant() {
    check(support::metrics_invariant(CASES));
}

#[test]
fn generator_deterministic() {
    check(support::generator_deterministic(CASES));
}

#[test]
fn small_big_agree() {
    check(support::small_big_agree(CASES));
}

#[test]
fn lasso_sound() {
    check(support::lasso_sound(CASES));
}

#[test]
fn every_property_is_listed() {
    // the acceptance report runs this list; keep it in step with the tests above
    assert_eq!(support::PROPERTIES.len(), 11);
}
