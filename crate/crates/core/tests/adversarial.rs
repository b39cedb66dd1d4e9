//! The shared-bonus fixture on which any algorithm that collects per-color
//! reservoirs by value alone is capped near a constant, while the optimum
//! scales with the number of colors.

mod common;

use common::adversarial_fixture;
use fairmat_core::brute::brute_force_opt;
use fairmat_core::streaming::{
    fair_streaming, greedy_fair_reservoir, greedy_fair_streaming, ExactRoutineA, RunCarry,
};

#[test]
fn greedy_one_pass_is_trapped_by_the_decoys() {
    let fixture = adversarial_fixture(4);
    let inst = &fixture.instance;
    let report = greedy_fair_streaming(&inst.elements, &inst.constraints, &inst.objective).unwrap();
    assert!(report.value <= 1.01 + 1e-9);
    assert_eq!(report.violation, 0);

    // Every reservoir kept the decoy, so no subset of the reservoirs does
    // better than the shared bonus.
    let opt = brute_force_opt(&inst.ground(), &inst.constraints, &inst.objective)
        .unwrap()
        .value()
        .unwrap();
    // All unit elements plus one decoy edge the all-units set by the bonus.
    assert!((opt - (fixture.color_count as f64 + 0.01)).abs() < 1e-9);
}

#[test]
fn two_pass_with_exact_routine_escapes() {
    let fixture = adversarial_fixture(4);
    let inst = &fixture.instance;
    let opt = brute_force_opt(&inst.ground(), &inst.constraints, &inst.objective)
        .unwrap()
        .value()
        .unwrap();
    let fp = greedy_fair_reservoir(&inst.elements, &inst.constraints, &inst.objective).unwrap();
    let exact = ExactRoutineA::default();
    let report = fair_streaming(
        &inst.elements,
        &fp.chosen,
        &inst.constraints,
        &inst.objective,
        &exact,
        RunCarry::default(),
    )
    .unwrap();
    assert!(report.value >= opt / 2.0 - 1e-9);
    // The second pass sees the unit elements again and recovers them.
    assert!(report.value >= 2.0);
}
