mod common;

use gridsim_core::mcs::{Execution, Simulation};
use gridsim_core::report::aggregate_rows;

#[test]
fn worker_count_does_not_change_results() {
    let sim = Simulation::new(common::small_config(12, &[0.0, 150.0, 300.0])).unwrap();
    let seq = sim.run(Execution::Sequential).unwrap();
    let par = sim.run(Execution::Parallel { threads: Some(4) }).unwrap();
    assert_eq!(seq.scenarios, par.scenarios);
    let a = sim.aggregate(&seq).unwrap();
    let b = sim.aggregate(&par).unwrap();
    assert_eq!(a, b);
    assert_eq!(aggregate_rows(&a), aggregate_rows(&b));
}

#[test]
fn scenarios_are_independent() {
    let few = Simulation::new(common::small_config(3, &[200.0])).unwrap();
    let many = Simulation::new(common::small_config(6, &[200.0])).unwrap();
    let a = few.run(Execution::Sequential).unwrap().scenarios;
    let b = many.run(Execution::Sequential).unwrap().scenarios;
    assert_eq!(a[..], b[..3]);
}

#[test]
fn tap_and_throughput_contracts_hold_everywhere() {
    let sim = Simulation::new(common::small_config(10, &[0.0, 100.0, 200.0, 300.0])).unwrap();
    let reg = sim.config().regulator.clone();
    let run = sim.run(Execution::default()).unwrap();
    assert!(run.failures.is_empty());
    for r in &run.scenarios {
        assert!(r.transformer_kva.iter().all(|s| *s >= 0.0));
        assert!(r
            .tap_history
            .iter()
            .all(|h| (reg.tap_min..=reg.tap_max).contains(h)));
        assert!(r.daily_loss_of_life >= 0.0);
        // Tap changes are separated by at least one operating cycle.
        let mut last_change: Option<f64> = None;
        for w in r.taps.windows(2) {
            if w[1].tap != w[0].tap {
                if let Some(t) = last_change {
                    assert!(
                        w[1].t_h - t >= reg.operating_cycle_h - 1e-9,
                        "scenario {} at {}",
                        r.index,
                        w[1].t_h
                    );
                }
                last_change = Some(w[1].t_h);
            }
        }
        let travel: u64 = r
            .tap_history
            .windows(2)
            .map(|w| (w[1] - w[0]).unsigned_abs() as u64)
            .sum();
        assert_eq!(travel as f64, r.daily_travel);
    }
}

#[test]
fn aggregate_statistics_are_sane() {
    let sim = Simulation::new(common::small_config(8, &[0.0, 100.0, 300.0])).unwrap();
    let agg = sim
        .aggregate(&sim.run(Execution::default()).unwrap())
        .unwrap();
    assert!(!agg.flagged);
    for l in &agg.levels {
        for s in [l.daily_loss_of_life, l.daily_travel] {
            assert!(s.std >= 0.0);
            assert!(s.min <= s.mean && s.mean <= s.max);
        }
        assert_eq!(l.curve.len(), 21);
    }
    let reference = sim.run_reference().unwrap();
    assert_eq!(
        agg.levels[0].daily_loss_of_life.mean,
        reference.daily_loss_of_life
    );
    assert_eq!(agg.levels[0].daily_loss_of_life.std, 0.0);
}

#[test]
fn evening_peak_in_expected_loading() {
    let sim = Simulation::new(common::small_config(100, &[300.0])).unwrap();
    let agg = sim
        .aggregate(&sim.run(Execution::default()).unwrap())
        .unwrap();
    let k = &agg.levels[0].expected_loading;
    let dt = sim.config().run.dt_h;
    let argmax = k
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let t = argmax as f64 * dt;
    assert!((18.5..=22.5).contains(&t), "peak at {t} h");
}

#[test]
fn lifetime_falls_with_penetration() {
    let sim = Simulation::new(common::small_config(
        30,
        &[0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0],
    ))
    .unwrap();
    let agg = sim
        .aggregate(&sim.run(Execution::default()).unwrap())
        .unwrap();
    for w in agg.levels.windows(2) {
        assert!(w[1].transformer_lifetime_years <= w[0].transformer_lifetime_years);
    }
}

#[test]
fn common_random_numbers_can_be_disabled() {
    let mut c = common::small_config(2, &[100.0, 200.0]);
    c.run.traces = true;
    let crn = Simulation::new(c.clone()).unwrap();
    c.run.common_random_numbers = false;
    let indep = Simulation::new(c).unwrap();
    let prefix = |sim: &Simulation| {
        let a = sim.run_scenario(100.0, 0).unwrap().event_list.unwrap();
        let b = sim.run_scenario(200.0, 0).unwrap().event_list.unwrap();
        a[..] == b[..a.len()]
    };
    assert!(prefix(&crn));
    assert!(!prefix(&indep));
}

#[test]
fn nonconvergence_is_reported_with_scenario() {
    let mut c = common::small_config(2, &[300.0]);
    c.run.solver.max_iterations = 2;
    let sim = Simulation::new(c).unwrap();
    let err = sim.run_scenario(300.0, 1).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("scenario 1") && msg.contains("300"), "{msg}");
    let agg = sim
        .aggregate(&sim.run(Execution::default()).unwrap())
        .unwrap();
    assert!(agg.flagged);
    assert_eq!(agg.failures.len(), 2);
}
