//! Voltage-regulator tap controller and tap-operation wear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::DAYS_PER_YEAR;

/// Slack on time comparisons so decisions on an exact cycle boundary count.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegulatorParams {
    pub regulated_voltage_pu: f64,
    /// Voltage change per tap (pu).
    pub step_pu: f64,
    pub deadband_low_pu: f64,
    pub deadband_high_pu: f64,
    pub tap_min: i32,
    pub tap_max: i32,
    pub initial_tap: i32,
    /// Rated number of tap operations.
    pub max_operations: f64,
    /// Minimum time between tap decisions (h).
    pub operating_cycle_h: f64,
    /// Purchase price ($).
    pub capital_cost: f64,
}

impl Default for RegulatorParams {
    fn default() -> Self {
        Self {
            regulated_voltage_pu: 1.0,
            step_pu: 0.00625,
            deadband_low_pu: 0.99,
            deadband_high_pu: 1.01,
            tap_min: -16,
            tap_max: 16,
            initial_tap: 0,
            max_operations: 100_000.0,
            operating_cycle_h: 0.5,
            capital_cost: 10_000.0,
        }
    }
}

impl RegulatorParams {
    /// Violations of the parameter invariants. `dt_h` is the profile resolution.
    pub fn violations(&self, dt_h: f64) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.step_pu > 0.0) {
            v.push("regulator.step_pu: must be > 0".into());
        }
        if !(self.deadband_low_pu < self.regulated_voltage_pu
            && self.regulated_voltage_pu < self.deadband_high_pu)
        {
            v.push(
                "regulator: need deadband_low_pu < regulated_voltage_pu < deadband_high_pu".into(),
            );
        }
        if self.tap_min >= self.tap_max {
            v.push("regulator: tap_min must be below tap_max".into());
        }
        if !(self.tap_min..=self.tap_max).contains(&self.initial_tap) {
            v.push("regulator.initial_tap: outside tap limits".into());
        }
        if !(self.max_operations > 0.0) {
            v.push("regulator.max_operations: must be > 0".into());
        }
        if !(self.operating_cycle_h >= dt_h - TIME_EPS) {
            v.push("regulator.operating_cycle_h: must be >= the profile resolution".into());
        }
        if !(self.capital_cost >= 0.0) {
            v.push("regulator.capital_cost: must be >= 0".into());
        }
        v
    }

    /// Voltage ratio applied on the regulated branch at tap `h`.
    pub fn ratio(&self, tap: i32) -> f64 {
        1.0 + tap as f64 * self.step_pu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapState {
    pub tap: i32,
    /// Cumulative Σ|Δh|.
    pub travel: u64,
    pub last_decision_h: Option<f64>,
}

impl TapState {
    pub fn new(tap: i32) -> Self {
        Self {
            tap,
            travel: 0,
            last_decision_h: None,
        }
    }
}

/// The uncorrected policy value `(V − V_R)/κ`, logged for audit.
pub fn raw_policy_value(v_pu: f64, params: &RegulatorParams) -> f64 {
    (v_pu - params.regulated_voltage_pu) / params.step_pu
}

/// One controller decision at time `t_h` given the regulated-node voltage.
///
/// Inside the operating cycle nothing happens. Inside the dead-band the tap
/// holds but the decision clock restarts. Otherwise the tap moves by the
/// rounded number of steps that would bring the voltage back to the set
/// point (raising the tap on undervoltage), clamped to the tap limits.
pub fn step_tap(state: &TapState, v_pu: f64, t_h: f64, params: &RegulatorParams) -> TapState {
    if let Some(last) = state.last_decision_h {
        if t_h - last + TIME_EPS < params.operating_cycle_h {
            return *state;
        }
    }
    let mut next = TapState {
        last_decision_h: Some(t_h),
        ..*state
    };
    if (params.deadband_low_pu..=params.deadband_high_pu).contains(&v_pu) {
        return next;
    }
    // f64::round rounds half away from zero.
    let correction = ((params.regulated_voltage_pu - v_pu) / params.step_pu).round();
    let target =
        (state.tap as f64 + correction).clamp(params.tap_min as f64, params.tap_max as f64);
    next.tap = target as i32;
    next.travel += (next.tap - state.tap).unsigned_abs() as u64;
    next
}

/// Tap travel over `(n1, n2]` of a logged tap history.
pub fn travel_in_window(history: &[i32], n1: usize, n2: usize) -> Result<u64> {
    if n1 > n2 {
        return Err(Error::Range(format!("window start {n1} after end {n2}")));
    }
    if n2 >= history.len() {
        return Err(Error::Range(format!(
            "window end {n2} outside history of {} samples",
            history.len()
        )));
    }
    Ok(history[n1..=n2]
        .windows(2)
        .map(|w| (w[1] - w[0]).unsigned_abs() as u64)
        .sum())
}

/// Regulator loss of life over samples `n1..=n2`: Σ|h(n) − h(n−1)| / N_op.
pub fn vr_loss_of_life(history: &[i32], max_operations: f64, n1: usize, n2: usize) -> Result<f64> {
    if !(max_operations > 0.0) {
        return Err(Error::Domain("max operations must be > 0".into()));
    }
    Ok(travel_in_window(history, n1, n2)? as f64 / max_operations)
}

/// Years until the rated operation count is used up.
pub fn vr_lifetime(daily_travel: f64, max_operations: f64) -> Result<f64> {
    if !(daily_travel > 0.0) || !daily_travel.is_finite() {
        return Err(Error::Degenerate(
            "no wear observed: daily tap travel is zero".into(),
        ));
    }
    Ok(max_operations / (DAYS_PER_YEAR * daily_travel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(voltages: &[f64], dt: f64, params: &RegulatorParams, start_tap: i32) -> Vec<TapState> {
        let mut s = TapState::new(start_tap);
        voltages
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                s = step_tap(&s, v, k as f64 * dt, params);
                s
            })
            .collect()
    }

    #[test]
    fn inside_deadband_holds() {
        let p = RegulatorParams::default();
        let s = step_tap(&TapState::new(3), 1.0, 0.0, &p);
        assert_eq!(s.tap, 3);
        assert_eq!(s.travel, 0);
        assert_eq!(s.last_decision_h, Some(0.0));
    }

    #[test]
    fn undervoltage_raises_by_rounded_steps() {
        let p = RegulatorParams::default();
        let s = step_tap(&TapState::new(0), 0.975, 0.0, &p);
        assert_eq!(s.tap, 4);
        assert_eq!(s.travel, 4);
        let s = step_tap(&TapState::new(0), 1.025, 0.0, &p);
        assert_eq!(s.tap, -4);
        assert_eq!(s.travel, 4);
    }

    #[test]
    fn clamps_at_limit() {
        let p = RegulatorParams::default();
        let s = step_tap(&TapState::new(14), 0.80, 0.0, &p);
        assert_eq!(s.tap, 16);
        assert_eq!(s.travel, 2);
    }

    #[test]
    fn honours_operating_cycle() {
        let p = RegulatorParams::default();
        let s = step_tap(&TapState::new(0), 0.95, 0.0, &p);
        let held = step_tap(&s, 0.90, 0.3, &p);
        assert_eq!(held, s);
        let moved = step_tap(&s, 0.97, 0.5, &p);
        assert_ne!(moved.tap, s.tap);
    }

    #[test]
    fn loss_of_life_from_history() {
        assert!((vr_loss_of_life(&[0, 2, 2, 1], 10.0, 0, 3).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(vr_loss_of_life(&[4, 4, 4, 4], 10.0, 0, 3).unwrap(), 0.0);
        let alternating: Vec<i32> = (0..=10).map(|n| n % 2).collect();
        assert_eq!(vr_loss_of_life(&alternating, 10.0, 0, 10).unwrap(), 1.0);
        assert!(matches!(
            vr_loss_of_life(&[0, 1], 10.0, 0, 2),
            Err(Error::Range(_))
        ));
        let h = [0, 3, 1, 1, 5, 2];
        let whole = travel_in_window(&h, 0, 5).unwrap();
        assert_eq!(
            whole,
            travel_in_window(&h, 0, 2).unwrap() + travel_in_window(&h, 2, 5).unwrap()
        );
    }

    #[test]
    fn lifetime_inversion() {
        assert!((vr_lifetime(10.0, 73_000.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(matches!(
            vr_lifetime(0.0, 73_000.0),
            Err(Error::Degenerate(_))
        ));
        assert_eq!(
            vr_lifetime(5.0, 1e5).unwrap(),
            2.0 * vr_lifetime(10.0, 1e5).unwrap()
        );
    }

    #[test]
    fn sagging_ramp_saturates_then_stops() {
        let p = RegulatorParams::default();
        // Open loop: the regulated voltage falls steadily regardless of tap.
        let v: Vec<f64> = (0..240).map(|k| 1.0 - 0.0015 * k as f64).collect();
        let states = run(&v, 0.1, &p, 0);
        for w in states.windows(2) {
            assert!(w[1].tap >= w[0].tap);
        }
        let pinned = states.iter().position(|s| s.tap == p.tap_max).unwrap();
        let travel_at_pin = states[pinned].travel;
        assert!(states[pinned..]
            .iter()
            .all(|s| s.tap == p.tap_max && s.travel == travel_at_pin));
    }

    #[test]
    fn deeper_sag_can_mean_less_wear() {
        let p = RegulatorParams::default();
        // Mild sag oscillating across the dead-band versus a deep sag that
        // pins the tap at its limit.
        let mild: Vec<f64> = (0..240)
            .map(|k| if (k / 5) % 2 == 0 { 0.975 } else { 1.025 })
            .collect();
        let deep = vec![0.80; 240];
        let mild_travel = run(&mild, 0.1, &p, 0).last().unwrap().travel;
        let deep_travel = run(&deep, 0.1, &p, 0).last().unwrap().travel;
        assert!(deep_travel <= mild_travel, "{deep_travel} > {mild_travel}");
    }
}
