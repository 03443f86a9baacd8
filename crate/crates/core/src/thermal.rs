//! Transformer top-oil / hot-spot dynamics, insulation aging and loss of life.
//!
//! Both thermal states relax exponentially toward load-dependent targets:
//!
//! - top-oil rise toward `ΔQ_TO,R · ((1 + R·K²)/(1 + R))^x` with `τ_TO`,
//! - hot-spot rise over top-oil toward `ΔQ_H,R · K^y` with `τ_H`,
//!
//! and the hot-spot temperature is their sum on top of ambient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_YEAR: f64 = 8760.0;
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    /// Rated top-oil rise over ambient (K).
    pub top_oil_rise_k: f64,
    /// Rated hot-spot rise over top-oil (K).
    pub hot_spot_rise_k: f64,
    pub oil_time_constant_h: f64,
    pub winding_time_constant_h: f64,
    pub oil_exponent: f64,
    pub winding_exponent: f64,
    /// Ratio of load loss at rated load to no-load loss.
    pub loss_ratio: f64,
    pub aging_alpha: f64,
    pub aging_beta: f64,
    pub aging_omega: f64,
    /// Normal insulation life (h).
    pub insulation_life_h: f64,
    /// Constant ambient temperature (°C), used when no hourly profile is set.
    pub ambient_c: f64,
    /// Optional 24 hourly ambient temperatures (°C).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambient_hourly_c: Option<Vec<f64>>,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            top_oil_rise_k: 55.0,
            hot_spot_rise_k: 25.0,
            oil_time_constant_h: 3.5,
            winding_time_constant_h: 0.08,
            oil_exponent: 0.8,
            winding_exponent: 1.6,
            loss_ratio: 5.0,
            aging_alpha: 15000.0 / 383.0,
            aging_beta: 15000.0,
            aging_omega: 273.0,
            insulation_life_h: 180_000.0,
            ambient_c: 30.0,
            ambient_hourly_c: None,
        }
    }
}

impl ThermalParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.oil_time_constant_h > 0.0) {
            v.push("thermal.oil_time_constant_h: must be > 0".into());
        }
        if !(self.winding_time_constant_h > 0.0) {
            v.push("thermal.winding_time_constant_h: must be > 0".into());
        }
        for (name, val) in [
            ("oil_exponent", self.oil_exponent),
            ("winding_exponent", self.winding_exponent),
        ] {
            if !(val > 0.5 && val < 2.5) {
                v.push(format!("thermal.{name}: must lie in (0.5, 2.5)"));
            }
        }
        if !(self.insulation_life_h > 0.0) {
            v.push("thermal.insulation_life_h: must be > 0".into());
        }
        if !(self.aging_beta > 0.0) {
            v.push("thermal.aging_beta: must be > 0".into());
        }
        if !(self.loss_ratio >= 0.0) {
            v.push("thermal.loss_ratio: must be >= 0".into());
        }
        if !self.top_oil_rise_k.is_finite() || !self.hot_spot_rise_k.is_finite() {
            v.push("thermal: rated rises must be finite".into());
        }
        if !self.ambient_c.is_finite() {
            v.push("thermal.ambient_c: must be finite".into());
        }
        if let Some(h) = &self.ambient_hourly_c {
            if h.len() != 24 || h.iter().any(|t| !t.is_finite()) {
                v.push("thermal.ambient_hourly_c: needs 24 finite values".into());
            }
        }
        v
    }

    /// Steady top-oil rise over ambient at load factor `k`.
    pub fn ultimate_top_oil_rise(&self, k: f64) -> f64 {
        let r = self.loss_ratio;
        self.top_oil_rise_k * ((1.0 + r * k * k) / (1.0 + r)).powf(self.oil_exponent)
    }

    /// Steady hot-spot rise over top-oil at load factor `k`.
    pub fn ultimate_hot_spot_rise(&self, k: f64) -> f64 {
        self.hot_spot_rise_k * k.powf(self.winding_exponent)
    }

    pub fn insulation_life_years(&self) -> f64 {
        self.insulation_life_h / HOURS_PER_YEAR
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t_h: f64,
    pub top_oil_c: f64,
    /// Hot-spot rise over top-oil (K).
    pub hot_spot_rise_k: f64,
    pub hot_spot_c: f64,
}

impl ThermalState {
    pub fn new(t_h: f64, top_oil_c: f64, hot_spot_rise_k: f64) -> Self {
        Self {
            t_h,
            top_oil_c,
            hot_spot_rise_k,
            hot_spot_c: top_oil_c + hot_spot_rise_k,
        }
    }

    /// Equilibrium under constant load factor `k` and ambient.
    pub fn steady(t_h: f64, k: f64, ambient_c: f64, params: &ThermalParams) -> Self {
        Self::new(
            t_h,
            ambient_c + params.ultimate_top_oil_rise(k),
            params.ultimate_hot_spot_rise(k),
        )
    }
}

/// Advances the thermal state by `dt_h` under constant load factor `k`.
///
/// Top-oil uses an explicit Euler step and needs `dt ≤ τ_TO/2`. The hot-spot
/// rise does the same when `dt ≤ τ_H/2`; for faster windings it takes the
/// exact exponential update for piecewise-constant load, which tends to the
/// quasi-stationary rise as `τ_H/dt → 0`.
pub fn step_thermal(
    state: &ThermalState,
    k: f64,
    ambient_c: f64,
    dt_h: f64,
    params: &ThermalParams,
) -> Result<ThermalState> {
    if !(dt_h > 0.0) || !dt_h.is_finite() {
        return Err(Error::Stability(format!(
            "time step {dt_h} h must be positive"
        )));
    }
    if dt_h > params.oil_time_constant_h / 2.0 {
        return Err(Error::Stability(format!(
            "time step {dt_h} h exceeds half the oil time constant ({} h)",
            params.oil_time_constant_h
        )));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!(
            "load factor {k} must be finite and >= 0"
        )));
    }

    let oil_target = ambient_c + params.ultimate_top_oil_rise(k);
    let top_oil =
        state.top_oil_c + dt_h / params.oil_time_constant_h * (oil_target - state.top_oil_c);

    let rise_target = params.ultimate_hot_spot_rise(k);
    let tau_h = params.winding_time_constant_h;
    let rise = if dt_h <= tau_h / 2.0 {
        state.hot_spot_rise_k + dt_h / tau_h * (rise_target - state.hot_spot_rise_k)
    } else {
        rise_target + (state.hot_spot_rise_k - rise_target) * (-dt_h / tau_h).exp()
    };

    Ok(ThermalState::new(state.t_h + dt_h, top_oil, rise))
}

/// Runs the thermal model over a load-factor series starting from the steady
/// state of the first step. Returns `k.len() + 1` states at step boundaries.
pub fn simulate(
    k: &[f64],
    ambient_c: &[f64],
    dt_h: f64,
    params: &ThermalParams,
) -> Result<Vec<ThermalState>> {
    if k.len() != ambient_c.len() {
        return Err(Error::Domain(
            "load and ambient series differ in length".into(),
        ));
    }
    let Some((&k0, &a0)) = k.first().zip(ambient_c.first()) else {
        return Ok(Vec::new());
    };
    let mut states = Vec::with_capacity(k.len() + 1);
    let mut state = ThermalState::steady(0.0, k0, a0, params);
    states.push(state);
    for (step, (&kk, &amb)) in k.iter().zip(ambient_c).enumerate() {
        state = step_thermal(&state, kk, amb, dt_h, params)?;
        // Avoid drift from repeated addition of dt.
        state.t_h = (step + 1) as f64 * dt_h;
        states.push(state);
    }
    Ok(states)
}

/// Accelerated aging factor `exp(α − β/(Q_HST + Ω))`.
pub fn aging_factor(hot_spot_c: f64, params: &ThermalParams) -> Result<f64> {
    let abs = hot_spot_c + params.aging_omega;
    if !(abs > 0.0) {
        return Err(Error::Domain(format!(
            "hot-spot {hot_spot_c} °C is at or below the aging reference zero"
        )));
    }
    Ok((params.aging_alpha - params.aging_beta / abs).exp())
}

/// Loss of life over `[t1_h, t2_h]` from an aging-factor series sampled every
/// `dt_h` hours from t = 0, by trapezoidal quadrature.
///
/// Windows need not align with samples; the integrand is the piecewise-linear
/// interpolant, which keeps the result additive over adjacent windows.
pub fn loss_of_life(
    faa: &[f64],
    dt_h: f64,
    insulation_life_h: f64,
    t1_h: f64,
    t2_h: f64,
) -> Result<f64> {
    if !(insulation_life_h > 0.0) {
        return Err(Error::Domain("insulation life must be > 0".into()));
    }
    Ok(integrate_linear(faa, dt_h, t1_h, t2_h)? / insulation_life_h)
}

/// ∫ of the piecewise-linear interpolant of `samples` over `[a, b]`.
pub fn integrate_linear(samples: &[f64], dt_h: f64, a: f64, b: f64) -> Result<f64> {
    if !(dt_h > 0.0) {
        return Err(Error::Domain("sample spacing must be > 0".into()));
    }
    if !(a <= b) {
        return Err(Error::Range(format!("window start {a} after end {b}")));
    }
    let span = samples.len().saturating_sub(1) as f64 * dt_h;
    let slack = 1e-9 * dt_h;
    if a < -slack || b > span + slack {
        return Err(Error::Range(format!(
            "window [{a}, {b}] h outside series [0, {span}] h"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(cumulative(samples, dt_h, b) - cumulative(samples, dt_h, a))
}

fn cumulative(samples: &[f64], dt_h: f64, t: f64) -> f64 {
    let last = samples.len() - 1;
    let pos = (t / dt_h).clamp(0.0, last as f64);
    let k = (pos.floor() as usize).min(last.saturating_sub(1));
    let frac = pos - k as f64;
    let whole: f64 = samples[..=k]
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) * dt_h)
        .sum();
    if frac == 0.0 || k == last {
        return whole;
    }
    let f0 = samples[k];
    let f_t = f0 + frac * (samples[k + 1] - f0);
    whole + 0.5 * (f0 + f_t) * frac * dt_h
}

/// Years until cumulative loss of life reaches 1 at a constant daily loss.
pub fn transformer_lifetime(daily_loss: f64) -> Result<f64> {
    if !(daily_loss > 0.0) || !daily_loss.is_finite() {
        return Err(Error::Degenerate(format!(
            "daily loss of life {daily_loss} gives no finite lifetime"
        )));
    }
    Ok(1.0 / (DAYS_PER_YEAR * daily_loss))
}
