//! Total cost of ownership: the conventional annual formulation and the
//! windowed, aging-aware formulation.
//!
//! Energy prices are brought to present value with annual compounding at
//! interest rate `i`. `pec_window(t1, t2)` is the present value of paying
//! `EC` per kWh of annual energy during years `(t1, t2]`; with `t1 = 0` it is
//! the classic annuity form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{DAYS_PER_YEAR, HOURS_PER_YEAR};

/// How the conventional formulation charges the purchase price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CapitalMode {
    /// Levelized over the insulation life with the capital-recovery factor.
    #[default]
    Annualized,
    /// The purchase price as-is.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcoParams {
    /// Transformer purchase price ($).
    pub capital_cost: f64,
    /// No-load (core) loss (kW).
    pub core_loss_kw: f64,
    /// Load loss at rated load (kW).
    pub load_loss_kw: f64,
    /// Energy cost ($/kWh).
    pub energy_cost: f64,
    /// Annual interest rate (fraction).
    pub interest_rate: f64,
    /// Dynamic load factor constant γ.
    pub dynamic_load_factor: f64,
    pub hours_per_year: f64,
    /// Insulation life used to price energy and levelize capital (years).
    pub insulation_life_years: f64,
    pub capital_mode: CapitalMode,
    /// Multiply the load-loss factor by the hours per year, like the
    /// core-loss factor. Off by default.
    pub load_loss_hours: bool,
}

impl Default for TcoParams {
    fn default() -> Self {
        Self {
            capital_cost: 4575.0,
            core_loss_kw: 0.96,
            load_loss_kw: 5.1,
            energy_cost: 0.05,
            interest_rate: 0.05,
            dynamic_load_factor: 0.2,
            hours_per_year: HOURS_PER_YEAR,
            insulation_life_years: 20.0,
            capital_mode: CapitalMode::Annualized,
            load_loss_hours: false,
        }
    }
}

impl TcoParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("capital_cost", self.capital_cost),
            ("core_loss_kw", self.core_loss_kw),
            ("load_loss_kw", self.load_loss_kw),
            ("energy_cost", self.energy_cost),
        ] {
            if !(val >= 0.0) || !val.is_finite() {
                v.push(format!("tco.{name}: must be finite and >= 0"));
            }
        }
        if !(self.interest_rate > 0.0 && self.interest_rate < 1.0) {
            v.push("tco.interest_rate: must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.dynamic_load_factor) {
            v.push("tco.dynamic_load_factor: must lie in [0, 1]".into());
        }
        if !(self.hours_per_year > 0.0) {
            v.push("tco.hours_per_year: must be > 0".into());
        }
        if !(self.insulation_life_years > 0.0) {
            v.push("tco.insulation_life_years: must be > 0".into());
        }
        v
    }

    fn load_loss_multiplier(&self) -> f64 {
        if self.load_loss_hours {
            self.hours_per_year
        } else {
            1.0
        }
    }
}

/// Present value of `1` paid at the end of each of `years` years.
pub fn annuity_factor(interest_rate: f64, years: f64) -> f64 {
    if interest_rate.abs() < 1e-12 {
        return years;
    }
    let g = (1.0 + interest_rate).powf(years);
    (g - 1.0) / (interest_rate * g)
}

pub fn capital_recovery_factor(interest_rate: f64, years: f64) -> f64 {
    1.0 / annuity_factor(interest_rate, years)
}

/// Present yearly value of energy cost over a life of `years`.
pub fn pec_conventional(energy_cost: f64, interest_rate: f64, years: f64) -> f64 {
    energy_cost * annuity_factor(interest_rate, years)
}

/// Present value of energy cost for years `(t1, t2]`.
pub fn pec_window(energy_cost: f64, interest_rate: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(0.0 <= t1 && t1 <= t2) {
        return Err(Error::Range(format!(
            "window [{t1}, {t2}] years is not ordered from 0"
        )));
    }
    if interest_rate.abs() < 1e-12 {
        return Ok(energy_cost * (t2 - t1));
    }
    let g = 1.0 + interest_rate;
    Ok(energy_cost / interest_rate * (g.powf(-t1) - g.powf(-t2)))
}

/// `γ·(m/ŝ) + (1 − γ)·(m/ŝ)²`.
pub fn loss_factor(mean_load: f64, peak_load: f64, gamma: f64) -> Result<f64> {
    if !(peak_load > 0.0) {
        return Err(Error::Domain("peak load must be > 0".into()));
    }
    if !(mean_load >= 0.0) || mean_load > peak_load {
        return Err(Error::Domain(format!(
            "mean load {mean_load} must lie in [0, peak {peak_load}]"
        )));
    }
    let r = mean_load / peak_load;
    Ok(gamma * r + (1.0 - gamma) * r * r)
}

/// Conventional annual TCO ($/yr): capital charge + CL·A + LL·B with
/// `A = N·PEC` and `B = LoF·PEC·P̂²`.
///
/// `peak_norm` is ŝ/s_R and `avg_over_peak` is s_avg/ŝ.
pub fn conventional_tco(params: &TcoParams, peak_norm: f64, avg_over_peak: f64) -> Result<f64> {
    let pec = pec_conventional(
        params.energy_cost,
        params.interest_rate,
        params.insulation_life_years,
    );
    let lof = loss_factor(avg_over_peak, 1.0, params.dynamic_load_factor)?;
    let capital = match params.capital_mode {
        CapitalMode::Annualized => {
            params.capital_cost
                * capital_recovery_factor(params.interest_rate, params.insulation_life_years)
        }
        CapitalMode::Raw => params.capital_cost,
    };
    let a = params.hours_per_year * pec;
    let b = lof * pec * peak_norm * peak_norm * params.load_loss_multiplier();
    Ok(capital + params.core_loss_kw * a + params.load_loss_kw * b)
}

/// Mean and peak of an expected loading series against the unit rating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    pub mean_kva: f64,
    pub peak_kva: f64,
    pub rated_kva: f64,
}

impl LoadStats {
    pub fn from_series(expected_kva: &[f64], rated_kva: f64) -> Result<Self> {
        if expected_kva.is_empty() {
            return Err(Error::Domain("empty load series".into()));
        }
        if !(rated_kva > 0.0) {
            return Err(Error::Domain("rating must be > 0".into()));
        }
        let mean_kva = expected_kva.iter().sum::<f64>() / expected_kva.len() as f64;
        let peak_kva = expected_kva.iter().copied().fold(0.0, f64::max);
        // Guard against the mean exceeding the peak by an ulp.
        Ok(Self {
            mean_kva: mean_kva.min(peak_kva),
            peak_kva,
            rated_kva,
        })
    }

    pub fn peak_norm(&self) -> f64 {
        self.peak_kva / self.rated_kva
    }

    /// Loss factor, zero for an unloaded unit.
    pub fn loss_factor(&self, gamma: f64) -> Result<f64> {
        if self.peak_kva == 0.0 {
            return Ok(0.0);
        }
        loss_factor(self.mean_kva, self.peak_kva, gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub t1_years: f64,
    pub t2_years: f64,
    pub capital: f64,
    pub core_loss: f64,
    pub load_loss: f64,
    pub total: f64,
    pub replacements: u32,
}

impl CostBreakdown {
    fn new(
        t1: f64,
        t2: f64,
        capital: f64,
        core_loss: f64,
        load_loss: f64,
        replacements: u32,
    ) -> Self {
        Self {
            t1_years: t1,
            t2_years: t2,
            capital,
            core_loss,
            load_loss,
            total: capital + core_loss + load_loss,
            replacements,
        }
    }
}

fn operating_terms(params: &TcoParams, stats: &LoadStats, pec: f64) -> Result<(f64, f64)> {
    let lof = stats.loss_factor(params.dynamic_load_factor)?;
    let p = stats.peak_norm();
    let core = params.core_loss_kw * params.hours_per_year * pec;
    let load = params.load_loss_kw * lof * pec * p * p * params.load_loss_multiplier();
    Ok((core, load))
}

/// Windowed transformer TCO over years `[t1, t2]`.
///
/// The capital term is the consumed share of the unit, `L_x·C_o`; operating
/// terms price the window's losses at present value.
pub fn modified_tco_transformer(
    loss_of_life: f64,
    params: &TcoParams,
    stats: &LoadStats,
    t1: f64,
    t2: f64,
) -> Result<CostBreakdown> {
    if !(loss_of_life >= 0.0) {
        return Err(Error::Domain("loss of life must be >= 0".into()));
    }
    let pec = pec_window(params.energy_cost, params.interest_rate, t1, t2)?;
    let (core, load) = operating_terms(params, stats, pec)?;
    Ok(CostBreakdown::new(
        t1,
        t2,
        loss_of_life * params.capital_cost,
        core,
        load,
        0,
    ))
}

/// Instantaneous cost rate ($/yr) at year `t` for a unit aging at
/// `annual_loss_of_life` per year: the derivative of the windowed TCO.
pub fn cost_rate(
    annual_loss_of_life: f64,
    params: &TcoParams,
    stats: &LoadStats,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Range("time must be >= 0".into()));
    }
    let i = params.interest_rate;
    let discount = if i.abs() < 1e-12 {
        1.0
    } else {
        (1.0 + i).ln() / i * (1.0 + i).powf(-t)
    };
    let (core, load) = operating_terms(params, stats, params.energy_cost * discount)?;
    Ok(annual_loss_of_life * params.capital_cost + core + load)
}

/// Regulator TCO over a window: consumed share of its capital cost.
pub fn vr_tco(loss_of_life: f64, capital_cost: f64) -> f64 {
    loss_of_life * capital_cost
}

/// Times (years) at which an exhausted unit is replaced within `horizon`.
pub fn replacement_times(lifetime_years: f64, horizon_years: f64) -> Vec<f64> {
    let mut times = Vec::new();
    if !(lifetime_years > 0.0) || !lifetime_years.is_finite() {
        return times;
    }
    let mut k = 1u32;
    loop {
        let t = k as f64 * lifetime_years;
        // A unit wearing out exactly at the horizon is not replaced.
        if t >= horizon_years * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times
}

/// Long-term transformer cost over `[0, horizon]` with replacement.
///
/// A unit is bought at t = 0 and a new one each time cumulative loss of life
/// reaches 1 before the horizon. Operating cost accrues year by year at
/// present value.
pub fn long_term_cost_with_replacement(
    daily_loss_of_life: f64,
    params: &TcoParams,
    stats: &LoadStats,
    horizon_years: f64,
) -> Result<CostBreakdown> {
    cumulative_proposed_cost(
        daily_loss_of_life,
        params,
        stats,
        horizon_years,
        horizon_years,
    )
}

/// Proposed-method cumulative cost through year `t` of an evaluation
/// running to `horizon_years`.
pub fn cumulative_proposed_cost(
    daily_loss_of_life: f64,
    params: &TcoParams,
    stats: &LoadStats,
    t: f64,
    horizon_years: f64,
) -> Result<CostBreakdown> {
    if !(horizon_years > 0.0) {
        return Err(Error::Domain("horizon must be > 0".into()));
    }
    if !(daily_loss_of_life >= 0.0) {
        return Err(Error::Domain("daily loss of life must be >= 0".into()));
    }
    if !(0.0..=horizon_years).contains(&t) {
        return Err(Error::Range(format!(
            "year {t} outside [0, {horizon_years}]"
        )));
    }
    let lifetime = if daily_loss_of_life > 0.0 {
        1.0 / (DAYS_PER_YEAR * daily_loss_of_life)
    } else {
        f64::INFINITY
    };
    let replacements = replacement_times(lifetime, horizon_years)
        .into_iter()
        .filter(|&r| r <= t)
        .count() as u32;

    let mut core = 0.0;
    let mut load = 0.0;
    let mut y0 = 0.0;
    while y0 < t {
        let y1 = (y0 + 1.0).min(t);
        let pec = pec_window(params.energy_cost, params.interest_rate, y0, y1)?;
        let (c, l) = operating_terms(params, stats, pec)?;
        core += c;
        load += l;
        y0 = y1;
    }
    let capital = params.capital_cost * (1 + replacements) as f64;
    Ok(CostBreakdown::new(
        0.0,
        t,
        capital,
        core,
        load,
        replacements,
    ))
}

/// Conventional-method cumulative present value through year `t`: the
/// capital charge of [`conventional_tco`] discounted as an annuity, plus
/// operating terms priced over `[0, t]`.
pub fn cumulative_conventional_cost(
    params: &TcoParams,
    stats: &LoadStats,
    t: f64,
) -> Result<CostBreakdown> {
    if !(t >= 0.0) {
        return Err(Error::Range("year must be >= 0".into()));
    }
    let capital = match params.capital_mode {
        CapitalMode::Annualized => {
            params.capital_cost
                * capital_recovery_factor(params.interest_rate, params.insulation_life_years)
                * annuity_factor(params.interest_rate, t)
        }
        CapitalMode::Raw if t > 0.0 => params.capital_cost,
        CapitalMode::Raw => 0.0,
    };
    let pec = pec_conventional(params.energy_cost, params.interest_rate, t);
    let (core, load) = operating_terms(params, stats, pec)?;
    Ok(CostBreakdown::new(0.0, t, capital, core, load, 0))
}
