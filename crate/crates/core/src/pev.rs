//! Stochastic PEV charging events and per-node load profiles.

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Beta, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeder::FeederModel;

pub const HOURS_PER_DAY: f64 = 24.0;

/// Distribution of the initial state of charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SocDistribution {
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

/// How a vehicle's charging duration is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IntervalMode {
    /// Duration drawn directly from N(mean, std²), negative draws zeroed.
    Gaussian { mean_h: f64, std_h: f64 },
    /// Duration from the state of charge, C·(1 − SoC)/P.
    SocDriven { soc: SocDistribution },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChargingSpec {
    pub battery_kwh: f64,
    pub charger_kw: f64,
    pub start_mean_h: f64,
    pub start_std_h: f64,
    pub interval: IntervalMode,
    /// Per-node vehicle allocation as `(node id, weight)`. Defaults to the
    /// feeder's base-load weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Vec<(String, f64)>>,
}

impl Default for ChargingSpec {
    fn default() -> Self {
        Self {
            battery_kwh: 23.0,
            charger_kw: 10.0,
            start_mean_h: 20.5,
            start_std_h: 4.5,
            interval: IntervalMode::Gaussian {
                mean_h: 1.2,
                std_h: 0.6,
            },
            allocation: None,
        }
    }
}

impl ChargingSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.battery_kwh > 0.0) {
            v.push("charging.battery_kwh: must be > 0".into());
        }
        if !(self.charger_kw > 0.0) {
            v.push("charging.charger_kw: must be > 0".into());
        }
        if !self.start_mean_h.is_finite() {
            v.push("charging.start_mean_h: must be finite".into());
        }
        if !(self.start_std_h >= 0.0) || !self.start_std_h.is_finite() {
            v.push("charging.start_std_h: must be >= 0".into());
        }
        match &self.interval {
            IntervalMode::Gaussian { mean_h, std_h } => {
                if !mean_h.is_finite() {
                    v.push("charging.interval.mean_h: must be finite".into());
                }
                if !(*std_h >= 0.0) || !std_h.is_finite() {
                    v.push("charging.interval.std_h: must be >= 0".into());
                }
            }
            IntervalMode::SocDriven { soc } => match soc {
                SocDistribution::Uniform { low, high } => {
                    if !(0.0 <= *low && low <= high && *high <= 1.0) {
                        v.push("charging.interval.soc: need 0 <= low <= high <= 1".into());
                    }
                }
                SocDistribution::Beta { alpha, beta } => {
                    if !(*alpha > 0.0 && *beta > 0.0) {
                        v.push("charging.interval.soc: beta parameters must be > 0".into());
                    }
                }
            },
        }
        if let Some(alloc) = &self.allocation {
            if alloc.iter().any(|(_, w)| !(*w >= 0.0)) {
                v.push("charging.allocation: weights must be >= 0".into());
            }
            let sum: f64 = alloc.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-9 {
                v.push(format!(
                    "charging.allocation: weights sum to {sum}, expected 1"
                ));
            }
        }
        v
    }

    /// Allocation weights indexed by feeder node.
    pub fn allocation_weights(&self, model: &FeederModel) -> Result<Vec<f64>> {
        match &self.allocation {
            None => Ok(model.load_weights().to_vec()),
            Some(alloc) => {
                let mut w = vec![0.0; model.node_count()];
                for (node, weight) in alloc {
                    let i = model.node_index(node).ok_or_else(|| {
                        Error::Domain(format!("allocation refers to unknown node {node}"))
                    })?;
                    w[i] += weight;
                }
                Ok(w)
            }
        }
    }
}

/// One vehicle's charging session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingEvent {
    pub vehicle: usize,
    pub node: usize,
    /// Day of the horizon the session starts in.
    pub day: u32,
    /// Start time within the day, in [0, 24).
    pub start_h: f64,
    pub duration_h: f64,
}

/// Charging duration from the initial state of charge.
pub fn charging_interval(battery_kwh: f64, soc: f64, charger_kw: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&soc) {
        return Err(Error::Domain(format!(
            "state of charge {soc} outside [0, 1]"
        )));
    }
    if !(battery_kwh > 0.0 && charger_kw > 0.0) {
        return Err(Error::Domain(
            "battery capacity and charger power must be > 0".into(),
        ));
    }
    Ok(battery_kwh * (1.0 - soc) / charger_kw)
}

enum IntervalSampler {
    Gaussian(Normal<f64>),
    SocUniform(Uniform<f64>),
    SocBeta(Beta<f64>),
}

/// Draws charging events for a fleet with fixed size and allocation.
pub struct EventSampler {
    battery_kwh: f64,
    charger_kw: f64,
    start: Normal<f64>,
    interval: IntervalSampler,
    placement: Option<WeightedIndex<f64>>,
    fleet_size: usize,
}

impl EventSampler {
    pub fn new(spec: &ChargingSpec, fleet_size: usize, allocation: &[f64]) -> Result<Self> {
        let problems = spec.violations();
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let start = Normal::new(spec.start_mean_h, spec.start_std_h)
            .map_err(|e| Error::Domain(format!("start-time distribution: {e}")))?;
        let interval = match &spec.interval {
            IntervalMode::Gaussian { mean_h, std_h } => IntervalSampler::Gaussian(
                Normal::new(*mean_h, *std_h)
                    .map_err(|e| Error::Domain(format!("interval distribution: {e}")))?,
            ),
            IntervalMode::SocDriven { soc } => match soc {
                SocDistribution::Uniform { low, high } => IntervalSampler::SocUniform(
                    Uniform::new_inclusive(*low, *high)
                        .map_err(|e| Error::Domain(format!("soc distribution: {e}")))?,
                ),
                SocDistribution::Beta { alpha, beta } => IntervalSampler::SocBeta(
                    Beta::new(*alpha, *beta)
                        .map_err(|e| Error::Domain(format!("soc distribution: {e}")))?,
                ),
            },
        };
        if allocation.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("allocation weights must be >= 0".into()));
        }
        let sum: f64 = allocation.iter().sum();
        if fleet_size > 0 && (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "allocation weights sum to {sum}, expected 1"
            )));
        }
        let placement = if fleet_size > 0 {
            Some(
                WeightedIndex::new(allocation)
                    .map_err(|e| Error::Domain(format!("allocation weights: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            battery_kwh: spec.battery_kwh,
            charger_kw: spec.charger_kw,
            start,
            interval,
            placement,
            fleet_size,
        })
    }

    pub fn fleet_size(&self) -> usize {
        self.fleet_size
    }

    /// Draws a node for every vehicle.
    pub fn sample_placement<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match &self.placement {
            Some(p) => (0..self.fleet_size).map(|_| p.sample(rng)).collect(),
            None => Vec::new(),
        }
    }

    /// One charging session per vehicle on `day`.
    ///
    /// Per vehicle the draws are node (unless `fixed_nodes` is given), start
    /// time, then duration, so a smaller fleet's events are a prefix of a
    /// larger fleet's under the same stream.
    pub fn sample_day<R: Rng + ?Sized>(
        &self,
        day: u32,
        rng: &mut R,
        fixed_nodes: Option<&[usize]>,
    ) -> Vec<ChargingEvent> {
        let mut events = Vec::with_capacity(self.fleet_size);
        for vehicle in 0..self.fleet_size {
            let node = match (fixed_nodes, &self.placement) {
                (Some(nodes), _) => nodes[vehicle],
                (None, Some(p)) => p.sample(rng),
                (None, None) => unreachable!("placement exists for non-empty fleets"),
            };
            let start_h = self.start.sample(rng).rem_euclid(HOURS_PER_DAY);
            // rem_euclid can round up to exactly 24 for tiny negative inputs.
            let start_h = if start_h >= HOURS_PER_DAY {
                0.0
            } else {
                start_h
            };
            let duration_h = match &self.interval {
                IntervalSampler::Gaussian(d) => d.sample(rng).max(0.0),
                IntervalSampler::SocUniform(d) => self.duration_from_soc(d.sample(rng)),
                IntervalSampler::SocBeta(d) => self.duration_from_soc(d.sample(rng)),
            };
            events.push(ChargingEvent {
                vehicle,
                node,
                day,
                start_h,
                duration_h,
            });
        }
        events
    }

    fn duration_from_soc(&self, soc: f64) -> f64 {
        self.battery_kwh * (1.0 - soc.clamp(0.0, 1.0)) / self.charger_kw
    }
}

/// Samples one day of events for `fleet_size` vehicles.
pub fn sample_events<R: Rng + ?Sized>(
    spec: &ChargingSpec,
    fleet_size: usize,
    allocation: &[f64],
    rng: &mut R,
) -> Result<Vec<ChargingEvent>> {
    Ok(EventSampler::new(spec, fleet_size, allocation)?.sample_day(0, rng, None))
}

/// Penetration level (%) = aggregate charger capacity / peak base load.
pub fn penetration_level(fleet_size: usize, charger_kw: f64, peak_base_kw: f64) -> f64 {
    fleet_size as f64 * charger_kw / peak_base_kw * 100.0
}

/// Fleet size whose aggregate charger capacity gives `pl` percent.
pub fn fleet_size_for_pl(pl: f64, peak_base_kw: f64, charger_kw: f64) -> usize {
    (pl / 100.0 * peak_base_kw / charger_kw).round().max(0.0) as usize
}

/// Number of steps in a day; `dt_h` must divide 24 h.
pub fn steps_per_day(dt_h: f64) -> Result<usize> {
    if !(dt_h > 0.0) || !dt_h.is_finite() {
        return Err(Error::Resolution(format!(
            "resolution {dt_h} h must be positive"
        )));
    }
    let n = HOURS_PER_DAY / dt_h;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Resolution(format!(
            "resolution {dt_h} h does not divide 24 h"
        )));
    }
    Ok(rounded as usize)
}

/// Hourly anchors of a residential weekday curve: a morning shoulder and an
/// evening peak at 19:00.
const RESIDENTIAL_HOURLY: [f64; 24] = [
    0.55, 0.50, 0.47, 0.45, 0.45, 0.48, 0.58, 0.70, 0.72, 0.68, 0.65, 0.64, 0.63, 0.62, 0.63, 0.66,
    0.74, 0.85, 0.95, 1.00, 0.98, 0.90, 0.78, 0.65,
];

/// The default base-load shape at resolution `dt_h`, linearly interpolated
/// between hourly anchors and normalized to a peak of 1.
pub fn residential_diurnal_shape(dt_h: f64) -> Result<Vec<f64>> {
    interpolate_hourly(&RESIDENTIAL_HOURLY, dt_h).map(|mut s| {
        let peak = s.iter().copied().fold(f64::MIN, f64::max);
        s.iter_mut().for_each(|v| *v /= peak);
        s
    })
}

/// Cyclic linear interpolation of 24 hourly values at step starts.
pub fn interpolate_hourly(hourly: &[f64], dt_h: f64) -> Result<Vec<f64>> {
    if hourly.len() != 24 {
        return Err(Error::Domain(format!(
            "expected 24 hourly values, got {}",
            hourly.len()
        )));
    }
    let n = steps_per_day(dt_h)?;
    Ok((0..n)
        .map(|k| {
            let t = k as f64 * dt_h;
            let h = t.floor() as usize % 24;
            let frac = t - t.floor();
            hourly[h] * (1.0 - frac) + hourly[(h + 1) % 24] * frac
        })
        .collect())
}

/// Per-node real-power series (kW), kept as separate baseline and PEV parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub dt_h: f64,
    pub steps: usize,
    /// `baseline_kw[node][step]`
    pub baseline_kw: Vec<Vec<f64>>,
    /// `pev_kw[node][step]`
    pub pev_kw: Vec<Vec<f64>>,
}

impl LoadProfile {
    pub fn total_kw(&self, node: usize, step: usize) -> f64 {
        self.baseline_kw[node][step] + self.pev_kw[node][step]
    }

    /// Total load of every node at one step.
    pub fn step_totals(&self, step: usize) -> Vec<f64> {
        (0..self.baseline_kw.len())
            .map(|n| self.total_kw(n, step))
            .collect()
    }

    pub fn pev_total_at(&self, step: usize) -> f64 {
        self.pev_kw.iter().map(|s| s[step]).sum()
    }
}

/// Composes baseline and PEV load per node.
///
/// Each event adds `charger_kw` to its node for every step overlapping
/// `[start, start + duration)`. Sessions running past the end of the horizon
/// wrap to its start, so a one-day horizon is treated as periodic.
pub fn build_load_profile(
    base_shape: &[f64],
    model: &FeederModel,
    events: &[ChargingEvent],
    charger_kw: f64,
    dt_h: f64,
    horizon_days: u32,
) -> Result<LoadProfile> {
    let per_day = steps_per_day(dt_h)?;
    if base_shape.len() != per_day {
        return Err(Error::Domain(format!(
            "base shape has {} entries, resolution needs {per_day}",
            base_shape.len()
        )));
    }
    if base_shape.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("base shape values must be >= 0".into()));
    }
    let peak = base_shape.iter().copied().fold(f64::MIN, f64::max);
    if (peak - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "base shape peak is {peak}, expected 1"
        )));
    }
    if horizon_days == 0 {
        return Err(Error::Domain("horizon must cover at least one day".into()));
    }
    if !(charger_kw > 0.0) {
        return Err(Error::Domain("charger power must be > 0".into()));
    }

    let steps = per_day * horizon_days as usize;
    let n = model.node_count();
    let peak_kw = model.peak_base_kw();
    let baseline_kw: Vec<Vec<f64>> = model
        .load_weights()
        .iter()
        .map(|w| {
            (0..steps)
                .map(|k| w * peak_kw * base_shape[k % per_day])
                .collect()
        })
        .collect();

    let mut pev_kw = vec![vec![0.0; steps]; n];
    for ev in events {
        if ev.node >= n {
            return Err(Error::Domain(format!(
                "event node {} out of range",
                ev.node
            )));
        }
        if !(ev.duration_h > 0.0) {
            continue;
        }
        let start = ev.day as f64 * HOURS_PER_DAY + ev.start_h;
        let end = start + ev.duration_h;
        let first = (start / dt_h + 1e-9).floor() as usize;
        let last = (end / dt_h - 1e-9).ceil() as usize;
        let count = last.saturating_sub(first).min(steps);
        let series = &mut pev_kw[ev.node];
        for k in first..first + count {
            series[k % steps] += charger_kw;
        }
    }

    Ok(LoadProfile {
        dt_h,
        steps,
        baseline_kw,
        pev_kw,
    })
}
