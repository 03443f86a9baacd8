//! Monte-Carlo orchestration: scenario generation, the per-step simulation
//! loop, aggregation and penetration-level sweeps.
//!
//! Every scenario owns a random stream derived from `(root seed, scenario
//! index)` (plus the penetration level when common random numbers are off),
//! so results do not depend on worker count or scheduling.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeder::{
    build_builtin_feeder, loading_factor, solve_power_flow_with, transformer_kva, FeederDocument,
    FeederModel, SolverOptions,
};
use crate::pev::{
    build_load_profile, fleet_size_for_pl, interpolate_hourly, residential_diurnal_shape,
    steps_per_day, ChargingEvent, ChargingSpec, EventSampler, HOURS_PER_DAY,
};
use crate::regulator::{raw_policy_value, step_tap, vr_lifetime, RegulatorParams, TapState};
use crate::tco::{
    conventional_tco, cumulative_conventional_cost, cumulative_proposed_cost,
    modified_tco_transformer, vr_tco, CostBreakdown, LoadStats, TcoParams,
};
use crate::thermal::{
    aging_factor, loss_of_life, simulate, transformer_lifetime, ThermalParams, ThermalState,
    DAYS_PER_YEAR,
};

/// Where the feeder comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeederSource {
    /// `"builtin"`
    Named(String),
    /// `{"path": "feeder.json"}`, resolved when the configuration is loaded.
    Path { path: PathBuf },
    /// `{"model": {...}}`
    Inline { model: FeederDocument },
}

impl Default for FeederSource {
    fn default() -> Self {
        FeederSource::Named("builtin".into())
    }
}

impl FeederSource {
    pub fn resolve(&self) -> Result<FeederModel> {
        match self {
            FeederSource::Named(name) if name == "builtin" => Ok(build_builtin_feeder()),
            FeederSource::Named(name) => Err(Error::Config(vec![format!(
                "feeder: unknown built-in feeder \"{name}\""
            )])),
            FeederSource::Path { path } => {
                let text = std::fs::read_to_string(path)?;
                FeederModel::from_json_str(&text)
            }
            FeederSource::Inline { model } => FeederModel::from_document(model.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Penetration levels to simulate (%).
    pub penetration_levels: Vec<f64>,
    pub scenarios: usize,
    pub seed: u64,
    pub horizon_days: u32,
    pub dt_h: f64,
    pub evaluation_years: f64,
    /// Reuse scenario streams across penetration levels.
    pub common_random_numbers: bool,
    /// Redraw vehicle placement in every scenario, not only timing.
    pub resample_placement: bool,
    /// Keep per-scenario traces for export.
    pub traces: bool,
    /// Optional 24 hourly base-load values; defaults to a residential curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_shape_hourly: Option<Vec<f64>>,
    pub solver: SolverOptions,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            penetration_levels: vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0],
            scenarios: 100,
            seed: 2017,
            horizon_days: 1,
            dt_h: 0.1,
            evaluation_years: 20.0,
            common_random_numbers: true,
            resample_placement: true,
            traces: false,
            base_shape_hourly: None,
            solver: SolverOptions::default(),
        }
    }
}

/// Full run configuration; every section falls back to the case-study defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub feeder: FeederSource,
    pub charging: ChargingSpec,
    pub thermal: ThermalParams,
    pub regulator: RegulatorParams,
    pub tco: TcoParams,
    pub run: RunSettings,
}

impl RunConfig {
    /// Every invariant violation, one line each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let r = &self.run;
        if r.scenarios < 1 {
            v.push("run.scenarios: must be >= 1".into());
        }
        if r.penetration_levels.is_empty() {
            v.push("run.penetration_levels: must not be empty".into());
        }
        if r.penetration_levels
            .iter()
            .any(|pl| !(*pl >= 0.0) || !pl.is_finite())
        {
            v.push("run.penetration_levels: values must be finite and >= 0".into());
        }
        if let Err(e) = steps_per_day(r.dt_h) {
            v.push(format!("run.dt_h: {e}"));
        }
        if r.horizon_days < 1 {
            v.push("run.horizon_days: must be >= 1".into());
        }
        if !(r.evaluation_years > 0.0) {
            v.push("run.evaluation_years: must be > 0".into());
        }
        if !(r.solver.tolerance > 0.0) || r.solver.max_iterations == 0 {
            v.push("run.solver: tolerance and max_iterations must be positive".into());
        }
        if let Some(shape) = &r.base_shape_hourly {
            if shape.len() != 24
                || shape.iter().any(|x| !(*x >= 0.0))
                || shape.iter().all(|x| *x == 0.0)
            {
                v.push("run.base_shape_hourly: needs 24 non-negative values, not all zero".into());
            }
        }
        if r.dt_h > 0.0 && r.dt_h > self.thermal.oil_time_constant_h / 2.0 {
            v.push("run.dt_h: must not exceed half the oil time constant".into());
        }
        v.extend(self.charging.violations());
        v.extend(self.thermal.violations());
        v.extend(self.regulator.violations(r.dt_h));
        v.extend(self.tco.violations());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PLACEMENT_SALT: u64 = 0x706C_6163_656D_656E;

/// Seed of one scenario's stream.
pub fn scenario_seed(root: u64, pl: f64, index: usize, common_random_numbers: bool) -> u64 {
    let mut h = splitmix64(root);
    if !common_random_numbers {
        h = splitmix64(h ^ pl.to_bits());
    }
    splitmix64(h ^ index as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapRecord {
    pub t_h: f64,
    pub voltage_pu: f64,
    /// Uncorrected policy value `(V − V_R)/κ`.
    pub raw_policy: f64,
    /// Tap after the decision at `t_h`.
    pub tap: i32,
    pub travel: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub count: usize,
    pub mean_start_h: f64,
    pub mean_duration_h: f64,
    pub at_transformer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub pl: f64,
    pub index: usize,
    pub seed: u64,
    pub fleet_size: usize,
    pub events: EventSummary,
    /// Full event list, kept only when traces are enabled.
    pub event_list: Option<Vec<ChargingEvent>>,
    /// Transformer load factor during each step.
    pub loading: Vec<f64>,
    /// Transformer throughput during each step (kVA).
    pub transformer_kva: Vec<f64>,
    /// Thermal state at each step boundary (`steps + 1` entries).
    pub thermal: Vec<ThermalState>,
    /// Aging factor at each step boundary.
    pub aging: Vec<f64>,
    /// Initial tap followed by the tap after every step.
    pub tap_history: Vec<i32>,
    pub taps: Vec<TapRecord>,
    pub daily_loss_of_life: f64,
    pub daily_travel: f64,
    pub voltage_min: Vec<f64>,
    pub voltage_max: Vec<f64>,
    pub max_iterations: usize,
    pub max_balance_residual: f64,
}

/// How scenarios are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `None` uses rayon's default size. Falls back to
    /// sequential when the `parallel` feature is off.
    Parallel {
        threads: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFailure {
    pub pl: f64,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct McsRun {
    /// Successful scenarios ordered by (penetration level, index).
    pub scenarios: Vec<ScenarioResult>,
    pub failures: Vec<ScenarioFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleStats {
    /// Mean, sample standard deviation (n − 1) and standard error.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                std: f64::NAN,
                std_error: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            // Rounding can push the mean of identical samples an ulp outside.
            mean: mean.clamp(min, max),
            std,
            std_error: std / (n as f64).sqrt(),
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub year: f64,
    pub proposed: f64,
    pub conventional: f64,
}

/// Aggregates for one penetration level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlAggregate {
    pub pl: f64,
    pub fleet_size: usize,
    pub daily_loss_of_life: SampleStats,
    pub daily_travel: SampleStats,
    /// 𝔼[K(t)] per step.
    pub expected_loading: Vec<f64>,
    /// 𝔼[s(t)] per step (kVA).
    pub expected_kva: Vec<f64>,
    pub expected_hot_spot_c: Vec<f64>,
    pub expected_aging: Vec<f64>,
    pub transformer_lifetime_years: f64,
    /// Set when the mean daily loss was zero and the rated life was reported instead.
    pub lifetime_degenerate: bool,
    /// `None` when the regulator never moved.
    pub vr_lifetime_years: Option<f64>,
    pub load_stats: LoadStats,
    pub conventional_annual_tco: f64,
    /// Windowed TCO over the first year at the simulated aging rate.
    pub first_year: CostBreakdown,
    pub proposed: CostBreakdown,
    pub conventional: CostBreakdown,
    pub vr_cost: f64,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub levels: Vec<PlAggregate>,
    pub failures: Vec<ScenarioFailure>,
    /// True when any scenario failed; aggregates then cover the survivors only.
    pub flagged: bool,
}

/// Element-wise means of the loading series, as (𝔼[K(t)], 𝔼[s(t)]).
pub fn expected_series(results: &[ScenarioResult]) -> (Vec<f64>, Vec<f64>) {
    (
        mean_series(results.iter().map(|r| r.loading.as_slice())),
        mean_series(results.iter().map(|r| r.transformer_kva.as_slice())),
    )
}

fn mean_series<'a>(series: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for s in series {
        if sum.is_empty() {
            sum = vec![0.0; s.len()];
        }
        for (acc, v) in sum.iter_mut().zip(s) {
            *acc += v;
        }
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|v| *v /= n as f64);
    }
    sum
}

/// A validated configuration bound to its feeder, ready to run.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    model: FeederModel,
    base_shape: Vec<f64>,
    ambient: Vec<f64>,
    allocation: Vec<f64>,
    steps: usize,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let model = config.feeder.resolve()?;
        Self::with_model(config, model)
    }

    pub fn with_model(config: RunConfig, model: FeederModel) -> Result<Self> {
        config.validate()?;
        let dt = config.run.dt_h;
        let days = config.run.horizon_days as usize;
        let base_shape = match &config.run.base_shape_hourly {
            Some(hourly) => {
                let mut s = interpolate_hourly(hourly, dt)?;
                let peak = s.iter().copied().fold(0.0, f64::max);
                s.iter_mut().for_each(|v| *v /= peak);
                s
            }
            None => residential_diurnal_shape(dt)?,
        };
        let per_day = steps_per_day(dt)?;
        let ambient_day = match &config.thermal.ambient_hourly_c {
            Some(hourly) => interpolate_hourly(hourly, dt)?,
            None => vec![config.thermal.ambient_c; per_day],
        };
        let ambient = ambient_day
            .iter()
            .copied()
            .cycle()
            .take(per_day * days)
            .collect();
        let allocation = config.charging.allocation_weights(&model)?;
        Ok(Self {
            config,
            model,
            base_shape,
            ambient,
            allocation,
            steps: per_day * days,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn model(&self) -> &FeederModel {
        &self.model
    }

    /// Number of simulation steps per scenario.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn fleet_size(&self, pl: f64) -> usize {
        fleet_size_for_pl(
            pl,
            self.model.peak_base_kw(),
            self.config.charging.charger_kw,
        )
    }

    fn sample_events(&self, pl: f64, seed: u64) -> Result<Vec<ChargingEvent>> {
        let fleet = self.fleet_size(pl);
        let sampler = EventSampler::new(&self.config.charging, fleet, &self.allocation)?;
        let fixed = if self.config.run.resample_placement {
            None
        } else {
            let mut rng =
                ChaCha8Rng::seed_from_u64(splitmix64(self.config.run.seed ^ PLACEMENT_SALT));
            Some(sampler.sample_placement(&mut rng))
        };
        let mut events = Vec::with_capacity(fleet * self.config.run.horizon_days as usize);
        for day in 0..self.config.run.horizon_days {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(day as u64);
            events.extend(sampler.sample_day(day, &mut rng, fixed.as_deref()));
        }
        Ok(events)
    }

    /// Simulates one scenario: sample events, build the profile, then step
    /// power flow, regulator and thermal model through the horizon.
    pub fn run_scenario(&self, pl: f64, index: usize) -> Result<ScenarioResult> {
        self.run_scenario_inner(pl, index)
            .map_err(|e| Error::Scenario {
                pl,
                index,
                source: Box::new(e),
            })
    }

    fn run_scenario_inner(&self, pl: f64, index: usize) -> Result<ScenarioResult> {
        let cfg = &self.config;
        let seed = scenario_seed(cfg.run.seed, pl, index, cfg.run.common_random_numbers);
        let events = self.sample_events(pl, seed)?;
        self.simulate_events(pl, index, seed, events)
    }

    /// Deterministic run on base load alone, with no vehicles sampled.
    pub fn run_reference(&self) -> Result<ScenarioResult> {
        self.simulate_events(0.0, 0, 0, Vec::new())
    }

    fn simulate_events(
        &self,
        pl: f64,
        index: usize,
        seed: u64,
        events: Vec<ChargingEvent>,
    ) -> Result<ScenarioResult> {
        let cfg = &self.config;
        let dt = cfg.run.dt_h;
        let model = &self.model;
        let profile = build_load_profile(
            &self.base_shape,
            model,
            &events,
            cfg.charging.charger_kw,
            dt,
            cfg.run.horizon_days,
        )?;

        let n = model.node_count();
        let mut loading = Vec::with_capacity(self.steps);
        let mut kva = Vec::with_capacity(self.steps);
        let mut voltage_min = vec![f64::INFINITY; n];
        let mut voltage_max = vec![f64::NEG_INFINITY; n];
        let mut max_iterations = 0;
        let mut max_balance_residual: f64 = 0.0;
        let reg = &cfg.regulator;
        let mut tap = TapState::new(reg.initial_tap);
        let mut tap_history = Vec::with_capacity(self.steps + 1);
        let mut taps = Vec::with_capacity(self.steps);
        tap_history.push(tap.tap);

        for step in 0..self.steps {
            let t = step as f64 * dt;
            let loads = model.nodal_power_pu(&profile.step_totals(step));
            let sol = solve_power_flow_with(model, &loads, reg.ratio(tap.tap), &cfg.run.solver)?;
            loading.push(loading_factor(&sol, model));
            kva.push(transformer_kva(&sol, model));
            for (i, v) in sol.voltages.iter().enumerate() {
                let m = v.norm();
                voltage_min[i] = voltage_min[i].min(m);
                voltage_max[i] = voltage_max[i].max(m);
            }
            max_iterations = max_iterations.max(sol.iterations);
            max_balance_residual = max_balance_residual.max(sol.balance_residual);

            if let Some((_, node)) = model.regulator() {
                let v = sol.magnitude(node);
                tap = step_tap(&tap, v, t, reg);
                taps.push(TapRecord {
                    t_h: t,
                    voltage_pu: v,
                    raw_policy: raw_policy_value(v, reg),
                    tap: tap.tap,
                    travel: tap.travel,
                });
            }
            tap_history.push(tap.tap);
        }

        let thermal = simulate(&loading, &self.ambient, dt, &cfg.thermal)?;
        let aging = thermal
            .iter()
            .map(|s| aging_factor(s.hot_spot_c, &cfg.thermal))
            .collect::<Result<Vec<_>>>()?;
        let days = cfg.run.horizon_days as f64;
        let horizon_h = self.steps as f64 * dt;
        let daily_loss_of_life =
            loss_of_life(&aging, dt, cfg.thermal.insulation_life_h, 0.0, horizon_h)? / days;

        let count = events.len();
        let summary = EventSummary {
            count,
            mean_start_h: if count > 0 {
                events.iter().map(|e| e.start_h).sum::<f64>() / count as f64
            } else {
                0.0
            },
            mean_duration_h: if count > 0 {
                events.iter().map(|e| e.duration_h).sum::<f64>() / count as f64
            } else {
                0.0
            },
            at_transformer: events
                .iter()
                .filter(|e| e.node == model.transformer_node())
                .count(),
        };

        Ok(ScenarioResult {
            pl,
            index,
            seed,
            fleet_size: self.fleet_size(pl),
            events: summary,
            event_list: cfg.run.traces.then_some(events),
            loading,
            transformer_kva: kva,
            thermal,
            aging,
            daily_travel: tap.travel as f64 / days,
            tap_history,
            taps,
            daily_loss_of_life,
            voltage_min,
            voltage_max,
            max_iterations,
            max_balance_residual,
        })
    }

    /// Runs every (penetration level, scenario) pair.
    pub fn run(&self, execution: Execution) -> Result<McsRun> {
        let tasks: Vec<(f64, usize)> = self
            .config
            .run
            .penetration_levels
            .iter()
            .flat_map(|&pl| (0..self.config.run.scenarios).map(move |i| (pl, i)))
            .collect();

        let outcomes = self.execute(&tasks, execution)?;

        let mut scenarios = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::new();
        for ((pl, index), outcome) in tasks.into_iter().zip(outcomes) {
            match outcome {
                Ok(r) => scenarios.push(r),
                Err(e) => {
                    log::warn!("{e}");
                    failures.push(ScenarioFailure {
                        pl,
                        index,
                        message: e.to_string(),
                    });
                }
            }
        }
        Ok(McsRun {
            scenarios,
            failures,
        })
    }

    fn execute(
        &self,
        tasks: &[(f64, usize)],
        execution: Execution,
    ) -> Result<Vec<Result<ScenarioResult>>> {
        match execution {
            Execution::Sequential => Ok(self.execute_sequential(tasks)),
            Execution::Parallel { threads } => self.execute_parallel(tasks, threads),
        }
    }

    fn execute_sequential(&self, tasks: &[(f64, usize)]) -> Vec<Result<ScenarioResult>> {
        tasks
            .iter()
            .map(|&(pl, i)| self.run_scenario(pl, i))
            .collect()
    }

    #[cfg(feature = "parallel")]
    fn execute_parallel(
        &self,
        tasks: &[(f64, usize)],
        threads: Option<usize>,
    ) -> Result<Vec<Result<ScenarioResult>>> {
        use rayon::prelude::*;

        let work = || -> Vec<Result<ScenarioResult>> {
            tasks
                .par_iter()
                .map(|&(pl, i)| self.run_scenario(pl, i))
                .collect()
        };
        match threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?;
                Ok(pool.install(work))
            }
            None => Ok(work()),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn execute_parallel(
        &self,
        tasks: &[(f64, usize)],
        _threads: Option<usize>,
    ) -> Result<Vec<Result<ScenarioResult>>> {
        log::debug!("built without the parallel feature; running sequentially");
        Ok(self.execute_sequential(tasks))
    }

    /// Per-level sample statistics, expected series, lifetimes and costs.
    pub fn aggregate(&self, run: &McsRun) -> Result<AggregateResult> {
        let cfg = &self.config;
        let horizon = cfg.run.evaluation_years;
        let rated = self.model.transformer_rating_kva();
        let mut levels = Vec::new();
        for &pl in &cfg.run.penetration_levels {
            let results: Vec<ScenarioResult> = run
                .scenarios
                .iter()
                .filter(|r| r.pl.to_bits() == pl.to_bits())
                .cloned()
                .collect();
            if results.is_empty() {
                continue;
            }
            let lol: Vec<f64> = results.iter().map(|r| r.daily_loss_of_life).collect();
            let travel: Vec<f64> = results.iter().map(|r| r.daily_travel).collect();
            let daily_loss_of_life = SampleStats::from_samples(&lol);
            let daily_travel = SampleStats::from_samples(&travel);
            let (expected_loading, expected_kva) = expected_series(&results);
            let expected_hot_spot_c = mean_series(
                results
                    .iter()
                    .map(|r| r.thermal.iter().map(|s| s.hot_spot_c).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
                    .iter()
                    .map(|v| v.as_slice()),
            );
            let expected_aging = mean_series(results.iter().map(|r| r.aging.as_slice()));

            let (transformer_lifetime_years, lifetime_degenerate) =
                match transformer_lifetime(daily_loss_of_life.mean) {
                    Ok(t) => (t, false),
                    Err(_) => (cfg.thermal.insulation_life_years(), true),
                };
            let vr_lifetime_years =
                vr_lifetime(daily_travel.mean, cfg.regulator.max_operations).ok();

            let load_stats = LoadStats::from_series(&expected_kva, rated)?;
            let conventional_annual_tco = conventional_tco(
                &cfg.tco,
                load_stats.peak_norm(),
                if load_stats.peak_kva > 0.0 {
                    load_stats.mean_kva / load_stats.peak_kva
                } else {
                    0.0
                },
            )?;
            let annual_lol = daily_loss_of_life.mean * DAYS_PER_YEAR;
            let first_year =
                modified_tco_transformer(annual_lol, &cfg.tco, &load_stats, 0.0, horizon.min(1.0))?;
            let proposed = cumulative_proposed_cost(
                daily_loss_of_life.mean,
                &cfg.tco,
                &load_stats,
                horizon,
                horizon,
            )?;
            let conventional = cumulative_conventional_cost(&cfg.tco, &load_stats, horizon)?;
            let vr_lol = daily_travel.mean * DAYS_PER_YEAR * horizon / cfg.regulator.max_operations;
            let vr_cost = vr_tco(vr_lol, cfg.regulator.capital_cost);

            let mut curve = Vec::new();
            let whole_years = horizon.floor() as usize;
            let mut years: Vec<f64> = (0..=whole_years).map(|y| y as f64).collect();
            if horizon > whole_years as f64 {
                years.push(horizon);
            }
            for year in years {
                curve.push(CurvePoint {
                    year,
                    proposed: cumulative_proposed_cost(
                        daily_loss_of_life.mean,
                        &cfg.tco,
                        &load_stats,
                        year,
                        horizon,
                    )?
                    .total,
                    conventional: cumulative_conventional_cost(&cfg.tco, &load_stats, year)?.total,
                });
            }

            levels.push(PlAggregate {
                pl,
                fleet_size: self.fleet_size(pl),
                daily_loss_of_life,
                daily_travel,
                expected_loading,
                expected_kva,
                expected_hot_spot_c,
                expected_aging,
                transformer_lifetime_years,
                lifetime_degenerate,
                vr_lifetime_years,
                load_stats,
                conventional_annual_tco,
                first_year,
                proposed,
                conventional,
                vr_cost,
                curve,
            });
        }
        Ok(AggregateResult {
            levels,
            flagged: !run.failures.is_empty(),
            failures: run.failures.clone(),
        })
    }
}

/// Runs one scenario of `config`.
pub fn run_scenario(config: &RunConfig, pl: f64, index: usize) -> Result<ScenarioResult> {
    Simulation::new(config.clone())?.run_scenario(pl, index)
}

/// Runs the whole sweep with the default execution and aggregates it.
pub fn run_mcs(config: &RunConfig) -> Result<AggregateResult> {
    let sim = Simulation::new(config.clone())?;
    let run = sim.run(Execution::default())?;
    sim.aggregate(&run)
}

/// Step-start times of a run, for series output.
pub fn step_times(steps: usize, dt_h: f64) -> Vec<f64> {
    (0..steps).map(|k| k as f64 * dt_h).collect()
}

/// Hour of day of a step index.
pub fn hour_of_day(step: usize, dt_h: f64) -> f64 {
    (step as f64 * dt_h).rem_euclid(HOURS_PER_DAY)
}
