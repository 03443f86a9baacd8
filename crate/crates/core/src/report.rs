//! Writes run outputs: per-level aggregates, cost curves in long format,
//! expected series, optional per-scenario traces and the run manifest.
//!
//! Everything is computed before the first file is written. A run with
//! failed scenarios still writes its (flagged) aggregates next to a `FAILED`
//! marker that lists the failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::format::fmt_num;
use crate::mcs::{
    AggregateResult, Execution, McsRun, RunConfig, ScenarioFailure, ScenarioResult, Simulation,
};

pub const MANIFEST_VERSION: u32 = 1;
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub pl: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub seeds: Vec<SeedEntry>,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
    pub failures: Vec<ScenarioFailure>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub aggregate: AggregateResult,
    pub files: Vec<PathBuf>,
    pub wall_time_s: f64,
}

impl RunReport {
    /// 0 on success, 1 when any scenario failed.
    pub fn exit_code(&self) -> i32 {
        if self.aggregate.flagged {
            1
        } else {
            0
        }
    }
}

/// Column names of `aggregate.csv`.
pub const AGGREGATE_HEADER: [&str; 22] = [
    "pl",
    "fleet_size",
    "scenarios",
    "mean_daily_lol",
    "std_daily_lol",
    "se_daily_lol",
    "min_daily_lol",
    "max_daily_lol",
    "mean_daily_travel",
    "std_daily_travel",
    "transformer_lifetime_years",
    "lifetime_degenerate",
    "vr_lifetime_years",
    "mean_kva",
    "peak_kva",
    "peak_loading",
    "conventional_annual_tco",
    "first_year_tco",
    "proposed_tco",
    "conventional_tco",
    "replacements",
    "vr_tco",
];

/// Rows of `aggregate.csv`, one per penetration level.
pub fn aggregate_rows(agg: &AggregateResult) -> Vec<Vec<String>> {
    agg.levels
        .iter()
        .map(|l| {
            let peak_k = l.expected_loading.iter().copied().fold(0.0, f64::max);
            vec![
                fmt_num(l.pl),
                l.fleet_size.to_string(),
                l.daily_loss_of_life.n.to_string(),
                fmt_num(l.daily_loss_of_life.mean),
                fmt_num(l.daily_loss_of_life.std),
                fmt_num(l.daily_loss_of_life.std_error),
                fmt_num(l.daily_loss_of_life.min),
                fmt_num(l.daily_loss_of_life.max),
                fmt_num(l.daily_travel.mean),
                fmt_num(l.daily_travel.std),
                fmt_num(l.transformer_lifetime_years),
                l.lifetime_degenerate.to_string(),
                l.vr_lifetime_years
                    .map(fmt_num)
                    .unwrap_or_else(|| "inf".into()),
                fmt_num(l.load_stats.mean_kva),
                fmt_num(l.load_stats.peak_kva),
                fmt_num(peak_k),
                fmt_num(l.conventional_annual_tco),
                fmt_num(l.first_year.total),
                fmt_num(l.proposed.total),
                fmt_num(l.conventional.total),
                l.proposed.replacements.to_string(),
                fmt_num(l.vr_cost),
            ]
        })
        .collect()
}

/// Rows of `tco_curve.csv` in long format: pl, method, year, cost.
pub fn tco_curve_rows(agg: &AggregateResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for l in &agg.levels {
        for (method, pick) in [("proposed", true), ("conventional", false)] {
            for p in &l.curve {
                rows.push(vec![
                    fmt_num(l.pl),
                    method.to_string(),
                    fmt_num(p.year),
                    fmt_num(if pick { p.proposed } else { p.conventional }),
                ]);
            }
        }
    }
    rows
}

fn expected_series_rows(agg: &AggregateResult, dt_h: f64) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for l in &agg.levels {
        for (k, (kf, kva)) in l.expected_loading.iter().zip(&l.expected_kva).enumerate() {
            rows.push(vec![
                fmt_num(l.pl),
                fmt_num(k as f64 * dt_h),
                fmt_num(*kf),
                fmt_num(*kva),
                fmt_num(l.expected_hot_spot_c[k]),
                fmt_num(l.expected_aging[k]),
            ]);
        }
    }
    rows
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn trace_stem(r: &ScenarioResult) -> String {
    format!("pl{}_s{:04}", fmt_num(r.pl), r.index)
}

fn write_traces(
    dir: &Path,
    scenarios: &[ScenarioResult],
    dt_h: f64,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in scenarios {
        let stem = trace_stem(r);
        if let Some(events) = &r.event_list {
            let rows: Vec<Vec<String>> = events
                .iter()
                .map(|e| {
                    vec![
                        e.vehicle.to_string(),
                        e.node.to_string(),
                        e.day.to_string(),
                        fmt_num(e.start_h),
                        fmt_num(e.duration_h),
                    ]
                })
                .collect();
            let p = dir.join(format!("{stem}_events.csv"));
            write_csv(&p, &["vehicle_id", "node", "day", "t_s", "dt"], &rows)?;
            files.push(p);
        }
        let rows: Vec<Vec<String>> = r
            .thermal
            .iter()
            .zip(&r.aging)
            .map(|(s, a)| {
                vec![
                    fmt_num(s.t_h),
                    fmt_num(s.top_oil_c),
                    fmt_num(s.hot_spot_c),
                    fmt_num(*a),
                ]
            })
            .collect();
        let p = dir.join(format!("{stem}_thermal.csv"));
        write_csv(&p, &["t", "top_oil_c", "hot_spot_c", "aging_factor"], &rows)?;
        files.push(p);

        let rows: Vec<Vec<String>> = r
            .taps
            .iter()
            .map(|t| {
                vec![
                    fmt_num(t.t_h),
                    fmt_num(t.voltage_pu),
                    t.tap.to_string(),
                    t.travel.to_string(),
                ]
            })
            .collect();
        let p = dir.join(format!("{stem}_taps.csv"));
        write_csv(&p, &["t", "v", "h", "travel"], &rows)?;
        files.push(p);

        let rows: Vec<Vec<String>> = (0..r.loading.len())
            .map(|k| {
                vec![
                    fmt_num(k as f64 * dt_h),
                    fmt_num(r.loading[k]),
                    fmt_num(r.transformer_kva[k]),
                ]
            })
            .collect();
        let p = dir.join(format!("{stem}_loading.csv"));
        write_csv(&p, &["t", "k", "kva"], &rows)?;
        files.push(p);
    }
    Ok(())
}

/// Runs `config` and writes every output into `outdir`.
pub fn run_and_emit(config: &RunConfig, outdir: &Path, execution: Execution) -> Result<RunReport> {
    let started = Instant::now();
    let sim = Simulation::new(config.clone())?;
    let run = sim.run(execution)?;
    let aggregate = sim.aggregate(&run)?;
    let wall_time_s = started.elapsed().as_secs_f64();
    emit(&sim, &run, aggregate, outdir, execution, wall_time_s)
}

fn emit(
    sim: &Simulation,
    run: &McsRun,
    aggregate: AggregateResult,
    outdir: &Path,
    execution: Execution,
    wall_time_s: f64,
) -> Result<RunReport> {
    let config = sim.config();
    let dt = config.run.dt_h;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: "gridsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seeds: config
            .run
            .penetration_levels
            .iter()
            .map(|&pl| SeedEntry {
                pl,
                seeds: (0..config.run.scenarios)
                    .map(|i| {
                        crate::mcs::scenario_seed(
                            config.run.seed,
                            pl,
                            i,
                            config.run.common_random_numbers,
                        )
                    })
                    .collect(),
            })
            .collect(),
        threads: match execution {
            Execution::Sequential => Some(1),
            Execution::Parallel { threads } => threads,
        },
        wall_time_s,
        failures: run.failures.clone(),
    };
    let aggregate_rows = aggregate_rows(&aggregate);
    let curve_rows = tco_curve_rows(&aggregate);
    let series_rows = expected_series_rows(&aggregate, dt);
    let summary = serde_json::to_string_pretty(&aggregate)?;
    let manifest_json = serde_json::to_string_pretty(&manifest)?;

    fs::create_dir_all(outdir)?;
    let marker = outdir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let mut files = Vec::new();
    let p = outdir.join("aggregate.csv");
    write_csv(&p, &AGGREGATE_HEADER, &aggregate_rows)?;
    files.push(p);
    let p = outdir.join("tco_curve.csv");
    write_csv(&p, &["pl", "method", "year", "cost"], &curve_rows)?;
    files.push(p);
    let p = outdir.join("expected_series.csv");
    write_csv(
        &p,
        &[
            "pl",
            "t",
            "expected_loading",
            "expected_kva",
            "expected_hot_spot_c",
            "expected_aging",
        ],
        &series_rows,
    )?;
    files.push(p);
    let p = outdir.join("summary.json");
    fs::write(&p, summary)?;
    files.push(p);
    if config.run.traces {
        write_traces(&outdir.join("traces"), &run.scenarios, dt, &mut files)?;
    }
    let p = outdir.join("manifest.json");
    fs::write(&p, manifest_json)?;
    files.push(p);

    if aggregate.flagged {
        let listing: String = run
            .failures
            .iter()
            .map(|f| format!("pl={} scenario={}: {}\n", fmt_num(f.pl), f.index, f.message))
            .collect();
        fs::write(&marker, listing)?;
        files.push(marker);
    }
    Ok(RunReport {
        aggregate,
        files,
        wall_time_s,
    })
}
