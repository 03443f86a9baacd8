#![allow(dead_code)]

use gridsim_core::feeder::{
    Bases, BranchSpec, FeederDocument, LoadSpec, NodeSpec, SourceSpec, TransformerSpec,
};
use gridsim_core::mcs::RunConfig;
use gridsim_core::FeederModel;

/// Source bus "1" feeding one load bus "2" through `r + jx` pu.
pub fn two_bus(r: f64, x: f64, power_factor: f64) -> FeederModel {
    FeederModel::from_document(FeederDocument {
        nodes: vec![
            NodeSpec {
                id: "1".into(),
                base_kv: 4.16,
            },
            NodeSpec {
                id: "2".into(),
                base_kv: 4.16,
            },
        ],
        branches: vec![BranchSpec {
            id: "1-2".into(),
            from: "1".into(),
            to: "2".into(),
            r,
            x,
        }],
        source: SourceSpec {
            node: "1".into(),
            voltage_pu: 1.0,
        },
        loads: vec![LoadSpec {
            node: "2".into(),
            weight: 1.0,
        }],
        transformer: TransformerSpec {
            node: "2".into(),
            rated_kva: 1000.0,
        },
        regulator: None,
        bases: Bases {
            power_kva: 1000.0,
            voltage_kv: 4.16,
        },
        peak_base_kw: 1000.0,
        power_factor,
    })
    .unwrap()
}

/// Closed-form receiving-end magnitude of a constant-power load fed over a
/// single impedance from a 1 pu source (the high-voltage root of the
/// bi-quadratic in |V₂|²).
pub fn two_bus_voltage(p: f64, q: f64, r: f64, x: f64) -> f64 {
    let b = 1.0 - 2.0 * (p * r + q * x);
    let c = (p * p + q * q) * (r * r + x * x);
    ((b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt()
}

pub fn small_config(scenarios: usize, levels: &[f64]) -> RunConfig {
    let mut c = RunConfig::default();
    c.run.scenarios = scenarios;
    c.run.penetration_levels = levels.to_vec();
    c
}
