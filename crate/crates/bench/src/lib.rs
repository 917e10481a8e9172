//! Shared fixtures for the criterion benchmarks.

use safecurrent::{ControllerSuite, Inverter, PlantParams, Reference, SimConfig};

pub struct Fixture {
    pub inverter: Inverter,
    pub sim: SimConfig,
    pub suite: ControllerSuite,
    pub reference: Reference,
}

impl Fixture {
    pub fn table_defaults() -> Self {
        let inverter = Inverter::new(PlantParams::default()).expect("default parameters are valid");
        let sim = SimConfig::for_params(&inverter.params);
        let suite = ControllerSuite::synthesize(&inverter, &sim, 1000.0).expect("synthesis");
        let reference = inverter
            .linear_reference(inverter.current_limit())
            .expect("reference");
        Self {
            inverter,
            sim,
            suite,
            reference,
        }
    }
}
