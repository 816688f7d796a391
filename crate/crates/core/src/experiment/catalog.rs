use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

impl BenchmarkEntry {
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(self.toml)
    }
}

const CATALOG: &[BenchmarkEntry] = &[
    BenchmarkEntry {
        id: "constant",
        description: "constant map into S², all defects identically zero",
        toml: include_str!("../../configs/constant.toml"),
    },
    BenchmarkEntry {
        id: "great_circle_k1",
        description: "equatorial great circle into S², m = 1, 10⁴ paths",
        toml: include_str!("../../configs/great_circle_k1.toml"),
    },
    BenchmarkEntry {
        id: "great_circle_k2",
        description: "doubly wound great circle into S², m = 1",
        toml: include_str!("../../configs/great_circle_k2.toml"),
    },
    BenchmarkEntry {
        id: "torus2_to_sphere_degenerate",
        description: "degree-one bubble T² → S² under the penalized flow, m = 2",
        toml: include_str!("../../configs/torus2_to_sphere_degenerate.toml"),
    },
];

pub fn list_benchmarks() -> &'static [BenchmarkEntry] {
    CATALOG
}

pub fn benchmark(id: &str) -> Result<ExperimentConfig> {
    CATALOG
        .iter()
        .find(|b| b.id == id)
        .ok_or_else(|| Error::NotFound(id.to_string()))?
        .config()
}
