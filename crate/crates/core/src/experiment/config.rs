use super::decimal;
use crate::bsde::{step_count, StartPoints};
use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::geometry::{manifold_by_id, EmbeddedManifold};
use crate::pde::{cfl_max_dt, InitialMap, Scheme, TorusGrid};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// One experiment: target, data, discretization, ensemble and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub manifold: ManifoldSpec,
    #[serde(default)]
    pub generator: GeneratorSpec,
    pub initial: InitialMap,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub flow: FlowSpec,
    pub ensemble: EnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub id: String,
    #[serde(default, deserialize_with = "decimal::opt_f64", skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub id: String,
    #[serde(default, deserialize_with = "decimal::f64")]
    pub c: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            id: "zero".into(),
            c: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub m: usize,
    pub n_nodes: usize,
}

/// Solver step: a fixed value or the largest stable step compatible with
/// the record and path grids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

impl Serialize for StepSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepSize::Auto => s.serialize_str("auto"),
            StepSize::Fixed(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for StepSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(StepSize::Fixed(x)),
            Raw::Int(i) => Ok(StepSize::Fixed(i as f64)),
            Raw::Text(s) if s.trim() == "auto" => Ok(StepSize::Auto),
            Raw::Text(s) => s
                .trim()
                .parse()
                .map(StepSize::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("`{s}` is neither \"auto\" nor a decimal number"))),
        }
    }
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(rename = "T", deserialize_with = "decimal::f64")]
    pub t_final: f64,
    pub dt: StepSize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

/// Which flow produces the field the ensemble reads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The intrinsic `m = 1` flow.
    Intrinsic,
    /// The penalized flow at the smallest ε of the ladder.
    #[default]
    Penalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    #[serde(default)]
    pub reference: Reference,
    /// ε ladder, run in the given order.
    #[serde(default, deserialize_with = "decimal::vec_f64")]
    pub epsilons: Vec<f64>,
}

fn default_aux_paths() -> usize {
    100
}

fn default_start() -> StartPoints {
    StartPoints::Fixed { x: vec![0.0] }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub paths: usize,
    #[serde(deserialize_with = "decimal::f64")]
    pub dt: f64,
    #[serde(default, deserialize_with = "decimal::vec_f64")]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_start")]
    pub start: StartPoints,
    /// Paths used by the `Δt`-halving residual study.
    #[serde(default = "default_aux_paths")]
    pub refinement_paths: usize,
    /// Paths per ε for the tangency ladder.
    #[serde(default = "default_aux_paths")]
    pub ladder_paths: usize,
    /// The martingale observable is the coordinate `g(p) = ⟨p, e_axis⟩`.
    #[serde(default)]
    pub observable_axis: usize,
}

fn default_theta0() -> f64 {
    0.05
}
fn default_radius() -> f64 {
    0.05
}
fn default_kappa() -> f64 {
    0.5
}
fn default_cap() -> f64 {
    1e3
}
fn default_lattice() -> usize {
    8
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default = "default_theta0", deserialize_with = "decimal::f64")]
    pub theta0: f64,
    #[serde(default = "default_radius", deserialize_with = "decimal::f64")]
    pub radius: f64,
    #[serde(default = "default_kappa", deserialize_with = "decimal::f64")]
    pub kappa: f64,
    /// Gradient-density cap asserted on small-Ψ windows.
    #[serde(default = "default_cap", deserialize_with = "decimal::f64")]
    pub cap: f64,
    #[serde(default = "default_lattice")]
    pub n_space: usize,
    #[serde(default = "default_lattice")]
    pub n_time: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub write_trajectory: bool,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Everything a run needs, resolved from a validated config.
pub struct Resolved {
    pub manifold: Arc<dyn EmbeddedManifold>,
    pub generator: Generator,
    pub grid: TorusGrid,
    pub dt: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn smallest_epsilon(&self) -> f64 {
        self.flow.epsilons.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The ε whose run feeds the ensemble, `None` for the intrinsic flow.
    pub fn reference_epsilon(&self) -> Option<f64> {
        match self.flow.reference {
            Reference::Intrinsic => None,
            Reference::Penalized => Some(self.smallest_epsilon()),
        }
    }

    /// Checks every field and resolves the manifold, generator, grid and
    /// solver step. Errors before any output is produced.
    pub fn validate(&self) -> Result<Resolved> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        let GridSpec { m, n_nodes } = self.grid;
        if !(m == 1 || m == 2) {
            return bad(format!("m must be 1 or 2, got {m}"));
        }
        let grid = TorusGrid::new(m, n_nodes)?;
        let manifold = manifold_by_id(&self.manifold.id, self.manifold.delta0)?;
        let generator = Generator::by_id(&self.generator.id, self.generator.c)?;
        self.initial.validate(manifold.as_ref(), m)?;
        let t = self.time.t_final;
        if !(t > 0.0 && t.is_finite()) {
            return bad(format!("T must be positive, got {t}"));
        }
        if self.flow.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("every ε must be positive".into());
        }
        match self.flow.reference {
            Reference::Intrinsic if m != 1 => return bad("the intrinsic flow is implemented for m = 1 only".into()),
            Reference::Penalized if self.flow.epsilons.is_empty() => {
                return bad("a penalized reference needs at least one ε".into())
            }
            _ => {}
        }
        let e = &self.ensemble;
        if e.paths == 0 {
            return bad("need at least one path".into());
        }
        step_count(e.dt, t)?;
        for &c in &e.checkpoints {
            if !(c > 0.0 && c <= t * (1.0 + 1e-12)) {
                return bad(format!("checkpoint {c} outside (0, T]"));
            }
            let j = (c / e.dt).round();
            if (j * e.dt - c).abs() > 1e-9 * e.dt.max(c) {
                return bad(format!("checkpoint {c} is not a multiple of the path step {}", e.dt));
            }
        }
        if e.observable_axis >= manifold.ambient_dim() {
            return bad(format!("observable axis {} outside R^{}", e.observable_axis, manifold.ambient_dim()));
        }
        if let StartPoints::Fixed { x } = &e.start {
            if x.len() < m {
                return bad(format!("fixed start point needs {m} coordinates"));
            }
        }
        if let Some(s) = &self.scan {
            if !(s.theta0 > 0.0 && s.radius > 0.0 && s.kappa > 0.0 && s.n_space > 0 && s.n_time > 0) {
                return bad("scan parameters must be positive".into());
            }
        }
        let stride = self.time.record_stride.max(1);
        let eps = self.smallest_epsilon();
        let scheme = match self.flow.reference {
            Reference::Intrinsic if self.flow.epsilons.is_empty() => Scheme::Imex,
            _ => self.time.scheme,
        };
        let limit = cfl_max_dt(&grid, eps, scheme);
        let dt = match self.time.dt {
            StepSize::Fixed(dt) => {
                if !(dt > 0.0) {
                    return bad(format!("dt must be positive, got {dt}"));
                }
                if dt > limit * (1.0 + 1e-12) {
                    return Err(Error::CflViolated { dt, limit });
                }
                dt
            }
            // record_dt = path_dt / k with the smallest k keeping dt stable
            StepSize::Auto => {
                let k = (e.dt / (stride as f64 * limit)).ceil().max(1.0);
                e.dt / (k * stride as f64)
            }
        };
        let steps = (t / dt).round();
        if (steps * dt - t).abs() > 1e-12 * t.max(1.0) {
            return bad(format!("dt = {dt} does not divide T = {t}"));
        }
        if steps as usize % stride != 0 {
            return bad(format!("record stride {stride} does not divide the {steps} solver steps"));
        }
        Ok(Resolved {
            manifold,
            generator,
            grid,
            dt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "sample"
seed = 3

[manifold]
id = "sphere2"

[initial]
kind = "great_circle"
k = 1

[grid]
m = 1
n_nodes = 64

[time]
T = "0.1"
dt = "auto"
record_stride = 2

[flow]
reference = "penalized"
epsilons = ["1e-2", 1e-3]

[ensemble]
paths = 100
dt = "1e-3"
checkpoints = [0.05, 0.1]
"#;

    #[test]
    fn parses_toml_with_decimal_strings() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.time.t_final, 0.1);
        assert_eq!(c.flow.epsilons, vec![1e-2, 1e-3]);
        assert_eq!(c.time.dt, StepSize::Auto);
        assert_eq!(c.generator.id, "zero");
        let r = c.validate().unwrap();
        let limit = cfl_max_dt(&r.grid, 1e-3, Scheme::Imex);
        assert!(r.dt <= limit);
        // record step divides the path step
        let ratio = 1e-3 / (2.0 * r.dt);
        assert!((ratio - ratio.round()).abs() < 1e-9);
    }

    #[test]
    fn json_mirror_round_trips() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), c);
        let toml = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&toml).unwrap(), c);
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut d = c.clone();
        d.output.dir = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 4;
        assert_ne!(c.hash(), d.hash());
        let mut e = c.clone();
        e.flow.epsilons[1] = 2e-3;
        assert_ne!(c.hash(), e.hash());
    }

    #[test]
    fn rejects_invalid_configs() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut bad = c.clone();
        bad.grid.m = 3;
        assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
        let mut bad = c.clone();
        bad.ensemble.dt = 0.03;
        assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
        let mut bad = c.clone();
        bad.time.dt = StepSize::Fixed(1e-2);
        assert!(matches!(bad.validate(), Err(Error::CflViolated { .. })));
        let mut bad = c.clone();
        bad.flow.reference = Reference::Intrinsic;
        bad.grid.m = 2;
        assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
        let mut bad = c.clone();
        bad.manifold.id = "klein".into();
        assert!(matches!(bad.validate(), Err(Error::NotFound(_))));
        let mut bad = c;
        bad.ensemble.checkpoints = vec![0.0505];
        assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
        assert!(ExperimentConfig::from_toml("name = 1").is_err());
    }
}
