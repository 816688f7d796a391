use thiserror::Error;

/// Errors raised by the geometry, solver, assembly and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point at distance {dist} lies outside the projection tube (radius {limit})")]
    OutsideTube { dist: f64, limit: f64 },

    #[error("point is not on the manifold (distance {dist})")]
    NotOnManifold { dist: f64 },

    #[error("vector is not tangent (normal component {normal})")]
    NotTangent { normal: f64 },

    #[error("initial datum at node {node} is off the manifold (distance {dist})")]
    InitialDataOffManifold { node: usize, dist: f64 },

    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolated { dt: f64, limit: f64 },

    #[error("node {node} left the tube at t = {t} (distance {dist})")]
    NodeLeftTube { node: usize, t: f64, dist: f64 },

    #[error("node {node} drifted outside the projection tube in one step at t = {t}")]
    ProjectionOutsideTube { node: usize, t: f64 },

    #[error("solution diverged at t = {t} (node norm {norm})")]
    Diverged { t: f64, norm: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate time separation {0}")]
    DegenerateTime(f64),

    #[error("window out of range: {0}")]
    WindowOutOfRange(String),

    #[error("at least {required} paths are needed, got {got}")]
    InsufficientPaths { required: usize, got: usize },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("unknown identifier `{0}`")]
    NotFound(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
