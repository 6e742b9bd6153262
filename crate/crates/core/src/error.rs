use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("boundary edge {edge} at ({x:.6}, {y:.6}) is not covered by any boundary part")]
    UncoveredBoundary { edge: usize, x: f64, y: f64 },

    #[error(
        "boundary edge {edge} at ({x:.6}, {y:.6}) is covered by both '{first}' and '{second}'"
    )]
    DoublyCoveredBoundary {
        edge: usize,
        x: f64,
        y: f64,
        first: String,
        second: String,
    },

    #[error("cell {cell} straddles the boundary of region '{region}'")]
    StraddlingCell { cell: usize, region: String },

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("unsupported quadrature degree {0} (supported: 1..=10)")]
    UnsupportedQuadrature(usize),

    #[error("degenerate cell {cell}: Jacobian determinant {det:e}")]
    DegenerateCell { cell: usize, det: f64 },

    #[error("point ({x:.6}, {y:.6}) does not lie in cell {cell}")]
    PointOutsideCell { cell: usize, x: f64, y: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative weight {value:e} on cell {cell}")]
    NegativeWeight { cell: usize, value: f64 },

    #[error("spaces are defined on different meshes")]
    MeshMismatch,

    #[error("boundary edge {0} referenced by a boundary term has no label")]
    UntaggedEdge(usize),

    #[error("degree of freedom {dof} constrained twice with conflicting values {first:e} and {second:e}")]
    ConflictingConstraint { dof: usize, first: f64, second: f64 },

    #[error(
        "time step mismatch: system factored for dt = {factored:e}, loads imply dt = {requested:e}"
    )]
    StaleTimeStep { factored: f64, requested: f64 },

    #[error("zero pivot at position {0} during sparse factorization")]
    ZeroPivot(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown pressure source '{0}'")]
    UnknownSource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
