use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shear coordinate must be nonzero")]
    ZeroShear,
    #[error("toric variable must be nonzero")]
    ZeroToric,
    #[error("non-diagonalizable within tolerance (λ² = 1)")]
    Degenerate,
    #[error("matrix is not lower triangular (|M12| = {0:e})")]
    NotLowerTriangular(f64),
    #[error("singular matrix")]
    Singular,
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("unknown definition `{0}`")]
    UnknownDef(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("edge `{0}` is a loop; merge needs two distinct vertices")]
    LoopEdge(String),
    #[error("edges `{0}` and `{1}` are not adjacent parallel edges")]
    NotZippable(String, String),
    #[error("path passes through vertex `{0}`")]
    PathThroughVertex(String),
    #[error("pair is not admissible (max vertex residual {0:e})")]
    NotAdmissible(f64),
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("degenerate form: {0}")]
    DegenerateForm(String),
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("builder error: {0}")]
    Build(String),
    #[error("point error: {0}")]
    Point(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
