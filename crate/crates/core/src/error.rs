use thiserror::Error;

/// Errors raised while reading instance and outcome files.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: InstanceError,
    },
    #[error("missing `nodes` directive")]
    MissingNodes,
}

impl ParseError {
    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        ParseError::Malformed {
            line,
            message: message.into(),
        }
    }
}

/// Violations of the instance, matching and outcome data invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("instance must have at least one node")]
    NoNodes,
    #[error("weight bound must be positive and finite, got {0}")]
    BadBound(f64),
    #[error("node {node} out of range 1..={node_count}")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("weight {weight} outside (0, {bound}]")]
    WeightOutOfRange { weight: f64, bound: f64 },
    #[error("split fraction {0} outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("edge ({0}, {1}) is not in the instance")]
    UnknownEdge(usize, usize),
    #[error("node {0} appears in two matched edges")]
    NodeMatchedTwice(usize),
    #[error("allocation has {got} entries, expected {expected}")]
    AllocationLength { got: usize, expected: usize },
    #[error("matched edge ({u}, {v}) splits {sum} instead of its weight {weight}")]
    MatchedSum {
        u: usize,
        v: usize,
        sum: f64,
        weight: f64,
    },
    #[error("unmatched node {node} earns {value}, expected 0")]
    UnmatchedEarns { node: usize, value: f64 },
    #[error("node {node} earns {value}, outside [0, {bound}]")]
    EarningOutOfRange { node: usize, value: f64, bound: f64 },
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

/// Raised by the brute-force oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance has {edges} edges, enumeration cap is {cap}")]
    CapExceeded { edges: usize, cap: usize },
}

/// Failures of the message-passing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BpError {
    #[error("message states cover different instances ({0} vs {1} messages)")]
    StateMismatch(usize, usize),
    #[error("argmax at node {node} is ambiguous between neighbours {first} and {second}")]
    AmbiguousArgmax {
        node: usize,
        first: usize,
        second: usize,
    },
    #[error("argmax choices disagree: node {node} picks {picked} but {picked} picks {back:?}")]
    InconsistentMatching {
        node: usize,
        picked: usize,
        back: Option<usize>,
    },
    #[error("no fixed point within {0} iterations")]
    NoFixedPoint(usize),
    #[error("allocation built from the fixed point is not stable (max deficit {0})")]
    Unstable(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Failures of the rebalancing iteration and the solve pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("damping factor {0} outside (0, 1/2]")]
    BadKappa(f64),
    #[error("error target {0} must be positive")]
    BadEpsilon(f64),
    #[error("starting outcome is not stable (max deficit {0})")]
    UnstableStart(f64),
    #[error("both endpoints of matched edge ({0}, {1}) are negative")]
    BothNegative(usize, usize),
    #[error("iteration cap {0} reached before the residual target")]
    IterationCap(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Bp(#[from] BpError),
}
