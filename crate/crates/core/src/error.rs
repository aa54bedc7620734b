//! Error types shared across the crate.

use thiserror::Error;

/// Validation and runtime errors raised by the model and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A node id appears more than once in a topology document.
    #[error("duplicate node id {0}")]
    DuplicateNodeId(usize),
    /// Node ids must be exactly 0..N-1.
    #[error("node ids are not contiguous: expected 0..{expected}, found id {found}")]
    NonContiguousNodeIds { expected: usize, found: usize },
    /// A coordinate is NaN or infinite.
    #[error("node {0} has a non-finite coordinate")]
    NonFiniteCoordinate(usize),
    /// Two nodes share a grid position.
    #[error("nodes {0} and {1} share identical coordinates")]
    DuplicateCoordinates(usize, usize),
    /// Timezone offsets are whole hours in [-12, +14].
    #[error("node {0} has timezone offset {1} outside [-12, +14]")]
    TimezoneOutOfRange(usize, i32),
    /// A link id appears more than once.
    #[error("duplicate link id {0}")]
    DuplicateLinkId(usize),
    /// Link ids must be exactly 0..L-1.
    #[error("link ids are not contiguous: expected 0..{expected}, found id {found}")]
    NonContiguousLinkIds { expected: usize, found: usize },
    /// A link references a node id outside the node set.
    #[error("link {link} references unknown endpoint node {node}")]
    UnknownEndpoint { link: usize, node: usize },
    /// Fibers connect distinct nodes.
    #[error("link {0} is a self-loop")]
    SelfLoop(usize),
    /// Every fiber carries at least one wavelength.
    #[error("link {0} has num_wavelengths < 1")]
    NoWavelengths(usize),
    /// An explicit length in the document contradicts the node coordinates.
    #[error("link {link}: stated length {stated} km conflicts with coordinate distance {computed} km")]
    LengthMismatch {
        link: usize,
        stated: f64,
        computed: f64,
    },
    /// Transceiver limit arrays must have one entry per node.
    #[error("{array} has {got} entries for {nodes} nodes")]
    TransceiverArrayLength {
        array: &'static str,
        got: usize,
        nodes: usize,
    },
    /// Lightpath capacity must be positive.
    #[error("lightpath capacity must be positive, got {0}")]
    NonPositiveCapacity(f64),
    /// Propagation delay is undefined for negative lengths.
    #[error("negative length {0} km")]
    NegativeLength(f64),

    /// Traffic matrix shape or content problem.
    #[error("traffic matrix: {0}")]
    TrafficMatrix(String),
    /// Traffic model parameters out of range.
    #[error("traffic model `{tag}`: {reason}")]
    TrafficModel { tag: String, reason: String },

    /// Average packet delay is undefined with no carried traffic.
    #[error("no traffic")]
    NoTraffic,
    /// Flow id not present among active flows.
    #[error("unknown or non-active flow id {0}")]
    UnknownFlow(u64),

    /// A structural invariant failed a state audit.
    #[error("state audit failed: {0}")]
    AuditFailure(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Malformed JSON document.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// Malformed CSV document.
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
