use thiserror::Error;

/// Errors raised by network construction, simulation, schedule synthesis,
/// coding and the protocol runners.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("receiver {0} has an empty neighborhood and can never be covered")]
    EmptyNeighborhood(usize),
    #[error("sender id {id} is outside [1, {eta}]")]
    SenderIdOutOfRange { id: u32, eta: u32 },
    #[error("class degree 2^{classes} exceeds the {senders} available senders")]
    DegreeExceedsSenders { classes: u32, senders: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node {0} does not exist")]
    UnknownNode(u64),
    #[error("graph is not simple: {0}")]
    NotSimple(String),
    #[error("node {0} is unreachable from the source")]
    Unreachable(u64),
    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),
    #[error("invalid STS: {0}")]
    InvalidSts(String),
    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),
    #[error("invalid degree range: {0}")]
    DegreeRangeInvalid(String),
    #[error("eta = {eta} exceeds the exact-mode cap of {cap}")]
    EtaTooLargeForExact { eta: u32, cap: u32 },
    #[error("eta = {eta} exceeds the exhaustive-scan cap of {cap}")]
    EtaTooLargeForExhaustive { eta: u32, cap: u32 },
    #[error("greedy assignment found no free round for sender {sender} in set {set}")]
    GreedyStuck { sender: u32, set: String },
    #[error("schedule does not deliver message {message} to receiver {receiver}")]
    ScheduleDoesNotBroadcast { message: u32, receiver: usize },
    #[error("packet of {bits} bits exceeds the budget of {budget} bits")]
    PayloadTooLarge { bits: usize, budget: usize },
    #[error("block payloads differ in length")]
    RaggedBlock,
    #[error("packet belongs to block {got}, decoder holds block {expected}")]
    BlockMismatch { expected: u32, got: u32 },
    #[error("decoder rank {rank} is below block size {size}")]
    RankDeficient { rank: usize, size: usize },
    #[error("at most {max} coded packets fit the field, {requested} requested")]
    TooManyPackets { requested: usize, max: usize },
    #[error("malformed coded packet: {0}")]
    MalformedPacket(String),
    #[error("receiver {receiver} has degree {degree} outside the declared range [{delta}, {max_degree}]")]
    DegreeOutOfDeclaredRange {
        receiver: usize,
        degree: usize,
        delta: usize,
        max_degree: usize,
    },
    #[error(
        "routing violation: node {node} transmitted a payload not in its buffer (round {round})"
    )]
    RoutingViolation { node: usize, round: u64 },
    #[error("decoded block {block} differs from the original messages")]
    DecodeMismatch { block: u32 },
    #[error("plan has no recorded delivery; call record_delivery first")]
    DeliveryNotRecorded,
    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
