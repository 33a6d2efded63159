use thiserror::Error;

use crate::counting::{Count, MatchShape};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape n={n}, m={m}, l={l}: {reason}")]
    InvalidShape {
        n: usize,
        m: usize,
        l: usize,
        reason: &'static str,
    },

    #[error("{0}")]
    Domain(String),

    #[error("enumerating {requested} matchings exceeds the budget of {budget}")]
    BudgetExceeded { requested: Count, budget: u64 },

    #[error("sieve over {events} events exceeds the limit of {limit}")]
    TooManyEvents { events: usize, limit: usize },

    #[error("event {event} has member {member} outside a universe of size {universe}")]
    MemberOutsideUniverse {
        event: usize,
        member: usize,
        universe: usize,
    },

    #[error("shape {0} admits no fixed-point-free matching")]
    ImpossibleEvent(MatchShape),

    #[error("rejection sampling gave up after {0} iterations")]
    RejectionCap(u64),

    #[error("line {line}: malformed b-file entry {content:?}")]
    MalformedLine { line: usize, content: String },

    #[error("invalid OEIS id {0:?}, expected 'A' followed by 6 digits")]
    InvalidId(String),

    #[error("no cached or vendored b-file for {0} (run online to fetch it)")]
    MissingSnapshot(String),

    #[error("fetching {id}: {message}")]
    Network { id: String, message: String },

    #[error("mapping configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the environment (files, network) rather than of
    /// the request itself.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Network { .. } | Error::MissingSnapshot(_)
        )
    }
}
