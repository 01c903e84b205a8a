use thiserror::Error;

use crate::tree::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("tree too large: {0}")]
    TreeTooLarge(String),

    #[error(
        "saddle ill-posed at edge {edge}; tau exceeds admissible range \
         ({block} block has eigenvalue {eigenvalue:e})"
    )]
    IllPosedSaddle {
        edge: EdgeLabel,
        block: &'static str,
        eigenvalue: f64,
    },

    #[error("typewise recursion ill-posed for type {type_index} at {node}: H = tau*R_i + B1'P+B1 is not positive definite")]
    TypewiseIllPosed { type_index: usize, node: NodeId },

    #[error("support function unbounded or non-concave at q = {0:?}")]
    SupportUnbounded(Vec<f64>),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("linear program numerical failure: {0}")]
    LpNumerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Mismatch(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position of an edge in the public tree, for error messages.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EdgeLabel {
    #[default]
    Unplaced,
    At {
        node: NodeId,
        branch: usize,
    },
}

impl std::fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeLabel::Unplaced => write!(f, "(unplaced)"),
            EdgeLabel::At { node, branch } => {
                write!(f, "({}, {}, {})", node.k, node.omega_string(), branch + 1)
            }
        }
    }
}
