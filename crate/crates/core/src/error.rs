//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A source position; line 0 means "no position" (errors raised outside the
/// parser) and renders as nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(line: usize, col: usize) -> Self {
        Pos { line, col }
    }

    pub const NONE: Pos = Pos { line: 0, col: 0 };
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            Ok(())
        } else {
            write!(f, " at {}:{}", self.line, self.col)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error{pos}: {message}")]
    Syntax { pos: Pos, message: String },

    #[error("undeclared field `{field}`{pos}")]
    UndeclaredField { field: &'static str, pos: Pos },

    #[error("value `{value}` is not in the domain of `{field}`{pos}")]
    ValueOutOfDomain { field: &'static str, value: &'static str, pos: Pos },

    #[error("problem file is missing the `{section}` section")]
    MissingSection { section: &'static str },

    #[error("packet space of {size} packets exceeds the enumeration cap of {cap}")]
    DomainTooLarge { size: u64, cap: u64 },

    #[error("topology is not a sum of link-shaped summands: {reason}")]
    MalformedTopology { reason: String },

    #[error("GraphML parse error: {0}")]
    GraphParse(String),

    #[error("graph has no switches")]
    EmptyGraph,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
