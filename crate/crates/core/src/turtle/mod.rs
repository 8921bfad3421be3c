//! Turtle subset parser and deterministic serializer.
//!
//! Accepted syntax: `@prefix`/`PREFIX`, a single leading `@base`/`BASE`,
//! prefixed names, absolute and base-relative IRIs, the `a` keyword,
//! predicate lists (`;`), object lists (`,`), blank node property lists
//! (`[ ]`), short and long string literals, numeric and boolean literals,
//! typed literals and language tags. Collections are rejected.

mod parser;
mod serializer;

pub use parser::parse;
pub use serializer::{escape_string, format_term, serialize, serialize_quads};

use thiserror::Error;

use crate::term::Triple;

/// Parse failure with the 1-based position of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("turtle syntax error at line {line}, column {column} near `{token}`: {message}")]
pub struct TurtleError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

/// Parsed statements plus the prefix declarations in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TurtleDocument {
    pub prefixes: Vec<(String, String)>,
    pub triples: Vec<Triple>,
}

#[cfg(test)]
mod tests;
