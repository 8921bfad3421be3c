//! Read-only evaluator for a SPARQL subset: SELECT/ASK over basic graph
//! patterns with FILTER, COUNT aggregates, GROUP BY and nested SELECT.

pub mod ast;
mod eval;
mod parser;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ast::{Query, QueryForm, Var};
pub use eval::{evaluate, evaluate_with, Binding, EvalOptions, QueryResult, Solutions};
pub use parser::{parse_query_with, predeclared_prefixes};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("SPARQL syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported SPARQL feature: {0}")]
    Unsupported(String),
    #[error("type error: {0}")]
    Type(String),
}

/// Parses a query. `rdf`, `rdfs`, `xsd`, `owl` and `sh` are predeclared.
pub fn parse_query(text: &str) -> Result<Query, SparqlError> {
    parse_query_with(text, &BTreeMap::new())
}

/// Renders solutions as tab-separated values with a header row.
pub fn solutions_to_tsv(solutions: &Solutions) -> String {
    let mut out = solutions
        .variables
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("\t");
    out.push('\n');
    for row in &solutions.rows {
        let cells: Vec<String> = solutions
            .variables
            .iter()
            .map(|v| row.get(v).map(|t| t.to_string()).unwrap_or_default())
            .collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests;
