//! Pulse-program text language.
//!
//! ```text
//! # name: hahn
//! let tau = 10us
//! pulse angle=0.5pi phase=+x
//! wait $tau
//! pulse angle=1pi phase=+y
//! acquire 20us dt=0.05us
//! ```
//!
//! One directive per line (`;` also separates directives). `repeat N { ... }`
//! unrolls its body `N` times with `$list[i]` indexing the current
//! iteration. All quantities are converted to SI on compilation.

mod ast;
mod compile;
mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use ast::{
    Arg, Count, Directive, Index, LetValue, Literal, Metadata, PhaseSymbol, Quantity, SequenceAst, Span, Statement,
    Unit, UnitKind,
};
pub use compile::{compile, ParamValue, Params};
pub use parser::parse_sequence;
pub use printer::print_sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Unit,
    Range,
    UnboundParameter,
    RepeatCount,
    Index,
}

impl ErrorKind {
    fn label(&self) -> &'static str {
        match self {
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Unit => "unit error",
            ErrorKind::Range => "range error",
            ErrorKind::UnboundParameter => "unbound parameter",
            ErrorKind::RepeatCount => "invalid repeat count",
            ErrorKind::Index => "index error",
        }
    }
}

/// Parse or compile diagnostic with its source position.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceError {
    pub kind: ErrorKind,
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl SequenceError {
    pub(crate) fn new(kind: ErrorKind, span: Span, message: impl Into<String>) -> Self {
        Self { kind, span, message: message.into(), expected: Vec::new() }
    }

    pub(crate) fn expecting(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl fmt::Display for SequenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.span.line, self.span.col, self.kind.label(), self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for SequenceError {}

/// Parses and compiles in one step.
pub fn compile_text(text: &str, params: &Params) -> Result<Vec<crate::engine::SequenceEvent>, SequenceError> {
    compile(&parse_sequence(text)?, params)
}
