//! Pulse programs shipped with the crate.

use crate::engine::SequenceEvent;
use crate::error::ExperimentError;
use crate::sequence::{compile, parse_sequence, Params};

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        /// `(name, source)` for every shipped program.
        pub const SHIPPED: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../sequences/", $name, ".seq")))),*
        ];
    };
}

shipped!(
    "cpmg",
    "empty_repeat",
    "fid",
    "fig1a",
    "fig1b",
    "fig1b_hahn",
    "fig2a",
    "fig2b",
    "fig3a",
    "fig3b",
    "fig3b_no_return",
    "gradient_undo",
    "hahn",
    "k_inversion",
    "nested_repeat",
    "nuclear_echo",
    "nuclear_swap",
    "register_8",
    "semicolons",
    "stimulated_echo",
    "two_pulse_store",
    "units_mixed",
);

/// Source text of a shipped program.
pub fn source(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses and compiles a shipped program with `params` overriding its `let`
/// defaults.
pub fn compile_shipped(name: &str, params: &Params) -> Result<Vec<SequenceEvent>, ExperimentError> {
    let text = source(name).ok_or_else(|| ExperimentError::Precondition(format!("no shipped program `{name}`")))?;
    Ok(compile(&parse_sequence(text)?, params)?)
}
