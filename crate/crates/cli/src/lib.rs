//! Library half of the command-line toolkit: config records, output
//! rendering, and the subcommand implementations. The binary adds only
//! argument parsing and exit-code mapping.

pub mod commands;
pub mod config;
pub mod output;

/// Numerical regression tripwire; maps to exit code 3.
#[derive(Debug)]
pub struct Tripwire {
    pub detail: String,
}

impl std::fmt::Display for Tripwire {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical tripwire: {}", self.detail)
    }
}

impl std::error::Error for Tripwire {}
