//! Command-line front end for the magiclog engine: built-in benchmark
//! programs, deterministic database generators, and a scenario runner that
//! writes machine-readable CSV reports.
//!
//! Every fallible operation returns a [`Failure`] carrying the process exit
//! code the binary should report: 1 for usage errors, 2 for validation
//! errors, 3 for resource limits.

use std::fmt;

use magiclog::engine::EngineError;
use magiclog::ground::GroundError;
use magiclog::model::{Rule, Violation};
use magiclog::parse::{ParseError, SyntaxError};
use magiclog::rewrite::{RewriteBundle, RewriteError};
use magiclog::solve::SolveError;

pub mod bench;
pub mod builtins;
pub mod gen;

/// Section markers used when a rewrite bundle is written to a file.
pub const BUNDLE_SECTIONS: [&str; 4] =
    ["% -- restricted --", "% -- constraints --", "% -- magic --", "% -- collecting --"];

/// Renders a rewrite bundle as a reparseable program, one marker comment
/// per rule group. Empty groups keep their marker.
pub fn render_bundle(bundle: &RewriteBundle) -> String {
    let groups: [(&str, &[Rule]); 4] = [
        (BUNDLE_SECTIONS[0], &bundle.restricted),
        (BUNDLE_SECTIONS[1], &bundle.constraints),
        (BUNDLE_SECTIONS[2], &bundle.magic),
        (BUNDLE_SECTIONS[3], &bundle.collecting),
    ];
    let mut out = String::new();
    for (marker, rules) in groups {
        out.push_str(marker);
        out.push('\n');
        for rule in rules {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
    }
    out
}

/// Which exit code a failure maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// The invocation itself is wrong: bad flags, missing files, bad sizes.
    Usage,
    /// The input content is wrong: parse errors, unsafe rules, non-fact data.
    Validation,
    /// A configured limit was hit: ground cap, model cap, or timeout.
    Resource,
}

impl ExitKind {
    /// The process exit code for this failure class.
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Usage => 1,
            ExitKind::Validation => 2,
            ExitKind::Resource => 3,
        }
    }
}

/// An error with the exit code it should produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: ExitKind,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { kind: ExitKind::Usage, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Failure {
        Failure { kind: ExitKind::Validation, message: message.into() }
    }

    pub fn resource(message: impl Into<String>) -> Failure {
        Failure { kind: ExitKind::Resource, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for Failure {}

/// Shorthand for CLI results.
pub type CliResult<T> = Result<T, Failure>;

fn violations_text(violations: &[Violation]) -> String {
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    lines.join("\n")
}

impl From<SyntaxError> for Failure {
    fn from(e: SyntaxError) -> Failure {
        Failure::validation(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Failure {
        match e {
            ParseError::Syntax(s) => Failure::validation(s.to_string()),
            ParseError::Validation(v) => Failure::validation(violations_text(&v)),
        }
    }
}

impl From<GroundError> for Failure {
    fn from(e: GroundError) -> Failure {
        match e {
            GroundError::EmptyUniverse => Failure::validation(e.to_string()),
            GroundError::ResourceLimit { .. } | GroundError::Timeout => {
                Failure::resource(e.to_string())
            }
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Failure {
        match e {
            SolveError::Ground(g) => g.into(),
            SolveError::ModelLimit { .. }
            | SolveError::NegationLimit { .. }
            | SolveError::Timeout => Failure::resource(e.to_string()),
            SolveError::NotPositive | SolveError::NotNormal | SolveError::NonExhaustive => {
                Failure::validation(e.to_string())
            }
        }
    }
}

impl From<RewriteError> for Failure {
    fn from(e: RewriteError) -> Failure {
        Failure::validation(e.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Failure {
        match e {
            EngineError::Rewrite(r) => r.into(),
            EngineError::Solve(s) => s.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_failure_class() {
        assert_eq!(Failure::usage("x").kind.code(), 1);
        assert_eq!(Failure::validation("x").kind.code(), 2);
        assert_eq!(Failure::resource("x").kind.code(), 3);
    }

    #[test]
    fn rendered_bundles_reparse() {
        let program = magiclog::parse::parse_program(builtins::COLORING).unwrap();
        let goal = magiclog::parse::parse_goal("2col(1, 2)").unwrap().goal;
        let bundle = magiclog::rewrite::disj_magic(&goal, &program).unwrap();
        let text = render_bundle(&bundle);
        for marker in BUNDLE_SECTIONS {
            assert!(text.contains(marker), "missing {marker}");
        }
        let reparsed = magiclog::parse::parse_program_raw(&text).unwrap();
        let total = bundle.restricted.len()
            + bundle.constraints.len()
            + bundle.magic.len()
            + bundle.collecting.len();
        assert_eq!(reparsed.statements().count(), total);
    }

    #[test]
    fn limit_errors_map_to_resource_and_bad_input_to_validation() {
        let f: Failure = SolveError::Timeout.into();
        assert_eq!(f.kind, ExitKind::Resource);
        let f: Failure = SolveError::ModelLimit { limit: 5 }.into();
        assert_eq!(f.kind, ExitKind::Resource);
        let f: Failure = GroundError::ResourceLimit { limit: 5 }.into();
        assert_eq!(f.kind, ExitKind::Resource);
        let f: Failure = GroundError::EmptyUniverse.into();
        assert_eq!(f.kind, ExitKind::Validation);
        let f: Failure =
            RewriteError::ReservedPrefix { pred: "m__x".to_string() }.into();
        assert_eq!(f.kind, ExitKind::Validation);
    }
}
