//! Scenario files, expression language and verification reports.

pub mod checks;
pub mod expr;
pub mod scenario;

use thiserror::Error;

pub use checks::{run_checks, CheckSet, Entry, Report, Status, Suite};
pub use expr::{eval_expr, parse_expr, EvalError, Expr, ParseError, Span};
pub use scenario::{Model, Scenario, SeedConnection, SeedForm, Tolerances};

/// Input problems: unreadable files and invalid scenarios.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{}{path}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        path: String,
        message: String,
    },

    #[error("unknown demo `{0}`")]
    UnknownDemo(String),
}

const DEMOS: [(&str, &str); 3] = [
    ("mobius", include_str!("../../scenarios/mobius.scn")),
    ("so2", include_str!("../../scenarios/so2.scn")),
    ("shear-frame", include_str!("../../scenarios/shear-frame.scn")),
];

pub fn demo_names() -> impl Iterator<Item = &'static str> {
    DEMOS.iter().map(|(n, _)| *n)
}

pub fn demo_source(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn demo(name: &str) -> Result<Scenario, FrontendError> {
    let src = demo_source(name).ok_or_else(|| FrontendError::UnknownDemo(name.to_string()))?;
    Scenario::parse(src, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demos_pass_every_suite() {
        for name in demo_names() {
            let s = demo(name).unwrap();
            let report = run_checks(&s, &CheckSet::all(), false).unwrap();
            assert!(report.passed(), "{}", report.table());
            assert_eq!(report.entries.len(), 17);
        }
    }

    #[test]
    fn corrupted_cocycle_skips_the_rest() {
        let src = demo_source("shear-frame")
            .unwrap()
            .replace("[representation]", "[cocycle 1 0]\nrow = 1; 0.001 - t\nrow = 0; 1\n[representation]");
        let s = Scenario::parse(&src, "bad").unwrap();
        let report = run_checks(&s, &CheckSet::all(), false).unwrap();
        assert_eq!(report.get("cocycle.inverse").unwrap().status, Status::Fail);
        assert_eq!(report.get("cor2.roundtrip").unwrap().status, Status::Skip);
        assert!(!report.passed());
    }

    #[test]
    fn empty_check_set() {
        let report = run_checks(&demo("mobius").unwrap(), &CheckSet::none(), false).unwrap();
        assert!(report.entries.is_empty());
        assert!(report.passed());
    }

    #[test]
    fn reports_are_deterministic() {
        let s = demo("shear-frame").unwrap();
        let a = run_checks(&s, &CheckSet::all(), false).unwrap();
        let b = run_checks(&s, &CheckSet::all(), false).unwrap();
        assert_eq!(a.to_key_values(), b.to_key_values());
        assert_eq!(a.table(), b.table());
    }

    #[test]
    fn check_set_parsing() {
        assert_eq!("all".parse::<CheckSet>().unwrap(), CheckSet::all());
        assert_eq!("none".parse::<CheckSet>().unwrap(), CheckSet::none());
        let s: CheckSet = "cocycle, roundtrip".parse().unwrap();
        assert!(s.contains(Suite::Cocycle) && s.contains(Suite::Roundtrip) && !s.contains(Suite::Liehom));
        assert!("curvature".parse::<CheckSet>().is_err());
    }
}
