//! Textual inference rules: reading, implicit-flag expansion, comparison up
//! to renaming, and size metrics.

mod alpha;
mod ast;
mod metrics;
mod parse;
mod thread;

pub use alpha::{alpha_equal, alpha_equal_rules};
pub use ast::{Component, Formula, InferenceRule, Premise, RelationSig, RuleSet, Term, CONSTANTS};
pub use metrics::{count_metrics, Metrics};
pub use parse::{parse_rules, parse_rules_named, RuleParseError};
pub use thread::{thread_flags, ThreadError};

/// Rule files bundled with the crate, by file name.
pub const SHIPPED: &[(&str, &str)] = &[
    ("exprs.rules", include_str!("../../rules/exprs.rules")),
    ("small_step.rules", include_str!("../../rules/small_step.rules")),
    ("big_step.rules", include_str!("../../rules/big_step.rules")),
    ("div_pred.rules", include_str!("../../rules/div_pred.rules")),
    ("pretty_big.rules", include_str!("../../rules/pretty_big.rules")),
    ("flag_based.rules", include_str!("../../rules/flag_based.rules")),
    (
        "flag_based_implicit.rules",
        include_str!("../../rules/flag_based_implicit.rules"),
    ),
];

pub fn shipped_text(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a bundled rule file. Bundled files are known to parse.
pub fn shipped(name: &str) -> Option<RuleSet> {
    shipped_text(name).map(|t| parse_rules_named(t, name).expect("bundled rule file parses"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(name: &str) -> RuleSet {
        shipped(name).unwrap_or_else(|| panic!("{name} is bundled"))
    }

    #[test]
    fn all_bundled_files_parse() {
        for (name, _) in SHIPPED {
            load(name);
        }
        assert_eq!(load("big_step.rules").rules.len(), 11);
        assert_eq!(load("flag_based.rules").rules.len(), 13);
        assert_eq!(load("small_step.rules").rules.len(), 8);
    }

    #[test]
    fn published_counts() {
        let m = count_metrics(&load("flag_based.rules"), None);
        assert_eq!((m.rules, m.premises), (13, 13));
        let m = count_metrics(&load("pretty_big.rules"), None);
        assert_eq!((m.rules, m.premises), (18, 16));
        let base = load("big_step.rules");
        let union = base.clone().merge(load("div_pred.rules")).unwrap();
        let m = count_metrics(&union, Some(&base));
        assert_eq!((m.rules, m.premises, m.duplicates), (17, 25, Some(6)));
    }

    #[test]
    fn threading_recovers_the_explicit_rules() {
        let threaded = thread_flags(&load("flag_based_implicit.rules")).unwrap();
        let explicit = load("flag_based.rules");
        assert!(alpha_equal(&threaded, &explicit));
        assert!(!alpha_equal(&explicit, &load("pretty_big.rules")));
        let again = thread_flags(&explicit).unwrap();
        assert!(alpha_equal(&again, &explicit));
    }

    #[test]
    fn exprs_are_shared() {
        let exprs = load("exprs.rules");
        for name in ["big_step.rules", "pretty_big.rules"] {
            let set = load(name);
            for r in &exprs.rules {
                assert!(
                    set.rules.iter().any(|s| s == r || alpha_equal_rules(r, s)),
                    "{name} lacks {}",
                    r.label
                );
            }
        }
    }
}
