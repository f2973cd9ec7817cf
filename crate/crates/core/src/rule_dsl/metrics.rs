//! Size measures for rule sets.

use std::fmt;

use serde::Serialize;

use super::alpha::{alpha_equal_rules, Renaming};
use super::ast::{Formula, InferenceRule, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub rules: usize,
    /// Evaluation premises only; side conditions are not judgments.
    pub premises: usize,
    /// Present when measured against a base rule set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicates: Option<usize>,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rules={} premises={}", self.rules, self.premises)?;
        if let Some(d) = self.duplicates {
            write!(f, " duplicates={d}")?;
        }
        Ok(())
    }
}

/// Whether `premise` of `rule` reappears in `base_rule` once the two
/// conclusion sources are identified by renaming.
fn repeats_in(rule: &InferenceRule, premise: &Formula, base_rule: &InferenceRule) -> bool {
    let (Some(a), Some(b)) = (rule.conclusion.source.first(), base_rule.conclusion.source.first()) else {
        return false;
    };
    if a.head() != b.head() {
        return false;
    }
    let mut ren = Renaming::default();
    if !ren.terms(&rule.conclusion.source, &base_rule.conclusion.source) {
        return false;
    }
    base_rule.eval_premises().any(|q| ren.clone().formula(premise, q))
}

/// Counts rules and evaluation premises. With a base, also counts the
/// premises of rules not already in the base that repeat a premise of a base
/// rule for the same construct.
pub fn count_metrics(set: &RuleSet, base: Option<&RuleSet>) -> Metrics {
    let duplicates = base.map(|base| {
        set.rules
            .iter()
            .filter(|r| !base.rules.iter().any(|b| alpha_equal_rules(r, b)))
            .map(|r| {
                r.eval_premises()
                    .filter(|p| base.rules.iter().any(|b| repeats_in(r, p, b)))
                    .count()
            })
            .sum()
    });
    Metrics {
        rules: set.rules.len(),
        premises: set.rules.iter().map(|r| r.eval_premises().count()).sum(),
        duplicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse_rules;

    #[test]
    fn seq_premise_is_a_duplicate() {
        let base = parse_rules(
            "sig B: (c, σ) =B=> (σ')\nrule B-Seq:\n(c1, σ) =B=> σ'\n(c2, σ') =B=> σ''\n---\n(seq(c1, c2), σ) =B=> σ''\n",
        )
        .unwrap();
        let div = parse_rules(
            "sig B: (c, σ) =B=> (σ')\nsig inf: (c, σ) =inf=> ()\nrule D-Seq2:\n(a, s) =B=> t\n(b, t) =inf=> ()\n---\n(seq(a, b), s) =inf=> ()\n",
        )
        .unwrap();
        let all = base.clone().merge(div).unwrap();
        let m = count_metrics(&all, Some(&base));
        assert_eq!(
            m,
            Metrics {
                rules: 2,
                premises: 4,
                duplicates: Some(1)
            }
        );
        assert_eq!(m.to_string(), "rules=2 premises=4 duplicates=1");
        assert_eq!(count_metrics(&base, None).to_string(), "rules=1 premises=2");
    }
}
