//! Equality of rules up to consistent renaming of metavariables.

use std::collections::HashMap;

use super::ast::{Formula, InferenceRule, RuleSet, Term};

/// A partial bijection between the metavariables of two rules.
#[derive(Debug, Clone, Default)]
pub(crate) struct Renaming {
    fwd: HashMap<String, String>,
    bwd: HashMap<String, String>,
}

impl Renaming {
    fn bind(&mut self, a: &str, b: &str) -> bool {
        match (self.fwd.get(a), self.bwd.get(b)) {
            (Some(x), Some(y)) => x == b && y == a,
            (None, None) => {
                self.fwd.insert(a.into(), b.into());
                self.bwd.insert(b.into(), a.into());
                true
            }
            _ => false,
        }
    }

    pub(crate) fn term(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => self.bind(x, y),
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.term(x, y))
            }
            _ => false,
        }
    }

    pub(crate) fn terms(&mut self, a: &[Term], b: &[Term]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| self.term(x, y))
    }

    pub(crate) fn formula(&mut self, a: &Formula, b: &Formula) -> bool {
        a.relation == b.relation && self.terms(&a.source, &b.source) && self.terms(&a.target, &b.target)
    }
}

/// Splits side-condition text into identifier-like words and single
/// punctuation characters, dropping whitespace.
fn side_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_whitespace() || "()[],:=".contains(c) {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        } else {
            word.push(c);
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

fn normalise_side(text: &str, rename: impl Fn(&str) -> Option<String>) -> String {
    side_tokens(text)
        .into_iter()
        .map(|t| rename(&t).unwrap_or(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Conclusions, then evaluation premises in order, then side conditions as a
/// multiset. Labels are ignored.
pub fn alpha_equal_rules(a: &InferenceRule, b: &InferenceRule) -> bool {
    let mut ren = Renaming::default();
    if !ren.formula(&a.conclusion, &b.conclusion) {
        return false;
    }
    let (pa, pb): (Vec<_>, Vec<_>) = (a.eval_premises().collect(), b.eval_premises().collect());
    if pa.len() != pb.len() || !pa.iter().zip(&pb).all(|(x, y)| ren.formula(x, y)) {
        return false;
    }
    let a_vars = a.vars();
    let mut sa: Vec<String> = a
        .side_conditions()
        .map(|s| normalise_side(s, |t| a_vars.contains(&t).then(|| ren.fwd.get(t).cloned()).flatten()))
        .collect();
    let mut sb: Vec<String> = b.side_conditions().map(|s| normalise_side(s, |_| None)).collect();
    sa.sort();
    sb.sort();
    sa == sb
}

/// Same signatures and the same multiset of rules up to renaming, in any order.
pub fn alpha_equal(a: &RuleSet, b: &RuleSet) -> bool {
    if a.sigs.len() != b.sigs.len() || !a.sigs.iter().all(|s| b.sigs.contains(s)) {
        return false;
    }
    if a.rules.len() != b.rules.len() {
        return false;
    }
    let mut used = vec![false; b.rules.len()];
    a.rules.iter().all(
        |ra| match (0..b.rules.len()).find(|&j| !used[j] && alpha_equal_rules(ra, &b.rules[j])) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse_rules;

    const SIG: &str = "sig B: (c, σ) =B=> (σ')\nsig E: (e, σ) =E=> (v)\n";

    fn rs(body: &str) -> RuleSet {
        parse_rules(&format!("{SIG}{body}")).unwrap()
    }

    #[test]
    fn renaming_is_consistent() {
        let a = rs("rule A:\n(c1, σ) =B=> σ'\n---\n(seq(c1, c2), σ) =B=> σ'\n");
        let b = rs("rule X:\n(k, s) =B=> t\n---\n(seq(k, m), s) =B=> t\n");
        assert!(alpha_equal(&a, &b));
        // c1 and c2 may not collapse into one name.
        let c = rs("rule X:\n(k, s) =B=> t\n---\n(seq(k, k), s) =B=> t\n");
        assert!(!alpha_equal(&a, &c));
    }

    #[test]
    fn side_conditions_follow_the_renaming() {
        let a = rs("rule A:\nside x ∈ dom(σ)\n(e, σ) =E=> v\n---\n(assign(x, e), σ) =B=> update(σ, x, v)\n");
        let b = rs("rule B:\n(f, s) =E=> w\nside y ∈ dom(s)\n---\n(assign(y, f), s) =B=> update(s, y, w)\n");
        assert!(alpha_equal(&a, &b));
        let c = rs("rule B:\n(f, s) =E=> w\nside y ∉ dom(s)\n---\n(assign(y, f), s) =B=> update(s, y, w)\n");
        assert!(!alpha_equal(&a, &c));
    }

    #[test]
    fn constants_are_not_variables() {
        let a = rs("rule A:\n(e, σ) =E=> 0\n---\n(while(e, c), σ) =B=> σ\n");
        let b = rs("rule A:\n(e, σ) =E=> v\n---\n(while(e, c), σ) =B=> σ\n");
        assert!(!alpha_equal(&a, &b));
    }

    #[test]
    fn order_is_irrelevant() {
        let a = rs("rule A:\n---\n(skip, σ) =B=> σ\nrule B:\n---\n(alloc(x), σ) =B=> update(σ, x, null)\n");
        let mut b = a.clone();
        b.rules.reverse();
        assert!(alpha_equal(&a, &b));
        b.rules.pop();
        assert!(!alpha_equal(&a, &b));
    }
}
