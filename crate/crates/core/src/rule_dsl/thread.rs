//! Expansion of implicit status flags into explicit ones.

use thiserror::Error;

use super::ast::{Formula, InferenceRule, Premise, RelationSig, RuleSet, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThreadError {
    #[error("rule {rule} (line {line}) spells out flags on some formulas but not others")]
    MixedFlagUsage { rule: String, line: usize },
    #[error("relation {relation} has no default for its source flag")]
    NoDefault { relation: String },
}

/// Where the flag components of one relation sit.
struct Slots<'a> {
    sig: &'a RelationSig,
    source: usize,
    target: usize,
    default: &'a Term,
}

fn slots<'a>(set: &'a RuleSet, relation: &str) -> Result<Option<Slots<'a>>, ThreadError> {
    let Some(sig) = set.sig(relation) else {
        return Ok(None);
    };
    let (Some(source), Some(target)) = (
        RelationSig::flag_index(&sig.source),
        RelationSig::flag_index(&sig.target),
    ) else {
        return Ok(None);
    };
    let default = sig.source[source]
        .default
        .as_ref()
        .ok_or_else(|| ThreadError::NoDefault {
            relation: relation.to_string(),
        })?;
    Ok(Some(Slots {
        sig,
        source,
        target,
        default,
    }))
}

fn with_flags(f: &Formula, s: &Slots<'_>, source: Term, target: Term) -> Formula {
    let mut out = f.clone();
    out.source.insert(s.source, source);
    out.target.insert(s.target, target);
    out
}

/// A name built from `base` that no metavariable of the rule uses yet.
fn fresh(base: &str, taken: &mut Vec<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    taken.push(name.clone());
    name
}

fn thread_rule(set: &RuleSet, rule: &InferenceRule) -> Result<InferenceRule, ThreadError> {
    // Flagged formulas and whether each spells its flags out.
    let mut explicit = Vec::new();
    for f in rule.formulas() {
        if let Some(s) = slots(set, &f.relation)? {
            explicit.push(s.sig.explicitness(f.source.len(), f.target.len()) == Some(true));
        }
    }
    if explicit.iter().all(|&e| e) {
        return Ok(rule.clone());
    }
    if explicit.iter().any(|&e| e) {
        return Err(ThreadError::MixedFlagUsage {
            rule: rule.label.clone(),
            line: rule.line,
        });
    }

    let concl = slots(set, &rule.conclusion.relation)?;
    let mut taken: Vec<String> = rule.vars().into_iter().map(String::from).collect();
    let flagged: Vec<usize> = rule
        .premises
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            Premise::Eval(f) if set.sig(&f.relation).is_some_and(RelationSig::is_flagged) => Some(i),
            _ => None,
        })
        .collect();

    let Some(concl) = concl else {
        // An unflagged conclusion has nothing to thread into.
        return Ok(rule.clone());
    };
    let down = concl.default.clone();
    let step_base = concl.sig.source[concl.source].role.clone();
    let last_base = concl.sig.target[concl.target].role.clone();

    let mut premises = rule.premises.clone();
    let final_flag = if flagged.is_empty() {
        down.clone()
    } else {
        let n = flagged.len();
        let mut incoming = None::<Term>;
        for (k, &i) in flagged.iter().enumerate() {
            let Premise::Eval(f) = &rule.premises[i] else {
                unreachable!()
            };
            let s = slots(set, &f.relation)?.expect("flagged premise");
            let source = match incoming.take() {
                None => s.default.clone(),
                Some(t) => t,
            };
            let target = if k + 1 == n {
                Term::Var(fresh(&last_base, &mut taken))
            } else {
                Term::Var(fresh(&format!("{step_base}{}", k + 1), &mut taken))
            };
            premises[i] = Premise::Eval(with_flags(f, &s, source, target.clone()));
            incoming = Some(target);
        }
        incoming.expect("at least one flagged premise")
    };
    Ok(InferenceRule {
        label: rule.label.clone(),
        premises,
        conclusion: with_flags(&rule.conclusion, &concl, down, final_flag),
        line: rule.line,
    })
}

/// Makes every flag explicit. Rules that already spell out their flags, and
/// rules over unflagged relations, are returned as they are.
pub fn thread_flags(set: &RuleSet) -> Result<RuleSet, ThreadError> {
    let rules = set
        .rules
        .iter()
        .map(|r| thread_rule(set, r))
        .collect::<Result<_, _>>()?;
    Ok(RuleSet {
        sigs: set.sigs.clone(),
        rules,
        origin: set.origin.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse_rules;

    const SIGS: &str = "\
sig GE: (e, σ, [δ :- ⇓]) =GE=> (v, [δ'])
sig G: (c, σ, [δ :- ⇓]) =G=> (σ', [δ'])
";

    fn thread(rules: &str) -> Result<RuleSet, ThreadError> {
        thread_flags(&parse_rules(&format!("{SIGS}{rules}")).unwrap())
    }

    #[test]
    fn axiom_gets_default_flags() {
        let rs = thread("rule F-Skip:\n---\n(skip, σ) =G=> σ\n").unwrap();
        assert_eq!(rs.rules[0].conclusion.to_string(), "(skip, σ, down) =G=> (σ, down)");
    }

    #[test]
    fn seq_chains_flags() {
        let rs = thread("rule F-Seq:\n(c1, σ) =G=> σ'\n(c2, σ') =G=> σ''\n---\n(seq(c1, c2), σ) =G=> σ''\n").unwrap();
        let r = &rs.rules[0];
        let p: Vec<_> = r.eval_premises().map(ToString::to_string).collect();
        assert_eq!(p, ["(c1, σ, down) =G=> (σ', δ1)", "(c2, σ', δ1) =G=> (σ'', δ')"]);
        assert_eq!(r.conclusion.to_string(), "(seq(c1, c2), σ, down) =G=> (σ'', δ')");
    }

    #[test]
    fn side_conditions_are_skipped() {
        let rs = thread(
            "rule W:\n(e, σ) =GE=> v\nside v ≠ 0\n(c, σ) =G=> σ'\n(while(e, c), σ') =G=> σ''\n---\n(while(e, c), σ) =G=> σ''\n",
        )
        .unwrap();
        let r = &rs.rules[0];
        assert_eq!(r.side_conditions().collect::<Vec<_>>(), ["v ≠ 0"]);
        let p: Vec<_> = r.eval_premises().map(ToString::to_string).collect();
        assert_eq!(
            p,
            [
                "(e, σ, down) =GE=> (v, δ1)",
                "(c, σ, δ1) =G=> (σ', δ2)",
                "(while(e, c), σ', δ2) =G=> (σ'', δ')"
            ]
        );
    }

    #[test]
    fn fresh_names_avoid_rule_variables() {
        let rs = thread("rule R:\n(δ1, σ) =G=> σ'\n(c, σ') =G=> δ'\n---\n(c, σ) =G=> δ'\n").unwrap();
        let p: Vec<_> = rs.rules[0].eval_premises().map(ToString::to_string).collect();
        assert_eq!(p[0], "(δ1, σ, down) =G=> (σ', δ1')");
        assert_eq!(rs.rules[0].conclusion.target[1], Term::var("δ''"));
    }

    #[test]
    fn explicit_rules_pass_through() {
        let text = "rule F-Div:\n---\n(c, σ, ⇑) =G=> (σ', ⇑)\n";
        let rs = thread(text).unwrap();
        let orig = parse_rules(&format!("{SIGS}{text}")).unwrap();
        assert_eq!(rs.rules, orig.rules);
    }

    #[test]
    fn mixed_usage_is_rejected() {
        let e = thread("rule R:\n(c, σ, δ) =G=> (σ', δ')\n---\n(c, σ) =G=> σ'\n").unwrap_err();
        assert!(matches!(e, ThreadError::MixedFlagUsage { .. }));
    }

    #[test]
    fn missing_default() {
        let text = "sig G: (c, [δ]) =G=> (σ, [δ'])\nrule R:\n---\n(c) =G=> (σ)\n";
        assert!(matches!(
            thread_flags(&parse_rules(text).unwrap()),
            Err(ThreadError::NoDefault { .. })
        ));
    }
}
