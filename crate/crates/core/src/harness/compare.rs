//! Running one program under every semantics and checking that they agree.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::big_step::{eval_big, BigResult};
use crate::coinduction::{
    check_lasso, coevaluate_div, detect_lasso, prove_divergence, Abstraction, Certificate, CoinductionError,
    DivAttempt, Lasso,
};
use crate::derivation::System;
use crate::flag_based::{coevaluate_flag, eval_flag, FlagError};
use crate::parser::pretty_cmd;
use crate::pretty_big::{coevaluate_pretty, eval_pretty, PrettyResult};
use crate::small_step::{run_small, SmallConfig, Stuck};
use crate::syntax::{Cmd, InputStream, Outcome, SemCmd, Status, Store, Val, Verdict};

/// The four inductive evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Small,
    Big,
    Pretty,
    Flag,
}

impl Semantics {
    pub const ALL: [Semantics; 4] = [Semantics::Small, Semantics::Big, Semantics::Pretty, Semantics::Flag];

    pub fn name(self) -> &'static str {
        match self {
            Semantics::Small => "small",
            Semantics::Big => "big",
            Semantics::Pretty => "pretty",
            Semantics::Flag => "flag",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Semantics::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown semantics `{s}` (expected small, big, pretty or flag)"))
    }
}

/// One evaluator's normalised result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Run {
    pub verdict: Verdict,
    /// Input consumed, when the run ended.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cursor: Option<usize>,
    /// A result the evaluator should never produce.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<String>,
    /// Stuck because the construct has no rule at all.
    #[serde(skip)]
    pub no_rule: bool,
}

impl Run {
    fn new(verdict: Verdict, cursor: Option<usize>) -> Self {
        Run {
            verdict,
            cursor,
            anomaly: None,
            no_rule: false,
        }
    }

    fn stuck(s: Stuck) -> Self {
        Run {
            no_rule: matches!(s, Stuck::NoRule(_)),
            ..Run::new(Verdict::Stuck { reason: s.to_string() }, None)
        }
    }

    fn unknown(fuel: u64) -> Self {
        Run::new(Verdict::Unknown { fuel }, None)
    }

    pub fn decided(&self) -> bool {
        !matches!(self.verdict, Verdict::Unknown { .. })
    }
}

/// Runs `c` from the empty store under one semantics.
pub fn run_semantics(sem: Semantics, c: &Cmd, input: &InputStream, fuel: u64) -> Run {
    let store = Store::new();
    match sem {
        Semantics::Small => {
            let (verdict, last) = run_small(&SmallConfig::new(c.clone(), store, input.clone()), fuel);
            let no_rule = matches!(&verdict, Verdict::Stuck { reason } if reason.starts_with("no rule"));
            let cursor = matches!(verdict, Verdict::Converged { .. }).then(|| last.cursor());
            Run {
                no_rule,
                ..Run::new(verdict, cursor)
            }
        }
        Semantics::Big => match eval_big(c, &store, input, fuel) {
            BigResult::Done(s, i) => Run::new(Verdict::Converged { store: s }, Some(i.cursor())),
            BigResult::Stuck(s) => Run::stuck(s),
            BigResult::OutOfFuel => Run::unknown(fuel),
        },
        Semantics::Pretty => match eval_pretty(&SemCmd::Plain(c.clone()), &store, input, fuel) {
            PrettyResult::Done(Outcome::Conv(s), i) => Run::new(Verdict::Converged { store: s }, Some(i.cursor())),
            PrettyResult::Done(Outcome::Div, _) => Run {
                anomaly: Some("inductive pretty-big-step derived div".into()),
                ..Run::unknown(fuel)
            },
            PrettyResult::Stuck(s) => Run::stuck(s),
            PrettyResult::OutOfFuel => Run::unknown(fuel),
        },
        Semantics::Flag => match eval_flag(c, &store, &Status::Down, input, fuel) {
            Ok(r) => match r.status {
                Status::Down => Run::new(Verdict::Converged { store: r.store }, Some(r.stream.cursor())),
                Status::Exc { value, store } => Run::new(Verdict::Exception { value, store }, Some(r.stream.cursor())),
                Status::Up => Run {
                    anomaly: Some("inductive flag-based evaluation ended in ⇑".into()),
                    ..Run::unknown(fuel)
                },
            },
            Err(FlagError::Stuck(s)) => Run::stuck(s),
            Err(FlagError::OutOfFuel) => Run::unknown(fuel),
        },
    }
}

/// Fuel multipliers tried, in order, on evaluators that ran out while
/// another one reached a verdict.
pub const FUEL_ESCALATION: [u64; 3] = [4, 16, 64];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProverOutcome {
    pub system: System,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamReport {
    pub input: Vec<Val>,
    pub small: Run,
    pub big: Run,
    pub pretty: Run,
    pub flag: Run,
    #[serde(skip)]
    pub lasso: Option<Lasso>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lasso_cycle: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub provers: Vec<ProverOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<String>,
    #[serde(skip)]
    exceptions: bool,
}

impl StreamReport {
    pub fn run(&self, sem: Semantics) -> &Run {
        match sem {
            Semantics::Small => &self.small,
            Semantics::Big => &self.big,
            Semantics::Pretty => &self.pretty,
            Semantics::Flag => &self.flag,
        }
    }

    fn run_mut(&mut self, sem: Semantics) -> &mut Run {
        match sem {
            Semantics::Small => &mut self.small,
            Semantics::Big => &mut self.big,
            Semantics::Pretty => &mut self.pretty,
            Semantics::Flag => &mut self.flag,
        }
    }

    /// The overall classification: a lasso if one was found, otherwise the
    /// flag-based result for programs with exceptions and the small-step one
    /// for the rest.
    pub fn verdict(&self) -> Verdict {
        if let Some(l) = &self.lasso {
            return Verdict::DivergesProven {
                certificate: Box::new(Certificate::Lasso(l.clone())),
            };
        }
        if self.exceptions {
            self.flag.verdict.clone()
        } else {
            self.small.verdict.clone()
        }
    }

    pub fn agrees(&self) -> bool {
        self.issues.is_empty()
    }
}

/// A disagreement, with what is needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub program: String,
    pub input: Vec<Val>,
    pub fuel: u64,
    pub issues: Vec<String>,
}

impl Counterexample {
    /// `.whl` text carrying the replay data in comments.
    pub fn to_whl(&self) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        let input: Vec<String> = self.input.iter().map(Val::to_string).collect();
        out.push_str(&format!("# input: {}\n# fuel: {}\n", input.join(","), self.fuel));
        for issue in &self.issues {
            out.push_str(&format!("# issue: {issue}\n"));
        }
        out.push_str(&self.program);
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub program: String,
    pub fuel: u64,
    pub streams: Vec<StreamReport>,
    pub agreement: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

fn same_result(a: &Run, b: &Run) -> bool {
    match (&a.verdict, &b.verdict) {
        (Verdict::Converged { .. }, _) | (Verdict::Exception { .. }, _) => {
            a.verdict == b.verdict && a.cursor == b.cursor
        }
        (x, y) => x.class() == y.class(),
    }
}

fn describe(sem: Semantics, r: &Run) -> String {
    match r.cursor {
        Some(c) => format!("{sem}: {} (input read: {c})", r.verdict),
        None => format!("{sem}: {}", r.verdict),
    }
}

/// Whether any coinductive evaluator claims that a program which reached a
/// verdict diverges.
fn coinductive_soundness(c: &Cmd, input: &InputStream, fuel: u64, flag_only: bool, issues: &mut Vec<String>) {
    let store = Store::new();
    let none = Abstraction::none();
    let co_fuel = fuel.saturating_mul(16).saturating_add(1024);
    if let Ok((r, _)) = coevaluate_flag(c, &store, input, co_fuel, &none) {
        if r.status == Status::Up {
            issues.push("flag-co derived ⇑ for a program with a verdict".into());
        }
    }
    if flag_only {
        return;
    }
    if let DivAttempt::Diverges(_) = coevaluate_div(c, &store, input, co_fuel, &none) {
        issues.push("div-pred derived divergence for a program with a verdict".into());
    }
    if let Ok((Outcome::Div, _)) = coevaluate_pretty(c, &store, input, co_fuel, &none) {
        issues.push("pretty-co derived div for a program with a verdict".into());
    }
}

fn compare_stream(c: &Cmd, input: &InputStream, fuel: u64) -> StreamReport {
    let exceptions = c.uses_exceptions();
    let [small, big, pretty, flag] = Semantics::ALL.map(|s| run_semantics(s, c, input, fuel));
    let mut rep = StreamReport {
        input: input.values().to_vec(),
        small,
        big,
        pretty,
        flag,
        lasso: None,
        lasso_cycle: None,
        provers: Vec::new(),
        issues: Vec::new(),
        exceptions,
    };

    for factor in FUEL_ESCALATION {
        let decided = Semantics::ALL.iter().filter(|&&s| rep.run(s).decided()).count();
        if decided == 0 || decided == Semantics::ALL.len() {
            break;
        }
        for s in Semantics::ALL {
            if !rep.run(s).decided() {
                *rep.run_mut(s) = run_semantics(s, c, input, fuel.saturating_mul(factor));
            }
        }
    }

    let mut issues = Vec::new();
    for s in Semantics::ALL {
        if let Some(a) = &rep.run(s).anomaly {
            issues.push(format!("{s}: {a}"));
        }
    }
    let peers: &[Semantics] = if exceptions {
        &[Semantics::Big, Semantics::Pretty]
    } else {
        &[Semantics::Big, Semantics::Pretty, Semantics::Flag]
    };
    for &s in peers {
        if !same_result(&rep.small, rep.run(s)) {
            issues.push(format!(
                "{} disagrees with {}",
                describe(s, rep.run(s)),
                describe(Semantics::Small, &rep.small)
            ));
        }
    }
    if exceptions {
        if rep.flag.no_rule {
            issues.push(format!("{} on an exception path", describe(Semantics::Flag, &rep.flag)));
        }
        let must_match = match &rep.small.verdict {
            Verdict::Converged { .. } => true,
            Verdict::Stuck { .. } => !rep.small.no_rule,
            _ => false,
        };
        if must_match && !same_result(&rep.small, &rep.flag) {
            issues.push(format!(
                "{} disagrees with {} before any throw",
                describe(Semantics::Flag, &rep.flag),
                describe(Semantics::Small, &rep.small)
            ));
        }
    }

    if rep.small.decided() {
        let flag_only = exceptions;
        if !exceptions || rep.flag.decided() {
            coinductive_soundness(c, input, fuel, flag_only, &mut issues);
        }
    } else {
        let cfg = SmallConfig::new(c.clone(), Store::new(), input.clone());
        match detect_lasso(&cfg, fuel, &Abstraction::none()) {
            Ok(lasso) => {
                if let Err(e) = check_lasso(&lasso) {
                    issues.push(format!("lasso rejected by its checker: {e}"));
                }
                for s in Semantics::ALL {
                    if rep.run(s).decided() {
                        issues.push(format!("lasso found but {}", describe(s, rep.run(s))));
                    }
                }
                for system in System::COINDUCTIVE {
                    let outcome = match prove_divergence(c, &Store::new(), input, system, fuel, &Abstraction::none()) {
                        Ok(g) => ProverOutcome {
                            system,
                            certificate: Some(Certificate::Graph(g).to_string()),
                            error: None,
                        },
                        Err(e) => {
                            issues.push(format!("lasso found but {} failed: {e}", system.name()));
                            ProverOutcome {
                                system,
                                certificate: None,
                                error: Some(e.to_string()),
                            }
                        }
                    };
                    rep.provers.push(outcome);
                }
                rep.lasso_cycle = Some(lasso.cycle.len());
                rep.lasso = Some(lasso);
            }
            Err(CoinductionError::NotFound(_)) => {}
            Err(e) => issues.push(format!("lasso search failed: {e}")),
        }
    }
    rep.issues = issues;
    rep
}

/// Runs `c` from the empty store under every semantics for each input stream.
pub fn compare_all(c: &Cmd, streams: &[InputStream], fuel: u64) -> CompareReport {
    let reports: Vec<StreamReport> = streams.iter().map(|s| compare_stream(c, s, fuel)).collect();
    let program = pretty_cmd(c);
    let counterexample = reports.iter().find(|r| !r.agrees()).map(|r| Counterexample {
        seed: None,
        program: program.clone(),
        input: r.input.clone(),
        fuel,
        issues: r.issues.clone(),
    });
    CompareReport {
        program,
        fuel,
        agreement: counterexample.is_none(),
        streams: reports,
        counterexample,
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.streams {
            let input: Vec<String> = r.input.iter().map(Val::to_string).collect();
            writeln!(f, "input [{}]: {}", input.join(","), r.verdict())?;
            for s in Semantics::ALL {
                writeln!(f, "  {:<10}{}", s.name(), r.run(s).verdict)?;
            }
            for p in &r.provers {
                let text = p.certificate.as_deref().or(p.error.as_deref()).unwrap_or_default();
                writeln!(f, "  {:<10}{text}", p.system.name())?;
            }
            for issue in &r.issues {
                writeln!(f, "  ! {issue}")?;
            }
        }
        write!(f, "agreement: {}", if self.agreement { "yes" } else { "no" })
    }
}

/// Classifies a run from the empty store: the evaluator's verdict when it
/// reaches one, otherwise a divergence certificate when one is found. With
/// `system` the certificate is a derivation graph in that system, otherwise
/// a lasso.
pub fn classify(
    c: &Cmd,
    input: &InputStream,
    fuel: u64,
    abs: &Abstraction,
    system: Option<System>,
) -> Result<Verdict, CoinductionError> {
    abs.check_cmd(c)?;
    let primary = if c.uses_exceptions() {
        run_semantics(Semantics::Flag, c, input, fuel)
    } else {
        run_semantics(Semantics::Small, c, input, fuel)
    };
    if primary.decided() {
        return Ok(primary.verdict);
    }
    let store = Store::new();
    let found = match system {
        None => detect_lasso(&SmallConfig::new(c.clone(), store, input.clone()), fuel, abs).map(Certificate::Lasso),
        Some(sys) => prove_divergence(c, &store, input, sys, fuel, abs).map(Certificate::Graph),
    };
    match found {
        Ok(certificate) => Ok(Verdict::DivergesProven {
            certificate: Box::new(certificate),
        }),
        Err(CoinductionError::NotFound(_)) => Ok(Verdict::Unknown { fuel }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{fac_program, input_choice, while_one_skip};

    #[test]
    fn factorial_agrees() {
        let rep = compare_all(&fac_program(4), &[InputStream::empty()], 10_000);
        assert!(rep.agreement, "{rep}");
        let expected: Store = [("c", Val::Nat(0)), ("r", Val::Nat(24))].into_iter().collect();
        for s in Semantics::ALL {
            assert_eq!(
                rep.streams[0].run(s).verdict,
                Verdict::Converged {
                    store: expected.clone()
                }
            );
        }
    }

    #[test]
    fn while_one_skip_is_proven() {
        let rep = compare_all(&while_one_skip(), &[InputStream::empty()], 500);
        assert!(rep.agreement, "{rep}");
        let r = &rep.streams[0];
        assert!(Semantics::ALL.iter().all(|&s| !r.run(s).decided()));
        assert_eq!(r.lasso_cycle, Some(2));
        assert_eq!(r.provers.len(), 3);
        assert!(r.provers.iter().all(|p| p.certificate.is_some()));
    }

    #[test]
    fn input_choice_splits() {
        let streams = [InputStream::new(vec![Val::Nat(1)]), InputStream::new(vec![Val::Nat(0)])];
        let rep = compare_all(&input_choice(), &streams, 500);
        assert!(rep.agreement, "{rep}");
        assert_eq!(rep.streams[0].verdict().class(), "stuck");
        assert_eq!(rep.streams[1].verdict().class(), "diverges");
    }

    #[test]
    fn exceptions_compare_on_the_flag_side() {
        let c = crate::parser::parse_cmd("alloc x; try { x := 1; throw 7 } catch { x := x + 1 }").unwrap();
        let rep = compare_all(&c, &[InputStream::empty()], 100);
        assert!(rep.agreement, "{rep}");
        let r = &rep.streams[0];
        assert_eq!(r.small.verdict.class(), "stuck");
        assert_eq!(
            r.verdict(),
            Verdict::Converged {
                store: [("x", Val::Nat(2))].into_iter().collect()
            }
        );
    }

    #[test]
    fn fuel_escalation_settles_asymmetric_costs() {
        // Pretty-big-step spends more rules than small-step takes steps.
        let rep = compare_all(&fac_program(6), &[InputStream::empty()], 60);
        assert!(rep.agreement, "{rep}");
        assert!(rep.streams[0].pretty.decided());
    }

    #[test]
    fn classify_uses_abstraction() {
        let c = crate::syntax::counter_loop();
        let none = classify(&c, &InputStream::empty(), 1000, &Abstraction::none(), None).unwrap();
        assert_eq!(none.class(), "unknown");
        let abs = Abstraction::new(["x"]);
        let v = classify(&c, &InputStream::empty(), 1000, &abs, None).unwrap();
        assert_eq!(v.class(), "diverges");
        let bad = Abstraction::new(["c"]);
        assert!(classify(&fac_program(2), &InputStream::empty(), 10, &bad, None).is_err());
    }
}
