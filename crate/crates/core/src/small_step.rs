//! Expression evaluation and the small-step transition relation for commands,
//! its reflexive-transitive closure, and recorded traces.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{BinOp, Cmd, Expr, Ident, InputStream, Store, Val, Verdict};

/// Why no rule applies. Shared by every evaluator in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stuck {
    #[error("unbound variable `{0}`")]
    UnboundVar(Ident),
    #[error("null operand to `{0}`")]
    NullOperand(String),
    #[error("input exhausted")]
    InputExhausted,
    #[error("`{0}` is already allocated")]
    AlreadyAllocated(Ident),
    #[error("assignment to unallocated `{0}`")]
    Unallocated(Ident),
    #[error("no rule for `{0}`")]
    NoRule(String),
}

impl Stuck {
    fn null_operand(op: BinOp) -> Self {
        Stuck::NullOperand(op.symbol().to_string())
    }
}

/// Big-step expression evaluation, threading the input stream left to right.
pub fn eval_expr(e: &Expr, store: &Store, input: &InputStream) -> Result<(Val, InputStream), Stuck> {
    match e {
        Expr::Lit(v) => Ok((*v, input.clone())),
        Expr::Var(x) => store
            .get(x)
            .map(|v| (v, input.clone()))
            .ok_or_else(|| Stuck::UnboundVar(x.clone())),
        Expr::Input => input.pop().ok_or(Stuck::InputExhausted),
        Expr::Bop(op, l, r) => {
            let (a, input) = eval_expr(l, store, input)?;
            let (b, input) = eval_expr(r, store, &input)?;
            match (a, b) {
                (Val::Nat(a), Val::Nat(b)) => Ok((Val::Nat(op.apply(a, b)), input)),
                _ => Err(Stuck::null_operand(*op)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SmallConfig {
    pub cmd: Cmd,
    pub store: Store,
    pub stream: InputStream,
}

impl SmallConfig {
    pub fn new(cmd: Cmd, store: Store, stream: InputStream) -> Self {
        SmallConfig { cmd, store, stream }
    }

    /// A program started in the empty store with the given input.
    pub fn start(cmd: Cmd, input: Vec<Val>) -> Self {
        SmallConfig::new(cmd, Store::new(), InputStream::new(input))
    }

    pub fn is_terminal(&self) -> bool {
        self.cmd == Cmd::Skip
    }
}

impl fmt::Display for SmallConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, cursor={})", self.cmd, self.store, self.stream.cursor())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoStep {
    #[error("terminal configuration")]
    Terminal,
    #[error("stuck: {0}")]
    Stuck(Stuck),
}

fn transition(
    cmd: &Cmd,
    store: &Store,
    input: &InputStream,
) -> Result<(&'static str, Cmd, Store, InputStream), NoStep> {
    match cmd {
        Cmd::Skip => Err(NoStep::Terminal),
        Cmd::Alloc(x) => {
            if store.contains(x) {
                Err(NoStep::Stuck(Stuck::AlreadyAllocated(x.clone())))
            } else {
                Ok(("S-Alloc", Cmd::Skip, store.update(x, Val::Null), input.clone()))
            }
        }
        Cmd::Assign(x, e) => {
            if !store.contains(x) {
                return Err(NoStep::Stuck(Stuck::Unallocated(x.clone())));
            }
            let (v, input) = eval_expr(e, store, input).map_err(NoStep::Stuck)?;
            Ok(("S-Assign", Cmd::Skip, store.update(x, v), input))
        }
        Cmd::Seq(c1, c2) => {
            if **c1 == Cmd::Skip {
                return Ok(("S-SeqSkip", (**c2).clone(), store.clone(), input.clone()));
            }
            let (_, c1n, s, i) = stacker::maybe_grow(32 * 1024, 1024 * 1024, || transition(c1, store, input))?;
            Ok(("S-Seq", Cmd::Seq(Box::new(c1n), c2.clone()), s, i))
        }
        Cmd::If(e, c1, c2) => {
            let (v, input) = eval_expr(e, store, input).map_err(NoStep::Stuck)?;
            if v.is_zero() {
                Ok(("S-IfZ", (**c2).clone(), store.clone(), input))
            } else {
                Ok(("S-If", (**c1).clone(), store.clone(), input))
            }
        }
        Cmd::While(e, body) => {
            let (v, input) = eval_expr(e, store, input).map_err(NoStep::Stuck)?;
            if v.is_zero() {
                Ok(("S-WhileZ", Cmd::Skip, store.clone(), input))
            } else {
                Ok((
                    "S-While",
                    Cmd::Seq(body.clone(), Box::new(cmd.clone())),
                    store.clone(),
                    input,
                ))
            }
        }
        Cmd::Throw(_) => Err(NoStep::Stuck(Stuck::NoRule("throw".into()))),
        Cmd::Catch(..) => Err(NoStep::Stuck(Stuck::NoRule("try/catch".into()))),
    }
}

/// One transition, together with the name of the rule at the root of its derivation.
pub fn step_with_rule(cfg: &SmallConfig) -> Result<(&'static str, SmallConfig), NoStep> {
    let (rule, cmd, store, stream) = transition(&cfg.cmd, &cfg.store, &cfg.stream)?;
    Ok((rule, SmallConfig { cmd, store, stream }))
}

pub fn step(cfg: &SmallConfig) -> Result<SmallConfig, NoStep> {
    step_with_rule(cfg).map(|(_, next)| next)
}

/// The configurations visited by a run, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub configs: Vec<SmallConfig>,
    /// The last configuration is `skip`.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: usize,
    pub cmd: Cmd,
    pub store: Store,
    pub stream_cursor: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn entries(&self) -> Vec<TraceEntry> {
        self.configs
            .iter()
            .enumerate()
            .map(|(index, c)| TraceEntry {
                index,
                cmd: c.cmd.clone(),
                store: c.store.clone(),
                stream_cursor: c.stream.cursor(),
            })
            .collect()
    }

    /// One configuration per line: `index: (cmd, store, cursor=k)`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.configs.iter().enumerate() {
            out.push_str(&format!("{i}: {c}\n"));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.entries()).expect("trace entries serialize")
    }
}

fn run(cfg: &SmallConfig, fuel: u64, mut visit: impl FnMut(&SmallConfig)) -> Verdict {
    let mut cur = cfg.clone();
    let mut spent = 0;
    loop {
        visit(&cur);
        if cur.is_terminal() {
            return Verdict::Converged { store: cur.store };
        }
        if spent == fuel {
            return Verdict::Unknown { fuel };
        }
        match step(&cur) {
            Ok(next) => cur = next,
            Err(NoStep::Stuck(s)) => return Verdict::Stuck { reason: s.to_string() },
            Err(NoStep::Terminal) => unreachable!("non-skip configurations are not terminal"),
        }
        spent += 1;
    }
}

/// Iterate `step` for at most `fuel` transitions, recording every configuration.
pub fn run_star(cfg: &SmallConfig, fuel: u64) -> (Verdict, Trace) {
    let mut configs = Vec::new();
    let verdict = run(cfg, fuel, |c| configs.push(c.clone()));
    let terminal = matches!(verdict, Verdict::Converged { .. });
    (verdict, Trace { configs, terminal })
}

/// [`run_star`] without the trace. Also reports the final configuration's stream.
pub fn run_small(cfg: &SmallConfig, fuel: u64) -> (Verdict, InputStream) {
    let mut last = cfg.stream.clone();
    let verdict = run(cfg, fuel, |c| last = c.stream.clone());
    (verdict, last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{fac_program, while_one_skip};

    fn empty() -> InputStream {
        InputStream::empty()
    }

    #[test]
    fn expression_examples() {
        assert_eq!(
            eval_expr(&Expr::nat(1), &Store::new(), &empty()).unwrap().0,
            Val::Nat(1)
        );
        let s: Store = [("x", Val::Nat(3))].into_iter().collect();
        assert_eq!(eval_expr(&Expr::var("x"), &s, &empty()).unwrap().0, Val::Nat(3));
        let s: Store = [("x", Val::Null)].into_iter().collect();
        assert_eq!(
            eval_expr(&Expr::add(Expr::var("x"), Expr::nat(0)), &s, &empty()),
            Err(Stuck::NullOperand("+".into()))
        );
        let (v, rest) = eval_expr(&Expr::Input, &Store::new(), &InputStream::new(vec![Val::Nat(7)])).unwrap();
        assert_eq!(v, Val::Nat(7));
        assert!(rest.remaining().is_empty());
        assert_eq!(
            eval_expr(&Expr::Input, &Store::new(), &empty()),
            Err(Stuck::InputExhausted)
        );
        assert_eq!(
            eval_expr(&Expr::var("y"), &Store::new(), &empty()),
            Err(Stuck::UnboundVar("y".into()))
        );
    }

    #[test]
    fn input_threads_left_to_right() {
        let stream = InputStream::new(vec![Val::Nat(5), Val::Nat(2)]);
        let (v, _) = eval_expr(&Expr::sub(Expr::Input, Expr::Input), &Store::new(), &stream).unwrap();
        assert_eq!(v, Val::Nat(3));
    }

    #[test]
    fn step_examples() {
        let cfg = SmallConfig::start(while_one_skip(), vec![]);
        let (rule, next) = step_with_rule(&cfg).unwrap();
        assert_eq!(rule, "S-While");
        assert_eq!(next.cmd, Cmd::seq(Cmd::Skip, while_one_skip()));

        let c = Cmd::alloc("x");
        let cfg = SmallConfig::new(Cmd::seq(Cmd::Skip, c.clone()), Store::new(), empty());
        let (rule, next) = step_with_rule(&cfg).unwrap();
        assert_eq!(rule, "S-SeqSkip");
        assert_eq!(next.cmd, c);

        let cfg = SmallConfig::start(Cmd::assign("x", Expr::nat(0)), vec![]);
        assert_eq!(step(&cfg), Err(NoStep::Stuck(Stuck::Unallocated("x".into()))));
        let cfg = SmallConfig::start(Cmd::Skip, vec![]);
        assert_eq!(step(&cfg), Err(NoStep::Terminal));
        let cfg = SmallConfig::start(Cmd::Throw(Val::Nat(1)), vec![]);
        assert!(matches!(step(&cfg), Err(NoStep::Stuck(Stuck::NoRule(_)))));
    }

    #[test]
    fn null_guard_counts_as_true() {
        let cfg = SmallConfig::new(
            Cmd::if_(Expr::var("x"), Cmd::alloc("a"), Cmd::alloc("b")),
            [("x", Val::Null)].into_iter().collect(),
            empty(),
        );
        assert_eq!(step_with_rule(&cfg).unwrap().0, "S-If");
    }

    #[test]
    fn run_star_examples() {
        let (v, trace) = run_star(&SmallConfig::start(fac_program(4), vec![]), 10_000);
        let want: Store = [("c", Val::Nat(0)), ("r", Val::Nat(24))].into_iter().collect();
        assert_eq!(v, Verdict::Converged { store: want });
        assert!(trace.terminal);
        assert_eq!(trace.configs.last().unwrap().cmd, Cmd::Skip);

        let s: Store = [("q", Val::Nat(1))].into_iter().collect();
        let (v, trace) = run_star(&SmallConfig::new(Cmd::Skip, s.clone(), empty()), 0);
        assert_eq!(v, Verdict::Converged { store: s });
        assert_eq!(trace.len(), 1);

        let (v, trace) = run_star(&SmallConfig::start(while_one_skip(), vec![]), 100);
        assert_eq!(v, Verdict::Unknown { fuel: 100 });
        assert_eq!(trace.len(), 101);
        assert!(!trace.terminal);
    }

    #[test]
    fn trace_forms() {
        let (_, trace) = run_star(&SmallConfig::start(Cmd::alloc("x"), vec![]), 10);
        assert_eq!(
            trace.to_text(),
            "0: (alloc x, {}, cursor=0)\n1: (skip, {x↦null}, cursor=0)\n"
        );
        let json = trace.to_json();
        assert_eq!(json[1]["store"]["x"], serde_json::Value::Null);
        assert_eq!(json[1]["cmd"], "skip");
        assert_eq!(json[0]["stream_cursor"], 0);
    }
}
