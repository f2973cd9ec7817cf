//! Pretty-big-step semantics over [`SemCmd`], with abort rules for the `div`
//! outcome. The inductive evaluator never produces `div` for a source command;
//! the coinductive mode closes repeated loop judgments with back-edges.

use std::collections::BTreeSet;

use crate::big_step::Fail;
use crate::coinduction::{Abstraction, LoopMemo};
use crate::derivation::{DerivationGraph, Judgment, NodeId, Recorder, Rule, System};
use crate::small_step::{eval_expr, Stuck};
use crate::syntax::{Cmd, InputStream, Outcome, SemCmd, Store, Val};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrettyResult {
    Done(Outcome, InputStream),
    Stuck(Stuck),
    OutOfFuel,
}

type Out = (Outcome, InputStream, Option<NodeId>);

pub(crate) struct Evaluator<'r> {
    fuel: u64,
    rec: Option<&'r mut Recorder>,
    memo: Option<LoopMemo>,
}

impl Evaluator<'_> {
    fn tick(&mut self) -> Result<(), Fail> {
        if self.fuel == 0 {
            return Err(Fail::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn eval(&mut self, c: SemCmd, store: Store, input: InputStream) -> Result<Out, Fail> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.eval_inner(c, store, input))
    }

    fn plain(&mut self, c: &Cmd, store: Store, input: InputStream) -> Result<Out, Fail> {
        self.eval(SemCmd::Plain(c.clone()), store, input)
    }

    fn eval_inner(&mut self, c: SemCmd, store: Store, input: InputStream) -> Result<Out, Fail> {
        let loop_key = match (&c, &self.memo) {
            (SemCmd::Plain(w @ Cmd::While(..)), Some(memo)) => {
                let key = memo.key(w, &store, input.cursor());
                if let Some(target) = memo.open(&key) {
                    return Ok((Outcome::Div, input, Some(target)));
                }
                Some(key)
            }
            _ => None,
        };
        self.tick()?;
        let id = self.rec.as_deref_mut().map(Recorder::reserve);
        if let (Some(key), Some(memo), Some(id)) = (&loop_key, self.memo.as_mut(), id) {
            memo.enter(key.clone(), id);
        }
        let result = self.apply(&c, &store, &input);
        if let (Some(key), Some(memo)) = (&loop_key, self.memo.as_mut()) {
            memo.leave(key);
        }
        let (rule, outcome, out, premises) = result?;
        if let (Some(id), Some(rec)) = (id, self.rec.as_deref_mut()) {
            let judgment = Judgment::Pretty {
                cmd: c,
                store,
                cursor: input.cursor(),
                outcome: outcome.clone(),
                out_cursor: out.cursor(),
            };
            rec.fill(id, rule, judgment, premises);
        }
        Ok((outcome, out, id))
    }

    #[allow(clippy::type_complexity)]
    fn apply(
        &mut self,
        c: &SemCmd,
        store: &Store,
        input: &InputStream,
    ) -> Result<(Rule, Outcome, InputStream, Vec<NodeId>), Fail> {
        let mut premises = Vec::new();
        fn sub(r: Out, premises: &mut Vec<NodeId>) -> (Outcome, InputStream) {
            premises.extend(r.2);
            (r.0, r.1)
        }
        let (rule, outcome, out) = match c {
            SemCmd::Plain(Cmd::Skip) => (Rule::PSkip, Outcome::Conv(store.clone()), input.clone()),
            SemCmd::Plain(Cmd::Alloc(x)) => {
                if store.contains(x) {
                    return Err(Stuck::AlreadyAllocated(x.clone()).into());
                }
                (Rule::PAlloc, Outcome::Conv(store.update(x, Val::Null)), input.clone())
            }
            SemCmd::Plain(Cmd::Assign(x, e)) => {
                let (v, i1) = eval_expr(e, store, input)?;
                let r = self.eval(SemCmd::Assign2(x.clone(), v), store.clone(), i1)?;
                let (o, i2) = sub(r, &mut premises);
                (Rule::PAssign1, o, i2)
            }
            SemCmd::Assign2(x, v) => {
                if !store.contains(x) {
                    return Err(Stuck::Unallocated(x.clone()).into());
                }
                (Rule::PAssign2, Outcome::Conv(store.update(x, *v)), input.clone())
            }
            SemCmd::Plain(Cmd::Seq(c1, c2)) => {
                let r = self.plain(c1, store.clone(), input.clone())?;
                let (o1, i1) = sub(r, &mut premises);
                let r = self.eval(SemCmd::Seq2(o1, (**c2).clone()), store.clone(), i1)?;
                let (o, i2) = sub(r, &mut premises);
                (Rule::PSeq1, o, i2)
            }
            SemCmd::Seq2(Outcome::Conv(s1), c2) => {
                let r = self.plain(c2, s1.clone(), input.clone())?;
                let (o, i1) = sub(r, &mut premises);
                (Rule::PSeq2, o, i1)
            }
            SemCmd::Seq2(Outcome::Div, _) => (Rule::PSeqAbort, Outcome::Div, input.clone()),
            SemCmd::Plain(Cmd::If(e, c1, c2)) => {
                let (v, i1) = eval_expr(e, store, input)?;
                let next = SemCmd::If2(v, (**c1).clone(), (**c2).clone());
                let r = self.eval(next, store.clone(), i1)?;
                let (o, i2) = sub(r, &mut premises);
                (Rule::PIf, o, i2)
            }
            SemCmd::If2(v, c1, c2) => {
                let (rule, branch) = if v.is_zero() {
                    (Rule::PIfZ2, c2)
                } else {
                    (Rule::PIf2, c1)
                };
                let r = self.plain(branch, store.clone(), input.clone())?;
                let (o, i1) = sub(r, &mut premises);
                (rule, o, i1)
            }
            SemCmd::Plain(Cmd::While(e, body)) => {
                let (v, i1) = eval_expr(e, store, input)?;
                let next = SemCmd::While2(v, e.clone(), (**body).clone());
                let r = self.eval(next, store.clone(), i1)?;
                let (o, i2) = sub(r, &mut premises);
                (Rule::PWhile, o, i2)
            }
            SemCmd::While2(v, _, _) if v.is_zero() => (Rule::PWhileZ2, Outcome::Conv(store.clone()), input.clone()),
            SemCmd::While2(_, e, body) => {
                let r = self.plain(body, store.clone(), input.clone())?;
                let (o, i1) = sub(r, &mut premises);
                let r = self.eval(SemCmd::While3(o, e.clone(), body.clone()), store.clone(), i1)?;
                let (o2, i2) = sub(r, &mut premises);
                (Rule::PWhile2, o2, i2)
            }
            SemCmd::While3(Outcome::Conv(s1), e, body) => {
                let w = Cmd::While(e.clone(), Box::new(body.clone()));
                let r = self.plain(&w, s1.clone(), input.clone())?;
                let (o, i1) = sub(r, &mut premises);
                (Rule::PWhile3, o, i1)
            }
            SemCmd::While3(Outcome::Div, _, _) => (Rule::PWhileAbort, Outcome::Div, input.clone()),
            SemCmd::Plain(Cmd::Throw(_)) => return Err(Stuck::NoRule("throw".into()).into()),
            SemCmd::Plain(Cmd::Catch(..)) => return Err(Stuck::NoRule("try/catch".into()).into()),
        };
        Ok((rule, outcome, out, premises))
    }
}

fn to_result(r: Result<Out, Fail>) -> PrettyResult {
    match r {
        Ok((o, i, _)) => PrettyResult::Done(o, i),
        Err(Fail::Stuck(s)) => PrettyResult::Stuck(s),
        Err(Fail::OutOfFuel) => PrettyResult::OutOfFuel,
    }
}

/// Evaluate `(C, σ) =v o` inductively using at most `fuel` rule applications.
pub fn eval_pretty(c: &SemCmd, store: &Store, input: &InputStream, fuel: u64) -> PrettyResult {
    let mut ev = Evaluator {
        fuel,
        rec: None,
        memo: None,
    };
    to_result(ev.eval(c.clone(), store.clone(), input.clone()))
}

/// The finite derivation tree of `(C, σ) =v o`, when one exists within `fuel`.
pub fn derive_pretty(
    c: &SemCmd,
    store: &Store,
    input: &InputStream,
    fuel: u64,
) -> Result<DerivationGraph, PrettyResult> {
    let mut rec = Recorder::default();
    let mut ev = Evaluator {
        fuel,
        rec: Some(&mut rec),
        memo: None,
    };
    match ev.eval(c.clone(), store.clone(), input.clone()) {
        Ok((_, _, root)) => Ok(rec.finish(
            System::Pretty,
            input.values().to_vec(),
            BTreeSet::new(),
            root.expect("recording evaluator returns a node"),
        )),
        Err(e) => Err(to_result(Err(e))),
    }
}

/// Coinductive evaluation: a loop judgment that repeats one of its ancestors
/// (modulo `abs`) is closed by a back-edge and yields `div`.
pub(crate) fn coevaluate_pretty(
    c: &Cmd,
    store: &Store,
    input: &InputStream,
    fuel: u64,
    abs: &Abstraction,
) -> Result<(Outcome, DerivationGraph), PrettyResult> {
    let mut rec = Recorder::default();
    let mut ev = Evaluator {
        fuel,
        rec: Some(&mut rec),
        memo: Some(LoopMemo::new(abs.clone())),
    };
    match ev.plain(c, store.clone(), input.clone()) {
        Ok((o, _, root)) => Ok((
            o,
            rec.finish(
                System::PrettyCo,
                input.values().to_vec(),
                abs.vars().clone(),
                root.expect("recording evaluator returns a node"),
            ),
        )),
        Err(e) => Err(to_result(Err(e))),
    }
}
