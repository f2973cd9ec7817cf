//! Inductive big-step semantics for commands, as a fuel-bounded evaluator.

use std::collections::BTreeSet;

use crate::derivation::{DerivationGraph, Judgment, NodeId, Recorder, Rule, System};
use crate::small_step::{eval_expr, Stuck};
use crate::syntax::{Cmd, InputStream, Store, Val};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BigResult {
    Done(Store, InputStream),
    /// No rule applies at some node of the attempted derivation.
    Stuck(Stuck),
    /// The derivation may exist but needs more rule applications than allowed.
    OutOfFuel,
}

#[derive(Debug)]
pub(crate) enum Fail {
    Stuck(Stuck),
    OutOfFuel,
}

impl From<Stuck> for Fail {
    fn from(s: Stuck) -> Self {
        Fail::Stuck(s)
    }
}

struct Evaluator<'r> {
    fuel: u64,
    rec: Option<&'r mut Recorder>,
}

type Out = (Store, InputStream, Option<NodeId>);

impl Evaluator<'_> {
    fn tick(&mut self) -> Result<(), Fail> {
        if self.fuel == 0 {
            return Err(Fail::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn reserve(&mut self) -> Option<NodeId> {
        self.rec.as_deref_mut().map(Recorder::reserve)
    }

    fn exec(&mut self, c: &Cmd, store: Store, input: InputStream) -> Result<Out, Fail> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.exec_inner(c, store, input))
    }

    fn exec_inner(&mut self, c: &Cmd, store: Store, input: InputStream) -> Result<Out, Fail> {
        self.tick()?;
        let id = self.reserve();
        let mut premises = Vec::new();
        let (rule, result, out) = match c {
            Cmd::Skip => (Rule::BSkip, store.clone(), input.clone()),
            Cmd::Alloc(x) => {
                if store.contains(x) {
                    return Err(Stuck::AlreadyAllocated(x.clone()).into());
                }
                (Rule::BAlloc, store.update(x, Val::Null), input.clone())
            }
            Cmd::Assign(x, e) => {
                if !store.contains(x) {
                    return Err(Stuck::Unallocated(x.clone()).into());
                }
                let (v, out) = eval_expr(e, &store, &input)?;
                (Rule::BAssign, store.update(x, v), out)
            }
            Cmd::Seq(c1, c2) => {
                let (s1, i1, n1) = self.exec(c1, store.clone(), input.clone())?;
                let (s2, i2, n2) = self.exec(c2, s1, i1)?;
                premises.extend(n1.into_iter().chain(n2));
                (Rule::BSeq, s2, i2)
            }
            Cmd::If(e, c1, c2) => {
                let (v, i1) = eval_expr(e, &store, &input)?;
                let (rule, branch) = if v.is_zero() { (Rule::BIfZ, c2) } else { (Rule::BIf, c1) };
                let (s, i, n) = self.exec(branch, store.clone(), i1)?;
                premises.extend(n);
                (rule, s, i)
            }
            Cmd::While(e, body) => {
                let (v, i1) = eval_expr(e, &store, &input)?;
                if v.is_zero() {
                    (Rule::BWhileZ, store.clone(), i1)
                } else {
                    let (s1, i2, n1) = self.exec(body, store.clone(), i1)?;
                    let (s2, i3, n2) = self.exec(c, s1, i2)?;
                    premises.extend(n1.into_iter().chain(n2));
                    (Rule::BWhile, s2, i3)
                }
            }
            Cmd::Throw(_) => return Err(Stuck::NoRule("throw".into()).into()),
            Cmd::Catch(..) => return Err(Stuck::NoRule("try/catch".into()).into()),
        };
        if let (Some(id), Some(rec)) = (id, self.rec.as_deref_mut()) {
            let judgment = Judgment::Big {
                cmd: c.clone(),
                store,
                cursor: input.cursor(),
                result: result.clone(),
                out_cursor: out.cursor(),
            };
            rec.fill(id, rule, judgment, premises);
        }
        Ok((result, out, id))
    }
}

fn to_result(r: Result<Out, Fail>) -> BigResult {
    match r {
        Ok((s, i, _)) => BigResult::Done(s, i),
        Err(Fail::Stuck(s)) => BigResult::Stuck(s),
        Err(Fail::OutOfFuel) => BigResult::OutOfFuel,
    }
}

/// Evaluate `(c, σ) =B=> σ'` using at most `fuel` rule applications.
pub fn eval_big(c: &Cmd, store: &Store, input: &InputStream, fuel: u64) -> BigResult {
    let mut ev = Evaluator { fuel, rec: None };
    to_result(ev.exec(c, store.clone(), input.clone()))
}

/// The finite derivation tree of `(c, σ) =B=> σ'`, when one exists within `fuel`.
pub fn derive_big(c: &Cmd, store: &Store, input: &InputStream, fuel: u64) -> Result<DerivationGraph, BigResult> {
    let mut rec = Recorder::default();
    let mut ev = Evaluator {
        fuel,
        rec: Some(&mut rec),
    };
    match ev.exec(c, store.clone(), input.clone()) {
        Ok((_, _, root)) => Ok(rec.finish(
            System::Big,
            input.values().to_vec(),
            BTreeSet::new(),
            root.expect("recording evaluator returns a node"),
        )),
        Err(e) => Err(to_result(Err(e))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{fac_program, while_one_skip, Expr};

    fn done_store(r: BigResult) -> Store {
        match r {
            BigResult::Done(s, _) => s,
            other => panic!("expected Done, got {other:?}"),
        }
    }

    #[test]
    fn factorial() {
        let s = done_store(eval_big(&fac_program(4), &Store::new(), &InputStream::empty(), 10_000));
        assert_eq!(s.to_string(), "{c↦0, r↦24}");
    }

    #[test]
    fn skip_needs_one_rule() {
        let s: Store = [("a", Val::Nat(2))].into_iter().collect();
        assert_eq!(
            eval_big(&Cmd::Skip, &s, &InputStream::empty(), 1),
            BigResult::Done(s.clone(), InputStream::empty())
        );
        assert_eq!(eval_big(&Cmd::Skip, &s, &InputStream::empty(), 0), BigResult::OutOfFuel);
    }

    #[test]
    fn while_one_skip_runs_out_of_fuel() {
        assert_eq!(
            eval_big(&while_one_skip(), &Store::new(), &InputStream::empty(), 100_000),
            BigResult::OutOfFuel
        );
    }

    #[test]
    fn stuck_cases() {
        let e = InputStream::empty();
        assert_eq!(
            eval_big(&Cmd::assign("x", Expr::nat(0)), &Store::new(), &e, 10),
            BigResult::Stuck(Stuck::Unallocated("x".into()))
        );
        assert!(matches!(
            eval_big(&Cmd::Throw(Val::Nat(1)), &Store::new(), &e, 10),
            BigResult::Stuck(Stuck::NoRule(_))
        ));
        assert_eq!(
            eval_big(
                &Cmd::assign("x", Expr::Input),
                &[("x", Val::Null)].into_iter().collect(),
                &e,
                10
            ),
            BigResult::Stuck(Stuck::InputExhausted)
        );
    }

    #[test]
    fn derivation_dump() {
        let c = Cmd::seq(Cmd::alloc("x"), Cmd::assign("x", Expr::nat(1)));
        let g = derive_big(&c, &Store::new(), &InputStream::empty(), 100).unwrap();
        let rules: Vec<_> = g.nodes.iter().map(|n| n.rule.name()).collect();
        assert_eq!(rules, ["B-Seq", "B-Alloc", "B-Assign"]);
        assert_eq!(g.nodes[0].premises, vec![1, 2]);
        assert_eq!(g.back_edges(), 0);
    }
}
