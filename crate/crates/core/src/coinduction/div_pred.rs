//! Builds derivations of `(c, σ) =inf=>`. Converging sub-commands run as
//! ordinary big-step evaluation and leave no nodes; the checker re-runs them.

use crate::big_step::Fail;
use crate::derivation::{DerivationGraph, Judgment, NodeId, Recorder, Rule, System};
use crate::small_step::{eval_expr, Stuck};
use crate::syntax::{Cmd, InputStream, Store, Val};

use super::abstraction::LoopMemo;
use super::Abstraction;

enum Res {
    Conv(Store, InputStream),
    Div(NodeId),
}

struct CoDiv {
    fuel: u64,
    rec: Recorder,
    memo: LoopMemo,
}

impl CoDiv {
    fn tick(&mut self) -> Result<(), Fail> {
        if self.fuel == 0 {
            return Err(Fail::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn exec(&mut self, c: &Cmd, store: Store, input: InputStream) -> Result<Res, Fail> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.exec_inner(c, store, input))
    }

    fn diverged(&mut self, id: NodeId, rule: Rule, c: &Cmd, store: Store, input: &InputStream, premise: NodeId) -> Res {
        let judgment = Judgment::Div {
            cmd: c.clone(),
            store,
            cursor: input.cursor(),
        };
        self.rec.fill(id, rule, judgment, vec![premise]);
        Res::Div(id)
    }

    fn exec_inner(&mut self, c: &Cmd, store: Store, input: InputStream) -> Result<Res, Fail> {
        let key = match c {
            Cmd::While(..) => {
                let key = self.memo.key(c, &store, input.cursor());
                if let Some(target) = self.memo.open(&key) {
                    return Ok(Res::Div(target));
                }
                Some(key)
            }
            _ => None,
        };
        self.tick()?;
        let id = self.rec.reserve();
        if let Some(key) = &key {
            self.memo.enter(key.clone(), id);
        }
        let r = self.apply(id, c, store, input);
        if let Some(key) = &key {
            self.memo.leave(key);
        }
        r
    }

    fn apply(&mut self, id: NodeId, c: &Cmd, store: Store, input: InputStream) -> Result<Res, Fail> {
        Ok(match c {
            Cmd::Skip => Res::Conv(store, input),
            Cmd::Alloc(x) => {
                if store.contains(x) {
                    return Err(Stuck::AlreadyAllocated(x.clone()).into());
                }
                Res::Conv(store.update(x, Val::Null), input)
            }
            Cmd::Assign(x, e) => {
                if !store.contains(x) {
                    return Err(Stuck::Unallocated(x.clone()).into());
                }
                let (v, out) = eval_expr(e, &store, &input)?;
                Res::Conv(store.update(x, v), out)
            }
            Cmd::Seq(c1, c2) => match self.exec(c1, store.clone(), input.clone())? {
                Res::Div(p) => self.diverged(id, Rule::DSeq1, c, store, &input, p),
                Res::Conv(s1, i1) => match self.exec(c2, s1, i1)? {
                    Res::Div(p) => self.diverged(id, Rule::DSeq2, c, store, &input, p),
                    conv => conv,
                },
            },
            Cmd::If(e, c1, c2) => {
                let (v, i1) = eval_expr(e, &store, &input)?;
                let (rule, branch) = if v.is_zero() { (Rule::DIfZ, c2) } else { (Rule::DIf, c1) };
                match self.exec(branch, store.clone(), i1)? {
                    Res::Div(p) => self.diverged(id, rule, c, store, &input, p),
                    conv => conv,
                }
            }
            Cmd::While(e, body) => {
                let (v, i1) = eval_expr(e, &store, &input)?;
                if v.is_zero() {
                    return Ok(Res::Conv(store, i1));
                }
                match self.exec(body, store.clone(), i1)? {
                    Res::Div(p) => self.diverged(id, Rule::DWhileBody, c, store, &input, p),
                    Res::Conv(s1, i2) => match self.exec(c, s1, i2)? {
                        Res::Div(p) => self.diverged(id, Rule::DWhile, c, store, &input, p),
                        conv => conv,
                    },
                }
            }
            Cmd::Throw(_) => return Err(Stuck::NoRule("throw".into()).into()),
            Cmd::Catch(..) => return Err(Stuck::NoRule("try/catch".into()).into()),
        })
    }
}

pub(crate) enum DivAttempt {
    Diverges(DerivationGraph),
    Converges,
    Stuck(Stuck),
    OutOfFuel,
}

pub(crate) fn coevaluate_div(c: &Cmd, store: &Store, input: &InputStream, fuel: u64, abs: &Abstraction) -> DivAttempt {
    let mut ev = CoDiv {
        fuel,
        rec: Recorder::default(),
        memo: LoopMemo::new(abs.clone()),
    };
    match ev.exec(c, store.clone(), input.clone()) {
        Ok(Res::Div(root)) => {
            DivAttempt::Diverges(
                ev.rec
                    .finish(System::DivPred, input.values().to_vec(), abs.vars().clone(), root),
            )
        }
        Ok(Res::Conv(..)) => DivAttempt::Converges,
        Err(Fail::Stuck(s)) => DivAttempt::Stuck(s),
        Err(Fail::OutOfFuel) => DivAttempt::OutOfFuel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{while_one_skip, Expr};

    #[test]
    fn while_one_skip_uses_the_body_rule_then_closes() {
        let g = match coevaluate_div(
            &while_one_skip(),
            &Store::new(),
            &InputStream::empty(),
            100,
            &Abstraction::none(),
        ) {
            DivAttempt::Diverges(g) => g,
            _ => panic!("expected a derivation"),
        };
        let rules: Vec<_> = g.nodes.iter().map(|n| n.rule.name()).collect();
        assert_eq!(rules, ["D-While"]);
        assert_eq!(g.nodes[0].premises, vec![0]);
    }

    #[test]
    fn seq_prefix_converges_first() {
        let c = Cmd::seq(
            Cmd::alloc("x"),
            Cmd::seq(Cmd::assign("x", Expr::nat(1)), while_one_skip()),
        );
        let g = match coevaluate_div(&c, &Store::new(), &InputStream::empty(), 100, &Abstraction::none()) {
            DivAttempt::Diverges(g) => g,
            _ => panic!("expected a derivation"),
        };
        let rules: Vec<_> = g.nodes.iter().map(|n| n.rule.name()).collect();
        assert_eq!(rules, ["D-Seq2", "D-Seq2", "D-While"]);
    }
}
