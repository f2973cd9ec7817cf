//! Flag-based big-step semantics: a status flag threaded through every premise,
//! extended with `throw`/`try`-`catch` and `input`.
//!
//! Results carrying `⇑` or `exc(..)` use the empty store and `null` as canonical
//! stand-ins for the arbitrary store and value the rules allow; they are ignored
//! by [`FlagResult`]'s equality.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::big_step::Fail;
use crate::coinduction::{Abstraction, LoopMemo};
use crate::derivation::{DerivationGraph, Judgment, NodeId, Recorder, Rule, System};
use crate::small_step::Stuck;
use crate::syntax::{Cmd, Expr, InputStream, Status, Store, Val};

#[derive(Debug, Clone)]
pub struct FlagResult {
    pub status: Status,
    pub store: Store,
    /// Present for expression judgments only.
    pub value: Option<Val>,
    pub stream: InputStream,
}

impl FlagResult {
    fn cmd(status: Status, store: Store, stream: InputStream) -> Self {
        let store = if status.is_down() { store } else { Store::new() };
        FlagResult {
            status,
            store,
            value: None,
            stream,
        }
    }

    fn expr(status: Status, value: Val, stream: InputStream) -> Self {
        let value = if status.is_down() { value } else { Val::Null };
        FlagResult {
            status,
            store: Store::new(),
            value: Some(value),
            stream,
        }
    }
}

/// Status-aware equality: the store and value count only under `⇓`, and the
/// stream position counts unless the result is `⇑`.
impl PartialEq for FlagResult {
    fn eq(&self, other: &Self) -> bool {
        if self.status != other.status {
            return false;
        }
        match self.status {
            Status::Down => {
                self.store == other.store && self.value == other.value && self.stream.cursor() == other.stream.cursor()
            }
            Status::Exc { .. } => self.stream.cursor() == other.stream.cursor(),
            Status::Up => true,
        }
    }
}

impl Eq for FlagResult {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlagError {
    #[error("stuck: {0}")]
    Stuck(Stuck),
    #[error("out of fuel")]
    OutOfFuel,
}

impl From<Fail> for FlagError {
    fn from(f: Fail) -> Self {
        match f {
            Fail::Stuck(s) => FlagError::Stuck(s),
            Fail::OutOfFuel => FlagError::OutOfFuel,
        }
    }
}

type CmdOut = (Store, Status, InputStream, Option<NodeId>);
type ExprOut = (Val, Status, InputStream, Option<NodeId>);

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

    fn reserve(&mut self) -> Option<NodeId> {
        self.rec.as_deref_mut().map(Recorder::reserve)
    }

    fn expr(&mut self, e: &Expr, store: &Store, flag: &Status, input: &InputStream) -> Result<ExprOut, Fail> {
        let id = self.reserve();
        let mut premises = Vec::new();
        let (rule, value, out_flag, out) = match flag {
            Status::Up => (Rule::FEDiv, Val::Null, Status::Up, input.clone()),
            Status::Exc { .. } => (Rule::FEExc, Val::Null, flag.clone(), input.clone()),
            Status::Down => match e {
                Expr::Lit(v) => (Rule::FEVal, *v, Status::Down, input.clone()),
                Expr::Var(x) => {
                    let v = store.get(x).ok_or_else(|| Stuck::UnboundVar(x.clone()))?;
                    (Rule::FEVar, v, Status::Down, input.clone())
                }
                Expr::Input => {
                    let (v, rest) = input.pop().ok_or(Stuck::InputExhausted)?;
                    (Rule::FEInput, v, Status::Down, rest)
                }
                Expr::Bop(op, l, r) => {
                    let (n1, d1, i1, p1) = self.expr(l, store, flag, input)?;
                    let (n2, d2, i2, p2) = self.expr(r, store, &d1, &i1)?;
                    premises.extend(p1.into_iter().chain(p2));
                    let v = match (d2.is_down(), n1, n2) {
                        (false, _, _) => Val::Null,
                        (true, Val::Nat(a), Val::Nat(b)) => Val::Nat(op.apply(a, b)),
                        (true, _, _) => return Err(Stuck::NullOperand(op.symbol().to_string()).into()),
                    };
                    (Rule::FEBop, v, d2, i2)
                }
            },
        };
        if let (Some(id), Some(rec)) = (id, self.rec.as_deref_mut()) {
            let judgment = Judgment::FlagExpr {
                expr: e.clone(),
                store: store.clone(),
                flag: flag.clone(),
                cursor: input.cursor(),
                value,
                out_flag: out_flag.clone(),
                out_cursor: out.cursor(),
            };
            rec.fill(id, rule, judgment, premises);
        }
        Ok((value, out_flag, out, id))
    }

    fn cmd(&mut self, c: &Cmd, store: Store, flag: Status, input: InputStream) -> Result<CmdOut, Fail> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.cmd_inner(c, store, flag, input))
    }

    fn cmd_inner(&mut self, c: &Cmd, store: Store, flag: Status, input: InputStream) -> Result<CmdOut, Fail> {
        let loop_key = match (c, &flag, &self.memo) {
            (Cmd::While(..), Status::Down, Some(memo)) => {
                let key = memo.key(c, &store, input.cursor());
                if let Some(target) = memo.open(&key) {
                    return Ok((Store::new(), Status::Up, input, Some(target)));
                }
                Some(key)
            }
            _ => None,
        };
        if flag.is_down() {
            self.tick()?;
        }
        let id = self.reserve();
        if let (Some(key), Some(memo), Some(id)) = (&loop_key, self.memo.as_mut(), id) {
            memo.enter(key.clone(), id);
        }
        let result = self.apply(c, &store, &flag, &input);
        if let (Some(key), Some(memo)) = (&loop_key, self.memo.as_mut()) {
            memo.leave(key);
        }
        let (rule, result, out_flag, out, premises) = result?;
        let result = if out_flag.is_down() { result } else { Store::new() };
        if let (Some(id), Some(rec)) = (id, self.rec.as_deref_mut()) {
            let judgment = Judgment::Flag {
                cmd: c.clone(),
                store,
                flag,
                cursor: input.cursor(),
                result: result.clone(),
                out_flag: out_flag.clone(),
                out_cursor: out.cursor(),
            };
            rec.fill(id, rule, judgment, premises);
        }
        Ok((result, out_flag, out, id))
    }

    #[allow(clippy::type_complexity)]
    fn apply(
        &mut self,
        c: &Cmd,
        store: &Store,
        flag: &Status,
        input: &InputStream,
    ) -> Result<(Rule, Store, Status, InputStream, Vec<NodeId>), Fail> {
        match flag {
            Status::Up => return Ok((Rule::FDiv, Store::new(), Status::Up, input.clone(), vec![])),
            Status::Exc { .. } => return Ok((Rule::FExc, Store::new(), flag.clone(), input.clone(), vec![])),
            Status::Down => {}
        }
        let down = Status::Down;
        let mut premises = Vec::new();
        let (rule, result, out_flag, out) = match c {
            Cmd::Skip => (Rule::FSkip, store.clone(), down, input.clone()),
            Cmd::Alloc(x) => {
                if store.contains(x) {
                    return Err(Stuck::AlreadyAllocated(x.clone()).into());
                }
                (Rule::FAlloc, store.update(x, Val::Null), down, input.clone())
            }
            Cmd::Assign(x, e) => {
                if !store.contains(x) {
                    return Err(Stuck::Unallocated(x.clone()).into());
                }
                let (v, d, i1, p) = self.expr(e, store, &down, input)?;
                premises.extend(p);
                (Rule::FAssign, store.update(x, v), d, i1)
            }
            Cmd::Seq(c1, c2) => {
                let (s1, d1, i1, p1) = self.cmd(c1, store.clone(), down, input.clone())?;
                let (s2, d2, i2, p2) = self.cmd(c2, s1, d1, i1)?;
                premises.extend(p1.into_iter().chain(p2));
                (Rule::FSeq, s2, d2, i2)
            }
            Cmd::If(e, c1, c2) => {
                let (v, d, i1, p1) = self.expr(e, store, &down, input)?;
                let (rule, branch) = if v.is_zero() { (Rule::FIfZ, c2) } else { (Rule::FIf, c1) };
                let (s1, d1, i2, p2) = self.cmd(branch, store.clone(), d, i1)?;
                premises.extend(p1.into_iter().chain(p2));
                (rule, s1, d1, i2)
            }
            Cmd::While(e, body) => {
                let (v, d, i1, p1) = self.expr(e, store, &down, input)?;
                premises.extend(p1);
                if v.is_zero() {
                    (Rule::FWhileZ, store.clone(), d, i1)
                } else {
                    let (s1, d1, i2, p2) = self.cmd(body, store.clone(), d, i1)?;
                    let (s2, d2, i3, p3) = self.cmd(c, s1, d1, i2)?;
                    premises.extend(p2.into_iter().chain(p3));
                    (Rule::FWhile, s2, d2, i3)
                }
            }
            Cmd::Throw(v) => (
                Rule::FThrow,
                Store::new(),
                Status::exc(*v, store.clone()),
                input.clone(),
            ),
            Cmd::Catch(c1, c2) => {
                let (s1, d1, i1, p1) = self.cmd(c1, store.clone(), down, input.clone())?;
                premises.extend(p1);
                match d1 {
                    Status::Exc { store: thrown_at, .. } => {
                        let (s2, d2, i2, p2) = self.cmd(c2, thrown_at, Status::Down, i1)?;
                        premises.extend(p2);
                        (Rule::FCatchSome, s2, d2, i2)
                    }
                    d1 => (Rule::FCatch, s1, d1, i1),
                }
            }
        };
        Ok((rule, result, out_flag, out, premises))
    }
}

/// Evaluate `(e, σ, δ) =GE=> v, δ'`. Expression rules consume no fuel.
pub fn eval_expr_flag(e: &Expr, store: &Store, flag: &Status, input: &InputStream) -> Result<FlagResult, FlagError> {
    let mut ev = Evaluator {
        fuel: 0,
        rec: None,
        memo: None,
    };
    let (v, d, out, _) = ev.expr(e, store, flag, input)?;
    Ok(FlagResult::expr(d, v, out))
}

/// Evaluate `(c, σ, δ) =G=> σ', δ'` inductively within `fuel` command rule
/// applications. `F-Div` and `F-Exc` are free.
pub fn eval_flag(
    c: &Cmd,
    store: &Store,
    flag: &Status,
    input: &InputStream,
    fuel: u64,
) -> Result<FlagResult, FlagError> {
    let mut ev = Evaluator {
        fuel,
        rec: None,
        memo: None,
    };
    let (s, d, out, _) = ev.cmd(c, store.clone(), flag.clone(), input.clone())?;
    Ok(FlagResult::cmd(d, s, out))
}

/// The finite derivation tree of a flag-based judgment. Node ids follow the
/// order in which the evaluator visits premises.
pub fn derive_flag(
    c: &Cmd,
    store: &Store,
    flag: &Status,
    input: &InputStream,
    fuel: u64,
) -> Result<DerivationGraph, FlagError> {
    let mut rec = Recorder::default();
    let mut ev = Evaluator {
        fuel,
        rec: Some(&mut rec),
        memo: None,
    };
    let (_, _, _, root) = ev.cmd(c, store.clone(), flag.clone(), input.clone())?;
    Ok(rec.finish(
        System::Flag,
        input.values().to_vec(),
        BTreeSet::new(),
        root.expect("recording evaluator returns a node"),
    ))
}

/// Coinductive evaluation from `⇓`: a loop judgment repeating one of its
/// ancestors (modulo `abs`) is closed by a back-edge and yields `⇑`.
pub(crate) fn coevaluate_flag(
    c: &Cmd,
    store: &Store,
    input: &InputStream,
    fuel: u64,
    abs: &Abstraction,
) -> Result<(FlagResult, DerivationGraph), FlagError> {
    let mut rec = Recorder::default();
    let mut ev = Evaluator {
        fuel,
        rec: Some(&mut rec),
        memo: Some(LoopMemo::new(abs.clone())),
    };
    let (s, d, out, root) = ev.cmd(c, store.clone(), Status::Down, input.clone())?;
    let graph = rec.finish(
        System::FlagCo,
        input.values().to_vec(),
        abs.vars().clone(),
        root.expect("recording evaluator returns a node"),
    );
    Ok((FlagResult::cmd(d, s, out), graph))
}
