//! Rule-by-rule validation of derivation graphs.
//!
//! Every node must be an instance of its rule with the rule's premises matched
//! by the nodes it points to. For inductive systems the graph must also be
//! acyclic. Premises of relations outside the graph (expression evaluation and
//! the inductive big-step judgments inside the divergence rules) are
//! re-established by running the corresponding evaluator.

use std::sync::Arc;

use crate::big_step::{eval_big, BigResult};
use crate::derivation::{DerivationGraph, Judgment, Node, Rule, System};
use crate::small_step::eval_expr;
use crate::syntax::{Cmd, Expr, Ident, InputStream, Outcome, SemCmd, Status, Store, Val};

use super::{Abstraction, CheckError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Rule applications allowed when re-running an inductive big-step premise.
    pub big_fuel: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { big_fuel: 1_000_000 }
    }
}

pub fn check_derivation_graph(g: &DerivationGraph, system: System) -> Result<(), CheckError> {
    check_derivation_graph_with(g, system, &CheckOptions::default())
}

pub fn check_derivation_graph_with(g: &DerivationGraph, system: System, opts: &CheckOptions) -> Result<(), CheckError> {
    let root = g
        .root_node()
        .ok_or_else(|| CheckError::general(format!("root {} is not a node", g.root)))?;
    if !g.abstraction.is_empty() && !system.is_coinductive() {
        return Err(CheckError::general(
            "abstraction is only meaningful for coinductive systems",
        ));
    }
    if matches!(root.judgment, Judgment::FlagExpr { .. }) {
        return Err(CheckError::general("root must be a command judgment"));
    }
    let cx = Checker {
        g,
        abs: Abstraction::new(g.abstraction.iter().cloned()),
        input: g.input.clone().into(),
        opts,
    };
    for (i, node) in g.nodes.iter().enumerate() {
        if node.id != i {
            return Err(CheckError::at(i, format!("node id {} out of order", node.id)));
        }
        if let Some(&p) = node.premises.iter().find(|&&p| p >= g.nodes.len()) {
            return Err(CheckError::at(i, format!("premise {p} is not a node")));
        }
        cx.check_node(system, node).map_err(|m| CheckError::at(i, m))?;
    }
    if !system.is_coinductive() {
        if let Some(n) = find_cycle(g) {
            return Err(CheckError::at(
                n,
                "cyclic derivation in an inductive system".to_string(),
            ));
        }
    }
    Ok(())
}

/// A node on some cycle, if any.
fn find_cycle(g: &DerivationGraph) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; g.nodes.len()];
    for start in 0..g.nodes.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Active;
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            match g.nodes[n].premises.get(*next) {
                Some(&p) => {
                    *next += 1;
                    match mark[p] {
                        Mark::Active => return Some(p),
                        Mark::New => {
                            mark[p] = Mark::Active;
                            stack.push((p, 0));
                        }
                        Mark::Done => {}
                    }
                }
                None => {
                    mark[n] = Mark::Done;
                    stack.pop();
                }
            }
        }
    }
    None
}

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Checker<'g> {
    g: &'g DerivationGraph,
    abs: Abstraction,
    input: Arc<[Val]>,
    opts: &'g CheckOptions,
}

/// The output side of a flag-based judgment.
#[derive(Clone, Copy)]
struct FlagOut<'a> {
    store: &'a Store,
    flag: &'a Status,
    cursor: usize,
}

impl<'g> Checker<'g> {
    fn stream(&self, cursor: usize) -> Result<InputStream, String> {
        ensure(cursor <= self.input.len(), || {
            format!("cursor {cursor} past the end of the input")
        })?;
        Ok(InputStream::at(self.input.clone(), cursor))
    }

    fn premises(&self, node: &'g Node, n: usize) -> Result<Vec<&'g Judgment>, String> {
        ensure(node.premises.len() == n, || {
            format!("{} takes {n} premise(s), found {}", node.rule, node.premises.len())
        })?;
        Ok(node.premises.iter().map(|&p| &self.g.nodes[p].judgment).collect())
    }

    fn same(&self, a: &Store, b: &Store) -> bool {
        self.abs.same_store(a, b)
    }

    fn same_val(&self, x: &Ident, a: Val, b: Val) -> bool {
        self.abs.project_val(x, a) == self.abs.project_val(x, b)
    }

    fn same_flag(&self, a: &Status, b: &Status) -> bool {
        match (a, b) {
            (Status::Down, Status::Down) | (Status::Up, Status::Up) => true,
            (Status::Exc { value: v, store: s }, Status::Exc { value: w, store: t }) => v == w && self.same(s, t),
            _ => false,
        }
    }

    fn same_outcome(&self, a: &Outcome, b: &Outcome) -> bool {
        match (a, b) {
            (Outcome::Div, Outcome::Div) => true,
            (Outcome::Conv(s), Outcome::Conv(t)) => self.same(s, t),
            _ => false,
        }
    }

    fn same_semcmd(&self, a: &SemCmd, b: &SemCmd) -> bool {
        match (a, b) {
            (SemCmd::Assign2(x, v), SemCmd::Assign2(y, w)) => x == y && self.same_val(x, *v, *w),
            (SemCmd::Seq2(o, c), SemCmd::Seq2(p, d)) => c == d && self.same_outcome(o, p),
            (SemCmd::While3(o, e, c), SemCmd::While3(p, f, d)) => e == f && c == d && self.same_outcome(o, p),
            _ => a == b,
        }
    }

    fn check_node(&self, system: System, node: &'g Node) -> Check {
        let relation = node.judgment.relation();
        let allowed: &[&str] = match system {
            System::Big => &["B"],
            System::DivPred => &["inf"],
            System::Pretty | System::PrettyCo => &["P"],
            System::Flag | System::FlagCo => &["G", "GE"],
        };
        ensure(allowed.contains(&relation), || {
            format!("relation {relation} does not belong to system {}", system.name())
        })?;
        match &node.judgment {
            Judgment::Big { .. } => self.check_big(node),
            Judgment::Div { cmd, .. } => {
                self.abs.check_cmd(cmd).map_err(|e| e.to_string())?;
                self.check_div(node)
            }
            Judgment::Pretty { cmd, .. } => {
                self.abs.check_semcmd(cmd).map_err(|e| e.to_string())?;
                self.check_pretty(node)
            }
            Judgment::FlagExpr { .. } => self.check_flag_expr(node),
            Judgment::Flag { cmd, .. } => {
                self.abs.check_cmd(cmd).map_err(|e| e.to_string())?;
                self.check_flag(node)
            }
        }
    }

    fn wrong_rule(node: &Node) -> String {
        format!("rule {} does not conclude {}", node.rule, node.judgment.relation())
    }

    // ----- inductive big-step -----

    fn check_big(&self, node: &'g Node) -> Check {
        let Judgment::Big {
            cmd,
            store,
            cursor,
            result,
            out_cursor,
        } = &node.judgment
        else {
            unreachable!()
        };
        let input = self.stream(*cursor)?;
        let big = |j: &Judgment| -> Result<(Cmd, Store, usize, Store, usize), String> {
            match j {
                Judgment::Big {
                    cmd,
                    store,
                    cursor,
                    result,
                    out_cursor,
                } => Ok((cmd.clone(), store.clone(), *cursor, result.clone(), *out_cursor)),
                other => Err(format!("premise {other} is not a big-step judgment")),
            }
        };
        let concl = |s: &Store, k: usize| {
            ensure(s == result && k == *out_cursor, || {
                format!("conclusion should be {s} at cursor {k}")
            })
        };
        match (node.rule, cmd) {
            (Rule::BSkip, Cmd::Skip) => {
                self.premises(node, 0)?;
                concl(store, *cursor)
            }
            (Rule::BAlloc, Cmd::Alloc(x)) => {
                self.premises(node, 0)?;
                ensure(!store.contains(x), || format!("`{x}` already allocated"))?;
                concl(&store.update(x, Val::Null), *cursor)
            }
            (Rule::BAssign, Cmd::Assign(x, e)) => {
                self.premises(node, 0)?;
                ensure(store.contains(x), || format!("`{x}` not allocated"))?;
                let (v, out) = eval_expr(e, store, &input).map_err(|s| s.to_string())?;
                concl(&store.update(x, v), out.cursor())
            }
            (Rule::BSeq, Cmd::Seq(c1, c2)) => {
                let ps = self.premises(node, 2)?;
                let (d1, s1, k1, r1, o1) = big(ps[0])?;
                let (d2, s2, k2, r2, o2) = big(ps[1])?;
                ensure(d1 == **c1 && s1 == *store && k1 == *cursor, || {
                    "first premise mismatch".into()
                })?;
                ensure(d2 == **c2 && s2 == r1 && k2 == o1, || "second premise mismatch".into())?;
                concl(&r2, o2)
            }
            (Rule::BIf | Rule::BIfZ, Cmd::If(e, c1, c2)) => {
                let ps = self.premises(node, 1)?;
                let (v, i1) = eval_expr(e, store, &input).map_err(|s| s.to_string())?;
                let branch = if node.rule == Rule::BIf { c1 } else { c2 };
                ensure(v.is_zero() == (node.rule == Rule::BIfZ), || format!("guard is {v}"))?;
                let (d, s, k, r, o) = big(ps[0])?;
                ensure(d == **branch && s == *store && k == i1.cursor(), || {
                    "premise mismatch".into()
                })?;
                concl(&r, o)
            }
            (Rule::BWhileZ, Cmd::While(e, _)) => {
                self.premises(node, 0)?;
                let (v, i1) = eval_expr(e, store, &input).map_err(|s| s.to_string())?;
                ensure(v.is_zero(), || format!("guard is {v}"))?;
                concl(store, i1.cursor())
            }
            (Rule::BWhile, Cmd::While(e, body)) => {
                let ps = self.premises(node, 2)?;
                let (v, i1) = eval_expr(e, store, &input).map_err(|s| s.to_string())?;
                ensure(!v.is_zero(), || format!("guard is {v}"))?;
                let (d1, s1, k1, r1, o1) = big(ps[0])?;
                let (d2, s2, k2, r2, o2) = big(ps[1])?;
                ensure(d1 == **body && s1 == *store && k1 == i1.cursor(), || {
                    "body premise mismatch".into()
                })?;
                ensure(d2 == *cmd && s2 == r1 && k2 == o1, || "loop premise mismatch".into())?;
                concl(&r2, o2)
            }
            _ => Err(Self::wrong_rule(node)),
        }
    }

    // ----- divergence predicate -----

    fn expect_div(&self, j: &Judgment, cmd: &Cmd, store: &Store, cursor: usize) -> Check {
        match j {
            Judgment::Div {
                cmd: c,
                store: s,
                cursor: k,
            } => ensure(c == cmd && self.same(s, store) && *k == cursor, || {
                format!("premise is {j}, expected ({cmd}, {store}) =inf=> at cursor {cursor}")
            }),
            other => Err(format!("premise {other} is not a divergence judgment")),
        }
    }

    fn run_big(&self, c: &Cmd, store: &Store, input: &InputStream) -> Result<(Store, InputStream), String> {
        match eval_big(c, store, input, self.opts.big_fuel) {
            BigResult::Done(s, i) => Ok((s, i)),
            BigResult::Stuck(s) => Err(format!("({c}, {store}) =B=> has no derivation: {s}")),
            BigResult::OutOfFuel => Err(format!(
                "({c}, {store}) =B=> not derivable within {} rule applications",
                self.opts.big_fuel
            )),
        }
    }

    fn check_div(&self, node: &'g Node) -> Check {
        let Judgment::Div { cmd, store, cursor } = &node.judgment else {
            unreachable!()
        };
        let input = self.stream(*cursor)?;
        let ps = self.premises(node, 1)?;
        let guard = |e: &Expr, nonzero: bool| -> Result<InputStream, String> {
            let (v, i1) = eval_expr(e, store, &input).map_err(|s| s.to_string())?;
            ensure(v.is_zero() != nonzero, || format!("guard is {v}"))?;
            Ok(i1)
        };
        match (node.rule, cmd) {
            (Rule::DSeq1, Cmd::Seq(c1, _)) => self.expect_div(ps[0], c1, store, *cursor),
            (Rule::DSeq2, Cmd::Seq(c1, c2)) => {
                let (s1, i1) = self.run_big(c1, store, &input)?;
                self.expect_div(ps[0], c2, &s1, i1.cursor())
            }
            (Rule::DIf, Cmd::If(e, c1, _)) => {
                let i1 = guard(e, true)?;
                self.expect_div(ps[0], c1, store, i1.cursor())
            }
            (Rule::DIfZ, Cmd::If(e, _, c2)) => {
                let i1 = guard(e, false)?;
                self.expect_div(ps[0], c2, store, i1.cursor())
            }
            (Rule::DWhileBody, Cmd::While(e, body)) => {
                let i1 = guard(e, true)?;
                self.expect_div(ps[0], body, store, i1.cursor())
            }
            (Rule::DWhile, Cmd::While(e, body)) => {
                let i1 = guard(e, true)?;
                let (s1, i2) = self.run_big(body, store, &i1)?;
                self.expect_div(ps[0], cmd, &s1, i2.cursor())
            }
            _ => Err(Self::wrong_rule(node)),
        }
    }

    // ----- pretty-big-step -----

    /// Checks a premise's subject and returns its outcome.
    fn expect_pretty(
        &self,
        j: &'g Judgment,
        cmd: &SemCmd,
        store: &Store,
        cursor: usize,
    ) -> Result<(&'g Outcome, usize), String> {
        let Judgment::Pretty {
            cmd: c,
            store: s,
            cursor: k,
            outcome,
            out_cursor,
        } = j
        else {
            return Err(format!("premise {j} is not a pretty-big-step judgment"));
        };
        let aborting = matches!(cmd, SemCmd::Seq2(Outcome::Div, _) | SemCmd::While3(Outcome::Div, ..));
        ensure(
            self.same_semcmd(c, cmd) && self.same(s, store) && (aborting || *k == cursor),
            || format!("premise is {j}, expected subject ({cmd}, {store}) at cursor {cursor}"),
        )?;
        Ok((outcome, *out_cursor))
    }

    fn check_pretty(&self, node: &'g Node) -> Check {
        let Judgment::Pretty {
            cmd,
            store,
            cursor,
            outcome,
            out_cursor,
        } = &node.judgment
        else {
            unreachable!()
        };
        let concl = |o: &Outcome, k: usize| {
            let cursor_ok = matches!(o, Outcome::Div) || k == *out_cursor;
            ensure(self.same_outcome(o, outcome) && cursor_ok, || {
                format!("conclusion should be {o} at cursor {k}")
            })
        };
        let input = self.stream(*cursor)?;
        let expr = |e: &Expr| eval_expr(e, store, &input).map_err(|s| s.to_string());
        let plain = |c: &Cmd| SemCmd::Plain(c.clone());
        match (node.rule, cmd) {
            (Rule::PSkip, SemCmd::Plain(Cmd::Skip)) => {
                self.premises(node, 0)?;
                concl(&Outcome::Conv(store.clone()), *cursor)
            }
            (Rule::PAlloc, SemCmd::Plain(Cmd::Alloc(x))) => {
                self.premises(node, 0)?;
                ensure(!store.contains(x), || format!("`{x}` already allocated"))?;
                concl(&Outcome::Conv(store.update(x, Val::Null)), *cursor)
            }
            (Rule::PAssign1, SemCmd::Plain(Cmd::Assign(x, e))) => {
                let ps = self.premises(node, 1)?;
                let (v, i1) = expr(e)?;
                let (o, k) = self.expect_pretty(ps[0], &SemCmd::Assign2(x.clone(), v), store, i1.cursor())?;
                concl(o, k)
            }
            (Rule::PAssign2, SemCmd::Assign2(x, v)) => {
                self.premises(node, 0)?;
                ensure(store.contains(x), || format!("`{x}` not allocated"))?;
                concl(&Outcome::Conv(store.update(x, *v)), *cursor)
            }
            (Rule::PSeq1, SemCmd::Plain(Cmd::Seq(c1, c2))) => {
                let ps = self.premises(node, 2)?;
                let (o1, k1) = self.expect_pretty(ps[0], &plain(c1), store, *cursor)?;
                let next = SemCmd::Seq2(o1.clone(), (**c2).clone());
                let (o, k) = self.expect_pretty(ps[1], &next, store, k1)?;
                concl(o, k)
            }
            (Rule::PSeq2, SemCmd::Seq2(Outcome::Conv(s1), c2)) => {
                let ps = self.premises(node, 1)?;
                let (o, k) = self.expect_pretty(ps[0], &plain(c2), s1, *cursor)?;
                concl(o, k)
            }
            (Rule::PSeqAbort, SemCmd::Seq2(Outcome::Div, _))
            | (Rule::PWhileAbort, SemCmd::While3(Outcome::Div, ..)) => {
                self.premises(node, 0)?;
                concl(&Outcome::Div, *cursor)
            }
            (Rule::PIf, SemCmd::Plain(Cmd::If(e, c1, c2))) => {
                let ps = self.premises(node, 1)?;
                let (v, i1) = expr(e)?;
                let next = SemCmd::If2(v, (**c1).clone(), (**c2).clone());
                let (o, k) = self.expect_pretty(ps[0], &next, store, i1.cursor())?;
                concl(o, k)
            }
            (Rule::PIf2, SemCmd::If2(v, c1, _)) | (Rule::PIfZ2, SemCmd::If2(v, _, c1)) => {
                ensure(v.is_zero() == (node.rule == Rule::PIfZ2), || {
                    format!("guard value is {v}")
                })?;
                let ps = self.premises(node, 1)?;
                let (o, k) = self.expect_pretty(ps[0], &plain(c1), store, *cursor)?;
                concl(o, k)
            }
            (Rule::PWhile, SemCmd::Plain(Cmd::While(e, body))) => {
                let ps = self.premises(node, 1)?;
                let (v, i1) = expr(e)?;
                let next = SemCmd::While2(v, e.clone(), (**body).clone());
                let (o, k) = self.expect_pretty(ps[0], &next, store, i1.cursor())?;
                concl(o, k)
            }
            (Rule::PWhile2, SemCmd::While2(v, e, body)) => {
                ensure(!v.is_zero(), || format!("guard value is {v}"))?;
                let ps = self.premises(node, 2)?;
                let (o1, k1) = self.expect_pretty(ps[0], &plain(body), store, *cursor)?;
                let next = SemCmd::While3(o1.clone(), e.clone(), body.clone());
                let (o, k) = self.expect_pretty(ps[1], &next, store, k1)?;
                concl(o, k)
            }
            (Rule::PWhileZ2, SemCmd::While2(v, _, _)) => {
                ensure(v.is_zero(), || format!("guard value is {v}"))?;
                self.premises(node, 0)?;
                concl(&Outcome::Conv(store.clone()), *cursor)
            }
            (Rule::PWhile3, SemCmd::While3(Outcome::Conv(s1), e, body)) => {
                let ps = self.premises(node, 1)?;
                let w = Cmd::While(e.clone(), Box::new(body.clone()));
                let (o, k) = self.expect_pretty(ps[0], &plain(&w), s1, *cursor)?;
                concl(o, k)
            }
            _ => Err(Self::wrong_rule(node)),
        }
    }

    // ----- flag-based -----

    /// Whether a premise with input `(store, flag, cursor)` accepts the given
    /// input. Under `⇑` and `exc` only the propagation rules apply, which accept
    /// any store; under `⇑` the stream position is immaterial as well.
    fn flag_input_ok(&self, got: (&Store, &Status, usize), want: (&Store, &Status, usize)) -> bool {
        self.same_flag(got.1, want.1)
            && (!want.1.is_down() || self.same(got.0, want.0))
            && (matches!(want.1, Status::Up) || got.2 == want.2)
    }

    fn same_flag_out(&self, a: FlagOut, b: FlagOut) -> bool {
        self.same_flag(a.flag, b.flag)
            && match a.flag {
                Status::Down => self.same(a.store, b.store) && a.cursor == b.cursor,
                Status::Exc { .. } => a.cursor == b.cursor,
                Status::Up => true,
            }
    }

    fn expect_g(&self, j: &'g Judgment, cmd: &Cmd, input: (&Store, &Status, usize)) -> Result<FlagOut<'g>, String> {
        let Judgment::Flag {
            cmd: c,
            store,
            flag,
            cursor,
            result,
            out_flag,
            out_cursor,
        } = j
        else {
            return Err(format!("premise {j} is not a command judgment"));
        };
        ensure(c == cmd && self.flag_input_ok((store, flag, *cursor), input), || {
            format!(
                "premise is {j}, expected subject ({cmd}, {}, {}) at cursor {}",
                input.0, input.1, input.2
            )
        })?;
        Ok(FlagOut {
            store: result,
            flag: out_flag,
            cursor: *out_cursor,
        })
    }

    fn expect_ge(
        &self,
        j: &'g Judgment,
        expr: &Expr,
        input: (&Store, &Status, usize),
    ) -> Result<(Val, &'g Status, usize), String> {
        let Judgment::FlagExpr {
            expr: e,
            store,
            flag,
            cursor,
            value,
            out_flag,
            out_cursor,
        } = j
        else {
            return Err(format!("premise {j} is not an expression judgment"));
        };
        ensure(e == expr && self.flag_input_ok((store, flag, *cursor), input), || {
            format!(
                "premise is {j}, expected subject ({expr}, {}, {}) at cursor {}",
                input.0, input.1, input.2
            )
        })?;
        Ok((*value, out_flag, *out_cursor))
    }

    fn check_flag_expr(&self, node: &'g Node) -> Check {
        let Judgment::FlagExpr {
            expr,
            store,
            flag,
            cursor,
            value,
            out_flag,
            out_cursor,
        } = &node.judgment
        else {
            unreachable!()
        };
        let concl = |v: Val, d: &Status, k: usize| {
            let ok = self.same_flag(d, out_flag)
                && match d {
                    Status::Down => v == *value && k == *out_cursor,
                    Status::Exc { .. } => k == *out_cursor,
                    Status::Up => true,
                };
            ensure(ok, || format!("conclusion should be {v}, {d} at cursor {k}"))
        };
        match (node.rule, flag) {
            (Rule::FEDiv, Status::Up) => {
                self.premises(node, 0)?;
                concl(Val::Null, &Status::Up, *cursor)
            }
            (Rule::FEExc, Status::Exc { .. }) => {
                self.premises(node, 0)?;
                concl(Val::Null, flag, *cursor)
            }
            (_, Status::Down) => match (node.rule, expr) {
                (Rule::FEVal, Expr::Lit(v)) => {
                    self.premises(node, 0)?;
                    concl(*v, flag, *cursor)
                }
                (Rule::FEVar, Expr::Var(x)) => {
                    self.premises(node, 0)?;
                    let v = store.get(x).ok_or_else(|| format!("`{x}` not in the store"))?;
                    concl(v, flag, *cursor)
                }
                (Rule::FEInput, Expr::Input) => {
                    self.premises(node, 0)?;
                    let (v, rest) = self.stream(*cursor)?.pop().ok_or("input exhausted")?;
                    concl(v, flag, rest.cursor())
                }
                (Rule::FEBop, Expr::Bop(op, l, r)) => {
                    let ps = self.premises(node, 2)?;
                    let (n1, d1, k1) = self.expect_ge(ps[0], l, (store, flag, *cursor))?;
                    let (n2, d2, k2) = self.expect_ge(ps[1], r, (store, d1, k1))?;
                    let v = match (d2, n1, n2) {
                        (Status::Down, Val::Nat(a), Val::Nat(b)) => Val::Nat(op.apply(a, b)),
                        (Status::Down, _, _) => return Err(format!("null operand to `{}`", op.symbol())),
                        _ => Val::Null,
                    };
                    concl(v, d2, k2)
                }
                _ => Err(Self::wrong_rule(node)),
            },
            _ => Err(format!("rule {} does not apply under flag {flag}", node.rule)),
        }
    }

    fn check_flag(&self, node: &'g Node) -> Check {
        let Judgment::Flag {
            cmd,
            store,
            flag,
            cursor,
            result,
            out_flag,
            out_cursor,
        } = &node.judgment
        else {
            unreachable!()
        };
        let me = FlagOut {
            store: result,
            flag: out_flag,
            cursor: *out_cursor,
        };
        let concl = |o: FlagOut| {
            ensure(self.same_flag_out(o, me), || {
                format!("conclusion should be {}, {} at cursor {}", o.store, o.flag, o.cursor)
            })
        };
        let down = &Status::Down;
        match (node.rule, flag) {
            (Rule::FDiv, Status::Up) => {
                self.premises(node, 0)?;
                concl(FlagOut {
                    store: result,
                    flag,
                    cursor: *cursor,
                })
            }
            (Rule::FExc, Status::Exc { .. }) => {
                self.premises(node, 0)?;
                concl(FlagOut {
                    store: result,
                    flag,
                    cursor: *cursor,
                })
            }
            (_, Status::Down) => match (node.rule, cmd) {
                (Rule::FSkip, Cmd::Skip) => {
                    self.premises(node, 0)?;
                    concl(FlagOut {
                        store,
                        flag: down,
                        cursor: *cursor,
                    })
                }
                (Rule::FAlloc, Cmd::Alloc(x)) => {
                    self.premises(node, 0)?;
                    ensure(!store.contains(x), || format!("`{x}` already allocated"))?;
                    concl(FlagOut {
                        store: &store.update(x, Val::Null),
                        flag: down,
                        cursor: *cursor,
                    })
                }
                (Rule::FAssign, Cmd::Assign(x, e)) => {
                    ensure(store.contains(x), || format!("`{x}` not allocated"))?;
                    let ps = self.premises(node, 1)?;
                    let (v, d, k) = self.expect_ge(ps[0], e, (store, down, *cursor))?;
                    concl(FlagOut {
                        store: &store.update(x, v),
                        flag: d,
                        cursor: k,
                    })
                }
                (Rule::FSeq, Cmd::Seq(c1, c2)) => {
                    let ps = self.premises(node, 2)?;
                    let o1 = self.expect_g(ps[0], c1, (store, down, *cursor))?;
                    let o2 = self.expect_g(ps[1], c2, (o1.store, o1.flag, o1.cursor))?;
                    concl(o2)
                }
                (Rule::FIf | Rule::FIfZ, Cmd::If(e, c1, c2)) => {
                    let ps = self.premises(node, 2)?;
                    let (v, d, k) = self.expect_ge(ps[0], e, (store, down, *cursor))?;
                    let zero = node.rule == Rule::FIfZ;
                    ensure(v.is_zero() == zero, || format!("guard is {v}"))?;
                    let branch = if zero { c2 } else { c1 };
                    let o = self.expect_g(ps[1], branch, (store, d, k))?;
                    concl(o)
                }
                (Rule::FWhileZ, Cmd::While(e, _)) => {
                    let ps = self.premises(node, 1)?;
                    let (v, d, k) = self.expect_ge(ps[0], e, (store, down, *cursor))?;
                    ensure(v.is_zero(), || format!("guard is {v}"))?;
                    concl(FlagOut {
                        store,
                        flag: d,
                        cursor: k,
                    })
                }
                (Rule::FWhile, Cmd::While(e, body)) => {
                    let ps = self.premises(node, 3)?;
                    let (v, d, k) = self.expect_ge(ps[0], e, (store, down, *cursor))?;
                    ensure(!v.is_zero(), || format!("guard is {v}"))?;
                    let o1 = self.expect_g(ps[1], body, (store, d, k))?;
                    let o2 = self.expect_g(ps[2], cmd, (o1.store, o1.flag, o1.cursor))?;
                    concl(o2)
                }
                (Rule::FThrow, Cmd::Throw(v)) => {
                    self.premises(node, 0)?;
                    concl(FlagOut {
                        store: result,
                        flag: &Status::exc(*v, store.clone()),
                        cursor: *cursor,
                    })
                }
                (Rule::FCatch, Cmd::Catch(c1, _)) => {
                    let ps = self.premises(node, 1)?;
                    let o = self.expect_g(ps[0], c1, (store, down, *cursor))?;
                    ensure(!matches!(o.flag, Status::Exc { .. }), || {
                        "body raised an exception".into()
                    })?;
                    concl(o)
                }
                (Rule::FCatchSome, Cmd::Catch(c1, c2)) => {
                    let ps = self.premises(node, 2)?;
                    let o1 = self.expect_g(ps[0], c1, (store, down, *cursor))?;
                    let Status::Exc { store: thrown_at, .. } = o1.flag else {
                        return Err("body did not raise an exception".into());
                    };
                    let o2 = self.expect_g(ps[1], c2, (thrown_at, down, o1.cursor))?;
                    concl(o2)
                }
                _ => Err(Self::wrong_rule(node)),
            },
            _ => Err(format!("rule {} does not apply under flag {flag}", node.rule)),
        }
    }
}
