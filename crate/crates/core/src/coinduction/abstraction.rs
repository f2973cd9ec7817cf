use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::derivation::NodeId;
use crate::syntax::{Cmd, Expr, Ident, SemCmd, Store, Val};

use super::CoinductionError;

/// A set of variables whose numeric contents are forgotten when configurations
/// or judgments are compared. Whether a value is `null` is still observed.
///
/// Sound when no projected variable can influence control flow: none occurs in
/// a guard, and none flows into an assignment to an unprojected variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Abstraction(BTreeSet<Ident>);

impl Abstraction {
    pub fn none() -> Self {
        Abstraction::default()
    }

    pub fn new<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Ident>,
    {
        Abstraction(vars.into_iter().map(Into::into).collect())
    }

    pub fn vars(&self) -> &BTreeSet<Ident> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &Ident) -> bool {
        self.0.contains(x)
    }

    pub fn project_val(&self, x: &Ident, v: Val) -> Val {
        match v {
            Val::Nat(_) if self.contains(x) => Val::Nat(0),
            v => v,
        }
    }

    pub fn project(&self, store: &Store) -> Store {
        if self.is_empty() {
            return store.clone();
        }
        store.iter().map(|(x, v)| (x.clone(), self.project_val(x, v))).collect()
    }

    pub fn same_store(&self, a: &Store, b: &Store) -> bool {
        if self.is_empty() {
            return a == b;
        }
        a.len() == b.len()
            && a.iter()
                .zip(b.iter())
                .all(|((x, v), (y, w))| x == y && self.project_val(x, v) == self.project_val(y, w))
    }

    /// The syntactic soundness condition, checked over every subterm of `c`.
    pub fn check_cmd(&self, c: &Cmd) -> Result<(), CoinductionError> {
        if self.is_empty() {
            return Ok(());
        }
        match c {
            Cmd::Skip | Cmd::Alloc(_) | Cmd::Throw(_) => Ok(()),
            Cmd::Assign(x, e) => self.check_assign(x, e),
            Cmd::Seq(a, b) | Cmd::Catch(a, b) => {
                self.check_cmd(a)?;
                self.check_cmd(b)
            }
            Cmd::If(e, a, b) => {
                self.check_guard(e)?;
                self.check_cmd(a)?;
                self.check_cmd(b)
            }
            Cmd::While(e, body) => {
                self.check_guard(e)?;
                self.check_cmd(body)
            }
        }
    }

    pub fn check_semcmd(&self, c: &SemCmd) -> Result<(), CoinductionError> {
        match c {
            SemCmd::Plain(c) | SemCmd::Seq2(_, c) => self.check_cmd(c),
            SemCmd::Assign2(..) => Ok(()),
            SemCmd::If2(_, a, b) => {
                self.check_cmd(a)?;
                self.check_cmd(b)
            }
            SemCmd::While2(_, e, body) | SemCmd::While3(_, e, body) => {
                self.check_guard(e)?;
                self.check_cmd(body)
            }
        }
    }

    fn projected_in(&self, e: &Expr) -> Option<Ident> {
        let mut vars = BTreeSet::new();
        e.vars(&mut vars);
        vars.into_iter().find(|x| self.contains(x))
    }

    fn check_guard(&self, e: &Expr) -> Result<(), CoinductionError> {
        match self.projected_in(e) {
            Some(var) => Err(CoinductionError::AbstractionUnsound {
                var,
                context: format!("guard `{e}`"),
            }),
            None => Ok(()),
        }
    }

    fn check_assign(&self, x: &Ident, e: &Expr) -> Result<(), CoinductionError> {
        if self.contains(x) {
            return Ok(());
        }
        match self.projected_in(e) {
            Some(var) => Err(CoinductionError::AbstractionUnsound {
                var,
                context: format!("assignment to `{x}`"),
            }),
            None => Ok(()),
        }
    }
}

pub(crate) type LoopKey = (Cmd, Store, usize);

/// Loop judgments currently under evaluation in a coinductive evaluator,
/// keyed modulo the abstraction.
#[derive(Debug)]
pub(crate) struct LoopMemo {
    abs: Abstraction,
    open: HashMap<LoopKey, NodeId>,
}

impl LoopMemo {
    pub fn new(abs: Abstraction) -> Self {
        LoopMemo {
            abs,
            open: HashMap::new(),
        }
    }

    pub fn key(&self, c: &Cmd, store: &Store, cursor: usize) -> LoopKey {
        (c.clone(), self.abs.project(store), cursor)
    }

    pub fn open(&self, key: &LoopKey) -> Option<NodeId> {
        self.open.get(key).copied()
    }

    pub fn enter(&mut self, key: LoopKey, id: NodeId) {
        self.open.insert(key, id);
    }

    pub fn leave(&mut self, key: &LoopKey) {
        self.open.remove(key);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::BinOp;

    fn inc(x: &str) -> Cmd {
        Cmd::assign(x, Expr::bop(BinOp::Add, Expr::var(x), Expr::nat(1)))
    }

    #[test]
    fn projection_keeps_null() {
        let abs = Abstraction::new(["x"]);
        let a: Store = [("x", Val::Nat(3)), ("y", Val::Nat(1))].into_iter().collect();
        let b: Store = [("x", Val::Nat(9)), ("y", Val::Nat(1))].into_iter().collect();
        let c: Store = [("x", Val::Null), ("y", Val::Nat(1))].into_iter().collect();
        assert!(abs.same_store(&a, &b));
        assert!(!abs.same_store(&a, &c));
        assert_eq!(abs.project(&a), abs.project(&b));
    }

    #[test]
    fn soundness_check() {
        let abs = Abstraction::new(["x"]);
        assert!(abs.check_cmd(&Cmd::while_(Expr::nat(1), inc("x"))).is_ok());
        assert!(matches!(
            abs.check_cmd(&Cmd::while_(Expr::var("x"), inc("x"))),
            Err(CoinductionError::AbstractionUnsound { .. })
        ));
        let leak = Cmd::while_(Expr::nat(1), Cmd::assign("y", Expr::var("x")));
        assert!(abs.check_cmd(&leak).is_err());
    }
}
