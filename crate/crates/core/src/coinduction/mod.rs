//! Finite certificates of divergence: lassos for the small-step relation and
//! regular derivation graphs for the coinductive big-step systems.

mod abstraction;
mod check;
mod div_pred;
mod lasso;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derivation::{DerivationGraph, NodeId, System};
use crate::flag_based::{coevaluate_flag, FlagError};
use crate::pretty_big::{coevaluate_pretty, PrettyResult};
use crate::small_step::SmallConfig;
use crate::syntax::{Cmd, InputStream, Outcome, Status, Store};

pub use abstraction::Abstraction;
pub(crate) use abstraction::LoopMemo;
pub use check::{check_derivation_graph, check_derivation_graph_with, CheckOptions};
pub use lasso::{check_lasso, detect_lasso, Lasso};

pub(crate) use div_pred::{coevaluate_div, DivAttempt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoinductionError {
    #[error("abstraction is unsound: `{var}` occurs in {context}")]
    AbstractionUnsound { var: crate::syntax::Ident, context: String },
    #[error("no divergence certificate found: {0}")]
    NotFound(String),
    #[error("system {0} has no coinductive derivations")]
    NotCoinductive(&'static str),
    #[error("lasso found but no {system} derivation was built: {reason}")]
    Incomplete { system: &'static str, reason: String },
}

/// Why a certificate was rejected, naming the first offending node or
/// configuration when there is one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{message}", at.map(|n| format!("at {n}: ")).unwrap_or_default())]
pub struct CheckError {
    pub at: Option<NodeId>,
    pub message: String,
}

impl CheckError {
    pub fn at(index: usize, message: String) -> Self {
        CheckError {
            at: Some(index),
            message,
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        CheckError {
            at: None,
            message: message.into(),
        }
    }
}

/// A divergence certificate as attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Certificate {
    Lasso(Lasso),
    Graph(DerivationGraph),
}

impl Certificate {
    pub fn check(&self) -> Result<(), CheckError> {
        match self {
            Certificate::Lasso(l) => check_lasso(l),
            Certificate::Graph(g) => check_derivation_graph(g, g.system),
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Lasso(l) => write!(f, "lasso, cycle={}", l.cycle.len())?,
            Certificate::Graph(g) => write!(
                f,
                "graph, system={}, nodes={}, back-edges={}",
                g.system.name(),
                g.nodes.len(),
                g.back_edges()
            )?,
        }
        Ok(())
    }
}

/// Rule applications the coinductive evaluators may spend per small-step
/// transition the lasso search was allowed.
const CO_FUEL_FACTOR: u64 = 16;

/// Searches for a lasso, then builds a derivation of divergence in `system`
/// whose loops are closed by back-edges. The graph is checked before it is
/// returned.
pub fn prove_divergence(
    c: &Cmd,
    store: &Store,
    input: &InputStream,
    system: System,
    fuel: u64,
    abs: &Abstraction,
) -> Result<DerivationGraph, CoinductionError> {
    if !system.is_coinductive() {
        return Err(CoinductionError::NotCoinductive(system.name()));
    }
    let cfg = SmallConfig::new(c.clone(), store.clone(), input.clone());
    detect_lasso(&cfg, fuel, abs)?;
    let co_fuel = fuel.saturating_mul(CO_FUEL_FACTOR).saturating_add(1024);
    let incomplete = |reason: String| CoinductionError::Incomplete {
        system: system.name(),
        reason,
    };
    let graph = match system {
        System::DivPred => match coevaluate_div(c, store, input, co_fuel, abs) {
            DivAttempt::Diverges(g) => g,
            DivAttempt::Converges => return Err(incomplete("program converges".into())),
            DivAttempt::Stuck(s) => return Err(incomplete(format!("stuck: {s}"))),
            DivAttempt::OutOfFuel => return Err(incomplete("out of fuel".into())),
        },
        System::PrettyCo => match coevaluate_pretty(c, store, input, co_fuel, abs) {
            Ok((Outcome::Div, g)) => g,
            Ok((Outcome::Conv(_), _)) => return Err(incomplete("program converges".into())),
            Err(PrettyResult::Stuck(s)) => return Err(incomplete(format!("stuck: {s}"))),
            Err(_) => return Err(incomplete("out of fuel".into())),
        },
        System::FlagCo => match coevaluate_flag(c, store, input, co_fuel, abs) {
            Ok((r, g)) if r.status == Status::Up => g,
            Ok((r, _)) => return Err(incomplete(format!("program ends with {}", r.status))),
            Err(FlagError::Stuck(s)) => return Err(incomplete(format!("stuck: {s}"))),
            Err(FlagError::OutOfFuel) => return Err(incomplete("out of fuel".into())),
        },
        _ => unreachable!("inductive systems rejected above"),
    };
    check_derivation_graph(&graph, system).map_err(|e| incomplete(format!("rejected by the checker: {e}")))?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{Judgment, Node, Rule};
    use crate::syntax::{fac_program, while_one_skip, Expr};

    fn e() -> InputStream {
        InputStream::empty()
    }

    #[test]
    fn while_one_skip_in_every_system() {
        for system in System::COINDUCTIVE {
            let g = prove_divergence(
                &while_one_skip(),
                &Store::new(),
                &e(),
                system,
                100,
                &Abstraction::none(),
            )
            .unwrap();
            assert!(g.back_edges() >= 1, "{system:?}");
            check_derivation_graph(&g, system).unwrap();
        }
    }

    #[test]
    fn converging_programs_have_no_certificate() {
        for system in System::COINDUCTIVE {
            assert!(matches!(
                prove_divergence(&fac_program(2), &Store::new(), &e(), system, 1000, &Abstraction::none()),
                Err(CoinductionError::NotFound(_))
            ));
        }
    }

    #[test]
    fn flag_seq_after_divergence_uses_f_div() {
        let c = Cmd::seq_all([
            while_one_skip(),
            Cmd::alloc("x"),
            Cmd::assign("x", Expr::add(Expr::var("x"), Expr::nat(0))),
        ]);
        let g = prove_divergence(&c, &Store::new(), &e(), System::FlagCo, 100, &Abstraction::none()).unwrap();
        let root = g.root_node().unwrap();
        assert_eq!(root.rule, Rule::FSeq);
        let second = &g.nodes[root.premises[1]];
        assert_eq!(second.rule, Rule::FDiv);
    }

    #[test]
    fn hand_built_div_graph() {
        let w = while_one_skip();
        let g = DerivationGraph {
            system: System::DivPred,
            input: vec![],
            abstraction: Default::default(),
            root: 0,
            nodes: vec![Node {
                id: 0,
                rule: Rule::DWhile,
                judgment: Judgment::Div {
                    cmd: w.clone(),
                    store: Store::new(),
                    cursor: 0,
                },
                premises: vec![0],
            }],
        };
        check_derivation_graph(&g, System::DivPred).unwrap();
        let mut bad = g.clone();
        bad.nodes[0].rule = Rule::DWhileBody;
        assert!(check_derivation_graph(&bad, System::DivPred).is_err());
        assert!(check_derivation_graph(&g, System::Big).is_err());
    }

    #[test]
    fn certificate_display() {
        let l = detect_lasso(&SmallConfig::start(while_one_skip(), vec![]), 10, &Abstraction::none()).unwrap();
        assert_eq!(Certificate::Lasso(l).to_string(), "lasso, cycle=2");
    }
}
