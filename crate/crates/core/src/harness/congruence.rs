//! The sequencing congruence for divergence: if `c1; c2` diverges and `c1`
//! steps to `c1'`, then `c1'; c2` diverges. It holds for deterministic runs
//! and fails once different input streams may drive `c1` differently.

use serde::Serialize;

use crate::coinduction::{detect_lasso, Abstraction};
use crate::small_step::{run_small, step, SmallConfig};
use crate::syntax::{Cmd, InputStream, Store, Val, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CongruenceAnomaly {
    /// Stream under which `c1; c2` diverges.
    pub diverging_input: Vec<Val>,
    /// Stream that drives `c1` to `reached`.
    pub prefix_input: Vec<Val>,
    pub steps: usize,
    pub reached: Cmd,
    /// What `reached; c2` does instead of diverging.
    pub outcome: Verdict,
}

/// Searches for a violation of the congruence. Divergence is witnessed by a
/// lasso under some stream; prefixes of `c1` are explored for up to
/// `max_prefix` steps under every stream.
pub fn seq_congruence_counterexample(
    c1: &Cmd,
    c2: &Cmd,
    store: &Store,
    streams: &[InputStream],
    fuel: u64,
    max_prefix: usize,
) -> Option<CongruenceAnomaly> {
    let whole = Cmd::seq(c1.clone(), c2.clone());
    let diverging = streams.iter().find(|s| {
        detect_lasso(
            &SmallConfig::new(whole.clone(), store.clone(), (*s).clone()),
            fuel,
            &Abstraction::none(),
        )
        .is_ok()
    })?;
    for pre in streams {
        let mut cur = SmallConfig::new(c1.clone(), store.clone(), pre.clone());
        for steps in 1..=max_prefix {
            let Ok(next) = step(&cur) else { break };
            cur = next;
            let resumed = SmallConfig::new(
                Cmd::seq(cur.cmd.clone(), c2.clone()),
                cur.store.clone(),
                cur.stream.clone(),
            );
            let (outcome, _) = run_small(&resumed, fuel);
            if matches!(outcome, Verdict::Stuck { .. } | Verdict::Converged { .. }) {
                return Some(CongruenceAnomaly {
                    diverging_input: diverging.values().to_vec(),
                    prefix_input: pre.values().to_vec(),
                    steps,
                    reached: cur.cmd.clone(),
                    outcome,
                });
            }
            if cur.is_terminal() {
                break;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{input_choice, while_one_skip};

    fn split(c: &Cmd) -> (&Cmd, &Cmd) {
        match c {
            Cmd::Seq(a, b) => (a, b),
            _ => panic!("not a sequence"),
        }
    }

    #[test]
    fn input_breaks_the_congruence() {
        let c = input_choice();
        let (c1, c2) = split(&c);
        let streams = [InputStream::new(vec![Val::Nat(1)]), InputStream::new(vec![Val::Nat(0)])];
        let a = seq_congruence_counterexample(c1, c2, &Store::new(), &streams, 100, 16).unwrap();
        assert_eq!(a.diverging_input, vec![Val::Nat(0)]);
        assert_eq!(a.prefix_input, vec![Val::Nat(1)]);
        assert_eq!(a.reached, Cmd::assign("x", crate::syntax::Expr::nat(0)));
        assert_eq!(a.outcome.class(), "stuck");
    }

    #[test]
    fn one_stream_keeps_it() {
        let c = input_choice();
        let (c1, c2) = split(&c);
        for v in [0, 1] {
            let streams = [InputStream::new(vec![Val::Nat(v)])];
            assert!(seq_congruence_counterexample(c1, c2, &Store::new(), &streams, 100, 16).is_none());
        }
        let c = Cmd::seq(Cmd::seq(Cmd::alloc("x"), while_one_skip()), Cmd::Skip);
        let (c1, c2) = split(&c);
        assert!(seq_congruence_counterexample(c1, c2, &Store::new(), &[InputStream::empty()], 200, 16).is_none());
    }
}
