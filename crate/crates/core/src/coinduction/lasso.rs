use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::small_step::{step, NoStep, SmallConfig};
use crate::syntax::{Cmd, InputStream, Store, Val};

use super::{Abstraction, CheckError, CoinductionError};

/// A finite witness of an infinite transition sequence: `prefix` leads to
/// `cycle[0]`, and stepping through `cycle` returns to a configuration equal to
/// `cycle[0]` modulo `abstraction`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<SmallConfig>,
    pub cycle: Vec<SmallConfig>,
    pub abstraction: Abstraction,
    /// The whole input stream; configurations refer to it by cursor.
    pub input: Arc<[Val]>,
}

impl Lasso {
    pub fn start(&self) -> Option<&SmallConfig> {
        self.prefix.first().or(self.cycle.first())
    }

    pub fn configs(&self) -> impl Iterator<Item = &SmallConfig> {
        self.prefix.iter().chain(&self.cycle)
    }
}

/// Configurations compared modulo the abstraction, and modulo the stream
/// position when the remaining program reads no input.
fn config_key(abs: &Abstraction, cfg: &SmallConfig) -> (Cmd, Store, Option<usize>) {
    let cursor = cfg.cmd.uses_input().then(|| cfg.stream.cursor());
    (cfg.cmd.clone(), abs.project(&cfg.store), cursor)
}

fn same_config(abs: &Abstraction, a: &SmallConfig, b: &SmallConfig) -> bool {
    a.cmd == b.cmd
        && abs.same_store(&a.store, &b.store)
        && (!a.cmd.uses_input() || a.stream.cursor() == b.stream.cursor())
}

/// Step from `cfg` for at most `fuel` transitions, stopping at the first
/// configuration that repeats an earlier one.
pub fn detect_lasso(cfg: &SmallConfig, fuel: u64, abs: &Abstraction) -> Result<Lasso, CoinductionError> {
    abs.check_cmd(&cfg.cmd)?;
    let mut seen: HashMap<(Cmd, Store, Option<usize>), usize> = HashMap::new();
    let mut trail: Vec<SmallConfig> = Vec::new();
    let mut cur = cfg.clone();
    for _ in 0..=fuel {
        let key = config_key(abs, &cur);
        if let Some(&start) = seen.get(&key) {
            let cycle = trail.split_off(start);
            return Ok(Lasso {
                prefix: trail,
                cycle,
                abstraction: abs.clone(),
                input: cfg.stream.shared_values(),
            });
        }
        seen.insert(key, trail.len());
        let next = match step(&cur) {
            Ok(next) => next,
            Err(NoStep::Terminal) => return Err(CoinductionError::NotFound("program terminates".into())),
            Err(NoStep::Stuck(s)) => return Err(CoinductionError::NotFound(format!("program is stuck: {s}"))),
        };
        trail.push(std::mem::replace(&mut cur, next));
    }
    Err(CoinductionError::NotFound(format!(
        "no repeated configuration within {fuel} steps"
    )))
}

/// Replays every transition of the lasso, including the one closing the cycle.
pub fn check_lasso(l: &Lasso) -> Result<(), CheckError> {
    let fail = |i: usize, msg: String| Err(CheckError::at(i, msg));
    if l.cycle.is_empty() {
        return Err(CheckError::general("empty cycle"));
    }
    if let Err(e) = l.abstraction.check_cmd(&l.start().expect("cycle is non-empty").cmd) {
        return Err(CheckError::general(e.to_string()));
    }
    let all: Vec<&SmallConfig> = l.configs().collect();
    for (i, cfg) in all.iter().enumerate() {
        if cfg.stream.values() != &*l.input {
            return fail(i, "configuration reads a different input stream".into());
        }
        let next = match step(cfg) {
            Ok(next) => next,
            Err(NoStep::Terminal) => return fail(i, "terminal configuration".into()),
            Err(NoStep::Stuck(s)) => return fail(i, format!("stuck: {s}")),
        };
        match all.get(i + 1) {
            Some(expected) if **expected != next => {
                return fail(i, format!("steps to {next}, not {expected}"));
            }
            Some(_) => {}
            None => {
                let head = &l.cycle[0];
                if !same_config(&l.abstraction, &next, head) {
                    return fail(i, format!("cycle closes at {next}, not {head}"));
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    cmd: Cmd,
    store: Store,
    cursor: usize,
}

#[derive(Serialize, Deserialize)]
struct LassoRepr {
    #[serde(default)]
    input: Vec<Val>,
    #[serde(default)]
    abstraction: Abstraction,
    prefix: Vec<ConfigRepr>,
    cycle: Vec<ConfigRepr>,
}

impl Serialize for Lasso {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = |cs: &[SmallConfig]| {
            cs.iter()
                .map(|c| ConfigRepr {
                    cmd: c.cmd.clone(),
                    store: c.store.clone(),
                    cursor: c.stream.cursor(),
                })
                .collect()
        };
        LassoRepr {
            input: self.input.to_vec(),
            abstraction: self.abstraction.clone(),
            prefix: repr(&self.prefix),
            cycle: repr(&self.cycle),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lasso {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = LassoRepr::deserialize(d)?;
        let input: Arc<[Val]> = r.input.into();
        let configs = |cs: Vec<ConfigRepr>| -> Result<Vec<SmallConfig>, D::Error> {
            cs.into_iter()
                .map(|c| {
                    if c.cursor > input.len() {
                        return Err(serde::de::Error::custom("cursor past the end of the input"));
                    }
                    Ok(SmallConfig::new(
                        c.cmd,
                        c.store,
                        InputStream::at(input.clone(), c.cursor),
                    ))
                })
                .collect()
        };
        Ok(Lasso {
            prefix: configs(r.prefix)?,
            cycle: configs(r.cycle)?,
            abstraction: r.abstraction,
            input,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{while_one_skip, BinOp, Expr};

    fn inc_forever() -> SmallConfig {
        let c = Cmd::while_(
            Expr::nat(1),
            Cmd::assign("x", Expr::bop(BinOp::Add, Expr::var("x"), Expr::nat(1))),
        );
        SmallConfig::new(c, [("x", Val::Nat(0))].into_iter().collect(), InputStream::empty())
    }

    #[test]
    fn while_one_skip_has_a_two_state_cycle() {
        let l = detect_lasso(&SmallConfig::start(while_one_skip(), vec![]), 10, &Abstraction::none()).unwrap();
        assert!(l.prefix.is_empty());
        assert_eq!(l.cycle.len(), 2);
        assert_eq!(l.cycle[0].cmd, while_one_skip());
        assert_eq!(l.cycle[1].cmd, Cmd::seq(Cmd::Skip, while_one_skip()));
        assert!(check_lasso(&l).is_ok());
    }

    #[test]
    fn growing_store_needs_abstraction() {
        assert!(matches!(
            detect_lasso(&inc_forever(), 1000, &Abstraction::none()),
            Err(CoinductionError::NotFound(_))
        ));
        let l = detect_lasso(&inc_forever(), 100, &Abstraction::new(["x"])).unwrap();
        assert!(check_lasso(&l).is_ok());
    }

    #[test]
    fn corrupted_lassos_are_rejected() {
        let mut l = detect_lasso(&SmallConfig::start(while_one_skip(), vec![]), 10, &Abstraction::none()).unwrap();
        l.cycle[1].cmd = Cmd::Skip;
        assert!(check_lasso(&l).is_err());
        l.cycle.clear();
        assert!(check_lasso(&l).is_err());
    }

    #[test]
    fn json_round_trip() {
        let l = detect_lasso(&inc_forever(), 100, &Abstraction::new(["x"])).unwrap();
        let text = serde_json::to_string(&l).unwrap();
        let back: Lasso = serde_json::from_str(&text).unwrap();
        assert_eq!(back, l);
    }
}
