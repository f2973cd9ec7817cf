//! Strategies and property checks shared by the `properties` and
//! `acceptance` targets. Each check runs a proptest runner with the given
//! case count and reports the minimal failure as a string.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use whilesem::big_step::{derive_big, eval_big, BigResult};
use whilesem::coinduction::{check_derivation_graph, prove_divergence, Abstraction};
use whilesem::derivation::{Judgment, System};
use whilesem::flag_based::{derive_flag, eval_flag};
use whilesem::harness::{generate_program, run_semantics, GenConfig, Semantics};
use whilesem::parser::{parse_cmd, pretty_cmd};
use whilesem::pretty_big::{derive_pretty, eval_pretty, PrettyResult};
use whilesem::rule_dsl::{count_metrics, shipped, thread_flags, Formula, InferenceRule, Premise, RuleSet, Term};
use whilesem::{BinOp, Cmd, Expr, Ident, InputStream, Outcome, SemCmd, Status, Store, Val, Verdict};

pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn val() -> impl Strategy<Value = Val> {
    prop_oneof![4 => (0u64..4).prop_map(Val::Nat), 1 => Just(Val::Null)]
}

pub fn ident() -> impl Strategy<Value = Ident> {
    prop::sample::select(VARS.to_vec()).prop_map(Ident::new)
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        4 => val().prop_map(Expr::Lit),
        4 => ident().prop_map(Expr::Var),
        1 => Just(Expr::Input),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (
            prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul]),
            inner.clone(),
            inner,
        )
            .prop_map(|(op, l, r)| Expr::bop(op, l, r))
    })
}

/// Arbitrary syntax, including `null` literals and throw/catch. Most of these
/// programs get stuck; they exercise the parser and the failure paths.
pub fn cmd() -> impl Strategy<Value = Cmd> {
    let leaf = prop_oneof![
        Just(Cmd::Skip),
        ident().prop_map(Cmd::Alloc),
        (ident(), expr()).prop_map(|(x, e)| Cmd::Assign(x, e)),
        val().prop_map(Cmd::Throw),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Cmd::seq(a, b)),
            (expr(), inner.clone(), inner.clone()).prop_map(|(e, a, b)| Cmd::if_(e, a, b)),
            (expr(), inner.clone()).prop_map(|(e, b)| Cmd::while_(e, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Cmd::catch(a, b)),
        ]
    })
}

/// Programs from the campaign generator, so that most of them allocate
/// before use and a fair share loop forever.
pub fn generated(exceptions: bool) -> impl Strategy<Value = Cmd> {
    (any::<u64>(), 1u32..=5).prop_map(move |(seed, depth)| {
        generate_program(&GenConfig {
            seed,
            max_depth: depth,
            exceptions,
            ..GenConfig::default()
        })
    })
}

/// Generated programs, half of them followed by a `while 1` loop so that
/// divergence is common.
pub fn often_diverging() -> impl Strategy<Value = Cmd> {
    prop_oneof![
        generated(false),
        (generated(false), generated(false)).prop_map(|(a, body)| Cmd::seq(a, Cmd::while_(Expr::nat(1), body))),
    ]
}

pub fn stream() -> impl Strategy<Value = InputStream> {
    prop::collection::vec((0u64..2).prop_map(Val::Nat), 0..4).prop_map(InputStream::new)
}

pub fn store() -> impl Strategy<Value = Store> {
    prop::collection::vec((ident(), val()), 0..4)
        .prop_map(|kv| kv.into_iter().fold(Store::new(), |s, (x, v)| s.update(&x, v)))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// syntax
// ---------------------------------------------------------------------------

pub fn parse_pretty_round_trip(cases: u32) -> Result<(), String> {
    run(cases, cmd(), |c| {
        let text = pretty_cmd(&c);
        let back = parse_cmd(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, c);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// fuel
// ---------------------------------------------------------------------------

/// A decided run keeps its verdict when given more fuel.
pub fn fuel_monotonicity(cases: u32) -> Result<(), String> {
    run(cases, (generated(true), stream(), 1u64..300), |(c, input, fuel)| {
        for sem in Semantics::ALL {
            let low = run_semantics(sem, &c, &input, fuel);
            if !low.decided() {
                continue;
            }
            let high = run_semantics(sem, &c, &input, fuel * 8);
            prop_assert_eq!(&low.verdict, &high.verdict, "{}", sem.name());
            prop_assert_eq!(low.cursor, high.cursor, "{}", sem.name());
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// inductive evaluators never claim divergence
// ---------------------------------------------------------------------------

/// Inductive flag-based evaluation started with `⇓` never ends in `⇑`.
pub fn no_up_from_down(cases: u32) -> Result<(), String> {
    run(
        cases,
        (generated(true), store(), stream(), 1u64..2000),
        |(c, s, input, fuel)| {
            if let Ok(r) = eval_flag(&c, &s, &Status::Down, &input, fuel) {
                prop_assert_ne!(r.status, Status::Up);
            }
            Ok(())
        },
    )
}

/// Inductive pretty-big-step evaluation of a source program never yields `div`.
pub fn no_div_from_source(cases: u32) -> Result<(), String> {
    run(
        cases,
        (generated(false), store(), stream(), 1u64..2000),
        |(c, s, input, fuel)| {
            if let PrettyResult::Done(o, _) = eval_pretty(&SemCmd::Plain(c), &s, &input, fuel) {
                prop_assert_ne!(o, Outcome::Div);
            }
            Ok(())
        },
    )
}

// ---------------------------------------------------------------------------
// finite derivations are coinductive derivations
// ---------------------------------------------------------------------------

pub fn finite_derivations_accepted(cases: u32) -> Result<(), String> {
    run(cases, (generated(true), stream()), |(c, input)| {
        let empty = Store::new();
        let fuel = 2000;
        let fail = |sys: System, e: String| TestCaseError::fail(format!("{}: {e}", sys.name()));
        if let Ok(g) = derive_big(&c, &empty, &input, fuel) {
            prop_assert_eq!(g.back_edges(), 0);
            check_derivation_graph(&g, System::Big).map_err(|e| fail(System::Big, e.to_string()))?;
        }
        if let Ok(g) = derive_pretty(&SemCmd::Plain(c.clone()), &empty, &input, fuel) {
            prop_assert_eq!(g.back_edges(), 0);
            for sys in [System::Pretty, System::PrettyCo] {
                check_derivation_graph(&g, sys).map_err(|e| fail(sys, e.to_string()))?;
            }
        }
        if let Ok(g) = derive_flag(&c, &empty, &Status::Down, &input, fuel) {
            prop_assert_eq!(g.back_edges(), 0);
            for sys in [System::Flag, System::FlagCo] {
                check_derivation_graph(&g, sys).map_err(|e| fail(sys, e.to_string()))?;
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// stores under ⇑ are irrelevant
// ---------------------------------------------------------------------------

/// Replaces the store of every `⇑` input and every `⇑` result in a flag-co
/// graph. Returns whether anything was a candidate for rewriting.
pub fn rewrite_up_stores(g: &mut whilesem::derivation::DerivationGraph, junk: &Store) -> bool {
    let mut touched = false;
    for node in &mut g.nodes {
        if let Judgment::Flag {
            store,
            flag,
            result,
            out_flag,
            ..
        } = &mut node.judgment
        {
            if *flag == Status::Up {
                *store = junk.clone();
                touched = true;
            }
            if *out_flag == Status::Up {
                *result = junk.clone();
                touched = true;
            }
        }
    }
    touched
}

pub fn up_store_irrelevance(cases: u32) -> Result<(), String> {
    let junk = store().prop_filter("non-empty", |s| !s.is_empty());
    run(cases, (often_diverging(), junk), |(c, junk)| {
        let Ok(mut g) = prove_divergence(
            &c,
            &Store::new(),
            &InputStream::empty(),
            System::FlagCo,
            200,
            &Abstraction::none(),
        ) else {
            return Ok(());
        };
        prop_assert!(rewrite_up_stores(&mut g, &junk));
        check_derivation_graph(&g, System::FlagCo).map_err(|e| TestCaseError::fail(e.to_string()))?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// rule_dsl
// ---------------------------------------------------------------------------

pub const RULE_FILES: [&str; 7] = [
    "exprs.rules",
    "small_step.rules",
    "big_step.rules",
    "div_pred.rules",
    "pretty_big.rules",
    "flag_based.rules",
    "flag_based_implicit.rules",
];

pub fn rule_file() -> impl Strategy<Value = RuleSet> {
    prop::sample::select(RULE_FILES.to_vec()).prop_map(|n| shipped(n).expect("bundled rule file"))
}

fn premise_count(rs: &RuleSet) -> usize {
    rs.rules
        .iter()
        .flat_map(|r| &r.premises)
        .filter(|p| matches!(p, Premise::Eval(_)))
        .count()
}

/// Threading is the identity on its own output, and never changes the
/// number of rules or of eval premises.
pub fn threading_idempotent(cases: u32) -> Result<(), String> {
    run(cases, rule_file(), |rs| {
        let Ok(once) = thread_flags(&rs) else {
            // files with undefaulted relations are rejected, nothing to compare
            return Ok(());
        };
        let twice = thread_flags(&once).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(whilesem::rule_dsl::alpha_equal(&once, &twice));
        prop_assert_eq!(once.rules.len(), rs.rules.len());
        prop_assert_eq!(premise_count(&once), premise_count(&rs));
        Ok(())
    })
}

fn rename_term(t: &Term, suffix: &str) -> Term {
    match t {
        Term::Var(v) => Term::Var(format!("{v}{suffix}")),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| rename_term(a, suffix)).collect()),
        other => other.clone(),
    }
}

fn rename_formula(f: &Formula, suffix: &str) -> Formula {
    Formula {
        source: f.source.iter().map(|t| rename_term(t, suffix)).collect(),
        target: f.target.iter().map(|t| rename_term(t, suffix)).collect(),
        ..f.clone()
    }
}

/// Every metavariable of `r` gets `suffix` appended.
pub fn rename_rule(r: &InferenceRule, suffix: &str) -> InferenceRule {
    InferenceRule {
        premises: r
            .premises
            .iter()
            .map(|p| match p {
                Premise::Eval(f) => Premise::Eval(rename_formula(f, suffix)),
                side => side.clone(),
            })
            .collect(),
        conclusion: rename_formula(&r.conclusion, suffix),
        ..r.clone()
    }
}

pub fn metrics_invariant(cases: u32) -> Result<(), String> {
    let with_base = (
        rule_file(),
        prop::option::of(rule_file()),
        any::<prop::sample::Index>(),
        "[a-z]{1,3}",
    );
    run(cases, with_base, |(rs, base, rot, suffix)| {
        let before = count_metrics(&rs, base.as_ref());
        let mut shuffled = rs.clone();
        let k = rot.index(shuffled.rules.len().max(1));
        shuffled.rules.rotate_left(k);
        shuffled.rules.reverse();
        shuffled.rules = shuffled.rules.iter().map(|r| rename_rule(r, &suffix)).collect();
        prop_assert_eq!(count_metrics(&shuffled, base.as_ref()), before);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// generator
// ---------------------------------------------------------------------------

pub fn generator_deterministic(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 1u32..=6, any::<bool>(), any::<bool>()),
        |(seed, depth, input, exceptions)| {
            let cfg = GenConfig {
                seed,
                max_depth: depth,
                input,
                exceptions,
                ..GenConfig::default()
            };
            let a = generate_program(&cfg);
            prop_assert_eq!(&a, &generate_program(&cfg));
            prop_assert!(input || !a.uses_input());
            prop_assert!(exceptions || !a.uses_exceptions());
            Ok(())
        },
    )
}

/// Small-step and big-step agree on every program, including ones that get
/// stuck, and big-step results never depend on how much fuel was spare.
pub fn small_big_agree(cases: u32) -> Result<(), String> {
    run(cases, (generated(false), stream()), |(c, input)| {
        let small = run_semantics(Semantics::Small, &c, &input, 5000);
        let big = eval_big(&c, &Store::new(), &input, 50_000);
        match (&small.verdict, big) {
            (Verdict::Converged { store }, BigResult::Done(s, out)) => {
                prop_assert_eq!(store, &s);
                prop_assert_eq!(small.cursor, Some(out.cursor()));
            }
            (Verdict::Stuck { .. }, BigResult::Stuck(_)) | (Verdict::Unknown { .. }, _) => {}
            (v, b) => return Err(TestCaseError::fail(format!("small {v} vs big {b:?}"))),
        }
        Ok(())
    })
}

pub type Property = fn(u32) -> Result<(), String>;

/// Every named property with its check, in the order the acceptance report
/// lists them.
pub const PROPERTIES: [(&str, Property); 11] = [
    ("no ⇑ from a ⇓ start", no_up_from_down),
    ("no div from source programs", no_div_from_source),
    ("finite derivations accepted coinductively", finite_derivations_accepted),
    ("⇑ stores are irrelevant", up_store_irrelevance),
    ("parse/pretty round trip", parse_pretty_round_trip),
    ("fuel monotonicity", fuel_monotonicity),
    ("threading idempotent", threading_idempotent),
    ("metrics invariant", metrics_invariant),
    ("generator deterministic", generator_deterministic),
    ("small and big agree", small_big_agree),
    ("lasso soundness", lasso_sound),
];

/// Replaying a found lasso for several more laps never terminates or sticks.
pub fn lasso_sound(cases: u32) -> Result<(), String> {
    use whilesem::coinduction::detect_lasso;
    use whilesem::small_step::{step, SmallConfig};
    run(cases, (often_diverging(), stream()), |(c, input)| {
        let cfg = SmallConfig::new(c, Store::new(), input);
        let Ok(l) = detect_lasso(&cfg, 500, &Abstraction::none()) else {
            return Ok(());
        };
        let mut cur = l.cycle[0].clone();
        for _ in 0..l.cycle.len() * 4 {
            cur = step(&cur).map_err(|e| TestCaseError::fail(format!("replay stopped: {e}")))?;
        }
        prop_assert_eq!(&cur, &l.cycle[0]);
        Ok(())
    })
}
