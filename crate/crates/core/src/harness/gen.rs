//! Seeded random While programs.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::syntax::{BinOp, Cmd, Expr, Ident, Val};

/// Relative frequency of each command form. Zero disables a form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weights {
    pub skip: u32,
    pub alloc: u32,
    pub assign: u32,
    pub throw: u32,
    pub seq: u32,
    pub if_: u32,
    pub while_: u32,
    pub catch: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            skip: 2,
            alloc: 1,
            assign: 6,
            throw: 1,
            seq: 6,
            if_: 3,
            while_: 2,
            catch: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Nesting depth of the generated body. Depth 1 yields a single leaf.
    pub max_depth: u32,
    /// Number of distinct variables.
    pub vars: usize,
    pub literals: Vec<u64>,
    /// Allow `input` in expressions.
    pub input: bool,
    /// Allow `throw` and `try … catch`.
    pub exceptions: bool,
    /// Chance that a variable of the body is allocated and initialised by
    /// a prelude placed in front of it. The prelude lies outside the depth bound.
    pub alloc_probability: f64,
    pub weights: Weights,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 5,
            vars: 3,
            literals: vec![0, 1, 2],
            input: false,
            exceptions: false,
            alloc_probability: 0.9,
            weights: Weights::default(),
        }
    }
}

impl GenConfig {
    pub fn with_seed(&self, seed: u64) -> GenConfig {
        GenConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_depth == 0 {
            return Err("max depth must be at least 1".into());
        }
        if self.vars == 0 || self.literals.is_empty() {
            return Err("variable and literal pools must be non-empty".into());
        }
        if !(0.0..=1.0).contains(&self.alloc_probability) {
            return Err("alloc probability must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Conventional short names first, then numbered ones.
pub fn var_name(i: usize) -> Ident {
    const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
    match NAMES.get(i) {
        Some(n) => Ident::new(*n),
        None => Ident::new(format!("x{i}")),
    }
}

struct Gen<'c> {
    cfg: &'c GenConfig,
    rng: ChaCha8Rng,
}

#[derive(Clone, Copy)]
enum Form {
    Skip,
    Alloc,
    Assign,
    Throw,
    Seq,
    If,
    While,
    Catch,
}

impl Gen<'_> {
    fn var(&mut self) -> Ident {
        var_name(self.rng.random_range(0..self.cfg.vars.max(1)))
    }

    fn literal(&mut self) -> u64 {
        match self.cfg.literals.len() {
            0 => 0,
            n => self.cfg.literals[self.rng.random_range(0..n)],
        }
    }

    fn expr(&mut self, depth: u32) -> Expr {
        let atoms = if self.cfg.input { 3 } else { 2 };
        if depth > 1 && self.rng.random_bool(0.35) {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][self.rng.random_range(0..3)];
            return Expr::bop(op, self.expr(depth - 1), self.expr(depth - 1));
        }
        match self.rng.random_range(0..atoms) {
            0 => Expr::nat(self.literal()),
            1 => Expr::Var(self.var()),
            _ => Expr::Input,
        }
    }

    fn pick(&mut self, depth: u32) -> Form {
        let w = &self.cfg.weights;
        let exc = self.cfg.exceptions;
        let mut forms = vec![(Form::Skip, w.skip), (Form::Alloc, w.alloc), (Form::Assign, w.assign)];
        if exc {
            forms.push((Form::Throw, w.throw));
        }
        if depth > 1 {
            forms.extend([(Form::Seq, w.seq), (Form::If, w.if_), (Form::While, w.while_)]);
            if exc {
                forms.push((Form::Catch, w.catch));
            }
        }
        let total: u32 = forms.iter().map(|(_, w)| w).sum();
        if total == 0 {
            return Form::Skip;
        }
        let mut roll = self.rng.random_range(0..total);
        for (f, w) in forms {
            if roll < w {
                return f;
            }
            roll -= w;
        }
        unreachable!("roll is below the total weight")
    }

    fn cmd(&mut self, depth: u32) -> Cmd {
        match self.pick(depth) {
            Form::Skip => Cmd::Skip,
            Form::Alloc => Cmd::Alloc(self.var()),
            Form::Assign => Cmd::Assign(self.var(), self.expr(2)),
            Form::Throw => Cmd::Throw(Val::Nat(self.literal())),
            Form::Seq => Cmd::seq(self.cmd(depth - 1), self.cmd(depth - 1)),
            Form::If => Cmd::if_(self.expr(2), self.cmd(depth - 1), self.cmd(depth - 1)),
            Form::While => Cmd::while_(self.expr(2), self.cmd(depth - 1)),
            Form::Catch => Cmd::catch(self.cmd(depth - 1), self.cmd(depth - 1)),
        }
    }
}

/// The allocation prelude and the depth-bounded body, generated separately.
pub fn generate_parts(cfg: &GenConfig) -> (Vec<Cmd>, Cmd) {
    let mut g = Gen {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let body = g.cmd(cfg.max_depth.max(1));
    let mut used = BTreeSet::new();
    body.vars(&mut used);
    let p = cfg.alloc_probability.clamp(0.0, 1.0);
    let mut prelude = Vec::new();
    for x in used {
        if g.rng.random_bool(p) {
            let init = Expr::nat(g.literal());
            prelude.push(Cmd::Alloc(x.clone()));
            prelude.push(Cmd::Assign(x, init));
        }
    }
    (prelude, body)
}

/// Deterministic in `cfg.seed`.
pub fn generate_program(cfg: &GenConfig) -> Cmd {
    let (prelude, body) = generate_parts(cfg);
    Cmd::seq_all(prelude.into_iter().chain([body]))
}

/// Nesting depth counting every command node.
pub fn depth(c: &Cmd) -> u32 {
    match c {
        Cmd::Skip | Cmd::Alloc(_) | Cmd::Assign(..) | Cmd::Throw(_) => 1,
        Cmd::Seq(a, b) | Cmd::If(_, a, b) | Cmd::Catch(a, b) => 1 + depth(a).max(depth(b)),
        Cmd::While(_, b) => 1 + depth(b),
    }
}

/// Every input sequence over `alphabet` of length at most `max_len`,
/// shortest first.
pub fn enumerate_streams(alphabet: &[Val], max_len: usize) -> Vec<Vec<Val>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s: &Vec<Val>| {
                alphabet.iter().map(move |v| {
                    let mut t = s.clone();
                    t.push(*v);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
