//! Abstract syntax of the While language, stores, input streams, status flags,
//! outcomes and the semantic constructors used by pretty-big-step evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coinduction::Certificate;

/// A program variable. Non-empty ASCII identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ident(String);

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty(), "identifiers are non-empty");
        Ident(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Self {
        Ident(s)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Runtime values: `null` marks an allocated but uninitialised variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    Null,
    Nat(u64),
}

impl Val {
    /// Guards treat every value other than the natural `0` as true, `null` included.
    pub fn is_zero(self) -> bool {
        self == Val::Nat(0)
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Null => f.write_str("null"),
            Val::Nat(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Val {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Val::Null => s.serialize_none(),
            Val::Nat(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Val {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match Option::<u64>::deserialize(d)? {
            None => Val::Null,
            Some(n) => Val::Nat(n),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    /// Primitive arithmetic on naturals. Subtraction truncates at zero; addition
    /// and multiplication saturate at `u64::MAX` so that every operation stays total.
    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            BinOp::Add => a.saturating_add(b),
            BinOp::Sub => a.saturating_sub(b),
            BinOp::Mul => a.saturating_mul(b),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Lit(Val),
    Var(Ident),
    Bop(BinOp, Box<Expr>, Box<Expr>),
    Input,
}

// `add`, `sub` and `mul` build syntax; they are not arithmetic.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn nat(n: u64) -> Self {
        Expr::Lit(Val::Nat(n))
    }

    pub fn var(x: &str) -> Self {
        Expr::Var(Ident::new(x))
    }

    pub fn bop(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Bop(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: Expr, r: Expr) -> Self {
        Expr::bop(BinOp::Add, l, r)
    }

    pub fn sub(l: Expr, r: Expr) -> Self {
        Expr::bop(BinOp::Sub, l, r)
    }

    pub fn mul(l: Expr, r: Expr) -> Self {
        Expr::bop(BinOp::Mul, l, r)
    }

    pub fn uses_input(&self) -> bool {
        match self {
            Expr::Input => true,
            Expr::Bop(_, l, r) => l.uses_input() || r.uses_input(),
            Expr::Lit(_) | Expr::Var(_) => false,
        }
    }

    /// Variables read by the expression.
    pub fn vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Bop(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
            Expr::Lit(_) | Expr::Input => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmd {
    Skip,
    Alloc(Ident),
    Assign(Ident, Expr),
    Seq(Box<Cmd>, Box<Cmd>),
    If(Expr, Box<Cmd>, Box<Cmd>),
    While(Expr, Box<Cmd>),
    Throw(Val),
    Catch(Box<Cmd>, Box<Cmd>),
}

impl Cmd {
    pub fn alloc(x: &str) -> Self {
        Cmd::Alloc(Ident::new(x))
    }

    pub fn assign(x: &str, e: Expr) -> Self {
        Cmd::Assign(Ident::new(x), e)
    }

    pub fn seq(a: Cmd, b: Cmd) -> Self {
        Cmd::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of the given commands; `skip` when empty.
    pub fn seq_all(cmds: impl IntoIterator<Item = Cmd>) -> Self {
        let mut cmds: Vec<Cmd> = cmds.into_iter().collect();
        let Some(mut acc) = cmds.pop() else {
            return Cmd::Skip;
        };
        while let Some(c) = cmds.pop() {
            acc = Cmd::seq(c, acc);
        }
        acc
    }

    pub fn if_(e: Expr, a: Cmd, b: Cmd) -> Self {
        Cmd::If(e, Box::new(a), Box::new(b))
    }

    pub fn while_(e: Expr, body: Cmd) -> Self {
        Cmd::While(e, Box::new(body))
    }

    pub fn catch(body: Cmd, handler: Cmd) -> Self {
        Cmd::Catch(Box::new(body), Box::new(handler))
    }

    pub fn uses_input(&self) -> bool {
        match self {
            Cmd::Skip | Cmd::Alloc(_) | Cmd::Throw(_) => false,
            Cmd::Assign(_, e) => e.uses_input(),
            Cmd::Seq(a, b) | Cmd::Catch(a, b) => a.uses_input() || b.uses_input(),
            Cmd::If(e, a, b) => e.uses_input() || a.uses_input() || b.uses_input(),
            Cmd::While(e, c) => e.uses_input() || c.uses_input(),
        }
    }

    pub fn uses_exceptions(&self) -> bool {
        match self {
            Cmd::Throw(_) | Cmd::Catch(..) => true,
            Cmd::Skip | Cmd::Alloc(_) | Cmd::Assign(..) => false,
            Cmd::Seq(a, b) | Cmd::If(_, a, b) => a.uses_exceptions() || b.uses_exceptions(),
            Cmd::While(_, c) => c.uses_exceptions(),
        }
    }

    pub fn has_while(&self) -> bool {
        match self {
            Cmd::While(..) => true,
            Cmd::Skip | Cmd::Alloc(_) | Cmd::Assign(..) | Cmd::Throw(_) => false,
            Cmd::Seq(a, b) | Cmd::If(_, a, b) | Cmd::Catch(a, b) => a.has_while() || b.has_while(),
        }
    }

    /// Number of AST nodes (commands and expressions).
    pub fn size(&self) -> usize {
        fn esize(e: &Expr) -> usize {
            match e {
                Expr::Bop(_, l, r) => 1 + esize(l) + esize(r),
                _ => 1,
            }
        }
        match self {
            Cmd::Skip | Cmd::Alloc(_) | Cmd::Throw(_) => 1,
            Cmd::Assign(_, e) => 1 + esize(e),
            Cmd::Seq(a, b) | Cmd::Catch(a, b) => 1 + a.size() + b.size(),
            Cmd::If(e, a, b) => 1 + esize(e) + a.size() + b.size(),
            Cmd::While(e, c) => 1 + esize(e) + c.size(),
        }
    }

    /// Every variable mentioned anywhere in the command.
    pub fn vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Cmd::Skip | Cmd::Throw(_) => {}
            Cmd::Alloc(x) => {
                out.insert(x.clone());
            }
            Cmd::Assign(x, e) => {
                out.insert(x.clone());
                e.vars(out);
            }
            Cmd::Seq(a, b) | Cmd::Catch(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Cmd::If(e, a, b) => {
                e.vars(out);
                a.vars(out);
                b.vars(out);
            }
            Cmd::While(e, c) => {
                e.vars(out);
                c.vars(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::pretty_expr(self))
    }
}

impl fmt::Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::pretty_cmd(self))
    }
}

impl Serialize for Cmd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::parser::pretty_cmd(self))
    }
}

impl<'de> Deserialize<'de> for Cmd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        crate::parser::parse_cmd(&text).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::parser::pretty_expr(self))
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        crate::parser::parse_expr(&text).map_err(serde::de::Error::custom)
    }
}

/// Finite map from variables to values. Ordered so printing is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Store(BTreeMap<Ident, Val>);

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn get(&self, x: &Ident) -> Option<Val> {
        self.0.get(x).copied()
    }

    pub fn contains(&self, x: &Ident) -> bool {
        self.0.contains_key(x)
    }

    /// `σ[x ↦ v]`: a new store, the receiver is left untouched.
    pub fn update(&self, x: &Ident, v: Val) -> Store {
        let mut next = self.clone();
        next.0.insert(x.clone(), v);
        next
    }

    pub fn domain(&self) -> impl Iterator<Item = &Ident> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, Val)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<I: Into<Ident>> FromIterator<(I, Val)> for Store {
    fn from_iter<T: IntoIterator<Item = (I, Val)>>(iter: T) -> Self {
        Store(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}↦{v}")?;
        }
        f.write_str("}")
    }
}

/// Free-function form of `σ[x ↦ v]`.
pub fn store_update(store: &Store, x: &Ident, v: Val) -> Store {
    store.update(x, v)
}

/// A finite sequence of values consumed by `input`, with a cursor that only advances.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InputStream {
    values: Arc<[Val]>,
    cursor: usize,
}

impl InputStream {
    pub fn new(values: impl Into<Vec<Val>>) -> Self {
        InputStream {
            values: values.into().into(),
            cursor: 0,
        }
    }

    pub fn empty() -> Self {
        InputStream::default()
    }

    pub fn at(values: Arc<[Val]>, cursor: usize) -> Self {
        InputStream { values, cursor }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn values(&self) -> &[Val] {
        &self.values
    }

    pub fn shared_values(&self) -> Arc<[Val]> {
        Arc::clone(&self.values)
    }

    pub fn remaining(&self) -> &[Val] {
        &self.values[self.cursor.min(self.values.len())..]
    }

    /// Next value and the advanced stream, or `None` once exhausted.
    pub fn pop(&self) -> Option<(Val, InputStream)> {
        let v = *self.values.get(self.cursor)?;
        Some((
            v,
            InputStream {
                values: Arc::clone(&self.values),
                cursor: self.cursor + 1,
            },
        ))
    }
}

impl fmt::Display for InputStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if i == self.cursor {
                f.write_str("^")?;
            }
            write!(f, "{v}")?;
        }
        if self.cursor >= self.values.len() {
            f.write_str("^")?;
        }
        f.write_str("]")
    }
}

/// Status flag of the flag-based semantics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Converging (⇓).
    Down,
    /// Diverging (⇑).
    Up,
    /// Abruptly terminated by `throw`, recording the value and the store at the throw.
    Exc { value: Val, store: Store },
}

impl Status {
    pub fn exc(value: Val, store: Store) -> Self {
        Status::Exc { value, store }
    }

    pub fn is_down(&self) -> bool {
        matches!(self, Status::Down)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Down => f.write_str("⇓"),
            Status::Up => f.write_str("⇑"),
            Status::Exc { value, store } => write!(f, "exc({value}, {store})"),
        }
    }
}

/// Pretty-big-step outcome.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Conv(Store),
    Div,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Conv(s) => write!(f, "conv {s}"),
            Outcome::Div => f.write_str("div"),
        }
    }
}

/// Commands extended with the intermediate forms of pretty-big-step evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemCmd {
    Plain(Cmd),
    Assign2(Ident, Val),
    Seq2(Outcome, Cmd),
    If2(Val, Cmd, Cmd),
    While2(Val, Expr, Cmd),
    While3(Outcome, Expr, Cmd),
}

impl fmt::Display for SemCmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemCmd::Plain(c) => write!(f, "{c}"),
            SemCmd::Assign2(x, v) => write!(f, "assign2 {x} {v}"),
            SemCmd::Seq2(o, c) => write!(f, "seq2 ({o}) {{ {c} }}"),
            SemCmd::If2(v, a, b) => write!(f, "if2 {v} {{ {a} }} {{ {b} }}"),
            SemCmd::While2(v, e, c) => write!(f, "while2 {v} ({e}) {{ {c} }}"),
            SemCmd::While3(o, e, c) => write!(f, "while3 ({o}) ({e}) {{ {c} }}"),
        }
    }
}

/// Normalised result of running a program under one of the semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Verdict {
    Converged { store: Store },
    Exception { value: Val, store: Store },
    Stuck { reason: String },
    DivergesProven { certificate: Box<Certificate> },
    Unknown { fuel: u64 },
}

impl Verdict {
    /// Short class name used in reports and summaries.
    pub fn class(&self) -> &'static str {
        match self {
            Verdict::Converged { .. } => "converged",
            Verdict::Exception { .. } => "exception",
            Verdict::Stuck { .. } => "stuck",
            Verdict::DivergesProven { .. } => "diverges",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Converged { store } => write!(f, "⇓ {store}"),
            Verdict::Exception { value, store } => write!(f, "exc({value}, {store})"),
            Verdict::Stuck { reason } => write!(f, "Stuck ({reason})"),
            Verdict::DivergesProven { certificate } => write!(f, "DivergesProven ({certificate})"),
            Verdict::Unknown { fuel } => write!(f, "Unknown (fuel={fuel})"),
        }
    }
}

/// The factorial program: `alloc c; c := n; alloc r; r := 1; while c { r := r * c; c := c - 1 }`.
pub fn fac_program(n: u64) -> Cmd {
    Cmd::seq_all([
        Cmd::alloc("c"),
        Cmd::assign("c", Expr::nat(n)),
        Cmd::alloc("r"),
        Cmd::assign("r", Expr::nat(1)),
        Cmd::while_(
            Expr::var("c"),
            Cmd::seq(
                Cmd::assign("r", Expr::mul(Expr::var("r"), Expr::var("c"))),
                Cmd::assign("c", Expr::sub(Expr::var("c"), Expr::nat(1))),
            ),
        ),
    ])
}

/// `while 1 { skip }`.
pub fn while_one_skip() -> Cmd {
    Cmd::while_(Expr::nat(1), Cmd::Skip)
}

/// `alloc x; x := 0; while 1 { x := x + 1 }`.
pub fn counter_loop() -> Cmd {
    Cmd::seq_all([
        Cmd::alloc("x"),
        Cmd::assign("x", Expr::nat(0)),
        Cmd::while_(Expr::nat(1), Cmd::assign("x", Expr::add(Expr::var("x"), Expr::nat(1)))),
    ])
}

/// `while 1 { skip }; alloc x; x := x + 0`: diverges first, then would get stuck.
pub fn diverge_then_stuck() -> Cmd {
    Cmd::seq_all([
        while_one_skip(),
        Cmd::alloc("x"),
        Cmd::assign("x", Expr::add(Expr::var("x"), Expr::nat(0))),
    ])
}

/// `if input { x := 0 } else { skip }; while 1 { skip }`: stuck or divergent depending on input.
pub fn input_choice() -> Cmd {
    Cmd::seq(
        Cmd::if_(Expr::Input, Cmd::assign("x", Expr::nat(0)), Cmd::Skip),
        while_one_skip(),
    )
}
