use std::fmt;

/// Nullary symbols with a fixed meaning. Every other bare identifier is a
/// metavariable.
pub const CONSTANTS: &[&str] = &["skip", "null", "down", "up", "div", "input"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    /// Classifies a bare identifier, folding the arrow spellings of the flags.
    pub fn atom(name: &str) -> Term {
        match name {
            "⇓" => Term::Const("down".into()),
            "⇑" => Term::Const("up".into()),
            n if CONSTANTS.contains(&n) || n.chars().all(|c| c.is_ascii_digit()) => Term::Const(n.into()),
            n => Term::Var(n.into()),
        }
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    /// Outermost symbol, used to group rules by the construct they define.
    pub fn head(&self) -> &str {
        match self {
            Term::Var(_) => "_",
            Term::Const(c) => c,
            Term::App(f, _) => f,
        }
    }

    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// One argument position of a relation signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub role: String,
    /// Highlighted components may be left out of formulas, uniformly per rule.
    pub highlighted: bool,
    pub default: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSig {
    pub name: String,
    pub source: Vec<Component>,
    pub target: Vec<Component>,
}

impl RelationSig {
    pub fn flag_index(side: &[Component]) -> Option<usize> {
        side.iter().position(|c| c.highlighted)
    }

    pub fn is_flagged(&self) -> bool {
        Self::flag_index(&self.source).is_some() || Self::flag_index(&self.target).is_some()
    }

    fn implicit_len(side: &[Component]) -> usize {
        side.iter().filter(|c| !c.highlighted).count()
    }

    /// Whether a formula with these arities spells out the highlighted
    /// components (`Some(true)`), omits them (`Some(false)`), or fits neither.
    pub fn explicitness(&self, source: usize, target: usize) -> Option<bool> {
        if source == self.source.len() && target == self.target.len() {
            Some(true)
        } else if source == Self::implicit_len(&self.source) && target == Self::implicit_len(&self.target) {
            Some(false)
        } else {
            None
        }
    }
}

fn fmt_components(f: &mut fmt::Formatter<'_>, side: &[Component]) -> fmt::Result {
    f.write_str("(")?;
    for (i, c) in side.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        match (c.highlighted, &c.default) {
            (false, _) => f.write_str(&c.role)?,
            (true, None) => write!(f, "[{}]", c.role)?,
            (true, Some(d)) => write!(f, "[{} :- {d}]", c.role)?,
        }
    }
    f.write_str(")")
}

impl fmt::Display for RelationSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sig {}: ", self.name)?;
        fmt_components(f, &self.source)?;
        write!(f, " ={}=> ", self.name)?;
        fmt_components(f, &self.target)
    }
}

/// `(t1, …) =REL=> (u1, …)`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub relation: String,
    pub source: Vec<Term>,
    pub target: Vec<Term>,
}

impl Formula {
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.source.iter().chain(&self.target)
    }
}

fn fmt_terms(f: &mut fmt::Formatter<'_>, terms: &[Term]) -> fmt::Result {
    f.write_str("(")?;
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.source)?;
        write!(f, " ={}=> ", self.relation)?;
        fmt_terms(f, &self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    Eval(Formula),
    /// A predicate kept as written.
    Side(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceRule {
    pub label: String,
    pub premises: Vec<Premise>,
    pub conclusion: Formula,
    /// 1-based line of the `rule` header.
    pub line: usize,
}

impl InferenceRule {
    pub fn eval_premises(&self) -> impl Iterator<Item = &Formula> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Eval(f) => Some(f),
            Premise::Side(_) => None,
        })
    }

    pub fn side_conditions(&self) -> impl Iterator<Item = &str> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Side(s) => Some(s.as_str()),
            Premise::Eval(_) => None,
        })
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.eval_premises().chain(std::iter::once(&self.conclusion))
    }

    /// Metavariables in order of first occurrence.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for f in self.formulas() {
            f.terms().for_each(|t| t.collect_vars(&mut out));
        }
        out
    }
}

impl fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {}:", self.label)?;
        for p in &self.premises {
            match p {
                Premise::Eval(fm) => writeln!(f, "  {fm}")?,
                Premise::Side(s) => writeln!(f, "  side {s}")?,
            }
        }
        writeln!(f, "  ---")?;
        writeln!(f, "  {}", self.conclusion)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub sigs: Vec<RelationSig>,
    pub rules: Vec<InferenceRule>,
    /// Where the rules were read from.
    pub origin: String,
}

impl RuleSet {
    pub fn sig(&self, relation: &str) -> Option<&RelationSig> {
        self.sigs.iter().find(|s| s.name == relation)
    }

    /// Concatenation. A relation declared in both sets must be declared identically.
    pub fn merge(mut self, other: RuleSet) -> Result<RuleSet, String> {
        for sig in other.sigs {
            match self.sig(&sig.name) {
                Some(existing) if *existing != sig => {
                    return Err(format!("relation {} is declared differently", sig.name));
                }
                Some(_) => {}
                None => self.sigs.push(sig),
            }
        }
        self.rules.extend(other.rules);
        if !other.origin.is_empty() {
            self.origin = if self.origin.is_empty() {
                other.origin
            } else {
                format!("{}+{}", self.origin, other.origin)
            };
        }
        Ok(self)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sigs {
            writeln!(f, "{s}")?;
        }
        for r in &self.rules {
            writeln!(f)?;
            write!(f, "{r}")?;
        }
        Ok(())
    }
}
