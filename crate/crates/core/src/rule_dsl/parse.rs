//! Line-oriented reader for `.rules` files.
//!
//! ```text
//! # comment
//! sig G: (c, σ, [δ :- ⇓]) =G=> (σ', [δ'])
//!
//! rule F-Seq:
//!   (c1, σ, ⇓) =G=> (σ', δ)
//!   (c2, σ', δ) =G=> (σ'', δ')
//!   side x ∈ dom(σ)
//!   ---
//!   (seq(c1, c2), σ, ⇓) =G=> (σ'', δ')
//! ```

use thiserror::Error;

use super::ast::{Component, Formula, InferenceRule, Premise, RelationSig, RuleSet, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{origin}{line}:{column}: {message}")]
pub struct RuleParseError {
    /// File name followed by `:`, or empty.
    pub origin: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Defaults,
    Arrow(String),
    Ident(String),
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    /// Column of the first character of the lexed text within its line.
    base: usize,
    line: usize,
    origin: &'a str,
}

const DELIMS: &str = "()[],:=";

impl<'a> Lexer<'a> {
    fn error(&self, column: usize, message: impl Into<String>) -> RuleParseError {
        RuleParseError {
            origin: self.origin.to_string(),
            line: self.line,
            column: self.base + column,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, RuleParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.get(self.pos) {
            let start = self.pos;
            let rest = |k: usize| self.chars.get(start + k).copied();
            let tok = match c {
                c if c.is_whitespace() => {
                    self.pos += 1;
                    continue;
                }
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                ':' if rest(1) == Some('-') => {
                    self.pos += 1;
                    Tok::Defaults
                }
                '-' if rest(1) == Some('>') => {
                    self.pos += 1;
                    Tok::Arrow("->".into())
                }
                '=' => {
                    let mut end = start + 1;
                    while end + 1 < self.chars.len() && !(self.chars[end] == '=' && self.chars[end + 1] == '>') {
                        end += 1;
                    }
                    if end + 1 >= self.chars.len() {
                        return Err(self.error(start, "unterminated `=REL=>` arrow"));
                    }
                    let name: String = self.chars[start + 1..end].iter().collect();
                    if name.is_empty() || name.chars().any(char::is_whitespace) {
                        return Err(self.error(start, "malformed relation arrow"));
                    }
                    self.pos = end + 1;
                    Tok::Arrow(name)
                }
                ':' => return Err(self.error(start, "unexpected `:`")),
                _ => {
                    let mut end = start;
                    while let Some(&d) = self.chars.get(end) {
                        let arrow = d == '-' && self.chars.get(end + 1) == Some(&'>');
                        if d.is_whitespace() || DELIMS.contains(d) || arrow {
                            break;
                        }
                        end += 1;
                    }
                    self.pos = end - 1;
                    Tok::Ident(self.chars[start..end].iter().collect())
                }
            };
            self.pos += 1;
            out.push((start, tok));
        }
        Ok(out)
    }
}

struct Cursor<'a> {
    toks: Vec<(usize, Tok)>,
    i: usize,
    lexer: Lexer<'a>,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &str, base: usize, line: usize, origin: &'a str) -> Result<Self, RuleParseError> {
        let chars: Vec<char> = text.chars().collect();
        let end_col = chars.len();
        let lexer = Lexer {
            chars,
            pos: 0,
            base,
            line,
            origin,
        };
        let toks = Lexer {
            chars: lexer.chars.clone(),
            pos: 0,
            base,
            line,
            origin,
        }
        .tokens()?;
        Ok(Cursor {
            toks,
            i: 0,
            lexer,
            end_col,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.i).map_or(self.end_col, |(c, _)| *c)
    }

    fn error(&self, message: impl Into<String>) -> RuleParseError {
        self.lexer.error(self.col(), message)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|(_, t)| t.clone());
        self.i += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), RuleParseError> {
        if self.peek() == Some(&want) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn done(&self) -> Result<(), RuleParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error("unexpected trailing input")),
        }
    }

    fn ident(&mut self) -> Result<String, RuleParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.error("expected an identifier")),
        }
    }

    fn term(&mut self) -> Result<Term, RuleParseError> {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || {
            let name = self.ident()?;
            if self.peek() != Some(&Tok::LParen) {
                return Ok(Term::atom(&name));
            }
            self.i += 1;
            let mut args = Vec::new();
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    args.push(self.term()?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            Ok(Term::App(name, args))
        })
    }

    /// `(t, …)`, or a single bare term on the target side.
    fn tuple<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, RuleParseError>,
    ) -> Result<Vec<T>, RuleParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(vec![item(self)?]);
        }
        self.i += 1;
        let mut out = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                out.push(item(self)?);
                if self.peek() == Some(&Tok::Comma) {
                    self.i += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(out)
    }

    fn arrow(&mut self) -> Result<String, RuleParseError> {
        match self.peek() {
            Some(Tok::Arrow(_)) => match self.next() {
                Some(Tok::Arrow(a)) => Ok(a),
                _ => unreachable!(),
            },
            _ => Err(self.error("expected a relation arrow `=REL=>`")),
        }
    }

    fn formula(&mut self) -> Result<Formula, RuleParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Err(self.error("expected `(` opening a formula"));
        }
        let source = self.tuple(Self::term)?;
        let relation = self.arrow()?;
        let target = self.tuple(Self::term)?;
        self.done()?;
        Ok(Formula {
            relation,
            source,
            target,
        })
    }

    fn component(&mut self) -> Result<Component, RuleParseError> {
        if self.peek() != Some(&Tok::LBrack) {
            return Ok(Component {
                role: self.ident()?,
                highlighted: false,
                default: None,
            });
        }
        self.i += 1;
        let role = self.ident()?;
        let default = if self.peek() == Some(&Tok::Defaults) {
            self.i += 1;
            Some(self.term()?)
        } else {
            None
        };
        self.expect(Tok::RBrack, "`]`")?;
        Ok(Component {
            role,
            highlighted: true,
            default,
        })
    }

    fn signature(&mut self, name: String) -> Result<RelationSig, RuleParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Err(self.error("expected `(` opening the source components"));
        }
        let source = self.tuple(Self::component)?;
        let arrow_col = self.col();
        let arrow = self.arrow()?;
        if arrow != name {
            return Err(self
                .lexer
                .error(arrow_col, format!("arrow names `{arrow}`, signature is for `{name}`")));
        }
        let target = self.tuple(Self::component)?;
        self.done()?;
        for side in [&source, &target] {
            if side.iter().filter(|c| c.highlighted).count() > 1 {
                return Err(self.lexer.error(0, "at most one highlighted component per side"));
            }
        }
        if target.iter().any(|c| c.default.is_some()) {
            return Err(self.lexer.error(0, "defaults are only allowed on source components"));
        }
        Ok(RelationSig { name, source, target })
    }
}

enum State {
    Top,
    Premises(InferenceRule),
    Conclusion(InferenceRule),
}

/// Parses a rule file. `origin` names it in diagnostics and in the result.
pub fn parse_rules_named(text: &str, origin: &str) -> Result<RuleSet, RuleParseError> {
    let prefix = if origin.is_empty() {
        String::new()
    } else {
        format!("{origin}:")
    };
    let err = |line: usize, column: usize, message: String| RuleParseError {
        origin: prefix.clone(),
        line,
        column,
        message,
    };
    let mut set = RuleSet {
        origin: origin.to_string(),
        ..RuleSet::default()
    };
    let mut state = State::Top;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let indent = raw.chars().take_while(|c| c.is_whitespace()).count();
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let col = indent + 1;
        state = match state {
            State::Top => {
                if let Some(rest) = body.strip_prefix("sig ") {
                    let (name, spec) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line, col, "expected `sig NAME: …`".into()))?;
                    let name = name.trim().to_string();
                    let offset = indent + 4 + rest.find(':').map_or(0, |i| rest[..i].chars().count()) + 1;
                    let sig = Cursor::new(spec, offset + 1, line, &prefix)?.signature(name)?;
                    if set.sig(&sig.name).is_some() {
                        return Err(err(line, col, format!("relation {} declared twice", sig.name)));
                    }
                    set.sigs.push(sig);
                    State::Top
                } else if let Some(rest) = body.strip_prefix("rule ") {
                    let label = rest
                        .trim()
                        .strip_suffix(':')
                        .ok_or_else(|| err(line, col, "expected `rule LABEL:`".into()))?
                        .trim();
                    if label.is_empty() || label.contains(char::is_whitespace) {
                        return Err(err(line, col, "rule labels are single words".into()));
                    }
                    State::Premises(InferenceRule {
                        label: label.to_string(),
                        premises: Vec::new(),
                        conclusion: Formula {
                            relation: String::new(),
                            source: vec![],
                            target: vec![],
                        },
                        line,
                    })
                } else {
                    return Err(err(line, col, "expected `sig` or `rule`".into()));
                }
            }
            State::Premises(mut rule) => {
                if body.chars().all(|c| c == '-') && body.len() >= 3 {
                    State::Conclusion(rule)
                } else if let Some(text) = body.strip_prefix("side ") {
                    rule.premises.push(Premise::Side(text.trim().to_string()));
                    State::Premises(rule)
                } else if body.starts_with("rule ") || body.starts_with("sig ") {
                    return Err(err(line, col, format!("rule {} has no `---` separator", rule.label)));
                } else {
                    let f = Cursor::new(body, col, line, &prefix)?.formula()?;
                    check_formula(&set, &f).map_err(|m| err(line, col, m))?;
                    rule.premises.push(Premise::Eval(f));
                    State::Premises(rule)
                }
            }
            State::Conclusion(mut rule) => {
                let f = Cursor::new(body, col, line, &prefix)?.formula()?;
                check_formula(&set, &f).map_err(|m| err(line, col, m))?;
                rule.conclusion = f;
                if set.rules.iter().any(|r| r.label == rule.label) {
                    return Err(err(rule.line, 1, format!("rule {} defined twice", rule.label)));
                }
                set.rules.push(rule);
                State::Top
            }
        };
    }
    match state {
        State::Top => Ok(set),
        State::Premises(rule) => Err(err(
            last_line + 1,
            1,
            format!("rule {} has no `---` separator", rule.label),
        )),
        State::Conclusion(rule) => Err(err(last_line + 1, 1, format!("rule {} has no conclusion", rule.label))),
    }
}

pub fn parse_rules(text: &str) -> Result<RuleSet, RuleParseError> {
    parse_rules_named(text, "")
}

fn check_formula(set: &RuleSet, f: &Formula) -> Result<(), String> {
    let sig = set
        .sig(&f.relation)
        .ok_or_else(|| format!("relation {} is not declared", f.relation))?;
    match sig.explicitness(f.source.len(), f.target.len()) {
        Some(_) => Ok(()),
        None => Err(format!(
            "relation {} expects {} ⇒ {} components (flags {})",
            f.relation,
            sig.source.len(),
            sig.target.len(),
            if sig.is_flagged() { "optional" } else { "none" }
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
sig E: (e, σ) =E=> (v)
sig G: (c, σ, [δ :- ⇓]) =G=> (σ', [δ'])

rule F-Seq:
  (c1, σ) =G=> (σ')
  (c2, σ') =G=> σ''
  ---
  (seq(c1, c2), σ) =G=> (σ'')

rule E-Var:
  side x ∈ dom(σ)
  ---
  (x, σ) =E=> (lookup(σ, x))
";

    #[test]
    fn sample_parses() {
        let rs = parse_rules(SAMPLE).unwrap();
        assert_eq!(rs.sigs.len(), 2);
        assert_eq!(rs.rules.len(), 2);
        let g = rs.sig("G").unwrap();
        assert!(g.source[2].highlighted);
        assert_eq!(g.source[2].default, Some(Term::Const("down".into())));
        let seq = &rs.rules[0];
        assert_eq!(seq.eval_premises().count(), 2);
        assert_eq!(seq.conclusion.source[0].to_string(), "seq(c1, c2)");
        assert_eq!(rs.rules[1].side_conditions().collect::<Vec<_>>(), ["x ∈ dom(σ)"]);
        assert_eq!(seq.vars(), ["c1", "σ", "σ'", "c2", "σ''"]);
    }

    #[test]
    fn display_round_trips() {
        let rs = parse_rules(SAMPLE).unwrap();
        let again = parse_rules(&rs.to_string()).unwrap();
        assert_eq!(again.sigs, rs.sigs);
        assert_eq!(
            again
                .rules
                .iter()
                .map(|r| (&r.label, &r.premises, &r.conclusion))
                .collect::<Vec<_>>(),
            rs.rules
                .iter()
                .map(|r| (&r.label, &r.premises, &r.conclusion))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn missing_separator() {
        let text = "sig B: (c, σ) =B=> (σ')\nrule B-Skip:\n  (skip, σ) =B=> (σ)\n";
        let e = parse_rules(text).unwrap_err();
        assert!(e.message.contains("---"), "{e}");
        let text = "sig B: (c, σ) =B=> (σ')\nrule B-Skip:\n  (skip, σ) =B=> (σ)\nrule B-Other:\n";
        assert!(parse_rules(text).is_err());
    }

    #[test]
    fn undeclared_and_arity() {
        let e = parse_rules("rule R:\n  ---\n  (skip, σ) =B=> (σ)\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 3));
        assert!(e.message.contains("not declared"));
        let text = "sig G: (c, σ, [δ :- ⇓]) =G=> (σ', [δ'])\nrule R:\n  ---\n  (skip, σ, ⇓) =G=> (σ)\n";
        assert!(parse_rules(text).unwrap_err().message.contains("components"));
    }

    #[test]
    fn signature_invariants() {
        assert!(parse_rules("sig G: ([a], [b]) =G=> (c)").is_err());
        assert!(parse_rules("sig G: (a) =G=> ([b :- ⇓])").is_err());
        assert!(parse_rules("sig G: (a) =H=> (b)").is_err());
    }
}
