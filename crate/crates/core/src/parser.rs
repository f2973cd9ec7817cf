//! Concrete syntax for While programs (`.whl` files) and for value, store and
//! input-stream literals.
//!
//! ```text
//! cmd    ::= simple [ ";" cmd ]                       right associative
//! simple ::= "skip" | "alloc" x | x ":=" expr
//!          | "if" expr block [ "else" block ]         missing else is skip
//!          | "while" expr block | "throw" value
//!          | "try" block "catch" block | "(" cmd ")"
//! block  ::= "{" cmd "}"
//! expr   ::= term { ("+" | "-") term }
//! term   ::= atom { "*" atom }
//! atom   ::= nat | "null" | x | "input" | "(" expr ")"
//! ```
//!
//! `#` starts a comment running to the end of the line.

use std::fmt;

use thiserror::Error;

use crate::syntax::{BinOp, Cmd, Expr, Ident, Store, Val};

pub const KEYWORDS: &[&str] = &[
    "skip", "alloc", "if", "else", "while", "throw", "try", "catch", "input", "null",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// Byte offset into the source, at most the source length.
    pub offset: usize,
    pub message: String,
}

/// Program text together with where it came from, for diagnostics.
#[derive(Debug, Clone)]
pub struct SourceProgram {
    pub text: String,
    pub origin: String,
}

impl SourceProgram {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceProgram {
            text: text.into(),
            origin: origin.into(),
        }
    }

    pub fn parse(&self) -> Result<Cmd, ParseError> {
        parse_cmd(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn error_at(src: &str, offset: usize, message: impl Into<String>) -> ParseError {
    let offset = offset.min(src.len());
    let (line, column) = position(src, offset);
    ParseError {
        line,
        column,
        offset,
        message: message.into(),
    }
}

const SYMBOLS: &[&str] = &[
    ":=", "->", "↦", ";", "+", "-", "*", "(", ")", "{", "}", ",", ":", "[", "]",
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut i = 0;
    let bytes = src.as_bytes();
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            while i < src.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i]
                .parse::<u64>()
                .map_err(|_| error_at(src, start, "numeric literal out of range"))?;
            out.push(Spanned {
                tok: Tok::Nat(n),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < src.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(src[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                out.push(Spanned {
                    tok: Tok::Sym(s),
                    offset: i,
                });
                i += s.len();
            }
            None => return Err(error_at(src, i, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        offset: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Spanned>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        Ok(Parser {
            src,
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        error_at(self.src, self.offset(), message)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.err(format!("expected {wanted}, found {}", self.peek()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if KEYWORDS.contains(&name.as_str()) => {
                Err(self.err(format!("reserved word `{name}` cannot be used as a variable")))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Ident::new(name))
            }
            _ => Err(self.unexpected("a variable")),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn cmd(&mut self) -> Result<Cmd, ParseError> {
        let first = stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.simple())?;
        if self.is_sym(";") {
            self.bump();
            let rest = self.cmd()?;
            Ok(Cmd::seq(first, rest))
        } else {
            Ok(first)
        }
    }

    fn block(&mut self) -> Result<Cmd, ParseError> {
        self.expect_sym("{")?;
        let c = self.cmd()?;
        self.expect_sym("}")?;
        Ok(c)
    }

    fn simple(&mut self) -> Result<Cmd, ParseError> {
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                let c = self.cmd()?;
                self.expect_sym(")")?;
                Ok(c)
            }
            Tok::Ident(kw) => match kw.as_str() {
                "skip" => {
                    self.bump();
                    Ok(Cmd::Skip)
                }
                "alloc" => {
                    self.bump();
                    Ok(Cmd::Alloc(self.ident()?))
                }
                "if" => {
                    self.bump();
                    let e = self.expr()?;
                    let then = self.block()?;
                    let other = if self.is_kw("else") {
                        self.bump();
                        self.block()?
                    } else {
                        Cmd::Skip
                    };
                    Ok(Cmd::if_(e, then, other))
                }
                "while" => {
                    self.bump();
                    let e = self.expr()?;
                    let body = self.block()?;
                    Ok(Cmd::while_(e, body))
                }
                "throw" => {
                    self.bump();
                    Ok(Cmd::Throw(self.value()?))
                }
                "try" => {
                    self.bump();
                    let body = self.block()?;
                    self.expect_kw("catch")?;
                    let handler = self.block()?;
                    Ok(Cmd::catch(body, handler))
                }
                _ => {
                    let x = self.ident()?;
                    self.expect_sym(":=")?;
                    let e = self.expr()?;
                    Ok(Cmd::Assign(x, e))
                }
            },
            _ => Err(self.unexpected("a command")),
        }
    }

    fn value(&mut self) -> Result<Val, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Val::Nat(n))
            }
            Tok::Ident(ref s) if s == "null" => {
                self.bump();
                Ok(Val::Null)
            }
            _ => Err(self.unexpected("a value (natural number or `null`)")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bop(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while self.is_sym("*") {
            self.bump();
            let rhs = self.atom()?;
            lhs = Expr::mul(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Expr::nat(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.expr())?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(ref s) if s == "null" => {
                self.bump();
                Ok(Expr::Lit(Val::Null))
            }
            Tok::Ident(ref s) if s == "input" => {
                self.bump();
                Ok(Expr::Input)
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            _ => Err(self.unexpected("an expression")),
        }
    }
}

pub fn parse_cmd(text: &str) -> Result<Cmd, ParseError> {
    let mut p = Parser::new(text)?;
    let c = p.cmd()?;
    p.finish()?;
    Ok(c)
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_val(text: &str) -> Result<Val, ParseError> {
    let mut p = Parser::new(text)?;
    let v = p.value()?;
    p.finish()?;
    Ok(v)
}

/// Comma separated values, e.g. `1,0,null`. Blank text is the empty stream.
pub fn parse_stream(text: &str) -> Result<Vec<Val>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    if *p.peek() == Tok::Eof {
        return Ok(out);
    }
    let bracketed = p.is_sym("[");
    if bracketed {
        p.bump();
    }
    if !(bracketed && p.is_sym("]")) {
        loop {
            out.push(p.value()?);
            if p.is_sym(",") {
                p.bump();
            } else {
                break;
            }
        }
    }
    if bracketed {
        p.expect_sym("]")?;
    }
    p.finish()?;
    Ok(out)
}

/// Store literal such as `{x↦1, y↦null}`; `->` and `:` are accepted in place of `↦`.
pub fn parse_store(text: &str) -> Result<Store, ParseError> {
    let mut p = Parser::new(text)?;
    p.expect_sym("{")?;
    let mut pairs = Vec::new();
    if !p.is_sym("}") {
        loop {
            let x = p.ident()?;
            if p.is_sym("↦") || p.is_sym("->") || p.is_sym(":") {
                p.bump();
            } else {
                return Err(p.unexpected("`↦`"));
            }
            pairs.push((x, p.value()?));
            if p.is_sym(",") {
                p.bump();
            } else {
                break;
            }
        }
    }
    p.expect_sym("}")?;
    p.finish()?;
    Ok(pairs.into_iter().collect())
}

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        BinOp::Mul => 2,
    }
}

fn write_expr(e: &Expr, min_prec: u8, out: &mut String) {
    match e {
        Expr::Lit(v) => out.push_str(&v.to_string()),
        Expr::Var(x) => out.push_str(x.as_str()),
        Expr::Input => out.push_str("input"),
        Expr::Bop(op, l, r) => {
            let p = prec(*op);
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(l, p, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            // binary operators associate to the left
            write_expr(r, p + 1, out);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, 0, &mut out);
    out
}

fn write_cmd(c: &Cmd, out: &mut String) {
    match c {
        Cmd::Skip => out.push_str("skip"),
        Cmd::Alloc(x) => {
            out.push_str("alloc ");
            out.push_str(x.as_str());
        }
        Cmd::Assign(x, e) => {
            out.push_str(x.as_str());
            out.push_str(" := ");
            write_expr(e, 0, out);
        }
        Cmd::Seq(a, b) => {
            if matches!(**a, Cmd::Seq(..)) {
                out.push('(');
                write_cmd(a, out);
                out.push(')');
            } else {
                write_cmd(a, out);
            }
            out.push_str("; ");
            write_cmd(b, out);
        }
        Cmd::If(e, a, b) => {
            out.push_str("if ");
            write_expr(e, 0, out);
            out.push_str(" { ");
            write_cmd(a, out);
            out.push_str(" } else { ");
            write_cmd(b, out);
            out.push_str(" }");
        }
        Cmd::While(e, body) => {
            out.push_str("while ");
            write_expr(e, 0, out);
            out.push_str(" { ");
            write_cmd(body, out);
            out.push_str(" }");
        }
        Cmd::Throw(v) => {
            out.push_str("throw ");
            out.push_str(&v.to_string());
        }
        Cmd::Catch(a, b) => {
            out.push_str("try { ");
            write_cmd(a, out);
            out.push_str(" } catch { ");
            write_cmd(b, out);
            out.push_str(" }");
        }
    }
}

/// Single-line canonical rendering; `parse_cmd` inverts it.
pub fn pretty_cmd(c: &Cmd) -> String {
    let mut out = String::new();
    write_cmd(c, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seq_of_skips() {
        assert_eq!(parse_cmd("skip; skip").unwrap(), Cmd::seq(Cmd::Skip, Cmd::Skip));
    }

    #[test]
    fn while_one_skip() {
        assert_eq!(
            parse_cmd("while 1 { skip }").unwrap(),
            Cmd::while_(Expr::nat(1), Cmd::Skip)
        );
        assert_eq!(pretty_cmd(&Cmd::while_(Expr::nat(1), Cmd::Skip)), "while 1 { skip }");
        assert_eq!(pretty_cmd(&Cmd::Skip), "skip");
    }

    #[test]
    fn counter_loop_shape() {
        let c = parse_cmd("alloc x; x := 0; while 1 { x := x + 1 }").unwrap();
        assert_eq!(c, crate::syntax::counter_loop());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 + 2 * 3 - 4").unwrap();
        assert_eq!(
            e,
            Expr::sub(
                Expr::add(Expr::nat(1), Expr::mul(Expr::nat(2), Expr::nat(3))),
                Expr::nat(4)
            )
        );
        let e = Expr::sub(Expr::nat(5), Expr::sub(Expr::nat(3), Expr::nat(1)));
        assert_eq!(pretty_expr(&e), "5 - (3 - 1)");
        assert_eq!(parse_expr(&pretty_expr(&e)).unwrap(), e);
    }

    #[test]
    fn left_nested_sequence_is_parenthesised() {
        let c = crate::syntax::diverge_then_stuck();
        let left = Cmd::seq(Cmd::seq(Cmd::Skip, Cmd::Skip), Cmd::Skip);
        assert_eq!(pretty_cmd(&left), "(skip; skip); skip");
        assert_eq!(parse_cmd(&pretty_cmd(&left)).unwrap(), left);
        assert_eq!(parse_cmd("(while 1 { skip }); alloc x; x := x + 0").unwrap(), c);
    }

    #[test]
    fn exceptions_and_input() {
        let c = parse_cmd("try { throw 7; x := 9 } catch { skip }").unwrap();
        assert_eq!(
            c,
            Cmd::catch(
                Cmd::seq(Cmd::Throw(Val::Nat(7)), Cmd::assign("x", Expr::nat(9))),
                Cmd::Skip
            )
        );
        assert_eq!(
            parse_cmd("if input { x := 0 } else { skip }; while 1 { skip }").unwrap(),
            crate::syntax::input_choice()
        );
        assert_eq!(parse_cmd("throw null").unwrap(), Cmd::Throw(Val::Null));
    }

    #[test]
    fn missing_else_is_skip() {
        assert_eq!(
            parse_cmd("if x { skip }").unwrap(),
            Cmd::if_(Expr::var("x"), Cmd::Skip, Cmd::Skip)
        );
    }

    #[test]
    fn comments_are_ignored() {
        let c = parse_cmd("# factorial\nalloc x; # allocate\nx := 1").unwrap();
        assert_eq!(c, Cmd::seq(Cmd::alloc("x"), Cmd::assign("x", Expr::nat(1))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_cmd("skip;\n  while := 3").unwrap_err();
        assert_eq!((e.line, e.column), (2, 9));
        let e = parse_cmd("alloc if").unwrap_err();
        assert!(e.message.contains("reserved"), "{e}");
        let e = parse_cmd("skip;").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(parse_cmd("throw x").is_err());
        assert!(parse_cmd("x = 1").is_err());
        assert!(parse_cmd("").is_err());
        assert!(parse_cmd("while 1 skip").is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(parse_val("null").unwrap(), Val::Null);
        assert_eq!(
            parse_stream("1,0,null").unwrap(),
            vec![Val::Nat(1), Val::Nat(0), Val::Null]
        );
        assert_eq!(parse_stream("").unwrap(), vec![]);
        assert_eq!(parse_stream("[]").unwrap(), vec![]);
        assert_eq!(parse_stream("[2, 3]").unwrap(), vec![Val::Nat(2), Val::Nat(3)]);
        let s = parse_store("{c↦0, r->24}").unwrap();
        assert_eq!(s.to_string(), "{c↦0, r↦24}");
        assert_eq!(parse_store("{}").unwrap(), Store::new());
    }
}
