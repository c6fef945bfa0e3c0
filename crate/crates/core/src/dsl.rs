//! Text syntax for selection rules.
//!
//! ```text
//! rule     := impl_seq
//! impl_seq := or_expr (("->" | "=>") impl_seq)?        right-associative
//! or_expr  := and_expr ("or" and_expr)*
//! and_expr := not_expr ("and" not_expr)*
//! not_expr := "not" not_expr | atom
//! atom     := unit | "(" rule ")"
//! unit     := "select" counts "of" varset
//! counts   := "{" int ("," int)* "}" | int ".." int
//! varset   := "{" name ("," name)* "}" | "{" "}"
//! ```
//!
//! Rule files may contain `#` line comments and a `vars: A, B, C` line
//! declaring the universe.

use crate::error::{Error, ParseError, Result, SourceSpan};
use crate::model::{ConstraintSet, Universe, VarSet};
use crate::rule::RuleExpr;

/// Deepest parenthesis nesting accepted by the parser.
pub const MAX_NESTING: usize = 256;

/// Widest `lo..hi` count range accepted.
const MAX_RANGE_WIDTH: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    DotDot,
    Arrow,
    DoubleArrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::DoubleArrow => "`=>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn error(span: SourceSpan, message: impl Into<String>, expected: &[&str]) -> ParseError {
    ParseError {
        span,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |tok: Tok| Token {
            tok,
            span: SourceSpan::new(start, start + 1),
        };
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'{' => {
                tokens.push(single(Tok::LBrace));
                i += 1;
            }
            b'}' => {
                tokens.push(single(Tok::RBrace));
                i += 1;
            }
            b'(' => {
                tokens.push(single(Tok::LParen));
                i += 1;
            }
            b')' => {
                tokens.push(single(Tok::RParen));
                i += 1;
            }
            b',' => {
                tokens.push(single(Tok::Comma));
                i += 1;
            }
            b'.' if bytes.get(i + 1) == Some(&b'.') => {
                tokens.push(Token {
                    tok: Tok::DotDot,
                    span: SourceSpan::new(i, i + 2),
                });
                i += 2;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                tokens.push(Token {
                    tok: Tok::Arrow,
                    span: SourceSpan::new(i, i + 2),
                });
                i += 2;
            }
            b'=' if bytes.get(i + 1) == Some(&b'>') => {
                tokens.push(Token {
                    tok: Tok::DoubleArrow,
                    span: SourceSpan::new(i, i + 2),
                });
                i += 2;
            }
            b'-' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let mut end = i + 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                return Err(error(
                    SourceSpan::new(i, end),
                    "counts must be non-negative",
                    &["non-negative integer"],
                ));
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if bytes.get(i) == Some(&b'.') && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    let mut end = i + 1;
                    while end < bytes.len() && bytes[end].is_ascii_digit() {
                        end += 1;
                    }
                    return Err(error(
                        SourceSpan::new(start, end),
                        "counts must be integers",
                        &["integer"],
                    ));
                }
                let span = SourceSpan::new(start, i);
                let value = text[start..i]
                    .parse::<u32>()
                    .map_err(|_| error(span, "count is too large", &["integer below 2^32"]))?;
                tokens.push(Token {
                    tok: Tok::Int(value),
                    span,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    span: SourceSpan::new(start, i),
                });
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(error(
                    SourceSpan::new(i, i + ch.len_utf8()),
                    format!("unexpected character `{ch}`"),
                    &["`select`", "`not`", "`(`", "`{`", "name", "integer"],
                ));
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(text.len(), text.len()),
    });
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    universe: &'a Universe,
    nesting: usize,
}

#[derive(Clone, Copy)]
enum Arrow {
    Implies,
    Sequential,
}

impl<'a> Parser<'a> {
    fn new(text: &str, universe: &'a Universe) -> Result<Self> {
        Ok(Parser {
            tokens: lex(text)?,
            pos: 0,
            universe,
            nesting: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn unexpected(&self, expected: &[&str]) -> Error {
        let t = self.peek();
        error(t.span, format!("unexpected {}", t.tok.describe()), expected).into()
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[expected]))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn parse_all(&mut self) -> Result<RuleExpr> {
        let expr = self.rule()?;
        if self.peek().tok != Tok::Eof {
            return Err(self.unexpected(&["end of input", "`->`", "`=>`", "`or`", "`and`"]));
        }
        Ok(expr)
    }

    fn rule(&mut self) -> Result<RuleExpr> {
        let mut operands = vec![self.or_expr()?];
        let mut arrows = Vec::new();
        loop {
            let arrow = match self.peek().tok {
                Tok::Arrow => Arrow::Implies,
                Tok::DoubleArrow => Arrow::Sequential,
                _ => break,
            };
            self.bump();
            arrows.push(arrow);
            operands.push(self.or_expr()?);
        }
        let mut acc = operands.pop().unwrap();
        while let Some(arrow) = arrows.pop() {
            let left = operands.pop().unwrap();
            acc = match arrow {
                Arrow::Implies => RuleExpr::implies(left, acc),
                Arrow::Sequential => RuleExpr::sequential(left, acc),
            };
        }
        Ok(acc)
    }

    fn or_expr(&mut self) -> Result<RuleExpr> {
        let mut acc = self.and_expr()?;
        while self.is_keyword("or") {
            self.bump();
            acc = RuleExpr::or(acc, self.and_expr()?);
        }
        Ok(acc)
    }

    fn and_expr(&mut self) -> Result<RuleExpr> {
        let mut acc = self.not_expr()?;
        while self.is_keyword("and") {
            self.bump();
            acc = RuleExpr::and(acc, self.not_expr()?);
        }
        Ok(acc)
    }

    fn not_expr(&mut self) -> Result<RuleExpr> {
        let mut nots = 0usize;
        while self.is_keyword("not") {
            self.bump();
            nots += 1;
        }
        let mut expr = self.atom()?;
        for _ in 0..nots {
            expr = RuleExpr::not(expr);
        }
        Ok(expr)
    }

    fn atom(&mut self) -> Result<RuleExpr> {
        if self.is_keyword("select") {
            return self.unit();
        }
        if self.peek().tok == Tok::LParen {
            let open = self.bump();
            self.nesting += 1;
            if self.nesting > MAX_NESTING {
                return Err(error(open.span, "parentheses nested too deeply", &["`select`"]).into());
            }
            let inner = self.rule()?;
            self.expect(Tok::RParen, "`)`")?;
            self.nesting -= 1;
            return Ok(inner);
        }
        Err(self.unexpected(&["`select`", "`not`", "`(`"]))
    }

    fn unit(&mut self) -> Result<RuleExpr> {
        self.expect_keyword("select")?;
        let counts = self.counts()?;
        self.expect_keyword("of")?;
        let scope = self.varset()?;
        Ok(RuleExpr::unit(scope, counts))
    }

    fn int(&mut self) -> Result<(u32, SourceSpan)> {
        match self.peek().tok {
            Tok::Int(n) => {
                let span = self.bump().span;
                Ok((n, span))
            }
            _ => Err(self.unexpected(&["non-negative integer"])),
        }
    }

    fn counts(&mut self) -> Result<ConstraintSet> {
        if self.peek().tok == Tok::LBrace {
            self.bump();
            let mut counts = vec![self.int()?.0];
            while self.peek().tok == Tok::Comma {
                self.bump();
                counts.push(self.int()?.0);
            }
            self.expect(Tok::RBrace, "`}`")?;
            return ConstraintSet::new(counts);
        }
        if let Tok::Int(_) = self.peek().tok {
            let (lo, lo_span) = self.int()?;
            self.expect(Tok::DotDot, "`..`")?;
            let (hi, hi_span) = self.int()?;
            let span = SourceSpan::new(lo_span.start, hi_span.end);
            if lo > hi {
                return Err(error(span, "empty count range", &["range with lower bound <= upper bound"]).into());
            }
            if hi - lo >= MAX_RANGE_WIDTH {
                return Err(error(span, "count range too wide", &["narrower range"]).into());
            }
            return ConstraintSet::range(lo, hi);
        }
        Err(self.unexpected(&["`{`", "integer"]))
    }

    fn name(&mut self) -> Result<usize> {
        match &self.peek().tok {
            Tok::Ident(name) => {
                let name = name.clone();
                let span = self.bump().span;
                self.universe
                    .index_of(&name)
                    .ok_or(Error::UnknownVariable { name, span: Some(span) })
            }
            _ => Err(self.unexpected(&["variable name"])),
        }
    }

    fn varset(&mut self) -> Result<VarSet> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut set = VarSet::EMPTY;
        if self.peek().tok == Tok::RBrace {
            self.bump();
            return Ok(set);
        }
        set = set.with(self.name()?);
        while self.peek().tok == Tok::Comma {
            self.bump();
            set = set.with(self.name()?);
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(set)
    }
}

/// Parses rule text against a universe.
pub fn parse_rule(text: &str, u: &Universe) -> Result<RuleExpr> {
    Parser::new(text, u)?.parse_all()
}

/// Parses a whitespace-separated list of brace sets such as `{A, B}` `{}`.
pub fn parse_set_list(text: &str, u: &Universe) -> Result<Vec<VarSet>> {
    let mut p = Parser::new(text, u)?;
    let mut sets = Vec::new();
    while p.peek().tok != Tok::Eof {
        if p.peek().tok != Tok::LBrace {
            return Err(p.unexpected(&["`{`", "end of input"]));
        }
        sets.push(p.varset()?);
        if p.peek().tok == Tok::Comma {
            p.bump();
        }
    }
    Ok(sets)
}

/// Splits a `vars:` preamble line out of file text.
///
/// The preamble line is blanked rather than removed so byte offsets in the
/// returned text still match the original.
pub fn split_preamble(text: &str) -> (Option<Vec<String>>, String) {
    let mut names = None;
    let mut body = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        let content = line.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if names.is_none() {
            if let Some(rest) = trimmed.strip_prefix("vars:") {
                names = Some(
                    rest.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect(),
                );
                body.extend(line.chars().map(|c| if c == '\n' { '\n' } else { ' ' }));
                continue;
            }
        }
        body.push_str(line);
    }
    (names, body)
}

/// Parses a comma-separated variable list such as `A, B1, B2`.
pub fn parse_var_list(list: &str) -> Result<Universe> {
    Universe::new(list.split(',').map(str::trim).filter(|s| !s.is_empty()))
}

/// Resolves the universe from an explicit override or a file preamble.
pub(crate) fn resolve_universe(
    declared: Option<Vec<String>>,
    given: Option<&Universe>,
) -> Result<Universe> {
    match (given, declared) {
        (Some(u), _) => Ok(u.clone()),
        (None, Some(names)) => Universe::new(names),
        (None, None) => Err(Error::NoUniverse),
    }
}

/// A parsed rule file: the universe it is written against and its rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleFile {
    pub universe: Universe,
    pub rule: RuleExpr,
}

/// Parses rule-file text; `given` takes precedence over a `vars:` line.
pub fn parse_rule_file(text: &str, given: Option<&Universe>) -> Result<RuleFile> {
    let (declared, body) = split_preamble(text);
    let universe = resolve_universe(declared, given)?;
    let rule = parse_rule(&body, &universe)?;
    Ok(RuleFile { universe, rule })
}

const PREC_ARROW: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_NOT: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &RuleExpr) -> u8 {
    match e {
        RuleExpr::Unit(_) => PREC_ATOM,
        RuleExpr::Not(_) => PREC_NOT,
        RuleExpr::And(..) => PREC_AND,
        RuleExpr::Or(..) => PREC_OR,
        RuleExpr::Implies(..) | RuleExpr::Sequential(..) => PREC_ARROW,
    }
}

/// Canonical rule text: minimal parentheses, counts ascending, names in
/// universe order.
pub fn format_rule(expr: &RuleExpr, u: &Universe) -> String {
    let mut out = String::new();
    write_rule(expr, u, &mut out);
    out
}

fn write_child(child: &RuleExpr, parens: bool, u: &Universe, out: &mut String) {
    if parens {
        out.push('(');
        write_rule(child, u, out);
        out.push(')');
    } else {
        write_rule(child, u, out);
    }
}

fn write_rule(expr: &RuleExpr, u: &Universe, out: &mut String) {
    match expr {
        RuleExpr::Unit(unit) => {
            out.push_str("select {");
            let counts: Vec<String> = unit.counts.iter().map(|c| c.to_string()).collect();
            out.push_str(&counts.join(","));
            out.push_str("} of ");
            out.push_str(&u.display_set(unit.scope));
        }
        RuleExpr::Not(c) => {
            out.push_str("not ");
            write_child(c, precedence(c) < PREC_NOT, u, out);
        }
        RuleExpr::And(l, r) | RuleExpr::Or(l, r) => {
            let (prec, word) = if matches!(expr, RuleExpr::And(..)) {
                (PREC_AND, " and ")
            } else {
                (PREC_OR, " or ")
            };
            write_child(l, precedence(l) < prec, u, out);
            out.push_str(word);
            write_child(r, precedence(r) <= prec, u, out);
        }
        RuleExpr::Implies(l, r) | RuleExpr::Sequential(l, r) => {
            let arrow = if matches!(expr, RuleExpr::Implies(..)) {
                " -> "
            } else {
                " => "
            };
            write_child(l, precedence(l) <= PREC_ARROW, u, out);
            out.push_str(arrow);
            write_child(r, false, u, out);
        }
    }
}

/// Rule text with a `vars:` preamble, suitable for a rule file.
pub fn format_rule_file(expr: &RuleExpr, u: &Universe) -> String {
    format!("vars: {}\n{}\n", u.names().join(", "), format_rule(expr, u))
}
