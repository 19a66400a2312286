//! The closed predicate language used by conditionals and display predicates.
//!
//! ```text
//! or      := and ( "||" and )*
//! and     := cmp ( "&&" cmp )*
//! cmp     := unary ( ("==" | "!=" | "<" | "<=" | ">" | ">=") unary
//!                  | "in" "[" ( literal ( "," literal )* )? "]" )?
//! unary   := "!" unary | primary
//! primary := literal | identifier | "(" or ")"
//! literal := string | number | true | false | null
//! ```
//!
//! Evaluation is total: an identifier without a binding is `null`, `null`
//! only supports `==`/`!=`, and ordered comparisons between mismatched types
//! are false. `===` and `!==` are accepted as spellings of `==` and `!=`.

use std::fmt;

use thiserror::Error;

use crate::json::{JsonValue, Number};
use crate::model::is_identifier;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("predicate syntax error at offset {position}: {message}")]
pub struct PredicateError {
    pub position: usize,
    pub message: String,
}

/// Runtime value of a predicate operand.
#[derive(Clone, Debug, PartialEq)]
pub enum PredValue {
    Null,
    Bool(bool),
    Number(f64),
    String(String),
    List(Vec<String>),
}

impl PredValue {
    pub fn truthy(&self) -> bool {
        match self {
            PredValue::Null => false,
            PredValue::Bool(b) => *b,
            PredValue::Number(n) => *n != 0.0,
            PredValue::String(s) => !s.is_empty(),
            PredValue::List(items) => !items.is_empty(),
        }
    }

    fn loose_eq(&self, other: &PredValue) -> bool {
        match (self, other) {
            (PredValue::Number(a), PredValue::Number(b)) => a == b,
            (a, b) => a == b,
        }
    }

    fn ordered(&self, other: &PredValue, op: CmpOp) -> bool {
        let ord = match (self, other) {
            (PredValue::Number(a), PredValue::Number(b)) => a.partial_cmp(b),
            (PredValue::String(a), PredValue::String(b)) => Some(a.cmp(b)),
            _ => None,
        };
        let Some(ord) = ord else { return false };
        match op {
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
            CmpOp::Eq | CmpOp::Ne => unreachable!("equality handled separately"),
        }
    }
}

impl From<&JsonValue> for PredValue {
    fn from(v: &JsonValue) -> Self {
        match v {
            JsonValue::Null => PredValue::Null,
            JsonValue::Bool(b) => PredValue::Bool(*b),
            JsonValue::Number(n) => PredValue::Number(n.get()),
            JsonValue::String(s) => PredValue::String(s.clone()),
            other => PredValue::String(other.to_compact_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Number(f64),
    String(String),
}

impl Literal {
    fn value(&self) -> PredValue {
        match self {
            Literal::Null => PredValue::Null,
            Literal::Bool(b) => PredValue::Bool(*b),
            Literal::Number(n) => PredValue::Number(*n),
            Literal::String(s) => PredValue::String(s.clone()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("null"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Number(n) => match Number::new(*n) {
                Some(n) => write!(f, "{n}"),
                None => f.write_str("null"),
            },
            Literal::String(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    match c {
                        '\'' => f.write_str("\\'")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("'")
            }
        }
    }
}

/// Predicate syntax tree.
#[derive(Clone, Debug, PartialEq)]
pub enum PredExpr {
    Literal(Literal),
    Ident(String),
    Not(Box<PredExpr>),
    And(Box<PredExpr>, Box<PredExpr>),
    Or(Box<PredExpr>, Box<PredExpr>),
    Compare(CmpOp, Box<PredExpr>, Box<PredExpr>),
    In(Box<PredExpr>, Vec<Literal>),
}

impl PredExpr {
    pub fn eval(&self, lookup: &dyn Fn(&str) -> PredValue) -> PredValue {
        match self {
            PredExpr::Literal(l) => l.value(),
            PredExpr::Ident(name) => lookup(name),
            PredExpr::Not(inner) => PredValue::Bool(!inner.eval(lookup).truthy()),
            PredExpr::And(a, b) => {
                PredValue::Bool(a.eval(lookup).truthy() && b.eval(lookup).truthy())
            }
            PredExpr::Or(a, b) => {
                PredValue::Bool(a.eval(lookup).truthy() || b.eval(lookup).truthy())
            }
            PredExpr::Compare(op, a, b) => {
                let (a, b) = (a.eval(lookup), b.eval(lookup));
                PredValue::Bool(match op {
                    CmpOp::Eq => a.loose_eq(&b),
                    CmpOp::Ne => !a.loose_eq(&b),
                    op => a.ordered(&b, *op),
                })
            }
            PredExpr::In(needle, options) => {
                let needle = needle.eval(lookup);
                PredValue::Bool(options.iter().any(|o| needle.loose_eq(&o.value())))
            }
        }
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PredExpr::Literal(_) => {}
            PredExpr::Ident(name) => out.push(name),
            PredExpr::Not(inner) => inner.collect_identifiers(out),
            PredExpr::And(a, b) | PredExpr::Or(a, b) | PredExpr::Compare(_, a, b) => {
                a.collect_identifiers(out);
                b.collect_identifiers(out);
            }
            PredExpr::In(needle, _) => needle.collect_identifiers(out),
        }
    }
}

impl fmt::Display for PredExpr {
    /// Fully parenthesized rendering; parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredExpr::Literal(l) => write!(f, "{l}"),
            PredExpr::Ident(name) => f.write_str(name),
            PredExpr::Not(inner) => write!(f, "!({inner})"),
            PredExpr::And(a, b) => write!(f, "({a}) && ({b})"),
            PredExpr::Or(a, b) => write!(f, "({a}) || ({b})"),
            PredExpr::Compare(op, a, b) => write!(f, "({a}) {} ({b})", op.symbol()),
            PredExpr::In(needle, options) => {
                write!(f, "({needle}) in [")?;
                for (i, o) in options.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{o}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A parsed predicate. Equality compares the source text.
#[derive(Clone, Debug)]
pub struct Predicate {
    source: String,
    ast: PredExpr,
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Predicate {
    pub fn parse(source: &str) -> Result<Predicate, PredicateError> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: source.len(),
        };
        let ast = parser.parse_or()?;
        if let Some(tok) = parser.peek() {
            return Err(PredicateError {
                position: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Predicate {
            source: source.to_string(),
            ast,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &PredExpr {
        &self.ast
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> PredValue) -> bool {
        self.ast.eval(lookup).truthy()
    }

    /// Identifiers in order of first appearance, without duplicates.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut all = Vec::new();
        self.ast.collect_identifiers(&mut all);
        let mut seen = Vec::new();
        for name in all {
            if !seen.contains(&name) {
                seen.push(name);
            }
        }
        seen
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Ident(String),
    Str(String),
    Num(f64),
    True,
    False,
    Null,
    In,
    Op(CmpOp),
    AndAnd,
    OrOr,
    Bang,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Minus,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Str(_) => "string literal".into(),
            TokenKind::Num(_) => "number".into(),
            TokenKind::True => "`true`".into(),
            TokenKind::False => "`false`".into(),
            TokenKind::Null => "`null`".into(),
            TokenKind::In => "`in`".into(),
            TokenKind::Op(op) => format!("`{}`", op.symbol()),
            TokenKind::AndAnd => "`&&`".into(),
            TokenKind::OrOr => "`||`".into(),
            TokenKind::Bang => "`!`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Minus => "`-`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, PredicateError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let err = |position: usize, message: &str| PredicateError {
        position,
        message: message.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let two = |s: &str| src[i..].starts_with(s);
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => {
                i += 1;
                TokenKind::LParen
            }
            b')' => {
                i += 1;
                TokenKind::RParen
            }
            b'[' => {
                i += 1;
                TokenKind::LBracket
            }
            b']' => {
                i += 1;
                TokenKind::RBracket
            }
            b',' => {
                i += 1;
                TokenKind::Comma
            }
            b'-' => {
                i += 1;
                TokenKind::Minus
            }
            b'=' if two("===") => {
                i += 3;
                TokenKind::Op(CmpOp::Eq)
            }
            b'=' if two("==") => {
                i += 2;
                TokenKind::Op(CmpOp::Eq)
            }
            b'!' if two("!==") => {
                i += 3;
                TokenKind::Op(CmpOp::Ne)
            }
            b'!' if two("!=") => {
                i += 2;
                TokenKind::Op(CmpOp::Ne)
            }
            b'!' => {
                i += 1;
                TokenKind::Bang
            }
            b'<' if two("<=") => {
                i += 2;
                TokenKind::Op(CmpOp::Le)
            }
            b'<' => {
                i += 1;
                TokenKind::Op(CmpOp::Lt)
            }
            b'>' if two(">=") => {
                i += 2;
                TokenKind::Op(CmpOp::Ge)
            }
            b'>' => {
                i += 1;
                TokenKind::Op(CmpOp::Gt)
            }
            b'&' if two("&&") => {
                i += 2;
                TokenKind::AndAnd
            }
            b'|' if two("||") => {
                i += 2;
                TokenKind::OrOr
            }
            b'\'' | b'"' => {
                let quote = c as char;
                let mut out = String::new();
                let mut chars = src[i + 1..].char_indices();
                let mut closed = None;
                while let Some((off, ch)) = chars.next() {
                    match ch {
                        '\\' => match chars.next() {
                            Some((_, 'n')) => out.push('\n'),
                            Some((_, 't')) => out.push('\t'),
                            Some((_, other)) => out.push(other),
                            None => break,
                        },
                        ch if ch == quote => {
                            closed = Some(i + 1 + off + 1);
                            break;
                        }
                        ch => out.push(ch),
                    }
                }
                i = closed.ok_or_else(|| err(start, "unterminated string literal"))?;
                TokenKind::Str(out)
            }
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_digit()
                        || bytes[j] == b'.'
                        || bytes[j] == b'e'
                        || bytes[j] == b'E'
                        || ((bytes[j] == b'+' || bytes[j] == b'-')
                            && matches!(bytes[j - 1], b'e' | b'E')))
                {
                    j += 1;
                }
                let text = &src[i..j];
                let n: f64 = text
                    .parse()
                    .ok()
                    .filter(|n: &f64| n.is_finite())
                    .ok_or_else(|| err(start, &format!("invalid number `{text}`")))?;
                i = j;
                TokenKind::Num(n)
            }
            c if c == b'_' || c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < bytes.len() && (bytes[j] == b'_' || bytes[j].is_ascii_alphanumeric()) {
                    j += 1;
                }
                let word = &src[i..j];
                i = j;
                match word {
                    "true" => TokenKind::True,
                    "false" => TokenKind::False,
                    "null" => TokenKind::Null,
                    "in" => TokenKind::In,
                    w => {
                        debug_assert!(is_identifier(w));
                        TokenKind::Ident(w.to_string())
                    }
                }
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(start, &format!("unexpected character `{ch}`")));
            }
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn error(&self, message: impl Into<String>) -> PredicateError {
        PredicateError {
            position: self.offset(),
            message: message.into(),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), PredicateError> {
        if self.peek_kind() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", kind.describe())))
        }
    }

    fn unexpected(&self, context: &str) -> PredicateError {
        match self.peek() {
            Some(tok) => self.error(format!("{context}, found {}", tok.kind.describe())),
            None => self.error(format!("{context}, found end of input")),
        }
    }

    fn parse_or(&mut self) -> Result<PredExpr, PredicateError> {
        let mut left = self.parse_and()?;
        while self.peek_kind() == Some(&TokenKind::OrOr) {
            self.pos += 1;
            let right = self.parse_and()?;
            left = PredExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<PredExpr, PredicateError> {
        let mut left = self.parse_cmp()?;
        while self.peek_kind() == Some(&TokenKind::AndAnd) {
            self.pos += 1;
            let right = self.parse_cmp()?;
            left = PredExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_cmp(&mut self) -> Result<PredExpr, PredicateError> {
        let left = self.parse_unary()?;
        match self.peek_kind() {
            Some(TokenKind::Op(op)) => {
                let op = *op;
                self.pos += 1;
                let right = self.parse_unary()?;
                Ok(PredExpr::Compare(op, Box::new(left), Box::new(right)))
            }
            Some(TokenKind::In) => {
                self.pos += 1;
                self.expect(TokenKind::LBracket)?;
                let mut options = Vec::new();
                if self.peek_kind() != Some(&TokenKind::RBracket) {
                    loop {
                        options.push(self.parse_literal()?);
                        if self.peek_kind() == Some(&TokenKind::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::RBracket)?;
                Ok(PredExpr::In(Box::new(left), options))
            }
            _ => Ok(left),
        }
    }

    fn parse_unary(&mut self) -> Result<PredExpr, PredicateError> {
        if self.peek_kind() == Some(&TokenKind::Bang) {
            self.pos += 1;
            return Ok(PredExpr::Not(Box::new(self.parse_unary()?)));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<PredExpr, PredicateError> {
        match self.peek_kind() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.parse_or()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(PredExpr::Ident(name))
            }
            _ => Ok(PredExpr::Literal(self.parse_literal()?)),
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, PredicateError> {
        let lit = match self.peek_kind() {
            Some(TokenKind::Str(s)) => Literal::String(s.clone()),
            Some(TokenKind::Num(n)) => Literal::Number(*n),
            Some(TokenKind::True) => Literal::Bool(true),
            Some(TokenKind::False) => Literal::Bool(false),
            Some(TokenKind::Null) => Literal::Null,
            Some(TokenKind::Minus) => {
                self.pos += 1;
                return match self.peek_kind() {
                    Some(TokenKind::Num(n)) => {
                        let n = -*n;
                        self.pos += 1;
                        Ok(Literal::Number(n))
                    }
                    _ => Err(self.unexpected("expected number after `-`")),
                };
            }
            _ => return Err(self.unexpected("expected a value")),
        };
        self.pos += 1;
        Ok(lit)
    }
}
