//! Propositional formulas and their textual notation.
//!
//! Grammar (lowest to highest precedence, whitespace insignificant):
//!
//! ```text
//! expr   := iff
//! iff    := imp ( "<=>" imp )*            left associative
//! imp    := or ( "=>" imp )?              right associative
//! or     := xor ( "|" xor )*
//! xor    := and ( "^" and )*              n-ary exclusive-or
//! and    := unary ( "&" unary )*
//! unary  := "!" unary | atom
//! atom   := "0" | "1" | ident | "(" expr ")"
//!         | "ite" "(" expr "," expr "," expr ")"
//!         | "count" "(" int "," int ";" expr ( "," expr )* ")"
//! ident  := [A-Za-z_][A-Za-z0-9_.]*
//! ```
//!
//! `count(lo, hi; a, b, ...)` holds when between `lo` and `hi` (inclusive)
//! of its operands hold; `count(1, 1; ...)` is "exactly one".

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// Parity of the operands (left-associated binary xor chain).
    Xor(Vec<Formula>),
    Ite(Box<Formula>, Box<Formula>, Box<Formula>),
    /// Between `min` and `max` operands are true.
    Count {
        min: usize,
        max: usize,
        operands: Vec<Formula>,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character {found:?} at offset {offset}")]
    UnexpectedChar { offset: usize, found: char },
    #[error("unexpected {found} at offset {offset}, expected {expected}")]
    Unexpected {
        offset: usize,
        found: String,
        expected: &'static str,
    },
    #[error("invalid count bounds {min}..{max}")]
    CountBounds { min: usize, max: usize },
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn ite(c: Formula, t: Formula, e: Formula) -> Formula {
        Formula::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn exactly_one(operands: Vec<Formula>) -> Formula {
        Formula::Count {
            min: 1,
            max: 1,
            operands,
        }
    }

    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let f = p.iff()?;
        match p.peek() {
            Tok::End => Ok(f),
            _ => Err(p.unexpected("end of input")),
        }
    }

    /// Variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.collect_vars(&mut seen, &mut out);
        out
    }

    fn collect_vars(&self, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(v) => {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
            Formula::Not(a) => a.collect_vars(seen, out),
            Formula::And(xs) | Formula::Or(xs) | Formula::Xor(xs) => {
                xs.iter().for_each(|x| x.collect_vars(seen, out))
            }
            Formula::Count { operands, .. } => operands.iter().for_each(|x| x.collect_vars(seen, out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_vars(seen, out);
                b.collect_vars(seen, out);
            }
            Formula::Ite(c, t, e) => {
                c.collect_vars(seen, out);
                t.collect_vars(seen, out);
                e.collect_vars(seen, out);
            }
        }
    }

    /// Evaluates the formula under `value`, which must answer every variable.
    pub fn eval<F: Fn(&str) -> bool + ?Sized>(&self, value: &F) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(v) => value(v),
            Formula::Not(a) => !a.eval(value),
            Formula::And(xs) => xs.iter().all(|x| x.eval(value)),
            Formula::Or(xs) => xs.iter().any(|x| x.eval(value)),
            Formula::Xor(xs) => xs.iter().fold(false, |acc, x| acc ^ x.eval(value)),
            Formula::Implies(a, b) => !a.eval(value) || b.eval(value),
            Formula::Iff(a, b) => a.eval(value) == b.eval(value),
            Formula::Ite(c, t, e) => {
                if c.eval(value) {
                    t.eval(value)
                } else {
                    e.eval(value)
                }
            }
            Formula::Count { min, max, operands } => {
                let k = operands.iter().filter(|x| x.eval(value)).count();
                *min <= k && k <= *max
            }
        }
    }
}

// Precedence classes used by the printer; higher binds tighter.
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(xs) if xs.len() >= 2 => 3,
        Formula::Xor(xs) if xs.len() >= 2 => 4,
        Formula::And(xs) if xs.len() >= 2 => 5,
        Formula::Not(_) => 6,
        _ => 7,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, min_prec: u8) -> fmt::Result {
    if prec(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn write_nary(f: &mut fmt::Formatter<'_>, xs: &[Formula], op: &str, p: u8, unit: &str) -> fmt::Result {
    match xs.len() {
        0 => write!(f, "{unit}"),
        1 => write_child(f, &xs[0], 7),
        _ => {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                // operands at the same level are parenthesized so that
                // nesting survives a parse round trip
                write_child(f, x, p + 1)?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{}", if *b { "1" } else { "0" }),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Not(a) => {
                write!(f, "!")?;
                write_child(f, a, 6)
            }
            Formula::And(xs) => write_nary(f, xs, "&", 5, "1"),
            Formula::Xor(xs) => write_nary(f, xs, "^", 4, "0"),
            Formula::Or(xs) => write_nary(f, xs, "|", 3, "0"),
            Formula::Implies(a, b) => {
                write_child(f, a, 3)?;
                write!(f, " => ")?;
                write_child(f, b, 2)
            }
            Formula::Iff(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " <=> ")?;
                write_child(f, b, 2)
            }
            Formula::Ite(c, t, e) => write!(f, "ite({c}, {t}, {e})"),
            Formula::Count { min, max, operands } => {
                write!(f, "count({min}, {max}; ")?;
                for (i, x) in operands.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Not,
    And,
    Or,
    Xor,
    Implies,
    Iff,
    LParen,
    RParen,
    Comma,
    Semi,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Int(n) => write!(f, "number {n}"),
            Tok::End => write!(f, "end of input"),
            other => write!(f, "{other:?}"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            '!' => {
                i += 1;
                Tok::Not
            }
            '&' => {
                i += 1;
                Tok::And
            }
            '|' => {
                i += 1;
                Tok::Or
            }
            '^' => {
                i += 1;
                Tok::Xor
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ';' => {
                i += 1;
                Tok::Semi
            }
            '=' if text[i..].starts_with("=>") => {
                i += 2;
                Tok::Implies
            }
            '<' if text[i..].starts_with("<=>") => {
                i += 3;
                Tok::Iff
            }
            c if c.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i].parse().map_err(|_| ParseError::UnexpectedChar {
                    offset: start,
                    found: c,
                })?;
                Tok::Int(n)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            _ => {
                let found = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::UnexpectedChar { offset: i, found });
            }
        };
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn peek2(&self) -> &Tok {
        self.tokens.get(self.pos + 1).map(|t| &t.1).unwrap_or(&Tok::End)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        let (offset, tok) = &self.tokens[self.pos];
        ParseError::Unexpected {
            offset: *offset,
            found: tok.to_string(),
            expected,
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.imp()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn nary(
        &mut self,
        op: Tok,
        next: fn(&mut Self) -> Result<Formula, ParseError>,
        wrap: fn(Vec<Formula>) -> Formula,
    ) -> Result<Formula, ParseError> {
        let first = next(self)?;
        if *self.peek() != op {
            return Ok(first);
        }
        let mut xs = vec![first];
        while *self.peek() == op {
            self.bump();
            xs.push(next(self)?);
        }
        Ok(wrap(xs))
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        self.nary(Tok::Or, Self::xor, Formula::Or)
    }

    fn xor(&mut self) -> Result<Formula, ParseError> {
        self.nary(Tok::Xor, Self::and, Formula::Xor)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        self.nary(Tok::And, Self::unary, Formula::And)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Formula::Const(false))
            }
            Tok::Int(1) => {
                self.bump();
                Ok(Formula::Const(true))
            }
            Tok::LParen => {
                self.bump();
                let f = self.iff()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Tok::Ident(name) if name == "ite" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let c = self.iff()?;
                self.expect(Tok::Comma, "','")?;
                let t = self.iff()?;
                self.expect(Tok::Comma, "','")?;
                let e = self.iff()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Formula::ite(c, t, e))
            }
            Tok::Ident(name) if name == "count" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let min = self.int()?;
                self.expect(Tok::Comma, "','")?;
                let max = self.int()?;
                self.expect(Tok::Semi, "';'")?;
                let mut operands = vec![self.iff()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    operands.push(self.iff()?);
                }
                self.expect(Tok::RParen, "')'")?;
                if min > max {
                    return Err(ParseError::CountBounds { min, max });
                }
                Ok(Formula::Count { min, max, operands })
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Var(name))
            }
            _ => Err(self.unexpected("a variable, constant or '('")),
        }
    }

    fn int(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_precedence() {
        let f = Formula::parse("a | b & !c => d <=> e").unwrap();
        let expect = Formula::iff(
            Formula::implies(
                Formula::Or(vec![
                    Formula::var("a"),
                    Formula::And(vec![Formula::var("b"), Formula::not(Formula::var("c"))]),
                ]),
                Formula::var("d"),
            ),
            Formula::var("e"),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn implication_is_right_associative() {
        let f = Formula::parse("a => b => c").unwrap();
        assert_eq!(
            f,
            Formula::implies(Formula::var("a"), Formula::implies(Formula::var("b"), Formula::var("c")))
        );
    }

    #[test]
    fn xor_is_nary() {
        let f = Formula::parse("A1 ^ A2 ^ A3").unwrap();
        assert_eq!(f, Formula::Xor(vec![Formula::var("A1"), Formula::var("A2"), Formula::var("A3")]));
        assert!(f.eval(&|_: &str| true));
    }

    #[test]
    fn ite_and_count() {
        let f = Formula::parse("ite(x, y, 0) | count(1, 1; a, b, c)").unwrap();
        assert_eq!(f.variables(), vec!["x", "y", "a", "b", "c"]);
        assert!(f.eval(&|v: &str| v == "b"));
        assert!(!f.eval(&|v: &str| v == "a" || v == "b"));
        assert!(f.eval(&|v: &str| v == "x" || v == "y"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Formula::parse("a & "), Err(ParseError::Unexpected { .. })));
        assert!(matches!(Formula::parse("a $ b"), Err(ParseError::UnexpectedChar { offset: 2, .. })));
        assert!(matches!(Formula::parse("(a"), Err(ParseError::Unexpected { .. })));
        assert!(matches!(Formula::parse("count(2, 1; a)"), Err(ParseError::CountBounds { .. })));
        assert!(Formula::parse("2").is_err());
    }

    #[test]
    fn ite_is_an_ordinary_name_without_parens() {
        assert_eq!(Formula::parse("ite & count").unwrap().variables(), vec!["ite", "count"]);
    }

    pub(crate) fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(Formula::Const),
            prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(Formula::var),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Xor),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
                (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| Formula::ite(c, t, e)),
                (0usize..2, prop::collection::vec(inner, 1..4)).prop_map(|(lo, xs)| Formula::Count {
                    min: lo,
                    max: lo + 1,
                    operands: xs
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(f in arb_formula()) {
            let text = f.to_string();
            let back = Formula::parse(&text).unwrap();
            prop_assert_eq!(back, f, "{}", text);
        }
    }
}
