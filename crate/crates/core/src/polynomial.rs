//! Multivariate integer polynomials: parsing, canonical form and exact
//! evaluation at non-negative integer points.
//!
//! The accepted expression grammar:
//!
//! ```text
//! equation = expr [ "=" expr ] ;
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { "*" unary } ;
//! unary    = ("-" | "+") unary | power ;
//! power    = atom [ "^" integer ] ;
//! atom     = integer | identifier | "(" expr ")" ;
//! ```
//!
//! `lhs = rhs` is read as `lhs - rhs`, so the usual `... = 0` suffix is
//! simply stripped. Implicit multiplication (`2y`) is rejected.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One term `coefficient * x1^e1 * ... * xk^ek`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coefficient: BigInt,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Graded lexicographic comparison of exponent vectors.
pub fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

/// A polynomial in canonical form: monomials merged, zero terms dropped and
/// sorted by descending graded lexicographic order of their exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    variables: Vec<String>,
    monomials: Vec<Monomial>,
}

impl Polynomial {
    /// Builds the canonical form from arbitrary terms.
    pub fn new(
        variables: Vec<String>,
        terms: impl IntoIterator<Item = (BigInt, Vec<u32>)>,
    ) -> Result<Self> {
        let k = variables.len();
        let mut acc: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (coefficient, exponents) in terms {
            if exponents.len() != k {
                return Err(Error::Dimension { expected: k, got: exponents.len() });
            }
            *acc.entry(exponents).or_insert_with(BigInt::zero) += coefficient;
        }
        Ok(Self::from_map(variables, acc))
    }

    fn from_map(variables: Vec<String>, acc: BTreeMap<Vec<u32>, BigInt>) -> Self {
        let mut monomials: Vec<Monomial> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(exponents, coefficient)| Monomial { coefficient, exponents })
            .collect();
        monomials.sort_by(|a, b| grlex(&b.exponents, &a.exponents));
        Polynomial { variables, monomials }
    }

    pub fn zero(variables: Vec<String>) -> Self {
        Polynomial { variables, monomials: Vec::new() }
    }

    pub fn constant(variables: Vec<String>, value: impl Into<BigInt>) -> Self {
        let k = variables.len();
        Self::new(variables, [(value.into(), vec![0; k])]).expect("constant has matching arity")
    }

    /// The `index`-th variable as a polynomial.
    pub fn variable(variables: Vec<String>, index: usize) -> Self {
        let mut e = vec![0; variables.len()];
        e[index] = 1;
        Self::new(variables, [(BigInt::one(), e)]).expect("variable has matching arity")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text)?.parse_equation()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Exact value at a non-negative integer point.
    pub fn evaluate(&self, point: &[u64]) -> Result<BigInt> {
        self.check_arity(point.len())?;
        let mut total = BigInt::zero();
        for m in &self.monomials {
            let mut term = m.coefficient.clone();
            for (&x, &e) in point.iter().zip(&m.exponents) {
                if e > 0 {
                    term *= BigInt::from(x).pow(e);
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Same as [`evaluate`](Self::evaluate) but takes `usize` occupations.
    pub fn evaluate_occupations(&self, occupations: &[usize]) -> Result<BigInt> {
        let point: Vec<u64> = occupations.iter().map(|&n| n as u64).collect();
        self.evaluate(&point)
    }

    /// Componentwise maximum exponent; all zeros for a constant.
    pub fn degree_bounds(&self) -> Vec<u32> {
        let mut bounds = vec![0; self.num_vars()];
        for m in &self.monomials {
            for (b, &e) in bounds.iter_mut().zip(&m.exponents) {
                *b = (*b).max(e);
            }
        }
        bounds
    }

    pub fn total_degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Coefficients as floats, in canonical monomial order.
    pub fn float_coefficients(&self) -> Vec<f64> {
        self.monomials
            .iter()
            .map(|m| m.coefficient.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn pow(&self, exponent: u32) -> Polynomial {
        let mut result = Polynomial::constant(self.variables.clone(), 1);
        for _ in 0..exponent {
            result = &result * self;
        }
        result
    }

    fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.num_vars() {
            return Err(Error::Dimension { expected: self.num_vars(), got: n });
        }
        Ok(())
    }

    fn combine(&self, other: &Polynomial, sign: i32) -> Polynomial {
        assert_eq!(self.variables, other.variables, "polynomials over different variables");
        let mut acc: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for m in &self.monomials {
            *acc.entry(m.exponents.clone()).or_insert_with(BigInt::zero) += &m.coefficient;
        }
        for m in &other.monomials {
            let entry = acc.entry(m.exponents.clone()).or_insert_with(BigInt::zero);
            if sign < 0 {
                *entry -= &m.coefficient;
            } else {
                *entry += &m.coefficient;
            }
        }
        Self::from_map(self.variables.clone(), acc)
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, 1)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, -1)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            variables: self.variables.clone(),
            monomials: self
                .monomials
                .iter()
                .map(|m| Monomial { coefficient: -&m.coefficient, exponents: m.exponents.clone() })
                .collect(),
        }
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.variables, rhs.variables, "polynomials over different variables");
        let mut acc: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for a in &self.monomials {
            for b in &rhs.monomials {
                let e: Vec<u32> = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                *acc.entry(e).or_insert_with(BigInt::zero) += &a.coefficient * &b.coefficient;
            }
        }
        Polynomial::from_map(self.variables.clone(), acc)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.monomials.iter().enumerate() {
            let negative = m.coefficient.is_negative();
            let magnitude = m.coefficient.abs();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> = self
                .variables
                .iter()
                .zip(&m.exponents)
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
                .collect();
            if factors.is_empty() {
                write!(f, "{magnitude}")?;
            } else {
                if !magnitude.is_one() {
                    write!(f, "{magnitude}*")?;
                }
                write!(f, "{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Integer serialized as a JSON number when it fits in 64 bits and as a
/// decimal string otherwise.
pub(crate) mod bigint_json {
    use super::*;
    use serde::de::Error as _;

    pub fn serialize<S: Serializer>(value: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
        match value.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&value.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => {
                n.as_i64().map(BigInt::from).ok_or_else(|| D::Error::custom("non-integer coefficient"))
            }
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            _ => Err(D::Error::custom("expected integer or decimal string")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonCoefficient(#[serde(with = "bigint_json")] BigInt);

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    variables: Vec<String>,
    monomials: Vec<(JsonCoefficient, Vec<u32>)>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson {
            variables: self.variables.clone(),
            monomials: self
                .monomials
                .iter()
                .map(|m| (JsonCoefficient(m.coefficient.clone()), m.exponents.clone()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolynomialJson::deserialize(d)?;
        Polynomial::new(raw.variables, raw.monomials.into_iter().map(|(c, e)| (c.0, e)))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Equals,
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end_column: usize,
    variables: Vec<String>,
}

fn parse_error<T>(column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { column, message: message.into() })
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E') {
                    let next_is_digit = chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
                    if chars[i] == '.' || next_is_digit {
                        return parse_error(column, "non-integer literal");
                    }
                }
                let digits: String = chars[start..i].iter().collect();
                tokens.push((Token::Int(digits.parse().expect("ascii digits")), column));
            }
            '.' => return parse_error(column, "non-integer literal"),
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push((Token::Ident(chars[start..i].iter().collect()), column));
            }
            _ => {
                let token = match c {
                    '+' => Token::Plus,
                    '-' => Token::Minus,
                    '*' => Token::Star,
                    '^' => Token::Caret,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    '=' => Token::Equals,
                    other => return parse_error(column, format!("unexpected character '{other}'")),
                };
                tokens.push((token, column));
                i += 1;
            }
        }
    }
    Ok(tokens)
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut variables: Vec<String> = Vec::new();
        for (t, _) in &tokens {
            if let Token::Ident(name) = t {
                if !variables.contains(name) {
                    variables.push(name.clone());
                }
            }
        }
        Ok(Parser { tokens, pos: 0, end_column: text.chars().count() + 1, variables })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |(_, c)| *c)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn parse_equation(mut self) -> Result<Polynomial> {
        if self.tokens.is_empty() {
            return parse_error(1, "empty expression");
        }
        let lhs = self.expr()?;
        let poly = if self.peek() == Some(&Token::Equals) {
            self.bump();
            let rhs = self.expr()?;
            &lhs - &rhs
        } else {
            lhs
        };
        if self.pos < self.tokens.len() {
            return parse_error(self.column(), "unexpected trailing input");
        }
        Ok(poly)
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Some(Token::Minus) => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Some(Token::Int(_) | Token::Ident(_) | Token::LParen) => {
                    return parse_error(self.column(), "implicit multiplication; use '*'");
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                Ok(-&self.unary()?)
            }
            Some(Token::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        self.bump();
        let column = self.column();
        match self.bump() {
            Some(Token::Int(n)) => match n.to_u32() {
                Some(e) if e <= 4096 => Ok(base.pow(e)),
                _ => parse_error(column, "exponent too large"),
            },
            Some(Token::Minus) => parse_error(column, "exponent must be a non-negative integer literal"),
            _ => parse_error(column, "exponent must be an integer literal"),
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let column = self.column();
        match self.bump() {
            Some(Token::Int(n)) => Ok(Polynomial::constant(self.variables.clone(), n)),
            Some(Token::Ident(name)) => {
                let idx = self.variables.iter().position(|v| *v == name).expect("collected");
                Ok(Polynomial::variable(self.variables.clone(), idx))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                if self.bump() != Some(Token::RParen) {
                    return parse_error(column, "unbalanced parenthesis");
                }
                Ok(inner)
            }
            Some(_) => parse_error(column, "expected a number, variable or '('"),
            None => parse_error(column, "unexpected end of input"),
        }
    }
}
