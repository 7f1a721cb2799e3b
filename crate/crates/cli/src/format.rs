//! Text file formats: moment files, measure files and polynomial lists.
//!
//! ```text
//! momentfile v1 dim=2 degree=1
//! 0 0 1
//! 1 0 0.5
//! 0 1 log:1.25
//! ```
//!
//! Blank lines and lines starting with `#` are ignored on input.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Zero};
use stieltjes::poly::monomials_up_to;
use stieltjes::rational::{parse_decimal, to_terminating_decimal};
use stieltjes::{Atom, AtomicMeasure, Moment, MomentSequence, MultiIndex, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError {
        line,
        message: message.into(),
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    magic: &str,
    keys: &[&str],
) -> Result<Vec<usize>, FormatError> {
    let Some((n, line)) = lines.next() else {
        return err(1, format!("empty file, expected `{magic} v1` header"));
    };
    let mut words = line.split_whitespace();
    if words.next() != Some(magic) || words.next() != Some("v1") {
        return err(n, format!("expected `{magic} v1` header"));
    }
    let mut values = Vec::with_capacity(keys.len());
    for key in keys {
        let word = words.next().unwrap_or("");
        let value = word
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .and_then(|v| v.parse().ok());
        match value {
            Some(v) => values.push(v),
            None => return err(n, format!("expected `{key}=<n>` in header, found `{word}`")),
        }
    }
    if let Some(extra) = words.next() {
        return err(n, format!("unexpected `{extra}` in header"));
    }
    Ok(values)
}

/// Shortest decimal that reads back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn format_value(m: &Moment) -> String {
    if let Some(exact) = m.exact.as_ref().and_then(to_terminating_decimal) {
        return exact;
    }
    match m.log {
        Some(l) if m.exact.is_none() => format!("log:{}", format_f64(l)),
        _ => format_f64(m.value),
    }
}

fn parse_value(word: &str, line: usize) -> Result<Moment, FormatError> {
    if let Some(l) = word.strip_prefix("log:") {
        return match l.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Moment::from_log(v)),
            _ => err(line, format!("bad log value `{l}`")),
        };
    }
    match parse_decimal(word) {
        Some(r) => {
            let mut m = Moment::exact(r);
            m.value = word.parse().unwrap_or(m.value);
            Ok(m)
        }
        None => err(line, format!("bad value `{word}`")),
    }
}

pub fn write_moments(s: &MomentSequence) -> String {
    let mut out = format!("momentfile v1 dim={} degree={}\n", s.dim(), s.degree());
    for (alpha, m) in s.entries() {
        for e in alpha.exponents() {
            write!(out, "{e} ").unwrap();
        }
        out.push_str(&format_value(m));
        out.push('\n');
    }
    out
}

pub fn read_moments(text: &str) -> Result<MomentSequence, FormatError> {
    let mut lines = content_lines(text);
    let hv = header(&mut lines, "momentfile", &["dim", "degree"])?;
    let (dim, degree) = (hv[0], hv[1]);
    if dim == 0 {
        return err(1, "dim must be at least 1");
    }
    let mut entries = BTreeMap::new();
    let mut last_line = 1;
    for (n, line) in lines {
        last_line = n;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != dim + 1 {
            return err(
                n,
                format!(
                    "expected {dim} exponents and a value, found {} fields",
                    words.len()
                ),
            );
        }
        let mut exps = Vec::with_capacity(dim);
        for w in &words[..dim] {
            match w.parse::<u32>() {
                Ok(e) => exps.push(e),
                Err(_) => return err(n, format!("bad exponent `{w}`")),
            }
        }
        let alpha = MultiIndex::new(exps);
        if alpha.degree() > degree {
            return err(
                n,
                format!("entry of degree {} exceeds degree={degree}", alpha.degree()),
            );
        }
        let m = parse_value(words[dim], n)?;
        if entries.insert(alpha, m).is_some() {
            return err(n, "duplicate entry");
        }
    }
    if let Some(missing) = monomials_up_to(dim, degree)
        .into_iter()
        .find(|a| !entries.contains_key(a))
    {
        return err(
            last_line,
            format!("missing entry for exponents {:?}", missing.exponents()),
        );
    }
    MomentSequence::new(dim, degree, entries).map_err(|e| FormatError {
        line: 1,
        message: e.to_string(),
    })
}

pub fn write_measure(rho: &AtomicMeasure) -> String {
    let mut out = format!("atoms v1 dim={}\n", rho.dim());
    for a in rho.atoms() {
        out.push_str(&format_f64(a.weight));
        for x in &a.point {
            write!(out, " {}", format_f64(*x)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_measure(text: &str) -> Result<AtomicMeasure, FormatError> {
    let mut lines = content_lines(text);
    let dim = header(&mut lines, "atoms", &["dim"])?[0];
    let mut atoms = Vec::new();
    for (n, line) in lines {
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|w| {
                w.parse::<f64>().map_err(|_| FormatError {
                    line: n,
                    message: format!("bad number `{w}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        if nums.len() != dim + 1 {
            return err(
                n,
                format!(
                    "expected weight and {dim} coordinates, found {} fields",
                    nums.len()
                ),
            );
        }
        atoms.push(Atom {
            weight: nums[0],
            point: nums[1..].to_vec(),
        });
    }
    AtomicMeasure::new(dim, atoms).map_err(|e| FormatError {
        line: 1,
        message: e.to_string(),
    })
}

/// One polynomial per line over `<var>1..<var>dim`.
pub fn read_polynomials(text: &str, var: char, dim: usize) -> Result<Vec<Polynomial>, FormatError> {
    content_lines(text)
        .map(|(n, line)| {
            parse_polynomial(line, var, dim).map_err(|message| FormatError { line: n, message })
        })
        .collect()
}

/// Number of variables used by the highest-numbered `<var>i` in `text`.
pub fn infer_dim(text: &str, var: char) -> usize {
    let mut best = 0;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == var {
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            best = best.max(digits.parse().unwrap_or(0));
        }
    }
    best
}

pub fn write_polynomials(ps: &[Polynomial], var: &str) -> String {
    ps.iter()
        .map(|p| p.to_string_with_var(var) + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(BigRational),
    Var(usize),
    Op(char),
}

fn tokenize(src: &str, var: char, dim: usize) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' | '*' | '^' | '/' | '(' | ')' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let r = parse_decimal(&text).ok_or_else(|| format!("bad number `{text}`"))?;
                out.push(Token::Num(r));
            }
            v if v == var => {
                let start = i + 1;
                i = start;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                match text.parse::<usize>() {
                    Ok(k) if (1..=dim).contains(&k) => out.push(Token::Var(k - 1)),
                    _ => {
                        return Err(format!(
                            "unknown variable `{var}{text}` (expected {var}1..{var}{dim})"
                        ))
                    }
                }
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Polynomial, String> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, String> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.constant()?;
                if d.is_zero() {
                    return Err("division by zero".into());
                }
                acc = acc.scale(&(BigRational::one() / d));
            } else {
                return Ok(acc);
            }
        }
    }

    fn constant(&mut self) -> Result<BigRational, String> {
        let p = self.power()?;
        match p.degree() {
            None => Ok(BigRational::zero()),
            Some(0) => Ok(p.coeff(&MultiIndex::zero(self.dim))),
            Some(_) => Err("can only divide by a constant".into()),
        }
    }

    fn unary(&mut self) -> Result<Polynomial, String> {
        if self.eat('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Polynomial, String> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek().cloned() {
                Some(Token::Num(r)) if r.is_integer() && r >= BigRational::zero() => {
                    self.pos += 1;
                    let e: usize = r
                        .to_integer()
                        .try_into()
                        .map_err(|_| "exponent too large".to_string())?;
                    Ok(base.pow(e))
                }
                _ => Err("exponent must be a non-negative integer".into()),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, String> {
        match self.peek().cloned() {
            Some(Token::Num(r)) => {
                self.pos += 1;
                Ok(Polynomial::constant(self.dim, r))
            }
            Some(Token::Var(j)) => {
                self.pos += 1;
                Ok(Polynomial::var(self.dim, j))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err("missing `)`".into());
                }
                Ok(inner)
            }
            Some(Token::Op(c)) => Err(format!("unexpected `{c}`")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

pub fn parse_polynomial(src: &str, var: char, dim: usize) -> Result<Polynomial, String> {
    let tokens = tokenize(src, var, dim)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        dim,
    };
    let out = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(format!("trailing input after token {}", p.pos));
    }
    Ok(out)
}
