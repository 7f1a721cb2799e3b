//! Multi-indices and exact sparse multivariate polynomials.
//!
//! Monomials are ordered graded-lexicographically with `x1 > x2 > … > xd`:
//! first by total degree, then within a degree by decreasing exponent of
//! `x1`, then `x2`, and so on. In ascending order the degree-≤2 basis in two
//! variables is `1, x1, x2, x1², x1x2, x2²`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational;

#[derive(Clone, PartialEq, Eq, Hash, serde::Serialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// `e_j` scaled by `power`.
    pub fn axis(dim: usize, j: usize, power: u32) -> Self {
        let mut e = vec![0; dim];
        e[j] = power;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `x^α` at a real point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, xi)| num_traits::pow(xi.clone(), e as usize))
            .fold(BigRational::one(), |acc, v| acc * v)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All multi-indices of total degree exactly `degree`, in ascending order.
pub fn monomials_of_degree(dim: usize, degree: usize) -> Vec<MultiIndex> {
    fn fill(rest: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if rest == 1 {
            prefix.push(left as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e as u32);
            fill(rest - 1, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        if degree == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    fill(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// All multi-indices with `|α| ≤ max_degree`, in ascending graded order.
pub fn monomials_up_to(dim: usize, max_degree: usize) -> Vec<MultiIndex> {
    (0..=max_degree)
        .flat_map(|k| monomials_of_degree(dim, k))
        .collect()
}

/// Number of multi-indices with `|α| ≤ n` in `dim` variables.
pub fn basis_size(dim: usize, n: usize) -> usize {
    // C(n + dim, dim)
    (1..=dim).fold(1usize, |acc, i| acc * (n + i) / i)
}

/// Sparse polynomial with exact rational coefficients. Zero coefficients are
/// never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, BigRational::one())
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    /// The coordinate `x_{i+1}` (zero-based `i`).
    pub fn var(dim: usize, i: usize) -> Self {
        assert!(
            i < dim,
            "variable index {i} out of range for dimension {dim}"
        );
        Self::monomial(MultiIndex::axis(dim, i, 1), BigRational::one())
    }

    pub fn monomial(alpha: MultiIndex, c: BigRational) -> Self {
        let dim = alpha.dim();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(alpha, c);
        }
        Polynomial { dim, terms }
    }

    /// Build from `(exponents, coefficient)` pairs, merging repeats.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, BigRational)>,
    {
        let mut p = Polynomial::zero(dim);
        for (alpha, c) in terms {
            if alpha.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: alpha.dim(),
                });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// Integer-coefficient shorthand, mostly for tests and fixtures.
    pub fn from_int_terms(dim: usize, terms: &[(&[u32], i64)]) -> Self {
        Self::from_terms(
            dim,
            terms.iter().map(|(e, c)| {
                (
                    MultiIndex::new(e.to_vec()),
                    BigRational::from_integer(BigInt::from(*c)),
                )
            }),
        )
        .expect("exponent vectors must match the dimension")
    }

    fn add_term(&mut self, alpha: MultiIndex, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(alpha) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().next_back().map(MultiIndex::degree)
    }

    /// Degree with the zero polynomial counted as 0, for degree budgets.
    pub fn degree_or_zero(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> BigRational {
        self.terms
            .get(alpha)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// `Some(α)` when the polynomial is exactly `x^α` with coefficient 1.
    pub fn as_unit_monomial(&self) -> Option<&MultiIndex> {
        match self.terms.iter().next() {
            Some((alpha, c)) if self.terms.len() == 1 && c.is_one() => Some(alpha),
            _ => None,
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            out.add_term(alpha.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.try_add(&other.scale(&-BigRational::one()))
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: usize) -> Polynomial {
        let mut acc = Polynomial::one(self.dim);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Value at a real point (coefficients rounded to the nearest double).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(alpha, c)| rational::to_f64(c) * alpha.eval(x))
            .sum())
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> Result<BigRational> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .fold(BigRational::zero(), |acc, (alpha, c)| {
                acc + c * alpha.eval_exact(x)
            }))
    }
}

/// Exact product; errors on dimension mismatch.
pub fn poly_mul(p: &Polynomial, q: &Polynomial) -> Result<Polynomial> {
    p.try_mul(q)
}

/// Value of `p` at `x`.
pub fn poly_eval(p: &Polynomial, x: &[f64]) -> Result<f64> {
    p.eval(x)
}

// Operator sugar; these panic on dimension mismatch, use `try_*` otherwise.
impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial dimensions differ")
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial dimensions differ")
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial dimensions differ")
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[d={}]({})", self.dim, self)
    }
}

impl fmt::Display for Polynomial {
    /// Infix form over `x1..xd`, highest monomial first, e.g. `x2 - x1^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with_var(f, "x")
    }
}

impl Polynomial {
    /// Render with a custom variable stem (`y` for image-space polynomials).
    pub fn to_string_with_var(&self, stem: &str) -> String {
        struct W<'a>(&'a Polynomial, &'a str);
        impl fmt::Display for W<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with_var(f, self.1)
            }
        }
        W(self, stem).to_string()
    }

    fn fmt_with_var(&self, f: &mut fmt::Formatter<'_>, stem: &str) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (alpha, c)) in self.terms.iter().rev().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = alpha
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("{stem}{}", j + 1)
                    } else {
                        format!("{stem}{}^{e}", j + 1)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}
