use std::cmp::Ordering;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A single term `coefficient * x_1^e_1 * ... * x_n^e_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial<T> {
    pub coefficient: T,
    pub exponents: Vec<u32>,
}

impl<T: Scalar> Monomial<T> {
    pub fn new(coefficient: T, exponents: Vec<u32>) -> Self {
        Self { coefficient, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        self.exponents
            .iter()
            .zip(x)
            .fold(self.coefficient, |acc, (&e, &xi)| match e {
                0 => acc,
                1 => acc * xi,
                _ => acc * xi.powi(e as i32),
            })
    }
}

/// Graded order: total degree ascending, then higher powers of earlier
/// variables first (so `x^3` precedes `x*y^2`).
pub fn graded_order(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| b.cmp(a))
}

/// Polynomial scalar field on `R^dim`, kept in canonical form: terms sorted by
/// [`graded_order`], like terms merged, zero coefficients dropped. Two
/// polynomials are equal iff their coefficient lists are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    dim: usize,
    terms: Vec<Monomial<T>>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::from_terms_unchecked(dim, vec![Monomial::new(c, vec![0; dim])])
    }

    /// The coordinate function `x_index`.
    pub fn variable(dim: usize, index: usize) -> Self {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        let mut e = vec![0; dim];
        e[index] = 1;
        Self::from_terms_unchecked(dim, vec![Monomial::new(T::one(), e)])
    }

    /// Convenience constructor from `(coefficient, exponents)` pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, &[u32])]) -> Result<Self> {
        let terms = pairs
            .iter()
            .map(|&(c, e)| Monomial::new(T::lit(c), e.to_vec()))
            .collect();
        Self::from_terms(dim, terms)
    }

    pub fn from_terms(dim: usize, terms: Vec<Monomial<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("polynomial dimension must be positive".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.exponents.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "monomial {k} ({} * x^{:?}): exponents length {} does not match dimension {dim}",
                    t.coefficient,
                    t.exponents,
                    t.exponents.len()
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "monomial {k}: coefficient {} is not finite",
                    t.coefficient
                )));
            }
        }
        Ok(Self::from_terms_unchecked(dim, terms))
    }

    fn from_terms_unchecked(dim: usize, mut terms: Vec<Monomial<T>>) -> Self {
        terms.sort_by(|a, b| graded_order(&a.exponents, &b.exponents));
        let mut merged: Vec<Monomial<T>> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exponents == t.exponents => last.coefficient = last.coefficient + t.coefficient,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coefficient != T::zero());
        Self { dim, terms: merged }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Evaluates without checking the length of `x`.
    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        self.terms.iter().fold(T::zero(), |acc, t| acc + t.eval(x))
    }

    pub fn try_eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "polynomial evaluation",
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Exact partial derivative with respect to `x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.dim);
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exponents[var] > 0)
            .map(|t| {
                let mut e = t.exponents.clone();
                let k = e[var];
                e[var] -= 1;
                Monomial::new(t.coefficient * T::lit(k as f64), e)
            })
            .collect();
        Self::from_terms_unchecked(self.dim, terms)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|k| self.derivative(k)).collect()
    }

    pub fn scale(&self, c: T) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial::new(t.coefficient * c, t.exponents.clone()))
            .collect();
        Self::from_terms_unchecked(self.dim, terms)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.dim, T::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `x_i = sum_j lift[(i, j)] * xi_j`; the result lives on
    /// `R^{lift.ncols()}`.
    pub fn compose_linear(&self, lift: &DMatrix<T>) -> Result<Self> {
        if lift.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "linear substitution",
                expected: self.dim,
                got: lift.nrows(),
            });
        }
        let k = lift.ncols();
        let images: Vec<Polynomial<T>> = (0..self.dim)
            .map(|i| {
                let terms = (0..k)
                    .map(|j| {
                        let mut e = vec![0; k];
                        e[j] = 1;
                        Monomial::new(lift[(i, j)], e)
                    })
                    .collect();
                Self::from_terms_unchecked(k, terms)
            })
            .collect();
        let mut out = Self::zero(k);
        for t in &self.terms {
            let mut prod = Self::constant(k, t.coefficient);
            for (i, &e) in t.exponents.iter().enumerate() {
                if e > 0 {
                    prod = &prod * &images[i].pow(e);
                }
            }
            out = &out + &prod;
        }
        Ok(out)
    }

    /// Renders the polynomial with the given variable names, e.g. `-2 + x^2*y - y^3`.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            let c = t.coefficient;
            let negative = c < T::zero();
            let mag = c.abs();
            if k == 0 {
                if negative {
                    s.push('-');
                }
            } else {
                s.push_str(if negative { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, &e) in t.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[i].clone()),
                    _ => factors.push(format!("{}^{}", names[i], e)),
                }
            }
            if factors.is_empty() {
                s.push_str(&format_coefficient(mag));
            } else {
                if mag != T::one() {
                    let _ = write!(s, "{}*", format_coefficient(mag));
                }
                s.push_str(&factors.join("*"));
            }
        }
        s
    }
}

fn format_coefficient<T: Scalar>(c: T) -> String {
    format!("{c}")
}

/// Default variable names: `x, y, z` up to three dimensions, `x1..xn` beyond.
pub fn default_names(dim: usize) -> Vec<String> {
    if dim <= 3 {
        ["x", "y", "z"][..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    }
}

impl<T: Scalar> std::fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.display_with(&default_names(self.dim)))
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn add(self, rhs: Self) -> Polynomial<T> {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let terms = self.terms.iter().chain(&rhs.terms).cloned().collect();
        Polynomial::from_terms_unchecked(self.dim, terms)
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: Self) -> Polynomial<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: Self) -> Polynomial<T> {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let e = a.exponents.iter().zip(&b.exponents).map(|(p, q)| p + q).collect();
                terms.push(Monomial::new(a.coefficient * b.coefficient, e));
            }
        }
        Polynomial::from_terms_unchecked(self.dim, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(pairs: &[(f64, &[u32])]) -> Polynomial<f64> {
        Polynomial::from_pairs(2, pairs).unwrap()
    }

    #[test]
    fn canonical_form_merges_and_drops_zeros() {
        let a = p(&[(1.0, &[1, 0]), (2.0, &[1, 0]), (-3.0, &[1, 0]), (1.0, &[0, 0])]);
        assert_eq!(a, Polynomial::constant(2, 1.0));
    }

    #[test]
    fn display_uses_graded_order() {
        let f = p(&[(-1.0, &[0, 3]), (1.0, &[2, 1]), (-2.0, &[0, 0])]);
        assert_eq!(f.to_string(), "-2 + x^2*y - y^3");
        let g = p(&[(1.0, &[1, 2]), (-1.0, &[3, 0])]);
        assert_eq!(g.to_string(), "-x^3 + x*y^2");
        let h = p(&[(0.5, &[1, 0]), (3.0, &[0, 1])]);
        assert_eq!(h.to_string(), "0.5*x + 3*y");
        assert_eq!(Polynomial::<f64>::zero(2).to_string(), "0");
    }

    #[test]
    fn derivative_of_x2y() {
        let f = p(&[(1.0, &[2, 1])]);
        assert_eq!(f.derivative(0), p(&[(2.0, &[1, 1])]));
        assert_eq!(f.derivative(1), p(&[(1.0, &[2, 0])]));
    }

    #[test]
    fn rejects_bad_exponent_length() {
        let err = Polynomial::<f64>::from_pairs(2, &[(1.0, &[1, 0, 0])]).unwrap_err();
        assert!(err.to_string().contains("monomial 0"));
    }

    #[test]
    fn compose_linear_projects_onto_second_axis() {
        // -2 + x^2 y - y^3 with x = 0, y = xi
        let f = p(&[(-2.0, &[0, 0]), (1.0, &[2, 1]), (-1.0, &[0, 3])]);
        let lift = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let r = f.compose_linear(&lift).unwrap();
        assert_eq!(r, Polynomial::from_pairs(1, &[(-2.0, &[0]), (-1.0, &[3])]).unwrap());
    }

    #[test]
    fn compose_linear_general_map() {
        // (x + y)^2 with x = a, y = 2a  ->  9 a^2
        let f = p(&[(1.0, &[2, 0]), (2.0, &[1, 1]), (1.0, &[0, 2])]);
        let lift = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let r = f.compose_linear(&lift).unwrap();
        assert_eq!(r, Polynomial::from_pairs(1, &[(9.0, &[2])]).unwrap());
    }
}
