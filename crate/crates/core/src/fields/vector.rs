use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::polynomial::{default_names, Polynomial};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A map `R^n -> R^n`. Implementations are immutable and thread-safe.
pub trait VectorField<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes the value at `x` into `out`. Both slices have length `dim()`.
    fn eval_into(&self, x: &[T], out: &mut [T]);

    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim("vector field evaluation", self.dim(), x.len())?;
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(x, &mut out);
        Ok(out)
    }
}

/// A map `R^n -> R^{n x m}` (diffusion matrices). Output is row-major.
pub trait MatrixField<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn eval_into(&self, x: &[T], out: &mut [T]);

    fn eval(&self, x: &[T]) -> Result<DMatrix<T>> {
        check_dim("matrix field evaluation", self.dim(), x.len())?;
        let mut out = vec![T::zero(); self.dim() * self.noise_dim()];
        self.eval_into(x, &mut out);
        Ok(DMatrix::from_row_slice(self.dim(), self.noise_dim(), &out))
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { context, expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialVectorField<T> {
    dim: usize,
    components: Vec<Polynomial<T>>,
}

impl<T: Scalar> PolynomialVectorField<T> {
    pub fn new(components: Vec<Polynomial<T>>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "vector field needs at least one component".into(),
            ));
        }
        for (i, c) in components.iter().enumerate() {
            if c.dim() != dim {
                return Err(Error::InvalidParameter(format!(
                    "component {i} lives on R^{} but the field has {dim} components",
                    c.dim()
                )));
            }
        }
        Ok(Self { dim, components })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            components: vec![Polynomial::zero(dim); dim],
        }
    }

    /// The linear field `x -> A x`.
    pub fn linear(a: &DMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidParameter("linear part must be square".into()));
        }
        let n = a.nrows();
        let components = (0..n)
            .map(|i| {
                (0..n).fold(Polynomial::zero(n), |acc, j| {
                    &acc + &Polynomial::variable(n, j).scale(a[(i, j)])
                })
            })
            .collect();
        Self::new(components)
    }

    pub fn components(&self) -> &[Polynomial<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial<T> {
        &self.components[i]
    }

    /// Entry `(i, k)` is `d(component i)/d x_k`, as polynomials.
    pub fn jacobian_polynomials(&self) -> Vec<Vec<Polynomial<T>>> {
        self.components.iter().map(Polynomial::gradient).collect()
    }

    pub fn jacobian_exact(&self, x: &[T]) -> Result<DMatrix<T>> {
        check_dim("jacobian", self.dim, x.len())?;
        let jac = self.jacobian_polynomials();
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, k| jac[i][k].eval(x)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim("field sum", self.dim, other.dim)?;
        Self::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim("field difference", self.dim, other.dim)?;
        Self::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// `xi -> projection * F(lift * xi)`, the field seen in the coordinates
    /// of a subspace with basis `lift` and left inverse `projection`.
    pub fn restrict_linear(&self, projection: &DMatrix<T>, lift: &DMatrix<T>) -> Result<Self> {
        let lifted: Vec<Polynomial<T>> = self
            .components
            .iter()
            .map(|c| c.compose_linear(lift))
            .collect::<Result<_>>()?;
        project_polynomials(projection, &lifted).and_then(Self::new)
    }

    pub fn display_with(&self, names: &[String]) -> String {
        self.components
            .iter()
            .map(|c| c.display_with(names))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn project_polynomials<T: Scalar>(projection: &DMatrix<T>, polys: &[Polynomial<T>]) -> Result<Vec<Polynomial<T>>> {
    check_dim("projection", projection.ncols(), polys.len())?;
    let k = polys.first().map(Polynomial::dim).unwrap_or(0);
    Ok((0..projection.nrows())
        .map(|r| {
            polys.iter().enumerate().fold(Polynomial::zero(k), |acc, (i, p)| {
                let c = projection[(r, i)];
                if c == T::zero() {
                    acc
                } else {
                    &acc + &p.scale(c)
                }
            })
        })
        .collect())
}

impl<T: Scalar> fmt::Display for PolynomialVectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&default_names(self.dim)))
    }
}

impl<T: Scalar> VectorField<T> for PolynomialVectorField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }
}

/// An `n x m` matrix of polynomial fields on `R^n`; column `j` is the
/// coefficient of the `j`-th noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMatrixField<T> {
    dim: usize,
    noise_dim: usize,
    entries: Vec<Polynomial<T>>,
}

impl<T: Scalar> PolynomialMatrixField<T> {
    /// `entries` is row-major, `dim * noise_dim` long.
    pub fn new(dim: usize, noise_dim: usize, entries: Vec<Polynomial<T>>) -> Result<Self> {
        if dim == 0 || noise_dim == 0 {
            return Err(Error::InvalidParameter("matrix field shape must be positive".into()));
        }
        check_dim("matrix field entries", dim * noise_dim, entries.len())?;
        for (k, e) in entries.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::InvalidParameter(format!(
                    "entry ({}, {}) lives on R^{} instead of R^{dim}",
                    k / noise_dim,
                    k % noise_dim,
                    e.dim()
                )));
            }
        }
        Ok(Self {
            dim,
            noise_dim,
            entries,
        })
    }

    pub fn zero(dim: usize, noise_dim: usize) -> Self {
        Self {
            dim,
            noise_dim,
            entries: vec![Polynomial::zero(dim); dim * noise_dim],
        }
    }

    /// Square matrix with the given diagonal and zeros elsewhere.
    pub fn diagonal(diag: Vec<Polynomial<T>>) -> Result<Self> {
        let n = diag.len();
        let mut entries = vec![Polynomial::zero(n); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * n + i] = d;
        }
        Self::new(n, n, entries)
    }

    /// Constant matrix field.
    pub fn constant(m: &DMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        let entries = (0..n)
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| Polynomial::constant(n, m[(i, j)]))
            .collect();
        Self::new(n, m.ncols(), entries)
    }

    pub fn from_columns(columns: &[PolynomialVectorField<T>]) -> Result<Self> {
        let m = columns.len();
        let n = columns.first().map(|c| c.dim()).unwrap_or(0);
        let mut entries = Vec::with_capacity(n * m);
        for i in 0..n {
            for c in columns {
                check_dim("matrix column", n, c.dim())?;
                entries.push(c.component(i).clone());
            }
        }
        Self::new(n, m, entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial<T> {
        &self.entries[i * self.noise_dim + j]
    }

    pub fn entries(&self) -> &[Polynomial<T>] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> PolynomialVectorField<T> {
        assert!(j < self.noise_dim);
        PolynomialVectorField {
            dim: self.dim,
            components: (0..self.dim).map(|i| self.entry(i, j).clone()).collect(),
        }
    }

    pub fn columns(&self) -> Vec<PolynomialVectorField<T>> {
        (0..self.noise_dim).map(|j| self.column(j)).collect()
    }

    /// `xi -> projection * B(lift * xi) * noise_map`.
    pub fn restrict_linear(&self, projection: &DMatrix<T>, lift: &DMatrix<T>, noise_map: &DMatrix<T>) -> Result<Self> {
        check_dim("noise map", self.noise_dim, noise_map.nrows())?;
        let k = lift.ncols();
        let lifted: Vec<Polynomial<T>> = self
            .entries
            .iter()
            .map(|e| e.compose_linear(lift))
            .collect::<Result<_>>()?;
        let mut right = Vec::with_capacity(self.dim * noise_map.ncols());
        for i in 0..self.dim {
            for q in 0..noise_map.ncols() {
                let acc = (0..self.noise_dim).fold(Polynomial::zero(k), |acc, j| {
                    let c = noise_map[(j, q)];
                    if c == T::zero() {
                        acc
                    } else {
                        &acc + &lifted[i * self.noise_dim + j].scale(c)
                    }
                });
                right.push(acc);
            }
        }
        let m_out = noise_map.ncols();
        let mut entries = Vec::with_capacity(projection.nrows() * m_out);
        for r in 0..projection.nrows() {
            for q in 0..m_out {
                let acc = (0..self.dim).fold(Polynomial::zero(k), |acc, i| {
                    let c = projection[(r, i)];
                    if c == T::zero() {
                        acc
                    } else {
                        &acc + &right[i * m_out + q].scale(c)
                    }
                });
                entries.push(acc);
            }
        }
        Self::new(projection.nrows(), m_out, entries)
    }

    pub fn display_with(&self, names: &[String]) -> String {
        let rows: Vec<String> = (0..self.dim)
            .map(|i| {
                let cols: Vec<String> = (0..self.noise_dim)
                    .map(|j| self.entry(i, j).display_with(names))
                    .collect();
                format!("[{}]", cols.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }
}

impl<T: Scalar> MatrixField<T> for PolynomialMatrixField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    #[inline]
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = if e.is_zero() { T::zero() } else { e.eval(x) };
        }
    }
}

type VectorFn<T> = dyn Fn(&[T], &mut [T]) + Send + Sync;

/// Closure-backed vector field, for fields without a polynomial form.
#[derive(Clone)]
pub struct FnVectorField<T> {
    dim: usize,
    f: Arc<VectorFn<T>>,
}

impl<T: Scalar> FnVectorField<T> {
    pub fn new(dim: usize, f: impl Fn(&[T], &mut [T]) + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }
}

impl<T> fmt::Debug for FnVectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnVectorField(dim = {})", self.dim)
    }
}

impl<T: Scalar> VectorField<T> for FnVectorField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        (self.f)(x, out)
    }
}

/// Closure-backed matrix field (row-major output).
#[derive(Clone)]
pub struct FnMatrixField<T> {
    dim: usize,
    noise_dim: usize,
    f: Arc<VectorFn<T>>,
}

impl<T: Scalar> FnMatrixField<T> {
    pub fn new(dim: usize, noise_dim: usize, f: impl Fn(&[T], &mut [T]) + Send + Sync + 'static) -> Self {
        Self {
            dim,
            noise_dim,
            f: Arc::new(f),
        }
    }
}

impl<T> fmt::Debug for FnMatrixField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMatrixField({} x {})", self.dim, self.noise_dim)
    }
}

impl<T: Scalar> MatrixField<T> for FnMatrixField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        (self.f)(x, out)
    }
}

/// Central-difference Jacobian of any vector field.
pub fn jacobian_fd<T: Scalar, F: VectorField<T> + ?Sized>(field: &F, x: &[T], delta: T) -> Result<DMatrix<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {delta}"
        )));
    }
    let n = field.dim();
    check_dim("jacobian_fd", n, x.len())?;
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![T::zero(); n];
    let mut fm = vec![T::zero(); n];
    let two = T::lit(2.0);
    for k in 0..n {
        xp[k] = x[k] + delta;
        field.eval_into(&xp, &mut fp);
        xp[k] = x[k] - delta;
        field.eval_into(&xp, &mut fm);
        xp[k] = x[k];
        for i in 0..n {
            jac[(i, k)] = (fp[i] - fm[i]) / (two * delta);
        }
    }
    Ok(jac)
}
