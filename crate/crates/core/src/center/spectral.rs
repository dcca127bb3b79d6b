use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_TOL_EIG: f64 = 1e-9;

/// Center/stable decomposition `R^n = ker A (+) range A` of a linear part
/// whose zero eigenvalue is semisimple and whose other eigenvalues are stable.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit<T> {
    a: DMatrix<T>,
    k: usize,
    center_basis: DMatrix<T>,
    stable_basis: DMatrix<T>,
    center_projection: DMatrix<T>,
    tol_eig: f64,
    eigenvalues: Vec<(f64, f64)>,
}

/// Serializable summary of a split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub k: usize,
    pub tol_eig: f64,
    pub eigenvalues: Vec<(f64, f64)>,
    /// Columns of the center basis.
    pub center_basis: Vec<Vec<f64>>,
    pub stable_basis: Vec<Vec<f64>>,
}

impl<T: Scalar> SpectralSplit<T> {
    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Center dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `n x k`, orthonormal columns spanning `ker A`.
    pub fn center_basis(&self) -> &DMatrix<T> {
        &self.center_basis
    }

    /// `n x (n - k)`, orthonormal columns spanning `range A`.
    pub fn stable_basis(&self) -> &DMatrix<T> {
        &self.stable_basis
    }

    /// `k x n`: center coordinates along the stable directions.
    pub fn center_projection(&self) -> &DMatrix<T> {
        &self.center_projection
    }

    pub fn tol_eig(&self) -> f64 {
        self.tol_eig
    }

    /// Eigenvalues of `A` as `(re, im)`, in the order returned by the solver.
    pub fn eigenvalues(&self) -> &[(f64, f64)] {
        &self.eigenvalues
    }

    /// `xi -> E_c xi`.
    pub fn lift(&self, xi: &[T]) -> Vec<T> {
        (0..self.dim())
            .map(|i| (0..self.k).fold(T::zero(), |acc, j| acc + self.center_basis[(i, j)] * xi[j]))
            .collect()
    }

    /// `x -> P_c x`.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        (0..self.k)
            .map(|r| (0..self.dim()).fold(T::zero(), |acc, i| acc + self.center_projection[(r, i)] * x[i]))
            .collect()
    }

    pub fn summary(&self) -> SplitSummary {
        let cols = |m: &DMatrix<T>| {
            (0..m.ncols())
                .map(|j| m.column(j).iter().map(|v| v.as_f64()).collect())
                .collect()
        };
        SplitSummary {
            k: self.k,
            tol_eig: self.tol_eig,
            eigenvalues: self.eigenvalues.clone(),
            center_basis: cols(&self.center_basis),
            stable_basis: cols(&self.stable_basis),
        }
    }
}

/// Splits `A` into center (`|lambda| <= tol_eig`, which must be exactly
/// `ker A`) and stable (`Re lambda < -tol_eig`) parts.
pub fn spectral_split<T: Scalar>(a: &DMatrix<T>, tol_eig: f64) -> Result<SpectralSplit<T>> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "linear part must be a non-empty square matrix".into(),
        ));
    }
    if !(tol_eig > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol_eig must be positive, got {tol_eig}"
        )));
    }
    let n = a.nrows();
    let a64 = a.map(|v| v.as_f64());
    if a64.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("linear part has non-finite entries".into()));
    }
    let eigenvalues: Vec<(f64, f64)> = a64.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    let mut zeros = 0;
    for &(re, im) in &eigenvalues {
        if re > tol_eig {
            return Err(Error::UnstableSpectrum { re, im });
        }
        if re >= -tol_eig {
            if im.abs() > tol_eig {
                return Err(Error::ImaginaryCenter { re, im });
            }
            zeros += 1;
        }
    }

    let svd = a64.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let small: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol_eig).collect();
    let large: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] > tol_eig).collect();
    if small.len() != zeros {
        return Err(Error::DefectiveZero {
            algebraic: zeros,
            geometric: small.len(),
        });
    }
    let kernel = DMatrix::from_fn(n, small.len(), |i, j| v_t[(small[j], i)]);
    let range = DMatrix::from_fn(n, large.len(), |i, j| u[(i, large[j])]);
    let center = canonical_basis(&kernel);
    let stable = canonical_basis(&range);

    let k = center.ncols();
    let mut full = DMatrix::zeros(n, n);
    full.columns_mut(0, k).copy_from(&center);
    full.columns_mut(k, n - k).copy_from(&stable);
    let inverse = full
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("center and stable subspaces are not complementary".into()))?;
    let projection = inverse.rows(0, k).into_owned();

    let residual = (&a64 * &center).amax();
    if residual > tol_eig.max(1e-12 * a64.amax()) {
        return Err(Error::DefectiveZero {
            algebraic: zeros,
            geometric: small.len(),
        });
    }
    let to_t = |m: &DMatrix<f64>| m.map(T::lit);
    Ok(SpectralSplit {
        a: a.clone(),
        k,
        center_basis: to_t(&center),
        stable_basis: to_t(&stable),
        center_projection: to_t(&projection),
        tol_eig,
        eigenvalues,
    })
}

/// Orthonormal basis of the column span of `b`, made unique by reducing
/// `b^T` to row echelon form first: a coordinate subspace comes out as its
/// unit vectors, with positive signs.
fn canonical_basis(b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = b.shape();
    if k == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut r = b.transpose();
    let mut row = 0;
    for col in 0..n {
        if row == k {
            break;
        }
        let pivot = (row..k)
            .max_by(|&i, &j| r[(i, col)].abs().total_cmp(&r[(j, col)].abs()))
            .unwrap();
        if r[(pivot, col)].abs() <= 1e-12 {
            continue;
        }
        r.swap_rows(row, pivot);
        let p = r[(row, col)];
        for j in 0..n {
            r[(row, j)] /= p;
        }
        for i in 0..k {
            if i != row {
                let f = r[(i, col)];
                if f != 0.0 {
                    for j in 0..n {
                        r[(i, j)] -= f * r[(row, j)];
                    }
                }
            }
        }
        row += 1;
    }
    r.iter_mut().for_each(|v| {
        if v.abs() <= 1e-14 {
            *v = 0.0;
        }
    });
    // Gram-Schmidt on the echelon rows
    let mut q = DMatrix::zeros(n, k);
    for j in 0..k {
        let mut v = r.row(j).transpose();
        for i in 0..j {
            let qi = q.column(i);
            let c = qi.dot(&v);
            v -= qi * c;
        }
        let norm = v.norm();
        q.column_mut(j).copy_from(&(v / norm));
    }
    q.iter_mut().for_each(|v| {
        if v.abs() <= 1e-15 {
            *v = 0.0;
        }
    });
    q
}
