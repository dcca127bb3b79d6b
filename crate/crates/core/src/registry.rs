//! Named systems and manifolds from the two worked examples.
//!
//! Example 1 (center-manifold reduction):
//!
//! ```text
//! dx = -x dt + (x y^2 - x^3 - x/2) dt + x o dW1
//! dy =         (-2 + x^2 y - y^3 - y/2) dt + y o dW2
//! ```
//!
//! Example 2 (invariant manifold by characteristics), Ito form:
//!
//! ```text
//! dx = x dt + x dW1 + x dW2
//! dy = (3x + 2y) dt + (x + y) dW1 + (x + y) dW2
//! ```

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fields::{ClosedForm, Polynomial, PolynomialMatrixField, PolynomialVectorField, TaperedField};
use crate::invariance::{AxisBox, GraphManifold};
use crate::scalar::Scalar;
use crate::sde::{Calculus, Diffusion, Drift, SdeSystem};

/// Inner and outer radius of the cutoff applied to Example 1's nonlinearity.
/// The outer radius plays the role of the small parameter epsilon < 1.
pub const TRUNCATION_RADII: (f64, f64) = (0.5, 0.9);

pub const SYSTEM_NAMES: &[&str] = &[
    "example1-strat",
    "example1-ito",
    "example1-truncated",
    "example1-reduced",
    "example1-reduced-truncated",
    "example1-reduced-corrupted",
    "example2",
];

pub const MANIFOLD_NAMES: &[&str] = &["example2-log", "unit-circle"];

#[derive(Debug, Clone)]
pub struct SystemEntry<T> {
    pub name: &'static str,
    pub system: SdeSystem<T>,
    /// Linear part `A` when the drift is written `A x + F(x)`.
    pub linear: Option<DMatrix<T>>,
    /// The nonlinear part `F` (drift minus `A x`) when polynomial.
    pub nonlinear: Option<PolynomialVectorField<T>>,
    pub manifold: Option<&'static str>,
    pub provenance: &'static str,
}

fn poly<T: Scalar>(dim: usize, pairs: &[(f64, &[u32])]) -> Polynomial<T> {
    Polynomial::from_pairs(dim, pairs).expect("registry literal")
}

fn field<T: Scalar>(components: Vec<Polynomial<T>>) -> PolynomialVectorField<T> {
    PolynomialVectorField::new(components).expect("registry literal")
}

pub fn example1_linear<T: Scalar>() -> DMatrix<T> {
    DMatrix::from_row_slice(2, 2, &[-T::one(), T::zero(), T::zero(), T::zero()])
}

/// `(x y^2 - x^3 - x/2, -2 + x^2 y - y^3 - y/2)`
pub fn example1_strat_nonlinear<T: Scalar>() -> PolynomialVectorField<T> {
    field(vec![
        poly(2, &[(1.0, &[1, 2]), (-1.0, &[3, 0]), (-0.5, &[1, 0])]),
        poly(2, &[(-2.0, &[0, 0]), (1.0, &[2, 1]), (-1.0, &[0, 3]), (-0.5, &[0, 1])]),
    ])
}

/// `(x y^2 - x^3, -2 + x^2 y - y^3)`
pub fn example1_ito_nonlinear<T: Scalar>() -> PolynomialVectorField<T> {
    field(vec![
        poly(2, &[(1.0, &[1, 2]), (-1.0, &[3, 0])]),
        poly(2, &[(-2.0, &[0, 0]), (1.0, &[2, 1]), (-1.0, &[0, 3])]),
    ])
}

/// `B(x, y) = diag(x, y)`
pub fn example1_diffusion<T: Scalar>() -> PolynomialMatrixField<T> {
    PolynomialMatrixField::diagonal(vec![poly(2, &[(1.0, &[1, 0])]), poly(2, &[(1.0, &[0, 1])])])
        .expect("registry literal")
}

pub fn example2_drift<T: Scalar>() -> PolynomialVectorField<T> {
    field(vec![
        poly(2, &[(1.0, &[1, 0])]),
        poly(2, &[(3.0, &[1, 0]), (2.0, &[0, 1])]),
    ])
}

/// Both noise columns equal `(x, x + y)`.
pub fn example2_diffusion<T: Scalar>() -> PolynomialMatrixField<T> {
    let col = field(vec![
        poly(2, &[(1.0, &[1, 0])]),
        poly(2, &[(1.0, &[1, 0]), (1.0, &[0, 1])]),
    ]);
    PolynomialMatrixField::from_columns(&[col.clone(), col]).expect("registry literal")
}

fn example1_entry<T: Scalar>(
    name: &'static str,
    nonlinear: PolynomialVectorField<T>,
    calculus: Calculus,
    provenance: &'static str,
) -> SystemEntry<T> {
    let a = example1_linear::<T>();
    let drift = PolynomialVectorField::linear(&a)
        .and_then(|l| l.add(&nonlinear))
        .expect("registry literal");
    SystemEntry {
        name,
        system: SdeSystem::polynomial(drift, example1_diffusion(), calculus).expect("registry literal"),
        linear: Some(a),
        nonlinear: Some(nonlinear),
        manifold: None,
        provenance,
    }
}

fn reduced_truncated<T: Scalar>(constant: f64, name: &'static str, provenance: &'static str) -> SystemEntry<T> {
    let (r0, r1) = TRUNCATION_RADII;
    let base = field(vec![poly(1, &[(constant, &[0]), (-1.0, &[3])])]);
    let drift = Drift::Tapered {
        exact: PolynomialVectorField::zero(1),
        tapered: TaperedField::new(base, T::lit(r0), T::lit(r1)).expect("registry literal"),
    };
    let diffusion = PolynomialMatrixField::new(1, 1, vec![poly(1, &[(1.0, &[1])])]).expect("registry literal");
    SystemEntry {
        name,
        system: SdeSystem::new(drift, Diffusion::Polynomial(diffusion), Calculus::Ito).expect("registry literal"),
        linear: Some(DMatrix::zeros(1, 1)),
        nonlinear: None,
        manifold: None,
        provenance,
    }
}

/// Looks up a named system.
pub fn system<T: Scalar>(name: &str) -> Result<SystemEntry<T>> {
    let entry = match name {
        "example1-strat" => example1_entry(
            "example1-strat",
            example1_strat_nonlinear(),
            Calculus::Stratonovich,
            "Example 1 as stated, Stratonovich form with A = diag(-1, 0)",
        ),
        "example1-ito" => example1_entry(
            "example1-ito",
            example1_ito_nonlinear(),
            Calculus::Ito,
            "Example 1, equivalent Ito form used for the energy estimate",
        ),
        "example1-truncated" => {
            let (r0, r1) = TRUNCATION_RADII;
            let a = example1_linear::<T>();
            let nonlinear = example1_ito_nonlinear::<T>();
            let drift = Drift::Tapered {
                exact: PolynomialVectorField::linear(&a).expect("registry literal"),
                tapered: TaperedField::new(nonlinear.clone(), T::lit(r0), T::lit(r1)).expect("registry literal"),
            };
            SystemEntry {
                name: "example1-truncated",
                system: SdeSystem::new(drift, Diffusion::Polynomial(example1_diffusion()), Calculus::Ito)
                    .expect("registry literal"),
                linear: Some(a),
                nonlinear: Some(nonlinear),
                manifold: None,
                provenance: "Example 1 Ito form, nonlinearity truncated to a disk around the origin",
            }
        }
        "example1-reduced" => SystemEntry {
            name: "example1-reduced",
            system: SdeSystem::polynomial(
                field(vec![poly(1, &[(-2.0, &[0]), (-1.0, &[3])])]),
                PolynomialMatrixField::new(1, 1, vec![poly(1, &[(1.0, &[1])])]).expect("registry literal"),
                Calculus::Ito,
            )
            .expect("registry literal"),
            linear: Some(DMatrix::zeros(1, 1)),
            nonlinear: Some(field(vec![poly(1, &[(-2.0, &[0]), (-1.0, &[3])])])),
            manifold: None,
            provenance: "Example 1 reduced equation dy = (-2 - y^3) dt + y dW2",
        },
        "example1-reduced-truncated" => reduced_truncated(
            -2.0,
            "example1-reduced-truncated",
            "reduction of example1-truncated onto ker A",
        ),
        "example1-reduced-corrupted" => reduced_truncated(
            2.0,
            "example1-reduced-corrupted",
            "deliberately wrong reduction (constant +2 instead of -2), a negative control",
        ),
        "example2" => SystemEntry {
            name: "example2",
            system: SdeSystem::polynomial(example2_drift(), example2_diffusion(), Calculus::Ito)
                .expect("registry literal"),
            linear: None,
            nonlinear: None,
            manifold: Some("example2-log"),
            provenance: "Example 2, read as an Ito system",
        },
        other => return Err(Error::InvalidParameter(format!("unknown system '{other}'"))),
    };
    Ok(entry)
}

/// Looks up a named manifold.
pub fn manifold<T: Scalar>(name: &str) -> Result<GraphManifold<T>> {
    match name {
        "example2-log" => GraphManifold::new(
            name,
            Arc::new(ClosedForm::LogGraph),
            AxisBox::new(&[(T::lit(0.05), T::lit(20.0)), (T::lit(-100.0), T::lit(100.0))])?,
        ),
        "unit-circle" => GraphManifold::new(
            name,
            Arc::new(poly::<T>(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])])),
            AxisBox::new(&[(T::lit(-2.0), T::lit(2.0)), (T::lit(-2.0), T::lit(2.0))])?,
        )
        .map(|m| m.with_bracket_hint(T::zero(), T::lit(2.0))),
        other => Err(Error::InvalidParameter(format!("unknown manifold '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Monomial, VectorField};

    fn coeffs(p: &Polynomial<f64>) -> Vec<(f64, Vec<u32>)> {
        p.terms()
            .iter()
            .map(|Monomial { coefficient, exponents }| (*coefficient, exponents.clone()))
            .collect()
    }

    #[test]
    fn all_names_resolve() {
        for n in SYSTEM_NAMES {
            assert_eq!(system::<f64>(n).unwrap().name, *n);
        }
        for n in MANIFOLD_NAMES {
            assert_eq!(manifold::<f64>(n).unwrap().name(), *n);
        }
        assert!(system::<f64>("example3").is_err());
    }

    #[test]
    fn example1_coefficients_match_literals() {
        let strat = system::<f64>("example1-strat").unwrap();
        let d = strat.system.drift().as_polynomial().unwrap();
        assert_eq!(
            coeffs(d.component(0)),
            vec![(-1.5, vec![1, 0]), (-1.0, vec![3, 0]), (1.0, vec![1, 2])]
        );
        assert_eq!(
            coeffs(d.component(1)),
            vec![
                (-2.0, vec![0, 0]),
                (-0.5, vec![0, 1]),
                (1.0, vec![2, 1]),
                (-1.0, vec![0, 3])
            ]
        );
        let ito = system::<f64>("example1-ito").unwrap();
        let d = ito.system.drift().as_polynomial().unwrap();
        assert_eq!(
            coeffs(d.component(0)),
            vec![(-1.0, vec![1, 0]), (-1.0, vec![3, 0]), (1.0, vec![1, 2])]
        );
        assert_eq!(
            coeffs(d.component(1)),
            vec![(-2.0, vec![0, 0]), (1.0, vec![2, 1]), (-1.0, vec![0, 3])]
        );
        assert_eq!(
            ito.linear.unwrap(),
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(ito.system.drift().eval(&[1.0, 1.0]).unwrap(), vec![-1.0, -2.0]);
    }

    #[test]
    fn example2_coefficients_match_literals() {
        let e = system::<f64>("example2").unwrap();
        let d = e.system.drift().as_polynomial().unwrap();
        assert_eq!(coeffs(d.component(0)), vec![(1.0, vec![1, 0])]);
        assert_eq!(coeffs(d.component(1)), vec![(3.0, vec![1, 0]), (2.0, vec![0, 1])]);
        let b = e.system.diffusion().as_polynomial().unwrap();
        for j in 0..2 {
            assert_eq!(coeffs(b.entry(0, j)), vec![(1.0, vec![1, 0])]);
            assert_eq!(coeffs(b.entry(1, j)), vec![(1.0, vec![1, 0]), (1.0, vec![0, 1])]);
        }
    }

    #[test]
    fn truncated_system_matches_ito_form_near_origin() {
        let full = system::<f64>("example1-ito").unwrap().system;
        let trunc = system::<f64>("example1-truncated").unwrap().system;
        let x = [0.1, -0.2];
        assert_eq!(full.drift().eval(&x).unwrap(), trunc.drift().eval(&x).unwrap());
        // outside the disk only the linear part survives
        assert_eq!(trunc.drift().eval(&[3.0, 1.0]).unwrap(), vec![-3.0, 0.0]);
    }
}
