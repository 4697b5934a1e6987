//! c-transforms, double transforms, the induced pseudometrics and the
//! normalized potential pair.
//!
//! For a potential `phi` on X the c-transform is
//! `phi^c(j) = min_i { c(i,j) - phi(i) }`, the largest `psi` keeping
//! `(phi, psi)` feasible. The mirrored c̄-transform of `psi` on Y is
//! `psi^cbar(i) = min_j { c(i,j) - psi(j) }`.

use crate::error::{Axis, Error, Result};
use crate::instance::{CostMatrix, DualPotentials};
use crate::matrix::Matrix;
use crate::num::{max_of, Extended, Scalar};

/// A value of a transform together with the smallest index attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Witnessed<T> {
    pub value: T,
    pub argmin: usize,
}

fn check_len(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Inner minimization shared by both transforms. `entry(outer, inner)` yields
/// the cost seen from the outer index.
fn transform_along<T: Scalar>(
    potential: &[T],
    outer_len: usize,
    entry: impl Fn(usize, usize) -> Extended<T>,
) -> Result<Vec<Witnessed<T>>> {
    (0..outer_len)
        .map(|outer| {
            let mut best: Option<Witnessed<T>> = None;
            for (inner, p) in potential.iter().enumerate() {
                if let Extended::Finite(c) = entry(outer, inner) {
                    let candidate = c - p.clone();
                    if best.as_ref().is_none_or(|b| candidate < b.value) {
                        best = Some(Witnessed {
                            value: candidate,
                            argmin: inner,
                        });
                    }
                }
            }
            best.ok_or(Error::UnboundedTransform { index: outer })
        })
        .collect()
}

/// `phi^c`, with the smallest minimizing row for each column.
pub fn c_transform_with_witness<T: Scalar>(phi: &[T], cost: &CostMatrix<T>) -> Result<Vec<Witnessed<T>>> {
    check_len("phi", cost.rows(), phi.len())?;
    transform_along(phi, cost.cols(), |j, i| cost.get(i, j).clone())
}

/// `psi^cbar`, with the smallest minimizing column for each row.
pub fn cbar_transform_with_witness<T: Scalar>(psi: &[T], cost: &CostMatrix<T>) -> Result<Vec<Witnessed<T>>> {
    check_len("psi", cost.cols(), psi.len())?;
    transform_along(psi, cost.rows(), |i, j| cost.get(i, j).clone())
}

pub fn c_transform<T: Scalar>(phi: &[T], cost: &CostMatrix<T>) -> Result<Vec<T>> {
    Ok(c_transform_with_witness(phi, cost)?
        .into_iter()
        .map(|w| w.value)
        .collect())
}

pub fn cbar_transform<T: Scalar>(psi: &[T], cost: &CostMatrix<T>) -> Result<Vec<T>> {
    Ok(cbar_transform_with_witness(psi, cost)?
        .into_iter()
        .map(|w| w.value)
        .collect())
}

/// `phi^{c cbar}`.
pub fn double_transform<T: Scalar>(phi: &[T], cost: &CostMatrix<T>) -> Result<Vec<T>> {
    cbar_transform(&c_transform(phi, cost)?, cost)
}

/// `(phi^{c cbar} + m, phi^c - m)` with `m = min_j phi^c(j)`.
///
/// For bounded `c` the second component lies in `[0, 2|c|]` and the first in
/// `[-3|c|, |c|]`, where `|c|` is the sup norm.
pub fn normalize_pair<T: Scalar>(phi: &[T], cost: &CostMatrix<T>) -> Result<DualPotentials<T>> {
    if !cost.is_finite_everywhere() {
        return Err(Error::UnboundedCost);
    }
    let phi_c = c_transform(phi, cost)?;
    let m = phi_c
        .iter()
        .skip(1)
        .fold(phi_c[0].clone(), |acc, v| if *v < acc { v.clone() } else { acc });
    let phi_ccbar = cbar_transform(&phi_c, cost)?;
    Ok(DualPotentials {
        phi: phi_ccbar.into_iter().map(|v| v + m.clone()).collect(),
        psi: phi_c.into_iter().map(|v| v - m.clone()).collect(),
    })
}

/// Square pseudometric over one of the two spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudometricMatrix<T> {
    pub axis: Axis,
    pub entries: Matrix<T>,
}

impl<T> PseudometricMatrix<T> {
    pub fn get(&self, a: usize, b: usize) -> &T {
        &self.entries[(a, b)]
    }

    pub fn len(&self) -> usize {
        self.entries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.rows() == 0
    }
}

/// Worst-case cost variation between two points of one space, taken over
/// the other space:
///
/// * `Axis::X`: `d(i,i') = max_j |c(i,j) - c(i',j)|`
/// * `Axis::Y`: `d(j,j') = max_i |c(i,j) - c(i,j')|`
///
/// `phi^c` is 1-Lipschitz for the Y pseudometric and `phi^{c cbar}` for the
/// X one.
pub fn induced_pseudometric<T: Scalar>(cost: &CostMatrix<T>, axis: Axis) -> Result<PseudometricMatrix<T>> {
    let c = cost.finite()?;
    let (rows, cols) = c.shape();
    let entries = match axis {
        Axis::X => Matrix::from_fn(rows, rows, |a, b| {
            (0..cols).fold(T::zero(), |acc, j| {
                max_of(acc, (c[(a, j)].clone() - c[(b, j)].clone()).abs())
            })
        }),
        Axis::Y => Matrix::from_fn(cols, cols, |a, b| {
            (0..rows).fold(T::zero(), |acc, i| {
                max_of(acc, (c[(i, a)].clone() - c[(i, b)].clone()).abs())
            })
        }),
    };
    Ok(PseudometricMatrix { axis, entries })
}

/// Scale-aware tolerance for concavity checks: zero when exact,
/// `1e-9 * (1 + |c|)` in float mode.
pub fn default_concavity_tol<T: Scalar>(cost: &CostMatrix<T>) -> Result<T> {
    let norm = cost.sup_norm()?;
    if T::is_exact() {
        Ok(T::zero())
    } else {
        Ok(T::default_tol() * (T::one() + norm))
    }
}

fn sup_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| max_of(acc, (x.clone() - y.clone()).abs()))
}

/// Whether `phi` is fixed by the double transform: `|phi^{c cbar} - phi| <= tol`.
pub fn is_c_concave<T: Scalar>(phi: &[T], cost: &CostMatrix<T>, tol: &T) -> Result<bool> {
    if !cost.is_finite_everywhere() {
        return Err(Error::UnboundedCost);
    }
    let lifted = double_transform(phi, cost)?;
    Ok(sup_distance(&lifted, phi) <= *tol)
}

/// Mirror of [`is_c_concave`] for potentials on Y: `|psi^{cbar c} - psi| <= tol`.
pub fn is_cbar_concave<T: Scalar>(psi: &[T], cost: &CostMatrix<T>, tol: &T) -> Result<bool> {
    if !cost.is_finite_everywhere() {
        return Err(Error::UnboundedCost);
    }
    let lifted = c_transform(&cbar_transform(psi, cost)?, cost)?;
    Ok(sup_distance(&lifted, psi) <= *tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn qs(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| q(x)).collect()
    }

    fn cost(rows: &[&[i64]]) -> CostMatrix<Rational> {
        CostMatrix::from_rows(rows.iter().map(|r| qs(r)).collect()).unwrap()
    }

    fn fixture() -> CostMatrix<Rational> {
        cost(&[&[0, 2], &[2, 1]])
    }

    #[test]
    fn c_transform_examples() {
        assert_eq!(c_transform(&qs(&[0, 0]), &fixture()).unwrap(), qs(&[0, 1]));
        assert_eq!(c_transform(&qs(&[0]), &cost(&[&[5, 7]])).unwrap(), qs(&[5, 7]));
        let phi = qs(&[4, -1]);
        let shifted: Vec<_> = phi.iter().map(|v| v + q(3)).collect();
        let base = c_transform(&phi, &fixture()).unwrap();
        let moved = c_transform(&shifted, &fixture()).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert_eq!(a - q(3), *b);
        }
    }

    #[test]
    fn cbar_transform_examples() {
        assert_eq!(cbar_transform(&qs(&[0, 1]), &fixture()).unwrap(), qs(&[0, 0]));
        assert_eq!(cbar_transform(&qs(&[1]), &cost(&[&[4], &[6]])).unwrap(), qs(&[3, 5]));
        let psi = qs(&[2, -5]);
        let shifted: Vec<_> = psi.iter().map(|v| v + q(3)).collect();
        let base = cbar_transform(&psi, &fixture()).unwrap();
        let moved = cbar_transform(&shifted, &fixture()).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert_eq!(a - q(3), *b);
        }
    }

    #[test]
    fn witness_breaks_ties_by_smallest_index() {
        let c = cost(&[&[1, 3], &[1, 2]]);
        let w = c_transform_with_witness(&qs(&[0, 0]), &c).unwrap();
        assert_eq!(w[0], Witnessed { value: q(1), argmin: 0 });
        assert_eq!(w[1], Witnessed { value: q(2), argmin: 1 });
    }

    #[test]
    fn all_infinite_column_is_an_error() {
        let entries = Matrix::from_rows(vec![
            vec![Extended::Finite(q(0)), Extended::Infinite],
            vec![Extended::Finite(q(1)), Extended::Infinite],
        ])
        .unwrap();
        let c = CostMatrix::new(entries);
        assert_eq!(
            c_transform(&qs(&[0, 0]), &c).unwrap_err(),
            Error::UnboundedTransform { index: 1 }
        );
        assert_eq!(cbar_transform(&qs(&[0, 0]), &c).unwrap(), qs(&[0, 1]));
        assert_eq!(normalize_pair(&qs(&[0, 0]), &c).unwrap_err(), Error::UnboundedCost);
    }

    #[test]
    fn normalize_pair_examples() {
        let pair = normalize_pair(&qs(&[0, 0]), &fixture()).unwrap();
        assert_eq!(pair.phi, qs(&[0, 0]));
        assert_eq!(pair.psi, qs(&[0, 1]));
        let shifted = normalize_pair(&qs(&[7, 7]), &fixture()).unwrap();
        assert_eq!(shifted, pair);
    }

    #[test]
    fn induced_pseudometric_examples() {
        let dy = induced_pseudometric(&fixture(), Axis::Y).unwrap();
        let dx = induced_pseudometric(&fixture(), Axis::X).unwrap();
        assert_eq!(*dy.get(0, 1), q(2));
        assert_eq!(*dx.get(0, 1), q(2));
        assert_eq!(*dx.get(1, 1), q(0));

        // c = a ⊕ b with a = (1, 5), b = (0, 3, -2)
        let sep = cost(&[&[1, 4, -1], &[5, 8, 3]]);
        let dy = induced_pseudometric(&sep, Axis::Y).unwrap();
        assert_eq!(*dy.get(0, 1), q(3));
        assert_eq!(*dy.get(1, 2), q(5));
        assert_eq!(*dy.get(0, 2), q(2));

        let flat = induced_pseudometric(&cost(&[&[4, 4], &[4, 4]]), Axis::X).unwrap();
        assert!(flat.entries.iter().all(|v| *v == q(0)));
    }

    #[test]
    fn c_concavity_examples() {
        let zero = Rational::from_i64(0);
        assert!(is_c_concave(&qs(&[0, 0]), &fixture(), &zero).unwrap());
        // Constant shifts of a c-concave potential stay c-concave.
        assert!(is_c_concave(&qs(&[-10, -10]), &fixture(), &zero).unwrap());
        // Strictly dominated at x1: the double transform lifts it to -1.
        assert!(!is_c_concave(&qs(&[0, -10]), &fixture(), &zero).unwrap());
        assert_eq!(double_transform(&qs(&[0, -10]), &fixture()).unwrap(), qs(&[0, -1]));
        let psi = c_transform(&qs(&[3, -4]), &fixture()).unwrap();
        assert!(is_cbar_concave(&psi, &fixture(), &zero).unwrap());
    }

    #[test]
    fn float_tolerance_scales_with_cost() {
        let c = CostMatrix::from_rows(vec![vec![0.0, 1000.0], vec![2.0, 1.0]]).unwrap();
        let tol = default_concavity_tol(&c).unwrap();
        assert!((tol - 1e-9 * 1001.0).abs() < 1e-18);
        assert_eq!(default_concavity_tol(&fixture()).unwrap(), q(0));
    }
}
