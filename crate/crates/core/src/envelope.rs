//! Lipschitz regularization of a cost and the monotone value chain it
//! induces.
//!
//! `c_n(x,y) = min_{(z,t)} { min(c(z,t), n) + n [dX(x,z) + dY(y,t)] }` is
//! n-Lipschitz for the sum metric, satisfies `0 <= c_n <= min(c, n)` and
//! increases with `n`. On a finite space it reaches `c` at a finite level.

use crate::error::{Axis, Error, Result};
use crate::instance::{CostMatrix, Instance, ValidatedInstance};
use crate::matrix::Matrix;
use crate::num::{Extended, Scalar};
use crate::primal::solve_primal;

fn check_inputs<T: Scalar>(cost: &CostMatrix<T>, dx: &Matrix<T>, dy: &Matrix<T>) -> Result<()> {
    let (rows, cols) = cost.shape();
    for (what, expected, found) in [
        ("X metric", rows, dx.rows()),
        ("X metric", rows, dx.cols()),
        ("Y metric", cols, dy.rows()),
        ("Y metric", cols, dy.cols()),
    ] {
        if expected != found {
            return Err(Error::DimensionMismatch {
                what: what.into(),
                expected,
                found,
            });
        }
    }
    if let Some(((row, col), _)) = cost
        .entries()
        .indexed()
        .find(|(_, c)| c.finite().is_some_and(|v| *v < T::zero()))
    {
        return Err(Error::NegativeCost { row, col });
    }
    Ok(())
}

fn check_level<T: Scalar>(n: &T) -> Result<()> {
    if *n <= T::zero() {
        return Err(Error::InvalidLevel(n.render()));
    }
    Ok(())
}

/// Direct evaluation over all `(z, t)` for every cell: `O(|X|^2 |Y|^2)`.
pub fn lipschitz_envelope<T: Scalar>(
    cost: &CostMatrix<T>,
    dx: &Matrix<T>,
    dy: &Matrix<T>,
    n: &T,
) -> Result<CostMatrix<T>> {
    check_inputs(cost, dx, dy)?;
    check_level(n)?;
    let (rows, cols) = cost.shape();
    let truncated = cost.entries().map(|c| c.min_with(n));
    let out = Matrix::from_fn(rows, cols, |i, j| {
        let mut best: Option<T> = None;
        for k in 0..rows {
            for l in 0..cols {
                let candidate = truncated[(k, l)].clone() + n.clone() * (dx[(i, k)].clone() + dy[(j, l)].clone());
                if best.as_ref().is_none_or(|b| candidate < *b) {
                    best = Some(candidate);
                }
            }
        }
        best.expect("nonempty spaces")
    });
    Ok(CostMatrix::from_finite(out))
}

/// Same values as [`lipschitz_envelope`], computed as two one-dimensional
/// inf-convolutions (first along Y, then along X): `O(|X||Y|(|X| + |Y|))`.
pub fn lipschitz_envelope_two_pass<T: Scalar>(
    cost: &CostMatrix<T>,
    dx: &Matrix<T>,
    dy: &Matrix<T>,
    n: &T,
) -> Result<CostMatrix<T>> {
    check_inputs(cost, dx, dy)?;
    check_level(n)?;
    let (rows, cols) = cost.shape();
    let truncated = cost.entries().map(|c| c.min_with(n));
    let along_y = Matrix::from_fn(rows, cols, |k, j| {
        (0..cols)
            .map(|l| truncated[(k, l)].clone() + n.clone() * dy[(j, l)].clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("nonempty")
    });
    let out = Matrix::from_fn(rows, cols, |i, j| {
        (0..rows)
            .map(|k| along_y[(k, j)].clone() + n.clone() * dx[(i, k)].clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("nonempty")
    });
    Ok(CostMatrix::from_finite(out))
}

/// Both metrics of an instance, or `MissingMetric`.
pub fn metrics<T: Scalar>(instance: &Instance<T>) -> Result<(&Matrix<T>, &Matrix<T>)> {
    let dx = instance.space_x.metric.as_ref().ok_or(Error::MissingMetric(Axis::X))?;
    let dy = instance.space_y.metric.as_ref().ok_or(Error::MissingMetric(Axis::Y))?;
    Ok((dx, dy))
}

/// Smallest level `n*` at which the envelope reproduces the cost exactly.
///
/// `c_n = c` iff `n >= max c` and `c(i,j) - c(k,l) <= n [dX(i,k) + dY(j,l)]`
/// for all cell pairs, so `n*` is one of the breakpoints `max c` or
/// `(c(i,j) - c(k,l)) / (dX(i,k) + dY(j,l))`. The breakpoints are sorted and
/// bisected with the envelope itself as the (monotone) predicate.
pub fn saturation_index<T: Scalar>(cost: &CostMatrix<T>, dx: &Matrix<T>, dy: &Matrix<T>) -> Result<T> {
    check_inputs(cost, dx, dy)?;
    let c = cost.finite()?;
    let top = c
        .iter()
        .fold(T::zero(), |acc, v| if *v > acc { v.clone() } else { acc });
    if top.is_zero() {
        return Ok(T::zero());
    }
    let mut breakpoints = vec![top.clone()];
    for ((i, j), cij) in c.indexed() {
        for ((k, l), ckl) in c.indexed() {
            if cij <= ckl {
                continue;
            }
            let dist = dx[(i, k)].clone() + dy[(j, l)].clone();
            if dist.is_zero() {
                return Err(Error::NoSaturation { a: (i, j), b: (k, l) });
            }
            breakpoints.push((cij.clone() - ckl.clone()) / dist);
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    breakpoints.dedup();
    let reproduces =
        |n: &T| -> Result<bool> { Ok(lipschitz_envelope_two_pass(cost, dx, dy, n)?.entries() == cost.entries()) };
    // Only breakpoints at or above max c can qualify.
    let start = breakpoints.partition_point(|b| *b < top);
    let (mut lo, mut hi) = (start, breakpoints.len() - 1);
    if !reproduces(&breakpoints[hi])? {
        return Err(Error::ChainViolation(breakpoints[hi].render()));
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if reproduces(&breakpoints[mid])? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(breakpoints[lo].clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeLevel<T> {
    pub n: T,
    pub cost: CostMatrix<T>,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSchedule<T> {
    pub levels: Vec<EnvelopeLevel<T>>,
    /// Optimal value under the unregularized cost.
    pub limit_value: Extended<T>,
    /// Smallest listed level whose value equals the limit.
    pub saturation_level: Option<T>,
    /// Level at which the envelope equals the cost, when the cost is bounded
    /// and such a level exists.
    pub saturation_index: Option<T>,
}

fn value_tol<T: Scalar>(cost: &CostMatrix<T>) -> T {
    if T::is_exact() {
        return T::zero();
    }
    let scale = cost
        .entries()
        .iter()
        .filter_map(Extended::finite)
        .fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc });
    T::default_tol() * (T::one() + scale)
}

/// Optimal values of the regularized problems at each level, checked
/// against the chain `v_1 <= v_2 <= ... <= v`.
pub fn envelope_schedule<T: Scalar>(instance: &ValidatedInstance<T>, levels: &[T]) -> Result<EnvelopeSchedule<T>> {
    let (dx, dy) = metrics(instance)?;
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedLevels);
    }
    let limit_value = match solve_primal(instance) {
        Ok(res) => res.value,
        Err(Error::InfeasibleFiniteCost) => Extended::Infinite,
        Err(e) => return Err(e),
    };
    let tol = value_tol(&instance.cost);
    let mut out: Vec<EnvelopeLevel<T>> = Vec::with_capacity(levels.len());
    for n in levels {
        let cost_n = lipschitz_envelope_two_pass(&instance.cost, dx, dy, n)?;
        let regularized = Instance {
            cost: cost_n.clone(),
            ..Instance::clone(instance)
        }
        .validate()?;
        let value = solve_primal(&regularized)?
            .value
            .into_finite()
            .expect("envelope costs are finite");
        if let Some(prev) = out.last() {
            if value < prev.value.clone() - tol.clone() {
                return Err(Error::ChainViolation(n.render()));
            }
        }
        if Extended::Finite(value.clone()) > limit_value.add_finite(&tol) {
            return Err(Error::ChainViolation(n.render()));
        }
        out.push(EnvelopeLevel {
            n: n.clone(),
            cost: cost_n,
            value,
        });
    }
    let saturation_level = out
        .iter()
        .find(|l| match limit_value.finite() {
            Some(v) => (l.value.clone() - v.clone()).abs() <= tol,
            None => false,
        })
        .map(|l| l.n.clone());
    let saturation_index = if instance.cost.is_finite_everywhere() {
        match saturation_index(&instance.cost, dx, dy) {
            Ok(n) => Some(n),
            Err(Error::NoSaturation { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(EnvelopeSchedule {
        levels: out,
        limit_value,
        saturation_level,
        saturation_index,
    })
}
