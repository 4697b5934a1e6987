//! Finite transport instances and the value functionals shared by every
//! other module.

use std::collections::HashSet;
use std::ops::Deref;

use crate::error::{Axis, Error, MetricDefect, Result};
use crate::matrix::Matrix;
use crate::num::{max_of, Extended, Mode, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace<T> {
    pub labels: Vec<String>,
    pub metric: Option<Matrix<T>>,
}

impl<T: Scalar> FiniteSpace<T> {
    pub fn new(labels: Vec<String>) -> Self {
        FiniteSpace { labels, metric: None }
    }

    /// Space with labels `0..len`.
    pub fn indexed(len: usize) -> Self {
        Self::new((0..len).map(|i| i.to_string()).collect())
    }

    pub fn with_metric(mut self, metric: Matrix<T>) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Checks the metric axioms: square, nonnegative, zero diagonal, symmetric,
/// triangle inequality over all triples.
pub fn check_metric<T: Scalar>(d: &Matrix<T>) -> std::result::Result<(), MetricDefect> {
    let (rows, cols) = d.shape();
    if rows != cols {
        return Err(MetricDefect::NotSquare { rows, cols });
    }
    let n = rows;
    for i in 0..n {
        if !d[(i, i)].is_zero() {
            return Err(MetricDefect::NonzeroDiagonal { i });
        }
        for j in 0..n {
            if d[(i, j)] < T::zero() {
                return Err(MetricDefect::Negative { i, j });
            }
            if d[(i, j)] != d[(j, i)] {
                return Err(MetricDefect::Asymmetric { i, j });
            }
        }
    }
    for from in 0..n {
        for to in 0..n {
            for via in 0..n {
                if d[(from, to)] > d[(from, via)].clone() + d[(via, to)].clone() {
                    return Err(MetricDefect::Triangle { from, via, to });
                }
            }
        }
    }
    Ok(())
}

/// `|X| x |Y|` cost with entries in `(-inf, +inf]`.
///
/// `bounded` is a declaration: a bounded cost must be finite everywhere and
/// validation enforces it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    entries: Matrix<Extended<T>>,
    bounded: bool,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(entries: Matrix<Extended<T>>) -> Self {
        CostMatrix {
            entries,
            bounded: false,
        }
    }

    pub fn declared_bounded(entries: Matrix<Extended<T>>) -> Self {
        CostMatrix { entries, bounded: true }
    }

    pub fn from_finite(entries: Matrix<T>) -> Self {
        Self::declared_bounded(entries.map(|v| Extended::Finite(v.clone())))
    }

    /// Convenience for tests and fixtures: small integer/fraction costs.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        Ok(Self::from_finite(Matrix::from_rows(rows)?))
    }

    pub fn entries(&self) -> &Matrix<Extended<T>> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &Extended<T> {
        &self.entries[(i, j)]
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    pub fn is_declared_bounded(&self) -> bool {
        self.bounded
    }

    pub fn is_finite_everywhere(&self) -> bool {
        self.entries.iter().all(Extended::is_finite)
    }

    /// The finite entries, or `UnboundedCost` if any entry is `+inf`.
    pub fn finite(&self) -> Result<Matrix<T>> {
        if !self.is_finite_everywhere() {
            return Err(Error::UnboundedCost);
        }
        Ok(self.entries.map(|e| e.finite().cloned().expect("checked finite")))
    }

    /// `max |c(i,j)|` for a bounded cost.
    pub fn sup_norm(&self) -> Result<T> {
        let finite = self.finite()?;
        Ok(finite.iter().fold(T::zero(), |acc, v| max_of(acc, v.abs())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    pub weights: Vec<T>,
}

impl<T: Scalar> Marginal<T> {
    pub fn new(weights: Vec<T>) -> Self {
        Marginal { weights }
    }

    pub fn uniform(len: usize) -> Self {
        let w = T::one() / T::from_i64(len as i64);
        Marginal::new(vec![w; len])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, w| acc + w.clone())
    }

    /// Nonnegativity and total mass one, up to `T::mass_tol()`.
    pub fn validate(&self, axis: Axis) -> Result<()> {
        if let Some(index) = self.weights.iter().position(|w| *w < T::zero()) {
            return Err(Error::NegativeMass { axis, index });
        }
        let sum = self.total();
        if (sum.clone() - T::one()).abs() > T::mass_tol() {
            return Err(Error::MassNotOne {
                axis,
                sum: sum.render(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub entries: Matrix<T>,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn new(entries: Matrix<T>) -> Self {
        TransportPlan { entries }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[(i, j)]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.entries.rows())
            .map(|i| self.entries.row(i).iter().fold(T::zero(), |acc, v| acc + v.clone()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let (rows, cols) = self.shape();
        (0..cols)
            .map(|j| (0..rows).fold(T::zero(), |acc, i| acc + self.entries[(i, j)].clone()))
            .collect()
    }

    /// Cells carrying mass above `threshold`, row-major.
    pub fn support(&self, threshold: &T) -> Vec<(usize, usize)> {
        self.entries
            .indexed()
            .filter(|(_, m)| *m > threshold)
            .map(|(ij, _)| ij)
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|m| *m >= T::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials<T> {
    pub phi: Vec<T>,
    pub psi: Vec<T>,
}

impl<T: Scalar> DualPotentials<T> {
    pub fn new(phi: Vec<T>, psi: Vec<T>) -> Self {
        DualPotentials { phi, psi }
    }

    /// `phi(i) + psi(j)`.
    pub fn sum_at(&self, i: usize, j: usize) -> T {
        self.phi[i].clone() + self.psi[j].clone()
    }

    /// First cell (row-major) where `phi(i) + psi(j) > c(i,j) + tol`.
    pub fn first_violation(&self, cost: &CostMatrix<T>, tol: &T) -> Option<(usize, usize)> {
        cost.entries().indexed().find_map(|((i, j), c)| match c {
            Extended::Finite(c) if self.sum_at(i, j) > c.clone() + tol.clone() => Some((i, j)),
            _ => None,
        })
    }

    pub fn is_feasible(&self, cost: &CostMatrix<T>, tol: &T) -> bool {
        self.first_violation(cost, tol).is_none()
    }

    /// `(phi + a, psi - a)`.
    pub fn shifted(&self, a: &T) -> Self {
        DualPotentials {
            phi: self.phi.iter().map(|v| v.clone() + a.clone()).collect(),
            psi: self.psi.iter().map(|v| v.clone() - a.clone()).collect(),
        }
    }

    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        check_len("phi", rows, self.phi.len())?;
        check_len("psi", cols, self.psi.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub space_x: FiniteSpace<T>,
    pub space_y: FiniteSpace<T>,
    pub cost: CostMatrix<T>,
    pub mu: Marginal<T>,
    pub nu: Marginal<T>,
}

impl<T: Scalar> Instance<T> {
    /// Instance over index-labelled spaces without metrics.
    pub fn new(cost: CostMatrix<T>, mu: Marginal<T>, nu: Marginal<T>) -> Self {
        Instance {
            space_x: FiniteSpace::indexed(mu.len()),
            space_y: FiniteSpace::indexed(nu.len()),
            cost,
            mu,
            nu,
        }
    }

    pub fn with_metrics(mut self, dx: Matrix<T>, dy: Matrix<T>) -> Self {
        self.space_x.metric = Some(dx);
        self.space_y.metric = Some(dy);
        self
    }

    pub fn mode(&self) -> Mode {
        T::MODE
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.space_x.len(), self.space_y.len())
    }

    pub fn validate(self) -> Result<ValidatedInstance<T>> {
        validate_instance(self)
    }
}

/// An [`Instance`] whose invariants have been checked. Only obtainable via
/// [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedInstance<T>(Instance<T>);

impl<T> Deref for ValidatedInstance<T> {
    type Target = Instance<T>;

    fn deref(&self) -> &Instance<T> {
        &self.0
    }
}

impl<T> ValidatedInstance<T> {
    pub fn into_inner(self) -> Instance<T> {
        self.0
    }
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

fn validate_space<T: Scalar>(space: &FiniteSpace<T>, axis: Axis) -> Result<()> {
    if space.is_empty() {
        return Err(Error::EmptySpace(axis));
    }
    let mut seen = HashSet::new();
    for label in &space.labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel {
                axis,
                label: label.clone(),
            });
        }
    }
    if let Some(metric) = &space.metric {
        check_metric(metric).map_err(|defect| Error::MetricViolation { axis, defect })?;
        check_len(&format!("metric on {axis}"), space.len(), metric.rows())?;
    }
    Ok(())
}

pub fn validate_instance<T: Scalar>(raw: Instance<T>) -> Result<ValidatedInstance<T>> {
    validate_space(&raw.space_x, Axis::X)?;
    validate_space(&raw.space_y, Axis::Y)?;
    let (m, n) = raw.shape();
    check_len("cost rows", m, raw.cost.rows())?;
    check_len("cost columns", n, raw.cost.cols())?;
    check_len("mu", m, raw.mu.len())?;
    check_len("nu", n, raw.nu.len())?;
    raw.mu.validate(Axis::X)?;
    raw.nu.validate(Axis::Y)?;
    if raw.cost.is_declared_bounded() {
        if let Some(((row, col), _)) = raw.cost.entries().indexed().find(|(_, c)| !c.is_finite()) {
            return Err(Error::InfiniteCostInBoundedMode { row, col });
        }
    }
    Ok(ValidatedInstance(raw))
}

/// `sum_ij plan(i,j) * c(i,j)`, `+inf` when positive mass sits on an
/// infinite cell.
pub fn plan_cost<T: Scalar>(plan: &TransportPlan<T>, cost: &CostMatrix<T>) -> Result<Extended<T>> {
    let (rows, cols) = cost.shape();
    check_len("plan rows", rows, plan.entries.rows())?;
    check_len("plan columns", cols, plan.entries.cols())?;
    Ok(plan.entries.indexed().fold(Extended::zero(), |acc, ((i, j), mass)| {
        acc + cost.get(i, j).weighted(mass)
    }))
}

/// `sum_i phi(i) mu(i) + sum_j psi(j) nu(j)`.
pub fn dual_value<T: Scalar>(pot: &DualPotentials<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<T> {
    pot.check_shape(mu.len(), nu.len())?;
    let dot = |a: &[T], b: &[T]| {
        a.iter()
            .zip(b)
            .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
    };
    Ok(dot(&pot.phi, &mu.weights) + dot(&pot.psi, &nu.weights))
}

/// The independent coupling `mu ⊗ nu`.
pub fn product_plan<T: Scalar>(mu: &Marginal<T>, nu: &Marginal<T>) -> TransportPlan<T> {
    TransportPlan::new(Matrix::from_fn(mu.len(), nu.len(), |i, j| {
        mu.weights[i].clone() * nu.weights[j].clone()
    }))
}
