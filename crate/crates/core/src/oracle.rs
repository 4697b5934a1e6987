//! Brute-force ground truth for small instances.
//!
//! Every vertex of the transportation polytope is the unique solution of the
//! marginal equations restricted to some spanning tree of the complete
//! bipartite graph `K_{|X|,|Y|}`. The oracle enumerates spanning trees, solves
//! each tree's triangular system, keeps the nonnegative ones and takes the
//! cheapest. It shares no code with the simplex solver.
//!
//! Trees are generated through their smallest-leaf elimination sequence
//! (the sequence behind Prüfer codes): at every step the smallest leaf of the
//! remaining tree is removed together with its unique edge. Solving the
//! marginal system by the same elimination assigns the leaf's residual mass
//! to that edge, so a branch can be cut as soon as a residual goes negative.
//! Choosing a leaf obliges every smaller remaining node to be hit as a
//! neighbour by some later step other than the last one; those are exactly
//! the smallest-leaf sequences, so each tree is produced once.
//!
//! Exact instances are scanned in scaled 128-bit integers whenever the common
//! denominators allow it, falling back to big rationals otherwise; float
//! instances are scanned in `f64`. Only the selected trees are re-solved in
//! the instance's own arithmetic.

use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::instance::{plan_cost, DualPotentials, TransportPlan, ValidatedInstance};
use crate::matrix::Matrix;
use crate::num::{max_of, Extended, Rational, Scalar};
use crate::primal::OptimalPlanResult;

/// Spanning-tree budget covering every instance with `|X| |Y| <= 16`
/// (`4 x 4` has 4096 trees).
/// Tree cells in elimination order.
type Order = Vec<(usize, usize)>;

pub const DEFAULT_ORACLE_BUDGET: u128 = 4096;

/// `|X|^(|Y|-1) * |Y|^(|X|-1)`, saturating.
pub fn spanning_tree_count(m: usize, n: usize) -> u128 {
    if m == 0 || n == 0 {
        return 0;
    }
    let pow = |b: usize, e: usize| (0..e).fold(1u128, |acc, _| acc.saturating_mul(b as u128));
    pow(m, n - 1).saturating_mul(pow(n, m - 1))
}

/// One basic solution: tree cells in row-major order with their masses.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSolution<T> {
    pub cells: Vec<(usize, usize)>,
    pub masses: Vec<T>,
}

impl<T: Scalar> TreeSolution<T> {
    pub fn plan(&self, rows: usize, cols: usize) -> TransportPlan<T> {
        let mut m = Matrix::filled(rows, cols, T::zero());
        for (cell, mass) in self.cells.iter().zip(&self.masses) {
            m[*cell] = mass.clone();
        }
        TransportPlan::new(m)
    }
}

/// Arithmetic the scan runs in.
trait Lane: Clone + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {}

impl<R> Lane for R where R: Clone + PartialOrd + Zero + Add<Output = R> + Sub<Output = R> + Mul<Output = R> {}

/// An elimination step: `(leaf node, neighbour node, mass on the edge)`.
/// Nodes `0..rows` are X points, the rest Y points.
type Step<R> = (usize, usize, R);

struct Peeler<'a, R> {
    rows: usize,
    nodes: usize,
    present: Vec<bool>,
    obligated: Vec<bool>,
    obligations: usize,
    scratch: Vec<usize>,
    residual: Vec<R>,
    prune: bool,
    tol: R,
    steps: Vec<Step<R>>,
    stopped: bool,
    visit: &'a mut dyn FnMut(&[Step<R>]) -> bool,
}

impl<'a, R: Lane> Peeler<'a, R> {
    fn new(rows: usize, residual: Vec<R>, prune: bool, tol: R, visit: &'a mut dyn FnMut(&[Step<R>]) -> bool) -> Self {
        let nodes = residual.len();
        Peeler {
            rows,
            nodes,
            present: vec![true; nodes],
            obligated: vec![false; nodes],
            obligations: 0,
            scratch: Vec::with_capacity(nodes * nodes),
            residual,
            prune,
            tol,
            steps: Vec::with_capacity(nodes),
            stopped: false,
            visit,
        }
    }

    fn side(&self, v: usize) -> bool {
        v < self.rows
    }

    fn start(mut self) {
        let nodes = self.nodes;
        if nodes > 0 {
            self.run(nodes);
        }
    }

    fn run(&mut self, remaining: usize) {
        if remaining == 1 {
            if !(self.visit)(&self.steps) {
                self.stopped = true;
            }
            return;
        }
        for leaf in 0..self.nodes {
            if self.stopped {
                return;
            }
            if !self.present[leaf] || self.obligated[leaf] {
                continue;
            }
            // Every smaller node still present must not be a leaf now, so it
            // has to show up as a neighbour later.
            let mark = self.scratch.len();
            for u in 0..leaf {
                if self.present[u] && !self.obligated[u] {
                    self.obligated[u] = true;
                    self.scratch.push(u);
                }
            }
            let newly = self.scratch.len() - mark;
            self.obligations += newly;
            self.present[leaf] = false;

            for nb in 0..self.nodes {
                if self.stopped {
                    break;
                }
                if !self.present[nb] || self.side(nb) == self.side(leaf) {
                    continue;
                }
                let was_obligated = self.obligated[nb];
                if was_obligated {
                    // The last step leaves its neighbour with degree one
                    // before it, so it cannot settle an obligation.
                    if remaining == 2 {
                        continue;
                    }
                    self.obligated[nb] = false;
                    self.obligations -= 1;
                }
                // Steps still able to settle obligations: all but the last.
                if self.obligations + 3 <= remaining.max(3) {
                    let mass = self.residual[leaf].clone();
                    let left = self.residual[nb].clone() - mass.clone();
                    if !self.prune || left.clone() + self.tol.clone() >= R::zero() {
                        let saved = std::mem::replace(&mut self.residual[nb], left);
                        self.steps.push((leaf, nb, mass));
                        self.run(remaining - 1);
                        self.steps.pop();
                        self.residual[nb] = saved;
                    }
                }
                if was_obligated {
                    self.obligated[nb] = true;
                    self.obligations += 1;
                }
            }

            self.present[leaf] = true;
            for k in mark..self.scratch.len() {
                let u = self.scratch[k];
                self.obligated[u] = false;
            }
            self.scratch.truncate(mark);
            self.obligations -= newly;
        }
    }
}

fn cell_of(rows: usize, a: usize, b: usize) -> (usize, usize) {
    if a < rows {
        (a, b - rows)
    } else {
        (b, a - rows)
    }
}

/// Every spanning tree of `K_{rows,cols}` as a row-major cell list, in a
/// deterministic order.
pub fn enumerate_spanning_trees(rows: usize, cols: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    if rows == 0 || cols == 0 {
        return;
    }
    let mut cells = Vec::with_capacity(rows + cols);
    let mut sink = |steps: &[Step<i128>]| {
        cells.clear();
        cells.extend(steps.iter().map(|&(a, b, _)| cell_of(rows, a, b)));
        cells.sort_unstable();
        visit(&cells);
        true
    };
    Peeler::new(rows, vec![0i128; rows + cols], false, 0, &mut sink).start();
}

/// An instance restated in the scan arithmetic.
struct Problem<R> {
    rows: usize,
    cols: usize,
    /// `mu` followed by `nu`, possibly scaled by a common factor.
    weights: Vec<R>,
    /// Row-major, `None` for `+inf`, possibly scaled by a common factor.
    cost: Vec<Option<R>>,
    mass_tol: R,
    cost_tol: R,
}

enum Scan {
    Int(Problem<i128>),
    Exact(Problem<Rational>),
    Float(Problem<f64>),
}

/// Integers `v * L` where `L` is the least common denominator, if every one
/// stays below `2^60` in magnitude.
fn scale_to_int(values: &[Rational]) -> Option<Vec<i128>> {
    let lcm = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let limit: BigInt = BigInt::one() << 60usize;
    values
        .iter()
        .map(|v| {
            let scaled = v.numer() * (&lcm / v.denom());
            if scaled.magnitude() >= limit.magnitude() {
                None
            } else {
                scaled.to_i128()
            }
        })
        .collect()
}

impl Scan {
    fn of<T: Scalar>(instance: &ValidatedInstance<T>) -> Scan {
        let (rows, cols) = instance.shape();
        let weights: Vec<&T> = instance.mu.weights.iter().chain(&instance.nu.weights).collect();
        let cost: Vec<&Extended<T>> = instance.cost.entries().iter().collect();
        if !T::is_exact() {
            let scale = cost
                .iter()
                .filter_map(|c| c.finite())
                .fold(T::zero(), |acc, v| max_of(acc, v.abs()));
            return Scan::Float(Problem {
                rows,
                cols,
                weights: weights.iter().map(|w| w.to_f64()).collect(),
                cost: cost.iter().map(|c| c.finite().map(Scalar::to_f64)).collect(),
                mass_tol: T::support_tol().to_f64(),
                cost_tol: (T::default_tol() * (T::one() + scale)).to_f64(),
            });
        }
        let exact = |v: &T| v.as_rational().expect("exact mode");
        let weights: Vec<Rational> = weights.into_iter().map(exact).collect();
        let finite: Vec<Rational> = cost.iter().filter_map(|c| c.finite()).map(exact).collect();
        if let (Some(w), Some(c)) = (scale_to_int(&weights), scale_to_int(&finite)) {
            let mut c = c.into_iter();
            let cost = cost.iter().map(|e| e.finite().and_then(|_| c.next())).collect();
            return Scan::Int(Problem {
                rows,
                cols,
                weights: w,
                cost,
                mass_tol: 0,
                cost_tol: 0,
            });
        }
        Scan::Exact(Problem {
            rows,
            cols,
            weights,
            cost: cost.iter().map(|e| e.finite().map(exact)).collect(),
            mass_tol: Rational::zero(),
            cost_tol: Rational::zero(),
        })
    }
}

/// Cost of a tree solution as `(carries mass on +inf, finite part)`.
type Key<R> = (bool, R);

impl<R: Lane> Problem<R> {
    fn scan(&self, visit: &mut dyn FnMut(&[Step<R>]) -> bool) {
        Peeler::new(self.rows, self.weights.clone(), true, self.mass_tol.clone(), visit).start();
    }

    fn cost_at(&self, (i, j): (usize, usize)) -> &Option<R> {
        &self.cost[i * self.cols + j]
    }

    fn key(&self, steps: &[Step<R>]) -> Key<R> {
        let mut infinite = false;
        let mut total = R::zero();
        for (a, b, mass) in steps {
            match self.cost_at(cell_of(self.rows, *a, *b)) {
                Some(c) => total = total + c.clone() * mass.clone(),
                None => infinite |= *mass > self.mass_tol,
            }
        }
        (infinite, total)
    }

    fn better(&self, a: &Key<R>, b: &Key<R>) -> bool {
        match (a.0, b.0) {
            (false, true) => true,
            (true, false) => false,
            _ => a.1.clone() + self.cost_tol.clone() < b.1,
        }
    }

    fn feasible(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        self.scan(&mut |steps| {
            out.push(order(steps));
            true
        });
        out
    }

    /// First tree attaining the minimum cost, with whether that minimum is
    /// infinite.
    fn cheapest(&self) -> Option<(Vec<(usize, usize)>, bool)> {
        let mut best: Option<(Order, Key<R>)> = None;
        self.scan(&mut |steps| {
            let key = self.key(steps);
            if best.as_ref().is_none_or(|(_, b)| self.better(&key, b)) {
                best = Some((order(steps), key));
            }
            true
        });
        best.map(|(cells, key)| (cells, key.0))
    }

    /// First feasible tree whose tight potentials satisfy every constraint.
    /// Primal and dual feasibility on one tree make both optimal.
    fn dual_tree(&self) -> Option<Vec<(usize, usize)>> {
        let cost = self.finite_cost()?;
        let mut found = None;
        self.scan(&mut |steps| {
            let cells: Vec<(usize, usize)> = steps.iter().map(|&(a, b, _)| cell_of(self.rows, a, b)).collect();
            let pot = potentials(&cells, &cost, self.rows, self.cols);
            let ok = cost
                .indexed()
                .all(|((i, j), c)| pot.0[i].clone() + pot.1[j].clone() <= c.clone() + self.cost_tol.clone());
            if ok {
                found = Some(order(steps));
            }
            !ok
        });
        found
    }

    fn finite_cost(&self) -> Option<Matrix<R>> {
        let entries: Option<Vec<R>> = self.cost.iter().cloned().collect();
        let entries = entries?;
        Some(Matrix::from_fn(self.rows, self.cols, |i, j| {
            entries[i * self.cols + j].clone()
        }))
    }
}

/// Elimination order as `(leaf, neighbour)` node pairs.
fn order<R>(steps: &[Step<R>]) -> Vec<(usize, usize)> {
    steps.iter().map(|&(a, b, _)| (a, b)).collect()
}

/// Replays an elimination order in the instance arithmetic.
fn solve_tree<T: Scalar>(instance: &ValidatedInstance<T>, order: &[(usize, usize)]) -> TreeSolution<T> {
    let rows = instance.mu.len();
    let mut residual: Vec<T> = instance
        .mu
        .weights
        .iter()
        .chain(&instance.nu.weights)
        .cloned()
        .collect();
    let mut cells: Vec<((usize, usize), T)> = order
        .iter()
        .map(|&(leaf, nb)| {
            let mass = residual[leaf].clone();
            residual[nb] = residual[nb].clone() - mass.clone();
            (cell_of(rows, leaf, nb), mass)
        })
        .collect();
    cells.sort_by_key(|c| c.0);
    let (cells, masses) = cells.into_iter().unzip();
    TreeSolution { cells, masses }
}

/// Potentials tight on a spanning tree with `phi(0) = 0`.
fn potentials<R: Lane>(cells: &[(usize, usize)], cost: &Matrix<R>, rows: usize, cols: usize) -> (Vec<R>, Vec<R>) {
    let mut phi: Vec<Option<R>> = vec![None; rows];
    let mut psi: Vec<Option<R>> = vec![None; cols];
    phi[0] = Some(R::zero());
    let mut progress = true;
    while progress {
        progress = false;
        for &(i, j) in cells {
            match (&phi[i], &psi[j]) {
                (Some(p), None) => {
                    psi[j] = Some(cost[(i, j)].clone() - p.clone());
                    progress = true;
                }
                (None, Some(s)) => {
                    phi[i] = Some(cost[(i, j)].clone() - s.clone());
                    progress = true;
                }
                _ => {}
            }
        }
    }
    let unwrap = |v: Vec<Option<R>>| v.into_iter().map(|x| x.expect("spanning tree")).collect();
    (unwrap(phi), unwrap(psi))
}

/// Exhaustive solver over basic feasible solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Oracle {
    pub budget: u128,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            budget: DEFAULT_ORACLE_BUDGET,
        }
    }
}

impl Oracle {
    pub fn with_budget(budget: u128) -> Self {
        Oracle { budget }
    }

    fn check_budget(&self, rows: usize, cols: usize) -> Result<()> {
        let trees = spanning_tree_count(rows, cols);
        if trees > self.budget {
            return Err(Error::BudgetExceeded {
                trees,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// All spanning trees whose tree solution is nonnegative.
    pub fn feasible_trees<T: Scalar>(&self, instance: &ValidatedInstance<T>) -> Result<Vec<TreeSolution<T>>> {
        let (rows, cols) = instance.shape();
        self.check_budget(rows, cols)?;
        let orders = match Scan::of(instance) {
            Scan::Int(p) => p.feasible(),
            Scan::Exact(p) => p.feasible(),
            Scan::Float(p) => p.feasible(),
        };
        Ok(orders.iter().map(|o| solve_tree(instance, o)).collect())
    }

    /// The cheapest basic feasible solution, first in enumeration order on ties.
    pub fn primal<T: Scalar>(&self, instance: &ValidatedInstance<T>) -> Result<OptimalPlanResult<T>> {
        let (rows, cols) = instance.shape();
        self.check_budget(rows, cols)?;
        let best = match Scan::of(instance) {
            Scan::Int(p) => p.cheapest(),
            Scan::Exact(p) => p.cheapest(),
            Scan::Float(p) => p.cheapest(),
        };
        let (order, infinite) = best.expect("the northwest-corner tree is always feasible");
        if infinite {
            return Err(Error::InfeasibleFiniteCost);
        }
        let tree = solve_tree(instance, &order);
        let plan = tree.plan(rows, cols);
        let value = plan_cost(&plan, &instance.cost)?;
        Ok(OptimalPlanResult {
            plan,
            value,
            basis: tree.cells,
        })
    }

    /// Potentials tight on an optimal tree (anchored at `phi(0) = 0`): the
    /// first feasible tree, in enumeration order, whose tight potentials
    /// are dual feasible.
    pub fn dual<T: Scalar>(&self, instance: &ValidatedInstance<T>) -> Result<DualPotentials<T>> {
        let cost = instance.cost.finite()?;
        let (rows, cols) = instance.shape();
        self.check_budget(rows, cols)?;
        let found = match Scan::of(instance) {
            Scan::Int(p) => p.dual_tree(),
            Scan::Exact(p) => p.dual_tree(),
            Scan::Float(p) => p.dual_tree(),
        };
        let order = found.ok_or(Error::NoFeasibleTreeDual)?;
        let tree = solve_tree(instance, &order);
        let (phi, psi) = potentials(&tree.cells, &cost, rows, cols);
        Ok(DualPotentials::new(phi, psi))
    }
}

pub fn oracle_primal<T: Scalar>(instance: &ValidatedInstance<T>) -> Result<OptimalPlanResult<T>> {
    Oracle::default().primal(instance)
}

pub fn oracle_dual<T: Scalar>(instance: &ValidatedInstance<T>) -> Result<DualPotentials<T>> {
    Oracle::default().dual(instance)
}
