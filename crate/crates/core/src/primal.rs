//! Exact minimization of `sum plan * cost` over the transportation polytope.
//!
//! The solver is the network simplex specialised to the complete bipartite
//! graph `X -> Y`: a basis is a spanning tree of `|X| + |Y| - 1` cells,
//! potentials come from propagating `u(i) + v(j) = c(i,j)` along the tree and
//! pivots follow Bland's rule (smallest row-major index both for entering and
//! leaving cells), which rules out cycling on degenerate pivots.
//!
//! `+inf` cells are priced as `M` for a symbolic `M` larger than any finite
//! cost, so the first objective level minimizes the mass forced onto
//! infinite cells and the second the finite cost.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::instance::{plan_cost, CostMatrix, Marginal, TransportPlan, ValidatedInstance};
use crate::matrix::Matrix;
use crate::num::{Extended, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPlanResult<T> {
    pub plan: TransportPlan<T>,
    pub value: Extended<T>,
    /// Spanning tree of the bipartite graph, row-major order. Contains every
    /// positive cell; zero-mass cells complete degenerate bases.
    pub basis: Vec<(usize, usize)>,
}

/// Greedy staircase fill starting at `(0, 0)`.
pub fn northwest_corner<T: Scalar>(mu: &Marginal<T>, nu: &Marginal<T>) -> TransportPlan<T> {
    northwest_corner_basis(mu, nu).0
}

/// Northwest corner plan together with the staircase of visited cells, which
/// always forms a spanning tree (`m - 1` down moves and `n - 1` right moves).
pub fn northwest_corner_basis<T: Scalar>(
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> (TransportPlan<T>, Vec<(usize, usize)>) {
    let (m, n) = (mu.len(), nu.len());
    let mut plan = Matrix::filled(m, n, T::zero());
    let mut basis = Vec::with_capacity(m + n - 1);
    let mut supply = mu.weights.clone();
    let mut demand = nu.weights.clone();
    let (mut i, mut j) = (0, 0);
    loop {
        let amount = if supply[i] < demand[j] {
            supply[i].clone()
        } else {
            demand[j].clone()
        };
        let amount = if amount < T::zero() { T::zero() } else { amount };
        supply[i] = supply[i].clone() - amount.clone();
        demand[j] = demand[j].clone() - amount.clone();
        plan[(i, j)] = amount;
        basis.push((i, j));
        if i + 1 == m && j + 1 == n {
            break;
        }
        let col_done = demand[j] <= T::zero();
        if (col_done && j + 1 < n) || i + 1 == m {
            j += 1;
        } else {
            i += 1;
        }
    }
    (TransportPlan::new(plan), basis)
}

/// Two-level cost `big * M + small`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq)]
struct Lex<T> {
    big: T,
    small: T,
}

impl<T: Scalar> Lex<T> {
    fn zero() -> Self {
        Lex {
            big: T::zero(),
            small: T::zero(),
        }
    }

    fn of(c: &Extended<T>) -> Self {
        match c {
            Extended::Finite(v) => Lex {
                big: T::zero(),
                small: v.clone(),
            },
            Extended::Infinite => Lex {
                big: T::one(),
                small: T::zero(),
            },
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        Lex {
            big: self.big.clone() - rhs.big.clone(),
            small: self.small.clone() - rhs.small.clone(),
        }
    }

    fn add(&self, rhs: &Self) -> Self {
        Lex {
            big: self.big.clone() + rhs.big.clone(),
            small: self.small.clone() + rhs.small.clone(),
        }
    }

    /// Strictly negative, ignoring `small` noise up to `eps`.
    fn is_negative(&self, eps: &T) -> bool {
        match self.big.partial_cmp(&T::zero()) {
            Some(Ordering::Less) => true,
            Some(Ordering::Greater) => false,
            _ => self.small < -eps.clone(),
        }
    }
}

/// Mutable solver state for one instance. Create one per solve.
pub struct TransportSimplex<'a, T> {
    cost: &'a CostMatrix<T>,
    rows: usize,
    cols: usize,
    lex_cost: Matrix<Lex<T>>,
    mass: Matrix<T>,
    in_basis: Matrix<bool>,
    basis: Vec<(usize, usize)>,
    eps: T,
    pivots: usize,
}

impl<'a, T: Scalar> TransportSimplex<'a, T> {
    pub fn new(cost: &'a CostMatrix<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Self {
        let (rows, cols) = cost.shape();
        let (start, basis) = northwest_corner_basis(mu, nu);
        let mut in_basis = Matrix::filled(rows, cols, false);
        for &cell in &basis {
            in_basis[cell] = true;
        }
        let finite_scale = cost
            .entries()
            .iter()
            .filter_map(Extended::finite)
            .fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc });
        let eps = if T::is_exact() {
            T::zero()
        } else {
            T::default_tol() * (T::one() + finite_scale)
        };
        TransportSimplex {
            cost,
            rows,
            cols,
            lex_cost: cost.entries().map(Lex::of),
            mass: start.entries,
            in_basis,
            basis,
            eps,
            pivots: 0,
        }
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.rows + self.cols];
        for (k, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push(k);
            adj[self.rows + j].push(k);
        }
        adj
    }

    fn other_end(&self, node: usize, cell: (usize, usize)) -> usize {
        if node < self.rows {
            self.rows + cell.1
        } else {
            cell.0
        }
    }

    /// Row potentials `u` and column potentials `v` with `u(0) = 0` and
    /// `u(i) + v(j) = c(i,j)` on the basis.
    fn potentials(&self, adj: &[Vec<usize>]) -> (Vec<Lex<T>>, Vec<Lex<T>>) {
        let total = self.rows + self.cols;
        let mut pot: Vec<Option<Lex<T>>> = vec![None; total];
        pot[0] = Some(Lex::zero());
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            let here = pot[node].clone().expect("visited");
            for &k in &adj[node] {
                let cell = self.basis[k];
                let next = self.other_end(node, cell);
                if pot[next].is_none() {
                    pot[next] = Some(self.lex_cost[cell].sub(&here));
                    queue.push_back(next);
                }
            }
        }
        let mut pot: Vec<Lex<T>> = pot.into_iter().map(|p| p.expect("basis is a spanning tree")).collect();
        let v = pot.split_off(self.rows);
        (pot, v)
    }

    #[allow(clippy::needless_range_loop)]
    fn entering(&self, u: &[Lex<T>], v: &[Lex<T>]) -> Option<(usize, usize)> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.in_basis[(i, j)] {
                    continue;
                }
                let reduced = self.lex_cost[(i, j)].sub(&u[i].add(&v[j]));
                if reduced.is_negative(&self.eps) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Basis cells on the tree path from column `col` to row `row`, in order.
    fn tree_path(&self, adj: &[Vec<usize>], col: usize, row: usize) -> Vec<(usize, usize)> {
        let start = self.rows + col;
        let mut parent: Vec<Option<usize>> = vec![None; self.rows + self.cols];
        let mut seen = vec![false; self.rows + self.cols];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == row {
                break;
            }
            for &k in &adj[node] {
                let next = self.other_end(node, self.basis[k]);
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some(k);
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = row;
        while node != start {
            let k = parent[node].expect("tree is connected");
            let cell = self.basis[k];
            path.push(cell);
            node = self.other_end(node, cell);
        }
        path.reverse();
        path
    }

    fn pivot(&mut self, adj: &[Vec<usize>], enter: (usize, usize)) {
        let path = self.tree_path(adj, enter.1, enter.0);
        // Cells at even positions of the path lose mass, odd ones gain it.
        let mut leave: Option<(usize, usize)> = None;
        for &cell in path.iter().step_by(2) {
            leave = match leave {
                None => Some(cell),
                Some(best) => match self.mass[cell].partial_cmp(&self.mass[best]) {
                    Some(Ordering::Less) => Some(cell),
                    Some(Ordering::Equal) if cell < best => Some(cell),
                    _ => Some(best),
                },
            };
        }
        let leave = leave.expect("cycle has a decreasing cell");
        let theta = self.mass[leave].clone();
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.mass[cell] = self.mass[cell].clone() - theta.clone();
            } else {
                self.mass[cell] = self.mass[cell].clone() + theta.clone();
            }
        }
        self.mass[leave] = T::zero();
        self.mass[enter] = theta;
        self.in_basis[leave] = false;
        self.in_basis[enter] = true;
        let slot = self
            .basis
            .iter()
            .position(|&c| c == leave)
            .expect("leaving cell is basic");
        self.basis[slot] = enter;
        self.pivots += 1;
    }

    pub fn run(mut self) -> Result<OptimalPlanResult<T>> {
        loop {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj);
            match self.entering(&u, &v) {
                Some(enter) => self.pivot(&adj, enter),
                None => break,
            }
        }
        let carries_infinite = self
            .basis
            .iter()
            .any(|&cell| !self.cost.get(cell.0, cell.1).is_finite() && self.mass[cell] > T::zero());
        if carries_infinite {
            return Err(Error::InfeasibleFiniteCost);
        }
        let plan = TransportPlan::new(self.mass);
        let value = plan_cost(&plan, self.cost)?;
        let mut basis = self.basis;
        basis.sort_unstable();
        Ok(OptimalPlanResult { plan, value, basis })
    }
}

pub fn solve_primal<T: Scalar>(instance: &ValidatedInstance<T>) -> Result<OptimalPlanResult<T>> {
    TransportSimplex::new(&instance.cost, &instance.mu, &instance.nu).run()
}
