//! Dual-optimal potentials in canonical form `(xi^{c cbar} + m, xi^c - m)`.

use std::collections::VecDeque;

use crate::ctransform::normalize_pair;
use crate::error::{Error, Result};
use crate::instance::{CostMatrix, DualPotentials, ValidatedInstance};
use crate::num::{Extended, Scalar};
use crate::primal::{solve_primal, OptimalPlanResult};

fn feasibility_tol<T: Scalar>(cost: &CostMatrix<T>) -> T {
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

/// Potentials tight on every basis cell: `phi(i) + psi(j) = c(i,j)`.
///
/// Each connected component of the basis is anchored with `phi = 0` at its
/// first X point (or `psi = 0` at its Y point if it has no X point). When
/// the basis is a spanning tree that fixes everything. For a forest the
/// per-component offsets `a_k` (added to phi, subtracted from psi) must
/// satisfy difference constraints `a_k - a_l <= c(i,j) - phi(i) - psi(j)`
/// for cells across components; they are taken as shortest-path distances
/// from a virtual source and then shifted so the first component keeps its
/// anchor.
pub fn extract_dual_from_basis<T: Scalar>(
    result: &OptimalPlanResult<T>,
    cost: &CostMatrix<T>,
) -> Result<DualPotentials<T>> {
    let (rows, cols) = cost.shape();
    let nodes = rows + cols;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for &(i, j) in &result.basis {
        if i >= rows || j >= cols {
            return Err(Error::DimensionMismatch {
                what: "basis cell".into(),
                expected: rows.max(cols),
                found: i.max(j),
            });
        }
        if !cost.get(i, j).is_finite() {
            return Err(Error::UnboundedCost);
        }
        adj[i].push((i, j));
        adj[rows + j].push((i, j));
    }

    let mut pot: Vec<Option<T>> = vec![None; nodes];
    let mut component = vec![usize::MAX; nodes];
    let mut n_components = 0;
    for root in 0..nodes {
        if pot[root].is_some() {
            continue;
        }
        pot[root] = Some(T::zero());
        component[root] = n_components;
        let mut queue = VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            let here = pot[node].clone().expect("visited");
            for &(i, j) in &adj[node] {
                let next = if node < rows { rows + j } else { i };
                if pot[next].is_none() {
                    let c = cost.get(i, j).finite().expect("checked finite").clone();
                    pot[next] = Some(c - here.clone());
                    component[next] = n_components;
                    queue.push_back(next);
                }
            }
        }
        n_components += 1;
    }
    let mut pot: Vec<T> = pot.into_iter().map(|p| p.expect("all visited")).collect();
    let tol = feasibility_tol(cost);

    if n_components > 1 {
        let offsets = component_offsets(cost, &pot, &component, n_components, rows, &tol)?;
        for (node, p) in pot.iter_mut().enumerate() {
            let a = offsets[component[node]].clone();
            *p = if node < rows { p.clone() + a } else { p.clone() - a };
        }
    }

    let psi = pot.split_off(rows);
    let out = DualPotentials::new(pot, psi);
    if out.first_violation(cost, &tol).is_some() {
        return Err(Error::InconsistentBasis);
    }
    Ok(out)
}

/// Bellman-Ford over components with edge `l -> k` of weight `w` for each
/// constraint `a_k - a_l <= w`.
fn component_offsets<T: Scalar>(
    cost: &CostMatrix<T>,
    pot: &[T],
    component: &[usize],
    n_components: usize,
    rows: usize,
    tol: &T,
) -> Result<Vec<T>> {
    let mut edges: Vec<(usize, usize, T)> = Vec::new();
    for ((i, j), c) in cost.entries().indexed() {
        let Extended::Finite(c) = c else { continue };
        let slack = c.clone() - pot[i].clone() - pot[rows + j].clone();
        let (k, l) = (component[i], component[rows + j]);
        if k == l {
            if slack < -tol.clone() {
                return Err(Error::InconsistentBasis);
            }
        } else {
            edges.push((l, k, slack));
        }
    }
    let mut dist = vec![T::zero(); n_components];
    for round in 0..=n_components {
        let mut changed = false;
        for (from, to, w) in &edges {
            let candidate = dist[*from].clone() + w.clone();
            if candidate < dist[*to].clone() - tol.clone() {
                dist[*to] = candidate;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if round == n_components {
            return Err(Error::InconsistentBasis);
        }
    }
    let base = dist[0].clone();
    Ok(dist.into_iter().map(|d| d - base.clone()).collect())
}

/// Replaces a feasible pair by `normalize_pair(phi)`, which dominates it in
/// the `⊕` order and so never lowers the dual value.
pub fn improve_dual<T: Scalar>(pot: &DualPotentials<T>, cost: &CostMatrix<T>) -> Result<DualPotentials<T>> {
    pot.check_shape(cost.rows(), cost.cols())?;
    if !cost.is_finite_everywhere() {
        return Err(Error::UnboundedCost);
    }
    if let Some((row, col)) = pot.first_violation(cost, &feasibility_tol(cost)) {
        return Err(Error::InfeasiblePotentials { row, col });
    }
    normalize_pair(&pot.phi, cost)
}

/// Primal optimum together with canonical dual potentials.
pub fn solve_primal_dual<T: Scalar>(
    instance: &ValidatedInstance<T>,
) -> Result<(OptimalPlanResult<T>, DualPotentials<T>)> {
    if !instance.cost.is_finite_everywhere() {
        return Err(Error::UnboundedCost);
    }
    let primal = solve_primal(instance)?;
    let tight = extract_dual_from_basis(&primal, &instance.cost)?;
    let dual = improve_dual(&tight, &instance.cost)?;
    Ok((primal, dual))
}

pub fn solve_dual<T: Scalar>(instance: &ValidatedInstance<T>) -> Result<DualPotentials<T>> {
    solve_primal_dual(instance).map(|(_, dual)| dual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctransform::{c_transform, is_c_concave};
    use crate::instance::{dual_value, Instance, Marginal, TransportPlan};
    use crate::matrix::Matrix;
    use crate::num::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn qs(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| q(x)).collect()
    }

    fn half() -> Marginal<Rational> {
        Marginal::uniform(2)
    }

    fn cost(rows: &[&[i64]]) -> CostMatrix<Rational> {
        CostMatrix::from_rows(rows.iter().map(|r| qs(r)).collect()).unwrap()
    }

    fn fixture() -> ValidatedInstance<Rational> {
        Instance::new(cost(&[&[0, 2], &[2, 1]]), half(), half())
            .validate()
            .unwrap()
    }

    #[test]
    fn solve_dual_on_fixture() {
        let inst = fixture();
        let dual = solve_dual(&inst).unwrap();
        // Optimal face: phi = (0, t), psi = (0, 1 - t) for -1 <= t <= 2.
        assert_eq!(dual, DualPotentials::new(qs(&[0, -1]), qs(&[0, 2])));
        assert!(dual.is_feasible(&inst.cost, &q(0)));
        assert!(is_c_concave(&dual.phi, &inst.cost, &q(0)).unwrap());
        assert_eq!(c_transform(&dual.phi, &inst.cost).unwrap(), dual.psi);
        assert_eq!(
            dual_value(&dual, &inst.mu, &inst.nu).unwrap(),
            Rational::new(1.into(), 2.into())
        );
    }

    #[test]
    fn separable_and_constant_costs() {
        // a = (1, 4), b = (0, 2, 5)
        let c = cost(&[&[1, 3, 6], &[4, 6, 9]]);
        let mu = Marginal::new(vec![Rational::from_ratio(1, 3), Rational::from_ratio(2, 3)]);
        let nu = Marginal::uniform(3);
        let inst = Instance::new(c.clone(), mu, nu).validate().unwrap();
        let dual = solve_dual(&inst).unwrap();
        let shift = dual.phi[0].clone() - q(1);
        assert_eq!(dual.phi, vec![q(1) + shift.clone(), q(4) + shift.clone()]);
        assert_eq!(dual.psi, vec![q(0) - shift.clone(), q(2) - shift.clone(), q(5) - shift]);

        let k = Instance::new(cost(&[&[7, 7], &[7, 7]]), half(), half())
            .validate()
            .unwrap();
        let dual = solve_dual(&k).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(dual.sum_at(i, j), q(7));
            }
        }
        assert_eq!(dual_value(&dual, &k.mu, &k.nu).unwrap(), q(7));
    }

    #[test]
    fn improve_dual_examples() {
        let c = cost(&[&[0, 2], &[2, 1]]);
        let weak = DualPotentials::new(qs(&[-1, -1]), qs(&[0, 0]));
        let better = improve_dual(&weak, &c).unwrap();
        assert_eq!(better, DualPotentials::new(qs(&[0, 0]), qs(&[0, 1])));
        assert_eq!(improve_dual(&better, &c).unwrap(), better);

        let bad = DualPotentials::new(qs(&[1, 0]), qs(&[0, 0]));
        assert_eq!(
            improve_dual(&bad, &c).unwrap_err(),
            Error::InfeasiblePotentials { row: 0, col: 0 }
        );

        let k = cost(&[&[3, 3], &[3, 3]]);
        let any = DualPotentials::new(qs(&[-5, 1]), qs(&[0, 2]));
        let out = improve_dual(&any, &k).unwrap();
        assert_eq!(dual_value(&out, &half(), &half()).unwrap(), q(3));
    }

    #[test]
    fn extract_from_fixture_basis() {
        let res = solve_primal(&fixture()).unwrap();
        assert_eq!(res.basis, vec![(0, 0), (0, 1), (1, 1)]);
        let pot = extract_dual_from_basis(&res, &fixture().cost).unwrap();
        assert_eq!(pot, DualPotentials::new(qs(&[0, -1]), qs(&[0, 2])));

        // Completing the diagonal with (1, 0) instead is just as optimal.
        let other = OptimalPlanResult {
            basis: vec![(0, 0), (1, 0), (1, 1)],
            ..res
        };
        let pot = extract_dual_from_basis(&other, &fixture().cost).unwrap();
        assert_eq!(pot, DualPotentials::new(qs(&[0, 2]), qs(&[0, -1])));
        assert_eq!(dual_value(&pot, &half(), &half()).unwrap(), Rational::from_ratio(1, 2));

        let one = Instance::new(cost(&[&[5]]), Marginal::uniform(1), Marginal::uniform(1))
            .validate()
            .unwrap();
        let res = solve_primal(&one).unwrap();
        let pot = extract_dual_from_basis(&res, &one.cost).unwrap();
        assert_eq!(pot, DualPotentials::new(qs(&[0]), qs(&[5])));
    }

    #[test]
    fn canonical_form_holds() {
        let inst = fixture();
        let dual = solve_dual(&inst).unwrap();
        assert!(is_c_concave(&dual.phi, &inst.cost, &q(0)).unwrap());
        assert_eq!(c_transform(&dual.phi, &inst.cost).unwrap(), dual.psi);
    }

    #[test]
    fn forest_basis_gets_feasible_offsets() {
        // Block-diagonal optimum: two components {x0,y0} and {x1,y1}.
        let c = cost(&[&[0, 4], &[3, 1]]);
        let plan = TransportPlan::new(
            Matrix::from_rows(vec![
                vec![Rational::from_ratio(1, 2), q(0)],
                vec![q(0), Rational::from_ratio(1, 2)],
            ])
            .unwrap(),
        );
        let forest = OptimalPlanResult {
            plan,
            value: Extended::Finite(Rational::from_ratio(1, 2)),
            basis: vec![(0, 0), (1, 1)],
        };
        let pot = extract_dual_from_basis(&forest, &c).unwrap();
        assert!(pot.is_feasible(&c, &q(0)));
        assert_eq!(pot.sum_at(0, 0), q(0));
        assert_eq!(pot.sum_at(1, 1), q(1));
        assert_eq!(pot.phi[0], q(0));
        assert_eq!(dual_value(&pot, &half(), &half()).unwrap(), Rational::from_ratio(1, 2));
    }

    #[test]
    fn non_optimal_basis_is_reported() {
        let c = cost(&[&[0, 2], &[2, 0]]);
        let plan = TransportPlan::new(
            Matrix::from_rows(vec![
                vec![q(0), Rational::from_ratio(1, 2)],
                vec![Rational::from_ratio(1, 2), q(0)],
            ])
            .unwrap(),
        );
        let anti = OptimalPlanResult {
            plan,
            value: Extended::Finite(q(2)),
            basis: vec![(0, 1), (1, 0), (1, 1)],
        };
        assert_eq!(
            extract_dual_from_basis(&anti, &c).unwrap_err(),
            Error::InconsistentBasis
        );
    }
}
