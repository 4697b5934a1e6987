//! Checkable certificates for an optimal plan / potential pair: zero gap,
//! exact marginals, complementary slackness and c-cyclic monotonicity of the
//! support.

use crate::error::{Error, Result};
use crate::instance::{dual_value, plan_cost, CostMatrix, DualPotentials, Marginal, TransportPlan, ValidatedInstance};
use crate::num::{max_of, Extended, Mode, Scalar};

pub const DEFAULT_CYCLIC_BUDGET: u128 = 10_000_000;
pub const DEFAULT_K_MAX: usize = 4;

/// Every threshold a certificate was produced with. Zero across the board in
/// rational mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances<T> {
    pub gap: T,
    pub marginal: T,
    pub slackness: T,
    pub cyclic: T,
    pub support: T,
}

impl<T: Scalar> Tolerances<T> {
    /// Defaults for the arithmetic mode; float tolerances scale with the
    /// largest finite cost.
    pub fn for_cost(cost: &CostMatrix<T>) -> Self {
        if T::is_exact() {
            return Tolerances {
                gap: T::zero(),
                marginal: T::zero(),
                slackness: T::zero(),
                cyclic: T::zero(),
                support: T::zero(),
            };
        }
        let scale = cost
            .entries()
            .iter()
            .filter_map(Extended::finite)
            .fold(T::zero(), |acc, v| max_of(acc, v.abs()));
        let tol = T::default_tol() * (T::one() + scale);
        Tolerances {
            gap: tol.clone(),
            marginal: T::default_tol(),
            slackness: tol.clone(),
            cyclic: tol,
            support: T::support_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport<T> {
    pub row_deviation: T,
    pub col_deviation: T,
    pub tol: T,
    pub pass: bool,
}

/// Row sums against `mu` and column sums against `nu`. On a finite space
/// every set is a finite union of points, so these sums cover all
/// rectangle identities `plan(C x Y) = mu(C)`, `plan(X x D) = nu(D)`.
pub fn check_marginals<T: Scalar>(
    plan: &TransportPlan<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    tol: &T,
) -> Result<MarginalReport<T>> {
    let (rows, cols) = plan.shape();
    if rows != mu.len() || cols != nu.len() {
        return Err(Error::DimensionMismatch {
            what: "plan against marginals".into(),
            expected: mu.len() * nu.len(),
            found: rows * cols,
        });
    }
    let worst = |sums: Vec<T>, target: &[T]| {
        sums.into_iter()
            .zip(target)
            .fold(T::zero(), |acc, (s, t)| max_of(acc, (s - t.clone()).abs()))
    };
    let row_deviation = worst(plan.row_sums(), &mu.weights);
    let col_deviation = worst(plan.col_sums(), &nu.weights);
    let pass = row_deviation <= *tol && col_deviation <= *tol && plan.is_nonnegative();
    Ok(MarginalReport {
        row_deviation,
        col_deviation,
        tol: tol.clone(),
        pass,
    })
}

/// `plan_cost - dual_value`, nonnegative for feasible arguments and zero
/// exactly when both are optimal.
pub fn duality_gap<T: Scalar>(
    plan: &TransportPlan<T>,
    pot: &DualPotentials<T>,
    instance: &ValidatedInstance<T>,
) -> Result<T> {
    let tol = Tolerances::for_cost(&instance.cost);
    let marginals = check_marginals(plan, &instance.mu, &instance.nu, &tol.marginal)?;
    if !marginals.pass {
        return Err(Error::InfeasibleArguments(format!(
            "plan marginals deviate by ({}, {})",
            marginals.row_deviation, marginals.col_deviation
        )));
    }
    pot.check_shape(instance.mu.len(), instance.nu.len())?;
    if let Some((i, j)) = pot.first_violation(&instance.cost, &tol.slackness) {
        return Err(Error::InfeasibleArguments(format!(
            "potentials exceed the cost at ({i}, {j})"
        )));
    }
    let primal = plan_cost(plan, &instance.cost)?
        .into_finite()
        .ok_or_else(|| Error::InfeasibleArguments("plan has infinite cost".into()))?;
    Ok(primal - dual_value(pot, &instance.mu, &instance.nu)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlacknessViolation<T> {
    pub row: usize,
    pub col: usize,
    pub mass: T,
    pub slack: Extended<T>,
}

/// Support cells where `c - phi ⊕ psi > tol`. Empty for optimal pairs.
pub fn check_slackness<T: Scalar>(
    plan: &TransportPlan<T>,
    pot: &DualPotentials<T>,
    cost: &CostMatrix<T>,
    tol: &T,
) -> Result<Vec<SlacknessViolation<T>>> {
    pot.check_shape(cost.rows(), cost.cols())?;
    if plan.shape() != cost.shape() {
        return Err(Error::DimensionMismatch {
            what: "plan against cost".into(),
            expected: cost.rows() * cost.cols(),
            found: plan.shape().0 * plan.shape().1,
        });
    }
    if let Some((row, col)) = pot.first_violation(cost, tol) {
        return Err(Error::InfeasiblePotentials { row, col });
    }
    let support_tol = T::support_tol();
    let mut out = Vec::new();
    for (row, col) in plan.support(&support_tol) {
        let slack = match cost.get(row, col) {
            Extended::Finite(c) => Extended::Finite(c.clone() - pot.sum_at(row, col)),
            Extended::Infinite => Extended::Infinite,
        };
        if slack > Extended::Finite(tol.clone()) {
            out.push(SlacknessViolation {
                row,
                col,
                mass: plan.get(row, col).clone(),
                slack,
            });
        }
    }
    Ok(out)
}

/// A tuple of support cells `(x_a, y_a)` whose targets, rotated along
/// `order`, strictly lower the total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicViolation<T> {
    pub cells: Vec<(usize, usize)>,
    /// `x` of `cells[order[a]]` is re-paired with `y` of `cells[order[a + 1]]`
    /// (cyclically).
    pub order: Vec<usize>,
    pub current: Extended<T>,
    pub permuted: Extended<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicLevel<T> {
    pub k: usize,
    pub violation: Option<CyclicViolation<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicReport<T> {
    pub levels: Vec<CyclicLevel<T>>,
    pub support_size: usize,
    pub checks: u128,
    pub tol: T,
}

impl<T> CyclicReport<T> {
    pub fn pass(&self) -> bool {
        self.levels.iter().all(|l| l.violation.is_none())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, u128::saturating_mul)
}

/// Number of (tuple, cycle) evaluations for `k = 2..=k_max`.
pub fn cyclic_check_count(support_size: usize, k_max: usize) -> u128 {
    (2..=k_max).fold(0u128, |acc, k| {
        acc.saturating_add(binomial(support_size, k).saturating_mul(factorial(k - 1)))
    })
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for later in pos + 1..k {
                idx[later] = idx[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Lexicographic next permutation; false once the last one is passed.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(pivot) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let swap = (pivot + 1..p.len()).rev().find(|&j| p[j] > p[pivot]).expect("exists");
    p.swap(pivot, swap);
    p[pivot + 1..].reverse();
    true
}

/// For each `k` in `2..=k_max`, every `k`-subset of the support (in
/// lexicographic order) and every cyclic re-pairing of its targets is tested
/// against `sum c(x_a, y_a) <= sum c(x_a, y_sigma(a)) + tol`. Cycles suffice:
/// any permutation splits into cycles on which the inequality adds up.
pub fn check_cyclic_monotonicity<T: Scalar>(
    plan: &TransportPlan<T>,
    cost: &CostMatrix<T>,
    k_max: usize,
    tol: &T,
    budget: u128,
) -> Result<CyclicReport<T>> {
    if k_max < 2 {
        return Err(Error::InfeasibleArguments("k_max must be at least 2".into()));
    }
    let support = plan.support(&T::support_tol());
    let s = support.len();
    let needed = cyclic_check_count(s, k_max);
    if needed > budget {
        return Err(Error::SupportTooLarge { needed, budget });
    }
    let mut levels = Vec::new();
    let mut checks = 0u128;
    for k in 2..=k_max {
        let mut violation = None;
        if k <= s {
            let mut idx: Vec<usize> = (0..k).collect();
            'tuples: loop {
                let cells: Vec<(usize, usize)> = idx.iter().map(|&t| support[t]).collect();
                let current = cells
                    .iter()
                    .fold(Extended::zero(), |acc, &(i, j)| acc + cost.get(i, j).clone());
                let mut rest: Vec<usize> = (1..k).collect();
                loop {
                    checks += 1;
                    let order: Vec<usize> = std::iter::once(0).chain(rest.iter().copied()).collect();
                    let permuted = (0..k).fold(Extended::zero(), |acc, a| {
                        let x = cells[order[a]].0;
                        let y = cells[order[(a + 1) % k]].1;
                        acc + cost.get(x, y).clone()
                    });
                    if current > permuted.add_finite(tol) {
                        violation = Some(CyclicViolation {
                            cells: cells.clone(),
                            order,
                            current,
                            permuted,
                        });
                        break 'tuples;
                    }
                    if !next_permutation(&mut rest) {
                        break;
                    }
                }
                if !next_combination(&mut idx, s) {
                    break;
                }
            }
        }
        levels.push(CyclicLevel { k, violation });
    }
    Ok(CyclicReport {
        levels,
        support_size: s,
        checks,
        tol: tol.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityCertificate<T> {
    pub mode: Mode,
    pub primal_value: T,
    pub dual_value: T,
    pub gap: T,
    pub marginals: MarginalReport<T>,
    pub slackness: Vec<SlacknessViolation<T>>,
    pub cyclic: CyclicReport<T>,
    pub tolerances: Tolerances<T>,
    pub verdict: Verdict,
}

/// Runs every check on a candidate optimal pair.
pub fn certify<T: Scalar>(
    instance: &ValidatedInstance<T>,
    plan: &TransportPlan<T>,
    pot: &DualPotentials<T>,
    k_max: usize,
    budget: u128,
) -> Result<DualityCertificate<T>> {
    let tolerances = Tolerances::for_cost(&instance.cost);
    let marginals = check_marginals(plan, &instance.mu, &instance.nu, &tolerances.marginal)?;
    let gap = duality_gap(plan, pot, instance)?;
    let slackness = check_slackness(plan, pot, &instance.cost, &tolerances.slackness)?;
    let cyclic = check_cyclic_monotonicity(plan, &instance.cost, k_max, &tolerances.cyclic, budget)?;
    let primal_value = plan_cost(plan, &instance.cost)?
        .into_finite()
        .expect("finite after gap check");
    let dual = dual_value(pot, &instance.mu, &instance.nu)?;
    let pass = gap.abs() <= tolerances.gap && marginals.pass && slackness.is_empty() && cyclic.pass();
    Ok(DualityCertificate {
        mode: T::MODE,
        primal_value,
        dual_value: dual,
        gap,
        marginals,
        slackness,
        cyclic,
        tolerances,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::solve_primal_dual;
    use crate::instance::{product_plan, Instance};
    use crate::num::Rational;
    use crate::primal::northwest_corner;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn cost(rows: &[&[i64]]) -> CostMatrix<Rational> {
        CostMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v, 1)).collect()).collect()).unwrap()
    }

    fn instance(rows: &[&[i64]]) -> ValidatedInstance<Rational> {
        let m = rows.len();
        let n = rows[0].len();
        Instance::new(cost(rows), Marginal::uniform(m), Marginal::uniform(n))
            .validate()
            .unwrap()
    }

    fn zero() -> Rational {
        q(0, 1)
    }

    #[test]
    fn gap_examples() {
        let inst = instance(&[&[0, 2], &[2, 1]]);
        let (primal, dual) = solve_primal_dual(&inst).unwrap();
        assert_eq!(duality_gap(&primal.plan, &dual, &inst).unwrap(), zero());

        let swap = instance(&[&[0, 1], &[1, 0]]);
        let prod = product_plan(&swap.mu, &swap.nu);
        let pot = DualPotentials::new(vec![zero(), zero()], vec![zero(), zero()]);
        assert_eq!(duality_gap(&prod, &pot, &swap).unwrap(), q(1, 2));

        let one = instance(&[&[5]]);
        let plan = TransportPlan::from_rows(vec![vec![q(1, 1)]]).unwrap();
        let pot = DualPotentials::new(vec![zero()], vec![q(5, 1)]);
        assert_eq!(duality_gap(&plan, &pot, &one).unwrap(), zero());
    }

    #[test]
    fn gap_rejects_infeasible_arguments() {
        let inst = instance(&[&[0, 2], &[2, 1]]);
        let bad_plan = TransportPlan::from_rows(vec![vec![q(1, 1), zero()], vec![zero(), zero()]]).unwrap();
        let pot = DualPotentials::new(vec![zero(), zero()], vec![zero(), zero()]);
        assert!(matches!(
            duality_gap(&bad_plan, &pot, &inst),
            Err(Error::InfeasibleArguments(_))
        ));
        let prod = product_plan(&inst.mu, &inst.nu);
        let too_high = DualPotentials::new(vec![q(1, 1), zero()], vec![zero(), zero()]);
        assert!(matches!(
            duality_gap(&prod, &too_high, &inst),
            Err(Error::InfeasibleArguments(_))
        ));
    }

    #[test]
    fn marginal_examples() {
        let mu = Marginal::new(vec![q(1, 2), q(1, 2)]);
        let nu = Marginal::new(vec![q(3, 10), q(7, 10)]);
        let r = check_marginals(&product_plan(&mu, &nu), &mu, &nu, &zero()).unwrap();
        assert_eq!(
            (r.row_deviation.clone(), r.col_deviation.clone(), r.pass),
            (zero(), zero(), true)
        );

        let mut plan = product_plan(&mu, &nu);
        plan.entries[(1, 0)] = plan.entries[(1, 0)].clone() + q(1, 100);
        let r = check_marginals(&plan, &mu, &nu, &zero()).unwrap();
        assert_eq!(r.row_deviation, q(1, 100));
        assert_eq!(r.col_deviation, q(1, 100));
        assert!(!r.pass);

        let r = check_marginals(&northwest_corner(&mu, &nu), &mu, &nu, &zero()).unwrap();
        assert!(r.pass && r.row_deviation == zero() && r.col_deviation == zero());
    }

    #[test]
    fn slackness_examples() {
        let inst = instance(&[&[0, 2], &[2, 1]]);
        let (primal, dual) = solve_primal_dual(&inst).unwrap();
        assert!(check_slackness(&primal.plan, &dual, &inst.cost, &zero())
            .unwrap()
            .is_empty());

        let swap = instance(&[&[0, 1], &[1, 0]]);
        let prod = product_plan(&swap.mu, &swap.nu);
        let pot = DualPotentials::new(vec![zero(), zero()], vec![zero(), zero()]);
        let v = check_slackness(&prod, &pot, &swap.cost, &zero()).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].row, v[0].col), (0, 1));
        assert_eq!((v[1].row, v[1].col), (1, 0));
        for cell in &v {
            assert_eq!(cell.slack, Extended::Finite(q(1, 1)));
            assert_eq!(cell.mass, q(1, 4));
        }

        let k = instance(&[&[3, 3], &[3, 3]]);
        let pot = DualPotentials::new(vec![q(1, 1), q(1, 1)], vec![q(2, 1), q(2, 1)]);
        let prod = product_plan(&k.mu, &k.nu);
        assert!(check_slackness(&prod, &pot, &k.cost, &zero()).unwrap().is_empty());

        let infeasible = DualPotentials::new(vec![q(2, 1), q(1, 1)], vec![q(2, 1), q(2, 1)]);
        assert_eq!(
            check_slackness(&prod, &infeasible, &k.cost, &zero()).unwrap_err(),
            Error::InfeasiblePotentials { row: 0, col: 0 }
        );
    }

    #[test]
    fn cyclic_examples() {
        let c = cost(&[&[0, 2], &[2, 1]]);
        let diag = TransportPlan::from_rows(vec![vec![q(1, 2), zero()], vec![zero(), q(1, 2)]]).unwrap();
        let r = check_cyclic_monotonicity(&diag, &c, 2, &zero(), DEFAULT_CYCLIC_BUDGET).unwrap();
        assert!(r.pass());
        assert_eq!(r.checks, 1);

        let c = cost(&[&[0, 2], &[2, 0]]);
        let anti = TransportPlan::from_rows(vec![vec![zero(), q(1, 2)], vec![q(1, 2), zero()]]).unwrap();
        let r = check_cyclic_monotonicity(&anti, &c, 2, &zero(), DEFAULT_CYCLIC_BUDGET).unwrap();
        let v = r.levels[0].violation.as_ref().expect("k = 2 fails");
        assert_eq!(v.cells, vec![(0, 1), (1, 0)]);
        assert_eq!(v.current, Extended::Finite(q(4, 1)));
        assert_eq!(v.permuted, Extended::Finite(q(0, 1)));

        let single = TransportPlan::from_rows(vec![vec![q(1, 1), zero()], vec![zero(), zero()]]).unwrap();
        let r = check_cyclic_monotonicity(&single, &c, 4, &zero(), DEFAULT_CYCLIC_BUDGET).unwrap();
        assert!(r.pass());
        assert_eq!(r.levels.len(), 3);
        assert_eq!(r.checks, 0);
    }

    #[test]
    fn cyclic_budget_and_arguments() {
        assert_eq!(cyclic_check_count(4, 4), 6 + 4 * 2 + 6);
        let c = cost(&[&[0, 1], &[1, 0]]);
        let prod = product_plan(&Marginal::uniform(2), &Marginal::uniform(2));
        assert_eq!(
            check_cyclic_monotonicity(&prod, &c, 4, &zero(), 5).unwrap_err(),
            Error::SupportTooLarge { needed: 20, budget: 5 }
        );
        assert!(check_cyclic_monotonicity(&prod, &c, 1, &zero(), 5).is_err());
    }

    #[test]
    fn permutation_helpers_enumerate_everything() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        let mut idx = vec![0, 1];
        let mut combos = 1;
        while next_combination(&mut idx, 5) {
            combos += 1;
        }
        assert_eq!(combos, 10);
    }

    #[test]
    fn certificate_passes_for_solver_output() {
        let inst = instance(&[&[0, 2, 3], &[2, 1, 4], &[5, 1, 0]]);
        let (primal, dual) = solve_primal_dual(&inst).unwrap();
        let cert = certify(&inst, &primal.plan, &dual, 4, DEFAULT_CYCLIC_BUDGET).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.gap, zero());
    }
}
