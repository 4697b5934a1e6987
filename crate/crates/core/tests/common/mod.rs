#![allow(dead_code)]

use otlab_core::{CostMatrix, Extended, Instance, Marginal, Matrix, Rational, Scalar, ValidatedInstance};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

pub fn rational(rng: &mut ChaCha8Rng, max_num: i64) -> Rational {
    q(rng.gen_range(0..=max_num), rng.gen_range(1..=4))
}

/// Probability vector from small integer weights, zeros allowed.
pub fn weights(rng: &mut ChaCha8Rng, len: usize) -> Marginal<Rational> {
    loop {
        let raw: Vec<i64> = (0..len)
            .map(|_| if rng.gen_ratio(1, 6) { 0 } else { rng.gen_range(1..=9) })
            .collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return Marginal::new(raw.into_iter().map(|w| q(w, total)).collect());
        }
    }
}

/// `|p_a - p_b|` for distinct integer points on a line.
pub fn line_metric(rng: &mut ChaCha8Rng, len: usize) -> Matrix<Rational> {
    let mut points: Vec<i64> = Vec::with_capacity(len);
    while points.len() < len {
        let p = rng.gen_range(0..=12);
        if !points.contains(&p) {
            points.push(p);
        }
    }
    Matrix::from_fn(len, len, |a, b| q((points[a] - points[b]).abs(), 1))
}

pub fn random_cost(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CostMatrix<Rational> {
    CostMatrix::from_finite(Matrix::from_fn(rows, cols, |_, _| rational(rng, 20)))
}

pub fn random_instance(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ValidatedInstance<Rational> {
    let cost = random_cost(rng, rows, cols);
    Instance::new(cost, weights(rng, rows), weights(rng, cols))
        .validate()
        .unwrap()
}

pub fn random_metric_instance(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ValidatedInstance<Rational> {
    let cost = random_cost(rng, rows, cols);
    let (dx, dy) = (line_metric(rng, rows), line_metric(rng, cols));
    Instance::new(cost, weights(rng, rows), weights(rng, cols))
        .with_metrics(dx, dy)
        .validate()
        .unwrap()
}

pub fn to_float(inst: &Instance<Rational>) -> ValidatedInstance<f64> {
    let f = |v: &Rational| v.to_f64();
    let space = |s: &otlab_core::FiniteSpace<Rational>| otlab_core::FiniteSpace {
        labels: s.labels.clone(),
        metric: s.metric.as_ref().map(|m| m.map(f)),
    };
    let cost = CostMatrix::new(inst.cost.entries().map(|c| match c {
        Extended::Finite(v) => Extended::Finite(v.to_f64()),
        Extended::Infinite => Extended::Infinite,
    }));
    Instance {
        space_x: space(&inst.space_x),
        space_y: space(&inst.space_y),
        cost,
        mu: Marginal::new(inst.mu.weights.iter().map(f).collect()),
        nu: Marginal::new(inst.nu.weights.iter().map(f).collect()),
    }
    .validate()
    .unwrap()
}

pub fn rational_strategy(lo: i64, hi: i64) -> impl Strategy<Value = Rational> {
    (lo..=hi, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

pub fn matrix_strategy(rows: usize, cols: usize, lo: i64, hi: i64) -> impl Strategy<Value = Matrix<Rational>> {
    prop::collection::vec(rational_strategy(lo, hi), rows * cols)
        .prop_map(move |v| Matrix::from_fn(rows, cols, |i, j| v[i * cols + j].clone()))
}

pub fn cost_strategy(max_dim: usize) -> impl Strategy<Value = CostMatrix<Rational>> {
    (1..=max_dim, 1..=max_dim)
        .prop_flat_map(|(m, n)| matrix_strategy(m, n, 0, 20))
        .prop_map(CostMatrix::from_finite)
}

pub fn marginal_strategy(len: usize) -> impl Strategy<Value = Marginal<Rational>> {
    prop::collection::vec(0i64..=9, len)
        .prop_filter("positive mass", |w| w.iter().sum::<i64>() > 0)
        .prop_map(|w| {
            let total: i64 = w.iter().sum();
            Marginal::new(w.into_iter().map(|x| q(x, total)).collect())
        })
}

pub fn line_metric_strategy(len: usize) -> impl Strategy<Value = Matrix<Rational>> {
    prop::collection::hash_set(0i64..=12, len).prop_map(move |pts| {
        let pts: Vec<i64> = pts.into_iter().collect();
        Matrix::from_fn(len, len, |a, b| q((pts[a] - pts[b]).abs(), 1))
    })
}

pub fn instance_strategy(max_dim: usize) -> impl Strategy<Value = ValidatedInstance<Rational>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(m, n)| {
        (matrix_strategy(m, n, 0, 20), marginal_strategy(m), marginal_strategy(n))
            .prop_map(|(c, mu, nu)| Instance::new(CostMatrix::from_finite(c), mu, nu).validate().unwrap())
    })
}

pub fn metric_instance_strategy(max_dim: usize) -> impl Strategy<Value = ValidatedInstance<Rational>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(m, n)| {
        (
            matrix_strategy(m, n, 0, 20),
            marginal_strategy(m),
            marginal_strategy(n),
            line_metric_strategy(m),
            line_metric_strategy(n),
        )
            .prop_map(|(c, mu, nu, dx, dy)| {
                Instance::new(CostMatrix::from_finite(c), mu, nu)
                    .with_metrics(dx, dy)
                    .validate()
                    .unwrap()
            })
    })
}

/// Potentials on X paired with a cost of matching row count.
pub fn phi_and_cost(max_dim: usize) -> impl Strategy<Value = (Vec<Rational>, CostMatrix<Rational>)> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(rational_strategy(-30, 30), m),
            matrix_strategy(m, n, 0, 20).prop_map(CostMatrix::from_finite),
        )
    })
}
