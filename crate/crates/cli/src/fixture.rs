//! Seeded instance generators.
//!
//! Every fixture is a pure function of `(name, size, seed)`: all randomness
//! comes from one `ChaCha8Rng` seeded with `seed`, and the parameters are
//! written into the instance's `"generator"` header.

use anyhow::{bail, Result};
use otlab_core::{CostMatrix, FiniteSpace, Instance, Marginal, Matrix, Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const FIXTURES: [&str; 4] = ["indicator", "random-uniform", "separable", "discrete-metric-spike"];

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn random_marginal(rng: &mut ChaCha8Rng, len: usize) -> Marginal<Rational> {
    let raw: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    Marginal::new(raw.into_iter().map(|w| q(w, total)).collect())
}

fn line_metric(points: &[Rational]) -> Matrix<Rational> {
    let n = points.len();
    Matrix::from_fn(n, n, |a, b| (points[a].clone() - points[b].clone()).abs())
}

/// `len` distinct integers from `0..=4 len`, in increasing order.
fn line_points(rng: &mut ChaCha8Rng, len: usize) -> Vec<Rational> {
    let mut points: Vec<i64> = Vec::with_capacity(len);
    while points.len() < len {
        let p = rng.gen_range(0..=4 * len as i64);
        if !points.contains(&p) {
            points.push(p);
        }
    }
    points.sort_unstable();
    points.into_iter().map(|p| q(p, 1)).collect()
}

fn space(points: &[Rational]) -> FiniteSpace<Rational> {
    FiniteSpace::new(points.iter().map(ToString::to_string).collect()).with_metric(line_metric(points))
}

fn indexed_space(metric: Matrix<Rational>) -> FiniteSpace<Rational> {
    FiniteSpace::indexed(metric.rows()).with_metric(metric)
}

/// `size` points spaced by 1 and centred on 0, e.g. `-1, 0, 1`.
fn symmetric_grid(size: usize) -> Vec<Rational> {
    let n = size as i64;
    (0..n).map(|i| q(2 * i - (n - 1), 2)).collect()
}

fn indicator(size: usize, rng: &mut ChaCha8Rng) -> Instance<Rational> {
    let points = symmetric_grid(size);
    let positive = |p: &Rational| if *p >= q(0, 1) { 1 } else { 0 };
    let cost = Matrix::from_fn(size, size, |i, j| q(positive(&points[i]) + positive(&points[j]), 1));
    Instance {
        space_x: space(&points),
        space_y: space(&points),
        cost: CostMatrix::from_finite(cost),
        mu: random_marginal(rng, size),
        nu: random_marginal(rng, size),
    }
}

fn random_uniform(size: usize, rng: &mut ChaCha8Rng) -> Instance<Rational> {
    let cost = Matrix::from_fn(size, size, |_, _| q(rng.gen_range(0..=20), rng.gen_range(1..=4)));
    let (xs, ys) = (line_points(rng, size), line_points(rng, size));
    Instance {
        space_x: space(&xs),
        space_y: space(&ys),
        cost: CostMatrix::from_finite(cost),
        mu: random_marginal(rng, size),
        nu: random_marginal(rng, size),
    }
}

fn separable(size: usize, rng: &mut ChaCha8Rng) -> Instance<Rational> {
    let a: Vec<i64> = (0..size).map(|_| rng.gen_range(0..=10)).collect();
    let b: Vec<i64> = (0..size).map(|_| rng.gen_range(0..=10)).collect();
    let cost = Matrix::from_fn(size, size, |i, j| q(a[i] + b[j], 1));
    let (xs, ys) = (line_points(rng, size), line_points(rng, size));
    Instance {
        space_x: space(&xs),
        space_y: space(&ys),
        cost: CostMatrix::from_finite(cost),
        mu: random_marginal(rng, size),
        nu: random_marginal(rng, size),
    }
}

/// Zero on the diagonal, 10 elsewhere, discrete metric, uniform marginals.
fn discrete_metric_spike(size: usize) -> Instance<Rational> {
    let off = |i: usize, j: usize, v: i64| if i == j { q(0, 1) } else { q(v, 1) };
    let metric = Matrix::from_fn(size, size, |i, j| off(i, j, 1));
    Instance {
        space_x: indexed_space(metric.clone()),
        space_y: indexed_space(metric),
        cost: CostMatrix::from_finite(Matrix::from_fn(size, size, |i, j| off(i, j, 10))),
        mu: Marginal::uniform(size),
        nu: Marginal::uniform(size),
    }
}

/// The instance together with its `"generator"` header.
pub fn generate_fixture(name: &str, size: usize, seed: u64) -> Result<(Instance<Rational>, Value)> {
    if size == 0 {
        bail!("fixture size must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = match name {
        "indicator" => indicator(size, &mut rng),
        "random-uniform" => random_uniform(size, &mut rng),
        "separable" => separable(size, &mut rng),
        "discrete-metric-spike" => discrete_metric_spike(size),
        other => bail!("unknown fixture `{other}` (expected one of: {})", FIXTURES.join(", ")),
    };
    let header = json!({
        "fixture": name,
        "size": size,
        "seed": seed,
        "rng": "ChaCha8",
    });
    Ok((instance, header))
}
