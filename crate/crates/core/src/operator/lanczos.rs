//! Lanczos iteration with full reorthogonalization and locking, for the
//! lowest eigenpairs of a symmetric operator given only through matvecs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_STEPS: usize = 400;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
}

struct Ritz {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

/// One Lanczos run on the complement of `locked`. Returns the `want` lowest
/// Ritz pairs with their residual estimates.
fn run<F>(apply: &F, n: usize, locked: &[Vec<f64>], want: usize, tol: f64, rng: &mut ChaCha8Rng) -> Vec<Ritz>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let max_steps = MAX_STEPS.min(n - locked.len()).max(1);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    orthogonalize(&mut q, locked);
    let nq = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        orthogonalize(&mut w, locked);
        let a = dot(&basis[j], &w);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, locked);
        alpha.push(a);
        let b = dot(&w, &w).sqrt();

        let m = alpha.len();
        let exhausted = b <= 1e-13 * (1.0 + a.abs()) || m >= max_steps;
        if exhausted || (m >= want && m.is_multiple_of(10)) {
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            let take = want.min(m);
            let resid: Vec<f64> = order[..take]
                .iter()
                .map(|&i| if exhausted && b <= 1e-13 * (1.0 + a.abs()) { 0.0 } else { (b * eig.eigenvectors[(m - 1, i)]).abs() })
                .collect();
            if exhausted || resid.iter().all(|r| *r <= tol) {
                return order[..take]
                    .iter()
                    .zip(resid)
                    .map(|(&i, residual)| {
                        let mut v = vec![0.0; n];
                        for (r, qb) in basis.iter().enumerate() {
                            axpy(eig.eigenvectors[(r, i)], qb, &mut v);
                        }
                        Ritz {
                            value: eig.eigenvalues[i],
                            vector: v,
                            residual,
                        }
                    })
                    .collect();
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
}

/// Lowest `k` eigenpairs `(θ, x)` with `‖S x - θ x‖ <= tol`, ascending.
pub(crate) fn lowest<F>(apply: F, n: usize, k: usize, tol: f64, seed: u64) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = Vec::new();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for _round in 0..(4 * k + 8) {
        if vectors.len() == n {
            break;
        }
        let verifying = values.len() >= k;
        let want = if verifying { 1 } else { k - values.len() };
        let ritz = run(&apply, n, &vectors, want, tol, &mut rng);
        let converged: Vec<Ritz> = ritz.into_iter().take_while(|r| r.residual <= tol).collect();
        if converged.is_empty() {
            return Err(Error::NoConvergence {
                iterations: MAX_STEPS,
                residual: f64::NAN,
            });
        }
        if verifying {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            if converged[0].value >= sorted[k - 1] - tol {
                break;
            }
        }
        for r in converged {
            values.push(r.value);
            vectors.push(r.vector);
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.truncate(k);
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_degenerate_lowest_eigenvalues() {
        // Diagonal operator with a repeated smallest eigenvalue.
        let n = 300;
        let d: Vec<f64> = (0..n)
            .map(|i| match i {
                0 | 1 => 0.5,
                2 => 0.7,
                _ => 1.0 + i as f64 / n as f64,
            })
            .collect();
        let pairs = lowest(|x: &[f64]| x.iter().zip(&d).map(|(x, d)| x * d).collect(), n, 3, 1e-10, 7).unwrap();
        let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        assert!((vals[0] - 0.5).abs() < 1e-10 && (vals[1] - 0.5).abs() < 1e-10 && (vals[2] - 0.7).abs() < 1e-10);
    }
}
