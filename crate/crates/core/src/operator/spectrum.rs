use nalgebra::SymmetricEigen;

use super::{lanczos, NonlocalOperator};
use crate::error::{Error, Result};

/// Largest node count for which the full spectrum is computed.
pub const FULL_LIMIT: usize = 2500;

/// Number of eigenpairs sought by the iterative solver when the full
/// decomposition is out of reach.
const ITERATIVE_COUNT: usize = 6;

const LANCZOS_SEED: u64 = 0x5eed;

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// Nodal eigenvector normalized by `Σ u_i^2 w_i = 1`.
    pub vector: Vec<f64>,
    /// Distance to the nearest other computed eigenvalue.
    pub gap: f64,
    pub simple: bool,
    /// `‖A u - λ u‖_w`, when measured.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Essential band `[m, M]`.
    pub band: (f64, f64),
    pub band_tol: f64,
    /// Every computed eigenvalue, ascending.
    pub computed: Vec<f64>,
    /// Whether `computed` is the full discrete spectrum of the matrix.
    pub complete: bool,
    /// Eigenpairs outside `[m - band_tol, M + band_tol]`, ascending.
    pub discrete: Vec<EigenPair>,
    /// Number of computed eigenvalues classified as band approximants.
    pub band_count: usize,
}

pub fn band_tolerance(op: &NonlocalOperator) -> f64 {
    10.0 / op.resolution.max(1) as f64 * (op.big_m - op.m) + 1e-10 * op.big_m.abs().max(1.0)
}

pub fn gap_tolerance(lambda: f64) -> f64 {
    1e-6 * lambda.abs().max(1.0)
}

fn residual_tolerance(op: &NonlocalOperator) -> f64 {
    1e-11 * (1.0 + op.m.abs().max(op.big_m.abs()))
}

/// Flips `u` so that its weighted mean is positive, or, for mean-free
/// vectors, so that its largest entry is positive.
fn normalize_sign(op: &NonlocalOperator, u: &mut [f64]) {
    let mean: f64 = u.iter().zip(&op.weights).map(|(u, w)| u * w).sum();
    let scale: f64 = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let flip = if mean.abs() > 1e-8 * scale * op.weights.iter().sum::<f64>() {
        mean < 0.0
    } else {
        let big = u.iter().cloned().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
        big < 0.0
    };
    if flip {
        u.iter_mut().for_each(|v| *v = -*v);
    }
}

fn to_nodal(op: &NonlocalOperator, x: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = x.iter().zip(op.sqrt_weights()).map(|(x, s)| x / s).collect();
    let norm = op.norm(&u);
    u.iter_mut().for_each(|v| *v /= norm);
    normalize_sign(op, &mut u);
    u
}

pub fn residual(op: &NonlocalOperator, lambda: f64, u: &[f64]) -> f64 {
    let au = op.apply(u);
    let r: Vec<f64> = au.iter().zip(u).map(|(a, u)| a - lambda * u).collect();
    op.norm(&r)
}

fn gaps(values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let left = if i > 0 { values[i] - values[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < values.len() { values[i + 1] - values[i] } else { f64::INFINITY };
            left.min(right)
        })
        .collect()
}

/// All eigenpairs (small problems) or the lowest few (large problems).
fn computed_pairs(op: &NonlocalOperator, k: usize) -> Result<(Vec<(f64, Vec<f64>)>, bool)> {
    let n = op.len();
    if n <= FULL_LIMIT {
        let eig = SymmetricEigen::try_new(op.dense_symmetric(), 1e-15, 10_000).ok_or(Error::NoConvergence {
            iterations: 10_000,
            residual: f64::NAN,
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let pairs = order
            .into_iter()
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().cloned().collect()))
            .collect();
        Ok((pairs, true))
    } else {
        let pairs = lanczos::lowest(|x| op.apply_symmetric(x), n, k, residual_tolerance(op), LANCZOS_SEED)?;
        Ok((pairs, false))
    }
}

/// Spectrum of the discretized operator, classified against the essential band.
pub fn spectrum(op: &NonlocalOperator) -> Result<SpectrumReport> {
    let (pairs, complete) = computed_pairs(op, ITERATIVE_COUNT)?;
    let computed: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let gap = gaps(&computed);
    let band_tol = band_tolerance(op);
    let (lo, hi) = (op.m - band_tol, op.big_m + band_tol);
    let mut discrete = Vec::new();
    let mut band_count = 0;
    for (i, (value, x)) in pairs.into_iter().enumerate() {
        if value >= lo && value <= hi {
            band_count += 1;
            continue;
        }
        let vector = to_nodal(op, &x);
        let residual = (discrete.len() < 16).then(|| residual(op, value, &vector));
        discrete.push(EigenPair {
            value,
            vector,
            gap: gap[i],
            simple: gap[i] > gap_tolerance(value),
            residual,
        });
    }
    Ok(SpectrumReport {
        band: (op.m, op.big_m),
        band_tol,
        computed,
        complete,
        discrete,
        band_count,
    })
}

/// The lowest `k` eigenpairs, regardless of the band, ascending. Gaps are
/// measured among the pairs found (plus the next one when available).
pub fn lowest_eigenpairs(op: &NonlocalOperator, k: usize) -> Result<Vec<EigenPair>> {
    let (pairs, _) = computed_pairs(op, k + 1)?;
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let gap = gaps(&values);
    Ok(pairs
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (value, x))| {
            let vector = to_nodal(op, &x);
            let residual = Some(residual(op, value, &vector));
            EigenPair {
                value,
                vector,
                gap: gap[i],
                simple: gap[i] > gap_tolerance(value),
                residual,
            }
        })
        .collect())
}

/// Smallest discrete eigenvalue below the band and its sign-normalized
/// eigenvector. Non-simplicity is flagged on the pair, not raised.
pub fn principal_eigenpair(rep: &SpectrumReport) -> Result<EigenPair> {
    match rep.discrete.first() {
        Some(p) if p.value < rep.band.0 - rep.band_tol => Ok(p.clone()),
        _ => Err(Error::NoPrincipalEigenvalue {
            m: rep.band.0,
            big_m: rep.band.1,
        }),
    }
}
