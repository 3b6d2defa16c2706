//! Nyström discretization `A_ij = a_i δ_ij - J(x_i, x_j) w_j` of the nonlocal
//! operator and its spectral analysis.
//!
//! The kernel matrix `K_ij = J(|x_i - x_j|)` is stored densely for moderate
//! node counts and applied matrix-free (with a cell list exploiting the
//! compact support) beyond that.

mod existence;
mod jacobi;
mod lanczos;
mod problem;
mod spectrum;

pub use existence::{existence_diagnostic, ExistenceReport};
pub use jacobi::jacobi_eigenvalues;
pub use problem::Problem;
pub use spectrum::{
    band_tolerance, gap_tolerance, lowest_eigenpairs, principal_eigenpair, residual, spectrum, EigenPair, SpectrumReport,
};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{QuadratureDomain, Vec3};
use crate::kernels::{CellList, Coefficient, Kernel};

/// Largest node count for which the kernel matrix is kept in memory.
pub const DENSE_LIMIT: usize = 6000;

#[derive(Clone, Debug)]
enum Storage {
    Dense(DMatrix<f64>),
    MatrixFree(CellList),
}

#[derive(Clone, Debug)]
pub struct NonlocalOperator {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub a: Vec<f64>,
    pub kernel: Kernel,
    /// `min_i a_i`.
    pub m: f64,
    /// `max_i a_i`.
    pub big_m: f64,
    pub resolution: usize,
    sqrt_w: Vec<f64>,
    storage: Storage,
}

pub fn assemble(dom: &QuadratureDomain, kernel: &Kernel, coeff: &Coefficient) -> Result<NonlocalOperator> {
    if coeff.values.len() != dom.len() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient has {} values for {} nodes",
            coeff.values.len(),
            dom.len()
        )));
    }
    if kernel.dim != dom.intrinsic_dim {
        return Err(Error::DimensionMismatch(format!(
            "kernel normalized in dimension {} on a {}-dimensional domain",
            kernel.dim, dom.intrinsic_dim
        )));
    }
    Ok(NonlocalOperator::from_parts(
        dom.nodes.clone(),
        dom.weights.clone(),
        coeff.values.clone(),
        kernel.clone(),
        dom.resolution,
    ))
}

impl NonlocalOperator {
    /// Builds the operator from raw nodal data.
    pub fn from_parts(nodes: Vec<Vec3>, weights: Vec<f64>, a: Vec<f64>, kernel: Kernel, resolution: usize) -> Self {
        let n = nodes.len();
        let storage = if n <= DENSE_LIMIT {
            let cols: Vec<f64> = (0..n)
                .into_par_iter()
                .flat_map_iter(|j| {
                    let xj = nodes[j];
                    let k = &kernel;
                    nodes.iter().map(move |xi| k.between(xi, &xj))
                })
                .collect();
            Storage::Dense(DMatrix::from_vec(n, n, cols))
        } else {
            Storage::MatrixFree(CellList::new(&nodes, kernel.delta))
        };
        let m = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let big_m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sqrt_w = weights.iter().map(|w| w.sqrt()).collect();
        NonlocalOperator {
            nodes,
            weights,
            a,
            kernel,
            m,
            big_m,
            resolution,
            sqrt_w,
            storage,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_w
    }

    /// `J(x_i, x_j)`.
    pub fn kernel_entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(k) => k[(i, j)],
            Storage::MatrixFree(_) => self.kernel.between(&self.nodes[i], &self.nodes[j]),
        }
    }

    /// `A_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let d = if i == j { self.a[i] } else { 0.0 };
        d - self.kernel_entry(i, j) * self.weights[j]
    }

    /// `v ↦ K v`, i.e. `Σ_j J(x_i, x_j) v_j`.
    pub fn kernel_matvec(&self, v: &[f64]) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(k) => {
                let v = DVector::from_column_slice(v);
                (k * v).as_slice().to_vec()
            }
            Storage::MatrixFree(cells) => self
                .nodes
                .par_iter()
                .map(|x| {
                    let mut acc = 0.0;
                    cells.for_each_candidate(x, |j| {
                        acc += self.kernel.between(x, &self.nodes[j]) * v[j];
                    });
                    acc
                })
                .collect(),
        }
    }

    /// Nodal values of `J_M u`: `Σ_j J(x_i, x_j) u_j w_j`.
    pub fn convolve(&self, u: &[f64]) -> Vec<f64> {
        let uw: Vec<f64> = u.iter().zip(&self.weights).map(|(u, w)| u * w).collect();
        self.kernel_matvec(&uw)
    }

    /// `A u = a u - J_M u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let ju = self.convolve(u);
        self.a.iter().zip(u).zip(ju).map(|((a, u), j)| a * u - j).collect()
    }

    /// `S x` with `S = D^{1/2} A D^{-1/2}`.
    pub fn apply_symmetric(&self, x: &[f64]) -> Vec<f64> {
        let sx: Vec<f64> = x.iter().zip(&self.sqrt_w).map(|(x, s)| x * s).collect();
        let k = self.kernel_matvec(&sx);
        (0..x.len()).map(|i| self.a[i] * x[i] - self.sqrt_w[i] * k[i]).collect()
    }

    /// Dense `A`. Intended for small problems and checks.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Dense `S = D^{1/2} A D^{-1/2}`, symmetric by construction.
    pub fn dense_symmetric(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut s = match &self.storage {
            Storage::Dense(k) => k.clone(),
            Storage::MatrixFree(_) => DMatrix::from_fn(n, n, |i, j| self.kernel_entry(i, j)),
        };
        for j in 0..n {
            for i in 0..n {
                s[(i, j)] *= -self.sqrt_w[i] * self.sqrt_w[j];
            }
            s[(j, j)] += self.a[j];
        }
        s
    }

    /// Weighted inner product `Σ u_i v_i w_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((u, v), w)| u * v * w).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// `(J_M u)(x) = Σ_j J(x, x_j) u_j w_j` at arbitrary points.
pub fn apply_convolution(op: &NonlocalOperator, u: &[f64], at: &[Vec3]) -> Vec<f64> {
    let cells = match &op.storage {
        Storage::MatrixFree(c) => std::borrow::Cow::Borrowed(c),
        Storage::Dense(_) => std::borrow::Cow::Owned(CellList::new(&op.nodes, op.kernel.delta)),
    };
    at.par_iter()
        .map(|x| {
            let mut acc = 0.0;
            cells.for_each_candidate(x, |j| {
                acc += op.kernel.between(x, &op.nodes[j]) * u[j] * op.weights[j];
            });
            acc
        })
        .collect()
}
