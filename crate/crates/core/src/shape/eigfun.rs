use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::hadamard::{boundary_trace, convolution_gradient, HadamardOptions};
use crate::error::{Error, Result};
use crate::geometry::{split_field, Vec3, VectorField};
use crate::kernels::Coefficient;
use crate::operator::{EigenPair, NonlocalOperator, Problem, DENSE_LIMIT};

#[derive(Clone, Debug)]
pub struct EigfunDerivative {
    /// Solution `w` of `(λ0 - B) w = f_V` with `⟨w, u0⟩_w = 0`.
    pub w: Vec<f64>,
    /// Nodal right-hand side `f_V`.
    pub f: Vec<f64>,
    /// `⟨u0, f_V⟩_w`.
    pub solvability: f64,
    /// `‖(λ0 - A) w - P f_V‖_w`, with `P` the projection off `u0`.
    pub residual: f64,
}

/// Right-hand side `f_V` of the equation for the derivative of the
/// eigenfunction along `field`, given the eigenvalue derivative `dlambda`.
fn rhs(
    problem: &Problem,
    coeff: &Coefficient,
    op: &NonlocalOperator,
    pair: &EigenPair,
    field: &VectorField,
    dlambda: f64,
    options: HadamardOptions,
) -> Result<Vec<f64>> {
    let dom = &problem.domain;
    let n = dom.len();
    let u = &pair.vector;
    let lambda = pair.value;
    let kernel = &op.kernel;

    let v: Vec<Vec3> = dom.nodes.iter().map(|x| field.eval(x)).collect();
    let split = split_field(field, dom);
    let dta = coeff.shape_derivative(dom, field)?;
    let trace = boundary_trace(op, coeff, problem, pair)?;

    // ∇(J u0) in the ambient space and the tangential ∇u0 it bootstraps.
    let ones = vec![Vec3::new(1.0, 1.0, 1.0); n];
    let grad_ju = convolution_gradient(op, u, &ones);
    let grad_u: Vec<Vec3> = (0..n)
        .map(|i| dom.tangent_projectors[i] * (grad_ju[i] - coeff.gradients[i] * u[i]) / (op.a[i] - lambda))
        .collect();
    let g: Vec<f64> = (0..n).map(|i| v[i].dot(&grad_u[i])).collect();
    let jg = op.convolve(&g);

    let flux: Vec<f64> = (0..dom.boundary_nodes.len())
        .map(|k| trace[k] * field.eval(&dom.boundary_nodes[k]).dot(&dom.conormals[k]) * dom.boundary_weights[k])
        .collect();
    let scale = options.curvature.factor(dom.intrinsic_dim) / dom.intrinsic_dim as f64;
    let curv: Vec<f64> = (0..n)
        .map(|j| u[j] * (dom.curvature_vectors[j] * scale).dot(&split.normal[j]))
        .collect();
    let jcurv = op.convolve(&curv);
    let manifold = split.normal.iter().any(|vn| *vn != Vec3::zeros());

    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let x = &dom.nodes[i];
            let boundary: f64 = dom
                .boundary_nodes
                .iter()
                .zip(&flux)
                .map(|(s, f)| kernel.between(x, s) * f)
                .sum();
            let normal_kernel: f64 = if manifold {
                (0..n)
                    .map(|j| u[j] * kernel.gradient_x(&dom.nodes[j], x).dot(&split.normal[j]) * dom.weights[j])
                    .sum()
            } else {
                0.0
            };
            -dlambda * u[i] + (dta[i] + split.tangential[i].dot(&coeff.gradients[i])) * u[i] + jg[i]
                - v[i].dot(&grad_ju[i])
                - boundary
                - jcurv[i]
                - normal_kernel
        })
        .collect())
}

/// Solves `(λ0 - B) w = f_V` on the complement of `u0`.
#[allow(clippy::too_many_arguments)]
pub fn eigenfunction_derivative(
    problem: &Problem,
    coeff: &Coefficient,
    op: &NonlocalOperator,
    pair: &EigenPair,
    field: &VectorField,
    dlambda: f64,
    options: HadamardOptions,
    solv_tol: f64,
) -> Result<EigfunDerivative> {
    if !pair.simple {
        return Err(Error::NotSimple {
            value: pair.value,
            gap: pair.gap,
            tol: crate::operator::gap_tolerance(pair.value),
        });
    }
    let n = op.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "eigenfunction derivative needs a dense solve; {n} nodes exceed {DENSE_LIMIT}"
        )));
    }
    let u = &pair.vector;
    let f = rhs(problem, coeff, op, pair, field, dlambda, options)?;
    let solvability = op.inner(u, &f);
    if solvability.abs() > solv_tol {
        return Err(Error::Solvability {
            value: solvability,
            tol: solv_tol,
        });
    }
    let fp: Vec<f64> = f.iter().zip(u).map(|(f, u)| f - solvability * u).collect();

    // Bordered system in the symmetric form x = D^{1/2} w.
    let s = op.sqrt_weights();
    let sym = op.dense_symmetric();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = -sym[(i, j)];
        }
        m[(j, j)] += pair.value;
        m[(j, n)] = s[j] * u[j];
        m[(n, j)] = s[j] * u[j];
    }
    let mut b = DVector::zeros(n + 1);
    for i in 0..n {
        b[i] = s[i] * fp[i];
    }
    let sol = m
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("bordered eigenfunction system".into()))?;
    let mut w: Vec<f64> = (0..n).map(|i| sol[i] / s[i]).collect();
    let c = op.inner(&w, u);
    w.iter_mut().zip(u).for_each(|(w, u)| *w -= c * u);

    let aw = op.apply(&w);
    let r: Vec<f64> = (0..n).map(|i| pair.value * w[i] - aw[i] - fp[i]).collect();
    Ok(EigfunDerivative {
        residual: op.norm(&r),
        w,
        f,
        solvability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape};
    use crate::kernels::{make_kernel, CoefficientRule, KernelFamily};
    use crate::operator::{principal_eigenpair, spectrum};
    use crate::shape::{hadamard_derivative, NormalTermRule};

    fn interval(res: usize) -> (Problem, Coefficient, NonlocalOperator, EigenPair) {
        let dom = build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, res).unwrap();
        let p = Problem::new(dom, make_kernel(KernelFamily::Tent, 0.25, 1).unwrap(), CoefficientRule::Dirichlet);
        let (c, op) = p.assemble().unwrap();
        let pair = principal_eigenpair(&spectrum(&op).unwrap()).unwrap();
        (p, c, op, pair)
    }

    #[test]
    fn null_field_gives_zero() {
        let (p, c, op, pair) = interval(100);
        let d = eigenfunction_derivative(&p, &c, &op, &pair, &VectorField::Zero, 0.0, Default::default(), 1e-12)
            .unwrap();
        assert!(d.f.iter().all(|v| *v == 0.0));
        assert!(d.w.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn translation_residual_and_solvability() {
        let (p, c, op, pair) = interval(400);
        let field = VectorField::Translation { direction: [1.0, 0.0, 0.0] };
        let o = HadamardOptions {
            normal_rule: NormalTermRule::Kernel,
            ..Default::default()
        };
        let dl = hadamard_derivative(&p, &c, &op, &pair, &field, o).unwrap().formula;
        let d = eigenfunction_derivative(&p, &c, &op, &pair, &field, dl, o, 1e-6).unwrap();
        assert!(d.residual <= 1e-8, "{}", d.residual);
        assert!(d.solvability.abs() <= 1e-6, "{}", d.solvability);
    }

    #[test]
    fn solvability_improves_under_refinement() {
        let field = VectorField::Polynomial {
            components: [
                crate::geometry::Polynomial {
                    terms: vec![
                        crate::geometry::Monomial { coef: 0.3, powers: [0, 0, 0] },
                        crate::geometry::Monomial { coef: 1.0, powers: [2, 0, 0] },
                    ],
                },
                crate::geometry::Polynomial::constant(0.0),
                crate::geometry::Polynomial::constant(0.0),
            ],
        };
        let o = HadamardOptions::default();
        let s: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&r| {
                let (p, c, op, pair) = interval(r);
                let dl = hadamard_derivative(&p, &c, &op, &pair, &field, o).unwrap().formula;
                eigenfunction_derivative(&p, &c, &op, &pair, &field, dl, o, 1.0).unwrap().solvability.abs()
            })
            .collect();
        assert!(s[2] < s[0], "{s:?}");
    }
}
