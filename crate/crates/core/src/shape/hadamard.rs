use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{split_field, CurvatureConvention, Vec3, VectorField};
use crate::kernels::Coefficient;
use crate::operator::{apply_convolution, band_tolerance, gap_tolerance, EigenPair, NonlocalOperator, Problem};

use super::fd::FdEstimate;

/// How the contribution of the normal motion of an embedded manifold through
/// the kernel is accounted for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormalTermRule {
    /// `-factor ∫ u0^2 ⟨∇a, V^⊥⟩ dv`.
    CoefficientGradient { factor: f64 },
    /// `-2 ∫ u0(x) ⟨V^⊥(x), ∫ ∇_x J(x, y) u0(y) dy⟩ dv(x)`, obtained by
    /// differentiating the kernel `J(|h(x) - h(y)|)` of the pulled-back
    /// Rayleigh quotient.
    Kernel,
}

impl Default for NormalTermRule {
    fn default() -> Self {
        NormalTermRule::CoefficientGradient { factor: 1.0 }
    }
}

impl NormalTermRule {
    pub fn label(&self) -> String {
        match self {
            NormalTermRule::CoefficientGradient { factor } => format!("coefficient-gradient(x{factor})"),
            NormalTermRule::Kernel => "kernel".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HadamardOptions {
    #[serde(default)]
    pub normal_rule: NormalTermRule,
    #[serde(default)]
    pub curvature: CurvatureConvention,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HadamardTerms {
    /// `-∫_{∂M} (a - λ0) u0^2 ⟨V^T, N⟩ dS`.
    pub boundary: f64,
    /// `∫_M u0^2 D_t^T(h* a) dv`.
    pub coefficient: f64,
    /// `∫_M (λ0 - a) u0^2 ⟨H, V^⊥⟩ dv`.
    pub curvature: f64,
    /// Normal-gradient term, per [`NormalTermRule`].
    pub normal_gradient: f64,
}

impl HadamardTerms {
    pub fn sum(&self) -> f64 {
        self.boundary + self.coefficient + self.curvature + self.normal_gradient
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.boundary, self.coefficient, self.curvature, self.normal_gradient]
    }
}

#[derive(Clone, Debug)]
pub struct HadamardReport {
    pub lambda0: f64,
    pub terms: HadamardTerms,
    /// Exactly `terms.sum()`.
    pub formula: f64,
    pub options: HadamardOptions,
    pub fd: Option<FdEstimate>,
}

impl HadamardReport {
    pub fn fd_value(&self) -> Option<f64> {
        self.fd.as_ref().map(|f| f.value)
    }

    /// `|formula - FD| / max(|FD|, 1e-8)`.
    pub fn rel_err(&self) -> Option<f64> {
        self.fd_value().map(|fd| (self.formula - fd).abs() / fd.abs().max(1e-8))
    }
}

/// Values of `u0` at the boundary nodes through `u0 = (J_M u0) / (a - λ0)`.
pub fn boundary_trace(op: &NonlocalOperator, coeff: &Coefficient, problem: &Problem, pair: &EigenPair) -> Result<Vec<f64>> {
    let dom = &problem.domain;
    let ju = apply_convolution(op, &pair.vector, &dom.boundary_nodes);
    let scale = (op.big_m - op.m).abs().max(op.big_m.abs()).max(1.0);
    dom.boundary_nodes
        .iter()
        .zip(ju)
        .map(|(s, j)| {
            let a = coeff.value_at(s);
            let denom = a - pair.value;
            if !a.is_finite() || denom.abs() <= 1e-10 * scale {
                Err(Error::InsideBand {
                    value: pair.value,
                    m: op.m,
                    big_m: op.big_m,
                })
            } else {
                Ok(j / denom)
            }
        })
        .collect()
}

fn check_pair(op: &NonlocalOperator, pair: &EigenPair) -> Result<()> {
    if !pair.simple {
        return Err(Error::NotSimple {
            value: pair.value,
            gap: pair.gap,
            tol: gap_tolerance(pair.value),
        });
    }
    let tol = band_tolerance(op);
    if pair.value >= op.m - tol && pair.value <= op.big_m + tol {
        return Err(Error::InsideBand {
            value: pair.value,
            m: op.m,
            big_m: op.big_m,
        });
    }
    Ok(())
}

/// Hadamard formula for the domain derivative of a simple eigenvalue along
/// the flow generated by `field`.
pub fn hadamard_derivative(
    problem: &Problem,
    coeff: &Coefficient,
    op: &NonlocalOperator,
    pair: &EigenPair,
    field: &VectorField,
    options: HadamardOptions,
) -> Result<HadamardReport> {
    check_pair(op, pair)?;
    let dom = &problem.domain;
    let u = &pair.vector;
    let lambda = pair.value;

    let trace = boundary_trace(op, coeff, problem, pair)?;
    let boundary: f64 = -dom
        .boundary_nodes
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let a = coeff.value_at(s);
            // N is tangent to M, so ⟨V^T, N⟩ = ⟨V, N⟩.
            let vn = field.eval(s).dot(&dom.conormals[k]);
            (a - lambda) * trace[k] * trace[k] * vn * dom.boundary_weights[k]
        })
        .sum::<f64>();

    let dta = coeff.shape_derivative(dom, field)?;
    let coefficient: f64 = (0..dom.len()).map(|i| u[i] * u[i] * dta[i] * dom.weights[i]).sum();

    let split = split_field(field, dom);
    let curvature_scale = options.curvature.factor(dom.intrinsic_dim) / dom.intrinsic_dim as f64;
    let curvature: f64 = (0..dom.len())
        .map(|i| {
            let h = dom.curvature_vectors[i] * curvature_scale;
            (lambda - op.a[i]) * u[i] * u[i] * h.dot(&split.normal[i]) * dom.weights[i]
        })
        .sum();

    let normal_gradient = match options.normal_rule {
        NormalTermRule::CoefficientGradient { factor } => {
            -factor
                * (0..dom.len())
                    .map(|i| u[i] * u[i] * coeff.gradients[i].dot(&split.normal[i]) * dom.weights[i])
                    .sum::<f64>()
        }
        NormalTermRule::Kernel => {
            let grad = convolution_gradient(op, u, &split.normal);
            -2.0 * (0..dom.len())
                .map(|i| u[i] * split.normal[i].dot(&grad[i]) * dom.weights[i])
                .sum::<f64>()
        }
    };

    let terms = HadamardTerms {
        boundary,
        coefficient,
        curvature,
        normal_gradient,
    };
    Ok(HadamardReport {
        lambda0: lambda,
        terms,
        formula: terms.sum(),
        options,
        fd: None,
    })
}

/// `∇(J_M u)(x_i) = Σ_j ∇_x J(x_i, x_j) u_j w_j`, skipped where `mask` is zero.
pub(crate) fn convolution_gradient(op: &NonlocalOperator, u: &[f64], mask: &[Vec3]) -> Vec<Vec3> {
    (0..op.len())
        .into_par_iter()
        .map(|i| {
            if mask[i] == Vec3::zeros() {
                return Vec3::zeros();
            }
            let xi = &op.nodes[i];
            (0..op.len()).fold(Vec3::zeros(), |acc, j| {
                acc + op.kernel.gradient_x(xi, &op.nodes[j]) * (u[j] * op.weights[j])
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape};
    use crate::kernels::{make_kernel, CoefficientRule, KernelFamily};
    use crate::operator::{principal_eigenpair, spectrum};

    fn setup(shape: DomainShape, res: usize, delta: f64, rule: CoefficientRule) -> (Problem, Coefficient, NonlocalOperator) {
        let dom = build_domain(&shape, res).unwrap();
        let k = make_kernel(KernelFamily::Tent, delta, dom.intrinsic_dim).unwrap();
        let p = Problem::new(dom, k, rule);
        let (c, op) = p.assemble().unwrap();
        (p, c, op)
    }

    fn principal(op: &NonlocalOperator) -> EigenPair {
        principal_eigenpair(&spectrum(op).unwrap()).unwrap()
    }

    #[test]
    fn dirichlet_reduces_to_boundary_term() {
        let (p, c, op) = setup(DomainShape::Interval { a: 0.0, b: 1.0 }, 200, 0.25, CoefficientRule::Dirichlet);
        let pair = principal(&op);
        let field = VectorField::Dilation { center: [0.0; 3] };
        let r = hadamard_derivative(&p, &c, &op, &pair, &field, HadamardOptions::default()).unwrap();
        assert_eq!(r.terms.coefficient, 0.0);
        assert_eq!(r.terms.curvature, 0.0);
        assert_eq!(r.terms.normal_gradient, 0.0);
        assert_eq!(r.formula, r.terms.sum());
        // Only x = 1 moves: -(1 - λ0) u0(1)^2.
        let trace = boundary_trace(&op, &c, &p, &pair).unwrap();
        let closed = -(1.0 - pair.value) * trace[1] * trace[1];
        assert!((r.formula - closed).abs() < 1e-12);
        assert!(r.formula < 0.0);
    }

    #[test]
    fn neumann_principal_derivative_vanishes() {
        let (p, c, op) = setup(
            DomainShape::Disk { center: [0.0, 0.0], radius: 1.0 },
            24,
            0.5,
            CoefficientRule::Neumann,
        );
        let pair = principal(&op);
        let field = VectorField::NormalBump { center: [1.0, 0.0, 0.0], width: 0.5, direction: None };
        let r = hadamard_derivative(&p, &c, &op, &pair, &field, HadamardOptions::default()).unwrap();
        assert!(r.terms.boundary.abs() > 1e-3);
        assert!(r.formula.abs() < 1e-10 * r.terms.boundary.abs().max(1.0), "{:?}", r.terms);
    }

    #[test]
    fn translation_gives_zero_for_dirichlet() {
        let (p, c, op) = setup(DomainShape::Interval { a: 0.0, b: 1.0 }, 400, 0.25, CoefficientRule::Dirichlet);
        let pair = principal(&op);
        let field = VectorField::Translation { direction: [1.0, 0.0, 0.0] };
        let r = hadamard_derivative(&p, &c, &op, &pair, &field, HadamardOptions::default()).unwrap();
        assert!(r.formula.abs() < 1e-10);
    }

    #[test]
    fn linear_in_the_field() {
        let (p, c, op) = setup(
            DomainShape::Disk { center: [0.0, 0.0], radius: 1.0 },
            20,
            0.5,
            CoefficientRule::Neumann,
        );
        let rep = spectrum(&op).unwrap();
        let pair = rep.discrete.iter().find(|q| q.value > 1e-6 && q.simple).unwrap().clone();
        let v1 = VectorField::Dilation { center: [0.1, 0.0, 0.0] };
        let v2 = VectorField::NormalBump { center: [0.0, 1.0, 0.0], width: 0.4, direction: None };
        let combo = VectorField::Combination { terms: vec![(2.0, v1.clone()), (-0.5, v2.clone())] };
        let o = HadamardOptions::default();
        let f = |v: &VectorField| hadamard_derivative(&p, &c, &op, &pair, v, o).unwrap().formula;
        let lhs = f(&combo);
        let rhs = 2.0 * f(&v1) - 0.5 * f(&v2);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn sphere_specializes_to_closed_form() {
        let (p, c, op) = setup(DomainShape::Sphere { radius: 1.0 }, 10, 0.8, CoefficientRule::Constant(0.0));
        let pair = principal(&op);
        let field = VectorField::NormalBump { center: [0.0, 0.0, 1.0], width: 0.7, direction: None };
        let r = hadamard_derivative(&p, &c, &op, &pair, &field, HadamardOptions::default()).unwrap();
        let dom = &p.domain;
        let n = 2.0;
        let closed: f64 = (0..dom.len())
            .map(|i| {
                let x = dom.nodes[i];
                let vn = x * x.dot(&field.eval(&x));
                n * pair.value * pair.vector[i].powi(2) * x.dot(&vn) * dom.weights[i]
            })
            .sum();
        assert!((r.formula - closed).abs() < 1e-10 * closed.abs().max(1.0));
    }

    #[test]
    fn tangential_fields_leave_normal_terms_zero() {
        let (p, c, op) = setup(DomainShape::Sphere { radius: 1.0 }, 10, 0.8, CoefficientRule::Dirichlet);
        let pair = principal(&op);
        // Rotation about the x3 axis is tangent to the sphere.
        let rot = VectorField::Polynomial {
            components: [
                crate::geometry::Polynomial { terms: vec![crate::geometry::Monomial { coef: -1.0, powers: [0, 1, 0] }] },
                crate::geometry::Polynomial { terms: vec![crate::geometry::Monomial { coef: 1.0, powers: [1, 0, 0] }] },
                crate::geometry::Polynomial::constant(0.0),
            ],
        };
        for rule in [NormalTermRule::default(), NormalTermRule::Kernel] {
            let o = HadamardOptions { normal_rule: rule, ..Default::default() };
            let r = hadamard_derivative(&p, &c, &op, &pair, &rot, o).unwrap();
            assert!(r.terms.curvature.abs() < 1e-12 && r.terms.normal_gradient.abs() < 1e-12);
            assert_eq!(r.terms.boundary, 0.0);
        }
    }
}
