use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use super::{CellList, Kernel};
use crate::error::{Error, Result};
use crate::geometry::{split_field, Mat3, Polynomial, QuadratureDomain, Vec3, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleTag {
    Dirichlet,
    Neumann,
    Hole,
    Ambient,
}

impl FromStr for RuleTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(RuleTag::Dirichlet),
            "neumann" => Ok(RuleTag::Neumann),
            "hole" => Ok(RuleTag::Hole),
            "ambient" => Ok(RuleTag::Ambient),
            _ => Err(Error::Unknown {
                kind: "coefficient rule",
                name: s.to_string(),
            }),
        }
    }
}

/// Extra geometry or data needed by some rules.
#[derive(Clone, Debug)]
pub enum CoefficientAux {
    /// Quadrature of the removed set `A`; its boundary conormals point out of `A`.
    Hole(Arc<QuadratureDomain>),
    /// Fixed function on the ambient space.
    Ambient(Polynomial),
}

/// How `a_M` is defined as a function of the domain.
#[derive(Clone, Debug)]
pub enum CoefficientRule {
    /// `a ≡ 1`.
    Dirichlet,
    /// `a ≡ value`, independent of the domain.
    Constant(f64),
    /// `a(x) = ∫_M J(|x - y|) dy`.
    Neumann,
    /// `a(x) = ∫_{R^n \ A} J(|x - y|) dy = 1 - ∫_A J(|x - y|) dy`.
    Hole(Arc<QuadratureDomain>),
    /// Restriction of a fixed ambient function.
    Ambient(Polynomial),
    /// Prescribed nodal values with no domain dependence and no gradient.
    Nodal(Vec<f64>),
}

impl CoefficientRule {
    pub fn name(&self) -> &'static str {
        match self {
            CoefficientRule::Dirichlet => "dirichlet",
            CoefficientRule::Constant(_) => "constant",
            CoefficientRule::Neumann => "neumann",
            CoefficientRule::Hole(_) => "hole",
            CoefficientRule::Ambient(_) => "ambient",
            CoefficientRule::Nodal(_) => "nodal",
        }
    }

    /// The same rule after the ambient space is deformed by `map`. Only the
    /// hole geometry moves with the flow.
    pub fn pushed<F>(&self, map: F) -> CoefficientRule
    where
        F: Fn(&Vec3) -> (Vec3, Mat3),
    {
        match self {
            CoefficientRule::Hole(a) => CoefficientRule::Hole(Arc::new(a.pushed(map))),
            other => other.clone(),
        }
    }
}

impl fmt::Display for CoefficientRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Nodal values of `a_M`, its ambient gradient and the rule that defines it.
#[derive(Clone, Debug)]
pub struct Coefficient {
    pub rule: CoefficientRule,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec3>,
    kernel: Kernel,
    /// Nodes and weights the convolution rules integrate over.
    source_nodes: Vec<Vec3>,
    source_weights: Vec<f64>,
    cells: Option<CellList>,
}

pub fn build_coefficient(
    rule: RuleTag,
    dom: &QuadratureDomain,
    kernel: &Kernel,
    aux: Option<&CoefficientAux>,
) -> Result<Coefficient> {
    let rule = match (rule, aux) {
        (RuleTag::Dirichlet, _) => CoefficientRule::Dirichlet,
        (RuleTag::Neumann, _) => CoefficientRule::Neumann,
        (RuleTag::Hole, Some(CoefficientAux::Hole(a))) => CoefficientRule::Hole(a.clone()),
        (RuleTag::Hole, _) => {
            return Err(Error::MissingAuxiliary {
                rule: "hole",
                what: "a quadrature of the hole",
            })
        }
        (RuleTag::Ambient, Some(CoefficientAux::Ambient(p))) => CoefficientRule::Ambient(p.clone()),
        (RuleTag::Ambient, _) => {
            return Err(Error::MissingAuxiliary {
                rule: "ambient",
                what: "an ambient function with a gradient",
            })
        }
    };
    Coefficient::new(rule, dom, kernel)
}

impl Coefficient {
    pub fn new(rule: CoefficientRule, dom: &QuadratureDomain, kernel: &Kernel) -> Result<Coefficient> {
        let (source_nodes, source_weights) = match &rule {
            CoefficientRule::Neumann => (dom.nodes.clone(), dom.weights.clone()),
            CoefficientRule::Hole(a) => {
                if a.ambient_dim != dom.ambient_dim {
                    return Err(Error::DimensionMismatch(format!(
                        "hole lives in R^{} but the domain in R^{}",
                        a.ambient_dim, dom.ambient_dim
                    )));
                }
                (a.nodes.clone(), a.weights.clone())
            }
            CoefficientRule::Nodal(v) if v.len() != dom.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "{} nodal coefficient values for {} nodes",
                    v.len(),
                    dom.len()
                )))
            }
            _ => (Vec::new(), Vec::new()),
        };
        let cells = (!source_nodes.is_empty()).then(|| CellList::new(&source_nodes, kernel.delta));
        let mut c = Coefficient {
            rule,
            values: Vec::new(),
            gradients: Vec::new(),
            kernel: kernel.clone(),
            source_nodes,
            source_weights,
            cells,
        };
        c.values = match &c.rule {
            CoefficientRule::Nodal(v) => v.clone(),
            _ => dom.nodes.par_iter().map(|x| c.value_at(x)).collect(),
        };
        c.gradients = dom.nodes.par_iter().map(|x| c.gradient_at(x)).collect();
        Ok(c)
    }

    fn convolve<F: Fn(&Vec3, &Vec3) -> T, T: std::ops::AddAssign + std::ops::Mul<f64, Output = T> + Default>(
        &self,
        x: &Vec3,
        f: F,
    ) -> T {
        let mut acc = T::default();
        if let Some(cells) = &self.cells {
            cells.for_each_candidate(x, |j| {
                let y = &self.source_nodes[j];
                if (x - y).norm() < self.kernel.delta {
                    acc += f(x, y) * self.source_weights[j];
                }
            });
        }
        acc
    }

    /// Evaluates the rule's coefficient at an arbitrary ambient point.
    /// Prescribed nodal data has no extension off the nodes and yields NaN.
    pub fn value_at(&self, x: &Vec3) -> f64 {
        match &self.rule {
            CoefficientRule::Dirichlet => 1.0,
            CoefficientRule::Constant(c) => *c,
            CoefficientRule::Neumann => self.convolve(x, |x, y| self.kernel.between(x, y)),
            CoefficientRule::Hole(_) => 1.0 - self.convolve(x, |x, y| self.kernel.between(x, y)),
            CoefficientRule::Ambient(p) => p.eval(x),
            CoefficientRule::Nodal(_) => f64::NAN,
        }
    }

    /// Ambient gradient `∇a(x)`.
    pub fn gradient_at(&self, x: &Vec3) -> Vec3 {
        match &self.rule {
            CoefficientRule::Neumann => self.convolve(x, |x, y| self.kernel.gradient_x(x, y)),
            CoefficientRule::Hole(_) => -self.convolve(x, |x, y| self.kernel.gradient_x(x, y)),
            CoefficientRule::Ambient(p) => p.gradient(x),
            _ => Vec3::zeros(),
        }
    }

    /// Nodal values of `D_t^T(h* a_{h(t,M)})|_{t=0}` for the flow generated by `field`.
    pub fn shape_derivative(&self, dom: &QuadratureDomain, field: &VectorField) -> Result<Vec<f64>> {
        let boundary_flux = |nodes: &[Vec3], weights: &[f64], normals: &[Vec3], sign: f64| -> Vec<f64> {
            let flux: Vec<f64> = nodes
                .iter()
                .zip(normals)
                .zip(weights)
                .map(|((s, nu), w)| sign * field.eval(s).dot(nu) * w)
                .collect();
            dom.nodes
                .par_iter()
                .map(|x| {
                    nodes
                        .iter()
                        .zip(&flux)
                        .map(|(s, f)| self.kernel.between(x, s) * f)
                        .sum()
                })
                .collect()
        };
        Ok(match &self.rule {
            CoefficientRule::Dirichlet | CoefficientRule::Constant(_) => vec![0.0; dom.len()],
            CoefficientRule::Neumann => {
                boundary_flux(&dom.boundary_nodes, &dom.boundary_weights, &dom.conormals, 1.0)
            }
            // a = 1 - J_A, and ∂A is traversed with the normal pointing into A,
            // i.e. out of the domain.
            CoefficientRule::Hole(a) => boundary_flux(&a.boundary_nodes, &a.boundary_weights, &a.conormals, 1.0)
                .into_iter()
                .map(|v| -v)
                .collect(),
            CoefficientRule::Ambient(p) => {
                let split = split_field(field, dom);
                dom.nodes
                    .iter()
                    .zip(&split.normal)
                    .map(|(x, vn)| p.gradient(x).dot(vn))
                    .collect()
            }
            CoefficientRule::Nodal(_) => {
                return Err(Error::InvalidParameter(
                    "prescribed nodal coefficients carry no shape-dependence rule".into(),
                ))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape, Monomial};
    use crate::kernels::{make_kernel, KernelFamily};
    use crate::quadrature;

    fn interval(res: usize) -> QuadratureDomain {
        build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, res).unwrap()
    }

    #[test]
    fn neumann_interval_against_one_dimensional_integral() {
        let k = make_kernel(KernelFamily::Tent, 0.25, 1).unwrap();
        let dom = interval(2000);
        let c = build_coefficient(RuleTag::Neumann, &dom, &k, None).unwrap();
        for x in [1.0 / 16.0, 0.2, 0.5, 0.97] {
            let exact = quadrature::integrate(|y| k.value((x - y).abs()), 0.0, 1.0, 400, 8);
            let got = c.value_at(&Vec3::new(x, 0.0, 0.0));
            assert!((got - exact).abs() < 1e-4, "x={x}: {got} vs {exact}");
        }
        // Closed form near the edge: 1/2 + ∫_0^x J for the tent.
        let x: f64 = 1.0 / 16.0;
        let closed = 0.5 + 4.0 * (x - 2.0 * x * x);
        assert!((c.value_at(&Vec3::new(x, 0.0, 0.0)) - closed).abs() < 1e-4);
    }

    #[test]
    fn neumann_and_hole_lie_in_unit_interval() {
        let k = make_kernel(KernelFamily::TruncatedGaussian, 0.4, 2).unwrap();
        let shape = DomainShape::Annulus {
            center: [0.0, 0.0],
            radius: 1.0,
            hole_center: [0.1, 0.0],
            hole_radius: 0.35,
        };
        let dom = build_domain(&shape, 24).unwrap();
        let hole = build_domain(
            &DomainShape::Disk {
                center: [0.1, 0.0],
                radius: 0.35,
            },
            24,
        )
        .unwrap();
        let aux = CoefficientAux::Hole(Arc::new(hole));
        for (tag, aux) in [(RuleTag::Neumann, None), (RuleTag::Hole, Some(&aux))] {
            let c = build_coefficient(tag, &dom, &k, aux).unwrap();
            // Quadrature of a normalized kernel overshoots 1 by at most its own error.
            let lo = c.values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = c.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo >= -1e-12 && hi <= 1.0 + 1e-2, "{tag:?}: [{lo}, {hi}]");
        }
    }

    #[test]
    fn missing_auxiliary_data_is_rejected() {
        let k = make_kernel(KernelFamily::Tent, 0.25, 1).unwrap();
        let dom = interval(8);
        assert!(matches!(
            build_coefficient(RuleTag::Hole, &dom, &k, None),
            Err(Error::MissingAuxiliary { .. })
        ));
        assert!(matches!(
            build_coefficient(RuleTag::Ambient, &dom, &k, None),
            Err(Error::MissingAuxiliary { .. })
        ));
        assert!("robin".parse::<RuleTag>().is_err());
    }

    #[test]
    fn nodal_gradient_matches_finite_differences() {
        let k = make_kernel(KernelFamily::TruncatedGaussian, 0.5, 2).unwrap();
        let dom = build_domain(
            &DomainShape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            40,
        )
        .unwrap();
        let c = build_coefficient(RuleTag::Neumann, &dom, &k, None).unwrap();
        let h = 1.0 / 40.0;
        for i in (0..dom.len()).step_by(37) {
            let x = dom.nodes[i];
            let mut fd = Vec3::zeros();
            for d in 0..2 {
                let mut e = Vec3::zeros();
                e[d] = h;
                fd[d] = (c.value_at(&(x + e)) - c.value_at(&(x - e))) / (2.0 * h);
            }
            assert!((fd - c.gradients[i]).norm() < 0.05, "node {i}: {fd:?} vs {:?}", c.gradients[i]);
        }
    }

    #[test]
    fn ambient_rule_ignores_tangential_fields() {
        let k = make_kernel(KernelFamily::Tent, 0.3, 1).unwrap();
        let dom = build_domain(
            &DomainShape::CylinderSlice {
                a: 0.0,
                b: 1.0,
                height: 0.5,
            },
            32,
        )
        .unwrap();
        let p = Polynomial {
            terms: vec![
                Monomial { coef: 1.0, powers: [0, 0, 0] },
                Monomial { coef: 0.5, powers: [2, 1, 0] },
            ],
        };
        let c = build_coefficient(RuleTag::Ambient, &dom, &k, Some(&CoefficientAux::Ambient(p))).unwrap();
        let tangential = VectorField::Translation { direction: [1.0, 0.0, 0.0] };
        assert!(c.shape_derivative(&dom, &tangential).unwrap().iter().all(|&v| v == 0.0));
        let normal = VectorField::Translation { direction: [0.0, 1.0, 0.0] };
        let d = c.shape_derivative(&dom, &normal).unwrap();
        for (x, v) in dom.nodes.iter().zip(&d) {
            assert!((v - 0.5 * x.x * x.x).abs() < 1e-14);
        }
    }

    /// Neumann shape derivative against a difference quotient of the
    /// one-dimensional integral over the stretched interval `(0, 1 + t)`.
    #[test]
    fn neumann_shape_derivative_on_interval() {
        let k = make_kernel(KernelFamily::Tent, 0.25, 1).unwrap();
        let dom = interval(200);
        let c = build_coefficient(RuleTag::Neumann, &dom, &k, None).unwrap();
        let field = VectorField::Dilation { center: [0.0, 0.0, 0.0] };
        let d = c.shape_derivative(&dom, &field).unwrap();
        let t = 1e-5;
        for i in [0, 50, 190, 199] {
            let x = dom.nodes[i].x;
            // h*a at x is a_{(0,1+t)}((1+t)x); D_t^T removes the tangential transport.
            let a = |t: f64| quadrature::integrate(|y| k.value(((1.0 + t) * x - y).abs()), 0.0, 1.0 + t, 400, 8);
            let ax = |y: f64| quadrature::integrate(|z| k.value((y - z).abs()), 0.0, 1.0, 400, 8);
            let transport = x * (ax(x + t) - ax(x - t)) / (2.0 * t);
            let fd = (a(t) - a(-t)) / (2.0 * t) - transport;
            assert!((fd - d[i]).abs() < 1e-3, "node {i}: {fd} vs {}", d[i]);
        }
    }
}
