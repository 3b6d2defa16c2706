//! Built-in scenarios and the end-to-end Hadamard pipeline run on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_domain, CurvatureConvention, DomainShape, Monomial, Polynomial, VectorField};
use crate::kernels::{make_kernel, CoefficientRule, KernelFamily};
use crate::operator::{apply_convolution, lowest_eigenpairs, EigenPair, Problem};
use crate::shape::{
    boundary_trace, fd_derivative, hadamard_derivative, FdEstimate, HadamardOptions, HadamardReport, NormalTermRule,
};

/// Serializable description of a coefficient rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RuleSpec {
    Dirichlet,
    Neumann,
    Constant { value: f64 },
    /// The removed set `A`, built at the domain's resolution.
    Hole { hole: DomainShape },
    Ambient { function: Polynomial },
}

impl RuleSpec {
    pub fn build(&self, resolution: usize) -> Result<CoefficientRule> {
        Ok(match self {
            RuleSpec::Dirichlet => CoefficientRule::Dirichlet,
            RuleSpec::Neumann => CoefficientRule::Neumann,
            RuleSpec::Constant { value } => CoefficientRule::Constant(*value),
            RuleSpec::Hole { hole } => CoefficientRule::Hole(Arc::new(build_domain(hole, resolution)?)),
            RuleSpec::Ambient { function } => CoefficientRule::Ambient(function.clone()),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RuleSpec::Dirichlet => "dirichlet",
            RuleSpec::Neumann => "neumann",
            RuleSpec::Constant { .. } => "constant",
            RuleSpec::Hole { .. } => "hole",
            RuleSpec::Ambient { .. } => "ambient",
        }
    }
}

/// Which eigenvalue a scenario follows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "select", rename_all = "kebab-case")]
pub enum EigenSelect {
    /// The `index`-th lowest (0 = principal).
    Index { index: usize },
    /// The lowest eigenvalue at position `>= from` that is well separated
    /// from its neighbours.
    FirstSimple { from: usize },
}

/// Closed-form specialization of the general formula available for a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Specialization {
    /// `-(1 - λ0) ∮ u0^2 V·N dS`.
    Dirichlet,
    /// `-∮ (a - λ0) u0^2 V·N dS + ∮ (J u0^2) V·N dS`.
    Neumann,
    /// Outer boundary term plus `∮_{∂A} (J u0^2) V·N dS`.
    Hole,
    /// `(n λ0 / R) ∫ u0^2 ⟨p, V^⊥⟩ dv`.
    Sphere,
    /// `-(1 - λ0) ∮ u0^2 V_{n+1} dS - (n (1 - λ0) / R) ∫ u0^2 ⟨p, V^⊥⟩ dv`.
    Hemisphere,
    /// Boundary and coefficient terms with `-2 ∫ u0^2 ⟨∇a, V^⊥⟩ dv`.
    Cylinder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedField {
    pub name: String,
    pub field: VectorField,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub shape: DomainShape,
    pub family: KernelFamily,
    pub delta: f64,
    pub rule: RuleSpec,
    pub eigen: EigenSelect,
    /// Reference resolution and one refinement step.
    pub resolution: usize,
    pub refined: usize,
    /// Resolutions for convergence sweeps.
    pub sweep: [usize; 3],
    pub fields: Vec<NamedField>,
    pub specialization: Specialization,
}

fn named(name: &str, field: VectorField) -> NamedField {
    NamedField {
        name: name.to_string(),
        field,
    }
}

fn translation(d: [f64; 3]) -> VectorField {
    VectorField::Translation { direction: d }
}

fn dilation(c: [f64; 3]) -> VectorField {
    VectorField::Dilation { center: c }
}

fn bump(center: [f64; 3], width: f64, direction: Option<[f64; 3]>) -> VectorField {
    VectorField::NormalBump { center, width, direction }
}

pub fn catalog() -> Vec<Scenario> {
    let disk = DomainShape::Disk {
        center: [0.0, 0.0],
        radius: 1.0,
    };
    let interval = DomainShape::Interval { a: 0.0, b: 1.0 };
    let interval_fields = vec![
        named("dilation", dilation([0.0; 3])),
        named("normal-bump", bump([1.0, 0.0, 0.0], 0.3, Some([1.0, 0.0, 0.0]))),
        named("translation", translation([1.0, 0.0, 0.0])),
    ];
    let disk_fields = vec![
        named("dilation", dilation([0.1, 0.05, 0.0])),
        named("normal-bump", bump([1.0, 0.0, 0.0], 0.5, None)),
        named("translation", translation([1.0, 0.5, 0.0])),
    ];
    vec![
        Scenario {
            name: "dirichlet-interval",
            description: "interval (0,1), a = 1 (nonlocal Dirichlet problem)",
            shape: interval.clone(),
            family: KernelFamily::Tent,
            delta: 0.25,
            rule: RuleSpec::Dirichlet,
            eigen: EigenSelect::Index { index: 0 },
            resolution: 400,
            refined: 800,
            sweep: [100, 200, 400],
            fields: interval_fields.clone(),
            specialization: Specialization::Dirichlet,
        },
        Scenario {
            name: "dirichlet-disk",
            description: "unit disk, a = 1 (nonlocal Dirichlet problem)",
            shape: disk.clone(),
            family: KernelFamily::TruncatedGaussian,
            delta: 0.5,
            rule: RuleSpec::Dirichlet,
            eigen: EigenSelect::Index { index: 0 },
            resolution: 62,
            refined: 86,
            sweep: [16, 32, 64],
            fields: disk_fields.clone(),
            specialization: Specialization::Dirichlet,
        },
        Scenario {
            name: "neumann-interval",
            description: "interval (0,1), a = ∫_Ω J (nonlocal Neumann problem), second eigenvalue",
            shape: interval,
            family: KernelFamily::TruncatedGaussian,
            delta: 0.25,
            rule: RuleSpec::Neumann,
            eigen: EigenSelect::Index { index: 1 },
            resolution: 400,
            refined: 800,
            sweep: [100, 200, 400],
            fields: interval_fields,
            specialization: Specialization::Neumann,
        },
        Scenario {
            name: "neumann-disk",
            description: "unit disk, a = ∫_Ω J (nonlocal Neumann problem), first simple nonzero eigenvalue",
            shape: disk,
            family: KernelFamily::TruncatedGaussian,
            delta: 0.5,
            rule: RuleSpec::Neumann,
            eigen: EigenSelect::FirstSimple { from: 1 },
            resolution: 62,
            refined: 86,
            sweep: [16, 32, 64],
            fields: disk_fields.clone(),
            specialization: Specialization::Neumann,
        },
        Scenario {
            name: "hole-annulus",
            description: "unit disk minus a concentric disk A, a = ∫_{R^2 \\ A} J (mixed Dirichlet/Neumann problem)",
            shape: DomainShape::Annulus {
                center: [0.0, 0.0],
                radius: 1.0,
                hole_center: [0.0, 0.0],
                hole_radius: 0.4,
            },
            family: KernelFamily::TruncatedGaussian,
            delta: 0.5,
            rule: RuleSpec::Hole {
                hole: DomainShape::Disk {
                    center: [0.0, 0.0],
                    radius: 0.4,
                },
            },
            eigen: EigenSelect::Index { index: 0 },
            resolution: 68,
            refined: 94,
            sweep: [16, 32, 64],
            fields: vec![
                named("dilation", dilation([0.1, 0.05, 0.0])),
                named("normal-bump", bump([0.0, 0.4, 0.0], 0.3, Some([0.0, 1.0, 0.0]))),
                named("translation", translation([1.0, 0.5, 0.0])),
            ],
            specialization: Specialization::Hole,
        },
        Scenario {
            name: "sphere",
            description: "unit two-sphere in R^3, a = 0 (pure convolution operator)",
            shape: DomainShape::Sphere { radius: 1.0 },
            family: KernelFamily::TruncatedGaussian,
            delta: 0.8,
            rule: RuleSpec::Constant { value: 0.0 },
            eigen: EigenSelect::Index { index: 0 },
            resolution: 24,
            refined: 34,
            sweep: [8, 16, 32],
            fields: vec![
                named("normal-bump", bump([0.0, 0.0, 1.0], 0.7, None)),
                named("dilation", dilation([0.0; 3])),
            ],
            specialization: Specialization::Sphere,
        },
        Scenario {
            name: "hemisphere",
            description: "upper unit hemisphere in R^3, a = 1 (Dirichlet problem on a manifold with boundary)",
            shape: DomainShape::Hemisphere { radius: 1.0 },
            family: KernelFamily::TruncatedGaussian,
            delta: 0.6,
            rule: RuleSpec::Dirichlet,
            eigen: EigenSelect::Index { index: 0 },
            resolution: 16,
            refined: 22,
            sweep: [8, 16, 32],
            fields: vec![
                named("dilation", dilation([0.0; 3])),
                named("normal-bump", bump([0.0, 0.0, 1.0], 0.8, None)),
            ],
            specialization: Specialization::Hemisphere,
        },
        Scenario {
            name: "cylinder",
            description: "slice (0,1) x {1/2} of the strip (0,1) x [0,1], ambient a = 1 + y/2 + x^2 y/2 from a one-parameter family",
            shape: DomainShape::CylinderSlice {
                a: 0.0,
                b: 1.0,
                height: 0.5,
            },
            family: KernelFamily::Tent,
            delta: 0.25,
            rule: RuleSpec::Ambient {
                function: Polynomial {
                    terms: vec![
                        Monomial { coef: 1.0, powers: [0, 0, 0] },
                        Monomial { coef: 0.5, powers: [0, 1, 0] },
                        Monomial { coef: 0.5, powers: [2, 1, 0] },
                    ],
                },
            },
            eigen: EigenSelect::Index { index: 0 },
            resolution: 400,
            refined: 800,
            sweep: [100, 200, 400],
            fields: vec![
                named("translation", translation([0.0, 1.0, 0.0])),
                named("normal-bump", bump([0.5, 0.5, 0.0], 0.3, Some([0.0, 1.0, 0.0]))),
            ],
            specialization: Specialization::Cylinder,
        },
    ]
}

pub fn find(name: &str) -> Result<Scenario> {
    catalog().into_iter().find(|s| s.name == name).ok_or_else(|| Error::Unknown {
        kind: "scenario",
        name: name.to_string(),
    })
}

impl Scenario {
    pub fn is_euclidean(&self) -> bool {
        !matches!(
            self.shape,
            DomainShape::Sphere { .. }
                | DomainShape::Hemisphere { .. }
                | DomainShape::CylinderSlice { .. }
                | DomainShape::Circle { .. }
        )
    }

    pub fn problem(&self, resolution: usize) -> Result<Problem> {
        let dom = build_domain(&self.shape, resolution)?;
        let kernel = make_kernel(self.family, self.delta, dom.intrinsic_dim)?;
        Ok(Problem::new(dom, kernel, self.rule.build(resolution)?))
    }

    pub fn field(&self, name: &str) -> Result<&NamedField> {
        self.fields.iter().find(|f| f.name == name).ok_or_else(|| Error::Unknown {
            kind: "vector field",
            name: name.to_string(),
        })
    }

    /// Conventions evaluated for this scenario. On manifolds every candidate
    /// reading of the normal and curvature terms is reported.
    pub fn conventions(&self) -> Vec<HadamardOptions> {
        if self.is_euclidean() {
            return vec![HadamardOptions::default()];
        }
        let mut out = vec![HadamardOptions {
            normal_rule: NormalTermRule::Kernel,
            curvature: CurvatureConvention::Dimensional,
        }];
        for curvature in [CurvatureConvention::Dimensional, CurvatureConvention::Unit] {
            for normal_rule in [
                NormalTermRule::CoefficientGradient { factor: 1.0 },
                NormalTermRule::CoefficientGradient { factor: 2.0 },
                NormalTermRule::Kernel,
            ] {
                let o = HadamardOptions { normal_rule, curvature };
                if !out.contains(&o) {
                    out.push(o);
                }
            }
        }
        out
    }

    /// Convention used for tables that carry a single formula value.
    pub fn preferred(&self) -> HadamardOptions {
        self.conventions()[0]
    }
}

/// Chooses the followed eigenpair and its position among the lowest ones.
pub fn select_eigenpair(problem: &Problem, select: EigenSelect) -> Result<(usize, EigenPair)> {
    let (_, op) = problem.assemble()?;
    match select {
        EigenSelect::Index { index } => {
            let pairs = lowest_eigenpairs(&op, index + 1)?;
            let p = pairs.into_iter().nth(index).ok_or(Error::NoPrincipalEigenvalue {
                m: op.m,
                big_m: op.big_m,
            })?;
            Ok((index, p))
        }
        EigenSelect::FirstSimple { from } => {
            let count = from + 6;
            let pairs = lowest_eigenpairs(&op, count)?;
            pairs
                .into_iter()
                .enumerate()
                .skip(from)
                .take(count - from - 1)
                .find(|(_, p)| p.gap > 1e-3 * p.value.abs().max(1e-3))
                .ok_or(Error::NotSimple {
                    value: f64::NAN,
                    gap: 0.0,
                    tol: 1e-3,
                })
        }
    }
}

/// Everything computed for one scenario, field and resolution.
#[derive(Clone, Debug)]
pub struct ScenarioHadamard {
    pub scenario: &'static str,
    pub field: String,
    pub resolution: usize,
    pub eigen_index: usize,
    pub lambda0: f64,
    /// One report per convention, preferred first.
    pub reports: Vec<HadamardReport>,
    /// Scenario-specific closed form evaluated on the same quadrature.
    pub specialized: f64,
    pub fd: Option<FdEstimate>,
}

impl ScenarioHadamard {
    /// Convention whose formula is closest to the FD oracle.
    pub fn best_convention(&self) -> Option<&HadamardReport> {
        let fd = self.fd.as_ref()?.value;
        self.reports
            .iter()
            .min_by(|a, b| (a.formula - fd).abs().total_cmp(&(b.formula - fd).abs()))
    }
}

/// Runs build, assembly, eigensolve, formula (all conventions), the
/// specialized closed form and, when `steps` is non-empty, the FD oracle.
pub fn scenario_hadamard(sc: &Scenario, field: &NamedField, resolution: usize, steps: &[f64]) -> Result<ScenarioHadamard> {
    let problem = sc.problem(resolution)?;
    let (coeff, op) = problem.assemble()?;
    let (index, pair) = select_eigenpair(&problem, sc.eigen)?;
    let v = &field.field;
    let reports = sc
        .conventions()
        .into_iter()
        .map(|o| hadamard_derivative(&problem, &coeff, &op, &pair, v, o))
        .collect::<Result<Vec<_>>>()?;

    let dom = &problem.domain;
    let u = &pair.vector;
    let lambda = pair.value;
    let trace = boundary_trace(&op, &coeff, &problem, &pair)?;
    let boundary_sum = |f: &dyn Fn(usize) -> f64| -> f64 { (0..dom.boundary_nodes.len()).map(f).sum() };
    let vn = |k: usize| v.eval(&dom.boundary_nodes[k]).dot(&dom.conormals[k]);
    let outer = |k: usize| -(coeff.value_at(&dom.boundary_nodes[k]) - lambda) * trace[k] * trace[k] * vn(k) * dom.boundary_weights[k];
    let u2: Vec<f64> = u.iter().map(|x| x * x).collect();
    let normal_dot_p = |i: usize| {
        let x = dom.nodes[i];
        let p = dom.tangent_projectors[i];
        let vv = v.eval(&x);
        x.dot(&(vv - p * vv))
    };
    let radius = match sc.shape {
        DomainShape::Sphere { radius } | DomainShape::Hemisphere { radius } => radius,
        _ => 1.0,
    };
    let n = dom.intrinsic_dim as f64;
    let specialized = match sc.specialization {
        Specialization::Dirichlet => boundary_sum(&|k| -(1.0 - lambda) * trace[k] * trace[k] * vn(k) * dom.boundary_weights[k]),
        Specialization::Neumann => {
            let ju2 = apply_convolution(&op, &u2, &dom.boundary_nodes);
            boundary_sum(&|k| outer(k) + ju2[k] * vn(k) * dom.boundary_weights[k])
        }
        Specialization::Hole => {
            let hole = match &problem.rule {
                CoefficientRule::Hole(a) => a.clone(),
                _ => unreachable!("hole specialization requires the hole rule"),
            };
            let ju2 = apply_convolution(&op, &u2, &hole.boundary_nodes);
            // N on ∂A points out of the domain, i.e. into A.
            let inner: f64 = (0..hole.boundary_nodes.len())
                .map(|k| -ju2[k] * v.eval(&hole.boundary_nodes[k]).dot(&hole.conormals[k]) * hole.boundary_weights[k])
                .sum();
            boundary_sum(&outer) + inner
        }
        Specialization::Sphere => {
            n * lambda / radius * (0..dom.len()).map(|i| u2[i] * normal_dot_p(i) * dom.weights[i]).sum::<f64>()
        }
        Specialization::Hemisphere => {
            // On the equator the conormal is taken as e_{n+1}.
            let edge = boundary_sum(&|k| -(1.0 - lambda) * trace[k] * trace[k] * v.eval(&dom.boundary_nodes[k]).z * dom.boundary_weights[k]);
            edge - n * (1.0 - lambda) / radius * (0..dom.len()).map(|i| u2[i] * normal_dot_p(i) * dom.weights[i]).sum::<f64>()
        }
        Specialization::Cylinder => {
            let split = crate::geometry::split_field(v, dom);
            let dta = coeff.shape_derivative(dom, v)?;
            boundary_sum(&outer)
                + (0..dom.len())
                    .map(|i| (u2[i] * dta[i] - 2.0 * u2[i] * coeff.gradients[i].dot(&split.normal[i])) * dom.weights[i])
                    .sum::<f64>()
        }
    };

    let fd = if steps.is_empty() {
        None
    } else {
        Some(fd_derivative(&problem, v, &pair, index, steps)?)
    };
    let reports = reports
        .into_iter()
        .map(|mut r| {
            r.fd = fd.clone();
            r
        })
        .collect();
    Ok(ScenarioHadamard {
        scenario: sc.name,
        field: field.name.clone(),
        resolution,
        eigen_index: index,
        lambda0: lambda,
        reports,
        specialized,
        fd,
    })
}
