use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, QuadratureDomain, Vec3, VectorField};
use crate::kernels::{CellList, CoefficientRule};
use crate::operator::{spectrum, NonlocalOperator, Problem};

/// Explicit embeddings `h: M → N` for the pullback comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Embedding {
    Identity,
    /// `x ↦ s x`.
    Scale { factor: f64 },
    /// `x ↦ L x + b`.
    Affine { matrix: [[f64; 3]; 3], shift: [f64; 3] },
    /// `x ↦ x + t V(x)`.
    Flow { field: VectorField, t: f64 },
}

impl Embedding {
    pub fn map(&self, x: &Vec3) -> (Vec3, Mat3) {
        match self {
            Embedding::Identity => (*x, Mat3::identity()),
            Embedding::Scale { factor } => (x * *factor, Mat3::identity() * *factor),
            Embedding::Affine { matrix, shift } => {
                let l = Matrix3::from_fn(|r, c| matrix[r][c]);
                (l * x + Vec3::from(*shift), l)
            }
            Embedding::Flow { field, t } => (x + field.eval(x) * *t, Mat3::identity() + field.jacobian(x) * *t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PullbackReport {
    /// Discrete eigenvalues of the operator assembled on `h(M)`.
    pub direct: Vec<f64>,
    /// Discrete eigenvalues of the pulled-back operator on `M`.
    pub pullback: Vec<f64>,
    /// Hausdorff distance between the two lists.
    pub distance: f64,
    pub band_direct: (f64, f64),
    pub band_pullback: (f64, f64),
}

impl PullbackReport {
    pub fn bands_equal(&self) -> bool {
        self.band_direct == self.band_pullback
    }
}

fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one_sided = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => one_sided(a, b).max(one_sided(b, a)),
    }
}

fn min_separation(points: &[Vec3], radius: f64) -> f64 {
    let cells = CellList::new(points, radius);
    let mut best = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        cells.for_each_candidate(p, |j| {
            if j != i {
                best = best.min((points[j] - p).norm());
            }
        });
    }
    best
}

/// Compares the operator assembled directly on `h(M)` with the pullback
/// operator on `M` built from `J(|h(x) - h(y)|)`, the pulled-back volume
/// element and `a_{h(M)} ∘ h`.
///
/// When `image` is given it is used as the independently built quadrature of
/// `h(M)`; otherwise the reference quadrature is pushed through `h`.
pub fn pullback_check(h: &Embedding, problem: &Problem, image: Option<&QuadratureDomain>) -> Result<PullbackReport> {
    let dom = &problem.domain;
    let moved: Vec<(Vec3, Mat3)> = dom.nodes.iter().map(|x| h.map(x)).collect();
    let points: Vec<Vec3> = moved.iter().map(|m| m.0).collect();
    let sep = min_separation(&points, problem.kernel.delta);
    if !(sep > 1e-9) {
        return Err(Error::NotInjective { separation: sep });
    }

    let direct_problem = match image {
        Some(img) => Problem::new(img.clone(), problem.kernel.clone(), problem.rule.pushed(|x| h.map(x))),
        None => Problem {
            domain: std::sync::Arc::new(dom.pushed(|x| h.map(x))),
            kernel: problem.kernel.clone(),
            rule: problem.rule.pushed(|x| h.map(x)),
        },
    };
    let (direct_coeff, direct_op) = direct_problem.assemble()?;

    // Pulled-back volume element: Gram determinant of Dh on the tangent frame.
    let n = dom.intrinsic_dim;
    let weights: Vec<f64> = (0..dom.len())
        .map(|i| {
            let pushed = moved[i].1 * dom.tangent_frames[i];
            let gram = pushed.columns(0, n).transpose() * pushed.columns(0, n);
            dom.weights[i] * gram.determinant().sqrt()
        })
        .collect();
    let a: Vec<f64> = match &problem.rule {
        CoefficientRule::Nodal(v) => v.clone(),
        _ if image.is_none() => direct_coeff.values.clone(),
        _ => points.iter().map(|y| direct_coeff.value_at(y)).collect(),
    };
    let pull_op = NonlocalOperator::from_parts(points, weights, a, problem.kernel.clone(), dom.resolution);

    let direct = spectrum(&direct_op)?;
    let pullback = spectrum(&pull_op)?;
    let dv: Vec<f64> = direct.discrete.iter().map(|p| p.value).collect();
    let pv: Vec<f64> = pullback.discrete.iter().map(|p| p.value).collect();
    Ok(PullbackReport {
        distance: hausdorff(&dv, &pv),
        direct: dv,
        pullback: pv,
        band_direct: direct.band,
        band_pullback: pullback.band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape};
    use crate::kernels::{make_kernel, KernelFamily};

    fn interval_problem(rule: CoefficientRule) -> Problem {
        let dom = build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, 100).unwrap();
        Problem::new(dom, make_kernel(KernelFamily::Tent, 0.3, 1).unwrap(), rule)
    }

    #[test]
    fn identity_is_exact() {
        let p = interval_problem(CoefficientRule::Neumann);
        let r = pullback_check(&Embedding::Identity, &p, None).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.bands_equal());
    }

    #[test]
    fn scaling_against_independent_image() {
        let p = interval_problem(CoefficientRule::Dirichlet);
        let image = build_domain(&DomainShape::Interval { a: 0.0, b: 2.0 }, 100).unwrap();
        let r = pullback_check(&Embedding::Scale { factor: 2.0 }, &p, Some(&image)).unwrap();
        assert!(!r.direct.is_empty());
        assert!(r.distance < 1e-10, "{}", r.distance);
        assert!(r.bands_equal());
    }

    #[test]
    fn band_equality_under_a_nonlinear_flow() {
        let p = interval_problem(CoefficientRule::Neumann);
        let h = Embedding::Flow {
            field: VectorField::NormalBump { center: [0.6, 0.0, 0.0], width: 0.3, direction: Some([1.0, 0.0, 0.0]) },
            t: 0.1,
        };
        let r = pullback_check(&h, &p, None).unwrap();
        assert!(r.bands_equal());
        assert!(r.distance < 1e-10);
    }

    #[test]
    fn collapsing_map_is_rejected() {
        let p = interval_problem(CoefficientRule::Dirichlet);
        assert!(matches!(
            pullback_check(&Embedding::Scale { factor: 0.0 }, &p, None),
            Err(Error::NotInjective { .. })
        ));
    }
}
