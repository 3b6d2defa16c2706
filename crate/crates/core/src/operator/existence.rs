use crate::geometry::QuadratureDomain;
use crate::kernels::Coefficient;

/// Regularized values of `∫ dx / (a(x) - m + ε)` along a decreasing ladder
/// of `ε`, used as an advisory hint on whether a principal eigenvalue below
/// the band should be expected.
#[derive(Clone, Debug)]
pub struct ExistenceReport {
    pub m: f64,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    /// Smallest `ε` the grid can resolve.
    pub floor: f64,
    /// Whether the values keep growing as `ε` decreases.
    pub diverging: bool,
}

pub fn existence_diagnostic(coeff: &Coefficient, dom: &QuadratureDomain) -> ExistenceReport {
    let boundary = dom.boundary_nodes.iter().map(|s| coeff.value_at(s)).filter(|v| v.is_finite());
    let m = coeff.values.iter().cloned().chain(boundary).fold(f64::INFINITY, f64::min);
    let big_m = coeff.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if big_m - m > 1e-12 { big_m - m } else { 1.0 };
    let h = dom.max_weight().powf(1.0 / dom.intrinsic_dim as f64);
    let slope = coeff.gradients.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let floor = 2.0 * slope * h;

    let mut epsilons = Vec::new();
    let mut eps = 0.1 * scale;
    while epsilons.len() < 3 || (eps >= floor && epsilons.len() < 12) {
        epsilons.push(eps);
        eps /= 10f64.sqrt();
    }
    let values: Vec<f64> = epsilons
        .iter()
        .map(|e| {
            coeff
                .values
                .iter()
                .zip(&dom.weights)
                .map(|(a, w)| w / (a - m + e))
                .sum()
        })
        .collect();
    let k = values.len();
    let last = values[k - 1] - values[k - 2];
    let prev = values[k - 2] - values[k - 3];
    ExistenceReport {
        m,
        epsilons,
        values,
        floor,
        diverging: last >= 0.75 * prev,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape};
    use crate::kernels::{build_coefficient, make_kernel, CoefficientRule, KernelFamily, RuleTag};
    use crate::quadrature;

    #[test]
    fn constant_coefficient_diverges() {
        let dom = build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, 100).unwrap();
        let k = make_kernel(KernelFamily::Tent, 0.25, 1).unwrap();
        let c = build_coefficient(RuleTag::Dirichlet, &dom, &k, None).unwrap();
        let r = existence_diagnostic(&c, &dom);
        assert!(r.diverging);
        for (e, v) in r.epsilons.iter().zip(&r.values) {
            assert!((v - 1.0 / e).abs() < 1e-9 / e);
        }
    }

    /// `a(x) = x^2` on `(0, 1)`: `∫_0^1 dx / (x^2 + ε) = atan(1/√ε)/√ε`.
    #[test]
    fn quadratic_minimum_in_one_dimension() {
        let res = 4000;
        let dom = build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, res).unwrap();
        let k = make_kernel(KernelFamily::Tent, 0.25, 1).unwrap();
        let a: Vec<f64> = dom.nodes.iter().map(|x| x.x * x.x).collect();
        let c = Coefficient::new(CoefficientRule::Nodal(a), &dom, &k).unwrap();
        let r = existence_diagnostic(&c, &dom);
        for (e, v) in r.epsilons.iter().zip(&r.values).take(4) {
            let shift = e - r.m;
            let exact = (1.0 / shift.sqrt()).atan() / shift.sqrt();
            assert!((v - exact).abs() < 1e-3 * exact, "eps={e}: {v} vs {exact}");
        }
        assert!(r.diverging);
    }

    #[test]
    fn neumann_interval_against_fine_quadrature() {
        let dom = build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, 800).unwrap();
        let k = make_kernel(KernelFamily::Tent, 0.25, 1).unwrap();
        let c = build_coefficient(RuleTag::Neumann, &dom, &k, None).unwrap();
        let r = existence_diagnostic(&c, &dom);
        assert!(r.values.len() >= 3);
        assert!((r.m - 0.5).abs() < 1e-3);
        let a = |x: f64| quadrature::integrate(|y| k.value((x - y).abs()), 0.0, 1.0, 200, 8);
        for (e, v) in r.epsilons.iter().zip(&r.values).take(3) {
            let exact = quadrature::integrate(|x| 1.0 / (a(x) - r.m + e), 0.0, 1.0, 200, 4);
            assert!((v - exact).abs() < 2e-2 * exact, "eps={e}: {v} vs {exact}");
        }
    }
}
