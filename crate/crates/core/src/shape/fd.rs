use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::VectorField;
use crate::operator::{lowest_eigenpairs, EigenPair, Problem};

/// Default step ladder, halving from `1e-2`.
pub const DEFAULT_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Overlaps closer than this fraction of the best one make tracking ambiguous.
const AMBIGUITY: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct FdRow {
    pub t: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `(λ(t) - λ(-t)) / 2t`.
    pub central: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdEstimate {
    /// Richardson-extrapolated derivative.
    pub value: f64,
    pub rows: Vec<FdRow>,
    /// Successive extrapolation levels; the last entry is `value`.
    pub richardson: Vec<Vec<f64>>,
}

/// Tracks the branch through `base` (the `index`-th lowest eigenpair of the
/// undeformed problem) on the deformed problem at time `t`.
fn tracked_eigenvalue(problem: &Problem, field: &VectorField, base: &EigenPair, index: usize, t: f64) -> Result<f64> {
    let deformed = problem.deformed(field, t);
    let (_, op) = deformed.assemble()?;
    let pairs = lowest_eigenpairs(&op, index + 2)?;
    // Eigenvectors are compared through node identification, in the
    // reference weights.
    let w = &problem.domain.weights;
    let overlaps: Vec<f64> = pairs
        .iter()
        .map(|p| p.vector.iter().zip(&base.vector).zip(w).map(|((a, b), w)| a * b * w).sum::<f64>().abs())
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| overlaps[b].total_cmp(&overlaps[a]));
    let (best, second) = (overlaps[order[0]], order.get(1).map_or(0.0, |&i| overlaps[i]));
    if second >= (1.0 - AMBIGUITY) * best {
        return Err(Error::AmbiguousBranch { t, first: best, second });
    }
    if order[0] != index {
        return Err(Error::EigenvalueCrossing { t });
    }
    Ok(pairs[order[0]].value)
}

/// Richardson table for central differences, whose error expansion is even
/// in `t`.
fn richardson(steps: &[f64], central: Vec<f64>) -> Vec<Vec<f64>> {
    let mut levels = vec![central];
    let mut power = 2;
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let offset = steps.len() - prev.len();
        let next: Vec<f64> = (0..prev.len() - 1)
            .map(|k| {
                let q = (steps[offset + k] / steps[offset + k + 1]).powi(power);
                (q * prev[k + 1] - prev[k]) / (q - 1.0)
            })
            .collect();
        levels.push(next);
        power += 2;
    }
    levels
}

/// Central differences of the tracked eigenvalue over a step ladder, with
/// Richardson extrapolation.
pub fn fd_derivative(problem: &Problem, field: &VectorField, base: &EigenPair, index: usize, steps: &[f64]) -> Result<FdEstimate> {
    if steps.is_empty() || steps.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("finite-difference steps must be positive".into()));
    }
    let signed: Vec<f64> = steps.iter().flat_map(|&t| [t, -t]).collect();
    let values: Vec<f64> = signed
        .par_iter()
        .map(|&t| tracked_eigenvalue(problem, field, base, index, t))
        .collect::<Result<_>>()?;
    let rows: Vec<FdRow> = steps
        .iter()
        .enumerate()
        .map(|(k, &t)| FdRow {
            t,
            lambda_plus: values[2 * k],
            lambda_minus: values[2 * k + 1],
            central: (values[2 * k] - values[2 * k + 1]) / (2.0 * t),
        })
        .collect();

    let levels = richardson(steps, rows.iter().map(|r| r.central).collect());
    let value = levels.last().unwrap()[0];
    Ok(FdEstimate {
        value,
        rows,
        richardson: levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape};
    use crate::kernels::{make_kernel, CoefficientRule, KernelFamily};
    use crate::operator::{principal_eigenpair, spectrum};
    use crate::shape::{hadamard_derivative, HadamardOptions};

    fn interval(rule: CoefficientRule, res: usize) -> Problem {
        let dom = build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, res).unwrap();
        Problem::new(dom, make_kernel(KernelFamily::Tent, 0.25, 1).unwrap(), rule)
    }

    #[test]
    fn null_field_gives_exact_zero() {
        let p = interval(CoefficientRule::Dirichlet, 100);
        let (_, op) = p.assemble().unwrap();
        let base = principal_eigenpair(&spectrum(&op).unwrap()).unwrap();
        let fd = fd_derivative(&p, &VectorField::Zero, &base, 0, &DEFAULT_STEPS).unwrap();
        assert_eq!(fd.value, 0.0);
        assert!(fd.rows.iter().all(|r| r.lambda_plus == base.value && r.lambda_minus == base.value));
    }

    #[test]
    fn neumann_principal_stays_at_zero() {
        let p = interval(CoefficientRule::Neumann, 100);
        let (_, op) = p.assemble().unwrap();
        let base = principal_eigenpair(&spectrum(&op).unwrap()).unwrap();
        let field = VectorField::Dilation { center: [0.3, 0.0, 0.0] };
        let fd = fd_derivative(&p, &field, &base, 0, &DEFAULT_STEPS).unwrap();
        assert!(fd.value.abs() < 1e-8);
    }

    #[test]
    fn richardson_is_exact_for_even_polynomials() {
        // The derivative of c t + d t^3 + e t^5 is recovered exactly by two levels.
        let steps = [0.1, 0.05, 0.025];
        let lam = |t: f64| 2.0 * t + 3.0 * t.powi(3) - 7.0 * t.powi(5);
        let central: Vec<f64> = steps.iter().map(|&t| (lam(t) - lam(-t)) / (2.0 * t)).collect();
        let levels = richardson(&steps, central);
        assert_eq!(levels.len(), 3);
        assert!((levels[2][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_interval_dilation_matches_formula() {
        let p = interval(CoefficientRule::Dirichlet, 400);
        let (c, op) = p.assemble().unwrap();
        let base = principal_eigenpair(&spectrum(&op).unwrap()).unwrap();
        let field = VectorField::Dilation { center: [0.0; 3] };
        let fd = fd_derivative(&p, &field, &base, 0, &DEFAULT_STEPS).unwrap();
        let h = hadamard_derivative(&p, &c, &op, &base, &field, HadamardOptions::default()).unwrap();
        let rel = (h.formula - fd.value).abs() / fd.value.abs();
        assert!(rel < 0.01, "formula {} vs fd {}", h.formula, fd.value);
    }
}
