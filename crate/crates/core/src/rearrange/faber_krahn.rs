use std::sync::Arc;

use super::{rearrange_onto, star_domain, Direction, NodalFunction};
use crate::error::{Error, Result};
use crate::geometry::QuadratureDomain;
use crate::kernels::{Coefficient, CoefficientRule, Kernel};
use crate::operator::{assemble, existence_diagnostic, principal_eigenpair, spectrum, ExistenceReport};
use crate::scenarios::Scenario;

/// `λ1(Ω)` against `λ1*(Ω*)`, the principal eigenvalue of the symmetrized
/// operator `a_* u - ∫_{Ω*} J u` on the ball of the same measure.
#[derive(Clone, Debug)]
pub struct FaberKrahnReport {
    pub lambda_omega: Option<f64>,
    pub lambda_star: Option<f64>,
    /// `λ1(Ω) - λ1*(Ω*)` when both principal eigenvalues exist.
    pub margin: Option<f64>,
    /// Principal eigenvalue on `Ω*` with the coefficient rule of `Ω` rebuilt
    /// on the ball (`a_{Ω*}` instead of `a_*`), when the rule allows it.
    pub lambda_ball_rule: Option<f64>,
    pub nodes_omega: usize,
    pub nodes_star: usize,
    pub existence_omega: ExistenceReport,
    pub existence_star: ExistenceReport,
}

impl FaberKrahnReport {
    pub fn conclusive(&self) -> bool {
        self.margin.is_some()
    }
}

fn principal(dom: &QuadratureDomain, kernel: &Kernel, coeff: &Coefficient) -> Result<Option<f64>> {
    let op = assemble(dom, kernel, coeff)?;
    let rep = spectrum(&op)?;
    Ok(principal_eigenpair(&rep).ok().map(|p| p.value))
}

pub fn faber_krahn_compare(dom: &QuadratureDomain, kernel: &Kernel, coeff: &Coefficient) -> Result<FaberKrahnReport> {
    if dom.curvature_vectors.iter().any(|h| h.norm() > 0.0) {
        return Err(Error::InvalidDomain("the comparison needs a flat domain".into()));
    }
    if let Some(v) = coeff.values.iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidParameter(format!("coefficient must be nonnegative (found {v})")));
    }
    let star = star_domain(dom)?;
    let a = NodalFunction::new(Arc::new(dom.clone()), coeff.values.clone())?;
    let a_star = rearrange_onto(&a, star.clone(), Direction::Increasing);
    let coeff_star = Coefficient::new(CoefficientRule::Nodal(a_star.values), &star, kernel)?;

    let lambda_omega = principal(dom, kernel, coeff)?;
    let lambda_star = principal(&star, kernel, &coeff_star)?;
    let lambda_ball_rule = match &coeff.rule {
        CoefficientRule::Hole(_) | CoefficientRule::Nodal(_) => None,
        rule => {
            let c = Coefficient::new(rule.clone(), &star, kernel)?;
            principal(&star, kernel, &c)?
        }
    };
    Ok(FaberKrahnReport {
        lambda_omega,
        lambda_star,
        margin: lambda_omega.zip(lambda_star).map(|(l, s)| l - s),
        lambda_ball_rule,
        nodes_omega: dom.len(),
        nodes_star: star.len(),
        existence_omega: existence_diagnostic(coeff, dom),
        existence_star: existence_diagnostic(&coeff_star, &star),
    })
}

/// Faber–Krahn comparison of a built-in scenario at two resolutions.
#[derive(Clone, Debug)]
pub struct ScenarioFaberKrahn {
    pub scenario: String,
    pub resolution: usize,
    pub coarse: FaberKrahnReport,
    pub fine: FaberKrahnReport,
    /// Assertion tolerance: the change of `λ1(Ω)` and `λ1*(Ω*)` under one
    /// refinement step, since discretization error can flip the sign of a
    /// small continuum margin.
    pub tol_spec: f64,
}

impl ScenarioFaberKrahn {
    pub fn margin(&self) -> Option<f64> {
        self.coarse.margin
    }

    /// `None` when inconclusive.
    pub fn passed(&self) -> Option<bool> {
        self.coarse.margin.map(|m| m >= -self.tol_spec)
    }
}

pub fn faber_krahn_scenario(sc: &Scenario, resolution: usize, refined: usize) -> Result<ScenarioFaberKrahn> {
    let run = |res: usize| -> Result<FaberKrahnReport> {
        let problem = sc.problem(res)?;
        let coeff = problem.coefficient()?;
        faber_krahn_compare(&problem.domain, &problem.kernel, &coeff)
    };
    let coarse = run(resolution)?;
    let fine = run(refined)?;
    let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map_or(f64::INFINITY, |(a, b)| (a - b).abs());
    let tol_spec = diff(coarse.lambda_omega, fine.lambda_omega) + diff(coarse.lambda_star, fine.lambda_star);
    Ok(ScenarioFaberKrahn {
        scenario: sc.name.to_string(),
        resolution,
        coarse,
        fine,
        tol_spec,
    })
}
