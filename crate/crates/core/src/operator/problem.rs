use std::sync::Arc;

use super::{assemble, NonlocalOperator};
use crate::error::Result;
use crate::geometry::{Mat3, QuadratureDomain, Vec3, VectorField};
use crate::kernels::{Coefficient, CoefficientRule, Kernel};

/// A domain together with the kernel and the rule defining `a_M` on it.
#[derive(Clone, Debug)]
pub struct Problem {
    pub domain: Arc<QuadratureDomain>,
    pub kernel: Kernel,
    pub rule: CoefficientRule,
}

impl Problem {
    pub fn new(domain: QuadratureDomain, kernel: Kernel, rule: CoefficientRule) -> Self {
        Problem {
            domain: Arc::new(domain),
            kernel,
            rule,
        }
    }

    pub fn coefficient(&self) -> Result<Coefficient> {
        Coefficient::new(self.rule.clone(), &self.domain, &self.kernel)
    }

    pub fn assemble(&self) -> Result<(Coefficient, NonlocalOperator)> {
        let c = self.coefficient()?;
        let op = assemble(&self.domain, &self.kernel, &c)?;
        Ok((c, op))
    }

    /// The problem on `h(t, M)` for the flow `h(t, x) = x + t V(x)`; the
    /// coefficient is rebuilt from its rule on the moved geometry.
    pub fn deformed(&self, field: &VectorField, t: f64) -> Problem {
        let map = |x: &Vec3| (x + field.eval(x) * t, Mat3::identity() + field.jacobian(x) * t);
        Problem {
            domain: Arc::new(self.domain.pushed(map)),
            kernel: self.kernel.clone(),
            rule: self.rule.pushed(map),
        }
    }
}
