//! Admissible radial kernels `J(|x - y|)` and the coefficient `a_M`.

mod coefficient;
mod neighbors;

pub use coefficient::{build_coefficient, Coefficient, CoefficientAux, CoefficientRule, RuleTag};
pub use neighbors::CellList;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `1 - r/δ`.
    Tent,
    /// Gaussian with `σ = δ/3` times the taper `(1 - r²/δ²)^3`, which makes
    /// it twice continuously differentiable across `r = δ`.
    TruncatedGaussian,
    /// Indicator of the ball of radius `δ`, smoothed by a quintic step of
    /// width `δ/20` just inside `r = δ`.
    MollifiedIndicator,
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tent" => Ok(KernelFamily::Tent),
            "truncated-gaussian" => Ok(KernelFamily::TruncatedGaussian),
            "mollified-indicator" | "ball-indicator-mollified" => Ok(KernelFamily::MollifiedIndicator),
            _ => Err(Error::Unknown {
                kind: "kernel family",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Tent => "tent",
            KernelFamily::TruncatedGaussian => "truncated-gaussian",
            KernelFamily::MollifiedIndicator => "mollified-indicator",
        })
    }
}

/// Radial kernel normalized so that `∫_{R^n} J(|z|) dz = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub delta: f64,
    pub dim: usize,
    pub normalization: f64,
}

/// Surface measure of the unit sphere `S^{n-1}`.
fn unit_sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by make_kernel"),
    }
}

pub fn make_kernel(family: KernelFamily, delta: f64, n: usize) -> Result<Kernel> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("kernel radius must be positive (got {delta})")));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("kernel dimension must be 1, 2 or 3 (got {n})")));
    }
    let mut k = Kernel {
        family,
        delta,
        dim: n,
        normalization: 1.0,
    };
    let mass = unit_sphere_area(n) * k.radial_moment(n - 1);
    k.normalization = 1.0 / mass;
    Ok(k)
}

impl Kernel {
    fn sigma(&self) -> f64 {
        self.delta / 3.0
    }

    fn mollify_width(&self) -> f64 {
        self.delta / 20.0
    }

    /// Unnormalized radial profile.
    fn profile(&self, r: f64) -> f64 {
        if r >= self.delta {
            return 0.0;
        }
        match self.family {
            KernelFamily::Tent => 1.0 - r / self.delta,
            KernelFamily::TruncatedGaussian => {
                let s2 = 2.0 * self.sigma() * self.sigma();
                let taper = 1.0 - r * r / (self.delta * self.delta);
                (-r * r / s2).exp() * taper * taper * taper
            }
            KernelFamily::MollifiedIndicator => {
                let eps = self.mollify_width();
                let s = ((r - (self.delta - eps)) / eps).clamp(0.0, 1.0);
                1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
            }
        }
    }

    fn profile_derivative(&self, r: f64) -> f64 {
        if r >= self.delta {
            return 0.0;
        }
        match self.family {
            KernelFamily::Tent => -1.0 / self.delta,
            KernelFamily::TruncatedGaussian => {
                let s2 = 2.0 * self.sigma() * self.sigma();
                let d2 = self.delta * self.delta;
                let taper = 1.0 - r * r / d2;
                let g = (-r * r / s2).exp();
                g * taper * taper * (-2.0 * r / s2 * taper - 6.0 * r / d2)
            }
            KernelFamily::MollifiedIndicator => {
                let eps = self.mollify_width();
                let s = (r - (self.delta - eps)) / eps;
                if s <= 0.0 {
                    0.0
                } else {
                    -30.0 * s * s * (1.0 - s) * (1.0 - s) / eps
                }
            }
        }
    }

    /// `∫_0^δ profile(r) r^p dr`, by composite Gauss–Legendre split at the
    /// profile's breakpoints.
    fn radial_moment(&self, p: usize) -> f64 {
        let f = |r: f64| self.profile(r) * r.powi(p as i32);
        match self.family {
            KernelFamily::MollifiedIndicator => {
                let knee = self.delta - self.mollify_width();
                quadrature::integrate(f, 0.0, knee, 32, 10) + quadrature::integrate(f, knee, self.delta, 32, 10)
            }
            _ => quadrature::integrate(f, 0.0, self.delta, 64, 10),
        }
    }

    /// `J(r)`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.normalization * self.profile(r)
    }

    /// `dJ/dr`.
    #[inline]
    pub fn radial_derivative(&self, r: f64) -> f64 {
        self.normalization * self.profile_derivative(r)
    }

    #[inline]
    pub fn between(&self, x: &Vec3, y: &Vec3) -> f64 {
        self.value((x - y).norm())
    }

    /// `∇_x J(|x - y|)`; zero on the diagonal.
    #[inline]
    pub fn gradient_x(&self, x: &Vec3, y: &Vec3) -> Vec3 {
        let d = x - y;
        let r = d.norm();
        if r == 0.0 || r >= self.delta {
            return Vec3::zeros();
        }
        d * (self.radial_derivative(r) / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_in_one_dimension() {
        let k = make_kernel(KernelFamily::Tent, 1.0, 1).unwrap();
        assert!((k.value(0.0) - 1.0).abs() < 1e-13);
        assert!((k.value(0.5) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn compact_support() {
        for family in [KernelFamily::Tent, KernelFamily::TruncatedGaussian, KernelFamily::MollifiedIndicator] {
            let k = make_kernel(family, 0.7, 2).unwrap();
            assert_eq!(k.value(0.7 + 1e-9), 0.0);
            assert!(k.value(0.0) > 0.0);
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let v = k.value(0.7 * i as f64 / 199.0);
                assert!(v >= 0.0 && v <= prev);
                prev = v;
            }
        }
    }

    /// Independent normalization oracle: plain midpoint rule on a fine
    /// Cartesian grid over the square `[-δ, δ]^2`.
    #[test]
    fn truncated_gaussian_normalization_on_cartesian_grid() {
        let k = make_kernel(KernelFamily::TruncatedGaussian, 1.0, 2).unwrap();
        let n = 2000;
        let h = 2.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let x = -1.0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -1.0 + (j as f64 + 0.5) * h;
                total += k.value((x * x + y * y).sqrt());
            }
        }
        assert!((total * h * h - 1.0).abs() < 1e-6);
    }

    /// Radial trapezoid oracle with a very fine step, for every family.
    #[test]
    fn normalization_radial_oracle() {
        for family in [KernelFamily::Tent, KernelFamily::TruncatedGaussian, KernelFamily::MollifiedIndicator] {
            for n in 1..=3 {
                let k = make_kernel(family, 0.3, n).unwrap();
                let steps = 400_000;
                let h = 0.3 / steps as f64;
                let mut s = 0.0;
                for i in 0..=steps {
                    let r = i as f64 * h;
                    let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                    s += w * k.value(r) * r.powi(n as i32 - 1);
                }
                let total = s * h * unit_sphere_area(n);
                assert!((total - 1.0).abs() < 1e-6, "{family} n={n}: {total}");
            }
        }
    }

    #[test]
    fn radial_derivative_matches_finite_differences() {
        for family in [KernelFamily::Tent, KernelFamily::TruncatedGaussian, KernelFamily::MollifiedIndicator] {
            let k = make_kernel(family, 1.0, 2).unwrap();
            for r in [0.1, 0.4, 0.9, 0.97, 0.99] {
                let h = 1e-6;
                let fd = (k.value(r + h) - k.value(r - h)) / (2.0 * h);
                assert!((fd - k.radial_derivative(r)).abs() < 1e-5 * (1.0 + fd.abs()), "{family} r={r}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_kernel(KernelFamily::Tent, 0.0, 1).is_err());
        assert!(make_kernel(KernelFamily::Tent, 1.0, 4).is_err());
        assert!("cauchy".parse::<KernelFamily>().is_err());
        assert_eq!("tent".parse::<KernelFamily>().unwrap(), KernelFamily::Tent);
    }
}
