use serde::{Deserialize, Serialize};

use super::{Mat3, QuadratureDomain, Vec3};

/// `coef · x^p0 · y^p1 · z^p2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

/// Polynomial on `R^3` with an analytic gradient.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Polynomial {
            terms: vec![Monomial { coef: c, powers: [0, 0, 0] }],
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coef * (0..3).map(|k| x[k].powi(m.powers[k] as i32)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        let mut g = Vec3::zeros();
        for m in &self.terms {
            for k in 0..3 {
                if m.powers[k] == 0 {
                    continue;
                }
                let mut v = m.coef * m.powers[k] as f64;
                for j in 0..3 {
                    let p = if j == k { m.powers[j] - 1 } else { m.powers[j] };
                    v *= x[j].powi(p as i32);
                }
                g[k] += v;
            }
        }
        g
    }
}

/// Deformation velocity `V: R^3 → R^3` with an analytic Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorField {
    Zero,
    /// `V ≡ direction`.
    Translation { direction: [f64; 3] },
    /// `V(x) = x - center`.
    Dilation { center: [f64; 3] },
    /// `V(x) = exp(-|x - center|² / width²) · d(x)` where `d` is the given
    /// direction, or `x` itself when none is given (smooth, and the outward
    /// normal on the unit circle and sphere).
    NormalBump {
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        direction: Option<[f64; 3]>,
    },
    Polynomial { components: [Polynomial; 3] },
    /// `Σ c_k V_k`.
    Combination { terms: Vec<(f64, VectorField)> },
}

impl VectorField {
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        match self {
            VectorField::Zero => Vec3::zeros(),
            VectorField::Translation { direction } => Vec3::from(*direction),
            VectorField::Dilation { center } => x - Vec3::from(*center),
            VectorField::NormalBump { center, width, direction } => {
                let r2 = (x - Vec3::from(*center)).norm_squared();
                let bump = (-r2 / (width * width)).exp();
                bump * bump_direction(x, direction)
            }
            VectorField::Polynomial { components } => {
                Vec3::new(components[0].eval(x), components[1].eval(x), components[2].eval(x))
            }
            VectorField::Combination { terms } => {
                terms.iter().fold(Vec3::zeros(), |acc, (c, v)| acc + v.eval(x) * *c)
            }
        }
    }

    /// `DV(x)` with entries `∂V_a / ∂x_b`.
    pub fn jacobian(&self, x: &Vec3) -> Mat3 {
        match self {
            VectorField::Zero | VectorField::Translation { .. } => Mat3::zeros(),
            VectorField::Dilation { .. } => Mat3::identity(),
            VectorField::NormalBump { center, width, direction } => {
                let dx = x - Vec3::from(*center);
                let bump = (-dx.norm_squared() / (width * width)).exp();
                let grad_bump = dx * (-2.0 * bump / (width * width));
                let d = bump_direction(x, direction);
                let mut jac = d * grad_bump.transpose();
                if direction.is_none() {
                    jac += Mat3::identity() * bump;
                }
                jac
            }
            VectorField::Polynomial { components } => {
                let mut m = Mat3::zeros();
                for a in 0..3 {
                    m.set_row(a, &components[a].gradient(x).transpose());
                }
                m
            }
            VectorField::Combination { terms } => {
                terms.iter().fold(Mat3::zeros(), |acc, (c, v)| acc + v.jacobian(x) * *c)
            }
        }
    }

    /// Divergence of `V` along `M` at a point with tangent frame `frame`.
    pub fn tangential_divergence(&self, x: &Vec3, frame: &Mat3, rank: usize) -> f64 {
        let jac = self.jacobian(x);
        (0..rank)
            .map(|c| {
                let e = frame.column(c);
                e.dot(&(jac * e))
            })
            .sum()
    }
}

fn bump_direction(x: &Vec3, direction: &Option<[f64; 3]>) -> Vec3 {
    match direction {
        Some(d) => Vec3::from(*d),
        None => *x,
    }
}

/// Per-node tangential and normal parts of a vector field.
#[derive(Clone, Debug)]
pub struct FieldSplit {
    pub tangential: Vec<Vec3>,
    pub normal: Vec<Vec3>,
}

/// Splits `V = V^T + V^⊥` at every interior node of `dom`.
pub fn split_field(field: &VectorField, dom: &QuadratureDomain) -> FieldSplit {
    let mut tangential = Vec::with_capacity(dom.len());
    let mut normal = Vec::with_capacity(dom.len());
    for (x, p) in dom.nodes.iter().zip(&dom.tangent_projectors) {
        let v = field.eval(x);
        let vt = p * v;
        tangential.push(vt);
        normal.push(v - vt);
    }
    FieldSplit { tangential, normal }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainShape};

    fn fd_jacobian(v: &VectorField, x: &Vec3) -> Mat3 {
        let h = 1e-6;
        let mut m = Mat3::zeros();
        for b in 0..3 {
            let mut e = Vec3::zeros();
            e[b] = h;
            let col = (v.eval(&(x + e)) - v.eval(&(x - e))) / (2.0 * h);
            m.set_column(b, &col);
        }
        m
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let fields = [
            VectorField::Dilation { center: [0.1, 0.2, 0.0] },
            VectorField::NormalBump { center: [1.0, 0.0, 0.0], width: 0.4, direction: None },
            VectorField::NormalBump { center: [0.0, 1.0, 0.0], width: 0.7, direction: Some([0.0, 1.0, 0.0]) },
            VectorField::Polynomial {
                components: [
                    Polynomial { terms: vec![Monomial { coef: 2.0, powers: [2, 1, 0] }] },
                    Polynomial { terms: vec![Monomial { coef: -1.0, powers: [0, 0, 3] }] },
                    Polynomial::constant(0.5),
                ],
            },
        ];
        let x = Vec3::new(0.3, -0.7, 0.4);
        for f in &fields {
            assert!((f.jacobian(&x) - fd_jacobian(f, &x)).norm() < 1e-7, "{f:?}");
        }
    }

    #[test]
    fn codim_zero_split_is_trivial() {
        let d = build_domain(&DomainShape::Disk { center: [0.0, 0.0], radius: 1.0 }, 8).unwrap();
        let v = VectorField::Dilation { center: [0.0, 0.0, 0.0] };
        let s = split_field(&v, &d);
        for (x, (t, n)) in d.nodes.iter().zip(s.tangential.iter().zip(&s.normal)) {
            assert_eq!(*n, Vec3::zeros());
            assert_eq!(*t, *x);
        }
    }

    #[test]
    fn radial_field_is_normal_to_sphere() {
        let d = build_domain(&DomainShape::Sphere { radius: 1.0 }, 8).unwrap();
        let v = VectorField::Dilation { center: [0.0; 3] };
        let s = split_field(&v, &d);
        for (x, (t, n)) in d.nodes.iter().zip(s.tangential.iter().zip(&s.normal)) {
            assert!(t.norm() < 1e-14);
            assert!((n - x).norm() < 1e-14);
        }
    }

    #[test]
    fn slice_split_separates_vertical_direction() {
        let d = build_domain(&DomainShape::CylinderSlice { a: 0.0, b: 1.0, height: 0.5 }, 8).unwrap();
        let v = VectorField::Translation { direction: [0.3, 1.0, 0.0] };
        let s = split_field(&v, &d);
        for (t, n) in s.tangential.iter().zip(&s.normal) {
            assert_eq!(*t, Vec3::new(0.3, 0.0, 0.0));
            assert_eq!(*n, Vec3::new(0.0, 1.0, 0.0));
        }
    }
}
