//! Quadrature representations of Euclidean domains and embedded manifolds.
//!
//! Every point and vector lives in `R^3`; domains of ambient dimension
//! `d < 3` leave the trailing coordinates at zero. Tangent spaces are stored
//! as orthonormal frames (the first `intrinsic_dim` columns of a 3×3 matrix)
//! together with the induced orthogonal projectors.

mod build;
mod field;

pub use build::{ball_with_measure, build_domain, unit_ball_measure, CurvatureConvention};
pub use field::{split_field, FieldSplit, Monomial, Polynomial, VectorField};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Geometric descriptor of a built-in domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum DomainShape {
    /// Open interval `(a, b) ⊂ R`.
    Interval { a: f64, b: f64 },
    /// Axis-aligned rectangle in `R^2`.
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Disk in `R^2`.
    Disk { center: [f64; 2], radius: f64 },
    /// Disk with a strictly interior circular hole removed.
    Annulus {
        center: [f64; 2],
        radius: f64,
        hole_center: [f64; 2],
        hole_radius: f64,
    },
    /// Centered ball in `R^dim` on a radially structured grid.
    Ball { dim: usize, radius: f64 },
    /// Circle of the given radius in `R^2` (a closed curve).
    Circle { radius: f64 },
    /// Two-sphere of the given radius in `R^3`.
    Sphere { radius: f64 },
    /// Upper hemisphere `{x_3 >= 0}` of the two-sphere.
    Hemisphere { radius: f64 },
    /// The slice `(a, b) × {height}` of the cylinder `(a, b) × [0, 1] ⊂ R^2`.
    CylinderSlice { a: f64, b: f64, height: f64 },
}

impl DomainShape {
    pub fn name(&self) -> &'static str {
        match self {
            DomainShape::Interval { .. } => "interval",
            DomainShape::Rectangle { .. } => "rectangle",
            DomainShape::Disk { .. } => "disk",
            DomainShape::Annulus { .. } => "annulus",
            DomainShape::Ball { .. } => "ball",
            DomainShape::Circle { .. } => "circle",
            DomainShape::Sphere { .. } => "sphere",
            DomainShape::Hemisphere { .. } => "hemisphere",
            DomainShape::CylinderSlice { .. } => "cylinder-slice",
        }
    }

    /// Exact measure of the domain when it has a closed form.
    pub fn exact_measure(&self) -> Option<f64> {
        use std::f64::consts::PI;
        Some(match *self {
            DomainShape::Interval { a, b } | DomainShape::CylinderSlice { a, b, .. } => b - a,
            DomainShape::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
            DomainShape::Disk { radius, .. } => PI * radius * radius,
            DomainShape::Annulus {
                radius,
                hole_radius,
                ..
            } => PI * (radius * radius - hole_radius * hole_radius),
            DomainShape::Ball { dim, radius } => unit_ball_measure(dim) * radius.powi(dim as i32),
            DomainShape::Circle { radius } => 2.0 * PI * radius,
            DomainShape::Sphere { radius } => 4.0 * PI * radius * radius,
            DomainShape::Hemisphere { radius } => 2.0 * PI * radius * radius,
        })
    }
}

/// Quadrature representation of a domain or embedded manifold `M ⊂ R^d`.
#[derive(Clone, Debug)]
pub struct QuadratureDomain {
    pub shape: DomainShape,
    pub resolution: usize,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub boundary_nodes: Vec<Vec3>,
    pub boundary_weights: Vec<f64>,
    /// Outward unit conormals, tangent to `M` and normal to `∂M`.
    pub conormals: Vec<Vec3>,
    /// Boundary component index (0 = outer boundary, 1 = hole).
    pub boundary_parts: Vec<usize>,
    /// Orthonormal frame of `T_s M` at each boundary node.
    pub boundary_tangent_frames: Vec<Mat3>,
    /// Orthonormal frame of `T_s ∂M` at each boundary node.
    pub boundary_edge_frames: Vec<Mat3>,
    pub curvature_vectors: Vec<Vec3>,
    /// Orthonormal frame of `T_x M` at each interior node.
    pub tangent_frames: Vec<Mat3>,
    pub tangent_projectors: Vec<Mat3>,
}

impl QuadratureDomain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature approximation of `|M|`.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_codim_zero(&self) -> bool {
        self.intrinsic_dim == self.ambient_dim
    }

    pub fn centroid(&self) -> Vec3 {
        let total = self.measure();
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(Vec3::zeros(), |acc, (x, w)| acc + x * *w)
            / total
    }

    /// Projector onto `T_s M` at boundary node `k`.
    pub fn boundary_projector(&self, k: usize) -> Mat3 {
        projector(&self.boundary_tangent_frames[k], self.intrinsic_dim)
    }

    /// Image of the quadrature under a map `x ↦ (h(x), Dh(x))`.
    ///
    /// Nodes are moved, volume weights are rescaled by the Gram determinant
    /// of the pushed tangent frame, boundary weights by that of the pushed
    /// edge frame, and conormals are re-orthogonalized against the pushed
    /// boundary tangent space. Curvature vectors are carried over projected
    /// onto the new normal space, which is exact only to first order.
    pub fn pushed<F>(&self, map: F) -> QuadratureDomain
    where
        F: Fn(&Vec3) -> (Vec3, Mat3),
    {
        let n = self.intrinsic_dim;
        let mut out = self.clone();
        for i in 0..self.len() {
            let (y, dh) = map(&self.nodes[i]);
            let pushed = dh * self.tangent_frames[i];
            let (frame, vol) = orthonormalize(&pushed, n);
            out.nodes[i] = y;
            out.weights[i] = self.weights[i] * vol;
            out.tangent_frames[i] = frame;
            let p = projector(&frame, n);
            out.tangent_projectors[i] = p;
            let h = self.curvature_vectors[i];
            out.curvature_vectors[i] = h - p * h;
        }
        for k in 0..self.boundary_nodes.len() {
            let (y, dh) = map(&self.boundary_nodes[k]);
            let edge = dh * self.boundary_edge_frames[k];
            let (edge_frame, area) = orthonormalize(&edge, n.saturating_sub(1));
            let tangent = dh * self.boundary_tangent_frames[k];
            let (tangent_frame, _) = orthonormalize(&tangent, n);
            let mut nu = dh * self.conormals[k];
            for c in 0..n.saturating_sub(1) {
                let e = edge_frame.column(c).into_owned();
                nu -= e * e.dot(&nu);
            }
            out.boundary_nodes[k] = y;
            out.boundary_weights[k] = self.boundary_weights[k] * area;
            out.conormals[k] = nu.normalize();
            out.boundary_edge_frames[k] = edge_frame;
            out.boundary_tangent_frames[k] = tangent_frame;
        }
        out
    }
}

/// Projector `E Eᵀ` onto the span of the first `rank` columns of `frame`.
pub fn projector(frame: &Mat3, rank: usize) -> Mat3 {
    let mut p = Mat3::zeros();
    for c in 0..rank {
        let e = frame.column(c);
        p += e * e.transpose();
    }
    p
}

/// Gram–Schmidt on the first `rank` columns. Returns the orthonormal frame and
/// `sqrt(det(FᵀF))` of the input columns.
pub(crate) fn orthonormalize(cols: &Mat3, rank: usize) -> (Mat3, f64) {
    let mut q = Mat3::zeros();
    let mut vol = 1.0;
    for c in 0..rank {
        let mut v = cols.column(c).into_owned();
        for _ in 0..2 {
            for j in 0..c {
                let e = q.column(j).into_owned();
                v -= e * e.dot(&v);
            }
        }
        let norm = v.norm();
        vol *= norm;
        q.set_column(c, &(v / norm));
    }
    (q, vol)
}
