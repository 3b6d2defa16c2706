use std::f64::consts::PI;

use super::{projector, DomainShape, Mat3, QuadratureDomain, Vec3};
use crate::error::{Error, Result};

/// Mean-curvature convention for spherical domains.
///
/// Built domains store the mean-curvature vector `H = (n/R) p/R`, so that
/// `div_M V^⊥ = ⟨H, V^⊥⟩`. `Unit` rescales it to `(1/R) p/R` when the
/// formula is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureConvention {
    #[default]
    Dimensional,
    Unit,
}

impl CurvatureConvention {
    pub fn factor(self, intrinsic_dim: usize) -> f64 {
        match self {
            CurvatureConvention::Dimensional => intrinsic_dim as f64,
            CurvatureConvention::Unit => 1.0,
        }
    }
}

/// Measure of the unit ball in `R^n`, `π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_measure(n: usize) -> f64 {
    // Γ(n/2 + 1) by the half-integer recurrence.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() / 2.0 };
    let mut k = if n.is_multiple_of(2) { 1.0 } else { 1.5 };
    let target = n as f64 / 2.0 + 1.0;
    while k < target - 1e-12 {
        gamma *= k;
        k += 1.0;
    }
    PI.powf(n as f64 / 2.0) / gamma
}

/// Builds the quadrature of a built-in domain.
pub fn build_domain(shape: &DomainShape, resolution: usize) -> Result<QuadratureDomain> {
    if resolution < 2 {
        return Err(Error::ResolutionTooSmall {
            resolution,
            reason: "at least 2 is required".into(),
        });
    }
    let dom = match *shape {
        DomainShape::Interval { a, b } => {
            check_positive(b - a, "interval length")?;
            interval(shape.clone(), a, b, 0.0, resolution)
        }
        DomainShape::CylinderSlice { a, b, height } => {
            check_positive(b - a, "slice length")?;
            let mut d = interval(shape.clone(), a, b, height, resolution);
            d.ambient_dim = 2;
            d
        }
        DomainShape::Rectangle { x0, x1, y0, y1 } => {
            check_positive(x1 - x0, "rectangle width")?;
            check_positive(y1 - y0, "rectangle height")?;
            rectangle(shape.clone(), x0, x1, y0, y1, resolution)
        }
        DomainShape::Disk { center, radius } => {
            check_positive(radius, "radius")?;
            let c = Vec3::new(center[0], center[1], 0.0);
            let circles = [(c, radius, 1.0, 0)];
            clipped(shape.clone(), c, radius, resolution, &circles)?
        }
        DomainShape::Annulus {
            center,
            radius,
            hole_center,
            hole_radius,
        } => {
            check_positive(radius, "radius")?;
            check_positive(hole_radius, "hole radius")?;
            let c = Vec3::new(center[0], center[1], 0.0);
            let hc = Vec3::new(hole_center[0], hole_center[1], 0.0);
            if (hc - c).norm() + hole_radius >= radius {
                return Err(Error::InvalidDomain(
                    "hole must lie strictly inside the outer disk".into(),
                ));
            }
            let h = 2.0 * radius / resolution as f64;
            if hole_radius <= h {
                return Err(Error::ResolutionTooSmall {
                    resolution,
                    reason: "hole is not resolved by the grid".into(),
                });
            }
            let circles = [(c, radius, 1.0, 0), (hc, hole_radius, -1.0, 1)];
            clipped(shape.clone(), c, radius, resolution, &circles)?
        }
        DomainShape::Ball { dim, radius } => {
            check_positive(radius, "radius")?;
            polar_ball(dim, radius, resolution)?
        }
        DomainShape::Circle { radius } => {
            check_positive(radius, "radius")?;
            circle(radius, resolution)
        }
        DomainShape::Sphere { radius } => {
            check_positive(radius, "radius")?;
            sphere(shape.clone(), radius, resolution, PI, 2 * resolution, false)
        }
        DomainShape::Hemisphere { radius } => {
            check_positive(radius, "radius")?;
            sphere(shape.clone(), radius, resolution, PI / 2.0, 4 * resolution, true)
        }
    };
    if dom.is_empty() {
        return Err(Error::ResolutionTooSmall {
            resolution,
            reason: "no interior node could be placed".into(),
        });
    }
    Ok(dom)
}

/// The centered ball `Ω*` with `|Ω*| = volume` in `R^n`, on a radially
/// structured grid with about `resolution` cells across its diameter.
pub fn ball_with_measure(volume: f64, n: usize, resolution: usize) -> Result<QuadratureDomain> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "ball dimension must be 1, 2 or 3 (got {n})"
        )));
    }
    check_positive(volume, "volume")?;
    let radius = (volume / unit_ball_measure(n)).powf(1.0 / n as f64);
    build_domain(&DomainShape::Ball { dim: n, radius }, resolution)
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("{what} must be positive (got {v})")))
    }
}

fn axis(k: usize) -> Vec3 {
    let mut v = Vec3::zeros();
    v[k] = 1.0;
    v
}

fn frame_of(cols: &[Vec3]) -> Mat3 {
    let mut m = Mat3::zeros();
    for (c, v) in cols.iter().enumerate() {
        m.set_column(c, v);
    }
    m
}

fn empty(shape: DomainShape, resolution: usize, ambient: usize, intrinsic: usize) -> QuadratureDomain {
    QuadratureDomain {
        shape,
        resolution,
        ambient_dim: ambient,
        intrinsic_dim: intrinsic,
        nodes: Vec::new(),
        weights: Vec::new(),
        boundary_nodes: Vec::new(),
        boundary_weights: Vec::new(),
        conormals: Vec::new(),
        boundary_parts: Vec::new(),
        boundary_tangent_frames: Vec::new(),
        boundary_edge_frames: Vec::new(),
        curvature_vectors: Vec::new(),
        tangent_frames: Vec::new(),
        tangent_projectors: Vec::new(),
    }
}

impl QuadratureDomain {
    fn push_node(&mut self, x: Vec3, w: f64, frame: Mat3, curvature: Vec3) {
        self.nodes.push(x);
        self.weights.push(w);
        self.tangent_projectors.push(projector(&frame, self.intrinsic_dim));
        self.tangent_frames.push(frame);
        self.curvature_vectors.push(curvature);
    }

    fn push_boundary(&mut self, s: Vec3, w: f64, conormal: Vec3, part: usize, tangent: Mat3, edge: Mat3) {
        self.boundary_nodes.push(s);
        self.boundary_weights.push(w);
        self.conormals.push(conormal);
        self.boundary_parts.push(part);
        self.boundary_tangent_frames.push(tangent);
        self.boundary_edge_frames.push(edge);
    }
}

fn interval(shape: DomainShape, a: f64, b: f64, height: f64, n: usize) -> QuadratureDomain {
    let mut d = empty(shape, n, 1, 1);
    let h = (b - a) / n as f64;
    let frame = frame_of(&[axis(0)]);
    for i in 0..n {
        let x = Vec3::new(a + (i as f64 + 0.5) * h, height, 0.0);
        d.push_node(x, h, frame, Vec3::zeros());
    }
    d.push_boundary(Vec3::new(a, height, 0.0), 1.0, -axis(0), 0, frame, Mat3::zeros());
    d.push_boundary(Vec3::new(b, height, 0.0), 1.0, axis(0), 0, frame, Mat3::zeros());
    d
}

fn rectangle(shape: DomainShape, x0: f64, x1: f64, y0: f64, y1: f64, res: usize) -> QuadratureDomain {
    let (lx, ly) = (x1 - x0, y1 - y0);
    let long = lx.max(ly);
    let nx = ((res as f64 * lx / long).round() as usize).max(1);
    let ny = ((res as f64 * ly / long).round() as usize).max(1);
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let mut d = empty(shape, res, 2, 2);
    let frame = frame_of(&[axis(0), axis(1)]);
    for j in 0..ny {
        for i in 0..nx {
            let x = Vec3::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy, 0.0);
            d.push_node(x, hx * hy, frame, Vec3::zeros());
        }
    }
    let ex = frame_of(&[axis(0)]);
    let ey = frame_of(&[axis(1)]);
    for i in 0..nx {
        let x = x0 + (i as f64 + 0.5) * hx;
        d.push_boundary(Vec3::new(x, y0, 0.0), hx, -axis(1), 0, frame, ex);
    }
    for j in 0..ny {
        let y = y0 + (j as f64 + 0.5) * hy;
        d.push_boundary(Vec3::new(x1, y, 0.0), hy, axis(0), 0, frame, ey);
    }
    for i in (0..nx).rev() {
        let x = x0 + (i as f64 + 0.5) * hx;
        d.push_boundary(Vec3::new(x, y1, 0.0), hx, axis(1), 0, frame, ex);
    }
    for j in (0..ny).rev() {
        let y = y0 + (j as f64 + 0.5) * hy;
        d.push_boundary(Vec3::new(x0, y, 0.0), hy, -axis(0), 0, frame, ey);
    }
    d
}

/// Uniform grid over the bounding square of the disk `|x - c| < radius`.
/// `circles` lists the boundary circles `(center, radius, orientation, part)`
/// where orientation +1 bounds the domain from outside and -1 cuts a hole.
/// Cells crossing a circle keep the exact part of the cell inside the domain:
/// its area and centroid come from column integration with exact chords, and
/// the node moves to that centroid.
fn clipped(
    shape: DomainShape,
    c: Vec3,
    radius: f64,
    res: usize,
    circles: &[(Vec3, f64, f64, usize)],
) -> Result<QuadratureDomain> {
    let mut d = empty(shape, res, 2, 2);
    let h = 2.0 * radius / res as f64;
    let frame = frame_of(&[axis(0), axis(1)]);
    for j in 0..res {
        for i in 0..res {
            let lo = Vec3::new(c.x - radius + i as f64 * h, c.y - radius + j as f64 * h, 0.0);
            if cell_is_full(&lo, h, circles) {
                d.push_node(lo + Vec3::new(0.5 * h, 0.5 * h, 0.0), h * h, frame, Vec3::zeros());
                continue;
            }
            let (area, centroid) = cell_moments(&lo, h, circles);
            if area > 1e-12 * h * h {
                d.push_node(centroid, area, frame, Vec3::zeros());
            }
        }
    }
    for &(center, r, orientation, part) in circles {
        let k = circle_samples(r, h);
        let dtheta = 2.0 * PI / k as f64;
        for m in 0..k {
            let theta = (m as f64 + 0.5) * dtheta;
            let radial = Vec3::new(theta.cos(), theta.sin(), 0.0);
            let tangent = Vec3::new(-theta.sin(), theta.cos(), 0.0);
            d.push_boundary(
                center + radial * r,
                r * dtheta,
                radial * orientation,
                part,
                frame,
                frame_of(&[tangent]),
            );
        }
    }
    Ok(d)
}

/// Whether the square cell `[lo, lo + h]²` lies inside every outer circle and
/// misses every hole.
fn cell_is_full(lo: &Vec3, h: f64, circles: &[(Vec3, f64, f64, usize)]) -> bool {
    circles.iter().all(|&(center, r, orientation, _)| {
        if orientation > 0.0 {
            let far_x = (lo.x - center.x).abs().max((lo.x + h - center.x).abs());
            let far_y = (lo.y - center.y).abs().max((lo.y + h - center.y).abs());
            far_x * far_x + far_y * far_y < r * r
        } else {
            let near_x = (center.x - center.x.clamp(lo.x, lo.x + h)).abs();
            let near_y = (center.y - center.y.clamp(lo.y, lo.y + h)).abs();
            near_x * near_x + near_y * near_y > r * r
        }
    })
}

/// Columns per cell used to integrate the clipped area and first moments.
const CLIP_COLUMNS: usize = 256;

/// Area and centroid of the part of the cell `[lo, lo + h]²` in the domain.
/// Each column is cut exactly along `y`; the `x` integral uses the midpoint
/// rule on `CLIP_COLUMNS` columns.
fn cell_moments(lo: &Vec3, h: f64, circles: &[(Vec3, f64, f64, usize)]) -> (f64, Vec3) {
    let dx = h / CLIP_COLUMNS as f64;
    let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
    for k in 0..CLIP_COLUMNS {
        let x = lo.x + (k as f64 + 0.5) * dx;
        let mut pieces = vec![(lo.y, lo.y + h)];
        for &(center, r, orientation, _) in circles {
            let half2 = r * r - (x - center.x) * (x - center.x);
            let chord = (half2 > 0.0).then(|| {
                let half = half2.sqrt();
                (center.y - half, center.y + half)
            });
            pieces = if orientation > 0.0 {
                match chord {
                    Some((a, b)) => pieces
                        .into_iter()
                        .map(|(p, q)| (p.max(a), q.min(b)))
                        .filter(|(p, q)| q > p)
                        .collect(),
                    None => Vec::new(),
                }
            } else {
                match chord {
                    Some((a, b)) => pieces
                        .into_iter()
                        .flat_map(|(p, q)| [(p, q.min(a)), (p.max(b), q)])
                        .filter(|(p, q)| q > p)
                        .collect(),
                    None => pieces,
                }
            };
        }
        for (p, q) in pieces {
            let len = q - p;
            area += len * dx;
            mx += x * len * dx;
            my += 0.5 * (q * q - p * p) * dx;
        }
    }
    if area > 0.0 {
        (area, Vec3::new(mx / area, my / area, 0.0))
    } else {
        (0.0, Vec3::zeros())
    }
}

/// Number of boundary samples on a circle of radius `r` for spacing about
/// `h`, rounded to a multiple of 4 so the samples share the grid symmetries.
fn circle_samples(r: f64, h: f64) -> usize {
    let k = (2.0 * PI * r / h / 4.0).ceil() as usize * 4;
    k.max(8)
}

fn circle(radius: f64, res: usize) -> QuadratureDomain {
    let mut d = empty(DomainShape::Circle { radius }, res, 2, 1);
    let dtheta = 2.0 * PI / res as f64;
    for m in 0..res {
        let theta = (m as f64 + 0.5) * dtheta;
        let p = Vec3::new(radius * theta.cos(), radius * theta.sin(), 0.0);
        let t = Vec3::new(-theta.sin(), theta.cos(), 0.0);
        d.push_node(p, radius * dtheta, frame_of(&[t]), p / (radius * radius));
    }
    d
}

fn sphere_point(r: f64, theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let p = Vec3::new(r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
    let e_theta = Vec3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin());
    let e_phi = Vec3::new(-phi.sin(), phi.cos(), 0.0);
    (p, e_theta, e_phi)
}

/// Latitude–longitude midpoint grid on the polar cap `θ < theta_max`, with
/// exact cell areas as weights.
fn sphere(
    shape: DomainShape,
    r: f64,
    bands: usize,
    theta_max: f64,
    sectors: usize,
    with_boundary: bool,
) -> QuadratureDomain {
    let mut d = empty(shape, bands, 3, 2);
    let dtheta = theta_max / bands as f64;
    let dphi = 2.0 * PI / sectors as f64;
    let n = 2.0;
    for b in 0..bands {
        let (ta, tb) = (b as f64 * dtheta, (b + 1) as f64 * dtheta);
        let theta = 0.5 * (ta + tb);
        let area = r * r * (ta.cos() - tb.cos()) * dphi;
        for s in 0..sectors {
            let phi = (s as f64 + 0.5) * dphi;
            let (p, et, ep) = sphere_point(r, theta, phi);
            d.push_node(p, area, frame_of(&[et, ep]), p * (n / (r * r)));
        }
    }
    if with_boundary {
        for s in 0..sectors {
            let phi = (s as f64 + 0.5) * dphi;
            let (p, et, ep) = sphere_point(r, theta_max, phi);
            d.push_boundary(p, r * theta_max.sin() * dphi, et, 0, frame_of(&[et, ep]), frame_of(&[ep]));
        }
    }
    d
}

/// Radially structured ball: concentric shells, each split into cells of
/// equal measure. Node radii sit at the measure midpoint of their shell.
fn polar_ball(dim: usize, radius: f64, res: usize) -> Result<QuadratureDomain> {
    let shape = DomainShape::Ball { dim, radius };
    match dim {
        1 => {
            let mut d = interval(shape, -radius, radius, 0.0, res);
            d.shape = DomainShape::Ball { dim, radius };
            Ok(d)
        }
        2 => {
            let mut d = empty(shape, res, 2, 2);
            let frame = frame_of(&[axis(0), axis(1)]);
            let rings = res.div_ceil(2);
            let dr = radius / rings as f64;
            for k in 0..rings {
                let (ra, rb) = (k as f64 * dr, (k + 1) as f64 * dr);
                let m = (((2.0 * PI * (k as f64 + 0.5)) / 4.0).round() as usize).max(1) * 4;
                let rho = (0.5 * (ra * ra + rb * rb)).sqrt();
                let w = PI * (rb * rb - ra * ra) / m as f64;
                for j in 0..m {
                    let theta = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                    d.push_node(Vec3::new(rho * theta.cos(), rho * theta.sin(), 0.0), w, frame, Vec3::zeros());
                }
            }
            let k = circle_samples(radius, dr);
            let dtheta = 2.0 * PI / k as f64;
            for m in 0..k {
                let theta = (m as f64 + 0.5) * dtheta;
                let radial = Vec3::new(theta.cos(), theta.sin(), 0.0);
                let tangent = Vec3::new(-theta.sin(), theta.cos(), 0.0);
                d.push_boundary(radial * radius, radius * dtheta, radial, 0, frame, frame_of(&[tangent]));
            }
            Ok(d)
        }
        3 => {
            let mut d = empty(shape, res, 3, 3);
            let frame = Mat3::identity();
            let shells = res.div_ceil(2);
            let dr = radius / shells as f64;
            for k in 0..shells {
                let (ra, rb) = (k as f64 * dr, (k + 1) as f64 * dr);
                let rho = (0.5 * (ra.powi(3) + rb.powi(3))).cbrt();
                let nt = ((PI * (k as f64 + 0.5)).round() as usize).max(2);
                let np = 2 * nt;
                let dt = PI / nt as f64;
                let dp = 2.0 * PI / np as f64;
                for b in 0..nt {
                    let (ta, tb) = (b as f64 * dt, (b + 1) as f64 * dt);
                    let theta = (0.5 * (ta.cos() + tb.cos())).acos();
                    let w = (rb.powi(3) - ra.powi(3)) / 3.0 * (ta.cos() - tb.cos()) * dp;
                    for s in 0..np {
                        let (p, _, _) = sphere_point(rho, theta, (s as f64 + 0.5) * dp);
                        d.push_node(p, w, frame, Vec3::zeros());
                    }
                }
            }
            let nt = ((PI * radius / dr).round() as usize).max(2);
            let np = 2 * nt;
            let dt = PI / nt as f64;
            let dp = 2.0 * PI / np as f64;
            for b in 0..nt {
                let (ta, tb) = (b as f64 * dt, (b + 1) as f64 * dt);
                let theta = 0.5 * (ta + tb);
                for s in 0..np {
                    let (p, et, ep) = sphere_point(radius, theta, (s as f64 + 0.5) * dp);
                    let w = radius * radius * (ta.cos() - tb.cos()) * dp;
                    d.push_boundary(p, w, p / radius, 0, frame, frame_of(&[et, ep]));
                }
            }
            Ok(d)
        }
        _ => Err(Error::InvalidParameter(format!(
            "ball dimension must be 1, 2 or 3 (got {dim})"
        ))),
    }
}
