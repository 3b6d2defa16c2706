//! Distribution functions, rearrangements and the inequalities built on them.
//!
//! A nodal function is read as a step function: node `i` carries the value
//! `u_i` on a cell of measure `w_i`. Its decreasing rearrangement `u^#` on
//! `[0, |Ω|]` then has plateaus of lengths `w_i` in decreasing order of
//! `|u_i|`, which makes equimeasurability exact at the discrete level.
//! Symmetric rearrangements live on the ball `Ω*` of the same measure: its
//! nodes are taken in order of increasing radius, node `j` owns the measure
//! slot `[S_{j-1}, S_j)` and receives `u^#` at the slot midpoint.

mod faber_krahn;
mod suite;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ball_with_measure, DomainShape, QuadratureDomain, Vec3};
use crate::kernels::Kernel;

pub use faber_krahn::{faber_krahn_compare, faber_krahn_scenario, FaberKrahnReport, ScenarioFaberKrahn};
pub use suite::{rearrangement_suite, SuiteReport};

/// Largest node count accepted by the dense Riesz double sum.
pub const RIESZ_LIMIT: usize = 400;

/// Nodal values on a quadrature domain.
#[derive(Clone, Debug)]
pub struct NodalFunction {
    pub domain: Arc<QuadratureDomain>,
    pub values: Vec<f64>,
}

impl NodalFunction {
    pub fn new(domain: Arc<QuadratureDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                domain.len()
            )));
        }
        Ok(NodalFunction { domain, values })
    }

    pub fn from_fn<F: Fn(&crate::geometry::Vec3) -> f64>(domain: Arc<QuadratureDomain>, f: F) -> Self {
        let values = domain.nodes.iter().map(f).collect();
        NodalFunction { domain, values }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }

    /// `∫ Φ(u)` by the node quadrature.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        self.values.iter().zip(&self.domain.weights).map(|(v, w)| phi(*v) * w).sum()
    }

    /// Discrete distribution function of `|u|`.
    pub fn distribution(&self) -> DistributionFunction {
        distribution_function(self)
    }
}

/// `μ(t) = Σ { w_i : |u_i| > t }`, stored as the sorted levels and the
/// cumulative measure above each of them.
#[derive(Clone, Debug)]
pub struct DistributionFunction {
    levels: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DistributionFunction {
    pub fn eval(&self, t: f64) -> f64 {
        let count = self.levels.partition_point(|v| *v > t);
        if count == 0 {
            0.0
        } else {
            self.cumulative[count - 1]
        }
    }

    pub fn max_level(&self) -> f64 {
        self.levels.first().copied().unwrap_or(0.0)
    }
}

pub fn distribution_function(u: &NodalFunction) -> DistributionFunction {
    let profile = RearrangementProfile::of(u);
    DistributionFunction {
        levels: profile.values,
        cumulative: profile.ends,
    }
}

/// The decreasing rearrangement `u^#` of `|u|` as a right-continuous step
/// function on `[0, |Ω|]`, and its increasing counterpart
/// `u_#(s) = u^#(|Ω| - s)`.
#[derive(Clone, Debug)]
pub struct RearrangementProfile {
    /// Plateau values, non-increasing.
    pub values: Vec<f64>,
    /// Right end of each plateau.
    pub ends: Vec<f64>,
    pub total: f64,
}

impl RearrangementProfile {
    pub fn of(u: &NodalFunction) -> Self {
        let mut pairs: Vec<(f64, f64)> =
            u.values.iter().zip(&u.domain.weights).map(|(v, w)| (v.abs(), *w)).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut acc = 0.0;
        let mut values = Vec::with_capacity(pairs.len());
        let mut ends = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            acc += w;
            values.push(v);
            ends.push(acc);
        }
        RearrangementProfile { values, ends, total: acc }
    }

    fn plateau(&self, s: f64) -> Option<usize> {
        if s < 0.0 {
            return (!self.values.is_empty()).then_some(0);
        }
        let k = self.ends.partition_point(|e| *e <= s);
        (k < self.values.len()).then_some(k)
    }

    /// `u^#(s)`, zero beyond `|Ω|`.
    pub fn decreasing(&self, s: f64) -> f64 {
        self.plateau(s).map_or(0.0, |k| self.values[k])
    }

    /// `u_#(s) = u^#(|Ω| - s)`.
    pub fn increasing(&self, s: f64) -> f64 {
        self.decreasing(self.total - s)
    }

    /// Left limit `u^#(s^-)`.
    fn decreasing_left(&self, s: f64) -> f64 {
        let k = self.ends.partition_point(|e| *e < s);
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// Plateau breakpoints, `0` and `|Ω|` included.
    fn breakpoints(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.ends.iter().copied()).collect()
    }
}

/// Measure slots of the ball nodes, in order of increasing radius.
struct Slots {
    order: Vec<usize>,
    starts: Vec<f64>,
    ends: Vec<f64>,
}

impl Slots {
    fn of(star: &QuadratureDomain) -> Self {
        let mut order: Vec<usize> = (0..star.len()).collect();
        order.sort_by(|&i, &j| star.nodes[i].norm().total_cmp(&star.nodes[j].norm()).then(i.cmp(&j)));
        let mut starts = Vec::with_capacity(order.len());
        let mut ends = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for &i in &order {
            starts.push(acc);
            acc += star.weights[i];
            ends.push(acc);
        }
        Slots { order, starts, ends }
    }
}

/// Which symmetric rearrangement to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `u*`, radially non-increasing.
    Decreasing,
    /// `u_*`, radially non-decreasing.
    Increasing,
}

/// The ball `Ω*` with `|Ω*| = |Ω|`, on the radially structured grid at the
/// resolution of `dom`. A domain that is already a ball is recentred and
/// keeps its own quadrature, so that `Ω* = Ω` holds exactly.
pub fn star_domain(dom: &QuadratureDomain) -> Result<Arc<QuadratureDomain>> {
    let recentred = |center: Vec3, dim: usize, radius: f64| {
        let mut d = dom.clone();
        d.nodes.iter_mut().chain(d.boundary_nodes.iter_mut()).for_each(|x| *x -= center);
        d.shape = DomainShape::Ball { dim, radius };
        Arc::new(d)
    };
    Ok(match dom.shape {
        DomainShape::Ball { .. } => Arc::new(dom.clone()),
        DomainShape::Interval { a, b } => recentred(Vec3::new(0.5 * (a + b), 0.0, 0.0), 1, 0.5 * (b - a)),
        DomainShape::Disk { center, radius } => recentred(Vec3::new(center[0], center[1], 0.0), 2, radius),
        _ => Arc::new(ball_with_measure(dom.measure(), dom.intrinsic_dim, dom.resolution)?),
    })
}

/// Symmetric rearrangement of `|u|` onto a prebuilt ball `star`.
pub fn rearrange_onto(u: &NodalFunction, star: Arc<QuadratureDomain>, direction: Direction) -> NodalFunction {
    let profile = RearrangementProfile::of(u);
    let slots = Slots::of(&star);
    let mut values = vec![0.0; star.len()];
    for (k, &i) in slots.order.iter().enumerate() {
        let mid = 0.5 * (slots.starts[k] + slots.ends[k]);
        values[i] = match direction {
            Direction::Decreasing => profile.decreasing(mid),
            Direction::Increasing => profile.increasing(mid),
        };
    }
    NodalFunction { domain: star, values }
}

/// `u*(x) = u^#(c_n |x|^n)` on `Ω*`.
pub fn symmetric_decreasing(u: &NodalFunction) -> Result<NodalFunction> {
    Ok(rearrange_onto(u, star_domain(&u.domain)?, Direction::Decreasing))
}

/// `u_*(x) = u_#(c_n |x|^n)` on `Ω*`.
pub fn symmetric_increasing(u: &NodalFunction) -> Result<NodalFunction> {
    Ok(rearrange_onto(u, star_domain(&u.domain)?, Direction::Increasing))
}

/// Monotone test functions for the layer-cake identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phi {
    /// `t^p` with `p > 0`: increasing, `Φ(0) = 0`.
    Power { p: f64 },
    /// `1 / (t - m + ε)`: decreasing to zero, defined for `t > m - ε`.
    InverseShift { m: f64, eps: f64 },
}

impl Phi {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Phi::Power { p } => t.powf(p),
            Phi::InverseShift { m, eps } => 1.0 / (t - m + eps),
        }
    }

    pub fn increasing(&self) -> bool {
        matches!(self, Phi::Power { .. })
    }

    /// Checks the declared monotonicity on the sorted sample `levels`
    /// (non-increasing).
    fn validate(&self, levels: &[f64]) -> Result<()> {
        match *self {
            Phi::Power { p } if !(p > 0.0) => {
                return Err(Error::Monotonicity(format!("t^{p} is not increasing with Φ(0) = 0")))
            }
            Phi::InverseShift { m, eps } => {
                if let Some(t) = levels.iter().find(|t| **t - m + eps <= 0.0) {
                    return Err(Error::Monotonicity(format!(
                        "1/(t - {m} + {eps}) is not defined and decreasing at t = {t}"
                    )));
                }
            }
            _ => {}
        }
        let vals: Vec<f64> = levels.iter().map(|t| self.eval(*t)).collect();
        let ok = vals.windows(2).all(|w| {
            if self.increasing() {
                w[0] >= w[1]
            } else {
                w[0] <= w[1]
            }
        });
        if ok && vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Monotonicity(format!("{self:?} on the sampled values")))
        }
    }
}

/// `∫_{Ω*} Φ(u*)`, `∫_Ω Φ(|u|)` and `∫_{Ω*} Φ(u_*)`.
#[derive(Clone, Debug)]
pub struct LayerCakeReport {
    pub decreasing: f64,
    pub direct: f64,
    pub increasing: f64,
    /// Largest pairwise difference.
    pub gap: f64,
    /// Bound on the quadrature error of the rearranged integrals: the total
    /// variation of `Φ ∘ u^#` inside each ball slot, weighted by the slot.
    pub tolerance: f64,
}

impl LayerCakeReport {
    pub fn passed(&self) -> bool {
        self.gap <= self.tolerance
    }
}

pub fn layer_cake_check(u: &NodalFunction, phi: &Phi) -> Result<LayerCakeReport> {
    let profile = RearrangementProfile::of(u);
    phi.validate(&profile.values)?;
    let star = star_domain(&u.domain)?;
    let slots = Slots::of(&star);
    let dec = rearrange_onto(u, star.clone(), Direction::Decreasing);
    let inc = rearrange_onto(u, star, Direction::Increasing);
    let decreasing = dec.integrate(|v| phi.eval(v));
    let increasing = inc.integrate(|v| phi.eval(v));
    let direct = u.integrate(|v| phi.eval(v.abs()));

    let spread = |a: f64, b: f64| (phi.eval(profile.decreasing(a)) - phi.eval(profile.decreasing_left(b))).abs();
    let (mut tol_dec, mut tol_inc) = (0.0, 0.0);
    for k in 0..slots.order.len() {
        let (s0, s1) = (slots.starts[k], slots.ends[k]);
        let w = s1 - s0;
        tol_dec += w * spread(s0, s1);
        tol_inc += w * spread(profile.total - s1, profile.total - s0);
    }
    let scale = direct.abs().max(decreasing.abs()).max(1e-300);
    let tolerance = tol_dec.max(tol_inc) + 1e-12 * scale;
    let gap = (decreasing - direct).abs().max((increasing - direct).abs()).max((decreasing - increasing).abs());
    Ok(LayerCakeReport {
        decreasing,
        direct,
        increasing,
        gap,
        tolerance,
    })
}

/// Two sides of a rearrangement inequality; `slack ≥ 0` when it holds.
#[derive(Clone, Copy, Debug)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

fn require_nonnegative(f: &NodalFunction, what: &str) -> Result<()> {
    if f.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be nonnegative")))
    }
}

fn require_same_domain(f: &NodalFunction, g: &NodalFunction) -> Result<()> {
    if Arc::ptr_eq(&f.domain, &g.domain) || f.domain.nodes == g.domain.nodes {
        Ok(())
    } else {
        Err(Error::DimensionMismatch("functions live on different domains".into()))
    }
}

/// `∫_Ω φ ψ ≥ ∫_{Ω*} φ_* ψ*`. The right side is integrated exactly in the
/// radial measure variable `s = c_n |x|^n`, over the merged plateaus of the
/// two step functions, so the discrete slack is nonnegative up to rounding.
pub fn hardy_littlewood_check(phi: &NodalFunction, psi: &NodalFunction) -> Result<InequalityReport> {
    require_nonnegative(phi, "φ")?;
    require_nonnegative(psi, "ψ")?;
    require_same_domain(phi, psi)?;
    let lhs: f64 = phi
        .values
        .iter()
        .zip(&psi.values)
        .zip(&phi.domain.weights)
        .map(|((a, b), w)| a * b * w)
        .sum();
    let p = RearrangementProfile::of(phi);
    let q = RearrangementProfile::of(psi);
    let total = p.total;
    let mut cuts: Vec<f64> = q
        .breakpoints()
        .into_iter()
        .chain(p.breakpoints().into_iter().map(|s| total - s))
        .map(|s| s.clamp(0.0, total))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rhs: f64 = cuts
        .windows(2)
        .map(|c| {
            let mid = 0.5 * (c[0] + c[1]);
            (c[1] - c[0]) * p.increasing(mid) * q.decreasing(mid)
        })
        .sum();
    Ok(InequalityReport {
        lhs,
        rhs,
        slack: lhs - rhs,
    })
}

fn riesz_sum(f: &NodalFunction, kernel: &Kernel, h: &NodalFunction) -> f64 {
    let dom = &f.domain;
    let mut total = 0.0;
    for i in 0..dom.len() {
        let hi = h.values[i] * dom.weights[i];
        if hi == 0.0 {
            continue;
        }
        let row: f64 = (0..dom.len())
            .map(|j| f.values[j] * dom.weights[j] * kernel.value((dom.nodes[j] - dom.nodes[i]).norm()))
            .sum();
        total += hi * row;
    }
    total
}

/// `∫∫ f(y) g(y - x) h(x) ≤ ∫∫ f*(y) g*(y - x) h*(x)` with `g` a radial
/// non-increasing kernel, so `g* = g`. Both sides are dense double sums.
pub fn riesz_check(f: &NodalFunction, kernel: &Kernel, h: &NodalFunction) -> Result<InequalityReport> {
    require_nonnegative(f, "f")?;
    require_nonnegative(h, "h")?;
    require_same_domain(f, h)?;
    if f.domain.len() > RIESZ_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "Riesz check is limited to {RIESZ_LIMIT} nodes (got {})",
            f.domain.len()
        )));
    }
    let star = star_domain(&f.domain)?;
    let fs = rearrange_onto(f, star.clone(), Direction::Decreasing);
    let hs = rearrange_onto(h, star, Direction::Decreasing);
    let lhs = riesz_sum(f, kernel, h);
    let rhs = riesz_sum(&fs, kernel, &hs);
    Ok(InequalityReport {
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}
