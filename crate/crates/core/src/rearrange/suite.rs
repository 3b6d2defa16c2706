use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    hardy_littlewood_check, layer_cake_check, riesz_check, symmetric_decreasing, symmetric_increasing,
    LayerCakeReport, NodalFunction, Phi,
};
use crate::error::Result;
use crate::geometry::{build_domain, DomainShape, QuadratureDomain, Vec3};
use crate::kernels::{make_kernel, KernelFamily};

/// Outcome of the randomized rearrangement checks.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    /// Largest `|μ_{u*}(t) - μ_u(t)|` and `|μ_{u_*}(t) - μ_u(t)|` over the
    /// sampled levels, in units of the largest ball node weight.
    pub equimeasure_defect: f64,
    pub levels: usize,
    /// `‖u‖_{L²(Ω)}` and `‖u*‖_{L²(Ω*)}`.
    pub l2: (f64, f64),
    pub l2_tolerance: f64,
    pub layer_cake_square: LayerCakeReport,
    pub layer_cake_inverse: LayerCakeReport,
    pub hardy_littlewood_min_slack: f64,
    pub riesz_min_slack: f64,
}

impl SuiteReport {
    pub fn equimeasurable(&self) -> bool {
        self.equimeasure_defect <= 1.0
    }

    pub fn l2_preserved(&self) -> bool {
        (self.l2.0 - self.l2.1).abs() <= self.l2_tolerance
    }
}

fn disk(res: usize) -> Result<Arc<QuadratureDomain>> {
    let shape = DomainShape::Disk {
        center: [0.0, 0.0],
        radius: 1.0,
    };
    Ok(Arc::new(build_domain(&shape, res)?))
}

/// Smooth random function: a few Gaussian bumps with random centers,
/// widths and heights, plus a random linear tilt.
fn random_smooth(rng: &mut ChaCha8Rng, dom: Arc<QuadratureDomain>) -> NodalFunction {
    let bumps: Vec<(Vec3, f64, f64)> = (0..4)
        .map(|_| {
            let c = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0);
            (c, rng.gen_range(0.2..0.8), rng.gen_range(0.2..1.0))
        })
        .collect();
    let tilt = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), 0.0);
    NodalFunction::from_fn(dom, |x| {
        let b: f64 = bumps.iter().map(|(c, w, a)| a * (-(x - c).norm_squared() / (w * w)).exp()).sum();
        b + tilt.dot(x) + 0.5
    })
}

fn random_values(rng: &mut ChaCha8Rng, dom: Arc<QuadratureDomain>) -> NodalFunction {
    let values = (0..dom.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    NodalFunction { domain: dom, values }
}

/// Equimeasurability at `levels` random levels, norm preservation, the
/// layer-cake identity for `t²` and `1/(t - m + ε)`, and `trials` seeded
/// random instances each of the Hardy–Littlewood and Riesz inequalities.
pub fn rearrangement_suite(seed: u64, trials: usize, levels: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = disk(40)?;
    let u = random_smooth(&mut rng, dom.clone());
    let mu = u.distribution();
    let us = symmetric_decreasing(&u)?;
    let ui = symmetric_increasing(&u)?;
    let (mu_s, mu_i) = (us.distribution(), ui.distribution());
    let wmax = us.domain.max_weight();
    let mut defect: f64 = 0.0;
    for _ in 0..levels {
        let t = rng.gen_range(0.0..mu.max_level());
        defect = defect.max((mu_s.eval(t) - mu.eval(t)).abs() / wmax);
        defect = defect.max((mu_i.eval(t) - mu.eval(t)).abs() / wmax);
    }

    let square = layer_cake_check(&u, &Phi::Power { p: 2.0 })?;
    let m = u.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let spread = mu.max_level() - m;
    let inverse = layer_cake_check(&u, &Phi::InverseShift { m, eps: 0.05 * spread })?;
    let l2 = (square.direct.sqrt(), square.decreasing.sqrt());
    let l2_tolerance = square.tolerance / (l2.0 + l2.1).max(1e-300);

    let hl_dom = disk(20)?;
    let riesz_dom = Arc::new(build_domain(&DomainShape::Interval { a: 0.0, b: 1.0 }, 120)?);
    let riesz_disk = disk(16)?;
    let k1 = make_kernel(KernelFamily::Tent, 0.2, 1)?;
    let k2 = make_kernel(KernelFamily::Tent, 0.6, 2)?;
    let seeds: Vec<u64> = (0..trials).map(|_| rng.gen()).collect();
    let slacks: Vec<(f64, f64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<(f64, f64)> {
            let mut r = ChaCha8Rng::seed_from_u64(*s);
            let (phi, psi) = if i % 2 == 0 {
                (random_values(&mut r, hl_dom.clone()), random_values(&mut r, hl_dom.clone()))
            } else {
                (random_smooth(&mut r, hl_dom.clone()), random_smooth(&mut r, hl_dom.clone()))
            };
            let hl = hardy_littlewood_check(&phi, &psi)?.slack;
            let riesz = if i % 2 == 0 {
                let f = random_values(&mut r, riesz_dom.clone());
                let h = random_values(&mut r, riesz_dom.clone());
                riesz_check(&f, &k1, &h)?.slack
            } else {
                let f = random_smooth(&mut r, riesz_disk.clone());
                let h = random_smooth(&mut r, riesz_disk.clone());
                riesz_check(&f, &k2, &h)?.slack
            };
            Ok((hl, riesz))
        })
        .collect::<Result<_>>()?;
    let hl_min = slacks.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let riesz_min = slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);

    Ok(SuiteReport {
        seed,
        trials,
        equimeasure_defect: defect,
        levels,
        l2,
        l2_tolerance,
        layer_cake_square: square,
        layer_cake_inverse: inverse,
        hardy_littlewood_min_slack: hl_min,
        riesz_min_slack: riesz_min,
    })
}
