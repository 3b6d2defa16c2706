use super::config::{Resolved, Task};
use super::report::{num, opt, Table, Verdict};
use crate::error::{Error, Result};
use crate::kernels::CoefficientRule;
use crate::operator::{principal_eigenpair, spectrum};
use crate::rearrange::{faber_krahn_scenario, rearrangement_suite};
use crate::scenarios::{scenario_hadamard, select_eigenpair};
use crate::shape::{eigenfunction_derivative, hadamard_derivative, pullback_check, HadamardOptions};

/// Numerical failure tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.error)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

type Out = std::result::Result<(Vec<Table>, Vec<String>), StageError>;

pub fn convention_label(o: &HadamardOptions) -> String {
    let curvature = match o.curvature {
        crate::geometry::CurvatureConvention::Dimensional => "dimensional",
        crate::geometry::CurvatureConvention::Unit => "unit",
    };
    format!("{}/{}", o.normal_rule.label(), curvature)
}

pub fn run_task(r: &Resolved) -> Out {
    match r.config.task {
        Task::Spectrum => spectrum_task(r),
        Task::Hadamard => hadamard_task(r),
        Task::Pullback => pullback_task(r),
        Task::EigfunDerivative => eigfun_task(r),
        Task::FaberKrahn => faber_krahn_task(r),
        Task::RearrangeSuite => suite_task(r),
    }
}

fn spectrum_task(r: &Resolved) -> Out {
    let sc = &r.scenario;
    let problem = sc.problem(sc.resolution).stage("build")?;
    let (_, op) = problem.assemble().stage("assembly")?;
    let rep = spectrum(&op).stage("eigensolve")?;
    let neumann = matches!(problem.rule, CoefficientRule::Neumann);
    let principal = principal_eigenpair(&rep).ok();
    let mut t = Table::new(
        "spectrum",
        &["scenario", "index", "kind", "lambda", "gap", "simple", "residual", "verdict"],
    );
    for (i, p) in rep.discrete.iter().enumerate() {
        let verdict = if i == 0 && neumann {
            Verdict::from_bool(p.value.abs() <= r.config.tolerances.neumann_zero)
        } else {
            Verdict::Info
        };
        t.push(vec![
            sc.name.to_string(),
            i.to_string(),
            "discrete".into(),
            num(p.value),
            num(p.gap),
            p.simple.to_string(),
            opt(p.residual),
            verdict.as_str().into(),
        ]);
    }
    let mut notes = vec![format!(
        "band [{}, {}] with tolerance {}; {} computed values inside; {} of {} nodes",
        num(rep.band.0),
        num(rep.band.1),
        num(rep.band_tol),
        rep.band_count,
        if rep.complete { "full spectrum" } else { "lowest eigenpairs" },
        op.len()
    )];
    if principal.is_none() {
        notes.push("no discrete eigenvalue below the band at this resolution".into());
        t.push(vec![
            sc.name.to_string(),
            String::new(),
            "principal".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            Verdict::Inconclusive.as_str().into(),
        ]);
    }
    Ok((vec![t], notes))
}

fn hadamard_task(r: &Resolved) -> Out {
    let sc = &r.scenario;
    let tol = r.config.tolerances.rel;
    let mut t = Table::new(
        "hadamard",
        &[
            "scenario",
            "field",
            "convention",
            "eigen_index",
            "lambda0",
            "term1",
            "term2",
            "term3",
            "term4",
            "formula",
            "fd_value",
            "rel_err",
            "verdict",
        ],
    );
    let mut notes = Vec::new();
    for f in &r.fields {
        let sh = scenario_hadamard(sc, f, sc.resolution, &r.steps).stage("hadamard")?;
        for (k, rep) in sh.reports.iter().enumerate() {
            let verdict = match (k, rep.rel_err()) {
                (0, Some(e)) => Verdict::from_bool(e <= tol),
                _ => Verdict::Info,
            };
            let terms = rep.terms.as_array();
            t.push(vec![
                sc.name.to_string(),
                f.name.clone(),
                convention_label(&rep.options),
                sh.eigen_index.to_string(),
                num(rep.lambda0),
                num(terms[0]),
                num(terms[1]),
                num(terms[2]),
                num(terms[3]),
                num(rep.formula),
                opt(rep.fd_value()),
                opt(rep.rel_err()),
                verdict.as_str().into(),
            ]);
        }
        if let Some(best) = sh.best_convention() {
            notes.push(format!(
                "{}: closed-form specialization {}; FD selects {}",
                f.name,
                num(sh.specialized),
                convention_label(&best.options)
            ));
        }
    }
    Ok((vec![t], notes))
}

fn pullback_task(r: &Resolved) -> Out {
    let sc = &r.scenario;
    let problem = sc.problem(sc.resolution).stage("build")?;
    let rep = pullback_check(&r.embedding, &problem, None).stage("pullback")?;
    let mut lists = Table::new("pullback-eigenvalues", &["scenario", "index", "direct", "pullback", "abs_diff"]);
    for i in 0..rep.direct.len().max(rep.pullback.len()) {
        let d = rep.direct.get(i).copied();
        let p = rep.pullback.get(i).copied();
        lists.push(vec![
            sc.name.to_string(),
            i.to_string(),
            opt(d),
            opt(p),
            opt(d.zip(p).map(|(a, b)| (a - b).abs())),
        ]);
    }
    let mut summary = Table::new(
        "pullback",
        &["scenario", "distance", "band_direct_lo", "band_direct_hi", "band_pullback_lo", "band_pullback_hi", "verdict"],
    );
    let ok = rep.distance <= r.config.tolerances.pullback && rep.bands_equal();
    summary.push(vec![
        sc.name.to_string(),
        num(rep.distance),
        num(rep.band_direct.0),
        num(rep.band_direct.1),
        num(rep.band_pullback.0),
        num(rep.band_pullback.1),
        Verdict::from_bool(ok).as_str().into(),
    ]);
    Ok((vec![summary, lists], Vec::new()))
}

fn eigfun_task(r: &Resolved) -> Out {
    let sc = &r.scenario;
    let tol = r.config.tolerances;
    let problem = sc.problem(sc.resolution).stage("build")?;
    let (coeff, op) = problem.assemble().stage("assembly")?;
    let (index, pair) = select_eigenpair(&problem, sc.eigen).stage("eigensolve")?;
    let options = sc.preferred();
    let mut t = Table::new(
        "eigfun-derivative",
        &["scenario", "field", "eigen_index", "lambda0", "dlambda", "solvability", "residual", "orthogonality", "verdict"],
    );
    for f in &r.fields {
        let h = hadamard_derivative(&problem, &coeff, &op, &pair, &f.field, options).stage("hadamard")?;
        let e = eigenfunction_derivative(&problem, &coeff, &op, &pair, &f.field, h.formula, options, f64::INFINITY)
            .stage("eigenfunction derivative")?;
        let orth = op.inner(&e.w, &pair.vector);
        let ok = e.solvability.abs() <= tol.solvability && e.residual <= tol.eigfun_residual && orth.abs() <= tol.orthogonality;
        t.push(vec![
            sc.name.to_string(),
            f.name.clone(),
            index.to_string(),
            num(pair.value),
            num(h.formula),
            num(e.solvability),
            num(e.residual),
            num(orth),
            Verdict::from_bool(ok).as_str().into(),
        ]);
    }
    Ok((vec![t], Vec::new()))
}

fn faber_krahn_task(r: &Resolved) -> Out {
    let sc = &r.scenario;
    let fk = faber_krahn_scenario(sc, sc.resolution, sc.refined).stage("faber-krahn")?;
    let mut t = Table::new(
        "faber-krahn",
        &[
            "scenario",
            "lambda1_omega",
            "lambda1_star",
            "margin",
            "tol_spec",
            "verdict",
            "lambda1_ball_rule",
            "nodes_omega",
            "nodes_star",
        ],
    );
    let verdict = match fk.passed() {
        Some(ok) => Verdict::from_bool(ok),
        None => Verdict::Inconclusive,
    };
    let c = &fk.coarse;
    t.push(vec![
        sc.name.to_string(),
        opt(c.lambda_omega),
        opt(c.lambda_star),
        opt(c.margin),
        num(fk.tol_spec),
        verdict.as_str().into(),
        opt(c.lambda_ball_rule),
        c.nodes_omega.to_string(),
        c.nodes_star.to_string(),
    ]);
    let notes = vec![format!(
        "existence hint: Ω diverging = {}, Ω* diverging = {}",
        c.existence_omega.diverging, c.existence_star.diverging
    )];
    Ok((vec![t], notes))
}

fn suite_task(r: &Resolved) -> Out {
    let s = rearrangement_suite(r.config.seed, r.trials, 20).stage("rearrangement suite")?;
    let slack = r.config.tolerances.slack;
    let mut t = Table::new("rearrange-suite", &["check", "value", "tolerance", "verdict"]);
    let mut row = |check: &str, value: f64, tolerance: f64, ok: bool| {
        t.push(vec![check.into(), num(value), num(tolerance), Verdict::from_bool(ok).as_str().into()]);
    };
    row("equimeasurability_defect_in_weights", s.equimeasure_defect, 1.0, s.equimeasurable());
    row("l2_difference", (s.l2.0 - s.l2.1).abs(), s.l2_tolerance, s.l2_preserved());
    let sq = &s.layer_cake_square;
    row("layer_cake_square_gap", sq.gap, sq.tolerance, sq.passed());
    let inv = &s.layer_cake_inverse;
    row("layer_cake_inverse_gap", inv.gap, inv.tolerance, inv.passed());
    row("hardy_littlewood_min_slack", s.hardy_littlewood_min_slack, -slack, s.hardy_littlewood_min_slack >= -slack);
    row("riesz_min_slack", s.riesz_min_slack, -slack, s.riesz_min_slack >= -slack);
    Ok((vec![t], vec![format!("seed {}, {} trials", s.seed, s.trials)]))
}
