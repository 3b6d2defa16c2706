use rayon::prelude::*;

use super::report::{num, Table, Verdict};
use super::tasks::StageError;
use crate::error::Result;
use crate::operator::lowest_eigenpairs;
use crate::scenarios::{scenario_hadamard, Scenario};

/// Increments below this fraction of the value count as converged.
const NOISE_FLOOR: f64 = 1e-10;

/// Values of one quantity along a sweep.
#[derive(Clone, Debug)]
pub struct Series {
    pub values: Vec<f64>,
}

impl Series {
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }

    /// Each increment is smaller than the previous one, or already at the
    /// noise floor.
    pub fn shrinking(&self) -> bool {
        let scale = self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let floor = NOISE_FLOOR * scale;
        self.increments().windows(2).all(|d| d[1] < d[0] || d[1] <= floor)
    }
}

/// One row of a convergence sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub parameter: f64,
    pub nodes: usize,
    pub lambda1: f64,
    pub lambda_selected: f64,
    pub formula: f64,
}

/// `λ1`, the followed eigenvalue and the formula value of the scenario's
/// first field (preferred convention) at `resolution` and kernel width `delta`.
pub fn sweep_point(sc: &Scenario, resolution: usize, delta: f64) -> Result<SweepPoint> {
    let mut sc = sc.clone();
    sc.delta = delta;
    let field = &sc.fields[0];
    let sh = scenario_hadamard(&sc, field, resolution, &[])?;
    let lambda1 = if sh.eigen_index == 0 {
        sh.lambda0
    } else {
        let (_, op) = sc.problem(resolution)?.assemble()?;
        lowest_eigenpairs(&op, 1)?[0].value
    };
    let nodes = sc.problem(resolution)?.domain.len();
    Ok(SweepPoint {
        parameter: resolution as f64,
        nodes,
        lambda1,
        lambda_selected: sh.lambda0,
        formula: sh.reports[0].formula,
    })
}

/// Parameter driven by a sweep.
#[derive(Clone, Debug)]
pub enum SweepAxis {
    Resolution(Vec<usize>),
    /// Kernel widths at the scenario's reference resolution.
    Delta(Vec<f64>),
}

pub struct SweepResult {
    pub table: Table,
    pub lambda1: Series,
    pub formula: Series,
}

pub fn sweep_scenario(sc: &Scenario, axis: &SweepAxis) -> std::result::Result<SweepResult, StageError> {
    let (name, points): (&str, Vec<(f64, Result<SweepPoint>)>) = match axis {
        SweepAxis::Resolution(rs) => (
            "resolution",
            rs.par_iter().map(|r| (*r as f64, sweep_point(sc, *r, sc.delta))).collect(),
        ),
        SweepAxis::Delta(ds) => (
            "delta",
            ds.par_iter().map(|d| (*d, sweep_point(sc, sc.resolution, *d))).collect(),
        ),
    };
    let mut rows = Vec::new();
    for (p, r) in points {
        let mut point = r.map_err(|error| StageError { stage: "sweep", error })?;
        point.parameter = p;
        rows.push(point);
    }
    let lambda1 = Series {
        values: rows.iter().map(|p| p.lambda1).collect(),
    };
    let formula = Series {
        values: rows.iter().map(|p| p.formula).collect(),
    };
    let (dl, df) = (lambda1.increments(), formula.increments());
    let verdict = match axis {
        SweepAxis::Resolution(_) => Verdict::from_bool(lambda1.shrinking() && formula.shrinking()),
        SweepAxis::Delta(_) => Verdict::Info,
    };
    let mut table = Table::new(
        "sweep",
        &[
            "scenario",
            "parameter",
            "value",
            "nodes",
            "lambda1",
            "lambda_selected",
            "formula",
            "increment_lambda1",
            "increment_formula",
            "verdict",
        ],
    );
    for (i, p) in rows.iter().enumerate() {
        let inc = |d: &[f64]| if i == 0 { String::new() } else { num(d[i - 1]) };
        let last = i + 1 == rows.len();
        table.push(vec![
            sc.name.to_string(),
            name.to_string(),
            match axis {
                SweepAxis::Resolution(_) => (p.parameter as usize).to_string(),
                SweepAxis::Delta(_) => num(p.parameter),
            },
            p.nodes.to_string(),
            num(p.lambda1),
            num(p.lambda_selected),
            num(p.formula),
            inc(&dl),
            inc(&df),
            if last { verdict } else { Verdict::Info }.as_str().into(),
        ]);
    }
    Ok(SweepResult { table, lambda1, formula })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::find;

    #[test]
    fn series_shrinking_rule() {
        assert!(Series { values: vec![1.0, 1.5, 1.6] }.shrinking());
        assert!(!Series { values: vec![1.0, 1.1, 1.3] }.shrinking());
        assert!(Series { values: vec![0.0, 1e-15, -1e-14] }.shrinking());
    }

    #[test]
    fn interval_resolution_sweep_converges() {
        let sc = find("dirichlet-interval").unwrap();
        let r = sweep_scenario(&sc, &SweepAxis::Resolution(vec![25, 50, 100])).unwrap();
        assert_eq!(r.table.rows.len(), 3);
        assert!(r.lambda1.shrinking() && r.formula.shrinking(), "{:?} {:?}", r.lambda1, r.formula);
        assert_eq!(r.table.verdicts().last(), Some(&Verdict::Pass));
    }

    #[test]
    fn delta_sweep_is_informational() {
        let sc = find("neumann-interval").unwrap();
        let r = sweep_scenario(&sc, &SweepAxis::Delta(vec![0.2, 0.25, 0.3])).unwrap();
        assert!(r.table.verdicts().iter().all(|v| *v == Verdict::Info));
    }
}
