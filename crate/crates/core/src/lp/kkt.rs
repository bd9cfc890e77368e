use serde::{Deserialize, Serialize};

use super::{LinearProgram, LpSolution, Relation};

/// Largest absolute residual found in each KKT block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Row and bound violations of the primal point.
    pub primal: f64,
    /// Wrong-signed row duals or bound multipliers.
    pub dual_sign: f64,
    /// `|c_j - y^T A_j - d_j|`.
    pub stationarity: f64,
    pub complementarity: f64,
    pub tol: f64,
    pub pass: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal
            .max(self.dual_sign)
            .max(self.stationarity)
            .max(self.complementarity)
    }
}

pub fn check_kkt(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> KktReport {
    let x = &sol.x;
    let y = &sol.duals;
    let d = &sol.reduced_costs;
    let mut r = KktReport {
        tol,
        ..Default::default()
    };
    if x.len() != lp.num_columns() || y.len() != lp.num_rows() || d.len() != lp.num_columns() {
        r.primal = f64::INFINITY;
        return r;
    }

    let activity = lp.row_activity(x);
    for ((row, &ax), &yi) in lp.rows.iter().zip(&activity).zip(y) {
        let gap = ax - row.rhs;
        let (viol, wrong_sign) = match row.relation {
            Relation::Le => (gap.max(0.0), yi.max(0.0)),
            Relation::Ge => ((-gap).max(0.0), (-yi).max(0.0)),
            Relation::Eq => (gap.abs(), 0.0),
        };
        r.primal = r.primal.max(viol);
        r.dual_sign = r.dual_sign.max(wrong_sign);
        if row.relation != Relation::Eq {
            r.complementarity = r.complementarity.max((yi * gap).abs());
        }
    }

    let mut grad: Vec<f64> = lp.columns.iter().map(|c| c.cost).collect();
    for (row, &yi) in lp.rows.iter().zip(y) {
        for &(j, a) in &row.coeffs {
            grad[j] -= yi * a;
        }
    }
    for (j, c) in lp.columns.iter().enumerate() {
        let xj = x[j];
        r.primal = r.primal.max((c.lower - xj).max(0.0)).max((xj - c.upper).max(0.0));
        r.stationarity = r.stationarity.max((grad[j] - d[j]).abs());
        let (dp, dm) = (d[j].max(0.0), (-d[j]).max(0.0));
        if c.lower.is_finite() {
            r.complementarity = r.complementarity.max(dp * (xj - c.lower).abs());
        } else {
            r.dual_sign = r.dual_sign.max(dp);
        }
        if c.upper.is_finite() {
            r.complementarity = r.complementarity.max(dm * (c.upper - xj).abs());
        } else {
            r.dual_sign = r.dual_sign.max(dm);
        }
    }
    r.pass = r.max_residual() <= tol;
    r
}
