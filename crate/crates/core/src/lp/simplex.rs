//! Two-phase primal simplex on a dense tableau with bounded variables.
//!
//! Every row gets a slack column (`a_i x + s_i = b_i`) whose bounds encode
//! the relation, so the slack columns of the tableau always hold `B^-1`.
//! Rows whose initial residual cannot be absorbed by the slack get an
//! artificial column for phase one. Pricing is Dantzig's rule; a run of
//! degenerate pivots switches to Bland's rule until the objective moves.

use super::{LinearProgram, LpSolution, LpStatus, Relation};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            bland_after: 50,
            max_iterations: 50_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable parked at zero.
    Zero,
}

struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn price(&mut self) {
        for j in 0..self.width {
            let mut v = self.cost[j];
            for i in 0..self.m {
                v -= self.cost[self.basis[i]] * self.at(i, j);
            }
            self.d[j] = v;
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn choose_entering(&self, bland: bool, tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.width {
            if self.lo[j] == self.up[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic => continue,
                State::Lower if dj < -tol => 1.0,
                State::Upper if dj > tol => -1.0,
                State::Zero if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| dj.abs() > s) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn run(&mut self, opts: &SolverOptions) -> Outcome {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Outcome::IterationLimit;
            }
            let bland = degenerate >= opts.bland_after;
            let Some((q, dir)) = self.choose_entering(bland, opts.optimality_tol) else {
                return Outcome::Optimal;
            };
            self.iterations += 1;

            // Ratio test over basic variables, then the entering variable's own range.
            let mut step = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let mut leave_piv = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.at(i, q);
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let limit = if alpha > 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    ((self.x[b] - self.lo[b]) / alpha).max(0.0)
                } else {
                    if self.up[b] == f64::INFINITY {
                        continue;
                    }
                    ((self.up[b] - self.x[b]) / -alpha).max(0.0)
                };
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                b < self.basis[l]
                            } else {
                                alpha.abs() > leave_piv
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = if leave.is_none() { limit } else { step.min(limit) };
                    leave = Some(i);
                    leave_piv = alpha.abs();
                }
            }
            let range = self.up[q] - self.lo[q];
            let flip = range.is_finite() && range <= step;
            if flip {
                step = range;
            }
            if step == f64::INFINITY {
                return Outcome::Unbounded;
            }
            if step > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }

            self.x[q] += dir * step;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= dir * step * a;
                }
            }
            if flip {
                if dir > 0.0 {
                    self.state[q] = State::Upper;
                    self.x[q] = self.up[q];
                } else {
                    self.state[q] = State::Lower;
                    self.x[q] = self.lo[q];
                }
                continue;
            }
            let r = leave.expect("finite step has a leaving row");
            let l = self.basis[r];
            let alpha = dir * self.at(r, q);
            if alpha > 0.0 {
                self.state[l] = State::Lower;
                self.x[l] = self.lo[l];
            } else {
                self.state[l] = State::Upper;
                self.x[l] = self.up[l];
            }
            self.pivot(r, q);
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.at(r, q);
        let row_start = r * w;
        for j in 0..w {
            self.t[row_start + j] /= piv;
        }
        let pivot_row: Vec<f64> = self.t[row_start..row_start + w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, q);
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, p) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        self.d[q] = 0.0;
        self.basis[r] = q;
        self.state[q] = State::Basic;
    }
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    let n = lp.num_columns();
    let m = lp.num_rows();
    let fail = |status| LpSolution {
        status,
        x: vec![0.0; n],
        duals: vec![0.0; m],
        reduced_costs: vec![0.0; n],
        objective: 0.0,
        iterations: 0,
    };
    if lp.validate().is_err() {
        return fail(LpStatus::Invalid);
    }

    // Dense copy of the constraint matrix.
    let mut a = vec![0.0; m * n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            a[i * n + j] += v;
        }
    }

    let mut lo: Vec<f64> = lp.columns.iter().map(|c| c.lower).collect();
    let mut up: Vec<f64> = lp.columns.iter().map(|c| c.upper).collect();
    let mut state = Vec::with_capacity(n + 2 * m);
    let mut x = Vec::with_capacity(n + 2 * m);
    for j in 0..n {
        if lo[j].is_finite() {
            state.push(State::Lower);
            x.push(lo[j]);
        } else if up[j].is_finite() {
            state.push(State::Upper);
            x.push(up[j]);
        } else {
            state.push(State::Zero);
            x.push(0.0);
        }
    }
    for row in &lp.rows {
        let (l, u) = match row.relation {
            Relation::Le => (0.0, f64::INFINITY),
            Relation::Ge => (f64::NEG_INFINITY, 0.0),
            Relation::Eq => (0.0, 0.0),
        };
        lo.push(l);
        up.push(u);
    }

    // Residual each slack has to absorb with structurals at their start values.
    let resid: Vec<f64> = (0..m)
        .map(|i| lp.rows[i].rhs - (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>())
        .collect();
    let mut art_rows = Vec::new();
    let mut sign = vec![1.0; m];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        let s = n + i;
        let clamped = resid[i].clamp(lo[s], up[s]);
        if clamped == resid[i] {
            state.push(State::Basic);
            x.push(resid[i]);
            basis[i] = s;
        } else {
            let st = if clamped == lo[s] { State::Lower } else { State::Upper };
            state.push(st);
            x.push(clamped);
            sign[i] = if resid[i] > clamped { 1.0 } else { -1.0 };
            art_rows.push(i);
        }
    }
    let width = n + m + art_rows.len();
    for (k, &i) in art_rows.iter().enumerate() {
        let col = n + m + k;
        lo.push(0.0);
        up.push(f64::INFINITY);
        state.push(State::Basic);
        let s = n + i;
        x.push((resid[i] - x[s]).abs());
        basis[i] = col;
    }

    let mut t = vec![0.0; m * width];
    for i in 0..m {
        let scale = sign[i];
        for j in 0..n {
            t[i * width + j] = a[i * n + j] * scale;
        }
        t[i * width + n + i] = scale;
    }
    for (k, &i) in art_rows.iter().enumerate() {
        t[i * width + n + m + k] = 1.0;
    }

    let mut tab = Tableau {
        m,
        n,
        width,
        t,
        basis,
        state,
        x,
        lo,
        up,
        cost: vec![0.0; width],
        d: vec![0.0; width],
        iterations: 0,
    };

    if !art_rows.is_empty() {
        for k in 0..art_rows.len() {
            tab.cost[n + m + k] = 1.0;
        }
        tab.price();
        match tab.run(opts) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => return finish(lp, &tab, &a, LpStatus::IterationLimit),
            Outcome::Unbounded => return finish(lp, &tab, &a, LpStatus::Infeasible),
        }
        let infeas: f64 = (n + m..width).map(|j| tab.x[j]).sum();
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeas > opts.feasibility_tol * scale {
            let mut out = finish(lp, &tab, &a, LpStatus::Infeasible);
            out.iterations = tab.iterations;
            return out;
        }
        // Retire artificials: fix them at zero and pivot basic ones out where possible.
        for j in n + m..width {
            tab.up[j] = 0.0;
            if tab.state[j] != State::Basic {
                tab.state[j] = State::Lower;
                tab.x[j] = 0.0;
            }
        }
        for r in 0..m {
            let b = tab.basis[r];
            if b < n + m {
                continue;
            }
            let candidate = (0..n + m)
                .filter(|&j| tab.state[j] != State::Basic)
                .max_by(|&p, &q| tab.at(r, p).abs().total_cmp(&tab.at(r, q).abs()));
            if let Some(j) = candidate {
                if tab.at(r, j).abs() > 1e-7 {
                    tab.x[b] = 0.0;
                    tab.state[b] = State::Lower;
                    tab.pivot(r, j);
                }
            }
        }
    }

    for j in 0..width {
        tab.cost[j] = if j < n { lp.columns[j].cost } else { 0.0 };
    }
    tab.price();
    let status = match tab.run(opts) {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    finish(lp, &tab, &a, status)
}

/// Recompute basic values, duals and reduced costs from `B^-1` and the
/// original data rather than trusting the running tableau updates.
fn finish(lp: &LinearProgram, tab: &Tableau, a: &[f64], status: LpStatus) -> LpSolution {
    let (m, n, w) = (tab.m, tab.n, tab.width);
    let binv = |r: usize, i: usize| tab.t[r * w + n + i];

    // Column j of [A | I | diag(sign)] restricted to row i.
    let mut x = tab.x.clone();
    let mut rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
    for j in 0..w {
        if tab.state[j] == State::Basic || x[j] == 0.0 {
            continue;
        }
        if j < n {
            for (i, v) in rhs.iter_mut().enumerate() {
                *v -= a[i * n + j] * x[j];
            }
        } else if j < n + m {
            rhs[j - n] -= x[j];
        }
    }
    // Artificial columns are sign-scaled unit vectors; nonbasic ones sit at zero.
    for r in 0..m {
        let b = tab.basis[r];
        if b >= n + m {
            // Retired artificial: its row is redundant, keep it pinned at zero.
            x[b] = 0.0;
            continue;
        }
        x[b] = (0..m).map(|i| binv(r, i) * rhs[i]).sum();
    }
    let duals: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|r| tab.cost[tab.basis[r]] * binv(r, i)).sum())
        .collect();
    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| lp.columns[j].cost - (0..m).map(|i| duals[i] * a[i * n + j]).sum::<f64>())
        .collect();
    let xs = x[..n].to_vec();
    LpSolution {
        status,
        objective: lp.objective_value(&xs),
        x: xs,
        duals,
        reduced_costs,
        iterations: tab.iterations,
    }
}
