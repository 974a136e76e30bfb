//! Dense LU, damped Newton, bounded simplex and successive linear programming.

pub mod dense;
mod newton;
mod report;
pub mod simplex;

pub use newton::{newton_solve, solve_linear};
pub use report::{DutyState, SolveOptions, SolveReport, Status, StreamState, StreamTable};
pub use simplex::{solve_lp, LinearProgram, LpResult};

use crate::error::{Error, Result};
use crate::instantiation::EquationSystem;
use newton::{pinned_start, settle_bounds};

const SLP_MAX_ITER: usize = 200;

/// First-order model of `sys` around `x0` over the free variables:
/// `J x = J x0 - r(x0)`. Exact when the system is effectively linear.
pub fn linear_model(sys: &EquationSystem, x0: &[f64], free: &[usize]) -> LinearProgram {
    let mut col = vec![usize::MAX; sys.n_vars()];
    for (k, &i) in free.iter().enumerate() {
        col[i] = k;
    }
    let mut a = vec![vec![0.0; free.len()]; sys.n_rows()];
    for (row, i, v) in sys.jacobian_triplets(x0) {
        if col[i] != usize::MAX {
            a[row][col[i]] += v;
        }
    }
    let r = sys.residuals(x0);
    let b = (0..sys.n_rows())
        .map(|i| {
            free.iter()
                .enumerate()
                .map(|(k, &j)| a[i][k] * x0[j])
                .sum::<f64>()
                - r[i]
        })
        .collect();
    let cost = sys.cost();
    LinearProgram {
        a,
        b,
        c: free.iter().map(|&j| cost[j]).collect(),
        lo: free.iter().map(|&j| sys.vars[j].lo).collect(),
        hi: free.iter().map(|&j| sys.vars[j].hi).collect(),
    }
}

fn scatter(x0: &[f64], free: &[usize], xf: &[f64]) -> Vec<f64> {
    let mut x = x0.to_vec();
    for (k, &j) in free.iter().enumerate() {
        x[j] = xf[k];
    }
    x
}

fn lp_report(
    sys: &EquationSystem,
    res: LpResult,
    x0: &[f64],
    free: &[usize],
    tol: f64,
) -> SolveReport {
    let mut x = scatter(x0, free, &res.x);
    let mut status = res.status;
    if status == Status::Optimal && !(settle_bounds(sys, &mut x) && sys.residual_norm(&x) <= tol) {
        status = Status::Infeasible;
    }
    let mut rep = SolveReport::new(sys, status, res.iterations, x);
    if status == Status::Optimal {
        rep.duals = Some(res.duals);
    }
    rep
}

/// Minimizes the system objective over a linear (or effectively linear)
/// system.
pub fn simplex_lp(sys: &EquationSystem) -> Result<SolveReport> {
    if !sys.is_effectively_linear() {
        return Err(Error::Solver(
            "simplex_lp needs a system without free bilinear or general terms".into(),
        ));
    }
    let tol = SolveOptions::from_env().tol;
    let free = sys.free_vars();
    let x0 = pinned_start(sys, None);
    let lp = linear_model(sys, &x0, &free);
    Ok(lp_report(sys, solve_lp(&lp), &x0, &free, tol))
}

/// Largest sign violation of the reduced costs `c - J^T y` at `x`: zero
/// at a vertex certified optimal by the multipliers `y`.
pub fn reduced_cost_violation(sys: &EquationSystem, x: &[f64], duals: &[f64]) -> f64 {
    let mut d = sys.cost();
    for (row, i, v) in sys.jacobian_triplets(x) {
        d[i] -= duals[row] * v;
    }
    let scale = d
        .iter()
        .chain(sys.cost().iter())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for (i, v) in sys.vars.iter().enumerate() {
        if v.is_fixed() {
            continue;
        }
        let near = |b: f64| b.is_finite() && (x[i] - b).abs() <= 1e-9 * b.abs().max(1.0);
        let viol = match (near(v.lo), near(v.hi)) {
            (true, _) => (-d[i]).max(0.0),
            (false, true) => d[i].max(0.0),
            (false, false) => d[i].abs(),
        };
        worst = worst.max(viol / scale);
    }
    worst
}

/// Successive linear programming: each pass solves the first-order model
/// at the incumbent inside a box of relative half-width `slp_step_bound`,
/// halving the box whenever a frozen factor reverses direction.
pub fn slp_optimize(
    sys: &EquationSystem,
    x0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.check()?;
    let free = sys.free_vars();
    let mut x = pinned_start(sys, x0);
    if sys.is_effectively_linear() {
        let lp = linear_model(sys, &x, &free);
        let mut rep = lp_report(sys, solve_lp(&lp), &x, &free, opts.tol);
        rep.iterations = 1;
        rep.warm_start_used = x0.is_some();
        return Ok(rep);
    }
    let max_iter = opts.max_iter.unwrap_or(SLP_MAX_ITER);
    let mut frozen = vec![false; sys.n_vars()];
    for b in &sys.bilinear {
        frozen[b.frozen] = true;
    }
    let mut radius = opts.slp_step_bound;
    let mut last_step: Option<Vec<f64>> = None;
    let mut last_obj: Option<f64> = None;
    let mut status = Status::IterationLimit;
    let mut passes = 0;
    while passes < max_iter {
        passes += 1;
        let mut lp = linear_model(sys, &x, &free);
        if passes > 1 {
            for (k, &j) in free.iter().enumerate() {
                let h = radius * x[j].abs().max(1.0);
                lp.lo[k] = lp.lo[k].max(x[j] - h);
                lp.hi[k] = lp.hi[k].min(x[j] + h);
            }
        }
        let mut res = solve_lp(&lp);
        if res.status == Status::Infeasible && passes > 1 {
            res = solve_lp(&linear_model(sys, &x, &free));
        }
        if res.status != Status::Optimal {
            status = res.status;
            break;
        }
        let xn = scatter(&x, &free, &res.x);
        let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let rel = free
            .iter()
            .map(|&j| step[j].abs() / x[j].abs().max(1.0))
            .fold(0.0, f64::max);
        if let Some(prev) = &last_step {
            if free.iter().any(|&j| frozen[j] && step[j] * prev[j] < 0.0) {
                radius *= 0.5;
            }
        }
        x = xn;
        let obj = sys.objective_value(&x);
        let feasible = sys.residual_norm(&x) <= opts.tol;
        let flat = last_obj.is_some_and(|o| (obj - o).abs() <= opts.tol * (1.0 + obj.abs()));
        if feasible && (rel <= opts.tol || flat) {
            status = Status::Converged;
            break;
        }
        last_step = Some(step);
        last_obj = Some(obj);
    }
    if status == Status::Converged && !settle_bounds(sys, &mut x) {
        status = Status::Infeasible;
    }
    let mut rep = SolveReport::new(sys, status, passes, x);
    rep.warm_start_used = x0.is_some();
    Ok(rep)
}
