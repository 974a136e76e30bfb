use super::dense::{least_squares, Lu, SingularAt};
use super::report::{SolveOptions, SolveReport, Status};
use crate::error::{Error, Result};
use crate::instantiation::EquationSystem;

const MAX_HALVINGS: usize = 10;
const NEWTON_MAX_ITER: usize = 50;

fn norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Starting point with every fixed variable pinned to its value.
pub(crate) fn pinned_start(sys: &EquationSystem, x0: Option<&[f64]>) -> Vec<f64> {
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => sys.initial_point(),
    };
    for (xi, v) in x.iter_mut().zip(&sys.vars) {
        if v.is_fixed() {
            *xi = v.lo;
        }
    }
    x
}

/// Snaps round-off sized bound violations onto the bound and reports
/// whether what remains is within 1e-12.
pub(crate) fn settle_bounds(sys: &EquationSystem, x: &mut [f64]) -> bool {
    let mut ok = true;
    for (xi, v) in x.iter_mut().zip(&sys.vars) {
        for (bound, below) in [(v.lo, true), (v.hi, false)] {
            if !bound.is_finite() {
                continue;
            }
            let viol = if below { bound - *xi } else { *xi - bound };
            if viol > 0.0 {
                if viol <= 1e-10 * bound.abs().max(1.0) {
                    *xi = bound;
                } else if viol > 1e-12 {
                    ok = false;
                }
            }
        }
    }
    ok
}

/// Newton direction on the free variables: solves `J dx = -r`, in the
/// least-squares sense when there are more rows than unknowns.
fn direction(
    sys: &EquationSystem,
    x: &[f64],
    free: &[usize],
    r: &[f64],
) -> std::result::Result<Vec<f64>, SingularAt> {
    let mut col = vec![usize::MAX; sys.n_vars()];
    for (k, &i) in free.iter().enumerate() {
        col[i] = k;
    }
    let mut j = vec![vec![0.0; free.len()]; sys.n_rows()];
    for (row, i, v) in sys.jacobian_triplets(x) {
        if col[i] != usize::MAX {
            j[row][col[i]] += v;
        }
    }
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    if sys.n_rows() == free.len() {
        Ok(Lu::factor(j)?.solve(&rhs))
    } else {
        least_squares(j, rhs)
    }
}

fn check_shape(sys: &EquationSystem, free: usize) -> Result<()> {
    if sys.n_rows() < free {
        return Err(Error::NotSquare {
            rows: sys.n_rows(),
            free,
        });
    }
    Ok(())
}

/// Direct solve of a system whose bilinear terms all have a fixed factor.
pub fn solve_linear(sys: &EquationSystem) -> Result<SolveReport> {
    if !sys.is_effectively_linear() {
        return Err(Error::Solver(
            "solve_linear needs a system without free bilinear or general terms".into(),
        ));
    }
    let free = sys.free_vars();
    check_shape(sys, free.len())?;
    let tol = SolveOptions::from_env().tol;
    let mut x = pinned_start(sys, None);
    let mut r = sys.residuals(&x);
    // one step is exact; a second pass only mops up round-off
    for _ in 0..2 {
        if norm(&r) <= tol * 1e-3 {
            break;
        }
        let dx = match direction(sys, &x, &free, &r) {
            Ok(d) => d,
            Err(_) => return Ok(SolveReport::new(sys, Status::Infeasible, 1, x)),
        };
        for (k, &i) in free.iter().enumerate() {
            x[i] += dx[k];
        }
        r = sys.residuals(&x);
    }
    let in_bounds = settle_bounds(sys, &mut x);
    let status = if in_bounds && sys.residual_norm(&x) <= tol {
        Status::Converged
    } else {
        Status::Infeasible
    };
    Ok(SolveReport::new(sys, status, 1, x))
}

/// Damped Newton from `x0` (or the system's initial point).
pub fn newton_solve(
    sys: &EquationSystem,
    x0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.check()?;
    let free = sys.free_vars();
    check_shape(sys, free.len())?;
    let max_iter = opts.max_iter.unwrap_or(NEWTON_MAX_ITER);
    let mut x = pinned_start(sys, x0);
    let mut r = sys.residuals(&x);
    let mut rn = norm(&r);
    let mut best = (rn, x.clone());
    let mut iterations = 0;
    while rn > opts.tol && iterations < max_iter {
        let dx = direction(sys, &x, &free, &r).map_err(|_| Error::SingularJacobian {
            iteration: iterations,
            iterate: x.clone(),
        })?;
        iterations += 1;
        let mut step = 1.0;
        let mut halvings = 0;
        let (trial, tr, tn) = loop {
            let mut trial = x.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += step * dx[k];
            }
            let tr = sys.residuals(&trial);
            let tn = norm(&tr);
            if tn <= rn || halvings == MAX_HALVINGS {
                break (trial, tr, tn);
            }
            step *= 0.5;
            halvings += 1;
        };
        if !tn.is_finite() {
            break;
        }
        x = trial;
        r = tr;
        rn = tn;
        if rn < best.0 {
            best = (rn, x.clone());
        }
    }
    let (rn, mut x) = if rn <= best.0 { (rn, x) } else { best };
    let status = if rn <= opts.tol {
        if settle_bounds(sys, &mut x) && sys.residual_norm(&x) <= opts.tol {
            Status::Converged
        } else {
            Status::Infeasible
        }
    } else {
        Status::IterationLimit
    };
    let mut rep = SolveReport::new(sys, status, iterations, x);
    rep.warm_start_used = x0.is_some();
    Ok(rep)
}
