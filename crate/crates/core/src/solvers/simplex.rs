//! Dense bounded-variable primal simplex, two phases, Bland's rule.

use super::dense::Lu;
use super::report::Status;

/// `min c.x  s.t.  A x = b,  lo <= x <= hi`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: Status,
    pub x: Vec<f64>,
    /// Row multipliers `y` with `c - A^T y` the reduced costs.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// One transformed column: original variable and the sign it enters with.
#[derive(Debug, Clone, Copy)]
struct Part {
    var: usize,
    sign: f64,
}

struct Tableau {
    t: Vec<Vec<f64>>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    cost: Vec<f64>,
    d: Vec<f64>,
}

const PIVOT_EPS: f64 = 1e-10;

impl Tableau {
    fn m(&self) -> usize {
        self.t.len()
    }

    fn price(&mut self) {
        let n = self.cost.len();
        let m = self.m();
        self.d = self.cost.clone();
        for i in 0..m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..n {
                    self.d[j] -= cb * self.t[i][j];
                }
            }
        }
    }

    fn flip(&mut self, j: usize) {
        for row in &mut self.t {
            row[j] = -row[j];
        }
        self.d[j] = -self.d[j];
        self.cost[j] = -self.cost[j];
        self.flipped[j] = !self.flipped[j];
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let n = self.cost.len();
        let p = self.t[r][e];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pr = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for j in 0..n {
                    row[j] -= f * pr[j];
                }
                row[e] = 0.0;
            }
        }
        let f = self.d[e];
        if f != 0.0 {
            for j in 0..n {
                self.d[j] -= f * pr[j];
            }
            self.d[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Runs simplex iterations; `allowed` filters entering candidates.
    fn run(
        &mut self,
        allowed: impl Fn(usize) -> bool,
        d_tol: f64,
        limit: usize,
        iterations: &mut usize,
    ) -> Status {
        let m = self.m();
        loop {
            let n = self.cost.len();
            let mut basic = vec![false; n];
            for &b in &self.basis {
                basic[b] = true;
            }
            let Some(e) = (0..n)
                .find(|&j| !basic[j] && allowed(j) && self.upper[j] > 0.0 && self.d[j] < -d_tol)
            else {
                return Status::Optimal;
            };
            if *iterations >= limit {
                return Status::IterationLimit;
            }
            *iterations += 1;

            let mut theta = self.upper[e];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..m {
                let a = self.t[i][e];
                let (lim, to_upper) = if a > PIVOT_EPS {
                    (self.beta[i].max(0.0) / a, false)
                } else if a < -PIVOT_EPS && self.upper[self.basis[i]].is_finite() {
                    (
                        (self.upper[self.basis[i]] - self.beta[i]).max(0.0) / -a,
                        true,
                    )
                } else {
                    continue;
                };
                let better = match leave {
                    _ if lim < theta => true,
                    Some((li, _)) => lim == theta && self.basis[i] < self.basis[li],
                    None => false,
                };
                if better {
                    theta = lim;
                    leave = Some((i, to_upper));
                }
            }
            if theta.is_infinite() {
                return Status::Unbounded;
            }
            for i in 0..m {
                self.beta[i] -= theta * self.t[i][e];
            }
            match leave {
                None => self.flip(e),
                Some((r, to_upper)) => {
                    let l = self.basis[r];
                    self.pivot(r, e);
                    self.beta[r] = theta;
                    if to_upper {
                        self.flip(l);
                    }
                }
            }
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> LpResult {
    let m = lp.b.len();
    let n = lp.c.len();
    // y-space: every part ranges over [0, upper]
    let mut parts = Vec::new();
    let mut upper = Vec::new();
    let mut offset = vec![0.0; n];
    for j in 0..n {
        let (lo, hi) = (lp.lo[j], lp.hi[j]);
        if lo.is_finite() {
            offset[j] = lo;
            parts.push(Part { var: j, sign: 1.0 });
            upper.push(hi - lo);
        } else if hi.is_finite() {
            offset[j] = hi;
            parts.push(Part { var: j, sign: -1.0 });
            upper.push(f64::INFINITY);
        } else {
            parts.push(Part { var: j, sign: 1.0 });
            upper.push(f64::INFINITY);
            parts.push(Part { var: j, sign: -1.0 });
            upper.push(f64::INFINITY);
        }
    }
    let ny = parts.len();
    let mut rhs: Vec<f64> = (0..m)
        .map(|i| lp.b[i] - (0..n).map(|j| lp.a[i][j] * offset[j]).sum::<f64>())
        .collect();
    let row_sign: Vec<f64> = rhs
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    for i in 0..m {
        rhs[i] *= row_sign[i];
    }
    let col = |i: usize, k: usize| row_sign[i] * parts[k].sign * lp.a[i][parts[k].var];

    let mut t = vec![vec![0.0; ny + m]; m];
    for i in 0..m {
        for k in 0..ny {
            t[i][k] = col(i, k);
        }
        t[i][ny + i] = 1.0;
    }
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut tab = Tableau {
        t,
        beta: rhs.clone(),
        basis: (ny..ny + m).collect(),
        upper,
        flipped: vec![false; ny + m],
        cost: (0..ny + m)
            .map(|j| if j >= ny { 1.0 } else { 0.0 })
            .collect(),
        d: Vec::new(),
    };
    tab.price();

    let limit = 50 * (ny + 2 * m) + 1000;
    let mut iterations = 0;
    let b_scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let status = tab.run(|_| true, 1e-11, limit, &mut iterations);
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= ny)
        .map(|i| tab.beta[i])
        .sum();
    let fail = |status| LpResult {
        status,
        x: offset.clone(),
        duals: vec![0.0; m],
        iterations,
    };
    if status == Status::IterationLimit {
        return fail(status);
    }
    if infeas > 1e-9 * b_scale {
        return fail(Status::Infeasible);
    }

    // drive artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] < ny {
            continue;
        }
        tab.beta[r] = 0.0;
        if let Some(j) = (0..ny).find(|&j| !tab.basis.contains(&j) && tab.t[r][j].abs() > 1e-9) {
            tab.pivot(r, j);
            tab.beta[r] = 0.0;
        }
    }
    for j in ny..ny + m {
        tab.upper[j] = 0.0;
    }

    let c_scale = lp.c.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    tab.cost = (0..ny + m)
        .map(|k| {
            if k >= ny {
                0.0
            } else {
                let c = parts[k].sign * lp.c[parts[k].var];
                if tab.flipped[k] {
                    -c
                } else {
                    c
                }
            }
        })
        .collect();
    tab.price();
    let status = tab.run(move |j| j < ny, 1e-9 * c_scale, limit, &mut iterations);

    // y values, then an exact re-solve of the basic block
    let mut y: Vec<f64> = (0..ny + m)
        .map(|k| if tab.flipped[k] { tab.upper[k] } else { 0.0 })
        .collect();
    for (i, &bv) in tab.basis.iter().enumerate() {
        y[bv] = if tab.flipped[bv] {
            tab.upper[bv] - tab.beta[i]
        } else {
            tab.beta[i]
        };
    }
    let orig_col = |i: usize, k: usize| {
        if k < ny {
            col(i, k)
        } else if k - ny == i {
            1.0
        } else {
            0.0
        }
    };
    let bmat: Vec<Vec<f64>> = (0..m)
        .map(|i| tab.basis.iter().map(|&k| orig_col(i, k)).collect())
        .collect();
    if let Ok(lu) = Lu::factor(bmat) {
        let mut is_basic = vec![false; ny + m];
        for &k in &tab.basis {
            is_basic[k] = true;
        }
        let r: Vec<f64> = (0..m)
            .map(|i| {
                rhs[i]
                    - (0..ny + m)
                        .filter(|&k| !is_basic[k])
                        .map(|k| orig_col(i, k) * y[k])
                        .sum::<f64>()
            })
            .collect();
        let yb = lu.solve(&r);
        for (p, &k) in tab.basis.iter().enumerate() {
            y[k] = yb[p];
        }
    }

    let mut x = offset.clone();
    for (k, part) in parts.iter().enumerate() {
        x[part.var] += part.sign * y[k];
    }
    let duals: Vec<f64> = (0..m).map(|i| -tab.d[ny + i] * row_sign[i]).collect();
    LpResult {
        status,
        x,
        duals,
        iterations,
    }
}
