//! Dense LU with partial pivoting and a Householder least-squares fallback.

pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Lu {
    a: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

/// Column at which elimination failed, and the pivot magnitude found there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularAt {
    pub column: usize,
    pub pivot: f64,
}

impl Lu {
    /// Factors a square matrix. Pivots smaller than `PIVOT_TOL` times the
    /// largest entry count as zero.
    pub fn factor(mut a: Vec<Vec<f64>>) -> Result<Self, SingularAt> {
        let n = a.len();
        let scale = a
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[i][k].abs()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if best <= PIVOT_TOL * scale {
                return Err(SingularAt {
                    column: k,
                    pivot: best,
                });
            }
            a.swap(k, p);
            perm.swap(k, p);
            let pivot = a[k][k];
            let (top, bottom) = a.split_at_mut(k + 1);
            let rk = &top[k];
            for ri in bottom.iter_mut() {
                let f = ri[k] / pivot;
                if f == 0.0 {
                    continue;
                }
                ri[k] = f;
                for j in k + 1..n {
                    ri[j] -= f * rk[j];
                }
            }
        }
        Ok(Self { a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.a.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[i][j] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[i][j] * y[j]).sum();
            y[i] = (y[i] - s) / self.a[i][i];
        }
        y
    }

    /// Solves `A^T y = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.a.len();
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[j][i] * z[j]).sum();
            z[i] = (z[i] - s) / self.a[i][i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[j][i] * z[j]).sum();
            z[i] -= s;
        }
        let mut y = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            y[i] = z[k];
        }
        y
    }
}

/// Least-squares solution of an overdetermined `A x = b` (rows >= cols)
/// via Householder QR. Fails when `A` is rank deficient.
pub fn least_squares(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, SingularAt> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |mx, v| mx.max(v.abs()))
        .max(1.0);
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm <= PIVOT_TOL * scale {
            return Err(SingularAt {
                column: k,
                pivot: norm,
            });
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..n {
            let d: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vv;
            for i in k..m {
                a[i][j] -= d * v[i - k];
            }
        }
        let d: f64 = (k..m).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vv;
        for i in k..m {
            b[i] -= d * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_permuted_system() {
        let a = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a
            .iter()
            .map(|r| r.iter().zip(&x_true).map(|(p, q)| p * q).sum())
            .collect();
        let lu = Lu::factor(a.clone()).unwrap();
        let x = lu.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
        let bt: Vec<f64> = (0..3)
            .map(|j| (0..3).map(|i| a[i][j] * x_true[i]).sum())
            .collect();
        let y = lu.solve_transpose(&bt);
        for (u, v) in y.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_reports_column() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(Lu::factor(a).unwrap_err().column, 1);
    }

    #[test]
    fn least_squares_consistent() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let x = least_squares(a, vec![2.0, 3.0, 5.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
    }
}
