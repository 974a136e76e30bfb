//! Steam reforming and water-gas shift equilibrium, and the linear reactor
//! fits derived from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::dense::least_squares;

/// Component order used throughout: CH4, H2O, CO, CO2, H2.
pub const COMPONENTS: [&str; 5] = ["CH4", "H2O", "CO", "CO2", "H2"];
/// Molar masses (kg/kmol) built from C 12.011, H 1.008, O 15.999 so that
/// element balances and total mass agree exactly.
pub const MOLAR_MASS: [f64; 5] = [16.043, 18.015, 28.010, 44.009, 2.016];

const CH4: usize = 0;
const H2O: usize = 1;
const CO: usize = 2;
const CO2: usize = 3;
const H2: usize = 4;

/// CH4 + H2O = CO + 3 H2
pub fn k_reforming(t: f64) -> f64 {
    (30.42 - 27106.0 / t).exp()
}

/// CO + H2O = CO2 + H2
pub fn k_shift(t: f64) -> f64 {
    (-3.798 + 4160.0 / t).exp()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn after(n: &[f64; 5], x: f64, y: f64) -> [f64; 5] {
    [
        n[CH4] - x,
        n[H2O] - x - y,
        n[CO] + x - y,
        n[CO2] + y,
        n[H2] + 3.0 * x + y,
    ]
}

/// Shift extent at fixed reforming extent `x`.
fn shift_extent(n: &[f64; 5], x: f64, t: f64) -> f64 {
    let lo = -(n[CO2].min(n[H2] + 3.0 * x));
    let hi = (n[CO] + x).min(n[H2O] - x);
    let span = hi - lo;
    let ln_k = k_shift(t).ln();
    bisect(lo + 1e-14 * span, hi - 1e-14 * span, |y| {
        let m = after(n, x, y);
        ln_k - ((m[CO2] * m[H2]).ln() - (m[CO] * m[H2O]).ln())
    })
}

/// Equilibrium moles from feed moles `n` (kmol) at `t` K and `p` bar.
/// Without reforming only the shift reaction proceeds.
pub fn equilibrium(n: &[f64; 5], t: f64, p: f64, reforming: bool) -> [f64; 5] {
    let x = if reforming {
        let hi = n[CH4].min(n[H2O]);
        let ln_k = k_reforming(t).ln();
        bisect(1e-14 * hi, hi * (1.0 - 1e-14), |x| {
            let y = shift_extent(n, x, t);
            let m = after(n, x, y);
            let tot: f64 = m.iter().sum();
            let ln_q = (m[CO] / tot).ln() + 3.0 * (m[H2] / tot).ln()
                - (m[CH4] / tot).ln()
                - (m[H2O] / tot).ln()
                + 2.0 * p.ln();
            ln_k - ln_q
        })
    } else {
        0.0
    };
    after(n, x, shift_extent(n, x, t))
}

pub fn mass_fractions(n: &[f64; 5]) -> [f64; 5] {
    let m: Vec<f64> = n.iter().zip(MOLAR_MASS).map(|(a, b)| a * b).collect();
    let tot: f64 = m.iter().sum();
    std::array::from_fn(|j| m[j] / tot)
}

pub fn moles(w: &[f64; 5]) -> [f64; 5] {
    std::array::from_fn(|j| w[j] / MOLAR_MASS[j])
}

/// Coefficients of `sum_j a_j x_j - y + a_T T = 0` for one outlet species.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub a: [f64; 5],
    pub a_t: f64,
    /// Largest relative error on the fitted fraction over the grid.
    pub max_rel_error: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64; 5], t: f64) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.a_t * t
    }
}

/// One grid point: feed mass fractions, temperature, outlet mass fractions.
pub type Sample = ([f64; 5], f64, [f64; 5]);

/// Least-squares fit of outlet species `target` over `samples`, using only
/// the feed components in `cols`.
pub fn fit(samples: &[Sample], cols: &[usize], target: usize) -> Result<LinearFit> {
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|(x, t, _)| cols.iter().map(|&j| x[j]).chain([*t]).collect())
        .collect();
    let b: Vec<f64> = samples.iter().map(|s| s.2[target]).collect();
    let c = least_squares(rows, b).map_err(|e| {
        Error::Solver(format!(
            "reactor fit is rank deficient at column {}",
            e.column
        ))
    })?;
    let mut a = [0.0; 5];
    for (k, &j) in cols.iter().enumerate() {
        a[j] = c[k];
    }
    let mut f = LinearFit {
        a,
        a_t: c[cols.len()],
        max_rel_error: 0.0,
        points: samples.len(),
    };
    f.max_rel_error = samples
        .iter()
        .map(|(x, t, y)| (f.predict(x, *t) - y[target]).abs() / y[target].abs())
        .fold(0.0, f64::max);
    Ok(f)
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Reformer operating window.
pub const ATR_PRESSURE: f64 = 10.0;
pub const ATR_T: (f64, f64) = (1150.0, 1250.0);
pub const ATR_STEAM_TO_CARBON: (f64, f64) = (2.5, 3.5);
/// Shift window, around the reformer exit at 3.0 steam to carbon, 1200 K.
pub const WGS_T: (f64, f64) = (600.0, 700.0);

pub fn atr_feed(steam_to_carbon: f64) -> [f64; 5] {
    [1.0, steam_to_carbon, 0.0, 0.0, 0.0]
}

pub fn atr_samples() -> Vec<Sample> {
    let mut out = Vec::new();
    for sc in grid(ATR_STEAM_TO_CARBON.0, ATR_STEAM_TO_CARBON.1, 6) {
        for t in grid(ATR_T.0, ATR_T.1, 6) {
            let n = atr_feed(sc);
            out.push((
                mass_fractions(&n),
                t,
                mass_fractions(&equilibrium(&n, t, ATR_PRESSURE, true)),
            ));
        }
    }
    out
}

/// Shift feeds perturb each species of the nominal reformer exit by
/// -20, 0 and +20 percent.
pub fn wgs_samples() -> Vec<Sample> {
    let base = mass_fractions(&equilibrium(&atr_feed(3.0), 1200.0, ATR_PRESSURE, true));
    let mut out = Vec::new();
    for code in 0..3usize.pow(5) {
        let mut w = base;
        let mut c = code;
        for wj in w.iter_mut() {
            *wj *= [0.8, 1.0, 1.2][c % 3];
            c /= 3;
        }
        let tot: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= tot);
        let n = moles(&w);
        for t in grid(WGS_T.0, WGS_T.1, 5) {
            out.push((
                w,
                t,
                mass_fractions(&equilibrium(&n, t, ATR_PRESSURE, false)),
            ));
        }
    }
    out
}

/// Hydrogen and methane fits for the reformer, hydrogen fit for the shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReactorFits {
    pub atr_h2: LinearFit,
    pub atr_ch4: LinearFit,
    pub wgs_h2: LinearFit,
}

pub fn fit_reactors() -> Result<ReactorFits> {
    let atr = atr_samples();
    let wgs = wgs_samples();
    Ok(ReactorFits {
        atr_h2: fit(&atr, &[CH4, H2O], H2)?,
        atr_ch4: fit(&atr, &[CH4, H2O], CH4)?,
        wgs_h2: fit(&wgs, &[CH4, H2O, CO, CO2, H2], H2)?,
    })
}
