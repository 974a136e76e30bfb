//! Heat-exchanger-network iteration: duty ratios from flows, a linear
//! temperature re-solve, reference refresh, repeat.

use std::ops::{Add, Div, Mul, Neg, Sub};

mod network;

pub use network::{hen_solve, solve_any, ExchangerState, HenIteration, HenOptions, HenReport};

use crate::error::{Error, Result};
use crate::topology::ExchangerParams;

/// Forward-mode dual number carrying one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn var(v: f64) -> Self {
        Self { v, d: 1.0 }
    }

    pub fn constant(v: f64) -> Self {
        Self { v, d: 0.0 }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        Self {
            v: e,
            d: self.d * e,
        }
    }

    fn min(self, o: Self) -> Self {
        if self.v <= o.v {
            self
        } else {
            o
        }
    }

    fn max(self, o: Self) -> Self {
        if self.v > o.v {
            self
        } else {
            o
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
}

fn one() -> Dual {
    Dual::constant(1.0)
}

/// Counter-current effectiveness for the given NTU and capacity ratio.
fn effectiveness(ntu: Dual, cr: Dual) -> Dual {
    if (1.0 - cr.v).abs() < 1e-9 {
        ntu / (one() + ntu)
    } else {
        let e = (-(ntu * (one() - cr))).exp();
        (one() - e) / (one() - cr * e)
    }
}

/// Heat transferred per unit inlet temperature difference, `eps * Cmin`.
fn transfer_rate(ua: f64, c_hot: Dual, c_cold: Dual) -> Dual {
    let cmin = c_hot.min(c_cold);
    let cmax = c_hot.max(c_cold);
    let ntu = Dual::constant(ua) / cmin;
    effectiveness(ntu, cmin / cmax) * cmin
}

/// Plain effectiveness, for callers that do not need derivatives.
pub fn counterflow_effectiveness(ntu: f64, cr: f64) -> f64 {
    effectiveness(Dual::constant(ntu), Dual::constant(cr)).v
}

/// Duty ratio as a dual number in the flows (the derivative direction is
/// whatever the caller seeded).
pub(crate) fn duty_factor(
    p: &ExchangerParams,
    f_hot: Dual,
    f_cold: Dual,
    cp_hot: f64,
    cp_cold: f64,
) -> Dual {
    let q = transfer_rate(
        p.ua,
        f_hot * Dual::constant(cp_hot),
        f_cold * Dual::constant(cp_cold),
    );
    let q_base = transfer_rate(
        p.ua,
        Dual::constant(p.fh_base * cp_hot),
        Dual::constant(p.fc_base * cp_cold),
    );
    q / Dual::constant(q_base.v * (p.th_base - p.tc_base))
}

/// Duty ratio `Phi` (1/K): `Q = Phi * Q_base * (Th_in - Tc_in)`. At base
/// flows `Phi * Q_base * (Th_base - Tc_base)` is exactly `Q_base`.
pub fn compute_phi(
    p: &ExchangerParams,
    f_hot: f64,
    f_cold: f64,
    cp_hot: f64,
    cp_cold: f64,
) -> Result<f64> {
    if !(f_hot > 0.0 && f_cold > 0.0) {
        return Err(Error::Solver(format!(
            "duty ratio needs positive flows (hot {f_hot}, cold {f_cold})"
        )));
    }
    if !(cp_hot > 0.0 && cp_cold > 0.0) {
        return Err(Error::Solver(format!(
            "duty ratio needs positive heat capacities (hot {cp_hot}, cold {cp_cold})"
        )));
    }
    Ok(duty_factor(
        p,
        Dual::constant(f_hot),
        Dual::constant(f_cold),
        cp_hot,
        cp_cold,
    )
    .v)
}
