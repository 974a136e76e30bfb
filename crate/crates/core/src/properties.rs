//! Per-mass stream property providers.
//!
//! Three fidelities share one record type: the fixed reference enthalpy `H0`,
//! the local linear update `H0 + Cp (T - T0)`, and a cubic "rigorous"
//! correlation that the outer refresh loop uses to re-anchor the first two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic enthalpy correlation `H(T) = c0 + c1 T + c2 T^2 + c3 T^3` (kJ/kg),
/// valid on `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub coeffs: [f64; 4],
    pub t_min: f64,
    pub t_max: f64,
}

impl Correlation {
    pub fn new(coeffs: [f64; 4]) -> Self {
        Self {
            coeffs,
            t_min: 0.0,
            t_max: f64::INFINITY,
        }
    }

    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn value(&self, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + t * (c1 + t * (c2 + t * c3))
    }

    pub fn slope(&self, t: f64) -> f64 {
        let [_, c1, c2, c3] = self.coeffs;
        c1 + t * (2.0 * c2 + 3.0 * c3 * t)
    }

    pub fn curvature(&self, t: f64) -> f64 {
        let [_, _, c2, c3] = self.coeffs;
        2.0 * c2 + 6.0 * c3 * t
    }

    /// Minimum of dH/dT over the declared range. Unbounded ranges are probed
    /// up to 1e4 K.
    pub fn min_slope(&self) -> f64 {
        let lo = self.t_min.max(0.0);
        let hi = if self.t_max.is_finite() {
            self.t_max
        } else {
            1.0e4
        };
        let mut m = self.slope(lo).min(self.slope(hi));
        let [_, _, c2, c3] = self.coeffs;
        if c3 != 0.0 {
            let vertex = -c2 / (3.0 * c3);
            if vertex > lo && vertex < hi {
                m = m.min(self.slope(vertex));
            }
        }
        m
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

/// Stream property record on a per-mass basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPropertyRecord {
    pub stream: String,
    /// Reference temperature (K).
    pub t0: f64,
    /// Specific enthalpy at `t0` (kJ/kg).
    pub h0: f64,
    /// Specific heat capacity (kJ/(kg K)).
    pub cp: f64,
    /// Heat of vaporization (kJ/kg).
    pub hvap: Option<f64>,
    /// Reference pressure; stored as annotation only.
    pub p0: Option<f64>,
    pub correlation: Option<Correlation>,
}

impl StreamPropertyRecord {
    pub fn new(stream: impl Into<String>, t0: f64, h0: f64, cp: f64) -> Self {
        Self {
            stream: stream.into(),
            t0,
            h0,
            cp,
            hvap: None,
            p0: None,
            correlation: None,
        }
    }

    pub fn with_correlation(mut self, c: Correlation) -> Self {
        self.correlation = Some(c);
        self
    }

    pub fn with_hvap(mut self, hvap: f64) -> Self {
        self.hvap = Some(hvap);
        self
    }

    /// Record built from a correlation, anchored at `t0`.
    pub fn from_correlation(stream: impl Into<String>, t0: f64, c: Correlation) -> Self {
        let h0 = c.value(t0);
        let cp = c.slope(t0);
        Self::new(stream, t0, h0, cp).with_correlation(c)
    }

    /// Invariant violations as rule names.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !(self.cp > 0.0) {
            v.push("cp-positive");
        }
        if !(self.t0 > 0.0) {
            v.push("t0-positive");
        }
        if let Some(c) = &self.correlation {
            if !(c.t_min < c.t_max) {
                v.push("correlation-range");
            } else if !(c.min_slope() > 0.0) {
                v.push("correlation-monotone");
            }
        }
        v
    }

    fn correlation(&self) -> Result<&Correlation> {
        self.correlation
            .as_ref()
            .ok_or_else(|| Error::MissingCorrelation(self.stream.clone()))
    }
}

/// Reference enthalpy, independent of temperature.
pub fn enthalpy_fixed(rec: &StreamPropertyRecord) -> f64 {
    rec.h0
}

/// Locally linearized enthalpy `H0 + Cp (T - T0)`.
pub fn enthalpy_local(rec: &StreamPropertyRecord, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonpositiveTemperature(t));
    }
    Ok(rec.h0 + rec.cp * (t - rec.t0))
}

pub fn enthalpy_rigorous(rec: &StreamPropertyRecord, t: f64) -> Result<f64> {
    let c = rec.correlation()?;
    if !(t > 0.0) {
        return Err(Error::NonpositiveTemperature(t));
    }
    if !c.contains(t) {
        return Err(Error::OutOfRange {
            stream: rec.stream.clone(),
            t,
            lo: c.t_min,
            hi: c.t_max,
        });
    }
    Ok(c.value(t))
}

/// Re-anchors the record on the rigorous correlation at `t_new`: the returned
/// record is tangent to the correlation there.
pub fn refresh_reference(rec: &StreamPropertyRecord, t_new: f64) -> Result<StreamPropertyRecord> {
    let h = enthalpy_rigorous(rec, t_new)?;
    let c = rec.correlation()?;
    Ok(StreamPropertyRecord {
        t0: t_new,
        h0: h,
        cp: c.slope(t_new),
        ..rec.clone()
    })
}

/// Re-anchors the record at `t_new` along its own linear update; `Cp` is kept.
pub fn refresh_local(rec: &StreamPropertyRecord, t_new: f64) -> Result<StreamPropertyRecord> {
    let h = enthalpy_local(rec, t_new)?;
    Ok(StreamPropertyRecord {
        t0: t_new,
        h0: h,
        ..rec.clone()
    })
}

/// Latent duty `F * Hvap` (kW) for a stream changing phase.
pub fn phase_change_duty(rec: &StreamPropertyRecord, flow: f64) -> Result<f64> {
    let hvap = rec
        .hvap
        .ok_or_else(|| Error::MissingHvap(rec.stream.clone()))?;
    Ok(flow * hvap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(h0: f64, cp: f64, t0: f64) -> StreamPropertyRecord {
        StreamPropertyRecord::new("s", t0, h0, cp)
    }

    #[test]
    fn fixed_is_h0() {
        let r = rec(250.0, 2.0, 400.0);
        assert_eq!(enthalpy_fixed(&r), 250.0);
        assert_eq!(enthalpy_fixed(&r), enthalpy_fixed(&r));
    }

    #[test]
    fn fixed_from_correlation_matches_polynomial() {
        // c = (100, 2, 1e-3, 0) at T0 = 500: 100 + 1000 + 250 = 1350
        let c = Correlation::new([100.0, 2.0, 1.0e-3, 0.0]);
        let r = StreamPropertyRecord::from_correlation("steam", 500.0, c);
        assert_eq!(enthalpy_fixed(&r), 1350.0);
    }

    #[test]
    fn local_update() {
        let r = rec(250.0, 2.0, 400.0);
        assert_eq!(enthalpy_local(&r, 400.0).unwrap(), 250.0);
        assert_eq!(enthalpy_local(&r, 410.0).unwrap(), 270.0);
        let w = rec(0.0, 4.2, 298.0);
        assert!((enthalpy_local(&w, 308.0).unwrap() - 42.0).abs() < 1e-12);
        assert!(matches!(
            enthalpy_local(&r, 0.0),
            Err(Error::NonpositiveTemperature(_))
        ));
    }

    #[test]
    fn rigorous_polynomials() {
        let lin = rec(0.0, 1.0, 300.0).with_correlation(Correlation::new([0.0, 1.0, 0.0, 0.0]));
        assert_eq!(enthalpy_rigorous(&lin, 300.0).unwrap(), 300.0);
        let con = rec(0.0, 1.0, 300.0).with_correlation(Correlation::new([10.0, 0.0, 0.0, 0.0]));
        assert_eq!(enthalpy_rigorous(&con, 1234.5).unwrap(), 10.0);
        assert!(matches!(
            enthalpy_rigorous(&rec(0.0, 1.0, 300.0), 300.0),
            Err(Error::MissingCorrelation(_))
        ));
        let ranged = rec(0.0, 1.0, 300.0)
            .with_correlation(Correlation::new([0.0, 1.0, 0.0, 0.0]).with_range(250.0, 350.0));
        assert!(matches!(
            enthalpy_rigorous(&ranged, 400.0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn refresh_examples() {
        let r = rec(0.0, 1.0, 300.0).with_correlation(Correlation::new([0.0, 2.0, 0.0, 0.0]));
        let n = refresh_reference(&r, 500.0).unwrap();
        assert_eq!((n.t0, n.h0, n.cp), (500.0, 1000.0, 2.0));
        assert_eq!(r.t0, 300.0);

        let q = rec(0.0, 1.0, 300.0).with_correlation(Correlation::new([0.0, 0.0, 1.0, 0.0]));
        let n = refresh_reference(&q, 10.0).unwrap();
        assert_eq!((n.h0, n.cp), (100.0, 20.0));

        // H0 already on the correlation at T0: only Cp moves
        let c = Correlation::new([5.0, 1.0, 0.01, 0.0]);
        let anchored = rec(c.value(300.0), 1.0, 300.0).with_correlation(c);
        let n = refresh_reference(&anchored, 300.0).unwrap();
        assert_eq!(n.h0, anchored.h0);
        assert_eq!(n.cp, 7.0);
    }

    #[test]
    fn phase_change() {
        let r = rec(0.0, 1.0, 373.0).with_hvap(2000.0);
        assert_eq!(phase_change_duty(&r, 0.0).unwrap(), 0.0);
        assert_eq!(phase_change_duty(&r, 2.0).unwrap(), 4000.0);
        let vap = phase_change_duty(&r, 2.0).unwrap();
        let cond = -phase_change_duty(&r, 2.0).unwrap();
        assert_eq!(vap + cond, 0.0);
        assert!(phase_change_duty(&rec(0.0, 1.0, 373.0), 1.0).is_err());
    }

    #[test]
    fn invariants_flag_bad_records() {
        assert_eq!(rec(0.0, -1.0, 300.0).violations(), vec!["cp-positive"]);
        let falling = rec(0.0, 1.0, 300.0)
            .with_correlation(Correlation::new([0.0, 1.0, -0.01, 0.0]).with_range(200.0, 400.0));
        assert_eq!(falling.violations(), vec!["correlation-monotone"]);
    }

    fn cubic() -> impl Strategy<Value = Correlation> {
        (
            -100.0..100.0f64,
            0.5..3.0f64,
            0.0..2.0e-3f64,
            -5.0e-7..5.0e-7f64,
        )
            .prop_map(|(a, b, c, d)| Correlation::new([a, b, c, d]).with_range(200.0, 1500.0))
    }

    proptest! {
        #[test]
        fn tangent_at_refresh_point(c in cubic(), t in 300.0..1200.0f64) {
            let r = rec(0.0, 1.0, 400.0).with_correlation(c);
            let n = refresh_reference(&r, t).unwrap();
            prop_assert_eq!(enthalpy_local(&n, t).unwrap(), enthalpy_rigorous(&r, t).unwrap());
        }

        #[test]
        fn second_order_error(c in cubic(), t in 400.0..1000.0f64) {
            prop_assume!(c.curvature(t).abs() > 1e-5);
            let r = rec(0.0, 1.0, 400.0).with_correlation(c);
            let n = refresh_reference(&r, t).unwrap();
            let err = |d: f64| (enthalpy_local(&n, t + d).unwrap() - enthalpy_rigorous(&r, t + d).unwrap()).abs();
            let ratio = err(2.0) / err(1.0);
            prop_assert!((ratio - 4.0).abs() <= 0.8, "ratio {}", ratio);
        }

        #[test]
        fn fixed_ignores_temperature(h0 in -1e3..1e3f64, _t in 1.0..2000.0f64) {
            let r = rec(h0, 2.0, 400.0);
            prop_assert_eq!(enthalpy_fixed(&r), h0);
        }

        #[test]
        fn cp_matches_central_difference(c in cubic(), t in 300.0..1200.0f64) {
            let r = rec(0.0, 1.0, 400.0).with_correlation(c);
            let n = refresh_reference(&r, t).unwrap();
            let h = 1e-3;
            let fd = (enthalpy_rigorous(&r, t + h).unwrap() - enthalpy_rigorous(&r, t - h).unwrap()) / (2.0 * h);
            prop_assert!((n.cp - fd).abs() <= 1e-6 * n.cp.abs());
        }
    }
}
