use std::fmt::Write;

use super::{DataDrivenModel, NodeKind, PhaseChange, Topology, Utility};
use crate::numfmt::exact;

/// Writes the canonical text form: fixed key order per record, nine
/// significant digits where that is exact, LF line endings.
pub fn serialize(t: &Topology) -> String {
    let mut out = String::new();
    let comp = |v: &[f64]| -> String {
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(j, x)| format!("{}:{}", t.components[j].id, exact(*x)))
            .collect::<Vec<_>>()
            .join(",")
    };

    out.push_str("[components]\n");
    for c in &t.components {
        let _ = write!(out, "id={}", c.id);
        if !c.description.is_empty() {
            let _ = write!(out, " description={}", quote(&c.description));
        }
        out.push('\n');
    }

    out.push_str("\n[properties]\n");
    for p in &t.properties {
        let _ = write!(
            out,
            "stream={} T0={} H0={} Cp={}",
            p.stream,
            exact(p.t0),
            exact(p.h0),
            exact(p.cp)
        );
        if let Some(h) = p.hvap {
            let _ = write!(out, " Hvap={}", exact(h));
        }
        if let Some(p0) = p.p0 {
            let _ = write!(out, " P0={}", exact(p0));
        }
        if let Some(c) = &p.correlation {
            let _ = write!(out, " c={}", list(&c.coeffs));
            if c.t_min != 0.0 {
                let _ = write!(out, " Tmin={}", exact(c.t_min));
            }
            if c.t_max.is_finite() {
                let _ = write!(out, " Tmax={}", exact(c.t_max));
            }
        }
        out.push('\n');
    }

    out.push_str("\n[nodes]\n");
    for n in &t.nodes {
        let _ = write!(out, "id={} kind={}", n.id, n.kind.name());
        if !n.inlets.is_empty() {
            let _ = write!(out, " in={}", n.inlets.join(","));
        }
        if !n.outlets.is_empty() {
            let _ = write!(out, " out={}", n.outlets.join(","));
        }
        match &n.kind {
            NodeKind::Mixer => {}
            NodeKind::Splitter { fractions } => {
                if let Some(f) = fractions {
                    let _ = write!(out, " alpha={}", list(f));
                }
            }
            NodeKind::ComponentSeparator { alpha, t_out } => {
                let rows: Vec<String> = alpha
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .map(|(j, x)| format!("{}:{}", t.components[j].id, exact(*x)))
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect();
                let _ = write!(out, " alpha={}", rows.join(";"));
                if let Some(tt) = t_out {
                    let _ = write!(out, " tout={}", list(tt));
                }
            }
            NodeKind::LinearReactor(p) => {
                let _ = write!(
                    out,
                    " key={} a={} ay={} aT={}",
                    t.components[p.key].id,
                    comp(&p.a),
                    exact(p.a_y),
                    exact(p.a_t)
                );
                if let Some(tf) = p.t_fixed {
                    let _ = write!(out, " T={}", exact(tf));
                }
                let _ = write!(
                    out,
                    " Tmin={} Tmax={} qrct={} duty={}",
                    exact(p.t_min),
                    exact(p.t_max),
                    exact(p.q_rct),
                    exact(p.duty)
                );
                if !p.rows.is_empty() {
                    let rows: Vec<String> = p
                        .rows
                        .iter()
                        .map(|r| {
                            let mut e = Vec::new();
                            for (side, v) in [("in", &r.inlet), ("out", &r.outlet)] {
                                for (j, x) in v.iter().enumerate() {
                                    if *x != 0.0 {
                                        e.push(format!(
                                            "{side}.{}:{}",
                                            t.components[j].id,
                                            exact(*x)
                                        ));
                                    }
                                }
                            }
                            e.join(",")
                        })
                        .collect();
                    let _ = write!(out, " rows={}", rows.join(";"));
                }
            }
            NodeKind::HeatExchanger(p) => {
                let _ = write!(
                    out,
                    " Qbase={} Thbase={} Tcbase={} Fhbase={} Fcbase={} UA={}",
                    exact(p.q_base),
                    exact(p.th_base),
                    exact(p.tc_base),
                    exact(p.fh_base),
                    exact(p.fc_base),
                    exact(p.ua)
                );
            }
            NodeKind::HeaterCooler {
                duty,
                q_min,
                q_max,
                t_out,
                phase_change,
            } => {
                for (k, v) in [
                    ("duty", duty),
                    ("qmin", q_min),
                    ("qmax", q_max),
                    ("tout", t_out),
                ] {
                    if let Some(v) = v {
                        let _ = write!(out, " {k}={}", exact(*v));
                    }
                }
                match phase_change {
                    PhaseChange::None => {}
                    PhaseChange::Vaporize => out.push_str(" phase_change=vaporize"),
                    PhaseChange::Condense => out.push_str(" phase_change=condense"),
                }
            }
            NodeKind::Source {
                composition,
                flow,
                f_min,
                f_max,
                price,
                temperature,
            } => {
                let _ = write!(out, " composition={}", comp(composition));
                if let Some(f) = flow {
                    let _ = write!(out, " flow={}", exact(*f));
                }
                let _ = write!(out, " fmin={}", exact(*f_min));
                if let Some(f) = f_max {
                    let _ = write!(out, " fmax={}", exact(*f));
                }
                let _ = write!(out, " price={}", list(price));
                if let Some(tt) = temperature {
                    let _ = write!(out, " T={}", exact(*tt));
                }
            }
            NodeKind::Sink {
                price,
                f_min,
                f_max,
                demand,
            } => {
                let _ = write!(out, " price={} fmin={}", list(price), exact(*f_min));
                if let Some(f) = f_max {
                    let _ = write!(out, " fmax={}", exact(*f));
                }
                if let Some(d) = demand {
                    let _ = write!(out, " demand={}", list(d));
                }
            }
            NodeKind::Inventory {
                capacity,
                initial,
                final_min,
            } => {
                let _ = write!(
                    out,
                    " capacity={} initial={}",
                    exact(*capacity),
                    comp(initial)
                );
                if let Some(f) = final_min {
                    let _ = write!(out, " final={}", exact(*f));
                }
            }
            NodeKind::DataDrivenLinear(m) => data_driven(&mut out, "", m),
        }
        match n.utility {
            Utility::None => {}
            Utility::Electric => out.push_str(" utility=electric"),
            Utility::Steam => out.push_str(" utility=steam"),
        }
        if let Some(m) = &n.hybrid {
            data_driven(&mut out, "dd_", m);
        }
        out.push('\n');
    }

    out.push_str("\n[streams]\n");
    for s in &t.streams {
        let _ = write!(
            out,
            "id={} from={} to={}",
            s.id,
            s.source.as_str(),
            s.sink.as_str()
        );
        if s.tear {
            out.push_str(" tear=true");
        }
        out.push('\n');
    }
    out
}

fn data_driven(out: &mut String, prefix: &str, m: &DataDrivenModel) {
    let gain: Vec<String> = m.gain.iter().map(|r| list(r)).collect();
    let _ = write!(
        out,
        " {prefix}gain={} {prefix}bias={} {prefix}u={} {prefix}umin={} {prefix}umax={}",
        gain.join(";"),
        list(&m.bias),
        list(&m.u),
        list(&m.u_min),
        list(&m.u_max)
    );
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| exact(*x)).collect::<Vec<_>>().join(",")
}

fn quote(s: &str) -> String {
    if s.chars().any(|c| c.is_whitespace() || c == '#' || c == '"') {
        format!("\"{}\"", s.replace('"', "'"))
    } else {
        s.to_string()
    }
}
