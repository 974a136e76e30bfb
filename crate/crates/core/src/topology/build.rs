use std::collections::HashMap;

use super::lexer::{at_line, lex, named_entries, syntax, Pair, Record, Section};
use super::{
    validate, Component, DataDrivenModel, Diagnostic, Endpoint, ExchangerParams, NodeDef, NodeKind,
    PhaseChange, ReactorParams, ReactorRow, StreamDef, Topology, Utility,
};
use crate::error::{Error, Result};
use crate::properties::{Correlation, StreamPropertyRecord};

/// Parses and validates a topology document. Sections other than the four
/// topology sections must be well-formed but are otherwise ignored here.
pub fn parse_topology(text: &str) -> Result<Topology> {
    let sections = lex(text)?;
    topology_from_sections(&sections)
}

pub fn topology_from_sections(sections: &[Section]) -> Result<Topology> {
    let find = |name: &str| sections.iter().find(|s| s.name == name);
    let mut lines: HashMap<String, usize> = HashMap::new();
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut t = Topology::default();

    if let Some(sec) = find("components") {
        for r in &sec.records {
            r.only(&["id", "description"]).map_err(at_line(r.line))?;
            let id = r.require("id")?.value.clone();
            lines.entry(id.clone()).or_insert(r.line);
            t.components.push(Component {
                id,
                description: r.str("description").unwrap_or("").to_string(),
            });
        }
    }
    if let Some(sec) = find("properties") {
        for r in &sec.records {
            t.properties.push(property(r).map_err(at_line(r.line))?);
        }
    }
    if let Some(sec) = find("streams") {
        for r in &sec.records {
            r.only(&["id", "from", "to", "tear"])
                .map_err(at_line(r.line))?;
            let id = r.require("id")?.value.clone();
            lines.entry(id.clone()).or_insert(r.line);
            t.streams.push(StreamDef {
                id,
                source: Endpoint::parse(&r.require("from")?.value),
                sink: Endpoint::parse(&r.require("to")?.value),
                tear: r.flag("tear").map_err(at_line(r.line))?,
            });
        }
    }
    if let Some(sec) = find("nodes") {
        for r in &sec.records {
            let id = r.require("id")?.value.clone();
            lines.entry(id.clone()).or_insert(r.line);
            match node(r, &t).map_err(at_line(r.line))? {
                Some(n) => t.nodes.push(n),
                None => {
                    let kind = r.str("kind").unwrap_or("");
                    let mut d =
                        Diagnostic::new("unknown-kind", &id, format!("unknown node kind `{kind}`"));
                    d.line = Some(r.line);
                    diags.push(d);
                }
            }
        }
    }

    for mut d in validate(&t) {
        d.line = lines.get(&d.subject).copied();
        diags.push(d);
    }
    if diags.is_empty() {
        Ok(t)
    } else {
        Err(Error::Invalid(diags))
    }
}

fn property(r: &Record) -> Result<StreamPropertyRecord> {
    r.only(&[
        "stream", "T0", "H0", "Cp", "Hvap", "P0", "c", "Tmin", "Tmax",
    ])?;
    let stream = r.require("stream")?.value.clone();
    let t0 = r.require("T0")?.number()?;
    let correlation = match r.get("c") {
        None => None,
        Some(p) => {
            let c = p.numbers()?;
            if c.len() != 4 {
                return Err(p.error("correlation needs exactly 4 coefficients"));
            }
            Some(Correlation {
                coeffs: [c[0], c[1], c[2], c[3]],
                t_min: r.f64("Tmin")?.unwrap_or(0.0),
                t_max: r.f64("Tmax")?.unwrap_or(f64::INFINITY),
            })
        }
    };
    let h0 = match (r.f64("H0")?, &correlation) {
        (Some(h), _) => h,
        (None, Some(c)) => c.value(t0),
        (None, None) => return Err(syntax(r.line, 1, "H0 required without a correlation")),
    };
    let cp = match (r.f64("Cp")?, &correlation) {
        (Some(cp), _) => cp,
        (None, Some(c)) => c.slope(t0),
        (None, None) => return Err(syntax(r.line, 1, "Cp required without a correlation")),
    };
    Ok(StreamPropertyRecord {
        stream,
        t0,
        h0,
        cp,
        hvap: r.f64("Hvap")?,
        p0: r.f64("P0")?,
        correlation,
    })
}

/// Component-keyed vector; unnamed components default to zero.
fn by_component(p: &Pair, t: &Topology) -> Result<Vec<f64>> {
    let mut v = vec![0.0; t.nc()];
    for (name, x) in p.named()? {
        let j = t
            .component_index(&name)
            .ok_or_else(|| p.error(format!("unknown component `{name}`")))?;
        v[j] = x;
    }
    Ok(v)
}

fn reactor_rows(p: &Pair, t: &Topology) -> Result<Vec<ReactorRow>> {
    let nc = t.nc();
    p.value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|row| {
            let mut r = ReactorRow {
                inlet: vec![0.0; nc],
                outlet: vec![0.0; nc],
            };
            for (name, x) in named_entries(row).map_err(|m| p.error(m))? {
                let (side, comp) = name
                    .split_once('.')
                    .ok_or_else(|| p.error(format!("expected in.X or out.X, found `{name}`")))?;
                let j = t
                    .component_index(comp)
                    .ok_or_else(|| p.error(format!("unknown component `{comp}`")))?;
                match side {
                    "in" => r.inlet[j] = x,
                    "out" => r.outlet[j] = x,
                    _ => return Err(p.error(format!("expected in.X or out.X, found `{name}`"))),
                }
            }
            Ok(r)
        })
        .collect()
}

fn data_driven(r: &Record, prefix: &str) -> Result<Option<DataDrivenModel>> {
    let key = |k: &str| format!("{prefix}{k}");
    let Some(g) = r.get(&key("gain")) else {
        return Ok(None);
    };
    let gain = g.matrix()?;
    let u = r.list(&key("u"))?.unwrap_or_default();
    Ok(Some(DataDrivenModel {
        bias: r
            .list(&key("bias"))?
            .unwrap_or_else(|| vec![0.0; gain.len()]),
        u_min: r.list(&key("umin"))?.unwrap_or_else(|| u.clone()),
        u_max: r.list(&key("umax"))?.unwrap_or_else(|| u.clone()),
        gain,
        u,
    }))
}

const COMMON: &[&str] = &[
    "id", "kind", "in", "out", "utility", "dd_gain", "dd_bias", "dd_u", "dd_umin", "dd_umax",
];

fn node(r: &Record, t: &Topology) -> Result<Option<NodeDef>> {
    let kind_name = r.require("kind")?.value.as_str();
    let extra: &[&str] = match kind_name {
        "Mixer" => &[],
        "Splitter" => &["alpha"],
        "ComponentSeparator" => &["alpha", "tout"],
        "LinearReactor" => &[
            "key", "a", "ay", "aT", "T", "Tmin", "Tmax", "qrct", "duty", "rows",
        ],
        "HeatExchanger" => &["Qbase", "Thbase", "Tcbase", "Fhbase", "Fcbase", "UA"],
        "HeaterCooler" => &["duty", "qmin", "qmax", "tout", "phase_change"],
        "Source" => &["composition", "flow", "fmin", "fmax", "price", "T"],
        "Sink" => &["price", "fmin", "fmax", "demand"],
        "Inventory" => &["capacity", "initial", "final"],
        "DataDrivenLinear" => &["gain", "bias", "u", "umin", "umax"],
        _ => return Ok(None),
    };
    let allowed: Vec<&str> = COMMON.iter().chain(extra).copied().collect();
    r.only(&allowed)?;

    let req = |k: &str| -> Result<f64> { r.require(k)?.number() };
    let kind = match kind_name {
        "Mixer" => NodeKind::Mixer,
        "Splitter" => NodeKind::Splitter {
            fractions: r.list("alpha")?,
        },
        "ComponentSeparator" => {
            let p = r.require("alpha")?;
            let alpha = p
                .value
                .split(';')
                .map(|row| {
                    let q = Pair {
                        key: p.key.clone(),
                        value: row.trim().to_string(),
                        column: p.column,
                    };
                    by_component(&q, t)
                })
                .collect::<Result<Vec<_>>>()?;
            NodeKind::ComponentSeparator {
                alpha,
                t_out: r.list("tout")?,
            }
        }
        "LinearReactor" => {
            let kp = r.require("key")?;
            let key = t
                .component_index(&kp.value)
                .ok_or_else(|| kp.error(format!("unknown component `{}`", kp.value)))?;
            NodeKind::LinearReactor(ReactorParams {
                key,
                a: by_component(r.require("a")?, t)?,
                a_y: req("ay")?,
                a_t: r.f64("aT")?.unwrap_or(0.0),
                t_fixed: r.f64("T")?,
                t_min: r.f64("Tmin")?.unwrap_or(1.0),
                t_max: r.f64("Tmax")?.unwrap_or(5000.0),
                q_rct: r.f64("qrct")?.unwrap_or(0.0),
                duty: r.f64("duty")?.unwrap_or(0.0),
                rows: match r.get("rows") {
                    Some(p) => reactor_rows(p, t)?,
                    None => Vec::new(),
                },
            })
        }
        "HeatExchanger" => NodeKind::HeatExchanger(ExchangerParams {
            q_base: req("Qbase")?,
            th_base: req("Thbase")?,
            tc_base: req("Tcbase")?,
            fh_base: req("Fhbase")?,
            fc_base: req("Fcbase")?,
            ua: req("UA")?,
        }),
        "HeaterCooler" => NodeKind::HeaterCooler {
            duty: r.f64("duty")?,
            q_min: r.f64("qmin")?,
            q_max: r.f64("qmax")?,
            t_out: r.f64("tout")?,
            phase_change: match r.get("phase_change") {
                None => PhaseChange::None,
                Some(p) => match p.value.as_str() {
                    "false" | "none" => PhaseChange::None,
                    "true" | "vaporize" => PhaseChange::Vaporize,
                    "condense" => PhaseChange::Condense,
                    other => return Err(p.error(format!("unknown phase change `{other}`"))),
                },
            },
        },
        "Source" => NodeKind::Source {
            composition: by_component(r.require("composition")?, t)?,
            flow: r.f64("flow")?,
            f_min: r.f64("fmin")?.unwrap_or(0.0),
            f_max: r.f64("fmax")?,
            price: r.list("price")?.unwrap_or_else(|| vec![0.0]),
            temperature: r.f64("T")?,
        },
        "Sink" => NodeKind::Sink {
            price: r.list("price")?.unwrap_or_else(|| vec![0.0]),
            f_min: r.f64("fmin")?.unwrap_or(0.0),
            f_max: r.f64("fmax")?,
            demand: r.list("demand")?,
        },
        "Inventory" => NodeKind::Inventory {
            capacity: req("capacity")?,
            initial: match r.get("initial") {
                Some(p) => by_component(p, t)?,
                None => vec![0.0; t.nc()],
            },
            final_min: r.f64("final")?,
        },
        "DataDrivenLinear" => NodeKind::DataDrivenLinear(
            data_driven(r, "")?.ok_or_else(|| syntax(r.line, 1, "missing key `gain`"))?,
        ),
        _ => unreachable!(),
    };
    let utility = match r.get("utility") {
        None => Utility::None,
        Some(p) => match p.value.as_str() {
            "none" => Utility::None,
            "electric" => Utility::Electric,
            "steam" => Utility::Steam,
            other => return Err(p.error(format!("unknown utility `{other}`"))),
        },
    };
    Ok(Some(NodeDef {
        id: r.require("id")?.value.clone(),
        kind,
        inlets: r.get("in").map(Pair::ids).unwrap_or_default(),
        outlets: r.get("out").map(Pair::ids).unwrap_or_default(),
        utility,
        hybrid: data_driven(r, "dd_")?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[components]
id=A
[nodes]
id=src kind=Source out=s1 composition=A:1 flow=5
id=snk kind=Sink in=s1
[streams]
id=s1 from=src to=snk
";

    #[test]
    fn minimal_document() {
        let t = parse_topology(MINIMAL).unwrap();
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.streams.len(), 1);
    }

    #[test]
    fn dangling_sink_names_stream() {
        let text = MINIMAL.replace("id=s1 from=src to=snk", "id=s1 from=src to=nowhere");
        let Err(Error::Invalid(d)) = parse_topology(&text) else {
            panic!("expected diagnostics")
        };
        let dangling = d.iter().find(|d| d.rule == "dangling-node").unwrap();
        assert_eq!(dangling.subject, "s1");
        assert_eq!(dangling.line, Some(7));
    }

    #[test]
    fn unknown_kind_reported_with_line() {
        let text = MINIMAL.replace("kind=Sink", "kind=Drain");
        let Err(Error::Invalid(d)) = parse_topology(&text) else {
            panic!("expected diagnostics")
        };
        assert!(d
            .iter()
            .any(|d| d.rule == "unknown-kind" && d.line == Some(5)));
    }

    #[test]
    fn duplicate_id() {
        let text = MINIMAL.replace("[nodes]\n", "[nodes]\nid=snk kind=Mixer in=s1 out=s1\n");
        let Err(Error::Invalid(d)) = parse_topology(&text) else {
            panic!("expected diagnostics")
        };
        assert!(d.iter().any(|d| d.rule == "duplicate-node"));
    }

    #[test]
    fn bad_number_is_syntax_error() {
        let text = MINIMAL.replace("flow=5", "flow=five");
        assert!(matches!(
            parse_topology(&text),
            Err(Error::Syntax { line: 4, .. })
        ));
    }
}
