use std::collections::{HashMap, HashSet};

use super::{Diagnostic, Endpoint, NodeKind, Topology};

const FRACTION_TOL: f64 = 1e-9;

/// Checks every structural invariant; an empty result means the topology is
/// fit for instantiation.
pub fn validate(t: &Topology) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let nc = t.nc();

    duplicates(
        t.components.iter().map(|c| c.id.as_str()),
        "duplicate-component",
        &mut out,
    );
    duplicates(
        t.nodes.iter().map(|n| n.id.as_str()),
        "duplicate-node",
        &mut out,
    );
    duplicates(
        t.streams.iter().map(|s| s.id.as_str()),
        "duplicate-stream",
        &mut out,
    );
    duplicates(
        t.properties.iter().map(|p| p.stream.as_str()),
        "duplicate-property",
        &mut out,
    );
    for c in &t.components {
        if c.id.is_empty() {
            out.push(Diagnostic::new("empty-id", "", "component with empty id"));
        }
    }
    if nc == 0 {
        out.push(Diagnostic::new(
            "no-components",
            "",
            "topology declares no components",
        ));
    }

    let node_ids: HashSet<&str> = t.nodes.iter().map(|n| n.id.as_str()).collect();
    let stream_ids: HashSet<&str> = t.streams.iter().map(|s| s.id.as_str()).collect();

    let mut produced: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut consumed: HashMap<&str, Vec<&str>> = HashMap::new();
    for n in &t.nodes {
        if n.id.is_empty() || n.id == super::BOUNDARY {
            out.push(Diagnostic::new(
                "reserved-id",
                &n.id,
                "node id is empty or reserved",
            ));
        }
        for s in &n.inlets {
            if !stream_ids.contains(s.as_str()) {
                out.push(Diagnostic::new(
                    "dangling-stream",
                    s,
                    format!("node `{}` references undeclared stream `{s}`", n.id),
                ));
            }
            consumed.entry(s.as_str()).or_default().push(&n.id);
        }
        for s in &n.outlets {
            if !stream_ids.contains(s.as_str()) {
                out.push(Diagnostic::new(
                    "dangling-stream",
                    s,
                    format!("node `{}` references undeclared stream `{s}`", n.id),
                ));
            }
            produced.entry(s.as_str()).or_default().push(&n.id);
        }
        arity(n, &mut out);
        params(n, nc, t, &mut out);
    }

    for s in &t.streams {
        if s.source == Endpoint::Boundary && s.sink == Endpoint::Boundary {
            out.push(Diagnostic::new(
                "boundary-both-ends",
                &s.id,
                "stream has BOUNDARY at both ends",
            ));
        }
        for (end, map, rule_multi) in [
            (&s.source, &produced, "stream-multiply-produced"),
            (&s.sink, &consumed, "stream-multiply-consumed"),
        ] {
            let claimants = map.get(s.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            if claimants.len() > 1 {
                out.push(Diagnostic::new(
                    rule_multi,
                    &s.id,
                    format!("claimed by nodes {}", claimants.join(", ")),
                ));
            }
            match end {
                Endpoint::Node(id) => {
                    if !node_ids.contains(id.as_str()) {
                        out.push(Diagnostic::new(
                            "dangling-node",
                            &s.id,
                            format!("stream `{}` references undeclared node `{id}`", s.id),
                        ));
                    } else if !claimants.contains(&id.as_str()) {
                        out.push(Diagnostic::new(
                            "stream-endpoint-mismatch",
                            &s.id,
                            format!("node `{id}` does not list stream `{}`", s.id),
                        ));
                    }
                }
                Endpoint::Boundary => {
                    if !claimants.is_empty() {
                        out.push(Diagnostic::new(
                            "stream-endpoint-mismatch",
                            &s.id,
                            "BOUNDARY end is also claimed by a node",
                        ));
                    }
                }
            }
        }
    }

    for p in &t.properties {
        if !stream_ids.contains(p.stream.as_str()) {
            out.push(Diagnostic::new(
                "property-unknown-stream",
                &p.stream,
                "property record for undeclared stream",
            ));
        }
        for rule in p.violations() {
            out.push(Diagnostic::new(
                rule,
                &p.stream,
                "property record invariant violated",
            ));
        }
    }

    if !t.nodes.is_empty() && !connected(t) {
        out.push(Diagnostic::new(
            "disconnected",
            "",
            "plant graph is not weakly connected",
        ));
    }
    out
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>, rule: &str, out: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Diagnostic::new(
                rule,
                id,
                format!("id `{id}` declared twice"),
            ));
        }
    }
}

fn arity(n: &super::NodeDef, out: &mut Vec<Diagnostic>) {
    let (ni, no) = (n.inlets.len(), n.outlets.len());
    let (ok, rule) = match &n.kind {
        NodeKind::Mixer => (ni >= 1 && no == 1, "mixer-arity"),
        NodeKind::Splitter { .. } => (ni == 1 && no >= 1, "splitter-arity"),
        NodeKind::ComponentSeparator { .. } => (ni == 1 && no >= 2, "separator-arity"),
        NodeKind::LinearReactor(_) => (ni == 1 && no == 1, "reactor-arity"),
        NodeKind::HeatExchanger(_) => (ni == 2 && no == 2, "exchanger-arity"),
        NodeKind::HeaterCooler { .. } => (ni == 1 && no == 1, "heater-arity"),
        NodeKind::Source { .. } => (ni == 0 && no == 1, "source-arity"),
        NodeKind::Sink { .. } => (ni == 1 && no == 0, "sink-arity"),
        NodeKind::Inventory { .. } => (ni == 1 && no == 1, "inventory-arity"),
        NodeKind::DataDrivenLinear(_) => (ni == 1 && no == 1, "datadriven-arity"),
    };
    if !ok {
        out.push(Diagnostic::new(
            rule,
            &n.id,
            format!("{} with {ni} inlet(s) and {no} outlet(s)", n.kind.name()),
        ));
    }
}

fn params(n: &super::NodeDef, nc: usize, t: &Topology, out: &mut Vec<Diagnostic>) {
    let mut bad = |rule: &str, msg: String| out.push(Diagnostic::new(rule, &n.id, msg));
    match &n.kind {
        NodeKind::Splitter { fractions: Some(f) } => {
            let sum: f64 = f.iter().sum();
            if f.len() != n.outlets.len()
                || f.iter().any(|a| *a < 0.0)
                || (sum - 1.0).abs() > FRACTION_TOL
            {
                bad(
                    "splitter-fractions",
                    format!("split fractions must be nonnegative, one per outlet, and sum to 1 (sum {sum})"),
                );
            }
        }
        NodeKind::ComponentSeparator { alpha, t_out } => {
            if alpha.len() != n.outlets.len() || alpha.iter().any(|r| r.len() != nc) {
                bad(
                    "separator-alpha",
                    "alpha must have one row per outlet and one column per component".into(),
                );
            } else {
                for j in 0..nc {
                    let col: Vec<f64> = alpha.iter().map(|r| r[j]).collect();
                    let sum: f64 = col.iter().sum();
                    if col.iter().any(|a| !(0.0..=1.0).contains(a))
                        || (sum - 1.0).abs() > FRACTION_TOL
                    {
                        bad(
                            "separator-alpha",
                            format!(
                                "component {j}: alpha must lie in [0,1] and sum to 1 over outlets"
                            ),
                        );
                    }
                }
            }
            if let Some(tt) = t_out {
                if tt.len() != n.outlets.len() {
                    bad("separator-tout", "one outlet temperature per outlet".into());
                }
            }
        }
        NodeKind::LinearReactor(p) => {
            if p.a.len() != nc || p.key >= nc {
                bad(
                    "reactor-coefficients",
                    "one coefficient per component and a valid key".into(),
                );
            }
            if p.a_y == 0.0 {
                bad("reactor-coefficients", "a_y must be nonzero".into());
            }
            if nc >= 2 && p.rows.len() != nc - 2 {
                bad(
                    "reactor-rows",
                    format!(
                        "expected {} stoichiometric rows, found {}",
                        nc - 2,
                        p.rows.len()
                    ),
                );
            }
            if p.rows
                .iter()
                .any(|r| r.inlet.len() != nc || r.outlet.len() != nc)
            {
                bad(
                    "reactor-rows",
                    "rows need one inlet and one outlet coefficient per component".into(),
                );
            }
        }
        NodeKind::HeatExchanger(p) => {
            if !(p.q_base > 0.0
                && p.th_base > p.tc_base
                && p.ua > 0.0
                && p.fh_base > 0.0
                && p.fc_base > 0.0)
            {
                bad(
                    "exchanger-params",
                    "need Q_base > 0, Th_base > Tc_base, UA > 0 and positive base flows".into(),
                );
            }
            if n.inlets.len() == 2 && n.inlets[0] == n.inlets[1] {
                bad(
                    "exchanger-pairing",
                    "hot and cold inlets must be distinct".into(),
                );
            }
            if n.outlets.len() == 2 && n.outlets[0] == n.outlets[1] {
                bad(
                    "exchanger-pairing",
                    "hot and cold outlets must be distinct".into(),
                );
            }
        }
        NodeKind::HeaterCooler { q_min, q_max, .. } => {
            if let (Some(a), Some(b)) = (q_min, q_max) {
                if a > b {
                    bad("heater-bounds", "q_min exceeds q_max".into());
                }
            }
        }
        NodeKind::Source {
            composition,
            f_min,
            f_max,
            ..
        } => {
            let sum: f64 = composition.iter().sum();
            if composition.len() != nc
                || composition.iter().any(|w| *w < 0.0)
                || (sum - 1.0).abs() > FRACTION_TOL
            {
                bad(
                    "source-composition",
                    format!("mass fractions must be nonnegative and sum to 1 (sum {sum})"),
                );
            }
            if f_max.is_some_and(|m| m < *f_min) {
                bad("source-bounds", "f_min exceeds f_max".into());
            }
        }
        NodeKind::Sink { f_min, f_max, .. } => {
            if f_max.is_some_and(|m| m < *f_min) {
                bad("sink-bounds", "f_min exceeds f_max".into());
            }
        }
        NodeKind::Inventory {
            capacity, initial, ..
        } => {
            if initial.len() != nc
                || initial.iter().any(|h| *h < 0.0)
                || initial.iter().sum::<f64>() > *capacity
            {
                bad(
                    "inventory-holdup",
                    "initial holdup must be nonnegative and within capacity".into(),
                );
            }
        }
        NodeKind::DataDrivenLinear(m) => data_driven(m, nc, &n.id, out),
        _ => {}
    }
    if let Some(m) = &n.hybrid {
        if !matches!(
            n.kind,
            NodeKind::LinearReactor(_) | NodeKind::DataDrivenLinear(_)
        ) {
            out.push(Diagnostic::new(
                "hybrid-kind",
                &n.id,
                "only reactors may carry an alternate data-driven model",
            ));
        }
        data_driven(m, nc, &n.id, out);
    }
    let _ = t;
}

fn data_driven(m: &super::DataDrivenModel, nc: usize, id: &str, out: &mut Vec<Diagnostic>) {
    let nu = m.inputs();
    if m.gain.len() != nc
        || m.gain.iter().any(|r| r.len() != nc + nu)
        || m.bias.len() != nc
        || m.u_min.len() != nu
        || m.u_max.len() != nu
    {
        out.push(Diagnostic::new(
            "datadriven-shape",
            id,
            "gain must be NC x (NC + inputs), bias NC long, input bounds one per input",
        ));
    }
}

/// Weak connectivity with BOUNDARY treated as one extra vertex.
fn connected(t: &Topology) -> bool {
    let n = t.nodes.len();
    let boundary = n;
    let index: HashMap<&str, usize> = t
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut uses_boundary = false;
    let resolve = |e: &Endpoint, ub: &mut bool| match e {
        Endpoint::Boundary => {
            *ub = true;
            Some(boundary)
        }
        Endpoint::Node(id) => index.get(id.as_str()).copied(),
    };
    for s in &t.streams {
        let a = resolve(&s.source, &mut uses_boundary);
        let b = resolve(&s.sink, &mut uses_boundary);
        if let (Some(a), Some(b)) = (a, b) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let root = find(&mut parent, 0);
    (0..n).all(|i| find(&mut parent, i) == root)
        && (!uses_boundary || find(&mut parent, boundary) == root)
}
