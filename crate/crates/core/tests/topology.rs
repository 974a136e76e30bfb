use massflow::cases::load;
use massflow::topology::{parse_topology, serialize, validate, Endpoint, NodeKind, Topology};
use massflow::Error;
use proptest::prelude::*;

/// Rules reported for `text`; parsing runs the validator itself.
fn rules(text: &str) -> Vec<String> {
    match parse_topology(text) {
        Err(Error::Invalid(d)) => d.into_iter().map(|d| d.rule).collect(),
        other => panic!("expected diagnostics, got {other:?}"),
    }
}

#[test]
fn hydrogen_case_node_count() {
    // feed, electric preheat, ATR, WGS, PSA, tank, pipeline, vent
    let t = load("h2_atr_wgs").unwrap().document.topology;
    assert_eq!(t.nodes.len(), 8);
    assert_eq!(t.streams.len(), 7);
}

#[test]
fn bundled_cases_validate_clean() {
    for n in massflow::cases::names() {
        let t = load(n).unwrap().document.topology;
        assert!(validate(&t).is_empty(), "{n}: {:?}", validate(&t));
    }
}

#[test]
fn mixer_without_inlets() {
    let r = rules(
        "[components]\nid=A\n[nodes]\nid=m kind=Mixer out=s\nid=k kind=Sink in=s\n[streams]\nid=s from=m to=k\n",
    );
    assert!(r.contains(&"mixer-arity".to_string()), "{r:?}");
}

#[test]
fn stream_produced_twice() {
    let r = rules(
        "[components]\nid=A\n[nodes]\nid=a kind=Source out=s composition=A:1 flow=1\n\
         id=b kind=Source out=s composition=A:1 flow=1\nid=k kind=Sink in=s\n[streams]\nid=s from=a to=k\n",
    );
    assert!(r.contains(&"stream-multiply-produced".to_string()), "{r:?}");
}

#[test]
fn bundled_cases_round_trip() {
    for n in massflow::cases::names() {
        let t = load(n).unwrap().document.topology;
        let again = parse_topology(&serialize(&t)).unwrap();
        assert_eq!(again, t, "{n}");
        assert_eq!(serialize(&again), serialize(&t), "{n}");
    }
}

/// Random flowsheet text: a main line from one source through mixers,
/// splitters, separators and heaters, with side feeds and side products.
fn flowsheet() -> impl Strategy<Value = String> {
    let comps = 1usize..4;
    let steps = prop::collection::vec((0u8..4, 0.05f64..0.95, 0.1f64..10.0), 0..6);
    (comps, steps, 0.5f64..20.0).prop_map(|(nc, steps, flow)| {
        let ids: Vec<String> = (0..nc).map(|j| format!("C{j}")).collect();
        let comp = |w: f64| -> String {
            if nc == 1 {
                format!("{}:1", ids[0])
            } else {
                let rest = (1.0 - w) / (nc - 1) as f64;
                ids.iter()
                    .enumerate()
                    .map(|(j, c)| format!("{c}:{}", if j == 0 { w } else { rest }))
                    .collect::<Vec<_>>()
                    .join(",")
            }
        };
        let mut nodes = vec![format!("id=src kind=Source out=s0 composition={} flow={flow}", comp(0.5))];
        let mut streams = vec![];
        let mut cur = "s0".to_string();
        let mut from = "src".to_string();
        for (k, (kind, a, f)) in steps.iter().enumerate() {
            let id = format!("n{k}");
            let next = format!("s{}", k + 1);
            streams.push(format!("id={cur} from={from} to={id}"));
            match kind {
                0 => {
                    let side = format!("f{k}");
                    nodes.push(format!("id=x{k} kind=Source out={side} composition={} flow={f}", comp(*a)));
                    streams.push(format!("id={side} from=x{k} to={id}"));
                    nodes.push(format!("id={id} kind=Mixer in={cur},{side} out={next}"));
                }
                1 | 2 => {
                    let side = format!("p{k}");
                    nodes.push(format!("id=k{k} kind=Sink in={side}"));
                    streams.push(format!("id={side} from={id} to=k{k}"));
                    if *kind == 1 {
                        nodes.push(format!("id={id} kind=Splitter in={cur} out={next},{side} alpha={a},{}", 1.0 - a));
                    } else {
                        let keep: Vec<String> = ids.iter().map(|c| format!("{c}:{a}")).collect();
                        let pass: Vec<String> = ids.iter().map(|c| format!("{c}:{}", 1.0 - a)).collect();
                        nodes.push(format!(
                            "id={id} kind=ComponentSeparator in={cur} out={next},{side} alpha=\"{};{}\"",
                            keep.join(","),
                            pass.join(",")
                        ));
                    }
                }
                _ => nodes.push(format!("id={id} kind=HeaterCooler in={cur} out={next} duty={f}")),
            }
            from = id;
            cur = next;
        }
        nodes.push(format!("id=out kind=Sink in={cur}"));
        streams.push(format!("id={cur} from={from} to=out"));
        let comps: Vec<String> = ids.iter().map(|c| format!("id={c}")).collect();
        format!(
            "[components]\n{}\n\n[nodes]\n{}\n\n[streams]\n{}\n",
            comps.join("\n"),
            nodes.join("\n"),
            streams.join("\n")
        )
    })
}

/// Type invariants checked directly, independent of the validator.
fn invariants_hold(t: &Topology) -> bool {
    let mut ids: Vec<&str> = t.nodes.iter().map(|n| n.id.as_str()).collect();
    ids.sort();
    ids.dedup();
    if ids.len() != t.nodes.len() {
        return false;
    }
    for s in &t.streams {
        let produced = t.nodes.iter().filter(|n| n.outlets.contains(&s.id)).count();
        let consumed = t.nodes.iter().filter(|n| n.inlets.contains(&s.id)).count();
        let bf = matches!(s.source, Endpoint::Boundary) as usize;
        let bt = matches!(s.sink, Endpoint::Boundary) as usize;
        if produced + bf != 1 || consumed + bt != 1 || bf + bt > 1 {
            return false;
        }
    }
    t.nodes.iter().all(|n| {
        let (i, o) = (n.inlets.len(), n.outlets.len());
        match &n.kind {
            NodeKind::Mixer => i >= 1 && o == 1,
            NodeKind::Splitter { .. } | NodeKind::ComponentSeparator { .. } => i == 1 && o >= 2,
            NodeKind::Source { .. } => i == 0 && o == 1,
            NodeKind::Sink { .. } => i == 1 && o == 0,
            NodeKind::HeatExchanger(_) => i == 2 && o == 2,
            _ => i == 1 && o == 1,
        }
    })
}

/// Drops or duplicates whole lines of a valid document.
fn mutate(text: &str, ops: &[(bool, usize)]) -> String {
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    for &(dup, k) in ops {
        let k = k % lines.len();
        if lines[k].starts_with('[') || lines[k].is_empty() {
            continue;
        }
        if dup {
            let l = lines[k].clone();
            lines.insert(k, l);
        } else {
            lines.remove(k);
        }
    }
    lines.join("\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_flowsheets_validate_and_round_trip(text in flowsheet()) {
        let t = parse_topology(&text).unwrap();
        prop_assert!(validate(&t).is_empty(), "{:?}", validate(&t));
        prop_assert!(invariants_hold(&t));
        let again = parse_topology(&serialize(&t)).unwrap();
        prop_assert_eq!(&again, &t);
    }

    #[test]
    fn clean_validation_implies_invariants(
        text in flowsheet(),
        ops in prop::collection::vec((any::<bool>(), 0usize..64), 1..4),
    ) {
        let mutated = mutate(&text, &ops);
        if let Ok(t) = parse_topology(&mutated) {
            if validate(&t).is_empty() {
                prop_assert!(invariants_hold(&t), "{}", mutated);
            }
        }
    }

    #[test]
    fn validate_never_panics(lines in prop::collection::vec(
        prop::sample::select(vec![
            "[components]", "[nodes]", "[streams]", "[properties]", "id=A", "id=B",
            "id=s kind=Source out=a composition=A:1 flow=1",
            "id=m kind=Mixer in=a,b out=c", "id=m kind=Mixer out=c",
            "id=k kind=Sink in=c", "id=k kind=Sink in=a",
            "id=p kind=Splitter in=c out=a,b alpha=0.5,0.5",
            "id=a from=s to=m", "id=b from=BOUNDARY to=m", "id=c from=m to=BOUNDARY",
            "id=c from=m to=k", "stream=a T0=300 H0=0 Cp=1", "# note", "",
        ]),
        0..20,
    )) {
        if let Ok(t) = parse_topology(&lines.join("\n")) {
            let _ = validate(&t);
        }
    }
}
