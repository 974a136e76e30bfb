use massflow::instantiation::{
    count_nonlinearities, emit_energy_balance, emit_mixer, emit_node, emit_reactor, emit_separator,
    emit_splitter, instantiate, names, AbstractionLevel, AbstractionPlan, EquationSystem, Paradigm,
    RowTag, Scenario,
};
use massflow::topology::parse_topology;
use massflow::topology::Topology;
use massflow::Error;

fn components(nc: usize) -> String {
    (0..nc).map(|j| format!("id=C{j}\n")).collect()
}

fn uniform(nc: usize) -> String {
    (0..nc)
        .map(|j| format!("C{j}:{}", 1.0 / nc as f64))
        .collect::<Vec<_>>()
        .join(",")
}

/// `nin` sources feeding mixer `m`, whose outlet goes either to a sink or
/// to a two-way splitter.
fn mixer_doc(nin: usize, nc: usize, splitter_after: bool) -> Topology {
    let mut nodes = String::new();
    let mut streams = String::new();
    let ins: Vec<String> = (0..nin).map(|i| format!("f{i}")).collect();
    for (i, s) in ins.iter().enumerate() {
        nodes += &format!(
            "id=src{i} kind=Source out={s} composition={} flow=1\n",
            uniform(nc)
        );
        streams += &format!("id={s} from=src{i} to=m\n");
    }
    nodes += &format!("id=m kind=Mixer in={} out=mo\n", ins.join(","));
    if splitter_after {
        nodes += "id=sp kind=Splitter in=mo out=a,b alpha=0.5,0.5\n";
        nodes += "id=ka kind=Sink in=a\nid=kb kind=Sink in=b\n";
        streams += "id=mo from=m to=sp\nid=a from=sp to=ka\nid=b from=sp to=kb\n";
    } else {
        nodes += "id=k kind=Sink in=mo\n";
        streams += "id=mo from=m to=k\n";
    }
    let text = format!(
        "[components]\n{}[nodes]\n{nodes}[streams]\n{streams}",
        components(nc)
    );
    parse_topology(&text).unwrap()
}

fn separator_doc(nc: usize, nout: usize) -> Topology {
    let alpha = (0..nout)
        .map(|k| {
            (0..nc)
                .map(|j| format!("C{j}:{}", if j % nout == k { 1.0 } else { 0.0 }))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";");
    let outs: Vec<String> = (0..nout).map(|k| format!("o{k}")).collect();
    let mut nodes = format!(
        "id=src kind=Source out=f composition={} flow=1\n",
        uniform(nc)
    );
    nodes += &format!(
        "id=sep kind=ComponentSeparator in=f out={} alpha=\"{alpha}\"\n",
        outs.join(",")
    );
    let mut streams = "id=f from=src to=sep\n".to_string();
    for (k, o) in outs.iter().enumerate() {
        nodes += &format!("id=k{k} kind=Sink in={o}\n");
        streams += &format!("id={o} from=sep to=k{k}\n");
    }
    parse_topology(&format!(
        "[components]\n{}[nodes]\n{nodes}[streams]\n{streams}",
        components(nc)
    ))
    .unwrap()
}

fn reactor_doc(temperature: &str) -> Topology {
    let text = format!(
        "\
[components]
id=A
id=B
id=I
[properties]
stream=f T0=300 H0=0 Cp=2
stream=p T0=600 H0=100 Cp=2.5
[nodes]
id=src kind=Source out=f composition=A:0.9,I:0.1 flow=10
id=rx kind=LinearReactor in=f out=p key=B a=A:0.6 ay=-1 aT=0.0002 {temperature} rows=\"in.I:1,out.I:-1\"
id=k kind=Sink in=p
[streams]
id=f from=src to=rx
id=p from=rx to=k
"
    );
    parse_topology(&text).unwrap()
}

fn splitter_doc(nc: usize, nout: usize, alpha: Option<&str>) -> Topology {
    let outs: Vec<String> = (0..nout).map(|k| format!("o{k}")).collect();
    let mut nodes = format!(
        "id=src kind=Source out=f composition={} flow=1\n",
        uniform(nc)
    );
    nodes += &format!("id=sp kind=Splitter in=f out={}", outs.join(","));
    if let Some(a) = alpha {
        nodes += &format!(" alpha={a}");
    }
    nodes += "\n";
    let mut streams = "id=f from=src to=sp\n".to_string();
    for (k, o) in outs.iter().enumerate() {
        nodes += &format!("id=k{k} kind=Sink in={o}\n");
        streams += &format!("id={o} from=sp to=k{k}\n");
    }
    parse_topology(&format!(
        "[components]\n{}[nodes]\n{nodes}[streams]\n{streams}",
        components(nc)
    ))
    .unwrap()
}

fn heater_doc(extra: &str) -> Topology {
    let text = format!(
        "\
[components]
id=W
[properties]
stream=a T0=300 H0=100 Cp=4
stream=b T0=350 H0=150 Cp=4
[nodes]
id=src kind=Source out=a composition=W:1 flow=2
id=h kind=HeaterCooler in=a out=b {extra}
id=k kind=Sink in=b
[streams]
id=a from=src to=h
id=b from=h to=k
"
    );
    parse_topology(&text).unwrap()
}

fn point(sys: &EquationSystem, values: &[(&str, f64)]) -> Vec<f64> {
    let mut x = sys.initial_point();
    for (name, v) in values {
        x[sys
            .find(name)
            .unwrap_or_else(|| panic!("no variable {name}"))] = *v;
    }
    x
}

#[test]
fn fractions_mixer_three_inlets_five_components() {
    let t = mixer_doc(3, 5, false);
    let sys = emit_mixer(&t, "m", Paradigm::FractionsBased).unwrap();
    assert_eq!(count_nonlinearities(&sys).bilinear, 20);
}

#[test]
fn flows_mixer_with_fraction_consumer() {
    let t = mixer_doc(3, 5, true);
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, Paradigm::ComponentFlows)
        .with_override("sp", None, None, Some(Paradigm::FractionsBased));
    let sys = emit_node(&t, "m", &plan).unwrap();
    assert_eq!(count_nonlinearities(&sys).bilinear, 5);
}

#[test]
fn flows_mixer_without_fraction_consumer_is_linear() {
    let t = mixer_doc(3, 5, false);
    let sys = emit_mixer(&t, "m", Paradigm::ComponentFlows).unwrap();
    assert_eq!(count_nonlinearities(&sys).bilinear, 0);
}

#[test]
fn fractions_mixer_two_inlets_three_components() {
    let t = mixer_doc(2, 3, false);
    let sys = emit_mixer(&t, "m", Paradigm::FractionsBased).unwrap();
    let tc = count_nonlinearities(&sys);
    assert_eq!(tc.bilinear, 9);
    assert_eq!(tc.per_node["m"].bilinear, 9);
}

#[test]
fn mixer_counts_follow_closed_form() {
    for nin in 1..5 {
        for nc in 1..6 {
            let t = mixer_doc(nin, nc, false);
            let fr = emit_mixer(&t, "m", Paradigm::FractionsBased).unwrap();
            let fl = emit_mixer(&t, "m", Paradigm::ComponentFlows).unwrap();
            assert_eq!(fr.bilinear.len(), nin * nc + nc);
            assert_eq!(fl.bilinear.len(), 0);
        }
    }
}

#[test]
fn separator_counts() {
    let t = separator_doc(4, 3);
    let fr = emit_separator(&t, "sep", Paradigm::FractionsBased).unwrap();
    let fl = emit_separator(&t, "sep", Paradigm::ComponentFlows).unwrap();
    assert_eq!(count_nonlinearities(&fr).bilinear, 16);
    assert_eq!(count_nonlinearities(&fl).bilinear, 0);
}

#[test]
fn separator_identity_routing() {
    let t = separator_doc(3, 3);
    let sys = emit_separator(&t, "sep", Paradigm::ComponentFlows).unwrap();
    let feed = [1.0, 2.0, 3.0];
    let mut values = Vec::new();
    for (j, f) in feed.iter().enumerate() {
        values.push((format!("F[f.C{j}]@0"), *f));
        values.push((format!("F[o{j}]@0"), *f));
        for k in 0..3 {
            values.push((format!("F[o{k}.C{j}]@0"), if j == k { *f } else { 0.0 }));
        }
    }
    let named: Vec<(&str, f64)> = values.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let x = point(&sys, &named);
    assert!(sys.residual_norm(&x) < 1e-12);
}

#[test]
fn reactor_fixed_temperature_is_linear() {
    let t = reactor_doc("T=900");
    let sys = emit_reactor(&t, "rx", Paradigm::ComponentFlows).unwrap();
    assert_eq!(count_nonlinearities(&sys).bilinear, 0);
}

#[test]
fn reactor_variable_temperature_has_one_bilinear_term() {
    let t = reactor_doc("Tmin=500 Tmax=1200");
    let sys = emit_reactor(&t, "rx", Paradigm::ComponentFlows).unwrap();
    assert_eq!(count_nonlinearities(&sys).bilinear, 1);
}

#[test]
fn reactor_rejects_fractions() {
    let t = reactor_doc("T=900");
    assert!(matches!(
        emit_reactor(&t, "rx", Paradigm::FractionsBased),
        Err(Error::UnsupportedCombination { .. })
    ));
}

#[test]
fn reactor_closes_mass() {
    let t = reactor_doc("T=900");
    let sys = emit_reactor(&t, "rx", Paradigm::ComponentFlows).unwrap();
    let closure = sys
        .rows
        .iter()
        .find(|r| r.tag == RowTag::Mass && r.terms.len() == 2)
        .unwrap();
    let x = point(&sys, &[("F[f]@0", 10.0), ("F[p]@0", 10.0)]);
    let lhs: f64 = closure.terms.iter().map(|(i, c)| c * x[*i]).sum();
    assert_eq!(lhs, closure.rhs);
}

#[test]
fn splitter_fixed_fractions() {
    let t = splitter_doc(2, 2, Some("0.4,0.6"));
    let sys = emit_splitter(&t, "sp", Paradigm::ComponentFlows).unwrap();
    assert_eq!(sys.bilinear.len(), 0);
    let x = point(
        &sys,
        &[
            ("F[f.C0]@0", 10.0),
            ("F[f.C1]@0", 30.0),
            ("F[o0.C0]@0", 4.0),
            ("F[o0.C1]@0", 12.0),
            ("F[o1.C0]@0", 6.0),
            ("F[o1.C1]@0", 18.0),
            ("F[o0]@0", 16.0),
            ("F[o1]@0", 24.0),
        ],
    );
    assert!(sys.residual_norm(&x) < 1e-12);
}

#[test]
fn splitter_variable_fractions_count() {
    for nc in 1..5 {
        for nout in 2..4 {
            let t = splitter_doc(nc, nout, None);
            let sys = emit_splitter(&t, "sp", Paradigm::ComponentFlows).unwrap();
            assert_eq!(sys.bilinear.len(), nc * nout);
        }
    }
}

#[test]
fn splitter_single_outlet_is_pass_through() {
    let t = splitter_doc(3, 1, None);
    let sys = emit_splitter(&t, "sp", Paradigm::ComponentFlows).unwrap();
    assert_eq!(sys.bilinear.len(), 0);
}

#[test]
fn heater_fixed_enthalpy_row() {
    let t = heater_doc("");
    let sys = emit_energy_balance(&t, "h", AbstractionLevel::MassEnergyFixedH).unwrap();
    let x = point(&sys, &[("F[a]@0", 2.0), ("F[b]@0", 2.0), ("Q[h]@0", 100.0)]);
    let r = sys.residuals(&x);
    let e = sys
        .rows
        .iter()
        .position(|r| r.tag == RowTag::Energy)
        .unwrap();
    assert_eq!(r[e], 0.0);
}

#[test]
fn adiabatic_mixer_at_reference_states() {
    let text = "\
[components]
id=W
[properties]
stream=a T0=300 H0=100 Cp=4
stream=b T0=300 H0=100 Cp=4
stream=c T0=300 H0=100 Cp=4
[nodes]
id=s1 kind=Source out=a composition=W:1 flow=1
id=s2 kind=Source out=b composition=W:1 flow=3
id=m kind=Mixer in=a,b out=c
id=k kind=Sink in=c
[streams]
id=a from=s1 to=m
id=b from=s2 to=m
id=c from=m to=k
";
    let t = parse_topology(text).unwrap();
    let sys = emit_energy_balance(&t, "m", AbstractionLevel::MassEnergyFixedH).unwrap();
    let x = point(
        &sys,
        &[
            ("F[a]@0", 1.0),
            ("F[b]@0", 3.0),
            ("F[c]@0", 4.0),
            ("Q[m]@0", 0.0),
        ],
    );
    let e = sys
        .rows
        .iter()
        .position(|r| r.tag == RowTag::Energy)
        .unwrap();
    assert_eq!(sys.residuals(&x)[e], 0.0);
}

#[test]
fn local_heater_with_free_outlet_temperature() {
    let t = heater_doc("duty=120");
    let sys = emit_energy_balance(&t, "h", AbstractionLevel::MassEnergyLocalH).unwrap();
    let tc = count_nonlinearities(&sys);
    assert_eq!(tc.bilinear, 1);
    let b = &sys.bilinear[0];
    assert_eq!(sys.vars[b.a].name, names::total("b", 0));
    assert_eq!(sys.vars[b.b].name, names::temperature("b", 0));

    // hand expansion: F_a (H0a + Cp (Ta - T0a)) + Q - F_b (H0b + Cp (Tb - T0b))
    let (fa, fb, ta, tb, q) = (2.0, 2.0, 300.0, 352.5, 120.0);
    let expected = fa * (100.0 + 4.0 * (ta - 300.0)) + q - fb * (150.0 + 4.0 * (tb - 350.0));
    let x = point(&sys, &[("F[a]@0", fa), ("F[b]@0", fb), ("T[b]@0", tb)]);
    let e = sys
        .rows
        .iter()
        .position(|r| r.tag == RowTag::Energy)
        .unwrap();
    assert!((sys.residuals(&x)[e] - expected).abs() < 1e-9);
    assert!(expected.abs() < 1e-9);
}

#[test]
fn missing_property_is_reported() {
    let t = mixer_doc(2, 2, false);
    assert!(matches!(
        emit_energy_balance(&t, "m", AbstractionLevel::MassEnergyFixedH),
        Err(Error::MissingProperty(_))
    ));
}

#[test]
fn horizon_replicates_blocks() {
    let t = mixer_doc(2, 3, false);
    let plan = AbstractionPlan::default();
    let one = instantiate(&t, &plan, &Scenario::single()).unwrap();
    let four = instantiate(&t, &plan, &Scenario::single().with_periods(4)).unwrap();
    assert_eq!(four.n_vars(), 4 * one.n_vars());
    assert_eq!(four.n_rows(), 4 * one.n_rows());
}

#[test]
fn term_count_is_deterministic() {
    let t = mixer_doc(3, 4, true);
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, Paradigm::FractionsBased);
    let a = count_nonlinearities(&instantiate(&t, &plan, &Scenario::single()).unwrap());
    let b = count_nonlinearities(&instantiate(&t, &plan, &Scenario::single()).unwrap());
    assert_eq!(a, b);
    assert_eq!(
        a.linear_rows
            + a.per_node
                .values()
                .map(|n| n.rows - n.linear_rows)
                .sum::<usize>(),
        a.rows
    );
}
