use massflow::instantiation::{
    instantiate, mass_imbalance, names, AbstractionLevel, AbstractionPlan, EquationSystem,
    Paradigm, Scenario,
};
use massflow::solvers::{
    newton_solve, reduced_cost_violation, simplex_lp, slp_optimize, solve_linear, SolveOptions,
    Status,
};
use massflow::topology::parse_topology;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn value(sys: &EquationSystem, x: &[f64], name: &str) -> f64 {
    x[sys
        .find(name)
        .unwrap_or_else(|| panic!("no variable {name}"))]
}

const PASS: &str = "\
[components]
id=A
[nodes]
id=src kind=Source out=s composition=A:1 flow=5
id=k kind=Sink in=s
[streams]
id=s from=src to=k
";

/// Feed -> mixer -> separator (top takes `beta` of every component) ->
/// splitter sending `r` of the top stream back to the mixer.
fn recycle(beta: [f64; 2], r: f64) -> String {
    format!(
        "\
[components]
id=A
id=B
[nodes]
id=feed kind=Source out=f composition=A:0.7,B:0.3 flow=10
id=mix kind=Mixer in=f,rec out=m
id=sep kind=ComponentSeparator in=m out=top,bot alpha=\"A:{},B:{};A:{},B:{}\"
id=sp kind=Splitter in=top out=rec,purge alpha={},{}
id=k1 kind=Sink in=bot
id=k2 kind=Sink in=purge
[streams]
id=f from=feed to=mix
id=rec from=sp to=mix
id=m from=mix to=sep
id=top from=sep to=sp
id=bot from=sep to=k1
id=purge from=sp to=k2
",
        beta[0],
        beta[1],
        1.0 - beta[0],
        1.0 - beta[1],
        r,
        1.0 - r
    )
}

#[test]
fn source_to_sink_linear() {
    let t = parse_topology(PASS).unwrap();
    let sys = instantiate(&t, &AbstractionPlan::default(), &Scenario::single()).unwrap();
    let rep = solve_linear(&sys).unwrap();
    assert_eq!(rep.status, Status::Converged);
    assert_eq!(value(&sys, &rep.x, "F[s]@0"), 5.0);
    assert_eq!(value(&sys, &rep.x, "F[s.A]@0"), 5.0);
}

#[test]
fn recycle_closes_geometric_series() {
    let beta = [0.9, 0.2];
    let r = 0.6;
    let t = parse_topology(&recycle(beta, r)).unwrap();
    let sys = instantiate(&t, &AbstractionPlan::default(), &Scenario::single()).unwrap();
    let rep = solve_linear(&sys).unwrap();
    assert_eq!(rep.status, Status::Converged);
    // R_j = r beta_j (F_j + R_j)
    for (j, (c, f)) in [("A", 7.0), ("B", 3.0)].iter().enumerate() {
        let rb = r * beta[j];
        let oracle = rb * f / (1.0 - rb);
        let got = value(&sys, &rep.x, &names::flow("rec", c, 0));
        assert!(
            (got - oracle).abs() <= 1e-12 * oracle.max(1.0),
            "{c}: {got} vs {oracle}"
        );
    }
    assert!(mass_imbalance(&t, &sys, &rep.x) <= 1e-10);
}

#[test]
fn recycle_matches_sequential_iteration() {
    // successive substitution around the tear stream, written out by hand
    let beta = [0.75, 0.4];
    let r = 0.8;
    let feed = [7.0, 3.0];
    let mut rec = [0.0; 2];
    for _ in 0..500 {
        for j in 0..2 {
            rec[j] = r * beta[j] * (feed[j] + rec[j]);
        }
    }
    let t = parse_topology(&recycle(beta, r)).unwrap();
    let sys = instantiate(&t, &AbstractionPlan::default(), &Scenario::single()).unwrap();
    let rep = solve_linear(&sys).unwrap();
    for (j, c) in ["A", "B"].iter().enumerate() {
        let got = value(&sys, &rep.x, &names::flow("rec", c, 0));
        assert!((got - rec[j]).abs() < 1e-10);
    }
}

#[test]
fn conflicting_specifications_are_infeasible() {
    let text = "\
[components]
id=A
[nodes]
id=src kind=Source out=a composition=A:1 flow=5
id=sp kind=Splitter in=a out=b
id=k kind=Sink in=b demand=4
[streams]
id=a from=src to=sp
id=b from=sp to=k
";
    let t = parse_topology(text).unwrap();
    let sys = instantiate(
        &t,
        &AbstractionPlan::default(),
        &Scenario::single().optimize(),
    )
    .unwrap();
    assert_eq!(solve_linear(&sys).unwrap().status, Status::Infeasible);
}

#[test]
fn newton_on_linear_system_takes_one_step() {
    let t = parse_topology(&recycle([0.9, 0.2], 0.6)).unwrap();
    let sys = instantiate(&t, &AbstractionPlan::default(), &Scenario::single()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x0: Vec<f64> = (0..sys.n_vars())
        .map(|_| rng.gen_range(-5.0..50.0))
        .collect();
    let rep = newton_solve(&sys, Some(&x0), &SolveOptions::default()).unwrap();
    assert_eq!(rep.status, Status::Converged);
    assert_eq!(rep.iterations, 1);
}

#[test]
fn fractions_mixer_agrees_with_flows() {
    let text = "\
[components]
id=A
id=B
id=C
[nodes]
id=s1 kind=Source out=a composition=A:0.5,B:0.5 flow=2
id=s2 kind=Source out=b composition=B:0.2,C:0.8 flow=3
id=m kind=Mixer in=a,b out=c
id=k kind=Sink in=c
[streams]
id=a from=s1 to=m
id=b from=s2 to=m
id=c from=m to=k
";
    let t = parse_topology(text).unwrap();
    let sc = Scenario::single();
    let flows = instantiate(&t, &AbstractionPlan::default(), &sc).unwrap();
    let oracle = solve_linear(&flows).unwrap();
    let fr_plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, Paradigm::FractionsBased);
    let fr = instantiate(&t, &fr_plan, &sc).unwrap();
    assert!(!fr.bilinear.is_empty());
    let rep = newton_solve(&fr, None, &SolveOptions::default()).unwrap();
    assert_eq!(rep.status, Status::Converged);
    for st in &oracle.table.streams {
        let other = rep.table.stream(&st.stream, 0).unwrap();
        for ((c, f), (c2, f2)) in st.flows.iter().zip(&other.flows) {
            assert_eq!(c, c2);
            assert!(
                (f - f2).abs() <= 1e-8 * f.abs().max(1.0),
                "{} {c}: {f} vs {f2}",
                st.stream
            );
        }
    }
}

const TWO_PERIOD: &str = "\
[components]
id=W
[properties]
stream=a T0=300 H0=100 Cp=4
stream=b T0=400 H0=500 Cp=4
stream=c T0=400 H0=500 Cp=4
[nodes]
id=src kind=Source out=a composition=W:1 fmax=100
id=h kind=HeaterCooler in=a out=b utility=electric
id=tank kind=Inventory in=b out=c capacity=1000
id=k kind=Sink in=c demand=3
[streams]
id=a from=src to=h
id=b from=h to=tank
id=c from=tank to=k
";

#[test]
fn cheap_period_takes_the_duty() {
    let t = parse_topology(TWO_PERIOD).unwrap();
    let plan =
        AbstractionPlan::uniform(AbstractionLevel::MassEnergyFixedH, Paradigm::ComponentFlows);
    let mut sc = Scenario::single().optimize().with_periods(2);
    sc.elec_price = vec![1.0, 3.0];
    let sys = instantiate(&t, &plan, &sc).unwrap();
    let rep = simplex_lp(&sys).unwrap();
    assert_eq!(rep.status, Status::Optimal);
    assert!((value(&sys, &rep.x, "F[a]@0") - 6.0).abs() < 1e-9);
    assert!(value(&sys, &rep.x, "F[a]@1").abs() < 1e-9);
    assert!((value(&sys, &rep.x, "Q[h]@0") - 2400.0).abs() < 1e-6);
    assert!((rep.objective - 2400.0).abs() < 1e-6);
    let duals = rep.duals.as_ref().unwrap();
    assert!(reduced_cost_violation(&sys, &rep.x, duals) < 1e-9);
}

#[test]
fn product_at_capacity_bound() {
    let text = "\
[components]
id=A
[nodes]
id=src kind=Source out=s composition=A:1 fmax=10
id=k kind=Sink in=s price=2
[streams]
id=s from=src to=k
";
    let t = parse_topology(text).unwrap();
    let sys = instantiate(
        &t,
        &AbstractionPlan::default(),
        &Scenario::single().optimize(),
    )
    .unwrap();
    let rep = simplex_lp(&sys).unwrap();
    assert_eq!(rep.status, Status::Optimal);
    assert!((value(&sys, &rep.x, "F[s]@0") - 10.0).abs() < 1e-12);
    assert!((rep.objective + 20.0).abs() < 1e-12);
}

#[test]
fn slp_without_bilinear_terms_matches_simplex() {
    let t = parse_topology(TWO_PERIOD).unwrap();
    let plan =
        AbstractionPlan::uniform(AbstractionLevel::MassEnergyFixedH, Paradigm::ComponentFlows);
    let mut sc = Scenario::single().optimize().with_periods(2);
    sc.elec_price = vec![1.0, 3.0];
    let sys = instantiate(&t, &plan, &sc).unwrap();
    let lp = simplex_lp(&sys).unwrap();
    let slp = slp_optimize(&sys, None, &SolveOptions::default()).unwrap();
    assert_eq!(slp.iterations, 1);
    assert_eq!(slp.x, lp.x);
}

#[test]
fn variable_split_goes_to_bound() {
    let text = "\
[components]
id=A
id=B
[nodes]
id=src kind=Source out=f composition=A:0.4,B:0.6 flow=10
id=sp kind=Splitter in=f out=good,bad
id=k1 kind=Sink in=good price=3
id=k2 kind=Sink in=bad price=1
[streams]
id=f from=src to=sp
id=good from=sp to=k1
id=bad from=sp to=k2
";
    let t = parse_topology(text).unwrap();
    let sys = instantiate(
        &t,
        &AbstractionPlan::default(),
        &Scenario::single().optimize(),
    )
    .unwrap();
    assert_eq!(sys.bilinear.len(), 4);
    let x0 = newton_start(&sys);
    let rep = slp_optimize(&sys, Some(&x0), &SolveOptions::default()).unwrap();
    assert_eq!(rep.status, Status::Converged);
    assert!((value(&sys, &rep.x, "alpha[sp.good]@0") - 1.0).abs() < 1e-9);
    assert!((rep.objective + 30.0).abs() < 1e-8);
}

/// Consistent starting point for the splitter case: even split.
fn newton_start(sys: &EquationSystem) -> Vec<f64> {
    let mut fixed = sys.clone();
    let i = fixed.find("alpha[sp.good]@0").unwrap();
    fixed.fix(i, 0.5);
    let rep = newton_solve(&fixed, None, &SolveOptions::default()).unwrap();
    assert_eq!(rep.status, Status::Converged);
    rep.x
}

#[test]
fn reports_are_deterministic() {
    let t = parse_topology(&recycle([0.9, 0.2], 0.6)).unwrap();
    let sys = instantiate(&t, &AbstractionPlan::default(), &Scenario::single()).unwrap();
    let a = newton_solve(&sys, None, &SolveOptions::default()).unwrap();
    let b = newton_solve(&sys, None, &SolveOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

/// Random small system with bilinear terms: a recycle solved in the
/// fractions paradigm at a random operating point.
fn jacobian_case(beta: [f64; 2], r: f64, seed: u64) -> (EquationSystem, Vec<f64>) {
    let t = parse_topology(&recycle(beta, r)).unwrap();
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, Paradigm::FractionsBased);
    let sys = instantiate(&t, &plan, &Scenario::single()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..sys.n_vars()).map(|_| rng.gen_range(0.1..5.0)).collect();
    (sys, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobian_matches_central_differences(b0 in 0.1f64..0.9, b1 in 0.1f64..0.9, r in 0.1f64..0.9, seed in 0u64..1000) {
        let (sys, x) = jacobian_case([b0, b1], r, seed);
        let j = sys.jacobian(&x);
        for i in 0..sys.n_vars() {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let (rp, rm) = (sys.residuals(&xp), sys.residuals(&xm));
            for row in 0..sys.n_rows() {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                prop_assert!((fd - j[row][i]).abs() <= 1e-6 * j[row][i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn converged_reports_satisfy_rows_and_bounds(b0 in 0.05f64..0.95, b1 in 0.05f64..0.95, r in 0.0f64..0.95) {
        let t = parse_topology(&recycle([b0, b1], r)).unwrap();
        for plan in [
            AbstractionPlan::default(),
            AbstractionPlan::uniform(AbstractionLevel::MassOnly, Paradigm::FractionsBased),
        ] {
            let sys = instantiate(&t, &plan, &Scenario::single()).unwrap();
            let rep = newton_solve(&sys, None, &SolveOptions::default()).unwrap();
            if rep.status.is_success() {
                prop_assert!(sys.residual_norm(&rep.x) <= 1e-9);
                prop_assert!(sys.bound_violation(&rep.x) <= 1e-12);
                prop_assert!(mass_imbalance(&t, &sys, &rep.x) <= 1e-10);
            }
        }
    }
}
