use massflow::cli::run;

fn case(name: &str) -> String {
    format!("{}/cases/{name}.plant", env!("CARGO_MANIFEST_DIR"))
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn massflow(args: &[&str]) -> massflow::cli::Output {
    run(std::iter::once("massflow").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut a = args.to_vec();
    a.extend(["--out", "json"]);
    let out = massflow(&a);
    assert_eq!(out.code, 0, "{}", out.stderr);
    serde_json::from_str(&out.stdout).unwrap()
}

#[test]
fn validate_accepts_bundled_cases() {
    for n in ["prototypical", "heated_recycle", "hen_train", "h2_atr_wgs"] {
        let out = massflow(&["validate", &case(n)]);
        assert_eq!(out.code, 0, "{n}: {}", out.stdout);
    }
}

#[test]
fn invalid_file_exits_one_with_diagnostics() {
    for cmd in ["validate", "simulate"] {
        let out = massflow(&[cmd, &data("invalid.plant"), "--out", "json"]);
        assert_eq!(out.code, 1);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        let rules: Vec<&str> = v["tables"]["diagnostics"]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| d["rule"].as_str().unwrap())
            .collect();
        assert!(rules.contains(&"dangling-stream"), "{rules:?}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = massflow(&["simulate", &case("prototypical"), "--nope"]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.is_empty());
    assert!(out.stderr.contains("Usage"));
}

#[test]
fn bad_flag_values_are_usage_errors() {
    assert_eq!(
        massflow(&["simulate", &case("prototypical"), "--level", "warm"]).code,
        2
    );
    assert_eq!(
        massflow(&["hen", &case("hen_train"), "--relax", "1.5"]).code,
        2
    );
    assert_eq!(massflow(&["compare", &case("prototypical")]).code, 2);
    assert_eq!(
        massflow(&["--tol", "-1", "validate", &case("prototypical")]).code,
        2
    );
}

#[test]
fn missing_file_exits_one() {
    let out = massflow(&["validate", "/nonexistent.plant"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("io"));
}

#[test]
fn simulate_reports_streams_in_declaration_order() {
    let v = json(&[
        "simulate",
        &case("heated_recycle"),
        "--level",
        "energy-fixed",
    ]);
    let order: Vec<&str> = v["tables"]["streams"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["component"] == "*")
        .map(|r| r["stream"].as_str().unwrap())
        .collect();
    assert_eq!(order, ["f", "m", "h", "p", "r", "rc"]);
    let duty = v["tables"]["duties"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["node"] == "heat")
        .unwrap()["duty"]
        .as_f64()
        .unwrap();
    // 1.0 kg/s at 300 K heated, 5/3 kg/s circulating: hand balance gives 367.25 kW.
    assert_eq!(duty, 367.25);
}

#[test]
fn numbers_carry_nine_significant_digits() {
    let out = massflow(&[
        "simulate",
        &case("heated_recycle"),
        "--level",
        "energy-local",
        "--out",
        "csv",
    ]);
    assert!(
        out.stdout.contains("streams,0,m,*,1.66666667,,324.453327"),
        "{}",
        out.stdout
    );
}

#[test]
fn structured_output_is_byte_identical_across_runs() {
    for args in [
        vec!["simulate", &case("prototypical"), "--level", "energy-local"],
        vec!["cascade", &case("heated_recycle")],
        vec!["optimize", &case("h2_atr_wgs"), "--level", "energy-fixed"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", "json"]);
        assert_eq!(massflow(&a).stdout, massflow(&a).stdout);
    }
}

#[test]
fn compare_paradigms_lists_both_counts() {
    let v = json(&["compare", &case("prototypical"), "--paradigms"]);
    let rows = v["tables"]["paradigms"].as_array().unwrap();
    let row = |n: &str| rows.iter().find(|r| r["node"] == n).unwrap();
    // mixer: NIN*NC + NC with NIN = 2, NC = 3
    assert_eq!(row("mix")["fractions_bilinear"], 9);
    assert_eq!(row("mix")["flows_bilinear"], 0);
    // separator: NC*(1 + NOUT) with NOUT = 2
    assert_eq!(row("sep")["fractions_bilinear"], 9);
    assert_eq!(row("sep")["flows_bilinear"], 0);
    assert_eq!(row("rx")["fractions_bilinear"], "unsupported");
    assert_eq!(row("total")["flows_bilinear"], 0);
}

#[test]
fn compare_levels_reports_ordering() {
    let v = json(&[
        "compare",
        &case("h2_atr_wgs"),
        "--levels",
        "mass,energy-fixed",
    ]);
    assert_eq!(v["tables"]["ordering"][0]["holds"], true);
    assert_eq!(v["tables"]["optima"].as_array().unwrap().len(), 2);
}

#[test]
fn hen_relaxation_still_reaches_base_point() {
    let v = json(&["hen", &case("hen_train"), "--relax", "0.5"]);
    assert_eq!(v["status"], "converged");
    let e1 = &v["tables"]["exchangers"][0];
    assert_eq!(e1["duty"], 400.0);
}

#[test]
fn optimize_accepts_inline_scenario_and_periods() {
    let v = json(&[
        "optimize",
        &case("h2_atr_wgs"),
        "--level",
        "energy-fixed",
        "--scenario",
        "periods=6 dt=0.25 elec_price=0.1 mode=optimize",
        "--periods",
        "3",
    ]);
    assert_eq!(
        v["tables"]["objective_by_period"].as_array().unwrap().len(),
        3
    );
}

#[test]
fn cascade_accepts_inline_schedule() {
    let v = json(&[
        "cascade",
        &case("heated_recycle"),
        "--schedule",
        "level=energy-fixed; level=energy-local refresh=local",
    ]);
    assert_eq!(v["tables"]["stages"].as_array().unwrap().len(), 2);
}

#[test]
fn case_run_passes_and_lists_entries() {
    let out = massflow(&["case", "run", "h2_atr_wgs"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert!(out.stdout.starts_with("case run: pass"));
    assert!(!out.stdout.contains("FAIL"));
    assert_eq!(massflow(&["case", "run", "nope"]).code, 1);
}

#[test]
fn tolerance_precedence_is_flag_then_env_then_default() {
    use massflow::solvers::SolveOptions;
    let default = SolveOptions::default().tol;
    assert_eq!(SolveOptions::resolve(None, None).tol, default);
    assert_eq!(SolveOptions::resolve(None, Some("1e-4")).tol, 1e-4);
    assert_eq!(SolveOptions::resolve(Some(1e-3), Some("1e-4")).tol, 1e-3);
    assert_eq!(SolveOptions::resolve(None, Some("junk")).tol, default);
    assert_eq!(SolveOptions::resolve(None, Some("-1")).tol, default);
}

#[test]
fn tolerance_flag_is_accepted() {
    let out = massflow(&[
        "--tol",
        "1e-3",
        "simulate",
        &case("heated_recycle"),
        "--level",
        "energy-local",
    ]);
    assert_eq!(out.code, 0);
}
