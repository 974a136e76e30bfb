use massflow::cases::load;
use massflow::properties::{
    enthalpy_fixed, enthalpy_local, enthalpy_rigorous, refresh_local, refresh_reference,
};

fn feed() -> massflow::properties::StreamPropertyRecord {
    let t = load("heated_recycle").unwrap().document.topology;
    t.property("f").unwrap().clone()
}

#[test]
fn bundled_correlation_by_hand() {
    // 50 + 1.5*650 + 0.001*650^2 - 2e-7*650^3
    let h = enthalpy_rigorous(&feed(), 650.0).unwrap();
    assert!((h - 1392.575).abs() < 1e-9, "{h}");
}

#[test]
fn bundled_reference_comes_from_correlation() {
    let rec = feed();
    // 50 + 450 + 90 - 5.4 and 1.5 + 0.6 - 0.054
    assert!((enthalpy_fixed(&rec) - 584.6).abs() < 1e-9);
    assert!((rec.cp - 2.046).abs() < 1e-12);
    assert_eq!(
        enthalpy_fixed(&rec),
        enthalpy_rigorous(&rec, rec.t0).unwrap()
    );
}

#[test]
fn out_of_range_is_rejected() {
    let rec = feed();
    assert!(enthalpy_rigorous(&rec, 1000.0).is_err());
    assert!(enthalpy_rigorous(&rec, 200.0).is_err());
    assert!(enthalpy_local(&rec, -1.0).is_err());
}

#[test]
fn refreshed_records_anchor_at_the_new_point() {
    let rec = feed();
    for t in [280.0, 420.0, 700.0] {
        let r = refresh_reference(&rec, t).unwrap();
        assert_eq!(r.t0, t);
        assert!((r.h0 - enthalpy_rigorous(&rec, t).unwrap()).abs() < 1e-12);
        let l = refresh_local(&rec, t).unwrap();
        assert!((l.h0 - enthalpy_local(&rec, t).unwrap()).abs() < 1e-12);
        assert_eq!(l.cp, rec.cp);
    }
}
