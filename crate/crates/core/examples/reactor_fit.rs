//! Fit linear reactor models to reforming and shift equilibrium, then
//! check one off-grid point.

use massflow::cases::equilibrium::{
    atr_feed, equilibrium, fit_reactors, mass_fractions, ATR_PRESSURE,
};

fn main() -> massflow::Result<()> {
    let fits = fit_reactors()?;
    for (name, f) in [
        ("ATR H2", &fits.atr_h2),
        ("ATR CH4", &fits.atr_ch4),
        ("WGS H2", &fits.wgs_h2),
    ] {
        println!(
            "{name:<8} a={:?} aT={:.4e}  max rel error {:.3}% over {} points",
            f.a,
            f.a_t,
            100.0 * f.max_rel_error,
            f.points
        );
    }
    let (s2c, t) = (2.83, 1217.0);
    let x = mass_fractions(&atr_feed(s2c));
    let y = mass_fractions(&equilibrium(&atr_feed(s2c), t, ATR_PRESSURE, true));
    println!(
        "S/C {s2c}, {t} K: equilibrium H2 {:.5}, linear model {:.5}",
        y[4],
        fits.atr_h2.predict(&x, t)
    );
    Ok(())
}
