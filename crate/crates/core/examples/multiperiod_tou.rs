//! Six quarter-hour periods with an electricity price spike: the optimizer
//! cuts preheat in the expensive period and covers demand from storage.

use massflow::cases::load;
use massflow::composite::optimize_multiperiod;
use massflow::instantiation::{AbstractionLevel, AbstractionPlan, Paradigm};
use massflow::solvers::SolveOptions;

fn main() -> massflow::Result<()> {
    let bundle = load("h2_atr_wgs")?;
    let t = &bundle.document.topology;
    let sc = bundle.scenario();
    let plan =
        AbstractionPlan::uniform(AbstractionLevel::MassEnergyFixedH, Paradigm::ComponentFlows);
    let rep = optimize_multiperiod(t, &sc, &plan, &SolveOptions::default())?;
    let last = rep.last().expect("one stage");
    println!("objective {:.4}", last.report.objective);
    println!("period  price   feed kg/s   Q[pre] kW   stored H2 kg");
    for p in 0..sc.periods {
        let v = |name: &str| last.value(&format!("{name}@{p}")).unwrap_or(f64::NAN);
        println!(
            "{p:>6} {:7.2} {:11.4} {:11.1} {:14.4}",
            sc.elec_price[p],
            v("F[feed]"),
            v("Q[pre]"),
            v("inv[tank.H2]")
        );
    }
    Ok(())
}
