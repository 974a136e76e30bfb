//! Optimize the hydrogen plant with and without energy balances and price
//! the mass-only plan under the energy model.

use massflow::cases::load;
use massflow::composite::compare_optima;
use massflow::instantiation::{AbstractionLevel, AbstractionPlan, Paradigm};
use massflow::solvers::SolveOptions;

fn main() -> massflow::Result<()> {
    let bundle = load("h2_atr_wgs")?;
    let plans: Vec<AbstractionPlan> = [
        AbstractionLevel::MassOnly,
        AbstractionLevel::MassEnergyFixedH,
    ]
    .into_iter()
    .map(|l| AbstractionPlan::uniform(l, Paradigm::ComponentFlows))
    .collect();
    let cmp = compare_optima(
        &bundle.document.topology,
        &bundle.scenario(),
        &plans,
        &SolveOptions::default(),
    )?;
    for r in &cmp.rows {
        println!(
            "{:<14} objective {:12.4}  full cost {:?}",
            r.level.to_string(),
            r.objective,
            r.full_cost
        );
    }
    println!("ordering holds: {}", cmp.ordering_holds);
    Ok(())
}
