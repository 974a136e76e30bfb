//! Simulate the bundled prototypical plant at each abstraction level.

use massflow::cases::load;
use massflow::hen::solve_any;
use massflow::instantiation::{instantiate, AbstractionLevel, AbstractionPlan, Paradigm, Scenario};
use massflow::solvers::SolveOptions;

fn main() -> massflow::Result<()> {
    let t = load("prototypical")?.document.topology;
    let sc = Scenario::single();
    for level in [
        AbstractionLevel::MassOnly,
        AbstractionLevel::MassEnergyFixedH,
        AbstractionLevel::MassEnergyLocalH,
    ] {
        let sys = instantiate(
            &t,
            &AbstractionPlan::uniform(level, Paradigm::ComponentFlows),
            &sc,
        )?;
        let rep = solve_any(&sys, &SolveOptions::default())?;
        println!(
            "{level}: {} after {} iterations",
            rep.status, rep.iterations
        );
        for s in &rep.table.streams {
            let temp = s
                .temperature
                .map(|t| format!("{t:8.2} K"))
                .unwrap_or_default();
            println!(
                "  {:<6} {:10.4} kg/s {temp}",
                s.stream,
                s.total.unwrap_or(0.0)
            );
        }
        for d in &rep.table.duties {
            println!("  Q[{}] = {:.2} kW", d.node, d.duty);
        }
    }
    Ok(())
}
