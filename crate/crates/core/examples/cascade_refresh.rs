//! Solve the heated recycle loop with the standard cascade: a linear
//! fixed-enthalpy pass, then local and rigorous enthalpy refreshes, each
//! stage warm-started from the one before.

use massflow::cases::load;
use massflow::composite::{solve_cascade, CascadeSchedule};
use massflow::instantiation::Scenario;
use massflow::solvers::SolveOptions;

fn main() -> massflow::Result<()> {
    let t = load("heated_recycle")?.document.topology;
    let rep = solve_cascade(
        &t,
        &Scenario::single(),
        &CascadeSchedule::standard(),
        &SolveOptions::default(),
    )?;
    for s in &rep.stages {
        println!(
            "stage {} {:?}/{:?}: {} iterations over {} passes, {} inherited, max dH {:?}",
            s.stage,
            s.solver,
            s.refresh,
            s.iterations,
            s.outer_passes,
            s.inherited.len(),
            s.max_dh
        );
    }
    let last = rep.last().expect("stages ran");
    for s in &last.report.table.streams {
        println!(
            "  {:<4} {:9.4} kg/s {:9.3} K",
            s.stream,
            s.total.unwrap_or(0.0),
            s.temperature.unwrap_or(f64::NAN)
        );
    }
    for p in &rep.properties {
        println!(
            "  {:<4} H0 {:10.4} kJ/kg at T0 {:.3} K",
            p.stream, p.h0, p.t0
        );
    }
    Ok(())
}
