//! Same plant in both paradigms: nonlinear term counts per node and the
//! agreement of the two solutions.

use massflow::cases::load;
use massflow::instantiation::{
    count_nonlinearities, instantiate, AbstractionLevel, AbstractionPlan, Paradigm, Scenario,
};
use massflow::solvers::{newton_solve, solve_linear, SolveOptions};

fn main() -> massflow::Result<()> {
    let t = load("heated_recycle")?.document.topology;
    let sc = Scenario::single();
    let plan = |p| AbstractionPlan::uniform(AbstractionLevel::MassOnly, p);
    let flows = instantiate(&t, &plan(Paradigm::ComponentFlows), &sc)?;
    let fracs = instantiate(&t, &plan(Paradigm::FractionsBased), &sc)?;
    let (cf, cx) = (count_nonlinearities(&flows), count_nonlinearities(&fracs));
    println!(
        "bilinear terms: flows {}, fractions {}",
        cf.bilinear, cx.bilinear
    );

    let a = solve_linear(&flows)?;
    let b = newton_solve(&fracs, None, &SolveOptions::default())?;
    println!(
        "fractions Newton: {} in {} iterations",
        b.status, b.iterations
    );
    for s in &a.table.streams {
        let other = b
            .table
            .stream(&s.stream, 0)
            .and_then(|s| s.total)
            .unwrap_or(f64::NAN);
        println!(
            "  {:<5} flows {:12.6}  fractions {:12.6}",
            s.stream,
            s.total.unwrap_or(0.0),
            other
        );
    }
    Ok(())
}
