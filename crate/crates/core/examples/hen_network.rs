//! Two exchangers in series at off-design hot flow: the outer loop
//! recomputes duty ratios until outlet temperatures settle.

use massflow::cases::{load, scaled};
use massflow::hen::{hen_solve, HenOptions};
use massflow::instantiation::Scenario;

fn main() -> massflow::Result<()> {
    let t = load("hen_train")?.document.topology;
    for scale in [1.0, 0.8, 1.2] {
        let rep = hen_solve(
            &scaled(&t, &[("sh".into(), scale)]),
            &Scenario::single(),
            &HenOptions::default(),
        )?;
        println!(
            "hot flow x{scale}: {} iterations, converged {}",
            rep.iterations, rep.converged
        );
        for it in &rep.log {
            println!("  pass {:>2}: max dT {:.3e} K", it.iteration, it.max_dt);
        }
        for e in &rep.exchangers {
            println!(
                "  {}: phi {:.4}, Q {:8.3} kW, hot {:.2} -> {:.2} K, cold {:.2} -> {:.2} K",
                e.node, e.phi, e.q, e.th_in, e.th_out, e.tc_in, e.tc_out
            );
        }
    }
    Ok(())
}
