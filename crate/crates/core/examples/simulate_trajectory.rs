//! Integrate the mass-action ODE and compare the limit with the solver.

use crnkit::{find_steady_state, parse_network, simulate, SolverOptions};
use nalgebra::DVector;

fn show(v: &DVector<f64>, digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> crnkit::Result<()> {
    let sys = parse_network("A -> B : 1\nB -> C : 1\nC -> A : 1\n2 A <-> B + C : 0.5, 2")?;
    let x0 = DVector::from_vec(vec![3.0, 0.2, 0.1]);
    let traj = simulate(&sys, &x0, 200.0, 1e-10)?;
    for (t, x) in traj.times.iter().zip(&traj.states).step_by((traj.times.len() / 8).max(1)) {
        println!("t = {t:9.4}  x = {}", show(x, 10));
    }
    println!("stopped at t = {} with residual {:.2e}", traj.times.last().unwrap(), traj.final_residual);
    let class = sys.stoich_class(x0)?;
    let r = find_steady_state(&sys, &class, SolverOptions::default())?;
    println!("solver x = {}", show(&r.x, 10));
    println!("gap {:.2e}", (traj.final_state() - &r.x).norm());
    Ok(())
}
