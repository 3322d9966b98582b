//! Positive steady states in several classes of one network.

use crnkit::{find_steady_state, parse_network, SolverOptions};
use nalgebra::DVector;

fn show(v: &DVector<f64>, digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> crnkit::Result<()> {
    let sys =
        parse_network("2 A <-> D : 1.5, 0.5\nA + B <-> C : 2, 1\nC -> B + 0.5 D : 0.25\nB + 0.5 D -> A + B : 0.75")?;
    for point in [[1.0, 2.0, 0.5, 1.0], [0.1, 0.1, 3.0, 0.2], [4.0, 1.0, 1.0, 4.0]] {
        let class = sys.stoich_class(DVector::from_row_slice(&point))?;
        let r = find_steady_state(&sys, &class, SolverOptions::default())?;
        println!(
            "{point:?} -> x = {} (residual {:.1e}, {} via {})",
            show(&r.x, 10),
            r.residual_species,
            r.iterations,
            r.method
        );
    }
    Ok(())
}
