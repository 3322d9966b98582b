//! Birch points and the chart between a stoichiometric class and `K`.

use crnkit::{birch_point, parse_network, ClassChart, Subspace};
use nalgebra::{DMatrix, DVector};

fn show(v: &DVector<f64>, digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> crnkit::Result<()> {
    // x - p ∈ span{(1, -1, 0)} and log x - log x* ⊥ (1, -1, 0)
    let s = Subspace::span(&DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 0.0]));
    let p = DVector::from_vec(vec![1.0, 3.0, 2.0]);
    let target = DVector::from_vec(vec![1.0, 1.0, 5.0]);
    let x = birch_point(&s, &p, &target)?;
    println!("Birch point {}", show(&x, 12));

    let sys = parse_network("A + B <-> C : 2, 1\n2 A <-> D : 1, 3")?;
    let class = sys.stoich_class(DVector::from_vec(vec![1.0, 2.0, 0.5, 1.0]))?;
    let chart = ClassChart::new(sys.network(), &class)?;
    println!("dim K = {}", chart.k().dim());
    let z = chart.k().from_coords(&DVector::from_element(chart.k().dim(), 0.7));
    let x = chart.psi_inverse(&z)?;
    println!("psi^-1(z) = {}", show(&x, 12));
    println!("class error {:.2e}", class.membership_error(&x));
    println!("|psi(psi^-1(z)) - z| = {:.2e}", (chart.psi(&x)? - z).norm());
    Ok(())
}
