//! Two reversible pairs with an adversarial linear offset: the pairing
//! ⟨Ĝ(z), z⟩ is positive far out, so a plain ball is not inward pointing.

use crnkit::complex_map::counterexample::{closed_form_pairing, run_counterexample};

use nalgebra::DVector;

fn show(v: &DVector<f64>, digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> crnkit::Result<()> {
    let report = run_counterexample(&[5.0, 6.0, 8.0, 10.0], 0.2, 2000, 3)?;
    for p in &report.points {
        println!(
            "alpha = {:>4}: pairing {:+.12e}, closed form {:+.12e}, blocks {:?}",
            p.alpha,
            p.pairing,
            closed_form_pairing(p.alpha, p.beta),
            p.terms
        );
    }
    println!(
        "ball of radius {}: {} of {} boundary samples point outwards",
        report.ball_radius, report.ball.violations, report.ball.samples
    );
    if let Some(z) = &report.ball.worst_point {
        println!("worst sample {}", show(z, 4));
    }
    Ok(())
}
