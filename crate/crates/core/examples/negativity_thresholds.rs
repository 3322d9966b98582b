//! Chain infima, the thresholds L and R_ρ, and a sampling check of both.

use crnkit::complex_map::check_negativity;
use crnkit::{chain_infimum, parse_network, threshold_l, threshold_r};

fn main() -> crnkit::Result<()> {
    for len in 1..=4 {
        let row: Vec<String> = [0.5, 1.0, std::f64::consts::E, 10.0, 100.0]
            .iter()
            .map(|&t| format!("{:8.4}", chain_infimum(len, t)))
            .collect();
        println!("M = {len}: {}", row.join(" "));
    }
    let pair = parse_network("A <-> B : 1, 1")?;
    println!("pair: L = {}, R(1) = {:.6}", threshold_l(&pair, 1.0)?, threshold_r(&pair, 1.0)?);

    let triangle = parse_network("A -> B : 1\nB -> C : 1.5\nC -> A : 0.8\nA -> C : 1.2")?;
    for check in check_negativity(&triangle, 0.5, 2000, 7)? {
        println!(
            "L = {:.4e}, R = {:.4e}: {} + {} violations in {} samples (worst margins {:.3}, {:.3})",
            check.l,
            check.r,
            check.violations,
            check.perturbed_violations,
            check.samples,
            check.worst,
            check.worst_perturbed
        );
    }
    Ok(())
}
