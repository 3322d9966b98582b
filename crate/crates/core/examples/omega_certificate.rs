//! Build the truncated ball for a two-class network and check that the
//! reduced field points inwards on its boundary.

use crnkit::{check_inward, omega_build, parse_network, GhatContext};
use nalgebra::DVector;

fn main() -> crnkit::Result<()> {
    let sys = parse_network("A <-> B : 1, 1\nC <-> D : 2, 1")?;
    let class = sys.stoich_class(DVector::from_vec(vec![1.0, 2.0, 0.5, 1.0]))?;
    let spec = omega_build(GhatContext::with_birch(sys, &class)?)?;
    for (k, r) in spec.radii().iter().enumerate() {
        println!("r_{k} = {r:.6e}");
    }
    for s in 1..spec.radii().len() {
        println!("cap for |Q| = {s}: {:.6e}", spec.cap(s));
    }
    let report = check_inward(&spec, 2000, 11);
    for stratum in &report.strata {
        println!(
            "Q = {:?}: {} samples, {} violations, worst margin {:.3}",
            stratum.set, stratum.samples, stratum.violations, stratum.worst_margin
        );
    }
    println!("total: {} violations in {} samples", report.violations, report.samples);
    Ok(())
}
