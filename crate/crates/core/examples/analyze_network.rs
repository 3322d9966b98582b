//! Structural summary of a small network: linkage classes, deficiency and
//! weak reversibility.

use crnkit::parse_network;

const TEXT: &str = "\
# dimerization with a side channel
2 A <-> D : 1.5, 0.5
A + B <-> C : 2, 1
C -> B + 0.5 D : 0.25
B + 0.5 D -> A + B : 0.75
";

fn main() -> crnkit::Result<()> {
    let sys = parse_network(TEXT)?;
    let net = sys.network();
    println!("species: {:?}", net.species());
    println!("n = {}, m = {}, ell = {}", net.n(), net.m(), net.ell());
    for (i, block) in net.linkage().iter().enumerate() {
        let labels: Vec<String> = block.clone().map(|c| crnkit::json::complex_label(net, c)).collect();
        println!("class {}: {}", i + 1, labels.join(", "));
    }
    println!("stoichiometric rank {}", net.stoichiometric_rank());
    println!("deficiency {}", net.deficiency());
    println!("weakly reversible: {}", net.is_weakly_reversible());
    println!("{}", crnkit::json::emit(&crnkit::json::analyze(&sys)));
    Ok(())
}
