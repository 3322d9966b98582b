//! Sampling checks of the negativity thresholds on every linkage class.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::complex_map::thresholds::{threshold_l, threshold_r};
use crate::error::Result;
use crate::network::MassActionSystem;
use crate::subspace::{incidence_image, Subspace};

#[derive(Clone, Debug)]
pub struct NegativityCheck {
    pub class: usize,
    pub l: f64,
    pub rho: f64,
    pub r: f64,
    pub samples: usize,
    /// Samples with `max(z) ≥ L` and `⟨G(z), z⟩ ≥ 0`.
    pub violations: usize,
    /// Samples with `|z| ≥ R_ρ`, `|w| ≤ ρ` and `z^T A_κ e^{z+w} ≥ 0`.
    pub perturbed_violations: usize,
    /// Largest `pairing / Σ|arc terms|` seen, for each of the two checks.
    pub worst: f64,
    pub worst_perturbed: f64,
}

/// `z^T A_κ e^x / Σ_arcs κ e^{x_a} |z_b - z_a|`, evaluated with `max(x)`
/// factored out.
pub fn normalized_pairing(sys: &MassActionSystem, z: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let top = x.max();
    let mut value = 0.0;
    let mut mass = 0.0;
    for (&(a, b), &k) in sys.network().reactions().iter().zip(sys.rates()) {
        let t = k * (x[a] - top).exp() * (z[b] - z[a]);
        value += t;
        mass += t.abs();
    }
    if mass == 0.0 {
        0.0
    } else {
        value / mass
    }
}

fn unit(rng: &mut ChaCha8Rng, s: &Subspace) -> DVector<f64> {
    loop {
        let c = DVector::from_fn(s.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        if c.norm() > 1e-8 {
            return s.from_coords(&(&c / c.norm()));
        }
    }
}

/// For every linkage class: `samples` points `z ∈ 𝓘` with `max(z) ≥ L`, and
/// `samples` pairs `|z| ≥ R_ρ`, `|w| ≤ ρ`.
pub fn check_negativity(sys: &MassActionSystem, rho: f64, samples: usize, seed: u64) -> Result<Vec<NegativityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for class in 0..sys.network().ell() {
        let block = sys.block(class);
        let rates = block.rates();
        let ratio = rates.iter().cloned().fold(0.0, f64::max) / rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let l = threshold_l(&block, ratio)?;
        let r = threshold_r(&block, rho)?;
        let inc = incidence_image(block.network());
        let m = block.network().m();
        let mut check = NegativityCheck {
            class,
            l,
            rho,
            r,
            samples,
            violations: 0,
            perturbed_violations: 0,
            worst: f64::NEG_INFINITY,
            worst_perturbed: f64::NEG_INFINITY,
        };
        for _ in 0..samples {
            let d = unit(&mut rng, &inc);
            let z = &d * (l * (1.0 + 3.0 * rng.random::<f64>()) / d.max());
            let margin = normalized_pairing(&block, &z, &z);
            if margin >= 0.0 {
                check.violations += 1;
            }
            check.worst = check.worst.max(margin);

            let z = unit(&mut rng, &inc) * (r * (1.0 + 3.0 * rng.random::<f64>()));
            let w = unit(&mut rng, &Subspace::full(m)) * (rho * rng.random::<f64>());
            let margin = normalized_pairing(&block, &z, &(&z + w));
            if margin >= 0.0 {
                check.perturbed_violations += 1;
            }
            check.worst_perturbed = check.worst_perturbed.max(margin);
        }
        out.push(check);
    }
    Ok(out)
}
