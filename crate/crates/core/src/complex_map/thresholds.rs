//! Negativity thresholds for a single linkage class.
//!
//! `threshold_l` returns `L` such that `⟨G(z), z⟩ < 0` whenever `z ∈ 𝓘` and
//! `max(z) ≥ L`, uniformly over rates with `max κ / min κ ≤ D`.
//! `threshold_r` turns this into a norm bound that survives a perturbation
//! `|w| ≤ ρ` of the exponent.

use crate::complex_map::chain::chain_infimum;
use crate::error::{Error, Result};
use crate::network::MassActionSystem;

const SAFETY: f64 = 2.0;

fn check_block(block: &MassActionSystem) -> Result<()> {
    let net = block.network();
    if net.ell() != 1 {
        return Err(Error::Precondition(format!("expected a single linkage class, found {}", net.ell())));
    }
    if !net.is_weakly_reversible() {
        return Err(Error::NotWeaklyReversible);
    }
    Ok(())
}

fn rate_ratio(block: &MassActionSystem) -> f64 {
    let (lo, hi) = block.rates().iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    hi / lo
}

/// Smallest `t` (to bisection accuracy, rounded up) with
/// `chain_infimum(len, t) ≥ target`.
fn chain_level(len: usize, target: f64) -> Result<f64> {
    match len {
        1 => return Ok(target),
        2 => {
            if target <= 1.0 {
                return Ok(target);
            }
            let t = (target - 1.0).exp();
            return if t.is_finite() {
                // make sure rounding in exp does not land just below the target
                let mut t = t;
                while chain_infimum(2, t) < target {
                    t = t.next_up();
                }
                Ok(t)
            } else {
                Err(Error::ThresholdOverflow(format!("chain of length 2 needs e^{}", target - 1.0)))
            };
        }
        _ => {}
    }
    if chain_infimum(len, f64::MAX / 4.0) < target {
        return Err(Error::ThresholdOverflow(format!(
            "chain of length {len} never reaches {target:e} in double precision"
        )));
    }
    let mut hi = target.max(1.0);
    while chain_infimum(len, hi) < target {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if chain_infimum(len, lo) >= target {
        lo = 0.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if chain_infimum(len, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `L` for the single-linkage system `block` and every rate vector whose
/// max/min ratio is at most `ratio_bound`.
pub fn threshold_l(block: &MassActionSystem, ratio_bound: f64) -> Result<f64> {
    check_block(block)?;
    let own = rate_ratio(block);
    if !(ratio_bound >= own * (1.0 - 1e-12)) || !ratio_bound.is_finite() {
        return Err(Error::Precondition(format!(
            "ratio bound {ratio_bound:e} is below the rate ratio {own:e} of the block"
        )));
    }
    let target = 2.0 * block.rates().len() as f64 * ratio_bound;
    let m = block.network().m();
    let mut worst: f64 = 0.0;
    for len in 1..m {
        worst = worst.max(chain_level(len, target)?);
    }
    let l = SAFETY * worst;
    if !l.is_finite() {
        return Err(Error::ThresholdOverflow(format!("L = {l}")));
    }
    Ok(l)
}

/// `R_ρ = (m-1) √m L(e^{2ρ} max κ / min κ)`: if `z ∈ 𝓘` and `|z| ≥ R_ρ` then
/// `z^T A_κ e^{z+w} < 0` for every `|w| ≤ ρ`.
pub fn threshold_r(block: &MassActionSystem, rho: f64) -> Result<f64> {
    check_block(block)?;
    if !(rho >= 0.0) {
        return Err(Error::Precondition(format!("perturbation radius must be nonnegative, got {rho}")));
    }
    let stretch = (2.0 * rho).exp();
    if !stretch.is_finite() {
        return Err(Error::ThresholdOverflow(format!("e^(2 rho) with rho = {rho:e}")));
    }
    let m = block.network().m() as f64;
    let l = threshold_l(block, stretch * rate_ratio(block))?;
    let r = (m - 1.0) * m.sqrt() * l;
    if !r.is_finite() {
        return Err(Error::ThresholdOverflow(format!("R = {r}")));
    }
    Ok(r)
}
