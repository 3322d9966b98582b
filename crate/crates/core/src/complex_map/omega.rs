//! The truncated ball
//! `Ω = { z ∈ H : |z_Q| ≤ √(r_ℓ² - r_{ℓ-|Q|}²) for every nonempty Q }`
//! and a sampling check that `Ĝ` points inwards on its boundary.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::complex_map::thresholds::threshold_r;
use crate::complex_map::{GhatContext, Scaled};
use crate::error::{Error, Result};
use crate::subspace::{block_decompose, supported_on, Subspace};

const MEMBER_TOL: f64 = 1e-12;
const RADIUS_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug)]
struct Stratum {
    set: Vec<usize>,
    h_q: Subspace,
    /// `H ∩ H_Q^⊥`
    rest: Subspace,
}

/// `Ω` together with the data of its construction.
#[derive(Clone, Debug)]
pub struct OmegaSpec {
    ctx: GhatContext,
    radii: Vec<f64>,
    epsilons: Vec<Option<f64>>,
    level_thresholds: Vec<f64>,
    thresholds: Vec<Vec<Option<f64>>>,
    /// `caps[s]` bounds `|z_Q|` for `|Q| = s`; `caps[0]` is unused.
    caps: Vec<f64>,
    /// `inner[s] = r_{ℓ-s}`, the largest `|z - z_Q|` on the stratum `|z_Q| = caps[s]`.
    inner: Vec<f64>,
    strata: Vec<Stratum>,
}

fn subsets(ell: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> =
        (1u64..(1u64 << ell)).map(|mask| (0..ell).filter(|b| mask & (1 << b) != 0).collect()).collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    out
}

fn strata(ctx: &GhatContext) -> Vec<Stratum> {
    let h = ctx.h();
    subsets(ctx.blocks().len())
        .into_iter()
        .map(|set| {
            let h_q = supported_on(h, ctx.blocks(), &set);
            let rest = h.intersection(&h_q.complement());
            Stratum { set, h_q, rest }
        })
        .collect()
}

/// Runs the level-by-level radius selection.
pub fn omega_build(ctx: GhatContext) -> Result<OmegaSpec> {
    let net = ctx.system().network();
    if !net.is_weakly_reversible() {
        return Err(Error::NotWeaklyReversible);
    }
    let ell = net.ell();
    let blocks: Vec<_> = (0..ell).map(|i| ctx.system().block(i)).collect();
    let strata = strata(&ctx);
    let mut radii = vec![0.0];
    let mut epsilons = Vec::with_capacity(ell);
    let mut level_thresholds = Vec::with_capacity(ell);
    let mut thresholds = Vec::with_capacity(ell);
    for k in 1..=ell {
        let size = ell - k + 1;
        let rho = radii[k - 1];
        let mut table: Vec<Option<f64>> = vec![None; ell];
        let mut eps_k: Option<f64> = None;
        let mut r_max: f64 = 0.0;
        for stratum in strata.iter().filter(|s| s.set.len() == size) {
            for &i in &stratum.set {
                let rows = ctx.blocks()[i].clone();
                let restricted = stratum.h_q.basis().rows(rows.start, rows.len()).norm();
                if restricted <= 1e-10 {
                    // block i of H_Q vanishes identically, so its term is zero
                    continue;
                }
                let dec = block_decompose(ctx.h(), ctx.blocks(), &stratum.set, &[i])?;
                let eps = dec.epsilon.unwrap_or(1.0);
                if eps < 1e-10 {
                    return Err(Error::DegenerateBlock(format!("epsilon({:?}, {{{i}}}) = {eps:e}", stratum.set)));
                }
                eps_k = Some(eps_k.map_or(eps, |e| e.min(eps)));
                let r = match table[i] {
                    Some(r) => r,
                    None => {
                        let r = threshold_r(&blocks[i], rho)?;
                        table[i] = Some(r);
                        r
                    }
                };
                r_max = r_max.max(r);
            }
        }
        let eps = eps_k.unwrap_or(1.0);
        let mut r_k = (rho * rho + 2.0 * (r_max / eps).powi(2)).sqrt() * (1.0 + RADIUS_MARGIN);
        if r_k <= rho {
            r_k = rho + 1.0;
        }
        if !r_k.is_finite() {
            return Err(Error::ThresholdOverflow(format!("radius r_{k} is not finite")));
        }
        radii.push(r_k);
        epsilons.push(eps_k);
        level_thresholds.push(r_max);
        thresholds.push(table);
    }
    let outer = radii[ell];
    let mut caps = vec![f64::NAN; ell + 1];
    let mut inner = vec![f64::NAN; ell + 1];
    for s in 1..=ell {
        let r = radii[ell - s];
        caps[s] = ((outer - r) * (outer + r)).sqrt();
        inner[s] = r;
    }
    Ok(OmegaSpec { ctx, radii, epsilons, level_thresholds, thresholds, caps, inner, strata })
}

impl OmegaSpec {
    /// The plain ball `{ z ∈ H : |z| ≤ radius }`, with no truncation.
    pub fn ball(ctx: GhatContext, radius: f64) -> OmegaSpec {
        let ell = ctx.blocks().len();
        let mut caps = vec![f64::INFINITY; ell + 1];
        let mut inner = vec![f64::NAN; ell + 1];
        caps[ell] = radius;
        inner[ell] = 0.0;
        let strata = strata(&ctx);
        OmegaSpec {
            ctx,
            radii: vec![0.0, radius],
            epsilons: Vec::new(),
            level_thresholds: Vec::new(),
            thresholds: Vec::new(),
            caps,
            inner,
            strata,
        }
    }

    pub fn context(&self) -> &GhatContext {
        &self.ctx
    }

    /// `r_0, …, r_ℓ` (just `0, radius` for a ball).
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// `ε_k` per level; `None` when every pair of the level was skipped.
    pub fn epsilons(&self) -> &[Option<f64>] {
        &self.epsilons
    }

    /// Largest `R_{r_{k-1}}` used at each level.
    pub fn level_thresholds(&self) -> &[f64] {
        &self.level_thresholds
    }

    /// `R_{r_{k-1}}` per level and linkage class, where it was needed.
    pub fn thresholds(&self) -> &[Vec<Option<f64>>] {
        &self.thresholds
    }

    /// Bound on `|z_Q|` for `|Q| = size`.
    pub fn cap(&self, size: usize) -> f64 {
        self.caps[size]
    }

    /// `max_Q |z_Q| / cap_Q`; `z ∈ Ω` iff this is at most one.
    pub fn gauge(&self, z: &DVector<f64>) -> f64 {
        self.strata
            .iter()
            .map(|s| {
                let cap = self.caps[s.set.len()];
                if cap.is_infinite() {
                    0.0
                } else {
                    s.h_q.project(z).norm() / cap
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        self.ctx.h().residual(z) <= 1e-9 * (1.0 + z.norm()) && self.gauge(z) <= 1.0 + MEMBER_TOL
    }
}

#[derive(Clone, Debug)]
pub struct StratumReport {
    pub set: Vec<usize>,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

/// Result of [`check_inward`]. The margin of a sample is
/// `⟨Ĝ(z), z_Q⟩ / Σ_i e^{F_i} |terms_i|`, so it lies in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct InwardReport {
    pub samples: usize,
    pub violations: usize,
    /// Samples where `F` had to be evaluated and could not be.
    pub unresolved: usize,
    pub worst_margin: f64,
    pub worst_point: Option<DVector<f64>>,
    pub strata: Vec<StratumReport>,
}

fn random_unit(rng: &mut ChaCha8Rng, s: &Subspace) -> DVector<f64> {
    loop {
        let c = DVector::from_fn(s.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = c.norm();
        if n > 1e-8 {
            return s.from_coords(&(c / n));
        }
    }
}

enum Outcome {
    Margin(f64),
    Unresolved,
}

fn ratio(num: Scaled, den: Scaled) -> f64 {
    if den.mantissa == 0.0 {
        return 0.0;
    }
    num.mantissa / den.mantissa * (num.exponent - den.exponent).exp()
}

fn evaluate(ctx: &GhatContext, set: &[usize], z: &DVector<f64>, zq: &DVector<f64>) -> Outcome {
    let terms: Vec<_> = set.iter().map(|&i| (i, ctx.block_term(i, zq, z))).collect();
    let certified =
        terms.iter().all(|(_, t)| t.value.mantissa <= 0.0) && terms.iter().any(|(_, t)| t.value.mantissa < 0.0);
    let weights = if certified {
        // the sign does not depend on the offset
        vec![0.0; ctx.blocks().len()]
    } else {
        match ctx.offset_levels(z) {
            Ok(levels) => levels,
            Err(_) => return Outcome::Unresolved,
        }
    };
    let num: Vec<Scaled> = terms.iter().map(|(i, t)| t.value.times_exp(weights[*i])).collect();
    let den: Vec<Scaled> =
        terms.iter().map(|(i, t)| Scaled { mantissa: t.mass, exponent: t.value.exponent + weights[*i] }).collect();
    let num = Scaled::sum(&num);
    if certified {
        // keep the margin strictly negative even if it underflows
        return Outcome::Margin(ratio(num, Scaled::sum(&den)).min(-f64::MIN_POSITIVE));
    }
    Outcome::Margin(ratio(num, Scaled::sum(&den)))
}

/// Samples boundary points of `Ω` stratified by the active constraint `Q`
/// and counts those where `⟨Ĝ(z), z_Q⟩ ≥ 0`.
pub fn check_inward(spec: &OmegaSpec, samples: usize, seed: u64) -> InwardReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = &spec.ctx;
    let active: Vec<&Stratum> =
        spec.strata.iter().filter(|s| !s.h_q.is_trivial() && spec.caps[s.set.len()].is_finite()).collect();
    let mut report = InwardReport {
        samples: 0,
        violations: 0,
        unresolved: 0,
        worst_margin: f64::NEG_INFINITY,
        worst_point: None,
        strata: Vec::new(),
    };
    for (idx, stratum) in active.iter().enumerate() {
        let quota = samples / active.len() + usize::from(idx < samples % active.len());
        let cap = spec.caps[stratum.set.len()];
        let inner = spec.inner[stratum.set.len()];
        let mut sr =
            StratumReport { set: stratum.set.clone(), samples: 0, violations: 0, worst_margin: f64::NEG_INFINITY };
        let mut attempts = 0;
        while sr.samples < quota && attempts < 200 * quota.max(1) {
            attempts += 1;
            let zq = random_unit(&mut rng, &stratum.h_q) * cap;
            let mut w = if stratum.rest.is_trivial() || inner == 0.0 {
                DVector::zeros(zq.len())
            } else {
                random_unit(&mut rng, &stratum.rest) * (inner * rng.random::<f64>())
            };
            let mut z = &zq + &w;
            let mut tries = 0;
            while !spec.contains(&z) && tries < 40 {
                w *= 0.5;
                z = &zq + &w;
                tries += 1;
            }
            if !spec.contains(&z) {
                continue;
            }
            sr.samples += 1;
            match evaluate(ctx, &stratum.set, &z, &zq) {
                Outcome::Margin(margin) => {
                    if margin >= 0.0 {
                        sr.violations += 1;
                    }
                    sr.worst_margin = sr.worst_margin.max(margin);
                    if margin > report.worst_margin {
                        report.worst_margin = margin;
                        report.worst_point = Some(z);
                    }
                }
                Outcome::Unresolved => {
                    sr.violations += 1;
                    report.unresolved += 1;
                }
            }
        }
        report.samples += sr.samples;
        report.violations += sr.violations;
        report.strata.push(sr);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_map::Offset;
    use crate::network::{MassActionSystem, ReactionNetwork};
    use nalgebra::DMatrix;

    fn pair(k12: f64, k21: f64) -> MassActionSystem {
        let net =
            ReactionNetwork::new(vec!["A".into(), "B".into()], DMatrix::identity(2, 2), vec![(0, 1), (1, 0)]).unwrap();
        MassActionSystem::new(net, vec![k12, k21]).unwrap()
    }

    #[test]
    fn subsets_are_ordered_by_size() {
        let s = subsets(3);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], vec![0, 1, 2]);
        assert_eq!(s[6], vec![2]);
    }

    #[test]
    fn single_class_is_a_ball() {
        let h = Subspace::span(&DMatrix::from_column_slice(2, 1, &[1.0, -1.0]));
        let ctx = GhatContext::new(pair(1.0, 1.0), h, Offset::Zero).unwrap();
        let spec = omega_build(ctx).unwrap();
        let r = spec.radii()[1];
        assert!((r - 8.0 * 2f64.sqrt() * 2f64.sqrt() * 1.001).abs() < 1e-9);
        assert_eq!(spec.cap(1), r);
        let report = check_inward(&spec, 200, 3);
        assert_eq!(report.samples, 200);
        assert_eq!(report.violations, 0);
        assert!(report.worst_margin < 0.0);
    }

    #[test]
    fn membership_is_convex() {
        let h = Subspace::span(&DMatrix::from_column_slice(2, 1, &[1.0, -1.0]));
        let ctx = GhatContext::new(pair(1.0, 1.0), h, Offset::Zero).unwrap();
        let spec = OmegaSpec::ball(ctx, 2.0);
        let a = DVector::from_column_slice(&[1.4, -1.4]);
        let b = DVector::from_column_slice(&[-1.0, 1.0]);
        assert!(spec.contains(&a) && spec.contains(&b));
        assert!(spec.contains(&((&a + &b) * 0.5)));
        assert!(!spec.contains(&(a * 1.1)));
    }
}
