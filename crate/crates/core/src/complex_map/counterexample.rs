//! Two reversible pairs with an adversarial linear offset `F` for which
//! `⟨Ĝ(z), z⟩ > 0` at `z = α u + β v`, `α ≥ 5`, `β = 1/5`: the sign condition
//! fails on a plain ball, which is why `Ω` is truncated.

use nalgebra::{DMatrix, DVector};

use crate::complex_map::omega::{check_inward, InwardReport, OmegaSpec};
use crate::complex_map::{GhatContext, Offset};
use crate::error::Result;
use crate::network::{MassActionSystem, ReactionNetwork};
use crate::subspace::Subspace;

/// `u = (-1, 1, 0, 0)`
pub fn u() -> DVector<f64> {
    DVector::from_column_slice(&[-1.0, 1.0, 0.0, 0.0])
}

/// `v = (0, 0, -1, 1)`
pub fn v() -> DVector<f64> {
    DVector::from_column_slice(&[0.0, 0.0, -1.0, 1.0])
}

/// Laplacian blocks `[[-1, 1], [1, -1]]` and `[[-2, 1], [2, -1]]`.
pub fn system() -> MassActionSystem {
    let species = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
    let net = ReactionNetwork::new(species, DMatrix::identity(4, 4), vec![(0, 1), (1, 0), (2, 3), (3, 2)])
        .expect("static network is valid");
    MassActionSystem::new(net, vec![1.0, 1.0, 2.0, 1.0]).expect("static rates are positive")
}

/// `H = span{u, v}` with `F u = (-2, -2, 0, 0)` and `F v = 0`.
pub fn counterexample_context() -> GhatContext {
    let inputs = DMatrix::from_columns(&[u(), v()]);
    let outputs = DMatrix::from_columns(&[DVector::from_column_slice(&[-2.0, -2.0, 0.0, 0.0]), DVector::zeros(4)]);
    let h = Subspace::span(&inputs);
    GhatContext::new(system(), h, Offset::linear_from_images(&inputs, &outputs)).expect("static context is consistent")
}

/// `2α(e^{-3α} - e^{-α}) + 2β(2e^{-β} - e^{β})`.
pub fn closed_form_pairing(alpha: f64, beta: f64) -> f64 {
    2.0 * alpha * ((-3.0 * alpha).exp() - (-alpha).exp()) + 2.0 * beta * (2.0 * (-beta).exp() - beta.exp())
}

#[derive(Clone, Debug)]
pub struct CounterexamplePoint {
    pub alpha: f64,
    pub beta: f64,
    pub pairing: f64,
    pub closed_form: f64,
    pub terms: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub points: Vec<CounterexamplePoint>,
    /// Radius `|α u + β v|` of the untruncated ball, for the first point.
    pub ball_radius: f64,
    pub ball: InwardReport,
}

impl CounterexampleReport {
    pub fn all_positive(&self) -> bool {
        self.points.iter().all(|p| p.pairing > 0.0)
    }
}

pub fn evaluate_point(ctx: &GhatContext, alpha: f64, beta: f64) -> Result<CounterexamplePoint> {
    let z = u() * alpha + v() * beta;
    let terms = ctx.blockwise_pairing(&z)?;
    let pairing = ctx.ghat(&z)?.dot(&z);
    Ok(CounterexamplePoint { alpha, beta, pairing, closed_form: closed_form_pairing(alpha, beta), terms })
}

/// Evaluates the pairing at every `α` with the given `β`, then samples the
/// sphere through the first point.
pub fn run_counterexample(alphas: &[f64], beta: f64, samples: usize, seed: u64) -> Result<CounterexampleReport> {
    let ctx = counterexample_context();
    let points = alphas.iter().map(|&a| evaluate_point(&ctx, a, beta)).collect::<Result<Vec<_>>>()?;
    let first = alphas.first().copied().unwrap_or(5.0);
    let ball_radius = (u() * first + v() * beta).norm();
    let ball = check_inward(&OmegaSpec::ball(ctx, ball_radius), samples, seed);
    Ok(CounterexampleReport { points, ball_radius, ball })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_blocks() {
        let a = system().laplacian().clone();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[-1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, -2.0, 1.0, 0.0, 0.0, 2.0, -1.0],
        );
        assert_eq!(a, expected);
    }

    #[test]
    fn positive_pairing() {
        let ctx = counterexample_context();
        let p = evaluate_point(&ctx, 5.0, 0.2).unwrap();
        assert!((p.pairing - p.closed_form).abs() <= 1e-12 * p.closed_form.abs());
        assert!(p.pairing > 0.098 && p.pairing < 0.1);
        let split: f64 = p.terms.iter().sum();
        assert!((split - p.pairing).abs() <= 1e-12);
    }

    #[test]
    fn offset_matches_images() {
        let ctx = counterexample_context();
        let f = ctx.f_offset(&(u() * 3.0 + v() * 7.0)).unwrap();
        assert!((f - DVector::from_column_slice(&[-6.0, -6.0, 0.0, 0.0])).norm() < 1e-12);
    }
}
