//! The complex-space maps `G(z) = A_κ e^z` and `Ĝ = G ∘ (Id + F)`.
//!
//! Pairings such as `z(i)^T A_κ(i) e^{z(i)}` blow up long before their sign
//! becomes interesting, so they are returned as [`Scaled`] numbers with the
//! blockwise maximum of the exponent factored out.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::birch::{expand_levels, ClassChart};
use crate::error::{Error, Result};
use crate::network::{MassActionSystem, StoichClass};
use crate::subspace::{self, Subspace};

pub mod chain;
pub mod counterexample;
pub mod lemmas;
pub mod omega;
pub mod thresholds;

pub use chain::chain_infimum;
pub use counterexample::{closed_form_pairing, counterexample_context, run_counterexample, CounterexampleReport};
pub use lemmas::{check_negativity, NegativityCheck};
pub use omega::{check_inward, omega_build, InwardReport, OmegaSpec, StratumReport};
pub use thresholds::{threshold_l, threshold_r};

/// Largest exponent for which `e^x` is evaluated directly.
pub const EXP_LIMIT: f64 = 700.0;

/// The real number `mantissa * e^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub exponent: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, exponent: 0.0 };

    /// Plain value; saturates to `±inf` or `0` outside the `f64` range.
    pub fn value(self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * self.exponent.exp()
        }
    }

    pub fn is_negative(self) -> bool {
        self.mantissa < 0.0
    }

    pub fn times_exp(self, log_factor: f64) -> Scaled {
        Scaled { mantissa: self.mantissa, exponent: self.exponent + log_factor }
    }

    pub fn sum(items: &[Scaled]) -> Scaled {
        let top = items.iter().filter(|s| s.mantissa != 0.0).map(|s| s.exponent).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Scaled::ZERO;
        }
        let mantissa = items.iter().filter(|s| s.mantissa != 0.0).map(|s| s.mantissa * (s.exponent - top).exp()).sum();
        Scaled { mantissa, exponent: top }
    }
}

/// `G(z) = A_κ e^z`.
pub fn g_map(sys: &MassActionSystem, z: &DVector<f64>) -> Result<DVector<f64>> {
    let m = sys.network().m();
    if z.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: z.len() });
    }
    let top = z.max();
    if top > EXP_LIMIT {
        return Err(Error::Overflow(top));
    }
    Ok(sys.laplacian() * z.map(f64::exp))
}

/// The offset `F : H → 𝓘^⊥`.
#[derive(Clone, Debug)]
pub enum Offset {
    Zero,
    /// `F(z) = M z` for an `m x m` matrix `M`.
    Linear(DMatrix<f64>),
    /// `F(z) = Π_{𝓘^⊥} Y^T log Ψ^{-1}(z)` for a stoichiometric class.
    Birch(Box<ClassChart>),
}

impl Offset {
    /// The linear map sending each column of `inputs` to the matching column
    /// of `outputs`, and the orthogonal complement of the inputs to zero.
    pub fn linear_from_images(inputs: &DMatrix<f64>, outputs: &DMatrix<f64>) -> Offset {
        Offset::Linear(outputs * subspace::pseudo_inverse(inputs))
    }
}

/// One term `pair^T A_κ(i) e^{x(i)}`, plus `Σ κ_ab e^{x_a}|pair_b - pair_a|`
/// with the same scale, which bounds its magnitude.
#[derive(Clone, Copy, Debug)]
pub struct BlockTerm {
    pub value: Scaled,
    pub mass: f64,
}

/// A system, a subspace `H ≤ 𝓘` and an offset `F`.
#[derive(Clone, Debug)]
pub struct GhatContext {
    sys: MassActionSystem,
    h: Subspace,
    offset: Offset,
    incidence: Subspace,
    arcs: Vec<Vec<(usize, usize, f64)>>,
}

impl GhatContext {
    pub fn new(sys: MassActionSystem, h: Subspace, offset: Offset) -> Result<Self> {
        let net = sys.network();
        let m = net.m();
        if h.ambient() != m {
            return Err(Error::DimensionMismatch { expected: m, found: h.ambient() });
        }
        let incidence = subspace::incidence_image(net);
        let residual = incidence.containment_residual(&h);
        if residual > 1e-10 {
            return Err(Error::NotInSubspace { residual });
        }
        match &offset {
            Offset::Zero => {}
            Offset::Linear(mat) => {
                if mat.nrows() != m || mat.ncols() != m {
                    return Err(Error::DimensionMismatch { expected: m, found: mat.nrows() });
                }
                let images = mat * h.basis();
                let leak = (incidence.projector() * &images).amax();
                if leak > 1e-10 * (1.0 + images.amax()) {
                    return Err(Error::Precondition(format!(
                        "linear offset is not blockwise constant on H (leak {leak:e})"
                    )));
                }
            }
            Offset::Birch(chart) => {
                let residual = chart.k().containment_residual(&h);
                if residual > 1e-10 {
                    return Err(Error::NotInSubspace { residual });
                }
            }
        }
        let mut arcs = vec![Vec::new(); net.ell()];
        for (&(a, b), &k) in net.reactions().iter().zip(sys.rates()) {
            arcs[net.class_of(a)].push((a, b, k));
        }
        Ok(GhatContext { sys, h, offset, incidence, arcs })
    }

    /// `H = K` with the Birch offset of `class`.
    pub fn with_birch(sys: MassActionSystem, class: &StoichClass) -> Result<Self> {
        let chart = ClassChart::new(sys.network(), class)?;
        let k = chart.k().clone();
        GhatContext::new(sys, k, Offset::Birch(Box::new(chart)))
    }

    pub fn system(&self) -> &MassActionSystem {
        &self.sys
    }

    pub fn h(&self) -> &Subspace {
        &self.h
    }

    pub fn offset(&self) -> &Offset {
        &self.offset
    }

    pub fn incidence(&self) -> &Subspace {
        &self.incidence
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        self.sys.network().linkage()
    }

    pub fn chart(&self) -> Option<&ClassChart> {
        match &self.offset {
            Offset::Birch(c) => Some(c),
            _ => None,
        }
    }

    pub fn check_member(&self, z: &DVector<f64>) -> Result<()> {
        let m = self.sys.network().m();
        if z.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: z.len() });
        }
        let residual = self.h.residual(z);
        if residual > 1e-9 * (1.0 + z.norm()) {
            return Err(Error::NotInSubspace { residual });
        }
        Ok(())
    }

    /// `F_i(z)` for every linkage class `i`.
    pub fn offset_levels(&self, z: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_member(z)?;
        let ell = self.blocks().len();
        match &self.offset {
            Offset::Zero => Ok(vec![0.0; ell]),
            Offset::Linear(mat) => {
                let f = mat * z;
                Ok(self.blocks().iter().map(|r| r.clone().map(|i| f[i]).sum::<f64>() / r.len() as f64).collect())
            }
            Offset::Birch(chart) => chart.offset_levels(z).map(|(levels, _)| levels),
        }
    }

    pub fn f_offset(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(expand_levels(self.blocks(), &self.offset_levels(z)?))
    }

    /// `Ĝ(z) = G(z + F(z))`.
    pub fn ghat(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let shifted = z + self.f_offset(z)?;
        g_map(&self.sys, &shifted)
    }

    /// `pair(i)^T A_κ(i) e^{x(i)}` on class `class`, computed arc by arc.
    pub fn block_term(&self, class: usize, pair: &DVector<f64>, x: &DVector<f64>) -> BlockTerm {
        let range = self.blocks()[class].clone();
        let top = range.clone().map(|i| x[i]).fold(f64::NEG_INFINITY, f64::max);
        let mut value = 0.0;
        let mut mass = 0.0;
        for &(a, b, k) in &self.arcs[class] {
            let term = k * (x[a] - top).exp() * (pair[b] - pair[a]);
            value += term;
            mass += term.abs();
        }
        BlockTerm { value: Scaled { mantissa: value, exponent: top }, mass }
    }

    /// `e^{F_i(z)} z(i)^T A_κ(i) e^{z(i)}` for every class, in scaled form.
    pub fn blockwise_pairing_scaled(&self, z: &DVector<f64>) -> Result<Vec<Scaled>> {
        let levels = self.offset_levels(z)?;
        Ok((0..levels.len()).map(|i| self.block_term(i, z, z).value.times_exp(levels[i])).collect())
    }

    pub fn blockwise_pairing(&self, z: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(self.blockwise_pairing_scaled(z)?.into_iter().map(Scaled::value).collect())
    }

    /// `⟨Ĝ(z), z⟩` in scaled form.
    pub fn pairing_scaled(&self, z: &DVector<f64>) -> Result<Scaled> {
        Ok(Scaled::sum(&self.blockwise_pairing_scaled(z)?))
    }
}
