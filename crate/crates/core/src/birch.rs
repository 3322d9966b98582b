//! Birch points and the chart `Ψ : 𝒫 → K`.
//!
//! For a subspace `S`, a base point `p` and a target `x*`, the Birch point
//! is the unique positive `x` with `x - p ∈ S` and `log x - log x* ∈ S^⊥`.
//! It minimizes the strictly convex
//! `h(x) = Σ x_i (log x_i - 1 - log x*_i)` over `(p + S) ∩ R^n_+`, which is
//! what [`BirchSolver`] does with a damped Newton iteration in
//! `S`-coordinates.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{check_positive, ReactionNetwork, StoichClass};
use crate::subspace::{self, Subspace};

#[derive(Clone, Copy, Debug)]
pub struct BirchSolver {
    pub max_iter: usize,
    /// Convergence when `|Π_S(log x - log x*)| <= tol * (1 + |log x*|_inf)`.
    pub tol: f64,
    /// Each step keeps `x_i >= boundary_fraction * x_i` of the current iterate.
    pub boundary_fraction: f64,
}

impl Default for BirchSolver {
    fn default() -> Self {
        BirchSolver { max_iter: 200, tol: 1e-12, boundary_fraction: 0.01 }
    }
}

#[derive(Clone, Debug)]
pub struct BirchSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Objective value at every iterate, starting point included.
    pub objective: Vec<f64>,
}

fn objective(x: &DVector<f64>, log_target: &DVector<f64>) -> (f64, f64) {
    let mut value = 0.0;
    let mut magnitude = 0.0;
    for (xi, ti) in x.iter().zip(log_target.iter()) {
        let term = xi * (xi.ln() - 1.0 - ti);
        value += term;
        magnitude += term.abs();
    }
    (value, magnitude)
}

impl BirchSolver {
    pub fn solve(&self, subspace: &Subspace, point: &DVector<f64>, target: &DVector<f64>) -> Result<BirchSolution> {
        let n = point.len();
        check_positive(point, n)?;
        check_positive(target, n)?;
        if subspace.ambient() != n {
            return Err(Error::DimensionMismatch { expected: n, found: subspace.ambient() });
        }
        let log_target = target.map(f64::ln);
        let mut x = point.clone();
        let (mut h, mut mag) = objective(&x, &log_target);
        let mut trace = vec![h];
        if subspace.is_trivial() {
            return Ok(BirchSolution { x, iterations: 0, objective: trace });
        }
        let basis = subspace.basis();
        let scale = 1.0 + log_target.amax();
        for iter in 0..self.max_iter {
            let grad = gradient(basis, &x, &log_target);
            let gnorm = grad.norm();
            if gnorm <= self.tol * scale {
                let x = polish(basis, x, &log_target, gnorm);
                return Ok(BirchSolution { x, iterations: iter, objective: trace });
            }
            let dx = newton_direction(basis, &x, &grad)?;
            let mut t: f64 = 1.0;
            for (xi, di) in x.iter().zip(dx.iter()) {
                if *di < 0.0 {
                    t = t.min((1.0 - self.boundary_fraction) * xi / -di);
                }
            }
            let slope = grad.dot(&basis.tr_mul(&dx));
            let slack = 8.0 * f64::EPSILON * mag;
            let mut accepted = None;
            for _ in 0..60 {
                let trial = &x + &dx * t;
                if trial.iter().all(|&v| v > 0.0) {
                    let (ht, mt) = objective(&trial, &log_target);
                    if ht <= h + 1e-4 * t * slope + slack {
                        accepted = Some((trial, ht, mt));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((trial, ht, mt)) => {
                    if trial.min() < 1e-300 {
                        return Err(Error::BirchFailed(format!(
                            "iterate reached the boundary of the orthant (min component {:e})",
                            trial.min()
                        )));
                    }
                    x = trial;
                    h = ht;
                    mag = mt;
                    trace.push(h);
                }
                // no representable decrease left: accept if the gradient is at rounding level
                None if gnorm <= 1e2 * self.tol * scale => {
                    return Ok(BirchSolution { x, iterations: iter, objective: trace });
                }
                None => {
                    return Err(Error::BirchFailed(format!("line search stalled with gradient {gnorm:e}")));
                }
            }
        }
        Err(Error::BirchFailed(format!("no convergence in {} steps", self.max_iter)))
    }
}

fn gradient(basis: &DMatrix<f64>, x: &DVector<f64>, log_target: &DVector<f64>) -> DVector<f64> {
    basis.tr_mul(&(x.map(f64::ln) - log_target))
}

fn newton_direction(basis: &DMatrix<f64>, x: &DVector<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let weighted = DMatrix::from_fn(x.len(), basis.ncols(), |r, c| basis[(r, c)] / x[r]);
    let hess = basis.tr_mul(&weighted);
    let step = match hess.clone().cholesky() {
        Some(ch) => -ch.solve(grad),
        None => -hess.lu().solve(grad).ok_or_else(|| Error::BirchFailed("singular Hessian".into()))?,
    };
    Ok(basis * step)
}

/// Full Newton steps while the gradient keeps shrinking.
fn polish(basis: &DMatrix<f64>, mut x: DVector<f64>, log_target: &DVector<f64>, mut gnorm: f64) -> DVector<f64> {
    for _ in 0..3 {
        let grad = gradient(basis, &x, log_target);
        let Ok(dx) = newton_direction(basis, &x, &grad) else { break };
        let trial = &x + dx;
        if trial.iter().any(|&v| !(v > 0.0)) {
            break;
        }
        let g = gradient(basis, &trial, log_target).norm();
        if g >= gnorm {
            break;
        }
        x = trial;
        gnorm = g;
    }
    x
}

/// The unique `x > 0` with `x - p ∈ S` and `log x - log x* ∈ S^⊥`.
pub fn birch_point(subspace: &Subspace, point: &DVector<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    BirchSolver::default().solve(subspace, point, target).map(|s| s.x)
}

/// `Ψ(x) = Π_𝓘 Y^T log x`.
pub fn psi(net: &ReactionNetwork, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_positive(x, net.n())?;
    let inc = subspace::incidence_image(net);
    Ok(inc.project(&(net.y().tr_mul(&x.map(f64::ln)))))
}

/// Everything needed to move between a stoichiometric class `𝒫` and the
/// complex-space coordinate `z ∈ K`, with the offset `F : K → 𝓘^⊥`.
#[derive(Clone, Debug)]
pub struct ClassChart {
    y: DMatrix<f64>,
    blocks: Vec<Range<usize>>,
    incidence: Subspace,
    k: Subspace,
    class: StoichClass,
    /// Pseudo-inverse of `Π_𝓘 Y^T` (`n x m`).
    lift: DMatrix<f64>,
    solver: BirchSolver,
}

impl ClassChart {
    pub fn new(net: &ReactionNetwork, class: &StoichClass) -> Result<Self> {
        check_positive(class.point(), net.n())?;
        let incidence = subspace::incidence_image(net);
        let k = subspace::k_subspace(net);
        let reduced = incidence.projector() * net.y().transpose();
        let lift = subspace::pseudo_inverse(&reduced);
        Ok(ClassChart {
            y: net.y().clone(),
            blocks: net.linkage().to_vec(),
            incidence,
            k,
            class: class.clone(),
            lift,
            solver: BirchSolver::default(),
        })
    }

    pub fn k(&self) -> &Subspace {
        &self.k
    }

    pub fn incidence(&self) -> &Subspace {
        &self.incidence
    }

    pub fn class(&self) -> &StoichClass {
        &self.class
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn psi(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_positive(x, self.y.nrows())?;
        Ok(self.incidence.project(&self.y.tr_mul(&x.map(f64::ln))))
    }

    fn check_in_k(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.y.ncols() {
            return Err(Error::DimensionMismatch { expected: self.y.ncols(), found: z.len() });
        }
        let residual = self.k.residual(z);
        if residual > 1e-9 * (1.0 + z.norm()) {
            return Err(Error::NotInSubspace { residual });
        }
        Ok(())
    }

    /// The unique `x ∈ 𝒫` with `Ψ(x) = z`.
    pub fn psi_inverse(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_in_k(z)?;
        let w = &self.lift * z;
        if w.amax() > 700.0 {
            return Err(Error::BirchFailed(format!("target log-concentration {:e} overflows", w.amax())));
        }
        let target = w.map(f64::exp);
        self.solver.solve(self.class.subspace(), self.class.point(), &target).map(|s| s.x)
    }

    /// Blockwise means of `Y^T log x`, i.e. `Π_{𝓘^⊥}` in block coordinates.
    fn block_means(&self, v: &DVector<f64>) -> Vec<f64> {
        self.blocks.iter().map(|r| r.clone().map(|i| v[i]).sum::<f64>() / r.len() as f64).collect()
    }

    /// `F(z)` per linkage class together with the state `x = Ψ^{-1}(z)`.
    pub fn offset_levels(&self, z: &DVector<f64>) -> Result<(Vec<f64>, DVector<f64>)> {
        let x = self.psi_inverse(z)?;
        let full = self.y.tr_mul(&x.map(f64::ln));
        Ok((self.block_means(&full), x))
    }

    /// `F(z) = Π_{𝓘^⊥} Y^T log Ψ^{-1}(z)`.
    pub fn f_offset(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (levels, _) = self.offset_levels(z)?;
        Ok(expand_levels(&self.blocks, &levels))
    }
}

/// Vector that equals `levels[i]` on block `i`.
pub fn expand_levels(blocks: &[Range<usize>], levels: &[f64]) -> DVector<f64> {
    let m = blocks.last().map_or(0, |r| r.end);
    let mut out = DVector::zeros(m);
    for (r, &v) in blocks.iter().zip(levels) {
        out.rows_mut(r.start, r.len()).fill(v);
    }
    out
}
