//! Positive steady states inside a prescribed stoichiometric class.
//!
//! The search runs on `K`: a zero of `Φ(z) = Π_K Ĝ(z)` gives the steady
//! state `x = Ψ^{-1}(z)`, because `Y^T log x = z + F(z)` and hence
//! `Y A_κ x^Y = Y Ĝ(z)`.
//!
//! Newton and the pseudo-flow work on `Φ` divided by `max e^{z + F(z)}`,
//! which has the same zeros. A point is accepted when `|Y A_κ x^Y| ≤ tol`
//! and the scaled field is at most `1e-8`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::complex_map::{omega_build, GhatContext, OmegaSpec};
use crate::error::{Error, Result};
use crate::network::{check_positive, MassActionSystem, StoichClass};
use crate::ode::{simulate_with, OdeOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// `K = {0}`: the class holds exactly one candidate, `Ψ^{-1}(0)`.
    Direct,
    Newton,
    Pseudoflow,
    /// Newton started from the end point of an integrated trajectory.
    Integration,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Newton => "newton",
            Method::Pseudoflow => "pseudoflow",
            Method::Integration => "integration",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    /// `|Y A_κ x^Y|`, recomputed from `x`.
    pub residual_species: f64,
    /// `|Π_K Ĝ(z)|`.
    pub residual_complex: f64,
    pub iterations: usize,
    pub class_point: DVector<f64>,
    /// `|Π_{S^⊥}(x - p)|`.
    pub class_error: f64,
    pub method: Method,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Required species residual; the complex-space target is `tol / 10`.
    pub tol: f64,
    /// Newton steps per start.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 100, seed: 0 }
    }
}

const STARTS: usize = 8;
const START_RADIUS: f64 = 10.0;
const MAX_STEP: f64 = 10.0;
const SCALED_TOL: f64 = 1e-8;

/// `(|Y A_κ x^Y|, |Π_{S^⊥}(x - p)|)`.
pub fn residuals(sys: &MassActionSystem, class: &StoichClass, x: &DVector<f64>) -> Result<(f64, f64)> {
    Ok((sys.rhs(x)?.norm(), class.membership_error(x)))
}

/// `Φ` in coordinates of an orthonormal basis of `K`.
pub struct ReducedField {
    ctx: GhatContext,
    basis: DMatrix<f64>,
}

impl ReducedField {
    pub fn new(ctx: GhatContext) -> Self {
        let basis = ctx.h().basis().clone();
        ReducedField { ctx, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn context(&self) -> &GhatContext {
        &self.ctx
    }

    pub fn point(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.basis * c
    }

    /// `B^T Ĝ(B c)` divided by `max_j e^{(B c + F(B c))_j}`.
    pub fn eval(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.point(c);
        let w = &z + self.ctx.f_offset(&z)?;
        let top = w.max();
        let g = self.ctx.system().laplacian() * w.map(|v| (v - top).exp());
        Ok(self.basis.tr_mul(&g))
    }

    /// Forward-difference Jacobian with step `step * (1 + |z|)`.
    pub fn jacobian_with(&self, c: &DVector<f64>, f0: &DVector<f64>, step: f64) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let h = step * (1.0 + c.norm());
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut cj = c.clone();
            cj[j] += h;
            let fj = self.eval(&cj)?;
            jac.set_column(j, &((fj - f0) / h));
        }
        Ok(jac)
    }

    pub fn jacobian(&self, c: &DVector<f64>, f0: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.jacobian_with(c, f0, 1e-6)
    }
}

fn solve_linear(jac: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(s) = jac.clone().lu().solve(rhs) {
        if s.iter().all(|v| v.is_finite()) {
            return s;
        }
    }
    let (u, s, vt) = crate::subspace::sorted_svd(jac);
    let cut = 1e-12 * s.first().copied().unwrap_or(0.0);
    let mut out = DVector::zeros(jac.ncols());
    for (k, &sk) in s.iter().enumerate().filter(|(_, &sk)| sk > cut) {
        out += vt.row(k).transpose() * (u.column(k).dot(rhs) / sk);
    }
    out
}

fn norm_or_inf(field: &ReducedField, c: &DVector<f64>) -> (f64, Option<DVector<f64>>) {
    match field.eval(c) {
        Ok(f) if f.iter().all(|v| v.is_finite()) => (f.norm(), Some(f)),
        _ => (f64::INFINITY, None),
    }
}

struct Iterate {
    c: DVector<f64>,
    norm: f64,
    steps: usize,
}

/// Damped Newton from `c`; stops at `target` or when no decrease is possible.
fn newton(field: &ReducedField, mut c: DVector<f64>, target: f64, max_iter: usize) -> Iterate {
    let (mut norm, mut f) = norm_or_inf(field, &c);
    let mut steps = 0;
    while steps < max_iter {
        let Some(fc) = f.clone() else { break };
        if norm <= target {
            break;
        }
        let Ok(jac) = field.jacobian(&c, &fc) else { break };
        let mut delta = -solve_linear(&jac, &fc);
        let len = delta.norm();
        if len > MAX_STEP {
            delta *= MAX_STEP / len;
        }
        steps += 1;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &c + &delta * t;
            let (tn, tf) = norm_or_inf(field, &trial);
            if tn < (1.0 - 1e-4 * t) * norm {
                c = trial;
                norm = tn;
                f = tf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Iterate { c, norm, steps }
}

/// Explicit Euler on `ċ = Φ(c)` with step adaptation on `|Φ|`.
fn pseudoflow(field: &ReducedField, mut c: DVector<f64>, target: f64, max_steps: usize) -> Iterate {
    let (mut norm, mut f) = norm_or_inf(field, &c);
    let mut h = 1e-2;
    let mut steps = 0;
    while steps < max_steps && norm > target {
        let Some(fc) = f.clone() else { break };
        steps += 1;
        let mut dc = &fc * h;
        let len = dc.norm();
        if len > MAX_STEP {
            dc *= MAX_STEP / len;
        }
        let trial = &c + dc;
        let (tn, tf) = norm_or_inf(field, &trial);
        if tn < norm {
            c = trial;
            norm = tn;
            f = tf;
            h *= 1.5;
        } else {
            h *= 0.5;
            if h < 1e-14 {
                break;
            }
        }
    }
    Iterate { c, norm, steps }
}

struct Search<'a> {
    sys: &'a MassActionSystem,
    class: &'a StoichClass,
    field: ReducedField,
    opts: SolverOptions,
    iterations: usize,
    best: Option<((bool, f64), SteadyStateResult)>,
}

impl Search<'_> {
    /// Recomputes every residual from `c`; records it as the best so far.
    fn certify(&mut self, c: &DVector<f64>, method: Method) -> Option<SteadyStateResult> {
        let z = self.field.point(c);
        let chart = self.field.context().chart().expect("solver context uses the Birch offset");
        let x = chart.psi_inverse(&z).ok()?;
        let (residual_species, class_error) = residuals(self.sys, self.class, &x).ok()?;
        let scaled = self.field.eval(c).map(|f| f.norm()).unwrap_or(f64::INFINITY);
        let residual_complex =
            self.field.context().ghat(&z).map(|g| self.field.basis.tr_mul(&g).norm()).unwrap_or(f64::INFINITY);
        let result = SteadyStateResult {
            x,
            z,
            residual_species,
            residual_complex,
            iterations: self.iterations,
            class_point: self.class.point().clone(),
            class_error,
            method,
        };
        let key = (scaled > SCALED_TOL, residual_species);
        if self.best.as_ref().is_none_or(|(k, _)| key < *k) {
            self.best = Some((key, result.clone()));
        }
        (residual_species <= self.opts.tol && scaled <= SCALED_TOL).then_some(result)
    }

    fn run_newton(&mut self, c: DVector<f64>, method: Method) -> Option<SteadyStateResult> {
        let target = self.opts.tol / 10.0;
        let it = newton(&self.field, c, target, self.opts.max_iter);
        self.iterations += it.steps;
        if !it.norm.is_finite() {
            return None;
        }
        let found = self.certify(&it.c, method);
        if found.is_some() || it.norm > 1e-3 {
            return found;
        }
        // close to a zero but the species residual is not there yet: tighten
        let it = newton(&self.field, it.c, 0.0, 10);
        self.iterations += it.steps;
        self.certify(&it.c, method)
    }
}

fn random_starts(field: &ReducedField, omega: Option<&OmegaSpec>, seed: u64) -> Vec<DVector<f64>> {
    let d = field.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(STARTS);
    while out.len() < STARTS {
        let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = dir.norm();
        if n < 1e-8 {
            continue;
        }
        let radius = START_RADIUS * rng.random::<f64>().powf(1.0 / d as f64);
        let mut c = dir * (radius / n);
        if let Some(spec) = omega {
            let g = spec.gauge(&field.point(&c));
            if g > 1.0 {
                c /= g;
            }
        }
        out.push(c);
    }
    out
}

/// Finds `x ∈ E_+ ∩ 𝒫` with `|Y A_κ x^Y| ≤ opts.tol`.
pub fn find_steady_state(
    sys: &MassActionSystem,
    class: &StoichClass,
    opts: SolverOptions,
) -> Result<SteadyStateResult> {
    let net = sys.network();
    check_positive(class.point(), net.n())?;
    if !net.is_weakly_reversible() {
        return Err(Error::NotWeaklyReversible);
    }
    let ctx = GhatContext::with_birch(sys.clone(), class)?;
    let trivial = ctx.h().is_trivial();
    let mut search = Search { sys, class, field: ReducedField::new(ctx), opts, iterations: 0, best: None };
    if trivial {
        let c = DVector::zeros(0);
        if let Some(r) = search.certify(&c, Method::Direct) {
            return Ok(r);
        }
        return Err(no_convergence(search.best.map(|b| b.1), class, Method::Direct));
    }

    let origin = DVector::zeros(search.field.dim());
    if let Some(r) = search.run_newton(origin.clone(), Method::Newton) {
        return Ok(r);
    }
    let omega = omega_build(search.field.context().clone()).ok();
    let starts = random_starts(&search.field, omega.as_ref(), opts.seed);
    for c in &starts {
        if let Some(r) = search.run_newton(c.clone(), Method::Newton) {
            return Ok(r);
        }
    }
    for c in std::iter::once(&origin).chain(&starts) {
        let flow = pseudoflow(&search.field, c.clone(), 1e-4, 50 * opts.max_iter.max(1));
        search.iterations += flow.steps;
        if flow.norm.is_finite() {
            if let Some(r) = search.run_newton(flow.c, Method::Pseudoflow) {
                return Ok(r);
            }
        }
    }
    if let Some(c) = integration_start(sys, class, &search.field) {
        if let Some(r) = search.run_newton(c, Method::Integration) {
            return Ok(r);
        }
    }
    Err(no_convergence(search.best.map(|b| b.1), class, Method::Newton))
}

fn integration_start(sys: &MassActionSystem, class: &StoichClass, field: &ReducedField) -> Option<DVector<f64>> {
    let opts = OdeOptions { tol: 1e-6, ..OdeOptions::default() };
    let traj = simulate_with(sys, class.point(), 1e4, opts).ok()?;
    let chart = field.context().chart()?;
    let z = chart.psi(traj.states.last()?).ok()?;
    Some(field.context().h().coords(&z))
}

fn no_convergence(best: Option<SteadyStateResult>, class: &StoichClass, method: Method) -> Error {
    let best = best.unwrap_or_else(|| SteadyStateResult {
        x: class.point().clone(),
        z: DVector::zeros(0),
        residual_species: f64::INFINITY,
        residual_complex: f64::INFINITY,
        iterations: 0,
        class_point: class.point().clone(),
        class_error: 0.0,
        method,
    });
    Error::NoConvergence(Box::new(best))
}
