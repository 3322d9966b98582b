//! Adaptive integration of `ẋ = Y A_κ x^Y`, re-projected onto `x0 + S`
//! after every accepted step.
//!
//! The local error allowed per step is the usual `atol + rtol |x|`, capped at
//! `0.1 h max(|ẋ|_∞, tol)`.
//!
//! Starts with Dormand–Prince 5(4). When the stiffness test `h ρ > 3.25`
//! (with `ρ` estimated from the last two stages) holds for 15 accepted steps
//! in a row, the run continues with the L-stable Rosenbrock 2(3) pair of
//! Shampine and Reichelt.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{check_positive, MassActionSystem};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Stop as soon as `|Y A_κ x^Y| ≤ tol`.
    pub tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-10, rtol: 1e-9, atol: 1e-12, initial_step: 1e-3, min_step: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// `|Y A_κ x^Y|` at the last state.
    pub final_residual: f64,
    /// Whether the run stopped on the residual test rather than at `t_end`.
    pub converged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("a trajectory holds at least the initial state")
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

const STIFF_TEST: f64 = 3.25;
const STIFF_STEPS: usize = 15;

struct Trial {
    next: DVector<f64>,
    err: DVector<f64>,
    /// `h ρ` with `ρ` the local Lipschitz estimate; zero for Rosenbrock steps.
    stiffness: f64,
}

/// One trial step; `None` if a stage leaves the positive orthant.
fn dp_step(sys: &MassActionSystem, x: &DVector<f64>, k1: &DVector<f64>, h: f64) -> Option<Trial> {
    let mut k: Vec<DVector<f64>> = vec![k1.clone()];
    let mut y6 = x.clone();
    for s in 1..7 {
        let mut y = x.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                y.axpy(h * A[s][j], kj, 1.0);
            }
        }
        k.push(sys.rhs(&y).ok()?);
        if s == 5 {
            y6 = y;
        }
    }
    let mut high = x.clone();
    let mut err = DVector::zeros(x.len());
    for s in 0..7 {
        high.axpy(h * B5[s], &k[s], 1.0);
        err.axpy(h * (B5[s] - B4[s]), &k[s], 1.0);
    }
    let dy = (&high - y6).norm();
    let stiffness = if dy > 0.0 { h * (&k[6] - &k[5]).norm() / dy } else { 0.0 };
    Some(Trial { next: high, err, stiffness })
}

/// `∂/∂x (Y A_κ x^Y) = Y A_κ diag(x^Y) Y^T diag(1/x)`.
fn jacobian(sys: &MassActionSystem, x: &DVector<f64>) -> Option<DMatrix<f64>> {
    let y = sys.network().y();
    let mono = sys.monomials(x).ok()?;
    let inner = sys.laplacian() * DMatrix::from_diagonal(&mono) * y.transpose();
    let mut jac = y * inner;
    for (c, xc) in x.iter().enumerate() {
        jac.column_mut(c).scale_mut(1.0 / xc);
    }
    Some(jac)
}

fn rosenbrock_step(sys: &MassActionSystem, x: &DVector<f64>, f0: &DVector<f64>, h: f64) -> Option<Trial> {
    let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
    let e32 = 6.0 + std::f64::consts::SQRT_2;
    let n = x.len();
    let w = DMatrix::identity(n, n) - jacobian(sys, x)? * (h * d);
    let lu = w.lu();
    let k1 = lu.solve(f0)?;
    let f1 = sys.rhs(&(x + &k1 * (0.5 * h))).ok()?;
    let k2 = lu.solve(&(&f1 - &k1))? + &k1;
    let next = x + &k2 * h;
    let f2 = sys.rhs(&next).ok()?;
    let k3 = lu.solve(&(f2 - (&k2 - &f1) * e32 - (&k1 - f0) * 2.0))?;
    let err = (k1 - k2 * 2.0 + k3) * (h / 6.0);
    next.iter().all(|v| v.is_finite()).then_some(Trial { next, err, stiffness: 0.0 })
}

pub fn simulate(sys: &MassActionSystem, x0: &DVector<f64>, t_end: f64, tol: f64) -> Result<Trajectory> {
    simulate_with(sys, x0, t_end, OdeOptions { tol, ..OdeOptions::default() })
}

pub fn simulate_with(sys: &MassActionSystem, x0: &DVector<f64>, t_end: f64, opts: OdeOptions) -> Result<Trajectory> {
    check_positive(x0, sys.network().n())?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Precondition(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    let class = sys.stoich_class(x0.clone())?;
    let mut t = 0.0;
    let mut x = x0.clone();
    let mut f = sys.rhs(&x)?;
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut h = opts.initial_step.min(t_end);
    let mut steps = 0;
    let mut stiff = false;
    let mut stiff_run = 0;
    while f.norm() > opts.tol && t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!("step budget {} exhausted at t = {t}", opts.max_steps)));
        }
        steps += 1;
        h = h.min(t_end - t);
        let step = if stiff { rosenbrock_step(sys, &x, &f, h) } else { dp_step(sys, &x, &f, h) };
        let exponent = if stiff { -1.0 / 3.0 } else { -0.2 };
        let cap = 0.1 * h * f.amax().max(opts.tol);
        let trial = step.and_then(|tr| {
            let scale = tr.next.zip_map(&x, |a, b| (opts.atol + opts.rtol * a.abs().max(b.abs())).min(cap));
            let e = tr.err.component_div(&scale).amax();
            let projected = class.project_affine(&tr.next);
            (projected.iter().all(|&v| v > 0.0)).then_some((projected, e, tr.stiffness))
        });
        match trial {
            Some((next, e, stiffness)) if e <= 1.0 => {
                let fnext = sys.rhs(&next)?;
                t += h;
                x = next;
                f = fnext;
                times.push(t);
                states.push(x.clone());
                let grow = if e == 0.0 { 5.0 } else { (0.9 * e.powf(exponent)).clamp(0.2, 5.0) };
                h *= grow;
                if !stiff {
                    stiff_run = if stiffness > STIFF_TEST { stiff_run + 1 } else { 0 };
                    stiff = stiff_run >= STIFF_STEPS;
                }
            }
            Some((_, e, _)) => {
                h *= (0.9 * e.powf(exponent)).clamp(0.2, 1.0);
            }
            None => {
                h *= 0.5;
            }
        }
        if h < opts.min_step {
            return Err(Error::Integration(format!("step size fell below {:e} at t = {t}", opts.min_step)));
        }
    }
    let final_residual = f.norm();
    Ok(Trajectory { times, states, final_residual, converged: final_residual <= opts.tol })
}
