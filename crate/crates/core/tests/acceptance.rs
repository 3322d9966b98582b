//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use crnkit::complex_map::counterexample::{self, closed_form_pairing, evaluate_point, run_counterexample};
use crnkit::subspace::{incidence_image, rank};
use crnkit::{
    birch_point, chain_infimum, check_inward, find_steady_state, omega_build, parse_network, serialize, simulate,
    threshold_l, threshold_r, ClassChart, GhatContext, MassActionSystem, ReactionNetwork, SolverOptions, StoichClass,
    Subspace,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Instance {
    sys: MassActionSystem,
    classes: Vec<StoichClass>,
}

fn existence_suite() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20)
        .map(|_| {
            let sys = common::weakly_reversible(&mut rng, 5, 8, 3);
            let classes = (0..3).map(|_| common::random_class(&mut rng, &sys)).collect();
            Instance { sys, classes }
        })
        .collect()
}

fn counterexample_pairing() -> Outcome {
    let start = Instant::now();
    let ctx = counterexample::counterexample_context();
    let mut worst_rel: f64 = 0.0;
    let mut all_positive = true;
    for alpha in [5.0, 6.0, 10.0] {
        let p = match evaluate_point(&ctx, alpha, 0.2) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("alpha = {alpha}: {e}")),
        };
        let exact = closed_form_pairing(alpha, 0.2);
        worst_rel = worst_rel.max((p.pairing - exact).abs() / exact.abs());
        all_positive &= p.pairing > 0.0;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_rel <= 1e-9 && all_positive && secs < 1.0,
        format!("relative error {worst_rel:.2e}, positive {all_positive}, {secs:.3} s"),
    )
}

struct Solved {
    instance: usize,
    class: StoichClass,
    x: DVector<f64>,
}

fn existence(suite: &[Instance], solved: &mut Vec<Solved>) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (mut worst_res, mut worst_class): (f64, f64) = (0.0, 0.0);
    for (k, inst) in suite.iter().enumerate() {
        for (j, class) in inst.classes.iter().enumerate() {
            match find_steady_state(&inst.sys, class, SolverOptions { tol: 1e-9, ..SolverOptions::default() }) {
                Ok(r) => {
                    let res = inst.sys.network().y().clone() * inst.sys.laplacian() * inst.sys.monomials(&r.x).unwrap();
                    let res = res.norm();
                    let ce = class.membership_error(&r.x);
                    worst_res = worst_res.max(res);
                    worst_class = worst_class.max(ce);
                    if res > 1e-9 || ce > 1e-8 {
                        failures.push(format!("network {k} class {j}: residual {res:.2e}, class error {ce:.2e}"));
                    }
                    solved.push(Solved { instance: k, class: class.clone(), x: r.x });
                }
                Err(e) => {
                    failures.push(format!("network {k} class {j}: {e}"));
                    if let crnkit::Error::NoConvergence(best) = e {
                        solved.push(Solved { instance: k, class: class.clone(), x: best.x });
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "{} solves, worst residual {worst_res:.2e}, worst class error {worst_class:.2e}, {secs:.2} s",
        suite.len() * 3
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(" | ")));
    }
    outcome(failures.is_empty() && secs < 60.0, detail)
}

fn oracle(suite: &[Instance], solved: &[Solved]) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let (mut runs, mut compared) = (0, 0);
    let (mut worst_res, mut worst_rel): (f64, f64) = (0.0, 0.0);
    for s in solved {
        let sys = &suite[s.instance].sys;
        let deficiency_zero = sys.network().deficiency() == 0;
        for _ in 0..3 {
            let x0 = common::point_in_class(&mut rng, &s.class);
            runs += 1;
            let traj = match simulate(sys, &x0, 1e6, 1e-9) {
                Ok(t) => t,
                Err(e) => {
                    failures.push(format!("network {}: {e}", s.instance));
                    continue;
                }
            };
            let x = traj.final_state();
            let res = traj.final_residual;
            let ce = s.class.membership_error(x);
            worst_res = worst_res.max(res);
            if res > 1e-6 || ce > 1e-8 * (1.0 + s.class.point().norm()) {
                failures.push(format!("network {}: residual {res:.2e}, class error {ce:.2e}", s.instance));
            }
            if deficiency_zero {
                compared += 1;
                let rel = (x - &s.x).norm() / s.x.norm();
                worst_rel = worst_rel.max(rel);
                if rel > 1e-5 {
                    failures.push(format!("network {}: relative disagreement {rel:.2e}", s.instance));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "{runs} runs, worst residual {worst_res:.2e}, {compared} deficiency-zero comparisons, worst relative gap {worst_rel:.2e}, {secs:.2} s"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(" | ")));
    }
    outcome(failures.is_empty() && runs == solved.len() * 3 && runs > 0, detail)
}

fn birch_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let (mut worst_s, mut worst_perp, mut worst_trip): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut failures = Vec::new();
    for k in 0..200 {
        let n = rng.random_range(1..=6);
        let dim = rng.random_range(0..=n);
        let s = Subspace::span(&common::random_subspace_matrix(&mut rng, n, dim));
        let p = common::gaussian_vector(&mut rng, n).map(|v| (1.5 * v).exp());
        let target = common::gaussian_vector(&mut rng, n).map(|v| (1.5 * v).exp());
        match birch_point(&s, &p, &target) {
            Ok(x) => {
                let log_gap = x.map(f64::ln) - target.map(f64::ln);
                let r_s = s.project(&log_gap).norm();
                let d = &x - &p;
                let r_perp = (&d - s.project(&d)).norm();
                worst_s = worst_s.max(r_s);
                worst_perp = worst_perp.max(r_perp);
                if r_s > 1e-10 || r_perp > 1e-10 {
                    failures.push(format!("problem {k}: {r_s:.2e}, {r_perp:.2e}"));
                }
            }
            Err(e) => failures.push(format!("problem {k}: {e}")),
        }

        let sys = common::weakly_reversible(&mut rng, 6, 8, 3);
        let class = common::random_class(&mut rng, &sys);
        let chart = match ClassChart::new(sys.network(), &class) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("chart {k}: {e}"));
                continue;
            }
        };
        let z = chart.k().from_coords(&(common::gaussian_vector(&mut rng, chart.k().dim()) * 2.0));
        match chart.psi_inverse(&z).and_then(|x| chart.psi(&x)) {
            Ok(back) => {
                let err = (back - &z).norm();
                worst_trip = worst_trip.max(err);
                if err > 1e-8 {
                    failures.push(format!("chart {k}: round trip {err:.2e}"));
                }
            }
            Err(e) => failures.push(format!("chart {k}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "200 problems, stationarity {worst_s:.2e} / {worst_perp:.2e}, round trip {worst_trip:.2e}, {secs:.2} s"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(" | ")));
    }
    outcome(failures.is_empty() && secs < 10.0, detail)
}

/// `z^T A_κ e^{x - max x}`, straight from the Laplacian.
fn laplacian_pairing(a: &DMatrix<f64>, z: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let top = x.max();
    z.dot(&(a * x.map(|v| (v - top).exp())))
}

/// Uniform direction in the blockwise-sum-zero space of a single block.
fn sum_zero_direction(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    loop {
        let g = common::gaussian_vector(rng, m);
        let d = g.add_scalar(-g.mean());
        if d.norm() > 1e-6 {
            return d.normalize();
        }
    }
}

fn thresholds() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rho = 1.0;
    let mut violations = 0;
    let mut perturbed = 0;
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for k in 0..10 {
        let m = if k % 2 == 0 { 2 } else { 3 };
        let sys = common::single_class(&mut rng, m, (0.5, 2.0));
        sizes.push(m);
        let rates = sys.rates();
        let ratio = rates.iter().cloned().fold(0.0, f64::max) / rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let (l, r) = match (threshold_l(&sys, ratio), threshold_r(&sys, rho)) {
            (Ok(l), Ok(r)) => (l, r),
            (Err(e), _) | (_, Err(e)) => {
                failures.push(format!("system {k}: {e}"));
                continue;
            }
        };
        let a = sys.laplacian();
        for _ in 0..1000 {
            let d = sum_zero_direction(&mut rng, m);
            let z = &d * (l * (1.0 + 3.0 * rng.random::<f64>()) / d.max());
            if laplacian_pairing(a, &z, &z) >= 0.0 {
                violations += 1;
            }
            let z = sum_zero_direction(&mut rng, m) * (r * (1.0 + 3.0 * rng.random::<f64>()));
            let w = common::gaussian_vector(&mut rng, m);
            let w = w.normalize() * (rho * rng.random::<f64>());
            if laplacian_pairing(a, &z, &(&z + w)) >= 0.0 {
                perturbed += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "10 systems (m = {sizes:?}) x 1000 samples: {violations} violations, {perturbed} perturbed violations, {secs:.2} s"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(" | ")));
    }
    outcome(failures.is_empty() && violations == 0 && perturbed == 0, detail)
}

fn chain() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    for t in [0.0, 0.5, 1.0, 7.25, 1e6] {
        if chain_infimum(1, t) != t {
            problems.push(format!("chain(1, {t}) = {}", chain_infimum(1, t)));
        }
    }
    let two = chain_infimum(2, std::f64::consts::E);
    if (two - 2.0).abs() > 1e-6 {
        problems.push(format!("chain(2, e) = {two}"));
    }
    for len in 1..=5 {
        let values: Vec<f64> = (0..100).map(|k| chain_infimum(len, 0.25 * k as f64)).collect();
        for k in 1..values.len() {
            if values[k] < values[k - 1] {
                problems.push(format!("M = {len}: decrease at t = {}", 0.25 * k as f64));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = if problems.is_empty() {
        format!("chain(2, e) = {two:.12}, monotone for M <= 5, {secs:.2} s")
    } else {
        problems.join(" | ")
    };
    outcome(problems.is_empty(), detail)
}

fn omega() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut systems: Vec<(String, MassActionSystem, DVector<f64>)> = vec![
        ("pair of pairs, Y = I".into(), counterexample::system(), DVector::from_element(4, 1.0)),
        (
            "two_pairs".into(),
            parse_network(include_str!("../../../networks/two_pairs.crn")).unwrap(),
            DVector::from_vec(vec![1.0, 2.0]),
        ),
    ];
    for k in 0..5 {
        let sys = common::two_blocks(&mut rng, 4);
        let p = common::positive_point(&mut rng, sys.network().n(), 0.2, 5.0);
        systems.push((format!("random {k}"), sys, p));
    }
    let mut failures = Vec::new();
    let mut total = 0;
    let mut radii = Vec::new();
    for (k, (name, sys, p)) in systems.into_iter().enumerate() {
        let class = sys.stoich_class(p).unwrap();
        let built = GhatContext::with_birch(sys, &class).and_then(omega_build);
        let spec = match built {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        radii.push(format!("{:.1e}", spec.outer_radius()));
        let report = check_inward(&spec, 1000, 100 + k as u64);
        total += report.samples;
        if report.violations > 0 || report.samples < 1000 {
            failures.push(format!("{name}: {} violations in {} samples", report.violations, report.samples));
        }
    }
    let ball = run_counterexample(&[5.0, 6.0, 10.0], 0.2, 1000, 0);
    let ball_violations = ball.as_ref().map(|b| b.ball.violations).unwrap_or(0);
    if ball_violations == 0 {
        failures.push("untruncated ball shows no violation".into());
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "7 contexts, {total} boundary samples, outer radii [{}], ball violations {ball_violations}, {secs:.2} s",
        radii.join(", ")
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(" | ")));
    }
    outcome(failures.is_empty(), detail)
}

fn structural(suite: &[Instance]) -> Outcome {
    let mut problems = Vec::new();
    for (k, inst) in suite.iter().enumerate() {
        let net = inst.sys.network();
        let a = inst.sys.laplacian();
        let colsum = DMatrix::from_element(1, net.m(), 1.0) * a;
        if colsum.amax() > 1e-12 * a.amax() {
            problems.push(format!("network {k}: column sums {:.2e}", colsum.amax()));
        }
        if rank(a) != net.m() - net.ell() {
            problems.push(format!("network {k}: rank {} != m - ell = {}", rank(a), net.m() - net.ell()));
        }
        let (again, perm) =
            ReactionNetwork::with_permutation(net.species().to_vec(), net.y().clone(), net.reactions().to_vec())
                .unwrap();
        if &again != net || perm != (0..net.m()).collect::<Vec<_>>() {
            problems.push(format!("network {k}: canonical ordering is not idempotent"));
        }
        match parse_network(&serialize(&inst.sys)) {
            Ok(back) if back.network() == net && back.rates() == inst.sys.rates() => {}
            _ => problems.push(format!("network {k}: parser round trip differs")),
        }
    }
    let fork = parse_network(include_str!("../../../networks/fork.crn")).unwrap();
    let fork_rank = rank(fork.laplacian());
    let fork_inc = incidence_image(fork.network()).dim();
    if fork_rank >= fork_inc {
        problems.push(format!("fork: rank {fork_rank} vs dim {fork_inc}"));
    }
    let detail = if problems.is_empty() {
        format!("{} networks, fork rank {fork_rank} < {fork_inc}", suite.len())
    } else {
        problems.join(" | ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    let suite = existence_suite();
    let mut solved = Vec::new();
    let results = [
        ("counterexample pairing", counterexample_pairing()),
        ("existence suite", existence(&suite, &mut solved)),
        ("oracle agreement", oracle(&suite, &solved)),
        ("birch suite", birch_suite()),
        ("negativity thresholds", thresholds()),
        ("chain infimum", chain()),
        ("omega certification", omega()),
        ("structural invariants", structural(&suite)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
