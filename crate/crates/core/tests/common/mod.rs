#![allow(dead_code)]

use crnkit::{parse_network, MassActionSystem, StoichClass};
use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SPECIES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

pub fn complex_text(c: &[u32]) -> String {
    let terms: Vec<String> = c
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .map(|(i, &v)| if v == 1 { SPECIES[i].to_string() } else { format!("{v} {}", SPECIES[i]) })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// `count` distinct complexes over `n` species with molecularity at most 2.
fn distinct_complexes(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<u32>> {
    let mut pool: Vec<Vec<u32>> = vec![vec![0; n]];
    for i in 0..n {
        let mut c = vec![0; n];
        c[i] = 1;
        pool.push(c.clone());
        c[i] = 2;
        pool.push(c);
        for j in i + 1..n {
            let mut c = vec![0; n];
            c[i] = 1;
            c[j] = 1;
            pool.push(c);
        }
    }
    pool.shuffle(rng);
    pool.truncate(count);
    pool
}

pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

pub fn network_text(complexes: &[Vec<u32>], arcs: &[Arc]) -> String {
    arcs.iter()
        .map(|a| format!("{} -> {} : {:?}\n", complex_text(&complexes[a.from]), complex_text(&complexes[a.to]), a.rate))
        .collect()
}

/// Arcs of a random strongly connected graph on `nodes`: a random cycle
/// plus up to `extra` further arcs.
fn strongly_connected(rng: &mut ChaCha8Rng, nodes: &[usize], extra: usize, rates: (f64, f64)) -> Vec<Arc> {
    let mut order = nodes.to_vec();
    order.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for k in 0..order.len() {
        let (a, b) = (order[k], order[(k + 1) % order.len()]);
        if !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    for _ in 0..extra {
        let a = *nodes.choose(rng).unwrap();
        let b = *nodes.choose(rng).unwrap();
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    pairs.into_iter().map(|(from, to)| Arc { from, to, rate: rng.random_range(rates.0..=rates.1) }).collect()
}

/// Random weakly reversible system with at most `max_n` species, at most
/// `max_m` complexes and at most `max_ell` linkage classes.
pub fn weakly_reversible(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_ell: usize) -> MassActionSystem {
    loop {
        let n = rng.random_range(1..=max_n);
        let ell = rng.random_range(1..=max_ell);
        let pool = (n + 1) * (n + 2) / 2;
        if 2 * ell > max_m.min(pool) {
            continue;
        }
        let m = rng.random_range(2 * ell..=max_m.min(pool));
        let complexes = distinct_complexes(rng, n, m);
        let mut sizes = vec![2; ell];
        for _ in 2 * ell..m {
            let k = rng.random_range(0..ell);
            sizes[k] += 1;
        }
        let mut arcs = Vec::new();
        let mut start = 0;
        for s in sizes {
            let nodes: Vec<usize> = (start..start + s).collect();
            let extra = rng.random_range(0..=s);
            arcs.extend(strongly_connected(rng, &nodes, extra, (0.1, 10.0)));
            start += s;
        }
        return parse_network(&network_text(&complexes, &arcs)).expect("generated network parses");
    }
}

/// Two linkage classes of two complexes each, reversible, rates in `[0.8, 1.25]`.
pub fn two_blocks(rng: &mut ChaCha8Rng, max_n: usize) -> MassActionSystem {
    let n = rng.random_range(2..=max_n);
    let complexes = distinct_complexes(rng, n, 4);
    let mut arcs = Vec::new();
    for (a, b) in [(0, 1), (2, 3)] {
        arcs.push(Arc { from: a, to: b, rate: rng.random_range(0.8..=1.25) });
        arcs.push(Arc { from: b, to: a, rate: rng.random_range(0.8..=1.25) });
    }
    parse_network(&network_text(&complexes, &arcs)).expect("generated network parses")
}

/// One strongly connected linkage class on `m` complexes.
pub fn single_class(rng: &mut ChaCha8Rng, m: usize, rates: (f64, f64)) -> MassActionSystem {
    let n = 3;
    let complexes = distinct_complexes(rng, n, m);
    let nodes: Vec<usize> = (0..m).collect();
    let extra = rng.random_range(0..=m);
    let arcs = strongly_connected(rng, &nodes, extra, rates);
    parse_network(&network_text(&complexes, &arcs)).expect("generated network parses")
}

pub fn positive_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..=hi))
}

pub fn random_class(rng: &mut ChaCha8Rng, sys: &MassActionSystem) -> StoichClass {
    let p = positive_point(rng, sys.network().n(), 0.2, 5.0);
    sys.stoich_class(p).expect("positive point")
}

/// A random positive point of the class, at least half of `p` componentwise
/// away from the boundary direction taken.
pub fn point_in_class(rng: &mut ChaCha8Rng, class: &StoichClass) -> DVector<f64> {
    let p = class.point();
    let s = class.subspace();
    if s.is_trivial() {
        return p.clone();
    }
    let c = DVector::from_fn(s.dim(), |_, _| rng.random_range(-1.0..=1.0));
    let d = s.from_coords(&c);
    let mut t = rng.random_range(0.2..=3.0);
    for (pi, di) in p.iter().zip(d.iter()) {
        if *di < 0.0 {
            t = f64::min(t, 0.5 * pi / -di);
        }
    }
    p + d * t
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

pub fn random_subspace_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, _| rng.random_range(-2.0..=2.0))
}
