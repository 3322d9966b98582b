//! `inf { Σ_{i=1}^{M} e^{-y_{i-1}} y_i : y_1, …, y_{M-1} ≥ 0 }` with `y_0 = 0`
//! and `y_M` given.
//!
//! The last free coordinate is eliminated in closed form: for fixed
//! `y_{M-2}` the minimum over `y_{M-1}` sits at `max(0, y_{M-2} + log y_M)`.
//! The remaining coordinates go through a dynamic program on a grid, each
//! level being a lower-envelope query `min_y (a y + f(y))`, and the
//! extracted chain is polished by exact coordinate minimization.

const GRID: usize = 4001;
const POLISH_SWEEPS: usize = 2000;

/// `min_{y ≥ 0} e^{-prev} y + last e^{-y}` and its minimizer.
fn tail(prev: f64, last: f64) -> (f64, f64) {
    if last > 0.0 {
        let y = prev + last.ln();
        if y > 0.0 {
            return ((-prev).exp() * (y + 1.0), y);
        }
    }
    (last, 0.0)
}

fn chain_value(ys: &[f64], last: f64) -> f64 {
    let mut prev: f64 = 0.0;
    let mut total = 0.0;
    for &y in ys.iter().chain(std::iter::once(&last)) {
        total += (-prev).exp() * y;
        prev = y;
    }
    total
}

/// Lower convex hull of the points `(x_j, f_j)`, `x` increasing.
fn lower_hull(xs: &[f64], fs: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for j in 0..xs.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (xs[b] - xs[a]) * (fs[j] - fs[a]) - (fs[b] - fs[a]) * (xs[j] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    hull
}

/// Index minimizing `a x_j + f_j` over the hull vertices.
fn hull_query(hull: &[usize], xs: &[f64], fs: &[f64], a: f64) -> usize {
    // slopes along the hull increase; the optimum is where they cross -a
    let (mut lo, mut hi) = (0, hull.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (p, q) = (hull[mid], hull[mid + 1]);
        let slope = (fs[q] - fs[p]) / (xs[q] - xs[p]);
        if slope >= -a {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    hull[lo]
}

fn polish(ys: &mut [f64], last: f64) {
    let k = ys.len();
    for _ in 0..POLISH_SWEEPS {
        let mut change: f64 = 0.0;
        for i in 0..k {
            let prev = if i == 0 { 0.0 } else { ys[i - 1] };
            let next = if i + 1 == k { last } else { ys[i + 1] };
            let y = if next > 0.0 { (prev + next.ln()).max(0.0) } else { 0.0 };
            change = change.max((y - ys[i]).abs());
            ys[i] = y;
        }
        if change <= 1e-14 * (1.0 + ys.iter().fold(0.0_f64, |a, &b| a.max(b))) {
            break;
        }
    }
}

/// Infimum of `Σ_{i=1}^{len} e^{-y_{i-1}} y_i` over `y_1, …, y_{len-1} ≥ 0`,
/// with `y_0 = 0` and `y_len = last`.
///
/// # Panics
/// If `len == 0` or `last` is negative or NaN.
pub fn chain_infimum(len: usize, last: f64) -> f64 {
    assert!(len >= 1, "chain length must be at least 1");
    assert!(last >= 0.0, "last chain entry must be nonnegative");
    if len == 1 {
        return last;
    }
    if len == 2 {
        return tail(0.0, last).0;
    }
    // free coordinates y_1..y_{len-1}; y_{len-1} is handled by `tail`
    let free = len - 1;
    let span = (free as f64) * (last.max(1.0).ln() + 2.0 * (len as f64).ln() + 3.0) + 5.0;
    let xs: Vec<f64> = (0..GRID).map(|j| span * j as f64 / (GRID - 1) as f64).collect();

    // values[j] = best cost of the coordinates after y_k given y_k = xs[j]
    let mut values: Vec<f64> = xs.iter().map(|&y| tail(y, last).0).collect();
    // choice[k][j] = grid index of y_{k+1} chosen when y_k = xs[j]
    let mut choice: Vec<Vec<usize>> = Vec::new();
    for _level in (2..free).rev() {
        let hull = lower_hull(&xs, &values);
        let mut next = vec![0.0; GRID];
        let mut pick = vec![0; GRID];
        for (j, &y) in xs.iter().enumerate() {
            let a = (-y).exp();
            let best = hull_query(&hull, &xs, &values, a);
            next[j] = a * xs[best] + values[best];
            pick[j] = best;
        }
        values = next;
        choice.push(pick);
    }
    choice.reverse();
    let hull = lower_hull(&xs, &values);
    let first = hull_query(&hull, &xs, &values, 1.0);
    let grid_value = xs[first] + values[first];

    let mut ys = Vec::with_capacity(free);
    let mut j = first;
    ys.push(xs[j]);
    for pick in &choice {
        j = pick[j];
        ys.push(xs[j]);
    }
    let prev = *ys.last().unwrap();
    ys.push(tail(prev, last).1);
    polish(&mut ys, last);
    grid_value.min(chain_value(&ys, last))
}
