//! Orthonormal-basis subspaces of `R^d` and the block decompositions used
//! to build the truncated ball.
//!
//! Ranks are cut at a relative singular-value tolerance of `1e-10`.
//! Intersections and kernels go through orthogonal complements of spans,
//! so every basis produced here comes out of an SVD.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::ReactionNetwork;

pub const RANK_TOL: f64 = 1e-10;

/// Thin SVD `a = U diag(s) V^T` with `s` in decreasing order, as `(U, s, V^T)`.
pub(crate) fn sorted_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let k = a.nrows().min(a.ncols());
    let mat = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)]);
    let Ok(svd) = mat.thin_svd() else {
        // faer only fails on non-finite input
        let nan = DMatrix::from_element(a.nrows(), k, f64::NAN);
        return (nan, vec![f64::NAN; k], DMatrix::from_element(k, a.ncols(), f64::NAN));
    };
    let (u, sv, v) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let s = order.iter().map(|&i| sv[i]).collect();
    let u = DMatrix::from_fn(a.nrows(), k, |r, c| u[(r, order[c])]);
    let vt = DMatrix::from_fn(k, a.ncols(), |r, c| v[(c, order[r])]);
    (u, s, vt)
}

fn numerical_rank(s: &[f64]) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().take_while(|&&v| v > RANK_TOL * top).count(),
        _ => 0,
    }
}

/// Numerical rank with relative tolerance [`RANK_TOL`].
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    numerical_rank(&sorted_svd(a).1)
}

/// Moore-Penrose pseudo-inverse with the same rank cut as [`rank`].
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.is_empty() {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let (u, s, vt) = sorted_svd(a);
    let r = numerical_rank(&s);
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for k in 0..r {
        out += vt.row(k).transpose() * u.column(k).transpose() / s[k];
    }
    out
}

/// Linear subspace stored as an orthonormal basis (the columns of `basis`).
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn trivial(ambient: usize) -> Self {
        Subspace { basis: DMatrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { basis: DMatrix::identity(ambient, ambient) }
    }

    /// Column space of `a`.
    pub fn span(a: &DMatrix<f64>) -> Self {
        Self::span_cut(a, None)
    }

    /// Column space of `a`, cutting singular values at `RANK_TOL * reference`
    /// instead of relative to the largest one. Use when `a` may be pure
    /// rounding noise, e.g. the projection of a vector onto its complement.
    pub fn span_scaled(a: &DMatrix<f64>, reference: f64) -> Self {
        Self::span_cut(a, Some(RANK_TOL * reference))
    }

    fn span_cut(a: &DMatrix<f64>, cut: Option<f64>) -> Self {
        if a.is_empty() {
            return Self::trivial(a.nrows());
        }
        let (u, s, _) = sorted_svd(a);
        let r = match cut {
            Some(c) => s.iter().take_while(|&&v| v > c).count(),
            None => numerical_rank(&s),
        };
        Subspace { basis: u.columns(0, r).into_owned() }
    }

    /// Kernel of `a` (as a subspace of `R^{a.ncols()}`).
    pub fn kernel(a: &DMatrix<f64>) -> Self {
        Self::span(&a.transpose()).complement()
    }

    pub fn kernel_scaled(a: &DMatrix<f64>, reference: f64) -> Self {
        Self::span_scaled(&a.transpose(), reference).complement()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projector `B B^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.tr_mul(v))
    }

    pub fn try_project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.ambient() {
            return Err(Error::DimensionMismatch { expected: self.ambient(), found: v.len() });
        }
        Ok(self.project(v))
    }

    /// Coordinates of `v`'s projection in the basis.
    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(v)
    }

    pub fn from_coords(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.basis * c
    }

    /// `|v - Π v|`.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn complement(&self) -> Self {
        if self.is_trivial() {
            return Self::full(self.ambient());
        }
        let p = DMatrix::identity(self.ambient(), self.ambient()) - self.projector();
        let (u, s, _) = sorted_svd(&p);
        // eigenvalues of a projector are 0 or 1
        let r = s.iter().take_while(|&&v| v > 0.5).count();
        Subspace { basis: u.columns(0, r).into_owned() }
    }

    pub fn sum(&self, other: &Subspace) -> Self {
        let mut cols = DMatrix::zeros(self.ambient(), self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.basis);
        cols.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Self::span(&cols)
    }

    pub fn intersection(&self, other: &Subspace) -> Self {
        self.complement().sum(&other.complement()).complement()
    }

    /// Largest residual of `other`'s basis vectors with respect to `self`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        other.basis.column_iter().map(|c| self.residual(&c.into_owned())).fold(0.0, f64::max)
    }

    /// Image under a matrix, `span(M B)`.
    pub fn image(&self, m: &DMatrix<f64>) -> Self {
        Self::span(&(m * &self.basis))
    }
}

/// Row indices covered by the blocks listed in `set`.
pub fn block_rows(blocks: &[Range<usize>], set: &[usize]) -> Vec<usize> {
    let mut rows: Vec<usize> = set.iter().flat_map(|&b| blocks[b].clone()).collect();
    rows.sort_unstable();
    rows
}

fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |r, c| a[(rows[r], c)])
}

/// `|v(Q)|`, the norm of the entries of `v` in the blocks of `set`.
pub fn block_norm(blocks: &[Range<usize>], set: &[usize], v: &DVector<f64>) -> f64 {
    set.iter().flat_map(|&b| blocks[b].clone()).map(|i| v[i] * v[i]).sum::<f64>().sqrt()
}

/// `𝓘 = ran I`: vectors whose entries sum to zero on every linkage class.
pub fn incidence_image(net: &ReactionNetwork) -> Subspace {
    let indicators = DMatrix::from_fn(net.m(), net.ell(), |r, c| if net.linkage()[c].contains(&r) { 1.0 } else { 0.0 });
    Subspace::span(&indicators).complement()
}

/// `K = Π_𝓘(ran Y^T)`.
pub fn k_subspace(net: &ReactionNetwork) -> Subspace {
    let inc = incidence_image(net);
    let yt = net.y().transpose();
    let reference = yt.norm().max(f64::MIN_POSITIVE);
    Subspace::span_scaled(&(inc.projector() * yt), reference)
}

/// `H_Q = H ∩ ker Π_{Q^c}`: the part of `h` supported on the blocks in `set`.
pub fn supported_on(h: &Subspace, blocks: &[Range<usize>], set: &[usize]) -> Subspace {
    let others: Vec<usize> = (0..blocks.len()).filter(|b| !set.contains(b)).collect();
    let rows = block_rows(blocks, &others);
    if rows.is_empty() || h.is_trivial() {
        return h.clone();
    }
    let restricted = select_rows(h.basis(), &rows);
    let null = Subspace::kernel_scaled(&restricted, 1.0);
    Subspace { basis: h.basis() * null.basis() }
}

fn validate_sets(ell: usize, q: &[usize], qp: &[usize]) -> Result<()> {
    for (name, set) in [("Q", q), ("Q'", qp)] {
        for (k, &b) in set.iter().enumerate() {
            if b >= ell {
                return Err(Error::InvalidIndexSet(format!("{name} contains class {b} but ell = {ell}")));
            }
            if set[..k].contains(&b) {
                return Err(Error::InvalidIndexSet(format!("{name} repeats class {b}")));
            }
        }
    }
    if let Some(b) = qp.iter().find(|b| !q.contains(b)) {
        return Err(Error::InvalidIndexSet(format!("Q' contains {b} which is not in Q")));
    }
    Ok(())
}

/// Orthogonal splitting `H_Q = H_{Q'} ⊕ H_{Q∖Q'} ⊕ V_{Q,Q'}` together with
/// the constant `ε` for which `|y(Q')| ≥ ε|y|` on `V`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub h_q: Subspace,
    pub h_qp: Subspace,
    pub h_rest: Subspace,
    pub v: Subspace,
    /// Exact `min |y(Q')|/|y|` over `V`; `None` when `V` is trivial.
    pub epsilon: Option<f64>,
    /// The weaker `c/sqrt(1+c^2)` constant, which equals
    /// `min(ε(Q,Q'), ε(Q,Q∖Q'))`.
    pub proof_epsilon: Option<f64>,
    /// Unit vector of `V` attaining `epsilon`.
    pub extremal: Option<DVector<f64>>,
}

fn smallest_restricted_singular(v: &Subspace, blocks: &[Range<usize>], set: &[usize]) -> (f64, DVector<f64>) {
    let rows = block_rows(blocks, set);
    let dim = v.dim();
    if rows.len() < dim {
        // the restriction has a kernel; find it
        let restricted = select_rows(v.basis(), &rows);
        let ker = Subspace::kernel_scaled(&restricted, 1.0);
        return (0.0, v.basis() * ker.basis().column(0));
    }
    let restricted = select_rows(v.basis(), &rows);
    let (_, s, vt) = sorted_svd(&restricted);
    let last = s.len() - 1;
    let dir = vt.row(last).transpose();
    (s[last], v.basis() * dir)
}

pub fn block_decompose(h: &Subspace, blocks: &[Range<usize>], q: &[usize], qp: &[usize]) -> Result<BlockDecomposition> {
    validate_sets(blocks.len(), q, qp)?;
    if h.ambient() != blocks.last().map_or(0, |r| r.end) {
        return Err(Error::DimensionMismatch { expected: blocks.last().map_or(0, |r| r.end), found: h.ambient() });
    }
    let rest: Vec<usize> = q.iter().copied().filter(|b| !qp.contains(b)).collect();
    let h_q = supported_on(h, blocks, q);
    let h_qp = supported_on(h, blocks, qp);
    let h_rest = supported_on(h, blocks, &rest);
    let v = h_q.intersection(&h_qp.sum(&h_rest).complement());
    let (epsilon, proof_epsilon, extremal) = if v.is_trivial() {
        (None, None, None)
    } else {
        let (eps, dir) = smallest_restricted_singular(&v, blocks, qp);
        let (eps_rest, _) = smallest_restricted_singular(&v, blocks, &rest);
        (Some(eps), Some(eps.min(eps_rest)), Some(dir))
    };
    Ok(BlockDecomposition { h_q, h_qp, h_rest, v, epsilon, proof_epsilon, extremal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn orthonormal(s: &Subspace) -> f64 {
        (s.basis().tr_mul(s.basis()) - DMatrix::identity(s.dim(), s.dim())).amax()
    }

    #[test]
    fn projection_examples() {
        let u = Subspace::span(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        assert!((u.project(&v(&[3.0, 4.0])) - v(&[3.0, 0.0])).norm() < 1e-15);
        let t = Subspace::trivial(2);
        assert_eq!(t.project(&v(&[3.0, 4.0])), v(&[0.0, 0.0]));
        let inc = Subspace::span(&DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]));
        assert!((inc.project(&v(&[1.0, 0.0])) - v(&[0.5, -0.5])).norm() < 1e-15);
        assert!(u.try_project(&v(&[1.0])).is_err());
    }

    #[test]
    fn complement_and_kernel() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let ker = Subspace::kernel(&a);
        assert_eq!(ker.dim(), 1);
        assert!((&a * ker.basis()).amax() < 1e-14);
        let row = Subspace::span(&a.transpose());
        assert!((row.basis().tr_mul(ker.basis())).amax() < 1e-14);
        assert!(orthonormal(&ker) < 1e-12);
        assert_eq!(Subspace::trivial(3).complement().dim(), 3);
        assert_eq!(Subspace::full(3).complement().dim(), 0);
    }

    #[test]
    fn complement_with_uneven_blocks() {
        let ind = DMatrix::from_row_slice(5, 2, &[1., 0., 1., 0., 0., 1., 0., 1., 0., 1.]);
        let c = Subspace::span(&ind).complement();
        assert_eq!(c.dim(), 3);
        assert!(orthonormal(&c) < 1e-13);
        assert!(ind.tr_mul(c.basis()).amax() < 1e-13);
    }

    #[test]
    fn intersection_of_planes() {
        let p1 = Subspace::span(&DMatrix::from_column_slice(3, 2, &[1., 0., 0., 0., 1., 0.]));
        let p2 = Subspace::span(&DMatrix::from_column_slice(3, 2, &[1., 0., 0., 0., 0., 1.]));
        let line = p1.intersection(&p2);
        assert_eq!(line.dim(), 1);
        assert!((line.basis()[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_decomposition_with_split_basis() {
        // H = span{u, v} with u = (-1,1,0,0), v = (0,0,-1,1)
        let blocks = [0..2, 2..4];
        let h = Subspace::span(&DMatrix::from_column_slice(4, 2, &[-1., 1., 0., 0., 0., 0., -1., 1.]));
        let d = block_decompose(&h, &blocks, &[0, 1], &[0]).unwrap();
        assert_eq!(d.h_qp.dim(), 1);
        assert_eq!(d.h_rest.dim(), 1);
        assert!(d.v.is_trivial());
        assert!(d.epsilon.is_none());
        assert!(d.h_qp.residual(&v(&[-1., 1., 0., 0.])) < 1e-14);
        assert!(d.h_rest.residual(&v(&[0., 0., -1., 1.])) < 1e-14);
    }

    #[test]
    fn block_decomposition_with_mixed_vector() {
        let blocks = [0..2, 2..4];
        let h = Subspace::span(&DMatrix::from_column_slice(4, 1, &[-0.5, 0.5, -0.5, 0.5]));
        let d = block_decompose(&h, &blocks, &[0, 1], &[0]).unwrap();
        assert!(d.h_qp.is_trivial() && d.h_rest.is_trivial());
        assert_eq!(d.v.dim(), 1);
        assert!((d.epsilon.unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((d.proof_epsilon.unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn equal_sets_leave_nothing_for_v() {
        let blocks = [0..2, 2..4];
        let h = Subspace::span(&DMatrix::from_column_slice(4, 2, &[-1., 1., -1., 1., 1., -1., 0., 0.]));
        let d = block_decompose(&h, &blocks, &[0, 1], &[0, 1]).unwrap();
        assert!(d.v.is_trivial() && d.h_rest.is_trivial());
        assert_eq!(d.h_qp.dim(), d.h_q.dim());
    }

    #[test]
    fn rejects_malformed_sets() {
        let blocks = [0..2, 2..4];
        let h = Subspace::full(4);
        assert!(block_decompose(&h, &blocks, &[0], &[1]).is_err());
        assert!(block_decompose(&h, &blocks, &[0, 2], &[0]).is_err());
        assert!(block_decompose(&h, &blocks, &[0, 0], &[0]).is_err());
    }
}
