//! Reaction networks, mass-action systems and stoichiometric classes.
//!
//! Complexes are stored as the columns of the `n x m` matrix `Y`. On
//! construction they are permuted so that every linkage class occupies a
//! contiguous block of indices: classes are ordered by their smallest
//! original complex index and complexes inside a class keep their original
//! relative order. All block formulas elsewhere in the crate rely on this.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::subspace::{self, Subspace};

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    y: DMatrix<f64>,
    reactions: Vec<(usize, usize)>,
    linkage: Vec<Range<usize>>,
}

impl ReactionNetwork {
    /// Validates and canonically reorders a network.
    ///
    /// `reactions` holds `(reactant, product)` complex indices into the
    /// columns of `y`.
    pub fn new(species: Vec<String>, y: DMatrix<f64>, reactions: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_permutation(species, y, reactions).map(|(net, _)| net)
    }

    /// Like [`ReactionNetwork::new`], also returning the permutation used:
    /// entry `k` is the original index of the complex now at position `k`.
    pub fn with_permutation(
        species: Vec<String>,
        y: DMatrix<f64>,
        reactions: Vec<(usize, usize)>,
    ) -> Result<(Self, Vec<usize>)> {
        let n = species.len();
        let m = y.ncols();
        if y.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.nrows() });
        }
        for (i, name) in species.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidNetwork("empty species name".into()));
            }
            if species[..i].contains(name) {
                return Err(Error::InvalidNetwork(format!("species {name} listed twice")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite complex coefficient".into()));
        }
        for a in 0..m {
            for b in 0..a {
                if y.column(a) == y.column(b) {
                    return Err(Error::InvalidNetwork(format!("complexes {b} and {a} coincide")));
                }
            }
        }
        let mut used = vec![false; m];
        for (k, &(i, j)) in reactions.iter().enumerate() {
            if i >= m || j >= m {
                return Err(Error::InvalidNetwork(format!("reaction {k} refers to a missing complex")));
            }
            if i == j {
                return Err(Error::InvalidNetwork(format!("reaction {k} has equal reactant and product")));
            }
            if reactions[..k].contains(&(i, j)) {
                return Err(Error::DuplicateArc { from: i, to: j });
            }
            used[i] = true;
            used[j] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(Error::InvalidNetwork(format!("complex {c} takes part in no reaction")));
        }

        let mut components = UnionFind::<usize>::new(m);
        for &(i, j) in &reactions {
            components.union(i, j);
        }
        let labels = components.into_labeling();
        // first-seen order of component labels == order by smallest member
        let mut class_order: Vec<usize> = Vec::new();
        for &label in &labels {
            if !class_order.contains(&label) {
                class_order.push(label);
            }
        }
        let mut perm = Vec::with_capacity(m);
        let mut linkage = Vec::with_capacity(class_order.len());
        for label in class_order {
            let start = perm.len();
            perm.extend((0..m).filter(|&c| labels[c] == label));
            linkage.push(start..perm.len());
        }
        let mut position = vec![0; m];
        for (new, &old) in perm.iter().enumerate() {
            position[old] = new;
        }
        let y = DMatrix::from_fn(n, m, |r, c| y[(r, perm[c])]);
        let reactions = reactions.into_iter().map(|(i, j)| (position[i], position[j])).collect();
        Ok((ReactionNetwork { species, y, reactions, linkage }, perm))
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    /// Complex matrix, one column per complex.
    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn reactions(&self) -> &[(usize, usize)] {
        &self.reactions
    }

    /// Index ranges of the linkage classes, in canonical order.
    pub fn linkage(&self) -> &[Range<usize>] {
        &self.linkage
    }

    pub fn n(&self) -> usize {
        self.species.len()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }

    pub fn ell(&self) -> usize {
        self.linkage.len()
    }

    pub fn class_of(&self, complex: usize) -> usize {
        self.linkage.iter().position(|r| r.contains(&complex)).expect("complex index out of range")
    }

    /// `m x |R|` incidence matrix: -1 at the reactant, +1 at the product.
    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut inc = DMatrix::zeros(self.m(), self.reactions.len());
        for (k, &(i, j)) in self.reactions.iter().enumerate() {
            inc[(i, k)] = -1.0;
            inc[(j, k)] = 1.0;
        }
        inc
    }

    /// True iff every linkage class is strongly connected.
    pub fn is_weakly_reversible(&self) -> bool {
        let mut graph = DiGraph::<(), ()>::with_capacity(self.m(), self.reactions.len());
        let nodes: Vec<_> = (0..self.m()).map(|_| graph.add_node(())).collect();
        for &(i, j) in &self.reactions {
            graph.add_edge(nodes[i], nodes[j], ());
        }
        tarjan_scc(&graph).len() == self.ell()
    }

    /// Stoichiometric matrix `Y I`.
    pub fn stoichiometric_matrix(&self) -> DMatrix<f64> {
        &self.y * self.incidence_matrix()
    }

    pub fn stoichiometric_subspace(&self) -> Subspace {
        Subspace::span(&self.stoichiometric_matrix())
    }

    pub fn stoichiometric_rank(&self) -> usize {
        subspace::rank(&self.stoichiometric_matrix())
    }

    /// `m - ell - rank(Y I)`.
    pub fn deficiency(&self) -> usize {
        self.m() - self.ell() - self.stoichiometric_rank()
    }

    /// Number of reactions inside linkage class `class`.
    pub fn reactions_in_class(&self, class: usize) -> usize {
        let range = &self.linkage[class];
        self.reactions.iter().filter(|(i, _)| range.contains(i)).count()
    }
}

/// Laplacian `A_kappa`: `(A)_{ji} = kappa_{ij}` off the diagonal and
/// `(A)_{ii} = -sum_j kappa_{ij}`, so every column sums to zero.
pub fn laplacian(net: &ReactionNetwork, rates: &[f64]) -> Result<DMatrix<f64>> {
    if rates.len() != net.reactions().len() {
        return Err(Error::DimensionMismatch { expected: net.reactions().len(), found: rates.len() });
    }
    let mut a = DMatrix::zeros(net.m(), net.m());
    for (&(i, j), &k) in net.reactions().iter().zip(rates) {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::NonPositiveRate(k));
        }
        a[(j, i)] += k;
        a[(i, i)] -= k;
    }
    Ok(a)
}

/// A reaction network together with positive rate constants, one per arc.
#[derive(Clone, Debug, PartialEq)]
pub struct MassActionSystem {
    net: ReactionNetwork,
    rates: Vec<f64>,
    laplacian: DMatrix<f64>,
}

impl MassActionSystem {
    pub fn new(net: ReactionNetwork, rates: Vec<f64>) -> Result<Self> {
        let laplacian = laplacian(&net, &rates)?;
        Ok(MassActionSystem { net, rates, laplacian })
    }

    pub fn network(&self) -> &ReactionNetwork {
        &self.net
    }

    /// Rate constants aligned with `network().reactions()`.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Diagonal block of the Laplacian for linkage class `class`.
    pub fn laplacian_block(&self, class: usize) -> DMatrix<f64> {
        let r = self.net.linkage()[class].clone();
        self.laplacian.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    /// Rates of the reactions in linkage class `class`.
    pub fn class_rates(&self, class: usize) -> Vec<f64> {
        let range = &self.net.linkage()[class];
        self.net.reactions().iter().zip(&self.rates).filter(|((i, _), _)| range.contains(i)).map(|(_, &k)| k).collect()
    }

    /// Single-linkage subsystem made of the complexes of class `class`.
    pub fn block(&self, class: usize) -> MassActionSystem {
        let range = self.net.linkage()[class].clone();
        let y = self.net.y().columns(range.start, range.len()).into_owned();
        let (reactions, rates): (Vec<_>, Vec<_>) = self
            .net
            .reactions()
            .iter()
            .zip(&self.rates)
            .filter(|((i, _), _)| range.contains(i))
            .map(|(&(i, j), &k)| ((i - range.start, j - range.start), k))
            .unzip();
        let net = ReactionNetwork::new(self.net.species().to_vec(), y, reactions)
            .expect("a linkage class of a valid network is a valid network");
        MassActionSystem::new(net, rates).expect("rates were already validated")
    }

    /// Monomial vector `x^Y`, `(x^Y)_j = prod_i x_i^{Y_ij}`.
    pub fn monomials(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_positive(x, self.net.n())?;
        let logx = x.map(f64::ln);
        Ok((self.net.y().transpose() * logx).map(f64::exp))
    }

    /// Right-hand side `Y A_kappa x^Y` of the mass-action ODE.
    pub fn rhs(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mono = self.monomials(x)?;
        Ok(self.net.y() * (&self.laplacian * mono))
    }

    pub fn stoich_class(&self, point: DVector<f64>) -> Result<StoichClass> {
        check_positive(&point, self.net.n())?;
        Ok(StoichClass { point, subspace: self.net.stoichiometric_subspace() })
    }
}

pub(crate) fn check_positive(x: &DVector<f64>, n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    match x.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::NonPositiveState { index, value: x[index] }),
        None => Ok(()),
    }
}

/// Positive stoichiometric class `(p + S) ∩ R^n_+`.
#[derive(Clone, Debug)]
pub struct StoichClass {
    point: DVector<f64>,
    subspace: Subspace,
}

impl StoichClass {
    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// `|Π_{S^⊥}(x - p)|`.
    pub fn membership_error(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.point;
        (&d - self.subspace.project(&d)).norm()
    }

    /// Nearest point of the affine space `p + S`.
    pub fn project_affine(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.point + self.subspace.project(&(x - &self.point))
    }
}
