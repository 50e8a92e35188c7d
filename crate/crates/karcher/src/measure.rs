//! Finitely supported probability measures on the positive definite cone.
//!
//! A [`DiscreteMeasure`] is a list of SPD atoms with positive weights that
//! sum to one (renormalized at construction, zero-weight atoms dropped).
//! The L¹-Wasserstein distance between two such measures, with the Thompson
//! metric as ground cost, is computed exactly by a network simplex on the
//! bipartite transport graph; the contraction inequalities this crate tests
//! are tight, so an approximate transport cost would produce false failures.

use crate::error::{Error, Result};
use crate::spd::{thompson_distance, SpdMatrix};
use crate::transport;

/// Thompson-distance threshold under which two atoms are merged when mixing.
/// Keeps mixtures from growing unboundedly in iterated resolvent
/// constructions.
const MERGE_EPS: f64 = 1e-14;

/// A finitely supported probability measure on the SPD cone.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Vec<SpdMatrix>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from atoms and weights. Weights must be nonnegative
    /// and finite; zero-weight atoms are dropped and the rest renormalized
    /// to total mass one.
    pub fn new(atoms: Vec<SpdMatrix>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch(atoms.len(), weights.len()));
        }
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let dim = atoms[0].dim();
        for a in &atoms {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch(dim, a.dim()));
            }
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight(w));
            }
        }
        let mut kept: Vec<(SpdMatrix, f64)> = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut kept {
            *w /= total;
        }
        let (atoms, weights) = kept.into_iter().unzip();
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Uniform measure on the given atoms.
    pub fn uniform(atoms: Vec<SpdMatrix>) -> Result<Self> {
        let k = atoms.len();
        Self::new(atoms, vec![1.0; k])
    }

    /// Point mass at `a`.
    pub fn dirac(a: SpdMatrix) -> Self {
        DiscreteMeasure { atoms: vec![a], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn atoms(&self) -> &[SpdMatrix] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SpdMatrix, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// True when all weights are equal (within accumulated rounding).
    pub fn is_uniform(&self) -> bool {
        let w0 = 1.0 / self.len() as f64;
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-12)
    }
}

/// A transport plan between two discrete measures: a nonnegative `k`×`m`
/// matrix whose row sums are the first measure's weights and whose column
/// sums are the second's.
#[derive(Debug, Clone)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
}

impl Coupling {
    pub(crate) fn new(rows: usize, cols: usize, plan: Vec<f64>) -> Self {
        debug_assert_eq!(plan.len(), rows * cols);
        Coupling { rows, cols, plan }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn plan(&self) -> &[f64] {
        &self.plan
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.plan[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.plan[i * self.cols + j]).sum())
            .collect()
    }
}

/// Convex mixture `(1-s) mu + s nu`. Atoms within Thompson distance 1e-14
/// of an earlier atom are merged with summed weights.
pub fn mix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, s: f64) -> Result<DiscreteMeasure> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter("mixture parameter must lie in [0, 1]"));
    }
    let mut atoms: Vec<SpdMatrix> = Vec::with_capacity(mu.len() + nu.len());
    let mut weights: Vec<f64> = Vec::with_capacity(mu.len() + nu.len());
    let mut push = |a: &SpdMatrix, w: f64| -> Result<()> {
        if w == 0.0 {
            return Ok(());
        }
        for (existing, weight) in atoms.iter().zip(weights.iter_mut()) {
            if nearly_same_atom(existing, a)? {
                *weight += w;
                return Ok(());
            }
        }
        atoms.push(a.clone());
        weights.push(w);
        Ok(())
    };
    for (a, w) in mu.iter() {
        push(a, (1.0 - s) * w)?;
    }
    for (a, w) in nu.iter() {
        push(a, s * w)?;
    }
    DiscreteMeasure::new(atoms, weights)
}

/// Cheap entrywise screen before paying for a Thompson distance.
fn nearly_same_atom(a: &SpdMatrix, b: &SpdMatrix) -> Result<bool> {
    let gap = a.as_sym().sub(b.as_sym()).max_abs();
    let scale = a.as_sym().max_abs().max(b.as_sym().max_abs()).max(1e-300);
    if gap > 1e-12 * scale {
        return Ok(false);
    }
    if gap == 0.0 {
        return Ok(true);
    }
    Ok(thompson_distance(a, b)? <= MERGE_EPS)
}

/// First moment `Σ wᵢ d(X, Aᵢ)` of the measure around `x`.
pub fn first_moment(mu: &DiscreteMeasure, x: &SpdMatrix) -> Result<f64> {
    let mut s = 0.0;
    for (a, w) in mu.iter() {
        s += w * thompson_distance(x, a)?;
    }
    Ok(s)
}

/// Image measure under `f`, weights untouched.
pub fn pushforward(
    mu: &DiscreteMeasure,
    mut f: impl FnMut(&SpdMatrix) -> Result<SpdMatrix>,
) -> Result<DiscreteMeasure> {
    let atoms = mu.atoms.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
    Ok(DiscreteMeasure { atoms, weights: mu.weights.clone() })
}

/// Exact L¹-Wasserstein distance between two discrete measures under the
/// Thompson ground cost, together with an optimal coupling.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, Coupling)> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    let k = mu.len();
    let m = nu.len();
    let mut cost = vec![0.0; k * m];
    for i in 0..k {
        for j in 0..m {
            cost[i * m + j] = thompson_distance(&mu.atoms[i], &nu.atoms[j])?;
        }
    }
    let plan = transport::solve(mu.weights(), nu.weights(), &cost);
    let total: f64 = plan.iter().zip(&cost).map(|(p, c)| p * c).sum();
    Ok((total, Coupling::new(k, m, plan)))
}

/// Exhaustive assignment oracle for uniform measures with equal support
/// size (at most 8 atoms): the minimum over permutations of the average
/// matching cost. Used to certify the simplex solver.
pub fn w1_uniform_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    let n = mu.len();
    if nu.len() != n || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::OracleNotUniform);
    }
    if n > 8 {
        return Err(Error::OracleTooLarge(n));
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = thompson_distance(&mu.atoms[i], &nu.atoms[j])?;
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
        if total < best {
            best = total;
        }
    });
    Ok(best / n as f64)
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
