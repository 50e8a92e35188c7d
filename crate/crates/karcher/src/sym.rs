//! Dense real symmetric matrices and their eigendecomposition.
//!
//! [`SymMatrix`] is the ambient vector space for everything in this crate:
//! tangent vectors, logarithms and residual fields all live here. Storage is
//! row-major and exactly symmetric (entries are symmetrized once, at
//! construction). The eigensolver is a cyclic Jacobi sweep, chosen for its
//! unconditional accuracy on symmetric matrices at the dimensions this crate
//! targets (n ≤ 64): orthogonality and reconstruction errors stay at a small
//! multiple of machine epsilon without any balancing or shifting machinery.

use crate::error::{Error, Result};

/// Iteration cap for the Jacobi sweep; reaching it signals pathological input.
const MAX_SWEEPS: usize = 100;

/// A real symmetric matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds an `n`×`n` symmetric matrix from row-major entries,
    /// symmetrizing `(a + aᵀ)/2` and rejecting non-finite input.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidParameter("entry count must equal n*n, n >= 1"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut m = SymMatrix { n, data };
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        Ok(m)
    }

    /// Zero matrix.
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = d[i];
        }
        m
    }

    /// Fills entry (i, j) from `f(i, j)`; only `i <= j` is consulted.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n, "symmetric matrix dimensions must agree");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        SymMatrix { n: self.n, data }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n, "symmetric matrix dimensions must agree");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        SymMatrix { n: self.n, data }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|a| a * c).collect() }
    }

    /// Accumulates `self += c * other` without reallocating.
    pub fn axpy(&mut self, c: f64, other: &SymMatrix) {
        assert_eq!(self.n, other.n, "symmetric matrix dimensions must agree");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Spectral norm, i.e. the largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        let e = self.eigen().expect("Jacobi converges on finite symmetric input");
        e.d.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Symmetrized product `(ab + (ab)ᵀ)/2` of two symmetric matrices.
    pub fn sym_product(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n, "symmetric matrix dimensions must agree");
        let p = mat_mul(&self.data, &other.data, self.n);
        let mut m = SymMatrix { n: self.n, data: p };
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = 0.5 * (m.data[i * self.n + j] + m.data[j * self.n + i]);
                m.data[i * self.n + j] = v;
                m.data[j * self.n + i] = v;
            }
        }
        m
    }

    /// Eigendecomposition by cyclic Jacobi rotations with a threshold sweep.
    ///
    /// Eigenvalues come back ascending, eigenvectors as the columns of an
    /// orthogonal matrix, sign-normalized so the result is deterministic.
    pub fn eigen(&self) -> Result<EigenDecomposition> {
        jacobi_eigen(self)
    }
}

/// Orthogonal eigendecomposition `S = Q diag(d) Qᵀ`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    n: usize,
    /// Row-major orthogonal matrix; column k is the eigenvector for `d[k]`.
    q: Vec<f64>,
    /// Eigenvalues, ascending.
    d: Vec<f64>,
}

impl EigenDecomposition {
    /// Assembles a decomposition from a known orthogonal basis and ascending
    /// spectrum; used when a matrix function already yields spectral form.
    pub(crate) fn from_parts(n: usize, q: Vec<f64>, d: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), n * n);
        debug_assert_eq!(d.len(), n);
        debug_assert!(d.windows(2).all(|w| w[0] <= w[1]));
        EigenDecomposition { n, q, d }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.d
    }

    pub fn vectors(&self) -> &[f64] {
        &self.q
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.d[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.d[self.n - 1]
    }

    /// Eigenvector for `d[k]` as an owned column.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.q[i * self.n + k]).collect()
    }

    /// Applies a scalar function through the spectral decomposition,
    /// returning `Q diag(f(d)) Qᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.n;
        let fd: Vec<f64> = self.d.iter().map(|&x| f(x)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.q[i * n + k] * fd[k] * self.q[j * n + k];
                }
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        SymMatrix { n, data: out }
    }

    /// `Q diag(d) Qᵀ`, for accuracy checks.
    pub fn reconstruct(&self) -> SymMatrix {
        self.apply(|x| x)
    }

    /// Congruence `Qᵀ M Q`, i.e. `M` expressed in the eigenbasis.
    pub fn to_basis(&self, m: &SymMatrix) -> SymMatrix {
        let n = self.n;
        assert_eq!(n, m.n, "dimension mismatch");
        let tmp = mat_mul_t_left(&self.q, &m.data, n);
        SymMatrix { n, data: mat_mul(&tmp, &self.q, n) }
    }

    /// Congruence `Q M Qᵀ`, mapping eigenbasis coordinates back.
    pub fn from_basis(&self, m: &SymMatrix) -> SymMatrix {
        let n = self.n;
        assert_eq!(n, m.n, "dimension mismatch");
        let tmp = mat_mul(&self.q, &m.data, n);
        SymMatrix { n, data: mat_mul_t_right(&tmp, &self.q, n) }
    }
}

/// Plain row-major product `a * b`.
pub(crate) fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aik * row[j];
            }
        }
    }
    out
}

/// `aᵀ * b`.
pub(crate) fn mat_mul_t_left(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            let aki = a[k * n + i];
            if aki == 0.0 {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aki * row[j];
            }
        }
    }
    out
}

/// `a * bᵀ`.
pub(crate) fn mat_mul_t_right(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            let arow = &a[i * n..(i + 1) * n];
            let brow = &b[j * n..(j + 1) * n];
            for k in 0..n {
                s += arow[k] * brow[k];
            }
            out[i * n + j] = s;
        }
    }
    out
}

fn jacobi_eigen(s: &SymMatrix) -> Result<EigenDecomposition> {
    let n = s.n;
    let mut a = s.data.clone();
    let mut q = SymMatrix::identity(n).data;

    if n == 1 {
        return Ok(EigenDecomposition { n, q, d: vec![a[0]] });
    }

    let scale = s.frobenius_norm();
    // Absolute floor handles the zero matrix; otherwise stop when the
    // off-diagonal mass is negligible relative to the input.
    let stop = f64::EPSILON * scale;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= stop {
            converged = true;
            break;
        }

        for p in 0..n - 1 {
            for r in (p + 1)..n {
                let apq = a[p * n + r];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[r * n + r];
                // Rotation annihilating a[p][r]; the guarded branch avoids
                // overflow in theta^2 for extreme diagonal gaps.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                a[p * n + p] = app - t * apq;
                a[r * n + r] = aqq + t * apq;
                a[p * n + r] = 0.0;
                a[r * n + p] = 0.0;
                for i in 0..n {
                    if i != p && i != r {
                        let aip = a[i * n + p];
                        let air = a[i * n + r];
                        let new_p = c * aip - sn * air;
                        let new_r = sn * aip + c * air;
                        a[i * n + p] = new_p;
                        a[p * n + i] = new_p;
                        a[i * n + r] = new_r;
                        a[r * n + i] = new_r;
                    }
                }
                for i in 0..n {
                    let qip = q[i * n + p];
                    let qir = q[i * n + r];
                    q[i * n + p] = c * qip - sn * qir;
                    q[i * n + r] = sn * qip + c * qir;
                }
            }
        }
    }
    if !converged {
        // One final check: the last sweep may have finished the job.
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() > stop {
            return Err(Error::EigenNonConvergence(MAX_SWEEPS));
        }
    }

    // Ascending eigenvalue order with a stable index tie-break keeps the
    // output deterministic for repeated inputs.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i].partial_cmp(&a[j * n + j]).unwrap().then(i.cmp(&j))
    });
    let d: Vec<f64> = order.iter().map(|&k| a[k * n + k]).collect();
    let mut qs = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        // Canonical sign: largest-magnitude component positive.
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for i in 0..n {
            let v = q[i * n + old_k].abs();
            if v > best_abs {
                best_abs = v;
                best = i;
            }
        }
        let flip = if q[best * n + old_k] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            qs[i * n + new_k] = flip * q[i * n + old_k];
        }
    }

    Ok(EigenDecomposition { n, q: qs, d })
}
