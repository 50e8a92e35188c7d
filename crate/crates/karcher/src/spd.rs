//! The cone of symmetric positive definite matrices and its Finsler geometry.
//!
//! Points of the cone carry the Thompson metric
//! `d(A, B) = ||log(A^{-1/2} B A^{-1/2})||` (spectral norm), whose geodesics
//! are the weighted geometric means `A #_t B = A^{1/2} (A^{-1/2} B
//! A^{-1/2})^t A^{1/2}`. The logarithm and exponential maps at a base point
//! `X`,
//!
//! ```text
//! log_X(A) = X^{1/2} log(X^{-1/2} A X^{-1/2}) X^{1/2}
//! exp_X(V) = X^{1/2} exp(X^{-1/2} V X^{-1/2}) X^{1/2}
//! ```
//!
//! identify the tangent space at `X` with the symmetric matrices. All
//! conjugations `X^{-1/2} · X^{-1/2}` are formed through the cached
//! eigendecomposition of the base point, never by inverting an intermediate
//! product, and results are explicitly symmetrized.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::sym::{EigenDecomposition, SymMatrix};

/// Relative gap below which the divided-difference kernel of the logarithm
/// switches to its analytic limit; avoids cancellation near coalescing
/// eigenvalues.
const DLOG_SWITCH: f64 = 1e-8;

/// A symmetric positive definite matrix.
///
/// Construction verifies positive definiteness (via a Cholesky
/// factorization, which succeeds exactly when the smallest eigenvalue is
/// positive) and caches the eigendecomposition lazily on first geometric
/// use. Values are immutable; every operation is a pure function.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    mat: SymMatrix,
    eigen: OnceLock<EigenDecomposition>,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl SpdMatrix {
    /// Wraps a symmetric matrix, failing unless it is positive definite.
    pub fn new(mat: SymMatrix) -> Result<Self> {
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        if !cholesky_is_pd(&mat) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(SpdMatrix { mat, eigen: OnceLock::new() })
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        SpdMatrix { mat: SymMatrix::identity(n), eigen: OnceLock::new() }
    }

    /// Diagonal matrix with positive entries.
    pub fn diagonal(d: &[f64]) -> Result<Self> {
        if d.iter().any(|&x| !x.is_finite() || x <= 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(SpdMatrix { mat: SymMatrix::diagonal(d), eigen: OnceLock::new() })
    }

    /// Internal constructor for results synthesized as `Q f(d) Qᵀ` with
    /// `f(d) > 0`: the spectrum is already known, so the positivity check
    /// and a later eigensolve are both unnecessary.
    fn from_spectrum(e: EigenDecomposition) -> Self {
        let mat = e.apply(|x| x);
        let cell = OnceLock::new();
        let _ = cell.set(e);
        SpdMatrix { mat, eigen: cell }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat.entry(i, j)
    }

    /// The underlying symmetric matrix.
    pub fn as_sym(&self) -> &SymMatrix {
        &self.mat
    }

    /// Cached eigendecomposition.
    pub fn eigen(&self) -> &EigenDecomposition {
        self.eigen.get_or_init(|| {
            self.mat
                .eigen()
                .expect("cyclic Jacobi converges on finite symmetric input")
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min_eigenvalue()
    }

    /// Spectral norm; equals the largest eigenvalue on the cone.
    pub fn operator_norm(&self) -> f64 {
        self.eigen().max_eigenvalue()
    }

    /// Matrix logarithm `Q diag(log d) Qᵀ`.
    pub fn log(&self) -> SymMatrix {
        self.eigen().apply(f64::ln)
    }

    /// Fractional (or any real) power through the spectral decomposition.
    pub fn powf(&self, t: f64) -> Result<SpdMatrix> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter("exponent must be finite"));
        }
        let e = self.eigen();
        let d: Vec<f64> = e.eigenvalues().iter().map(|&x| x.powf(t)).collect();
        if d.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::NonFinite);
        }
        let q = e.vectors().to_vec();
        Ok(SpdMatrix::from_spectrum(rebuild_eigen(q, d, self.dim())))
    }

    pub fn inverse(&self) -> SpdMatrix {
        self.powf(-1.0).expect("inverse of a positive definite matrix exists")
    }

    /// Expresses `m` in this matrix's normalized eigenbasis:
    /// `D^{-1/2} Qᵀ m Q D^{-1/2} = X^{-1/2} m X^{-1/2}` up to the fixed
    /// orthogonal change of frame `Q`, which leaves spectra and norms alone.
    pub(crate) fn whiten(&self, m: &SymMatrix) -> SymMatrix {
        let e = self.eigen();
        let w = e.to_basis(m);
        let d = e.eigenvalues();
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = w.entry(i, j) / (d[i].sqrt() * d[j].sqrt());
            }
        }
        SymMatrix::new(n, data).expect("scaling preserves symmetry and finiteness")
    }

    /// Inverse of [`whiten`]: maps eigenbasis coordinates back through
    /// `Q D^{1/2} m D^{1/2} Qᵀ = X^{1/2} m X^{1/2}` (same frame convention).
    pub(crate) fn unwhiten(&self, m: &SymMatrix) -> SymMatrix {
        let e = self.eigen();
        let d = e.eigenvalues();
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = m.entry(i, j) * d[i].sqrt() * d[j].sqrt();
            }
        }
        let scaled = SymMatrix::new(n, data).expect("scaling preserves symmetry");
        e.from_basis(&scaled)
    }
}

fn rebuild_eigen(q: Vec<f64>, mut d: Vec<f64>, n: usize) -> EigenDecomposition {
    // powf can reverse the ordering (negative exponents); re-sort.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
    let sorted_d: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut sorted_q = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            sorted_q[i * n + new_k] = q[i * n + old_k];
        }
    }
    d = sorted_d;
    EigenDecomposition::from_parts(n, sorted_q, d)
}

/// Cholesky positivity test: succeeds iff the matrix is positive definite.
fn cholesky_is_pd(m: &SymMatrix) -> bool {
    let n = m.dim();
    let mut l = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.entry(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// Matrix exponential of a symmetric matrix; fails if entries overflow.
pub fn mat_exp(s: &SymMatrix) -> Result<SpdMatrix> {
    let e = s.eigen()?;
    let d: Vec<f64> = e.eigenvalues().iter().map(|&x| x.exp()).collect();
    if d.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::NonFinite);
    }
    let n = s.dim();
    Ok(SpdMatrix::from_spectrum(rebuild_eigen(e.vectors().to_vec(), d, n)))
}

/// Matrix logarithm of a positive definite matrix.
pub fn mat_log(p: &SpdMatrix) -> SymMatrix {
    p.log()
}

/// Real matrix power of a positive definite matrix.
pub fn mat_pow(p: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    p.powf(t)
}

fn check_dims(a: &SpdMatrix, b: usize) -> Result<()> {
    if a.dim() != b {
        return Err(Error::DimensionMismatch(a.dim(), b));
    }
    Ok(())
}

/// Thompson distance `max(|log λ_min|, |log λ_max|)` of the spectrum of
/// `A^{-1/2} B A^{-1/2}`.
pub fn thompson_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a, b.dim())?;
    if a.as_sym() == b.as_sym() {
        return Ok(0.0);
    }
    let w = a.whiten(b.as_sym());
    let e = w.eigen().expect("whitened matrix is finite symmetric");
    let lo = e.min_eigenvalue();
    let hi = e.max_eigenvalue();
    debug_assert!(lo > 0.0, "congruence of a positive definite matrix stays positive");
    Ok(lo.ln().abs().max(hi.ln().abs()))
}

/// Loewner order test: `A <= B` up to `tol`, i.e. the smallest eigenvalue of
/// `B - A` is at least `-tol`.
pub fn loewner_leq(a: &SpdMatrix, b: &SpdMatrix, tol: f64) -> Result<bool> {
    check_dims(a, b.dim())?;
    let diff = b.as_sym().sub(a.as_sym());
    let e = diff.eigen()?;
    Ok(e.min_eigenvalue() >= -tol)
}

/// Weighted geometric mean `A #_t B`, the point at parameter `t` on the
/// Thompson geodesic from `A` to `B`.
pub fn geodesic(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_dims(a, b.dim())?;
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let w = a.whiten(b.as_sym());
    let we = w.eigen()?;
    let powered = we.apply(|x| x.powf(t));
    SpdMatrix::new(a.unwhiten(&powered))
}

/// Logarithm map `log_X(A) = X^{1/2} log(X^{-1/2} A X^{-1/2}) X^{1/2}`,
/// the relative operator entropy of `A` at base point `X`.
pub fn log_point(x: &SpdMatrix, a: &SpdMatrix) -> Result<SymMatrix> {
    check_dims(x, a.dim())?;
    // log_X(X) is exactly zero; short-circuiting keeps residual fields of
    // point masses at their own atom exact.
    if x.as_sym() == a.as_sym() {
        return Ok(SymMatrix::zeros(x.dim()));
    }
    let w = x.whiten(a.as_sym());
    let we = w.eigen()?;
    Ok(x.unwhiten(&we.apply(f64::ln)))
}

/// Exponential map `exp_X(V) = X^{1/2} exp(X^{-1/2} V X^{-1/2}) X^{1/2}`.
pub fn exp_point(x: &SpdMatrix, v: &SymMatrix) -> Result<SpdMatrix> {
    check_dims(x, v.dim())?;
    let w = x.whiten(v);
    let we = w.eigen()?;
    let exped = we.apply(f64::exp);
    if !exped.is_finite() {
        return Err(Error::NonFinite);
    }
    SpdMatrix::new(x.unwhiten(&exped))
}

/// Divided-difference kernel of the logarithm: `(log a - log b)/(a - b)`
/// with the analytic limit `1/a` on (near-)coincident eigenvalues.
#[inline]
pub(crate) fn log_kernel(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= DLOG_SWITCH * a.max(b) {
        2.0 / (a + b)
    } else {
        (a.ln() - b.ln()) / (a - b)
    }
}

/// Fréchet derivative of the matrix logarithm at `P` in direction `V`,
/// computed in the eigenbasis of `P` through divided differences of `log`.
pub fn dlog(p: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
    check_dims(p, v.dim())?;
    let e = p.eigen();
    let d = e.eigenvalues();
    let n = p.dim();
    let w = e.to_basis(v);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = w.entry(i, j) * log_kernel(d[i], d[j]);
        }
    }
    let scaled = SymMatrix::new(n, data)?;
    Ok(e.from_basis(&scaled))
}

/// Which side of the norming inequality a state realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormingSide {
    /// `ω(B #_t A) = e^{t d(A,B)} ω(B)`.
    Upper,
    /// `ω(B #_t A) = e^{-t d(A,B)} ω(B)`.
    Lower,
}

/// A positive unit functional attaining the Thompson distance along the
/// geodesic from `B` to `A`.
///
/// In finite dimension the extremal state is realized by an eigenvector `v`
/// of `B^{-1/2} A B^{-1/2}` for the extremal eigenvalue; the state acts on a
/// symmetric matrix `M` as `vᵀ (B^{-1/2} M B^{-1/2}) v`, normalized so that
/// `ω(B) = 1`.
#[derive(Debug, Clone)]
pub struct NormingState {
    v: Vec<f64>,
    side: NormingSide,
}

impl NormingState {
    pub fn side(&self) -> NormingSide {
        self.side
    }

    pub fn vector(&self) -> &[f64] {
        &self.v
    }

    /// Applies the state to `m` in the geometry anchored at `b`.
    pub fn evaluate(&self, b: &SpdMatrix, m: &SymMatrix) -> Result<f64> {
        check_dims(b, m.dim())?;
        if self.v.len() != b.dim() {
            return Err(Error::DimensionMismatch(self.v.len(), b.dim()));
        }
        let w = b.whiten(m);
        let n = b.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.v[i] * w.entry(i, j) * self.v[j];
            }
        }
        Ok(s)
    }
}

/// Constructs a norming state for the pair `(A, B)`: a unit functional `ω`
/// with `ω(B) = 1` and `ω(B #_t A) = e^{±t d(A,B)}` for all `t ∈ [0, 1]`,
/// the sign recorded in `side`.
///
/// Eigenvalue ties break toward the lowest index, and when both extremes
/// attain the distance the upper side wins, so the result is deterministic.
/// For `A = B` the distance vanishes and any unit state works; the first
/// basis vector is returned with the upper side.
pub fn norming_state(a: &SpdMatrix, b: &SpdMatrix) -> Result<NormingState> {
    check_dims(a, b.dim())?;
    let n = a.dim();
    let w = b.whiten(a.as_sym());
    let e = w.eigen()?;
    let lo = e.min_eigenvalue();
    let hi = e.max_eigenvalue();
    if lo.ln().abs().max(hi.ln().abs()) == 0.0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return Ok(NormingState { v, side: NormingSide::Upper });
    }
    // Whitening reports coordinates in the eigenbasis frame of b, and
    // `evaluate` whitens the same way, so the frames cancel.
    let (side, idx) = if hi.ln() >= -lo.ln() {
        let first_max = e
            .eigenvalues()
            .iter()
            .position(|&x| x == hi)
            .expect("max eigenvalue present");
        (NormingSide::Upper, first_max)
    } else {
        let first_min = e
            .eigenvalues()
            .iter()
            .position(|&x| x == lo)
            .expect("min eigenvalue present");
        (NormingSide::Lower, first_min)
    };
    Ok(NormingState { v: e.eigenvector(idx), side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::sym::SymMatrix;
    use std::f64::consts::E;

    pub(crate) fn random_spd(rng: &mut Rng, n: usize, spread: f64) -> SpdMatrix {
        let g = SymMatrix::from_fn(n, |i, j| {
            let v = rng.normal() * spread;
            if i == j {
                v
            } else {
                v / 2.0
            }
        });
        mat_exp(&g).unwrap()
    }

    fn random_dir(rng: &mut Rng, n: usize) -> SymMatrix {
        let v = SymMatrix::from_fn(n, |_, _| rng.normal());
        v.scale(1.0 / v.frobenius_norm().max(1e-12))
    }

    #[test]
    fn log_of_diagonal() {
        let p = SpdMatrix::diagonal(&[E, 1.0]).unwrap();
        let l = mat_log(&p);
        assert!(l.sub(&SymMatrix::diagonal(&[1.0, 0.0])).max_abs() < 1e-14);
    }

    #[test]
    fn pow_one_is_identity_map() {
        let mut rng = Rng::new(1, 0);
        let p = random_spd(&mut rng, 4, 1.0);
        let q = mat_pow(&p, 1.0).unwrap();
        assert!(q.as_sym().sub(p.as_sym()).max_abs() < 1e-12);
    }

    #[test]
    fn half_power_from_eigen_oracle() {
        let p = SpdMatrix::new(SymMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap()).unwrap();
        let r = mat_pow(&p, 0.5).unwrap();
        // Eigenvalues 1 and sqrt(3), same eigenvectors as p.
        let e = r.eigen();
        assert!((e.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!((e.eigenvalues()[1] - 3.0_f64.sqrt()).abs() < 1e-12);
        // r * r recovers p.
        let rr = r.as_sym().sym_product(r.as_sym());
        assert!(rr.sub(p.as_sym()).max_abs() < 1e-12);
    }

    #[test]
    fn exp_log_roundtrip() {
        let mut rng = Rng::new(2, 0);
        for _ in 0..20 {
            let p = random_spd(&mut rng, 3, 1.0);
            let back = mat_exp(&mat_log(&p)).unwrap();
            let rel = back.as_sym().sub(p.as_sym()).frobenius_norm() / p.as_sym().frobenius_norm();
            assert!(rel < 1e-10, "roundtrip relative error {rel}");
        }
    }

    #[test]
    fn exp_overflow_is_an_error() {
        let s = SymMatrix::diagonal(&[1e4, 0.0]);
        assert!(matches!(mat_exp(&s), Err(Error::NonFinite)));
    }

    #[test]
    fn construction_rejects_indefinite() {
        let s = SymMatrix::diagonal(&[1.0, -0.5]);
        assert!(matches!(SpdMatrix::new(s), Err(Error::NotPositiveDefinite)));
        let z = SymMatrix::diagonal(&[1.0, 0.0]);
        assert!(matches!(SpdMatrix::new(z), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn thompson_diagonal_values() {
        let i2 = SpdMatrix::identity(2);
        let p = SpdMatrix::diagonal(&[E, E.powi(-2)]).unwrap();
        assert!((thompson_distance(&i2, &p).unwrap() - 2.0).abs() < 1e-12);

        let a = SpdMatrix::diagonal(&[1.0, 4.0]).unwrap();
        assert!((thompson_distance(&a, &a).unwrap()).abs() == 0.0);

        let b = SpdMatrix::diagonal(&[2.0, 2.0]).unwrap();
        assert!((thompson_distance(&a, &b).unwrap() - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn thompson_dimension_mismatch() {
        let a = SpdMatrix::identity(2);
        let b = SpdMatrix::identity(3);
        assert!(matches!(thompson_distance(&a, &b), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn loewner_examples() {
        let i2 = SpdMatrix::identity(2);
        let two = SpdMatrix::diagonal(&[2.0, 2.0]).unwrap();
        assert!(loewner_leq(&i2, &two, 0.0).unwrap());
        assert!(!loewner_leq(&two, &i2, 0.0).unwrap());
        let p = SpdMatrix::new(SymMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap()).unwrap();
        let three = SpdMatrix::diagonal(&[3.0, 3.0]).unwrap();
        assert!(loewner_leq(&p, &three, 0.0).unwrap());
    }

    #[test]
    fn geodesic_endpoints_and_commuting_midpoint() {
        let mut rng = Rng::new(3, 0);
        let a = random_spd(&mut rng, 3, 1.0);
        let b = random_spd(&mut rng, 3, 1.0);
        assert!(geodesic(&a, &b, 0.0).unwrap().as_sym().sub(a.as_sym()).max_abs() <= 1e-12);
        assert!(geodesic(&a, &b, 1.0).unwrap().as_sym().sub(b.as_sym()).max_abs() <= 1e-12);
        assert!(geodesic(&a, &a, 0.37).unwrap().as_sym().sub(a.as_sym()).max_abs() <= 1e-12);

        let one = SpdMatrix::diagonal(&[1.0, 1.0]).unwrap();
        let four = SpdMatrix::diagonal(&[4.0, 4.0]).unwrap();
        let mid = geodesic(&one, &four, 0.5).unwrap();
        assert!(mid.as_sym().sub(SpdMatrix::diagonal(&[2.0, 2.0]).unwrap().as_sym()).max_abs() < 1e-12);
    }

    #[test]
    fn geodesic_reversal_symmetry() {
        let mut rng = Rng::new(4, 0);
        for _ in 0..10 {
            let a = random_spd(&mut rng, 3, 1.0);
            let b = random_spd(&mut rng, 3, 1.0);
            let t = rng.range(0.0, 1.0);
            let fwd = geodesic(&a, &b, t).unwrap();
            let rev = geodesic(&b, &a, 1.0 - t).unwrap();
            let d = thompson_distance(&fwd, &rev).unwrap();
            assert!(d < 1e-10, "reversal asymmetry {d}");
        }
    }

    #[test]
    fn log_point_examples() {
        let mut rng = Rng::new(5, 0);
        let a = random_spd(&mut rng, 3, 1.0);
        let i3 = SpdMatrix::identity(3);
        assert!(log_point(&i3, &a).unwrap().sub(&mat_log(&a)).max_abs() < 1e-12);
        assert_eq!(log_point(&a, &a).unwrap().max_abs(), 0.0);

        let x = SpdMatrix::identity(2);
        let p = SpdMatrix::diagonal(&[E.powi(2), E.powi(4)]).unwrap();
        assert!(log_point(&x, &p).unwrap().sub(&SymMatrix::diagonal(&[2.0, 4.0])).max_abs() < 1e-12);
    }

    #[test]
    fn exp_point_inverts_log_point() {
        let mut rng = Rng::new(6, 0);
        let i = SpdMatrix::identity(3);
        let s = random_dir(&mut rng, 3);
        let via_map = exp_point(&i, &s).unwrap();
        assert!(via_map.as_sym().sub(mat_exp(&s).unwrap().as_sym()).max_abs() < 1e-12);

        for _ in 0..20 {
            let x = random_spd(&mut rng, 4, 1.0);
            let a = random_spd(&mut rng, 4, 1.0);
            let still = exp_point(&x, &SymMatrix::zeros(4)).unwrap();
            assert!(still.as_sym().sub(x.as_sym()).max_abs() <= 1e-12 * x.operator_norm());
            let v = log_point(&x, &a).unwrap();
            let back = exp_point(&x, &v).unwrap();
            let d = thompson_distance(&back, &a).unwrap();
            assert!(d <= 1e-9, "roundtrip residual {d}");
        }
    }

    #[test]
    fn dlog_trivial_cases() {
        let mut rng = Rng::new(7, 0);
        let v = random_dir(&mut rng, 3);
        let i = SpdMatrix::identity(3);
        assert!(dlog(&i, &v).unwrap().sub(&v).max_abs() < 1e-12);

        let a = 2.5;
        let p = SpdMatrix::diagonal(&[a, a, a]).unwrap();
        assert!(dlog(&p, &v).unwrap().sub(&v.scale(1.0 / a)).max_abs() < 1e-12);
    }

    #[test]
    fn dlog_divided_difference_by_hand() {
        // Base diag(1, e); the off-diagonal kernel is
        // (log 1 - log e)/(1 - e) = 1/(e - 1).
        let p = SpdMatrix::diagonal(&[1.0, E]).unwrap();
        let v = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = dlog(&p, &v).unwrap();
        let expected = 1.0 / (E - 1.0);
        assert!((out.entry(0, 1) - expected).abs() < 1e-13);
        assert!(out.entry(0, 0).abs() < 1e-13 && out.entry(1, 1).abs() < 1e-13);
    }

    /// Central finite differences of the matrix logarithm; the independent
    /// oracle for the divided-difference path.
    fn dlog_fd(p: &SpdMatrix, v: &SymMatrix) -> SymMatrix {
        let h = 1e-5 * p.operator_norm() / v.operator_norm().max(1e-300);
        let plus = SpdMatrix::new(p.as_sym().add(&v.scale(h))).unwrap();
        let minus = SpdMatrix::new(p.as_sym().sub(&v.scale(h))).unwrap();
        mat_log(&plus).sub(&mat_log(&minus)).scale(0.5 / h)
    }

    #[test]
    fn dlog_matches_finite_differences() {
        let mut rng = Rng::new(8, 0);
        for trial in 0..50 {
            let n = [2, 3, 4, 6][trial % 4];
            let p = random_spd(&mut rng, n, 0.8);
            let v = random_dir(&mut rng, n);
            let exact = dlog(&p, &v).unwrap();
            let approx = dlog_fd(&p, &v);
            let rel = exact.sub(&approx).frobenius_norm() / exact.frobenius_norm().max(1e-300);
            assert!(rel < 1e-6, "relative error {rel} at trial {trial}");
        }
    }

    #[test]
    fn dlog_near_coalescing_eigenvalues_is_stable() {
        let p = SpdMatrix::diagonal(&[1.0, 1.0 + 1e-12]).unwrap();
        let v = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = dlog(&p, &v).unwrap();
        assert!((out.entry(0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norming_state_diagonal_cases() {
        let i2 = SpdMatrix::identity(2);
        let up = SpdMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let s = norming_state(&up, &i2).unwrap();
        assert_eq!(s.side(), NormingSide::Upper);
        assert!((s.vector()[0].abs() - 1.0).abs() < 1e-12);
        for t in [0.0, 0.25, 0.5, 1.0] {
            let g = geodesic(&i2, &up, t).unwrap();
            let val = s.evaluate(&i2, g.as_sym()).unwrap();
            assert!((val - 4.0_f64.powf(t)).abs() < 1e-10, "t={t} val={val}");
        }

        let down = SpdMatrix::diagonal(&[0.25, 1.0]).unwrap();
        let s = norming_state(&down, &i2).unwrap();
        assert_eq!(s.side(), NormingSide::Lower);
        for t in [0.0, 0.25, 0.5, 1.0] {
            let g = geodesic(&i2, &down, t).unwrap();
            let val = s.evaluate(&i2, g.as_sym()).unwrap();
            assert!((val - 4.0_f64.powf(-t)).abs() < 1e-10, "t={t} val={val}");
        }
    }

    #[test]
    fn norming_state_random_pairs() {
        let mut rng = Rng::new(9, 0);
        for trial in 0..30 {
            let n = [2, 3, 5][trial % 3];
            let a = random_spd(&mut rng, n, 1.0);
            let b = random_spd(&mut rng, n, 1.0);
            let d = thompson_distance(&a, &b).unwrap();
            let s = norming_state(&a, &b).unwrap();
            let base = s.evaluate(&b, b.as_sym()).unwrap();
            assert!((base - 1.0).abs() < 1e-10, "omega(B) = {base}");
            let sign = match s.side() {
                NormingSide::Upper => 1.0,
                NormingSide::Lower => -1.0,
            };
            for t in [0.0, 0.25, 0.5, 1.0] {
                let g = geodesic(&b, &a, t).unwrap();
                let val = s.evaluate(&b, g.as_sym()).unwrap();
                let expected = (sign * t * d).exp();
                let rel = (val - expected).abs() / expected.abs();
                assert!(rel < 1e-8, "trial {trial} t={t}: {val} vs {expected}");
            }
        }
    }
}
