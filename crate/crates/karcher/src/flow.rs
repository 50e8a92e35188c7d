//! The nonlinear semigroup solving `Ẋ = Σ wᵢ log_X(Aᵢ)`.
//!
//! Backward Euler steps of the flow are resolvents `J_λ`, and the
//! exponential formula `S(t)X = lim_n (J_{t/n})ⁿ X` converges with the
//! a-priori rate `d(S(t)X, (J_{t/n})ⁿX) ≤ 2 t n^{-1/2} ∫ d(X, A) dμ(A)`.
//! Discretization control doubles `n` and stops on either the a-priori
//! bound or an a-posteriori Cauchy test between levels; the bound alone is
//! pessimistic (square-root rate) while the Cauchy test alone carries no
//! certificate, so both are recorded.
//!
//! The same construction runs for any nonexpansive map `F` in place of the
//! measure: the approximating resolvent `J_{λ,ρ}` is the fixed point of the
//! strict contraction `G(X) = Y #_q F(X)` with `q = (λ/ρ)/(1+λ/ρ)`, and its
//! exponential formula yields the approximating semigroup `S_ρ(t)`. With
//! `F` the composition of two-point geodesic steps through the atoms, the
//! plain iterate `(F_{t/m})^m X` is the Trotter product: cheap geodesic
//! sweeps, no inner solves, converging to `S(t)X` as `m → ∞`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::means::{karcher_residual, resolvent_from, SolveReport, SolverConfig};
use crate::measure::{first_moment, DiscreteMeasure};
use crate::spd::{geodesic, thompson_distance, SpdMatrix};

/// Hard ceiling on the discretization level; the a-priori bound stops the
/// doubling long before this in any realistic call.
const MAX_LEVEL: usize = 1 << 28;

/// Iteration ceiling for the Banach iteration of the approximating
/// resolvent, which is guaranteed convergent.
const MAX_BANACH: usize = 50_000_000;

/// Result of a semigroup evaluation.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub state: SpdMatrix,
    /// Discretization level the doubling stopped at.
    pub n_used: usize,
    /// A-priori error bound at `n_used`: `2 t n^{-1/2}` times the first
    /// moment (exponential formula) or `d(X, F(X))/ρ` (approximating case).
    pub error_bound: f64,
}

/// Composition order of the per-atom geodesic steps in a split map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrotterOrder {
    /// First atom applied first (innermost), matching the product
    /// `J^{A_k} ∘ ⋯ ∘ J^{A_1}`.
    #[default]
    Forward,
    /// Last atom applied first; the limits coincide for the measures used
    /// here but the order is kept explicit.
    Reverse,
}

impl fmt::Display for TrotterOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrotterOrder::Forward => write!(f, "forward"),
            TrotterOrder::Reverse => write!(f, "reverse"),
        }
    }
}

/// A map ℙ → ℙ that does not increase Thompson distances, with a declared
/// step size ρ and a label naming its construction.
#[derive(Clone)]
pub struct NonexpansiveMap {
    step: f64,
    label: String,
    f: Arc<dyn Fn(&SpdMatrix) -> Result<SpdMatrix> + Send + Sync>,
}

impl fmt::Debug for NonexpansiveMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NonexpansiveMap({}, step={})", self.label, self.step)
    }
}

impl NonexpansiveMap {
    pub fn new(
        step: f64,
        label: impl Into<String>,
        f: impl Fn(&SpdMatrix) -> Result<SpdMatrix> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter("map step must be positive"));
        }
        Ok(NonexpansiveMap { step, label: label.into(), f: Arc::new(f) })
    }

    pub fn identity(step: f64) -> Self {
        NonexpansiveMap {
            step,
            label: "identity".into(),
            f: Arc::new(|x: &SpdMatrix| Ok(x.clone())),
        }
    }

    pub fn apply(&self, x: &SpdMatrix) -> Result<SpdMatrix> {
        (self.f)(x)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The same map reinterpreted with a different declared step; the
    /// scaling identity `S_ρ(t) = S_1(t/ρ)` is exercised this way.
    pub fn with_step(&self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter("map step must be positive"));
        }
        Ok(NonexpansiveMap { step, label: self.label.clone(), f: Arc::clone(&self.f) })
    }
}

fn inner_cfg(cfg: &SolverConfig, flow_tol: f64, level: usize) -> SolverConfig {
    // Chain errors accumulate at most once per resolvent (the resolvent is
    // nonexpansive), so level-n solves at tol/(10 n) keep the whole chain
    // an order of magnitude below the flow tolerance.
    let t = (flow_tol / (10.0 * level as f64)).max(1e-13);
    cfg.with_tol(t)
}

/// `(J_{t/n})ⁿ X` with each resolvent warm-started from the previous chain
/// point.
fn resolvent_chain(
    mu: &DiscreteMeasure,
    t: f64,
    n: usize,
    x: &SpdMatrix,
    cfg: &SolverConfig,
) -> Result<SpdMatrix> {
    let lambda = t / n as f64;
    let mut y = x.clone();
    for _ in 0..n {
        y = resolvent_from(mu, lambda, &y, Some(y.clone()), cfg)?;
    }
    Ok(y)
}

/// Semigroup evaluation `S(t)X` by the exponential formula.
///
/// Doubles the discretization level until consecutive levels agree within
/// `tol/2` or the a-priori bound `2 t n^{-1/2} ∫ d(X, A) dμ` drops below
/// `tol`; the recorded `error_bound` is always the a-priori bound at the
/// final level.
pub fn evolve(
    mu: &DiscreteMeasure,
    t: f64,
    x: &SpdMatrix,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<FlowResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter("flow time must be positive"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter("flow tolerance must be positive"));
    }
    let fm = first_moment(mu, x)?;
    let apriori = |n: usize| 2.0 * t * fm / (n as f64).sqrt();

    let mut n = 1usize;
    let mut y = resolvent_chain(mu, t, n, x, &inner_cfg(cfg, tol, n))?;
    loop {
        if apriori(n) <= tol || n >= MAX_LEVEL {
            return Ok(FlowResult { state: y, n_used: n, error_bound: apriori(n) });
        }
        let next = resolvent_chain(mu, t, 2 * n, x, &inner_cfg(cfg, tol, 2 * n))?;
        let gap = thompson_distance(&y, &next)?;
        n *= 2;
        y = next;
        if gap <= 0.5 * tol {
            return Ok(FlowResult { state: y, n_used: n, error_bound: apriori(n) });
        }
    }
}

/// Runs the flow in unit time steps until it stops moving, landing on the
/// Karcher mean (the flow contracts at rate e^{-t} toward it).
pub fn to_mean(
    mu: &DiscreteMeasure,
    x: &SpdMatrix,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<SpdMatrix> {
    let mut cur = x.clone();
    // e^{-1} contraction per unit step: the step budget is generous.
    for _ in 0..400 {
        let next = evolve(mu, 1.0, &cur, 0.5 * tol, cfg)?.state;
        let moved = thompson_distance(&cur, &next)?;
        cur = next;
        if moved <= tol {
            return Ok(cur);
        }
    }
    Err(Error::MaxIterExceeded {
        report: SolveReport { iterations: 400, residual: f64::NAN, certified_bound: None },
    })
}

/// Approximating resolvent `J_{λ,ρ}(Y)`: the unique fixed point of the
/// strict contraction `G(X) = Y #_q F(X)`, `q = (λ/ρ)/(1+λ/ρ)`.
///
/// Banach iteration from `Y` until the step drops below `tol (1-q)/q`,
/// which certifies a distance of at most `tol` to the true fixed point.
pub fn approx_resolvent(
    f: &NonexpansiveMap,
    lambda: f64,
    rho: f64,
    y: &SpdMatrix,
    tol: f64,
) -> Result<SpdMatrix> {
    if !(lambda > 0.0 && rho > 0.0) {
        return Err(Error::InvalidParameter("resolvent parameters must be positive"));
    }
    let ratio = lambda / rho;
    let q = ratio / (1.0 + ratio);
    let threshold = tol * (1.0 - q) / q;
    let mut x = y.clone();
    for _ in 0..MAX_BANACH {
        let fx = f.apply(&x)?;
        let next = geodesic(y, &fx, q)?;
        let step = thompson_distance(&x, &next)?;
        x = next;
        if step <= threshold {
            return Ok(x);
        }
    }
    Err(Error::MaxIterExceeded {
        report: SolveReport { iterations: MAX_BANACH, residual: f64::NAN, certified_bound: None },
    })
}

/// The split map `F_ρ`: per-atom geodesic steps
/// `X ↦ (((X #_s A₁) #_s A₂) ⋯ #_s A_k)` with `s = ρ/(ρ+k)`, i.e. the
/// composition of the single-atom resolvents `J_{ρ/k}` through the atoms.
pub fn trotter_map(atoms: &[SpdMatrix], rho: f64, order: TrotterOrder) -> Result<NonexpansiveMap> {
    if atoms.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter("split step must be positive"));
    }
    let dim = atoms[0].dim();
    for a in atoms {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch(dim, a.dim()));
        }
    }
    let k = atoms.len();
    let s = rho / (rho + k as f64);
    let atoms: Arc<[SpdMatrix]> = atoms.to_vec().into();
    let label = format!("geodesic-split(k={k}, rho={rho}, {order})");
    NonexpansiveMap::new(rho, label, move |x: &SpdMatrix| {
        let mut y = x.clone();
        match order {
            TrotterOrder::Forward => {
                for a in atoms.iter() {
                    y = geodesic(&y, a, s)?;
                }
            }
            TrotterOrder::Reverse => {
                for a in atoms.iter().rev() {
                    y = geodesic(&y, a, s)?;
                }
            }
        }
        Ok(y)
    })
}

/// Approximating semigroup `S_ρ(t)X` built from `F` by the exponential
/// formula over `J_{λ,ρ}`; `ρ` is the map's declared step.
pub fn approx_evolve(
    f: &NonexpansiveMap,
    t: f64,
    x: &SpdMatrix,
    tol: f64,
) -> Result<FlowResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter("flow time must be positive"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter("flow tolerance must be positive"));
    }
    let rho = f.step();
    let drive = thompson_distance(x, &f.apply(x)?)? / rho;
    let apriori = |n: usize| 2.0 * t * drive / (n as f64).sqrt();

    let chain = |n: usize| -> Result<SpdMatrix> {
        let lambda = t / n as f64;
        let inner = (tol / (10.0 * n as f64)).max(1e-13);
        let mut y = x.clone();
        for _ in 0..n {
            y = approx_resolvent(f, lambda, rho, &y, inner)?;
        }
        Ok(y)
    };

    let mut n = 1usize;
    let mut y = chain(n)?;
    loop {
        if apriori(n) <= tol || n >= MAX_LEVEL {
            return Ok(FlowResult { state: y, n_used: n, error_bound: apriori(n) });
        }
        let next = chain(2 * n)?;
        let gap = thompson_distance(&y, &next)?;
        n *= 2;
        y = next;
        if gap <= 0.5 * tol {
            return Ok(FlowResult { state: y, n_used: n, error_bound: apriori(n) });
        }
    }
}

/// Trotter product `(F_{t/m})^m X`: `m` sweeps of tiny geodesic steps.
/// Cost is `m · k` geodesic evaluations and no inner solves.
pub fn trotter_product(
    atoms: &[SpdMatrix],
    t: f64,
    m: usize,
    x: &SpdMatrix,
    order: TrotterOrder,
) -> Result<SpdMatrix> {
    if m == 0 {
        return Err(Error::InvalidParameter("product length must be at least 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter("flow time must be positive"));
    }
    let f = trotter_map(atoms, t / m as f64, order)?;
    let mut y = x.clone();
    for _ in 0..m {
        y = f.apply(&y)?;
    }
    Ok(y)
}

/// Finite-difference defect of the flow against its generator:
/// `‖(S(h)X − X)/h − φ(X)‖`. First-order in `h` for the backward-Euler
/// construction: callers check that halving `h` roughly halves the value.
pub fn cauchy_residual(
    mu: &DiscreteMeasure,
    x: &SpdMatrix,
    h: f64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter("step must be positive"));
    }
    let sh = evolve(mu, h, x, tol, cfg)?.state;
    let phi = karcher_residual(mu, x)?;
    let defect = sh.as_sym().sub(x.as_sym()).scale(1.0 / h).sub(&phi);
    Ok(defect.operator_norm())
}

/// Both sides of the product-vs-semigroup estimate: the left side is
/// `d(F^m(X), S_ρ(t)X)` and the right side is
/// `[t/ρ − m + 2 sqrt((t/ρ − m)² + t/ρ)] · d(X, F(X))`.
pub fn chernoff_gap(
    f: &NonexpansiveMap,
    t: f64,
    m: usize,
    x: &SpdMatrix,
    tol: f64,
) -> Result<(f64, f64)> {
    let s = approx_evolve(f, t, x, tol)?.state;
    let mut fx = x.clone();
    for _ in 0..m {
        fx = f.apply(&fx)?;
    }
    let lhs = thompson_distance(&fx, &s)?;
    let drive = thompson_distance(x, &f.apply(x)?)?;
    let r = t / f.step();
    let md = m as f64;
    let rhs = (r - md + 2.0 * ((r - md).powi(2) + r).sqrt()) * drive;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::means::{karcher_mean, resolvent};
    use crate::rng::Rng;
    use crate::spd::mat_exp;
    use crate::sym::SymMatrix;

    fn random_spd(rng: &mut Rng, n: usize, spread: f64) -> SpdMatrix {
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

    fn random_measure(rng: &mut Rng, n: usize, k: usize, spread: f64) -> DiscreteMeasure {
        let atoms = (0..k).map(|_| random_spd(rng, n, spread)).collect();
        let weights = (0..k).map(|_| rng.range(0.2, 1.0)).collect();
        DiscreteMeasure::new(atoms, weights).unwrap()
    }

    #[test]
    fn single_atom_flow_closed_form() {
        // For a point mass the flow rides the geodesic: S(t)X = X #_{1-e^{-t}} A.
        let mut rng = Rng::new(50, 0);
        let cfg = SolverConfig::default();
        let a = random_spd(&mut rng, 2, 1.0);
        let x = random_spd(&mut rng, 2, 1.0);
        let mu = DiscreteMeasure::dirac(a.clone());
        for t in [0.5, 1.0] {
            let out = evolve(&mu, t, &x, 2e-5, &cfg).unwrap();
            let expected = geodesic(&x, &a, 1.0 - (-t).exp()).unwrap();
            let d = thompson_distance(&out.state, &expected).unwrap();
            assert!(d <= 1e-4, "t={t}: {d} (n_used={})", out.n_used);
        }
    }

    #[test]
    fn flow_is_stationary_at_the_mean() {
        let mut rng = Rng::new(51, 0);
        let cfg = SolverConfig::default();
        let mu = random_measure(&mut rng, 3, 3, 1.0);
        let (lam, _) = karcher_mean(&mu, &cfg).unwrap();
        let tol = 1e-8;
        let out = evolve(&mu, 1.0, &lam, tol, &cfg).unwrap();
        let d = thompson_distance(&out.state, &lam).unwrap();
        assert!(d <= 10.0 * tol, "stationarity drift {d}");
    }

    #[test]
    fn error_bound_formula_is_recorded() {
        let mut rng = Rng::new(52, 0);
        let cfg = SolverConfig::default();
        let mu = random_measure(&mut rng, 2, 2, 1.0);
        let x = random_spd(&mut rng, 2, 1.0);
        let t = 0.7;
        let out = evolve(&mu, t, &x, 1e-4, &cfg).unwrap();
        let fm = first_moment(&mu, &x).unwrap();
        let expected = 2.0 * t * fm / (out.n_used as f64).sqrt();
        assert!((out.error_bound - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn to_mean_agrees_with_karcher_solver() {
        let mut rng = Rng::new(53, 0);
        let cfg = SolverConfig::default();

        let a = random_spd(&mut rng, 2, 1.0);
        let flowed = to_mean(&DiscreteMeasure::dirac(a.clone()), &a, 1e-6, &cfg).unwrap();
        assert!(thompson_distance(&flowed, &a).unwrap() <= 1e-6);

        let b = random_spd(&mut rng, 2, 1.0);
        let x = random_spd(&mut rng, 2, 1.0);
        let mu = DiscreteMeasure::uniform(vec![a.clone(), b.clone()]).unwrap();
        let tol = 1e-4;
        let flowed = to_mean(&mu, &x, tol, &cfg).unwrap();
        let mid = geodesic(&a, &b, 0.5).unwrap();
        let d = thompson_distance(&flowed, &mid).unwrap();
        assert!(d <= 10.0 * tol, "two-atom flow landed {d} from the midpoint");
    }

    #[test]
    fn approx_resolvent_identity_map_fixes_start() {
        let mut rng = Rng::new(54, 0);
        let y = random_spd(&mut rng, 3, 1.0);
        let f = NonexpansiveMap::identity(1.0);
        let j = approx_resolvent(&f, 0.8, 1.0, &y, 1e-12).unwrap();
        assert!(thompson_distance(&j, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn approx_resolvent_single_atom_converges_to_resolvent() {
        // The gap decays like rho * lambda * d(Y, A) / (1 + lambda)^2
        // (first order in rho; exact in the scalar case).
        let mut rng = Rng::new(55, 0);
        let cfg = SolverConfig::default();
        let a = random_spd(&mut rng, 2, 1.0);
        let y = random_spd(&mut rng, 2, 1.0);
        let mu = DiscreteMeasure::dirac(a.clone());
        let lambda = 0.9;
        let exact = resolvent(&mu, lambda, &y, &cfg).unwrap();
        let mut gaps = Vec::new();
        for k in [0, 2, 4, 6, 8] {
            let rho = 0.5_f64.powi(k);
            let f = trotter_map(std::slice::from_ref(&a), rho, TrotterOrder::Forward).unwrap();
            let j = approx_resolvent(&f, lambda, rho, &y, 1e-10).unwrap();
            gaps.push(thompson_distance(&j, &exact).unwrap());
        }
        for pair in gaps.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "gaps rose: {gaps:?}");
        }
        // Quartering rho quarters the gap once in the linear regime.
        let ratio = gaps[3] / gaps[4];
        assert!((2.5..6.0).contains(&ratio), "first-order decay ratio {ratio}, gaps {gaps:?}");
        let scale = lambda * thompson_distance(&y, &a).unwrap() / (1.0 + lambda).powi(2);
        assert!(gaps[4] <= 2.0 * 0.5_f64.powi(8) * scale, "rho=2^-8 gap {} vs scale {scale}", gaps[4]);
    }

    #[test]
    fn approx_resolvent_estimate() {
        let mut rng = Rng::new(56, 0);
        for _ in 0..10 {
            let atoms: Vec<SpdMatrix> = (0..3).map(|_| random_spd(&mut rng, 2, 1.0)).collect();
            let x = random_spd(&mut rng, 2, 1.0);
            let rho = rng.range(0.2, 1.0);
            let lambda = rng.range(0.2, 2.0);
            let f = trotter_map(&atoms, rho, TrotterOrder::Forward).unwrap();
            let j = approx_resolvent(&f, lambda, rho, &x, 1e-11).unwrap();
            let lhs = thompson_distance(&x, &j).unwrap() / lambda;
            let rhs = thompson_distance(&x, &f.apply(&x).unwrap()).unwrap() / rho;
            assert!(lhs <= rhs + 1e-8, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn trotter_map_single_atom_is_geodesic_step() {
        let mut rng = Rng::new(57, 0);
        let a = random_spd(&mut rng, 3, 1.0);
        let x = random_spd(&mut rng, 3, 1.0);
        let rho = 0.37;
        let f = trotter_map(std::slice::from_ref(&a), rho, TrotterOrder::Forward).unwrap();
        let expected = geodesic(&x, &a, rho / (rho + 1.0)).unwrap();
        assert!(thompson_distance(&f.apply(&x).unwrap(), &expected).unwrap() <= 1e-12);
    }

    #[test]
    fn trotter_map_vanishing_step_freezes() {
        let mut rng = Rng::new(58, 0);
        let atoms: Vec<SpdMatrix> = (0..3).map(|_| random_spd(&mut rng, 2, 1.0)).collect();
        let x = random_spd(&mut rng, 2, 1.0);
        let f = trotter_map(&atoms, 1e-9, TrotterOrder::Forward).unwrap();
        assert!(thompson_distance(&f.apply(&x).unwrap(), &x).unwrap() <= 1e-8);
    }

    #[test]
    fn trotter_map_is_nonexpansive() {
        let mut rng = Rng::new(59, 0);
        let atoms: Vec<SpdMatrix> = (0..4).map(|_| random_spd(&mut rng, 2, 1.0)).collect();
        for order in [TrotterOrder::Forward, TrotterOrder::Reverse] {
            let f = trotter_map(&atoms, 0.6, order).unwrap();
            for _ in 0..20 {
                let x = random_spd(&mut rng, 2, 1.0);
                let y = random_spd(&mut rng, 2, 1.0);
                let lhs = thompson_distance(&f.apply(&x).unwrap(), &f.apply(&y).unwrap()).unwrap();
                let rhs = thompson_distance(&x, &y).unwrap();
                assert!(lhs <= rhs + 1e-9, "{order}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn approx_evolve_identity_map_is_constant() {
        let mut rng = Rng::new(60, 0);
        let x = random_spd(&mut rng, 3, 1.0);
        let f = NonexpansiveMap::identity(1.0);
        for t in [0.3, 2.0] {
            let out = approx_evolve(&f, t, &x, 1e-10).unwrap();
            assert!(thompson_distance(&out.state, &x).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn approx_evolve_scaling_law() {
        let mut rng = Rng::new(61, 0);
        let atoms: Vec<SpdMatrix> = (0..3).map(|_| random_spd(&mut rng, 2, 1.0)).collect();
        let x = random_spd(&mut rng, 2, 1.0);
        let rho = 0.25;
        let tol = 1e-6;
        let f_rho = trotter_map(&atoms, rho, TrotterOrder::Forward).unwrap();
        let f_unit = f_rho.with_step(1.0).unwrap();
        let t = 0.8;
        let a = approx_evolve(&f_rho, t, &x, tol).unwrap();
        let b = approx_evolve(&f_unit, t / rho, &x, tol).unwrap();
        let d = thompson_distance(&a.state, &b.state).unwrap();
        assert!(d <= 2.0 * tol, "scaling gap {d}");
    }

    #[test]
    fn approx_evolve_is_nonexpansive_in_the_start() {
        let mut rng = Rng::new(62, 0);
        let atoms: Vec<SpdMatrix> = (0..3).map(|_| random_spd(&mut rng, 2, 1.0)).collect();
        let f = trotter_map(&atoms, 0.5, TrotterOrder::Forward).unwrap();
        for _ in 0..5 {
            let x = random_spd(&mut rng, 2, 1.0);
            let y = random_spd(&mut rng, 2, 1.0);
            let tol = 1e-6;
            let sx = approx_evolve(&f, 0.9, &x, tol).unwrap().state;
            let sy = approx_evolve(&f, 0.9, &y, tol).unwrap().state;
            let lhs = thompson_distance(&sx, &sy).unwrap();
            let rhs = thompson_distance(&x, &y).unwrap();
            assert!(lhs <= rhs + 2.0 * tol + 1e-8, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn trotter_product_single_atom_limit() {
        let mut rng = Rng::new(63, 0);
        let a = random_spd(&mut rng, 2, 1.0);
        let x = random_spd(&mut rng, 2, 1.0);
        let t = 1.0;
        let product =
            trotter_product(std::slice::from_ref(&a), t, 1 << 14, &x, TrotterOrder::Forward)
                .unwrap();
        let expected = geodesic(&x, &a, 1.0 - (-t).exp()).unwrap();
        let d = thompson_distance(&product, &expected).unwrap();
        assert!(d <= 1e-4, "single-atom product gap {d}");
    }

    #[test]
    fn trotter_single_sweep_first_order() {
        // One sweep at tiny t moves by t * phi(X) to first order.
        let mut rng = Rng::new(64, 0);
        let atoms: Vec<SpdMatrix> = (0..3).map(|_| random_spd(&mut rng, 2, 0.8)).collect();
        let mu = DiscreteMeasure::uniform(atoms.clone()).unwrap();
        let x = random_spd(&mut rng, 2, 0.8);
        let t = 1e-4;
        let swept = trotter_product(&atoms, t, 1, &x, TrotterOrder::Forward).unwrap();
        let linear = x.as_sym().add(&karcher_residual(&mu, &x).unwrap().scale(t));
        let gap = swept.as_sym().sub(&linear).operator_norm();
        assert!(gap <= 1e-6, "first-order mismatch {gap}");
    }

    #[test]
    fn trotter_product_commuting_long_time() {
        // Diagonal atoms: the flow target is the commuting mean.
        let mut rng = Rng::new(65, 0);
        let atoms: Vec<SpdMatrix> = (0..3)
            .map(|_| {
                let d: Vec<f64> = (0..2).map(|_| rng.range(0.4, 3.0)).collect();
                SpdMatrix::diagonal(&d).unwrap()
            })
            .collect();
        let mut log_sum = SymMatrix::zeros(2);
        for a in &atoms {
            log_sum.axpy(1.0 / 3.0, &crate::spd::mat_log(a));
        }
        let target = mat_exp(&log_sum).unwrap();
        let x = random_spd(&mut rng, 2, 0.5);
        let product = trotter_product(&atoms, 14.0, 1 << 15, &x, TrotterOrder::Forward).unwrap();
        let d = thompson_distance(&product, &target).unwrap();
        assert!(d <= 1e-4, "commuting limit gap {d}");
    }

    #[test]
    fn cauchy_residual_first_order_decay() {
        let mut rng = Rng::new(66, 0);
        let cfg = SolverConfig::default();
        let mut ok = 0;
        let trials = 6;
        for _ in 0..trials {
            let mu = random_measure(&mut rng, 2, 3, 0.8);
            let x = random_spd(&mut rng, 2, 0.8);
            let h = 1e-2;
            let r1 = cauchy_residual(&mu, &x, h, 1e-7, &cfg).unwrap();
            let r2 = cauchy_residual(&mu, &x, h / 2.0, 1e-7, &cfg).unwrap();
            let ratio = r1 / r2;
            if (1.5..=2.5).contains(&ratio) {
                ok += 1;
            }
        }
        assert!(ok >= trials - 1, "first-order decay held only {ok}/{trials} times");
    }

    #[test]
    fn cauchy_residual_small_at_stationary_points() {
        let mut rng = Rng::new(67, 0);
        let cfg = SolverConfig::default();
        let x = random_spd(&mut rng, 2, 1.0);
        let tol = 1e-8;
        let h = 1e-2;
        let r = cauchy_residual(&DiscreteMeasure::dirac(x.clone()), &x, h, tol, &cfg).unwrap();
        assert!(r <= tol / h, "point-mass residual {r}");

        let mu = random_measure(&mut rng, 2, 2, 0.8);
        let (lam, _) = karcher_mean(&mu, &cfg).unwrap();
        let r = cauchy_residual(&mu, &lam, h, tol, &cfg).unwrap();
        assert!(r <= 2.0 * tol / h, "stationary residual {r}");
    }

    #[test]
    fn chernoff_gap_trivial_and_matched_cases() {
        let mut rng = Rng::new(68, 0);
        let x = random_spd(&mut rng, 2, 1.0);
        let id = NonexpansiveMap::identity(0.5);
        let (lhs, rhs) = chernoff_gap(&id, 1.0, 3, &x, 1e-9).unwrap();
        assert!(lhs <= 1e-9 && rhs.abs() < 1e-12, "identity case lhs={lhs} rhs={rhs}");

        // m = t/rho integer: the bracket collapses to 2 sqrt(t/rho).
        let a = random_spd(&mut rng, 2, 1.0);
        let f = trotter_map(std::slice::from_ref(&a), 0.25, TrotterOrder::Forward).unwrap();
        let t = 1.0;
        let m = 4;
        let (lhs, rhs) = chernoff_gap(&f, t, m, &x, 1e-4).unwrap();
        let drive = thompson_distance(&x, &f.apply(&x).unwrap()).unwrap();
        let expected_rhs = 2.0 * (t / 0.25_f64).sqrt() * drive;
        assert!((rhs - expected_rhs).abs() <= 1e-10 * expected_rhs);
        assert!(lhs <= rhs + 1e-6);
    }

    #[test]
    fn exponential_contraction_between_flows() {
        let mut rng = Rng::new(69, 0);
        let cfg = SolverConfig::default();
        let mu = random_measure(&mut rng, 2, 3, 0.8);
        let x = random_spd(&mut rng, 2, 0.8);
        let y = random_spd(&mut rng, 2, 0.8);
        let tol = 3e-5;
        for t in [0.5, 1.0] {
            let sx = evolve(&mu, t, &x, tol, &cfg).unwrap().state;
            let sy = evolve(&mu, t, &y, tol, &cfg).unwrap().state;
            let lhs = thompson_distance(&sx, &sy).unwrap();
            let rhs = (-t).exp() * thompson_distance(&x, &y).unwrap();
            assert!(lhs <= rhs + 1e-4, "t={t}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn semigroup_property() {
        let mut rng = Rng::new(70, 0);
        let cfg = SolverConfig::default();
        let mu = random_measure(&mut rng, 2, 2, 0.8);
        let x = random_spd(&mut rng, 2, 0.8);
        let tol = 1e-4;
        let (s, u) = (0.6, 0.9);
        let direct = evolve(&mu, s + u, &x, tol, &cfg).unwrap().state;
        let first = evolve(&mu, s, &x, tol, &cfg).unwrap().state;
        let composed = evolve(&mu, u, &first, tol, &cfg).unwrap().state;
        let d = thompson_distance(&direct, &composed).unwrap();
        assert!(d <= 2.0 * tol, "semigroup defect {d}");
    }
}
