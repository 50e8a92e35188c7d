//! Checks for the cone geometry: metric axioms, invariances, geodesics,
//! the exponential-metric-increasing inequality, log derivatives and
//! norming states.

use super::{dim_cycle, gauge_check, random_direction, random_spd, CheckOptions, CheckResult};
use crate::rng::Rng;
use crate::spd::{
    dlog, geodesic, mat_log, norming_state, thompson_distance, NormingSide, SpdMatrix,
};
use crate::sym::{mat_mul, mat_mul_t_right, SymMatrix};

pub(super) fn checks(opts: &CheckOptions) -> Vec<CheckResult> {
    vec![
        metric_axioms(opts),
        congruence_invariance(opts),
        exp_metric_increasing(opts),
        geodesic_parametrization(opts),
        geodesic_contraction(opts),
        log_derivative_fd(opts),
        norming_state_extremal(opts),
    ]
}

/// d(A,A) = 0, symmetry within 1e-10, triangle inequality with slack 1e-9.
pub fn metric_axioms(opts: &CheckOptions) -> CheckResult {
    gauge_check("thompson-metric-axioms", |g| {
        let mut rng = Rng::new(opts.seed, 0x11);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let a = random_spd(&mut rng, n, 1.0);
            let b = random_spd(&mut rng, n, 1.0);
            let c = random_spd(&mut rng, n, 1.0);
            g.observe(thompson_distance(&a, &a)? - 1e-10);
            let ab = thompson_distance(&a, &b)?;
            g.observe((ab - thompson_distance(&b, &a)?).abs() - 1e-10);
            g.observe(thompson_distance(&a, &c)? - ab - thompson_distance(&b, &c)? - 1e-9);
            g.bump();
        }
        Ok(())
    })
}

/// d(CACᵀ, CBCᵀ) = d(A,B) for invertible C, and d(A⁻¹,B⁻¹) = d(A,B),
/// both within 1e-9.
pub fn congruence_invariance(opts: &CheckOptions) -> CheckResult {
    gauge_check("thompson-congruence-invariance", |g| {
        let mut rng = Rng::new(opts.seed, 0x12);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let a = random_spd(&mut rng, n, 1.0);
            let b = random_spd(&mut rng, n, 1.0);
            let d = thompson_distance(&a, &b)?;

            // A dense Gaussian matrix is invertible almost surely.
            let c: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
            let congr = |m: &SpdMatrix| -> crate::error::Result<SpdMatrix> {
                let cm = mat_mul(&c, m.as_sym().data(), n);
                let cmc = mat_mul_t_right(&cm, &c, n);
                SpdMatrix::new(SymMatrix::new(n, cmc)?)
            };
            let d_congr = thompson_distance(&congr(&a)?, &congr(&b)?)?;
            g.observe((d_congr - d).abs() - 1e-9);

            let d_inv = thompson_distance(&a.inverse(), &b.inverse())?;
            g.observe((d_inv - d).abs() - 1e-9);
            g.bump();
        }
        Ok(())
    })
}

/// ‖log A − log B‖ ≤ d(A,B) + 1e-10.
pub fn exp_metric_increasing(opts: &CheckOptions) -> CheckResult {
    gauge_check("exp-metric-increasing", |g| {
        let mut rng = Rng::new(opts.seed, 0x13);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let a = random_spd(&mut rng, n, 1.0);
            let b = random_spd(&mut rng, n, 1.0);
            let lhs = mat_log(&a).sub(&mat_log(&b)).operator_norm();
            g.observe(lhs - thompson_distance(&a, &b)? - 1e-10);
            g.bump();
        }
        Ok(())
    })
}

/// d(A#ₛB, A#ᵤB) = |s−u| d(A,B) within 1e-9.
pub fn geodesic_parametrization(opts: &CheckOptions) -> CheckResult {
    gauge_check("geodesic-parametrization", |g| {
        let mut rng = Rng::new(opts.seed, 0x14);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let a = random_spd(&mut rng, n, 1.0);
            let b = random_spd(&mut rng, n, 1.0);
            let s = rng.range(0.0, 1.0);
            let u = rng.range(0.0, 1.0);
            let d = thompson_distance(&a, &b)?;
            let along = thompson_distance(&geodesic(&a, &b, s)?, &geodesic(&a, &b, u)?)?;
            g.observe((along - (s - u).abs() * d).abs() - 1e-9);
            g.bump();
        }
        Ok(())
    })
}

/// The map X ↦ X#ₜA is a (1−t)-contraction: d(X#ₜA, Y#ₜA) ≤ (1−t) d(X,Y)
/// + 1e-9. (Equivalently the second slot contracts with constant t.)
pub fn geodesic_contraction(opts: &CheckOptions) -> CheckResult {
    gauge_check("geodesic-contraction", |g| {
        let mut rng = Rng::new(opts.seed, 0x15);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let a = random_spd(&mut rng, n, 1.0);
            let x = random_spd(&mut rng, n, 1.0);
            let y = random_spd(&mut rng, n, 1.0);
            let t = rng.range(0.0, 1.0);
            let lhs = thompson_distance(&geodesic(&x, &a, t)?, &geodesic(&y, &a, t)?)?;
            g.observe(lhs - (1.0 - t) * thompson_distance(&x, &y)? - 1e-9);
            g.bump();
        }
        Ok(())
    })
}

/// Divided-difference log derivative vs central finite differences,
/// relative error ≤ 1e-6.
pub fn log_derivative_fd(opts: &CheckOptions) -> CheckResult {
    gauge_check("log-derivative-finite-difference", |g| {
        let mut rng = Rng::new(opts.seed, 0x16);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            // Mild spread keeps the third derivative of log (~1/eigmin^3)
            // within what a second-order difference resolves at the pinned
            // step size.
            let p = random_spd(&mut rng, n, 0.5);
            let v = random_direction(&mut rng, n);
            let exact = dlog(&p, &v)?;
            let h = 1e-5 * p.operator_norm() / v.operator_norm().max(1e-300);
            let plus = SpdMatrix::new(p.as_sym().add(&v.scale(h)))?;
            let minus = SpdMatrix::new(p.as_sym().sub(&v.scale(h)))?;
            let approx = mat_log(&plus).sub(&mat_log(&minus)).scale(0.5 / h);
            let rel =
                exact.sub(&approx).frobenius_norm() / exact.frobenius_norm().max(1e-300);
            g.observe(rel - 1e-6);
            g.bump();
        }
        Ok(())
    })
}

/// The norming state attains e^{±t d(A,B)} along the geodesic from B to A,
/// relative error ≤ 1e-8 at t ∈ {0, ¼, ½, 1}.
pub fn norming_state_extremal(opts: &CheckOptions) -> CheckResult {
    gauge_check("norming-state-extremality", |g| {
        let mut rng = Rng::new(opts.seed, 0x17);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let a = random_spd(&mut rng, n, 1.0);
            let b = random_spd(&mut rng, n, 1.0);
            let d = thompson_distance(&a, &b)?;
            let state = norming_state(&a, &b)?;
            let sign = match state.side() {
                NormingSide::Upper => 1.0,
                NormingSide::Lower => -1.0,
            };
            for t in [0.0, 0.25, 0.5, 1.0] {
                let val = state.evaluate(&b, geodesic(&b, &a, t)?.as_sym())?;
                let expected = (sign * t * d).exp();
                g.observe((val - expected).abs() / expected.abs() - 1e-8);
            }
            g.bump();
        }
        Ok(())
    })
}
