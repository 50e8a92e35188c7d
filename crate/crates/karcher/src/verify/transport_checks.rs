//! Checks for the Wasserstein-1 layer: metric axioms, convexity under
//! mixtures, the permutation oracle, and the point-mass reduction.

use super::{dim_cycle, gauge_check, random_measure, random_spd, random_uniform_measure};
use super::{CheckOptions, CheckResult};
use crate::measure::{first_moment, mix, w1, w1_uniform_oracle, DiscreteMeasure};
use crate::rng::Rng;

pub(super) fn checks(opts: &CheckOptions) -> Vec<CheckResult> {
    vec![
        w1_metric_axioms(opts),
        w1_convexity(opts),
        w1_permutation_oracle(opts),
        w1_point_mass_moment(opts),
    ]
}

/// Symmetry within 1e-9 and triangle inequality with slack 1e-8.
pub fn w1_metric_axioms(opts: &CheckOptions) -> CheckResult {
    gauge_check("w1-metric-axioms", |g| {
        let mut rng = Rng::new(opts.seed, 0x21);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let atom_count = 2 + rng.below(3);
            let a = random_measure(&mut rng, n, atom_count, 1.0);
            let atom_count = 2 + rng.below(3);
            let b = random_measure(&mut rng, n, atom_count, 1.0);
            let atom_count = 2 + rng.below(3);
            let c = random_measure(&mut rng, n, atom_count, 1.0);
            let dab = w1(&a, &b)?.0;
            g.observe((dab - w1(&b, &a)?.0).abs() - 1e-9);
            g.observe(w1(&a, &c)?.0 - dab - w1(&b, &c)?.0 - 1e-8);
            g.observe(w1(&a, &a)?.0 - 1e-10);
            g.bump();
        }
        Ok(())
    })
}

/// W₁((1−t)μ₁+tμ₂, (1−t)ν₁+tν₂) ≤ (1−t)W₁(μ₁,ν₁) + tW₁(μ₂,ν₂) + 1e-8.
pub fn w1_convexity(opts: &CheckOptions) -> CheckResult {
    gauge_check("w1-convexity", |g| {
        let mut rng = Rng::new(opts.seed, 0x22);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let atom_count = 2 + rng.below(3);
            let mu1 = random_measure(&mut rng, n, atom_count, 1.0);
            let atom_count = 2 + rng.below(3);
            let mu2 = random_measure(&mut rng, n, atom_count, 1.0);
            let atom_count = 2 + rng.below(3);
            let nu1 = random_measure(&mut rng, n, atom_count, 1.0);
            let atom_count = 2 + rng.below(3);
            let nu2 = random_measure(&mut rng, n, atom_count, 1.0);
            let t = rng.range(0.0, 1.0);
            let lhs = w1(&mix(&mu1, &mu2, t)?, &mix(&nu1, &nu2, t)?)?.0;
            let rhs = (1.0 - t) * w1(&mu1, &nu1)?.0 + t * w1(&mu2, &nu2)?.0;
            g.observe(lhs - rhs - 1e-8);
            g.bump();
        }
        Ok(())
    })
}

/// Exact solver agrees with the exhaustive assignment oracle within 1e-9
/// on uniform equal-size supports of up to 8 atoms.
pub fn w1_permutation_oracle(opts: &CheckOptions) -> CheckResult {
    gauge_check("w1-permutation-oracle", |g| {
        let mut rng = Rng::new(opts.seed, 0x23);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let k = 2 + rng.below(7); // up to 8 atoms
            let mu = random_uniform_measure(&mut rng, n, k, 1.0);
            let nu = random_uniform_measure(&mut rng, n, k, 1.0);
            let (cost, plan) = w1(&mu, &nu)?;
            g.observe((cost - w1_uniform_oracle(&mu, &nu)?).abs() - 1e-9);
            for (r, w) in plan.row_sums().iter().zip(mu.weights()) {
                g.observe((r - w).abs() - 1e-9);
            }
            for (c, w) in plan.col_sums().iter().zip(nu.weights()) {
                g.observe((c - w).abs() - 1e-9);
            }
            g.bump();
        }
        Ok(())
    })
}

/// W₁(μ, δ_X) equals the first moment of μ at X within 1e-10.
pub fn w1_point_mass_moment(opts: &CheckOptions) -> CheckResult {
    gauge_check("w1-point-mass-moment", |g| {
        let mut rng = Rng::new(opts.seed, 0x24);
        for i in 0..opts.instances {
            let n = dim_cycle(i);
            let atom_count = 2 + rng.below(6);
            let mu = random_measure(&mut rng, n, atom_count, 1.0);
            let x = random_spd(&mut rng, n, 1.0);
            let (cost, _) = w1(&mu, &DiscreteMeasure::dirac(x.clone()))?;
            g.observe((cost - first_moment(&mu, &x)?).abs() - 1e-10);
            g.bump();
        }
        Ok(())
    })
}
