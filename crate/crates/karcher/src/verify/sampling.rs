//! Checks for the sampling layer: the per-row contraction bound, byte
//! reproducibility of the emitted table, and the convergence trend of
//! empirical means.

use super::{gauge_check, random_spd, CheckOptions, CheckResult};
use crate::lln::{run, sample, to_csv, SpdLaw};
use crate::means::SolverConfig;
use crate::measure::DiscreteMeasure;
use crate::rng::Rng;
use crate::spd::SpdMatrix;

pub fn lln_checks(opts: &CheckOptions) -> Vec<CheckResult> {
    vec![row_bound(opts), reproducibility(opts), trend(opts)]
}

fn finite_law(rng: &mut Rng, n: usize, atoms: usize) -> SpdLaw {
    let atoms: Vec<SpdMatrix> = (0..atoms).map(|_| random_spd(rng, n, 0.8)).collect();
    SpdLaw::Finite(DiscreteMeasure::uniform(atoms).expect("valid law"))
}

/// Every row satisfies d(Λ(μ_n), Λ(μ)) ≤ W₁(μ_n, μ) + 1e-8 on finite laws.
pub fn row_bound(opts: &CheckOptions) -> CheckResult {
    gauge_check("lln-row-bound", |g| {
        let mut rng = Rng::new(opts.seed, 0x51);
        let cfg = SolverConfig::default();
        for i in 0..opts.instances.min(8) {
            let n = [2, 4][i % 2];
            let law = finite_law(&mut rng, n, 3);
            let x = random_spd(&mut rng, n, 0.5);
            let report = run(&law, &[2, 4, 8, 16], 0.5, &x, opts.seed + i as u64, &cfg, 1e-3, 1)?;
            for row in &report.rows {
                let bound = row.w1_to_law.expect("finite law rows carry W1");
                g.observe(row.d_mean - bound - 1e-8);
                g.observe(if row.d_flow.is_finite() { -1.0 } else { 1.0 });
            }
            g.bump();
        }
        Ok(())
    })
}

/// Identical (law, sizes, seed, cfg) produce identical CSV bytes.
pub fn reproducibility(opts: &CheckOptions) -> CheckResult {
    gauge_check("lln-reproducibility", |g| {
        let mut rng = Rng::new(opts.seed, 0x52);
        let cfg = SolverConfig::default();
        let law = finite_law(&mut rng, 2, 3);
        let x = random_spd(&mut rng, 2, 0.5);
        let a = to_csv(&run(&law, &[2, 4, 8], 0.5, &x, opts.seed, &cfg, 1e-3, 1)?);
        let b = to_csv(&run(&law, &[2, 4, 8], 0.5, &x, opts.seed, &cfg, 1e-3, 1)?);
        g.observe(if a == b { -1.0 } else { 1.0 });
        // Nested sampling: prefixes of the draw sequence agree.
        let big = sample(&law, 16, opts.seed)?;
        let small = sample(&law, 5, opts.seed)?;
        for (x, y) in small.atoms().iter().zip(big.atoms()) {
            g.observe(if x.as_sym().data() == y.as_sym().data() { -1.0 } else { 1.0 });
        }
        g.bump();
        Ok(())
    })
}

/// Median d_mean over rows with n ≥ 64 is strictly below the median over
/// rows with n ≤ 8, at three fixed seeds.
pub fn trend(opts: &CheckOptions) -> CheckResult {
    gauge_check("lln-trend", |g| {
        let mut rng = Rng::new(opts.seed, 0x53);
        let cfg = SolverConfig::default();
        let law = finite_law(&mut rng, 2, 4);
        let x = random_spd(&mut rng, 2, 0.5);
        let sizes = [2usize, 4, 8, 64, 128, 256];
        for s in 0..3u64 {
            let report = run(&law, &sizes, 0.5, &x, opts.seed + 1000 * (s + 1), &cfg, 1e-2, 1)?;
            let small: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.n <= 8)
                .map(|r| r.d_mean)
                .collect();
            let large: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.n >= 64)
                .map(|r| r.d_mean)
                .collect();
            g.observe(median(&large) - median(&small));
            g.bump();
        }
        Ok(())
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
