//! Law-of-large-numbers experiments for the Karcher mean and its flow.
//!
//! Draws i.i.d. samples from a law on the cone, forms empirical measures
//! `μ_n`, and tracks how the empirical mean `Λ(μ_n)` and the empirical flow
//! `S^{μ_n}(t)X` approach their reference counterparts as `n` grows. The
//! Wasserstein contraction `d(Λ(μ_n), Λ(μ)) ≤ W₁(μ_n, μ)` gives a per-row
//! certified bound whenever the law is finitely supported.
//!
//! Sampling is counter-based: draw `i` comes from its own stream keyed by
//! `(seed, i)`, so `μ_n` extends `μ_m` for `n > m` under the same seed,
//! rows can be computed in any order (or in parallel), and the emitted CSV
//! is byte-identical across runs and platforms.

use crate::error::{Error, Result};
use crate::flow::evolve;
use crate::io::fmt_f64;
use crate::means::{karcher_mean, SolverConfig};
use crate::measure::{w1, DiscreteMeasure};
use crate::rng::Rng;
use crate::spd::{mat_exp, thompson_distance, SpdMatrix};
use crate::sym::SymMatrix;

/// Salt mixed into the seed of the surrogate reference sample so it shares
/// no draws with the empirical measures.
const REFERENCE_SALT: u64 = 0x517c_c1b7_2722_0a95;

/// Reference size multiplier for laws without finite support.
const REFERENCE_FACTOR: usize = 16;

/// A sampleable law on the positive definite cone.
#[derive(Debug, Clone)]
pub enum SpdLaw {
    /// Finitely supported law; sampling is inverse-CDF over the weights.
    Finite(DiscreteMeasure),
    /// `Y = exp(scale * B^{1/2} G B^{1/2})` with `G` a symmetrized standard
    /// normal matrix. All Thompson moments are finite.
    LogGaussian { base: SpdMatrix, scale: f64 },
}

impl SpdLaw {
    pub fn dim(&self) -> usize {
        match self {
            SpdLaw::Finite(mu) => mu.dim(),
            SpdLaw::LogGaussian { base, .. } => base.dim(),
        }
    }

    pub fn log_gaussian(base: SpdMatrix, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter("scale must be positive"));
        }
        Ok(SpdLaw::LogGaussian { base, scale })
    }
}

/// One convergence-table row.
#[derive(Debug, Clone)]
pub struct LlnRow {
    pub n: usize,
    /// Exact `W₁(μ_n, μ)`; only available for finitely supported laws.
    pub w1_to_law: Option<f64>,
    /// `d(Λ(μ_n), Λ(μ_ref))`.
    pub d_mean: f64,
    /// `d(S^{μ_n}(t)X, S^{μ_ref}(t)X)`.
    pub d_flow: f64,
    pub seed: u64,
}

/// Full experiment output plus the provenance of the reference measure.
#[derive(Debug, Clone)]
pub struct LlnReport {
    pub rows: Vec<LlnRow>,
    /// Size and seed of the surrogate reference sample (non-finite laws).
    pub reference: Option<(usize, u64)>,
}

fn draw(law: &SpdLaw, index: usize, seed: u64, sqrt_base: Option<&SpdMatrix>) -> Result<SpdMatrix> {
    let mut rng = Rng::new(seed, index as u64);
    match law {
        SpdLaw::Finite(mu) => {
            let u = rng.uniform();
            let mut acc = 0.0;
            for (a, w) in mu.iter() {
                acc += w;
                if u <= acc {
                    return Ok(a.clone());
                }
            }
            // Weights sum to one; rounding can leave u microscopically above.
            Ok(mu.atoms().last().expect("measure is nonempty").clone())
        }
        SpdLaw::LogGaussian { base, scale } => {
            let n = base.dim();
            let mut z = vec![0.0; n * n];
            for v in z.iter_mut() {
                *v = rng.normal();
            }
            let g = SymMatrix::from_fn(n, |i, j| 0.5 * (z[i * n + j] + z[j * n + i]));
            let s = sqrt_base.expect("precomputed square root for log-gaussian draws");
            let sg = s.as_sym().sym_product(&g);
            let sgs = sg.sym_product(s.as_sym());
            mat_exp(&sgs.scale(*scale))
        }
    }
}

/// Empirical measure `μ_n`: `n` i.i.d. draws with uniform weights.
///
/// Deterministic in `(law, n, seed)`, and nested: the first `m` draws of
/// `sample(law, n, seed)` are exactly `sample(law, m, seed)`.
pub fn sample(law: &SpdLaw, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::EmptyMeasure);
    }
    let sqrt_base = match law {
        SpdLaw::LogGaussian { base, .. } => Some(base.powf(0.5)?),
        SpdLaw::Finite(_) => None,
    };
    let atoms = (0..n)
        .map(|i| draw(law, i, seed, sqrt_base.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::uniform(atoms)
}

/// Runs the convergence experiment over ascending sample sizes.
///
/// The reference is the law itself when finitely supported; otherwise a
/// fixed surrogate sample of size `16 · max(sizes)` drawn from a salted
/// seed stream (finitely supported measures are dense in Wasserstein
/// distance, so a large sample stands in for the law). Mean solves run at
/// `cfg.tol`; the flow columns use the separate `flow_tol`, since semigroup
/// evaluations pay `O(1/tol)` resolvent solves per table cell.
#[allow(clippy::too_many_arguments)]
pub fn run(
    law: &SpdLaw,
    sizes: &[usize],
    t: f64,
    x: &SpdMatrix,
    seed: u64,
    cfg: &SolverConfig,
    flow_tol: f64,
    threads: usize,
) -> Result<LlnReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("at least one sample size is required"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sample sizes must be strictly ascending"));
    }
    if law.dim() != x.dim() {
        return Err(Error::DimensionMismatch(law.dim(), x.dim()));
    }

    let (reference_measure, reference) = match law {
        SpdLaw::Finite(mu) => (mu.clone(), None),
        SpdLaw::LogGaussian { .. } => {
            let size = REFERENCE_FACTOR * sizes.last().copied().unwrap_or(1);
            let ref_seed = seed ^ REFERENCE_SALT;
            (sample(law, size, ref_seed)?, Some((size, ref_seed)))
        }
    };
    if !(flow_tol > 0.0 && flow_tol.is_finite()) {
        return Err(Error::InvalidParameter("flow tolerance must be positive"));
    }
    let (mean_ref, _) = karcher_mean(&reference_measure, cfg)?;
    let flow_ref = evolve(&reference_measure, t, x, flow_tol, cfg)?.state;

    let row_for = |index: usize, n: usize| -> Result<LlnRow> {
        (|| -> Result<LlnRow> {
            let mu_n = sample(law, n, seed)?;
            let w1_to_law = match law {
                SpdLaw::Finite(_) => Some(w1(&mu_n, &reference_measure)?.0),
                SpdLaw::LogGaussian { .. } => None,
            };
            let (mean_n, _) = karcher_mean(&mu_n, cfg)?;
            let d_mean = thompson_distance(&mean_n, &mean_ref)?;
            let flow_n = evolve(&mu_n, t, x, flow_tol, cfg)?.state;
            let d_flow = thompson_distance(&flow_n, &flow_ref)?;
            Ok(LlnRow { n, w1_to_law, d_mean, d_flow, seed })
        })()
        .map_err(|e| Error::RowFailed { index, n, source: Box::new(e) })
    };

    // Rows are independent (each owns its draw streams), so they may be
    // computed in any order; output order stays fixed by `sizes`.
    let rows = if threads <= 1 {
        sizes
            .iter()
            .enumerate()
            .map(|(index, &n)| row_for(index, n))
            .collect::<Result<Vec<_>>>()?
    } else {
        let slots: std::sync::Mutex<Vec<Option<Result<LlnRow>>>> =
            std::sync::Mutex::new((0..sizes.len()).map(|_| None).collect());
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..threads.min(sizes.len()) {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if index >= sizes.len() {
                        break;
                    }
                    let out = row_for(index, sizes[index]);
                    slots.lock().unwrap()[index] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|slot| slot.expect("every row computed"))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(LlnReport { rows, reference })
}

/// Renders the report as CSV: mandatory header row, full-precision reals,
/// and (for surrogate references) comment lines recording the reference
/// sample. Byte-identical for identical inputs.
pub fn to_csv(report: &LlnReport) -> String {
    let mut out = String::new();
    if let Some((size, seed)) = report.reference {
        out.push_str(&format!("# reference: surrogate sample size={size} seed={seed}\n"));
    }
    out.push_str("n,w1_to_law,d_mean,d_flow,seed\n");
    for row in &report.rows {
        out.push_str(&row.n.to_string());
        out.push(',');
        if let Some(w) = row.w1_to_law {
            out.push_str(&fmt_f64(w));
        }
        out.push(',');
        out.push_str(&fmt_f64(row.d_mean));
        out.push(',');
        out.push_str(&fmt_f64(row.d_flow));
        out.push(',');
        out.push_str(&row.seed.to_string());
        out.push('\n');
    }
    out
}
