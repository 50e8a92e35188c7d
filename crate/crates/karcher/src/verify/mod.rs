//! The contraction inequalities of the theory as executable checks.
//!
//! Every named check samples seeded random instances at desk scale
//! (dimensions 2..16, at most 8 atoms), evaluates one inequality with its
//! pinned tolerance, and reports the worst violation observed. A negative
//! worst violation means the inequality held with margin everywhere.
//!
//! The same functions back the command-line `check` subcommand and the
//! acceptance suite; instance counts and the seed are the only knobs.

pub mod flows;
pub mod geometry;
pub mod means_checks;
pub mod sampling;
pub mod transport_checks;

use crate::error::Result;
use crate::rng::Rng;
use crate::spd::{mat_exp, SpdMatrix};
use crate::sym::SymMatrix;

pub use sampling::lln_checks;

/// Scale knobs for a check run.
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub seed: u64,
    /// Instances per property; heavyweight semigroup checks may cap this
    /// internally to respect the advertised runtime.
    pub instances: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { seed: 0, instances: 50 }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed violation of the inequality (negative = margin).
    pub worst_violation: f64,
    pub instances: usize,
    pub detail: String,
}

impl CheckResult {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {:<34} worst violation {:+.3e} over {} instances{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst_violation,
            self.instances,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

/// Accumulates the worst violation across instances.
pub(crate) struct Gauge {
    name: &'static str,
    worst: f64,
    instances: usize,
    detail: String,
}

impl Gauge {
    pub(crate) fn new(name: &'static str) -> Self {
        Gauge { name, worst: f64::NEG_INFINITY, instances: 0, detail: String::new() }
    }

    /// Records `lhs - rhs` for an inequality `lhs <= rhs`.
    pub(crate) fn observe(&mut self, violation: f64) {
        self.worst = self.worst.max(violation);
    }

    pub(crate) fn bump(&mut self) {
        self.instances += 1;
    }

    pub(crate) fn finish(self) -> CheckResult {
        let worst = if self.worst == f64::NEG_INFINITY { 0.0 } else { self.worst };
        CheckResult {
            name: self.name,
            passed: worst <= 0.0 && worst.is_finite(),
            worst_violation: worst,
            instances: self.instances,
            detail: self.detail,
        }
    }

    /// Converts an internal error into a failed result.
    pub(crate) fn fail(self, err: impl std::fmt::Display) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: false,
            worst_violation: f64::INFINITY,
            instances: self.instances,
            detail: format!("error: {err}"),
        }
    }
}

/// Runs `body` over a gauge, turning solver errors into failures.
pub(crate) fn gauge_check(
    name: &'static str,
    body: impl FnOnce(&mut Gauge) -> Result<()>,
) -> CheckResult {
    let mut gauge = Gauge::new(name);
    match body(&mut gauge) {
        Ok(()) => gauge.finish(),
        Err(e) => gauge.fail(e),
    }
}

/// Desk-scale dimension cycle.
pub(crate) fn dim_cycle(i: usize) -> usize {
    [2, 4, 8, 16][i % 4]
}

/// Dimension cycle for semigroup-heavy checks: a semigroup evaluation costs
/// O(1/tol) resolvent solves and each solve an O(n³) eigensolve per atom,
/// so these stay at n ≤ 8 (the algebraic checks cover n = 16).
pub(crate) fn flow_dim_cycle(i: usize) -> usize {
    [2, 4, 2, 4, 8][i % 5]
}

pub(crate) fn random_spd(rng: &mut Rng, n: usize, spread: f64) -> SpdMatrix {
    let g = SymMatrix::from_fn(n, |i, j| {
        let v = rng.normal() * spread;
        if i == j {
            v
        } else {
            v / 2.0
        }
    });
    mat_exp(&g).expect("bounded random log stays finite")
}

pub(crate) fn random_direction(rng: &mut Rng, n: usize) -> SymMatrix {
    let v = SymMatrix::from_fn(n, |_, _| rng.normal());
    v.scale(1.0 / v.frobenius_norm().max(1e-300))
}

pub(crate) fn random_measure(
    rng: &mut Rng,
    n: usize,
    atoms: usize,
    spread: f64,
) -> crate::measure::DiscreteMeasure {
    let atoms: Vec<SpdMatrix> = (0..atoms).map(|_| random_spd(rng, n, spread)).collect();
    let weights: Vec<f64> = (0..atoms.len()).map(|_| rng.range(0.2, 1.0)).collect();
    crate::measure::DiscreteMeasure::new(atoms, weights).expect("valid random measure")
}

pub(crate) fn random_uniform_measure(
    rng: &mut Rng,
    n: usize,
    atoms: usize,
    spread: f64,
) -> crate::measure::DiscreteMeasure {
    let atoms: Vec<SpdMatrix> = (0..atoms).map(|_| random_spd(rng, n, spread)).collect();
    crate::measure::DiscreteMeasure::uniform(atoms).expect("valid random measure")
}

/// Every check in a fixed order; the full invariant suite behind `check`.
pub fn run_all(opts: &CheckOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.extend(geometry::checks(opts));
    out.extend(transport_checks::checks(opts));
    out.extend(means_checks::checks(opts));
    out.extend(flows::checks(opts));
    out.extend(sampling::lln_checks(opts));
    out
}

/// Runs all checks, splitting the work across `threads` workers while
/// keeping the reporting order fixed.
pub fn run_all_parallel(opts: &CheckOptions, threads: usize) -> Vec<CheckResult> {
    if threads <= 1 {
        return run_all(opts);
    }
    type Job = Box<dyn FnOnce(&CheckOptions) -> Vec<CheckResult> + Send>;
    let jobs: Vec<Job> = vec![
        Box::new(|o: &CheckOptions| geometry::checks(o)),
        Box::new(|o: &CheckOptions| transport_checks::checks(o)),
        Box::new(|o: &CheckOptions| means_checks::checks(o)),
        Box::new(|o: &CheckOptions| flows::checks(o)),
        Box::new(|o: &CheckOptions| sampling::lln_checks(o)),
    ];
    let slots: std::sync::Mutex<Vec<Option<Vec<CheckResult>>>> =
        std::sync::Mutex::new((0..jobs.len()).map(|_| None).collect());
    let queue = std::sync::Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads.min(5) {
            handles.push(scope.spawn(|| loop {
                let job = { queue.lock().unwrap().pop() };
                let Some((idx, job)) = job else { break };
                let result = job(opts);
                slots.lock().unwrap()[idx] = Some(result);
            }));
        }
        for h in handles {
            let _ = h.join();
        }
    });
    slots.into_inner().unwrap().into_iter().flatten().flatten().collect()
}
