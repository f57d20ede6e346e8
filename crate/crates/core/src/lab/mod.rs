//! Numerical experiments for the structural theorems: ground-state positivity and
//! non-degeneracy, Courant's nodal bound, excited states that survive a delta
//! placed at a node, and closed-form oracles.

mod nodal;
mod sampler;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fourier::{grid_point, grid_sample, linf_norm, oversampled_len, PeriodicFunction, Potential};
use crate::spectral::{assemble_hamiltonian, eigenbasis_dual_coefficients, eigensolve, solve, spectral_gap, EigenSolution};

pub use nodal::{find_node, nodal_domain_count, ZERO_FRACTION};
pub use sampler::Sampler;

/// Minimum of the ground state over an `n`-point grid and where it is attained.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Positivity {
    pub min_value: f64,
    pub argmin: f64,
}

pub fn positivity_check(sol: &EigenSolution, n: usize) -> Result<Positivity> {
    let values = grid_sample(sol.ground_state(), n)?.real_values();
    let (i, &min_value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidArgument("empty grid".into()))?;
    Ok(Positivity {
        min_value,
        argmin: grid_point(i, n),
    })
}

/// Ground energy of `h(α δ₀)` for `α > 0`: the root `E ∈ (0, 1/4)` of
/// `√E tan(π√E) = α/2`, found by bisection in `s = √E`.
///
/// The even ground state is `cos(√E (x - π))`, whose derivative jump at the
/// delta gives the transcendental condition.
pub fn delta_ground_energy_oracle(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Unsupported(format!(
            "the delta oracle covers finite alpha > 0, got {alpha}"
        )));
    }
    let g = |s: f64| s * (std::f64::consts::PI * s).tan() - 0.5 * alpha;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo * lo)
}

#[derive(Clone, Debug, Serialize)]
pub struct CourantRecord {
    pub index: usize,
    pub eigenvalue: f64,
    pub nodal_domains: usize,
    /// `n(λ_k)`, the number of eigenvalues up to and including `λ_k`'s cluster.
    pub bound: usize,
    pub holds: bool,
}

/// Nodal domain counts of eigenfunctions `0..count` against `n(λ_k)`.
pub fn courant_check(sol: &EigenSolution, count: usize, n: usize) -> Result<Vec<CourantRecord>> {
    (0..count.min(sol.len()))
        .map(|k| {
            let nodal_domains = nodal_domain_count(sol.eigenfunction(k), n)?;
            let bound = sol.counting_function(k);
            Ok(CourantRecord {
                index: k,
                eigenvalue: sol.eigenvalue(k),
                nodal_domains,
                bound,
                holds: nodal_domains <= bound,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcitedDeltaRecord {
    pub alpha: f64,
    pub residual: f64,
    pub bound: f64,
    pub holds: bool,
    /// Index of the eigenvalue of `h(v + α δ_{x0})` closest to `λ_k`.
    pub rank: usize,
    pub rank_group: (usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcitedDeltaReport {
    pub index: usize,
    pub eigenvalue: f64,
    pub node: f64,
    pub value_at_node: f64,
    pub records: Vec<ExcitedDeltaRecord>,
}

impl ExcitedDeltaReport {
    pub fn holds(&self) -> bool {
        self.records.iter().all(|r| r.holds)
    }
}

/// Places `α δ_{x0}` at a node `x0` of the excited state `φ_k` and measures
/// `‖H_α φ_k - λ_k φ_k‖` for each `α`.
pub fn excited_delta_experiment(
    v: &Potential,
    k: usize,
    alphas: &[f64],
    cutoff: usize,
) -> Result<ExcitedDeltaReport> {
    let sol = solve(v, cutoff)?;
    if k == 0 || k >= sol.len() {
        return Err(Error::InvalidArgument(format!(
            "excited index must be in 1..{}, got {k}",
            sol.len()
        )));
    }
    excited_delta_from(&sol, v, k, alphas)
}

fn excited_delta_from(sol: &EigenSolution, v: &Potential, k: usize, alphas: &[f64]) -> Result<ExcitedDeltaReport> {
    let phi = sol.eigenfunction(k);
    let lambda = sol.eigenvalue(k);
    let node = find_node(phi, oversampled_len(sol.cutoff()))?;
    let bound = 1e-10 * (1.0 + lambda.abs());
    let records = alphas
        .iter()
        .map(|&alpha| {
            let op = assemble_hamiltonian(&v.clone().with_delta(node, alpha), sol.cutoff())?;
            let residual = op.residual(phi, lambda);
            let perturbed = eigensolve(&op)?;
            let rank = perturbed
                .eigenvalues()
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
                .map(|(j, _)| j)
                .unwrap_or(0);
            let g = perturbed.group_of(rank);
            Ok(ExcitedDeltaRecord {
                alpha,
                residual,
                bound,
                holds: residual <= bound,
                rank,
                rank_group: (g.start, g.end),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExcitedDeltaReport {
        index: k,
        eigenvalue: lambda,
        node,
        value_at_node: phi.eval_real(node),
        records,
    })
}

/// Per-sample observables of a potential ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSample {
    pub seed_index: usize,
    pub deltas: usize,
    pub ground_energy: f64,
    pub gap: f64,
    pub min_ground_state: f64,
    pub argmin: f64,
    pub ground_nodal_domains: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleReport {
    pub seed: u64,
    pub cutoff: usize,
    pub grid: usize,
    pub size: usize,
    pub sampler: Sampler,
    pub min_gap: f64,
    pub max_gap: f64,
    pub min_ground_state: f64,
    pub positivity_failures: usize,
    pub gap_failures: usize,
    pub samples: Vec<EnsembleSample>,
}

impl EnsembleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,deltas,ground_energy,gap,min_ground_state,argmin,ground_nodal_domains\n");
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.seed_index, s.deltas, s.ground_energy, s.gap, s.min_ground_state, s.argmin, s.ground_nodal_domains
            )
            .expect("string write");
        }
        out
    }
}

/// Solves `size` sampled potentials and records the spectral gap and the ground
/// state's minimum over an `n`-point grid (`n >= 8K`) for each.
pub fn potential_ensemble(
    sampler: &Sampler,
    size: usize,
    cutoff: usize,
    n: usize,
    seed: u64,
) -> Result<EnsembleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let potentials: Vec<Potential> = (0..size).map(|_| sampler.sample(&mut rng)).collect();
    potentials_report(&potentials, sampler, cutoff, n, seed)
}

fn potentials_report(
    potentials: &[Potential],
    sampler: &Sampler,
    cutoff: usize,
    n: usize,
    seed: u64,
) -> Result<EnsembleReport> {
    let samples = potentials
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let sol = solve(v, cutoff)?;
            let p = positivity_check(&sol, n)?;
            Ok(EnsembleSample {
                seed_index: i,
                deltas: v.deltas().len(),
                ground_energy: sol.ground_energy(),
                gap: spectral_gap(&sol)?,
                min_ground_state: p.min_value,
                argmin: p.argmin,
                ground_nodal_domains: nodal_domain_count(sol.ground_state(), n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&EnsembleSample) -> f64, init: f64, op: fn(f64, f64) -> f64| {
        samples.iter().map(f).fold(init, op)
    };
    Ok(EnsembleReport {
        seed,
        cutoff,
        grid: n,
        size: samples.len(),
        sampler: sampler.clone(),
        min_gap: fold(|s| s.gap, f64::INFINITY, f64::min),
        max_gap: fold(|s| s.gap, 0.0, f64::max),
        min_ground_state: fold(|s| s.min_ground_state, f64::INFINITY, f64::min),
        positivity_failures: samples
            .iter()
            .filter(|s| s.min_ground_state <= 0.0 || s.ground_nodal_domains != 1)
            .count(),
        gap_failures: samples.iter().filter(|s| s.gap <= 0.0).count(),
        samples,
    })
}

/// Spectral gaps over an explicit list of potentials.
pub fn gap_ensemble(potentials: &[Potential], cutoff: usize) -> Result<EnsembleReport> {
    potentials_report(potentials, &Sampler::smooth(0.0), cutoff, oversampled_len(cutoff), 0)
}

#[derive(Clone, Debug, Serialize)]
pub struct CourantEnsembleReport {
    pub seed: u64,
    pub cutoff: usize,
    pub size: usize,
    pub eigenfunctions: usize,
    pub failures: usize,
    pub records: Vec<Vec<CourantRecord>>,
}

pub fn courant_ensemble(
    sampler: &Sampler,
    size: usize,
    cutoff: usize,
    eigenfunctions: usize,
    n: usize,
    seed: u64,
) -> Result<CourantEnsembleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..size)
        .map(|_| {
            let sol = solve(&sampler.sample(&mut rng), cutoff)?;
            courant_check(&sol, eigenfunctions, n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CourantEnsembleReport {
        seed,
        cutoff,
        size,
        eigenfunctions,
        failures: records.iter().flatten().filter(|r| !r.holds).count(),
        records,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GnsReport {
    pub seed: u64,
    pub cutoff: usize,
    pub grid: usize,
    pub trials: usize,
    /// `max ‖f‖_∞ / (2 ‖f‖^{1/2} ‖f‖_{H¹}^{1/2})`.
    pub max_ratio: f64,
    pub failures: usize,
}

/// Random trigonometric polynomial with coefficients uniform in the unit square
/// and damped by `(1 + |m|)^{-s}`, `s` uniform in `[0, 2)`.
pub fn random_function<R: Rng + ?Sized>(rng: &mut R, cutoff: usize) -> PeriodicFunction {
    let s: f64 = rng.random_range(0.0..2.0);
    let k = cutoff as i64;
    let coeffs = (-k..=k)
        .map(|m| {
            let w = (1.0 + m.abs() as f64).powf(-s);
            num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * w
        })
        .collect();
    PeriodicFunction::new(cutoff, coeffs).expect("length")
}

/// Checks `‖f‖_∞ <= 2 ‖f‖^{1/2} ‖f‖_{H¹}^{1/2}` on random functions, with the
/// sup norm taken on a 64-fold oversampled grid.
pub fn gns_sweep(trials: usize, cutoff: usize, seed: u64) -> Result<GnsReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = (64 * (2 * cutoff + 1)).next_power_of_two();
    let mut max_ratio = 0.0f64;
    let mut failures = 0;
    for _ in 0..trials {
        let f = random_function(&mut rng, cutoff);
        let sup = linf_norm(&f, grid)?;
        let ratio = sup / (2.0 * (f.l2_norm() * f.h1_norm()).sqrt());
        failures += usize::from(ratio > 1.0);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(GnsReport {
        seed,
        cutoff,
        grid,
        trials,
        max_ratio,
        failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DualReconstructionReport {
    pub seed: u64,
    pub cutoff: usize,
    pub pairs: usize,
    pub tests_per_pair: usize,
    pub max_error: f64,
    /// Largest `|Σ|c_j|²/(1-λ₀+λ_j)|` seen, a truncated norm of the functional.
    pub max_weighted_sum: f64,
}

/// Expands random functionals `f` in the eigenbasis of random `h(v)` and
/// reconstructs `f(φ)` for random band-limited `φ`.
pub fn dual_reconstruction_sweep(
    pairs: usize,
    tests_per_pair: usize,
    cutoff: usize,
    seed: u64,
) -> Result<DualReconstructionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::new(5.0, 5.0);
    let mut max_error = 0.0f64;
    let mut max_weighted_sum = 0.0f64;
    for _ in 0..pairs {
        let v = sampler.sample(&mut rng);
        let f = sampler.sample(&mut rng);
        let sol = solve(&v, cutoff)?;
        let rep = eigenbasis_dual_coefficients(&f, &sol);
        max_weighted_sum = max_weighted_sum.max(rep.weighted_sum);
        // Deltas folded into mode coefficients: exact on functions band-limited at `cutoff`.
        let folded = f.fold(cutoff);
        for _ in 0..tests_per_pair {
            let phi = random_function(&mut rng, cutoff);
            let direct = folded.apply(&phi)?;
            let err = (rep.reconstruct(&sol, &phi) - direct).norm();
            max_error = max_error.max(err);
        }
    }
    Ok(DualReconstructionReport {
        seed,
        cutoff,
        pairs,
        tests_per_pair,
        max_error,
        max_weighted_sum,
    })
}

/// Parameters shared by the named experiments.
#[derive(Clone, Debug, Serialize)]
pub struct LabParameters {
    pub seed: u64,
    pub cutoff: usize,
    pub grid: usize,
    pub ensemble_size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub assertion: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabReport {
    pub experiment: String,
    pub parameters: LabParameters,
    pub observations: Value,
    pub verdicts: Vec<Verdict>,
    /// Per-sample observables for plotting, when the experiment has samples.
    #[serde(skip)]
    pub csv: Option<String>,
}

impl LabReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

pub const EXPERIMENTS: &[&str] = &[
    "positivity",
    "gap",
    "courant",
    "excited-delta",
    "delta-oracle",
    "gns",
    "dual-reconstruction",
];

fn verdict(assertion: &str, passed: bool) -> Verdict {
    Verdict {
        assertion: assertion.into(),
        passed,
    }
}

/// Runs a named experiment; see [`EXPERIMENTS`].
pub fn run_experiment(name: &str, p: &LabParameters) -> Result<LabReport> {
    let sampler = Sampler::new(5.0, 5.0);
    let (observations, verdicts, csv) = match name {
        "positivity" | "gap" => {
            let r = potential_ensemble(&sampler, p.ensemble_size, p.cutoff, p.grid, p.seed)?;
            let verdicts = if name == "positivity" {
                vec![
                    verdict("ground state minimum > 0 on the grid", r.positivity_failures == 0),
                    verdict("spectral gap > 0", r.gap_failures == 0),
                ]
            } else {
                vec![verdict("spectral gap > 0", r.gap_failures == 0)]
            };
            let csv = r.to_csv();
            (serde_json::to_value(&r)?, verdicts, Some(csv))
        }
        "courant" => {
            let r = courant_ensemble(&sampler, p.ensemble_size, p.cutoff, 12, p.grid, p.seed)?;
            let v = vec![verdict("nodal domains <= n(lambda_k) for k < 12", r.failures == 0)];
            (serde_json::to_value(&r)?, v, None)
        }
        "excited-delta" => {
            let alphas = [-1.0, 1.0, 10.0];
            let cos = Potential::embed(&PeriodicFunction::from_cos_sin(0.0, &[(1.0, 0.0)]));
            let mut reports = Vec::new();
            for v in [Potential::zero(), cos] {
                let sol = solve(&v, p.cutoff)?;
                for k in [1, 2] {
                    reports.push(excited_delta_from(&sol, &v, k, &alphas)?);
                }
            }
            let ok = reports.iter().all(ExcitedDeltaReport::holds);
            let v = vec![verdict("residual <= 1e-10 (1 + |lambda_k|) for every alpha", ok)];
            (serde_json::to_value(&reports)?, v, None)
        }
        "delta-oracle" => {
            let mut rows = Vec::new();
            let mut ok = true;
            for alpha in [0.5, 1.0, 5.0] {
                let exact = delta_ground_energy_oracle(alpha)?;
                let galerkin = solve(&Potential::delta(0.0, alpha), p.cutoff)?.ground_energy();
                let rel = (galerkin - exact).abs() / exact;
                ok &= rel <= 1e-3;
                rows.push(json!({"alpha": alpha, "oracle": exact, "galerkin": galerkin, "relative_error": rel}));
            }
            let v = vec![verdict("relative error <= 1e-3", ok)];
            (Value::Array(rows), v, None)
        }
        "gns" => {
            let r = gns_sweep(p.ensemble_size, p.cutoff, p.seed)?;
            let v = vec![verdict("sup <= 2 |f|^1/2 |f|_H1^1/2", r.failures == 0)];
            (serde_json::to_value(&r)?, v, None)
        }
        "dual-reconstruction" => {
            let r = dual_reconstruction_sweep(p.ensemble_size, 20, p.cutoff, p.seed)?;
            let v = vec![verdict("reconstruction error <= 1e-8", r.max_error <= 1e-8)];
            (serde_json::to_value(&r)?, v, None)
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown experiment {other:?}; expected one of {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    Ok(LabReport {
        experiment: name.into(),
        parameters: p.clone(),
        observations,
        verdicts,
        csv,
    })
}
