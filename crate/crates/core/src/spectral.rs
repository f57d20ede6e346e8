//! Galerkin truncation of `h(v) = -Δ + v` in the plane-wave basis and its spectrum.
//!
//! The quadratic form `q(φ, ψ) = ∫ conj(φ') ψ' + v(conj(φ) ψ)` restricted to
//! `span{e_m : |m| <= K}` has matrix entries
//!
//! ```text
//! H_jk = k² δ_jk + v(conj(e_j) e_k) = k² δ_jk + (2π)^(-1/2) d_{k-j}
//! ```
//!
//! which only probe dual coefficients with `|k - j| <= 2K`, so deltas are folded
//! at `2K` and the matrix is exact for the truncated form.
//!
//! Real potentials commute with complex conjugation, so `H` is block-real in the
//! basis `{1, cos mx, sin mx}`. [`eigensolve`] diagonalises that real symmetric
//! matrix, which makes every eigenfunction (degenerate ones included) real-valued.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::fourier::{
    pointwise_multiply, FunctionJson, PeriodicFunction, Potential, FRAC_1_SQRT_2PI,
};

/// Relative clustering tolerance for degenerate eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Scaled residual bound `‖Hφ - λφ‖ <= RESIDUAL_TOL (1 + |λ|)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

const PHASE_TOL: f64 = 1e-10;

/// The assembled Hermitian Galerkin matrix, rows and columns indexed by
/// `m = -K..=K`.
#[derive(Clone, Debug)]
pub struct GalerkinOperator {
    cutoff: usize,
    matrix: Mat<Complex64>,
}

impl GalerkinOperator {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn matrix(&self) -> faer::MatRef<'_, Complex64> {
        self.matrix.as_ref()
    }

    /// `H_jk` addressed by mode numbers.
    pub fn entry(&self, j: i64, k: i64) -> Complex64 {
        let off = self.cutoff as i64;
        self.matrix[((j + off) as usize, (k + off) as usize)]
    }

    /// `max |H - H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in j..n {
                worst = worst.max((self.matrix[(j, k)] - self.matrix[(k, j)].conj()).norm());
            }
        }
        worst
    }

    /// `max |H_{-j,-k} - conj(H_jk)|`; vanishes for real potentials.
    pub fn conjugation_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let mirrored = self.matrix[(n - 1 - j, n - 1 - k)];
                worst = worst.max((mirrored - self.matrix[(j, k)].conj()).norm());
            }
        }
        worst
    }

    /// Coefficients of `H f` (the function is resized to the operator cutoff).
    pub fn apply(&self, f: &PeriodicFunction) -> PeriodicFunction {
        let f = f.resized(self.cutoff);
        let n = self.dim();
        let coeffs = (0..n)
            .map(|j| (0..n).map(|k| self.matrix[(j, k)] * f.coeffs()[k]).sum())
            .collect();
        PeriodicFunction::new(self.cutoff, coeffs).expect("dimension matches")
    }

    /// `‖H f - λ f‖₂`.
    pub fn residual(&self, f: &PeriodicFunction, lambda: f64) -> f64 {
        let hf = self.apply(f);
        let f = f.resized(self.cutoff);
        hf.coeffs()
            .iter()
            .zip(f.coeffs())
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Assembles the Galerkin matrix of `h(v)` at cutoff `K`.
pub fn assemble_hamiltonian(v: &Potential, cutoff: usize) -> Result<GalerkinOperator> {
    let defect = v.realness_defect();
    if !v.is_real() {
        return Err(Error::NotReal { defect });
    }
    let k = cutoff as i64;
    let folded: Vec<Complex64> = (-2 * k..=2 * k)
        .map(|m| v.folded_coeff(m) * FRAC_1_SQRT_2PI)
        .collect();
    let n = 2 * cutoff + 1;
    let matrix = Mat::from_fn(n, n, |r, c| {
        // r = j + K, c = k + K, so k - j = c - r.
        let mut h = folded[(c as i64 - r as i64 + 2 * k) as usize];
        if r == c {
            let m = c as f64 - k as f64;
            h += m * m;
        }
        h
    });
    Ok(GalerkinOperator { cutoff, matrix })
}

/// Index of mode `m` in `-K..=K` order.
fn mode_index(m: i64, cutoff: usize) -> usize {
    (m + cutoff as i64) as usize
}

/// Real basis `{e_0, c_1, s_1, c_2, s_2, ...}` with `c_m = (e_m + e_-m)/√2` and
/// `s_m = -i (e_m - e_-m)/√2`, each expressed as its nonzero plane-wave entries.
fn real_basis(cutoff: usize) -> Vec<Vec<(usize, Complex64)>> {
    let s = FRAC_1_SQRT_2;
    let mut basis = vec![vec![(mode_index(0, cutoff), Complex64::new(1.0, 0.0))]];
    for m in 1..=cutoff as i64 {
        basis.push(vec![
            (mode_index(m, cutoff), Complex64::new(s, 0.0)),
            (mode_index(-m, cutoff), Complex64::new(s, 0.0)),
        ]);
        basis.push(vec![
            (mode_index(m, cutoff), Complex64::new(0.0, -s)),
            (mode_index(-m, cutoff), Complex64::new(0.0, s)),
        ]);
    }
    basis
}

/// Plane-wave coefficients of a vector given in the real basis.
fn from_real_basis(x: impl Fn(usize) -> f64, cutoff: usize) -> PeriodicFunction {
    let s = FRAC_1_SQRT_2;
    let mut f = PeriodicFunction::zeros(cutoff);
    let coeffs = f.coeffs_mut();
    coeffs[mode_index(0, cutoff)] = Complex64::new(x(0), 0.0);
    for m in 1..=cutoff {
        let (c, sn) = (x(2 * m - 1), x(2 * m));
        coeffs[mode_index(m as i64, cutoff)] = Complex64::new(s * c, -s * sn);
        coeffs[mode_index(-(m as i64), cutoff)] = Complex64::new(s * c, s * sn);
    }
    f
}

/// Sorted spectrum and real orthonormal eigenfunctions of a truncated `h(v)`.
///
/// Indices are zero-based: `eigenvalues[0]` is the ground-state energy.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    cutoff: usize,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<PeriodicFunction>,
    group_ids: Vec<usize>,
    residuals: Vec<f64>,
}

impl EigenSolution {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[PeriodicFunction] {
        &self.eigenfunctions
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn eigenfunction(&self, k: usize) -> &PeriodicFunction {
        &self.eigenfunctions[k]
    }

    pub fn ground_state(&self) -> &PeriodicFunction {
        &self.eigenfunctions[0]
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `‖Hφ_k - λ_k φ_k‖₂` for every pair, as measured after the solve.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Degeneracy-group id of each eigenvalue (ids increase with energy).
    pub fn group_ids(&self) -> &[usize] {
        &self.group_ids
    }

    /// Indices of the degenerate group containing `k`.
    pub fn group_of(&self, k: usize) -> std::ops::Range<usize> {
        let g = self.group_ids[k];
        let start = self.group_ids.iter().position(|&id| id == g).unwrap();
        let end = self.group_ids.iter().rposition(|&id| id == g).unwrap() + 1;
        start..end
    }

    /// Spectral counting function `n(λ_k) = #{j : λ_j <= λ_k}`, with degenerate
    /// clusters counted in full.
    pub fn counting_function(&self, k: usize) -> usize {
        self.group_of(k).end
    }

    pub fn to_json(&self) -> EigenSolutionJson {
        EigenSolutionJson {
            cutoff: self.cutoff,
            eigenvalues: self.eigenvalues.clone(),
            eigenfunctions: self.eigenfunctions.iter().map(|f| f.to_json()).collect(),
        }
    }

    /// One row per eigenvalue: `index,value,gap_to_previous,degeneracy_group`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value,gap_to_previous,degeneracy_group\n");
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let gap = if k == 0 {
                String::new()
            } else {
                format!("{}", lambda - self.eigenvalues[k - 1])
            };
            out.push_str(&format!("{k},{lambda},{gap},{}\n", self.group_ids[k]));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSolutionJson {
    #[serde(rename = "K")]
    pub cutoff: usize,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<FunctionJson>,
}

/// Full dense diagonalisation of the Galerkin matrix.
///
/// Eigenvalues ascend; each eigenfunction is real with its sign fixed so that the
/// first non-negligible component in the order `1, cos x, sin x, cos 2x, ...` is
/// positive (for the ground state this is the mean).
pub fn eigensolve(op: &GalerkinOperator) -> Result<EigenSolution> {
    let cutoff = op.cutoff;
    let n = op.dim();
    let basis = real_basis(cutoff);

    let mut imag_defect = 0.0f64;
    let mut real = Mat::<f64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(p, up) in &basis[a] {
                for &(q, uq) in &basis[b] {
                    acc += up.conj() * op.matrix[(p, q)] * uq;
                }
            }
            imag_defect = imag_defect.max(acc.im.abs());
            real[(a, b)] = acc.re;
            real[(b, a)] = acc.re;
        }
    }
    if imag_defect > 1e-9 {
        return Err(Error::NotReal {
            defect: imag_defect,
        });
    }

    let evd = real
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut values: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let mut vectors = evd.U().to_owned();

    // The dense solver is backward stable only relative to ‖H‖ ~ K², which is far
    // too loose for the low modes; refinement recovers componentwise accuracy.
    let mut residuals = Vec::new();
    for _ in 0..MAX_REFINEMENTS {
        (vectors, values) = refine_eigenpairs(&real, &vectors);
        vectors = orthonormalize(vectors);
        residuals = eigen_residuals(&real, &vectors, &values);
        if residuals
            .iter()
            .zip(&values)
            .all(|(r, l)| *r <= RESIDUAL_TOL * (1.0 + l.abs()))
        {
            break;
        }
    }
    if let Some((index, (&residual, &lambda))) = residuals
        .iter()
        .zip(&values)
        .enumerate()
        .find(|(_, (r, l))| !(**r <= RESIDUAL_TOL * (1.0 + l.abs())))
    {
        return Err(Error::Residual {
            index,
            residual,
            bound: RESIDUAL_TOL * (1.0 + lambda.abs()),
        });
    }

    // Refinement can swap nearly equal eigenvalues; restore ascending order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let residuals: Vec<f64> = order.iter().map(|&k| residuals[k]).collect();
    let mut vectors = Mat::from_fn(n, n, |a, k| vectors[(a, order[k])]);

    for k in 0..n {
        let pivot = (0..n).map(|a| vectors[(a, k)]).find(|x| x.abs() > PHASE_TOL);
        if matches!(pivot, Some(p) if p < 0.0) {
            for a in 0..n {
                vectors[(a, k)] = -vectors[(a, k)];
            }
        }
    }

    let mut group_ids = Vec::with_capacity(n);
    let mut group = 0;
    for k in 0..n {
        if k > 0 && values[k] - values[k - 1] > DEGENERACY_TOL * (1.0 + values[k - 1].abs()) {
            group += 1;
        }
        group_ids.push(group);
    }

    let eigenfunctions = (0..n)
        .map(|k| from_real_basis(|a| vectors[(a, k)], cutoff))
        .collect();

    Ok(EigenSolution {
        cutoff,
        eigenvalues: values,
        eigenfunctions,
        group_ids,
        residuals,
    })
}

const MAX_REFINEMENTS: usize = 3;

/// One step of Ogita–Aishima refinement of an approximate eigendecomposition
/// `A X ≈ X Λ` of a real symmetric matrix. Converges quadratically; pairs whose
/// eigenvalues cannot be told apart at the current accuracy are only
/// re-orthogonalised.
fn refine_eigenpairs(a: &Mat<f64>, x: &Mat<f64>) -> (Mat<f64>, Vec<f64>) {
    let n = a.nrows();
    let r = Mat::<f64>::identity(n, n) - x.transpose() * x;
    let s = x.transpose() * (a * x);
    let lambda: Vec<f64> = (0..n).map(|i| s[(i, i)] / (1.0 - r[(i, i)])).collect();
    let mut off = 0.0;
    for j in 0..n {
        for i in 0..n {
            let d = if i == j { s[(i, i)] - lambda[i] } else { s[(i, j)] };
            off += d * d;
        }
    }
    let delta = 2.0 * (off.sqrt() + a.norm_l2() * r.norm_l2());
    let e = Mat::<f64>::from_fn(n, n, |i, j| {
        if i != j && (lambda[i] - lambda[j]).abs() > delta {
            (s[(i, j)] + lambda[j] * r[(i, j)]) / (lambda[j] - lambda[i])
        } else {
            0.5 * r[(i, j)]
        }
    });
    (x + x * &e, lambda)
}

/// Iterated Löwdin step `X ← X (I + R/2)` with `R = I - XᵀX`.
///
/// A refinement step divides rounding errors of size `ε‖A‖` by the gap of each
/// pair it separates, so vectors of a close but resolved pair can lose
/// orthogonality while keeping small residuals. The symmetric correction mixes
/// only along such pairs and therefore changes residuals by `O(gap · R)`.
fn orthonormalize(mut x: Mat<f64>) -> Mat<f64> {
    let n = x.ncols();
    for _ in 0..4 {
        let r = Mat::<f64>::identity(n, n) - x.transpose() * &x;
        let defect = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max(r[(i, j)].abs()));
        if defect < 4.0 * f64::EPSILON {
            break;
        }
        x = &x + &x * (r * 0.5);
    }
    x
}

fn eigen_residuals(a: &Mat<f64>, x: &Mat<f64>, lambda: &[f64]) -> Vec<f64> {
    let ax = a * x;
    (0..x.ncols())
        .map(|k| {
            (0..x.nrows())
                .map(|i| (ax[(i, k)] - lambda[k] * x[(i, k)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Assembles and solves in one step.
pub fn solve(v: &Potential, cutoff: usize) -> Result<EigenSolution> {
    eigensolve(&assemble_hamiltonian(v, cutoff)?)
}

/// `λ₂ - λ₁`.
pub fn spectral_gap(sol: &EigenSolution) -> Result<f64> {
    if sol.len() < 2 {
        return Err(Error::InvalidArgument(
            "spectral gap needs at least two eigenvalues".into(),
        ));
    }
    Ok(sol.eigenvalues[1] - sol.eigenvalues[0])
}

/// Outcome of a form-boundedness sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KlmnReport {
    pub epsilon: f64,
    pub trials: usize,
    pub cutoff: usize,
    /// `‖v‖_{H⁻¹}` truncated at `2K`, the band of `|φ|²`.
    pub dual_norm: f64,
    /// Constant `C_ε` in `|v(|φ|²)| <= ‖v‖ (ε ‖φ‖²_{H¹} + C_ε ‖φ‖²)`.
    pub young_constant: f64,
    pub max_ratio: f64,
    pub holds: bool,
}

/// Checks `|v(|φ|²)| <= ‖v‖_{H⁻¹} (ε ‖φ‖²_{H¹} + C_ε ‖φ‖²_{L²})` on random `φ`.
///
/// The constant comes from `‖|φ|²‖_{H¹} <= 2 ‖φ‖_∞ ‖φ‖_{H¹}`, the sup-norm bound
/// `‖φ‖_∞ <= 2 ‖φ‖^{1/2} ‖φ‖_{H¹}^{1/2}` and Young's inequality, which together give
/// `4 a^{3/2} b^{1/2} <= ε a² + (27/ε³) b²`. The reported ratio is LHS / RHS.
pub fn klmn_check(
    v: &Potential,
    epsilon: f64,
    trials: usize,
    cutoff: usize,
    seed: u64,
) -> Result<KlmnReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = v.dual_norm(2 * cutoff).value;
    let young = 27.0 / epsilon.powi(3);
    let mut max_ratio = 0.0f64;
    for _ in 0..trials {
        let phi = random_trial_function(&mut rng, cutoff);
        let density = pointwise_multiply(&phi.conj(), &phi);
        let lhs = v.pair(&density).norm();
        let rhs = norm * (epsilon * phi.h1_norm().powi(2) + young * phi.l2_norm().powi(2));
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
    }
    Ok(KlmnReport {
        epsilon,
        trials,
        cutoff,
        dual_norm: norm,
        young_constant: young,
        max_ratio,
        holds: max_ratio <= 1.0,
    })
}

fn random_trial_function(rng: &mut ChaCha8Rng, cutoff: usize) -> PeriodicFunction {
    // Alternate flat and decaying spectra so both regimes of the bound are hit.
    let decay: f64 = rng.random_range(0.0..2.0);
    let k = cutoff as i64;
    let coeffs = (-k..=k)
        .map(|m| {
            let w = (1.0 + m.abs() as f64).powf(-decay);
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * w
        })
        .collect();
    PeriodicFunction::new(cutoff, coeffs).expect("length")
}

/// A functional expressed through an eigenbasis: `c_j = f(φ_j)`.
#[derive(Clone, Debug)]
pub struct DualRepresentation {
    pub coeffs: Vec<Complex64>,
    /// `Σ_j |c_j|² / (1 - λ₁ + λ_j)` over the truncated spectrum.
    pub weighted_sum: f64,
}

impl DualRepresentation {
    /// `Σ_j c_j ⟨φ_j, φ⟩`.
    pub fn reconstruct(&self, sol: &EigenSolution, phi: &PeriodicFunction) -> Complex64 {
        self.coeffs
            .iter()
            .zip(sol.eigenfunctions())
            .map(|(c, basis)| c * basis.inner(phi))
            .sum()
    }
}

pub fn eigenbasis_dual_coefficients(f: &Potential, sol: &EigenSolution) -> DualRepresentation {
    let coeffs: Vec<Complex64> = sol.eigenfunctions().iter().map(|phi| f.pair(phi)).collect();
    let ground = sol.ground_energy();
    let weighted_sum = coeffs
        .iter()
        .zip(sol.eigenvalues())
        .map(|(c, &lambda)| c.norm_sqr() / (1.0 - ground + lambda))
        .sum();
    DualRepresentation {
        coeffs,
        weighted_sum,
    }
}
