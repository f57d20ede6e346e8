//! Non-interacting N-fermion states built from the eigenorbitals of `h(v)`.

mod density;
pub mod fock;
pub mod tensor;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{grid_sample, grid_to_coeffs, oversampled_len, pointwise_multiply, Grid, PeriodicFunction};
use crate::spectral::EigenSolution;

pub use density::{Density, DensityJson, CLAMP_TOL};
pub use fock::{fock_apply, one_rdm, FockJson, FockOp, FockVector};
pub use tensor::{brute_force_1rdm, brute_force_overlap_density, GridWavefunction};

/// Eigenvalues of a density matrix below this are rejected.
pub const NEGATIVE_OCCUPATION_TOL: f64 = 1e-8;
/// Eigenvalues of a density matrix at or below this are dropped.
pub const OCCUPATION_FLOOR: f64 = 1e-10;
/// Orthogonality tolerance for excitation targets.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Convex weights must sum to one to this tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// The Slater determinant `Φ_{j1..jN}` over eigenorbitals of a solved `h(v)`.
#[derive(Clone, Debug)]
pub struct SlaterState<'a> {
    sol: &'a EigenSolution,
    occupied: Vec<usize>,
}

impl<'a> SlaterState<'a> {
    /// Indices may be given in any order; they are stored sorted.
    pub fn new(sol: &'a EigenSolution, occupied: &[usize]) -> Result<Self> {
        let mut occ = occupied.to_vec();
        occ.sort_unstable();
        for w in occ.windows(2) {
            if w[0] == w[1] {
                return Err(Error::PauliViolation(w[0]));
            }
        }
        if let Some(&j) = occ.iter().find(|&&j| j >= sol.len()) {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: sol.len(),
            });
        }
        Ok(Self { sol, occupied: occ })
    }

    /// The determinant over the `N` lowest orbitals.
    pub fn ground(sol: &'a EigenSolution, particles: usize) -> Result<Self> {
        Self::new(sol, &(0..particles).collect::<Vec<_>>())
    }

    pub fn solution(&self) -> &'a EigenSolution {
        self.sol
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn particles(&self) -> usize {
        self.occupied.len()
    }

    /// `Σ_j λ_j` over the occupied orbitals.
    pub fn energy(&self) -> f64 {
        self.occupied.iter().map(|&j| self.sol.eigenvalue(j)).sum()
    }

    /// `Σ_j |φ_j|²`, without the open-shell check of [`slater_density`].
    pub fn density(&self) -> Density {
        let weights = vec![1.0; self.occupied.len()];
        orbital_density(self.sol.eigenfunctions(), &self.occupied, &weights, self.particles())
    }

    /// The occupied orbitals with occupation one each.
    pub fn natural_orbitals(&self) -> NaturalOrbitalDecomposition {
        NaturalOrbitalDecomposition {
            orbitals: self
                .occupied
                .iter()
                .map(|&j| self.sol.eigenfunction(j).clone())
                .collect(),
            occupations: vec![1.0; self.occupied.len()],
        }
    }

    /// The determinant as a Fock vector over the first `orbitals` eigenorbitals.
    pub fn to_fock(&self, orbitals: usize) -> Result<FockVector> {
        FockVector::determinant(orbitals, &self.occupied)
    }

    /// `ρ_{Ψ,Φ}` for `Φ = a(target)* a(φ_k) Ψ`, which equals `conj(φ_k)·target` when
    /// `k` is occupied and vanishes otherwise.
    pub fn overlap_density(&self, k: usize, target: &PeriodicFunction) -> Result<PeriodicFunction> {
        if k >= self.sol.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.sol.len(),
            });
        }
        let no = self.natural_orbitals();
        match self.occupied.iter().position(|&j| j == k) {
            Some(pos) => no.overlap_density(pos, target),
            None => {
                no.check_orthogonal(target)?;
                Ok(PeriodicFunction::zeros(self.sol.cutoff() + target.cutoff()))
            }
        }
    }
}

/// `Σ t_j |f_j|²` evaluated exactly on a grid that resolves the squared band.
fn orbital_density(
    functions: &[PeriodicFunction],
    indices: &[usize],
    weights: &[f64],
    particles: usize,
) -> Density {
    let cutoff = indices
        .iter()
        .map(|&j| functions[j].cutoff())
        .max()
        .unwrap_or(0);
    let n = oversampled_len(cutoff);
    let mut acc = vec![0.0; n];
    for (&j, &t) in indices.iter().zip(weights) {
        let g = grid_sample(&functions[j], n).expect("oversampled grid");
        for (a, v) in acc.iter_mut().zip(g.values()) {
            *a += t * v.norm_sqr();
        }
    }
    let rho = grid_to_coeffs(&Grid::from_real(&acc), 2 * cutoff).expect("oversampled grid");
    Density::from_function(&rho, particles)
}

/// `ρ = Σ_{j ∈ occupied} |φ_j|²`.
///
/// Occupying exactly the `N` lowest orbitals when `λ_{N-1}` and `λ_N` are
/// degenerate is refused, since the pure ground state is then not unique; use
/// [`ground_state_density`] or [`ensemble_density`] instead.
pub fn slater_density(sol: &EigenSolution, occupied: &[usize]) -> Result<Density> {
    let state = SlaterState::new(sol, occupied)?;
    let n = state.particles();
    let lowest = state.occupied.iter().copied().eq(0..n);
    if lowest && n > 0 && n < sol.len() && sol.group_ids()[n - 1] == sol.group_ids()[n] {
        return Err(Error::OpenShell {
            last: n - 1,
            next: n,
        });
    }
    Ok(state.density())
}

/// Convex combination `Σ t_j ρ_{Ψ_j}` of determinant densities.
pub fn ensemble_density(states: &[SlaterState<'_>], weights: &[f64]) -> Result<Density> {
    if states.is_empty() {
        return Err(Error::Weights("no states given".into()));
    }
    if states.len() != weights.len() {
        return Err(Error::Weights(format!(
            "{} states but {} weights",
            states.len(),
            weights.len()
        )));
    }
    if let Some(t) = weights.iter().find(|&&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::Weights(format!("weight {t} outside [0, 1]")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Weights(format!("weights sum to {total}, not 1")));
    }
    let sol = states[0].sol;
    let particles = states[0].particles();
    for s in states {
        if !std::ptr::eq(s.sol, sol) {
            return Err(Error::InvalidArgument(
                "ensemble members must share one eigenbasis".into(),
            ));
        }
        if s.particles() != particles {
            return Err(Error::InvalidArgument(
                "ensemble members must have the same particle number".into(),
            ));
        }
    }
    let densities: Vec<Density> = states.iter().map(SlaterState::density).collect();
    let parts: Vec<(f64, &Density)> = weights.iter().copied().zip(&densities).collect();
    Density::combine(&parts)
}

/// Ground-state determinants for `N` particles: the single closed-shell
/// determinant, or every way of filling the partially occupied degenerate group.
pub fn ground_state_determinants(sol: &EigenSolution, particles: usize) -> Result<Vec<SlaterState<'_>>> {
    if particles > sol.len() {
        return Err(Error::IndexOutOfRange {
            index: particles,
            len: sol.len(),
        });
    }
    if particles == 0 {
        return Ok(vec![SlaterState::new(sol, &[])?]);
    }
    let group = sol.group_of(particles - 1);
    let closed: Vec<usize> = (0..group.start).collect();
    let open = particles - group.start;
    combinations(group.clone(), open)
        .into_iter()
        .map(|pick| {
            let mut occ = closed.clone();
            occ.extend(pick);
            SlaterState::new(sol, &occ)
        })
        .collect()
}

/// Ground-state density of `N` particles: pure when the shell is closed, the
/// equal-weight ensemble over degenerate fillings otherwise.
pub fn ground_state_density(sol: &EigenSolution, particles: usize) -> Result<Density> {
    let states = ground_state_determinants(sol, particles)?;
    if states.len() == 1 {
        return Ok(states[0].density());
    }
    let weights = vec![1.0 / states.len() as f64; states.len()];
    ensemble_density(&states, &weights)
}

fn combinations(range: std::ops::Range<usize>, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let items: Vec<usize> = range.collect();
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        if items.len() - i < k {
            break;
        }
        for mut rest in combinations(first + 1..items[items.len() - 1] + 1, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Eigen-decomposition `γ_Ψ = Σ_k n_k |χ_k⟩⟨χ_k|` of a single-particle density
/// matrix, keeping `n_k > 1e-10` in decreasing order.
#[derive(Clone, Debug)]
pub struct NaturalOrbitalDecomposition {
    orbitals: Vec<PeriodicFunction>,
    occupations: Vec<f64>,
}

impl NaturalOrbitalDecomposition {
    pub fn rank(&self) -> usize {
        self.occupations.len()
    }

    pub fn orbitals(&self) -> &[PeriodicFunction] {
        &self.orbitals
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    /// `Σ n_k`, which equals `N ‖Ψ‖²`.
    pub fn total_occupation(&self) -> f64 {
        self.occupations.iter().sum()
    }

    /// `γ_Ψ(x, x) = Σ n_k |χ_k(x)|²`.
    pub fn density(&self, particles: usize) -> Density {
        let idx: Vec<usize> = (0..self.rank()).collect();
        orbital_density(&self.orbitals, &idx, &self.occupations, particles)
    }

    fn check_orthogonal(&self, target: &PeriodicFunction) -> Result<()> {
        let worst = self
            .orbitals
            .iter()
            .map(|chi| chi.inner(target).norm())
            .fold(0.0, f64::max);
        if worst > ORTHOGONALITY_TOL * target.l2_norm().max(1.0) {
            return Err(Error::NotOrthogonal(worst));
        }
        Ok(())
    }

    /// `n_k conj(χ_k) ψ` for a target `ψ` orthogonal to every natural orbital.
    /// Indices at or beyond the rank give the zero function.
    pub fn overlap_density(&self, k: usize, target: &PeriodicFunction) -> Result<PeriodicFunction> {
        self.check_orthogonal(target)?;
        let Some(chi) = self.orbitals.get(k) else {
            let cutoff = self.orbitals.first().map_or(0, PeriodicFunction::cutoff);
            return Ok(PeriodicFunction::zeros(cutoff + target.cutoff()));
        };
        Ok(pointwise_multiply(&chi.conj(), target).scale(Complex64::new(self.occupations[k], 0.0)))
    }
}

/// Diagonalizes `gamma`, expressed in the orthonormal `basis`, into natural orbitals.
pub fn natural_orbitals(
    gamma: MatRef<'_, Complex64>,
    basis: &[PeriodicFunction],
) -> Result<NaturalOrbitalDecomposition> {
    let dim = gamma.nrows();
    if gamma.ncols() != dim {
        return Err(Error::InvalidArgument("density matrix is not square".into()));
    }
    if basis.len() < dim {
        return Err(Error::InvalidArgument(format!(
            "density matrix of size {dim} needs as many basis functions, got {}",
            basis.len()
        )));
    }
    if dim == 0 {
        return Ok(NaturalOrbitalDecomposition {
            orbitals: Vec::new(),
            occupations: Vec::new(),
        });
    }
    let scale = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .map(|(a, b)| gamma[(a, b)].norm())
        .fold(0.0, f64::max);
    let defect = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .map(|(a, b)| (gamma[(a, b)] - gamma[(b, a)].conj()).norm())
        .fold(0.0, f64::max);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "density matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let sym = Mat::from_fn(dim, dim, |a, b| (gamma[(a, b)] + gamma[(b, a)].conj()) * 0.5);
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
    let u = evd.U();
    if let Some(&neg) = values.iter().find(|&&v| v < -NEGATIVE_OCCUPATION_TOL) {
        return Err(Error::NotPositiveSemidefinite(neg));
    }
    let cutoff = basis[..dim].iter().map(PeriodicFunction::cutoff).max().unwrap_or(0);
    let mut order: Vec<usize> = (0..dim).filter(|&k| values[k] > OCCUPATION_FLOOR).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let orbitals = order
        .iter()
        .map(|&k| {
            (0..dim).fold(PeriodicFunction::zeros(cutoff), |acc, a| {
                &acc + &basis[a].resized(cutoff).scale(u[(a, k)])
            })
        })
        .collect();
    Ok(NaturalOrbitalDecomposition {
        orbitals,
        occupations: order.iter().map(|&k| values[k]).collect(),
    })
}

/// Natural orbitals of a Fock vector whose orbital `j` is `basis[j]`.
pub fn fock_natural_orbitals(
    psi: &FockVector,
    basis: &[PeriodicFunction],
) -> Result<NaturalOrbitalDecomposition> {
    natural_orbitals(one_rdm(psi).as_ref(), basis)
}
