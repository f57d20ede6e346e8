//! Explicit N-particle wavefunctions on a tensor-product grid.
//!
//! Every quantity here is computed from its defining integral by trapezoidal
//! quadrature on `n` points per axis. For band-limited orbitals of cutoff `K` the
//! quadrature is exact as soon as `n >= 2K + 1`, which makes this an independent
//! check on the occupation-number algebra in [`super::fock`].

use faer::Mat;
use num_complex::Complex64;

use super::fock::FockVector;
use crate::error::{Error, Result};
use crate::fourier::{grid_sample, PeriodicFunction, TWO_PI};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest grid per axis: 64 for one or two particles, 24 for three.
pub fn max_axis_len(particles: usize) -> Option<usize> {
    match particles {
        1 | 2 => Some(64),
        3 => Some(24),
        _ => None,
    }
}

/// `Ψ(x_1, ..., x_N)` sampled at `x_i ∈ {2πj/n}`; the first coordinate varies slowest.
#[derive(Clone, Debug)]
pub struct GridWavefunction {
    n: usize,
    particles: usize,
    values: Vec<Complex64>,
}

impl GridWavefunction {
    fn check_size(particles: usize, n: usize) -> Result<()> {
        match max_axis_len(particles) {
            Some(max) if n <= max => Ok(()),
            Some(max) => Err(Error::Infeasible(format!(
                "{n} points per axis for {particles} particles (limit {max})"
            ))),
            None => Err(Error::Infeasible(format!(
                "tensor grids support 1 to 3 particles, got {particles}"
            ))),
        }
    }

    /// Expands a Fock vector over `orbitals` into antisymmetrized products
    /// `(N!)^{-1/2} det[φ_{s_a}(x_b)]`.
    pub fn from_fock(psi: &FockVector, orbitals: &[PeriodicFunction], n: usize) -> Result<Self> {
        let particles = psi.particles();
        Self::check_size(particles, n)?;
        if orbitals.len() < psi.orbitals() {
            return Err(Error::InvalidArgument(format!(
                "Fock space has {} orbitals but only {} functions were supplied",
                psi.orbitals(),
                orbitals.len()
            )));
        }
        let samples = orbitals[..psi.orbitals()]
            .iter()
            .map(|f| Ok(grid_sample(f, n)?.into_values()))
            .collect::<Result<Vec<_>>>()?;
        let perms = permutations(particles);
        let norm = 1.0 / (1..=particles).product::<usize>() as f64;
        let norm = norm.sqrt();
        let size = n.pow(particles as u32);
        let mut values = vec![ZERO; size];
        let mut digits = vec![0usize; particles];
        for (bits, amp) in psi.terms() {
            let occ: Vec<usize> = (0..psi.orbitals()).filter(|j| bits >> j & 1 == 1).collect();
            for (idx, value) in values.iter_mut().enumerate() {
                decode(idx, n, &mut digits);
                let det: Complex64 = perms
                    .iter()
                    .map(|(p, sign)| {
                        p.iter()
                            .enumerate()
                            .map(|(a, &b)| samples[occ[a]][digits[b]])
                            .product::<Complex64>()
                            * *sign
                    })
                    .sum();
                *value += amp * det * norm;
            }
        }
        Ok(Self {
            n,
            particles,
            values,
        })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn weight(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight().powi(self.particles as i32) * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `(a(φ)Ψ)(x_2..x_N) = √N ∫ conj φ(x) Ψ(x, x_2, ..., x_N) dx`.
    pub fn annihilate(&self, phi: &[Complex64]) -> Self {
        let rest = self.n.pow(self.particles as u32 - 1);
        let scale = (self.particles as f64).sqrt() * self.weight();
        let values = (0..rest)
            .map(|r| {
                (0..self.n)
                    .map(|x| phi[x].conj() * self.values[x * rest + r])
                    .sum::<Complex64>()
                    * scale
            })
            .collect();
        Self {
            n: self.n,
            particles: self.particles - 1,
            values,
        }
    }

    /// `(a(ψ)*χ)(x_1..x_{N+1}) = (N+1)^{-1/2} Σ_i (-1)^{i+1} ψ(x_i) χ(x_1..x̂_i..x_{N+1})`,
    /// with `i` counted from 1.
    pub fn create(&self, psi: &[Complex64]) -> Result<Self> {
        let particles = self.particles + 1;
        Self::check_size(particles, self.n)?;
        let n = self.n;
        let scale = 1.0 / (particles as f64).sqrt();
        let mut digits = vec![0usize; particles];
        let values = (0..n.pow(particles as u32))
            .map(|idx| {
                decode(idx, n, &mut digits);
                (0..particles)
                    .map(|i| {
                        let rest = digits
                            .iter()
                            .enumerate()
                            .filter(|&(b, _)| b != i)
                            .fold(0, |acc, (_, &d)| acc * n + d);
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        psi[digits[i]] * self.values[rest] * sign
                    })
                    .sum::<Complex64>()
                    * scale
            })
            .collect();
        Ok(Self {
            n,
            particles,
            values,
        })
    }

    /// `⟨φ_a, γ_Ψ φ_b⟩` for the given orbital samples, where
    /// `γ_Ψ(x, y) = N ∫ Ψ(x, r) conj Ψ(y, r) dr`.
    pub fn one_rdm(&self, orbitals: &[Vec<Complex64>]) -> Mat<Complex64> {
        let lowered: Vec<GridWavefunction> = orbitals.iter().map(|phi| self.annihilate(phi)).collect();
        let w = self.weight().powi(self.particles as i32 - 1);
        Mat::from_fn(orbitals.len(), orbitals.len(), |a, b| {
            lowered[b]
                .values
                .iter()
                .zip(&lowered[a].values)
                .map(|(u, v)| u.conj() * v)
                .sum::<Complex64>()
                * w
        })
    }

    /// `ρ_{Ψ,Φ}(x) = N ∫ conj Ψ(x, r) Φ(x, r) dr` on the axis grid.
    pub fn overlap_density(&self, other: &GridWavefunction) -> Result<Vec<Complex64>> {
        if self.n != other.n || self.particles != other.particles {
            return Err(Error::InvalidArgument(
                "overlap density needs wavefunctions on the same grid".into(),
            ));
        }
        let rest = self.n.pow(self.particles as u32 - 1);
        let w = self.particles as f64 * self.weight().powi(self.particles as i32 - 1);
        Ok((0..self.n)
            .map(|x| {
                (0..rest)
                    .map(|r| self.values[x * rest + r].conj() * other.values[x * rest + r])
                    .sum::<Complex64>()
                    * w
            })
            .collect())
    }
}

fn decode(mut idx: usize, n: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = idx % n;
        idx /= n;
    }
}

/// All permutations of `0..k` with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    if k == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (p, sign) in permutations(k - 1) {
        // Insert k-1 at position i; that moves it past (k-1-i) elements.
        for i in 0..k {
            let mut q = p.clone();
            q.insert(i, k - 1);
            let s = if (k - 1 - i).is_multiple_of(2) { sign } else { -sign };
            out.push((q, s));
        }
    }
    out
}

/// Single-particle density matrix of `psi` in the orbital basis by direct quadrature.
pub fn brute_force_1rdm(
    psi: &FockVector,
    orbitals: &[PeriodicFunction],
    n: usize,
) -> Result<Mat<Complex64>> {
    let grid = GridWavefunction::from_fock(psi, orbitals, n)?;
    let samples = orbitals[..psi.orbitals()]
        .iter()
        .map(|f| Ok(grid_sample(f, n)?.into_values()))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid.one_rdm(&samples))
}

/// `ρ_{Ψ,Φ}` with `Φ = a(target)* a(phi_k) Ψ`, computed on the axis grid from the
/// defining integrals.
pub fn brute_force_overlap_density(
    psi: &FockVector,
    orbitals: &[PeriodicFunction],
    phi_k: &PeriodicFunction,
    target: &PeriodicFunction,
    n: usize,
) -> Result<Vec<Complex64>> {
    let grid = GridWavefunction::from_fock(psi, orbitals, n)?;
    let phi = grid_sample(phi_k, n)?.into_values();
    let tgt = grid_sample(target, n)?.into_values();
    let excited = grid.annihilate(&phi).create(&tgt)?;
    grid.overlap_density(&excited)
}
