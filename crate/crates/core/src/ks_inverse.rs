//! The density side of the theory: membership in the space of admissible
//! densities, the explicit single-particle Kohn–Sham inversion
//! `v = Δ√ρ / √ρ`, and Hohenberg–Kohn consistency checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{grid_sample, oversampled_len, Grid, PeriodicFunction, Potential, SQRT_2PI};
use crate::lab::Sampler;
use crate::many_body::{ground_state_density, slater_density, Density};
use crate::spectral::{assemble_hamiltonian, solve};

/// `|∫ρ - N|` allowed for membership.
pub const INTEGRAL_TOL: f64 = 1e-8;
/// Grid minima at or below this are treated as zeros of the density.
pub const POSITIVITY_FLOOR: f64 = 1e-8;
/// Default acceptance tolerance of the roundtrip distances.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub particles: usize,
    pub integral: f64,
    pub min_on_grid: f64,
    pub argmin: f64,
    pub h1_norm_of_sqrt: f64,
    pub grid_len: usize,
    pub clamped_values: usize,
    pub member_of_dn: bool,
    pub diagnostics: Vec<String>,
}

/// Acceptance thresholds for [`validate_density_with`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DensityTolerances {
    pub integral: f64,
    pub positivity_floor: f64,
}

impl Default for DensityTolerances {
    fn default() -> Self {
        Self {
            integral: INTEGRAL_TOL,
            positivity_floor: POSITIVITY_FLOOR,
        }
    }
}

/// Checks `∫ρ = N`, `ρ > 0` and `√ρ ∈ H¹` on the oversampled grid.
///
/// Positivity is tested against the floor `1e-8` rather than zero so that a
/// density with an exact zero is not admitted on roundoff.
pub fn validate_density(rho: &Density, particles: usize) -> DensityReport {
    validate_density_with(rho, particles, DensityTolerances::default())
}

pub fn validate_density_with(rho: &Density, particles: usize, tol: DensityTolerances) -> DensityReport {
    let integral = rho.integral();
    let (min_on_grid, argmin) = rho.min_on_grid();
    let root = rho.sqrt_values();
    let h1 = if root.iter().all(|v| v.is_finite()) {
        let n = root.len();
        Grid::from_real(&root)
            .to_coeffs((n - 1) / 2)
            .map(|f| f.h1_norm())
            .unwrap_or(f64::INFINITY)
    } else {
        f64::NAN
    };
    let mut diagnostics = Vec::new();
    if (integral - particles as f64).abs() > tol.integral {
        diagnostics.push(format!("integral {integral} differs from N = {particles}"));
    }
    if min_on_grid <= tol.positivity_floor {
        diagnostics.push(format!(
            "grid minimum {min_on_grid:.3e} at x = {argmin:.6} is not above {:.0e}",
            tol.positivity_floor
        ));
    }
    if !h1.is_finite() {
        diagnostics.push("sqrt(rho) has no finite H1 norm on the grid".into());
    }
    if rho.clamped_count() > 0 {
        diagnostics.push(format!(
            "{} grid values in [-1e-10, 0) were clamped to zero",
            rho.clamped_count()
        ));
    }
    DensityReport {
        particles,
        integral,
        min_on_grid,
        argmin,
        h1_norm_of_sqrt: h1,
        grid_len: rho.grid_len(),
        clamped_values: rho.clamped_count(),
        member_of_dn: (integral - particles as f64).abs() <= tol.integral
            && min_on_grid > tol.positivity_floor
            && h1.is_finite(),
        diagnostics,
    }
}

/// Output of [`ks_invert`].
#[derive(Clone, Debug)]
pub struct KsInversion {
    /// `w = u''/u` embedded at the requested cutoff, with no deltas.
    pub potential: Potential,
    /// `u = √ρ` truncated at half the potential cutoff.
    pub groundstate: PeriodicFunction,
    /// `‖H(w) û‖₂` for the Galerkin operator at the ground-state cutoff; zero
    /// when `û` satisfies the weak eigenvalue equation with eigenvalue zero.
    pub weak_residual: f64,
}

/// Single-particle Kohn–Sham inversion `v = Δ√ρ / √ρ`.
///
/// `u = √ρ` is sampled on the oversampled grid of `cutoff`, differentiated
/// spectrally, and `u''/u` is projected onto `|m| <= cutoff`. The returned
/// potential has ground energy zero; a band-limited `ρ = φ²` at cutoff `K` is
/// reproduced exactly with `cutoff = 2K`.
pub fn ks_invert(rho: &Density, cutoff: usize) -> Result<KsInversion> {
    if rho.particles() != 1 {
        return Err(Error::Unsupported(format!(
            "explicit inversion exists only for N = 1, got N = {}",
            rho.particles()
        )));
    }
    if cutoff < 2 {
        return Err(Error::InvalidArgument("inversion cutoff must be at least 2".into()));
    }
    let report = validate_density(rho, 1);
    if report.min_on_grid <= POSITIVITY_FLOOR {
        return Err(Error::NotStrictlyPositive {
            min: report.min_on_grid,
            floor: POSITIVITY_FLOOR,
        });
    }
    if !report.member_of_dn {
        return Err(Error::NotInDensitySpace(report.diagnostics.join("; ")));
    }

    let n = oversampled_len(cutoff.max(rho.cutoff()));
    let rho_grid = grid_sample(rho.function(), n)?.real_values();
    if let Some(&min) = rho_grid.iter().min_by(|a, b| a.total_cmp(b)) {
        if min <= POSITIVITY_FLOOR {
            return Err(Error::NotStrictlyPositive {
                min,
                floor: POSITIVITY_FLOOR,
            });
        }
    }
    let u_grid: Vec<f64> = rho_grid.iter().map(|r| r.sqrt()).collect();
    let u = Grid::from_real(&u_grid).to_coeffs(n / 2 - 1)?;
    let u2 = grid_sample(&u.derivative().derivative(), n)?.real_values();
    let w_grid: Vec<f64> = u2.iter().zip(&u_grid).map(|(d, u)| d / u).collect();
    let w = Grid::from_real(&w_grid).to_coeffs(cutoff)?.real_part();
    let potential = Potential::embed(&w);

    let groundstate = u.resized(cutoff / 2).real_part();
    let h = assemble_hamiltonian(&potential, cutoff / 2)?;
    let weak_residual = h.apply(&groundstate).l2_norm();
    Ok(KsInversion {
        potential,
        groundstate,
        weak_residual,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PotentialDistance {
    pub raw_h1dual_distance: f64,
    pub constant_adjusted_distance: f64,
    /// The constant `c` with `w ≈ v + c`.
    pub offset: f64,
    pub cutoff: usize,
}

/// Distance between `v` and `w` in H⁻¹ at cutoff `M`, before and after removing
/// the best constant.
///
/// The offset is read from the mean modes, `c = (d₀(w) - d₀(v)) / √(2π)`, so that
/// comparing `v` with `v + 3` reports `c = 3`.
pub fn compare_up_to_constant(v: &Potential, w: &Potential, cutoff: usize) -> PotentialDistance {
    let diff = w - v;
    let offset = diff.folded_coeff(0).re / SQRT_2PI;
    PotentialDistance {
        raw_h1dual_distance: diff.dual_norm(cutoff).value,
        constant_adjusted_distance: diff.shifted(-offset).dual_norm(cutoff).value,
        offset,
        cutoff,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    pub cutoff: usize,
    pub inversion_cutoff: usize,
    pub ground_energy: f64,
    pub density: DensityReport,
    pub weak_residual: f64,
    pub distance: PotentialDistance,
    pub recovered_ground_energy: f64,
    /// `‖ρ_recovered - ρ‖_{L²}` for the ground state of the recovered potential.
    pub density_error: f64,
    pub has_deltas: bool,
    pub tol: f64,
    pub success: bool,
}

/// Solve, take `ρ = φ₀²`, invert at cutoff `2K` and compare with `v - λ₀`.
///
/// For potentials with deltas the recovered coefficients only approximate the
/// delta's slowly decaying tail, so success is judged on the density error
/// alone; otherwise both the constant-adjusted distance and the density error
/// must be within `tol`.
pub fn hk_roundtrip(v: &Potential, cutoff: usize, tol: f64) -> Result<RoundtripReport> {
    let sol = solve(v, cutoff)?;
    let rho = slater_density(&sol, &[0])?;
    let density = validate_density(&rho, 1);
    let inversion_cutoff = 2 * cutoff;
    let inv = ks_invert(&rho, inversion_cutoff)?;
    let reference = v.shifted(-sol.ground_energy());
    let distance = compare_up_to_constant(&reference, &inv.potential, inversion_cutoff);
    let recovered = solve(&inv.potential, cutoff)?;
    let rho_back = slater_density(&recovered, &[0])?;
    let density_error = rho_back.l2_distance(&rho);
    let has_deltas = !v.deltas().is_empty();
    let success = density_error <= tol && (has_deltas || distance.constant_adjusted_distance <= tol);
    Ok(RoundtripReport {
        cutoff,
        inversion_cutoff,
        ground_energy: sol.ground_energy(),
        density,
        weak_residual: inv.weak_residual,
        distance,
        recovered_ground_energy: recovered.ground_energy(),
        density_error,
        has_deltas,
        tol,
        success,
    })
}

/// Directional difference quotients `‖v(ρ + tη) - v(ρ)‖_{H⁻¹} / t` of the
/// inversion map, one per step `t`. The direction must integrate to zero.
pub fn ks_difference_quotients(
    rho: &Density,
    direction: &PeriodicFunction,
    steps: &[f64],
    cutoff: usize,
) -> Result<Vec<f64>> {
    if direction.integral().norm() > 1e-12 {
        return Err(Error::InvalidArgument(
            "perturbation direction must have zero integral".into(),
        ));
    }
    let base = ks_invert(rho, cutoff)?;
    steps
        .iter()
        .map(|&t| {
            let k = rho.cutoff().max(direction.cutoff());
            let moved = &rho.function().resized(k) + &(&direction.resized(k) * t);
            let inv = ks_invert(&Density::from_function(&moved, 1), cutoff)?;
            Ok((&inv.potential - &base.potential).dual_norm(cutoff).value / t.abs())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanConfig {
    pub pairs: usize,
    pub cutoff: usize,
    pub particles: usize,
    pub seed: u64,
    pub min_potential_distance: f64,
    pub gauge_shift: f64,
    /// Density distances at or below this flag a falsification.
    pub density_tol: f64,
    pub gauge_tol: f64,
    pub sampler: Sampler,
}

impl ScanConfig {
    pub fn new(pairs: usize, cutoff: usize, particles: usize, seed: u64) -> Self {
        Self {
            pairs,
            cutoff,
            particles,
            seed,
            min_potential_distance: 0.1,
            gauge_shift: 5.0,
            density_tol: 1e-8,
            gauge_tol: 1e-10,
            sampler: Sampler::new(5.0, 5.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairRecord {
    pub potential_distance: f64,
    pub density_distance: f64,
    pub gauge_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub config: ScanConfig,
    pub rejected_samples: usize,
    pub min_density_distance: f64,
    pub max_gauge_defect: f64,
    /// Set when two potentials that differ by more than a constant produced
    /// densities within `density_tol` of each other.
    pub falsified: bool,
    pub gauge_ok: bool,
    pub records: Vec<PairRecord>,
}

/// Ground-state densities of random pairs of potentials that differ by more than
/// a constant must differ; shifting a potential by a constant must not change its
/// density.
pub fn hk_injectivity_scan(config: &ScanConfig) -> Result<InjectivityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.cutoff;
    let mut records = Vec::with_capacity(config.pairs);
    let mut rejected = 0;
    while records.len() < config.pairs {
        let v = config.sampler.sample(&mut rng);
        let w = config.sampler.sample(&mut rng);
        let d = compare_up_to_constant(&v, &w, 2 * k).constant_adjusted_distance;
        if d < config.min_potential_distance {
            rejected += 1;
            continue;
        }
        let sv = solve(&v, k)?;
        let sw = solve(&w, k)?;
        let rv = ground_state_density(&sv, config.particles)?;
        let rw = ground_state_density(&sw, config.particles)?;
        let shifted = solve(&v.shifted(config.gauge_shift), k)?;
        let rs = ground_state_density(&shifted, config.particles)?;
        records.push(PairRecord {
            potential_distance: d,
            density_distance: rv.l2_distance(&rw),
            gauge_defect: rv.l2_distance(&rs),
        });
    }
    let min_density_distance = records
        .iter()
        .map(|r| r.density_distance)
        .fold(f64::INFINITY, f64::min);
    let max_gauge_defect = records.iter().map(|r| r.gauge_defect).fold(0.0, f64::max);
    Ok(InjectivityReport {
        config: config.clone(),
        rejected_samples: rejected,
        min_density_distance,
        max_gauge_defect,
        falsified: min_density_distance <= config.density_tol,
        gauge_ok: max_gauge_defect <= config.gauge_tol,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::TWO_PI;

    fn cos_x() -> PeriodicFunction {
        PeriodicFunction::from_cos_sin(0.0, &[(1.0, 0.0)])
    }

    #[test]
    fn uniform_density_is_a_member() {
        for n in 1..4 {
            let rho = Density::from_function(&PeriodicFunction::constant(n as f64 / TWO_PI, 4), n);
            let r = validate_density(&rho, n);
            assert!(r.member_of_dn);
            assert!((r.min_on_grid - n as f64 / TWO_PI).abs() < 1e-15);
        }
    }

    #[test]
    fn density_with_a_zero_is_rejected() {
        // (1 - cos x)² / (3π) integrates to one and vanishes at x = 0.
        let f = PeriodicFunction::from_cos_sin(1.5, &[(-2.0, 0.0), (0.5, 0.0)]);
        let rho = Density::from_function(&(&f * (1.0 / (3.0 * std::f64::consts::PI))), 1);
        let r = validate_density(&rho, 1);
        assert!((r.integral - 1.0).abs() < 1e-14);
        assert!(!r.member_of_dn);
        assert!(r.min_on_grid.abs() < 1e-15);
        assert!(matches!(ks_invert(&rho, 8), Err(Error::NotStrictlyPositive { .. })));
    }

    #[test]
    fn wrong_particle_number_is_not_a_member() {
        let rho = Density::from_function(&PeriodicFunction::constant(1.0 / TWO_PI, 2), 2);
        assert!(!validate_density(&rho, 2).member_of_dn);
        let one = Density::from_function(&PeriodicFunction::constant(2.0 / TWO_PI, 2), 2);
        assert!(matches!(ks_invert(&one, 8), Err(Error::Unsupported(_))));
    }

    #[test]
    fn uniform_density_inverts_to_zero() {
        let rho = Density::from_function(&PeriodicFunction::constant(1.0 / TWO_PI, 0), 1);
        let inv = ks_invert(&rho, 8).unwrap();
        assert!(inv.potential.dual_norm(8).value < 1e-15);
        assert!(inv.weak_residual < 1e-15);
        let g = &inv.groundstate;
        assert!((g.coeff(0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn offsets_follow_the_second_argument() {
        let v = Potential::embed(&cos_x()).with_delta(1.0, 2.0);
        let d = compare_up_to_constant(&v, &v.shifted(3.0), 8);
        assert!((d.offset - 3.0).abs() < 1e-14);
        assert!(d.constant_adjusted_distance < 1e-14);
        assert!((d.raw_h1dual_distance - 3.0 * SQRT_2PI).abs() < 1e-13);
        let same = compare_up_to_constant(&v, &v, 8);
        assert_eq!(same.raw_h1dual_distance, 0.0);
        assert_eq!(same.constant_adjusted_distance, 0.0);
    }

    #[test]
    fn cos_and_sin_are_root_pi_apart() {
        let sin_x = PeriodicFunction::from_cos_sin(0.0, &[(0.0, 1.0)]);
        let d = compare_up_to_constant(&Potential::embed(&cos_x()), &Potential::embed(&sin_x), 4);
        assert!((d.constant_adjusted_distance - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!(d.constant_adjusted_distance <= d.raw_h1dual_distance);
    }

    #[test]
    fn free_roundtrip_is_exact() {
        let r = hk_roundtrip(&Potential::zero(), 8, ROUNDTRIP_TOL).unwrap();
        assert!(r.success);
        assert!(r.distance.constant_adjusted_distance < 1e-14);
    }
}
