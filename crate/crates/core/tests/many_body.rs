use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_dft::fourier::{grid_sample, Potential, TWO_PI};
use torus_dft::many_body::{
    brute_force_1rdm, brute_force_overlap_density, fock_apply, fock_natural_orbitals,
    ground_state_density, natural_orbitals, one_rdm, slater_density, ensemble_density, FockOp,
    FockVector, SlaterState,
};
use torus_dft::spectral::solve;
use torus_dft::PeriodicFunction;

const C1: Complex64 = Complex64::new(1.0, 0.0);

fn cos_potential() -> Potential {
    Potential::embed(&PeriodicFunction::from_cos_sin(0.0, &[(1.0, 0.0)]))
}

fn random_potential(rng: &mut ChaCha8Rng) -> Potential {
    let terms: Vec<(f64, f64)> = (1..=4)
        .map(|m| {
            let s = 3.0 / (m as f64);
            (rng.random_range(-s..s), rng.random_range(-s..s))
        })
        .collect();
    let mut v = Potential::embed(&PeriodicFunction::from_cos_sin(0.0, &terms));
    if rng.random_bool(0.5) {
        v = v.with_delta(rng.random_range(0.0..TWO_PI), rng.random_range(-3.0..3.0));
    }
    v
}

fn basis_state(orbitals: usize, bits: usize) -> FockVector {
    let mut s = FockVector::zero(orbitals, bits.count_ones() as usize).unwrap();
    s.set_amplitude(bits, C1).unwrap();
    s
}

fn apply(op: FockOp, j: usize, s: &FockVector) -> FockVector {
    fock_apply(op, j, s).unwrap()
}

/// `max |(x + y - want)_b|` over bitstrings, where `want` is `s` or zero.
fn anticommutator_defect(x: &FockVector, y: &FockVector, s: &FockVector, identity: bool) -> f64 {
    (0..1usize << s.orbitals())
        .map(|b| {
            let want = if identity { s.amplitude(b) } else { Complex64::new(0.0, 0.0) };
            (x.amplitude(b) + y.amplitude(b) - want).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn car_relations_hold_on_every_basis_state_of_eight_orbitals() {
    use FockOp::{Annihilate as A, Create as C};
    let l = 8;
    for bits in 0..1usize << l {
        let s = basis_state(l, bits);
        for j in 0..l {
            for k in 0..l {
                let aa = anticommutator_defect(
                    &apply(A, j, &apply(A, k, &s)),
                    &apply(A, k, &apply(A, j, &s)),
                    &s,
                    false,
                );
                assert_eq!(aa, 0.0, "{{a_{j}, a_{k}}} on {bits:08b}");
                let cc = anticommutator_defect(
                    &apply(C, j, &apply(C, k, &s)),
                    &apply(C, k, &apply(C, j, &s)),
                    &s,
                    false,
                );
                assert_eq!(cc, 0.0, "{{a*_{j}, a*_{k}}} on {bits:08b}");
                let ac = anticommutator_defect(
                    &apply(A, j, &apply(C, k, &s)),
                    &apply(C, k, &apply(A, j, &s)),
                    &s,
                    j == k,
                );
                assert_eq!(ac, 0.0, "{{a_{j}, a*_{k}}} on {bits:08b}");
            }
        }
    }
}

#[test]
fn mixed_anticommutator_is_identity_on_random_six_orbital_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 0..=6 {
        let mut s = FockVector::zero(6, n).unwrap();
        for bits in (0..64usize).filter(|b| b.count_ones() as usize == n) {
            s.set_amplitude(bits, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .unwrap();
        }
        for j in 0..6 {
            for k in 0..6 {
                let defect = anticommutator_defect(
                    &apply(FockOp::Annihilate, j, &apply(FockOp::Create, k, &s)),
                    &apply(FockOp::Create, k, &apply(FockOp::Annihilate, j, &s)),
                    &s,
                    j == k,
                );
                assert!(defect <= 1e-12);
            }
        }
    }
}

fn assert_matrices_close(a: &Mat<Complex64>, b: &Mat<Complex64>, tol: f64) {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            assert!(
                (a[(i, j)] - b[(i, j)]).norm() <= tol,
                "entry ({i},{j}): {} vs {}",
                a[(i, j)],
                b[(i, j)]
            );
        }
    }
}

#[test]
fn quadrature_and_car_density_matrices_agree() {
    let sol = solve(&cos_potential(), 6).unwrap();
    let orbs = sol.eigenfunctions();
    let det = FockVector::determinant(6, &[0, 1]).unwrap();
    let g = brute_force_1rdm(&det, orbs, 16).unwrap();
    assert_matrices_close(&g, &one_rdm(&det), 1e-12);

    let three = FockVector::determinant(6, &[0, 2, 5])
        .unwrap()
        .add(&FockVector::determinant(6, &[1, 3, 4]).unwrap().scale(Complex64::new(0.3, -0.4)))
        .unwrap();
    let g3 = brute_force_1rdm(&three, orbs, 16).unwrap();
    assert_matrices_close(&g3, &one_rdm(&three), 1e-12);
}

#[test]
fn determinant_density_matrix_is_a_projector() {
    let sol = solve(&cos_potential(), 6).unwrap();
    let det = FockVector::determinant(6, &[0, 1]).unwrap();
    let g = brute_force_1rdm(&det, sol.eigenfunctions(), 16).unwrap();
    let no = natural_orbitals(g.as_ref(), sol.eigenfunctions()).unwrap();
    assert_eq!(no.rank(), 2);
    for &n in no.occupations() {
        assert!((n - 1.0).abs() < 1e-12);
    }
    // Natural orbitals lie in span{φ₀, φ₁}.
    for chi in no.orbitals() {
        let inside: f64 = (0..2).map(|j| chi.inner(sol.eigenfunction(j)).norm_sqr()).sum();
        assert!((inside - 1.0).abs() < 1e-12);
    }
}

#[test]
fn superposition_sharing_an_orbital_is_still_a_determinant() {
    // (Φ₀₁ + Φ₀₂)/√2 = φ₀ ∧ (φ₁ + φ₂)/√2, so both occupations are 1.
    let sol = solve(&cos_potential(), 6).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let psi = FockVector::determinant(6, &[0, 1])
        .unwrap()
        .add(&FockVector::determinant(6, &[0, 2]).unwrap())
        .unwrap()
        .scale(Complex64::new(s, 0.0));
    let brute = brute_force_1rdm(&psi, sol.eigenfunctions(), 16).unwrap();
    assert_matrices_close(&brute, &one_rdm(&psi), 1e-12);
    let no = natural_orbitals(brute.as_ref(), sol.eigenfunctions()).unwrap();
    assert_eq!(no.rank(), 2);
    for &n in no.occupations() {
        assert!((n - 1.0).abs() < 1e-10);
    }
    // The natural orbitals span φ₀ and (φ₁ + φ₂)/√2; within a degenerate
    // occupation only the span is fixed.
    let mixed = &(sol.eigenfunction(1) + sol.eigenfunction(2)) * s;
    for f in [sol.eigenfunction(0), &mixed] {
        let inside: f64 = no.orbitals().iter().map(|chi| chi.inner(f).norm_sqr()).sum();
        assert!((inside - 1.0).abs() < 1e-10);
    }
}

#[test]
fn disjoint_superposition_has_four_half_occupations() {
    let sol = solve(&cos_potential(), 6).unwrap();
    let psi = FockVector::determinant(6, &[0, 1])
        .unwrap()
        .add(&FockVector::determinant(6, &[2, 3]).unwrap())
        .unwrap()
        .normalized();
    let brute = brute_force_1rdm(&psi, sol.eigenfunctions(), 16).unwrap();
    let no = natural_orbitals(brute.as_ref(), sol.eigenfunctions()).unwrap();
    assert_eq!(no.rank(), 4);
    for &n in no.occupations() {
        assert!((n - 0.5).abs() < 1e-10);
    }
    assert!((no.total_occupation() - 2.0).abs() < 1e-10);
}

#[test]
fn density_matrix_scales_with_norm_squared() {
    let sol = solve(&cos_potential(), 4).unwrap();
    let psi = FockVector::determinant(5, &[0, 1])
        .unwrap()
        .add(&FockVector::determinant(5, &[0, 3]).unwrap().scale(Complex64::new(0.0, 1.0)))
        .unwrap()
        .normalized();
    let g1 = brute_force_1rdm(&psi, sol.eigenfunctions(), 12).unwrap();
    let g2 = brute_force_1rdm(&psi.scale(Complex64::new(2.0, 0.0)), sol.eigenfunctions(), 12).unwrap();
    assert_matrices_close(&g2, &(&g1 * faer::Scale(Complex64::new(4.0, 0.0))), 1e-12);
    let trace: Complex64 = (0..5).map(|a| g2[(a, a)]).sum();
    assert!((trace.re - 2.0 * 4.0).abs() < 1e-12);
}

#[test]
fn single_particle_overlap_density() {
    let sol = solve(&cos_potential(), 6).unwrap();
    let s = SlaterState::new(&sol, &[0]).unwrap();
    let target = sol.eigenfunction(3);
    let rho = s.overlap_density(0, target).unwrap();
    let n = 64;
    let got = grid_sample(&rho, n).unwrap();
    let phi = grid_sample(sol.eigenfunction(0), n).unwrap();
    let psi = grid_sample(target, n).unwrap();
    for i in 0..n {
        let want = phi.values()[i].conj() * psi.values()[i];
        assert!((got.values()[i] - want).norm() < 1e-13);
    }
}

#[test]
fn determinant_overlap_density_matches_quadrature() {
    let sol = solve(&cos_potential(), 8).unwrap();
    let state = SlaterState::new(&sol, &[0, 1]).unwrap();
    let target = sol.eigenfunction(4);
    let formula = state.overlap_density(1, target).unwrap();
    let n = 48;
    let psi = state.to_fock(6).unwrap();
    let brute =
        brute_force_overlap_density(&psi, sol.eigenfunctions(), sol.eigenfunction(1), target, n).unwrap();
    let fvals = grid_sample(&formula, n).unwrap();
    for (a, b) in fvals.values().iter().zip(&brute) {
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn correlated_overlap_density_matches_quadrature() {
    let sol = solve(&cos_potential(), 6).unwrap();
    let orbs = sol.eigenfunctions();
    let psi = FockVector::determinant(4, &[0, 1])
        .unwrap()
        .add(&FockVector::determinant(4, &[2, 3]).unwrap().scale(Complex64::new(0.6, 0.8)))
        .unwrap()
        .add(&FockVector::determinant(4, &[0, 2]).unwrap().scale(Complex64::new(-0.5, 0.0)))
        .unwrap()
        .normalized();
    let no = fock_natural_orbitals(&psi, orbs).unwrap();
    let target = &orbs[6];
    let n = 32;
    for k in 0..no.rank() {
        let formula = no.overlap_density(k, target).unwrap();
        let brute = brute_force_overlap_density(&psi, orbs, &no.orbitals()[k], target, n).unwrap();
        let fvals = grid_sample(&formula, n).unwrap();
        for (a, b) in fvals.values().iter().zip(&brute) {
            assert!((a - b).norm() < 1e-10);
        }
    }
    assert_eq!(no.overlap_density(no.rank(), target).unwrap().l2_norm(), 0.0);
}

#[test]
fn three_particle_overlap_density_matches_quadrature() {
    let sol = solve(&cos_potential(), 4).unwrap();
    let orbs = sol.eigenfunctions();
    let state = SlaterState::new(&sol, &[0, 1, 2]).unwrap();
    let psi = state.to_fock(5).unwrap();
    let target = &orbs[4];
    let formula = state.overlap_density(2, target).unwrap();
    let brute = brute_force_overlap_density(&psi, orbs, &orbs[2], target, 20).unwrap();
    let fvals = grid_sample(&formula, 20).unwrap();
    for (a, b) in fvals.values().iter().zip(&brute) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn closed_shell_determinants_have_projector_density_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let mut checked = 0;
    while checked < 6 {
        let v = random_potential(&mut rng);
        let sol = solve(&v, 6).unwrap();
        let n = rng.random_range(1..=3usize);
        if sol.group_ids()[n - 1] == sol.group_ids()[n] {
            continue;
        }
        let psi = SlaterState::ground(&sol, n).unwrap().to_fock(8).unwrap();
        let g = brute_force_1rdm(&psi, sol.eigenfunctions(), if n == 3 { 16 } else { 24 }).unwrap();
        let no = natural_orbitals(g.as_ref(), sol.eigenfunctions()).unwrap();
        assert_eq!(no.rank(), n);
        for (chi, &occ) in no.orbitals().iter().zip(no.occupations()) {
            assert!((occ - 1.0).abs() < 1e-10);
            let inside: f64 = (0..n).map(|j| chi.inner(sol.eigenfunction(j)).norm_sqr()).sum();
            assert!((inside - 1.0).abs() < 1e-10);
        }
        checked += 1;
    }
}

#[test]
fn cosine_ground_state_density_is_positive() {
    let sol = solve(&cos_potential(), 32).unwrap();
    let d = slater_density(&sol, &[0, 1]).unwrap();
    let (min, _) = d.min_on_grid();
    assert!(min > 0.0, "min {min}");
    assert!((d.integral() - 2.0).abs() < 1e-10);
}

#[test]
fn ground_state_density_dominates_lowest_orbital() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let v = random_potential(&mut rng);
        let sol = solve(&v, 32).unwrap();
        for n in 1..=4 {
            let d = ground_state_density(&sol, n).unwrap();
            let phi = grid_sample(sol.ground_state(), d.grid_len()).unwrap();
            assert!(d.min_on_grid().0 > 0.0);
            for (rho, p) in d.grid_values().iter().zip(phi.values()) {
                assert!(*rho >= p.norm_sqr() - 1e-12);
            }
            assert!((d.integral() - n as f64).abs() < 1e-10);
        }
    }
}

#[test]
fn degenerate_free_ensemble_is_uniform() {
    let sol = solve(&Potential::zero(), 4).unwrap();
    let a = SlaterState::new(&sol, &[0, 1]).unwrap();
    let b = SlaterState::new(&sol, &[0, 2]).unwrap();
    let d = ensemble_density(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
    let (da, db) = (a.density(), b.density());
    for ((x, y), z) in da.grid_values().iter().zip(db.grid_values()).zip(d.grid_values()) {
        assert!((0.5 * (x + y) - z).abs() < 1e-14);
        // |φ₁|² + |φ₂|² = 1/π for any orthonormal basis of span{cos, sin}.
        assert!((z - 2.0 / TWO_PI).abs() < 1e-13);
    }
    assert!((d.integral() - 2.0).abs() < 1e-12);
}

#[test]
fn square_root_density_has_stable_h1_norm() {
    let sol = solve(&cos_potential(), 24).unwrap();
    let d = slater_density(&sol, &[0]).unwrap();
    let h1 = |k: usize| {
        let root: Vec<f64> = d.sqrt_values();
        let g = torus_dft::Grid::from_real(&root);
        g.to_coeffs(k).unwrap().h1_norm()
    };
    let coarse = h1(64);
    let fine = h1(128);
    assert!(coarse.is_finite());
    assert!((coarse - fine).abs() < 1e-10 * fine);
}
