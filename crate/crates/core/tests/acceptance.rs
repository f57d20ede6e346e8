//! Acceptance suite. Each criterion prints one `criterion N ... PASS|FAIL` line;
//! the process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_dft::fourier::{grid_sample, oversampled_len, Potential, TWO_PI};
use torus_dft::ks_inverse::{hk_injectivity_scan, hk_roundtrip, ScanConfig};
use torus_dft::lab::{
    courant_ensemble, delta_ground_energy_oracle, excited_delta_experiment, potential_ensemble,
    random_function, Sampler,
};
use torus_dft::many_body::{brute_force_overlap_density, fock_apply, FockOp, FockVector, SlaterState};
use torus_dft::spectral::{eigenbasis_dual_coefficients, solve};
use torus_dft::PeriodicFunction;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn cos_sin(a0: f64, terms: &[(f64, f64)]) -> Potential {
    Potential::embed(&PeriodicFunction::from_cos_sin(a0, terms))
}

fn free_spectrum() -> Outcome {
    let start = Instant::now();
    let sol = solve(&Potential::zero(), 8).map_err(err)?;
    let elapsed = start.elapsed();
    let mut expected = vec![0.0];
    for m in 1..=8 {
        let m2 = (m * m) as f64;
        expected.extend([m2, m2]);
    }
    if sol.eigenvalues().len() != expected.len() {
        return Err(format!("{} eigenvalues, expected 17", sol.eigenvalues().len()));
    }
    let max_err = sol
        .eigenvalues()
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        max_err <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max error {max_err:.2e}, {elapsed:?}"),
    )
}

/// `s tan(πs) = α/2` on `(0, 1/2)` by plain bisection, independent of the library.
fn delta_root(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (std::f64::consts::PI * mid).tan() < 0.5 * alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo * lo
}

fn delta_oracle() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [0.5, 1.0, 5.0] {
        let exact = delta_ground_energy_oracle(alpha).map_err(err)?;
        if (exact - delta_root(alpha)).abs() > 1e-15 {
            return Err(format!("oracle disagrees with reference root at α = {alpha}"));
        }
        let v = Potential::delta(0.0, alpha);
        let coarse = (solve(&v, 256).map_err(err)?.ground_energy() - exact).abs() / exact;
        let fine = (solve(&v, 1024).map_err(err)?.ground_energy() - exact).abs() / exact;
        ok &= fine <= 1e-3 && fine < coarse;
        lines.push(format!("α={alpha}: rel {coarse:.2e} -> {fine:.2e}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    check(ok, format!("{}, {elapsed:?}", lines.join("; ")))
}

fn positivity_ensemble() -> Outcome {
    let start = Instant::now();
    let cutoff = 256;
    let n = oversampled_len(cutoff);
    let sampler = Sampler::new(5.0, 5.0);
    let report = potential_ensemble(&sampler, 200, cutoff, n, 2024).map_err(err)?;
    // Recheck the first samples with direct pointwise evaluation.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for s in report.samples.iter().take(5) {
        let sol = solve(&sampler.sample(&mut rng), cutoff).map_err(err)?;
        let min = (0..n)
            .map(|i| sol.ground_state().eval_real(TWO_PI * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        if (min - s.min_ground_state).abs() > 1e-12 || min <= 0.0 {
            return Err(format!("sample {}: direct minimum {min:e}", s.seed_index));
        }
        if sol.eigenvalue(1) - sol.eigenvalue(0) <= 0.0 {
            return Err(format!("sample {}: zero gap", s.seed_index));
        }
    }
    let elapsed = start.elapsed();
    let failures = report.positivity_failures + report.gap_failures;
    check(
        failures == 0
            && report.samples.len() == 200
            && report.min_ground_state > 0.0
            && report.min_gap > 0.0
            && elapsed < Duration::from_secs(600),
        format!(
            "{failures} failures, min ground state {:.2e}, min gap {:.3e}, {elapsed:?}",
            report.min_ground_state, report.min_gap
        ),
    )
}

fn courant_bound() -> Outcome {
    let cutoff = 64;
    let report = courant_ensemble(&Sampler::new(5.0, 5.0), 50, cutoff, 12, oversampled_len(cutoff), 7)
        .map_err(err)?;
    let checked: usize = report.records.iter().map(Vec::len).sum();
    check(
        report.failures == 0 && checked == 50 * 12,
        format!("{checked} eigenfunctions, {} violations", report.failures),
    )
}

fn ks_roundtrip() -> Outcome {
    let cases = [
        ("0", Potential::zero()),
        ("cos x", cos_sin(0.0, &[(1.0, 0.0)])),
        ("cos x + 0.3 sin 2x", cos_sin(0.0, &[(1.0, 0.0), (0.0, 0.3)])),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, v) in cases {
        let r = hk_roundtrip(&v, 128, 1e-6).map_err(err)?;
        let d = r.distance.constant_adjusted_distance;
        ok &= d <= 1e-6 && r.density_error <= 1e-6;
        lines.push(format!("{name}: dist {d:.1e}, density {:.1e}", r.density_error));
    }
    check(ok, lines.join("; "))
}

fn hk_injectivity() -> Outcome {
    let report = hk_injectivity_scan(&ScanConfig::new(50, 64, 2, 11)).map_err(err)?;
    let min_potential = report
        .records
        .iter()
        .map(|r| r.potential_distance)
        .fold(f64::INFINITY, f64::min);
    check(
        report.records.len() == 50
            && min_potential >= 0.1
            && report.min_density_distance > 1e-8
            && report.max_gauge_defect <= 1e-10,
        format!(
            "min density distance {:.3e}, max gauge defect {:.1e}",
            report.min_density_distance, report.max_gauge_defect
        ),
    )
}

fn overlap_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cutoff = 5;
    let n = 32;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..3 {
        let terms: Vec<(f64, f64)> = (1..=3)
            .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let v = cos_sin(0.0, &terms).with_delta(rng.random_range(0.0..TWO_PI), rng.random_range(-2.0..2.0));
        let sol = solve(&v, cutoff).map_err(err)?;
        let orbs = sol.eigenfunctions();
        let target = random_function(&mut rng, cutoff);
        for occ in [[0, 1], [0, 3], [2, 5]] {
            let state = SlaterState::new(&sol, &occ).map_err(err)?;
            let psi = state.to_fock(orbs.len()).map_err(err)?;
            // The formula needs a target orthogonal to the occupied orbitals.
            let mut projected = target.clone();
            for &j in &occ {
                projected = &projected - &orbs[j].scale(orbs[j].inner(&target));
            }
            for &k in &occ {
                for t in [&projected, &orbs[4]] {
                    let formula = grid_sample(&state.overlap_density(k, t).map_err(err)?, n).map_err(err)?;
                    let brute = brute_force_overlap_density(&psi, orbs, &orbs[k], t, n).map_err(err)?;
                    for (a, b) in formula.values().iter().zip(&brute) {
                        worst = worst.max((a - b).norm());
                    }
                    cases += 1;
                }
            }
        }
    }
    check(worst <= 1e-10, format!("{cases} cases, max pointwise error {worst:.2e}"))
}

fn car_algebra() -> Outcome {
    use FockOp::{Annihilate as A, Create as C};
    let l = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let apply = |op, j, s: &FockVector| fock_apply(op, j, s).map_err(err);
    let mut worst = 0.0f64;
    // Every basis state plus one random superposition per particle number.
    let mut states = Vec::new();
    for bits in 0..1usize << l {
        let mut s = FockVector::zero(l, bits.count_ones() as usize).map_err(err)?;
        s.set_amplitude(bits, Complex64::new(1.0, 0.0)).map_err(err)?;
        states.push(s);
    }
    for particles in 0..=l {
        let mut s = FockVector::zero(l, particles).map_err(err)?;
        for bits in (0..1usize << l).filter(|b| b.count_ones() as usize == particles) {
            s.set_amplitude(bits, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .map_err(err)?;
        }
        states.push(s);
    }
    for s in &states {
        for i in 0..l {
            for j in 0..l {
                for (p, q, identity) in [(A, C, i == j), (A, A, false), (C, C, false)] {
                    let x = apply(p, i, &apply(q, j, s)?)?;
                    let y = apply(q, j, &apply(p, i, s)?)?;
                    let d = (0..1usize << l)
                        .map(|b| {
                            let want = if identity { s.amplitude(b) } else { Complex64::new(0.0, 0.0) };
                            (x.amplitude(b) + y.amplitude(b) - want).norm()
                        })
                        .fold(0.0, f64::max);
                    worst = worst.max(d);
                }
            }
        }
    }
    check(worst <= 1e-12, format!("{} states, max defect {worst:.1e}", states.len()))
}

fn excited_delta() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for v in [Potential::zero(), cos_sin(0.0, &[(1.0, 0.0)])] {
        // The second and third eigenfunctions.
        for k in [1, 2] {
            let r = excited_delta_experiment(&v, k, &[-1.0, 1.0, 10.0], 64).map_err(err)?;
            for rec in &r.records {
                let bound = 1e-10 * (1.0 + r.eigenvalue.abs());
                ok &= rec.residual <= bound;
                worst = worst.max(rec.residual / bound);
            }
        }
    }
    check(ok, format!("max residual / bound {worst:.2e}"))
}

fn gns() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 8192;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f = random_function(&mut rng, 16);
        // Direct sums, independent of the FFT path.
        let l2 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let h1 = f
            .modes()
            .map(|(m, c)| (1.0 + (m * m) as f64) * c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let sup = (0..n)
            .map(|i| f.eval(TWO_PI * i as f64 / n as f64).norm())
            .fold(0.0, f64::max);
        worst = worst.max(sup / (2.0 * (l2 * h1).sqrt()));
    }
    check(worst <= 1.0, format!("max ratio {worst:.4}"))
}

fn dual_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sampler = Sampler::new(5.0, 5.0);
    let cutoff = 64;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = sampler.sample(&mut rng);
        let f = sampler.sample(&mut rng);
        let sol = solve(&v, cutoff).map_err(err)?;
        let rep = eigenbasis_dual_coefficients(&f, &sol);
        for _ in 0..20 {
            let phi = random_function(&mut rng, cutoff);
            // f(φ) = Σ_m d_m φ̂_m + Σ α φ(x0).
            let smooth: Complex64 = phi.modes().map(|(m, c)| f.dual_coeff(m) * c).sum();
            let deltas: Complex64 = f.deltas().iter().map(|d| phi.eval(d.x0) * d.alpha).sum();
            let e = (rep.reconstruct(&sol, &phi) - (smooth + deltas)).norm();
            worst = worst.max(e);
        }
    }
    check(worst <= 1e-8, format!("max error {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("free spectrum", free_spectrum),
        ("delta oracle", delta_oracle),
        ("positivity ensemble", positivity_ensemble),
        ("Courant bound", courant_bound),
        ("KS roundtrip", ks_roundtrip),
        ("HK injectivity", hk_injectivity),
        ("overlap formula", overlap_formula),
        ("CAR algebra", car_algebra),
        ("excited-state delta invariance", excited_delta),
        ("GNS inequality", gns),
        ("dual reconstruction", dual_reconstruction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {name}: {status} ({detail})", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
