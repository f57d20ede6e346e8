use crate::error::{Error, Result};
use crate::fourier::{grid_point, grid_sample, PeriodicFunction};

/// Samples with `|φ| <= ZERO_FRACTION · max|φ|` count as zeros.
pub const ZERO_FRACTION: f64 = 1e-9;

fn check_grid(phi: &PeriodicFunction, n: usize) -> Result<()> {
    let required = (8 * phi.cutoff()).max(8);
    if n < required {
        return Err(Error::Undersampled {
            n,
            cutoff: phi.cutoff(),
            required,
        });
    }
    Ok(())
}

/// Signs of the real part on the grid, with near-zero samples removed.
fn signs(phi: &PeriodicFunction, n: usize) -> Result<Vec<(usize, f64)>> {
    check_grid(phi, n)?;
    let values = grid_sample(phi, n)?.real_values();
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(values
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > ZERO_FRACTION * max)
        .collect())
}

/// Number of maximal arcs of constant sign of a real function on the circle,
/// read off an `n`-point grid with `n >= 8K`.
///
/// Near-zero samples are skipped, so a tangential zero does not split an arc
/// and a sign change through a sampled zero is still counted once.
pub fn nodal_domain_count(phi: &PeriodicFunction, n: usize) -> Result<usize> {
    let s = signs(phi, n)?;
    let changes = (0..s.len())
        .filter(|&i| s[i].1.signum() != s[(i + 1) % s.len()].1.signum())
        .count();
    Ok(changes.max(1))
}

/// A zero of a real function: the first sign change on the `n`-point grid,
/// refined by bisection on the band-limited evaluation until the bracket
/// cannot shrink further in double precision.
pub fn find_node(phi: &PeriodicFunction, n: usize) -> Result<f64> {
    check_grid(phi, n)?;
    let values = grid_sample(phi, n)?.real_values();
    if values.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroFunction);
    }
    if let Some(i) = values.iter().position(|v| *v == 0.0) {
        return Ok(grid_point(i, n));
    }
    let i = (0..n)
        .find(|&i| values[i].signum() != values[(i + 1) % n].signum())
        .ok_or(Error::NoNode)?;
    let (mut a, mut b) = (grid_point(i, n), grid_point(i, n) + grid_point(1, n));
    let mut fa = phi.eval_real(a);
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = phi.eval_real(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let x = if fa.abs() <= phi.eval_real(b).abs() { a } else { b };
    Ok(x.rem_euclid(std::f64::consts::TAU))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_has_two_domains() {
        let sin = PeriodicFunction::from_cos_sin(0.0, &[(0.0, 1.0)]);
        assert_eq!(nodal_domain_count(&sin, 64).unwrap(), 2);
        let sin2 = PeriodicFunction::from_cos_sin(0.0, &[(0.0, 0.0), (0.0, 1.0)]);
        assert_eq!(nodal_domain_count(&sin2, 64).unwrap(), 4);
    }

    #[test]
    fn positive_function_has_one_domain() {
        let f = PeriodicFunction::from_cos_sin(1.0, &[(0.5, 0.2)]);
        assert_eq!(nodal_domain_count(&f, 16).unwrap(), 1);
    }

    #[test]
    fn tangential_zero_does_not_split() {
        // 1 - cos x touches zero at x = 0, a grid point.
        let f = PeriodicFunction::from_cos_sin(1.0, &[(-1.0, 0.0)]);
        assert_eq!(nodal_domain_count(&f, 16).unwrap(), 1);
    }

    #[test]
    fn zero_function_and_coarse_grids_are_errors() {
        assert!(matches!(
            nodal_domain_count(&PeriodicFunction::zeros(2), 16),
            Err(Error::ZeroFunction)
        ));
        let f = PeriodicFunction::from_cos_sin(0.0, &[(0.0, 0.0), (1.0, 0.0)]);
        assert!(nodal_domain_count(&f, 15).is_err());
    }

    #[test]
    fn node_of_shifted_cosine() {
        // cos(x - 1) vanishes at 1 + π/2.
        let f = PeriodicFunction::from_cos_sin(0.0, &[(1f64.cos(), 1f64.sin())]);
        let x = find_node(&f, 64).unwrap();
        assert!((x - (1.0 + std::f64::consts::FRAC_PI_2)).abs() < 1e-12);
        assert!(f.eval_real(x).abs() < 1e-15);
    }

    #[test]
    fn positive_function_has_no_node() {
        let f = PeriodicFunction::from_cos_sin(2.0, &[(1.0, 0.0)]);
        assert!(matches!(find_node(&f, 64), Err(Error::NoNode)));
    }
}
