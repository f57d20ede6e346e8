use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{grid_point, grid_sample, oversampled_len, Grid, PeriodicFunction};

/// Grid values in `[-CLAMP_TOL, 0)` are treated as roundoff and set to zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// A single-particle density `ρ` with band limit `cutoff`, held both as Fourier
/// coefficients and as values on the oversampled grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    particles: usize,
    coeffs: PeriodicFunction,
    values: Vec<f64>,
    clamped: usize,
}

impl Density {
    /// Builds a density from its coefficients. The imaginary part is discarded.
    pub fn from_function(f: &PeriodicFunction, particles: usize) -> Self {
        let coeffs = f.real_part();
        let n = oversampled_len(coeffs.cutoff());
        let mut values = grid_sample(&coeffs, n)
            .expect("oversampled grid")
            .real_values();
        let mut clamped = 0;
        for v in &mut values {
            if *v < 0.0 && *v >= -CLAMP_TOL {
                *v = 0.0;
                clamped += 1;
            }
        }
        Self {
            particles,
            coeffs,
            values,
            clamped,
        }
    }

    /// Interprets `values` as samples on the uniform grid `x_i = 2πi/n` and keeps
    /// the modes `|m| <= (n - 1) / 2`.
    pub fn from_samples(values: &[f64], particles: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty density grid".into()));
        }
        let cutoff = (values.len() - 1) / 2;
        let f = Grid::from_real(values).to_coeffs(cutoff)?;
        Ok(Self::from_function(&f, particles))
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.cutoff()
    }

    pub fn function(&self) -> &PeriodicFunction {
        &self.coeffs
    }

    /// Values on the oversampled grid of [`Density::grid_len`] points.
    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_len(&self) -> usize {
        self.values.len()
    }

    /// Number of grid values that were clamped from `[-1e-10, 0)` to zero.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }

    pub fn integral(&self) -> f64 {
        self.coeffs.integral().re
    }

    /// Grid minimum and its location.
    pub fn min_on_grid(&self) -> (f64, f64) {
        let (i, &v) = self
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        (v, grid_point(i, self.values.len()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.eval_real(x)
    }

    /// `√ρ` on the oversampled grid; negative values below the clamp tolerance
    /// come back as NaN.
    pub fn sqrt_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }

    /// `‖ρ - other‖_{L²}` computed from the coefficients.
    pub fn l2_distance(&self, other: &Density) -> f64 {
        let k = self.cutoff().max(other.cutoff());
        (&self.coeffs.resized(k) - &other.coeffs.resized(k)).l2_norm()
    }

    /// `Σ t_i ρ_i` over densities with a common particle number.
    pub fn combine(parts: &[(f64, &Density)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidArgument("empty combination".into()));
        };
        let particles = first.particles;
        let cutoff = parts.iter().map(|(_, d)| d.cutoff()).max().unwrap_or(0);
        let mut acc = PeriodicFunction::zeros(cutoff);
        for (t, d) in parts {
            if d.particles != particles {
                return Err(Error::InvalidArgument(format!(
                    "cannot mix densities of {} and {} particles",
                    particles, d.particles
                )));
            }
            acc = &acc + &(&d.coeffs.resized(cutoff) * *t);
        }
        Ok(Self::from_function(&acc, particles))
    }

    pub fn to_json(&self) -> DensityJson {
        DensityJson {
            particles: self.particles,
            cutoff: self.cutoff(),
            coeffs: self.coeffs.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_json(json: &DensityJson) -> Result<Self> {
        let f = PeriodicFunction::new(
            json.cutoff,
            json.coeffs
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )?;
        Ok(Self::from_function(&f, json.particles))
    }

    /// `x,rho` rows on the oversampled grid.
    pub fn to_csv(&self) -> String {
        let n = self.values.len();
        let mut out = String::from("x,rho\n");
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.17e},{:.17e}", grid_point(i, n), v).expect("string write");
        }
        out
    }

    /// Parses `x,rho` rows. Lines starting with `#` and a leading header are skipped.
    /// The `x` column must be the uniform grid `2πi/n`.
    pub fn from_csv(text: &str, particles: usize) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || line.starts_with("x") {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let (Some(x), Some(r), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse(format!("expected two columns in {line:?}")));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            xs.push(parse(x)?);
            values.push(parse(r)?);
        }
        let n = values.len();
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid_point(i, n)).abs() > 1e-9 {
                return Err(Error::Parse(format!(
                    "row {i}: x = {x} is not on the uniform {n}-point grid"
                )));
            }
        }
        Self::from_samples(&values, particles)
    }
}

/// Serialized density: `N`, band limit `K` and coefficients `m = -K..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(rename = "K")]
    pub cutoff: usize,
    pub coeffs: Vec<[f64; 2]>,
}
