//! Fourier representation of functions and distributions on the torus `T = R / 2πZ`.
//!
//! Every coefficient in this crate is taken against the orthonormal basis
//!
//! ```text
//! e_m(x) = (2π)^(-1/2) exp(i m x),    m ∈ Z,
//! ```
//!
//! so a [`PeriodicFunction`] with cutoff `K` is `f = Σ_{|m|<=K} f̂_m e_m` and its
//! L² norm is the Euclidean norm of the coefficient vector. A [`Potential`] is a
//! bounded linear functional on H¹(T) stored through its action on the basis,
//! `d_m = v(e_m)`, plus a finite list of weighted Dirac deltas kept symbolic until
//! a consumer folds them in at a stated cutoff.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;
/// `(2π)^(-1/2)`, the value of `e_0`.
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `(2π)^(1/2)`.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Absolute tolerance for conjugate-symmetry (realness) checks.
pub const REAL_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Grid size used for every nonlinear grid operation on functions of band `cutoff`:
/// `4 (2K + 1)` rounded up to a power of two.
pub fn oversampled_len(cutoff: usize) -> usize {
    (4 * (2 * cutoff + 1)).next_power_of_two()
}

/// Position of the `i`-th point of an `n`-point uniform grid on `[0, 2π)`.
#[inline]
pub fn grid_point(i: usize, n: usize) -> f64 {
    TWO_PI * i as f64 / n as f64
}

/// A band-limited element of H¹(T).
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl PeriodicFunction {
    /// Builds a function from coefficients listed in `m = -K..=K` order.
    pub fn new(cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * cutoff + 1 {
            return Err(Error::LengthMismatch {
                expected: 2 * cutoff + 1,
                got: coeffs.len(),
            });
        }
        Ok(Self { cutoff, coeffs })
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self {
            cutoff,
            coeffs: vec![ZERO; 2 * cutoff + 1],
        }
    }

    /// The basis function `e_m`, represented at `cutoff >= |m|`.
    pub fn basis(m: i64, cutoff: usize) -> Self {
        assert!(m.unsigned_abs() as usize <= cutoff, "mode {m} outside cutoff {cutoff}");
        let mut f = Self::zeros(cutoff);
        f.coeffs[(m + cutoff as i64) as usize] = Complex64::new(1.0, 0.0);
        f
    }

    /// The constant function with value `c`.
    pub fn constant(c: f64, cutoff: usize) -> Self {
        let mut f = Self::zeros(cutoff);
        f.coeffs[cutoff] = Complex64::new(c * SQRT_2PI, 0.0);
        f
    }

    /// Real trigonometric polynomial `a0 + Σ_{m>=1} (a_m cos mx + b_m sin mx)`,
    /// where `terms[m-1] = (a_m, b_m)`.
    pub fn from_cos_sin(a0: f64, terms: &[(f64, f64)]) -> Self {
        let cutoff = terms.len();
        let mut f = Self::zeros(cutoff);
        f.coeffs[cutoff] = Complex64::new(a0 * SQRT_2PI, 0.0);
        let h = 0.5 * SQRT_2PI;
        for (i, &(a, b)) in terms.iter().enumerate() {
            let m = i + 1;
            f.coeffs[cutoff + m] = Complex64::new(h * a, -h * b);
            f.coeffs[cutoff - m] = Complex64::new(h * a, h * b);
        }
        f
    }

    /// Band-limited interpolant of `f` at `cutoff`, sampled on the oversampled grid.
    pub fn interpolate<F: Fn(f64) -> Complex64>(f: F, cutoff: usize) -> Self {
        let n = oversampled_len(cutoff);
        Grid::from_fn(n, f)
            .to_coeffs(cutoff)
            .expect("oversampled grid always covers the cutoff")
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Coefficients in `m = -K..=K` order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `f̂_m`; zero outside the band.
    pub fn coeff(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.cutoff {
            ZERO
        } else {
            self.coeffs[(m + self.cutoff as i64) as usize]
        }
    }

    /// Iterates `(m, f̂_m)`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k = self.cutoff as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - k, c))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let k = self.cutoff as i64;
        let step = Complex64::from_polar(1.0, x);
        let mut phase = Complex64::from_polar(1.0, -(k as f64) * x);
        let mut acc = ZERO;
        for &c in &self.coeffs {
            acc += c * phase;
            phase *= step;
        }
        acc * FRAC_1_SQRT_2PI
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(x).re
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(Σ_m (1 + m²) |f̂_m|²)^(1/2)`.
    pub fn h1_norm(&self) -> f64 {
        self.modes()
            .map(|(m, c)| (1.0 + (m * m) as f64) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self, other⟩ = ∫ conj(self) other`.
    pub fn inner(&self, other: &PeriodicFunction) -> Complex64 {
        let k = self.cutoff.min(other.cutoff) as i64;
        (-k..=k).map(|m| self.coeff(m).conj() * other.coeff(m)).sum()
    }

    /// `∫ f dx = √(2π) f̂_0`.
    pub fn integral(&self) -> Complex64 {
        self.coeff(0) * SQRT_2PI
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .modes()
            .map(|(m, c)| c * Complex64::new(0.0, m as f64))
            .collect();
        Self {
            cutoff: self.cutoff,
            coeffs,
        }
    }

    /// Complex conjugate: `conj(f)^_m = conj(f̂_{-m})`.
    pub fn conj(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        Self {
            cutoff: self.cutoff,
            coeffs,
        }
    }

    /// Truncates or zero-pads to a new cutoff.
    pub fn resized(&self, cutoff: usize) -> Self {
        let k = cutoff as i64;
        let coeffs = (-k..=k).map(|m| self.coeff(m)).collect();
        Self { cutoff, coeffs }
    }

    /// `max_m |f̂_{-m} - conj(f̂_m)|`.
    pub fn realness_defect(&self) -> f64 {
        let k = self.cutoff as i64;
        (0..=k)
            .map(|m| (self.coeff(-m) - self.coeff(m).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.realness_defect() <= REAL_TOL
    }

    /// Projects onto real functions by symmetrising the coefficients.
    pub fn real_part(&self) -> Self {
        let k = self.cutoff as i64;
        let coeffs = (-k..=k)
            .map(|m| 0.5 * (self.coeff(m) + self.coeff(-m).conj()))
            .collect();
        Self {
            cutoff: self.cutoff,
            coeffs,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn sample(&self, n: usize) -> Result<Grid> {
        grid_sample(self, n)
    }

    pub fn to_json(&self) -> FunctionJson {
        FunctionJson {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_json(json: &FunctionJson) -> Result<Self> {
        Self::new(
            json.cutoff,
            json.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        )
    }
}

impl Add for &PeriodicFunction {
    type Output = PeriodicFunction;
    fn add(self, rhs: &PeriodicFunction) -> PeriodicFunction {
        let k = self.cutoff.max(rhs.cutoff) as i64;
        let coeffs = (-k..=k).map(|m| self.coeff(m) + rhs.coeff(m)).collect();
        PeriodicFunction {
            cutoff: k as usize,
            coeffs,
        }
    }
}

impl Sub for &PeriodicFunction {
    type Output = PeriodicFunction;
    fn sub(self, rhs: &PeriodicFunction) -> PeriodicFunction {
        self + &(-rhs)
    }
}

impl Neg for &PeriodicFunction {
    type Output = PeriodicFunction;
    fn neg(self) -> PeriodicFunction {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<f64> for &PeriodicFunction {
    type Output = PeriodicFunction;
    fn mul(self, rhs: f64) -> PeriodicFunction {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// Serialized form of a [`PeriodicFunction`]: coefficients as `[re, im]` pairs in
/// `m = -K..=K` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionJson {
    #[serde(rename = "K")]
    pub cutoff: usize,
    pub coeffs: Vec<[f64; 2]>,
}

/// Values of a function on the uniform grid `x_i = 2πi/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    values: Vec<Complex64>,
}

impl Grid {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(n: usize, f: F) -> Self {
        Self {
            values: (0..n).map(|i| f(grid_point(i, n))).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn x(&self, i: usize) -> f64 {
        grid_point(i, self.n())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn to_coeffs(&self, cutoff: usize) -> Result<PeriodicFunction> {
        grid_to_coeffs(self, cutoff)
    }
}

/// Inverse discrete Fourier transform: `values_i = Σ_m f̂_m e_m(x_i)`.
pub fn grid_sample(f: &PeriodicFunction, n: usize) -> Result<Grid> {
    let k = f.cutoff();
    if n < 2 * k + 1 {
        return Err(Error::Undersampled {
            n,
            cutoff: k,
            required: 2 * k + 1,
        });
    }
    let mut buf = vec![ZERO; n];
    for (m, c) in f.modes() {
        buf[m.rem_euclid(n as i64) as usize] += c;
    }
    fft_in_place(&mut buf, true);
    for v in &mut buf {
        *v *= FRAC_1_SQRT_2PI;
    }
    Ok(Grid { values: buf })
}

/// Forward discrete Fourier transform onto `|m| <= cutoff`:
/// `f̂_m = (2π/n) Σ_i values_i conj(e_m(x_i))`.
///
/// Exact for trigonometric polynomials of degree below `n/2`; higher modes alias.
pub fn grid_to_coeffs(g: &Grid, cutoff: usize) -> Result<PeriodicFunction> {
    let n = g.n();
    if 2 * cutoff + 1 > n {
        return Err(Error::Undersampled {
            n,
            cutoff,
            required: 2 * cutoff + 1,
        });
    }
    let mut buf = g.values.clone();
    fft_in_place(&mut buf, false);
    let scale = SQRT_2PI / n as f64;
    let k = cutoff as i64;
    let coeffs = (-k..=k)
        .map(|m| buf[m.rem_euclid(n as i64) as usize] * scale)
        .collect();
    PeriodicFunction::new(cutoff, coeffs)
}

/// Exact product of two band-limited functions, returned at cutoff `K_f + K_g`.
pub fn pointwise_multiply(f: &PeriodicFunction, g: &PeriodicFunction) -> PeriodicFunction {
    let cutoff = f.cutoff() + g.cutoff();
    let n = oversampled_len(cutoff);
    let fv = grid_sample(f, n).expect("oversampled");
    let gv = grid_sample(g, n).expect("oversampled");
    let prod = Grid::new(
        fv.values
            .iter()
            .zip(&gv.values)
            .map(|(a, b)| a * b)
            .collect(),
    );
    grid_to_coeffs(&prod, cutoff).expect("oversampled")
}

/// `max_i |f(x_i)|` over an `n`-point grid, `n >= 8K`.
pub fn linf_norm(f: &PeriodicFunction, n: usize) -> Result<f64> {
    let required = (8 * f.cutoff()).max(1);
    if n < required {
        return Err(Error::Undersampled {
            n,
            cutoff: f.cutoff(),
            required,
        });
    }
    Ok(grid_sample(f, n)?
        .values
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max))
}

/// A weighted Dirac delta `alpha · δ_{x0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub x0: f64,
    pub alpha: f64,
}

impl Delta {
    /// `δ_{x0}(e_m) = e_m(x0)` scaled by alpha.
    fn action_on_mode(&self, m: i64) -> Complex64 {
        Complex64::from_polar(self.alpha * FRAC_1_SQRT_2PI, m as f64 * self.x0)
    }
}

/// An element of H⁻¹(T): dual coefficients `d_m = v(e_m)` for `|m| <= cutoff`
/// (zero beyond) plus symbolic deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    cutoff: usize,
    dual: Vec<Complex64>,
    deltas: Vec<Delta>,
}

/// A dual norm together with the cutoff it was truncated at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualNorm {
    pub value: f64,
    pub cutoff: usize,
}

impl Potential {
    pub fn new(cutoff: usize, dual: Vec<Complex64>, deltas: Vec<Delta>) -> Result<Self> {
        if dual.len() != 2 * cutoff + 1 {
            return Err(Error::LengthMismatch {
                expected: 2 * cutoff + 1,
                got: dual.len(),
            });
        }
        let mut v = Self {
            cutoff,
            dual,
            deltas: Vec::with_capacity(deltas.len()),
        };
        for d in deltas {
            v = v.with_delta(d.x0, d.alpha);
        }
        Ok(v)
    }

    pub fn zero() -> Self {
        Self {
            cutoff: 0,
            dual: vec![ZERO],
            deltas: Vec::new(),
        }
    }

    /// The constant function `c` acting through the Riesz map: `d_0 = c √(2π)`.
    pub fn constant(c: f64) -> Self {
        Self {
            cutoff: 0,
            dual: vec![Complex64::new(c * SQRT_2PI, 0.0)],
            deltas: Vec::new(),
        }
    }

    pub fn delta(x0: f64, alpha: f64) -> Self {
        Self::zero().with_delta(x0, alpha)
    }

    /// Riesz embedding `f ↦ ⟨f, ·⟩`, i.e. `d_m = conj(f̂_m)`.
    pub fn embed(f: &PeriodicFunction) -> Self {
        Self {
            cutoff: f.cutoff(),
            dual: f.coeffs().iter().map(|c| c.conj()).collect(),
            deltas: Vec::new(),
        }
    }

    /// Adds `alpha · δ_{x0}`, wrapping `x0` into `[0, 2π)`.
    pub fn with_delta(mut self, x0: f64, alpha: f64) -> Self {
        let mut x0 = x0.rem_euclid(TWO_PI);
        if x0 >= TWO_PI {
            x0 = 0.0;
        }
        self.deltas.push(Delta { x0, alpha });
        self
    }

    /// `v + c·1`.
    pub fn shifted(&self, c: f64) -> Self {
        self + &Self::constant(c)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dual_coeffs(&self) -> &[Complex64] {
        &self.dual
    }

    pub fn deltas(&self) -> &[Delta] {
        &self.deltas
    }

    /// Smooth-part coefficient `d_m` (zero outside the cutoff).
    pub fn dual_coeff(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.cutoff {
            ZERO
        } else {
            self.dual[(m + self.cutoff as i64) as usize]
        }
    }

    /// `v(e_m)` including the deltas.
    pub fn folded_coeff(&self, m: i64) -> Complex64 {
        self.dual_coeff(m) + self.deltas.iter().map(|d| d.action_on_mode(m)).sum::<Complex64>()
    }

    /// The truncation of `v` to `|m| <= cutoff` with deltas folded into the
    /// dual coefficients.
    pub fn fold(&self, cutoff: usize) -> Self {
        let k = cutoff as i64;
        Self {
            cutoff,
            dual: (-k..=k).map(|m| self.folded_coeff(m)).collect(),
            deltas: Vec::new(),
        }
    }

    /// The smooth part as a function (inverse Riesz map), `f̂_m = conj(d_m)`.
    pub fn smooth_part(&self) -> PeriodicFunction {
        PeriodicFunction::new(self.cutoff, self.dual.iter().map(|c| c.conj()).collect())
            .expect("lengths agree")
    }

    /// `max_m |d_{-m} - conj(d_m)|`, or infinity for non-finite delta data.
    pub fn realness_defect(&self) -> f64 {
        if self.deltas.iter().any(|d| !d.alpha.is_finite() || !d.x0.is_finite()) {
            return f64::INFINITY;
        }
        let k = self.cutoff as i64;
        (0..=k)
            .map(|m| (self.dual_coeff(-m) - self.dual_coeff(m).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Membership in the admissible potential space: real on real functions.
    pub fn is_real(&self) -> bool {
        self.realness_defect() <= REAL_TOL
    }

    /// `v(f) = Σ f̂_m d_m + Σ alpha f(x0)`.
    ///
    /// Fails when `f` has modes beyond the cutoff of a nonzero smooth part, since
    /// the truncated dual coefficients do not determine the pairing there.
    pub fn apply(&self, f: &PeriodicFunction) -> Result<Complex64> {
        let smooth_nonzero = self.dual.iter().any(|c| *c != ZERO);
        if f.cutoff() > self.cutoff && smooth_nonzero {
            return Err(Error::CutoffMismatch {
                function: f.cutoff(),
                potential: self.cutoff,
            });
        }
        Ok(self.pair(f))
    }

    /// The pairing with modes beyond the cutoff treated as zero.
    pub(crate) fn pair(&self, f: &PeriodicFunction) -> Complex64 {
        let k = self.cutoff.min(f.cutoff()) as i64;
        let smooth: Complex64 = (-k..=k).map(|m| f.coeff(m) * self.dual_coeff(m)).sum();
        smooth + self.deltas.iter().map(|d| d.alpha * f.eval(d.x0)).sum::<Complex64>()
    }

    /// `(Σ_{|m|<=M} |d_m|² / (1 + m²))^(1/2)` after folding at `M`: the exact
    /// H⁻¹ norm of the functional truncated to `|m| <= M`.
    pub fn dual_norm(&self, cutoff: usize) -> DualNorm {
        let k = cutoff as i64;
        let value = (-k..=k)
            .map(|m| self.folded_coeff(m).norm_sqr() / (1.0 + (m * m) as f64))
            .sum::<f64>()
            .sqrt();
        DualNorm { value, cutoff }
    }

    pub fn to_json(&self) -> PotentialJson {
        PotentialJson {
            fourier: self
                .dual
                .iter()
                .enumerate()
                .map(|(i, c)| FourierEntry {
                    m: i as i64 - self.cutoff as i64,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            deltas: self.deltas.clone(),
        }
    }

    pub fn from_json(json: &PotentialJson) -> Result<Self> {
        let cutoff = json
            .fourier
            .iter()
            .map(|e| e.m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut dual = vec![ZERO; 2 * cutoff + 1];
        let mut seen = vec![false; 2 * cutoff + 1];
        for e in &json.fourier {
            let i = (e.m + cutoff as i64) as usize;
            if seen[i] {
                return Err(Error::Parse(format!("duplicate Fourier mode m = {}", e.m)));
            }
            seen[i] = true;
            dual[i] = Complex64::new(e.re, e.im);
        }
        for d in &json.deltas {
            if !(0.0..TWO_PI).contains(&d.x0) {
                return Err(Error::Parse(format!(
                    "delta position {} outside [0, 2π)",
                    d.x0
                )));
            }
        }
        Self::new(cutoff, dual, json.deltas.clone())
    }
}

impl Add for &Potential {
    type Output = Potential;
    fn add(self, rhs: &Potential) -> Potential {
        let k = self.cutoff.max(rhs.cutoff) as i64;
        Potential {
            cutoff: k as usize,
            dual: (-k..=k).map(|m| self.dual_coeff(m) + rhs.dual_coeff(m)).collect(),
            deltas: self.deltas.iter().chain(&rhs.deltas).copied().collect(),
        }
    }
}

impl Mul<f64> for &Potential {
    type Output = Potential;
    fn mul(self, s: f64) -> Potential {
        Potential {
            cutoff: self.cutoff,
            dual: self.dual.iter().map(|c| c * s).collect(),
            deltas: self
                .deltas
                .iter()
                .map(|d| Delta {
                    x0: d.x0,
                    alpha: d.alpha * s,
                })
                .collect(),
        }
    }
}

impl Sub for &Potential {
    type Output = Potential;
    fn sub(self, rhs: &Potential) -> Potential {
        self + &(rhs * -1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierEntry {
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

/// Serialized form of a [`Potential`]; `fourier` holds the dual coefficients `d_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialJson {
    #[serde(default)]
    pub fourier: Vec<FourierEntry>,
    #[serde(default)]
    pub deltas: Vec<Delta>,
}

/// `v(f)`; see [`Potential::apply`].
pub fn apply_potential(v: &Potential, f: &PeriodicFunction) -> Result<Complex64> {
    v.apply(f)
}

/// `‖v‖_{H⁻¹}` truncated at `cutoff`; see [`Potential::dual_norm`].
pub fn dual_norm(v: &Potential, cutoff: usize) -> DualNorm {
    v.dual_norm(cutoff)
}
