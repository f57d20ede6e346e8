//! Finite fermionic Fock space over `L <= 12` orbitals in the occupation-number
//! representation. Bit `j` of a basis index marks orbital `j` as occupied.

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORBITALS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A state with fixed particle number in the Fock space of `L` orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    orbitals: usize,
    particles: usize,
    amps: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FockOp {
    Annihilate,
    Create,
}

impl FockVector {
    pub fn zero(orbitals: usize, particles: usize) -> Result<Self> {
        if orbitals > MAX_ORBITALS {
            return Err(Error::Infeasible(format!(
                "Fock space over {orbitals} orbitals exceeds the cap of {MAX_ORBITALS}"
            )));
        }
        if particles > orbitals {
            return Err(Error::InvalidArgument(format!(
                "{particles} fermions do not fit into {orbitals} orbitals"
            )));
        }
        Ok(Self {
            orbitals,
            particles,
            amps: vec![ZERO; 1 << orbitals],
        })
    }

    pub fn vacuum(orbitals: usize) -> Result<Self> {
        let mut v = Self::zero(orbitals, 0)?;
        v.amps[0] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// `a*_{j1} a*_{j2} ... a*_{jN} |vac⟩` for `j1 < j2 < ... < jN`, which has
    /// amplitude `+1` on the corresponding bitstring.
    pub fn determinant(orbitals: usize, occupied: &[usize]) -> Result<Self> {
        let bits = occupation_bits(orbitals, occupied)?;
        let mut v = Self::zero(orbitals, occupied.len())?;
        v.amps[bits] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn amplitude(&self, bits: usize) -> Complex64 {
        self.amps[bits]
    }

    /// Sets the amplitude of a basis state; its popcount must match the particle number.
    pub fn set_amplitude(&mut self, bits: usize, value: Complex64) -> Result<()> {
        if bits >= self.amps.len() || bits.count_ones() as usize != self.particles {
            return Err(Error::InvalidArgument(format!(
                "bitstring {bits:b} is not an {}-particle state over {} orbitals",
                self.particles, self.orbitals
            )));
        }
        self.amps[bits] = value;
        Ok(())
    }

    /// Nonzero `(bits, amplitude)` pairs in increasing bit order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(b, &a)| (b, a))
    }

    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &FockVector) -> Result<Self> {
        if self.orbitals != other.orbitals || self.particles != other.particles {
            return Err(Error::InvalidArgument(
                "cannot add Fock vectors from different sectors".into(),
            ));
        }
        Ok(Self {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(Complex64::new(1.0 / n, 0.0))
        }
    }

    pub fn to_json(&self) -> FockJson {
        let amplitudes = self
            .terms()
            .map(|(b, a)| (bitstring(b, self.orbitals), [a.re, a.im]))
            .collect();
        FockJson {
            orbitals: self.orbitals,
            particles: self.particles,
            amplitudes,
        }
    }

    pub fn from_json(json: &FockJson) -> Result<Self> {
        let mut v = Self::zero(json.orbitals, json.particles)?;
        for (key, &[re, im]) in &json.amplitudes {
            if key.len() != json.orbitals || !key.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Parse(format!("bad occupation bitstring {key:?}")));
            }
            let bits = key
                .chars()
                .enumerate()
                .filter(|(_, c)| *c == '1')
                .fold(0usize, |acc, (j, _)| acc | (1 << j));
            v.set_amplitude(bits, Complex64::new(re, im))?;
        }
        Ok(v)
    }
}

/// Serialized Fock vector: occupation bitstrings (orbital 0 first) mapped to
/// `[re, im]` amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockJson {
    #[serde(rename = "L")]
    pub orbitals: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub amplitudes: BTreeMap<String, [f64; 2]>,
}

fn bitstring(bits: usize, orbitals: usize) -> String {
    (0..orbitals)
        .map(|j| if bits >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn occupation_bits(orbitals: usize, occupied: &[usize]) -> Result<usize> {
    let mut bits = 0usize;
    for &j in occupied {
        if j >= orbitals {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: orbitals,
            });
        }
        if bits >> j & 1 == 1 {
            return Err(Error::PauliViolation(j));
        }
        bits |= 1 << j;
    }
    Ok(bits)
}

/// Jordan–Wigner sign `(-1)^{#occupied orbitals below j}`.
#[inline]
fn parity_below(bits: usize, j: usize) -> f64 {
    if (bits & ((1 << j) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Applies `a_j` or `a_j*` to a state.
pub fn fock_apply(op: FockOp, j: usize, state: &FockVector) -> Result<FockVector> {
    if j >= state.orbitals {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: state.orbitals,
        });
    }
    let particles = match op {
        FockOp::Annihilate => state.particles.saturating_sub(1),
        FockOp::Create => (state.particles + 1).min(state.orbitals),
    };
    let mut out = FockVector {
        orbitals: state.orbitals,
        particles,
        amps: vec![ZERO; state.amps.len()],
    };
    let mask = 1 << j;
    for (bits, a) in state.terms() {
        let occupied = bits & mask != 0;
        match (op, occupied) {
            (FockOp::Annihilate, true) => out.amps[bits ^ mask] += a * parity_below(bits, j),
            (FockOp::Create, false) => out.amps[bits | mask] += a * parity_below(bits, j),
            _ => {}
        }
    }
    Ok(out)
}

/// One-body reduced density matrix in the orbital basis,
/// `γ_ab = ⟨a_b Ψ, a_a Ψ⟩ = ⟨Ψ, a_b* a_a Ψ⟩`.
pub fn one_rdm(state: &FockVector) -> Mat<Complex64> {
    let lowered: Vec<FockVector> = (0..state.orbitals)
        .map(|a| fock_apply(FockOp::Annihilate, a, state).expect("index in range"))
        .collect();
    Mat::from_fn(state.orbitals, state.orbitals, |a, b| {
        lowered[b].inner(&lowered[a])
    })
}
