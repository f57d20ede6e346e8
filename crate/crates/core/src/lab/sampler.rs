use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::fourier::{PeriodicFunction, Potential, TWO_PI};

/// Random admissible potentials: a smooth trigonometric part plus optional deltas.
///
/// The cosine and sine amplitudes of mode `m <= modes` are normal with variance
/// `1/(1+m²)`, clipped to `[-1, 1]` and scaled by `amplitude`. Each of
/// `max_deltas` slots independently holds a delta with probability
/// `delta_probability`, placed uniformly with weight uniform in
/// `[-delta_strength, delta_strength]`.
#[derive(Clone, Debug, Serialize)]
pub struct Sampler {
    pub amplitude: f64,
    pub delta_strength: f64,
    pub modes: usize,
    pub max_deltas: usize,
    pub delta_probability: f64,
}

impl Sampler {
    pub fn new(amplitude: f64, delta_strength: f64) -> Self {
        Self {
            amplitude,
            delta_strength,
            modes: 16,
            max_deltas: 3,
            delta_probability: 0.5,
        }
    }

    /// Smooth potentials only.
    pub fn smooth(amplitude: f64) -> Self {
        Self {
            max_deltas: 0,
            ..Self::new(amplitude, 0.0)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Potential {
        let draw = |rng: &mut R, m: usize| {
            let sd = 1.0 / (1.0 + (m * m) as f64).sqrt();
            let z: f64 = Normal::new(0.0, sd).expect("positive deviation").sample(rng);
            self.amplitude * z.clamp(-1.0, 1.0)
        };
        let a0 = draw(rng, 0);
        let terms: Vec<(f64, f64)> = (1..=self.modes)
            .map(|m| (draw(rng, m), draw(rng, m)))
            .collect();
        let mut v = Potential::embed(&PeriodicFunction::from_cos_sin(a0, &terms));
        for _ in 0..self.max_deltas {
            if rng.random_bool(self.delta_probability) {
                let x0 = rng.random_range(0.0..TWO_PI);
                let alpha = if self.delta_strength > 0.0 {
                    rng.random_range(-self.delta_strength..=self.delta_strength)
                } else {
                    0.0
                };
                v = v.with_delta(x0, alpha);
            }
        }
        v
    }
}
