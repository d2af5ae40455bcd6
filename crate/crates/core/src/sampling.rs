//! Reproducible random phase-space states for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::system::{PhasePoint, SystemParams};

/// |q_i| range of sampled positions.
pub const Q_RANGE: (f64, f64) = (0.2, 2.0);
/// p_i range of sampled momenta.
pub const P_RANGE: (f64, f64) = (-2.0, 2.0);

/// Seeded sampler: q_i uniform in [0.2, 2] (sign randomized only where
/// b_i = 0), p_i uniform in [−2, 2].
#[derive(Debug, Clone)]
pub struct StateSampler {
    rng: ChaCha8Rng,
    b: Vec<f64>,
    seed: u64,
}

impl StateSampler {
    pub fn new(params: &SystemParams, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            b: params.b().to_vec(),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&mut self) -> PhasePoint {
        let mut q = Vec::with_capacity(self.b.len());
        for &bi in &self.b {
            let mut v = self.rng.gen_range(Q_RANGE.0..=Q_RANGE.1);
            if bi == 0.0 && self.rng.gen_bool(0.5) {
                v = -v;
            }
            q.push(v);
        }
        let p = (0..self.b.len())
            .map(|_| self.rng.gen_range(P_RANGE.0..=P_RANGE.1))
            .collect();
        PhasePoint::new(q, p)
    }

    /// Draws until `accept` holds, giving up after `max_tries`.
    pub fn sample_where(
        &mut self,
        max_tries: usize,
        mut accept: impl FnMut(&PhasePoint) -> bool,
    ) -> Option<PhasePoint> {
        (0..max_tries).map(|_| self.sample()).find(|s| accept(s))
    }
}
