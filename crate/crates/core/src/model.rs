//! Model parameters, latent positions, the community vector and seeded
//! random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five scalars of the perturbed block model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub kappa: f64,
    pub gamma: f64,
}

/// Validates and builds [`ModelParams`].
pub fn make_params(n: usize, p1: f64, p2: f64, kappa: f64, gamma: f64) -> Result<ModelParams> {
    ModelParams::new(n, p1, p2, kappa, gamma)
}

impl ModelParams {
    pub fn new(n: usize, p1: f64, p2: f64, kappa: f64, gamma: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if ![p1, p2, kappa, gamma].iter().all(|v| v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if n < 2 || !n.is_multiple_of(2) {
            return bad(format!(
                "N = {n} must be a positive even integer (balanced communities)"
            ));
        }
        if !(p1 > 0.0 && p1 < 1.0) {
            return bad(format!("p1 = {p1} must lie in (0, 1)"));
        }
        if !(p2 > 0.0 && p2 < 1.0) {
            return bad(format!("p2 = {p2} must lie in (0, 1)"));
        }
        if p1 <= p2 {
            return bad(format!(
                "p1 = {p1} must exceed p2 = {p2} so that lambda2 > 0"
            ));
        }
        if !(0.0..=1.0).contains(&kappa) {
            return bad(format!("kappa = {kappa} must lie in [0, 1]"));
        }
        if gamma <= 0.0 {
            return bad(format!("gamma = {gamma} must be positive"));
        }
        if kappa + p1.max(p2) > 1.0 {
            return bad(format!(
                "kappa + max(p1, p2) = {} exceeds 1",
                kappa + p1.max(p2)
            ));
        }
        Ok(Self {
            n,
            p1,
            p2,
            kappa,
            gamma,
        })
    }

    /// Same model with a different kernel width.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.n, self.p1, self.p2, self.kappa, gamma)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.n, self.p1, self.p2, kappa, self.gamma)
    }
}

/// What a random stream is used for. Each purpose gets its own key so that
/// latents and edges drawn under one [`Seed`] never share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Latents,
    Edges,
    Other(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Latents => 0x4c41_5445_4e54_5331,
            Purpose::Edges => 0x4544_4745_5331_3131,
            Purpose::Other(t) => t.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15,
        }
    }
}

/// Base seed plus a trial index. Every `(value, stream)` pair selects an
/// independent ChaCha8 stream, so trial `i` of a sweep does not depend on
/// which worker runs it or in which order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(value: u64, stream: u64) -> Self {
        Self { value, stream }
    }

    /// Counter-based generator for one purpose of this trial.
    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut state = self.value ^ purpose.tag();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

/// N rows of 2-D latent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPositions(Vec<[f64; 2]>);

impl LatentPositions {
    pub fn new(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "latent coordinates must be finite".into(),
            ));
        }
        Ok(Self(rows))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn squared_norm(&self, i: usize) -> f64 {
        let [x, y] = self.0[i];
        x * x + y * y
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        let dx = self.0[i][0] - self.0[j][0];
        let dy = self.0[i][1] - self.0[j][1];
        dx * dx + dy * dy
    }
}

/// Draws `n` i.i.d. standard 2-D Gaussian rows from the latent stream of
/// `seed` (ChaCha8 output mapped through the ziggurat normal sampler).
pub fn sample_latent_rows(n: usize, seed: Seed) -> LatentPositions {
    let mut rng = seed.rng(Purpose::Latents);
    let rows = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            [x, y]
        })
        .collect();
    LatentPositions(rows)
}

pub fn sample_latents(params: &ModelParams, seed: Seed) -> LatentPositions {
    sample_latent_rows(params.n, seed)
}

/// The normalized community indicator: `+1/sqrt(N)` on the first half of the
/// vertices, `-1/sqrt(N)` on the second.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityVector(Vec<f64>);

impl CommunityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn community_vector(n: usize) -> Result<CommunityVector> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "N = {n} must be a positive even integer"
        )));
    }
    let h = 1.0 / (n as f64).sqrt();
    Ok(CommunityVector(
        (0..n).map(|i| if i < n / 2 { h } else { -h }).collect(),
    ))
}

/// The normalized all-ones vector.
pub fn ones_direction(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}
