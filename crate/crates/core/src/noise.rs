//! Driving noise: Brownian increments and marked Poisson jumps.
//!
//! Every path draws from its own ChaCha stream. The key is derived from the
//! master seed and a purpose tag, and the stream number is the path index, so
//! a path's noise does not depend on which other paths are generated or in
//! what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SvieError};
use crate::grid::TimeGrid;
use crate::levy::LevyMeasure;

/// `(master_seed, path_index)`: fully determines a [`NoisePath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedLineage {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedLineage {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
        }
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Brownian = 0x6272_6f77_6e69_616e,
    Jumps = 0x6a75_6d70_7300_0000,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(lineage: SeedLineage, purpose: Purpose) -> ChaCha8Rng {
    let mut state = lineage.master_seed ^ purpose as u64;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(lineage.path_index);
    rng
}

/// A single jump of the Poisson random measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub mark: f64,
}

/// One realization of the driving noise on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: TimeGrid,
    brownian_increments: Vec<f64>,
    jumps: Vec<Jump>,
    lineage: Option<SeedLineage>,
}

impl NoisePath {
    /// Samples both noise sources for `lineage`.
    pub fn sample(grid: &TimeGrid, measure: &LevyMeasure, lineage: SeedLineage) -> Self {
        Self {
            grid: grid.clone(),
            brownian_increments: sample_brownian(grid, lineage),
            jumps: sample_jumps(grid, measure, lineage),
            lineage: Some(lineage),
        }
    }

    /// Builds a path from explicit increments and jumps.
    pub fn from_parts(
        grid: &TimeGrid,
        brownian_increments: Vec<f64>,
        mut jumps: Vec<Jump>,
    ) -> Result<Self> {
        if brownian_increments.len() != grid.steps() {
            return Err(SvieError::Config(format!(
                "expected {} Brownian increments, got {}",
                grid.steps(),
                brownian_increments.len()
            )));
        }
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        if let Some(bad) = jumps
            .iter()
            .find(|j| !(j.time > 0.0 && j.time <= grid.horizon()) || !j.mark.is_finite())
        {
            return Err(SvieError::Config(format!(
                "jump at t = {} with mark {} lies outside (0, T]",
                bad.time, bad.mark
            )));
        }
        if jumps.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(SvieError::Config("jump times must be distinct".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            brownian_increments,
            jumps,
            lineage: None,
        })
    }

    /// No Brownian motion and no jumps.
    pub fn quiet(grid: &TimeGrid) -> Self {
        Self {
            grid: grid.clone(),
            brownian_increments: vec![0.0; grid.steps()],
            jumps: Vec::new(),
            lineage: None,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn brownian_increments(&self) -> &[f64] {
        &self.brownian_increments
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn lineage(&self) -> Option<SeedLineage> {
        self.lineage
    }

    /// Same Brownian increments, jumps removed.
    pub fn without_jumps(&self) -> Self {
        Self {
            jumps: Vec::new(),
            ..self.clone()
        }
    }
}

/// `n` independent `Normal(0, Δt)` increments.
pub fn sample_brownian(grid: &TimeGrid, lineage: SeedLineage) -> Vec<f64> {
    let mut rng = stream(lineage, Purpose::Brownian);
    let scale = grid.dt().sqrt();
    (0..grid.steps())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect()
}

/// Poisson(`ν(R₀)·T`) jumps at uniform times on `(0, T]` with i.i.d. marks, sorted by time.
pub fn sample_jumps(grid: &TimeGrid, measure: &LevyMeasure, lineage: SeedLineage) -> Vec<Jump> {
    let intensity = measure.total_mass() * grid.horizon();
    if intensity == 0.0 {
        return Vec::new();
    }
    let mut rng = stream(lineage, Purpose::Jumps);
    let count = Poisson::new(intensity)
        .expect("finite positive intensity")
        .sample(&mut rng) as usize;
    let horizon = grid.horizon();
    let mut times: Vec<f64> = (0..count)
        .map(|_| horizon * (1.0 - rng.random::<f64>()))
        .collect();
    times.sort_by(f64::total_cmp);
    times
        .into_iter()
        .map(|time| Jump {
            time,
            mark: measure.marks().sample(&mut rng),
        })
        .collect()
}
