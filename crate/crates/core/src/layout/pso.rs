use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{substream, tag};

use super::{Bounds, LayoutError, ScoreError, Scorer};

/// Swarm hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoParams {
    /// Inertia.
    pub k: f64,
    /// Attraction towards the particle's own best.
    pub c1: f64,
    /// Attraction towards the swarm's best.
    pub c2: f64,
    pub n_particles: usize,
    pub n_iters: usize,
    /// Draw r1, r2 per dimension instead of once per particle.
    pub per_dimension_random: bool,
    /// Initial velocities are uniform in ± this fraction of each range.
    pub init_velocity_fraction: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            k: 0.8,
            c1: 0.1,
            c2: 0.1,
            n_particles: 30,
            n_iters: 50,
            per_dimension_random: false,
            init_velocity_fraction: 0.1,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.n_particles == 0 {
            return Err(LayoutError::Param("swarm needs at least one particle".into()));
        }
        if ![self.k, self.c1, self.c2, self.init_velocity_fraction].iter().all(|v| v.is_finite()) {
            return Err(LayoutError::Param("non-finite swarm coefficient".into()));
        }
        Ok(())
    }
}

/// Complete swarm state. `gbest_score` always equals the maximum of
/// `pbest_score`.
#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub bounds: Bounds,
    pub params: PsoParams,
    pub seed: u64,
    pub iteration: u64,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub pbest: Vec<Vec<f64>>,
    pub pbest_score: Vec<f64>,
    pub gbest: Vec<f64>,
    pub gbest_score: f64,
}

/// `k·v + c1·r1·(pbest − a) + c2·r2·(gbest − a)` for one dimension.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(k: f64, c1: f64, c2: f64, r1: f64, r2: f64, v: f64, a: f64, pbest: f64, gbest: f64) -> f64 {
    k * v + c1 * r1 * (pbest - a) + c2 * r2 * (gbest - a)
}

fn score_all<S: Scorer + ?Sized>(scorer: &S, points: &[Vec<f64>]) -> Result<Vec<f64>, ScoreError> {
    points
        .par_iter()
        .map(|p| {
            let s = scorer.score(p)?;
            if s.is_finite() {
                Ok(s)
            } else {
                Err(ScoreError::NonFinite)
            }
        })
        .collect()
}

/// Index of the first maximum.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl Swarm {
    /// Random initial swarm. Particles listed in `seeds` replace the first
    /// random particles (clamped into bounds), which lets a search start
    /// from an incumbent configuration.
    pub fn new<S: Scorer + ?Sized>(
        scorer: &S,
        bounds: &Bounds,
        params: &PsoParams,
        seed: u64,
        seeds: &[Vec<f64>],
    ) -> Result<Self, LayoutError> {
        bounds.validate()?;
        params.validate()?;
        let dim = bounds.dim();
        let mut rng = substream(&[tag::PSO_INIT, seed]);
        let mut positions = Vec::with_capacity(params.n_particles);
        let mut velocities = Vec::with_capacity(params.n_particles);
        for _ in 0..params.n_particles {
            let a: Vec<f64> = (0..dim).map(|d| bounds.lower[d] + bounds.range(d) * rng.random::<f64>()).collect();
            let v: Vec<f64> = (0..dim)
                .map(|d| params.init_velocity_fraction * bounds.range(d) * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            positions.push(a);
            velocities.push(v);
        }
        for (slot, s) in positions.iter_mut().zip(seeds) {
            if s.len() != dim {
                return Err(LayoutError::Dimension {
                    expected: dim,
                    got: s.len(),
                });
            }
            slot.copy_from_slice(s);
            bounds.clamp(slot);
        }
        let scores = score_all(scorer, &positions)?;
        let best = argmax(&scores);
        Ok(Self {
            bounds: bounds.clone(),
            params: *params,
            seed,
            iteration: 0,
            gbest: positions[best].clone(),
            gbest_score: scores[best],
            pbest: positions.clone(),
            pbest_score: scores,
            positions,
            velocities,
        })
    }

    fn draw_coefficients(&self, particle: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = substream(&[tag::PSO_STEP, self.seed, self.iteration, particle as u64]);
        let dim = self.bounds.dim();
        if self.params.per_dimension_random {
            let r1 = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r2 = (0..dim).map(|_| rng.random::<f64>()).collect();
            (r1, r2)
        } else {
            let (r1, r2) = (rng.random::<f64>(), rng.random::<f64>());
            (vec![r1; dim], vec![r2; dim])
        }
    }
}

/// One synchronous swarm iteration. All particles move using the gbest of
/// the previous iteration; personal and global bests are updated afterwards
/// on strict improvement. If any evaluation fails the swarm is unchanged.
pub fn pso_step<S: Scorer + ?Sized>(swarm: &mut Swarm, scorer: &S) -> Result<(), LayoutError> {
    let p = swarm.params;
    let n = swarm.positions.len();
    let mut positions = swarm.positions.clone();
    let mut velocities = swarm.velocities.clone();
    for i in 0..n {
        let (r1, r2) = swarm.draw_coefficients(i);
        for d in 0..swarm.bounds.dim() {
            let v = velocity_update(
                p.k,
                p.c1,
                p.c2,
                r1[d],
                r2[d],
                velocities[i][d],
                positions[i][d],
                swarm.pbest[i][d],
                swarm.gbest[d],
            );
            velocities[i][d] = v;
            positions[i][d] += v;
        }
        swarm.bounds.clamp(&mut positions[i]);
    }
    let scores = score_all(scorer, &positions)?;

    for i in 0..n {
        if scores[i] > swarm.pbest_score[i] {
            swarm.pbest_score[i] = scores[i];
            swarm.pbest[i].clone_from(&positions[i]);
        }
    }
    let best = argmax(&swarm.pbest_score);
    if swarm.pbest_score[best] > swarm.gbest_score {
        swarm.gbest_score = swarm.pbest_score[best];
        swarm.gbest.clone_from(&swarm.pbest[best]);
    }
    swarm.positions = positions;
    swarm.velocities = velocities;
    swarm.iteration += 1;
    Ok(())
}

/// One line of the search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub gbest_score: f64,
    pub gbest_config: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best: Vec<f64>,
    pub best_score: f64,
    /// Entry 0 is the initial swarm, then one entry per iteration.
    pub trace: Vec<TraceRecord>,
}

pub fn run_pso<S: Scorer + ?Sized>(scorer: &S, bounds: &Bounds, params: &PsoParams, seed: u64) -> Result<PsoResult, LayoutError> {
    run_pso_seeded(scorer, bounds, params, seed, &[])
}

/// [`run_pso`] with explicit initial particles (see [`Swarm::new`]).
pub fn run_pso_seeded<S: Scorer + ?Sized>(
    scorer: &S,
    bounds: &Bounds,
    params: &PsoParams,
    seed: u64,
    seeds: &[Vec<f64>],
) -> Result<PsoResult, LayoutError> {
    let mut swarm = Swarm::new(scorer, bounds, params, seed, seeds)?;
    let record = |s: &Swarm| TraceRecord {
        iter: s.iteration as usize,
        gbest_score: s.gbest_score,
        gbest_config: s.gbest.clone(),
    };
    let mut trace = vec![record(&swarm)];
    for _ in 0..params.n_iters {
        pso_step(&mut swarm, scorer)?;
        trace.push(record(&swarm));
    }
    Ok(PsoResult {
        best: swarm.gbest,
        best_score: swarm.gbest_score,
        trace,
    })
}

/// Writes the trace as JSON lines.
pub fn write_trace<W: Write>(mut out: W, trace: &[TraceRecord]) -> io::Result<()> {
    for r in trace {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
