use log::info;
use serde::{Deserialize, Serialize};

use crate::layout::{run_pso_seeded, PsoParams, ScoreError, Scorer};
use crate::rng::{mix_seed, tag};
use crate::scene::SceneState;

use super::adam::{AdamParams, SceneOptimizer};
use super::schedule::{schedule_at, GuidanceSchedule};
use super::step::{total_gradient, GuidanceContext, LossReport, RenderConfig};
use super::GuidanceError;

/// Scores a candidate layout of the current scene.
pub trait SceneScorer: Sync {
    fn score_config(&self, state: &SceneState, config: &[f64]) -> Result<f64, ScoreError>;
}

/// Layout-only scorers ignore the scene contents.
impl<S: Scorer> SceneScorer for S {
    fn score_config(&self, _state: &SceneState, config: &[f64]) -> Result<f64, ScoreError> {
        self.score(config)
    }
}

struct Frozen<'a> {
    scorer: &'a dyn SceneScorer,
    state: &'a SceneState,
}

impl Scorer for Frozen<'_> {
    fn score(&self, config: &[f64]) -> Result<f64, ScoreError> {
        self.scorer.score_config(self.state, config)
    }
}

/// Run configuration file contents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schedule: GuidanceSchedule,
    pub render: RenderConfig,
    pub optimizer: AdamParams,
    pub pso: PsoParams,
    pub seed: u64,
}

/// One line of the optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Step(LossReport),
    Pso {
        iter: u64,
        score_before: Option<f64>,
        score_after: Option<f64>,
        config: Vec<f64>,
    },
}

/// Receives trace events and checkpoint requests from [`optimize_scene`].
pub trait RunObserver {
    fn event(&mut self, _event: &TraceEvent) -> Result<(), GuidanceError> {
        Ok(())
    }

    /// Called with the scene state right before each layout phase.
    fn checkpoint(&mut self, _iter: u64, _state: &SceneState) -> Result<(), GuidanceError> {
        Ok(())
    }
}

impl RunObserver for () {}

/// Collects events in memory.
#[derive(Debug, Default)]
pub struct TraceCollector {
    pub events: Vec<TraceEvent>,
    pub checkpoints: Vec<u64>,
}

impl RunObserver for TraceCollector {
    fn event(&mut self, event: &TraceEvent) -> Result<(), GuidanceError> {
        self.events.push(event.clone());
        Ok(())
    }

    fn checkpoint(&mut self, iter: u64, _state: &SceneState) -> Result<(), GuidanceError> {
        self.checkpoints.push(iter);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub iterations: u64,
    pub pso_phases: usize,
}

/// Alternates guidance steps on the scene model with layout phases.
///
/// Iterations run from 1 to `total_iters`. Each one takes a guidance step;
/// when the schedule flags a layout phase, the state is checkpointed and a
/// swarm search (seeded with the current layout as one particle, so it can
/// only improve) picks the new object poses.
pub fn optimize_scene(
    state: &mut SceneState,
    config: &RunConfig,
    ctx: &GuidanceContext,
    scorer: &dyn SceneScorer,
    observer: &mut dyn RunObserver,
) -> Result<RunSummary, GuidanceError> {
    config.schedule.validate()?;
    let mut optimizer = SceneOptimizer::new(state, config.optimizer);
    let mut pso_phases = 0;
    for iter in 1..=config.schedule.total_iters {
        let (grad, report) = total_gradient(state, ctx, &config.schedule, iter, config.seed)?;
        optimizer.apply(state, &grad);
        observer.event(&TraceEvent::Step(report))?;

        if schedule_at(&config.schedule, iter).pso_due {
            observer.checkpoint(iter, state)?;
            pso_phases += 1;
            let event = if state.objects.is_empty() {
                TraceEvent::Pso {
                    iter,
                    score_before: None,
                    score_after: None,
                    config: vec![],
                }
            } else {
                let incumbent = state.config().0;
                let frozen = Frozen { scorer, state };
                let before = frozen.score(&incumbent)?;
                let seed = mix_seed(&[tag::PSO_PHASE, config.seed, iter]);
                let result = run_pso_seeded(&frozen, &state.bounds(), &config.pso, seed, &[incumbent])?;
                info!("layout phase at iteration {iter}: score {before:.6} -> {:.6}", result.best_score);
                state.set_config(&result.best);
                TraceEvent::Pso {
                    iter,
                    score_before: Some(before),
                    score_after: Some(result.best_score),
                    config: result.best,
                }
            };
            observer.event(&event)?;
        }
    }
    Ok(RunSummary {
        iterations: config.schedule.total_iters,
        pso_phases,
    })
}
