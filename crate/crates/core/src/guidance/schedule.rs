use serde::{Deserialize, Serialize};

use super::GuidanceError;

/// Iteration-dependent gating, annealing and loss weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceSchedule {
    pub total_iters: u64,
    /// Panoramic guidance starts here...
    pub pano_warmup_end: u64,
    /// ...and stops here.
    pub pano_cutoff_start: u64,
    pub t_min: f64,
    pub t_max_start: f64,
    pub t_max_end: f64,
    /// `t_max` is `t_max_start` up to this iteration, then linear...
    pub anneal_start: u64,
    /// ...reaching `t_max_end` here.
    pub anneal_end: u64,
    pub lambda_pers: f64,
    pub lambda_pano: f64,
    pub lambda_dep: f64,
    pub pso_period: u64,
}

impl Default for GuidanceSchedule {
    fn default() -> Self {
        Self {
            total_iters: 20_000,
            pano_warmup_end: 5_000,
            pano_cutoff_start: 15_000,
            t_min: 0.02,
            t_max_start: 0.5,
            t_max_end: 0.3,
            anneal_start: 5_000,
            anneal_end: 20_000,
            lambda_pers: 1.0,
            lambda_pano: 0.1,
            lambda_dep: 1e4,
            pso_period: 3_000,
        }
    }
}

/// Values of the schedule at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub pano_enabled: bool,
    pub t_max: f64,
    pub lambda_pers: f64,
    pub lambda_pano_effective: f64,
    pub lambda_dep: f64,
    pub pso_due: bool,
}

fn scaled(mark: u64, from: u64, to: u64) -> u64 {
    ((mark as u128 * to as u128 + from as u128 / 2) / from as u128) as u64
}

impl GuidanceSchedule {
    /// Same schedule compressed or stretched to `total` iterations. The
    /// pano window and anneal marks scale proportionally; the PSO period
    /// does not.
    pub fn with_total_iters(&self, total: u64) -> Self {
        let from = self.total_iters.max(1);
        Self {
            total_iters: total,
            pano_warmup_end: scaled(self.pano_warmup_end, from, total),
            pano_cutoff_start: scaled(self.pano_cutoff_start, from, total),
            anneal_start: scaled(self.anneal_start, from, total),
            anneal_end: scaled(self.anneal_end, from, total),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        let bad = |m: &str| Err(GuidanceError::Schedule(m.into()));
        if !(self.pano_warmup_end <= self.pano_cutoff_start && self.pano_cutoff_start <= self.total_iters) {
            return bad("need pano_warmup_end ≤ pano_cutoff_start ≤ total_iters");
        }
        if self.anneal_start > self.anneal_end {
            return bad("anneal_start must not exceed anneal_end");
        }
        if !(0.0 < self.t_min && self.t_min < self.t_max_start.min(self.t_max_end) && self.t_max_start.max(self.t_max_end) < 1.0) {
            return bad("need 0 < t_min < t_max < 1 throughout");
        }
        if self.pso_period == 0 {
            return bad("pso_period must be positive");
        }
        if ![self.lambda_pers, self.lambda_pano, self.lambda_dep].iter().all(|v| v.is_finite()) {
            return bad("loss weights must be finite");
        }
        Ok(())
    }

    pub fn t_max_at(&self, iter: u64) -> f64 {
        if iter <= self.anneal_start || self.anneal_end == self.anneal_start {
            return if iter < self.anneal_end { self.t_max_start } else { self.t_max_end };
        }
        if iter >= self.anneal_end {
            return self.t_max_end;
        }
        let f = (iter - self.anneal_start) as f64 / (self.anneal_end - self.anneal_start) as f64;
        self.t_max_start + (self.t_max_end - self.t_max_start) * f
    }
}

pub fn schedule_at(schedule: &GuidanceSchedule, iter: u64) -> ScheduleState {
    let pano_enabled = schedule.pano_warmup_end <= iter && iter < schedule.pano_cutoff_start;
    ScheduleState {
        pano_enabled,
        t_max: schedule.t_max_at(iter),
        lambda_pers: schedule.lambda_pers,
        lambda_pano_effective: if pano_enabled { schedule.lambda_pano } else { 0.0 },
        lambda_dep: schedule.lambda_dep,
        pso_due: iter > 0 && iter.is_multiple_of(schedule.pso_period),
    }
}
