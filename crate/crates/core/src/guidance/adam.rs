use serde::{Deserialize, Serialize};

use crate::scene::SceneState;

use super::step::SceneGradient;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamParams {
    pub lr_density: f64,
    pub lr_color: f64,
    pub lr_mesh_color: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr_density: 0.05,
            lr_color: 0.01,
            lr_mesh_color: 0.01,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-15,
        }
    }
}

/// Adam moments for one flat parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Bias-corrected update `params ← params − lr·m̂/(√v̂ + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, p: &AdamParams) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - p.beta1.powi(self.t);
        let c2 = 1.0 - p.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * g;
            self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * g * g;
            let update = lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + p.eps);
            if update != 0.0 {
                params[i] -= update;
            }
        }
    }
}

/// Adam over the environment grid and the object vertex colors. Values
/// are projected back into their valid ranges after each update.
#[derive(Debug, Clone)]
pub struct SceneOptimizer {
    pub params: AdamParams,
    density: Adam,
    color: Adam,
    mesh: Vec<Adam>,
}

impl SceneOptimizer {
    pub fn new(state: &SceneState, params: AdamParams) -> Self {
        let n = state.grid.node_count();
        Self {
            params,
            density: Adam::new(n),
            color: Adam::new(3 * n),
            mesh: state.objects.iter().map(|o| Adam::new(3 * o.mesh.colors.len())).collect(),
        }
    }

    /// Applies one descent step. A gradient of exactly zero leaves the
    /// scene untouched (and does not advance the moments).
    pub fn apply(&mut self, state: &mut SceneState, grad: &SceneGradient) {
        if grad.is_zero() {
            return;
        }
        let p = self.params;
        let grid = &mut state.grid;
        self.density.step(&mut grid.density, &grad.grid.density, p.lr_density, &p);
        grid.density.iter_mut().for_each(|d| *d = d.max(0.0));

        let mut flat: Vec<f64> = grid.color.iter().flat_map(|c| c.iter().copied()).collect();
        let g: Vec<f64> = grad.grid.color.iter().flat_map(|c| c.iter().copied()).collect();
        self.color.step(&mut flat, &g, p.lr_color, &p);
        for (c, v) in grid.color.iter_mut().zip(flat.chunks_exact(3)) {
            *c = crate::Color::new(v[0], v[1], v[2]).map(|x| x.clamp(0.0, 1.0));
        }

        for ((obj, adam), g) in state.objects.iter_mut().zip(&mut self.mesh).zip(&grad.mesh_colors) {
            let mut flat: Vec<f64> = obj.mesh.colors.iter().flat_map(|c| c.iter().copied()).collect();
            let g: Vec<f64> = g.iter().flat_map(|c| c.iter().copied()).collect();
            adam.step(&mut flat, &g, p.lr_mesh_color, &p);
            for (c, v) in obj.mesh.colors.iter_mut().zip(flat.chunks_exact(3)) {
                *c = crate::Color::new(v[0], v[1], v[2]).map(|x| x.clamp(0.0, 1.0));
            }
        }
    }
}
