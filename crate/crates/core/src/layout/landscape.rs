use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::substream;

use super::{Bounds, LayoutError, ScoreError, Scorer, DIMS_PER_OBJECT};

/// Isotropic Gaussian bump `amplitude · exp(−‖x − center‖² / (2 width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub amplitude: f64,
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        self.amplitude * (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandscapeKind {
    MultiBump,
    OverlapPenalty,
    PlateauSpike,
}

impl std::str::FromStr for LandscapeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multi-bump" => Ok(Self::MultiBump),
            "overlap-penalty" => Ok(Self::OverlapPenalty),
            "plateau-spike" | "plateau-with-spike" => Ok(Self::PlateauSpike),
            other => Err(format!("unknown landscape '{other}' (multi-bump, overlap-penalty, plateau-spike)")),
        }
    }
}

/// Synthetic reward landscapes standing in for a text-image scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Landscape {
    /// Upper envelope of Gaussian bumps. Exactly one bump has the largest
    /// amplitude, so the global maximum sits at its center and every point
    /// belongs to the basin of the bump that dominates it.
    MultiBump { bumps: Vec<Bump> },
    /// `exp(−cost)` where the cost pulls each object's translation towards a
    /// target and its log-scale towards 0, and penalizes overlapping
    /// bounding spheres (radius × scale).
    OverlapPenalty {
        targets: Vec<[f64; 3]>,
        radii: Vec<f64>,
        penalty: f64,
        scale_weight: f64,
    },
    /// Constant plateau plus one narrow spike: flat almost everywhere.
    PlateauSpike { plateau: f64, spike: Bump },
}

/// Where the landscape peaks and how much of the search box leads there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeMeta {
    pub kind: LandscapeKind,
    pub optimum: Vec<f64>,
    pub optimum_score: f64,
    /// Fraction of the search volume inside the global basin.
    pub basin_fraction: f64,
}

impl Landscape {
    pub fn kind(&self) -> LandscapeKind {
        match self {
            Landscape::MultiBump { .. } => LandscapeKind::MultiBump,
            Landscape::OverlapPenalty { .. } => LandscapeKind::OverlapPenalty,
            Landscape::PlateauSpike { .. } => LandscapeKind::PlateauSpike,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Landscape::MultiBump { bumps } => bumps.first().map_or(0, |b| b.center.len()),
            Landscape::OverlapPenalty { targets, .. } => DIMS_PER_OBJECT * targets.len(),
            Landscape::PlateauSpike { spike, .. } => spike.center.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Landscape::MultiBump { bumps } => bumps.iter().map(|b| b.eval(x)).fold(0.0, f64::max),
            Landscape::PlateauSpike { plateau, spike } => plateau + spike.eval(x),
            Landscape::OverlapPenalty {
                targets,
                radii,
                penalty,
                scale_weight,
            } => {
                let objs: Vec<&[f64]> = x.chunks_exact(DIMS_PER_OBJECT).collect();
                let mut cost = 0.0;
                for (o, t) in objs.iter().zip(targets) {
                    cost += (0..3).map(|k| (o[k] - t[k]).powi(2)).sum::<f64>();
                    cost += scale_weight * o[4] * o[4];
                }
                for i in 0..objs.len() {
                    for j in i + 1..objs.len() {
                        let d = (0..3).map(|k| (objs[i][k] - objs[j][k]).powi(2)).sum::<f64>().sqrt();
                        let reach = radii[i] * objs[i][4].exp() + radii[j] * objs[j][4].exp();
                        let overlap = (reach - d).max(0.0);
                        cost += penalty * overlap * overlap;
                    }
                }
                (-cost).exp()
            }
        }
    }

    fn dominant(bumps: &[Bump]) -> usize {
        let mut best = 0;
        for (i, b) in bumps.iter().enumerate() {
            if b.amplitude > bumps[best].amplitude {
                best = i;
            }
        }
        best
    }

    /// Whether `x` lies in the basin of the global optimum.
    ///
    /// Multi-bump: the dominant bump is the (first) largest term at `x`.
    /// Plateau-spike: within three spike widths. Overlap-penalty: every
    /// translation within 0.1 of its target.
    pub fn in_global_basin(&self, x: &[f64]) -> bool {
        match self {
            Landscape::MultiBump { bumps } => {
                let dom = Self::dominant(bumps);
                let vals: Vec<f64> = bumps.iter().map(|b| b.eval(x)).collect();
                let mut winner = 0;
                for (i, v) in vals.iter().enumerate() {
                    if *v > vals[winner] {
                        winner = i;
                    }
                }
                winner == dom && vals[dom] > 0.0
            }
            Landscape::PlateauSpike { spike, .. } => {
                let d2: f64 = x.iter().zip(&spike.center).map(|(a, b)| (a - b).powi(2)).sum();
                d2.sqrt() <= 3.0 * spike.width
            }
            Landscape::OverlapPenalty { targets, .. } => x
                .chunks_exact(DIMS_PER_OBJECT)
                .zip(targets)
                .all(|(o, t)| (0..3).map(|k| (o[k] - t[k]).powi(2)).sum::<f64>().sqrt() <= 0.1),
        }
    }

    /// Optimum and basin fraction over `bounds`. The fraction is counted on
    /// a 200-per-axis grid of cell centers up to two dimensions and by
    /// seeded Monte Carlo (20000 points) above.
    pub fn metadata(&self, bounds: &Bounds) -> LandscapeMeta {
        let optimum = match self {
            Landscape::MultiBump { bumps } => bumps[Self::dominant(bumps)].center.clone(),
            Landscape::PlateauSpike { spike, .. } => spike.center.clone(),
            // with separated targets the unconstrained optimum is the
            // targets at unit scale; yaw does not matter
            Landscape::OverlapPenalty { targets, .. } => targets.iter().flat_map(|t| [t[0], t[1], t[2], 0.0, 0.0]).collect(),
        };
        LandscapeMeta {
            kind: self.kind(),
            optimum_score: self.eval(&optimum),
            optimum,
            basin_fraction: self.basin_fraction(bounds),
        }
    }

    fn basin_fraction(&self, bounds: &Bounds) -> f64 {
        let dim = bounds.dim();
        const RES: usize = 200;
        if dim <= 2 {
            let cells = RES.pow(dim as u32);
            let mut x = vec![0.0; dim];
            let hits = (0..cells)
                .filter(|&c| {
                    let mut rest = c;
                    for (d, v) in x.iter_mut().enumerate() {
                        *v = bounds.lower[d] + bounds.range(d) * ((rest % RES) as f64 + 0.5) / RES as f64;
                        rest /= RES;
                    }
                    self.in_global_basin(&x)
                })
                .count();
            hits as f64 / cells as f64
        } else {
            const N: usize = 20_000;
            let mut rng = substream(&[0xBA51, dim as u64]);
            let hits = (0..N)
                .filter(|_| {
                    let x: Vec<f64> = (0..dim).map(|d| bounds.lower[d] + bounds.range(d) * rng.random::<f64>()).collect();
                    self.in_global_basin(&x)
                })
                .count();
            hits as f64 / N as f64
        }
    }
}

impl Scorer for Landscape {
    fn score(&self, config: &[f64]) -> Result<f64, ScoreError> {
        if config.len() != self.dim() {
            return Err(ScoreError::Dimension {
                expected: self.dim(),
                got: config.len(),
            });
        }
        Ok(self.eval(config))
    }
}

/// Random landscape instance of the given kind over `bounds`.
pub fn make_landscape(kind: LandscapeKind, bounds: &Bounds, seed: u64) -> Result<Landscape, LayoutError> {
    bounds.validate()?;
    let dim = bounds.dim();
    let mut rng = substream(&[0x1A4D, kind as u64, seed]);
    let mean_range = (0..dim).map(|d| bounds.range(d)).sum::<f64>() / dim as f64;
    let point = |rng: &mut crate::rng::Rng| -> Vec<f64> {
        (0..dim).map(|d| bounds.lower[d] + bounds.range(d) * rng.random::<f64>()).collect()
    };
    Ok(match kind {
        LandscapeKind::MultiBump => {
            let mut bumps = vec![Bump {
                center: point(&mut rng),
                amplitude: 1.0,
                width: 0.08 * mean_range,
            }];
            for _ in 0..3 {
                bumps.push(Bump {
                    center: point(&mut rng),
                    amplitude: rng.random_range(0.5..0.8),
                    width: 0.2 * mean_range,
                });
            }
            Landscape::MultiBump { bumps }
        }
        LandscapeKind::PlateauSpike => Landscape::PlateauSpike {
            plateau: 0.5,
            spike: Bump {
                center: point(&mut rng),
                amplitude: 0.5,
                width: 0.05 * mean_range,
            },
        },
        LandscapeKind::OverlapPenalty => {
            if !dim.is_multiple_of(DIMS_PER_OBJECT) {
                return Err(LayoutError::Param(format!(
                    "overlap-penalty needs {DIMS_PER_OBJECT} dimensions per object, got {dim}"
                )));
            }
            let n = dim / DIMS_PER_OBJECT;
            let min_range = (0..n)
                .flat_map(|o| (0..3).map(move |k| DIMS_PER_OBJECT * o + k))
                .map(|d| bounds.range(d))
                .fold(f64::INFINITY, f64::min);
            let targets = (0..n)
                .map(|o| {
                    let mut t = [0.0; 3];
                    for (k, v) in t.iter_mut().enumerate() {
                        let d = DIMS_PER_OBJECT * o + k;
                        *v = bounds.lower[d] + bounds.range(d) * rng.random_range(0.2..0.8);
                    }
                    t
                })
                .collect();
            Landscape::OverlapPenalty {
                targets,
                radii: vec![0.15 * min_range.max(1e-9); n],
                penalty: 10.0,
                scale_weight: 0.5,
            }
        }
    })
}

/// A named landscape with its search box.
#[derive(Debug, Clone, PartialEq)]
pub struct BundledLandscape {
    pub name: &'static str,
    pub landscape: Landscape,
    pub bounds: Bounds,
}

fn bump(center: &[f64], amplitude: f64, width: f64) -> Bump {
    Bump {
        center: center.to_vec(),
        amplitude,
        width,
    }
}

/// Deceptive multi-bump landscapes on unit boxes: a narrow dominant peak
/// and broad decoys. Centers lie on multiples of 1/200.
pub fn bundled_landscapes() -> Vec<BundledLandscape> {
    vec![
        BundledLandscape {
            name: "two-bump-1d",
            landscape: Landscape::MultiBump {
                bumps: vec![bump(&[0.3], 0.7, 0.3), bump(&[0.85], 1.0, 0.03)],
            },
            bounds: Bounds::unit(1),
        },
        BundledLandscape {
            name: "four-bump-2d",
            landscape: Landscape::MultiBump {
                bumps: vec![
                    bump(&[0.25, 0.25], 0.8, 0.15),
                    bump(&[0.25, 0.75], 0.7, 0.18),
                    bump(&[0.75, 0.25], 1.0, 0.06),
                    bump(&[0.7, 0.75], 0.75, 0.15),
                ],
            },
            bounds: Bounds::unit(2),
        },
        BundledLandscape {
            name: "ring-2d",
            landscape: Landscape::MultiBump {
                bumps: vec![
                    bump(&[0.5, 0.5], 0.85, 0.2),
                    bump(&[0.1, 0.9], 1.0, 0.05),
                    bump(&[0.9, 0.9], 0.6, 0.1),
                    bump(&[0.9, 0.1], 0.6, 0.1),
                    bump(&[0.1, 0.1], 0.6, 0.1),
                ],
            },
            bounds: Bounds::unit(2),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bump_peaks_at_center() {
        let l = Landscape::MultiBump {
            bumps: vec![bump(&[0.2, 0.4], 1.0, 0.1)],
        };
        assert_eq!(l.eval(&[0.2, 0.4]), 1.0);
        assert!(l.eval(&[0.2, 0.41]) < 1.0);
    }

    #[test]
    fn overlap_is_penalized() {
        let b = Bounds::new(vec![-1.0; 10], vec![1.0; 10]).unwrap();
        let l = make_landscape(LandscapeKind::OverlapPenalty, &b, 3).unwrap();
        let meta = l.metadata(&b);
        let mut coincident = meta.optimum.clone();
        coincident[5..8].copy_from_slice(&meta.optimum[0..3]);
        let separated = vec![-0.8, 0.0, 0.0, 0.0, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0];
        let mut stacked = separated.clone();
        stacked[5] = -0.8;
        assert!(l.eval(&stacked) < l.eval(&separated));
        assert!(l.eval(&coincident) <= l.eval(&meta.optimum));
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("multi-bump".parse::<LandscapeKind>().unwrap(), LandscapeKind::MultiBump);
        assert!("bogus".parse::<LandscapeKind>().is_err());
    }

    #[test]
    fn bundled_basins_are_small() {
        for b in bundled_landscapes() {
            let m = b.landscape.metadata(&b.bounds);
            assert!(m.basin_fraction > 0.0 && m.basin_fraction < 0.2, "{}: {}", b.name, m.basin_fraction);
        }
    }

    #[test]
    fn generated_landscapes_are_deterministic() {
        let b = Bounds::unit(3);
        for kind in [LandscapeKind::MultiBump, LandscapeKind::PlateauSpike] {
            assert_eq!(make_landscape(kind, &b, 5).unwrap(), make_landscape(kind, &b, 5).unwrap());
        }
    }
}
