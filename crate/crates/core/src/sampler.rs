//! Supremum search over the disk on a polar grid whose rings accumulate
//! geometrically at the boundary, followed by a derivative-free pattern
//! search around the best cells.
//!
//! Points are addressed by depth `t = -log2(1 - r)` and angle, so radii as
//! close to 1 as `1 - 2^-40` are represented without cancellation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Uniform rings on `[0, 1/2)`.
    pub interior_radii: usize,
    /// Rings `1 - 2^-t` with `t` spread evenly over `[1, max_depth]`.
    pub boundary_radii: usize,
    pub max_depth: f64,
    pub angles: usize,
    /// How many of the best grid points seed a local search.
    pub top_cells: usize,
    /// Local search stops once both step sizes fall below this.
    pub min_step: f64,
    pub max_iterations: usize,
    /// Trailing boundary rings inspected for unbounded growth.
    pub trend_rings: usize,
    /// Relative ring-to-ring growth that still counts as settling.
    pub growth_tol: f64,
    /// Seed for the per-ring angular jitter; `None` keeps the grid aligned.
    pub seed: Option<u64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            interior_radii: 16,
            boundary_radii: 48,
            max_depth: 40.0,
            angles: 256,
            top_cells: 8,
            min_step: 1e-10,
            max_iterations: 2000,
            trend_rings: 8,
            growth_tol: 1e-4,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub depth: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn gap(&self) -> f64 {
        (-self.depth).exp2()
    }

    pub fn radius(&self) -> f64 {
        1.0 - self.gap()
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.radius(), self.theta)
    }
}

#[derive(Debug, Clone)]
pub struct Ring {
    pub depth: f64,
    /// Rings at or beyond depth 1 take part in the boundary trend.
    pub boundary: bool,
    pub offset: f64,
    pub count: usize,
}

/// The coarse polar grid.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub rings: Vec<Ring>,
    pub angle_step: f64,
}

impl PolarGrid {
    pub fn new(cfg: &SamplerConfig) -> Self {
        let angles = cfg.angles.max(1);
        let angle_step = 2.0 * PI / angles as f64;
        let mut rng = cfg.seed.map(ChaCha8Rng::seed_from_u64);
        let mut jitter = || match rng.as_mut() {
            Some(rng) => rng.gen::<f64>() * angle_step,
            None => 0.0,
        };
        let mut rings = vec![Ring {
            depth: 0.0,
            boundary: false,
            offset: 0.0,
            count: 1,
        }];
        for k in 1..cfg.interior_radii {
            let r = 0.5 * k as f64 / cfg.interior_radii as f64;
            rings.push(Ring {
                depth: -(1.0 - r).log2(),
                boundary: false,
                offset: jitter(),
                count: angles,
            });
        }
        let nb = cfg.boundary_radii.max(2);
        for j in 0..nb {
            let depth = 1.0 + (cfg.max_depth - 1.0) * j as f64 / (nb - 1) as f64;
            rings.push(Ring {
                depth,
                boundary: true,
                offset: jitter(),
                count: angles,
            });
        }
        Self { rings, angle_step }
    }

    pub fn points(&self) -> Vec<(usize, PolarPoint)> {
        self.rings
            .iter()
            .enumerate()
            .flat_map(|(i, ring)| {
                (0..ring.count).map(move |k| {
                    (
                        i,
                        PolarPoint {
                            depth: ring.depth,
                            theta: ring.offset + k as f64 * self.angle_step,
                        },
                    )
                })
            })
            .collect()
    }

    /// Depth spacing around ring `i`.
    pub fn depth_step(&self, ring: usize) -> f64 {
        let here = self.rings[ring].depth;
        let next = self.rings.get(ring + 1).map(|r| r.depth - here);
        let prev = ring.checked_sub(1).map(|p| here - self.rings[p].depth);
        next.or(prev).unwrap_or(1.0).max(1e-3)
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub ring: usize,
    pub point: PolarPoint,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SupResult {
    pub value: f64,
    pub argmax: Option<PolarPoint>,
    /// Ring maxima over admissible boundary-ring samples, innermost first.
    pub ring_maxima: Vec<(f64, f64)>,
    pub unbounded: bool,
    pub admissible: usize,
    pub evaluations: usize,
}

/// Evaluates `f` on every grid point. `None` marks a point outside the
/// admissible set.
pub fn sample_grid<F>(grid: &PolarGrid, f: &F) -> Vec<(usize, PolarPoint, Option<f64>)>
where
    F: Fn(PolarPoint) -> Option<f64> + Sync,
{
    grid.points()
        .into_par_iter()
        .map(|(ring, p)| (ring, p, f(p)))
        .collect()
}

/// True when the ring maxima grow at every one of the last `trend_rings`
/// steps and the final step is still above `growth_tol` in relative terms.
/// Steps below the rounding floor of the deepest ring do not count: a
/// point at depth `t` only knows `1 - |z|` to about `eps 2^t`, and that
/// error can drift upward ring by ring.
pub fn grows_at_boundary(ring_maxima: &[(f64, f64)], cfg: &SamplerConfig) -> bool {
    let k = cfg.trend_rings.max(1);
    if ring_maxima.len() < k + 1 {
        return false;
    }
    let tail = &ring_maxima[ring_maxima.len() - k - 1..];
    let increasing = tail.windows(2).all(|w| w[1].1 > w[0].1);
    let (prev, (depth, last)) = (tail[k - 1].1, tail[k]);
    let floor = ROUNDING_SLACK * f64::EPSILON * depth.exp2();
    let rel = if last.is_infinite() {
        f64::INFINITY
    } else {
        (last - prev) / last.abs().max(f64::MIN_POSITIVE)
    };
    increasing && rel > cfg.growth_tol.max(floor)
}

const ROUNDING_SLACK: f64 = 16.0;

/// Pattern search in `(depth, theta)` from `start`, halving the steps when
/// no neighbour improves. Returns the best point, its value and the number
/// of evaluations spent.
pub fn refine<F>(
    f: &F,
    start: PolarPoint,
    start_value: f64,
    depth_step: f64,
    angle_step: f64,
    cfg: &SamplerConfig,
) -> (PolarPoint, f64, usize)
where
    F: Fn(PolarPoint) -> Option<f64>,
{
    let mut best = start;
    let mut best_value = start_value;
    let (mut dt, mut dth) = (depth_step, angle_step);
    let mut evals = 0;
    let moves = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    ];
    for _ in 0..cfg.max_iterations {
        if dt < cfg.min_step && dth < cfg.min_step {
            break;
        }
        let mut improved: Option<(PolarPoint, f64)> = None;
        for (mt, mth) in moves {
            let cand = PolarPoint {
                depth: (best.depth + mt * dt).clamp(0.0, cfg.max_depth),
                theta: best.theta + mth * dth,
            };
            evals += 1;
            if let Some(v) = f(cand) {
                let bar = improved.map_or(best_value, |(_, bv)| bv);
                if v > bar {
                    improved = Some((cand, v));
                }
            }
        }
        match improved {
            Some((p, v)) => {
                best = p;
                best_value = v;
            }
            None => {
                dt *= 0.5;
                dth *= 0.5;
            }
        }
    }
    (best, best_value, evals)
}

/// Supremum of `f` over the admissible part of the disk.
pub fn maximize<F>(f: F, cfg: &SamplerConfig) -> SupResult
where
    F: Fn(PolarPoint) -> Option<f64> + Sync,
{
    let grid = PolarGrid::new(cfg);
    let samples = sample_grid(&grid, &f);
    maximize_from(&grid, &samples, &f, cfg)
}

/// Refinement stage of [`maximize`] on pre-computed grid samples.
pub fn maximize_from<F>(
    grid: &PolarGrid,
    samples: &[(usize, PolarPoint, Option<f64>)],
    f: &F,
    cfg: &SamplerConfig,
) -> SupResult
where
    F: Fn(PolarPoint) -> Option<f64> + Sync,
{
    let mut ring_max = vec![f64::NAN; grid.rings.len()];
    let mut admissible: Vec<Sample> = Vec::new();
    for (ring, point, value) in samples {
        if let Some(v) = value {
            if !v.is_nan() {
                let m = &mut ring_max[*ring];
                if m.is_nan() || *v > *m {
                    *m = *v;
                }
                admissible.push(Sample {
                    ring: *ring,
                    point: *point,
                    value: *v,
                });
            }
        }
    }
    let ring_maxima: Vec<(f64, f64)> = grid
        .rings
        .iter()
        .zip(&ring_max)
        .filter(|(ring, m)| ring.boundary && !m.is_nan())
        .map(|(ring, m)| (ring.depth, *m))
        .collect();
    let unbounded = grows_at_boundary(&ring_maxima, cfg);
    let evaluations_grid = samples.len();
    if admissible.is_empty() {
        return SupResult {
            value: 0.0,
            argmax: None,
            ring_maxima,
            unbounded: false,
            admissible: 0,
            evaluations: evaluations_grid,
        };
    }
    // Stable order: value descending, then grid order.
    let mut order: Vec<usize> = (0..admissible.len()).collect();
    order.sort_by(|&i, &j| admissible[j].value.total_cmp(&admissible[i].value).then(i.cmp(&j)));
    let seeds: Vec<Sample> = order
        .iter()
        .take(cfg.top_cells.max(1))
        .map(|&i| admissible[i])
        .collect();
    let refined: Vec<(PolarPoint, f64, usize)> = seeds
        .par_iter()
        .map(|s| {
            if s.value.is_infinite() {
                return (s.point, s.value, 0);
            }
            refine(
                f,
                s.point,
                s.value,
                grid.depth_step(s.ring),
                grid.angle_step,
                cfg,
            )
        })
        .collect();
    let mut best = (seeds[0].point, seeds[0].value);
    let mut evaluations = evaluations_grid;
    for (p, v, e) in refined {
        evaluations += e;
        if v > best.1 {
            best = (p, v);
        }
    }
    SupResult {
        value: best.1,
        argmax: Some(best.0),
        ring_maxima,
        unbounded,
        admissible: admissible.len(),
        evaluations,
    }
}
