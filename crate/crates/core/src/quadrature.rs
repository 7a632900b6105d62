//! Quadrature building blocks: Gauss–Legendre rules, the periodic
//! trapezoidal rule on circles, and a radial integrator in the depth
//! variable `t = -log2(1 - r)`.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

/// `(P_n(x), P_n'(x))`
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Trapezoidal mean `(1/N) sum_k h(2 pi k / N)` for a periodic integrand.
fn trapezoid_mean<F: Fn(f64) -> f64 + Sync>(h: &F, n: usize) -> f64 {
    let step = 2.0 * PI / n as f64;
    let sum: f64 = if n >= 4096 {
        (0..n)
            .into_par_iter()
            .map(|k| h(k as f64 * step))
            .collect::<Vec<_>>()
            .iter()
            .sum()
    } else {
        (0..n).map(|k| h(k as f64 * step)).sum()
    };
    sum / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMean {
    pub value: f64,
    pub points: usize,
}

/// Mean of a periodic integrand over `[0, 2 pi)`, doubling the number of
/// trapezoid nodes until the relative change drops below `tol`.
pub fn circle_mean<F: Fn(f64) -> f64 + Sync>(
    h: F,
    initial: usize,
    cap: usize,
    tol: f64,
) -> Result<CircleMean> {
    let mut n = initial.max(4);
    let mut prev = trapezoid_mean(&h, n);
    loop {
        if 2 * n > cap {
            return Err(Error::ToleranceNotReached {
                tol,
                cap,
                change: f64::NAN,
            });
        }
        // Odd nodes of the doubled grid only.
        let step = 2.0 * PI / (2 * n) as f64;
        let odd = trapezoid_mean(&|theta: f64| h(theta + step), n);
        let next = 0.5 * (prev + odd);
        n *= 2;
        let change = (next - prev).abs();
        if change <= tol * next.abs() || next == 0.0 {
            return Ok(CircleMean { value: next, points: n });
        }
        prev = next;
    }
}

/// Integral over `[0, tail_cut]` of `h(r, 1 - r) dr / (1 - r)` after the
/// substitution `r = 1 - 2^(-t)`, which turns `dr / (1 - r)` into `ln 2 dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialIntegral {
    pub value: f64,
    /// Relative change between the last two panel refinements.
    pub change: f64,
    pub panels_per_unit: usize,
    /// Share of the total carried by the last unit of depth.
    pub last_share: f64,
}

const RADIAL_NODES: usize = 8;

pub fn radial_integral<F>(h: F, depth: f64, tol: f64, max_panels_per_unit: usize) -> Result<RadialIntegral>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let rule = GaussLegendre::new(RADIAL_NODES);
    let units = depth.ceil().max(1.0) as usize;
    let unit = depth / units as f64;

    let integrate = |per_unit: usize| -> Result<(f64, f64)> {
        let panels = units * per_unit;
        let width = unit / per_unit as f64;
        let contributions = (0..panels)
            .into_par_iter()
            .map(|i| {
                let a = i as f64 * width;
                rule.on(a, a + width)
                    .map(|(t, w)| {
                        let gap = (-t).exp2();
                        h(1.0 - gap, gap).map(|v| w * v)
                    })
                    .sum::<Result<f64>>()
            })
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = contributions.iter().sum::<f64>() * LN_2;
        let last: f64 = contributions[panels - per_unit..].iter().sum::<f64>() * LN_2;
        Ok((total, last))
    };

    let mut per_unit = 1;
    let (mut prev, _) = integrate(per_unit)?;
    loop {
        if 2 * per_unit > max_panels_per_unit {
            return Err(Error::ToleranceNotReached {
                tol,
                cap: max_panels_per_unit,
                change: f64::NAN,
            });
        }
        per_unit *= 2;
        let (next, last) = integrate(per_unit)?;
        let change = if next == 0.0 {
            (next - prev).abs()
        } else {
            ((next - prev) / next).abs()
        };
        if change <= tol {
            let last_share = if next == 0.0 { 0.0 } else { (last / next).abs() };
            return Ok(RadialIntegral {
                value: next,
                change,
                panels_per_unit: per_unit,
                last_share,
            });
        }
        prev = next;
    }
}
