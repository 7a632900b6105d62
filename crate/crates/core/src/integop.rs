//! The generalized integration operator
//! `(C f)(z) = int_0^z f^(n)(phi(xi)) g(xi) d xi`.
//!
//! The image is never built as a tree. Its first and second derivatives
//! come from exact derivative trees of `f`, `phi` and `g`; only point
//! values of the image need a path integral.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnspec::{AnalyticFunction, SelfMap};
use crate::norms::{NormReport, QuadratureConfig};
use crate::quadrature::GaussLegendre;
use crate::sampler::maximize;
use crate::weights::RadialWeight;

/// The triple `(n, phi, g)`.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub n: u32,
    pub phi: SelfMap,
    pub g: AnalyticFunction,
}

/// Named specializations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `n = 0`, `phi = id`: `int_0^z f(xi) g(xi) d xi`, the Volterra-type
    /// operator whose symbol has derivative `g`.
    Volterra,
    /// `n = 1`, `g = phi'`: the composition operator up to the constant `f(phi(0))`.
    Composition,
}

impl OperatorSpec {
    pub fn new(n: u32, phi: SelfMap, g: AnalyticFunction) -> Self {
        Self { n, phi, g }
    }

    pub fn volterra(g: AnalyticFunction) -> Self {
        Self::new(0, SelfMap::identity(), g)
    }

    pub fn composition(phi: SelfMap) -> Self {
        let g = phi.func().derivative(1);
        Self::new(1, phi, g)
    }

    /// `g` replaced by `c g`.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Ok(Self::new(self.n, self.phi.clone(), AnalyticFunction::scale(c, self.g.clone())?))
    }

    /// `phi(z) -> phi(e^{i theta} z)`, `g(z) -> g(e^{i theta} z)`.
    pub fn rotated(&self, theta: f64) -> Self {
        Self::new(self.n, self.phi.rotate(theta), self.g.rotate(theta))
    }
}

/// Precomputed derivative trees for repeated evaluation of the image.
#[derive(Debug, Clone)]
pub struct ImageEvaluator {
    f_n: AnalyticFunction,
    f_n1: AnalyticFunction,
    phi: AnalyticFunction,
    dphi: AnalyticFunction,
    g: AnalyticFunction,
    dg: AnalyticFunction,
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { z })
    }
}

impl ImageEvaluator {
    pub fn new(spec: &OperatorSpec, f: &AnalyticFunction) -> Self {
        Self {
            f_n: f.derivative(spec.n),
            f_n1: f.derivative(spec.n + 1),
            phi: spec.phi.func().clone(),
            dphi: spec.phi.func().derivative(1),
            g: spec.g.clone(),
            dg: spec.g.derivative(1),
        }
    }

    /// `f^(n)(phi(z)) g(z)`; `z` must lie in the closed disk.
    pub fn first(&self, z: Complex64) -> Complex64 {
        self.f_n.value_at(self.phi.value_at(z)) * self.g.value_at(z)
    }

    /// `f^(n+1)(phi(z)) phi'(z) g(z) + f^(n)(phi(z)) g'(z)`
    pub fn second(&self, z: Complex64) -> Complex64 {
        let w = self.phi.value_at(z);
        self.f_n1.value_at(w) * self.dphi.value_at(z) * self.g.value_at(z)
            + self.f_n.value_at(w) * self.dg.value_at(z)
    }
}

pub fn image_first_derivative(
    spec: &OperatorSpec,
    f: &AnalyticFunction,
    z: Complex64,
) -> Result<Complex64> {
    check_disk(z)?;
    Ok(ImageEvaluator::new(spec, f).first(z))
}

pub fn image_second_derivative(
    spec: &OperatorSpec,
    f: &AnalyticFunction,
    z: Complex64,
) -> Result<Complex64> {
    check_disk(z)?;
    Ok(ImageEvaluator::new(spec, f).second(z))
}

const PANEL_NODES: usize = 8;
const PATH_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 14;

/// `(C f)(z)` by composite Gauss–Legendre along the segment `[0, z]`,
/// starting from `path_points` panels and doubling until two successive
/// values agree to `1e-10`.
pub fn apply_operator(
    spec: &OperatorSpec,
    f: &AnalyticFunction,
    z: Complex64,
    path_points: usize,
) -> Result<Complex64> {
    check_disk(z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    let image = ImageEvaluator::new(spec, f);
    let rule = GaussLegendre::new(PANEL_NODES);
    let integrate = |panels: usize| -> Complex64 {
        let width = 1.0 / panels as f64;
        let sum: Complex64 = (0..panels)
            .flat_map(|i| rule.on(i as f64 * width, (i + 1) as f64 * width))
            .map(|(s, w)| image.first(z * s) * w)
            .sum();
        sum * z
    };
    let mut panels = path_points.max(1);
    let mut prev = integrate(panels);
    loop {
        if 2 * panels > MAX_PANELS {
            return Err(Error::ToleranceNotReached {
                tol: PATH_TOL,
                cap: MAX_PANELS,
                change: f64::NAN,
            });
        }
        panels *= 2;
        let next = integrate(panels);
        let change = (next - prev).norm();
        if change <= PATH_TOL * next.norm().max(1e-300) || change == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
}

/// Zygmund-type norm of the image: `0 + |f^(n)(phi(0)) g(0)| + sup mu |(C f)''|`.
pub fn image_zygmund_norm(
    spec: &OperatorSpec,
    f: &AnalyticFunction,
    mu: &RadialWeight,
    cfg: &QuadratureConfig,
) -> Result<NormReport> {
    let image = ImageEvaluator::new(spec, f);
    let base = image.first(Complex64::new(0.0, 0.0)).norm();
    let sup = maximize(
        |pt| Some(mu.kind.value_at_gap(pt.gap()) * image.second(pt.z()).norm()),
        &cfg.sampler,
    );
    if sup.unbounded {
        return Err(Error::Unbounded {
            estimate: base + sup.value,
        });
    }
    Ok(NormReport {
        value: base + sup.value,
        error_estimate: None,
        tail_bound: None,
        argmax: sup.argmax.map(|p| {
            let z = p.z();
            [z.re, z.im]
        }),
        evaluations: sup.evaluations,
    })
}
