//! Closed-form analytic functions on the unit disk.
//!
//! A function is an expression tree over a handful of node kinds. Every node
//! is analytic on a neighbourhood of the closed disk, so trees can be
//! evaluated on the boundary circle as well as inside. Derivatives are
//! produced symbolically: the result is another tree, never a numerical
//! difference quotient.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Complex numbers travel as `[re, im]` pairs.
pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// One node of a function tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Node {
    Constant {
        #[serde(with = "complex_pair")]
        c: Complex64,
    },
    /// `z^m`
    Monomial { m: u32 },
    /// `(1 - conj(w) z)^(-alpha)`, principal branch (value 1 at the origin).
    BinomialPower {
        #[serde(with = "complex_pair")]
        w: Complex64,
        alpha: f64,
    },
    Sum { terms: Vec<Node> },
    Scale {
        #[serde(with = "complex_pair")]
        c: Complex64,
        f: Box<Node>,
    },
    /// `z -> f(r z)`
    Dilate { r: f64, f: Box<Node> },
    /// The `k`-th derivative of `f`.
    DerivativeMark { k: u32, f: Box<Node> },
}

impl Node {
    fn validate(&self) -> Result<()> {
        match self {
            Node::Constant { c } => finite(*c, "constant"),
            Node::Monomial { .. } => Ok(()),
            Node::BinomialPower { w, alpha } => {
                finite(*w, "binomial power centre")?;
                if !(w.norm() < 1.0) {
                    return Err(Error::InvalidFunction(format!(
                        "binomial power needs |w| < 1, got |w| = {}",
                        w.norm()
                    )));
                }
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidFunction(format!(
                        "binomial power needs alpha > 0, got {alpha}"
                    )));
                }
                Ok(())
            }
            Node::Sum { terms } => terms.iter().try_for_each(Node::validate),
            Node::Scale { c, f } => {
                finite(*c, "scale factor")?;
                f.validate()
            }
            Node::Dilate { r, f } => {
                if !(0.0..=1.0).contains(r) {
                    return Err(Error::InvalidFunction(format!(
                        "dilation radius must lie in [0, 1], got {r}"
                    )));
                }
                f.validate()
            }
            Node::DerivativeMark { f, .. } => f.validate(),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Node::Constant { c } if *c == ZERO)
    }

    /// Value at `z`; marks must already be resolved.
    fn value(&self, z: Complex64) -> Complex64 {
        match self {
            Node::Constant { c } => *c,
            Node::Monomial { m } => z.powu(*m),
            Node::BinomialPower { w, alpha } => (ONE - w.conj() * z).powf(-alpha),
            Node::Sum { terms } => terms.iter().map(|t| t.value(z)).sum(),
            Node::Scale { c, f } => c * f.value(z),
            Node::Dilate { r, f } => f.value(z * r),
            Node::DerivativeMark { k, f } => differentiate(f, *k).value(z),
        }
    }

    fn bound(&self) -> f64 {
        match self {
            Node::Constant { c } => c.norm(),
            Node::Monomial { .. } => 1.0,
            Node::BinomialPower { w, alpha } => (1.0 - w.norm()).powf(-alpha),
            Node::Sum { terms } => terms.iter().map(Node::bound).sum(),
            Node::Scale { c, f } => c.norm() * f.bound(),
            Node::Dilate { f, .. } => f.bound(),
            Node::DerivativeMark { k, f } => differentiate(f, *k).bound(),
        }
    }

    fn coeffs(&self, degree: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; degree + 1];
        match self {
            Node::Constant { c } => out[0] = *c,
            Node::Monomial { m } => {
                if (*m as usize) <= degree {
                    out[*m as usize] = ONE;
                }
            }
            Node::BinomialPower { w, alpha } => {
                // C(alpha + k - 1, k) conj(w)^k by the ratio recurrence
                let wc = w.conj();
                let mut term = ONE;
                out[0] = ONE;
                for (k, slot) in out.iter_mut().enumerate().skip(1) {
                    term = term * wc * ((alpha + k as f64 - 1.0) / k as f64);
                    *slot = term;
                }
            }
            Node::Sum { terms } => {
                for t in terms {
                    for (o, c) in out.iter_mut().zip(t.coeffs(degree)) {
                        *o += c;
                    }
                }
            }
            Node::Scale { c, f } => {
                for (o, v) in out.iter_mut().zip(f.coeffs(degree)) {
                    *o = c * v;
                }
            }
            Node::Dilate { r, f } => {
                let mut rk = 1.0;
                for (o, v) in out.iter_mut().zip(f.coeffs(degree)) {
                    *o = v * rk;
                    rk *= r;
                }
            }
            Node::DerivativeMark { k, f } => {
                let k = *k as usize;
                let inner = f.coeffs(degree + k);
                for (j, o) in out.iter_mut().enumerate() {
                    let falling: f64 = (j + 1..=j + k).map(|i| i as f64).product();
                    *o = inner[j + k] * falling;
                }
            }
        }
        out
    }

    fn rotated(&self, rot: Complex64) -> Node {
        match self {
            Node::Constant { .. } => self.clone(),
            Node::Monomial { m } => scale_node(rot.powu(*m), self.clone()),
            // 1 - conj(w) e^{it} z = 1 - conj(w e^{-it}) z
            Node::BinomialPower { w, alpha } => Node::BinomialPower {
                w: w * rot.conj(),
                alpha: *alpha,
            },
            Node::Sum { terms } => Node::Sum {
                terms: terms.iter().map(|t| t.rotated(rot)).collect(),
            },
            Node::Scale { c, f } => Node::Scale {
                c: *c,
                f: Box::new(f.rotated(rot)),
            },
            Node::Dilate { r, f } => Node::Dilate {
                r: *r,
                f: Box::new(f.rotated(rot)),
            },
            // f^(k)(e^{it} z) = e^{-ikt} (d/dz)^k [f(e^{it} z)]
            Node::DerivativeMark { k, f } => scale_node(
                rot.conj().powu(*k),
                Node::DerivativeMark {
                    k: *k,
                    f: Box::new(f.rotated(rot)),
                },
            ),
        }
    }
}

fn finite(c: Complex64, what: &str) -> Result<()> {
    if c.re.is_finite() && c.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidFunction(format!("{what} is not finite")))
    }
}

fn scale_node(c: Complex64, f: Node) -> Node {
    if c == ZERO || f.is_zero() {
        return Node::Constant { c: ZERO };
    }
    if c == ONE {
        return f;
    }
    match f {
        Node::Constant { c: d } => Node::Constant { c: c * d },
        Node::Scale { c: d, f } => scale_node(c * d, *f),
        other => Node::Scale {
            c,
            f: Box::new(other),
        },
    }
}

fn sum_node(terms: Vec<Node>) -> Node {
    let mut kept: Vec<Node> = terms.into_iter().filter(|t| !t.is_zero()).collect();
    match kept.len() {
        0 => Node::Constant { c: ZERO },
        1 => kept.pop().unwrap(),
        _ => Node::Sum { terms: kept },
    }
}

/// Rising factorial `x (x + 1) ... (x + n - 1)`; empty product is 1.
pub fn rising_factorial(x: f64, n: u32) -> f64 {
    (0..n).map(|i| x + i as f64).product()
}

/// Symbolic n-th derivative. The result never contains derivative marks.
fn differentiate(node: &Node, n: u32) -> Node {
    match node {
        Node::Constant { .. } => {
            if n == 0 {
                node.clone()
            } else {
                Node::Constant { c: ZERO }
            }
        }
        Node::Monomial { m } => {
            if n > *m {
                Node::Constant { c: ZERO }
            } else if n == 0 {
                node.clone()
            } else {
                let falling = rising_factorial((m - n + 1) as f64, n);
                let lower = if *m == n {
                    Node::Constant { c: ONE }
                } else {
                    Node::Monomial { m: m - n }
                };
                scale_node(Complex64::from(falling), lower)
            }
        }
        Node::BinomialPower { w, alpha } => {
            if n == 0 {
                return node.clone();
            }
            let factor = w.conj().powu(n) * rising_factorial(*alpha, n);
            scale_node(
                factor,
                Node::BinomialPower {
                    w: *w,
                    alpha: alpha + n as f64,
                },
            )
        }
        Node::Sum { terms } => sum_node(terms.iter().map(|t| differentiate(t, n)).collect()),
        Node::Scale { c, f } => scale_node(*c, differentiate(f, n)),
        Node::Dilate { r, f } => {
            let inner = differentiate(f, n);
            if inner.is_zero() {
                return inner;
            }
            scale_node(
                Complex64::from(r.powi(n as i32)),
                Node::Dilate {
                    r: *r,
                    f: Box::new(inner),
                },
            )
        }
        Node::DerivativeMark { k, f } => differentiate(f, k + n),
    }
}

/// An analytic function on the unit disk given by a closed-form tree.
///
/// The tree as written is kept for serialization; evaluation uses a copy
/// with all derivative marks expanded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Node", into = "Node")]
pub struct AnalyticFunction {
    node: Node,
    resolved: Arc<Node>,
}

impl PartialEq for AnalyticFunction {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl TryFrom<Node> for AnalyticFunction {
    type Error = Error;

    fn try_from(node: Node) -> Result<Self> {
        node.validate()?;
        let resolved = Arc::new(differentiate(&node, 0));
        Ok(Self { node, resolved })
    }
}

impl From<AnalyticFunction> for Node {
    fn from(f: AnalyticFunction) -> Node {
        f.node
    }
}

impl AnalyticFunction {
    fn from_valid(node: Node) -> Self {
        let resolved = Arc::new(differentiate(&node, 0));
        Self { node, resolved }
    }

    pub fn new(node: Node) -> Result<Self> {
        Self::try_from(node)
    }

    pub fn zero() -> Self {
        Self::constant(ZERO)
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self::new(Node::Constant { c }).expect("finite constant")
    }

    pub fn monomial(m: u32) -> Self {
        Self::from_valid(Node::Monomial { m })
    }

    pub fn identity() -> Self {
        Self::monomial(1)
    }

    pub fn binomial_power(w: impl Into<Complex64>, alpha: f64) -> Result<Self> {
        Self::new(Node::BinomialPower {
            w: w.into(),
            alpha,
        })
    }

    pub fn sum(terms: impl IntoIterator<Item = AnalyticFunction>) -> Self {
        Self::from_valid(Node::Sum {
            terms: terms.into_iter().map(|t| t.node).collect(),
        })
    }

    pub fn scale(c: impl Into<Complex64>, f: AnalyticFunction) -> Result<Self> {
        Self::new(Node::Scale {
            c: c.into(),
            f: Box::new(f.node),
        })
    }

    pub fn dilate(r: f64, f: AnalyticFunction) -> Result<Self> {
        Self::new(Node::Dilate {
            r,
            f: Box::new(f.node),
        })
    }

    pub fn mark(k: u32, f: AnalyticFunction) -> Self {
        Self::from_valid(Node::DerivativeMark {
            k,
            f: Box::new(f.node),
        })
    }

    /// Polynomial `sum_k coeffs[k] z^k`.
    pub fn polynomial(coeffs: &[Complex64]) -> Result<Self> {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(k, c)| Self::scale(*c, Self::monomial(k as u32)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::sum(terms))
    }

    /// The disk automorphism `(a - z) / (1 - conj(a) z)`, written as
    /// `(a - 1/conj(a)) (1 - conj(a) z)^(-1) + 1/conj(a)` for `a != 0`.
    /// The two terms cancel to within `|a|`, so values lose about
    /// `log10(1/|a|^2)` digits for small nonzero `a`.
    pub fn disk_automorphism(a: impl Into<Complex64>) -> Result<Self> {
        let a = a.into();
        if !(a.norm() < 1.0) {
            return Err(Error::InvalidFunction(format!(
                "automorphism needs |a| < 1, got {}",
                a.norm()
            )));
        }
        if a == ZERO {
            return Self::scale(-1.0, Self::identity());
        }
        let inv = ONE / a.conj();
        Ok(Self::sum([
            Self::scale(a - inv, Self::binomial_power(a, 1.0)?)?,
            Self::constant(inv),
        ]))
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    /// Value at a point of the open disk.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.norm() < 1.0) {
            return Err(Error::Domain { z });
        }
        Ok(self.resolved.value(z))
    }

    /// Value at any point of the closed disk. Every node is analytic on a
    /// neighbourhood of the closed disk, so this is also valid on the
    /// boundary circle. The caller guarantees `|z| <= 1`.
    pub fn value_at(&self, z: Complex64) -> Complex64 {
        self.resolved.value(z)
    }

    /// Symbolic `n`-th derivative; `derivative(0)` returns the same function.
    pub fn derivative(&self, n: u32) -> AnalyticFunction {
        if n == 0 {
            return self.clone();
        }
        Self::from_valid(differentiate(&self.resolved, n))
    }

    /// Maclaurin coefficients `a_0, ..., a_degree`.
    pub fn taylor_coeffs(&self, degree: usize) -> Vec<Complex64> {
        self.resolved.coeffs(degree)
    }

    /// Upper bound for `sup |f|` over the closed disk obtained from the
    /// absolute coefficient sums of each node.
    pub fn modulus_bound(&self) -> f64 {
        self.resolved.bound()
    }

    /// `z -> f(e^{i theta} z)`, expressed with the same node kinds.
    pub fn rotate(&self, theta: f64) -> AnalyticFunction {
        let rot = Complex64::from_polar(1.0, theta);
        Self::from_valid(self.node.rotated(rot))
    }

    /// Boundary estimate of `sup_{|z|<1} |f(z)|`.
    pub fn supnorm_disk(&self, tol: f64) -> Result<SupNorm> {
        supnorm_disk(self, &SupNormConfig { tol, ..Default::default() })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SupNormConfig {
    pub tol: f64,
    pub initial_points: usize,
    /// Doubling cap while looking for a stable estimate.
    pub max_points: usize,
    /// Further doublings are allowed up to this size to certify the estimate.
    pub certify_points: usize,
}

impl Default for SupNormConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            initial_points: 64,
            max_points: 1 << 22,
            certify_points: 1 << 18,
        }
    }
}

/// Estimate of the supremum modulus over the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    /// Largest boundary sample; a lower bound for the true supremum.
    pub value: f64,
    /// `L pi / N`, with `L` a bound on `|f'|` over the closed disk.
    pub error_bound: f64,
    pub certified: bool,
    pub grid_points: usize,
}

impl SupNorm {
    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }
}

fn boundary_max(f: &AnalyticFunction, n: usize) -> f64 {
    let step = 2.0 * PI / n as f64;
    (0..n)
        .into_par_iter()
        .map(|k| f.value_at(Complex64::from_polar(1.0, k as f64 * step)).norm())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// By the maximum modulus principle the supremum over the disk is the
/// maximum over the boundary circle. Doubles a uniform boundary grid until
/// two successive estimates agree within `tol`, then keeps doubling (up to
/// `certify_points`) until the Lipschitz bound confirms the estimate.
pub fn supnorm_disk(f: &AnalyticFunction, cfg: &SupNormConfig) -> Result<SupNorm> {
    let lipschitz = f.derivative(1).modulus_bound();
    let mut n = cfg.initial_points.max(4);
    let mut prev = boundary_max(f, n);
    loop {
        if 2 * n > cfg.max_points {
            return Err(Error::ToleranceNotReached {
                tol: cfg.tol,
                cap: cfg.max_points,
                change: f64::NAN,
            });
        }
        n *= 2;
        let next = boundary_max(f, n);
        let change = (next - prev).abs();
        prev = next;
        if change <= cfg.tol * next.max(1.0) {
            break;
        }
    }
    let scale = prev.max(1.0);
    loop {
        let error_bound = lipschitz * PI / n as f64;
        let certified = error_bound <= cfg.tol * scale;
        if certified || 2 * n > cfg.certify_points {
            return Ok(SupNorm {
                value: prev,
                error_bound,
                certified,
                grid_points: n,
            });
        }
        n *= 2;
        prev = prev.max(boundary_max(f, n));
    }
}

/// An analytic self-map of the disk together with its boundary supremum.
#[derive(Debug, Clone)]
pub struct SelfMap {
    func: AnalyticFunction,
    supnorm: SupNorm,
}

impl SelfMap {
    pub fn new(func: AnalyticFunction, tol: f64) -> Result<Self> {
        let supnorm = func.supnorm_disk(tol)?;
        if supnorm.value > 1.0 + tol {
            return Err(Error::NotSelfMap {
                supnorm: supnorm.value,
            });
        }
        let supnorm = SupNorm {
            value: supnorm.value.min(1.0),
            ..supnorm
        };
        Ok(Self { func, supnorm })
    }

    pub fn identity() -> Self {
        Self::new(AnalyticFunction::identity(), 1e-9).expect("identity is a self-map")
    }

    pub fn func(&self) -> &AnalyticFunction {
        &self.func
    }

    pub fn supnorm(&self) -> f64 {
        self.supnorm.value
    }

    pub fn certified(&self) -> bool {
        self.supnorm.certified
    }

    pub fn estimate(&self) -> &SupNorm {
        &self.supnorm
    }

    /// True when the Lipschitz bound proves `sup |phi| < 1`.
    pub fn is_certified_strict(&self) -> bool {
        self.supnorm.upper() < 1.0
    }

    pub fn rotate(&self, theta: f64) -> Self {
        Self {
            func: self.func.rotate(theta),
            supnorm: self.supnorm,
        }
    }
}
