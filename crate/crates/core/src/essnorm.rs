//! Boundary quantities whose upper limits as `|phi(z)| -> 1` control the
//! essential norm of `C^n_{phi,g}`, estimated on a ladder of level sets
//! `{ |phi(z)| > delta }` with `delta -> 1`.
//!
//! A lim sup cannot be read off finitely many samples. The report keeps
//! every rung of the ladder, takes the last rung as the estimate and
//! classifies the trend; the verdict says "inconclusive" when the rungs do
//! not settle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnspec::AnalyticFunction;
use crate::integop::OperatorSpec;
use crate::sampler::{maximize_from, PolarGrid, PolarPoint, SamplerConfig};
use crate::weights::{NormalWeight, RadialWeight};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ProxyContext {
    pub spec: OperatorSpec,
    pub mu: RadialWeight,
    /// Weight of the source mixed-norm space.
    pub w: NormalWeight,
    pub q: f64,
}

impl ProxyContext {
    pub fn new(spec: OperatorSpec, mu: RadialWeight, w: NormalWeight, q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
        }
        Ok(Self { spec, mu, w, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Zygmund,
    Bloch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Compact,
    NonCompact,
    Inconclusive,
}

/// Symbol data evaluated once per point.
struct SymbolEval {
    phi: AnalyticFunction,
    dphi: AnalyticFunction,
    g: AnalyticFunction,
    dg: AnalyticFunction,
}

/// Which of the three boundary quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    /// `mu |phi' g| / (w(|phi|) (1 - |phi|^2)^(1/q + n + 1))`
    A,
    /// `mu |g'| / (w(|phi|) (1 - |phi|^2)^(1/q + n))`
    B,
    /// `mu |g| / (w(|phi|) (1 - |phi|^2)^(1/q + n))`
    Bloch,
}

impl SymbolEval {
    fn new(spec: &OperatorSpec) -> Self {
        Self {
            phi: spec.phi.func().clone(),
            dphi: spec.phi.func().derivative(1),
            g: spec.g.clone(),
            dg: spec.g.derivative(1),
        }
    }
}

struct Evaluator<'a> {
    ctx: &'a ProxyContext,
    sym: SymbolEval,
}

impl<'a> Evaluator<'a> {
    fn new(ctx: &'a ProxyContext) -> Self {
        Self {
            ctx,
            sym: SymbolEval::new(&ctx.spec),
        }
    }

    fn phi_abs(&self, z: Complex64) -> f64 {
        self.sym.phi.value_at(z).norm()
    }

    /// Quantity at `z` where `gap_z = 1 - |z|` and `phi_abs = |phi(z)|`.
    fn quantity(&self, which: Quantity, z: Complex64, gap_z: f64, phi_abs: f64) -> f64 {
        let numerator = match which {
            Quantity::A => (self.sym.dphi.value_at(z) * self.sym.g.value_at(z)).norm(),
            Quantity::B => self.sym.dg.value_at(z).norm(),
            Quantity::Bloch => self.sym.g.value_at(z).norm(),
        };
        let numerator = self.ctx.mu.kind.value_at_gap(gap_z) * numerator;
        if numerator == 0.0 {
            return 0.0;
        }
        if phi_abs >= 1.0 - f64::EPSILON {
            return f64::INFINITY;
        }
        let n = self.ctx.spec.n as f64;
        let exponent = match which {
            Quantity::A => 1.0 / self.ctx.q + n + 1.0,
            Quantity::B | Quantity::Bloch => 1.0 / self.ctx.q + n,
        };
        let gap_phi = 1.0 - phi_abs;
        let denominator =
            self.ctx.w.kind.value_at_gap(gap_phi) * (gap_phi * (1.0 + phi_abs)).powf(exponent);
        numerator / denominator
    }

    fn at(&self, which: Quantity, z: Complex64) -> Result<f64> {
        if !(z.norm() < 1.0) {
            return Err(Error::Domain { z });
        }
        let phi_abs = self.phi_abs(z);
        Ok(self.quantity(which, z, 1.0 - z.norm(), phi_abs))
    }
}

/// Pointwise integrand of the first boundary quantity.
pub fn quantity_a(ctx: &ProxyContext, z: Complex64) -> Result<f64> {
    Evaluator::new(ctx).at(Quantity::A, z)
}

/// Pointwise integrand of the second boundary quantity.
pub fn quantity_b(ctx: &ProxyContext, z: Complex64) -> Result<f64> {
    Evaluator::new(ctx).at(Quantity::B, z)
}

/// Pointwise quantity for the Bloch-type target.
pub fn quantity_bloch(ctx: &ProxyContext, z: Complex64) -> Result<f64> {
    Evaluator::new(ctx).at(Quantity::Bloch, z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    pub deltas: Vec<f64>,
    pub sampler: SamplerConfig,
    /// Compactness threshold relative to the first rung.
    pub tol: f64,
    /// A final rung at least this fraction of the previous one counts as stable.
    pub stable_ratio: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.5, 0.9, 0.99, 0.999, 0.9999],
            sampler: SamplerConfig::default(),
            tol: 1e-3,
            stable_ratio: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// All rungs are zero.
    Zero,
    Decreasing,
    Stable,
    /// Supremum estimates grow at the boundary on the final rung.
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssNormReport {
    pub version: u32,
    pub target: Target,
    pub deltas: Vec<f64>,
    /// Zygmund target: rungs of the first quantity. Bloch target: rungs of
    /// the Bloch quantity.
    pub sup_a: Vec<f64>,
    /// Zygmund target only.
    pub sup_b: Option<Vec<f64>>,
    pub diverging_a: Vec<bool>,
    pub diverging_b: Option<Vec<bool>>,
    /// Final-rung values.
    pub limsup_a: f64,
    pub limsup_b: Option<f64>,
    /// Linear extrapolation of the last two rungs to `delta = 1`, floored at 0.
    pub extrapolated_a: f64,
    pub extrapolated_b: Option<f64>,
    pub trend_a: Trend,
    pub trend_b: Option<Trend>,
    pub estimate: f64,
    pub estimate_kind: String,
    pub verdict: Verdict,
    pub tol: f64,
    pub stable_ratio: f64,
    pub samples_used: usize,
    pub empty_levels: Vec<f64>,
    /// The self-map is certified to satisfy `sup |phi| < 1`.
    pub strict_self_map: bool,
    pub notes: Vec<String>,
}

fn validate_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("delta ladder is empty".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) || deltas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "delta ladder must increase inside (0, 1)".into(),
        ));
    }
    Ok(())
}

struct Rungs {
    sup: Vec<f64>,
    diverging: Vec<bool>,
}

fn richardson(deltas: &[f64], sup: &[f64]) -> f64 {
    let n = sup.len();
    if n < 2 || sup[n - 1].is_infinite() {
        return sup[n - 1];
    }
    let (h0, h1) = (1.0 - deltas[n - 2], 1.0 - deltas[n - 1]);
    let (s0, s1) = (sup[n - 2], sup[n - 1]);
    (s1 - h1 * (s0 - s1) / (h0 - h1)).max(0.0)
}

fn classify(sup: &[f64], diverging: &[bool], cfg_tol: f64, stable_ratio: f64) -> (Trend, Verdict) {
    let n = sup.len();
    let last = sup[n - 1];
    if diverging[n - 1] || last.is_infinite() {
        return (Trend::Diverging, Verdict::NonCompact);
    }
    if last == 0.0 {
        return (Trend::Zero, Verdict::Compact);
    }
    let prev = if n >= 2 { sup[n - 2] } else { last };
    let stable = n < 2 || last >= stable_ratio * prev;
    let trend = if stable { Trend::Stable } else { Trend::Decreasing };
    let rel = last / sup[0];
    let verdict = if rel < cfg_tol && (n < 2 || last < prev) {
        Verdict::Compact
    } else if rel >= cfg_tol && stable {
        Verdict::NonCompact
    } else {
        Verdict::Inconclusive
    };
    (trend, verdict)
}

fn combine(verdicts: &[Verdict]) -> Verdict {
    if verdicts.contains(&Verdict::NonCompact) {
        Verdict::NonCompact
    } else if verdicts.iter().all(|v| *v == Verdict::Compact) {
        Verdict::Compact
    } else {
        Verdict::Inconclusive
    }
}

/// Verdict from the rungs recorded in a report.
///
/// Compact when every final rung is below `tol` times its first rung and
/// still decreasing (or the ladder is identically zero); non-compact when a
/// final rung stays above that threshold with a stable trend or when the
/// supremum grows at the boundary; inconclusive otherwise.
pub fn compactness_verdict(report: &EssNormReport, tol: f64) -> Verdict {
    if report.strict_self_map {
        return Verdict::Compact;
    }
    let stable_ratio = report.stable_ratio;
    let mut verdicts = vec![classify(&report.sup_a, &report.diverging_a, tol, stable_ratio).1];
    if let (Some(sup), Some(div)) = (&report.sup_b, &report.diverging_b) {
        verdicts.push(classify(sup, div, tol, stable_ratio).1);
    }
    combine(&verdicts)
}

/// The estimate carried by a conclusive report.
pub fn essential_norm_estimate(report: &EssNormReport) -> Result<f64> {
    match report.verdict {
        Verdict::Inconclusive => Err(Error::Inconclusive),
        _ => Ok(report.estimate),
    }
}

/// Runs the delta ladder for the given target.
pub fn limsup_ladder(ctx: &ProxyContext, target: Target, cfg: &LadderConfig) -> Result<EssNormReport> {
    validate_deltas(&cfg.deltas)?;
    let eval = Evaluator::new(ctx);
    let grid = PolarGrid::new(&cfg.sampler);
    let quantities: Vec<Quantity> = match target {
        Target::Zygmund => vec![Quantity::A, Quantity::B],
        Target::Bloch => vec![Quantity::Bloch],
    };

    // One pass over the coarse grid: |phi| and every quantity per point.
    let points = grid.points();
    let table: Vec<(usize, PolarPoint, f64, Vec<f64>)> = points
        .into_par_iter()
        .map(|(ring, pt)| {
            let z = pt.z();
            let phi_abs = eval.phi_abs(z);
            let vals = quantities
                .iter()
                .map(|q| eval.quantity(*q, z, pt.gap(), phi_abs))
                .collect();
            (ring, pt, phi_abs, vals)
        })
        .collect();

    let mut samples_used = table.len();
    let mut empty_levels = Vec::new();
    let mut rungs: Vec<Rungs> = quantities
        .iter()
        .map(|_| Rungs {
            sup: Vec::new(),
            diverging: Vec::new(),
        })
        .collect();

    for &delta in &cfg.deltas {
        let admissible = table.iter().filter(|row| row.2 > delta).count();
        if admissible == 0 {
            empty_levels.push(delta);
        }
        for (qi, which) in quantities.iter().enumerate() {
            let samples: Vec<(usize, PolarPoint, Option<f64>)> = table
                .iter()
                .map(|(ring, pt, phi_abs, vals)| (*ring, *pt, (*phi_abs > delta).then_some(vals[qi])))
                .collect();
            let f = |pt: PolarPoint| {
                let z = pt.z();
                let phi_abs = eval.phi_abs(z);
                (phi_abs > delta).then(|| eval.quantity(*which, z, pt.gap(), phi_abs))
            };
            let res = maximize_from(&grid, &samples, &f, &cfg.sampler);
            samples_used += res.evaluations - samples.len();
            rungs[qi].sup.push(res.value);
            rungs[qi].diverging.push(res.unbounded);
        }
    }

    // Suprema over nested sets: a point found for a higher rung is
    // admissible for every lower rung.
    for r in &mut rungs {
        for i in (0..r.sup.len().saturating_sub(1)).rev() {
            if r.sup[i + 1] > r.sup[i] {
                r.sup[i] = r.sup[i + 1];
            }
            r.diverging[i] = r.diverging[i] || r.diverging[i + 1];
        }
    }

    let strict = ctx.spec.phi.is_certified_strict();
    let mut classified: Vec<(Trend, Verdict)> = rungs
        .iter()
        .map(|r| classify(&r.sup, &r.diverging, cfg.tol, cfg.stable_ratio))
        .collect();
    let mut limsups: Vec<f64> = rungs.iter().map(|r| *r.sup.last().unwrap()).collect();
    let mut extrapolated: Vec<f64> = rungs.iter().map(|r| richardson(&cfg.deltas, &r.sup)).collect();
    let mut notes = Vec::new();
    if strict {
        // The level sets are empty once delta exceeds sup |phi|.
        limsups.iter_mut().for_each(|v| *v = 0.0);
        extrapolated.iter_mut().for_each(|v| *v = 0.0);
        classified.iter_mut().for_each(|c| *c = (Trend::Zero, Verdict::Compact));
        notes.push("sup |phi| < 1 is certified: the boundary limits vanish".to_string());
    }
    let verdict = combine(&classified.iter().map(|c| c.1).collect::<Vec<_>>());
    let estimate = limsups.iter().copied().fold(0.0, f64::max);
    match target {
        Target::Zygmund => notes.push(
            "second quantity uses mu |g'| with exponent 1/q + n".to_string(),
        ),
        Target::Bloch => notes.push(
            "bloch quantity uses mu |g| with exponent 1/q + n".to_string(),
        ),
    }

    let second = |v: &[f64]| v.get(1).copied();
    let report = EssNormReport {
        version: REPORT_VERSION,
        target,
        deltas: cfg.deltas.clone(),
        sup_a: rungs[0].sup.clone(),
        sup_b: rungs.get(1).map(|r| r.sup.clone()),
        diverging_a: rungs[0].diverging.clone(),
        diverging_b: rungs.get(1).map(|r| r.diverging.clone()),
        limsup_a: limsups[0],
        limsup_b: second(&limsups),
        extrapolated_a: extrapolated[0],
        extrapolated_b: second(&extrapolated),
        trend_a: classified[0].0,
        trend_b: classified.get(1).map(|c| c.0),
        estimate,
        estimate_kind: "equivalence-class representative".to_string(),
        verdict,
        tol: cfg.tol,
        stable_ratio: cfg.stable_ratio,
        samples_used,
        empty_levels,
        strict_self_map: strict,
        notes,
    };
    debug_assert_eq!(compactness_verdict(&report, cfg.tol), verdict);
    Ok(report)
}
