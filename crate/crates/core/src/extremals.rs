//! Extremal test families `f_k`, `h_k` built from binomial powers centred at
//! a point `w = phi(z_k)`, the derivative identities they satisfy at `w`,
//! and numerical checks of their uniform boundedness and of the pointwise
//! derivative bound for mixed-norm functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnspec::{rising_factorial, AnalyticFunction};
use crate::norms::{mixed_norm, MixedNormParams, QuadratureConfig};
use crate::sampler::{maximize, SamplerConfig};
use crate::weights::NormalWeight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    #[serde(with = "crate::fnspec::complex_pair")]
    pub w: Complex64,
    pub q: f64,
    pub b: f64,
    pub n: u32,
    /// `1/q + b + 1` unless deliberately overridden.
    pub alpha: f64,
}

impl ExtremalParams {
    pub fn new(w: Complex64, q: f64, b: f64, n: u32) -> Result<Self> {
        if !(w.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "extremal centre needs |w| < 1, got {}",
                w.norm()
            )));
        }
        if !(q.is_finite() && q > 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter("q must be positive and b finite".into()));
        }
        Ok(Self {
            w,
            q,
            b,
            n,
            alpha: 1.0 / q + b + 1.0,
        })
    }

    /// Same family with a different exponent; used to show that the
    /// identities single out `alpha = 1/q + b + 1`.
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    /// Centres `|w_j| = 1 - 2^-j`, `j = 1..=levels`, on the ray of angle `arg`.
    pub fn ladder(q: f64, b: f64, n: u32, levels: u32, arg: f64) -> Result<Vec<Self>> {
        (1..=levels)
            .map(|j| {
                let rho = 1.0 - (-(j as f64)).exp2();
                Self::new(Complex64::from_polar(rho, arg), q, b, n)
            })
            .collect()
    }

    /// `1 - |w|^2`
    fn gap(&self) -> f64 {
        let m = self.w.norm();
        (1.0 - m) * (1.0 + m)
    }

    /// `(1 - |w|^2)^(b+1) / weight(|w|)`
    fn prefactor(&self, weight: &NormalWeight) -> f64 {
        self.gap().powf(self.b + 1.0) / weight.kind.value_at_gap(1.0 - self.w.norm())
    }
}

/// `c [ (1 - conj(w) z)^-alpha - alpha (1 - |w|^2) / (alpha + n) (1 - conj(w) z)^-(alpha+1) ]`
pub fn make_fk(prm: &ExtremalParams, weight: &NormalWeight) -> Result<AnalyticFunction> {
    let a = prm.alpha;
    let second = -a * prm.gap() / (a + prm.n as f64);
    AnalyticFunction::scale(
        prm.prefactor(weight),
        AnalyticFunction::sum([
            AnalyticFunction::binomial_power(prm.w, a)?,
            AnalyticFunction::scale(second, AnalyticFunction::binomial_power(prm.w, a + 1.0)?)?,
        ]),
    )
}

/// `c [ (alpha + n + 1)(1 - conj(w) z)^-alpha - alpha (1 - |w|^2)(1 - conj(w) z)^-(alpha+1) ]`
pub fn make_hk(prm: &ExtremalParams, weight: &NormalWeight) -> Result<AnalyticFunction> {
    let a = prm.alpha;
    AnalyticFunction::scale(
        prm.prefactor(weight),
        AnalyticFunction::sum([
            AnalyticFunction::scale(a + prm.n as f64 + 1.0, AnalyticFunction::binomial_power(prm.w, a)?)?,
            AnalyticFunction::scale(-a * prm.gap(), AnalyticFunction::binomial_power(prm.w, a + 1.0)?)?,
        ]),
    )
}

/// Closed forms at `z = w`, in the order
/// `f^(n)(w)`, `h^(n+1)(w)`, `f^(n+1)(w)`, `h^(n)(w)`.
pub fn predicted_values(prm: &ExtremalParams, weight: &NormalWeight) -> [Complex64; 4] {
    let n = prm.n;
    let x = prm.gap();
    let wv = weight.kind.value_at_gap(1.0 - prm.w.norm());
    let rising = rising_factorial(1.0 / prm.q + prm.b + 1.0, n);
    let wc = prm.w.conj();
    let zero = Complex64::new(0.0, 0.0);
    [
        zero,
        zero,
        -wc.powu(n + 1) * rising / (wv * x.powf(1.0 / prm.q + n as f64 + 1.0)),
        wc.powu(n) * rising / (wv * x.powf(1.0 / prm.q + n as f64)),
    ]
}

/// Magnitude against which identity residuals are measured:
/// `1 / (weight(|w|) (1 - |w|^2)^(1/q + n + 1))`.
pub fn natural_scale(prm: &ExtremalParams, weight: &NormalWeight) -> f64 {
    let wv = weight.kind.value_at_gap(1.0 - prm.w.norm());
    1.0 / (wv * prm.gap().powf(1.0 / prm.q + prm.n as f64 + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub value: [f64; 2],
    pub expected: [f64; 2],
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub params: ExtremalParams,
    pub scale: f64,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

const IDENTITY_NAMES: [&str; 4] = [
    "f^(n)(w) = 0",
    "h^(n+1)(w) = 0",
    "f^(n+1)(w) closed form",
    "h^(n)(w) closed form",
];

/// Evaluates the four identities with exact derivative trees.
pub fn verify_identities(prm: &ExtremalParams, weight: &NormalWeight, tol: f64) -> Result<IdentityReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let fk = make_fk(prm, weight)?;
    let hk = make_hk(prm, weight)?;
    let w = prm.w;
    let values = [
        fk.derivative(prm.n).eval(w)?,
        hk.derivative(prm.n + 1).eval(w)?,
        fk.derivative(prm.n + 1).eval(w)?,
        hk.derivative(prm.n).eval(w)?,
    ];
    let expected = predicted_values(prm, weight);
    let scale = natural_scale(prm, weight);
    let checks: Vec<IdentityCheck> = (0..4)
        .map(|i| {
            let residual = (values[i] - expected[i]).norm() / scale;
            IdentityCheck {
                name: IDENTITY_NAMES[i].to_string(),
                value: [values[i].re, values[i].im],
                expected: [expected[i].re, expected[i].im],
                residual,
                pass: residual <= tol,
            }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(IdentityReport {
        params: *prm,
        scale,
        checks,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungNorms {
    pub w_abs: f64,
    pub fk_norm: f64,
    pub hk_norm: f64,
    /// `max_{|z| = 1/2} |f_k(z)|`
    pub fk_inner_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rungs: Vec<RungNorms>,
    pub fk_ratio: f64,
    pub hk_ratio: f64,
    pub ratio_limit: f64,
    /// Inner maxima shrink from rung to rung past the largest one.
    pub inner_decay: bool,
    pub pass: bool,
}

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(0.0, f64::max);
    let min = values.fold(f64::INFINITY, f64::min);
    max / min
}

fn inner_max(f: &AnalyticFunction) -> f64 {
    (0..512)
        .map(|k| {
            let z = Complex64::from_polar(0.5, k as f64 * std::f64::consts::PI / 256.0);
            f.value_at(z).norm()
        })
        .fold(0.0, f64::max)
}

/// Mixed norms of `f_k` and `h_k` along a ladder of centres. Passes when the
/// max/min spread of each family stays within `ratio_limit`.
pub fn verify_uniform_bound(
    family: &[ExtremalParams],
    weight: &NormalWeight,
    p: f64,
    ratio_limit: f64,
    cfg: &QuadratureConfig,
) -> Result<BoundReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty extremal ladder".into()));
    }
    let rungs = family
        .iter()
        .map(|prm| {
            let mp = MixedNormParams::new(p, prm.q, weight.clone())?;
            let fk = make_fk(prm, weight)?;
            let hk = make_hk(prm, weight)?;
            Ok(RungNorms {
                w_abs: prm.w.norm(),
                fk_norm: mixed_norm(&fk, &mp, cfg)?.value,
                hk_norm: mixed_norm(&hk, &mp, cfg)?.value,
                fk_inner_max: inner_max(&fk),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fk_ratio = spread(rungs.iter().map(|r| r.fk_norm));
    let hk_ratio = spread(rungs.iter().map(|r| r.hk_norm));
    let peak = rungs
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.fk_inner_max > rungs[best].fk_inner_max { i } else { best });
    let inner_decay = rungs[peak..].windows(2).all(|w| w[1].fk_inner_max < w[0].fk_inner_max);
    Ok(BoundReport {
        pass: fk_ratio <= ratio_limit && hk_ratio <= ratio_limit,
        rungs,
        fk_ratio,
        hk_ratio,
        ratio_limit,
        inner_decay,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub norm: f64,
    pub sup_ratio: f64,
    pub argmax: Option<[f64; 2]>,
    pub evaluations: usize,
}

/// `|f^(n)(z)| weight(|z|) (1 - |z|^2)^(1/q + n) / norm`
pub fn pointwise_ratio(
    f_n: &AnalyticFunction,
    norm: f64,
    q: f64,
    weight: &NormalWeight,
    n: u32,
    z: Complex64,
) -> f64 {
    if norm == 0.0 {
        return 0.0;
    }
    let m = z.norm();
    let gap = 1.0 - m;
    f_n.value_at(z).norm() * weight.kind.value_at_gap(gap) * (gap * (1.0 + m)).powf(1.0 / q + n as f64)
        / norm
}

/// Supremum over a boundary-refined sample set of the ratio between
/// `|f^(n)(z)|` and the pointwise bound `||f|| / (weight(|z|)(1 - |z|^2)^(1/q + n))`.
#[allow(clippy::too_many_arguments)]
pub fn check_pointwise_bound(
    f: &AnalyticFunction,
    p: f64,
    q: f64,
    weight: &NormalWeight,
    n: u32,
    samples: &SamplerConfig,
    cfg: &QuadratureConfig,
) -> Result<PointwiseReport> {
    let mp = MixedNormParams::new(p, q, weight.clone())?;
    let norm = mixed_norm(f, &mp, cfg)?.value;
    if norm == 0.0 {
        return Ok(PointwiseReport {
            norm,
            sup_ratio: 0.0,
            argmax: None,
            evaluations: 0,
        });
    }
    let f_n = f.derivative(n);
    let res = maximize(
        |pt| {
            let gap = pt.gap();
            let r = 1.0 - gap;
            let v = f_n.value_at(pt.z()).norm()
                * weight.kind.value_at_gap(gap)
                * (gap * (1.0 + r)).powf(1.0 / q + n as f64)
                / norm;
            Some(v)
        },
        samples,
    );
    Ok(PointwiseReport {
        norm,
        sup_ratio: res.value,
        argmax: res.argmax.map(|pt| {
            let z = pt.z();
            [z.re, z.im]
        }),
        evaluations: res.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn weight() -> NormalWeight {
        NormalWeight::power(0.5, 0.25, 1.0).unwrap()
    }

    #[test]
    fn alpha_is_derived() {
        let prm = ExtremalParams::new(Complex64::new(0.5, 0.0), 2.0, 1.0, 1).unwrap();
        assert_eq!(prm.alpha, 2.5);
        assert!(ExtremalParams::new(Complex64::new(1.0, 0.0), 2.0, 1.0, 1).is_err());
    }

    #[test]
    fn fk_value_at_centre() {
        let w = weight();
        for n in 0..4 {
            let prm = ExtremalParams::new(Complex64::new(0.3, 0.6), 2.0, 1.0, n).unwrap();
            let fk = make_fk(&prm, &w).unwrap();
            let x: f64 = 1.0 - prm.w.norm_sqr();
            let expect = (n as f64 / (prm.alpha + n as f64))
                / (w.value(prm.w.norm()) * x.powf(1.0 / prm.q));
            assert_relative_eq!(fk.eval(prm.w).unwrap().re, expect, max_relative = 1e-12);
            assert!(fk.eval(prm.w).unwrap().im.abs() < 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn families_at_zero_centre() {
        let w = weight();
        let prm = ExtremalParams::new(Complex64::new(0.0, 0.0), 2.0, 1.0, 2).unwrap();
        let fk = make_fk(&prm, &w).unwrap();
        let hk = make_hk(&prm, &w).unwrap();
        let z0 = Complex64::new(0.0, 0.0);
        let c = 1.0 / w.value(0.0);
        assert_relative_eq!(fk.eval(z0).unwrap().re, 2.0 / (prm.alpha + 2.0) * c, max_relative = 1e-14);
        assert_relative_eq!(fk.eval(Complex64::new(0.4, 0.1)).unwrap().re, fk.eval(z0).unwrap().re);
        assert_relative_eq!(hk.eval(z0).unwrap().re, 3.0 * c, max_relative = 1e-14);
    }

    #[test]
    fn hk_is_linear_in_prefactor() {
        let prm = ExtremalParams::new(Complex64::new(0.2, -0.7), 2.0, 1.0, 1).unwrap();
        let w1 = NormalWeight::power(0.5, 0.25, 1.0).unwrap();
        let w2 = NormalWeight::power(0.75, 0.25, 1.0).unwrap();
        let z = Complex64::new(0.1, 0.3);
        let ratio = make_hk(&prm, &w1).unwrap().eval(z).unwrap() / make_hk(&prm, &w2).unwrap().eval(z).unwrap();
        let expect = w2.value(prm.w.norm()) / w1.value(prm.w.norm());
        assert_relative_eq!(ratio.re, expect, max_relative = 1e-12);
        assert!(ratio.im.abs() < 1e-12);
    }

    #[test]
    fn identities_hold() {
        let w = weight();
        for n in 0..4 {
            for rho in [0.5, 0.9, 0.99] {
                let prm = ExtremalParams::new(Complex64::from_polar(rho, 0.4), 2.0, 1.0, n).unwrap();
                let report = verify_identities(&prm, &w, 1e-8).unwrap();
                assert!(report.pass, "{report:?}");
            }
        }
    }

    #[test]
    fn identities_at_order_zero() {
        let w = weight();
        let prm = ExtremalParams::new(Complex64::new(0.6, 0.0), 2.0, 1.0, 0).unwrap();
        let x: f64 = 1.0 - 0.36;
        let wv = w.value(0.6);
        let fk = make_fk(&prm, &w).unwrap();
        let hk = make_hk(&prm, &w).unwrap();
        assert_relative_eq!(fk.derivative(1).eval(prm.w).unwrap().re, -0.6 / (wv * x.powf(1.5)), max_relative = 1e-12);
        assert_relative_eq!(hk.eval(prm.w).unwrap().re, 1.0 / (wv * x.powf(0.5)), max_relative = 1e-12);
    }

    #[test]
    fn wrong_alpha_breaks_closed_forms() {
        let w = weight();
        let prm = ExtremalParams::new(Complex64::new(0.7, 0.2), 2.0, 1.0, 2).unwrap();
        let bad = prm.with_alpha(1.0 / prm.q + prm.b);
        let report = verify_identities(&bad, &w, 1e-8).unwrap();
        assert!(!report.pass);
        // the vanishing identities only depend on the ratio alpha / (alpha + n)
        assert!(report.checks[0].pass && report.checks[1].pass);
        assert!(!report.checks[2].pass && !report.checks[3].pass);
    }

    #[test]
    fn pointwise_trivial_cases() {
        let w = weight();
        let cfg = QuadratureConfig::default();
        let s = SamplerConfig::default();
        let zero = check_pointwise_bound(&AnalyticFunction::zero(), 2.0, 2.0, &w, 1, &s, &cfg).unwrap();
        assert_eq!(zero.sup_ratio, 0.0);
        let one = check_pointwise_bound(&AnalyticFunction::constant(1.0), 2.0, 2.0, &w, 1, &s, &cfg).unwrap();
        assert_eq!(one.sup_ratio, 0.0);
        assert_relative_eq!(one.norm, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn uniform_bound_scales_with_prefactor() {
        let cfg = QuadratureConfig::default();
        let family = ExtremalParams::ladder(2.0, 1.0, 1, 6, 0.0).unwrap();
        let w1 = NormalWeight::power(0.5, 0.25, 1.0).unwrap();
        let a = verify_uniform_bound(&family, &w1, 2.0, 4.0, &cfg).unwrap();
        for (r, prm) in a.rungs.iter().zip(&family) {
            let fk = make_fk(prm, &w1).unwrap();
            let doubled = AnalyticFunction::scale(2.0, fk).unwrap();
            let mp = MixedNormParams::new(2.0, 2.0, w1.clone()).unwrap();
            let v = mixed_norm(&doubled, &mp, &cfg).unwrap().value;
            assert_relative_eq!(v, 2.0 * r.fk_norm, max_relative = 1e-12);
        }
        assert!(a.inner_decay);
        assert!(a.rungs[5].fk_inner_max < 0.1 * a.rungs[1].fk_inner_max);
    }
}
