//! Integral means and the space norms: mixed norm, weighted Bergman norm,
//! Zygmund-type and Bloch-type norms.
//!
//! Area integrals use the normalized area measure, `dA = r dr dtheta / pi`,
//! so the disk has total mass 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnspec::AnalyticFunction;
use crate::quadrature::{circle_mean, radial_integral};
use crate::sampler::{maximize, SamplerConfig, SupResult};
use crate::weights::{NormalWeight, RadialWeight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Initial trapezoid nodes on each circle (power of two, at least 64).
    pub circle_points: usize,
    pub circle_cap: usize,
    /// Radial panels are unit intervals in `t = -log2(1 - r)` up to the tail cut.
    pub radial_levels: usize,
    pub tail_cut: f64,
    pub max_panels_per_unit: usize,
    pub tol: f64,
    /// Share of the radial integral carried by the last unit of depth above
    /// which the integral is declared divergent.
    pub divergence_share: f64,
    pub sampler: SamplerConfig,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            circle_points: 64,
            circle_cap: 1 << 20,
            radial_levels: 40,
            tail_cut: 1.0 - (-40f64).exp2(),
            max_panels_per_unit: 64,
            tol: 1e-10,
            divergence_share: 1e-3,
            sampler: SamplerConfig::default(),
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.circle_points < 64 || !self.circle_points.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "circle_points must be a power of two, at least 64".into(),
            ));
        }
        if !(self.tail_cut > 0.0 && self.tail_cut < 1.0) {
            return Err(Error::InvalidParameter("tail_cut must lie in (0, 1)".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }

    fn depth(&self) -> f64 {
        -(1.0 - self.tail_cut).log2()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormParams {
    pub p: f64,
    pub q: f64,
    pub weight: NormalWeight,
}

impl MixedNormParams {
    pub fn new(p: f64, q: f64, weight: NormalWeight) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self { p, q, weight })
    }
}

/// A computed norm with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    /// Quadrature change plus tail bound, for integral norms.
    pub error_estimate: Option<f64>,
    pub tail_bound: Option<f64>,
    /// Point `[re, im]` where the supremum was found, for supremum norms.
    pub argmax: Option<[f64; 2]>,
    pub evaluations: usize,
}

/// `(1/2pi int |f(r e^{i theta})|^q dtheta)`, without the outer root.
fn mean_power(f: &AnalyticFunction, r: f64, q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if r == 0.0 {
        return Ok(f.value_at(Complex64::new(0.0, 0.0)).norm().powf(q));
    }
    let m = circle_mean(
        |theta| f.value_at(Complex64::from_polar(r, theta)).norm().powf(q),
        cfg.circle_points,
        cfg.circle_cap,
        cfg.tol,
    )?;
    Ok(m.value)
}

/// Integral mean `M_q(f, r)`.
pub fn integral_mean(f: &AnalyticFunction, r: f64, q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("radius must lie in [0, 1), got {r}")));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    Ok(mean_power(f, r, q, cfg)?.powf(1.0 / q))
}

/// `M_q(f, 1)` from boundary values; the supremum of `M_q(f, r)` over `r < 1`.
fn boundary_mean_power(f: &AnalyticFunction, q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let m = circle_mean(
        |theta| f.value_at(Complex64::from_polar(1.0, theta)).norm().powf(q),
        cfg.circle_points,
        cfg.circle_cap,
        cfg.tol,
    )?;
    Ok(m.value)
}

/// Squared moduli `|a_k|^2` of the Maclaurin coefficients, with the degree
/// doubled until the last half of the block carries less than
/// `tol * 1e-3` of the boundary sum `sum |a_k|^2`.
fn squared_coefficients(f: &AnalyticFunction, tol: f64, cap: usize) -> Result<Vec<f64>> {
    let mut degree = 64;
    loop {
        let sq: Vec<f64> = f.taylor_coeffs(degree).iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = sq.iter().sum();
        let upper: f64 = sq[degree / 2 + 1..].iter().sum();
        if total == 0.0 || upper <= 1e-3 * tol * total {
            return Ok(sq);
        }
        if 2 * degree > cap {
            return Err(Error::ToleranceNotReached {
                tol,
                cap,
                change: upper / total,
            });
        }
        degree *= 2;
    }
}

/// `M_2^2(f, r) = sum |a_k|^2 r^(2k)` by Horner's rule in `r^2`.
fn parseval_mean_square(sq: &[f64], r: f64) -> f64 {
    let r2 = r * r;
    sq.iter().rev().fold(0.0, |acc, a| acc * r2 + a)
}

/// Mixed norm `(int_0^1 M_q^p(f, r) w(r)^p dr / (1 - r))^(1/p)`.
///
/// For `q = 2` the integral means come from Parseval's identity on the
/// Maclaurin coefficients; other exponents use the trapezoidal rule on
/// each circle.
///
/// Beyond the tail cut `r_c` the integrand is bounded through the lower
/// normality exponent: `w(r) <= w(r_c) ((1 - r)/(1 - r_c))^a`, and
/// `M_q(f, r) <= M_q(f, 1)`, giving a tail of at most
/// `M_q^p(f, 1) w(r_c)^p / (a p)`. The tail bound enters the error estimate.
pub fn mixed_norm(
    f: &AnalyticFunction,
    prm: &MixedNormParams,
    cfg: &QuadratureConfig,
) -> Result<NormReport> {
    cfg.validate()?;
    let (p, q) = (prm.p, prm.q);
    let w = &prm.weight;
    let parseval = if q == 2.0 {
        Some(squared_coefficients(f, cfg.tol, cfg.circle_cap)?)
    } else {
        None
    };
    let mean_pow = |r: f64| -> Result<f64> {
        match &parseval {
            Some(sq) => Ok(parseval_mean_square(sq, r).powf(p / 2.0)),
            None => Ok(mean_power(f, r, q, cfg)?.powf(p / q)),
        }
    };
    let ri = radial_integral(
        |r, gap| Ok(mean_pow(r)? * w.kind.value_at_gap(gap).powf(p)),
        cfg.depth(),
        cfg.tol,
        cfg.max_panels_per_unit,
    )?;
    if ri.last_share > cfg.divergence_share {
        return Err(Error::Divergent {
            partial: ri.value.powf(1.0 / p),
            share: ri.last_share,
        });
    }
    let gap_cut = 1.0 - cfg.tail_cut;
    let boundary = match &parseval {
        Some(sq) => sq.iter().sum::<f64>().powf(p / 2.0),
        None => boundary_mean_power(f, q, cfg)?.powf(p / q),
    };
    let tail = boundary * w.kind.value_at_gap(gap_cut).powf(p) / (w.a() * p);
    let value = ri.value.powf(1.0 / p);
    // d(I^(1/p)) = I^(1/p - 1) dI / p
    let err = if ri.value > 0.0 {
        value * (ri.change + tail / ri.value) / p
    } else {
        tail.powf(1.0 / p)
    };
    Ok(NormReport {
        value,
        error_estimate: Some(err),
        tail_bound: Some(tail),
        argmax: None,
        evaluations: 0,
    })
}

/// Weighted Bergman norm `(int_D |f|^p (1 - |z|^2)^alpha dA)^(1/p)`.
pub fn bergman_norm(
    f: &AnalyticFunction,
    p: f64,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<NormReport> {
    cfg.validate()?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must exceed -1, got {alpha}")));
    }
    // dA = 2 r dr dtheta / (2 pi) and dr = (1 - r) * dr / (1 - r)
    let ri = radial_integral(
        |r, gap| {
            let mp = mean_power(f, r, p, cfg)?;
            Ok(2.0 * r * mp * (gap * (2.0 - gap)).powf(alpha) * gap)
        },
        cfg.depth(),
        cfg.tol,
        cfg.max_panels_per_unit,
    )?;
    if ri.last_share > cfg.divergence_share {
        return Err(Error::Divergent {
            partial: ri.value.powf(1.0 / p),
            share: ri.last_share,
        });
    }
    // Tail: 2 M_p^p(f,1) int_{r_c}^1 (2 (1 - r))^alpha dr for alpha >= 0,
    // and (1 - r)^alpha alone bounds (1 - r^2)^alpha when alpha < 0.
    let gap_cut = 1.0 - cfg.tail_cut;
    let factor = if alpha >= 0.0 { 2f64.powf(alpha) } else { 1.0 };
    let tail = 2.0 * boundary_mean_power(f, p, cfg)? * factor * gap_cut.powf(alpha + 1.0)
        / (alpha + 1.0);
    let value = ri.value.powf(1.0 / p);
    let err = if ri.value > 0.0 {
        value * (ri.change + tail / ri.value) / p
    } else {
        tail.powf(1.0 / p)
    };
    Ok(NormReport {
        value,
        error_estimate: Some(err),
        tail_bound: Some(tail),
        argmax: None,
        evaluations: 0,
    })
}

/// `sup_z mu(|z|) |f^(order)(z)|` over the disk.
pub fn weighted_derivative_sup(
    f: &AnalyticFunction,
    order: u32,
    mu: &RadialWeight,
    sampler: &SamplerConfig,
) -> SupResult {
    let d = f.derivative(order);
    maximize(
        |pt| {
            let v = mu.kind.value_at_gap(pt.gap()) * d.value_at(pt.z()).norm();
            Some(v)
        },
        sampler,
    )
}

fn sup_report(base: f64, sup: SupResult) -> Result<NormReport> {
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

/// `|f(0)| + |f'(0)| + sup mu(|z|) |f''(z)|`
pub fn zygmund_norm(
    f: &AnalyticFunction,
    mu: &RadialWeight,
    cfg: &QuadratureConfig,
) -> Result<NormReport> {
    let zero = Complex64::new(0.0, 0.0);
    let base = f.value_at(zero).norm() + f.derivative(1).value_at(zero).norm();
    sup_report(base, weighted_derivative_sup(f, 2, mu, &cfg.sampler))
}

/// `|f(0)| + sup mu(|z|) |f'(z)|`
pub fn bloch_norm(f: &AnalyticFunction, mu: &RadialWeight, cfg: &QuadratureConfig) -> Result<NormReport> {
    let base = f.value_at(Complex64::new(0.0, 0.0)).norm();
    sup_report(base, weighted_derivative_sup(f, 1, mu, &cfg.sampler))
}

/// Samples of the radial profile `r -> M_q(f, r)`.
pub fn mean_profile(
    f: &AnalyticFunction,
    q: f64,
    radii: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>> {
    radii
        .iter()
        .map(|&r| integral_mean(f, r, q, cfg).map(|m| (r, m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn poly(coeffs: &[f64]) -> AnalyticFunction {
        let c: Vec<Complex64> = coeffs.iter().map(|x| Complex64::from(*x)).collect();
        AnalyticFunction::polynomial(&c).unwrap()
    }

    #[test]
    fn integral_mean_examples() {
        let f = AnalyticFunction::scale(Complex64::new(0.0, 3.0), AnalyticFunction::monomial(4)).unwrap();
        for q in [0.5, 1.0, 3.0] {
            assert_relative_eq!(integral_mean(&f, 0.7, q, &cfg()).unwrap(), 3.0 * 0.7f64.powi(4), max_relative = 1e-12);
        }
        let g = poly(&[1.0, 1.0]);
        assert_relative_eq!(integral_mean(&g, 0.6, 2.0, &cfg()).unwrap(), (1.0f64 + 0.36).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(integral_mean(&g, 0.0, 2.0, &cfg()).unwrap(), 1.0);
        assert!(integral_mean(&g, 1.0, 2.0, &cfg()).is_err());
    }

    #[test]
    fn integral_mean_is_monotone_in_radius() {
        let f = AnalyticFunction::sum([
            AnalyticFunction::binomial_power(Complex64::new(0.5, 0.4), 1.5).unwrap(),
            poly(&[-2.0, 0.0, 1.0]),
        ]);
        let mut prev = 0.0;
        for k in 0..20 {
            let m = integral_mean(&f, k as f64 * 0.049, 1.0, &cfg()).unwrap();
            assert!(m >= prev - 1e-12);
            prev = m;
        }
    }

    #[test]
    fn mixed_norm_examples() {
        let w = NormalWeight::power(0.5, 0.25, 1.0).unwrap();
        let prm = MixedNormParams::new(2.0, 2.0, w).unwrap();
        let one = mixed_norm(&AnalyticFunction::constant(1.0), &prm, &cfg()).unwrap();
        assert_relative_eq!(one.value, 1.0, max_relative = 1e-9);
        let z = mixed_norm(&AnalyticFunction::identity(), &prm, &cfg()).unwrap();
        assert_relative_eq!(z.value, (1.0f64 / 3.0).sqrt(), max_relative = 1e-9);
        assert_eq!(mixed_norm(&AnalyticFunction::zero(), &prm, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn mixed_norm_rejects_divergent_weight() {
        // Declared a is wrong: w = (1 - r)^0.01 barely decays
        let w = NormalWeight::power(0.01, 0.005, 1.0).unwrap();
        let prm = MixedNormParams::new(1.0, 1.0, w).unwrap();
        assert!(matches!(
            mixed_norm(&AnalyticFunction::constant(1.0), &prm, &cfg()),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn bergman_examples() {
        let one = bergman_norm(&AnalyticFunction::constant(1.0), 2.0, 0.0, &cfg()).unwrap();
        assert_relative_eq!(one.value, 1.0, max_relative = 1e-9);
        let z = bergman_norm(&AnalyticFunction::identity(), 2.0, 0.0, &cfg()).unwrap();
        assert_relative_eq!(z.value.powi(2), 0.5, max_relative = 1e-9);
        assert_eq!(bergman_norm(&AnalyticFunction::zero(), 2.0, 0.0, &cfg()).unwrap().value, 0.0);
        // alpha < 0: int 2r (1 - r^2)^(-1/2) dr = 2
        let s = bergman_norm(&AnalyticFunction::constant(1.0), 1.0, -0.5, &cfg()).unwrap();
        // the cut at depth 40 drops about 2^-20 of the mass
        assert!((s.value - 2.0).abs() <= s.tail_bound.unwrap());
        assert!(s.value < 2.0 && s.value > 2.0 - 1e-5);
        assert!(bergman_norm(&AnalyticFunction::constant(1.0), 2.0, -1.0, &cfg()).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let mu = RadialWeight::disk_power(1.0);
        let z2 = AnalyticFunction::monomial(2);
        assert_relative_eq!(zygmund_norm(&z2, &mu, &cfg()).unwrap().value, 2.0, max_relative = 1e-12);
        let z = AnalyticFunction::identity();
        assert_relative_eq!(zygmund_norm(&z, &RadialWeight::power(3.0), &cfg()).unwrap().value, 1.0);
        assert_relative_eq!(bloch_norm(&z, &mu, &cfg()).unwrap().value, 1.0, max_relative = 1e-12);
        let c = AnalyticFunction::constant(Complex64::new(3.0, 4.0));
        assert_relative_eq!(bloch_norm(&c, &mu, &cfg()).unwrap().value, 5.0);
        assert_relative_eq!(
            bloch_norm(&z2, &mu, &cfg()).unwrap().value,
            4.0 / (3.0 * 3f64.sqrt()),
            max_relative = 1e-10
        );
    }

    #[test]
    fn zygmund_of_binomial_power_matches_brute_force() {
        let f = AnalyticFunction::binomial_power(0.5, 1.0).unwrap();
        let mu = RadialWeight::disk_power(2.0);
        let got = zygmund_norm(&f, &mu, &cfg()).unwrap().value;
        // f'' = 2 w^2 (1 - w z)^-3 with w = 1/2; dense brute-force grid
        let mut best: f64 = 0.0;
        let n = 2000;
        for i in 0..n {
            let r = i as f64 / n as f64;
            for k in 0..720 {
                let z = Complex64::from_polar(r, k as f64 * std::f64::consts::PI / 360.0);
                let d2 = 0.5 * (Complex64::new(1.0, 0.0) - 0.5 * z).powi(-3);
                best = best.max((1.0 - r * r).powi(2) * d2.norm());
            }
        }
        let base = 1.0 + 0.5;
        assert!(got >= base + best - 1e-12);
        assert_relative_eq!(got, base + best, max_relative = 1e-5);
    }

    #[test]
    fn unbounded_supremum_is_reported() {
        // mu = (1 - r)^(-1/2) is not bounded; mu |f'| for f = z grows at the boundary
        let mu = RadialWeight::power(-0.5);
        assert!(matches!(
            bloch_norm(&AnalyticFunction::identity(), &mu, &cfg()),
            Err(Error::Unbounded { .. })
        ));
    }
}
