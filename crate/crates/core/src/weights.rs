//! Radial weights on `[0, 1)`: normal weights for the source space and
//! plain positive weights for the target space, plus a numerical check of
//! the two normality clauses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form or tabulated radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum WeightKind {
    /// `(1 - r)^s`
    Power { s: f64 },
    /// `(1 - r)^s (log(e / (1 - r)))^t`
    LogPower { s: f64, t: f64 },
    /// `(1 - r^2)^s`
    DiskPower { s: f64 },
    /// Samples joined by monotone cubic interpolation.
    Table(MonotoneTable),
}

impl WeightKind {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            WeightKind::Power { s } | WeightKind::DiskPower { s } => s.is_finite(),
            WeightKind::LogPower { s, t } => s.is_finite() && t.is_finite(),
            WeightKind::Table(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidWeight("non-finite exponent".into()))
        }
    }

    /// Value at radius `1 - gap`. Closed forms use the gap directly so radii
    /// closer to 1 than the f64 spacing near 1 remain meaningful.
    pub fn value_at_gap(&self, gap: f64) -> f64 {
        match self {
            WeightKind::Power { s } => gap.powf(*s),
            WeightKind::LogPower { s, t } => gap.powf(*s) * (1.0 - gap.ln()).powf(*t),
            WeightKind::DiskPower { s } => (gap * (2.0 - gap)).powf(*s),
            WeightKind::Table(table) => table.value(1.0 - gap),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            WeightKind::Table(table) => table.value(r),
            _ => self.value_at_gap(1.0 - r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TableData {
    radii: Vec<f64>,
    values: Vec<f64>,
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes, so
/// monotone data stays monotone between samples. Outside the sampled range
/// the end values are held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct MonotoneTable {
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl From<MonotoneTable> for TableData {
    fn from(t: MonotoneTable) -> Self {
        TableData {
            radii: t.radii,
            values: t.values,
        }
    }
}

impl TryFrom<TableData> for MonotoneTable {
    type Error = Error;

    fn try_from(d: TableData) -> Result<Self> {
        MonotoneTable::new(d.radii, d.values)
    }
}

impl MonotoneTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::InvalidWeight(
                "table needs at least two (radius, value) samples of equal length".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] < 0.0 || !(radii[radii.len() - 1] < 1.0)
        {
            return Err(Error::InvalidWeight(
                "table radii must be strictly increasing inside [0, 1)".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidWeight("table values must be positive".into()));
        }
        let n = radii.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / (radii[i + 1] - radii[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 {
                0.0
            } else {
                (secants[i - 1] + secants[i]) / 2.0
            };
        }
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secants[i];
            let b = slopes[i + 1] / secants[i];
            let norm = a.hypot(b);
            if norm > 3.0 {
                let tau = 3.0 / norm;
                slopes[i] = tau * a * secants[i];
                slopes[i + 1] = tau * b * secants[i];
            }
        }
        Ok(Self {
            radii,
            values,
            slopes,
        })
    }

    pub fn value(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let i = self.radii.partition_point(|x| *x <= r) - 1;
        let h = self.radii[i + 1] - self.radii[i];
        let t = (r - self.radii[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

fn check_radius(r: f64) -> Result<()> {
    if (0.0..1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "weight radius must lie in [0, 1), got {r}"
        )))
    }
}

/// A positive radial weight `mu(|z|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialWeight {
    #[serde(flatten)]
    pub kind: WeightKind,
}

impl RadialWeight {
    pub fn new(kind: WeightKind) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind })
    }

    pub fn power(s: f64) -> Self {
        Self { kind: WeightKind::Power { s } }
    }

    pub fn disk_power(s: f64) -> Self {
        Self {
            kind: WeightKind::DiskPower { s },
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.kind.value(r))
    }

    /// Unchecked evaluation for hot loops; `r` must lie in `[0, 1)`.
    pub fn value(&self, r: f64) -> f64 {
        self.kind.value(r)
    }
}

/// A normal weight with its declared exponents `0 < a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalWeightData", into = "NormalWeightData")]
pub struct NormalWeight {
    pub kind: WeightKind,
    a: f64,
    b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NormalWeightData {
    #[serde(flatten)]
    kind: WeightKind,
    a: f64,
    b: f64,
}

impl TryFrom<NormalWeightData> for NormalWeight {
    type Error = Error;

    fn try_from(d: NormalWeightData) -> Result<Self> {
        NormalWeight::new(d.kind, d.a, d.b)
    }
}

impl From<NormalWeight> for NormalWeightData {
    fn from(w: NormalWeight) -> Self {
        NormalWeightData {
            kind: w.kind,
            a: w.a,
            b: w.b,
        }
    }
}

impl NormalWeight {
    pub fn new(kind: WeightKind, a: f64, b: f64) -> Result<Self> {
        kind.validate()?;
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "normal weight needs 0 < a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { kind, a, b })
    }

    /// `(1 - r)^s` with exponents `a < s < b`.
    pub fn power(s: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(WeightKind::Power { s }, a, b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.kind.value(r))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.kind.value(r)
    }

    /// The weight as a plain radial weight.
    pub fn as_radial(&self) -> RadialWeight {
        RadialWeight {
            kind: self.kind.clone(),
        }
    }
}

/// Radii near 1 stored through their gaps `1 - r`, largest gap first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub gaps: Vec<f64>,
}

impl RadialGrid {
    pub const MIN_INTERVALS: usize = 16;

    /// `r_i = 1 - 2^(-i/2)` for `i = 0..=intervals`.
    pub fn geometric(intervals: usize) -> Self {
        Self {
            gaps: (0..=intervals).map(|i| (-(i as f64) / 2.0).exp2()).collect(),
        }
    }

    pub fn from_radii(radii: &[f64]) -> Result<Self> {
        if radii.len() < Self::MIN_INTERVALS + 1 {
            return Err(Error::InvalidParameter(format!(
                "normality grid needs at least {} radii",
                Self::MIN_INTERVALS + 1
            )));
        }
        if radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] < 0.0 || !(radii[radii.len() - 1] < 1.0)
        {
            return Err(Error::InvalidParameter(
                "normality grid radii must increase inside [0, 1)".into(),
            ));
        }
        Ok(Self {
            gaps: radii.iter().map(|r| 1.0 - r).collect(),
        })
    }

    /// Keeps only the radii `r >= r_min`.
    pub fn tail_from(&self, r_min: f64) -> Result<Self> {
        let gaps: Vec<f64> = self.gaps.iter().copied().filter(|g| *g <= 1.0 - r_min).collect();
        if gaps.len() < Self::MIN_INTERVALS + 1 {
            return Err(Error::InvalidParameter("tail grid too short".into()));
        }
        Ok(Self { gaps })
    }
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self::geometric(200)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitThresholds {
    /// Clause (i): last-decile ratio must fall below this fraction of the first decile.
    pub vanish: f64,
    /// Clause (ii): last-decile ratio must exceed this multiple of the first decile.
    pub blow_up: f64,
}

impl Default for LimitThresholds {
    fn default() -> Self {
        Self {
            vanish: 1e-3,
            blow_up: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseVerdict {
    pub pass: bool,
    /// Largest relative step against the required direction, if any.
    pub worst_violation: f64,
    /// Gap `1 - r` where the worst violation occurs.
    pub at_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub pass: bool,
    /// Last-decile extreme divided by the first-decile extreme.
    pub decile_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub a: f64,
    pub b: f64,
    pub grid: RadialGrid,
    /// `w(r) / (1 - r)^a` is non-increasing.
    pub lower_monotone: ClauseVerdict,
    /// `w(r) / (1 - r)^a` tends to 0.
    pub lower_limit: LimitVerdict,
    /// `w(r) / (1 - r)^b` is non-decreasing.
    pub upper_monotone: ClauseVerdict,
    /// `w(r) / (1 - r)^b` tends to infinity.
    pub upper_limit: LimitVerdict,
    pub pass: bool,
}

const MONOTONE_SLACK: f64 = 1e-12;

fn monotone(values: &[f64], gaps: &[f64], increasing: bool) -> ClauseVerdict {
    let mut worst = 0.0;
    let mut at_gap = None;
    for i in 1..values.len() {
        let (prev, next) = (values[i - 1], values[i]);
        let step = if increasing { prev - next } else { next - prev };
        let rel = step / prev.abs().max(next.abs()).max(f64::MIN_POSITIVE);
        if rel > worst {
            worst = rel;
            at_gap = Some(gaps[i]);
        }
    }
    ClauseVerdict {
        pass: worst <= MONOTONE_SLACK,
        worst_violation: worst,
        at_gap,
    }
}

fn decile(len: usize) -> usize {
    (len / 10).max(1)
}

/// Checks both normality clauses on the grid. Monotonicity and limit
/// behaviour are judged separately and all four verdicts are reported.
pub fn check_normal(w: &NormalWeight, grid: &RadialGrid) -> NormalityReport {
    check_normal_with(w, grid, &LimitThresholds::default())
}

pub fn check_normal_with(
    w: &NormalWeight,
    grid: &RadialGrid,
    limits: &LimitThresholds,
) -> NormalityReport {
    let gaps = &grid.gaps;
    let lower: Vec<f64> = gaps
        .iter()
        .map(|g| w.kind.value_at_gap(*g) / g.powf(w.a))
        .collect();
    let upper: Vec<f64> = gaps
        .iter()
        .map(|g| w.kind.value_at_gap(*g) / g.powf(w.b))
        .collect();
    let d = decile(gaps.len());
    let n = gaps.len();

    let first_max = lower[..d].iter().copied().fold(0.0, f64::max);
    let last_max = lower[n - d..].iter().copied().fold(0.0, f64::max);
    let lower_ratio = last_max / first_max;
    let first_min = upper[..d].iter().copied().fold(f64::INFINITY, f64::min);
    let last_min = upper[n - d..].iter().copied().fold(f64::INFINITY, f64::min);
    let upper_ratio = last_min / first_min;

    let lower_monotone = monotone(&lower, gaps, false);
    let upper_monotone = monotone(&upper, gaps, true);
    let lower_limit = LimitVerdict {
        pass: lower_ratio < limits.vanish,
        decile_ratio: lower_ratio,
    };
    let upper_limit = LimitVerdict {
        pass: upper_ratio > limits.blow_up,
        decile_ratio: upper_ratio,
    };
    let pass = lower_monotone.pass && upper_monotone.pass && lower_limit.pass && upper_limit.pass;
    NormalityReport {
        a: w.a,
        b: w.b,
        grid: grid.clone(),
        lower_monotone,
        lower_limit,
        upper_monotone,
        upper_limit,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_examples() {
        let w = RadialWeight::power(2.0);
        assert_eq!(w.eval(0.0).unwrap(), 1.0);
        assert_eq!(w.eval(0.5).unwrap(), 0.25);
        let lp = RadialWeight::new(WeightKind::LogPower { s: 1.0, t: 1.0 }).unwrap();
        assert_relative_eq!(lp.eval(0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(RadialWeight::disk_power(3.0).eval(0.5).unwrap(), 0.75f64.powi(3));
        assert!(w.eval(1.0).is_err());
        assert!(w.eval(-0.1).is_err());
    }

    #[test]
    fn invalid_exponents_rejected() {
        assert!(NormalWeight::power(0.5, 0.0, 1.0).is_err());
        assert!(NormalWeight::power(0.5, 1.0, 1.0).is_err());
        assert!(NormalWeight::power(f64::NAN, 0.2, 1.0).is_err());
    }

    #[test]
    fn bergman_profile_is_normal() {
        // (1 - r)^((alpha + 1) / p) with alpha = 1, p = 2
        let w = NormalWeight::power(1.0, 0.5, 2.0).unwrap();
        let report = check_normal(&w, &RadialGrid::default());
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn exponent_on_lower_edge_fails_limit_clause() {
        let w = NormalWeight::power(0.5, 0.5, 2.0).unwrap();
        let report = check_normal(&w, &RadialGrid::default());
        assert!(report.lower_monotone.pass);
        assert!(!report.lower_limit.pass);
        assert_relative_eq!(report.lower_limit.decile_ratio, 1.0, epsilon = 1e-12);
        assert!(!report.pass);
    }

    #[test]
    fn log_power_is_normal_only_near_the_boundary() {
        // (1 - r)^{1/2} log(e / (1 - r)) increases until 1 - r = 1/e, so the
        // first clause holds only on the tail of the grid.
        let w = NormalWeight::new(WeightKind::LogPower { s: 1.0, t: 1.0 }, 0.5, 2.0).unwrap();
        let full = check_normal(&w, &RadialGrid::default());
        assert!(!full.lower_monotone.pass);
        assert!(full.lower_monotone.at_gap.unwrap() > (-1.0f64).exp());
        assert!(full.lower_limit.pass && full.upper_monotone.pass && full.upper_limit.pass);

        let tail = RadialGrid::default().tail_from(1.0 - (-1.0f64).exp()).unwrap();
        let report = check_normal(&w, &tail);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn power_ladder_passes_iff_strictly_inside() {
        for (a, b) in [(0.25, 1.0), (0.5, 2.0), (1.0, 3.0)] {
            let mut s = a - 0.5;
            while s <= b + 0.5 {
                let w = NormalWeight::power(s, a, b).unwrap();
                let report = check_normal(&w, &RadialGrid::default());
                let inside = s > a + 1e-9 && s < b - 1e-9;
                assert_eq!(report.pass, inside, "a={a} s={s} b={b}");
                s += 0.25;
            }
        }
    }

    #[test]
    fn grid_from_radii_validates() {
        assert!(RadialGrid::from_radii(&[0.0, 0.5, 0.9]).is_err());
        let radii: Vec<f64> = (0..20).map(|i| 1.0 - 0.8f64.powi(i)).collect();
        assert_eq!(RadialGrid::from_radii(&radii).unwrap().gaps.len(), 20);
    }

    #[test]
    fn table_is_monotone_and_continuous() {
        let radii: Vec<f64> = (0..12).map(|i| 1.0 - 0.7f64.powi(i)).collect();
        let values: Vec<f64> = radii.iter().map(|r| (1.0 - r).powf(0.75)).collect();
        let t = MonotoneTable::new(radii.clone(), values.clone()).unwrap();
        for (r, v) in radii.iter().zip(&values) {
            assert_relative_eq!(t.value(*r), *v, epsilon = 1e-15);
        }
        let mut prev = f64::INFINITY;
        for k in 0..2000 {
            let r = radii[11] * k as f64 / 2000.0;
            let v = t.value(r);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        for w in radii.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let h = 1e-9;
            assert!((t.value(mid + h) - t.value(mid)).abs() < 1e-6);
        }
    }

    #[test]
    fn weight_json_shape() {
        let w = NormalWeight::power(0.5, 0.25, 1.0).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"kind":"power","parameters":{"s":0.5},"a":0.25,"b":1.0}"#);
        let back: NormalWeight = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        let mu: RadialWeight =
            serde_json::from_str(r#"{"kind":"disk_power","parameters":{"s":2}}"#).unwrap();
        assert_eq!(mu, RadialWeight::disk_power(2.0));
        let bad = r#"{"kind":"power","parameters":{"s":0.5},"a":1.0,"b":0.5}"#;
        assert!(serde_json::from_str::<NormalWeight>(bad).is_err());
    }
}
