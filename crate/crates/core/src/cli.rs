//! Command drivers behind the `discnorm` binary.
//!
//! Every command reads a versioned JSON config, prints a plain-text summary
//! and writes a JSON report plus CSV tables into the output directory.
//!
//! CSV files and their columns:
//!
//! | command   | file             | columns |
//! |-----------|------------------|---------|
//! | `norm`    | `profile.csv`    | `r,M_q` (mixed and bergman spaces) |
//! | `norm`    | `surface.csv`    | `r,theta,value` with value `mu(r) |f^(k)|` (zygmund `k = 2`, bloch `k = 1`) |
//! | `essnorm` | `ladder.csv`     | `delta,sup_a,sup_b` (`sup_b` empty for the bloch target) |
//! | `verify`  | `identities.csv` | `w_abs,arg,n,weight,residual_1,residual_2,residual_3,residual_4` |
//! | `verify`  | `rungs.csv`      | `w_abs,n,fk_norm,hk_norm` |
//! | `apply`   | `apply.csv`      | `re_z,im_z,re_cf,im_cf,re_dcf,im_dcf,re_d2cf,im_d2cf` |
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure or
//! failed check, 4 inconclusive verdict.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::essnorm::{limsup_ladder, EssNormReport, LadderConfig, ProxyContext, Target, Verdict};
use crate::extremals::{
    check_pointwise_bound, verify_identities, verify_uniform_bound, BoundReport, ExtremalParams,
    IdentityReport, PointwiseReport,
};
use crate::fnspec::{AnalyticFunction, SelfMap};
use crate::integop::{apply_operator, image_first_derivative, image_second_derivative, OperatorSpec, Preset};
use crate::norms::{
    bergman_norm, bloch_norm, mean_profile, mixed_norm, zygmund_norm, MixedNormParams, NormReport,
    QuadratureConfig,
};
use crate::sampler::{sample_grid, PolarGrid, SamplerConfig};
use crate::weights::{check_normal, NormalWeight, NormalityReport, RadialGrid, RadialWeight};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(Error::Inconclusive) => 4,
            CliError::Numeric(e) if is_config_error(e) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Domain { .. }
            | Error::InvalidFunction(_)
            | Error::InvalidWeight(_)
            | Error::InvalidParameter(_)
            | Error::NotSelfMap { .. }
    )
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Flags shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 3,
            Status::Inconclusive => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Parses a config and checks its version tag.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    #[derive(Deserialize)]
    struct Tag {
        version: Option<u32>,
    }
    let tag: Tag = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    match tag.version {
        Some(CONFIG_VERSION) => {}
        Some(v) => return Err(CliError::Config(format!("unsupported config version {v}"))),
        None => return Err(CliError::Config("missing \"version\" field".into())),
    }
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

struct Writer {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(out: &Option<PathBuf>) -> CliResult<Self> {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
        }
        Ok(Self {
            dir: out.clone(),
            files: Vec::new(),
        })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        self.put(name, &bytes)
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            self.files.push(path);
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn require_normal(w: &NormalWeight, tail_from: Option<f64>, label: &str) -> CliResult<NormalityReport> {
    let grid = match tail_from {
        Some(r) => RadialGrid::default().tail_from(r)?,
        None => RadialGrid::default(),
    };
    let report = check_normal(w, &grid);
    if !report.pass {
        return Err(CliError::Config(format!("weight `{label}` is not normal on the check grid")));
    }
    Ok(report)
}

// ---------------------------------------------------------------- norm

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Mixed,
    Zygmund,
    Bloch,
    Bergman,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub version: u32,
    pub space: Space,
    pub function: AnalyticFunction,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    /// Normal weight of the mixed space.
    #[serde(default)]
    pub weight: Option<NormalWeight>,
    /// Normality is checked only for radii at or above this value.
    #[serde(default)]
    pub normality_from: Option<f64>,
    /// Radial weight of the zygmund and bloch spaces.
    #[serde(default)]
    pub mu: Option<RadialWeight>,
    /// Bergman exponent.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Radii for the `M_q` profile.
    #[serde(default = "default_profile")]
    pub profile_radii: Vec<f64>,
}

fn default_profile() -> Vec<f64> {
    (0..20).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct NormOutput {
    pub version: u32,
    pub space: Space,
    #[serde(flatten)]
    pub report: NormReport,
}

fn missing(field: &str, space: &str) -> CliError {
    CliError::Config(format!("`{field}` is required for space {space}"))
}

pub fn cmd_norm(cfg: &NormConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let mut quad = cfg.quadrature.clone();
    if let Some(t) = opts.tol {
        quad.tol = t;
    }
    if let Some(s) = opts.seed {
        quad.sampler.seed = Some(s);
    }
    quad.validate()?;
    let f = &cfg.function;
    let mut out = Writer::new(&opts.out)?;
    let report = match cfg.space {
        Space::Mixed => {
            let p = cfg.p.ok_or_else(|| missing("p", "mixed"))?;
            let q = cfg.q.ok_or_else(|| missing("q", "mixed"))?;
            let w = cfg.weight.clone().ok_or_else(|| missing("weight", "mixed"))?;
            require_normal(&w, cfg.normality_from, "weight")?;
            let report = mixed_norm(f, &MixedNormParams::new(p, q, w)?, &quad)?;
            profile_csv(&mut out, f, q, &cfg.profile_radii, &quad)?;
            report
        }
        Space::Bergman => {
            let p = cfg.p.ok_or_else(|| missing("p", "bergman"))?;
            let alpha = cfg.alpha.ok_or_else(|| missing("alpha", "bergman"))?;
            let report = bergman_norm(f, p, alpha, &quad)?;
            profile_csv(&mut out, f, p, &cfg.profile_radii, &quad)?;
            report
        }
        Space::Zygmund | Space::Bloch => {
            let mu = cfg.mu.clone().ok_or_else(|| missing("mu", "zygmund/bloch"))?;
            let (report, order) = if cfg.space == Space::Zygmund {
                (zygmund_norm(f, &mu, &quad)?, 2)
            } else {
                (bloch_norm(f, &mu, &quad)?, 1)
            };
            surface_csv(&mut out, f, &mu, order, &quad.sampler)?;
            report
        }
    };
    let output = NormOutput {
        version: CONFIG_VERSION,
        space: cfg.space,
        report,
    };
    out.json("norm.json", &output)?;
    let r = &output.report;
    let mut summary = format!("{:?} norm: {}\n", cfg.space, r.value);
    if let Some(e) = r.error_estimate {
        let _ = writeln!(summary, "error estimate: {e:e}");
    }
    if let Some(t) = r.tail_bound {
        let _ = writeln!(summary, "tail bound: {t:e}");
    }
    if let Some([x, y]) = r.argmax {
        let _ = writeln!(summary, "argmax: {x} + {y}i ({} evaluations)", r.evaluations);
    }
    Ok(Outcome {
        status: Status::Ok,
        summary,
        files: out.files,
    })
}

fn profile_csv(
    out: &mut Writer,
    f: &AnalyticFunction,
    q: f64,
    radii: &[f64],
    quad: &QuadratureConfig,
) -> CliResult<()> {
    let rows: Vec<Vec<String>> = mean_profile(f, q, radii, quad)?
        .into_iter()
        .map(|(r, m)| vec![num(r), num(m)])
        .collect();
    out.csv("profile.csv", &["r", "M_q"], &rows)
}

fn surface_csv(
    out: &mut Writer,
    f: &AnalyticFunction,
    mu: &RadialWeight,
    order: u32,
    sampler: &SamplerConfig,
) -> CliResult<()> {
    let d = f.derivative(order);
    let grid = PolarGrid::new(sampler);
    let rows: Vec<Vec<String>> = sample_grid(&grid, &|pt| {
        Some(mu.kind.value_at_gap(pt.gap()) * d.value_at(pt.z()).norm())
    })
    .into_iter()
    .map(|(_, pt, v)| vec![num(pt.radius()), num(pt.theta), num(v.unwrap_or(f64::NAN))])
    .collect();
    out.csv("surface.csv", &["r", "theta", "value"], &rows)
}

// ---------------------------------------------------------------- operator data

fn default_identity() -> AnalyticFunction {
    AnalyticFunction::identity()
}

fn default_one() -> AnalyticFunction {
    AnalyticFunction::constant(1.0)
}

fn default_supnorm_tol() -> f64 {
    1e-10
}

/// `(n, phi, g)` as it appears in configs. A preset overrides `n` and
/// either `phi` or `g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub n: u32,
    #[serde(default = "default_identity")]
    pub phi: AnalyticFunction,
    #[serde(default = "default_one")]
    pub g: AnalyticFunction,
    #[serde(default = "default_supnorm_tol")]
    pub supnorm_tol: f64,
}

impl OperatorConfig {
    pub fn build(&self, preset: Option<Preset>) -> CliResult<OperatorSpec> {
        Ok(match preset.or(self.preset) {
            Some(Preset::Volterra) => OperatorSpec::volterra(self.g.clone()),
            Some(Preset::Composition) => {
                OperatorSpec::composition(SelfMap::new(self.phi.clone(), self.supnorm_tol)?)
            }
            None => OperatorSpec::new(
                self.n,
                SelfMap::new(self.phi.clone(), self.supnorm_tol)?,
                self.g.clone(),
            ),
        })
    }
}

// ---------------------------------------------------------------- essnorm

fn default_target() -> Target {
    Target::Zygmund
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssNormConfig {
    pub version: u32,
    #[serde(default = "default_target")]
    pub target: Target,
    #[serde(flatten)]
    pub operator: OperatorConfig,
    pub mu: RadialWeight,
    pub w: NormalWeight,
    pub q: f64,
    #[serde(default)]
    pub normality_from: Option<f64>,
    #[serde(default)]
    pub ladder: LadderConfig,
}

pub fn cmd_essnorm(cfg: &EssNormConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let spec = cfg.operator.build(opts.preset)?;
    require_normal(&cfg.w, cfg.normality_from, "w")?;
    let ctx = ProxyContext::new(spec, cfg.mu.clone(), cfg.w.clone(), cfg.q)?;
    let mut ladder = cfg.ladder.clone();
    if let Some(t) = opts.tol {
        ladder.tol = t;
    }
    if let Some(s) = opts.seed {
        ladder.sampler.seed = Some(s);
    }
    let report = limsup_ladder(&ctx, cfg.target, &ladder)?;

    let mut out = Writer::new(&opts.out)?;
    out.json("essnorm.json", &report)?;
    let rows: Vec<Vec<String>> = report
        .deltas
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let b = report.sup_b.as_ref().map(|v| num(v[i])).unwrap_or_default();
            vec![num(*d), num(report.sup_a[i]), b]
        })
        .collect();
    out.csv("ladder.csv", &["delta", "sup_a", "sup_b"], &rows)?;

    let status = match report.verdict {
        Verdict::Inconclusive => Status::Inconclusive,
        _ => Status::Ok,
    };
    Ok(Outcome {
        status,
        summary: essnorm_summary(&report),
        files: out.files,
    })
}

fn essnorm_summary(r: &EssNormReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>10}  {:>14}  {:>14}", "delta", "sup_a", "sup_b");
    for (i, d) in r.deltas.iter().enumerate() {
        let b = r.sup_b.as_ref().map(|v| format!("{:>14.6e}", v[i])).unwrap_or_default();
        let _ = writeln!(s, "{d:>10}  {:>14.6e}  {b}", r.sup_a[i]);
    }
    let _ = writeln!(s, "limsup A: {:e} (extrapolated {:e})", r.limsup_a, r.extrapolated_a);
    if let (Some(b), Some(e)) = (r.limsup_b, r.extrapolated_b) {
        let _ = writeln!(s, "limsup B: {b:e} (extrapolated {e:e})");
    }
    let _ = writeln!(s, "estimate: {:e} ({})", r.estimate, r.estimate_kind);
    let _ = writeln!(s, "verdict: {}", serde_json::to_string(&r.verdict).unwrap().trim_matches('"'));
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

// ---------------------------------------------------------------- verify

fn default_orders() -> Vec<u32> {
    vec![0, 1, 2, 3]
}

fn default_radii() -> Vec<f64> {
    vec![0.5, 0.9, 0.99, 0.999]
}

fn default_args() -> Vec<f64> {
    vec![0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4]
}

fn default_weights() -> Vec<NormalWeight> {
    let mut weights: Vec<NormalWeight> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&s| NormalWeight::power(s, s / 2.0, s + 1.0).expect("valid weight"))
        .collect();
    weights.push(
        NormalWeight::new(crate::weights::WeightKind::DiskPower { s: 0.5 }, 0.25, 1.0).expect("valid weight"),
    );
    weights
}

fn default_q() -> f64 {
    2.0
}

fn default_b() -> f64 {
    1.0
}

fn default_identity_tol() -> f64 {
    1e-8
}

fn default_bound_weight() -> NormalWeight {
    NormalWeight::power(0.5, 0.25, 1.0).expect("valid weight")
}

fn default_levels() -> u32 {
    10
}

fn default_ratio_limit() -> f64 {
    4.0
}

fn default_spread_limit() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    Identities {
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default = "default_orders")]
        orders: Vec<u32>,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_args")]
        args: Vec<f64>,
        #[serde(default = "default_weights")]
        weights: Vec<NormalWeight>,
        #[serde(default = "default_identity_tol")]
        tol: f64,
        /// Replaces the derived exponent, to probe the identities.
        #[serde(default)]
        alpha: Option<f64>,
    },
    UniformBound {
        #[serde(default = "default_q")]
        p: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default = "default_bound_orders")]
        orders: Vec<u32>,
        #[serde(default = "default_levels")]
        levels: u32,
        #[serde(default)]
        arg: f64,
        #[serde(default = "default_bound_weight")]
        weight: NormalWeight,
        #[serde(default = "default_ratio_limit")]
        ratio_limit: f64,
    },
    Pointwise {
        functions: Vec<AnalyticFunction>,
        #[serde(default = "default_q")]
        p: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default)]
        n: u32,
        #[serde(default = "default_bound_weight")]
        weight: NormalWeight,
        #[serde(default = "default_spread_limit")]
        spread_limit: f64,
        #[serde(default)]
        sampler: SamplerConfig,
    },
    Normality {
        weight: NormalWeight,
        #[serde(default)]
        tail_from: Option<f64>,
    },
}

fn default_bound_orders() -> Vec<u32> {
    vec![0, 1, 2]
}

fn default_checks() -> Vec<Check> {
    vec![
        Check::Identities {
            q: default_q(),
            b: default_b(),
            orders: default_orders(),
            radii: default_radii(),
            args: default_args(),
            weights: default_weights(),
            tol: default_identity_tol(),
            alpha: None,
        },
        Check::UniformBound {
            p: default_q(),
            q: default_q(),
            b: default_b(),
            orders: default_bound_orders(),
            levels: default_levels(),
            arg: 0.0,
            weight: default_bound_weight(),
            ratio_limit: default_ratio_limit(),
        },
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub version: u32,
    /// Absent means the default identity grid and uniform-bound ladder.
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseSweep {
    pub reports: Vec<PointwiseReport>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub spread_limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckResult {
    Identities { reports: Vec<IdentityReport>, pass: bool },
    UniformBound { reports: Vec<BoundReport>, pass: bool },
    Pointwise(PointwiseSweep),
    Normality(NormalityReport),
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        match self {
            CheckResult::Identities { pass, .. } | CheckResult::UniformBound { pass, .. } => *pass,
            CheckResult::Pointwise(s) => s.pass,
            CheckResult::Normality(r) => r.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub version: u32,
    pub results: Vec<CheckResult>,
    pub pass: bool,
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn cmd_verify(cfg: &VerifyConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let mut results = Vec::new();
    let mut identity_rows = Vec::new();
    let mut rung_rows = Vec::new();
    let mut summary = String::new();
    for check in &cfg.checks {
        let result = run_check(check, cfg, opts, &mut identity_rows, &mut rung_rows, &mut summary)?;
        results.push(result);
    }
    let pass = results.iter().all(CheckResult::pass);
    let mut out = Writer::new(&opts.out)?;
    out.json(
        "verify.json",
        &VerifyOutput {
            version: CONFIG_VERSION,
            results,
            pass,
        },
    )?;
    if !identity_rows.is_empty() {
        out.csv(
            "identities.csv",
            &["w_abs", "arg", "n", "weight", "residual_1", "residual_2", "residual_3", "residual_4"],
            &identity_rows,
        )?;
    }
    if !rung_rows.is_empty() {
        out.csv("rungs.csv", &["w_abs", "n", "fk_norm", "hk_norm"], &rung_rows)?;
    }
    if cfg.checks.is_empty() {
        summary.push_str("no checks selected\n");
    }
    let _ = writeln!(summary, "overall: {}", if pass { "PASS" } else { "FAIL" });
    Ok(Outcome {
        status: if pass { Status::Ok } else { Status::Failed },
        summary,
        files: out.files,
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_check(
    check: &Check,
    cfg: &VerifyConfig,
    opts: &RunOptions,
    identity_rows: &mut Vec<Vec<String>>,
    rung_rows: &mut Vec<Vec<String>>,
    summary: &mut String,
) -> CliResult<CheckResult> {
    let mut quad = cfg.quadrature.clone();
    if let Some(s) = opts.seed {
        quad.sampler.seed = Some(s);
    }
    Ok(match check {
        Check::Identities { q, b, orders, radii, args, weights, tol, alpha } => {
            let tol = opts.tol.unwrap_or(*tol);
            let mut reports = Vec::new();
            for (wi, weight) in weights.iter().enumerate() {
                for &n in orders {
                    for &rho in radii {
                        for &arg in args {
                            let mut prm = ExtremalParams::new(Complex64::from_polar(rho, arg), *q, *b, n)?;
                            if let Some(a) = alpha {
                                prm = prm.with_alpha(*a);
                            }
                            let r = verify_identities(&prm, weight, tol)?;
                            let mut row = vec![num(rho), num(arg), n.to_string(), wi.to_string()];
                            row.extend(r.checks.iter().map(|c| num(c.residual)));
                            identity_rows.push(row);
                            let _ = writeln!(
                                summary,
                                "identities n={n} |w|={rho} arg={arg:.4} weight#{wi}: {} {}",
                                r.checks
                                    .iter()
                                    .enumerate()
                                    .map(|(i, c)| format!("({})={}:{:.2e}", i + 1, verdict(c.pass), c.residual))
                                    .collect::<Vec<_>>()
                                    .join(" "),
                                verdict(r.pass)
                            );
                            reports.push(r);
                        }
                    }
                }
            }
            let pass = reports.iter().all(|r| r.pass);
            CheckResult::Identities { reports, pass }
        }
        Check::UniformBound { p, q, b, orders, levels, arg, weight, ratio_limit } => {
            let mut reports = Vec::new();
            for &n in orders {
                let family = ExtremalParams::ladder(*q, *b, n, *levels, *arg)?;
                let r = verify_uniform_bound(&family, weight, *p, *ratio_limit, &quad)?;
                for rung in &r.rungs {
                    rung_rows.push(vec![num(rung.w_abs), n.to_string(), num(rung.fk_norm), num(rung.hk_norm)]);
                }
                let _ = writeln!(
                    summary,
                    "uniform bound n={n}: f_k ratio {:.4} h_k ratio {:.4} (limit {ratio_limit}) {}",
                    r.fk_ratio,
                    r.hk_ratio,
                    verdict(r.pass)
                );
                reports.push(r);
            }
            let pass = reports.iter().all(|r| r.pass);
            CheckResult::UniformBound { reports, pass }
        }
        Check::Pointwise { functions, p, q, n, weight, spread_limit, sampler } => {
            let mut sampler = sampler.clone();
            if let Some(s) = opts.seed {
                sampler.seed = Some(s);
            }
            let reports = functions
                .iter()
                .map(|f| check_pointwise_bound(f, *p, *q, weight, *n, &sampler, &quad))
                .collect::<crate::Result<Vec<_>>>()?;
            let ratios: Vec<f64> = reports.iter().map(|r| r.sup_ratio).collect();
            let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
            let median_ratio = if ratios.is_empty() { 0.0 } else { median(&ratios) };
            let pass = max_ratio.is_finite() && max_ratio <= spread_limit * median_ratio;
            let _ = writeln!(
                summary,
                "pointwise bound: max R {max_ratio:.4e} median R {median_ratio:.4e} {}",
                verdict(pass)
            );
            CheckResult::Pointwise(PointwiseSweep {
                reports,
                max_ratio,
                median_ratio,
                spread_limit: *spread_limit,
                pass,
            })
        }
        Check::Normality { weight, tail_from } => {
            let grid = match tail_from {
                Some(r) => RadialGrid::default().tail_from(*r)?,
                None => RadialGrid::default(),
            };
            let r = check_normal(weight, &grid);
            let _ = writeln!(summary, "normality (a={}, b={}): {}", r.a, r.b, verdict(r.pass));
            CheckResult::Normality(r)
        }
    })
}

// ---------------------------------------------------------------- apply

fn default_path_points() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApplyConfig {
    pub version: u32,
    #[serde(flatten)]
    pub operator: OperatorConfig,
    pub f: AnalyticFunction,
    pub points: Vec<[f64; 2]>,
    /// Initial Gauss-Legendre panels along each segment `[0, z]`.
    #[serde(default = "default_path_points")]
    pub path_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApplyRow {
    pub z: [f64; 2],
    pub value: [f64; 2],
    pub first: [f64; 2],
    pub second: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct ApplyOutput {
    pub version: u32,
    pub n: u32,
    pub rows: Vec<ApplyRow>,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn cmd_apply(cfg: &ApplyConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let spec = cfg.operator.build(opts.preset)?;
    let rows = cfg
        .points
        .iter()
        .map(|&[x, y]| {
            let z = Complex64::new(x, y);
            Ok(ApplyRow {
                z: [x, y],
                value: pair(apply_operator(&spec, &cfg.f, z, cfg.path_points)?),
                first: pair(image_first_derivative(&spec, &cfg.f, z)?),
                second: pair(image_second_derivative(&spec, &cfg.f, z)?),
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut out = Writer::new(&opts.out)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [r.z, r.value, r.first, r.second]
                .iter()
                .flat_map(|c| [num(c[0]), num(c[1])])
                .collect()
        })
        .collect();
    out.csv(
        "apply.csv",
        &["re_z", "im_z", "re_cf", "im_cf", "re_dcf", "im_dcf", "re_d2cf", "im_d2cf"],
        &csv_rows,
    )?;
    let mut summary = String::new();
    for r in &rows {
        let _ = writeln!(
            summary,
            "z={:?}  Cf={:?}  Cf'={:?}  Cf''={:?}",
            r.z, r.value, r.first, r.second
        );
    }
    out.json(
        "apply.json",
        &ApplyOutput {
            version: CONFIG_VERSION,
            n: spec.n,
            rows,
        },
    )?;
    Ok(Outcome {
        status: Status::Ok,
        summary,
        files: out.files,
    })
}
