//! Run configuration and command execution. A `RunConfig` captures every
//! input of a run; executing the same config again reproduces the output
//! bit-exactly, independently of the worker count.

use serde::{Deserialize, Serialize};

use crate::basis::{Basis, Normalization};
use crate::bounds::{
    bound_report, run_suite, s_gamma_bo, s_gamma_la, Suite, SuiteConfig, Verdict,
};
use crate::dissipation::{grazing_sweep, TestFunction};
use crate::error::{Error, Result};
use crate::kernels::{AngularKernel, KineticKernel, Mollifier};
use crate::quadrature::gauss_hermite_grid;
use crate::spectral::{
    assemble_boltzmann, assemble_landau, bobylev_lambda0, bobylev_lambda0_grazing_limit,
    spectral_gap, AssemblyOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Bounds,
    Gap,
    Verify,
    Grazing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Boltzmann,
    Landau,
}

fn default_dim() -> usize {
    3
}
fn default_phi() -> KineticKernel {
    KineticKernel::power(1.0)
}
fn default_b() -> AngularKernel {
    AngularKernel::constant(1.0)
}
fn default_truncation() -> usize {
    8
}
fn default_normalization() -> Normalization {
    Normalization::UnitMass
}
fn default_operator() -> Operator {
    Operator::Boltzmann
}
fn default_count() -> usize {
    50
}
fn default_seed() -> u64 {
    7
}
fn default_degree() -> usize {
    6
}
fn default_eps_list() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_velocity_order() -> usize {
    8
}
fn default_theta_order() -> usize {
    32
}
fn default_test_function() -> String {
    "v1v2".into()
}

/// Full description of one CLI run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_phi")]
    pub phi: KineticKernel,
    #[serde(default = "default_b")]
    pub b: AngularKernel,
    /// Threshold `R`; the optimizer value when absent.
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
    #[serde(default = "default_operator")]
    pub operator: Operator,
    /// Verification suite; all six when absent.
    #[serde(default)]
    pub suite: Option<Suite>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Degree of the random-expansion space of the verify suites.
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub order_boost: usize,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    /// Grazing command: sweep `|lambda_0(b_eps)|` instead of a dissipation.
    #[serde(default)]
    pub lambda0: bool,
    #[serde(default = "default_velocity_order")]
    pub velocity_order: usize,
    #[serde(default = "default_theta_order")]
    pub theta_order: usize,
    /// Test function of the grazing sweep: `v1v2`, `speed2`, `coordinate:<k>`
    /// or `constant`.
    #[serde(default = "default_test_function")]
    pub test_function: String,
    /// Output file; stdout when absent.
    #[serde(default)]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            dim: default_dim(),
            phi: default_phi(),
            b: default_b(),
            r: None,
            truncation: default_truncation(),
            normalization: default_normalization(),
            operator: default_operator(),
            suite: None,
            count: default_count(),
            seed: default_seed(),
            degree: default_degree(),
            order_boost: 0,
            eps_list: default_eps_list(),
            lambda0: false,
            velocity_order: default_velocity_order(),
            theta_order: default_theta_order(),
            test_function: default_test_function(),
            output: None,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn resolved_r(&self) -> f64 {
        match self.r {
            Some(r) => r,
            None => match &self.phi {
                KineticKernel::Power { gamma } => (gamma.max(0.0) / 8.0).sqrt(),
                _ => 0.0,
            },
        }
    }

    fn test_function_of(&self) -> Result<TestFunction> {
        let dim = self.dim;
        match self.test_function.as_str() {
            "v1v2" => Ok(TestFunction::v1v2(dim)),
            "speed2" => Ok(TestFunction::speed_squared(dim)),
            "constant" => Ok(TestFunction::constant(dim, 1.0)),
            other => {
                if let Some(k) = other.strip_prefix("coordinate:") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| Error::Config(format!("bad coordinate index {k}")))?;
                    if k >= dim {
                        return Err(Error::Config(format!(
                            "coordinate index {k} out of range for dim {dim}"
                        )));
                    }
                    Ok(TestFunction::coordinate(dim, k))
                } else {
                    Err(Error::Config(format!("unknown test function {other}")))
                }
            }
        }
    }
}

/// `"power:1"`, `"constant:0.5"` or a bare exponent.
pub fn parse_phi(spec: &str) -> Result<KineticKernel> {
    if let Some(g) = spec.strip_prefix("power:") {
        let gamma: f64 = g
            .parse()
            .map_err(|_| Error::Config(format!("bad exponent {g}")))?;
        return Ok(KineticKernel::power(gamma));
    }
    if let Some(v) = spec.strip_prefix("constant:") {
        let value: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("bad constant {v}")))?;
        return Ok(KineticKernel::constant(value));
    }
    spec.parse::<f64>()
        .map(KineticKernel::power)
        .map_err(|_| Error::Config(format!("unknown kinetic kernel spec {spec}")))
}

/// `"constant:1"`, `"linear"` or `"grazing:<eps>"`.
pub fn parse_b(spec: &str) -> Result<AngularKernel> {
    if let Some(v) = spec.strip_prefix("constant:") {
        let value: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("bad constant {v}")))?;
        return Ok(AngularKernel::constant(value));
    }
    if spec == "linear" {
        return Ok(AngularKernel::linear());
    }
    if let Some(e) = spec.strip_prefix("grazing:") {
        let eps: f64 = e
            .parse()
            .map_err(|_| Error::Config(format!("bad eps {e}")))?;
        if eps <= 0.0 || eps > 1.0 {
            return Err(Error::Config(format!("eps must be in (0, 1], got {eps}")));
        }
        return Ok(AngularKernel::grazing(Mollifier::default(), eps));
    }
    Err(Error::Config(format!("unknown angular kernel spec {spec}")))
}

/// Result of executing a config: the payload text and the counts needed to
/// pick the process exit code.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub payload: String,
    /// Number of fail verdicts of a verify run.
    pub failures: usize,
    /// File extension fitting the payload (`json`, `jsonl` or `csv`).
    pub extension: &'static str,
}

#[derive(Serialize)]
struct OptimizedBounds {
    r_star: f64,
    s_bo_lower: f64,
    s_la_lower: f64,
}

#[derive(Serialize)]
struct BoundsDocument {
    report: crate::bounds::BoundReport,
    optimized: Option<OptimizedBounds>,
}

fn cmd_bounds(config: &RunConfig) -> Result<RunOutput> {
    if config.dim != 3 {
        return Err(Error::Config("bounds reports require dim 3".into()));
    }
    let r = config.resolved_r();
    let report = bound_report(&config.phi, &config.b, r)?;
    let optimized = match &config.phi {
        KineticKernel::Power { gamma } if *gamma > 0.0 => {
            let (r_star, s_bo) = s_gamma_bo(*gamma)?;
            let (_, s_la) = s_gamma_la(*gamma)?;
            Some(OptimizedBounds {
                r_star,
                s_bo_lower: s_bo,
                s_la_lower: s_la,
            })
        }
        _ => None,
    };
    let doc = BoundsDocument { report, optimized };
    Ok(RunOutput {
        payload: serde_json::to_string_pretty(&doc)?,
        failures: 0,
        extension: "json",
    })
}

#[derive(Serialize)]
struct GapRow {
    degree: usize,
    gap: f64,
}

#[derive(Serialize)]
struct GapDocument {
    operator: Operator,
    normalization: Normalization,
    gap: f64,
    invariant_count: usize,
    table: Vec<GapRow>,
}

fn cmd_gap(config: &RunConfig) -> Result<RunOutput> {
    if config.truncation < 2 {
        return Err(Error::Config(
            "truncation must be >= 2; the invariant complement is empty below".into(),
        ));
    }
    let mut table = Vec::new();
    let mut last = None;
    for degree in 2..=config.truncation {
        let basis = Basis::new(config.dim, degree, config.normalization)?;
        let system = match config.operator {
            Operator::Boltzmann => {
                let mut opts = AssemblyOptions::for_degree(degree);
                opts.omega_order += config.order_boost;
                opts.radial_order += config.order_boost;
                assemble_boltzmann(&basis, &config.phi, &config.b, &opts)?
            }
            Operator::Landau => {
                assemble_landau(&basis, &config.phi, (degree + 2).max(10) + config.order_boost)?
            }
        };
        let report = spectral_gap(&system)?;
        table.push(GapRow {
            degree,
            gap: report.gap,
        });
        last = Some(report);
    }
    let report = last.expect("truncation >= 2 yields at least one row");
    let doc = GapDocument {
        operator: config.operator,
        normalization: config.normalization,
        gap: report.gap,
        invariant_count: report.invariant_count,
        table,
    };
    Ok(RunOutput {
        payload: serde_json::to_string_pretty(&doc)?,
        failures: 0,
        extension: "json",
    })
}

#[derive(Serialize)]
struct VerifySummary {
    pass: usize,
    fail: usize,
    inconclusive: usize,
}

fn cmd_verify(config: &RunConfig) -> Result<RunOutput> {
    let gamma = match &config.phi {
        KineticKernel::Power { gamma } => *gamma,
        _ => {
            return Err(Error::Config(
                "verify suites use a power-law kinetic kernel".into(),
            ))
        }
    };
    // a user-supplied non-grazing b must satisfy the monotonicity gate that
    // the kinetic reduction at fixed b depends on
    let eps = match &config.b {
        AngularKernel::Grazing { eps, .. } => *eps,
        AngularKernel::Constant { .. } => 0.2,
        other => {
            if !other.tilde_non_increasing(config.dim, 400)? {
                return Err(Error::Hypothesis(
                    "angular kernel has an increasing transformed kernel b~".into(),
                ));
            }
            0.2
        }
    };
    let suites: Vec<Suite> = match config.suite {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    let mut suite_config = SuiteConfig::new(gamma);
    suite_config.dim = config.dim;
    suite_config.degree = config.degree;
    suite_config.count = config.count;
    suite_config.seed = config.seed;
    suite_config.r = config.resolved_r();
    suite_config.eps = eps;
    suite_config.order_boost = config.order_boost;

    let mut payload = String::new();
    let mut summary = VerifySummary {
        pass: 0,
        fail: 0,
        inconclusive: 0,
    };
    for suite in suites {
        for record in run_suite(suite, &suite_config)? {
            match record.verdict {
                Verdict::Pass => summary.pass += 1,
                Verdict::Fail => summary.fail += 1,
                Verdict::Inconclusive => summary.inconclusive += 1,
            }
            payload.push_str(&record.to_json_line()?);
            payload.push('\n');
        }
    }
    payload.push_str(&serde_json::to_string(&summary)?);
    payload.push('\n');
    Ok(RunOutput {
        failures: summary.fail,
        payload,
        extension: "jsonl",
    })
}

fn fit_order(eps: &[f64], rel: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(rel)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&e, &r)| (e.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn cmd_grazing(config: &RunConfig) -> Result<RunOutput> {
    let mollifier = match &config.b {
        AngularKernel::Grazing { mollifier, .. } => mollifier.clone(),
        _ => Mollifier::default(),
    };
    if config
        .eps_list
        .windows(2)
        .any(|w| w[1] >= w[0])
    {
        return Err(Error::Config("eps list must be strictly decreasing".into()));
    }
    let payload = if config.lambda0 {
        let limit = bobylev_lambda0_grazing_limit(&mollifier);
        let mut rows = String::from("eps,lambda0,limit,rel_error\n");
        let mut rel = Vec::new();
        for &eps in &config.eps_list {
            let b_eps = AngularKernel::grazing(mollifier.clone(), eps);
            let l0 = bobylev_lambda0(&b_eps)?;
            let r = ((l0 - limit) / limit).abs();
            rel.push(r);
            rows.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", eps, l0, limit, r));
        }
        rows.push_str(&format!(
            "# fitted_order={:.6}\n",
            fit_order(&config.eps_list, &rel)
        ));
        rows
    } else {
        let h = config.test_function_of()?;
        let vgrid = gauss_hermite_grid(config.velocity_order, config.dim)?;
        let sweep = grazing_sweep(
            &h,
            &config.phi,
            &mollifier,
            &config.eps_list,
            &vgrid,
            config.theta_order,
        )?;
        let mut out = sweep.to_csv();
        out.push_str(&format!("# fitted_order={:.6}\n", sweep.fitted_order));
        out
    };
    Ok(RunOutput {
        payload,
        failures: 0,
        extension: "csv",
    })
}

/// Executes a config. The output depends only on the config contents.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    match config.command {
        Command::Bounds => cmd_bounds(config),
        Command::Gap => cmd_gap(config),
        Command::Verify => cmd_verify(config),
        Command::Grazing => cmd_grazing(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_shorthand() {
        assert_eq!(parse_phi("power:2").unwrap(), KineticKernel::power(2.0));
        assert_eq!(parse_phi("1.5").unwrap(), KineticKernel::power(1.5));
        assert_eq!(parse_phi("constant:0").unwrap(), KineticKernel::constant(0.0));
        assert!(parse_phi("cubic").is_err());
        assert_eq!(parse_b("constant:1").unwrap(), AngularKernel::constant(1.0));
        assert!(matches!(
            parse_b("grazing:0.2").unwrap(),
            AngularKernel::Grazing { .. }
        ));
        assert!(parse_b("grazing:0").is_err());
        assert!(parse_b("noise").is_err());
    }

    #[test]
    fn config_round_trip() {
        let mut config = RunConfig::new(Command::Grazing);
        config.eps_list = vec![0.3, 0.1];
        config.lambda0 = true;
        let json = config.to_json().unwrap();
        let back = RunConfig::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn bounds_small_gamma_limit() {
        let mut config = RunConfig::new(Command::Bounds);
        config.phi = KineticKernel::power(0.0001);
        let out = execute(&config).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.payload).unwrap();
        let s_bo = doc["optimized"]["s_bo_lower"].as_f64().unwrap();
        let limit = std::f64::consts::PI / 24.0;
        assert!((s_bo - limit).abs() < 1e-3 * limit);
    }

    #[test]
    fn bounds_zero_phi_is_hypothesis_violation() {
        let mut config = RunConfig::new(Command::Bounds);
        config.phi = KineticKernel::constant(0.0);
        assert!(matches!(
            execute(&config).unwrap_err(),
            Error::Hypothesis(_)
        ));
    }

    #[test]
    fn gap_rejects_degenerate_truncation() {
        let mut config = RunConfig::new(Command::Gap);
        config.truncation = 1;
        assert!(matches!(execute(&config).unwrap_err(), Error::Config(_)));
    }

    #[test]
    fn gap_landau_small() {
        let mut config = RunConfig::new(Command::Gap);
        config.operator = Operator::Landau;
        config.phi = KineticKernel::constant(1.0);
        config.truncation = 4;
        let out = execute(&config).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.payload).unwrap();
        assert!(doc["gap"].as_f64().unwrap() >= 2.0 * std::f64::consts::PI - 1e-6);
    }

    #[test]
    fn verify_small_suite() {
        let mut config = RunConfig::new(Command::Verify);
        config.suite = Some(Suite::Theorem2);
        config.count = 4;
        config.degree = 4;
        let out = execute(&config).unwrap();
        assert_eq!(out.failures, 0);
        assert_eq!(out.payload.lines().count(), 5);
        assert!(out.payload.lines().last().unwrap().contains("\"pass\":4"));
    }

    #[test]
    fn verify_linear_b_refused() {
        let mut config = RunConfig::new(Command::Verify);
        config.suite = Some(Suite::Lemma3);
        config.b = AngularKernel::linear();
        assert!(matches!(
            execute(&config).unwrap_err(),
            Error::Hypothesis(_)
        ));
    }

    #[test]
    fn grazing_requires_decreasing_eps() {
        let mut config = RunConfig::new(Command::Grazing);
        config.eps_list = vec![0.1, 0.2];
        assert!(matches!(execute(&config).unwrap_err(), Error::Config(_)));
    }

    #[test]
    fn grazing_invariant_is_zero() {
        let mut config = RunConfig::new(Command::Grazing);
        config.test_function = "speed2".into();
        config.eps_list = vec![0.4, 0.2];
        config.velocity_order = 6;
        let out = execute(&config).unwrap();
        for line in out.payload.lines().skip(1).take(2) {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert!(cols[1].abs() < 1e-8);
            assert!(cols[2].abs() < 1e-8);
        }
    }

    #[test]
    fn grazing_lambda0_mode() {
        let mut config = RunConfig::new(Command::Grazing);
        config.lambda0 = true;
        config.eps_list = vec![0.4, 0.2, 0.1];
        let out = execute(&config).unwrap();
        assert!(out.payload.starts_with("eps,lambda0,limit,rel_error\n"));
        assert!(out.payload.contains("# fitted_order="));
        let rels: Vec<f64> = out
            .payload
            .lines()
            .skip(1)
            .take(3)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(rels[0] > rels[1] && rels[1] > rels[2]);
    }
}
