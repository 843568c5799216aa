//! Collision kernels `B = b(cos theta) * Phi(|v - v_*|)` and the structural
//! constants attached to them: the kinetic lower bound `(R, c_Phi)`, the
//! angular constant `c_b`, and the grazing family `b_eps` built from a
//! mollifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_on, sphere_grid};

/// Surface measure of the unit sphere `S^k` (so `|S^1| = 2 pi`, `|S^2| = 4 pi`).
pub fn sphere_measure(k: usize) -> f64 {
    // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2); (k+1)/2 is a half-integer
    let two_a = k + 1; // Gamma argument times 2
    let even = two_a.is_multiple_of(2);
    let mut gamma = if even { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut t = if even { 2 } else { 1 };
    while t < two_a {
        gamma *= t as f64 / 2.0;
        t += 2;
    }
    2.0 * std::f64::consts::PI.powf((k as f64 + 1.0) / 2.0) / gamma
}

/// Radial kinetic kernel `Phi(|v - v_*|)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KineticKernel {
    /// `Phi(r) = r^gamma`, hard potentials for `gamma > 0`.
    Power { gamma: f64 },
    Constant { value: f64 },
    /// Piecewise-linear table on an increasing grid; evaluation clamps to the
    /// boundary values outside the grid.
    Tabulated { r: Vec<f64>, values: Vec<f64> },
}

impl KineticKernel {
    pub fn power(gamma: f64) -> Self {
        KineticKernel::Power { gamma }
    }

    pub fn constant(value: f64) -> Self {
        KineticKernel::Constant { value }
    }

    pub fn tabulated(r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r.len() != values.len() || r.len() < 2 {
            return Err(Error::Config(
                "tabulated kernel needs matching grids of length >= 2".into(),
            ));
        }
        if !r.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("tabulated r-grid must be increasing".into()));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Config("tabulated values must be finite and >= 0".into()));
        }
        Ok(KineticKernel::Tabulated { r, values })
    }

    /// Evaluates `Phi(r)` for `r >= 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("Phi requires r >= 0, got {r}")));
        }
        Ok(match self {
            KineticKernel::Power { gamma } => r.powf(*gamma),
            KineticKernel::Constant { value } => *value,
            KineticKernel::Tabulated { r: grid, values } => interp_clamped(grid, values, r),
        })
    }

    /// The non-decreasing envelope `Phi~(r) = inf_{r' >= r} Phi(r')`.
    ///
    /// It lies below `Phi` pointwise and satisfies the same lower bound
    /// `(R, c_Phi)`.
    pub fn monotone_envelope(&self) -> KineticKernel {
        match self {
            KineticKernel::Power { .. } | KineticKernel::Constant { .. } => self.clone(),
            KineticKernel::Tabulated { r, values } => {
                let mut env = values.clone();
                for i in (0..env.len().saturating_sub(1)).rev() {
                    env[i] = env[i].min(env[i + 1]);
                }
                KineticKernel::Tabulated {
                    r: r.clone(),
                    values: env,
                }
            }
        }
    }

    /// Extracts `c_Phi = inf { Phi(r) : r >= R }`, exact for power laws.
    ///
    /// A vanishing infimum violates the lower-bound hypothesis and is
    /// reported as an error.
    pub fn lower_bound_params(&self, r_threshold: f64) -> Result<KineticLowerBound> {
        if r_threshold < 0.0 {
            return Err(Error::Domain("threshold R must be >= 0".into()));
        }
        let c_phi = match self {
            KineticKernel::Power { gamma } => r_threshold.powf(*gamma),
            KineticKernel::Constant { value } => *value,
            KineticKernel::Tabulated { r, .. } => {
                let r_max = r.last().copied().unwrap_or(r_threshold) + 1.0;
                let hi = r_max.max(r_threshold + 1.0);
                let samples = 4096;
                let mut inf = f64::INFINITY;
                for i in 0..=samples {
                    let x = r_threshold + (hi - r_threshold) * i as f64 / samples as f64;
                    inf = inf.min(self.eval(x)?);
                }
                inf
            }
        };
        if c_phi <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "Phi is not bounded below on [{r_threshold}, inf): c_Phi = {c_phi}"
            )));
        }
        Ok(KineticLowerBound {
            r_threshold,
            c_phi,
        })
    }
}

fn interp_clamped(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return values[0];
    }
    if x >= *grid.last().unwrap() {
        return *values.last().unwrap();
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    values[i] + t * (values[i + 1] - values[i])
}

/// Lower-bound parameters for `Phi`: `Phi(r) >= c_phi` for all `r >= R`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KineticLowerBound {
    pub r_threshold: f64,
    pub c_phi: f64,
}

/// Shape of a mollifier `j` on `[0, pi/2]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum MollifierShape {
    /// `j(chi) ~ (1 - (2 chi / pi)^2)^2` on `[0, pi/2]`, normalized.
    PolyBump,
}

impl MollifierShape {
    fn raw(&self, chi: f64) -> f64 {
        match self {
            MollifierShape::PolyBump => {
                if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&chi) {
                    0.0
                } else {
                    let u = 2.0 * chi / std::f64::consts::PI;
                    let s = 1.0 - u * u;
                    s * s
                }
            }
        }
    }
}

/// A normalized mollifier approximating `delta_{theta = 0}`: compactly
/// supported in `[0, pi/2]`, non-increasing, with `int j = 1`. Its moments are
/// computed once at construction by 64-point Gauss quadrature.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(from = "MollifierShape", into = "MollifierShape")]
pub struct Mollifier {
    shape: MollifierShape,
    normalization: f64,
    second_moment: f64,
}

impl From<MollifierShape> for Mollifier {
    fn from(shape: MollifierShape) -> Self {
        let (nodes, weights) =
            gauss_legendre_on(0.0, std::f64::consts::FRAC_PI_2, 64).expect("fixed order");
        let mut mass = 0.0;
        let mut second_raw = 0.0;
        for (&x, &w) in nodes.iter().zip(&weights) {
            let j = shape.raw(x);
            mass += w * j;
            second_raw += w * j * x * x;
        }
        Mollifier {
            shape,
            normalization: mass,
            second_moment: second_raw / mass,
        }
    }
}

impl From<Mollifier> for MollifierShape {
    fn from(m: Mollifier) -> Self {
        m.shape
    }
}

impl Default for Mollifier {
    fn default() -> Self {
        MollifierShape::PolyBump.into()
    }
}

impl Mollifier {
    /// Normalized `j(chi)`; zero outside `[0, pi/2]`.
    pub fn eval(&self, chi: f64) -> f64 {
        self.shape.raw(chi) / self.normalization
    }

    /// `int_0^pi j(chi) chi^2 dchi`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// Rescaled mollifier `j_eps(theta) = j(theta / eps) / eps`.
    pub fn eval_scaled(&self, theta: f64, eps: f64) -> f64 {
        self.eval(theta / eps) / eps
    }
}

/// Angular kernel `b(cos theta)` as a function of the deviation angle
/// `theta` in `[0, pi]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AngularKernel {
    Constant { value: f64 },
    /// Piecewise-linear table on `[0, pi]`.
    Tabulated { theta: Vec<f64>, values: Vec<f64> },
    /// Grazing family `b_eps(theta) = j_eps(theta) / (eps^2 sin^{N-2}(theta/2))`
    /// with `j_eps(theta) = j(theta / eps) / eps`.
    Grazing {
        #[serde(default)]
        mollifier: Mollifier,
        eps: f64,
    },
}

impl AngularKernel {
    pub fn constant(value: f64) -> Self {
        AngularKernel::Constant { value }
    }

    pub fn grazing(mollifier: Mollifier, eps: f64) -> Self {
        AngularKernel::Grazing { mollifier, eps }
    }

    /// `b(theta) = theta` on a dense table; its `b~` is increasing, which the
    /// monotone-`b~` lemma must refuse.
    pub fn linear() -> Self {
        let n = 256;
        let theta: Vec<f64> = (0..=n)
            .map(|i| std::f64::consts::PI * i as f64 / n as f64)
            .collect();
        let values = theta.clone();
        AngularKernel::Tabulated { theta, values }
    }

    /// Evaluates `b(theta)`; the dimension matters only for the grazing family.
    pub fn eval(&self, theta: f64, dim: usize) -> Result<f64> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::Domain(format!(
                "angular kernel requires theta in [0, pi], got {theta}"
            )));
        }
        Ok(match self {
            AngularKernel::Constant { value } => *value,
            AngularKernel::Tabulated { theta: grid, values } => {
                interp_clamped(grid, values, theta)
            }
            AngularKernel::Grazing { mollifier, eps } => {
                let j = mollifier.eval_scaled(theta, *eps);
                if j == 0.0 {
                    0.0
                } else {
                    let s = (theta / 2.0).sin().powi(dim as i32 - 2);
                    j / (eps * eps * s)
                }
            }
        })
    }

    /// The omega-representation kernel `b~(theta) = 2^{N-1} sin^{N-2}(theta/2) b(theta)`.
    ///
    /// For the grazing family this is `2^{N-1} j_eps(theta) / eps^2`, finite at
    /// `theta = 0` and non-increasing.
    pub fn eval_tilde(&self, theta: f64, dim: usize) -> Result<f64> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::Domain(format!(
                "angular kernel requires theta in [0, pi], got {theta}"
            )));
        }
        let factor = 2f64.powi(dim as i32 - 1);
        Ok(match self {
            AngularKernel::Grazing { mollifier, eps } => {
                factor * mollifier.eval_scaled(theta, *eps) / (eps * eps)
            }
            _ => {
                factor * (theta / 2.0).sin().powi(dim as i32 - 2) * self.eval(theta, dim)?
            }
        })
    }

    /// Checks on a sample grid that `b~` is non-increasing on `[0, pi]`.
    pub fn tilde_non_increasing(&self, dim: usize, samples: usize) -> Result<bool> {
        let mut prev = f64::INFINITY;
        for i in 0..=samples {
            let theta = std::f64::consts::PI * i as f64 / samples as f64;
            let bt = self.eval_tilde(theta, dim)?;
            if bt > prev * (1.0 + 1e-12) + 1e-12 {
                return Ok(false);
            }
            prev = bt;
        }
        Ok(true)
    }
}

/// The angular constant of the kernel hypothesis:
/// `c_b = inf_{s1, s2} int min{ b(s1 . s3), b(s2 . s3) } ds3`.
///
/// By rotation invariance the infimum is over the single relative angle
/// between `s1` and `s2`, scanned on `resolution` points with one local
/// refinement pass; the returned value is the scan minimum.
pub fn compute_c_b(angular: &AngularKernel, dim: usize, resolution: usize) -> Result<f64> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Domain(format!("c_b supports dim 2 or 3, got {dim}")));
    }
    if resolution < 16 {
        return Err(Error::Domain("c_b scan resolution must be >= 16".into()));
    }
    let integral_at = |psi: f64| -> Result<f64> {
        min_pair_sphere_integral(angular, dim, psi, resolution)
    };
    let mut best = f64::INFINITY;
    let mut best_psi = 0.0;
    for i in 0..=resolution {
        let psi = std::f64::consts::PI * i as f64 / resolution as f64;
        let v = integral_at(psi)?;
        if v < best {
            best = v;
            best_psi = psi;
        }
    }
    // local refinement around the coarse minimum
    let span = std::f64::consts::PI / resolution as f64;
    for i in 0..=32 {
        let psi = (best_psi - span + 2.0 * span * i as f64 / 32.0)
            .clamp(0.0, std::f64::consts::PI);
        let v = integral_at(psi)?;
        best = best.min(v);
    }
    if best <= 1e-12 {
        return Err(Error::Hypothesis(format!(
            "angular hypothesis violated: c_b = {best} is not positive"
        )));
    }
    Ok(best)
}

/// `int min{ b(s1 . s3), b(s2 . s3) } ds3` for unit vectors at relative angle `psi`.
fn min_pair_sphere_integral(
    angular: &AngularKernel,
    dim: usize,
    psi: f64,
    resolution: usize,
) -> Result<f64> {
    let b_of_dot = |dot: f64| -> Result<f64> {
        let theta = dot.clamp(-1.0, 1.0).acos();
        angular.eval(theta, dim)
    };
    match dim {
        2 => {
            let m = 4 * resolution;
            let mut acc = 0.0;
            let w = 2.0 * std::f64::consts::PI / m as f64;
            for k in 0..m {
                let alpha = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                let b1 = b_of_dot(alpha.cos())?;
                let b2 = b_of_dot((alpha - psi).cos())?;
                acc += w * b1.min(b2);
            }
            Ok(acc)
        }
        _ => {
            let order = resolution.clamp(16, 64);
            let grid = sphere_grid(3, order)?;
            let s1 = [0.0, 0.0, 1.0];
            let s2 = [psi.sin(), 0.0, psi.cos()];
            let mut acc = 0.0;
            for (node, w) in grid.nodes.iter().zip(&grid.weights) {
                let d1 = node[0] * s1[0] + node[1] * s1[1] + node[2] * s1[2];
                let d2 = node[0] * s2[0] + node[1] * s2[1] + node[2] * s2[2];
                acc += w * b_of_dot(d1)?.min(b_of_dot(d2)?);
            }
            Ok(acc)
        }
    }
}

/// The grazing-limit constant
/// `c_{N,j} = 2^{N-5} |S^{N-2}| / (N-1) * int j(chi) chi^2 dchi`.
pub fn c_nj(mollifier: &Mollifier, dim: usize) -> f64 {
    2f64.powi(dim as i32 - 5) * sphere_measure(dim - 2) / (dim as f64 - 1.0)
        * mollifier.second_moment()
}

/// Combined kernel description, constructible from JSON:
/// `{"phi": {"type": "power", "gamma": 1.0}, "b": {"type": "constant", "value": 1.0}}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelSpec {
    pub phi: KineticKernel,
    pub b: AngularKernel,
}

impl KernelSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}
