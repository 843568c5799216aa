//! Entropy dissipation functionals of the linearized Boltzmann and Landau
//! operators, evaluated by quadrature on test functions.
//!
//! The measure in this module is the unnormalized `M(v) = e^{-|v|^2}`, exactly
//! as the functionals are written; normalization conventions live in the
//! spectral module. All reductions run in a fixed deterministic order.

use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::kernels::{c_nj, AngularKernel, KineticKernel, Mollifier};
use crate::quadrature::{gauss_legendre_on, IntegralEstimate, QuadratureGrid};

/// Below this relative-velocity threshold the collision integrands are set to
/// zero: the defect vanishes there and `|z|^2 Phi(|z|)` is removable for hard
/// potentials.
pub const DIAGONAL_CUTOFF: f64 = 1e-12;

type ValueFn = dyn Fn(&[f64; 3]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync;

/// A test function `h` in `L^2(M)` with an exact gradient.
#[derive(Clone)]
pub enum TestFunction {
    /// Coefficient expansion over a Sonine x harmonic basis.
    Expansion {
        basis: Arc<Basis>,
        coefficients: Vec<f64>,
    },
    /// User closure with analytic gradient.
    Closure {
        dim: usize,
        value: Arc<ValueFn>,
        gradient: Arc<GradFn>,
    },
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestFunction::Expansion { coefficients, .. } => f
                .debug_struct("TestFunction::Expansion")
                .field("ncoeff", &coefficients.len())
                .finish(),
            TestFunction::Closure { dim, .. } => f
                .debug_struct("TestFunction::Closure")
                .field("dim", dim)
                .finish(),
        }
    }
}

impl TestFunction {
    pub fn expansion(basis: Arc<Basis>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coefficients.len()
            )));
        }
        Ok(TestFunction::Expansion {
            basis,
            coefficients,
        })
    }

    pub fn closure<V, G>(dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&[f64; 3]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static,
    {
        TestFunction::Closure {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::closure(dim, move |_| c, |_| [0.0; 3])
    }

    pub fn coordinate(dim: usize, axis: usize) -> Self {
        Self::closure(dim, move |v| v[axis], move |_| {
            let mut g = [0.0; 3];
            g[axis] = 1.0;
            g
        })
    }

    pub fn speed_squared(dim: usize) -> Self {
        Self::closure(
            dim,
            move |v| v[..dim].iter().map(|x| x * x).sum(),
            move |v| {
                let mut g = [0.0; 3];
                for (a, gi) in g.iter_mut().enumerate().take(dim) {
                    *gi = 2.0 * v[a];
                }
                g
            },
        )
    }

    /// The quadratic mode `v_1 v_2`, an exact Maxwellian eigenfunction.
    pub fn v1v2(dim: usize) -> Self {
        Self::closure(dim, |v| v[0] * v[1], |v| [v[1], v[0], 0.0])
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Expansion { basis, .. } => basis.dim,
            TestFunction::Closure { dim, .. } => *dim,
        }
    }

    pub fn value(&self, v: &[f64; 3]) -> f64 {
        match self {
            TestFunction::Expansion {
                basis,
                coefficients,
            } => {
                let mut acc = 0.0;
                for (f, c) in basis.functions.iter().zip(coefficients) {
                    acc += c * f.poly.eval(v);
                }
                acc
            }
            TestFunction::Closure { value, .. } => value(v),
        }
    }

    pub fn gradient(&self, v: &[f64; 3]) -> [f64; 3] {
        match self {
            TestFunction::Expansion {
                basis,
                coefficients,
            } => {
                let mut acc = [0.0; 3];
                for (f, c) in basis.functions.iter().zip(coefficients) {
                    for (a, gi) in acc.iter_mut().enumerate() {
                        *gi += c * f.grad[a].eval(v);
                    }
                }
                acc
            }
            TestFunction::Closure { gradient, .. } => gradient(v),
        }
    }
}

/// Pre- and post-collisional velocities of one elastic collision.
#[derive(Debug, Clone, Copy)]
pub struct CollisionPair {
    pub v: [f64; 3],
    pub v_star: [f64; 3],
    pub v_prime: [f64; 3],
    pub v_star_prime: [f64; 3],
}

#[inline]
fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Post-collisional velocities
/// `v' = (v + v_*)/2 + (|v - v_*|/2) sigma`, `v'_* = (v + v_*)/2 - (|v - v_*|/2) sigma`.
pub fn post_collision(v: [f64; 3], v_star: [f64; 3], sigma: [f64; 3]) -> Result<CollisionPair> {
    let len = norm(&sigma);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "sigma must be a unit vector, |sigma| = {len}"
        )));
    }
    let half_rel = 0.5 * norm(&sub(&v, &v_star));
    let mid = [
        0.5 * (v[0] + v_star[0]),
        0.5 * (v[1] + v_star[1]),
        0.5 * (v[2] + v_star[2]),
    ];
    Ok(CollisionPair {
        v,
        v_star,
        v_prime: [
            mid[0] + half_rel * sigma[0],
            mid[1] + half_rel * sigma[1],
            mid[2] + half_rel * sigma[2],
        ],
        v_star_prime: [
            mid[0] - half_rel * sigma[0],
            mid[1] - half_rel * sigma[1],
            mid[2] - half_rel * sigma[2],
        ],
    })
}

/// Squared collisional defect `[h(v) + h(v_*) - h(v') - h(v'_*)]^2`.
pub fn k_defect(h: &TestFunction, pair: &CollisionPair) -> f64 {
    let d = h.value(&pair.v) + h.value(&pair.v_star)
        - h.value(&pair.v_prime)
        - h.value(&pair.v_star_prime);
    d * d
}

/// Orthogonal projection of `u` onto the plane orthogonal to `z`.
pub fn projection_transverse(z: &[f64; 3], u: &[f64; 3]) -> Result<[f64; 3]> {
    let z2 = dot(z, z);
    if z2 == 0.0 {
        return Err(Error::Domain(
            "projection onto z-perp undefined for z = 0".into(),
        ));
    }
    let s = dot(u, z) / z2;
    Ok([u[0] - s * z[0], u[1] - s * z[1], u[2] - s * z[2]])
}

/// Deterministic parallel reduction over outer velocity nodes: fixed chunks,
/// partials combined in chunk order.
fn pair_sum<F>(n_outer: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    const CHUNK: usize = 8;
    let nchunks = n_outer.div_ceil(CHUNK);
    let partials: Result<Vec<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_outer) {
                acc += f(i)?;
            }
            Ok(acc)
        })
        .collect();
    Ok(partials?.iter().sum())
}

#[inline]
fn weight_m(v: &[f64; 3]) -> f64 {
    (-dot(v, v)).exp()
}

/// Builds a right-handed orthonormal frame `(e1, e2)` for the plane
/// orthogonal to the unit vector `k`.
fn transverse_frame(k: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if k[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let mut e1 = [
        k[1] * a[2] - k[2] * a[1],
        k[2] * a[0] - k[0] * a[2],
        k[0] * a[1] - k[1] * a[0],
    ];
    let n1 = norm(&e1);
    for x in &mut e1 {
        *x /= n1;
    }
    let e2 = [
        k[1] * e1[2] - k[2] * e1[1],
        k[2] * e1[0] - k[0] * e1[2],
        k[0] * e1[1] - k[1] * e1[0],
    ];
    (e1, e2)
}

/// Boltzmann entropy dissipation functional in sigma-representation:
/// `D(h) = (1/4) int int int Phi(|v - v_*|) b(theta) M M_* k dsigma dv_* dv`.
///
/// The velocity grids carry the Gaussian weight, so the quadrature sum only
/// sees `Phi * b * k` and the cross-weight `e^{-|v_*|^2}` folded into the
/// rule weights.
pub fn d_boltzmann(
    h: &TestFunction,
    phi: &KineticKernel,
    b: &AngularKernel,
    velocity_grid: &QuadratureGrid,
    sphere: &QuadratureGrid,
) -> Result<IntegralEstimate> {
    let dim = h.dim();
    if sphere.dim != dim {
        return Err(Error::Config(format!(
            "sphere grid dimension {} does not match test function dimension {dim}",
            sphere.dim
        )));
    }
    let nodes = &velocity_grid.nodes;
    let weights = &velocity_grid.weights;
    let value = pair_sum(nodes.len(), |i| {
        let v = nodes[i];
        let hv = h.value(&v);
        let mut acc = 0.0;
        for (vs, ws) in nodes.iter().zip(weights) {
            let z = sub(&v, vs);
            let rel = norm(&z);
            if rel < DIAGONAL_CUTOFF {
                continue;
            }
            let phi_val = phi.eval(rel)?;
            if phi_val == 0.0 {
                continue;
            }
            let k_hat = [z[0] / rel, z[1] / rel, z[2] / rel];
            let hvs = h.value(vs);
            let mid = [
                0.5 * (v[0] + vs[0]),
                0.5 * (v[1] + vs[1]),
                0.5 * (v[2] + vs[2]),
            ];
            let half_rel = 0.5 * rel;
            let mut sig_acc = 0.0;
            for (sig, wsig) in sphere.nodes.iter().zip(&sphere.weights) {
                let cos_t = dot(&k_hat, sig).clamp(-1.0, 1.0);
                let bval = b.eval(cos_t.acos(), dim)?;
                if bval == 0.0 {
                    continue;
                }
                let vp = [
                    mid[0] + half_rel * sig[0],
                    mid[1] + half_rel * sig[1],
                    mid[2] + half_rel * sig[2],
                ];
                let vsp = [
                    mid[0] - half_rel * sig[0],
                    mid[1] - half_rel * sig[1],
                    mid[2] - half_rel * sig[2],
                ];
                let d = hv + hvs - h.value(&vp) - h.value(&vsp);
                sig_acc += wsig * bval * d * d;
            }
            acc += ws * phi_val * sig_acc;
        }
        Ok(weights[i] * acc)
    })?;
    Ok(IntegralEstimate {
        value: 0.25 * value,
        error_estimate: 0.0,
    })
}

/// The same functional in omega-representation (dimension 3 only), with the
/// transformed angular kernel `b~(theta) = 2^{N-1} sin^{N-2}(theta/2) b(theta)`
/// and the orthogonal splitting `v = r1 w + V1`, `v_* = r2 w + V2`.
///
/// `omega` and `-omega` parametrize the same collision, so the full-sphere
/// integral carries an extra 1/2.
///
/// Used to validate representation changes against `d_boltzmann`.
pub fn d_boltzmann_omega(
    h: &TestFunction,
    phi: &KineticKernel,
    b: &AngularKernel,
    omega_sphere: &QuadratureGrid,
    line_grid: &QuadratureGrid,
    plane_grid: &QuadratureGrid,
) -> Result<IntegralEstimate> {
    let dim = h.dim();
    if dim != 3 {
        return Err(Error::Domain(
            "omega-representation implemented for dimension 3".into(),
        ));
    }
    if line_grid.dim != 1 || plane_grid.dim != 2 {
        return Err(Error::Config(
            "omega-representation needs a 1D line grid and a 2D plane grid".into(),
        ));
    }
    let value = pair_sum(omega_sphere.nodes.len(), |iw| {
        let w_axis = omega_sphere.nodes[iw];
        let (e1, e2) = transverse_frame(&w_axis);
        let embed = |r: f64, a: f64, bb: f64| -> [f64; 3] {
            [
                r * w_axis[0] + a * e1[0] + bb * e2[0],
                r * w_axis[1] + a * e1[1] + bb * e2[1],
                r * w_axis[2] + a * e1[2] + bb * e2[2],
            ]
        };
        let mut acc = 0.0;
        for (p1, wp1) in plane_grid.nodes.iter().zip(&plane_grid.weights) {
            for (p2, wp2) in plane_grid.nodes.iter().zip(&plane_grid.weights) {
                let dv = (p1[0] - p2[0]).hypot(p1[1] - p2[1]);
                for (r1n, wr1) in line_grid.nodes.iter().zip(&line_grid.weights) {
                    let r1 = r1n[0];
                    for (r2n, wr2) in line_grid.nodes.iter().zip(&line_grid.weights) {
                        let r2 = r2n[0];
                        let dr = (r2 - r1).abs();
                        let rel2 = dr * dr + dv * dv;
                        if rel2 < DIAGONAL_CUTOFF * DIAGONAL_CUTOFF {
                            continue;
                        }
                        let phi_val = phi.eval(rel2.sqrt())?;
                        if phi_val == 0.0 {
                            continue;
                        }
                        // cos theta = (|V1-V2|^2 - |r1-r2|^2) / (|V1-V2|^2 + |r1-r2|^2)
                        let cos_t = ((dv * dv - dr * dr) / rel2).clamp(-1.0, 1.0);
                        let btilde = b.eval_tilde(cos_t.acos(), 3)?;
                        if btilde == 0.0 {
                            continue;
                        }
                        let va = embed(r1, p1[0], p1[1]);
                        let vb = embed(r2, p2[0], p2[1]);
                        let vc = embed(r2, p1[0], p1[1]);
                        let vd = embed(r1, p2[0], p2[1]);
                        let d = h.value(&va) + h.value(&vb) - h.value(&vc) - h.value(&vd);
                        acc += wp1 * wp2 * wr1 * wr2 * phi_val * btilde * d * d;
                    }
                }
            }
        }
        Ok(omega_sphere.weights[iw] * acc)
    })?;
    Ok(IntegralEstimate {
        value: 0.125 * value,
        error_estimate: 0.0,
    })
}

/// Landau entropy dissipation functional
/// `D(h) = (1/2) int int Phi |z|^2 || Pi_{z-perp} [grad h - (grad h)_*] ||^2 M M_*`.
pub fn d_landau(
    h: &TestFunction,
    phi: &KineticKernel,
    velocity_grid: &QuadratureGrid,
) -> Result<IntegralEstimate> {
    let nodes = &velocity_grid.nodes;
    let weights = &velocity_grid.weights;
    // gradients are reused across the pair loop
    let grads: Vec<[f64; 3]> = nodes.iter().map(|v| h.gradient(v)).collect();
    for (i, g) in grads.iter().enumerate() {
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::Quadrature(format!(
                "gradient non-finite at node {} = {:?}",
                i, nodes[i]
            )));
        }
    }
    let value = pair_sum(nodes.len(), |i| {
        let v = nodes[i];
        let gi = grads[i];
        let mut acc = 0.0;
        for j in 0..nodes.len() {
            let z = sub(&v, &nodes[j]);
            let rel = norm(&z);
            if rel < DIAGONAL_CUTOFF {
                continue;
            }
            let phi_val = phi.eval(rel)?;
            if phi_val == 0.0 {
                continue;
            }
            let gj = grads[j];
            let du = [gi[0] - gj[0], gi[1] - gj[1], gi[2] - gj[2]];
            let s = dot(&du, &z) / (rel * rel);
            let proj = [du[0] - s * z[0], du[1] - s * z[1], du[2] - s * z[2]];
            acc += weights[j] * phi_val * rel * rel * dot(&proj, &proj);
        }
        Ok(weights[i] * acc)
    })?;
    Ok(IntegralEstimate {
        value: 0.5 * value,
        error_estimate: 0.0,
    })
}

/// Boltzmann functional for the grazing family `b_eps`, with a dedicated
/// polar rule on the kernel support `[0, eps * pi / 2]` composed with a
/// uniform azimuthal rule; the generic sphere grid cannot resolve `b_eps`.
pub fn d_boltzmann_grazing(
    h: &TestFunction,
    phi: &KineticKernel,
    mollifier: &Mollifier,
    eps: f64,
    velocity_grid: &QuadratureGrid,
    theta_order: usize,
    azimuth_count: usize,
) -> Result<IntegralEstimate> {
    let dim = h.dim();
    if dim != 3 {
        return Err(Error::Domain("grazing evaluation implemented for dimension 3".into()));
    }
    if theta_order < 32 {
        return Err(Error::Resolution(format!(
            "polar rule order {theta_order} too coarse for b_eps; use a dedicated \
             Gauss rule of order >= 32 on [0, eps*pi/2]"
        )));
    }
    if eps <= 0.0 {
        return Err(Error::Domain("grazing eps must be positive".into()));
    }
    let b = AngularKernel::grazing(mollifier.clone(), eps);
    let (theta_nodes, theta_weights) =
        gauss_legendre_on(0.0, eps * std::f64::consts::FRAC_PI_2, theta_order)?;
    // fold b_eps(theta) sin(theta) into the polar weights
    let mut polar: Vec<(f64, f64, f64)> = Vec::with_capacity(theta_order); // (cos, sin, weight)
    for (&t, &wt) in theta_nodes.iter().zip(&theta_weights) {
        let bval = b.eval(t, 3)?;
        polar.push((t.cos(), t.sin(), wt * bval * t.sin()));
    }
    let wphi = 2.0 * std::f64::consts::PI / azimuth_count as f64;
    let azimuth: Vec<(f64, f64)> = (0..azimuth_count)
        .map(|k| {
            let p = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / azimuth_count as f64;
            (p.cos(), p.sin())
        })
        .collect();

    let nodes = &velocity_grid.nodes;
    let weights = &velocity_grid.weights;
    let value = pair_sum(nodes.len(), |i| {
        let v = nodes[i];
        let hv = h.value(&v);
        let mut acc = 0.0;
        for (vs, ws) in nodes.iter().zip(weights) {
            let z = sub(&v, vs);
            let rel = norm(&z);
            if rel < DIAGONAL_CUTOFF {
                continue;
            }
            let phi_val = phi.eval(rel)?;
            if phi_val == 0.0 {
                continue;
            }
            let k_hat = [z[0] / rel, z[1] / rel, z[2] / rel];
            let (e1, e2) = transverse_frame(&k_hat);
            let hvs = h.value(vs);
            let mid = [
                0.5 * (v[0] + vs[0]),
                0.5 * (v[1] + vs[1]),
                0.5 * (v[2] + vs[2]),
            ];
            let half_rel = 0.5 * rel;
            let mut sig_acc = 0.0;
            for &(ct, st, wt) in &polar {
                let mut phi_acc = 0.0;
                for &(cp, sp) in &azimuth {
                    let sig = [
                        ct * k_hat[0] + st * (cp * e1[0] + sp * e2[0]),
                        ct * k_hat[1] + st * (cp * e1[1] + sp * e2[1]),
                        ct * k_hat[2] + st * (cp * e1[2] + sp * e2[2]),
                    ];
                    let vp = [
                        mid[0] + half_rel * sig[0],
                        mid[1] + half_rel * sig[1],
                        mid[2] + half_rel * sig[2],
                    ];
                    let vsp = [
                        mid[0] - half_rel * sig[0],
                        mid[1] - half_rel * sig[1],
                        mid[2] - half_rel * sig[2],
                    ];
                    let d = hv + hvs - h.value(&vp) - h.value(&vsp);
                    phi_acc += d * d;
                }
                sig_acc += wt * wphi * phi_acc;
            }
            acc += ws * phi_val * sig_acc;
        }
        Ok(weights[i] * acc)
    })?;
    Ok(IntegralEstimate {
        value: 0.25 * value,
        error_estimate: 0.0,
    })
}

/// One row of a grazing sweep.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrazingRow {
    pub eps: f64,
    pub d_boltzmann: f64,
    pub c_times_d_landau: f64,
    pub rel_error: f64,
}

/// Result of a grazing-limit sweep: `D^Bo_{b_eps, Phi}(h)` against
/// `c_{N,j} D^La_Phi(h)` over a decreasing list of `eps`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GrazingSweep {
    pub rows: Vec<GrazingRow>,
    /// Least-squares slope of `log(rel_error)` vs `log(eps)`; 0 when the
    /// errors vanish identically.
    pub fitted_order: f64,
}

impl GrazingSweep {
    /// CSV with the mandatory header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,d_boltzmann,c_times_d_landau,rel_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.eps, r.d_boltzmann, r.c_times_d_landau, r.rel_error
            ));
        }
        out
    }
}

/// Sweeps the grazing limit: for each `eps`, compares the Boltzmann
/// dissipation with kernel `Phi * b_eps` against `c_{N,j}` times the Landau
/// dissipation with kernel `Phi`.
pub fn grazing_sweep(
    h: &TestFunction,
    phi: &KineticKernel,
    mollifier: &Mollifier,
    eps_list: &[f64],
    velocity_grid: &QuadratureGrid,
    theta_order: usize,
) -> Result<GrazingSweep> {
    if eps_list.is_empty() || eps_list.iter().any(|&e| e <= 0.0) {
        return Err(Error::Config("eps list must be positive".into()));
    }
    if !eps_list.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::Config("eps list must be strictly decreasing".into()));
    }
    let c = c_nj(mollifier, 3);
    let landau = d_landau(h, phi, velocity_grid)?.value;
    let target = c * landau;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let bo = d_boltzmann_grazing(h, phi, mollifier, eps, velocity_grid, theta_order, 16)?;
        let rel_error = if target.abs() > 1e-14 {
            (bo.value - target).abs() / target.abs()
        } else {
            0.0
        };
        rows.push(GrazingRow {
            eps,
            d_boltzmann: bo.value,
            c_times_d_landau: target,
            rel_error,
        });
    }
    let fitted_order = fit_order(&rows);
    Ok(GrazingSweep { rows, fitted_order })
}

fn fit_order(rows: &[GrazingRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rel_error > 0.0)
        .map(|r| (r.eps.ln(), r.rel_error.ln()))
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

/// `int h^2 M dv` under the raw weight `M = e^{-|v|^2}` (folded into the grid).
pub fn norm_sq(h: &TestFunction, velocity_grid: &QuadratureGrid) -> Result<f64> {
    let nodes = &velocity_grid.nodes;
    pair_sum(nodes.len(), |i| {
        let x = h.value(&nodes[i]);
        Ok(velocity_grid.weights[i] * x * x)
    })
}

/// Velocity grid with the cross-weight `e^{-|v|^2}` of the *other* particle
/// folded in: Gauss-Hermite rules already integrate against `e^{-|v|^2}`,
/// so pair integrals `int int ... M M_*` need no extra factor. This helper
/// exists for Monte Carlo style grids where the weight is explicit.
pub fn fold_gaussian_weight(grid: &mut QuadratureGrid) {
    for (n, w) in grid.nodes.iter().zip(grid.weights.iter_mut()) {
        *w *= weight_m(n);
    }
}
