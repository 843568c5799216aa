//! Node/weight rules for the integrals used here: Gaussian-weighted
//! velocity space (weight `e^{-|v|^2}` baked into the rule), spheres `S^{N-1}`,
//! and a seeded Monte Carlo fallback with standard-error estimates.
//!
//! All estimates are deterministic: fixed reduction order, and Monte Carlo is
//! chunked with per-chunk counter-based seeding so the result is independent
//! of thread count.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum per-axis order for the Gauss rules.
pub const MAX_GAUSS_ORDER: usize = 192;

/// Fixed Monte Carlo chunk size; partial moments are combined in chunk order
/// so the reduction does not depend on the number of worker threads.
const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    GaussHermiteTensor,
    SphereProduct,
    MonteCarlo,
}

/// A quadrature grid over `R^N` (Gaussian weight) or `S^{N-1}`.
///
/// Nodes are stored as `[f64; 3]` with unused trailing coordinates zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub kind: GridKind,
    pub dim: usize,
    pub order: usize,
}

/// Value of an integral together with a non-negative error estimate
/// (rule comparison for Gauss rules, standard error for Monte Carlo).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// Nodes and weights of the Gauss rule associated with a symmetric Jacobi
/// matrix (Golub-Welsch). `offdiag[k]` is the recurrence coefficient
/// `beta_{k+1}`, `mu0` the total mass of the weight.
fn golub_welsch(offdiag: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = offdiag.len() + 1;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for (k, &b) in offdiag.iter().enumerate() {
        jacobi[(k, k + 1)] = b;
        jacobi[(k + 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let first = eig.eigenvectors[(0, i)];
            (node, mu0 * first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// 1D Gauss-Hermite rule for the weight `e^{-x^2}` on the real line.
pub fn gauss_hermite_1d(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > MAX_GAUSS_ORDER {
        return Err(Error::Quadrature(format!(
            "Gauss-Hermite order must be in 1..={MAX_GAUSS_ORDER}, got {order}"
        )));
    }
    let offdiag: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let (mut nodes, weights) = golub_welsch(&offdiag, std::f64::consts::PI.sqrt());
    // symmetrize: the rule is even, kill the fp asymmetry of the eigensolve
    let n = nodes.len();
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -s;
        nodes[n - 1 - i] = s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// 1D Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_1d(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > MAX_GAUSS_ORDER {
        return Err(Error::Quadrature(format!(
            "Gauss-Legendre order must be in 1..={MAX_GAUSS_ORDER}, got {order}"
        )));
    }
    let offdiag: Vec<f64> = (1..order)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    Ok(golub_welsch(&offdiag, 2.0))
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nodes, weights) = gauss_legendre_1d(order)?;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Ok((
        nodes.iter().map(|&x| mid + half * x).collect(),
        weights.iter().map(|&w| half * w).collect(),
    ))
}

/// Tensor Gauss-Hermite rule on `R^N` for the weight `e^{-|v|^2}`, exact for
/// polynomials of per-axis degree `<= 2*order - 1`.
pub fn gauss_hermite_grid(order: usize, dim: usize) -> Result<QuadratureGrid> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Quadrature(format!(
            "Gauss-Hermite tensor grid supports dim 1..=3, got {dim}"
        )));
    }
    let (x, w) = gauss_hermite_1d(order)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            for i in 0..order {
                nodes.push([x[i], 0.0, 0.0]);
                weights.push(w[i]);
            }
        }
        2 => {
            for i in 0..order {
                for j in 0..order {
                    nodes.push([x[i], x[j], 0.0]);
                    weights.push(w[i] * w[j]);
                }
            }
        }
        _ => {
            for i in 0..order {
                for j in 0..order {
                    for k in 0..order {
                        nodes.push([x[i], x[j], x[k]]);
                        weights.push(w[i] * w[j] * w[k]);
                    }
                }
            }
        }
    }
    Ok(QuadratureGrid {
        nodes,
        weights,
        kind: GridKind::GaussHermiteTensor,
        dim,
        order,
    })
}

/// Quadrature rule on the unit sphere `S^{N-1}`.
///
/// For `N = 3` this is a product of Gauss-Legendre in `cos(theta)` with
/// `2*order` uniform azimuthal angles, exact for spherical harmonics up to
/// degree `2*order - 1`. For `N = 2` it is `2*order` uniform angles.
pub fn sphere_grid(dim: usize, order: usize) -> Result<QuadratureGrid> {
    match dim {
        2 => {
            let m = 2 * order;
            let w = std::f64::consts::PI / order as f64;
            let mut nodes = Vec::with_capacity(m);
            for k in 0..m {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                nodes.push([phi.cos(), phi.sin(), 0.0]);
            }
            Ok(QuadratureGrid {
                weights: vec![w; m],
                nodes,
                kind: GridKind::SphereProduct,
                dim,
                order,
            })
        }
        3 => {
            let (ct, wt) = gauss_legendre_1d(order)?;
            let m = 2 * order;
            let wphi = std::f64::consts::PI / order as f64;
            let mut nodes = Vec::with_capacity(order * m);
            let mut weights = Vec::with_capacity(order * m);
            for i in 0..order {
                let cos_t = ct[i];
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                for k in 0..m {
                    let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                    nodes.push([sin_t * phi.cos(), sin_t * phi.sin(), cos_t]);
                    weights.push(wt[i] * wphi);
                }
            }
            Ok(QuadratureGrid {
                nodes,
                weights,
                kind: GridKind::SphereProduct,
                dim,
                order,
            })
        }
        _ => Err(Error::Quadrature(format!(
            "sphere grid supports dim 2 or 3, got {dim}"
        ))),
    }
}

/// Deterministic chunked sum: fixed chunk boundaries, sequential combination.
fn chunked_sum<F>(n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let nchunks = n.div_ceil(chunk);
    let partials: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|c| f(c * chunk, (c * chunk + chunk).min(n)))
        .collect();
    partials.iter().sum()
}

/// Applies a grid to an integrand: `sum_i w_i f(node_i)`.
///
/// Fails naming the offending node if `f` is non-finite there. The error
/// estimate is 0; compare against a different-order rule for a budget.
pub fn integrate<F>(grid: &QuadratureGrid, f: F) -> Result<IntegralEstimate>
where
    F: Fn(&[f64; 3]) -> f64 + Sync,
{
    let n = grid.nodes.len();
    let bad = std::sync::Mutex::new(None::<usize>);
    let value = chunked_sum(n, 1024, |lo, hi| {
        let mut acc = 0.0;
        for i in lo..hi {
            let y = f(&grid.nodes[i]);
            if !y.is_finite() {
                *bad.lock().unwrap() = Some(i);
                return f64::NAN;
            }
            acc += grid.weights[i] * y;
        }
        acc
    });
    if let Some(i) = *bad.lock().unwrap() {
        return Err(Error::Quadrature(format!(
            "integrand non-finite at node {} = {:?}",
            i, grid.nodes[i]
        )));
    }
    Ok(IntegralEstimate {
        value,
        error_estimate: 0.0,
    })
}

/// Same integral on two rules of different order; the value is taken from
/// `fine` and the error estimate is the rule difference.
pub fn integrate_embedded<F>(
    fine: &QuadratureGrid,
    coarse: &QuadratureGrid,
    f: F,
) -> Result<IntegralEstimate>
where
    F: Fn(&[f64; 3]) -> f64 + Sync,
{
    let hi = integrate(fine, &f)?;
    let lo = integrate(coarse, &f)?;
    Ok(IntegralEstimate {
        value: hi.value,
        error_estimate: (hi.value - lo.value).abs(),
    })
}

/// Monte Carlo estimate of `int f(v) e^{-|v|^2} dv` over `R^N`.
///
/// Samples are Gaussian with variance 1/2 per axis; the estimate is
/// `pi^{N/2} * mean(f)` with standard error `pi^{N/2} * stdev / sqrt(n)`.
/// Identical `(seed, samples)` give bit-identical results at any thread count.
pub fn monte_carlo_integrate<F>(
    dim: usize,
    f: F,
    samples: usize,
    seed: u64,
) -> Result<IntegralEstimate>
where
    F: Fn(&[f64; 3]) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::Quadrature("need at least 2 samples".into()));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::Quadrature(format!("unsupported dimension {dim}")));
    }
    let nchunks = samples.div_ceil(MC_CHUNK);
    let sigma = 0.5_f64.sqrt();
    let partials: Result<Vec<(f64, f64)>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(samples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(c as u64 + 1)));
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in lo..hi {
                let mut v = [0.0_f64; 3];
                for x in v.iter_mut().take(dim) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x = sigma * z;
                }
                let y = f(&v);
                if !y.is_finite() {
                    return Err(Error::Quadrature(format!(
                        "Monte Carlo sample non-finite at v = {v:?}"
                    )));
                }
                sum += y;
                sumsq += y * y;
            }
            Ok((sum, sumsq))
        })
        .collect();
    let partials = partials?;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for (s, q) in partials {
        sum += s;
        sumsq += q;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    let mass = std::f64::consts::PI.powf(dim as f64 / 2.0);
    Ok(IntegralEstimate {
        value: mass * mean,
        error_estimate: mass * (var / n).sqrt(),
    })
}
