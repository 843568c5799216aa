//! Galerkin discretization of the dissipation functionals over the Sonine x
//! harmonic basis, spectral gaps of the resulting matrix pencils, and the
//! closed-form Maxwellian eigenvalues used as anchors.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisIndex, Normalization, SphereHarmonics};
use crate::error::{Error, Result};
use crate::kernels::{AngularKernel, KineticKernel};
use crate::quadrature::{gauss_hermite_grid, gauss_legendre_on, sphere_grid};

/// Dense symmetric matrix in a serialization-friendly layout (row major).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixData {
    pub n: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        MatrixData { n, data }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.data[i * self.n + j])
    }
}

/// Assembled Galerkin pencil `(A, G)` for one dissipation functional:
/// `A_ij = D(phi_i, phi_j)`, `G_ij = <phi_i, phi_j>_{L^2(M)}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalerkinSystem {
    pub dim: usize,
    pub max_degree: usize,
    pub normalization: Normalization,
    pub indices: Vec<BasisIndex>,
    pub a: MatrixData,
    pub gram: MatrixData,
}

impl GalerkinSystem {
    pub fn a_matrix(&self) -> DMatrix<f64> {
        self.a.to_dmatrix()
    }

    pub fn gram_matrix(&self) -> DMatrix<f64> {
        self.gram.to_dmatrix()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Rayleigh quotient `c^T A c / c^T G c`.
    pub fn rayleigh(&self, coefficients: &[f64]) -> Result<f64> {
        if coefficients.len() != self.indices.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                self.indices.len(),
                coefficients.len()
            )));
        }
        let c = DMatrix::from_column_slice(coefficients.len(), 1, coefficients);
        let num = (c.transpose() * self.a_matrix() * &c)[(0, 0)];
        let den = (c.transpose() * self.gram_matrix() * &c)[(0, 0)];
        if den <= 0.0 {
            return Err(Error::Domain("Rayleigh quotient of a null vector".into()));
        }
        Ok(num / den)
    }

    /// Quadratic form `c^T A c`.
    pub fn quadratic_form(&self, coefficients: &[f64]) -> Result<f64> {
        if coefficients.len() != self.indices.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                self.indices.len(),
                coefficients.len()
            )));
        }
        let c = DMatrix::from_column_slice(coefficients.len(), 1, coefficients);
        Ok((c.transpose() * self.a_matrix() * &c)[(0, 0)])
    }
}

/// Quadrature resolutions of the matrix assembly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Gauss-Hermite order of the center-of-mass integral.
    pub omega_order: usize,
    /// Gauss-Legendre order of the radial integral.
    pub radial_order: usize,
    /// Radial cutoff; the weight `e^{-2r^2}` is below 3e-18 at 4.5.
    pub radial_cutoff: f64,
    /// Sphere rule order of the harmonic transform.
    pub sphere_order: usize,
    /// Order of the 1D rule computing angular transform coefficients.
    pub transform_order: usize,
}

impl AssemblyOptions {
    /// Resolutions that integrate a degree-`max_degree` basis exactly in the
    /// polynomial directions.
    pub fn for_degree(max_degree: usize) -> Self {
        AssemblyOptions {
            omega_order: max_degree + 1,
            radial_order: 24,
            radial_cutoff: 4.5,
            sphere_order: max_degree + 1,
            transform_order: 64,
        }
    }

    /// Uniformly refined resolutions, for error-budget comparisons.
    pub fn refined(&self) -> Self {
        AssemblyOptions {
            omega_order: self.omega_order + 2,
            radial_order: self.radial_order + 8,
            radial_cutoff: self.radial_cutoff + 0.5,
            sphere_order: self.sphere_order + 2,
            transform_order: self.transform_order + 32,
        }
    }
}

fn legendre_all(x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = ((2.0 * lf - 1.0) * x * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
    }
}

fn angular_rule(b: &AngularKernel, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match b {
        AngularKernel::Grazing { eps, .. } => {
            gauss_legendre_on(0.0, eps * std::f64::consts::FRAC_PI_2, order.max(32))
        }
        _ => gauss_legendre_on(0.0, std::f64::consts::PI, order),
    }
}

/// Angular transform coefficients of `b` on `S^{N-1}`:
/// `beta_l = |S^{N-2}| int_0^pi b(theta) P_l(cos theta) sin^{N-2}(theta) dtheta`
/// for `N = 3` (Legendre), and the cosine coefficients
/// `beta_l = 2 int_0^pi b(theta) cos(l theta) dtheta` for `N = 2`.
pub fn funk_hecke_coeffs(
    b: &AngularKernel,
    dim: usize,
    lmax: usize,
    order: usize,
) -> Result<Vec<f64>> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Domain(format!(
            "angular transform supports dim 2 or 3, got {dim}"
        )));
    }
    let (nodes, weights) = angular_rule(b, order)?;
    let mut beta = vec![0.0; lmax + 1];
    let mut p = vec![0.0; lmax + 1];
    for (&t, &w) in nodes.iter().zip(&weights) {
        let bval = b.eval(t, dim)?;
        if bval == 0.0 {
            continue;
        }
        match dim {
            3 => {
                legendre_all(t.cos(), &mut p);
                let c = 2.0 * std::f64::consts::PI * w * bval * t.sin();
                for (bl, pl) in beta.iter_mut().zip(&p) {
                    *bl += c * pl;
                }
            }
            _ => {
                let c = 2.0 * w * bval;
                for (l, bl) in beta.iter_mut().enumerate() {
                    *bl += c * (l as f64 * t).cos();
                }
            }
        }
    }
    Ok(beta)
}

/// Squared factor converting the raw product measure `M M_*` to the
/// convention of `normalization`.
fn pair_measure_factor(normalization: Normalization, dim: usize) -> f64 {
    let r = normalization.mass(dim) / Normalization::PaperRaw.mass(dim);
    r * r
}

/// Gram matrix of the basis under its own normalization.
fn gram_matrix(basis: &Basis) -> Result<DMatrix<f64>> {
    let nb = basis.len();
    let grid = gauss_hermite_grid(basis.max_degree + 1, basis.dim)?;
    let ratio = basis.normalization.mass(basis.dim) / Normalization::PaperRaw.mass(basis.dim);
    let mut e = DMatrix::zeros(nb, grid.nodes.len());
    let mut buf = vec![0.0; nb];
    for (s, node) in grid.nodes.iter().enumerate() {
        basis.eval_all(node, &mut buf);
        let w = (grid.weights[s] * ratio).sqrt();
        for i in 0..nb {
            e[(i, s)] = buf[i] * w;
        }
    }
    Ok(&e * e.transpose())
}

/// Assembles the Boltzmann Galerkin matrix through the center-of-mass
/// representation `v = W + r s2`, `v_* = W - r s2`, `v' = W + r s1`,
/// `v'_* = W - r s1`:
///
/// `A_ij = (2^N / 4) int dW e^{-2|W|^2} int dr r^{N-1} Phi(2r) e^{-2r^2}
///         [ 2 sum_{l,m} (beta_0 - beta_l) g_i[l,m] g_j[l,m] ]`
///
/// where `g_i(s) = phi_i(W + r s) + phi_i(W - r s)` and `g_i[l,m]` are its
/// harmonic coefficients. The double sphere integral against `b(s1 . s2)`
/// collapses onto the harmonic diagonal, which is what makes degree-8
/// truncations affordable.
pub fn assemble_boltzmann(
    basis: &Basis,
    phi: &KineticKernel,
    b: &AngularKernel,
    opts: &AssemblyOptions,
) -> Result<GalerkinSystem> {
    let dim = basis.dim;
    let nb = basis.len();
    let lmax = basis.max_degree;
    let beta = funk_hecke_coeffs(b, dim, lmax, opts.transform_order)?;

    // g_i is even in s, so odd-l harmonics drop out
    let sh = SphereHarmonics::new(dim, lmax)?;
    let harmonics: Vec<(usize, &crate::basis::Poly)> = sh
        .items
        .iter()
        .filter(|(l, _, _)| l % 2 == 0)
        .map(|(l, _, p)| (*l, p))
        .collect();
    let nq = harmonics.len();

    let sphere = sphere_grid(dim, opts.sphere_order)?;
    let ns = sphere.nodes.len();
    let mut yw = DMatrix::zeros(ns, nq);
    for (s, node) in sphere.nodes.iter().enumerate() {
        for (q, (_, p)) in harmonics.iter().enumerate() {
            yw[(s, q)] = sphere.weights[s] * p.eval(node);
        }
    }
    // fold the spectral multiplier into the per-harmonic coefficient
    let coeff: Vec<f64> = harmonics
        .iter()
        .map(|(l, _)| 2.0 * (beta[0] - beta[*l]))
        .collect();

    // int e^{-2|W|^2} F(W) dW = 2^{-N/2} sum w_k F(x_k / sqrt 2)
    let gh = gauss_hermite_grid(opts.omega_order, dim)?;
    let scale = 2f64.powf(-(dim as f64) / 2.0);
    let omega_nodes: Vec<[f64; 3]> = gh
        .nodes
        .iter()
        .map(|n| {
            [
                n[0] / std::f64::consts::SQRT_2,
                n[1] / std::f64::consts::SQRT_2,
                n[2] / std::f64::consts::SQRT_2,
            ]
        })
        .collect();
    let omega_weights: Vec<f64> = gh.weights.iter().map(|w| w * scale).collect();

    let (r_nodes, r_gl_weights) = gauss_legendre_on(0.0, opts.radial_cutoff, opts.radial_order)?;
    let mut r_weights = Vec::with_capacity(r_nodes.len());
    for (&r, &w) in r_nodes.iter().zip(&r_gl_weights) {
        r_weights.push(w * r.powi(dim as i32 - 1) * (-2.0 * r * r).exp() * phi.eval(2.0 * r)?);
    }

    let global = 2f64.powi(dim as i32) / 4.0 * pair_measure_factor(basis.normalization, dim);

    const CHUNK: usize = 4;
    let nchunks = omega_nodes.len().div_ceil(CHUNK);
    let partials: Vec<DMatrix<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut a_local = DMatrix::zeros(nb, nb);
            let mut e_mat = DMatrix::zeros(nb, ns);
            let mut bp = vec![0.0; nb];
            let mut bm = vec![0.0; nb];
            for k in c * CHUNK..((c + 1) * CHUNK).min(omega_nodes.len()) {
                let w_node = omega_nodes[k];
                for (ir, &r) in r_nodes.iter().enumerate() {
                    let wtot = global * omega_weights[k] * r_weights[ir];
                    if wtot == 0.0 {
                        continue;
                    }
                    for (s, sig) in sphere.nodes.iter().enumerate() {
                        let p = [
                            w_node[0] + r * sig[0],
                            w_node[1] + r * sig[1],
                            w_node[2] + r * sig[2],
                        ];
                        let m = [
                            w_node[0] - r * sig[0],
                            w_node[1] - r * sig[1],
                            w_node[2] - r * sig[2],
                        ];
                        basis.eval_all(&p, &mut bp);
                        basis.eval_all(&m, &mut bm);
                        for i in 0..nb {
                            e_mat[(i, s)] = bp[i] + bm[i];
                        }
                    }
                    let g_hat = &e_mat * &yw;
                    let mut scaled = g_hat.clone();
                    for (q, &cq) in coeff.iter().enumerate() {
                        let f = wtot * cq;
                        for i in 0..nb {
                            scaled[(i, q)] *= f;
                        }
                    }
                    a_local.gemm(1.0, &scaled, &g_hat.transpose(), 1.0);
                }
            }
            a_local
        })
        .collect();
    let mut a = DMatrix::zeros(nb, nb);
    for p in partials {
        a += p;
    }
    let a = (&a + a.transpose()) * 0.5;

    Ok(GalerkinSystem {
        dim,
        max_degree: basis.max_degree,
        normalization: basis.normalization,
        indices: basis.functions.iter().map(|f| f.index).collect(),
        a: MatrixData::from_dmatrix(&a),
        gram: MatrixData::from_dmatrix(&gram_matrix(basis)?),
    })
}

/// Reference Boltzmann assembly by direct quadrature of the bilinear defect
/// `A_ij = (1/4) sum_{v, v_*, sigma} Phi b d_i d_j M M_*`. Quadratically
/// slower than [`assemble_boltzmann`]; used to cross-check it at small
/// truncations.
pub fn assemble_boltzmann_direct(
    basis: &Basis,
    phi: &KineticKernel,
    b: &AngularKernel,
    velocity_order: usize,
    sphere_order: usize,
) -> Result<GalerkinSystem> {
    let dim = basis.dim;
    let nb = basis.len();
    let vgrid = gauss_hermite_grid(velocity_order, dim)?;
    let sphere = sphere_grid(dim, sphere_order)?;
    let nodes = &vgrid.nodes;
    // basis values at grid nodes, reused across the pair loop
    let node_vals: Vec<Vec<f64>> = nodes
        .iter()
        .map(|v| {
            let mut buf = vec![0.0; nb];
            basis.eval_all(v, &mut buf);
            buf
        })
        .collect();
    let mfac = pair_measure_factor(basis.normalization, dim);

    const CHUNK: usize = 2;
    let nchunks = nodes.len().div_ceil(CHUNK);
    let partials: Result<Vec<DMatrix<f64>>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut a_local: DMatrix<f64> = DMatrix::zeros(nb, nb);
            let mut bp = vec![0.0; nb];
            let mut bm = vec![0.0; nb];
            let mut d = vec![0.0; nb];
            for i in c * CHUNK..((c + 1) * CHUNK).min(nodes.len()) {
                let v = nodes[i];
                for (j, vs) in nodes.iter().enumerate() {
                    let z = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                    let rel = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
                    if rel < crate::dissipation::DIAGONAL_CUTOFF {
                        continue;
                    }
                    let phi_val = phi.eval(rel)?;
                    if phi_val == 0.0 {
                        continue;
                    }
                    let k_hat = [z[0] / rel, z[1] / rel, z[2] / rel];
                    let mid = [
                        0.5 * (v[0] + vs[0]),
                        0.5 * (v[1] + vs[1]),
                        0.5 * (v[2] + vs[2]),
                    ];
                    let pair_w = 0.25 * mfac * vgrid.weights[i] * vgrid.weights[j] * phi_val;
                    for (sig, wsig) in sphere.nodes.iter().zip(&sphere.weights) {
                        let cos_t =
                            (k_hat[0] * sig[0] + k_hat[1] * sig[1] + k_hat[2] * sig[2])
                                .clamp(-1.0, 1.0);
                        let bval = b.eval(cos_t.acos(), dim)?;
                        if bval == 0.0 {
                            continue;
                        }
                        let vp = [
                            mid[0] + 0.5 * rel * sig[0],
                            mid[1] + 0.5 * rel * sig[1],
                            mid[2] + 0.5 * rel * sig[2],
                        ];
                        let vsp = [
                            mid[0] - 0.5 * rel * sig[0],
                            mid[1] - 0.5 * rel * sig[1],
                            mid[2] - 0.5 * rel * sig[2],
                        ];
                        basis.eval_all(&vp, &mut bp);
                        basis.eval_all(&vsp, &mut bm);
                        for q in 0..nb {
                            d[q] = node_vals[i][q] + node_vals[j][q] - bp[q] - bm[q];
                        }
                        let w = pair_w * wsig;
                        for p in 0..nb {
                            let wp = w * d[p];
                            for q in p..nb {
                                a_local[(p, q)] += wp * d[q];
                            }
                        }
                    }
                }
            }
            Ok(a_local)
        })
        .collect();
    let mut a: DMatrix<f64> = DMatrix::zeros(nb, nb);
    for p in partials? {
        a += p;
    }
    for i in 0..nb {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }

    Ok(GalerkinSystem {
        dim,
        max_degree: basis.max_degree,
        normalization: basis.normalization,
        indices: basis.functions.iter().map(|f| f.index).collect(),
        a: MatrixData::from_dmatrix(&a),
        gram: MatrixData::from_dmatrix(&gram_matrix(basis)?),
    })
}

/// Assembles the Landau Galerkin matrix by pair quadrature. The projected
/// integrand is expanded as `Phi (|z|^2 |u|^2 - (u . z)^2)`, which removes
/// the singular division and is polynomial for constant `Phi`.
pub fn assemble_landau(
    basis: &Basis,
    phi: &KineticKernel,
    velocity_order: usize,
) -> Result<GalerkinSystem> {
    let dim = basis.dim;
    let nb = basis.len();
    let vgrid = gauss_hermite_grid(velocity_order, dim)?;
    let nodes = &vgrid.nodes;
    let np = nodes.len();
    // gradient components at the nodes, one matrix per axis
    let mut gx = DMatrix::zeros(nb, np);
    let mut gy = DMatrix::zeros(nb, np);
    let mut gz = DMatrix::zeros(nb, np);
    for (s, v) in nodes.iter().enumerate() {
        for i in 0..nb {
            let g = basis.grad(i, v);
            gx[(i, s)] = g[0];
            gy[(i, s)] = g[1];
            gz[(i, s)] = g[2];
        }
    }
    let mfac = pair_measure_factor(basis.normalization, dim);

    const CHUNK: usize = 2;
    let nchunks = np.div_ceil(CHUNK);
    let partials: Result<Vec<DMatrix<f64>>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut a_local: DMatrix<f64> = DMatrix::zeros(nb, nb);
            // two projected-gradient columns per inner node
            let mut w_big = DMatrix::zeros(nb, 2 * np);
            for i in c * CHUNK..((c + 1) * CHUNK).min(np) {
                let v = nodes[i];
                w_big.fill(0.0);
                for j in 0..np {
                    let vs = nodes[j];
                    let z = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                    let rel2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
                    if rel2 < crate::dissipation::DIAGONAL_CUTOFF {
                        continue;
                    }
                    let rel = rel2.sqrt();
                    let phi_val = phi.eval(rel)?;
                    if phi_val == 0.0 {
                        continue;
                    }
                    let zn = [z[0] / rel, z[1] / rel, z[2] / rel];
                    // transverse frame of z
                    let aux = if zn[0].abs() < 0.9 {
                        [1.0, 0.0, 0.0]
                    } else {
                        [0.0, 1.0, 0.0]
                    };
                    let mut e1 = [
                        zn[1] * aux[2] - zn[2] * aux[1],
                        zn[2] * aux[0] - zn[0] * aux[2],
                        zn[0] * aux[1] - zn[1] * aux[0],
                    ];
                    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
                    e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
                    let e2 = [
                        zn[1] * e1[2] - zn[2] * e1[1],
                        zn[2] * e1[0] - zn[0] * e1[2],
                        zn[0] * e1[1] - zn[1] * e1[0],
                    ];
                    let s =
                        (0.5 * mfac * vgrid.weights[i] * vgrid.weights[j] * phi_val).sqrt() * rel;
                    for q in 0..nb {
                        let ux = gx[(q, i)] - gx[(q, j)];
                        let uy = gy[(q, i)] - gy[(q, j)];
                        let uz = gz[(q, i)] - gz[(q, j)];
                        w_big[(q, 2 * j)] = s * (ux * e1[0] + uy * e1[1] + uz * e1[2]);
                        w_big[(q, 2 * j + 1)] = s * (ux * e2[0] + uy * e2[1] + uz * e2[2]);
                    }
                }
                a_local.gemm(1.0, &w_big, &w_big.transpose(), 1.0);
            }
            Ok(a_local)
        })
        .collect();
    let mut a: DMatrix<f64> = DMatrix::zeros(nb, nb);
    for p in partials? {
        a += p;
    }
    let a = (&a + a.transpose()) * 0.5;

    Ok(GalerkinSystem {
        dim,
        max_degree: basis.max_degree,
        normalization: basis.normalization,
        indices: basis.functions.iter().map(|f| f.index).collect(),
        a: MatrixData::from_dmatrix(&a),
        gram: MatrixData::from_dmatrix(&gram_matrix(basis)?),
    })
}

/// Eigenvalue cluster of the restricted pencil.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Multiplet {
    pub value: f64,
    pub multiplicity: usize,
}

/// Spectrum of a Galerkin pencil restricted to the complement of the
/// collision invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub gap: f64,
    pub eigenvalues: Vec<f64>,
    pub multiplets: Vec<Multiplet>,
    /// Number of invariant directions that were projected out.
    pub invariant_count: usize,
}

/// Euclidean-orthonormal basis of `{ c : (G e_k)^T c = 0 }` for the invariant
/// positions `k`, built by modified Gram-Schmidt.
fn invariant_complement(g: &DMatrix<f64>, invariants: &[usize]) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut collected: Vec<Vec<f64>> = Vec::with_capacity(n);
    let push_orthogonalized = |collected: &mut Vec<Vec<f64>>, mut v: Vec<f64>| -> bool {
        for u in collected.iter() {
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= d * y;
            }
        }
        let nrm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm < 1e-8 {
            return false;
        }
        for x in &mut v {
            *x /= nrm;
        }
        collected.push(v);
        true
    };
    for &k in invariants {
        let col: Vec<f64> = (0..n).map(|i| g[(i, k)]).collect();
        if !push_orthogonalized(&mut collected, col) {
            return Err(Error::Linalg(
                "invariant directions are linearly dependent".into(),
            ));
        }
    }
    let k = collected.len();
    for e in 0..n {
        if collected.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        push_orthogonalized(&mut collected, v);
    }
    if collected.len() != n {
        return Err(Error::Linalg("complement construction incomplete".into()));
    }
    Ok(DMatrix::from_fn(n, n - k, |i, j| collected[k + j][i]))
}

/// Solves the restricted generalized eigenproblem `A c = lambda G c` on the
/// complement of the invariant directions and reports the full restricted
/// spectrum; the gap is its smallest eigenvalue.
pub fn spectral_gap(system: &GalerkinSystem) -> Result<GapReport> {
    let a = system.a_matrix();
    let g = system.gram_matrix();
    let invariants: Vec<usize> = system
        .indices
        .iter()
        .enumerate()
        .filter(|(_, idx)| idx.is_invariant())
        .map(|(i, _)| i)
        .collect();
    let basis_c = invariant_complement(&g, &invariants)?;
    let ar = basis_c.transpose() * &a * &basis_c;
    let gr = basis_c.transpose() * &g * &basis_c;
    let chol = Cholesky::new(gr)
        .ok_or_else(|| Error::Linalg("restricted Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let tmp = l
        .solve_lower_triangular(&ar)
        .ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
    let w = l
        .solve_lower_triangular(&tmp.transpose())
        .ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
    let w = (&w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(w);
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap());
    if eigenvalues.is_empty() {
        return Err(Error::Linalg("empty restricted spectrum".into()));
    }
    let scale = eigenvalues
        .iter()
        .fold(1.0f64, |m, &x| m.max(x.abs()));
    if eigenvalues[0] < -1e-8 * scale {
        return Err(Error::Linalg(format!(
            "dissipation matrix has a negative restricted eigenvalue {}",
            eigenvalues[0]
        )));
    }
    let mut multiplets: Vec<Multiplet> = Vec::new();
    for &x in &eigenvalues {
        match multiplets.last_mut() {
            Some(m) if (x - m.value).abs() <= 1e-8 * scale.max(1.0) => m.multiplicity += 1,
            _ => multiplets.push(Multiplet {
                value: x,
                multiplicity: 1,
            }),
        }
    }
    Ok(GapReport {
        gap: eigenvalues[0],
        eigenvalues,
        multiplets,
        invariant_count: invariants.len(),
    })
}

/// Magnitude of the first nonzero Maxwellian eigenvalue of the linearized
/// Boltzmann operator in dimension 3 (unit-mass convention):
/// `|lambda_0| = pi int_0^pi b(theta) sin^3(theta) dtheta`.
pub fn bobylev_lambda0(b: &AngularKernel) -> Result<f64> {
    let (nodes, weights) = angular_rule(b, 64)?;
    let mut acc = 0.0;
    for (&t, &w) in nodes.iter().zip(&weights) {
        acc += w * b.eval(t, 3)? * t.sin().powi(3);
    }
    Ok(std::f64::consts::PI * acc)
}

/// Grazing limit of `|lambda_0|` for the family `b_eps` built from `j`:
/// `2 pi int j(x) x^2 dx`.
pub fn bobylev_lambda0_grazing_limit(mollifier: &crate::kernels::Mollifier) -> f64 {
    2.0 * std::f64::consts::PI * mollifier.second_moment()
}

/// Maxwellian eigenvalue `lambda_{n,l} <= 0` of the linearized Boltzmann
/// operator in dimension 3 (unit-mass convention):
/// `lambda_{n,l} = 2 pi int_0^pi b [ cos^{2n+l}(t/2) P_l(cos(t/2))
///   + sin^{2n+l}(t/2) P_l(sin(t/2)) - 1 - delta_{n=l=0} ] sin t dt`.
pub fn bobylev_eigenvalue(n: usize, l: usize, b: &AngularKernel) -> Result<f64> {
    let (nodes, weights) = angular_rule(b, 96)?;
    let mut pc = vec![0.0; l + 1];
    let mut ps = vec![0.0; l + 1];
    let delta = if n == 0 && l == 0 { 1.0 } else { 0.0 };
    let p = (2 * n + l) as i32;
    let mut acc = 0.0;
    for (&t, &w) in nodes.iter().zip(&weights) {
        let bval = b.eval(t, 3)?;
        if bval == 0.0 {
            continue;
        }
        let (ct, st) = ((t / 2.0).cos(), (t / 2.0).sin());
        legendre_all(ct, &mut pc);
        legendre_all(st, &mut ps);
        let core = ct.powi(p) * pc[l] + st.powi(p) * ps[l] - 1.0 - delta;
        acc += w * bval * core * t.sin();
    }
    Ok(2.0 * std::f64::consts::PI * acc)
}
