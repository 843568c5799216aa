//! The Sonine x spherical-harmonic basis of `L^2(M)`, `M = e^{-|v|^2}`.
//!
//! Basis functions are `S_n^{(l + N/2 - 1)}(|v|^2) |v|^l Y_{l,m}(v/|v|)`,
//! carried as explicit polynomials in the velocity components (solid-harmonic
//! form, so there is no division at `v = 0`). For Maxwellian molecules this is
//! the exact eigenbasis of the linearized operator, which the spectral module
//! exploits and tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_grid, sphere_grid};

/// Normalization convention for the Gaussian weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `M = e^{-|v|^2}` exactly as the formulas are written (mass `pi^{N/2}`).
    PaperRaw,
    /// `M` divided by `pi^{N/2}` so that `int M = 1`.
    UnitMass,
}

impl Normalization {
    /// Mass of the weight under this convention.
    pub fn mass(&self, dim: usize) -> f64 {
        match self {
            Normalization::PaperRaw => std::f64::consts::PI.powf(dim as f64 / 2.0),
            Normalization::UnitMass => 1.0,
        }
    }
}

/// A sparse polynomial in up to three velocity components.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    /// (exponents, coefficient), sorted by exponents, no duplicates.
    terms: Vec<([u8; 3], f64)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Poly {
                terms: vec![([0, 0, 0], c)],
            }
        }
    }

    pub fn monomial(e: [u8; 3], c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Poly { terms: vec![(e, c)] }
        }
    }

    /// x, y or z.
    pub fn var(axis: usize) -> Self {
        let mut e = [0u8; 3];
        e[axis] = 1;
        Self::monomial(e, 1.0)
    }

    fn normalize(mut terms: Vec<([u8; 3], f64)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<([u8; 3], f64)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            if let Some(last) = out.last_mut() {
                if last.0 == e {
                    last.1 += c;
                    continue;
                }
            }
            out.push((e, c));
        }
        out.retain(|t| t.1 != 0.0);
        Poly { terms: out }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::normalize(terms)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            terms: self.terms.iter().map(|&(e, c)| (e, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(ea, ca) in &self.terms {
            for &(eb, cb) in &other.terms {
                terms.push(([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb));
            }
        }
        Self::normalize(terms)
    }

    pub fn diff(&self, axis: usize) -> Poly {
        let mut terms = Vec::new();
        for &(e, c) in &self.terms {
            if e[axis] > 0 {
                let mut d = e;
                d[axis] -= 1;
                terms.push((d, c * e[axis] as f64));
            }
        }
        Self::normalize(terms)
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| (e[0] + e[1] + e[2]) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> &[([u8; 3], f64)] {
        &self.terms
    }

    pub fn eval(&self, v: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for &(e, c) in &self.terms {
            acc += c
                * powi_u8(v[0], e[0])
                * powi_u8(v[1], e[1])
                * powi_u8(v[2], e[2]);
        }
        acc
    }

    /// Evaluation against precomputed per-axis power tables (hot loops).
    #[inline]
    pub fn eval_pows(&self, px: &[f64], py: &[f64], pz: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(e, c) in &self.terms {
            acc += c * px[e[0] as usize] * py[e[1] as usize] * pz[e[2] as usize];
        }
        acc
    }
}

#[inline]
fn powi_u8(x: f64, e: u8) -> f64 {
    let mut acc = 1.0;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Fills `pows[k] = x^k` for `k <= deg`.
#[inline]
pub fn power_table(x: f64, deg: usize, pows: &mut [f64]) {
    pows[0] = 1.0;
    for k in 1..=deg {
        pows[k] = pows[k - 1] * x;
    }
}

/// Coefficients of the associated Laguerre polynomial `L_n^{(alpha)}` in
/// powers of its argument.
fn laguerre_coeffs(n: usize, alpha: f64) -> Vec<f64> {
    // L_n^{(a)}(t) = sum_k (-1)^k / k! * C(n + a, n - k) t^k
    let mut coeffs = vec![0.0; n + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut binom = 1.0;
        for i in 1..=(n - k) {
            binom *= (alpha + k as f64 + i as f64) / i as f64;
        }
        let mut kfact = 1.0;
        for i in 1..=k {
            kfact *= i as f64;
        }
        *c = if k % 2 == 0 { 1.0 } else { -1.0 } * binom / kfact;
    }
    coeffs
}

/// Complex solid harmonics `r^l P_l^m(cos theta) e^{i m phi}` as polynomial
/// (re, im) pairs, for `0 <= m <= l <= lmax`, unnormalized.
fn complex_solid_harmonics(lmax: usize) -> Vec<Vec<(Poly, Poly)>> {
    let x = Poly::var(0);
    let y = Poly::var(1);
    let z = Poly::var(2);
    let r2 = x.mul(&x).add(&y.mul(&y)).add(&z.mul(&z));
    // table[l][m] = (re, im)
    let mut table: Vec<Vec<(Poly, Poly)>> = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let mut row = Vec::with_capacity(l + 1);
        for m in 0..=l {
            let entry: (Poly, Poly) = if l == 0 {
                (Poly::constant(1.0), Poly::zero())
            } else if m == l {
                // R_m^m = (2m - 1) (x + i y) R_{m-1}^{m-1}
                let (pre, pim) = &table[l - 1][l - 1];
                let s = (2 * m - 1) as f64;
                (
                    x.mul(pre).add(&y.mul(pim).scale(-1.0)).scale(s),
                    x.mul(pim).add(&y.mul(pre)).scale(s),
                )
            } else if m + 1 == l {
                // R_{m+1}^m = (2m + 1) z R_m^m
                let (pre, pim) = &table[l - 1][m];
                let s = (2 * m + 1) as f64;
                (z.mul(pre).scale(s), z.mul(pim).scale(s))
            } else {
                // (l - m) R_l^m = (2l - 1) z R_{l-1}^m - (l - 1 + m) r^2 R_{l-2}^m
                let (are, aim) = &table[l - 1][m];
                let (bre, bim) = &table[l - 2][m];
                let ca = (2 * l - 1) as f64 / (l - m) as f64;
                let cb = -((l - 1 + m) as f64) / (l - m) as f64;
                (
                    z.mul(are).scale(ca).add(&r2.mul(bre).scale(cb)),
                    z.mul(aim).scale(ca).add(&r2.mul(bim).scale(cb)),
                )
            };
            row.push(entry);
        }
        table.push(row);
    }
    table
}

/// Real solid harmonics of degree `l`, keyed by order `m in -l..=l`
/// (`m >= 0` cosine-type, `m < 0` sine-type), unnormalized.
///
/// For `dim == 2` only `m = +-l` survive: the real and imaginary parts of
/// `(x + i y)^l`.
pub fn real_solid_harmonics(dim: usize, lmax: usize) -> Vec<Vec<(i32, Poly)>> {
    match dim {
        2 => {
            let x = Poly::var(0);
            let y = Poly::var(1);
            let mut out = Vec::with_capacity(lmax + 1);
            let mut re = Poly::constant(1.0);
            let mut im = Poly::zero();
            for l in 0..=lmax {
                if l > 0 {
                    let nre = x.mul(&re).add(&y.mul(&im).scale(-1.0));
                    let nim = x.mul(&im).add(&y.mul(&re));
                    re = nre;
                    im = nim;
                }
                if l == 0 {
                    out.push(vec![(0, re.clone())]);
                } else {
                    out.push(vec![(-(l as i32), im.clone()), (l as i32, re.clone())]);
                }
            }
            out
        }
        3 => {
            let table = complex_solid_harmonics(lmax);
            let mut out = Vec::with_capacity(lmax + 1);
            for (l, row) in table.iter().enumerate() {
                let mut harmonics = Vec::with_capacity(2 * l + 1);
                for m in (1..=l).rev() {
                    harmonics.push((-(m as i32), row[m].1.clone()));
                }
                harmonics.push((0, row[0].0.clone()));
                for (m, entry) in row.iter().enumerate().skip(1) {
                    harmonics.push((m as i32, entry.0.clone()));
                }
                harmonics.sort_by_key(|h| h.0);
                out.push(harmonics);
            }
            out
        }
        _ => panic!("real_solid_harmonics supports dim 2 or 3"),
    }
}

/// Label of one basis function: radial index `n`, angular degree `l`,
/// angular order `m`. Truncation orders by total polynomial degree `2n + l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub n: usize,
    pub l: usize,
    pub m: i32,
}

impl BasisIndex {
    pub fn total_degree(&self) -> usize {
        2 * self.n + self.l
    }

    /// Whether this index spans a collision invariant (`1`, `v`, `|v|^2`).
    pub fn is_invariant(&self) -> bool {
        matches!((self.n, self.l), (0, 0) | (0, 1) | (1, 0))
    }
}

/// All indices with `2n + l <= max_degree`, ordered by total degree, then
/// `l`, then `n`, then `m`.
pub fn basis_indices(dim: usize, max_degree: usize) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        for l in 0..=deg {
            if (deg - l) % 2 != 0 {
                continue;
            }
            let n = (deg - l) / 2;
            let ms: Vec<i32> = match dim {
                2 => {
                    if l == 0 {
                        vec![0]
                    } else {
                        vec![-(l as i32), l as i32]
                    }
                }
                _ => (-(l as i32)..=l as i32).collect(),
            };
            for m in ms {
                out.push(BasisIndex { n, l, m });
            }
        }
    }
    out
}

/// One orthonormal basis function with its analytic gradient.
#[derive(Debug, Clone)]
pub struct BasisFunction {
    pub index: BasisIndex,
    pub poly: Poly,
    pub grad: [Poly; 3],
}

/// Truncated orthonormal basis of `L^2(M)`.
#[derive(Debug, Clone)]
pub struct Basis {
    pub dim: usize,
    pub max_degree: usize,
    pub normalization: Normalization,
    pub functions: Vec<BasisFunction>,
}

impl Basis {
    /// Builds the basis with `2n + l <= max_degree`, each function normalized
    /// to unit `L^2(M)` norm under `normalization`.
    pub fn new(dim: usize, max_degree: usize, normalization: Normalization) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!("basis supports dim 2 or 3, got {dim}")));
        }
        let indices = basis_indices(dim, max_degree);
        let harmonics = real_solid_harmonics(dim, max_degree);
        let x = Poly::var(0);
        let y = Poly::var(1);
        let r2 = if dim == 2 {
            x.mul(&x).add(&y.mul(&y))
        } else {
            let z = Poly::var(2);
            x.mul(&x).add(&y.mul(&y)).add(&z.mul(&z))
        };
        // norms are exact on a Gauss grid resolving degree 2 * max_degree
        let order = (max_degree + 1).max(2);
        let grid = gauss_hermite_grid(order, dim)?;
        let mass_scale = normalization.mass(dim) / Normalization::PaperRaw.mass(dim);

        let mut functions = Vec::with_capacity(indices.len());
        for idx in indices {
            let alpha = idx.l as f64 + dim as f64 / 2.0 - 1.0;
            let lag = laguerre_coeffs(idx.n, alpha);
            let mut radial = Poly::zero();
            let mut r2k = Poly::constant(1.0);
            for (k, &c) in lag.iter().enumerate() {
                radial = radial.add(&r2k.scale(c));
                if k < lag.len() - 1 {
                    r2k = r2k.mul(&r2);
                }
            }
            let harmonic = &harmonics[idx.l]
                .iter()
                .find(|(m, _)| *m == idx.m)
                .expect("index enumeration matches harmonic table")
                .1;
            let raw = radial.mul(harmonic);
            let mut norm2 = 0.0;
            for (node, w) in grid.nodes.iter().zip(&grid.weights) {
                let val = raw.eval(node);
                norm2 += w * val * val;
            }
            norm2 *= mass_scale;
            if norm2 <= 0.0 {
                return Err(Error::Linalg(format!(
                    "basis function {idx:?} has non-positive norm"
                )));
            }
            let poly = raw.scale(1.0 / norm2.sqrt());
            let grad = [poly.diff(0), poly.diff(1), poly.diff(2)];
            functions.push(BasisFunction {
                index: idx,
                poly,
                grad,
            });
        }
        Ok(Basis {
            dim,
            max_degree,
            normalization,
            functions,
        })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Positions of the collision-invariant indices inside this basis.
    pub fn invariant_positions(&self) -> Vec<usize> {
        self.functions
            .iter()
            .enumerate()
            .filter(|(_, f)| f.index.is_invariant())
            .map(|(i, _)| i)
            .collect()
    }

    /// Evaluates every basis function at `v` into `out`.
    pub fn eval_all(&self, v: &[f64; 3], out: &mut [f64]) {
        let deg = self.max_degree;
        let mut px = [0.0; 16];
        let mut py = [0.0; 16];
        let mut pz = [0.0; 16];
        power_table(v[0], deg, &mut px);
        power_table(v[1], deg, &mut py);
        power_table(v[2], deg, &mut pz);
        for (f, o) in self.functions.iter().zip(out.iter_mut()) {
            *o = f.poly.eval_pows(&px, &py, &pz);
        }
    }

    pub fn eval(&self, i: usize, v: &[f64; 3]) -> f64 {
        self.functions[i].poly.eval(v)
    }

    pub fn grad(&self, i: usize, v: &[f64; 3]) -> [f64; 3] {
        let g = &self.functions[i].grad;
        [g[0].eval(v), g[1].eval(v), g[2].eval(v)]
    }
}

/// Real spherical harmonics restricted to the unit sphere, orthonormal in
/// `L^2(S^{N-1})`, used for angular transforms of sphere data.
#[derive(Debug, Clone)]
pub struct SphereHarmonics {
    pub dim: usize,
    pub lmax: usize,
    /// (l, m, polynomial restricted to the sphere)
    pub items: Vec<(usize, i32, Poly)>,
}

impl SphereHarmonics {
    pub fn new(dim: usize, lmax: usize) -> Result<Self> {
        let harmonics = real_solid_harmonics(dim, lmax);
        let grid = sphere_grid(dim, (lmax + 1).max(2))?;
        let mut items = Vec::new();
        for (l, row) in harmonics.iter().enumerate() {
            for (m, poly) in row {
                let mut norm2 = 0.0;
                for (node, w) in grid.nodes.iter().zip(&grid.weights) {
                    let val = poly.eval(node);
                    norm2 += w * val * val;
                }
                items.push((l, *m, poly.scale(1.0 / norm2.sqrt())));
            }
        }
        Ok(SphereHarmonics { dim, lmax, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laguerre_low_orders() {
        // L_0 = 1, L_1^{(a)}(t) = 1 + a - t
        assert_eq!(laguerre_coeffs(0, 0.5), vec![1.0]);
        let c = laguerre_coeffs(1, 0.5);
        assert_abs_diff_eq!(c[0], 1.5);
        assert_abs_diff_eq!(c[1], -1.0);
    }

    #[test]
    fn poly_basics() {
        let x = Poly::var(0);
        let p = x.mul(&x).add(&Poly::constant(-1.0)); // x^2 - 1
        assert_abs_diff_eq!(p.eval(&[3.0, 0.0, 0.0]), 8.0);
        assert_abs_diff_eq!(p.diff(0).eval(&[3.0, 0.0, 0.0]), 6.0);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn solid_harmonics_are_harmonic() {
        // Laplacian of each degree-l solid harmonic vanishes identically
        for row in real_solid_harmonics(3, 6) {
            for (_, p) in row {
                let lap = p
                    .diff(0)
                    .diff(0)
                    .add(&p.diff(1).diff(1))
                    .add(&p.diff(2).diff(2));
                let scale = p
                    .terms()
                    .iter()
                    .map(|t| t.1.abs())
                    .fold(0.0, f64::max);
                for t in lap.terms() {
                    assert!(t.1.abs() <= 1e-12 * scale, "non-harmonic residue {t:?}");
                }
            }
        }
    }

    #[test]
    fn constant_function_normalized() {
        let basis = Basis::new(3, 4, Normalization::PaperRaw).unwrap();
        let f0 = &basis.functions[0];
        assert_eq!(f0.index, BasisIndex { n: 0, l: 0, m: 0 });
        // phi_0 = const with ||.||_{L^2(M)} = 1 => phi_0 = pi^{-3/4}
        let expect = std::f64::consts::PI.powf(-0.75);
        assert_abs_diff_eq!(f0.poly.eval(&[0.3, -1.0, 2.0]), expect, epsilon = 1e-12);
    }

    #[test]
    fn degree_one_is_linear() {
        let basis = Basis::new(3, 2, Normalization::PaperRaw).unwrap();
        for f in &basis.functions {
            if f.index.n == 0 && f.index.l == 1 {
                assert_eq!(f.poly.degree(), 1);
                // vanishes at origin
                assert_abs_diff_eq!(f.poly.eval(&[0.0; 3]), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gram_matrix_identity() {
        let basis = Basis::new(3, 4, Normalization::PaperRaw).unwrap();
        assert!(basis.len() >= 20);
        let grid = gauss_hermite_grid(8, 3).unwrap();
        let k = 20.min(basis.len());
        for i in 0..k {
            for j in i..k {
                let est = integrate(&grid, |v| basis.eval(i, v) * basis.eval(j, v)).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(est.value, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn gram_matrix_identity_unit_mass_2d() {
        let basis = Basis::new(2, 4, Normalization::UnitMass).unwrap();
        let grid = gauss_hermite_grid(8, 2).unwrap();
        let mass = std::f64::consts::PI;
        for i in 0..basis.len() {
            for j in i..basis.len() {
                let est = integrate(&grid, |v| basis.eval(i, v) * basis.eval(j, v)).unwrap();
                let expect = if i == j { mass } else { 0.0 };
                assert_abs_diff_eq!(est.value, expect, epsilon = 1e-10 * mass);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::Rng;
        use rand::SeedableRng;
        let basis = Basis::new(3, 6, Normalization::PaperRaw).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let v = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let i = rng.gen_range(0..basis.len());
            let g = basis.grad(i, &v);
            let h = 1e-6;
            for axis in 0..3 {
                let mut vp = v;
                let mut vm = v;
                vp[axis] += h;
                vm[axis] -= h;
                let fd = (basis.eval(i, &vp) - basis.eval(i, &vm)) / (2.0 * h);
                let scale = g[axis].abs().max(1.0);
                assert_abs_diff_eq!(g[axis], fd, epsilon = 1e-5 * scale);
            }
        }
    }

    #[test]
    fn truncation_counts() {
        // dim 3, degree d: all polynomials of degree <= d => C(d+3, 3) functions
        let basis = Basis::new(3, 8, Normalization::PaperRaw).unwrap();
        assert_eq!(basis.len(), 165);
        let basis = Basis::new(3, 2, Normalization::PaperRaw).unwrap();
        assert_eq!(basis.len(), 10);
        // invariants: (0,0), (0,1)x3, (1,0)
        assert_eq!(basis.invariant_positions().len(), 5);
    }

    #[test]
    fn sphere_harmonics_orthonormal() {
        let sh = SphereHarmonics::new(3, 4).unwrap();
        let grid = sphere_grid(3, 6).unwrap();
        for a in 0..sh.len() {
            for b in a..sh.len() {
                let mut acc = 0.0;
                for (node, w) in grid.nodes.iter().zip(&grid.weights) {
                    acc += w * sh.items[a].2.eval(node) * sh.items[b].2.eval(node);
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc, expect, epsilon = 1e-10);
            }
        }
    }
}
