//! Pfaffian correlation functions of gap configurations and the near-diagonal
//! density of close pairs.
//!
//! A configuration holds `k` pairs `(λ_i, x_i)`; the correlation matrix has
//! 2×2 blocks `JK(p_a, p_b) = [[J, S(p_b,p_a)], [−S(p_a,p_b), −V]]` with the
//! points ordered `λ₁, x₁, …, λ_k, x_k`, followed by any extra points.

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;
use serde::Serialize;

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::kernels::{check_bulk, matrix_kernel, MatrixKernel, Prepared, BULK_EPSILON};
use crate::pfaffian::{congruence_transform, pfaffian_numeric, SkewMatrix};
use crate::quadrature::gauss_legendre;
use crate::special_functions::{semicircle, sine_kernel, sine_kernel_deriv, sine_kernel_integral};

/// Gauss–Legendre points per window interval and axis in [`l_kn_numeric`].
pub const LKN_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapConfiguration {
    pub beta: Beta,
    pub n: usize,
    pub pairs: Vec<(f64, f64)>,
}

impl GapConfiguration {
    /// Orthogonal configurations need even `n`; every point must lie in the
    /// default bulk window.
    pub fn new(beta: Beta, n: usize, pairs: Vec<(f64, f64)>) -> Result<Self> {
        check_kernel_args(beta, n)?;
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("configuration needs at least one pair".into()));
        }
        for &(l, x) in &pairs {
            check_bulk(l, BULK_EPSILON)?;
            check_bulk(x, BULK_EPSILON)?;
        }
        Ok(Self { beta, n, pairs })
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn points(&self) -> Vec<f64> {
        self.pairs.iter().flat_map(|&(l, x)| [l, x]).collect()
    }
}

fn check_kernel_args(beta: Beta, n: usize) -> Result<()> {
    match beta {
        Beta::Two => Err(Error::InvalidArgument("Pfaffian correlations need beta 1 or 4".into())),
        Beta::One if n % 2 == 1 => Err(Error::InvalidArgument("orthogonal correlations use even n".into())),
        _ => Ok(()),
    }
}

/// `ρ = Pf M` split into the product of diagonal-block Pfaffians and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationValue {
    pub total: f64,
    pub diag_part: f64,
    pub offdiag_part: f64,
}

fn jk_block(k: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(k[(1, 0)], k[(1, 1)], -k[(0, 0)], -k[(0, 1)])
}

fn fill_block(m: &mut DMatrix<f64>, a: usize, b: usize, blk: &Matrix2<f64>) {
    for r in 0..2 {
        for c in 0..2 {
            m[(2 * a + r, 2 * b + c)] = blk[(r, c)];
            m[(2 * b + c, 2 * a + r)] = -blk[(r, c)];
        }
    }
}

fn assemble_prepared(kernel: &dyn MatrixKernel, pts: &[Prepared]) -> Result<SkewMatrix> {
    let p = pts.len();
    let mut m = DMatrix::zeros(2 * p, 2 * p);
    for a in 0..p {
        let s = kernel.matrix_prepared(&pts[a], &pts[a])[(0, 0)];
        m[(2 * a, 2 * a + 1)] = s;
        m[(2 * a + 1, 2 * a)] = -s;
        for b in a + 1..p {
            fill_block(&mut m, a, b, &jk_block(&kernel.matrix_prepared(&pts[a], &pts[b])));
        }
    }
    SkewMatrix::new(m)
}

/// Correlation matrix of arbitrary points under an existing kernel. Blocks
/// below the diagonal are filled from those above, so the result is exactly
/// antisymmetric; diagonal blocks keep only `±S(p, p)`.
pub fn assemble_with(kernel: &dyn MatrixKernel, points: &[f64]) -> Result<SkewMatrix> {
    let pts: Vec<Prepared> = points.iter().map(|&x| kernel.prepare(x)).collect();
    assemble_prepared(kernel, &pts)
}

/// Correlation matrix of `λ₁, x₁, …, λ_k, x_k` followed by `extras`.
pub fn assemble_correlation_matrix(cfg: &GapConfiguration, extras: &[f64]) -> Result<SkewMatrix> {
    for &e in extras {
        check_bulk(e, BULK_EPSILON)?;
    }
    let kernel = matrix_kernel(cfg.n, cfg.beta)?;
    let mut pts = cfg.points();
    pts.extend_from_slice(extras);
    assemble_with(kernel.as_ref(), &pts)
}

/// Splits `Pf M` for `k` diagonal blocks of size 4, the last one absorbing
/// any remaining rows.
pub fn split_pfaffian(m: &SkewMatrix, k: usize) -> Result<CorrelationValue> {
    if k == 0 || 4 * k > m.dim() {
        return Err(Error::DimensionMismatch { expected: 4 * k.max(1), got: m.dim() });
    }
    let total = pfaffian_numeric(m);
    let mut diag_part = 1.0;
    for i in 0..k {
        let size = if i + 1 == k { m.dim() - 4 * i } else { 4 };
        diag_part *= pfaffian_numeric(&m.block(4 * i, size)?);
    }
    Ok(CorrelationValue { total, diag_part, offdiag_part: total - diag_part })
}

/// `ρ_{2k(+e)}` at the configuration and extra points.
pub fn rho(cfg: &GapConfiguration, extras: &[f64]) -> Result<CorrelationValue> {
    split_pfaffian(&assemble_correlation_matrix(cfg, extras)?, cfg.k())
}

/// One-point density `S(λ, λ)`.
pub fn rho1(n: usize, beta: Beta, lambda: f64) -> Result<f64> {
    check_kernel_args(beta, n)?;
    Ok(matrix_kernel(n, beta)?.matrix(lambda, lambda)[(0, 0)])
}

/// `S(λ,λ)S(x,x) − S(λ,x)S(x,λ) + J(λ,x)V(λ,x)`, the Pfaffian of one
/// diagonal block.
pub fn pf_mii_closed(n: usize, beta: Beta, lambda: f64, x: f64) -> Result<f64> {
    check_kernel_args(beta, n)?;
    check_bulk(lambda, BULK_EPSILON)?;
    check_bulk(x, BULK_EPSILON)?;
    let kernel = matrix_kernel(n, beta)?;
    Ok(pf_mii_with(kernel.as_ref(), lambda, x))
}

/// [`pf_mii_closed`] for an existing kernel.
pub fn pf_mii_with(kernel: &dyn MatrixKernel, lambda: f64, x: f64) -> f64 {
    let (p, q) = (kernel.prepare(lambda), kernel.prepare(x));
    let ll = kernel.matrix_prepared(&p, &p)[(0, 0)];
    let xx = kernel.matrix_prepared(&q, &q)[(0, 0)];
    let lx = kernel.matrix_prepared(&p, &q);
    ll * xx - lx[(0, 0)] * lx[(1, 1)] + lx[(1, 0)] * lx[(0, 1)]
}

/// Limit of `ρ₂(λ, λ + u/(nρ_sc)) / (nρ_sc)²` as `n → ∞`.
pub fn limiting_gap_density(beta: Beta, u: f64) -> Result<f64> {
    if u < 0.0 || !u.is_finite() {
        return Err(Error::InvalidArgument(format!("gap density needs u >= 0, got {u}")));
    }
    Ok(match beta {
        Beta::Four => {
            let k = sine_kernel(2.0 * u);
            1.0 - k * k + 2.0 * sine_kernel_deriv(2.0 * u) * 0.5 * sine_kernel_integral(2.0 * u)
        }
        Beta::One => {
            let k = sine_kernel(u);
            1.0 - k * k + sine_kernel_deriv(u) * (sine_kernel_integral(u) - 0.5)
        }
        Beta::Two => 1.0 - sine_kernel(u).powi(2),
    })
}

/// Leading small-`u` coefficient `F_β(u) ≈ c u^β`.
pub fn small_gap_coefficient(beta: Beta) -> f64 {
    use std::f64::consts::PI;
    match beta {
        Beta::Four => 16.0 * PI.powi(4) / 135.0,
        Beta::Two => PI * PI / 3.0,
        Beta::One => PI * PI / 6.0,
    }
}

/// One point of the near-diagonal density scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapDensityPoint {
    pub u: f64,
    /// `Pf(M_ii)(λ, λ + u/N) / N²` with `N = nρ_sc(λ)`.
    pub scaled: f64,
    pub limit: f64,
    pub ratio: f64,
    /// `scaled / u^β`.
    pub coefficient: f64,
}

/// Scaled two-point density of a close pair against its limit `F_β(u)`.
pub fn gap_density_scan(n: usize, beta: Beta, lambda: f64, us: &[f64]) -> Result<Vec<GapDensityPoint>> {
    check_kernel_args(beta, n)?;
    check_bulk(lambda, BULK_EPSILON)?;
    let kernel = matrix_kernel(n, beta)?;
    let d = n as f64 * semicircle(lambda);
    let b = beta.value();
    us.par_iter()
        .map(|&u| {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::InvalidArgument(format!("scan offsets must be positive, got {u}")));
            }
            check_bulk(lambda + u / d, BULK_EPSILON)?;
            let scaled = pf_mii_with(kernel.as_ref(), lambda, lambda + u / d) / (d * d);
            let limit = limiting_gap_density(beta, u)?;
            Ok(GapDensityPoint { u, scaled, limit, ratio: scaled / limit, coefficient: scaled / u.powf(b) })
        })
        .collect()
}

/// Least-squares `c` in `scaled ≈ c u^β` over the scan points with `u ≤ u_max`.
pub fn fit_small_gap_coefficient(beta: Beta, points: &[GapDensityPoint], u_max: f64) -> Option<f64> {
    let b = beta.value();
    let (mut num, mut den) = (0.0, 0.0);
    for p in points.iter().filter(|p| p.u <= u_max) {
        let w = p.u.powf(b);
        num += p.scaled * w;
        den += w * w;
    }
    (den > 0.0).then(|| num / den)
}

/// Limit of [`l_kn_numeric`] for one pair: `(1/c_β) ∫_A u^β du · (2πρ_sc(λ))^{β+2}`.
pub fn limiting_l1(beta: Beta, lambda: f64, window: &[(f64, f64)]) -> f64 {
    let b = beta.value();
    let moment: f64 = window.iter().map(|&(a, c)| (c.powf(b + 1.0) - a.powf(b + 1.0)) / (b + 1.0)).sum();
    moment / beta.gap_constant() * (2.0 * std::f64::consts::PI * semicircle(lambda)).powf(b + 2.0)
}

fn check_window(window: &[(f64, f64)]) -> Result<()> {
    for &(a, b) in window {
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("window interval ({a}, {b}] must satisfy 0 <= a < b")));
        }
    }
    Ok(())
}

/// `∫_{λ₁+A_n} ⋯ ∫_{λ_k+A_n} ρ_{2k}(λ₁, x₁, …, λ_k, x_k) dx` with
/// `A_n = n^{−(β+2)/(β+1)} A`, by tensor Gauss–Legendre quadrature.
pub fn l_kn_numeric(n: usize, beta: Beta, lambdas: &[f64], window: &[(f64, f64)]) -> Result<f64> {
    check_kernel_args(beta, n)?;
    check_window(window)?;
    let k = lambdas.len();
    if k == 0 || k > 2 {
        return Err(Error::InvalidArgument(format!("tensor quadrature supports k in {{1, 2}}, got {k}")));
    }
    let sep = 1.0 / (n as f64).ln();
    for i in 0..k {
        check_bulk(lambdas[i], BULK_EPSILON)?;
        for j in i + 1..k {
            if (lambdas[i] - lambdas[j]).abs() < sep {
                return Err(Error::InvalidArgument(format!("points closer than 1/log n = {sep}")));
            }
        }
    }
    if window.is_empty() {
        return Ok(0.0);
    }
    let scale = (n as f64).powf(-beta.gap_exponent());
    let (gx, gw) = gauss_legendre(LKN_ORDER);
    let mut offsets = Vec::new();
    for &(a, b) in window {
        let h = 0.5 * scale * (b - a);
        let c = 0.5 * scale * (a + b);
        for (x, w) in gx.iter().zip(&gw) {
            offsets.push((c + h * x, h * w));
        }
    }
    let kernel = matrix_kernel(n, beta)?;
    let m = offsets.len();
    // point list: λ_0..λ_{k−1}, then λ_i + offsets for each axis i
    let mut points: Vec<f64> = lambdas.to_vec();
    for &l in lambdas {
        points.extend(offsets.iter().map(|&(o, _)| l + o));
    }
    for &p in &points[k..] {
        check_bulk(p, BULK_EPSILON)?;
    }
    let prepared: Vec<Prepared> = points.par_iter().map(|&x| kernel.prepare(x)).collect();
    let axis = |i: usize, j: usize| k + i * m + j;
    let integrand = |idx: &[usize]| -> Result<f64> {
        let pts: Vec<Prepared> =
            (0..k).flat_map(|i| [prepared[i].clone(), prepared[axis(i, idx[i])].clone()]).collect();
        Ok(pfaffian_numeric(&assemble_prepared(kernel.as_ref(), &pts)?))
    };
    let total = if k == 1 {
        let vals: Vec<Result<f64>> = (0..m).into_par_iter().map(|j| integrand(&[j])).collect();
        let mut s = 0.0;
        for (j, v) in vals.into_iter().enumerate() {
            s += offsets[j].1 * v?;
        }
        s
    } else {
        let vals: Vec<Result<f64>> = (0..m * m).into_par_iter().map(|q| integrand(&[q / m, q % m])).collect();
        let mut s = 0.0;
        for (q, v) in vals.into_iter().enumerate() {
            s += offsets[q / m].1 * offsets[q % m].1 * v?;
        }
        s
    };
    Ok(total)
}

/// Row/column operations that lower the entry sizes of a gap correlation
/// matrix without changing its Pfaffian: row `4i` gains `(λ_i − x_i)` times
/// row `4i+1`, then rows `4i+2` and `4i+3` lose rows `4i` and `4i+1`; columns
/// likewise.
pub fn round1_transform(m: &SkewMatrix, pairs: &[(f64, f64)]) -> Result<SkewMatrix> {
    let dim = m.dim();
    if 4 * pairs.len() > dim {
        return Err(Error::DimensionMismatch { expected: 4 * pairs.len(), got: dim });
    }
    let mut e1 = DMatrix::<f64>::identity(dim, dim);
    let mut e2 = DMatrix::<f64>::identity(dim, dim);
    for (i, &(l, x)) in pairs.iter().enumerate() {
        let r = 4 * i;
        e1[(r, r + 1)] = l - x;
        e2[(r + 2, r)] = -1.0;
        e2[(r + 3, r + 1)] = -1.0;
    }
    let e = e2 * e1;
    congruence_transform(m, &e.transpose())
}

/// Entry `(i, j)` (1-based) multiplied by `n^{−p}` when both are even and by
/// `n^{p}` when both are odd, with `p = 6/5` for β = 4 and `3/2` for β = 1.
pub fn round2_transform(m: &SkewMatrix, n: usize, beta: Beta) -> Result<SkewMatrix> {
    check_kernel_args(beta, n)?;
    let half = 0.5 * beta.gap_exponent();
    let f = (n as f64).powf(half);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(m.dim(), |i, _| if i % 2 == 0 { f } else { 1.0 / f }));
    congruence_transform(m, &d)
}
