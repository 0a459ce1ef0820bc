//! Samplers for the Gaussian β-ensembles with joint density
//! `∝ ∏_{i<j} |λ_i − λ_j|^β ∏ e^{−βnλ_i²/4}`, whose spectrum fills [−2, 2].
//!
//! Each draw owns a ChaCha8 stream selected by its index, so a draw depends
//! only on `(β, n, seed, index)` and draws may run in any order.

use std::io::Write;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::output::format_float;

/// Largest size accepted by [`sample_dense`].
pub const DENSE_CAP: usize = 64;

/// QL sweeps allowed per eigenvalue.
pub const MAX_SWEEPS: usize = 50;

/// Eigenvalues closer than this are reported as a sampler fault.
pub const MIN_SEPARATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnsembleParams {
    pub beta: Beta,
    pub n: usize,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn new(beta: Beta, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("ensemble size must be >= 1".into()));
        }
        Ok(Self { beta, n, seed })
    }

    /// Generator for draw number `draw`.
    pub fn rng(&self, draw: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw);
        rng
    }
}

/// Symmetric tridiagonal matrix with positive off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch { expected: diag.len().saturating_sub(1), got: offdiag.len() });
        }
        if let Some(e) = offdiag.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!("off-diagonal entry {e} must be positive")));
        }
        if diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("diagonal entries must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Max absolute row sum.
    pub fn norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.offdiag[i - 1] } else { 0.0 };
                let right = if i + 1 < n { self.offdiag[i] } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }
}

/// Sorted eigenvalues of one draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub params: EnsembleParams,
}

impl Spectrum {
    /// Sorts `values` and rejects non-finite or (near-)repeated eigenvalues.
    pub fn new(mut values: Vec<f64>, params: EnsembleParams) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SamplerFault("non-finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        if let Some(w) = values.windows(2).find(|w| w[1] - w[0] < MIN_SEPARATION) {
            return Err(Error::SamplerFault(format!("repeated eigenvalue near {}", w[0])));
        }
        Ok(Self { values, params })
    }
}

fn chi<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> f64 {
    // shape > 0 is guaranteed by the caller
    let g = Gamma::new(0.5 * dof, 2.0).expect("positive shape");
    g.sample(rng).sqrt()
}

/// Tridiagonal model: diagonal `√(2/(βn)) N(0,1)`, off-diagonal
/// `χ_{β(n−i)}/√(βn)` for `i = 1..n−1`.
pub fn sample_tridiagonal<R: Rng + ?Sized>(p: &EnsembleParams, rng: &mut R) -> TridiagonalMatrix {
    let b = p.beta.value();
    let scale = 1.0 / (b * p.n as f64).sqrt();
    let diag: Vec<f64> = (0..p.n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std::f64::consts::SQRT_2 * scale * z
        })
        .collect();
    let offdiag: Vec<f64> = (1..p.n).map(|i| scale * chi(rng, b * (p.n - i) as f64)).collect();
    TridiagonalMatrix { diag, offdiag }
}

/// Eigenvalues by implicit QL with Wilkinson shifts, ascending.
pub fn eigenvalues_tridiagonal(t: &TridiagonalMatrix) -> Result<Vec<f64>> {
    let n = t.dim();
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NoConvergence(format!("eigenvalue {l} after {MAX_SWEEPS} sweeps")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Number of eigenvalues below `x` from the signs of the LDLᵀ pivots.
fn sturm_count(t: &TridiagonalMatrix, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..t.dim() {
        let off = if i > 0 { t.offdiag[i - 1] * t.offdiag[i - 1] } else { 0.0 };
        q = t.diag[i] - x - if i > 0 { off / q } else { 0.0 };
        if q == 0.0 {
            q = -f64::EPSILON * (t.norm() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues by Sturm-sequence bisection, ascending. Slow; used as a
/// reference for [`eigenvalues_tridiagonal`].
pub fn sturm_bisection(t: &TridiagonalMatrix) -> Vec<f64> {
    let r = t.norm();
    let tol = 4.0 * f64::EPSILON * r.max(f64::MIN_POSITIVE);
    (0..t.dim())
        .map(|k| {
            let (mut lo, mut hi) = (-r - 1.0, r + 1.0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(t, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Draw `draw` through the tridiagonal model.
pub fn sample_spectrum(p: &EnsembleParams, draw: u64) -> Result<Spectrum> {
    let mut rng = p.rng(draw);
    let t = sample_tridiagonal(p, &mut rng);
    Spectrum::new(eigenvalues_tridiagonal(&t)?, *p)
}

/// Draws `0..count` in parallel, returned in draw order.
pub fn sample_spectra(p: &EnsembleParams, count: u64) -> Result<Vec<Spectrum>> {
    (0..count).into_par_iter().map(|d| sample_spectrum(p, d)).collect()
}

fn normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    var.sqrt() * z
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var_each: f64) -> Complex<f64> {
    Complex::new(normal(rng, var_each), normal(rng, var_each))
}

/// Dense draw: real symmetric, complex Hermitian, or quaternion self-dual as a
/// `2n × 2n` complex matrix `[[A, B], [−B̄, Ā]]` whose doubled eigenvalues are
/// collapsed. Entry variances give the matrix density `∝ exp(−(βn/4) tr H²)`.
pub fn sample_dense<R: Rng + ?Sized>(p: &EnsembleParams, rng: &mut R) -> Result<Spectrum> {
    let n = p.n;
    if n > DENSE_CAP {
        return Err(Error::InvalidArgument(format!("dense sampling is limited to n <= {DENSE_CAP}")));
    }
    let nf = n as f64;
    let values = match p.beta {
        Beta::One => {
            let mut h = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = normal(rng, 2.0 / nf);
                for j in i + 1..n {
                    let v = normal(rng, 1.0 / nf);
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            h.symmetric_eigenvalues().as_slice().to_vec()
        }
        Beta::Two => {
            let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = Complex::new(normal(rng, 1.0 / nf), 0.0);
                for j in i + 1..n {
                    let v = complex_normal(rng, 0.5 / nf);
                    h[(i, j)] = v;
                    h[(j, i)] = v.conj();
                }
            }
            h.symmetric_eigenvalues().as_slice().to_vec()
        }
        Beta::Four => {
            let mut a = DMatrix::<Complex<f64>>::zeros(n, n);
            let mut b = DMatrix::<Complex<f64>>::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = Complex::new(normal(rng, 0.5 / nf), 0.0);
                for j in i + 1..n {
                    let v = complex_normal(rng, 0.25 / nf);
                    a[(i, j)] = v;
                    a[(j, i)] = v.conj();
                    let w = complex_normal(rng, 0.25 / nf);
                    b[(i, j)] = w;
                    b[(j, i)] = -w;
                }
            }
            let mut h = DMatrix::<Complex<f64>>::zeros(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] = a[(i, j)];
                    h[(i, n + j)] = b[(i, j)];
                    h[(n + i, j)] = -b[(i, j)].conj();
                    h[(n + i, n + j)] = a[(i, j)].conj();
                }
            }
            let mut ev = h.symmetric_eigenvalues().as_slice().to_vec();
            ev.sort_by(f64::total_cmp);
            collapse_pairs(&ev)?
        }
    };
    Spectrum::new(values, *p)
}

/// Halves a list of eigenvalues that come in equal pairs.
pub fn collapse_pairs(sorted: &[f64]) -> Result<Vec<f64>> {
    if sorted.len() % 2 == 1 {
        return Err(Error::SamplerFault("odd number of doubled eigenvalues".into()));
    }
    sorted
        .chunks(2)
        .map(|c| {
            if (c[1] - c[0]).abs() > 1e-8 {
                Err(Error::SamplerFault(format!("eigenvalues {} and {} are not a Kramers pair", c[0], c[1])))
            } else {
                Ok(0.5 * (c[0] + c[1]))
            }
        })
        .collect()
}

/// `log ∫ ∏|λ_i − λ_j|^β ∏ e^{−βnλ_i²/4} dλ` from the Selberg product.
pub fn selberg_z(beta: Beta, n: usize) -> Result<f64> {
    if n == 0 || n > 50 {
        return Err(Error::InvalidArgument(format!("normalization is tabulated for 1 <= n <= 50, got {n}")));
    }
    let b = beta.value();
    let nf = n as f64;
    let half = 0.5 * b;
    let products: f64 = (1..=n).map(|j| ln_gamma(1.0 + j as f64 * half) - ln_gamma(1.0 + half)).sum();
    let scale = (b * nf / 2.0).ln();
    Ok(0.5 * nf * (2.0 * std::f64::consts::PI).ln() + (-nf * (nf - 1.0) * b / 4.0 - nf / 2.0) * scale + products)
}

/// CSV with columns `draw_index,rank,eigenvalue`; `rank` starts at 1.
pub fn write_spectra_csv<W: Write>(w: &mut W, spectra: &[Spectrum]) -> std::io::Result<()> {
    writeln!(w, "draw_index,rank,eigenvalue")?;
    for (d, s) in spectra.iter().enumerate() {
        for (r, v) in s.values.iter().enumerate() {
            writeln!(w, "{d},{},{}", r + 1, format_float(*v))?;
        }
    }
    Ok(())
}
