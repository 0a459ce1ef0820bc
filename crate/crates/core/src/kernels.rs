//! Christoffel–Darboux kernel of the unitary ensemble and the 2×2 matrix
//! kernels of the symplectic and orthogonal ensembles, in the scaling where
//! the spectrum fills [−2, 2].
//!
//! A matrix kernel is returned as `[[S(x,y), V(x,y)], [J(x,y), S(y,x)]]`
//! (plus `α` on the diagonal for odd orthogonal sizes).

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::quadrature::integrate_panels;
use crate::special_functions::{
    hermite_cutoff, hermite_wave_table, semicircle, sine_kernel, sine_kernel_deriv, sine_kernel_integral, HermiteTail,
};

/// Default distance of the bulk window from the spectral edges.
pub const BULK_EPSILON: f64 = 0.1;

/// Below this separation the Christoffel–Darboux ratio is replaced by its
/// confluent limit.
pub const CONFLUENT_THRESHOLD: f64 = 1e-8;

/// Absolute tolerance of the `J` quadratures.
pub const J_QUAD_TOL: f64 = 1e-10;

pub fn in_bulk(x: f64, eps: f64) -> bool {
    x > -2.0 + eps && x < 2.0 - eps
}

pub fn check_bulk(x: f64, eps: f64) -> Result<()> {
    if in_bulk(x, eps) {
        Ok(())
    } else {
        Err(Error::OutsideBulk(x))
    }
}

/// `sign(x)/2`, with `ε(0) = 0`.
pub fn epsilon(x: f64) -> f64 {
    if x > 0.0 {
        0.5
    } else if x < 0.0 {
        -0.5
    } else {
        0.0
    }
}

/// `φ_0..=φ_m` at `√m·x`.
#[derive(Debug, Clone)]
struct Waves {
    x: f64,
    t: f64,
    phi: Vec<f64>,
}

impl Waves {
    fn new(m: usize, x: f64) -> Self {
        let t = (m as f64).sqrt() * x;
        Self { x, t, phi: hermite_wave_table(m, t) }
    }

    /// Plain derivative `φ_j'(t)`.
    fn deriv(&self, j: usize) -> f64 {
        let lower = if j == 0 { 0.0 } else { (j as f64).sqrt() * self.phi[j - 1] };
        lower - 0.5 * self.t * self.phi[j]
    }
}

/// `√m Σ_{j<m} φ_j(√m x) φ_j(√m y)` in Christoffel–Darboux form.
fn cd_kernel(m: usize, px: &Waves, py: &Waves) -> f64 {
    let d = px.x - py.x;
    if d.abs() < CONFLUENT_THRESHOLD {
        let mid = Waves::new(m, 0.5 * (px.x + py.x));
        let mf = m as f64;
        return mf * (mid.deriv(m) * mid.phi[m - 1] - mid.phi[m] * mid.deriv(m - 1));
    }
    (m as f64).sqrt() * (px.phi[m] * py.phi[m - 1] - py.phi[m] * px.phi[m - 1]) / d
}

/// `∂_y` of the kernel above: `m Σ_{j<m} φ_j(√m x) φ_j'(√m y)`.
fn cd_kernel_dy(m: usize, px: &Waves, py: &Waves) -> f64 {
    (m as f64) * (0..m).map(|j| px.phi[j] * py.deriv(j)).sum::<f64>()
}

/// Christoffel–Darboux kernel of the unitary ensemble of size `n`, normalized
/// so that `K_n(x, x) ≈ n ρ_sc(x)`.
pub fn gue_kernel(n: usize, x: f64, y: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("kernel needs n >= 1".into()));
    }
    Ok(cd_kernel(n, &Waves::new(n, x), &Waves::new(n, y)))
}

fn j_panels(len: f64, m: usize) -> usize {
    (len.abs() * m as f64 * 0.5).ceil() as usize + 1
}

/// Symplectic kernel entries at one pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelBundle {
    pub s_xy: f64,
    pub s_yx: f64,
    pub v_xy: f64,
    pub j_xy: f64,
}

/// Orthogonal kernel entries at one pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoeKernelBundle {
    pub s1: f64,
    pub s1_yx: f64,
    pub v1: f64,
    pub j1: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
}

/// Data at one point that every kernel entry involving it reuses.
#[derive(Debug, Clone)]
pub struct Prepared {
    waves: Waves,
    tail: f64,
}

impl Prepared {
    pub fn x(&self) -> f64 {
        self.waves.x
    }
}

/// Shared interface of the two Pfaffian kernels.
pub trait MatrixKernel: Send + Sync {
    fn size(&self) -> usize;
    fn beta(&self) -> Beta;
    fn prepare(&self, x: f64) -> Prepared;
    /// `[[S(x,y) + α(x), V(x,y)], [J(x,y), S(y,x) + α(y)]]`.
    fn matrix_prepared(&self, p: &Prepared, q: &Prepared) -> Matrix2<f64>;
    /// `∂_x S(x, y)`.
    fn s_dx(&self, x: f64, y: f64) -> f64;

    fn matrix(&self, x: f64, y: f64) -> Matrix2<f64> {
        self.matrix_prepared(&self.prepare(x), &self.prepare(y))
    }
}

/// Symplectic kernel of size `n`, built from the degree-`2n` unitary kernel.
#[derive(Debug, Clone)]
pub struct GseKernel {
    n: usize,
    m: usize,
    tail: HermiteTail,
}

impl GseKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("kernel needs n >= 1".into()));
        }
        Ok(Self { n, m: 2 * n, tail: HermiteTail::new(2 * n - 1) })
    }

    fn s_from(&self, px: &Waves, py: &Waves, tail_y: f64) -> f64 {
        0.5 * cd_kernel(self.m, px, py) - 0.5 * self.n as f64 * px.phi[self.m] * tail_y
    }

    fn v_from(&self, px: &Waves, py: &Waves) -> f64 {
        let m = self.m;
        let mf = m as f64;
        -(0.5 * cd_kernel_dy(m, px, py) + 0.5 * self.n as f64 * mf.sqrt() * px.phi[m] * py.phi[m - 1])
    }

    fn j_from(&self, p: &Prepared, q: &Prepared) -> f64 {
        let (x, y) = (p.x(), q.x());
        if x == y {
            return 0.0;
        }
        let (lo, hi, sign) = if x > y { (q, x, 1.0) } else { (p, y, -1.0) };
        let f = |t: f64| self.s_from(&Waves::new(self.m, t), &lo.waves, lo.tail);
        sign * integrate_panels(f, lo.x(), hi, j_panels(hi - lo.x(), self.m), J_QUAD_TOL)
    }

    pub fn s(&self, x: f64, y: f64) -> f64 {
        let py = self.prepare(y);
        self.s_from(&Waves::new(self.m, x), &py.waves, py.tail)
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        self.v_from(&Waves::new(self.m, x), &Waves::new(self.m, y))
    }

    /// `∫_y^x S(t, y) dt`, evaluated from the lower endpoint so that
    /// `J(x, y) = −J(y, x)` holds exactly.
    pub fn j(&self, x: f64, y: f64) -> f64 {
        self.j_from(&self.prepare(x), &self.prepare(y))
    }

    pub fn bundle(&self, x: f64, y: f64) -> KernelBundle {
        let (p, q) = (self.prepare(x), self.prepare(y));
        KernelBundle {
            s_xy: self.s_from(&p.waves, &q.waves, q.tail),
            s_yx: self.s_from(&q.waves, &p.waves, p.tail),
            v_xy: self.v_from(&p.waves, &q.waves),
            j_xy: self.j_from(&p, &q),
        }
    }
}

impl MatrixKernel for GseKernel {
    fn size(&self) -> usize {
        self.n
    }

    fn beta(&self) -> Beta {
        Beta::Four
    }

    fn prepare(&self, x: f64) -> Prepared {
        let waves = Waves::new(self.m, x);
        let tail = self.tail.tail(waves.t);
        Prepared { waves, tail }
    }

    fn matrix_prepared(&self, p: &Prepared, q: &Prepared) -> Matrix2<f64> {
        Matrix2::new(
            self.s_from(&p.waves, &q.waves, q.tail),
            self.v_from(&p.waves, &q.waves),
            self.j_from(p, q),
            self.s_from(&q.waves, &p.waves, p.tail),
        )
    }

    fn s_dx(&self, x: f64, y: f64) -> f64 {
        let m = self.m;
        let mf = m as f64;
        let (px, q) = (Waves::new(m, x), self.prepare(y));
        let k_dx = cd_kernel_dy(m, &q.waves, &px);
        0.5 * k_dx - 0.5 * self.n as f64 * mf.sqrt() * px.deriv(m) * q.tail
    }
}

/// Orthogonal kernel of size `n`.
#[derive(Debug, Clone)]
pub struct GoeKernel {
    n: usize,
    tail: HermiteTail,
    /// Degree `n − 1` tail, present for odd `n` only.
    odd_tail: Option<HermiteTail>,
}

impl GoeKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("orthogonal kernel needs n >= 2".into()));
        }
        let odd_tail = (n % 2 == 1).then(|| HermiteTail::new(n - 1));
        Ok(Self { n, tail: HermiteTail::new(n), odd_tail })
    }

    pub fn is_odd(&self) -> bool {
        self.odd_tail.is_some()
    }

    /// `∫ ε(√n y − t) φ_n(t) dt` from the stored tail `T_n(√n y)`.
    fn conv(&self, tail_y: f64) -> f64 {
        0.5 * self.tail.full_line() - tail_y
    }

    fn s_from(&self, px: &Waves, py: &Waves, tail_y: f64) -> f64 {
        let n = self.n;
        cd_kernel(n, px, py) + 0.5 * n as f64 * px.phi[n - 1] * self.conv(tail_y)
    }

    fn v_from(&self, px: &Waves, py: &Waves) -> f64 {
        let n = self.n;
        let nf = n as f64;
        -(cd_kernel_dy(n, px, py) + 0.5 * nf * px.phi[n - 1] * nf.sqrt() * py.phi[n])
    }

    pub fn alpha(&self, x: f64) -> f64 {
        match &self.odd_tail {
            None => 0.0,
            Some(t) => {
                let nf = self.n as f64;
                nf.sqrt() * crate::special_functions::hermite_wave(self.n - 1, nf.sqrt() * x) / t.full_line()
            }
        }
    }

    /// `∫ ε(x − t) α(t) dt`.
    pub fn gamma(&self, x: f64) -> f64 {
        match &self.odd_tail {
            None => 0.0,
            Some(t) => 0.5 - t.tail((self.n as f64).sqrt() * x) / t.full_line(),
        }
    }

    /// Half-width of the interval outside which `S(·, y)` is negligible.
    fn reach(&self) -> f64 {
        hermite_cutoff(self.n) / (self.n as f64).sqrt()
    }

    /// `J` straight from its definition, `∫ ε(x − t) S(t, y) dt − ε(x − y) +
    /// γ(x) − γ(y)`, integrating over the whole line.
    pub fn j_full(&self, x: f64, y: f64) -> f64 {
        let n = self.n;
        let q = self.prepare(y);
        let f = |t: f64| self.s_from(&Waves::new(n, t), &q.waves, q.tail);
        let l = self.reach();
        let left = integrate_panels(f, -l, x, j_panels(x + l, n), J_QUAD_TOL);
        let right = integrate_panels(f, x, l, j_panels(l - x, n), J_QUAD_TOL);
        0.5 * (left - right) - epsilon(x - y) + self.gamma(x) - self.gamma(y)
    }

    fn j_from(&self, p: &Prepared, q: &Prepared) -> f64 {
        let (x, y) = (p.x(), q.x());
        if x == y {
            return 0.0;
        }
        if self.is_odd() {
            return 0.5 * (self.j_full(x, y) - self.j_full(y, x));
        }
        let (lo, hi, sign) = if x > y { (q, x, 1.0) } else { (p, y, -1.0) };
        let f = |t: f64| self.s_from(&Waves::new(self.n, t), &lo.waves, lo.tail);
        sign * integrate_panels(f, lo.x(), hi, j_panels(hi - lo.x(), self.n), J_QUAD_TOL) - epsilon(x - y)
    }

    pub fn s(&self, x: f64, y: f64) -> f64 {
        let q = self.prepare(y);
        self.s_from(&Waves::new(self.n, x), &q.waves, q.tail)
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        self.v_from(&Waves::new(self.n, x), &Waves::new(self.n, y))
    }

    pub fn j(&self, x: f64, y: f64) -> f64 {
        self.j_from(&self.prepare(x), &self.prepare(y))
    }

    pub fn bundle(&self, x: f64, y: f64) -> GoeKernelBundle {
        let (p, q) = (self.prepare(x), self.prepare(y));
        GoeKernelBundle {
            s1: self.s_from(&p.waves, &q.waves, q.tail),
            s1_yx: self.s_from(&q.waves, &p.waves, p.tail),
            v1: self.v_from(&p.waves, &q.waves),
            j1: self.j_from(&p, &q),
            alpha_x: self.alpha(x),
            alpha_y: self.alpha(y),
            gamma_x: self.gamma(x),
            gamma_y: self.gamma(y),
        }
    }
}

impl MatrixKernel for GoeKernel {
    fn size(&self) -> usize {
        self.n
    }

    fn beta(&self) -> Beta {
        Beta::One
    }

    fn prepare(&self, x: f64) -> Prepared {
        let waves = Waves::new(self.n, x);
        let tail = self.tail.tail(waves.t);
        Prepared { waves, tail }
    }

    fn matrix_prepared(&self, p: &Prepared, q: &Prepared) -> Matrix2<f64> {
        let (ax, ay) = if self.is_odd() { (self.alpha(p.x()), self.alpha(q.x())) } else { (0.0, 0.0) };
        Matrix2::new(
            self.s_from(&p.waves, &q.waves, q.tail) + ax,
            self.v_from(&p.waves, &q.waves),
            self.j_from(p, q),
            self.s_from(&q.waves, &p.waves, p.tail) + ay,
        )
    }

    fn s_dx(&self, x: f64, y: f64) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let (px, q) = (Waves::new(n, x), self.prepare(y));
        let mut d = cd_kernel_dy(n, &q.waves, &px) + 0.5 * nf * nf.sqrt() * px.deriv(n - 1) * self.conv(q.tail);
        if let Some(t) = &self.odd_tail {
            d += nf * Waves::new(n - 1, x * (nf / (nf - 1.0)).sqrt()).deriv(n - 1) / t.full_line();
        }
        d
    }
}

/// Symplectic kernel entries of size `n` at `(x, y)`.
pub fn gse_kernel(n: usize, x: f64, y: f64) -> Result<KernelBundle> {
    Ok(GseKernel::new(n)?.bundle(x, y))
}

/// Orthogonal kernel entries of size `n` at `(x, y)`.
pub fn goe_kernel(n: usize, x: f64, y: f64) -> Result<GoeKernelBundle> {
    Ok(GoeKernel::new(n)?.bundle(x, y))
}

/// Builds the matrix kernel for `β ∈ {1, 4}`.
pub fn matrix_kernel(n: usize, beta: Beta) -> Result<Box<dyn MatrixKernel>> {
    match beta {
        Beta::Four => Ok(Box::new(GseKernel::new(n)?)),
        Beta::One => Ok(Box::new(GoeKernel::new(n)?)),
        Beta::Two => Err(Error::InvalidArgument("the unitary kernel is scalar; use gue_kernel".into())),
    }
}

/// Bulk location `x0` and two offsets measured in mean spacings there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescaledPoint {
    pub x0: f64,
    pub u: f64,
    pub v: f64,
}

impl RescaledPoint {
    pub fn new(x0: f64, u: f64, v: f64) -> Self {
        Self { x0, u, v }
    }

    /// `n ρ_sc(x0)`.
    pub fn density(&self, n: usize) -> f64 {
        n as f64 * semicircle(self.x0)
    }

    /// The two points in the original coordinates.
    pub fn points(&self, n: usize) -> (f64, f64) {
        let d = self.density(n);
        (self.x0 + self.u / d, self.x0 + self.v / d)
    }
}

fn check_rescaled(p: &RescaledPoint) -> Result<()> {
    check_bulk(p.x0, BULK_EPSILON)?;
    if p.u.abs() > 1.0 || p.v.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!("offsets ({}, {}) must lie in [-1, 1]", p.u, p.v)));
    }
    Ok(())
}

/// `[[S/N, V/N²], [J, S(y,x)/N]]` with `N = n ρ_sc(x0)`, using an existing kernel.
pub fn rescale_with(kernel: &dyn MatrixKernel, p: &RescaledPoint) -> Matrix2<f64> {
    let n = kernel.size();
    let d = p.density(n);
    let (x, y) = p.points(n);
    let k = kernel.matrix(x, y);
    Matrix2::new(k[(0, 0)] / d, k[(0, 1)] / (d * d), k[(1, 0)], k[(1, 1)] / d)
}

/// Rescaled matrix kernel at a bulk point.
pub fn rescaled_kernel(n: usize, beta: Beta, p: &RescaledPoint) -> Result<Matrix2<f64>> {
    check_rescaled(p)?;
    Ok(rescale_with(matrix_kernel(n, beta)?.as_ref(), p))
}

/// Sine-kernel limit of the rescaled kernel.
pub fn limit_matrix(beta: Beta, u: f64, v: f64) -> Result<Matrix2<f64>> {
    let d = u - v;
    match beta {
        Beta::Four => {
            let s = sine_kernel(2.0 * d);
            let j = 0.5 * sine_kernel_integral(2.0 * d);
            Ok(Matrix2::new(s, 2.0 * sine_kernel_deriv(2.0 * d), j, s))
        }
        Beta::One => {
            let s = sine_kernel(d);
            Ok(Matrix2::new(s, sine_kernel_deriv(d), sine_kernel_integral(d) - epsilon(d), s))
        }
        Beta::Two => Err(Error::InvalidArgument("no matrix limit for beta = 2".into())),
    }
}

/// `|K̂_n − K_limit|` entrywise, given an existing kernel.
pub fn deviation_with(kernel: &dyn MatrixKernel, p: &RescaledPoint) -> Result<Matrix2<f64>> {
    check_rescaled(p)?;
    let k = rescale_with(kernel, p);
    let lim = limit_matrix(kernel.beta(), p.u, p.v)?;
    Ok((k - lim).abs())
}

/// Entrywise distance between the rescaled kernel and its sine-kernel limit.
pub fn sine_limit_deviation(n: usize, beta: Beta, p: &RescaledPoint) -> Result<Matrix2<f64>> {
    deviation_with(matrix_kernel(n, beta)?.as_ref(), p)
}

/// Largest entrywise deviation from the limit over a grid, raw and multiplied
/// by the convergence rates `[[√n, n], [√n, √n]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelLimitRow {
    pub n: usize,
    pub beta: Beta,
    pub points: usize,
    pub s_dev: f64,
    pub v_dev: f64,
    pub j_dev: f64,
    pub s_yx_dev: f64,
    pub s_scaled: f64,
    pub v_scaled: f64,
    pub j_scaled: f64,
    pub s_yx_scaled: f64,
    /// `max |Ĵ − J_lim| / |u − v| · √n` over off-diagonal grid points.
    pub j_gap_scaled: f64,
}

/// [`sine_limit_deviation`] maximised over `x0s × offsets × offsets`.
pub fn kernel_limit_row(n: usize, beta: Beta, x0s: &[f64], offsets: &[f64]) -> Result<KernelLimitRow> {
    let kernel = matrix_kernel(n, beta)?;
    let mut pts = Vec::new();
    for &x0 in x0s {
        for &u in offsets {
            for &v in offsets {
                pts.push(RescaledPoint::new(x0, u, v));
            }
        }
    }
    let devs: Vec<Result<Matrix2<f64>>> = pts.par_iter().map(|p| deviation_with(kernel.as_ref(), p)).collect();
    let sn = (n as f64).sqrt();
    let mut row = KernelLimitRow {
        n,
        beta,
        points: pts.len(),
        s_dev: 0.0,
        v_dev: 0.0,
        j_dev: 0.0,
        s_yx_dev: 0.0,
        s_scaled: 0.0,
        v_scaled: 0.0,
        j_scaled: 0.0,
        s_yx_scaled: 0.0,
        j_gap_scaled: 0.0,
    };
    for (p, d) in pts.iter().zip(devs) {
        let d = d?;
        row.s_dev = row.s_dev.max(d[(0, 0)]);
        row.v_dev = row.v_dev.max(d[(0, 1)]);
        row.j_dev = row.j_dev.max(d[(1, 0)]);
        row.s_yx_dev = row.s_yx_dev.max(d[(1, 1)]);
        if p.u != p.v {
            row.j_gap_scaled = row.j_gap_scaled.max(d[(1, 0)] / (p.u - p.v).abs() * sn);
        }
    }
    row.s_scaled = row.s_dev * sn;
    row.v_scaled = row.v_dev * n as f64;
    row.j_scaled = row.j_dev * sn;
    row.s_yx_scaled = row.s_yx_dev * sn;
    Ok(row)
}

/// Largest ratio of each kernel quantity to its bound expression over a
/// sample of point pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelAudit {
    pub n: usize,
    pub beta: Beta,
    pub pairs: usize,
    /// `|S| / (min{1/d, n} + √n)`
    pub s_ratio: f64,
    /// `|∂_x S| / (n min{1/d, n²d} + n^{3/2})`
    pub s_dx_ratio: f64,
    /// `|V| / (n min{1/d, n²d} + n)`
    pub v_ratio: f64,
    /// `|J| / log n`
    pub j_ratio: f64,
}

/// Sup-ratios of `|S|`, `|∂_x S|`, `|V|` and `|J|` against their bound
/// expressions. The pairs must lie in the default bulk window.
pub fn kernel_bound_audit(n: usize, beta: Beta, pairs: &[(f64, f64)]) -> Result<KernelAudit> {
    for &(x, y) in pairs {
        check_bulk(x, BULK_EPSILON)?;
        check_bulk(y, BULK_EPSILON)?;
    }
    let kernel = matrix_kernel(n, beta)?;
    let nf = n as f64;
    let mut audit =
        KernelAudit { n, beta, pairs: pairs.len(), s_ratio: 0.0, s_dx_ratio: 0.0, v_ratio: 0.0, j_ratio: 0.0 };
    for &(x, y) in pairs {
        let d = (x - y).abs();
        let inv = if d > 0.0 { 1.0 / d } else { f64::INFINITY };
        let k = kernel.matrix(x, y);
        let small = inv.min(nf * nf * d);
        audit.s_ratio = audit.s_ratio.max(k[(0, 0)].abs() / (inv.min(nf) + nf.sqrt()));
        audit.s_dx_ratio = audit.s_dx_ratio.max(kernel.s_dx(x, y).abs() / (nf * small + nf.powf(1.5)));
        audit.v_ratio = audit.v_ratio.max(k[(0, 1)].abs() / (nf * small + nf));
        audit.j_ratio = audit.j_ratio.max(k[(1, 0)].abs() / nf.ln());
    }
    Ok(audit)
}
