//! Hermite wave functions, the sine kernel and the semicircle density.
//!
//! `φ_n(x) = e^{−x²/4} H_n(x) / ((2π)^{1/4} √n!)` with probabilists' Hermite
//! polynomials. Everything is evaluated through the normalized three-term
//! recurrence; a running log-scale keeps the recurrence finite where `φ_0(x)`
//! alone would underflow.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::integrate_panels;

/// Degree of a Hermite wave function.
pub type WaveIndex = usize;

/// Default distance of the Plancherel–Rotach window from 0 and π.
pub const EPS_THETA: f64 = 0.05;

/// Absolute tolerance for the Hermite integrals.
pub const HERMITE_QUAD_TOL: f64 = 1e-12;

const RESCALE: f64 = 1e150;

/// Visits `(k, φ_k(x))` for `k = 0..=n`.
fn walk<F: FnMut(usize, f64)>(n: usize, x: f64, mut visit: F) {
    let mut log_scale = -0.25 * x * x - 0.25 * (2.0 * PI).ln();
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    visit(0, factor);
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
            factor = log_scale.exp();
        }
        visit(k + 1, cur * factor);
    }
}

/// `φ_n(x)`.
pub fn hermite_wave(n: WaveIndex, x: f64) -> f64 {
    let mut out = 0.0;
    walk(n, x, |k, v| {
        if k == n {
            out = v;
        }
    });
    out
}

/// `[φ_0(x), …, φ_n(x)]`.
pub fn hermite_wave_table(n: WaveIndex, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    walk(n, x, |_, v| out.push(v));
    out
}

/// `φ_n'(t) = √n φ_{n−1}(t) − (t/2) φ_n(t)`.
pub fn hermite_wave_deriv(n: WaveIndex, t: f64) -> f64 {
    if n == 0 {
        return -0.5 * t * hermite_wave(0, t);
    }
    let mut last = [0.0; 2];
    walk(n, t, |k, v| {
        if k + 1 == n {
            last[0] = v;
        } else if k == n {
            last[1] = v;
        }
    });
    (n as f64).sqrt() * last[0] - 0.5 * t * last[1]
}

/// Derivative of `x ↦ φ_n(√n x)`: `n φ_{n−1}(√n x) − (n x / 2) φ_n(√n x)`.
pub fn hermite_wave_scaled_deriv(n: WaveIndex, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("scaled derivative needs n >= 1".into()));
    }
    let nf = n as f64;
    let t = nf.sqrt() * x;
    let mut last = [0.0; 2];
    walk(n, t, |k, v| {
        if k + 1 == n {
            last[0] = v;
        } else if k == n {
            last[1] = v;
        }
    });
    Ok(nf * last[0] - 0.5 * nf * x * last[1])
}

/// Past this point `|φ_n|` is below double precision relative to its bulk size.
pub fn hermite_cutoff(n: WaveIndex) -> f64 {
    2.0 * (n as f64).sqrt() + 14.0
}

fn oscillation_panels(n: WaveIndex, len: f64) -> usize {
    let width = 2.0 * PI / ((n + 1) as f64).sqrt();
    ((len.abs() / width).ceil() as usize).max(1)
}

/// Signed `∫_a^b φ_n` by adaptive quadrature.
pub fn hermite_integral(n: WaveIndex, a: f64, b: f64) -> f64 {
    integrate_panels(|t| hermite_wave(n, t), a, b, oscillation_panels(n, b - a), HERMITE_QUAD_TOL)
}

/// Tail integrals `∫_y^∞ φ_n` for one fixed degree, with the half-line piece
/// computed once.
#[derive(Debug, Clone, Copy)]
pub struct HermiteTail {
    n: WaveIndex,
    half_line: f64,
}

impl HermiteTail {
    pub fn new(n: WaveIndex) -> Self {
        let half_line = hermite_integral(n, 0.0, hermite_cutoff(n));
        Self { n, half_line }
    }

    pub fn degree(&self) -> WaveIndex {
        self.n
    }

    /// `∫_0^∞ φ_n`.
    pub fn half_line(&self) -> f64 {
        self.half_line
    }

    /// `∫_ℝ φ_n`; zero for odd `n`.
    pub fn full_line(&self) -> f64 {
        if self.n % 2 == 1 {
            0.0
        } else {
            2.0 * self.half_line
        }
    }

    /// `∫_y^∞ φ_n`.
    pub fn tail(&self, y: f64) -> f64 {
        let c = hermite_cutoff(self.n);
        if y >= c {
            hermite_integral(self.n, y, y + 20.0)
        } else if y <= -c {
            self.full_line() - hermite_integral(self.n, y - 20.0, y)
        } else {
            self.half_line - hermite_integral(self.n, 0.0, y)
        }
    }
}

/// `∫_y^∞ φ_n(t) dt`.
pub fn hermite_tail_integral(n: WaveIndex, y: f64) -> f64 {
    HermiteTail::new(n).tail(y)
}

/// `sin(πt)/(πt)`.
pub fn sine_kernel(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        let p2 = PI * PI * t * t;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// `d/dt [sin(πt)/(πt)]`.
pub fn sine_kernel_deriv(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        let p2 = PI * PI;
        -p2 * t / 3.0 + p2 * p2 * t * t * t / 30.0
    } else {
        let pt = PI * t;
        (pt * pt.cos() - pt.sin()) / (PI * t * t)
    }
}

/// `∫_0^x sin(πt)/(πt) dt = Si(πx)/π`.
pub fn sine_kernel_integral(x: f64) -> f64 {
    let panels = (x.abs().ceil() as usize).max(1);
    integrate_panels(sine_kernel, 0.0, x, panels, 1e-14)
}

/// `√(4 − x²)/(2π)` on [−2, 2].
pub fn semicircle(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Phase and amplitude pieces of the two-term bulk expansion
/// `φ_n(2√(n+1) cos θ) ≈ (π sin θ)^{−1/2} n^{−1/4} (R + Q/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlancherelRotachTerms {
    pub theta: f64,
    /// `θ − sin(2θ)/2`.
    pub b_val: f64,
    /// `sin((n+1) b + π/4 − θ/2)`.
    pub r_val: f64,
    /// First-order correction coefficient.
    pub q_val: f64,
}

impl PlancherelRotachTerms {
    pub fn new(n: WaveIndex, theta: f64) -> Self {
        let b_val = theta - 0.5 * (2.0 * theta).sin();
        let psi = (n + 1) as f64 * b_val + 0.25 * PI - 0.5 * theta;
        let s = theta.sin();
        let cot = theta.cos() / s;
        let r_val = psi.sin();
        let q_val = (2.0 * theta).cos() / (8.0 * s * s) * r_val - (cot / 16.0 + 5.0 * cot.powi(3) / 48.0) * psi.cos();
        Self { theta, b_val, r_val, q_val }
    }
}

/// Bulk asymptotic approximation of `φ_n(2√(n+1) cos θ)`, accurate to
/// `O(n^{−2})` relative to the envelope `(π sin θ)^{−1/2} n^{−1/4}`.
pub fn plancherel_rotach(n: WaveIndex, theta: f64, eps_theta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("expansion needs n >= 1".into()));
    }
    if !(theta > eps_theta && theta < PI - eps_theta) {
        return Err(Error::InvalidArgument(format!("theta = {theta} outside ({eps_theta}, π − {eps_theta})")));
    }
    let nf = n as f64;
    let t = PlancherelRotachTerms::new(n, theta);
    Ok(plancherel_rotach_envelope(n, theta) * (t.r_val + t.q_val / nf))
}

/// `(π sin θ)^{−1/2} n^{−1/4}`.
pub fn plancherel_rotach_envelope(n: WaveIndex, theta: f64) -> f64 {
    (PI * theta.sin()).powf(-0.5) * (n as f64).powf(-0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_degrees() {
        assert_relative_eq!(hermite_wave(0, 0.0), (2.0 * PI).powf(-0.25), max_relative = 1e-15);
        assert_relative_eq!(hermite_wave(1, 1.0), (-0.25f64).exp() * (2.0 * PI).powf(-0.25), max_relative = 1e-15);
        // H_2 = x² − 1
        let x: f64 = 0.7;
        let expect = (-x * x / 4.0f64).exp() * (x * x - 1.0) / ((2.0 * PI).powf(0.25) * 2f64.sqrt());
        assert_relative_eq!(hermite_wave(2, x), expect, max_relative = 1e-14);
    }

    #[test]
    fn table_matches_pointwise() {
        let t = hermite_wave_table(40, 3.3);
        for k in [0, 1, 17, 40] {
            assert_eq!(t[k], hermite_wave(k, 3.3));
        }
    }

    #[test]
    fn large_argument_inside_bulk() {
        // φ_0 underflows at x = 100 but φ_4000 is O(n^{-1/4}) there.
        let v = hermite_wave(4000, 100.0);
        assert!(v.is_finite() && v != 0.0);
        assert!(v.abs() < 1.0);
    }

    #[test]
    fn scaled_derivative_examples() {
        assert!(hermite_wave_scaled_deriv(2, 0.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(hermite_wave_scaled_deriv(1, 0.0).unwrap(), hermite_wave(0, 0.0));
        assert!(hermite_wave_scaled_deriv(0, 0.3).is_err());
        let h = 1e-5;
        let fd = (hermite_wave(4, 2.0 * (0.3 + h)) - hermite_wave(4, 2.0 * (0.3 - h))) / (2.0 * h);
        assert!((hermite_wave_scaled_deriv(4, 0.3).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn gaussian_half_line() {
        let expect = PI.sqrt() * (2.0 * PI).powf(-0.25);
        assert_relative_eq!(HermiteTail::new(0).half_line(), expect, max_relative = 1e-12);
    }

    #[test]
    fn sine_kernel_values() {
        assert_eq!(sine_kernel(0.0), 1.0);
        assert!(sine_kernel(1.0).abs() < 1e-16);
        assert_relative_eq!(sine_kernel(0.5), 2.0 / PI, max_relative = 1e-15);
        assert_eq!(sine_kernel_deriv(0.0), 0.0);
        assert_eq!(sine_kernel_integral(0.0), 0.0);
    }

    #[test]
    fn semicircle_values() {
        assert_relative_eq!(semicircle(0.0), 1.0 / PI);
        assert_eq!(semicircle(2.0), 0.0);
        assert_eq!(semicircle(-2.0), 0.0);
    }

    #[test]
    fn expansion_window() {
        assert!(plancherel_rotach(100, 0.01, EPS_THETA).is_err());
        assert!(plancherel_rotach(100, PI - 0.01, EPS_THETA).is_err());
        let t = PlancherelRotachTerms::new(10, PI / 2.0);
        assert_relative_eq!(t.b_val, PI / 2.0, max_relative = 1e-15);
    }
}
