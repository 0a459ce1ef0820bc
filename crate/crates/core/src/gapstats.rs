//! Smallest-gap statistics: the rescaled gap process, its Poisson limit, and
//! the law of the normalized k-th smallest gap.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::beta::Beta;
use crate::ensembles::{sample_spectrum, EnsembleParams, Spectrum};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special_functions::semicircle;

/// Default distance of the location window from the spectral edges.
pub const GAP_EPSILON: f64 = 0.1;

/// Pearson bins are pooled from the top until each expects at least this many.
pub const MIN_EXPECTED: f64 = 5.0;

/// One consecutive gap: `n^{(β+2)/(β+1)} (λ_{i+1} − λ_i)` and `λ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRecord {
    pub rescaled_gap: f64,
    pub location: f64,
}

/// Rescaled gaps whose left endpoint lies in `(−2+ε, 2−ε)`.
pub fn extract_gaps(s: &Spectrum, epsilon: f64) -> Vec<GapRecord> {
    let scale = (s.params.n as f64).powf(s.params.beta.gap_exponent());
    s.values
        .windows(2)
        .filter(|w| w[0] > -2.0 + epsilon && w[0] < 2.0 - epsilon)
        .map(|w| GapRecord { rescaled_gap: scale * (w[1] - w[0]), location: w[0] })
        .collect()
}

/// Gap size window `A` (a union of intervals `(a, b]`), location interval
/// `I`, and the rank `k` of the gap whose law is tested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapLawSpec {
    pub beta: Beta,
    pub k: usize,
    pub interval: (f64, f64),
    pub window: Vec<(f64, f64)>,
}

impl GapLawSpec {
    pub fn new(beta: Beta, k: usize, interval: (f64, f64), window: Vec<(f64, f64)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let (lo, hi) = interval;
        if !(lo > -2.0 && hi < 2.0 && lo < hi) {
            return Err(Error::InvalidArgument(format!("interval ({lo}, {hi}) must lie inside (-2, 2)")));
        }
        for &(a, b) in &window {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("window interval ({a}, {b}] must satisfy 0 <= a < b")));
            }
        }
        Ok(Self { beta, k, interval, window })
    }

    /// `I = (−2+ε, 2−ε)` and `A = (0, 1]`.
    pub fn bulk_default(beta: Beta, k: usize, epsilon: f64) -> Result<Self> {
        Self::new(beta, k, (-2.0 + epsilon, 2.0 - epsilon), vec![(0.0, 1.0)])
    }

    pub fn contains_location(&self, x: f64) -> bool {
        x > self.interval.0 && x < self.interval.1
    }

    pub fn contains_gap(&self, u: f64) -> bool {
        self.window.iter().any(|&(a, b)| u > a && u <= b)
    }

    /// `∫_I (2πρ_sc(x))^{β+2} dx`.
    pub fn location_integral(&self) -> f64 {
        let p = self.beta.value() + 2.0;
        let f = |x: f64| (2.0 * std::f64::consts::PI * semicircle(x)).powf(p);
        integrate(f, self.interval.0, self.interval.1, 1e-13)
    }

    /// `(1/c_β) ∫_A u^β du`.
    pub fn window_moment(&self) -> f64 {
        let b = self.beta.value();
        let m: f64 = self.window.iter().map(|&(a, c)| (c.powf(b + 1.0) - a.powf(b + 1.0)) / (b + 1.0)).sum();
        m / self.beta.gap_constant()
    }
}

/// Limiting mean of `Υ_n(A × I)`.
pub fn theoretical_intensity(spec: &GapLawSpec) -> f64 {
    spec.window_moment() * spec.location_integral()
}

/// `1 − e^{−x^{β+1}} Σ_{j<k} x^{(β+1)j}/j!`.
pub fn tau_k_cdf(beta: Beta, k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x.powf(beta.value() + 1.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= y / j as f64;
        sum += term;
    }
    (1.0 - (-y).exp() * sum).clamp(0.0, 1.0)
}

/// `(β+1)/(k−1)! x^{k(β+1)−1} e^{−x^{β+1}}`.
pub fn tau_k_density(beta: Beta, k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let b1 = beta.value() + 1.0;
    let log_fact: f64 = (1..k).map(|j| (j as f64).ln()).sum();
    (b1.ln() - log_fact + (k as f64 * b1 - 1.0) * x.ln() - x.powf(b1)).exp()
}

/// Factor turning the k-th smallest raw gap in `I` into `τ_k`.
pub fn tau_k_normalization(spec: &GapLawSpec, n: usize) -> f64 {
    let b1 = spec.beta.value() + 1.0;
    let c = spec.location_integral() / (b1 * spec.beta.gap_constant());
    c.powf(1.0 / b1) * (n as f64).powf(spec.beta.gap_exponent())
}

/// `τ_k` of one spectrum, or `None` when fewer than `k` gaps start in `I`.
pub fn tau_k_normalize(s: &Spectrum, spec: &GapLawSpec) -> Option<f64> {
    let mut gaps: Vec<f64> =
        s.values.windows(2).filter(|w| spec.contains_location(w[0])).map(|w| w[1] - w[0]).collect();
    if gaps.len() < spec.k {
        return None;
    }
    let (_, kth, _) = gaps.select_nth_unstable_by(spec.k - 1, f64::total_cmp);
    Some(tau_k_normalization(spec, s.params.n) * *kth)
}

/// `Υ_n(A × I)` for one spectrum.
pub fn count_in_window(records: &[GapRecord], spec: &GapLawSpec) -> u64 {
    records.iter().filter(|r| spec.contains_location(r.location) && spec.contains_gap(r.rescaled_gap)).count() as u64
}

/// `sup_x |F_m(x) − F(x)|` for the empirical CDF of `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("KS statistic needs samples".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / m - f).max(f - i as f64 / m);
    }
    Ok(d)
}

/// Pearson goodness-of-fit of counts against Poisson(μ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonTest {
    /// Lower edge of each bin; the last bin is open above.
    pub bin_starts: Vec<u64>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Bins `{0}, {1}, {2}, {≥3}`, merged from the top while a bin expects fewer
/// than [`MIN_EXPECTED`] counts. With a single bin left, `p = 1`.
pub fn poisson_count_test(counts: &[u64], mu: f64) -> Result<PoissonTest> {
    if counts.is_empty() || mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidArgument("Poisson test needs counts and mu > 0".into()));
    }
    let total = counts.len() as f64;
    let pmf = |j: u64| (-mu + j as f64 * mu.ln() - (1..=j).map(|i| (i as f64).ln()).sum::<f64>()).exp();
    let mut bin_starts: Vec<u64> = vec![0, 1, 2, 3];
    let probs = |starts: &[u64]| -> Vec<f64> {
        let mut p: Vec<f64> = starts.windows(2).map(|w| (w[0]..w[1]).map(pmf).sum()).collect();
        p.push(1.0 - p.iter().sum::<f64>());
        p
    };
    while bin_starts.len() > 1 && *probs(&bin_starts).last().unwrap() * total < MIN_EXPECTED {
        bin_starts.pop();
    }
    let p = probs(&bin_starts);
    let expected: Vec<f64> = p.iter().map(|q| q * total).collect();
    let mut observed = vec![0u64; bin_starts.len()];
    for &c in counts {
        let b = bin_starts.iter().rposition(|&s| c >= s).unwrap_or(0);
        observed[b] += 1;
    }
    let chi_square: f64 = observed.iter().zip(&expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    let dof = bin_starts.len() - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        1.0 - dist.cdf(chi_square)
    };
    Ok(PoissonTest { bin_starts, observed, expected, chi_square, dof, p_value })
}

/// Per-draw outcome of a gap experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawOutcome {
    pub draw: u64,
    pub tau_k: Option<f64>,
    pub count: u64,
}

/// Monte Carlo comparison of the gap process with its limit laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapExperiment {
    pub beta: Beta,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub spec: GapLawSpec,
    pub ks: f64,
    pub p_poisson: f64,
    pub mu_theory: f64,
    pub mu_empirical: f64,
    pub skipped_draws: u64,
    pub poisson: PoissonTest,
    #[serde(skip)]
    pub draws: Vec<DrawOutcome>,
}

/// Samples `trials` spectra and tests `τ_k` against [`tau_k_cdf`] and the
/// counts `Υ_n(A × I)` against Poisson([`theoretical_intensity`]).
pub fn run_gap_experiment(params: &EnsembleParams, trials: u64, spec: &GapLawSpec) -> Result<GapExperiment> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if spec.beta != params.beta {
        return Err(Error::InvalidArgument("law and ensemble disagree on beta".into()));
    }
    let eps = (2.0 + spec.interval.0).min(2.0 - spec.interval.1);
    let draws: Vec<DrawOutcome> = (0..trials)
        .into_par_iter()
        .map(|d| {
            let s = sample_spectrum(params, d)?;
            let records = extract_gaps(&s, eps);
            Ok(DrawOutcome { draw: d, tau_k: tau_k_normalize(&s, spec), count: count_in_window(&records, spec) })
        })
        .collect::<Result<_>>()?;
    let taus: Vec<f64> = draws.iter().filter_map(|o| o.tau_k).collect();
    let skipped_draws = trials - taus.len() as u64;
    let ks = ks_statistic(&taus, |x| tau_k_cdf(spec.beta, spec.k, x))?;
    let counts: Vec<u64> = draws.iter().map(|o| o.count).collect();
    let mu_theory = theoretical_intensity(spec);
    let poisson = poisson_count_test(&counts, mu_theory)?;
    let mu_empirical = counts.iter().sum::<u64>() as f64 / trials as f64;
    Ok(GapExperiment {
        beta: spec.beta,
        n: params.n,
        trials,
        seed: params.seed,
        spec: spec.clone(),
        ks,
        p_poisson: poisson.p_value,
        mu_theory,
        mu_empirical,
        skipped_draws,
        poisson,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_examples() {
        assert_relative_eq!(tau_k_cdf(Beta::Four, 1, 1.0), 1.0 - (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(tau_k_cdf(Beta::Two, 2, 0.0), 0.0);
        assert!((tau_k_cdf(Beta::One, 3, 10.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_bulk_gives_no_gaps() {
        let p = EnsembleParams::new(Beta::Two, 10, 0).unwrap();
        let s = sample_spectrum(&p, 0).unwrap();
        assert!(extract_gaps(&s, 2.0).is_empty());
        let left = &s.values[..s.values.len() - 1];
        assert_eq!(extract_gaps(&s, 0.0).len(), left.iter().filter(|&&x| x.abs() < 2.0).count());
    }

    #[test]
    fn constant_samples_are_far_from_continuous_law() {
        let d = ks_statistic(&[1.0; 50], |x| tau_k_cdf(Beta::Two, 1, x)).unwrap();
        assert!(d >= 0.5);
        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn symplectic_constant() {
        assert!((Beta::Four.gap_constant() - 5329.58).abs() < 0.01);
    }

    #[test]
    fn pooling_drops_sparse_bins() {
        let counts = vec![0u64; 100];
        let t = poisson_count_test(&counts, 0.01).unwrap();
        assert_eq!(t.dof, 0);
        assert_eq!(t.p_value, 1.0);
        let counts: Vec<u64> = (0..1000).map(|i| i % 4).collect();
        let t = poisson_count_test(&counts, 1.5).unwrap();
        assert_eq!(t.bin_starts, vec![0, 1, 2, 3]);
        assert!(t.p_value < 1e-6);
    }
}
