//! Property tests for the algebraic invariants of the library.

use nalgebra::DMatrix;
use proptest::prelude::*;

use gapforge::correlations::{assemble_correlation_matrix, rho, round1_transform, round2_transform, GapConfiguration};
use gapforge::ensembles::{sample_spectrum, EnsembleParams};
use gapforge::gapstats::{ks_statistic, poisson_count_test, tau_k_cdf, theoretical_intensity, GapLawSpec};
use gapforge::kernels::{GoeKernel, GseKernel};
use gapforge::pfaffian::{congruence_transform, pfaffian_combinatorial, pfaffian_numeric, SkewMatrix};
use gapforge::special_functions::sine_kernel_integral;
use gapforge::Beta;

fn skew(dim: usize, vals: &[f64]) -> SkewMatrix {
    let mut it = vals.iter().cycle();
    SkewMatrix::from_upper(dim, |_, _| *it.next().unwrap()).unwrap()
}

fn any_beta() -> impl Strategy<Value = Beta> {
    prop_oneof![Just(Beta::One), Just(Beta::Two), Just(Beta::Four)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfaffian_methods_agree(half in 1usize..=5, vals in prop::collection::vec(-3.0f64..3.0, 45)) {
        let m = skew(2 * half, &vals);
        let pc = pfaffian_combinatorial(&m).unwrap();
        let pn = pfaffian_numeric(&m);
        prop_assert!((pc - pn).abs() <= 1e-10 * (1.0 + pc.abs()));
    }

    #[test]
    fn pfaffian_congruence(half in 1usize..=4, vals in prop::collection::vec(-2.0f64..2.0, 28),
                           a in prop::collection::vec(-2.0f64..2.0, 64)) {
        let dim = 2 * half;
        let m = skew(dim, &vals);
        let a = DMatrix::from_fn(dim, dim, |i, j| a[i * 8 + j]);
        let lhs = pfaffian_numeric(&congruence_transform(&m, &a).unwrap());
        let rhs = a.determinant() * pfaffian_numeric(&m);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn pfaffian_squares_to_determinant(half in 1usize..=5, vals in prop::collection::vec(-3.0f64..3.0, 45)) {
        let m = skew(2 * half, &vals);
        let pf = pfaffian_numeric(&m);
        let det = m.as_matrix().clone().determinant();
        prop_assert!((pf * pf - det).abs() <= 1e-9 * (1.0 + det.abs()));
    }

    #[test]
    fn tau_cdf_is_monotone(beta in any_beta(), k in 1usize..5, x in 0.0f64..3.0, dx in 0.0f64..1.0) {
        let (a, b) = (tau_k_cdf(beta, k, x), tau_k_cdf(beta, k, x + dx));
        prop_assert!((0.0..=1.0).contains(&a) && a <= b);
        // A larger rank is stochastically larger.
        prop_assert!(tau_k_cdf(beta, k + 1, x) <= a);
    }

    #[test]
    fn intensity_scales_with_window(beta in any_beta(), t in 0.05f64..3.0) {
        let unit = GapLawSpec::new(beta, 1, (-1.9, 1.9), vec![(0.0, 1.0)]).unwrap();
        let scaled = GapLawSpec::new(beta, 1, (-1.9, 1.9), vec![(0.0, t)]).unwrap();
        let expect = theoretical_intensity(&unit) * t.powf(beta.value() + 1.0);
        prop_assert!((theoretical_intensity(&scaled) - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn ks_and_poisson_outputs_are_probabilities(xs in prop::collection::vec(0.0f64..3.0, 1..200),
                                               counts in prop::collection::vec(0u64..6, 20..200),
                                               mu in 0.1f64..3.0) {
        let d = ks_statistic(&xs, |x| tau_k_cdf(Beta::Two, 1, x)).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        let p = poisson_count_test(&counts, mu).unwrap();
        prop_assert!((0.0..=1.0).contains(&p.p_value));
        prop_assert_eq!(p.observed.iter().sum::<u64>(), counts.len() as u64);
    }

    #[test]
    fn sine_integral_is_odd(x in -20.0f64..20.0) {
        prop_assert!((sine_kernel_integral(x) + sine_kernel_integral(-x)).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symplectic_kernel_relations(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let k = GseKernel::new(6).unwrap();
        prop_assert!((k.v(x, y) + k.v(y, x)).abs() < 1e-10);
        prop_assert_eq!(k.j(x, y), -k.j(y, x));
        let h = 1e-5;
        let ds_dy = (k.s(x, y + h) - k.s(x, y - h)) / (2.0 * h);
        prop_assert!((ds_dy + k.v(x, y)).abs() < 1e-5 * (1.0 + k.v(x, y).abs()));
        let dj_dx = (k.j(x + h, y) - k.j(x - h, y)) / (2.0 * h);
        prop_assert!((dj_dx - k.s(x, y)).abs() < 1e-5);
    }

    #[test]
    fn orthogonal_kernel_relations(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let k = GoeKernel::new(6).unwrap();
        prop_assert!((k.v(x, y) + k.v(y, x)).abs() < 1e-10);
        prop_assert!((k.j(x, y) + k.j(y, x)).abs() < 1e-12);
        let h = 1e-5;
        let ds_dy = (k.s(x, y + h) - k.s(x, y - h)) / (2.0 * h);
        prop_assert!((ds_dy + k.v(x, y)).abs() < 1e-5 * (1.0 + k.v(x, y).abs()));
    }

    #[test]
    fn correlations_are_nonnegative(beta in prop_oneof![Just(Beta::One), Just(Beta::Four)],
                                    a in -1.5f64..1.3, gap in 0.0f64..0.5, b in -1.5f64..1.5) {
        let cfg = GapConfiguration::new(beta, 8, vec![(a, a + gap)]).unwrap();
        prop_assert!(rho(&cfg, &[]).unwrap().total >= -1e-12);
        let cfg = GapConfiguration::new(beta, 8, vec![(a, a + gap), (b, b + 0.3)]).unwrap();
        prop_assert!(rho(&cfg, &[]).unwrap().total >= -1e-12);
    }

    #[test]
    fn reductions_preserve_the_pfaffian(beta in prop_oneof![Just(Beta::One), Just(Beta::Four)],
                                        l1 in -1.2f64..-0.2, l2 in 0.2f64..1.2,
                                        u1 in 0.2f64..1.0, u2 in 0.2f64..1.0) {
        // Gaps of a few mean spacings keep the cancellation in Pf mild.
        let n = 40;
        let pairs = vec![(l1, l1 + u1 / n as f64), (l2, l2 + u2 / n as f64)];
        let cfg = GapConfiguration::new(beta, n, pairs.clone()).unwrap();
        let m = assemble_correlation_matrix(&cfg, &[]).unwrap();
        let pf = pfaffian_numeric(&m);
        let r1 = round1_transform(&m, &pairs).unwrap();
        let r2 = round2_transform(&r1, n, beta).unwrap();
        prop_assert!((pfaffian_numeric(&r1) - pf).abs() <= 1e-9 * pf.abs());
        prop_assert!((pfaffian_numeric(&r2) - pf).abs() <= 1e-9 * pf.abs());
    }

    #[test]
    fn spectra_are_sorted_and_reproducible(beta in any_beta(), n in 2usize..60, seed in 0u64..1000) {
        let p = EnsembleParams::new(beta, n, seed).unwrap();
        let s = sample_spectrum(&p, 0).unwrap();
        prop_assert_eq!(s.values.len(), n);
        prop_assert!(s.values.windows(2).all(|w| w[0] < w[1]));
        let again = sample_spectrum(&p, 0).unwrap();
        prop_assert_eq!(s.values, again.values);
    }
}
