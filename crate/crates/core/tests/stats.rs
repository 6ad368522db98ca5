mod common;

use ancestry_core::exact_dists::num_alleles_pmf;
use ancestry_core::stats::*;
use ancestry_core::Error;

#[test]
fn watterson_for_tbl1y() {
    let h: f64 = (1..334).map(|j| 1.0 / j as f64).sum();
    let w = watterson_theta(278, 334).unwrap();
    assert!((w - 278.0 / h).abs() < 1e-12);
    assert_eq!(w.round(), 44.0);
}

#[test]
fn ewens_estimate_solves_its_equation() {
    for (k, n) in [(134u64, 334u64), (3, 8), (20, 21), (2, 1000)] {
        let got = ewens_mle_theta(k, n).unwrap();
        let want = common::ewens_root(k, n);
        assert!((got - want).abs() < 1e-8 * want, "k={k} n={n}: {got} vs {want}");
    }
}

#[test]
fn ewens_estimate_maximizes_allele_count_likelihood() {
    // K_n is sufficient: the root is also the maximizer of P(K_n = k; θ).
    let (k, n) = (5u32, 30u32);
    let th = ewens_mle_theta(k as u64, n as u64).unwrap();
    let l = |t: f64| num_alleles_pmf(n, t, k).unwrap();
    assert!(l(th) >= l(th * 1.01) && l(th) >= l(th * 0.99));
}

#[test]
fn ewens_boundaries() {
    assert!(matches!(ewens_mle_theta(1, 5), Err(Error::Boundary(_))));
    assert!(matches!(ewens_mle_theta(5, 5), Err(Error::Boundary(_))));
    assert!(ewens_mle_theta(6, 5).is_err());
}

#[test]
fn singleton_means() {
    let e = expected_singletons(334, 82.0);
    assert!((e - 82.0 * 334.0 / 415.0).abs() < 1e-12);
    let m = poisson_spectrum_approx(334, 82.0, 1).unwrap();
    assert!((m - 82.0 * 334.0 / 416.0).abs() < 1e-12);
    let m2 = poisson_spectrum_approx(334, 82.0, 2).unwrap();
    assert!((m2 - 41.0 * (334.0f64 / 416.0).powi(2)).abs() < 1e-12);
}

#[test]
fn poisson_tails_match_direct_sums() {
    for (obs, mean) in [(107u64, 65.84), (119, 92.27), (3, 10.0), (0, 1.0), (250, 100.0)] {
        let got = poisson_tail_test(obs, mean).unwrap();
        let want = common::poisson_upper(obs, mean);
        assert!((got - want).abs() <= 1e-10 * want, "{obs} {mean}: {got} vs {want}");
    }
    assert!(poisson_tail_test(3, 0.0).is_err());
}

#[test]
fn tajima_constants_by_hand() {
    // n = 4: a1 = 11/6, a2 = 49/36.
    let (a1, a2) = (11.0f64 / 6.0, 49.0f64 / 36.0);
    let b1 = 5.0 / 9.0;
    let b2 = 2.0 * 23.0 / 108.0;
    let c1 = b1 - 1.0 / a1;
    let c2 = b2 - 6.0 / (4.0 * a1) + a2 / (a1 * a1);
    let (e1, e2) = (c1 / a1, c2 / (a1 * a1 + a2));
    let (pi, s) = (2.5f64, 3.0f64);
    let want = (pi - s / a1) / (e1 * s + e2 * s * (s - 1.0)).sqrt();
    assert!((tajimas_d(pi, 3, 4).unwrap() - want).abs() < 1e-12);
}

#[test]
fn tajima_tbl1y_is_strongly_negative() {
    let d = tajimas_d(6.49, 278, 334).unwrap();
    assert!((d + 2.6).abs() < 0.05, "{d}");
}

#[test]
fn pi_from_spectrum() {
    // n = 5, sites with 1, 2 and 2 derived copies: (4 + 6 + 6)/10.
    assert!((pi_from_sfs(&[1, 2, 0, 0], 5).unwrap() - (4.0 + 2.0 * 6.0) / 10.0).abs() < 1e-15);
    assert!(pi_from_sfs(&[1, 2, 3, 4, 5], 5).is_err());
}

#[test]
fn factorial_moments_against_partition_enumeration() {
    // E[(α_1)_2 α_2] and E[α_3] by summing the ESF over all partitions of 7.
    let (n, theta) = (7u32, 1.4);
    let mut e12 = 0.0;
    let mut e3 = 0.0;
    for part in common::partitions(n) {
        let p = common::esf(&part, theta);
        let a = |j: u32| part.iter().filter(|&&c| c == j).count() as f64;
        e12 += p * a(1) * (a(1) - 1.0) * a(2);
        e3 += p * a(3);
    }
    let f = factorial_moment_check(n as u64, theta, &[2, 1]).unwrap();
    assert!((f.exact - e12).abs() < 1e-12, "{} vs {e12}", f.exact);
    let g = factorial_moment_check(n as u64, theta, &[0, 0, 1]).unwrap();
    assert!((g.exact - e3).abs() < 1e-12);
    assert!(f.poisson_limit > 0.0);
}
