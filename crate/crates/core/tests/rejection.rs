mod common;

use ancestry_core::exact_dists::cond_mean_ancestors;
use ancestry_core::genealogy::TimeModel;
use ancestry_core::parallel::with_threads;
use ancestry_core::rejection::*;

/// ∫_0^∞ g(u) u^s e^{-(1+θ)u} du / ∫_0^∞ u^s e^{-(1+θ)u} du: the posterior
/// of the two-line height given S_2 = s, by the midpoint rule.
fn gamma_posterior_mean(s: u32, theta: f64, g: impl Fn(f64) -> f64) -> f64 {
    let steps = 400_000;
    let du = 60.0 / steps as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..steps {
        let u = (i as f64 + 0.5) * du;
        let w = u.powi(s as i32) * (-(1.0 + theta) * u).exp();
        num += g(u) * w;
        den += w;
    }
    num / den
}

#[test]
fn algorithm3_matches_exact_conditional_mean() {
    for (r, t) in [(0u32, 0.3), (2, 0.3), (4, 0.9)] {
        let rep = run_algorithm3(5, r, ThetaPrior::Fixed { value: 1.0 }, TimeModel::Constant, &[t], 20_000, 17).unwrap();
        let want = cond_mean_ancestors(5, 1.0, t, r).unwrap();
        let e = rep.grid[0].ancestors;
        assert!((e.mean - want).abs() < 4.0 * e.std_error, "r={r} t={t}: {} vs {want} (se {})", e.mean, e.std_error);
        assert!(rep.grid[0].standing_sites.is_none());
    }
}

#[test]
fn two_line_height_and_standing_sites() {
    // Given T, the s mutations are uniform on 2T of branch, 2(T - t)^+ of it older than t.
    let (theta, s, t) = (0.8, 3u32, 0.4);
    let rep = run_algorithm4(2, s, ThetaPrior::Fixed { value: theta }, TimeModel::Constant, &[t], 30_000, 18).unwrap();
    let h = gamma_posterior_mean(s, theta, |u| u);
    assert!((rep.tmrca.mean - h).abs() < 4.0 * rep.tmrca.std_error, "{} vs {h}", rep.tmrca.mean);
    let st = gamma_posterior_mean(s, theta, |u| s as f64 * (1.0 - t / u).max(0.0));
    let e = rep.grid[0].standing_sites.unwrap();
    assert!((e.mean - st).abs() < 4.0 * e.std_error, "{} vs {st}", e.mean);
    assert_eq!(rep.draws.len(), 30_000);
}

#[test]
fn uniform_prior_posterior_mean() {
    // n = 2, s = 1: posterior ∝ θ/(1+θ)² on [0, 4].
    let steps = 100_000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..steps {
        let th = (i as f64 + 0.5) * 4.0 / steps as f64;
        let l = th / (1.0 + th).powi(2);
        num += th * l;
        den += l;
    }
    let want = num / den;
    let rep = run_algorithm3(2, 1, ThetaPrior::Uniform { low: 0.0, high: 4.0 }, TimeModel::Constant, &[0.5], 20_000, 19).unwrap();
    assert!((rep.theta.mean - want).abs() < 4.0 * rep.theta.std_error, "{} vs {want}", rep.theta.mean);
}

#[test]
fn acceptance_rate_matches_seg_sites_law() {
    // Accepted fraction = P(S_n = s) / Po(s){s} for fixed θ.
    let (n, s, theta) = (6u32, 2u32, 1.5);
    let rep = run_algorithm3(n, s, ThetaPrior::Fixed { value: theta }, TimeModel::Constant, &[1.0], 20_000, 20).unwrap();
    let ps = common::seg_sites_by_convolution(n, theta, 4)[s as usize];
    let po = (-(s as f64)).exp() * (s as f64).powi(s as i32) / 2.0;
    let want = ps / po;
    let se = (want * (1.0 - want) / rep.proposals as f64).sqrt();
    assert!((rep.acceptance_rate - want).abs() < 4.0 * se, "{} vs {want}", rep.acceptance_rate);
}

#[test]
fn growth_shortens_trees() {
    let c = run_algorithm3(10, 0, ThetaPrior::Fixed { value: 0.1 }, TimeModel::Constant, &[0.5], 5_000, 21).unwrap();
    let g = run_algorithm3(10, 0, ThetaPrior::Fixed { value: 0.1 }, TimeModel::exp_growth(3.0).unwrap(), &[0.5], 5_000, 21).unwrap();
    assert!(g.tmrca.mean < c.tmrca.mean);
}

#[test]
fn deterministic_across_threads() {
    let run = || run_algorithm4(8, 3, ThetaPrior::Gamma { shape: 2.0, rate: 1.0 }, TimeModel::Constant, &[0.2, 1.0], 3_000, 22);
    let a = with_threads(1, run).unwrap().unwrap();
    let b = with_threads(8, run).unwrap().unwrap();
    assert_eq!(a, b);
}

#[test]
fn rejects_bad_options() {
    let p = ThetaPrior::Fixed { value: 1.0 };
    assert!(run_algorithm3(1, 0, p, TimeModel::Constant, &[0.5], 10, 1).is_err());
    assert!(run_algorithm3(5, 0, p, TimeModel::Constant, &[], 10, 1).is_err());
    assert!(run_algorithm3(5, 0, p, TimeModel::Constant, &[-1.0], 10, 1).is_err());
    assert!(run_algorithm3(5, 0, p, TimeModel::Constant, &[0.5], 0, 1).is_err());
}
