use approx::assert_relative_eq;
use blf::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut prev = 0.0;
    for _ in 0..200 {
        let e: f64 = rng.sample(StandardNormal);
        prev = phi * prev + e;
    }
    for v in x.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        prev = phi * prev + e;
        *v = prev;
    }
    x
}

#[test]
fn three_step_static_regression_matches_closed_form() {
    let y = [1.0, 2.0, 1.5];
    let x = [1.0, 1.0, 1.0];
    let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
    let fs = forward_filter(&y, &x, &prior, DiscountPair::new(1.0, 1.0).unwrap()).unwrap();
    // precision 1 + 3, mean 4.5 / 4, kappa 1 + 7.25 - 4.5^2 / 4
    assert_relative_eq!(fs.mu[2], 1.125, max_relative = 1e-12);
    assert_relative_eq!(fs.c[2] / fs.s[2], 0.25, max_relative = 1e-12);
    assert_eq!(fs.v[2], 4.0);
    assert_relative_eq!(fs.kappa[2], 8.25 - 5.0625, max_relative = 1e-12);
}

#[test]
fn true_lag_beats_useless_regressor() {
    let x = ar1(201, 0.9, 3);
    let y = &x[1..];
    let lag = &x[..200];
    let prior = NigPrior::from_signal(y, PRIOR_SEGMENT).unwrap();
    let d = DiscountPair::new(0.99, 0.99).unwrap();
    let good = predictive_loglik(&forward_filter(y, lag, &prior, d).unwrap()).unwrap();
    let bad = predictive_loglik(&forward_filter(y, &[0.0; 200], &prior, d).unwrap()).unwrap();
    assert!(good > bad, "{good} <= {bad}");
}

#[test]
fn loglik_is_deterministic() {
    let x = ar1(101, 0.5, 4);
    let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
    let d = DiscountPair::new(0.95, 0.9).unwrap();
    let a = predictive_loglik(&forward_filter(&x[1..], &x[..100], &prior, d).unwrap()).unwrap();
    let b = predictive_loglik(&forward_filter(&x[1..], &x[..100], &prior, d).unwrap()).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn smoother_boundary_is_filter_state() {
    let x = ar1(51, 0.7, 5);
    let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
    let d = DiscountPair::new(0.9, 0.95).unwrap();
    let fs = forward_filter(&x[1..], &x[..50], &prior, d).unwrap();
    let ss = backward_smooth(&fs, d).unwrap();
    let last = 49;
    assert_eq!(ss.mu[last].to_bits(), fs.mu[last].to_bits());
    assert_eq!(ss.c[last].to_bits(), fs.c[last].to_bits());
    assert_eq!(ss.v[last].to_bits(), fs.v[last].to_bits());
    assert_eq!(ss.s[last].to_bits(), fs.s[last].to_bits());
    assert_eq!(ss.kappa[last].to_bits(), fs.kappa[last].to_bits());
}

#[test]
fn static_limit_smoothing_is_constant() {
    let x = ar1(41, 0.4, 6);
    let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
    let d = DiscountPair::new(1.0, 1.0).unwrap();
    let fs = forward_filter(&x[1..], &x[..40], &prior, d).unwrap();
    let ss = backward_smooth(&fs, d).unwrap();
    for t in 0..40 {
        assert_eq!(ss.mu[t], fs.mu[39]);
        assert_relative_eq!(ss.c[t], fs.c[39], max_relative = 1e-12);
        assert_relative_eq!(ss.s[t], fs.s[39], max_relative = 1e-12);
    }
}

#[test]
fn smoothed_variance_matches_sampled_paths() {
    // Under delta = 1 the smoothed marginal is exact, so the sampler must reproduce it.
    let x = ar1(51, 0.8, 7);
    let prior = NigPrior::from_signal(&x, PRIOR_SEGMENT).unwrap();
    let d = DiscountPair::new(0.9, 1.0).unwrap();
    let fs = forward_filter(&x[1..], &x[..50], &prior, d).unwrap();
    let ss = backward_smooth(&fs, d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let draws = 4000;
    let mut sum = [0.0; 50];
    let mut sum2 = [0.0; 50];
    for _ in 0..draws {
        let p = backward_sample(&fs, d, &mut rng).unwrap();
        for t in 0..50 {
            sum[t] += p.theta[t];
            sum2[t] += p.theta[t] * p.theta[t];
        }
    }
    for t in 0..50 {
        let m = sum[t] / draws as f64;
        let var = sum2[t] / draws as f64 - m * m;
        let target = ss.coef_variance(t).unwrap();
        assert!((var / target - 1.0).abs() < 0.15, "t = {t}: {var} vs {target}");
        // interior smoothing never inflates the filtered scale tenfold
        assert!(ss.c[t] <= 10.0 * fs.c[t]);
    }
}

#[test]
fn sampler_is_reproducible_per_seed() {
    let x = ar1(31, 0.6, 8);
    let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
    let d = DiscountPair::new(0.95, 0.95).unwrap();
    let fs = forward_filter(&x[1..], &x[..30], &prior, d).unwrap();
    let a = backward_sample(&fs, d, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = backward_sample(&fs, d, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a, b);
    assert!(a.sigma2.iter().all(|&s| s > 0.0));
}

#[test]
fn length_mismatch_rejected() {
    let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
    let d = DiscountPair::new(0.9, 0.9).unwrap();
    assert!(matches!(
        forward_filter(&[1.0, 2.0], &[1.0], &prior, d),
        Err(BlfError::LengthMismatch { .. })
    ));
    assert!(DiscountPair::new(0.0, 0.5).is_err());
    assert!(DiscountPair::new(0.5, 1.01).is_err());
    assert!(NigPrior::new(0.0, -1.0, 1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn scales_stay_positive(
        data in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60),
        gamma in 0.05f64..=1.0,
        delta in 0.05f64..=1.0,
    ) {
        let (y, x): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
        let prior = NigPrior::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let d = DiscountPair::new(gamma, delta).unwrap();
        let fs = forward_filter(&y, &x, &prior, d).unwrap();
        let ss = backward_smooth(&fs, d).unwrap();
        for t in 0..y.len() {
            prop_assert!(fs.c[t] > 0.0 && fs.s[t] > 0.0 && fs.q[t] > 0.0 && fs.v[t] > 0.0);
            prop_assert!(ss.c[t] > 0.0 && ss.s[t] > 0.0 && ss.v[t] > 0.0);
            prop_assert_eq!(fs.s[t], fs.kappa[t] / fs.v[t]);
        }
        prop_assert!(predictive_loglik(&fs).unwrap().is_finite());
    }

    #[test]
    fn reduced_evolution_form_agrees(c in 1e-3f64..1e3, gamma in 0.05f64..=1.0) {
        let w = c * (1.0 - gamma) / gamma;
        prop_assert!(((c + w) - c / gamma).abs() <= 1e-12 * (c / gamma));
    }
}
