use std::f64::consts::{E, PI};

use blf::*;
use ndarray::Array2;
use proptest::prelude::*;

#[test]
fn ar1_zero_frequency_power() {
    let spec = ar_spectrum(&Array2::from_elem((3, 1), 0.9), &[1.0; 3], &default_frequency_grid()).unwrap();
    for t in 0..3 {
        assert!((spec.values[[t, 0]] - 100.0).abs() <= 1e-12);
    }
}

#[test]
fn tvar2_peak_at_root_angle() {
    let freqs = frequency_grid(0.001).unwrap();
    let a1 = 1.2;
    let spec = ar_spectrum(&Array2::from_shape_vec((1, 2), vec![a1, -0.81]).unwrap(), &[1.0], &freqs).unwrap();
    let row = spec.values.row(0);
    let peak = (0..freqs.len()).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
    let expected = (a1 / 1.8).acos() / (2.0 * PI);
    assert!((freqs[peak] - expected).abs() <= 0.001, "{} vs {expected}", freqs[peak]);
}

#[test]
fn variance_scaling_is_exact() {
    let coeffs = Array2::from_shape_vec((2, 2), vec![0.5, -0.3, 1.1, -0.6]).unwrap();
    let freqs = default_frequency_grid();
    let base = ar_spectrum(&coeffs, &[1.0, 2.0], &freqs).unwrap();
    let scaled = ar_spectrum(&coeffs, &[4.0, 8.0], &freqs).unwrap();
    for ((t, l), &v) in base.values.indexed_iter() {
        assert_eq!(scaled.values[[t, l]], 4.0 * v);
    }
}

#[test]
fn ase_identities() {
    let freqs = default_frequency_grid();
    let coeffs = Array2::from_shape_vec((2, 2), vec![0.5, -0.3, 1.1, -0.6]).unwrap();
    let a = ar_spectrum(&coeffs, &[1.0, 1.0], &freqs).unwrap();
    assert_eq!(ase(&a, &a).unwrap(), 0.0);
    let b = ar_spectrum(&coeffs, &[E, E], &freqs).unwrap();
    assert!((ase(&b, &a).unwrap() - 1.0).abs() < 1e-12);
    let c = ar_spectrum(&Array2::zeros((2, 2)), &[1.0, 1.0], &freqs).unwrap();
    assert_eq!(ase(&a, &c).unwrap(), ase(&c, &a).unwrap());
    assert!(ase(&a, &c).unwrap() > 0.0);
}

#[test]
fn ase_grid_refinement_is_stable() {
    let coeffs = Array2::from_shape_vec((2, 1), vec![0.5, 0.7]).unwrap();
    let flat = Array2::from_shape_vec((2, 1), vec![0.4, 0.6]).unwrap();
    let score = |step: f64| {
        let f = frequency_grid(step).unwrap();
        ase(
            &ar_spectrum(&coeffs, &[1.0, 1.0], &f).unwrap(),
            &ar_spectrum(&flat, &[1.0, 1.0], &f).unwrap(),
        )
        .unwrap()
    };
    // the endpoint-inclusive grid mean converges at first order in the step
    let (a, b, c) = (score(0.005), score(0.0025), score(0.00125));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 2.0).abs() < 0.1, "{a} {b} {c}: ratio {ratio}");
    assert!((b - c).abs() / c < 0.01);
}

#[test]
fn static_posterior_has_negligible_spread() {
    let sim = gen_tvar2(4000, 41).unwrap();
    let prior = NigPrior::from_signal(&sim.x, PRIOR_SEGMENT).unwrap();
    let d = DiscountPair::new(1.0, 1.0).unwrap();
    let (run, _) = fit_fixed(&sim.x, 2, d, &prior).unwrap();
    let sampler = LatticePosterior::new(&run, 2).unwrap();
    let post = spectrum_posterior(&sampler, 50, &default_frequency_grid(), 1).unwrap();
    let max_sd = post.sd_log.iter().cloned().fold(0.0, f64::max);
    assert!(max_sd < 0.2, "{max_sd}");
    // every time slice of a static fit is the same
    assert_eq!(post.sd_log.row(0), post.sd_log.row(3999));
}

#[test]
fn white_noise_posterior_sd_is_flat() {
    let sim = gen_tvvar(
        600,
        42,
        &vec![1.0; 600],
        &Array2::zeros((600, 1)),
    )
    .unwrap();
    let prior = NigPrior::from_signal(&sim.x, PRIOR_SEGMENT).unwrap();
    let d = DiscountPair::new(0.99, 0.99).unwrap();
    let (run, _) = fit_fixed(&sim.x, 1, d, &prior).unwrap();
    let sampler = LatticePosterior::new(&run, 1).unwrap();
    let post = spectrum_posterior(&sampler, 200, &default_frequency_grid(), 2).unwrap();
    for t in [0, 299, 599] {
        let row = post.sd_log.row(t);
        let hi = row.iter().cloned().fold(0.0, f64::max);
        let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 5.0, "t = {t}: {hi} / {lo}");
    }
}

#[test]
fn more_draws_stay_within_monte_carlo_error() {
    let sim = gen_tvar2(200, 43).unwrap();
    let prior = NigPrior::from_signal(&sim.x, PRIOR_SEGMENT).unwrap();
    let d = DiscountPair::new(0.97, 0.99).unwrap();
    let (run, _) = fit_fixed(&sim.x, 2, d, &prior).unwrap();
    let sampler = LatticePosterior::new(&run, 2).unwrap();
    let freqs = frequency_grid(0.05).unwrap();
    let a = spectrum_posterior(&sampler, 1000, &freqs, 3).unwrap();
    let b = spectrum_posterior(&sampler, 2000, &freqs, 4).unwrap();
    let se = b.mc_standard_error();
    let a_se = a.mc_standard_error();
    for ((t, l), &m) in a.mean_log.indexed_iter() {
        let tol = 3.0 * (se[[t, l]].powi(2) + a_se[[t, l]].powi(2)).sqrt();
        assert!((m - b.mean_log[[t, l]]).abs() < tol.max(1e-12), "cell ({t}, {l})");
    }
}

#[test]
fn posterior_is_seed_deterministic_and_extends() {
    let sim = gen_tvar2(120, 44).unwrap();
    let prior = NigPrior::from_signal(&sim.x, PRIOR_SEGMENT).unwrap();
    let d = DiscountPair::new(0.95, 0.98).unwrap();
    let (run, _) = fit_fixed(&sim.x, 2, d, &prior).unwrap();
    let sampler = LatticePosterior::new(&run, 2).unwrap();
    let freqs = frequency_grid(0.1).unwrap();
    let a = spectrum_posterior(&sampler, 64, &freqs, 9).unwrap();
    let b = spectrum_posterior(&sampler, 64, &freqs, 9).unwrap();
    assert_eq!(a, b);
    assert!(spectrum_posterior(&sampler, 1, &freqs, 9).is_err());
    assert_eq!(a.mean_spectrogram().n_freqs(), freqs.len());
}

proptest! {
    #[test]
    fn ase_symmetric_nonnegative(
        c1 in prop::collection::vec(-0.6f64..0.6, 6),
        c2 in prop::collection::vec(-0.6f64..0.6, 6),
    ) {
        let f = frequency_grid(0.05).unwrap();
        let a = ar_spectrum(&Array2::from_shape_vec((3, 2), c1).unwrap(), &[1.0; 3], &f).unwrap();
        let b = ar_spectrum(&Array2::from_shape_vec((3, 2), c2).unwrap(), &[1.5; 3], &f).unwrap();
        let ab = ase(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ase(&b, &a).unwrap());
        prop_assert!(a.values.iter().all(|&v| v > 0.0));
    }
}
