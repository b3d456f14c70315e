use std::f64::consts::PI;

use blf::simgen::{piecewise_coefficients, tvar6_thetas, TVAR6_MODULI};
use blf::*;
use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

fn reciprocal_roots(phi: &[f64]) -> Vec<Complex64> {
    let p = phi.len();
    let mut comp = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        comp[(0, j)] = phi[j];
    }
    for i in 1..p {
        comp[(i, i - 1)] = 1.0;
    }
    // Schur iteration can stall on raw companion matrices; rotate first
    let q = DMatrix::from_fn(p, p, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 5.0 } else { 0.0 })
        .qr()
        .q();
    Schur::try_new(q.transpose() * comp * &q, 1e-15, 10_000)
        .expect("Schur iteration converges")
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect()
}

#[test]
fn roots_round_trip() {
    let n = 1024;
    for t in [1.0, 300.0, 512.0, 1024.0] {
        let thetas = tvar6_thetas(t, n);
        let phi = roots_to_coeffs(&TVAR6_MODULI, &thetas).unwrap();
        let mut upper: Vec<Complex64> = reciprocal_roots(&phi).into_iter().filter(|z| z.im > 0.0).collect();
        upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        assert_eq!(upper.len(), 3);
        for (j, z) in upper.iter().enumerate() {
            assert!((1.0 / z.norm() - TVAR6_MODULI[j]).abs() < 1e-8);
            assert!((z.arg() / (2.0 * PI) - thetas[j]).abs() < 1e-8);
        }
    }
}

#[test]
fn expansion_matches_polynomial_product() {
    let thetas = [0.05, 0.25, 0.45];
    let phi = roots_to_coeffs(&TVAR6_MODULI, &thetas).unwrap();
    // multiply out prod_j (1 - a_j B)(1 - conj(a_j) B) with complex arithmetic
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for (a, th) in TVAR6_MODULI.iter().zip(thetas) {
        let r = Complex64::from_polar(1.0 / a, 2.0 * PI * th);
        for root in [r, r.conj()] {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * root;
            }
            poly = next;
        }
    }
    for k in 0..6 {
        assert!((phi[k] + poly[k + 1].re).abs() < 1e-12);
        assert!(poly[k + 1].im.abs() < 1e-12);
    }
    // B = A exp(2 pi i theta) is a root of 1 - sum phi_k B^k
    let b = Complex64::from_polar(1.1, 2.0 * PI * 0.05);
    let val = Complex64::new(1.0, 0.0) - (0..6).map(|k| phi[k] * b.powu(k as u32 + 1)).sum::<Complex64>();
    assert!(val.norm() < 1e-10);
}

#[test]
fn tvar6_profile_endpoints() {
    let n = 512;
    let th1 = tvar6_thetas(1.0, n);
    let th_n = tvar6_thetas(n as f64, n);
    assert!((th1[0] - 0.05).abs() < 1e-3);
    assert!((th_n[0] - 0.15).abs() < 1e-3);
    for t in [1.0, 100.0, 512.0] {
        let th = tvar6_thetas(t, n);
        assert!((th[0] + th[2] - 0.5).abs() < 1e-15);
        assert_eq!(th[1], 0.25);
    }
    assert!((tvar6_thetas(0.0, n)[0] - 0.05).abs() < 1e-15);
}

#[test]
fn tvar6_spectrum_has_three_peaks() {
    let sim = gen_tvar6(1024, 61).unwrap();
    let freqs = frequency_grid(0.001).unwrap();
    let spec = true_spectrum(&sim, &freqs).unwrap();
    for t in [0, 511, 1023] {
        let row = spec.values.row(t);
        let peaks = (1..freqs.len() - 1)
            .filter(|&l| row[l] > row[l - 1] && row[l] > row[l + 1])
            .count();
        assert_eq!(peaks, 3, "t = {}", t + 1);
    }
}

#[test]
fn piecewise_segments() {
    let sim = gen_piecewise(1024, 62).unwrap();
    assert_eq!(piecewise_coefficients(100, 1024), [0.9, 0.0]);
    assert_eq!(piecewise_coefficients(600, 1024), [1.69, -0.81]);
    assert_eq!(sim.true_coeffs.row(511).to_vec(), vec![0.9, 0.0]);
    assert_eq!(sim.true_coeffs.row(512).to_vec(), vec![1.69, -0.81]);
    assert_eq!(sim.true_coeffs.row(767).to_vec(), vec![1.69, -0.81]);
    assert_eq!(sim.true_coeffs.row(768).to_vec(), vec![1.32, -0.81]);

    let seg = &sim.x[..512];
    let m = seg.iter().sum::<f64>() / 512.0;
    let num: f64 = seg.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = seg.iter().map(|v| (v - m).powi(2)).sum();
    assert!((num / den - 0.9).abs() < 0.05, "{}", num / den);

    let truth = true_spectrum(&sim, &default_frequency_grid()).unwrap();
    assert_eq!(truth.values.row(10), truth.values.row(400));
}

#[test]
fn tvar2_truth() {
    let sim = gen_tvar2(1024, 63).unwrap();
    assert!(sim.true_sigma2.iter().all(|&s| s == 1.0));
    assert!((sim.true_coeffs[[1023, 0]] - 1.2).abs() < 1e-15);
    // the spectral peak moves monotonically towards lower frequency as a_t grows
    let freqs = frequency_grid(0.001).unwrap();
    let truth = true_spectrum(&sim, &freqs).unwrap();
    let peak = |t: usize| {
        let row = truth.values.row(t);
        (0..freqs.len()).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap()
    };
    let peaks: Vec<usize> = (0..1024).step_by(64).map(peak).collect();
    assert!(peaks.windows(2).all(|w| w[1] <= w[0]), "{peaks:?}");
}

#[test]
fn tvvar_variance_halves_differ() {
    let n = 2048;
    let var: Vec<f64> = (1..=n).map(|t| (2.0 * PI * t as f64 / n as f64).sin().exp()).collect();
    let sim = gen_tvvar(n, 64, &var, &Array2::zeros((n, 1))).unwrap();
    let v = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
    assert!(v(&sim.x[..n / 2]) > v(&sim.x[n / 2..]));
    assert_eq!(sim.true_sigma2, var);
    let flat = gen_tvvar(n, 64, &vec![1.0; n], &Array2::zeros((n, 1))).unwrap();
    let spec = true_spectrum(&flat, &default_frequency_grid()).unwrap();
    assert!(spec.values.iter().all(|&s| s == 1.0));
    assert_eq!(ProcessKind::Tvvar.generate(256, 1).unwrap().label, ProcessKind::Tvvar);
}

#[test]
fn constant_profile_is_stationary_ar() {
    let n = 300;
    let coeffs = Array2::from_shape_fn((n, 2), |(_, j)| [0.5, -0.2][j]);
    let a = gen_tvvar(n, 65, &vec![1.0; n], &coeffs).unwrap();
    let spec = true_spectrum(&a, &default_frequency_grid()).unwrap();
    assert_eq!(spec.values.row(0), spec.values.row(n - 1));
}

#[test]
fn explosive_profile_reports_time() {
    let n = 500;
    let coeffs = Array2::from_elem((n, 1), 1.5);
    match gen_tvvar(n, 66, &vec![1.0; n], &coeffs) {
        Err(BlfError::Diverged { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn seeds_are_deterministic() {
    for kind in ProcessKind::ALL {
        let a = kind.generate(200, 7).unwrap();
        let b = kind.generate(200, 7).unwrap();
        let c = kind.generate(200, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x, c.x);
        assert_eq!(kind.name().parse::<ProcessKind>().unwrap(), kind);
    }
}
