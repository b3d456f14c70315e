//! Reference nonstationary processes with known time-varying spectra.
//!
//! Every generator runs [`BURN_IN`] warm-up steps from zero with the parameters frozen at `t = 1`
//! and then simulates `x_t = sum_m a_{t,m} x_{t-m} + eps_t`, `eps_t ~ N(0, sigma2_t)`, for
//! `t = 1..=T`. Time indices in formulas are 1-based.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{BlfError, Result};
use crate::spectrum::{ar_spectrum, Spectrogram};

pub const BURN_IN: usize = 200;
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Reciprocal-root moduli of the three conjugate pairs of the TVAR(6) process.
pub const TVAR6_MODULI: [f64; 3] = [1.1, 1.12, 1.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Tvar2,
    Tvar6,
    PieceAr,
    Tvvar,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 4] = [Self::Tvar2, Self::Tvar6, Self::PieceAr, Self::Tvvar];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tvar2 => "tvar2",
            Self::Tvar6 => "tvar6",
            Self::PieceAr => "piecewise",
            Self::Tvvar => "tvvar",
        }
    }

    /// Generates a realization with the built-in parameters of this process.
    pub fn generate(self, n: usize, seed: u64) -> Result<SimulatedProcess> {
        match self {
            Self::Tvar2 => gen_tvar2(n, seed),
            Self::Tvar6 => gen_tvar6(n, seed),
            Self::PieceAr => gen_piecewise(n, seed),
            Self::Tvvar => gen_tvvar_default(n, seed),
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProcessKind {
    type Err = BlfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tvar2" => Ok(Self::Tvar2),
            "tvar6" => Ok(Self::Tvar6),
            "piecewise" | "piecear" => Ok(Self::PieceAr),
            "tvvar" => Ok(Self::Tvvar),
            other => Err(BlfError::invalid(format!(
                "unknown process '{other}'; expected one of tvar2, tvar6, piecewise, tvvar"
            ))),
        }
    }
}

/// A simulated series together with its generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedProcess {
    pub x: Vec<f64>,
    /// `T x P` grid of generating coefficients.
    pub true_coeffs: Array2<f64>,
    pub true_sigma2: Vec<f64>,
    pub label: ProcessKind,
}

impl SimulatedProcess {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn order(&self) -> usize {
        self.true_coeffs.ncols()
    }
}

fn simulate(
    coeffs: &Array2<f64>,
    sigma2: &[f64],
    seed: u64,
    label: ProcessKind,
) -> Result<SimulatedProcess> {
    let (n, p) = coeffs.dim();
    if n == 0 {
        return Err(BlfError::invalid("series length must be positive"));
    }
    if sigma2.len() != n {
        return Err(BlfError::LengthMismatch {
            what: "variance profile",
            got: sigma2.len(),
            expected: n,
        });
    }
    if let Some(t) = sigma2.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(BlfError::invalid(format!(
            "variance profile must be finite and > 0; got {} at t = {}",
            sigma2[t],
            t + 1
        )));
    }
    if let Some(((t, _), _)) = coeffs.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(BlfError::NonFinite {
            what: "coefficient profile",
            t: t + 1,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = BURN_IN + n;
    let mut buf = vec![0.0; total];
    for i in 0..total {
        // burn-in uses the parameters of t = 1
        let t = i.saturating_sub(BURN_IN);
        let row = coeffs.row(t);
        let eps: f64 = rng.sample(StandardNormal);
        let mut v = sigma2[t].sqrt() * eps;
        for m in 1..=p.min(i) {
            v += row[m - 1] * buf[i - m];
        }
        if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
            // t = 0 flags divergence during burn-in
            return Err(BlfError::Diverged {
                t: (i + 1).saturating_sub(BURN_IN),
                value: v,
            });
        }
        buf[i] = v;
    }
    Ok(SimulatedProcess {
        x: buf.split_off(BURN_IN),
        true_coeffs: coeffs.clone(),
        true_sigma2: sigma2.to_vec(),
        label,
    })
}

/// Lag-one coefficient of the TVAR(2) process; the period constant 1024 is fixed.
pub fn tvar2_coefficient(t: f64) -> f64 {
    0.8 * (1.0 - 0.5 * (PI * t / 1024.0).cos())
}

/// `x_t = a_t x_{t-1} - 0.81 x_{t-2} + eps_t` with `a_t` from [`tvar2_coefficient`].
pub fn gen_tvar2(n: usize, seed: u64) -> Result<SimulatedProcess> {
    if n < 3 {
        return Err(BlfError::invalid(format!("TVAR(2) needs T >= 3; got {n}")));
    }
    let mut coeffs = Array2::zeros((n, 2));
    for t in 0..n {
        coeffs[[t, 0]] = tvar2_coefficient((t + 1) as f64);
        coeffs[[t, 1]] = -0.81;
    }
    simulate(&coeffs, &vec![1.0; n], seed, ProcessKind::Tvar2)
}

/// Expands `prod_j (1 - a_j B)(1 - conj(a_j) B)`, `a_j = exp(2 pi i theta_j) / A_j`, and returns
/// the AR coefficients `phi` of `1 - sum_k phi_k B^k`.
pub fn roots_to_coeffs(moduli: &[f64], thetas: &[f64]) -> Result<Vec<f64>> {
    if moduli.len() != thetas.len() {
        return Err(BlfError::LengthMismatch {
            what: "root angles",
            got: thetas.len(),
            expected: moduli.len(),
        });
    }
    if let Some(j) = moduli
        .iter()
        .chain(thetas)
        .position(|v| !v.is_finite())
    {
        return Err(BlfError::NonFinite {
            what: "root parameters",
            t: j % moduli.len().max(1),
        });
    }
    if let Some(a) = moduli.iter().find(|&&a| a <= 1.0) {
        return Err(BlfError::invalid(format!(
            "root modulus must exceed 1 for a stationary factor; got {a}"
        )));
    }
    let mut poly = vec![1.0];
    for (&a, &theta) in moduli.iter().zip(thetas) {
        let factor = [1.0, -2.0 * (2.0 * PI * theta).cos() / a, 1.0 / (a * a)];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &p) in poly.iter().enumerate() {
            for (j, &f) in factor.iter().enumerate() {
                next[i + j] += p * f;
            }
        }
        poly = next;
    }
    Ok(poly[1..].iter().map(|c| -c).collect())
}

/// Root angles of the TVAR(6) process at (1-based) time `t` for a series of length `n`.
pub fn tvar6_thetas(t: f64, n: usize) -> [f64; 3] {
    let drift = 0.1 / (n as f64 - 1.0) * t;
    [0.05 + drift, 0.25, 0.45 - drift]
}

/// TVAR(6) process with three conjugate root pairs drifting in angle.
pub fn gen_tvar6(n: usize, seed: u64) -> Result<SimulatedProcess> {
    if n < 7 {
        return Err(BlfError::invalid(format!("TVAR(6) needs T >= 7; got {n}")));
    }
    let mut coeffs = Array2::zeros((n, 6));
    for t in 0..n {
        let phi = roots_to_coeffs(&TVAR6_MODULI, &tvar6_thetas((t + 1) as f64, n))?;
        for (m, c) in phi.into_iter().enumerate() {
            coeffs[[t, m]] = c;
        }
    }
    simulate(&coeffs, &vec![1.0; n], seed, ProcessKind::Tvar6)
}

/// Coefficients of the piecewise stationary process at 1-based time `t` for length `n`:
/// AR(1) 0.9 on the first half, AR(2) (1.69, -0.81) on the third quarter, AR(2) (1.32, -0.81)
/// on the last quarter.
pub fn piecewise_coefficients(t: usize, n: usize) -> [f64; 2] {
    if t <= n / 2 {
        [0.9, 0.0]
    } else if t <= 3 * n / 4 {
        [1.69, -0.81]
    } else {
        [1.32, -0.81]
    }
}

pub fn gen_piecewise(n: usize, seed: u64) -> Result<SimulatedProcess> {
    if n < 4 {
        return Err(BlfError::invalid(format!("piecewise AR needs T >= 4; got {n}")));
    }
    let mut coeffs = Array2::zeros((n, 2));
    for t in 0..n {
        let [a1, a2] = piecewise_coefficients(t + 1, n);
        coeffs[[t, 0]] = a1;
        coeffs[[t, 1]] = a2;
    }
    simulate(&coeffs, &vec![1.0; n], seed, ProcessKind::PieceAr)
}

/// Simulates a TVAR process with caller-supplied coefficient and variance profiles.
pub fn gen_tvvar(
    n: usize,
    seed: u64,
    variance_profile: &[f64],
    coeff_profile: &Array2<f64>,
) -> Result<SimulatedProcess> {
    if coeff_profile.nrows() != n {
        return Err(BlfError::LengthMismatch {
            what: "coefficient profile",
            got: coeff_profile.nrows(),
            expected: n,
        });
    }
    simulate(coeff_profile, variance_profile, seed, ProcessKind::Tvvar)
}

/// Built-in time-varying-variance process: the TVAR(2) coefficient path rescaled to length `n`
/// with innovation variance `exp(sin(2 pi t / n))`.
pub fn gen_tvvar_default(n: usize, seed: u64) -> Result<SimulatedProcess> {
    if n < 3 {
        return Err(BlfError::invalid(format!("TVVAR needs T >= 3; got {n}")));
    }
    let mut coeffs = Array2::zeros((n, 2));
    let mut var = Vec::with_capacity(n);
    for t in 0..n {
        let u = (t + 1) as f64 / n as f64;
        coeffs[[t, 0]] = 0.8 * (1.0 - 0.5 * (PI * u).cos());
        coeffs[[t, 1]] = -0.81;
        var.push((2.0 * PI * u).sin().exp());
    }
    gen_tvvar(n, seed, &var, &coeffs)
}

/// Spectral density implied by the generating parameters.
pub fn true_spectrum(p: &SimulatedProcess, freqs: &[f64]) -> Result<Spectrogram> {
    ar_spectrum(&p.true_coeffs, &p.true_sigma2, freqs)
}
