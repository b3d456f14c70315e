//! Time-varying AR spectral density, log-spectral average squared error, and Monte Carlo
//! posterior summaries of the log spectrum.

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{BlfError, Result};
use crate::tvar::{TvarFit, TvarSampler};

/// Spectral density on a time x frequency grid, in linear power units.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Time index, starting at 1.
    pub times: Vec<usize>,
    /// Frequencies in cycles per sample, within `[0, 1/2]`.
    pub freqs: Vec<f64>,
    /// `T x L` grid of densities. Cells at an exact unit root hold `+inf`.
    pub values: Array2<f64>,
}

impl Spectrogram {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs.len()
    }
}

/// Evenly spaced grid `0, step, 2 step, ..., 1/2`.
pub fn frequency_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(BlfError::invalid(format!(
            "frequency step must lie in (0, 0.5]; got {step}"
        )));
    }
    let n = (0.5 / step).round();
    if ((n * step) - 0.5).abs() > 1e-9 {
        return Err(BlfError::invalid(format!(
            "frequency step {step} does not divide 0.5"
        )));
    }
    let n = n as usize;
    Ok((0..=n).map(|l| if l == n { 0.5 } else { l as f64 * step }).collect())
}

/// The grid `0, 0.005, ..., 0.5` (101 points) used for ASE scoring.
pub fn default_frequency_grid() -> Vec<f64> {
    frequency_grid(0.005).expect("0.005 divides 0.5")
}

pub(crate) fn validate_freqs(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(BlfError::invalid("frequency grid is empty"));
    }
    if let Some(w) = freqs.iter().find(|w| !(0.0..=0.5).contains(*w)) {
        return Err(BlfError::invalid(format!(
            "frequency {w} outside [0, 0.5]"
        )));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BlfError::invalid("frequency grid must be strictly increasing"));
    }
    Ok(())
}

/// Evaluates `sigma2[t] / |1 - sum_m coeffs[t][m-1] exp(-2 pi i m w)|^2` on the grid.
pub fn ar_spectrum(coeffs: &Array2<f64>, sigma2: &[f64], freqs: &[f64]) -> Result<Spectrogram> {
    validate_freqs(freqs)?;
    let (n, p) = coeffs.dim();
    if sigma2.len() != n {
        return Err(BlfError::LengthMismatch {
            what: "innovation variance",
            got: sigma2.len(),
            expected: n,
        });
    }
    if let Some(t) = sigma2.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(BlfError::invalid(format!(
            "innovation variance must be finite and > 0; got {} at t = {t}",
            sigma2[t]
        )));
    }
    // exp(-2 pi i m w) for every (l, m)
    let phasors: Vec<Vec<Complex64>> = freqs
        .iter()
        .map(|&w| {
            (1..=p)
                .map(|m| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * m as f64 * w))
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((n, freqs.len()));
    for t in 0..n {
        let row = coeffs.row(t);
        for (l, ph) in phasors.iter().enumerate() {
            let mut h = Complex64::new(1.0, 0.0);
            for (a, z) in row.iter().zip(ph) {
                h -= *a * z;
            }
            let denom = h.norm_sqr();
            values[[t, l]] = if denom == 0.0 {
                f64::INFINITY
            } else {
                sigma2[t] / denom
            };
        }
    }
    Ok(Spectrogram {
        times: (1..=n).collect(),
        freqs: freqs.to_vec(),
        values,
    })
}

/// Time-varying spectral density of a fitted TVAR model.
pub fn tvar_spectrum(fit: &TvarFit, freqs: &[f64]) -> Result<Spectrogram> {
    ar_spectrum(&fit.coeffs, &fit.sigma2, freqs)
}

/// Average squared difference of natural-log spectra over the full grid.
pub fn ase(est: &Spectrogram, truth: &Spectrogram) -> Result<f64> {
    if est.values.dim() != truth.values.dim() {
        return Err(BlfError::invalid(format!(
            "spectrogram grids differ: {:?} vs {:?}",
            est.values.dim(),
            truth.values.dim()
        )));
    }
    if est.freqs != truth.freqs {
        return Err(BlfError::invalid("spectrogram frequency grids differ"));
    }
    let mut sum = 0.0;
    for (((t, l), &e), &s) in est.values.indexed_iter().zip(truth.values.iter()) {
        if !e.is_finite() || !s.is_finite() {
            return Err(BlfError::InfiniteCell { t: t + 1, l });
        }
        let diff = e.ln() - s.ln();
        sum += diff * diff;
    }
    Ok(sum / est.values.len() as f64)
}

/// Pointwise posterior mean and standard deviation of the natural-log spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPosterior {
    pub times: Vec<usize>,
    pub freqs: Vec<f64>,
    pub n_draws: usize,
    pub mean_log: Array2<f64>,
    pub sd_log: Array2<f64>,
}

impl SpectrumPosterior {
    /// Posterior mean log-density mapped back to power units.
    pub fn mean_spectrogram(&self) -> Spectrogram {
        Spectrogram {
            times: self.times.clone(),
            freqs: self.freqs.clone(),
            values: self.mean_log.mapv(f64::exp),
        }
    }

    /// Monte Carlo standard error of each cell of `mean_log`.
    pub fn mc_standard_error(&self) -> Array2<f64> {
        let n = self.n_draws as f64;
        self.sd_log.mapv(|s| s / n.sqrt())
    }
}

/// Running mean and centred sum of squares, merged with Chan's rule.
struct Moments {
    n: f64,
    mean: Array2<f64>,
    m2: Array2<f64>,
}

impl Moments {
    fn new(dim: (usize, usize)) -> Self {
        Self {
            n: 0.0,
            mean: Array2::zeros(dim),
            m2: Array2::zeros(dim),
        }
    }

    fn push(&mut self, x: &Array2<f64>) {
        self.n += 1.0;
        let n = self.n;
        ndarray::Zip::from(&mut self.mean)
            .and(&mut self.m2)
            .and(x)
            .for_each(|mean, m2, &v| {
                let delta = v - *mean;
                *mean += delta / n;
                *m2 += delta * (v - *mean);
            });
    }

    fn merge(mut self, other: Moments) -> Self {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let (na, nb) = (self.n, other.n);
        ndarray::Zip::from(&mut self.mean)
            .and(&mut self.m2)
            .and(&other.mean)
            .and(&other.m2)
            .for_each(|mean, m2, &mb, &m2b| {
                let delta = mb - *mean;
                *mean += delta * nb / n;
                *m2 += m2b + delta * delta * na * nb / n;
            });
        self.n = n;
        self
    }
}

const DRAWS_PER_CHUNK: usize = 32;

/// Monte Carlo summary of the log spectrum under posterior draws of TVAR parameters.
///
/// Draw `i` uses its own ChaCha stream `i` under `seed`, and chunk results are merged in index
/// order, so the output is independent of thread count and a run with more draws extends a run
/// with fewer.
pub fn spectrum_posterior<S: TvarSampler + ?Sized>(
    sampler: &S,
    n_draws: usize,
    freqs: &[f64],
    seed: u64,
) -> Result<SpectrumPosterior> {
    if n_draws < 2 {
        return Err(BlfError::invalid(format!(
            "posterior summary needs at least two draws; got {n_draws}"
        )));
    }
    validate_freqs(freqs)?;
    let dim = (sampler.len(), freqs.len());
    let chunks: Vec<Result<Moments>> = (0..n_draws)
        .collect::<Vec<_>>()
        .par_chunks(DRAWS_PER_CHUNK)
        .map(|idx| {
            let mut acc = Moments::new(dim);
            for &i in idx {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let (coeffs, sigma2) = sampler.sample_tvar(&mut rng)?;
                let spec = ar_spectrum(&coeffs, &sigma2, freqs)?;
                if let Some(((t, l), _)) = spec.values.indexed_iter().find(|(_, v)| !v.is_finite()) {
                    return Err(BlfError::InfiniteCell { t: t + 1, l });
                }
                acc.push(&spec.values.mapv(f64::ln));
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::new(dim);
    for chunk in chunks {
        total = total.merge(chunk?);
    }
    let denom = total.n - 1.0;
    Ok(SpectrumPosterior {
        times: (1..=dim.0).collect(),
        freqs: freqs.to_vec(),
        n_draws,
        mean_log: total.mean,
        sd_log: total.m2.mapv(|m| (m / denom).max(0.0).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn default_grid_has_101_points() {
        let g = default_frequency_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 0.5);
        assert!((g[1] - 0.005).abs() < 1e-15);
        assert!(frequency_grid(0.3).is_err());
    }

    #[test]
    fn white_noise_is_flat() {
        let coeffs = Array2::zeros((5, 3));
        let spec = ar_spectrum(&coeffs, &[1.0; 5], &default_frequency_grid()).unwrap();
        assert!(spec.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unit_root_cell_is_infinite() {
        let coeffs = array![[1.0]];
        let spec = ar_spectrum(&coeffs, &[1.0], &[0.0, 0.25]).unwrap();
        assert_eq!(spec.values[[0, 0]], f64::INFINITY);
        assert!(spec.values[[0, 1]].is_finite());
        let flat = ar_spectrum(&array![[0.0]], &[1.0], &[0.0, 0.25]).unwrap();
        assert_eq!(ase(&spec, &flat), Err(BlfError::InfiniteCell { t: 1, l: 0 }));
    }

    #[test]
    fn bad_frequency_grids_rejected() {
        let coeffs = Array2::zeros((2, 1));
        assert!(ar_spectrum(&coeffs, &[1.0, 1.0], &[0.1, 0.1]).is_err());
        assert!(ar_spectrum(&coeffs, &[1.0, 1.0], &[0.0, 0.6]).is_err());
        assert!(ar_spectrum(&coeffs, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn ase_grid_mismatch_rejected() {
        let a = ar_spectrum(&Array2::zeros((3, 1)), &[1.0; 3], &[0.0, 0.5]).unwrap();
        let b = ar_spectrum(&Array2::zeros((4, 1)), &[1.0; 4], &[0.0, 0.5]).unwrap();
        assert!(ase(&a, &b).is_err());
    }
}
