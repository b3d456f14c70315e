//! Scalar conjugate dynamic linear model with discount-factor evolution.
//!
//! Observation model `y_t = theta_t * x_t + eps_t`, `eps_t ~ N(0, sigma_t^2)`, with a random-walk
//! coefficient whose evolution variance is set by the coefficient discount `gamma`, and a
//! multiplicative beta-gamma evolution of the precision governed by the variance discount `delta`.
//! The posterior is normal/gamma at every step, so filtering, smoothing and path sampling are all
//! closed form.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{BlfError, Result};

/// Conjugate normal/gamma prior at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigPrior {
    /// Prior coefficient mean.
    pub mu0: f64,
    /// Prior coefficient scale.
    pub c0: f64,
    /// Prior degrees of freedom of the precision.
    pub v0: f64,
    /// Prior precision scale; the prior variance point estimate is `kappa0 / v0`.
    pub kappa0: f64,
}

impl NigPrior {
    pub fn new(mu0: f64, c0: f64, v0: f64, kappa0: f64) -> Result<Self> {
        let prior = Self {
            mu0,
            c0,
            v0,
            kappa0,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Default prior: zero mean, unit scale, one degree of freedom, and `kappa0` chosen so the
    /// prior expected precision `v0 / kappa0` equals the reciprocal of the sample variance of the
    /// first `n_init` observations.
    pub fn from_signal(x: &[f64], n_init: usize) -> Result<Self> {
        let n = n_init.min(x.len());
        if n < 2 {
            return Err(BlfError::invalid(
                "at least two observations are needed to set the prior variance",
            ));
        }
        let head = &x[..n];
        let mean = head.iter().sum::<f64>() / n as f64;
        let var = head.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // A constant head segment still needs a positive variance.
        let var = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        Self::new(0.0, 1.0, 1.0, var)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu0.is_finite() {
            return Err(BlfError::invalid(format!("prior mu0 must be finite; got {}", self.mu0)));
        }
        for (name, val) in [("c0", self.c0), ("v0", self.v0), ("kappa0", self.kappa0)] {
            if !(val.is_finite() && val > 0.0) {
                return Err(BlfError::invalid(format!(
                    "prior {name} must be finite and > 0; got {val}"
                )));
            }
        }
        Ok(())
    }

    /// Prior point estimate of the observation variance.
    pub fn s0(&self) -> f64 {
        self.kappa0 / self.v0
    }
}

/// Coefficient discount `gamma` and variance discount `delta`, both in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountPair {
    pub gamma: f64,
    pub delta: f64,
}

impl DiscountPair {
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        for (name, val) in [("gamma", gamma), ("delta", delta)] {
            if !(val > 0.0 && val <= 1.0) {
                return Err(BlfError::invalid(format!(
                    "discount {name} must lie in (0, 1]; got {val}"
                )));
            }
        }
        Ok(Self { gamma, delta })
    }
}

/// Output of [`forward_filter`]: one entry per time step.
///
/// Steps with `observed[t] == false` carry the previous posterior forward unchanged and
/// contribute nothing to the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub prior: NigPrior,
    pub discounts: DiscountPair,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub v: Vec<f64>,
    pub kappa: Vec<f64>,
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub q: Vec<f64>,
    pub observed: Vec<bool>,
}

impl FilterState {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Degrees of freedom in force before step `t`.
    fn v_prev(&self, t: usize) -> f64 {
        if t == 0 {
            self.prior.v0
        } else {
            self.v[t - 1]
        }
    }
}

/// Retrospective (smoothed) marginal posterior parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothState {
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl SmoothState {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Variance of the marginal Student-t of the coefficient, where it exists (`v > 2`).
    pub fn coef_variance(&self, t: usize) -> Option<f64> {
        let v = self.v[t];
        (v > 2.0).then(|| self.c[t] * v / (v - 2.0))
    }
}

fn check_finite(what: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|v| !v.is_finite()) {
        Some(t) => Err(BlfError::NonFinite { what, t }),
        None => Ok(()),
    }
}

/// Sequential updating over every time step.
pub fn forward_filter(y: &[f64], x: &[f64], prior: &NigPrior, d: DiscountPair) -> Result<FilterState> {
    let observed = vec![true; y.len()];
    forward_filter_masked(y, x, &observed, prior, d)
}

/// Sequential updating where only steps flagged in `observed` carry information.
pub fn forward_filter_masked(
    y: &[f64],
    x: &[f64],
    observed: &[bool],
    prior: &NigPrior,
    d: DiscountPair,
) -> Result<FilterState> {
    let n = y.len();
    if n == 0 {
        return Err(BlfError::invalid("series must contain at least one observation"));
    }
    if x.len() != n {
        return Err(BlfError::LengthMismatch {
            what: "regressor",
            got: x.len(),
            expected: n,
        });
    }
    if observed.len() != n {
        return Err(BlfError::LengthMismatch {
            what: "observation mask",
            got: observed.len(),
            expected: n,
        });
    }
    prior.validate()?;
    DiscountPair::new(d.gamma, d.delta)?;
    check_finite("response", y)?;
    check_finite("regressor", x)?;

    let mut fs = FilterState {
        prior: *prior,
        discounts: d,
        mu: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        observed: observed.to_vec(),
    };

    let (mut mu, mut c, mut v, mut kappa) = (prior.mu0, prior.c0, prior.v0, prior.kappa0);
    let mut s = kappa / v;
    for t in 0..n {
        let (e, q);
        if observed[t] {
            let xt = x[t];
            let r = c / d.gamma;
            q = r * xt * xt + s;
            e = y[t] - mu * xt;
            let z = r * xt / q;
            mu += z * e;
            v = d.delta * v + 1.0;
            kappa = d.delta * kappa + s * e * e / q;
            let s_new = kappa / v;
            // r - z^2 q == r s_{t-1} / q, which stays positive under cancellation.
            c = r * s / q * (s_new / s);
            s = s_new;
        } else {
            e = 0.0;
            q = s;
        }
        if !(mu.is_finite() && c.is_finite() && kappa.is_finite() && q.is_finite()) {
            return Err(BlfError::NonFinite {
                what: "filter state",
                t,
            });
        }
        fs.mu.push(mu);
        fs.c.push(c);
        fs.v.push(v);
        fs.kappa.push(kappa);
        fs.s.push(s);
        fs.e.push(e);
        fs.q.push(q);
    }
    Ok(fs)
}

/// Retrospective smoothing of a completed forward pass.
pub fn backward_smooth(fs: &FilterState, d: DiscountPair) -> Result<SmoothState> {
    let n = fs.len();
    if n == 0 {
        return Err(BlfError::invalid("empty filter state"));
    }
    let mut ss = SmoothState {
        mu: fs.mu.clone(),
        c: fs.c.clone(),
        v: fs.v.clone(),
        s: fs.s.clone(),
        kappa: fs.kappa.clone(),
    };
    let (g, dl) = (d.gamma, d.delta);
    for t in (0..n - 1).rev() {
        if !fs.observed[t + 1] {
            // No evolution between t and t + 1.
            ss.mu[t] = ss.mu[t + 1];
            ss.c[t] = ss.c[t + 1];
            ss.v[t] = ss.v[t + 1];
            ss.s[t] = ss.s[t + 1];
            ss.kappa[t] = ss.kappa[t + 1];
            continue;
        }
        let s_t = 1.0 / ((1.0 - dl) / fs.s[t] + dl / ss.s[t + 1]);
        ss.s[t] = s_t;
        ss.mu[t] = (1.0 - g) * fs.mu[t] + g * ss.mu[t + 1];
        // each scale term is rescaled from its own variance estimate to s_{t|T}
        ss.c[t] = s_t * ((1.0 - g) * fs.c[t] / fs.s[t] + g * g * ss.c[t + 1] / ss.s[t + 1]);
        ss.v[t] = (1.0 - dl) * fs.v[t] + dl * ss.v[t + 1];
        ss.kappa[t] = ss.v[t] * s_t;
        if !(ss.mu[t].is_finite() && ss.c[t].is_finite() && s_t.is_finite()) {
            return Err(BlfError::NonFinite {
                what: "smoothed state",
                t,
            });
        }
    }
    Ok(ss)
}

/// Log density of a Student-t with `df` degrees of freedom, location 0 and squared scale `q`.
pub(crate) fn student_t_logpdf(e: f64, df: f64, q: f64) -> f64 {
    ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI * q).ln()
        - (df + 1.0) / 2.0 * (1.0 + e * e / (df * q)).ln()
}

/// Sum of one-step-ahead predictive log densities over the observed steps.
pub fn predictive_loglik(fs: &FilterState) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..fs.len() {
        if !fs.observed[t] {
            continue;
        }
        let df = fs.v_prev(t);
        if !(df > 0.0) {
            return Err(BlfError::invalid(format!(
                "predictive degrees of freedom must be > 0; got {df} at t = {t}"
            )));
        }
        total += student_t_logpdf(fs.e[t], df, fs.q[t]);
    }
    Ok(total)
}

/// One joint posterior draw of the coefficient path and the observation-variance path.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPath {
    pub theta: Vec<f64>,
    pub sigma2: Vec<f64>,
}

fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| BlfError::invalid(format!("gamma(shape {shape}, rate {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Draws a joint path from the smoothing posterior by backward sampling.
///
/// Precisions follow the beta-gamma construction `phi_t = delta * phi_{t+1} + G((1 - delta) v_t / 2,
/// kappa_t / 2)`, so that `E[phi_t] = 1 / s_{t|T}`. Given the precisions, coefficients are drawn
/// from `N((1 - gamma) mu_t + gamma theta_{t+1}, (1 - gamma) c_t / (s_t phi_t))`.
pub fn backward_sample<R: Rng + ?Sized>(
    fs: &FilterState,
    d: DiscountPair,
    rng: &mut R,
) -> Result<PosteriorPath> {
    let n = fs.len();
    if n == 0 {
        return Err(BlfError::invalid("empty filter state"));
    }
    let mut phi = vec![0.0; n];
    let mut theta = vec![0.0; n];
    let last = n - 1;

    phi[last] = gamma_draw(rng, fs.v[last] / 2.0, fs.kappa[last] / 2.0)?;
    for t in (0..last).rev() {
        phi[t] = if !fs.observed[t + 1] || d.delta >= 1.0 {
            phi[t + 1]
        } else {
            d.delta * phi[t + 1]
                + gamma_draw(rng, (1.0 - d.delta) * fs.v[t] / 2.0, fs.kappa[t] / 2.0)?
        };
    }

    let z: f64 = rng.sample(StandardNormal);
    theta[last] = fs.mu[last] + z * (fs.c[last] / (fs.s[last] * phi[last])).sqrt();
    for t in (0..last).rev() {
        theta[t] = if !fs.observed[t + 1] || d.gamma >= 1.0 {
            theta[t + 1]
        } else {
            let mean = (1.0 - d.gamma) * fs.mu[t] + d.gamma * theta[t + 1];
            let var = (1.0 - d.gamma) * fs.c[t] / (fs.s[t] * phi[t]);
            let z: f64 = rng.sample(StandardNormal);
            mean + z * var.sqrt()
        };
    }

    let sigma2 = phi.iter().map(|p| 1.0 / p).collect();
    Ok(PosteriorPath { theta, sigma2 })
}
