//! Stage-wise Bayesian lattice filter.
//!
//! Stage `m` regresses the forward prediction error `f^(m-1)_t` on the lagged backward error
//! `b^(m-1)_{t-m}` (forward PARCOR) and `b^(m-1)_t` on `f^(m-1)_{t+m}` (backward PARCOR). Each
//! regression is a scalar discounted DLM; the smoothed coefficient paths produce the next-stage
//! prediction errors.

use crate::dlm::{
    backward_smooth, forward_filter_masked, predictive_loglik, DiscountPair, FilterState, NigPrior,
    SmoothState,
};
use crate::error::{BlfError, Result};

/// Smoothed output of one lattice stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    /// Stage index, starting at 1.
    pub m: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_var: Vec<f64>,
    pub beta_var: Vec<f64>,
    /// Smoothed forward innovation variance.
    pub sf2: Vec<f64>,
    /// Smoothed backward innovation variance.
    pub sb2: Vec<f64>,
    pub f_next: Vec<f64>,
    pub b_next: Vec<f64>,
    /// Predictive log-likelihood of the forward regression.
    pub loglik: f64,
    pub discounts_f: DiscountPair,
    pub discounts_b: DiscountPair,
    /// Filter output of the forward regression, kept for posterior sampling.
    pub forward_filter: FilterState,
    /// Filter output of the backward regression.
    pub backward_filter: FilterState,
}

impl StageResult {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// All stages of a lattice fit, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRun {
    pub stages: Vec<StageResult>,
    pub x: Vec<f64>,
    pub prior: NigPrior,
}

impl LatticeRun {
    pub fn order(&self) -> usize {
        self.stages.len()
    }

    pub fn logliks(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.loglik).collect()
    }
}

/// Regression design for the forward equation at stage `m`: regressor `b_prev[t - m]`,
/// observed only for `t >= m`.
fn forward_design(b_prev: &[f64], m: usize) -> (Vec<f64>, Vec<bool>) {
    let n = b_prev.len();
    let x = (0..n).map(|t| if t >= m { b_prev[t - m] } else { 0.0 }).collect();
    let mask = (0..n).map(|t| t >= m).collect();
    (x, mask)
}

/// Regression design for the backward equation at stage `m`: regressor `f_prev[t + m]`,
/// observed only for `t + m < T`.
fn backward_design(f_prev: &[f64], m: usize) -> (Vec<f64>, Vec<bool>) {
    let n = f_prev.len();
    let x = (0..n).map(|t| if t + m < n { f_prev[t + m] } else { 0.0 }).collect();
    let mask = (0..n).map(|t| t + m < n).collect();
    (x, mask)
}

fn check_stage_inputs(f_prev: &[f64], b_prev: &[f64], m: usize) -> Result<()> {
    let n = f_prev.len();
    if b_prev.len() != n {
        return Err(BlfError::LengthMismatch {
            what: "backward prediction errors",
            got: b_prev.len(),
            expected: n,
        });
    }
    if m == 0 {
        return Err(BlfError::invalid("stage index starts at 1"));
    }
    if m >= n {
        return Err(BlfError::Stage {
            stage: m,
            reason: format!("stage index must be below the series length {n}"),
        });
    }
    Ok(())
}

fn stage_err(m: usize) -> impl Fn(BlfError) -> BlfError {
    move |e| BlfError::Stage {
        stage: m,
        reason: e.to_string(),
    }
}

/// Predictive log-likelihood of the forward regression alone. Used by the hyperparameter search,
/// which never needs the smoothed paths of losing grid points.
pub fn forward_stage_loglik(
    f_prev: &[f64],
    b_prev: &[f64],
    m: usize,
    d: DiscountPair,
    prior: &NigPrior,
) -> Result<f64> {
    check_stage_inputs(f_prev, b_prev, m)?;
    let (x, mask) = forward_design(b_prev, m);
    let fs = forward_filter_masked(f_prev, &x, &mask, prior, d).map_err(stage_err(m))?;
    predictive_loglik(&fs).map_err(stage_err(m))
}

fn fit_regression(
    y: &[f64],
    x: &[f64],
    mask: &[bool],
    prior: &NigPrior,
    d: DiscountPair,
) -> Result<(FilterState, SmoothState)> {
    let fs = forward_filter_masked(y, x, mask, prior, d)?;
    let ss = backward_smooth(&fs, d)?;
    Ok((fs, ss))
}

/// Runs both regressions of lattice stage `m` and forms the next-stage prediction errors.
pub fn run_stage(
    f_prev: &[f64],
    b_prev: &[f64],
    m: usize,
    d_f: DiscountPair,
    d_b: DiscountPair,
    prior: &NigPrior,
) -> Result<StageResult> {
    check_stage_inputs(f_prev, b_prev, m)?;
    let n = f_prev.len();
    let (xf, mask_f) = forward_design(b_prev, m);
    let (xb, mask_b) = backward_design(f_prev, m);

    let (fwd, bwd) = rayon::join(
        || fit_regression(f_prev, &xf, &mask_f, prior, d_f),
        || fit_regression(b_prev, &xb, &mask_b, prior, d_b),
    );
    let (fwd_fs, fwd_ss) = fwd.map_err(stage_err(m))?;
    let (bwd_fs, bwd_ss) = bwd.map_err(stage_err(m))?;
    let loglik = predictive_loglik(&fwd_fs).map_err(stage_err(m))?;

    let mut f_next = f_prev.to_vec();
    for t in m..n {
        f_next[t] = f_prev[t] - fwd_ss.mu[t] * b_prev[t - m];
    }
    let mut b_next = b_prev.to_vec();
    for t in 0..n - m {
        b_next[t] = b_prev[t] - bwd_ss.mu[t] * f_prev[t + m];
    }
    for (what, series) in [("forward", &f_next), ("backward", &b_next)] {
        if let Some(t) = series.iter().position(|v| !v.is_finite()) {
            return Err(BlfError::Stage {
                stage: m,
                reason: format!("non-finite {what} prediction error at t = {t}"),
            });
        }
    }

    let alpha_var = (0..n).map(|t| fwd_ss.coef_variance(t).unwrap_or(fwd_ss.c[t])).collect();
    let beta_var = (0..n).map(|t| bwd_ss.coef_variance(t).unwrap_or(bwd_ss.c[t])).collect();

    Ok(StageResult {
        m,
        alpha: fwd_ss.mu,
        beta: bwd_ss.mu,
        alpha_var,
        beta_var,
        sf2: fwd_ss.s,
        sb2: bwd_ss.s,
        f_next,
        b_next,
        loglik,
        discounts_f: d_f,
        discounts_b: d_b,
        forward_filter: fwd_fs,
        backward_filter: bwd_fs,
    })
}

/// Forward predictive log-likelihoods `L_1, L_2, ...` of a lattice in which each stage passes on
/// its one-step forecast errors instead of smoothed residuals, so every stage input depends only
/// on past data. Stage `m` uses `per_stage[m - 1]`. Stops after the last stage or as soon as `stop` returns true for the values so
/// far.
pub fn predictive_scree(
    x: &[f64],
    per_stage: &[DiscountPair],
    prior: &NigPrior,
    mut stop: impl FnMut(&[f64]) -> bool,
) -> Result<Vec<f64>> {
    let p_max = per_stage.len();
    if p_max == 0 || p_max >= x.len() {
        return Err(BlfError::invalid(format!(
            "order must satisfy 1 <= P < T; got P = {p_max}, T = {}",
            x.len()
        )));
    }
    let mut f = x.to_vec();
    let mut b = x.to_vec();
    let mut scree = Vec::with_capacity(p_max);
    for (i, &d) in per_stage.iter().enumerate() {
        let m = i + 1;
        let (xf, mask_f) = forward_design(&b, m);
        let (xb, mask_b) = backward_design(&f, m);
        let fwd = forward_filter_masked(&f, &xf, &mask_f, prior, d).map_err(stage_err(m))?;
        let bwd = forward_filter_masked(&b, &xb, &mask_b, prior, d).map_err(stage_err(m))?;
        scree.push(predictive_loglik(&fwd).map_err(stage_err(m))?);
        if stop(&scree) {
            break;
        }
        // masked steps have e_t = 0; keep the input there
        for t in 0..f.len() {
            if mask_f[t] {
                f[t] = fwd.e[t];
            }
            if mask_b[t] {
                b[t] = bwd.e[t];
            }
        }
    }
    Ok(scree)
}

/// Chains `order` lattice stages starting from `f^(0) = b^(0) = x`.
pub fn run_lattice(
    x: &[f64],
    order: usize,
    per_stage: &[(DiscountPair, DiscountPair)],
    prior: &NigPrior,
) -> Result<LatticeRun> {
    if order == 0 || order >= x.len() {
        return Err(BlfError::invalid(format!(
            "order must satisfy 1 <= P < T; got P = {order}, T = {}",
            x.len()
        )));
    }
    if per_stage.len() != order {
        return Err(BlfError::LengthMismatch {
            what: "per-stage discounts",
            got: per_stage.len(),
            expected: order,
        });
    }
    let mut stages: Vec<StageResult> = Vec::with_capacity(order);
    for (i, &(d_f, d_b)) in per_stage.iter().enumerate() {
        let stage = match stages.last() {
            None => run_stage(x, x, 1, d_f, d_b, prior)?,
            Some(prev) => run_stage(&prev.f_next, &prev.b_next, i + 1, d_f, d_b, prior)?,
        };
        stages.push(stage);
    }
    Ok(LatticeRun {
        stages,
        x: x.to_vec(),
        prior: *prior,
    })
}
