//! Time-varying Levinson recursion: PARCOR paths to TVAR coefficients.

use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use rand_chacha::ChaCha8Rng;

use crate::dlm::backward_sample;
use crate::error::{BlfError, Result};
use crate::lattice::LatticeRun;

/// Fitted TVAR(P) model: `x_t = sum_m coeffs[t][m-1] x_{t-m} + eps_t`, `eps_t ~ N(0, sigma2[t])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvarFit {
    pub order: usize,
    /// `T x P` coefficient grid.
    pub coeffs: Array2<f64>,
    pub sigma2: Vec<f64>,
    /// Stage log-likelihoods of stages `1..=order`.
    pub order_loglik: Vec<f64>,
}

impl TvarFit {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }
}

/// Levinson step for a single time slice. `a` and `d` hold the stage-`m` forward and backward
/// coefficients on return; `scratch` must have the same length.
fn levinson_slice(
    alpha: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    mut a: ArrayViewMut1<f64>,
    mut d: ArrayViewMut1<f64>,
    scratch: &mut [f64],
) {
    let p = alpha.len();
    if p == 0 {
        return;
    }
    a[0] = alpha[0];
    d[0] = beta[0];
    for m in 2..=p {
        let (am, dm) = (alpha[m - 1], beta[m - 1]);
        // a_k^(m) = a_k^(m-1) - a_m^(m) d_{m-k}^(m-1)
        // d_k^(m) = d_k^(m-1) - d_m^(m) a_{m-k}^(m-1)
        for k in 1..m {
            scratch[k - 1] = a[k - 1] - am * d[m - k - 1];
        }
        for k in 1..m {
            d[k - 1] -= dm * a[m - k - 1];
        }
        for k in 1..m {
            a[k - 1] = scratch[k - 1];
        }
        a[m - 1] = am;
        d[m - 1] = dm;
    }
}

/// Maps forward (`alpha`) and backward (`beta`) PARCOR grids of shape `T x P` to the forward
/// and backward TVAR coefficient grids of the same shape. Each time slice is independent.
pub fn parcor_to_tvar(alpha: &Array2<f64>, beta: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if alpha.dim() != beta.dim() {
        return Err(BlfError::invalid(format!(
            "PARCOR grids differ in shape: {:?} vs {:?}",
            alpha.dim(),
            beta.dim()
        )));
    }
    if let Some(((t, _), _)) = alpha
        .indexed_iter()
        .chain(beta.indexed_iter())
        .find(|(_, v)| !v.is_finite())
    {
        return Err(BlfError::NonFinite {
            what: "PARCOR grid",
            t,
        });
    }
    let (n, p) = alpha.dim();
    let mut a = Array2::zeros((n, p));
    let mut d = Array2::zeros((n, p));
    let mut scratch = vec![0.0; p];
    for t in 0..n {
        levinson_slice(
            alpha.row(t),
            beta.row(t),
            a.row_mut(t),
            d.row_mut(t),
            &mut scratch,
        );
    }
    Ok((a, d))
}

/// Builds the TVAR(`order`) fit from the first `order` stages of a lattice run.
pub fn assemble_fit(run: &LatticeRun, order: usize) -> Result<TvarFit> {
    if order == 0 || order > run.stages.len() {
        return Err(BlfError::invalid(format!(
            "order {order} not available; lattice has {} stages",
            run.stages.len()
        )));
    }
    let n = run.x.len();
    let mut alpha = Array2::zeros((n, order));
    let mut beta = Array2::zeros((n, order));
    for (j, stage) in run.stages[..order].iter().enumerate() {
        for t in 0..n {
            alpha[[t, j]] = stage.alpha[t];
            beta[[t, j]] = stage.beta[t];
        }
    }
    let (coeffs, _) = parcor_to_tvar(&alpha, &beta)?;
    Ok(TvarFit {
        order,
        coeffs,
        sigma2: run.stages[order - 1].sf2.clone(),
        order_loglik: run.stages[..order].iter().map(|s| s.loglik).collect(),
    })
}

/// Source of posterior draws of a TVAR coefficient grid and innovation-variance path.
pub trait TvarSampler: Sync {
    /// Number of time points in every draw.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sample_tvar(&self, rng: &mut ChaCha8Rng) -> Result<(Array2<f64>, Vec<f64>)>;
}

/// Posterior of a TVAR(`order`) fit implied by a lattice run.
///
/// Each draw samples every stage's forward and backward PARCOR path by backward sampling,
/// conditional on that stage's input prediction errors, and the innovation variance path from
/// the last stage's forward regression.
#[derive(Debug, Clone, Copy)]
pub struct LatticePosterior<'a> {
    run: &'a LatticeRun,
    order: usize,
}

impl<'a> LatticePosterior<'a> {
    pub fn new(run: &'a LatticeRun, order: usize) -> Result<Self> {
        if order == 0 || order > run.stages.len() {
            return Err(BlfError::invalid(format!(
                "order {order} not available; lattice has {} stages",
                run.stages.len()
            )));
        }
        Ok(Self { run, order })
    }
}

impl TvarSampler for LatticePosterior<'_> {
    fn len(&self) -> usize {
        self.run.x.len()
    }

    fn sample_tvar(&self, rng: &mut ChaCha8Rng) -> Result<(Array2<f64>, Vec<f64>)> {
        let n = self.len();
        let mut alpha = Array2::zeros((n, self.order));
        let mut beta = Array2::zeros((n, self.order));
        let mut sigma2 = Vec::new();
        for (j, stage) in self.run.stages[..self.order].iter().enumerate() {
            let fwd = backward_sample(&stage.forward_filter, stage.discounts_f, rng)?;
            let bwd = backward_sample(&stage.backward_filter, stage.discounts_b, rng)?;
            for t in 0..n {
                alpha[[t, j]] = fwd.theta[t];
                beta[[t, j]] = bwd.theta[t];
            }
            if j + 1 == self.order {
                sigma2 = fwd.sigma2;
            }
        }
        let (coeffs, _) = parcor_to_tvar(&alpha, &beta)?;
        Ok((coeffs, sigma2))
    }
}
