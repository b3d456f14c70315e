//! Discount-factor and order selection.
//!
//! Two strategies are provided. `BlfDyn` picks a discount pair per stage greedily by the
//! forward-regression predictive log-likelihood; `BlfFix` shares one pair across all stages.
//! The order is chosen from the stage log-likelihoods ("scree" values) by a percent-change rule.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dlm::{DiscountPair, NigPrior};
use crate::error::{BlfError, Result};
use crate::lattice::{
    forward_stage_loglik, predictive_scree, run_lattice, run_stage, LatticeRun, StageResult,
};
use crate::tvar::{assemble_fit, TvarFit};

/// Default percent-change threshold of the order rule.
pub const DEFAULT_TAU: f64 = 0.5;

/// Candidate discount values and maximum lattice order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub p_max: usize,
}

impl SearchGrid {
    /// Grid values are sorted ascending and deduplicated.
    pub fn new(mut gammas: Vec<f64>, mut deltas: Vec<f64>, p_max: usize) -> Result<Self> {
        for (name, vals) in [("gamma", &gammas), ("delta", &deltas)] {
            if vals.is_empty() {
                return Err(BlfError::invalid(format!("{name} grid is empty")));
            }
            if let Some(v) = vals.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
                return Err(BlfError::invalid(format!(
                    "{name} grid value {v} outside (0, 1]"
                )));
            }
        }
        if p_max == 0 {
            return Err(BlfError::invalid("p_max must be at least 1"));
        }
        for vals in [&mut gammas, &mut deltas] {
            vals.sort_by(f64::total_cmp);
            vals.dedup();
        }
        Ok(Self {
            gammas,
            deltas,
            p_max,
        })
    }

    /// `lo, lo + step, ..., hi` for both discounts.
    pub fn uniform(lo: f64, hi: f64, step: f64, p_max: usize) -> Result<Self> {
        if !(step > 0.0 && lo <= hi) {
            return Err(BlfError::invalid(format!(
                "invalid grid range [{lo}, {hi}] with step {step}"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        let vals: Vec<f64> = (0..=n)
            .map(|i| {
                let v = lo + i as f64 * step;
                // snap to 12 decimals so 0.8 + 5 * 0.02 prints as 0.9
                (v * 1e12).round() / 1e12
            })
            .collect();
        Self::new(vals.clone(), vals, p_max)
    }

    /// Pairs in `(gamma ascending, delta ascending)` order; ties in selection go to the first.
    pub fn pairs(&self) -> Vec<DiscountPair> {
        self.gammas
            .iter()
            .flat_map(|&gamma| self.deltas.iter().map(move |&delta| DiscountPair { gamma, delta }))
            .collect()
    }
}

impl Default for SearchGrid {
    /// 0.80 to 1.00 in steps of 0.02 for both discounts, orders up to 15.
    fn default() -> Self {
        Self::uniform(0.8, 1.0, 0.02, 15).expect("default grid is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    BlfFix,
    BlfDyn,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BlfFix => "blffix",
            Self::BlfDyn => "blfdyn",
        })
    }
}

impl FromStr for Method {
    type Err = BlfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blffix" | "fix" => Ok(Self::BlfFix),
            "blfdyn" | "dyn" => Ok(Self::BlfDyn),
            other => Err(BlfError::invalid(format!(
                "unknown method '{other}'; expected blffix or blfdyn"
            ))),
        }
    }
}

/// Order chosen by the percent-change rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderChoice {
    pub order: usize,
    /// The rule never fired and the maximum order was returned.
    pub saturated: bool,
}

/// Percent change `|(L_m - L_{m-1}) / L_{m-1}| * 100` for `m = 2..=len` (index 0 is `m = 2`).
pub fn percent_changes(scree: &[f64]) -> Result<Vec<f64>> {
    scree
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            if w[0] == 0.0 {
                Err(BlfError::invalid(format!(
                    "scree value at m = {} is zero; percent change undefined",
                    i + 1
                )))
            } else {
                Ok(((w[1] - w[0]) / w[0]).abs() * 100.0)
            }
        })
        .collect()
}

/// Smallest `m - 1` whose percent change from `L_{m-1}` to `L_m` falls below `tau`.
pub fn select_order(scree: &[f64], tau: f64) -> Result<OrderChoice> {
    if scree.len() < 2 {
        return Err(BlfError::invalid(format!(
            "order rule needs at least two scree values; got {}",
            scree.len()
        )));
    }
    if let Some(i) = scree.iter().position(|v| !v.is_finite()) {
        return Err(BlfError::NonFinite {
            what: "scree",
            t: i + 1,
        });
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(BlfError::invalid(format!("tau must be finite and >= 0; got {tau}")));
    }
    for (i, w) in scree.windows(2).enumerate() {
        let m = i + 2;
        if w[0] == 0.0 {
            return Err(BlfError::invalid(format!(
                "scree value at m = {} is zero; percent change undefined",
                m - 1
            )));
        }
        if ((w[1] - w[0]) / w[0]).abs() * 100.0 < tau {
            return Ok(OrderChoice {
                order: m - 1,
                saturated: false,
            });
        }
    }
    Ok(OrderChoice {
        order: scree.len(),
        saturated: true,
    })
}

/// Outcome of a selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub method: Method,
    pub chosen_order: usize,
    pub saturated: bool,
    pub tau: f64,
    /// Discount pair of each of the `p_max` stages.
    pub per_stage_discounts: Vec<DiscountPair>,
    /// Stage log-likelihoods `L_1..L_{p_max}`.
    pub scree: Vec<f64>,
    pub fit: TvarFit,
    /// Lattice run to `p_max`, retained for posterior sampling.
    pub run: LatticeRun,
}

fn check_length(x: &[f64], grid: &SearchGrid) -> Result<()> {
    if x.len() < grid.p_max + 2 {
        return Err(BlfError::invalid(format!(
            "series of length {} is too short for p_max = {} (need at least {})",
            x.len(),
            grid.p_max,
            grid.p_max + 2
        )));
    }
    Ok(())
}

/// First index of the maximum; NaN never wins.
fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn order_from_scree(scree: &[f64], tau: f64) -> Result<OrderChoice> {
    if scree.len() == 1 {
        Ok(OrderChoice {
            order: 1,
            saturated: true,
        })
    } else {
        select_order(scree, tau)
    }
}

/// Order rule on a forecast-error scree: the percent-change rule, but a stage that lowers the
/// predictive log-likelihood also ends the search.
fn predictive_order(scree: &[f64], tau: f64) -> Result<OrderChoice> {
    let rule = order_from_scree(scree, tau)?;
    match scree.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) if i + 1 < rule.order => Ok(OrderChoice {
            order: i + 1,
            saturated: false,
        }),
        _ => Ok(rule),
    }
}

/// Assembles the report; `scree` is the diagnostic that drove the order choice.
fn finish(
    method: Method,
    run: LatticeRun,
    per_stage_discounts: Vec<DiscountPair>,
    scree: Vec<f64>,
    choice: OrderChoice,
    tau: f64,
) -> Result<SelectionReport> {
    let fit = assemble_fit(&run, choice.order)?;
    Ok(SelectionReport {
        method,
        chosen_order: choice.order,
        saturated: choice.saturated,
        tau,
        per_stage_discounts,
        scree,
        fit,
        run,
    })
}

/// Greedy stage-wise search: at every stage keep the grid pair with the largest forward
/// predictive log-likelihood given the residuals fixed by earlier stages.
fn greedy_lattice(x: &[f64], grid: &SearchGrid, prior: &NigPrior) -> Result<(LatticeRun, Vec<DiscountPair>)> {
    let pairs = grid.pairs();
    let mut stages: Vec<StageResult> = Vec::with_capacity(grid.p_max);
    let mut chosen = Vec::with_capacity(grid.p_max);
    for m in 1..=grid.p_max {
        let (f_prev, b_prev) = match stages.last() {
            None => (x, x),
            Some(s) => (s.f_next.as_slice(), s.b_next.as_slice()),
        };
        let scores = pairs
            .par_iter()
            .map(|&d| forward_stage_loglik(f_prev, b_prev, m, d, prior))
            .collect::<Result<Vec<f64>>>()?;
        let best = argmax_first(&scores).ok_or_else(|| BlfError::Stage {
            stage: m,
            reason: "no grid point produced a finite log-likelihood".into(),
        })?;
        let d = pairs[best];
        stages.push(run_stage(f_prev, b_prev, m, d, d, prior)?);
        chosen.push(d);
    }
    let run = LatticeRun {
        stages,
        x: x.to_vec(),
        prior: *prior,
    };
    Ok((run, chosen))
}

/// Stage-wise greedy discount selection.
pub fn fit_blfdyn(x: &[f64], grid: &SearchGrid, prior: &NigPrior, tau: f64) -> Result<SelectionReport> {
    check_length(x, grid)?;
    let (run, chosen) = greedy_lattice(x, grid, prior)?;
    let scree = run.logliks();
    let choice = order_from_scree(&scree, tau)?;
    finish(Method::BlfDyn, run, chosen, scree, choice, tau)
}

/// Score of a shared pair: the order rule is applied to its forecast-error scree and the score is
/// the predictive log-likelihood at that order. Forecast errors keep the scores of different
/// pairs and orders comparable; smoothed residuals shrink in-sample as `gamma` falls.
fn shared_pair_score(
    x: &[f64],
    d: DiscountPair,
    grid: &SearchGrid,
    prior: &NigPrior,
    tau: f64,
) -> Result<(f64, usize)> {
    let scree = predictive_scree(x, &vec![d; grid.p_max], prior, |s| {
        s.len() >= 2 && predictive_order(s, tau).is_ok_and(|c| !c.saturated)
    })?;
    let order = predictive_order(&scree, tau)?.order;
    Ok((scree[order - 1], order))
}

/// One discount pair shared by every stage, chosen over the grid. The reported scree is the
/// forecast-error scree of the winning pair; the fit uses the smoothed lattice with that pair.
pub fn fit_blffix(x: &[f64], grid: &SearchGrid, prior: &NigPrior, tau: f64) -> Result<SelectionReport> {
    check_length(x, grid)?;
    let pairs = grid.pairs();
    let scores = pairs
        .par_iter()
        .map(|&d| shared_pair_score(x, d, grid, prior, tau))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let best = argmax_first(&scores.iter().map(|s| s.0).collect::<Vec<_>>())
        .ok_or_else(|| BlfError::invalid("no grid point produced a finite objective"))?;
    let d = pairs[best];
    let scree = predictive_scree(x, &vec![d; grid.p_max], prior, |_| false)?;
    let run = run_lattice(x, grid.p_max, &vec![(d, d); grid.p_max], prior)?;
    let choice = predictive_order(&scree, tau)?;
    finish(Method::BlfFix, run, vec![d; grid.p_max], scree, choice, tau)
}

/// Dispatches to [`fit_blffix`] or [`fit_blfdyn`].
pub fn fit_method(
    method: Method,
    x: &[f64],
    grid: &SearchGrid,
    prior: &NigPrior,
    tau: f64,
) -> Result<SelectionReport> {
    match method {
        Method::BlfFix => fit_blffix(x, grid, prior, tau),
        Method::BlfDyn => fit_blfdyn(x, grid, prior, tau),
    }
}

/// Lattice fit at a given order and discount pair, without any search.
pub fn fit_fixed(x: &[f64], order: usize, d: DiscountPair, prior: &NigPrior) -> Result<(LatticeRun, TvarFit)> {
    let run = run_lattice(x, order, &vec![(d, d); order], prior)?;
    let fit = assemble_fit(&run, order)?;
    Ok((run, fit))
}

/// One row of the scree diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeRow {
    pub m: usize,
    pub loglik: f64,
    /// Percent change from the previous stage; `None` for `m = 1`.
    pub pct_change: Option<f64>,
}

pub fn scree_table(report: &SelectionReport) -> Vec<ScreeRow> {
    report
        .scree
        .iter()
        .enumerate()
        .map(|(i, &loglik)| ScreeRow {
            m: i + 1,
            loglik,
            pct_change: (i > 0 && report.scree[i - 1] != 0.0)
                .then(|| ((loglik - report.scree[i - 1]) / report.scree[i - 1]).abs() * 100.0),
        })
        .collect()
}
