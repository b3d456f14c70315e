use std::path::Path;

use anyhow::{bail, Context, Result};
use blf::{
    fit_fixed, fit_method, scree_table, spectrum_posterior, true_spectrum, tvar_spectrum, DiscountPair,
    LatticePosterior, LatticeRun, ScreeRow, Spectrogram, TvarFit,
};
use ndarray::{concatenate, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_process, BenchmarkArgs, FitArgs, FitMethod, RunConfig, SimulateArgs};
use crate::io;

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let kind = parse_process(&args.process)?;
    let freqs = blf::frequency_grid(args.freq_step)?;
    let sim = kind.generate(args.len, args.seed)?;
    let truth = true_spectrum(&sim, &freqs)?;
    ensure_dir(&args.out)?;
    io::write_series(&args.out.join("series.csv"), &sim.x)?;
    let sigma = Array2::from_shape_vec((sim.len(), 1), sim.true_sigma2.clone())?;
    let cols = concatenate(Axis(1), &[sim.true_coeffs.view(), sigma.view()])?;
    let header: Vec<String> = std::iter::once("t".to_owned())
        .chain((1..=sim.order()).map(|j| format!("a{j}")))
        .chain(std::iter::once("sigma2".to_owned()))
        .collect();
    let times: Vec<usize> = (1..=sim.len()).collect();
    io::write_table(&args.out.join("truth.csv"), &header, &times, &cols)?;
    io::write_spectrogram(&args.out.join("truth_spectrogram.csv"), &truth)?;
    println!("wrote {} observations of {kind} (seed {}) to {}", sim.len(), args.seed, args.out.display());
    Ok(())
}

/// Result of fitting one series under a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Fitted {
    pub order: usize,
    pub saturated: bool,
    pub discounts: Vec<DiscountPair>,
    pub scree: Vec<ScreeRow>,
    pub fit: TvarFit,
    pub run: LatticeRun,
}

fn rows_from(scree: &[f64]) -> Vec<ScreeRow> {
    scree
        .iter()
        .enumerate()
        .map(|(i, &loglik)| ScreeRow {
            m: i + 1,
            loglik,
            pct_change: (i > 0).then(|| ((loglik - scree[i - 1]) / scree[i - 1]).abs() * 100.0),
        })
        .collect()
}

pub fn fit_series(cfg: &RunConfig, x: &[f64]) -> Result<Fitted> {
    cfg.check_length(x.len())?;
    let prior = cfg.prior_for(x)?;
    Ok(match cfg.method {
        FitMethod::Select(method) => {
            let rep = fit_method(method, x, &cfg.grid, &prior, cfg.tau)?;
            Fitted {
                order: rep.chosen_order,
                saturated: rep.saturated,
                discounts: rep.per_stage_discounts.clone(),
                scree: scree_table(&rep),
                fit: rep.fit,
                run: rep.run,
            }
        }
        FitMethod::Fixed { pair, order } => {
            let (run, fit) = fit_fixed(x, order, pair, &prior)?;
            Fitted {
                order,
                saturated: false,
                discounts: vec![pair; order],
                scree: rows_from(&run.logliks()),
                fit,
                run,
            }
        }
    })
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let cfg = RunConfig::new(args.method, args.gamma, args.delta, args.order, &args.model)?;
    if args.draws == 1 {
        bail!("--draws must be 0 or at least 2");
    }
    let x = io::read_series(&args.input)?;
    let prior = cfg.prior_for(&x)?;
    let res = fit_series(&cfg, &x)?;
    let spec = tvar_spectrum(&res.fit, &cfg.freqs)?;

    ensure_dir(&args.out)?;
    let out = &args.out;
    io::write_coefficients(&out.join("coefficients.csv"), &res.fit.coeffs)?;
    io::write_variance(&out.join("variance.csv"), &res.fit.sigma2)?;
    io::write_scree(&out.join("scree.csv"), &res.scree)?;
    io::write_spectrogram(&out.join("spectrogram.csv"), &spec)?;
    if args.draws > 0 {
        let sampler = LatticePosterior::new(&res.run, res.order)?;
        let post = spectrum_posterior(&sampler, args.draws, &cfg.freqs, args.seed)?;
        io::write_log_surface(&out.join("posterior_mean.csv"), &post.times, &post.freqs, &post.mean_log)?;
        io::write_log_surface(&out.join("posterior_sd.csv"), &post.times, &post.freqs, &post.sd_log)?;
    }
    let report = io::FitReport {
        method: cfg.method.name(),
        n: x.len(),
        chosen_order: res.order,
        saturated: res.saturated,
        tau: cfg.tau,
        p_max: cfg.method.max_order(&cfg.grid),
        gammas: res.discounts.iter().map(|d| d.gamma).collect(),
        deltas: res.discounts.iter().map(|d| d.delta).collect(),
        scree: res.scree.iter().map(|r| r.loglik).collect(),
        prior_mu0: prior.mu0,
        prior_c0: prior.c0,
        prior_v0: prior.v0,
        prior_kappa0: prior.kappa0,
        draws: args.draws,
        seed: args.seed,
    };
    io::write_toml(&out.join("report.toml"), &report)?;
    println!(
        "{}: order {}{} on {} observations; outputs in {}",
        report.method,
        res.order,
        if res.saturated { " (saturated)" } else { "" },
        x.len(),
        out.display()
    );
    Ok(())
}

/// One replicate and method of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub method: String,
    pub outcome: std::result::Result<(f64, usize), String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_ase: f64,
    pub sd_ase: f64,
    /// `order_counts[p - 1]` replicates chose order `p`.
    pub order_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub process: String,
    pub replicates: usize,
    pub length: usize,
    pub seed: u64,
    pub self_test: bool,
    pub methods: Vec<MethodSummary>,
}

fn score(cfg: &RunConfig, x: &[f64], truth: &Spectrogram) -> Result<(f64, usize)> {
    let res = fit_series(cfg, x)?;
    let est = tvar_spectrum(&res.fit, &cfg.freqs)?;
    Ok((blf::ase(&est, truth)?, res.order))
}

pub fn summarize(name: &str, results: &[ReplicateResult]) -> MethodSummary {
    let ok: Vec<(f64, usize)> = results
        .iter()
        .filter(|r| r.method == name)
        .filter_map(|r| r.outcome.as_ref().ok().copied())
        .collect();
    let failed = results.iter().filter(|r| r.method == name && r.outcome.is_err()).count();
    let n = ok.len() as f64;
    let mean = ok.iter().map(|r| r.0).sum::<f64>() / n;
    let sd = (ok.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let top = ok.iter().map(|r| r.1).max().unwrap_or(0);
    let mut order_counts = vec![0; top];
    for &(_, p) in &ok {
        order_counts[p - 1] += 1;
    }
    MethodSummary {
        method: name.to_owned(),
        succeeded: ok.len(),
        failed,
        mean_ase: mean,
        sd_ase: sd,
        order_counts,
    }
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let kind = parse_process(&args.process)?;
    if args.n == 0 || args.method.is_empty() {
        bail!("benchmark needs at least one replicate and one method");
    }
    let cfgs = args
        .method
        .iter()
        .map(|&m| RunConfig::new(m, args.gamma, args.delta, args.order, &args.model))
        .collect::<Result<Vec<_>>>()?;
    let freqs = cfgs[0].freqs.clone();

    let results: Vec<ReplicateResult> = (0..args.n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let seed = args.seed + i as u64;
            let sim = kind
                .generate(args.len, seed)
                .and_then(|s| true_spectrum(&s, &freqs).map(|t| (s, t)));
            cfgs.iter()
                .map(|cfg| {
                    let outcome = match &sim {
                        Err(e) => Err(e.to_string()),
                        Ok((s, truth)) if args.self_test => {
                            blf::ase(truth, truth).map(|a| (a, s.order())).map_err(|e| e.to_string())
                        }
                        Ok((s, truth)) => score(cfg, &s.x, truth).map_err(|e| format!("{e:#}")),
                    };
                    ReplicateResult {
                        replicate: i,
                        seed,
                        method: cfg.method.name(),
                        outcome,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    ensure_dir(&args.out)?;
    let path = args.out.join("benchmark.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["replicate", "seed", "method", "ase", "order", "error"])?;
    for r in &results {
        let (ase, order, err) = match &r.outcome {
            Ok((a, p)) => (io::num(*a), p.to_string(), String::new()),
            Err(e) => (String::new(), String::new(), e.clone()),
        };
        w.write_record([r.replicate.to_string(), r.seed.to_string(), r.method.clone(), ase, order, err])?;
    }
    w.flush()?;

    let summary = BenchmarkSummary {
        process: kind.name().to_owned(),
        replicates: args.n,
        length: args.len,
        seed: args.seed,
        self_test: args.self_test,
        methods: cfgs.iter().map(|c| summarize(&c.method.name(), &results)).collect(),
    };
    io::write_toml(&args.out.join("benchmark_summary.toml"), &summary)?;
    for m in &summary.methods {
        println!(
            "{} {}: mean ASE {:.4} ({:.4}) over {} replicates, {} failed",
            summary.process, m.method, m.mean_ase, m.sd_ase, m.succeeded, m.failed
        );
    }
    for r in results.iter().filter(|r| r.outcome.is_err()) {
        eprintln!("replicate {} (seed {}) {}: {}", r.replicate, r.seed, r.method, r.outcome.as_ref().unwrap_err());
    }
    if summary.methods.iter().all(|m| m.succeeded == 0) {
        bail!("every replicate failed");
    }
    Ok(())
}
