//! Bayesian lattice filter for time-varying autoregressive (TVAR) models.
//!
//! The lattice runs one scalar discounted dynamic linear model per stage and direction to
//! estimate time-varying forward and backward PARCOR coefficients, converts them to TVAR
//! coefficients with the time-varying Levinson recursion, and evaluates the implied
//! time-varying spectral density. Discount factors and the model order are chosen from a grid
//! by predictive log-likelihood.
//!
//! ```
//! use blf::{fit_blfdyn, gen_tvar2, tvar_spectrum, default_frequency_grid, NigPrior, SearchGrid};
//!
//! let sim = gen_tvar2(256, 7).unwrap();
//! let prior = NigPrior::from_signal(&sim.x, blf::PRIOR_SEGMENT).unwrap();
//! let grid = SearchGrid::uniform(0.9, 1.0, 0.05, 4).unwrap();
//! let report = fit_blfdyn(&sim.x, &grid, &prior, 0.5).unwrap();
//! let spec = tvar_spectrum(&report.fit, &default_frequency_grid()).unwrap();
//! assert_eq!(spec.n_freqs(), 101);
//! ```

pub mod dlm;
pub mod error;
pub mod lattice;
pub mod selection;
pub mod simgen;
pub mod spectrum;
pub mod tvar;

pub use dlm::{
    backward_sample, backward_smooth, forward_filter, forward_filter_masked, predictive_loglik,
    DiscountPair, FilterState, NigPrior, PosteriorPath, SmoothState,
};
pub use error::{BlfError, Result};
pub use lattice::{predictive_scree, run_lattice, run_stage, LatticeRun, StageResult};
pub use selection::{
    fit_blfdyn, fit_blffix, fit_fixed, fit_method, scree_table, select_order, Method, OrderChoice, ScreeRow,
    SearchGrid, SelectionReport, DEFAULT_TAU,
};
pub use simgen::{
    gen_piecewise, gen_tvar2, gen_tvar6, gen_tvvar, roots_to_coeffs, true_spectrum, ProcessKind,
    SimulatedProcess,
};
pub use spectrum::{
    ar_spectrum, ase, default_frequency_grid, frequency_grid, spectrum_posterior, tvar_spectrum,
    Spectrogram, SpectrumPosterior,
};
pub use tvar::{assemble_fit, parcor_to_tvar, LatticePosterior, TvarFit, TvarSampler};

/// Number of leading observations whose sample variance sets the default prior.
pub const PRIOR_SEGMENT: usize = 100;
