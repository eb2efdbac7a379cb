//! Minimum mean-squared error with finite lookahead for continuous-time signals
//! observed in additive white Gaussian noise.
//!
//! The observation is `dY_t = sqrt(snr) X_t dt + dW_t`. For a lookahead `d` the
//! estimator of `X_0` sees `Y` on `(-inf, d]`; `d < 0` is prediction across a gap.
//!
//! - [`ou`]: closed forms for the Ornstein-Uhlenbeck process.
//! - [`mixture`]: mixtures of OU processes and Gaussian bounds on their error.
//! - [`spectral`]: Wiener-Hopf factorization for rational and tabulated spectra.
//! - [`utility`]: mutual information gained from lookahead.
//! - [`jump`]: observation with an SNR jump at time 0.
//! - [`markov`]: piecewise-constant Markov-chain processes and their reversals.
//! - [`sim`]: Monte Carlo oracles built on exact discretization.

pub mod error;
pub mod io;
pub mod jump;
pub mod markov;
pub mod mixture;
pub mod model;
pub mod ou;
pub mod quad;
pub mod roots;
pub mod sim;
pub mod spectral;
pub mod utility;

pub use error::{Error, Result};
pub use jump::{jump_f_mc, jump_f_ou, theorem1_check, JumpChannelSpec, JumpError, QuadConfig, Theorem1Report};
pub use markov::{dtmc_reverse, lmmse_infinite_snr, lmmse_shifted, prediction_variance, theorem2_report, Dtmc, HmmOptions};
pub use mixture::{gaussian_lower_bound, gaussian_upper_bound, mixture_lmmse, BoundPair, MixingMeasure};
pub use model::{ChannelSpec, Lookahead, LmmseCurve, OuParams, ProcessConfig, ProcessSpec, ValidatedSpec};
pub use ou::{cmmse_ou, d_star, gamma_inf, lmmse_ou, mmse_ou, pd_ratio, tradeoff, TradeoffResult};
pub use sim::{McConfig, McEstimate};
pub use spectral::{decay_rate, factorize_numeric, factorize_rational, RationalSpectrum, TabulatedSpectrum};
