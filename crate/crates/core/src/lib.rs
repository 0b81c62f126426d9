//! Additive Bachelier option pricing.
//!
//! The forward follows `F_t = F_0 + f_t` with `f_t` an additive process built
//! by subordinating a Brownian motion to a tempered-stable clock. The crate
//! covers Fourier and mixture pricing, the maturity-free implied-volatility
//! smile, a three-stage calibration cascade, Monte Carlo simulation and the
//! file formats used by the command-line driver.

pub mod bachelier;
pub mod calib;
pub mod chf;
pub mod error;
pub mod interp;
pub mod marketio;
pub mod mc;
pub mod normal;
pub mod pricer;
pub mod quad;
pub mod smile;
pub mod subordinator;

pub use chf::{
    log_cf, psi, strip_bounds, validate_additivity, validate_law, AdditiveLaw, AdditivityCondition,
    AdditivityReport, Alpha, CurveParams, ModelParams, SliceParams, SmileParams, StripBounds, TimeCurve,
    VolCurve, VolOfVol,
};
pub use bachelier::{bachelier_call, cb, greeks, implied_vol, Greeks, Quote};
pub use error::{Error, Result};
pub use pricer::{
    levy_benchmark_params, lewis_call, mixture_call, put_from_call, Contour, LevyParams, QuadratureConfig,
};
pub use smile::{atm_expansion, normalized_smile, skew, smile_derivatives, smile_i, wing_limits, AtmExpansion, SmileFunction};
pub use calib::{calibrate, CalibConfig, CalibrationResult, MarketCurves};
pub use marketio::{load_chain, load_ois, year_fraction, OisCurve, OptionChain, ResultArchive};
pub use mc::{price_exotic, sample_g, sample_marginal, sample_paths, McOptions, PathGrid, Payoff, RngSpec};
