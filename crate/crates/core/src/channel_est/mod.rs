//! Time-varying channel estimation over a Slepian basis expansion.

mod bem;
mod dpss;

pub use bem::{
    bem_ls_estimate, estimate_windowed, BemCoefficients, BemLsEstimator, CirEstimate, CirSource,
    PilotFrame, WindowConfig,
};
pub use dpss::{basis_dimension, concentration, dpss_cached, generate_dpss, DpssBasis};
