use crate::scenario_sim::ComplexSignal;
use crate::sounding::{
    estimate_order_with, probe_spectrum, relax_estimate, DelayAmplitudeEstimate, MSequence,
    OrderEstimate, PeakRule, RelaxConfig,
};
use crate::{Error, Result};

/// Order estimation followed by delay/amplitude estimation with that
/// order, over all lags of one probe period.
pub fn sound_and_profile(
    received: &ComplexSignal,
    local: &MSequence,
    rule: &PeakRule,
    relax: &RelaxConfig,
) -> Result<(OrderEstimate, DelayAmplitudeEstimate)> {
    let order = estimate_order_with(received, local, rule)?;
    if order.order == 0 {
        return Err(Error::NoChannelDetected(format!(
            "no correlation peak above threshold {:.3e}",
            order.threshold
        )));
    }
    let freq = probe_spectrum(received, local)?;
    let profile = relax_estimate(&freq, order.order, 0..local.period(), relax)?;
    Ok((order, profile))
}
