//! Scale-invariant signal-to-distortion ratio.

use crate::error::{Error, Result};

/// Residual-to-target energy ratio below which the SDR is capped.
const RESIDUAL_FLOOR: f64 = 1e-20;
/// Cap returned for a (near-)exact reconstruction.
pub const SDR_CAP_DB: f64 = 200.0;

/// Scale-invariant SDR in dB.
///
/// The estimate is projected onto the reference, `s_target = (<e,s>/<s,s>) s`,
/// and the ratio of target energy to residual energy is reported. Projection
/// makes the value invariant to rescaling the estimate. Returns the +200 dB
/// cap when the residual energy is below 1e-20 of the target energy, and
/// negative infinity when the estimate has no component along the reference.
pub fn compute_sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    let ref_energy: f64 = reference.iter().map(|s| s * s).sum();
    if ref_energy <= 0.0 {
        return Err(Error::ZeroReference);
    }
    let dot: f64 = reference.iter().zip(estimate).map(|(s, e)| s * e).sum();
    let scale = dot / ref_energy;
    let target_energy = scale * scale * ref_energy;
    if target_energy <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let residual_energy: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(s, e)| {
            let r = e - scale * s;
            r * r
        })
        .sum();
    if residual_energy < RESIDUAL_FLOOR * target_energy {
        return Ok(SDR_CAP_DB);
    }
    Ok(10.0 * (target_energy / residual_energy).log10())
}
