//! Physical constants, unit conversions and elementary spectroscopic relations.
//!
//! Lengths are carried internally in meters and rates as ordinary frequencies
//! (value/2π, Hz). Wavelengths cross the public API in nm, linewidths in pm.

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_8128e-12;

pub const NM: f64 = 1e-9;
pub const PM: f64 = 1e-12;
pub const UM: f64 = 1e-6;

#[inline]
pub fn nm_to_m(nm: f64) -> f64 {
    nm * NM
}

#[inline]
pub fn m_to_nm(m: f64) -> f64 {
    m / NM
}

/// Optical frequency ν = c/λ in Hz for a wavelength in nm.
#[inline]
pub fn frequency_hz(lambda_nm: f64) -> f64 {
    C / nm_to_m(lambda_nm)
}

/// First-order map from a frequency offset (Hz) to a wavelength offset (nm)
/// around `lambda_nm`: δλ = −λ² δν / c.
#[inline]
pub fn frequency_offset_to_wavelength_nm(lambda_nm: f64, delta_nu_hz: f64) -> f64 {
    let lam = nm_to_m(lambda_nm);
    -m_to_nm(lam * lam * delta_nu_hz / C)
}

/// Inverse of [`frequency_offset_to_wavelength_nm`].
#[inline]
pub fn wavelength_offset_to_frequency_hz(lambda_nm: f64, delta_lambda_nm: f64) -> f64 {
    let lam = nm_to_m(lambda_nm);
    -C * nm_to_m(delta_lambda_nm) / (lam * lam)
}

/// Free spectral range in THz from a wavelength spacing: c·Δλ/λ².
pub fn fsr_wavelength_to_frequency(lambda_center_nm: f64, fsr_nm: f64) -> Result<f64> {
    if !(fsr_nm > 0.0 && lambda_center_nm > fsr_nm) || !lambda_center_nm.is_finite() {
        return Err(Error::Domain(format!(
            "need λ_center > Δλ_FSR > 0, got λ_center = {lambda_center_nm} nm, Δλ = {fsr_nm} nm"
        )));
    }
    let lam = nm_to_m(lambda_center_nm);
    Ok(C * nm_to_m(fsr_nm) / (lam * lam) / 1e12)
}

/// Loaded or intrinsic quality factor λ₀/δλ.
pub fn q_from_linewidth(lambda_nm: f64, linewidth_pm: f64) -> Result<f64> {
    if !(linewidth_pm > 0.0) || !(lambda_nm > 0.0) {
        return Err(Error::Domain(format!(
            "need positive wavelength and linewidth, got λ = {lambda_nm} nm, δλ = {linewidth_pm} pm"
        )));
    }
    Ok(lambda_nm * 1e3 / linewidth_pm)
}

/// Finesse Δλ_FSR/δλ.
pub fn finesse(fsr_nm: f64, linewidth_pm: f64) -> Result<f64> {
    if !(fsr_nm > 0.0) || !(linewidth_pm > 0.0) {
        return Err(Error::Domain(format!(
            "need positive FSR and linewidth, got Δλ = {fsr_nm} nm, δλ = {linewidth_pm} pm"
        )));
    }
    Ok(fsr_nm * 1e3 / linewidth_pm)
}

/// Linewidth in pm corresponding to a full-width decay rate κ/2π (Hz).
pub fn rate_to_linewidth_pm(lambda_nm: f64, rate_hz: f64) -> f64 {
    frequency_offset_to_wavelength_nm(lambda_nm, rate_hz).abs() * 1e3
}

/// Full-width decay rate κ/2π (Hz) corresponding to a linewidth in pm.
pub fn linewidth_pm_to_rate(lambda_nm: f64, linewidth_pm: f64) -> f64 {
    wavelength_offset_to_frequency_hz(lambda_nm, linewidth_pm * 1e-3).abs()
}
