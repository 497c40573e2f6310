//! Cavity-QED rates for an atom in the evanescent field of a disk mode.
//!
//! All rates are ordinary frequencies (value/2π, Hz).

use std::fmt;
use std::io::Write;

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::AtomLine;
use crate::modesolver::{field_at, ModeSolution, Position};
use crate::units::{frequency_hz, EPS0, HBAR};

/// Coherent coupling, cavity field decay and atomic dephasing at one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqedParams {
    pub g_hz: f64,
    pub kappa_hz: f64,
    pub gamma_perp_hz: f64,
    /// Distance from the disk surface along the outward normal (nm).
    pub distance_nm: f64,
}

impl CqedParams {
    pub fn new(g_hz: f64, kappa_hz: f64, gamma_perp_hz: f64, distance_nm: f64) -> Result<Self> {
        for (name, v) in [("g", g_hz), ("kappa", kappa_hz), ("gamma_perp", gamma_perp_hz)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("rate must be non-negative, got {v}"),
                });
            }
        }
        Ok(Self {
            g_hz,
            kappa_hz,
            gamma_perp_hz,
            distance_nm,
        })
    }
}

/// g/2π = (d/ħ)·√(ħω/(2ε₀V))·ψ/2π for a mode volume in m³.
pub fn coupling_rate_from_volume(veff_m3: f64, lambda_nm: f64, dipole_cm: f64, psi: f64) -> Result<f64> {
    ensure_positive("veff", veff_m3)?;
    ensure_positive("lambda", lambda_nm)?;
    ensure_positive("dipole", dipole_cm)?;
    if !(0.0..=1.0 + 1e-12).contains(&psi) {
        return Err(Error::InvalidParameter {
            name: "psi",
            reason: format!("normalized field must lie in [0, 1], got {psi}"),
        });
    }
    let omega = std::f64::consts::TAU * frequency_hz(lambda_nm);
    let e_vac = (HBAR * omega / (2.0 * EPS0 * veff_m3)).sqrt();
    Ok(dipole_cm * e_vac * psi / HBAR / std::f64::consts::TAU)
}

/// Single-photon coupling rate at `position` (Hz), using the mode's V_eff.
pub fn coupling_rate(mode: &ModeSolution, atom: &AtomLine, position: Position) -> Result<f64> {
    let psi = field_at(mode, position)?;
    coupling_rate_from_volume(mode.veff_m3, mode.lambda_nm, atom.dipole_moment(), psi)
}

/// Cavity field decay κ/2π = ν₀/(2Q) (Hz); infinite Q gives zero.
pub fn field_decay_rate(lambda_nm: f64, q: f64) -> Result<f64> {
    ensure_positive("lambda", lambda_nm)?;
    if !(q > 0.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("must be positive, got {q}"),
        });
    }
    Ok(frequency_hz(lambda_nm) / (2.0 * q))
}

/// Ratios that decide whether the atom-cavity system is strongly coupled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongCouplingReport {
    pub params: CqedParams,
    pub g_over_kappa: f64,
    pub g_over_gamma: f64,
    /// g²/(κγ⊥).
    pub cooperativity: f64,
    /// g > max(κ, γ⊥).
    pub strong: bool,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

pub fn strong_coupling_report(p: &CqedParams) -> StrongCouplingReport {
    StrongCouplingReport {
        params: *p,
        g_over_kappa: ratio(p.g_hz, p.kappa_hz),
        g_over_gamma: ratio(p.g_hz, p.gamma_perp_hz),
        cooperativity: ratio(p.g_hz * p.g_hz, p.kappa_hz * p.gamma_perp_hz),
        strong: p.g_hz > p.kappa_hz.max(p.gamma_perp_hz),
    }
}

impl StrongCouplingReport {
    /// Rows of `quantity,value_hz`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "quantity,value_hz")?;
        writeln!(w, "g,{:.9e}", self.params.g_hz)?;
        writeln!(w, "kappa,{:.9e}", self.params.kappa_hz)?;
        writeln!(w, "gamma_perp,{:.9e}", self.params.gamma_perp_hz)?;
        Ok(())
    }
}

impl fmt::Display for StrongCouplingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(f, "{:<16} {:>14}", "quantity", "value")?;
        writeln!(f, "{:<16} {:>14.4} nm", "distance", p.distance_nm)?;
        writeln!(f, "{:<16} {:>14.4} GHz", "g/2π", p.g_hz / 1e9)?;
        writeln!(f, "{:<16} {:>14.4} GHz", "κ/2π", p.kappa_hz / 1e9)?;
        writeln!(f, "{:<16} {:>14.4} GHz", "γ⊥/2π", p.gamma_perp_hz / 1e9)?;
        writeln!(f, "{:<16} {:>14.3}", "g/κ", self.g_over_kappa)?;
        writeln!(f, "{:<16} {:>14.3}", "g/γ⊥", self.g_over_gamma)?;
        writeln!(f, "{:<16} {:>14.4e}", "cooperativity", self.cooperativity)?;
        write!(f, "{:<16} {:>14}", "strong coupling", if self.strong { "yes" } else { "no" })
    }
}

/// g(d) along the outward rim normal in the mirror plane.
pub fn g_vs_distance(mode: &ModeSolution, atom: &AtomLine, d_grid_nm: &[f64]) -> Result<Vec<(f64, f64)>> {
    d_grid_nm
        .iter()
        .map(|&d| coupling_rate(mode, atom, Position::OutsideRim { distance_nm: d }).map(|g| (d, g)))
        .collect()
}

/// Writes a g(d) curve as `distance_nm,g_hz`.
pub fn write_g_curve<W: Write>(curve: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "distance_nm,g_hz")?;
    for (d, g) in curve {
        writeln!(w, "{d:.6},{g:.9e}")?;
    }
    Ok(())
}
