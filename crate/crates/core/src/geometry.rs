//! Disk, material, band, mode and atom descriptions shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::units::{self, C, EPS0, HBAR, NM, UM};

/// Microdisk dimensions. Stored in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGeometry {
    diameter: f64,
    thickness: f64,
    pedestal_diameter: Option<f64>,
}

impl DiskGeometry {
    pub fn new(diameter_um: f64, thickness_nm: f64) -> Result<Self> {
        ensure_positive("diameter", diameter_um)?;
        ensure_positive("thickness", thickness_nm)?;
        let diameter = diameter_um * UM;
        let thickness = thickness_nm * NM;
        if thickness >= diameter {
            return Err(Error::InvalidParameter {
                name: "thickness",
                reason: "must be smaller than the diameter".into(),
            });
        }
        Ok(Self {
            diameter,
            thickness,
            pedestal_diameter: None,
        })
    }

    /// Informational only; the mode solver treats the disk as suspended.
    pub fn with_pedestal(mut self, pedestal_diameter_um: f64) -> Result<Self> {
        ensure_positive("pedestal_diameter", pedestal_diameter_um)?;
        self.pedestal_diameter = Some(pedestal_diameter_um * UM);
        Ok(self)
    }

    pub fn diameter_m(&self) -> f64 {
        self.diameter
    }
    pub fn radius_m(&self) -> f64 {
        0.5 * self.diameter
    }
    pub fn thickness_m(&self) -> f64 {
        self.thickness
    }
    pub fn diameter_um(&self) -> f64 {
        self.diameter / UM
    }
    pub fn thickness_nm(&self) -> f64 {
        self.thickness / NM
    }
    pub fn pedestal_diameter_um(&self) -> Option<f64> {
        self.pedestal_diameter.map(|d| d / UM)
    }
}

/// Refractive indices of the disk and its surround.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialStack {
    pub n_disk: f64,
    pub n_clad: f64,
    pub n_substrate: Option<f64>,
}

impl MaterialStack {
    pub fn new(n_disk: f64, n_clad: f64) -> Result<Self> {
        let stack = Self {
            n_disk,
            n_clad,
            n_substrate: None,
        };
        stack.validate()?;
        Ok(stack)
    }

    /// Stoichiometric LPCVD silicon nitride in vacuum.
    pub fn silicon_nitride() -> Self {
        Self {
            n_disk: 2.0,
            n_clad: 1.0,
            n_substrate: Some(3.6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_clad >= 1.0 && self.n_disk > self.n_clad) {
            return Err(Error::InvalidParameter {
                name: "n_disk",
                reason: format!(
                    "need n_disk > n_clad >= 1, got n_disk = {}, n_clad = {}",
                    self.n_disk, self.n_clad
                ),
            });
        }
        Ok(())
    }
}

/// Closed wavelength interval in nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthBand {
    lambda_min_nm: f64,
    lambda_max_nm: f64,
}

impl WavelengthBand {
    pub fn new(lambda_min_nm: f64, lambda_max_nm: f64) -> Result<Self> {
        ensure_positive("lambda_min", lambda_min_nm)?;
        if !(lambda_min_nm < lambda_max_nm) || !lambda_max_nm.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda_max",
                reason: format!("need λ_min < λ_max, got [{lambda_min_nm}, {lambda_max_nm}]"),
            });
        }
        Ok(Self {
            lambda_min_nm,
            lambda_max_nm,
        })
    }

    pub fn min_nm(&self) -> f64 {
        self.lambda_min_nm
    }
    pub fn max_nm(&self) -> f64 {
        self.lambda_max_nm
    }
    pub fn center_nm(&self) -> f64 {
        0.5 * (self.lambda_min_nm + self.lambda_max_nm)
    }
    pub fn contains(&self, lambda_nm: f64) -> bool {
        lambda_nm >= self.lambda_min_nm && lambda_nm <= self.lambda_max_nm
    }
    /// Band widened by `fraction` of its center wavelength on each side.
    pub fn widened(&self, fraction: f64) -> Self {
        let pad = fraction * self.center_nm();
        Self {
            lambda_min_nm: self.lambda_min_nm - pad,
            lambda_max_nm: self.lambda_max_nm + pad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    /// Dominant electric field in the disk plane.
    TeLike,
    /// Dominant electric field along the disk axis.
    TmLike,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::TeLike => write!(f, "TE"),
            Polarization::TmLike => write!(f, "TM"),
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "te" | "te-like" => Ok(Polarization::TeLike),
            "tm" | "tm-like" => Ok(Polarization::TmLike),
            other => Err(Error::Parse(format!("unknown polarization `{other}`"))),
        }
    }
}

/// Whispering-gallery mode label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeId {
    pub m: u32,
    pub p: u32,
    pub polarization: Polarization,
}

impl ModeId {
    pub fn new(m: u32, p: u32, polarization: Polarization) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::InvalidParameter {
                name: "mode id",
                reason: format!("m and p must be >= 1, got m = {m}, p = {p}"),
            });
        }
        Ok(Self { m, p, polarization })
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(m={}, p={})", self.polarization, self.m, self.p)
    }
}

/// Whether a stored rate is an ordinary frequency (value/2π) or angular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateConvention {
    /// Rate given as Γ/2π in Hz.
    OrdinaryHz,
    /// Rate given in rad/s.
    AngularRadPerSec,
}

/// Two-level atomic transition seen by the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomLine {
    lambda_atom_nm: f64,
    dipole_moment: f64,
    /// Always held as value/2π.
    gamma_perp_hz: f64,
}

impl AtomLine {
    pub fn new(
        lambda_atom_nm: f64,
        dipole_moment_cm: f64,
        gamma_perp: f64,
        convention: RateConvention,
    ) -> Result<Self> {
        ensure_positive("lambda_atom", lambda_atom_nm)?;
        ensure_positive("dipole_moment", dipole_moment_cm)?;
        ensure_positive("gamma_perp", gamma_perp)?;
        let gamma_perp_hz = match convention {
            RateConvention::OrdinaryHz => gamma_perp,
            RateConvention::AngularRadPerSec => gamma_perp / std::f64::consts::TAU,
        };
        Ok(Self {
            lambda_atom_nm,
            dipole_moment: dipole_moment_cm,
            gamma_perp_hz,
        })
    }

    /// Cesium D2 line on the |F=4, m=4⟩ → |F'=5, m'=5⟩ cycling transition.
    ///
    /// The dipole moment follows from the excited-state lifetime of a closed
    /// two-level transition, Γ = ω³d²/(3πε₀ħc³), with Γ/2π = 5.234 MHz; the
    /// transverse rate is Γ/2.
    pub fn cesium_d2() -> Self {
        let lambda_nm = 852.347_27;
        let gamma = std::f64::consts::TAU * 5.234e6;
        let omega = std::f64::consts::TAU * units::frequency_hz(lambda_nm);
        let d = (3.0 * std::f64::consts::PI * EPS0 * HBAR * C.powi(3) * gamma / omega.powi(3)).sqrt();
        Self {
            lambda_atom_nm: lambda_nm,
            dipole_moment: d,
            gamma_perp_hz: 0.5 * gamma / std::f64::consts::TAU,
        }
    }

    pub fn lambda_nm(&self) -> f64 {
        self.lambda_atom_nm
    }
    pub fn dipole_moment(&self) -> f64 {
        self.dipole_moment
    }
    pub fn gamma_perp_hz(&self) -> f64 {
        self.gamma_perp_hz
    }
}
