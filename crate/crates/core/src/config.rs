//! Structured job description shared by the command-line subcommands.
//!
//! Every table rejects unknown keys. Sections are optional at parse time;
//! each subcommand states which ones it needs via the `require_*` accessors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cmt::{JointLossModel, ResonatorCMTParams};
use crate::error::{Error, Result};
use crate::geometry::{AtomLine, DiskGeometry, MaterialStack, Polarization, RateConvention, WavelengthBand};
use crate::modesolver::SolverConfig;
use crate::perturb::{EtchModel, ThermalModel};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub geometry: Option<GeometrySection>,
    pub materials: Option<MaterialsSection>,
    pub band: Option<BandSection>,
    pub modes: Option<ModesSection>,
    pub solver: Option<SolverSection>,
    pub atom: Option<AtomSection>,
    pub qed: Option<QedSection>,
    #[serde(default)]
    pub resonator: Vec<ResonatorCMTParams>,
    pub spectrum: Option<SpectrumSection>,
    pub joints: Option<JointLossModel>,
    pub tuning: Option<TuningSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub diameter_um: f64,
    pub thickness_nm: f64,
    pub pedestal_diameter_um: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    pub n_disk: f64,
    #[serde(default = "one")]
    pub n_clad: f64,
    pub n_substrate: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub min_nm: f64,
    pub max_nm: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    pub m_min: u32,
    pub m_max: u32,
    #[serde(default = "default_p_max")]
    pub p_max: u32,
    #[serde(default = "default_polarization")]
    pub polarization: Polarization,
    #[serde(default)]
    pub write_fields: bool,
}

fn default_p_max() -> u32 {
    1
}

fn default_polarization() -> Polarization {
    Polarization::TeLike
}

/// Overrides of the numerical solver defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub grid_spacing_nm: Option<f64>,
    pub max_refinements: Option<usize>,
    pub convergence_tol_nm: Option<f64>,
    pub pml_nm: Option<f64>,
    pub cladding_nm: Option<f64>,
    pub q_ceiling: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "profile")]
pub enum AtomSection {
    CesiumD2,
    Custom {
        lambda_nm: f64,
        dipole_cm: f64,
        gamma_perp: f64,
        convention: RateConvention,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QedSection {
    /// Azimuthal number of the mode; defaults to the p = 1 mode nearest the atom line.
    pub m: Option<u32>,
    /// Intrinsic Q setting the cavity field decay.
    pub q: f64,
    #[serde(default)]
    pub distance_nm: f64,
    #[serde(default)]
    pub sweep_distances_nm: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub start_nm: f64,
    pub end_nm: f64,
    pub samples: usize,
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub current_nm: f64,
    pub target_nm: Option<f64>,
    pub etch_rate_nm_per_min: Option<f64>,
    pub thermal_slope_nm_per_c: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

fn missing(section: &str) -> Error {
    Error::InvalidParameter {
        name: "config",
        reason: format!("missing required section [{section}]"),
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn require_geometry(&self) -> Result<DiskGeometry> {
        let g = self.geometry.ok_or_else(|| missing("geometry"))?;
        let geom = DiskGeometry::new(g.diameter_um, g.thickness_nm)?;
        match g.pedestal_diameter_um {
            Some(p) => geom.with_pedestal(p),
            None => Ok(geom),
        }
    }

    pub fn require_materials(&self) -> Result<MaterialStack> {
        let m = self.materials.ok_or_else(|| missing("materials"))?;
        let mut mat = MaterialStack::new(m.n_disk, m.n_clad)?;
        mat.n_substrate = m.n_substrate;
        Ok(mat)
    }

    pub fn require_band(&self) -> Result<WavelengthBand> {
        let b = self.band.ok_or_else(|| missing("band"))?;
        WavelengthBand::new(b.min_nm, b.max_nm)
    }

    pub fn require_modes(&self) -> Result<ModesSection> {
        self.modes.ok_or_else(|| missing("modes"))
    }

    pub fn require_qed(&self) -> Result<&QedSection> {
        self.qed.as_ref().ok_or_else(|| missing("qed"))
    }

    pub fn require_spectrum(&self) -> Result<SpectrumSection> {
        let s = self.spectrum.ok_or_else(|| missing("spectrum"))?;
        if !(s.end_nm > s.start_nm) || s.samples < 2 {
            return Err(Error::InvalidParameter {
                name: "spectrum",
                reason: "need end_nm > start_nm and at least 2 samples".into(),
            });
        }
        Ok(s)
    }

    pub fn require_resonators(&self) -> Result<&[ResonatorCMTParams]> {
        if self.resonator.is_empty() {
            return Err(missing("resonator"));
        }
        for r in &self.resonator {
            r.validate()?;
        }
        Ok(&self.resonator)
    }

    pub fn joints(&self) -> Result<JointLossModel> {
        match self.joints {
            Some(j) => JointLossModel::new(j.per_joint_transmission, j.n_joints),
            None => Ok(JointLossModel::lossless()),
        }
    }

    pub fn atom(&self) -> Result<AtomLine> {
        match self.atom {
            None | Some(AtomSection::CesiumD2) => Ok(AtomLine::cesium_d2()),
            Some(AtomSection::Custom {
                lambda_nm,
                dipole_cm,
                gamma_perp,
                convention,
            }) => AtomLine::new(lambda_nm, dipole_cm, gamma_perp, convention),
        }
    }

    pub fn solver(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(s) = self.solver {
            if let Some(v) = s.grid_spacing_nm {
                cfg.grid_spacing_nm = v;
            }
            if let Some(v) = s.max_refinements {
                cfg.max_refinements = v;
            }
            if let Some(v) = s.convergence_tol_nm {
                cfg.convergence_tol_nm = v;
            }
            if let Some(v) = s.pml_nm {
                cfg.pml_nm = v;
            }
            if let Some(v) = s.cladding_nm {
                cfg.cladding_nm = v;
            }
            if let Some(v) = s.q_ceiling {
                cfg.q_ceiling = v;
            }
        }
        cfg
    }

    pub fn etch_model(&self) -> Result<EtchModel> {
        match self.tuning.and_then(|t| t.etch_rate_nm_per_min) {
            Some(r) => EtchModel::new(r),
            None => Ok(EtchModel::default()),
        }
    }

    pub fn thermal_model(&self) -> Result<ThermalModel> {
        match self.tuning.and_then(|t| t.thermal_slope_nm_per_c) {
            Some(s) => ThermalModel::new(s),
            None => Ok(ThermalModel::default()),
        }
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.output.as_ref().and_then(|o| o.dir.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(JobConfig::parse("[geometry]\ndiameter_um = 9\nthickness_nm = 250\ncolor = 1\n").is_err());
        assert!(JobConfig::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let c = JobConfig::parse(
            r#"
            [geometry]
            diameter_um = 9.0
            thickness_nm = 250.0
            [materials]
            n_disk = 2.0
            [atom]
            profile = "cesium-d2"
            [[resonator]]
            label = "a"
            lambda0_nm = 852.0
            kappa_i_hz = 1e8
            kappa_e_hz = 5e7
            beta_hz = 0.0
            [joints]
            per_joint_transmission = 0.88
            n_joints = 2
            "#,
        )
        .unwrap();
        assert!(c.require_geometry().is_ok());
        assert_eq!(c.require_materials().unwrap().n_clad, 1.0);
        assert_eq!(c.require_resonators().unwrap().len(), 1);
        assert!((c.joints().unwrap().transmission() - 0.7744).abs() < 1e-12);
        assert!(c.require_band().is_err());
        assert!(c.atom().is_ok());
    }
}
