//! Coupled-mode model of a taper-loaded disk with backscattering, cascaded
//! disk arrays, taper-gap loading and joint insertion loss.
//!
//! All rates are ordinary frequencies (value/2π, Hz). Detuning is evaluated in
//! frequency and mapped to wavelength by δν = −c δλ/λ₀².

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::modesolver::{field_at, ModeSolution, Position};
use crate::units::{frequency_hz, wavelength_offset_to_frequency_hz, C, NM};

/// Lumped parameters of one taper-loaded resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorCMTParams {
    pub label: String,
    pub lambda0_nm: f64,
    /// Intrinsic energy decay rate κ_i/2π (Hz).
    pub kappa_i_hz: f64,
    /// Taper (external) energy decay rate κ_e/2π (Hz).
    pub kappa_e_hz: f64,
    /// Backscatter rate β/2π (Hz); the doublet full splitting.
    pub beta_hz: f64,
}

impl ResonatorCMTParams {
    pub fn new(label: impl Into<String>, lambda0_nm: f64, kappa_i_hz: f64, kappa_e_hz: f64, beta_hz: f64) -> Result<Self> {
        let p = Self {
            label: label.into(),
            lambda0_nm,
            kappa_i_hz,
            kappa_e_hz,
            beta_hz,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("lambda0_nm", self.lambda0_nm)?;
        ensure_positive("kappa_i", self.kappa_i_hz)?;
        if !(self.kappa_e_hz >= 0.0) || !self.kappa_e_hz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "kappa_e",
                reason: format!("must be non-negative, got {}", self.kappa_e_hz),
            });
        }
        if !(self.beta_hz >= 0.0) || !self.beta_hz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be non-negative, got {}", self.beta_hz),
            });
        }
        Ok(())
    }

    pub fn kappa_total_hz(&self) -> f64 {
        self.kappa_i_hz + self.kappa_e_hz
    }

    pub fn frequency_hz(&self) -> f64 {
        frequency_hz(self.lambda0_nm)
    }

    pub fn intrinsic_q(&self) -> f64 {
        self.frequency_hz() / self.kappa_i_hz
    }

    pub fn external_q(&self) -> f64 {
        self.frequency_hz() / self.kappa_e_hz
    }

    pub fn loaded_q(&self) -> f64 {
        self.frequency_hz() / self.kappa_total_hz()
    }

    /// Loaded linewidth in nm.
    pub fn loaded_linewidth_nm(&self) -> f64 {
        let lam = self.lambda0_nm * NM;
        lam * lam * self.kappa_total_hz() / C / NM
    }

    /// Complex field transmission at frequency detuning Δ = ν − ν₀ (Hz).
    ///
    /// cw and ccw amplitudes each decay at κ/2 and exchange energy at β/2; the
    /// taper drives and reads out the cw mode.
    pub fn amplitude(&self, delta_hz: f64) -> Complex64 {
        let u = Complex64::new(0.5 * self.kappa_total_hz(), delta_hz);
        let d = u * u + 0.25 * self.beta_hz * self.beta_hz;
        Complex64::new(1.0, 0.0) - self.kappa_e_hz * u / d
    }

    pub fn transmission_at(&self, lambda_nm: f64) -> f64 {
        let delta = wavelength_offset_to_frequency_hz(self.lambda0_nm, lambda_nm - self.lambda0_nm);
        self.amplitude(delta).norm_sqr()
    }
}

/// κ_e(gap) = κ_e0·exp(−(gap − gap_ref)/L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaperCouplingModel {
    pub kappa_e0_hz: f64,
    pub gap_ref_nm: f64,
    pub decay_length_nm: f64,
}

impl TaperCouplingModel {
    pub fn new(kappa_e0_hz: f64, gap_ref_nm: f64, decay_length_nm: f64) -> Result<Self> {
        ensure_positive("kappa_e0", kappa_e0_hz)?;
        ensure_positive("gap_ref", gap_ref_nm)?;
        ensure_positive("decay_length", decay_length_nm)?;
        Ok(Self {
            kappa_e0_hz,
            gap_ref_nm,
            decay_length_nm,
        })
    }

    /// Decay length taken from the evanescent tail of a solved mode.
    pub fn from_mode_tail(kappa_e0_hz: f64, gap_ref_nm: f64, mode: &ModeSolution) -> Result<Self> {
        Self::new(kappa_e0_hz, gap_ref_nm, evanescent_decay_length_nm(mode, 200.0)?)
    }

    /// Largest rate reachable, at zero gap.
    pub fn max_rate_hz(&self) -> f64 {
        self.kappa_e0_hz * (self.gap_ref_nm / self.decay_length_nm).exp()
    }
}

/// 1/e length of |E| outside the rim from a least-squares line through
/// ln ψ(d), sampled every 10 nm over [0, `span_nm`].
pub fn evanescent_decay_length_nm(mode: &ModeSolution, span_nm: f64) -> Result<f64> {
    ensure_positive("span", span_nm)?;
    let n = ((span_nm / 10.0).round() as usize).max(2);
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let d = span_nm * k as f64 / n as f64;
            field_at(mode, Position::OutsideRim { distance_nm: d }).map(|psi| (d, psi.ln()))
        })
        .collect::<Result<_>>()?;
    let slope = line_slope(&pts);
    if !(slope < 0.0) {
        return Err(Error::Numerical("field does not decay outside the rim".into()));
    }
    Ok(-1.0 / slope)
}

fn line_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn coupling_from_gap(model: &TaperCouplingModel, gap_nm: f64) -> Result<f64> {
    if !(gap_nm >= 0.0) {
        return Err(Error::Domain(format!("gap must be non-negative, got {gap_nm} nm")));
    }
    Ok(model.kappa_e0_hz * (-(gap_nm - model.gap_ref_nm) / model.decay_length_nm).exp())
}

/// Gap at which κ_e equals `kappa_i_hz`.
pub fn critical_coupling_gap(model: &TaperCouplingModel, kappa_i_hz: f64) -> Result<f64> {
    let max = model.max_rate_hz();
    if !(kappa_i_hz > 0.0 && kappa_i_hz <= max) {
        return Err(Error::OutOfCouplingRange {
            requested: kappa_i_hz,
            min: 0.0,
            max,
        });
    }
    Ok(model.gap_ref_nm - model.decay_length_nm * (kappa_i_hz / model.kappa_e0_hz).ln())
}

/// Broadband insertion loss of glued fiber joints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLossModel {
    pub per_joint_transmission: f64,
    pub n_joints: u32,
}

impl JointLossModel {
    pub fn new(per_joint_transmission: f64, n_joints: u32) -> Result<Self> {
        if !(per_joint_transmission > 0.0 && per_joint_transmission <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "per_joint_transmission",
                reason: format!("must lie in (0, 1], got {per_joint_transmission}"),
            });
        }
        Ok(Self {
            per_joint_transmission,
            n_joints,
        })
    }

    pub fn lossless() -> Self {
        Self {
            per_joint_transmission: 1.0,
            n_joints: 0,
        }
    }

    pub fn transmission(&self) -> f64 {
        self.per_joint_transmission.powi(self.n_joints as i32)
    }
}

/// Metadata stored next to a trace.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMetadata {
    #[serde(default)]
    pub params: Vec<ResonatorCMTParams>,
    pub joints: Option<JointLossModel>,
    pub noise_sigma: Option<f64>,
    pub noise_seed: Option<u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Sampled transmission spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    lambda_nm: Vec<f64>,
    transmission: Vec<f64>,
    pub meta: TraceMetadata,
}

impl SpectrumTrace {
    pub fn new(lambda_nm: Vec<f64>, transmission: Vec<f64>) -> Result<Self> {
        if lambda_nm.len() != transmission.len() {
            return Err(Error::InvalidParameter {
                name: "trace",
                reason: format!("{} wavelengths but {} samples", lambda_nm.len(), transmission.len()),
            });
        }
        if lambda_nm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "trace",
                reason: "wavelengths must be strictly increasing".into(),
            });
        }
        if transmission.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "trace",
                reason: "non-finite transmission sample".into(),
            });
        }
        Ok(Self {
            lambda_nm,
            transmission,
            meta: TraceMetadata::default(),
        })
    }

    pub fn lambda_nm(&self) -> &[f64] {
        &self.lambda_nm
    }
    pub fn transmission(&self) -> &[f64] {
        &self.transmission
    }
    pub fn len(&self) -> usize {
        self.lambda_nm.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lambda_nm.is_empty()
    }
    pub fn warnings(&self) -> &[String] {
        &self.meta.warnings
    }

    /// Wavelength span, or `None` for an empty trace.
    pub fn span_nm(&self) -> Option<(f64, f64)> {
        Some((*self.lambda_nm.first()?, *self.lambda_nm.last()?))
    }

    /// Adds Gaussian amplitude noise drawn from a seeded generator.
    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Result<Self> {
        ensure_positive("noise_sigma", sigma)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
        self.transmission.iter_mut().for_each(|t| *t += normal.sample(&mut rng));
        self.meta.noise_sigma = Some(sigma);
        self.meta.noise_seed = Some(seed);
        Ok(self)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda_nm,transmission")?;
        for (l, t) in self.lambda_nm.iter().zip(&self.transmission) {
            writeln!(w, "{l:.12},{t:.12e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty trace file".into()))??;
        if header.trim() != "lambda_nm,transmission" {
            return Err(Error::Parse(format!("unexpected trace header `{}`", header.trim())));
        }
        let (mut lam, mut tr) = (Vec::new(), Vec::new());
        for (k, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut next = |what: &str| -> Result<f64> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", k + 2)))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {what}: {e}", k + 2)))
            };
            lam.push(next("lambda_nm")?);
            tr.push(next("transmission")?);
        }
        SpectrumTrace::new(lam, tr).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn metadata_toml(&self) -> Result<String> {
        toml::to_string(&self.meta).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn parse_metadata(text: &str) -> Result<TraceMetadata> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Uniform wavelength grid of `n` samples over [start, end].
pub fn linspace(start_nm: f64, end_nm: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start_nm],
        _ => (0..n)
            .map(|k| start_nm + (end_nm - start_nm) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Transmission of a single taper-loaded disk.
pub fn doublet_transmission(params: &ResonatorCMTParams, lambda_grid: &[f64]) -> Result<SpectrumTrace> {
    params.validate()?;
    let t: Vec<f64> = lambda_grid.par_iter().map(|&l| params.transmission_at(l)).collect();
    let mut trace = SpectrumTrace::new(lambda_grid.to_vec(), t)?;
    trace.meta.params = vec![params.clone()];
    Ok(trace)
}

/// Incoherent cascade of independent disks behind lossy joints:
/// T = T_joint^n · Π T_i. Pairs closer than one loaded linewidth are flagged.
pub fn array_transmission(
    params_list: &[ResonatorCMTParams],
    joints: &JointLossModel,
    lambda_grid: &[f64],
) -> Result<SpectrumTrace> {
    for p in params_list {
        p.validate()?;
    }
    let floor = joints.transmission();
    let t: Vec<f64> = lambda_grid
        .par_iter()
        .map(|&l| params_list.iter().map(|p| p.transmission_at(l)).product::<f64>() * floor)
        .collect();
    let mut trace = SpectrumTrace::new(lambda_grid.to_vec(), t)?;
    for (a_idx, a) in params_list.iter().enumerate() {
        for b in &params_list[a_idx + 1..] {
            let width = a.loaded_linewidth_nm().max(b.loaded_linewidth_nm());
            if (a.lambda0_nm - b.lambda0_nm).abs() < width {
                trace.meta.warnings.push(format!(
                    "resonances `{}` and `{}` lie within one linewidth; cascade ignores their interference",
                    a.label, b.label
                ));
            }
        }
    }
    trace.meta.params = params_list.to_vec();
    trace.meta.joints = Some(*joints);
    Ok(trace)
}

/// Thermal shift of the resonance; rates are unchanged.
pub fn apply_temperature(params: &ResonatorCMTParams, delta_t_c: f64, dlambda_dt_nm_per_c: f64) -> Result<ResonatorCMTParams> {
    if !(delta_t_c.abs() < 100.0) {
        return Err(Error::InvalidParameter {
            name: "delta_temperature",
            reason: format!("|ΔT| must stay below 100 °C, got {delta_t_c}"),
        });
    }
    let mut out = params.clone();
    out.lambda0_nm += dlambda_dt_nm_per_c * delta_t_c;
    Ok(out)
}

/// 1 − min T within ±3 linewidths of `lambda0_nm`.
pub fn transmission_contrast(trace: &SpectrumTrace, lambda0_nm: f64, linewidth_nm: f64) -> Result<f64> {
    let (lo, hi) = trace.span_nm().ok_or_else(|| Error::Domain("empty trace".into()))?;
    if !(lambda0_nm >= lo && lambda0_nm <= hi) {
        return Err(Error::Domain(format!(
            "λ₀ = {lambda0_nm} nm outside trace span [{lo}, {hi}] nm"
        )));
    }
    ensure_positive("linewidth", linewidth_nm)?;
    let min = trace
        .lambda_nm
        .iter()
        .zip(&trace.transmission)
        .filter(|(l, _)| (**l - lambda0_nm).abs() <= 3.0 * linewidth_nm)
        .map(|(_, t)| *t)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Domain("no samples within three linewidths".into()));
    }
    Ok(1.0 - min)
}
