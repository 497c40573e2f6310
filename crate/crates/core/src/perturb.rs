//! Resonance tuning: wet etch, temperature, adsorbed films and the
//! logarithmic growth of an adsorbed layer with exposure time.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::fitting::lm::{self, LmSettings};

/// Constant etch placement uncertainty (nm).
pub const ETCH_PLACEMENT_UNCERTAINTY_NM: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtchModel {
    /// Blue shift of λ₀ per minute of etch (nm/min).
    pub rate_nm_per_min: f64,
}

impl EtchModel {
    pub fn new(rate_nm_per_min: f64) -> Result<Self> {
        ensure_positive("etch_rate", rate_nm_per_min)?;
        Ok(Self { rate_nm_per_min })
    }
}

impl Default for EtchModel {
    fn default() -> Self {
        Self { rate_nm_per_min: 1.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalModel {
    /// dλ₀/dT (nm/°C).
    pub slope_nm_per_c: f64,
}

impl ThermalModel {
    pub fn new(slope_nm_per_c: f64) -> Result<Self> {
        ensure_positive("thermal_slope", slope_nm_per_c)?;
        Ok(Self { slope_nm_per_c })
    }

    pub fn shift_nm(&self, delta_t_c: f64) -> f64 {
        self.slope_nm_per_c * delta_t_c
    }

    pub fn temperature_for_shift(&self, delta_lambda_nm: f64) -> f64 {
        delta_lambda_nm / self.slope_nm_per_c
    }
}

impl Default for ThermalModel {
    fn default() -> Self {
        Self { slope_nm_per_c: 0.012 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmModel {
    pub n_film: f64,
    /// Γ′ (nm⁻¹).
    pub gamma_prime_per_nm: f64,
    pub monolayer_nm: f64,
}

impl FilmModel {
    pub fn new(n_film: f64, gamma_prime_per_nm: f64, monolayer_nm: f64) -> Result<Self> {
        let f = Self {
            n_film,
            gamma_prime_per_nm,
            monolayer_nm,
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        if !(self.n_film > 1.0) {
            return Err(Error::Domain(format!("film index must exceed 1, got {}", self.n_film)));
        }
        ensure_positive("gamma_prime", self.gamma_prime_per_nm)?;
        ensure_positive("monolayer", self.monolayer_nm)
    }
}

impl Default for FilmModel {
    fn default() -> Self {
        Self {
            n_film: 2.0,
            gamma_prime_per_nm: 0.0026,
            monolayer_nm: 0.4,
        }
    }
}

/// Δλ(t) = A·ln(1 + t/τ), t in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdsorptionModel {
    pub amplitude_nm: f64,
    pub tau_hours: f64,
}

impl AdsorptionModel {
    pub fn new(amplitude_nm: f64, tau_hours: f64) -> Result<Self> {
        ensure_positive("amplitude", amplitude_nm)?;
        ensure_positive("tau", tau_hours)?;
        Ok(Self { amplitude_nm, tau_hours })
    }

    /// Model through two (t, Δλ) anchors with 0 < t₁ < t₂ and 0 < Δλ₁ < Δλ₂.
    pub fn from_anchors(a: (f64, f64), b: (f64, f64)) -> Result<Self> {
        let ((t1, y1), (t2, y2)) = (a, b);
        if !(t1 > 0.0 && t2 > t1 && y1 > 0.0 && y2 > y1) {
            return Err(Error::Domain("anchors must increase in both time and shift".into()));
        }
        // y2/y1 = ln(1+t2/τ)/ln(1+t1/τ) rises from 1 (τ→0) to t2/t1 (τ→∞)
        let target = y2 / y1;
        if target >= t2 / t1 {
            return Err(Error::Domain(format!(
                "shift ratio {target:.4} not reachable by a logarithmic law with time ratio {:.4}",
                t2 / t1
            )));
        }
        let ratio = |tau: f64| (t2 / tau).ln_1p() / (t1 / tau).ln_1p();
        let (mut lo, mut hi) = (1e-12 * t1, 1e12 * t2);
        for _ in 0..300 {
            let mid = (lo * hi).sqrt();
            if ratio(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let tau = (lo * hi).sqrt();
        Self::new(y1 / (t1 / tau).ln_1p(), tau)
    }
}

/// Etch duration and its placement uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtchPlan {
    pub minutes: f64,
    pub uncertainty_nm: f64,
}

pub fn etch_plan(lambda_current_nm: f64, lambda_target_nm: f64, model: &EtchModel) -> Result<EtchPlan> {
    if lambda_target_nm > lambda_current_nm {
        return Err(Error::EtchCannotRedShift {
            current_nm: lambda_current_nm,
            target_nm: lambda_target_nm,
        });
    }
    Ok(EtchPlan {
        minutes: (lambda_current_nm - lambda_target_nm) / model.rate_nm_per_min,
        uncertainty_nm: ETCH_PLACEMENT_UNCERTAINTY_NM,
    })
}

/// Film thickness and coverage in monolayers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmThickness {
    pub thickness_nm: f64,
    pub monolayers: f64,
}

/// s = Δλ/(λ₀ (n_f − 1) Γ′).
pub fn film_shift_to_thickness(delta_lambda_nm: f64, lambda0_nm: f64, film: &FilmModel) -> Result<FilmThickness> {
    film.validate()?;
    ensure_positive("lambda0", lambda0_nm)?;
    if !(delta_lambda_nm >= 0.0) {
        return Err(Error::Domain(format!("film shift must be non-negative, got {delta_lambda_nm} nm")));
    }
    let s = delta_lambda_nm / (lambda0_nm * (film.n_film - 1.0) * film.gamma_prime_per_nm);
    Ok(FilmThickness {
        thickness_nm: s,
        monolayers: s / film.monolayer_nm,
    })
}

/// Δλ = s λ₀ (n_f − 1) Γ′.
pub fn thickness_to_shift(thickness_nm: f64, lambda0_nm: f64, film: &FilmModel) -> Result<f64> {
    film.validate()?;
    ensure_positive("lambda0", lambda0_nm)?;
    if !(thickness_nm >= 0.0) {
        return Err(Error::Domain(format!("film thickness must be non-negative, got {thickness_nm} nm")));
    }
    Ok(thickness_nm * lambda0_nm * (film.n_film - 1.0) * film.gamma_prime_per_nm)
}

pub fn adsorption_shift(t_hours: f64, model: &AdsorptionModel) -> Result<f64> {
    if !(t_hours >= 0.0) {
        return Err(Error::Domain(format!("exposure time must be non-negative, got {t_hours} h")));
    }
    Ok(model.amplitude_nm * (t_hours / model.tau_hours).ln_1p())
}

/// Treatment of a constant shift present at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BaselineOffset {
    /// Δλ(0) = 0.
    #[default]
    None,
    /// Known offset subtracted before fitting (nm).
    Fixed(f64),
    /// Offset fitted as a third parameter.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdsorptionFit {
    pub model: AdsorptionModel,
    pub offset_nm: f64,
    /// √Σr² (nm).
    pub residual_norm_nm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl AdsorptionFit {
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            amplitude_nm: f64,
            tau_hours: f64,
            offset_nm: f64,
            residual_norm_nm: f64,
            iterations: usize,
            converged: bool,
            warnings: &'a [String],
        }
        toml::to_string(&Out {
            amplitude_nm: self.model.amplitude_nm,
            tau_hours: self.model.tau_hours,
            offset_nm: self.offset_nm,
            residual_norm_nm: self.residual_norm_nm,
            iterations: self.iterations,
            converged: self.converged,
            warnings: &self.warnings,
        })
        .expect("plain struct serializes")
    }
}

/// Least-squares (A, τ) fit in log-parameters.
///
/// Initial guess: τ₀ = first positive sample time, A₀ = Δλ_last/ln(1 + t_last/τ₀).
pub fn fit_adsorption(samples: &[(f64, f64)], offset: BaselineOffset) -> Result<AdsorptionFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", samples.len())));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) || samples[0].0 < 0.0 {
        return Err(Error::Fit("sample times must be non-negative and strictly increasing".into()));
    }
    if samples.iter().all(|s| s.1 == samples[0].1) {
        return Err(Error::Fit("all shifts are equal; amplitude and onset are not identifiable".into()));
    }
    let fixed = match offset {
        BaselineOffset::Fixed(c) => c,
        _ => 0.0,
    };
    let free = matches!(offset, BaselineOffset::Free);
    let n_par = if free { 3 } else { 2 };
    let mut warnings = Vec::new();
    if samples.len() == n_par {
        warnings.push(format!("{n_par} samples for {n_par} parameters: exactly determined, residual carries no information"));
    }

    let tau0 = samples.iter().map(|s| s.0).find(|&t| t > 0.0).expect("times strictly increasing");
    let (t_last, y_last) = *samples.last().expect("non-empty");
    let base0 = if free { samples[0].1.min(0.0) } else { fixed };
    let a0 = ((y_last - base0) / (t_last / tau0).ln_1p()).abs().max(1e-12);
    let mut p0 = vec![a0.ln(), tau0.ln()];
    if free {
        p0.push(base0);
    }
    let out = lm::minimize(
        |p, r| {
            let (a, tau) = (p[0].exp(), p[1].exp());
            let c = if free { p[2] } else { fixed };
            for (ri, &(t, y)) in r.iter_mut().zip(samples) {
                *ri = c + a * (t / tau).ln_1p() - y;
            }
        },
        samples.len(),
        &p0,
        &LmSettings::default(),
    );
    let model = AdsorptionModel::new(out.params[0].exp(), out.params[1].exp())
        .map_err(|e| Error::Fit(e.to_string()))?;
    Ok(AdsorptionFit {
        model,
        offset_nm: if free { out.params[2] } else { fixed },
        residual_norm_nm: out.cost.sqrt(),
        iterations: out.iterations,
        converged: out.converged,
        warnings,
    })
}

/// Reads `t_hours,delta_lambda_nm` rows.
pub fn read_adsorption_csv<R: BufRead>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty adsorption file".into()))??;
    if header.trim() != "t_hours,delta_lambda_nm" {
        return Err(Error::Parse(format!("unexpected adsorption header `{}`", header.trim())));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
        match vals.as_slice() {
            [t, y] => out.push((*t, *y)),
            _ => return Err(Error::Parse(format!("line {}: expected 2 columns", k + 2))),
        }
    }
    Ok(out)
}
