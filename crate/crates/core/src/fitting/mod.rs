//! Resonance detection and damped least-squares recovery of coupled-mode
//! parameters from transmission traces.
//!
//! Fits run in frequency detuning about the seed wavelength, with rates scaled
//! by the seed loaded linewidth and a free baseline level.

pub(crate) mod lm;

use rayon::prelude::*;
use serde::Serialize;

pub use lm::LmSettings;

use crate::cmt::{ResonatorCMTParams, SpectrumTrace};
use crate::error::{Error, Result};
use crate::units::{frequency_hz, wavelength_offset_to_frequency_hz, C, NM};

/// Header matching [`FitResult::summary_line`].
pub const SUMMARY_HEADER: &str = "label,lambda0_nm,Qi,Qe,beta_hz,rms";

/// A transmission minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub lambda_nm: f64,
    /// Fractional depth below the lower of the two flanking maxima.
    pub depth: f64,
    pub index: usize,
    /// Full width at half depth (nm).
    pub width_nm: f64,
    /// Whether neighbouring minima within three grid steps were absorbed.
    pub merged: bool,
}

fn flank_reference(t: &[f64], i: usize) -> f64 {
    let left = t[..i].iter().rev().take_while(|&&v| v >= t[i]).fold(t[i], |a, &b| a.max(b));
    let right = t[i + 1..].iter().take_while(|&&v| v >= t[i]).fold(t[i], |a, &b| a.max(b));
    left.min(right)
}

fn half_depth_width(lam: &[f64], t: &[f64], i: usize, reference: f64) -> f64 {
    let half = 0.5 * (reference + t[i]);
    let cross = |range: &mut dyn Iterator<Item = usize>, step_back: isize| -> f64 {
        for k in range {
            if t[k] >= half {
                let j = (k as isize + step_back) as usize;
                let f = (half - t[j]) / (t[k] - t[j]);
                return lam[j] + f * (lam[k] - lam[j]);
            }
        }
        if step_back < 0 {
            *lam.last().expect("non-empty")
        } else {
            lam[0]
        }
    };
    let right = cross(&mut (i + 1..t.len()), -1);
    let left = cross(&mut (0..i).rev(), 1);
    right - left
}

/// Local minima whose fractional depth is at least `prominence`, sorted by
/// wavelength. Minima within three samples of each other are merged.
pub fn find_resonances(trace: &SpectrumTrace, prominence: f64) -> Result<Vec<Resonance>> {
    if trace.is_empty() {
        return Err(Error::Domain("empty trace".into()));
    }
    if !(prominence > 0.0 && prominence < 1.0) {
        return Err(Error::InvalidParameter {
            name: "prominence",
            reason: format!("must lie in (0, 1), got {prominence}"),
        });
    }
    let (lam, t) = (trace.lambda_nm(), trace.transmission());
    let mut found: Vec<Resonance> = Vec::new();
    for i in 1..t.len().saturating_sub(1) {
        if !(t[i] < t[i - 1] && t[i] <= t[i + 1]) {
            continue;
        }
        let reference = flank_reference(t, i);
        if !(reference > 0.0) {
            continue;
        }
        let depth = (reference - t[i]) / reference;
        if depth < prominence {
            continue;
        }
        let r = Resonance {
            lambda_nm: lam[i],
            depth,
            index: i,
            width_nm: half_depth_width(lam, t, i, reference),
            merged: false,
        };
        match found.last_mut() {
            Some(prev) if i - prev.index <= 3 => {
                if r.depth > prev.depth {
                    *prev = Resonance { merged: true, ..r };
                } else {
                    prev.merged = true;
                }
            }
            _ => found.push(r),
        }
    }
    Ok(found)
}

/// Parameterization of the decay rates during the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateSpace {
    /// ln κ, which keeps rates positive.
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub rate_space: RateSpace,
    /// Restrict the fit to ± this many seed linewidths around the seed; `None` uses the whole trace.
    pub window_linewidths: Option<f64>,
    /// Largest residual RMS accepted as converged.
    pub rms_tolerance: f64,
    pub lm: LmSettings,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rate_space: RateSpace::Log,
            window_linewidths: None,
            rms_tolerance: 0.05,
            lm: LmSettings::default(),
        }
    }
}

/// 1σ uncertainties in reporting units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Uncertainties {
    pub lambda0_nm: f64,
    pub kappa_i_hz: f64,
    pub kappa_e_hz: f64,
    pub beta_hz: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ResonatorCMTParams,
    pub sigma: Uncertainties,
    /// Off-resonance transmission level.
    pub baseline: f64,
    pub rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Σr² at the start and after every accepted step.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn intrinsic_q(&self) -> f64 {
        self.params.intrinsic_q()
    }
    pub fn external_q(&self) -> f64 {
        self.params.external_q()
    }
    pub fn loaded_q(&self) -> f64 {
        self.params.loaded_q()
    }

    /// `label,lambda0_nm,Qi,Qe,beta_hz,rms`.
    pub fn summary_line(&self) -> String {
        format!(
            "{},{:.9},{:.6e},{:.6e},{:.6e},{:.6e}",
            self.params.label,
            self.params.lambda0_nm,
            self.intrinsic_q(),
            self.external_q(),
            self.params.beta_hz,
            self.rms
        )
    }

    fn record(&self) -> FitRecord<'_> {
        FitRecord {
            label: &self.params.label,
            lambda0_nm: self.params.lambda0_nm,
            kappa_i_hz: self.params.kappa_i_hz,
            kappa_e_hz: self.params.kappa_e_hz,
            beta_hz: self.params.beta_hz,
            baseline: self.baseline,
            intrinsic_q: self.intrinsic_q(),
            loaded_q: self.loaded_q(),
            rms: self.rms,
            converged: self.converged,
            iterations: self.iterations,
            sigma: self.sigma,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.record()).expect("plain struct serializes")
    }
}

#[derive(Serialize)]
struct FitRecord<'a> {
    label: &'a str,
    lambda0_nm: f64,
    kappa_i_hz: f64,
    kappa_e_hz: f64,
    beta_hz: f64,
    baseline: f64,
    intrinsic_q: f64,
    loaded_q: f64,
    rms: f64,
    converged: bool,
    iterations: usize,
    sigma: Uncertainties,
}

pub fn fit_doublet(trace: &SpectrumTrace, seed: &ResonatorCMTParams) -> Result<FitResult> {
    fit_doublet_with(trace, seed, 1.0, &FitOptions::default())
}

/// Fits λ₀, κ_i, κ_e, β and the baseline starting from `seed`, with
/// `baseline_seed` as the initial off-resonance level.
///
/// With β = 0 the lineshape is symmetric under κ_i ↔ κ_e; the seed selects the branch.
pub fn fit_doublet_with(
    trace: &SpectrumTrace,
    seed: &ResonatorCMTParams,
    baseline_seed: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    seed.validate()?;
    let (lo, hi) = trace.span_nm().ok_or_else(|| Error::Domain("empty trace".into()))?;
    if !(seed.lambda0_nm >= lo && seed.lambda0_nm <= hi) {
        return Err(Error::Domain(format!(
            "seed λ₀ = {} nm outside trace span [{lo}, {hi}] nm",
            seed.lambda0_nm
        )));
    }
    let lam_s = seed.lambda0_nm;
    let scale = seed.kappa_total_hz();
    let half_window = opts
        .window_linewidths
        .map(|w| w * seed.loaded_linewidth_nm() + 0.5 * seed.beta_hz / scale * seed.loaded_linewidth_nm());
    let (detuning, data): (Vec<f64>, Vec<f64>) = trace
        .lambda_nm()
        .iter()
        .zip(trace.transmission())
        .filter(|(l, _)| half_window.is_none_or(|w| (**l - lam_s).abs() <= w))
        .map(|(&l, &t)| (wavelength_offset_to_frequency_hz(lam_s, l - lam_s) / scale, t))
        .unzip();
    let n_free = 5;
    if detuning.len() <= n_free {
        return Err(Error::Fit(format!("only {} samples in the fit window", detuning.len())));
    }

    let space = opts.rate_space;
    let to_rate = move |x: f64| match space {
        RateSpace::Log => x.exp(),
        RateSpace::Linear => x,
    };
    let from_rate = move |k: f64| match space {
        RateSpace::Log => k.max(1e-9).ln(),
        RateSpace::Linear => k,
    };
    let model = move |p: &[f64], x: f64| -> f64 {
        // all rates in units of the seed loaded linewidth
        let (x0, ki, ke, b, base) = (p[0], to_rate(p[1]), to_rate(p[2]), p[3], p[4]);
        let u = num_complex::Complex64::new(0.5 * (ki + ke), x - x0);
        let d = u * u + 0.25 * b * b;
        base * (num_complex::Complex64::new(1.0, 0.0) - ke * u / d).norm_sqr()
    };
    let p0 = [
        0.0,
        from_rate(seed.kappa_i_hz / scale),
        from_rate(seed.kappa_e_hz.max(1e-6 * scale) / scale),
        seed.beta_hz / scale,
        baseline_seed,
    ];
    let out = lm::minimize(
        |p, r| {
            for ((ri, &x), &y) in r.iter_mut().zip(&detuning).zip(&data) {
                *ri = model(p, x) - y;
            }
        },
        data.len(),
        &p0,
        &opts.lm,
    );
    let p = &out.params;
    let se = out.standard_errors();
    let (ki, ke) = (to_rate(p[1]) * scale, to_rate(p[2]) * scale);
    let rate_sigma = |x: f64, s: f64| match space {
        RateSpace::Log => x.exp() * s * scale,
        RateSpace::Linear => s * scale,
    };
    let lam_per_hz = (lam_s * NM).powi(2) / C / NM;
    let params = ResonatorCMTParams {
        label: seed.label.clone(),
        lambda0_nm: lam_s - p[0] * scale * lam_per_hz,
        kappa_i_hz: ki,
        kappa_e_hz: ke,
        beta_hz: (p[3] * scale).abs(),
    };
    let rms = (out.cost / data.len() as f64).sqrt();
    let valid = ki > 0.0 && ke >= 0.0 && p.iter().all(|v| v.is_finite());
    Ok(FitResult {
        sigma: Uncertainties {
            lambda0_nm: se[0] * scale * lam_per_hz,
            kappa_i_hz: rate_sigma(p[1], se[1]),
            kappa_e_hz: rate_sigma(p[2], se[2]),
            beta_hz: se[3] * scale,
            baseline: se[4],
        },
        params,
        baseline: p[4],
        rms,
        converged: out.converged && valid && rms <= opts.rms_tolerance,
        iterations: out.iterations,
        cost_history: out.cost_history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayFitOptions {
    pub prominence: f64,
    /// Half-width of each local window in seed linewidths.
    pub window_linewidths: f64,
    /// Fit passes; passes after the first divide out the other disks.
    pub passes: usize,
    pub fit: FitOptions,
}

impl Default for ArrayFitOptions {
    fn default() -> Self {
        Self {
            prominence: 0.02,
            window_linewidths: 10.0,
            passes: 2,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayFit {
    /// Per-disk results sorted by wavelength.
    pub results: Vec<FitResult>,
    /// Median of the per-window baselines.
    pub baseline: f64,
    pub warnings: Vec<String>,
}

impl ArrayFit {
    /// Shared baseline and warnings followed by one `[[fit]]` table per disk.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            baseline: f64,
            warnings: &'a [String],
            fit: Vec<FitRecord<'a>>,
        }
        toml::to_string(&Out {
            baseline: self.baseline,
            warnings: &self.warnings,
            fit: self.results.iter().map(FitResult::record).collect(),
        })
        .expect("plain struct serializes")
    }
}

/// Seed for one dip (or resolved doublet) from its depth and width.
fn seed_from_dips(label: String, dips: &[Resonance]) -> ResonatorCMTParams {
    let deepest = dips.iter().copied().fold(dips[0], |a, b| if b.depth > a.depth { b } else { a });
    let lam = dips.iter().map(|d| d.lambda_nm).sum::<f64>() / dips.len() as f64;
    let width = deepest.width_nm.max(1e-9);
    let kappa = frequency_hz(lam) * width / lam;
    let root = (1.0 - deepest.depth.min(0.999)).sqrt();
    let (kappa_e, beta) = if dips.len() > 1 {
        let first = dips[0].lambda_nm;
        let last = dips[dips.len() - 1].lambda_nm;
        (kappa * (1.0 - root), wavelength_offset_to_frequency_hz(lam, first - last))
    } else {
        (0.5 * kappa * (1.0 - root), 0.3 * kappa)
    };
    ResonatorCMTParams {
        label,
        lambda0_nm: lam,
        kappa_i_hz: (kappa - kappa_e).max(0.05 * kappa),
        kappa_e_hz: kappa_e,
        beta_hz: beta.abs(),
    }
}

/// Detects up to `n_expected` resonances and fits each in a local window,
/// dividing out the other fitted disks on later passes.
pub fn fit_array(trace: &SpectrumTrace, n_expected: usize, opts: &ArrayFitOptions) -> Result<ArrayFit> {
    if n_expected == 0 {
        return Err(Error::InvalidParameter {
            name: "n_expected",
            reason: "must be at least 1".into(),
        });
    }
    let mut warnings = Vec::new();
    let dips = find_resonances(trace, opts.prominence)?;
    if dips.iter().any(|d| d.merged) {
        warnings.push("minima closer than three grid steps were merged".into());
    }

    // minima closer than a few widths are halves of one backscatter doublet
    let mut groups: Vec<Vec<Resonance>> = Vec::new();
    for d in dips {
        match groups.last_mut() {
            Some(g) => {
                let prev = g[g.len() - 1];
                if d.lambda_nm - prev.lambda_nm < 3.0 * prev.width_nm.max(d.width_nm) {
                    g.push(d);
                } else {
                    groups.push(vec![d]);
                }
            }
            None => groups.push(vec![d]),
        }
    }
    if groups.len() > n_expected {
        groups.sort_by(|a, b| {
            let da = a.iter().map(|d| d.depth).fold(0.0, f64::max);
            let db = b.iter().map(|d| d.depth).fold(0.0, f64::max);
            db.total_cmp(&da)
        });
        groups.truncate(n_expected);
        groups.sort_by(|a, b| a[0].lambda_nm.total_cmp(&b[0].lambda_nm));
    } else if groups.len() < n_expected {
        warnings.push(format!("found {} resonances, expected {n_expected}", groups.len()));
    }

    let t = trace.transmission();
    let baseline0 = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut seeds: Vec<(ResonatorCMTParams, f64)> = groups
        .iter()
        .enumerate()
        .map(|(k, g)| (seed_from_dips(format!("r{k}"), g), baseline0))
        .collect();
    let local = FitOptions {
        window_linewidths: Some(opts.window_linewidths),
        ..opts.fit
    };

    let mut results: Vec<FitResult> = Vec::new();
    for pass in 0..opts.passes.max(1) {
        let fitted: Vec<Result<FitResult>> = seeds
            .par_iter()
            .enumerate()
            .map(|(k, (seed, base))| {
                if pass == 0 {
                    return fit_doublet_with(trace, seed, *base, &local);
                }
                let others: Vec<&ResonatorCMTParams> =
                    results.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, r)| &r.params).collect();
                let corrected: Vec<f64> = trace
                    .lambda_nm()
                    .iter()
                    .zip(t)
                    .map(|(&l, &v)| v / others.iter().map(|p| p.transmission_at(l)).product::<f64>())
                    .collect();
                let tr = SpectrumTrace::new(trace.lambda_nm().to_vec(), corrected)?;
                fit_doublet_with(&tr, seed, *base, &local)
            })
            .collect();
        results = fitted.into_iter().collect::<Result<_>>()?;
        seeds = results.iter().map(|r| (r.params.clone(), r.baseline)).collect();
    }
    for r in &results {
        if !r.converged {
            warnings.push(format!("fit `{}` did not converge", r.params.label));
        }
    }
    let mut bases: Vec<f64> = results.iter().map(|r| r.baseline).collect();
    bases.sort_by(f64::total_cmp);
    let baseline = match bases.len() {
        0 => baseline0,
        n if n % 2 == 1 => bases[n / 2],
        n => 0.5 * (bases[n / 2 - 1] + bases[n / 2]),
    };
    Ok(ArrayFit {
        results,
        baseline,
        warnings,
    })
}
