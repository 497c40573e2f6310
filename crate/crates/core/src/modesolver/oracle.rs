//! Low-fidelity resonance estimate used to seed and cross-check the full
//! solver: effective index of the symmetric slab plus the uniform asymptotic
//! (Airy) whispering-gallery resonance condition of a 2D disk.
//!
//! Target accuracy against the (ρ, z) solver is ±2% in wavelength for p = 1.

use crate::error::{Error, Result};
use crate::geometry::{DiskGeometry, MaterialStack, Polarization};
use crate::units::{nm_to_m, NM};

/// Negated zeros of Ai(−x) for the first radial orders.
const AIRY_ZEROS: [f64; 8] = [
    2.338_107_410_459_767,
    4.087_949_444_130_970,
    5.520_559_828_095_551,
    6.786_708_090_071_759,
    7.944_133_587_120_853,
    9.022_650_853_340_980,
    10.040_174_341_558_085,
    11.008_524_303_733_263,
];

/// Fundamental (even) guided mode effective index of a symmetric slab.
pub fn slab_effective_index(thickness_m: f64, n_core: f64, n_clad: f64, lambda_nm: f64, pol: Polarization) -> Result<f64> {
    if !(thickness_m > 0.0) || !(lambda_nm > 0.0) {
        return Err(Error::Domain("slab thickness and wavelength must be positive".into()));
    }
    if !(n_core > n_clad) {
        return Err(Error::ModeCutOff(format!("core index {n_core} does not exceed cladding {n_clad}")));
    }
    let k = std::f64::consts::TAU / nm_to_m(lambda_nm);
    let a = 0.5 * thickness_m;
    let ratio = match pol {
        Polarization::TeLike => 1.0,
        Polarization::TmLike => (n_core / n_clad).powi(2),
    };
    // f(n) = κ tan(κ a) − ratio·γ, with κ a restricted to [0, π/2)
    let f = |n: f64| {
        let kappa = k * (n_core * n_core - n * n).max(0.0).sqrt();
        let gamma = k * (n * n - n_clad * n_clad).max(0.0).sqrt();
        kappa * (kappa * a).tan() - ratio * gamma
    };
    let v = k * a * (n_core * n_core - n_clad * n_clad).sqrt();
    let kappa_a_max = v.min(std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9));
    let n_lo = (n_core * n_core - (kappa_a_max / (k * a)).powi(2)).max(n_clad * n_clad).sqrt();
    let (mut lo, mut hi) = (n_lo, n_core);
    if !(f(lo) > 0.0) {
        return Err(Error::ModeCutOff(format!(
            "no guided slab mode for t = {:.1} nm at λ = {lambda_nm} nm",
            thickness_m / NM
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_eff = 0.5 * (lo + hi);
    if n_eff - n_clad < 1e-9 * n_clad {
        return Err(Error::ModeCutOff(format!(
            "slab mode unguided for t = {:.3} nm at λ = {lambda_nm} nm",
            thickness_m / NM
        )));
    }
    Ok(n_eff)
}

/// Size parameter n_eff·k·R of the (m, p) resonance of a 2D disk with relative
/// index `n_rel`, from the uniform large-m expansion. `pol_factor` is n_rel for
/// boundary conditions with continuous ψ′ and 1/n_rel for the ε⁻¹-weighted case.
pub fn asymptotic_size_parameter(m: u32, p: u32, n_rel: f64, pol_factor: f64) -> f64 {
    let nu = m as f64;
    let alpha = airy_zero(p);
    let c = 2f64.powf(-1.0 / 3.0);
    let big_p = pol_factor;
    let root = (n_rel * n_rel - 1.0).sqrt();
    nu + c * alpha * nu.powf(1.0 / 3.0) - big_p / root
        + 0.3 * c * c * alpha * alpha * nu.powf(-1.0 / 3.0)
        - c * big_p * (n_rel * n_rel - 2.0 * big_p * big_p / 3.0) / root.powi(3) * alpha * nu.powf(-2.0 / 3.0)
}

fn airy_zero(p: u32) -> f64 {
    let idx = (p.max(1) - 1) as usize;
    if idx < AIRY_ZEROS.len() {
        AIRY_ZEROS[idx]
    } else {
        // asymptotic form of the Airy zeros
        let t = 3.0 * std::f64::consts::PI / 8.0 * (4.0 * p as f64 - 1.0);
        t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 / (t * t))
    }
}

/// Oracle output at one wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub n_eff_slab: f64,
    pub lambda_nm: f64,
}

/// Slab effective index at `lambda_nm`, and the self-consistent resonance
/// wavelength estimate for azimuthal number m and radial order p.
pub fn effective_index_oracle(
    geom: &DiskGeometry,
    mat: &MaterialStack,
    lambda_nm: f64,
    m: u32,
    p: u32,
    pol: Polarization,
) -> Result<OracleEstimate> {
    mat.validate()?;
    let n_eff_slab = slab_effective_index(geom.thickness_m(), mat.n_disk, mat.n_clad, lambda_nm, pol)?;
    let resonance = resonance_estimate_nm(geom, mat, m, p, pol, lambda_nm)?;
    Ok(OracleEstimate {
        n_eff_slab,
        lambda_nm: resonance,
    })
}

/// Fixed-point solution of λ = 2π R n_eff(λ) / x(m, p, n_eff(λ)).
pub fn resonance_estimate_nm(
    geom: &DiskGeometry,
    mat: &MaterialStack,
    m: u32,
    p: u32,
    pol: Polarization,
    lambda_guess_nm: f64,
) -> Result<f64> {
    let r = geom.radius_m();
    let mut lam = lambda_guess_nm;
    for _ in 0..100 {
        let n_eff = slab_effective_index(geom.thickness_m(), mat.n_disk, mat.n_clad, lam, pol)?;
        let n_rel = n_eff / mat.n_clad;
        // the solver's radial operator is unweighted for both polarizations
        let x = asymptotic_size_parameter(m, p, n_rel, n_rel);
        let next = std::f64::consts::TAU * r * n_eff / x / NM;
        if (next - lam).abs() < 1e-12 * lam {
            return Ok(next);
        }
        lam = next;
    }
    Ok(lam)
}
