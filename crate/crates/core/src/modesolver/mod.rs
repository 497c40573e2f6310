//! Whispering-gallery eigenmodes of a thin dielectric disk.
//!
//! The disk cross-section is discretized by finite volumes in (ρ, z) with an
//! exp(imφ) azimuthal dependence, the mirror plane z = 0 and complex-stretched
//! absorbing layers on the outer edges. Each (m, p) resonance is found by
//! shift-invert Arnoldi around the oracle estimate on a sequence of halved
//! grids. The second-order discretization error is removed by Richardson
//! extrapolation; refinement stops once successive extrapolants agree.

mod banded;
mod eigen;
pub mod field;
mod grid;
mod operator;
pub mod oracle;

use num_complex::Complex64;
use rayon::prelude::*;

pub use field::FieldMap;
pub use oracle::{effective_index_oracle, slab_effective_index, OracleEstimate};

use crate::error::{Error, Result};
use crate::geometry::{DiskGeometry, MaterialStack, ModeId, Polarization, WavelengthBand};
use crate::units::{NM, UM};
use grid::{Grid, GridSpec};
use operator::Operator;

/// Numerical settings of the mode solver. Lengths in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Cell size inside the disk and the fine region around it.
    pub grid_spacing_nm: f64,
    /// Cap on the graded cell size in the cladding.
    pub max_spacing_nm: f64,
    pub growth: f64,
    /// Uniform fine region kept outside the disk faces.
    pub fine_margin_nm: f64,
    /// Physical cladding kept between the disk and the absorbing layers.
    pub cladding_nm: f64,
    /// Extra cladding beyond the radiation caustic ρ = m/(k n_clad).
    pub caustic_margin_nm: f64,
    pub pml_nm: f64,
    pub pml_strength: f64,
    /// Depth inside the rim where the grid starts (Dirichlet wall).
    pub inner_margin_nm: f64,
    pub krylov_dim: usize,
    /// Grid halvings below twice `grid_spacing_nm`; 0 solves once at the
    /// base spacing without a convergence check.
    pub max_refinements: usize,
    pub convergence_tol_nm: f64,
    /// Largest radiation Q the discretization resolves reliably.
    pub q_ceiling: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_spacing_nm: 20.0,
            max_spacing_nm: 80.0,
            growth: 1.25,
            fine_margin_nm: 400.0,
            cladding_nm: 2000.0,
            caustic_margin_nm: 700.0,
            pml_nm: 1000.0,
            pml_strength: 4.0,
            inner_margin_nm: 2500.0,
            krylov_dim: 24,
            max_refinements: 2,
            convergence_tol_nm: 0.1,
            q_ceiling: 1e11,
        }
    }
}

impl SolverConfig {
    fn grid_spec(&self, spacing_nm: f64, rho_extent_nm: f64, disk_z_cells: Option<usize>) -> GridSpec {
        GridSpec {
            spacing: spacing_nm * NM,
            max_spacing: self.max_spacing_nm.max(spacing_nm) * NM,
            growth: self.growth,
            fine_margin: self.fine_margin_nm * NM,
            inner_margin: self.inner_margin_nm * NM,
            rho_extent: rho_extent_nm * NM,
            z_extent: self.cladding_nm * NM,
            pml_thickness: self.pml_nm * NM,
            disk_z_cells,
        }
    }
}

/// Radiation-limited quality factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiationQ {
    Value(f64),
    /// Loss below what the discretization resolves; carries the ceiling.
    ExceedsCeiling(f64),
}

impl RadiationQ {
    /// Numeric value, with the ceiling standing in for unresolved losses.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            RadiationQ::Value(q) | RadiationQ::ExceedsCeiling(q) => q,
        }
    }
}

/// Solved eigenmode with its derived figures of merit.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub id: ModeId,
    pub lambda_nm: f64,
    /// Complex eigen-wavenumber k = ω/c (1/m).
    pub k: Complex64,
    pub q_rad: RadiationQ,
    pub field: FieldMap,
    pub veff_m3: f64,
    pub veff_cubic_wavelengths: f64,
    pub gamma_prime_per_nm: f64,
    /// Raw resonance wavelengths at successive refinement levels, coarse first.
    pub refinement_history_nm: Vec<f64>,
    /// Richardson estimates from consecutive level pairs; the last one is `lambda_nm`.
    pub extrapolated_history_nm: Vec<f64>,
    /// V_eff in (λ/n)³ at each refinement level.
    pub veff_history: Vec<f64>,
    /// Spacing of the finest grid, which supplies the field map.
    pub grid_spacing_nm: f64,
    pub disk_radius_m: f64,
    pub disk_half_thickness_m: f64,
}

/// Mode volume in absolute and material-wavelength-cubed units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVolume {
    pub m3: f64,
    pub cubic_wavelengths: f64,
}

/// Where to evaluate the normalized field magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    /// Explicit coordinates in nm.
    Point { rho_nm: f64, z_nm: f64 },
    /// Distance outside the rim along the outward normal in the mirror plane.
    OutsideRim { distance_nm: f64 },
    /// Distance above the top face, on the radius of the field maximum.
    AboveTop { distance_nm: f64 },
}

/// Raw eigenpair on one grid.
struct GridMode {
    k2: Complex64,
    grid: Grid,
    vector: Vec<Complex64>,
    n_disk: f64,
    n_clad: f64,
}

fn wavelength_nm(k2: Complex64) -> f64 {
    std::f64::consts::TAU / k2.sqrt().re / NM
}

/// Count sign changes of the phase-aligned field along the mirror plane,
/// inside the disk, ignoring samples below `floor` of the peak.
fn radial_order(grid: &Grid, v: &[Complex64]) -> u32 {
    let row: Vec<Complex64> = (0..grid.n_rho())
        .filter(|&i| grid.rho.centers[i] < grid.radius + 0.1 * UM)
        .map(|i| v[grid.index(i, 0)])
        .collect();
    let (peak_idx, peak) = row
        .iter()
        .enumerate()
        .map(|(k, x)| (k, x.norm()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    if peak == 0.0 {
        return 0;
    }
    let rot = row[peak_idx].conj() / peak;
    let floor = 0.03;
    let mut sign = 0i8;
    let mut changes = 0;
    for x in &row {
        let r = (x * rot).re / peak;
        if r.abs() < floor {
            continue;
        }
        let s = if r > 0.0 { 1 } else { -1 };
        if sign != 0 && s != sign {
            changes += 1;
        }
        sign = s;
    }
    changes + 1
}

/// Fraction of ε|ψ|²ρ weight within 0.5 µm of the disk, a guard against PML
/// and radiation-continuum eigenvectors.
fn confinement(grid: &Grid, eps: &[f64], v: &[Complex64]) -> f64 {
    let mut inside = 0.0;
    let mut total = 0.0;
    for i in 0..grid.n_rho() {
        let rc = grid.rho.centers[i];
        let wr = grid.rho.width(i);
        for j in 0..grid.n_z() {
            let k = grid.index(i, j);
            let w = eps[k] * v[k].norm_sqr() * rc * wr * grid.z.width(j);
            total += w;
            if rc < grid.radius + 0.5 * UM && grid.z.centers[j] < grid.half_thickness + 0.5 * UM {
                inside += w;
            }
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

fn seed_vector(grid: &Grid) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); grid.len()];
    let rc0 = grid.radius - 0.35 * UM;
    let w = 0.35 * UM;
    for i in 0..grid.n_rho() {
        let dr = (grid.rho.centers[i] - rc0) / w;
        for j in 0..grid.n_z() {
            let dz = grid.z.centers[j] / (2.0 * grid.half_thickness);
            v[grid.index(i, j)] = Complex64::new((-dr * dr - dz * dz).exp() + 1e-3, 0.0);
        }
    }
    v
}

fn solve_on_grid(
    geom: &DiskGeometry,
    mat: &MaterialStack,
    id: ModeId,
    lambda_guess_nm: f64,
    spacing_nm: f64,
    disk_z_cells: Option<usize>,
    cfg: &SolverConfig,
) -> Result<GridMode> {
    let radius = geom.radius_m();
    let k_guess = std::f64::consts::TAU / (lambda_guess_nm * NM);
    let caustic = id.m as f64 / (k_guess * mat.n_clad);
    let rho_extent_nm = cfg
        .cladding_nm
        .max((caustic - radius) / NM + cfg.caustic_margin_nm);
    let spec = cfg.grid_spec(spacing_nm, rho_extent_nm, disk_z_cells);
    let grid = Grid::new(radius, 0.5 * geom.thickness_m(), &spec);
    let op = Operator::assemble(&grid, mat.n_disk, mat.n_clad, id.m, id.polarization, cfg.pml_strength);

    let sigma = Complex64::new(k_guess * k_guess, 0.0);
    let lu = op.shifted_band(sigma).factorize()?;
    let seed = seed_vector(&grid);
    let pairs = eigen::shift_invert_arnoldi(&op, &lu, sigma, cfg.krylov_dim, Some(&seed))?;
    drop(lu);

    let candidate = pairs
        .into_iter()
        .filter(|pr| pr.residual < 1e-5 && pr.value.re > 0.0)
        .filter(|pr| confinement(&grid, &op.eps, &pr.vector) > 0.5)
        .find(|pr| radial_order(&grid, &pr.vector) == id.p)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "no confined {id} eigenvector near {lambda_guess_nm:.3} nm"
            ))
        })?;

    // inverse iteration on a shift next to the Ritz value tightens the imaginary part
    let shift = candidate.value * Complex64::new(1.0 + 1e-9, 0.0);
    let lu = op.shifted_band(shift).factorize()?;
    let polished = eigen::polish(&op, &lu, shift, &candidate.vector, 3);
    let best = if polished.residual < candidate.residual { polished } else { candidate };

    Ok(GridMode {
        k2: best.value,
        vector: best.vector,
        grid,
        n_disk: mat.n_disk,
        n_clad: mat.n_clad,
    })
}

/// Resamples the cell-centered solution onto the regular lattice that
/// coincides with the cells of the fine region.
fn to_field_map(gm: &GridMode, cladding_m: f64) -> Result<FieldMap> {
    let g = &gm.grid;
    let drho = g.drho();
    let dz = g.disk_dz();
    let rho0 = g.rho.centers[0];
    let z0 = g.z.centers[0];
    let rho_end = (g.radius + cladding_m).min(g.rho.pml_start);
    let z_end = (g.half_thickness + cladding_m).min(g.z.pml_start);
    let n_rho = ((rho_end - rho0) / drho).floor() as usize + 1;
    let n_z = ((z_end - z0) / dz).floor() as usize + 1;

    fn bracket(centers: &[f64], x: f64) -> (usize, f64) {
        let k = centers.partition_point(|&c| c <= x).clamp(1, centers.len() - 1);
        let (a, b) = (centers[k - 1], centers[k]);
        (k - 1, ((x - a) / (b - a)).clamp(0.0, 1.0))
    }

    let mut values = Vec::with_capacity(n_rho * n_z);
    let mut index = Vec::with_capacity(n_rho * n_z);
    for i in 0..n_rho {
        let rho = rho0 + i as f64 * drho;
        let (ia, fr) = bracket(&g.rho.centers, rho);
        for j in 0..n_z {
            let z = z0 + j as f64 * dz;
            let (ja, fz) = bracket(&g.z.centers, z);
            let v = |a: usize, b: usize| gm.vector[g.index(a, b)];
            let val = v(ia, ja) * ((1.0 - fr) * (1.0 - fz))
                + v(ia + 1, ja) * (fr * (1.0 - fz))
                + v(ia, ja + 1) * ((1.0 - fr) * fz)
                + v(ia + 1, ja + 1) * (fr * fz);
            values.push(val);
            let inside = rho < g.radius && z < g.half_thickness;
            index.push(if inside { gm.n_disk } else { gm.n_clad });
        }
    }
    let mut map = FieldMap::new(rho0, z0, drho, dz, n_rho, n_z, values, index)?;
    map.normalize()?;
    Ok(map)
}

fn radiation_q_from_k(k: Complex64, ceiling: f64) -> RadiationQ {
    // e^{-iωt}: radiative decay means Im k < 0
    if k.im >= 0.0 {
        return RadiationQ::ExceedsCeiling(ceiling);
    }
    let q = k.re / (-2.0 * k.im);
    if q > ceiling {
        RadiationQ::ExceedsCeiling(ceiling)
    } else {
        RadiationQ::Value(q)
    }
}

/// Solves one (m, p, polarization) resonance near `lambda_guess_nm`.
///
/// Grids of spacing 2h, h, h/2, … are solved in turn with the number of cells
/// across the disk doubling exactly; each consecutive pair gives a Richardson
/// estimate λ_f + (λ_f − λ_c)/3. Converged once two estimates differ by less
/// than the tolerance. The field, V_eff and Γ′ come from the finest grid.
pub fn solve_mode(
    geom: &DiskGeometry,
    mat: &MaterialStack,
    id: ModeId,
    lambda_guess_nm: f64,
    cfg: &SolverConfig,
) -> Result<ModeSolution> {
    mat.validate()?;
    let h = cfg.grid_spacing_nm;
    let lambda_mat_nm = |lam: f64| lam / mat.n_disk;
    if cfg.max_refinements == 0 {
        let gm = solve_on_grid(geom, mat, id, lambda_guess_nm, h, None, cfg)?;
        let lam = wavelength_nm(gm.k2);
        let field = to_field_map(&gm, cfg.cladding_nm * NM)?;
        let v = field_mode_volume(&field, AzimuthalProfile::Standing)? / (lambda_mat_nm(lam) * NM).powi(3);
        let history = Refinement {
            raw: vec![lam],
            extrapolated: Vec::new(),
            veff: vec![v],
        };
        return build_solution(geom, mat, id, &gm, field, history, h, cfg);
    }

    let half_t_nm = 0.5 * geom.thickness_m() / NM;
    let base_cells = (half_t_nm / (2.0 * h)).ceil().max(2.0) as usize;
    let mut hist = Refinement::default();
    let mut guess = lambda_guess_nm;
    for level in 0..=cfg.max_refinements {
        let spacing = 2.0 * h / f64::powi(2.0, level as i32);
        let gm = solve_on_grid(geom, mat, id, guess, spacing, Some(base_cells << level), cfg)?;
        let lam = wavelength_nm(gm.k2);
        let field = to_field_map(&gm, cfg.cladding_nm * NM)?;
        hist.veff.push(field_mode_volume(&field, AzimuthalProfile::Standing)? / (lambda_mat_nm(lam) * NM).powi(3));
        if let Some(&prev) = hist.raw.last() {
            hist.extrapolated.push(lam + (lam - prev) / 3.0);
        }
        hist.raw.push(lam);
        guess = lam;
        let n = hist.extrapolated.len();
        if n >= 2 && (hist.extrapolated[n - 1] - hist.extrapolated[n - 2]).abs() < cfg.convergence_tol_nm {
            return build_solution(geom, mat, id, &gm, field, hist, spacing, cfg);
        }
    }
    let (previous_nm, last_nm) = match hist.extrapolated.as_slice() {
        [.., a, b] => (*a, *b),
        _ => (hist.raw[0], *hist.raw.last().expect("non-empty")),
    };
    Err(Error::NotConverged {
        label: id.to_string(),
        previous_nm,
        last_nm,
        tolerance_nm: cfg.convergence_tol_nm,
    })
}

#[derive(Debug, Default)]
struct Refinement {
    raw: Vec<f64>,
    extrapolated: Vec<f64>,
    veff: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn build_solution(
    geom: &DiskGeometry,
    mat: &MaterialStack,
    id: ModeId,
    gm: &GridMode,
    field: FieldMap,
    history: Refinement,
    spacing_nm: f64,
    cfg: &SolverConfig,
) -> Result<ModeSolution> {
    let k = gm.k2.sqrt();
    let lambda_nm = history
        .extrapolated
        .last()
        .copied()
        .unwrap_or_else(|| wavelength_nm(gm.k2));
    let mut sol = ModeSolution {
        id,
        lambda_nm,
        k,
        q_rad: radiation_q_from_k(k, cfg.q_ceiling),
        field,
        veff_m3: 0.0,
        veff_cubic_wavelengths: 0.0,
        gamma_prime_per_nm: 0.0,
        refinement_history_nm: history.raw,
        extrapolated_history_nm: history.extrapolated,
        veff_history: history.veff,
        grid_spacing_nm: spacing_nm,
        disk_radius_m: geom.radius_m(),
        disk_half_thickness_m: 0.5 * geom.thickness_m(),
    };
    let v = compute_veff(&sol, mat)?;
    sol.veff_m3 = v.m3;
    sol.veff_cubic_wavelengths = v.cubic_wavelengths;
    let probe = default_probe_nm(&sol.field);
    sol.gamma_prime_per_nm = surface_energy_fraction(&sol, mat, probe)?;
    Ok(sol)
}

fn default_probe_nm(field: &FieldMap) -> f64 {
    (0.5f64).min(0.25 * field.drho.min(field.dz) / NM)
}

/// All modes with p ≤ `p_max` and m in `m_range` whose resonance lies in
/// `band`, sorted by wavelength. Modes are solved independently in parallel.
pub fn solve_modes(
    geom: &DiskGeometry,
    mat: &MaterialStack,
    band: &WavelengthBand,
    m_range: std::ops::RangeInclusive<u32>,
    p_max: u32,
    polarization: Polarization,
    cfg: &SolverConfig,
) -> Result<Vec<ModeSolution>> {
    mat.validate()?;
    // oracle estimates are within a couple of percent; screen with margin
    let screen = band.widened(0.03);
    let mut jobs = Vec::new();
    for m in m_range {
        for p in 1..=p_max {
            let id = ModeId::new(m, p, polarization)?;
            let est = oracle::resonance_estimate_nm(geom, mat, m, p, polarization, band.center_nm())?;
            if screen.contains(est) {
                jobs.push((id, est));
            }
        }
    }
    let solved: Vec<Result<ModeSolution>> = jobs
        .par_iter()
        .map(|&(id, est)| solve_mode(geom, mat, id, est, cfg))
        .collect();
    let mut modes = Vec::new();
    for r in solved {
        let mode = r?;
        if band.contains(mode.lambda_nm) {
            modes.push(mode);
        }
    }
    modes.sort_by(|a, b| a.lambda_nm.total_cmp(&b.lambda_nm));
    Ok(modes)
}

/// Azimuthal dependence assumed when integrating over φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AzimuthalProfile {
    /// cos(mφ): the standing waves that backscattering splits into a doublet.
    #[default]
    Standing,
    /// exp(imφ): |E| uniform in φ.
    Traveling,
}

impl AzimuthalProfile {
    /// Ratio of ∫|E|²dφ/(2π max_φ|E|²).
    fn weight(self) -> f64 {
        match self {
            AzimuthalProfile::Standing => 0.5,
            AzimuthalProfile::Traveling => 1.0,
        }
    }
}

/// ∫n²|E|² dV / max(n²|E|²) for standing-wave modes.
pub fn compute_veff(mode: &ModeSolution, mat: &MaterialStack) -> Result<ModeVolume> {
    compute_veff_with(mode, mat, AzimuthalProfile::Standing)
}

pub fn compute_veff_with(mode: &ModeSolution, mat: &MaterialStack, profile: AzimuthalProfile) -> Result<ModeVolume> {
    let v = field_mode_volume(&mode.field, profile)?;
    let lam_n = mode.lambda_nm * NM / mat.n_disk;
    Ok(ModeVolume {
        m3: v,
        cubic_wavelengths: v / lam_n.powi(3),
    })
}

/// Mode volume of a normalized field map (m³), using the 2πρ dρ dz measure
/// over both mirrored halves.
pub fn field_mode_volume(f: &FieldMap, profile: AzimuthalProfile) -> Result<f64> {
    if !f.is_normalized() {
        return Err(Error::Unnormalized);
    }
    let mut total = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..f.n_rho {
        let rho = f.rho(i);
        for j in 0..f.n_z {
            let k = f.idx(i, j);
            let u = f.index[k].powi(2) * f.values[k].norm_sqr();
            peak = peak.max(u);
            total += u * rho;
        }
    }
    if peak == 0.0 {
        return Err(Error::Numerical("field map is identically zero".into()));
    }
    let integral = 2.0 * std::f64::consts::TAU * total * f.drho * f.dz;
    Ok(profile.weight() * integral / peak)
}

/// Field magnitude at the inner face of the rim and top surface, linearly
/// extrapolated from the two nearest interior samples.
fn surface_profiles(mode: &ModeSolution) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let f = &mode.field;
    let r = mode.disk_radius_m;
    let h = mode.disk_half_thickness_m;
    let inner_rho: Vec<usize> = (0..f.n_rho).filter(|&i| f.rho(i) < r).collect();
    let inner_z: Vec<usize> = (0..f.n_z).filter(|&j| f.z(j) < h).collect();
    let extrap = |a: (f64, Complex64), b: (f64, Complex64), x: f64| -> Complex64 {
        let t = (x - a.0) / (b.0 - a.0);
        a.1 + (b.1 - a.1) * t
    };
    // top face: (ρ, |E|²) for each interior ρ column
    let j1 = *inner_z.last().expect("disk spans at least one z sample");
    let j0 = j1.saturating_sub(1);
    let top = inner_rho
        .iter()
        .map(|&i| {
            let e = extrap((f.z(j0), f.values[f.idx(i, j0)]), (f.z(j1), f.values[f.idx(i, j1)]), h);
            (f.rho(i), e.norm_sqr())
        })
        .collect();
    let i1 = *inner_rho.last().expect("disk spans at least one ρ sample");
    let i0 = i1.saturating_sub(1);
    let rim = inner_z
        .iter()
        .map(|&j| {
            let e = extrap((f.rho(i0), f.values[f.idx(i0, j)]), (f.rho(i1), f.values[f.idx(i1, j)]), r);
            (f.z(j), e.norm_sqr())
        })
        .collect();
    (top, rim)
}

/// Disk faces covered by an adsorbed film.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilmCoverage {
    /// Top face and rim; the underside faces the substrate.
    #[default]
    Exposed,
    /// Top, bottom and rim.
    All,
}

/// Γ′ in nm⁻¹ for a film on the exposed faces.
pub fn surface_energy_fraction(mode: &ModeSolution, mat: &MaterialStack, probe_nm: f64) -> Result<f64> {
    surface_energy_fraction_with(mode, mat, probe_nm, FilmCoverage::Exposed)
}

/// Fraction of modal energy per unit thickness in a conformal film, Γ′ in nm⁻¹.
///
/// The film occupies the outermost `probe_nm` of the dielectric and carries
/// the disk index. Evaluated at the probe thickness and half of it and
/// extrapolated linearly to zero thickness.
pub fn surface_energy_fraction_with(
    mode: &ModeSolution,
    mat: &MaterialStack,
    probe_nm: f64,
    coverage: FilmCoverage,
) -> Result<f64> {
    let f = &mode.field;
    if !f.is_normalized() {
        return Err(Error::Unnormalized);
    }
    let guard_nm = 0.5 * f.drho.min(f.dz) / NM;
    if !(probe_nm > 0.0) || probe_nm > guard_nm {
        return Err(Error::InvalidParameter {
            name: "probe_film_thickness",
            reason: format!("must lie in (0, {guard_nm:.2}] nm for this grid"),
        });
    }
    let total = {
        let mut t = 0.0;
        for i in 0..f.n_rho {
            for j in 0..f.n_z {
                let k = f.idx(i, j);
                t += f.index[k].powi(2) * f.values[k].norm_sqr() * f.rho(i);
            }
        }
        2.0 * std::f64::consts::TAU * t * f.drho * f.dz
    };
    if total == 0.0 {
        return Ok(0.0);
    }
    let (top, rim) = surface_profiles(mode);
    let r = mode.disk_radius_m;
    let n2 = mat.n_disk * mat.n_disk;
    let shell = |s: f64| -> f64 {
        // flat faces; the shell is thin, so |E|² is taken at the face
        let n_faces = match coverage {
            FilmCoverage::Exposed => 1.0,
            FilmCoverage::All => 2.0,
        };
        let faces: f64 = top.iter().map(|&(rho, e2)| e2 * rho).sum::<f64>() * f.drho * s * n_faces;
        let side: f64 = rim.iter().map(|&(_, e2)| e2).sum::<f64>() * f.dz * 2.0 * (r - 0.5 * s) * s;
        std::f64::consts::TAU * n2 * (faces + side)
    };
    let s1 = probe_nm * NM;
    let g1 = shell(s1) / total / probe_nm;
    let g_half = shell(0.5 * s1) / total / (0.5 * probe_nm);
    Ok(2.0 * g_half - g1)
}

/// |E(position)|/max|E|.
pub fn field_at(mode: &ModeSolution, position: Position) -> Result<f64> {
    let f = &mode.field;
    if !f.is_normalized() {
        return Err(Error::Unnormalized);
    }
    let (rho, z) = match position {
        Position::Point { rho_nm, z_nm } => (rho_nm * NM, z_nm * NM),
        Position::OutsideRim { distance_nm } => (mode.disk_radius_m + distance_nm * NM, 0.0),
        Position::AboveTop { distance_nm } => {
            let (i, _) = f.argmax();
            (f.rho(i), mode.disk_half_thickness_m + distance_nm * NM)
        }
    };
    f.magnitude_at(rho, z)
}

/// Radiation-limited Q from the complex eigenfrequency.
pub fn radiation_q(mode: &ModeSolution, cfg: &SolverConfig) -> RadiationQ {
    radiation_q_from_k(mode.k, cfg.q_ceiling)
}
