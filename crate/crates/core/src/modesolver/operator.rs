//! Finite-volume discretization of the scalar axisymmetric wave operator.
//!
//! With the azimuthal ansatz ψ(ρ, z)·exp(imφ) the discrete problem is the
//! generalized eigenproblem K ψ = k² B ψ, with B = diag(ε) and
//!
//! * TE-like: K ψ = −[∂z² + (1/ρ)∂ρ ρ∂ρ − m²/ρ²] ψ  (ψ ~ in-plane E; ψ and ∂zψ continuous)
//! * TM-like: K ψ = −[∂z ε⁻¹ ∂z ε + (1/ρ)∂ρ ρ∂ρ − m²/ρ²] ψ  (ψ ~ E_z; εψ continuous across the faces)
//!
//! Coordinates are complex-stretched inside the PML. The mirror plane z = 0
//! carries a zero-flux condition; the outer PML edges and the inner ρ boundary
//! are Dirichlet.

use num_complex::Complex64;

use super::banded::BandMatrix;
use super::grid::Grid;
use crate::geometry::Polarization;

#[derive(Debug, Clone, Copy, Default)]
pub struct Stencil {
    pub center: Complex64,
    pub z_minus: Complex64,
    pub z_plus: Complex64,
    pub rho_minus: Complex64,
    pub rho_plus: Complex64,
}

/// Sparse five-point operator K together with the diagonal of B.
#[derive(Debug, Clone)]
pub struct Operator {
    pub n_rho: usize,
    pub n_z: usize,
    pub stencils: Vec<Stencil>,
    pub eps: Vec<f64>,
}

fn face_flux_weight(grid: &Grid, pol: Polarization, eps: &[f64], j_lo: usize, j_hi: usize, i: usize) -> f64 {
    match pol {
        Polarization::TeLike => 1.0,
        Polarization::TmLike => {
            // series combination of the two half cells
            let e_lo = eps[grid.index(i, j_lo)];
            let e_hi = eps[grid.index(i, j_hi)];
            let d_lo = 0.5 * grid.z.width(j_lo);
            let d_hi = 0.5 * grid.z.width(j_hi);
            (d_lo + d_hi) / (d_lo * e_lo + d_hi * e_hi)
        }
    }
}

impl Operator {
    pub fn assemble(
        grid: &Grid,
        n_disk: f64,
        n_clad: f64,
        m: u32,
        pol: Polarization,
        pml_strength: f64,
    ) -> Self {
        let (nr, nz) = (grid.n_rho(), grid.n_z());
        let mut eps = vec![0.0; nr * nz];
        for i in 0..nr {
            for j in 0..nz {
                let n = if grid.in_disk(i, j) { n_disk } else { n_clad };
                eps[grid.index(i, j)] = n * n;
            }
        }
        let one = Complex64::new(1.0, 0.0);
        let m2 = (m as f64).powi(2);
        let mut stencils = vec![Stencil::default(); nr * nz];
        let eps_tm = |i: usize, j: usize| -> f64 {
            match pol {
                Polarization::TeLike => 1.0,
                Polarization::TmLike => eps[grid.index(i, j)],
            }
        };

        for i in 0..nr {
            let rc = grid.rho.centers[i];
            let wr = grid.rho.width(i);
            let s_c = grid.rho.stretch(rc, pml_strength);
            let rt_c = grid.rho.stretched(rc, pml_strength);
            let lo_face = grid.rho.faces[i];
            let hi_face = grid.rho.faces[i + 1];
            let d_lo = if i == 0 { 0.5 * wr } else { rc - grid.rho.centers[i - 1] };
            let d_hi = if i + 1 == nr { 0.5 * wr } else { grid.rho.centers[i + 1] - rc };
            let c_lo = grid.rho.stretched(lo_face, pml_strength)
                / (grid.rho.stretch(lo_face, pml_strength) * d_lo);
            let c_hi = grid.rho.stretched(hi_face, pml_strength)
                / (grid.rho.stretch(hi_face, pml_strength) * d_hi);
            let pre_r = one / (s_c * rt_c * wr);
            let centrifugal = m2 / (rt_c * rt_c);

            for j in 0..nz {
                let zc = grid.z.centers[j];
                let wz = grid.z.width(j);
                let sz_c = grid.z.stretch(zc, pml_strength);
                let pre_z = one / (sz_c * wz);
                let mut st = Stencil::default();

                // radial part
                st.rho_minus = -pre_r * c_lo;
                st.rho_plus = -pre_r * c_hi;
                st.center += pre_r * (c_lo + c_hi) + centrifugal;
                if i == 0 {
                    st.rho_minus = Complex64::new(0.0, 0.0);
                }
                if i + 1 == nr {
                    st.rho_plus = Complex64::new(0.0, 0.0);
                }

                // vertical part
                let e_self = eps_tm(i, j);
                if j > 0 {
                    let d = zc - grid.z.centers[j - 1];
                    let f = grid.z.faces[j];
                    let a = face_flux_weight(grid, pol, &eps, j - 1, j, i);
                    let c = pre_z * a / (grid.z.stretch(f, pml_strength) * d);
                    st.z_minus = -c * eps_tm(i, j - 1);
                    st.center += c * e_self;
                }
                let f = grid.z.faces[j + 1];
                if j + 1 < nz {
                    let d = grid.z.centers[j + 1] - zc;
                    let a = face_flux_weight(grid, pol, &eps, j, j + 1, i);
                    let c = pre_z * a / (grid.z.stretch(f, pml_strength) * d);
                    st.z_plus = -c * eps_tm(i, j + 1);
                    st.center += c * e_self;
                } else {
                    let a = 1.0 / eps_tm(i, j);
                    let c = pre_z * a / (grid.z.stretch(f, pml_strength) * (0.5 * wz));
                    st.center += c * e_self;
                }
                stencils[grid.index(i, j)] = st;
            }
        }
        Self {
            n_rho: nr,
            n_z: nz,
            stencils,
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    /// y = K x.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let nz = self.n_z;
        for i in 0..self.n_rho {
            for j in 0..nz {
                let k = i * nz + j;
                let st = &self.stencils[k];
                let mut acc = st.center * x[k];
                if j > 0 {
                    acc += st.z_minus * x[k - 1];
                }
                if j + 1 < nz {
                    acc += st.z_plus * x[k + 1];
                }
                if i > 0 {
                    acc += st.rho_minus * x[k - nz];
                }
                if i + 1 < self.n_rho {
                    acc += st.rho_plus * x[k + nz];
                }
                y[k] = acc;
            }
        }
    }

    /// Band matrix of K − σB.
    pub fn shifted_band(&self, sigma: Complex64) -> BandMatrix {
        let nz = self.n_z;
        let n = self.len();
        let mut band = BandMatrix::zeros(n, nz, nz);
        for i in 0..self.n_rho {
            for j in 0..nz {
                let k = i * nz + j;
                let st = &self.stencils[k];
                band.add(k, k, st.center - sigma * self.eps[k]);
                if j > 0 {
                    band.add(k, k - 1, st.z_minus);
                }
                if j + 1 < nz {
                    band.add(k, k + 1, st.z_plus);
                }
                if i > 0 {
                    band.add(k, k - nz, st.rho_minus);
                }
                if i + 1 < self.n_rho {
                    band.add(k, k + nz, st.rho_plus);
                }
            }
        }
        band
    }
}
