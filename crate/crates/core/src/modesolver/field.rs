//! Regular-lattice field maps over the z ≥ 0 half of the (ρ, z) cross-section,
//! with CSV and compact binary export.
//!
//! Binary layout (little-endian):
//!
//! | offset | size | content                              |
//! |--------|------|--------------------------------------|
//! | 0      | 2    | magic `b"WG"`                        |
//! | 2      | 2    | format version (u16, currently 1)    |
//! | 4      | 2    | nρ (u16)                             |
//! | 6      | 2    | nz (u16)                             |
//! | 8      | 4    | ρ spacing, nm (f32)                  |
//! | 12     | 4    | z spacing, nm (f32)                  |
//! | 16     | 32   | ρ₀, z₀, ρ spacing, z spacing in nm (f64) |
//! | 48     | 24·nρ·nz | (re E, im E, n) as f64, ρ-major   |

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::NM;

pub const BINARY_MAGIC: [u8; 2] = *b"WG";
pub const BINARY_VERSION: u16 = 1;

/// Field samples on ρ_i = ρ₀ + i·Δρ, z_j = z₀ + j·Δz (meters), mirrored
/// about z = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub rho0: f64,
    pub z0: f64,
    pub drho: f64,
    pub dz: f64,
    pub n_rho: usize,
    pub n_z: usize,
    /// ρ-major complex samples of the dominant field component.
    pub values: Vec<Complex64>,
    /// Refractive index at each sample.
    pub index: Vec<f64>,
    normalized: bool,
}

impl FieldMap {
    pub fn new(
        rho0: f64,
        z0: f64,
        drho: f64,
        dz: f64,
        n_rho: usize,
        n_z: usize,
        values: Vec<Complex64>,
        index: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_rho * n_z || index.len() != n_rho * n_z {
            return Err(Error::InvalidParameter {
                name: "field map",
                reason: format!(
                    "expected {} samples, got {} values and {} indices",
                    n_rho * n_z,
                    values.len(),
                    index.len()
                ),
            });
        }
        if n_rho < 2 || n_z < 2 || !(drho > 0.0) || !(dz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "field map",
                reason: "need at least 2×2 samples and positive spacings".into(),
            });
        }
        Ok(Self {
            rho0,
            z0,
            drho,
            dz,
            n_rho,
            n_z,
            values,
            index,
            normalized: false,
        })
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }
    pub fn rho(&self, i: usize) -> f64 {
        self.rho0 + i as f64 * self.drho
    }
    pub fn z(&self, j: usize) -> f64 {
        self.z0 + j as f64 * self.dz
    }
    pub fn rho_max(&self) -> f64 {
        self.rho(self.n_rho - 1)
    }
    pub fn z_max(&self) -> f64 {
        self.z(self.n_z - 1)
    }
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Scales to max |E| = 1 and rotates the global phase so the maximum is real.
    pub fn normalize(&mut self) -> Result<()> {
        let (k, peak) = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(peak > 0.0) {
            return Err(Error::Numerical("cannot normalize an identically zero field".into()));
        }
        let rot = self.values[k].conj() / (peak * peak);
        self.values.iter_mut().for_each(|v| *v *= rot);
        self.normalized = true;
        Ok(())
    }

    /// Index (i, j) of the max |E| sample.
    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        (k / self.n_z, k % self.n_z)
    }

    /// Index (i, j) of the max n²|E|² sample.
    pub fn argmax_energy(&self) -> (usize, usize) {
        let k = (0..self.values.len())
            .map(|k| (k, self.index[k].powi(2) * self.values[k].norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        (k / self.n_z, k % self.n_z)
    }

    /// Bilinear interpolation of |E| at (ρ, z) in meters; z is mirrored.
    pub fn magnitude_at(&self, rho: f64, z: f64) -> Result<f64> {
        let z = z.abs();
        let tol = 1e-9 * self.drho;
        let out = || Error::OutOfDomain {
            rho_nm: rho / NM,
            z_nm: z / NM,
        };
        if rho < self.rho0 - tol || rho > self.rho_max() + tol || z > self.z_max() + tol {
            return Err(out());
        }
        let u = ((rho - self.rho0) / self.drho).clamp(0.0, (self.n_rho - 1) as f64);
        // below the first z sample the field is mirrored across z = 0
        let v_raw = (z - self.z0) / self.dz;
        let i0 = (u.floor() as usize).min(self.n_rho - 2);
        let fu = u - i0 as f64;
        let sample = |i: usize, v: f64| -> f64 {
            if v < 0.0 {
                // between the mirror image at −z₀ and z₀ the magnitude is flat to first order
                return self.values[self.idx(i, 0)].norm();
            }
            let v = v.min((self.n_z - 1) as f64);
            let j0 = (v.floor() as usize).min(self.n_z - 2);
            let fv = v - j0 as f64;
            let a = self.values[self.idx(i, j0)];
            let b = self.values[self.idx(i, j0 + 1)];
            (a * (1.0 - fv) + b * fv).norm()
        };
        let lo = sample(i0, v_raw);
        let hi = sample(i0 + 1, v_raw);
        Ok(lo * (1.0 - fu) + hi * fu)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rho_nm,z_nm,re_E,im_E,n")?;
        for i in 0..self.n_rho {
            for j in 0..self.n_z {
                let v = self.values[self.idx(i, j)];
                writeln!(
                    w,
                    "{:.6},{:.6},{:.12e},{:.12e},{}",
                    self.rho(i) / NM,
                    self.z(j) / NM,
                    v.re,
                    v.im,
                    self.index[self.idx(i, j)]
                )?;
            }
        }
        Ok(())
    }

    /// Reads a CSV map written by [`FieldMap::write_csv`] (regular lattice assumed).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<[f64; 5]> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "rho_nm,z_nm,re_E,im_E,n" {
                    return Err(Error::Parse(format!("unexpected field map header `{line}`")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut rec = [0.0; 5];
            let mut count = 0;
            for (k, tok) in line.split(',').enumerate() {
                if k >= 5 {
                    return Err(Error::Parse(format!("line {}: too many columns", lineno + 1)));
                }
                rec[k] = tok
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                count += 1;
            }
            if count != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 columns", lineno + 1)));
            }
            rows.push(rec);
        }
        if rows.len() < 4 {
            return Err(Error::Parse("field map needs at least 2×2 samples".into()));
        }
        let n_z = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
        if n_z < 2 || rows.len() % n_z != 0 {
            return Err(Error::Parse("field map rows do not form a lattice".into()));
        }
        let n_rho = rows.len() / n_z;
        let rho0 = rows[0][0] * NM;
        let z0 = rows[0][1] * NM;
        let dz = (rows[1][1] - rows[0][1]) * NM;
        let drho = (rows[n_z][0] - rows[0][0]) * NM;
        let values = rows.iter().map(|r| Complex64::new(r[2], r[3])).collect();
        let index = rows.iter().map(|r| r[4]).collect();
        let mut map = Self::new(rho0, z0, drho, dz, n_rho, n_z, values, index)?;
        map.normalized = (map.values.iter().map(|v| v.norm()).fold(0.0, f64::max) - 1.0).abs() < 1e-9;
        Ok(map)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n_rho = u16::try_from(self.n_rho).map_err(|_| Error::Io("nρ exceeds u16".into()))?;
        let n_z = u16::try_from(self.n_z).map_err(|_| Error::Io("nz exceeds u16".into()))?;
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&n_rho.to_le_bytes())?;
        w.write_all(&n_z.to_le_bytes())?;
        w.write_all(&((self.drho / NM) as f32).to_le_bytes())?;
        w.write_all(&((self.dz / NM) as f32).to_le_bytes())?;
        for x in [self.rho0, self.z0, self.drho, self.dz] {
            w.write_all(&(x / NM).to_le_bytes())?;
        }
        for (v, n) in self.values.iter().zip(&self.index) {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
            w.write_all(&n.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if header[0..2] != BINARY_MAGIC {
            return Err(Error::Parse("bad field map magic".into()));
        }
        let version = u16::from_le_bytes([header[2], header[3]]);
        if version != BINARY_VERSION {
            return Err(Error::Parse(format!("unsupported field map version {version}")));
        }
        let n_rho = u16::from_le_bytes([header[4], header[5]]) as usize;
        let n_z = u16::from_le_bytes([header[6], header[7]]) as usize;
        let mut f64s = |count: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * count];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        let geo = f64s(4)?;
        let body = f64s(3 * n_rho * n_z)?;
        let values = body.chunks_exact(3).map(|c| Complex64::new(c[0], c[1])).collect();
        let index = body.chunks_exact(3).map(|c| c[2]).collect();
        let mut map = Self::new(geo[0] * NM, geo[1] * NM, geo[2] * NM, geo[3] * NM, n_rho, n_z, values, index)?;
        map.normalized = (map.values.iter().map(|v| v.norm()).fold(0.0, f64::max) - 1.0).abs() < 1e-9;
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> FieldMap {
        let (nr, nz) = (6, 4);
        let values = (0..nr * nz)
            .map(|k| Complex64::new((k as f64 * 0.3).sin(), (k as f64 * 0.1).cos()))
            .collect();
        let index = (0..nr * nz).map(|k| if k % nz < 2 { 2.0 } else { 1.0 }).collect();
        FieldMap::new(3.0e-6, 10e-9, 20e-9, 17.5e-9, nr, nz, values, index).unwrap()
    }

    #[test]
    fn normalization_sets_unit_real_peak() {
        let mut m = sample_map();
        assert!(!m.is_normalized());
        m.normalize().unwrap();
        let (i, j) = m.argmax();
        let peak = m.values[m.idx(i, j)];
        assert!((peak.re - 1.0).abs() < 1e-14 && peak.im.abs() < 1e-14);
        assert!(m.is_normalized());
    }

    #[test]
    fn binary_header_is_sixteen_bytes_little_endian() {
        let m = sample_map();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[0..2], b"WG");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 6);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 4);
        assert_eq!(f32::from_le_bytes(buf[8..12].try_into().unwrap()), 20.0);
        assert_eq!(buf.len(), 16 + 32 + 24 * 6 * 4);
        let back = FieldMap::read_binary(&buf[..]).unwrap();
        assert_eq!(back.values, m.values);
        assert_eq!(back.index, m.index);
    }

    #[test]
    fn csv_round_trip_preserves_lattice() {
        let mut m = sample_map();
        m.normalize().unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rho_nm,z_nm,re_E,im_E,n\n"));
        let back = FieldMap::read_csv(&buf[..]).unwrap();
        assert_eq!((back.n_rho, back.n_z), (6, 4));
        assert!((back.drho - m.drho).abs() < 1e-15);
        for (a, b) in back.values.iter().zip(&m.values) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn interpolation_hits_samples_and_rejects_outside() {
        let m = sample_map();
        let v = m.magnitude_at(m.rho(2), m.z(1)).unwrap();
        assert!((v - m.values[m.idx(2, 1)].norm()).abs() < 1e-12);
        assert!(m.magnitude_at(m.rho_max() + 1e-7, m.z(0)).is_err());
        assert!(m.magnitude_at(m.rho(0), m.z_max() + 1e-7).is_err());
        // mirrored z
        let a = m.magnitude_at(m.rho(1), m.z(2)).unwrap();
        let b = m.magnitude_at(m.rho(1), -m.z(2)).unwrap();
        assert_eq!(a, b);
    }
}
