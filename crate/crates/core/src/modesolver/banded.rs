//! Complex banded LU factorization with partial pivoting.
//!
//! Column-major band storage in the LAPACK `gbtrf` layout: element (i, j)
//! lives at `j * ldab + (kl + ku + i - j)`, leaving `kl` extra rows above the
//! band for pivoting fill-in.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![Complex64::new(0.0, 0.0); ldab * n],
        }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    /// Adds `value` to entry (i, j). Panics when (i, j) is outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: Complex64) {
        assert!(
            i <= j + self.kl && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let o = self.offset(i, j);
        self.data[o] += value;
    }

    /// Factorizes in place.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let a = &mut self.data;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = a[col + kv].norm_sqr();
            for i in 1..=km {
                let v = a[col + kv + i].norm_sqr();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::Numerical(format!("singular band matrix at column {j}")));
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv;
                    a.swap(base + j - c + jp, base + j - c);
                }
            }
            let inv = a[col + kv].inv();
            for i in 1..=km {
                a[col + kv + i] *= inv;
            }
            for c in (j + 1)..=ju {
                let cbase = c * ldab + kv;
                let u = a[cbase + j - c];
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 1..=km {
                    let l = a[col + kv + i];
                    a[cbase + j + i - c] -= l * u;
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            kv,
            ldab,
            data: self.data,
            ipiv,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    data: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let kv = self.kv;
        let ldab = self.ldab;
        let a = &self.data;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            let col = j * ldab + kv;
            for i in 1..=km {
                b[j + i] -= a[col + i] * bj;
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= a[col];
            let bj = b[j];
            let top = j.saturating_sub(kv);
            for i in top..j {
                b[i] -= a[col + i - j] * bj;
            }
        }
    }
}
