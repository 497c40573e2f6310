//! Shift-invert Arnoldi for K x = λ B x with diagonal B.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::BandLu;
use super::operator::Operator;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    /// ‖K x − λ B x‖ / ‖λ B x‖.
    pub residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &mut [Complex64], s: Complex64) {
    a.iter_mut().for_each(|x| *x *= s);
}

pub fn relative_residual(op: &Operator, lambda: Complex64, x: &[Complex64]) -> f64 {
    let mut kx = vec![Complex64::new(0.0, 0.0); x.len()];
    op.apply(x, &mut kx);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((k, v), e) in kx.iter().zip(x).zip(&op.eps) {
        let bx = lambda * v * *e;
        num += (k - bx).norm_sqr();
        den += bx.norm_sqr();
    }
    (num / den).sqrt()
}

/// Eigenpairs of K x = λ B x nearest to `sigma`, from a Krylov space of
/// dimension `krylov_dim` built on (K − σB)⁻¹B. Results sorted by |λ − σ|.
pub fn shift_invert_arnoldi(
    op: &Operator,
    lu: &BandLu,
    sigma: Complex64,
    krylov_dim: usize,
    seed_vector: Option<&[Complex64]>,
) -> Result<Vec<EigenPair>> {
    let n = op.len();
    let kd = krylov_dim.min(n.saturating_sub(1)).max(2);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(kd + 1);
    let mut h = DMatrix::<Complex64>::zeros(kd + 1, kd);

    let mut v0: Vec<Complex64> = match seed_vector {
        Some(s) => s.to_vec(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        }
    };
    let nv = norm(&v0);
    if nv == 0.0 {
        return Err(Error::Numerical("zero Arnoldi start vector".into()));
    }
    scale(&mut v0, Complex64::new(1.0 / nv, 0.0));
    basis.push(v0);

    let mut used = kd;
    for j in 0..kd {
        let mut w: Vec<Complex64> = basis[j].iter().zip(&op.eps).map(|(x, e)| x * *e).collect();
        lu.solve_in_place(&mut w);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                h[(i, j)] += c;
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
        let beta = norm(&w);
        h[(j + 1, j)] = Complex64::new(beta, 0.0);
        if beta < 1e-300 {
            used = j + 1;
            break;
        }
        scale(&mut w, Complex64::new(1.0 / beta, 0.0));
        basis.push(w);
    }

    let hm = h.view((0, 0), (used, used)).into_owned();
    let theta = nalgebra::Schur::new(hm.clone())
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("Hessenberg eigenvalues failed".into()))?;

    let mut pairs = Vec::new();
    for &t in theta.iter() {
        if t.norm() < 1e-300 {
            continue;
        }
        let y = small_eigenvector(&hm, t)?;
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(a, b)| *a += yk * b);
        }
        let value = sigma + t.inv();
        let nx = norm(&x);
        scale(&mut x, Complex64::new(1.0 / nx, 0.0));
        let residual = relative_residual(op, value, &x);
        pairs.push(EigenPair {
            value,
            vector: x,
            residual,
        });
    }
    pairs.sort_by(|a, b| {
        (a.value - sigma)
            .norm()
            .partial_cmp(&(b.value - sigma).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(pairs)
}

/// Eigenvector of a small dense matrix for a known eigenvalue, by inverse
/// iteration with a slightly perturbed shift.
fn small_eigenvector(h: &DMatrix<Complex64>, theta: Complex64) -> Result<DVector<Complex64>> {
    let n = h.nrows();
    let scale_h = h.norm().max(1e-300);
    let shift = theta + Complex64::new(1e-10 * scale_h, 1e-10 * scale_h);
    let a = h - DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = a.lu();
    let mut y = DVector::<Complex64>::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        y = lu
            .solve(&y)
            .ok_or_else(|| Error::Numerical("singular Hessenberg shift".into()))?;
        let ny = y.norm();
        y /= Complex64::new(ny, 0.0);
    }
    Ok(y)
}

/// Polishes an approximate eigenpair by inverse iteration on a fresh shift.
pub fn polish(op: &Operator, lu: &BandLu, shift: Complex64, start: &[Complex64], steps: usize) -> EigenPair {
    let mut x = start.to_vec();
    let mut value = shift;
    for _ in 0..steps {
        let mut w: Vec<Complex64> = x.iter().zip(&op.eps).map(|(v, e)| v * *e).collect();
        lu.solve_in_place(&mut w);
        let nw = norm(&w);
        scale(&mut w, Complex64::new(1.0 / nw, 0.0));
        x = w;
        value = rayleigh(op, &x);
    }
    let residual = relative_residual(op, value, &x);
    EigenPair {
        value,
        vector: x,
        residual,
    }
}

/// λ ≈ (xᴴ K x)/(xᴴ B x).
pub fn rayleigh(op: &Operator, x: &[Complex64]) -> Complex64 {
    let mut kx = vec![Complex64::new(0.0, 0.0); x.len()];
    op.apply(x, &mut kx);
    let num = dot(x, &kx);
    let den: Complex64 = x.iter().zip(&op.eps).map(|(v, e)| v.conj() * v * *e).sum();
    num / den
}
