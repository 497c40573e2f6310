//! Levenberg–Marquardt least squares with a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop once ‖δp‖ ≤ tol·‖p‖.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Σ r².
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after the start and after every accepted step.
    pub cost_history: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub n_residuals: usize,
}

impl LmOutcome {
    /// 1σ parameter uncertainties from s²(JᵀJ)⁺ with s² = cost/(N − P).
    /// Directions the data do not constrain get an infinite uncertainty.
    pub fn standard_errors(&self) -> Vec<f64> {
        let p = self.params.len();
        let dof = self.n_residuals.saturating_sub(p).max(1) as f64;
        let s2 = self.cost / dof;
        let a = self.jacobian.transpose() * &self.jacobian;
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v)) => (u, v),
            _ => return vec![f64::INFINITY; p],
        };
        (0..p)
            .map(|k| {
                let mut var = 0.0;
                for (i, &s) in svd.singular_values.iter().enumerate() {
                    let w = v_t[(i, k)] * u[(k, i)];
                    if s <= 1e-14 * smax {
                        if w.abs() > 1e-12 {
                            return f64::INFINITY;
                        }
                        continue;
                    }
                    var += w / s;
                }
                (s2 * var.max(0.0)).sqrt()
            })
            .collect()
    }
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F: Fn(&[f64], &mut [f64])>(f: &F, p: &[f64], n: usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(n, p.len());
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(1e-2);
        q[k] = p[k] + h;
        f(&q, &mut plus);
        q[k] = p[k] - h;
        f(&q, &mut minus);
        q[k] = p[k];
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

/// Minimizes Σ r(p)² from `p0`. Damping is multiplied by 0.3 after an
/// accepted step and by 2 after a rejected one.
pub fn minimize<F>(residual: F, n_residuals: usize, p0: &[f64], settings: &LmSettings) -> LmOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut p = p0.to_vec();
    let mut r = vec![0.0; n_residuals];
    residual(&p, &mut r);
    let mut cost = cost_of(&r);
    let mut jac = jacobian(&residual, &p, n_residuals);
    let mut mu = settings.initial_damping;
    let mut history = vec![cost];
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; n_residuals];

    while iterations < settings.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let dmax = a.diagonal().max().max(f64::MIN_POSITIVE);
        let mut m = a.clone();
        for k in 0..p.len() {
            m[(k, k)] += mu * a[(k, k)].max(1e-12 * dmax);
        }
        let step = match m.cholesky() {
            Some(ch) => ch.solve(&(-g)),
            None => {
                mu *= 2.0;
                continue;
            }
        };
        let cand: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        residual(&cand, &mut trial);
        let new_cost = cost_of(&trial);
        let small = step.norm() <= settings.step_tolerance * (DVector::from_column_slice(&p).norm() + settings.step_tolerance);
        if new_cost.is_finite() && new_cost < cost {
            p = cand;
            std::mem::swap(&mut r, &mut trial);
            cost = new_cost;
            jac = jacobian(&residual, &p, n_residuals);
            mu *= 0.3;
            history.push(cost);
        } else {
            mu *= 2.0;
        }
        if small {
            converged = true;
            break;
        }
    }
    LmOutcome {
        params: p,
        cost,
        iterations,
        converged,
        cost_history: history,
        jacobian: jac,
        n_residuals,
    }
}
