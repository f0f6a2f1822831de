use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_dims, KrylovConfig, KrylovError, KrylovResult, KrylovTiming};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, dot, norm2};
use crate::timing::TimeAccumulator;

/// Extreme eigenvalues of the Lanczos tridiagonal built from CG coefficients.
fn lanczos_extremes(alphas: &[f64], betas: &[f64]) -> Option<(f64, f64)> {
    let k = alphas.len();
    if k == 0 {
        return None;
    }
    let mut t = DMatrix::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alphas[j] + if j > 0 { betas[j - 1] / alphas[j - 1] } else { 0.0 };
        if j + 1 < k {
            let off = betas[j].sqrt() / alphas[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let eig = SymmetricEigen::new(t).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// Preconditioned conjugate gradients from `x_0 = 0`, stopping on `‖r_k‖/‖r_0‖`.
pub fn cg(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    cfg: &KrylovConfig,
) -> Result<KrylovResult, KrylovError> {
    cfg.validate()?;
    check_dims(a, m, b)?;
    let start = Instant::now();
    let (t_a, t_m) = (TimeAccumulator::new(), TimeAccumulator::new());
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = norm2(&r);
    let mut history = vec![r0];
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut converged = r0 == 0.0;
    let mut iterations = 0;

    if !converged {
        t_m.time(|| m.apply_into(&r, &mut z))?;
        let mut rz = dot(&r, &z);
        if !(rz > 0.0) {
            return Err(KrylovError::Indefinite { inner_product: "<r,z>", iteration: 0, value: rz });
        }
        let mut p = z.clone();
        while iterations < cfg.max_iter {
            t_a.time(|| a.apply_into(&p, &mut ap))?;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(KrylovError::Indefinite { inner_product: "<p,Ap>", iteration: iterations, value: pap });
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            alphas.push(alpha);
            iterations += 1;
            let rn = norm2(&r);
            history.push(rn);
            if rn <= cfg.rel_tol * r0 {
                converged = true;
                break;
            }
            t_m.time(|| m.apply_into(&r, &mut z))?;
            let rz_new = dot(&r, &z);
            if !(rz_new > 0.0) {
                return Err(KrylovError::Indefinite { inner_product: "<r,z>", iteration: iterations, value: rz_new });
            }
            let beta = rz_new / rz;
            betas.push(beta);
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
    }

    let mut ax = vec![0.0; n];
    t_a.time(|| a.apply_into(&x, &mut ax))?;
    let true_r: f64 = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    let true_residual_ratio = if r0 > 0.0 { true_r / r0 } else { 0.0 };
    let ritz_extremes = lanczos_extremes(&alphas, &betas);
    Ok(KrylovResult {
        solution: x,
        iterations,
        residual_history: history,
        converged,
        true_residual_ratio,
        final_stopping_ratio: true_residual_ratio,
        cond_estimate: ritz_extremes.map(|(lo, hi)| hi / lo),
        ritz_extremes,
        hessenberg: None,
        timing: KrylovTiming {
            total: start.elapsed().as_secs_f64(),
            operator: t_a.seconds(),
            preconditioner: t_m.seconds(),
        },
    })
}
