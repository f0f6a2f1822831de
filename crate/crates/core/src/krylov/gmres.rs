use std::time::Instant;

use nalgebra::DMatrix;

use super::{check_dims, Hessenberg, KrylovConfig, KrylovError, KrylovResult, KrylovTiming, Side};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, dot, norm2};
use crate::timing::TimeAccumulator;

const REORTH_TOL: f64 = 1e-8;

struct Ops<'a> {
    a: &'a dyn LinearOperator,
    m: &'a dyn LinearOperator,
    side: Side,
    t_a: TimeAccumulator,
    t_m: TimeAccumulator,
}

impl Ops<'_> {
    fn a(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        Ok(self.t_a.time(|| self.a.apply_into(x, y))?)
    }

    fn m(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        Ok(self.t_m.time(|| self.m.apply_into(x, y))?)
    }

    /// Operator whose Krylov space is built: `MA` (left) or `AM` (right).
    fn arnoldi(&self, v: &[f64], w: &mut [f64], tmp: &mut [f64]) -> Result<(), KrylovError> {
        match self.side {
            Side::Left => {
                self.a(v, tmp)?;
                self.m(tmp, w)
            }
            Side::Right => {
                self.m(v, tmp)?;
                self.a(tmp, w)
            }
        }
    }

    /// True residual `b − Ax` and the residual in the stopping norm.
    fn residuals(&self, b: &[f64], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), KrylovError> {
        let mut ax = vec![0.0; b.len()];
        self.a(x, &mut ax)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let s = match self.side {
            Side::Left => {
                let mut s = vec![0.0; b.len()];
                self.m(&r, &mut s)?;
                s
            }
            Side::Right => r.clone(),
        };
        Ok((r, s))
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

/// Restarted GMRES with modified Gram–Schmidt Arnoldi, starting from `x_0 = 0`.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    cfg: &KrylovConfig,
) -> Result<KrylovResult, KrylovError> {
    cfg.validate()?;
    check_dims(a, m, b)?;
    let start = Instant::now();
    let n = b.len();
    let ops = Ops { a, m, side: cfg.side, t_a: TimeAccumulator::new(), t_m: TimeAccumulator::new() };
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);

    let (_, s0) = ops.residuals(b, &x)?;
    let beta0 = norm2(&s0);
    let mut history = vec![beta0];
    let mut iterations = 0;
    let mut hessenberg = None;
    let mut converged = b_norm == 0.0 || beta0 == 0.0;
    let mut tmp = vec![0.0; n];
    let mut s = s0;

    while !converged && iterations < cfg.max_iter {
        let beta = norm2(&s);
        let steps = cfg.restart.min(cfg.max_iter - iterations);
        let ld = steps + 1;
        let mut v: Vec<Vec<f64>> = vec![s.iter().map(|si| si / beta).collect()];
        let mut h = vec![0.0; ld * steps];
        let mut raw = vec![0.0; ld * steps];
        let (mut cs, mut sn) = (vec![0.0; steps], vec![0.0; steps]);
        let mut g = vec![0.0; ld];
        g[0] = beta;
        let mut k = 0;
        let mut breakdown = false;
        for j in 0..steps {
            let mut w = vec![0.0; n];
            ops.arnoldi(&v[j], &mut w, &mut tmp)?;
            let w_norm0 = norm2(&w);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[j * ld + i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let w_norm = norm2(&w);
            if w_norm > 0.0 {
                let loss = v.iter().map(|vi| dot(&w, vi).abs()).fold(0.0, f64::max) / w_norm;
                if loss > REORTH_TOL {
                    for (i, vi) in v.iter().enumerate() {
                        let c = dot(&w, vi);
                        h[j * ld + i] += c;
                        axpy(-c, vi, &mut w);
                    }
                }
            }
            let h_next = norm2(&w);
            h[j * ld + j + 1] = h_next;
            raw[j * ld..j * ld + j + 2].copy_from_slice(&h[j * ld..j * ld + j + 2]);

            for i in 0..j {
                let (hi, hk) = (h[j * ld + i], h[j * ld + i + 1]);
                h[j * ld + i] = cs[i] * hi + sn[i] * hk;
                h[j * ld + i + 1] = -sn[i] * hi + cs[i] * hk;
            }
            let (c, sgn) = givens(h[j * ld + j], h[j * ld + j + 1]);
            cs[j] = c;
            sn[j] = sgn;
            h[j * ld + j] = c * h[j * ld + j] + sgn * h[j * ld + j + 1];
            h[j * ld + j + 1] = 0.0;
            g[j + 1] = -sgn * g[j];
            g[j] *= c;

            iterations += 1;
            k = j + 1;
            let resid = g[j + 1].abs();
            history.push(resid);
            breakdown = h_next <= 1e-14 * w_norm0 || h_next == 0.0;
            converged = resid <= cfg.rel_tol * beta0;
            if converged || breakdown {
                break;
            }
            v.push(w.iter().map(|wi| wi / h_next).collect());
        }

        // back substitution on the rotated triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for l in i + 1..k {
                acc -= h[l * ld + i] * y[l];
            }
            y[i] = acc / h[i * ld + i];
        }
        let mut update = vec![0.0; n];
        for (vi, yi) in v.iter().zip(&y) {
            axpy(*yi, vi, &mut update);
        }
        match cfg.side {
            Side::Left => axpy(1.0, &update, &mut x),
            Side::Right => {
                ops.m(&update, &mut tmp)?;
                axpy(1.0, &tmp, &mut x);
            }
        }
        let mut entries = vec![0.0; (k + 1) * k];
        for j in 0..k {
            entries[j * (k + 1)..j * (k + 1) + j + 2].copy_from_slice(&raw[j * ld..j * ld + j + 2]);
        }
        hessenberg = Some(Hessenberg { k, entries });
        if breakdown {
            break;
        }
        if !converged {
            s = ops.residuals(b, &x)?.1;
        }
    }

    let (r, s_final) = ops.residuals(b, &x)?;
    let true_residual_ratio = if b_norm > 0.0 { norm2(&r) / b_norm } else { 0.0 };
    let final_stopping_ratio = if beta0 > 0.0 { norm2(&s_final) / beta0 } else { 0.0 };
    Ok(KrylovResult {
        solution: x,
        iterations,
        residual_history: history,
        converged,
        true_residual_ratio,
        final_stopping_ratio,
        cond_estimate: None,
        ritz_extremes: None,
        hessenberg,
        timing: KrylovTiming {
            total: start.elapsed().as_secs_f64(),
            operator: ops.t_a.seconds(),
            preconditioner: ops.t_m.seconds(),
        },
    })
}

/// Ritz values of the last Arnoldi cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct RitzEstimate {
    /// `(re, im)` pairs sorted by modulus.
    pub values: Vec<(f64, f64)>,
    pub min_modulus: f64,
    pub max_modulus: f64,
}

impl RitzEstimate {
    pub fn ratio(&self) -> f64 {
        self.max_modulus / self.min_modulus
    }
}

/// Eigenvalues of the leading square block of the retained Hessenberg matrix.
pub fn estimate_condition_gmres(result: &KrylovResult) -> Option<RitzEstimate> {
    let hs = result.hessenberg.as_ref().filter(|h| h.k > 0)?;
    let k = hs.k;
    let hm = DMatrix::from_fn(k, k, |i, j| hs.get(i, j));
    let eig = hm.complex_eigenvalues();
    let mut values: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    values.sort_by(|p, q| p.0.hypot(p.1).total_cmp(&q.0.hypot(q.1)));
    let modulus = |p: &(f64, f64)| p.0.hypot(p.1);
    Some(RitzEstimate { min_modulus: modulus(values.first()?), max_modulus: modulus(values.last()?), values })
}
