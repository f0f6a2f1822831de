//! Q1 (multilinear) element matrices on axis-aligned cubes of edge `h`,
//! integrated with the 2-point Gauss rule per axis.

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Tensor Gauss points on `[-1, 1]^dim` (padded to 3 coordinates); all weights are 1.
pub(crate) fn gauss_points(dim: usize) -> Vec<[f64; 3]> {
    (0..1usize << dim)
        .map(|q| {
            let mut p = [0.0; 3];
            for (d, v) in p.iter_mut().enumerate().take(dim) {
                *v = GAUSS[(q >> d) & 1];
            }
            p
        })
        .collect()
}

/// Value of local shape function `a` at reference point `xi`.
#[cfg(test)]
pub(crate) fn shape_value(dim: usize, a: usize, xi: &[f64; 3]) -> f64 {
    (0..dim)
        .map(|d| {
            let s = if (a >> d) & 1 == 1 { 1.0 } else { -1.0 };
            0.5 * (1.0 + s * xi[d])
        })
        .product()
}

/// Reference gradient of local shape function `a` at `xi`.
pub(crate) fn shape_grad_ref(dim: usize, a: usize, xi: &[f64; 3]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for (d, gd) in g.iter_mut().enumerate().take(dim) {
        let mut v = 1.0;
        for e in 0..dim {
            let s = if (a >> e) & 1 == 1 { 1.0 } else { -1.0 };
            v *= if e == d { 0.5 * s } else { 0.5 * (1.0 + s * xi[e]) };
        }
        *gd = v;
    }
    g
}

/// Physical gradients of all local shape functions at `xi` on a cube of edge `h`.
fn physical_grads(dim: usize, h: f64, xi: &[f64; 3]) -> Vec<[f64; 3]> {
    let scale = 2.0 / h;
    (0..1usize << dim)
        .map(|a| {
            let mut g = shape_grad_ref(dim, a, xi);
            g.iter_mut().for_each(|v| *v *= scale);
            g
        })
        .collect()
}

/// `|det J|` of the reference-to-physical map.
pub(crate) fn jacobian_det(dim: usize, h: f64) -> f64 {
    (0.5 * h).powi(dim as i32)
}

/// Element stiffness `∫ ∇φ_a · ∇φ_b`, row-major `2^dim × 2^dim`, exactly symmetric.
pub fn laplace_element(dim: usize, h: f64) -> Vec<f64> {
    let nloc = 1usize << dim;
    let mut ke = vec![0.0; nloc * nloc];
    let det = jacobian_det(dim, h);
    for xi in gauss_points(dim) {
        let g = physical_grads(dim, h, &xi);
        for a in 0..nloc {
            for b in a..nloc {
                let s: f64 = (0..dim).map(|d| g[a][d] * g[b][d]).sum();
                ke[a * nloc + b] += s * det;
            }
        }
    }
    mirror_upper(&mut ke, nloc);
    ke
}

/// Lamé parameters `(λ, μ)` from Young's modulus and Poisson's ratio.
pub fn lame(young: f64, poisson: f64) -> (f64, f64) {
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    (lambda, mu)
}

/// 3D isotropic elasticity element stiffness `∫ Bᵀ D B`, `24 × 24`, dof `3a + c`.
pub fn elasticity_element(h: f64, lambda: f64, mu: f64) -> Vec<f64> {
    const NLOC: usize = 8;
    const NDOF: usize = 24;
    let mut ke = vec![0.0; NDOF * NDOF];
    let det = jacobian_det(3, h);
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lambda;
        }
        d[i][i] = lambda + 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    for xi in gauss_points(3) {
        let g = physical_grads(3, h, &xi);
        // Voigt strain rows: xx, yy, zz, xy, yz, xz
        let mut b = [[0.0; NDOF]; 6];
        for a in 0..NLOC {
            let [gx, gy, gz] = g[a];
            let c = 3 * a;
            b[0][c] = gx;
            b[1][c + 1] = gy;
            b[2][c + 2] = gz;
            b[3][c] = gy;
            b[3][c + 1] = gx;
            b[4][c + 1] = gz;
            b[4][c + 2] = gy;
            b[5][c] = gz;
            b[5][c + 2] = gx;
        }
        let mut db = [[0.0; NDOF]; 6];
        for i in 0..6 {
            for k in 0..NDOF {
                db[i][k] = (0..6).map(|j| d[i][j] * b[j][k]).sum();
            }
        }
        for p in 0..NDOF {
            for q in p..NDOF {
                let s: f64 = (0..6).map(|i| b[i][p] * db[i][q]).sum();
                ke[p * NDOF + q] += s * det;
            }
        }
    }
    mirror_upper(&mut ke, NDOF);
    ke
}

fn mirror_upper(m: &mut [f64], n: usize) {
    for a in 0..n {
        for b in 0..a {
            m[a * n + b] = m[b * n + a];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_element() {
        let h = 0.25;
        let ke = laplace_element(1, h);
        assert!((ke[0] - 4.0).abs() < 1e-14 && (ke[1] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn two_d_element_known_entries() {
        // unit square Q1 stiffness: 2/3 on the diagonal, -1/6 along edges, -1/3 across
        let ke = laplace_element(2, 0.7);
        let expect = [2.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 3.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((ke[k] - e).abs() < 1e-14, "{k}");
        }
    }

    #[test]
    fn partition_of_unity() {
        for dim in 1..=3 {
            for xi in gauss_points(dim) {
                let s: f64 = (0..1 << dim).map(|a| shape_value(dim, a, &xi)).sum();
                assert!((s - 1.0).abs() < 1e-15);
                for d in 0..dim {
                    let gs: f64 = (0..1 << dim).map(|a| shape_grad_ref(dim, a, &xi)[d]).sum();
                    assert!(gs.abs() < 1e-15);
                }
            }
        }
    }
}
