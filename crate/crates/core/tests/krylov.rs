use gdsw_core::coarse::{build_coarse_basis, NodeMap};
use gdsw_core::krylov::*;
use gdsw_core::operator::{FnOperator, IdentityOperator};
use gdsw_core::partition::{extend_overlap, partition_system};
use gdsw_core::precond::{GdswPreconditioner, LevelFlags};
use gdsw_core::problems::*;
use gdsw_core::sparse::{factorize, norm2, BackendConfig, CsrMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

fn laplace_2d(cells: usize) -> AssembledSystem {
    assemble_laplace(&StructuredGrid::unit(2, cells).unwrap(), &BoundaryCondition::DirichletAll).unwrap()
}

fn gdsw(s: &AssembledSystem, parts: usize, layers: usize) -> GdswPreconditioner {
    let cfg = BackendConfig::default();
    let d = extend_overlap(&s.k, &partition_system(s, &[parts, parts]).unwrap(), layers).unwrap();
    let b = build_coarse_basis(&s.k, &d, NodeMap::Nodes(&s.node_of_dof), 2, &[vec![1.0; s.num_dofs()]], &cfg).unwrap();
    GdswPreconditioner::setup(&s.k, &d, Some(&b), &cfg, LevelFlags::TWO_LEVEL).unwrap()
}

#[test]
fn gmres_identity_one_iteration() {
    let b = vec![1.0, -2.0, 3.0];
    let r = gmres(&IdentityOperator(3), &IdentityOperator(3), &b, &KrylovConfig::gmres()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 1);
    assert!(rel_diff(&r.solution, &b) < 1e-15);
    let ritz = estimate_condition_gmres(&r).unwrap();
    assert!(ritz.values.iter().all(|&(re, im)| (re - 1.0).abs() < 1e-14 && im == 0.0));
}

#[test]
fn gmres_finite_termination_on_diagonal() {
    let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
    let b = vec![1.0, 1.0, 1.0];
    let r = gmres(&a, &IdentityOperator(3), &b, &KrylovConfig::gmres()).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 3);
    assert!(rel_diff(&r.solution, &[1.0, 0.5, 1.0 / 3.0]) < 1e-13);
    let ritz = estimate_condition_gmres(&r).unwrap();
    let re: Vec<f64> = ritz.values.iter().map(|v| v.0).collect();
    for (got, want) in re.iter().zip([1.0, 2.0, 3.0]) {
        assert!((got - want).abs() < 1e-10, "{re:?}");
    }
    assert!((ritz.ratio() - 3.0).abs() < 1e-10);
}

#[test]
fn gmres_with_gdsw_matches_direct_solve() {
    let s = laplace_2d(10);
    let m = gdsw(&s, 2, 1);
    let direct = factorize(&s.k, &BackendConfig::default()).unwrap().solve(&s.f).unwrap();
    for side in [Side::Left, Side::Right] {
        let cfg = KrylovConfig { side, ..KrylovConfig::gmres() };
        let r = gmres(&s.k, &m, &s.f, &cfg).unwrap();
        assert!(r.converged);
        assert!(rel_diff(&r.solution, &direct) < 1e-6, "{side:?}");
        let ratios = r.residual_ratios();
        assert!(*ratios.last().unwrap() <= 1e-8);
        assert!(r.final_stopping_ratio <= 10.0 * 1e-8);
        assert_eq!(r.residual_history.len(), r.iterations + 1);
    }
}

#[test]
fn gmres_history_is_monotone() {
    let s = laplace_2d(12);
    let m = gdsw(&s, 3, 1);
    let r = gmres(&s.k, &m, &s.f, &KrylovConfig::gmres()).unwrap();
    for w in r.residual_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    assert_eq!(first_converged_index(&r.residual_ratios(), 1e-8), Some(r.iterations));
}

#[test]
fn left_and_right_preconditioning_agree() {
    let s = laplace_2d(8);
    let m = gdsw(&s, 2, 1);
    let left = gmres(&s.k, &m, &s.f, &KrylovConfig::gmres()).unwrap();
    let right = gmres(&s.k, &m, &s.f, &KrylovConfig { side: Side::Right, ..KrylovConfig::gmres() }).unwrap();
    assert!(rel_diff(&left.solution, &right.solution) < 1e-6);
    assert!(right.true_residual_ratio <= 10.0 * 1e-8);
}

#[test]
fn restarted_gmres_still_converges() {
    let a = CsrMatrix::tridiagonal(40, -1.0, 2.5, -1.2);
    let b = vec![1.0; 40];
    let cfg = KrylovConfig { restart: 5, max_iter: 2000, ..KrylovConfig::gmres() };
    let r = gmres(&a, &IdentityOperator(40), &b, &cfg).unwrap();
    assert!(r.converged);
    assert!(r.true_residual_ratio <= 10.0 * 1e-8);
    assert_eq!(r.hessenberg.as_ref().unwrap().k, r.iterations - 5 * ((r.iterations - 1) / 5));
}

#[test]
fn max_iter_reports_non_convergence() {
    let a = CsrMatrix::tridiagonal(50, -1.0, 2.0, -1.0);
    let b = vec![1.0; 50];
    let cfg = KrylovConfig { max_iter: 3, ..KrylovConfig::gmres() };
    let r = gmres(&a, &IdentityOperator(50), &b, &cfg).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 3);
    assert!(r.true_residual_ratio < 1.0);
}

#[test]
fn zero_rhs_returns_zero() {
    let a = CsrMatrix::identity(4);
    for cfg in [KrylovConfig::gmres(), KrylovConfig::cg()] {
        let r = solve(&a, &IdentityOperator(4), &[0.0; 4], &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.solution, vec![0.0; 4]);
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let a = CsrMatrix::identity(4);
    assert!(matches!(
        gmres(&a, &IdentityOperator(4), &[1.0; 3], &KrylovConfig::gmres()),
        Err(KrylovError::DimensionMismatch { .. })
    ));
}

#[test]
fn cg_diagonal_spectrum() {
    let a = CsrMatrix::from_diagonal(&[1.0, 4.0]);
    let r = cg(&a, &IdentityOperator(2), &[1.0, 1.0], &KrylovConfig::cg()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 2);
    assert!((r.cond_estimate.unwrap() - 4.0).abs() < 1e-8);
    let (lo, hi) = r.ritz_extremes.unwrap();
    assert!((lo - 1.0).abs() < 1e-8 && (hi - 4.0).abs() < 1e-8);
}

#[test]
fn cg_with_exact_preconditioner() {
    let a = CsrMatrix::tridiagonal(20, -1.0, 2.0, -1.0);
    let f = factorize(&a, &BackendConfig::default()).unwrap();
    let b: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 1.0).collect();
    let r = cg(&a, &f, &b, &KrylovConfig::cg()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 1);
    assert!((r.cond_estimate.unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn cg_condition_estimate_of_path_laplacian() {
    let n = 50;
    let a = CsrMatrix::tridiagonal(n, -1.0, 2.0, -1.0);
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &a.to_dense())).eigenvalues;
    let oracle = eig.max() / eig.min();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r = cg(&a, &IdentityOperator(n), &b, &KrylovConfig::cg()).unwrap();
    assert!(r.converged);
    let est = r.cond_estimate.unwrap();
    assert!((est - oracle).abs() <= 0.05 * oracle, "estimate {est}, oracle {oracle}");
}

#[test]
fn cg_energy_error_decreases() {
    let s = laplace_2d(10);
    let m = gdsw(&s, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x_star: Vec<f64> = (0..s.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = s.k.spmv(&x_star).unwrap();
    let mut previous = f64::INFINITY;
    for it in 1..12 {
        let cfg = KrylovConfig { max_iter: it, rel_tol: 1e-14, ..KrylovConfig::cg() };
        let r = cg(&s.k, &m, &b, &cfg).unwrap();
        let e: Vec<f64> = r.solution.iter().zip(&x_star).map(|(x, y)| x - y).collect();
        let energy = gdsw_core::sparse::dot(&e, &s.k.spmv(&e).unwrap()).sqrt();
        assert!(energy < previous, "iteration {it}");
        previous = energy;
        if r.converged {
            break;
        }
    }
}

#[test]
fn cg_rejects_indefinite_operators() {
    let a = CsrMatrix::from_diagonal(&[1.0, -1.0]);
    let err = cg(&a, &IdentityOperator(2), &[0.0, 1.0], &KrylovConfig::cg()).unwrap_err();
    assert!(matches!(err, KrylovError::Indefinite { inner_product: "<p,Ap>", .. }));
    let neg = FnOperator::new(2, |x: &[f64], y: &mut [f64]| {
        y[0] = -x[0];
        y[1] = -x[1];
    });
    let err = cg(&CsrMatrix::identity(2), &neg, &[1.0, 0.0], &KrylovConfig::cg()).unwrap_err();
    assert!(matches!(err, KrylovError::Indefinite { inner_product: "<r,z>", iteration: 0, .. }));
}

#[test]
fn gmres_ritz_extremes_of_random_spd() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 12;
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let spd = &g * g.transpose() + DMatrix::identity(n, n) * 0.5;
    let dense: Vec<f64> = (0..n * n).map(|k| spd[(k / n, k % n)]).collect();
    let a = CsrMatrix::from_dense(n, n, &dense);
    let eig = SymmetricEigen::new(spd).eigenvalues;
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cfg = KrylovConfig { rel_tol: 1e-12, ..KrylovConfig::gmres() };
    let r = gmres(&a, &IdentityOperator(n), &b, &cfg).unwrap();
    let ritz = estimate_condition_gmres(&r).unwrap();
    assert!((ritz.min_modulus - eig.min()).abs() <= 0.1 * eig.min());
    assert!((ritz.max_modulus - eig.max()).abs() <= 0.1 * eig.max());
}

#[test]
fn history_csv_layout() {
    let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
    let r = gmres(&a, &IdentityOperator(2), &[1.0, 1.0], &KrylovConfig::gmres()).unwrap();
    let mut out = Vec::new();
    r.write_history_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,residual,ratio");
    assert_eq!(lines.len(), r.residual_history.len() + 1);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, vec![0.0, 2f64.sqrt(), 1.0]);
}

#[test]
fn gdsw_preconditioner_reduces_iterations() {
    let s = laplace_2d(16);
    let m = gdsw(&s, 4, 1);
    let plain = gmres(&s.k, &IdentityOperator(s.num_dofs()), &s.f, &KrylovConfig::gmres()).unwrap();
    let pre = gmres(&s.k, &m, &s.f, &KrylovConfig::gmres()).unwrap();
    assert!(pre.converged && plain.converged);
    assert!(pre.iterations < plain.iterations);
    assert!(pre.timing.preconditioner > 0.0);
    assert!(m.timing().applications as usize >= pre.iterations);
}
