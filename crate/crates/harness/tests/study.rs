use gdsw_core::coarse::{build_coarse_basis, NodeMap};
use gdsw_core::krylov::Method;
use gdsw_core::operator::assemble_dense;
use gdsw_core::partition::{extend_overlap, partition_system};
use gdsw_core::precond::{GdswPreconditioner, LevelFlags};
use gdsw_core::problems::{NullspaceMode, ProblemKind};
use gdsw_core::sparse::{Backend, BackendConfig};
use gdsw_harness::config::{BoundaryKind, RhsKind};
use gdsw_harness::study::assemble;
use gdsw_harness::{
    emit_report, read_csv, read_json, run_study, verify_bound, AxisCounts, BoundSweep, HarnessError, OutputConfig,
    ReportFormat, RunConfig, RunRecord,
};
use nalgebra::{DMatrix, SymmetricEigen};

fn laplace_2d(cells: usize, parts: &[[usize; 2]]) -> RunConfig {
    let parts: Vec<String> = parts.iter().map(|p| format!("[{}, {}]", p[0], p[1])).collect();
    RunConfig::from_toml_str(&format!(
        r#"
        [problem]
        kind = "laplace"
        cells = [{cells}, {cells}]
        [decomposition]
        parts = [{}]
        "#,
        parts.join(", ")
    ))
    .unwrap()
}

fn assert_timers(r: &RunRecord) {
    for t in [r.solver_time, r.setup_time, r.subd_solve_time, r.coarse_solve_time] {
        assert!(t.is_finite() && t >= 0.0, "{r:?}");
    }
    assert!(r.solver_time >= r.setup_time, "{r:?}");
}

#[test]
fn toml_defaults_and_round_trip() {
    let cfg = laplace_2d(16, &[[2, 2]]);
    assert_eq!(cfg.decomposition.overlap, 2);
    assert_eq!(cfg.solver.tol, 1e-8);
    assert_eq!(cfg.solver.method, Method::Gmres);
    assert_eq!(cfg.backends, vec![Backend::SparseLuOrdered]);
    assert!(cfg.coarse.enabled);
    assert_eq!(cfg.coarse.nullspace, NullspaceMode::OneDimensional);
    let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = r#"
        [problem]
        kind = "laplace"
        cells = [8, 8]
        [decomposition]
    "#;
    let cases = [
        "parts = []",
        "parts = [[2, 2]]\n[solver]\ntol = 0.0",
        "parts = [[2, 2]]\n[solver]\ntol = -1e-8",
        "parts = [[2, 2, 2]]",
        "parts = [[0, 2]]",
        "parts = [[2, 2]]\ncolour = 1",
    ];
    for extra in cases {
        let err = RunConfig::from_toml_str(&format!("{base}{extra}")).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)), "{extra}: {err}");
    }
}

#[test]
fn axis_counts_parse() {
    assert_eq!("4x4".parse::<AxisCounts>().unwrap().0, vec![4, 4]);
    assert_eq!("2x3x1".parse::<AxisCounts>().unwrap().to_string(), "2x3x1");
    assert!("4by4".parse::<AxisCounts>().is_err());
}

#[test]
fn single_subdomain_without_coarse_is_exact() {
    for method in ["gmres", "cg"] {
        let mut cfg = laplace_2d(8, &[[1, 1]]);
        cfg.coarse.enabled = false;
        cfg.solver.method = method.parse().unwrap();
        let recs = run_study(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.error, None);
        assert_eq!(r.krylov_iterations, 1.0);
        assert_eq!(r.size_k0, 0);
        assert_eq!(r.max_size_ki, 49);
        assert!(r.converged);
        assert_timers(r);
    }
}

#[test]
fn laplace_sweep_sizes_match_hand_count() {
    // 16 cells give 15 free nodes per axis. With 2x2 boxes the lower box owns
    // nodes 1..=8 and two overlap layers reach node 10: 10·10 = 100. With 4x4
    // an inner box owns 4 nodes and grows to 8: 64. The coarse spaces are one
    // vertex plus four edges (5), and 9 vertices plus 24 edges (33).
    let recs = run_study(&laplace_2d(16, &[[2, 2], [4, 4]])).unwrap();
    let sizes: Vec<(usize, usize, usize)> = recs.iter().map(|r| (r.n_subdomains, r.max_size_ki, r.size_k0)).collect();
    assert_eq!(sizes, vec![(4, 100, 5), (16, 64, 33)]);
    for r in &recs {
        assert!(r.converged && r.error.is_none());
        assert!(r.krylov_iterations > 0.0);
        assert_eq!(r.n_dofs, 225);
        assert!(r.cond_estimate.unwrap() >= 1.0);
        assert_timers(r);
    }
}

#[test]
fn coarse_size_equals_basis_columns() {
    let cfg = laplace_2d(12, &[[3, 3]]);
    let rec = &run_study(&cfg).unwrap()[0];
    let system = assemble(&cfg.problem, &[12, 12]).unwrap();
    let d = extend_overlap(&system.k, &partition_system(&system, &[3, 3]).unwrap(), 2).unwrap();
    let basis = build_coarse_basis(
        &system.k,
        &d,
        NodeMap::Scalar,
        2,
        &[vec![1.0; system.num_dofs()]],
        &BackendConfig::default(),
    )
    .unwrap();
    assert_eq!(rec.size_k0, basis.n_coarse());
    assert_eq!(rec.size_k0, basis.phi.ncols());
}

#[test]
fn failing_stage_is_recorded_and_sweep_continues() {
    let recs = run_study(&laplace_2d(12, &[[5, 5], [2, 2]])).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(!recs[0].converged);
    assert!(recs[0].error.as_deref().unwrap().contains("divide"), "{:?}", recs[0].error);
    assert_eq!(recs[0].n_subdomains, 25);
    assert!(recs[1].converged && recs[1].error.is_none());
}

#[test]
fn repeated_solves_average_iterations() {
    let mut cfg = laplace_2d(16, &[[4, 4]]);
    let once = run_study(&cfg).unwrap()[0].clone();
    cfg.solver.repeats = 3;
    let thrice = run_study(&cfg).unwrap()[0].clone();
    assert_eq!(once.krylov_iterations, thrice.krylov_iterations);
    assert_timers(&thrice);
}

#[test]
fn identical_config_gives_identical_records() {
    let mut cfg = laplace_2d(16, &[[2, 2], [4, 4]]);
    cfg.problem.rhs = RhsKind::Random;
    cfg.backends = vec![Backend::DenseLu, Backend::SparseLuOrdered];
    cfg.threads = Some(1);
    let strip = |v: Vec<RunRecord>| v.iter().map(RunRecord::without_times).collect::<Vec<_>>();
    let a = strip(run_study(&cfg).unwrap());
    let b = strip(run_study(&cfg).unwrap());
    assert_eq!(a, b);
    cfg.threads = Some(4);
    let c = strip(run_study(&cfg).unwrap());
    assert_eq!(a, c);
}

#[test]
fn elasticity_translations_record() {
    let cfg = RunConfig::from_toml_str(
        r#"
        [problem]
        kind = "elasticity"
        cells = [4, 4, 4]
        bc = "clamped-x-lower"
        [decomposition]
        parts = [[2, 2, 2]]
        overlap = 1
        [coarse]
        nullspace = "translations"
        "#,
    )
    .unwrap();
    assert_eq!(cfg.problem.kind, ProblemKind::Elasticity);
    assert_eq!(cfg.problem.bc, BoundaryKind::ClampedXLower);
    let r = &run_study(&cfg).unwrap()[0];
    assert!(r.converged, "{r:?}");
    assert_eq!(r.n_dofs, 3 * 5 * 5 * 4);
    assert_eq!(r.size_k0 % 3, 0);
}

fn record(n: usize, backend: Backend) -> RunRecord {
    RunRecord {
        n_subdomains: n,
        krylov_iterations: 12.5,
        max_size_ki: 100 / n,
        size_k0: n + 1,
        solver_time: 0.1 + 1.0 / 3.0,
        subd_solve_time: 0.05,
        coarse_solve_time: 1e-7,
        setup_time: 0.1,
        backend,
        cond_estimate: if n > 1 { Some(7.123456789012345) } else { None },
        converged: n > 1,
        parts: format!("{n}"),
        n_dofs: 100,
        error: if n > 1 { None } else { Some("singular, \"quoted\"".into()) },
    }
}

fn out(dir: &std::path::Path, format: ReportFormat, plot_data: bool) -> OutputConfig {
    OutputConfig { dir: dir.to_path_buf(), stem: "r".into(), format, plot_data }
}

#[test]
fn single_record_csv() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&[record(4, Backend::DenseLu)], &out(dir.path(), ReportFormat::Csv, false)).unwrap();
    assert_eq!(files, vec![dir.path().join("r.csv")]);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "n_subdomains,krylov_iterations,max_size_ki,size_k0,solver_time,subd_solve_time,coarse_solve_time,\
         setup_time,backend,cond_estimate,converged,parts,n_dofs,error"
    );
    assert!(lines[1].starts_with("4,12.5,25,5,"));
    assert!(lines[1].contains(",dense-lu,"));
}

#[test]
fn rows_are_sorted_by_sweep_then_backend() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![
        record(16, Backend::SparseLuOrdered),
        record(16, Backend::DenseLu),
        record(4, Backend::SparseLuOrdered),
        record(4, Backend::DenseLu),
    ];
    emit_report(&recs, &out(dir.path(), ReportFormat::Both, false)).unwrap();
    let back = read_csv(dir.path().join("r.csv")).unwrap();
    let order: Vec<(usize, Backend)> = back.iter().map(|r| (r.n_subdomains, r.backend)).collect();
    assert_eq!(
        order,
        vec![
            (4, Backend::DenseLu),
            (4, Backend::SparseLuOrdered),
            (16, Backend::DenseLu),
            (16, Backend::SparseLuOrdered)
        ]
    );
    assert_eq!(read_json(dir.path().join("r.json")).unwrap(), back);
}

#[test]
fn json_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![record(1, Backend::SparseLuNatural), record(9, Backend::SparseLuNatural)];
    emit_report(&recs, &out(dir.path(), ReportFormat::Json, false)).unwrap();
    let back = read_json(dir.path().join("r.json")).unwrap();
    assert_eq!(back, recs);
    assert_eq!(back[0].solver_time.to_bits(), recs[0].solver_time.to_bits());
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn plot_series_per_backend() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![record(4, Backend::DenseLu), record(16, Backend::DenseLu), record(1, Backend::DenseLu)];
    emit_report(&recs, &out(dir.path(), ReportFormat::Csv, true)).unwrap();
    let its = std::fs::read_to_string(dir.path().join("r_dense-lu_iterations.dat")).unwrap();
    // the failed single-subdomain row is left out
    assert_eq!(its, "# n_subdomains value\n4 12.5\n16 12.5\n");
    let time = std::fs::read_to_string(dir.path().join("r_dense-lu_solver_time.dat")).unwrap();
    assert_eq!(time.lines().count(), 3);
    assert!(!dir.path().join("r_sparse-lu-ordered_iterations.dat").exists());
}

#[test]
fn report_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_report(&[], &out(dir.path(), ReportFormat::Csv, false)), Err(HarnessError::EmptyReport)));
    let file = dir.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let err = emit_report(&[record(4, Backend::DenseLu)], &out(&file, ReportFormat::Csv, false)).unwrap_err();
    assert!(matches!(err, HarnessError::Io(_)), "{err}");
}

fn bound_config(extra: &str) -> RunConfig {
    RunConfig::from_toml_str(&format!(
        r#"
        [problem]
        kind = "laplace"
        [decomposition]
        parts = [[2, 2], [4, 4], [8, 8]]
        cells_per_part = 8
        [solver]
        method = "cg"
        {extra}
        "#
    ))
    .unwrap()
}

#[test]
fn bound_check_rejects_non_spd_setups() {
    let mut cfg = bound_config("");
    cfg.solver.method = Method::Gmres;
    assert!(matches!(verify_bound(&cfg), Err(HarnessError::Config(_))));
    let mut cfg = bound_config("");
    cfg.problem.bc = BoundaryKind::NeumannAll;
    assert!(matches!(verify_bound(&cfg), Err(HarnessError::Config(_))));
    let mut cfg = bound_config("");
    cfg.coarse.nullspace = NullspaceMode::TranslationsRotations;
    assert!(matches!(verify_bound(&cfg), Err(HarnessError::Config(_))));
    let elasticity = RunConfig::from_toml_str(
        "[problem]\nkind = \"elasticity\"\ncells = [4, 4, 4]\n[decomposition]\nparts = [[2, 2, 2]]\n[solver]\nmethod = \"cg\"",
    )
    .unwrap();
    assert!(matches!(verify_bound(&elasticity), Err(HarnessError::Config(_))));
}

#[test]
fn bound_control_is_perfectly_conditioned() {
    let mut cfg = bound_config("");
    cfg.decomposition.parts = vec![vec![1, 1]];
    cfg.coarse.enabled = false;
    let report = verify_bound(&cfg).unwrap();
    for p in &report.points {
        assert!((p.cond_estimate.unwrap() - 1.0).abs() < 1e-6, "{p:?}");
    }
}

#[test]
fn bound_estimate_matches_dense_spectrum_in_1d() {
    let cfg = RunConfig::from_toml_str(
        r#"
        [problem]
        kind = "laplace"
        cells = [40]
        [decomposition]
        parts = [[2]]
        overlap = 1
        [solver]
        method = "cg"
        "#,
    )
    .unwrap();
    let report = verify_bound(&cfg).unwrap();
    let est = report.points[0].cond_estimate.unwrap();

    let system = assemble(&cfg.problem, &[40]).unwrap();
    let d = extend_overlap(&system.k, &partition_system(&system, &[2]).unwrap(), 1).unwrap();
    let bcfg = BackendConfig::default();
    let basis = build_coarse_basis(&system.k, &d, NodeMap::Scalar, 1, &[vec![1.0; 39]], &bcfg).unwrap();
    let m = GdswPreconditioner::setup(&system.k, &d, Some(&basis), &bcfg, LevelFlags::TWO_LEVEL).unwrap();
    let n = system.num_dofs();
    let l = DMatrix::from_row_slice(n, n, &system.k.to_dense()).cholesky().unwrap().l();
    let md = DMatrix::from_row_slice(n, n, &assemble_dense(&m).unwrap());
    let a = l.transpose() * md * &l;
    let eig = SymmetricEigen::new((&a + a.transpose()) * 0.5).eigenvalues;
    let exact = eig.max() / eig.min();
    assert!((est - exact).abs() / exact < 0.05, "{est} vs {exact}");
}

/// Normalized-ratio growth of the first run over 2x2, 4x4, 8x8 at H/h = 8.
const GOLDEN_GROWTH: f64 = 1.846;

#[test]
fn bound_sweeps_stay_bounded() {
    let report = verify_bound(&bound_config("")).unwrap();
    let a: Vec<_> = report.sweep(BoundSweep::Subdomains).collect();
    let b: Vec<_> = report.sweep(BoundSweep::Overlap).collect();
    assert_eq!(a.len(), 3);
    assert_eq!(b.iter().map(|p| p.overlap).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(a.iter().all(|p| p.h_ratio == 8.0 && p.delta_ratio == 4.0));
    assert!(b.iter().all(|p| p.parts == vec![2, 2]));
    let growth = report.growth.unwrap();
    assert!(growth <= 2.0 && !report.violation, "{report:?}");
    assert!((growth - GOLDEN_GROWTH).abs() < 0.05, "{growth}");
    // more overlap, better conditioning
    let kappa: Vec<f64> = b.iter().map(|p| p.cond_estimate.unwrap()).collect();
    assert!(kappa[0] > kappa[1] && kappa[1] > kappa[2], "{kappa:?}");
}
