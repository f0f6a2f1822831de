use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gdsw_core::krylov::Method;
use gdsw_core::problems::{Material, NullspaceMode, ProblemKind};
use gdsw_core::sparse::Backend;
use gdsw_harness::{
    emit_report, verify_bound, AxisCounts, BoundaryKind, CoarseConfig, DecompositionConfig, OutputConfig,
    ProblemConfig, ReportFormat, RhsKind, RunConfig, SolverConfig,
};

#[derive(Parser)]
#[command(name = "gdsw", version, about = "Two-level overlapping Schwarz scaling studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write the report.
    Study(Overrides),
    /// Check condition-number growth against the two-level bound.
    VerifyBound(Overrides),
}

/// Every flag overrides the matching configuration key.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    /// laplace or elasticity
    #[arg(long)]
    problem: Option<String>,
    /// Global cells per axis, e.g. 16x16.
    #[arg(long)]
    cells: Option<AxisCounts>,
    /// Comma-separated sweep points, e.g. 2x2,4x4.
    #[arg(long)]
    parts: Option<String>,
    #[arg(long)]
    overlap: Option<usize>,
    /// Comma-separated backends.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    nullspace: Option<NullspaceMode>,
    /// on or off
    #[arg(long)]
    coarse: Option<String>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn base_config(kind: ProblemKind) -> RunConfig {
    RunConfig {
        problem: ProblemConfig {
            kind,
            cells: Vec::new(),
            h: None,
            bc: BoundaryKind::DirichletAll,
            material: Material::default(),
            rhs: RhsKind::Ones,
        },
        decomposition: DecompositionConfig { parts: Vec::new(), overlap: 2, cells_per_part: None },
        coarse: CoarseConfig::default(),
        solver: SolverConfig::default(),
        backends: vec![Backend::SparseLuOrdered],
        output: OutputConfig::default(),
        seed: 0,
        threads: None,
    }
}

fn parse_kind(s: &str) -> Result<ProblemKind> {
    match s {
        "laplace" => Ok(ProblemKind::Laplace),
        "elasticity" => Ok(ProblemKind::Elasticity),
        _ => bail!("unknown problem `{s}`"),
    }
}

fn resolve(o: Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<RunConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => base_config(parse_kind(o.problem.as_deref().unwrap_or("laplace"))?),
    };
    if let Some(p) = &o.problem {
        cfg.problem.kind = parse_kind(p)?;
    }
    if let Some(c) = o.cells {
        cfg.problem.cells = c.0;
        cfg.decomposition.cells_per_part = None;
    }
    if let Some(p) = &o.parts {
        cfg.decomposition.parts =
            p.split(',').map(|s| s.parse::<AxisCounts>().map(|a| a.0)).collect::<Result<_, _>>()?;
    }
    if let Some(v) = o.overlap {
        cfg.decomposition.overlap = v;
    }
    if let Some(b) = &o.backend {
        cfg.backends = b.split(',').map(|s| s.trim().parse::<Backend>()).collect::<Result<_, _>>()?;
    }
    if let Some(n) = o.nullspace {
        cfg.coarse.nullspace = n;
    }
    if let Some(c) = &o.coarse {
        cfg.coarse.enabled = match c.as_str() {
            "on" | "true" => true,
            "off" | "false" => false,
            _ => bail!("--coarse expects on or off, got `{c}`"),
        };
    }
    if let Some(m) = o.method {
        cfg.solver.method = m;
    }
    if let Some(t) = o.tol {
        cfg.solver.tol = t;
    }
    if let Some(m) = o.max_iter {
        cfg.solver.max_iter = m;
    }
    if let Some(d) = o.out {
        cfg.output.dir = d;
    }
    if let Some(f) = o.format {
        cfg.output.format = f;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if o.threads.is_some() {
        cfg.threads = o.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn study(cfg: &RunConfig) -> Result<bool> {
    let records = gdsw_harness::run_study(cfg)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:>6} {:>10} {:>8} {:>10} {:>8} {:>11} {:>11} {:>11}  backend",
        "#subd", "parts", "Krylov", "max K_i", "K_0", "solver [s]", "subd [s]", "coarse [s]"
    )?;
    for r in &records {
        writeln!(
            out,
            "{:>6} {:>10} {:>8.1} {:>10} {:>8} {:>11.4} {:>11.4} {:>11.4}  {}{}",
            r.n_subdomains,
            r.parts,
            r.krylov_iterations,
            r.max_size_ki,
            r.size_k0,
            r.solver_time,
            r.subd_solve_time,
            r.coarse_solve_time,
            r.backend,
            r.error.as_ref().map(|e| format!("  error: {e}")).unwrap_or_default()
        )?;
    }
    for path in emit_report(&records, &cfg.output)? {
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(records.iter().all(|r| !r.failed()))
}

fn bound(cfg: &RunConfig) -> Result<bool> {
    let report = verify_bound(cfg)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:>12} {:>10} {:>3} {:>6} {:>6} {:>8} {:>10} {:>8}",
        "sweep", "parts", "δ", "H/h", "H/δ", "iter", "κ", "ratio"
    )?;
    for p in &report.points {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        writeln!(
            out,
            "{:>12} {:>10} {:>3} {:>6} {:>6} {:>8} {:>10} {:>8}",
            format!("{:?}", p.sweep).to_lowercase(),
            AxisCounts(p.parts.clone()).to_string(),
            p.overlap,
            format!("{:.2}", p.h_ratio),
            format!("{:.2}", p.delta_ratio),
            p.iterations,
            fmt(p.cond_estimate),
            fmt(p.ratio)
        )?;
    }
    writeln!(out, "growth {:?}, violation {}", report.growth, report.violation)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let path = cfg.output.dir.join(format!("{}_bound.json", cfg.output.stem));
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(!report.violation && report.points.iter().all(|p| p.error.is_none()))
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let ok = match cli.command {
        Command::Study(o) => study(&resolve(o)?)?,
        Command::VerifyBound(o) => bound(&resolve(o)?)?,
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
