mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsl::experiments::{
    emit_report, run_example1_capacity_contrast, run_experiment, to_json_string,
};
use fsl::geometry::{
    c_condition_check, classify_points, cone_condition_check, gagliardo_decompose,
    hausdorff_distance, ClassifyOptions,
};
use fsl::mesh::{build_mesh_with_voids, GridSpec};
use fsl::solver::{estimate_p_capacity, solve_neumann, SolverConfig};
use fsl::{Error, Result};
use serde::Serialize;

use config::{require, Config};

#[derive(Parser, Debug)]
#[command(name = "fsl", version, about = "Neumann problems on cracked domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `out` key of the config, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Family index override.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Hausdorff distance between `geometry` and `other` (or the family limit).
    Hausdorff,
    /// Cone condition for `geometry`.
    CheckCone,
    /// C-condition for `family`.
    CheckCcond,
    /// Parallelepiped decomposition of `geometry`.
    Decompose,
    /// Regular and singular points of the limit of `family`.
    Classify,
    /// Cracked mesh of `geometry`.
    Mesh,
    /// Neumann problem on the complement of `geometry`.
    Solve,
    /// p-capacity estimates.
    Capacity,
    /// Convergence study.
    Experiment,
}

struct Ctx {
    cfg: Config,
    base: PathBuf,
    out: PathBuf,
    eps: Option<f64>,
    p: Option<f64>,
    h: Option<f64>,
}

impl Ctx {
    fn eps(&self) -> Result<f64> {
        self.eps
            .ok_or_else(|| Error::Argument("`eps` is required (config or --eps)".into()))
    }

    fn h(&self) -> Result<f64> {
        self.h
            .ok_or_else(|| Error::Argument("`h` is required (config or --h)".into()))
    }

    fn geometry(&self) -> Result<fsl::geometry::CompactSet> {
        require(&self.cfg.geometry, "geometry")?.resolve(&self.base)
    }

    fn solver(&self) -> Result<SolverConfig> {
        let mut s = self.cfg.solver.clone().unwrap_or_default();
        if let Some(p) = self.p {
            s.p = p;
        }
        s.validate()?;
        Ok(s)
    }

    fn file(&self, name: &str) -> Result<std::fs::File> {
        std::fs::create_dir_all(&self.out)?;
        Ok(std::fs::File::create(self.out.join(name))?)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.file(name)?
            .write_all(to_json_string(value)?.as_bytes())?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => Config::load(path)?,
        None => (Config::default(), PathBuf::new()),
    };
    if let Some(n) = cli.n {
        if let Some(g) = cfg.geometry.as_mut() {
            g.n = Some(n);
        }
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx {
        eps: cli.eps.or(cfg.eps),
        p: cli.p.or(cfg.p),
        h: cli.h.or(cfg.h),
        cfg,
        base,
        out,
    };
    match cli.command {
        Command::Hausdorff => hausdorff(&ctx),
        Command::CheckCone => check_cone(&ctx),
        Command::CheckCcond => check_ccond(&ctx),
        Command::Decompose => decompose(&ctx),
        Command::Classify => classify(&ctx),
        Command::Mesh => mesh(&ctx),
        Command::Solve => solve(&ctx),
        Command::Capacity => capacity(&ctx),
        Command::Experiment => experiment(&ctx),
    }
}

#[derive(Serialize)]
struct HausdorffOut {
    distance: f64,
    eps: f64,
}

fn hausdorff(ctx: &Ctx) -> Result<()> {
    let g = require(&ctx.cfg.geometry, "geometry")?;
    let a = g.resolve(&ctx.base)?;
    let b = match &ctx.cfg.other {
        Some(o) => o.resolve(&ctx.base)?,
        None => g.family_limit()?.ok_or_else(|| {
            Error::Argument("`other` is required unless geometry names a family".into())
        })?,
    };
    let eps = ctx.eps()?;
    let distance = hausdorff_distance(&a, &b, eps)?;
    ctx.write_json("hausdorff.json", &HausdorffOut { distance, eps })?;
    println!("{distance:.16e}");
    Ok(())
}

fn check_cone(ctx: &Ctx) -> Result<()> {
    let k = ctx.geometry()?;
    let cone = require(&ctx.cfg.cone, "cone")?;
    let samples = ctx.cfg.angular_samples.unwrap_or(64);
    let outcome = cone_condition_check(&k, cone, samples, ctx.eps()?)?;
    ctx.write_json("cone.json", &outcome)?;
    match outcome {
        fsl::geometry::ConeOutcome::Holds => println!("holds"),
        fsl::geometry::ConeOutcome::Fails { witness } => {
            println!("fails {:?}", &witness[..k.dim()])
        }
    }
    Ok(())
}

fn check_ccond(ctx: &Ctx) -> Result<()> {
    let fam = require(&ctx.cfg.family, "family")?;
    let cone = require(&ctx.cfg.cone, "cone")?;
    let delta = *require(&ctx.cfg.delta, "delta")?;
    let report = c_condition_check(&fam.members()?, cone, delta, ctx.eps()?)?;
    ctx.write_json("ccond.json", &report)?;
    match &report.outcome {
        fsl::geometry::CConditionOutcome::HoldsUpTo { n_max } => println!("holds n_max={n_max}"),
        fsl::geometry::CConditionOutcome::Violation { n, x, clause } => println!(
            "violation clause={} n={n} x={:?}",
            serde_json::to_value(clause).unwrap_or_default().as_str().unwrap_or("?"),
            &x[..fam.dim]
        ),
    }
    Ok(())
}

fn decompose(ctx: &Ctx) -> Result<()> {
    let k = ctx.geometry()?;
    let cone = require(&ctx.cfg.cone, "cone")?;
    let rho = *require(&ctx.cfg.rho, "rho")?;
    let d = gagliardo_decompose(&k, cone, rho, ctx.eps()?)?;
    ctx.write_json("decomposition.json", &d)?;
    println!("pieces={}", d.pieces.len());
    Ok(())
}

fn classify(ctx: &Ctx) -> Result<()> {
    let fam = require(&ctx.cfg.family, "family")?;
    let cone = require(&ctx.cfg.cone, "cone")?;
    let rho = *require(&ctx.cfg.rho, "rho")?;
    let opts = ClassifyOptions {
        angular_samples: ctx.cfg.angular_samples.unwrap_or(64),
    };
    let c = classify_points(&fam.members()?, &fam.limit()?, cone, rho, ctx.eps()?, &opts)?;
    ctx.write_json("classification.json", &c)?;
    println!("regular={} singular={}", c.regular.len(), c.singular.len());
    Ok(())
}

#[derive(Serialize)]
struct MeshSummary {
    nodes: usize,
    elements: usize,
    duplicated_nodes: usize,
    crack_faces: usize,
    components: usize,
    max_snap_displacement: f64,
}

fn mesh(ctx: &Ctx) -> Result<()> {
    let k = ctx.geometry()?;
    let grid = GridSpec::new(*k.ambient(), ctx.h()?)?;
    let m = build_mesh_with_voids(&grid, &k)?;
    m.write_vtk(&mut std::io::BufWriter::new(ctx.file("mesh.vtk")?), &[])?;
    m.write_dump(&mut std::io::BufWriter::new(ctx.file("mesh.dump")?))?;
    ctx.write_json("geometry.json", &k)?;
    let s = MeshSummary {
        nodes: m.num_nodes(),
        elements: m.num_elements(),
        duplicated_nodes: m.duplicated_nodes(),
        crack_faces: m.crack_faces().len(),
        components: m.components(),
        max_snap_displacement: m.max_snap_displacement(),
    };
    ctx.write_json("mesh.json", &s)?;
    println!("nodes={} elements={}", s.nodes, s.elements);
    Ok(())
}

fn solve(ctx: &Ctx) -> Result<()> {
    let k = ctx.geometry()?;
    let grid = GridSpec::new(*k.ambient(), ctx.h()?)?;
    let solver = ctx.solver()?;
    let family = ctx.cfg.geometry.as_ref().and_then(|g| g.family);
    let source = require(&ctx.cfg.source, "source")?
        .to_source(family.unwrap_or(fsl::geometry::FamilyKind::Example1), k.dim());
    let m = build_mesh_with_voids(&grid, &k)?;
    let sol = solve_neumann(&m, &source, &solver)?;
    sol.field
        .write_csv(&mut std::io::BufWriter::new(ctx.file("field.csv")?))?;
    sol.field
        .write_vtk(&mut std::io::BufWriter::new(ctx.file("field.vtk")?), "u")?;
    ctx.write_json("solve.json", &sol.diagnostics)?;
    println!(
        "iterations={} residual={:.3e}",
        sol.diagnostics.iterations, sol.diagnostics.residual
    );
    Ok(())
}

fn capacity(ctx: &Ctx) -> Result<()> {
    let sec = require(&ctx.cfg.capacity, "capacity")?;
    let h = ctx.h()?;
    let solver = ctx.solver()?;
    if let Some(p_list) = &sec.contrast_p {
        let c = run_example1_capacity_contrast(h, &sec.radii, p_list, sec.threshold, &solver)?;
        ctx.write_json("capacity.json", &c)?;
        for s in &c.series {
            println!("p={} ratio={:.6}", s.p, s.ratio);
        }
        println!("contrast={}", c.contrast);
        return Ok(());
    }
    let k = ctx.geometry()?;
    let p = ctx.p.unwrap_or(solver.p);
    let estimates = sec
        .radii
        .iter()
        .map(|&r| estimate_p_capacity(&k, p, r, h, &solver))
        .collect::<Result<Vec<_>>>()?;
    ctx.write_json("capacity.json", &estimates)?;
    for e in &estimates {
        println!("r={} c={:.6e}", e.tube_radius, e.value);
    }
    Ok(())
}

fn experiment(ctx: &Ctx) -> Result<()> {
    let mut spec = require(&ctx.cfg.experiment, "experiment")?.clone();
    if let Some(p) = ctx.p {
        spec.p = p;
    }
    if let Some(h) = ctx.h {
        spec.h = h;
    }
    if ctx.eps.is_some() {
        spec.hausdorff_eps = ctx.eps;
    }
    spec.solver.p = spec.p;
    let report = run_experiment(&spec)?;
    emit_report(&report, &ctx.out)?;
    println!(
        "verdict={}",
        serde_json::to_value(report.verdict)
            .unwrap_or_default()
            .as_str()
            .unwrap_or("?")
    );
    Ok(())
}

fn error_line(e: &Error) -> String {
    let msg = serde_json::to_string(&e.to_string()).unwrap_or_default();
    format!("error kind={} message={msg}", e.kind())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(if e.is_non_convergence() { 2 } else { 1 })
        }
    }
}
