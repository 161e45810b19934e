//! Command-line front end: argument parsing, file formats and the check suite.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{build_fem_matrices, levi_civita, surface_connection, Connection};
use crate::error::{Error, Result};
use crate::extract::{write_geometry_transfer, write_overlay, write_texture_transfer};
use crate::linalg::C64;
use crate::mesh::primitives::icosphere;
use crate::mesh::{fill_boundaries, load_obj, parse_obj, InputMap, IntrinsicGeometry, TriangleMesh};
use crate::multires::{fine_problem, solve_staged};
use crate::pipeline::{ConnectionKind, Initialization, PairConfig, PairExtraction, PreparedSurface, Problem, RunSummary};
use crate::product::{gl_energy_and_gradient, CurvePair, PinningPotential, Section};
use crate::solve::{base_eigenvalue, gradient_check, SolverConfig};

#[derive(Parser, Debug)]
#[command(name = "ims", version, about = "Dense correspondences between genus-zero triangle meshes")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize a section and write maps, overlay, distortion and transfers.
    Solve(SolveArgs),
    /// Read maps off a saved section.
    Extract(ExtractArgs),
    /// Run the mesh and bundle diagnostics.
    Check(CheckArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    #[arg(long)]
    pub mesh_a: PathBuf,
    #[arg(long)]
    pub mesh_b: PathBuf,
    /// default | vectorfield | spin
    #[arg(long, default_value = "default")]
    pub connection: ConnectionKind,
    /// Keep the input triangulations instead of flipping to intrinsic Delaunay.
    #[arg(long)]
    pub no_idt: bool,
    /// Coarse version of mesh A for the two-level pipeline.
    #[arg(long, requires = "coarse_b")]
    pub coarse_a: Option<PathBuf>,
    #[arg(long, requires = "coarse_a")]
    pub coarse_b: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Landmark pairs, `i j` per line.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    /// Curve pairs, `curveA: i0 i1 … ; curveB: j0 j1 …` per line.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Initial map A→B, optionally followed by B→A (closest points fill a missing direction).
    #[arg(long, num_args = 1..=2)]
    pub init_map: Vec<PathBuf>,
    /// Comma-separated multipliers of the base eigenvalue.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub anneal: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_b: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start from random values instead of the eigenvector initialization.
    #[arg(long, conflicts_with = "init_map")]
    pub random_init: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Section written by `solve` (IMSZ1).
    #[arg(long)]
    pub section: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    /// Meshes to diagnose.
    #[arg(required = true)]
    pub meshes: Vec<PathBuf>,
    #[arg(long)]
    pub no_idt: bool,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn vertex_list(text: &str, what: &str, lineno: usize) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Format(format!("line {lineno}: bad {what} vertex `{t}`"))))
        .collect()
}

/// `i j` per line (0-based); `#` starts a comment.
pub fn parse_landmarks(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = vertex_list(line, "landmark", k + 1)?;
        if v.len() != 2 {
            return Err(Error::Format(format!("line {}: expected `<vertexA> <vertexB>`", k + 1)));
        }
        out.push((v[0], v[1]));
    }
    Ok(out)
}

/// `curveA: i0 i1 … ; curveB: j0 j1 …` per line.
pub fn parse_curves(text: &str) -> Result<Vec<CurvePair>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("line {}: expected `curveA: … ; curveB: …`", k + 1));
        let (left, right) = line.split_once(';').ok_or_else(bad)?;
        let a = left.trim().strip_prefix("curveA:").ok_or_else(bad)?;
        let b = right.trim().strip_prefix("curveB:").ok_or_else(bad)?;
        let pair = CurvePair { a: vertex_list(a, "curve A", k + 1)?, b: vertex_list(b, "curve B", k + 1)? };
        if pair.a.is_empty() || pair.b.is_empty() {
            return Err(Error::Format(format!("line {}: empty curve", k + 1)));
        }
        out.push(pair);
    }
    Ok(out)
}

/// Solver settings assembled from the command line.
pub fn pair_config(args: &SolveArgs, problem_hint: Option<&Problem>) -> Result<PairConfig> {
    let landmarks = match &args.landmarks {
        Some(p) => parse_landmarks(&read_text(p)?)?,
        None => Vec::new(),
    };
    let curves = match &args.curves {
        Some(p) => parse_curves(&read_text(p)?)?,
        None => Vec::new(),
    };
    if !landmarks.is_empty() || !curves.is_empty() {
        for s in [args.sigma_a, args.sigma_b] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Input(format!("kernel widths must be positive, got {s}")));
            }
        }
    }
    let init = if args.random_init {
        Initialization::Random
    } else if let Some(first) = args.init_map.first() {
        let a_to_b = InputMap::parse(&read_text(first)?)?;
        let b_to_a = match args.init_map.get(1) {
            Some(p) => InputMap::parse(&read_text(p)?)?,
            None => problem_hint
                .ok_or_else(|| Error::Input("initial maps need the prepared meshes".into()))?
                .nearest_neighbor_maps()
                .1,
        };
        Initialization::Maps { a_to_b, b_to_a }
    } else {
        Initialization::NearestNeighbor
    };
    let solver = SolverConfig { schedule: args.anneal.clone(), seed: args.seed, ..SolverConfig::default() };
    solver.validate()?;
    Ok(PairConfig {
        connection: args.pair.connection,
        idt: !args.pair.no_idt,
        solver,
        init,
        landmarks,
        curves,
        sigma_a: args.sigma_a,
        sigma_b: args.sigma_b,
    })
}

fn load(path: &Path, side: &str) -> Result<TriangleMesh> {
    load_obj(path).map_err(|e| e.in_stage(&format!("loading mesh {side}"), ""))
}

/// Rebuilds the pair the section lives on (anchored to the coarse pair when given).
pub fn prepare_pair(pair: &PairArgs) -> Result<Problem> {
    let (a, b) = (load(&pair.mesh_a, "A")?, load(&pair.mesh_b, "B")?);
    let idt = !pair.no_idt;
    match (&pair.coarse_a, &pair.coarse_b) {
        (Some(ca), Some(cb)) => {
            let coarse = Problem::new(&load(ca, "coarse A")?, &load(cb, "coarse B")?, pair.connection, idt)?;
            fine_problem(&coarse, &a, &b, idt)
        }
        _ => Problem::new(&a, &b, pair.connection, idt),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes map, overlay, distortion and transfer files into `out`.
pub fn write_extraction(out: &Path, problem: &Problem, ex: &PairExtraction) -> Result<()> {
    let (ma, mb) = (problem.a.mesh(), problem.b.mesh());
    ex.a_to_b.write(&out.join("map_ab.txt"))?;
    ex.b_to_a.write(&out.join("map_ba.txt"))?;
    write_overlay(&out.join("overlay.txt"), &ex.crossings)?;
    ex.distortion_a_to_b.write_csv(&out.join("distortion_ab.csv"))?;
    ex.distortion_b_to_a.write_csv(&out.join("distortion_ba.csv"))?;
    write_texture_transfer(&out.join("texture_ab.obj"), ma, mb, &ex.a_to_b, None)?;
    write_texture_transfer(&out.join("texture_ba.obj"), mb, ma, &ex.b_to_a, None)?;
    write_geometry_transfer(&out.join("geometry_ab.obj"), ma, mb, &ex.a_to_b)?;
    write_geometry_transfer(&out.join("geometry_ba.obj"), mb, ma, &ex.b_to_a)
}

fn make_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    make_out(&args.pair.out)?;
    let (problem, solution) = match (&args.pair.coarse_a, &args.pair.coarse_b) {
        (Some(ca), Some(cb)) => {
            let config = pair_config(args, None)?;
            let (a, b) = (load(&args.pair.mesh_a, "A")?, load(&args.pair.mesh_b, "B")?);
            let staged = solve_staged(&load(ca, "coarse A")?, &load(cb, "coarse B")?, &a, &b, &config)?;
            (staged.fine, staged.fine_solution)
        }
        _ => {
            let problem = prepare_pair(&args.pair)?;
            let config = pair_config(args, Some(&problem))?;
            let solution = problem.solve(&config)?;
            (problem, solution)
        }
    };
    for w in &solution.warnings {
        eprintln!("warning: {w}");
    }
    let out = &args.pair.out;
    solution.section.write(&out.join("section.imsz"))?;
    let mut trace = Vec::new();
    solution
        .minimization
        .write_trace_csv(&mut trace)
        .map_err(|e| Error::io(&out.join("energy_trace.csv"), e))?;
    write_file(&out.join("energy_trace.csv"), trace)?;
    let ex = problem.extract(&solution.section)?;
    write_extraction(out, &problem, &ex)?;
    let summary = RunSummary::new(&problem, &solution, &ex);
    write_file(&out.join("summary.json"), summary.to_json())?;
    println!(
        "{} × {} vertices, multi-zero {:.2}%, {} crossings; results in {}",
        summary.vertices_a,
        summary.vertices_b,
        summary.multi_zero_percent,
        summary.crossings,
        out.display()
    );
    Ok(())
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let section = Section::read(&args.section).map_err(|e| e.in_stage("reading section", ""))?;
    let problem = prepare_pair(&args.pair)?;
    let (na, nb) = problem.shape();
    if section.shape() != (na, nb) {
        return Err(Error::Dimension(format!(
            "section is {}×{} but the meshes give {na}×{nb}",
            section.rows(),
            section.cols()
        )));
    }
    make_out(&args.pair.out)?;
    let ex = problem.extract(&section)?;
    write_extraction(&args.pair.out, &problem, &ex)?;
    println!(
        "multi-zero {} + {} of {} vertices; results in {}",
        ex.a_to_b.multi_zero_count(),
        ex.b_to_a.multi_zero_count(),
        na + nb,
        args.pair.out.display()
    );
    Ok(())
}

/// Outcome of one diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn max_relative_difference(a: impl Iterator<Item = (C64, C64)>) -> f64 {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (x, y) in a {
        num = num.max((x - y).norm());
        den = den.max(y.norm());
    }
    num / den.max(1e-300)
}

/// Trivial-connection operators against the scalar cotangent Laplacian and Galerkin mass.
fn fem_reduction(mesh: &TriangleMesh, geom: &IntrinsicGeometry) -> f64 {
    let ops = build_fem_matrices(mesh, geom, &Connection::trivial(mesh));
    let cot = geom.cotan_laplacian(mesh);
    let mut trip = Vec::new();
    for f in 0..mesh.num_faces() {
        let area = mesh.face_area(f);
        let v = mesh.face(f);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((v[i], v[j], area / if i == j { 6.0 } else { 12.0 }));
            }
        }
    }
    let mass = crate::linalg::CsrMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), &trip);
    let entries = |a: &crate::linalg::CsrMatrix<C64>, b: &crate::linalg::CsrMatrix<f64>| {
        let pairs: Vec<(C64, C64)> = a
            .triplets()
            .map(|(i, j, x)| (x, C64::new(b.get(i, j), 0.0)))
            .chain(b.triplets().map(|(i, j, y)| (a.get(i, j), C64::new(y, 0.0))))
            .collect();
        max_relative_difference(pairs.into_iter())
    };
    entries(&ops.laplacian, &cot).max(entries(&ops.mass, &mass))
}

/// Faces whose triangle inequality holds with less than a relative margin of 1e-10.
pub fn sliver_faces(mesh: &TriangleMesh) -> Vec<usize> {
    (0..mesh.num_faces())
        .filter(|&f| {
            let [a, b, c] = mesh.face_lengths(f);
            let margin = (b + c - a).min(c + a - b).min(a + b - c);
            !(margin > 1e-10 * (a + b + c))
        })
        .collect()
}

/// The invariant suite on one mesh.
pub fn check_mesh(mesh: &TriangleMesh, idt: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let chi = mesh.euler_characteristic();
    let genus_zero = mesh.require_genus_zero().is_ok();
    out.push(result(
        "topology",
        genus_zero,
        format!("χ = {chi} with {} boundary loops", mesh.boundary_loops().len()),
    ));
    let bad = sliver_faces(mesh);
    out.push(result(
        "triangle inequality",
        bad.is_empty(),
        if bad.is_empty() {
            "all faces valid".into()
        } else {
            format!("{} degenerate faces: {:?}", bad.len(), &bad[..bad.len().min(20)])
        },
    ));
    if !genus_zero || !bad.is_empty() {
        out.push(result("bundle checks", false, "skipped: the mesh is not a valid genus-zero surface".into()));
        return out;
    }
    let surface = match PreparedSurface::new(mesh, ConnectionKind::Default, idt) {
        Ok(s) => s,
        Err(e) => {
            out.push(result("preparation", false, e.to_string()));
            return out;
        }
    };
    let work = surface.work();
    let geom = &surface.geometry;
    let total = surface.connection.total_curvature();
    out.push(result("curvature sum", (total - TAU).abs() < 1e-9, format!("ΣΩ − 2π = {:.3e}", total - TAU)));
    let lc = levi_civita(work, geom);
    let chi_filled = work.euler_characteristic() as f64;
    let gb = lc.total_curvature() - TAU * chi_filled;
    out.push(result("Gauss-Bonnet", gb.abs() < 1e-9, format!("ΣΩ_LC − 2πχ = {gb:.3e}")));
    let compat = surface.connection.compatibility_residual(work).max(lc.compatibility_residual(work));
    out.push(result("holonomy compatibility", compat < 1e-9, format!("max residual {compat:.3e}")));
    match surface_connection(work, geom, 0) {
        Ok(c) => {
            let unit = c.unit_residual();
            out.push(result("unit transports", unit < 1e-12, format!("max ||r| − 1| = {unit:.3e}")));
        }
        Err(e) => out.push(result("unit transports", false, e.to_string())),
    }
    let fem = fem_reduction(work, geom);
    out.push(result("FEM reduction", fem < 1e-12, format!("max relative difference {fem:.3e}")));
    out.push(gradient_spot_check(&surface));
    out
}

/// Finite-difference check of the energy gradient on the product with a small sphere.
fn gradient_spot_check(surface: &PreparedSurface) -> CheckResult {
    let run = || -> Result<f64> {
        let partner = PreparedSurface::new(&icosphere(1), ConnectionKind::Default, true)?;
        let (a, b) = (&surface.operators, &partner.operators);
        let lambda = 100.0 * base_eigenvalue(a, b)?;
        let (na, nb) = (a.lumped_mass.len(), b.lumped_mass.len());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = Section::random_unit_disk(na, nb, &mut rng);
        let pot = PinningPotential::uniform(na, nb);
        let mut eval = |x: &[C64]| -> Result<(f64, Vec<C64>)> {
            let ev = gl_energy_and_gradient(a, b, &Section::from_vec(na, nb, x.to_vec())?, lambda, &pot)?;
            Ok((ev.energy, ev.gradient.into_vec()))
        };
        gradient_check(&mut eval, z.data(), 20, 11)
    };
    match run() {
        Ok(err) => result("gradient", err < 1e-5, format!("worst relative error {err:.3e} over 20 directions")),
        Err(e) => result("gradient", false, e.to_string()),
    }
}

/// Runs the suite on every mesh; false when any check failed.
pub fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let mut ok = true;
    for path in &args.meshes {
        println!("{}", path.display());
        let (positions, faces) = parse_obj(&read_text(path)?)?;
        let mesh = TriangleMesh::new_unvalidated(positions, faces)?;
        let mesh = match fill_boundaries(&mesh) {
            Ok(f) if mesh.require_genus_zero().is_ok() => f.mesh,
            _ => mesh,
        };
        for r in check_mesh(&mesh, !args.no_idt) {
            println!("  {r}");
            ok &= r.passed;
        }
    }
    Ok(ok)
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Extract(a) => cmd_extract(a).map(|_| true),
        Command::Check(a) => cmd_check(a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
