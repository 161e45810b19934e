//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so the
//! wall-clock gates are not disturbed by other work in the same process.

mod common;

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::Instant;

use common::*;
use ims::bundle::{build_fem_matrices, levi_civita, Connection};
use ims::extract::{find_triangle_zero, relative_residual, Direction, DistortionReport, FaceStatus};
use ims::linalg::{CsrMatrix, C64};
use ims::mesh::primitives::{bumpy, cylinder, deform, disk, grid, icosphere, uv_sphere};
use ims::mesh::{geodesic_distance, IntrinsicGeometry, TriangleMesh};
use ims::pipeline::{ConnectionKind, PairConfig, PairExtraction, Problem};
use ims::product::{
    build_pinning_potential, build_slice_connection, dirichlet_energy, gl_energy_and_gradient,
    slicewise_laplacian_apply, PinningPotential, Section, SliceTargets,
};
use ims::solve::{base_eigenvalue, min_eigenvector_init, minimize, SolverConfig};
use nalgebra::DMatrix;
use rand::Rng;

type Outcome = Result<String, String>;

/// Distortion reports of every map computed in the suite, by label.
static REPORTS: Mutex<Vec<(String, DistortionReport)>> = Mutex::new(Vec::new());
/// Solved pairs kept for the extraction criteria.
static SOLVED: Mutex<Vec<(String, Problem, Section, PairExtraction)>> = Mutex::new(Vec::new());

fn record(label: &str, problem: Problem, z: Section, ex: PairExtraction) {
    let mut r = REPORTS.lock().unwrap();
    r.push((format!("{label} A→B"), ex.distortion_a_to_b.clone()));
    r.push((format!("{label} B→A"), ex.distortion_b_to_a.clone()));
    SOLVED.lock().unwrap().push((label.to_string(), problem, z, ex));
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: f64, what: &str) -> Result<f64, String> {
    let t = start.elapsed().as_secs_f64();
    ensure(t < limit, || format!("{what} took {t:.1} s (limit {limit} s)"))?;
    Ok(t)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion(n: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d.as_str()),
        Err(d) => ("FAIL", d.as_str()),
    };
    println!("[{tag}] criterion {n:>2} ({title}, {secs:.1} s): {detail}");
    outcome.is_ok()
}

fn near_isometric(freq: usize) -> (TriangleMesh, TriangleMesh) {
    (icosphere(freq), bumpy(&icosphere(freq), 0.04, [1.0, 1.05, 0.97]))
}

fn small_pair() -> (Side, Side) {
    (Side::normalized(bumpy(&icosphere(1), 0.15, [1.0, 1.2, 0.9])), Side::normalized(uv_sphere(3, 6)))
}

// ---------------------------------------------------------------- criterion 1

fn random_meshes() -> Vec<TriangleMesh> {
    let mut r = rng(2024);
    let mut out = Vec::new();
    for freq in [3, 5, 8, 11, 14] {
        let amp = r.random_range(0.0..0.3);
        let stretch = [0, 1, 2].map(|_| r.random_range(0.7..1.4));
        out.push(bumpy(&icosphere(freq), amp, stretch));
    }
    for (nx, ny) in [(12, 9), (30, 25)] {
        let g = grid(nx, ny, 1.0, 0.8);
        let jitter: Vec<[f64; 3]> = (0..g.num_vertices())
            .map(|_| [r.random_range(-0.2..0.2) / nx as f64, r.random_range(-0.2..0.2) / ny as f64, r.random_range(-0.05..0.05)])
            .collect();
        let pos = g.positions().iter().zip(&jitter).map(|(p, j)| [p[0] + j[0], p[1] + j[1], p[2] + j[2]]).collect();
        out.push(TriangleMesh::new(pos, g.faces().to_vec()).unwrap());
    }
    out.push(deform(&disk(24, 8), |p| [p[0], p[1], 0.3 * (p[0] * p[0] - p[1] * p[1])]));
    out.push(deform(&cylinder(20, 12, 2.0), |p| [p[0] * (1.0 + 0.2 * p[2]), p[1], p[2]]));
    out.push(uv_sphere(20, 32));
    out
}

fn cot(u: [f64; 3], v: [f64; 3]) -> f64 {
    let d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let c = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    d / (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

/// Cotangent stiffness and Galerkin mass assembled face by face from positions.
fn scalar_fem(m: &TriangleMesh) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
    let p = m.positions();
    let (mut stiff, mut mass) = (Vec::new(), Vec::new());
    for f in m.faces() {
        let e = |a: usize, b: usize| [p[f[b]][0] - p[f[a]][0], p[f[b]][1] - p[f[a]][1], p[f[b]][2] - p[f[a]][2]];
        let u = e(0, 1);
        let v = e(0, 2);
        let c = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        let area = 0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        for k in 0..3 {
            let (i, j, o) = (f[(k + 1) % 3], f[(k + 2) % 3], k);
            let w = 0.5 * cot(e(o, (k + 1) % 3), e(o, (k + 2) % 3));
            stiff.extend([(i, j, -w), (j, i, -w), (i, i, w), (j, j, w)]);
        }
        for a in 0..3 {
            for b in 0..3 {
                mass.push((f[a], f[b], area / if a == b { 6.0 } else { 12.0 }));
            }
        }
    }
    let n = m.num_vertices();
    (CsrMatrix::from_triplets(n, n, &stiff), CsrMatrix::from_triplets(n, n, &mass))
}

/// Entrywise relative error over the union of both sparsity patterns. Entries whose
/// exact value is zero (right angles) carry only rounding, so they are measured
/// against their row's diagonal instead.
fn entrywise_relative(lib: &CsrMatrix<C64>, oracle: &CsrMatrix<f64>) -> f64 {
    let scale = |i: usize, y: f64| {
        let d = oracle.get(i, i).abs();
        if y.abs() > 1e-12 * d {
            y.abs()
        } else {
            d
        }
    };
    let mut worst: f64 = 0.0;
    for (i, j, y) in oracle.triplets() {
        worst = worst.max((lib.get(i, j) - C64::new(y, 0.0)).norm() / scale(i, y));
    }
    for (i, j, x) in lib.triplets() {
        let y = oracle.get(i, j);
        worst = worst.max((x - C64::new(y, 0.0)).norm() / scale(i, y));
    }
    worst
}

fn c1() -> Outcome {
    let start = Instant::now();
    let meshes = random_meshes();
    let mut worst: f64 = 0.0;
    for m in &meshes {
        ensure(m.num_vertices() <= 2000, || format!("mesh with {} vertices", m.num_vertices()))?;
        let geom = IntrinsicGeometry::new(m);
        let ops = build_fem_matrices(m, &geom, &Connection::trivial(m));
        ensure(ops.laplacian.hermitian_defect() == 0.0 || ops.laplacian.hermitian_defect() < 1e-15, || "non-Hermitian".into())?;
        let (k, mm) = scalar_fem(m);
        let e = entrywise_relative(&ops.laplacian, &k).max(entrywise_relative(&ops.mass, &mm));
        ensure(e < 1e-12, || format!("{}-vertex mesh: entrywise relative error {e:.3e}", m.num_vertices()))?;
        worst = worst.max(e);
    }
    let t = within(start, 10.0, "FEM reduction")?;
    Ok(format!("{} meshes, worst entrywise relative error {worst:.2e}, {t:.2} s", meshes.len()))
}

// ---------------------------------------------------------------- criterion 2

fn c2() -> Outcome {
    let mut meshes: Vec<(String, TriangleMesh)> = vec![];
    for f in [1, 2, 3, 4, 5, 7, 10] {
        meshes.push((format!("icosphere({f})"), icosphere(f)));
        meshes.push((format!("bumpy icosphere({f})"), near_isometric(f).1));
    }
    for (i, m) in random_meshes().into_iter().enumerate() {
        meshes.push((format!("random mesh {i}"), m));
    }
    meshes.push(("uv_sphere(3, 6)".into(), uv_sphere(3, 6)));
    meshes.push(("uv_sphere(4, 7)".into(), uv_sphere(4, 7)));
    let (mut sum_err, mut lc_err, mut compat): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (label, m) in &meshes {
        for kind in [ConnectionKind::Default, ConnectionKind::VectorField, ConnectionKind::Spin] {
            for idt in [true, false] {
                let s = ims::pipeline::PreparedSurface::new(m, kind, idt).map_err(|e| format!("{label}: {e}"))?;
                let work = s.work();
                let chi = work.euler_characteristic() as f64;
                // every bundle kind is built to match the other surface: ΣΩ = 2π
                let e = (s.connection.total_curvature() - TAU).abs();
                ensure(e < 1e-9, || format!("{label} ({}, idt {idt}): ΣΩ off by {e:.3e}", kind.name()))?;
                sum_err = sum_err.max(e);
                let c = s.connection.compatibility_residual(work);
                ensure(c < 1e-9, || format!("{label} ({}): compatibility {c:.3e}", kind.name()))?;
                compat = compat.max(c);
                let lc = levi_civita(work, &s.geometry);
                let g = (lc.total_curvature() - TAU * chi).abs();
                ensure(g < 1e-9, || format!("{label}: Σ Ω_LC − 2πχ = {g:.3e}"))?;
                lc_err = lc_err.max(g);
                compat = compat.max(lc.compatibility_residual(work));
            }
        }
    }
    // slice bundles on a product
    let (a, b) = small_pair();
    let phi: Vec<usize> = (0..a.mesh.num_vertices()).map(|v| (7 * v + 1) % b.mesh.num_faces()).collect();
    let psi: Vec<usize> = (0..b.mesh.num_vertices()).map(|v| (5 * v + 2) % a.mesh.num_faces()).collect();
    let sc = build_slice_connection(
        &a.mesh, &a.geom, &a.conn, &b.mesh, &b.geom, &b.conn,
        SliceTargets::Faces(&phi), SliceTargets::Faces(&psi),
    )
    .map_err(err)?;
    for v in 0..a.mesh.num_vertices() {
        let c = sc.b_slice(v);
        let e = (c.total_curvature() - TAU).abs();
        ensure(e < 1e-9, || format!("slice {v}: ΣΩ off by {e:.3e}"))?;
        compat = compat.max(c.compatibility_residual(&b.mesh));
        sum_err = sum_err.max(e);
    }
    for w in 0..b.mesh.num_vertices() {
        let c = sc.a_slice(w);
        sum_err = sum_err.max((c.total_curvature() - TAU).abs());
        compat = compat.max(c.compatibility_residual(&a.mesh));
    }
    ensure(sum_err < 1e-9 && compat < 1e-9, || format!("slice bundles: ΣΩ {sum_err:.3e}, compatibility {compat:.3e}"))?;
    Ok(format!(
        "{} meshes × 3 bundles × iDT on/off plus slices: |ΣΩ−2π| ≤ {sum_err:.1e}, |ΣΩ_LC−2πχ| ≤ {lc_err:.1e}, compatibility ≤ {compat:.1e}",
        meshes.len()
    ))
}

// ---------------------------------------------------------------- criterion 3

fn c3() -> Outcome {
    let start = Instant::now();
    let a = Side::normalized(uv_sphere(3, 6));
    let b = Side::normalized(bumpy(&uv_sphere(4, 7), 0.1, [1.0, 1.1, 0.9]));
    let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
    ensure((na, nb) == (20, 30), || format!("product is {na}×{nb}"))?;
    let l0 = base_eigenvalue(&a.ops, &b.ops).map_err(err)?;
    let pinned = build_pinning_potential(&a.mesh, &b.mesh, &[(0, 0), (7, 11), (19, 29)], &[], 0.3, 0.3).map_err(err)?;
    let mut worst: f64 = 0.0;
    for lambda in [l0, 100.0 * l0] {
        for pot in [PinningPotential::uniform(na, nb), pinned.clone()] {
            let z = random_section(na, nb, 3);
            let g = gl_energy_and_gradient(&a.ops, &b.ops, &z, lambda, &pot).map_err(err)?.gradient;
            for d in 0..20 {
                let w = random_section(na, nb, 1000 + d);
                let h = 1e-5;
                let e = |t: f64| {
                    let data = z.data().iter().zip(w.data()).map(|(x, y)| x + y * t).collect();
                    gl_energy_and_gradient(&a.ops, &b.ops, &Section::from_vec(na, nb, data).unwrap(), lambda, &pot)
                        .unwrap()
                        .energy
                };
                let fd = (e(h) - e(-h)) / (2.0 * h);
                let an = g.inner(&w);
                let r = rel_err(fd, an);
                ensure(r < 1e-5, || format!("λ = {lambda:.3}, pinned {}: {fd} vs {an}", !pot.is_uniform()))?;
                worst = worst.max(r);
            }
        }
    }
    let t = within(start, 30.0, "gradient check")?;
    Ok(format!("20×30 product, λ ∈ {{λ₀, 100λ₀}} × pinning on/off × 20 directions: worst relative error {worst:.2e}, {t:.2} s"))
}

// ---------------------------------------------------------------- criterion 4

fn dense_slice_operator(sc: &ims::product::SliceConnection, a: &Side, b: &Side) -> DMatrix<C64> {
    let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
    let mut k = DMatrix::<C64>::zeros(na * nb, na * nb);
    let (ma, mb) = (sc.lumped_mass_a(), sc.lumped_mass_b());
    for v in 0..na {
        let lb = dense(&build_fem_matrices(&b.mesh, &b.geom, &sc.b_slice(v)).laplacian);
        for w in 0..nb {
            for w2 in 0..nb {
                k[(v * nb + w, v * nb + w2)] += lb[(w, w2)] * ma[v];
            }
        }
    }
    for w in 0..nb {
        let la = dense(&build_fem_matrices(&a.mesh, &a.geom, &sc.a_slice(w)).laplacian);
        for v in 0..na {
            for v2 in 0..na {
                k[(v * nb + w, v2 * nb + w)] += la[(v, v2)] * mb[w];
            }
        }
    }
    k
}

fn c4() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, b) in [small_pair(), (Side::normalized(uv_sphere(3, 6)), Side::normalized(uv_sphere(4, 7)))] {
        let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
        ensure(na <= 30 && nb <= 30, || format!("{na}×{nb}"))?;
        let k = dense(&a.ops.laplacian).kronecker(&dense(&b.ops.mass)) + dense(&a.ops.mass).kronecker(&dense(&b.ops.laplacian));
        let phi: Vec<usize> = (0..na).map(|v| (3 * v + 2) % b.mesh.num_faces()).collect();
        let psi: Vec<usize> = (0..nb).map(|w| (5 * w + 1) % a.mesh.num_faces()).collect();
        let sc = build_slice_connection(
            &a.mesh, &a.geom, &a.conn, &b.mesh, &b.geom, &b.conn,
            SliceTargets::Faces(&phi), SliceTargets::Faces(&psi),
        )
        .map_err(err)?;
        let ks = dense_slice_operator(&sc, &a, &b);
        for seed in 0..5 {
            let z = random_section(na, nb, seed);
            let x = vec_of(&z);
            let oracle = 0.5 * re_dot(&x, &(&k * &x));
            let e = rel_err(dirichlet_energy(&a.ops, &b.ops, &z).map_err(err)?, oracle);
            let y = vec_of(&slicewise_laplacian_apply(&sc, &z).map_err(err)?);
            let yo = &ks * &x;
            let s = (&y - &yo).norm() / yo.norm();
            ensure(e < 1e-10 && s < 1e-10, || format!("{na}×{nb}: energy {e:.3e}, slicewise {s:.3e}"))?;
            worst = worst.max(e).max(s);
        }
    }
    Ok(format!("Dirichlet energy and slicewise Laplacian vs dense Kronecker, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 5

fn c5() -> Outcome {
    let start = Instant::now();
    let (ma, mb) = near_isometric(7);
    let problem = Problem::new(&ma, &mb, ConnectionKind::Default, true).map_err(err)?;
    let (na, nb) = problem.shape();
    let (a, b) = (&problem.a.operators, &problem.b.operators);
    let l0 = base_eigenvalue(a, b).map_err(err)?;
    let z0 = Section::random_unit_disk(na, nb, &mut rng(5));
    let pot = PinningPotential::uniform(na, nb);
    let low = SolverConfig { schedule: vec![0.5], base_eigenvalue: Some(l0), grad_tol: 1e-14, ..Default::default() };
    let out = minimize(a, b, &z0, &low, &pot).map_err(err)?;
    let (low_max, low_iter) = (out.section.max_abs(), out.stages[0].iterations);
    ensure(low_max < 1e-3 && low_iter <= 1000, || format!("λ = 0.5λ₀: max|Z| = {low_max:.3e} after {low_iter} iterations"))?;
    let high = SolverConfig { schedule: vec![100.0], base_eigenvalue: Some(l0), ..Default::default() };
    let out = minimize(a, b, &z0, &high, &pot).map_err(err)?;
    let high_max = out.section.max_abs();
    ensure(high_max > 0.5, || format!("λ = 100λ₀ collapsed: max|Z| = {high_max:.3e}"))?;
    let t = within(start, 120.0, "collapse runs")?;
    Ok(format!(
        "{na}×{nb}: 0.5λ₀ → max|Z| {low_max:.1e} in {low_iter} iterations; 100λ₀ → max|Z| {high_max:.2} ({} iterations); {t:.1} s",
        out.stages[0].iterations
    ))
}

// ---------------------------------------------------------------- criterion 6

fn c6() -> Outcome {
    let start = Instant::now();
    let m = near_isometric(7).1;
    let problem = Problem::new(&m, &m, ConnectionKind::Default, true).map_err(err)?;
    let sol = problem.solve(&PairConfig::default()).map_err(err)?;
    let ex = problem.extract(&sol.section).map_err(err)?;
    let t = within(start, 120.0, "identity pipeline")?;
    let mesh = problem.a.mesh();
    let h = mesh.mean_edge_length();
    let mut worst: f64 = 0.0;
    for map in [&ex.a_to_b, &ex.b_to_a] {
        for (v, p) in map.positions(mesh).into_iter().enumerate() {
            worst = worst.max(dist3(p, mesh.positions()[v]) / h);
        }
    }
    let mut area_dev: f64 = 0.0;
    for d in ex.distortion_a_to_b.faces.iter().chain(&ex.distortion_b_to_a.faces) {
        ensure(d.status == FaceStatus::Ok, || format!("face status {:?}", d.status))?;
        area_dev = area_dev.max((d.area_density() - 2.0).abs() / 2.0);
    }
    let multi = ex.a_to_b.multi_zero_count() + ex.b_to_a.multi_zero_count();
    let n = mesh.num_vertices();
    record("identity", problem, sol.section, ex);
    ensure(worst < 0.1, || format!("image {worst:.3} mean edge lengths from its source"))?;
    ensure(area_dev < 0.01, || format!("f^Area deviates {:.3}% from 2", 100.0 * area_dev))?;
    ensure(multi == 0, || format!("{multi} multi-zero slices"))?;
    Ok(format!(
        "{n} vertices: max displacement {worst:.1e} h, max |f^Area−2|/2 {area_dev:.1e}, multi-zero 0%, {t:.1} s"
    ))
}

// ---------------------------------------------------------------- criterion 7

fn c7() -> Outcome {
    let (ma, mb) = near_isometric(10);
    let problem = Problem::new(&ma, &mb, ConnectionKind::Default, true).map_err(err)?;
    let (na, nb) = problem.shape();
    let cfg10 = PairConfig { solver: SolverConfig { schedule: vec![10.0], ..Default::default() }, ..Default::default() };
    let s10 = problem.solve(&cfg10).map_err(err)?;
    let ex10 = problem.extract(&s10.section).map_err(err)?;
    let p10 = 100.0 * (ex10.a_to_b.multi_zero_count() + ex10.b_to_a.multi_zero_count()) as f64 / (na + nb) as f64;
    let cfg100 = PairConfig {
        solver: SolverConfig {
            schedule: vec![100.0],
            base_eigenvalue: Some(s10.minimization.base_eigenvalue),
            ..Default::default()
        },
        ..Default::default()
    };
    let potential = problem.potential(&cfg100).map_err(err)?;
    let s100 = problem.solve_from(s10.section.clone(), &cfg100, potential, Vec::new()).map_err(err)?;
    let ex100 = problem.extract(&s100.section).map_err(err)?;
    let p100 = 100.0 * (ex100.a_to_b.multi_zero_count() + ex100.b_to_a.multi_zero_count()) as f64 / (na + nb) as f64;
    {
        let mut r = REPORTS.lock().unwrap();
        r.push(("near-isometric t=10 A→B".into(), ex10.distortion_a_to_b.clone()));
        r.push(("near-isometric t=10 B→A".into(), ex10.distortion_b_to_a.clone()));
    }
    record("near-isometric t=100", problem, s100.section, ex100);
    ensure(p100 < 1.0, || format!("multi-zero {p100:.2}% at t = 100 (t = 10: {p10:.2}%)"))?;
    ensure(p100 < p10, || format!("multi-zero not lower at t = 100: {p100:.2}% vs {p10:.2}% at t = 10"))?;
    Ok(format!("{na}×{nb}: multi-zero {p10:.2}% at t = 10 → {p100:.2}% at t = 100"))
}

// ---------------------------------------------------------------- criterion 8

fn c8() -> Outcome {
    let solved = SOLVED.lock().unwrap();
    ensure(!solved.is_empty(), || "no converged runs available".into())?;
    let mut worst: f64 = 0.0;
    let mut zeros = 0;
    for (label, problem, z, ex) in solved.iter() {
        // a second pass through the extraction must succeed: homotopy guards never fire
        let view = problem.view(z).map_err(err)?;
        for dir in [Direction::AToB, Direction::BToA] {
            let map = view.map_all(dir).map_err(|e| format!("{label}: {e}"))?;
            worst = worst.max(map.max_residual());
            zeros += map.images.len();
        }
        worst = worst.max(ex.a_to_b.max_residual()).max(ex.b_to_a.max_residual());
    }
    ensure(worst < 1e-8, || format!("zero residual {worst:.3e}"))?;
    let n = 500;
    let h = 1.0 / n as f64;
    let mut r = rng(808);
    let mut far: f64 = 0.0;
    for k in 0..1000 {
        let tri = random_singular_triangle(&mut r);
        let b = find_triangle_zero(&tri).map_err(|e| format!("triangle {k}: {e}"))?;
        ensure(relative_residual(&tri, b) < 1e-8, || format!("triangle {k}: residual"))?;
        let cells = triangle_grid_zero_cells(|bj, bk| tri.interpolant(bj, bk), n);
        let d = cells
            .iter()
            .map(|((cj, ck), _)| ((cj - b[1]).powi(2) + (ck - b[2]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        ensure(d <= h, || format!("triangle {k}: zero {d:.2e} from the nearest winding cell (spacing {h})"))?;
        far = far.max(d);
    }
    Ok(format!(
        "{zeros} extracted zeros, max relative residual {worst:.1e}; 1000 triangles within {:.2} grid spacings of a 500×500 scan",
        far / h
    ))
}

// ---------------------------------------------------------------- criterion 9

fn c9() -> Outcome {
    let mut r = rng(909);
    let mut worst: f64 = 0.0;
    let mut roots = 0;
    for k in 0..100 {
        let q = random_edge_quad(&mut r);
        let peak = q.z.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let zeros = q.zeros();
        let cells = square_grid_zero_cells(|s, t| q.interpolant(s, t), 200);
        ensure(zeros.len() == cells.len(), || format!("face {k}: {} roots vs {} scan cells", zeros.len(), cells.len()))?;
        for &(s, t) in &zeros {
            let res = q.interpolant(s, t).norm() / peak;
            worst = worst.max(res);
            let near = cells.iter().any(|((cs, ct), _)| (cs - s).abs() <= 0.005 && (ct - t).abs() <= 0.005);
            ensure(near, || format!("face {k}: root ({s}, {t}) not in a scan cell"))?;
        }
        roots += zeros.len();
    }
    let solved = SOLVED.lock().unwrap();
    let mut crossings = 0;
    for (_, problem, z, ex) in solved.iter() {
        let view = problem.view(z).map_err(err)?;
        for c in &ex.crossings {
            let q = view.edge_quad(c.edge_a, c.edge_b);
            let peak = q.z.iter().map(|z| z.norm()).fold(0.0, f64::max);
            worst = worst.max(q.interpolant(c.s, c.t).norm() / peak);
        }
        crossings += ex.crossings.len();
    }
    ensure(worst < 1e-9, || format!("crossing residual {worst:.3e}"))?;
    Ok(format!("100 random faces ({roots} roots) match 200×200 scans; {crossings} overlay crossings; max residual {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 10

fn c10() -> Outcome {
    let mut worst_l: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    for (a, b) in [small_pair(), (Side::normalized(uv_sphere(3, 6)), Side::normalized(uv_sphere(4, 7)))] {
        let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
        ensure(na <= 30 && nb <= 30, || format!("{na}×{nb}"))?;
        let k = dense(&a.ops.laplacian).kronecker(&dense(&b.ops.mass)) + dense(&a.ops.mass).kronecker(&dense(&b.ops.laplacian));
        let m = dense(&a.ops.mass).kronecker(&dense(&b.ops.mass));
        let (l_dense, _) = dense_min_eig(&k, &m);
        let l0 = base_eigenvalue(&a.ops, &b.ops).map_err(err)?;
        worst_l = worst_l.max(rel_err(l0, l_dense));
        let phi: Vec<usize> = (0..na).map(|v| (3 * v) % b.mesh.num_faces()).collect();
        let psi: Vec<usize> = (0..nb).map(|w| (5 * w + 1) % a.mesh.num_faces()).collect();
        let sc = build_slice_connection(
            &a.mesh, &a.geom, &a.conn, &b.mesh, &b.geom, &b.conn,
            SliceTargets::Faces(&phi), SliceTargets::Faces(&psi),
        )
        .map_err(err)?;
        let ks = dense_slice_operator(&sc, &a, &b);
        let mass: Vec<f64> = sc.lumped_mass_a().iter().flat_map(|x| sc.lumped_mass_b().iter().map(move |y| x * y)).collect();
        let (lam, vec) = dense_min_eig(&ks, &diag(&mass));
        let (z, report) = min_eigenvector_init(&sc, &SolverConfig::default()).map_err(err)?;
        worst_l = worst_l.max(rel_err(report.eigenvalue, lam));
        worst_a = worst_a.max(subspace_angle(&vec_of(&z), &vec));
    }
    ensure(worst_l < 1e-8 && worst_a < 1e-4, || format!("eigenvalue error {worst_l:.3e}, angle {worst_a:.3e}"))?;
    Ok(format!("λ₀ and initialization eigenpairs: max eigenvalue relative error {worst_l:.1e}, max angle {worst_a:.1e}"))
}

// ---------------------------------------------------------------- criterion 11

fn c11() -> Outcome {
    let base = bumpy(&icosphere(5), 0.05, [1.0, 1.1, 0.95]);
    // the target is a rotated copy, so the nearest-neighbor start disagrees with the landmarks
    let (s, c) = (0.6f64.sin(), 0.6f64.cos());
    let rotated = deform(&base, |p| [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]);
    let picks: Vec<usize> = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        .iter()
        .map(|d: &[f64; 3]| {
            (0..base.num_vertices())
                .max_by(|&i, &j| {
                    let dot = |v: usize| (0..3).map(|k| base.positions()[v][k] * d[k]).sum::<f64>();
                    dot(i).total_cmp(&dot(j))
                })
                .unwrap()
        })
        .collect();
    let landmarks: Vec<(usize, usize)> = picks.iter().map(|&v| (v, v)).collect();
    let problem = Problem::new(&base, &rotated, ConnectionKind::Default, true).map_err(err)?;
    let cfg = PairConfig { landmarks: landmarks.clone(), sigma_a: 1.0, sigma_b: 1.0, ..Default::default() };
    let sol = problem.solve(&cfg).map_err(err)?;
    let ex = problem.extract(&sol.section).map_err(err)?;
    let target = problem.b.mesh();
    let mut worst: f64 = 0.0;
    for &(i, j) in &landmarks {
        let d = geodesic_distance(target, &[j]).map_err(err)?;
        let im = &ex.a_to_b.images[i];
        let f = target.face(im.face);
        let g: f64 = (0..3).map(|c| im.bary[c] * d[f[c]]).sum();
        worst = worst.max(g);
    }
    record("landmarks", problem, sol.section, ex);
    ensure(worst < 0.5, || format!("landmark image {worst:.3} from its target (σ/2 = 0.5)"))?;
    Ok(format!("4 landmarks, σ = 1: max geodesic distance to target {worst:.3} (< 0.5)"))
}

// ---------------------------------------------------------------- criterion 12

fn c12() -> Outcome {
    let start = Instant::now();
    let (ma, mb) = near_isometric(7);
    let dir = tempfile::tempdir().map_err(err)?;
    let problem = Problem::new(&ma, &mb, ConnectionKind::Default, true).map_err(err)?;
    let sol = problem.solve(&PairConfig::default()).map_err(err)?;
    let ex = problem.extract(&sol.section).map_err(err)?;
    ims::cli::write_extraction(dir.path(), &problem, &ex).map_err(err)?;
    sol.section.write(&dir.path().join("section.imsz")).map_err(err)?;
    let t = within(start, 300.0, "full pipeline")?;
    let (na, nb) = problem.shape();
    let stages: Vec<String> = sol.timings.iter().map(|s| format!("{} {:.1}", s.stage, s.seconds)).collect();
    record("desk-scale", problem, sol.section, ex);
    Ok(format!("{na}×{nb} end to end in {t:.1} s ({})", stages.join(", ")))
}

// ---------------------------------------------------------------- criterion 13

fn c13() -> Outcome {
    let reports = REPORTS.lock().unwrap();
    ensure(!reports.is_empty(), || "no maps were computed".into())?;
    for (label, r) in reports.iter() {
        let excess = r.graph_area - r.source_area;
        ensure(r.sandwich_holds(), || {
            format!("{label}: ∫|det| {:.6} ≤ {excess:.6} ≤ ∫½|dφ|² {:.6} violated", r.jacobian_area, r.dirichlet)
        })?;
    }
    Ok(format!("sandwich inequality holds on all {} computed maps", reports.len()))
}

fn main() {
    // `cargo test -- --list` and filters: this target has a single entry point
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let results = [
        criterion(1, "FEM reduction", c1),
        criterion(2, "bundle invariants", c2),
        criterion(3, "gradient", c3),
        criterion(4, "tensor factorization", c4),
        criterion(5, "collapse below threshold", c5),
        criterion(6, "identity self-map", c6),
        criterion(7, "bijectivity vs λ", c7),
        criterion(8, "zero extraction", c8),
        criterion(9, "edge-edge intersections", c9),
        criterion(10, "eigensolver", c10),
        criterion(11, "landmark pinning", c11),
        criterion(12, "desk-scale runtime", c12),
        criterion(13, "distortion sandwich", c13),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
