//! Eigen-solves and the annealed minimizer against dense oracles.

mod common;

use common::*;
use ims::linalg::C64;
use ims::mesh::primitives::{bumpy, icosphere, uv_sphere};
use ims::product::{build_slice_connection, gl_energy_and_gradient, PinningPotential, Section, SliceTargets};
use ims::solve::{base_eigenvalue, collapse_check, min_eigenvector_init, minimize, SolverConfig};
use nalgebra::DMatrix;

fn small_pair() -> (Side, Side) {
    (
        Side::normalized(bumpy(&icosphere(1), 0.15, [1.0, 1.2, 0.9])),
        Side::normalized(uv_sphere(3, 6)),
    )
}

#[test]
fn base_eigenvalue_matches_dense_pencils() {
    let a = Side::normalized(bumpy(&icosphere(3), 0.1, [1.0, 1.3, 0.8]));
    let b = Side::normalized(uv_sphere(8, 12));
    assert!(a.mesh.num_vertices() <= 200 && b.mesh.num_vertices() <= 200);
    let (la, _) = dense_min_eig(&dense(&a.ops.laplacian), &dense(&a.ops.mass));
    let (lb, _) = dense_min_eig(&dense(&b.ops.laplacian), &dense(&b.ops.mass));
    assert!(la > 0.0 && lb > 0.0, "2π bundles admit no parallel section: {la} {lb}");
    let l0 = base_eigenvalue(&a.ops, &b.ops).unwrap();
    assert!(rel_err(l0, la + lb) < 1e-8, "{l0} vs {}", la + lb);
}

fn dense_slice_operator(sc: &ims::product::SliceConnection, a: &Side, b: &Side) -> DMatrix<C64> {
    let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
    let mut k = DMatrix::<C64>::zeros(na * nb, na * nb);
    let (ma, mb) = (sc.lumped_mass_a(), sc.lumped_mass_b());
    for v in 0..na {
        let lb = dense(&ims::bundle::build_fem_matrices(&b.mesh, &b.geom, &sc.b_slice(v)).laplacian);
        for w in 0..nb {
            for w2 in 0..nb {
                k[(v * nb + w, v * nb + w2)] += lb[(w, w2)] * ma[v];
            }
        }
    }
    for w in 0..nb {
        let la = dense(&ims::bundle::build_fem_matrices(&a.mesh, &a.geom, &sc.a_slice(w)).laplacian);
        for v in 0..na {
            for v2 in 0..na {
                k[(v * nb + w, v2 * nb + w)] += la[(v, v2)] * mb[w];
            }
        }
    }
    k
}

#[test]
fn initial_eigenvector_matches_dense_kronecker_solve() {
    let (a, b) = small_pair();
    let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
    assert!(na <= 30 && nb <= 30);
    let phi: Vec<usize> = (0..na).map(|v| (3 * v) % b.mesh.num_faces()).collect();
    let psi: Vec<usize> = (0..nb).map(|w| (5 * w + 1) % a.mesh.num_faces()).collect();
    let sc = build_slice_connection(
        &a.mesh, &a.geom, &a.conn, &b.mesh, &b.geom, &b.conn,
        SliceTargets::Faces(&phi), SliceTargets::Faces(&psi),
    )
    .unwrap();
    let k = dense_slice_operator(&sc, &a, &b);
    let mass: Vec<f64> =
        sc.lumped_mass_a().iter().flat_map(|x| sc.lumped_mass_b().iter().map(move |y| x * y)).collect();
    let (lam, vec) = dense_min_eig(&k, &diag(&mass));
    let config = SolverConfig::default();
    let (z, report) = min_eigenvector_init(&sc, &config).unwrap();
    assert!(report.converged, "residual {}", report.relative_residual);
    assert!(rel_err(report.eigenvalue, lam) < 1e-8);
    assert!(subspace_angle(&vec_of(&z), &vec) < 1e-4);
    assert!((z.max_abs() - 1.0).abs() < 1e-12);
    for w in report.ritz_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10), "Ritz values increased: {} -> {}", w[0], w[1]);
    }
    let (z2, _) = min_eigenvector_init(&sc, &config).unwrap();
    assert_eq!(z, z2, "seeded initialization must be deterministic");
}

#[test]
fn subthreshold_lambda_collapses_to_zero() {
    let (a, b) = small_pair();
    let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
    let z0 = Section::random_unit_disk(na, nb, &mut rng(7));
    assert!(!collapse_check(&z0));
    let pot = PinningPotential::uniform(na, nb);
    let low = SolverConfig { schedule: vec![0.5], grad_tol: 1e-10, ..Default::default() };
    let out = minimize(&a.ops, &b.ops, &z0, &low, &pot).unwrap();
    assert!(out.section.max_abs() < 1e-3, "max |Z| = {}", out.section.max_abs());
    assert!(collapse_check(&out.section));
    let high = SolverConfig { schedule: vec![100.0], ..Default::default() };
    let out = minimize(&a.ops, &b.ops, &z0, &high, &pot).unwrap();
    assert!(!collapse_check(&out.section));
}

#[test]
fn converged_section_satisfies_the_critical_point_balance() {
    // At a critical point ⟨Z, ∇E⟩ = ⟨Z, K Z⟩ + λ Σ U |Z|² m vanishes.
    let (a, b) = small_pair();
    let (na, nb) = (a.mesh.num_vertices(), b.mesh.num_vertices());
    let z0 = Section::random_unit_disk(na, nb, &mut rng(11));
    let pot = PinningPotential::uniform(na, nb);
    let config = SolverConfig { schedule: vec![10.0, 100.0], grad_tol: 1e-6, max_iter: 5000, ..Default::default() };
    let out = minimize(&a.ops, &b.ops, &z0, &config, &pot).unwrap();
    assert_eq!(out.stages.len(), 2);
    for st in &out.stages {
        assert!(st.converged, "{:?}", st.failure);
        assert!(st.gradient_check < 1e-4);
        assert!(st.initial_energy.is_finite());
        assert!(st.energy < st.initial_energy);
        for w in st.trace.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }
    let lambda = out.stages[1].lambda;
    let ev = gl_energy_and_gradient(&a.ops, &b.ops, &out.section, lambda, &pot).unwrap();
    let zz = out.section.inner(&ev.gradient);
    assert!(zz.abs() < 1e-6 * 2.0 * ev.dirichlet, "{zz} vs {}", ev.dirichlet);
    let mut csv = Vec::new();
    out.write_trace_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("stage,iter,energy,grad_norm\n"));
    assert_eq!(text.lines().count(), 1 + out.stages.iter().map(|s| s.trace.len()).sum::<usize>());
}
