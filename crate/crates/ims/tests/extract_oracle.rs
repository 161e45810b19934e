mod common;

use common::*;
use ims::extract::{find_triangle_zero, relative_residual, whitney_phase, Direction, ZERO_TOL};
use ims::mesh::primitives::{bumpy, icosphere};
use ims::pipeline::{ConnectionKind, PairConfig, Problem};
use rand::Rng;
use std::sync::OnceLock;

#[test]
fn homotopy_zero_lies_in_a_winding_cell_of_a_grid_scan() {
    let n = 500;
    let h = 1.0 / n as f64;
    let mut r = rng(11);
    for _ in 0..100 {
        let tri = random_singular_triangle(&mut r);
        let b = find_triangle_zero(&tri).unwrap();
        assert!(relative_residual(&tri, b) < ZERO_TOL);
        let cells = triangle_grid_zero_cells(|bj, bk| tri.interpolant(bj, bk), n);
        let total: i32 = cells.iter().map(|c| c.1).sum();
        assert_eq!(total, tri.index(), "grid windings {cells:?}");
        let nearest = cells
            .iter()
            .map(|((cj, ck), _)| ((cj - b[1]).powi(2) + (ck - b[2]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= h, "zero {b:?} is {nearest} from every winding cell");
    }
}

#[test]
fn whitney_phase_matches_quadrature_along_the_segment() {
    let mut r = rng(5);
    for _ in 0..200 {
        let rho = [0, 1, 2].map(|_| r.random_range(-3.0..3.0));
        let mut p = [r.random::<f64>(), r.random::<f64>(), r.random::<f64>()];
        let s: f64 = p.iter().sum();
        p = p.map(|x| x / s);
        let closed = whitney_phase(rho, p);
        for c in 0..3 {
            // ∫ Σ_e ρ_e (b_a db_b − b_b db_a) along b(τ) = e_c + τ (p − e_c), composite Simpson
            let start: [f64; 3] = std::array::from_fn(|k| if k == c { 1.0 } else { 0.0 });
            let d: [f64; 3] = std::array::from_fn(|k| p[k] - start[k]);
            let integrand = |tau: f64| {
                let b: [f64; 3] = std::array::from_fn(|k| start[k] + tau * d[k]);
                (0..3).map(|e| rho[e] * (b[e] * d[(e + 1) % 3] - b[(e + 1) % 3] * d[e])).sum::<f64>()
            };
            let m = 64;
            let mut q = integrand(0.0) + integrand(1.0);
            for k in 1..m {
                q += integrand(k as f64 / m as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            q /= 3.0 * m as f64;
            assert!((q - closed[c]).abs() < 1e-10, "corner {c}: {q} vs {}", closed[c]);
        }
    }
}

#[test]
fn edge_quad_zeros_match_a_dense_parameter_scan() {
    let mut r = rng(21);
    let mut with_zero = 0;
    for _ in 0..100 {
        let q = random_edge_quad(&mut r);
        let peak = q.z.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let zeros = q.zeros();
        let cells = square_grid_zero_cells(|s, t| q.interpolant(s, t), 200);
        assert_eq!(zeros.len(), cells.len(), "roots {zeros:?} vs scan {cells:?}");
        assert_eq!(cells.iter().map(|c| c.1).sum::<i32>(), q.index());
        for &(s, t) in &zeros {
            assert!(q.interpolant(s, t).norm() / peak < 1e-9);
            let near = cells.iter().any(|((cs, ct), _)| (cs - s).abs() <= 0.005 && (ct - t).abs() <= 0.005);
            assert!(near, "root ({s}, {t}) outside the scanned cells {cells:?}");
        }
        with_zero += usize::from(!zeros.is_empty());
    }
    assert!(with_zero > 10);
}

struct Solved {
    problem: Problem,
    section: ims::product::Section,
}

fn solved_pair() -> &'static Solved {
    static CELL: OnceLock<Solved> = OnceLock::new();
    CELL.get_or_init(|| {
        let a = icosphere(4);
        let b = bumpy(&icosphere(4), 0.04, [1.0, 1.05, 0.97]);
        let problem = Problem::new(&a, &b, ConnectionKind::Default, true).unwrap();
        let section = problem.solve(&PairConfig::default()).unwrap().section;
        Solved { problem, section }
    })
}

#[test]
fn point_map_at_a_vertex_equals_the_vertex_map() {
    let s = solved_pair();
    let view = s.problem.view(&s.section).unwrap();
    let mesh = s.problem.a.work();
    for f in (0..mesh.num_faces()).step_by(17) {
        for c in 0..3 {
            let mut bary = [0.0; 3];
            bary[c] = 1.0;
            let v = mesh.face(f)[c];
            let p = view.map_point(Direction::AToB, f, bary).unwrap().image;
            let q = view.map_vertex(Direction::AToB, v).unwrap().image;
            assert_eq!(p.face, q.face);
            for k in 0..3 {
                assert!((p.bary[k] - q.bary[k]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn point_images_move_continuously_along_edges() {
    let s = solved_pair();
    let view = s.problem.view(&s.section).unwrap();
    let (ma, mb) = (s.problem.a.work(), s.problem.b.work());
    let h = mb.mean_edge_length();
    for f in (0..ma.num_faces()).step_by(23) {
        let ends = [
            view.map_point(Direction::AToB, f, [1.0, 0.0, 0.0]).unwrap().image.position(mb),
            view.map_point(Direction::AToB, f, [0.0, 1.0, 0.0]).unwrap().image.position(mb),
        ];
        let mid = view.map_point(Direction::AToB, f, [0.5, 0.5, 0.0]).unwrap().image.position(mb);
        for e in ends {
            assert!(dist3(mid, e) <= 2.0 * h, "face {f}: midpoint image {} edge lengths away", dist3(mid, e) / h);
        }
    }
}

#[test]
fn maps_in_both_directions_are_approximate_inverses() {
    let s = solved_pair();
    let ex = s.problem.extract(&s.section).unwrap();
    let (ma, mb) = (s.problem.a.mesh(), s.problem.b.mesh());
    let h = ma.mean_edge_length();
    assert!(ex.a_to_b.max_residual() < 1e-8 && ex.b_to_a.max_residual() < 1e-8);
    // A → B by the row map, then back to A by interpolating the column map's vertex images
    let back_pos = ex.b_to_a.positions(ma);
    let good = ex
        .a_to_b
        .images
        .iter()
        .enumerate()
        .filter(|(v, im)| {
            let f = mb.face(im.face);
            let mut p = [0.0; 3];
            for c in 0..3 {
                for k in 0..3 {
                    p[k] += im.bary[c] * back_pos[f[c]][k];
                }
            }
            dist3(p, ma.positions()[*v]) < 2.0 * h
        })
        .count();
    assert!(good as f64 >= 0.95 * ma.num_vertices() as f64, "{good} of {}", ma.num_vertices());
    assert!(ex.distortion_a_to_b.sandwich_holds() && ex.distortion_b_to_a.sandwich_holds());
}

#[test]
fn overlay_crossings_satisfy_their_quad_equation() {
    let s = solved_pair();
    let view = s.problem.view(&s.section).unwrap();
    let crossings = view.edge_edge_intersections();
    assert!(!crossings.is_empty());
    for c in &crossings {
        let q = view.edge_quad(c.edge_a, c.edge_b);
        let peak = q.z.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(q.interpolant(c.s, c.t).norm() / peak < 1e-9);
        assert!((0.0..=1.0).contains(&c.s) && (0.0..=1.0).contains(&c.t));
    }
    // brute force over a sample of product faces: every face with a nonzero index is listed
    let (ea, eb) = (s.problem.a.work().num_edges(), s.problem.b.work().num_edges());
    for e in (0..ea).step_by(7) {
        for f in (0..eb).step_by(5) {
            let q = view.edge_quad(e, f);
            if q.index() != 0 {
                assert!(crossings.iter().any(|c| c.edge_a == e && c.edge_b == f));
            }
        }
    }
}
