//! Two-level coarse-to-fine acceleration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extract::{point_weights, Direction, ProductView};
use crate::linalg::C64;
use crate::mesh::{fill_boundaries, FaceIndex, InputMap, SurfacePoint, TriangleMesh};
use crate::pipeline::{Initialization, PairConfig, PairSolution, PreparedSurface, Problem};
use crate::product::{CurvePair, Section};

/// Working-triangulation location on `coarse` of the point closest to `q`.
fn locate(coarse: &PreparedSurface, index: &FaceIndex, q: [f64; 3]) -> SurfacePoint {
    let hit = index.closest(q);
    coarse.to_work(SurfacePoint::new(hit.face, hit.bary))
}

/// Prepares the fine surface with its anchor face inside the coarse anchor face's
/// closest-point preimage, and verifies the containment.
pub fn prepare_fine(coarse: &PreparedSurface, fine_mesh: &TriangleMesh, idt: bool) -> Result<PreparedSurface> {
    let fine = PreparedSurface::with_anchor(fine_mesh, coarse.kind, idt, Some(coarse.anchor_point()))?;
    let index = FaceIndex::new(coarse.mesh());
    let back = locate(coarse, &index, fine.anchor_point());
    if back.face != coarse.anchor_face {
        return Err(Error::Input(format!(
            "fine anchor face {} projects to coarse face {}, not the coarse anchor {}; the coarse and fine meshes do not overlap",
            fine.anchor_face, back.face, coarse.anchor_face
        )));
    }
    Ok(fine)
}

/// Builds the fine problem matching a coarse one.
pub fn fine_problem(coarse: &Problem, fine_a: &TriangleMesh, fine_b: &TriangleMesh, idt: bool) -> Result<Problem> {
    let a = prepare_fine(&coarse.a, fine_a, idt).map_err(|e| e.in_stage("preparing fine mesh A", ""))?;
    let b = prepare_fine(&coarse.b, fine_b, idt).map_err(|e| e.in_stage("preparing fine mesh B", ""))?;
    Ok(Problem { a, b })
}

/// Interpolation weights on the coarse working triangulation for every fine vertex.
fn fine_weights(coarse: &PreparedSurface, fine: &PreparedSurface) -> Vec<([usize; 3], [C64; 3])> {
    let index = FaceIndex::new(coarse.mesh());
    fine.mesh()
        .positions()
        .par_iter()
        .map(|&q| {
            let p = locate(coarse, &index, q);
            (
                coarse.work().face(p.face),
                point_weights(coarse.work(), &coarse.connection, p.face, p.bary),
            )
        })
        .collect()
}

/// Transfers a coarse section to the fine product by closest points and product FEM
/// interpolation. Needs globally trivialized fibers on both levels.
pub fn upsample_section(coarse: &Problem, z: &Section, fine: &Problem) -> Result<Section> {
    for (c, f) in [(&coarse.a, &fine.a), (&coarse.b, &fine.b)] {
        if !c.kind.is_globally_trivial() || !f.kind.is_globally_trivial() {
            return Err(Error::Input(format!(
                "direct section transfer needs globally trivialized fibers, but the bundle is `{}`; use geometric_initialization instead",
                c.kind.name()
            )));
        }
    }
    z.check_shape(coarse.a.num_vertices(), coarse.b.num_vertices())?;
    let wa = fine_weights(&coarse.a, &fine.a);
    let wb = fine_weights(&coarse.b, &fine.b);
    let nb = wb.len();
    let mut out = Section::zeros(wa.len(), nb);
    out.data_mut().par_chunks_mut(nb).enumerate().for_each(|(i, row)| {
        let (va, ca) = wa[i];
        for (j, slot) in row.iter_mut().enumerate() {
            let (vb, cb) = wb[j];
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..3 {
                for d in 0..3 {
                    acc += ca[c] * cb[d] * z.get(va[c], vb[d]);
                }
            }
            *slot = acc;
        }
    });
    Ok(out)
}

/// Fine vertex → closest coarse point → its image under the coarse section → closest fine face.
fn compose(
    view: &ProductView,
    dir: Direction,
    coarse_src: &PreparedSurface,
    coarse_tgt: &PreparedSurface,
    fine_src: &PreparedSurface,
    fine_tgt: &PreparedSurface,
) -> Result<InputMap> {
    let src_index = FaceIndex::new(coarse_src.mesh());
    let tgt_index = FaceIndex::new(fine_tgt.mesh());
    let hits = fine_src
        .mesh()
        .positions()
        .par_iter()
        .map(|&q| {
            let p = locate(coarse_src, &src_index, q);
            let image = match view.map_point(dir, p.face, p.bary) {
                Ok(x) => x.image,
                Err(Error::Extraction(_)) => {
                    // degenerate slice: fall back to the image of the dominant corner
                    let c = (0..3).max_by(|&a, &b| p.bary[a].total_cmp(&p.bary[b])).unwrap();
                    view.map_vertex(dir, coarse_src.work().face(p.face)[c])?.image
                }
                Err(e) => return Err(e),
            };
            let on_input = coarse_tgt.to_input(SurfacePoint::new(image.face, image.bary));
            let hit = tgt_index.closest(on_input.position(coarse_tgt.mesh()));
            Ok((hit.face, hit.bary))
        })
        .collect::<Result<Vec<_>>>()?;
    let (faces, barycentric) = hits.into_iter().unzip();
    Ok(InputMap { faces, barycentric })
}

/// Fine initial maps composed from the coarse correspondence and closest-point projections.
pub fn geometric_initialization(coarse: &Problem, z: &Section, fine: &Problem) -> Result<(InputMap, InputMap)> {
    let view = coarse.view(z)?;
    let ab = compose(&view, Direction::AToB, &coarse.a, &coarse.b, &fine.a, &fine.b)?;
    let ba = compose(&view, Direction::BToA, &coarse.b, &coarse.a, &fine.b, &fine.a)?;
    Ok((ab, ba))
}

/// Nearest coarse vertex of every vertex of `fine` (both in their normalized frames).
fn nearest_coarse_vertex(coarse: &PreparedSurface, fine: &TriangleMesh) -> Result<Vec<usize>> {
    let mut fine = fill_boundaries(fine)?.mesh;
    fine.normalize();
    let index = FaceIndex::new(coarse.mesh());
    Ok(fine
        .positions()
        .iter()
        .map(|&q| {
            let hit = index.closest(q);
            let c = (0..3).max_by(|&a, &b| hit.bary[a].total_cmp(&hit.bary[b])).unwrap();
            coarse.mesh().face(hit.face)[c]
        })
        .collect())
}

/// The configuration with landmark and curve vertices moved to the nearest coarse vertices.
fn coarse_constraints(coarse: &Problem, fine_a: &TriangleMesh, fine_b: &TriangleMesh, config: &PairConfig) -> Result<PairConfig> {
    if config.landmarks.is_empty() && config.curves.is_empty() {
        return Ok(config.clone());
    }
    let (ta, tb) = (nearest_coarse_vertex(&coarse.a, fine_a)?, nearest_coarse_vertex(&coarse.b, fine_b)?);
    let pick = |table: &[usize], v: usize, side: &str| {
        table.get(v).copied().ok_or_else(|| Error::Input(format!("constraint vertex {v} is not a vertex of fine mesh {side}")))
    };
    let landmarks = config
        .landmarks
        .iter()
        .map(|&(i, j)| Ok((pick(&ta, i, "A")?, pick(&tb, j, "B")?)))
        .collect::<Result<Vec<_>>>()?;
    let curves = config
        .curves
        .iter()
        .map(|c| {
            let mut a = c.a.iter().map(|&v| pick(&ta, v, "A")).collect::<Result<Vec<_>>>()?;
            let mut b = c.b.iter().map(|&v| pick(&tb, v, "B")).collect::<Result<Vec<_>>>()?;
            a.dedup();
            b.dedup();
            Ok(CurvePair { a, b })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairConfig { landmarks, curves, ..config.clone() })
}

/// Outcome of the staged solve.
#[derive(Clone, Debug)]
pub struct StagedSolution {
    pub coarse: Problem,
    pub coarse_solution: PairSolution,
    pub fine: Problem,
    pub fine_solution: PairSolution,
}

/// Solves on the coarse pair, transfers to the fine pair and optimizes there.
///
/// Globally trivial bundles transfer the section directly; other bundles go through
/// the composed initial maps and a fresh eigenvector start.
pub fn solve_staged(
    coarse_a: &TriangleMesh,
    coarse_b: &TriangleMesh,
    fine_a: &TriangleMesh,
    fine_b: &TriangleMesh,
    config: &PairConfig,
) -> Result<StagedSolution> {
    if matches!(config.init, Initialization::Maps { .. }) {
        return Err(Error::Input("initial maps refer to the fine meshes and cannot seed the coarse solve".into()));
    }
    let coarse = Problem::new(coarse_a, coarse_b, config.connection, config.idt)?;
    let coarse_config = coarse_constraints(&coarse, fine_a, fine_b, config)?;
    let coarse_solution = coarse.solve(&coarse_config).map_err(|e| e.in_stage("coarse solve", ""))?;
    let fine = fine_problem(&coarse, fine_a, fine_b, config.idt)?;
    let fine_solution = if config.connection.is_globally_trivial() {
        let z0 = upsample_section(&coarse, &coarse_solution.section, &fine)?;
        let potential = fine.potential(config)?;
        fine.solve_from(z0, config, potential, Vec::new())?
    } else {
        let (a_to_b, b_to_a) = geometric_initialization(&coarse, &coarse_solution.section, &fine)?;
        let cfg = PairConfig { init: Initialization::Maps { a_to_b, b_to_a }, ..config.clone() };
        fine.solve(&cfg)?
    };
    Ok(StagedSolution { coarse, coarse_solution, fine, fine_solution })
}
