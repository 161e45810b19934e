use super::TriangleMesh;
use crate::error::{Error, Result};

/// A closed mesh obtained by capping every boundary loop with a triangle fan.
#[derive(Clone, Debug)]
pub struct FilledMesh {
    pub mesh: TriangleMesh,
    /// Faces added by the fans.
    pub filled_faces: Vec<usize>,
    /// The original boundary loops as closed vertex cycles (first vertex repeated last).
    pub boundary_curves: Vec<Vec<usize>>,
    pub original_vertices: usize,
    pub original_faces: usize,
}

impl FilledMesh {
    pub fn is_filled_face(&self, f: usize) -> bool {
        f >= self.original_faces
    }
}

/// Caps each boundary loop with a fan around a new vertex at the loop centroid.
pub fn fill_boundaries(mesh: &TriangleMesh) -> Result<FilledMesh> {
    let original_vertices = mesh.num_vertices();
    let original_faces = mesh.num_faces();
    if mesh.is_closed() {
        return Ok(FilledMesh {
            mesh: mesh.clone(),
            filled_faces: Vec::new(),
            boundary_curves: Vec::new(),
            original_vertices,
            original_faces,
        });
    }
    let mut positions = mesh.positions().to_vec();
    let mut faces = mesh.faces().to_vec();
    let mut curves = Vec::new();
    for cycle in mesh.boundary_loops() {
        if cycle.len() < 3 {
            return Err(Error::DegenerateBoundary(cycle.len()));
        }
        let n = cycle.len() as f64;
        let apex = [0, 1, 2].map(|k| cycle.iter().map(|&v| positions[v][k]).sum::<f64>() / n);
        positions.push(apex);
        let a = positions.len() - 1;
        for w in 0..cycle.len() {
            let (u, v) = (cycle[w], cycle[(w + 1) % cycle.len()]);
            faces.push([v, u, a]);
        }
        let mut closed = cycle.clone();
        closed.push(cycle[0]);
        curves.push(closed);
    }
    // Keep the input's intrinsic lengths on original edges; fan edges are Euclidean.
    let original = mesh;
    let filled = TriangleMesh::with_lengths(positions.clone(), faces, |u, v| {
        if u < original_vertices && v < original_vertices {
            if let Some(h) = original.find_halfedge(u, v).or_else(|| original.find_halfedge(v, u)) {
                return original.halfedge_length(h);
            }
        }
        super::dist(&positions[u], &positions[v])
    })?;
    let chi = filled.euler_characteristic();
    if chi != 2 || !filled.is_closed() {
        return Err(Error::Topology {
            message: "boundary filling did not produce a closed genus-zero surface".into(),
            chi,
        });
    }
    Ok(FilledMesh {
        filled_faces: (original_faces..filled.num_faces()).collect(),
        mesh: filled,
        boundary_curves: curves,
        original_vertices,
        original_faces,
    })
}
