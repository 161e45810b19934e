//! Texture and geometry transfer through a vertex map.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use super::map::CorrespondenceMap;
use crate::error::{Error, Result};
use crate::mesh::{write_obj, TriangleMesh};

/// Longitude/latitude coordinates of each vertex seen from the area-weighted centroid.
pub fn spherical_uvs(mesh: &TriangleMesh) -> Vec<[f64; 2]> {
    let mut c = [0.0; 3];
    let mut w = 0.0;
    for f in 0..mesh.num_faces() {
        let a = mesh.embedded_face_area(f);
        let m = mesh.face_centroid(f);
        for k in 0..3 {
            c[k] += a * m[k];
        }
        w += a;
    }
    let c = if w > 0.0 { c.map(|x| x / w) } else { c };
    mesh.positions()
        .iter()
        .map(|p| {
            let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(1e-300);
            [d[1].atan2(d[0]) / TAU + 0.5, (d[2] / r).clamp(-1.0, 1.0).acos() / PI]
        })
        .collect()
}

fn check(source: &TriangleMesh, target: &TriangleMesh, map: &CorrespondenceMap) -> Result<()> {
    if map.images.len() != source.num_vertices() || map.target_vertices != target.num_vertices() {
        return Err(Error::Dimension(format!(
            "map is {}→{} vertices but the meshes have {} and {}",
            map.images.len(),
            map.target_vertices,
            source.num_vertices(),
            target.num_vertices()
        )));
    }
    if let Some(im) = map.images.iter().find(|im| im.face >= target.num_faces()) {
        return Err(Error::Dimension(format!("map image face {} out of range", im.face)));
    }
    Ok(())
}

/// Texture coordinates for the source vertices, pulled back from per-vertex target UVs.
pub fn pull_back_uvs(target_uvs: &[[f64; 2]], target: &TriangleMesh, map: &CorrespondenceMap) -> Vec<[f64; 2]> {
    map.images
        .iter()
        .map(|im| {
            let f = target.face(im.face);
            let mut uv = [0.0; 2];
            for c in 0..3 {
                uv[0] += im.bary[c] * target_uvs[f[c]][0];
                uv[1] += im.bary[c] * target_uvs[f[c]][1];
            }
            uv
        })
        .collect()
}

/// Writes the source mesh with texture coordinates taken from the target's parameterization
/// (spherical coordinates when `target_uvs` is `None`).
pub fn write_texture_transfer(
    path: &Path,
    source: &TriangleMesh,
    target: &TriangleMesh,
    map: &CorrespondenceMap,
    target_uvs: Option<&[[f64; 2]]>,
) -> Result<()> {
    check(source, target, map)?;
    let own;
    let uvs = match target_uvs {
        Some(u) => u,
        None => {
            own = spherical_uvs(target);
            &own
        }
    };
    let pulled = pull_back_uvs(uvs, target, map);
    write_obj(path, source.positions(), source.faces(), Some(&pulled))
}

/// Writes the source connectivity with every vertex moved to its image on the target.
pub fn write_geometry_transfer(path: &Path, source: &TriangleMesh, target: &TriangleMesh, map: &CorrespondenceMap) -> Result<()> {
    check(source, target, map)?;
    write_obj(path, &map.positions(target), source.faces(), None)
}
