//! Procedural meshes for tests, examples and benchmarks.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{cross, dot, sub, TriangleMesh};

/// Geodesic sphere: each icosahedron face split into `freq²` triangles,
/// vertices projected to the unit sphere. Has `10·freq² + 2` vertices.
pub fn icosphere(freq: usize) -> TriangleMesh {
    assert!(freq >= 1);
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let base_faces: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut positions: Vec<[f64; 3]> = Vec::new();
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut faces = Vec::new();
    for tri in base_faces {
        let mut vid = |i: usize, j: usize| -> usize {
            let w = [freq - i - j, i, j];
            let mut key: Vec<(usize, usize)> = (0..3).filter(|&c| w[c] > 0).map(|c| (tri[c], w[c])).collect();
            key.sort();
            *index.entry(key).or_insert_with(|| {
                let p: [f64; 3] = [0, 1, 2].map(|k| (0..3).map(|c| w[c] as f64 * base[tri[c]][k]).sum::<f64>());
                let n = dot(&p, &p).sqrt();
                positions.push(p.map(|x| x / n));
                positions.len() - 1
            })
        };
        for i in 0..freq {
            for j in 0..freq - i {
                let a = vid(i, j);
                let b = vid(i + 1, j);
                let c = vid(i, j + 1);
                faces.push([a, b, c]);
                if i + j + 1 < freq {
                    let d = vid(i + 1, j + 1);
                    faces.push([b, d, c]);
                }
            }
        }
    }
    orient_outward(&positions, &mut faces);
    TriangleMesh::new(positions, faces).expect("icosphere is a valid mesh")
}

/// Latitude-longitude sphere with `rings` interior latitude circles of `segments` vertices.
pub fn uv_sphere(rings: usize, segments: usize) -> TriangleMesh {
    assert!(rings >= 1 && segments >= 3);
    let mut positions = vec![[0.0, 0.0, 1.0]];
    for r in 1..=rings {
        let theta = PI * r as f64 / (rings + 1) as f64;
        for s in 0..segments {
            let phi = 2.0 * PI * s as f64 / segments as f64;
            positions.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    positions.push([0.0, 0.0, -1.0]);
    let south = positions.len() - 1;
    let v = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, v(1, s), v(1, s + 1)]);
        faces.push([south, v(rings, s + 1), v(rings, s)]);
    }
    for r in 1..rings {
        for s in 0..segments {
            faces.push([v(r, s), v(r + 1, s), v(r + 1, s + 1)]);
            faces.push([v(r, s), v(r + 1, s + 1), v(r, s + 1)]);
        }
    }
    orient_outward(&positions, &mut faces);
    TriangleMesh::new(positions, faces).expect("uv sphere is a valid mesh")
}

pub fn torus(major_segments: usize, minor_segments: usize, major_radius: f64, minor_radius: f64) -> TriangleMesh {
    let mut positions = Vec::new();
    for i in 0..major_segments {
        let u = 2.0 * PI * i as f64 / major_segments as f64;
        for j in 0..minor_segments {
            let w = 2.0 * PI * j as f64 / minor_segments as f64;
            let r = major_radius + minor_radius * w.cos();
            positions.push([r * u.cos(), r * u.sin(), minor_radius * w.sin()]);
        }
    }
    let v = |i: usize, j: usize| (i % major_segments) * minor_segments + j % minor_segments;
    let mut faces = Vec::new();
    for i in 0..major_segments {
        for j in 0..minor_segments {
            faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            faces.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    TriangleMesh::new(positions, faces).expect("torus is a valid mesh")
}

/// Planar unit disk: a center vertex and `rings` concentric circles of `boundary` vertices.
pub fn disk(boundary: usize, rings: usize) -> TriangleMesh {
    let mut positions = vec![[0.0, 0.0, 0.0]];
    for r in 1..=rings {
        let rad = r as f64 / rings as f64;
        for s in 0..boundary {
            let phi = 2.0 * PI * (s as f64 + 0.5 * (r % 2) as f64) / boundary as f64;
            positions.push([rad * phi.cos(), rad * phi.sin(), 0.0]);
        }
    }
    let v = |r: usize, s: usize| 1 + (r - 1) * boundary + s % boundary;
    let mut faces = Vec::new();
    for s in 0..boundary {
        faces.push([0, v(1, s), v(1, s + 1)]);
    }
    for r in 1..rings {
        for s in 0..boundary {
            faces.push([v(r, s), v(r + 1, s), v(r + 1, s + 1)]);
            faces.push([v(r, s), v(r + 1, s + 1), v(r, s + 1)]);
        }
    }
    TriangleMesh::new(positions, faces).expect("disk is a valid mesh")
}

/// Open cylinder of unit radius with two boundary circles.
pub fn cylinder(segments: usize, rings: usize, height: f64) -> TriangleMesh {
    let mut positions = Vec::new();
    for r in 0..rings {
        let z = height * r as f64 / (rings - 1) as f64;
        for s in 0..segments {
            let phi = 2.0 * PI * s as f64 / segments as f64;
            positions.push([phi.cos(), phi.sin(), z]);
        }
    }
    let v = |r: usize, s: usize| r * segments + s % segments;
    let mut faces = Vec::new();
    for r in 0..rings - 1 {
        for s in 0..segments {
            faces.push([v(r, s), v(r, s + 1), v(r + 1, s + 1)]);
            faces.push([v(r, s), v(r + 1, s + 1), v(r + 1, s)]);
        }
    }
    TriangleMesh::new(positions, faces).expect("cylinder is a valid mesh")
}

/// Planar `width × height` rectangle split into `nx × ny` cells, two triangles each.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> TriangleMesh {
    let mut positions = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64, 0.0]);
        }
    }
    let v = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            faces.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    TriangleMesh::new(positions, faces).expect("grid is a valid mesh")
}

/// Axis-aligned unit cube surface, two triangles per side.
pub fn cube() -> TriangleMesh {
    let positions: Vec<[f64; 3]> = (0..8)
        .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let mut faces: Vec<[usize; 3]> = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    orient_outward(&positions, &mut faces);
    TriangleMesh::new(positions, faces).expect("cube is a valid mesh")
}

/// Copy of `mesh` with every vertex moved by `f`; connectivity is kept.
pub fn deform(mesh: &TriangleMesh, f: impl Fn([f64; 3]) -> [f64; 3]) -> TriangleMesh {
    let positions = mesh.positions().iter().map(|&p| f(p)).collect();
    TriangleMesh::new(positions, mesh.faces().to_vec()).expect("deformation keeps a valid mesh")
}

/// Star-shaped smooth bump field on the sphere used to produce non-symmetric shapes.
pub fn bumpy(mesh: &TriangleMesh, amplitude: f64, stretch: [f64; 3]) -> TriangleMesh {
    deform(mesh, |p| {
        let r = 1.0 + amplitude * ((3.0 * p[0]).sin() * (2.0 * p[1] + 0.5).cos() + 0.5 * (4.0 * p[2] + 1.0).sin());
        [p[0] * r * stretch[0], p[1] * r * stretch[1], p[2] * r * stretch[2]]
    })
}

fn orient_outward(positions: &[[f64; 3]], faces: &mut [[usize; 3]]) {
    let n = positions.len() as f64;
    let center = [0, 1, 2].map(|k| positions.iter().map(|p| p[k]).sum::<f64>() / n);
    for f in faces.iter_mut() {
        let [a, b, c] = f.map(|v| positions[v]);
        let normal = cross(&sub(&b, &a), &sub(&c, &a));
        if dot(&normal, &sub(&a, &center)) < 0.0 {
            f.swap(1, 2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for k in 1..6 {
            let m = icosphere(k);
            assert_eq!(m.num_vertices(), 10 * k * k + 2);
            assert_eq!(m.num_faces(), 20 * k * k);
            assert_eq!(m.euler_characteristic(), 2);
        }
    }

    #[test]
    fn sphere_area_approaches_4pi() {
        let m = icosphere(16);
        assert!((m.total_area() - 4.0 * PI).abs() < 0.02);
        let u = uv_sphere(30, 60);
        assert!((u.total_area() - 4.0 * PI).abs() < 0.03);
    }

    #[test]
    fn primitive_topology() {
        assert_eq!(torus(10, 6, 1.0, 0.3).euler_characteristic(), 0);
        assert_eq!(cylinder(10, 4, 1.0).boundary_loops().len(), 2);
        assert_eq!(grid(3, 2, 1.0, 1.0).boundary_loops()[0].len(), 10);
        assert!((cube().total_area() - 6.0).abs() < 1e-14);
    }
}
