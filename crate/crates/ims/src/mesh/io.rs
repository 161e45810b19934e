use std::fmt::Write as _;
use std::path::Path;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Reads `v` and `f` records of a Wavefront OBJ file, keeping the file's vertex order.
pub fn parse_obj(text: &str) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let coords: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Format(format!("line {}: bad vertex coordinate ({e})", lineno + 1)))?;
                if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Format(format!("line {}: vertex needs three finite coordinates", lineno + 1)));
                }
                positions.push([coords[0], coords[1], coords[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| resolve_index(t, positions.len(), lineno + 1))
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::Format(format!(
                        "line {}: face has {} vertices; only triangles are supported",
                        lineno + 1,
                        idx.len()
                    )));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    if positions.is_empty() || faces.is_empty() {
        return Err(Error::Format("no vertices or faces found".into()));
    }
    for (f, t) in faces.iter().enumerate() {
        if t.iter().any(|&v| v >= positions.len()) {
            return Err(Error::Format(format!("face {f} references vertex beyond {}", positions.len())));
        }
    }
    Ok((positions, faces))
}

fn resolve_index(token: &str, seen: usize, lineno: usize) -> Result<usize> {
    let first = token.split('/').next().unwrap_or("");
    let i: i64 = first
        .parse()
        .map_err(|_| Error::Format(format!("line {lineno}: bad face index '{token}'")))?;
    match i {
        0 => Err(Error::Format(format!("line {lineno}: OBJ indices are 1-based"))),
        i if i > 0 => Ok(i as usize - 1),
        i if (-i) as usize <= seen => Ok((seen as i64 + i) as usize),
        _ => Err(Error::Format(format!("line {lineno}: relative index {i} out of range"))),
    }
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let (positions, faces) = parse_obj(&text)?;
    TriangleMesh::new(positions, faces)
}

/// Loads an OBJ, checks it is genus zero once boundaries are capped, and scales
/// it to unit area with its area-weighted centroid at the origin.
pub fn load_and_normalize(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let mut mesh = load_obj(path)?;
    mesh.require_genus_zero()?;
    mesh.normalize();
    Ok(mesh)
}

/// Writes an OBJ with optional per-vertex texture coordinates.
pub fn write_obj(
    path: impl AsRef<Path>,
    positions: &[[f64; 3]],
    faces: &[[usize; 3]],
    uvs: Option<&[[f64; 2]]>,
) -> Result<()> {
    let mut s = String::new();
    for p in positions {
        let _ = writeln!(s, "v {:.12} {:.12} {:.12}", p[0], p[1], p[2]);
    }
    if let Some(uvs) = uvs {
        for t in uvs {
            let _ = writeln!(s, "vt {:.12} {:.12}", t[0], t[1]);
        }
    }
    for f in faces {
        let [a, b, c] = f.map(|v| v + 1);
        if uvs.is_some() {
            let _ = writeln!(s, "f {a}/{a} {b}/{b} {c}/{c}");
        } else {
            let _ = writeln!(s, "f {a} {b} {c}");
        }
    }
    std::fs::write(path.as_ref(), s).map_err(|e| Error::io(path.as_ref(), e))
}

/// Vertex-to-face map from one mesh into another.
#[derive(Clone, Debug, PartialEq)]
pub struct InputMap {
    pub faces: Vec<usize>,
    pub barycentric: Vec<[f64; 3]>,
}

impl InputMap {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn validate(&self, source_vertices: usize, target_faces: usize) -> Result<()> {
        if self.faces.len() != source_vertices || self.barycentric.len() != source_vertices {
            return Err(Error::Dimension(format!(
                "map has {} entries for a mesh with {source_vertices} vertices",
                self.faces.len()
            )));
        }
        if let Some((v, &f)) = self.faces.iter().enumerate().find(|(_, &f)| f >= target_faces) {
            return Err(Error::Input(format!(
                "vertex {v} maps to face {f} but the target has {target_faces} faces"
            )));
        }
        Ok(())
    }

    /// Parses either a plain map (`face [b0 b1 b2]` per line) or an `IMSMAP v1` file.
    pub fn parse(text: &str) -> Result<InputMap> {
        let mut faces = Vec::new();
        let mut barycentric = Vec::new();
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).peekable();
        let tagged = lines.peek().is_some_and(|l| l.starts_with("IMSMAP"));
        if tagged {
            lines.next();
        }
        for (k, line) in lines.enumerate() {
            let nums: Vec<&str> = line.split_whitespace().collect();
            let fields = if tagged {
                if nums.len() != 6 {
                    return Err(Error::Format(format!("map line {}: expected 6 fields", k + 1)));
                }
                &nums[1..5]
            } else {
                &nums[..]
            };
            let face: usize = fields[0]
                .parse()
                .map_err(|_| Error::Format(format!("map line {}: bad face index", k + 1)))?;
            let b = match fields.len() {
                1 => [1.0 / 3.0; 3],
                4 => {
                    let mut b = [0.0; 3];
                    for i in 0..3 {
                        b[i] = fields[i + 1]
                            .parse()
                            .map_err(|_| Error::Format(format!("map line {}: bad barycentric", k + 1)))?;
                    }
                    b
                }
                n => return Err(Error::Format(format!("map line {}: expected 1 or 4 fields, got {n}", k + 1))),
            };
            faces.push(face);
            barycentric.push(b);
        }
        Ok(InputMap { faces, barycentric })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_slashes_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 -1/1\n";
        let (p, f) = parse_obj(text).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(f, vec![[0, 1, 2]]);
    }

    #[test]
    fn quads_are_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(parse_obj(text), Err(Error::Format(_))));
    }

    #[test]
    fn input_map_formats() {
        let plain = InputMap::parse("3\n1 0.2 0.3 0.5\n").unwrap();
        assert_eq!(plain.faces, vec![3, 1]);
        assert_eq!(plain.barycentric[1], [0.2, 0.3, 0.5]);
        let tagged = InputMap::parse("IMSMAP v1 2 9\n0 4 1 0 0 0\n1 2 0.5 0.5 0 1\n").unwrap();
        assert_eq!(tagged.faces, vec![4, 2]);
        assert!(tagged.validate(2, 5).is_ok());
        assert!(tagged.validate(2, 4).is_err());
    }
}
