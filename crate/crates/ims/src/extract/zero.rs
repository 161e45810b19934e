//! Locating the zero of the curved in-triangle interpolant.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Uniform homotopy steps before adaptive halving.
pub const HOMOTOPY_STEPS: usize = 32;
/// Smallest homotopy step.
pub const MIN_HOMOTOPY_STEP: f64 = 1.0 / 1024.0;
/// Required |z(b)| relative to the largest corner magnitude.
pub const ZERO_TOL: f64 = 1e-10;
const SIMPLEX_FLOOR: f64 = 1e-12;

/// Data of a singular face: edge rotations (ω_ij, ω_jk, ω_ki), curvature Ω and corner magnitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularTriangle {
    pub omega: [f64; 3],
    pub curvature: f64,
    pub magnitude: [f64; 3],
}

impl SingularTriangle {
    /// ind = (ω_ij + ω_jk + ω_ki + Ω)/2π, rounded.
    pub fn index(&self) -> i32 {
        ((self.omega.iter().sum::<f64>() + self.curvature) / TAU).round() as i32
    }

    /// Edge forms and curvature at homotopy time t (flat at t = 0).
    pub fn at(&self, t: f64) -> SingularTriangle {
        let [a, b, c] = self.omega;
        let w = self.curvature;
        let s = (1.0 - t) / 3.0;
        SingularTriangle {
            omega: [
                a + s * (w - 2.0 * a + b + c),
                b + s * (w + a - 2.0 * b + c),
                c + s * (w + a + b - 2.0 * c),
            ],
            curvature: t * w,
            magnitude: self.magnitude,
        }
    }

    /// Interpolant at (b_j, b_k) in the gauge where z_i is real:
    /// (1−b_j−b_k)|z_i| + b_j|z_j| e^{i(b_kΩ+ω_ij)} + b_k|z_k| e^{−i(b_jΩ+ω_ki)}.
    pub fn interpolant(&self, bj: f64, bk: f64) -> C64 {
        let [zi, zj, zk] = self.magnitude;
        let w = self.curvature;
        (1.0 - bj - bk) * zi
            + C64::from_polar(bj * zj, bk * w + self.omega[0])
            + C64::from_polar(bk * zk, -(bj * w + self.omega[2]))
    }

    fn jacobian(&self, bj: f64, bk: f64) -> (C64, C64) {
        let [zi, zj, zk] = self.magnitude;
        let w = self.curvature;
        let ej = C64::from_polar(zj, bk * w + self.omega[0]);
        let ek = C64::from_polar(zk, -(bj * w + self.omega[2]));
        let i = C64::new(0.0, 1.0);
        (-zi + ej - i * w * bk * ek, -zi + i * w * bj * ej + ek)
    }
}

fn clamp_to_simplex(bj: f64, bk: f64) -> (f64, f64, bool) {
    let (mut j, mut k) = (bj.max(SIMPLEX_FLOOR), bk.max(SIMPLEX_FLOOR));
    let s = j + k;
    if s > 1.0 - SIMPLEX_FLOOR {
        let scale = (1.0 - SIMPLEX_FLOOR) / s;
        j *= scale;
        k *= scale;
    }
    let moved = (j - bj).abs() > 0.0 || (k - bk).abs() > 0.0;
    (j, k, moved)
}

/// Newton on the two real equations Re, Im of the interpolant; iterates stay in the simplex.
fn newton(tri: &SingularTriangle, start: (f64, f64), tol: f64) -> Option<(f64, f64)> {
    let (mut bj, mut bk) = start;
    for _ in 0..60 {
        let f = tri.interpolant(bj, bk);
        if f.norm() < tol {
            return Some((bj, bk));
        }
        let (dj, dk) = tri.jacobian(bj, bk);
        let det = dj.re * dk.im - dk.re * dj.im;
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let sj = (f.re * dk.im - dk.re * f.im) / det;
        let sk = (dj.re * f.im - f.re * dj.im) / det;
        let (nj, nk, moved) = clamp_to_simplex(bj - sj, bk - sk);
        if moved {
            // damp steps that leave the simplex
            let (hj, hk, _) = clamp_to_simplex(bj + 0.5 * (nj - bj), bk + 0.5 * (nk - bk));
            bj = hj;
            bk = hk;
        } else {
            bj = nj;
            bk = nk;
        }
    }
    let f = tri.interpolant(bj, bk);
    (f.norm() < tol).then_some((bj, bk))
}

/// Zero of the flat (linear) interpolant, solved directly.
fn flat_zero(tri: &SingularTriangle) -> Option<(f64, f64)> {
    let [zi, zj, zk] = tri.magnitude;
    let pj = C64::from_polar(zj, tri.omega[0]) - zi;
    let pk = C64::from_polar(zk, -tri.omega[2]) - zi;
    // zi + bj pj + bk pk = 0
    let det = pj.re * pk.im - pk.re * pj.im;
    if det.abs() < 1e-300 {
        return None;
    }
    let bj = -zi * pk.im / det;
    let bk = zi * pj.im / det;
    Some((bj, bk))
}

fn check_homotopy(tri: &SingularTriangle, t: f64, index: i32) -> Result<()> {
    let w = tri.omega;
    if t < 1.0 && w.iter().any(|x| !(x.abs() < PI)) {
        return Err(Error::Extraction(format!("edge rotation left (−π, π) at homotopy time {t}: {w:?}")));
    }
    let total = w.iter().sum::<f64>() + tri.curvature;
    if (total - TAU * index as f64).abs() > 1e-9 {
        return Err(Error::Extraction(format!("index not conserved at homotopy time {t}: {total}")));
    }
    Ok(())
}

/// Barycentric (b_i, b_j, b_k) of the zero inside a singular face with index ±1.
///
/// The face is deformed from flat to its full curvature and the zero is tracked by
/// Newton steps; a failing step is halved down to 1/1024.
pub fn find_triangle_zero(tri: &SingularTriangle) -> Result<[f64; 3]> {
    let index = tri.index();
    if index.abs() != 1 {
        return Err(Error::Extraction(format!("face has index {index}, expected ±1")));
    }
    if tri.magnitude.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::Extraction(format!("corner magnitudes must be positive: {:?}", tri.magnitude)));
    }
    let peak = tri.magnitude.iter().cloned().fold(0.0, f64::max);
    let unit = SingularTriangle {
        magnitude: tri.magnitude.map(|m| m / peak),
        ..*tri
    };
    let tol = ZERO_TOL * 0.01;
    let flat = unit.at(0.0);
    check_homotopy(&flat, 0.0, index)?;
    let start = flat_zero(&flat).ok_or_else(|| Error::Extraction("flat interpolant is degenerate".into()))?;
    let (sj, sk, _) = clamp_to_simplex(start.0, start.1);
    let mut b = newton(&flat, (sj, sk), tol)
        .ok_or_else(|| Error::Extraction("Newton failed on the flat triangle".into()))?;
    let mut t = 0.0;
    let mut dt = 1.0 / HOMOTOPY_STEPS as f64;
    while t < 1.0 {
        let next = (t + dt).min(1.0);
        let tri_t = unit.at(next);
        check_homotopy(&tri_t, next, index)?;
        match newton(&tri_t, b, tol) {
            Some(nb) => {
                b = nb;
                t = next;
                dt = (dt * 2.0).min(1.0 / HOMOTOPY_STEPS as f64);
            }
            None => {
                dt *= 0.5;
                if dt < MIN_HOMOTOPY_STEP {
                    return Err(Error::Extraction(format!(
                        "Newton diverged at homotopy time {next:.6} (step below 1/1024); corner data {tri:?}"
                    )));
                }
            }
        }
    }
    Ok([1.0 - b.0 - b.1, b.0, b.1])
}

/// |z(b)| relative to the largest corner magnitude.
pub fn relative_residual(tri: &SingularTriangle, bary: [f64; 3]) -> f64 {
    let peak = tri.magnitude.iter().cloned().fold(0.0, f64::max);
    tri.interpolant(bary[1], bary[2]).norm() / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn symmetric_flat_triangle_has_centroid_zero() {
        let w = TAU / 3.0;
        let tri = SingularTriangle { omega: [w, w, w], curvature: 0.0, magnitude: [1.0; 3] };
        assert_eq!(tri.index(), 1);
        let b = find_triangle_zero(&tri).unwrap();
        for x in b {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_start_is_the_linear_interpolant_zero() {
        // Three complex corner values; the linear interpolant's zero fixes the sign convention.
        let z = [C64::new(1.0, 0.2), C64::new(-0.8, 0.9), C64::new(-0.3, -1.1)];
        let b_true = {
            let pj = z[1] - z[0];
            let pk = z[2] - z[0];
            let det = pj.re * pk.im - pk.re * pj.im;
            let bj = (-z[0].re * pk.im + pk.re * z[0].im) / det;
            let bk = (-pj.re * z[0].im + z[0].re * pj.im) / det;
            [1.0 - bj - bk, bj, bk]
        };
        let omega = [(z[1] / z[0]).arg(), (z[2] / z[1]).arg(), (z[0] / z[2]).arg()];
        let tri = SingularTriangle { omega, curvature: 0.0, magnitude: z.map(|v| v.norm()) };
        let b = find_triangle_zero(&tri).unwrap();
        for c in 0..3 {
            assert!((b[c] - b_true[c]).abs() < 1e-12, "{b:?} vs {b_true:?}");
        }
        // already solved at t = 0: one Newton step suffices
        let flat = tri.at(0.0);
        let s = flat_zero(&flat).unwrap();
        assert!(flat.interpolant(s.0, s.1).norm() < 1e-14);
    }

    #[test]
    fn homotopy_keeps_edges_open_and_index_fixed() {
        let tri = SingularTriangle { omega: [2.5, 2.9, -0.2], curvature: TAU - 5.2, magnitude: [0.5, 1.0, 0.8] };
        let ind = tri.index();
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            check_homotopy(&tri.at(t), t, ind).unwrap();
        }
    }

    pub(crate) fn random_singular(rng: &mut impl Rng) -> SingularTriangle {
        // ω_ki closes the face so that dω + Ω is exactly ±2π
        loop {
            let (a, b) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            let curvature = rng.random_range(-2.0..2.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let c = sign * TAU - a - b - curvature;
            if c.abs() < PI {
                return SingularTriangle {
                    omega: [a, b, c],
                    curvature,
                    magnitude: [0, 1, 2].map(|_| rng.random_range(0.1..1.0)),
                };
            }
        }
    }

    #[test]
    fn random_singular_triangles_reach_tiny_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let tri = random_singular(&mut rng);
            let b = find_triangle_zero(&tri).unwrap();
            assert!(b.iter().all(|&x| x >= 0.0) && (b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(relative_residual(&tri, b) < ZERO_TOL);
        }
    }

    #[test]
    fn nonsingular_faces_are_rejected() {
        let tri = SingularTriangle { omega: [0.1, 0.2, 0.3], curvature: 0.0, magnitude: [1.0; 3] };
        assert!(matches!(find_triangle_zero(&tri), Err(Error::Extraction(_))));
    }
}
