use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, C64};
use crate::mesh::{IntrinsicGeometry, TriangleMesh, NONE};

/// A discrete complex line bundle: unit transport per edge and curvature per face.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    /// Transport along each edge in its canonical orientation.
    pub transport: Vec<C64>,
    pub curvature: Vec<f64>,
}

impl Connection {
    /// r ≡ 1, Ω ≡ 0.
    pub fn trivial(mesh: &TriangleMesh) -> Self {
        Connection {
            transport: vec![C64::new(1.0, 0.0); mesh.num_edges()],
            curvature: vec![0.0; mesh.num_faces()],
        }
    }

    /// Transport along halfedge `h` (from its tail to its head).
    pub fn along(&self, mesh: &TriangleMesh, h: usize) -> C64 {
        let r = self.transport[mesh.edge(h)];
        if mesh.orientation(h) > 0.0 {
            r
        } else {
            r.conj()
        }
    }

    /// Product of transports around face `f`.
    pub fn holonomy(&self, mesh: &TriangleMesh, f: usize) -> C64 {
        (0..3).map(|c| self.along(mesh, 3 * f + c)).product()
    }

    pub fn total_curvature(&self) -> f64 {
        self.curvature.iter().sum()
    }

    /// Largest |r_ki r_jk r_ij − exp(iΩ_ijk)| over faces.
    pub fn compatibility_residual(&self, mesh: &TriangleMesh) -> f64 {
        (0..mesh.num_faces())
            .map(|f| (self.holonomy(mesh, f) - C64::from_polar(1.0, self.curvature[f])).norm())
            .fold(0.0, f64::max)
    }

    /// Largest ||r| − 1| over edges.
    pub fn unit_residual(&self) -> f64 {
        self.transport.iter().map(|r| (r.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Text form: `i j Re(r) Im(r)` per edge, then `i j k Ω` per face.
    pub fn to_text(&self, mesh: &TriangleMesh) -> String {
        let mut s = String::new();
        for (e, r) in self.transport.iter().enumerate() {
            let (i, j) = mesh.edge_vertices(e);
            let _ = writeln!(s, "{i} {j} {:.17e} {:.17e}", r.re, r.im);
        }
        for (f, w) in self.curvature.iter().enumerate() {
            let [i, j, k] = mesh.face(f);
            let _ = writeln!(s, "{i} {j} {k} {w:.17e}");
        }
        s
    }

    /// Parses the output of `to_text` for the same mesh.
    pub fn from_text(mesh: &TriangleMesh, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut transport = Vec::with_capacity(mesh.num_edges());
        for e in 0..mesh.num_edges() {
            let line = lines.next().ok_or_else(|| Error::Format(format!("missing edge line {e}")))?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::Format(format!("edge line {e}: expected 4 fields")));
            }
            let (i, j) = mesh.edge_vertices(e);
            if t[0] != i.to_string() || t[1] != j.to_string() {
                return Err(Error::Format(format!("edge line {e} does not match edge ({i}, {j})")));
            }
            let re: f64 = t[2].parse().map_err(|_| Error::Format(format!("edge line {e}: bad number")))?;
            let im: f64 = t[3].parse().map_err(|_| Error::Format(format!("edge line {e}: bad number")))?;
            transport.push(C64::new(re, im));
        }
        let mut curvature = Vec::with_capacity(mesh.num_faces());
        for f in 0..mesh.num_faces() {
            let line = lines.next().ok_or_else(|| Error::Format(format!("missing face line {f}")))?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::Format(format!("face line {f}: expected 4 fields")));
            }
            curvature.push(t[3].parse().map_err(|_| Error::Format(format!("face line {f}: bad number")))?);
        }
        Ok(Connection { transport, curvature })
    }
}

/// Levi-Civita connection of the rescaled vertex flattenings.
pub fn levi_civita(mesh: &TriangleMesh, geom: &IntrinsicGeometry) -> Connection {
    let transport = (0..mesh.num_edges())
        .map(|e| {
            let h = mesh.edge_halfedge(e);
            let t = mesh.twin(h);
            if t == NONE {
                return C64::new(1.0, 0.0);
            }
            -geom.halfedge_directions[t] / geom.halfedge_directions[h]
        })
        .collect();
    let curvature = (0..mesh.num_faces())
        .map(|f| (0..3).map(|c| geom.rescaled_angles[3 * f + c]).sum::<f64>() - PI)
        .collect();
    Connection { transport, curvature }
}

/// Factored dual Poisson problem 𝖽₁ ∗₁⁻¹ 𝖽₁ᵀ β = b with one face pinned to zero.
pub struct CurvatureSolver {
    factor: Cholesky<f64>,
    reduced: crate::linalg::CsrMatrix<f64>,
    pinned: usize,
    nf: usize,
    d1t: crate::linalg::CsrMatrix<f64>,
    inv_star: Vec<f64>,
}

impl CurvatureSolver {
    pub fn new(geom: &IntrinsicGeometry, pinned_face: usize) -> Result<Self> {
        let lap = geom.dual_laplacian();
        let nf = lap.nrows();
        if pinned_face >= nf {
            return Err(Error::Input(format!("anchor face {pinned_face} out of range ({nf} faces)")));
        }
        let keep: Vec<usize> = (0..nf).filter(|&f| f != pinned_face).collect();
        let reduced = lap.principal_submatrix(&keep);
        let factor = Cholesky::<f64>::factor(&reduced).map_err(|e| {
            Error::Numerical(format!("dual Poisson system is singular after pinning face {pinned_face}: {e}"))
        })?;
        Ok(CurvatureSolver {
            factor,
            reduced,
            pinned: pinned_face,
            nf,
            d1t: geom.d1.transpose(),
            inv_star: geom.hodge_star1.iter().map(|w| 1.0 / w).collect(),
        })
    }

    /// Minimal ∗₁-norm edge angles α with 𝖽₁α = `delta` (which must sum to zero).
    pub fn offset_angles(&self, delta: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = (0..self.nf).filter(|&f| f != self.pinned).map(|f| delta[f]).collect();
        let mut sol = rhs.clone();
        self.factor.solve_in_place(&mut sol);
        // iterative refinement: clamped Hodge stars can make the system poorly conditioned
        for _ in 0..3 {
            let ax = self.reduced.mul_vec(&sol);
            let mut res: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let scale = rhs.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
            if res.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-15 * scale {
                break;
            }
            self.factor.solve_in_place(&mut res);
            for (x, r) in sol.iter_mut().zip(&res) {
                *x += r;
            }
        }
        let rhs = sol;
        let mut beta = vec![0.0; self.nf];
        let mut it = rhs.into_iter();
        for (f, b) in beta.iter_mut().enumerate() {
            if f != self.pinned {
                *b = it.next().unwrap();
            }
        }
        (0..self.d1t.nrows())
            .map(|e| self.inv_star[e] * self.d1t.row(e).map(|(f, s)| s * beta[f]).sum::<f64>())
            .collect()
    }

    /// Offsets `r0` so its curvature becomes `target`.
    pub fn prescribe(&self, r0: &Connection, target: &[f64]) -> Result<Connection> {
        check_sums(&r0.curvature, target)?;
        let delta: Vec<f64> = target.iter().zip(&r0.curvature).map(|(t, c)| t - c).collect();
        let alpha = self.offset_angles(&delta);
        Ok(Connection {
            transport: r0
                .transport
                .iter()
                .zip(&alpha)
                .map(|(r, a)| C64::from_polar(1.0, *a) * r)
                .collect(),
            curvature: target.to_vec(),
        })
    }
}

fn check_sums(current: &[f64], target: &[f64]) -> Result<()> {
    let (a, b): (f64, f64) = (current.iter().sum(), target.iter().sum());
    if (a - b).abs() > 1e-9 {
        return Err(Error::CurvatureSum { current: a, target: b });
    }
    Ok(())
}

/// Connection with curvature `target` obtained from `r0` by a minimal-norm offset.
pub fn prescribe_curvature(geom: &IntrinsicGeometry, r0: &Connection, target: &[f64]) -> Result<Connection> {
    if target.len() != r0.curvature.len() {
        return Err(Error::Dimension(format!(
            "{} curvature values for {} faces",
            target.len(),
            r0.curvature.len()
        )));
    }
    check_sums(&r0.curvature, target)?;
    CurvatureSolver::new(geom, 0)?.prescribe(r0, target)
}

/// Half the Levi-Civita curvature on every face.
pub fn half_levi_civita_curvature(mesh: &TriangleMesh, geom: &IntrinsicGeometry) -> Vec<f64> {
    levi_civita(mesh, geom).curvature.iter().map(|w| 0.5 * w).collect()
}

fn require_closed_genus_zero(mesh: &TriangleMesh) -> Result<()> {
    if !mesh.is_closed() || mesh.euler_characteristic() != 2 {
        return Err(Error::Topology {
            message: "surface connections need a closed genus-zero mesh".into(),
            chi: mesh.euler_characteristic(),
        });
    }
    Ok(())
}

/// Default matching bundle: globally trivial fibers, curvature ½Ω^LC.
pub fn surface_connection(mesh: &TriangleMesh, geom: &IntrinsicGeometry, anchor_face: usize) -> Result<Connection> {
    require_closed_genus_zero(mesh)?;
    let solver = CurvatureSolver::new(geom, anchor_face)?;
    let mut r0 = Connection::trivial(mesh);
    r0.curvature[anchor_face] = 2.0 * PI;
    solver.prescribe(&r0, &half_levi_civita_curvature(mesh, geom))
}

/// Offset of the Levi-Civita connection with curvature ½Ω^LC.
pub fn vector_field_connection(
    mesh: &TriangleMesh,
    geom: &IntrinsicGeometry,
    anchor_face: usize,
) -> Result<Connection> {
    require_closed_genus_zero(mesh)?;
    let solver = CurvatureSolver::new(geom, anchor_face)?;
    let mut r0 = levi_civita(mesh, geom);
    let chi = mesh.euler_characteristic() as f64;
    r0.curvature[anchor_face] -= 2.0 * PI * (chi - 1.0);
    solver.prescribe(&r0, &half_levi_civita_curvature(mesh, geom))
}

/// Square root of the Levi-Civita connection with signs fixed along a dual spanning tree.
pub fn spin_connection(mesh: &TriangleMesh, geom: &IntrinsicGeometry) -> Result<Connection> {
    require_closed_genus_zero(mesh)?;
    let lc = levi_civita(mesh, geom);
    let target = half_levi_civita_curvature(mesh, geom);
    let mut transport: Vec<C64> = lc.transport.iter().map(|r| C64::from_polar(1.0, 0.5 * r.arg())).collect();
    let conn_defect = |transport: &[C64], f: usize| -> f64 {
        let hol: C64 = (0..3)
            .map(|c| {
                let h = 3 * f + c;
                let r = transport[mesh.edge(h)];
                if mesh.orientation(h) > 0.0 {
                    r
                } else {
                    r.conj()
                }
            })
            .product();
        (hol / C64::from_polar(1.0, target[f])).re
    };

    let nf = mesh.num_faces();
    let mut parent_edge = vec![NONE; nf];
    let mut order = Vec::with_capacity(nf);
    let mut seen = vec![false; nf];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(f) = queue.pop_front() {
        order.push(f);
        for c in 0..3 {
            let t = mesh.twin(3 * f + c);
            if t != NONE && !seen[t / 3] {
                seen[t / 3] = true;
                parent_edge[t / 3] = mesh.edge(t);
                queue.push_back(t / 3);
            }
        }
    }
    let mut sign: Vec<f64> = (0..nf).map(|f| conn_defect(&transport, f).signum()).collect();
    for &f in order.iter().rev() {
        if f == 0 || sign[f] > 0.0 {
            continue;
        }
        let e = parent_edge[f];
        transport[e] = -transport[e];
        let h = mesh.edge_halfedge(e);
        for g in [h / 3, mesh.twin(h) / 3] {
            sign[g] = -sign[g];
        }
    }
    if sign[0] < 0.0 {
        return Err(Error::Topology {
            message: "spin structure sign assignment is inconsistent".into(),
            chi: mesh.euler_characteristic(),
        });
    }
    Ok(Connection {
        transport,
        curvature: target,
    })
}
