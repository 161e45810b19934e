//! The full correspondence pipeline: preprocessing, bundles, initialization,
//! annealed minimization and extraction.

use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::{build_fem_matrices, spin_connection, surface_connection, vector_field_connection, Connection, OperatorSet};
use crate::error::{Error, Result};
use crate::extract::{
    distortion_report, Crossing, CorrespondenceMap, Direction, DistortionReport, PointImage, ProductView,
};
use crate::mesh::{
    closest_point, fill_boundaries, intrinsic_delaunay, nearest_neighbor_maps, FilledMesh, InputMap, IntrinsicGeometry,
    IntrinsicTriangulation, SurfacePoint, TriangleMesh,
};
use crate::product::{build_pinning_potential, build_slice_connection, CurvePair, PinningPotential, Section, SliceTargets};
use crate::solve::{collapse_check, min_eigenvector_init, minimize, EigenReport, Minimization, SolverConfig};

/// Which matching bundle to build on each surface.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionKind {
    /// Globally trivial fibers with half the Levi-Civita curvature.
    #[default]
    Default,
    /// Offset of the Levi-Civita connection.
    VectorField,
    /// Square root of the Levi-Civita connection.
    Spin,
}

impl ConnectionKind {
    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::Default => "default",
            ConnectionKind::VectorField => "vectorfield",
            ConnectionKind::Spin => "spin",
        }
    }

    /// Whether fibers are identified with one complex plane across the surface.
    pub fn is_globally_trivial(self) -> bool {
        self == ConnectionKind::Default
    }
}

impl FromStr for ConnectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" | "surface" => Ok(ConnectionKind::Default),
            "vectorfield" | "vector-field" => Ok(ConnectionKind::VectorField),
            "spin" => Ok(ConnectionKind::Spin),
            _ => Err(Error::Input(format!("unknown connection `{s}` (expected default, vectorfield or spin)"))),
        }
    }
}

/// One surface after preprocessing, with its bundle and FEM operators.
#[derive(Clone, Debug)]
pub struct PreparedSurface {
    /// Input with boundaries capped, normalized to unit area.
    pub filled: FilledMesh,
    /// Working triangulation (intrinsic Delaunay unless disabled).
    pub triangulation: IntrinsicTriangulation,
    pub geometry: IntrinsicGeometry,
    pub connection: Connection,
    pub operators: OperatorSet,
    pub kind: ConnectionKind,
    /// Working face where the bundle construction starts.
    pub anchor_face: usize,
}

impl PreparedSurface {
    pub fn new(mesh: &TriangleMesh, kind: ConnectionKind, idt: bool) -> Result<Self> {
        Self::with_anchor(mesh, kind, idt, None)
    }

    /// As [`PreparedSurface::new`], anchoring the bundle at the working face closest to
    /// `anchor` (a point in the normalized frame) instead of face 0.
    pub fn with_anchor(mesh: &TriangleMesh, kind: ConnectionKind, idt: bool, anchor: Option<[f64; 3]>) -> Result<Self> {
        mesh.require_genus_zero().map_err(|e| e.in_stage("topology check", "inputs must be genus-zero surfaces"))?;
        let mut filled =
            fill_boundaries(mesh).map_err(|e| e.in_stage("boundary filling", "boundary loops need at least 3 vertices"))?;
        filled.mesh.normalize();
        let triangulation = if idt {
            intrinsic_delaunay(&filled.mesh).map_err(|e| e.in_stage("intrinsic Delaunay", "retry with --no-idt"))?
        } else {
            IntrinsicTriangulation::identity(&filled.mesh)
        };
        let work = &triangulation.intrinsic;
        let anchor_face = match anchor {
            Some(q) => {
                let hit = closest_point(&filled.mesh, q);
                triangulation.from_input(SurfacePoint::new(hit.face, hit.bary)).face
            }
            None => 0,
        };
        let geometry = IntrinsicGeometry::new(work);
        let connection = match kind {
            ConnectionKind::Default => surface_connection(work, &geometry, anchor_face),
            ConnectionKind::VectorField => vector_field_connection(work, &geometry, anchor_face),
            ConnectionKind::Spin => spin_connection(work, &geometry),
        }
        .map_err(|e| e.in_stage("connection", "check the mesh for degenerate faces"))?;
        let operators = build_fem_matrices(work, &geometry, &connection);
        Ok(PreparedSurface { filled, triangulation, geometry, connection, operators, kind, anchor_face })
    }

    /// The capped, normalized input triangulation on which maps are reported.
    pub fn mesh(&self) -> &TriangleMesh {
        &self.filled.mesh
    }

    /// The triangulation the bundle and the section live on.
    pub fn work(&self) -> &TriangleMesh {
        &self.triangulation.intrinsic
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh().num_vertices()
    }

    pub fn to_work(&self, p: SurfacePoint) -> SurfacePoint {
        self.triangulation.from_input(p)
    }

    pub fn to_input(&self, p: SurfacePoint) -> SurfacePoint {
        self.triangulation.to_input(p)
    }

    /// Re-expresses images given on the working triangulation on the input triangulation.
    pub fn map_to_input(&self, map: CorrespondenceMap) -> CorrespondenceMap {
        let images = map
            .images
            .into_iter()
            .map(|im| {
                let p = self.to_input(SurfacePoint::new(im.face, im.bary));
                PointImage { face: p.face, bary: p.bary, ..im }
            })
            .collect();
        CorrespondenceMap { images, ..map }
    }

    /// Centroid of the anchor face, in the normalized frame.
    pub fn anchor_point(&self) -> [f64; 3] {
        self.to_input(SurfacePoint::centroid(self.anchor_face)).position(self.mesh())
    }

    /// Target faces on the working triangulation for a map into this surface.
    pub fn work_faces(&self, map: &InputMap) -> Vec<usize> {
        map.faces
            .iter()
            .zip(&map.barycentric)
            .map(|(&f, &b)| self.to_work(SurfacePoint::new(f, b)).face)
            .collect()
    }
}

/// How the initial section is chosen.
#[derive(Clone, Debug, Default)]
pub enum Initialization {
    /// Smallest eigenvector of the product Laplacian rigged on closest-point maps.
    #[default]
    NearestNeighbor,
    /// As above with user-supplied maps (faces of the input triangulations).
    Maps { a_to_b: InputMap, b_to_a: InputMap },
    /// Entries uniform in the complex unit disk.
    Random,
}

#[derive(Clone, Debug)]
pub struct PairConfig {
    pub connection: ConnectionKind,
    pub idt: bool,
    pub solver: SolverConfig,
    pub init: Initialization,
    pub landmarks: Vec<(usize, usize)>,
    pub curves: Vec<CurvePair>,
    pub sigma_a: f64,
    pub sigma_b: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            connection: ConnectionKind::Default,
            idt: true,
            solver: SolverConfig::default(),
            init: Initialization::NearestNeighbor,
            landmarks: Vec::new(),
            curves: Vec::new(),
            sigma_a: 1.0,
            sigma_b: 1.0,
        }
    }
}

/// Wall time of one pipeline stage in seconds.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PairSolution {
    pub section: Section,
    pub minimization: Minimization,
    pub initial_eigen: Option<EigenReport>,
    pub potential: PinningPotential,
    pub warnings: Vec<String>,
    pub timings: Vec<Timing>,
}

/// Everything read off an optimized section.
#[derive(Clone, Debug)]
pub struct PairExtraction {
    /// Images of A's vertices on B's input triangulation.
    pub a_to_b: CorrespondenceMap,
    /// Images of B's vertices on A's input triangulation.
    pub b_to_a: CorrespondenceMap,
    /// Crossings of working-triangulation edges.
    pub crossings: Vec<Crossing>,
    pub distortion_a_to_b: DistortionReport,
    pub distortion_b_to_a: DistortionReport,
}

fn timed<T>(timings: &mut Vec<Timing>, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f();
    timings.push(Timing { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
    out
}

/// A prepared pair of surfaces.
#[derive(Clone, Debug)]
pub struct Problem {
    pub a: PreparedSurface,
    pub b: PreparedSurface,
}

impl Problem {
    pub fn new(mesh_a: &TriangleMesh, mesh_b: &TriangleMesh, kind: ConnectionKind, idt: bool) -> Result<Self> {
        let a = PreparedSurface::new(mesh_a, kind, idt).map_err(|e| e.in_stage("preparing mesh A", ""))?;
        let b = PreparedSurface::new(mesh_b, kind, idt).map_err(|e| e.in_stage("preparing mesh B", ""))?;
        Ok(Problem { a, b })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a.num_vertices(), self.b.num_vertices())
    }

    pub fn potential(&self, config: &PairConfig) -> Result<PinningPotential> {
        build_pinning_potential(
            self.a.work(),
            self.b.work(),
            &config.landmarks,
            &config.curves,
            config.sigma_a,
            config.sigma_b,
        )
        .map_err(|e| e.in_stage("pinning potential", "landmark and curve indices must refer to mesh vertices"))
    }

    /// Closest-point maps between the normalized input triangulations.
    pub fn nearest_neighbor_maps(&self) -> (InputMap, InputMap) {
        nearest_neighbor_maps(self.a.mesh(), self.b.mesh())
    }

    /// Initial section and, for eigenvector starts, the eigensolver report.
    pub fn initial_section(&self, config: &PairConfig) -> Result<(Section, Option<EigenReport>)> {
        let (na, nb) = self.shape();
        let (ab, ba) = match &config.init {
            Initialization::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.solver.seed);
                return Ok((Section::random_unit_disk(na, nb, &mut rng), None));
            }
            Initialization::NearestNeighbor => self.nearest_neighbor_maps(),
            Initialization::Maps { a_to_b, b_to_a } => (a_to_b.clone(), b_to_a.clone()),
        };
        ab.validate(na, self.b.mesh().num_faces())
            .and_then(|_| ba.validate(nb, self.a.mesh().num_faces()))
            .map_err(|e| e.in_stage("initial map", "maps must list one face per vertex of the filled meshes"))?;
        let phi = self.b.work_faces(&ab);
        let psi = self.a.work_faces(&ba);
        let sc = build_slice_connection(
            self.a.work(),
            &self.a.geometry,
            &self.a.connection,
            self.b.work(),
            &self.b.geometry,
            &self.b.connection,
            SliceTargets::Faces(&phi),
            SliceTargets::Faces(&psi),
        )
        .map_err(|e| e.in_stage("slice connection", ""))?;
        let (z, report) =
            min_eigenvector_init(&sc, &config.solver).map_err(|e| e.in_stage("initial eigenvector", ""))?;
        Ok((z, Some(report)))
    }

    /// Runs the whole optimization.
    pub fn solve(&self, config: &PairConfig) -> Result<PairSolution> {
        config.solver.validate()?;
        let mut timings = Vec::new();
        let potential = timed(&mut timings, "pinning", || self.potential(config))?;
        let (z0, eig) = timed(&mut timings, "initialization", || self.initial_section(config))?;
        let mut warnings = Vec::new();
        if let Some(r) = &eig {
            if !r.converged {
                warnings.push(format!(
                    "initial eigenvector did not converge in {} iterations (relative residual {:.3e}); using the best iterate",
                    r.iterations, r.relative_residual
                ));
            }
        }
        let mut sol = self.solve_from(z0, config, potential, timings)?;
        sol.initial_eigen = eig;
        warnings.append(&mut sol.warnings);
        sol.warnings = warnings;
        Ok(sol)
    }

    /// Annealed minimization from a given section.
    pub fn solve_from(
        &self,
        z0: Section,
        config: &PairConfig,
        potential: PinningPotential,
        mut timings: Vec<Timing>,
    ) -> Result<PairSolution> {
        let minimization = timed(&mut timings, "minimization", || {
            minimize(&self.a.operators, &self.b.operators, &z0, &config.solver, &potential)
                .map_err(|e| e.in_stage("minimization", "try a two-stage schedule such as --anneal 10,100"))
        })?;
        let mut warnings = Vec::new();
        for (s, st) in minimization.stages.iter().enumerate() {
            if let Some(f) = &st.failure {
                warnings.push(format!("stage {s} (t = {}) stopped early: {f}", st.multiplier));
            } else if !st.converged {
                warnings.push(format!(
                    "stage {s} (t = {}) reached the iteration limit with gradient norm {:.3e}",
                    st.multiplier, st.grad_norm
                ));
            }
        }
        if collapse_check(&minimization.section) {
            return Err(Error::Numerical(format!(
                "λ below stability threshold: the section collapsed to max|Z| = {:.3e}",
                minimization.section.max_abs()
            ))
            .in_stage("minimization", "use multipliers t ≥ 1 (the default is 100)"));
        }
        Ok(PairSolution {
            section: minimization.section.clone(),
            minimization,
            initial_eigen: None,
            potential,
            warnings,
            timings,
        })
    }

    pub fn view<'a>(&'a self, z: &'a Section) -> Result<ProductView<'a>> {
        ProductView::new(self.a.work(), &self.a.connection, self.b.work(), &self.b.connection, z)
    }

    /// Maps in both directions, edge crossings and distortion reports.
    pub fn extract(&self, z: &Section) -> Result<PairExtraction> {
        let view = self.view(z)?;
        let hint = "the section may not have converged; try a larger multiplier";
        let a_to_b = self.b.map_to_input(view.map_all(Direction::AToB).map_err(|e| e.in_stage("extraction A→B", hint))?);
        let b_to_a = self.a.map_to_input(view.map_all(Direction::BToA).map_err(|e| e.in_stage("extraction B→A", hint))?);
        let crossings = view.edge_edge_intersections();
        let distortion_a_to_b = distortion_report(self.a.mesh(), self.b.mesh(), &a_to_b)?;
        let distortion_b_to_a = distortion_report(self.b.mesh(), self.a.mesh(), &b_to_a)?;
        Ok(PairExtraction { a_to_b, b_to_a, crossings, distortion_a_to_b, distortion_b_to_a })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageSummary {
    pub multiplier: f64,
    pub lambda: f64,
    pub initial_energy: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failure: Option<String>,
    pub gradient_check: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSummary {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionSummary {
    pub vertices: usize,
    pub multi_zero_count: usize,
    pub multi_zero_percent: f64,
    pub max_zero_residual: f64,
    pub graph_area: f64,
    pub source_area: f64,
    pub symmetric_dirichlet: f64,
    pub flipped_faces: usize,
    pub excluded_faces: usize,
    pub sandwich_holds: bool,
}

impl DirectionSummary {
    fn new(map: &CorrespondenceMap, d: &DistortionReport) -> Self {
        DirectionSummary {
            vertices: map.images.len(),
            multi_zero_count: map.multi_zero_count(),
            multi_zero_percent: 100.0 * map.multi_zero_fraction(),
            max_zero_residual: map.max_residual(),
            graph_area: d.graph_area,
            source_area: d.source_area,
            symmetric_dirichlet: d.symmetric_dirichlet,
            flipped_faces: d.flipped_faces,
            excluded_faces: d.excluded_faces().len(),
            sandwich_holds: d.sandwich_holds(),
        }
    }
}

/// JSON-ready run summary.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub vertices_a: usize,
    pub vertices_b: usize,
    pub intrinsic_flips_a: usize,
    pub intrinsic_flips_b: usize,
    pub connection: ConnectionKind,
    pub base_eigenvalue: f64,
    pub initial_eigen: Option<EigenSummary>,
    pub stages: Vec<StageSummary>,
    pub a_to_b: DirectionSummary,
    pub b_to_a: DirectionSummary,
    pub multi_zero_percent: f64,
    pub crossings: usize,
    pub warnings: Vec<String>,
    pub timings: Vec<Timing>,
}

impl RunSummary {
    pub fn new(problem: &Problem, solution: &PairSolution, extraction: &PairExtraction) -> Self {
        let ab = DirectionSummary::new(&extraction.a_to_b, &extraction.distortion_a_to_b);
        let ba = DirectionSummary::new(&extraction.b_to_a, &extraction.distortion_b_to_a);
        let total = (ab.vertices + ba.vertices).max(1) as f64;
        RunSummary {
            vertices_a: problem.a.num_vertices(),
            vertices_b: problem.b.num_vertices(),
            intrinsic_flips_a: problem.a.triangulation.flips,
            intrinsic_flips_b: problem.b.triangulation.flips,
            connection: problem.a.kind,
            base_eigenvalue: solution.minimization.base_eigenvalue,
            initial_eigen: solution.initial_eigen.as_ref().map(|r| EigenSummary {
                eigenvalue: r.eigenvalue,
                iterations: r.iterations,
                relative_residual: r.relative_residual,
                converged: r.converged,
            }),
            stages: solution
                .minimization
                .stages
                .iter()
                .map(|s| StageSummary {
                    multiplier: s.multiplier,
                    lambda: s.lambda,
                    initial_energy: s.initial_energy,
                    energy: s.energy,
                    grad_norm: s.grad_norm,
                    iterations: s.iterations,
                    converged: s.converged,
                    failure: s.failure.clone(),
                    gradient_check: s.gradient_check,
                })
                .collect(),
            multi_zero_percent: 100.0 * (ab.multi_zero_count + ba.multi_zero_count) as f64 / total,
            a_to_b: ab,
            b_to_a: ba,
            crossings: extraction.crossings.len(),
            warnings: solution.warnings.clone(),
            timings: solution.timings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is plain data")
    }
}
