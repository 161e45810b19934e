//! Python bindings: meshes, sections, the pair solver, extraction and diagnostics.

use std::path::PathBuf;

use ims::cli::check_mesh;
use ims::extract::CorrespondenceMap;
use ims::linalg::C64;
use ims::mesh::{load_obj, primitives, TriangleMesh};
use ims::pipeline::{ConnectionKind, Initialization, PairConfig, PairExtraction, Problem, RunSummary};
use ims::product::Section;
use ims::solve::SolverConfig;
use ims::Error;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.root() {
        Error::Io { .. } => PyOSError::new_err(msg),
        Error::Input(_) | Error::Format(_) | Error::Dimension(_) => PyValueError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

/// A triangle mesh.
#[pyclass(name = "Mesh", module = "ims_py", from_py_object)]
#[derive(Clone)]
pub struct PyMesh {
    inner: TriangleMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        TriangleMesh::new(positions, faces).map(|inner| PyMesh { inner }).map_err(py_err)
    }

    /// Reads a Wavefront OBJ file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_obj(path).map(|inner| PyMesh { inner }).map_err(py_err)
    }

    /// Subdivided icosahedron on the unit sphere.
    #[staticmethod]
    fn icosphere(freq: usize) -> Self {
        PyMesh { inner: primitives::icosphere(freq) }
    }

    /// A copy centered at the origin and scaled to unit area.
    fn normalized(&self) -> Self {
        let mut inner = self.inner.clone();
        inner.normalize();
        PyMesh { inner }
    }

    /// A copy with reversed face orientation.
    fn reversed(&self) -> PyResult<Self> {
        self.inner.reversed().map(|inner| PyMesh { inner }).map_err(py_err)
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_faces(&self) -> usize {
        self.inner.num_faces()
    }

    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.positions().to_vec()
    }

    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Mesh({} vertices, {} faces)", self.inner.num_vertices(), self.inner.num_faces())
    }
}

/// A section over the product of two meshes (rows index A, columns index B).
#[pyclass(name = "Section", module = "ims_py", from_py_object)]
#[derive(Clone)]
pub struct PySection {
    inner: Section,
}

#[pymethods]
impl PySection {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<C64> {
        let (r, c) = self.inner.shape();
        if i >= r || j >= c {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) outside {r}×{c}")));
        }
        Ok(self.inner.get(i, j))
    }

    /// Row-major values.
    fn values(&self) -> Vec<C64> {
        self.inner.data().to_vec()
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Section::read(&path).map(|inner| PySection { inner }).map_err(py_err)
    }
}

/// Vertex images of one direction.
#[pyclass(name = "Map", module = "ims_py", from_py_object)]
#[derive(Clone)]
pub struct PyMap {
    inner: CorrespondenceMap,
}

#[pymethods]
impl PyMap {
    /// Target face of each source vertex.
    fn faces(&self) -> Vec<usize> {
        self.inner.images.iter().map(|i| i.face).collect()
    }

    fn barycentric(&self) -> Vec<[f64; 3]> {
        self.inner.images.iter().map(|i| i.bary).collect()
    }

    fn multi_zero(&self) -> Vec<bool> {
        self.inner.images.iter().map(|i| i.multi_zero).collect()
    }

    fn multi_zero_fraction(&self) -> f64 {
        self.inner.multi_zero_fraction()
    }

    /// Image positions on the (normalized) target mesh.
    fn positions(&self, target: &PyMesh) -> PyResult<Vec<[f64; 3]>> {
        let mut t = target.inner.clone();
        t.normalize();
        if self.inner.images.iter().any(|i| i.face >= t.num_faces()) {
            return Err(PyValueError::new_err("map refers to faces beyond the target mesh"));
        }
        Ok(self.inner.positions(&t))
    }

    /// The `IMSMAP v1` text form.
    fn to_text(&self) -> String {
        self.inner.to_text()
    }
}

/// Output of `solve` or `extract`.
#[pyclass(name = "Correspondence", module = "ims_py")]
pub struct PyCorrespondence {
    #[pyo3(get)]
    section: PySection,
    #[pyo3(get)]
    a_to_b: PyMap,
    #[pyo3(get)]
    b_to_a: PyMap,
    /// Edge crossings `(edge_a, edge_b, s, t)` on the working triangulations.
    #[pyo3(get)]
    crossings: Vec<(usize, usize, f64, f64)>,
    #[pyo3(get)]
    sandwich_holds: bool,
    /// JSON run summary (solve only).
    #[pyo3(get)]
    summary: Option<String>,
}

fn correspondence(z: Section, ex: PairExtraction, summary: Option<String>) -> PyCorrespondence {
    PyCorrespondence {
        sandwich_holds: ex.distortion_a_to_b.sandwich_holds() && ex.distortion_b_to_a.sandwich_holds(),
        crossings: ex.crossings.iter().map(|c| (c.edge_a, c.edge_b, c.s, c.t)).collect(),
        section: PySection { inner: z },
        a_to_b: PyMap { inner: ex.a_to_b },
        b_to_a: PyMap { inner: ex.b_to_a },
        summary,
    }
}

fn problem(a: &PyMesh, b: &PyMesh, connection: &str, idt: bool) -> PyResult<Problem> {
    let kind: ConnectionKind = connection.parse().map_err(py_err)?;
    Problem::new(&a.inner, &b.inner, kind, idt).map_err(py_err)
}

/// Computes a correspondence between two genus-zero meshes.
#[pyfunction]
#[pyo3(signature = (mesh_a, mesh_b, *, connection="default", anneal=vec![100.0], landmarks=vec![], sigma_a=1.0, sigma_b=1.0, seed=0, idt=true, random_init=false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    mesh_a: &PyMesh,
    mesh_b: &PyMesh,
    connection: &str,
    anneal: Vec<f64>,
    landmarks: Vec<(usize, usize)>,
    sigma_a: f64,
    sigma_b: f64,
    seed: u64,
    idt: bool,
    random_init: bool,
) -> PyResult<PyCorrespondence> {
    let p = problem(mesh_a, mesh_b, connection, idt)?;
    let config = PairConfig {
        connection: p.a.kind,
        idt,
        solver: SolverConfig { schedule: anneal, seed, ..SolverConfig::default() },
        init: if random_init { Initialization::Random } else { Initialization::NearestNeighbor },
        landmarks,
        curves: Vec::new(),
        sigma_a,
        sigma_b,
    };
    py.detach(|| {
        let sol = p.solve(&config)?;
        let ex = p.extract(&sol.section)?;
        let summary = RunSummary::new(&p, &sol, &ex).to_json();
        Ok(correspondence(sol.section, ex, Some(summary)))
    })
    .map_err(py_err)
}

/// Reads maps off a given section.
#[pyfunction]
#[pyo3(signature = (mesh_a, mesh_b, section, *, connection="default", idt=true))]
fn extract(
    py: Python<'_>,
    mesh_a: &PyMesh,
    mesh_b: &PyMesh,
    section: &PySection,
    connection: &str,
    idt: bool,
) -> PyResult<PyCorrespondence> {
    let p = problem(mesh_a, mesh_b, connection, idt)?;
    let z = section.inner.clone();
    py.detach(|| p.extract(&z).map(|ex| correspondence(z.clone(), ex, None))).map_err(py_err)
}

/// Mesh and bundle diagnostics as `(name, passed, detail)` triples.
#[pyfunction]
#[pyo3(signature = (mesh, *, idt=true))]
fn check(mesh: &PyMesh, idt: bool) -> Vec<(String, bool, String)> {
    check_mesh(&mesh.inner, idt).into_iter().map(|r| (r.name.to_string(), r.passed, r.detail)).collect()
}

#[pymodule]
fn ims_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySection>()?;
    m.add_class::<PyMap>()?;
    m.add_class::<PyCorrespondence>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
