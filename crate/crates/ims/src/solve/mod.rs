//! Optimization drivers: λ selection, annealed L-BFGS and the eigenvector initialization.

mod eigen;
mod lbfgs;

pub use eigen::{base_eigenvalue, lobpcg, min_generalized_eigen, EigenReport};
pub use lbfgs::{lbfgs, LbfgsOptions, LbfgsOutcome, TraceRow};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::product::{gl_energy_and_gradient, PinningPotential, Section, SliceConnection};

/// Threshold on max |Z| below which a section counts as collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Multipliers t with λ = t·λ₀, one L-BFGS stage each.
    pub schedule: Vec<f64>,
    /// λ₀; computed from the operators when absent.
    pub base_eigenvalue: Option<f64>,
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub eig_block: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            schedule: vec![100.0],
            base_eigenvalue: None,
            memory: 10,
            grad_tol: 1e-5,
            max_iter: 1000,
            eig_tol: 1e-8,
            eig_max_iter: 2000,
            eig_block: 4,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::Input("empty λ schedule".into()));
        }
        if self.schedule.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Input(format!("λ multipliers must be positive: {:?}", self.schedule)));
        }
        if self.schedule.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Input(format!("λ multipliers must be nondecreasing: {:?}", self.schedule)));
        }
        if self.memory == 0 || self.eig_block == 0 {
            return Err(Error::Input("L-BFGS memory and eigensolver block size must be positive".into()));
        }
        Ok(())
    }

    fn lbfgs_options(&self) -> LbfgsOptions {
        LbfgsOptions {
            memory: self.memory,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
        }
    }
}

/// Smallest generalized eigenvector of the slice-wise Laplacian against the lumped
/// product mass, scaled so that max |Z| = 1.
pub fn min_eigenvector_init(sc: &SliceConnection, config: &SolverConfig) -> Result<(Section, EigenReport)> {
    let (na, nb) = sc.shape();
    let (ma, mb) = (sc.lumped_mass_a(), sc.lumped_mass_b());
    let mass: Vec<f64> = ma.iter().flat_map(|a| mb.iter().map(move |b| a * b)).collect();
    let apply = |x: &[C64]| -> Result<Vec<C64>> {
        let z = Section::from_vec(na, nb, x.to_vec())?;
        Ok(sc.laplacian_apply(&z)?.into_vec())
    };
    let report = lobpcg(apply, &mass, config.eig_block, config.eig_tol, config.eig_max_iter, config.seed)?;
    let mut z = Section::from_vec(na, nb, report.vector.clone())?;
    let peak = z.max_abs();
    if !(peak > 0.0) || !z.is_finite() {
        return Err(Error::Numerical("initial eigenvector is zero or non-finite".into()));
    }
    z.scale(1.0 / peak);
    Ok((z, report))
}

/// Per-stage record of an annealed minimization.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub multiplier: f64,
    pub lambda: f64,
    pub initial_energy: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failure: Option<String>,
    /// Worst relative finite-difference mismatch of the gradient at the stage start.
    pub gradient_check: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug)]
pub struct Minimization {
    pub section: Section,
    pub base_eigenvalue: f64,
    pub stages: Vec<StageReport>,
}

impl Minimization {
    /// CSV with header `stage,iter,energy,grad_norm`.
    pub fn write_trace_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "stage,iter,energy,grad_norm")?;
        for (s, st) in self.stages.iter().enumerate() {
            for &(it, e, g) in &st.trace {
                writeln!(out, "{s},{it},{e:.17e},{g:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Central-difference check of the gradient along `count` random directions.
pub fn gradient_check(
    eval: &mut impl FnMut(&[C64]) -> Result<(f64, Vec<C64>)>,
    z: &[C64],
    count: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, g) = eval(z)?;
    let gnorm = crate::product::real_inner(&g, &g).sqrt();
    let znorm = crate::product::real_inner(z, z).sqrt();
    let h = 1e-5 * znorm.max(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let mut w: Vec<C64> = (0..z.len())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let wn = crate::product::real_inner(&w, &w).sqrt();
        w.iter_mut().for_each(|x| *x /= wn);
        let plus: Vec<C64> = z.iter().zip(&w).map(|(a, b)| a + b * h).collect();
        let minus: Vec<C64> = z.iter().zip(&w).map(|(a, b)| a - b * h).collect();
        let fd = (eval(&plus)?.0 - eval(&minus)?.0) / (2.0 * h);
        let an = crate::product::real_inner(&g, &w);
        let scale = an.abs().max(fd.abs()).max(1e-3 * gnorm).max(1e-12);
        worst = worst.max((fd - an).abs() / scale);
    }
    Ok(worst)
}

/// Annealed minimization: one L-BFGS stage per multiplier, each warm-started from the last.
pub fn minimize(
    a: &OperatorSet,
    b: &OperatorSet,
    z0: &Section,
    config: &SolverConfig,
    potential: &PinningPotential,
) -> Result<Minimization> {
    config.validate()?;
    let (na, nb) = (a.lumped_mass.len(), b.lumped_mass.len());
    z0.check_shape(na, nb)?;
    potential.check_shape(na, nb)?;
    if !z0.is_finite() {
        return Err(Error::Numerical("initial section has non-finite entries".into()));
    }
    let lambda0 = match config.base_eigenvalue {
        Some(l) => l,
        None => base_eigenvalue(a, b)?,
    };
    let mut z = z0.clone();
    let mut stages = Vec::with_capacity(config.schedule.len());
    for (s, &t) in config.schedule.iter().enumerate() {
        let lambda = t * lambda0;
        let mut eval = |x: &[C64]| -> Result<(f64, Vec<C64>)> {
            let sec = Section::from_vec(na, nb, x.to_vec())?;
            let ev = gl_energy_and_gradient(a, b, &sec, lambda, potential)?;
            Ok((ev.energy, ev.gradient.into_vec()))
        };
        let check = gradient_check(&mut eval, z.data(), 3, config.seed.wrapping_add(s as u64))?;
        if check > 1e-4 {
            return Err(Error::Numerical(format!(
                "gradient disagrees with finite differences at stage {s} (relative error {check:.3e})"
            )));
        }
        let out = lbfgs(z.data().to_vec(), &mut eval, &config.lbfgs_options())?;
        z = Section::from_vec(na, nb, out.x)?;
        stages.push(StageReport {
            multiplier: t,
            lambda,
            initial_energy: out.trace[0].1,
            energy: out.energy,
            grad_norm: out.grad_norm,
            iterations: out.iterations,
            converged: out.converged,
            failure: out.failure,
            gradient_check: check,
            trace: out.trace,
        });
    }
    Ok(Minimization { section: z, base_eigenvalue: lambda0, stages })
}

/// True when the section has collapsed to (numerically) zero.
pub fn collapse_check(z: &Section) -> bool {
    z.max_abs() < COLLAPSE_THRESHOLD
}
