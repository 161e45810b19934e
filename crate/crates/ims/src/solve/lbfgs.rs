//! Limited-memory BFGS over complex vectors viewed as pairs of reals.

use std::collections::VecDeque;

use crate::error::Result;
use crate::linalg::C64;
use crate::product::real_inner;

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

#[derive(Clone, Copy, Debug)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { memory: 10, grad_tol: 1e-5, max_iter: 1000 }
    }
}

/// One accepted iterate: (iteration, energy, gradient norm).
pub type TraceRow = (usize, f64, f64);

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<C64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the stage stopped for a reason other than convergence or the iteration cap.
    pub failure: Option<String>,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

struct Point {
    x: Vec<C64>,
    f: f64,
    g: Vec<C64>,
}

fn norm(v: &[C64]) -> f64 {
    real_inner(v, v).sqrt()
}

fn step(x: &[C64], a: f64, d: &[C64]) -> Vec<C64> {
    x.iter().zip(d).map(|(x, d)| x + d * a).collect()
}

/// Minimizer of the cubic interpolating (a, fa, da), (b, fb, db), kept inside the bracket.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let fallback = 0.5 * (a + b);
    if disc < 0.0 || !disc.is_finite() {
        return fallback;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    let width = hi - lo;
    if !t.is_finite() || t < lo + 0.1 * width || t > hi - 0.1 * width {
        fallback
    } else {
        t
    }
}

/// Strong-Wolfe line search; returns the accepted point and step, or None.
fn line_search(
    eval: &mut impl FnMut(&[C64]) -> Result<(f64, Vec<C64>)>,
    p: &Point,
    d: &[C64],
    alpha0: f64,
    evals: &mut usize,
) -> Result<Option<(Point, f64)>> {
    let d0 = real_inner(&p.g, d);
    if !(d0 < 0.0) {
        return Ok(None);
    }
    let mut probe = |a: f64, evals: &mut usize| -> Result<(Point, f64)> {
        let x = step(&p.x, a, d);
        let (f, g) = eval(&x)?;
        *evals += 1;
        let dd = real_inner(&g, d);
        Ok((Point { x, f, g }, dd))
    };
    // approximate Wolfe test for when energy decreases sink into rounding noise
    let approx_ok = |f: f64, dq: f64| f <= p.f && dq >= C2 * d0 && dq <= (2.0 * C1 - 1.0) * d0;
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, p.f, d0);
    let mut a = alpha0;
    let mut used = 0;
    let mut bracket = None;
    while used < MAX_LINE_EVALS {
        used += 1;
        let (q, dq) = probe(a, evals)?;
        if approx_ok(q.f, dq) {
            return Ok(Some((q, a)));
        }
        if !q.f.is_finite() || q.f > p.f + C1 * a * d0 || (used > 1 && q.f >= f_prev) {
            bracket = Some((a_prev, f_prev, d_prev, a, if q.f.is_finite() { q.f } else { f64::MAX }, dq));
            break;
        }
        if dq.abs() <= -C2 * d0 {
            return Ok(Some((q, a)));
        }
        if dq >= 0.0 {
            bracket = Some((a, q.f, dq, a_prev, f_prev, d_prev));
            break;
        }
        a_prev = a;
        f_prev = q.f;
        d_prev = dq;
        a *= 2.0;
    }
    let Some((mut lo, mut flo, mut dlo, mut hi, mut fhi, mut dhi)) = bracket else {
        return Ok(None);
    };
    while used < MAX_LINE_EVALS {
        used += 1;
        let a = if fhi.is_finite() && fhi < f64::MAX && dhi.is_finite() {
            cubic_min(lo, flo, dlo, hi, fhi, dhi)
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() <= 1e-12 * a.abs().max(1e-300) {
            break;
        }
        let (q, dq) = probe(a, evals)?;
        if approx_ok(q.f, dq) {
            return Ok(Some((q, a)));
        }
        if !q.f.is_finite() || q.f > p.f + C1 * a * d0 || q.f >= flo {
            hi = a;
            fhi = if q.f.is_finite() { q.f } else { f64::MAX };
            dhi = dq;
        } else {
            if dq.abs() <= -C2 * d0 {
                return Ok(Some((q, a)));
            }
            if dq * (hi - lo) >= 0.0 {
                hi = lo;
                fhi = flo;
                dhi = dlo;
            }
            lo = a;
            flo = q.f;
            dlo = dq;
        }
    }
    // accept a sufficient-decrease point even if curvature failed
    if lo > 0.0 && flo < p.f + C1 * lo * d0 {
        let (q, _) = probe(lo, evals)?;
        return Ok(Some((q, lo)));
    }
    Ok(None)
}

/// Minimizes `eval` from `x0`; `eval` returns (value, real gradient as complex entries).
pub fn lbfgs(
    x0: Vec<C64>,
    mut eval: impl FnMut(&[C64]) -> Result<(f64, Vec<C64>)>,
    opts: &LbfgsOptions,
) -> Result<LbfgsOutcome> {
    let (f, g) = eval(&x0)?;
    let mut evals = 1;
    let mut p = Point { x: x0, f, g };
    let mut hist: VecDeque<(Vec<C64>, Vec<C64>, f64)> = VecDeque::new();
    let mut trace = vec![(0, p.f, norm(&p.g))];
    let mut failure = None;
    let mut restarted = false;
    let mut last_gamma: Option<f64> = None;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let gn = norm(&p.g);
        if gn < opts.grad_tol {
            break;
        }
        // two-loop recursion
        let mut q = p.g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * real_inner(s, &q);
            q.iter_mut().zip(y).for_each(|(q, y)| *q -= y * a);
            alphas.push(a);
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => real_inner(s, y) / real_inner(y, y),
            None => last_gamma.unwrap_or(1.0 / gn.max(1e-300)),
        };
        last_gamma = Some(gamma);
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * real_inner(y, &q);
            q.iter_mut().zip(s).for_each(|(q, s)| *q += s * (a - b));
        }
        let d: Vec<C64> = q.iter().map(|v| -v).collect();
        let found = line_search(&mut eval, &p, &d, 1.0, &mut evals)?;
        let (next, _) = match found {
            Some(r) => r,
            None if !restarted => {
                // steepest descent restart with a fresh memory
                restarted = true;
                hist.clear();
                let d: Vec<C64> = p.g.iter().map(|v| -v).collect();
                match line_search(&mut eval, &p, &d, gamma, &mut evals)? {
                    Some(r) => r,
                    None => {
                        failure = Some(format!(
                            "line search failed twice at iteration {iterations} (energy {:.6e}, gradient norm {gn:.3e})",
                            p.f
                        ));
                        break;
                    }
                }
            }
            None => {
                failure = Some(format!(
                    "line search failed after restart at iteration {iterations} (energy {:.6e}, gradient norm {gn:.3e})",
                    p.f
                ));
                break;
            }
        };
        let s: Vec<C64> = next.x.iter().zip(&p.x).map(|(a, b)| a - b).collect();
        let y: Vec<C64> = next.g.iter().zip(&p.g).map(|(a, b)| a - b).collect();
        let sy = real_inner(&s, &y);
        if sy > 1e-16 * norm(&s) * norm(&y) {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        p = next;
        iterations += 1;
        trace.push((iterations, p.f, norm(&p.g)));
    }
    let grad_norm = norm(&p.g);
    Ok(LbfgsOutcome {
        energy: p.f,
        converged: grad_norm < opts.grad_tol,
        grad_norm,
        x: p.x,
        iterations,
        failure,
        trace,
        evaluations: evals,
    })
}
