//! Damped Newton iteration for square nonlinear systems with a
//! central-difference Jacobian, plus a multistart driver.
//!
//! The step is the Newton direction `J δ = −f`, shortened by backtracking
//! until the Euclidean residual decreases (Armijo factor 1e-4). When the
//! Jacobian is singular the step falls back to a Levenberg-regularised
//! least-squares direction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Convergence threshold on `‖f(x)‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Iterates leaving this radius are abandoned.
    pub max_radius: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 60, fd_step: 1e-6, max_radius: 1e6 }
    }
}

/// Outcome of one Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub start: Vec<f64>,
    pub x: Vec<f64>,
    /// `‖f(x)‖∞` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn jacobian<F>(f: &mut F, x: &[f64], fx_len: usize, rel: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(fx_len, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = rel * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let up = f(&probe)?;
        probe[j] = x[j] - h;
        let down = f(&probe)?;
        probe[j] = x[j];
        for i in 0..fx_len {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn newton_direction(jac: &DMatrix<f64>, fx: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(fx);
    if jac.is_square() {
        if let Some(step) = jac.clone().lu().solve(&rhs) {
            if step.iter().all(|v| v.is_finite()) {
                return Some(step);
            }
        }
    }
    // Levenberg fallback: (JᵀJ + μ I) δ = −Jᵀ f.
    let jt = jac.transpose();
    let normal = &jt * jac;
    let mu = 1e-8 * normal.diagonal().amax().max(1e-300);
    let regular = normal + DMatrix::identity(jac.ncols(), jac.ncols()) * mu;
    regular.cholesky().map(|c| c.solve(&(jt * rhs))).filter(|s| s.iter().all(|v| v.is_finite()))
}

/// Damped Newton from a single start.
///
/// Errors only when `f` itself fails at the starting point; failures later
/// in the iteration end the run with `converged = false`.
pub fn newton<F>(mut f: F, x0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut residual = inf_norm(&fx);
    let outcome = |x: Vec<f64>, residual: f64, iterations: usize| NewtonOutcome {
        start: x0.to_vec(),
        converged: residual <= opts.tol,
        x,
        residual,
        iterations,
    };
    for iter in 0..opts.max_iter {
        if residual <= opts.tol {
            return Ok(outcome(x, residual, iter));
        }
        let Ok(jac) = jacobian(&mut f, &x, fx.len(), opts.fd_step) else {
            return Ok(outcome(x, residual, iter));
        };
        let Some(step) = newton_direction(&jac, &fx) else {
            return Ok(outcome(x, residual, iter));
        };
        let base = l2(&fx);
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda >= 1.0 / 1024.0 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi + lambda * si).collect();
            if let Ok(ft) = f(&trial) {
                if ft.iter().all(|v| v.is_finite()) && l2(&ft) <= (1.0 - 1e-4 * lambda) * base {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            return Ok(outcome(x, residual, iter));
        };
        x = trial;
        fx = ft;
        residual = inf_norm(&fx);
        if inf_norm(&x) > opts.max_radius {
            return Ok(outcome(x, residual, iter + 1));
        }
    }
    Ok(outcome(x, residual, opts.max_iter))
}

/// Starting points for multistart root searches.
#[derive(Debug, Clone, PartialEq)]
pub struct StartGrid {
    pub points: Vec<Vec<f64>>,
}

impl StartGrid {
    /// Cartesian lattice `lo, lo + step, …, ≤ hi` in every coordinate.
    pub fn lattice(lo: f64, hi: f64, step: f64, dim: usize) -> Result<Self> {
        if !(step > 0.0) || hi < lo || dim == 0 {
            return Err(Error::InvalidArgument(format!("bad lattice lo={lo} hi={hi} step={step} dim={dim}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let axis: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        let mut points = vec![Vec::new()];
        for _ in 0..dim {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(StartGrid { points })
    }

    /// Default fallback grid: every coordinate of `x0` shifted by
    /// `{−2, −1, 0, 1, 2}·max(1, |x0_i|)`, capped to 3 coordinates varied.
    pub fn around(x0: &[f64]) -> Self {
        let varied = x0.len().min(3);
        let mut points = vec![x0.to_vec()];
        for i in 0..varied {
            let scale = x0[i].abs().max(1.0);
            points = points
                .into_iter()
                .flat_map(|p| {
                    (-2..=2).map(move |k| {
                        let mut q = p.clone();
                        q[i] += k as f64 * scale;
                        q
                    })
                })
                .collect();
        }
        StartGrid { points }
    }
}

/// Run Newton from every grid point.
pub fn multistart<F>(mut f: F, grid: &StartGrid, opts: &NewtonOptions) -> Vec<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    grid.points.iter().filter_map(|start| newton(&mut f, start, opts).ok()).collect()
}

/// Find `x` with `‖f(x)‖∞ ≤ tol`, starting at `x0` and falling back to
/// [`StartGrid::around`] when the first run fails.
pub fn solve_roots<F>(mut f: F, x0: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let opts = NewtonOptions { tol, ..NewtonOptions::default() };
    let first = newton(&mut f, x0, &opts)?;
    if first.converged {
        return Ok(first.x);
    }
    let grid = StartGrid::around(x0);
    let runs = multistart(&mut f, &grid, &opts);
    let starts = runs.len() + 1;
    let best = runs
        .into_iter()
        .chain(std::iter::once(first))
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("at least the first run");
    if best.converged {
        Ok(best.x)
    } else {
        Err(Error::NoRoot { best_residual: best.residual, best_point: best.x, starts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_scalar() {
        let x = solve_roots(|x| Ok(vec![x[0] - 1.0]), &[0.0], 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn factored_polynomial_system() {
        let x = solve_roots(|x| Ok(vec![x[0] * x[0] - 4.0, x[1] - x[0]]), &[1.0, 1.0], 1e-13).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_real_root_reports_best_residual() {
        let err = solve_roots(|x| Ok(vec![x[0] * x[0] + 1.0]), &[0.5], 1e-12).unwrap_err();
        match err {
            Error::NoRoot { best_residual, starts, .. } => {
                assert!(best_residual >= 1.0 - 1e-9);
                assert!(starts > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multistart_from_bad_start() {
        // Newton from x0 = 0 hits a zero derivative; the grid rescues it.
        let x = solve_roots(|x| Ok(vec![x[0] * x[0] * x[0] - 8.0]), &[0.0], 1e-12).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn lattice_counts() {
        let g = StartGrid::lattice(0.0, 15.0, 2.5, 3).unwrap();
        assert_eq!(g.points.len(), 7 * 7 * 7);
        assert!(g.points.iter().all(|p| p.len() == 3));
    }
}
