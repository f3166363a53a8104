//! Damped Newton iteration on estimating equations.
//!
//! The solvers in this crate share one root finder: Newton steps on
//! `Z(params) = 0` with a backtracking line search that halves the step when
//! the trial point is inadmissible or fails to decrease the residual norm.
//! The Jacobian is either supplied in closed form or formed by central
//! differences of `Z`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::central_diff_jacobian;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOpts {
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Step for the finite-difference Jacobian fallback.
    pub fd_step: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOpts {
    fn default() -> Self {
        NewtonOpts {
            grad_tol: 1e-8,
            max_iter: 200,
            fd_step: 1e-6,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `Z(x) = 0` by damped Newton.
///
/// `eval` returns the estimating function; an `InadmissibleParams` error from
/// it triggers backtracking rather than failure. `jacobian`, when given,
/// supplies the closed-form Jacobian at an admissible point.
pub fn newton_solve<F, J>(
    init: &DVector<f64>,
    mut eval: F,
    mut jacobian: Option<J>,
    opts: &NewtonOpts,
) -> Result<(DVector<f64>, SolveStats)>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    J: FnMut(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let mut x = init.clone();
    let mut z = eval(&x)?;
    let mut norm = z.amax();
    for iter in 0..opts.max_iter {
        if norm <= opts.grad_tol {
            return Ok((
                x,
                SolveStats {
                    iterations: iter,
                    residual: norm,
                },
            ));
        }
        let jac = match jacobian.as_mut() {
            Some(j) => j(&x)?,
            None => {
                // FD evaluations may step outside the admissible set; treat
                // that as a singular direction and fall through to ridge.
                let mut fd_ok = true;
                let jac = central_diff_jacobian(
                    |p| match eval(p) {
                        Ok(v) => v,
                        Err(_) => {
                            fd_ok = false;
                            DVector::zeros(z.len())
                        }
                    },
                    &x,
                    opts.fd_step,
                );
                if !fd_ok {
                    return Err(Error::InadmissibleParams(
                        "finite-difference Jacobian crossed the admissible boundary".into(),
                    ));
                }
                jac
            }
        };
        let step = solve_linear(&jac, &(-&z))?;

        // Backtracking: halve on inadmissibility or non-decrease of |Z|.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..opts.max_halvings {
            let trial = &x + &step * t;
            match eval(&trial) {
                Ok(z_trial) => {
                    let norm_trial = z_trial.amax();
                    if norm_trial < norm {
                        x = trial;
                        z = z_trial;
                        norm = norm_trial;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                Err(Error::InadmissibleParams(_)) | Err(Error::DomainError(_)) => t *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            // Line search exhausted. Distinguish a boundary from a stall.
            let probe = &x + &step * t;
            if let Err(Error::InadmissibleParams(msg)) = eval(&probe) {
                return Err(Error::InadmissibleParams(format!(
                    "line search could not restore admissibility: {msg}"
                )));
            }
            return Err(Error::non_convergence("newton line search stalled", opts.max_iter, norm));
        }
    }
    if norm <= opts.grad_tol {
        Ok((
            x,
            SolveStats {
                iterations: opts.max_iter,
                residual: norm,
            },
        ))
    } else {
        Err(Error::non_convergence("newton iteration", opts.max_iter, norm))
    }
}

/// Solve `A s = b` by LU, falling back to a ridge-regularized system when A
/// is numerically singular.
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(s) = a.clone().lu().solve(b) {
        if s.iter().all(|v| v.is_finite()) {
            return Ok(s);
        }
    }
    let p = a.nrows();
    let ridge = 1e-10 * a.trace().abs().max(1e-8);
    let reg = a + DMatrix::identity(p, p) * ridge;
    reg.lu()
        .solve(b)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularBread { cond: f64::INFINITY })
}

/// Solve the symmetric system `A x = b` by Cholesky with the ridge fallback
/// `A + (1e-10 trace(A)) I` when the factorization fails.
pub fn solve_spd_with_ridge(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let p = a.nrows();
    let ridge = 1e-10 * a.trace().abs().max(1e-12);
    let reg = a + DMatrix::identity(p, p) * ridge;
    match reg.cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => solve_linear(a, b),
    }
}
