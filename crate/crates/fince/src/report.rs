//! Estimate reports and solver options shared by every fitting routine.

use nalgebra::{DMatrix, DVector};
use serde_json::json;

/// Which estimator produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    NceComplete,
    ScoreComplete,
    Fince,
    Fiscore,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::NceComplete => "nce_complete",
            MethodTag::ScoreComplete => "score_complete",
            MethodTag::Fince => "fince",
            MethodTag::Fiscore => "fiscore",
        }
    }

    /// NCE-family reports carry the extended parameter vector with the
    /// log-normalizer nuisance `c` in the first slot.
    pub fn has_nuisance_c(&self) -> bool {
        matches!(self, MethodTag::NceComplete | MethodTag::Fince)
    }
}

/// Options shared by the EM loops and their inner solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverOpts {
    /// Tolerance on the max-norm of the estimating equation.
    pub grad_tol: f64,
    /// EM stops when the max-norm parameter change falls below this.
    pub em_tol: f64,
    pub max_em_iter: usize,
    pub max_inner_iter: usize,
    /// Record the EM parameter iterates in the report.
    pub record_trajectory: bool,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            grad_tol: 1e-8,
            em_tol: 1e-6,
            max_em_iter: 500,
            max_inner_iter: 200,
            record_trajectory: false,
        }
    }
}

/// Point estimate with diagnostics and, when available, the sandwich
/// covariance of the reported parameter vector.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub method: MethodTag,
    /// `tau = (c, theta)` for NCE-family methods, `theta` otherwise.
    pub params: DVector<f64>,
    /// Propensity parameter estimate in MNAR mode.
    pub phi: Option<DVector<f64>>,
    pub covariance: Option<DMatrix<f64>>,
    pub std_errors: Option<DVector<f64>>,
    /// Total inner-solver iterations.
    pub iterations: usize,
    /// EM sweeps performed (1 for complete-data fits).
    pub em_iterations: usize,
    /// Max-norm of the estimating equation at the estimate.
    pub final_grad_norm: f64,
    /// Max-norm of the joint (weights re-evaluated at the estimate)
    /// imputed estimating equation; `None` for complete-data fits.
    pub final_em_residual: Option<f64>,
    pub converged: bool,
    pub seed: Option<u64>,
    /// EM parameter iterates when trajectory recording was requested.
    pub trajectory: Option<Vec<DVector<f64>>>,
}

impl EstimateReport {
    pub fn new(method: MethodTag, params: DVector<f64>) -> Self {
        EstimateReport {
            method,
            params,
            phi: None,
            covariance: None,
            std_errors: None,
            iterations: 0,
            em_iterations: 0,
            final_grad_norm: f64::NAN,
            final_em_residual: None,
            converged: false,
            seed: None,
            trajectory: None,
        }
    }

    /// Model parameters with the nuisance `c` stripped off.
    pub fn theta(&self) -> DVector<f64> {
        if self.method.has_nuisance_c() {
            self.params.rows(1, self.params.len() - 1).into_owned()
        } else {
            self.params.clone()
        }
    }

    /// Offset of `theta[0]` inside `params`.
    pub fn theta_offset(&self) -> usize {
        usize::from(self.method.has_nuisance_c())
    }

    pub fn set_covariance(&mut self, cov: DMatrix<f64>) {
        let se = DVector::from_iterator(cov.nrows(), (0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()));
        self.covariance = Some(cov);
        self.std_errors = Some(se);
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "method": self.method.as_str(),
            "params": self.params.as_slice(),
            "phi": self.phi.as_ref().map(|p| p.as_slice().to_vec()),
            "std_errors": self.std_errors.as_ref().map(|s| s.as_slice().to_vec()),
            "covariance": self.covariance.as_ref().map(|c| {
                (0..c.nrows())
                    .map(|i| (0..c.ncols()).map(|j| c[(i, j)]).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            }),
            "iterations": self.iterations,
            "em_iterations": self.em_iterations,
            "final_grad_norm": self.final_grad_norm,
            "final_em_residual": self.final_em_residual,
            "converged": self.converged,
            "seed": self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_strips_nuisance() {
        let mut r = EstimateReport::new(MethodTag::Fince, DVector::from_vec(vec![0.5, 1.0, 2.0]));
        assert_eq!(r.theta().as_slice(), &[1.0, 2.0]);
        assert_eq!(r.theta_offset(), 1);
        r.method = MethodTag::Fiscore;
        assert_eq!(r.theta().len(), 3);
    }

    #[test]
    fn std_errors_are_sqrt_diagonal() {
        let mut r = EstimateReport::new(MethodTag::ScoreComplete, DVector::from_vec(vec![1.0]));
        r.set_covariance(DMatrix::from_row_slice(1, 1, &[0.25]));
        assert_eq!(r.std_errors.as_ref().unwrap()[0], 0.5);
    }
}
