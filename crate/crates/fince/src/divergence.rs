//! Divergence functions driving generalized NCE and score matching.
//!
//! A divergence function `f` is twice differentiable and strictly convex on
//! its domain. The three built-in kinds cover the estimators used here:
//! `u log u` (Monte Carlo MLE), `u log u - (1+u) log(1+u)` (original NCE)
//! and `0.5 u^2` (score matching). A `Custom` variant accepts a
//! caller-supplied `(f, f', f'')` triple.
//!
//! Evaluations under the log-based kinds clamp the argument to `u >= 1e-300`
//! because importance ratios can underflow to zero; arguments that are
//! nonpositive as stated are rejected with a domain error.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest ratio accepted under the log-based divergence kinds.
pub const LOG_DOMAIN_CLAMP: f64 = 1e-300;

type TripleFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

/// Divergence function `f` together with its first two derivatives.
#[derive(Clone)]
pub enum Divergence {
    /// `f(u) = u log u` (Monte Carlo MLE).
    LogLinear,
    /// `f(u) = u log u - (1+u) log(1+u)` (original NCE).
    Nce,
    /// `f(u) = 0.5 u^2` (score matching).
    Quadratic,
    /// User-supplied `(f, f', f'')`, assumed valid for all `u > 0`.
    Custom(TripleFn),
}

impl fmt::Debug for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Divergence::LogLinear => "LogLinear",
            Divergence::Nce => "Nce",
            Divergence::Quadratic => "Quadratic",
            Divergence::Custom(_) => "Custom",
        };
        write!(f, "Divergence::{name}")
    }
}

impl Divergence {
    /// Closed-form `(f(u), f'(u), f''(u))`.
    pub fn eval(&self, u: f64) -> Result<(f64, f64, f64)> {
        match self {
            Divergence::Quadratic => Ok((0.5 * u * u, u, 1.0)),
            Divergence::LogLinear => {
                let u = self.clamped(u)?;
                Ok((u * u.ln(), u.ln() + 1.0, 1.0 / u))
            }
            Divergence::Nce => {
                let u = self.clamped(u)?;
                let f = u * u.ln() - (1.0 + u) * (1.0 + u).ln();
                let f1 = u.ln() - (1.0 + u).ln();
                let f2 = 1.0 / (u * (1.0 + u));
                Ok((f, f1, f2))
            }
            Divergence::Custom(g) => Ok(g(u)),
        }
    }

    /// Bregman divergence `Br_f(o1, o2) = f(o1) - f(o2) - f'(o2)(o1 - o2)`.
    ///
    /// Nonnegative by convexity, zero exactly when `o1 = o2`.
    pub fn bregman(&self, o1: f64, o2: f64) -> Result<f64> {
        if o1 == o2 {
            return Ok(0.0);
        }
        let (f1, _, _) = self.eval(o1)?;
        let (f2, d2, _) = self.eval(o2)?;
        Ok(f1 - f2 - d2 * (o1 - o2))
    }

    fn clamped(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            if u == 0.0 {
                // treat exact zero as an underflowed positive ratio
                return Ok(LOG_DOMAIN_CLAMP);
            }
            return Err(Error::DomainError(format!(
                "ratio {u} outside the domain u > 0 of {self:?}"
            )));
        }
        Ok(u.max(LOG_DOMAIN_CLAMP))
    }

    /// `f''(r) r` — the factor on the data-side estimating term.
    pub fn weight1(&self, r: f64) -> Result<f64> {
        match self {
            Divergence::LogLinear => {
                self.clamped(r)?;
                Ok(1.0)
            }
            Divergence::Nce => {
                let r = self.clamped(r)?;
                Ok(1.0 / (1.0 + r))
            }
            Divergence::Quadratic => Ok(r),
            Divergence::Custom(_) => {
                let (_, _, f2) = self.eval(r)?;
                Ok(f2 * r)
            }
        }
    }

    /// `f''(r) r^2` — the factor on the noise-side estimating term.
    pub fn weight2(&self, r: f64) -> Result<f64> {
        match self {
            Divergence::LogLinear => self.clamped(r),
            Divergence::Nce => {
                let r = self.clamped(r)?;
                Ok(r / (1.0 + r))
            }
            Divergence::Quadratic => Ok(r * r),
            Divergence::Custom(_) => {
                let (_, _, f2) = self.eval(r)?;
                Ok(f2 * r * r)
            }
        }
    }

    /// Derivatives of the two weight factors with respect to `log r`, used
    /// for closed-form Jacobians of the estimating equation. The `Custom`
    /// kind falls back to a central difference in log space.
    pub fn weight_dlog(&self, r: f64) -> Result<(f64, f64)> {
        match self {
            Divergence::LogLinear => {
                let r = self.clamped(r)?;
                Ok((0.0, r))
            }
            Divergence::Nce => {
                let r = self.clamped(r)?;
                let d = (1.0 + r) * (1.0 + r);
                Ok((-r / d, r / d))
            }
            Divergence::Quadratic => Ok((r, 2.0 * r * r)),
            Divergence::Custom(_) => {
                let eps = 1e-6;
                let up = r * (1.0 + eps);
                let dn = r * (1.0 - eps);
                let g1 = (self.weight1(up)? - self.weight1(dn)?) / (2.0 * eps);
                let g2 = (self.weight2(up)? - self.weight2(dn)?) / (2.0 * eps);
                Ok((g1, g2))
            }
        }
    }

    /// Per-point objective terms `(m1(r), m2(r))`: the sample objective is
    /// `mean m1(r(x_i)) + mean m2(r(y_j))`. These are the Bregman cross
    /// entropy terms `m1 = -f'(r)`, `m2 = f'(r) r - f(r)`, shifted by
    /// ratio-independent constants for the built-in kinds so the log-linear
    /// data term is exactly `-log q(x)` + const and the NCE objective is the
    /// familiar logistic loss. The estimating function is the exact
    /// tau-gradient of the objective for every kind.
    pub fn objective_terms(&self, r: f64) -> Result<(f64, f64)> {
        match self {
            Divergence::LogLinear => {
                let r = self.clamped(r)?;
                Ok((-r.ln(), r))
            }
            Divergence::Nce => {
                let r = self.clamped(r)?;
                // -log(r / (1 + r)) and log(1 + r)
                Ok(((1.0 + r).ln() - r.ln(), (1.0 + r).ln()))
            }
            _ => {
                let (f, d, _) = self.eval(r)?;
                Ok((-d, d * r - f))
            }
        }
    }
}
