//! Unnormalized model interface and concrete families.
//!
//! A model exposes `log p~(x; theta)` together with every derivative the
//! estimators consume: the parameter gradient, the coordinate-wise
//! x-gradient `c_s(x) = d log p~ / d x_s` and its derivatives in `x_s` and in
//! `theta`. Derivatives are model-supplied closed forms; the test suites
//! verify them against central finite differences.
//!
//! Two families are built in:
//! * [`TruncatedGgm`] — `log p~(x; L) = -0.5 x' L x` on the nonnegative
//!   orthant, parameterized by the upper triangle of the symmetric precision
//!   matrix `L`. Admissibility (positive definiteness) is checked by
//!   Cholesky factorization so solvers can backtrack on failure instead of
//!   propagating NaN.
//! * [`TruncExpFamily`] — `log p~(x; theta) = sum_k theta_k F_k(x)` with
//!   caller-supplied sufficient statistics.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Support of the baseline (Lebesgue) measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    FullSpace,
    NonnegOrthant,
}

impl Support {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            Support::FullSpace => x.iter().all(|v| v.is_finite()),
            Support::NonnegOrthant => x.iter().all(|v| v.is_finite() && *v >= 0.0),
        }
    }
}

/// Derivatives of the coordinate score `c_s(x) = d log p~ / d x_s`.
///
/// Columns are indexed by the coordinate `s`.
#[derive(Debug, Clone)]
pub struct ScoreDerivatives {
    /// `d c_s / d x_s`, one entry per coordinate.
    pub dc_dx: DVector<f64>,
    /// `grad_theta c_s` as column `s` (param_dim x x_dim).
    pub grad_theta_c: DMatrix<f64>,
    /// `grad_theta (d c_s / d x_s)` as column `s` (param_dim x x_dim).
    pub grad_theta_dc_dx: DMatrix<f64>,
}

/// A parametric family known only up to its normalizing constant.
pub trait UnnormalizedModel: Send + Sync {
    fn param_dim(&self) -> usize;
    fn x_dim(&self) -> usize;
    fn support(&self) -> Support;

    /// Errors with `InadmissibleParams` outside the admissible set.
    fn check_theta(&self, theta: &DVector<f64>) -> Result<()>;

    /// `log p~(x; theta)`.
    fn log_unnorm(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Result<f64>;

    /// `grad_theta log p~(x; theta)`.
    fn grad_theta_log_unnorm(&self, theta: &DVector<f64>, x: &DVector<f64>)
        -> Result<DVector<f64>>;

    /// Coordinate scores `(c_1, ..., c_dx)`.
    fn score_x(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// All score derivatives used by score matching and its variance pieces.
    fn score_x_derivatives(&self, theta: &DVector<f64>, x: &DVector<f64>)
        -> Result<ScoreDerivatives>;

    /// `true` when `log p~` is exactly linear in `theta`. Fitting routines
    /// use closed-form Jacobians and cached designs in that case.
    fn linear_in_theta(&self) -> bool {
        false
    }

    fn check_support(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.x_dim() {
            return Err(Error::DimensionMismatch(format!(
                "x has length {}, model dimension is {}",
                x.len(),
                self.x_dim()
            )));
        }
        if !self.support().contains(x) {
            return Err(Error::OutOfSupport(format!("x = {:?}", x.as_slice())));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Truncated Gaussian graphical model
// ---------------------------------------------------------------------------

/// Gaussian graphical model truncated to the nonnegative orthant.
///
/// Free parameters are the upper triangle of the precision matrix in
/// row-major order: `(0,0), (0,1), ..., (0,d-1), (1,1), ..., (d-1,d-1)`.
/// The gradient entry for an off-diagonal pair `(i,j)` uses the symmetric
/// convention `-x_i x_j` (the pair is counted once).
#[derive(Debug, Clone)]
pub struct TruncatedGgm {
    dim: usize,
}

impl TruncatedGgm {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        TruncatedGgm { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free parameters, d(d+1)/2.
    pub fn n_params(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Flat index of the upper-triangle entry (i, j) with i <= j.
    pub fn param_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // offset of row i = sum over r < i of (d - r)
        i * self.dim - i * (i + 1) / 2 + j
    }

    /// Inverse of [`TruncatedGgm::param_index`].
    pub fn param_pair(&self, k: usize) -> (usize, usize) {
        let mut idx = k;
        for i in 0..self.dim {
            let row_len = self.dim - i;
            if idx < row_len {
                return (i, i + idx);
            }
            idx -= row_len;
        }
        panic!("parameter index {k} out of range");
    }

    /// Expand a packed parameter vector into the symmetric precision matrix.
    pub fn precision_from_theta(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        assert_eq!(theta.len(), self.n_params());
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for k in 0..theta.len() {
            let (i, j) = self.param_pair(k);
            m[(i, j)] = theta[k];
            m[(j, i)] = theta[k];
        }
        m
    }

    /// Pack a symmetric precision matrix into the parameter vector.
    pub fn theta_from_precision(&self, precision: &DMatrix<f64>) -> DVector<f64> {
        assert_eq!(precision.nrows(), self.dim);
        assert_eq!(precision.ncols(), self.dim);
        let mut theta = DVector::zeros(self.n_params());
        for k in 0..theta.len() {
            let (i, j) = self.param_pair(k);
            theta[k] = precision[(i, j)];
        }
        theta
    }
}

impl UnnormalizedModel for TruncatedGgm {
    fn param_dim(&self) -> usize {
        self.n_params()
    }

    fn x_dim(&self) -> usize {
        self.dim
    }

    fn support(&self) -> Support {
        Support::NonnegOrthant
    }

    fn check_theta(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.n_params()
            )));
        }
        let lambda = self.precision_from_theta(theta);
        if lambda.cholesky().is_none() {
            return Err(Error::InadmissibleParams(
                "precision matrix is not positive definite".into(),
            ));
        }
        Ok(())
    }

    fn log_unnorm(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        let lambda = self.precision_from_theta(theta);
        Ok(-0.5 * (x.transpose() * &lambda * x)[(0, 0)])
    }

    fn grad_theta_log_unnorm(
        &self,
        theta: &DVector<f64>,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        let mut g = DVector::zeros(self.n_params());
        for k in 0..g.len() {
            let (i, j) = self.param_pair(k);
            g[k] = if i == j { -0.5 * x[i] * x[i] } else { -x[i] * x[j] };
        }
        Ok(g)
    }

    fn score_x(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        let lambda = self.precision_from_theta(theta);
        Ok(-(&lambda * x))
    }

    fn score_x_derivatives(
        &self,
        theta: &DVector<f64>,
        x: &DVector<f64>,
    ) -> Result<ScoreDerivatives> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        let p = self.n_params();
        let d = self.dim;
        let lambda = self.precision_from_theta(theta);
        let mut dc_dx = DVector::zeros(d);
        for s in 0..d {
            dc_dx[s] = -lambda[(s, s)];
        }
        // c_s = -sum_t L_st x_t, so the derivative in the free entry (i, j)
        // is -x_j when s = i and -x_i when s = j (both when i = j = s).
        let mut grad_theta_c = DMatrix::zeros(p, d);
        let mut grad_theta_dc = DMatrix::zeros(p, d);
        for k in 0..p {
            let (i, j) = self.param_pair(k);
            if i == j {
                grad_theta_c[(k, i)] = -x[i];
                grad_theta_dc[(k, i)] = -1.0;
            } else {
                grad_theta_c[(k, i)] = -x[j];
                grad_theta_c[(k, j)] = -x[i];
            }
        }
        Ok(ScoreDerivatives {
            dc_dx,
            grad_theta_c,
            grad_theta_dc_dx: grad_theta_dc,
        })
    }

    fn linear_in_theta(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Truncated exponential family
// ---------------------------------------------------------------------------

type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type AdmissibleFn = Arc<dyn Fn(&DVector<f64>) -> bool + Send + Sync>;

/// One sufficient statistic `F_k` with its x-gradient and the diagonal of its
/// second x-derivatives (`d^2 F_k / d x_s^2` per coordinate).
#[derive(Clone)]
pub struct SufficientStat {
    pub value: ScalarFn,
    pub grad_x: VectorFn,
    pub lap_diag: VectorFn,
}

/// Exponential family `log p~(x; theta) = sum_k theta_k F_k(x)`.
#[derive(Clone)]
pub struct TruncExpFamily {
    x_dim: usize,
    support: Support,
    stats: Vec<SufficientStat>,
    admissible: Option<AdmissibleFn>,
}

impl TruncExpFamily {
    pub fn new(x_dim: usize, support: Support, stats: Vec<SufficientStat>) -> Self {
        assert!(!stats.is_empty());
        TruncExpFamily {
            x_dim,
            support,
            stats,
            admissible: None,
        }
    }

    /// Restrict the admissible parameter set (integrability constraints).
    pub fn with_admissible(
        mut self,
        f: impl Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.admissible = Some(Arc::new(f));
        self
    }

    /// `K_1(x)`: param_dim x x_dim matrix with entries `d F_a / d x_b`.
    pub fn k1(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut k1 = DMatrix::zeros(self.stats.len(), self.x_dim);
        for (a, st) in self.stats.iter().enumerate() {
            let g = (st.grad_x)(x);
            for b in 0..self.x_dim {
                k1[(a, b)] = g[b];
            }
        }
        k1
    }

    /// `K_2(x)`: param_dim x x_dim matrix with entries `d^2 F_a / d x_b^2`.
    /// Column `i` is the vector written `K_{i,2}(x)`.
    pub fn k2(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut k2 = DMatrix::zeros(self.stats.len(), self.x_dim);
        for (a, st) in self.stats.iter().enumerate() {
            let l = (st.lap_diag)(x);
            for b in 0..self.x_dim {
                k2[(a, b)] = l[b];
            }
        }
        k2
    }

    /// 1-d family `log p~(x; lambda) = -lambda x` on the nonnegative half
    /// line (exponential distribution shape, rate `lambda > 0`).
    pub fn exponential_1d() -> Self {
        TruncExpFamily::new(
            1,
            Support::NonnegOrthant,
            vec![SufficientStat {
                value: Arc::new(|x: &DVector<f64>| -x[0]),
                grad_x: Arc::new(|_x: &DVector<f64>| DVector::from_element(1, -1.0)),
                lap_diag: Arc::new(|_x: &DVector<f64>| DVector::zeros(1)),
            }],
        )
        .with_admissible(|t| t[0] > 0.0)
    }

    /// 1-d family `log p~(x; lambda) = -0.5 lambda x^2` on the full line
    /// (Gaussian shape with precision `lambda > 0`).
    pub fn gaussian_shape_1d() -> Self {
        TruncExpFamily::new(
            1,
            Support::FullSpace,
            vec![SufficientStat {
                value: Arc::new(|x: &DVector<f64>| -0.5 * x[0] * x[0]),
                grad_x: Arc::new(|x: &DVector<f64>| DVector::from_element(1, -x[0])),
                lap_diag: Arc::new(|_x: &DVector<f64>| DVector::from_element(1, -1.0)),
            }],
        )
        .with_admissible(|t| t[0] > 0.0)
    }

    /// The truncated GGM recast as an exponential family with statistics
    /// `-0.5 x_i^2` (diagonal) and `-x_i x_j` (off-diagonal pairs).
    pub fn from_ggm(dim: usize) -> Self {
        let ggm = TruncatedGgm::new(dim);
        let mut stats = Vec::with_capacity(ggm.n_params());
        for k in 0..ggm.n_params() {
            let (i, j) = ggm.param_pair(k);
            if i == j {
                stats.push(SufficientStat {
                    value: Arc::new(move |x: &DVector<f64>| -0.5 * x[i] * x[i]),
                    grad_x: Arc::new(move |x: &DVector<f64>| {
                        let mut g = DVector::zeros(x.len());
                        g[i] = -x[i];
                        g
                    }),
                    lap_diag: Arc::new(move |x: &DVector<f64>| {
                        let mut l = DVector::zeros(x.len());
                        l[i] = -1.0;
                        l
                    }),
                });
            } else {
                stats.push(SufficientStat {
                    value: Arc::new(move |x: &DVector<f64>| -x[i] * x[j]),
                    grad_x: Arc::new(move |x: &DVector<f64>| {
                        let mut g = DVector::zeros(x.len());
                        g[i] = -x[j];
                        g[j] = -x[i];
                        g
                    }),
                    lap_diag: Arc::new(move |x: &DVector<f64>| DVector::zeros(x.len())),
                });
            }
        }
        let check = TruncatedGgm::new(dim);
        TruncExpFamily::new(dim, Support::NonnegOrthant, stats)
            .with_admissible(move |t| check.check_theta(t).is_ok())
    }
}

impl UnnormalizedModel for TruncExpFamily {
    fn param_dim(&self) -> usize {
        self.stats.len()
    }

    fn x_dim(&self) -> usize {
        self.x_dim
    }

    fn support(&self) -> Support {
        self.support
    }

    fn check_theta(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.stats.len() {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.stats.len()
            )));
        }
        if let Some(adm) = &self.admissible {
            if !adm(theta) {
                return Err(Error::InadmissibleParams(
                    "theta outside the admissible set of the exponential family".into(),
                ));
            }
        }
        Ok(())
    }

    fn log_unnorm(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        Ok(self
            .stats
            .iter()
            .zip(theta.iter())
            .map(|(st, &t)| t * (st.value)(x))
            .sum())
    }

    fn grad_theta_log_unnorm(
        &self,
        theta: &DVector<f64>,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        Ok(DVector::from_iterator(
            self.stats.len(),
            self.stats.iter().map(|st| (st.value)(x)),
        ))
    }

    fn score_x(&self, theta: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        // c(x) = K1(x)' theta
        Ok(self.k1(x).transpose() * theta)
    }

    fn score_x_derivatives(
        &self,
        theta: &DVector<f64>,
        x: &DVector<f64>,
    ) -> Result<ScoreDerivatives> {
        self.check_support(x)?;
        self.check_theta(theta)?;
        let k1 = self.k1(x);
        let k2 = self.k2(x);
        Ok(ScoreDerivatives {
            dc_dx: k2.transpose() * theta,
            grad_theta_c: k1,
            grad_theta_dc_dx: k2,
        })
    }

    fn linear_in_theta(&self) -> bool {
        true
    }
}
