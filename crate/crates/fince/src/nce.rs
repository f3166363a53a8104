//! Complete-data generalized noise contrastive estimation.
//!
//! The extended model is `q(x; tau) = exp(-c) p~(x; theta)` with
//! `tau = (c, theta)`; `c` is a nuisance approximating the log normalizer.
//! Against a noise sample from a known density `a`, the objective is the
//! Bregman cross entropy
//!
//! ```text
//!   mean_i m1(r(x_i)) + mean_j m2(r(y_j)),   r = q / a,
//! ```
//!
//! whose exact tau-gradient is the estimating function
//!
//! ```text
//!   Z = mean_i z1(x_i) + mean_j z2(y_j),
//!   z1 = -grad_tau log q * f''(r) r,   z2 = grad_tau log q * f''(r) r^2.
//! ```
//!
//! With the log-linear divergence the data term reduces to `-mean log q` and
//! the noise term to `mean r` (Monte Carlo MLE); with the NCE divergence the
//! objective is the familiar logistic loss. Fitting solves `Z = 0` by damped
//! Newton with a numerically differenced Jacobian and a backtracking line
//! search that halves the step on inadmissible parameters.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::model::UnnormalizedModel;
use crate::numeric::{standard_normal, truncated_normal_lower};
use crate::report::{EstimateReport, MethodTag, SolverOpts};
use crate::solver::{newton_solve, NewtonOpts};

/// Extended parameters `tau = (c, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedParams {
    pub c: f64,
    pub theta: DVector<f64>,
}

impl ExtendedParams {
    pub fn new(c: f64, theta: DVector<f64>) -> Self {
        ExtendedParams { c, theta }
    }

    /// Default initialization: `c = 0`, theta a small seeded perturbation of
    /// the supplied start.
    pub fn default_init(start: &DVector<f64>, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let theta = DVector::from_iterator(
            start.len(),
            start.iter().map(|&v| v + 1e-3 * standard_normal(&mut rng)),
        );
        ExtendedParams { c: 0.0, theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len() + 1
    }

    /// Pack into a flat vector with `c` first.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = self.c;
        v.rows_mut(1, self.theta.len()).copy_from(&self.theta);
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        ExtendedParams {
            c: v[0],
            theta: v.rows(1, v.len() - 1).into_owned(),
        }
    }

    /// `log q(x; tau) = -c + log p~(x; theta)`.
    pub fn log_q(&self, model: &dyn UnnormalizedModel, x: &DVector<f64>) -> Result<f64> {
        Ok(-self.c + model.log_unnorm(&self.theta, x)?)
    }

    /// `grad_tau log q = (-1, grad_theta log p~)`.
    pub fn grad_log_q(
        &self,
        model: &dyn UnnormalizedModel,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let g = model.grad_theta_log_unnorm(&self.theta, x)?;
        let mut v = DVector::zeros(g.len() + 1);
        v[0] = -1.0;
        v.rows_mut(1, g.len()).copy_from(&g);
        Ok(v)
    }
}

/// Density ratio `r(x; tau) = q(x; tau) / a(x)`, strictly positive wherever
/// both densities are.
pub fn density_ratio(log_q: f64, log_a: f64) -> f64 {
    (log_q - log_a).exp()
}

// ---------------------------------------------------------------------------
// Noise distributions
// ---------------------------------------------------------------------------

/// A noise (or auxiliary) distribution with evaluable log density.
pub trait NoiseDistribution: Send + Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, y: &DVector<f64>) -> f64;
    fn sample(&self, rng: &mut ChaCha12Rng) -> DVector<f64>;
}

/// Product of coordinate-wise half-normals (mean-zero normals truncated to
/// the nonnegative half line). The second moment of each coordinate equals
/// `sigma2`, which makes moment matching a one-liner.
#[derive(Debug, Clone)]
pub struct HalfNormalProduct {
    pub sigma2: Vec<f64>,
}

impl HalfNormalProduct {
    pub fn new(sigma2: Vec<f64>) -> Self {
        assert!(sigma2.iter().all(|&s| s > 0.0));
        HalfNormalProduct { sigma2 }
    }

    /// Match the second moment of each coordinate of the rows.
    pub fn match_second_moments(rows: &[DVector<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("no rows for moment matching".into()));
        }
        let d = rows[0].len();
        let mut sigma2 = vec![0.0; d];
        for r in rows {
            for s in 0..d {
                sigma2[s] += r[s] * r[s];
            }
        }
        for v in &mut sigma2 {
            *v /= rows.len() as f64;
            if *v <= 0.0 {
                return Err(Error::EmptyInput("degenerate coordinate in moment matching".into()));
            }
        }
        Ok(HalfNormalProduct { sigma2 })
    }
}

impl NoiseDistribution for HalfNormalProduct {
    fn dim(&self) -> usize {
        self.sigma2.len()
    }

    fn log_density(&self, y: &DVector<f64>) -> f64 {
        let mut ld = 0.0;
        for (s, &s2) in self.sigma2.iter().enumerate() {
            if y[s] < 0.0 {
                return f64::NEG_INFINITY;
            }
            ld += std::f64::consts::LN_2
                - 0.5 * (2.0 * std::f64::consts::PI * s2).ln()
                - y[s] * y[s] / (2.0 * s2);
        }
        ld
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> DVector<f64> {
        DVector::from_iterator(
            self.sigma2.len(),
            self.sigma2
                .iter()
                .map(|&s2| truncated_normal_lower(0.0, s2.sqrt(), 0.0, rng)),
        )
    }
}

/// Product of coordinate-wise exponentials.
#[derive(Debug, Clone)]
pub struct ExponentialProduct {
    pub rates: Vec<f64>,
}

impl ExponentialProduct {
    pub fn new(rates: Vec<f64>) -> Self {
        assert!(rates.iter().all(|&r| r > 0.0));
        ExponentialProduct { rates }
    }

    /// Exponentials with the same mean as each coordinate of the rows.
    pub fn match_means(means: &[f64]) -> Result<Self> {
        if means.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::EmptyInput("nonpositive coordinate mean".into()));
        }
        Ok(ExponentialProduct {
            rates: means.iter().map(|m| 1.0 / m).collect(),
        })
    }
}

impl NoiseDistribution for ExponentialProduct {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn log_density(&self, y: &DVector<f64>) -> f64 {
        let mut ld = 0.0;
        for (s, &rate) in self.rates.iter().enumerate() {
            if y[s] < 0.0 {
                return f64::NEG_INFINITY;
            }
            ld += rate.ln() - rate * y[s];
        }
        ld
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> DVector<f64> {
        DVector::from_iterator(
            self.rates.len(),
            self.rates.iter().map(|&r| crate::numeric::exponential(r, rng)),
        )
    }
}

/// Product of coordinate-wise normals on the full space (test models).
#[derive(Debug, Clone)]
pub struct GaussianProduct {
    pub sigma2: Vec<f64>,
}

impl NoiseDistribution for GaussianProduct {
    fn dim(&self) -> usize {
        self.sigma2.len()
    }

    fn log_density(&self, y: &DVector<f64>) -> f64 {
        self.sigma2
            .iter()
            .enumerate()
            .map(|(s, &s2)| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - y[s] * y[s] / (2.0 * s2))
            .sum()
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> DVector<f64> {
        DVector::from_iterator(
            self.sigma2.len(),
            self.sigma2.iter().map(|&s2| s2.sqrt() * standard_normal(rng)),
        )
    }
}

/// A drawn noise sample with cached log densities and a handle on the
/// distribution so densities can be evaluated at new points (completions,
/// importance ratios).
#[derive(Clone)]
pub struct NoiseSample {
    pub points: Vec<DVector<f64>>,
    pub log_density: Vec<f64>,
    dist: Arc<dyn NoiseDistribution>,
}

impl NoiseSample {
    /// Draw `n` points; deterministic given the seed.
    pub fn draw(dist: Arc<dyn NoiseDistribution>, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        let mut log_density = Vec::with_capacity(n);
        for _ in 0..n {
            let y = dist.sample(&mut rng);
            let ld = dist.log_density(&y);
            if !ld.is_finite() {
                return Err(Error::DomainError(
                    "noise density not finite at its own draw".into(),
                ));
            }
            points.push(y);
            log_density.push(ld);
        }
        Ok(NoiseSample {
            points,
            log_density,
            dist,
        })
    }

    /// Wrap existing points (tests, fixtures).
    pub fn from_points(dist: Arc<dyn NoiseDistribution>, points: Vec<DVector<f64>>) -> Self {
        let log_density = points.iter().map(|y| dist.log_density(y)).collect();
        NoiseSample {
            points,
            log_density,
            dist,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `log a(y)` at an arbitrary point.
    pub fn log_density_at(&self, y: &DVector<f64>) -> f64 {
        self.dist.log_density(y)
    }

    pub fn distribution(&self) -> &Arc<dyn NoiseDistribution> {
        &self.dist
    }
}

// ---------------------------------------------------------------------------
// Objective and estimating function
// ---------------------------------------------------------------------------

/// Generalized NCE objective `M_nc1 + M_nc2` on a complete sample.
pub fn nce_objective(
    data: &[DVector<f64>],
    noise: &NoiseSample,
    tau: &ExtendedParams,
    divergence: &Divergence,
    model: &dyn UnnormalizedModel,
) -> Result<f64> {
    if data.is_empty() || noise.is_empty() {
        return Err(Error::EmptyInput("nce objective needs data and noise".into()));
    }
    let mut m1 = 0.0;
    for x in data {
        let log_q = tau.log_q(model, x)?;
        match divergence {
            // Example-1 form: the data term is exactly -log q.
            Divergence::LogLinear => m1 -= log_q,
            _ => {
                let r = density_ratio(log_q, noise.log_density_at(x));
                m1 += divergence.objective_terms(r)?.0;
            }
        }
    }
    m1 /= data.len() as f64;
    let mut m2 = 0.0;
    for (y, &log_a) in noise.points.iter().zip(&noise.log_density) {
        let r = density_ratio(tau.log_q(model, y)?, log_a);
        m2 += divergence.objective_terms(r)?.1;
    }
    m2 /= noise.len() as f64;
    Ok(m1 + m2)
}

/// Data-side term `z1(x) = -grad_tau log q(x) f''(r) r`.
pub fn z_nc1_point(
    model: &dyn UnnormalizedModel,
    divergence: &Divergence,
    tau: &ExtendedParams,
    x: &DVector<f64>,
    log_a_x: f64,
) -> Result<DVector<f64>> {
    let log_q = tau.log_q(model, x)?;
    let r = density_ratio(log_q, log_a_x);
    let w1 = divergence.weight1(r)?;
    Ok(tau.grad_log_q(model, x)? * (-w1))
}

/// Noise-side term `z2(y) = grad_tau log q(y) f''(r) r^2`.
pub fn z_nc2_point(
    model: &dyn UnnormalizedModel,
    divergence: &Divergence,
    tau: &ExtendedParams,
    y: &DVector<f64>,
    log_a_y: f64,
) -> Result<DVector<f64>> {
    let log_q = tau.log_q(model, y)?;
    let r = density_ratio(log_q, log_a_y);
    let w2 = divergence.weight2(r)?;
    Ok(tau.grad_log_q(model, y)? * w2)
}

/// Moment condition `Z_nc1 + Z_nc2` (dimension `param_dim + 1`); the exact
/// tau-gradient of [`nce_objective`].
pub fn nce_estimating_fn(
    data: &[DVector<f64>],
    noise: &NoiseSample,
    tau: &ExtendedParams,
    divergence: &Divergence,
    model: &dyn UnnormalizedModel,
) -> Result<DVector<f64>> {
    if data.is_empty() || noise.is_empty() {
        return Err(Error::EmptyInput("nce estimating fn needs data and noise".into()));
    }
    let dim = model.param_dim() + 1;
    let mut z = DVector::zeros(dim);
    for x in data {
        z += z_nc1_point(model, divergence, tau, x, noise.log_density_at(x))?;
    }
    z /= data.len() as f64;
    let mut zn = DVector::zeros(dim);
    for (y, &log_a) in noise.points.iter().zip(&noise.log_density) {
        zn += z_nc2_point(model, divergence, tau, y, log_a)?;
    }
    z += zn / noise.len() as f64;
    Ok(z)
}

/// Fit the extended parameters by solving the moment condition.
pub fn fit_nce_complete(
    data: &[DVector<f64>],
    noise: &NoiseSample,
    divergence: &Divergence,
    model: &dyn UnnormalizedModel,
    init: &ExtendedParams,
    opts: &SolverOpts,
) -> Result<EstimateReport> {
    model.check_theta(&init.theta)?;
    let newton_opts = NewtonOpts {
        grad_tol: opts.grad_tol,
        max_iter: opts.max_inner_iter,
        ..NewtonOpts::default()
    };
    let eval = |v: &DVector<f64>| {
        let tau = ExtendedParams::from_vector(v);
        nce_estimating_fn(data, noise, &tau, divergence, model)
    };
    let (sol, stats) = newton_solve(
        &init.to_vector(),
        eval,
        None::<fn(&DVector<f64>) -> Result<nalgebra::DMatrix<f64>>>,
        &newton_opts,
    )?;
    let mut report = EstimateReport::new(MethodTag::NceComplete, sol);
    report.iterations = stats.iterations;
    report.em_iterations = 1;
    report.final_grad_norm = stats.residual;
    report.converged = stats.residual <= opts.grad_tol;
    if matches!(divergence, Divergence::Nce) {
        let tau = ExtendedParams::from_vector(&report.params);
        if let Ok(pieces) = crate::inference::nce_complete_sandwich(data, noise, &tau, model) {
            report.set_covariance(pieces.covariance);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Support, TruncExpFamily};
    use crate::numeric::{central_diff_grad, close_rel};
    use rand::Rng;

    fn gaussian_1d() -> TruncExpFamily {
        TruncExpFamily::gaussian_shape_1d()
    }

    fn tiny_instance(seed: u64, n: usize) -> (Vec<DVector<f64>>, NoiseSample) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let data: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_element(1, standard_normal(&mut rng)))
            .collect();
        let dist = Arc::new(GaussianProduct { sigma2: vec![2.0] });
        let noise = NoiseSample::draw(dist, n, seed ^ 0xabc).unwrap();
        (data, noise)
    }

    #[test]
    fn estimating_fn_is_gradient_of_objective() {
        let model = gaussian_1d();
        let (data, noise) = tiny_instance(1, 20);
        for kind in [Divergence::Nce, Divergence::LogLinear] {
            for &(c, lam) in &[(0.0, 1.0), (0.4, 0.7), (-0.3, 1.8)] {
                let tau_v = DVector::from_vec(vec![c, lam]);
                let z = nce_estimating_fn(
                    &data,
                    &noise,
                    &ExtendedParams::from_vector(&tau_v),
                    &kind,
                    &model,
                )
                .unwrap();
                let g = central_diff_grad(
                    |v| {
                        nce_objective(
                            &data,
                            &noise,
                            &ExtendedParams::from_vector(v),
                            &kind,
                            &model,
                        )
                        .unwrap()
                    },
                    &tau_v,
                    1e-5,
                );
                for k in 0..z.len() {
                    assert!(
                        close_rel(z[k], g[k], 1e-6),
                        "{kind:?} component {k}: {} vs {}",
                        z[k],
                        g[k]
                    );
                }
            }
        }
    }

    #[test]
    fn estimating_fn_cancels_when_data_equals_noise_at_unit_ratio() {
        // With q = a on every point and the data set equal to the noise set,
        // z1 and z2 cancel pointwise under the NCE divergence.
        let model = gaussian_1d();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let pts: Vec<DVector<f64>> =
            (0..15).map(|_| DVector::from_element(1, rng.gen_range(0.1..2.0))).collect();
        // Noise density == q(x; tau): Gaussian with variance 1/lam, times the
        // matching normalizer exp(c).
        let lam = 1.3;
        let c = -0.5 * (lam / (2.0 * std::f64::consts::PI)).ln();
        let dist = Arc::new(GaussianProduct { sigma2: vec![1.0 / lam] });
        let noise = NoiseSample::from_points(dist, pts.clone());
        let tau = ExtendedParams::new(c, DVector::from_element(1, lam));
        let z = nce_estimating_fn(&pts, &noise, &tau, &Divergence::Nce, &model).unwrap();
        assert!(z.amax() < 1e-12, "z = {z:?}");
    }

    #[test]
    fn log_linear_terms_have_closed_form() {
        // z1(x) = -grad log q and z2(y) = r grad log q exactly.
        let model = gaussian_1d();
        let (data, noise) = tiny_instance(2, 5);
        let tau = ExtendedParams::new(0.2, DVector::from_element(1, 0.9));
        let x = &data[0];
        let z1 = z_nc1_point(&model, &Divergence::LogLinear, &tau, x, noise.log_density_at(x))
            .unwrap();
        let v = tau.grad_log_q(&model, x).unwrap();
        assert_eq!(z1, -v.clone());
        let y = &noise.points[0];
        let z2 = z_nc2_point(&model, &Divergence::LogLinear, &tau, y, noise.log_density[0])
            .unwrap();
        let r = density_ratio(tau.log_q(&model, y).unwrap(), noise.log_density[0]);
        let vy = tau.grad_log_q(&model, y).unwrap();
        assert!((z2 - vy * r).amax() < 1e-14);
    }

    #[test]
    fn log_linear_objective_is_monotone_in_c() {
        // exp(-c) shrinks the noise term toward zero while the data term
        // grows linearly in c.
        let model = gaussian_1d();
        let (data, noise) = tiny_instance(3, 8);
        let obj = |c: f64| {
            nce_objective(
                &data,
                &noise,
                &ExtendedParams::new(c, DVector::from_element(1, 1.0)),
                &Divergence::LogLinear,
                &model,
            )
            .unwrap()
        };
        let lo = obj(0.0);
        let hi = obj(10.0);
        // at c = 10 the noise term is ~0 and the data term has grown by ~10
        assert!(hi > lo + 5.0);
    }

    #[test]
    fn objective_matches_independent_scalar_loop() {
        // Independently coded double implementation for the NCE divergence
        // on the 1-d Gaussian-shape model.
        let model = gaussian_1d();
        let (data, noise) = tiny_instance(4, 20);
        let tau = ExtendedParams::new(0.0, DVector::from_element(1, 1.0));
        let got = nce_objective(&data, &noise, &tau, &Divergence::Nce, &model).unwrap();

        let lam = 1.0;
        let mut m1 = 0.0;
        for x in &data {
            let log_q = -0.5 * lam * x[0] * x[0];
            let log_a = -0.5 * (2.0 * std::f64::consts::PI * 2.0).ln() - x[0] * x[0] / 4.0;
            let r = (log_q - log_a).exp();
            m1 += -(r / (r + 1.0)).ln();
        }
        let mut m2 = 0.0;
        for (j, y) in noise.points.iter().enumerate() {
            let log_q = -0.5 * lam * y[0] * y[0];
            let r = (log_q - noise.log_density[j]).exp();
            m2 += -(1.0 / (r + 1.0)).ln();
        }
        let expect = m1 / data.len() as f64 + m2 / noise.len() as f64;
        assert!(close_rel(got, expect, 1e-12), "{got} vs {expect}");
    }

    #[test]
    fn fit_recovers_noise_parameters_from_noise_data() {
        // Data drawn from the noise distribution itself, with the model
        // family containing it: the population minimizer is the noise.
        let n = 5000;
        let true_lam = 0.5; // variance 2 Gaussian
        let dist = Arc::new(GaussianProduct { sigma2: vec![1.0 / true_lam] });
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let data: Vec<DVector<f64>> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let noise = NoiseSample::draw(dist, n, 77).unwrap();
        let model = gaussian_1d();
        let report = fit_nce_complete(
            &data,
            &noise,
            &Divergence::Nce,
            &model,
            &ExtendedParams::new(0.0, DVector::from_element(1, 1.0)),
            &SolverOpts::default(),
        )
        .unwrap();
        assert!(report.converged);
        let lam_hat = report.params[1];
        // 3 Monte Carlo standard errors, sandwich-based.
        let se = report.std_errors.as_ref().unwrap()[1];
        assert!(
            (lam_hat - true_lam).abs() <= 3.0 * se,
            "lam_hat = {lam_hat}, se = {se}"
        );
        // c should approximate the log normalizer of exp(-0.5 lam x^2)
        let log_z = 0.5 * (2.0 * std::f64::consts::PI / true_lam).ln();
        assert!((report.params[0] - log_z).abs() < 0.2);
    }

    #[test]
    fn fit_matches_grid_search_on_truncated_exponential() {
        let n = 2000;
        let true_rate = 1.4;
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let data: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_element(1, crate::numeric::exponential(true_rate, &mut rng)))
            .collect();
        let dist = Arc::new(ExponentialProduct { rates: vec![1.0] });
        let noise = NoiseSample::draw(dist, n, 5).unwrap();
        let model = TruncExpFamily::exponential_1d();
        let report = fit_nce_complete(
            &data,
            &noise,
            &Divergence::Nce,
            &model,
            &ExtendedParams::new(0.0, DVector::from_element(1, 1.0)),
            &SolverOpts::default(),
        )
        .unwrap();

        // Fine grid over (c, lambda) around the solution.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for ci in 0..80 {
            let c = -1.5 + 3.0 * ci as f64 / 79.0;
            for li in 0..80 {
                let lam = 0.5 + 2.0 * li as f64 / 79.0;
                let obj = nce_objective(
                    &data,
                    &noise,
                    &ExtendedParams::new(c, DVector::from_element(1, lam)),
                    &Divergence::Nce,
                    &model,
                )
                .unwrap();
                if obj < best.0 {
                    best = (obj, c, lam);
                }
            }
        }
        let grid_step = 2.0 / 79.0;
        assert!(
            (report.params[1] - best.2).abs() <= grid_step,
            "newton {} vs grid {}",
            report.params[1],
            best.2
        );
        assert!((report.params[0] - best.1).abs() <= 3.0 / 79.0 * 1.5);
    }

    #[test]
    fn both_divergences_satisfy_their_own_moment_conditions() {
        let model = gaussian_1d();
        let (data, noise) = tiny_instance(6, 200);
        let opts = SolverOpts::default();
        let mut sols = Vec::new();
        for kind in [Divergence::LogLinear, Divergence::Nce] {
            let rep = fit_nce_complete(
                &data,
                &noise,
                &kind,
                &model,
                &ExtendedParams::new(0.0, DVector::from_element(1, 1.0)),
                &opts,
            )
            .unwrap();
            let z = nce_estimating_fn(
                &data,
                &noise,
                &ExtendedParams::from_vector(&rep.params),
                &kind,
                &model,
            )
            .unwrap();
            assert!(z.amax() <= opts.grad_tol * 10.0);
            sols.push(rep.params);
        }
        assert!((sols[0].clone() - sols[1].clone()).amax() > 1e-6, "fits should differ");
    }

    #[test]
    fn log_linear_c_equation_pins_importance_sampling_normalizer() {
        // At the solution, mean_j r(y_j) = 1 exactly, i.e. exp(c_hat) equals
        // the importance-sampling estimate of Z(theta_hat).
        let model = gaussian_1d();
        let (data, noise) = tiny_instance(7, 300);
        let rep = fit_nce_complete(
            &data,
            &noise,
            &Divergence::LogLinear,
            &model,
            &ExtendedParams::new(0.0, DVector::from_element(1, 1.0)),
            &SolverOpts::default(),
        )
        .unwrap();
        let tau = ExtendedParams::from_vector(&rep.params);
        let mean_r: f64 = noise
            .points
            .iter()
            .zip(&noise.log_density)
            .map(|(y, &la)| density_ratio(tau.log_q(&model, y).unwrap(), la))
            .sum::<f64>()
            / noise.len() as f64;
        assert!((mean_r - 1.0).abs() < 1e-7, "mean r = {mean_r}");

        let z_is: f64 = noise
            .points
            .iter()
            .zip(&noise.log_density)
            .map(|(y, &la)| (model.log_unnorm(&tau.theta, y).unwrap() - la).exp())
            .sum::<f64>()
            / noise.len() as f64;
        assert!(close_rel(rep.params[0].exp(), z_is, 1e-7));
    }

    #[test]
    fn permuting_data_leaves_fit_unchanged() {
        let model = gaussian_1d();
        let (mut data, noise) = tiny_instance(8, 120);
        let opts = SolverOpts::default();
        let init = ExtendedParams::new(0.0, DVector::from_element(1, 1.0));
        let a = fit_nce_complete(&data, &noise, &Divergence::Nce, &model, &init, &opts).unwrap();
        data.reverse();
        let b = fit_nce_complete(&data, &noise, &Divergence::Nce, &model, &init, &opts).unwrap();
        assert!((a.params - b.params).amax() < 1e-9);
    }
}
