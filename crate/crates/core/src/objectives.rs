//! Smooth convex objectives and the registry of built-in test problems.
//!
//! Every problem is a [`Objective`]: a `C^1` convex function given by value
//! and gradient closures, optionally carrying an analytic proximal map, the
//! known infimum and a minimizer. Registry instances are constructed
//! deterministically from a [`ProblemSpec`] through the counter-based
//! generator in [`crate::rng`], so the same spec always yields a
//! bit-identical instance.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::rng::Stream;
use crate::{Error, Result};

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type ProxFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// A smooth convex objective. Immutable after construction; cheap to clone
/// and safe to evaluate from several threads at once.
#[derive(Clone)]
pub struct Objective {
    dimension: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
    analytic_prox: Option<Arc<ProxFn>>,
    f_min: Option<f64>,
    minimizer: Option<DVector<f64>>,
    lipschitz_bound: Option<f64>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("dimension", &self.dimension)
            .field("has_analytic_prox", &self.analytic_prox.is_some())
            .field("f_min", &self.f_min)
            .field("lipschitz_bound", &self.lipschitz_bound)
            .finish()
    }
}

impl Objective {
    pub fn new<V, G>(dimension: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Objective {
            dimension,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            analytic_prox: None,
            f_min: None,
            minimizer: None,
            lipschitz_bound: None,
        }
    }

    pub fn with_analytic_prox<P>(mut self, prox: P) -> Self
    where
        P: Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.analytic_prox = Some(Arc::new(prox));
        self
    }

    pub fn with_minimum(mut self, f_min: f64, minimizer: Option<DVector<f64>>) -> Self {
        self.f_min = Some(f_min);
        self.minimizer = minimizer;
        self
    }

    pub fn with_lipschitz_bound(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    /// Exact proximal map, when the instance has one.
    pub fn analytic_prox(&self, lambda: f64, y: &DVector<f64>) -> Option<DVector<f64>> {
        self.analytic_prox.as_ref().map(|p| p(lambda, y))
    }

    pub fn has_analytic_prox(&self) -> bool {
        self.analytic_prox.is_some()
    }

    pub fn f_min(&self) -> Option<f64> {
        self.f_min
    }

    pub fn minimizer(&self) -> Option<&DVector<f64>> {
        self.minimizer.as_ref()
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    /// `f(x) − inf f` when the infimum is known.
    pub fn value_gap(&self, x: &DVector<f64>) -> Option<f64> {
        self.f_min.map(|m| self.value(x) - m)
    }
}

/// Central-difference gradient of `obj.value` at `x`; the independent check
/// that value and gradient closures agree.
pub fn central_difference_gradient(obj: &Objective, x: &DVector<f64>) -> DVector<f64> {
    let n = obj.dimension();
    let mut g = DVector::zeros(n);
    for i in 0..n {
        let h = 1e-5 * (1.0 + x[i].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
    }
    g
}

/// Worst relative gradient error over the given points.
pub fn max_gradient_error(obj: &Objective, points: &[DVector<f64>]) -> f64 {
    points
        .iter()
        .map(|x| {
            let g = obj.gradient(x);
            let fd = central_difference_gradient(obj, x);
            (&fd - &g).norm() / (1.0 + g.norm())
        })
        .fold(0.0, f64::max)
}

/// Identifies a registry problem. Equal specs construct bit-identical
/// objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub dimension: usize,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(name: &str, dimension: usize, seed: u64) -> Self {
        ProblemSpec {
            name: name.to_string(),
            dimension,
            parameters: BTreeMap::new(),
            seed,
        }
    }

    pub fn with_parameter(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    fn parameter(&self, key: &str, default: f64) -> f64 {
        self.parameters.get(key).copied().unwrap_or(default)
    }

    fn check_parameter_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.parameters.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidParameter {
                    problem: self.name.clone(),
                    message: format!(
                        "unknown parameter '{}'; allowed: {}",
                        key,
                        if allowed.is_empty() {
                            "(none)".to_string()
                        } else {
                            allowed.join(", ")
                        }
                    ),
                });
            }
        }
        Ok(())
    }
}

pub const PROBLEM_NAMES: [&str; 5] = [
    "quadratic",
    "least_squares",
    "log_sum_exp",
    "huber_regression",
    "degenerate_quadratic",
];

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const RANGE_TOL: f64 = 1e-8;

/// Quadratic `f(x) = ½ xᵀMx − bᵀx` for a symmetric positive semidefinite `M`.
///
/// The proximal map solves `(I + λM) u = y + λb` exactly. When `Mu = b` is
/// solvable the infimum and the least-norm minimizer are recorded.
pub fn make_quadratic(matrix: &DMatrix<f64>, linear: &DVector<f64>) -> Result<Objective> {
    let n = matrix.nrows();
    if matrix.ncols() != n || linear.len() != n {
        return Err(Error::DimensionMismatch {
            matrix: n,
            vector: linear.len(),
        });
    }
    let magnitude = matrix.amax().max(1.0);
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * magnitude {
        return Err(Error::NotSymmetric(asymmetry));
    }
    // Work with the symmetrized matrix so roundoff in M cannot leak into the
    // eigendecomposition.
    let m = (matrix + matrix.transpose()) * 0.5;
    let eigen = m.clone().symmetric_eigen();
    let min_eig = eigen.eigenvalues.min();
    if min_eig < -PSD_TOL * magnitude {
        return Err(Error::NotPositiveSemidefinite(min_eig));
    }

    // Least-norm solution of Mu = b through the eigenbasis; solvable iff the
    // residual vanishes (b has no component in the kernel).
    let rank_tol = PSD_TOL * magnitude;
    let coeffs = eigen.eigenvectors.transpose() * linear;
    let mut least_norm = DVector::zeros(n);
    for i in 0..n {
        if eigen.eigenvalues[i] > rank_tol {
            least_norm += eigen.eigenvectors.column(i) * (coeffs[i] / eigen.eigenvalues[i]);
        }
    }
    let residual = (&m * &least_norm - linear).norm();
    let solvable = residual <= RANGE_TOL * (1.0 + linear.norm());

    let m_value = m.clone();
    let b_value = linear.clone();
    let value = move |x: &DVector<f64>| 0.5 * x.dot(&(&m_value * x)) - b_value.dot(x);
    let m_grad = m.clone();
    let b_grad = linear.clone();
    let gradient = move |x: &DVector<f64>| &m_grad * x - &b_grad;

    let m_prox = m.clone();
    let b_prox = linear.clone();
    let prox = move |lambda: f64, y: &DVector<f64>| {
        let mut system = &m_prox * lambda;
        for i in 0..system.nrows() {
            system[(i, i)] += 1.0;
        }
        let rhs = y + &b_prox * lambda;
        system
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .unwrap_or_else(|| {
                system
                    .lu()
                    .solve(&rhs)
                    .expect("I + lambda*M is nonsingular for lambda > 0 and M PSD")
            })
    };

    let lipschitz = eigen.eigenvalues.max().max(0.0);
    let mut obj = Objective::new(n, value, gradient)
        .with_analytic_prox(prox)
        .with_lipschitz_bound(lipschitz);
    if solvable {
        let f_min = 0.5 * least_norm.dot(&(&m * &least_norm)) - linear.dot(&least_norm);
        obj = obj.with_minimum(f_min, Some(least_norm));
    }
    Ok(obj)
}

/// Builds the registry problem described by `spec`.
pub fn make_problem(spec: &ProblemSpec) -> Result<Objective> {
    if spec.dimension == 0 {
        return Err(Error::InvalidParameter {
            problem: spec.name.clone(),
            message: "dimension must be positive".into(),
        });
    }
    match spec.name.as_str() {
        "quadratic" => make_seeded_quadratic(spec),
        "least_squares" => make_least_squares(spec),
        "log_sum_exp" => make_log_sum_exp(spec),
        "huber_regression" => make_huber_regression(spec),
        "degenerate_quadratic" => make_degenerate_quadratic(spec),
        other => Err(Error::UnknownProblem {
            name: other.to_string(),
            valid: PROBLEM_NAMES.join(", "),
        }),
    }
}

/// Deterministic starting point for a registry problem: a seeded standard
/// normal vector, scaled by the optional `y0_scale` parameter (default 1).
pub fn default_start(spec: &ProblemSpec) -> DVector<f64> {
    let mut stream = Stream::substream(spec.seed, 0xA11CE);
    let scale = spec.parameter("y0_scale", 1.0);
    DVector::from_fn(spec.dimension, |_, _| scale * stream.normal())
}

fn random_orthogonal(n: usize, stream: &mut Stream) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| stream.normal());
    let qr = raw.qr();
    qr.q()
}

/// Strongly convex quadratic with eigenvalues log-spaced on
/// `[1/cond, 1]` in a random orthogonal basis. Parameters: `cond`
/// (condition number, default 1e3), `y0_scale`.
fn make_seeded_quadratic(spec: &ProblemSpec) -> Result<Objective> {
    spec.check_parameter_keys(&["cond", "y0_scale"])?;
    let cond = spec.parameter("cond", 1e3);
    if cond < 1.0 {
        return Err(Error::InvalidParameter {
            problem: spec.name.clone(),
            message: format!("cond must be >= 1, got {cond}"),
        });
    }
    let n = spec.dimension;
    let mut stream = Stream::substream(spec.seed, 1);
    let q = random_orthogonal(n, &mut stream);
    let eigs = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            // log-spaced from 1/cond up to 1
            (-(cond.ln()) * (n - 1 - i) as f64 / (n - 1) as f64).exp()
        }
    });
    let m = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    let mut b_stream = Stream::substream(spec.seed, 2);
    let b = DVector::from_fn(n, |_, _| b_stream.normal());
    make_quadratic(&m, &b)
}

/// Least squares `f(x) = ½‖Ax − b‖²` with seeded Gaussian data.
/// Parameters: `rows` (default 2·dim), `noise` (default 0.1), `y0_scale`.
fn make_least_squares(spec: &ProblemSpec) -> Result<Objective> {
    spec.check_parameter_keys(&["rows", "noise", "y0_scale"])?;
    let n = spec.dimension;
    let rows = spec.parameter("rows", (2 * n) as f64);
    if rows < n as f64 {
        return Err(Error::InvalidParameter {
            problem: spec.name.clone(),
            message: format!("rows must be >= dimension ({n}), got {rows}"),
        });
    }
    let m = rows as usize;
    let noise = spec.parameter("noise", 0.1);

    let mut a_stream = Stream::substream(spec.seed, 3);
    let a = DMatrix::from_fn(m, n, |_, _| a_stream.normal());
    let mut x_stream = Stream::substream(spec.seed, 4);
    let x_true = DVector::from_fn(n, |_, _| x_stream.normal());
    let mut e_stream = Stream::substream(spec.seed, 5);
    let b = &a * &x_true + DVector::from_fn(m, |_, _| noise * e_stream.normal());

    let gram = a.transpose() * &a;
    let atb = a.transpose() * &b;

    // Normal equations: Gaussian A with m >= n is full column rank.
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter {
            problem: spec.name.clone(),
            message: "seeded design matrix is rank deficient".into(),
        })?;
    let minimizer = chol.solve(&atb);
    let f_min = 0.5 * (&a * &minimizer - &b).norm_squared();

    let a_value = a.clone();
    let b_value = b.clone();
    let value = move |x: &DVector<f64>| 0.5 * (&a_value * x - &b_value).norm_squared();
    let a_grad = a.clone();
    let b_grad = b.clone();
    let gradient = move |x: &DVector<f64>| a_grad.transpose() * (&a_grad * x - &b_grad);

    let gram_prox = gram.clone();
    let atb_prox = atb.clone();
    let prox = move |lambda: f64, y: &DVector<f64>| {
        let mut system = &gram_prox * lambda;
        for i in 0..system.nrows() {
            system[(i, i)] += 1.0;
        }
        let rhs = y + &atb_prox * lambda;
        system
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .expect("I + lambda*A^T A is positive definite")
    };

    let lipschitz = gram.symmetric_eigen().eigenvalues.max();
    Ok(Objective::new(n, value, gradient)
        .with_analytic_prox(prox)
        .with_minimum(f_min, Some(minimizer))
        .with_lipschitz_bound(lipschitz))
}

/// `f(x) = ln Σ exp(x_i)`, the standard simplex form: the gradient is the
/// softmax, so its entries sum to one everywhere. Unbounded below (no
/// minimizer, no analytic prox); exercises the iterative inner solver.
fn make_log_sum_exp(spec: &ProblemSpec) -> Result<Objective> {
    spec.check_parameter_keys(&["y0_scale"])?;
    let n = spec.dimension;
    let value = move |x: &DVector<f64>| {
        let m = x.max();
        m + x.iter().map(|&xi| (xi - m).exp()).sum::<f64>().ln()
    };
    let gradient = move |x: &DVector<f64>| {
        let m = x.max();
        let mut g = DVector::from_fn(x.len(), |i, _| (x[i] - m).exp());
        let s = g.sum();
        g /= s;
        g
    };
    Ok(Objective::new(n, value, gradient).with_lipschitz_bound(1.0))
}

fn huber(r: f64, delta: f64) -> f64 {
    if r.abs() <= delta {
        0.5 * r * r
    } else {
        delta * (r.abs() - 0.5 * delta)
    }
}

/// Huber regression `f(x) = Σ H_δ(a_iᵀx − b_i)`: convex, C¹ with Lipschitz
/// gradient, but not C², and without an analytic prox. Parameters: `rows`
/// (default 2·dim), `delta` (default 1.0), `noise` (default 0.5), `y0_scale`.
fn make_huber_regression(spec: &ProblemSpec) -> Result<Objective> {
    spec.check_parameter_keys(&["rows", "delta", "noise", "y0_scale"])?;
    let n = spec.dimension;
    let m = spec.parameter("rows", (2 * n) as f64) as usize;
    let delta = spec.parameter("delta", 1.0);
    if delta <= 0.0 {
        return Err(Error::InvalidParameter {
            problem: spec.name.clone(),
            message: format!("delta must be positive, got {delta}"),
        });
    }
    let noise = spec.parameter("noise", 0.5);

    let mut a_stream = Stream::substream(spec.seed, 6);
    let a = DMatrix::from_fn(m, n, |_, _| a_stream.normal());
    let mut x_stream = Stream::substream(spec.seed, 7);
    let x_true = DVector::from_fn(n, |_, _| x_stream.normal());
    let mut e_stream = Stream::substream(spec.seed, 8);
    let b = &a * &x_true + DVector::from_fn(m, |_, _| noise * e_stream.normal());

    let a_value = a.clone();
    let b_value = b.clone();
    let value = move |x: &DVector<f64>| {
        let r = &a_value * x - &b_value;
        r.iter().map(|&ri| huber(ri, delta)).sum()
    };
    let a_grad = a.clone();
    let b_grad = b.clone();
    let gradient = move |x: &DVector<f64>| {
        let r = &a_grad * x - &b_grad;
        let psi = DVector::from_fn(r.len(), |i, _| r[i].clamp(-delta, delta));
        a_grad.transpose() * psi
    };

    let lipschitz = (a.transpose() * &a).symmetric_eigen().eigenvalues.max();
    Ok(Objective::new(n, value, gradient).with_lipschitz_bound(lipschitz))
}

/// Rank-deficient quadratic `M = RᵀDR` with explicit zeros in `D`, so the
/// minimizer set is a nontrivial affine subspace. Parameters: `zeros`
/// (kernel dimension, default max(1, dim/4)), `y0_scale`.
fn make_degenerate_quadratic(spec: &ProblemSpec) -> Result<Objective> {
    spec.check_parameter_keys(&["zeros", "y0_scale"])?;
    let n = spec.dimension;
    let default_zeros = (n / 4).max(1) as f64;
    let zeros = spec.parameter("zeros", default_zeros) as usize;
    if zeros >= n {
        return Err(Error::InvalidParameter {
            problem: spec.name.clone(),
            message: format!("zeros must be < dimension ({n}), got {zeros}"),
        });
    }
    let positive = n - zeros;
    let mut stream = Stream::substream(spec.seed, 9);
    let r = random_orthogonal(n, &mut stream);
    let eigs = DVector::from_fn(n, |i, _| {
        if i < positive {
            if positive == 1 {
                1.0
            } else {
                // log-spaced from 0.1 up to 1, then explicit zeros
                (-(10.0f64.ln()) * (positive - 1 - i) as f64 / (positive - 1) as f64).exp()
            }
        } else {
            0.0
        }
    });
    let m = r.transpose() * DMatrix::from_diagonal(&eigs) * &r;
    // b = M w keeps the linear term in the range of M: minimum is attained.
    let mut w_stream = Stream::substream(spec.seed, 10);
    let w = DVector::from_fn(n, |_, _| w_stream.normal());
    let b = &m * w;
    make_quadratic(&m, &b)
}
