//! Sequential minimal optimization for the C-SVC dual.

use super::{sq_dist, KernelParams, SvmError, SvmModel, TrainConfig};
use crate::record::BinaryLabel;

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;
/// Memory budget for cached kernel rows, in matrix entries.
const CACHE_ENTRIES: usize = 8 << 20;

/// Least-recently-used cache of kernel matrix rows.
struct KernelRows<'a> {
    data: &'a [f64],
    dim: usize,
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(data: &'a [f64], dim: usize, n: usize, gamma: f64) -> Self {
        Self {
            data,
            dim,
            gamma,
            rows: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            cached: 0,
            capacity: (CACHE_ENTRIES / n.max(1)).max(2),
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Compute row `i` if needed, never evicting row `keep`.
    fn ensure(&mut self, i: usize, keep: usize) {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if self.rows[i].is_some() {
            return;
        }
        if self.cached >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| self.rows[k].is_some() && k != i && k != keep)
                .min_by_key(|&k| self.last_used[k]);
            if let Some(v) = victim {
                self.rows[v] = None;
                self.cached -= 1;
            }
        }
        let n = self.rows.len();
        let xi = self.point(i);
        let row: Vec<f64> = (0..n)
            .map(|k| (-self.gamma * sq_dist(xi, self.point(k))).exp())
            .collect();
        self.rows[i] = Some(row);
        self.cached += 1;
    }

    /// Rows `i` and `j`, both computed if needed.
    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i, j);
        self.ensure(j, i);
        (self.rows[i].as_deref().unwrap(), self.rows[j].as_deref().unwrap())
    }
}

/// Everything the solver knows at termination.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: SvmModel,
    /// Multiplier of every training point.
    pub alphas: Vec<f64>,
    /// Decision value of every training point as tracked by the solver's
    /// gradient.
    pub decision_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Train on scaled vectors. Fails with [`SvmError::DegenerateLabels`] when
/// only one class is present.
pub fn train(
    data: &[Vec<f64>],
    labels: &[BinaryLabel],
    config: &TrainConfig,
    kernel: KernelParams,
) -> Result<TrainOutput, SvmError> {
    config.validate()?;
    KernelParams::new(kernel.gamma)?;
    let n = data.len();
    if labels.len() != n {
        return Err(SvmError::LabelCount(n, labels.len()));
    }
    if n == 0 {
        return Err(SvmError::EmptyTrainingSet);
    }
    let dim = data[0].len();
    let mut flat = Vec::with_capacity(n * dim);
    for x in data {
        if x.len() != dim {
            return Err(SvmError::DimensionError(dim, x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite);
        }
        flat.extend_from_slice(x);
    }
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    if y.iter().all(|v| *v > 0.0) || y.iter().all(|v| *v < 0.0) {
        return Err(SvmError::DegenerateLabels);
    }

    let c = config.penalty;
    let eps = config.tolerance;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut rows = KernelRows::new(&flat, dim, n, kernel.gamma);
    let max_iter = config.max_passes.saturating_mul(n).max(n);
    let mut iterations = 0;
    let mut converged = false;

    let up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    while iterations < max_iter {
        // first index: maximal violation among the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if low(alpha[t], y[t]) {
                gmin = gmin.min(-y[t] * grad[t]);
            }
        }
        if i == usize::MAX || gmax - gmin < eps {
            converged = true;
            break;
        }

        // second index: largest guaranteed objective decrease
        let (ki, _) = rows.pair(i, i);
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b <= 0.0 {
                continue;
            }
            let a = (2.0 - 2.0 * ki[t]).max(TAU);
            let obj = -(b * b) / a;
            if obj < best {
                best = obj;
                j = t;
            }
        }
        if j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (ki, kj) = rows.pair(i, j);
        let kij = ki[j];
        let curv = (2.0 - 2.0 * kij).max(TAU);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / curv;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / curv;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }
    if !converged {
        log::warn!("SVM solver stopped after {iterations} iterations without meeting tolerance {eps}");
    }

    // bias from free vectors, else the midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        (ub + lb) / 2.0
    };

    let decision_values: Vec<f64> = (0..n).map(|t| y[t] * (grad[t] + 1.0) - rho).collect();
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(data[t].clone());
            coefficients.push(y[t] * alpha[t]);
        }
    }
    Ok(TrainOutput {
        model: SvmModel {
            support_vectors,
            coefficients,
            bias: -rho,
            kernel,
            penalty: c,
            dimension: dim,
        },
        alphas: alpha,
        decision_values,
        iterations,
        converged,
    })
}
