//! C-support vector classification with an RBF kernel.
//!
//! Inputs are standardized with training statistics, then the dual
//!
//! ```text
//! max  Σ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)   s.t.  0 ≤ αᵢ ≤ C,  Σ αᵢ yᵢ = 0
//! ```
//!
//! is solved by sequential minimal optimization. Each step picks the pair
//! that most violates the KKT conditions (first index by maximal gradient
//! violation, second by largest guaranteed objective gain), solves the
//! two-variable subproblem in closed form and clips it to the box.
//!
//! Training points that coincide exactly (same standardized vector, same
//! label) share one multiplier bounded by `multiplicity × C`. This is an
//! exact reformulation of the dual and keeps zero-heavy count data cheap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RecordSet};
use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 100;

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1.0 for constant features.
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Fit("cannot standardize an empty training set".into()));
        };
        let width = first.as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            for (m, &v) in mean.iter_mut().zip(r.as_ref()) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(r.as_ref()) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        let sd = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, sd })
    }

    pub fn apply(&self, x: &[u64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&v, (m, s))| (v as f64 - m) / s)
            .collect()
    }
}

fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(−γ‖x − z‖²)`.
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Contract(format!(
            "kernel arguments have lengths {} and {}",
            x.len(),
            z.len()
        )));
    }
    Ok((-gamma * sq_dist(x, z)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaRule {
    Scale,
}

/// RBF width: a positive constant, or `"scale"` = 1 / (features × variance
/// of the standardized training matrix).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Rule(GammaRule),
    Value(f64),
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Rule(GammaRule::Scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub gamma: Gamma,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Iteration cap in units of sweeps; one sweep is as many pair updates
    /// as there are distinct training points.
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
}

fn default_c() -> f64 {
    DEFAULT_C
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_max_passes() -> usize {
    DEFAULT_MAX_PASSES
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: DEFAULT_C,
            gamma: Gamma::default(),
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: f64,
    pub b: f64,
    /// Standardized vectors with a non-zero multiplier.
    pub support_vectors: Vec<Vec<f64>>,
    /// `yᵢ · Σ α` over the training points that coincide with each vector.
    pub dual_coefs: Vec<f64>,
    /// How many training points each support vector stands for.
    pub multiplicities: Vec<u64>,
    pub standardizer: Standardizer,
}

impl SvmModel {
    /// `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + b` on the raw count vector.
    pub fn decision(&self, x: &[u64]) -> f64 {
        self.decision_standardized(&self.standardizer.apply(x))
    }

    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * (-self.gamma * sq_dist(sv, z)).exp())
            .sum::<f64>()
            + self.b
    }

    /// Positive iff `f(x) > 0`.
    pub fn predict(&self, x: &[u64]) -> Label {
        if self.decision(x) > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Per-training-point multipliers `αᵢ` (shared evenly within a group).
    pub fn alphas(&self) -> Vec<f64> {
        self.dual_coefs
            .iter()
            .zip(&self.multiplicities)
            .map(|(c, &m)| c.abs() / m as f64)
            .collect()
    }

    /// `Σ αᵢ yᵢ` over all training points.
    pub fn dual_coef_sum(&self) -> f64 {
        self.dual_coefs.iter().sum()
    }

    /// Number of training points (with labels) that violate the KKT
    /// conditions of this solution by more than `tol`.
    pub fn kkt_violations<R: AsRef<[u64]>>(&self, rows: &[R], labels: &[Label], tol: f64) -> usize {
        let mut alpha_of = HashMap::new();
        for ((sv, coef), &m) in self.support_vectors.iter().zip(&self.dual_coefs).zip(&self.multiplicities) {
            let key = (bits(sv), *coef > 0.0);
            alpha_of.insert(key, coef.abs() / m as f64);
        }
        rows.iter()
            .zip(labels)
            .filter(|(row, label)| {
                let z = self.standardizer.apply(row.as_ref());
                let alpha = alpha_of.get(&(bits(&z), label.is_positive())).copied().unwrap_or(0.0);
                let margin = label.sign() * self.decision_standardized(&z);
                let at_lower = alpha <= 0.0;
                let at_upper = alpha >= self.c * (1.0 - 1e-12);
                if at_lower {
                    margin < 1.0 - tol
                } else if at_upper {
                    margin > 1.0 + tol
                } else {
                    (margin - 1.0).abs() > tol
                }
            })
            .count()
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Solver bookkeeping returned alongside the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation `m(α) − M(α)` at termination.
    pub final_gap: f64,
    pub distinct_points: usize,
    /// Dual objective recomputed from scratch after every sweep (and at
    /// termination); only filled when tracing is requested.
    pub objective_trace: Vec<f64>,
}

struct RowCache {
    n: usize,
    capacity: usize,
    slot_of: Vec<Option<usize>>,
    slots: Vec<(usize, u64, Vec<f64>)>,
    clock: u64,
}

impl RowCache {
    fn new(n: usize) -> Self {
        let capacity = (CACHE_BYTES / (n.max(1) * std::mem::size_of::<f64>())).clamp(2, n.max(2));
        RowCache {
            n,
            capacity,
            slot_of: vec![None; n],
            slots: Vec::new(),
            clock: 0,
        }
    }
}

struct Solver<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    ub: &'a [f64],
    gamma: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    cache: RowCache,
}

impl Solver<'_> {
    /// Row `i` of `Q[i][k] = yᵢ yₖ K(xᵢ, xₖ)`.
    fn q_row(&mut self, i: usize) -> &[f64] {
        let cache = &mut self.cache;
        cache.clock += 1;
        let stamp = cache.clock;
        if let Some(s) = cache.slot_of[i] {
            cache.slots[s].1 = stamp;
            return &cache.slots[s].2;
        }
        let slot = if cache.slots.len() < cache.capacity {
            cache.slots.push((i, stamp, vec![0.0; cache.n]));
            cache.slots.len() - 1
        } else {
            let (s, _) = cache
                .slots
                .iter()
                .enumerate()
                .min_by_key(|(_, (_, t, _))| *t)
                .expect("cache has slots");
            let old = cache.slots[s].0;
            cache.slot_of[old] = None;
            cache.slots[s].0 = i;
            cache.slots[s].1 = stamp;
            s
        };
        cache.slot_of[i] = Some(slot);
        let (xi, yi, gamma) = (&self.x[i], self.y[i], self.gamma);
        let row = &mut cache.slots[slot].2;
        for (k, q) in row.iter_mut().enumerate() {
            *q = yi * self.y[k] * (-gamma * sq_dist(xi, &self.x[k])).exp();
        }
        row
    }

    fn is_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.ub[t]
    }

    fn is_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    /// Returns the working pair, or `None` with the current gap once
    /// the gap is below `tol`.
    fn select(&mut self, tol: f64) -> (Option<(usize, usize)>, f64) {
        let n = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i_up = None;
        for t in 0..n {
            let v = -self.y[t] * self.grad[t];
            let in_up = if self.y[t] > 0.0 { !self.is_upper(t) } else { !self.is_lower(t) };
            if in_up && v >= gmax {
                gmax = v;
                i_up = Some(t);
            }
        }
        let Some(i) = i_up else {
            return (None, 0.0);
        };
        let yi = self.y[i];
        let qi = self.q_row(i).to_vec();
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_j = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let in_low = if self.y[t] > 0.0 { !self.is_lower(t) } else { !self.is_upper(t) };
            if !in_low {
                continue;
            }
            let v = self.y[t] * self.grad[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                // K(i,i) = K(t,t) = 1 for the RBF kernel.
                let quad = 2.0 - 2.0 * yi * self.y[t] * qi[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    best_j = Some(t);
                }
            }
        }
        let gap = gmax + gmax2;
        match best_j {
            Some(j) if gap >= tol => (Some((i, j)), gap),
            _ => (None, gap.max(0.0)),
        }
    }

    fn update(&mut self, i: usize, j: usize) {
        let q_ij = self.q_row(i)[j];
        let (ci, cj) = (self.ub[i], self.ub[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let quad = 2.0 + 2.0 * q_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let quad = 2.0 - 2.0 * q_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for (t, d) in [(i, di), (j, dj)] {
            if d != 0.0 {
                let row = self.q_row(t).to_vec();
                for (g, q) in self.grad.iter_mut().zip(&row) {
                    *g += q * d;
                }
            }
        }
    }

    /// Offset `ρ` with `f(x) = Σ αᵢ yᵢ K(xᵢ, x) − ρ`.
    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut n_free, mut sum_free) = (0usize, 0.0);
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            if self.is_upper(t) {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.is_lower(t) {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        }
    }

    /// `Σ α − ½ αᵀQα`, computed without the maintained gradient.
    fn objective_from_scratch(&self) -> f64 {
        let n = self.alpha.len();
        let mut quad = 0.0;
        for i in 0..n {
            if self.alpha[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if self.alpha[j] == 0.0 {
                    continue;
                }
                quad += self.alpha[i]
                    * self.alpha[j]
                    * self.y[i]
                    * self.y[j]
                    * (-self.gamma * sq_dist(&self.x[i], &self.x[j])).exp();
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }
}

/// Resolves `"scale"` against standardized training rows.
fn resolve_gamma(gamma: Gamma, z: &[Vec<f64>]) -> f64 {
    match gamma {
        Gamma::Value(g) => g,
        Gamma::Rule(GammaRule::Scale) => {
            let width = z.first().map_or(0, Vec::len);
            let count = (z.len() * width) as f64;
            if count == 0.0 {
                return 1.0;
            }
            let mean = z.iter().flatten().sum::<f64>() / count;
            let var = z.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            if var > 0.0 {
                1.0 / (width as f64 * var)
            } else {
                1.0
            }
        }
    }
}

pub fn fit(train: &RecordSet, params: &SvmParams) -> Result<SvmModel> {
    let rows: Vec<&[u64]> = train.rows.iter().map(|r| &r.values[..]).collect();
    fit_counts(&rows, &train.labels(), params, false).map(|(m, _)| m)
}

/// Fits on arbitrary-width count rows. With `trace`, the dual objective is
/// recomputed from scratch after each sweep (quadratic cost per sweep).
pub fn fit_counts<R: AsRef<[u64]>>(
    rows: &[R],
    labels: &[Label],
    params: &SvmParams,
    trace: bool,
) -> Result<(SvmModel, SmoDiagnostics)> {
    params.validate()?;
    if rows.len() != labels.len() {
        return Err(Error::Contract(format!("{} rows for {} labels", rows.len(), labels.len())));
    }
    let counts = crate::dataset::class_counts(labels.iter().copied());
    if counts.contains(&0) {
        return Err(Error::Fit(format!(
            "SVM needs both classes, got {} positive and {} negative rows",
            counts[1], counts[0]
        )));
    }
    let standardizer = Standardizer::fit(rows)?;
    let z: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.apply(r.as_ref())).collect();
    let gamma = resolve_gamma(params.gamma, &z);

    // Group coincident same-label points, in first-occurrence order.
    let mut group_of: HashMap<(Vec<u64>, bool), usize> = HashMap::new();
    let mut points = Vec::new();
    let mut y = Vec::new();
    let mut mult = Vec::new();
    for (zi, label) in z.into_iter().zip(labels) {
        let key = (bits(&zi), label.is_positive());
        match group_of.get(&key) {
            Some(&g) => mult[g] += 1u64,
            None => {
                group_of.insert(key, points.len());
                points.push(zi);
                y.push(label.sign());
                mult.push(1u64);
            }
        }
    }
    let ub: Vec<f64> = mult.iter().map(|&m| m as f64 * params.c).collect();
    let n = points.len();

    let mut solver = Solver {
        x: &points,
        y: &y,
        ub: &ub,
        gamma,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        cache: RowCache::new(n),
    };
    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let mut trace_values = Vec::new();
    if trace {
        trace_values.push(solver.objective_from_scratch());
    }
    let mut iterations = 0;
    let mut converged = false;
    let final_gap;
    loop {
        let (pair, gap) = solver.select(params.tol);
        let Some((i, j)) = pair else {
            converged = true;
            final_gap = gap;
            break;
        };
        if iterations >= max_iter {
            final_gap = gap;
            break;
        }
        solver.update(i, j);
        iterations += 1;
        if trace && iterations % n.max(1) == 0 {
            trace_values.push(solver.objective_from_scratch());
        }
    }
    if trace {
        trace_values.push(solver.objective_from_scratch());
    }

    let b = -solver.rho();
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    let mut multiplicities = Vec::new();
    for t in 0..n {
        if solver.alpha[t] > 0.0 {
            support_vectors.push(points[t].clone());
            dual_coefs.push(solver.alpha[t] * y[t]);
            multiplicities.push(mult[t]);
        }
    }
    let diagnostics = SmoDiagnostics {
        iterations,
        converged,
        final_gap,
        distinct_points: n,
        objective_trace: trace_values,
    };
    Ok((
        SvmModel {
            c: params.c,
            gamma,
            b,
            support_vectors,
            dual_coefs,
            multiplicities,
            standardizer,
        },
        diagnostics,
    ))
}
