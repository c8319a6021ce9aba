//! Per-volume gradient descent on the decomposition losses.
//!
//! The mask is parameterized by a logistic latent `z` (`m_hat = 1/(1+e^-z)`),
//! so it stays inside (0, 1) without projection.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{loss_gradients, total_loss, Decomposition, LossReport, LossTarget, LossWeights};

/// Latent values are clamped here; logistic(30) is 1 - 9.4e-14.
pub const Z_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum MaskInit {
    /// `z = 0`, so `m_hat = 0.5`.
    Zero,
    /// `z ~ N(0, std^2)` from a seeded stream.
    Normal { std: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial per-voxel step sizes for (x_hat, s_hat, z), applied to the
    /// gradient of the voxel-summed loss (the mean-reduced gradient times N).
    pub learning_rates: [f64; 3],
    /// Per-voxel step factor while the gradient keeps its sign.
    pub rate_growth: f64,
    /// Per-voxel step factor when the gradient flips sign.
    pub rate_shrink: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub init: MaskInit,
    pub weights: LossWeights,
    pub max_halvings: u32,
    /// Record every n-th iteration in the trace (the last one always).
    pub eval_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            learning_rates: [0.05, 0.05, 1.0],
            rate_growth: 1.2,
            rate_shrink: 0.5,
            max_iters: 5000,
            tolerance: 1e-4,
            init: MaskInit::Zero,
            weights: LossWeights::default(),
            max_halvings: 20,
            eval_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::param("learning_rates", "must be > 0"));
        }
        if !(self.rate_growth.is_finite() && self.rate_growth >= 1.0) {
            return Err(Error::param("rate_growth", "must be >= 1"));
        }
        if !(self.rate_shrink > 0.0 && self.rate_shrink <= 1.0) {
            return Err(Error::param("rate_shrink", "must lie in (0, 1]"));
        }
        if self.max_iters < 1 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::param("tolerance", "must be >= 0"));
        }
        if self.eval_every < 1 {
            return Err(Error::param("eval_every", "must be >= 1"));
        }
        if let MaskInit::Normal { std, .. } = self.init {
            if !(std.is_finite() && std >= 0.0) {
                return Err(Error::param("init.std", "must be >= 0"));
            }
        }
        self.weights.validate()
    }
}

/// One line of the loss trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    pub total: f64,
    /// Fields (x_hat, s_hat, z) whose line search ran out of halvings.
    pub skipped: [bool; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub iteration: usize,
    pub decomposition: Decomposition,
    pub z: Vec<f64>,
    /// Per-voxel step sizes for (x_hat, s_hat, z).
    pub rates: [Vec<f64>; 3],
    prev_sign: [Vec<i8>; 3],
    pub report: LossReport,
    pub history: Vec<TraceEntry>,
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `target` with every field the weights do not use removed, so the solver
/// cannot depend on withheld ground truth.
fn restrict(target: &LossTarget, w: &LossWeights) -> LossTarget {
    let [w0, w1, w2, w3] = w.lambda;
    LossTarget {
        dims: target.dims,
        x: target.x.clone(),
        x_n: target.x_n.clone().filter(|_| w0 > 0.0),
        s: target.s.clone().filter(|_| w1 > 0.0),
        m: target.m.clone().filter(|_| w2 > 0.0),
        alpha: target.alpha.filter(|_| w3 > 0.0 && w.alpha.is_none()),
    }
}

fn entry(iteration: usize, r: &LossReport, skipped: [bool; 3]) -> TraceEntry {
    TraceEntry {
        iteration,
        l0: r.l0,
        l1: r.l1,
        l2: r.l2,
        l3: r.l3,
        total: r.total,
        skipped,
    }
}

/// `x_hat = s_hat = x` and the mask latent from `cfg.init`.
pub fn init(target: &LossTarget, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    let target = restrict(target, &cfg.weights);
    let n = target.x.len();
    let z: Vec<f64> = match cfg.init {
        MaskInit::Zero => vec![0.0; n],
        MaskInit::Normal { std, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| (std * rng.sample::<f64, _>(StandardNormal)).clamp(-Z_LIMIT, Z_LIMIT))
                .collect()
        }
    };
    let decomposition = Decomposition::new(
        target.dims,
        target.x.clone(),
        target.x.clone(),
        z.iter().map(|&v| logistic(v)).collect(),
    )?;
    let report = total_loss(&decomposition, &target, &cfg.weights)?;
    Ok(SolverState {
        iteration: 0,
        history: vec![entry(0, &report, [false; 3])],
        decomposition,
        z,
        rates: cfg.learning_rates.map(|r| vec![r; n]),
        prev_sign: [vec![0; n], vec![0; n], vec![0; n]],
        report,
    })
}

fn with_field(d: &Decomposition, z: &[f64], field: usize, dir: &[f64], step: f64) -> (Decomposition, Vec<f64>) {
    let mut next = d.clone();
    let mut z = z.to_vec();
    match field {
        0 => next.x_hat.iter_mut().zip(dir).for_each(|(v, g)| *v -= step * g),
        1 => next.s_hat.iter_mut().zip(dir).for_each(|(v, g)| *v -= step * g),
        _ => {
            for ((zi, g), m) in z.iter_mut().zip(dir).zip(next.m_hat.iter_mut()) {
                *zi = (*zi - step * g).clamp(-Z_LIMIT, Z_LIMIT);
                *m = logistic(*zi);
            }
        }
    }
    (next, z)
}

/// Start from a given decomposition; the latent is `logit(m_hat)` clamped to
/// `±Z_LIMIT`.
pub fn init_at(target: &LossTarget, point: &Decomposition, cfg: &SolverConfig) -> Result<SolverState> {
    let mut state = init(target, cfg)?;
    crate::volume::same_dims(point.dims, target.dims)?;
    state.z = point
        .m_hat
        .iter()
        .map(|&m| (m / (1.0 - m)).ln().clamp(-Z_LIMIT, Z_LIMIT))
        .collect();
    state.decomposition = Decomposition::new(
        point.dims,
        point.x_hat.clone(),
        point.s_hat.clone(),
        state.z.iter().map(|&v| logistic(v)).collect(),
    )?;
    state.report = total_loss(&state.decomposition, &restrict(target, &cfg.weights), &cfg.weights)?;
    state.history = vec![entry(0, &state.report, [false; 3])];
    Ok(state)
}

/// One pass over (x_hat, s_hat, z). Each field takes a fresh gradient,
/// scales it by the per-voxel steps, and backtracks a global multiplier from
/// 1 until the total strictly decreases. Per-voxel steps then grow where the
/// gradient kept its sign and shrink where it flipped.
pub fn step(state: &mut SolverState, target: &LossTarget, cfg: &SolverConfig) -> Result<()> {
    let target = restrict(target, &cfg.weights);
    let n = state.decomposition.len() as f64;
    let mut skipped = [false; 3];
    for field in 0..3 {
        let g = loss_gradients(&state.decomposition, &target, &cfg.weights)?;
        let grad: Vec<f64> = match field {
            0 => g.x_hat,
            1 => g.s_hat,
            _ => g
                .m_hat
                .iter()
                .zip(&state.decomposition.m_hat)
                .map(|(gm, m)| gm * m * (1.0 - m))
                .collect(),
        };
        if grad.iter().all(|&v| v == 0.0) {
            continue;
        }
        let rates = &mut state.rates[field];
        let prev = &mut state.prev_sign[field];
        for i in 0..grad.len() {
            let sg = sign(grad[i]);
            if sg != 0 && prev[i] != 0 {
                rates[i] *= if sg == prev[i] { cfg.rate_growth } else { cfg.rate_shrink };
            }
            if sg != 0 {
                prev[i] = sg;
            }
        }
        let dir: Vec<f64> = grad.iter().zip(rates.iter()).map(|(g, r)| g * n * r).collect();

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let (cand, z) = with_field(&state.decomposition, &state.z, field, &dir, t);
            let report = total_loss(&cand, &target, &cfg.weights)?;
            if report.total < state.report.total {
                state.decomposition = cand;
                state.z = z;
                state.report = report;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        // Fold the accepted multiplier back into the per-voxel steps.
        let shrink = if accepted { t } else { cfg.rate_shrink };
        if shrink < 1.0 {
            rates.iter_mut().for_each(|r| *r *= shrink);
        }
        skipped[field] = !accepted;
    }
    state.iteration += 1;
    if state.iteration.is_multiple_of(cfg.eval_every) {
        state.history.push(entry(state.iteration, &state.report, skipped));
    }
    Ok(())
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Iterate until the total is at most `cfg.tolerance` or `cfg.max_iters`
/// steps were taken.
pub fn solve(target: &LossTarget, cfg: &SolverConfig) -> Result<SolverState> {
    let mut state = init(target, cfg)?;
    while state.iteration < cfg.max_iters && state.report.total > cfg.tolerance {
        step(&mut state, target, cfg)?;
    }
    if state.history.last().map(|e| e.iteration) != Some(state.iteration) {
        state.history.push(entry(state.iteration, &state.report, [false; 3]));
    }
    Ok(state)
}

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub screened: usize,
}

/// Smallest denominator in the relative error.
const REL_FLOOR: f64 = 1e-8;

/// Compare analytic gradients with central differences of the total loss
/// on up to `per_field` random coordinates of each field.
///
/// Coordinates where an absolute-value residual changes sign (or vanishes)
/// inside the `±h` stencil are screened out.
pub fn gradient_check(
    target: &LossTarget,
    point: &Decomposition,
    weights: &LossWeights,
    h: f64,
    per_field: usize,
    seed: u64,
) -> Result<GradientCheck> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", "must be > 0"));
    }
    let grads = loss_gradients(point, target, weights)?;
    let alpha = weights.alpha.or(target.alpha);
    let n = point.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradientCheck {
        max_rel_error: 0.0,
        checked: 0,
        screened: 0,
    };
    for field in 0..3 {
        for i in sample(&mut rng, n, per_field.min(n)).into_iter() {
            let at = |delta: f64| {
                let mut d = point.clone();
                match field {
                    0 => d.x_hat[i] += delta,
                    1 => d.s_hat[i] += delta,
                    _ => d.m_hat[i] += delta,
                }
                d
            };
            let (plus, minus) = (at(h), at(-h));
            if crosses_kink(&plus, &minus, point, target, weights, alpha, i) {
                out.screened += 1;
                continue;
            }
            let fp = total_loss(&plus, target, weights)?.total;
            let fm = total_loss(&minus, target, weights)?.total;
            let numeric = (fp - fm) / (2.0 * h);
            let analytic = match field {
                0 => grads.x_hat[i],
                1 => grads.s_hat[i],
                _ => grads.m_hat[i],
            };
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
            out.max_rel_error = out.max_rel_error.max(rel);
            out.checked += 1;
        }
    }
    Ok(out)
}

fn crosses_kink(
    plus: &Decomposition,
    minus: &Decomposition,
    center: &Decomposition,
    t: &LossTarget,
    w: &LossWeights,
    alpha: Option<f64>,
    i: usize,
) -> bool {
    let residuals = |d: &Decomposition| {
        let mut r = Vec::with_capacity(3);
        if let (true, Some(x_n)) = (w.lambda[0] > 0.0, &t.x_n) {
            r.push(d.x_hat[i] - x_n[i]);
        }
        if let (true, Some(s)) = (w.lambda[1] > 0.0, &t.s) {
            r.push(d.s_hat[i] - s[i]);
        }
        if let (true, Some(a)) = (w.lambda[3] > 0.0, alpha) {
            let am = a * d.m_hat[i];
            r.push((1.0 - am) * d.x_hat[i] + am * d.s_hat[i] - t.x[i]);
        }
        r
    };
    let (rp, rm, rc) = (residuals(plus), residuals(minus), residuals(center));
    rc.iter()
        .zip(&rp)
        .zip(&rm)
        .any(|((c, p), m)| *c == 0.0 || c.signum() != p.signum() || c.signum() != m.signum())
}
