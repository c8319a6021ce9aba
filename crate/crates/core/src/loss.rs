//! Layer-decomposition losses and their analytic gradients.
//!
//! All terms are mean-reduced over voxels and accumulate in f64.

use serde::{Deserialize, Serialize};

use crate::compose::SyntheticSample;
use crate::error::{Error, Result};
use crate::par;
use crate::volume::{check_dims, Dims, Spacing, Volume};

/// Smoothing constant of the soft dice term.
pub const DICE_EPS: f64 = 1e-6;

/// Predicted normal image, tumor layer and soft mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub dims: Dims,
    pub x_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub m_hat: Vec<f64>,
}

impl Decomposition {
    pub fn new(dims: Dims, x_hat: Vec<f64>, s_hat: Vec<f64>, m_hat: Vec<f64>) -> Result<Self> {
        let n = check_dims(dims)?;
        for v in [&x_hat, &s_hat, &m_hat] {
            if v.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        if m_hat.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::param("m_hat", "values must lie in [0, 1]"));
        }
        Ok(Self {
            dims,
            x_hat,
            s_hat,
            m_hat,
        })
    }

    pub fn from_volumes(x_hat: &Volume, s_hat: &Volume, m_hat: &Volume) -> Result<Self> {
        crate::volume::same_dims(x_hat.dims(), s_hat.dims())?;
        crate::volume::same_dims(x_hat.dims(), m_hat.dims())?;
        Self::new(x_hat.dims(), x_hat.to_f64(), s_hat.to_f64(), m_hat.to_f64())
    }

    /// The decomposition a perfect model would output for `sample`.
    pub fn ground_truth(sample: &SyntheticSample) -> Self {
        Self {
            dims: sample.x.dims(),
            x_hat: sample.x_n.to_f64(),
            s_hat: sample.s.to_f64(),
            m_hat: sample.m.data().iter().map(|&b| b as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_hat.is_empty()
    }

    /// `(x_hat, s_hat, m_hat)` rounded to f32 volumes.
    pub fn to_volumes(&self, spacing: Spacing) -> Result<(Volume, Volume, Volume)> {
        let v = |d: &[f64]| Volume::new(self.dims, spacing, d.iter().map(|&x| x as f32).collect());
        Ok((v(&self.x_hat)?, v(&self.s_hat)?, v(&self.m_hat)?))
    }
}

/// Observed input plus whatever ground truth is available.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTarget {
    pub dims: Dims,
    pub x: Vec<f64>,
    pub x_n: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
    pub alpha: Option<f64>,
}

impl LossTarget {
    pub fn from_sample(sample: &SyntheticSample) -> Self {
        Self {
            dims: sample.x.dims(),
            x: sample.x.to_f64(),
            x_n: Some(sample.x_n.to_f64()),
            s: Some(sample.s.to_f64()),
            m: Some(sample.m.data().iter().map(|&b| b as f64).collect()),
            alpha: Some(sample.alpha),
        }
    }

    /// Real-data target: only the input image is known.
    pub fn observed(x: &Volume) -> Self {
        Self {
            dims: x.dims(),
            x: x.to_f64(),
            x_n: None,
            s: None,
            m: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: [f64; 4],
    /// Mixing parameter for the recomposition term; `None` uses the target's.
    pub alpha: Option<f64>,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda: [1.0; 4],
            alpha: None,
        }
    }
}

impl LossWeights {
    /// Recomposition only, with alpha fixed to 1.
    pub fn real_data() -> Self {
        Self {
            lambda: [0.0, 0.0, 0.0, 1.0],
            alpha: Some(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::param("weights", "lambdas must be finite and >= 0"));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::param("weights.alpha", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Term values (`None` when the target lacks the field and the weight is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    pub total: f64,
    pub lambda: [f64; 4],
    pub alpha: Option<f64>,
}

/// Gradients of the weighted total with respect to each field.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub x_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub m_hat: Vec<f64>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check(d: &Decomposition, t: &LossTarget) -> Result<()> {
    crate::volume::same_dims(d.dims, t.dims)
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    par::sum_indexed(a.len(), |i| (a[i] - b[i]).abs()) / a.len() as f64
}

/// Mean |x_hat - x_n|.
pub fn loss_l0(d: &Decomposition, t: &LossTarget) -> Result<f64> {
    check(d, t)?;
    let x_n = t.x_n.as_ref().ok_or(Error::MissingField("x_n"))?;
    Ok(mean_abs_diff(&d.x_hat, x_n))
}

/// Mean |s_hat - s|.
pub fn loss_l1(d: &Decomposition, t: &LossTarget) -> Result<f64> {
    check(d, t)?;
    let s = t.s.as_ref().ok_or(Error::MissingField("s"))?;
    Ok(mean_abs_diff(&d.s_hat, s))
}

fn dice_sums(m_hat: &[f64], m: &[f64]) -> (f64, f64) {
    let inter = par::sum_indexed(m.len(), |i| m_hat[i] * m[i]);
    let denom = par::sum_indexed(m.len(), |i| m_hat[i] + m[i]);
    (inter, denom)
}

/// `1 - (2 sum(m_hat m) + eps) / (sum(m_hat) + sum(m) + eps)`.
pub fn soft_dice_loss(m_hat: &[f64], m: &[f64]) -> Result<f64> {
    if m_hat.len() != m.len() {
        return Err(Error::SizeMismatch {
            expected: m.len(),
            found: m_hat.len(),
        });
    }
    let (inter, denom) = dice_sums(m_hat, m);
    Ok(1.0 - (2.0 * inter + DICE_EPS) / (denom + DICE_EPS))
}

fn residual(d: &Decomposition, x: &[f64], alpha: f64, i: usize) -> f64 {
    let am = alpha * d.m_hat[i];
    (1.0 - am) * d.x_hat[i] + am * d.s_hat[i] - x[i]
}

/// Mean |(1 - alpha m_hat) x_hat + alpha m_hat s_hat - x|.
pub fn recomposition_loss(d: &Decomposition, t: &LossTarget, alpha: f64) -> Result<f64> {
    check(d, t)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1]"));
    }
    Ok(par::sum_indexed(d.len(), |i| residual(d, &t.x, alpha, i).abs()) / d.len() as f64)
}

fn resolve_alpha(t: &LossTarget, w: &LossWeights) -> Option<f64> {
    w.alpha.or(t.alpha)
}

fn term<F>(weight: f64, present: bool, field: &'static str, f: F) -> Result<Option<f64>>
where
    F: FnOnce() -> Result<f64>,
{
    match (present, weight > 0.0) {
        (true, _) => f().map(Some),
        (false, true) => Err(Error::MissingField(field)),
        (false, false) => Ok(None),
    }
}

/// Weighted sum of the four terms.
///
/// A term with nonzero weight needs its ground-truth field; terms whose field
/// is absent and whose weight is zero are reported as `None`.
pub fn total_loss(d: &Decomposition, t: &LossTarget, w: &LossWeights) -> Result<LossReport> {
    w.validate()?;
    check(d, t)?;
    let [w0, w1, w2, w3] = w.lambda;
    let alpha = resolve_alpha(t, w);
    let l0 = term(w0, t.x_n.is_some(), "x_n", || loss_l0(d, t))?;
    let l1 = term(w1, t.s.is_some(), "s", || loss_l1(d, t))?;
    let l2 = term(w2, t.m.is_some(), "m", || soft_dice_loss(&d.m_hat, t.m.as_ref().unwrap()))?;
    let l3 = term(w3, alpha.is_some(), "alpha", || recomposition_loss(d, t, alpha.unwrap()))?;
    Ok(LossReport {
        l0,
        l1,
        l2,
        l3,
        total: weighted_total(w.lambda, [l0, l1, l2, l3]),
        lambda: w.lambda,
        alpha,
    })
}

/// `w0 l0 + w1 l1 + w2 l2 + w3 l3`, absent terms counting as 0.
pub fn weighted_total(lambda: [f64; 4], terms: [Option<f64>; 4]) -> f64 {
    let t = terms.map(|v| v.unwrap_or(0.0));
    lambda[0] * t[0] + lambda[1] * t[1] + lambda[2] * t[2] + lambda[3] * t[3]
}

/// Analytic gradients of `total_loss` (sign(0) taken as 0 on the L1 kinks).
pub fn loss_gradients(d: &Decomposition, t: &LossTarget, w: &LossWeights) -> Result<Gradients> {
    w.validate()?;
    check(d, t)?;
    let n = d.len();
    let inv_n = 1.0 / n as f64;
    let [w0, w1, w2, w3] = w.lambda;
    let x_n = match (w0 > 0.0, &t.x_n) {
        (true, None) => return Err(Error::MissingField("x_n")),
        (true, Some(v)) => Some(v),
        _ => None,
    };
    let s = match (w1 > 0.0, &t.s) {
        (true, None) => return Err(Error::MissingField("s")),
        (true, Some(v)) => Some(v),
        _ => None,
    };
    let dice = match (w2 > 0.0, &t.m) {
        (true, None) => return Err(Error::MissingField("m")),
        (true, Some(m)) => {
            let (inter, denom) = dice_sums(&d.m_hat, m);
            Some((m, 2.0 * inter + DICE_EPS, denom + DICE_EPS))
        }
        _ => None,
    };
    let alpha = match (w3 > 0.0, resolve_alpha(t, w)) {
        (true, None) => return Err(Error::MissingField("alpha")),
        (true, Some(a)) => Some(a),
        _ => None,
    };

    let per_voxel = par::map_indexed(n, |i| {
        let mut g = [0.0; 3];
        if let Some(x_n) = x_n {
            g[0] += w0 * sign(d.x_hat[i] - x_n[i]) * inv_n;
        }
        if let Some(s) = s {
            g[1] += w1 * sign(d.s_hat[i] - s[i]) * inv_n;
        }
        if let Some((m, num, den)) = dice {
            g[2] -= w2 * (2.0 * m[i] * den - num) / (den * den);
        }
        if let Some(a) = alpha {
            let sg = sign(residual(d, &t.x, a, i)) * w3 * inv_n;
            let am = a * d.m_hat[i];
            g[0] += sg * (1.0 - am);
            g[1] += sg * am;
            g[2] += sg * a * (d.s_hat[i] - d.x_hat[i]);
        }
        g
    });
    let mut out = Gradients {
        x_hat: Vec::with_capacity(n),
        s_hat: Vec::with_capacity(n),
        m_hat: Vec::with_capacity(n),
    };
    for g in per_voxel {
        out.x_hat.push(g[0]);
        out.s_hat.push(g[1]);
        out.m_hat.push(g[2]);
    }
    Ok(out)
}
