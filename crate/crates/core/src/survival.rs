//! Censored-response machinery: product-limit curves, double slicing and
//! inverse-probability-of-censoring weighted group moments.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::DataSet;
use crate::error::{Result, SdrError, Warning};
use crate::kernels::{self, save_block, SliceAssignment, Standardizer};
use crate::linalg::SymMatrix;

/// Smallest admissible `Ŝ_C(Y_i*)` in the IPC weights.
pub const CENSORING_SUPPORT_GUARD: f64 = 1e-6;

/// Right-continuous step function from a product-limit estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub jump_times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    /// `S(t)`, with `S(t) = 1` before the first jump.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&u| u <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `S(t-)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&u| u < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Smallest jump time at which `1 - S` reaches `prob`, if any.
    pub fn quantile(&self, prob: f64) -> Option<f64> {
        self.jump_times
            .iter()
            .zip(&self.values)
            .find(|(_, &s)| 1.0 - s >= prob - 1e-12)
            .map(|(&t, _)| t)
    }
}

/// Kaplan-Meier estimator of `pr(T > t)`. At tied times failures are
/// processed before censorings, so censored subjects at a failure time are
/// still at risk there.
///
/// The running product is kept as `anchor · (at risk after t) / (at risk at
/// anchor)`, re-anchoring after every censoring. Between censorings the
/// product-limit terms telescope, so without censoring every value is exactly
/// `(n - failures so far) / n`.
pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<SurvivalCurve> {
    if times.is_empty() {
        return Err(SdrError::EmptyData);
    }
    if times.len() != events.len() {
        return Err(SdrError::InvalidData(format!(
            "{} times but {} event indicators",
            times.len(),
            events.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(SdrError::InvalidData(format!("non-finite time {t}")));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut at_risk = times.len();
    let mut anchor_value = 1.0_f64;
    let mut anchor_risk = at_risk;
    let mut k = 0;
    while k < order.len() {
        let t = times[order[k]];
        let mut deaths = 0;
        let mut censored = 0;
        while k < order.len() && times[order[k]] == t {
            if events[order[k]] {
                deaths += 1;
            } else {
                censored += 1;
            }
            k += 1;
        }
        if deaths > 0 {
            let after = at_risk - deaths;
            let value = anchor_value * (after as f64 / anchor_risk as f64);
            jump_times.push(t);
            values.push(value);
        }
        at_risk -= deaths + censored;
        if censored > 0 {
            anchor_value = values.last().copied().unwrap_or(1.0);
            anchor_risk = at_risk;
        }
    }
    Ok(SurvivalCurve { jump_times, values })
}

/// Which value of `Ŝ_C` enters the IPC weight at an observed failure time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorWeighting {
    /// `Ŝ_C(Y_i*)`, counting censorings at `Y_i*` itself.
    #[default]
    RightContinuous,
    /// `Ŝ_C(Y_i*-)`.
    LeftLimit,
}

/// SIR slices formed separately within the censored and the uncensored stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlice {
    pub slices: SliceAssignment,
    pub warnings: Vec<Warning>,
}

/// Slice `y*` with `h0` slices among censored rows and `h1` among failures.
/// Censored slices come first in the combined labelling. An empty stratum is
/// skipped and reported as a warning.
pub fn double_slice(y_star: &[f64], delta: &[bool], h0: usize, h1: usize) -> Result<DoubleSlice> {
    if y_star.len() != delta.len() {
        return Err(SdrError::InvalidData(format!(
            "{} times but {} status values",
            y_star.len(),
            delta.len()
        )));
    }
    if h0 == 0 || h1 == 0 {
        return Err(SdrError::InvalidSlicing(format!(
            "need h0, h1 >= 1, got ({h0}, {h1})"
        )));
    }
    let mut labels = vec![0usize; y_star.len()];
    let mut warnings = Vec::new();
    let mut offset = 0;
    for (flag, h) in [(false, h0), (true, h1)] {
        let idx: Vec<usize> = (0..y_star.len()).filter(|&i| delta[i] == flag).collect();
        if idx.is_empty() {
            warnings.push(Warning::EmptyStratum { censored: !flag });
            continue;
        }
        let ys: Vec<f64> = idx.iter().map(|&i| y_star[i]).collect();
        let sub = kernels::slice_sorted(&ys, h)?;
        for (&i, &l) in idx.iter().zip(&sub.labels) {
            labels[i] = offset + l;
        }
        offset += sub.num_slices();
    }
    Ok(DoubleSlice {
        slices: SliceAssignment::from_labels(labels)?,
        warnings,
    })
}

fn require_status(data: &DataSet) -> Result<&[bool]> {
    data.status().ok_or(SdrError::MissingStatus)
}

/// SIR kernel with slices from [`double_slice`] on `(Y*, δ)`.
pub fn censored_sir_kernel(
    data: &DataSet,
    std: &Standardizer,
    h0: usize,
    h1: usize,
) -> Result<(SymMatrix, DoubleSlice)> {
    let status = require_status(data)?;
    let ds = double_slice(data.y().as_slice().expect("contiguous"), status, h0, h1)?;
    let z = std.standardize(data.x().view())?;
    Ok((kernels::sir_kernel(z.view(), &ds.slices)?, ds))
}

/// Group moments for `Y_g = I(Y <= t)` estimated from censored data.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredMoments {
    pub t: f64,
    pub mu_t0: Array1<f64>,
    pub mu_t1: Array1<f64>,
    /// Symmetric but not necessarily PSD in finite samples.
    pub sigma_t0: SymMatrix,
    pub sigma_t1: SymMatrix,
}

pub fn censored_save_moments(data: &DataSet, t: f64) -> Result<CensoredMoments> {
    censored_save_moments_with(data, t, CensorWeighting::default())
}

/// Plug-in group moments under independent censoring.
///
/// Group 0 (`Y > t`) is always observed exactly, so its mean and second
/// moment are plain averages over `{Y* > t}`. Group 1 (`Y <= t`) uses failures
/// with `Y* <= t`, each weighted by `1 / (n (1 - Ŝ_Y(t)) Ŝ_C(Y_i*))`.
pub fn censored_save_moments_with(
    data: &DataSet,
    t: f64,
    weighting: CensorWeighting,
) -> Result<CensoredMoments> {
    let status = require_status(data)?;
    let y = data.y().as_slice().expect("contiguous");
    let s_y = kaplan_meier(y, status)?;
    let flipped: Vec<bool> = status.iter().map(|d| !d).collect();
    let s_c = kaplan_meier(y, &flipped)?;

    moments_from_curves(data, t, &s_y, &s_c, weighting)
}

pub(crate) fn moments_from_curves(
    data: &DataSet,
    t: f64,
    s_y: &SurvivalCurve,
    s_c: &SurvivalCurve,
    weighting: CensorWeighting,
) -> Result<CensoredMoments> {
    let status = require_status(data)?;
    let y = data.y().as_slice().expect("contiguous");
    let x = data.x();
    let (n, p) = x.dim();

    let fail_prob = 1.0 - s_y.eval(t);
    if fail_prob <= 0.0 {
        return Err(SdrError::ThresholdTooEarly { t });
    }

    let above: Vec<usize> = (0..n).filter(|&i| y[i] > t).collect();
    if above.is_empty() {
        return Err(SdrError::GroupTooSmall {
            group: 0,
            size: 0,
            required: 1,
        });
    }
    let (mu_t0, second_t0) = weighted_moments(
        x.view(),
        above.iter().map(|&i| (i, 1.0 / above.len() as f64)),
    );

    let mut weights = Vec::new();
    for i in 0..n {
        if status[i] && y[i] <= t {
            let sc = match weighting {
                CensorWeighting::RightContinuous => s_c.eval(y[i]),
                CensorWeighting::LeftLimit => s_c.eval_left(y[i]),
            };
            if sc < CENSORING_SUPPORT_GUARD {
                return Err(SdrError::CensoringSupportViolated {
                    index: i,
                    time: y[i],
                    value: sc,
                });
            }
            weights.push((i, 1.0 / (n as f64 * fail_prob * sc)));
        }
    }
    let (mu_t1, second_t1) = weighted_moments(x.view(), weights.into_iter());

    let outer = |m: &Array1<f64>| Array2::from_shape_fn((p, p), |(a, b)| m[a] * m[b]);
    let sigma_t0 = SymMatrix::new(second_t0 - outer(&mu_t0))?;
    let sigma_t1 = SymMatrix::new(second_t1 - outer(&mu_t1))?;
    Ok(CensoredMoments {
        t,
        mu_t0,
        mu_t1,
        sigma_t0,
        sigma_t1,
    })
}

/// `(Σ w_i x_i, Σ w_i x_i x_iᵀ)`.
fn weighted_moments(
    x: ArrayView2<f64>,
    weights: impl Iterator<Item = (usize, f64)>,
) -> (Array1<f64>, Array2<f64>) {
    let p = x.ncols();
    let mut first = Array1::<f64>::zeros(p);
    let mut second = Array2::<f64>::zeros((p, p));
    for (i, w) in weights {
        let row = x.row(i);
        first.scaled_add(w, &row);
        for a in 0..p {
            let wa = w * row[a];
            for b in 0..p {
                second[[a, b]] += wa * row[b];
            }
        }
    }
    (first, second)
}

/// SAVE kernel from censored moments:
/// `K = [Σ̂^{-1/2}(μ̂_1 - μ̂_0) | Σ̂^{-1/2}(Σ̂_1 - Σ̂_0)Σ̂^{-1/2}]`, returned as `K Kᵀ`.
pub fn censored_save_kernel(data: &DataSet, std: &Standardizer, t: f64) -> Result<SymMatrix> {
    let m = censored_save_moments(data, t)?;
    Ok(save_kernel_from_moments(&m, std))
}

pub fn save_kernel_from_moments(m: &CensoredMoments, std: &Standardizer) -> SymMatrix {
    let s = std.sigma_inv_sqrt.as_array();
    let mean_diff = s.dot(&(&m.mu_t1 - &m.mu_t0));
    let cov_diff = s
        .dot(&(m.sigma_t1.as_array() - m.sigma_t0.as_array()))
        .dot(s);
    SymMatrix::gram(save_block(&mean_diff, &cov_diff).view())
}

/// Rank-one SIR kernel for the binary induced response:
/// `v vᵀ` with `v = Σ̂^{-1/2}(μ̂_1 - μ̂_0)`.
pub fn censored_sir_binary_kernel(data: &DataSet, std: &Standardizer, t: f64) -> Result<SymMatrix> {
    let m = censored_save_moments(data, t)?;
    let v = std.sigma_inv_sqrt.as_array().dot(&(&m.mu_t1 - &m.mu_t0));
    let col = v.insert_axis(ndarray::Axis(1));
    Ok(SymMatrix::gram(col.view()))
}
