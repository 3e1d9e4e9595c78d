//! Seeded generators for the three simulation models, censoring times and
//! response quantiles.
//!
//! All draws come from ChaCha20 ([`RNG_ID`]). A replication uses
//! `seed_from_u64(seed)` with the stream set to the replication index, so
//! replications can be evaluated in any order or on any thread.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::DataSet;
use crate::error::{Result, SdrError};
use crate::linalg::{self, SymMatrix};

/// Generator identifier recorded in every report.
pub const RNG_ID: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64 + set_stream(replication)";

pub type SimRng = ChaCha20Rng;

/// Draws used to estimate a response quantile.
pub const QUANTILE_PRECISION_N: usize = 1_000_000;
/// Seed of the dedicated quantile stream.
pub const QUANTILE_SEED: u64 = 0x7175_616e_7469_6c65;

/// Censoring scale for lognormal-ratio under the `Gamma(shape 2, scale)` law that
/// gives a 25% censoring rate at the default settings. The printed value
/// 1.71 gives about 8% as a scale and about 41% as a rate.
pub const MODEL4_CENSOR_SCALE: f64 = 0.8505;
pub const MODEL4_PRINTED_CENSOR_PARAM: f64 = 1.71;

/// Generator for replication `rep` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// `D ((1 - rho) I + rho 11ᵀ) D`, or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSpec {
    Exchangeable {
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scales: Option<Vec<f64>>,
    },
    Full {
        rows: Vec<Vec<f64>>,
    },
}

impl CovarianceSpec {
    pub fn exchangeable(rho: f64) -> Self {
        CovarianceSpec::Exchangeable { rho, scales: None }
    }

    pub fn matrix(&self, p: usize) -> Result<Array2<f64>> {
        match self {
            CovarianceSpec::Exchangeable { rho, scales } => {
                let d = match scales {
                    Some(s) if s.len() != p => {
                        return Err(SdrError::ModelMisconfigured(format!(
                            "{} covariance scales for p = {p}",
                            s.len()
                        )))
                    }
                    Some(s) => s.clone(),
                    None => vec![1.0; p],
                };
                Ok(Array2::from_shape_fn((p, p), |(i, j)| {
                    let c = if i == j { 1.0 } else { *rho };
                    d[i] * c * d[j]
                }))
            }
            CovarianceSpec::Full { rows } => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(SdrError::ModelMisconfigured(format!(
                        "covariance must be {p}x{p}"
                    )));
                }
                Ok(Array2::from_shape_fn((p, p), |(i, j)| rows[i][j]))
            }
        }
    }
}

/// Radius law of the elliptical covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Radius {
    Beta {
        a: f64,
        b: f64,
    },
    /// Constant radius; puts every row on an ellipsoid.
    Fixed {
        r: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Censoring {
    #[default]
    None,
    Gamma {
        shape: f64,
        scale: f64,
    },
}

/// How `(α2ᵀX)^{-2}` enters the log-normal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// Standard deviation `(α2ᵀX)^{-2}`.
    #[default]
    StdDev,
    /// Variance `(α2ᵀX)^{-2}`, i.e. standard deviation `(α2ᵀX)^{-1}`.
    Variance,
}

/// `Y | X ~ Gamma(shape_factor · exp(αᵀX), scale)` with normal covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaModel {
    pub alpha: Vec<f64>,
    pub mean: Vec<f64>,
    pub cov: CovarianceSpec,
    pub shape_factor: f64,
    pub scale: f64,
    #[serde(default)]
    pub censoring: Censoring,
}

impl GammaModel {
    /// `α = (1, 2, 0)`, `X ~ N(0, 0.8I + 0.2·11ᵀ)`, `Gamma(2exp(αᵀX), 0.5)`.
    pub fn standard() -> Self {
        GammaModel {
            alpha: vec![1.0, 2.0, 0.0],
            mean: vec![0.0; 3],
            cov: CovarianceSpec::exchangeable(0.2),
            shape_factor: 2.0,
            scale: 0.5,
            censoring: Censoring::None,
        }
    }
}

/// `log Y | X ~ N(−α1ᵀX / α2ᵀX, noise)` with elliptical covariates
/// `X = μ + Σ^{1/2} r u / ‖u‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LognormalRatioModel {
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub mean: Vec<f64>,
    pub cov: CovarianceSpec,
    pub radius: Radius,
    #[serde(default)]
    pub noise: NoiseScale,
    #[serde(default)]
    pub censoring: Censoring,
}

fn padded(head: &[f64], p: usize) -> Vec<f64> {
    let mut v = vec![0.0; p];
    v[..head.len()].copy_from_slice(head);
    v
}

impl LognormalRatioModel {
    pub fn standard(p: usize) -> Self {
        assert!(p >= 3, "the model needs p >= 3");
        LognormalRatioModel {
            alpha1: padded(&[3.0, 0.9, -1.5], p),
            alpha2: padded(&[3.0, 4.5, 6.0], p),
            mean: padded(&[0.0, 3.0, 0.0], p),
            cov: CovarianceSpec::exchangeable(0.2),
            radius: Radius::Beta { a: 1.8, b: 0.3 },
            noise: NoiseScale::StdDev,
            censoring: Censoring::None,
        }
    }

    pub fn standard_censored(p: usize) -> Self {
        LognormalRatioModel {
            censoring: Censoring::Gamma {
                shape: 2.0,
                scale: MODEL4_CENSOR_SCALE,
            },
            ..Self::standard(p)
        }
    }
}

/// Piecewise constant hazard `exp(α_kᵀX)` on `[0, τ1)`, `[τ1, τ2)`, `[τ2, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseHazardModel {
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub alpha3: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub mean: Vec<f64>,
    pub cov: CovarianceSpec,
    #[serde(default)]
    pub censoring: Censoring,
}

impl PiecewiseHazardModel {
    pub fn standard(p: usize) -> Self {
        assert!(p >= 3, "the model needs p >= 3");
        let mut scales = vec![1.0; p];
        scales[0] = 2.0;
        PiecewiseHazardModel {
            alpha1: padded(&[20.0], p),
            alpha2: padded(&[0.0, 15.0], p),
            alpha3: padded(&[0.0, 0.0, 10.0], p),
            tau1: 2f64.ln(),
            tau2: 8f64.ln(),
            mean: vec![-0.2; p],
            cov: CovarianceSpec::Exchangeable {
                rho: 0.2,
                scales: Some(scales),
            },
            censoring: Censoring::None,
        }
    }

    pub fn standard_censored(p: usize) -> Self {
        PiecewiseHazardModel {
            censoring: Censoring::Gamma {
                shape: 1.0,
                scale: 8.0,
            },
            ..Self::standard(p)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Gamma(GammaModel),
    LognormalRatio(LognormalRatioModel),
    PiecewiseHazard(PiecewiseHazardModel),
}

/// One simulated data set. `data.y()` holds `min(Y, C)` when censored.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: DataSet,
    pub latent_y: Array1<f64>,
    pub censor_times: Option<Array1<f64>>,
    /// Covariate rows redrawn because the model was undefined there.
    pub rejections: usize,
}

impl Generated {
    pub fn censoring_rate(&self) -> f64 {
        match self.data.status() {
            Some(s) => s.iter().filter(|&&d| !d).count() as f64 / s.len() as f64,
            None => 0.0,
        }
    }
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(u, v)| u * v).sum()
}

fn check_len(name: &str, v: &[f64], p: usize) -> Result<()> {
    if v.len() != p {
        return Err(SdrError::ModelMisconfigured(format!(
            "{name} has length {}, expected p = {p}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SdrError::ModelMisconfigured(format!(
            "{name} is not finite"
        )));
    }
    Ok(())
}

/// Precomputed `Σ^{1/2}` and distributions for repeated draws.
struct Sampler<'a> {
    spec: &'a ModelSpec,
    sqrt_cov: Array2<f64>,
    radius: Option<RadiusDraw>,
    w: Vec<f64>,
}

enum RadiusDraw {
    Beta(Beta<f64>),
    Fixed(f64),
}

impl<'a> Sampler<'a> {
    fn new(spec: &'a ModelSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.p();
        let cov = SymMatrix::new(spec.cov().matrix(p)?)?;
        let eig = linalg::sym_eigen(&cov)?;
        if eig.values[p - 1] <= 0.0 {
            return Err(SdrError::ModelMisconfigured(
                "covariate covariance is not positive definite".into(),
            ));
        }
        let sqrt_cov = linalg::sqrt_psd(&cov)?.into_inner();
        let radius = match spec {
            ModelSpec::LognormalRatio(m) => Some(match m.radius {
                Radius::Beta { a, b } => RadiusDraw::Beta(
                    Beta::new(a, b).map_err(|e| SdrError::ModelMisconfigured(e.to_string()))?,
                ),
                Radius::Fixed { r } => RadiusDraw::Fixed(r),
            }),
            _ => None,
        };
        Ok(Sampler {
            spec,
            sqrt_cov,
            radius,
            w: vec![0.0; p],
        })
    }

    fn covariates<R: Rng + ?Sized>(&mut self, rng: &mut R, x: &mut [f64]) {
        for w in self.w.iter_mut() {
            *w = rng.sample(StandardNormal);
        }
        if let Some(radius) = &self.radius {
            let norm = self.w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = match radius {
                RadiusDraw::Beta(b) => b.sample(rng),
                RadiusDraw::Fixed(r) => *r,
            };
            self.w.iter_mut().for_each(|v| *v *= r / norm);
        }
        let mean = self.spec.mean();
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = mean[j]
                + self
                    .w
                    .iter()
                    .zip(self.sqrt_cov.column(j))
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
        }
    }

    /// Fills `x` and returns the latent response, or `None` for a rejected row.
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, x: &mut [f64]) -> Result<Option<f64>> {
        self.covariates(rng, x);
        match self.spec {
            ModelSpec::Gamma(m) => {
                let shape = m.shape_factor * dot(&m.alpha, x).exp();
                let g = Gamma::new(shape, m.scale).map_err(|e| {
                    SdrError::ModelMisconfigured(format!("gamma law with shape {shape}: {e}"))
                })?;
                Ok(Some(g.sample(rng)))
            }
            ModelSpec::LognormalRatio(m) => {
                let b = dot(&m.alpha2, x);
                if b <= 0.0 {
                    return Ok(None);
                }
                let sd = match m.noise {
                    NoiseScale::StdDev => b.powi(-2),
                    NoiseScale::Variance => 1.0 / b,
                };
                let eps: f64 = rng.sample(StandardNormal);
                Ok(Some((-dot(&m.alpha1, x) / b + sd * eps).exp()))
            }
            ModelSpec::PiecewiseHazard(m) => {
                let e: f64 = rng.sample(Exp1);
                let r1 = dot(&m.alpha1, x).exp();
                let r2 = dot(&m.alpha2, x).exp();
                let r3 = dot(&m.alpha3, x).exp();
                Ok(Some(piecewise_inverse(e, m.tau1, m.tau2, r1, r2, r3)))
            }
        }
    }
}

/// Time at which the cumulative hazard of the three-piece model reaches `e`.
pub fn piecewise_inverse(e: f64, tau1: f64, tau2: f64, r1: f64, r2: f64, r3: f64) -> f64 {
    let h1 = tau1 * r1;
    if e < h1 {
        return e / r1;
    }
    let rest = e - h1;
    let h2 = (tau2 - tau1) * r2;
    if rest < h2 {
        return tau1 + rest / r2;
    }
    tau2 + (rest - h2) / r3
}

impl ModelSpec {
    pub fn p(&self) -> usize {
        self.mean().len()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gamma(_) => "gamma",
            ModelSpec::LognormalRatio(_) => "lognormal_ratio",
            ModelSpec::PiecewiseHazard(_) => "piecewise_hazard",
        }
    }

    fn mean(&self) -> &[f64] {
        match self {
            ModelSpec::Gamma(m) => &m.mean,
            ModelSpec::LognormalRatio(m) => &m.mean,
            ModelSpec::PiecewiseHazard(m) => &m.mean,
        }
    }

    fn cov(&self) -> &CovarianceSpec {
        match self {
            ModelSpec::Gamma(m) => &m.cov,
            ModelSpec::LognormalRatio(m) => &m.cov,
            ModelSpec::PiecewiseHazard(m) => &m.cov,
        }
    }

    pub fn censoring(&self) -> Censoring {
        match self {
            ModelSpec::Gamma(m) => m.censoring,
            ModelSpec::LognormalRatio(m) => m.censoring,
            ModelSpec::PiecewiseHazard(m) => m.censoring,
        }
    }

    pub fn with_censoring(&self, censoring: Censoring) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::Gamma(m) => m.censoring = censoring,
            ModelSpec::LognormalRatio(m) => m.censoring = censoring,
            ModelSpec::PiecewiseHazard(m) => m.censoring = censoring,
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 {
            return Err(SdrError::ModelMisconfigured("p must be positive".into()));
        }
        match self {
            ModelSpec::Gamma(m) => {
                check_len("alpha", &m.alpha, p)?;
                if !(m.shape_factor > 0.0 && m.scale > 0.0) {
                    return Err(SdrError::ModelMisconfigured(
                        "gamma shape factor and scale must be positive".into(),
                    ));
                }
            }
            ModelSpec::LognormalRatio(m) => {
                check_len("alpha1", &m.alpha1, p)?;
                check_len("alpha2", &m.alpha2, p)?;
            }
            ModelSpec::PiecewiseHazard(m) => {
                check_len("alpha1", &m.alpha1, p)?;
                check_len("alpha2", &m.alpha2, p)?;
                check_len("alpha3", &m.alpha3, p)?;
                if !(0.0 < m.tau1 && m.tau1 < m.tau2) {
                    return Err(SdrError::ModelMisconfigured(format!(
                        "need 0 < tau1 < tau2, got ({}, {})",
                        m.tau1, m.tau2
                    )));
                }
            }
        }
        check_len("mean", self.mean(), p)?;
        if let Censoring::Gamma { shape, scale } = self.censoring() {
            if !(shape > 0.0 && scale > 0.0) {
                return Err(SdrError::ModelMisconfigured(
                    "censoring gamma parameters must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Basis of the central subspace of `Y`.
    pub fn central_basis(&self) -> Array2<f64> {
        match self {
            ModelSpec::Gamma(m) => columns(&[&m.alpha]),
            ModelSpec::LognormalRatio(m) => columns(&[&m.alpha1, &m.alpha2]),
            ModelSpec::PiecewiseHazard(m) => columns(&[&m.alpha1, &m.alpha2, &m.alpha3]),
        }
    }

    /// Basis of the central subspace of `I(Y <= t)`.
    pub fn induced_basis(&self, t: f64) -> Array2<f64> {
        match self {
            ModelSpec::Gamma(m) => columns(&[&m.alpha]),
            ModelSpec::LognormalRatio(m) => {
                let lt = t.ln();
                let v: Vec<f64> = m
                    .alpha1
                    .iter()
                    .zip(&m.alpha2)
                    .map(|(a, b)| a + lt * b)
                    .collect();
                columns(&[&v])
            }
            ModelSpec::PiecewiseHazard(m) => {
                let mut cols: Vec<&[f64]> = vec![&m.alpha1];
                if t >= m.tau1 {
                    cols.push(&m.alpha2);
                }
                if t >= m.tau2 {
                    cols.push(&m.alpha3);
                }
                columns(&cols)
            }
        }
    }

    /// Draws `n` rows. Latent responses are drawn first, censoring times
    /// afterwards, so the censored and uncensored variants of a spec share
    /// covariates and latent responses for the same generator state.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Generated> {
        if n == 0 {
            return Err(SdrError::EmptyData);
        }
        let p = self.p();
        let mut sampler = Sampler::new(self)?;
        let mut x = Array2::zeros((n, p));
        let mut y = Array1::zeros(n);
        let mut row = vec![0.0; p];
        let mut rejections = 0usize;
        let mut i = 0;
        while i < n {
            match sampler.draw(rng, &mut row)? {
                Some(v) => {
                    x.row_mut(i).assign(&Array1::from(row.clone()));
                    y[i] = v;
                    i += 1;
                }
                None => {
                    rejections += 1;
                    if rejections > i.max(50) {
                        return Err(SdrError::ModelMisconfigured(format!(
                            "{rejections} of {} covariate draws rejected",
                            rejections + i
                        )));
                    }
                }
            }
        }
        if let Some(j) = y.iter().position(|v: &f64| !v.is_finite()) {
            return Err(SdrError::ModelMisconfigured(format!(
                "non-finite response drawn at row {}",
                j + 1
            )));
        }
        let (data, censor_times) = match self.censoring() {
            Censoring::None => (DataSet::new(x, y.clone(), None)?, None),
            Censoring::Gamma { shape, scale } => {
                let g = Gamma::new(shape, scale)
                    .map_err(|e| SdrError::ModelMisconfigured(e.to_string()))?;
                let c: Array1<f64> = (0..n).map(|_| g.sample(rng)).collect();
                let status: Vec<bool> = y.iter().zip(&c).map(|(a, b)| a <= b).collect();
                let y_star = Array1::from_iter(y.iter().zip(&c).map(|(a, b)| a.min(*b)));
                (DataSet::new(x, y_star, Some(status))?, Some(c))
            }
        };
        Ok(Generated {
            data,
            latent_y: y,
            censor_times,
            rejections,
        })
    }

    /// Latent responses only, without keeping covariates.
    pub fn sample_latent<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut sampler = Sampler::new(self)?;
        let mut row = vec![0.0; self.p()];
        let mut out = Vec::with_capacity(n);
        let mut rejections = 0usize;
        while out.len() < n {
            match sampler.draw(rng, &mut row)? {
                Some(v) => out.push(v),
                None => {
                    rejections += 1;
                    if rejections > out.len().max(50) {
                        return Err(SdrError::ModelMisconfigured(
                            "more than half of the covariate draws rejected".into(),
                        ));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn columns(cols: &[&[f64]]) -> Array2<f64> {
    let p = cols[0].len();
    Array2::from_shape_fn((p, cols.len()), |(i, j)| cols[j][i])
}

/// Empirical `a%` quantiles (type 1) of the latent response from `precision_n`
/// draws on the stream `(seed, 0)`. Censoring is irrelevant to the latent law.
pub fn response_quantiles(
    spec: &ModelSpec,
    percents: &[f64],
    precision_n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    for &a in percents {
        if !(a > 0.0 && a < 100.0) {
            return Err(SdrError::Config(format!(
                "quantile percent must be in (0, 100), got {a}"
            )));
        }
    }
    if precision_n == 0 {
        return Err(SdrError::EmptyData);
    }
    let mut rng = replication_rng(seed, 0);
    let mut y = spec
        .with_censoring(Censoring::None)
        .sample_latent(precision_n, &mut rng)?;
    y.sort_by(f64::total_cmp);
    Ok(percents
        .iter()
        .map(|a| {
            let k = ((a / 100.0) * precision_n as f64).ceil() as usize;
            y[k.clamp(1, precision_n) - 1]
        })
        .collect())
}

pub fn response_quantile(
    spec: &ModelSpec,
    a_percent: f64,
    precision_n: usize,
    seed: u64,
) -> Result<f64> {
    Ok(response_quantiles(spec, &[a_percent], precision_n, seed)?[0])
}

/// Censoring rate of `Gamma(shape, scale)` censoring against `latent`
/// responses, reusing the supplied unit-scale gamma draws.
fn rate_at(latent: &[f64], unit: &[f64], scale: f64) -> f64 {
    latent
        .iter()
        .zip(unit)
        .filter(|(y, g)| scale * **g < **y)
        .count() as f64
        / latent.len() as f64
}

/// Scale of a `Gamma(shape, scale)` censoring law giving `target` censoring
/// rate for this model, by bisection over common random numbers.
pub fn calibrate_censoring_scale(
    spec: &ModelSpec,
    shape: f64,
    target: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(SdrError::Config(format!(
            "target rate must be in (0, 1), got {target}"
        )));
    }
    let mut rng = replication_rng(seed, 0);
    let latent = spec
        .with_censoring(Censoring::None)
        .sample_latent(n, &mut rng)?;
    let g = Gamma::new(shape, 1.0).map_err(|e| SdrError::ModelMisconfigured(e.to_string()))?;
    let unit: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
    // rate decreases in scale
    let (mut lo, mut hi) = (1e-6, 1.0);
    while rate_at(&latent, &unit, hi) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(SdrError::ModelMisconfigured(
                "cannot reach target censoring rate".into(),
            ));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate_at(&latent, &unit, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> SimRng {
        replication_rng(11, 0)
    }

    #[test]
    fn same_seed_same_data() {
        let spec = ModelSpec::LognormalRatio(LognormalRatioModel::standard_censored(10));
        let a = spec.generate(50, &mut replication_rng(3, 4)).unwrap();
        let b = spec.generate(50, &mut replication_rng(3, 4)).unwrap();
        let c = spec.generate(50, &mut replication_rng(3, 5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn censoring_does_not_change_latent_draws() {
        let plain = ModelSpec::PiecewiseHazard(PiecewiseHazardModel::standard(10));
        let cens = ModelSpec::PiecewiseHazard(PiecewiseHazardModel::standard_censored(10));
        let a = plain.generate(40, &mut rng()).unwrap();
        let b = cens.generate(40, &mut rng()).unwrap();
        assert_eq!(a.latent_y, b.latent_y);
        assert_eq!(a.data.x(), b.data.x());
        let s = b.data.status().unwrap();
        for i in 0..40 {
            let c = b.censor_times.as_ref().unwrap()[i];
            assert_eq!(b.data.y()[i], a.latent_y[i].min(c));
            assert_eq!(s[i], a.latent_y[i] <= c);
        }
    }

    #[test]
    fn piecewise_inverse_is_continuous_at_boundaries() {
        let (t1, t2) = (2f64.ln(), 8f64.ln());
        let (r1, r2, r3) = (1.5, 0.7, 2.0);
        let h1 = t1 * r1;
        let h2 = h1 + (t2 - t1) * r2;
        assert!((piecewise_inverse(h1 - 1e-12, t1, t2, r1, r2, r3) - t1).abs() < 1e-9);
        assert!((piecewise_inverse(h1, t1, t2, r1, r2, r3) - t1).abs() < 1e-12);
        assert!((piecewise_inverse(h2, t1, t2, r1, r2, r3) - t2).abs() < 1e-12);
        // equal rates reduce to an exponential
        assert!((piecewise_inverse(3.0, t1, t2, 2.0, 2.0, 2.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_radius_rows_lie_on_ellipsoid() {
        let mut m = LognormalRatioModel::standard(5);
        m.radius = Radius::Fixed { r: 1.0 };
        let spec = ModelSpec::LognormalRatio(m.clone());
        let g = spec.generate(200, &mut rng()).unwrap();
        let s = SymMatrix::new(m.cov.matrix(5).unwrap()).unwrap();
        let si = linalg::inv_sqrt(&s).unwrap();
        let mu = Array1::from(m.mean.clone());
        for row in g.data.x().rows() {
            let z = si.as_array().dot(&(&row - &mu));
            assert!((z.dot(&z).sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn true_bases() {
        let m5 = ModelSpec::PiecewiseHazard(PiecewiseHazardModel::standard(10));
        assert_eq!(m5.induced_basis(0.5).ncols(), 1);
        assert_eq!(m5.induced_basis(1.0).ncols(), 2);
        assert_eq!(m5.induced_basis(2.5).ncols(), 3);
        let m4 = ModelSpec::LognormalRatio(LognormalRatioModel::standard(10));
        let g = m4.induced_basis(1.0);
        assert_eq!(g.column(0).to_vec(), padded(&[3.0, 0.9, -1.5], 10));
        assert_eq!(m4.central_basis().ncols(), 2);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut m = LognormalRatioModel::standard(5);
        m.alpha1.pop();
        assert!(matches!(
            ModelSpec::LognormalRatio(m).generate(10, &mut rng()),
            Err(SdrError::ModelMisconfigured(_))
        ));
        let mut m = LognormalRatioModel::standard(5);
        m.alpha2 = padded(&[-1.0], 5);
        m.mean = vec![5.0; 5];
        assert!(matches!(
            ModelSpec::LognormalRatio(m).generate(100, &mut rng()),
            Err(SdrError::ModelMisconfigured(_))
        ));
        let mut h = PiecewiseHazardModel::standard(4);
        h.tau2 = h.tau1;
        assert!(ModelSpec::PiecewiseHazard(h).validate().is_err());
    }

    #[test]
    fn quantiles_are_monotone_and_type_one() {
        let spec = ModelSpec::Gamma(GammaModel::standard());
        let q = response_quantiles(&spec, &[30.0, 50.0, 70.0], 20_000, 1).unwrap();
        assert!(q[0] < q[1] && q[1] < q[2]);
        assert!(response_quantile(&spec, 0.0, 10, 1).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ModelSpec::PiecewiseHazard(PiecewiseHazardModel::standard_censored(10));
        let s = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
    }
}
