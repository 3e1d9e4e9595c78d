//! Direct and two-stage estimation of the central subspace of an induced
//! response, plus maximal-eigenvalue-ratio dimension selection.
//!
//! The two-stage estimator runs a kernel on the full response to get
//! `P̂_B = B̂B̂ᵀ` with `B̂ = Eig(K̂; d)`, builds the induced-response kernel
//! `K̂_g`, and extracts `B̂_g = Eig(P̂_B K̂_g P̂_B; d_g)`. The direct estimator
//! skips the projection. Both report `Γ̂_g = Σ̂^{-1/2} B̂_g` on the X scale.

use std::fmt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::DataSet;
use crate::error::{Result, SdrError, Warning};
use crate::kernels::{self, KernelEstimate, SliceAssignment, Standardizer};
use crate::linalg::{self, Subspace};
use crate::survival;

/// Eigenvalues are floored here before ratios are formed.
pub const MERC_EIGEN_FLOOR: f64 = 1e-12;
/// Suggested upper bound for the MERC search.
pub const DEFAULT_D_STAR: usize = 5;
/// A projected eigenvalue below this fraction of `λ_max(K̂_g)` flags a degenerate projection.
pub const DEGENERATE_PROJECTION_RATIO: f64 = 1e-8;

/// Transformation `g` producing the induced response `Y_g = g(Y)`.
#[derive(Clone)]
pub enum InducedMap {
    Identity,
    /// `I(Y <= t)`.
    Threshold(f64),
    /// Class index = number of (sorted) cutpoints strictly below `y`.
    Cutpoints(Vec<f64>),
    Custom(fn(f64) -> f64),
}

impl fmt::Debug for InducedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InducedMap::Identity => write!(f, "Identity"),
            InducedMap::Threshold(t) => write!(f, "Threshold({t})"),
            InducedMap::Cutpoints(c) => write!(f, "Cutpoints({c:?})"),
            InducedMap::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl InducedMap {
    pub fn apply(&self, y: f64) -> f64 {
        match self {
            InducedMap::Identity => y,
            InducedMap::Threshold(t) => {
                if y <= *t {
                    1.0
                } else {
                    0.0
                }
            }
            InducedMap::Cutpoints(c) => c.iter().filter(|&&cut| y > cut).count() as f64,
            InducedMap::Custom(g) => g(y),
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            InducedMap::Threshold(t) => Some(*t),
            _ => None,
        }
    }
}

/// Kernel used by one stage of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelMethod {
    /// Sliced inverse regression with `h` slices of the (induced) response.
    Sir { h: usize },
    /// SIR for a two-class induced response.
    SirBinary,
    /// SAVE for a two-class induced response.
    SaveBinary,
    /// SIR on `(Y*, δ)` with `h0` censored and `h1` uncensored slices.
    SirDoubleSlice { h0: usize, h1: usize },
    /// Rank-one SIR kernel from censoring-weighted group means; needs `Threshold`.
    SirBinaryCensored,
    /// SAVE from censoring-weighted group moments; needs `Threshold`.
    SaveBinaryCensored,
}

impl KernelMethod {
    pub fn needs_status(self) -> bool {
        matches!(
            self,
            KernelMethod::SirDoubleSlice { .. }
                | KernelMethod::SirBinaryCensored
                | KernelMethod::SaveBinaryCensored
        )
    }
}

#[derive(Debug, Clone)]
pub struct SdrMethod {
    pub kernel: KernelMethod,
    pub induced: InducedMap,
}

impl SdrMethod {
    pub fn new(kernel: KernelMethod, induced: InducedMap) -> Self {
        SdrMethod { kernel, induced }
    }

    /// SIR on the response itself.
    pub fn sir(h: usize) -> Self {
        Self::new(KernelMethod::Sir { h }, InducedMap::Identity)
    }

    pub fn sir_double_slice(h0: usize, h1: usize) -> Self {
        Self::new(
            KernelMethod::SirDoubleSlice { h0, h1 },
            InducedMap::Identity,
        )
    }

    pub fn sir_binary(t: f64) -> Self {
        Self::new(KernelMethod::SirBinary, InducedMap::Threshold(t))
    }

    pub fn save_binary(t: f64) -> Self {
        Self::new(KernelMethod::SaveBinary, InducedMap::Threshold(t))
    }

    pub fn sir_binary_censored(t: f64) -> Self {
        Self::new(KernelMethod::SirBinaryCensored, InducedMap::Threshold(t))
    }

    pub fn save_binary_censored(t: f64) -> Self {
        Self::new(KernelMethod::SaveBinaryCensored, InducedMap::Threshold(t))
    }

    fn validate(&self, data: &DataSet) -> Result<()> {
        if self.kernel.needs_status() && !data.is_censored() {
            return Err(SdrError::MissingStatus);
        }
        match self.kernel {
            KernelMethod::SirDoubleSlice { .. }
                if !matches!(self.induced, InducedMap::Identity) =>
            {
                Err(SdrError::InvalidMethod(
                    "double slicing works on (Y*, δ) directly; use the identity map".into(),
                ))
            }
            KernelMethod::SirBinaryCensored | KernelMethod::SaveBinaryCensored
                if self.induced.threshold().is_none() =>
            {
                Err(SdrError::InvalidMethod(
                    "censored binary kernels need a threshold map I(Y <= t)".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

fn binary_labels(y_g: &[f64]) -> Result<Vec<bool>> {
    let mut levels: Vec<f64> = y_g.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() != 2 {
        return Err(SdrError::InvalidMethod(format!(
            "binary kernel needs exactly 2 induced classes, found {}",
            levels.len()
        )));
    }
    Ok(y_g.iter().map(|&v| v == levels[1]).collect())
}

fn label_slices(labels: &[bool]) -> Result<SliceAssignment> {
    SliceAssignment::from_labels(labels.iter().map(|&l| usize::from(l)).collect())
}

/// Kernel of one stage on already standardized covariates.
pub fn compute_kernel(
    data: &DataSet,
    std: &Standardizer,
    z: ArrayView2<f64>,
    method: &SdrMethod,
) -> Result<KernelEstimate> {
    method.validate(data)?;
    let y_g: Vec<f64> = data.y().iter().map(|&v| method.induced.apply(v)).collect();
    let (matrix, counts, warnings) = match method.kernel {
        KernelMethod::Sir { h } => {
            let slices = kernels::slice_response(&y_g, h)?;
            let k = kernels::sir_kernel(z, &slices)?;
            (k, Some(slices.counts), Vec::new())
        }
        KernelMethod::SirBinary => {
            let slices = label_slices(&binary_labels(&y_g)?)?;
            let k = kernels::sir_kernel(z, &slices)?;
            (k, Some(slices.counts), Vec::new())
        }
        KernelMethod::SaveBinary => {
            let labels = binary_labels(&y_g)?;
            let counts = label_slices(&labels)?.counts;
            (
                kernels::save_kernel_binary(z, &labels)?,
                Some(counts),
                Vec::new(),
            )
        }
        KernelMethod::SirDoubleSlice { h0, h1 } => {
            let status = data.status().ok_or(SdrError::MissingStatus)?;
            let ds = survival::double_slice(&y_g, status, h0, h1)?;
            let k = kernels::sir_kernel(z, &ds.slices)?;
            (k, Some(ds.slices.counts), ds.warnings)
        }
        KernelMethod::SirBinaryCensored => {
            let t = method.induced.threshold().expect("validated");
            (
                survival::censored_sir_binary_kernel(data, std, t)?,
                None,
                Vec::new(),
            )
        }
        KernelMethod::SaveBinaryCensored => {
            let t = method.induced.threshold().expect("validated");
            (
                survival::censored_save_kernel(data, std, t)?,
                None,
                Vec::new(),
            )
        }
    };
    let mut est = KernelEstimate::new(matrix)?;
    est.slice_counts = counts;
    est.warnings = warnings;
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Spectrum of `K̂` (two-stage fits only).
    pub stage1_eigenvalues: Option<Vec<f64>>,
    /// Spectrum of the unprojected `K̂_g`.
    pub induced_eigenvalues: Vec<f64>,
    pub stage1_slice_counts: Option<Vec<usize>>,
    pub induced_slice_counts: Option<Vec<usize>>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// X-scale basis `Σ̂^{-1/2} B̂_g`, `p x d_g`.
    pub gamma_hat: Array2<f64>,
    /// Z-scale orthonormal basis `B̂_g`.
    pub b_hat: Subspace,
    /// Spectrum of the matrix `B̂_g` was taken from (`P̂_B K̂_g P̂_B` for two-stage fits).
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    /// Orthonormal basis of `span(Γ̂_g)`.
    pub fn span(&self) -> Result<Subspace> {
        Subspace::span_of(self.gamma_hat.view())
    }
}

/// Standardizer plus both stage kernels for one data set. Direct and
/// two-stage fits (and dimension selection) reuse these without recomputing.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub standardizer: Standardizer,
    pub stage1: KernelEstimate,
    pub stage2: KernelEstimate,
}

impl KernelPair {
    pub fn estimate(data: &DataSet, stage1: &SdrMethod, stage2: &SdrMethod) -> Result<Self> {
        data.require_estimable()?;
        let standardizer = Standardizer::fit(data)?;
        let z = standardizer.standardize(data.x().view())?;
        let k = compute_kernel(data, &standardizer, z.view(), stage1)?;
        let k_g = compute_kernel(data, &standardizer, z.view(), stage2)?;
        Ok(KernelPair {
            standardizer,
            stage1: k,
            stage2: k_g,
        })
    }

    pub fn p(&self) -> usize {
        self.standardizer.p()
    }

    /// `B̂ = Eig(K̂; d)`.
    pub fn stage1_subspace(&self, d: usize) -> Result<Subspace> {
        linalg::leading_from_eigen(&self.stage1.eigen, d)
    }

    pub fn two_stage(&self, d: usize, d_g: usize) -> Result<FitResult> {
        let p = self.p();
        if d_g == 0 || d_g > d || d > p {
            return Err(SdrError::DimensionError(format!(
                "need 1 <= d_g <= d <= p, got d_g = {d_g}, d = {d}, p = {p}"
            )));
        }
        let b = self.stage1_subspace(d)?;
        let mut fit = project_and_extract(&self.stage2, &b, d_g, &self.standardizer)?;
        if b.boundary_tie {
            fit.diagnostics.warnings.insert(
                0,
                Warning::EigenvalueTie {
                    index: d,
                    value: self.stage1.eigen.values[d - 1],
                },
            );
        }
        let mut warnings = self.stage1.warnings.clone();
        warnings.append(&mut fit.diagnostics.warnings);
        fit.diagnostics.warnings = warnings;
        fit.diagnostics.stage1_eigenvalues = Some(self.stage1.eigen.values.clone());
        fit.diagnostics.stage1_slice_counts = self.stage1.slice_counts.clone();
        Ok(fit)
    }

    pub fn direct(&self, d_g: usize) -> Result<FitResult> {
        let b = linalg::leading_from_eigen(&self.stage2.eigen, d_g)?;
        let mut warnings = self.stage2.warnings.clone();
        if b.boundary_tie {
            warnings.push(Warning::EigenvalueTie {
                index: d_g,
                value: self.stage2.eigen.values[d_g - 1],
            });
        }
        Ok(FitResult {
            gamma_hat: self.standardizer.to_x_scale(b.basis().view()),
            b_hat: b,
            eigenvalues: self.stage2.eigen.values.clone(),
            diagnostics: Diagnostics {
                stage1_eigenvalues: None,
                induced_eigenvalues: self.stage2.eigen.values.clone(),
                stage1_slice_counts: None,
                induced_slice_counts: self.stage2.slice_counts.clone(),
                warnings,
            },
        })
    }

    /// Direct fit from the stage-one kernel: `Σ̂^{-1/2} Eig(K̂; d)`.
    pub fn direct_stage1(&self, d: usize) -> Result<FitResult> {
        KernelPair {
            standardizer: self.standardizer.clone(),
            stage1: self.stage1.clone(),
            stage2: self.stage1.clone(),
        }
        .direct(d)
    }

    /// `(d̂, d̂_g)` by MERC: `d̂` from the spectrum of `K̂`, then `d̂_g` from the
    /// spectrum of `P̂_B K̂_g P̂_B` with `P̂_B` built from `d̂` directions.
    pub fn select_dimensions(&self, d_star: usize) -> Result<DimensionChoice> {
        let mut warnings = Vec::new();
        let values = &self.stage1.eigen.values;
        let usable = values.len().saturating_sub(1);
        if d_star > usable {
            warnings.push(Warning::MercRangeClamped {
                requested: d_star,
                used: usable,
            });
        }
        let d = merc_select(values, d_star)?;
        let b = self.stage1_subspace(d)?;
        let projected = linalg::sym_eigen(&self.stage2.matrix.project(&b))?;
        let (d_g, warning) = merc_select_induced(&projected.values, d)?;
        warnings.extend(warning);
        Ok(DimensionChoice { d, d_g, warnings })
    }

    /// `d̂_g` for the direct estimator: MERC on the spectrum of `K̂_g`.
    pub fn select_direct_dimension(&self, d_star: usize) -> Result<usize> {
        merc_select(&self.stage2.eigen.values, d_star)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionChoice {
    pub d: usize,
    pub d_g: usize,
    pub warnings: Vec<Warning>,
}

/// `B̂_g = Eig(P_B K̂_g P_B; d_g)` for a given stage-one subspace `B`.
pub fn project_and_extract(
    k_g: &KernelEstimate,
    b: &Subspace,
    d_g: usize,
    std: &Standardizer,
) -> Result<FitResult> {
    if b.ambient_dim() != k_g.matrix.dim() {
        return Err(SdrError::DimensionError(format!(
            "subspace lives in R^{}, kernel is {}x{}",
            b.ambient_dim(),
            k_g.matrix.dim(),
            k_g.matrix.dim()
        )));
    }
    if d_g == 0 || d_g > b.dim() {
        return Err(SdrError::DimensionError(format!(
            "need 1 <= d_g <= dim(B) = {}, got {d_g}",
            b.dim()
        )));
    }
    let projected = k_g.matrix.project(b);
    let eig = linalg::sym_eigen(&projected)?;
    let b_g = linalg::leading_from_eigen(&eig, d_g)?;

    let mut warnings = Vec::new();
    let reference = k_g.eigen.values.first().copied().unwrap_or(0.0);
    let value = eig.values[d_g - 1];
    if reference <= 0.0 || value <= DEGENERATE_PROJECTION_RATIO * reference {
        warnings.push(Warning::DegenerateProjection {
            eigenvalue: value,
            reference,
        });
    }
    if b_g.boundary_tie {
        warnings.push(Warning::EigenvalueTie { index: d_g, value });
    }
    Ok(FitResult {
        gamma_hat: std.to_x_scale(b_g.basis().view()),
        b_hat: b_g,
        eigenvalues: eig.values,
        diagnostics: Diagnostics {
            stage1_eigenvalues: None,
            induced_eigenvalues: k_g.eigen.values.clone(),
            stage1_slice_counts: None,
            induced_slice_counts: k_g.slice_counts.clone(),
            warnings,
        },
    })
}

/// `Γ̃_g = Σ̂^{-1/2} Eig(K̂_g; d_g)`.
pub fn fit_direct(data: &DataSet, method: &SdrMethod, d_g: usize) -> Result<FitResult> {
    data.require_estimable()?;
    let std = Standardizer::fit(data)?;
    let z = std.standardize(data.x().view())?;
    let k_g = compute_kernel(data, &std, z.view(), method)?;
    let pair = KernelPair {
        stage1: k_g.clone(),
        stage2: k_g,
        standardizer: std,
    };
    pair.direct(d_g)
}

/// Two-stage estimate: `stage1` on the full response gives `P̂_B`, `stage2`
/// on the induced response gives `K̂_g`, and `Γ̂_g = Σ̂^{-1/2} Eig(P̂_B K̂_g P̂_B; d_g)`.
pub fn fit_two_stage(
    data: &DataSet,
    stage1: &SdrMethod,
    stage2: &SdrMethod,
    d: usize,
    d_g: usize,
) -> Result<FitResult> {
    if d_g > d {
        return Err(SdrError::DimensionError(format!(
            "d_g = {d_g} exceeds d = {d}"
        )));
    }
    KernelPair::estimate(data, stage1, stage2)?.two_stage(d, d_g)
}

/// Maximal eigenvalue ratio criterion: `argmax_{1 <= i <= d*} λ_i / λ_{i+1}`
/// over eigenvalues floored at [`MERC_EIGEN_FLOOR`]. Ties go to the smallest
/// index. The range is shortened to the available ratios when `d*` exceeds them.
pub fn merc_select(eigenvalues: &[f64], d_star: usize) -> Result<usize> {
    if eigenvalues.len() < 2 {
        return Err(SdrError::DimensionError(format!(
            "MERC needs at least 2 eigenvalues, got {}",
            eigenvalues.len()
        )));
    }
    if d_star == 0 {
        return Err(SdrError::DimensionError("d* must be at least 1".into()));
    }
    let range = d_star.min(eigenvalues.len() - 1);
    let floored = |v: f64| v.max(MERC_EIGEN_FLOOR);
    let mut best = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for i in 0..range {
        let ratio = floored(eigenvalues[i]) / floored(eigenvalues[i + 1]);
        if ratio > best_ratio {
            best_ratio = ratio;
            best = i + 1;
        }
    }
    Ok(best)
}

/// `d̂_g = argmax_{1 <= i <= d̂-1} λ_{g,i} / λ_{g,i+1}` over the spectrum of the
/// projected kernel. The range is empty when `d̂ < 2`; then 1 is returned with
/// a warning.
pub fn merc_select_induced(
    projected_eigenvalues: &[f64],
    d_hat: usize,
) -> Result<(usize, Option<Warning>)> {
    if d_hat < 2 {
        return Ok((1, Some(Warning::VacuousInducedRange { d_hat })));
    }
    if projected_eigenvalues.len() < d_hat {
        return Err(SdrError::DimensionError(format!(
            "need {d_hat} projected eigenvalues, got {}",
            projected_eigenvalues.len()
        )));
    }
    Ok((
        merc_select(&projected_eigenvalues[..d_hat], d_hat - 1)?,
        None,
    ))
}
