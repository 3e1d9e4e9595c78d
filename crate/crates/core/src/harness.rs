//! Monte Carlo cells: generate, fit the two-stage and direct estimators, and
//! summarize Frobenius distances to the true induced subspace.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError, Warning};
use crate::estimator::{KernelPair, SdrMethod, DEFAULT_D_STAR};
use crate::linalg::{frobenius_span_distance, Subspace};
use crate::par;
use crate::simgen::{
    self, replication_rng, GammaModel, LognormalRatioModel, ModelSpec, PiecewiseHazardModel,
    QUANTILE_PRECISION_N, QUANTILE_SEED,
};

/// Share of failed replications above which a cell is flagged.
pub const FAILURE_FLAG_RATE: f64 = 0.05;
pub const DEFAULT_REPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    /// Global rayon pool (sequential without the `parallel` feature).
    #[default]
    Auto,
    Serial,
    Threads(usize),
}

impl Parallelism {
    fn threads(self) -> Option<usize> {
        match self {
            Parallelism::Auto => None,
            Parallelism::Serial => Some(1),
            Parallelism::Threads(k) => Some(k.max(1)),
        }
    }
}

/// Stage-one and stage-two kernels of a cell. The direct estimator uses the
/// stage-two kernel alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodPair {
    SirSir {
        h: usize,
    },
    SirSave {
        h: usize,
    },
    /// Double-sliced SIR, then the censoring-weighted binary SIR kernel.
    CensoredSirSir {
        h0: usize,
        h1: usize,
    },
    /// Double-sliced SIR, then the censoring-weighted SAVE kernel.
    CensoredSirSave {
        h0: usize,
        h1: usize,
    },
}

impl MethodPair {
    pub fn methods(self, t: f64) -> (SdrMethod, SdrMethod) {
        match self {
            MethodPair::SirSir { h } => (SdrMethod::sir(h), SdrMethod::sir_binary(t)),
            MethodPair::SirSave { h } => (SdrMethod::sir(h), SdrMethod::save_binary(t)),
            MethodPair::CensoredSirSir { h0, h1 } => (
                SdrMethod::sir_double_slice(h0, h1),
                SdrMethod::sir_binary_censored(t),
            ),
            MethodPair::CensoredSirSave { h0, h1 } => (
                SdrMethod::sir_double_slice(h0, h1),
                SdrMethod::save_binary_censored(t),
            ),
        }
    }

    /// `(two-stage, direct)` labels.
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            MethodPair::SirSir { .. } | MethodPair::CensoredSirSir { .. } => ("SIR-SIR", "SIR"),
            MethodPair::SirSave { .. } | MethodPair::CensoredSirSave { .. } => ("SIR-SAVE", "SAVE"),
        }
    }
}

/// How `(d, d_g)` are chosen in each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DimensionRule {
    /// Ranks of the model's true bases.
    #[default]
    Truth,
    Merc {
        d_star: usize,
    },
    Fixed {
        d: usize,
        d_g: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub model: ModelSpec,
    pub n: usize,
    /// Threshold `t` is the `quantile`% point of the latent response.
    pub quantile: f64,
    pub methods: MethodPair,
    #[serde(default)]
    pub dims: DimensionRule,
    pub reps: usize,
    pub seed: u64,
    /// Nominal censoring rate in percent, used for labelling only.
    #[serde(default)]
    pub nominal_cr: f64,
}

impl CellSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(SdrError::Config(
                "a cell needs at least one replication".into(),
            ));
        }
        if !(self.quantile > 0.0 && self.quantile < 100.0) {
            return Err(SdrError::Config(format!(
                "quantile must be in (0, 100), got {}",
                self.quantile
            )));
        }
        if self.n == 0 {
            return Err(SdrError::Config("n must be positive".into()));
        }
        self.model.validate()
    }

    /// `(n, p, CR%)` column label.
    pub fn column_label(&self) -> String {
        format!("({}, {}, {}%)", self.n, self.model.p(), self.nominal_cr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub parallelism: Parallelism,
    pub quantile_precision_n: usize,
    pub quantile_seed: u64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            parallelism: Parallelism::Auto,
            quantile_precision_n: QUANTILE_PRECISION_N,
            quantile_seed: QUANTILE_SEED,
        }
    }
}

/// Outcome of one successful replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub two_stage_distance: f64,
    pub direct_distance: f64,
    pub two_stage_gamma: Array2<f64>,
    pub direct_gamma: Array2<f64>,
    /// `(d, d_g)` used by the two-stage fit.
    pub dims: (usize, usize),
    /// `d_g` used by the direct fit.
    pub direct_d_g: usize,
    pub censoring_rate: f64,
    pub rejections: usize,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub spec: CellSpec,
    pub t: f64,
    pub true_d: usize,
    pub true_d_g: usize,
    pub two_stage: MethodSummary,
    pub direct: MethodSummary,
    pub reps: usize,
    pub failures: usize,
    pub flagged: bool,
    /// First error message per distinct kind of failure, with counts.
    pub failure_messages: BTreeMap<String, usize>,
    pub mean_censoring_rate: f64,
    pub rejections: usize,
    pub warnings: BTreeMap<String, usize>,
    /// Counts of `(d, d_g)` choices for the two-stage fit, keyed `"d/d_g"`.
    pub dimension_counts: BTreeMap<String, usize>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRecord {
    pub model: String,
    pub p: usize,
    pub percent: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub cells: Vec<CellReport>,
    pub quantiles: Vec<QuantileRecord>,
    pub flagged_cells: usize,
    pub rng: String,
    pub quantile_precision_n: usize,
    pub quantile_seed: u64,
    pub elapsed_secs: f64,
}

/// `mean` and standard error `sd / sqrt(R)` (zero for a single value).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    if r == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    (mean, (var / r as f64).sqrt())
}

/// Sample standard deviation (divisor `R - 1`).
pub fn sample_sd(values: &[f64]) -> f64 {
    let (_, se) = mean_se(values);
    se * (values.len() as f64).sqrt()
}

fn distance_to(gamma: &Array2<f64>, truth: &Subspace) -> Result<f64> {
    frobenius_span_distance(&Subspace::span_of(gamma.view())?, truth)
}

/// One replication of a cell at threshold `t`.
pub fn run_replication(cell: &CellSpec, t: f64, rep: usize) -> Result<Replication> {
    let mut rng = replication_rng(cell.seed, rep as u64);
    let generated = cell.model.generate(cell.n, &mut rng)?;
    let data = &generated.data;
    let (stage1, stage2) = cell.methods.methods(t);
    let pair = KernelPair::estimate(data, &stage1, &stage2)?;

    let truth_g = Subspace::span_of(cell.model.induced_basis(t).view())?;
    let mut warnings = Vec::new();
    let (d, d_g, direct_d_g) = match cell.dims {
        DimensionRule::Truth => {
            let d = Subspace::span_of(cell.model.central_basis().view())?.dim();
            (d, truth_g.dim(), truth_g.dim())
        }
        DimensionRule::Fixed { d, d_g } => (d, d_g, d_g),
        DimensionRule::Merc { d_star } => {
            let choice = pair.select_dimensions(d_star)?;
            warnings.extend(choice.warnings);
            (choice.d, choice.d_g, pair.select_direct_dimension(d_star)?)
        }
    };
    let two = pair.two_stage(d, d_g)?;
    let direct = pair.direct(direct_d_g)?;
    warnings.extend(two.diagnostics.warnings.iter().cloned());
    warnings.extend(
        direct
            .diagnostics
            .warnings
            .iter()
            .filter(|w| !matches!(w, Warning::EmptyStratum { .. }))
            .cloned(),
    );
    Ok(Replication {
        two_stage_distance: distance_to(&two.gamma_hat, &truth_g)?,
        direct_distance: distance_to(&direct.gamma_hat, &truth_g)?,
        two_stage_gamma: two.gamma_hat,
        direct_gamma: direct.gamma_hat,
        dims: (d, d_g),
        direct_d_g,
        censoring_rate: generated.censoring_rate(),
        rejections: generated.rejections,
        warnings,
    })
}

fn summarize(
    cell: &CellSpec,
    t: f64,
    reps: &[Result<Replication>],
    elapsed_secs: f64,
) -> Result<CellReport> {
    let ok: Vec<&Replication> = reps.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = reps.len() - ok.len();
    let mut failure_messages = BTreeMap::new();
    for e in reps.iter().filter_map(|r| r.as_ref().err()) {
        let key = match e {
            SdrError::TooFewObservations { .. } => "too few observations".to_string(),
            SdrError::GroupTooSmall { group, .. } => format!("group {group} too small"),
            other => other.to_string(),
        };
        *failure_messages.entry(key).or_insert(0) += 1;
    }
    let mut warnings = BTreeMap::new();
    let mut dimension_counts = BTreeMap::new();
    for r in &ok {
        for w in &r.warnings {
            *warnings.entry(w.kind().to_string()).or_insert(0) += 1;
        }
        *dimension_counts
            .entry(format!("{}/{}", r.dims.0, r.dims.1))
            .or_insert(0) += 1;
    }
    let two: Vec<f64> = ok.iter().map(|r| r.two_stage_distance).collect();
    let dir: Vec<f64> = ok.iter().map(|r| r.direct_distance).collect();
    let (m2, s2) = mean_se(&two);
    let (md, sd) = mean_se(&dir);
    let (l2, ld) = cell.methods.labels();
    let cr = if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().map(|r| r.censoring_rate).sum::<f64>() / ok.len() as f64
    };
    Ok(CellReport {
        spec: cell.clone(),
        t,
        true_d: Subspace::span_of(cell.model.central_basis().view())?.dim(),
        true_d_g: Subspace::span_of(cell.model.induced_basis(t).view())?.dim(),
        two_stage: MethodSummary {
            label: l2.into(),
            mean: m2,
            se: s2,
        },
        direct: MethodSummary {
            label: ld.into(),
            mean: md,
            se: sd,
        },
        reps: reps.len(),
        failures,
        flagged: failures as f64 > FAILURE_FLAG_RATE * reps.len() as f64,
        failure_messages,
        mean_censoring_rate: cr,
        rejections: ok.iter().map(|r| r.rejections).sum(),
        warnings,
        dimension_counts,
        elapsed_secs,
    })
}

/// Runs a cell at a known threshold and returns the per-replication outcomes too.
pub fn run_cell_at(
    cell: &CellSpec,
    t: f64,
    parallelism: Parallelism,
) -> Result<(CellReport, Vec<Result<Replication>>)> {
    cell.validate()?;
    let start = Instant::now();
    let reps = par::map_indexed(cell.reps, parallelism.threads(), |r| {
        run_replication(cell, t, r)
    });
    let report = summarize(cell, t, &reps, start.elapsed().as_secs_f64())?;
    Ok((report, reps))
}

/// Runs one cell, computing its threshold from a fresh quantile estimate.
pub fn run_cell(cell: &CellSpec, opts: &HarnessOptions) -> Result<CellReport> {
    let t = simgen::response_quantile(
        &cell.model,
        cell.quantile,
        opts.quantile_precision_n,
        opts.quantile_seed,
    )?;
    Ok(run_cell_at(cell, t, opts.parallelism)?.0)
}

/// Quantiles shared by all cells of a latent model (censoring ignored).
#[derive(Debug, Default)]
pub struct QuantileCache {
    entries: HashMap<String, Vec<(f64, f64)>>,
    records: Vec<QuantileRecord>,
}

impl QuantileCache {
    fn key(model: &ModelSpec) -> String {
        // Debug output of f64 round-trips, so it identifies the spec exactly
        format!("{:?}", model.with_censoring(simgen::Censoring::None))
    }

    /// Fills the cache for every `(model, percent)` in `cells` with one
    /// sample per distinct latent model.
    pub fn prepare(&mut self, cells: &[CellSpec], opts: &HarnessOptions) -> Result<()> {
        let mut wanted: Vec<(String, ModelSpec, Vec<f64>)> = Vec::new();
        for c in cells {
            let key = Self::key(&c.model);
            if self.get_by_key(&key, c.quantile).is_some() {
                continue;
            }
            match wanted.iter_mut().find(|w| w.0 == key) {
                Some(w) if !w.2.contains(&c.quantile) => w.2.push(c.quantile),
                Some(_) => {}
                None => wanted.push((key, c.model.clone(), vec![c.quantile])),
            }
        }
        let computed = par::map_indexed(wanted.len(), opts.parallelism.threads(), |i| {
            simgen::response_quantiles(
                &wanted[i].1,
                &wanted[i].2,
                opts.quantile_precision_n,
                opts.quantile_seed,
            )
        });
        for ((key, model, percents), values) in wanted.into_iter().zip(computed) {
            let values = values?;
            let entry = self.entries.entry(key).or_default();
            for (&a, &v) in percents.iter().zip(&values) {
                entry.push((a, v));
                self.records.push(QuantileRecord {
                    model: model.name().into(),
                    p: model.p(),
                    percent: a,
                    value: v,
                });
            }
        }
        Ok(())
    }

    fn get_by_key(&self, key: &str, percent: f64) -> Option<f64> {
        self.entries
            .get(key)?
            .iter()
            .find(|(a, _)| *a == percent)
            .map(|(_, v)| *v)
    }

    pub fn get(&self, model: &ModelSpec, percent: f64) -> Option<f64> {
        self.get_by_key(&Self::key(model), percent)
    }

    pub fn records(&self) -> &[QuantileRecord] {
        &self.records
    }
}

/// Runs every cell; cells run in order, replications in parallel.
pub fn run_table(cells: &[CellSpec], opts: &HarnessOptions) -> Result<SimReport> {
    let start = Instant::now();
    for c in cells {
        c.validate()?;
    }
    let mut cache = QuantileCache::default();
    cache.prepare(cells, opts)?;
    let mut reports = Vec::with_capacity(cells.len());
    for c in cells {
        let t = cache.get(&c.model, c.quantile).expect("prepared");
        reports.push(run_cell_at(c, t, opts.parallelism)?.0);
    }
    Ok(SimReport {
        flagged_cells: reports.iter().filter(|r| r.flagged).count(),
        cells: reports,
        quantiles: cache.records().to_vec(),
        rng: simgen::RNG_ID.into(),
        quantile_precision_n: opts.quantile_precision_n,
        quantile_seed: opts.quantile_seed,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Seed of cell `index` derived from a run seed.
pub fn cell_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// The four `(n, p, censored)` columns of the simulation table.
pub const GRID_COLUMNS: [(usize, usize, bool); 4] = [
    (100, 10, false),
    (100, 20, false),
    (100, 10, true),
    (50, 10, false),
];
pub const MODEL4_PERCENTS: [f64; 3] = [30.0, 50.0, 70.0];
pub const MODEL5_PERCENTS: [f64; 3] = [45.0, 65.0, 75.0];

fn grid(
    reps: usize,
    seed: u64,
    percents: [f64; 3],
    model: impl Fn(usize, bool) -> ModelSpec,
    methods: impl Fn(bool) -> MethodPair,
) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for &a in &percents {
        for &(n, p, censored) in &GRID_COLUMNS {
            let index = cells.len();
            cells.push(CellSpec {
                model: model(p, censored),
                n,
                quantile: a,
                methods: methods(censored),
                dims: DimensionRule::Truth,
                reps,
                seed: cell_seed(seed, index),
                nominal_cr: if censored { 25.0 } else { 0.0 },
            });
        }
    }
    cells
}

/// Log-normal ratio model: SIR-SIR against SIR at `t30, t50, t70`.
pub fn lognormal_ratio_grid(reps: usize, seed: u64) -> Vec<CellSpec> {
    grid(
        reps,
        seed,
        MODEL4_PERCENTS,
        |p, c| {
            ModelSpec::LognormalRatio(if c {
                LognormalRatioModel::standard_censored(p)
            } else {
                LognormalRatioModel::standard(p)
            })
        },
        |c| {
            if c {
                MethodPair::CensoredSirSir { h0: 5, h1: 10 }
            } else {
                MethodPair::SirSir { h: 10 }
            }
        },
    )
}

/// Piecewise hazard model: SIR-SAVE against SAVE at `t45, t65, t75`.
pub fn piecewise_hazard_grid(reps: usize, seed: u64) -> Vec<CellSpec> {
    grid(
        reps,
        seed,
        MODEL5_PERCENTS,
        |p, c| {
            ModelSpec::PiecewiseHazard(if c {
                PiecewiseHazardModel::standard_censored(p)
            } else {
                PiecewiseHazardModel::standard(p)
            })
        },
        |c| {
            if c {
                MethodPair::CensoredSirSave { h0: 5, h1: 10 }
            } else {
                MethodPair::SirSave { h: 10 }
            }
        },
    )
}

/// Settings of the motivating single-index example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntroSpec {
    pub model: GammaModel,
    pub n: usize,
    pub reps: usize,
    pub h: usize,
    pub quantile: f64,
    pub seed: u64,
}

impl IntroSpec {
    pub fn standard(seed: u64) -> Self {
        IntroSpec {
            model: GammaModel::standard(),
            n: 300,
            reps: DEFAULT_REPS,
            h: 10,
            quantile: 50.0,
            seed,
        }
    }
}

/// Coordinate means and spreads of directions scaled to first coordinate 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub label: String,
    pub mean: Vec<f64>,
    /// Standard deviation across replications.
    pub sd: Vec<f64>,
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntroReport {
    pub spec: IntroSpec,
    pub t: f64,
    pub full: DirectionSummary,
    pub induced: DirectionSummary,
    pub rng: String,
    pub elapsed_secs: f64,
}

/// Scales a direction so its first coordinate is 1.
pub fn normalize_first(v: &Array1<f64>) -> Array1<f64> {
    v / v[0]
}

/// Column-wise mean and standard deviation of row vectors.
pub fn coordinate_summary(rows: &[Array1<f64>]) -> (Vec<f64>, Vec<f64>) {
    let p = rows.first().map_or(0, |r| r.len());
    (0..p)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            (mean_se(&col).0, sample_sd(&col))
        })
        .unzip()
}

fn summarize_directions(label: &str, results: Vec<Result<Array1<f64>>>) -> DirectionSummary {
    let reps = results.len();
    let ok: Vec<Array1<f64>> = results.into_iter().filter_map(|r| r.ok()).collect();
    let (mean, sd) = coordinate_summary(&ok);
    DirectionSummary {
        label: label.into(),
        failures: reps - ok.len(),
        mean,
        sd,
        reps,
    }
}

/// SIR on `(Y, X)` and on `(I(Y <= t), X)` under the gamma model.
pub fn run_intro_scenario(spec: &IntroSpec, opts: &HarnessOptions) -> Result<IntroReport> {
    if spec.reps == 0 {
        return Err(SdrError::Config(
            "at least one replication is needed".into(),
        ));
    }
    let start = Instant::now();
    let model = ModelSpec::Gamma(spec.model.clone());
    let t = simgen::response_quantile(
        &model,
        spec.quantile,
        opts.quantile_precision_n,
        opts.quantile_seed,
    )?;
    let full_method = SdrMethod::sir(spec.h);
    let induced_method = SdrMethod::sir_binary(t);
    let pairs = par::map_indexed(spec.reps, opts.parallelism.threads(), |r| {
        let mut rng = replication_rng(spec.seed, r as u64);
        let fit = model
            .generate(spec.n, &mut rng)
            .and_then(|g| KernelPair::estimate(&g.data, &full_method, &induced_method));
        match fit {
            Ok(pair) => {
                let dir = |f: Result<crate::FitResult>| {
                    f.map(|f| normalize_first(&f.gamma_hat.column(0).to_owned()))
                };
                (dir(pair.direct_stage1(1)), dir(pair.direct(1)))
            }
            Err(e) => (Err(e.clone()), Err(e)),
        }
    });
    let (full, induced): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(IntroReport {
        spec: spec.clone(),
        t,
        full: summarize_directions("(Y, X)", full),
        induced: summarize_directions("(Y_g, X)", induced),
        rng: simgen::RNG_ID.into(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Default `d*` for MERC cells.
pub fn merc_rule() -> DimensionRule {
    DimensionRule::Merc {
        d_star: DEFAULT_D_STAR,
    }
}
