use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use induced_sdr::estimator::{KernelPair, DEFAULT_D_STAR};
use induced_sdr::harness::{
    self, CellReport, CellSpec, HarnessOptions, IntroReport, IntroSpec, SimReport, DEFAULT_REPS,
};
use induced_sdr::simgen::{
    self, GammaModel, LognormalRatioModel, ModelSpec, PiecewiseHazardModel, QUANTILE_PRECISION_N,
    QUANTILE_SEED,
};
use induced_sdr::{
    kaplan_meier, DataSet, FitResult, Parallelism, SdrMethod, SurvivalCurve, Warning,
};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::input::read_table;
use crate::output::{emit, join_nums, num, to_json, Format, Provenance};
use crate::{FitArgs, FitMethod, GenerateArgs, KmArgs, ModelName, Preset, SimulateArgs};

const DEFAULT_SIM_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitDims {
    Fixed { d: Option<usize>, d_g: usize },
    Merc { d_star: usize },
}

/// Resolved settings of a `fit` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub input: PathBuf,
    pub method: FitMethod,
    pub t: Option<String>,
    pub dims: FitDims,
    pub h: usize,
    pub h0: usize,
    pub h1: usize,
    pub seed: u64,
    pub standardize_columns: bool,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub provenance: Provenance,
    pub n: usize,
    pub p: usize,
    pub censored: bool,
    pub two_stage: bool,
    pub stage1_kernel: String,
    pub induced_kernel: String,
    pub threshold: Option<f64>,
    pub d: Option<usize>,
    pub d_g: usize,
    pub variables: Vec<String>,
    /// Columns of `Γ̂_g`, one per direction, in the order of `variables`.
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub stage1_eigenvalues: Option<Vec<f64>>,
    pub induced_eigenvalues: Vec<f64>,
    pub stage1_slice_counts: Option<Vec<usize>>,
    pub induced_slice_counts: Option<Vec<usize>>,
    pub warnings: Vec<Warning>,
}

/// A number, or `q:<percent>` for the Kaplan-Meier quantile of `y`.
pub fn resolve_threshold(spec: &str, data: &DataSet) -> CliResult<f64> {
    if let Some(rest) = spec.strip_prefix("q:") {
        let pct: f64 = rest
            .parse()
            .map_err(|_| CliError::Usage(format!("bad quantile in --t {spec:?}")))?;
        if !(pct > 0.0 && pct < 100.0) {
            return Err(CliError::Usage(format!(
                "--t quantile must be in (0, 100), got {pct}"
            )));
        }
        let events = data
            .status()
            .map(|s| s.to_vec())
            .unwrap_or_else(|| vec![true; data.n()]);
        let curve = kaplan_meier(data.y().as_slice().expect("contiguous"), &events)?;
        curve.quantile(pct / 100.0).ok_or_else(|| {
            CliError::Usage(format!(
                "the Kaplan-Meier curve of y never reaches {pct}%; choose a smaller quantile"
            ))
        })
    } else {
        spec.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                CliError::Usage(format!("--t must be a number or q:<percent>, got {spec:?}"))
            })
    }
}

fn kernel_label(m: &SdrMethod) -> String {
    serde_json::to_value(m.kernel)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(String::from))
        .unwrap_or_else(|| format!("{:?}", m.kernel))
}

/// Flips each column so its largest-magnitude entry is positive.
fn sign_fixed(gamma: &Array2<f64>) -> Vec<Vec<f64>> {
    gamma
        .columns()
        .into_iter()
        .map(|c| {
            let pivot = c
                .iter()
                .copied()
                .fold(0.0_f64, |a, v| if v.abs() > a.abs() { v } else { a });
            let s = if pivot < 0.0 { -1.0 } else { 1.0 };
            c.iter().map(|v| s * v).collect()
        })
        .collect()
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    if args.dstar.is_some() && !args.merc {
        return Err(CliError::Usage("--dstar only applies with --merc".into()));
    }
    let dims = match (args.merc, args.d, args.dg) {
        (true, _, _) => FitDims::Merc {
            d_star: args.dstar.unwrap_or(DEFAULT_D_STAR),
        },
        (false, d, Some(d_g)) => FitDims::Fixed { d, d_g },
        (false, Some(d), None) if matches!(args.method, FitMethod::Sir | FitMethod::Save) => {
            FitDims::Fixed { d: None, d_g: d }
        }
        _ => {
            return Err(CliError::Usage(
                "give --d and --dg (or --dg alone for a direct method), or --merc".into(),
            ))
        }
    };
    let two_stage = matches!(args.method, FitMethod::SirSir | FitMethod::SirSave);
    if let FitDims::Fixed { d: None, .. } = dims {
        if two_stage {
            return Err(CliError::Usage(
                "two-stage methods need --d as well as --dg".into(),
            ));
        }
    }
    if args.t.is_none() && args.method != FitMethod::Sir {
        return Err(CliError::Usage(format!(
            "--t is required for method {}",
            serde_json::to_value(args.method).unwrap()
        )));
    }
    let config = FitConfig {
        input: args.input.clone(),
        method: args.method,
        t: args.t.clone(),
        dims: dims.clone(),
        h: args.h,
        h0: args.h0,
        h1: args.h1,
        seed: args.seed,
        standardize_columns: args.standardize_columns,
        format: args.format,
    };

    let mut table = read_table(&args.input)?;
    if args.standardize_columns {
        table.standardize_columns()?;
    }
    let data = table.into_dataset()?;
    let censored = data.is_censored();
    let threshold = match &args.t {
        Some(spec) => Some(resolve_threshold(spec, &data)?),
        None => None,
    };

    let full = if censored {
        SdrMethod::sir_double_slice(args.h0, args.h1)
    } else {
        SdrMethod::sir(args.h)
    };
    let induced = match (args.method, threshold) {
        (FitMethod::SirSir | FitMethod::Sir, Some(t)) if censored => {
            SdrMethod::sir_binary_censored(t)
        }
        (FitMethod::SirSir | FitMethod::Sir, Some(t)) => SdrMethod::sir_binary(t),
        (FitMethod::SirSave | FitMethod::Save, Some(t)) if censored => {
            SdrMethod::save_binary_censored(t)
        }
        (FitMethod::SirSave | FitMethod::Save, Some(t)) => SdrMethod::save_binary(t),
        (_, None) => full.clone(),
    };
    let stage1 = if two_stage { full } else { induced.clone() };
    let pair = KernelPair::estimate(&data, &stage1, &induced)?;

    let (d, d_g, mut warnings) = match (&dims, two_stage) {
        (FitDims::Fixed { d, d_g }, _) => (*d, *d_g, Vec::new()),
        (FitDims::Merc { d_star }, true) => {
            let choice = pair.select_dimensions(*d_star)?;
            (Some(choice.d), choice.d_g, choice.warnings)
        }
        (FitDims::Merc { d_star }, false) => {
            (None, pair.select_direct_dimension(*d_star)?, Vec::new())
        }
    };
    let result: FitResult = match d {
        Some(d) if two_stage => pair.two_stage(d, d_g)?,
        _ => pair.direct(d_g)?,
    };
    warnings.extend(result.diagnostics.warnings.iter().cloned());

    let report = FitReport {
        provenance: Provenance::new("fit", args.seed, &config),
        n: data.n(),
        p: data.p(),
        censored,
        two_stage,
        stage1_kernel: kernel_label(&stage1),
        induced_kernel: kernel_label(&induced),
        threshold,
        d: if two_stage { d } else { None },
        d_g,
        variables: data.names().to_vec(),
        directions: sign_fixed(&result.gamma_hat),
        eigenvalues: result.eigenvalues.clone(),
        stage1_eigenvalues: result.diagnostics.stage1_eigenvalues.clone(),
        induced_eigenvalues: result.diagnostics.induced_eigenvalues.clone(),
        stage1_slice_counts: result.diagnostics.stage1_slice_counts.clone(),
        induced_slice_counts: result.diagnostics.induced_slice_counts.clone(),
        warnings,
    };
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Tsv => fit_tsv(&report),
    };
    emit(
        &text,
        args.output.as_deref(),
        &format!("fit.{}", args.format.extension()),
    )
}

fn counts(v: &[usize]) -> String {
    v.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("\t")
}

fn fit_tsv(r: &FitReport) -> String {
    let mut s = r.provenance.tsv_header();
    let _ = writeln!(
        s,
        "# n: {}  p: {}  censored: {}  kernels: {} / {}",
        r.n, r.p, r.censored, r.stage1_kernel, r.induced_kernel
    );
    let t = r.threshold.map_or("none".to_string(), |t| t.to_string());
    let d = r.d.map_or("-".to_string(), |d| d.to_string());
    let _ = writeln!(s, "# t: {t}  d: {d}  d_g: {}", r.d_g);
    let heads: Vec<String> = (1..=r.directions.len())
        .map(|k| format!("dir{k}"))
        .collect();
    let _ = writeln!(s, "variable\t{}", heads.join("\t"));
    for (i, name) in r.variables.iter().enumerate() {
        let row: Vec<f64> = r.directions.iter().map(|c| c[i]).collect();
        let _ = writeln!(s, "{name}\t{}", join_nums(&row));
    }
    s.push('\n');
    let _ = writeln!(s, "eigenvalues\t{}", join_nums(&r.eigenvalues));
    if let Some(e) = &r.stage1_eigenvalues {
        let _ = writeln!(s, "stage1_eigenvalues\t{}", join_nums(e));
    }
    let _ = writeln!(
        s,
        "induced_eigenvalues\t{}",
        join_nums(&r.induced_eigenvalues)
    );
    if let Some(c) = &r.stage1_slice_counts {
        let _ = writeln!(s, "stage1_slice_counts\t{}", counts(c));
    }
    if let Some(c) = &r.induced_slice_counts {
        let _ = writeln!(s, "induced_slice_counts\t{}", counts(c));
    }
    for w in &r.warnings {
        let _ = writeln!(
            s,
            "warning\t{}\t{}",
            w.kind(),
            serde_json::to_string(w).unwrap()
        );
    }
    s
}

/// Everything `simulate` needs to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub preset: Preset,
    /// Base seed the cell seeds were derived from.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub intro: Option<IntroSpec>,
    #[serde(default = "default_precision")]
    pub quantile_precision_n: usize,
    #[serde(default = "default_quantile_seed")]
    pub quantile_seed: u64,
}

fn default_precision() -> usize {
    QUANTILE_PRECISION_N
}

fn default_quantile_seed() -> u64 {
    QUANTILE_SEED
}

impl SimulateConfig {
    pub fn preset(preset: Preset, reps: usize, seed: u64) -> Self {
        let (cells, intro) = match preset {
            Preset::Table1Model4 => (harness::lognormal_ratio_grid(reps, seed), None),
            Preset::Table1Model5 => (harness::piecewise_hazard_grid(reps, seed), None),
            Preset::IntroGamma => (
                Vec::new(),
                Some(IntroSpec {
                    reps,
                    ..IntroSpec::standard(seed)
                }),
            ),
            Preset::Custom => (Vec::new(), None),
        };
        SimulateConfig {
            preset,
            seed,
            cells,
            intro,
            quantile_precision_n: QUANTILE_PRECISION_N,
            quantile_seed: QUANTILE_SEED,
        }
    }

    /// Parses a config file, or the `provenance.config` block of a report.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(inner) = value
            .get_mut("provenance")
            .and_then(|p| p.get_mut("config"))
        {
            value = inner.take();
        }
        let config: SimulateConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        if config.cells.is_empty() && config.intro.is_none() {
            return Err(CliError::Config(
                "config has neither cells nor intro".into(),
            ));
        }
        Ok(config)
    }

    fn override_reps(&mut self, reps: usize) {
        for c in &mut self.cells {
            c.reps = reps;
        }
        if let Some(i) = &mut self.intro {
            i.reps = reps;
        }
    }

    fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        for (k, c) in self.cells.iter_mut().enumerate() {
            c.seed = harness::cell_seed(seed, k);
        }
        if let Some(i) = &mut self.intro {
            i.seed = seed;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub provenance: Provenance,
    pub table: Option<SimReport>,
    pub intro: Option<IntroReport>,
}

fn read_config(path: &Path) -> CliResult<SimulateConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    SimulateConfig::from_json(&text)
}

pub fn resolve_simulate(args: &SimulateArgs) -> CliResult<SimulateConfig> {
    let mut config = match (args.preset, &args.config) {
        (None | Some(Preset::Custom), Some(path)) => read_config(path)?,
        (Some(Preset::Custom), None) => {
            return Err(CliError::Usage(
                "--preset custom needs --config <FILE>".into(),
            ))
        }
        (Some(p), None) => SimulateConfig::preset(
            p,
            args.reps.unwrap_or(DEFAULT_REPS),
            args.seed.unwrap_or(DEFAULT_SIM_SEED),
        ),
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--config only goes with --preset custom".into(),
            ))
        }
        (None, None) => return Err(CliError::Usage("give --preset or --config".into())),
    };
    if let Some(r) = args.reps {
        if r == 0 {
            return Err(CliError::Usage("--reps must be positive".into()));
        }
        config.override_reps(r);
    }
    if let Some(s) = args.seed {
        config.override_seed(s);
    }
    if let Some(q) = args.quantile_draws {
        if q == 0 {
            return Err(CliError::Usage("--quantile-draws must be positive".into()));
        }
        config.quantile_precision_n = q;
    }
    Ok(config)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let config = resolve_simulate(args)?;
    let parallelism = match args.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be positive".into())),
        Some(1) => Parallelism::Serial,
        Some(k) => Parallelism::Threads(k),
        None => Parallelism::Auto,
    };
    let opts = HarnessOptions {
        parallelism,
        quantile_precision_n: config.quantile_precision_n,
        quantile_seed: config.quantile_seed,
    };
    let table = if config.cells.is_empty() {
        None
    } else {
        Some(harness::run_table(&config.cells, &opts)?)
    };
    let intro = match &config.intro {
        Some(spec) => Some(harness::run_intro_scenario(spec, &opts)?),
        None => None,
    };
    let report = SimulateReport {
        provenance: Provenance::new("simulate", config.seed, &config),
        table,
        intro,
    };
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Tsv => simulate_tsv(&report),
    };
    let name = serde_json::to_value(config.preset).unwrap();
    let name = format!(
        "simulate-{}.{}",
        name.as_str().unwrap_or("custom"),
        args.format.extension()
    );
    emit(&text, args.output.as_deref(), &name)
}

type RowKey = (String, String, String, String);

/// Lays cells out as rows `(model, a%, method pair)` by `(n, p, CR%)` columns.
struct Grid<'a> {
    rows: Vec<RowKey>,
    cols: Vec<String>,
    cells: BTreeMap<(usize, usize), &'a CellReport>,
}

impl<'a> Grid<'a> {
    fn new(cells: &'a [CellReport]) -> Self {
        let mut rows: Vec<RowKey> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        let mut map = BTreeMap::new();
        for c in cells {
            let (two, direct) = c.spec.methods.labels();
            let key = (
                c.spec.model.name().to_string(),
                format!("{}", c.spec.quantile),
                two.to_string(),
                direct.to_string(),
            );
            let col = c.spec.column_label();
            let i = rows.iter().position(|r| *r == key).unwrap_or_else(|| {
                rows.push(key.clone());
                rows.len() - 1
            });
            let j = cols.iter().position(|x| *x == col).unwrap_or_else(|| {
                cols.push(col.clone());
                cols.len() - 1
            });
            map.insert((i, j), c);
        }
        Grid {
            rows,
            cols,
            cells: map,
        }
    }

    fn header(&self, s: &mut String) {
        let _ = writeln!(s, "model\ta%\tmethod\t{}", self.cols.join("\t"));
    }

    fn line(&self, s: &mut String, i: usize, label: &str, f: impl Fn(&CellReport) -> String) {
        let (model, a, ..) = &self.rows[i];
        let vals: Vec<String> = (0..self.cols.len())
            .map(|j| self.cells.get(&(i, j)).map_or("NA".to_string(), |c| f(c)))
            .collect();
        let _ = writeln!(s, "{model}\t{a}\t{label}\t{}", vals.join("\t"));
    }

    fn block(
        &self,
        s: &mut String,
        title: &str,
        two: impl Fn(&CellReport) -> String,
        direct: impl Fn(&CellReport) -> String,
    ) {
        let _ = writeln!(s, "# {title}");
        self.header(s);
        for i in 0..self.rows.len() {
            let (_, _, two_label, direct_label) = self.rows[i].clone();
            self.line(s, i, &two_label, &two);
            self.line(s, i, &direct_label, &direct);
        }
    }

    fn per_cell(&self, s: &mut String, title: &str, f: impl Fn(&CellReport) -> String) {
        let _ = writeln!(s, "# {title}");
        self.header(s);
        for i in 0..self.rows.len() {
            self.line(s, i, "-", &f);
        }
    }
}

fn table_tsv(s: &mut String, t: &SimReport) {
    let grid = Grid::new(&t.cells);
    grid.block(
        s,
        "mean distance",
        |c| num(c.two_stage.mean),
        |c| num(c.direct.mean),
    );
    s.push('\n');
    grid.block(
        s,
        "standard error",
        |c| num(c.two_stage.se),
        |c| num(c.direct.se),
    );
    s.push('\n');
    grid.per_cell(s, "threshold t", |c| num(c.t));
    s.push('\n');
    grid.per_cell(s, "failed replications / reps", |c| {
        format!("{}/{}", c.failures, c.reps)
    });
    s.push('\n');
    grid.per_cell(s, "observed censoring rate", |c| num(c.mean_censoring_rate));
    let _ = writeln!(s, "# flagged cells: {}", t.flagged_cells);
}

fn intro_tsv(s: &mut String, r: &IntroReport) {
    let _ = writeln!(s, "# t: {}", r.t);
    let p = r.full.mean.len();
    let heads: Vec<String> = (1..=p).map(|k| format!("x{k}")).collect();
    let _ = writeln!(s, "response\tstatistic\t{}", heads.join("\t"));
    for d in [&r.full, &r.induced] {
        let _ = writeln!(s, "{}\tmean\t{}", d.label, join_nums(&d.mean));
        let _ = writeln!(s, "{}\tsd\t{}", d.label, join_nums(&d.sd));
        let _ = writeln!(s, "{}\tfailures\t{}/{}", d.label, d.failures, d.reps);
    }
}

fn simulate_tsv(r: &SimulateReport) -> String {
    let mut s = r.provenance.tsv_header();
    if let Some(t) = &r.table {
        table_tsv(&mut s, t);
    }
    if let Some(i) = &r.intro {
        if r.table.is_some() {
            s.push('\n');
        }
        intro_tsv(&mut s, i);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmReport {
    pub provenance: Provenance,
    pub n: usize,
    pub events: usize,
    pub curve: SurvivalCurve,
}

pub fn km(args: &KmArgs) -> CliResult<()> {
    let table = read_table(&args.input)?;
    let events = table
        .status
        .clone()
        .unwrap_or_else(|| vec![true; table.n()]);
    let curve = kaplan_meier(&table.y, &events)?;
    let config = serde_json::json!({ "input": args.input, "format": args.format });
    let report = KmReport {
        provenance: Provenance::new("km", 0, &config),
        n: table.n(),
        events: events.iter().filter(|&&e| e).count(),
        curve,
    };
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Tsv => {
            let mut s = report.provenance.tsv_header();
            let _ = writeln!(s, "# n: {}  events: {}", report.n, report.events);
            s.push_str("time\tsurvival\n");
            for (t, v) in report.curve.jump_times.iter().zip(&report.curve.values) {
                let _ = writeln!(s, "{t}\t{v}");
            }
            s
        }
    };
    emit(
        &text,
        args.output.as_deref(),
        &format!("km.{}", args.format.extension()),
    )
}

pub fn generate_spec(model: ModelName, p: Option<usize>, censored: bool) -> CliResult<ModelSpec> {
    let p_or = |default: usize| -> CliResult<usize> {
        let p = p.unwrap_or(default);
        if p < 3 {
            return Err(CliError::Usage(format!(
                "this model needs --p >= 3, got {p}"
            )));
        }
        Ok(p)
    };
    Ok(match model {
        ModelName::Gamma => {
            if p.is_some_and(|p| p != 3) {
                return Err(CliError::Usage(
                    "the gamma model has exactly 3 covariates".into(),
                ));
            }
            if censored {
                return Err(CliError::Usage(
                    "the gamma model has no censoring law".into(),
                ));
            }
            ModelSpec::Gamma(GammaModel::standard())
        }
        ModelName::LognormalRatio => {
            let p = p_or(10)?;
            ModelSpec::LognormalRatio(if censored {
                LognormalRatioModel::standard_censored(p)
            } else {
                LognormalRatioModel::standard(p)
            })
        }
        ModelName::PiecewiseHazard => {
            let p = p_or(10)?;
            ModelSpec::PiecewiseHazard(if censored {
                PiecewiseHazardModel::standard_censored(p)
            } else {
                PiecewiseHazardModel::standard(p)
            })
        }
    })
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    let spec = generate_spec(args.model, args.p, args.censored)?;
    let mut rng = simgen::replication_rng(args.seed, 0);
    let g = spec.generate(args.n, &mut rng)?;
    let data = &g.data;
    let mut s = String::new();
    let mut head: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    head.push("y".into());
    if data.is_censored() {
        head.push("status".into());
    }
    let _ = writeln!(s, "{}", head.join(","));
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x().row(i).iter().map(|v| v.to_string()).collect();
        row.push(data.y()[i].to_string());
        if let Some(st) = data.status() {
            row.push(if st[i] { "1" } else { "0" }.into());
        }
        let _ = writeln!(s, "{}", row.join(","));
    }
    emit(&s, args.output.as_deref(), "generated.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn numeric_and_quantile_thresholds() {
        let x = Array2::from_shape_fn((4, 1), |(i, _)| i as f64);
        let data = DataSet::new(x, Array1::from(vec![4.0, 1.0, 3.0, 2.0]), None).unwrap();
        assert_eq!(resolve_threshold("2.5", &data).unwrap(), 2.5);
        assert_eq!(resolve_threshold("q:50", &data).unwrap(), 2.0);
        assert_eq!(resolve_threshold("q:75", &data).unwrap(), 3.0);
        assert!(matches!(
            resolve_threshold("q:0", &data),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            resolve_threshold("abc", &data),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn sign_fix_makes_the_dominant_entry_positive() {
        let g = array![[0.5, 1.0], [-2.0, 0.1]];
        assert_eq!(sign_fixed(&g), vec![vec![-0.5, 2.0], vec![1.0, 0.1]]);
    }

    #[test]
    fn config_round_trips_through_a_report() {
        let config = SimulateConfig::preset(Preset::Table1Model4, 3, 9);
        let wrapped = serde_json::json!({ "provenance": { "config": config } });
        let back = SimulateConfig::from_json(&wrapped.to_string()).unwrap();
        assert_eq!(back, config);
        assert_eq!(back.cells.len(), 12);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = SimulateConfig::from_json(r#"{"preset":"custom","cells":[],"bogus":1}"#);
        assert!(matches!(err, Err(CliError::Config(_))));
    }
}
