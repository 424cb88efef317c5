//! Experiment drivers: the resolution sweep of MSE, the ROI metric table on the
//! phantom slice, and the convergence sequences of each operator family.
//!
//! Every driver returns plain data plus a [`TableResult`] view that echoes the
//! resolved configuration, so an emitted CSV or JSON file is self-describing.
//! Nothing here is randomized and parallel cells are collected in a fixed
//! order, so repeated runs are byte-identical.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{LambdaSpec, OperatorConfig, SkForm};
use crate::error::{Error, Result};
use crate::io::{save_pgm, GrayRange};
use crate::kernels::{stencil_half_width, Kernel};
use crate::metrics::{mse, report, report_windows, Extended, MetricsReport};
use crate::operators::{
    bilateral_filter, gaussian_filter, sk_cell_average, BilateralParams, BoundaryPolicy,
    EvalPoints, SkSource,
};
use crate::phantom::{phantom_volume, roi_catalog, PhantomVolumeConfig};
use crate::volume::{
    extract_roi, lp_distance, mid_slice, sample_function, AnalyticFn, GridKind, Norm, Roi, Volume,
};
use crate::wavelet::{jackson_decay_check, max_levels, ThresholdMode, WaveletFamily};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(Extended),
    /// A value that could not be computed; the message goes to the notes.
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => csv_escape(s),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => x.to_string(),
            Cell::Missing => "error".to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Num(x) => serde_json::to_value(x).expect("number serializes"),
            Cell::Missing => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(x.as_f64()),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(Extended::Finite(x))
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A rendered experiment: header, rows, the full configuration echo and any
/// per-row error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct TableResult {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Value,
    pub notes: Vec<String>,
}

impl TableResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// CSV with `#` comment lines carrying the experiment name, the config
    /// echo and the error notes.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# experiment: {}\n", self.experiment);
        out.push_str(&format!("# config: {}\n", self.provenance));
        for n in &self.notes {
            out.push_str(&format!("# error: {n}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let m: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "experiment": self.experiment,
            "provenance": self.provenance,
            "columns": self.columns,
            "rows": rows,
            "errors": self.notes,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    /// Writes JSON when the path ends in `.json`, CSV otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => self.to_json(),
            _ => self.to_csv(),
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn config_value(cfg: &OperatorConfig) -> Value {
    serde_json::to_value(cfg).expect("operator config serializes")
}

// ---------------------------------------------------------------------------
// MSE across resolutions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTableConfig {
    pub resolutions: Vec<usize>,
    /// Column label and operator, in column order.
    pub operators: Vec<(String, OperatorConfig)>,
}

impl Default for MseTableConfig {
    fn default() -> Self {
        MseTableConfig {
            resolutions: vec![16, 32, 64],
            operators: vec![
                (
                    "gaussian".into(),
                    OperatorConfig::Gaussian {
                        sigma: 1.0,
                        boundary: BoundaryPolicy::Reflect,
                    },
                ),
                (
                    "bilateral".into(),
                    OperatorConfig::Bilateral {
                        sigma_spatial: 1.0,
                        sigma_range: 0.1,
                        boundary: BoundaryPolicy::Reflect,
                    },
                ),
                (
                    "wavelet".into(),
                    OperatorConfig::Wavelet {
                        family: WaveletFamily::Haar,
                        levels: 2,
                        mode: ThresholdMode::Hard,
                        lambda: LambdaSpec::Universal,
                        lambda_value: None,
                    },
                ),
                (
                    "kantorovich".into(),
                    OperatorConfig::Kantorovich {
                        n: None,
                        kernel: Kernel::CubicBSpline,
                        form: SkForm::Point,
                    },
                ),
            ],
        }
    }
}

impl MseTableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::Config("at least one resolution is required".into()));
        }
        if self.operators.is_empty() {
            return Err(Error::Config("at least one operator is required".into()));
        }
        for (label, op) in &self.operators {
            op.validate()?;
            for &n in &self.resolutions {
                if n < 2 {
                    return Err(Error::Config(format!("resolution {n} is below 2")));
                }
                if let OperatorConfig::Wavelet { levels, .. } = op {
                    if n % (1usize << levels) != 0 {
                        return Err(Error::Config(format!(
                            "resolution {n} is not divisible by 2^{levels} required by '{label}'"
                        )));
                    }
                }
                if let OperatorConfig::Kantorovich { n: Some(k), .. } = op {
                    return Err(Error::Config(format!(
                        "'{label}' fixes n = {k}; leave n out so it follows each resolution"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// MSE of each operator against the sampled test function, per resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct MseTable {
    pub config: MseTableConfig,
    pub labels: Vec<String>,
    /// `mse[r][o]` for resolution `r` and operator `o`.
    pub mse: Vec<Vec<f64>>,
    /// Configs with derived values (threshold, Kantorovich n) filled in.
    pub resolved: Vec<Vec<OperatorConfig>>,
}

/// Samples `sin(pi x) sin(pi y) sin(pi z)` on an `N^3` node grid for each
/// resolution, applies every operator, and records the MSE to the samples.
pub fn run_mse_table(cfg: &MseTableConfig) -> Result<MseTable> {
    cfg.validate()?;
    let f = AnalyticFn::sine_product(3)?;
    let inputs: Vec<Volume> = cfg
        .resolutions
        .iter()
        .map(|&n| sample_function(&f, &[n, n, n], GridKind::NodeCentered))
        .collect::<Result<_>>()?;
    let n_ops = cfg.operators.len();
    let cells: Vec<(f64, OperatorConfig)> = (0..inputs.len() * n_ops)
        .into_par_iter()
        .map(|c| {
            let input = &inputs[c / n_ops];
            let (out, resolved) = cfg.operators[c % n_ops].1.apply(input)?;
            Ok((mse(input, &out)?, resolved))
        })
        .collect::<Result<_>>()?;
    let mut mse_rows = Vec::new();
    let mut resolved = Vec::new();
    for chunk in cells.chunks(n_ops) {
        mse_rows.push(chunk.iter().map(|c| c.0).collect());
        resolved.push(chunk.iter().map(|c| c.1.clone()).collect());
    }
    Ok(MseTable {
        config: cfg.clone(),
        labels: cfg.operators.iter().map(|o| o.0.clone()).collect(),
        mse: mse_rows,
        resolved,
    })
}

impl MseTable {
    /// MSE column of one operator, in resolution order.
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.mse.iter().map(|r| r[j]).collect())
    }

    pub fn table(&self) -> TableResult {
        let mut columns = vec!["resolution".to_string()];
        columns.extend(self.labels.iter().cloned());
        let rows = self
            .config
            .resolutions
            .iter()
            .zip(&self.mse)
            .map(|(&n, row)| {
                let mut cells = vec![Cell::Int(n as i64)];
                cells.extend(row.iter().map(|&x| num(x)));
                cells
            })
            .collect();
        let resolved: Vec<Value> = self
            .config
            .resolutions
            .iter()
            .zip(&self.resolved)
            .map(|(&n, ops)| {
                let m: Map<String, Value> = self
                    .labels
                    .iter()
                    .cloned()
                    .zip(ops.iter().map(config_value))
                    .collect();
                json!({ "resolution": n, "operators": m })
            })
            .collect();
        TableResult {
            experiment: "mse_table".into(),
            columns,
            rows,
            provenance: json!({
                "function": "sin(pi x) sin(pi y) sin(pi z)",
                "grid": GridKind::NodeCentered.as_str(),
                "resolutions": self.config.resolutions,
                "resolved": resolved,
            }),
            notes: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// ROI metric table

/// What the "kantorovich" rows of the ROI table run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KantorovichMode {
    /// Three passes of a sigma = 1 Gaussian blur.
    #[default]
    Surrogate,
    /// The cell-average operator with a cubic B-spline kernel.
    TrueOperator,
}

impl FromStr for KantorovichMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surrogate" => Ok(KantorovichMode::Surrogate),
            "true-operator" => Ok(KantorovichMode::TrueOperator),
            _ => Err(Error::Config(format!(
                "unknown kantorovich mode '{s}' (expected surrogate or true-operator)"
            ))),
        }
    }
}

/// Whether operators see the whole slice or only the ROI crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterScope {
    #[default]
    Slice,
    Roi,
}

impl FromStr for FilterScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slice" => Ok(FilterScope::Slice),
            "roi" => Ok(FilterScope::Roi),
            _ => Err(Error::Config(format!(
                "unknown filter scope '{s}' (expected slice or roi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiTableConfig {
    pub phantom: PhantomVolumeConfig,
    pub slice_index: usize,
    pub peak: f64,
    pub kantorovich: KantorovichMode,
    pub filter_scope: FilterScope,
    pub with_identity: bool,
    pub gaussian: OperatorConfig,
    pub surrogate: OperatorConfig,
    pub true_operator: OperatorConfig,
    pub bilateral: OperatorConfig,
    pub wavelet: OperatorConfig,
    pub rois: Vec<Roi>,
}

impl Default for RoiTableConfig {
    fn default() -> Self {
        RoiTableConfig {
            phantom: PhantomVolumeConfig::default(),
            slice_index: 32,
            peak: 1.0,
            kantorovich: KantorovichMode::Surrogate,
            filter_scope: FilterScope::Slice,
            with_identity: false,
            gaussian: OperatorConfig::Gaussian {
                sigma: 1.0,
                boundary: BoundaryPolicy::Reflect,
            },
            surrogate: OperatorConfig::IteratedGaussian {
                sigma: 1.0,
                iterations: 3,
                boundary: BoundaryPolicy::Reflect,
            },
            true_operator: OperatorConfig::Kantorovich {
                n: None,
                kernel: Kernel::CubicBSpline,
                form: SkForm::Cell,
            },
            bilateral: OperatorConfig::Bilateral {
                sigma_spatial: 1.0,
                sigma_range: 0.05,
                boundary: BoundaryPolicy::Reflect,
            },
            wavelet: OperatorConfig::Wavelet {
                family: WaveletFamily::Haar,
                levels: 2,
                mode: ThresholdMode::Hard,
                lambda: LambdaSpec::Universal,
                lambda_value: None,
            },
            rois: roi_catalog(),
        }
    }
}

impl RoiTableConfig {
    /// Row labels and operators, in table order.
    pub fn operators(&self) -> Vec<(&'static str, OperatorConfig)> {
        let kantorovich = match self.kantorovich {
            KantorovichMode::Surrogate => self.surrogate.clone(),
            KantorovichMode::TrueOperator => self.true_operator.clone(),
        };
        let mut ops = vec![
            ("gaussian", self.gaussian.clone()),
            ("kantorovich", kantorovich),
            ("bilateral", self.bilateral.clone()),
            ("wavelet", self.wavelet.clone()),
        ];
        if self.with_identity {
            ops.push(("identity", OperatorConfig::Identity));
        }
        ops
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak > 0.0 && self.peak.is_finite()) {
            return Err(Error::Config(format!(
                "peak must be positive, got {}",
                self.peak
            )));
        }
        if self.rois.is_empty() {
            return Err(Error::Config("no ROIs configured".into()));
        }
        for (_, op) in self.operators() {
            op.validate()?;
        }
        Ok(())
    }
}

/// One (ROI, operator) entry; failures are kept as messages.
#[derive(Debug, Clone)]
pub struct RoiRow {
    pub roi: String,
    pub operator: String,
    pub outcome: std::result::Result<MetricsReport, String>,
}

#[derive(Debug, Clone)]
pub struct RoiTable {
    pub config: RoiTableConfig,
    /// ROI-major: all operators for the first ROI, then the next ROI.
    pub rows: Vec<RoiRow>,
}

/// A wavelet config whose depth fits a crop of the given shape.
fn fit_levels(op: &OperatorConfig, dims: &[usize]) -> OperatorConfig {
    match op {
        OperatorConfig::Wavelet {
            family,
            levels,
            mode,
            lambda,
            lambda_value,
        } => OperatorConfig::Wavelet {
            family: *family,
            levels: max_levels(dims, *levels).max(1),
            mode: *mode,
            lambda: *lambda,
            lambda_value: *lambda_value,
        },
        other => other.clone(),
    }
}

/// Builds the phantom, takes the configured slice, filters it with each
/// operator and reports the metrics of every ROI.
pub fn run_roi_table(cfg: &RoiTableConfig) -> Result<RoiTable> {
    cfg.validate()?;
    let volume = phantom_volume(&cfg.phantom)?;
    let slice = mid_slice(&volume, cfg.slice_index)?;
    let ops = cfg.operators();

    let rows = match cfg.filter_scope {
        FilterScope::Slice => {
            let filtered: Vec<Result<(Volume, OperatorConfig)>> =
                ops.par_iter().map(|(_, op)| op.apply(&slice)).collect();
            let mut rows = Vec::new();
            for roi in &cfg.rois {
                for ((label, _), out) in ops.iter().zip(&filtered) {
                    let outcome = match out {
                        Ok((g, resolved)) => {
                            report(&slice, g, roi, cfg.peak, label, &resolved.to_json())
                                .map_err(|e| e.to_string())
                        }
                        Err(e) => Err(e.to_string()),
                    };
                    rows.push(RoiRow {
                        roi: roi.name.clone(),
                        operator: label.to_string(),
                        outcome,
                    });
                }
            }
            rows
        }
        FilterScope::Roi => {
            let cells: Vec<(usize, usize)> = (0..cfg.rois.len())
                .flat_map(|r| (0..ops.len()).map(move |o| (r, o)))
                .collect();
            cells
                .par_iter()
                .map(|&(r, o)| {
                    let roi = &cfg.rois[r];
                    let (label, op) = &ops[o];
                    let outcome = (|| {
                        let crop = extract_roi(&slice, roi)?;
                        let (g, resolved) = fit_levels(op, crop.dims()).apply(&crop)?;
                        report_windows(&crop, &g, &roi.name, cfg.peak, label, &resolved.to_json())
                    })()
                    .map_err(|e| e.to_string());
                    RoiRow {
                        roi: roi.name.clone(),
                        operator: label.to_string(),
                        outcome,
                    }
                })
                .collect()
        }
    };
    Ok(RoiTable {
        config: cfg.clone(),
        rows,
    })
}

impl RoiTable {
    pub fn get(&self, roi: &str, operator: &str) -> Option<&RoiRow> {
        self.rows
            .iter()
            .find(|r| r.roi == roi && r.operator == operator)
    }

    pub fn reports(&self) -> impl Iterator<Item = &MetricsReport> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn table(&self) -> TableResult {
        let columns = ["roi", "operator", "si", "ssi", "smpi", "enl", "mse", "psnr"]
            .map(String::from)
            .to_vec();
        let mut notes = Vec::new();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut cells = vec![
                    Cell::Text(row.roi.clone()),
                    Cell::Text(row.operator.clone()),
                ];
                match &row.outcome {
                    Ok(r) => cells.extend([
                        num(r.si),
                        num(r.ssi),
                        num(r.smpi),
                        Cell::Num(r.enl),
                        num(r.mse),
                        Cell::Num(r.psnr),
                    ]),
                    Err(msg) => {
                        notes.push(format!("{} / {}: {msg}", row.roi, row.operator));
                        cells.extend(std::iter::repeat(Cell::Missing).take(6));
                    }
                }
                cells
            })
            .collect();
        // The operator echo is per operator, not per row: the same resolved
        // config applies to every ROI in slice scope.
        let mut operators = Map::new();
        for row in &self.rows {
            if let Ok(r) = &row.outcome {
                let key = match self.config.filter_scope {
                    FilterScope::Slice => row.operator.clone(),
                    FilterScope::Roi => format!("{} / {}", row.roi, row.operator),
                };
                operators.entry(key).or_insert_with(|| {
                    serde_json::from_str(&r.operator_config).unwrap_or(Value::Null)
                });
            }
        }
        let c = &self.config;
        TableResult {
            experiment: "roi_table".into(),
            columns,
            rows,
            provenance: json!({
                "phantom": c.phantom,
                "slice_index": c.slice_index,
                "peak": c.peak,
                "kantorovich": c.kantorovich,
                "filter_scope": c.filter_scope,
                "with_identity": c.with_identity,
                "rois": c.rois,
                "operators": operators,
            }),
            notes,
        }
    }
}

// ---------------------------------------------------------------------------
// Convergence sequences

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceKind {
    /// Gaussian blur as sigma shrinks.
    #[serde(rename = "gaussian")]
    GaussianSigma,
    /// Cell-average Kantorovich operator as n grows.
    #[serde(rename = "sk")]
    SkN,
    /// Bilateral filter as both widths shrink together.
    #[serde(rename = "bilateral")]
    BilateralJoint,
    /// Haar approximation band as the level grows.
    #[serde(rename = "wavelet")]
    WaveletJ,
}

impl ConvergenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvergenceKind::GaussianSigma => "gaussian",
            ConvergenceKind::SkN => "sk",
            ConvergenceKind::BilateralJoint => "bilateral",
            ConvergenceKind::WaveletJ => "wavelet",
        }
    }
}

impl fmt::Display for ConvergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConvergenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ConvergenceKind::GaussianSigma),
            "sk" => Ok(ConvergenceKind::SkN),
            "bilateral" => Ok(ConvergenceKind::BilateralJoint),
            "wavelet" => Ok(ConvergenceKind::WaveletJ),
            _ => Err(Error::Config(format!(
                "unknown convergence kind '{s}' (expected gaussian, sk, bilateral or wavelet)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub kind: ConvergenceKind,
    /// Node count of the evaluation grid on `[0,1]`.
    pub nodes: usize,
    /// Sigma in domain units (decreasing), or n / J (increasing).
    pub params: Vec<f64>,
    /// Range widths paired with `params` for the bilateral sequence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub range_params: Vec<f64>,
    pub norm: Norm,
}

impl ConvergenceConfig {
    pub fn new(kind: ConvergenceKind) -> Self {
        let sigmas = vec![0.08, 0.04, 0.02, 0.01];
        let (params, range_params) = match kind {
            ConvergenceKind::GaussianSigma => (sigmas, vec![]),
            ConvergenceKind::BilateralJoint => (sigmas, vec![0.4, 0.2, 0.1, 0.05]),
            ConvergenceKind::SkN => (vec![8.0, 16.0, 32.0, 64.0], vec![]),
            ConvergenceKind::WaveletJ => (vec![1.0, 2.0, 3.0, 4.0], vec![]),
        };
        ConvergenceConfig {
            kind,
            nodes: 513,
            params,
            range_params,
            norm: Norm::L2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::Config("empty parameter sequence".into()));
        }
        if self.nodes < 2 {
            return Err(Error::Config("need at least two nodes".into()));
        }
        let decreasing = matches!(
            self.kind,
            ConvergenceKind::GaussianSigma | ConvergenceKind::BilateralJoint
        );
        let monotone = |xs: &[f64], down: bool| {
            xs.windows(2)
                .all(|w| if down { w[1] < w[0] } else { w[1] > w[0] })
        };
        if !monotone(&self.params, decreasing) {
            return Err(Error::Config(format!(
                "{} parameters must be strictly {}",
                self.kind,
                if decreasing {
                    "decreasing"
                } else {
                    "increasing"
                }
            )));
        }
        if self.params.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Config("parameters must be positive".into()));
        }
        match self.kind {
            ConvergenceKind::BilateralJoint => {
                if self.range_params.len() != self.params.len() {
                    return Err(Error::Config(
                        "bilateral needs one range width per spatial width".into(),
                    ));
                }
                if !monotone(&self.range_params, true)
                    || self
                        .range_params
                        .iter()
                        .any(|p| !(p.is_finite() && *p > 0.0))
                {
                    return Err(Error::Config(
                        "range widths must be positive and strictly decreasing".into(),
                    ));
                }
            }
            ConvergenceKind::SkN | ConvergenceKind::WaveletJ => {
                if self.params.iter().any(|p| p.fract() != 0.0) {
                    return Err(Error::Config(format!(
                        "{} parameters must be integers",
                        self.kind
                    )));
                }
            }
            ConvergenceKind::GaussianSigma => {}
        }
        if self.kind == ConvergenceKind::WaveletJ {
            let cells = self.nodes - 1;
            let top = *self.params.last().unwrap() as usize;
            if cells % (1 << top) != 0 {
                return Err(Error::Config(format!(
                    "{} cells are not divisible by 2^{top}",
                    cells
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub config: ConvergenceConfig,
    pub errors: Vec<f64>,
}

impl ConvergenceResult {
    /// Error reduction per step: `errors[i-1] / errors[i]`. For the wavelet
    /// sequence, where a higher level is a coarser approximation, it is the
    /// growth `errors[i] / errors[i-1]` instead.
    pub fn ratios(&self) -> Vec<f64> {
        self.errors
            .windows(2)
            .map(|w| self.step_ratio(w[0], w[1]))
            .collect()
    }

    fn step_ratio(&self, prev: f64, next: f64) -> f64 {
        match self.config.kind {
            ConvergenceKind::WaveletJ => next / prev,
            _ => prev / next,
        }
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn table(&self) -> TableResult {
        let c = &self.config;
        let rows = self
            .errors
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let param = match c.kind {
                    ConvergenceKind::BilateralJoint => {
                        Cell::Text(format!("{}/{}", c.params[i], c.range_params[i]))
                    }
                    ConvergenceKind::GaussianSigma => num(c.params[i]),
                    _ => Cell::Int(c.params[i] as i64),
                };
                let ratio = if i == 0 {
                    Cell::Text(String::new())
                } else {
                    num(self.step_ratio(self.errors[i - 1], e))
                };
                vec![Cell::Text(c.kind.to_string()), param, num(e), ratio]
            })
            .collect();
        let function = "sin(pi x)";
        TableResult {
            experiment: "convergence".into(),
            columns: ["kind", "param", "error", "ratio"]
                .map(String::from)
                .to_vec(),
            rows,
            provenance: json!({ "function": function, "config": c }),
            notes: Vec::new(),
        }
    }
}

/// Samples `f` on the node grid of `nodes` points extended by `pad` nodes on
/// each side, filters, and crops back. With `pad` at least the stencil radius
/// the result equals filtering `f` on the whole line.
fn padded_filter(
    f: &AnalyticFn,
    nodes: usize,
    pad: usize,
    op: impl Fn(&Volume) -> Result<Volume>,
) -> Result<Volume> {
    let h = 1.0 / (nodes - 1) as f64;
    let total = nodes + 2 * pad;
    let ext = Volume::from_index_fn(vec![total], GridKind::NodeCentered, |i| {
        f.eval(&[(i[0] as f64 - pad as f64) * h])
    })?;
    let out = op(&ext)?;
    Volume::new(vec![nodes], out.data()[pad..pad + nodes].to_vec())
}

/// Error of each operator against `f = sin(pi x)` along the parameter
/// sequence.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let f = AnalyticFn::sine_product(1)?;
    let nodes = cfg.nodes;
    let reference = sample_function(&f, &[nodes], GridKind::NodeCentered)?;
    let cells = (nodes - 1) as f64;
    let errors = match cfg.kind {
        ConvergenceKind::GaussianSigma => cfg
            .params
            .par_iter()
            .map(|&s| {
                let sigma = s * cells;
                let out = padded_filter(&f, nodes, stencil_half_width(sigma), |v| {
                    gaussian_filter(v, sigma, BoundaryPolicy::Reflect)
                })?;
                lp_distance(&out, &reference, cfg.norm)
            })
            .collect::<Result<Vec<_>>>()?,
        ConvergenceKind::BilateralJoint => cfg
            .params
            .par_iter()
            .zip(&cfg.range_params)
            .map(|(&s, &r)| {
                let p = BilateralParams::new(s * cells, r)?;
                let out = padded_filter(&f, nodes, stencil_half_width(p.sigma_spatial), |v| {
                    bilateral_filter(v, p, BoundaryPolicy::Reflect)
                })?;
                lp_distance(&out, &reference, cfg.norm)
            })
            .collect::<Result<Vec<_>>>()?,
        ConvergenceKind::SkN => {
            let points = EvalPoints::Grid {
                dims: vec![nodes],
                grid: GridKind::NodeCentered,
            };
            cfg.params
                .par_iter()
                .map(|&n| {
                    let out = sk_cell_average(
                        SkSource::Function(&f),
                        n as usize,
                        &Kernel::CubicBSpline,
                        &points,
                    )?;
                    lp_distance(&out, &reference, cfg.norm)
                })
                .collect::<Result<Vec<_>>>()?
        }
        ConvergenceKind::WaveletJ => {
            let levels: Vec<usize> = cfg.params.iter().map(|&j| j as usize).collect();
            jackson_decay_check(&f, WaveletFamily::Haar, &levels, nodes - 1)?
        }
    };
    Ok(ConvergenceResult {
        config: cfg.clone(),
        errors,
    })
}

/// Writes a 2-D volume as an 8-bit PGM, scaled over its own range or a
/// fixed one.
pub fn export_slice_pgm(v: &Volume, path: impl AsRef<Path>, range: GrayRange) -> Result<()> {
    save_pgm(path, v, range)
}
