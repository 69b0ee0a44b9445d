//! JSON manifests describing an algebroid, an optional almost contact
//! structure, and the sample grid they are checked on.

use std::path::Path;

use algebroid::contact::{compatible_metric, AlmostContactStructure};
use algebroid::expr::{parse, Expr};
use algebroid::{BundleMetric, ChartBox, Convention, LieAlgebroid, SampleGrid};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const DEFAULT_COUNT: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: Option<String>,
    pub chart: Chart,
    pub algebroid: AlgebroidSpec,
    #[serde(default)]
    pub structure: Option<StructureSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub convention: ConventionSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Chart {
    pub variables: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: BoxSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSpec {
    pub fn to_box(&self) -> Result<ChartBox> {
        Ok(ChartBox::new(self.lo.clone(), self.hi.clone())?)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidSpec {
    pub rank: usize,
    /// `anchor[a][i]` is the `∂_i` component of `ρ(e_a)`; omitted means the identity.
    #[serde(default)]
    pub anchor: Option<Vec<Vec<String>>>,
    /// Nonzero structure functions; skew partners are filled in.
    #[serde(default)]
    pub brackets: Vec<BracketSpec>,
}

/// `C^component_{pair[0] pair[1]} = value`, with 1-based frame indices.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BracketSpec {
    pub pair: [usize; 2],
    pub component: usize,
    pub value: String,
}

/// `F[c][b]` is the `e_c` component of `F(e_b)`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    #[serde(rename = "F")]
    pub f: Vec<Vec<String>>,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
    #[serde(default)]
    pub metric: Option<Vec<Vec<String>>>,
    /// Seed for the compatible-metric construction, used when `metric` is absent.
    #[serde(default)]
    pub metric_seed: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Halton,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strategy: Strategy,
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { count: DEFAULT_COUNT, seed: 0, strategy: Strategy::Halton }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionSpec {
    #[default]
    Plain,
    Half,
}

impl From<ConventionSpec> for Convention {
    fn from(c: ConventionSpec) -> Self {
        match c {
            ConventionSpec::Plain => Convention::Plain,
            ConventionSpec::Half => Convention::Half,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub eq: f64,
    #[serde(default = "default_tol")]
    pub nonzero: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eq: DEFAULT_TOL, nonzero: DEFAULT_TOL }
    }
}

/// Command-line overrides of the grid and tolerance settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, grid: &mut GridSpec, tol: &mut Tolerances) -> Result<()> {
        if let Some(c) = self.count {
            grid.count = c;
        }
        if let Some(s) = self.seed {
            grid.seed = s;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Input(format!("--tol must be a positive number, found {}", t)));
            }
            tol.eq = t;
        }
        if grid.count == 0 {
            return Err(CliError::Input("the grid needs at least one point".into()));
        }
        Ok(())
    }
}

/// Reads a file and deserializes it, reporting JSON errors with line and column.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let raw = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {}", path.display(), e)))?;
    let value = serde_json::from_str(&raw).map_err(|e| {
        CliError::Input(format!("{}:{}:{}: {}", path.display(), e.line(), e.column(), strip_location(&e.to_string())))
    })?;
    Ok((value, raw))
}

fn strip_location(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(k) => msg[..k].to_string(),
        None => msg.to_string(),
    }
}

/// Line and column (1-based) of the first occurrence of `needle` in `raw`.
fn locate(raw: &str, needle: &str) -> Option<(usize, usize)> {
    let quoted = serde_json::to_string(needle).ok()?;
    let at = raw.find(&quoted)? + 1;
    let line = raw[..at].matches('\n').count() + 1;
    let col = at - raw[..at].rfind('\n').map_or(0, |k| k + 1) + 1;
    Some((line, col))
}

/// Parses Expr-valued strings and attributes errors to their place in the file.
pub struct ExprContext<'a> {
    pub path: &'a Path,
    pub raw: &'a str,
    pub variables: Vec<&'a str>,
}

impl ExprContext<'_> {
    pub fn expr(&self, field: &str, text: &str) -> Result<Expr> {
        parse(text, &self.variables).map_err(|e| {
            let offset = e.position();
            let place = match locate(self.raw, text) {
                Some((line, col)) => format!("{}:{}:{}", self.path.display(), line, col + offset),
                None => self.path.display().to_string(),
            };
            CliError::Input(format!("{}: {}: {}", place, field, e))
        })
    }

    pub fn vector(&self, field: &str, items: &[String], len: usize) -> Result<Vec<Expr>> {
        if items.len() != len {
            return Err(CliError::Input(format!("{}: expected {} entries, found {}", field, len, items.len())));
        }
        items.iter().enumerate().map(|(i, t)| self.expr(&format!("{}[{}]", field, i), t)).collect()
    }

    pub fn matrix(&self, field: &str, rows: &[Vec<String>], nrows: usize, ncols: usize) -> Result<Vec<Vec<Expr>>> {
        if rows.len() != nrows {
            return Err(CliError::Input(format!("{}: expected {} rows, found {}", field, nrows, rows.len())));
        }
        rows.iter().enumerate().map(|(r, row)| self.vector(&format!("{}[{}]", field, r), row, ncols)).collect()
    }
}

/// A manifest resolved into library objects.
pub struct Loaded {
    pub manifest: Manifest,
    pub algebroid: LieAlgebroid,
    pub structure: Option<AlmostContactStructure>,
    pub grid: SampleGrid,
}

impl Manifest {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Loaded> {
        let (mut manifest, raw): (Manifest, String) = read_json(path)?;
        overrides.apply(&mut manifest.grid, &mut manifest.tolerances)?;
        let ctx = ExprContext { path, raw: &raw, variables: manifest.chart.variables.iter().map(|s| s.as_str()).collect() };
        let algebroid = manifest.build_algebroid(&ctx)?;
        let structure = match &manifest.structure {
            Some(s) => Some(s.build(&algebroid, &ctx)?),
            None => None,
        };
        let grid = manifest.build_grid()?;
        Ok(Loaded { manifest, algebroid, structure, grid })
    }

    fn build_algebroid(&self, ctx: &ExprContext) -> Result<LieAlgebroid> {
        let n = self.chart.variables.len();
        let m = self.algebroid.rank;
        if m == 0 {
            return Err(CliError::Input("algebroid.rank must be at least 1".into()));
        }
        let anchor = match &self.algebroid.anchor {
            Some(rows) => ctx.matrix("algebroid.anchor", rows, m, n)?,
            None if m == n => (0..m).map(|a| (0..n).map(|i| if a == i { Expr::one() } else { Expr::zero() }).collect()).collect(),
            None => {
                return Err(CliError::Input(format!(
                    "algebroid.anchor may only be omitted when rank ({}) equals the chart dimension ({})",
                    m, n
                )))
            }
        };
        let mut structure = vec![vec![vec![Expr::zero(); m]; m]; m];
        let mut seen = vec![vec![vec![false; m]; m]; m];
        for (k, b) in self.algebroid.brackets.iter().enumerate() {
            let field = format!("algebroid.brackets[{}]", k);
            let [a, bb] = b.pair;
            let c = b.component;
            if [a, bb, c].iter().any(|i| *i == 0 || *i > m) {
                return Err(CliError::Input(format!("{}: indices are 1-based and at most the rank {}", field, m)));
            }
            if a == bb {
                return Err(CliError::Input(format!("{}: a bracket [e_{}, e_{}] vanishes by skew-symmetry", field, a, a)));
            }
            let (a, bb, c) = (a - 1, bb - 1, c - 1);
            if seen[c][a][bb] {
                return Err(CliError::Input(format!("{}: duplicate entry", field)));
            }
            let v = ctx.expr(&format!("{}.value", field), &b.value)?;
            structure[c][a][bb] = v.clone();
            structure[c][bb][a] = -v;
            seen[c][a][bb] = true;
            seen[c][bb][a] = true;
        }
        Ok(LieAlgebroid::new(self.chart.variables.clone(), anchor, structure)?)
    }

    pub fn build_grid(&self) -> Result<SampleGrid> {
        let bounds = self.chart.bounds.to_box()?;
        if bounds.dim() != self.chart.variables.len() {
            return Err(CliError::Input(format!(
                "chart.box has dimension {}, expected {}",
                bounds.dim(),
                self.chart.variables.len()
            )));
        }
        Ok(SampleGrid::halton(bounds, self.grid.count, self.grid.seed)?.with_tolerances(self.tolerances.eq, self.tolerances.nonzero))
    }
}

impl StructureSpec {
    fn build(&self, e: &LieAlgebroid, ctx: &ExprContext) -> Result<AlmostContactStructure> {
        let m = e.rank();
        let f = ctx.matrix("structure.F", &self.f, m, m)?;
        let xi = ctx.vector("structure.xi", &self.xi, m)?;
        let eta = ctx.vector("structure.eta", &self.eta, m)?;
        let acs = AlmostContactStructure::from_components(e, &f, xi, eta)?;
        match (&self.metric, &self.metric_seed) {
            (Some(_), Some(_)) => Err(CliError::Input("structure: give either metric or metric_seed, not both".into())),
            (Some(g), None) => Ok(acs.with_metric(BundleMetric::new(ctx.matrix("structure.metric", g, m, m)?)?)?),
            (None, Some(s)) => {
                let seed = BundleMetric::new(ctx.matrix("structure.metric_seed", s, m, m)?)?;
                let g = compatible_metric(&acs, &seed)?;
                Ok(acs.with_metric(g)?)
            }
            (None, None) => Ok(acs),
        }
    }
}

/// Base metric for the big-tangent command, over `x1..xn`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    #[serde(default)]
    pub name: Option<String>,
    pub metric: Vec<Vec<String>>,
    /// Base box for `x`; defaults to `[-1, 1]^n`.
    #[serde(rename = "box", default)]
    pub bounds: Option<BoxSpec>,
    /// Range of `F² + K²` the fibre coordinates are scaled into.
    #[serde(default)]
    pub shell: Option<[f64; 2]>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "half")]
    pub convention: ConventionSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn half() -> ConventionSpec {
    ConventionSpec::Half
}
