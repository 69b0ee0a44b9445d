//! The three subcommands, returning rendered-ready outcomes.

use std::path::Path;

use algebroid::bigtangent::{big_tangent_report, BigTangentModel, DEFAULT_SHELL};
use algebroid::contact::{check_identities, classify as classify_structure, volume_identity_check};
use algebroid::{BundleMetric, ChartBox, Convention, Report, SampleGrid};

use crate::manifest::{read_json, ExprContext, GridSpec, Manifest, MetricFile, Overrides, Tolerances};
use crate::render::{GridInfo, Outcome};
use crate::{exit, CliError, Result};

fn grid_info(grid: &GridSpec, tol: &Tolerances) -> GridInfo {
    GridInfo { count: grid.count, seed: grid.seed, tol_eq: tol.eq, tol_nonzero: tol.nonzero }
}

fn finish(mut out: Outcome, passed: bool) -> Outcome {
    out.passed = passed;
    out.exit_code = if passed { exit::PASS } else { exit::FAILURE };
    out
}

/// A math failure that stops the pipeline: exit 1 with the reason attached.
fn failed(mut out: Outcome, e: CliError) -> Result<Outcome> {
    match e {
        CliError::Math(msg) => {
            out.error = Some(msg);
            Ok(finish(out, false))
        }
        input => Err(input),
    }
}

/// Jacobi, anchor-morphism and skew-symmetry residuals of the manifest's algebroid.
pub fn validate(path: &Path, overrides: &Overrides) -> Result<Outcome> {
    let loaded = Manifest::load(path, overrides)?;
    let m = &loaded.manifest;
    let mut out = Outcome::new("validate", m.name.clone(), grid_info(&m.grid, &m.tolerances));
    let report = loaded.algebroid.validate(&loaded.grid);
    let passed = report.passed();
    out.reports.push(report);
    Ok(finish(out, passed))
}

/// The classification ladder and the identities its flags unlock.
pub fn classify(path: &Path, overrides: &Overrides, convention: Option<Convention>) -> Result<Outcome> {
    let loaded = Manifest::load(path, overrides)?;
    let m = &loaded.manifest;
    let convention = convention.unwrap_or_else(|| m.convention.into());
    let mut out = Outcome::new("classify", m.name.clone(), grid_info(&m.grid, &m.tolerances));
    out.convention = Some(convention.name().to_string());
    let acs = loaded.structure.as_ref().ok_or_else(|| CliError::Input(format!("{}: classify needs a structure block", path.display())))?;
    if acs.metric().is_none() {
        return Err(CliError::Input(format!("{}: structure needs a metric or a metric_seed", path.display())));
    }
    let grid = &loaded.grid;
    let c = match classify_structure(acs, grid, convention) {
        Ok(c) => c,
        Err(e) => return failed(out, e.into()),
    };
    let identities = match check_identities(acs, grid, convention, &c.flags) {
        Ok(r) => r,
        Err(e) => return failed(out, e.into()),
    };
    out.flags = Some(c.flags);
    out.reports.push(c.report);
    out.reports.push(identities);
    if c.flags.contact_riemannian {
        match volume_identity_check(acs, grid, convention) {
            Ok(r) => out.reports.push(r),
            Err(e) => return failed(out, e.into()),
        }
    }
    Ok(finish(out, c.flags.almost_contact))
}

/// Builds the big-tangent model over `x1..xn` and runs the full checklist.
pub fn bigtangent(dim: usize, metric_path: &Path, overrides: &Overrides) -> Result<Outcome> {
    if dim == 0 {
        return Err(CliError::Input("--dim must be at least 1".into()));
    }
    let (mut spec, raw): (MetricFile, String) = read_json(metric_path)?;
    overrides.apply(&mut spec.grid, &mut spec.tolerances)?;
    let convention: Convention = spec.convention.into();
    let mut out = Outcome::new("bigtangent", spec.name.clone(), grid_info(&spec.grid, &spec.tolerances));
    out.convention = Some(convention.name().to_string());

    let vars: Vec<String> = (1..=dim).map(|i| format!("x{}", i)).collect();
    let ctx = ExprContext { path: metric_path, raw: &raw, variables: vars.iter().map(|s| s.as_str()).collect() };
    let g = ctx.matrix("metric", &spec.metric, dim, dim)?;
    let base = match &spec.bounds {
        Some(b) => b.to_box()?,
        None => ChartBox::cube(dim, 1.0),
    };
    if base.dim() != dim {
        return Err(CliError::Input(format!("box has dimension {}, expected {}", base.dim(), dim)));
    }
    let shell = spec.shell.map_or(DEFAULT_SHELL, |s| (s[0], s[1]));
    let tol = spec.tolerances;

    let base_grid = SampleGrid::halton(base.clone(), spec.grid.count, spec.grid.seed)?.with_tolerances(tol.eq, tol.nonzero);
    let mut base_report = Report::new("base_metric", base_grid.len());
    base_report.push(BundleMetric::new(g.clone())?.positive_definite_check(&base_grid));
    let positive = base_report.passed();
    out.reports.push(base_report);
    if !positive {
        return Ok(finish(out, false));
    }
    let model = match BigTangentModel::new(dim, &g) {
        Ok(m) => m,
        Err(e) => return failed(out, e.into()),
    };
    let grid = match model.sample_grid(&base, spec.grid.count, spec.grid.seed, shell) {
        Ok(g) => g.with_tolerances(tol.eq, tol.nonzero),
        Err(e) => return failed(out, e.into()),
    };
    match big_tangent_report(&model, &grid, convention) {
        Ok(r) => {
            let passed = r.passed();
            out.reports.push(r);
            Ok(finish(out, passed))
        }
        Err(e) => failed(out, e.into()),
    }
}
