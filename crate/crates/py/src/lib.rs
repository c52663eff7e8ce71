//! Python bindings for `slidekit`.
//!
//! Library errors surface as `SlideRuleError` (a `ValueError`); readings
//! that run off the strip raise its subclass `OffScaleError`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use slidekit::catalog::{builtin, list_builtins};
use slidekit::dsl::compile_program;
use slidekit::sheet::{export_sheet, ScaleSheet};
use slidekit::simulator::{self, ReadingModel, RuleState, DEFAULT_LENGTH_MM};
use slidekit::svg::{render_svg as render, SvgStyle};
use slidekit::ticks::TickPolicy;
use slidekit::{Error, Params, RuleSpec};

create_exception!(pyslidekit, SlideRuleError, PyValueError);
create_exception!(pyslidekit, OffScaleError, SlideRuleError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::OffScale { .. } => OffScaleError::new_err(e.to_string()),
        _ => SlideRuleError::new_err(e.to_string()),
    }
}

fn catalog_rule(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<RuleSpec> {
    let params: Params = params.unwrap_or_default().into_iter().collect();
    Ok(builtin(name, &params).map_err(to_py)?.rule)
}

fn model(resolution: f64, length: f64) -> PyResult<ReadingModel> {
    ReadingModel::new(resolution, length).map_err(to_py)
}

/// Catalog names with their descriptions.
#[pyfunction]
fn catalog() -> Vec<(String, String)> {
    list_builtins()
        .into_iter()
        .map(|i| (i.name.to_string(), i.description.to_string()))
        .collect()
}

/// Exact result of a catalog rule, without any strip geometry.
#[pyfunction]
#[pyo3(signature = (rule, x, y, params=None))]
fn evaluate(rule: &str, x: f64, y: f64, params: Option<BTreeMap<String, f64>>) -> PyResult<f64> {
    catalog_rule(rule, params)?.evaluate(x, y).map_err(to_py)
}

/// Sets the slide to `x` and reads the result over `y`.
#[pyfunction]
#[pyo3(signature = (rule, x, y, resolution=0.0, length=DEFAULT_LENGTH_MM, params=None))]
fn compute(
    rule: &str,
    x: f64,
    y: f64,
    resolution: f64,
    length: f64,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<f64> {
    let params_map: Params = params.unwrap_or_default().into_iter().collect();
    let entry = builtin(rule, &params_map).map_err(to_py)?;
    entry.check_operands(x, y).map_err(to_py)?;
    let reading = model(resolution, length)?;
    RuleState::new(&entry.rule, length)
        .and_then(|s| s.slide_set(x))
        .and_then(|s| s.read_result(y, &reading))
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rule, xs, resolution=0.0, length=DEFAULT_LENGTH_MM, params=None))]
fn chain(
    rule: &str,
    xs: Vec<f64>,
    resolution: f64,
    length: f64,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<f64> {
    let rule = catalog_rule(rule, params)?;
    simulator::chain(&rule, &xs, &model(resolution, length)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (xs, alpha, resolution=0.0, length=DEFAULT_LENGTH_MM))]
fn power_mean(xs: Vec<f64>, alpha: f64, resolution: f64, length: f64) -> PyResult<f64> {
    simulator::power_mean(&xs, alpha, &model(resolution, length)?).map_err(to_py)
}

/// Returns `(max_rel_err, mean_rel_err, off_scale, csv)`.
#[pyfunction]
#[pyo3(signature = (rule, xs, ys, resolution, length=DEFAULT_LENGTH_MM, params=None))]
fn error_profile(
    rule: &str,
    xs: Vec<f64>,
    ys: Vec<f64>,
    resolution: f64,
    length: f64,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<(f64, f64, usize, String)> {
    let rule = catalog_rule(rule, params)?;
    let p = simulator::error_profile(&rule, &xs, &ys, &model(resolution, length)?).map_err(to_py)?;
    Ok((p.max_rel_err, p.mean_rel_err, p.off_scale, p.to_csv()))
}

/// Compiles rule-language source into sheet JSON. Diagnostics are raised
/// together, one per line.
#[pyfunction]
#[pyo3(signature = (source, length=DEFAULT_LENGTH_MM))]
fn compile_dsl(source: &str, length: f64) -> PyResult<String> {
    let compiled = compile_program(source).map_err(to_py)?;
    if !compiled.diagnostics.is_empty() {
        let lines: Vec<String> = compiled.diagnostics.iter().map(|d| d.to_string()).collect();
        return Err(SlideRuleError::new_err(lines.join("\n")));
    }
    export_sheet(&compiled.rules, length, &TickPolicy::default())
        .and_then(|s| s.to_json())
        .map_err(to_py)
}

/// Sheet JSON for catalog rules.
#[pyfunction]
#[pyo3(signature = (names, length=DEFAULT_LENGTH_MM))]
fn export(names: Vec<String>, length: f64) -> PyResult<String> {
    let rules = names
        .iter()
        .map(|n| catalog_rule(n, None))
        .collect::<PyResult<Vec<_>>>()?;
    export_sheet(&rules, length, &TickPolicy::default())
        .and_then(|s| s.to_json())
        .map_err(to_py)
}

#[pyfunction]
fn render_svg(sheet_json: &str) -> PyResult<String> {
    let sheet = ScaleSheet::from_json(sheet_json).map_err(to_py)?;
    Ok(render(&sheet, &SvgStyle::default()))
}

#[pymodule]
fn pyslidekit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SlideRuleError", m.py().get_type::<SlideRuleError>())?;
    m.add("OffScaleError", m.py().get_type::<OffScaleError>())?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add_function(wrap_pyfunction!(chain, m)?)?;
    m.add_function(wrap_pyfunction!(power_mean, m)?)?;
    m.add_function(wrap_pyfunction!(error_profile, m)?)?;
    m.add_function(wrap_pyfunction!(compile_dsl, m)?)?;
    m.add_function(wrap_pyfunction!(export, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    Ok(())
}
