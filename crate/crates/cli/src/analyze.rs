use rayon::prelude::*;
use rqnet_core::analysis::{analyze_series, SeriesReport};
use rqnet_core::embedding::autocorrelation;
use rqnet_core::window::error_tag;

use crate::config::{input_metadata, pipeline_metadata, Base, InputSpec, Pipeline};
use crate::market::{count_failures, load, status_table, Failure};
use crate::output::{Cell, Table};
use crate::{CliError, Outcome};

struct MarketAnalysis {
    report: SeriesReport,
    acf: Vec<f64>,
}

fn analyze_market(input: &InputSpec, pipeline: &Pipeline) -> Result<MarketAnalysis, Failure> {
    let prepared = load(input, &pipeline.preprocess)?;
    let series = &prepared.deviate;
    let report = analyze_series(series, &pipeline.analysis).map_err(|e| Failure::from_error(input, &e))?;
    let max_lag = pipeline.analysis.max_lag.min(series.len() - 1);
    let acf = autocorrelation(series.values(), max_lag).map_err(|e| Failure::from_error(input, &e))?;
    eprintln!(
        "analyzed {}: tau={} m={} points={}",
        input.label, report.params.delay, report.params.dimension, report.points
    );
    Ok(MarketAnalysis { report, acf })
}

const REPORT_COLUMNS: &[&str] = &[
    "label",
    "status",
    "points",
    "tau",
    "m",
    "fnn_converged",
    "recurrence_rate",
    "DET",
    "LAM",
    "CC",
    "CPL",
    "reachable_fraction",
    "components",
];

fn report_row(label: &str, result: &Result<MarketAnalysis, Failure>) -> Vec<Cell> {
    let r = match result {
        Ok(a) => &a.report,
        Err(f) => {
            let mut row = vec![label.into(), f.tag.as_str().into()];
            row.resize(REPORT_COLUMNS.len(), Cell::Empty);
            return row;
        }
    };
    let problems: Vec<String> = [
        r.det.as_ref().err(),
        r.lam.as_ref().err(),
        r.path_length.as_ref().err(),
    ]
    .into_iter()
    .flatten()
    .map(error_tag)
    .collect();
    let status = if problems.is_empty() { "ok".to_string() } else { problems.join(";") };
    let path = r.path_length.as_ref().ok();
    vec![
        label.into(),
        status.into(),
        r.points.into(),
        r.params.delay.into(),
        r.params.dimension.into(),
        r.fnn
            .as_ref()
            .map_or(Cell::Empty, |f| f.converged.to_string().into()),
        r.recurrence_rate.into(),
        r.det.as_ref().ok().copied().into(),
        r.lam.as_ref().ok().copied().into(),
        r.cc.into(),
        path.map(|p| p.cpl).into(),
        path.map(|p| p.reachable_fraction).into(),
        path.map(|p| p.components).into(),
    ]
}

pub fn run(base: &Base, pipeline: &Pipeline) -> Result<Outcome, CliError> {
    let results: Vec<Result<MarketAnalysis, Failure>> = base
        .inputs
        .par_iter()
        .map(|input| analyze_market(input, pipeline))
        .collect();
    for f in results.iter().filter_map(|r| r.as_ref().err()) {
        f.report();
    }

    let mut metadata = vec![("command".to_string(), "analyze".to_string())];
    metadata.extend(pipeline_metadata(pipeline));
    let mut with_inputs = metadata.clone();
    with_inputs.extend(input_metadata(&base.inputs));

    let mut report = Table::new(with_inputs.clone(), REPORT_COLUMNS);
    let mut embedding = Table::new(with_inputs, &["label", "kind", "index", "value"]);
    for (input, result) in base.inputs.iter().zip(&results) {
        report.push(report_row(&input.label, result));
        let Ok(a) = result else { continue };
        for (lag, &v) in a.acf.iter().enumerate() {
            embedding.push(vec![input.label.as_str().into(), "acf".into(), lag.into(), v.into()]);
        }
        for (k, &v) in a.report.fnn.iter().flat_map(|f| f.fractions.iter().enumerate()) {
            embedding.push(vec![input.label.as_str().into(), "fnn".into(), (k + 1).into(), v.into()]);
        }
    }

    let out = &base.output;
    let save = |t: &Table, stem: &str| t.save(out, stem).map_err(|e| CliError::output(&out.out_dir.join(stem), e));
    save(&report, "analyze")?;
    save(&embedding, "embedding")?;
    save(&status_table(metadata, &base.inputs, &results), "status")?;

    Ok(Outcome {
        failed_inputs: count_failures(&results),
        total_inputs: base.inputs.len(),
        other_failures: 0,
    })
}
