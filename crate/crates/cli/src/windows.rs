use std::fs;
use std::io::{BufWriter, Write};

use rayon::prelude::*;
use rqnet_core::embedding::{estimate_delay, EmbeddingParams};
use rqnet_core::window::{heatmap_table, windowed_measures, EmbeddingMode, Measure, MeasureSeries};

use crate::config::{input_metadata, pipeline_metadata, window_metadata, Base, InputSpec, Pipeline, WindowPlan};
use crate::market::{count_failures, load, status_table, Failure};
use crate::output::{file_stem, fmt_num, write_header, Cell, Table};
use crate::{CliError, Outcome};

struct MarketWindows {
    series: MeasureSeries,
    params: Option<EmbeddingParams>,
}

/// Recurrence measures are computed on the uniform deviate, VAR and AC1 on
/// the detrended values.
fn evaluate_market(input: &InputSpec, pipeline: &Pipeline, plan: &WindowPlan) -> Result<MarketWindows, Failure> {
    let fail = |e: rqnet_core::Error| Failure::from_error(input, &e);
    let prepared = load(input, &pipeline.preprocess)?;
    let deviate = &prepared.deviate;

    let tau = if plan.needs_delay() {
        let max_lag = pipeline.analysis.max_lag.min(deviate.len() - 1);
        estimate_delay(deviate.values(), max_lag).map_err(fail)?
    } else {
        1
    };
    let cfg = plan.for_delay(tau);
    cfg.validate().map_err(fail)?;

    let (recurrence, raw): (Vec<Measure>, Vec<Measure>) =
        cfg.measures.iter().partition(|m| m.needs_recurrence());
    let mut series: Option<MeasureSeries> = None;
    if !recurrence.is_empty() {
        series = Some(windowed_measures(deviate, &cfg.clone().with_measures(&recurrence)).map_err(fail)?);
    }
    if !raw.is_empty() {
        let other = windowed_measures(&prepared.detrended, &cfg.clone().with_measures(&raw)).map_err(fail)?;
        series = Some(match series {
            None => other,
            Some(mut s) => {
                s.values.extend(other.values);
                s
            }
        });
    }
    let mut series = series.expect("at least one measure");
    series.config = cfg.clone();
    eprintln!("windows {}: {} windows", input.label, series.len());
    Ok(MarketWindows {
        series,
        params: match cfg.embedding {
            EmbeddingMode::Global(p) => Some(p),
            EmbeddingMode::None => None,
        },
    })
}

fn center_date(series: &MeasureSeries, k: usize) -> Option<String> {
    series.center_dates.as_ref().map(|d| d[k].to_string())
}

fn long_table(metadata: Vec<(String, String)>, markets: &[&MarketWindows]) -> Table {
    let mut t = Table::new(
        metadata,
        &["label", "center_index", "center_date", "measure", "value", "status"],
    );
    for m in markets {
        let s = &m.series;
        for (k, &center) in s.centers.iter().enumerate() {
            for (measure, obs) in &s.values {
                t.push(vec![
                    s.label.as_str().into(),
                    center.into(),
                    center_date(s, k).into(),
                    measure.name().into(),
                    obs[k].value().into(),
                    obs[k].status().into(),
                ]);
            }
        }
    }
    t
}

fn write_gnuplot(path: &std::path::Path, metadata: &[(String, String)], m: &MarketWindows) -> std::io::Result<()> {
    let s = &m.series;
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_header(&mut out, metadata)?;
    let names: Vec<&str> = s.values.keys().map(|m| m.name()).collect();
    writeln!(out, "# center_index center_date {}", names.join(" "))?;
    for (k, &center) in s.centers.iter().enumerate() {
        write!(out, "{center} {}", center_date(s, k).unwrap_or_else(|| "-".into()))?;
        for obs in s.values.values() {
            let v = obs[k].value().map_or_else(|| "NaN".to_string(), fmt_num);
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn run(base: &Base, pipeline: &Pipeline, plan: &WindowPlan) -> Result<Outcome, CliError> {
    let results: Vec<Result<MarketWindows, Failure>> = base
        .inputs
        .par_iter()
        .map(|input| evaluate_market(input, pipeline, plan))
        .collect();
    for f in results.iter().filter_map(|r| r.as_ref().err()) {
        f.report();
    }
    let done: Vec<&MarketWindows> = results.iter().filter_map(|r| r.as_ref().ok()).collect();

    let mut metadata = vec![("command".to_string(), "windows".to_string())];
    metadata.extend(pipeline_metadata(pipeline));
    metadata.extend(window_metadata(plan));
    let mut full = metadata.clone();
    full.extend(input_metadata(&base.inputs));
    for m in &done {
        if let Some(p) = m.params {
            full.push((format!("market.{}.m", m.series.label), p.dimension.to_string()));
            full.push((format!("market.{}.tau", m.series.label), p.delay.to_string()));
        }
    }

    let out = &base.output;
    let save = |t: &Table, stem: &str| t.save(out, stem).map_err(|e| CliError::output(&out.out_dir.join(stem), e));
    save(&long_table(full.clone(), &done), "windows_long")?;

    let mut other_failures = 0;
    if !done.is_empty() {
        let series: Vec<MeasureSeries> = done.iter().map(|m| m.series.clone()).collect();
        for &measure in series[0].values.keys() {
            match heatmap_table(&series, measure) {
                Ok(h) => {
                    let mut columns = vec!["label".to_string(), "change_score".to_string()];
                    columns.extend(h.centers.iter().enumerate().map(|(k, c)| match &h.center_dates {
                        Some(d) => d[k].to_string(),
                        None => c.to_string(),
                    }));
                    let mut meta = full.clone();
                    meta.push(("measure".into(), measure.name().into()));
                    let mut t = Table {
                        metadata: meta,
                        columns,
                        rows: Vec::new(),
                    };
                    for ((label, score), row) in h.labels.iter().zip(&h.change_scores).zip(&h.rows) {
                        let mut cells: Vec<Cell> = vec![label.as_str().into(), (*score).into()];
                        cells.extend(row.iter().map(|&v| Cell::from(v)));
                        t.push(cells);
                    }
                    save(&t, &format!("heatmap_{}", measure.name()))?;
                }
                Err(e) => {
                    eprintln!("warning: heat map for {measure} skipped: {e}");
                    other_failures += 1;
                }
            }
        }

        let dir = out.out_dir.join("gnuplot");
        fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
        for m in &done {
            let path = dir.join(format!("{}.dat", file_stem(&m.series.label)));
            write_gnuplot(&path, &full, m).map_err(|e| CliError::output(&path, e))?;
        }
    }
    save(&status_table(metadata, &base.inputs, &results), "status")?;

    Ok(Outcome {
        failed_inputs: count_failures(&results),
        total_inputs: base.inputs.len(),
        other_failures,
    })
}
