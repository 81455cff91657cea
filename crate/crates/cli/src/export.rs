use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use rqnet_core::analysis::{build_recurrence, estimate_embedding};
use rqnet_core::network::{write_edge_list, EdgeListMeta, RecurrenceNetwork};
use rqnet_core::preprocess::uniform_deviate;
use rqnet_core::recurrence::{write_rpv1, write_sparse_csv, RecurrenceMatrix};
use rqnet_core::Error;
use serde_json::json;

use crate::args::Format;
use crate::config::{pipeline_metadata, Base, InputSpec, Pipeline, SlicePlan};
use crate::market::{count_failures, load, status_table, Failure};
use crate::output::{file_stem, metadata_json, write_header, write_json};
use crate::{CliError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    RecurrencePlot,
    Network,
}

impl Target {
    fn command(self) -> &'static str {
        match self {
            Target::RecurrencePlot => "export-rp",
            Target::Network => "export-network",
        }
    }
}

struct Built {
    r: RecurrenceMatrix,
    metadata: Vec<(String, String)>,
    meta: EdgeListMeta,
}

/// Recurrence matrix of the requested stretch; a strict sub-stretch is re-ranked.
fn build(input: &InputSpec, pipeline: &Pipeline, slice: SlicePlan) -> Result<Built, Failure> {
    let fail = |e: Error| Failure::from_error(input, &e);
    let prepared = load(input, &pipeline.preprocess)?;
    let full = prepared.deviate;
    let end = match slice.length {
        Some(len) => slice.start.saturating_add(len),
        None => full.len(),
    };
    let series = if slice.start == 0 && end == full.len() {
        full
    } else {
        uniform_deviate(&full.slice(slice.start, end).map_err(fail)?)
    };
    let estimate = estimate_embedding(series.values(), &pipeline.analysis).map_err(fail)?;
    let p = estimate.params;
    let r = build_recurrence(series.values(), p, pipeline.analysis.epsilon, pipeline.analysis.norm)
        .map_err(fail)?;

    let mut metadata = vec![
        ("label".to_string(), input.label.clone()),
        ("input".to_string(), input.path.display().to_string()),
        ("start".to_string(), slice.start.to_string()),
        ("series_length".to_string(), series.len().to_string()),
        ("m".to_string(), p.dimension.to_string()),
        ("tau".to_string(), p.delay.to_string()),
        ("points".to_string(), r.size().to_string()),
    ];
    if let Some(d) = series.start_date() {
        metadata.push(("start_date".to_string(), d.to_string()));
    }
    Ok(Built {
        r,
        metadata,
        meta: EdgeListMeta {
            epsilon: pipeline.analysis.epsilon,
            dimension: p.dimension,
            delay: p.delay,
        },
    })
}

fn write_outputs(
    base: &Base,
    target: Target,
    header: &[(String, String)],
    label: &str,
    built: &Built,
) -> io::Result<Vec<PathBuf>> {
    let out = &base.output;
    let stem = file_stem(label);
    let mut metadata = header.to_vec();
    metadata.extend(built.metadata.iter().cloned());
    let mut written = Vec::new();
    match target {
        Target::RecurrencePlot => {
            let path = out.out_dir.join(format!("{stem}.rpv1"));
            let mut f = BufWriter::new(File::create(&path)?);
            write_rpv1(&built.r, &mut f)?;
            f.flush()?;
            written.push(path);
            if out.wants(Format::Csv) {
                let path = out.out_dir.join(format!("{stem}_rp.csv"));
                let mut f = BufWriter::new(File::create(&path)?);
                write_header(&mut f, &metadata)?;
                write_sparse_csv(&built.r, &mut f)?;
                f.flush()?;
                written.push(path);
            }
            if out.wants(Format::Json) {
                let path = out.out_dir.join(format!("{stem}_rp.json"));
                let pairs: Vec<[usize; 2]> = (0..built.r.size())
                    .flat_map(|i| built.r.bits().row_ones(i).filter(move |&j| j >= i).map(move |j| [i, j]))
                    .collect();
                write_json(
                    &path,
                    &json!({ "config": metadata_json(&metadata), "n": built.r.size(), "pairs": pairs }),
                )?;
                written.push(path);
            }
        }
        Target::Network => {
            let net = RecurrenceNetwork::from_recurrence(&built.r);
            if out.wants(Format::Csv) {
                let path = out.out_dir.join(format!("{stem}_network.csv"));
                let mut f = BufWriter::new(File::create(&path)?);
                write_header(&mut f, &metadata)?;
                write_edge_list(&net, &built.meta, &mut f)?;
                f.flush()?;
                written.push(path);
            }
            if out.wants(Format::Json) {
                let path = out.out_dir.join(format!("{stem}_network.json"));
                let edges: Vec<[usize; 2]> = (0..net.node_count())
                    .flat_map(|i| net.neighbors(i).filter(move |&j| j > i).map(move |j| [i, j]))
                    .collect();
                write_json(
                    &path,
                    &json!({ "config": metadata_json(&metadata), "n": net.node_count(), "edges": edges }),
                )?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

pub fn run(base: &Base, pipeline: &Pipeline, slice: SlicePlan, target: Target) -> Result<Outcome, CliError> {
    let mut header = vec![("command".to_string(), target.command().to_string())];
    header.extend(pipeline_metadata(pipeline));

    let results: Vec<Result<(), Failure>> = base
        .inputs
        .par_iter()
        .map(|input| {
            let built = build(input, pipeline, slice)?;
            write_outputs(base, target, &header, &input.label, &built)
                .map(|_| ())
                .map_err(|e| Failure {
                    label: input.label.clone(),
                    tag: "Io".into(),
                    message: e.to_string(),
                })
        })
        .collect();
    for f in results.iter().filter_map(|r| r.as_ref().err()) {
        f.report();
    }
    let out = &base.output;
    status_table(header, &base.inputs, &results)
        .save(out, "status")
        .map_err(|e| CliError::output(&out.out_dir.join("status"), e))?;
    Ok(Outcome {
        failed_inputs: count_failures(&results),
        total_inputs: base.inputs.len(),
        other_failures: 0,
    })
}
