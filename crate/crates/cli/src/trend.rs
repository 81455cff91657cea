use std::fs::File;

use chrono::NaiveDate;
use rayon::prelude::*;
use rqnet_core::trend::{mann_kendall_modified_gapped, TrendResult};
use rqnet_core::window::{error_tag, Measure};
use rqnet_core::Error;

use crate::config::{input_metadata, Base, InputSpec, Range, TrendPlan};
use crate::market::{count_failures, status_table, Failure};
use crate::output::{fmt_num, Cell, Table};
use crate::{CliError, Outcome};

/// One measure of one market, in window order.
#[derive(Debug, Clone, PartialEq)]
struct Group {
    label: String,
    measure: Measure,
    points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
struct Point {
    center: usize,
    date: Option<NaiveDate>,
    value: Option<f64>,
}

const COLUMNS: [&str; 6] = ["label", "center_index", "center_date", "measure", "value", "status"];

fn parse_failure(input: &InputSpec, line: u64, message: impl Into<String>) -> Failure {
    Failure::from_error(
        input,
        &Error::Parse {
            line,
            message: message.into(),
        },
    )
}

/// Reads a long-format file written by the `windows` subcommand.
fn read_long(input: &InputSpec) -> Result<Vec<Group>, Failure> {
    let file = File::open(&input.path).map_err(|e| Failure {
        label: input.label.clone(),
        tag: "Io".into(),
        message: format!("{}: {e}", input.path.display()),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| parse_failure(input, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(parse_failure(
            input,
            headers.position().map_or(1, |p| p.line()),
            format!("expected header `{}`", COLUMNS.join(",")),
        ));
    }

    let mut groups: Vec<Group> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_failure(input, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let center: usize = field(1)
            .parse()
            .map_err(|_| parse_failure(input, line, format!("bad center_index `{}`", field(1))))?;
        let date = match field(2) {
            "" => None,
            d => Some(
                NaiveDate::parse_from_str(d, "%Y-%m-%d")
                    .map_err(|_| parse_failure(input, line, format!("bad center_date `{d}`")))?,
            ),
        };
        let measure: Measure = field(3)
            .parse()
            .map_err(|e: Error| parse_failure(input, line, e.to_string()))?;
        let value = match (field(4), field(5)) {
            (_, status) if status != "ok" => None,
            ("", _) => None,
            (v, _) => Some(
                v.parse::<f64>()
                    .map_err(|_| parse_failure(input, line, format!("bad value `{v}`")))?,
            ),
        };
        let label = field(0);
        let point = Point { center, date, value };
        match groups.iter_mut().find(|g| g.label == label && g.measure == measure) {
            Some(g) => g.points.push(point),
            None => groups.push(Group {
                label: label.to_string(),
                measure,
                points: vec![point],
            }),
        }
    }
    Ok(groups)
}

fn in_range(range: &Range, p: &Point) -> Option<bool> {
    match *range {
        Range::All => Some(true),
        Range::Indices(a, b) => Some((a..=b).contains(&p.center)),
        Range::Dates(a, b) => p.date.map(|d| a <= d && d <= b),
    }
}

struct Evaluation {
    label: String,
    measure: Measure,
    range: Range,
    present: usize,
    result: Result<TrendResult, Error>,
}

fn evaluate(group: &Group, range: Range, alpha: f64) -> Evaluation {
    let selected: Result<Vec<Option<f64>>, Error> = group
        .points
        .iter()
        .filter_map(|p| match in_range(&range, p) {
            None => Some(Err(Error::InvalidInput("window centers carry no dates".into()))),
            Some(true) => Some(Ok(p.value)),
            Some(false) => None,
        })
        .collect();
    let (present, result) = match selected {
        Ok(values) => (
            values.iter().flatten().count(),
            mann_kendall_modified_gapped(&values, alpha),
        ),
        Err(e) => (0, Err(e)),
    };
    Evaluation {
        label: group.label.clone(),
        measure: group.measure,
        range,
        present,
        result,
    }
}

const TREND_COLUMNS: &[&str] = &[
    "label",
    "measure",
    "range_start",
    "range_end",
    "n",
    "S",
    "tau",
    "variance",
    "variance_uncorrected",
    "z",
    "p",
    "direction",
    "n_effective_ratio",
    "status",
];

fn trend_row(e: &Evaluation) -> Vec<Cell> {
    let (start, end) = e.range.bounds();
    let mut row: Vec<Cell> = vec![
        e.label.as_str().into(),
        e.measure.name().into(),
        start.into(),
        end.into(),
    ];
    match &e.result {
        Ok(r) => row.extend([
            r.n.into(),
            r.s.into(),
            r.tau.into(),
            r.variance.into(),
            r.variance_uncorrected.into(),
            r.z.into(),
            r.p.into(),
            r.direction.name().into(),
            r.n_effective_ratio.into(),
            if r.small_sample { "small_sample" } else { "ok" }.into(),
        ]),
        Err(err) => {
            row.push(e.present.into());
            row.resize(TREND_COLUMNS.len() - 1, Cell::Empty);
            row.push(error_tag(err).into());
        }
    }
    row
}

pub fn run(base: &Base, plan: &TrendPlan) -> Result<Outcome, CliError> {
    let loaded: Vec<Result<Vec<Group>, Failure>> = base.inputs.par_iter().map(read_long).collect();
    for f in loaded.iter().filter_map(|r| r.as_ref().err()) {
        f.report();
    }

    let jobs: Vec<(&Group, Range)> = loaded
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .flatten()
        .filter(|g| plan.measures.is_empty() || plan.measures.contains(&g.measure))
        .flat_map(|g| plan.ranges.iter().map(move |&r| (g, r)))
        .collect();
    let evaluations: Vec<Evaluation> = jobs
        .par_iter()
        .map(|&(g, r)| evaluate(g, r, plan.alpha))
        .collect();

    let mut metadata = vec![
        ("command".to_string(), "trend".to_string()),
        ("alpha".to_string(), fmt_num(plan.alpha)),
        (
            "ranges".to_string(),
            plan.ranges.iter().map(Range::describe).collect::<Vec<_>>().join(";"),
        ),
        (
            "measures".to_string(),
            if plan.measures.is_empty() {
                "all".to_string()
            } else {
                plan.measures.iter().map(|m| m.name()).collect::<Vec<_>>().join(";")
            },
        ),
    ];
    let mut full = metadata.clone();
    full.extend(input_metadata(&base.inputs));
    let mut table = Table::new(full, TREND_COLUMNS);
    for e in &evaluations {
        table.push(trend_row(e));
    }

    let out = &base.output;
    let save = |t: &Table, stem: &str| t.save(out, stem).map_err(|e| CliError::output(&out.out_dir.join(stem), e));
    save(&table, "trend")?;
    metadata.retain(|(k, _)| k == "command");
    save(&status_table(metadata, &base.inputs, &loaded), "status")?;

    Ok(Outcome {
        failed_inputs: count_failures(&loaded),
        total_inputs: base.inputs.len(),
        other_failures: 0,
    })
}
