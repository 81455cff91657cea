use std::fs::File;

use rqnet_core::analysis::{prepare, PreprocessConfig, Prepared};
use rqnet_core::preprocess::read_price_csv;
use rqnet_core::window::error_tag;
use rqnet_core::Error;

use crate::config::{input_metadata, InputSpec};
use crate::output::{Cell, Table};

/// Why one market produced no output.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub label: String,
    pub tag: String,
    pub message: String,
}

impl Failure {
    pub fn from_error(input: &InputSpec, e: &Error) -> Self {
        Self {
            label: input.label.clone(),
            tag: error_tag(e),
            message: format!("{}: {e}", input.path.display()),
        }
    }

    pub fn report(&self) {
        eprintln!("error: {}: {}", self.label, self.message);
    }
}

pub fn load(input: &InputSpec, cfg: &PreprocessConfig) -> Result<Prepared<f64>, Failure> {
    let file = File::open(&input.path).map_err(|e| Failure {
        label: input.label.clone(),
        tag: "Io".into(),
        message: format!("{}: {e}", input.path.display()),
    })?;
    let raw = read_price_csv(file, input.label.clone()).map_err(|e| Failure::from_error(input, &e))?;
    prepare(&raw, cfg).map_err(|e| Failure::from_error(input, &e))
}

/// One row per input: `ok` or the failure tag and message.
pub fn status_table<T>(
    metadata: Vec<(String, String)>,
    inputs: &[InputSpec],
    results: &[Result<T, Failure>],
) -> Table {
    let mut meta = metadata;
    meta.extend(input_metadata(inputs));
    let mut t = Table::new(meta, &["label", "status", "detail"]);
    for (input, result) in inputs.iter().zip(results) {
        let row: Vec<Cell> = match result {
            Ok(_) => vec![input.label.as_str().into(), "ok".into(), Cell::Empty],
            Err(f) => vec![f.label.as_str().into(), f.tag.as_str().into(), f.message.as_str().into()],
        };
        t.push(row);
    }
    t
}

pub fn count_failures<T>(results: &[Result<T, Failure>]) -> usize {
    results.iter().filter(|r| r.is_err()).count()
}
