#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Datelike, NaiveDate, Weekday};

/// Consecutive weekdays starting at `start`.
pub fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

/// Writes a `date,close` file with one weekday per value.
pub fn write_prices(path: &Path, values: &[f64]) {
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    let mut text = String::from("date,close\n");
    for (d, v) in weekdays(start, values.len()).iter().zip(values) {
        text.push_str(&format!("{d},{v}\n"));
    }
    std::fs::write(path, text).unwrap();
}

pub fn rqnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Column names and rows of a CSV file, comment lines skipped.
pub fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let headers = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

pub fn column(headers: &[String], name: &str) -> usize {
    headers
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

/// Values of one measure from a long-format window file, in window order.
pub fn measure_values(path: &Path, label: &str, measure: &str) -> Vec<Option<f64>> {
    let (h, rows) = read_table(path);
    let (l, m, v) = (column(&h, "label"), column(&h, "measure"), column(&h, "value"));
    rows.iter()
        .filter(|r| r[l] == label && r[m] == measure)
        .map(|r| r[v].parse().ok())
        .collect()
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}
