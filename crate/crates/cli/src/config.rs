//! Effective run configuration: flags, then the `--config` file, then defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use rqnet_core::analysis::{AnalysisConfig, PreprocessConfig};
use rqnet_core::embedding::EmbeddingParams;
use rqnet_core::preprocess::Calendar;
use rqnet_core::recurrence::Norm;
use rqnet_core::window::{EmbeddingMode, Measure, WindowConfig};

use crate::args::{CommonArgs, Format, PipelineArgs, Preset, SliceArgs, TrendArgs, WindowArgs};
use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "input",
    "label",
    "jobs",
    "out-dir",
    "format",
    "calendar",
    "detrend-degree",
    "epsilon",
    "norm",
    "embed-m",
    "tau",
    "m-max",
    "max-lag",
    "l-min",
    "v-min",
    "include-loi",
    "preset",
    "window-length",
    "window-step",
    "measure",
    "normalize-windows",
    "alpha",
    "range",
    "start",
    "length",
];

/// Parsed `key = value` file. Repeated keys accumulate; single-valued keys
/// take the last occurrence.
#[derive(Debug, Default)]
pub struct FileConfig {
    source: Option<PathBuf>,
    entries: BTreeMap<String, Vec<(usize, String)>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, Some(path))
    }

    pub fn parse(text: &str, source: Option<&Path>) -> Result<Self, CliError> {
        let origin = source.map_or_else(|| "config".to_string(), |p| p.display().to_string());
        let mut entries: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{origin}:{line_no}: expected `key = value`"
                )));
            };
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("{origin}:{line_no}: unknown key `{key}`")));
            }
            entries
                .entry(key)
                .or_default()
                .push((line_no, value.trim().to_string()));
        }
        Ok(Self {
            source: source.map(Path::to_path_buf),
            entries,
        })
    }

    fn origin(&self) -> String {
        self.source
            .as_ref()
            .map_or_else(|| "config".to_string(), |p| p.display().to_string())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key).and_then(|v| v.last()) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|e| {
                CliError::Config(format!("{}:{line}: invalid {key} `{value}`: {e}", self.origin()))
            }),
        }
    }

    fn all(&self, key: &str) -> Vec<String> {
        self.entries
            .get(key)
            .map(|v| v.iter().map(|(_, s)| s.clone()).collect())
            .unwrap_or_default()
    }

    /// Input paths are taken relative to the file that names them.
    fn path(&self, raw: &str) -> PathBuf {
        let p = PathBuf::from(raw);
        match self.source.as_ref().and_then(|s| s.parent()) {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn parse_all<T: FromStr>(flags: &[String], file: &FileConfig, key: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    let raw = if flags.is_empty() { file.all(key) } else { flags.to_vec() };
    raw.iter()
        .flat_map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()))
        .map(|v| {
            v.parse()
                .map_err(|e| CliError::Config(format!("invalid {key} `{v}`: {e}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub path: PathBuf,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct OutputPlan {
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub jobs: Option<usize>,
}

impl OutputPlan {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Base {
    pub inputs: Vec<InputSpec>,
    pub output: OutputPlan,
}

pub fn resolve_base(common: &CommonArgs, file: &FileConfig) -> Result<Base, CliError> {
    let paths: Vec<PathBuf> = if common.inputs.is_empty() {
        file.all("input").iter().map(|p| file.path(p)).collect()
    } else {
        common.inputs.clone()
    };
    if paths.is_empty() {
        return Err(CliError::Config("no --input given".into()));
    }
    let labels = if common.labels.is_empty() { file.all("label") } else { common.labels.clone() };
    if !labels.is_empty() && labels.len() != paths.len() {
        return Err(CliError::Config(format!(
            "{} labels given for {} inputs",
            labels.len(),
            paths.len()
        )));
    }
    let inputs: Vec<InputSpec> = paths
        .iter()
        .enumerate()
        .map(|(k, path)| InputSpec {
            path: path.clone(),
            label: labels.get(k).cloned().unwrap_or_else(|| {
                path.file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
            }),
        })
        .collect();
    let mut seen_paths = BTreeSet::new();
    let mut seen_labels = BTreeSet::new();
    for input in &inputs {
        if !seen_paths.insert(&input.path) {
            return Err(CliError::Config(format!("input {} given twice", input.path.display())));
        }
        if !seen_labels.insert(&input.label) {
            return Err(CliError::Config(format!("label `{}` used twice", input.label)));
        }
    }

    let formats: Vec<Format> = if common.formats.is_empty() {
        file.all("format")
            .iter()
            .map(|f| {
                <Format as clap::ValueEnum>::from_str(f, true)
                    .map_err(|_| CliError::Config(format!("unknown format `{f}`")))
            })
            .collect::<Result<_, _>>()?
    } else {
        common.formats.clone()
    };
    let mut formats = if formats.is_empty() { vec![Format::Csv] } else { formats };
    formats.dedup();

    let jobs = pick(common.jobs, file, "jobs")?;
    if jobs == Some(0) {
        return Err(CliError::Config("--jobs must be positive".into()));
    }
    Ok(Base {
        inputs,
        output: OutputPlan {
            out_dir: match &common.out_dir {
                Some(d) => d.clone(),
                None => file
                    .all("out-dir")
                    .last()
                    .map_or_else(|| PathBuf::from("rqnet-out"), |d| file.path(d)),
            },
            formats,
            jobs,
        },
    })
}

/// Preprocessing and whole-series analysis settings.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub preprocess: PreprocessConfig,
    pub analysis: AnalysisConfig,
}

fn parse_calendar(raw: &str) -> Result<Option<Calendar>, CliError> {
    if raw.trim().eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|e| CliError::Config(format!("{e}")))
}

pub fn resolve_pipeline(args: &PipelineArgs, file: &FileConfig) -> Result<Pipeline, CliError> {
    let mut preprocess = PreprocessConfig::default();
    if let Some(raw) = pick(args.calendar.clone(), file, "calendar")? {
        preprocess.calendar = parse_calendar(&raw)?;
    }
    if let Some(d) = pick(args.detrend_degree, file, "detrend-degree")? {
        preprocess.detrend_degree = d;
    }

    let mut analysis = AnalysisConfig::default();
    if let Some(eps) = pick(args.epsilon, file, "epsilon")? {
        analysis.epsilon = eps;
    }
    if !(analysis.epsilon > 0.0 && analysis.epsilon.is_finite()) {
        return Err(CliError::Config(format!("epsilon must be positive, got {}", analysis.epsilon)));
    }
    if let Some(norm) = pick(args.norm.clone(), file, "norm")? {
        analysis.norm = Norm::from_str(&norm).map_err(|e| CliError::Config(e.to_string()))?;
    }
    analysis.forced_dimension = pick(args.embed_m, file, "embed-m")?;
    analysis.forced_delay = pick(args.tau, file, "tau")?;
    if analysis.forced_dimension == Some(0) || analysis.forced_delay == Some(0) {
        return Err(CliError::Config("--embed-m and --tau must be positive".into()));
    }
    if let Some(m) = pick(args.m_max, file, "m-max")? {
        analysis.m_max = m;
    }
    if let Some(lag) = pick(args.max_lag, file, "max-lag")? {
        analysis.max_lag = lag;
    }
    if let Some(l) = pick(args.l_min, file, "l-min")? {
        analysis.rqa.l_min = l;
    }
    if let Some(v) = pick(args.v_min, file, "v-min")? {
        analysis.rqa.v_min = v;
    }
    if let Some(loi) = pick(args.include_loi, file, "include-loi")? {
        analysis.rqa.include_loi = loi;
    }
    if analysis.rqa.l_min < 1 || analysis.rqa.v_min < 1 || analysis.m_max < 1 || analysis.max_lag < 1 {
        return Err(CliError::Config("l-min, v-min, m-max and max-lag must be positive".into()));
    }
    Ok(Pipeline {
        preprocess,
        analysis,
    })
}

/// Window settings; the delay of an embedded plan may still be per market.
#[derive(Debug, Clone)]
pub struct WindowPlan {
    pub preset: Option<Preset>,
    pub config: WindowConfig,
    /// Estimate τ for each market and substitute it into `config`.
    pub per_market_delay: bool,
}

impl WindowPlan {
    /// Window configuration for a market with autocorrelation delay `tau`.
    pub fn for_delay(&self, tau: usize) -> WindowConfig {
        let mut cfg = self.config.clone();
        if let (true, EmbeddingMode::Global(p)) = (self.per_market_delay, cfg.embedding) {
            cfg.embedding = EmbeddingMode::Global(EmbeddingParams {
                dimension: p.dimension,
                delay: tau,
            });
        }
        cfg
    }

    pub fn needs_delay(&self) -> bool {
        self.per_market_delay && matches!(self.config.embedding, EmbeddingMode::Global(_))
    }
}

pub fn resolve_window(
    args: &WindowArgs,
    pipeline: &Pipeline,
    file: &FileConfig,
) -> Result<WindowPlan, CliError> {
    let preset = match &args.preset {
        Some(p) => Some(*p),
        None => match file.all("preset").last() {
            Some(raw) => Some(
                <Preset as clap::ValueEnum>::from_str(raw, true)
                    .map_err(|_| CliError::Config(format!("unknown preset `{raw}`")))?,
            ),
            None => None,
        },
    };
    let length = pick(args.window_length, file, "window-length")?;
    let step = pick(args.window_step, file, "window-step")?;
    let analysis = &pipeline.analysis;

    let (mut config, per_market_delay) = match (preset, length, step) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(CliError::Config(
                "give either --preset or --window-length/--window-step, not both".into(),
            ))
        }
        (Some(Preset::Gfc), None, None) => {
            let mut cfg = WindowConfig::gfc(analysis.forced_delay.unwrap_or(1));
            if let (Some(m), EmbeddingMode::Global(p)) = (analysis.forced_dimension, cfg.embedding) {
                cfg.embedding = EmbeddingMode::Global(EmbeddingParams {
                    dimension: m,
                    delay: p.delay,
                });
            }
            (cfg, analysis.forced_delay.is_none())
        }
        (Some(Preset::Short), None, None) => {
            if analysis.forced_dimension.is_some() || analysis.forced_delay.is_some() {
                return Err(CliError::Config("preset short does not embed; drop --embed-m/--tau".into()));
            }
            (WindowConfig::short(), false)
        }
        (None, Some(length), Some(step)) => {
            let mut cfg = WindowConfig::short();
            cfg.length = length;
            cfg.step = step;
            cfg.measures = Measure::ALL.to_vec();
            let embedded = analysis.forced_dimension.is_some();
            if let Some(m) = analysis.forced_dimension {
                cfg.embedding = EmbeddingMode::Global(EmbeddingParams {
                    dimension: m,
                    delay: analysis.forced_delay.unwrap_or(1),
                });
            }
            (cfg, embedded && analysis.forced_delay.is_none())
        }
        (None, _, _) => {
            return Err(CliError::Config(
                "windows needs --preset or both --window-length and --window-step".into(),
            ))
        }
    };
    config.epsilon = analysis.epsilon;
    config.norm = analysis.norm;
    config.rqa = analysis.rqa;
    let measures: Vec<Measure> = parse_all(&args.measures, file, "measure")?;
    if !measures.is_empty() {
        config.measures = measures;
    }
    if let Some(flag) = pick(args.normalize_windows, file, "normalize-windows")? {
        config.normalize_windows = flag;
    }
    let warnings = config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(WindowPlan {
        preset,
        config,
        per_market_delay,
    })
}

/// Inclusive selection of window centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    All,
    Dates(NaiveDate, NaiveDate),
    Indices(usize, usize),
}

impl Range {
    pub fn bounds(&self) -> (String, String) {
        match self {
            Range::All => (String::new(), String::new()),
            Range::Dates(a, b) => (a.to_string(), b.to_string()),
            Range::Indices(a, b) => (a.to_string(), b.to_string()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Range::All => "all".into(),
            _ => {
                let (a, b) = self.bounds();
                format!("{a}:{b}")
            }
        }
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Range::All);
        }
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| "expected START:END".to_string())?;
        let (a, b) = (a.trim(), b.trim());
        if let (Ok(x), Ok(y)) = (a.parse::<usize>(), b.parse::<usize>()) {
            return if x <= y {
                Ok(Range::Indices(x, y))
            } else {
                Err("range is empty".into())
            };
        }
        let x = NaiveDate::parse_from_str(a, "%Y-%m-%d").map_err(|e| e.to_string())?;
        let y = NaiveDate::parse_from_str(b, "%Y-%m-%d").map_err(|e| e.to_string())?;
        if x <= y {
            Ok(Range::Dates(x, y))
        } else {
            Err("range is empty".into())
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrendPlan {
    pub alpha: f64,
    pub ranges: Vec<Range>,
    /// Empty means every measure found in the input.
    pub measures: Vec<Measure>,
}

pub fn resolve_trend(args: &TrendArgs, file: &FileConfig) -> Result<TrendPlan, CliError> {
    let alpha = pick(args.alpha, file, "alpha")?.unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let ranges_raw = if args.ranges.is_empty() { file.all("range") } else { args.ranges.clone() };
    let ranges = ranges_raw
        .iter()
        .map(|r| {
            r.parse::<Range>()
                .map_err(|e| CliError::Config(format!("invalid range `{r}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut measures: Vec<Measure> = parse_all(&args.measures, file, "measure")?;
    measures.sort();
    measures.dedup();
    Ok(TrendPlan {
        alpha,
        ranges: if ranges.is_empty() { vec![Range::All] } else { ranges },
        measures,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SlicePlan {
    pub start: usize,
    pub length: Option<usize>,
}

pub fn resolve_slice(args: &SliceArgs, file: &FileConfig) -> Result<SlicePlan, CliError> {
    let start = pick(args.start, file, "start")?.unwrap_or(0);
    let length = pick(args.length, file, "length")?;
    if length.is_some_and(|l| l < 2) {
        return Err(CliError::Config("--length must be at least 2".into()));
    }
    Ok(SlicePlan { start, length })
}

/// `key=value` pairs describing a pipeline, for output headers.
pub fn pipeline_metadata(p: &Pipeline) -> Vec<(String, String)> {
    let a = &p.analysis;
    let opt = |v: Option<usize>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
    vec![
        (
            "calendar".into(),
            p.preprocess
                .calendar
                .map_or_else(|| "none".to_string(), |c| format!("{c:?}").to_lowercase()),
        ),
        ("detrend_degree".into(), p.preprocess.detrend_degree.to_string()),
        ("epsilon".into(), crate::output::fmt_num(a.epsilon)),
        ("norm".into(), a.norm.name().into()),
        ("embed_m".into(), opt(a.forced_dimension)),
        ("tau".into(), opt(a.forced_delay)),
        ("m_max".into(), a.m_max.to_string()),
        ("max_lag".into(), a.max_lag.to_string()),
        ("fnn_rtol".into(), crate::output::fmt_num(a.fnn.r_tol)),
        ("fnn_atol".into(), crate::output::fmt_num(a.fnn.a_tol)),
        ("fnn_threshold".into(), crate::output::fmt_num(a.fnn.fraction_threshold)),
        ("l_min".into(), a.rqa.l_min.to_string()),
        ("v_min".into(), a.rqa.v_min.to_string()),
        ("include_loi".into(), a.rqa.include_loi.to_string()),
    ]
}

pub fn window_metadata(plan: &WindowPlan) -> Vec<(String, String)> {
    let c = &plan.config;
    let (m, tau) = match c.embedding {
        EmbeddingMode::None => ("none".to_string(), "none".to_string()),
        EmbeddingMode::Global(p) => (
            p.dimension.to_string(),
            if plan.per_market_delay { "per-market".to_string() } else { p.delay.to_string() },
        ),
    };
    vec![
        ("preset".into(), plan.preset.map_or("explicit", Preset::name).into()),
        ("window_length".into(), c.length.to_string()),
        ("window_step".into(), c.step.to_string()),
        ("window_m".into(), m),
        ("window_tau".into(), tau),
        (
            "measures".into(),
            c.measures.iter().map(|m| m.name()).collect::<Vec<_>>().join(";"),
        ),
        ("normalize_windows".into(), c.normalize_windows.to_string()),
    ]
}

pub fn input_metadata(inputs: &[InputSpec]) -> Vec<(String, String)> {
    inputs
        .iter()
        .map(|i| (format!("input.{}", i.label), i.path.display().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let cfg = FileConfig::parse(
            "# batch\ninput = a.csv\ninput = b.csv\nepsilon = 0.3\nembed_m=4\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.all("input"), vec!["a.csv", "b.csv"]);
        assert_eq!(cfg.get::<f64>("epsilon").unwrap(), Some(0.3));
        assert_eq!(cfg.get::<usize>("embed-m").unwrap(), Some(4));
        assert!(FileConfig::parse("bogus = 1", None).is_err());
        assert!(FileConfig::parse("epsilon", None).is_err());
        let bad = FileConfig::parse("epsilon = x", None).unwrap();
        assert!(bad.get::<f64>("epsilon").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig::parse("epsilon = 0.3\ndetrend-degree = 2\n", None).unwrap();
        let args = PipelineArgs {
            epsilon: Some(0.1),
            ..Default::default()
        };
        let p = resolve_pipeline(&args, &file).unwrap();
        assert_eq!(p.analysis.epsilon, 0.1);
        assert_eq!(p.preprocess.detrend_degree, 2);
    }

    #[test]
    fn ranges() {
        assert_eq!("all".parse::<Range>(), Ok(Range::All));
        assert_eq!("3:9".parse::<Range>(), Ok(Range::Indices(3, 9)));
        assert!(matches!("2007-06-01:2008-08-31".parse::<Range>(), Ok(Range::Dates(..))));
        assert!("9:3".parse::<Range>().is_err());
        assert!("2008-01-01:2007-01-01".parse::<Range>().is_err());
        assert!("2008-01-01".parse::<Range>().is_err());
    }

    #[test]
    fn window_plan_rules() {
        let file = FileConfig::default();
        let pipeline = resolve_pipeline(&PipelineArgs::default(), &file).unwrap();
        let none = resolve_window(&WindowArgs::default(), &pipeline, &file);
        assert!(matches!(none, Err(CliError::Config(_))));

        let both = WindowArgs {
            preset: Some(Preset::Short),
            window_length: Some(100),
            ..Default::default()
        };
        assert!(resolve_window(&both, &pipeline, &file).is_err());

        let gfc = WindowArgs {
            preset: Some(Preset::Gfc),
            ..Default::default()
        };
        let plan = resolve_window(&gfc, &pipeline, &file).unwrap();
        assert!(plan.needs_delay());
        assert_eq!(
            plan.for_delay(120).embedding,
            EmbeddingMode::Global(EmbeddingParams {
                dimension: 4,
                delay: 120
            })
        );

        let explicit = WindowArgs {
            window_length: Some(300),
            window_step: Some(20),
            measures: vec!["det,lam".into()],
            ..Default::default()
        };
        let plan = resolve_window(&explicit, &pipeline, &file).unwrap();
        assert_eq!(plan.config.measures, vec![Measure::Det, Measure::Lam]);
        assert_eq!(plan.config.embedding, EmbeddingMode::None);
    }

    #[test]
    fn duplicate_inputs_rejected() {
        let common = CommonArgs {
            inputs: vec!["a.csv".into(), "a.csv".into()],
            ..Default::default()
        };
        assert!(resolve_base(&common, &FileConfig::default()).is_err());
        let common = CommonArgs {
            inputs: vec!["x/a.csv".into(), "y/a.csv".into()],
            ..Default::default()
        };
        assert!(resolve_base(&common, &FileConfig::default()).is_err());
        let common = CommonArgs {
            inputs: vec!["x/a.csv".into(), "y/a.csv".into()],
            labels: vec!["A".into(), "B".into()],
            ..Default::default()
        };
        let base = resolve_base(&common, &FileConfig::default()).unwrap();
        assert_eq!(base.inputs[1].label, "B");
        assert_eq!(base.output.formats, vec![Format::Csv]);
    }
}
