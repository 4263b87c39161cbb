//! Run configuration, the analysis pipeline and artifact writing.

pub mod report;
pub mod svg;

use crate::conditions::{check_level, ConditionReport};
use crate::continuity::{assess, probes_from_document, ContinuityReport, Thresholds};
use crate::document::parse_document;
use crate::index::{check_kernel_condition, models_from_document, IndexError, KernelReport};
use crate::raster::Resolution;
use crate::spectrum::{spec_from_document, SpecError};
use crate::tower::{build_tower, is_delta_perfect, sample_fibers, FiberPoint, Tower, TowerError, FIBER_DEPTH};
use crate::verdict::{decide, Verdict, VerdictError};
use rayon::prelude::*;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Caps the worker pool when set to a positive integer.
pub const THREADS_ENV: &str = "CALKIN_LIFT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Verdict(#[from] VerdictError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub depth: u32,
    pub resolution: Resolution,
    pub canonical_fibers: usize,
    pub twisted_fibers: usize,
    pub seed: u64,
    pub assume_normal_lifts: bool,
    /// Standard output when absent.
    pub report: Option<PathBuf>,
    pub svg_dir: Option<PathBuf>,
    pub thresholds: Thresholds,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            depth: 8,
            resolution: Resolution::default(),
            canonical_fibers: 16,
            twisted_fibers: 16,
            seed: 0,
            assume_normal_lifts: false,
            report: None,
            svg_dir: None,
            thresholds: Thresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.depth == 0 {
            return Err(CliError::Config("depth must be at least 1".into()));
        }
        self.resolution
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.canonical_fibers == 0 || self.twisted_fibers == 0 {
            return Err(CliError::Config("fiber counts must be positive".into()));
        }
        Ok(())
    }
}

/// Parse `N` (both kinds) or `C,T` (canonical, twisted).
pub fn parse_fibers(s: &str) -> Result<(usize, usize), String> {
    let count = |x: &str| -> Result<usize, String> {
        x.trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| format!("fiber count must be a positive integer, got `{x}`"))
    };
    match s.split_once(',') {
        Some((c, t)) => Ok((count(c)?, count(t)?)),
        None => {
            let n = count(s)?;
            Ok((n, n))
        }
    }
}

/// Parse a `key=value` threshold override.
pub fn parse_threshold(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Everything the pipeline computed, plus the serialized report.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub tower: Tower,
    pub conditions: Vec<ConditionReport>,
    pub fibers: Vec<FiberPoint>,
    pub kernel: KernelReport,
    pub continuity: ContinuityReport,
    pub verdict: Verdict,
    pub report_json: String,
}

impl Analysis {
    pub fn exit_code(&self) -> i32 {
        self.verdict.classification.exit_code()
    }
}

/// Run the pipeline on document text without touching the filesystem.
pub fn analyze(text: &str, cfg: &RunConfig) -> Result<Analysis, CliError> {
    cfg.validate()?;
    let doc = parse_document(text).map_err(SpecError::from)?;
    let spec = spec_from_document(&doc)?;
    let model = models_from_document(&doc)?;
    let probes = probes_from_document(&doc, cfg.depth.max(FIBER_DEPTH))?;

    let tower = build_tower(&spec, cfg.depth, cfg.resolution)?;
    let conditions: Vec<ConditionReport> = tower
        .levels
        .par_iter()
        .map(|l| check_level(l, &spec))
        .collect();
    let kernel = check_kernel_condition(&tower, model.as_ref(), cfg.assume_normal_lifts)?;
    let fibers = sample_fibers(&tower, cfg.canonical_fibers, cfg.twisted_fibers, cfg.seed);
    let continuity = assess(&tower, &fibers, &probes, &cfg.thresholds).map_err(CliError::Config)?;
    let perfectness = is_delta_perfect(&tower);
    let verdict = decide(&tower, &conditions, &kernel, &continuity, perfectness)?;

    let levels = tower
        .levels
        .iter()
        .zip(&conditions)
        .map(|(l, c)| report::level_report(l, c))
        .collect();
    let doc_report = report::Report {
        meta: report::Meta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            depth: cfg.depth,
            resolution: cfg.resolution,
            canonical_fibers: cfg.canonical_fibers,
            twisted_fibers: cfg.twisted_fibers,
            fiber_depth: tower.fiber_depth(),
            seed: cfg.seed,
            assume_normal_lifts: cfg.assume_normal_lifts,
            thresholds: cfg.thresholds,
        },
        spec_echo: report::SpecEcho {
            name: spec.name.as_deref(),
            primitives: &spec,
            model: model.as_ref(),
            document: spec.to_document(),
        },
        tower_summary: report::tower_summary(&tower, &verdict),
        levels,
        kernel: &kernel,
        continuity: &continuity,
        verdict: &verdict,
    };
    let report_json = report::to_json(&doc_report)?;
    Ok(Analysis {
        tower,
        conditions,
        fibers,
        kernel,
        continuity,
        verdict,
        report_json,
    })
}

fn write_atomically(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    // Devices and pipes are written in place; renaming over them would replace them.
    if let Ok(meta) = fs::metadata(path) {
        if !meta.is_file() {
            return fs::write(path, contents).map_err(err);
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(err)
}

pub fn write_svgs(a: &Analysis, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let err = |source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(err)?;
    let mut written = Vec::new();
    for level in &a.tower.levels {
        let path = dir.join(format!("level_{:02}.svg", level.n));
        write_atomically(&path, svg::level_svg(&a.tower, level).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Run the whole pipeline and write its artifacts. The report goes last, so a
/// failure anywhere leaves no report behind.
pub fn run(cfg: &RunConfig) -> Result<Analysis, CliError> {
    let text = fs::read_to_string(&cfg.input).map_err(|source| CliError::Read {
        path: cfg.input.clone(),
        source,
    })?;
    let a = analyze(&text, cfg)?;
    if let Some(dir) = &cfg.svg_dir {
        write_svgs(&a, dir)?;
    }
    match &cfg.report {
        Some(path) => write_atomically(path, a.report_json.as_bytes())?,
        None => std::io::stdout()
            .lock()
            .write_all(a.report_json.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            })?,
    }
    Ok(a)
}

/// Size the global worker pool from the environment; ignored if already built.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_counts() {
        assert_eq!(parse_fibers("16"), Ok((16, 16)));
        assert_eq!(parse_fibers("4,9"), Ok((4, 9)));
        assert!(parse_fibers("0").is_err());
        assert!(parse_fibers("3,x").is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(parse_threshold("o2n_ratio=3"), Ok(("o2n_ratio".into(), "3".into())));
        assert!(parse_threshold("o2n_ratio").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new("x");
        assert!(c.validate().is_ok());
        c.resolution.theta_cells = 1000;
        assert!(c.validate().is_err());
        let mut c = RunConfig::new("x");
        c.twisted_fibers = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn malformed_document_is_an_error() {
        let cfg = RunConfig::new("x");
        assert!(matches!(analyze("[[primitive]\n", &cfg), Err(CliError::Spec(_))));
        assert!(matches!(
            analyze("[[primitive]]\nkind = \"blob\"\n", &cfg),
            Err(CliError::Spec(_))
        ));
    }
}
