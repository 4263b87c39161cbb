//! The JSON report. Floats are written with 17 significant digits.

use crate::arcs::Arc;
use crate::conditions::ConditionReport;
use crate::continuity::{ContinuityReport, Thresholds};
use crate::index::{KernelReport, OperatorModel};
use crate::raster::Resolution;
use crate::spectrum::{SpectrumSpec, StripBounds};
use crate::tower::{Level, Perfectness, Tower};
use crate::verdict::{HomotopyClass, Verdict};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io;

/// Schema the report is published against.
pub const SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Finite point lists longer than this are summarized by their count.
const MAX_LISTED_POINTS: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub depth: u32,
    pub resolution: Resolution,
    pub canonical_fibers: usize,
    pub twisted_fibers: usize,
    pub fiber_depth: u32,
    pub seed: u64,
    pub assume_normal_lifts: bool,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecEcho<'a> {
    pub name: Option<&'a str>,
    pub primitives: &'a SpectrumSpec,
    pub model: Option<&'a OperatorModel>,
    pub document: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TowerSummary {
    pub depth: u32,
    pub bounds: StripBounds,
    pub all_finite: bool,
    pub homotopy_class: HomotopyClass,
    pub perfectness: Perfectness,
    pub sizes: Vec<usize>,
    pub ext_ranks: Vec<usize>,
}

/// Consecutive raster rows sharing the same section.
#[derive(Debug, Clone, Serialize)]
pub struct SectionBand {
    pub row_lo: i64,
    pub row_hi: i64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub arcs: Vec<Arc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport<'a> {
    pub n: u32,
    pub finite: bool,
    pub size: usize,
    pub points: Option<&'a [Complex64]>,
    pub occupied_cells: usize,
    pub antipodal_cells: usize,
    pub ext_rank: usize,
    pub origin_enclosed: bool,
    pub component_samples: &'a [Complex64],
    pub sections: Vec<SectionBand>,
    pub conditions: &'a ConditionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub meta: Meta,
    pub spec_echo: SpecEcho<'a>,
    pub tower_summary: TowerSummary,
    pub levels: Vec<LevelReport<'a>>,
    pub kernel: &'a KernelReport,
    pub continuity: &'a ContinuityReport,
    pub verdict: &'a Verdict,
}

fn section_bands(level: &Level) -> Vec<SectionBand> {
    let mut out: Vec<SectionBand> = Vec::new();
    for s in &level.sections {
        match out.last_mut() {
            Some(b) if b.row_hi + 1 == s.row && b.arcs == s.arcs => {
                b.row_hi = s.row;
                b.u_hi = s.u;
            }
            _ => out.push(SectionBand {
                row_lo: s.row,
                row_hi: s.row,
                u_lo: s.u,
                u_hi: s.u,
                arcs: s.arcs.clone(),
            }),
        }
    }
    out
}

pub fn level_report<'a>(level: &'a Level, conditions: &'a ConditionReport) -> LevelReport<'a> {
    let finite = level.is_finite();
    LevelReport {
        n: level.n,
        finite,
        size: level.size(),
        points: level
            .finite_points
            .as_deref()
            .filter(|p| p.len() <= MAX_LISTED_POINTS),
        occupied_cells: level.omega.occupied_count(),
        antipodal_cells: level.antipodal.occupied_count(),
        ext_rank: level.ext_rank,
        origin_enclosed: level.origin_enclosed,
        component_samples: &level.component_samples,
        sections: if finite { Vec::new() } else { section_bands(level) },
        conditions,
    }
}

pub fn tower_summary(t: &Tower, verdict: &Verdict) -> TowerSummary {
    TowerSummary {
        depth: t.depth,
        bounds: t.bounds,
        all_finite: t.all_finite(),
        homotopy_class: verdict.homotopy_class,
        perfectness: verdict.perfectness.value,
        sizes: t.levels.iter().map(Level::size).collect(),
        ext_ranks: t.levels.iter().map(|l| l.ext_rank).collect(),
    }
}

/// Pretty-printed JSON whose floats always carry 17 significant digits.
struct Fixed17 {
    inner: PrettyFormatter<'static>,
}

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Fixed17 {
            inner: PrettyFormatter::new(),
        },
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_significant_digits() {
        let s = to_json(&vec![0.1, -2.5, 1e-300, 0.0]).unwrap();
        let parsed: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed, vec![0.1, -2.5, 1e-300, 0.0]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e0"), "{s}");
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        assert_eq!(v["type"], "object");
    }
}
