//! Three-valued geometric conditions on a single level: antipodal separation,
//! empty direction and the cross retract, plus the global bounded-Im and
//! half-line section tests.

use crate::arcs::{Arc, ArcSet, ANGLE_EPS};
use crate::raster::{separation_cells, separation_distance};
use crate::spectrum::{section_at, ImSet, Section, SpectrumSpec};
use crate::tower::{Level, PointLookup};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2, TAU};

/// Separation holds from this many cells on.
pub const SEPARATION_HOLDS_CELLS: f64 = 3.0;

/// Strict inequalities on arc lengths must survive this many θ-cells.
pub const ARC_MARGIN_CELLS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Separation {
    Holds {
        #[serde(serialize_with = "crate::real::serialize")]
        distance: f64,
        #[serde(serialize_with = "crate::real::serialize_opt")]
        distance_cells: Option<f64>,
    },
    Fails {
        distance: f64,
        distance_cells: f64,
    },
    Inconclusive {
        distance: f64,
        distance_cells: f64,
    },
}

impl Separation {
    pub fn holds(&self) -> bool {
        matches!(self, Separation::Holds { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EmptyDirection {
    Holds { alpha: f64, gap_width: f64 },
    Fails { reason: String },
    Inconclusive { reason: String },
}

impl EmptyDirection {
    pub fn holds(&self) -> bool {
        matches!(self, EmptyDirection::Holds { .. })
    }
}

/// Points on the open half-circles `(β, β+π)` and `(β+π, β+2π)` that a circle
/// section misses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusGaps {
    pub u: f64,
    pub beta: f64,
    pub upper_gap: f64,
    pub lower_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CrossRetract {
    Holds {
        alpha: f64,
        theta: f64,
        max_component: f64,
        gaps: Vec<RadiusGaps>,
    },
    Fails { reason: String, u: f64 },
    Inconclusive { reason: String },
}

impl CrossRetract {
    pub fn holds(&self) -> bool {
        matches!(self, CrossRetract::Holds { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedIm {
    pub holds: bool,
    #[serde(serialize_with = "crate::real::serialize_opt")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HalflineSections {
    Holds { checked: Vec<f64> },
    Fails { reason: String },
}

impl HalflineSections {
    pub fn holds(&self) -> bool {
        matches!(self, HalflineSections::Holds { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub level: u32,
    pub separation: Separation,
    pub empty_direction: EmptyDirection,
    pub cross_retract: CrossRetract,
    pub bounded_im: BoundedIm,
    pub halfline_sections: HalflineSections,
    pub evidence: Vec<String>,
}

impl ConditionReport {
    /// Separation together with one of the two sufficient conditions.
    pub fn surjective(&self) -> bool {
        self.separation.holds() && (self.empty_direction.holds() || self.cross_retract.holds())
    }
}

pub fn check_separation(level: &Level) -> Separation {
    if let Some(points) = &level.finite_points {
        return finite_separation(points);
    }
    let a = &level.antipodal;
    let rest = level
        .omega
        .cellwise_and_not(a)
        .expect("antipodal set shares the level geometry");
    if a.is_empty() || rest.is_empty() {
        return Separation::Holds {
            distance: f64::INFINITY,
            distance_cells: None,
        };
    }
    let cells = separation_cells(&rest, a).expect("same geometry");
    let distance = separation_distance(&rest, a).expect("same geometry");
    if cells >= SEPARATION_HOLDS_CELLS {
        Separation::Holds {
            distance,
            distance_cells: Some(cells),
        }
    } else if cells <= SQRT_2 + 1e-9 {
        Separation::Fails {
            distance,
            distance_cells: cells,
        }
    } else {
        Separation::Inconclusive {
            distance,
            distance_cells: cells,
        }
    }
}

/// Disjoint finite sets are always a positive distance apart.
fn finite_separation(points: &[Complex64]) -> Separation {
    let lookup = PointLookup::new(points);
    let (anti, rest): (Vec<Complex64>, Vec<Complex64>) = points.iter().partition(|&&p| lookup.contains(-p));
    let distance = if anti.is_empty() || rest.is_empty() {
        f64::INFINITY
    } else {
        let mut d = f64::INFINITY;
        for a in &anti {
            for r in &rest {
                d = d.min((a - r).norm());
            }
        }
        d
    };
    Separation::Holds {
        distance,
        distance_cells: None,
    }
}

/// Union of the angular images of a level.
fn angular_image(level: &Level) -> ArcSet {
    match &level.finite_points {
        Some(points) => ArcSet::from_arcs(points.iter().map(|p| Arc::new(p.arg(), p.arg()))),
        None => level
            .images
            .iter()
            .fold(ArcSet::empty(), |acc, img| acc.union(&img.theta)),
    }
}

pub fn check_empty_direction(level: &Level) -> EmptyDirection {
    let set = angular_image(level);
    if set.is_full() {
        return EmptyDirection::Fails {
            reason: "every direction meets the level".into(),
        };
    }
    let gaps = set.gaps();
    let Some(widest) = gaps.iter().copied().max_by(|a, b| a.len().total_cmp(&b.len())) else {
        return EmptyDirection::Fails {
            reason: "every direction meets the level".into(),
        };
    };
    let cell = level.omega.geom.theta_step();
    let pi_gap = gaps.iter().find(|g| g.contains(PI, 0.0) && !set.contains(PI, cell));
    let (alpha, gap) = match pi_gap {
        Some(g) => (PI, *g),
        None => (widest.midpoint(), widest),
    };
    if level.finite_points.is_none() {
        let col = level.omega.geom.col_of(alpha);
        if level.omega.row_range().any(|r| level.omega.get(r, col)) {
            return EmptyDirection::Inconclusive {
                reason: format!("direction {alpha:.6} is free symbolically but its raster column is hit"),
            };
        }
    }
    EmptyDirection::Holds {
        alpha,
        gap_width: gap.len(),
    }
}

/// Angular sections grouped by radius, when the level lives on finitely many circles.
fn sections_by_radius(level: &Level) -> Vec<(f64, ArcSet)> {
    let mut out: Vec<(f64, ArcSet)> = Vec::new();
    for img in &level.images {
        let u = img.u_hi;
        match out.iter_mut().find(|(v, _)| (v - u).abs() <= 1e-12 * (1.0 + u.abs())) {
            Some((_, s)) => *s = s.union(&img.theta),
            None => out.push((u, img.theta.clone())),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// A point of the open arc `(lo, hi)` missed by `set`.
fn gap_point(set: &ArcSet, lo: f64, hi: f64) -> Option<f64> {
    for g in set.gaps() {
        for shift in [-TAU, 0.0, TAU] {
            let a = g.lo.max(lo - shift);
            let b = g.hi.min(hi - shift);
            if b - a > ANGLE_EPS {
                return Some(0.5 * (a + b) + shift);
            }
        }
    }
    None
}

fn longest_component(set: &ArcSet) -> f64 {
    match set {
        ArcSet::Full => TAU,
        ArcSet::Arcs(v) => v.iter().map(Arc::len).fold(0.0, f64::max),
    }
}

pub fn check_cross_retract(level: &Level, spec: &SpectrumSpec) -> CrossRetract {
    let cell = level.omega.geom.theta_step();
    let margin = ARC_MARGIN_CELLS * cell;
    // A component of length ≥ π fails wherever it sits.
    for img in &level.images {
        let len = longest_component(&img.theta);
        if len >= PI {
            return CrossRetract::Fails {
                reason: format!("circle section has a component of length {len:.6} ≥ π"),
                u: img.u_hi,
            };
        }
    }
    if spec.finite_re_values().is_none() {
        return CrossRetract::Inconclusive {
            reason: "Re σ(A) is not finite".into(),
        };
    }
    let mut max_component = 0.0f64;
    let mut gaps = Vec::new();
    let mut near_miss: Option<String> = None;
    for (u, set) in sections_by_radius(level) {
        let len = longest_component(&set);
        max_component = max_component.max(len);
        if len >= PI {
            return CrossRetract::Fails {
                reason: format!("circle section has a component of length {len:.6} ≥ π"),
                u,
            };
        }
        if !set.is_antipodally_symmetric(1e-9) {
            if set.is_antipodally_symmetric(cell) {
                near_miss.get_or_insert(format!("section at u = {u} is symmetric only to within a cell"));
            } else {
                return CrossRetract::Fails {
                    reason: "circle section is not invariant under rotation by π".into(),
                    u,
                };
            }
        }
        if len >= PI - margin {
            near_miss.get_or_insert(format!("component of length {len:.6} within the margin of π"));
        }
        for beta in [0.0, 0.5 * PI] {
            match (gap_point(&set, beta, beta + PI), gap_point(&set, beta + PI, beta + TAU)) {
                (Some(upper_gap), Some(lower_gap)) => gaps.push(RadiusGaps {
                    u,
                    beta,
                    upper_gap,
                    lower_gap,
                }),
                _ => {
                    near_miss.get_or_insert(format!("no gap found on a half-circle at u = {u}"));
                }
            }
        }
    }
    if let Some(reason) = near_miss {
        return CrossRetract::Inconclusive { reason };
    }
    CrossRetract::Holds {
        alpha: 0.0,
        theta: 0.5 * PI,
        max_component,
        gaps,
    }
}

pub fn check_bounded_im(spec: &SpectrumSpec) -> BoundedIm {
    let mut bound = 0.0f64;
    for p in &spec.primitives {
        match p.im_set() {
            ImSet::Interval { lo, hi } if lo.is_finite() && hi.is_finite() => {
                bound = bound.max(lo.abs()).max(hi.abs());
            }
            _ => {
                return BoundedIm {
                    holds: false,
                    bound: None,
                }
            }
        }
    }
    BoundedIm {
        holds: true,
        bound: Some(bound),
    }
}

/// Smallest `n` with `2⁻ⁿ sup|Im| < π/2`, after which every level sits in the
/// open right half-plane.
pub fn bounded_im_threshold(spec: &SpectrumSpec) -> Option<u32> {
    let b = check_bounded_im(spec).bound?;
    (0..64).find(|&n| 0.5f64.powi(n as i32) * b < 0.5 * PI)
}

pub fn check_halfline_sections(spec: &SpectrumSpec) -> HalflineSections {
    let proj = spec.re_projection();
    let finite = proj.iter().all(|(lo, hi)| lo == hi);
    if !finite && proj.len() != 1 {
        return HalflineSections::Fails {
            reason: format!("Re σ(A) has {} components and is not finite", proj.len()),
        };
    }
    // Sections only change at primitive breakpoints: test those and the midpoints between them.
    let mut breaks: Vec<f64> = Vec::new();
    for p in &spec.primitives {
        let (lo, hi) = p.re_range();
        breaks.push(hi);
        if lo.is_finite() {
            breaks.push(lo);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut checked = breaks.clone();
    for w in breaks.windows(2) {
        checked.push(0.5 * (w[0] + w[1]));
    }
    if proj.iter().any(|(lo, _)| *lo == f64::NEG_INFINITY) {
        checked.push(breaks[0] - 1.0);
    }
    checked.retain(|&s| proj.iter().any(|&(lo, hi)| s >= lo && s <= hi));
    checked.sort_by(f64::total_cmp);
    for &s in &checked {
        let sec = section_at(spec, s);
        if !matches!(sec, Section::HalfLine { .. }) {
            return HalflineSections::Fails {
                reason: format!("section at s = {s} is {}", section_name(&sec)),
            };
        }
    }
    HalflineSections::Holds { checked }
}

fn section_name(s: &Section) -> &'static str {
    match s {
        Section::Empty => "empty",
        Section::Intervals { .. } => "a union of bounded intervals",
        Section::HalfLine { .. } => "a half-line",
        Section::FullLine => "the full line",
        Section::Lattice { .. } => "a lattice",
        Section::Periodic { .. } => "periodic",
        Section::Mixed { .. } => "mixed",
    }
}

/// All per-level checks.
pub fn check_level(level: &Level, spec: &SpectrumSpec) -> ConditionReport {
    let separation = check_separation(level);
    let empty_direction = check_empty_direction(level);
    let cross_retract = check_cross_retract(level, spec);
    let mut evidence = vec![format!(
        "antipodal cells {}, occupied cells {}",
        level.antipodal.occupied_count(),
        level.omega.occupied_count()
    )];
    if let Some(p) = &level.finite_points {
        evidence.push(format!("exact finite level with {} points", p.len()));
    }
    ConditionReport {
        level: level.n,
        separation,
        empty_direction,
        cross_retract,
        bounded_im: check_bounded_im(spec),
        halfline_sections: check_halfline_sections(spec),
        evidence,
    }
}
