//! Declarative descriptions of the generator spectrum and exact geometric
//! queries on it.
//!
//! A spectrum is a finite union of primitives, each of which is a product of a
//! set of real parts and a set of imaginary parts. That product structure is
//! what makes the images `exp(2⁻ⁿ Z)` exactly computable in log-cylinder
//! coordinates `(u, θ) = (ln|w|, arg w)`: the real part scales to `u`, and the
//! imaginary part scales and wraps to `θ`.

use crate::arcs::{Arc, ArcSet, ANGLE_EPS};
use crate::document::{self, access, Document, Value};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error(transparent)]
    Syntax(#[from] document::SyntaxError),
    #[error("semantic error {0}")]
    Semantic(String),
}

impl From<access::FieldError> for SpecError {
    fn from(e: access::FieldError) -> Self {
        SpecError::Semantic(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    Point {
        re: f64,
        im: f64,
    },
    VSegment {
        re: f64,
        im_lo: f64,
        im_hi: f64,
    },
    HSegment {
        re_lo: f64,
        re_hi: f64,
        im: f64,
    },
    Rect {
        re_lo: f64,
        re_hi: f64,
        im_lo: f64,
        im_hi: f64,
    },
    VLattice {
        re: f64,
        im_base: f64,
        im_step: f64,
    },
    VLine {
        re: f64,
    },
    PeriodicBand {
        re_lo: f64,
        re_hi: f64,
        im_intervals: Vec<(f64, f64)>,
        period: f64,
    },
}

/// The set of imaginary parts of a primitive.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImSet {
    /// Closed interval; either end may be infinite.
    Interval { lo: f64, hi: f64 },
    Lattice { base: f64, step: f64 },
    Periodic { intervals: Vec<(f64, f64)>, period: f64 },
}

impl ImSet {
    fn contains(&self, t: f64, tol: f64) -> bool {
        match self {
            ImSet::Interval { lo, hi } => t >= lo - tol && t <= hi + tol,
            ImSet::Lattice { base, step } => {
                let k = ((t - base) / step).round();
                (base + k * step - t).abs() <= tol
            }
            ImSet::Periodic { intervals, period } => intervals.iter().any(|&(lo, hi)| {
                let k = ((t - lo) / period).floor();
                let r = t - k * period;
                (r >= lo - tol && r <= hi + tol) || (r - period >= lo - tol && r - period <= hi + tol)
            }),
        }
    }
}

impl Primitive {
    pub fn kind(&self) -> &'static str {
        match self {
            Primitive::Point { .. } => "point",
            Primitive::VSegment { .. } => "vsegment",
            Primitive::HSegment { .. } => "hsegment",
            Primitive::Rect { .. } => "rect",
            Primitive::VLattice { .. } => "vlattice",
            Primitive::VLine { .. } => "vline",
            Primitive::PeriodicBand { .. } => "periodicband",
        }
    }

    /// Closed interval of real parts; the lower end may be `-inf`.
    pub fn re_range(&self) -> (f64, f64) {
        match *self {
            Primitive::Point { re, .. }
            | Primitive::VSegment { re, .. }
            | Primitive::VLattice { re, .. }
            | Primitive::VLine { re } => (re, re),
            Primitive::HSegment { re_lo, re_hi, .. }
            | Primitive::Rect { re_lo, re_hi, .. }
            | Primitive::PeriodicBand { re_lo, re_hi, .. } => (re_lo, re_hi),
        }
    }

    pub fn im_set(&self) -> ImSet {
        match self {
            Primitive::Point { im, .. } | Primitive::HSegment { im, .. } => ImSet::Interval { lo: *im, hi: *im },
            Primitive::VSegment { im_lo, im_hi, .. } | Primitive::Rect { im_lo, im_hi, .. } => {
                ImSet::Interval { lo: *im_lo, hi: *im_hi }
            }
            Primitive::VLattice { im_base, im_step, .. } => ImSet::Lattice {
                base: *im_base,
                step: *im_step,
            },
            Primitive::VLine { .. } => ImSet::Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
            Primitive::PeriodicBand {
                im_intervals, period, ..
            } => ImSet::Periodic {
                intervals: im_intervals.clone(),
                period: *period,
            },
        }
    }

    /// Whether the set of imaginary parts is bounded.
    pub fn im_bound(&self) -> Option<f64> {
        match self.im_set() {
            ImSet::Interval { lo, hi } if lo.is_finite() && hi.is_finite() => Some(lo.abs().max(hi.abs())),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{} `{name}` must be finite, found {v}", self.kind()))
            }
        };
        let not_nan = |name: &str, v: f64| {
            if v.is_nan() {
                Err(format!("{} `{name}` is NaN", self.kind()))
            } else {
                Ok(())
            }
        };
        let re_hi_ok = |v: f64| {
            if v == f64::INFINITY {
                Err(format!(
                    "{}: real part unbounded from above (re_hi = +inf); the spectrum must lie in a left half-plane",
                    self.kind()
                ))
            } else {
                Ok(())
            }
        };
        let re_lo_ok = |v: f64| {
            not_nan("re_lo", v)?;
            if v == f64::INFINITY {
                Err(format!(
                    "{}: re_lo = +inf leaves the real part unbounded from above",
                    self.kind()
                ))
            } else {
                Ok(())
            }
        };
        let ordered = |lo_name: &str, lo: f64, hi_name: &str, hi: f64| {
            if hi >= lo {
                Ok(())
            } else {
                Err(format!("{}: {hi_name} ({hi}) < {lo_name} ({lo})", self.kind()))
            }
        };
        match *self {
            Primitive::Point { re, im } => {
                re_hi_ok(re)?;
                finite("re", re)?;
                finite("im", im)
            }
            Primitive::VSegment { re, im_lo, im_hi } => {
                re_hi_ok(re)?;
                finite("re", re)?;
                not_nan("im_lo", im_lo)?;
                not_nan("im_hi", im_hi)?;
                if im_lo == f64::INFINITY || im_hi == f64::NEG_INFINITY {
                    return Err("vsegment: empty imaginary range".into());
                }
                ordered("im_lo", im_lo, "im_hi", im_hi)
            }
            Primitive::HSegment { re_lo, re_hi, im } => {
                re_lo_ok(re_lo)?;
                re_hi_ok(re_hi)?;
                finite("re_hi", re_hi)?;
                finite("im", im)?;
                ordered("re_lo", re_lo, "re_hi", re_hi)
            }
            Primitive::Rect {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            } => {
                re_lo_ok(re_lo)?;
                re_hi_ok(re_hi)?;
                finite("re_hi", re_hi)?;
                not_nan("im_lo", im_lo)?;
                not_nan("im_hi", im_hi)?;
                if im_lo == f64::INFINITY || im_hi == f64::NEG_INFINITY {
                    return Err("rect: empty imaginary range".into());
                }
                ordered("re_lo", re_lo, "re_hi", re_hi)?;
                ordered("im_lo", im_lo, "im_hi", im_hi)
            }
            Primitive::VLattice { re, im_base, im_step } => {
                re_hi_ok(re)?;
                finite("re", re)?;
                finite("im_base", im_base)?;
                finite("im_step", im_step)?;
                if im_step > 0.0 {
                    Ok(())
                } else {
                    Err(format!("vlattice: im_step must be positive, found {im_step}"))
                }
            }
            Primitive::VLine { re } => {
                re_hi_ok(re)?;
                finite("re", re)
            }
            Primitive::PeriodicBand {
                re_lo,
                re_hi,
                ref im_intervals,
                period,
            } => {
                re_lo_ok(re_lo)?;
                re_hi_ok(re_hi)?;
                finite("re_hi", re_hi)?;
                ordered("re_lo", re_lo, "re_hi", re_hi)?;
                finite("period", period)?;
                if period <= 0.0 {
                    return Err(format!("periodicband: period must be positive, found {period}"));
                }
                if im_intervals.is_empty() {
                    return Err("periodicband: im_intervals must not be empty".into());
                }
                for &(lo, hi) in im_intervals {
                    finite("im_intervals", lo)?;
                    finite("im_intervals", hi)?;
                    ordered("interval lo", lo, "interval hi", hi)?;
                }
                Ok(())
            }
        }
    }

    /// Whether `w` lies in the closure of `exp(2⁻ⁿ p)` up to `tol`.
    pub fn level_contains(&self, n: u32, w: Complex64, tol: f64) -> bool {
        let scale = 0.5f64.powi(n as i32);
        let (re_lo, re_hi) = self.re_range();
        let r = w.norm();
        if r == 0.0 {
            return re_lo == f64::NEG_INFINITY;
        }
        let u = r.ln();
        if u > scale * re_hi + tol || u < scale * re_lo - tol {
            return false;
        }
        let theta = w.arg();
        // Residue of `theta - start` modulo the orbit spacing, folded to a distance.
        let orbit_hit = |start: f64, len: f64, ratio: f64| -> bool {
            match rational_approx(ratio, MEMBERSHIP_MAX_Q, RATIO_TOL * ratio.max(1.0)) {
                Some((_, q)) => {
                    let g = TAU / q as f64;
                    if len >= g {
                        return true;
                    }
                    let phi = (theta - start).rem_euclid(g);
                    phi <= len + tol || g - phi <= tol
                }
                None => true,
            }
        };
        match self.im_set() {
            ImSet::Interval { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || scale * (hi - lo) >= TAU - ANGLE_EPS {
                    true
                } else {
                    Arc::new(scale * lo, scale * hi).contains(theta, tol)
                }
            }
            ImSet::Lattice { base, step } => orbit_hit(scale * base, 0.0, scale * step / TAU),
            ImSet::Periodic { intervals, period } => intervals
                .iter()
                .any(|&(lo, hi)| orbit_hit(scale * lo, scale * (hi - lo), scale * period / TAU)),
        }
    }

    fn to_document(&self) -> String {
        let n = document::format_number;
        let body = match self {
            Primitive::Point { re, im } => format!("re = {}\nim = {}", n(*re), n(*im)),
            Primitive::VSegment { re, im_lo, im_hi } => {
                format!("re = {}\nim_lo = {}\nim_hi = {}", n(*re), n(*im_lo), n(*im_hi))
            }
            Primitive::HSegment { re_lo, re_hi, im } => {
                format!("re_lo = {}\nre_hi = {}\nim = {}", n(*re_lo), n(*re_hi), n(*im))
            }
            Primitive::Rect {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            } => format!(
                "re_lo = {}\nre_hi = {}\nim_lo = {}\nim_hi = {}",
                n(*re_lo),
                n(*re_hi),
                n(*im_lo),
                n(*im_hi)
            ),
            Primitive::VLattice { re, im_base, im_step } => {
                format!("re = {}\nim_base = {}\nim_step = {}", n(*re), n(*im_base), n(*im_step))
            }
            Primitive::VLine { re } => format!("re = {}", n(*re)),
            Primitive::PeriodicBand {
                re_lo,
                re_hi,
                im_intervals,
                period,
            } => {
                let iv: Vec<String> = im_intervals.iter().map(|(a, b)| format!("[{}, {}]", n(*a), n(*b))).collect();
                format!(
                    "re_lo = {}\nre_hi = {}\nim_intervals = [{}]\nperiod = {}",
                    n(*re_lo),
                    n(*re_hi),
                    iv.join(", "),
                    n(*period)
                )
            }
        };
        format!("[[primitive]]\nkind = \"{}\"\n{}\n", self.kind(), body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSpec {
    pub name: Option<String>,
    pub primitives: Vec<Primitive>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripBounds {
    #[serde(serialize_with = "crate::real::serialize")]
    pub zeta: f64,
    /// May be `-inf`.
    #[serde(serialize_with = "crate::real::serialize")]
    pub eta: f64,
}

/// Symbolic description of `{t : s + it ∈ Z}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Section {
    Empty,
    /// Bounded closed intervals, sorted and disjoint.
    Intervals { intervals: Vec<(f64, f64)> },
    /// `[lo, +inf)` or `(-inf, hi]`; exactly one end is infinite.
    HalfLine { lo: f64, hi: f64 },
    FullLine,
    Lattice { base: f64, step: f64 },
    Periodic { intervals: Vec<(f64, f64)>, period: f64 },
    /// Anything not expressible by a single variant above.
    Mixed { parts: Vec<ImSet> },
}

impl Section {
    pub fn is_empty(&self) -> bool {
        matches!(self, Section::Empty)
    }

    pub fn is_half_line(&self) -> bool {
        matches!(self, Section::HalfLine { .. })
    }
}

/// Exact image of one primitive at level `n` in log-cylinder coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelImage {
    /// Lower end of the `u` range; `-inf` when the real part is unbounded below.
    #[serde(serialize_with = "crate::real::serialize")]
    pub u_lo: f64,
    pub u_hi: f64,
    pub theta: ArcSet,
    /// Number of distinct angles when the angular image is a finite point set.
    pub point_count: Option<u64>,
    /// Smallest angular spacing between distinct points of a discrete image.
    pub min_spacing: Option<f64>,
}

impl LevelImage {
    pub fn contains(&self, w: Complex64, tol: f64) -> bool {
        let r = w.norm();
        if r == 0.0 {
            return self.u_lo == f64::NEG_INFINITY;
        }
        let u = r.ln();
        if u > self.u_hi + tol || u < self.u_lo - tol {
            return false;
        }
        self.theta.contains(w.arg(), tol)
    }

    /// `max |1 - w|` over the image; attained on the `u` boundary at the angle
    /// closest to π, since `|1 - e^{u+iθ}|²` is convex in `e^u` and decreasing
    /// in `cos θ`.
    pub fn max_dist_from_one(&self) -> f64 {
        let theta_star = match &self.theta {
            ArcSet::Full => std::f64::consts::PI,
            ArcSet::Arcs(arcs) => {
                let mut best = f64::NAN;
                let mut best_cos = f64::INFINITY;
                for a in arcs {
                    let pi = std::f64::consts::PI;
                    let candidates = [a.lo, a.hi, pi, pi + TAU];
                    for &c in &candidates {
                        if c >= a.lo - ANGLE_EPS && c <= a.hi + ANGLE_EPS {
                            let cv = c.cos();
                            if cv < best_cos {
                                best_cos = cv;
                                best = c;
                            }
                        }
                    }
                }
                if best.is_nan() {
                    return 0.0;
                }
                best
            }
        };
        let at = |u: f64| {
            if u == f64::NEG_INFINITY {
                1.0
            } else {
                (Complex64::new(1.0, 0.0) - Complex64::from_polar(u.exp(), theta_star)).norm()
            }
        };
        at(self.u_lo).max(at(self.u_hi))
    }
}

/// Best rational approximation `p/q` of `x` with `q ≤ max_q`, if one lies
/// within `tol` of `x`.
pub fn rational_approx(x: f64, max_q: u64, tol: f64) -> Option<(i64, u64)> {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 as u64 > max_q {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2 as i64, k2 as u64));
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = y - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

/// Largest denominator for which a lattice or periodic image is treated as a
/// finite rotation orbit; beyond this the orbit is taken as dense.
pub const MAX_ORBIT: u64 = 1 << 20;

const RATIO_TOL: f64 = 1e-13;

/// Denominator cap for membership tests, which never enumerate the orbit.
const MEMBERSHIP_MAX_Q: u64 = 1 << 48;

fn theta_image(im: &ImSet, scale: f64) -> (ArcSet, Option<u64>, Option<f64>) {
    match im {
        ImSet::Interval { lo, hi } => {
            if !lo.is_finite() || !hi.is_finite() || scale * (hi - lo) >= TAU - ANGLE_EPS {
                (ArcSet::Full, None, None)
            } else if hi == lo {
                (ArcSet::from_arcs([Arc::new(scale * lo, scale * lo)]), Some(1), None)
            } else {
                (ArcSet::from_arcs([Arc::new(scale * lo, scale * hi)]), None, None)
            }
        }
        ImSet::Lattice { base, step } => {
            let ratio = scale * step / TAU;
            match rational_approx(ratio, MAX_ORBIT, RATIO_TOL * ratio.max(1.0)) {
                Some((_, q)) => {
                    let spacing = TAU / q as f64;
                    let start = scale * base;
                    let arcs = (0..q).map(|m| {
                        let t = start + spacing * m as f64;
                        Arc::new(t, t)
                    });
                    (ArcSet::from_arcs(arcs), Some(q), Some(spacing))
                }
                // Irrational rotation: the orbit is dense, so its closure is the circle.
                None => (ArcSet::Full, None, None),
            }
        }
        ImSet::Periodic { intervals, period } => {
            let ratio = scale * period / TAU;
            match rational_approx(ratio, MAX_ORBIT, RATIO_TOL * ratio.max(1.0)) {
                Some((_, q)) => {
                    let spacing = TAU / q as f64;
                    let mut arcs = Vec::with_capacity(intervals.len() * q as usize);
                    for m in 0..q {
                        let shift = spacing * m as f64;
                        for &(lo, hi) in intervals {
                            if scale * (hi - lo) >= TAU - ANGLE_EPS {
                                return (ArcSet::Full, None, None);
                            }
                            arcs.push(Arc::new(scale * lo + shift, scale * hi + shift));
                        }
                    }
                    (ArcSet::from_arcs(arcs), None, None)
                }
                None => (ArcSet::Full, None, None),
            }
        }
    }
}

impl SpectrumSpec {
    pub fn new(name: Option<String>, primitives: Vec<Primitive>) -> Result<Self, SpecError> {
        if primitives.is_empty() {
            return Err(SpecError::Semantic("the spectrum must contain at least one primitive".into()));
        }
        for (i, p) in primitives.iter().enumerate() {
            p.validate()
                .map_err(|m| SpecError::Semantic(format!("in primitive #{}: {m}", i + 1)))?;
        }
        Ok(SpectrumSpec { name, primitives })
    }

    /// Canonical document text; parsing it yields an identical spec.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            out.push_str(&format!("name = {}\n\n", document::format_value(&Value::Str(name.clone()))));
        }
        for p in &self.primitives {
            out.push_str(&p.to_document());
            out.push('\n');
        }
        out
    }

    /// Merged closed intervals covering `Re Z`.
    pub fn re_projection(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.primitives.iter().map(Primitive::re_range).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in v {
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        out
    }

    /// Distinct real parts when `Re Z` is a finite set.
    pub fn finite_re_values(&self) -> Option<Vec<f64>> {
        let proj = self.re_projection();
        if proj.iter().all(|(lo, hi)| lo == hi) {
            Some(proj.into_iter().map(|(lo, _)| lo).collect())
        } else {
            None
        }
    }

    /// Exact images of every primitive at level `n`.
    pub fn level_images(&self, n: u32) -> Vec<LevelImage> {
        let scale = 0.5f64.powi(n as i32);
        self.primitives
            .iter()
            .map(|p| {
                let (re_lo, re_hi) = p.re_range();
                let (theta, point_count, min_spacing) = theta_image(&p.im_set(), scale);
                LevelImage {
                    u_lo: scale * re_lo,
                    u_hi: scale * re_hi,
                    theta,
                    point_count,
                    min_spacing,
                }
            })
            .collect()
    }

    /// Exact finite point set of `Ω_n` when every primitive contributes finitely
    /// many points.
    pub fn finite_level_points(&self, n: u32) -> Option<Vec<Complex64>> {
        let images = self.level_images(n);
        let mut pts: Vec<Complex64> = Vec::new();
        for (p, img) in self.primitives.iter().zip(&images) {
            if !matches!(p, Primitive::Point { .. } | Primitive::VLattice { .. }) {
                return None;
            }
            img.point_count?;
            for a in img.theta.arcs() {
                pts.push(Complex64::from_polar(img.u_hi.exp(), a.lo));
            }
        }
        pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        pts.dedup_by(|a, b| (*a - *b).norm() <= 1e-12);
        Some(pts)
    }

    /// Whether `w ∈ Ω_n = cl(exp(2⁻ⁿ Z))` up to `tol` in log-cylinder units.
    /// Constant time per primitive, so usable at depths where the discrete
    /// images have far too many points to enumerate.
    pub fn level_contains(&self, n: u32, w: Complex64, tol: f64) -> bool {
        self.primitives.iter().any(|p| p.level_contains(n, w, tol))
    }
}

/// Parse and validate a spectrum document. Tables other than `[[primitive]]`
/// (operator models, probes) are accepted and left to their own readers.
pub fn parse_spec(text: &str) -> Result<SpectrumSpec, SpecError> {
    let doc = document::parse_document(text)?;
    spec_from_document(&doc)
}

pub fn spec_from_document(doc: &Document) -> Result<SpectrumSpec, SpecError> {
    access::reject_unknown(&doc.top, &["name"], "the document")?;
    for s in &doc.sections {
        if !matches!(s.header.as_str(), "primitive" | "model" | "probe") {
            let at = s.table.pos.map(|p| format!(" at {p}")).unwrap_or_default();
            return Err(SpecError::Semantic(format!(
                "unknown table `[[{}]]`{at}; expected primitive, model or probe",
                s.header
            )));
        }
    }
    let name = match doc.top.get("name") {
        Some(e) => Some(access::string(e)?.to_string()),
        None => None,
    };
    let mut prims = Vec::new();
    for s in doc.sections_named("primitive") {
        prims.push(primitive_from_table(&s.table)?);
    }
    SpectrumSpec::new(name, prims)
}

fn primitive_from_table(t: &document::Table) -> Result<Primitive, SpecError> {
    let kind = access::string(access::required(t, "kind", "primitive")?)?;
    let num = |k: &str| -> Result<f64, SpecError> { Ok(access::number(access::required(t, k, kind)?)?) };
    let allow = |keys: &[&str]| -> Result<(), SpecError> {
        let mut all = vec!["kind"];
        all.extend_from_slice(keys);
        Ok(access::reject_unknown(t, &all, kind)?)
    };
    let p = match kind {
        "point" => {
            allow(&["re", "im"])?;
            Primitive::Point {
                re: num("re")?,
                im: num("im")?,
            }
        }
        "vsegment" => {
            allow(&["re", "im_lo", "im_hi"])?;
            Primitive::VSegment {
                re: num("re")?,
                im_lo: num("im_lo")?,
                im_hi: num("im_hi")?,
            }
        }
        "hsegment" => {
            allow(&["re_lo", "re_hi", "im"])?;
            Primitive::HSegment {
                re_lo: num("re_lo")?,
                re_hi: num("re_hi")?,
                im: num("im")?,
            }
        }
        "rect" => {
            allow(&["re_lo", "re_hi", "im_lo", "im_hi"])?;
            Primitive::Rect {
                re_lo: num("re_lo")?,
                re_hi: num("re_hi")?,
                im_lo: num("im_lo")?,
                im_hi: num("im_hi")?,
            }
        }
        "vlattice" => {
            allow(&["re", "im_base", "im_step"])?;
            Primitive::VLattice {
                re: num("re")?,
                im_base: num("im_base")?,
                im_step: num("im_step")?,
            }
        }
        "vline" => {
            allow(&["re"])?;
            Primitive::VLine { re: num("re")? }
        }
        "periodicband" => {
            allow(&["re_lo", "re_hi", "im_intervals", "period"])?;
            let entry = access::required(t, "im_intervals", kind)?;
            let mut intervals = Vec::new();
            match &entry.value {
                Value::Array(items) => {
                    for item in items {
                        let pair = match item {
                            Value::Array(p) if p.len() == 2 => p,
                            _ => {
                                return Err(SpecError::Semantic(format!(
                                    "at {}: im_intervals entries must be [lo, hi] pairs",
                                    entry.pos
                                )))
                            }
                        };
                        match (&pair[0], &pair[1]) {
                            (Value::Number(a), Value::Number(b)) => intervals.push((*a, *b)),
                            _ => {
                                return Err(SpecError::Semantic(format!(
                                    "at {}: im_intervals entries must be numbers",
                                    entry.pos
                                )))
                            }
                        }
                    }
                }
                _ => {
                    return Err(SpecError::Semantic(format!(
                        "at {}: im_intervals must be an array of [lo, hi] pairs",
                        entry.pos
                    )))
                }
            }
            Primitive::PeriodicBand {
                re_lo: num("re_lo")?,
                re_hi: num("re_hi")?,
                im_intervals: intervals,
                period: num("period")?,
            }
        }
        other => {
            let at = t.get("kind").map(|e| format!("at {}: ", e.pos)).unwrap_or_default();
            return Err(SpecError::Semantic(format!(
                "{at}unknown primitive kind `{other}`; expected point, vsegment, hsegment, rect, vlattice, vline or periodicband"
            )));
        }
    };
    Ok(p)
}

/// Exact supremum and infimum of `Re Z`.
pub fn strip_bounds(spec: &SpectrumSpec) -> StripBounds {
    let mut zeta = f64::NEG_INFINITY;
    let mut eta = f64::INFINITY;
    for p in &spec.primitives {
        let (lo, hi) = p.re_range();
        zeta = zeta.max(hi);
        eta = eta.min(lo);
    }
    StripBounds { zeta, eta }
}

/// Symbolic section `{t ∈ ℝ : s + it ∈ Z}`.
pub fn section_at(spec: &SpectrumSpec, s: f64) -> Section {
    let parts: Vec<ImSet> = spec
        .primitives
        .iter()
        .filter(|p| {
            let (lo, hi) = p.re_range();
            s >= lo && s <= hi
        })
        .map(Primitive::im_set)
        .collect();
    normalize_section(parts)
}

fn normalize_section(parts: Vec<ImSet>) -> Section {
    if parts.is_empty() {
        return Section::Empty;
    }
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut others: Vec<ImSet> = Vec::new();
    for p in parts {
        match p {
            ImSet::Interval { lo, hi } => intervals.push((lo, hi)),
            other => others.push(other),
        }
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    if merged.iter().any(|&(lo, hi)| lo == f64::NEG_INFINITY && hi == f64::INFINITY) {
        return Section::FullLine;
    }
    // Lattices and periodic unions absorb intervals they already contain.
    if !others.is_empty() {
        merged.retain(|&(lo, hi)| {
            !(lo.is_finite()
                && hi.is_finite()
                && others.iter().any(|o| {
                    let n = 64;
                    (0..=n).all(|k| o.contains(lo + (hi - lo) * k as f64 / n as f64, 1e-12))
                }))
        });
    }
    let mut others = dedup_periodic(others);
    if merged.is_empty() && others.len() == 1 {
        return match others.pop().unwrap() {
            ImSet::Lattice { base, step } => Section::Lattice {
                base: base.rem_euclid(step),
                step,
            },
            ImSet::Periodic { intervals, period } => Section::Periodic { intervals, period },
            ImSet::Interval { .. } => unreachable!(),
        };
    }
    if others.is_empty() {
        let unbounded = merged.iter().filter(|(lo, hi)| !lo.is_finite() || !hi.is_finite()).count();
        return match (merged.len(), unbounded) {
            (1, 1) => Section::HalfLine {
                lo: merged[0].0,
                hi: merged[0].1,
            },
            (_, 0) => Section::Intervals { intervals: merged },
            _ => Section::Mixed {
                parts: merged.into_iter().map(|(lo, hi)| ImSet::Interval { lo, hi }).collect(),
            },
        };
    }
    let mut parts: Vec<ImSet> = merged.into_iter().map(|(lo, hi)| ImSet::Interval { lo, hi }).collect();
    parts.extend(others);
    Section::Mixed { parts }
}

fn dedup_periodic(v: Vec<ImSet>) -> Vec<ImSet> {
    let mut out: Vec<ImSet> = Vec::new();
    for item in v {
        let same = out.iter().any(|o| match (o, &item) {
            (ImSet::Lattice { base: b1, step: s1 }, ImSet::Lattice { base: b2, step: s2 }) => {
                (s1 - s2).abs() <= 1e-12 * s1.abs().max(1.0) && {
                    let d = (b1 - b2).rem_euclid(*s1);
                    d.min(s1 - d) <= 1e-12 * s1.abs().max(1.0)
                }
            }
            _ => o == &item,
        });
        if !same {
            out.push(item);
        }
    }
    out
}
