//! Closed subsets of the unit circle represented as finite unions of arcs.
//!
//! Angles are radians. An arc is stored as `[lo, hi]` with `lo ∈ [0, 2π)` and
//! `lo ≤ hi < lo + 2π`; arcs may run past `2π`, which is how the wrap is encoded.

use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Tolerance used when merging or comparing arc endpoints.
pub const ANGLE_EPS: f64 = 1e-9;

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Shortest distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(hi >= lo);
        let start = wrap_angle(lo);
        Arc {
            lo: start,
            hi: start + (hi - lo),
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_point(&self) -> bool {
        self.len() <= ANGLE_EPS
    }

    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        let t = wrap_angle(theta);
        let rel = (t - self.lo).rem_euclid(TAU);
        rel <= self.len() + tol || TAU - rel <= tol
    }

    pub fn rotated(&self, by: f64) -> Arc {
        Arc::new(self.lo + by, self.hi + by)
    }

    pub fn midpoint(&self) -> f64 {
        wrap_angle(0.5 * (self.lo + self.hi))
    }
}

/// A closed subset of the circle: either the whole circle or a finite union of
/// pairwise disjoint closed arcs (points are zero-length arcs).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "arcs", rename_all = "snake_case")]
pub enum ArcSet {
    Full,
    Arcs(Vec<Arc>),
}

impl ArcSet {
    pub fn empty() -> Self {
        ArcSet::Arcs(Vec::new())
    }

    /// Normalize an arbitrary collection of arcs: merge overlaps (including across
    /// the wrap) and collapse to `Full` when the union covers the circle.
    pub fn from_arcs(arcs: impl IntoIterator<Item = Arc>) -> Self {
        let mut v: Vec<Arc> = Vec::new();
        for a in arcs {
            if a.len() >= TAU - ANGLE_EPS {
                return ArcSet::Full;
            }
            v.push(Arc::new(a.lo, a.hi));
        }
        if v.is_empty() {
            return ArcSet::empty();
        }
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut merged: Vec<Arc> = Vec::with_capacity(v.len());
        for a in v {
            match merged.last_mut() {
                Some(last) if a.lo <= last.hi + ANGLE_EPS => {
                    last.hi = last.hi.max(a.hi);
                }
                _ => merged.push(a),
            }
        }
        // Arcs running past 2π may swallow the first arcs.
        loop {
            if merged.len() < 2 {
                break;
            }
            let last_hi = merged.last().unwrap().hi;
            let first = merged[0];
            if last_hi - TAU >= first.lo - ANGLE_EPS {
                let last = merged.last_mut().unwrap();
                last.hi = last.hi.max(first.hi + TAU);
                merged.remove(0);
            } else {
                break;
            }
        }
        if let Some(last) = merged.last() {
            if last.len() >= TAU - ANGLE_EPS {
                return ArcSet::Full;
            }
        }
        if merged.len() == 1 && merged[0].len() >= TAU - ANGLE_EPS {
            return ArcSet::Full;
        }
        merged.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        ArcSet::Arcs(merged)
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        match (self, other) {
            (ArcSet::Full, _) | (_, ArcSet::Full) => ArcSet::Full,
            (ArcSet::Arcs(a), ArcSet::Arcs(b)) => ArcSet::from_arcs(a.iter().chain(b.iter()).copied()),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, ArcSet::Full)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ArcSet::Arcs(v) if v.is_empty())
    }

    pub fn arcs(&self) -> &[Arc] {
        match self {
            ArcSet::Full => &[],
            ArcSet::Arcs(v) => v,
        }
    }

    pub fn total_length(&self) -> f64 {
        match self {
            ArcSet::Full => TAU,
            ArcSet::Arcs(v) => v.iter().map(Arc::len).sum(),
        }
    }

    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        match self {
            ArcSet::Full => true,
            ArcSet::Arcs(v) => v.iter().any(|a| a.contains(theta, tol)),
        }
    }

    pub fn rotated(&self, by: f64) -> ArcSet {
        match self {
            ArcSet::Full => ArcSet::Full,
            ArcSet::Arcs(v) => ArcSet::from_arcs(v.iter().map(|a| a.rotated(by))),
        }
    }

    /// Open gaps of the complement, as arcs `(gap_lo, gap_hi)`.
    pub fn gaps(&self) -> Vec<Arc> {
        match self {
            ArcSet::Full => Vec::new(),
            ArcSet::Arcs(v) if v.is_empty() => vec![Arc { lo: 0.0, hi: TAU }],
            ArcSet::Arcs(v) => {
                let mut out = Vec::with_capacity(v.len());
                for (i, a) in v.iter().enumerate() {
                    let next = &v[(i + 1) % v.len()];
                    let mut next_lo = next.lo;
                    if i + 1 == v.len() {
                        next_lo += TAU;
                    }
                    if next_lo - a.hi > ANGLE_EPS {
                        out.push(Arc::new(a.hi, next_lo));
                    }
                }
                out
            }
        }
    }

    /// Whether the set is invariant under rotation by π.
    pub fn is_antipodally_symmetric(&self, tol: f64) -> bool {
        match self {
            ArcSet::Full => true,
            ArcSet::Arcs(v) => {
                let rot = self.rotated(PI);
                let w = rot.arcs();
                if w.len() != v.len() {
                    return false;
                }
                v.iter().zip(w).all(|(a, b)| {
                    circular_distance(a.lo, b.lo) <= tol && (a.len() - b.len()).abs() <= tol
                })
            }
        }
    }

    /// Set of points `θ` with `θ + π` also in the set.
    pub fn antipodal(&self) -> ArcSet {
        match self {
            ArcSet::Full => ArcSet::Full,
            ArcSet::Arcs(v) => {
                let rot = self.rotated(PI);
                let mut out = Vec::new();
                for a in v {
                    for b in rot.arcs() {
                        for shift in [-TAU, 0.0, TAU] {
                            let lo = a.lo.max(b.lo + shift);
                            let hi = a.hi.min(b.hi + shift);
                            if hi >= lo - ANGLE_EPS {
                                out.push(Arc::new(lo, hi.max(lo)));
                            }
                        }
                    }
                }
                ArcSet::from_arcs(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_across_wrap() {
        let s = ArcSet::from_arcs([Arc::new(-0.5, 0.5), Arc::new(5.5, 5.9)]);
        assert_eq!(s.arcs().len(), 1);
        assert!((s.total_length() - (0.5 + TAU - 5.5)).abs() < 1e-12);
    }

    #[test]
    fn long_arc_is_full() {
        assert!(ArcSet::from_arcs([Arc::new(1.0, 1.0 + TAU)]).is_full());
        assert!(ArcSet::from_arcs([Arc::new(0.0, PI), Arc::new(PI, TAU)]).is_full());
    }

    #[test]
    fn antipodal_of_long_arc() {
        let s = ArcSet::from_arcs([Arc::new(0.0, 1.2 * PI)]);
        let a = s.antipodal();
        let arcs = a.arcs();
        assert_eq!(arcs.len(), 2);
        assert!((arcs[0].lo - 0.0).abs() < 1e-12 && (arcs[0].hi - 0.2 * PI).abs() < 1e-12);
        assert!((arcs[1].lo - PI).abs() < 1e-12 && (arcs[1].hi - 1.2 * PI).abs() < 1e-12);
        assert!(ArcSet::from_arcs([Arc::new(0.0, 0.9 * PI)]).antipodal().is_empty());
    }

    #[test]
    fn gaps_of_two_arcs() {
        let s = ArcSet::from_arcs([Arc::new(0.0, 1.0), Arc::new(2.0, 3.0)]);
        let g = s.gaps();
        assert_eq!(g.len(), 2);
        assert!((g[0].lo - 1.0).abs() < 1e-12 && (g[0].hi - 2.0).abs() < 1e-12);
        assert!((g[1].lo - 3.0).abs() < 1e-12 && (g[1].hi - TAU).abs() < 1e-12);
    }

    #[test]
    fn symmetry() {
        let s = ArcSet::from_arcs([Arc::new(0.0, 0.6 * PI), Arc::new(PI, 1.6 * PI)]);
        assert!(s.is_antipodally_symmetric(1e-9));
        let t = ArcSet::from_arcs([Arc::new(0.0, 0.6 * PI), Arc::new(PI, 1.5 * PI)]);
        assert!(!t.is_antipodally_symmetric(1e-9));
    }
}
