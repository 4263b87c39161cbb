//! The squaring tower `Ω_0 ← Ω_1 ← … ← Ω_N` with connecting maps `z ↦ z²`,
//! per-level derived data, fibers of the inverse limit and the perfectness gate.

use crate::arcs::Arc;
use crate::raster::{
    antipodal_set, circle_section, level_geometry, rasterize_images, to_planar, complement_components_of,
    CylinderRaster, PlanarRaster, RasterError, Resolution,
};
use crate::spectrum::{strip_bounds, ImSet, LevelImage, SpectrumSpec, StripBounds};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Tolerance for exact (closed-form) fibers and finite levels.
pub const FIBER_TOL: f64 = 1e-9;

/// Minimum depth to which fibers are followed.
pub const FIBER_DEPTH: u32 = 32;

/// Pseudorandom ε-sequences drawn per twisted base point.
const RANDOM_SEQUENCES: usize = 8;

/// Half-width of the window used to sample unbounded imaginary parts.
const IM_WINDOW: f64 = 8.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TowerError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("depth must be at least 1")]
    InvalidDepth,
    #[error("squaring map from level {upper} onto level {lower} is off by more than one cell at {cells} cells")]
    Squaring { upper: u32, lower: u32, cells: usize },
    #[error("level {level} reaches modulus {modulus:.6e}, above the bound {bound:.6e}")]
    Modulus { level: u32, modulus: f64, bound: f64 },
}

/// Maximal occupied arcs of one raster row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSection {
    pub row: i64,
    pub u: f64,
    pub arcs: Vec<Arc>,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub n: u32,
    pub omega: CylinderRaster,
    pub antipodal: CylinderRaster,
    /// Number of bounded components of `C ∖ Ω_n`.
    pub ext_rank: usize,
    pub component_samples: Vec<Complex64>,
    pub origin_enclosed: bool,
    pub sections: Vec<RowSection>,
    pub finite_points: Option<Vec<Complex64>>,
    pub images: Vec<LevelImage>,
    /// Planar picture of a raster level; exact finite levels have none.
    pub planar: Option<PlanarRaster>,
}

impl Level {
    pub fn is_finite(&self) -> bool {
        self.finite_points.is_some()
    }

    /// Point count for finite levels, occupied cells otherwise.
    pub fn size(&self) -> usize {
        match &self.finite_points {
            Some(p) => p.len(),
            None => self.omega.occupied_count(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tower {
    pub spec: SpectrumSpec,
    pub depth: u32,
    pub resolution: Resolution,
    pub bounds: StripBounds,
    pub levels: Vec<Level>,
}

impl Tower {
    pub fn all_finite(&self) -> bool {
        self.levels.iter().all(Level::is_finite)
    }

    pub fn fiber_depth(&self) -> u32 {
        self.depth.max(FIBER_DEPTH)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Canonical { z: Complex64 },
    Twisted {
        pattern: String,
        /// Requested root choices; `requested[k]` picks the root at level `k + 1`.
        requested: Vec<u8>,
        /// Choices actually taken after falling back to the root lying in the tower.
        used: Vec<u8>,
    },
}

/// A point of the inverse limit followed to finite depth: `x_{n+1}² = x_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberPoint {
    pub coords: Vec<Complex64>,
    pub provenance: Provenance,
}

impl FiberPoint {
    pub fn max_square_defect(&self) -> f64 {
        self.coords
            .windows(2)
            .map(|w| (w[1] * w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Perfectness {
    Yes,
    No,
    Unknown,
}

pub fn build_tower(spec: &SpectrumSpec, depth: u32, res: Resolution) -> Result<Tower, TowerError> {
    if depth < 1 {
        return Err(TowerError::InvalidDepth);
    }
    res.validate()?;
    let bounds = strip_bounds(spec);
    let levels = (0..=depth)
        .into_par_iter()
        .map(|n| build_level(spec, n, res, bounds))
        .collect::<Result<Vec<_>, _>>()?;
    let tower = Tower {
        spec: spec.clone(),
        depth,
        resolution: res,
        bounds,
        levels,
    };
    check_modulus(&tower)?;
    (0..depth as usize)
        .into_par_iter()
        .map(|n| check_squaring(&tower.levels[n + 1], &tower.levels[n]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(tower)
}

fn build_level(spec: &SpectrumSpec, n: u32, res: Resolution, bounds: StripBounds) -> Result<Level, TowerError> {
    let images = spec.level_images(n);
    let finite_points = spec.finite_level_points(n);
    let geom = level_geometry(spec, n, res);
    let contains_zero = bounds.eta == f64::NEG_INFINITY;
    // Finite levels are carried exactly; their raster is only a picture.
    let omega = rasterize_images(geom, &images, contains_zero, n, finite_points.is_none())?;
    let antipodal = antipodal_set(&omega);
    let (planar, ext_rank, component_samples, origin_enclosed) = if finite_points.is_some() {
        (None, 0, Vec::new(), false)
    } else {
        let planar = to_planar(&omega, res.planar_cells());
        let cc = complement_components_of(&planar);
        (Some(planar), cc.count, cc.samples, cc.origin_enclosed)
    };
    let sections = omega
        .row_range()
        .filter(|&row| !omega.row_is_empty(row))
        .map(|row| {
            let u = omega.geom.row_u(row);
            RowSection {
                row,
                u,
                arcs: circle_section(&omega, u),
            }
        })
        .collect();
    Ok(Level {
        n,
        omega,
        antipodal,
        ext_rank,
        component_samples,
        origin_enclosed,
        sections,
        finite_points,
        images,
        planar,
    })
}

fn check_modulus(t: &Tower) -> Result<(), TowerError> {
    for level in &t.levels {
        let scale = 0.5f64.powi(level.n as i32);
        let bound_exact = (scale * t.bounds.zeta).exp();
        let (modulus, bound) = match &level.finite_points {
            Some(pts) => (
                pts.iter().map(|p| p.norm()).fold(0.0, f64::max),
                bound_exact * (1.0 + FIBER_TOL),
            ),
            None => {
                let g = level.omega.geom;
                let top = level
                    .omega
                    .row_range()
                    .rev()
                    .find(|&r| !level.omega.row_is_empty(r));
                let m = top.map_or(0.0, |r| g.row_u(r).exp());
                (m, bound_exact * (1.0 + 2.0 * g.u_step()))
            }
        };
        if modulus > bound {
            return Err(TowerError::Modulus {
                level: level.n,
                modulus,
                bound,
            });
        }
    }
    Ok(())
}

/// Verify that squaring maps `upper` onto `lower`.
fn check_squaring(upper: &Level, lower: &Level) -> Result<(), TowerError> {
    let bad = match (&upper.finite_points, &lower.finite_points) {
        (Some(up), Some(low)) => finite_squaring_defects(up, low),
        _ => raster_squaring_defects(&upper.omega, &lower.omega),
    };
    if bad > 0 {
        return Err(TowerError::Squaring {
            upper: upper.n,
            lower: lower.n,
            cells: bad,
        });
    }
    Ok(())
}

/// Points whose square is missing below, plus points below with no square root above.
fn finite_squaring_defects(upper: &[Complex64], lower: &[Complex64]) -> usize {
    let squares: Vec<Complex64> = upper.iter().map(|y| y * y).collect();
    let lookup_low = PointLookup::new(lower);
    let lookup_sq = PointLookup::new(&squares);
    squares.iter().filter(|q| !lookup_low.contains(**q)).count()
        + lower.iter().filter(|x| !lookup_sq.contains(**x)).count()
}

/// Points sorted by argument for tolerance lookups.
pub(crate) struct PointLookup {
    pts: Vec<(f64, Complex64)>,
}

impl PointLookup {
    pub(crate) fn new(points: &[Complex64]) -> Self {
        let mut pts: Vec<(f64, Complex64)> = points.iter().map(|p| (p.arg(), *p)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        PointLookup { pts }
    }

    pub(crate) fn contains(&self, q: Complex64) -> bool {
        self.count(q) > 0
    }

    /// Number of stored points within tolerance of `q`.
    pub(crate) fn count(&self, q: Complex64) -> usize {
        let r = q.norm();
        let tol = FIBER_TOL * (1.0 + r);
        if r <= tol {
            return self.pts.iter().filter(|(_, p)| (p - q).norm() <= tol).count();
        }
        let a = q.arg();
        let da = tol / r;
        [a, a - 2.0 * PI, a + 2.0 * PI]
            .iter()
            .map(|&center| {
                let start = self.pts.partition_point(|(arg, _)| *arg < center - da);
                self.pts[start..]
                    .iter()
                    .take_while(|(arg, _)| *arg <= center + da)
                    .filter(|(_, p)| (p - q).norm() <= tol)
                    .count()
            })
            .sum()
    }
}

fn raster_squaring_defects(upper: &CylinderRaster, lower: &CylinderRaster) -> usize {
    let t = lower.geom.theta_cells;
    let mut image = CylinderRaster::empty(lower.geom, lower.contains_zero);
    let mut bad = 0;
    for (i, j) in upper.occupied() {
        let r = 2 * i;
        if r >= lower.geom.row_lo && r <= lower.geom.row_hi {
            image.set(r, (2 * j) % t, true);
        } else if r < lower.geom.row_lo - 1 || r > lower.geom.row_hi + 1 {
            bad += 1;
        }
    }
    bad += image.occupied().filter(|&(i, j)| !has_within(lower, i, j, 1)).count();
    // Rows of the lower level that the doubled rows of the upper level can reach.
    let reach_lo = 2 * upper.geom.row_lo - 1;
    let reach_hi = 2 * upper.geom.row_hi + 1;
    bad += lower
        .occupied()
        .filter(|&(i, _)| i >= reach_lo && i <= reach_hi)
        .filter(|&(i, j)| !has_within(&image, i, j, 1))
        .count();
    bad
}

/// Whether an occupied cell lies within Chebyshev distance `k` of `(row, col)`.
fn has_within(r: &CylinderRaster, row: i64, col: usize, k: i64) -> bool {
    let t = r.geom.theta_cells as i64;
    for rr in row - k..=row + k {
        if rr < r.geom.row_lo || rr > r.geom.row_hi {
            continue;
        }
        for c in col as i64 - k..=col as i64 + k {
            if r.get(rr, c.rem_euclid(t) as usize) {
                return true;
            }
        }
    }
    false
}

/// Canonical fiber `x_n = exp(2⁻ⁿ z)`, `n = 0..=depth`.
pub fn canonical_fiber(z: Complex64, depth: u32) -> FiberPoint {
    let coords = (0..=depth).map(|n| (z * 0.5f64.powi(n as i32)).exp()).collect();
    FiberPoint {
        coords,
        provenance: Provenance::Canonical { z },
    }
}

/// Fiber through `x0` picking, at each step, the principal square root for
/// `ε = 0` and its negative for `ε = 1`. When the requested root leaves the
/// tower the other root is taken and recorded.
pub fn twisted_fiber(spec: &SpectrumSpec, x0: Complex64, pattern: &str, eps: &[u8]) -> FiberPoint {
    let mut coords = Vec::with_capacity(eps.len() + 1);
    let mut used = Vec::with_capacity(eps.len());
    coords.push(x0);
    let mut x = x0;
    for (k, &e) in eps.iter().enumerate() {
        let level = k as u32 + 1;
        let root = x.sqrt();
        let (want, other) = if e == 0 { (root, -root) } else { (-root, root) };
        x = if spec.level_contains(level, want, FIBER_TOL) || !spec.level_contains(level, other, FIBER_TOL) {
            used.push(e);
            want
        } else {
            used.push(1 - e);
            other
        };
        // Clear negative zeros so that arg(-1) = π picks the root `i`.
        x = Complex64::new(x.re + 0.0, x.im + 0.0);
        coords.push(x);
    }
    FiberPoint {
        coords,
        provenance: Provenance::Twisted {
            pattern: pattern.to_string(),
            requested: eps.to_vec(),
            used,
        },
    }
}

/// Alternating choices `(1, 0, 1, 0, …)`.
pub fn alternating_eps(depth: u32) -> Vec<u8> {
    (0..depth).map(|k| ((k + 1) % 2) as u8).collect()
}

fn sample_z(spec: &SpectrumSpec, k: usize, floor: f64, rng: &mut ChaCha8Rng) -> Complex64 {
    let p = &spec.primitives[k % spec.primitives.len()];
    let (lo, hi) = p.re_range();
    let re = if lo == hi { lo } else { rng.gen_range(lo.max(floor).min(hi)..=hi) };
    let im = match p.im_set() {
        ImSet::Interval { lo, hi } => {
            let a = lo.max(-IM_WINDOW);
            let b = hi.min(IM_WINDOW);
            if a <= b {
                rng.gen_range(a..=b)
            } else if lo.is_finite() {
                lo
            } else {
                hi
            }
        }
        ImSet::Lattice { base, step } => base + step * rng.gen_range(-8i32..=8) as f64,
        ImSet::Periodic { intervals, period } => {
            let (a, b) = intervals[rng.gen_range(0..intervals.len())];
            rng.gen_range(a..=b) + period * rng.gen_range(-4i32..=4) as f64
        }
    };
    Complex64::new(re, im)
}

/// Fibers to depth [`Tower::fiber_depth`].
pub fn sample_fibers(t: &Tower, canonical_count: usize, twisted_count: usize, seed: u64) -> Vec<FiberPoint> {
    sample_fibers_to_depth(t, canonical_count, twisted_count, seed, t.fiber_depth())
}

/// Canonical fibers from sampled `z ∈ Z`, then twisted fibers from base points
/// in `Ω_0` (starting with `1` when it lies there) under the alternating, all-ones
/// and pseudorandom ε-sequences, in that order.
pub fn sample_fibers_to_depth(
    t: &Tower,
    canonical_count: usize,
    twisted_count: usize,
    seed: u64,
    depth: u32,
) -> Vec<FiberPoint> {
    let spec = &t.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = crate::raster::log_floor(spec);
    let mut out = Vec::with_capacity(canonical_count + twisted_count);
    for k in 0..canonical_count {
        let z = sample_z(spec, k, floor, &mut rng);
        out.push(canonical_fiber(z, depth));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut bases: Vec<Complex64> = Vec::new();
    if spec.level_contains(0, one, FIBER_TOL) {
        bases.push(one);
    }
    let per_base = 2 + RANDOM_SEQUENCES;
    let mut k = 0;
    while bases.len() * per_base < twisted_count {
        bases.push(sample_z(spec, k, floor, &mut rng).exp());
        k += 1;
    }
    let mut twisted = Vec::with_capacity(twisted_count);
    'outer: for &x0 in &bases {
        let mut patterns: Vec<(String, Vec<u8>)> = vec![
            ("alternating".into(), alternating_eps(depth)),
            ("all_ones".into(), vec![1; depth as usize]),
        ];
        for r in 0..RANDOM_SEQUENCES {
            let eps = (0..depth).map(|_| rng.gen_range(0..=1u8)).collect();
            patterns.push((format!("random_{r}"), eps));
        }
        for (name, eps) in patterns {
            if twisted.len() == twisted_count {
                break 'outer;
            }
            twisted.push(twisted_fiber(spec, x0, &name, &eps));
        }
    }
    out.extend(twisted);
    out
}

/// Perfectness of the inverse limit, with the reason.
pub fn is_delta_perfect(t: &Tower) -> (Perfectness, String) {
    if t.all_finite() {
        let n = t.depth as usize;
        let upper = t.levels[n].finite_points.as_ref().unwrap();
        let lower = t.levels[n - 1].finite_points.as_ref().unwrap();
        let squares = PointLookup::new(&upper.iter().map(|y| y * y).collect::<Vec<_>>());
        let single_count = lower.iter().filter(|&&x| squares.count(x) < 2).count();
        let counts: Vec<usize> = t.levels.iter().map(Level::size).collect();
        return if single_count == 0 {
            (
                Perfectness::Yes,
                format!("finite levels {counts:?}; every point of level {} has two square roots in level {n}", n - 1),
            )
        } else {
            (
                Perfectness::No,
                format!(
                    "finite levels {counts:?}; {single_count} point(s) of level {} have a single square root in level {n}, giving isolated threads",
                    n - 1
                ),
            )
        };
    }
    if t.levels.iter().any(Level::is_finite) {
        return (Perfectness::Unknown, "tower mixes finite levels and continua".into());
    }
    for level in &t.levels {
        let sizes = level.omega.component_sizes();
        if let Some(pos) = sizes.iter().position(|&s| s < 2) {
            return (
                Perfectness::Unknown,
                format!("level {} has an isolated cell (component {pos})", level.n),
            );
        }
    }
    (
        Perfectness::Yes,
        "every level is raster-perfect and the connecting maps are onto".into(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Primitive;
    use std::f64::consts::TAU;

    fn spec(ps: Vec<Primitive>) -> SpectrumSpec {
        SpectrumSpec::new(None, ps).unwrap()
    }

    fn cantor() -> SpectrumSpec {
        spec(vec![Primitive::VLattice {
            re: 0.0,
            im_base: 0.0,
            im_step: TAU,
        }])
    }

    fn imaginary_axis() -> SpectrumSpec {
        spec(vec![Primitive::VLine { re: 0.0 }])
    }

    fn rect() -> SpectrumSpec {
        spec(vec![Primitive::Rect {
            re_lo: -1.0,
            re_hi: 0.0,
            im_lo: -PI,
            im_hi: PI,
        }])
    }

    #[test]
    fn lattice_levels_are_roots_of_unity() {
        let t = build_tower(&cantor(), 3, Resolution::default()).unwrap();
        for (n, level) in t.levels.iter().enumerate() {
            let pts = level.finite_points.as_ref().unwrap();
            assert_eq!(pts.len(), 1 << n);
            assert_eq!(level.ext_rank, 0);
            for p in pts {
                assert!((p.powi(1 << n) - 1.0).norm() < 1e-12);
            }
        }
        assert_eq!(is_delta_perfect(&t).0, Perfectness::Yes);
    }

    #[test]
    fn zero_spectrum_is_one_point() {
        let t = build_tower(&spec(vec![Primitive::Point { re: 0.0, im: 0.0 }]), 4, Resolution::default()).unwrap();
        for level in &t.levels {
            assert_eq!(level.finite_points.as_deref(), Some(&[Complex64::new(1.0, 0.0)][..]));
            assert_eq!(level.ext_rank, 0);
        }
        assert_eq!(is_delta_perfect(&t).0, Perfectness::No);
        let f = sample_fibers(&t, 2, 2, 0);
        for fp in f {
            assert!(fp.coords.iter().all(|x| (x - 1.0).norm() < 1e-15));
        }
    }

    #[test]
    fn isolated_thread_is_not_perfect() {
        let mut ps = cantor().primitives;
        ps.push(Primitive::Point { re: 1.0, im: 0.0 });
        let t = build_tower(&spec(ps), 4, Resolution::default()).unwrap();
        assert_eq!(is_delta_perfect(&t).0, Perfectness::No);
    }

    #[test]
    fn imaginary_axis_levels_are_circles() {
        let t = build_tower(&imaginary_axis(), 4, Resolution::default()).unwrap();
        for level in &t.levels {
            assert!(level.finite_points.is_none());
            assert_eq!(level.ext_rank, 1);
            assert_eq!(level.sections.len(), 1);
            assert!(level.omega.row_is_full(0));
            assert!(level.origin_enclosed);
        }
        assert_eq!(is_delta_perfect(&t).0, Perfectness::Yes);
    }

    #[test]
    fn squaring_is_exact_in_index_space_for_circles() {
        let t = build_tower(&imaginary_axis(), 3, Resolution::default()).unwrap();
        for n in 0..3 {
            assert_eq!(raster_squaring_defects(&t.levels[n + 1].omega, &t.levels[n].omega), 0);
        }
    }

    #[test]
    fn rect_tower_respects_modulus_bound() {
        let t = build_tower(&rect(), 6, Resolution::default()).unwrap();
        for level in &t.levels {
            let g = level.omega.geom;
            let bound = (0.5f64.powi(level.n as i32) * t.bounds.zeta).exp() * (1.0 + 2.0 * g.u_step());
            for (i, j) in level.omega.occupied() {
                assert!(level.omega.cell_point(i, j).norm() <= bound);
            }
        }
    }

    #[test]
    fn canonical_fiber_on_lattice_matches_closed_form() {
        let f = canonical_fiber(Complex64::new(0.0, TAU), 32);
        for (n, x) in f.coords.iter().enumerate() {
            let expect = 2.0 * (PI * 0.5f64.powi(n as i32)).sin().abs();
            assert!(((1.0 - x).norm() - expect).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn fibers_are_deterministic_and_square_consistent() {
        let t = build_tower(&rect(), 8, Resolution::default()).unwrap();
        let a = sample_fibers(&t, 16, 16, 7);
        let b = sample_fibers(&t, 16, 16, 7);
        assert_eq!(a.len(), 32);
        for (fa, fb) in a.iter().zip(&b) {
            let bits_a: Vec<(u64, u64)> = fa.coords.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
            let bits_b: Vec<(u64, u64)> = fb.coords.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
            assert_eq!(bits_a, bits_b);
            assert!(fa.max_square_defect() <= FIBER_TOL);
        }
    }

    #[test]
    fn fiber_coords_lie_near_their_levels() {
        for s in [rect(), imaginary_axis(), cantor()] {
            let t = build_tower(&s, 6, Resolution::default()).unwrap();
            for f in sample_fibers(&t, 8, 12, 3) {
                for (n, level) in t.levels.iter().enumerate() {
                    assert!(level.omega.near(f.coords[n], 1), "level {n}, point {}", f.coords[n]);
                }
            }
        }
    }

    #[test]
    fn twisted_fiber_on_rect_is_forced_back_to_principal_roots() {
        let t = build_tower(&rect(), 8, Resolution::default()).unwrap();
        let f = twisted_fiber(&t.spec, Complex64::new(1.0, 0.0), "alternating", &alternating_eps(32));
        assert!(f.coords.iter().all(|x| (x - 1.0).norm() < 1e-12));
    }

    #[test]
    fn alternating_fiber_on_circle_stays_away_from_one() {
        let f = twisted_fiber(&imaginary_axis(), Complex64::new(1.0, 0.0), "alternating", &alternating_eps(32));
        // Independent recurrence on principal arguments: θ_{n+1} = θ_n/2 + π·ε_{n+1}.
        let mut theta = 0.0f64;
        for n in 1..=32usize {
            theta = 0.5 * theta + if n % 2 == 1 { PI } else { 0.0 };
            theta = PI - (PI - theta).rem_euclid(TAU);
            let want = Complex64::from_polar(1.0, theta);
            assert!((f.coords[n] - want).norm() < 1e-12);
        }
        let tail = f.coords[16..=32].iter().map(|x| (1.0 - x).norm()).fold(f64::INFINITY, f64::min);
        assert!(tail > 0.5);
    }
}
