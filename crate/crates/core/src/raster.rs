//! Occupancy grids on the log-cylinder `(u, θ)` and on a planar window.
//!
//! Row `i` of a cylinder raster has centre `u = i·h` with `h = 1/u_cells_per_unit`;
//! column `j` has centre `θ = j·δ` with `δ = 2π/theta_cells`. Rows are absolute
//! indices, so squaring `(u, θ) ↦ (2u, 2θ)` is the index map `(i, j) ↦ (2i, 2j mod Θ)`.

use crate::arcs::{wrap_angle, Arc, ArcSet};
use crate::spectrum::{strip_bounds, LevelImage, SpectrumSpec};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::io::Write;
use thiserror::Error;

/// Nudge applied before flooring so that angles differing by exactly π land in
/// columns differing by exactly Θ/2.
const ROUND_BIAS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("level {level}: lattice points {spacing:.3e} rad apart alias at a cell width of {cell:.3e} rad; raise theta_cells")]
    Aliasing { level: u32, spacing: f64, cell: f64 },
    #[error("raster geometries differ")]
    GeometryMismatch,
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub theta_cells: usize,
    pub u_cells_per_unit: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            theta_cells: 2048,
            u_cells_per_unit: 1024,
        }
    }
}

impl Resolution {
    pub fn validate(&self) -> Result<(), RasterError> {
        if !self.theta_cells.is_power_of_two() || self.theta_cells < 8 {
            return Err(RasterError::InvalidResolution(format!(
                "theta_cells must be a power of two ≥ 8, found {}",
                self.theta_cells
            )));
        }
        if self.u_cells_per_unit == 0 {
            return Err(RasterError::InvalidResolution("u_cells_per_unit must be positive".into()));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Resolution {
        Resolution {
            theta_cells: self.theta_cells * 2,
            u_cells_per_unit: self.u_cells_per_unit * 2,
        }
    }

    /// Side length of the planar window grid; odd so the origin is a cell centre.
    pub fn planar_cells(&self) -> usize {
        self.theta_cells / 2 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderGeometry {
    pub theta_cells: usize,
    pub u_cells_per_unit: usize,
    pub row_lo: i64,
    pub row_hi: i64,
}

impl CylinderGeometry {
    pub fn new(res: Resolution, u_lo: f64, u_hi: f64) -> Self {
        let h = 1.0 / res.u_cells_per_unit as f64;
        CylinderGeometry {
            theta_cells: res.theta_cells,
            u_cells_per_unit: res.u_cells_per_unit,
            row_lo: row_index(u_lo, h),
            row_hi: row_index(u_hi, h),
        }
    }

    pub fn resolution(&self) -> Resolution {
        Resolution {
            theta_cells: self.theta_cells,
            u_cells_per_unit: self.u_cells_per_unit,
        }
    }

    pub fn u_step(&self) -> f64 {
        1.0 / self.u_cells_per_unit as f64
    }

    pub fn theta_step(&self) -> f64 {
        TAU / self.theta_cells as f64
    }

    pub fn rows(&self) -> usize {
        (self.row_hi - self.row_lo + 1) as usize
    }

    pub fn row_of(&self, u: f64) -> i64 {
        row_index(u, self.u_step())
    }

    pub fn row_u(&self, row: i64) -> f64 {
        row as f64 * self.u_step()
    }

    /// Column whose centre is nearest to `theta`.
    pub fn col_of(&self, theta: f64) -> usize {
        let k = (wrap_angle(theta) / self.theta_step() + 0.5 + ROUND_BIAS).floor() as usize;
        k % self.theta_cells
    }

    pub fn col_theta(&self, col: usize) -> f64 {
        col as f64 * self.theta_step()
    }

    /// Column range `(start, count)` of cells whose centres are nearest to some
    /// point of the arc.
    fn arc_cols(&self, arc: &Arc) -> (usize, usize) {
        let d = self.theta_step();
        let k_lo = (arc.lo / d + 0.5 + ROUND_BIAS).floor() as i64;
        let k_hi = (arc.hi / d + 0.5 + ROUND_BIAS).floor() as i64;
        let count = ((k_hi - k_lo + 1).max(1) as usize).min(self.theta_cells);
        (k_lo.rem_euclid(self.theta_cells as i64) as usize, count)
    }
}

fn row_index(u: f64, h: f64) -> i64 {
    (u / h + 0.5 + ROUND_BIAS).floor() as i64
}

/// Boolean occupancy over `(u, θ)`; the θ axis wraps.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderRaster {
    pub geom: CylinderGeometry,
    cells: Vec<bool>,
    /// Set when `inf Re = -∞`, so the origin lies in the closure of the planar image.
    pub contains_zero: bool,
}

impl CylinderRaster {
    pub fn empty(geom: CylinderGeometry, contains_zero: bool) -> Self {
        CylinderRaster {
            cells: vec![false; geom.rows() * geom.theta_cells],
            geom,
            contains_zero,
        }
    }

    fn idx(&self, row: i64, col: usize) -> usize {
        (row - self.geom.row_lo) as usize * self.geom.theta_cells + col
    }

    pub fn get(&self, row: i64, col: usize) -> bool {
        if row < self.geom.row_lo || row > self.geom.row_hi {
            return false;
        }
        self.cells[self.idx(row, col % self.geom.theta_cells)]
    }

    pub fn set(&mut self, row: i64, col: usize, v: bool) {
        let i = self.idx(row, col % self.geom.theta_cells);
        self.cells[i] = v;
    }

    pub fn row_slice(&self, row: i64) -> &[bool] {
        let start = self.idx(row, 0);
        &self.cells[start..start + self.geom.theta_cells]
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    pub fn occupied(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        let t = self.geom.theta_cells;
        let lo = self.geom.row_lo;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(k, _)| (lo + (k / t) as i64, k % t))
    }

    pub fn row_range(&self) -> std::ops::RangeInclusive<i64> {
        self.geom.row_lo..=self.geom.row_hi
    }

    /// Mark the product of a `u` interval (lower end may be `-inf`) and an arc set.
    pub fn mark(&mut self, u_lo: f64, u_hi: f64, theta: &ArcSet) {
        let r_lo = if u_lo == f64::NEG_INFINITY {
            self.geom.row_lo
        } else {
            self.geom.row_of(u_lo).max(self.geom.row_lo)
        };
        let r_hi = self.geom.row_of(u_hi).min(self.geom.row_hi);
        if r_lo > r_hi {
            return;
        }
        let t = self.geom.theta_cells;
        let spans: Vec<(usize, usize)> = match theta {
            ArcSet::Full => vec![(0, t)],
            ArcSet::Arcs(arcs) => arcs.iter().map(|a| self.geom.arc_cols(a)).collect(),
        };
        for row in r_lo..=r_hi {
            let base = self.idx(row, 0);
            for &(start, count) in &spans {
                for k in 0..count {
                    self.cells[base + (start + k) % t] = true;
                }
            }
        }
    }

    /// Cells of row `row` as maximal runs `(start, len)`, merged across the wrap.
    pub fn row_runs(&self, row: i64) -> Vec<(usize, usize)> {
        let t = self.geom.theta_cells;
        if row < self.geom.row_lo || row > self.geom.row_hi {
            return Vec::new();
        }
        let s = self.row_slice(row);
        if s.iter().all(|&c| c) {
            return vec![(0, t)];
        }
        let Some(gap) = s.iter().position(|&c| !c) else {
            return Vec::new();
        };
        let mut runs = Vec::new();
        let mut k = 0;
        while k < t {
            let j = (gap + k) % t;
            if s[j] {
                let start = j;
                let mut len = 0;
                while k < t && s[(gap + k) % t] {
                    len += 1;
                    k += 1;
                }
                runs.push((start, len));
            } else {
                k += 1;
            }
        }
        runs.sort();
        runs
    }

    pub fn row_is_full(&self, row: i64) -> bool {
        row >= self.geom.row_lo && row <= self.geom.row_hi && self.row_slice(row).iter().all(|&c| c)
    }

    pub fn row_is_empty(&self, row: i64) -> bool {
        row < self.geom.row_lo || row > self.geom.row_hi || !self.row_slice(row).iter().any(|&c| c)
    }

    /// Sizes of the 8-connected occupied components (θ wraps).
    pub fn component_sizes(&self) -> Vec<usize> {
        let t = self.geom.theta_cells;
        let rows = self.geom.rows();
        let mut seen = vec![false; self.cells.len()];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.cells.len() {
            if !self.cells[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut size = 0;
            while let Some(k) = queue.pop_front() {
                size += 1;
                let (r, c) = ((k / t) as i64, k % t);
                for dr in -1i64..=1 {
                    let rr = r + dr;
                    if rr < 0 || rr >= rows as i64 {
                        continue;
                    }
                    for dc in [t - 1, 0, 1] {
                        let cc = (c + dc) % t;
                        let kk = rr as usize * t + cc;
                        if self.cells[kk] && !seen[kk] {
                            seen[kk] = true;
                            queue.push_back(kk);
                        }
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }

    /// Rotate by `shift` columns.
    pub fn rotated(&self, shift: usize) -> CylinderRaster {
        let t = self.geom.theta_cells;
        let mut out = CylinderRaster::empty(self.geom, self.contains_zero);
        for (row, col) in self.occupied() {
            out.set(row, (col + shift) % t, true);
        }
        out
    }

    pub fn cellwise_and_not(&self, other: &CylinderRaster) -> Result<CylinderRaster, RasterError> {
        if self.geom != other.geom {
            return Err(RasterError::GeometryMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.cells.iter_mut().zip(&other.cells) {
            *a = *a && !*b;
        }
        Ok(out)
    }

    pub fn is_subset_of(&self, other: &CylinderRaster) -> bool {
        self.geom == other.geom && self.cells.iter().zip(&other.cells).all(|(a, b)| !*a || *b)
    }

    /// Planar point at a cell centre.
    pub fn cell_point(&self, row: i64, col: usize) -> Complex64 {
        Complex64::from_polar(self.geom.row_u(row).exp(), self.geom.col_theta(col))
    }

    /// Whether `w` lies within `cells` cells (Chebyshev, in index space) of an
    /// occupied cell.
    pub fn near(&self, w: Complex64, cells: i64) -> bool {
        if w.norm() == 0.0 {
            return self.contains_zero;
        }
        let row = self.geom.row_of(w.norm().ln());
        let col = self.geom.col_of(w.arg()) as i64;
        let t = self.geom.theta_cells as i64;
        for r in row - cells..=row + cells {
            if r < self.geom.row_lo || r > self.geom.row_hi {
                continue;
            }
            for c in col - cells..=col + cells {
                if self.get(r, c.rem_euclid(t) as usize) {
                    return true;
                }
            }
        }
        false
    }
}

/// Lower end of the `u` window for level 0 when `Re Z` is unbounded below:
/// two units under the smallest finite real part among the primitives.
pub fn log_floor(spec: &SpectrumSpec) -> f64 {
    let b = strip_bounds(spec);
    if b.eta.is_finite() {
        return b.eta;
    }
    let mut lo = b.zeta;
    for p in &spec.primitives {
        let (a, z) = p.re_range();
        if a.is_finite() {
            lo = lo.min(a);
        }
        lo = lo.min(z);
    }
    lo - 2.0
}

/// Geometry used for level `n` of a spec.
pub fn level_geometry(spec: &SpectrumSpec, n: u32, res: Resolution) -> CylinderGeometry {
    let scale = 0.5f64.powi(n as i32);
    let b = strip_bounds(spec);
    CylinderGeometry::new(res, scale * log_floor(spec), scale * b.zeta)
}

/// Rasterize precomputed level images. With `strict`, discrete images whose
/// points would alias at this resolution are rejected.
pub fn rasterize_images(
    geom: CylinderGeometry,
    images: &[LevelImage],
    contains_zero: bool,
    level: u32,
    strict: bool,
) -> Result<CylinderRaster, RasterError> {
    let mut r = CylinderRaster::empty(geom, contains_zero);
    let cell = geom.theta_step();
    for img in images {
        if strict {
            if let Some(spacing) = img.min_spacing {
                if spacing < 2.0 * cell {
                    return Err(RasterError::Aliasing { level, spacing, cell });
                }
            }
        }
        r.mark(img.u_lo, img.u_hi, &img.theta);
    }
    Ok(r)
}

/// Occupancy grid of `Ω_n = cl(exp(2⁻ⁿ Z))` in log-cylinder coordinates.
pub fn rasterize_level(spec: &SpectrumSpec, n: u32, res: Resolution) -> Result<CylinderRaster, RasterError> {
    res.validate()?;
    let geom = level_geometry(spec, n, res);
    let contains_zero = strip_bounds(spec).eta == f64::NEG_INFINITY;
    rasterize_images(geom, &spec.level_images(n), contains_zero, n, true)
}

/// Cells `(u, θ)` such that `(u, θ + π)` is also occupied.
pub fn antipodal_set(r: &CylinderRaster) -> CylinderRaster {
    let t = r.geom.theta_cells;
    let half = t / 2;
    let mut out = CylinderRaster::empty(r.geom, r.contains_zero);
    for row in r.row_range() {
        let s = r.row_slice(row);
        let base = out.idx(row, 0);
        for j in 0..t {
            out.cells[base + j] = s[j] && s[(j + half) % t];
        }
    }
    out
}

/// One-dimensional squared distance transform (lower envelope of parabolas).
fn dt1d(f: &[f64], w2: f64, out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let mut s = f64::NEG_INFINITY;
        while k >= 0 {
            let p = v[k as usize];
            let qf = q as f64;
            let pf = p as f64;
            s = ((f[q] + w2 * qf * qf) - (f[p] + w2 * pf * pf)) / (2.0 * w2 * (qf - pf));
            if s <= z[k as usize] {
                k -= 1;
            } else {
                break;
            }
        }
        if k < 0 {
            k = 0;
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
        } else {
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
        }
    }
    if k < 0 {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        let pf = p as f64;
        while z[j + 1] < pf {
            j += 1;
        }
        let d = pf - v[j] as f64;
        *o = w2 * d * d + f[v[j]];
    }
}

/// Squared distance to the nearest occupied cell of `r`, with per-axis weights.
fn squared_distance_field(r: &CylinderRaster, w_u: f64, w_theta: f64) -> Vec<f64> {
    let t = r.geom.theta_cells;
    let rows = r.geom.rows();
    let mut field = vec![f64::INFINITY; rows * t];
    let mut ext = vec![f64::INFINITY; 3 * t];
    let mut ext_out = vec![0f64; 3 * t];
    for i in 0..rows {
        for j in 0..t {
            let v = if r.cells[i * t + j] { 0.0 } else { f64::INFINITY };
            ext[j] = v;
            ext[j + t] = v;
            ext[j + 2 * t] = v;
        }
        dt1d(&ext, w_theta * w_theta, &mut ext_out);
        field[i * t..(i + 1) * t].copy_from_slice(&ext_out[t..2 * t]);
    }
    let mut col = vec![0f64; rows];
    let mut col_out = vec![0f64; rows];
    for j in 0..t {
        for i in 0..rows {
            col[i] = field[i * t + j];
        }
        dt1d(&col, w_u * w_u, &mut col_out);
        for i in 0..rows {
            field[i * t + j] = col_out[i];
        }
    }
    field
}

fn min_distance(a: &CylinderRaster, b: &CylinderRaster, w_u: f64, w_theta: f64) -> Result<f64, RasterError> {
    if a.geom != b.geom {
        return Err(RasterError::GeometryMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(f64::INFINITY);
    }
    let field = squared_distance_field(b, w_u, w_theta);
    let m = a
        .cells
        .iter()
        .zip(&field)
        .filter(|(&c, _)| c)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    Ok(m.sqrt())
}

/// Minimum distance between occupied cells of `a` and `b` in the cylinder metric
/// `sqrt(Δu² + Δθ²)`; `+inf` if either is empty.
pub fn separation_distance(a: &CylinderRaster, b: &CylinderRaster) -> Result<f64, RasterError> {
    min_distance(a, b, a.geom.u_step(), a.geom.theta_step())
}

/// The same distance measured in cell units on both axes.
pub fn separation_cells(a: &CylinderRaster, b: &CylinderRaster) -> Result<f64, RasterError> {
    min_distance(a, b, 1.0, 1.0)
}

/// Occupancy over the square window `[-half_width, half_width]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarRaster {
    pub size: usize,
    pub half_width: f64,
    cells: Vec<bool>,
}

impl PlanarRaster {
    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_width / self.size as f64
    }

    /// Centre of cell `(row, col)`; row 0 is the top edge.
    pub fn center(&self, row: usize, col: usize) -> Complex64 {
        let c = self.cell_size();
        Complex64::new(
            -self.half_width + (col as f64 + 0.5) * c,
            self.half_width - (row as f64 + 0.5) * c,
        )
    }

    pub fn cell_of(&self, w: Complex64) -> Option<(usize, usize)> {
        let c = self.cell_size();
        let col = ((w.re + self.half_width) / c).floor();
        let row = ((self.half_width - w.im) / c).floor();
        if col < 0.0 || row < 0.0 || col >= self.size as f64 || row >= self.size as f64 {
            None
        } else {
            Some((row as usize, col as usize))
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.size + col]
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Binary PGM (P5), one byte per cell, occupied cells white.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.size, self.size)?;
        let bytes: Vec<u8> = self.cells.iter().map(|&c| if c { 255 } else { 0 }).collect();
        w.write_all(&bytes)
    }

    /// Label bounded components of the complement: 4-connected unoccupied regions
    /// not reachable from the window border.
    pub fn bounded_components(&self) -> (Vec<u32>, usize) {
        let n = self.size;
        // 0 = occupied or unvisited, u32::MAX = exterior, 1.. = bounded component id
        let mut label = vec![0u32; n * n];
        let mut queue = VecDeque::new();
        let free = |k: usize| !self.cells[k];
        for k in 0..n {
            for idx in [k, (n - 1) * n + k, k * n, k * n + n - 1] {
                if free(idx) && label[idx] == 0 {
                    label[idx] = u32::MAX;
                    queue.push_back(idx);
                }
            }
        }
        let flood = |queue: &mut VecDeque<usize>, label: &mut Vec<u32>, id: u32| {
            while let Some(k) = queue.pop_front() {
                let (r, c) = (k / n, k % n);
                let mut visit = |kk: usize| {
                    if free(kk) && label[kk] == 0 {
                        label[kk] = id;
                        queue.push_back(kk);
                    }
                };
                if r > 0 {
                    visit(k - n);
                }
                if r + 1 < n {
                    visit(k + n);
                }
                if c > 0 {
                    visit(k - 1);
                }
                if c + 1 < n {
                    visit(k + 1);
                }
            }
        };
        flood(&mut queue, &mut label, u32::MAX);
        let mut count = 0u32;
        for k in 0..n * n {
            if free(k) && label[k] == 0 {
                count += 1;
                label[k] = count;
                queue.push_back(k);
                flood(&mut queue, &mut label, count);
            }
        }
        (label, count as usize)
    }
}

/// 2-D prefix sums over a cylinder raster for O(1) rectangle occupancy queries.
struct PrefixSums {
    t: usize,
    row_lo: i64,
    rows: usize,
    sums: Vec<u32>,
}

impl PrefixSums {
    fn new(r: &CylinderRaster) -> Self {
        let t = r.geom.theta_cells;
        let rows = r.geom.rows();
        let mut sums = vec![0u32; (rows + 1) * (t + 1)];
        for i in 0..rows {
            let mut acc = 0u32;
            for j in 0..t {
                acc += r.cells[i * t + j] as u32;
                sums[(i + 1) * (t + 1) + j + 1] = sums[i * (t + 1) + j + 1] + acc;
            }
        }
        PrefixSums {
            t,
            row_lo: r.geom.row_lo,
            rows,
            sums,
        }
    }

    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> u32 {
        // inclusive r0..=r1, c0..=c1
        let w = self.t + 1;
        self.sums[(r1 + 1) * w + c1 + 1] + self.sums[r0 * w + c0] - self.sums[r0 * w + c1 + 1] - self.sums[(r1 + 1) * w + c0]
    }

    /// Any occupied cell with row in `[row_a, row_b]` and column in the cyclic
    /// range starting at `col` of length `count`.
    fn any(&self, row_a: i64, row_b: i64, col: usize, count: usize) -> bool {
        let a = (row_a - self.row_lo).max(0);
        let b = (row_b - self.row_lo).min(self.rows as i64 - 1);
        if a > b || count == 0 {
            return false;
        }
        let (a, b) = (a as usize, b as usize);
        if count >= self.t {
            return self.rect(a, b, 0, self.t - 1) > 0;
        }
        let end = col + count - 1;
        if end < self.t {
            self.rect(a, b, col, end) > 0
        } else {
            self.rect(a, b, col, self.t - 1) > 0 || self.rect(a, b, 0, end - self.t) > 0
        }
    }
}

/// Planar image of a cylinder raster. A planar cell is occupied when its box
/// meets the image of some occupied cylinder cell (conservative, so thin curves
/// stay closed). When `contains_zero`, everything below the lowest row is
/// treated as the cone over that row, and the origin cell is occupied.
pub fn to_planar(r: &CylinderRaster, size: usize) -> PlanarRaster {
    let g = r.geom;
    let top = (g.row_hi as f64 + 0.5) * g.u_step();
    let half_width = 1.5 * top.exp();
    let mut p = PlanarRaster {
        size,
        half_width,
        cells: vec![false; size * size],
    };
    let sums = PrefixSums::new(r);
    let c = p.cell_size();
    let u_bottom = (g.row_lo as f64 - 0.5) * g.u_step();
    let d = g.theta_step();
    for row in 0..size {
        for col in 0..size {
            let x0 = -half_width + col as f64 * c;
            let x1 = x0 + c;
            let y1 = half_width - row as f64 * c;
            let y0 = y1 - c;
            let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
            let r_max = corners.iter().map(|&(x, y)| x.hypot(y)).fold(0.0, f64::max);
            let contains_origin = x0 <= 0.0 && x1 >= 0.0 && y0 <= 0.0 && y1 >= 0.0;
            let occupied = if contains_origin {
                if r.contains_zero {
                    true
                } else {
                    sums.any(g.row_lo, g.row_of(r_max.ln()), 0, g.theta_cells)
                }
            } else {
                let dx = if x0 > 0.0 { x0 } else if x1 < 0.0 { -x1 } else { 0.0 };
                let dy = if y0 > 0.0 { y0 } else if y1 < 0.0 { -y1 } else { 0.0 };
                let r_min = dx.hypot(dy);
                // Angular extent: the box does not contain the origin, so it
                // subtends less than π; measure corner angles relative to the centre.
                let mid = Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)).arg();
                let mut lo = 0.0f64;
                let mut hi = 0.0f64;
                for &(x, y) in &corners {
                    let a = y.atan2(x) - mid;
                    let a = (a + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                let arc = Arc::new(mid + lo, mid + hi);
                let k_lo = (arc.lo / d + 0.5 + ROUND_BIAS).floor() as i64;
                let k_hi = (arc.hi / d + 0.5 + ROUND_BIAS).floor() as i64;
                let start = k_lo.rem_euclid(g.theta_cells as i64) as usize;
                let count = ((k_hi - k_lo + 1) as usize).min(g.theta_cells);
                let ln_min = r_min.ln();
                let row_a = if ln_min < u_bottom { g.row_lo } else { g.row_of(ln_min) };
                let mut row_b = g.row_of(r_max.ln());
                if r.contains_zero {
                    row_b = row_b.max(g.row_lo);
                }
                sums.any(row_a, row_b, start, count)
            };
            p.cells[row * size + col] = occupied;
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementComponents {
    pub count: usize,
    /// One interior point per bounded component, in component label order.
    pub samples: Vec<Complex64>,
    /// Whether the origin lies in a bounded component of the complement.
    pub origin_enclosed: bool,
}

/// Bounded components of `C ∖ Ω` with one interior sample each. The sample is
/// the component cell farthest (4-step metric) from the component's edge.
pub fn bounded_complement_components(r: &CylinderRaster, planar_size: usize) -> ComplementComponents {
    let p = to_planar(r, planar_size);
    complement_components_of(&p)
}

pub fn complement_components_of(p: &PlanarRaster) -> ComplementComponents {
    let n = p.size;
    let (label, count) = p.bounded_components();
    let mut depth = vec![u32::MAX; n * n];
    let mut queue = VecDeque::new();
    for k in 0..n * n {
        let l = label[k];
        if l == 0 || l == u32::MAX {
            continue;
        }
        let (r, c) = (k / n, k % n);
        let on_edge = [(r > 0).then(|| k - n), (r + 1 < n).then(|| k + n), (c > 0).then(|| k - 1), (c + 1 < n).then(|| k + 1)]
            .iter()
            .any(|nb| nb.is_none_or(|kk| label[kk] != l));
        if on_edge {
            depth[k] = 0;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        let (r, c) = (k / n, k % n);
        let l = label[k];
        for nb in [(r > 0).then(|| k - n), (r + 1 < n).then(|| k + n), (c > 0).then(|| k - 1), (c + 1 < n).then(|| k + 1)]
            .into_iter()
            .flatten()
        {
            if label[nb] == l && depth[nb] == u32::MAX {
                depth[nb] = depth[k] + 1;
                queue.push_back(nb);
            }
        }
    }
    let mut best: Vec<Option<(u32, usize)>> = vec![None; count];
    for k in 0..n * n {
        let l = label[k];
        if l == 0 || l == u32::MAX {
            continue;
        }
        let slot = &mut best[(l - 1) as usize];
        if slot.is_none_or(|(d, _)| depth[k] > d) {
            *slot = Some((depth[k], k));
        }
    }
    let samples = best
        .into_iter()
        .map(|b| {
            let (_, k) = b.expect("every label has a cell");
            p.center(k / n, k % n)
        })
        .collect();
    let origin_enclosed = p
        .cell_of(Complex64::new(0.0, 0.0))
        .map(|(r, c)| {
            let l = label[r * n + c];
            l != 0 && l != u32::MAX
        })
        .unwrap_or(false);
    ComplementComponents {
        count,
        samples,
        origin_enclosed,
    }
}

/// Maximal occupied arcs of the row nearest to `u`, merged across the wrap.
/// Arc endpoints are cell edges, so a full row has length 2π.
pub fn circle_section(r: &CylinderRaster, u: f64) -> Vec<Arc> {
    let row = r.geom.row_of(u);
    let d = r.geom.theta_step();
    r.row_runs(row)
        .into_iter()
        .map(|(start, len)| {
            if len == r.geom.theta_cells {
                Arc { lo: 0.0, hi: TAU }
            } else {
                let lo = start as f64 * d - 0.5 * d;
                Arc::new(lo, lo + len as f64 * d)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{Primitive, SpectrumSpec};
    use std::f64::consts::PI;

    fn res() -> Resolution {
        Resolution::default()
    }

    fn ring(u: f64, arcs: ArcSet) -> CylinderRaster {
        let geom = CylinderGeometry::new(res(), -0.01, 0.01);
        let mut r = CylinderRaster::empty(geom, false);
        r.mark(u, u, &arcs);
        r
    }

    fn arc(lo: f64, hi: f64) -> ArcSet {
        ArcSet::from_arcs([Arc::new(lo, hi)])
    }

    #[test]
    fn lattice_level_two_has_four_points() {
        let spec = SpectrumSpec::new(
            None,
            vec![Primitive::VLattice {
                re: 0.0,
                im_base: 0.0,
                im_step: TAU,
            }],
        )
        .unwrap();
        let r = rasterize_level(&spec, 2, res()).unwrap();
        let cells: Vec<_> = r.occupied().collect();
        assert_eq!(cells, vec![(0, 0), (0, 512), (0, 1024), (0, 1536)]);
    }

    #[test]
    fn lattice_aliasing_is_reported() {
        let spec = SpectrumSpec::new(
            None,
            vec![Primitive::VLattice {
                re: 0.0,
                im_base: 0.0,
                im_step: TAU,
            }],
        )
        .unwrap();
        let coarse = Resolution {
            theta_cells: 64,
            u_cells_per_unit: 16,
        };
        assert!(rasterize_level(&spec, 4, coarse).is_ok());
        assert!(matches!(rasterize_level(&spec, 6, coarse), Err(RasterError::Aliasing { level: 6, .. })));
    }

    #[test]
    fn imaginary_axis_is_full_circle() {
        let spec = SpectrumSpec::new(None, vec![Primitive::VLine { re: 0.0 }]).unwrap();
        for n in [0, 3, 7] {
            let r = rasterize_level(&spec, n, res()).unwrap();
            assert_eq!(r.geom.rows(), 1);
            assert!(r.row_is_full(0));
            assert!(!r.contains_zero);
        }
    }

    #[test]
    fn rect_level_one_band() {
        let spec = SpectrumSpec::new(
            None,
            vec![Primitive::Rect {
                re_lo: -1.0,
                re_hi: 0.0,
                im_lo: -PI,
                im_hi: PI,
            }],
        )
        .unwrap();
        let r = rasterize_level(&spec, 1, res()).unwrap();
        // Image-arithmetic oracle: u ∈ [-1/2, 0], θ ∈ [-π/2, π/2].
        assert_eq!(r.geom.row_lo, -512);
        assert_eq!(r.geom.row_hi, 0);
        for row in [-512, -256, 0] {
            let runs = r.row_runs(row);
            assert_eq!(runs, vec![(1536, 1025)]);
        }
        assert!(!r.get(-256, 513) && !r.get(-256, 1535));
    }

    #[test]
    fn antipodal_examples() {
        let full = ring(0.0, ArcSet::Full);
        assert_eq!(antipodal_set(&full), full);
        assert!(antipodal_set(&ring(0.0, arc(0.0, 0.9 * PI))).is_empty());
        let a = antipodal_set(&ring(0.0, arc(0.0, 1.2 * PI)));
        let want = ring(0.0, ArcSet::from_arcs([Arc::new(0.0, 0.2 * PI), Arc::new(PI, 1.2 * PI)]));
        assert_eq!(a, want);
    }

    #[test]
    fn separation_examples() {
        let a = ring(0.0, arc(0.0, PI / 4.0));
        let b = ring(0.0, arc(PI / 2.0, 3.0 * PI / 4.0));
        let d = separation_distance(&a, &b).unwrap();
        let cell = TAU / 2048.0;
        // brute-force pairwise oracle
        let mut brute = f64::INFINITY;
        for (ra, ca) in a.occupied() {
            for (rb, cb) in b.occupied() {
                let dt = {
                    let x = (ca as i64 - cb as i64).rem_euclid(2048);
                    x.min(2048 - x) as f64 * cell
                };
                let du = (ra - rb) as f64 / 1024.0;
                brute = brute.min(dt.hypot(du));
            }
        }
        assert!((d - brute).abs() < 1e-12);
        assert!((d - PI / 4.0).abs() <= cell + 1e-12);
        let empty = ring(0.0, ArcSet::empty());
        assert_eq!(separation_distance(&a, &empty).unwrap(), f64::INFINITY);
        assert_eq!(separation_distance(&a, &a).unwrap(), 0.0);
        let other = CylinderRaster::empty(CylinderGeometry::new(res(), -1.0, 0.0), false);
        assert_eq!(separation_distance(&a, &other), Err(RasterError::GeometryMismatch));
    }

    #[test]
    fn complement_components_examples() {
        let geom = CylinderGeometry::new(res(), -2.0, 0.0);
        let size = res().planar_cells();

        let mut disc = CylinderRaster::empty(geom, true);
        disc.mark(f64::NEG_INFINITY, 0.0, &ArcSet::Full);
        assert_eq!(bounded_complement_components(&disc, size).count, 0);

        let mut circle = CylinderRaster::empty(geom, false);
        circle.mark(0.0, 0.0, &ArcSet::Full);
        let c = bounded_complement_components(&circle, size);
        assert_eq!(c.count, 1);
        assert!(c.samples[0].norm() < 0.05);
        assert!(c.origin_enclosed);

        let mut three = CylinderRaster::empty(geom, false);
        for u in [0.0, -1.0, -2.0] {
            three.mark(u, u, &ArcSet::Full);
        }
        assert_eq!(bounded_complement_components(&three, size).count, 3);
        assert_eq!(bounded_complement_components(&three, 2 * size + 1).count, 3);
    }

    #[test]
    fn circle_section_examples() {
        let full = ring(0.0, ArcSet::Full);
        let s = circle_section(&full, 0.0);
        assert_eq!(s.len(), 1);
        assert!((s[0].len() - TAU).abs() < 1e-12);
        assert!(circle_section(&ring(0.0, ArcSet::empty()), 0.0).is_empty());
        let wrap = ring(0.0, arc(-0.3, 0.3));
        let s = circle_section(&wrap, 0.0);
        assert_eq!(s.len(), 1);
        assert!((s[0].len() - 0.6).abs() < 2.0 * TAU / 2048.0);
    }

    #[test]
    fn pgm_header() {
        let p = to_planar(&ring(0.0, ArcSet::Full), 33);
        let mut buf = Vec::new();
        p.write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n33 33\n255\n"));
        assert_eq!(buf.len(), "P5\n33 33\n255\n".len() + 33 * 33);
    }
}
