//! Per-level plots: `Ω_n` on the log-cylinder and in the plane, with the
//! antipodal set overlaid and complement samples marked.

use crate::raster::CylinderRaster;
use crate::tower::{Level, Tower};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::fmt::Write;

const PANEL: f64 = 480.0;
const MARGIN: f64 = 24.0;
const TITLE: f64 = 28.0;
const FILL: &str = "#3b6ea5";
const ANTIPODAL: &str = "#d1495b";
const SAMPLE: &str = "#edae49";

/// Runs `(start, len)` stacked over consecutive rows `lo..=hi`.
struct Band {
    lo: i64,
    hi: i64,
    start: usize,
    len: usize,
}

fn bands(r: &CylinderRaster) -> Vec<Band> {
    let mut done = Vec::new();
    let mut open: Vec<Band> = Vec::new();
    for row in r.row_range() {
        let runs = r.row_runs(row);
        let mut next = Vec::with_capacity(runs.len());
        for (start, len) in runs {
            match open.iter().position(|b| b.start == start && b.len == len) {
                Some(i) => {
                    let mut b = open.swap_remove(i);
                    b.hi = row;
                    next.push(b);
                }
                None => next.push(Band { lo: row, hi: row, start, len }),
            }
        }
        done.append(&mut open);
        open = next;
    }
    done.append(&mut open);
    done.sort_by_key(|b| (b.lo, b.start));
    done
}

struct Cylinder {
    x0: f64,
    y0: f64,
    row_hi: i64,
    rows: f64,
    cols: f64,
}

impl Cylinder {
    fn new(r: &CylinderRaster) -> Self {
        Cylinder {
            x0: MARGIN,
            y0: MARGIN + TITLE,
            row_hi: r.geom.row_hi,
            rows: r.geom.rows() as f64,
            cols: r.geom.theta_cells as f64,
        }
    }

    fn rect(&self, out: &mut String, b: &Band, start: usize, len: usize, fill: &str) {
        let h = PANEL / self.rows;
        let w = PANEL / self.cols;
        let y = self.y0 + (self.row_hi - b.hi) as f64 * h;
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
            self.x0 + start as f64 * w,
            y,
            len as f64 * w,
            (b.hi - b.lo + 1) as f64 * h
        );
    }

    fn runs(&self, out: &mut String, r: &CylinderRaster, fill: &str) {
        let t = r.geom.theta_cells;
        for b in bands(r) {
            if b.start + b.len > t {
                self.rect(out, &b, b.start, t - b.start, fill);
                self.rect(out, &b, 0, b.start + b.len - t, fill);
            } else {
                self.rect(out, &b, b.start, b.len, fill);
            }
        }
    }

    fn point(&self, r: &CylinderRaster, w: Complex64) -> (f64, f64) {
        let g = r.geom;
        let lo = (g.row_lo as f64 - 0.5) * g.u_step();
        let hi = (g.row_hi as f64 + 0.5) * g.u_step();
        let u = w.norm().ln().clamp(lo, hi);
        let theta = w.arg().rem_euclid(TAU);
        (self.x0 + theta / TAU * PANEL, self.y0 + (hi - u) / (hi - lo) * PANEL)
    }
}

struct Plane {
    x0: f64,
    y0: f64,
    half: f64,
}

impl Plane {
    fn map(&self, w: Complex64) -> (f64, f64) {
        let s = PANEL / (2.0 * self.half);
        (self.x0 + (w.re + self.half) * s, self.y0 + (self.half - w.im) * s)
    }
}

fn circle(out: &mut String, (x, y): (f64, f64), r: f64, fill: &str) {
    let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r}" fill="{fill}"/>"#);
}

/// Annular sector covering the cylinder cells of a band.
fn sector(out: &mut String, plane: &Plane, r: &CylinderRaster, b: &Band) {
    let g = r.geom;
    let u_lo = (b.lo as f64 - 0.5) * g.u_step();
    let u_hi = (b.hi as f64 + 0.5) * g.u_step();
    let d = g.theta_step();
    let a0 = (b.start as f64 - 0.5) * d;
    let a1 = a0 + b.len as f64 * d;
    let steps = (b.len / 8).clamp(1, 64);
    let mut pts = Vec::with_capacity(2 * steps + 2);
    for k in 0..=steps {
        let a = a0 + (a1 - a0) * k as f64 / steps as f64;
        pts.push(plane.map(Complex64::from_polar(u_hi.exp(), a)));
    }
    for k in (0..=steps).rev() {
        let a = a0 + (a1 - a0) * k as f64 / steps as f64;
        pts.push(plane.map(Complex64::from_polar(u_lo.exp(), a)));
    }
    let mut d = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
    }
    let _ = writeln!(out, r#"<path d="{}Z" fill="{ANTIPODAL}" fill-opacity="0.8"/>"#, d);
}

pub fn level_svg(t: &Tower, level: &Level) -> String {
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN + TITLE;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">level {}: log-cylinder (θ →, u ↑) and plane</text>"#,
        MARGIN + 14.0,
        level.n
    );
    let cyl = Cylinder::new(&level.omega);
    let plane = Plane {
        x0: 2.0 * MARGIN + PANEL,
        y0: MARGIN + TITLE,
        half: 1.5 * t.bounds.zeta.exp(),
    };
    for (x, y) in [(cyl.x0, cyl.y0), (plane.x0, plane.y0)] {
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{y}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#888"/>"##
        );
    }
    let _ = writeln!(
        out,
        r#"<clipPath id="plane"><rect x="{}" y="{}" width="{PANEL}" height="{PANEL}"/></clipPath>"#,
        plane.x0, plane.y0
    );

    match &level.finite_points {
        Some(points) => {
            let antipodal: Vec<bool> = points
                .iter()
                .map(|p| points.iter().any(|q| (p + q).norm() <= 1e-9))
                .collect();
            for (p, &a) in points.iter().zip(&antipodal) {
                let fill = if a { ANTIPODAL } else { FILL };
                circle(&mut out, cyl.point(&level.omega, *p), 2.5, fill);
            }
            let _ = writeln!(out, r#"<g clip-path="url(#plane)">"#);
            for (p, &a) in points.iter().zip(&antipodal) {
                circle(&mut out, plane.map(*p), 2.5, if a { ANTIPODAL } else { FILL });
            }
        }
        None => {
            cyl.runs(&mut out, &level.omega, FILL);
            cyl.runs(&mut out, &level.antipodal, ANTIPODAL);
            for &w in &level.component_samples {
                circle(&mut out, cyl.point(&level.omega, w), 4.0, SAMPLE);
            }
            let _ = writeln!(out, r#"<g clip-path="url(#plane)">"#);
            let p = level.planar.as_ref().expect("raster levels carry a planar picture");
            let c = p.cell_size();
            for row in 0..p.size {
                let mut col = 0;
                while col < p.size {
                    if !p.get(row, col) {
                        col += 1;
                        continue;
                    }
                    let start = col;
                    while col < p.size && p.get(row, col) {
                        col += 1;
                    }
                    let (x, y) = plane.map(Complex64::new(
                        -p.half_width + start as f64 * c,
                        p.half_width - row as f64 * c,
                    ));
                    let s = PANEL / (2.0 * plane.half);
                    let _ = writeln!(
                        out,
                        r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{FILL}"/>"#,
                        (col - start) as f64 * c * s,
                        c * s
                    );
                }
            }
            let a = &level.antipodal;
            for b in bands(a) {
                sector(&mut out, &plane, a, &b);
            }
            for &w in &level.component_samples {
                circle(&mut out, plane.map(w), 4.0, SAMPLE);
            }
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}
