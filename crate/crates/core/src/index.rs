//! Winding numbers of closed symbol curves and the Fredholm-index kernel test.
//!
//! Toeplitz indices come from the symbol (`ind T_f = −wind(f)`), never from
//! matrix truncations.

use crate::document::{access, Document, Table, Value};
use crate::spectrum::SpecError;
use crate::tower::{Level, Tower};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

pub const MIN_SAMPLES: usize = 16;
pub const MAX_SAMPLES: usize = 1 << 18;
const START_SAMPLES: usize = 256;

/// Symbol samples kept when checking a model against a level.
const CONSISTENCY_SAMPLES: usize = 512;

/// Cells of slack allowed between a model's essential spectrum and the level raster.
const CONSISTENCY_CELLS: i64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("λ = {lambda} lies on the curve (closest sample at {distance:.3e})")]
    OnCurve { lambda: Complex64, distance: f64 },
    #[error("a closed curve needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("level {level}: the model's essential spectrum reaches {point}, outside Ω_{level}")]
    Inconsistent { level: u32, point: Complex64 },
}

/// A function on the unit circle, evaluated at `e^{it}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    /// `Σ c_k z^k`, `k ≥ 0`.
    Polynomial { coeffs: Vec<Complex64> },
    /// `Σ c_k z^k` over arbitrary integer `k`.
    Trigonometric { terms: Vec<(i64, Complex64)> },
    /// `exp(2⁻ⁿ Log f)` with the branch cut of `Log` along the ray at angle `cut`.
    Root { base: Box<Symbol>, n: u32, cut: f64 },
}

impl Symbol {
    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            Symbol::Polynomial { coeffs } => {
                let z = Complex64::from_polar(1.0, t);
                coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
            }
            Symbol::Trigonometric { terms } => terms
                .iter()
                .map(|(k, c)| c * Complex64::from_polar(1.0, *k as f64 * t))
                .sum(),
            Symbol::Root { base, n, cut } => {
                let w = base.eval(t);
                let arg = cut - (cut - w.arg()).rem_euclid(TAU);
                let log = Complex64::new(w.norm().ln(), arg);
                (log * 0.5f64.powi(*n as i32)).exp()
            }
        }
    }

    /// Direction of a ray from the origin that the curve never meets, if any.
    pub fn omitted_ray(&self) -> Option<f64> {
        let curve = SymbolCurve::from_symbol(self.clone(), 4096);
        if curve.samples.iter().any(|w| w.norm() == 0.0) {
            return None;
        }
        if winding_number(&curve, Complex64::new(0.0, 0.0)).ok()? != 0 {
            return None;
        }
        // The curve does not wind, so its unwrapped argument stays in an interval
        // shorter than 2π; the ray opposite the middle of that interval is missed
        // if the interval leaves room around it.
        let mut theta = curve.samples[0].arg();
        let (mut lo, mut hi) = (theta, theta);
        for w in curve.samples.windows(2) {
            theta += increment(w[0], w[1], Complex64::new(0.0, 0.0));
            lo = lo.min(theta);
            hi = hi.max(theta);
        }
        let step = curve
            .samples
            .windows(2)
            .map(|w| increment(w[0], w[1], Complex64::new(0.0, 0.0)).abs())
            .fold(0.0, f64::max);
        if hi - lo + 4.0 * step < TAU {
            Some(crate::arcs::wrap_angle(0.5 * (lo + hi) + PI))
        } else {
            None
        }
    }

    fn describe(&self) -> String {
        match self {
            Symbol::Polynomial { coeffs } => format!("polynomial of degree {}", coeffs.len().saturating_sub(1)),
            Symbol::Trigonometric { terms } => format!("trigonometric polynomial with {} terms", terms.len()),
            Symbol::Root { base, n, .. } => format!("2^-{n} power of the {}", base.describe()),
        }
    }
}

/// A closed curve given by ordered samples; the last sample connects to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolCurve {
    pub samples: Vec<Complex64>,
    /// When present, the curve can be resampled more finely.
    pub source: Option<Symbol>,
}

impl SymbolCurve {
    pub fn from_symbol(symbol: Symbol, count: usize) -> Self {
        let count = count.max(MIN_SAMPLES);
        let samples = (0..count).map(|k| symbol.eval(TAU * k as f64 / count as f64)).collect();
        SymbolCurve {
            samples,
            source: Some(symbol),
        }
    }

    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self, IndexError> {
        if samples.len() < MIN_SAMPLES {
            return Err(IndexError::TooFewSamples(samples.len()));
        }
        Ok(SymbolCurve { samples, source: None })
    }

    pub fn min_distance(&self, lambda: Complex64) -> f64 {
        self.samples.iter().map(|w| (w - lambda).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Signed angle swept by the segment `a → b` as seen from `lambda`.
fn increment(a: Complex64, b: Complex64, lambda: Complex64) -> f64 {
    let p = a - lambda;
    let q = b - lambda;
    (p.re * q.im - p.im * q.re).atan2(p.re * q.re + p.im * q.im)
}

/// Whether every segment is short relative to its distance from `lambda`,
/// and sweeps less than a quarter turn.
fn resolved(samples: &[Complex64], lambda: Complex64) -> Option<f64> {
    let n = samples.len();
    let mut total = 0.0;
    for k in 0..n {
        let a = samples[k];
        let b = samples[(k + 1) % n];
        let gap = (b - a).norm();
        let da = (a - lambda).norm();
        let db = (b - lambda).norm();
        if da == 0.0 || db == 0.0 || gap >= da.min(db) {
            return None;
        }
        let inc = increment(a, b, lambda);
        if inc.abs() >= 0.5 * PI {
            return None;
        }
        total += inc;
    }
    Some(total)
}

pub fn winding_number(c: &SymbolCurve, lambda: Complex64) -> Result<i64, IndexError> {
    let on_curve = |samples: &[Complex64]| IndexError::OnCurve {
        lambda,
        distance: samples.iter().map(|w| (w - lambda).norm()).fold(f64::INFINITY, f64::min),
    };
    if let Some(total) = resolved(&c.samples, lambda) {
        return Ok((total / TAU).round() as i64);
    }
    let Some(symbol) = &c.source else {
        return Err(on_curve(&c.samples));
    };
    let mut count = (c.samples.len() * 2).max(START_SAMPLES);
    loop {
        let refined = SymbolCurve::from_symbol(symbol.clone(), count);
        if let Some(total) = resolved(&refined.samples, lambda) {
            return Ok((total / TAU).round() as i64);
        }
        if count >= MAX_SAMPLES {
            return Err(on_curve(&refined.samples));
        }
        count *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Toeplitz { symbol: Symbol },
    /// Multiplication by `z` on `L²` of the level itself: normal, index zero.
    Multiplication,
    DirectSum { parts: Vec<OperatorModel> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorModel {
    pub kind: ModelKind,
    pub description: String,
    /// Level the model is declared for; `None` means level 0, with deeper
    /// levels derived from it where possible.
    pub level: Option<u32>,
}

impl OperatorModel {
    pub fn toeplitz(symbol: Symbol) -> Self {
        OperatorModel {
            description: format!("Toeplitz operator with {} symbol", symbol.describe()),
            kind: ModelKind::Toeplitz { symbol },
            level: None,
        }
    }

    pub fn multiplication() -> Self {
        OperatorModel {
            kind: ModelKind::Multiplication,
            description: "multiplication operator on the level".into(),
            level: None,
        }
    }

    pub fn direct_sum(parts: Vec<OperatorModel>) -> Self {
        OperatorModel {
            description: format!("direct sum of {} models", parts.len()),
            kind: ModelKind::DirectSum { parts },
            level: None,
        }
    }

    /// Model for `q(2⁻ⁿ)`. Declared models apply at their own level; a level-0
    /// Toeplitz symbol is carried to level `n` by its `2⁻ⁿ`-th power when it
    /// omits a ray, and is otherwise unavailable there.
    pub fn at_level(&self, n: u32) -> Result<OperatorModel, String> {
        if let Some(k) = self.level {
            return if k == n {
                Ok(self.clone())
            } else {
                Err(format!("model declared for level {k} only"))
            };
        }
        match &self.kind {
            ModelKind::Multiplication => Ok(self.clone()),
            ModelKind::Toeplitz { symbol } if n == 0 => Ok(OperatorModel::toeplitz(symbol.clone())),
            ModelKind::Toeplitz { symbol } => match symbol.omitted_ray() {
                Some(cut) => Ok(OperatorModel::toeplitz(Symbol::Root {
                    base: Box::new(symbol.clone()),
                    n,
                    cut,
                })),
                None => Err("symbol meets every ray, so no principal root is defined".into()),
            },
            ModelKind::DirectSum { parts } => Ok(OperatorModel::direct_sum(
                parts.iter().map(|p| p.at_level(n)).collect::<Result<_, _>>()?,
            )),
        }
    }

    fn symbols(&self) -> Vec<&Symbol> {
        match &self.kind {
            ModelKind::Toeplitz { symbol } => vec![symbol],
            ModelKind::Multiplication => Vec::new(),
            ModelKind::DirectSum { parts } => parts.iter().flat_map(|p| p.symbols()).collect(),
        }
    }
}

pub fn fredholm_index(m: &OperatorModel, lambda: Complex64) -> Result<i64, IndexError> {
    match &m.kind {
        ModelKind::Toeplitz { symbol } => {
            let curve = SymbolCurve::from_symbol(symbol.clone(), START_SAMPLES);
            Ok(-winding_number(&curve, lambda)?)
        }
        ModelKind::Multiplication => Ok(0),
        ModelKind::DirectSum { parts } => parts.iter().map(|p| fredholm_index(p, lambda)).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum KernelStatus {
    Passes,
    Obstructed { lambda: Complex64, level: u32, index: i64 },
    Assumed,
    ObstructedUnknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSample {
    pub level: u32,
    pub lambda: Complex64,
    pub index: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub status: KernelStatus,
    pub samples: Vec<KernelSample>,
    pub notes: Vec<String>,
}

/// Query points for a level: the origin first when it is enclosed and not in
/// the level, then one point per bounded complementary component.
pub fn kernel_lambdas(level: &Level) -> Vec<Complex64> {
    let mut out = Vec::new();
    if level.origin_enclosed && !level.omega.contains_zero {
        out.push(Complex64::new(0.0, 0.0));
    }
    out.extend(level.component_samples.iter().copied());
    out
}

fn check_consistency(level: &Level, model: &OperatorModel) -> Result<(), IndexError> {
    for symbol in model.symbols() {
        let curve = SymbolCurve::from_symbol(symbol.clone(), CONSISTENCY_SAMPLES);
        for &w in &curve.samples {
            let inside = match &level.finite_points {
                Some(points) => points.iter().any(|p| (p - w).norm() <= 1e-9),
                None => level.omega.near(w, CONSISTENCY_CELLS),
            };
            if !inside {
                return Err(IndexError::Inconsistent { level: level.n, point: w });
            }
        }
    }
    Ok(())
}

pub fn check_kernel_condition(
    t: &Tower,
    m: Option<&OperatorModel>,
    assume_normal_lifts: bool,
) -> Result<KernelReport, IndexError> {
    let Some(model) = m else {
        let status = if assume_normal_lifts {
            KernelStatus::Assumed
        } else {
            KernelStatus::ObstructedUnknown
        };
        let note = if assume_normal_lifts {
            "no operator model; each q(t) is assumed to have a normal lift"
        } else {
            "no operator model and no normal-lift assumption"
        };
        return Ok(KernelReport {
            status,
            samples: Vec::new(),
            notes: vec![note.into()],
        });
    };
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    let mut checked_levels = 0;
    for level in &t.levels {
        let lm = match model.at_level(level.n) {
            Ok(lm) => lm,
            Err(why) => {
                notes.push(format!("level {}: skipped, {why}", level.n));
                continue;
            }
        };
        check_consistency(level, &lm)?;
        checked_levels += 1;
        for lambda in kernel_lambdas(level) {
            let index = fredholm_index(&lm, lambda)?;
            samples.push(KernelSample {
                level: level.n,
                lambda,
                index,
            });
            if index != 0 {
                return Ok(KernelReport {
                    status: KernelStatus::Obstructed {
                        lambda,
                        level: level.n,
                        index,
                    },
                    samples,
                    notes,
                });
            }
        }
    }
    if checked_levels == 0 {
        notes.push("the model applies at no tested level".into());
        let status = if assume_normal_lifts {
            KernelStatus::Assumed
        } else {
            KernelStatus::ObstructedUnknown
        };
        return Ok(KernelReport { status, samples, notes });
    }
    Ok(KernelReport {
        status: KernelStatus::Passes,
        samples,
        notes,
    })
}

fn field_err(t: &Table, msg: String) -> SpecError {
    let at = t.pos.map(|p| format!(" at {p}")).unwrap_or_default();
    SpecError::Semantic(format!("operator model{at}: {msg}"))
}

fn model_from_table(t: &Table) -> Result<OperatorModel, SpecError> {
    let kind = access::string(access::required(t, "kind", "model")?)?;
    let level = match t.get("level") {
        Some(e) => Some(access::nonneg_integer(e)? as u32),
        None => None,
    };
    let mut model = match kind {
        "toeplitz" => {
            access::reject_unknown(t, &["kind", "level", "poly", "poly_im", "trig"], "toeplitz model")?;
            let symbol = match (t.get("poly"), t.get("trig")) {
                (Some(p), None) => {
                    let re = access::number_list(p)?;
                    let im = match t.get("poly_im") {
                        Some(e) => access::number_list(e)?,
                        None => vec![0.0; re.len()],
                    };
                    if im.len() != re.len() {
                        return Err(field_err(t, "`poly_im` must have the same length as `poly`".into()));
                    }
                    if re.is_empty() {
                        return Err(field_err(t, "`poly` must not be empty".into()));
                    }
                    Symbol::Polynomial {
                        coeffs: re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect(),
                    }
                }
                (None, Some(e)) => {
                    if t.get("poly_im").is_some() {
                        return Err(field_err(t, "`poly_im` needs `poly`".into()));
                    }
                    Symbol::Trigonometric {
                        terms: trig_terms(e)?,
                    }
                }
                _ => return Err(field_err(t, "a toeplitz model needs exactly one of `poly` or `trig`".into())),
            };
            if symbol_is_invalid(&symbol) {
                return Err(field_err(t, "symbol coefficients must be finite".into()));
            }
            OperatorModel::toeplitz(symbol)
        }
        "multiplication" => {
            access::reject_unknown(t, &["kind", "level"], "multiplication model")?;
            OperatorModel::multiplication()
        }
        "direct_sum" => {
            access::reject_unknown(t, &["kind", "level", "parts"], "direct_sum model")?;
            let parts = access::required(t, "parts", "direct_sum model")?;
            let Value::Array(items) = &parts.value else {
                return Err(field_err(t, "`parts` must be an array of inline tables".into()));
            };
            let mut out = Vec::new();
            for item in items {
                match item {
                    Value::Table(pt) => out.push(model_from_table(pt)?),
                    other => {
                        return Err(field_err(t, format!("`parts` entries must be tables, found {}", other.type_name())))
                    }
                }
            }
            if out.is_empty() {
                return Err(field_err(t, "`parts` must not be empty".into()));
            }
            OperatorModel::direct_sum(out)
        }
        other => {
            return Err(field_err(
                t,
                format!("unknown kind `{other}`; expected toeplitz, multiplication or direct_sum"),
            ))
        }
    };
    model.level = level;
    Ok(model)
}

fn symbol_is_invalid(s: &Symbol) -> bool {
    match s {
        Symbol::Polynomial { coeffs } => coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()),
        Symbol::Trigonometric { terms } => terms.iter().any(|(_, c)| !c.re.is_finite() || !c.im.is_finite()),
        Symbol::Root { base, .. } => symbol_is_invalid(base),
    }
}

/// `trig = [[k, re, im], ...]`.
fn trig_terms(e: &crate::document::Entry) -> Result<Vec<(i64, Complex64)>, SpecError> {
    let bad = || SpecError::Semantic(format!("at {}: `trig` must be a list of [k, re, im] triples", e.pos));
    let Value::Array(items) = &e.value else {
        return Err(bad());
    };
    let mut out = Vec::new();
    for item in items {
        let Value::Array(triple) = item else {
            return Err(bad());
        };
        let nums: Vec<f64> = triple
            .iter()
            .map(|v| match v {
                Value::Number(x) => Ok(*x),
                _ => Err(bad()),
            })
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 || nums[0].fract() != 0.0 || !nums[0].is_finite() {
            return Err(bad());
        }
        out.push((nums[0] as i64, Complex64::new(nums[1], nums[2])));
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// The operator model declared in a document: none, one, or the direct sum of
/// several `[[model]]` tables.
pub fn models_from_document(doc: &Document) -> Result<Option<OperatorModel>, SpecError> {
    let mut models: Vec<OperatorModel> = doc
        .sections_named("model")
        .map(|s| model_from_table(&s.table))
        .collect::<Result<_, _>>()?;
    Ok(match models.len() {
        0 => None,
        1 => models.pop(),
        _ => Some(OperatorModel::direct_sum(models)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::parse_document;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(coeffs: &[Complex64]) -> Symbol {
        Symbol::Polynomial {
            coeffs: coeffs.to_vec(),
        }
    }

    fn z() -> Symbol {
        poly(&[c(0.0, 0.0), c(1.0, 0.0)])
    }

    #[test]
    fn winding_examples() {
        let origin = c(0.0, 0.0);
        let circle = SymbolCurve::from_symbol(z(), 64);
        assert_eq!(winding_number(&circle, origin), Ok(1));
        let sq = SymbolCurve::from_symbol(poly(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]), 64);
        assert_eq!(winding_number(&sq, origin), Ok(2));
        let shifted = SymbolCurve::from_symbol(poly(&[c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]), 64);
        assert_eq!(winding_number(&shifted, origin), Ok(2));
        assert_eq!(winding_number(&circle, c(2.0, 0.0)), Ok(0));
    }

    #[test]
    fn point_on_curve_is_reported() {
        let circle = SymbolCurve::from_symbol(z(), 64);
        assert!(matches!(winding_number(&circle, c(1.0, 0.0)), Err(IndexError::OnCurve { .. })));
    }

    #[test]
    fn sampled_curves_need_sixteen_points() {
        assert_eq!(
            SymbolCurve::from_samples(vec![c(1.0, 0.0); 8]),
            Err(IndexError::TooFewSamples(8))
        );
    }

    #[test]
    fn toeplitz_indices() {
        let origin = c(0.0, 0.0);
        assert_eq!(fredholm_index(&OperatorModel::toeplitz(z()), origin), Ok(-1));
        assert_eq!(fredholm_index(&OperatorModel::multiplication(), origin), Ok(0));
        let conj = Symbol::Trigonometric {
            terms: vec![(-1, c(1.0, 0.0))],
        };
        let sum = OperatorModel::direct_sum(vec![OperatorModel::toeplitz(z()), OperatorModel::toeplitz(conj.clone())]);
        assert_eq!(fredholm_index(&OperatorModel::toeplitz(conj), origin), Ok(1));
        assert_eq!(fredholm_index(&sum, origin), Ok(0));
    }

    #[test]
    fn omitted_ray_and_roots() {
        assert_eq!(z().omitted_ray(), None);
        // 2 + z stays in the right half-plane.
        let s = poly(&[c(2.0, 0.0), c(1.0, 0.0)]);
        let cut = s.omitted_ray().unwrap();
        assert!((cut - PI).abs() < 1e-6);
        let root = Symbol::Root {
            base: Box::new(s.clone()),
            n: 1,
            cut,
        };
        for k in 0..32 {
            let t = TAU * k as f64 / 32.0;
            let r = root.eval(t);
            assert!((r * r - s.eval(t)).norm() < 1e-12);
            assert!(r.re > 0.0);
        }
    }

    #[test]
    fn parses_models() {
        let doc = parse_document(
            "[[model]] kind=\"toeplitz\" poly=[0.0, 1.0]\n[[model]] kind=\"toeplitz\" trig=[[-1, 1.0, 0.0]]\n",
        )
        .unwrap();
        let m = models_from_document(&doc).unwrap().unwrap();
        assert!(matches!(&m.kind, ModelKind::DirectSum { parts } if parts.len() == 2));
        assert_eq!(fredholm_index(&m, c(0.0, 0.0)), Ok(0));
        let doc = parse_document(
            "[[model]] kind=\"direct_sum\" parts=[{kind=\"toeplitz\", poly=[0.0, 1.0]}, {kind=\"multiplication\"}]",
        )
        .unwrap();
        let m = models_from_document(&doc).unwrap().unwrap();
        assert_eq!(fredholm_index(&m, c(0.0, 0.0)), Ok(-1));
        for bad in [
            "[[model]] kind=\"toeplitz\"",
            "[[model]] kind=\"toeplitz\" poly=[1.0] trig=[[0, 1.0, 0.0]]",
            "[[model]] kind=\"toeplitz\" poly=[1.0] poly_im=[1.0, 2.0]",
            "[[model]] kind=\"shift\"",
            "[[model]] kind=\"multiplication\" region=1",
        ] {
            assert!(models_from_document(&parse_document(bad).unwrap()).is_err(), "{bad}");
        }
    }

    /// Independent root finder (Durand–Kerner) for the oracle tests.
    fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
        let deg = coeffs.len() - 1;
        let lead = coeffs[deg];
        let monic: Vec<Complex64> = coeffs.iter().map(|a| a / lead).collect();
        let eval = |x: Complex64| monic.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * x + a);
        let mut r: Vec<Complex64> = (0..deg).map(|k| c(0.4, 0.9).powu(k as u32)).collect();
        for _ in 0..2000 {
            for i in 0..deg {
                let mut denom = c(1.0, 0.0);
                for j in 0..deg {
                    if i != j {
                        denom *= r[i] - r[j];
                    }
                }
                let step = eval(r[i]) / denom;
                r[i] -= step;
            }
        }
        r
    }

    fn coeff() -> impl Strategy<Value = Complex64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b))
    }

    fn admissible(coeffs: &[Complex64]) -> bool {
        coeffs.last().is_some_and(|l| l.norm() > 0.1)
            && roots(coeffs).iter().all(|r| (r.norm() - 1.0).abs() > 0.05)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn winding_counts_roots_inside(coeffs in prop::collection::vec(coeff(), 2..=6)) {
            prop_assume!(admissible(&coeffs));
            let inside = roots(&coeffs).iter().filter(|r| r.norm() < 1.0).count() as i64;
            let curve = SymbolCurve::from_symbol(poly(&coeffs), 64);
            prop_assert_eq!(winding_number(&curve, c(0.0, 0.0)), Ok(inside));
        }

        #[test]
        fn winding_is_additive(a in prop::collection::vec(coeff(), 2..=4), b in prop::collection::vec(coeff(), 2..=4)) {
            prop_assume!(admissible(&a) && admissible(&b));
            let (pa, pb) = (poly(&a), poly(&b));
            let n = 4096;
            let product: Vec<Complex64> = (0..n).map(|k| {
                let t = TAU * k as f64 / n as f64;
                pa.eval(t) * pb.eval(t)
            }).collect();
            let wp = winding_number(&SymbolCurve::from_samples(product).unwrap(), c(0.0, 0.0));
            let wa = winding_number(&SymbolCurve::from_symbol(pa, 64), c(0.0, 0.0)).unwrap();
            let wb = winding_number(&SymbolCurve::from_symbol(pb, 64), c(0.0, 0.0)).unwrap();
            prop_assert_eq!(wp, Ok(wa + wb));
        }

        #[test]
        fn winding_is_locally_constant(
            coeffs in prop::collection::vec(coeff(), 2..=5),
            lam in coeff(),
            seed in any::<u64>(),
        ) {
            let lam = lam * 0.5;
            let curve = SymbolCurve::from_symbol(poly(&coeffs), 2048);
            let d = curve.min_distance(lam);
            prop_assume!(d > 0.05);
            let Ok(w) = winding_number(&curve, lam) else { return Ok(()) };
            // Deterministic perturbation of size below d/4.
            let mut state = seed;
            let perturbed: Vec<Complex64> = curve.samples.iter().map(|&s| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let phase = (state >> 11) as f64 / (1u64 << 53) as f64 * TAU;
                s + Complex64::from_polar(0.24 * d, phase)
            }).collect();
            let pc = SymbolCurve::from_samples(perturbed).unwrap();
            if let Ok(wp) = winding_number(&pc, lam) {
                prop_assert_eq!(wp, w);
            }
        }

        #[test]
        fn direct_sum_index_adds(a in prop::collection::vec(coeff(), 2..=4), b in prop::collection::vec(coeff(), 2..=4)) {
            prop_assume!(admissible(&a) && admissible(&b));
            let ma = OperatorModel::toeplitz(poly(&a));
            let mb = OperatorModel::toeplitz(poly(&b));
            let sum = OperatorModel::direct_sum(vec![ma.clone(), mb.clone(), OperatorModel::multiplication()]);
            let origin = c(0.0, 0.0);
            prop_assert_eq!(
                fredholm_index(&sum, origin).unwrap(),
                fredholm_index(&ma, origin).unwrap() + fredholm_index(&mb, origin).unwrap()
            );
        }
    }
}
