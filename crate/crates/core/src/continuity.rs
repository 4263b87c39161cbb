//! Continuity criteria: the necessary condition on fibers, the `O(2⁻ⁿ)`
//! sufficient condition and the quasi-uniform `(L_n, S_n)` test.

use crate::document::{access, Document, Table, Value};
use crate::spectrum::SpecError;
use crate::tower::{FiberPoint, Provenance, Tower};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// A fiber whose tail stays this far from 1 violates the necessary condition.
    pub necessary_fail: f64,
    /// Every tail must come this close to 1 for the necessary condition to pass.
    pub necessary_pass: f64,
    /// Bound on max/min of the last four values of `2ⁿ d_n`.
    pub o2n_ratio: f64,
    /// Largest index set searched by the quasi-uniform test.
    pub quasi_max_k: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            necessary_fail: 0.1,
            necessary_pass: 0.05,
            o2n_ratio: 2.0,
            quasi_max_k: 16,
        }
    }
}

impl Thresholds {
    /// Apply a `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let real = || -> Result<f64, String> {
            let v: f64 = value.parse().map_err(|_| format!("threshold `{key}` needs a number, got `{value}`"))?;
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(format!("threshold `{key}` must be positive and finite"))
            }
        };
        match key {
            "necessary_fail" => self.necessary_fail = real()?,
            "necessary_pass" => self.necessary_pass = real()?,
            "o2n_ratio" => self.o2n_ratio = real()?,
            "quasi_max_k" => {
                self.quasi_max_k = value
                    .parse()
                    .ok()
                    .filter(|&k: &usize| k >= 1)
                    .ok_or_else(|| format!("threshold `quasi_max_k` needs a positive integer, got `{value}`"))?
            }
            _ => {
                return Err(format!(
                    "unknown threshold `{key}`; expected necessary_fail, necessary_pass, o2n_ratio or quasi_max_k"
                ))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityProbe {
    /// `l[k]` and `s[k]` are `L_n` and `S_n` for `n = k + 1`.
    pub l: Vec<u32>,
    pub s: Vec<u64>,
    pub epsilon: f64,
    pub n0: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pattern {
    Linear(u64),
    Const(u64),
}

fn parse_pattern(text: &str) -> Result<Pattern, String> {
    let t = text.trim();
    if let Some(c) = t.strip_prefix("const:") {
        return c
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&c| c >= 1)
            .map(Pattern::Const)
            .ok_or_else(|| format!("`{text}`: const needs a positive integer"));
    }
    if let Some(k) = t.strip_suffix('n') {
        if k.is_empty() {
            return Ok(Pattern::Linear(1));
        }
        if let Some(k) = k.trim().parse::<u64>().ok().filter(|&k| k >= 1) {
            return Ok(Pattern::Linear(k));
        }
    }
    Err(format!("unknown pattern `{text}`; expected \"n\", \"<k>n\", \"const:<c>\" or a list"))
}

fn pattern_value(p: Pattern, n: u64) -> u64 {
    match p {
        Pattern::Linear(k) => k * n,
        Pattern::Const(c) => c,
    }
}

impl ContinuityProbe {
    /// Expand named patterns up to `L_n ≤ depth`.
    pub fn from_patterns(l: &str, s: &str, epsilon: f64, n0: u32, depth: u32) -> Result<Self, String> {
        let (pl, ps) = (parse_pattern(l)?, parse_pattern(s)?);
        let mut ls = Vec::new();
        let mut ss = Vec::new();
        for n in 1..=depth as u64 {
            let lv = pattern_value(pl, n);
            if lv > depth as u64 {
                break;
            }
            ls.push(lv as u32);
            ss.push(pattern_value(ps, n));
        }
        let p = ContinuityProbe {
            l: ls,
            s: ss,
            epsilon,
            n0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.l.len() != self.s.len() {
            return Err("L and S must have the same length".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err("epsilon must be positive".into());
        }
        if self.n0 < 1 {
            return Err("n0 must be at least 1".into());
        }
        for (k, (&l, &s)) in self.l.iter().zip(&self.s).enumerate() {
            if !(1..=62).contains(&l) {
                return Err(format!("L_{} = {l} must lie in 1..=62", k + 1));
            }
            if s < 1 || s > (1u64 << (l + 1)) - 1 {
                return Err(format!("S_{} = {s} must lie in 1..=2^(L+1)-1", k + 1));
            }
        }
        let tail: Vec<f64> = self
            .l
            .iter()
            .zip(&self.s)
            .skip(self.n0 as usize - 1)
            .map(|(&l, &s)| s as f64 * 0.5f64.powi(l as i32))
            .collect();
        if tail.len() < 2 {
            return Err(format!("the probe needs at least two entries from n0 = {} on", self.n0));
        }
        if tail.windows(2).any(|w| w[1] >= w[0]) {
            return Err("2^-L_n S_n must be strictly decreasing from n0 on".into());
        }
        Ok(())
    }

    pub fn max_l(&self) -> u32 {
        self.l.iter().copied().max().unwrap_or(0)
    }
}

/// `[[probe]]` tables of a document, expanded to `depth`.
pub fn probes_from_document(doc: &Document, depth: u32) -> Result<Vec<ContinuityProbe>, SpecError> {
    doc.sections_named("probe")
        .map(|s| probe_from_table(&s.table, depth))
        .collect()
}

fn probe_from_table(t: &Table, depth: u32) -> Result<ContinuityProbe, SpecError> {
    let here = |m: String| {
        let at = t.pos.map(|p| format!(" at {p}")).unwrap_or_default();
        SpecError::Semantic(format!("probe{at}: {m}"))
    };
    access::reject_unknown(t, &["L", "S", "epsilon", "n0"], "probe")?;
    let epsilon = access::number(access::required(t, "epsilon", "probe")?)?;
    let n0 = access::nonneg_integer(access::required(t, "n0", "probe")?)? as u32;
    let l = access::required(t, "L", "probe")?;
    let s = access::required(t, "S", "probe")?;
    match (&l.value, &s.value) {
        (Value::Str(a), Value::Str(b)) => ContinuityProbe::from_patterns(a, b, epsilon, n0, depth).map_err(here),
        (Value::Array(_), Value::Array(_)) => {
            let to_ints = |e: &crate::document::Entry| -> Result<Vec<u64>, SpecError> {
                access::number_list(e)?
                    .into_iter()
                    .map(|x| {
                        if x.is_finite() && x >= 1.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
                            Ok(x as u64)
                        } else {
                            Err(here(format!("`{}` entries must be positive integers", e.key)))
                        }
                    })
                    .collect()
            };
            let p = ContinuityProbe {
                l: to_ints(l)?.into_iter().map(|x| x.min(u32::MAX as u64) as u32).collect(),
                s: to_ints(s)?,
                epsilon,
                n0,
            };
            p.validate().map_err(here)?;
            Ok(p)
        }
        _ => Err(here("L and S must both be patterns or both be lists".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberWitness {
    pub fiber: usize,
    pub provenance: Provenance,
    /// Levels `first..=last` over which `value` was taken.
    pub first: u32,
    pub last: u32,
    pub value: f64,
    pub coords: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Necessary {
    Passes { max_tail: f64 },
    Fails { reason: String, witness: Option<FiberWitness> },
    Inconclusive { reason: String },
}

impl Necessary {
    pub fn fails(&self) -> bool {
        matches!(self, Necessary::Fails { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SufficientO2n {
    Passes { c: f64, scaled: Vec<f64> },
    Fails { reason: String, scaled: Vec<f64> },
    Inconclusive { reason: String, scaled: Vec<f64> },
}

impl SufficientO2n {
    pub fn passes(&self) -> bool {
        matches!(self, SufficientO2n::Passes { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QuasiUniform {
    Passes { indices: Vec<u32> },
    FailsAtTestedDepth { depth: u32, witness: FiberWitness },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub necessary: Necessary,
    pub sufficient_o2n: SufficientO2n,
    pub quasi_uniform: Vec<QuasiUniform>,
    pub eta_finite: bool,
    pub tower_depth: u32,
    pub fiber_depth: u32,
    pub fiber_count: usize,
}

/// `min |1 - x_n|` over `first..=last`.
pub fn tail_min(f: &FiberPoint, first: usize, last: usize) -> f64 {
    f.coords[first..=last]
        .iter()
        .map(|x| (1.0 - x).norm())
        .fold(f64::INFINITY, f64::min)
}

fn witness(fibers: &[FiberPoint], i: usize, first: usize, last: usize, value: f64) -> FiberWitness {
    FiberWitness {
        fiber: i,
        provenance: fibers[i].provenance.clone(),
        first: first as u32,
        last: last as u32,
        value,
        coords: fibers[i].coords.clone(),
    }
}

pub fn check_necessary(t: &Tower, fibers: &[FiberPoint], thr: &Thresholds) -> Necessary {
    if t.bounds.eta == f64::NEG_INFINITY {
        return Necessary::Fails {
            reason: "η = −∞".into(),
            witness: None,
        };
    }
    let Some(depth) = fibers.iter().map(|f| f.coords.len() - 1).min() else {
        return Necessary::Inconclusive {
            reason: "no fibers sampled".into(),
        };
    };
    if depth < 8 {
        return Necessary::Inconclusive {
            reason: format!("fiber depth {depth} is below 8"),
        };
    }
    let first = depth - depth / 4;
    for (i, f) in fibers.iter().enumerate() {
        let m = tail_min(f, first, depth);
        if m > thr.necessary_fail {
            return Necessary::Fails {
                reason: format!("fiber {i} stays at distance {m:.6} from 1 over levels {first}..={depth}"),
                witness: Some(witness(fibers, i, first, depth, m)),
            };
        }
    }
    let mut max_tail = 0.0f64;
    let mut trend = true;
    for f in fibers {
        let d: Vec<f64> = f.coords[first..=depth].iter().map(|x| (1.0 - x).norm()).collect();
        max_tail = d.iter().copied().fold(max_tail, f64::max);
        trend &= d.last() <= d.first();
    }
    if max_tail < thr.necessary_pass && trend {
        Necessary::Passes { max_tail }
    } else {
        Necessary::Inconclusive {
            reason: format!("largest tail distance {max_tail:.6}; decreasing trend: {trend}"),
        }
    }
}

/// `d_n = max |1 − z|` over `Ω_n`, from the exact level images.
pub fn level_distance_from_one(t: &Tower, n: usize) -> f64 {
    t.levels[n]
        .images
        .iter()
        .map(|img| img.max_dist_from_one())
        .fold(0.0, f64::max)
}

pub fn check_sufficient_o2n(t: &Tower, thr: &Thresholds) -> SufficientO2n {
    let d: Vec<f64> = (0..t.levels.len()).map(|n| level_distance_from_one(t, n)).collect();
    let scaled: Vec<f64> = d.iter().enumerate().map(|(n, x)| x * 2f64.powi(n as i32)).collect();
    if t.depth < 6 {
        return SufficientO2n::Inconclusive {
            reason: format!("depth {} is below 6", t.depth),
            scaled,
        };
    }
    let n = d.len();
    if d[n - 4..].iter().all(|&x| x == 0.0) {
        return SufficientO2n::Passes { c: 0.0, scaled };
    }
    if d[n - 1] >= 0.9 * d[n - 4] {
        return SufficientO2n::Fails {
            reason: format!("d_n does not decay: d_{} = {:.6}, d_{} = {:.6}", n - 4, d[n - 4], n - 1, d[n - 1]),
            scaled,
        };
    }
    let last = &scaled[n - 4..];
    let hi = last.iter().copied().fold(0.0, f64::max);
    let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 && hi / lo < thr.o2n_ratio {
        SufficientO2n::Passes { c: hi, scaled }
    } else {
        SufficientO2n::Inconclusive {
            reason: format!("2^n d_n ranges over [{lo:.6}, {hi:.6}] on the last four levels"),
            scaled,
        }
    }
}

/// `x^s` for a positive integer `s`.
fn int_pow(x: Complex64, s: u64) -> Complex64 {
    if s <= u32::MAX as u64 {
        x.powu(s as u32)
    } else if x.norm() == 0.0 {
        x
    } else {
        (x.ln() * s as f64).exp()
    }
}

/// Greedy search over `n = n0, n0+1, …` in increasing order, keeping an index
/// when it brings some not-yet-covered fiber within `ε`.
pub fn quasi_uniform_test(
    fibers: &[FiberPoint],
    probe: &ContinuityProbe,
    thr: &Thresholds,
) -> Result<QuasiUniform, String> {
    let depth = fibers.iter().map(|f| f.coords.len() - 1).min().unwrap_or(0) as u32;
    if probe.max_l() > depth {
        return Err(format!("probe needs level {} but fibers reach {depth}", probe.max_l()));
    }
    let value = |f: &FiberPoint, k: usize| (1.0 - int_pow(f.coords[probe.l[k] as usize], probe.s[k])).norm();
    let mut covered = vec![false; fibers.len()];
    let mut indices = Vec::new();
    for k in (probe.n0 as usize - 1)..probe.l.len() {
        if covered.iter().all(|&c| c) || indices.len() == thr.quasi_max_k {
            break;
        }
        let hits: Vec<usize> = (0..fibers.len())
            .filter(|&i| !covered[i] && value(&fibers[i], k) < probe.epsilon)
            .collect();
        if !hits.is_empty() {
            indices.push(k as u32 + 1);
            for i in hits {
                covered[i] = true;
            }
        }
    }
    if covered.iter().all(|&c| c) {
        return Ok(QuasiUniform::Passes { indices });
    }
    // Most resistant fiber: largest minimum over all probe indices.
    let (i, m) = (0..fibers.len())
        .filter(|&i| !covered[i])
        .map(|i| {
            let m = ((probe.n0 as usize - 1)..probe.l.len())
                .map(|k| value(&fibers[i], k))
                .fold(f64::INFINITY, f64::min);
            (i, m)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("an uncovered fiber exists");
    Ok(QuasiUniform::FailsAtTestedDepth {
        depth,
        witness: witness(fibers, i, probe.n0 as usize, depth as usize, m),
    })
}

pub fn assess(
    t: &Tower,
    fibers: &[FiberPoint],
    probes: &[ContinuityProbe],
    thr: &Thresholds,
) -> Result<ContinuityReport, String> {
    Ok(ContinuityReport {
        necessary: check_necessary(t, fibers, thr),
        sufficient_o2n: check_sufficient_o2n(t, thr),
        quasi_uniform: probes
            .iter()
            .map(|p| quasi_uniform_test(fibers, p, thr))
            .collect::<Result<_, _>>()?,
        eta_finite: t.bounds.eta.is_finite(),
        tower_depth: t.depth,
        fiber_depth: fibers.iter().map(|f| f.coords.len() as u32 - 1).min().unwrap_or(0),
        fiber_count: fibers.len(),
    })
}
