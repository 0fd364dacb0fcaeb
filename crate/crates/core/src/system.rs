//! Canonical systems `J f' + F(t) f = lambda H(t) f` with piecewise-constant
//! coefficients on `[0, l]`.
//!
//! On each segment the generator `-J(lambda H_k - F_k)` is constant, so the
//! fundamental solution is propagated exactly by matrix exponentials.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Invariant, Result};
use crate::func::VecFn;
use crate::io;
use crate::matrix::{self, c64, CMat, CVec, C64};
use crate::quadrature::{QuadratureRule, DEFAULT_NODES};

const STRUCTURE_TOL: f64 = 1e-12;
const DEFINITENESS_RATIO: f64 = 1e-8;
const MEMO_CAPACITY: usize = 4096;

pub const DEFAULT_DEFINITENESS_SAMPLES: usize = 8;

#[derive(Debug, Clone)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub f: CMat,
    pub h: CMat,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Fail on a definiteness check failure instead of recording a warning.
    pub strict_definiteness: bool,
    pub definiteness_samples: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            strict_definiteness: true,
            definiteness_samples: DEFAULT_DEFINITENESS_SAMPLES,
        }
    }
}

impl LoadOptions {
    pub fn lenient() -> Self {
        Self {
            strict_definiteness: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefinitenessReport {
    pub definite: bool,
    /// Smallest over largest singular value of the stacked `H(t_i) V(t_i)`.
    pub ratio: f64,
    /// Passed, but within a factor 100 of the threshold.
    pub marginal: bool,
    pub samples: usize,
}

/// Values of `U(., lambda)` at the segment breakpoints.
#[derive(Debug)]
struct Propagation {
    generators: Vec<CMat>,
    starts: Vec<CMat>,
}

#[derive(Debug)]
struct Inner {
    p: usize,
    length: f64,
    j: CMat,
    segments: Vec<Segment>,
    definiteness: DefinitenessReport,
    memo: RwLock<HashMap<(u64, u64), Arc<Propagation>>>,
    k_cache: OnceLock<CMat>,
}

/// A validated canonical system. Cloning is cheap; the system is immutable.
#[derive(Debug, Clone)]
pub struct CanonicalSystem(Arc<Inner>);

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub lambda: C64,
    pub t_grid: Vec<f64>,
    pub u_values: Vec<CMat>,
    pub monodromy: CMat,
}

impl CanonicalSystem {
    /// Build from `J` and `(t_end, F_k, H_k)` triples, validating every invariant.
    pub fn new(j: CMat, segments: Vec<(f64, CMat, CMat)>, opts: LoadOptions) -> Result<Self> {
        let p = j.nrows();
        if p == 0 || p % 2 != 0 || !j.is_square() {
            return Err(Error::Schema(format!(
                "p must be an even positive integer, J is {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        if segments.is_empty() {
            return Err(Error::Schema("at least one segment is required".into()));
        }
        let id = CMat::identity(p, p);
        let skew = matrix::max_abs(&(j.adjoint() + &j));
        let square = matrix::max_abs(&(&j * &j + &id));
        if skew > STRUCTURE_TOL || square > STRUCTURE_TOL {
            return Err(Error::InvariantViolation {
                kind: Invariant::JStructure,
                segment: None,
                detail: format!("|J* + J| = {skew:.3e}, |J^2 + I| = {square:.3e}"),
            });
        }

        let mut segs = Vec::with_capacity(segments.len());
        let mut t_start = 0.0;
        for (k, (t_end, f, h)) in segments.into_iter().enumerate() {
            if !(t_end > t_start) || !t_end.is_finite() {
                return Err(Error::Schema(format!(
                    "segments[{k}].t_end = {t_end} must exceed {t_start}"
                )));
            }
            if f.shape() != (p, p) || h.shape() != (p, p) {
                return Err(Error::Schema(format!("segments[{k}]: F and H must be {p}x{p}")));
            }
            for (name, m) in [("F", &f), ("H", &h)] {
                let res = matrix::max_abs(&(m - m.adjoint()));
                if res > STRUCTURE_TOL * matrix::max_abs(m).max(1.0) {
                    return Err(Error::InvariantViolation {
                        kind: Invariant::Hermiticity,
                        segment: Some(k),
                        detail: format!("|{name} - {name}*| = {res:.3e}"),
                    });
                }
            }
            let ev = matrix::hermitian_eigenvalues(&h);
            let lowest = ev.first().copied().unwrap_or(0.0);
            let norm = ev.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if lowest < -STRUCTURE_TOL * norm.max(1.0) {
                return Err(Error::InvariantViolation {
                    kind: Invariant::HNegativity,
                    segment: Some(k),
                    detail: format!("H has eigenvalue {lowest:.6e}"),
                });
            }
            segs.push(Segment {
                t_start,
                t_end,
                f: matrix::hermitian_part(&f),
                h: matrix::hermitian_part(&h),
            });
            t_start = t_end;
        }
        let length = t_start;

        let mut sys = CanonicalSystem(Arc::new(Inner {
            p,
            length,
            j,
            segments: segs,
            definiteness: DefinitenessReport {
                definite: true,
                ratio: 1.0,
                marginal: false,
                samples: 0,
            },
            memo: RwLock::new(HashMap::new()),
            k_cache: OnceLock::new(),
        }));
        let report = sys.check_definiteness(opts.definiteness_samples)?;
        if !report.definite && opts.strict_definiteness {
            return Err(Error::InvariantViolation {
                kind: Invariant::Definiteness,
                segment: None,
                detail: format!(
                    "stacked H V has singular value ratio {:.3e} <= {DEFINITENESS_RATIO:e}",
                    report.ratio
                ),
            });
        }
        Arc::get_mut(&mut sys.0)
            .expect("freshly built system is uniquely owned")
            .definiteness = report;
        Ok(sys)
    }

    pub fn from_json_value(doc: &Value, opts: LoadOptions) -> Result<Self> {
        if !doc.is_object() {
            return Err(Error::Schema("system spec must be a JSON object".into()));
        }
        let p = io::get(doc, "p", "spec")?
            .as_u64()
            .ok_or_else(|| Error::Schema("spec.p: expected a positive integer".into()))?
            as usize;
        if p == 0 || p % 2 != 0 {
            return Err(Error::Schema(format!("spec.p = {p} must be even and positive")));
        }
        let length = io::get_f64(doc, "length", "spec")?;
        if length <= 0.0 {
            return Err(Error::Schema("spec.length must be positive".into()));
        }
        let j = io::parse_matrix(io::get(doc, "J", "spec")?, "J", p)?;
        let raw = io::get(doc, "segments", "spec")?
            .as_array()
            .ok_or_else(|| Error::Schema("spec.segments: expected a list".into()))?;
        let mut segments = Vec::with_capacity(raw.len());
        for (k, seg) in raw.iter().enumerate() {
            let path = format!("segments[{k}]");
            let t_end = io::get_f64(seg, "t_end", &path)?;
            let f = io::parse_matrix(io::get(seg, "F", &path)?, &format!("{path}.F"), p)?;
            let h = io::parse_matrix(io::get(seg, "H", &path)?, &format!("{path}.H"), p)?;
            segments.push((t_end, f, h));
        }
        let last = segments.last().map(|s| s.0).unwrap_or(0.0);
        if (last - length).abs() > 1e-12 * length.max(1.0) {
            return Err(Error::Schema(format!(
                "last segment ends at {last}, expected length {length}"
            )));
        }
        if let Some(s) = segments.last_mut() {
            s.0 = length;
        }
        Self::new(j, segments, opts)
    }

    pub fn from_json_str(text: &str, opts: LoadOptions) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("invalid JSON: {e}")))?;
        Self::from_json_value(&doc, opts)
    }

    pub fn load(path: &Path, opts: LoadOptions) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text, opts)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "p": self.p(),
            "length": self.length(),
            "J": io::matrix_json(self.j()),
            "segments": self.segments().iter().map(|s| json!({
                "t_end": s.t_end,
                "F": io::matrix_json(&s.f),
                "H": io::matrix_json(&s.h),
            })).collect::<Vec<_>>(),
        })
    }

    /// `p = 2`, `J = [[0, -1], [1, 0]]`, `F = 0`, `H = I` on `[0, pi]`.
    pub fn free_system() -> Self {
        let p = 2;
        Self::new(
            matrix::canonical_j(p),
            vec![(
                std::f64::consts::PI,
                CMat::zeros(p, p),
                CMat::identity(p, p),
            )],
            LoadOptions::default(),
        )
        .expect("the free system is valid")
    }

    /// A seeded random system with canonical `J`, real symmetric `F_k` and
    /// `H_k = A A^T + I/2`.
    pub fn random(seed: u64, p: usize, segments: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0.0;
        let mut segs = Vec::with_capacity(segments);
        for _ in 0..segments {
            t += rng.random_range(0.6..1.0);
            let a = CMat::from_fn(p, p, |_, _| c64(rng.random_range(-0.7..0.7), 0.0));
            let b = CMat::from_fn(p, p, |_, _| c64(rng.random_range(-0.5..0.5), 0.0));
            let h = &a * a.transpose() + CMat::identity(p, p).scale(0.5);
            let f = (&b + b.transpose()).scale(0.5);
            segs.push((t, f, h));
        }
        Self::new(matrix::canonical_j(p), segs, LoadOptions::default())
    }

    pub fn p(&self) -> usize {
        self.0.p
    }

    pub fn length(&self) -> f64 {
        self.0.length
    }

    pub fn j(&self) -> &CMat {
        &self.0.j
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0.segments
    }

    pub fn definiteness(&self) -> DefinitenessReport {
        self.0.definiteness
    }

    pub(crate) fn k_cache(&self) -> &OnceLock<CMat> {
        &self.0.k_cache
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.segments().iter().map(|s| s.t_end))
            .collect()
    }

    pub fn rule(&self, nodes_per_segment: usize) -> Result<QuadratureRule> {
        QuadratureRule::new(&self.breakpoints(), nodes_per_segment)
    }

    pub fn default_rule(&self) -> QuadratureRule {
        self.rule(DEFAULT_NODES).expect("breakpoints are increasing")
    }

    /// Index of the segment containing `t` (the left one at a breakpoint).
    pub fn segment_index(&self, t: f64) -> usize {
        let segs = self.segments();
        segs.iter()
            .position(|s| t <= s.t_end)
            .unwrap_or(segs.len() - 1)
    }

    pub fn h_at(&self, t: f64) -> &CMat {
        &self.segments()[self.segment_index(t)].h
    }

    /// `-J (lambda H_k - F_k)`.
    pub fn generator(&self, k: usize, lambda: C64) -> CMat {
        let s = &self.segments()[k];
        -(self.j() * (s.h.map(|z| z * lambda) - &s.f))
    }

    fn propagation(&self, lambda: C64) -> Result<Arc<Propagation>> {
        let key = (lambda.re.to_bits(), lambda.im.to_bits());
        if let Some(hit) = self.0.memo.read().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let p = self.p();
        let mut generators = Vec::with_capacity(self.segments().len());
        let mut starts = Vec::with_capacity(self.segments().len() + 1);
        let mut u = CMat::identity(p, p);
        starts.push(u.clone());
        for (k, s) in self.segments().iter().enumerate() {
            let g = self.generator(k, lambda);
            u = matrix::expm(&g.scale(s.len()))? * u;
            if !matrix::is_finite(&u) {
                return Err(Error::NonFinite {
                    context: "fundamental solution",
                });
            }
            generators.push(g);
            starts.push(u.clone());
        }
        let prop = Arc::new(Propagation { generators, starts });
        let mut memo = self.0.memo.write().expect("memo lock");
        if memo.len() >= MEMO_CAPACITY {
            memo.clear();
        }
        memo.insert(key, prop.clone());
        Ok(prop)
    }

    /// `U(t, lambda)`.
    pub fn u(&self, t: f64, lambda: C64) -> Result<CMat> {
        let prop = self.propagation(lambda)?;
        let k = self.segment_index(t);
        let seg = &self.segments()[k];
        let dt = (t - seg.t_start).clamp(0.0, seg.len());
        if dt == 0.0 {
            return Ok(prop.starts[k].clone());
        }
        if dt == seg.len() {
            return Ok(prop.starts[k + 1].clone());
        }
        Ok(matrix::expm(&prop.generators[k].scale(dt))? * &prop.starts[k])
    }

    /// `U^#(t, lambda) = U(t, conj lambda)^*`.
    pub fn u_sharp(&self, t: f64, lambda: C64) -> Result<CMat> {
        Ok(self.u(t, lambda.conj())?.adjoint())
    }

    pub fn monodromy(&self, lambda: C64) -> Result<CMat> {
        Ok(self
            .propagation(lambda)?
            .starts
            .last()
            .expect("at least one segment")
            .clone())
    }

    pub fn fundamental_solution(&self, lambda: C64, t_grid: &[f64]) -> Result<FundamentalSolution> {
        let l = self.length();
        let sorted = t_grid.windows(2).all(|w| w[0] <= w[1]);
        let inside = t_grid.iter().all(|&t| (0.0..=l).contains(&t));
        let ends = t_grid.first() == Some(&0.0) && t_grid.last() == Some(&l);
        if !(sorted && inside && ends) {
            return Err(Error::Schema(
                "t_grid must be sorted within [0, l] and contain both endpoints".into(),
            ));
        }
        let u_values = t_grid
            .iter()
            .map(|&t| self.u(t, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(FundamentalSolution {
            lambda,
            t_grid: t_grid.to_vec(),
            u_values,
            monodromy: self.monodromy(lambda)?,
        })
    }

    /// `n` equal steps per segment, breakpoints included.
    pub fn uniform_grid(&self, per_segment: usize) -> Vec<f64> {
        let mut grid = vec![0.0];
        for s in self.segments() {
            for i in 1..=per_segment {
                grid.push(s.t_start + s.len() * i as f64 / per_segment as f64);
            }
        }
        if let Some(last) = grid.last_mut() {
            *last = self.length();
        }
        grid
    }

    /// `int_0^l U(s, alpha)^* H(s) U(s, beta) ds`.
    pub fn gram(&self, alpha: C64, beta: C64, rule: &QuadratureRule) -> Result<CMat> {
        rule.integrate_mat(|s, k| {
            let ua = self.u(s, alpha)?;
            let ub = self.u(s, beta)?;
            Ok(ua.adjoint() * &self.segments()[k].h * ub)
        })
    }

    /// `|U(t, conj lambda)^* J U(t, lambda) - J|_max`.
    pub fn symplectic_residual(&self, t: f64, lambda: C64) -> Result<f64> {
        let u = self.u(t, lambda)?;
        let ub = self.u(t, lambda.conj())?;
        Ok(matrix::max_abs(&(ub.adjoint() * self.j() * u - self.j())))
    }

    /// Numerical-rank test for the definiteness condition: the stacked
    /// `H(t_i) V(t_i)` with `J V' + F V = 0`, `V(0) = I` must have rank `p`.
    pub fn check_definiteness(&self, samples_per_segment: usize) -> Result<DefinitenessReport> {
        let p = self.p();
        let n = samples_per_segment.max(1);
        let rows = self.segments().len() * n * p;
        let mut stacked = CMat::zeros(rows, p);
        let mut r = 0;
        for s in self.segments() {
            for i in 0..n {
                let t = s.t_start + s.len() * (i as f64 + 0.5) / n as f64;
                let v = self.u(t, C64::new(0.0, 0.0))?;
                stacked.view_mut((r, 0), (p, p)).copy_from(&(&s.h * v));
                r += p;
            }
        }
        let sv = stacked.singular_values();
        let smax = sv.max();
        let ratio = if smax > 0.0 { sv.min() / smax } else { 0.0 };
        let definite = ratio > DEFINITENESS_RATIO;
        Ok(DefinitenessReport {
            definite,
            ratio,
            marginal: definite && ratio < 100.0 * DEFINITENESS_RATIO,
            samples: n * self.segments().len(),
        })
    }

    /// The solution of `J f' + F f = lambda H f + H h`, `f(0) = f0`.
    pub fn solve_inhomogeneous(
        &self,
        lambda: C64,
        f0: CVec,
        h: &VecFn,
        rule: &QuadratureRule,
    ) -> Result<VecFn> {
        let prop = self.propagation(lambda)?;
        let p = self.p();
        let sys = self.clone();
        // forcing term -J H_k h(s) on segment k
        let forcing = {
            let sys = sys.clone();
            let h = h.clone();
            move |s: f64, k: usize| -> Result<CVec> {
                Ok(-(sys.j() * (&sys.segments()[k].h * h.eval(s)?)))
            }
        };
        let mut starts = Vec::with_capacity(self.segments().len() + 1);
        let mut f = f0;
        starts.push(f.clone());
        for (k, s) in self.segments().iter().enumerate() {
            let g = &prop.generators[k];
            let carried = matrix::expm(&g.scale(s.len()))? * &f;
            let inc = rule.integrate_interval_vec(s.t_start, s.t_end, p, |x| {
                Ok(matrix::expm(&g.scale(s.t_end - x))? * forcing(x, k)?)
            })?;
            f = carried + inc;
            starts.push(f.clone());
        }
        let rule = rule.clone();
        Ok(VecFn::new(p, move |t| {
            let k = sys.segment_index(t);
            let seg = &sys.segments()[k];
            let t = t.clamp(seg.t_start, seg.t_end);
            let g = &prop.generators[k];
            let carried = matrix::expm(&g.scale(t - seg.t_start))? * &starts[k];
            let inc = rule.integrate_interval_vec(seg.t_start, t, p, |x| {
                Ok(matrix::expm(&g.scale(t - x))? * forcing(x, k)?)
            })?;
            Ok(carried + inc)
        }))
    }

    /// Relative residual of `J f' + F f = H g` in integral form.
    ///
    /// Each segment is cut into `subdivisions` pieces; across each piece the
    /// value of `f` is compared with the exact propagation of the
    /// `lambda = 0` system driven by `g`.
    pub fn amax_residual(
        &self,
        f: &VecFn,
        g: &VecFn,
        subdivisions: usize,
        rule: &QuadratureRule,
    ) -> Result<f64> {
        let p = self.p();
        let n = subdivisions.max(1);
        let mut worst = 0.0f64;
        let mut scale = 1.0f64;
        for (k, s) in self.segments().iter().enumerate() {
            let g0 = self.generator(k, C64::new(0.0, 0.0));
            let dt = s.len() / n as f64;
            let step = matrix::expm(&g0.scale(dt))?;
            let mut a = s.t_start;
            let mut fa = f.eval(a)?;
            scale = scale.max(matrix::max_abs_vec(&fa));
            for i in 1..=n {
                let b = if i == n { s.t_end } else { s.t_start + dt * i as f64 };
                let fb = f.eval(b)?;
                let inc = rule.integrate_interval_vec(a, b, p, |x| {
                    let gx = g.eval(x)?;
                    scale = scale.max(matrix::max_abs_vec(&gx));
                    Ok(matrix::expm(&g0.scale(b - x))? * -(self.j() * (&s.h * gx)))
                })?;
                let predicted = &step * &fa + inc;
                worst = worst.max(matrix::max_abs_vec(&(&fb - predicted)));
                scale = scale.max(matrix::max_abs_vec(&fb));
                a = b;
                fa = fb;
            }
        }
        Ok(worst / scale)
    }
}
