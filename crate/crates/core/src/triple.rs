//! The boundary triple of the maximal relation of a canonical system.
//!
//! `Gamma_0 f = (f(0) + f(l)) / sqrt 2`, `Gamma_1 f = -J (f(0) - f(l)) / sqrt 2`.
//! The gauge `L` consists of point evaluations at `t = 0`; every formula that
//! involves it is used in evaluated closed form.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::func::{MatFn, VecFn};
use crate::matrix::{self, c64, CMat, CVec, C64, I};
use crate::pair::ParameterPair;
use crate::quadrature::QuadratureRule;
use crate::system::CanonicalSystem;

const RESIDUAL_SUBDIVISIONS: usize = 8;

/// An element `(f, g)` of the maximal relation: `J f' + F f = H g`.
#[derive(Debug, Clone)]
pub struct AmaxElement {
    sys: CanonicalSystem,
    pub f: VecFn,
    pub g: VecFn,
}

impl AmaxElement {
    pub fn new(sys: &CanonicalSystem, f: VecFn, g: VecFn) -> Self {
        Self {
            sys: sys.clone(),
            f,
            g,
        }
    }

    /// The element with the given `g` and initial value `f(0) = f0`.
    pub fn from_g(sys: &CanonicalSystem, f0: CVec, g: VecFn, rule: &QuadratureRule) -> Result<Self> {
        let f = sys.solve_inhomogeneous(C64::new(0.0, 0.0), f0, &g, rule)?;
        Ok(Self::new(sys, f, g))
    }

    pub fn system(&self) -> &CanonicalSystem {
        &self.sys
    }

    pub fn combine(&self, a: C64, other: &AmaxElement, b: C64) -> AmaxElement {
        AmaxElement::new(&self.sys, self.f.combine(a, &other.f, b), self.g.combine(a, &other.g, b))
    }

    /// Relative residual of `J f' + F f = H g` (integral form).
    pub fn residual(&self, rule: &QuadratureRule) -> Result<f64> {
        self.sys
            .amax_residual(&self.f, &self.g, RESIDUAL_SUBDIVISIONS, rule)
    }
}

/// `(Gamma_0 f, Gamma_1 f)`.
pub fn boundary_maps(elem: &AmaxElement) -> Result<(CVec, CVec)> {
    let a = elem.f.eval(0.0)?;
    let b = elem.f.eval(elem.sys.length())?;
    let s = c64(1.0 / SQRT_2, 0.0);
    let g0 = (&a + &b) * s;
    let g1 = -(elem.sys.j() * (a - b)) * s;
    Ok((g0, g1))
}

/// `<f, g>_H = int g(s)^* H(s) f(s) ds`.
pub fn h_inner(sys: &CanonicalSystem, f: &VecFn, g: &VecFn, rule: &QuadratureRule) -> Result<C64> {
    let v = rule.integrate_mat(|s, k| {
        let val = (g.eval(s)?.adjoint() * &sys.segments()[k].h * f.eval(s)?)[(0, 0)];
        Ok(CMat::from_element(1, 1, val))
    })?;
    Ok(v[(0, 0)])
}

/// `|<g_x, f_y>_H - <f_x, g_y>_H - ((Gamma_0 y)^* Gamma_1 x - (Gamma_1 y)^* Gamma_0 x)|`.
pub fn green_residual(x: &AmaxElement, y: &AmaxElement, rule: &QuadratureRule) -> Result<f64> {
    let sys = &x.sys;
    let lhs = h_inner(sys, &x.g, &y.f, rule)? - h_inner(sys, &x.f, &y.g, rule)?;
    let (x0, x1) = boundary_maps(x)?;
    let (y0, y1) = boundary_maps(y)?;
    let rhs = (y0.adjoint() * &x1)[(0, 0)] - (y1.adjoint() * &x0)[(0, 0)];
    Ok((lhs - rhs).norm())
}

/// `(I + U(l, lambda))^{-1}`, or `SpectrumOfA0` when `lambda` is an
/// eigenvalue of `A_0 = ker Gamma_0`.
pub fn i_plus_u_inverse(sys: &CanonicalSystem, lambda: C64) -> Result<CMat> {
    let u = sys.monodromy(lambda)?;
    let p = sys.p();
    let scale = matrix::spectral_norm(&u).max(1.0);
    matrix::checked_inverse(&(CMat::identity(p, p) + u), scale, |det| Error::SpectrumOfA0 {
        lambda,
        det,
    })
}

/// `M(lambda) = -J (I - U) (I + U)^{-1}`.
pub fn weyl_m(sys: &CanonicalSystem, lambda: C64) -> Result<CMat> {
    let inv = i_plus_u_inverse(sys, lambda)?;
    let u = sys.monodromy(lambda)?;
    let p = sys.p();
    Ok(-(sys.j() * (CMat::identity(p, p) - u) * inv))
}

/// `K = J Re M(i) J`, cached per system.
pub fn k_matrix(sys: &CanonicalSystem) -> Result<CMat> {
    if let Some(k) = sys.k_cache().get() {
        return Ok(k.clone());
    }
    let mi = weyl_m(sys, I)?;
    let k = sys.j() * matrix::hermitian_part(&mi) * sys.j();
    let k = matrix::hermitian_part(&k);
    let _ = sys.k_cache().set(k.clone());
    Ok(k)
}

/// Weyl function, gamma-field and `K` at one point.
#[derive(Debug, Clone)]
pub struct WeylData {
    pub lambda: C64,
    pub m: CMat,
    pub k: CMat,
    inv: CMat,
    sys: CanonicalSystem,
}

impl WeylData {
    /// `gamma(lambda)(t) = sqrt 2 U(t, lambda) (I + U(lambda))^{-1}`.
    pub fn gamma_at(&self, t: f64) -> Result<CMat> {
        Ok(self.sys.u(t, self.lambda)? * &self.inv * c64(SQRT_2, 0.0))
    }

    pub fn gamma_rep(&self) -> MatFn {
        let data = self.clone();
        MatFn::new(self.sys.p(), move |t| data.gamma_at(t))
    }

    /// `(I + U(lambda))^{-1}`.
    pub fn i_plus_u_inverse(&self) -> &CMat {
        &self.inv
    }
}

pub fn weyl(sys: &CanonicalSystem, lambda: C64) -> Result<WeylData> {
    let inv = i_plus_u_inverse(sys, lambda)?;
    let u = sys.monodromy(lambda)?;
    let p = sys.p();
    let m = -(sys.j() * (CMat::identity(p, p) - u) * &inv);
    Ok(WeylData {
        lambda,
        m,
        k: k_matrix(sys)?,
        inv,
        sys: sys.clone(),
    })
}

/// `int_0^l U^#(s, lambda) H(s) h(s) ds`, split by segment.
fn weighted_segment_integrals(
    sys: &CanonicalSystem,
    lambda: C64,
    h: &VecFn,
    rule: &QuadratureRule,
) -> Result<Vec<CVec>> {
    rule.segment_integrals_vec(|s, k| Ok(sys.u_sharp(s, lambda)? * (&sys.segments()[k].h * h.eval(s)?)))
}

/// `gamma(conj lambda)^* f = sqrt 2 (I + U^#(lambda))^{-1} int U^#(s, lambda) H f ds`.
pub fn gamma_adjoint_apply(
    sys: &CanonicalSystem,
    lambda: C64,
    f: &VecFn,
    rule: &QuadratureRule,
) -> Result<CVec> {
    let inv_sharp = i_plus_u_inverse(sys, lambda.conj())?.adjoint();
    let total: CVec = weighted_segment_integrals(sys, lambda, f, rule)?
        .into_iter()
        .fold(CVec::zeros(sys.p()), |acc, v| acc + v);
    Ok(inv_sharp * total * c64(SQRT_2, 0.0))
}

/// `R0_lambda h` for `A_0 = ker Gamma_0`, packaged as `(f, h + lambda f)`.
pub fn canonical_resolvent_apply(
    sys: &CanonicalSystem,
    lambda: C64,
    h: &VecFn,
    rule: &QuadratureRule,
) -> Result<AmaxElement> {
    let m = weyl_m(sys, lambda)?;
    let j = sys.j().clone();
    let p = sys.p();
    let pieces = weighted_segment_integrals(sys, lambda, h, rule)?;
    let mut prefix = Vec::with_capacity(pieces.len() + 1);
    prefix.push(CVec::zeros(p));
    for piece in &pieces {
        let next = prefix.last().expect("nonempty") + piece;
        prefix.push(next);
    }
    let total = prefix.last().expect("nonempty").clone();
    // f(t) = 1/2 U(t) [ J (T - 2 A(t)) - J M J T ],  A(t) = int_0^t
    let base = &j * &total - &j * &m * &j * &total;
    let f = {
        let sys = sys.clone();
        let h = h.clone();
        let rule = rule.clone();
        VecFn::new(p, move |t| {
            let k = sys.segment_index(t);
            let seg = &sys.segments()[k];
            let t = t.clamp(seg.t_start, seg.t_end);
            let partial = rule.integrate_interval_vec(seg.t_start, t, p, |s| {
                Ok(sys.u_sharp(s, lambda)? * (&seg.h * h.eval(s)?))
            })?;
            let a = &prefix[k] + partial;
            Ok(sys.u(t, lambda)? * (&base - &j * a * c64(2.0, 0.0)) * c64(0.5, 0.0))
        })
    };
    let g = h.combine(c64(1.0, 0.0), &f, lambda);
    Ok(AmaxElement::new(sys, f, g))
}

/// The extended resolvent on the gauge as a matrix function:
/// `t -> 1/2 U(t, lambda) (-J - J M J)`.
pub fn resolvent_on_gauge_matrix(sys: &CanonicalSystem, lambda: C64) -> Result<MatFn> {
    let m = weyl_m(sys, lambda)?;
    let j = sys.j();
    let right = (-j - j * m * j) * c64(0.5, 0.0);
    let sys = sys.clone();
    Ok(MatFn::new(sys.p(), move |t| Ok(sys.u(t, lambda)? * &right)))
}

/// `1/2 U(t, lambda) (-J - J M(lambda) J) u`.
pub fn resolvent_on_gauge(sys: &CanonicalSystem, lambda: C64, u: &CVec) -> Result<VecFn> {
    Ok(resolvent_on_gauge_matrix(sys, lambda)?.apply(u))
}

/// `1/2 (R0_i + R0_{-i})` on the gauge, as a matrix function.
pub fn regularizer_on_gauge_matrix(sys: &CanonicalSystem) -> Result<MatFn> {
    let plus = resolvent_on_gauge_matrix(sys, I)?;
    let minus = resolvent_on_gauge_matrix(sys, -I)?;
    Ok(MatFn::new(sys.p(), move |t| {
        Ok((plus.eval(t)? + minus.eval(t)?) * c64(0.5, 0.0))
    }))
}

pub fn regularizer_on_gauge(sys: &CanonicalSystem, u: &CVec) -> Result<VecFn> {
    Ok(regularizer_on_gauge_matrix(sys)?.apply(u))
}

/// `a22(lambda)` through the gauge: `2 [R0_lambda - R](delta)(0)`.
pub fn a22_from_gauge(sys: &CanonicalSystem, lambda: C64) -> Result<CMat> {
    let res = resolvent_on_gauge_matrix(sys, lambda)?.eval(0.0)?;
    let reg = regularizer_on_gauge_matrix(sys)?.eval(0.0)?;
    Ok((res - reg) * c64(2.0, 0.0))
}

/// `(C + D M)^{-1}` with the relative determinant cutoff.
fn krein_denominator(pair: &ParameterPair, lambda: C64, m: &CMat) -> Result<(CMat, CMat)> {
    let (c, d) = pair.at(lambda)?;
    let x = &c + &d * m;
    let scale = matrix::spectral_norm(&c) + matrix::spectral_norm(&d) * matrix::spectral_norm(m);
    let inv = matrix::checked_inverse(&x, scale.max(1.0), |det| Error::SingularDenominator {
        lambda,
        det,
    })?;
    Ok((inv, d))
}

/// `R_lambda h = R0_lambda h - gamma(lambda) (C + D M)^{-1} D gamma(conj lambda)^* h`.
///
/// The result satisfies `C Gamma_0 f + D Gamma_1 f = 0` for `f = (f, h + lambda f)`.
pub fn generalized_resolvent_apply(
    sys: &CanonicalSystem,
    lambda: C64,
    pair: &ParameterPair,
    h: &VecFn,
    rule: &QuadratureRule,
) -> Result<AmaxElement> {
    let data = weyl(sys, lambda)?;
    let (inv, d) = krein_denominator(pair, lambda, &data.m)?;
    let v = gamma_adjoint_apply(sys, lambda, h, rule)?;
    let w = inv * d * v;
    let base = canonical_resolvent_apply(sys, lambda, h, rule)?;
    let correction = data.gamma_rep().apply(&w);
    let f = base.f.combine(c64(1.0, 0.0), &correction, c64(-1.0, 0.0));
    let g = h.combine(c64(1.0, 0.0), &f, lambda);
    Ok(AmaxElement::new(sys, f, g))
}

/// The generalized resolvent applied to the gauge, `t -> R_lambda L`.
pub fn generalized_resolvent_on_gauge(
    sys: &CanonicalSystem,
    lambda: C64,
    pair: &ParameterPair,
) -> Result<MatFn> {
    let data = weyl(sys, lambda)?;
    let (inv, d) = krein_denominator(pair, lambda, &data.m)?;
    let a12 = i_plus_u_inverse(sys, lambda.conj())?.adjoint() * c64(2.0, 0.0);
    let right = inv * d * a12;
    let res = resolvent_on_gauge_matrix(sys, lambda)?;
    let gamma = data.gamma_rep();
    Ok(MatFn::new(sys.p(), move |t| {
        Ok(res.eval(t)? * c64(SQRT_2, 0.0) - gamma.eval(t)? * &right)
    }))
}

/// The L-resolvent read off the gauge evaluation:
/// `sqrt 2 [R_lambda L - sqrt 2 R delta](0)`.
pub fn l_resolvent_from_gauge(sys: &CanonicalSystem, lambda: C64, pair: &ParameterPair) -> Result<CMat> {
    let at0 = generalized_resolvent_on_gauge(sys, lambda, pair)?.eval(0.0)?;
    let reg = regularizer_on_gauge_matrix(sys)?.eval(0.0)?;
    Ok((at0 - reg * c64(SQRT_2, 0.0)) * c64(SQRT_2, 0.0))
}

/// `|C Gamma_0 f + D Gamma_1 f|_max` relative to the size of the boundary values.
pub fn boundary_condition_residual(pair: &ParameterPair, lambda: C64, elem: &AmaxElement) -> Result<f64> {
    let (c, d) = pair.at(lambda)?;
    let (g0, g1) = boundary_maps(elem)?;
    let scale = (matrix::max_abs(&c) + matrix::max_abs(&d))
        * matrix::max_abs_vec(&g0).max(matrix::max_abs_vec(&g1)).max(1.0);
    Ok(matrix::max_abs_vec(&(c * g0 + d * g1)) / scale.max(1.0))
}

/// `|(M(lambda) - M(omega)^*) / (lambda - conj omega) - int gamma(omega)^* H gamma(lambda)|_max`.
pub fn weyl_kernel_residual(
    sys: &CanonicalSystem,
    lambda: C64,
    omega: C64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let denom = lambda - omega.conj();
    if denom.norm() < 1e-10 {
        return Err(Error::ConfluentPoint { lambda, omega });
    }
    let wl = weyl(sys, lambda)?;
    let wo = weyl(sys, omega)?;
    let lhs = (&wl.m - wo.m.adjoint()) / denom;
    let rhs = rule.integrate_mat(|s, k| {
        Ok(wo.gamma_at(s)?.adjoint() * &sys.segments()[k].h * wl.gamma_at(s)?)
    })?;
    Ok(matrix::max_abs(&(lhs - rhs)))
}

/// `N^M_omega(lambda) = (M(lambda) - M(omega)^*) / (lambda - conj omega)`.
pub fn weyl_kernel(sys: &CanonicalSystem, lambda: C64, omega: C64) -> Result<CMat> {
    let denom = lambda - omega.conj();
    if denom.norm() < 1e-10 {
        return Err(Error::ConfluentPoint { lambda, omega });
    }
    Ok((weyl_m(sys, lambda)? - weyl_m(sys, omega)?.adjoint()) / denom)
}
