//! Preresolvent matrix, left and right L-resolvent matrices and their kernels.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::MatFn;
use crate::matrix::{self, c64, CMat, C64, I};
use crate::quadrature::QuadratureRule;
use crate::system::CanonicalSystem;
use crate::nevanlinna::{negative_squares, KernelSample};
use crate::triple::{self, weyl};

pub use crate::triple::k_matrix;

const CONFLUENT_GAP: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PreresolventMatrix {
    pub lambda: C64,
    pub a11: CMat,
    pub a12: CMat,
    pub a21: CMat,
    pub a22: CMat,
}

impl PreresolventMatrix {
    pub fn to_block(&self) -> CMat {
        matrix::block2(&self.a11, &self.a12, &self.a21, &self.a22)
    }

    /// `[[0, a12], [-I, a22]]`, the congruence linking the kernels of `A` and `W`.
    pub fn link_matrix(&self) -> CMat {
        let p = self.a11.nrows();
        matrix::block2(
            &CMat::zeros(p, p),
            &self.a12,
            &(-CMat::identity(p, p)),
            &self.a22,
        )
    }
}

pub fn preresolvent(sys: &CanonicalSystem, lambda: C64) -> Result<PreresolventMatrix> {
    let data = weyl(sys, lambda)?;
    let j = sys.j();
    let inv_sharp = triple::i_plus_u_inverse(sys, lambda.conj())?.adjoint();
    Ok(PreresolventMatrix {
        lambda,
        a11: data.m.clone(),
        a12: inv_sharp * c64(2.0, 0.0),
        a21: data.i_plus_u_inverse() * c64(2.0, 0.0),
        a22: -(j * &data.m * j) + &data.k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::Schema(format!("side must be left or right, got {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolventMatrixW {
    pub lambda: C64,
    pub side: Side,
    pub w: CMat,
}

impl ResolventMatrixW {
    pub fn p(&self) -> usize {
        self.w.nrows() / 2
    }

    /// `[w11, w12, w21, w22]`.
    pub fn blocks(&self) -> [CMat; 4] {
        matrix::split_blocks(&self.w)
    }
}

/// `W^l = 1/2 [[(U - I) J + (U + I) K, U + I], [J (U + I) J + J (U - I) K, J (U - I)]]`.
pub fn left_resolvent_matrix(sys: &CanonicalSystem, lambda: C64) -> Result<ResolventMatrixW> {
    let u = sys.monodromy(lambda)?;
    let k = k_matrix(sys)?;
    let j = sys.j();
    let p = sys.p();
    let id = CMat::identity(p, p);
    let up = &u + &id;
    let um = &u - &id;
    let w = matrix::block2(
        &(&um * j + &up * &k),
        &up,
        &(j * &up * j + j * &um * &k),
        &(j * &um),
    ) * c64(0.5, 0.0);
    Ok(ResolventMatrixW {
        lambda,
        side: Side::Left,
        w,
    })
}

/// `W(lambda) = W^l(conj lambda)^*`.
pub fn right_resolvent_matrix(sys: &CanonicalSystem, lambda: C64) -> Result<ResolventMatrixW> {
    let left = left_resolvent_matrix(sys, lambda.conj())?;
    Ok(ResolventMatrixW {
        lambda,
        side: Side::Right,
        w: left.w.adjoint(),
    })
}

pub fn resolvent_matrix(sys: &CanonicalSystem, lambda: C64, side: Side) -> Result<ResolventMatrixW> {
    match side {
        Side::Left => left_resolvent_matrix(sys, lambda),
        Side::Right => right_resolvent_matrix(sys, lambda),
    }
}

fn invert_block(x: &CMat, lambda: C64) -> Result<CMat> {
    matrix::checked_inverse(x, matrix::spectral_norm(x).max(1.0), |det| {
        Error::SingularDenominator { lambda, det }
    })
}

/// The left matrix assembled from preresolvent blocks:
/// `[[a21^{-1} a22, a21^{-1}], [a11 a21^{-1} a22 - a12, a11 a21^{-1}]]`.
pub fn left_from_preresolvent(pre: &PreresolventMatrix) -> Result<ResolventMatrixW> {
    let inv = invert_block(&pre.a21, pre.lambda)?;
    let w = matrix::block2(
        &(&inv * &pre.a22),
        &inv,
        &(&pre.a11 * &inv * &pre.a22 - &pre.a12),
        &(&pre.a11 * &inv),
    );
    Ok(ResolventMatrixW {
        lambda: pre.lambda,
        side: Side::Left,
        w,
    })
}

/// The right matrix assembled from preresolvent blocks:
/// `[[a22 a12^{-1}, a22 a12^{-1} a11 - a21], [a12^{-1}, a12^{-1} a11]]`.
pub fn right_from_preresolvent(pre: &PreresolventMatrix) -> Result<ResolventMatrixW> {
    let inv = invert_block(&pre.a12, pre.lambda)?;
    let w = matrix::block2(
        &(&pre.a22 * &inv),
        &(&pre.a22 * &inv * &pre.a11 - &pre.a21),
        &inv,
        &(&inv * &pre.a11),
    );
    Ok(ResolventMatrixW {
        lambda: pre.lambda,
        side: Side::Right,
        w,
    })
}

/// `|W(lambda) J_p W(conj lambda)^* - J_p|_max` for the right matrix.
pub fn jp_residual(sys: &CanonicalSystem, lambda: C64) -> Result<f64> {
    let jp = matrix::j_p(sys.p());
    let w = right_resolvent_matrix(sys, lambda)?.w;
    let wb = right_resolvent_matrix(sys, lambda.conj())?.w;
    Ok(matrix::max_abs(&(w * &jp * wb.adjoint() - jp)))
}

/// Residuals of `w11^# w22 - w21^# w12 = I` and `w11 w22^# - w12 w21^# = I`.
pub fn block_identity_residuals(sys: &CanonicalSystem, lambda: C64) -> Result<(f64, f64)> {
    let [w11, w12, _, w22] = right_resolvent_matrix(sys, lambda)?.blocks();
    let [b11, _, b21, b22] = right_resolvent_matrix(sys, lambda.conj())?.blocks();
    let id = CMat::identity(sys.p(), sys.p());
    let first = b11.adjoint() * &w22 - b21.adjoint() * &w12 - &id;
    let second = &w11 * b22.adjoint() - &w12 * b21.adjoint() - &id;
    Ok((matrix::max_abs(&first), matrix::max_abs(&second)))
}

fn check_confluent(lambda: C64, omega: C64) -> Result<C64> {
    let gap = lambda - omega.conj();
    if gap.norm() < CONFLUENT_GAP {
        return Err(Error::ConfluentPoint { lambda, omega });
    }
    Ok(gap)
}

/// `K_omega(lambda) = (J_p - W(lambda) J_p W(omega)^*) / (-i (lambda - conj omega))`.
pub fn resolvent_kernel(sys: &CanonicalSystem, lambda: C64, omega: C64) -> Result<CMat> {
    let gap = check_confluent(lambda, omega)?;
    let jp = matrix::j_p(sys.p());
    let wl = right_resolvent_matrix(sys, lambda)?.w;
    let wo = right_resolvent_matrix(sys, omega)?.w;
    Ok((&jp - wl * &jp * wo.adjoint()) / (-I * gap))
}

/// `Phi(s, lambda) = [U(s, conj lambda) (J + K), U(s, conj lambda)] / sqrt 2`.
pub fn kernel_representative(sys: &CanonicalSystem, lambda: C64) -> Result<MatFn> {
    let jk = sys.j() + k_matrix(sys)?;
    let sys = sys.clone();
    let p = sys.p();
    Ok(MatFn::new(p, move |s| {
        let u = sys.u(s, lambda.conj())?;
        let mut phi = CMat::zeros(p, 2 * p);
        phi.view_mut((0, 0), (p, p)).copy_from(&(&u * &jk));
        phi.view_mut((0, p), (p, p)).copy_from(&u);
        Ok(phi * c64(1.0 / SQRT_2, 0.0))
    }))
}

/// `int_0^l Phi(s, lambda)^* H(s) Phi(s, omega) ds`.
pub fn kernel_factorization_integral(
    sys: &CanonicalSystem,
    lambda: C64,
    omega: C64,
    rule: &QuadratureRule,
) -> Result<CMat> {
    check_confluent(lambda, omega)?;
    let pl = kernel_representative(sys, lambda)?;
    let po = kernel_representative(sys, omega)?;
    rule.integrate_mat(|s, k| Ok(pl.eval(s)?.adjoint() * &sys.segments()[k].h * po.eval(s)?))
}

/// `|K_omega(lambda) - int Phi^* H Phi|_max`.
pub fn kernel_factorization_check(
    sys: &CanonicalSystem,
    lambda: C64,
    omega: C64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let kernel = resolvent_kernel(sys, lambda, omega)?;
    let integral = kernel_factorization_integral(sys, lambda, omega, rule)?;
    Ok(matrix::max_abs(&(kernel - integral)))
}

/// `N^A_omega(lambda) = (A(lambda) - A(omega)^*) / (lambda - conj omega)`.
pub fn preresolvent_kernel(sys: &CanonicalSystem, lambda: C64, omega: C64) -> Result<CMat> {
    let gap = check_confluent(lambda, omega)?;
    let al = preresolvent(sys, lambda)?.to_block();
    let ao = preresolvent(sys, omega)?.to_block();
    Ok((al - ao.adjoint()) / gap)
}

/// `T(lambda)(s) = [gamma(lambda)(s), sqrt 2 R0_lambda(delta)(s)]`.
pub fn preresolvent_representative(sys: &CanonicalSystem, lambda: C64) -> Result<MatFn> {
    let gamma = weyl(sys, lambda)?.gamma_rep();
    let gauge = triple::resolvent_on_gauge_matrix(sys, lambda)?;
    let p = sys.p();
    Ok(MatFn::new(p, move |s| {
        let mut t = CMat::zeros(p, 2 * p);
        t.view_mut((0, 0), (p, p)).copy_from(&gamma.eval(s)?);
        t.view_mut((0, p), (p, p))
            .copy_from(&(gauge.eval(s)? * c64(SQRT_2, 0.0)));
        Ok(t)
    }))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PreresolventKernelCheck {
    /// `|N^A - int T(omega)^* H T(lambda)|_max`.
    pub gram_residual: f64,
    /// `|K_omega(lambda) - B(lambda)^{-1} N^A B(omega)^{-*}|_max`.
    pub congruence_residual: f64,
}

pub fn preresolvent_kernel_check(
    sys: &CanonicalSystem,
    lambda: C64,
    omega: C64,
    rule: &QuadratureRule,
) -> Result<PreresolventKernelCheck> {
    let na = preresolvent_kernel(sys, lambda, omega)?;
    let tl = preresolvent_representative(sys, lambda)?;
    let to = preresolvent_representative(sys, omega)?;
    let integral =
        rule.integrate_mat(|s, k| Ok(to.eval(s)?.adjoint() * &sys.segments()[k].h * tl.eval(s)?))?;
    let bl = preresolvent(sys, lambda)?.link_matrix();
    let bo = preresolvent(sys, omega)?.link_matrix();
    let bl_inv = invert_block(&bl, lambda)?;
    let bo_inv = invert_block(&bo, omega)?;
    let kernel = resolvent_kernel(sys, lambda, omega)?;
    Ok(PreresolventKernelCheck {
        gram_residual: matrix::max_abs(&(&na - integral)),
        congruence_residual: matrix::max_abs(&(kernel - bl_inv * na * bo_inv.adjoint())),
    })
}

/// Sampled `N^A` and `K_W` Grams over the same points, compared through the
/// block congruence `K = S N S^*` with `S = diag(B(lambda_k)^{-1})`.
#[derive(Debug, Clone, Serialize)]
pub struct CongruenceInertia {
    pub preresolvent: KernelSample,
    pub resolvent: KernelSample,
    /// `|K - S N S^*|_max / |K|_max` over the whole sample.
    pub congruence_residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Counts of `K` eigenvalues above `sigma_max^2 t` and `sigma_min^2 t`
    /// (positive, then negative), `t` the cutoff used for `N`.
    pub pos_bounds: (usize, usize),
    pub neg_bounds: (usize, usize),
    pub matches: bool,
}

pub fn congruence_inertia(sys: &CanonicalSystem, points: &[C64], tol: f64) -> Result<CongruenceInertia> {
    let na = negative_squares(|l, o| preresolvent_kernel(sys, l, o), points, tol)?;
    let kw = negative_squares(|l, o| resolvent_kernel(sys, l, o), points, tol)?;
    let p2 = 2 * sys.p();
    let n = points.len() * p2;
    let mut s = CMat::zeros(n, n);
    for (k, &z) in points.iter().enumerate() {
        let inv = invert_block(&preresolvent(sys, z)?.link_matrix(), z)?;
        s.view_mut((k * p2, k * p2), (p2, p2)).copy_from(&inv);
    }
    let rebuilt = &s * &na.gram * s.adjoint();
    let residual = matrix::max_abs(&(&kw.gram - rebuilt)) / matrix::max_abs(&kw.gram).max(f64::MIN_POSITIVE);
    let sv = s.singular_values();
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    let ev_n = matrix::hermitian_eigenvalues(&na.gram);
    let cut = tol * ev_n.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let ev_k = matrix::hermitian_eigenvalues(&kw.gram);
    let above = |t: f64| ev_k.iter().filter(|&&x| x > t).count();
    let below = |t: f64| ev_k.iter().filter(|&&x| x < -t).count();
    let lo_t = sigma_min * sigma_min * cut;
    let hi_t = sigma_max * sigma_max * cut;
    let pos_bounds = (above(hi_t), above(lo_t));
    let neg_bounds = (below(hi_t), below(lo_t));
    let within = |b: (usize, usize), x: usize| b.0 <= x && x <= b.1;
    let matches = na.inertia.n_neg == kw.inertia.n_neg
        && within(pos_bounds, na.inertia.n_pos)
        && within(neg_bounds, na.inertia.n_neg);
    Ok(CongruenceInertia {
        preresolvent: na,
        resolvent: kw,
        congruence_residual: residual,
        sigma_min,
        sigma_max,
        pos_bounds,
        neg_bounds,
        matches,
    })
}
