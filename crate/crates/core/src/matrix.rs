//! Dense complex matrix utilities at small fixed dimension.
//!
//! Everything downstream is expressed with [`CMat`] (a dynamically sized
//! `nalgebra` matrix of `Complex64`). The dimensions involved are tiny
//! (`p` is the system dimension, block matrices are `2p x 2p`, sampled Gram
//! matrices are a few dozen rows), so robustness is preferred over speed:
//! inertia comes from a full Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default eigenvalue classification threshold for [`hermitian_inertia`],
/// relative to the spectral norm.
pub const DEFAULT_INERTIA_TOL: f64 = 1e-8;

/// Relative determinant cutoff below which a matrix is treated as singular.
pub const DET_CUTOFF: f64 = 1e-12;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Eigenvalue sign counts of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
    pub tol: f64,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.n_neg + self.n_zero + self.n_pos
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.n_neg, self.n_zero, self.n_pos)
    }
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: CMat, context: &'static str) -> Result<CMat> {
    if is_finite(&m) {
        Ok(m)
    } else {
        Err(Error::NonFinite { context })
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Eigenvalues (ascending) of the Hermitian part of `g`.
pub fn hermitian_eigenvalues(g: &CMat) -> Vec<f64> {
    let h = hermitian_part(g);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn hermitian_part(g: &CMat) -> CMat {
    (g + g.adjoint()).scale(0.5)
}

/// Inertia `(n_neg, n_zero, n_pos)` of a Hermitian matrix.
///
/// Eigenvalues below `-tol * |G|_2` count as negative, above `+tol * |G|_2`
/// as positive; the rest as zero. The input must be Hermitian up to
/// `tol * max(1, |G|_max)`.
pub fn hermitian_inertia(g: &CMat, tol: f64) -> Result<Inertia> {
    if !g.is_square() {
        return Err(Error::Dimension(format!(
            "inertia of a {}x{} matrix",
            g.nrows(),
            g.ncols()
        )));
    }
    if !is_finite(g) {
        return Err(Error::NonFinite {
            context: "hermitian_inertia input",
        });
    }
    let residual = max_abs(&(g - g.adjoint()));
    if residual > tol * max_abs(g).max(1.0) {
        return Err(Error::NonHermitian { residual });
    }
    let ev = hermitian_eigenvalues(g);
    let norm = ev.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let cut = tol * norm;
    let mut inertia = Inertia {
        n_neg: 0,
        n_zero: 0,
        n_pos: 0,
        tol,
    };
    for x in ev {
        if x < -cut {
            inertia.n_neg += 1;
        } else if x > cut {
            inertia.n_pos += 1;
        } else {
            inertia.n_zero += 1;
        }
    }
    Ok(inertia)
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::Dimension("expm of a non-square matrix".into()));
    }
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(CMat::identity(m.nrows(), m.nrows()));
    }
    ensure_finite(m.exp(), "expm")
}

/// `f^#(lambda) = f(conj(lambda))^*`.
pub fn sharp<F>(f: F, lambda: C64) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat>,
{
    Ok(f(lambda.conj())?.adjoint())
}

/// Inverse of `x`, failing through `on_singular(|det|)` when
/// `|det x| < DET_CUTOFF * scale^n`.
pub fn checked_inverse<E>(x: &CMat, scale: f64, on_singular: E) -> Result<CMat>
where
    E: FnOnce(f64) -> Error,
{
    let n = x.nrows();
    let det = x.determinant().norm();
    let reference = scale.max(f64::MIN_POSITIVE).powi(n as i32);
    if !det.is_finite() || det < DET_CUTOFF * reference {
        return Err(on_singular(det));
    }
    match x.clone().try_inverse() {
        Some(inv) => ensure_finite(inv, "matrix inverse"),
        None => Err(on_singular(det)),
    }
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Assemble a 2x2 block matrix from equally sized square blocks.
pub fn block2(a11: &CMat, a12: &CMat, a21: &CMat, a22: &CMat) -> CMat {
    let p = a11.nrows();
    let mut m = CMat::zeros(2 * p, 2 * p);
    m.view_mut((0, 0), (p, p)).copy_from(a11);
    m.view_mut((0, p), (p, p)).copy_from(a12);
    m.view_mut((p, 0), (p, p)).copy_from(a21);
    m.view_mut((p, p), (p, p)).copy_from(a22);
    m
}

/// Split a `2p x 2p` matrix into its four `p x p` blocks `[a11, a12, a21, a22]`.
pub fn split_blocks(m: &CMat) -> [CMat; 4] {
    let p = m.nrows() / 2;
    [
        m.view((0, 0), (p, p)).into_owned(),
        m.view((0, p), (p, p)).into_owned(),
        m.view((p, 0), (p, p)).into_owned(),
        m.view((p, p), (p, p)).into_owned(),
    ]
}

/// The canonical skew matrix `[[0, -I], [I, 0]]` of even dimension `p`.
pub fn canonical_j(p: usize) -> CMat {
    assert!(p % 2 == 0 && p > 0, "canonical J needs an even dimension");
    let h = p / 2;
    let one = CMat::identity(h, h);
    block2(&CMat::zeros(h, h), &(-&one), &one, &CMat::zeros(h, h))
}

/// The signature matrix `J_p = [[0, -iI], [iI, 0]]` of size `2p`.
pub fn j_p(p: usize) -> CMat {
    let one = CMat::identity(p, p);
    block2(
        &CMat::zeros(p, p),
        &one.scale(-1.0).map(|z| z * I),
        &one.map(|z| z * I),
        &CMat::zeros(p, p),
    )
}

pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&x| c64(x, 0.0)))
}

pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn inertia_of_zero_and_diag() {
        let z = CMat::zeros(3, 3);
        assert_eq!(hermitian_inertia(&z, 1e-8).unwrap().counts(), (0, 3, 0));
        let d = diag(&[c64(1.0, 0.0), c64(-1.0, 0.0)]);
        assert_eq!(hermitian_inertia(&d, 1e-8).unwrap().counts(), (1, 0, 1));
    }

    /// Number of positive / negative roots of a real-rooted cubic
    /// `x^3 + a x^2 + b x + c` via Descartes' rule of signs.
    fn descartes_counts(a: f64, b: f64, c: f64) -> (usize, usize) {
        fn changes(coeffs: &[f64]) -> usize {
            let signs: Vec<f64> = coeffs
                .iter()
                .copied()
                .filter(|x| x.abs() > 1e-12)
                .collect();
            signs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
        }
        let pos = changes(&[1.0, a, b, c]);
        let neg = changes(&[-1.0, a, -b, c]);
        (pos, neg)
    }

    #[test]
    fn inertia_of_lambda_squared_kernel() {
        // N(lambda, omega) = lambda + conj(omega), points i, 2i, 1+i.
        let pts = [c64(0.0, 1.0), c64(0.0, 2.0), c64(1.0, 1.0)];
        let g = CMat::from_fn(3, 3, |j, k| pts[j] + pts[k].conj());
        // Oracle: characteristic polynomial coefficients of the 3x3 matrix.
        let tr = g.trace().re;
        let mut m2 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                m2 += (g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(j, i)]).re;
            }
        }
        let det = g.determinant().re;
        let (pos, neg) = descartes_counts(-tr, m2, -det);
        assert_eq!((pos, neg), (1, 1));
        let inertia = hermitian_inertia(&g, 1e-8).unwrap();
        assert_eq!(inertia.n_neg, neg);
        assert_eq!(inertia.n_pos, pos);
        assert_eq!(inertia.n_zero, 1);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let g = real_matrix(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        match hermitian_inertia(&g, 1e-8) {
            Err(Error::NonHermitian { residual }) => assert!((residual - 2.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expm_examples() {
        let z = CMat::zeros(2, 2);
        assert_eq!(expm(&z).unwrap(), CMat::identity(2, 2));

        let rot = real_matrix(2, 2, &[0.0, PI, -PI, 0.0]);
        assert!(close(&expm(&rot).unwrap(), &(-CMat::identity(2, 2)), 1e-14));

        let d = diag(&[c64(1.0, 0.0), c64(2.0, 0.0)]);
        let e = expm(&d).unwrap();
        let expected = diag(&[c64(1f64.exp(), 0.0), c64(2f64.exp(), 0.0)]);
        assert!(max_abs(&(&e - &expected)) <= 1e-12 * 2f64.exp());
    }

    #[test]
    fn expm_large_norm_relative_accuracy() {
        // Closed form for a rotation generator of norm 50 with a diagonal shift.
        let theta = 50.0;
        let shift = 0.7;
        let m = real_matrix(2, 2, &[shift, theta, -theta, shift]);
        let e = expm(&m).unwrap();
        let s = shift.exp();
        let expected = real_matrix(
            2,
            2,
            &[
                s * theta.cos(),
                s * theta.sin(),
                -s * theta.sin(),
                s * theta.cos(),
            ],
        );
        assert!(max_abs(&(&e - &expected)) <= 1e-12 * spectral_norm(&expected) * 10.0);
    }

    #[test]
    fn expm_overflow_is_reported() {
        let m = diag(&[c64(1000.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(expm(&m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn sharp_examples() {
        let h0 = real_matrix(2, 2, &[2.0, 1.0, 1.0, -3.0]);
        let f = |_: C64| Ok(h0.clone());
        assert_eq!(sharp(f, c64(0.3, 0.8)).unwrap(), h0);

        let g = |l: C64| Ok(CMat::identity(2, 2).map(|z| z * l));
        let s = sharp(g, I).unwrap();
        assert!(close(&s, &CMat::identity(2, 2).map(|z| z * I), 0.0));
    }

    #[test]
    fn j_matrices() {
        let j = canonical_j(2);
        assert!(close(&(&j * &j), &(-CMat::identity(2, 2)), 0.0));
        assert!(close(&j.adjoint(), &(-&j), 0.0));
        let jp = j_p(2);
        assert!(close(&(&jp * &jp), &CMat::identity(4, 4), 0.0));
        assert!(close(&jp.adjoint(), &jp, 0.0));
    }

    #[test]
    fn checked_inverse_cutoff() {
        let x = diag(&[c64(1.0, 0.0), c64(1e-20, 0.0)]);
        let err = checked_inverse(&x, 1.0, |det| Error::SingularDenominator {
            lambda: I,
            det,
        });
        assert!(matches!(err, Err(Error::SingularDenominator { .. })));
        let y = diag(&[c64(2.0, 0.0), c64(4.0, 0.0)]);
        let inv = checked_inverse(&y, 1.0, |_| unreachable!()).unwrap();
        assert!(close(&inv, &diag(&[c64(0.5, 0.0), c64(0.25, 0.0)]), 1e-15));
    }

    fn arb_matrix(n: usize, bound: f64) -> impl Strategy<Value = CMat> {
        proptest::collection::vec((-bound..bound, -bound..bound), n * n)
            .prop_map(move |v| CMat::from_iterator(n, n, v.into_iter().map(|(a, b)| c64(a, b))))
    }

    fn unitary_from(m: &CMat) -> CMat {
        // QR of a generic matrix gives a unitary factor.
        m.clone().qr().q()
    }

    proptest! {
        #[test]
        fn inertia_is_congruence_invariant(a in arb_matrix(4, 1.0), v in arb_matrix(4, 1.0)) {
            let d = diag(&[c64(2.0, 0.0), c64(-1.0, 0.0), c64(0.5, 0.0), c64(0.0, 0.0)]);
            let q = unitary_from(&(v + CMat::identity(4, 4).scale(3.0)));
            let w = unitary_from(&(a + CMat::identity(4, 4).scale(3.0)));
            let g = &w * &d * w.adjoint();
            let g = hermitian_part(&g);
            let h = hermitian_part(&(q.adjoint() * &g * &q));
            let i1 = hermitian_inertia(&g, 1e-8).unwrap();
            let i2 = hermitian_inertia(&h, 1e-8).unwrap();
            prop_assert_eq!(i1.counts(), (1, 1, 2));
            prop_assert_eq!(i1.counts(), i2.counts());
        }

        #[test]
        fn expm_inverse_pair(m in arb_matrix(3, 1.4)) {
            let n = spectral_norm(&m);
            prop_assume!(n <= 5.0);
            let e = expm(&m).unwrap();
            let f = expm(&(-&m)).unwrap();
            prop_assert!(max_abs(&(&e * &f - CMat::identity(3, 3))) <= 1e-10);
        }

        #[test]
        fn sharp_is_involutive(a in arb_matrix(2, 2.0), re in -2.0..2.0f64, im in -2.0..2.0f64) {
            let lam = c64(re, im);
            let b = a.clone();
            let f = move |l: C64| Ok(b.map(|z| z * l * l + z.conj()));
            let once = |l: C64| sharp(&f, l);
            let twice = sharp(once, lam).unwrap();
            prop_assert!(max_abs(&(twice - f(lam).unwrap())) <= 1e-14 * (1.0 + max_abs(&a)) * 10.0);
        }
    }
}
