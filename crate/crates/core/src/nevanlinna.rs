//! Families and pairs, negative squares of sampled kernels, graph transforms
//! by L-resolvent matrices and the three routes to L-resolvents.

use serde::Serialize;

use crate::error::{AbCondition, Error, Result};
use crate::func::LambdaFn;
use crate::matrix::{self, c64, CMat, Inertia, C64, I};
use crate::pair::{ParameterPair, PAIR_TOL};
use crate::resolvent::{self, k_matrix, ResolventMatrixW};
use crate::system::CanonicalSystem;
use crate::triple;

/// A family `tau(lambda) = ran [phi(lambda); psi(lambda)]`.
#[derive(Debug, Clone)]
pub struct FamilyRep {
    pub p: usize,
    pub phi: LambdaFn,
    pub psi: LambdaFn,
}

impl FamilyRep {
    pub fn new(p: usize, phi: LambdaFn, psi: LambdaFn) -> Self {
        Self { p, phi, psi }
    }

    /// `[phi; psi]`, a `2p x p` basis of the graph.
    pub fn basis_at(&self, lambda: C64) -> Result<CMat> {
        let phi = self.phi.eval(lambda)?;
        let psi = self.psi.eval(lambda)?;
        let p = self.p;
        let mut b = CMat::zeros(2 * p, p);
        b.view_mut((0, 0), (p, p)).copy_from(&phi);
        b.view_mut((p, 0), (p, p)).copy_from(&psi);
        Ok(b)
    }

    /// `ker phi ∩ ker psi = {0}` at `lambda`.
    pub fn check_at(&self, lambda: C64) -> Result<()> {
        let rank = matrix::numerical_rank(&self.basis_at(lambda)?, PAIR_TOL);
        if rank < self.p {
            return Err(Error::RankDeficient {
                lambda,
                rank,
                expected: self.p,
            });
        }
        Ok(())
    }

    /// `psi phi^{-1}` when `phi` is invertible.
    pub fn value_at(&self, lambda: C64) -> Result<CMat> {
        let phi = self.phi.eval(lambda)?;
        let psi = self.psi.eval(lambda)?;
        let inv = matrix::checked_inverse(&phi, matrix::spectral_norm(&phi).max(1.0), |det| {
            Error::SingularDenominator { lambda, det }
        })?;
        Ok(psi * inv)
    }
}

/// `C = psi^#`, `D = phi^#`.
pub fn pair_from_family(rep: &FamilyRep, samples: &[C64]) -> Result<ParameterPair> {
    for &z in samples {
        rep.check_at(z)?;
    }
    let (phi, psi) = (rep.phi.clone(), rep.psi.clone());
    Ok(ParameterPair::callable(
        rep.p,
        "family",
        LambdaFn::new(move |z| psi.sharp_at(z)),
        LambdaFn::new(move |z| phi.sharp_at(z)),
    ))
}

/// `phi = D^#`, `psi = C^#`.
pub fn family_from_pair(pair: &ParameterPair) -> FamilyRep {
    let p = pair.dim();
    let (pc, pd) = (pair.clone(), pair.clone());
    FamilyRep::new(
        p,
        LambdaFn::new(move |z| Ok(pd.at(z.conj())?.1.adjoint())),
        LambdaFn::new(move |z| Ok(pc.at(z.conj())?.0.adjoint())),
    )
}

/// Whether two bases span the same column space.
pub fn same_graph(a: &CMat, b: &CMat, tol: f64) -> bool {
    let ra = matrix::numerical_rank(a, tol);
    let rb = matrix::numerical_rank(b, tol);
    let mut both = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    both.view_mut((0, 0), a.shape()).copy_from(a);
    both.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    ra == rb && matrix::numerical_rank(&both, tol) == ra
}

/// A sampled Gram matrix of a Hermitian kernel.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSample {
    #[serde(serialize_with = "ser_points")]
    pub points: Vec<C64>,
    #[serde(skip)]
    pub gram: CMat,
    pub inertia: Inertia,
}

fn ser_points<S: serde::Serializer>(points: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(points.len()))?;
    for z in points {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Block Gram `[K(omega_k, omega_j)]_{k, j}` (kernel called as `K(lambda, omega)`)
/// and its inertia. `n_neg` is a lower bound for the number of negative squares.
pub fn negative_squares<K>(kernel: K, points: &[C64], tol: f64) -> Result<KernelSample>
where
    K: Fn(C64, C64) -> Result<CMat>,
{
    if points.is_empty() {
        return Err(Error::Dimension("negative_squares needs at least one point".into()));
    }
    for (a, &x) in points.iter().enumerate() {
        for &y in &points[a..] {
            if (x - y.conj()).norm() < 1e-10 {
                return Err(Error::ConfluentPoint {
                    lambda: x,
                    omega: y,
                });
            }
        }
    }
    let first = kernel(points[0], points[0])?;
    let p = first.nrows();
    let n = points.len();
    let mut gram = CMat::zeros(n * p, n * p);
    for (k, &lk) in points.iter().enumerate() {
        for (j, &oj) in points.iter().enumerate() {
            let block = if k == 0 && j == 0 {
                first.clone()
            } else {
                kernel(lk, oj)?
            };
            gram.view_mut((k * p, j * p), (p, p)).copy_from(&block);
        }
    }
    let inertia = matrix::hermitian_inertia(&gram, tol)?;
    Ok(KernelSample {
        points: points.to_vec(),
        gram,
        inertia,
    })
}

/// `N^r_omega(lambda) = (r(lambda) - r(omega)^*) / (lambda - conj omega)`.
pub fn nevanlinna_kernel(r: &LambdaFn) -> impl Fn(C64, C64) -> Result<CMat> + '_ {
    move |l, o| {
        let gap = l - o.conj();
        if gap.norm() < 1e-10 {
            return Err(Error::ConfluentPoint {
                lambda: l,
                omega: o,
            });
        }
        Ok((r.eval(l)? - r.eval(o)?.adjoint()) / gap)
    }
}

/// Image of a graph under `[psi; phi] -> W [psi; phi]`.
#[derive(Debug, Clone)]
pub struct GraphImage {
    pub phi: CMat,
    pub psi: CMat,
    /// `|det(w21 psi + w22 phi)|`.
    pub denominator_det: f64,
    pub singular: bool,
}

impl GraphImage {
    pub fn basis(&self) -> CMat {
        let p = self.phi.nrows();
        let mut b = CMat::zeros(2 * p, p);
        b.view_mut((0, 0), (p, p)).copy_from(&self.phi);
        b.view_mut((p, 0), (p, p)).copy_from(&self.psi);
        b
    }

    /// `(w11 psi + w12 phi)(w21 psi + w22 phi)^{-1}`, if the denominator is regular.
    pub fn value(&self) -> Option<CMat> {
        if self.singular {
            return None;
        }
        self.phi.clone().try_inverse().map(|inv| &self.psi * inv)
    }
}

fn graph_image(w: &CMat, phi: &CMat, psi: &CMat) -> GraphImage {
    let [w11, w12, w21, w22] = matrix::split_blocks(w);
    let new_phi = &w21 * psi + &w22 * phi;
    let new_psi = &w11 * psi + &w12 * phi;
    let p = phi.nrows();
    let scale = (matrix::spectral_norm(w) * (matrix::spectral_norm(phi) + matrix::spectral_norm(psi)))
        .max(1.0);
    let det = new_phi.determinant().norm();
    GraphImage {
        singular: det < matrix::DET_CUTOFF * scale.powi(p as i32),
        denominator_det: det,
        phi: new_phi,
        psi: new_psi,
    }
}

/// The graph transform `T_W[tau(lambda)]` at one point.
pub fn transform_graph(w: &ResolventMatrixW, rep: &FamilyRep, lambda: C64) -> Result<GraphImage> {
    Ok(graph_image(&w.w, &rep.phi.eval(lambda)?, &rep.psi.eval(lambda)?))
}

/// `T_W` for a matrix function `W`, as a new family.
pub fn transform_family(w: LambdaFn, rep: &FamilyRep) -> FamilyRep {
    let (w1, w2) = (w.clone(), w);
    let (r1, r2) = (rep.clone(), rep.clone());
    FamilyRep::new(
        rep.p,
        LambdaFn::new(move |z| {
            Ok(graph_image(&w1.eval(z)?, &r1.phi.eval(z)?, &r1.psi.eval(z)?).phi)
        }),
        LambdaFn::new(move |z| {
            Ok(graph_image(&w2.eval(z)?, &r2.phi.eval(z)?, &r2.psi.eval(z)?).psi)
        }),
    )
}

fn singular(lambda: C64) -> impl FnOnce(f64) -> Error {
    move |det| Error::SingularDenominator { lambda, det }
}

/// `(C w12 + D w22)^{-1} (C w11 + D w21)` with the left matrix.
pub fn l_resolvent_left(sys: &CanonicalSystem, lambda: C64, pair: &ParameterPair) -> Result<CMat> {
    let wl = resolvent::left_resolvent_matrix(sys, lambda)?;
    let [w11, w12, w21, w22] = wl.blocks();
    let (c, d) = pair.at(lambda)?;
    let den = &c * &w12 + &d * &w22;
    let num = &c * &w11 + &d * &w21;
    let scale = (matrix::spectral_norm(&c) + matrix::spectral_norm(&d)) * matrix::spectral_norm(&wl.w);
    Ok(matrix::checked_inverse(&den, scale.max(1.0), singular(lambda))? * num)
}

/// `a22 - a21 (C + D a11)^{-1} D a12` with the preresolvent blocks.
pub fn l_resolvent_direct(sys: &CanonicalSystem, lambda: C64, pair: &ParameterPair) -> Result<CMat> {
    let pre = resolvent::preresolvent(sys, lambda)?;
    let (c, d) = pair.at(lambda)?;
    let den = &c + &d * &pre.a11;
    let scale = matrix::spectral_norm(&c) + matrix::spectral_norm(&d) * matrix::spectral_norm(&pre.a11);
    let inv = matrix::checked_inverse(&den, scale.max(1.0), singular(lambda))?;
    Ok(&pre.a22 - &pre.a21 * inv * d * &pre.a12)
}

/// Check conditions (a)-(c) on `(A, B)` at `lambda`.
pub fn check_ab_conditions(sys: &CanonicalSystem, lambda: C64, a: &LambdaFn, b: &LambdaFn) -> Result<()> {
    let j = sys.j();
    let p = sys.p();
    let (al, bl) = (a.eval(lambda)?, b.eval(lambda)?);
    let size = (matrix::max_abs(&al).powi(2) + matrix::max_abs(&bl).powi(2)).max(1.0);
    if lambda.im != 0.0 {
        // nonnegative in the upper half-plane, nonpositive in the lower one
        let form = (&al * j * al.adjoint() - &bl * j * bl.adjoint()).map(|z| z * -I);
        let ev = matrix::hermitian_eigenvalues(&form);
        let worst = if lambda.im > 0.0 {
            ev[0]
        } else {
            -ev[ev.len() - 1]
        };
        if worst < -1e-9 * size {
            return Err(Error::ConditionViolated {
                condition: AbCondition::A,
                lambda,
                value: worst,
            });
        }
    }
    let (a_sh, b_sh) = (a.sharp_at(lambda)?, b.sharp_at(lambda)?);
    let sym = matrix::max_abs(&(&al * j * a_sh - &bl * j * b_sh));
    if sym > 1e-9 * size {
        return Err(Error::ConditionViolated {
            condition: AbCondition::B,
            lambda,
            value: sym,
        });
    }
    let mut stacked = CMat::zeros(p, 2 * p);
    stacked.view_mut((0, 0), (p, p)).copy_from(&al);
    stacked.view_mut((0, p), (p, p)).copy_from(&bl);
    let rank = matrix::numerical_rank(&stacked, PAIR_TOL);
    if rank < p {
        return Err(Error::ConditionViolated {
            condition: AbCondition::C,
            lambda,
            value: rank as f64,
        });
    }
    Ok(())
}

/// `(A U + B)^{-1} (A U - B) J + K`.
pub fn l_resolvent_from_ab(sys: &CanonicalSystem, lambda: C64, a: &LambdaFn, b: &LambdaFn) -> Result<CMat> {
    check_ab_conditions(sys, lambda, a, b)?;
    let (al, bl) = (a.eval(lambda)?, b.eval(lambda)?);
    let u = sys.monodromy(lambda)?;
    let au = &al * &u;
    let den = &au + &bl;
    let scale = matrix::spectral_norm(&al) * matrix::spectral_norm(&u) + matrix::spectral_norm(&bl);
    let inv = matrix::checked_inverse(&den, scale.max(1.0), singular(lambda))?;
    Ok(inv * (au - bl) * sys.j() + k_matrix(sys)?)
}

/// `(A, B) = (C + D J, C - D J)` as matrix functions.
pub fn ab_from_pair(sys: &CanonicalSystem, pair: &ParameterPair) -> (LambdaFn, LambdaFn) {
    let (pa, pb) = (pair.clone(), pair.clone());
    let (ja, jb) = (sys.j().clone(), sys.j().clone());
    (
        LambdaFn::new(move |z| Ok(pa.ab_at(z, &ja)?.0)),
        LambdaFn::new(move |z| Ok(pb.ab_at(z, &jb)?.1)),
    )
}

/// The L-resolvent of a pair as a matrix function (left route).
pub fn l_resolvent_fn(sys: &CanonicalSystem, pair: &ParameterPair) -> LambdaFn {
    let (sys, pair) = (sys.clone(), pair.clone());
    LambdaFn::new(move |z| l_resolvent_left(&sys, z, &pair))
}

#[derive(Debug, Clone, Serialize)]
pub struct NevanlinnaReport {
    /// Smallest eigenvalue of `Im r(lambda)` over the samples.
    pub min_im_eigenvalue: f64,
    /// Largest `|r(conj lambda)^* - r(lambda)|_max`.
    pub symmetry_residual: f64,
    pub kernel: KernelSample,
}

impl NevanlinnaReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_im_eigenvalue >= -tol && self.symmetry_residual <= tol && self.kernel.inertia.n_neg == 0
    }
}

pub fn check_nevanlinna(r: &LambdaFn, samples: &[C64], tol: f64) -> Result<NevanlinnaReport> {
    let mut min_im = f64::INFINITY;
    let mut sym = 0.0f64;
    for &z in samples {
        let v = r.eval(z)?;
        let im = (&v - v.adjoint()).map(|e| e / c64(0.0, 2.0));
        min_im = min_im.min(matrix::hermitian_eigenvalues(&im)[0]);
        sym = sym.max(matrix::max_abs(&(r.sharp_at(z)? - &v)));
    }
    let kernel = negative_squares(nevanlinna_kernel(r), samples, tol)?;
    Ok(NevanlinnaReport {
        min_im_eigenvalue: min_im,
        symmetry_residual: sym,
        kernel,
    })
}

/// `|det(w21 psi + w22 phi)|` at each sample for the right matrix of `sys`.
pub fn denominator_dets(sys: &CanonicalSystem, rep: &FamilyRep, samples: &[C64]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|&z| {
            let w = resolvent::right_resolvent_matrix(sys, z)?;
            Ok(transform_graph(&w, rep, z)?.denominator_det)
        })
        .collect()
}

/// `r` read off the generalized resolvent on the gauge.
pub fn l_resolvent_gauge(sys: &CanonicalSystem, lambda: C64, pair: &ParameterPair) -> Result<CMat> {
    triple::l_resolvent_from_gauge(sys, lambda, pair)
}
