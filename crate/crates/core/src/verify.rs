//! The identity-verification suite: every checked relation as one record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::func::{LambdaFn, VecFn};
use crate::matrix::{self, c64, CMat, CVec, C64};
use crate::nevanlinna::{self, negative_squares};
use crate::pair::ParameterPair;
use crate::resolvent::{self, Side};
use crate::system::CanonicalSystem;
use crate::triple::{self, AmaxElement};

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    pub nodes: usize,
    /// Inertia classification tolerance.
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            nodes: crate::quadrature::DEFAULT_NODES,
            tol: matrix::DEFAULT_INERTIA_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckRecord {
    pub name: &'static str,
    pub anchor: &'static str,
    /// Worst residual over the sampled points; `null` when a check errored.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub nodes: usize,
    pub warnings: Vec<String>,
    pub records: Vec<CheckRecord>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

struct Suite {
    records: Vec<CheckRecord>,
}

impl Suite {
    fn check(&mut self, name: &'static str, anchor: &'static str, tolerance: f64, f: impl FnOnce() -> Result<f64>) {
        let record = match f() {
            Ok(residual) => CheckRecord {
                name,
                anchor,
                residual: Some(residual),
                tolerance,
                pass: residual.is_finite() && residual <= tolerance,
                error: None,
            },
            Err(e) => CheckRecord {
                name,
                anchor,
                residual: None,
                tolerance,
                pass: false,
                error: Some(e.to_string()),
            },
        };
        self.records.push(record);
    }
}

fn upper(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random_range(-2.0..2.0), rng.random_range(0.2..2.0))
}

/// `n` seeded points with real part in `[-2, 2)` and imaginary part in `[0.2, 2)`.
pub fn upper_points(seed: u64, n: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| upper(&mut rng)).collect()
}

fn off_axis(rng: &mut ChaCha8Rng) -> C64 {
    let z = upper(rng);
    if rng.random_bool(0.5) {
        z
    } else {
        z.conj()
    }
}

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random_range(0.0f64..1.0).sqrt();
    let th = rng.random_range(0.0..std::f64::consts::TAU);
    c64(r * th.cos(), r * th.sin())
}

fn rhs(rng: &mut ChaCha8Rng, p: usize) -> VecFn {
    let c: Vec<f64> = (0..4 * p).map(|_| rng.random_range(-1.0..1.0)).collect();
    VecFn::new(p, move |t| {
        Ok(CVec::from_fn(p, |i, _| {
            let k = &c[4 * i..4 * i + 4];
            c64(k[0] + k[1] * t, k[2] * (k[3] * t).sin())
        }))
    })
}

fn rel(diff: &CMat, reference: &CMat) -> f64 {
    matrix::max_abs(diff) / matrix::max_abs(reference).max(1.0)
}

fn worst<T>(items: impl IntoIterator<Item = T>, mut f: impl FnMut(T) -> Result<f64>) -> Result<f64> {
    let mut acc = 0.0f64;
    for x in items {
        acc = acc.max(f(x)?);
    }
    Ok(acc)
}

/// Run every identity check on `sys` with points drawn from `ChaCha8(seed)`.
pub fn run_suite(sys: &CanonicalSystem, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let rule = sys.rule(cfg.nodes)?;
    let p = sys.p();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let disk: Vec<C64> = (0..20).map(|_| in_disk(&mut rng, 3.0)).collect();
    let pts: Vec<C64> = (0..10).map(|_| off_axis(&mut rng)).collect();
    let pairs_of_pts: Vec<(C64, C64)> = (0..10).map(|_| (off_axis(&mut rng), off_axis(&mut rng))).collect();
    let ups: Vec<C64> = (0..10).map(|_| upper(&mut rng)).collect();
    let params: Vec<ParameterPair> = (0..5).map(|_| ParameterPair::random_selfadjoint(&mut rng, p)).collect();
    let rhss: Vec<VecFn> = (0..5).map(|_| rhs(&mut rng, p)).collect();
    let vecs: Vec<CVec> = (0..10)
        .map(|_| CVec::from_fn(p, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();

    let mut warnings = Vec::new();
    let report = sys.definiteness();
    if !report.definite {
        warnings.push(format!("definiteness fails: singular value ratio {:.3e}", report.ratio));
    } else if report.marginal {
        warnings.push(format!("definiteness is marginal: singular value ratio {:.3e}", report.ratio));
    }

    let mut s = Suite { records: Vec::new() };
    let grid = sys.uniform_grid(4);

    s.check("symplectic", "U(t,conj l)^* J U(t,l) = J", 1e-9, || {
        worst(&disk, |&z| {
            worst(&grid, |&t| {
                let u = sys.u(t, z)?;
                Ok(sys.symplectic_residual(t, z)? / matrix::spectral_norm(&u).powi(2).max(1.0))
            })
        })
    });
    s.check("monodromy_det", "det U(l, l) != 0, residual 1 / abs det", 1e10, || {
        worst(&disk, |&z| Ok(1.0 / sys.monodromy(z)?.determinant().norm()))
    });
    s.check("lagrange", "U(l,conj a)^* J U(l,b) - J = (b - a) G(conj a, b)", 1e-7, || {
        worst(&pairs_of_pts, |&(a, b)| {
            let ua = sys.monodromy(a.conj())?;
            let ub = sys.monodromy(b)?;
            let lhs = ua.adjoint() * sys.j() * &ub - sys.j();
            let rhs = sys.gram(a.conj(), b, &rule)? * (b - a);
            let scale = (matrix::spectral_norm(&ua) * matrix::spectral_norm(&ub)).max(1.0);
            Ok(matrix::max_abs(&(lhs - rhs)) / scale)
        })
    });
    s.check("gram_symmetry", "G(a,b)^* = G(b,a)", 1e-12, || {
        worst(&pairs_of_pts, |&(a, b)| {
            let gab = sys.gram(a, b, &rule)?;
            Ok(rel(&(gab.adjoint() - sys.gram(b, a, &rule)?), &gab))
        })
    });
    s.check("weyl_symmetry", "M(conj l)^* = M(l)", 1e-9, || {
        worst(&pts, |&z| {
            let m = triple::weyl_m(sys, z)?;
            Ok(rel(&(triple::weyl_m(sys, z.conj())?.adjoint() - &m), &m))
        })
    });
    s.check("weyl_herglotz", "Im M(l) >= 0 for Im l > 0", 1e-9, || {
        worst(&ups, |&z| {
            let m = triple::weyl_m(sys, z)?;
            let im = (&m - m.adjoint()).map(|e| e / c64(0.0, 2.0));
            Ok((-matrix::hermitian_eigenvalues(&im)[0]).max(0.0))
        })
    });
    s.check("gamma_boundary_values", "Gamma_0 gamma(l) = I, Gamma_1 gamma(l) = M(l)", 1e-10, || {
        worst(&pts, |&z| {
            let data = triple::weyl(sys, z)?;
            let rep = data.gamma_rep();
            worst(vecs.iter().take(3), |u| {
                let f = rep.apply(u);
                let g = f.scale(z);
                let (g0, g1) = triple::boundary_maps(&AmaxElement::new(sys, f, g))?;
                let mu = &data.m * u;
                Ok(matrix::max_abs_vec(&(g0 - u)).max(matrix::max_abs_vec(&(g1 - &mu)) / matrix::max_abs_vec(&mu).max(1.0)))
            })
        })
    });
    s.check("weyl_kernel_factorization", "(M(l) - M(w)^*)/(l - conj w) = gamma(w)^* gamma(l)", 1e-6, || {
        worst(&pairs_of_pts, |&(a, b)| triple::weyl_kernel_residual(sys, a, b, &rule))
    });
    s.check("weyl_kernel_positivity", "n_neg[(M(l) - M(w)^*)/(l - conj w)] = 0", 0.0, || {
        let k = negative_squares(|l, o| triple::weyl_kernel(sys, l, o), &ups, cfg.tol)?;
        Ok(k.inertia.n_neg as f64)
    });
    s.check("green_identity", "<g_x,f_y> - <f_x,g_y> = (G0 y)^* G1 x - (G1 y)^* G0 x", 1e-6, || {
        worst(0..4, |k| {
            let x = AmaxElement::from_g(sys, vecs[k].clone(), rhss[k].clone(), &rule)?;
            let y = AmaxElement::from_g(sys, vecs[k + 4].clone(), rhss[k + 1].clone(), &rule)?;
            triple::green_residual(&x, &y, &rule)
        })
    });
    s.check("canonical_resolvent", "R0_l h solves J f' + F f = l H f + H h, Gamma_0 f = 0", 1e-6, || {
        worst(pts.iter().take(4).zip(&rhss), |(&z, h)| {
            let elem = triple::canonical_resolvent_apply(sys, z, h, &rule)?;
            let (g0, _) = triple::boundary_maps(&elem)?;
            Ok(elem.residual(&rule)?.max(matrix::max_abs_vec(&g0)))
        })
    });
    s.check("a22_two_routes", "a22 = -J M J + J Re M(i) J", 1e-8, || {
        worst(&pts, |&z| {
            let pre = resolvent::preresolvent(sys, z)?;
            Ok(rel(&(triple::a22_from_gauge(sys, z)? - &pre.a22), &pre.a22))
        })
    });
    s.check("left_matrix_two_routes", "W^l from the closed form = W^l from a_ij", 1e-8, || {
        worst(&pts, |&z| {
            let direct = resolvent::left_resolvent_matrix(sys, z)?.w;
            let via = resolvent::left_from_preresolvent(&resolvent::preresolvent(sys, z)?)?.w;
            Ok(rel(&(via - &direct), &direct))
        })
    });
    s.check("right_matrix_two_routes", "W(l) = W^l(conj l)^*", 1e-8, || {
        worst(&pts, |&z| {
            let right = resolvent::resolvent_matrix(sys, z, Side::Right)?.w;
            let via = resolvent::right_from_preresolvent(&resolvent::preresolvent(sys, z)?)?.w;
            Ok(rel(&(via - &right), &right))
        })
    });
    s.check("jp_identity", "W(l) J_p W(conj l)^* = J_p", 1e-8, || {
        worst(&pts, |&z| resolvent::jp_residual(sys, z))
    });
    s.check("block_identities", "w11^# w22 - w21^# w12 = I, w11 w22^# - w12 w21^# = I", 1e-8, || {
        worst(&pts, |&z| {
            let (a, b) = resolvent::block_identity_residuals(sys, z)?;
            Ok(a.max(b))
        })
    });
    s.check("resolvent_kernel_factorization", "K_w(l) = int Phi(l)^* H Phi(w)", 1e-6, || {
        worst(&pairs_of_pts, |&(a, b)| resolvent::kernel_factorization_check(sys, a, b, &rule))
    });
    s.check("preresolvent_kernel_factorization", "N^A_w(l) = T(w)^* T(l)", 1e-6, || {
        worst(pairs_of_pts.iter().take(5), |&(a, b)| {
            Ok(resolvent::preresolvent_kernel_check(sys, a, b, &rule)?.gram_residual)
        })
    });
    s.check("kernel_congruence", "K_w(l) = B(l)^{-1} N^A_w(l) B(w)^{-*}", 1e-8, || {
        worst(pairs_of_pts.iter().take(5), |&(a, b)| {
            let c = resolvent::preresolvent_kernel_check(sys, a, b, &rule)?;
            let k = resolvent::resolvent_kernel(sys, a, b)?;
            Ok(c.congruence_residual / matrix::max_abs(&k).max(1.0))
        })
    });
    s.check("kernel_positivity", "n_neg[K_w(l)] = n_neg[N^A_w(l)] = 0", 0.0, || {
        let c = resolvent::congruence_inertia(sys, &ups[..8], cfg.tol)?;
        Ok((c.preresolvent.inertia.n_neg + c.resolvent.inertia.n_neg) as f64)
    });
    s.check("congruence_inertia", "inertia[K sample] = inertia[N^A sample]", 0.0, || {
        let c = resolvent::congruence_inertia(sys, &ups[..8], cfg.tol)?;
        Ok(if c.matches { 0.0 } else { 1.0 })
    });
    s.check("l_resolvent_routes", "(C w12 + D w22)^{-1}(C w11 + D w21) = a22 - a21 (C + D a11)^{-1} D a12", 1e-8, || {
        worst(&params, |pair| {
            let (a, b) = nevanlinna::ab_from_pair(sys, pair);
            worst(ups.iter().take(4), |&z| {
                let left = nevanlinna::l_resolvent_left(sys, z, pair)?;
                let direct = nevanlinna::l_resolvent_direct(sys, z, pair)?;
                let ab = nevanlinna::l_resolvent_from_ab(sys, z, &a, &b)?;
                let gauge = nevanlinna::l_resolvent_gauge(sys, z, pair)?;
                Ok(rel(&(&direct - &left), &left)
                    .max(rel(&(&ab - &left), &left))
                    .max(rel(&(&gauge - &left), &left)))
            })
        })
    });
    s.check("l_resolvent_nevanlinna", "r^# = r, Im r >= 0, n_neg[N^r] = 0", 1e-8, || {
        worst(&params, |pair| {
            let r = nevanlinna::l_resolvent_fn(sys, pair);
            let rep = nevanlinna::check_nevanlinna(&r, &ups, cfg.tol)?;
            let scale = matrix::max_abs(&r.eval(ups[0])?).max(1.0);
            let penalty = if rep.kernel.inertia.n_neg == 0 { 0.0 } else { f64::INFINITY };
            Ok((-rep.min_im_eigenvalue / scale).max(rep.symmetry_residual / scale).max(0.0) + penalty)
        })
    });
    s.check("graph_transform", "r = psi~ phi~^{-1}, [psi~; phi~] = W [C^#; D^#]", 1e-8, || {
        worst(&params, |pair| {
            let rep = nevanlinna::family_from_pair(pair);
            worst(ups.iter().take(4), |&z| {
                let w = resolvent::right_resolvent_matrix(sys, z)?;
                let image = nevanlinna::transform_graph(&w, &rep, z)?;
                let left = nevanlinna::l_resolvent_left(sys, z, pair)?;
                match image.value() {
                    Some(v) => Ok(rel(&(v - &left), &left)),
                    None => Ok(f64::INFINITY),
                }
            })
        })
    });
    s.check("boundary_condition", "C Gamma_0 f + D Gamma_1 f = 0 for f = R_l h", 1e-7, || {
        worst(params.iter().zip(&rhss).zip(&ups), |((pair, h), &z)| {
            let elem = triple::generalized_resolvent_apply(sys, z, pair, h, &rule)?;
            triple::boundary_condition_residual(pair, z, &elem)
        })
    });
    s.check("generalized_resolvent_ode", "R_l h solves J f' + F f = l H f + H h", 1e-6, || {
        worst(params.iter().zip(&rhss).zip(&ups), |((pair, h), &z)| {
            triple::generalized_resolvent_apply(sys, z, pair, h, &rule)?.residual(&rule)
        })
    });
    s.check("pair_symmetry", "C D^# = D C^#, rank [C D] = p", 0.0, || {
        worst(&params, |pair| {
            pair.validate(&[])?;
            Ok(0.0)
        })
    });
    s.check("lambda_sq_kernel", "n_neg[(l^2 - conj w^2)/(l - conj w)] = 1", 0.0, || {
        let q = LambdaFn::new(|z| Ok(CMat::from_element(1, 1, z * z)));
        let k = negative_squares(nevanlinna::nevanlinna_kernel(&q), &ups[..4], cfg.tol)?;
        Ok((k.inertia.n_neg as f64 - 1.0).abs())
    });

    let passed = s.records.iter().all(|r| r.pass);
    Ok(SuiteReport {
        seed: cfg.seed,
        nodes: cfg.nodes,
        warnings,
        records: s.records,
        passed,
    })
}
