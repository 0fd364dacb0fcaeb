//! Acceptance criteria on the free system FS and a seeded random system RS.
//!
//! Runs without the libtest harness so every criterion prints one line.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lres_core::matrix::{self, spectral_norm};
use lres_core::nevanlinna::{self, negative_squares, nevanlinna_kernel};
use lres_core::resolvent;
use lres_core::triple::{self, AmaxElement};
use lres_core::{c64, CMat, CVec, CanonicalSystem, Error, LambdaFn, ParameterPair, VecFn, VerifyConfig, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RS_SEED: u64 = 7;

type Check = Result<(bool, String), Error>;

fn fs() -> CanonicalSystem {
    CanonicalSystem::free_system()
}

fn rs() -> CanonicalSystem {
    CanonicalSystem::random(RS_SEED, 2, 2).expect("random system")
}

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random_range(0.0f64..1.0).sqrt();
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    c64(r * th.cos(), r * th.sin())
}

/// `|lambda| <= 3` with `|Im lambda| >= 0.1`.
fn off_axis(rng: &mut ChaCha8Rng) -> C64 {
    loop {
        let z = in_disk(rng, 3.0);
        if z.im.abs() >= 0.1 {
            return z;
        }
    }
}

fn upper(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random_range(-3.0..3.0), rng.random_range(0.1..3.0))
}

fn rotation(theta: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()])
}

fn scalar(z: C64) -> CMat {
    CMat::identity(2, 2).map(|e| e * z)
}

fn max_over<T>(items: impl IntoIterator<Item = T>, mut f: impl FnMut(T) -> Result<f64, Error>) -> Result<f64, Error> {
    let mut acc = 0.0f64;
    for x in items {
        acc = acc.max(f(x)?);
    }
    Ok(acc)
}

fn rhs(rng: &mut ChaCha8Rng) -> VecFn {
    let c: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    VecFn::new(2, move |t| {
        Ok(CVec::from_vec(vec![
            c64(c[0] + c[1] * t, c[2] * (c[3] * t).sin()),
            c64(c[4] * (c[5] * t).cos(), c[6] + c[7] * t * t),
        ]))
    })
}

fn c1_monodromy() -> Check {
    let sys = fs();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let worst = max_over(0..50, |_| {
        let z = in_disk(&mut rng, 3.0);
        Ok(spectral_norm(&(sys.monodromy(z)? - rotation(z * PI))))
    })?;
    Ok((worst <= 1e-10, format!("max |U(l,z) - rot(z pi)| = {worst:.2e} (tol 1e-10, 50 points)")))
}

fn c2_weyl() -> Check {
    let sys = fs();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let worst = max_over(0..20, |_| {
        let z = off_axis(&mut rng);
        Ok(spectral_norm(&(triple::weyl_m(&sys, z)? - scalar((z * PI / 2.0).tan()))))
    })?;
    // real grid -3, -2.75, ..., 3: the spectrum of A0 is the odd integers
    let mut grid_ok = true;
    let mut hits = Vec::new();
    for k in -12i32..=12 {
        let x = k as f64 / 4.0;
        let odd = k % 4 == 0 && (k / 4) % 2 != 0;
        match triple::weyl_m(&sys, c64(x, 0.0)) {
            Err(e) if e.is_spectral() => {
                hits.push(x);
                grid_ok &= odd;
            }
            Ok(_) => grid_ok &= !odd,
            Err(e) => return Err(e),
        }
    }
    let pass = worst <= 1e-9 && grid_ok;
    Ok((pass, format!("max |M - tan(z pi/2) I| = {worst:.2e} (tol 1e-9); spectral hits {hits:?}")))
}

fn c3_symplectic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for sys in [fs(), rs()] {
        let grid = sys.uniform_grid(16);
        for _ in 0..50 {
            let z = in_disk(&mut rng, 3.0);
            for &t in &grid {
                let u = sys.u(t, z)?;
                let ub = sys.u(t, z.conj())?;
                let res = spectral_norm(&(ub.adjoint() * sys.j() * &u - sys.j()));
                worst_abs = worst_abs.max(res);
                worst_rel = worst_rel.max(res / spectral_norm(&u).powi(2).max(1.0));
            }
        }
    }
    Ok((
        worst_rel <= 1e-9,
        format!("max |U^* J U - J| / max(1, |U|^2) = {worst_rel:.2e} (tol 1e-9); unnormalized max {worst_abs:.2e}"),
    ))
}

fn c4_weyl_kernel() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for sys in [fs(), rs()] {
        let rule = sys.rule(16)?;
        worst = worst.max(max_over(0..20, |_| {
            let (a, b) = (off_axis(&mut rng), off_axis(&mut rng));
            triple::weyl_kernel_residual(&sys, a, b, &rule)
        })?);
    }
    Ok((worst <= 1e-6, format!("max quadrature residual = {worst:.2e} (tol 1e-6, 16 nodes)")))
}

fn c5_jp_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut jp, mut blocks) = (0.0f64, 0.0f64);
    for sys in [fs(), rs()] {
        for _ in 0..20 {
            let z = in_disk(&mut rng, 3.0);
            jp = jp.max(resolvent::jp_residual(&sys, z)?);
            let (a, b) = resolvent::block_identity_residuals(&sys, z)?;
            blocks = blocks.max(a).max(b);
        }
    }
    Ok((
        jp <= 1e-8 && blocks <= 1e-8,
        format!("W J_p W^# - J_p = {jp:.2e}, block identities = {blocks:.2e} (tol 1e-8)"),
    ))
}

fn c6_resolvent_kernel() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for sys in [fs(), rs()] {
        let rule = sys.default_rule();
        worst = worst.max(max_over(0..10, |_| {
            let (a, b) = (off_axis(&mut rng), off_axis(&mut rng));
            resolvent::kernel_factorization_check(&sys, a, b, &rule)
        })?);
    }
    Ok((worst <= 1e-6, format!("max 4x4 residual = {worst:.2e} (tol 1e-6)")))
}

fn c7_preresolvent_kernel() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut n_neg = Vec::new();
    for sys in [fs(), rs()] {
        let rule = sys.default_rule();
        worst = worst.max(max_over(0..10, |_| {
            let (a, b) = (off_axis(&mut rng), off_axis(&mut rng));
            Ok(resolvent::preresolvent_kernel_check(&sys, a, b, &rule)?.gram_residual)
        })?);
        let pts: Vec<C64> = (0..8).map(|_| upper(&mut rng)).collect();
        let sample = negative_squares(|l, o| resolvent::preresolvent_kernel(&sys, l, o), &pts, 1e-8)?;
        n_neg.push(sample.inertia.n_neg);
    }
    Ok((
        worst <= 1e-6 && n_neg.iter().all(|&n| n == 0),
        format!("max |N^A - T^* T| = {worst:.2e} (tol 1e-6); n_neg FS, RS = {n_neg:?}"),
    ))
}

fn c8_three_routes() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut all_nevanlinna = true;
    for sys in [fs(), rs()] {
        for _ in 0..20 {
            let pair = ParameterPair::random_selfadjoint(&mut rng, 2);
            let (a, b) = nevanlinna::ab_from_pair(&sys, &pair);
            let pts: Vec<C64> = (0..10).map(|_| upper(&mut rng)).collect();
            for &z in &pts {
                let krein = nevanlinna::l_resolvent_direct(&sys, z, &pair)?;
                let left = nevanlinna::l_resolvent_left(&sys, z, &pair)?;
                let ab = nevanlinna::l_resolvent_from_ab(&sys, z, &a, &b)?;
                worst = worst
                    .max(matrix::max_abs(&(&krein - &left)))
                    .max(matrix::max_abs(&(&krein - &ab)))
                    .max(matrix::max_abs(&(&left - &ab)));
            }
            let r = nevanlinna::l_resolvent_fn(&sys, &pair);
            let report = nevanlinna::check_nevanlinna(&r, &pts, 1e-8)?;
            all_nevanlinna &= report.passes(1e-8);
        }
    }
    Ok((
        worst <= 1e-8 && all_nevanlinna,
        format!("max pairwise route gap = {worst:.2e} (tol 1e-8); all r Nevanlinna with n_neg = 0: {all_nevanlinna}"),
    ))
}

fn c9_boundary_values() -> Check {
    let sys = rs();
    let rule = sys.default_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut ode, mut bc, mut minus) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let pair = ParameterPair::random_selfadjoint(&mut rng, 2);
        let h = rhs(&mut rng);
        let z = upper(&mut rng);
        let elem: AmaxElement = triple::generalized_resolvent_apply(&sys, z, &pair, &h, &rule)?;
        ode = ode.max(elem.residual(&rule)?);
        bc = bc.max(triple::boundary_condition_residual(&pair, z, &elem)?);
        let (c, d) = pair.at(z)?;
        let (g0, g1) = triple::boundary_maps(&elem)?;
        let scale = (matrix::max_abs(&c) + matrix::max_abs(&d)) * matrix::max_abs_vec(&g0).max(matrix::max_abs_vec(&g1)).max(1.0);
        minus = minus.max(matrix::max_abs_vec(&(c * g0 - d * g1)) / scale);
    }
    Ok((
        ode <= 1e-6 && bc <= 1e-7,
        format!("ODE residual = {ode:.2e} (tol 1e-6); |C G0 + D G1| = {bc:.2e} (tol 1e-7); |C G0 - D G1| = {minus:.2e}"),
    ))
}

fn c10_a22() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for sys in [fs(), rs()] {
        worst = worst.max(max_over(0..10, |_| {
            let z = off_axis(&mut rng);
            let closed = resolvent::preresolvent(&sys, z)?.a22;
            Ok(matrix::max_abs(&(triple::a22_from_gauge(&sys, z)? - closed)))
        })?);
    }
    Ok((worst <= 1e-8, format!("max |a22 closed form - gauge route| = {worst:.2e} (tol 1e-8)")))
}

fn c11_negative_squares() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = LambdaFn::new(|z| Ok(CMat::from_element(1, 1, z * z)));
    let pts: Vec<C64> = (0..4).map(|_| upper(&mut rng)).collect();
    let q_neg = negative_squares(nevanlinna_kernel(&q), &pts, 1e-8)?.inertia.n_neg;
    let sys = fs();
    let pts: Vec<C64> = (0..10).map(|_| upper(&mut rng)).collect();
    let m = LambdaFn::new({
        let sys = sys.clone();
        move |z| triple::weyl_m(&sys, z)
    });
    let pair = ParameterPair::random_selfadjoint(&mut rng, 2);
    let r = nevanlinna::l_resolvent_fn(&sys, &pair);
    let counts = [
        negative_squares(nevanlinna_kernel(&m), &pts, 1e-8)?.inertia.n_neg,
        negative_squares(|l, o| resolvent::resolvent_kernel(&sys, l, o), &pts, 1e-8)?.inertia.n_neg,
        negative_squares(|l, o| resolvent::preresolvent_kernel(&sys, l, o), &pts, 1e-8)?.inertia.n_neg,
        negative_squares(nevanlinna_kernel(&r), &pts, 1e-8)?.inertia.n_neg,
    ];
    Ok((
        q_neg == 1 && counts.iter().all(|&n| n == 0),
        format!("lambda^2 kernel n_neg = {q_neg} (4 points); FS kernels M, K_W, N^A, r n_neg = {counts:?}"),
    ))
}

fn c12_verify() -> Check {
    let mut identical = true;
    let mut all_pass = true;
    for (sys, seed) in [(fs(), 42), (rs(), RS_SEED)] {
        let cfg = VerifyConfig {
            seed,
            ..VerifyConfig::default()
        };
        let a = serde_json::to_string(&lres_core::run_suite(&sys, &cfg)?).expect("serializable");
        let report = lres_core::run_suite(&sys, &cfg)?;
        let b = serde_json::to_string(&report).expect("serializable");
        identical &= a == b;
        all_pass &= report.passed;
    }
    Ok((identical && all_pass, format!("identical output across runs: {identical}; all records pass: {all_pass}")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 12] = [
        ("monodromy closed form", Duration::from_secs(5), c1_monodromy),
        ("Weyl closed form and spectrum", Duration::from_secs(5), c2_weyl),
        ("symplectic identity", Duration::from_secs(5), c3_symplectic),
        ("Weyl-kernel factorization", Duration::from_secs(5), c4_weyl_kernel),
        ("J_p identity and block identities", Duration::from_secs(5), c5_jp_identity),
        ("resolvent-matrix kernel factorization", Duration::from_secs(5), c6_resolvent_kernel),
        ("preresolvent kernel and inertia", Duration::from_secs(5), c7_preresolvent_kernel),
        ("three-route L-resolvent agreement", Duration::from_secs(5), c8_three_routes),
        ("boundary-value characterization", Duration::from_secs(20), c9_boundary_values),
        ("a22 two-route identity", Duration::from_secs(5), c10_a22),
        ("negative-squares oracle", Duration::from_secs(5), c11_negative_squares),
        ("verify suite determinism", Duration::from_secs(60), c12_verify),
    ];
    let mut failed = 0;
    for (k, (title, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            title,
            detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
