use std::path::Path;

use lres_core::matrix::{self, spectral_norm};
use lres_core::nevanlinna::{self, negative_squares, nevanlinna_kernel};
use lres_core::resolvent::{self, Side};
use lres_core::triple;
use lres_core::verify::{run_suite, VerifyConfig};
use lres_core::{c64, CanonicalSystem, Error, LambdaFn, LoadOptions, ParameterPair, C64};
use rayon::prelude::*;

use crate::args::{Common, Grid, Lambda, PointArgs};
use crate::record::{Cell, Record};

/// A failure that ends the run: the record to print and the exit code.
#[derive(Debug)]
pub struct Fatal {
    pub code: u8,
    pub record: Record,
}

impl Fatal {
    pub fn usage(message: impl Into<String>) -> Self {
        Fatal {
            code: 1,
            record: Record::new()
                .with("error", Cell::Text("UsageError".into()))
                .with("message", Cell::Text(message.into())),
        }
    }
}

impl From<Error> for Fatal {
    fn from(e: Error) -> Self {
        Fatal {
            code: exit_code(&e),
            record: Record::new().error(&e),
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvariantViolation { .. } | Error::ConditionViolated { .. } | Error::NonHermitian { .. } => 2,
        _ => 1,
    }
}

fn is_invariant(e: &Error) -> bool {
    exit_code(e) == 2
}

pub fn load_system(path: &Path, opts: LoadOptions) -> Result<CanonicalSystem, Fatal> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Fatal::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(CanonicalSystem::from_json_str(&text, opts)?)
}

fn load_pair(path: &Path, p: usize) -> Result<ParameterPair, Fatal> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Fatal::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ParameterPair::from_json_str(&text, p)?)
}

/// Evaluate `f` at every point in parallel, keeping grid order. Invariant
/// violations abort the run; other errors become records.
fn sweep<F>(points: &[C64], f: F) -> Result<Vec<Record>, Fatal>
where
    F: Fn(C64) -> Result<Vec<(&'static str, Cell)>, Error> + Sync,
{
    let rows: Vec<Result<Record, Fatal>> = points
        .par_iter()
        .enumerate()
        .map(|(k, &z)| {
            let base = Record::at(k, z);
            match f(z) {
                Ok(cells) => Ok(cells.into_iter().fold(base, |r, (key, c)| r.with(key, c))),
                Err(e) if is_invariant(&e) => Err(Fatal::from(e)),
                Err(e) => Ok(base.error(&e)),
            }
        })
        .collect();
    rows.into_iter().collect()
}

fn system_for(common: &Common) -> Result<CanonicalSystem, Fatal> {
    if common.nodes == 0 {
        return Err(Fatal::usage("--nodes must be positive"));
    }
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(Fatal::usage("--tol must be positive"));
    }
    load_system(&common.spec, LoadOptions::default())
}

pub fn monodromy(args: &PointArgs) -> Result<Vec<Record>, Fatal> {
    let sys = system_for(&args.common)?;
    let check = args.common.check;
    sweep(&args.points(), |z| {
        let u = sys.monodromy(z)?;
        let mut cells = vec![("U", Cell::Matrix(u.clone()))];
        if check {
            let res = sys.symplectic_residual(sys.length(), z)? / spectral_norm(&u).powi(2).max(1.0);
            cells.push(("symplectic_residual", Cell::Real(res)));
        }
        Ok(cells)
    })
}

pub fn weyl(args: &PointArgs) -> Result<Vec<Record>, Fatal> {
    let sys = system_for(&args.common)?;
    let check = args.common.check;
    sweep(&args.points(), |z| {
        let m = triple::weyl_m(&sys, z)?;
        let mut cells = vec![("M", Cell::Matrix(m.clone()))];
        if check {
            let sym = matrix::max_abs(&(triple::weyl_m(&sys, z.conj())?.adjoint() - &m));
            let im = (&m - m.adjoint()).map(|e| e / c64(0.0, 2.0));
            cells.push(("symmetry_residual", Cell::Real(sym)));
            cells.push(("im_min_eigenvalue", Cell::Real(matrix::hermitian_eigenvalues(&im)[0])));
        }
        Ok(cells)
    })
}

pub fn resmatrix(args: &PointArgs, side: Side) -> Result<Vec<Record>, Fatal> {
    let sys = system_for(&args.common)?;
    let check = args.common.check;
    let side_name = match side {
        Side::Left => "left",
        Side::Right => "right",
    };
    sweep(&args.points(), |z| {
        let w = resolvent::resolvent_matrix(&sys, z, side)?.w;
        let mut cells = vec![("side", Cell::Text(side_name.into())), ("W", Cell::Matrix(w))];
        if check {
            cells.push(("jp_residual", Cell::Real(resolvent::jp_residual(&sys, z)?)));
        }
        Ok(cells)
    })
}

pub fn lres(args: &PointArgs, pair_path: &Path) -> Result<Vec<Record>, Fatal> {
    let sys = system_for(&args.common)?;
    let pair = load_pair(pair_path, sys.p())?;
    let points = args.points();
    pair.validate(&points)?;
    let (a, b) = nevanlinna::ab_from_pair(&sys, &pair);
    let check = args.common.check;
    sweep(&points, |z| {
        let left = nevanlinna::l_resolvent_left(&sys, z, &pair)?;
        let scale = matrix::max_abs(&left).max(1.0);
        let mut gap = 0.0f64;
        let mut routes = 1;
        for other in [
            nevanlinna::l_resolvent_direct(&sys, z, &pair),
            nevanlinna::l_resolvent_from_ab(&sys, z, &a, &b),
        ] {
            match other {
                Ok(r) => {
                    gap = gap.max(matrix::max_abs(&(r - &left)) / scale);
                    routes += 1;
                }
                // the other routes invert I + U, and the (A, B) route needs
                // a Nevanlinna pair; the left route needs neither
                Err(e) if e.is_spectral() || matches!(e, Error::ConditionViolated { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let mut cells = vec![
            ("r", Cell::Matrix(left.clone())),
            ("route_residual", Cell::Real(gap)),
            ("routes", Cell::Int(routes)),
        ];
        if check {
            let sym = matrix::max_abs(&(nevanlinna::l_resolvent_left(&sys, z.conj(), &pair)?.adjoint() - &left));
            cells.push(("symmetry_residual", Cell::Real(sym / scale)));
        }
        Ok(cells)
    })
}

pub struct KernelPoints<'a> {
    pub lambda: &'a [Lambda],
    pub grid: Option<&'a Grid>,
    pub random: usize,
}

pub fn kernel_inertia(common: &Common, pts: KernelPoints<'_>, pair_path: Option<&Path>) -> Result<Vec<Record>, Fatal> {
    let sys = system_for(common)?;
    let points: Vec<C64> = match (pts.grid, pts.lambda) {
        (Some(g), _) => g.points(),
        (None, l) if !l.is_empty() => l.iter().map(|x| x.0).collect(),
        _ => lres_core::verify::upper_points(common.seed, pts.random),
    };
    if points.is_empty() {
        return Err(Fatal::usage("no sample points"));
    }
    let pair = pair_path.map(|p| load_pair(p, sys.p())).transpose()?;
    if let Some(pair) = &pair {
        pair.validate(&points)?;
    }
    let m = {
        let sys = sys.clone();
        LambdaFn::new(move |z| triple::weyl_m(&sys, z))
    };
    let r = pair.as_ref().map(|pair| nevanlinna::l_resolvent_fn(&sys, pair));
    let mut jobs: Vec<(&'static str, Box<dyn Fn() -> lres_core::Result<lres_core::KernelSample> + Sync + '_>)> = vec![
        ("weyl", Box::new(|| negative_squares(nevanlinna_kernel(&m), &points, common.tol))),
        (
            "resolvent_matrix",
            Box::new(|| negative_squares(|l, o| resolvent::resolvent_kernel(&sys, l, o), &points, common.tol)),
        ),
        (
            "preresolvent",
            Box::new(|| negative_squares(|l, o| resolvent::preresolvent_kernel(&sys, l, o), &points, common.tol)),
        ),
    ];
    if let Some(r) = &r {
        jobs.push(("l_resolvent", Box::new(|| negative_squares(nevanlinna_kernel(r), &points, common.tol))));
    }
    let results: Vec<_> = jobs.par_iter().map(|(name, job)| (*name, job())).collect();
    let mut records = Vec::new();
    for (name, result) in results {
        let base = Record::new()
            .with("kernel", Cell::Text(name.into()))
            .with("points", Cell::Int(points.len() as u64));
        records.push(match result {
            Ok(sample) => base
                .with("n_neg", Cell::Int(sample.inertia.n_neg as u64))
                .with("n_zero", Cell::Int(sample.inertia.n_zero as u64))
                .with("n_pos", Cell::Int(sample.inertia.n_pos as u64))
                .with("tol", Cell::Real(sample.inertia.tol)),
            Err(e) if is_invariant(&e) => return Err(e.into()),
            Err(e) => base.error(&e),
        });
    }
    Ok(records)
}

/// The suite report as records; the flag is whether every check passed.
pub fn verify(common: &Common) -> Result<(Vec<Record>, bool), Fatal> {
    if common.nodes == 0 {
        return Err(Fatal::usage("--nodes must be positive"));
    }
    let sys = load_system(&common.spec, LoadOptions::lenient())?;
    let cfg = VerifyConfig {
        seed: common.seed,
        nodes: common.nodes,
        tol: common.tol,
    };
    let report = run_suite(&sys, &cfg)?;
    let mut records: Vec<Record> = report
        .warnings
        .iter()
        .map(|w| {
            Record::new()
                .with("name", Cell::Text("warning".into()))
                .with("message", Cell::Text(w.clone()))
        })
        .collect();
    for r in &report.records {
        let mut rec = Record::new()
            .with("name", Cell::Text(r.name.into()))
            .with("anchor", Cell::Text(r.anchor.into()))
            .with("residual", r.residual.map_or(Cell::Null, Cell::Real))
            .with("tolerance", Cell::Real(r.tolerance))
            .with("pass", Cell::Bool(r.pass));
        if let Some(e) = &r.error {
            rec.push("message", Cell::Text(e.clone()));
        }
        records.push(rec);
    }
    Ok((records, report.passed))
}
