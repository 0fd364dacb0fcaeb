//! Parameter pairs `(C(lambda), D(lambda))` for boundary conditions
//! `C Gamma_0 + D Gamma_1 = 0` and L-resolvent transforms.

use rand::Rng;
use serde_json::Value;

use crate::error::{Error, Invariant, Result};
use crate::func::LambdaFn;
use crate::io;
use crate::matrix::{self, c64, CMat, C64, I};

pub const PAIR_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum ParameterPair {
    Constant { c: CMat, d: CMat },
    Callable { p: usize, label: String, c: LambdaFn, d: LambdaFn },
}

impl ParameterPair {
    pub fn constant(c: CMat, d: CMat) -> Result<Self> {
        if !c.is_square() || c.shape() != d.shape() {
            return Err(Error::Dimension(format!(
                "pair blocks are {:?} and {:?}",
                c.shape(),
                d.shape()
            )));
        }
        Ok(Self::Constant { c, d })
    }

    pub fn callable(p: usize, label: impl Into<String>, c: LambdaFn, d: LambdaFn) -> Self {
        Self::Callable {
            p,
            label: label.into(),
            c,
            d,
        }
    }

    /// `(I, 0)`: the condition `Gamma_0 = 0`.
    pub fn dirichlet(p: usize) -> Self {
        Self::Constant {
            c: CMat::identity(p, p),
            d: CMat::zeros(p, p),
        }
    }

    /// `(0, I)`: the condition `Gamma_1 = 0`.
    pub fn neumann(p: usize) -> Self {
        Self::Constant {
            c: CMat::zeros(p, p),
            d: CMat::identity(p, p),
        }
    }

    /// `C(lambda) = lambda^2 I`, `D = I`.
    pub fn lambda_sq(p: usize) -> Self {
        Self::callable(
            p,
            "lambda_sq",
            LambdaFn::new(move |z| Ok(CMat::identity(p, p).map(|e| e * z * z))),
            LambdaFn::constant(CMat::identity(p, p)),
        )
    }

    /// `(M0, I)` for a Hermitian `M0`.
    pub fn const_hermitian(m0: CMat) -> Result<Self> {
        let p = m0.nrows();
        Self::constant(m0, CMat::identity(p, p))
    }

    /// `(G(I - V), iG(I + V))` with `V` unitary and `G` invertible, which
    /// covers every selfadjoint pair up to left multiplication.
    pub fn random_selfadjoint<R: Rng>(rng: &mut R, p: usize) -> Self {
        let z = CMat::from_fn(p, p, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let v = (z + CMat::identity(p, p).scale(0.5)).qr().q();
        let g = CMat::from_fn(p, p, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            + CMat::identity(p, p).scale(2.0);
        let id = CMat::identity(p, p);
        let c = &g * (&id - &v);
        let d = (&g * (&id + &v)).map(|e| e * I);
        Self::Constant { c, d }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant { c, .. } => c.nrows(),
            Self::Callable { p, .. } => *p,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Callable { label, .. } => label,
        }
    }

    pub fn at(&self, lambda: C64) -> Result<(CMat, CMat)> {
        match self {
            Self::Constant { c, d } => Ok((c.clone(), d.clone())),
            Self::Callable { c, d, .. } => Ok((c.eval(lambda)?, d.eval(lambda)?)),
        }
    }

    /// `(A, B) = (C + D J, C - D J)`.
    pub fn ab_at(&self, lambda: C64, j: &CMat) -> Result<(CMat, CMat)> {
        let (c, d) = self.at(lambda)?;
        let dj = &d * j;
        Ok((&c + &dj, c - dj))
    }

    /// Symmetry and rank residuals of a constant pair or of a callable pair at `lambda`.
    pub fn residuals_at(&self, lambda: C64) -> Result<(f64, usize)> {
        let (c, d, c_sh, d_sh) = match self {
            Self::Constant { c, d } => (c.clone(), d.clone(), c.adjoint(), d.adjoint()),
            Self::Callable { c, d, .. } => (
                c.eval(lambda)?,
                d.eval(lambda)?,
                c.sharp_at(lambda)?,
                d.sharp_at(lambda)?,
            ),
        };
        let p = c.nrows();
        let sym = matrix::max_abs(&(&c * &d_sh - &d * &c_sh));
        let scale = (matrix::max_abs(&c) * matrix::max_abs(&d)).max(1.0);
        let mut stacked = CMat::zeros(p, 2 * p);
        stacked.view_mut((0, 0), (p, p)).copy_from(&c);
        stacked.view_mut((0, p), (p, p)).copy_from(&d);
        Ok((sym / scale, matrix::numerical_rank(&stacked, PAIR_TOL)))
    }

    /// Check `C D^# = D C^#` and `rank [C D] = p` at the given points
    /// (a constant pair is checked once).
    pub fn validate(&self, samples: &[C64]) -> Result<()> {
        let points: Vec<C64> = match self {
            Self::Constant { .. } => vec![c64(0.0, 1.0)],
            Self::Callable { .. } => samples.to_vec(),
        };
        let p = self.dim();
        for lam in points {
            let (sym, rank) = self.residuals_at(lam)?;
            if sym > PAIR_TOL {
                return Err(Error::InvariantViolation {
                    kind: Invariant::PairSymmetry,
                    segment: None,
                    detail: format!("|C D^# - D C^#| = {sym:.3e} at lambda = {lam}"),
                });
            }
            if rank < p {
                return Err(Error::InvariantViolation {
                    kind: Invariant::PairRank,
                    segment: None,
                    detail: format!("rank [C D] = {rank} < {p} at lambda = {lam}"),
                });
            }
        }
        Ok(())
    }

    /// Parse `{"kind": "constant", "C": .., "D": ..}` or
    /// `{"kind": "builtin", "name": "lambda_sq" | "const_hermitian", "args": ..}`.
    pub fn from_json_value(doc: &Value, p: usize) -> Result<Self> {
        let kind = io::get(doc, "kind", "pair")?
            .as_str()
            .ok_or_else(|| Error::Schema("pair.kind: expected a string".into()))?;
        match kind {
            "constant" => {
                let c = io::parse_matrix(io::get(doc, "C", "pair")?, "pair.C", p)?;
                let d = io::parse_matrix(io::get(doc, "D", "pair")?, "pair.D", p)?;
                Self::constant(c, d)
            }
            "builtin" => {
                let name = io::get(doc, "name", "pair")?
                    .as_str()
                    .ok_or_else(|| Error::Schema("pair.name: expected a string".into()))?;
                match name {
                    "lambda_sq" => Ok(Self::lambda_sq(p)),
                    "const_hermitian" => {
                        let args = io::get(doc, "args", "pair")?;
                        let m = args.get("M").unwrap_or(args);
                        Self::const_hermitian(io::parse_matrix(m, "pair.args.M", p)?)
                    }
                    other => Err(Error::Schema(format!("unknown builtin pair \"{other}\""))),
                }
            }
            other => Err(Error::Schema(format!("unknown pair kind \"{other}\""))),
        }
    }

    pub fn from_json_str(text: &str, p: usize) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("invalid JSON: {e}")))?;
        Self::from_json_value(&doc, p)
    }
}
