//! Lazily evaluated functions of `t` and of `lambda`.

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::matrix::{C64, CMat, CVec};

/// A `C^p`-valued function on `[0, l]`.
#[derive(Clone)]
pub struct VecFn {
    dim: usize,
    f: Arc<dyn Fn(f64) -> Result<CVec> + Send + Sync>,
}

impl VecFn {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Result<CVec> + Send + Sync + 'static,
    {
        Self { dim, f: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| Ok(CVec::zeros(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Result<CVec> {
        (self.f)(t)
    }

    pub fn sample(&self, grid: &[f64]) -> Result<Vec<CVec>> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: C64, other: &VecFn, b: C64) -> VecFn {
        let (f, g) = (self.clone(), other.clone());
        VecFn::new(self.dim, move |t| Ok(f.eval(t)? * a + g.eval(t)? * b))
    }

    pub fn scale(&self, a: C64) -> VecFn {
        let f = self.clone();
        VecFn::new(self.dim, move |t| Ok(f.eval(t)? * a))
    }

    /// Column `j` of a matrix-valued function.
    pub fn column_of(m: MatFn, j: usize) -> VecFn {
        let dim = m.rows();
        VecFn::new(dim, move |t| Ok(m.eval(t)?.column(j).into_owned()))
    }
}

impl fmt::Debug for VecFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VecFn(dim = {})", self.dim)
    }
}

/// A matrix-valued function on `[0, l]`.
#[derive(Clone)]
pub struct MatFn {
    rows: usize,
    f: Arc<dyn Fn(f64) -> Result<CMat> + Send + Sync>,
}

impl MatFn {
    pub fn new<F>(rows: usize, f: F) -> Self
    where
        F: Fn(f64) -> Result<CMat> + Send + Sync + 'static,
    {
        Self { rows, f: Arc::new(f) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn eval(&self, t: f64) -> Result<CMat> {
        (self.f)(t)
    }

    /// `t -> self(t) * v`.
    pub fn apply(&self, v: &CVec) -> VecFn {
        let (m, v) = (self.clone(), v.clone());
        VecFn::new(self.rows, move |t| Ok(m.eval(t)? * &v))
    }
}

impl fmt::Debug for MatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatFn(rows = {})", self.rows)
    }
}

/// A matrix function of the spectral parameter.
#[derive(Clone)]
pub struct LambdaFn(Arc<dyn Fn(C64) -> Result<CMat> + Send + Sync>);

impl LambdaFn {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(C64) -> Result<CMat> + Send + Sync + 'static,
    {
        Self(Arc::new(f))
    }

    pub fn constant(m: CMat) -> Self {
        Self::new(move |_| Ok(m.clone()))
    }

    pub fn eval(&self, lambda: C64) -> Result<CMat> {
        (self.0)(lambda)
    }

    /// `f^#(lambda) = f(conj lambda)^*`.
    pub fn sharp_at(&self, lambda: C64) -> Result<CMat> {
        crate::matrix::sharp(|z| self.eval(z), lambda)
    }
}

impl fmt::Debug for LambdaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LambdaFn")
    }
}
