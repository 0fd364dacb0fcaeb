use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lres_core::{c64, Side, C64};

#[derive(Debug, Parser)]
#[command(name = "lres", version, about = "Weyl functions and L-resolvent matrices of canonical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monodromy matrix U(l, lambda).
    Monodromy(PointArgs),
    /// Weyl function M(lambda).
    Weyl(PointArgs),
    /// Left or right L-resolvent matrix.
    Resmatrix {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long, default_value = "right")]
        side: Side,
    },
    /// L-resolvent of a parameter pair.
    Lres {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        pair: PathBuf,
    },
    /// Sampled inertia of the Weyl, resolvent-matrix and preresolvent kernels
    /// (and of the L-resolvent kernel when a pair is given).
    KernelInertia {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Vec<Lambda>,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "lambda")]
        grid: Option<Grid>,
        #[arg(long)]
        pair: Option<PathBuf>,
        /// Number of seeded random points in the upper half-plane when no
        /// points are given.
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Run the identity-verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub spec: PathBuf,
    /// Gauss-Legendre nodes per segment.
    #[arg(long, default_value_t = lres_core::quadrature::DEFAULT_NODES)]
    pub nodes: usize,
    /// Inertia classification tolerance.
    #[arg(long, default_value_t = lres_core::matrix::DEFAULT_INERTIA_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Append identity residual columns.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    pub lambda: Vec<Lambda>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "lambda")]
    pub grid: Option<Grid>,
}

impl PointArgs {
    pub fn points(&self) -> Vec<C64> {
        match &self.grid {
            Some(g) => g.points(),
            None => self.lambda.iter().map(|l| l.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A complex number written `RE+IMi`, `RE-IMi`, `RE` or `IMi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda(pub C64);

impl FromStr for Lambda {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().replace(' ', "");
        let bad = || format!("cannot parse \"{s}\" as RE+IMi");
        if t.is_empty() {
            return Err(bad());
        }
        let Some(body) = t.strip_suffix(['i', 'j']) else {
            return t.parse::<f64>().map(|re| Lambda(c64(re, 0.0))).map_err(|_| bad());
        };
        // split at the last sign that is neither leading nor an exponent sign
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            other => other,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(bad());
        }
        Ok(Lambda(c64(re, im)))
    }
}

/// `re0:re1:n,im0:im1:m`, an `n x m` grid indexed `i * m + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub re: (f64, f64, usize),
    pub im: (f64, f64, usize),
}

fn axis(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("grid axis \"{s}\" is not start:end:count"));
    };
    let a: f64 = a.trim().parse().map_err(|_| format!("bad grid start \"{a}\""))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad grid end \"{b}\""))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad grid count \"{n}\""))?;
    if n == 0 {
        return Err("grid counts must be positive".into());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err("grid bounds must be finite".into());
    }
    Ok((a, b, n))
}

fn linspace((a, b, n): (f64, f64, usize)) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

impl Grid {
    pub fn points(&self) -> Vec<C64> {
        let ims = linspace(self.im);
        linspace(self.re)
            .into_iter()
            .flat_map(|x| ims.iter().map(move |&y| c64(x, y)))
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (re, im) = s
            .split_once(',')
            .ok_or_else(|| format!("grid \"{s}\" is not re0:re1:n,im0:im1:m"))?;
        Ok(Grid {
            re: axis(re)?,
            im: axis(im)?,
        })
    }
}
