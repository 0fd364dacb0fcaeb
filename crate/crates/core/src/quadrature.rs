//! Composite Gauss-Legendre quadrature over the segments of a system.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::matrix::{CMat, CVec};

pub const DEFAULT_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub weight: f64,
    pub segment: usize,
}

/// Per-segment Gauss-Legendre nodes and weights.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes_per_segment: usize,
    breakpoints: Vec<f64>,
    reference: Vec<(f64, f64)>,
    nodes: Vec<Node>,
}

impl QuadratureRule {
    /// `breakpoints` are `0 = t_0 < t_1 < ... < t_m = l`.
    pub fn new(breakpoints: &[f64], nodes_per_segment: usize) -> Result<Self> {
        let n = NonZeroUsize::new(nodes_per_segment)
            .ok_or_else(|| Error::Schema("quadrature needs at least one node".into()))?;
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schema(
                "quadrature breakpoints must be strictly increasing".into(),
            ));
        }
        let mut reference: Vec<(f64, f64)> = GaussLegendre::new(n)
            .as_node_weight_pairs()
            .to_vec();
        reference.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes = Vec::with_capacity(nodes_per_segment * (breakpoints.len() - 1));
        for (k, w) in breakpoints.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            for &(x, wt) in &reference {
                nodes.push(Node {
                    t: a + half * (x + 1.0),
                    weight: half * wt,
                    segment: k,
                });
            }
        }
        Ok(Self {
            nodes_per_segment,
            breakpoints: breakpoints.to_vec(),
            reference,
            nodes,
        })
    }

    pub fn nodes_per_segment(&self) -> usize {
        self.nodes_per_segment
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn segment_nodes(&self, k: usize) -> &[Node] {
        let n = self.nodes_per_segment;
        &self.nodes[k * n..(k + 1) * n]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Nodes and weights of the same rule mapped to `[a, b]`.
    pub fn interval_nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        self.reference
            .iter()
            .map(move |&(x, w)| (a + half * (x + 1.0), half * w))
    }

    /// Sum of `weight * f(t, segment)` over all nodes.
    pub fn integrate_mat<F>(&self, mut f: F) -> Result<CMat>
    where
        F: FnMut(f64, usize) -> Result<CMat>,
    {
        let mut acc: Option<CMat> = None;
        for node in &self.nodes {
            let v = f(node.t, node.segment)? * crate::matrix::c64(node.weight, 0.0);
            acc = Some(match acc {
                Some(a) => a + v,
                None => v,
            });
        }
        acc.ok_or_else(|| Error::Schema("empty quadrature rule".into()))
    }

    /// Per-segment integrals of a vector integrand.
    pub fn segment_integrals_vec<F>(&self, mut f: F) -> Result<Vec<CVec>>
    where
        F: FnMut(f64, usize) -> Result<CVec>,
    {
        let mut out = Vec::with_capacity(self.segments());
        for k in 0..self.segments() {
            let mut acc: Option<CVec> = None;
            for node in self.segment_nodes(k) {
                let v = f(node.t, k)? * crate::matrix::c64(node.weight, 0.0);
                acc = Some(match acc {
                    Some(a) => a + v,
                    None => v,
                });
            }
            out.push(acc.expect("segments have at least one node"));
        }
        Ok(out)
    }

    /// Integral of a vector integrand over a sub-interval `[a, b]` lying in one segment.
    pub fn integrate_interval_vec<F>(&self, a: f64, b: f64, dim: usize, mut f: F) -> Result<CVec>
    where
        F: FnMut(f64) -> Result<CVec>,
    {
        let mut acc = CVec::zeros(dim);
        if b <= a {
            return Ok(acc);
        }
        for (t, w) in self.interval_nodes(a, b) {
            acc += f(t)? * crate::matrix::c64(w, 0.0);
        }
        Ok(acc)
    }
}
