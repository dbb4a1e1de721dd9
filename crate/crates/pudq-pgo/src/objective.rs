//! The maximum-likelihood objective over a pose graph, its analytic
//! gradients, and matrix-free Hessian operators.
//!
//! The objective is `F = sum_e (1/2) e^T Omega e` over the tangent residuals.
//! Per-edge contributions are accumulated in fixed edge order so repeated
//! evaluations are bit-identical.

use nalgebra::{DVector, Matrix3x4, Vector4};

use crate::error::Result;
use crate::factor::{EdgeFactor, HessianTensorBundle};
use crate::graph::PoseGraph;
use crate::manifold::{p_tilde, project_product, ProductPoint, ProductTangent};
use crate::pudq::Pudq;

/// Geodesic and tangent residuals of one edge at the graph's current
/// vertices.
pub fn residual(graph: &PoseGraph, i: usize, j: usize) -> Result<(Pudq, nalgebra::Vector3<f64>)> {
    let edge = graph.find_edge(i, j)?;
    let f = EdgeFactor::new(
        edge.from,
        edge.to,
        &edge.measurement,
        &graph.vertices()[edge.from],
        &graph.vertices()[edge.to],
        edge.information.matrix(),
    );
    Ok((f.r, f.e))
}

/// Jacobians of one edge's tangent residual with respect to its two poses.
pub fn edge_jacobians(graph: &PoseGraph, i: usize, j: usize) -> Result<(Matrix3x4<f64>, Matrix3x4<f64>)> {
    let edge = graph.find_edge(i, j)?;
    let f = EdgeFactor::new(
        edge.from,
        edge.to,
        &edge.measurement,
        &graph.vertices()[edge.from],
        &graph.vertices()[edge.to],
        edge.information.matrix(),
    );
    Ok((f.a, f.b))
}

/// Second-derivative bundle of one edge.
pub fn hessian_tensors(graph: &PoseGraph, i: usize, j: usize) -> Result<HessianTensorBundle> {
    let edge = graph.find_edge(i, j)?;
    let f = EdgeFactor::new(
        edge.from,
        edge.to,
        &edge.measurement,
        &graph.vertices()[edge.from],
        &graph.vertices()[edge.to],
        edge.information.matrix(),
    );
    Ok(HessianTensorBundle::new(&f))
}

/// Build all edge factors at an explicit iterate.
pub fn build_factors(graph: &PoseGraph, x: &ProductPoint) -> Vec<EdgeFactor> {
    graph
        .edges()
        .iter()
        .map(|e| {
            EdgeFactor::new(
                e.from,
                e.to,
                &e.measurement,
                x.pose(e.from),
                x.pose(e.to),
                e.information.matrix(),
            )
        })
        .collect()
}

/// Objective value at the graph's current vertices.
pub fn cost(graph: &PoseGraph) -> f64 {
    cost_at(graph, &graph.product_point())
}

/// Objective value at an explicit iterate.
pub fn cost_at(graph: &PoseGraph, x: &ProductPoint) -> f64 {
    let mut acc = 0.0;
    for e in graph.edges() {
        let f = EdgeFactor::new(
            e.from,
            e.to,
            &e.measurement,
            x.pose(e.from),
            x.pose(e.to),
            e.information.matrix(),
        );
        acc += 0.5 * f.e.dot(&f.omega_e);
    }
    acc
}

/// Ambient-space gradient of the objective at the current vertices.
pub fn euclidean_gradient(graph: &PoseGraph) -> DVector<f64> {
    euclidean_gradient_at(graph, &graph.product_point())
}

pub fn euclidean_gradient_at(graph: &PoseGraph, x: &ProductPoint) -> DVector<f64> {
    let factors = build_factors(graph, x);
    euclidean_gradient_from_factors(&factors, x.len())
}

fn euclidean_gradient_from_factors(factors: &[EdgeFactor], n: usize) -> DVector<f64> {
    let mut g = DVector::zeros(4 * n);
    for f in factors {
        let gi = f.grad_from();
        let gj = f.grad_to();
        for k in 0..4 {
            g[4 * f.from + k] += gi[k];
            g[4 * f.to + k] += gj[k];
        }
    }
    g
}

/// Riemannian gradient: the projected ambient gradient, with the anchored
/// vertex block zeroed so the gauge never moves.
pub fn riemannian_gradient(graph: &PoseGraph) -> ProductTangent {
    let x = graph.product_point();
    let g = euclidean_gradient_at(graph, &x);
    ProductTangent::from_dvector(project_product(&x, &g, Some(graph.anchor())))
}

/// Gauss-Newton or exact second-order operator at a fixed iterate, reusing
/// per-edge factors across many Hessian-vector products.
pub struct GraphOperators {
    factors: Vec<EdgeFactor>,
    tensors: Option<Vec<HessianTensorBundle>>,
    x: ProductPoint,
    anchor: Option<usize>,
    cost: f64,
    euclidean_gradient: DVector<f64>,
}

impl GraphOperators {
    /// `anchor = None` leaves the gauge free (used by diagnostics that bound
    /// the full operator); `Some(a)` masks that vertex out of the gradient
    /// and all operator outputs.
    pub fn new(graph: &PoseGraph, x: ProductPoint, anchor: Option<usize>) -> Self {
        let factors = build_factors(graph, &x);
        let cost = factors.iter().map(|f| 0.5 * f.e.dot(&f.omega_e)).sum();
        let euclidean_gradient = euclidean_gradient_from_factors(&factors, x.len());
        GraphOperators {
            factors,
            tensors: None,
            x,
            anchor,
            cost,
            euclidean_gradient,
        }
    }

    /// Also build the second-derivative tensors needed by the exact
    /// Riemannian Hessian.
    pub fn with_tensors(mut self) -> Self {
        self.tensors = Some(self.factors.iter().map(HessianTensorBundle::new).collect());
        self
    }

    pub fn iterate(&self) -> &ProductPoint {
        &self.x
    }

    pub fn factors(&self) -> &[EdgeFactor] {
        &self.factors
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn euclidean_gradient(&self) -> &DVector<f64> {
        &self.euclidean_gradient
    }

    pub fn riemannian_gradient(&self) -> DVector<f64> {
        project_product(&self.x, &self.euclidean_gradient, self.anchor)
    }

    fn mask_anchor(&self, v: &mut DVector<f64>) {
        if let Some(a) = self.anchor {
            for k in 0..4 {
                v[4 * a + k] = 0.0;
            }
        }
    }

    /// Gauss-Newton Hessian-vector product: block-sparse
    /// `sum_e P R_e P v` with `R_e` built from the edge Jacobians.
    pub fn rgn_hessian_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let u = project_product(&self.x, v, self.anchor);
        let mut out = DVector::zeros(v.len());
        for f in &self.factors {
            let ui = u.fixed_rows::<4>(4 * f.from).into_owned();
            let uj = u.fixed_rows::<4>(4 * f.to).into_owned();
            let w = f.omega * (f.a * ui + f.b * uj);
            let oi = f.a.transpose() * w;
            let oj = f.b.transpose() * w;
            for k in 0..4 {
                out[4 * f.from + k] += oi[k];
                out[4 * f.to + k] += oj[k];
            }
        }
        project_product(&self.x, &out, self.anchor)
    }

    /// Exact Riemannian Hessian-vector product: projected Euclidean Hessian
    /// blocks plus the Weingarten curvature correction.
    pub fn riemannian_hessian_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let tensors = self
            .tensors
            .as_ref()
            .expect("riemannian_hessian_vec requires with_tensors()");
        let u = project_product(&self.x, v, self.anchor);
        let mut out = DVector::zeros(v.len());
        let pt = p_tilde();
        for (f, t) in self.factors.iter().zip(tensors.iter()) {
            let ui = u.fixed_rows::<4>(4 * f.from).into_owned();
            let uj = u.fixed_rows::<4>(4 * f.to).into_owned();
            // Weingarten scalars x^T P_perp g for the per-edge gradient
            // blocks; on the manifold x^T P_perp g = x0 g0 + x1 g1.
            let gi = f.grad_from();
            let gj = f.grad_to();
            let xi = self.x.pose(f.from).as_vector();
            let xj = self.x.pose(f.to).as_vector();
            let ci = xi[0] * gi[0] + xi[1] * gi[1];
            let cj = xj[0] * gj[0] + xj[1] * gj[1];
            let oi: Vector4<f64> = t.h_ii * ui + t.h_ij * uj - ci * (pt * ui);
            let oj: Vector4<f64> = t.h_ji * ui + t.h_jj * uj - cj * (pt * uj);
            for k in 0..4 {
                out[4 * f.from + k] += oi[k];
                out[4 * f.to + k] += oj[k];
            }
        }
        let mut out = project_product(&self.x, &out, self.anchor);
        self.mask_anchor(&mut out);
        out
    }
}

/// One-shot Gauss-Newton Hessian-vector product at the graph's vertices.
pub fn rgn_hessian_vec(graph: &PoseGraph, v: &ProductTangent) -> ProductTangent {
    let ops = GraphOperators::new(graph, graph.product_point(), Some(graph.anchor()));
    ProductTangent::from_dvector(ops.rgn_hessian_vec(v.as_dvector()))
}

/// One-shot exact Riemannian Hessian-vector product at the graph's vertices.
pub fn riemannian_hessian_vec(graph: &PoseGraph, v: &ProductTangent) -> ProductTangent {
    let ops =
        GraphOperators::new(graph, graph.product_point(), Some(graph.anchor())).with_tensors();
    ProductTangent::from_dvector(ops.riemannian_hessian_vec(v.as_dvector()))
}
