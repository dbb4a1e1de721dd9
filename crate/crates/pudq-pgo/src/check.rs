//! Verification suites: finite-difference oracles for every analytic
//! derivative, an independent reference route for the residual Jacobians and
//! tensors, operator-property checks, and Monte-Carlo validation of the
//! closed-form bound constants. The CLI exposes these as a self-check
//! command; the test suites call them directly.

use nalgebra::{DVector, Matrix3x4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::bounds::compute_bounds;
use crate::error::Result;
use crate::graph::PoseGraph;
use crate::manifold::{project_product, ProductPoint};
use crate::objective::{cost_at, euclidean_gradient_at, GraphOperators};
use crate::pudq::Pudq;
use crate::synth::{synth_dataset, SynthConfig};

/// Reference implementations kept independent of the production formulas.
///
/// The production Jacobians and tensors substitute the on-manifold identity
/// `r0^2 + r1^2 = 1`; the general forms here keep the denominator explicit,
/// which makes them the exact ambient derivatives and therefore the correct
/// functions to difference numerically.
pub mod oracle {
    use super::*;
    use crate::num::{f1, f2, recip_sinc};
    use crate::pudq::wrap_half_angle;

    /// Tangent residual of the raw 4-vector `r`, the same ambient extension
    /// the production code evaluates.
    pub fn log_of_raw(r: &Vector4<f64>) -> nalgebra::Vector3<f64> {
        let phi = wrap_half_angle(r[1].atan2(r[0]));
        let g = recip_sinc(phi);
        nalgebra::Vector3::new(g * r[1], g * r[2], g * r[3])
    }

    fn raw_residual(z: &Pudq, xi: &Vector4<f64>, xj: &Vector4<f64>) -> Vector4<f64> {
        use crate::pudq::hamilton;
        let zi = z.inverse().into_vector();
        let xi_inv = Vector4::new(xi[0], -xi[1], -xi[2], -xi[3]);
        hamilton(&hamilton(&zi, &xi_inv), xj)
    }

    /// General-form Jacobians with the explicit `1/(r0^2 + r1^2)` factor;
    /// valid off the manifold, unlike the production implementation form.
    pub fn general_jacobians(
        z: &Pudq,
        xi: &Vector4<f64>,
        xj: &Vector4<f64>,
    ) -> (Matrix3x4<f64>, Matrix3x4<f64>) {
        use crate::pudq::{q_l, q_l_inv_inv, q_r};
        let qi = q_r(xj) * q_l_inv_inv(z.as_vector());
        let qj = q_l(&z.inverse().into_vector())
            * q_l(&Vector4::new(xi[0], -xi[1], -xi[2], -xi[3]));
        let r = qi * xi;
        let phi = wrap_half_angle(r[1].atan2(r[0]));
        let gamma_recip = recip_sinc(phi);
        let f1v = f1(phi);
        let den = r[0] * r[0] + r[1] * r[1];
        let jac = |t: &nalgebra::Matrix4<f64>| {
            let mut out = Matrix3x4::zeros();
            for m in 0..4 {
                let g_m = (r[0] * t[(1, m)] - r[1] * t[(0, m)]) / den;
                for k in 1..4 {
                    out[(k - 1, m)] = t[(k, m)] * gamma_recip + f1v * r[k] * g_m;
                }
            }
            out
        };
        (jac(&qi), jac(&qj))
    }

    /// General-form tensor slices (explicit denominator), differentiating the
    /// Jacobian built from factorization matrix `t` in the direction with
    /// residual derivative `dr` and matrix derivative `dt`.
    fn general_tensor_slice(
        t: &nalgebra::Matrix4<f64>,
        dt: &nalgebra::Matrix4<f64>,
        r: &Vector4<f64>,
        dr: &Vector4<f64>,
        phi: f64,
    ) -> Matrix3x4<f64> {
        let gamma_recip = recip_sinc(phi);
        let f1v = f1(phi);
        let f2v = f2(phi);
        let den = r[0] * r[0] + r[1] * r[1];
        let w = r[0] * dr[1] - r[1] * dr[0];
        let rdr = r[0] * dr[0] + r[1] * dr[1];
        let mut out = Matrix3x4::zeros();
        for m in 0..4 {
            let g_m = r[0] * t[(1, m)] - r[1] * t[(0, m)];
            let dg_m =
                r[0] * dt[(1, m)] - r[1] * dt[(0, m)] + t[(1, m)] * dr[0] - t[(0, m)] * dr[1];
            for k in 1..4 {
                out[(k - 1, m)] = dt[(k, m)] * gamma_recip
                    + t[(k, m)] * (w / den) * f1v
                    + (dr[k] / den - 2.0 * r[k] * rdr / (den * den)) * g_m * f1v
                    + (r[k] / den) * dg_m * f1v
                    + (r[k] / den) * g_m * (w / den) * f2v;
            }
        }
        out
    }

    /// All sixteen general-form tensor slices for one edge, indexed as
    /// `(dA/dxi, dA/dxj, dB/dxi, dB/dxj)`.
    pub fn general_tensors(
        z: &Pudq,
        xi: &Pudq,
        xj: &Pudq,
    ) -> (
        [Matrix3x4<f64>; 4],
        [Matrix3x4<f64>; 4],
        [Matrix3x4<f64>; 4],
        [Matrix3x4<f64>; 4],
    ) {
        use crate::pudq::{q_l, q_l_inv_inv, q_r};
        let qi = q_r(xj.as_vector()) * q_l_inv_inv(z.as_vector());
        let qj = q_l(&z.inverse().into_vector()) * q_l(&xi.inverse().into_vector());
        let r = qi * xi.as_vector();
        let phi = wrap_half_angle(r[1].atan2(r[0]));
        let zero = nalgebra::Matrix4::zeros();
        let mut da_dxi = [Matrix3x4::zeros(); 4];
        let mut da_dxj = [Matrix3x4::zeros(); 4];
        let mut db_dxi = [Matrix3x4::zeros(); 4];
        let mut db_dxj = [Matrix3x4::zeros(); 4];
        for m in 0..4 {
            let mut basis = Vector4::zeros();
            basis[m] = 1.0;
            let dqi_dxj = q_r(&basis) * q_l_inv_inv(z.as_vector());
            let mut inv_basis = basis;
            if m > 0 {
                inv_basis[m] = -1.0;
            }
            let dqj_dxi = q_l(&z.inverse().into_vector()) * q_l(&inv_basis);
            let dr_dxi = qi.column(m).into_owned();
            let dr_dxj = qj.column(m).into_owned();
            da_dxi[m] = general_tensor_slice(&qi, &zero, &r, &dr_dxi, phi);
            da_dxj[m] = general_tensor_slice(&qi, &dqi_dxj, &r, &dr_dxj, phi);
            db_dxi[m] = general_tensor_slice(&qj, &dqj_dxi, &r, &dr_dxi, phi);
            db_dxj[m] = general_tensor_slice(&qj, &zero, &r, &dr_dxj, phi);
        }
        (da_dxi, da_dxj, db_dxi, db_dxj)
    }

    /// Central finite differences of the tangent residual in ambient
    /// coordinates, one Jacobian per incident pose.
    pub fn fd_jacobians(
        z: &Pudq,
        xi: &Pudq,
        xj: &Pudq,
        h: f64,
    ) -> (Matrix3x4<f64>, Matrix3x4<f64>) {
        let mut a = Matrix3x4::zeros();
        let mut b = Matrix3x4::zeros();
        for m in 0..4 {
            let mut step = Vector4::zeros();
            step[m] = h;
            let ep = log_of_raw(&raw_residual(z, &(xi.as_vector() + step), xj.as_vector()));
            let em = log_of_raw(&raw_residual(z, &(xi.as_vector() - step), xj.as_vector()));
            a.set_column(m, &((ep - em) / (2.0 * h)));
            let ep = log_of_raw(&raw_residual(z, xi.as_vector(), &(xj.as_vector() + step)));
            let em = log_of_raw(&raw_residual(z, xi.as_vector(), &(xj.as_vector() - step)));
            b.set_column(m, &((ep - em) / (2.0 * h)));
        }
        (a, b)
    }

    /// Central finite differences of the general-form Jacobians, producing
    /// the sixteen tensor slices.
    #[allow(clippy::type_complexity)]
    pub fn fd_tensors(
        z: &Pudq,
        xi: &Pudq,
        xj: &Pudq,
        h: f64,
    ) -> (
        [Matrix3x4<f64>; 4],
        [Matrix3x4<f64>; 4],
        [Matrix3x4<f64>; 4],
        [Matrix3x4<f64>; 4],
    ) {
        let mut da_dxi = [Matrix3x4::zeros(); 4];
        let mut da_dxj = [Matrix3x4::zeros(); 4];
        let mut db_dxi = [Matrix3x4::zeros(); 4];
        let mut db_dxj = [Matrix3x4::zeros(); 4];
        for m in 0..4 {
            let mut step = Vector4::zeros();
            step[m] = h;
            let (ap, bp) = general_jacobians(z, &(xi.as_vector() + step), xj.as_vector());
            let (am, bm) = general_jacobians(z, &(xi.as_vector() - step), xj.as_vector());
            da_dxi[m] = (ap - am) / (2.0 * h);
            db_dxi[m] = (bp - bm) / (2.0 * h);
            let (ap, bp) = general_jacobians(z, xi.as_vector(), &(xj.as_vector() + step));
            let (am, bm) = general_jacobians(z, xi.as_vector(), &(xj.as_vector() - step));
            da_dxj[m] = (ap - am) / (2.0 * h);
            db_dxj[m] = (bp - bm) / (2.0 * h);
        }
        (da_dxi, da_dxj, db_dxi, db_dxj)
    }

    /// Central finite differences of the objective in ambient coordinates.
    pub fn fd_euclidean_gradient(graph: &PoseGraph, x: &ProductPoint, h: f64) -> DVector<f64> {
        let base = x.as_dvector();
        let mut g = DVector::zeros(base.len());
        for k in 0..base.len() {
            let mut vp = base.clone();
            vp[k] += h;
            let mut vm = base.clone();
            vm[k] -= h;
            let fp = cost_at(graph, &ProductPoint::from_dvector(&vp).unwrap());
            let fm = cost_at(graph, &ProductPoint::from_dvector(&vm).unwrap());
            g[k] = (fp - fm) / (2.0 * h);
        }
        g
    }

    /// Central geodesic finite differences of the projected gradient: the
    /// gradients at `Exp_x(+-t v)` are projected back onto the tangent space
    /// at `x` (a transport that is parallel to first order) and differenced.
    pub fn fd_riemannian_hessian_vec(
        graph: &PoseGraph,
        x: &ProductPoint,
        v: &DVector<f64>,
        t: f64,
        anchor: Option<usize>,
    ) -> DVector<f64> {
        let step = crate::manifold::ProductTangent::from_dvector(v * t);
        let back = crate::manifold::ProductTangent::from_dvector(v * (-t));
        let xp = x.exp(&step).unwrap();
        let xm = x.exp(&back).unwrap();
        let gp = project_product(x, &euclidean_gradient_projected(graph, &xp), anchor);
        let gm = project_product(x, &euclidean_gradient_projected(graph, &xm), anchor);
        (gp - gm) / (2.0 * t)
    }

    fn euclidean_gradient_projected(graph: &PoseGraph, x: &ProductPoint) -> DVector<f64> {
        project_product(x, &euclidean_gradient_at(graph, x), None)
    }

    /// Finite-difference directional derivative of the projector family
    /// along the geodesic through `x` with velocity `u`, applied to `w` and
    /// projected: the defining limit of the curvature (Weingarten) map.
    pub fn fd_weingarten(
        x: &Pudq,
        u: &Vector4<f64>,
        w: &Vector4<f64>,
        h: f64,
    ) -> Vector4<f64> {
        let tangent = crate::manifold::TangentVec::new_unchecked(*u, *x);
        let cp = crate::manifold::exp_at(x, &scale_tangent(&tangent, h));
        let cm = crate::manifold::exp_at(x, &scale_tangent(&tangent, -h));
        let dp = (crate::manifold::projector(&cp) - crate::manifold::projector(&cm)) / (2.0 * h);
        let applied = dp * w;
        *crate::manifold::project_tangent(x, &applied).ambient()
    }

    fn scale_tangent(
        t: &crate::manifold::TangentVec,
        s: f64,
    ) -> crate::manifold::TangentVec {
        crate::manifold::TangentVec::new_unchecked(t.ambient() * s, *t.base())
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    /// Worst observed value (relative error or defect, per the check).
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn push(&mut self, name: impl Into<String>, observed: f64, tolerance: f64) {
        let name = name.into();
        self.entries.push(CheckEntry {
            pass: observed <= tolerance && observed.is_finite(),
            name,
            observed,
            tolerance,
        });
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&CheckEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }
}

/// Deliberate perturbation of one analytic Jacobian entry, used to verify
/// that the derivative checks actually detect sign errors.
#[derive(Clone, Copy, Debug)]
pub struct JacobianFault {
    pub row: usize,
    pub col: usize,
    pub scale: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    /// Number of random graphs per derivative suite.
    pub graphs: usize,
    /// Vertex count of each random graph.
    pub n: usize,
    pub fault: Option<JacobianFault>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 1,
            graphs: 20,
            n: 6,
            fault: None,
        }
    }
}

fn rel_err(observed: f64, reference: f64) -> f64 {
    (observed - reference).abs() / reference.abs().max(1e-12)
}

fn matrix_rel_err(a: &Matrix3x4<f64>, b: &Matrix3x4<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-9)
}

/// Relative error between two collections of tensor slices, normalized by
/// the overall reference magnitude so near-zero slices do not inflate it.
fn slices_rel_err(a: &[[Matrix3x4<f64>; 4]], b: &[[Matrix3x4<f64>; 4]]) -> f64 {
    let mut diff = 0.0;
    let mut scale = 0.0;
    for (ga, gb) in a.iter().zip(b.iter()) {
        for (sa, sb) in ga.iter().zip(gb.iter()) {
            diff += (sa - sb).norm_squared();
            scale += sb.norm_squared();
        }
    }
    diff.sqrt() / scale.sqrt().max(1e-9)
}

fn trial_graph(opts: &CheckOptions, k: usize) -> crate::synth::TrialDataset {
    // Alternate the two noise scales across the suite.
    let sigma = if k % 2 == 0 { 1e-4 } else { 1e-2 };
    let n = 2 + (opts.seed as usize + k) % (opts.n.max(2) - 1);
    let mut config = SynthConfig::new(n.max(2), sigma, opts.seed.wrapping_add(k as u64));
    config.loop_closure_prob = 0.4;
    synth_dataset(&config).expect("synthesizing a check graph")
}

/// Gradient, Jacobian, and tensor checks against finite differences, plus
/// the dual-route agreement between the implementation-form and
/// general-form derivatives.
pub fn run_derivative_checks(opts: &CheckOptions) -> CheckReport {
    let mut report = CheckReport::default();
    let h = 1e-6;
    let mut worst_grad = 0.0f64;
    let mut worst_jac = 0.0f64;
    let mut worst_jac_route = 0.0f64;
    let mut worst_tensor = 0.0f64;
    let mut worst_tensor_route = 0.0f64;
    let mut worst_hsym = 0.0f64;
    let mut fault_name: Option<String> = None;

    for k in 0..opts.graphs {
        let trial = trial_graph(opts, k);
        let graph = &trial.graph;
        let x = graph.product_point();

        // Euclidean gradient against ambient central differences.
        let analytic = euclidean_gradient_at(graph, &x);
        let fd = oracle::fd_euclidean_gradient(graph, &x, h);
        worst_grad = worst_grad.max((&analytic - &fd).norm() / fd.norm().max(1e-12));

        for e in graph.edges() {
            let xi = &graph.vertices()[e.from];
            let xj = &graph.vertices()[e.to];
            let f = crate::factor::EdgeFactor::new(
                e.from,
                e.to,
                &e.measurement,
                xi,
                xj,
                e.information.matrix(),
            );
            let mut a = f.a;
            if let Some(fault) = opts.fault {
                a[(fault.row, fault.col)] *= fault.scale;
                fault_name = Some(format!("A[{}][{}]", fault.row, fault.col));
            }
            let (fd_a, fd_b) = oracle::fd_jacobians(&e.measurement, xi, xj, h);
            worst_jac = worst_jac
                .max(matrix_rel_err(&a, &fd_a))
                .max(matrix_rel_err(&f.b, &fd_b));

            // Route agreement: on the manifold the general forms coincide
            // with the implementation forms.
            let (ga, gb) =
                oracle::general_jacobians(&e.measurement, xi.as_vector(), xj.as_vector());
            worst_jac_route = worst_jac_route
                .max(matrix_rel_err(&a, &ga))
                .max(matrix_rel_err(&f.b, &gb));

            let t = crate::factor::HessianTensorBundle::new(&f);
            let (fd_ai, fd_aj, fd_bi, fd_bj) = oracle::fd_tensors(&e.measurement, xi, xj, h);
            let (g_ai, g_aj, g_bi, g_bj) = oracle::general_tensors(&e.measurement, xi, xj);
            let analytic = [t.da_dxi, t.da_dxj, t.db_dxi, t.db_dxj];
            worst_tensor =
                worst_tensor.max(slices_rel_err(&analytic, &[fd_ai, fd_aj, fd_bi, fd_bj]));
            worst_tensor_route =
                worst_tensor_route.max(slices_rel_err(&analytic, &[g_ai, g_aj, g_bi, g_bj]));
            worst_hsym = worst_hsym
                .max((t.h_ii - t.h_ii.transpose()).norm())
                .max((t.h_jj - t.h_jj.transpose()).norm())
                .max((t.h_ji - t.h_ij.transpose()).norm());
        }
    }

    report.push("euclidean gradient vs finite differences", worst_grad, 1e-6);
    let jac_name = match &fault_name {
        Some(entry) => format!("edge jacobians vs finite differences (checking {entry})"),
        None => "edge jacobians vs finite differences".into(),
    };
    report.push(jac_name, worst_jac, 1e-6);
    report.push(
        "edge jacobians vs general-form route",
        worst_jac_route,
        1e-10,
    );
    report.push("hessian tensors vs finite differences", worst_tensor, 1e-5);
    report.push(
        "hessian tensors vs general-form route",
        worst_tensor_route,
        1e-9,
    );
    report.push("euclidean hessian block symmetry", worst_hsym, 1e-10);
    report
}

/// Random tangent at `x`, blockwise projected, anchor block zeroed.
pub fn random_tangent<R: Rng>(
    x: &ProductPoint,
    anchor: Option<usize>,
    rng: &mut R,
) -> DVector<f64> {
    let raw = DVector::from_fn(4 * x.len(), |_, _| rng.gen_range(-1.0..1.0f64));
    project_product(x, &raw, anchor)
}

/// Operator-property checks: self-adjointness of both Hessian operators,
/// positive semidefiniteness of the Gauss-Newton one, their agreement at zero
/// residual, and the directional-derivative consistency of the gradient.
pub fn run_operator_checks(opts: &CheckOptions) -> CheckReport {
    let mut report = CheckReport::default();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ 0x5eed);

    let mut worst_self_rgn = 0.0f64;
    let mut worst_self_exact = 0.0f64;
    let mut min_rayleigh = f64::INFINITY;
    let mut worst_agree = 0.0f64;
    let mut worst_dirderiv = 0.0f64;
    let mut worst_fd_hess = 0.0f64;

    for k in 0..opts.graphs.min(10) {
        let trial = trial_graph(opts, k);
        let graph = &trial.graph;
        let x = graph.product_point();
        let anchor = Some(graph.anchor());
        let ops = GraphOperators::new(graph, x.clone(), anchor).with_tensors();
        let scale = 1.0 + ops.euclidean_gradient().norm();

        for _ in 0..20 {
            let u = random_tangent(&x, anchor, &mut rng);
            let w = random_tangent(&x, anchor, &mut rng);
            let hu = ops.rgn_hessian_vec(&u);
            let hw = ops.rgn_hessian_vec(&w);
            worst_self_rgn = worst_self_rgn.max((u.dot(&hw) - w.dot(&hu)).abs() / scale);
            let eu = ops.riemannian_hessian_vec(&u);
            let ew = ops.riemannian_hessian_vec(&w);
            worst_self_exact = worst_self_exact.max((u.dot(&ew) - w.dot(&eu)).abs() / scale);
            let un = u.norm();
            if un > 0.0 {
                min_rayleigh = min_rayleigh.min(u.dot(&hu) / (un * un));
            }
        }

        // Directional derivative of the objective along random tangents.
        let g = ops.riemannian_gradient();
        for _ in 0..5 {
            let v = random_tangent(&x, anchor, &mut rng);
            let t = 1e-6;
            let step = crate::manifold::ProductTangent::from_dvector(&v * t);
            let back = crate::manifold::ProductTangent::from_dvector(&v * (-t));
            let fp = cost_at(graph, &x.exp(&step).unwrap());
            let fm = cost_at(graph, &x.exp(&back).unwrap());
            let fd = (fp - fm) / (2.0 * t);
            let analytic = g.dot(&v);
            worst_dirderiv = worst_dirderiv.max(rel_err(analytic, fd).min(
                // Near-zero directional derivatives are compared absolutely.
                (analytic - fd).abs() / scale,
            ));
        }

        // Exact Hessian against geodesic finite differences of the gradient.
        for _ in 0..3 {
            let v = random_tangent(&x, anchor, &mut rng);
            let analytic = ops.riemannian_hessian_vec(&v);
            let fd = oracle::fd_riemannian_hessian_vec(graph, &x, &v, 1e-6, anchor);
            worst_fd_hess = worst_fd_hess.max((&analytic - &fd).norm() / fd.norm().max(1e-9));
        }

        // Zero-residual agreement of the two operators.
        let clean = ProductPoint::new(trial.ground_truth.clone());
        let exact_graph = noiseless_graph_from(&trial);
        let ops0 = GraphOperators::new(&exact_graph, clean.clone(), Some(exact_graph.anchor()))
            .with_tensors();
        for _ in 0..5 {
            let v = random_tangent(&clean, Some(exact_graph.anchor()), &mut rng);
            let a = ops0.rgn_hessian_vec(&v);
            let b = ops0.riemannian_hessian_vec(&v);
            let denom = a.norm().max(1.0);
            worst_agree = worst_agree.max((&a - &b).norm() / denom);
        }
    }

    report.push("gauss-newton operator self-adjointness", worst_self_rgn, 1e-9);
    report.push("exact hessian self-adjointness", worst_self_exact, 1e-9);
    report.push(
        "gauss-newton minimum rayleigh quotient",
        (-min_rayleigh).max(0.0),
        1e-10,
    );
    report.push(
        "operators agree at zero residual",
        worst_agree,
        1e-9,
    );
    report.push(
        "gradient directional-derivative consistency",
        worst_dirderiv,
        1e-5,
    );
    report.push(
        "exact hessian vs geodesic finite differences",
        worst_fd_hess,
        1e-4,
    );
    report
}

fn noiseless_edges(trial: &crate::synth::TrialDataset) -> Vec<crate::graph::Edge> {
    trial
        .graph
        .edges()
        .iter()
        .map(|e| crate::graph::Edge {
            from: e.from,
            to: e.to,
            measurement: trial.ground_truth[e.from]
                .inverse()
                .compose(&trial.ground_truth[e.to]),
            information: e.information,
        })
        .collect()
}

fn noiseless_graph_from(trial: &crate::synth::TrialDataset) -> PoseGraph {
    PoseGraph::new(
        trial.ground_truth.clone(),
        noiseless_edges(trial),
        trial.graph.anchor(),
    )
    .expect("noiseless graph")
}

/// Monte-Carlo validation of the closed-form bound constants: sampled points
/// within the stated region never produce operator outputs exceeding the
/// computed Lipschitz constant or Gauss-Newton norm bound, and the sampled
/// residual/Jacobian/gradient quantities respect their own bounds.
pub fn run_bound_checks(
    graph: &PoseGraph,
    radius: f64,
    points: usize,
    tangents_per_point: usize,
    seed: u64,
) -> Result<CheckReport> {
    let b = compute_bounds(graph, radius)?;
    let mut report = CheckReport::default();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = graph.vertex_count();

    let mut max_hess = 0.0f64;
    let mut max_rgn = 0.0f64;
    let mut max_e = 0.0f64;
    let mut max_jac = 0.0f64;
    let mut max_g01 = 0.0f64;

    for _ in 0..points {
        let x = sample_point_in_region(n, radius, &mut rng);
        let ops = GraphOperators::new(graph, x.clone(), None).with_tensors();
        for f in ops.factors() {
            max_e = max_e.max(f.e.norm());
            max_jac = max_jac.max(f.a.norm()).max(f.b.norm());
            let gi = f.grad_from();
            let gj = f.grad_to();
            max_g01 = max_g01
                .max(gi[0].abs())
                .max(gi[1].abs())
                .max(gj[0].abs())
                .max(gj[1].abs());
        }
        for _ in 0..tangents_per_point {
            let mut v = random_tangent(&x, None, &mut rng);
            let norm = v.norm();
            if norm == 0.0 {
                continue;
            }
            v /= norm;
            max_hess = max_hess.max(ops.riemannian_hessian_vec(&v).norm());
            max_rgn = max_rgn.max(ops.rgn_hessian_vec(&v).norm());
        }
    }

    // Report ratios so a pass is observed <= 1.
    report.push("residual norm within bound", max_e / b.e_bar, 1.0);
    report.push("jacobian frobenius within bound", max_jac / b.j_bar, 1.0);
    report.push("gradient entries within bound", max_g01 / b.g_bar, 1.0);
    report.push("hessian operator norm within l_g", max_hess / b.l_g, 1.0);
    report.push("gauss-newton operator norm within beta", max_rgn / b.beta, 1.0);
    Ok(report)
}

/// Sample a product point whose ambient norm does not exceed `radius`: unit
/// rotation parts everywhere plus dual parts scaled into the slack.
pub fn sample_point_in_region<R: Rng>(n: usize, radius: f64, rng: &mut R) -> ProductPoint {
    let slack = ((radius * radius - n as f64) / n as f64).max(0.0).sqrt();
    let poses = (0..n)
        .map(|_| {
            let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let phi = 0.5 * theta;
            // Dual-part norm at most slack / sqrt(2) per coordinate keeps the
            // total within the region.
            let lim = slack / 2.0f64.sqrt();
            let d0 = rng.gen_range(-lim..lim.max(1e-12));
            let d1 = rng.gen_range(-lim..lim.max(1e-12));
            Pudq::new(phi.cos(), phi.sin(), d0, d1)
        })
        .collect();
    ProductPoint::new(poses)
}
