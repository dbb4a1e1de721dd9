//! Riemannian trust-region solver: outer loop with radius adaptation and a
//! Steihaug-Toint truncated conjugate-gradient inner solver, plus the
//! first-order iteration-bound diagnostic.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::PoseGraph;
use crate::manifold::{ProductPoint, ProductTangent};
use crate::objective::GraphOperators;

/// Which second-order operator backs the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HessianMode {
    /// Gauss-Newton approximation (the default; positive semidefinite).
    GaussNewton,
    /// Exact Riemannian Hessian including curvature terms.
    Exact,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Gradient-norm termination threshold.
    pub eps_g: f64,
    /// Initial trust radius.
    pub delta0: f64,
    /// Maximum trust radius.
    pub delta_max: f64,
    /// Model-agreement acceptance threshold, in (0, 1/4).
    pub rho_prime: f64,
    /// Inner-solver relative residual factor.
    pub tcg_kappa: f64,
    /// Inner-solver superlinear residual exponent.
    pub tcg_theta: f64,
    pub max_outer_iters: usize,
    /// Inner iteration cap; `None` uses 50 times the tangent dimension 3N.
    /// In exact arithmetic conjugate gradients terminates within the
    /// dimension, but on ill-conditioned pose-graph systems rounding destroys
    /// conjugacy and the residual target routinely needs a large multiple of
    /// the dimension; capping at 3N stalls the outer loop.
    pub max_inner_iters: Option<usize>,
    pub hessian: HessianMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_g: 1e-2,
            delta0: 100.0,
            delta_max: 1e6,
            rho_prime: 1e-2,
            tcg_kappa: 0.05,
            tcg_theta: 0.25,
            max_outer_iters: 500,
            max_inner_iters: None,
            hessian: HessianMode::GaussNewton,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0 <= self.delta_max) {
            return Err(Error::InvalidConfig(
                "require 0 < delta0 <= delta_max".into(),
            ));
        }
        if !(self.rho_prime > 0.0 && self.rho_prime < 0.25) {
            return Err(Error::InvalidConfig("require 0 < rho_prime < 1/4".into()));
        }
        if !(self.eps_g > 0.0) {
            return Err(Error::InvalidConfig("require eps_g > 0".into()));
        }
        if !(self.tcg_kappa > 0.0 && self.tcg_kappa < 1.0 && self.tcg_theta > 0.0) {
            return Err(Error::InvalidConfig(
                "require kappa in (0, 1) and theta > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Why the inner solver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TcgTermination {
    GradientTol,
    NegativeCurvature,
    BoundaryHit,
    MaxIters,
}

/// Inner-solver result: the tangent step, why it stopped, and the model
/// decrease it achieved.
#[derive(Clone, Debug)]
pub struct TcgOutcome {
    pub step: DVector<f64>,
    pub termination: TcgTermination,
    pub model_decrease: f64,
    pub iterations: usize,
}

impl TcgOutcome {
    /// Whether the step lies on the trust-region boundary by construction.
    pub fn on_boundary(&self) -> bool {
        matches!(
            self.termination,
            TcgTermination::NegativeCurvature | TcgTermination::BoundaryHit
        )
    }
}

/// Positive root of `||s + alpha d||^2 = delta^2`.
fn boundary_root(s: &DVector<f64>, d: &DVector<f64>, delta: f64) -> f64 {
    let sd = s.dot(d);
    let dd = d.dot(d);
    let ss = s.dot(s);
    let disc = (sd * sd + dd * (delta * delta - ss)).max(0.0);
    (-sd + disc.sqrt()) / dd
}

/// Steihaug-Toint truncated conjugate gradients on the model
/// `m(s) = f + g^T s + (1/2) s^T H s`, trust region `||s|| <= delta`.
///
/// Starts from zero, so the first iterate is the Cauchy step and the model
/// value decreases strictly every iteration; exits early on negative
/// curvature or a boundary crossing by stepping to the boundary.
pub fn tcg_solve<H>(
    apply_h: H,
    grad: &DVector<f64>,
    delta: f64,
    kappa: f64,
    theta: f64,
    max_iters: usize,
) -> Result<TcgOutcome>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = grad.len();
    let mut s = DVector::zeros(n);
    let mut r = grad.clone();
    let mut d = -r.clone();
    let r0_norm = r.norm();
    let target = r0_norm * kappa.min(r0_norm.powf(theta));

    let mut termination = TcgTermination::MaxIters;
    let mut iterations = 0;
    for k in 0..max_iters {
        iterations = k + 1;
        let hd = apply_h(&d);
        if hd.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite operator output at inner iteration {k}"
            )));
        }
        let dhd = d.dot(&hd);
        if dhd <= 0.0 {
            let alpha = boundary_root(&s, &d, delta);
            s += alpha * &d;
            termination = TcgTermination::NegativeCurvature;
            break;
        }
        let rr = r.dot(&r);
        let alpha = rr / dhd;
        let new_norm_sq = s.dot(&s) + 2.0 * alpha * s.dot(&d) + alpha * alpha * d.dot(&d);
        if new_norm_sq >= delta * delta {
            let alpha = boundary_root(&s, &d, delta);
            s += alpha * &d;
            termination = TcgTermination::BoundaryHit;
            break;
        }
        s += alpha * &d;
        let r_new = &r + alpha * &hd;
        if r_new.norm() <= target {
            termination = TcgTermination::GradientTol;
            break;
        }
        let beta = r_new.dot(&r_new) / rr;
        d = -&r_new + beta * &d;
        r = r_new;
    }

    let hs = apply_h(&s);
    let model_decrease = -(grad.dot(&s) + 0.5 * s.dot(&hs));
    Ok(TcgOutcome {
        step: s,
        termination,
        model_decrease,
        iterations,
    })
}

/// Exact decrease attained by the Cauchy point (the constrained minimizer
/// along the negative gradient). Every truncated-CG step dominates it.
pub fn cauchy_decrease<H>(apply_h: H, grad: &DVector<f64>, delta: f64) -> f64
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let gn = grad.norm();
    if gn == 0.0 {
        return 0.0;
    }
    let hg = apply_h(grad);
    let ghg = grad.dot(&hg);
    let boundary_t = delta / gn;
    let t = if ghg <= 0.0 {
        boundary_t
    } else {
        (gn * gn / ghg).min(boundary_t)
    };
    t * gn * gn - 0.5 * t * t * ghg
}

/// Model value `F + s^T g + (1/2) s^T H s` at the operator's iterate.
pub fn model_value(ops: &GraphOperators, mode: HessianMode, s: &DVector<f64>) -> f64 {
    let g = ops.riemannian_gradient();
    let hs = match mode {
        HessianMode::GaussNewton => ops.rgn_hessian_vec(s),
        HessianMode::Exact => ops.riemannian_hessian_vec(s),
    };
    ops.cost() + s.dot(&g) + 0.5 * s.dot(&hs)
}

/// Per-iteration trace record; the CSV column set is the first six fields.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub delta: f64,
    pub rho: f64,
    pub accepted: bool,
    pub step_norm: f64,
    pub model_decrease: f64,
    pub cauchy_decrease: f64,
    pub tcg_termination: TcgTermination,
    pub tcg_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug)]
pub struct SolveResult {
    pub estimate: ProductPoint,
    pub trace: Vec<IterationRecord>,
    pub status: SolveStatus,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    pub outer_iterations: usize,
}

/// Mutable outer-loop state, advanced one trust-region step at a time.
pub struct SolverState {
    x: ProductPoint,
    delta: f64,
    k: usize,
    ops: GraphOperators,
    grad: DVector<f64>,
}

impl SolverState {
    pub fn new(graph: &PoseGraph, config: &SolverConfig, x0: ProductPoint) -> Result<Self> {
        config.validate()?;
        if x0.len() != graph.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.vertex_count(),
                found: x0.len(),
            });
        }
        let defect = x0.max_constraint_defect();
        if defect > crate::pudq::UNIT_TOL {
            return Err(Error::NonUnitPose { h: defect });
        }
        graph.check_anchored(&x0)?;
        let ops = build_ops(graph, x0.clone(), config);
        let grad = ops.riemannian_gradient();
        Ok(SolverState {
            x: x0,
            delta: config.delta0,
            k: 0,
            ops,
            grad,
        })
    }

    pub fn iterate(&self) -> &ProductPoint {
        &self.x
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.norm()
    }

    pub fn cost(&self) -> f64 {
        self.ops.cost()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

fn build_ops(graph: &PoseGraph, x: ProductPoint, config: &SolverConfig) -> GraphOperators {
    let ops = GraphOperators::new(graph, x, Some(graph.anchor()));
    match config.hessian {
        HessianMode::GaussNewton => ops,
        HessianMode::Exact => ops.with_tensors(),
    }
}

/// One trust-region iteration: solve the subproblem, compare model and
/// objective decrease, update the radius, accept or reject.
pub fn rtr_step(
    graph: &PoseGraph,
    config: &SolverConfig,
    state: &mut SolverState,
) -> Result<IterationRecord> {
    let grad_norm = state.grad.norm();
    let f_old = state.ops.cost();
    if !f_old.is_finite() {
        return Err(Error::NumericalFailure("objective is not finite".into()));
    }

    let apply = |v: &DVector<f64>| match config.hessian {
        HessianMode::GaussNewton => state.ops.rgn_hessian_vec(v),
        HessianMode::Exact => state.ops.riemannian_hessian_vec(v),
    };
    let max_inner = config
        .max_inner_iters
        .unwrap_or(150 * graph.vertex_count());
    let outcome = tcg_solve(
        &apply,
        &state.grad,
        state.delta,
        config.tcg_kappa,
        config.tcg_theta,
        max_inner,
    )?;
    if !(outcome.model_decrease > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "inner solver produced non-positive model decrease {}",
            outcome.model_decrease
        )));
    }
    let cauchy = cauchy_decrease(&apply, &state.grad, state.delta);

    let step = ProductTangent::from_dvector(outcome.step.clone());
    let x_new = state.x.exp(&step)?;
    let f_new = crate::objective::cost_at(graph, &x_new);
    if !f_new.is_finite() {
        return Err(Error::NumericalFailure("objective is not finite".into()));
    }

    let num = f_old - f_new;
    let den = outcome.model_decrease;
    let tiny = 1e-13 * (1.0 + f_old.abs());
    let rho = if num.abs() < tiny && den.abs() < tiny {
        // Both differences are at floating-point noise level; treat the model
        // as trusted, but never let an accepted step raise the cost.
        if f_new <= f_old {
            1.0
        } else {
            0.0
        }
    } else {
        num / den
    };

    let delta_next = if rho < 0.25 {
        0.25 * state.delta
    } else if rho > 0.75 && outcome.on_boundary() {
        (2.0 * state.delta).min(config.delta_max)
    } else {
        state.delta
    };

    let accepted = rho > config.rho_prime;
    let record = IterationRecord {
        k: state.k,
        cost: f_old,
        grad_norm,
        delta: state.delta,
        rho,
        accepted,
        step_norm: outcome.step.norm(),
        model_decrease: outcome.model_decrease,
        cauchy_decrease: cauchy,
        tcg_termination: outcome.termination,
        tcg_iterations: outcome.iterations,
    };

    state.delta = delta_next;
    state.k += 1;
    if accepted {
        state.x = x_new;
        state.ops = build_ops(graph, state.x.clone(), config);
        state.grad = state.ops.riemannian_gradient();
    }
    Ok(record)
}

/// Run the trust-region loop until the gradient norm falls below `eps_g` or
/// the iteration budget is exhausted. Returns the final iterate either way,
/// with the status saying which exit was taken.
pub fn solve(
    graph: &PoseGraph,
    config: &SolverConfig,
    x0: ProductPoint,
    mut progress: Option<&mut dyn FnMut(&IterationRecord)>,
) -> Result<SolveResult> {
    let mut state = SolverState::new(graph, config, x0)?;
    let mut trace = Vec::new();
    loop {
        if state.grad_norm() <= config.eps_g {
            return Ok(SolveResult {
                final_cost: state.cost(),
                final_grad_norm: state.grad_norm(),
                outer_iterations: state.k(),
                estimate: state.x,
                trace,
                status: SolveStatus::Converged,
            });
        }
        if state.k() >= config.max_outer_iters {
            return Ok(SolveResult {
                final_cost: state.cost(),
                final_grad_norm: state.grad_norm(),
                outer_iterations: state.k(),
                estimate: state.x,
                trace,
                status: SolveStatus::MaxIterations,
            });
        }
        let record = rtr_step(graph, config, &mut state)?;
        if let Some(cb) = progress.as_deref_mut() {
            cb(&record);
        }
        trace.push(record);
    }
}

/// Outcome of the iteration-bound diagnostic.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationBound {
    Bound(f64),
    Inapplicable { reason: String },
}

/// First-order worst-case iteration count for reaching
/// `||grad|| <= eps_g`, from the gradient Lipschitz constant and the
/// operator-norm bound of the model Hessian. Diagnostic only.
pub fn iteration_bound(
    f0: f64,
    fstar_lower: f64,
    config: &SolverConfig,
    l_g: f64,
    beta: f64,
) -> IterationBound {
    if fstar_lower < 0.0 {
        return IterationBound::Inapplicable {
            reason: "objective lower bound must be nonnegative".into(),
        };
    }
    if f0 < fstar_lower {
        return IterationBound::Inapplicable {
            reason: "initial cost below the stated lower bound".into(),
        };
    }
    if !(l_g > 0.0 && beta > 0.0) {
        return IterationBound::Inapplicable {
            reason: "constants must be positive".into(),
        };
    }
    let lambda_g = 0.25 * (1.0 / beta).min(1.0 / (2.0 * (l_g + beta)));
    if config.eps_g > config.delta0 / lambda_g {
        return IterationBound::Inapplicable {
            reason: "eps_g exceeds delta0 / lambda_g".into(),
        };
    }
    let first = (f0 - fstar_lower) / (config.rho_prime * lambda_g) * 3.0
        / (config.eps_g * config.eps_g);
    let second = 0.5 * (config.delta0 / (lambda_g * config.eps_g)).log2();
    IterationBound::Bound(first + second)
}

/// Compute `lambda_g` as used by [`iteration_bound`].
pub fn lambda_g(l_g: f64, beta: f64) -> f64 {
    0.25 * (1.0 / beta).min(1.0 / (2.0 * (l_g + beta)))
}
