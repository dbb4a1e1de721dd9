//! Initial estimates: chaining the odometry edges, and the chordal
//! relaxation (linear rotation estimate with the unit constraint relaxed and
//! restored by normalization, followed by linear translation recovery).

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::graph::PoseGraph;
use crate::manifold::ProductPoint;
use crate::pudq::{from_euclidean, to_euclidean, EuclideanPose, Pudq};

/// Chain consecutive edges from vertex 0, then left-translate so the
/// anchored vertex is exactly the identity. Accumulated poses are
/// renormalized every 100 compositions to control constraint drift.
pub fn init_odometry(graph: &PoseGraph) -> Result<ProductPoint> {
    let n = graph.vertex_count();
    let mut poses = Vec::with_capacity(n);
    poses.push(Pudq::identity());
    for i in 0..n - 1 {
        let step = if let Ok(e) = graph.find_edge(i, i + 1) {
            e.measurement
        } else if let Ok(e) = graph.find_edge(i + 1, i) {
            e.measurement.inverse()
        } else {
            return Err(Error::MissingOdometryEdge { from: i });
        };
        let mut next = poses[i].compose(&step);
        if (i + 1) % 100 == 0 {
            next = next.renormalized();
        }
        poses.push(next);
    }
    Ok(gauge_fix(poses, graph.anchor()))
}

/// Left-translate all poses so `poses[anchor]` becomes the identity; relative
/// poses are untouched.
fn gauge_fix(poses: Vec<Pudq>, anchor: usize) -> ProductPoint {
    let shift = poses[anchor].inverse();
    ProductPoint::new(
        poses
            .iter()
            .map(|p| shift.compose(p).renormalized())
            .collect(),
    )
}

/// Chordal initialization. Falls back to odometry when a normal-equation
/// solve is singular; the boolean reports whether that happened.
pub fn init_chordal_detailed(graph: &PoseGraph) -> Result<(ProductPoint, bool)> {
    match chordal_inner(graph) {
        Some(x) => Ok((x, false)),
        None => Ok((init_odometry(graph)?, true)),
    }
}

/// Chordal initialization with silent odometry fallback.
pub fn init_chordal(graph: &PoseGraph) -> Result<ProductPoint> {
    Ok(init_chordal_detailed(graph)?.0)
}

fn rot2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn chordal_inner(graph: &PoseGraph) -> Option<ProductPoint> {
    let n = graph.vertex_count();
    let anchor = graph.anchor();
    if n == 1 {
        return Some(ProductPoint::identity(1));
    }
    // Unknowns: one 2-vector per non-anchor vertex; the anchor rotation is
    // pinned to (1, 0). Map vertex -> column block.
    let col: Vec<Option<usize>> = {
        let mut c = Vec::with_capacity(n);
        let mut next = 0;
        for i in 0..n {
            if i == anchor {
                c.push(None);
            } else {
                c.push(Some(next));
                next += 1;
            }
        }
        c
    };
    let dim = 2 * (n - 1);
    let anchor_rot = Vector2::new(1.0, 0.0);

    // Stage 1: rotations. Each edge contributes || r_j - R(theta_ij) r_i ||^2.
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let add_block = |h: &mut DMatrix<f64>, r: usize, c: usize, m: &Matrix2<f64>| {
        for a in 0..2 {
            for bb in 0..2 {
                h[(r + a, c + bb)] += m[(a, bb)];
            }
        }
    };
    for e in graph.edges() {
        let theta = to_euclidean(&e.measurement).theta;
        let r = rot2(theta);
        match (col[e.from], col[e.to]) {
            (Some(ci), Some(cj)) => {
                add_block(&mut h, 2 * cj, 2 * cj, &Matrix2::identity());
                add_block(&mut h, 2 * ci, 2 * ci, &(r.transpose() * r));
                let neg = -r;
                add_block(&mut h, 2 * cj, 2 * ci, &neg);
                add_block(&mut h, 2 * ci, 2 * cj, &neg.transpose());
            }
            (None, Some(cj)) => {
                add_block(&mut h, 2 * cj, 2 * cj, &Matrix2::identity());
                let rhs = r * anchor_rot;
                b[2 * cj] += rhs[0];
                b[2 * cj + 1] += rhs[1];
            }
            (Some(ci), None) => {
                add_block(&mut h, 2 * ci, 2 * ci, &(r.transpose() * r));
                let rhs = r.transpose() * anchor_rot;
                b[2 * ci] += rhs[0];
                b[2 * ci + 1] += rhs[1];
            }
            (None, None) => {}
        }
    }
    let chol = h.cholesky()?;
    let rot_sol = chol.solve(&b);

    let mut thetas = vec![0.0f64; n];
    for i in 0..n {
        if let Some(c) = col[i] {
            let v = Vector2::new(rot_sol[2 * c], rot_sol[2 * c + 1]);
            if v.norm() < 1e-12 {
                return None;
            }
            thetas[i] = v[1].atan2(v[0]);
        }
    }

    // Stage 2: translations given rotations. Each edge contributes
    // || t_j - t_i - R(theta_i) t_ij ||^2 with the anchor pinned at zero.
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    for e in graph.edges() {
        let rel = to_euclidean(&e.measurement);
        let d = rot2(thetas[e.from]) * Vector2::new(rel.tx, rel.ty);
        match (col[e.from], col[e.to]) {
            (Some(ci), Some(cj)) => {
                add_block(&mut h, 2 * cj, 2 * cj, &Matrix2::identity());
                add_block(&mut h, 2 * ci, 2 * ci, &Matrix2::identity());
                let neg = -Matrix2::identity();
                add_block(&mut h, 2 * cj, 2 * ci, &neg);
                add_block(&mut h, 2 * ci, 2 * cj, &neg);
                b[2 * cj] += d[0];
                b[2 * cj + 1] += d[1];
                b[2 * ci] -= d[0];
                b[2 * ci + 1] -= d[1];
            }
            (None, Some(cj)) => {
                add_block(&mut h, 2 * cj, 2 * cj, &Matrix2::identity());
                b[2 * cj] += d[0];
                b[2 * cj + 1] += d[1];
            }
            (Some(ci), None) => {
                add_block(&mut h, 2 * ci, 2 * ci, &Matrix2::identity());
                b[2 * ci] -= d[0];
                b[2 * ci + 1] -= d[1];
            }
            (None, None) => {}
        }
    }
    let chol = h.cholesky()?;
    let t_sol = chol.solve(&b);

    let mut poses = Vec::with_capacity(n);
    for i in 0..n {
        let (tx, ty) = match col[i] {
            Some(c) => (t_sol[2 * c], t_sol[2 * c + 1]),
            None => (0.0, 0.0),
        };
        poses.push(from_euclidean(&EuclideanPose::new(tx, ty, thetas[i])));
    }
    Some(ProductPoint::new(poses))
}
