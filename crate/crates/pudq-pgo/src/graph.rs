//! Pose graph container: vertices, measured edges with information matrices,
//! and the anchored vertex that pins the global gauge.

use serde::{Deserialize, Serialize};

use crate::covariance::{CovFrame, TangentCovariance};
use crate::error::{Error, Result};
use crate::manifold::ProductPoint;
use crate::pudq::Pudq;

/// A directed relative-pose measurement between two vertices. The
/// information matrix is stored in the group tangent frame; other frames must
/// be converted at the loading boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub measurement: Pudq,
    pub information: TangentCovariance,
}

#[derive(Clone, Debug)]
pub struct PoseGraph {
    vertices: Vec<Pudq>,
    edges: Vec<Edge>,
    anchor: usize,
}

impl PoseGraph {
    /// Build and validate a graph. Requires a valid anchor id, edge indices
    /// in range, information matrices tagged with the tangent frame, and an
    /// odometry chain connecting every pair of consecutive vertices (in
    /// either direction).
    pub fn new(vertices: Vec<Pudq>, edges: Vec<Edge>, anchor: usize) -> Result<Self> {
        let g = PoseGraph {
            vertices,
            edges,
            anchor,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.anchor >= n {
            return Err(Error::InvalidAnchor {
                anchor: self.anchor,
                n,
            });
        }
        let mut consecutive = vec![false; n.saturating_sub(1)];
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidAnchor {
                    anchor: e.from.max(e.to),
                    n,
                });
            }
            e.information.expect_frame(CovFrame::PudqTangent)?;
            let (lo, hi) = (e.from.min(e.to), e.from.max(e.to));
            if hi - lo == 1 {
                consecutive[lo] = true;
            }
        }
        if let Some(missing) = consecutive.iter().position(|&p| !p) {
            return Err(Error::MissingOdometryEdge { from: missing });
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn vertices(&self) -> &[Pudq] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }

    /// Look up the edge `(i, j)` by its directed endpoints.
    pub fn find_edge(&self, i: usize, j: usize) -> Result<&Edge> {
        self.edges
            .iter()
            .find(|e| e.from == i && e.to == j)
            .ok_or(Error::UnknownEdge { i, j })
    }

    /// Current vertex estimates as a product-manifold point.
    pub fn product_point(&self) -> ProductPoint {
        ProductPoint::new(self.vertices.clone())
    }

    /// Replace the vertex estimates.
    pub fn set_vertices(&mut self, x: &ProductPoint) -> Result<()> {
        if x.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                found: x.len(),
            });
        }
        self.vertices = x.poses().to_vec();
        Ok(())
    }

    /// Check that the anchored vertex of `x` is exactly the identity.
    pub fn check_anchored(&self, x: &ProductPoint) -> Result<()> {
        let a = x.pose(self.anchor);
        if (a.as_vector() - Pudq::identity().as_vector()).norm() > 1e-12 {
            return Err(Error::AnchorNotIdentity {
                anchor: self.anchor,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn unit_info() -> TangentCovariance {
        TangentCovariance::new(Matrix3::identity(), CovFrame::PudqTangent).unwrap()
    }

    #[test]
    fn odometry_chain_must_be_complete() {
        let vertices = vec![Pudq::identity(); 3];
        let edges = vec![Edge {
            from: 0,
            to: 1,
            measurement: Pudq::identity(),
            information: unit_info(),
        }];
        let err = PoseGraph::new(vertices, edges, 0).unwrap_err();
        assert!(matches!(err, Error::MissingOdometryEdge { from: 1 }));
    }

    #[test]
    fn wrong_frame_is_rejected() {
        let info = TangentCovariance::new(Matrix3::identity(), CovFrame::Euclidean).unwrap();
        let vertices = vec![Pudq::identity(); 2];
        let edges = vec![Edge {
            from: 0,
            to: 1,
            measurement: Pudq::identity(),
            information: info,
        }];
        assert!(matches!(
            PoseGraph::new(vertices, edges, 0),
            Err(Error::FrameMismatch { .. })
        ));
    }

    #[test]
    fn find_edge_reports_unknown() {
        let vertices = vec![Pudq::identity(); 2];
        let edges = vec![Edge {
            from: 0,
            to: 1,
            measurement: Pudq::identity(),
            information: unit_info(),
        }];
        let g = PoseGraph::new(vertices, edges, 0).unwrap();
        assert!(g.find_edge(0, 1).is_ok());
        assert!(matches!(
            g.find_edge(1, 0),
            Err(Error::UnknownEdge { i: 1, j: 0 })
        ));
    }
}
