//! Synthetic benchmark graphs: an axis-aligned grid random walk for the
//! ground truth, Wishart-randomized anisotropic edge covariances, and
//! measurement corruption through the tangent-space noise model.
//!
//! Every operation is a pure function of the configuration and seed. The
//! generator is a counter-based stream cipher; each consumer (trajectory,
//! edge selection, covariance scale, per-edge draws) gets its own stream so
//! datasets are reproducible across platforms and independent of edge count.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovFrame, TangentCovariance};
use crate::error::{Error, Result};
use crate::graph::{Edge, PoseGraph};
use crate::manifold::exp_identity;
use crate::pudq::{from_euclidean, EuclideanPose, Pudq};

const STREAM_TRAJECTORY: u64 = 0;
const STREAM_EDGES: u64 = 1;
const STREAM_SCALE: u64 = 2;
const STREAM_WISHART_BASE: u64 = 1 << 32;
const STREAM_NOISE_BASE: u64 = 1 << 33;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_vertices: usize,
    pub grid_step: f64,
    pub loop_closure_prob: f64,
    pub loop_closure_radius: f64,
    /// Wishart scale multiplier.
    pub sigma_w: f64,
    pub wishart_dof: usize,
    pub rng_seed: u64,
}

impl SynthConfig {
    pub fn new(n_vertices: usize, sigma_w: f64, rng_seed: u64) -> Self {
        SynthConfig {
            n_vertices,
            grid_step: 1.0,
            loop_closure_prob: 0.03,
            loop_closure_radius: 2.0,
            sigma_w,
            wishart_dof: 10,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vertices < 2 {
            return Err(Error::InvalidConfig("need at least 2 vertices".into()));
        }
        if !(0.0..=1.0).contains(&self.loop_closure_prob) {
            return Err(Error::InvalidConfig(
                "loop closure probability must lie in [0, 1]".into(),
            ));
        }
        if !(self.sigma_w > 0.0) {
            return Err(Error::InvalidConfig("sigma_w must be positive".into()));
        }
        if self.wishart_dof < 3 {
            return Err(Error::InvalidConfig(
                "wishart dof must be at least the dimension 3".into(),
            ));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::InvalidConfig("grid step must be positive".into()));
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Ground-truth trajectory: an axis-aligned random walk with unit steps of
/// `grid_step` and turns in {0, +-pi/2}. Deterministic given the seed.
pub fn synth_grid_trajectory(config: &SynthConfig) -> Result<Vec<Pudq>> {
    config.validate()?;
    let mut rng = stream_rng(config.rng_seed, STREAM_TRAJECTORY);
    let mut heading: i32 = 0; // quarter turns
    let mut pos = (0.0f64, 0.0f64);
    let mut poses = Vec::with_capacity(config.n_vertices);
    poses.push(from_euclidean(&EuclideanPose::new(0.0, 0.0, 0.0)));
    for _ in 1..config.n_vertices {
        let u: f64 = rng.gen();
        // Mostly straight, matching grid-world trajectories.
        heading += if u < 0.6 {
            0
        } else if u < 0.8 {
            1
        } else {
            -1
        };
        let theta = f64::from(heading) * std::f64::consts::FRAC_PI_2;
        pos.0 += config.grid_step * theta.cos();
        pos.1 += config.grid_step * theta.sin();
        poses.push(from_euclidean(&EuclideanPose::new(pos.0, pos.1, theta)));
    }
    Ok(poses)
}

/// Edge selection: every consecutive pair, plus loop closures drawn with
/// probability `loop_closure_prob` among non-consecutive pairs within
/// `loop_closure_radius` of each other.
pub fn select_edges(trajectory: &[Pudq], config: &SynthConfig) -> Vec<(usize, usize)> {
    let mut rng = stream_rng(config.rng_seed, STREAM_EDGES);
    let positions: Vec<(f64, f64)> = trajectory
        .iter()
        .map(|p| {
            let e = crate::pudq::to_euclidean(p);
            (e.tx, e.ty)
        })
        .collect();
    let n = trajectory.len();
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let r2 = config.loop_closure_radius * config.loop_closure_radius;
    for i in 0..n {
        for j in (i + 2)..n {
            let dx = positions[j].0 - positions[i].0;
            let dy = positions[j].1 - positions[i].1;
            if dx * dx + dy * dy <= r2 && rng.gen::<f64>() < config.loop_closure_prob {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// One Wishart draw: the sum of `dof` outer products of Gaussian vectors
/// with covariance `scale`.
pub fn wishart_draw<R: Rng>(scale: &Matrix3<f64>, dof: usize, rng: &mut R) -> Result<Matrix3<f64>> {
    let chol = nalgebra::Cholesky::new(*scale).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut acc = Matrix3::zeros();
    for _ in 0..dof {
        let z = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let y = l * z;
        acc += y * y.transpose();
    }
    Ok(acc)
}

/// Base scale matrix: all-ones plus a uniformly drawn positive diagonal.
pub fn sample_scale_matrix<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let mut m = Matrix3::from_element(1.0);
    for k in 0..3 {
        // Uniform on (0, 1].
        m[(k, k)] += 1.0 - rng.gen::<f64>();
    }
    m
}

/// Draw the base scale and one covariance from its Wishart distribution.
pub fn sample_wishart_covariance(sigma_w: f64, seed: u64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let mut rng = stream_rng(seed, STREAM_SCALE);
    let sigma_scale = sample_scale_matrix(&mut rng);
    let cov = wishart_draw(&(sigma_w * sigma_scale), 10, &mut rng)?;
    Ok((sigma_scale, cov))
}

/// Corrupt true relative poses through the tangent-space noise model:
/// `z = x_i^{-1} ⊞ x_j ⊞ Exp_1(eta)` with `eta ~ N(0, Sigma)` drawn from a
/// per-edge stream. The stored information matrix is the exact inverse of
/// the sampled covariance, in the tangent frame.
pub fn corrupt_edges(
    ground_truth: &[Pudq],
    edges: &[(usize, usize)],
    covariances: &[Matrix3<f64>],
    seed: u64,
) -> Result<PoseGraph> {
    if edges.len() != covariances.len() {
        return Err(Error::DimensionMismatch {
            expected: edges.len(),
            found: covariances.len(),
        });
    }
    let mut out = Vec::with_capacity(edges.len());
    for (k, (&(i, j), sigma)) in edges.iter().zip(covariances.iter()).enumerate() {
        let chol = nalgebra::Cholesky::new(*sigma).ok_or(Error::EdgeInformationNotSpd { i, j })?;
        let mut rng = stream_rng(seed, STREAM_NOISE_BASE + k as u64);
        let z = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let eta = chol.l() * z;
        let true_rel = ground_truth[i].inverse().compose(&ground_truth[j]);
        let measurement = true_rel.compose(&exp_identity(&eta));
        let raw = chol.inverse();
        let omega = 0.5 * (raw + raw.transpose());
        let information = TangentCovariance::new(omega, CovFrame::PudqTangent)
            .map_err(|_| Error::EdgeInformationNotSpd { i, j })?;
        out.push(Edge {
            from: i,
            to: j,
            measurement,
            information,
        });
    }
    PoseGraph::new(ground_truth.to_vec(), out, 0)
}

/// A synthesized trial: ground truth, the corrupted graph, and the exact
/// configuration that produced it.
#[derive(Clone, Debug)]
pub struct TrialDataset {
    pub ground_truth: Vec<Pudq>,
    pub graph: PoseGraph,
    pub config: SynthConfig,
}

/// Full pipeline: trajectory, edge selection, one base scale for the trial,
/// per-edge Wishart covariances, and corrupted measurements.
pub fn synth_dataset(config: &SynthConfig) -> Result<TrialDataset> {
    config.validate()?;
    let ground_truth = synth_grid_trajectory(config)?;
    let edges = select_edges(&ground_truth, config);
    let sigma_scale = sample_scale_matrix(&mut stream_rng(config.rng_seed, STREAM_SCALE));
    let scale = config.sigma_w * sigma_scale;
    let mut covariances = Vec::with_capacity(edges.len());
    for k in 0..edges.len() {
        let mut rng = stream_rng(config.rng_seed, STREAM_WISHART_BASE + k as u64);
        covariances.push(wishart_draw(&scale, config.wishart_dof, &mut rng)?);
    }
    let graph = corrupt_edges(&ground_truth, &edges, &covariances, config.rng_seed)?;
    Ok(TrialDataset {
        ground_truth,
        graph,
        config: *config,
    })
}
