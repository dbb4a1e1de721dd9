//! Graph file I/O: the two-line-type g2o text format and a lossless native
//! JSON format carrying ground truth, tangent-frame information matrices,
//! and a provenance block.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovFrame, TangentCovariance};
use crate::error::{Error, Result};
use crate::graph::{Edge, PoseGraph};
use crate::pudq::{from_euclidean, to_euclidean, EuclideanPose, Pudq};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    G2oSe2,
    ExtendedJson,
}

impl GraphFormat {
    /// Infer the format from a path extension: `.g2o` or `.json`.
    pub fn from_path(path: &Path) -> Result<GraphFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("g2o") => Ok(GraphFormat::G2oSe2),
            Some("json") => Ok(GraphFormat::ExtendedJson),
            other => Err(Error::InvalidConfig(format!(
                "cannot infer graph format from extension {other:?}"
            ))),
        }
    }
}

/// A loaded graph plus whatever the file carried alongside it.
#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: PoseGraph,
    pub ground_truth: Option<Vec<Pudq>>,
    /// Number of unrecognized g2o record tags that were skipped.
    pub skipped_records: usize,
}

/// Load a graph. For g2o input, `info_frame` states which frame the file's
/// information matrices are expressed in; they are converted to the tangent
/// frame on the way in (the Euclidean frame uses each measurement's own
/// rotation angle). The flag is ignored for the native format, which always
/// stores tangent-frame matrices.
pub fn load_graph(path: &Path, format: GraphFormat, info_frame: CovFrame) -> Result<LoadedGraph> {
    match format {
        GraphFormat::G2oSe2 => load_g2o(path, info_frame),
        GraphFormat::ExtendedJson => load_extended_json(path),
    }
}

/// Save a graph (optionally with ground truth, native format only).
pub fn save_graph(
    graph: &PoseGraph,
    ground_truth: Option<&[Pudq]>,
    path: &Path,
    format: GraphFormat,
) -> Result<()> {
    match format {
        GraphFormat::G2oSe2 => save_g2o(graph, path),
        GraphFormat::ExtendedJson => save_extended_json(graph, ground_truth, None, path),
    }
}

fn parse_fields(line: &str, lineno: usize, expect: usize, tag: &str) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split_whitespace().skip(1).collect();
    if fields.len() != expect {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("{tag} expects {expect} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad number {f:?}: {e}"),
            })
        })
        .collect()
}

fn load_g2o(path: &Path, info_frame: CovFrame) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path)?;
    let mut vertices: BTreeMap<i64, Pudq> = BTreeMap::new();
    let mut raw_edges = Vec::new();
    let mut skipped = 0usize;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tag = line.split_whitespace().next().unwrap_or("");
        match tag {
            "VERTEX_SE2" => {
                let v = parse_fields(line, lineno, 4, "VERTEX_SE2")?;
                let id = v[0] as i64;
                vertices.insert(id, from_euclidean(&EuclideanPose::new(v[1], v[2], v[3])));
            }
            "EDGE_SE2" => {
                let v = parse_fields(line, lineno, 11, "EDGE_SE2")?;
                raw_edges.push((lineno, v));
            }
            _ => skipped += 1,
        }
    }

    // Remap arbitrary vertex ids onto dense indices in ascending id order.
    let index: BTreeMap<i64, usize> = vertices
        .keys()
        .enumerate()
        .map(|(n, &id)| (id, n))
        .collect();
    let poses: Vec<Pudq> = vertices.values().copied().collect();

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (lineno, v) in raw_edges {
        let from = *index.get(&(v[0] as i64)).ok_or(Error::Parse {
            line: lineno,
            msg: format!("edge references unknown vertex {}", v[0]),
        })?;
        let to = *index.get(&(v[1] as i64)).ok_or(Error::Parse {
            line: lineno,
            msg: format!("edge references unknown vertex {}", v[1]),
        })?;
        let rel = EuclideanPose::new(v[2], v[3], v[4]);
        let measurement = from_euclidean(&rel);
        // Upper-triangular entries I11 I12 I13 I22 I23 I33.
        #[rustfmt::skip]
        let raw = Matrix3::new(
            v[5], v[6], v[7],
            v[6], v[8], v[9],
            v[7], v[9], v[10],
        );
        let tagged = TangentCovariance::new(raw, info_frame)
            .map_err(|_| Error::EdgeInformationNotSpd { i: from, j: to })?;
        let theta = match info_frame {
            CovFrame::Euclidean => Some(rel.theta),
            _ => None,
        };
        let information = tagged
            .transform_information(CovFrame::PudqTangent, theta)
            .map_err(|_| Error::EdgeInformationNotSpd { i: from, j: to })?;
        edges.push(Edge {
            from,
            to,
            measurement,
            information,
        });
    }

    let graph = PoseGraph::new(poses, edges, 0)?;
    Ok(LoadedGraph {
        graph,
        ground_truth: None,
        skipped_records: skipped,
    })
}

fn save_g2o(graph: &PoseGraph, path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (i, v) in graph.vertices().iter().enumerate() {
        let p = to_euclidean(v);
        writeln!(out, "VERTEX_SE2 {i} {} {} {}", p.tx, p.ty, p.theta).unwrap();
    }
    for e in graph.edges() {
        let rel = to_euclidean(&e.measurement);
        // The wild g2o convention stores Euclidean-frame information.
        let om = e
            .information
            .transform_information(CovFrame::Euclidean, Some(rel.theta))?;
        let m = om.matrix();
        writeln!(
            out,
            "EDGE_SE2 {} {} {} {} {} {} {} {} {} {} {}",
            e.from,
            e.to,
            rel.tx,
            rel.ty,
            rel.theta,
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 2)],
        )
        .unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    from: usize,
    to: usize,
    measurement: [f64; 4],
    information: [[f64; 3]; 3],
}

#[derive(Serialize, Deserialize)]
struct ExtendedJsonFile {
    version: u32,
    anchor: usize,
    vertices: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<[f64; 4]>>,
    edges: Vec<JsonEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

fn pose_to_array(p: &Pudq) -> [f64; 4] {
    let v = p.as_vector();
    [v[0], v[1], v[2], v[3]]
}

fn pose_from_array(a: &[f64; 4]) -> Pudq {
    Pudq::new(a[0], a[1], a[2], a[3])
}

fn load_extended_json(path: &Path) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path)?;
    let file: ExtendedJsonFile = serde_json::from_str(&text)?;
    if file.version != 1 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("unsupported file version {}", file.version),
        });
    }
    let vertices: Vec<Pudq> = file.vertices.iter().map(pose_from_array).collect();
    let mut edges = Vec::with_capacity(file.edges.len());
    for je in &file.edges {
        let m = Matrix3::from_fn(|r, c| je.information[r][c]);
        let information = TangentCovariance::new(m, CovFrame::PudqTangent)
            .map_err(|_| Error::EdgeInformationNotSpd {
                i: je.from,
                j: je.to,
            })?;
        edges.push(Edge {
            from: je.from,
            to: je.to,
            measurement: pose_from_array(&je.measurement),
            information,
        });
    }
    let graph = PoseGraph::new(vertices, edges, file.anchor)?;
    Ok(LoadedGraph {
        graph,
        ground_truth: file
            .ground_truth
            .map(|gt| gt.iter().map(pose_from_array).collect()),
        skipped_records: 0,
    })
}

/// Save the native format, optionally with ground truth and a provenance
/// block.
pub fn save_extended_json(
    graph: &PoseGraph,
    ground_truth: Option<&[Pudq]>,
    provenance: Option<serde_json::Value>,
    path: &Path,
) -> Result<()> {
    let file = ExtendedJsonFile {
        version: 1,
        anchor: graph.anchor(),
        vertices: graph.vertices().iter().map(pose_to_array).collect(),
        ground_truth: ground_truth.map(|gt| gt.iter().map(pose_to_array).collect()),
        edges: graph
            .edges()
            .iter()
            .map(|e| {
                let m = e.information.matrix();
                JsonEdge {
                    from: e.from,
                    to: e.to,
                    measurement: pose_to_array(&e.measurement),
                    information: [
                        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
                    ],
                }
            })
            .collect(),
        provenance,
    };
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct EstimateFile {
    version: u32,
    poses: Vec<[f64; 4]>,
}

/// Save a bare pose estimate (no edges).
pub fn save_estimate(poses: &[Pudq], path: &Path) -> Result<()> {
    let file = EstimateFile {
        version: 1,
        poses: poses.iter().map(pose_to_array).collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Load a pose estimate saved by [`save_estimate`]; also accepts the native
/// graph format, in which case the stored vertices are the estimate.
pub fn load_estimate(path: &Path) -> Result<Vec<Pudq>> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(file) = serde_json::from_str::<EstimateFile>(&text) {
        if file.version != 1 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unsupported estimate version {}", file.version),
            });
        }
        return Ok(file.poses.iter().map(pose_from_array).collect());
    }
    let graph: ExtendedJsonFile = serde_json::from_str(&text)?;
    if graph.version != 1 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("unsupported file version {}", graph.version),
        });
    }
    Ok(graph.vertices.iter().map(pose_from_array).collect())
}
