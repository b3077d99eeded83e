//! The edge-count pseudometric between configurations.

use thiserror::Error;

use super::config::{Configuration, NodeId};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DistanceError {
    #[error("configurations have different node sets ({0} vs {1} nodes)")]
    NodeSetMismatch(usize, usize),
    #[error("configurations disagree on the label of node {0}")]
    LabelMismatch(NodeId),
}

fn check_matched(g: &Configuration, h: &Configuration) -> Result<(), DistanceError> {
    if g.num_nodes() != h.num_nodes() {
        return Err(DistanceError::NodeSetMismatch(g.num_nodes(), h.num_nodes()));
    }
    match g.labels().iter().zip(h.labels()).position(|(a, b)| a != b) {
        Some(v) => Err(DistanceError::LabelMismatch(v as NodeId)),
        None => Ok(()),
    }
}

/// Size of the symmetric difference of the edge sets, or 0 when the node
/// sets or labellings differ.
pub fn distance(g: &Configuration, h: &Configuration) -> usize {
    distance_strict(g, h).unwrap_or(0)
}

/// Like [`distance`] but reports mismatched configurations as errors.
pub fn distance_strict(g: &Configuration, h: &Configuration) -> Result<usize, DistanceError> {
    check_matched(g, h)?;
    Ok(g.edges().symmetric_difference(h.edges()).count())
}

/// Number of symmetric-difference edges incident to `node`.
pub fn node_distance(node: NodeId, g: &Configuration, h: &Configuration) -> Result<usize, DistanceError> {
    check_matched(g, h)?;
    Ok(g.edges()
        .symmetric_difference(h.edges())
        .filter(|e| e.touches(node))
        .count())
}
