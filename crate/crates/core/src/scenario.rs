//! Serializable descriptions of repeater chains.
//!
//! A chain is an ordered list of two-qubit segment sources with a node
//! measurement between every adjacent pair. Exactly one segment is the
//! noisy link; the rest are the free resources the protocol spends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::states;

// ---------------------------------------------------------------------------
// Segment and node specifications
// ---------------------------------------------------------------------------

/// How one two-qubit segment is prepared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentSpec {
    /// Mixture of |01><01| (weight p) with the pure pair
    /// sqrt(delta)|00> + sqrt(1-delta)|11>.
    Family { p: f64, delta: f64 },
    /// Pure pair sqrt(alpha)|00> + sqrt(1-alpha)|11>.
    Nmes { alpha: f64 },
    /// Werner state with the given singlet fidelity.
    Werner {
        #[serde(rename = "F")]
        fidelity: f64,
    },
    /// Pure pair mixed with white noise: (1-q) nmes(alpha) + q I/4.
    WhiteMix { alpha: f64, q: f64 },
    /// Pure pair mixed with vacuum: (1-q) nmes(alpha) + q |00><00|.
    LossMix { alpha: f64, q: f64 },
}

impl SegmentSpec {
    /// Materialize the two-qubit density matrix this spec describes.
    pub fn build(&self) -> Result<DensityMatrix> {
        match self {
            SegmentSpec::Family { p, delta } => states::family_state(*p, *delta),
            SegmentSpec::Nmes { alpha } => states::nmes(*alpha),
            SegmentSpec::Werner { fidelity } => states::werner(*fidelity),
            SegmentSpec::WhiteMix { alpha, q } => {
                states::white_noise_mix(&states::nmes(*alpha)?, *q)
            }
            SegmentSpec::LossMix { alpha, q } => {
                states::photon_loss_mix(&states::nmes(*alpha)?, *q)
            }
        }
    }

    /// Schmidt weight when the segment is a pure non-maximal pair.
    pub fn pure_alpha(&self) -> Option<f64> {
        match self {
            SegmentSpec::Nmes { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

/// How one node measures its two qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeSpec {
    /// Projective measurement in the tilted entangled basis with weight beta.
    Pvm { beta: f64 },
    /// Bell measurement whose classical bits each flip with probability eta.
    NoisyBell { eta: f64 },
}

impl NodeSpec {
    /// True for a projective measurement in the exact Bell basis.
    pub fn is_bell(&self) -> bool {
        matches!(self, NodeSpec::Pvm { beta } if *beta == 0.5)
    }
}

// ---------------------------------------------------------------------------
// Chain scenario
// ---------------------------------------------------------------------------

/// An end-to-end chain: segments in order, one measurement per node,
/// and the (1-based) position of the noisy segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainScenario {
    pub segments: Vec<SegmentSpec>,
    pub nodes: Vec<NodeSpec>,
    pub noisy_index: usize,
}

impl ChainScenario {
    /// Convenience constructor for the common shape: pure pairs everywhere
    /// except one noisy link, Bell measurements at every node.
    pub fn uniform(
        free_alphas_left: &[f64],
        p: f64,
        delta: f64,
        free_alphas_right: &[f64],
    ) -> Self {
        let mut segments: Vec<SegmentSpec> = free_alphas_left
            .iter()
            .map(|&alpha| SegmentSpec::Nmes { alpha })
            .collect();
        segments.push(SegmentSpec::Family { p, delta });
        segments.extend(
            free_alphas_right
                .iter()
                .map(|&alpha| SegmentSpec::Nmes { alpha }),
        );
        let nodes = vec![NodeSpec::Pvm { beta: 0.5 }; segments.len().saturating_sub(1)];
        ChainScenario {
            segments,
            nodes,
            noisy_index: free_alphas_left.len() + 1,
        }
    }

    /// Structural checks: node count, noisy index in range and pointing at
    /// the unique noisy (non-pure-pair) segment.
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidScenario("chain has no segments".into()));
        }
        if self.nodes.len() + 1 != self.segments.len() {
            return Err(Error::InvalidScenario(format!(
                "{} segments need {} nodes, got {}",
                self.segments.len(),
                self.segments.len() - 1,
                self.nodes.len()
            )));
        }
        if self.noisy_index == 0 || self.noisy_index > self.segments.len() {
            return Err(Error::InvalidScenario(format!(
                "noisy_index {} outside 1..={}",
                self.noisy_index,
                self.segments.len()
            )));
        }
        if self.segments[self.noisy_index - 1].pure_alpha().is_some() {
            return Err(Error::InvalidScenario(
                "noisy_index points at a pure free segment".into(),
            ));
        }
        Ok(())
    }

    /// The noisy link's (p, delta), required to be a `Family` segment.
    pub fn noisy_family_params(&self) -> Result<(f64, f64)> {
        match &self.segments[self.noisy_index - 1] {
            SegmentSpec::Family { p, delta } => Ok((*p, *delta)),
            other => Err(Error::InvalidScenario(format!(
                "noisy segment is {other:?}, not a product-plus-entangled mixture"
            ))),
        }
    }

    /// Schmidt weights of the free segments to the left and right of the
    /// noisy link. Errors if any free segment is not a pure pair.
    pub fn split_free_alphas(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (pos, seg) in self.segments.iter().enumerate() {
            let index = pos + 1;
            if index == self.noisy_index {
                continue;
            }
            match seg.pure_alpha() {
                Some(alpha) => {
                    if index < self.noisy_index {
                        left.push(alpha);
                    } else {
                        right.push(alpha);
                    }
                }
                None => {
                    return Err(Error::InvalidScenario(format!(
                        "free segment {index} is not a pure pair"
                    )))
                }
            }
        }
        Ok((left, right))
    }

    /// Chain reductions assume ideal Bell measurements at every node.
    pub fn require_bell_nodes(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.is_bell() {
                return Err(Error::InvalidScenario(format!(
                    "node {} is {node:?}; reduction requires a Bell measurement (beta = 1/2)",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_constructor_places_noisy_link() {
        let sc = ChainScenario::uniform(&[0.75, 0.8], 0.4, 0.6, &[0.7]);
        assert_eq!(sc.segments.len(), 4);
        assert_eq!(sc.nodes.len(), 3);
        assert_eq!(sc.noisy_index, 3);
        sc.validate().unwrap();
        assert_eq!(sc.noisy_family_params().unwrap(), (0.4, 0.6));
        let (l, r) = sc.split_free_alphas().unwrap();
        assert_eq!(l, vec![0.75, 0.8]);
        assert_eq!(r, vec![0.7]);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let mut sc = ChainScenario::uniform(&[0.75], 0.4, 0.6, &[]);
        sc.nodes.pop();
        assert!(sc.validate().is_err());

        let mut sc = ChainScenario::uniform(&[0.75], 0.4, 0.6, &[]);
        sc.noisy_index = 1;
        assert!(sc.validate().is_err());

        let sc = ChainScenario::uniform(&[], 0.4, 0.6, &[]);
        sc.validate().unwrap();
    }

    #[test]
    fn segment_specs_build_and_round_trip_serde() {
        let spec = SegmentSpec::WhiteMix {
            alpha: 0.75,
            q: 0.05,
        };
        let rho = spec.build().unwrap();
        assert_eq!(rho.dim(), 4);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"white_mix","alpha":0.75,"q":0.05}"#);
        let back: SegmentSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);

        let werner = SegmentSpec::Werner { fidelity: 0.8161 };
        let json = serde_json::to_string(&werner).unwrap();
        assert_eq!(json, r#"{"kind":"werner","F":0.8161}"#);
    }

    #[test]
    fn bell_node_detection() {
        assert!(NodeSpec::Pvm { beta: 0.5 }.is_bell());
        assert!(!NodeSpec::Pvm { beta: 0.6 }.is_bell());
        assert!(!NodeSpec::NoisyBell { eta: 0.0 }.is_bell());
    }
}
