//! JSON network description: the on-disk schema consumed by the CLI.
//!
//! ```json
//! {
//!   "nodes": [{"rate_bps": 1e9, "latency_s": 6e-7}],
//!   "flows": [{"id": "f1", "source": 1, "hops": 2, "rho_bps": 128000.0,
//!              "sigma0_bits": 1328.0, "priority": 0,
//!              "max_frame_bits": 1328.0}]
//! }
//! ```

use crate::model::{Flow, Node, NodeId, RingNetwork, ValidationError};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeSpec {
    pub rate_bps: f64,
    pub latency_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlowSpec {
    pub id: String,
    pub source: usize,
    pub hops: usize,
    pub rho_bps: f64,
    pub sigma0_bits: f64,
    pub priority: u32,
    pub max_frame_bits: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NetworkFile {
    pub nodes: Vec<NodeSpec>,
    pub flows: Vec<FlowSpec>,
}

impl NetworkFile {
    pub fn from_network(net: &RingNetwork) -> Self {
        NetworkFile {
            nodes: net
                .nodes()
                .iter()
                .map(|n| NodeSpec {
                    rate_bps: n.rate,
                    latency_s: n.latency,
                })
                .collect(),
            flows: net
                .flows()
                .iter()
                .map(|f| FlowSpec {
                    id: f.id.clone(),
                    source: f.source.0,
                    hops: f.hops,
                    rho_bps: f.rho,
                    sigma0_bits: f.sigma0,
                    priority: f.priority,
                    max_frame_bits: f.max_frame,
                })
                .collect(),
        }
    }

    pub fn into_network(self) -> Result<RingNetwork, ValidationError> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| Node {
                rate: n.rate_bps,
                latency: n.latency_s,
            })
            .collect();
        let flows = self
            .flows
            .into_iter()
            .map(|f| Flow {
                id: f.id,
                source: NodeId(f.source),
                hops: f.hops,
                rho: f.rho_bps,
                sigma0: f.sigma0_bits,
                priority: f.priority,
                max_frame: f.max_frame_bits,
            })
            .collect();
        RingNetwork::new(nodes, flows)
    }
}

pub fn load_network(path: &Path) -> Result<RingNetwork, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: NetworkFile = serde_json::from_str(&text).map_err(|source| LoadError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    Ok(file.into_network()?)
}

pub fn save_network(net: &RingNetwork, path: &Path) -> Result<(), LoadError> {
    let file = NetworkFile::from_network(net);
    let text = serde_json::to_string_pretty(&file).expect("schema serializes");
    fs::write(path, text).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}
