//! Run manifests and their content hash.

use std::time::{SystemTime, UNIX_EPOCH};

use robit_core::{ChainConfig, Dataset, Prior};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub p: usize,
    /// Design column names in order.
    pub columns: Vec<String>,
    /// SHA-256 of the little-endian bytes of `X` (column-major) then `y`.
    pub content_hash: String,
}

impl DatasetFingerprint {
    pub fn new(dataset: &Dataset, columns: &[String]) -> Self {
        let mut hasher = Sha256::new();
        for v in dataset.x().iter() {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(dataset.y());
        Self { n: dataset.n(), p: dataset.p(), columns: columns.to_vec(), content_hash: hex(&hasher.finalize()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPrior {
    pub label: String,
    pub beta_a: Vec<f64>,
    /// Prior precision, row by row.
    pub sigma_a: Vec<Vec<f64>>,
}

impl ResolvedPrior {
    pub fn new(label: String, prior: &Prior) -> Self {
        let s = prior.sigma_a();
        Self {
            label,
            beta_a: prior.beta_a().iter().copied().collect(),
            sigma_a: (0..s.nrows()).map(|i| s.row(i).iter().copied().collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestChain {
    pub label: String,
    pub config: ChainConfig,
}

/// The hashed part of a manifest: everything that determines the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestBody {
    pub software_version: String,
    pub config: RunConfig,
    pub dataset: DatasetFingerprint,
    pub prior: ResolvedPrior,
    pub chains: Vec<ManifestChain>,
}

impl ManifestBody {
    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex(&Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub hash: String,
    #[serde(flatten)]
    pub body: ManifestBody,
    /// Seconds since the Unix epoch; not part of the hash.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(body: ManifestBody) -> Self {
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { hash: body.hash(), body, created_unix }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
