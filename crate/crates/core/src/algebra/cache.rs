//! Logic cache: one JSON document per solved signature.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::signature::Signature;
use super::solve::{dominance_edges, AdmissibleOrder, AdmissibleOrderSet};
use super::structure::{ParameterPoint, Structure};
use super::{AlgebraError, SolverConfig};

pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct LogicCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Arc<AdmissibleOrderSet>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WitnessRecord {
    ell: Vec<String>,
    delta: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OrderRecord {
    values: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    witness: WitnessRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolverRecord {
    seed: u64,
    restarts: usize,
    steps: usize,
    tolerance: f64,
    cap: usize,
    pool: usize,
    #[serde(default)]
    cells: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    schema_version: u32,
    signature: String,
    interaction_type: String,
    n_input_edges: usize,
    n_value_indices: usize,
    dominance: Vec<(usize, usize)>,
    orders: Vec<OrderRecord>,
    unresolved: Vec<Vec<usize>>,
    solver: SolverRecord,
}

/// File name of a signature's cache entry.
pub fn cache_file_name(sig: &Signature) -> String {
    let digest = Sha256::digest(sig.to_string().as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("{hex}.json")
}

/// Serializes an order set to the cache document format.
pub fn to_json(set: &AdmissibleOrderSet) -> serde_json::Value {
    serde_json::to_value(record(set)).expect("cache record serializes")
}

fn record(set: &AdmissibleOrderSet) -> CacheRecord {
    CacheRecord {
        schema_version: CACHE_SCHEMA_VERSION,
        signature: set.signature.to_string(),
        interaction_type: set.signature.type_label(),
        n_input_edges: set.structure.n_edges,
        n_value_indices: set.structure.n_values(),
        dominance: dominance_edges(set),
        orders: set
            .orders
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let (ell, delta) = o.witness.to_decimal_strings();
                OrderRecord {
                    values: o.values.clone(),
                    blocks: set.blocks(i),
                    witness: WitnessRecord { ell, delta },
                }
            })
            .collect(),
        unresolved: set.unresolved.clone(),
        solver: SolverRecord {
            seed: set.config.seed,
            restarts: set.config.restarts,
            steps: set.config.steps,
            tolerance: set.config.tolerance,
            cap: set.config.cap,
            pool: set.config.pool,
            cells: set.config.cells,
        },
    }
}

fn from_record(rec: CacheRecord, path: &Path) -> Result<AdmissibleOrderSet, AlgebraError> {
    let corrupt = |reason: String| AlgebraError::CacheCorrupt {
        path: path.display().to_string(),
        reason,
    };
    let signature = Signature::parse(&rec.signature).map_err(|e| corrupt(e.to_string()))?;
    let structure = Structure::from_signature(&signature);
    let parse = |v: &[String]| -> Result<Vec<f64>, AlgebraError> {
        v.iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| corrupt(format!("witness `{s}`: {e}")))
            })
            .collect()
    };
    let mut orders = Vec::new();
    for o in &rec.orders {
        orders.push(AdmissibleOrder {
            values: o.values.clone(),
            witness: ParameterPoint::new(parse(&o.witness.ell)?, parse(&o.witness.delta)?),
        });
    }
    let set = AdmissibleOrderSet {
        signature,
        structure,
        orders,
        unresolved: rec.unresolved,
        config: SolverConfig {
            cap: rec.solver.cap,
            seed: rec.solver.seed,
            restarts: rec.solver.restarts,
            steps: rec.solver.steps,
            tolerance: rec.solver.tolerance,
            pool: rec.solver.pool,
            cells: rec.solver.cells,
        },
    };
    set.verify().map_err(corrupt)?;
    Ok(set)
}

impl LogicCache {
    pub fn in_memory() -> Self {
        LogicCache::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        LogicCache {
            dir: Some(dir.into()),
            memory: Mutex::default(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, sig: &Signature) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(cache_file_name(sig)))
    }

    pub(crate) fn get(
        &self,
        sig: &Signature,
    ) -> Result<Option<Arc<AdmissibleOrderSet>>, AlgebraError> {
        let key = sig.to_string();
        if let Some(hit) = self.memory.lock().unwrap().get(&key) {
            return Ok(Some(hit.clone()));
        }
        let Some(path) = self.path_for(sig) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| AlgebraError::CacheCorrupt {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let rec: CacheRecord =
            serde_json::from_str(&text).map_err(|e| AlgebraError::CacheCorrupt {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        if rec.signature != key {
            return Err(AlgebraError::CacheCorrupt {
                path: path.display().to_string(),
                reason: format!("entry is for `{}`", rec.signature),
            });
        }
        let set = Arc::new(from_record(rec, &path)?);
        self.memory.lock().unwrap().insert(key, set.clone());
        Ok(Some(set))
    }

    /// Stores a solved set; an entry already present wins.
    pub(crate) fn put(
        &self,
        set: Arc<AdmissibleOrderSet>,
    ) -> Result<Arc<AdmissibleOrderSet>, AlgebraError> {
        let key = set.signature.to_string();
        let mut mem = self.memory.lock().unwrap();
        if let Some(existing) = mem.get(&key) {
            return Ok(existing.clone());
        }
        if let Some(path) = self.path_for(&set.signature) {
            if !path.exists() {
                let dir = path.parent().expect("cache path has a parent");
                fs::create_dir_all(dir).map_err(|e| AlgebraError::CacheWrite(e.to_string()))?;
                let text = serde_json::to_string_pretty(&record(&set))
                    .map_err(|e| AlgebraError::CacheWrite(e.to_string()))?;
                let tmp = path.with_extension(format!("tmp{}", std::process::id()));
                fs::write(&tmp, text + "\n")
                    .map_err(|e| AlgebraError::CacheWrite(e.to_string()))?;
                fs::rename(&tmp, &path).map_err(|e| AlgebraError::CacheWrite(e.to_string()))?;
            }
        }
        mem.insert(key, set.clone());
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Solver;

    #[test]
    fn roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let sig = Signature::parse("x(y+z)").unwrap();
        let first = Solver::new(SolverConfig::default(), LogicCache::on_disk(dir.path()))
            .solve_psd(&sig)
            .unwrap();
        let path = dir.path().join(cache_file_name(&sig));
        assert!(path.exists());
        let second = Solver::new(SolverConfig::default(), LogicCache::on_disk(dir.path()))
            .solve_psd(&sig)
            .unwrap();
        assert_eq!(first.value_orders(), second.value_orders());
        assert_eq!(first.orders[0].witness, second.orders[0].witness);
    }

    #[test]
    fn corrupted_entry_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let sig = Signature::parse("xy").unwrap();
        Solver::new(SolverConfig::default(), LogicCache::on_disk(dir.path()))
            .solve_psd(&sig)
            .unwrap();
        let path = dir.path().join(cache_file_name(&sig));
        let text = fs::read_to_string(&path).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["orders"][0]["values"] = serde_json::json!([3, 2, 1, 0]);
        fs::write(&path, doc.to_string()).unwrap();
        let err = Solver::new(SolverConfig::default(), LogicCache::on_disk(dir.path()))
            .solve_psd(&sig)
            .unwrap_err();
        assert!(matches!(err, AlgebraError::CacheCorrupt { .. }));
    }

    #[test]
    fn file_name_is_hash_prefix() {
        let name = cache_file_name(&Signature::parse("xy").unwrap());
        assert_eq!(name.len(), 16 + 5);
    }
}
