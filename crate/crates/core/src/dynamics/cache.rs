//! Binary on-disk cache of a [`TransitionModel`].
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TMTM"
//! 4       4     format version (u32, currently 1)
//! 8       32    SHA-256 of the canonical airport configuration
//! 40      8     state count (u64)
//! 48      8     decision count K = 2^R (u64)
//! 56      8     nonzero count (u64)
//! 64      28*n  triples, sorted by (i, k, j):
//!               i  u64  encoded source state index
//!               k  u32  decision mask
//!               j  u64  encoded target state index
//!               p  f64  transition probability
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::TransitionModel;
use crate::error::{Error, Result};
use crate::topology::{AirportTopology, Decision, ModelParams};

pub const CACHE_MAGIC: &[u8; 4] = b"TMTM";
pub const CACHE_VERSION: u32 = 1;
const TRIPLE_BYTES: usize = 28;

/// Cache file for a configuration hash inside `dir`.
pub fn cache_path(dir: &Path, config_hash: &str, fairness: &str) -> PathBuf {
    dir.join(format!("{config_hash}-{fairness}.tmc"))
}

pub fn save_cached(model: &TransitionModel, config_hash: &[u8; 32], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(CACHE_MAGIC)?;
    put(&CACHE_VERSION.to_le_bytes())?;
    put(config_hash)?;
    put(&(model.num_states() as u64).to_le_bytes())?;
    put(&(model.num_decisions() as u64).to_le_bytes())?;
    put(&(model.nonzero_count() as u64).to_le_bytes())?;
    for id in 0..model.num_states() as u32 {
        let i = model.state_index(id);
        for c in model.choices(id) {
            let (next, prob) = model.row(c);
            let mut row: Vec<(u64, f64)> = next.iter().map(|&j| model.state_index(j)).zip(prob.iter().copied()).collect();
            row.sort_by_key(|e| e.0);
            for (j, q) in row {
                put(&i.to_le_bytes())?;
                put(&c.decision.mask().to_le_bytes())?;
                put(&j.to_le_bytes())?;
                put(&q.to_le_bytes())?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a cached model, checking that it was written for `config_hash`.
pub fn load_cached(
    path: &Path,
    topology: &AirportTopology,
    params: &ModelParams,
    config_hash: &[u8; 32],
) -> Result<TransitionModel> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 64];
    r.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[0..4] != CACHE_MAGIC {
        return Err(Error::Parse(format!("{}: not a transition cache", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    if u32_at(4) != CACHE_VERSION {
        return Err(Error::Parse(format!("{}: unsupported cache version {}", path.display(), u32_at(4))));
    }
    if &header[8..40] != config_hash {
        return Err(Error::Parse(format!("{}: cache was built for another configuration", path.display())));
    }
    let (n_states, n_decisions, nnz) = (u64_at(40), u64_at(48), u64_at(56));
    if n_decisions != topology.num_decisions() as u64 {
        return Err(Error::Structural(format!(
            "cache has {n_decisions} decisions, topology has {}",
            topology.num_decisions()
        )));
    }
    let mut body = Vec::with_capacity(nnz as usize * TRIPLE_BYTES);
    r.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    if body.len() != nnz as usize * TRIPLE_BYTES {
        return Err(Error::Parse(format!("{}: truncated cache", path.display())));
    }
    let mut rows: HashMap<u64, Vec<(Decision, Vec<(u64, f64)>)>> = HashMap::new();
    for t in body.chunks_exact(TRIPLE_BYTES) {
        let i = u64::from_le_bytes(t[0..8].try_into().unwrap());
        let k = Decision::from_mask(u32::from_le_bytes(t[8..12].try_into().unwrap()));
        let j = u64::from_le_bytes(t[12..20].try_into().unwrap());
        let p = f64::from_le_bytes(t[20..28].try_into().unwrap());
        let state_rows = rows.entry(i).or_default();
        match state_rows.last_mut() {
            Some((last, row)) if *last == k => row.push((j, p)),
            _ => state_rows.push((k, vec![(j, p)])),
        }
    }
    if rows.len() as u64 != n_states {
        return Err(Error::Parse(format!(
            "{}: header lists {n_states} states, body has {}",
            path.display(),
            rows.len()
        )));
    }
    Ok(TransitionModel::from_rows(topology.clone(), *params, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_transition_model, BuildOptions};
    use crate::topology::FairnessMode;

    #[test]
    fn cache_roundtrip_preserves_rows() {
        let t = AirportTopology::main_line(3, &[Some(0), Some(2)], 2, FairnessMode::Alternation).unwrap();
        let p = ModelParams { ls_meters: 200.0, ts_seconds: 60.0, m: 0.8, c1: 0.5, c2: 0.1 };
        let model = build_transition_model(&t, &p, BuildOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let hash = [7u8; 32];
        let path = cache_path(dir.path(), "abc", "alternation");
        save_cached(&model, &hash, &path).unwrap();
        let bytes = fs::metadata(&path).unwrap().len() as usize;
        assert_eq!(bytes, 64 + TRIPLE_BYTES * model.nonzero_count());

        let loaded = load_cached(&path, &t, &p, &hash).unwrap();
        assert_eq!(loaded.num_states(), model.num_states());
        assert_eq!(loaded.nonzero_count(), model.nonzero_count());
        for id in 0..model.num_states() as u32 {
            assert_eq!(loaded.state_index(id), model.state_index(id));
            for c in model.choices(id) {
                let (n1, p1) = model.row(c);
                let (n2, p2) = loaded.row_for(id, c.decision).unwrap();
                let mut a: Vec<_> = n1.iter().zip(p1).map(|(&j, &q)| (j, q.to_bits())).collect();
                let mut b: Vec<_> = n2.iter().zip(p2).map(|(&j, &q)| (j, q.to_bits())).collect();
                a.sort_unstable();
                b.sort_unstable();
                assert_eq!(a, b);
            }
        }
        assert!(load_cached(&path, &t, &p, &[0u8; 32]).is_err());
    }
}
