use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub draw_index: u64,
    pub ballot_id: String,
}

/// Draws `count` ballots uniformly with replacement from `universe`,
/// continuing the seeded draw sequence at position `start`. Draw `i` of a
/// seed is the same no matter how the sequence is split into rounds.
pub fn draw_sample(seed: u64, start: u64, count: u64, universe: &[String]) -> Vec<ManifestEntry> {
    assert!(!universe.is_empty(), "cannot sample from an empty ballot universe");
    let mut h = Sha256::new();
    h.update(b"sample-manifest");
    h.update(seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    let n = universe.len();
    for _ in 0..start {
        rng.random_range(0..n);
    }
    (start..start + count)
        .map(|draw_index| ManifestEntry { draw_index, ballot_id: universe[rng.random_range(0..n)].clone() })
        .collect()
}

/// Writes a `draw_index,ballot_id` CSV.
pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["draw_index", "ballot_id"])?;
    for e in entries {
        w.write_record([e.draw_index.to_string(), e.ballot_id.clone()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["draw_index", "ballot_id"] {
        return Err(Error::invalid("manifest header must be `draw_index,ballot_id`"));
    }
    let entries: Vec<ManifestEntry> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    for pair in entries.windows(2) {
        if pair[1].draw_index != pair[0].draw_index + 1 {
            return Err(Error::invalid(format!(
                "manifest draw indices must be consecutive; {} follows {}",
                pair[1].draw_index, pair[0].draw_index
            )));
        }
    }
    Ok(entries)
}
