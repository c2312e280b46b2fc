//! Persistent enumeration cache.
//!
//! Rational-point tables are by far the most expensive artifact of a
//! run, and they are pure functions of (Gram matrix, h_max), so they
//! are persisted as JSON keyed by a hash of the Gram matrix. A lookup
//! hits only on an exact Gram match; a request below the cached height
//! is served from the sorted prefix, a request above it is served by
//! enumerating only the missing height band and re-persisting. Every
//! load is spot-checked against a fresh enumeration of one random
//! height slice; corruption of any kind falls back to a full rebuild
//! with a warning.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use quadric_dioph_core::points::enumerate_band;
use quadric_dioph_core::{QuadraticForm, RationalProjectivePoint};

/// On-disk form: canonical point coordinates sorted by (height, lex).
#[derive(Debug, Serialize, Deserialize)]
pub struct EnumerationCache {
    pub gram: Vec<Vec<i64>>,
    pub h_max: i64,
    pub points: Vec<Vec<i64>>,
}

/// Non-fatal events during a cache lookup, surfaced to the caller for
/// logging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheEvent {
    Hit,
    PrefixHit,
    Extended { from: i64 },
    Miss,
    CorruptRebuilt,
    SpotCheckRebuilt,
}

pub fn cache_path(dir: &Path, form: &QuadraticForm) -> PathBuf {
    let mut hasher = Sha256::new();
    for row in form.gram() {
        for &e in row {
            hasher.update(e.to_le_bytes());
        }
        hasher.update(b";");
    }
    dir.join(format!("points-{}.json", hex::encode(&hasher.finalize()[..8])))
}

fn load(path: &Path, form: &QuadraticForm) -> Option<Vec<RationalProjectivePoint>> {
    let text = fs::read_to_string(path).ok()?;
    let cache: EnumerationCache = serde_json::from_str(&text).ok()?;
    if cache.gram != form.gram() {
        return None;
    }
    let mut points = Vec::with_capacity(cache.points.len());
    let mut prev: Option<&RationalProjectivePoint> = None;
    for coords in &cache.points {
        let p = RationalProjectivePoint::canonicalize(coords.clone()).ok()?;
        // Stored representative must already be canonical and the
        // table strictly sorted; anything else is corruption.
        if p.coords() != coords.as_slice() || p.height() > cache.h_max {
            return None;
        }
        if let Some(q) = prev {
            if (q.height(), q.coords()) >= (p.height(), p.coords()) {
                return None;
            }
        }
        points.push(p);
        prev = points.last();
    }
    Some(points)
}

fn persist(path: &Path, form: &QuadraticForm, h_max: i64, points: &[RationalProjectivePoint]) {
    let cache = EnumerationCache {
        gram: form.gram().to_vec(),
        h_max,
        points: points.iter().map(|p| p.coords().to_vec()).collect(),
    };
    if let Some(dir) = path.parent() {
        let _ = fs::create_dir_all(dir);
    }
    if let Ok(text) = serde_json::to_string(&cache) {
        let _ = fs::write(path, text);
    }
}

fn cached_h_max(path: &Path) -> Option<i64> {
    let text = fs::read_to_string(path).ok()?;
    let cache: EnumerationCache = serde_json::from_str(&text).ok()?;
    Some(cache.h_max)
}

/// The sorted table of rational points on X up to `h_max`, via the
/// cache directory. Returns the table and the list of cache events.
pub fn get_or_build(
    dir: &Path,
    form: &QuadraticForm,
    h_max: i64,
    spot_seed: u64,
) -> (Vec<RationalProjectivePoint>, Vec<CacheEvent>) {
    let path = cache_path(dir, form);
    let mut events = Vec::new();
    let existed = path.exists();
    let mut table = match load(&path, form) {
        Some(points) => {
            let stored_h = cached_h_max(&path).unwrap_or(0);
            if stored_h >= h_max {
                let cut = points.partition_point(|p| p.height() <= h_max);
                events.push(if stored_h == h_max {
                    CacheEvent::Hit
                } else {
                    CacheEvent::PrefixHit
                });
                points[..cut].to_vec()
            } else {
                events.push(CacheEvent::Extended { from: stored_h });
                let mut extended = points;
                extended.extend(enumerate_band(form, stored_h + 1, h_max));
                extended.sort_by(|a, b| {
                    (a.height(), a.coords()).cmp(&(b.height(), b.coords()))
                });
                extended.dedup();
                persist(&path, form, h_max, &extended);
                extended
            }
        }
        None => {
            events.push(if existed { CacheEvent::CorruptRebuilt } else { CacheEvent::Miss });
            let points = enumerate_band(form, 1, h_max);
            persist(&path, form, h_max, &points);
            points
        }
    };

    // Spot check: one random height slice must agree with a fresh
    // enumeration.
    let mut rng = ChaCha8Rng::seed_from_u64(spot_seed);
    let h: i64 = rng.gen_range(1..=h_max);
    let lo = table.partition_point(|p| p.height() < h);
    let hi = table.partition_point(|p| p.height() <= h);
    let fresh = enumerate_band(form, h, h);
    if table[lo..hi] != fresh[..] {
        events.push(CacheEvent::SpotCheckRebuilt);
        table = enumerate_band(form, 1, h_max);
        persist(&path, form, h_max, &table);
    }
    (table, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> QuadraticForm {
        QuadraticForm::diagonal(&[1, 1, -1])
    }

    #[test]
    fn miss_then_hit_then_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let form = circle();
        let (t1, e1) = get_or_build(dir.path(), &form, 50, 1);
        assert_eq!(e1, vec![CacheEvent::Miss]);
        let (t2, e2) = get_or_build(dir.path(), &form, 50, 2);
        assert_eq!(e2, vec![CacheEvent::Hit]);
        assert_eq!(t1, t2);
        let (t3, e3) = get_or_build(dir.path(), &form, 20, 3);
        assert_eq!(e3, vec![CacheEvent::PrefixHit]);
        assert_eq!(t3, enumerate_band(&form, 1, 20));
    }

    #[test]
    fn extension_equals_fresh() {
        let dir = tempfile::tempdir().unwrap();
        let form = circle();
        let (_, e1) = get_or_build(dir.path(), &form, 30, 1);
        assert_eq!(e1, vec![CacheEvent::Miss]);
        let (t2, e2) = get_or_build(dir.path(), &form, 120, 2);
        assert_eq!(e2, vec![CacheEvent::Extended { from: 30 }]);
        assert_eq!(t2, enumerate_band(&form, 1, 120));
    }

    #[test]
    fn different_form_misses() {
        let dir = tempfile::tempdir().unwrap();
        let (_, _) = get_or_build(dir.path(), &circle(), 30, 1);
        let other = QuadraticForm::diagonal(&[1, 1, 1, -1]);
        let (t, e) = get_or_build(dir.path(), &other, 30, 2);
        assert_eq!(e, vec![CacheEvent::Miss]);
        assert_eq!(t, enumerate_band(&other, 1, 30));
    }

    #[test]
    fn corrupt_cache_rebuilds() {
        let dir = tempfile::tempdir().unwrap();
        let form = circle();
        let (t1, _) = get_or_build(dir.path(), &form, 40, 1);
        let path = cache_path(dir.path(), &form);
        fs::write(&path, "{ not json").unwrap();
        let (t2, e2) = get_or_build(dir.path(), &form, 40, 2);
        assert_eq!(e2, vec![CacheEvent::CorruptRebuilt]);
        assert_eq!(t1, t2);
        // Subtly wrong content (non-canonical point) also rebuilds.
        let mut cache: EnumerationCache =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        for c in &mut cache.points[0] {
            *c *= 3;
        }
        fs::write(&path, serde_json::to_string(&cache).unwrap()).unwrap();
        let (t3, e3) = get_or_build(dir.path(), &form, 40, 3);
        assert_eq!(e3, vec![CacheEvent::CorruptRebuilt]);
        assert_eq!(t1, t3);
    }
}
