//! Shared memo of computed invariants, with a line-oriented file format.
//!
//! The first line is `{"fingerprint":"…"}`; every further line is one
//! record `{"ins":[[m,a],…],"deg":[…],"val":"p/q"}`, in canonical key order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::key::CorrelatorKey;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational};
use crate::series::{NovikovDegree, VarId};

#[derive(Serialize, Deserialize)]
struct Header {
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    ins: Vec<(u32, u32)>,
    deg: Vec<u32>,
    val: String,
}

impl Record {
    fn from_entry(key: &CorrelatorKey, val: &Rational) -> Self {
        Record {
            ins: key.insertions().iter().map(|v| (v.level, v.class)).collect(),
            deg: key.degree().0.clone(),
            val: format_rational(val),
        }
    }

    fn into_entry(self) -> Result<(CorrelatorKey, Rational)> {
        if self.ins.iter().any(|&(_, a)| a == 0) {
            return Err(Error::Parse("class index 0 in record".into()));
        }
        let ins = self.ins.into_iter().map(|(m, a)| VarId::new(m, a)).collect();
        Ok((CorrelatorKey::new(ins, NovikovDegree(self.deg)), parse_rational(&self.val)?))
    }
}

/// Parses record lines, skipping blank lines.
pub fn parse_records<'a>(lines: impl Iterator<Item = &'a str>) -> Result<Vec<(CorrelatorKey, Rational)>> {
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let r: Record = serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string()))?;
            r.into_entry()
        })
        .collect()
}

#[derive(Debug)]
pub struct InvariantCache {
    fingerprint: String,
    entries: RwLock<HashMap<CorrelatorKey, Rational>>,
}

impl InvariantCache {
    pub fn new(fingerprint: impl Into<String>) -> Self {
        InvariantCache { fingerprint: fingerprint.into(), entries: RwLock::default() }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn get(&self, key: &CorrelatorKey) -> Option<Rational> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    /// Publishes a computed value. The first publication wins; a racing
    /// duplicate computes the same value.
    pub fn publish(&self, key: CorrelatorKey, val: Rational) {
        let mut map = self.entries.write().expect("cache lock");
        let prev = map.entry(key).or_insert_with(|| val.clone());
        debug_assert_eq!(*prev, val, "nondeterministic invariant");
    }

    /// Overwrites an entry unconditionally. Used to inject faults in tests
    /// and by `cache verify` to detect them.
    pub fn override_entry(&self, key: CorrelatorKey, val: Rational) {
        self.entries.write().expect("cache lock").insert(key, val);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sorted_entries(&self) -> Vec<(CorrelatorKey, Rational)> {
        let mut v: Vec<_> = self
            .entries
            .read()
            .expect("cache lock")
            .iter()
            .map(|(k, x)| (k.clone(), x.clone()))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn to_text(&self) -> String {
        let header = Header { fingerprint: self.fingerprint.clone() };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (k, v) in self.sorted_entries() {
            out.push_str(&serde_json::to_string(&Record::from_entry(&k, &v)).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses a cache file, refusing it unless the header matches `fingerprint`.
    pub fn from_text(text: &str, fingerprint: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Header = serde_json::from_str(lines.next().unwrap_or_default())
            .map_err(|e| Error::Parse(format!("cache header: {e}")))?;
        if header.fingerprint != fingerprint {
            return Err(Error::CacheMismatch(format!(
                "cache built for {}, active target is {}",
                header.fingerprint, fingerprint
            )));
        }
        let cache = InvariantCache::new(fingerprint);
        cache.entries.write().expect("cache lock").extend(parse_records(lines)?);
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Loads `path`, or starts empty when it does not exist.
    pub fn load_or_new(path: &Path, fingerprint: &str) -> Result<Self> {
        match fs::read_to_string(path) {
            Ok(text) => Self::from_text(&text, fingerprint),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new(fingerprint)),
            Err(e) => Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn text_round_trip_and_mismatch() {
        let c = InvariantCache::new("abc");
        c.publish("deg=1;ins=(0,3)(0,3)".parse().unwrap(), ratio(1, 1));
        c.publish("deg=0;ins=(0,1)(0,1)(1,2)".parse().unwrap(), ratio(-1, 2));
        let text = c.to_text();
        assert!(text.starts_with("{\"fingerprint\":\"abc\"}\n"));
        assert!(text.contains("{\"ins\":[[0,3],[0,3]],\"deg\":[1],\"val\":\"1\"}"));
        let back = InvariantCache::from_text(&text, "abc").unwrap();
        assert_eq!(back.sorted_entries(), c.sorted_entries());
        assert!(matches!(InvariantCache::from_text(&text, "xyz"), Err(Error::CacheMismatch(_))));
    }
}
