use std::collections::BTreeMap;

use num_traits::Pow;

use super::key::CorrelatorKey;
use super::kontsevich::kontsevich_nd;
use crate::error::{Error, Result};
use crate::scalar::{rat, Rational};
use crate::target::TargetSpace;

/// Source of the primary invariants left after the string and divisor
/// equations have stripped every insertion they can.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimaryBackend {
    /// Only degree zero exists.
    Point,
    /// `P¹`: `⟨ω ω ω⟩_{0,1} = 1`.
    ProjLine,
    /// `P²`: `⟨H^h pt^{3a-1}⟩_{0,a} = a^h N_a`.
    ProjPlane,
    /// Externally supplied primary invariants.
    Table(BTreeMap<CorrelatorKey, Rational>),
}

impl PrimaryBackend {
    /// The natural backend for a built-in target name.
    pub fn for_preset(name: &str) -> Option<Self> {
        match name {
            "point" => Some(PrimaryBackend::Point),
            "P1" => Some(PrimaryBackend::ProjLine),
            "P2" => Some(PrimaryBackend::ProjPlane),
            _ => None,
        }
    }

    /// Builds a table backend, rejecting descendent keys.
    pub fn table(entries: impl IntoIterator<Item = (CorrelatorKey, Rational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            if !k.is_primary() {
                return Err(Error::Validation(format!("table key {k} is not primary")));
            }
            map.insert(k, v);
        }
        Ok(PrimaryBackend::Table(map))
    }

    /// Checks that the target has the shape this backend assumes.
    pub fn check_target(&self, ts: &TargetSpace) -> Result<()> {
        let shape = |n: usize, d: u32, r: usize| {
            ts.classes == n && ts.complex_dim == d && ts.novikov_rank == r
        };
        let ok = match self {
            PrimaryBackend::Point => shape(1, 0, 0),
            PrimaryBackend::ProjLine => shape(2, 1, 1),
            PrimaryBackend::ProjPlane => shape(3, 2, 1),
            PrimaryBackend::Table(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::TargetUnsupported(format!("backend {self:?} does not fit target {}", ts.name)))
        }
    }

    /// Value of an admissible primary correlator at nonzero degree with no
    /// `O₁` insertion.
    pub fn primary_value(&self, key: &CorrelatorKey) -> Result<Rational> {
        let unsupported = || Error::TargetUnsupported(format!("no base value for {key}"));
        match self {
            PrimaryBackend::Point => Err(unsupported()),
            PrimaryBackend::ProjLine => {
                if key.degree().0 == [1] && key.insertions().iter().all(|v| v.class == 2) {
                    Ok(rat(1))
                } else {
                    Err(unsupported())
                }
            }
            PrimaryBackend::ProjPlane => {
                let a = key.degree().0[0];
                let h = key.insertions().iter().filter(|v| v.class == 2).count();
                let p = key.insertions().iter().filter(|v| v.class == 3).count();
                if h + p != key.len() || p as u32 + 1 != 3 * a {
                    return Err(unsupported());
                }
                Ok(rat(a as i64).pow(h) * kontsevich_nd(a))
            }
            PrimaryBackend::Table(map) => map.get(key).cloned().ok_or_else(unsupported),
        }
    }
}
