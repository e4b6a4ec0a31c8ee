use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::series::{NovikovDegree, VarId};

/// A genus-0 correlator `⟨τ_{m1}(O_{α1}) ⋯ τ_{mk}(O_{αk})⟩_{0,A}`.
///
/// Insertions are kept sorted by `(level, class)`, so two keys are equal
/// exactly when they describe the same multiset and degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CorrelatorKey {
    insertions: Vec<VarId>,
    degree: NovikovDegree,
}

impl CorrelatorKey {
    pub fn new(mut insertions: Vec<VarId>, degree: NovikovDegree) -> Self {
        insertions.sort_unstable();
        CorrelatorKey { insertions, degree }
    }

    pub fn insertions(&self) -> &[VarId] {
        &self.insertions
    }

    pub fn degree(&self) -> &NovikovDegree {
        &self.degree
    }

    pub fn len(&self) -> usize {
        self.insertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insertions.is_empty()
    }

    pub fn is_primary(&self) -> bool {
        self.insertions.iter().all(|v| v.level == 0)
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.insertions.binary_search(&v).is_ok()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.insertions.binary_search(&v).ok()
    }

    /// Index of the first insertion of maximal level, if that level is positive.
    pub fn first_max_level(&self) -> Option<usize> {
        let top = self.insertions.last()?.level;
        (top > 0).then(|| self.insertions.iter().position(|v| v.level == top).expect("present"))
    }

    pub fn with(&self, v: VarId) -> Self {
        let mut ins = self.insertions.clone();
        let at = ins.partition_point(|w| *w <= v);
        ins.insert(at, v);
        CorrelatorKey { insertions: ins, degree: self.degree.clone() }
    }

    pub fn without(&self, i: usize) -> Self {
        let mut ins = self.insertions.clone();
        ins.remove(i);
        CorrelatorKey { insertions: ins, degree: self.degree.clone() }
    }

    pub fn replace(&self, i: usize, v: VarId) -> Self {
        let mut ins = self.insertions.clone();
        ins[i] = v;
        Self::new(ins, self.degree.clone())
    }
}

impl fmt::Display for CorrelatorKey {
    /// Same syntax the parser accepts: `deg=1;ins=(0,3)(0,3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg: Vec<String> = self.degree.0.iter().map(u32::to_string).collect();
        write!(f, "deg={};ins=", deg.join(","))?;
        for v in &self.insertions {
            write!(f, "({},{})", v.level, v.class)?;
        }
        Ok(())
    }
}

impl FromStr for CorrelatorKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad correlator key {s:?}"));
        let s = s.trim();
        let (deg_part, ins_part) = s.split_once(';').ok_or_else(bad)?;
        let deg_text = deg_part.trim().strip_prefix("deg=").ok_or_else(bad)?;
        let degree = if deg_text.trim().is_empty() {
            Vec::new()
        } else {
            deg_text
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        let mut rest = ins_part.trim().strip_prefix("ins=").ok_or_else(bad)?.trim();
        let mut insertions = Vec::new();
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(bad)?;
            let close = body.find(')').ok_or_else(bad)?;
            let (m, a) = body[..close].split_once(',').ok_or_else(bad)?;
            let m = m.trim().parse::<u32>().map_err(|_| bad())?;
            let a = a.trim().parse::<u32>().map_err(|_| bad())?;
            if a == 0 {
                return Err(bad());
            }
            insertions.push(VarId::new(m, a));
            rest = body[close + 1..].trim_start();
        }
        Ok(CorrelatorKey::new(insertions, NovikovDegree(degree)))
    }
}

/// `constant + Σ c·⟨key⟩`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearCombination {
    pub constant: Rational,
    pub terms: Vec<(Rational, CorrelatorKey)>,
}

/// `Σ c·⟨key1⟩·⟨key2⟩`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BilinearCombination {
    pub terms: Vec<(Rational, CorrelatorKey, CorrelatorKey)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let k: CorrelatorKey = "deg=1;ins=(0,3)(1,1)(0,2)".parse().unwrap();
        assert_eq!(
            k.insertions(),
            &[VarId::new(0, 2), VarId::new(0, 3), VarId::new(1, 1)]
        );
        assert_eq!(k.to_string(), "deg=1;ins=(0,2)(0,3)(1,1)");
        let p: CorrelatorKey = "deg=;ins=(0,1)(0,1)(0,1)".parse().unwrap();
        assert_eq!(p.degree().rank(), 0);
        assert_eq!(p.to_string().parse::<CorrelatorKey>().unwrap(), p);
        for bad in ["ins=(0,1)", "deg=1;ins=(0,0)", "deg=x;ins=", "deg=1;ins=(0,1"] {
            assert!(matches!(bad.parse::<CorrelatorKey>(), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn editing_keeps_canonical_order() {
        let k = CorrelatorKey::new(vec![VarId::new(2, 1), VarId::new(0, 3)], NovikovDegree(vec![1]));
        let w = k.with(VarId::new(1, 2));
        assert_eq!(w.insertions()[1], VarId::new(1, 2));
        let r = w.replace(2, VarId::new(0, 1));
        assert_eq!(r.insertions()[0], VarId::new(0, 1));
        assert_eq!(w.first_max_level(), Some(2));
        assert_eq!(k.without(1).len(), 1);
    }
}
