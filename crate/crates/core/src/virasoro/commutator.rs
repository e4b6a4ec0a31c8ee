//! Commutators of genus-0 operators, computed in the Weyl algebra over the
//! unshifted coordinates. An element is a sum of normal-ordered words
//! `λ^p · t_{v1} ⋯ t_{vr} ∂_{w1} ⋯ ∂_{ws}`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use super::operator::{build_operator, VirasoroOperator};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, rat, ratio, Rational};
use crate::series::VarId;
use crate::target::TargetSpace;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Word {
    pub lambda: i32,
    pub t: Vec<VarId>,
    pub d: Vec<VarId>,
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.lambda != 0 {
            parts.push(format!("λ^{}", self.lambda));
        }
        parts.extend(self.t.iter().map(|v| v.to_string()));
        parts.extend(self.d.iter().map(|v| format!("∂{v}")));
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("·"))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Weyl(pub BTreeMap<Word, Rational>);

fn counts(vs: &[VarId]) -> BTreeMap<VarId, u32> {
    let mut m = BTreeMap::new();
    for v in vs {
        *m.entry(*v).or_insert(0) += 1;
    }
    m
}

fn expand(m: &BTreeMap<VarId, u32>) -> Vec<VarId> {
    m.iter().flat_map(|(v, e)| std::iter::repeat_n(*v, *e as usize)).collect()
}

fn binom(n: u32, k: u32) -> Rational {
    let mut r = Rational::one();
    for i in 0..k {
        r = r * rat((n - i) as i64) / rat((i + 1) as i64);
    }
    r
}

fn factorial(n: u32) -> Rational {
    (1..=n).fold(Rational::one(), |acc, i| acc * rat(i as i64))
}

/// `∂^b t^c` normal-ordered: `Σ_κ Π κ! C(b,κ) C(c,κ) t^{c-κ} ∂^{b-κ}`.
fn reorder(b: &BTreeMap<VarId, u32>, c: &BTreeMap<VarId, u32>) -> Vec<(Rational, BTreeMap<VarId, u32>, BTreeMap<VarId, u32>)> {
    let shared: Vec<(VarId, u32)> = b
        .iter()
        .filter_map(|(v, &e)| c.get(v).map(|&f| (*v, e.min(f))))
        .collect();
    let mut out = vec![(Rational::one(), c.clone(), b.clone())];
    for (v, top) in shared {
        let mut next = Vec::new();
        for (coef, tc, db) in out {
            for k in 0..=top {
                let w = factorial(k) * binom(b[&v], k) * binom(c[&v], k);
                let mut tc2 = tc.clone();
                let mut db2 = db.clone();
                for (map, e) in [(&mut tc2, c[&v] - k), (&mut db2, b[&v] - k)] {
                    if e == 0 {
                        map.remove(&v);
                    } else {
                        map.insert(v, e);
                    }
                }
                next.push((&coef * w, tc2, db2));
            }
        }
        out = next;
    }
    out
}

impl Weyl {
    pub fn add_word(&mut self, w: Word, c: Rational) {
        if c.is_zero() {
            return;
        }
        let mut w = w;
        w.t.sort();
        w.d.sort();
        match self.0.entry(w) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn axpy(&mut self, c: &Rational, other: &Weyl) {
        for (w, x) in &other.0 {
            self.add_word(w.clone(), c * x);
        }
    }

    pub fn mul(&self, other: &Weyl) -> Weyl {
        let mut out = Weyl::default();
        for (a, x) in &self.0 {
            let db = counts(&a.d);
            for (b, y) in &other.0 {
                let tc = counts(&b.t);
                for (c, tmid, dmid) in reorder(&db, &tc) {
                    let mut t = a.t.clone();
                    t.extend(expand(&tmid));
                    let mut d = expand(&dmid);
                    d.extend(b.d.iter().copied());
                    out.add_word(Word { lambda: a.lambda + b.lambda, t, d }, x * y * c);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Weyl) -> Weyl {
        let mut out = self.mul(other);
        out.axpy(&rat(-1), &other.mul(self));
        out
    }

    /// Genus-0 operator data rewritten in the unshifted coordinates.
    pub fn from_operator(op: &VirasoroOperator) -> Weyl {
        let mut out = Weyl::default();
        for (src, dst, c) in &op.linear.terms {
            out.add_word(Word { lambda: 0, t: vec![*src], d: vec![*dst] }, c.clone());
            if *src == VarId::DILATON {
                out.add_word(Word { lambda: 0, t: vec![], d: vec![*dst] }, -c.clone());
            }
        }
        for (u, v, w) in &op.quadratic {
            out.add_word(Word { lambda: 2, t: vec![], d: vec![*u, *v] }, w * ratio(1, 2));
        }
        for (a, row) in op.classical.iter().enumerate() {
            for (b, q) in row.iter().enumerate() {
                let t = vec![VarId::new(0, a as u32 + 1), VarId::new(0, b as u32 + 1)];
                out.add_word(Word { lambda: -2, t, d: vec![] }, q * ratio(1, 2));
            }
        }
        out.add_word(Word { lambda: 0, t: vec![], d: vec![] }, op.constant.clone());
        out
    }

    /// Keeps the words whose coordinate factors all lie at level `<= window`.
    pub fn restrict(&self, window: u32) -> Weyl {
        Weyl(
            self.0
                .iter()
                .filter(|(w, _)| w.t.iter().all(|v| v.level <= window))
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn constant(&self) -> Rational {
        self.0
            .get(&Word { lambda: 0, t: vec![], d: vec![] })
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        self.0.iter().map(|(w, c)| (w.to_string(), format_rational(c))).collect()
    }
}

/// `[L_m, L_n] - (m - n) L_{m+n}` on the window of source levels where
/// truncating the operators at `max_level` cannot affect a coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorResidual {
    pub m: i64,
    pub n: i64,
    pub window: u32,
    pub residual: Weyl,
}

impl CommutatorResidual {
    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }
}

fn window_for(m: i64, n: i64, max_level: u32) -> Result<u32> {
    let reach = m.max(0) + n.max(0) + 1;
    let w = max_level as i64 - reach;
    if w < 1 {
        return Err(Error::PolicyTooTight(format!(
            "[L_{m}, L_{n}] needs M >= {}, have {max_level}",
            reach + 1
        )));
    }
    Ok(w as u32)
}

/// `[L_m, L_n]` with both operators carrying source levels up to `max_level`.
pub fn bracket(ts: &TargetSpace, m: i64, n: i64, max_level: u32) -> Result<Weyl> {
    let a = Weyl::from_operator(&build_operator(ts, m, max_level)?);
    let b = Weyl::from_operator(&build_operator(ts, n, max_level)?);
    Ok(a.commutator(&b))
}

/// Checks `[L_m, L_n] = (m - n) L_{m+n}` for `m, n >= 0`.
pub fn commutator_residual(ts: &TargetSpace, m: i64, n: i64, max_level: u32) -> Result<CommutatorResidual> {
    if m < 0 || n < 0 {
        return Err(Error::UnsupportedIndex(m.min(n)));
    }
    let window = window_for(m, n, max_level)?;
    let mut r = bracket(ts, m, n, max_level)?;
    let target = Weyl::from_operator(&build_operator(ts, m + n, max_level)?);
    r.axpy(&rat(-(m - n)), &target);
    Ok(CommutatorResidual { m, n, window, residual: r.restrict(window) })
}

/// Outcome of comparing `[L₋₁, L₁]` with a multiple of `L₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L0ScalarCheck {
    /// The scalar `c` read off from a linear term, if `L₀` has one in the window.
    #[serde(with = "opt_rational")]
    pub scalar: Option<Rational>,
    /// Whether `[L₋₁, L₁] - c L₀` vanishes apart from the constant.
    pub operator_part_holds: bool,
    #[serde(with = "crate::scalar::serde_rational")]
    pub bracket_constant: Rational,
    #[serde(with = "opt_rational")]
    pub expected_constant: Option<Rational>,
    pub constant_holds: bool,
}

mod opt_rational {
    use serde::Serializer;

    use crate::scalar::{format_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }
}

/// Determines `c` with `[L₋₁, L₁] = c L₀` and checks the constant term,
/// which is where the central condition enters.
pub fn l0_scalar_check(ts: &TargetSpace, max_level: u32) -> Result<L0ScalarCheck> {
    let window = window_for(-1, 1, max_level)?;
    let br = bracket(ts, -1, 1, max_level)?.restrict(window);
    let l0 = Weyl::from_operator(&build_operator(ts, 0, max_level)?).restrict(window);
    let unit = Word { lambda: 0, t: vec![], d: vec![] };
    let scalar = l0
        .0
        .iter()
        .find(|(w, _)| **w != unit)
        .map(|(w, c)| br.0.get(w).cloned().unwrap_or_else(Rational::zero) / c);
    let bracket_constant = br.constant();
    let (operator_part_holds, expected_constant) = match &scalar {
        Some(c) => {
            let mut r = br.clone();
            r.axpy(&-c.clone(), &l0);
            r.0.remove(&unit);
            (r.is_empty(), Some(c * ts.l0_constant()))
        }
        None => (false, None),
    };
    let constant_holds = expected_constant.as_ref() == Some(&bracket_constant);
    Ok(L0ScalarCheck { scalar, operator_part_holds, bracket_constant, expected_constant, constant_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::preset;

    #[test]
    fn heisenberg_relation() {
        let x = VarId::new(0, 1);
        let mut t = Weyl::default();
        t.add_word(Word { lambda: 0, t: vec![x], d: vec![] }, rat(1));
        let mut d = Weyl::default();
        d.add_word(Word { lambda: 0, t: vec![], d: vec![x] }, rat(1));
        let c = d.commutator(&t);
        assert_eq!(c.entries(), vec![("1".to_string(), "1".to_string())]);
        let mut d2 = Weyl::default();
        d2.add_word(Word { lambda: 0, t: vec![], d: vec![x, x] }, rat(1));
        let mut t2 = Weyl::default();
        t2.add_word(Word { lambda: 0, t: vec![x, x], d: vec![] }, rat(1));
        // [∂², t²] = 4 t ∂ + 2
        let c = d2.commutator(&t2);
        assert_eq!(c.0.len(), 2);
        assert_eq!(c.constant(), rat(2));
    }

    #[test]
    fn low_brackets_close() {
        for name in ["point", "P1", "P2"] {
            let ts = preset(name).unwrap();
            assert!(commutator_residual(&ts, 1, 2, 5).unwrap().is_empty(), "{name}");
            assert!(commutator_residual(&ts, 0, 1, 4).unwrap().is_empty(), "{name}");
        }
        assert!(matches!(
            commutator_residual(&preset("P2").unwrap(), 1, 2, 3),
            Err(Error::PolicyTooTight(_))
        ));
    }
}
