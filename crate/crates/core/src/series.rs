//! Truncated multivariate formal power series.
//!
//! Series live in the polynomial ring over the variables `t^α_m` and the
//! Novikov variables `q_i`, modulo every monomial that falls outside a
//! [`TruncationPolicy`]. The retained region is closed under division, so
//! the truncated product is the product in the quotient ring and every
//! retained coefficient of a product is exact.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The coordinate `t^α_m`, equivalently the insertion `τ_m(O_α)`.
///
/// `class` is 1-based. Ordering is by `(level, class)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId {
    pub level: u32,
    pub class: u32,
}

impl VarId {
    pub const fn new(level: u32, class: u32) -> Self {
        VarId { level, class }
    }

    /// Level may be negative in formulas; such insertions are zero.
    pub fn checked(level: i64, class: u32) -> Option<Self> {
        u32::try_from(level).ok().map(|level| VarId { level, class })
    }

    /// Zero-based class index for matrix access.
    pub fn idx(self) -> usize {
        self.class as usize - 1
    }

    /// The dilaton coordinate `t^1_1`, the one shifted by `t̃ = t - 1`.
    pub const DILATON: VarId = VarId::new(1, 1);
    pub const PUNCTURE: VarId = VarId::new(0, 1);
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t({},{})", self.level, self.class)
    }
}

/// Exponent vector of the Novikov variables, i.e. a curve class `A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NovikovDegree(pub Vec<u32>);

impl NovikovDegree {
    pub fn zero(rank: usize) -> Self {
        NovikovDegree(vec![0; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rank(), other.rank());
        NovikovDegree(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise `self <= cap`.
    pub fn fits(&self, cap: &Self) -> bool {
        self.rank() == cap.rank() && self.0.iter().zip(&cap.0).all(|(a, c)| a <= c)
    }

    /// Every degree `B` with `0 <= B <= self` componentwise, in lexicographic order.
    pub fn below(&self) -> Vec<NovikovDegree> {
        let mut out = vec![NovikovDegree(Vec::with_capacity(self.rank()))];
        for &cap in &self.0 {
            out = out
                .into_iter()
                .flat_map(|d| {
                    (0..=cap).map(move |a| {
                        let mut v = d.0.clone();
                        v.push(a);
                        NovikovDegree(v)
                    })
                })
                .collect();
        }
        out
    }

    /// All ordered splittings `self = A1 + A2`.
    pub fn splittings(&self) -> Vec<(NovikovDegree, NovikovDegree)> {
        self.below()
            .into_iter()
            .map(|a1| {
                let a2 = NovikovDegree(self.0.iter().zip(&a1.0).map(|(a, b)| a - b).collect());
                (a1, a2)
            })
            .collect()
    }
}

impl fmt::Display for NovikovDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "q^[{}]", parts.join(","))
    }
}

/// A monomial `Π (t^α_m)^e · q^A`. Exponents are stored sorted by variable and
/// never zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeriesMonomial {
    exps: Vec<(VarId, u32)>,
    degree: NovikovDegree,
}

impl SeriesMonomial {
    pub fn one(rank: usize) -> Self {
        SeriesMonomial { exps: Vec::new(), degree: NovikovDegree::zero(rank) }
    }

    pub fn new(exps: impl IntoIterator<Item = (VarId, u32)>, degree: NovikovDegree) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in exps {
            *map.entry(v).or_default() += e;
        }
        SeriesMonomial { exps: map.into_iter().filter(|&(_, e)| e > 0).collect(), degree }
    }

    /// Monomial of a multiset of variables (one factor per occurrence).
    pub fn from_vars(vars: &[VarId], degree: NovikovDegree) -> Self {
        Self::new(vars.iter().map(|&v| (v, 1)), degree)
    }

    pub fn var(v: VarId, rank: usize) -> Self {
        SeriesMonomial { exps: vec![(v, 1)], degree: NovikovDegree::zero(rank) }
    }

    pub fn exponents(&self) -> &[(VarId, u32)] {
        &self.exps
    }

    pub fn degree(&self) -> &NovikovDegree {
        &self.degree
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.exps
            .binary_search_by(|(w, _)| w.cmp(&v))
            .map(|i| self.exps[i].1)
            .unwrap_or(0)
    }

    /// Total `t`-degree.
    pub fn total(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn max_level(&self) -> Option<u32> {
        self.exps.iter().map(|(v, _)| v.level).max()
    }

    /// The variables with multiplicity, sorted.
    pub fn vars(&self) -> Vec<VarId> {
        self.exps
            .iter()
            .flat_map(|&(v, e)| std::iter::repeat_n(v, e as usize))
            .collect()
    }

    /// `Π e!` over the exponents.
    pub fn factorial_weight(&self) -> u128 {
        self.exps
            .iter()
            .map(|&(_, e)| (1..=e as u128).product::<u128>())
            .product()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            let (a, b) = (self.exps[i], other.exps[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    exps.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    exps.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    exps.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        exps.extend_from_slice(&self.exps[i..]);
        exps.extend_from_slice(&other.exps[j..]);
        SeriesMonomial { exps, degree: self.degree.add(&other.degree) }
    }

    /// `∂/∂v` of the monomial: `(e, m / v)` or `None` if `v` does not occur.
    pub fn derive(&self, v: VarId) -> Option<(u32, Self)> {
        let i = self.exps.binary_search_by(|(w, _)| w.cmp(&v)).ok()?;
        let e = self.exps[i].1;
        let mut exps = self.exps.clone();
        if e == 1 {
            exps.remove(i);
        } else {
            exps[i].1 -= 1;
        }
        Some((e, SeriesMonomial { exps, degree: self.degree.clone() }))
    }

    fn flat_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.exps.iter().flat_map(|&(v, e)| std::iter::repeat_n(v, e as usize))
    }
}

impl Ord for SeriesMonomial {
    /// Lexicographic on the sorted variable list (with repetition), then on
    /// the Novikov degree.
    fn cmp(&self, other: &Self) -> Ordering {
        self.flat_vars()
            .cmp(other.flat_vars())
            .then_with(|| self.degree.cmp(&other.degree))
    }
}

impl PartialOrd for SeriesMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SeriesMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .exps
            .iter()
            .map(|&(v, e)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
            .collect();
        if !self.degree.is_zero() {
            parts.push(self.degree.to_string());
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// The retained region of the big phase space: total `t`-degree at most
/// `max_insertions`, no variable above `max_level`, Novikov degree at most
/// `max_degree` componentwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_insertions: u32,
    pub max_level: u32,
    pub max_degree: NovikovDegree,
}

impl TruncationPolicy {
    pub fn new(max_insertions: u32, max_level: u32, max_degree: NovikovDegree) -> Self {
        TruncationPolicy { max_insertions, max_level, max_degree }
    }

    /// Same bound `d` on every Novikov generator.
    pub fn uniform(max_insertions: u32, max_level: u32, d: u32, rank: usize) -> Self {
        Self::new(max_insertions, max_level, NovikovDegree(vec![d; rank]))
    }

    pub fn rank(&self) -> usize {
        self.max_degree.rank()
    }

    pub fn contains(&self, m: &SeriesMonomial) -> bool {
        m.total() <= self.max_insertions
            && m.max_level().is_none_or(|l| l <= self.max_level)
            && m.degree.fits(&self.max_degree)
    }

    /// Whether `self` retains at least everything `other` retains.
    pub fn covers(&self, other: &Self) -> bool {
        self.max_insertions >= other.max_insertions
            && self.max_level >= other.max_level
            && other.max_degree.fits(&self.max_degree)
    }

    /// Every variable the policy can retain, in canonical order.
    pub fn variables(&self, classes: u32) -> Vec<VarId> {
        (0..=self.max_level)
            .flat_map(|m| (1..=classes).map(move |a| VarId::new(m, a)))
            .collect()
    }
}

impl fmt::Display for TruncationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K={} M={} D={:?}",
            self.max_insertions, self.max_level, self.max_degree.0
        )
    }
}

/// Finitely supported series with no stored zero coefficient and every stored
/// monomial inside `policy`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<S> {
    terms: BTreeMap<SeriesMonomial, S>,
    policy: TruncationPolicy,
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn zero(policy: TruncationPolicy) -> Self {
        TruncatedSeries { terms: BTreeMap::new(), policy }
    }

    pub fn constant(c: S, policy: TruncationPolicy) -> Self {
        let one = SeriesMonomial::one(policy.rank());
        Self::from_terms([(one, c)], policy)
    }

    /// `c · t_v`.
    pub fn variable(v: VarId, c: S, policy: TruncationPolicy) -> Self {
        let m = SeriesMonomial::var(v, policy.rank());
        Self::from_terms([(m, c)], policy)
    }

    /// Accumulates terms; anything outside the policy or summing to zero is dropped.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (SeriesMonomial, S)>,
        policy: TruncationPolicy,
    ) -> Self {
        let mut out = Self::zero(policy);
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SeriesMonomial, &S)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &SeriesMonomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    /// Adds `c · m` in place, respecting the canonical form.
    pub fn add_term(&mut self, m: SeriesMonomial, c: S) {
        if c.is_zero() || !self.policy.contains(&m) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.policy == other.policy {
            Ok(())
        } else {
            Err(Error::PolicyMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(&S::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(&-S::one(), other)
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: &S, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy_assign(c, other)?;
        Ok(out)
    }

    pub fn axpy_assign(&mut self, c: &S, other: &Self) -> Result<()> {
        self.check(other)?;
        for (m, v) in &other.terms {
            self.add_term(m.clone(), c.clone() * v.clone());
        }
        Ok(())
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.policy.clone());
        }
        TruncatedSeries {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())).collect(),
            policy: self.policy.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    /// Product in the truncated ring.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let k = self.policy.max_insertions;
        let mut buckets: Vec<Vec<(&SeriesMonomial, &S)>> = vec![Vec::new(); k as usize + 1];
        for (m, c) in &other.terms {
            buckets[m.total() as usize].push((m, c));
        }
        let mut acc: HashMap<SeriesMonomial, S> = HashMap::new();
        for (ma, ca) in &self.terms {
            let ta = ma.total();
            for bucket in &buckets[..=(k - ta) as usize] {
                for &(mb, cb) in bucket {
                    if !ma.degree.add(&mb.degree).fits(&self.policy.max_degree) {
                        continue;
                    }
                    let m = ma.mul(mb);
                    let c = ca.clone() * cb.clone();
                    match acc.get_mut(&m) {
                        Some(v) => *v = v.clone() + c,
                        None => {
                            acc.insert(m, c);
                        }
                    }
                }
            }
        }
        Ok(TruncatedSeries {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            policy: self.policy.clone(),
        })
    }

    /// Multiplication by `c · t_v`.
    pub fn mul_var(&self, v: VarId, c: &S) -> Self {
        let mut out = Self::zero(self.policy.clone());
        if c.is_zero() || v.level > self.policy.max_level || self.policy.max_insertions == 0 {
            return out;
        }
        let tv = SeriesMonomial::var(v, self.policy.rank());
        for (m, x) in &self.terms {
            if m.total() < self.policy.max_insertions {
                out.terms.insert(m.mul(&tv), x.clone() * c.clone());
            }
        }
        out
    }

    /// Multiplication by `c · t̃_v`, where `t̃_v = t_v - 1` for the dilaton
    /// coordinate and `t_v` otherwise.
    pub fn mul_shifted(&self, v: VarId, c: &S) -> Self {
        let mut out = self.mul_var(v, c);
        if v == VarId::DILATON {
            out.axpy_assign(&-c.clone(), self).expect("same policy");
        }
        out
    }

    /// Formal partial derivative `∂/∂t_v`.
    pub fn derive(&self, v: VarId) -> Self {
        let mut out = Self::zero(self.policy.clone());
        for (m, c) in &self.terms {
            if let Some((e, md)) = m.derive(v) {
                let f = S::from_u32(e).expect("exponent fits scalar");
                out.add_term(md, c.clone() * f);
            }
        }
        out
    }

    /// Re-truncates to `policy`, dropping every monomial it excludes.
    pub fn restrict(&self, policy: &TruncationPolicy) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| policy.contains(m))
                .map(|(m, c)| (m.clone(), c.clone())),
            policy.clone(),
        )
    }

    /// Iterated derivative `∂_{v1} ⋯ ∂_{vk}` of a series computed at a larger
    /// policy, re-truncated to `target`. Fails unless every retained
    /// coefficient of the result is determined by `self`.
    pub fn derive_into(&self, vars: &[VarId], target: &TruncationPolicy) -> Result<Self> {
        let need_k = target.max_insertions + vars.len() as u32;
        let need_m = vars.iter().map(|v| v.level).chain([target.max_level]).max().unwrap_or(0);
        if self.policy.max_insertions < need_k
            || self.policy.max_level < need_m
            || !target.max_degree.fits(&self.policy.max_degree)
        {
            return Err(Error::PolicyTooTight(format!(
                "need K>={need_k}, M>={need_m}, D>={:?}; have {}",
                target.max_degree.0, self.policy
            )));
        }
        let mut s = self.clone();
        for &v in vars {
            s = s.derive(v);
        }
        Ok(s.restrict(target))
    }

    /// Series with every coefficient mapped through `f` (zero results dropped).
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TruncatedSeries<T> {
        TruncatedSeries::from_terms(
            self.terms.iter().map(|(m, c)| (m.clone(), f(c))),
            self.policy.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, ratio, Rational};
    use proptest::prelude::*;

    type Series = TruncatedSeries<Rational>;

    const X: VarId = VarId::new(0, 1);
    const Y: VarId = VarId::new(0, 2);
    const Z: VarId = VarId::new(1, 1);

    fn pol(k: u32) -> TruncationPolicy {
        TruncationPolicy::uniform(k, 2, 2, 1)
    }

    fn mono(vars: &[VarId], q: u32) -> SeriesMonomial {
        SeriesMonomial::from_vars(vars, NovikovDegree(vec![q]))
    }

    fn poly(terms: &[(&[VarId], u32, Rational)], k: u32) -> Series {
        Series::from_terms(terms.iter().map(|(v, q, c)| (mono(v, *q), c.clone())), pol(k))
    }

    #[test]
    fn additive_inverse_and_rational_sum() {
        let a = poly(&[(&[X], 0, rat(2))], 3);
        let b = poly(&[(&[X], 0, rat(-2))], 3);
        assert!(a.add(&b).unwrap().is_empty());
        let c = poly(&[(&[X], 0, ratio(1, 2))], 3);
        let d = poly(&[(&[X], 0, ratio(1, 3))], 3);
        let s = c.add(&d).unwrap();
        assert_eq!(s.coefficient(&mono(&[X], 0)), ratio(5, 6));
        assert_eq!(s.add(&Series::zero(pol(3))).unwrap(), s);
    }

    #[test]
    fn policy_mismatch_is_reported() {
        let a = poly(&[(&[X], 0, rat(1))], 3);
        let b = poly(&[(&[X], 0, rat(1))], 4);
        assert_eq!(a.add(&b), Err(Error::PolicyMismatch));
        assert_eq!(a.mul(&b), Err(Error::PolicyMismatch));
    }

    #[test]
    fn products_and_truncation_boundary() {
        let x = poly(&[(&[X], 0, rat(1))], 3);
        let y = poly(&[(&[Y], 0, rat(1))], 3);
        assert_eq!(x.mul(&y).unwrap(), poly(&[(&[X, Y], 0, rat(1))], 3));
        let x3 = poly(&[(&[X, X, X], 0, rat(1))], 3);
        assert!(x3.mul(&x).unwrap().is_empty());
        let one_plus = poly(&[(&[], 0, rat(1)), (&[X], 0, rat(1))], 3);
        let one_minus = poly(&[(&[], 0, rat(1)), (&[X], 0, rat(-1))], 3);
        assert_eq!(
            one_plus.mul(&one_minus).unwrap(),
            poly(&[(&[], 0, rat(1)), (&[X, X], 0, rat(-1))], 3)
        );
        // Novikov cap is part of the truncation.
        let q2 = poly(&[(&[], 2, rat(1))], 3);
        let q1 = poly(&[(&[], 1, rat(1))], 3);
        assert!(q2.mul(&q1).unwrap().is_empty());
    }

    #[test]
    fn derivative_examples() {
        let s = poly(&[(&[X, X, Y], 0, rat(3))], 4);
        assert_eq!(s.derive(X), poly(&[(&[X, Y], 0, rat(6))], 4));
        assert!(poly(&[(&[Y, Y], 0, rat(1))], 4).derive(X).is_empty());
    }

    #[test]
    fn coefficient_queries() {
        let s = poly(&[(&[X], 0, ratio(5, 7))], 3);
        let before = s.clone();
        assert_eq!(s.coefficient(&mono(&[X], 0)), ratio(5, 7));
        assert_eq!(s.coefficient(&mono(&[Y], 0)), rat(0));
        assert_eq!(s, before);
    }

    #[test]
    fn shifted_multiplication_expands_dilaton_shift() {
        let one = Series::constant(rat(1), pol(3));
        let t = one.mul_shifted(VarId::DILATON, &rat(2));
        assert_eq!(t, poly(&[(&[], 0, rat(-2)), (&[Z], 0, rat(2))], 3));
        assert_eq!(one.mul_shifted(X, &rat(1)), poly(&[(&[X], 0, rat(1))], 3));
    }

    #[test]
    fn derive_into_checks_margins() {
        let s = poly(&[(&[X, X, Y], 1, rat(1))], 3);
        let target = pol(2);
        assert!(matches!(s.derive_into(&[X, Y], &target), Err(Error::PolicyTooTight(_))));
        assert_eq!(
            s.derive_into(&[X], &pol(1)).unwrap(),
            Series::from_terms([(mono(&[Y], 1), rat(0))], pol(1))
        );
    }

    #[test]
    fn monomial_order_is_lexicographic_on_sorted_variables() {
        // x^2 y < x y because [x, x, y] < [x, y].
        assert!(mono(&[X, X, Y], 0) < mono(&[X, Y], 0));
        assert!(mono(&[X], 0) < mono(&[X], 1));
        assert!(mono(&[], 2) < mono(&[X], 0));
    }

    fn arb_series() -> impl Strategy<Value = Series> {
        let vars = [X, Y, Z];
        prop::collection::vec(
            (prop::collection::vec(0usize..3, 0..4), 0u32..3, -5i64..6),
            0..6,
        )
        .prop_map(move |terms| {
            Series::from_terms(
                terms.into_iter().map(|(vs, q, c)| {
                    let vs: Vec<VarId> = vs.into_iter().map(|i| vars[i]).collect();
                    (mono(&vs, q), rat(c))
                }),
                pol(3),
            )
        })
    }

    fn no_zeros(s: &Series) -> bool {
        s.iter().all(|(m, c)| *c != rat(0) && s.policy().contains(m))
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
            prop_assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            for s in [a.add(&b).unwrap(), a.mul(&b).unwrap(), a.derive(X), a.sub(&a).unwrap()] {
                prop_assert!(no_zeros(&s));
            }
        }

        #[test]
        fn truncation_commutes_with_product(a in arb_series(), b in arb_series()) {
            let small = pol(2);
            let lhs = a.mul(&b).unwrap().restrict(&small);
            let rhs = a.restrict(&small).mul(&b.restrict(&small)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn mixed_partials_commute(a in arb_series()) {
            prop_assert_eq!(a.derive(X).derive(Y), a.derive(Y).derive(X));
        }

        #[test]
        fn leibniz_inside_margin(a in arb_series(), b in arb_series()) {
            // Compare only monomials with total degree < K so both sides are exact.
            let inner = pol(2);
            let lhs = a.mul(&b).unwrap().derive(X).restrict(&inner);
            let rhs = a.derive(X).mul(&b).unwrap().add(&a.mul(&b.derive(X)).unwrap()).unwrap().restrict(&inner);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
