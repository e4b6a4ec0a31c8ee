//! Truncated generating functions `F₀` and `⟨⟨τ_{v1} ⋯ τ_{vj}⟩⟩₀`.
//!
//! Rather than differentiating a truncated `F₀`, the coefficient of
//! `Π t^e · q^A` in `⟨⟨fixed⟩⟩₀` is read off directly as
//! `⟨fixed ∪ monomial⟩_{0,A} / Π e!`, so no margin is lost.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;

use super::{CorrelatorKey, Engine};
use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::series::{NovikovDegree, SeriesMonomial, TruncationPolicy, VarId};
use crate::Series;

impl Engine {
    /// `F₀` restricted to `policy`.
    pub fn free_energy(&self, policy: &TruncationPolicy) -> Result<Arc<Series>> {
        self.correlation_series(&[], policy)
    }

    /// `⟨⟨Π_{v ∈ fixed} τ_v⟩⟩₀` restricted to `policy`.
    pub fn correlation_series(&self, fixed: &[VarId], policy: &TruncationPolicy) -> Result<Arc<Series>> {
        if policy.rank() != self.ts.novikov_rank {
            return Err(Error::PolicyMismatch);
        }
        let mut fixed = fixed.to_vec();
        fixed.sort_unstable();
        let memo_key = (fixed, policy.clone());
        if let Some(s) = self.series.lock().expect("series memo").get(&memo_key) {
            return Ok(s.clone());
        }
        let (fixed, _) = &memo_key;
        let candidates = self.admissible_monomials(fixed, policy);
        let values: Vec<(SeriesMonomial, Rational)> = candidates
            .into_par_iter()
            .map(|(m, key)| {
                let v = self.value(&key)?;
                let w = Rational::from_integer(BigInt::from(m.factorial_weight()));
                Ok((m, v / w))
            })
            .collect::<Result<_>>()?;
        let s = Arc::new(Series::from_terms(values, policy.clone()));
        self.series.lock().expect("series memo").insert(memo_key, s.clone());
        Ok(s)
    }

    /// Monomials of `policy` whose correlator with `fixed` passes the
    /// selection rule, paired with that correlator.
    fn admissible_monomials(
        &self,
        fixed: &[VarId],
        policy: &TruncationPolicy,
    ) -> Vec<(SeriesMonomial, CorrelatorKey)> {
        let ts = &self.ts;
        let dim = |v: &VarId| v.level as i64 + ts.q[v.idx()] as i64;
        let mut by_c1: HashMap<i64, Vec<NovikovDegree>> = HashMap::new();
        for a in policy.max_degree.below() {
            by_c1.entry(ts.c1_pairing(&a)).or_default().push(a);
        }
        let vars = policy.variables(ts.classes as u32);
        let fixed_dim: i64 = fixed.iter().map(dim).sum();
        let base = ts.complex_dim as i64 - 3 + fixed.len() as i64;

        let mut out = Vec::new();
        let mut chosen: Vec<VarId> = Vec::new();
        // Depth-first over multisets in canonical order.
        fn walk(
            start: usize,
            left: u32,
            vars: &[VarId],
            chosen: &mut Vec<VarId>,
            visit: &mut dyn FnMut(&[VarId]),
        ) {
            visit(chosen);
            if left == 0 {
                return;
            }
            for i in start..vars.len() {
                chosen.push(vars[i]);
                walk(i, left - 1, vars, chosen, visit);
                chosen.pop();
            }
        }
        walk(0, policy.max_insertions, &vars, &mut chosen, &mut |ms| {
            let lhs = fixed_dim + ms.iter().map(dim).sum::<i64>();
            let need = lhs - base - ms.len() as i64;
            let Some(degrees) = by_c1.get(&need) else { return };
            for a in degrees {
                let mut ins = fixed.to_vec();
                ins.extend_from_slice(ms);
                out.push((SeriesMonomial::from_vars(ms, a.clone()), CorrelatorKey::new(ins, a.clone())));
            }
        });
        out
    }
}
