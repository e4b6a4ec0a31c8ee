use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;

use super::ctx::{Acc, Ctx};
use super::operator::{build_operator, VectorField, VirasoroOperator};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, rat, ratio, Rational};
use crate::series::{NovikovDegree, SeriesMonomial, TruncationPolicy, VarId};
use crate::Series;

/// Genus-0 residual of `op`, given the one-point functions `⟨⟨τ_v⟩⟩₀`:
/// `Σ c t̃_src ⟨⟨dst⟩⟩ + ½ Σ w ⟨⟨u⟩⟩⟨⟨v⟩⟩ + ½ Σ Q_{αβ} t^α_0 t^β_0`.
pub fn apply_with(
    op: &VirasoroOperator,
    policy: &TruncationPolicy,
    first: impl Fn(VarId) -> Result<Arc<Series>>,
) -> Result<Series> {
    let mut out = Series::zero(policy.clone());
    for (src, dst, c) in &op.linear.terms {
        if src.level > policy.max_level && *src != VarId::DILATON {
            continue;
        }
        out.axpy_assign(&Rational::one(), &first(*dst)?.mul_shifted(*src, c))?;
    }
    for (u, v, w) in &op.quadratic {
        let prod = first(*u)?.mul(&*first(*v)?)?;
        out.axpy_assign(&(w * ratio(1, 2)), &prod)?;
    }
    let zero = NovikovDegree::zero(policy.rank());
    for (a, row) in op.classical.iter().enumerate() {
        for (b, q) in row.iter().enumerate() {
            if !q.is_zero() {
                let m = SeriesMonomial::from_vars(
                    &[VarId::new(0, a as u32 + 1), VarId::new(0, b as u32 + 1)],
                    zero.clone(),
                );
                out.add_term(m, q * ratio(1, 2));
            }
        }
    }
    Ok(out)
}

/// Residual of `op` against a free energy computed with enough margin: `F0`
/// must retain one more insertion than `policy` and every level `op` reaches.
pub fn apply_operator(op: &VirasoroOperator, f0: &Series, policy: &TruncationPolicy) -> Result<Series> {
    if op.max_level < policy.max_level.max(1) {
        return Err(Error::PolicyTooTight(format!(
            "operator carries source levels up to {}, policy needs {}",
            op.max_level,
            policy.max_level.max(1)
        )));
    }
    apply_with(op, policy, |v| f0.derive_into(&[v], policy).map(Arc::new))
}

/// `Ψ₀,ₙ` from the generic operator `L_n` and the engine's correlators.
pub fn psi_generic(e: &Engine, n: i64, policy: &TruncationPolicy) -> Result<Series> {
    let op = build_operator(e.target(), n, policy.max_level.max(1))?;
    apply_with(&op, policy, |v| e.correlation_series(&[v], policy))
}

/// `L_1`, `L_2` assembled from their displayed coefficient functions rather
/// than from the general `A`/`B` formulas.
pub fn displayed_operator(e: &Engine, n: i64, max_level: u32) -> Result<VirasoroOperator> {
    let ts = e.target();
    let b = ts.b_values();
    let eta_inv = e.eta_inverse();
    let pw: Vec<_> = (0..=3).map(|j| ts.chern_power(j)).collect();
    let mut lin = Vec::new();
    let mut quad: BTreeMap<(VarId, VarId), Rational> = BTreeMap::new();
    let mut add_quad = |u: VarId, v: VarId, w: Rational| {
        let k = if u <= v { (u, v) } else { (v, u) };
        *quad.entry(k).or_insert_with(Rational::zero) += w;
    };
    let var = |m: i64, a: usize| VarId::checked(m, a as u32 + 1);
    for m in 0..=max_level as i64 {
        for a in 0..ts.classes {
            let src = var(m, a).unwrap();
            let x = rat(m) + &b[a];
            // (coefficient, power of C, level shift of the derivative)
            let rows: Vec<(Rational, usize, i64)> = match n {
                1 => vec![
                    (&x * (&x + rat(1)), 0, 1),
                    (rat(2) * &x + rat(1), 1, 0),
                    (rat(1), 2, -1),
                ],
                2 => vec![
                    (&x * (&x + rat(1)) * (&x + rat(2)), 0, 2),
                    (rat(3) * &x * &x + rat(6) * &x + rat(2), 1, 1),
                    (rat(3) * (&x + rat(1)), 2, 0),
                    (rat(1), 3, -1),
                ],
                _ => return Err(Error::UnsupportedIndex(n)),
            };
            for (c, j, shift) in rows {
                let Some(_) = var(m + shift, 0) else { continue };
                for (g, x) in pw[j][a].iter().enumerate() {
                    if !x.is_zero() {
                        lin.push((src, var(m + shift, g).unwrap(), &c * x));
                    }
                }
            }
        }
    }
    for a in 0..ts.classes {
        let ba = &b[a];
        for (r, e) in eta_inv[a].iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            if n == 1 {
                // ½ Σ b(1-b) ⟨⟨O_α⟩⟩⟨⟨O^α⟩⟩
                add_quad(var(0, a).unwrap(), var(0, r).unwrap(), ba * (rat(1) - ba) * e);
            } else {
                // -Σ (b-1)b(b+1) ⟨⟨τ₁(O_α)⟩⟩⟨⟨O^α⟩⟩, weight doubled for the ½ convention
                let w = -(ba - rat(1)) * ba * (ba + rat(1)) * e * rat(2);
                add_quad(var(1, a).unwrap(), var(0, r).unwrap(), w);
                // -½ Σ (3b²-1) C_α^β ⟨⟨O_β⟩⟩⟨⟨O^α⟩⟩
                for (be, c) in ts.c1_mat[a].iter().enumerate() {
                    if !c.is_zero() {
                        let w = -(rat(3) * ba * ba - rat(1)) * c * e;
                        add_quad(var(0, be).unwrap(), var(0, r).unwrap(), w);
                    }
                }
            }
        }
    }
    Ok(VirasoroOperator {
        n,
        max_level,
        linear: VectorField::from_terms(lin),
        quadratic: quad.into_iter().filter(|(_, c)| !c.is_zero()).map(|((u, v), c)| (u, v, c)).collect(),
        classical: ts.chern_power_lowered(n as u32 + 1),
        constant: Rational::zero(),
    })
}

/// `Ψ₀,₁` or `Ψ₀,₂` written out term by term as displayed.
pub fn psi_displayed(e: &Engine, n: i64, policy: &TruncationPolicy) -> Result<Series> {
    let cx = Ctx::new(e, policy);
    let mut acc = Acc::new(&cx);
    let one = |m: i64, a: usize| cx.corr(&[(m, a)]);
    for m in 0..=cx.window as i64 {
        for a in 0..cx.n {
            let tt = cx.tt(m, a);
            let x = rat(m) + &cx.b[a];
            match n {
                1 => {
                    acc.add(&x * (&x + rat(1)), &tt.mul(&*one(m + 1, a)?)?)?;
                    for s in 0..cx.n {
                        acc.add((rat(2) * &x + rat(1)) * cx.c(1, a, s), &tt.mul(&*one(m, s)?)?)?;
                        acc.add(cx.c(2, a, s).clone(), &tt.mul(&*one(m - 1, s)?)?)?;
                    }
                }
                2 => {
                    acc.add(&x * (&x + rat(1)) * (&x + rat(2)), &tt.mul(&*one(m + 2, a)?)?)?;
                    for s in 0..cx.n {
                        let q = rat(3) * &x * &x + rat(6) * &x + rat(2);
                        acc.add(q * cx.c(1, a, s), &tt.mul(&*one(m + 1, s)?)?)?;
                        acc.add(rat(3) * (&x + rat(1)) * cx.c(2, a, s), &tt.mul(&*one(m, s)?)?)?;
                        acc.add(cx.c(3, a, s).clone(), &tt.mul(&*one(m - 1, s)?)?)?;
                    }
                }
                _ => return Err(Error::UnsupportedIndex(n)),
            }
        }
    }
    for a in 0..cx.n {
        let ba = &cx.b[a];
        let up = cx.raise(a, |r| Ok((*one(0, r)?).clone()))?;
        if n == 1 {
            acc.add(ratio(1, 2) * ba * (rat(1) - ba), &one(0, a)?.mul(&up)?)?;
        } else {
            acc.add(-(ba - rat(1)) * ba * (ba + rat(1)), &one(1, a)?.mul(&up)?)?;
            for be in 0..cx.n {
                let w = ratio(-1, 2) * (rat(3) * ba * ba - rat(1)) * cx.c(1, a, be);
                acc.add(w, &one(0, be)?.mul(&up)?)?;
            }
        }
    }
    acc.add(ratio(1, 2), &cx.quadratic_form(&cx.cl[n as usize + 1]))?;
    Ok(acc.finish())
}

/// `Ψ̃₀,₁` and `Ψ̃₀,₂`.
pub fn psi_tilde(e: &Engine, n: i64, policy: &TruncationPolicy) -> Result<Series> {
    let cx = Ctx::new(e, policy);
    let mut acc = Acc::new(&cx);
    let one = |m: i64, a: usize| cx.corr(&[(m, a)]);
    for m in 0..=cx.window as i64 {
        for a in 0..cx.n {
            let tt = cx.tt(m, a);
            match n {
                1 => acc.add(rat(-1), &tt.mul(&*one(m + 1, a)?)?)?,
                2 => {
                    acc.add(rat(m) + &cx.b[a] + rat(1), &tt.mul(&*one(m + 2, a)?)?)?;
                    for s in 0..cx.n {
                        acc.add(cx.c(1, a, s).clone(), &tt.mul(&*one(m + 1, s)?)?)?;
                    }
                }
                _ => return Err(Error::UnsupportedIndex(n)),
            }
        }
    }
    for a in 0..cx.n {
        let up = cx.raise(a, |r| Ok((*one(0, r)?).clone()))?;
        if n == 1 {
            acc.add(ratio(1, 2), &one(0, a)?.mul(&up)?)?;
        } else {
            acc.add(-cx.b[a].clone(), &up.mul(&*one(1, a)?)?)?;
            for be in 0..cx.n {
                acc.add(ratio(-1, 2) * cx.c(1, a, be), &up.mul(&*one(0, be)?)?)?;
            }
        }
    }
    Ok(acc.finish())
}

/// Coefficients of a residual at `t = 0`, one list per derivative order,
/// each split by Novikov degree. Zero entries are omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DerivativeFamilies {
    pub constant: Vec<(Vec<u32>, String)>,
    pub first: Vec<(VarId, Vec<u32>, String)>,
    pub second: Vec<(VarId, VarId, Vec<u32>, String)>,
    /// `∂_{t¹₁}∂_v Ψ = -∂_v Ψ` and `∂_{t¹₁} Ψ = -2Ψ` at the origin, checked
    /// wherever the policy retains the needed coefficients.
    pub dilaton_relations_hold: bool,
}

impl DerivativeFamilies {
    pub fn of(s: &Series, classes: u32) -> Self {
        let mut fam = DerivativeFamilies { dilaton_relations_hold: true, ..Default::default() };
        let policy = s.policy();
        for (m, c) in s.iter() {
            let deg = m.degree().0.clone();
            match m.exponents() {
                [] => fam.constant.push((deg, format_rational(c))),
                [(v, 1)] => fam.first.push((*v, deg, format_rational(c))),
                [(v, 2)] => fam.second.push((*v, *v, deg, format_rational(&(c * rat(2))))),
                [(u, 1), (v, 1)] => fam.second.push((*u, *v, deg, format_rational(c))),
                _ => {}
            }
        }
        if policy.max_level < 1 {
            return fam;
        }
        let dil = VarId::DILATON;
        for a in policy.max_degree.below() {
            let one = SeriesMonomial::one(policy.rank());
            let at = |m: SeriesMonomial| s.coefficient(&SeriesMonomial::new(m.exponents().iter().copied(), a.clone()));
            if policy.max_insertions >= 1 && at(SeriesMonomial::var(dil, policy.rank())) != rat(-2) * at(one.clone()) {
                fam.dilaton_relations_hold = false;
            }
            if policy.max_insertions < 2 {
                continue;
            }
            for v in policy.variables(classes) {
                let pair = SeriesMonomial::from_vars(&[dil, v], a.clone());
                let weight = if v == dil { rat(2) } else { rat(1) };
                let second = s.coefficient(&pair) * weight;
                let first = at(SeriesMonomial::var(v, policy.rank()));
                if second != -first {
                    fam.dilaton_relations_hold = false;
                }
            }
        }
        fam
    }
}

/// Outcome of a constraint check.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiReport {
    pub n: i64,
    pub residual: Series,
    /// For `n = 1, 2`: whether the displayed expression gives the same series.
    pub displayed_agrees: Option<bool>,
    pub families: DerivativeFamilies,
}

impl PsiReport {
    pub fn holds(&self) -> bool {
        self.residual.is_empty() && self.displayed_agrees != Some(false)
    }
}

/// `Ψ₀,ₙ` for `n >= 1`, cross-checked against the displayed form when `n <= 2`.
pub fn psi(e: &Engine, n: i64, policy: &TruncationPolicy) -> Result<PsiReport> {
    if n < 1 {
        return Err(Error::UnsupportedIndex(n));
    }
    let residual = psi_generic(e, n, policy)?;
    let displayed_agrees = match n {
        1 | 2 => Some(psi_displayed(e, n, policy)? == residual),
        _ => None,
    };
    let families = DerivativeFamilies::of(&residual, e.target().classes as u32);
    Ok(PsiReport { n, residual, displayed_agrees, families })
}

/// `Ψ̃₀,ₙ` for `n = 1, 2`.
pub fn psi_tilde_report(e: &Engine, n: i64, policy: &TruncationPolicy) -> Result<PsiReport> {
    if !(1..=2).contains(&n) {
        return Err(Error::UnsupportedIndex(n));
    }
    let residual = psi_tilde(e, n, policy)?;
    let families = DerivativeFamilies::of(&residual, e.target().classes as u32);
    Ok(PsiReport { n, residual, displayed_agrees: None, families })
}
