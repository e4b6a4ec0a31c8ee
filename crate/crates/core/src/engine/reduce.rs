//! The individual reduction rules. Each returns the right-hand side of one
//! universal equation as a combination of smaller correlators; recursion and
//! memoization live in [`super::Engine`].

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::key::{BilinearCombination, CorrelatorKey, LinearCombination};
use crate::error::{Error, Result};
use crate::scalar::{rat, Rational};
use crate::series::VarId;
use crate::target::{Matrix, TargetSpace};

/// The genus-0 selection rule `Σ (m_i + q_{α_i}) = d - 3 + k + c₁(A)`.
pub fn dimension_admissible(ts: &TargetSpace, key: &CorrelatorKey) -> bool {
    if key.degree().rank() != ts.novikov_rank {
        return false;
    }
    let lhs: i64 = key
        .insertions()
        .iter()
        .map(|v| v.level as i64 + ts.q[v.idx()] as i64)
        .sum();
    lhs == ts.complex_dim as i64 - 3 + key.len() as i64 + ts.c1_pairing(key.degree())
}

fn factorial(n: u32) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

/// Degree-zero value: `(k-3)!/Π m_i!` times the classical integral.
pub fn degree_zero_value(ts: &TargetSpace, key: &CorrelatorKey) -> Rational {
    let k = key.len() as u32;
    let level_sum: u32 = key.insertions().iter().map(|v| v.level).sum();
    if k < 3 || level_sum != k - 3 {
        return Rational::zero();
    }
    let classes: Vec<u32> = key.insertions().iter().map(|v| v.class).collect();
    let integral = ts.integral(&classes);
    if integral.is_zero() {
        return integral;
    }
    let denom: BigInt = key.insertions().iter().map(|v| factorial(v.level)).product();
    integral * Rational::new(factorial(k - 3), denom)
}

fn lowered(v: VarId) -> Option<VarId> {
    v.level.checked_sub(1).map(|l| VarId::new(l, v.class))
}

/// String equation: removes one `τ₀(O₁)`.
pub fn string_reduce(ts: &TargetSpace, key: &CorrelatorKey) -> Result<LinearCombination> {
    let at = key.position(VarId::PUNCTURE).ok_or(Error::NotApplicable("no puncture insertion"))?;
    let rest = key.without(at);
    if key.degree().is_zero() {
        match key.len() {
            0..=2 => return Err(Error::NotApplicable("unstable degree-zero correlator")),
            3 => {
                let (a, b) = (rest.insertions()[0], rest.insertions()[1]);
                let constant = if a.level == 0 && b.level == 0 {
                    ts.eta[a.idx()][b.idx()].clone()
                } else {
                    Rational::zero()
                };
                return Ok(LinearCombination { constant, terms: Vec::new() });
            }
            _ => {}
        }
    }
    let terms = (0..rest.len())
        .filter_map(|i| lowered(rest.insertions()[i]).map(|v| (Rational::one(), rest.replace(i, v))))
        .collect();
    Ok(LinearCombination { constant: Rational::zero(), terms })
}

/// Dilaton equation: `⟨τ₁(O₁) Π τ⟩ = (k - 2)⟨Π τ⟩` with `k` the remaining count.
pub fn dilaton_reduce(key: &CorrelatorKey) -> Result<LinearCombination> {
    let at = key.position(VarId::DILATON).ok_or(Error::NotApplicable("no dilaton insertion"))?;
    if key.len() < 4 && key.degree().is_zero() {
        return Err(Error::NotApplicable("unstable degree-zero correlator"));
    }
    let rest = key.without(at);
    let factor = rat(rest.len() as i64 - 2);
    Ok(LinearCombination { constant: Rational::zero(), terms: vec![(factor, rest)] })
}

/// Lowering terms `Σ_i ⟨⋯ τ_{m_i - 1}(D ∪ O_{α_i}) ⋯⟩` of the divisor equation.
fn divisor_lowering(ts: &TargetSpace, class: u32, rest: &CorrelatorKey) -> Vec<(Rational, CorrelatorKey)> {
    let cup = &ts.cup[class as usize - 1];
    let mut out = Vec::new();
    for (i, &v) in rest.insertions().iter().enumerate() {
        let Some(low) = lowered(v) else { continue };
        for (g, kappa) in cup[v.idx()].iter().enumerate() {
            if !kappa.is_zero() {
                out.push((kappa.clone(), rest.replace(i, VarId::new(low.level, g as u32 + 1))));
            }
        }
    }
    out
}

/// Divisor equation, removing a level-0 insertion of `divisors[divisor_index]`.
pub fn divisor_reduce(
    ts: &TargetSpace,
    key: &CorrelatorKey,
    divisor_index: usize,
) -> Result<LinearCombination> {
    let div = ts
        .divisors
        .get(divisor_index)
        .ok_or_else(|| Error::IndexOutOfRange(format!("divisor {divisor_index}")))?;
    if key.degree().is_zero() {
        return Err(Error::NotApplicable("divisor equation used only at nonzero degree"));
    }
    let at = key
        .position(VarId::new(0, div.class))
        .ok_or(Error::NotApplicable("no divisor insertion"))?;
    let rest = key.without(at);
    let mut terms = vec![(rat(div.pairing_with(key.degree())), rest.clone())];
    terms.extend(divisor_lowering(ts, div.class, &rest));
    terms.retain(|(c, _)| !c.is_zero());
    Ok(LinearCombination { constant: Rational::zero(), terms })
}

/// The divisor equation read backwards, adding a divisor insertion so that an
/// unstable correlator at nonzero degree becomes a stable one.
pub fn divisor_lift(ts: &TargetSpace, key: &CorrelatorKey) -> Result<LinearCombination> {
    if key.degree().is_zero() {
        return Err(Error::NotApplicable("lift used only at nonzero degree"));
    }
    let i = ts.divisor_for(key.degree()).ok_or_else(|| {
        Error::TargetUnsupported(format!("no divisor pairs nontrivially with degree {:?}", key.degree().0))
    })?;
    let div = &ts.divisors[i];
    let inv = rat(div.pairing_with(key.degree())).recip();
    let mut terms = vec![(inv.clone(), key.with(VarId::new(0, div.class)))];
    for (c, k) in divisor_lowering(ts, div.class, key) {
        terms.push((-c * &inv, k));
    }
    Ok(LinearCombination { constant: Rational::zero(), terms })
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut out = BigInt::one();
    for i in 0..k {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}

/// Coefficient form of the genus-0 topological recursion relation applied to
/// the insertion at `chosen`:
///
/// `⟨τ_m(O_α) τ(β) τ(γ) Π⟩_A = Σ ⟨τ_{m-1}(O_α) O_σ Π₁⟩_{A₁} η^{σρ} ⟨O_ρ τ(β) τ(γ) Π₂⟩_{A₂}`
///
/// where `τ(β), τ(γ)` are the first two other insertions in canonical order
/// and the sum runs over splittings of the spectators `Π` and of `A`.
pub fn trr_reduce(
    ts: &TargetSpace,
    eta_inv: &Matrix,
    key: &CorrelatorKey,
    chosen: usize,
) -> Result<BilinearCombination> {
    let ins = key.insertions();
    if ins.len() < 3 {
        return Err(Error::NotApplicable("recursion needs three insertions"));
    }
    let head = ins[chosen];
    let head_low = lowered(head).ok_or(Error::NotApplicable("chosen insertion is primary"))?;
    let others: Vec<VarId> = (0..ins.len()).filter(|&i| i != chosen).map(|i| ins[i]).collect();
    let (b, g) = (others[0], others[1]);

    // Spectators grouped as (variable, multiplicity).
    let mut groups: Vec<(VarId, usize)> = Vec::new();
    for &v in &others[2..] {
        match groups.last_mut() {
            Some((w, c)) if *w == v => *c += 1,
            _ => groups.push((v, 1)),
        }
    }

    let mut splits: Vec<(BigInt, Vec<VarId>, Vec<VarId>)> = vec![(BigInt::one(), vec![], vec![])];
    for &(v, count) in &groups {
        let mut next = Vec::with_capacity(splits.len() * (count + 1));
        for (mult, s1, s2) in &splits {
            for j in 0..=count {
                let mut a = s1.clone();
                a.extend(std::iter::repeat_n(v, j));
                let mut c = s2.clone();
                c.extend(std::iter::repeat_n(v, count - j));
                next.push((mult * binomial(count, j), a, c));
            }
        }
        splits = next;
    }

    let mut terms = Vec::new();
    for (a1, a2) in key.degree().splittings() {
        for (mult, s1, s2) in &splits {
            for (sigma, row) in eta_inv.iter().enumerate() {
                for (rho, e) in row.iter().enumerate() {
                    if e.is_zero() {
                        continue;
                    }
                    let mut left = s1.clone();
                    left.push(head_low);
                    left.push(VarId::new(0, sigma as u32 + 1));
                    let left = CorrelatorKey::new(left, a1.clone());
                    if !dimension_admissible(ts, &left) {
                        continue;
                    }
                    let mut right = s2.clone();
                    right.extend([VarId::new(0, rho as u32 + 1), b, g]);
                    let right = CorrelatorKey::new(right, a2.clone());
                    if !dimension_admissible(ts, &right) {
                        continue;
                    }
                    terms.push((e * Rational::from_integer(mult.clone()), left, right));
                }
            }
        }
    }
    Ok(BilinearCombination { terms })
}
