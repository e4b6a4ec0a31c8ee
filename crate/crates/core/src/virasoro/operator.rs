use std::collections::BTreeMap;

use num_traits::Zero;

use super::coeff::{coeff_a, coeff_b};
use crate::error::{Error, Result};
use crate::scalar::{ratio, rat, Rational};
use crate::series::VarId;
use crate::target::{Matrix, TargetSpace};

/// A first-order operator `Σ c · t̃_src ∂/∂t_dst`, stored canonically: sorted by
/// `(src, dst)`, merged, and without zero coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorField {
    pub terms: Vec<(VarId, VarId, Rational)>,
}

impl VectorField {
    pub fn from_terms(terms: impl IntoIterator<Item = (VarId, VarId, Rational)>) -> Self {
        let mut map: BTreeMap<(VarId, VarId), Rational> = BTreeMap::new();
        for (s, d, c) in terms {
            *map.entry((s, d)).or_insert_with(Rational::zero) += c;
        }
        VectorField {
            terms: map.into_iter().filter(|(_, c)| !c.is_zero()).map(|((s, d), c)| (s, d, c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.terms.iter().map(|(s, d, x)| (*s, *d, x * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Genus-0 content of the operator `L_n`:
/// `Σ c t̃_src ∂_dst + (λ²/2) Σ w ∂_u ∂_v + (1/2λ²) Σ Q_{αβ} t^α_0 t^β_0 + constant`.
///
/// `quadratic` lists each unordered pair once with `u <= v`, carrying the
/// combined weight of `(u, v)` and `(v, u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VirasoroOperator {
    pub n: i64,
    /// Highest source level of the stored linear terms.
    pub max_level: u32,
    pub linear: VectorField,
    pub quadratic: Vec<(VarId, VarId, Rational)>,
    pub classical: Matrix,
    pub constant: Rational,
}

fn var(level: i64, idx: usize) -> Option<VarId> {
    VarId::checked(level, idx as u32 + 1)
}

/// `L_n` with linear terms for every source level up to `max_level`.
pub fn build_operator(ts: &TargetSpace, n: i64, max_level: u32) -> Result<VirasoroOperator> {
    let classes = ts.classes;
    let b = ts.b_values();
    let c1 = &ts.c1_mat;
    let mut linear = Vec::new();
    let mut quad: BTreeMap<(VarId, VarId), Rational> = BTreeMap::new();
    let mut constant = Rational::zero();
    let classical;
    match n {
        _ if n < -1 => return Err(Error::UnsupportedIndex(n)),
        -1 => {
            for m in 1..=max_level as i64 {
                for a in 0..classes {
                    linear.push((var(m, a).unwrap(), var(m - 1, a).unwrap(), rat(1)));
                }
            }
            classical = ts.eta.clone();
        }
        0 => {
            for m in 0..=max_level as i64 {
                for a in 0..classes {
                    let src = var(m, a).unwrap();
                    linear.push((src, src, rat(m) + &b[a]));
                    if let Some(low) = var(m - 1, 0) {
                        for (g, c) in c1[a].iter().enumerate() {
                            linear.push((src, VarId::new(low.level, g as u32 + 1), c.clone()));
                        }
                    }
                }
            }
            classical = ts.chern_power_lowered(1);
            constant = ts.l0_constant();
        }
        _ => {
            let powers: Vec<Matrix> = (0..=n as u32 + 1).map(|j| ts.chern_power(j)).collect();
            for m in 0..=max_level as i64 {
                for a in 0..classes {
                    let src = var(m, a).unwrap();
                    for j in 0..=n + 1 {
                        let Some(dst_level) = u32::try_from(m + n - j).ok() else { continue };
                        let coeff = coeff_a(&b[a], j, m, n)?;
                        for (g, c) in powers[j as usize][a].iter().enumerate() {
                            if !c.is_zero() {
                                linear.push((src, VarId::new(dst_level, g as u32 + 1), &coeff * c));
                            }
                        }
                    }
                }
            }
            let eta_inv = ts.eta_inverse()?;
            for j in 0..n {
                for k in 0..n - j {
                    let other = n - k - 1 - j;
                    for a in 0..classes {
                        let coeff = coeff_b(&b[a], j, k, n)?;
                        if coeff.is_zero() {
                            continue;
                        }
                        for (be, cj) in powers[j as usize][a].iter().enumerate() {
                            for (g, e) in eta_inv[a].iter().enumerate() {
                                if cj.is_zero() || e.is_zero() {
                                    continue;
                                }
                                let u = var(k, g).unwrap();
                                let v = var(other, be).unwrap();
                                let key = if u <= v { (u, v) } else { (v, u) };
                                *quad.entry(key).or_insert_with(Rational::zero) += &coeff * cj * e;
                            }
                        }
                    }
                }
            }
            classical = ts.chern_power_lowered(n as u32 + 1);
        }
    }
    Ok(VirasoroOperator {
        n,
        max_level,
        linear: VectorField::from_terms(linear),
        quadratic: quad.into_iter().filter(|(_, c)| !c.is_zero()).map(|((u, v), c)| (u, v, c)).collect(),
        classical,
        constant,
    })
}

/// `S = -Σ t̃^α_m ∂/∂t^α_{m-1}`.
pub fn string_field(ts: &TargetSpace, max_level: u32) -> VectorField {
    VectorField::from_terms((1..=max_level).flat_map(|m| {
        (1..=ts.classes as u32).map(move |a| (VarId::new(m, a), VarId::new(m - 1, a), rat(-1)))
    }))
}

/// `D = -Σ t̃^α_m ∂/∂t^α_m`.
pub fn dilaton_field(ts: &TargetSpace, max_level: u32) -> VectorField {
    VectorField::from_terms((0..=max_level).flat_map(|m| {
        (1..=ts.classes as u32).map(move |a| (VarId::new(m, a), VarId::new(m, a), rat(-1)))
    }))
}

/// `X = -Σ (m + b_α - (3-d)/2) t̃^α_m ∂_{(m,α)} - Σ C_α^β t̃^α_m ∂_{(m-1,β)}`.
pub fn euler_field(ts: &TargetSpace, max_level: u32) -> VectorField {
    let shift = ratio(3 - ts.complex_dim as i64, 2);
    let mut terms = Vec::new();
    for m in 0..=max_level {
        for a in 0..ts.classes {
            let src = VarId::new(m, a as u32 + 1);
            let w = rat(m as i64) + ts.b_value(a + 1).expect("in range") - &shift;
            terms.push((src, src, -w));
            if m > 0 {
                for (g, c) in ts.c1_mat[a].iter().enumerate() {
                    terms.push((src, VarId::new(m - 1, g as u32 + 1), -c.clone()));
                }
            }
        }
    }
    VectorField::from_terms(terms)
}

/// `𝓛₀ = -X - (3-d)/2 · D`, built from the two fields.
pub fn l0_field(ts: &TargetSpace, max_level: u32) -> VectorField {
    let shift = ratio(3 - ts.complex_dim as i64, 2);
    euler_field(ts, max_level)
        .scale(&rat(-1))
        .add(&dilaton_field(ts, max_level).scale(&-shift))
}

/// `L̃₁ = Σ t̃^α_m ∂/∂t^α_{m+1}`.
pub fn tilde_l1_field(ts: &TargetSpace, max_level: u32) -> VectorField {
    VectorField::from_terms((0..=max_level).flat_map(|m| {
        (1..=ts.classes as u32).map(move |a| (VarId::new(m, a), VarId::new(m + 1, a), rat(1)))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::preset;

    #[test]
    fn low_operators_are_the_special_fields() {
        for name in ["point", "P1", "P2"] {
            let ts = preset(name).unwrap();
            let l0 = build_operator(&ts, 0, 4).unwrap();
            assert_eq!(l0.linear, l0_field(&ts, 4));
            let lm1 = build_operator(&ts, -1, 4).unwrap();
            assert_eq!(lm1.linear, string_field(&ts, 4).scale(&rat(-1)));
        }
        assert_eq!(
            build_operator(&preset("P2").unwrap(), -2, 3),
            Err(Error::UnsupportedIndex(-2))
        );
    }

    #[test]
    fn l1_quadratic_weight_on_p2() {
        let ts = preset("P2").unwrap();
        let l1 = build_operator(&ts, 1, 3).unwrap();
        let h = VarId::new(0, 2);
        let w = l1.quadratic.iter().find(|(u, v, _)| *u == h && *v == h).unwrap();
        assert_eq!(w.2, ratio(1, 4));
    }
}
