//! Evaluation helpers shared by the residual and identity checks: correlator
//! series with possibly negative levels, coordinate series, vector-field
//! slots and `η^{-1}` contractions.

use std::sync::Arc;

use num_traits::Zero;

use super::operator::VectorField;
use crate::engine::Engine;
use crate::error::Result;
use crate::scalar::{rat, Rational};
use crate::series::{SeriesMonomial, TruncationPolicy, VarId};
use crate::target::{Matrix, TargetSpace};
use crate::Series;

/// An insertion `τ_level(O_{class+1})`; negative levels denote zero.
pub(crate) type Ins = (i64, usize);

pub(crate) struct Ctx<'a> {
    pub e: &'a Engine,
    pub ts: &'a TargetSpace,
    pub p: TruncationPolicy,
    pub n: usize,
    pub b: Vec<Rational>,
    /// `C^j` for `j = 0..=4`.
    pub cp: Vec<Matrix>,
    /// `C^j η` for `j = 0..=4`.
    pub cl: Vec<Matrix>,
    pub eta_inv: Matrix,
    /// Highest source level carried by vector fields; at least 1 so the
    /// dilaton shift is never lost.
    pub window: u32,
}

impl<'a> Ctx<'a> {
    pub fn new(e: &'a Engine, p: &TruncationPolicy) -> Self {
        let ts = e.target();
        Ctx {
            e,
            ts,
            p: p.clone(),
            n: ts.classes,
            b: ts.b_values(),
            cp: (0..=4).map(|j| ts.chern_power(j)).collect(),
            cl: (0..=4).map(|j| ts.chern_power_lowered(j)).collect(),
            eta_inv: e.eta_inverse().clone(),
            window: p.max_level.max(1),
        }
    }

    pub fn zero(&self) -> Series {
        Series::zero(self.p.clone())
    }

    pub fn konst(&self, c: Rational) -> Series {
        Series::constant(c, self.p.clone())
    }

    /// `t^{a+1}_m`.
    pub fn t(&self, m: i64, a: usize) -> Series {
        match VarId::checked(m, a as u32 + 1) {
            Some(v) => Series::variable(v, rat(1), self.p.clone()),
            None => self.zero(),
        }
    }

    /// `t̃^{a+1}_m`.
    pub fn tt(&self, m: i64, a: usize) -> Series {
        let mut s = self.t(m, a);
        if m == 1 && a == 0 {
            s.add_term(SeriesMonomial::one(self.p.rank()), rat(-1));
        }
        s
    }

    /// `⟨⟨τ ⋯⟩⟩₀`, zero if any level is negative.
    pub fn corr(&self, ins: &[Ins]) -> Result<Arc<Series>> {
        let mut vars = Vec::with_capacity(ins.len());
        for &(m, a) in ins {
            match VarId::checked(m, a as u32 + 1) {
                Some(v) => vars.push(v),
                None => return Ok(Arc::new(self.zero())),
            }
        }
        self.e.correlation_series(&vars, &self.p)
    }

    /// `⟨⟨V₁ ⋯ V_r τ ⋯⟩⟩₀` with each vector field expanded tensorially.
    pub fn vf(&self, fields: &[&VectorField], ins: &[Ins]) -> Result<Series> {
        if ins.iter().any(|&(m, _)| m < 0) {
            return Ok(self.zero());
        }
        let Some((first, rest)) = fields.split_first() else {
            return Ok((*self.corr(ins)?).clone());
        };
        let mut out = self.zero();
        for (src, dst, c) in &first.terms {
            if src.level > self.p.max_level && *src != VarId::DILATON {
                continue;
            }
            let mut more = ins.to_vec();
            more.push((dst.level as i64, dst.idx()));
            let inner = self.vf(rest, &more)?;
            if !inner.is_empty() {
                out.axpy_assign(&rat(1), &inner.mul_shifted(*src, c))?;
            }
        }
        Ok(out)
    }

    /// `Σ_{σ,ρ} η^{σρ} f(σ) g(ρ)`.
    pub fn contract(
        &self,
        f: impl Fn(usize) -> Result<Series>,
        g: impl Fn(usize) -> Result<Series>,
    ) -> Result<Series> {
        let fs: Vec<Series> = (0..self.n).map(&f).collect::<Result<_>>()?;
        let gs: Vec<Series> = (0..self.n).map(&g).collect::<Result<_>>()?;
        let mut out = self.zero();
        for (s, row) in self.eta_inv.iter().enumerate() {
            for (r, e) in row.iter().enumerate() {
                if !e.is_zero() && !fs[s].is_empty() && !gs[r].is_empty() {
                    out.axpy_assign(e, &fs[s].mul(&gs[r])?)?;
                }
            }
        }
        Ok(out)
    }

    /// `Σ_ρ η^{σρ} f(ρ)`, the series with a raised index.
    pub fn raise(&self, sigma: usize, f: impl Fn(usize) -> Result<Series>) -> Result<Series> {
        let mut out = self.zero();
        for (r, e) in self.eta_inv[sigma].iter().enumerate() {
            if !e.is_zero() {
                out.axpy_assign(e, &f(r)?)?;
            }
        }
        Ok(out)
    }

    /// `Σ_{α,β} Q_{αβ} t^α_0 t^β_0`.
    pub fn quadratic_form(&self, q: &Matrix) -> Series {
        let mut out = self.zero();
        for (a, row) in q.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    let m = SeriesMonomial::from_vars(
                        &[VarId::new(0, a as u32 + 1), VarId::new(0, b as u32 + 1)],
                        crate::series::NovikovDegree::zero(self.p.rank()),
                    );
                    out.add_term(m, c.clone());
                }
            }
        }
        out
    }

    pub fn c(&self, j: usize, a: usize, b: usize) -> &Rational {
        &self.cp[j][a][b]
    }

    pub fn c_low(&self, j: usize, a: usize, b: usize) -> &Rational {
        &self.cl[j][a][b]
    }

    pub fn eta(&self, a: usize, b: usize) -> &Rational {
        &self.ts.eta[a][b]
    }
}

/// Accumulates `Σ c_i · s_i` over a shared policy.
pub(crate) struct Acc(pub Series);

impl Acc {
    pub fn new(ctx: &Ctx<'_>) -> Self {
        Acc(ctx.zero())
    }

    pub fn add(&mut self, c: impl Into<Rational>, s: &Series) -> Result<()> {
        let c = c.into();
        if !c.is_zero() && !s.is_empty() {
            self.0.axpy_assign(&c, s)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Series {
        self.0
    }
}
