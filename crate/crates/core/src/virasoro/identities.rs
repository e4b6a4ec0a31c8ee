//! Registry of genus-0 correlator identities. Each identity is evaluated on
//! both sides as truncated series for every index tuple in range and the
//! two sides are compared coefficient by coefficient.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::ctx::{Acc, Ctx, Ins};
use super::operator::{
    build_operator, dilaton_field, euler_field, l0_field, string_field, tilde_l1_field, VectorField,
    VirasoroOperator,
};
use super::psi::{displayed_operator, psi_displayed, psi_generic};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, rat, ratio, Rational};
use crate::series::{TruncationPolicy, VarId};
use crate::Series;

macro_rules! identity_ids {
    ($($v:ident => $s:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        pub enum IdentityId { $($v),* }

        impl IdentityId {
            pub const ALL: &'static [IdentityId] = &[$(IdentityId::$v),*];

            pub fn name(self) -> &'static str {
                match self { $(IdentityId::$v => $s),* }
            }
        }

        impl FromStr for IdentityId {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(IdentityId::$v),)*
                    _ => Err(Error::UnknownIdentity(s.to_string())),
                }
            }
        }
    };
}

identity_ids! {
    StringEq => "StringEq",
    StringCorr1 => "StringCorr1",
    StringCorr2 => "StringCorr2",
    StringCorr3 => "StringCorr3",
    DilatonCorr1 => "DilatonCorr1",
    DilatonCorr2 => "DilatonCorr2",
    DilatonCorr3 => "DilatonCorr3",
    QuasiHomog => "QuasiHomog",
    EulerCorr1 => "EulerCorr1",
    EulerCorr2 => "EulerCorr2",
    EulerCorr3 => "EulerCorr3",
    HoriL0 => "HoriL0",
    Trr => "TRR",
    GenWdvv => "GenWDVV",
    Frr => "FRR",
    StringRec => "StringRec",
    Swdvv => "SWDVV",
    XxCorr => "XXCorr",
    Qf1 => "QF1",
    Qf2 => "QF2",
    WdvvRight => "WDVVRight",
    L1Corr => "L1Corr",
    L1L0Corr => "L1L0Corr",
    QuadRelI => "QuadRel_i",
    QuadRelIi => "QuadRel_ii",
    QuadRelIii => "QuadRel_iii",
    QuadForm => "QuadForm",
    Tilde1Corr => "Tilde1Corr",
    TildeQuadForm => "TildeQuadForm",
    PsiClosedForm1 => "PsiClosedForm1",
    PsiClosedForm2 => "PsiClosedForm2",
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The first coefficient at which the two sides differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TupleFailure {
    pub location: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TupleResult {
    pub labels: Vec<String>,
    pub passed: bool,
    pub failure: Option<TupleFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub policy: TruncationPolicy,
    pub tuples: Vec<TupleResult>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.tuples.iter().all(|t| t.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TupleResult> {
        self.tuples.iter().filter(|t| !t.passed)
    }
}

#[derive(Clone, Copy)]
enum Dim {
    Level(&'static str, i64, i64),
    Class(&'static str),
}

enum Eval {
    Series(Series, Series),
    Structural(Option<TupleFailure>),
}

fn compare(lhs: &Series, rhs: &Series) -> Option<TupleFailure> {
    let diff = lhs.sub(rhs).ok()?;
    let (m, _) = diff.iter().next()?;
    Some(TupleFailure {
        location: m.to_string(),
        lhs: format_rational(&lhs.coefficient(m)),
        rhs: format_rational(&rhs.coefficient(m)),
    })
}

fn compare_operators(a: &VirasoroOperator, b: &VirasoroOperator) -> Option<TupleFailure> {
    if a == b {
        return None;
    }
    let show = |x: Option<&(VarId, VarId, Rational)>| {
        x.map(|(u, v, c)| format!("{u}->{v}:{}", format_rational(c))).unwrap_or_else(|| "none".into())
    };
    let first_diff = |x: &[(VarId, VarId, Rational)], y: &[(VarId, VarId, Rational)], part: &str| {
        (0..x.len().max(y.len())).find(|&i| x.get(i) != y.get(i)).map(|i| TupleFailure {
            location: format!("{part}[{i}]"),
            lhs: show(x.get(i)),
            rhs: show(y.get(i)),
        })
    };
    first_diff(&a.linear.terms, &b.linear.terms, "linear")
        .or_else(|| first_diff(&a.quadratic, &b.quadratic, "quadratic"))
        .or_else(|| {
            Some(TupleFailure {
                location: "classical".into(),
                lhs: format!("{:?}", a.classical.iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>()),
                rhs: format!("{:?}", b.classical.iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>()),
            })
        })
}

struct Fields {
    s: VectorField,
    d: VectorField,
    x: VectorField,
    l0: VectorField,
    /// `𝓛₀ - (n+1) D` for `n = 0, 1, 2`.
    l0_minus: Vec<VectorField>,
    /// `𝓛_n` for `n = 0, 1, 2`.
    ln: Vec<VectorField>,
    lt1: VectorField,
}

impl Fields {
    fn new(cx: &Ctx<'_>) -> Result<Self> {
        let w = cx.window;
        let d = dilaton_field(cx.ts, w);
        let l0 = l0_field(cx.ts, w);
        let l0_minus = (1..=3).map(|k| l0.add(&d.scale(&rat(-k)))).collect();
        let ln = (0..=2).map(|n| build_operator(cx.ts, n, w).map(|o| o.linear)).collect::<Result<_>>()?;
        Ok(Fields {
            s: string_field(cx.ts, w),
            x: euler_field(cx.ts, w),
            lt1: tilde_l1_field(cx.ts, w),
            d,
            l0,
            l0_minus,
            ln,
        })
    }
}

/// `Σ c t̃_src ∂_dst F` with `F` carried at one more insertion than the policy.
fn field_on(cx: &Ctx<'_>, f0: &Series, field: &VectorField) -> Result<Series> {
    let mut out = cx.zero();
    for (src, dst, c) in &field.terms {
        let d = f0.derive_into(&[*dst], &cx.p)?;
        out.axpy_assign(&rat(1), &d.mul_shifted(*src, c))?;
    }
    Ok(out)
}

impl IdentityId {
    fn dims(self, cx: &Ctx<'_>) -> Vec<Dim> {
        use Dim::*;
        use IdentityId::*;
        let top = cx.p.max_level as i64 - 1;
        let top = top.max(0);
        let lv = |n| Level(n, 0, top);
        let neg = |n| Level(n, -2, 2);
        match self {
            StringEq | StringCorr1 | DilatonCorr1 | QuasiHomog | EulerCorr1 | HoriL0 => vec![],
            PsiClosedForm1 | PsiClosedForm2 => vec![Level("part", 0, 1)],
            StringCorr2 | DilatonCorr2 | EulerCorr2 | XxCorr | L1L0Corr => vec![lv("m"), Class("α")],
            Tilde1Corr => vec![Level("part", 1, 2), lv("m"), Class("α"), lv("n"), Class("β")],
            StringCorr3 | DilatonCorr3 | EulerCorr3 | Frr | StringRec | L1Corr | TildeQuadForm => {
                vec![lv("m"), Class("α"), lv("n"), Class("β")]
            }
            Trr => vec![Level("m", 1, top.max(1)), Class("α"), lv("n"), Class("β"), lv("k"), Class("γ")],
            GenWdvv => vec![
                lv("m"), Class("α"), lv("n"), Class("β"), lv("k"), Class("μ"), lv("l"), Class("ν"),
            ],
            Swdvv => vec![Level("n", 0, 2), lv("k"), Class("μ"), lv("l"), Class("ν")],
            Qf1 | Qf2 | WdvvRight => vec![lv("k"), Class("μ"), lv("l"), Class("ν")],
            QuadRelI | QuadRelIi | QuadRelIii => vec![neg("k"), Class("μ"), neg("l"), Class("ν")],
            // Only the `l = -1` boundary carries a correction term here.
            QuadForm => vec![lv("k"), Class("μ"), Level("l", -1, top), Class("ν")],
        }
    }

    fn eval(self, cx: &Ctx<'_>, f: &Fields, ix: &[i64]) -> Result<Eval> {
        use IdentityId::*;
        let c = |i: usize| ix[i] as usize;
        let corr = |ins: &[Ins]| -> Result<Series> { Ok((*cx.corr(ins)?).clone()) };
        let b = |a: usize| cx.b[a].clone();
        let n = cx.n;
        let d = cx.ts.complex_dim as i64;
        let mut lhs = Acc::new(cx);
        let mut rhs = Acc::new(cx);
        match self {
            StringEq | QuasiHomog | HoriL0 => {
                let big = TruncationPolicy { max_insertions: cx.p.max_insertions + 1, ..cx.p.clone() };
                let f0 = cx.e.free_energy(&big)?;
                let field = match self {
                    StringEq => &f.s,
                    QuasiHomog => &f.x,
                    _ => &f.l0,
                };
                lhs.add(rat(1), &field_on(cx, &f0, field)?)?;
                match self {
                    StringEq => rhs.add(ratio(1, 2), &cx.quadratic_form(&cx.ts.eta))?,
                    QuasiHomog => {
                        rhs.add(rat(3 - d), &*cx.e.free_energy(&cx.p)?)?;
                        rhs.add(ratio(1, 2), &cx.quadratic_form(&cx.cl[1]))?;
                    }
                    _ => rhs.add(ratio(-1, 2), &cx.quadratic_form(&cx.cl[1]))?,
                }
            }
            StringCorr1 => {
                lhs.add(rat(1), &cx.vf(&[&f.s], &[])?)?;
                rhs.add(ratio(1, 2), &cx.quadratic_form(&cx.ts.eta))?;
            }
            DilatonCorr1 => {
                lhs.add(rat(1), &cx.vf(&[&f.d], &[])?)?;
                rhs.add(rat(-2), &*cx.e.free_energy(&cx.p)?)?;
            }
            EulerCorr1 => {
                lhs.add(rat(1), &cx.vf(&[&f.x], &[])?)?;
                rhs.add(rat(3 - d), &*cx.e.free_energy(&cx.p)?)?;
                rhs.add(ratio(1, 2), &cx.quadratic_form(&cx.cl[1]))?;
            }
            StringCorr2 => {
                let (m, a) = (ix[0], c(1));
                lhs.add(rat(1), &cx.vf(&[&f.s], &[(m, a)])?)?;
                rhs.add(rat(1), &corr(&[(m - 1, a)])?)?;
                if m == 0 {
                    for be in 0..n {
                        rhs.add(cx.eta(a, be).clone(), &cx.t(0, be))?;
                    }
                }
            }
            StringCorr3 => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                lhs.add(rat(1), &cx.vf(&[&f.s], &[(m, a), (k, be)])?)?;
                rhs.add(rat(1), &corr(&[(m, a), (k - 1, be)])?)?;
                rhs.add(rat(1), &corr(&[(m - 1, a), (k, be)])?)?;
                if m == 0 && k == 0 {
                    rhs.add(cx.eta(a, be).clone(), &cx.konst(rat(1)))?;
                }
            }
            DilatonCorr2 => {
                let (m, a) = (ix[0], c(1));
                lhs.add(rat(1), &cx.vf(&[&f.d], &[(m, a)])?)?;
                rhs.add(rat(-1), &corr(&[(m, a)])?)?;
            }
            DilatonCorr3 => {
                lhs.add(rat(1), &cx.vf(&[&f.d], &[(ix[0], c(1)), (ix[2], c(3))])?)?;
            }
            EulerCorr2 => {
                let (m, a) = (ix[0], c(1));
                lhs.add(rat(1), &cx.vf(&[&f.x], &[(m, a)])?)?;
                rhs.add(rat(m) + b(a) + ratio(3 - d, 2), &corr(&[(m, a)])?)?;
                for be in 0..n {
                    rhs.add(cx.c(1, a, be).clone(), &corr(&[(m - 1, be)])?)?;
                    if m == 0 {
                        rhs.add(cx.c_low(1, a, be).clone(), &cx.t(0, be))?;
                    }
                }
            }
            EulerCorr3 => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                lhs.add(rat(1), &cx.vf(&[&f.x], &[(m, a), (k, be)])?)?;
                euler3_rhs(cx, &mut rhs, m, a, k, be)?;
            }
            Trr => {
                let (m, a, k, be, l, g) = (ix[0], c(1), ix[2], c(3), ix[4], c(5));
                lhs.add(rat(1), &corr(&[(m, a), (k, be), (l, g)])?)?;
                rhs.add(
                    rat(1),
                    &cx.contract(|s| corr(&[(m - 1, a), (0, s)]), |r| corr(&[(0, r), (k, be), (l, g)]))?,
                )?;
            }
            GenWdvv => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                let (p, mu, q, nu) = (ix[4], c(5), ix[6], c(7));
                lhs.add(
                    rat(1),
                    &cx.contract(|s| corr(&[(m, a), (k, be), (0, s)]), |r| corr(&[(0, r), (p, mu), (q, nu)]))?,
                )?;
                rhs.add(
                    rat(1),
                    &cx.contract(|s| corr(&[(m, a), (p, mu), (0, s)]), |r| corr(&[(0, r), (k, be), (q, nu)]))?,
                )?;
            }
            Frr => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                let left: Vec<Series> = (0..n)
                    .map(|mu| {
                        let mut s = cx.raise(mu, |r| corr(&[(m - 1, a), (0, r)]))?;
                        if m == 0 && mu == a {
                            s.axpy_assign(&rat(1), &cx.konst(rat(1)))?;
                        }
                        Ok(s)
                    })
                    .collect::<Result<_>>()?;
                let right: Vec<Series> = (0..n)
                    .map(|nu| {
                        let mut s = cx.raise(nu, |r| corr(&[(0, r), (k - 1, be)]))?;
                        if k == 0 && nu == be {
                            s.axpy_assign(&rat(1), &cx.konst(rat(1)))?;
                        }
                        Ok(s)
                    })
                    .collect::<Result<_>>()?;
                for mu in 0..n {
                    for nu in 0..n {
                        if left[mu].is_empty() || right[nu].is_empty() {
                            continue;
                        }
                        let mid = cx.vf(&[&f.x], &[(0, mu), (0, nu)])?;
                        lhs.add(rat(1), &left[mu].mul(&mid)?.mul(&right[nu])?)?;
                    }
                }
                euler3_rhs(cx, &mut rhs, m, a, k, be)?;
            }
            StringRec => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                lhs.add(rat(1), &corr(&[(m, a), (k - 1, be)])?)?;
                lhs.add(rat(1), &corr(&[(m - 1, a), (k, be)])?)?;
                if m == 0 {
                    rhs.add(rat(1), &corr(&[(0, a), (k - 1, be)])?)?;
                }
                if k == 0 {
                    rhs.add(rat(1), &corr(&[(m - 1, a), (0, be)])?)?;
                }
                rhs.add(
                    rat(1),
                    &cx.contract(|s| corr(&[(m - 1, a), (0, s)]), |r| corr(&[(0, r), (k - 1, be)]))?,
                )?;
            }
            Swdvv => {
                let (nn, k, mu, l, nu) = (ix[0] as usize, ix[1], c(2), ix[3], c(4));
                let (ln, w) = (&f.ln[nn], &f.l0_minus[nn]);
                lhs.add(
                    rat(1),
                    &cx.contract(|s| cx.vf(&[ln, w], &[(0, s)]), |r| corr(&[(0, r), (k, mu), (l, nu)]))?,
                )?;
                rhs.add(
                    rat(1),
                    &cx.contract(|s| cx.vf(&[ln], &[(k, mu), (0, s)]), |r| cx.vf(&[w], &[(0, r), (l, nu)]))?,
                )?;
            }
            XxCorr => {
                let (m, a) = (ix[0], c(1));
                lhs.add(rat(1), &cx.vf(&[&f.l0, &f.l0_minus[0]], &[(m, a)])?)?;
                for q in 0..=cx.window as i64 {
                    for s in 0..n {
                        let tt = cx.tt(q, s);
                        let x = rat(q) + b(s);
                        rhs.add(-(&x * (&x + rat(1))), &tt.mul(&corr(&[(q, s), (m, a)])?)?)?;
                        for r in 0..n {
                            let w1 = -(rat(2) * &x + rat(1)) * cx.c(1, s, r);
                            rhs.add(w1, &tt.mul(&corr(&[(q - 1, r), (m, a)])?)?)?;
                            rhs.add(-cx.c(2, s, r).clone(), &tt.mul(&corr(&[(q - 2, r), (m, a)])?)?)?;
                        }
                    }
                }
                let y = rat(m) + b(a);
                rhs.add(&y * (&y - rat(1)), &corr(&[(m, a)])?)?;
                for s in 0..n {
                    rhs.add((b(a) + b(s) + rat(2 * m - 2)) * cx.c(1, a, s), &corr(&[(m - 1, s)])?)?;
                    rhs.add(cx.c(2, a, s).clone(), &corr(&[(m - 2, s)])?)?;
                    if m == 0 {
                        rhs.add((rat(2) * b(a) - rat(1)) * cx.c_low(1, a, s), &cx.t(0, s))?;
                        rhs.add(-cx.c_low(2, a, s).clone(), &cx.tt(1, s))?;
                    }
                    if m == 1 {
                        rhs.add(cx.c_low(2, a, s).clone(), &cx.t(0, s))?;
                    }
                }
            }
            Qf1 => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                let x = rat(k) + b(mu);
                let y = rat(l) + b(nu);
                for al in 0..n {
                    let w = b(al) * (&x - &y) - &x * (&y + rat(1));
                    let up = cx.raise(al, |r| corr(&[(0, r), (l, nu)]))?;
                    lhs.add(w, &corr(&[(k, mu), (0, al)])?.mul(&up)?)?;
                    rhs.add((&x - &y) * cx.c(1, nu, al), &corr(&[(k, mu), (l, al)])?)?;
                    rhs.add(-(&x - &y) * cx.c(1, mu, al), &corr(&[(k, al), (l, nu)])?)?;
                }
                rhs.add(-(&x * (&x + rat(1))), &corr(&[(k + 1, mu), (l, nu)])?)?;
                rhs.add(-(&y * (&y + rat(1))), &corr(&[(k, mu), (l + 1, nu)])?)?;
            }
            Qf2 => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                for al in 0..n {
                    for be in 0..n {
                        let w = (rat(k) + b(al) + b(mu)) * cx.c(1, nu, be);
                        if !w.is_zero_rational() {
                            let up = cx.raise(al, |r| corr(&[(0, r), (l - 1, be)]))?;
                            lhs.add(w, &corr(&[(k, mu), (0, al)])?.mul(&up)?)?;
                        }
                        let w = cx.c(1, mu, al) * cx.c(1, nu, be);
                        if !w.is_zero_rational() {
                            let pair = cx.contract(|s| corr(&[(k - 1, al), (0, s)]), |r| corr(&[(0, r), (l - 1, be)]))?;
                            lhs.add(w.clone(), &pair)?;
                            rhs.add(w.clone(), &corr(&[(k - 1, al), (l, be)])?)?;
                            if k == 0 {
                                rhs.add(-w, &corr(&[(0, al), (l - 1, be)])?)?;
                            }
                        }
                    }
                    let x = rat(k) + b(mu) + rat(l) + b(nu) + rat(1);
                    rhs.add(x * cx.c(1, nu, al), &corr(&[(k, mu), (l, al)])?)?;
                    rhs.add(cx.c(2, nu, al).clone(), &corr(&[(k, mu), (l - 1, al)])?)?;
                    if l == 0 {
                        rhs.add(-cx.c(1, nu, al).clone(), &cx.vf(&[&f.x], &[(k, mu), (0, al)])?)?;
                    }
                }
                if k == 0 && l == 0 {
                    rhs.add(cx.c_low(2, mu, nu).clone(), &cx.konst(rat(1)))?;
                }
            }
            WdvvRight => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                lhs.add(
                    rat(1),
                    &cx.contract(
                        |s| cx.vf(&[&f.l0], &[(k, mu), (0, s)]),
                        |r| cx.vf(&[&f.l0_minus[0]], &[(0, r), (l, nu)]),
                    )?,
                )?;
                two_point_block(cx, &mut rhs, k, mu, l, nu, rat(1))?;
                for al in 0..n {
                    let up = cx.raise(al, |r| corr(&[(0, r), (l, nu)]))?;
                    rhs.add(b(al) * (rat(1) - b(al)), &corr(&[(k, mu), (0, al)])?.mul(&up)?)?;
                }
            }
            L1Corr => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                lhs.add(rat(1), &cx.vf(&[&f.ln[1]], &[(m, a), (k, be)])?)?;
                two_point_block(cx, &mut rhs, m, a, k, be, rat(-1))?;
                for s in 0..n {
                    let w = -(b(s) * (rat(1) - b(s)));
                    let up = cx.raise(s, |r| corr(&[(0, r)]))?;
                    rhs.add(w.clone(), &corr(&[(m, a), (k, be), (0, s)])?.mul(&up)?)?;
                    let up = cx.raise(s, |r| corr(&[(0, r), (k, be)]))?;
                    rhs.add(w, &corr(&[(m, a), (0, s)])?.mul(&up)?)?;
                }
            }
            L1L0Corr => {
                let (k, be) = (ix[0], c(1));
                lhs.add(rat(1), &cx.vf(&[&f.ln[1], &f.l0_minus[1]], &[(k, be)])?)?;
                for q in 0..=cx.window as i64 {
                    for a in 0..n {
                        let tt = cx.tt(q, a);
                        let x = rat(q) + b(a);
                        let w = -(&x * (&x + rat(1)) * (&x + rat(2)));
                        rhs.add(w, &tt.mul(&corr(&[(q + 1, a), (k, be)])?)?)?;
                        for s in 0..n {
                            let w1 = -(rat(3) * &x * &x + rat(6) * &x + rat(2)) * cx.c(1, a, s);
                            rhs.add(w1, &tt.mul(&corr(&[(q, s), (k, be)])?)?)?;
                            let w2 = -(rat(3) * (&x + rat(1))) * cx.c(2, a, s);
                            rhs.add(w2, &tt.mul(&corr(&[(q - 1, s), (k, be)])?)?)?;
                            rhs.add(-cx.c(3, a, s).clone(), &tt.mul(&corr(&[(q - 2, s), (k, be)])?)?)?;
                        }
                    }
                }
                let y = rat(k) + b(be);
                rhs.add(&y * (&y + rat(1)) * (&y - rat(1)), &corr(&[(k + 1, be)])?)?;
                for s in 0..n {
                    rhs.add((rat(3) * &y * &y - rat(1)) * cx.c(1, be, s), &corr(&[(k, s)])?)?;
                    rhs.add(rat(3) * &y * cx.c(2, be, s), &corr(&[(k - 1, s)])?)?;
                    rhs.add(cx.c(3, be, s).clone(), &corr(&[(k - 2, s)])?)?;
                    let bs = (b(s) - rat(1)) * b(s);
                    let up = cx.raise(s, |r| corr(&[(0, r)]))?;
                    rhs.add(-(&bs * (&y - rat(1))), &up.mul(&corr(&[(0, s), (k, be)])?)?)?;
                    for r in 0..n {
                        let w = -(&bs * cx.c(1, be, r));
                        rhs.add(w, &corr(&[(k - 1, r), (0, s)])?.mul(&up)?)?;
                    }
                    if k == 0 {
                        let up_s = cx.raise(s, |r| corr(&[(0, r)]))?;
                        rhs.add(-(b(be) * (b(be) + rat(1)) * cx.c_low(1, be, s)), &up_s)?;
                        rhs.add(rat(3) * b(be) * cx.c_low(2, be, s), &cx.t(0, s))?;
                        rhs.add(-cx.c_low(3, be, s).clone(), &cx.tt(1, s))?;
                    }
                    if k == 1 {
                        rhs.add(cx.c_low(3, be, s).clone(), &cx.t(0, s))?;
                    }
                }
            }
            QuadRelI => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                lhs.add(
                    rat(1),
                    &cx.contract(|s| cx.vf(&[&f.x], &[(k, mu), (1, s)]), |r| cx.vf(&[&f.x], &[(0, r), (l, nu)]))?,
                )?;
                rhs.add(
                    rat(1),
                    &cx.contract(|r| cx.vf(&[&f.x], &[(k, mu), (0, r)]), |s| cx.vf(&[&f.x], &[(1, s), (l, nu)]))?,
                )?;
            }
            QuadRelIi => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                lhs.add(
                    rat(1),
                    &cx.contract(|r| corr(&[(k - 1, mu), (0, r)]), |s| cx.vf(&[&f.x], &[(1, s), (l, nu)]))?,
                )?;
                rhs.add(
                    rat(1),
                    &cx.contract(|s| corr(&[(k - 1, mu), (1, s)]), |r| cx.vf(&[&f.x], &[(0, r), (l, nu)]))?,
                )?;
                rhs.add(rat(1), &cx.vf(&[&f.x], &[(k + 1, mu), (l, nu)])?)?;
                if k == 0 {
                    rhs.add(rat(-1), &cx.vf(&[&f.x], &[(1, mu), (l, nu)])?)?;
                }
                if k == -1 {
                    rhs.add(rat(-1), &cx.vf(&[&f.x], &[(0, mu), (l, nu)])?)?;
                }
            }
            QuadRelIii => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                lhs.add(
                    rat(1),
                    &cx.contract(|r| corr(&[(k, mu), (0, r)]), |s| corr(&[(1, s), (l, nu)]))?,
                )?;
                rhs.add(
                    rat(1),
                    &cx.contract(|s| corr(&[(k, mu), (1, s)]), |r| corr(&[(0, r), (l, nu)]))?,
                )?;
                rhs.add(rat(1), &corr(&[(k + 2, mu), (l, nu)])?)?;
                rhs.add(rat(-1), &corr(&[(k, mu), (l + 2, nu)])?)?;
                let kd = [(-1, 1), (-2, 0)];
                for (at, lev) in kd {
                    if k == at {
                        rhs.add(rat(-1), &corr(&[(lev, mu), (l, nu)])?)?;
                    }
                    if l == at {
                        rhs.add(rat(1), &corr(&[(k, mu), (lev, nu)])?)?;
                    }
                }
            }
            QuadForm => {
                let (k, mu, l, nu) = (ix[0], c(1), ix[2], c(3));
                for be in 0..n {
                    let up = cx.raise(be, |r| corr(&[(0, r), (l, nu)]))?;
                    lhs.add(b(be) * (b(be) + rat(1)), &corr(&[(k, mu), (1, be)])?.mul(&up)?)?;
                    let up = cx.raise(be, |r| corr(&[(k, mu), (0, r)]))?;
                    lhs.add(b(be) * (rat(1) - b(be)), &up.mul(&corr(&[(1, be), (l, nu)])?)?)?;
                    for al in 0..n {
                        let w = (rat(2) * b(be) + rat(1)) * cx.c_low(1, al, be);
                        if w.is_zero_rational() {
                            continue;
                        }
                        let left = cx.raise(al, |r| corr(&[(k, mu), (0, r)]))?;
                        let right = cx.raise(be, |r| corr(&[(0, r), (l, nu)]))?;
                        lhs.add(w, &left.mul(&right)?)?;
                    }
                }
                let x = rat(k) + b(mu);
                let y = rat(l) + b(nu);
                rhs.add(-(&x * (&x + rat(1))), &corr(&[(k + 2, mu), (l, nu)])?)?;
                rhs.add((&y + rat(1)) * (&y + rat(2)), &corr(&[(k, mu), (l + 2, nu)])?)?;
                for al in 0..n {
                    rhs.add(-(rat(2) * &x + rat(1)) * cx.c(1, mu, al), &corr(&[(k + 1, al), (l, nu)])?)?;
                    rhs.add((rat(2) * &y + rat(3)) * cx.c(1, nu, al), &corr(&[(k, mu), (l + 1, al)])?)?;
                    rhs.add(-cx.c(2, mu, al).clone(), &corr(&[(k, al), (l, nu)])?)?;
                    rhs.add(cx.c(2, nu, al).clone(), &corr(&[(k, mu), (l, al)])?)?;
                }
                if l == -1 {
                    rhs.add(-(b(nu) * (b(nu) + rat(1))), &corr(&[(k, mu), (1, nu)])?)?;
                    for al in 0..n {
                        let w = -(rat(2) * b(nu) + rat(1)) * cx.c(1, nu, al);
                        rhs.add(w, &corr(&[(k, mu), (0, al)])?)?;
                    }
                }
            }
            Tilde1Corr => {
                let (part, m, a, k, be) = (ix[0], ix[1], c(2), ix[3], c(4));
                if part == 1 {
                    // The second pair of indices does not enter the one-point form.
                    if k != 0 || be != 0 {
                        return Ok(Eval::Structural(None));
                    }
                    lhs.add(rat(1), &cx.vf(&[&f.lt1], &[(m, a)])?)?;
                    rhs.add(rat(-1), &corr(&[(m + 1, a)])?)?;
                    for s in 0..n {
                        let up = cx.raise(s, |r| corr(&[(0, r)]))?;
                        rhs.add(rat(1), &corr(&[(m, a), (0, s)])?.mul(&up)?)?;
                    }
                } else {
                    lhs.add(rat(1), &cx.vf(&[&f.lt1], &[(m, a), (k, be)])?)?;
                    for s in 0..n {
                        let up = cx.raise(s, |r| corr(&[(0, r)]))?;
                        rhs.add(rat(1), &corr(&[(m, a), (k, be), (0, s)])?.mul(&up)?)?;
                    }
                }
            }
            TildeQuadForm => {
                let (m, a, k, be) = (ix[0], c(1), ix[2], c(3));
                for s in 0..n {
                    let up = cx.raise(s, |r| corr(&[(m, a), (0, r)]))?;
                    lhs.add(b(s), &up.mul(&corr(&[(1, s), (k, be)])?)?)?;
                    let up = cx.raise(s, |r| corr(&[(0, r), (k, be)]))?;
                    lhs.add(b(s), &corr(&[(m, a), (1, s)])?.mul(&up)?)?;
                    rhs.add(cx.c(1, a, s).clone(), &corr(&[(m + 1, s), (k, be)])?)?;
                    rhs.add(cx.c(1, be, s).clone(), &corr(&[(m, a), (k + 1, s)])?)?;
                    for r in 0..n {
                        let w = cx.c(1, s, r);
                        if w.is_zero_rational() {
                            continue;
                        }
                        let up = cx.raise(s, |q| corr(&[(m, a), (0, q)]))?;
                        rhs.add(-w.clone(), &up.mul(&corr(&[(0, r), (k, be)])?)?)?;
                    }
                }
                rhs.add(rat(m) + b(a) + rat(1), &corr(&[(m + 2, a), (k, be)])?)?;
                rhs.add(rat(k) + b(be) + rat(1), &corr(&[(m, a), (k + 2, be)])?)?;
            }
            PsiClosedForm1 | PsiClosedForm2 => {
                let nn = if self == PsiClosedForm1 { 1 } else { 2 };
                if ix[0] == 0 {
                    return Ok(Eval::Series(psi_displayed(cx.e, nn, &cx.p)?, psi_generic(cx.e, nn, &cx.p)?));
                }
                let shown = displayed_operator(cx.e, nn, cx.window)?;
                let built = build_operator(cx.ts, nn, cx.window)?;
                return Ok(Eval::Structural(compare_operators(&shown, &built)));
            }
        }
        Ok(Eval::Series(lhs.finish(), rhs.finish()))
    }
}

/// The right side shared by the Euler two-point lemma and the fundamental
/// recursion relation.
fn euler3_rhs(cx: &Ctx<'_>, rhs: &mut Acc, m: i64, a: usize, k: i64, be: usize) -> Result<()> {
    if m == 0 && k == 0 {
        rhs.add(cx.c_low(1, a, be).clone(), &cx.konst(rat(1)))?;
    }
    rhs.add(rat(m + k) + &cx.b[a] + &cx.b[be], &*cx.corr(&[(m, a), (k, be)])?)?;
    for g in 0..cx.n {
        rhs.add(cx.c(1, a, g).clone(), &*cx.corr(&[(m - 1, g), (k, be)])?)?;
        rhs.add(cx.c(1, be, g).clone(), &*cx.corr(&[(m, a), (k - 1, g)])?)?;
    }
    Ok(())
}

/// `sign ·` the two-point terms common to the `𝓛₀ 𝓛₀` and `𝓛₁` lemmas:
/// raised levels, `C` and `C²` corrections, and the `δδ (C²)` constant.
fn two_point_block(cx: &Ctx<'_>, acc: &mut Acc, k: i64, mu: usize, l: i64, nu: usize, sign: Rational) -> Result<()> {
    let x = rat(k) + &cx.b[mu];
    let y = rat(l) + &cx.b[nu];
    let corr = |ins: &[Ins]| cx.corr(ins);
    acc.add(&sign * &x * (&x + rat(1)), &*corr(&[(k + 1, mu), (l, nu)])?)?;
    acc.add(&sign * &y * (&y + rat(1)), &*corr(&[(k, mu), (l + 1, nu)])?)?;
    for al in 0..cx.n {
        acc.add(&sign * (rat(2) * &x + rat(1)) * cx.c(1, mu, al), &*corr(&[(k, al), (l, nu)])?)?;
        acc.add(&sign * (rat(2) * &y + rat(1)) * cx.c(1, nu, al), &*corr(&[(k, mu), (l, al)])?)?;
        acc.add(&sign * cx.c(2, mu, al), &*corr(&[(k - 1, al), (l, nu)])?)?;
        acc.add(&sign * cx.c(2, nu, al), &*corr(&[(k, mu), (l - 1, al)])?)?;
    }
    if k == 0 && l == 0 {
        acc.add(&sign * cx.c_low(2, mu, nu), &cx.konst(rat(1)))?;
    }
    Ok(())
}

trait IsZeroRational {
    fn is_zero_rational(&self) -> bool;
}

impl IsZeroRational for Rational {
    fn is_zero_rational(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

fn enumerate(dims: &[Dim], classes: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for d in dims {
        let range: Vec<i64> = match *d {
            Dim::Level(_, lo, hi) => (lo..=hi).collect(),
            Dim::Class(_) => (0..classes as i64).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|t| range.iter().map(move |&v| [t.clone(), vec![v]].concat()))
            .collect();
    }
    out
}

fn labels(dims: &[Dim], ix: &[i64]) -> Vec<String> {
    dims.iter()
        .zip(ix)
        .map(|(d, v)| match *d {
            Dim::Level("part", _, _) => format!("part={v}"),
            Dim::Level(name, _, _) => format!("{name}={v}"),
            Dim::Class(name) => format!("{name}={}", v + 1),
        })
        .collect()
}

/// Checks `id` for every index tuple in range. Tuples are evaluated in
/// parallel and reported in enumeration order.
pub fn verify_identity(e: &Engine, id: IdentityId, policy: &TruncationPolicy) -> Result<IdentityReport> {
    let cx = Ctx::new(e, policy);
    let fields = Fields::new(&cx)?;
    let dims = id.dims(&cx);
    let tuples = enumerate(&dims, cx.n);
    let tuples = tuples
        .par_iter()
        .map(|ix| {
            let failure = match id.eval(&cx, &fields, ix)? {
                Eval::Series(l, r) => compare(&l, &r),
                Eval::Structural(f) => f,
            };
            Ok(TupleResult { labels: labels(&dims, ix), passed: failure.is_none(), failure })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentityReport { id, policy: policy.clone(), tuples })
}
