//! Genus-0 descendent invariants and their generating functions.
//!
//! [`Engine::invariant`] applies, in order: the selection rule, the
//! degree-zero evaluation, the divisor lift for fewer than three insertions,
//! topological recursion on the first insertion of maximal level, and for
//! primary correlators the string equation, the divisor equation and finally
//! the [`PrimaryBackend`]. Each step lowers the level sum, the number of
//! insertions or the degree, so the recursion terminates.

mod backend;
mod cache;
mod generating;
mod key;
mod kontsevich;
mod reduce;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::Zero;

pub use backend::PrimaryBackend;
pub use cache::{parse_records, InvariantCache};
pub use key::{BilinearCombination, CorrelatorKey, LinearCombination};
pub use kontsevich::{kontsevich_nd, kontsevich_table};
pub use reduce::{
    degree_zero_value, dilaton_reduce, dimension_admissible, divisor_lift, divisor_reduce,
    string_reduce, trr_reduce,
};

use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::series::{TruncationPolicy, VarId};
use crate::target::{Matrix, TargetSpace};
use crate::Series;

/// A single reduction rule, for evaluating a correlator along a chosen route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    DegreeZero,
    String,
    Dilaton,
    Divisor(usize),
    Lift,
    Trr(usize),
}

type SeriesMemo = Mutex<HashMap<(Vec<VarId>, TruncationPolicy), Arc<Series>>>;

pub struct Engine {
    ts: TargetSpace,
    eta_inv: Matrix,
    backend: PrimaryBackend,
    cache: Arc<InvariantCache>,
    series: SeriesMemo,
}

impl Engine {
    /// An engine with a fresh in-memory cache. The target is not validated,
    /// so deliberately perturbed data can be fed through.
    pub fn new(ts: TargetSpace, backend: PrimaryBackend) -> Result<Self> {
        let cache = Arc::new(InvariantCache::new(ts.fingerprint()));
        Self::with_cache(ts, backend, cache)
    }

    pub fn with_cache(ts: TargetSpace, backend: PrimaryBackend, cache: Arc<InvariantCache>) -> Result<Self> {
        if cache.fingerprint() != ts.fingerprint() {
            return Err(Error::CacheMismatch(format!(
                "cache built for {}, active target is {}",
                cache.fingerprint(),
                ts.fingerprint()
            )));
        }
        backend.check_target(&ts)?;
        let eta_inv = ts.eta_inverse()?;
        Ok(Engine { ts, eta_inv, backend, cache, series: Mutex::default() })
    }

    /// Engine for a built-in target with its natural backend.
    pub fn for_preset(name: &str) -> Result<Self> {
        let ts = crate::target::preset(name)?;
        let backend = PrimaryBackend::for_preset(name).expect("every preset has a backend");
        Self::new(ts, backend)
    }

    pub fn target(&self) -> &TargetSpace {
        &self.ts
    }

    pub fn eta_inverse(&self) -> &Matrix {
        &self.eta_inv
    }

    pub fn backend(&self) -> &PrimaryBackend {
        &self.backend
    }

    pub fn cache(&self) -> &Arc<InvariantCache> {
        &self.cache
    }

    pub fn admissible(&self, key: &CorrelatorKey) -> bool {
        dimension_admissible(&self.ts, key)
    }

    /// `⟨τ_{m1}(O_{α1}) ⋯⟩_{0,A}`.
    pub fn invariant(&self, key: &CorrelatorKey) -> Result<Rational> {
        if key.degree().rank() != self.ts.novikov_rank {
            return Err(Error::Validation(format!(
                "degree {:?} does not have rank {}",
                key.degree().0,
                self.ts.novikov_rank
            )));
        }
        if let Some(v) = key.insertions().iter().find(|v| v.class == 0 || v.class as usize > self.ts.classes) {
            return Err(Error::IndexOutOfRange(format!("class {} in {key}", v.class)));
        }
        self.value(key)
    }

    fn value(&self, key: &CorrelatorKey) -> Result<Rational> {
        if !self.admissible(key) {
            return Ok(Rational::zero());
        }
        if let Some(v) = self.cache.get(key) {
            return Ok(v);
        }
        let v = self.compute(key)?;
        self.cache.publish(key.clone(), v.clone());
        Ok(v)
    }

    fn compute(&self, key: &CorrelatorKey) -> Result<Rational> {
        if key.degree().is_zero() {
            return Ok(degree_zero_value(&self.ts, key));
        }
        if key.len() < 3 {
            return self.eval_linear(&divisor_lift(&self.ts, key)?);
        }
        if let Some(i) = key.first_max_level() {
            return self.eval_bilinear(&trr_reduce(&self.ts, &self.eta_inv, key, i)?);
        }
        if key.contains(VarId::PUNCTURE) {
            return self.eval_linear(&string_reduce(&self.ts, key)?);
        }
        if key.len() >= 4 {
            for (i, d) in self.ts.divisors.iter().enumerate() {
                if key.contains(VarId::new(0, d.class)) {
                    return self.eval_linear(&divisor_reduce(&self.ts, key, i)?);
                }
            }
        }
        self.backend.primary_value(key)
    }

    pub fn eval_linear(&self, lc: &LinearCombination) -> Result<Rational> {
        let mut acc = lc.constant.clone();
        for (c, k) in &lc.terms {
            let v = self.value(k)?;
            if !v.is_zero() {
                acc += c * v;
            }
        }
        Ok(acc)
    }

    pub fn eval_bilinear(&self, bc: &BilinearCombination) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (c, k1, k2) in &bc.terms {
            let v1 = self.value(k1)?;
            if v1.is_zero() {
                continue;
            }
            let v2 = self.value(k2)?;
            if !v2.is_zero() {
                acc += c * v1 * v2;
            }
        }
        Ok(acc)
    }

    /// Evaluates `key` by first applying `route`, then the default order on
    /// the resulting correlators. `None` when the route does not apply.
    pub fn invariant_by_route(&self, key: &CorrelatorKey, route: Route) -> Result<Option<Rational>> {
        let step = match route {
            Route::DegreeZero => {
                return Ok(key.degree().is_zero().then(|| degree_zero_value(&self.ts, key)));
            }
            Route::String => string_reduce(&self.ts, key).map(|lc| self.eval_linear(&lc)),
            Route::Dilaton => dilaton_reduce(key).map(|lc| self.eval_linear(&lc)),
            Route::Divisor(i) => divisor_reduce(&self.ts, key, i).map(|lc| self.eval_linear(&lc)),
            Route::Lift => divisor_lift(&self.ts, key).map(|lc| self.eval_linear(&lc)),
            Route::Trr(i) => trr_reduce(&self.ts, &self.eta_inv, key, i).map(|bc| self.eval_bilinear(&bc)),
        };
        match step {
            Ok(v) => v.map(Some),
            Err(Error::NotApplicable(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Every route that applies to `key`.
    pub fn applicable_routes(&self, key: &CorrelatorKey) -> Vec<Route> {
        let mut routes = vec![Route::DegreeZero, Route::String, Route::Dilaton];
        routes.extend((0..self.ts.divisors.len()).map(Route::Divisor));
        if !key.degree().is_zero() && self.ts.divisor_for(key.degree()).is_some() {
            routes.push(Route::Lift);
        }
        routes.extend((0..key.len()).filter(|&i| key.insertions()[i].level > 0).map(Route::Trr));
        routes
    }
}
