use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::scalar::Rational;

fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let mut out = BigInt::one();
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// `[N_1, …, N_dmax]`: degree-d rational plane curves through `3d - 1` points.
pub fn kontsevich_table(dmax: u32) -> Vec<BigInt> {
    let mut n: Vec<BigInt> = vec![BigInt::zero()];
    for d in 1..=dmax as i64 {
        if d == 1 {
            n.push(BigInt::one());
            continue;
        }
        let mut acc = BigInt::zero();
        for d1 in 1..d {
            let d2 = d - d1;
            let pair = &n[d1 as usize] * &n[d2 as usize];
            let w = BigInt::from(d1 * d1 * d2 * d2) * binomial(3 * d - 4, 3 * d1 - 2)
                - BigInt::from(d1 * d1 * d1 * d2) * binomial(3 * d - 4, 3 * d1 - 1);
            acc += pair * w;
        }
        n.push(acc);
    }
    n.remove(0);
    n
}

/// `N_d` as an exact rational.
pub fn kontsevich_nd(d: u32) -> Rational {
    assert!(d >= 1, "N_d needs d >= 1");
    Rational::from_integer(kontsevich_table(d).pop().expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_values() {
        let t: Vec<i64> = kontsevich_table(5).iter().map(|x| x.try_into().unwrap()).collect();
        assert_eq!(t, vec![1, 1, 12, 620, 87304]);
    }
}
