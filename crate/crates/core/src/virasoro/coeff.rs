//! The operator coefficients `A^{(j)}_α(m, n)` and `B^{(j)}_α(k, n)`, written
//! as complement products over subsets instead of Gamma-function ratios so
//! that integer `b` poses no problem.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{rat, Rational};

/// `Σ_{|S| = j, S ⊆ ls} Π_{l ∉ S} (b + l)`.
fn complement_sum(b: &Rational, ls: &[i64], j: usize) -> Rational {
    // Coefficients of Π_l (x + (b + l)) in x: the coefficient of x^j is the sum
    // over subsets S of size j of the product over the complement.
    let mut poly = vec![Rational::one()];
    for &l in ls {
        let root = b + rat(l);
        let mut next = vec![Rational::zero(); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c * &root;
            next[i + 1] += c;
        }
        poly = next;
    }
    poly.get(j).cloned().unwrap_or_else(Rational::zero)
}

/// `A^{(j)}(m, n)` for `0 <= j <= n + 1`, `m, n >= 0`.
pub fn coeff_a(b: &Rational, j: i64, m: i64, n: i64) -> Result<Rational> {
    if m < 0 || n < 0 || !(0..=n + 1).contains(&j) {
        return Err(Error::IndexOutOfRange(format!("A^({j})({m},{n})")));
    }
    let ls: Vec<i64> = (m..=m + n).collect();
    Ok(complement_sum(b, &ls, j as usize))
}

/// `B^{(j)}(k, n)` for `0 <= j <= n - 1`, `0 <= k <= n - j - 1`.
pub fn coeff_b(b: &Rational, j: i64, k: i64, n: i64) -> Result<Rational> {
    if !(0..n).contains(&j) || !(0..n - j).contains(&k) {
        return Err(Error::IndexOutOfRange(format!("B^({j})({k},{n})")));
    }
    let ls: Vec<i64> = (-k - 1..=n - k - 1).collect();
    let sign = if k % 2 == 0 { -Rational::one() } else { Rational::one() };
    Ok(sign * complement_sum(b, &ls, j as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn low_order_coefficients() {
        for b in [ratio(-1, 2), rat(0), rat(1), ratio(3, 2), ratio(2, 7)] {
            for m in 0..3 {
                let x = &b + rat(m);
                assert_eq!(coeff_a(&b, 0, m, 1).unwrap(), &x * (&x + rat(1)));
                assert_eq!(coeff_a(&b, 1, m, 1).unwrap(), rat(2) * &x + rat(1));
                assert_eq!(coeff_a(&b, 2, m, 1).unwrap(), rat(1));
                assert_eq!(coeff_a(&b, 1, m, 2).unwrap(), rat(3) * &x * &x + rat(6) * &x + rat(2));
                assert_eq!(coeff_a(&b, 2, m, 2).unwrap(), rat(3) * (&x + rat(1)));
                assert_eq!(coeff_a(&b, 3, m, 2).unwrap(), rat(1));
            }
            assert_eq!(coeff_b(&b, 0, 0, 1).unwrap(), &b * (rat(1) - &b));
            assert_eq!(coeff_b(&b, 1, 0, 2).unwrap(), -(rat(3) * &b * &b - rat(1)));
            assert_eq!(coeff_b(&b, 0, 0, 2).unwrap(), -((&b - rat(1)) * &b * (&b + rat(1))));
        }
    }

    #[test]
    fn index_ranges() {
        let b = rat(0);
        assert!(coeff_a(&b, 3, 0, 1).is_err());
        assert!(coeff_a(&b, -1, 0, 1).is_err());
        assert!(coeff_b(&b, 1, 0, 1).is_err());
        assert!(coeff_b(&b, 0, 2, 2).is_err());
    }
}
