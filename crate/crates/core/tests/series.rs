use gw_core::{NovikovDegree, SeriesMonomial, TruncatedSeries, TruncationPolicy, VarId};
use num_rational::Ratio;

type Small = Ratio<i64>;

fn pol() -> TruncationPolicy {
    TruncationPolicy::uniform(3, 1, 1, 1)
}

fn mono(vars: &[VarId], q: u32) -> SeriesMonomial {
    SeriesMonomial::from_vars(vars, NovikovDegree(vec![q]))
}

#[test]
fn ring_works_over_machine_rationals() {
    let x = VarId::new(0, 1);
    let y = VarId::new(1, 2);
    let a: TruncatedSeries<Small> =
        TruncatedSeries::from_terms([(mono(&[], 0), Ratio::new(1, 2)), (mono(&[x], 0), Ratio::new(2, 3))], pol());
    let b: TruncatedSeries<Small> =
        TruncatedSeries::from_terms([(mono(&[y], 1), Ratio::new(3, 4)), (mono(&[x], 0), Ratio::new(-2, 3))], pol());
    let sum = a.add(&b).unwrap();
    assert_eq!(sum.coefficient(&mono(&[x], 0)), Ratio::from_integer(0));
    assert_eq!(sum.len(), 2);
    let prod = a.mul(&b).unwrap();
    assert_eq!(prod.coefficient(&mono(&[x, y], 1)), Ratio::new(1, 2));
    assert_eq!(prod.coefficient(&mono(&[x, x], 0)), Ratio::new(-4, 9));
    assert_eq!(prod.derive(x).coefficient(&mono(&[x], 0)), Ratio::new(-8, 9));

    // The same computation over big rationals agrees term by term.
    let big = |s: &TruncatedSeries<Small>| s.map(|c| gw_core::ratio(*c.numer(), *c.denom()));
    assert_eq!(big(&prod), big(&a).mul(&big(&b)).unwrap());
}
