use crate::scalar::Scalar;

/// Golden-section search for a maximizer of `f` on `[lo, hi]`, stopping
/// once the bracket is narrower than `bracket`. Unimodality is assumed, so
/// callers compare the result against the endpoints themselves.
pub(crate) fn golden_max<T: Scalar>(f: impl Fn(T) -> T, lo: T, hi: T, bracket: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    if b <= a {
        return a;
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > bracket && iterations < 200 {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}
