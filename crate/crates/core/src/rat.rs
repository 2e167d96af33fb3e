//! Exact rational arithmetic for thresholds, densities, and bounds.
//!
//! Every comparison against a fraction in this crate goes through `Rat`;
//! floating point appears only in the closed-form tail bound of the
//! reservation process. Values stay well inside `i64` at the intended
//! scales (vertex counts in the low thousands, edge counts below 2^25).

use crate::error::{Error, Result};

pub type Rat = num::rational::Ratio<i64>;

/// `p/q` as an exact rational. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p, q)
}

/// A count as an exact rational.
pub fn nat(n: usize) -> Rat {
    Rat::from_integer(n as i64)
}

/// Parses "p/q" or a bare integer "p"; requires q > 0.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p, q),
        None => (s, "1"),
    };
    let p: i64 = p
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("bad rational numerator in {s:?}")))?;
    let q: i64 = q
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("bad rational denominator in {s:?}")))?;
    if q <= 0 {
        return Err(Error::input(format!("rational denominator must be positive in {s:?}")));
    }
    Ok(Rat::new(p, q))
}

/// Renders in lowest terms, always with an explicit denominator.
pub fn format_rat(r: Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Largest integer ≤ r, as usize; requires r ≥ 0.
pub fn floor_usize(r: Rat) -> usize {
    assert!(r >= Rat::from_integer(0), "floor_usize on negative rational");
    (r.numer().div_euclid(*r.denom())) as usize
}

/// Smallest integer ≥ r, as usize; requires r ≥ 0.
pub fn ceil_usize(r: Rat) -> usize {
    assert!(r >= Rat::from_integer(0), "ceil_usize on negative rational");
    (r.ceil().to_integer()) as usize
}

/// Smallest integer s with s^4 ≥ k^3, i.e. ⌈k^{3/4}⌉ computed exactly.
pub fn ceil_pow_3_4(k: usize) -> usize {
    let target = (k as u128).pow(3);
    let mut lo = 0u128;
    let mut hi = (k as u128) + 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if mid.pow(4) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo as usize
}
