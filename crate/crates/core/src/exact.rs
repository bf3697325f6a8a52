//! Order-independent summation of `f64` values.
//!
//! [`ExactSum`] holds the running sum as a fixed-point integer spanning the
//! whole binary range of `f64` (32-bit limbs from `2^-1074` upward), so every
//! addition is exact. Sums are therefore associative and commutative down to
//! the last bit, and merging partial sums from parallel workers reproduces a
//! sequential pass exactly, whatever the scheduling.

use std::cmp::Ordering;

const LIMBS: usize = 68;
const LIMB_BITS: u32 = 32;
const LIMB_MASK: i64 = (1 << LIMB_BITS) - 1;
/// Bit position of `2^0` in the fixed-point layout.
const ZERO_EXP: i32 = 1074;
/// Number of unnormalized additions a limb can absorb without overflow.
const CARRY_INTERVAL: u32 = 1 << 28;

#[derive(Clone, Debug)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u32,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self {
            limbs: [0; LIMBS],
            pending: 0,
        }
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `x` exactly. Panics on non-finite input.
    pub fn add(&mut self, x: f64) {
        assert!(x.is_finite(), "ExactSum::add({x})");
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let pos = (exp + ZERO_EXP) as u32;
        let limb = (pos / LIMB_BITS) as usize;
        let shifted = (mant as u128) << (pos % LIMB_BITS);
        for k in 0..3 {
            let chunk = ((shifted >> (LIMB_BITS * k)) as i64) & LIMB_MASK;
            if chunk != 0 {
                if negative {
                    self.limbs[limb + k as usize] -= chunk;
                } else {
                    self.limbs[limb + k as usize] += chunk;
                }
            }
        }
        self.bump(1);
    }

    /// Adds another exact sum.
    pub fn merge(&mut self, other: &ExactSum) {
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a += *b;
        }
        self.bump(other.pending.max(1));
    }

    fn bump(&mut self, n: u32) {
        self.pending = self.pending.saturating_add(n);
        if self.pending >= CARRY_INTERVAL {
            self.normalize();
        }
    }

    /// Brings limbs `0..LIMBS-1` into `[0, 2^32)`; the top limb keeps the sign.
    /// The resulting representation is unique for a given value.
    fn normalize(&mut self) {
        for i in 0..LIMBS - 1 {
            let carry = self.limbs[i] >> LIMB_BITS;
            self.limbs[i] -= carry << LIMB_BITS;
            self.limbs[i + 1] += carry;
        }
        self.pending = 0;
    }

    fn canonical(&self) -> [i64; LIMBS] {
        let mut c = self.clone();
        c.normalize();
        c.limbs
    }

    /// Nearest `f64` to the exact sum (faithful rounding). Deterministic: equal
    /// exact values give bitwise-equal results.
    pub fn value(&self) -> f64 {
        let mut limbs = self.canonical();
        let negative = limbs[LIMBS - 1] < 0;
        if negative {
            for l in limbs.iter_mut() {
                *l = -*l;
            }
            let mut tmp = ExactSum { limbs, pending: 0 };
            tmp.normalize();
            limbs = tmp.limbs;
        }
        let top = match limbs.iter().rposition(|&l| l != 0) {
            Some(i) => i,
            None => return 0.0,
        };
        let lo = top.saturating_sub(2);
        let mut mant = 0.0f64;
        for i in (lo..=top).rev() {
            mant = mant * 4294967296.0 + limbs[i] as f64;
        }
        let magnitude = ldexp(mant, LIMB_BITS as i32 * lo as i32 - ZERO_EXP);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

impl PartialEq for ExactSum {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for ExactSum {}

impl PartialOrd for ExactSum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

/// `x * 2^exp` for `exp >= -1074`, rounding at most once.
fn ldexp(mut x: f64, mut exp: i32) -> f64 {
    let pow2 = |e: i32| f64::from_bits(((e + 1023) as u64) << 52);
    while exp > 1000 {
        x *= pow2(1000);
        exp -= 1000;
    }
    if exp < -1022 {
        x *= pow2(exp + 1022);
        exp = -1022;
    }
    x * pow2(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum_of(xs: &[f64]) -> ExactSum {
        let mut s = ExactSum::new();
        for &x in xs {
            s.add(x);
        }
        s
    }

    #[test]
    fn simple_values() {
        assert_eq!(sum_of(&[]).value(), 0.0);
        assert_eq!(sum_of(&[1.5, 2.25]).value(), 3.75);
        assert_eq!(sum_of(&[1e300, 1.0, -1e300]).value(), 1.0);
        assert_eq!(sum_of(&[-3.0, 1.0]).value(), -2.0);
        assert_eq!(sum_of(&[f64::MIN_POSITIVE / 8.0]).value(), f64::MIN_POSITIVE / 8.0);
        assert_eq!(sum_of(&[f64::MAX, -f64::MAX, 5e-324]).value(), 5e-324);
        assert_eq!(sum_of(&[0.1; 10]).value(), 1.0);
    }

    #[test]
    fn survives_carry_normalization() {
        let mut s = ExactSum::new();
        for _ in 0..(CARRY_INTERVAL as u64 + 10) / 1024 {
            for _ in 0..1024 {
                s.add(4294967295.0);
            }
        }
        let n = ((CARRY_INTERVAL as u64 + 10) / 1024 * 1024) as f64;
        assert_eq!(s.value(), 4294967295.0 * n);
    }

    proptest! {
        #[test]
        fn order_independent(xs in prop::collection::vec(-1e6f64..1e6, 0..60), split in 0usize..60) {
            let split = split.min(xs.len());
            let seq = sum_of(&xs);
            let mut rev = xs.clone();
            rev.reverse();
            let mut a = sum_of(&xs[..split]);
            let b = sum_of(&xs[split..]);
            a.merge(&b);
            prop_assert_eq!(&a, &seq);
            prop_assert_eq!(a.value().to_bits(), seq.value().to_bits());
            prop_assert_eq!(sum_of(&rev).value().to_bits(), seq.value().to_bits());
        }

        #[test]
        fn close_to_naive(xs in prop::collection::vec(0.0f64..1e3, 1..100)) {
            let naive: f64 = xs.iter().sum();
            let exact = sum_of(&xs).value();
            prop_assert!((exact - naive).abs() <= 1e-12 * naive.max(1.0));
        }

        #[test]
        fn wide_magnitudes(exps in prop::collection::vec(-300i32..300, 1..40)) {
            let xs: Vec<f64> = exps.iter().map(|&e| 10f64.powi(e)).collect();
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            // summing smallest first is accurate to a few ulps
            let reference: f64 = sorted.iter().sum();
            let exact = sum_of(&xs).value();
            prop_assert!((exact - reference).abs() <= 4.0 * f64::EPSILON * reference);
        }
    }
}
