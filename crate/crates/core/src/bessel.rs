//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_MAX: f64 = 8.0;
const RECURRENCE_MAX: f64 = 25.0;

/// `J_0(x)` to about `1e-14` absolute accuracy on the whole real line.
///
/// Power series for `|x| <= 8`, Miller's backward recurrence normalized by
/// `J_0 + 2 sum_k J_2k = 1` for `8 < |x| <= 25`, and the Hankel asymptotic
/// expansion beyond that.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= SERIES_MAX {
        j0_series(x)
    } else if x <= RECURRENCE_MAX {
        j0_miller(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k as f64 > 0.5 * x {
            break;
        }
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    let start = (x + 20.0 + 8.0 * x.sqrt()) as usize;
    let start = start + start % 2;
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-30; // J_n
    let mut norm = 0.0;
    for n in (1..=start).rev() {
        if n % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += cur;
    cur / norm
}

fn j0_asymptotic(x: f64) -> f64 {
    let z = 8.0 * x;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (k as f64 * z);
        }
        if term > last {
            break;
        }
        last = term;
        // k even contributes to P with sign (-1)^{k/2}, k odd to Q with (-1)^{(k+1)/2}
        match k % 4 {
            0 => p += term,
            1 => q -= term,
            2 => p -= term,
            _ => q += term,
        }
        if term < 1e-18 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
