//! Bessel functions of the first kind, orders 0 and 1.
//!
//! Both are computed together by Miller's backward recurrence normalised with
//! `J0 + 2 Σ J_2k = 1`, which is accurate to a few ulps of the normalisation
//! sum for any moderate argument. Small arguments use the power series.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 1.0;
const RESCALE: f64 = 1e250;

/// `(J0(x), J1(x))`.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (j0, j1) = if ax < SERIES_LIMIT { series_j01(ax) } else { miller_j01(ax) };
    // J1 is odd, J0 even.
    (j0, if x < 0.0 { -j1 } else { j1 })
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j01(x).0
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j01(x).1
}

fn series_j01(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..30 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.abs() < 1e-18 * s0.abs() && t1.abs() < 1e-18 * s1.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (s0, s1)
}

fn miller_j01(x: f64) -> (f64, f64) {
    // Start order well above x so the recurrence settles onto the minimal
    // solution before reaching the low orders.
    let start = {
        let m = (x + 20.0 + 8.0 * x.sqrt()).ceil() as usize;
        m + (m % 2)
    };
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut j1 = 0.0;
    let mut k = start;
    while k > 0 {
        let prev = k as f64 * two_over_x * cur - next; // J_{k-1}
        next = cur;
        cur = prev;
        k -= 1;
        if k == 1 {
            j1 = cur;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            j1 /= RESCALE;
        }
    }
    let j0 = cur;
    norm += j0;
    (j0 / norm, j1 / norm)
}

/// `2 J1(x) / x`, the normalised disc column-density transform, with the
/// `x → 0` limit handled.
pub fn jinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 8.0
    } else {
        2.0 * bessel_j1(x) / x
    }
}

/// `n`-th positive zero of J1 (`n >= 1`), refined by Newton's method from the
/// McMahon expansion.
pub fn bessel_j1_zero(n: usize) -> f64 {
    assert!(n >= 1, "zeros are numbered from 1");
    let beta = (n as f64 + 0.25) * PI;
    let mut x = beta - 3.0 / (8.0 * beta) + 3.0 / (128.0 * beta.powi(3));
    for _ in 0..50 {
        let (j0, j1) = bessel_j01(x);
        let d = j0 - j1 / x;
        let step = j1 / d;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // Abramowitz & Stegun table 9.1.
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j1(10.0) - 0.043_472_746_168_861_44).abs() < 1e-15);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j0(0.0), 1.0);
    }

    #[test]
    fn parity() {
        for &x in &[0.3, 2.0, 17.5] {
            assert_eq!(bessel_j1(-x), -bessel_j1(x));
            assert_eq!(bessel_j0(-x), bessel_j0(x));
        }
    }

    #[test]
    fn first_zeros() {
        assert!((bessel_j1_zero(1) - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_j1_zero(2) - 7.015_586_669_815_619).abs() < 1e-12);
        assert!((bessel_j1_zero(3) - 10.173_468_135_062_722).abs() < 1e-12);
    }

    #[test]
    fn jinc_is_one_at_origin() {
        assert_eq!(jinc(0.0), 1.0);
        assert!((jinc(1e-3) - (1.0 - 1e-6 / 8.0)).abs() < 1e-14);
    }
}
