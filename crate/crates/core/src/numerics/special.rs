//! Special functions needed by the acquisition and verification code.
//!
//! `J0` and `Y0` use the Cephes rational approximations (two intervals split
//! at x = 5, Hankel asymptotic form beyond). `I0` is summed from its power
//! series for moderate arguments and from the large-argument asymptotic
//! expansion otherwise.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::{Error, Result};

const SQRT_FRAC_2_PI: f64 = 0.797_884_560_802_865_4;

/// Squares of the first two zeros of J0.
const J0_ZERO1_SQ: f64 = 5.783_185_962_946_784;
const J0_ZERO2_SQ: f64 = 30.471_262_343_662_087;

/// Evaluates a polynomial with coefficients ordered from highest degree down.
fn polevl(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Like [`polevl`] with an implicit leading coefficient of 1.
fn p1evl(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(1.0, |acc, &c| acc * x + c)
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 5.0 {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        let p = (z - J0_ZERO1_SQ) * (z - J0_ZERO2_SQ);
        return p * polevl(z, &RP) / p1evl(z, &RQ);
    }
    let (p, q) = hankel_pq(x);
    let xn = x - FRAC_PI_4;
    (p * xn.cos() - q * xn.sin()) * SQRT_FRAC_2_PI / x.sqrt()
}

/// Bessel function of the second kind, order zero. Defined for `x > 0`.
pub fn bessel_y0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Y0 is undefined at x = {x}")));
    }
    if x <= 5.0 {
        let z = x * x;
        let w = polevl(z, &YP) / p1evl(z, &YQ);
        return Ok(w + 2.0 / PI * x.ln() * bessel_j0(x));
    }
    let (p, q) = hankel_pq(x);
    let xn = x - FRAC_PI_4;
    Ok((p * xn.sin() + q * xn.cos()) * SQRT_FRAC_2_PI / x.sqrt())
}

/// Modulus/phase rational pair shared by J0 and Y0 for x > 5.
fn hankel_pq(x: f64) -> (f64, f64) {
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &PP) / polevl(z, &PQ);
    let q = w * polevl(z, &QP) / p1evl(z, &QQ);
    (p, q)
}

/// Hankel function of the second kind, order zero: `J0(x) - i Y0(x)`.
pub fn hankel2_0(x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j0(x), -bessel_y0(x)?))
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 30.0 {
        // sum_k ((x/2)^k / k!)^2, all terms positive
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > sum * 1e-17 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        // e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (kf * 8.0 * ax);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        ax.exp() / (2.0 * PI * ax).sqrt() * sum
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let px = PI * x;
    if px.abs() < 1e-4 {
        let p2 = px * px;
        return 1.0 - p2 / 6.0 + p2 * p2 / 120.0;
    }
    // sin(pi x) evaluated through the reduced argument keeps integer zeros exact
    let r = x - 2.0 * (x / 2.0).round();
    let s = if r.abs() == 1.0 { 0.0 } else { (PI * r).sin() };
    s / px
}

static RP: [f64; 4] = [
    -4.794_432_209_782_018e9,
    1.956_174_919_465_565_7e12,
    -2.492_483_443_609_677_2e14,
    9.708_622_510_473_064e15,
];
static RQ: [f64; 8] = [
    4.995_631_471_526_51e2,
    1.737_854_016_763_747e5,
    4.844_096_583_399_621e7,
    1.118_555_370_453_568_3e10,
    2.112_775_201_154_892e12,
    3.105_182_298_574_225_6e14,
    3.181_219_559_432_049_6e16,
    1.710_862_940_810_431_5e18,
];
static PP: [f64; 7] = [
    7.969_367_292_973_471e-4,
    8.283_523_921_074_408e-2,
    1.239_533_716_464_143,
    5.447_250_030_587_687,
    8.747_165_001_998_17,
    5.303_240_382_353_949,
    1.0,
];
static PQ: [f64; 7] = [
    9.244_088_105_588_637e-4,
    8.562_884_743_544_745e-2,
    1.253_527_439_010_589_5,
    5.470_977_403_304_171,
    8.761_908_832_370_695,
    5.306_052_882_353_947,
    1.0,
];
static QP: [f64; 8] = [
    -1.136_638_388_984_691_6e-2,
    -1.282_527_186_705_093_1,
    -1.955_395_442_577_359_7e1,
    -9.320_601_521_237_683e1,
    -1.776_811_679_804_880_6e2,
    -1.470_775_051_549_511_8e2,
    -5.141_053_267_665_993e1,
    -6.050_143_506_007_285,
];
static QQ: [f64; 7] = [
    6.431_782_561_181_78e1,
    8.564_300_259_769_806e2,
    3.882_401_836_054_016_3e3,
    7.240_467_741_956_525e3,
    5.930_727_011_873_169e3,
    2.062_093_316_603_278_3e3,
    2.420_057_402_402_914e2,
];
static YP: [f64; 8] = [
    1.559_243_678_552_357_4e4,
    -1.466_392_959_039_716e7,
    5.435_264_770_518_765e9,
    -9.821_360_657_179_115e11,
    8.759_063_943_953_67e13,
    -3.466_283_033_847_297e15,
    4.427_332_685_725_698_4e16,
    -1.849_508_004_369_866_8e16,
];
static YQ: [f64; 7] = [
    1.041_283_536_642_598_4e3,
    6.261_073_301_371_35e5,
    2.689_196_333_938_141_5e8,
    8.640_024_871_039_35e10,
    2.029_796_127_501_055_5e13,
    3.171_577_528_429_750_5e15,
    2.505_962_561_726_530_6e17,
];

#[cfg(test)]
mod tests {
    use super::*;

    // (x, J0(x), Y0(x)) from 40-digit mpmath
    const JY_REF: [(f64, f64, f64); 11] = [
        (0.5, 0.93846980724081290423, -0.44451873350670655715),
        (1.0, 0.76519768655796655145, 0.088256964215676957983),
        (2.404825557695773, -6.1087652597367303971e-17, 0.50992438344847906518),
        (3.0, -0.26005195490193343762, 0.37685001001279038197),
        (5.0, -0.17759677131433830435, -0.30851762524903378007),
        (7.5, 0.26633965788037839687, 0.11731328614820863084),
        (8.0, 0.17165080713755390609, 0.22352148938756622053),
        (12.3, 0.11079795030758543979, -0.19859309463502620836),
        (20.0, 0.16702466434058315473, 0.062640596809383831162),
        (33.3, 0.063338485947521251681, 0.12289749913503732589),
        (50.0, 0.055812327669251815005, -0.098064995470077079029),
    ];

    const I0_REF: [(f64, f64); 10] = [
        (0.0, 1.0),
        (0.5, 1.0634833707413235193),
        (1.0, 1.2660658777520083356),
        (3.0, 4.8807925858650240856),
        (6.31, 89.276344036462899386),
        (10.0, 2815.7166284662544715),
        (14.18, 153936.7478949283341),
        (25.0, 5774560606.4663103158),
        (40.0, 14894774793419899.924),
        (50.0, 2.9325537838493363267e+20),
    ];

    #[test]
    fn j0_y0_against_reference() {
        for &(x, j, y) in &JY_REF {
            assert!((bessel_j0(x) - j).abs() < 1e-10, "J0({x})");
            assert!((bessel_j0(-x) - j).abs() < 1e-10, "J0(-{x})");
            assert!((bessel_y0(x).unwrap() - y).abs() < 1e-10, "Y0({x})");
        }
    }

    #[test]
    fn limits() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!(bessel_y0(1e-12).unwrap() < -17.0);
        assert!(bessel_y0(1e-300).unwrap() < bessel_y0(1e-12).unwrap());
        assert!(bessel_y0(0.0).is_err());
        assert!(bessel_y0(-1.0).is_err());
    }

    #[test]
    fn i0_against_reference() {
        for &(x, v) in &I0_REF {
            assert!(((bessel_i0(x) - v) / v).abs() < 1e-13, "I0({x})");
            assert_eq!(bessel_i0(-x), bessel_i0(x));
        }
    }

    #[test]
    fn i0_matches_64_term_series() {
        let x: f64 = 6.31;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        for k in 1..64 {
            term *= (x / 2.0).powi(2) / ((k * k) as f64);
            sum += term;
        }
        assert!((bessel_i0(x) - sum).abs() / sum < 1e-10);
    }

    #[test]
    fn i0_branches_agree_at_switch() {
        let below = bessel_i0(30.0);
        let above = bessel_i0(30.0 + 1e-12);
        // the 1e-12 step itself moves I0 by about 1e-12 relative
        assert!(((below - above) / below).abs() < 1e-11, "{below} {above}");
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        for k in 1..20 {
            assert_eq!(sinc(k as f64), 0.0);
            assert_eq!(sinc(-(k as f64)), 0.0);
        }
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
        assert!((sinc(1e-6) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn sinc_partial_sum_is_one() {
        // truncated Poisson sum; 50-digit reference value of the same partial sum
        let s: f64 = (-50..=50).map(|n| sinc(n as f64 + 0.3)).sum();
        assert!((s - 0.999969714555587).abs() < 1e-12, "{s}");
        assert!((s - 1.0).abs() < 1e-4);
    }

    #[test]
    fn hankel_conjugate_pair() {
        let h = hankel2_0(3.0).unwrap();
        assert_eq!(h.re, bessel_j0(3.0));
        assert_eq!(h.im, -bessel_y0(3.0).unwrap());
    }
}
