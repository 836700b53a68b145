//! Counter-based random number generation.
//!
//! Every random draw in this crate is a pure function of structural
//! coordinates (seed, stream, and a few key words), so Monte Carlo runs are
//! bit-reproducible regardless of thread count or evaluation order. Gaussians
//! come from the inverse normal CDF applied to a 64-bit uniform, which avoids
//! rejection loops and keeps the draw count per coordinate fixed.

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Hashes a sequence of key words into a single 64-bit output.
///
/// Each word is offset by a position-dependent constant before mixing so that
/// permuted keys produce unrelated outputs.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    let mut state = GOLDEN;
    for (i, &w) in words.iter().enumerate() {
        state = mix64(state ^ w.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
    }
    mix64(state)
}

/// Maps a 64-bit word to a uniform in the open interval (0, 1).
#[inline]
pub fn uniform_open01(bits: u64) -> f64 {
    // 52 significant bits, offset by half a step; the offset is exactly
    // representable across the whole range, so 0 and 1 are unreachable.
    ((bits >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Standard normal draw keyed by (seed, stream, key words).
#[inline]
pub fn standard_normal(seed: u64, stream: u64, key: [u64; 3]) -> f64 {
    let bits = hash_words(&[seed, stream, key[0], key[1], key[2]]);
    inverse_normal_cdf(uniform_open01(bits))
}

/// Inverse of the standard normal CDF (quantile function).
///
/// Wichura's PPND16 rational approximations, accurate to ~1e-16 over (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946_1e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }

    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_match_reference_values() {
        // Reference values from the standard normal distribution.
        assert!((inverse_normal_cdf(0.5)).abs() < 1e-15);
        assert!((inverse_normal_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.841_344_746_068_542_9) - 1.0).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.025) + 1.959_963_984_540_054).abs() < 1e-12);
        assert!((inverse_normal_cdf(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_is_antisymmetric() {
        for &p in &[0.01, 0.1, 0.3, 0.45, 0.6, 0.9, 0.999] {
            let a = inverse_normal_cdf(p);
            let b = inverse_normal_cdf(1.0 - p);
            assert!((a + b).abs() < 1e-12, "p = {p}: {a} vs {b}");
        }
    }

    #[test]
    fn hash_is_deterministic_and_key_sensitive() {
        let a = hash_words(&[1, 2, 3]);
        assert_eq!(a, hash_words(&[1, 2, 3]));
        assert_ne!(a, hash_words(&[1, 3, 2]));
        assert_ne!(a, hash_words(&[2, 2, 3]));
    }

    #[test]
    fn uniform_stays_inside_open_interval() {
        for bits in [0u64, 1, u64::MAX, 0x8000_0000_0000_0000] {
            let u = uniform_open01(bits);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    /// Independent normal CDF via the complementary error function,
    /// computed from its series / continued-fraction representations.
    fn normal_cdf_oracle(x: f64) -> f64 {
        // erfc for z >= 0 by series (small z) or Lentz continued fraction.
        fn erfc_pos(z: f64) -> f64 {
            if z < 2.0 {
                // erf(z) = 2/sqrt(pi) sum_k (-1)^k z^(2k+1) / (k! (2k+1))
                let mut term = z;
                let mut sum = z;
                let mut k = 0.0;
                while term.abs() > 1e-18 * sum.abs() + 1e-300 {
                    k += 1.0;
                    term *= -z * z / k;
                    sum += term / (2.0 * k + 1.0);
                }
                1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
            } else {
                // erfc(z) = e^(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
                // evaluated by modified Lentz with b_j = z, a_j = j/2.
                let mut f = z;
                let mut c = z;
                let mut d = 0.0;
                for j in 1..300 {
                    let a = j as f64 / 2.0;
                    d = z + a * d;
                    if d == 0.0 {
                        d = 1e-30;
                    }
                    d = 1.0 / d;
                    c = z + a / c;
                    if c == 0.0 {
                        c = 1e-30;
                    }
                    let delta = c * d;
                    f *= delta;
                    if (delta - 1.0).abs() < 1e-16 {
                        break;
                    }
                }
                (-z * z).exp() / std::f64::consts::PI.sqrt() / f
            }
        }
        let z = x / std::f64::consts::SQRT_2;
        if z >= 0.0 {
            1.0 - 0.5 * erfc_pos(z)
        } else {
            0.5 * erfc_pos(-z)
        }
    }

    #[test]
    fn quantile_inverts_an_independent_cdf() {
        // Round-trip against the series/continued-fraction CDF, which shares
        // nothing with the rational quantile approximation.
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = inverse_normal_cdf(p);
            let back = normal_cdf_oracle(x);
            assert!((back - p).abs() < 1e-12, "p = {p}: round trip {back}");
        }
        // Far tails too.
        for &p in &[1e-8, 1e-5, 1e-3, 1.0 - 1e-5, 1.0 - 1e-8] {
            let back = normal_cdf_oracle(inverse_normal_cdf(p));
            assert!(
                ((back - p) / p.min(1.0 - p)).abs() < 1e-8,
                "tail p = {p}: {back}"
            );
        }
    }

    #[test]
    fn normal_draws_have_unit_moments() {
        let m = 200_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for i in 0..m {
            let z = standard_normal(7, 11, [0, i as u64, 0]);
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / m as f64;
        let var = sumsq / m as f64 - mean * mean;
        assert!(mean.abs() < 3.0 / (m as f64).sqrt(), "mean = {mean}");
        assert!((var - 1.0).abs() < 0.02, "var = {var}");
    }
}
