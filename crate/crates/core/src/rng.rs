//! Counter-based random numbers: the value for `(seed, stream, counter)` is a
//! pure function of its inputs, so per-neuron draws do not depend on which
//! worker evaluates them or in which order.

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn hash3(seed: u64, stream: u64, counter: u64) -> u64 {
    let a = mix(seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let b = mix(a ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    mix(b ^ counter.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Uniform sample in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    (hash3(seed, stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Poisson sample by CDF inversion of `u`; meant for small means.
#[inline]
pub fn poisson_inverse(u: f64, mean: f64) -> u32 {
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0;
    while u >= cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_inverse_moments() {
        assert_eq!(poisson_inverse(0.0, 0.3), 0);
        assert_eq!(poisson_inverse(0.5, 0.0), 0);
        let mean = 0.3;
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|i| poisson_inverse(uniform(4, 0, i), mean) as f64).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        assert!((m - mean).abs() < 0.01 && (v - mean).abs() < 0.01, "{m} {v}");
    }

    #[test]
    fn pure_function_of_inputs() {
        assert_eq!(hash3(1, 2, 3), hash3(1, 2, 3));
        assert_ne!(hash3(1, 2, 3), hash3(1, 3, 2));
        assert_ne!(hash3(1, 2, 3), hash3(2, 2, 3));
    }

    #[test]
    fn uniform_mean_and_range() {
        let n = 200_000u64;
        let mut sum = 0.0;
        for i in 0..n {
            let u = uniform(9, i % 97, i);
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        // Standard error is ~0.00065.
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }
}
