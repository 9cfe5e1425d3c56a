//! Random prime generation for Paillier keys.

use alloc::vec;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_core::RngCore;

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

const MILLER_RABIN_ROUNDS: usize = 40;

/// Uniform integer with exactly `bits` bits (top bit set).
pub(crate) fn random_bits<R: RngCore>(rng: &mut R, bits: u32) -> BigUint {
    let nbytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let extra = nbytes as u32 * 8 - bits;
    buf[nbytes - 1] &= 0xffu8 >> extra;
    let mut x = BigUint::from_bytes_le(&buf);
    x.set_bit((bits - 1) as u64, true);
    x
}

/// Uniform integer in `[1, bound)`.
pub(crate) fn random_below<R: RngCore>(rng: &mut R, bound: &BigUint) -> BigUint {
    let bits = bound.bits() as u32;
    let nbytes = bits.div_ceil(8) as usize;
    let extra = nbytes as u32 * 8 - bits;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[nbytes - 1] &= 0xffu8 >> extra;
        let x = BigUint::from_bytes_le(&buf);
        if !x.is_zero() && &x < bound {
            return x;
        }
    }
}

fn passes_trial_division(n: &BigUint) -> bool {
    SMALL_PRIMES.iter().all(|&p| {
        let r = n % p;
        !r.is_zero() || *n == BigUint::from(p)
    })
}

pub(crate) fn is_probable_prime<R: RngCore>(n: &BigUint, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if *n == two {
        return true;
    }
    if !n.bit(0) || !passes_trial_division(n) {
        return false;
    }
    if n.bits() <= 8 {
        return true;
    }
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap();
    let d = &n_minus_1 >> s;
    let n_minus_3 = n - 3u32;
    'witness: for round in 0..MILLER_RABIN_ROUNDS {
        let a = if round == 0 {
            two.clone()
        } else {
            random_below(rng, &n_minus_3) + 1u32
        };
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random prime of exactly `bits` bits whose two top bits are set, so the
/// product of two such primes has exactly `2 * bits` bits.
pub(crate) fn random_prime<R: RngCore>(rng: &mut R, bits: u32) -> BigUint {
    loop {
        let mut c = random_bits(rng, bits);
        c.set_bit((bits - 2) as u64, true);
        c.set_bit(0, true);
        if is_probable_prime(&c, rng) {
            return c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    #[test]
    fn small_numbers_classified() {
        let mut rng = ChaCha20Rng::from_seed([1; 32]);
        let primes: alloc::vec::Vec<u32> = (0u32..400)
            .filter(|&k| is_probable_prime(&BigUint::from(k), &mut rng))
            .collect();
        let brute: alloc::vec::Vec<u32> = (0u32..400)
            .filter(|&k| k >= 2 && (2..k).all(|d| k % d != 0))
            .collect();
        assert_eq!(primes, brute);
    }

    #[test]
    fn known_large_values() {
        let mut rng = ChaCha20Rng::from_seed([2; 32]);
        // 2^127 - 1 is a Mersenne prime, 2^128 + 1 is not prime
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(is_probable_prime(&m127, &mut rng));
        let f7 = (BigUint::one() << 128u32) + 1u32;
        assert!(!is_probable_prime(&f7, &mut rng));
        // Carmichael number 561 = 3 * 11 * 17
        assert!(!is_probable_prime(&BigUint::from(561u32), &mut rng));
    }

    #[test]
    fn generated_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::from_seed([3; 32]);
        let p = random_prime(&mut rng, 128);
        assert_eq!(p.bits(), 128);
        assert!(p.bit(126));
    }
}
