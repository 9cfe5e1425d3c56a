//! Paillier cryptosystem with `g = n + 1` and CRT decryption.
//!
//! Slots are packed as contiguous bit-fields of one plaintext integer:
//! slot `i` occupies bits `[i * w, (i + 1) * w)`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand_core::RngCore;

use super::prime::{random_below, random_prime};
use super::AheError;
use crate::wire::{DecodeError, Reader, Writer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub(crate) n: BigUint,
    pub(crate) n_sq: BigUint,
    modulus_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    p: BigUint,
    q: BigUint,
    p_sq: BigUint,
    q_sq: BigUint,
    p_minus_1: BigUint,
    q_minus_1: BigUint,
    hp: BigUint,
    hq: BigUint,
    /// `q^-1 mod p`
    q_inv: BigUint,
    /// `p^2` inverse of `q^2`, for CRT recombination mod `n^2`
    q_sq_inv: BigUint,
    pk: PublicKey,
}

pub(crate) fn keygen<R: RngCore>(modulus_bits: u32, rng: &mut R) -> (PublicKey, SecretKey) {
    let half = modulus_bits / 2;
    loop {
        let p = random_prime(rng, half);
        let q = random_prime(rng, half);
        if p == q {
            continue;
        }
        let n = &p * &q;
        debug_assert_eq!(n.bits() as u32, modulus_bits);
        let phi = (&p - 1u32) * (&q - 1u32);
        if !n.gcd(&phi).is_one() {
            continue;
        }
        return from_primes(p, q, modulus_bits);
    }
}

fn l_function(x: &BigUint, m: &BigUint) -> BigUint {
    (x - 1u32) / m
}

fn from_primes(p: BigUint, q: BigUint, modulus_bits: u32) -> (PublicKey, SecretKey) {
    let n = &p * &q;
    let n_sq = &n * &n;
    let g = &n + 1u32;
    let p_sq = &p * &p;
    let q_sq = &q * &q;
    let p_minus_1 = &p - 1u32;
    let q_minus_1 = &q - 1u32;
    let hp = l_function(&g.modpow(&p_minus_1, &p_sq), &p)
        .modinv(&p)
        .expect("p does not divide L_p(g^(p-1))");
    let hq = l_function(&g.modpow(&q_minus_1, &q_sq), &q)
        .modinv(&q)
        .expect("q does not divide L_q(g^(q-1))");
    let q_inv = (&q % &p).modinv(&p).expect("distinct primes");
    let q_sq_inv = (&q_sq % &p_sq).modinv(&p_sq).expect("distinct primes");
    let pk = PublicKey {
        n,
        n_sq,
        modulus_bits,
    };
    let sk = SecretKey {
        p,
        q,
        p_sq,
        q_sq,
        p_minus_1,
        q_minus_1,
        hp,
        hq,
        q_inv,
        q_sq_inv,
        pk: pk.clone(),
    };
    (pk, sk)
}

pub(crate) fn pack(slots: &[u64], slot_bits: u32) -> BigUint {
    let mut m = BigUint::default();
    for &v in slots.iter().rev() {
        m <<= slot_bits as usize;
        m |= BigUint::from(v);
    }
    m
}

pub(crate) fn unpack(m: &BigUint, slot_bits: u32, slots: usize) -> Vec<u64> {
    let mask = (BigUint::one() << slot_bits as usize) - 1u32;
    let mut out = vec![0u64; slots];
    let mut rest = m.clone();
    for s in out.iter_mut() {
        let field = &rest & &mask;
        *s = field.iter_u64_digits().next().unwrap_or(0);
        rest >>= slot_bits as usize;
    }
    out
}

impl PublicKey {
    pub fn modulus_bits(&self) -> u32 {
        self.modulus_bits
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    /// `(1 + m n) r^n mod n^2`.
    pub(crate) fn encrypt<R: RngCore>(&self, m: &BigUint, rng: &mut R) -> BigUint {
        let r = random_below(rng, &self.n);
        let rn = r.modpow(&self.n, &self.n_sq);
        self.with_mask(m, &rn)
    }

    fn with_mask(&self, m: &BigUint, rn: &BigUint) -> BigUint {
        let gm = (m * &self.n + 1u32) % &self.n_sq;
        (gm * rn) % &self.n_sq
    }

    pub(crate) fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.n_sq
    }

    pub(crate) fn scalar_mul(&self, a: &BigUint, k: u64) -> BigUint {
        a.modpow(&BigUint::from(k), &self.n_sq)
    }

    pub(crate) fn ciphertext_bytes(&self) -> usize {
        2 * self.modulus_bits as usize / 8
    }

    pub(crate) fn encode_ciphertext(&self, c: &BigUint, w: &mut Writer) {
        let mut bytes = c.to_bytes_le();
        bytes.resize(self.ciphertext_bytes(), 0);
        w.raw(&bytes);
    }

    pub(crate) fn decode_ciphertext(&self, r: &mut Reader<'_>) -> Result<BigUint, AheError> {
        let c = BigUint::from_bytes_le(r.take(self.ciphertext_bytes())?);
        if c >= self.n_sq {
            return Err(AheError::Decode(DecodeError::Invalid("ciphertext >= n^2")));
        }
        Ok(c)
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.u32(self.modulus_bits);
        w.bytes(&self.n.to_bytes_le());
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let modulus_bits = r.u32()?;
        let n = BigUint::from_bytes_le(r.bytes()?);
        if n.bits() as u32 != modulus_bits || !n.bit(0) {
            return Err(DecodeError::Invalid("paillier modulus"));
        }
        let n_sq = &n * &n;
        Ok(Self {
            n,
            n_sq,
            modulus_bits,
        })
    }
}

impl SecretKey {
    pub fn public(&self) -> &PublicKey {
        &self.pk
    }

    pub(crate) fn decrypt(&self, c: &BigUint) -> BigUint {
        let mp = (l_function(&c.modpow(&self.p_minus_1, &self.p_sq), &self.p) * &self.hp) % &self.p;
        let mq = (l_function(&c.modpow(&self.q_minus_1, &self.q_sq), &self.q) * &self.hq) % &self.q;
        // m = mq + q * ((mp - mq) q^-1 mod p)
        let diff = (&mp + &self.p - (&mq % &self.p)) % &self.p;
        let h = (diff * &self.q_inv) % &self.p;
        mq + h * &self.q
    }

    /// Encryption using the factorization: `r^n` is computed modulo `p^2` and
    /// `q^2` separately.
    pub(crate) fn encrypt<R: RngCore>(&self, m: &BigUint, rng: &mut R) -> BigUint {
        let pk = &self.pk;
        let r = random_below(rng, &pk.n);
        let e_p = &pk.n % (&self.p * &self.p_minus_1);
        let e_q = &pk.n % (&self.q * &self.q_minus_1);
        let rp = (&r % &self.p_sq).modpow(&e_p, &self.p_sq);
        let rq = (&r % &self.q_sq).modpow(&e_q, &self.q_sq);
        // CRT: x = rq + q^2 * ((rp - rq) * (q^2)^-1 mod p^2)
        let diff = (&rp + &self.p_sq - (&rq % &self.p_sq)) % &self.p_sq;
        let h = (diff * &self.q_sq_inv) % &self.p_sq;
        let rn = rq + h * &self.q_sq;
        pk.with_mask(m, &rn)
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.u32(self.pk.modulus_bits);
        w.bytes(&self.p.to_bytes_le());
        w.bytes(&self.q.to_bytes_le());
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let bits = r.u32()?;
        let p = BigUint::from_bytes_le(r.bytes()?);
        let q = BigUint::from_bytes_le(r.bytes()?);
        if p == q || (&p * &q).bits() as u32 != bits {
            return Err(DecodeError::Invalid("paillier primes"));
        }
        Ok(from_primes(p, q, bits).1)
    }
}
