//! BV-style Ring-LWE additively homomorphic encryption over
//! `Z_q[x]/(x^n + 1)` with `q = 2^log_q` and plaintext modulus `t = 2^w`.
//!
//! One `w`-bit slot per coefficient. A ciphertext `(c0, c1)` decrypts via
//! `c0 + c1 s = (q/t) m + e (mod q)`. The secret and the encryption
//! randomness are ternary, so every ring product here is a ternary times
//! general product: shifted additions only.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::wire::{DecodeError, Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvParams {
    pub ring_degree: usize,
    pub log_q: u32,
    pub plain_bits: u32,
    pub error_stddev: f64,
}

impl BvParams {
    pub(crate) fn q_mask(&self) -> u64 {
        if self.log_q == 64 {
            u64::MAX
        } else {
            (1u64 << self.log_q) - 1
        }
    }

    /// Gaussian samples are cut at this magnitude (6 sigma, rounded up).
    pub fn error_bound(&self) -> u64 {
        libm::ceil(6.0 * self.error_stddev) as u64
    }

    fn delta_shift(&self) -> u32 {
        self.log_q - self.plain_bits
    }
}

/// Ternary polynomial stored as the positions of its +1 and -1 coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Ternary {
    plus: Vec<u32>,
    minus: Vec<u32>,
}

impl Ternary {
    fn sample<R: RngCore>(n: usize, rng: &mut R) -> Self {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for i in 0..n {
            // rejection keeps the three outcomes uniform
            let v = loop {
                let x = rng.next_u32() & 3;
                if x != 3 {
                    break x;
                }
            };
            match v {
                1 => plus.push(i as u32),
                2 => minus.push(i as u32),
                _ => {}
            }
        }
        Self { plus, minus }
    }

    fn coefficient(&self, i: u32) -> u8 {
        if self.plus.binary_search(&i).is_ok() {
            1
        } else if self.minus.binary_search(&i).is_ok() {
            2
        } else {
            0
        }
    }
}

/// `out += sign * a * x^j` in `Z[x]/(x^n + 1)` (wrapping mod 2^64).
#[inline]
fn add_shifted(out: &mut [u64], a: &[u64], j: usize, negate: bool) {
    let n = a.len();
    let (lo, hi) = out.split_at_mut(j);
    // coefficients a[0..n-j] land at j..n with sign +, a[n-j..] wrap to 0..j with sign -
    let (a_head, a_tail) = a.split_at(n - j);
    if negate {
        for (o, &x) in hi.iter_mut().zip(a_head) {
            *o = o.wrapping_sub(x);
        }
        for (o, &x) in lo.iter_mut().zip(a_tail) {
            *o = o.wrapping_add(x);
        }
    } else {
        for (o, &x) in hi.iter_mut().zip(a_head) {
            *o = o.wrapping_add(x);
        }
        for (o, &x) in lo.iter_mut().zip(a_tail) {
            *o = o.wrapping_sub(x);
        }
    }
}

pub(crate) fn mul_ternary(a: &[u64], t: &Ternary, mask: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len()];
    for &j in &t.plus {
        add_shifted(&mut out, a, j as usize, false);
    }
    for &j in &t.minus {
        add_shifted(&mut out, a, j as usize, true);
    }
    out.iter_mut().for_each(|c| *c &= mask);
    out
}

fn sample_error<R: RngCore>(params: &BvParams, rng: &mut R) -> Vec<u64> {
    let bound = params.error_bound() as i64;
    let span = (2 * bound + 1) as u64;
    let two_var = 2.0 * params.error_stddev * params.error_stddev;
    let mask = params.q_mask();
    (0..params.ring_degree)
        .map(|_| {
            let v = loop {
                let x = (rng.next_u64() % span) as i64 - bound;
                let accept = libm::exp(-((x * x) as f64) / two_var);
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < accept {
                    break x;
                }
            };
            (v as u64) & mask
        })
        .collect()
}

fn sample_uniform<R: RngCore>(params: &BvParams, rng: &mut R) -> Vec<u64> {
    let mask = params.q_mask();
    (0..params.ring_degree)
        .map(|_| rng.next_u64() & mask)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub(crate) c0: Vec<u64>,
    pub(crate) c1: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublicKey {
    pub(crate) params: BvParams,
    a: Vec<u64>,
    b: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecretKey {
    s: Ternary,
    pk: PublicKey,
}

pub(crate) fn keygen<R: RngCore>(params: BvParams, rng: &mut R) -> (PublicKey, SecretKey) {
    let mask = params.q_mask();
    let s = Ternary::sample(params.ring_degree, rng);
    let a = sample_uniform(&params, rng);
    let e = sample_error(&params, rng);
    let a_s = mul_ternary(&a, &s, mask);
    let b = e
        .iter()
        .zip(&a_s)
        .map(|(&e, &x)| e.wrapping_sub(x) & mask)
        .collect();
    let pk = PublicKey { params, a, b };
    (pk.clone(), SecretKey { s, pk })
}

fn scale_message<'a>(params: &BvParams, slots: &'a [u64]) -> impl Iterator<Item = u64> + 'a {
    let shift = params.delta_shift();
    slots.iter().map(move |&m| m << shift)
}

impl PublicKey {
    pub fn params(&self) -> &BvParams {
        &self.params
    }

    /// `c0 = b u + e1 + (q/t) m`, `c1 = a u + e2` with ternary `u`.
    pub(crate) fn encrypt<R: RngCore>(&self, slots: &[u64], rng: &mut R) -> Ciphertext {
        let p = &self.params;
        let mask = p.q_mask();
        let u = Ternary::sample(p.ring_degree, rng);
        let e1 = sample_error(p, rng);
        let e2 = sample_error(p, rng);
        let bu = mul_ternary(&self.b, &u, mask);
        let au = mul_ternary(&self.a, &u, mask);
        let c0 = bu
            .iter()
            .zip(&e1)
            .zip(scale_message(p, slots))
            .map(|((&x, &e), m)| x.wrapping_add(e).wrapping_add(m) & mask)
            .collect();
        let c1 = au
            .iter()
            .zip(&e2)
            .map(|(&x, &e)| x.wrapping_add(e) & mask)
            .collect();
        Ciphertext { c0, c1 }
    }

    pub(crate) fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        let mask = self.params.q_mask();
        let add = |x: &[u64], y: &[u64]| -> Vec<u64> {
            x.iter()
                .zip(y)
                .map(|(&u, &v)| u.wrapping_add(v) & mask)
                .collect()
        };
        Ciphertext {
            c0: add(&a.c0, &b.c0),
            c1: add(&a.c1, &b.c1),
        }
    }

    pub(crate) fn add_assign(&self, acc: &mut Ciphertext, b: &Ciphertext) {
        let mask = self.params.q_mask();
        for (u, &v) in acc.c0.iter_mut().zip(&b.c0) {
            *u = u.wrapping_add(v) & mask;
        }
        for (u, &v) in acc.c1.iter_mut().zip(&b.c1) {
            *u = u.wrapping_add(v) & mask;
        }
    }

    /// Add a plaintext without fresh randomness.
    pub(crate) fn add_plain(&self, acc: &mut Ciphertext, slots: &[u64]) {
        let mask = self.params.q_mask();
        for (u, m) in acc.c0.iter_mut().zip(scale_message(&self.params, slots)) {
            *u = u.wrapping_add(m) & mask;
        }
    }

    pub(crate) fn scalar_mul(&self, a: &Ciphertext, k: u64) -> Ciphertext {
        let mask = self.params.q_mask();
        let mul = |x: &[u64]| -> Vec<u64> { x.iter().map(|&u| u.wrapping_mul(k) & mask).collect() };
        Ciphertext {
            c0: mul(&a.c0),
            c1: mul(&a.c1),
        }
    }

    /// Multiply by `x^-k = -x^(n-k)`: slot `i` of the result is slot `i + k`
    /// of the input for `i < n - k`; the last `k` slots receive the negated
    /// leading slots.
    pub(crate) fn rotate_left(&self, a: &Ciphertext, k: usize) -> Ciphertext {
        let mask = self.params.q_mask();
        let rot = |x: &[u64]| -> Vec<u64> {
            let n = x.len();
            let mut out = Vec::with_capacity(n);
            out.extend_from_slice(&x[k..]);
            out.extend(x[..k].iter().map(|&v| v.wrapping_neg() & mask));
            out
        };
        Ciphertext {
            c0: rot(&a.c0),
            c1: rot(&a.c1),
        }
    }

    pub(crate) fn encode_ciphertext(&self, c: &Ciphertext, w: &mut Writer) {
        for &v in c.c0.iter().chain(&c.c1) {
            w.u64(v);
        }
    }

    pub(crate) fn decode_ciphertext(&self, r: &mut Reader<'_>) -> Result<Ciphertext, DecodeError> {
        let n = self.params.ring_degree;
        let mask = self.params.q_mask();
        let mut read = || -> Result<Vec<u64>, DecodeError> {
            let raw = r.take(n * 8)?;
            raw.chunks_exact(8)
                .map(|c| {
                    let v = u64::from_le_bytes(c.try_into().unwrap());
                    if v & !mask != 0 {
                        Err(DecodeError::Invalid("ring coefficient >= q"))
                    } else {
                        Ok(v)
                    }
                })
                .collect()
        };
        let c0 = read()?;
        let c1 = read()?;
        Ok(Ciphertext { c0, c1 })
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        for &v in self.a.iter().chain(&self.b) {
            w.u64(v);
        }
    }

    pub(crate) fn decode(params: BvParams, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = params.ring_degree;
        let mut read = || -> Result<Vec<u64>, DecodeError> { (0..n).map(|_| r.u64()).collect() };
        let a = read()?;
        let b = read()?;
        Ok(Self { params, a, b })
    }
}

impl SecretKey {
    pub fn public(&self) -> &PublicKey {
        &self.pk
    }

    /// Symmetric encryption: `c1` uniform, `c0 = -c1 s + e + (q/t) m`. Fresh
    /// noise is a single Gaussian sample per coefficient.
    pub(crate) fn encrypt<R: RngCore>(&self, slots: &[u64], rng: &mut R) -> Ciphertext {
        let p = &self.pk.params;
        let mask = p.q_mask();
        let c1 = sample_uniform(p, rng);
        let e = sample_error(p, rng);
        let c1s = mul_ternary(&c1, &self.s, mask);
        let c0 = c1s
            .iter()
            .zip(&e)
            .zip(scale_message(p, slots))
            .map(|((&x, &e), m)| e.wrapping_sub(x).wrapping_add(m) & mask)
            .collect();
        Ciphertext { c0, c1 }
    }

    /// Phase `c0 + c1 s mod q` (message times q/t plus noise).
    fn phase(&self, c: &Ciphertext) -> Vec<u64> {
        let mask = self.pk.params.q_mask();
        let c1s = mul_ternary(&c.c1, &self.s, mask);
        c.c0.iter()
            .zip(&c1s)
            .map(|(&a, &b)| a.wrapping_add(b) & mask)
            .collect()
    }

    pub(crate) fn decrypt(&self, c: &Ciphertext) -> Vec<u64> {
        let p = &self.pk.params;
        let mask = p.q_mask();
        let shift = p.delta_shift();
        let half = 1u64 << (shift - 1);
        let tmask = (1u64 << p.plain_bits) - 1;
        self.phase(c)
            .into_iter()
            .map(|v| ((v.wrapping_add(half) & mask) >> shift) & tmask)
            .collect()
    }

    /// Largest absolute noise term of a ciphertext (test and bench aid).
    pub fn noise_magnitude(&self, c: &Ciphertext) -> u64 {
        let p = &self.pk.params;
        let mask = p.q_mask();
        let shift = p.delta_shift();
        let half = 1u64 << (shift - 1);
        let dmask = (1u64 << shift) - 1;
        self.phase(c)
            .into_iter()
            .map(|v| {
                let r = v.wrapping_add(half) & mask & dmask;
                r.abs_diff(half)
            })
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        let n = self.pk.params.ring_degree as u32;
        let coeffs: Vec<u8> = (0..n).map(|i| self.s.coefficient(i)).collect();
        w.raw(&coeffs);
        self.pk.encode(w);
    }

    pub(crate) fn decode(params: BvParams, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let raw = r.take(params.ring_degree)?;
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (i, &c) in raw.iter().enumerate() {
            match c {
                0 => {}
                1 => plus.push(i as u32),
                2 => minus.push(i as u32),
                _ => return Err(DecodeError::Invalid("ternary coefficient")),
            }
        }
        let pk = PublicKey::decode(params, r)?;
        Ok(Self {
            s: Ternary { plus, minus },
            pk,
        })
    }
}
