//! Additively homomorphic encryption behind one interface.
//!
//! Two backends: Paillier (big-integer bit-field packing, no rotation) and a
//! BV-style Ring-LWE scheme (one slot per polynomial coefficient, supports
//! slot rotation). A ciphertext holds `slots()` values of `slot_bits` bits.

pub mod bv;
pub mod paillier;
mod prime;

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::wire::{DecodeError, Reader, Writer};
pub use bv::BvParams;

pub const DEFAULT_PAILLIER_BITS: u32 = 1024;
pub const DEFAULT_RING_DEGREE: usize = 1024;
pub const DEFAULT_LOG_Q: u32 = 62;
pub const DEFAULT_ERROR_STDDEV: f64 = 3.2;
/// Largest plaintext modulus exponent for the BV backend.
pub const BV_MAX_SLOT_BITS: u32 = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AheError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("backend does not support {0}")]
    Capability(&'static str),
    #[error("ciphertext/key backend mismatch")]
    BackendMismatch,
    #[error("plaintext has {found} slots, expected {expected}")]
    PlaintextShape { expected: usize, found: usize },
    #[error("slot {slot} value does not fit the slot width")]
    SlotOverflow { slot: usize },
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Paillier,
    Bv,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Paillier => "paillier",
            Backend::Bv => "bv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackendParams {
    Paillier {
        modulus_bits: u32,
    },
    Bv {
        ring_degree: usize,
        log_q: u32,
        error_stddev: f64,
    },
}

impl BackendParams {
    pub fn paillier() -> Self {
        BackendParams::Paillier {
            modulus_bits: DEFAULT_PAILLIER_BITS,
        }
    }

    pub fn bv() -> Self {
        Self::bv_with_degree(DEFAULT_RING_DEGREE)
    }

    pub fn bv_with_degree(ring_degree: usize) -> Self {
        BackendParams::Bv {
            ring_degree,
            log_q: DEFAULT_LOG_Q,
            error_stddev: DEFAULT_ERROR_STDDEV,
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            BackendParams::Paillier { .. } => Backend::Paillier,
            BackendParams::Bv { .. } => Backend::Bv,
        }
    }

    /// Widest slot this backend can carry.
    pub fn max_slot_bits(&self) -> u32 {
        match *self {
            BackendParams::Paillier { modulus_bits } => modulus_bits.saturating_sub(1).min(63),
            BackendParams::Bv { log_q, .. } => BV_MAX_SLOT_BITS.min(log_q.saturating_sub(2)),
        }
    }
}

/// Backend parameters plus the slot width they are used with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AheParams {
    pub backend: BackendParams,
    pub slot_bits: u32,
}

impl AheParams {
    pub fn new(backend: BackendParams, slot_bits: u32) -> Result<Self, AheError> {
        let p = Self { backend, slot_bits };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AheError> {
        if self.slot_bits == 0 {
            return Err(AheError::InvalidParams("slot width must be positive"));
        }
        match self.backend {
            BackendParams::Paillier { modulus_bits } => {
                if modulus_bits < 128 || modulus_bits % 16 != 0 {
                    return Err(AheError::InvalidParams(
                        "paillier modulus must be >= 128 bits and a multiple of 16",
                    ));
                }
            }
            BackendParams::Bv {
                ring_degree,
                log_q,
                error_stddev,
            } => {
                if ring_degree == 0 || !ring_degree.is_power_of_two() {
                    return Err(AheError::InvalidParams(
                        "ring degree must be a power of two",
                    ));
                }
                if !(2..=63).contains(&log_q) {
                    return Err(AheError::InvalidParams("log2 q must be in 2..=63"));
                }
                if !(error_stddev > 0.0 && error_stddev < 1e6) {
                    return Err(AheError::InvalidParams("error stddev out of range"));
                }
            }
        }
        if self.slot_bits > self.backend.max_slot_bits() {
            return Err(AheError::InvalidParams(
                "slot width exceeds backend capacity",
            ));
        }
        Ok(())
    }

    pub fn backend_kind(&self) -> Backend {
        self.backend.backend()
    }

    /// Slots per ciphertext (`p`).
    pub fn slots(&self) -> usize {
        match self.backend {
            BackendParams::Paillier { modulus_bits } => {
                ((modulus_bits - 1) / self.slot_bits) as usize
            }
            BackendParams::Bv { ring_degree, .. } => ring_degree,
        }
    }

    pub fn supports_rotation(&self) -> bool {
        self.backend_kind() == Backend::Bv
    }

    pub fn ciphertext_size(&self) -> usize {
        ciphertext_size(self)
    }

    pub fn bv(&self) -> Option<BvParams> {
        match self.backend {
            BackendParams::Bv {
                ring_degree,
                log_q,
                error_stddev,
            } => Some(BvParams {
                ring_degree,
                log_q,
                plain_bits: self.slot_bits,
                error_stddev,
            }),
            _ => None,
        }
    }

    pub fn slot_mask(&self) -> u64 {
        if self.slot_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.slot_bits) - 1
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        match self.backend {
            BackendParams::Paillier { modulus_bits } => {
                w.u8(0).u32(modulus_bits);
            }
            BackendParams::Bv {
                ring_degree,
                log_q,
                error_stddev,
            } => {
                w.u8(1).u32(ring_degree as u32).u32(log_q).f64(error_stddev);
            }
        }
        w.u32(self.slot_bits);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, AheError> {
        let backend = match r.u8()? {
            0 => BackendParams::Paillier {
                modulus_bits: r.u32()?,
            },
            1 => BackendParams::Bv {
                ring_degree: r.u32()? as usize,
                log_q: r.u32()?,
                error_stddev: r.f64()?,
            },
            _ => return Err(DecodeError::Invalid("backend tag").into()),
        };
        Self::new(backend, r.u32()?)
    }
}

/// Serialized ciphertext size in bytes: `2 * modulus_bits / 8` for Paillier,
/// `2 * n * 8` for BV.
pub fn ciphertext_size(params: &AheParams) -> usize {
    match params.backend {
        BackendParams::Paillier { modulus_bits } => 2 * modulus_bits as usize / 8,
        BackendParams::Bv { ring_degree, .. } => 2 * ring_degree * 8,
    }
}

/// Worst-case noise check for a packed dot product under BV: `l` scalar
/// multiplications by at most `2^f_in - 1` of secret-key encrypted rows,
/// plus one secret-key encrypted prior row, plus `adds_extra` public-key
/// encryptions, must stay below `q / (2t)`.
///
/// Always true for Paillier, which has no noise.
pub fn noise_budget_ok(params: &AheParams, l: usize, f_in: u32, adds_extra: usize) -> bool {
    let Some(bv) = params.bv() else {
        return true;
    };
    if bv.plain_bits + 1 >= bv.log_q || f_in >= 64 {
        return false;
    }
    let be = bv.error_bound() as u128;
    let max_freq = (1u128 << f_in) - 1;
    let model = (l as u128 * max_freq + 1) * be;
    let fresh_pk = (2 * bv.ring_degree as u128 + 1) * be;
    let total = model + adds_extra as u128 * fresh_pk;
    total < 1u128 << (bv.log_q - bv.plain_bits - 1)
}

/// `slots()` values, each below `2^slot_bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedPlaintext {
    slots: Vec<u64>,
}

impl PackedPlaintext {
    pub fn new(params: &AheParams, slots: Vec<u64>) -> Result<Self, AheError> {
        if slots.len() != params.slots() {
            return Err(AheError::PlaintextShape {
                expected: params.slots(),
                found: slots.len(),
            });
        }
        let mask = params.slot_mask();
        if let Some(slot) = slots.iter().position(|&v| v & !mask != 0) {
            return Err(AheError::SlotOverflow { slot });
        }
        Ok(Self { slots })
    }

    /// Leading slots from `prefix`, the rest zero.
    pub fn padded(params: &AheParams, prefix: &[u64]) -> Result<Self, AheError> {
        if prefix.len() > params.slots() {
            return Err(AheError::PlaintextShape {
                expected: params.slots(),
                found: prefix.len(),
            });
        }
        let mut slots = vec![0u64; params.slots()];
        slots[..prefix.len()].copy_from_slice(prefix);
        Self::new(params, slots)
    }

    pub fn zeros(params: &AheParams) -> Self {
        Self {
            slots: vec![0; params.slots()],
        }
    }

    pub fn slots(&self) -> &[u64] {
        &self.slots
    }

    pub fn into_slots(self) -> Vec<u64> {
        self.slots
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ciphertext {
    Paillier(BigUint),
    Bv(bv::Ciphertext),
}

#[derive(Debug, Clone, PartialEq)]
enum PkInner {
    Paillier(paillier::PublicKey),
    Bv(bv::PublicKey),
}

#[derive(Debug, Clone, PartialEq)]
enum SkInner {
    Paillier(paillier::SecretKey),
    Bv(bv::SecretKey),
}

/// Encryption and homomorphic-evaluation key.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicKey {
    params: AheParams,
    inner: PkInner,
}

/// Decryption key; also encrypts with less noise than the public key (BV).
#[derive(Debug, Clone, PartialEq)]
pub struct SecretKey {
    params: AheParams,
    inner: SkInner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPair {
    pub pk: PublicKey,
    pub sk: SecretKey,
}

/// Deterministic key generation from 32 bytes of seed entropy.
pub fn keygen(params: &AheParams, seed: [u8; 32]) -> Result<KeyPair, AheError> {
    params.validate()?;
    let mut rng = ChaCha20Rng::from_seed(seed);
    let (pk, sk) = match params.backend {
        BackendParams::Paillier { modulus_bits } => {
            let (pk, sk) = paillier::keygen(modulus_bits, &mut rng);
            (PkInner::Paillier(pk), SkInner::Paillier(sk))
        }
        BackendParams::Bv { .. } => {
            let (pk, sk) = bv::keygen(params.bv().unwrap(), &mut rng);
            (PkInner::Bv(pk), SkInner::Bv(sk))
        }
    };
    Ok(KeyPair {
        pk: PublicKey {
            params: *params,
            inner: pk,
        },
        sk: SecretKey {
            params: *params,
            inner: sk,
        },
    })
}

impl PublicKey {
    pub fn params(&self) -> &AheParams {
        &self.params
    }

    fn check_pt(&self, pt: &PackedPlaintext) -> Result<(), AheError> {
        if pt.slots.len() != self.params.slots() {
            return Err(AheError::PlaintextShape {
                expected: self.params.slots(),
                found: pt.slots.len(),
            });
        }
        Ok(())
    }

    pub fn encrypt<R: RngCore>(
        &self,
        pt: &PackedPlaintext,
        rng: &mut R,
    ) -> Result<Ciphertext, AheError> {
        self.check_pt(pt)?;
        Ok(match &self.inner {
            PkInner::Paillier(k) => Ciphertext::Paillier(
                k.encrypt(&paillier::pack(&pt.slots, self.params.slot_bits), rng),
            ),
            PkInner::Bv(k) => Ciphertext::Bv(k.encrypt(&pt.slots, rng)),
        })
    }

    /// Slot-wise sum under decryption. Slots must not overflow.
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, AheError> {
        match (&self.inner, a, b) {
            (PkInner::Paillier(k), Ciphertext::Paillier(x), Ciphertext::Paillier(y)) => {
                Ok(Ciphertext::Paillier(k.add(x, y)))
            }
            (PkInner::Bv(k), Ciphertext::Bv(x), Ciphertext::Bv(y)) => {
                Ok(Ciphertext::Bv(k.add(x, y)))
            }
            _ => Err(AheError::BackendMismatch),
        }
    }

    pub fn add_assign(&self, acc: &mut Ciphertext, b: &Ciphertext) -> Result<(), AheError> {
        match (&self.inner, acc, b) {
            (PkInner::Paillier(k), Ciphertext::Paillier(x), Ciphertext::Paillier(y)) => {
                *x = k.add(x, y);
                Ok(())
            }
            (PkInner::Bv(k), Ciphertext::Bv(x), Ciphertext::Bv(y)) => {
                k.add_assign(x, y);
                Ok(())
            }
            _ => Err(AheError::BackendMismatch),
        }
    }

    /// Add a known plaintext (no fresh randomness).
    pub fn add_plain(&self, acc: &mut Ciphertext, pt: &PackedPlaintext) -> Result<(), AheError> {
        self.check_pt(pt)?;
        match (&self.inner, acc) {
            (PkInner::Paillier(k), Ciphertext::Paillier(x)) => {
                let m = paillier::pack(&pt.slots, self.params.slot_bits);
                let gm = (m * &k.n + 1u32) % &k.n_sq;
                *x = k.add(x, &gm);
                Ok(())
            }
            (PkInner::Bv(k), Ciphertext::Bv(x)) => {
                k.add_plain(x, &pt.slots);
                Ok(())
            }
            _ => Err(AheError::BackendMismatch),
        }
    }

    /// Every slot multiplied by `m` under decryption.
    pub fn scalar_mul(&self, a: &Ciphertext, m: u64) -> Result<Ciphertext, AheError> {
        match (&self.inner, a) {
            (PkInner::Paillier(k), Ciphertext::Paillier(x)) => {
                Ok(Ciphertext::Paillier(k.scalar_mul(x, m)))
            }
            (PkInner::Bv(k), Ciphertext::Bv(x)) => Ok(Ciphertext::Bv(k.scalar_mul(x, m))),
            _ => Err(AheError::BackendMismatch),
        }
    }

    /// Shift slots left by `k`: result slot `i` = input slot `i + k` for
    /// `i < p - k`. The last `k` slots are garbage. BV only.
    pub fn rotate_left(&self, a: &Ciphertext, k: usize) -> Result<Ciphertext, AheError> {
        match (&self.inner, a) {
            (PkInner::Paillier(_), _) => Err(AheError::Capability("slot rotation")),
            (PkInner::Bv(key), Ciphertext::Bv(x)) => {
                if k >= self.params.slots() {
                    return Err(AheError::InvalidParams("rotation amount must be < slots"));
                }
                Ok(Ciphertext::Bv(key.rotate_left(x, k)))
            }
            _ => Err(AheError::BackendMismatch),
        }
    }

    pub fn write_ciphertext(&self, ct: &Ciphertext, w: &mut Writer) -> Result<(), AheError> {
        match (&self.inner, ct) {
            (PkInner::Paillier(k), Ciphertext::Paillier(c)) => k.encode_ciphertext(c, w),
            (PkInner::Bv(k), Ciphertext::Bv(c)) => k.encode_ciphertext(c, w),
            _ => return Err(AheError::BackendMismatch),
        }
        Ok(())
    }

    pub fn read_ciphertext(&self, r: &mut Reader<'_>) -> Result<Ciphertext, AheError> {
        Ok(match &self.inner {
            PkInner::Paillier(k) => Ciphertext::Paillier(k.decode_ciphertext(r)?),
            PkInner::Bv(k) => Ciphertext::Bv(k.decode_ciphertext(r)?),
        })
    }

    /// Exactly `ciphertext_size(params)` bytes.
    pub fn encode_ciphertext(&self, ct: &Ciphertext) -> Result<Vec<u8>, AheError> {
        let mut w = Writer::with_capacity(self.params.ciphertext_size());
        self.write_ciphertext(ct, &mut w)?;
        Ok(w.finish())
    }

    pub fn decode_ciphertext(&self, bytes: &[u8]) -> Result<Ciphertext, AheError> {
        if bytes.len() != self.params.ciphertext_size() {
            return Err(AheError::Decode(DecodeError::Invalid("ciphertext length")));
        }
        let mut r = Reader::new(bytes);
        let ct = self.read_ciphertext(&mut r)?;
        r.finish()?;
        Ok(ct)
    }

    pub fn encode(&self, w: &mut Writer) {
        self.params.encode(w);
        match &self.inner {
            PkInner::Paillier(k) => k.encode(w),
            PkInner::Bv(k) => k.encode(w),
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, AheError> {
        let params = AheParams::decode(r)?;
        let inner = match params.backend_kind() {
            Backend::Paillier => {
                let k = paillier::PublicKey::decode(r)?;
                if let BackendParams::Paillier { modulus_bits } = params.backend {
                    if k.modulus_bits() != modulus_bits {
                        return Err(DecodeError::Invalid("modulus size").into());
                    }
                }
                PkInner::Paillier(k)
            }
            Backend::Bv => PkInner::Bv(bv::PublicKey::decode(params.bv().unwrap(), r)?),
        };
        Ok(Self { params, inner })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AheError> {
        let mut r = Reader::new(bytes);
        let k = Self::decode(&mut r)?;
        r.finish()?;
        Ok(k)
    }
}

impl SecretKey {
    pub fn params(&self) -> &AheParams {
        &self.params
    }

    pub fn public(&self) -> PublicKey {
        let inner = match &self.inner {
            SkInner::Paillier(k) => PkInner::Paillier(k.public().clone()),
            SkInner::Bv(k) => PkInner::Bv(k.public().clone()),
        };
        PublicKey {
            params: self.params,
            inner,
        }
    }

    pub fn decrypt(&self, ct: &Ciphertext) -> Result<PackedPlaintext, AheError> {
        let p = &self.params;
        let slots = match (&self.inner, ct) {
            (SkInner::Paillier(k), Ciphertext::Paillier(c)) => {
                paillier::unpack(&k.decrypt(c), p.slot_bits, p.slots())
            }
            (SkInner::Bv(k), Ciphertext::Bv(c)) => k.decrypt(c),
            _ => return Err(AheError::BackendMismatch),
        };
        Ok(PackedPlaintext { slots })
    }

    /// Encrypt with the secret key. For BV the fresh noise is a single
    /// Gaussian term; for Paillier it is a CRT-accelerated encryption.
    pub fn encrypt<R: RngCore>(
        &self,
        pt: &PackedPlaintext,
        rng: &mut R,
    ) -> Result<Ciphertext, AheError> {
        if pt.slots.len() != self.params.slots() {
            return Err(AheError::PlaintextShape {
                expected: self.params.slots(),
                found: pt.slots.len(),
            });
        }
        Ok(match &self.inner {
            SkInner::Paillier(k) => Ciphertext::Paillier(
                k.encrypt(&paillier::pack(&pt.slots, self.params.slot_bits), rng),
            ),
            SkInner::Bv(k) => Ciphertext::Bv(k.encrypt(&pt.slots, rng)),
        })
    }

    /// Largest noise coefficient of a BV ciphertext; `None` for Paillier.
    pub fn noise_magnitude(&self, ct: &Ciphertext) -> Option<u64> {
        match (&self.inner, ct) {
            (SkInner::Bv(k), Ciphertext::Bv(c)) => Some(k.noise_magnitude(c)),
            _ => None,
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        self.params.encode(w);
        match &self.inner {
            SkInner::Paillier(k) => k.encode(w),
            SkInner::Bv(k) => k.encode(w),
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, AheError> {
        let params = AheParams::decode(r)?;
        let inner = match params.backend_kind() {
            Backend::Paillier => SkInner::Paillier(paillier::SecretKey::decode(r)?),
            Backend::Bv => SkInner::Bv(bv::SecretKey::decode(params.bv().unwrap(), r)?),
        };
        Ok(Self { params, inner })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AheError> {
        let mut r = Reader::new(bytes);
        let k = Self::decode(&mut r)?;
        r.finish()?;
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_paillier() -> AheParams {
        AheParams::new(BackendParams::Paillier { modulus_bits: 256 }, 20).unwrap()
    }

    fn small_bv() -> AheParams {
        AheParams::new(BackendParams::bv_with_degree(16), 20).unwrap()
    }

    #[test]
    fn sizes_follow_formulas() {
        let p1024 = AheParams::new(BackendParams::paillier(), 41).unwrap();
        assert_eq!(ciphertext_size(&p1024), 256);
        let p2048 = AheParams::new(BackendParams::Paillier { modulus_bits: 2048 }, 41).unwrap();
        assert_eq!(ciphertext_size(&p2048), 512);
        let bv = AheParams::new(BackendParams::bv(), 41).unwrap();
        assert_eq!(ciphertext_size(&bv), 16384);
        assert_eq!(p1024.slots(), 24);
        assert_eq!(bv.slots(), 1024);
    }

    #[test]
    fn bv_slot_width_limit() {
        assert!(AheParams::new(BackendParams::bv(), 60).is_ok());
        assert_eq!(
            AheParams::new(BackendParams::bv(), 61),
            Err(AheError::InvalidParams(
                "slot width exceeds backend capacity"
            ))
        );
    }

    #[test]
    fn noise_budget_examples() {
        let bv = AheParams::new(BackendParams::bv(), 41).unwrap();
        assert!(noise_budget_ok(&bv, 0, 6, 0));
        assert!(noise_budget_ok(&bv, 692, 6, 1));
        let wide = AheParams::new(BackendParams::bv(), 59).unwrap();
        assert!(!noise_budget_ok(&wide, 1_000_000, 6, 1));
    }

    #[test]
    fn plaintext_shape_checked() {
        let p = small_bv();
        assert!(PackedPlaintext::new(&p, vec![0; 15]).is_err());
        assert_eq!(
            PackedPlaintext::new(&p, {
                let mut v = vec![0; 16];
                v[3] = 1 << 20;
                v
            }),
            Err(AheError::SlotOverflow { slot: 3 })
        );
    }

    #[test]
    fn paillier_has_no_rotation() {
        let p = small_paillier();
        let kp = keygen(&p, [1; 32]).unwrap();
        let mut rng = ChaCha20Rng::from_seed([2; 32]);
        let ct = kp
            .pk
            .encrypt(&PackedPlaintext::zeros(&p), &mut rng)
            .unwrap();
        assert_eq!(
            kp.pk.rotate_left(&ct, 1),
            Err(AheError::Capability("slot rotation"))
        );
    }

    #[test]
    fn mixed_backends_rejected() {
        let pp = small_paillier();
        let bp = small_bv();
        let a = keygen(&pp, [1; 32]).unwrap();
        let b = keygen(&bp, [1; 32]).unwrap();
        let mut rng = ChaCha20Rng::from_seed([3; 32]);
        let ca =
            a.pk.encrypt(&PackedPlaintext::zeros(&pp), &mut rng)
                .unwrap();
        let cb =
            b.pk.encrypt(&PackedPlaintext::zeros(&bp), &mut rng)
                .unwrap();
        assert_eq!(a.pk.add(&ca, &cb), Err(AheError::BackendMismatch));
        assert_eq!(b.sk.decrypt(&ca), Err(AheError::BackendMismatch));
    }

    #[test]
    fn wrong_length_ciphertext_is_decode_error() {
        let p = small_bv();
        let kp = keygen(&p, [5; 32]).unwrap();
        assert!(matches!(
            kp.pk.decode_ciphertext(&[0u8; 10]),
            Err(AheError::Decode(_))
        ));
    }

    #[test]
    fn add_plain_both_backends() {
        for p in [small_paillier(), small_bv()] {
            let kp = keygen(&p, [6; 32]).unwrap();
            let mut rng = ChaCha20Rng::from_seed([7; 32]);
            let a = PackedPlaintext::padded(&p, &[1, 2, 3]).unwrap();
            let b = PackedPlaintext::padded(&p, &[10, 20, 30]).unwrap();
            let mut ct = kp.pk.encrypt(&a, &mut rng).unwrap();
            kp.pk.add_plain(&mut ct, &b).unwrap();
            assert_eq!(&kp.sk.decrypt(&ct).unwrap().slots()[..3], &[11, 22, 33]);
        }
    }
}
