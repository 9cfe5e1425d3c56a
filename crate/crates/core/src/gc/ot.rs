//! Batched 1-out-of-2 oblivious transfer of 128-bit messages, following the
//! "simplest OT" construction over the Ristretto group.

use alloc::vec::Vec;

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::garble::Label;
use super::GcError;
use crate::wire::{DecodeError, Reader, Writer};

fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    let mut wide = [0u8; 64];
    rng.fill_bytes(&mut wide);
    Scalar::from_bytes_mod_order_wide(&wide)
}

fn key(
    a: &CompressedRistretto,
    b: &CompressedRistretto,
    shared: &RistrettoPoint,
    i: usize,
) -> Label {
    let mut h = Sha256::new();
    h.update(a.as_bytes());
    h.update(b.as_bytes());
    h.update(shared.compress().as_bytes());
    h.update((i as u64).to_le_bytes());
    let d = h.finalize();
    u128::from_le_bytes(d[..16].try_into().unwrap())
}

fn decompress(bytes: [u8; 32]) -> Result<(CompressedRistretto, RistrettoPoint), GcError> {
    let c = CompressedRistretto(bytes);
    let p = c
        .decompress()
        .ok_or(GcError::Malformed("invalid group element"))?;
    Ok((c, p))
}

pub(crate) fn write_points(w: &mut Writer, pts: &[CompressedRistretto]) {
    w.count(pts.len());
    for p in pts {
        w.raw(p.as_bytes());
    }
}

pub(crate) fn read_points(r: &mut Reader<'_>) -> Result<Vec<[u8; 32]>, DecodeError> {
    let n = r.count(32)?;
    (0..n).map(|_| r.array::<32>()).collect()
}

/// Sender state after its first message.
pub struct OtSender {
    a: Scalar,
    big_a: RistrettoPoint,
    big_a_c: CompressedRistretto,
}

impl OtSender {
    /// Returns the state and the first message `A = aG`.
    pub fn start<R: RngCore + CryptoRng>(rng: &mut R) -> (Self, [u8; 32]) {
        let a = random_scalar(rng);
        let big_a = RISTRETTO_BASEPOINT_TABLE * &a;
        let big_a_c = big_a.compress();
        (Self { a, big_a, big_a_c }, big_a_c.to_bytes())
    }

    /// Encrypt each pair under keys derived from the receiver's points.
    pub fn respond(
        &self,
        receiver_points: &[[u8; 32]],
        pairs: &[[Label; 2]],
    ) -> Result<Vec<[Label; 2]>, GcError> {
        if receiver_points.len() != pairs.len() {
            return Err(GcError::InputCount {
                expected: pairs.len(),
                found: receiver_points.len(),
            });
        }
        receiver_points
            .iter()
            .zip(pairs)
            .enumerate()
            .map(|(i, (&bytes, pair))| {
                let (bc, b) = decompress(bytes)?;
                let k0 = key(&self.big_a_c, &bc, &(b * self.a), i);
                let k1 = key(&self.big_a_c, &bc, &((b - self.big_a) * self.a), i);
                Ok([pair[0] ^ k0, pair[1] ^ k1])
            })
            .collect()
    }
}

/// Receiver state: one secret scalar per choice bit.
pub struct OtReceiver {
    big_a_c: CompressedRistretto,
    big_a: RistrettoPoint,
    choices: Vec<bool>,
    secrets: Vec<Scalar>,
    points: Vec<CompressedRistretto>,
}

impl OtReceiver {
    /// Consume the sender's `A`; returns state and the points `B_i`.
    pub fn choose<R: RngCore + CryptoRng>(
        sender_point: [u8; 32],
        choices: &[bool],
        rng: &mut R,
    ) -> Result<(Self, Vec<CompressedRistretto>), GcError> {
        let (big_a_c, big_a) = decompress(sender_point)?;
        let mut secrets = Vec::with_capacity(choices.len());
        let mut points = Vec::with_capacity(choices.len());
        for &c in choices {
            let b = random_scalar(rng);
            let bg = RISTRETTO_BASEPOINT_TABLE * &b;
            let p = if c { big_a + bg } else { bg };
            secrets.push(b);
            points.push(p.compress());
        }
        let st = Self {
            big_a_c,
            big_a,
            choices: choices.to_vec(),
            secrets,
            points: points.clone(),
        };
        Ok((st, points))
    }

    /// Decrypt the chosen message of each pair.
    pub fn finish(&self, encrypted: &[[Label; 2]]) -> Result<Vec<Label>, GcError> {
        if encrypted.len() != self.choices.len() {
            return Err(GcError::InputCount {
                expected: self.choices.len(),
                found: encrypted.len(),
            });
        }
        Ok(encrypted
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let k = key(
                    &self.big_a_c,
                    &self.points[i],
                    &(self.big_a * self.secrets[i]),
                    i,
                );
                e[self.choices[i] as usize] ^ k
            })
            .collect())
    }
}

pub(crate) fn write_pairs(w: &mut Writer, pairs: &[[Label; 2]]) {
    w.count(pairs.len());
    for p in pairs {
        w.raw(&p[0].to_le_bytes()).raw(&p[1].to_le_bytes());
    }
}

pub(crate) fn read_pairs(r: &mut Reader<'_>) -> Result<Vec<[Label; 2]>, DecodeError> {
    let n = r.count(32)?;
    (0..n)
        .map(|_| {
            let a = u128::from_le_bytes(r.array::<16>()?);
            let b = u128::from_le_bytes(r.array::<16>()?);
            Ok([a, b])
        })
        .collect()
}
