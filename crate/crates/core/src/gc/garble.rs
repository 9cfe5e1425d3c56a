//! Free-XOR, point-and-permute garbling with 128-bit labels.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use super::circuit::{check_len, Circuit, Gate};
use super::GcError;
use crate::wire::{DecodeError, Reader, Writer};

pub type Label = u128;

fn lsb(l: Label) -> bool {
    l & 1 == 1
}

/// First 16 bytes of `SHA-256(a || b || gate_id)`.
fn gate_hash(a: Label, b: Label, gate_id: u64) -> Label {
    let mut h = Sha256::new();
    h.update(a.to_le_bytes());
    h.update(b.to_le_bytes());
    h.update(gate_id.to_le_bytes());
    let d = h.finalize();
    u128::from_le_bytes(d[..16].try_into().unwrap())
}

/// Four ciphertext rows per AND gate, indexed by the permute bits.
pub type Table = [Label; 4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GarbledCircuit {
    pub tables: Vec<Table>,
    /// Permute bit of each output's zero label.
    pub decode: Vec<bool>,
}

/// Both labels of every input wire, garbler side only.
#[derive(Debug, Clone)]
pub struct InputLabels {
    pub garbler: Vec<[Label; 2]>,
    pub evaluator: Vec<[Label; 2]>,
}

impl InputLabels {
    pub fn garbler_active(&self, bits: &[bool]) -> Result<Vec<Label>, GcError> {
        check_len(self.garbler.len(), bits.len())?;
        Ok(self
            .garbler
            .iter()
            .zip(bits)
            .map(|(l, &b)| l[b as usize])
            .collect())
    }
}

/// Deterministic given the seed.
pub fn garble(circuit: &Circuit, seed: [u8; 32]) -> (GarbledCircuit, InputLabels) {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut random_label = || -> Label {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        u128::from_le_bytes(b)
    };
    let delta = random_label() | 1;
    let mut zero = vec![0 as Label; circuit.num_wires as usize];
    let mut pairs = |wires: &[u32], zero: &mut [Label]| -> Vec<[Label; 2]> {
        wires
            .iter()
            .map(|&w| {
                let l = random_label();
                zero[w as usize] = l;
                [l, l ^ delta]
            })
            .collect()
    };
    let garbler = pairs(&circuit.garbler_inputs, &mut zero);
    let evaluator = pairs(&circuit.evaluator_inputs, &mut zero);
    let mut rng = ChaCha20Rng::from_seed(seed);
    rng.set_stream(1);
    let mut tables = Vec::with_capacity(circuit.and_count());
    for (gid, g) in circuit.gates.iter().enumerate() {
        match *g {
            Gate::Xor { a, b, out } => zero[out as usize] = zero[a as usize] ^ zero[b as usize],
            Gate::Not { a, out } => zero[out as usize] = zero[a as usize] ^ delta,
            Gate::And { a, b, out } => {
                let mut buf = [0u8; 16];
                rng.fill_bytes(&mut buf);
                let out0 = u128::from_le_bytes(buf);
                zero[out as usize] = out0;
                let mut table = [0 as Label; 4];
                for va in 0..2u8 {
                    for vb in 0..2u8 {
                        let la = zero[a as usize] ^ if va == 1 { delta } else { 0 };
                        let lb = zero[b as usize] ^ if vb == 1 { delta } else { 0 };
                        let lo = out0 ^ if va & vb == 1 { delta } else { 0 };
                        let row = 2 * lsb(la) as usize + lsb(lb) as usize;
                        table[row] = gate_hash(la, lb, gid as u64) ^ lo;
                    }
                }
                tables.push(table);
            }
        }
    }
    let decode = circuit
        .outputs
        .iter()
        .map(|&o| lsb(zero[o as usize]))
        .collect();
    (
        GarbledCircuit { tables, decode },
        InputLabels { garbler, evaluator },
    )
}

/// Evaluate with one label per input wire; returns the output labels.
pub fn evaluate(
    circuit: &Circuit,
    gc: &GarbledCircuit,
    garbler_labels: &[Label],
    evaluator_labels: &[Label],
) -> Result<Vec<Label>, GcError> {
    check_len(circuit.garbler_inputs.len(), garbler_labels.len())?;
    check_len(circuit.evaluator_inputs.len(), evaluator_labels.len())?;
    if gc.tables.len() != circuit.and_count() {
        return Err(GcError::Malformed("table count does not match circuit"));
    }
    let mut l = vec![0 as Label; circuit.num_wires as usize];
    for (&w, &x) in circuit.garbler_inputs.iter().zip(garbler_labels) {
        l[w as usize] = x;
    }
    for (&w, &x) in circuit.evaluator_inputs.iter().zip(evaluator_labels) {
        l[w as usize] = x;
    }
    let mut tables = gc.tables.iter();
    for (gid, g) in circuit.gates.iter().enumerate() {
        match *g {
            Gate::Xor { a, b, out } => l[out as usize] = l[a as usize] ^ l[b as usize],
            Gate::Not { a, out } => l[out as usize] = l[a as usize],
            Gate::And { a, b, out } => {
                let (la, lb) = (l[a as usize], l[b as usize]);
                let t = tables.next().expect("count checked");
                let row = 2 * lsb(la) as usize + lsb(lb) as usize;
                l[out as usize] = gate_hash(la, lb, gid as u64) ^ t[row];
            }
        }
    }
    Ok(circuit.outputs.iter().map(|&o| l[o as usize]).collect())
}

/// Permute bits of output labels; combined with decode bits they give the
/// plaintext output.
pub fn colors(labels: &[Label]) -> Vec<bool> {
    labels.iter().map(|&l| lsb(l)).collect()
}

pub fn decode_outputs(colors: &[bool], decode: &[bool]) -> Result<Vec<bool>, GcError> {
    check_len(decode.len(), colors.len())?;
    Ok(colors.iter().zip(decode).map(|(c, d)| c ^ d).collect())
}

pub(crate) fn write_bits(w: &mut Writer, bits: &[bool]) {
    w.count(bits.len());
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        bytes[i / 8] |= (b as u8) << (i % 8);
    }
    w.raw(&bytes);
}

pub(crate) fn read_bits(r: &mut Reader<'_>) -> Result<Vec<bool>, DecodeError> {
    let n = r.u32()? as usize;
    let bytes = r.take(n.div_ceil(8))?;
    if n % 8 != 0 && bytes[n / 8] >> (n % 8) != 0 {
        return Err(DecodeError::Invalid("padding bits set"));
    }
    Ok((0..n).map(|i| (bytes[i / 8] >> (i % 8)) & 1 == 1).collect())
}

pub(crate) fn write_labels(w: &mut Writer, labels: &[Label]) {
    w.count(labels.len());
    for l in labels {
        w.raw(&l.to_le_bytes());
    }
}

pub(crate) fn read_labels(r: &mut Reader<'_>) -> Result<Vec<Label>, DecodeError> {
    let n = r.count(16)?;
    (0..n)
        .map(|_| Ok(u128::from_le_bytes(r.array::<16>()?)))
        .collect()
}

impl GarbledCircuit {
    pub fn encode(&self, w: &mut Writer) {
        w.count(self.tables.len());
        for t in &self.tables {
            for row in t {
                w.raw(&row.to_le_bytes());
            }
        }
        write_bits(w, &self.decode);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(64)?;
        let mut tables = Vec::with_capacity(n);
        for _ in 0..n {
            let mut t = [0 as Label; 4];
            for row in t.iter_mut() {
                *row = u128::from_le_bytes(r.array::<16>()?);
            }
            tables.push(t);
        }
        let decode = read_bits(r)?;
        Ok(Self { tables, decode })
    }

    /// Serialized size of the tables alone.
    pub fn table_bytes(&self) -> usize {
        self.tables.len() * 64
    }
}
