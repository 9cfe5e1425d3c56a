//! Boolean circuits over XOR/AND/NOT, a word-level builder, and the two
//! unblinding circuits used by the protocols.

use alloc::vec;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::GcError;
use crate::wire::Writer;

pub type Wire = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Xor { a: Wire, b: Wire, out: Wire },
    And { a: Wire, b: Wire, out: Wire },
    Not { a: Wire, out: Wire },
}

impl Gate {
    pub fn output(&self) -> Wire {
        match *self {
            Gate::Xor { out, .. } | Gate::And { out, .. } | Gate::Not { out, .. } => out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub num_wires: u32,
    pub garbler_inputs: Vec<Wire>,
    pub evaluator_inputs: Vec<Wire>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<Wire>,
}

impl Circuit {
    /// Checks topological order, single assignment and output reachability.
    pub fn validate(&self) -> Result<(), GcError> {
        let mut written = vec![false; self.num_wires as usize];
        let mut write = |w: Wire| -> Result<(), GcError> {
            let slot = written
                .get_mut(w as usize)
                .ok_or(GcError::Circuit("wire id out of range"))?;
            if *slot {
                return Err(GcError::Circuit("wire written twice"));
            }
            *slot = true;
            Ok(())
        };
        for &w in self.garbler_inputs.iter().chain(&self.evaluator_inputs) {
            write(w)?;
        }
        let mut ready = vec![false; self.num_wires as usize];
        for &w in self.garbler_inputs.iter().chain(&self.evaluator_inputs) {
            ready[w as usize] = true;
        }
        for g in &self.gates {
            let ins: &[Wire] = match g {
                Gate::Xor { a, b, .. } | Gate::And { a, b, .. } => &[*a, *b],
                Gate::Not { a, .. } => &[*a],
            };
            for &i in ins {
                if !ready.get(i as usize).copied().unwrap_or(false) {
                    return Err(GcError::Circuit("gate reads an unwritten wire"));
                }
            }
            write(g.output())?;
            ready[g.output() as usize] = true;
        }
        if self
            .outputs
            .iter()
            .any(|&o| !ready.get(o as usize).copied().unwrap_or(false))
        {
            return Err(GcError::Circuit("output wire never written"));
        }
        Ok(())
    }

    pub fn and_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::And { .. }))
            .count()
    }

    /// Plaintext evaluation.
    pub fn eval(&self, garbler: &[bool], evaluator: &[bool]) -> Result<Vec<bool>, GcError> {
        check_len(self.garbler_inputs.len(), garbler.len())?;
        check_len(self.evaluator_inputs.len(), evaluator.len())?;
        let mut v = vec![false; self.num_wires as usize];
        for (&w, &x) in self.garbler_inputs.iter().zip(garbler) {
            v[w as usize] = x;
        }
        for (&w, &x) in self.evaluator_inputs.iter().zip(evaluator) {
            v[w as usize] = x;
        }
        for g in &self.gates {
            match *g {
                Gate::Xor { a, b, out } => v[out as usize] = v[a as usize] ^ v[b as usize],
                Gate::And { a, b, out } => v[out as usize] = v[a as usize] & v[b as usize],
                Gate::Not { a, out } => v[out as usize] = !v[a as usize],
            }
        }
        Ok(self.outputs.iter().map(|&o| v[o as usize]).collect())
    }

    /// Canonical little-endian encoding of the gate list and wiring.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.num_wires);
        for list in [&self.garbler_inputs, &self.evaluator_inputs] {
            w.count(list.len());
            for &x in list.iter() {
                w.u32(x);
            }
        }
        w.count(self.gates.len());
        for g in &self.gates {
            match *g {
                Gate::Xor { a, b, out } => w.u8(0).u32(a).u32(b).u32(out),
                Gate::And { a, b, out } => w.u8(1).u32(a).u32(b).u32(out),
                Gate::Not { a, out } => w.u8(2).u32(a).u32(out),
            };
        }
        w.count(self.outputs.len());
        for &o in &self.outputs {
            w.u32(o);
        }
        w.finish()
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), GcError> {
    if expected != found {
        return Err(GcError::InputCount { expected, found });
    }
    Ok(())
}

/// Little-endian bit vector of a word.
pub type Word = Vec<Wire>;

#[derive(Debug, Default)]
pub struct CircuitBuilder {
    next: u32,
    garbler_inputs: Vec<Wire>,
    evaluator_inputs: Vec<Wire>,
    gates: Vec<Gate>,
    zero: Option<Wire>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> Wire {
        let w = self.next;
        self.next += 1;
        w
    }

    pub fn garbler_input(&mut self) -> Wire {
        let w = self.fresh();
        self.garbler_inputs.push(w);
        w
    }

    pub fn evaluator_input(&mut self) -> Wire {
        let w = self.fresh();
        self.evaluator_inputs.push(w);
        w
    }

    pub fn garbler_word(&mut self, bits: u32) -> Word {
        (0..bits).map(|_| self.garbler_input()).collect()
    }

    pub fn evaluator_word(&mut self, bits: u32) -> Word {
        (0..bits).map(|_| self.evaluator_input()).collect()
    }

    pub fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        let out = self.fresh();
        self.gates.push(Gate::Xor { a, b, out });
        out
    }

    pub fn and(&mut self, a: Wire, b: Wire) -> Wire {
        let out = self.fresh();
        self.gates.push(Gate::And { a, b, out });
        out
    }

    pub fn not(&mut self, a: Wire) -> Wire {
        let out = self.fresh();
        self.gates.push(Gate::Not { a, out });
        out
    }

    /// Constant false, derived as `x ^ x` from the first input wire.
    pub fn zero(&mut self) -> Wire {
        if let Some(z) = self.zero {
            return z;
        }
        let src = *self
            .garbler_inputs
            .first()
            .or(self.evaluator_inputs.first())
            .expect("constant needs at least one input wire");
        let z = self.xor(src, src);
        self.zero = Some(z);
        z
    }

    /// `s ? b : a`.
    pub fn mux(&mut self, s: Wire, a: Wire, b: Wire) -> Wire {
        let d = self.xor(a, b);
        let t = self.and(s, d);
        self.xor(a, t)
    }

    pub fn mux_word(&mut self, s: Wire, a: &[Wire], b: &[Wire]) -> Word {
        a.iter().zip(b).map(|(&x, &y)| self.mux(s, x, y)).collect()
    }

    /// `a - b mod 2^len` and the final borrow (set iff `a < b` unsigned).
    pub fn sub(&mut self, a: &[Wire], b: &[Wire]) -> (Word, Wire) {
        assert_eq!(a.len(), b.len());
        let mut borrow = self.zero();
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.xor(x, y);
            out.push(self.xor(xy, borrow));
            // borrow' = maj(!x, y, borrow) = c ^ ((!x ^ c) & (y ^ c))
            let nx = self.not(x);
            let l = self.xor(nx, borrow);
            let r = self.xor(y, borrow);
            let t = self.and(l, r);
            borrow = self.xor(borrow, t);
        }
        (out, borrow)
    }

    /// `a + b mod 2^len`.
    pub fn add(&mut self, a: &[Wire], b: &[Wire]) -> Word {
        assert_eq!(a.len(), b.len());
        let mut carry = self.zero();
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.xor(x, y);
            out.push(self.xor(xy, carry));
            // carry' = c ^ ((x ^ c) & (y ^ c))
            let l = self.xor(x, carry);
            let r = self.xor(y, carry);
            let t = self.and(l, r);
            carry = self.xor(carry, t);
        }
        out
    }

    /// Unsigned `a > b`.
    pub fn greater_than(&mut self, a: &[Wire], b: &[Wire]) -> Wire {
        self.borrow_only(b, a)
    }

    /// Final borrow of `a - b` without materializing the difference.
    fn borrow_only(&mut self, a: &[Wire], b: &[Wire]) -> Wire {
        assert_eq!(a.len(), b.len());
        let mut borrow = self.zero();
        for (&x, &y) in a.iter().zip(b) {
            let nx = self.not(x);
            let l = self.xor(nx, borrow);
            let r = self.xor(y, borrow);
            let t = self.and(l, r);
            borrow = self.xor(borrow, t);
        }
        borrow
    }

    /// Zero-extend (or truncate) to `bits`.
    pub fn resize(&mut self, a: &[Wire], bits: usize) -> Word {
        let z = self.zero();
        (0..bits).map(|i| a.get(i).copied().unwrap_or(z)).collect()
    }

    pub fn finish(self, outputs: Vec<Wire>) -> Circuit {
        Circuit {
            num_wires: self.next,
            garbler_inputs: self.garbler_inputs,
            evaluator_inputs: self.evaluator_inputs,
            gates: self.gates,
            outputs,
        }
    }
}

/// The circuits the protocols need, identified by public shape only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitSpec {
    /// Garbler: `y1 = d1 + n1`, `y2 = d2 + n2`, `tau` (two's complement),
    /// each `width` bits. Evaluator: `n1`, `n2`. Output: `d2 - d1 < tau`.
    UnblindThreshold { width: u32, value_bits: u32 },
    /// Garbler: `count` blinded values of `width` bits. Evaluator: `count`
    /// noises of `width` bits, then `count` index payloads of `index_bits`.
    /// Output: payload of the largest unblinded value, first on ties.
    UnblindArgmax {
        count: usize,
        width: u32,
        value_bits: u32,
        index_bits: u32,
    },
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<(), GcError> {
        match *self {
            CircuitSpec::UnblindThreshold { width, value_bits } => {
                if width > 64 || value_bits == 0 || value_bits + 2 > width {
                    return Err(GcError::Circuit(
                        "threshold needs value_bits + 2 <= width <= 64",
                    ));
                }
            }
            CircuitSpec::UnblindArgmax {
                count,
                width,
                value_bits,
                index_bits,
            } => {
                if count == 0 {
                    return Err(GcError::Circuit("argmax needs at least one value"));
                }
                if width > 64 || value_bits == 0 || value_bits > width {
                    return Err(GcError::Circuit("argmax needs value_bits <= width <= 64"));
                }
                if index_bits == 0 || index_bits > 32 {
                    return Err(GcError::Circuit("index payload must be 1..=32 bits"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Circuit, GcError> {
        self.validate()?;
        Ok(match *self {
            CircuitSpec::UnblindThreshold { width, value_bits } => {
                build_threshold(width, value_bits)
            }
            CircuitSpec::UnblindArgmax {
                count,
                width,
                value_bits,
                index_bits,
            } => build_argmax(count, width, value_bits, index_bits),
        })
    }

    pub fn output_bits(&self) -> usize {
        match *self {
            CircuitSpec::UnblindThreshold { .. } => 1,
            CircuitSpec::UnblindArgmax { index_bits, .. } => index_bits as usize,
        }
    }
}

/// Bits needed for a 0-based index below `count` (at least one).
pub fn index_bits_for(count: usize) -> u32 {
    if count <= 2 {
        1
    } else {
        usize::BITS - (count - 1).leading_zeros()
    }
}

fn build_threshold(width: u32, value_bits: u32) -> Circuit {
    let w = width as usize;
    let mut c = CircuitBuilder::new();
    let y1 = c.garbler_word(width);
    let y2 = c.garbler_word(width);
    let tau = c.garbler_word(width);
    let n1 = c.evaluator_word(width);
    let n2 = c.evaluator_word(width);
    let (d1, _) = c.sub(&y1, &n1);
    let (d2, _) = c.sub(&y2, &n2);
    let d1 = c.resize(&d1[..value_bits as usize], w);
    let d2 = c.resize(&d2[..value_bits as usize], w);
    let (diff, _) = c.sub(&d2, &d1);
    let (v, _) = c.sub(&diff, &tau);
    let sign = v[w - 1];
    c.finish(vec![sign])
}

fn build_argmax(count: usize, width: u32, value_bits: u32, index_bits: u32) -> Circuit {
    let mut c = CircuitBuilder::new();
    let ys: Vec<Word> = (0..count).map(|_| c.garbler_word(width)).collect();
    let ns: Vec<Word> = (0..count).map(|_| c.evaluator_word(width)).collect();
    let idx: Vec<Word> = (0..count).map(|_| c.evaluator_word(index_bits)).collect();
    let ds: Vec<Word> = ys
        .iter()
        .zip(&ns)
        .map(|(y, n)| {
            let (d, _) = c.sub(y, n);
            d[..value_bits as usize].to_vec()
        })
        .collect();
    let mut best = ds[0].clone();
    let mut best_idx = idx[0].clone();
    for j in 1..count {
        let gt = c.greater_than(&ds[j], &best);
        best = c.mux_word(gt, &best, &ds[j]);
        best_idx = c.mux_word(gt, &best_idx, &idx[j]);
    }
    c.finish(best_idx)
}

/// Low `bits` bits of `v`, least significant first.
pub fn to_bits(v: u64, bits: u32) -> Vec<bool> {
    (0..bits).map(|i| (v >> i) & 1 == 1).collect()
}

pub fn from_bits(bits: &[bool]) -> u64 {
    bits.iter().rev().fold(0, |acc, &b| (acc << 1) | b as u64)
}

pub fn threshold_garbler_inputs(y1: u64, y2: u64, tau: i64, width: u32) -> Vec<bool> {
    let mut v = to_bits(y1, width);
    v.extend(to_bits(y2, width));
    v.extend(to_bits(tau as u64, width));
    v
}

pub fn threshold_evaluator_inputs(n1: u64, n2: u64, width: u32) -> Vec<bool> {
    let mut v = to_bits(n1, width);
    v.extend(to_bits(n2, width));
    v
}

pub fn argmax_garbler_inputs(blinded: &[u64], width: u32) -> Vec<bool> {
    blinded.iter().flat_map(|&y| to_bits(y, width)).collect()
}

pub fn argmax_evaluator_inputs(
    noises: &[u64],
    payloads: &[u64],
    width: u32,
    index_bits: u32,
) -> Vec<bool> {
    let mut v: Vec<bool> = noises.iter().flat_map(|&n| to_bits(n, width)).collect();
    v.extend(payloads.iter().flat_map(|&i| to_bits(i, index_bits)));
    v
}
