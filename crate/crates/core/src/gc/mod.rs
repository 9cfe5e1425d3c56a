//! Semi-honest Yao garbled circuits with base oblivious transfer.
//!
//! Message flow of one run (garbler G, evaluator E):
//!
//! 1. G -> E `GC_TABLES`: circuit hash, output routing, AND tables,
//!    decode bits (only when E receives the output), G's active input labels.
//! 2. If E has inputs: G -> E `OT_MSG` (A), E -> G `OT_MSG` (B_i),
//!    G -> E `OT_MSG` (encrypted label pairs).
//! 3. If G receives the output: E -> G `OUTPUT` (permute bits of the output
//!    labels), which G decodes.

pub mod circuit;
pub mod garble;
pub mod ot;

use alloc::vec::Vec;

use rand_core::{CryptoRng, RngCore};

pub use circuit::{
    argmax_evaluator_inputs, argmax_garbler_inputs, from_bits, index_bits_for,
    threshold_evaluator_inputs, threshold_garbler_inputs, to_bits, Circuit, CircuitBuilder,
    CircuitSpec, Gate, Wire,
};
pub use garble::{colors, decode_outputs, evaluate, garble, GarbledCircuit, InputLabels, Label};

use crate::channel::{recv_expect, send, send_abort, Channel, ExchangeError, Tag, TransportError};
use crate::wire::{DecodeError, Reader, Writer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GcError {
    #[error("invalid circuit: {0}")]
    Circuit(&'static str),
    #[error("expected {expected} inputs, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("peer garbled a different circuit")]
    CircuitMismatch,
    #[error("peer disagrees on output routing")]
    RoutingMismatch,
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
}

impl From<TransportError> for GcError {
    fn from(e: TransportError) -> Self {
        GcError::Exchange(e.into())
    }
}

impl From<DecodeError> for GcError {
    fn from(_: DecodeError) -> Self {
        GcError::Malformed("truncated or invalid payload")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Garbler,
    Evaluator,
}

fn parse<'a, T>(
    payload: &'a [u8],
    f: impl FnOnce(&mut Reader<'a>) -> Result<T, DecodeError>,
) -> Result<T, GcError> {
    let mut r = Reader::new(payload);
    let v = f(&mut r)?;
    r.finish()?;
    Ok(v)
}

/// Garbler side. Returns the decoded output if `output_to` is the garbler.
pub fn run_garbler<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    circuit: &Circuit,
    inputs: &[bool],
    output_to: Party,
    rng: &mut R,
) -> Result<Option<Vec<bool>>, GcError> {
    let res = garbler_inner(ch, circuit, inputs, output_to, rng);
    abort_on_local_error(ch, &res);
    res
}

/// Evaluator side. Returns the decoded output if `output_to` is the
/// evaluator.
pub fn run_evaluator<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    circuit: &Circuit,
    inputs: &[bool],
    output_to: Party,
    rng: &mut R,
) -> Result<Option<Vec<bool>>, GcError> {
    let res = evaluator_inner(ch, circuit, inputs, output_to, rng);
    abort_on_local_error(ch, &res);
    res
}

/// Dispatch on role.
pub fn run_yao<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    role: Party,
    circuit: &Circuit,
    inputs: &[bool],
    output_to: Party,
    rng: &mut R,
) -> Result<Option<Vec<bool>>, GcError> {
    match role {
        Party::Garbler => run_garbler(ch, circuit, inputs, output_to, rng),
        Party::Evaluator => run_evaluator(ch, circuit, inputs, output_to, rng),
    }
}

fn abort_on_local_error<C: Channel + ?Sized, T>(ch: &mut C, res: &Result<T, GcError>) {
    match res {
        Ok(_) | Err(GcError::Exchange(_)) => {}
        Err(e) => {
            let msg = alloc::format!("{e}");
            send_abort(ch, &msg);
        }
    }
}

fn routing_byte(p: Party) -> u8 {
    match p {
        Party::Garbler => 0,
        Party::Evaluator => 1,
    }
}

fn garbler_inner<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    circuit: &Circuit,
    inputs: &[bool],
    output_to: Party,
    rng: &mut R,
) -> Result<Option<Vec<bool>>, GcError> {
    circuit.validate()?;
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let (gc, labels) = garble(circuit, seed);
    let active = labels.garbler_active(inputs)?;

    let mut w = Writer::with_capacity(64 + gc.table_bytes() + active.len() * 16);
    w.raw(&circuit.hash()).u8(routing_byte(output_to));
    let shown = GarbledCircuit {
        tables: gc.tables,
        decode: if output_to == Party::Evaluator {
            gc.decode.clone()
        } else {
            Vec::new()
        },
    };
    shown.encode(&mut w);
    garble::write_labels(&mut w, &active);
    send(ch, Tag::GcTables, w.finish())?;

    if !labels.evaluator.is_empty() {
        let (sender, a) = ot::OtSender::start(rng);
        send(ch, Tag::OtMsg, a.to_vec())?;
        let points = parse(&recv_expect(ch, Tag::OtMsg)?, ot::read_points)?;
        let enc = sender.respond(&points, &labels.evaluator)?;
        let mut w = Writer::with_capacity(4 + enc.len() * 32);
        ot::write_pairs(&mut w, &enc);
        send(ch, Tag::OtMsg, w.finish())?;
    }

    if output_to == Party::Garbler {
        let colors = parse(&recv_expect(ch, Tag::Output)?, garble::read_bits)?;
        if colors.len() != gc.decode.len() {
            return Err(GcError::Malformed("wrong number of output bits"));
        }
        return Ok(Some(decode_outputs(&colors, &gc.decode)?));
    }
    Ok(None)
}

fn evaluator_inner<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    circuit: &Circuit,
    inputs: &[bool],
    output_to: Party,
    rng: &mut R,
) -> Result<Option<Vec<bool>>, GcError> {
    circuit.validate()?;
    if inputs.len() != circuit.evaluator_inputs.len() {
        return Err(GcError::InputCount {
            expected: circuit.evaluator_inputs.len(),
            found: inputs.len(),
        });
    }
    let payload = recv_expect(ch, Tag::GcTables)?;
    let (hash, routing, gc, g_labels) = parse(&payload, |r| {
        let hash = r.array::<32>()?;
        let routing = r.u8()?;
        let gc = GarbledCircuit::decode(r)?;
        let labels = garble::read_labels(r)?;
        Ok((hash, routing, gc, labels))
    })?;
    if hash != circuit.hash() {
        return Err(GcError::CircuitMismatch);
    }
    if routing != routing_byte(output_to) {
        return Err(GcError::RoutingMismatch);
    }
    let expected_decode = if output_to == Party::Evaluator {
        circuit.outputs.len()
    } else {
        0
    };
    if gc.decode.len() != expected_decode {
        return Err(GcError::Malformed("wrong number of decode bits"));
    }
    if g_labels.len() != circuit.garbler_inputs.len() {
        return Err(GcError::Malformed("wrong number of garbler labels"));
    }

    let e_labels = if inputs.is_empty() {
        Vec::new()
    } else {
        let a = parse(&recv_expect(ch, Tag::OtMsg)?, |r| r.array::<32>())?;
        let (receiver, points) = ot::OtReceiver::choose(a, inputs, rng)?;
        let mut w = Writer::with_capacity(4 + points.len() * 32);
        ot::write_points(&mut w, &points);
        send(ch, Tag::OtMsg, w.finish())?;
        let enc = parse(&recv_expect(ch, Tag::OtMsg)?, ot::read_pairs)?;
        receiver.finish(&enc)?
    };

    let out = evaluate(circuit, &gc, &g_labels, &e_labels)?;
    let c = colors(&out);
    match output_to {
        Party::Evaluator => Ok(Some(decode_outputs(&c, &gc.decode)?)),
        Party::Garbler => {
            let mut w = Writer::new();
            garble::write_bits(&mut w, &c);
            send(ch, Tag::Output, w.finish())?;
            Ok(None)
        }
    }
}
