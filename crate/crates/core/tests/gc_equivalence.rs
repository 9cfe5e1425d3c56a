mod common;

use std::collections::HashSet;

use common::{below, rng, run_pair};
use pretzel_core::channel::{Frame, Tag};
use pretzel_core::gc::{
    self, colors, decode_outputs, evaluate, garble, Circuit, CircuitBuilder, CircuitSpec,
    GarbledCircuit, Label, Party,
};
use pretzel_core::wire::Reader;
use pretzel_core::RngCore;

const TRIALS: usize = 1000;

fn bits(v: u64, w: u32) -> Vec<bool> {
    gc::to_bits(v, w)
}

fn mask(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1 << w) - 1
    }
}

/// Garble, hand the evaluator its labels directly, evaluate, decode.
fn garbled_eval(c: &Circuit, g: &[bool], e: &[bool], seed: u64) -> Vec<bool> {
    let (gcirc, labels) = garble(c, pretzel_core::seed_from_u64(seed));
    let gl = labels.garbler_active(g).unwrap();
    let el: Vec<Label> = labels
        .evaluator
        .iter()
        .zip(e)
        .map(|(l, &b)| l[b as usize])
        .collect();
    let out = evaluate(c, &gcirc, &gl, &el).unwrap();
    decode_outputs(&colors(&out), &gcirc.decode).unwrap()
}

/// Garbled and plaintext evaluation agree; returns the shared output.
fn check(c: &Circuit, g: &[bool], e: &[bool], seed: u64) -> Vec<bool> {
    let plain = c.eval(g, e).unwrap();
    assert_eq!(garbled_eval(c, g, e, seed), plain);
    plain
}

fn word_circuit(w: u32, f: impl FnOnce(&mut CircuitBuilder, &[u32], &[u32]) -> Vec<u32>) -> Circuit {
    let mut b = CircuitBuilder::new();
    let x = b.garbler_word(w);
    let y = b.evaluator_word(w);
    let out = f(&mut b, &x, &y);
    let c = b.finish(out);
    c.validate().unwrap();
    c
}

#[test]
fn adder_matches_integers() {
    let mut r = rng(1);
    for t in 0..TRIALS {
        let w = 1 + below(&mut r, 64) as u32;
        let c = word_circuit(w, |b, x, y| b.add(x, y));
        let (x, y) = (r.next_u64() & mask(w), r.next_u64() & mask(w));
        let out = check(&c, &bits(x, w), &bits(y, w), t as u64);
        assert_eq!(gc::from_bits(&out), x.wrapping_add(y) & mask(w));
    }
}

#[test]
fn subtractor_matches_integers() {
    let mut r = rng(2);
    for t in 0..TRIALS {
        let w = 1 + below(&mut r, 64) as u32;
        let c = word_circuit(w, |b, x, y| {
            let (d, borrow) = b.sub(x, y);
            let mut v = d;
            v.push(borrow);
            v
        });
        let (x, y) = (r.next_u64() & mask(w), r.next_u64() & mask(w));
        let out = check(&c, &bits(x, w), &bits(y, w), t as u64);
        assert_eq!(gc::from_bits(&out[..w as usize]), x.wrapping_sub(y) & mask(w));
        assert_eq!(out[w as usize], x < y);
    }
}

#[test]
fn comparator_matches_integers() {
    let mut r = rng(3);
    for t in 0..TRIALS {
        let w = 1 + below(&mut r, 64) as u32;
        let c = word_circuit(w, |b, x, y| vec![b.greater_than(x, y)]);
        let x = r.next_u64() & mask(w);
        // equal operands are common enough to matter
        let y = if t % 5 == 0 { x } else { r.next_u64() & mask(w) };
        let out = check(&c, &bits(x, w), &bits(y, w), t as u64);
        assert_eq!(out, vec![x > y]);
    }
}

#[test]
fn mux_matches_selection() {
    let mut r = rng(4);
    for t in 0..TRIALS {
        let w = 1 + below(&mut r, 32) as u32;
        let mut b = CircuitBuilder::new();
        let s = b.garbler_input();
        let x = b.garbler_word(w);
        let y = b.evaluator_word(w);
        let out = b.mux_word(s, &x, &y);
        let c = b.finish(out);
        let sel = r.next_u64() & 1 == 1;
        let (xv, yv) = (r.next_u64() & mask(w), r.next_u64() & mask(w));
        let mut g = vec![sel];
        g.extend(bits(xv, w));
        let out = check(&c, &g, &bits(yv, w), t as u64);
        assert_eq!(gc::from_bits(&out), if sel { yv } else { xv });
    }
}

/// Random threshold-circuit inputs: returns garbler bits, evaluator bits and
/// the expected verdict.
fn threshold_case(r: &mut impl RngCore, width: u32, value_bits: u32) -> (Vec<bool>, Vec<bool>, bool) {
    let lambda = width - value_bits - 1;
    let vmax = 1u64 << value_bits;
    let d1 = below(r, vmax);
    let d2 = below(r, vmax);
    let n1 = below(r, 1 << (value_bits + lambda));
    let n2 = below(r, 1 << (value_bits + lambda));
    let tau = below(r, 2 * vmax + 1) as i64 - vmax as i64;
    let g = gc::threshold_garbler_inputs(d1 + n1, d2 + n2, tau, width);
    let e = gc::threshold_evaluator_inputs(n1, n2, width);
    (g, e, (d2 as i64 - d1 as i64) < tau)
}

#[test]
fn threshold_circuit_matches_oracle() {
    let mut r = rng(5);
    for t in 0..TRIALS {
        let (width, value_bits) = if t % 2 == 0 {
            (41, 28)
        } else {
            let vb = 1 + below(&mut r, 20) as u32;
            (vb + 2 + below(&mut r, 10) as u32, vb)
        };
        let c = CircuitSpec::UnblindThreshold { width, value_bits }.build().unwrap();
        let (g, e, want) = threshold_case(&mut r, width, value_bits);
        assert_eq!(check(&c, &g, &e, t as u64), vec![want]);
    }
}

struct ArgmaxCase {
    spec: CircuitSpec,
    g: Vec<bool>,
    e: Vec<bool>,
    want: u64,
}

fn argmax_case(r: &mut impl RngCore, count: usize, width: u32, value_bits: u32) -> ArgmaxCase {
    let index_bits = gc::index_bits_for(count.max(2) * 3);
    let lambda = width - value_bits - 1;
    let range = 1u64 << value_bits.min(6);
    // small value range forces ties
    let ds: Vec<u64> = (0..count).map(|_| below(r, range)).collect();
    let ns: Vec<u64> = (0..count)
        .map(|_| below(r, 1 << (value_bits + lambda)))
        .collect();
    let payloads: Vec<u64> = (0..count).map(|_| below(r, 1 << index_bits)).collect();
    let ys: Vec<u64> = ds.iter().zip(&ns).map(|(d, n)| d + n).collect();
    let mut best = 0;
    for j in 1..count {
        if ds[j] > ds[best] {
            best = j;
        }
    }
    ArgmaxCase {
        spec: CircuitSpec::UnblindArgmax {
            count,
            width,
            value_bits,
            index_bits,
        },
        g: gc::argmax_garbler_inputs(&ys, width),
        e: gc::argmax_evaluator_inputs(&ns, &payloads, width, index_bits),
        want: payloads[best],
    }
}

#[test]
fn argmax_circuit_matches_oracle() {
    let mut r = rng(6);
    for t in 0..TRIALS {
        let count = 1 + below(&mut r, 8) as usize;
        let (width, value_bits) = if t % 2 == 0 {
            (41, 28)
        } else {
            let vb = 1 + below(&mut r, 20) as u32;
            (vb + 1 + below(&mut r, 10) as u32, vb)
        };
        let case = argmax_case(&mut r, count, width, value_bits);
        let c = case.spec.build().unwrap();
        let out = check(&c, &case.g, &case.e, t as u64);
        assert_eq!(gc::from_bits(&out), case.want);
    }
}

#[test]
fn spec_validation() {
    assert!(CircuitSpec::UnblindThreshold { width: 10, value_bits: 9 }.build().is_err());
    assert!(CircuitSpec::UnblindThreshold { width: 65, value_bits: 9 }.build().is_err());
    let bad = CircuitSpec::UnblindArgmax { count: 0, width: 8, value_bits: 4, index_bits: 2 };
    assert!(bad.build().is_err());
    assert_eq!(gc::index_bits_for(1), 1);
    assert_eq!(gc::index_bits_for(2), 1);
    assert_eq!(gc::index_bits_for(3), 2);
    assert_eq!(gc::index_bits_for(20), 5);
    assert_eq!(gc::index_bits_for(1024), 10);
}

fn label_bytes(l: Label) -> [u8; 16] {
    l.to_le_bytes()
}

fn transcript(frames: &[Frame]) -> Vec<u8> {
    frames.iter().flat_map(|f| f.payload.iter().copied()).collect()
}

fn contains_any(hay: &[u8], needles: &HashSet<[u8; 16]>) -> bool {
    hay.windows(16)
        .any(|w| needles.contains(<&[u8; 16]>::try_from(w).unwrap()))
}

struct TwoParty {
    out_g: Option<Vec<bool>>,
    out_e: Option<Vec<bool>>,
    frames: Vec<Frame>,
    secret: HashSet<[u8; 16]>,
    /// Active garbler labels, which must appear (scan sanity check).
    shown: HashSet<[u8; 16]>,
}

/// Full two-party run over a logging channel. Collects every label the
/// transcript must not contain: inactive garbler labels, both labels of
/// every evaluator wire, and the global offset.
fn two_party(c: &Circuit, g: &[bool], e: &[bool], to: Party, seed: u64) -> TwoParty {
    let g_rng = rng(seed);
    let mut replay = g_rng.clone();
    let mut s = [0u8; 32];
    replay.fill_bytes(&mut s);
    let (_, labels) = garble(c, s);

    let (out_g, out_e, cg, _) = run_pair(
        |ch| {
            let mut r = g_rng;
            gc::run_garbler(ch, c, g, to, &mut r).unwrap()
        },
        |ch| gc::run_evaluator(ch, c, e, to, &mut rng(seed ^ 1)).unwrap(),
    );

    let mut secret = HashSet::new();
    let mut shown = HashSet::new();
    for (pair, &b) in labels.garbler.iter().zip(g) {
        shown.insert(label_bytes(pair[b as usize]));
        secret.insert(label_bytes(pair[!b as usize]));
        secret.insert(label_bytes(pair[0] ^ pair[1]));
    }
    for pair in &labels.evaluator {
        secret.insert(label_bytes(pair[0]));
        secret.insert(label_bytes(pair[1]));
    }
    TwoParty {
        out_g,
        out_e,
        frames: cg.frames(),
        secret,
        shown,
    }
}

fn tables_frame(frames: &[Frame]) -> GarbledCircuit {
    let f = frames.iter().find(|f| f.tag == Tag::GcTables).unwrap();
    let mut r = Reader::new(&f.payload);
    r.take(33).unwrap();
    GarbledCircuit::decode(&mut r).unwrap()
}

#[test]
fn two_party_threshold_and_label_hygiene() {
    let mut r = rng(7);
    for t in 0..100u64 {
        let spec = CircuitSpec::UnblindThreshold { width: 41, value_bits: 28 };
        let c = spec.build().unwrap();
        let (g, e, want) = threshold_case(&mut r, 41, 28);
        let run = two_party(&c, &g, &e, Party::Evaluator, 100 + t);
        assert_eq!(run.out_e, Some(vec![want]));
        assert_eq!(run.out_g, None);
        assert!(!contains_any(&transcript(&run.frames), &run.secret));
        for l in run.shown.iter().filter(|_| t < 5) {
            assert!(contains_any(&transcript(&run.frames), &HashSet::from([*l])));
        }
        assert!(run.frames.iter().all(|f| f.tag != Tag::Output));
        assert_eq!(tables_frame(&run.frames).decode.len(), 1);
    }
}

#[test]
fn two_party_argmax_and_label_hygiene() {
    let mut r = rng(8);
    for t in 0..60u64 {
        let count = 1 + below(&mut r, 6) as usize;
        let case = argmax_case(&mut r, count, 41, 28);
        let c = case.spec.build().unwrap();
        let run = two_party(&c, &case.g, &case.e, Party::Garbler, 200 + t);
        assert_eq!(run.out_g.map(|o| gc::from_bits(&o)), Some(case.want));
        assert_eq!(run.out_e, None);
        assert!(!contains_any(&transcript(&run.frames), &run.secret));
        // output goes to the garbler: no decode bits ever leave it
        assert!(tables_frame(&run.frames).decode.is_empty());
        let outputs: Vec<&Frame> = run.frames.iter().filter(|f| f.tag == Tag::Output).collect();
        assert_eq!(outputs.len(), 1);
    }
}

#[test]
fn evaluator_rejects_other_circuit_and_routing() {
    let a = CircuitSpec::UnblindThreshold { width: 12, value_bits: 8 }.build().unwrap();
    let b = CircuitSpec::UnblindThreshold { width: 13, value_bits: 8 }.build().unwrap();
    let g = vec![false; a.garbler_inputs.len()];
    let (_, res, _, _) = run_pair(
        |ch| gc::run_garbler(ch, &a, &g, Party::Evaluator, &mut rng(1)),
        |ch| gc::run_evaluator(ch, &b, &vec![false; b.evaluator_inputs.len()], Party::Evaluator, &mut rng(2)),
    );
    assert_eq!(res.unwrap_err(), gc::GcError::CircuitMismatch);

    let (_, res, _, _) = run_pair(
        |ch| gc::run_garbler(ch, &a, &g, Party::Evaluator, &mut rng(1)),
        |ch| gc::run_evaluator(ch, &a, &vec![false; a.evaluator_inputs.len()], Party::Garbler, &mut rng(2)),
    );
    assert_eq!(res.unwrap_err(), gc::GcError::RoutingMismatch);
}

#[test]
fn garbling_is_deterministic_per_seed() {
    let c = CircuitSpec::UnblindThreshold { width: 20, value_bits: 10 }.build().unwrap();
    let s = pretzel_core::seed_from_u64(3);
    assert_eq!(garble(&c, s).0, garble(&c, s).0);
    assert_ne!(garble(&c, s).0, garble(&c, pretzel_core::seed_from_u64(4)).0);
    assert_eq!(garble(&c, s).0.tables.len(), c.and_count());
}
