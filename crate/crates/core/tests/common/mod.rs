#![allow(dead_code)]

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use pretzel_core::ahe::BackendParams;
use pretzel_core::channel::{Channel, Frame, TransportError};
use pretzel_core::model::{FeatureVector, ModelKind, QuantizedModel, Vocabulary};
use pretzel_core::packing::{make_layout, PackingLayout, PackingMode};
use pretzel_core::{rng_from_seed, seed_from_u64, ChaCha20Rng, RngCore};

/// In-memory duplex endpoint that also logs what it sent and received.
pub struct TestChannel {
    tx: Option<Sender<Frame>>,
    rx: Receiver<Frame>,
    pub log: Arc<Mutex<Vec<(bool, Frame)>>>,
    /// Fail every operation from this index on (sends and receives counted
    /// together).
    pub fail_at: Option<usize>,
    ops: usize,
}

pub fn pair() -> (TestChannel, TestChannel) {
    let (ta, rb) = channel();
    let (tb, ra) = channel();
    let mk = |tx, rx| TestChannel {
        tx: Some(tx),
        rx,
        log: Arc::default(),
        fail_at: None,
        ops: 0,
    };
    (mk(ta, ra), mk(tb, rb))
}

impl TestChannel {
    fn step(&mut self) -> Result<(), TransportError> {
        let op = self.ops;
        self.ops += 1;
        if self.fail_at.is_some_and(|k| op >= k) {
            self.tx = None;
            return Err(TransportError::Io("injected".into()));
        }
        Ok(())
    }

    pub fn frames(&self) -> Vec<Frame> {
        self.log.lock().unwrap().iter().map(|(_, f)| f.clone()).collect()
    }

    pub fn sent(&self) -> Vec<Frame> {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|(s, _)| *s)
            .map(|(_, f)| f.clone())
            .collect()
    }

    pub fn received(&self) -> Vec<Frame> {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|(s, _)| !*s)
            .map(|(_, f)| f.clone())
            .collect()
    }

    pub fn close(&mut self) {
        self.tx = None;
    }
}

impl Channel for TestChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.step()?;
        let tx = self.tx.as_ref().ok_or(TransportError::Closed)?;
        tx.send(frame.clone()).map_err(|_| TransportError::Closed)?;
        self.log.lock().unwrap().push((true, frame.clone()));
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        self.step()?;
        let f = self.rx.recv().map_err(|_| TransportError::Closed)?;
        self.log.lock().unwrap().push((false, f.clone()));
        Ok(f)
    }
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    rng_from_seed(seed_from_u64(seed))
}

pub fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    rng.next_u64() % n
}

/// Small BV ring so tests stay fast; same code paths as n = 1024.
pub fn bv_layout(ring_degree: usize, mode: PackingMode) -> PackingLayout {
    make_layout(12, 6, 692, 12, BackendParams::bv_with_degree(ring_degree), mode).unwrap()
}

pub fn paillier_layout(bits: u32) -> PackingLayout {
    make_layout(
        12,
        6,
        692,
        12,
        BackendParams::Paillier { modulus_bits: bits },
        PackingMode::WithinRow,
    )
    .unwrap()
}

/// Random quantized model with `b_in`-bit parameters.
pub fn random_qmodel(
    rng: &mut impl RngCore,
    kind: ModelKind,
    n: usize,
    b: usize,
    b_in: u32,
) -> QuantizedModel {
    let lim = 1u64 << b_in;
    let labels = match kind {
        ModelKind::GrnbSpam => vec!["spam".to_string(), "ham".to_string()],
        _ => (0..b).map(|j| format!("c{j}")).collect(),
    };
    QuantizedModel {
        kind,
        labels,
        vocab: Vocabulary::from_tokens((0..n).map(|i| format!("w{i}"))).unwrap(),
        b_in,
        scale: 8,
        offset: -10.0,
        qweights: (0..b)
            .map(|_| (0..n).map(|_| below(rng, lim)).collect())
            .collect(),
        qpriors: (0..b).map(|_| below(rng, lim)).collect(),
    }
}

/// Up to `max_len` distinct features with frequencies in `1..=max_freq`.
pub fn random_fv(rng: &mut impl RngCore, n: usize, max_len: usize, max_freq: u32) -> FeatureVector {
    let len = below(rng, max_len.min(n) as u64 + 1) as usize;
    let mut ids: Vec<u32> = (0..n as u32).collect();
    for i in 0..len {
        let j = i + below(rng, (n - i) as u64) as usize;
        ids.swap(i, j);
    }
    let mut chosen = ids[..len].to_vec();
    chosen.sort_unstable();
    let entries = chosen
        .iter()
        .map(|&id| (id, 1 + below(rng, max_freq as u64) as u32))
        .collect();
    FeatureVector::new(entries).unwrap()
}

/// Run two closures on the two ends of a fresh pair.
pub fn run_pair<A, B, RA, RB>(a: A, b: B) -> (RA, RB, TestChannel, TestChannel)
where
    A: FnOnce(&mut TestChannel) -> RA + Send,
    B: FnOnce(&mut TestChannel) -> RB + Send,
    RA: Send,
    RB: Send,
{
    run_pair_faulty(None, None, a, b)
}

/// `run_pair` with operation-indexed faults injected on either end.
pub fn run_pair_faulty<A, B, RA, RB>(
    fail_a: Option<usize>,
    fail_b: Option<usize>,
    a: A,
    b: B,
) -> (RA, RB, TestChannel, TestChannel)
where
    A: FnOnce(&mut TestChannel) -> RA + Send,
    B: FnOnce(&mut TestChannel) -> RB + Send,
    RA: Send,
    RB: Send,
{
    let (mut ca, mut cb) = pair();
    ca.fail_at = fail_a;
    cb.fail_at = fail_b;
    let (ra, rb) = std::thread::scope(|s| {
        let h = s.spawn(|| {
            let r = a(&mut ca);
            ca.close();
            r
        });
        let rb = b(&mut cb);
        cb.close();
        (h.join().unwrap(), rb)
    });
    (ra, rb, ca, cb)
}
