//! Two-party sessions: encrypted-model setup, spam filtering, full topic
//! extraction, and decomposed (candidate-pruned) topic extraction.
//!
//! Every session opens with a HELLO exchange carrying the protocol version
//! and a hash of the shared configuration. The client then sends blinded
//! dot products (`DOT_BLINDED`), and the parties finish in a garbled
//! circuit with the provider as garbler. Spam verdicts go to the client;
//! topics go to the provider. On a local failure a party sends ABORT before
//! returning its error.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::ahe::{AheError, Backend, Ciphertext, KeyPair, PackedPlaintext, PublicKey, SecretKey};
use crate::channel::{recv_expect, send, send_abort, Channel, ExchangeError, Tag, TransportError};
use crate::gc::{self, CircuitSpec, GcError, Party};
use crate::model::{
    extract_features, score_categories, Decision, FeatureVector, LinearModel, ModelError,
    QuantizedModel, Vocabulary,
};
use crate::packing::{
    self, encrypt_model, extract_slot, pack_model, packed_dot, EncryptedModel, ModelHeader,
    PackingError, PackingLayout,
};
use crate::wire::{DecodeError, Reader, Writer};

pub const PROTOCOL_VERSION: u8 = 1;

/// Ciphertexts per MODEL_CHUNK frame during setup.
pub const MODEL_CHUNK_CIPHERTEXTS: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("peer speaks protocol version {0}")]
    Version(u8),
    #[error("peer configuration differs")]
    ConfigMismatch,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("invalid candidate set: {0}")]
    Candidates(&'static str),
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ahe(#[from] AheError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Gc(#[from] GcError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
}

impl From<TransportError> for ProtocolError {
    fn from(e: TransportError) -> Self {
        ProtocolError::Exchange(e.into())
    }
}

impl From<DecodeError> for ProtocolError {
    fn from(_: DecodeError) -> Self {
        ProtocolError::Malformed("truncated or invalid payload")
    }
}

impl ProtocolError {
    /// True if the failure came from the channel or the peer, in which
    /// case no ABORT is sent.
    fn is_remote(&self) -> bool {
        matches!(
            self,
            ProtocolError::Exchange(_) | ProtocolError::Gc(GcError::Exchange(_))
        )
    }
}

fn finish_session<C: Channel + ?Sized, T>(
    ch: &mut C,
    res: Result<T, ProtocolError>,
) -> Result<T, ProtocolError> {
    if let Err(e) = &res {
        if !e.is_remote() {
            send_abort(ch, &format!("{e}"));
        }
    }
    res
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Spam,
    TopicFull,
    TopicDecomposed,
}

impl Function {
    pub fn name(self) -> &'static str {
        match self {
            Function::Spam => "spam",
            Function::TopicFull => "topic-full",
            Function::TopicDecomposed => "topic-decomposed",
        }
    }

    fn code(self) -> u8 {
        match self {
            Function::Spam => 1,
            Function::TopicFull => 2,
            Function::TopicDecomposed => 3,
        }
    }
}

/// Fields both parties must agree on before a classification session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub function: Function,
    pub layout: PackingLayout,
    pub num_features: usize,
    pub num_categories: usize,
    /// Candidate count; only meaningful for decomposed topic extraction.
    pub b_prime: usize,
}

impl SessionConfig {
    pub fn new(
        function: Function,
        layout: PackingLayout,
        num_features: usize,
        num_categories: usize,
        b_prime: usize,
    ) -> Result<Self, ProtocolError> {
        let c = Self {
            function,
            layout,
            num_features,
            num_categories,
            b_prime: if function == Function::TopicDecomposed {
                b_prime
            } else {
                0
            },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn for_model(
        function: Function,
        header: &ModelHeader,
        b_prime: usize,
    ) -> Result<Self, ProtocolError> {
        Self::new(
            function,
            header.layout,
            header.num_features,
            header.num_categories,
            b_prime,
        )
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.num_features == 0 || self.num_categories == 0 {
            return Err(ProtocolError::Config(
                "model has no features or no categories",
            ));
        }
        match self.function {
            Function::Spam if self.num_categories != 2 => {
                return Err(ProtocolError::Config(
                    "spam filtering needs exactly two categories",
                ))
            }
            Function::TopicDecomposed => {
                if !self.layout.params.supports_rotation() {
                    return Err(ProtocolError::Packing(PackingError::NeedsRotation));
                }
                if self.b_prime == 0 || self.b_prime > self.num_categories {
                    return Err(ProtocolError::Config("B' must be in 1..=B"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn hash(&self) -> [u8; 32] {
        let mut w = Writer::new();
        w.u8(PROTOCOL_VERSION).u8(self.function.code());
        self.layout.encode(&mut w);
        w.u64(self.num_features as u64)
            .u64(self.num_categories as u64)
            .u64(self.b_prime as u64);
        Sha256::digest(w.finish()).into()
    }

    pub fn circuit_spec(&self) -> CircuitSpec {
        let width = self.layout.b_slot;
        let value_bits = self.layout.b;
        match self.function {
            Function::Spam => CircuitSpec::UnblindThreshold { width, value_bits },
            Function::TopicFull => CircuitSpec::UnblindArgmax {
                count: self.num_categories,
                width,
                value_bits,
                index_bits: gc::index_bits_for(self.num_categories),
            },
            Function::TopicDecomposed => CircuitSpec::UnblindArgmax {
                count: self.b_prime,
                width,
                value_bits,
                index_bits: gc::index_bits_for(self.num_categories),
            },
        }
    }

    /// Ciphertexts the client sends per email.
    pub fn blinded_ciphertexts(&self) -> usize {
        match self.function {
            Function::TopicDecomposed => self.b_prime,
            _ => self.layout.groups(self.num_categories).len(),
        }
    }
}

fn setup_hash(layout: &PackingLayout) -> [u8; 32] {
    let mut w = Writer::new();
    w.u8(PROTOCOL_VERSION).u8(0);
    layout.encode(&mut w);
    Sha256::digest(w.finish()).into()
}

fn hello_payload(hash: &[u8; 32]) -> Vec<u8> {
    let mut v = Vec::with_capacity(33);
    v.push(PROTOCOL_VERSION);
    v.extend_from_slice(hash);
    v
}

fn check_hello(payload: &[u8], hash: &[u8; 32]) -> Result<(), ProtocolError> {
    let version = *payload
        .first()
        .ok_or(ProtocolError::Malformed("empty HELLO"))?;
    if version != PROTOCOL_VERSION {
        return Err(ProtocolError::Version(version));
    }
    if payload.len() != 33 {
        return Err(ProtocolError::Malformed("HELLO length"));
    }
    if payload[1..] != hash[..] {
        return Err(ProtocolError::ConfigMismatch);
    }
    Ok(())
}

/// Client speaks first; a mismatching provider answers with ABORT (sent by
/// the session wrapper).
fn hello_client<C: Channel + ?Sized>(ch: &mut C, hash: &[u8; 32]) -> Result<(), ProtocolError> {
    send(ch, Tag::Hello, hello_payload(hash))?;
    let reply = recv_expect(ch, Tag::Hello)?;
    check_hello(&reply, hash)
}

fn hello_provider<C: Channel + ?Sized>(ch: &mut C, hash: &[u8; 32]) -> Result<(), ProtocolError> {
    let req = recv_expect(ch, Tag::Hello)?;
    check_hello(&req, hash)?;
    send(ch, Tag::Hello, hello_payload(hash))?;
    Ok(())
}

/// What the client keeps after setup: the public key, the public feature
/// vocabulary and category labels, and the encrypted model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientModel {
    pub pk: PublicKey,
    pub vocab: Vocabulary,
    pub labels: Vec<String>,
    pub model: EncryptedModel,
}

fn write_public_info(w: &mut Writer, vocab: &Vocabulary, labels: &[String]) {
    w.count(vocab.len());
    for t in vocab.tokens() {
        w.str(t);
    }
    w.count(labels.len());
    for l in labels {
        w.str(l);
    }
}

fn read_public_info(r: &mut Reader<'_>) -> Result<(Vocabulary, Vec<String>), ProtocolError> {
    let n = r.count(4)?;
    let tokens = (0..n).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
    let vocab = Vocabulary::from_tokens(tokens)?;
    let n = r.count(4)?;
    let labels = (0..n).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
    Ok((vocab, labels))
}

impl ClientModel {
    pub fn header(&self) -> ModelHeader {
        ModelHeader {
            layout: self.model.layout,
            num_features: self.model.num_features,
            num_categories: self.model.num_categories,
        }
    }

    /// Features of an email under the provider's vocabulary.
    pub fn features(&self, text: &str) -> FeatureVector {
        extract_features(text, Some(&self.vocab), self.model.layout.f_in)
    }

    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        let mut w = Writer::new();
        w.bytes(&self.pk.to_bytes());
        write_public_info(&mut w, &self.vocab, &self.labels);
        self.model.encode(&self.pk, &mut w)?;
        Ok(w.finish())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let pk = PublicKey::from_bytes(r.bytes()?)?;
        let (vocab, labels) = read_public_info(&mut r)?;
        let model = EncryptedModel::decode(&pk, &mut r)?;
        r.finish()?;
        check_public_info(&vocab, &labels, &model)?;
        Ok(Self {
            pk,
            vocab,
            labels,
            model,
        })
    }
}

fn check_public_info(
    vocab: &Vocabulary,
    labels: &[String],
    model: &EncryptedModel,
) -> Result<(), ProtocolError> {
    if vocab.len() != model.num_features || labels.len() != model.num_categories {
        return Err(ProtocolError::Malformed(
            "vocabulary or labels do not match model size",
        ));
    }
    Ok(())
}

/// Provider side of setup: pack, encrypt and stream the model.
pub fn provider_setup<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    layout: &PackingLayout,
    qmodel: &QuantizedModel,
    keys: &KeyPair,
    rng: &mut R,
) -> Result<ModelHeader, ProtocolError> {
    let res = (|| {
        hello_provider(ch, &setup_hash(layout))?;
        setup_after_hello(ch, layout, qmodel, keys, rng)
    })();
    finish_session(ch, res)
}

fn setup_after_hello<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    layout: &PackingLayout,
    qmodel: &QuantizedModel,
    keys: &KeyPair,
    rng: &mut R,
) -> Result<ModelHeader, ProtocolError> {
    if keys.pk.params() != &layout.params {
        return Err(ProtocolError::Config("key parameters differ from layout"));
    }
    if qmodel.vocab.len() != qmodel.num_features() || qmodel.labels.len() != qmodel.num_categories()
    {
        return Err(ProtocolError::Config(
            "vocabulary or labels do not match model size",
        ));
    }
    let packed = pack_model(qmodel, layout)?;
    let emodel = encrypt_model(&keys.sk, &packed, rng)?;
    let header = ModelHeader {
        layout: *layout,
        num_features: emodel.num_features,
        num_categories: emodel.num_categories,
    };
    let mut w = Writer::new();
    w.bytes(&keys.pk.to_bytes());
    write_public_info(&mut w, &qmodel.vocab, &qmodel.labels);
    emodel.encode_header(&mut w);
    send(ch, Tag::ModelChunk, w.finish())?;
    let cells: Vec<&Ciphertext> = emodel.cells().collect();
    let size = layout.params.ciphertext_size();
    for chunk in cells.chunks(MODEL_CHUNK_CIPHERTEXTS) {
        let mut w = Writer::with_capacity(4 + chunk.len() * size);
        w.count(chunk.len());
        for c in chunk {
            keys.pk.write_ciphertext(c, &mut w)?;
        }
        send(ch, Tag::ModelChunk, w.finish())?;
    }
    Ok(header)
}

/// Client side of setup. The caller replaces any earlier model only when
/// this returns `Ok`.
pub fn client_setup<C: Channel + ?Sized>(
    ch: &mut C,
    layout: &PackingLayout,
) -> Result<ClientModel, ProtocolError> {
    let res = (|| {
        hello_client(ch, &setup_hash(layout))?;
        let first = recv_expect(ch, Tag::ModelChunk)?;
        let mut r = Reader::new(&first);
        let pk = PublicKey::from_bytes(r.bytes()?)?;
        let (vocab, labels) = read_public_info(&mut r)?;
        let header = EncryptedModel::decode_header(&mut r)?;
        r.finish()?;
        if header.layout != *layout || pk.params() != &layout.params {
            return Err(ProtocolError::ConfigMismatch);
        }
        let mut builder = header.builder();
        while !builder.is_complete() {
            let chunk = recv_expect(ch, Tag::ModelChunk)?;
            let mut r = Reader::new(&chunk);
            let n = r.count(layout.params.ciphertext_size())?;
            if n == 0 || n > builder.remaining() {
                return Err(ProtocolError::Malformed("model chunk count"));
            }
            for _ in 0..n {
                builder.push(pk.read_ciphertext(&mut r)?);
            }
            r.finish()?;
        }
        let model = builder.finish().expect("complete");
        check_public_info(&vocab, &labels, &model)?;
        Ok(ClientModel {
            pk,
            vocab,
            labels,
            model,
        })
    })();
    finish_session(ch, res)
}

/// Uniform noises, one per blinded slot, below `2^(b + lambda)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindingVector {
    pub noises: Vec<u64>,
}

/// A ciphertext whose target slots carry added noise. Only `blind` makes
/// these, and only these go into `DOT_BLINDED`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blinded(Ciphertext);

impl Blinded {
    pub fn ciphertext(&self) -> &Ciphertext {
        &self.0
    }
}

fn noise_limit(layout: &PackingLayout) -> u64 {
    1u64 << (layout.b + layout.lambda)
}

/// Add `Enc(noise)` to `ct`: target slots get uniform noise in
/// `[0, 2^(b + lambda))`. On the lattice backend every other slot gets
/// uniform noise mod `t` so rotated-in values stay hidden.
pub fn blind<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    ct: &Ciphertext,
    targets: &[usize],
    layout: &PackingLayout,
    rng: &mut R,
) -> Result<(Blinded, BlindingVector), ProtocolError> {
    let limit = noise_limit(layout);
    let noises: Vec<u64> = targets.iter().map(|_| rng.next_u64() % limit).collect();
    blind_with(pk, ct, targets, &noises, layout, rng)
}

/// `blind` with caller-chosen target noises (tests use all-zero noise).
pub fn blind_with<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    ct: &Ciphertext,
    targets: &[usize],
    noises: &[u64],
    layout: &PackingLayout,
    rng: &mut R,
) -> Result<(Blinded, BlindingVector), ProtocolError> {
    let params = pk.params();
    let p = params.slots();
    if targets.len() != noises.len() || targets.iter().any(|&s| s >= p) {
        return Err(ProtocolError::Config("blinding targets out of range"));
    }
    let limit = noise_limit(layout);
    if noises.iter().any(|&n| n >= limit) {
        return Err(ProtocolError::Config("blinding noise exceeds 2^(b+lambda)"));
    }
    let mut slots = if params.backend_kind() == Backend::Bv {
        let mask = params.slot_mask();
        (0..p).map(|_| rng.next_u64() & mask).collect()
    } else {
        vec![0u64; p]
    };
    for (&s, &n) in targets.iter().zip(noises) {
        slots[s] = n;
    }
    let noise_ct = pk.encrypt(&PackedPlaintext::new(params, slots)?, rng)?;
    let out = pk.add(ct, &noise_ct)?;
    Ok((
        Blinded(out),
        BlindingVector {
            noises: noises.to_vec(),
        },
    ))
}

fn send_blinded<C: Channel + ?Sized>(
    ch: &mut C,
    pk: &PublicKey,
    cts: &[Blinded],
) -> Result<(), ProtocolError> {
    let mut w = Writer::with_capacity(4 + cts.len() * pk.params().ciphertext_size());
    w.count(cts.len());
    for b in cts {
        pk.write_ciphertext(&b.0, &mut w)?;
    }
    send(ch, Tag::DotBlinded, w.finish())?;
    Ok(())
}

fn recv_blinded<C: Channel + ?Sized>(
    ch: &mut C,
    pk: &PublicKey,
    expected: usize,
) -> Result<Vec<Ciphertext>, ProtocolError> {
    let payload = recv_expect(ch, Tag::DotBlinded)?;
    let mut r = Reader::new(&payload);
    let n = r.count(pk.params().ciphertext_size())?;
    if n != expected {
        return Err(ProtocolError::Malformed("blinded ciphertext count"));
    }
    let cts = (0..n)
        .map(|_| pk.read_ciphertext(&mut r))
        .collect::<Result<Vec<_>, _>>()?;
    r.finish()?;
    Ok(cts)
}

/// Blind each dot-product ciphertext on the slots of its categories.
/// Returns ciphertexts and per-category noises in category order.
fn blind_all_categories<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    dot: &packing::PackedDotResult,
    layout: &PackingLayout,
    rng: &mut R,
) -> Result<(Vec<Blinded>, Vec<u64>), ProtocolError> {
    let mut noises = vec![0u64; dot.slot_map.len()];
    let mut out = Vec::with_capacity(dot.ciphertexts.len());
    for (ci, ct) in dot.ciphertexts.iter().enumerate() {
        let cats: Vec<usize> = (0..dot.slot_map.len())
            .filter(|&j| dot.slot_map[j].0 == ci)
            .collect();
        let targets: Vec<usize> = cats.iter().map(|&j| dot.slot_map[j].1).collect();
        let (b, v) = blind(pk, ct, &targets, layout, rng)?;
        for (&j, &n) in cats.iter().zip(&v.noises) {
            noises[j] = n;
        }
        out.push(b);
    }
    Ok((out, noises))
}

fn read_category_values(
    sk: &SecretKey,
    cts: &[Ciphertext],
    layout: &PackingLayout,
    num_categories: usize,
) -> Result<Vec<u64>, ProtocolError> {
    let plain = cts
        .iter()
        .map(|c| sk.decrypt(c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..num_categories)
        .map(|j| {
            let (ci, s) = layout.slot_of(j);
            plain[ci].slots()[s]
        })
        .collect())
}

fn client_dot(
    model: &ClientModel,
    config: &SessionConfig,
    fv: &FeatureVector,
) -> Result<packing::PackedDotResult, ProtocolError> {
    if model.header()
        != (ModelHeader {
            layout: config.layout,
            num_features: config.num_features,
            num_categories: config.num_categories,
        })
    {
        return Err(ProtocolError::Config(
            "stored model differs from session configuration",
        ));
    }
    Ok(packed_dot(&model.pk, &model.model, fv)?)
}

/// Clamp a quantized threshold into the range where it still changes
/// decisions, so the circuit's signed arithmetic cannot wrap.
pub fn clamp_threshold(tau_q: i64, layout: &PackingLayout) -> i64 {
    let bound = 1i64 << layout.b;
    tau_q.clamp(-bound, bound)
}

/// Provider side of spam filtering. Learns nothing but success.
pub fn provider_spam<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    sk: &SecretKey,
    tau_q: i64,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let res = (|| {
        config.validate()?;
        if config.function != Function::Spam {
            return Err(ProtocolError::Config("not a spam configuration"));
        }
        hello_provider(ch, &config.hash())?;
        spam_after_hello(ch, config, sk, tau_q, rng)
    })();
    finish_session(ch, res)
}

fn spam_after_hello<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    sk: &SecretKey,
    tau_q: i64,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let pk = sk.public();
    let cts = recv_blinded(ch, &pk, config.blinded_ciphertexts())?;
    let y = read_category_values(sk, &cts, &config.layout, 2)?;
    let circuit = config.circuit_spec().build()?;
    let tau = clamp_threshold(tau_q, &config.layout);
    let inputs = gc::threshold_garbler_inputs(y[0], y[1], tau, config.layout.b_slot);
    gc::run_garbler(ch, &circuit, &inputs, Party::Evaluator, rng)?;
    Ok(())
}

/// Client side of spam filtering. Returns the verdict.
pub fn client_spam<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    model: &ClientModel,
    fv: &FeatureVector,
    rng: &mut R,
) -> Result<Decision, ProtocolError> {
    let res = (|| {
        config.validate()?;
        if config.function != Function::Spam {
            return Err(ProtocolError::Config("not a spam configuration"));
        }
        let dot = client_dot(model, config, fv)?;
        hello_client(ch, &config.hash())?;
        let (blinded, noises) = blind_all_categories(&model.pk, &dot, &config.layout, rng)?;
        send_blinded(ch, &model.pk, &blinded)?;
        let circuit = config.circuit_spec().build()?;
        let inputs = gc::threshold_evaluator_inputs(noises[0], noises[1], config.layout.b_slot);
        let out = gc::run_evaluator(ch, &circuit, &inputs, Party::Evaluator, rng)?
            .ok_or(ProtocolError::Malformed("missing output"))?;
        Ok(if out[0] {
            Decision::Spam
        } else {
            Decision::NotSpam
        })
    })();
    finish_session(ch, res)
}

fn provider_argmax<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    values: &[u64],
    rng: &mut R,
) -> Result<usize, ProtocolError> {
    let circuit = config.circuit_spec().build()?;
    let inputs = gc::argmax_garbler_inputs(values, config.layout.b_slot);
    let out = gc::run_garbler(ch, &circuit, &inputs, Party::Garbler, rng)?
        .ok_or(ProtocolError::Malformed("missing output"))?;
    let idx = gc::from_bits(&out) as usize;
    if idx >= config.num_categories {
        return Err(ProtocolError::Malformed("topic index out of range"));
    }
    Ok(idx)
}

fn client_argmax<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    noises: &[u64],
    payloads: &[u64],
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let circuit = config.circuit_spec().build()?;
    let index_bits = gc::index_bits_for(config.num_categories);
    let inputs = gc::argmax_evaluator_inputs(noises, payloads, config.layout.b_slot, index_bits);
    gc::run_evaluator(ch, &circuit, &inputs, Party::Garbler, rng)?;
    Ok(())
}

/// Provider side of full topic extraction. Returns the 0-based topic.
pub fn provider_topic_full<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    sk: &SecretKey,
    rng: &mut R,
) -> Result<usize, ProtocolError> {
    let res = (|| {
        config.validate()?;
        if config.function != Function::TopicFull {
            return Err(ProtocolError::Config("not a full topic configuration"));
        }
        hello_provider(ch, &config.hash())?;
        topic_full_after_hello(ch, config, sk, rng)
    })();
    finish_session(ch, res)
}

fn topic_full_after_hello<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    sk: &SecretKey,
    rng: &mut R,
) -> Result<usize, ProtocolError> {
    let pk = sk.public();
    let cts = recv_blinded(ch, &pk, config.blinded_ciphertexts())?;
    let y = read_category_values(sk, &cts, &config.layout, config.num_categories)?;
    provider_argmax(ch, config, &y, rng)
}

/// Client side of full topic extraction. The client learns no output.
pub fn client_topic_full<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    model: &ClientModel,
    fv: &FeatureVector,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let res = (|| {
        config.validate()?;
        if config.function != Function::TopicFull {
            return Err(ProtocolError::Config("not a full topic configuration"));
        }
        let dot = client_dot(model, config, fv)?;
        hello_client(ch, &config.hash())?;
        let (blinded, noises) = blind_all_categories(&model.pk, &dot, &config.layout, rng)?;
        send_blinded(ch, &model.pk, &blinded)?;
        let payloads: Vec<u64> = (0..config.num_categories as u64).collect();
        client_argmax(ch, config, &noises, &payloads, rng)
    })();
    finish_session(ch, res)
}

/// Candidate topics: distinct 1-based category indexes, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    indexes: Vec<usize>,
}

impl CandidateSet {
    pub fn new(mut indexes: Vec<usize>, num_categories: usize) -> Result<Self, ProtocolError> {
        if indexes.is_empty() {
            return Err(ProtocolError::Candidates("empty"));
        }
        if indexes.len() > num_categories {
            return Err(ProtocolError::Candidates("more candidates than categories"));
        }
        if indexes.iter().any(|&i| i == 0 || i > num_categories) {
            return Err(ProtocolError::Candidates("index outside 1..=B"));
        }
        indexes.sort_unstable();
        if indexes.windows(2).any(|w| w[0] == w[1]) {
            return Err(ProtocolError::Candidates("duplicate index"));
        }
        Ok(Self { indexes })
    }

    pub fn indexes(&self) -> &[usize] {
        &self.indexes
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }
}

/// Top `b_prime` categories under the client's own (possibly weaker)
/// model. Ties prefer the lower index.
pub fn select_candidates(
    client_model: &LinearModel,
    fv: &FeatureVector,
    b_prime: usize,
) -> Result<CandidateSet, ProtocolError> {
    let b = client_model.num_categories();
    if b_prime == 0 || b_prime > b {
        return Err(ProtocolError::Candidates("B' must be in 1..=B"));
    }
    let scores = score_categories(client_model, fv)?;
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
    CandidateSet::new(order[..b_prime].iter().map(|&j| j + 1).collect(), b)
}

/// Provider side of decomposed topic extraction. Returns the 0-based topic,
/// always one of the client's candidates.
pub fn provider_topic_decomposed<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    sk: &SecretKey,
    rng: &mut R,
) -> Result<usize, ProtocolError> {
    let res = (|| {
        config.validate()?;
        if config.function != Function::TopicDecomposed {
            return Err(ProtocolError::Config(
                "not a decomposed topic configuration",
            ));
        }
        hello_provider(ch, &config.hash())?;
        topic_decomposed_after_hello(ch, config, sk, rng)
    })();
    finish_session(ch, res)
}

fn topic_decomposed_after_hello<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    sk: &SecretKey,
    rng: &mut R,
) -> Result<usize, ProtocolError> {
    let pk = sk.public();
    let cts = recv_blinded(ch, &pk, config.b_prime)?;
    // each candidate sits in slot 0 of its own ciphertext
    let y = cts
        .iter()
        .map(|c| Ok(sk.decrypt(c)?.slots()[0]))
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    provider_argmax(ch, config, &y, rng)
}

/// Everything a provider needs to answer any session.
#[derive(Debug, Clone)]
pub struct ProviderState {
    pub layout: PackingLayout,
    pub model: QuantizedModel,
    pub keys: KeyPair,
    /// Quantized spam threshold; ignored for topic models.
    pub tau_q: i64,
}

impl ProviderState {
    pub fn header(&self) -> ModelHeader {
        ModelHeader {
            layout: self.layout,
            num_features: self.model.num_features(),
            num_categories: self.model.num_categories(),
        }
    }

    /// Configurations this provider accepts, setup excluded.
    pub fn session_configs(&self) -> Vec<SessionConfig> {
        let h = self.header();
        let mut out = Vec::new();
        for f in [Function::Spam, Function::TopicFull] {
            if let Ok(c) = SessionConfig::for_model(f, &h, 0) {
                out.push(c);
            }
        }
        for bp in 1..=h.num_categories {
            if let Ok(c) = SessionConfig::for_model(Function::TopicDecomposed, &h, bp) {
                out.push(c);
            }
        }
        out
    }
}

/// Outcome of one served session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Served {
    Setup,
    Spam,
    /// 0-based topic learned by the provider.
    Topic {
        function: Function,
        topic: usize,
    },
}

/// Provider loop body for one session: the client's HELLO selects setup or
/// one of the classification functions.
pub fn provider_serve<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    state: &ProviderState,
    rng: &mut R,
) -> Result<Served, ProtocolError> {
    let res = (|| {
        let req = recv_expect(ch, Tag::Hello)?;
        let setup = setup_hash(&state.layout);
        if check_hello(&req, &setup).is_ok() {
            send(ch, Tag::Hello, hello_payload(&setup))?;
            setup_after_hello(ch, &state.layout, &state.model, &state.keys, rng)?;
            return Ok(Served::Setup);
        }
        let config = state
            .session_configs()
            .into_iter()
            .find(|c| check_hello(&req, &c.hash()).is_ok());
        let Some(config) = config else {
            // reports a version problem before a plain mismatch
            check_hello(&req, &setup)?;
            return Err(ProtocolError::ConfigMismatch);
        };
        send(ch, Tag::Hello, hello_payload(&config.hash()))?;
        let sk = &state.keys.sk;
        Ok(match config.function {
            Function::Spam => {
                spam_after_hello(ch, &config, sk, state.tau_q, rng)?;
                Served::Spam
            }
            Function::TopicFull => Served::Topic {
                function: config.function,
                topic: topic_full_after_hello(ch, &config, sk, rng)?,
            },
            Function::TopicDecomposed => Served::Topic {
                function: config.function,
                topic: topic_decomposed_after_hello(ch, &config, sk, rng)?,
            },
        })
    })();
    finish_session(ch, res)
}

/// Client side of decomposed topic extraction.
pub fn client_topic_decomposed<C: Channel + ?Sized, R: RngCore + CryptoRng>(
    ch: &mut C,
    config: &SessionConfig,
    model: &ClientModel,
    fv: &FeatureVector,
    candidates: &CandidateSet,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let res = (|| {
        config.validate()?;
        if config.function != Function::TopicDecomposed {
            return Err(ProtocolError::Config(
                "not a decomposed topic configuration",
            ));
        }
        if candidates.len() != config.b_prime
            || candidates
                .indexes()
                .iter()
                .any(|&i| i > config.num_categories)
        {
            return Err(ProtocolError::Candidates(
                "candidate set does not match configuration",
            ));
        }
        let dot = client_dot(model, config, fv)?;
        hello_client(ch, &config.hash())?;
        let mut blinded = Vec::with_capacity(candidates.len());
        let mut noises = Vec::with_capacity(candidates.len());
        for &idx in candidates.indexes() {
            let ct = extract_slot(&model.pk, &dot, idx)?;
            let (b, v) = blind(&model.pk, &ct, &[0], &config.layout, rng)?;
            blinded.push(b);
            noises.push(v.noises[0]);
        }
        send_blinded(ch, &model.pk, &blinded)?;
        let payloads: Vec<u64> = candidates
            .indexes()
            .iter()
            .map(|&i| (i - 1) as u64)
            .collect();
        client_argmax(ch, config, &noises, &payloads, rng)
    })();
    finish_session(ch, res)
}
