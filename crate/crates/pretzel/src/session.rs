//! Run both parties of a session in one process over an in-memory channel,
//! or the client half over any channel.

use std::thread;

use pretzel_core::channel::Channel;
use pretzel_core::model::{Decision, FeatureVector};
use pretzel_core::protocol::{
    client_setup, client_spam, client_topic_decomposed, client_topic_full, provider_serve,
    CandidateSet, ClientModel, Function, ProtocolError, ProviderState, Served, SessionConfig,
};
use pretzel_core::{rng_from_seed, seed_from_u64};

use crate::transport::{pair_inmemory, ChannelStats, MemoryChannel};

/// What the client asks for in one session.
#[derive(Debug, Clone)]
pub enum Request<'a> {
    Spam(&'a FeatureVector),
    TopicFull(&'a FeatureVector),
    TopicDecomposed(&'a FeatureVector, &'a CandidateSet),
}

/// What each side learned.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Spam verdict, client side only.
    pub client: Option<Decision>,
    /// 0-based topic, provider side only.
    pub provider_topic: Option<usize>,
    /// Client-side traffic counters.
    pub client_stats: ChannelStats,
}

/// Provider's answer to one connection: serve exactly one session.
pub fn serve_one<C: Channel>(
    ch: &mut C,
    state: &ProviderState,
    seed: u64,
) -> Result<Served, ProtocolError> {
    let mut rng = rng_from_seed(seed_from_u64(seed));
    provider_serve(ch, state, &mut rng)
}

/// Client half of a classification session.
pub fn client_request<C: Channel>(
    ch: &mut C,
    model: &ClientModel,
    req: &Request<'_>,
    seed: u64,
) -> Result<Option<Decision>, ProtocolError> {
    let mut rng = rng_from_seed(seed_from_u64(seed));
    let header = model.header();
    match req {
        Request::Spam(fv) => {
            let cfg = SessionConfig::for_model(Function::Spam, &header, 0)?;
            client_spam(ch, &cfg, model, fv, &mut rng).map(Some)
        }
        Request::TopicFull(fv) => {
            let cfg = SessionConfig::for_model(Function::TopicFull, &header, 0)?;
            client_topic_full(ch, &cfg, model, fv, &mut rng).map(|_| None)
        }
        Request::TopicDecomposed(fv, cands) => {
            let cfg = SessionConfig::for_model(Function::TopicDecomposed, &header, cands.len())?;
            client_topic_decomposed(ch, &cfg, model, fv, cands, &mut rng).map(|_| None)
        }
    }
}

fn with_provider<T>(
    state: &ProviderState,
    seed: u64,
    client: impl FnOnce(&mut MemoryChannel) -> Result<T, ProtocolError>,
) -> Result<(T, Served, ChannelStats), ProtocolError> {
    let (mut a, mut b) = pair_inmemory();
    thread::scope(|s| {
        let h = s.spawn(move || serve_one(&mut a, state, seed ^ 0xa5a5_a5a5));
        let c = client(&mut b);
        // Unblock the provider if the client failed before finishing.
        b.close();
        let p = h.join().expect("provider thread panicked");
        let stats = b.stats();
        Ok((c?, p?, stats))
    })
}

/// Setup over an in-memory channel; returns the client's stored model.
pub fn loopback_setup(
    state: &ProviderState,
    seed: u64,
) -> Result<(ClientModel, ChannelStats), ProtocolError> {
    let (model, _, stats) = with_provider(state, seed, |ch| client_setup(ch, &state.layout))?;
    Ok((model, stats))
}

/// One classification session over an in-memory channel.
pub fn loopback(
    state: &ProviderState,
    model: &ClientModel,
    req: &Request<'_>,
    seed: u64,
) -> Result<Outcome, ProtocolError> {
    let (client, served, client_stats) =
        with_provider(state, seed, |ch| client_request(ch, model, req, seed))?;
    let provider_topic = match served {
        Served::Topic { topic, .. } => Some(topic),
        _ => None,
    };
    Ok(Outcome {
        client,
        provider_topic,
        client_stats,
    })
}
