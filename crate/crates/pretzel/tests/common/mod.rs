#![allow(dead_code)]

use pretzel::corpus;
use pretzel_core::ahe::{keygen, BackendParams, DEFAULT_ERROR_STDDEV, DEFAULT_LOG_Q};
use pretzel_core::model::{quantize_auto, train_nb, ModelKind};
use pretzel_core::packing::{make_layout, PackingLayout, PackingMode};
use pretzel_core::protocol::{clamp_threshold, ProviderState};
use pretzel_core::seed_from_u64;

pub fn small_layout(mode: PackingMode) -> PackingLayout {
    let params = BackendParams::Bv {
        ring_degree: 64,
        log_q: DEFAULT_LOG_Q,
        error_stddev: DEFAULT_ERROR_STDDEV,
    };
    make_layout(12, 6, 692, 12, params, mode).unwrap()
}

/// Provider state for a model trained on a small generated corpus.
pub fn state(kind: ModelKind, mode: PackingMode, seed: u64) -> ProviderState {
    let c = match kind {
        ModelKind::GrnbSpam => corpus::synthetic_spam(60, seed),
        _ => corpus::synthetic_topics(8, 10, seed),
    };
    let m = train_nb(&c, kind, None).unwrap();
    let layout = small_layout(mode);
    let model = quantize_auto(&m, layout.b_in).unwrap();
    let keys = keygen(&layout.params, seed_from_u64(seed)).unwrap();
    ProviderState {
        tau_q: clamp_threshold(0, &layout),
        layout,
        model,
        keys,
    }
}
