mod common;

use pretzel::formats::{
    decode_client_model, decode_keys, decode_provider_state, decode_search_index,
    encode_client_model, encode_provider_state, encode_secret_key, encode_search_index,
    parse_model, parse_model_file, parse_quantized, write_model, write_quantized, FormatError,
    ModelFile,
};
use pretzel::session::loopback_setup;
use pretzel_core::model::{quantize_auto, LinearModel, ModelKind, Vocabulary};
use pretzel_core::packing::PackingMode;
use pretzel_core::search::SearchIndex;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = LinearModel> {
    (1usize..6, 2usize..5).prop_flat_map(|(n, b)| {
        (
            prop::collection::btree_set("[a-z]{2,8}", n),
            prop::collection::vec(prop::collection::vec(-6.0f64..0.0, n), b),
            prop::collection::vec(-6.0f64..0.0, b),
            prop::sample::select(vec![
                ModelKind::GrnbSpam,
                ModelKind::MultinomialNb,
                ModelKind::Logistic,
                ModelKind::Svm,
            ]),
        )
            .prop_map(move |(toks, weights, priors, kind)| {
                let (labels, weights, priors) = if kind == ModelKind::GrnbSpam {
                    (
                        vec!["spam".to_string(), "ham".to_string()],
                        weights[..2].to_vec(),
                        priors[..2].to_vec(),
                    )
                } else {
                    ((0..b).map(|j| format!("c{j}")).collect(), weights, priors)
                };
                let vocab = Vocabulary::from_tokens(toks).unwrap();
                LinearModel::new(kind, labels, vocab, weights, priors).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn float_model_text_round_trip(m in model_strategy()) {
        let text = write_model(&m).unwrap();
        prop_assert_eq!(parse_model(&text).unwrap(), m.clone());
        prop_assert_eq!(parse_model_file(&text).unwrap(), ModelFile::Float(m));
    }

    #[test]
    fn quantized_model_text_round_trip(m in model_strategy(), b_in in 4u32..20) {
        let q = quantize_auto(&m, b_in).unwrap();
        let text = write_quantized(&q).unwrap();
        prop_assert_eq!(parse_quantized(&text).unwrap(), q.clone());
        prop_assert_eq!(parse_model_file(&text).unwrap(), ModelFile::Quantized(q));
        // a quantized file is not a float model
        prop_assert!(parse_model(&text).is_err());
    }
}

#[test]
fn malformed_model_text() {
    let vocab = Vocabulary::from_tokens(["aa", "bb"]).unwrap();
    let m = LinearModel::new(
        ModelKind::MultinomialNb,
        vec!["x".into(), "y".into()],
        vocab,
        vec![vec![-1.0, -2.0], vec![-3.0, -4.0]],
        vec![-0.5, -0.9],
    )
    .unwrap();
    let good = write_model(&m).unwrap();
    assert!(matches!(
        parse_model(&good.replacen("pretzel-model", "other-model", 1)),
        Err(FormatError::Magic(_))
    ));
    assert!(parse_model(&good.replacen("v1", "v9", 1)).is_err());
    assert!(parse_model(&good.replacen("-3.0", "abc", 1)).is_err());
    let truncated: String = good.lines().take(3).map(|l| format!("{l}\n")).collect();
    assert!(parse_model(&truncated).is_err());
    assert!(parse_model(&format!("{good}extra 1 2\n")).is_err());
    let mut spaced = m.clone();
    spaced.labels[0] = "has space".into();
    assert!(write_model(&spaced).is_err());
}

#[test]
fn provider_state_and_keys_round_trip() {
    let st = common::state(ModelKind::MultinomialNb, PackingMode::AcrossRow, 3);
    let bytes = encode_provider_state(&st).unwrap();
    let back = decode_provider_state(&bytes).unwrap();
    assert_eq!(back.layout, st.layout);
    assert_eq!(back.model, st.model);
    assert_eq!(back.keys, st.keys);
    assert_eq!(back.tau_q, st.tau_q);
    assert_eq!(encode_provider_state(&back).unwrap(), bytes);

    let kb = encode_secret_key(&st.keys.sk);
    assert_eq!(decode_keys(&kb).unwrap(), st.keys);

    assert!(matches!(
        decode_provider_state(&kb),
        Err(FormatError::Magic(_))
    ));
    assert!(decode_provider_state(&bytes[..bytes.len() - 1]).is_err());
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(decode_provider_state(&trailing).is_err());
}

#[test]
fn client_model_round_trip() {
    let st = common::state(ModelKind::GrnbSpam, PackingMode::WithinRow, 4);
    let (cm, _) = loopback_setup(&st, 9).unwrap();
    let bytes = encode_client_model(&cm).unwrap();
    let back = decode_client_model(&bytes).unwrap();
    assert_eq!(back, cm);
    assert!(matches!(
        decode_client_model(&bytes[1..]),
        Err(FormatError::Magic(_))
    ));
    assert!(decode_client_model(&bytes[..bytes.len() - 3]).is_err());
}

#[test]
fn search_index_round_trip() {
    let mut idx = SearchIndex::new();
    idx.add(0, "alpha beta gamma").unwrap();
    idx.add(7, "beta delta").unwrap();
    let bytes = encode_search_index(&idx);
    let back = decode_search_index(&bytes).unwrap();
    assert_eq!(back.search("beta"), vec![0, 7]);
    assert_eq!(back.search("gamma alpha"), vec![0]);
    assert!(matches!(
        decode_search_index(b"PZSECKEY"),
        Err(FormatError::Magic(_))
    ));
}
