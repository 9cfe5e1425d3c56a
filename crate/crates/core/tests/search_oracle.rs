use std::collections::BTreeSet;

use pretzel_core::search::SearchIndex;
use proptest::prelude::*;

const WORDS: &[&str] = &["alpha", "Beta", "gamma", "delta", "x", "Zeta9", "eta", "theta"];
const SEPS: &[&str] = &[" ", ", ", "-", "\n", "!? ", "__"];

/// Lowercased alphanumeric runs, written independently of the library.
fn tokens(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.insert(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.insert(cur);
    }
    out
}

fn scan(docs: &[(u64, String)], query: &str) -> Vec<u64> {
    let q = tokens(query);
    if q.is_empty() {
        return Vec::new();
    }
    let mut hits: Vec<u64> = docs
        .iter()
        .filter(|(_, t)| q.is_subset(&tokens(t)))
        .map(|(id, _)| *id)
        .collect();
    hits.sort_unstable();
    hits
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec((0..WORDS.len(), 0..SEPS.len()), 0..12).prop_map(|v| {
        v.into_iter()
            .map(|(w, s)| format!("{}{}", WORDS[w], SEPS[s]))
            .collect()
    })
}

fn corpus() -> impl Strategy<Value = Vec<(u64, String)>> {
    prop::collection::btree_map(0u64..10_000, text(), 0..25)
        .prop_map(|m| m.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn search_equals_scan(docs in corpus(), queries in prop::collection::vec(text(), 1..6)) {
        let mut idx = SearchIndex::new();
        for (id, t) in &docs {
            idx.add(*id, t).unwrap();
        }
        for q in &queries {
            prop_assert_eq!(idx.search(q), scan(&docs, q));
        }
        for w in WORDS {
            prop_assert_eq!(idx.search(w), scan(&docs, w));
        }
        let back = SearchIndex::decode(&idx.encode()).unwrap();
        prop_assert_eq!(back, idx);
    }
}

#[test]
fn hand_cases() {
    let mut idx = SearchIndex::new();
    idx.add(7, "").unwrap();
    idx.add(3, "hello world").unwrap();
    idx.add(9, "Hello, there").unwrap();
    assert_eq!(idx.search("hello"), vec![3, 9]);
    assert_eq!(idx.search("HELLO world"), vec![3]);
    assert_eq!(idx.search(""), Vec::<u64>::new());
    assert_eq!(idx.search("  ,, "), Vec::<u64>::new());
    assert_eq!(idx.search("nowhere"), Vec::<u64>::new());
    assert_eq!(idx.search("there"), idx.postings("there").to_vec());
    assert!(idx.add(3, "again").is_err());
    assert_eq!(idx.doc_count(), 3);
}
