//! Labelled corpora: a loader for `<label>/<file>` directory trees and
//! seeded synthetic stand-ins shaped like a small spam corpus and a
//! 20-topic newsgroup corpus.

use std::path::Path;

use pretzel_core::model::{Corpus, SPAM_LABEL};
use pretzel_core::{rng_from_seed, seed_from_u64, ChaCha20Rng};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::formats::FormatError;

/// Each subdirectory of `root` is a label; each regular file inside it is
/// one document. Labels and files are visited in sorted order.
pub fn load_dir(root: &Path) -> Result<Corpus, FormatError> {
    let io = |path: &Path, source| FormatError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut labels: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| io(root, e))?
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    labels.sort();
    let mut corpus = Corpus::new();
    for dir in labels {
        let label = dir.file_name().unwrap().to_string_lossy().into_owned();
        let mut files: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| io(&dir, e))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in files {
            let bytes = std::fs::read(&f).map_err(|e| io(&f, e))?;
            corpus.push(String::from_utf8_lossy(&bytes).into_owned(), label.clone());
        }
    }
    Ok(corpus)
}

/// Deterministic shuffle then split; `train_fraction` of the documents go
/// to the first corpus.
pub fn split(corpus: &Corpus, train_fraction: f64, seed: u64) -> (Corpus, Corpus) {
    let mut docs = corpus.documents.clone();
    docs.shuffle(&mut rng_from_seed(seed_from_u64(seed)));
    let cut = ((docs.len() as f64) * train_fraction).round() as usize;
    let test = docs.split_off(cut.min(docs.len()));
    (Corpus { documents: docs }, Corpus { documents: test })
}

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st",
];
const NUCLEI: [&str; 6] = ["a", "e", "i", "o", "u", "ou"];

/// `count` distinct pronounceable pseudo-words.
fn word_list(count: usize, rng: &mut ChaCha20Rng) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.gen_range(2..=4);
        let w: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.gen_range(0..ONSETS.len())],
                    NUCLEI[rng.gen_range(0..NUCLEI.len())]
                )
            })
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Zipf-like pick: index `i` with weight roughly `1/(i+1)`.
fn zipf(rng: &mut ChaCha20Rng, n: usize) -> usize {
    let u: f64 = rng.gen();
    (((n as f64 + 1.0).powf(u)) - 1.0)
        .floor()
        .min(n as f64 - 1.0) as usize
}

struct Mixture {
    background: Vec<String>,
    /// Class-specific pools, one per label.
    pools: Vec<Vec<String>>,
    /// Probability that a token comes from the class pool.
    signal: f64,
    length: (usize, usize),
}

impl Mixture {
    fn doc(&self, class: usize, rng: &mut ChaCha20Rng) -> String {
        let len = rng.gen_range(self.length.0..=self.length.1);
        let pool = &self.pools[class];
        let words: Vec<&str> = (0..len)
            .map(|_| {
                if rng.gen_bool(self.signal) {
                    pool[zipf(rng, pool.len())].as_str()
                } else {
                    self.background[zipf(rng, self.background.len())].as_str()
                }
            })
            .collect();
        words.join(" ")
    }
}

/// Two-class corpus of `docs` messages, about one in six spam.
pub fn synthetic_spam(docs: usize, seed: u64) -> Corpus {
    let mut rng = rng_from_seed(seed_from_u64(seed ^ 0x5a5a));
    let words = word_list(2600, &mut rng);
    let background = words[..2000].to_vec();
    // Overlapping pools so some messages are genuinely ambiguous.
    let spam_pool = words[2000..2350].to_vec();
    let ham_pool = words[2250..2600].to_vec();
    let mix = Mixture {
        background,
        pools: vec![spam_pool, ham_pool],
        signal: 0.12,
        length: (20, 160),
    };
    let mut corpus = Corpus::new();
    for _ in 0..docs {
        let spam = rng.gen_bool(1.0 / 6.0);
        let class = if spam { 0 } else { 1 };
        let label = if spam { SPAM_LABEL } else { "ham" };
        corpus.push(mix.doc(class, &mut rng), label);
    }
    corpus
}

pub const TOPIC_NAMES: [&str; 20] = [
    "alt.atheism",
    "comp.graphics",
    "comp.os.ms-windows.misc",
    "comp.sys.ibm.pc.hardware",
    "comp.sys.mac.hardware",
    "comp.windows.x",
    "misc.forsale",
    "rec.autos",
    "rec.motorcycles",
    "rec.sport.baseball",
    "rec.sport.hockey",
    "sci.crypt",
    "sci.electronics",
    "sci.med",
    "sci.space",
    "soc.religion.christian",
    "talk.politics.guns",
    "talk.politics.mideast",
    "talk.politics.misc",
    "talk.religion.misc",
];

/// `topics` categories (at most 20), `docs_per_topic` documents each.
/// Neighbouring topics share part of their vocabulary, as related
/// newsgroups do.
pub fn synthetic_topics(topics: usize, docs_per_topic: usize, seed: u64) -> Corpus {
    assert!((1..=TOPIC_NAMES.len()).contains(&topics));
    let mut rng = rng_from_seed(seed_from_u64(seed ^ 0x7070));
    let pool_size = 120;
    let stride = 80;
    let words = word_list(3000 + stride * topics + pool_size, &mut rng);
    let background = words[..3000].to_vec();
    let pools = (0..topics)
        .map(|t| words[3000 + t * stride..3000 + t * stride + pool_size].to_vec())
        .collect();
    let mix = Mixture {
        background,
        pools,
        signal: 0.08,
        length: (30, 200),
    };
    let mut docs = Vec::with_capacity(topics * docs_per_topic);
    for (t, name) in TOPIC_NAMES.iter().enumerate().take(topics) {
        for _ in 0..docs_per_topic {
            docs.push((mix.doc(t, &mut rng), name.to_string()));
        }
    }
    docs.shuffle(&mut rng);
    Corpus { documents: docs }
}
