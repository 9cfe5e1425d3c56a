use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::ModelError;

const MIN_TOKEN_CHARS: usize = 2;
const MAX_TOKEN_CHARS: usize = 24;

/// Lowercase and split on anything that is not alphanumeric.
///
/// Returns every non-empty piece; length filtering is the caller's business
/// because vocabulary lookups accept any token the vocabulary knows.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

pub(crate) fn keep_new_token(tok: &str) -> bool {
    let n = tok.chars().count();
    (MIN_TOKEN_CHARS..=MAX_TOKEN_CHARS).contains(&n)
}

/// Token string <-> dense feature id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from tokens in id order. Duplicate tokens are rejected.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for t in tokens {
            let t = t.into();
            if v.index.contains_key(&t) {
                return Err(ModelError::InvalidParameter("duplicate vocabulary token"));
            }
            v.insert(t);
        }
        Ok(v)
    }

    /// Insert if absent; returns the id either way.
    pub fn insert(&mut self, token: String) -> u32 {
        if let Some(&id) = self.index.get(&token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
        id
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Sparse feature vector of one email: `(feature id, frequency)` pairs with
/// strictly increasing ids and frequencies >= 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector {
    entries: Vec<(u32, u32)>,
}

impl FeatureVector {
    pub fn new(entries: Vec<(u32, u32)>) -> Result<Self, ModelError> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ModelError::InvalidParameter(
                "feature ids must be strictly increasing",
            ));
        }
        if entries.iter().any(|&(_, f)| f == 0) {
            return Err(ModelError::InvalidParameter(
                "feature frequency must be >= 1",
            ));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    /// Number of distinct features present (L).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_frequency(&self) -> u64 {
        self.entries.iter().map(|&(_, f)| f as u64).sum()
    }

    pub fn max_feature_id(&self) -> Option<u32> {
        self.entries.last().map(|&(id, _)| id)
    }

    pub fn check_range(&self, num_features: usize) -> Result<(), ModelError> {
        match self.max_feature_id() {
            Some(id) if id as usize >= num_features => {
                Err(ModelError::FeatureOutOfRange { id, num_features })
            }
            _ => Ok(()),
        }
    }
}

fn fnv1a32(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Turn text into a feature vector.
///
/// With a vocabulary, tokens it does not contain are dropped. Without one,
/// tokens of 2 to 24 characters are hashed (32-bit FNV-1a) to feature ids.
/// Frequencies are clamped to `2^f_in - 1`.
pub fn extract_features(text: &str, vocab: Option<&Vocabulary>, f_in: u32) -> FeatureVector {
    assert!(f_in >= 1, "f_in must be at least 1");
    let cap = if f_in >= 32 {
        u32::MAX
    } else {
        (1u32 << f_in) - 1
    };
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for tok in tokenize(text) {
        let id = match vocab {
            Some(v) => match v.get(&tok) {
                Some(id) => id,
                None => continue,
            },
            None if keep_new_token(&tok) => fnv1a32(&tok),
            None => continue,
        };
        let c = counts.entry(id).or_insert(0);
        *c = c.saturating_add(1);
    }
    FeatureVector {
        entries: counts.into_iter().map(|(id, c)| (id, c.min(cap))).collect(),
    }
}
