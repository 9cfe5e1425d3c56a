//! Client-side keyword search over stored plaintext email.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::tokenize;
use crate::wire::{DecodeError, Reader, Writer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("document {0} already indexed")]
    DuplicateDocument(u64),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
}

/// Inverted index: token -> sorted, deduplicated document ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchIndex {
    postings: BTreeMap<String, Vec<u64>>,
    docs: Vec<u64>,
}

impl SearchIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn contains(&self, doc_id: u64) -> bool {
        self.docs.binary_search(&doc_id).is_ok()
    }

    pub fn add(&mut self, doc_id: u64, text: &str) -> Result<(), SearchError> {
        let pos = match self.docs.binary_search(&doc_id) {
            Ok(_) => return Err(SearchError::DuplicateDocument(doc_id)),
            Err(p) => p,
        };
        self.docs.insert(pos, doc_id);
        for tok in tokenize(text) {
            let list = self.postings.entry(tok).or_default();
            if let Err(p) = list.binary_search(&doc_id) {
                list.insert(p, doc_id);
            }
        }
        Ok(())
    }

    pub fn postings(&self, token: &str) -> &[u64] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Documents containing every query token. An empty query matches
    /// nothing.
    pub fn search(&self, query: &str) -> Vec<u64> {
        let mut tokens: Vec<String> = tokenize(query).collect();
        if tokens.is_empty() {
            return Vec::new();
        }
        tokens.sort_by_key(|t| self.postings(t).len());
        tokens.dedup();
        let mut acc: Vec<u64> = self.postings(&tokens[0]).to_vec();
        for t in &tokens[1..] {
            let other = self.postings(t);
            acc.retain(|d| other.binary_search(d).is_ok());
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    /// Sorted flat encoding: document ids, then tokens in order with their
    /// postings.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.count(self.docs.len());
        for &d in &self.docs {
            w.u64(d);
        }
        w.count(self.postings.len());
        for (tok, list) in &self.postings {
            w.str(tok).count(list.len());
            for &d in list {
                w.u64(d);
            }
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SearchError> {
        let mut r = Reader::new(bytes);
        let read_sorted = |r: &mut Reader<'_>| -> Result<Vec<u64>, DecodeError> {
            let n = r.count(8)?;
            let v = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DecodeError::Invalid("ids not strictly increasing"));
            }
            Ok(v)
        };
        let docs = read_sorted(&mut r)?;
        let n = r.count(8)?;
        let mut postings = BTreeMap::new();
        let mut last: Option<String> = None;
        for _ in 0..n {
            let tok = r.string()?;
            if last.as_ref().is_some_and(|l| *l >= tok) {
                return Err(DecodeError::Invalid("tokens not sorted").into());
            }
            let list = read_sorted(&mut r)?;
            if list.iter().any(|d| docs.binary_search(d).is_err()) {
                return Err(DecodeError::Invalid("posting for unknown document").into());
            }
            last = Some(tok.clone());
            postings.insert(tok, list);
        }
        r.finish()?;
        Ok(Self { postings, docs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_queries() {
        let mut idx = SearchIndex::new();
        idx.add(7, "hello world").unwrap();
        idx.add(3, "hello there").unwrap();
        idx.add(9, "").unwrap();
        assert_eq!(idx.search("hello"), [3, 7]);
        assert_eq!(idx.search("hello world"), [7]);
        assert_eq!(idx.search("nothing"), [] as [u64; 0]);
        assert_eq!(idx.search(""), [] as [u64; 0]);
        assert_eq!(idx.add(3, "again"), Err(SearchError::DuplicateDocument(3)));
        assert_eq!(idx.doc_count(), 3);
    }

    #[test]
    fn encoding_round_trip() {
        let mut idx = SearchIndex::new();
        idx.add(1, "alpha beta").unwrap();
        idx.add(2, "beta gamma").unwrap();
        assert_eq!(SearchIndex::decode(&idx.encode()).unwrap(), idx);
    }
}
