//! On-disk formats.
//!
//! Models are line-oriented text:
//!
//! ```text
//! pretzel-model v1 kind=<k> N=<n> B=<b> [b_in=<bits> scale=<s> offset=<f>]
//! labels <l1> ... <lB>
//! priors <p1> ... <pB>
//! <token> <w_1> ... <w_B>        (N lines)
//! ```
//!
//! The bracketed header fields mark a quantized model, whose priors and rows
//! are integers. Everything else (keys, provider state, client model, search
//! index) is binary: an 8-byte magic followed by the core crate's
//! little-endian encoding.

use std::fmt::Write as _;
use std::path::Path;

use pretzel_core::ahe::{AheError, KeyPair, SecretKey};
use pretzel_core::model::{LinearModel, ModelError, ModelKind, QuantizedModel, Vocabulary};
use pretzel_core::packing::{PackingError, PackingLayout};
use pretzel_core::protocol::{ClientModel, ProtocolError, ProviderState};
use pretzel_core::search::{SearchError, SearchIndex};
use pretzel_core::wire::{DecodeError, Reader, Writer};

pub const MODEL_MAGIC: &str = "pretzel-model";
pub const MODEL_VERSION: &str = "v1";

pub const KEY_MAGIC: [u8; 8] = *b"PZSECKEY";
pub const PROVIDER_MAGIC: [u8; 8] = *b"PZPROVID";
pub const CLIENT_MAGIC: [u8; 8] = *b"PZCLIENT";
pub const INDEX_MAGIC: [u8; 8] = *b"PZSINDEX";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not a {0} file")]
    Magic(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Ahe(#[from] AheError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Either kind of model file.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Float(LinearModel),
    Quantized(QuantizedModel),
}

fn check_word(s: &str, what: &str) -> Result<(), FormatError> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(parse_err(
            0,
            format!("{what} {s:?} is empty or has whitespace"),
        ));
    }
    Ok(())
}

fn header(kind: ModelKind, n: usize, b: usize) -> String {
    format!(
        "{MODEL_MAGIC} {MODEL_VERSION} kind={} N={n} B={b}",
        kind.name()
    )
}

fn labels_line(out: &mut String, labels: &[String]) -> Result<(), FormatError> {
    out.push_str("labels");
    for l in labels {
        check_word(l, "label")?;
        write!(out, " {l}").unwrap();
    }
    out.push('\n');
    Ok(())
}

pub fn write_model(m: &LinearModel) -> Result<String, FormatError> {
    let mut out = header(m.kind, m.num_features(), m.num_categories());
    out.push('\n');
    labels_line(&mut out, &m.labels)?;
    out.push_str("priors");
    for p in &m.priors {
        write!(out, " {p:?}").unwrap();
    }
    out.push('\n');
    for (i, tok) in m.vocab.tokens().iter().enumerate() {
        check_word(tok, "token")?;
        out.push_str(tok);
        for w in &m.weights {
            write!(out, " {:?}", w[i]).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_quantized(q: &QuantizedModel) -> Result<String, FormatError> {
    let mut out = header(q.kind, q.num_features(), q.num_categories());
    writeln!(
        out,
        " b_in={} scale={} offset={:?}",
        q.b_in, q.scale, q.offset
    )
    .unwrap();
    labels_line(&mut out, &q.labels)?;
    out.push_str("priors");
    for p in &q.qpriors {
        write!(out, " {p}").unwrap();
    }
    out.push('\n');
    for (i, tok) in q.vocab.tokens().iter().enumerate() {
        check_word(tok, "token")?;
        out.push_str(tok);
        for w in &q.qweights {
            write!(out, " {}", w[i]).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

struct Header {
    kind: ModelKind,
    n: usize,
    b: usize,
    quant: Option<(u32, u32, f64)>,
}

fn parse_header(line: &str) -> Result<Header, FormatError> {
    let mut it = line.split_whitespace();
    if it.next() != Some(MODEL_MAGIC) {
        return Err(FormatError::Magic("model"));
    }
    if it.next() != Some(MODEL_VERSION) {
        return Err(parse_err(1, "unsupported model version"));
    }
    let (mut kind, mut n, mut b) = (None, None, None);
    let (mut b_in, mut scale, mut offset) = (None, None, None);
    for field in it {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("bad header field {field:?}")))?;
        let bad = || parse_err(1, format!("bad value for {k}: {v:?}"));
        match k {
            "kind" => kind = Some(ModelKind::from_name(v).ok_or_else(bad)?),
            "N" => n = Some(v.parse().map_err(|_| bad())?),
            "B" => b = Some(v.parse().map_err(|_| bad())?),
            "b_in" => b_in = Some(v.parse().map_err(|_| bad())?),
            "scale" => scale = Some(v.parse().map_err(|_| bad())?),
            "offset" => offset = Some(v.parse().map_err(|_| bad())?),
            _ => return Err(parse_err(1, format!("unknown header field {k}"))),
        }
    }
    let missing = |f: &str| parse_err(1, format!("missing header field {f}"));
    let quant = match (b_in, scale, offset) {
        (None, None, None) => None,
        (Some(a), Some(s), Some(o)) => Some((a, s, o)),
        _ => {
            return Err(parse_err(
                1,
                "quantized header needs b_in, scale and offset",
            ))
        }
    };
    Ok(Header {
        kind: kind.ok_or_else(|| missing("kind"))?,
        n: n.ok_or_else(|| missing("N"))?,
        b: b.ok_or_else(|| missing("B"))?,
        quant,
    })
}

fn values<T: std::str::FromStr>(
    line_no: usize,
    parts: std::str::SplitWhitespace<'_>,
    expected: usize,
) -> Result<Vec<T>, FormatError> {
    let vals = parts
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| parse_err(line_no, format!("bad number {s:?}")))
        })
        .collect::<Result<Vec<T>, _>>()?;
    if vals.len() != expected {
        return Err(parse_err(
            line_no,
            format!("expected {expected} values, found {}", vals.len()),
        ));
    }
    Ok(vals)
}

struct Body<T> {
    labels: Vec<String>,
    priors: Vec<T>,
    tokens: Vec<String>,
    /// Row-major N x B as read.
    rows: Vec<Vec<T>>,
}

fn parse_body<'a, T: std::str::FromStr>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    h: &Header,
) -> Result<Body<T>, FormatError> {
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing {what}")))
    };
    let (ln, l) = next("labels line")?;
    let mut parts = l.split_whitespace();
    if parts.next() != Some("labels") {
        return Err(parse_err(ln, "expected labels line"));
    }
    let labels: Vec<String> = parts.map(String::from).collect();
    if labels.len() != h.b {
        return Err(parse_err(ln, format!("expected {} labels", h.b)));
    }
    let (ln, l) = next("priors line")?;
    let mut parts = l.split_whitespace();
    if parts.next() != Some("priors") {
        return Err(parse_err(ln, "expected priors line"));
    }
    let priors = values(ln, parts, h.b)?;
    let mut tokens = Vec::with_capacity(h.n);
    let mut rows = Vec::with_capacity(h.n);
    for _ in 0..h.n {
        let (ln, l) = next("feature row")?;
        let mut parts = l.split_whitespace();
        let tok = parts
            .next()
            .ok_or_else(|| parse_err(ln, "empty feature row"))?;
        tokens.push(tok.to_string());
        rows.push(values(ln, parts, h.b)?);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing lines after the last feature row"));
    }
    Ok(Body {
        labels,
        priors,
        tokens,
        rows,
    })
}

fn transpose<T: Copy>(rows: &[Vec<T>], b: usize) -> Vec<Vec<T>> {
    (0..b)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn parse_model_file(text: &str) -> Result<ModelFile, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(FormatError::Magic("model"))?;
    let h = parse_header(first)?;
    match h.quant {
        None => {
            let body: Body<f64> = parse_body(&mut lines, &h)?;
            let vocab = Vocabulary::from_tokens(body.tokens)?;
            Ok(ModelFile::Float(LinearModel::new(
                h.kind,
                body.labels,
                vocab,
                transpose(&body.rows, h.b),
                body.priors,
            )?))
        }
        Some((b_in, scale, offset)) => {
            let body: Body<u64> = parse_body(&mut lines, &h)?;
            let limit = 1u64 << b_in.min(63);
            if body
                .priors
                .iter()
                .chain(body.rows.iter().flatten())
                .any(|&v| v >= limit)
            {
                return Err(parse_err(0, format!("quantized value exceeds {b_in} bits")));
            }
            let vocab = Vocabulary::from_tokens(body.tokens)?;
            Ok(ModelFile::Quantized(QuantizedModel {
                kind: h.kind,
                labels: body.labels,
                vocab,
                b_in,
                scale,
                offset,
                qweights: transpose(&body.rows, h.b),
                qpriors: body.priors,
            }))
        }
    }
}

pub fn parse_model(text: &str) -> Result<LinearModel, FormatError> {
    match parse_model_file(text)? {
        ModelFile::Float(m) => Ok(m),
        ModelFile::Quantized(_) => Err(parse_err(1, "expected a float model, found quantized")),
    }
}

pub fn parse_quantized(text: &str) -> Result<QuantizedModel, FormatError> {
    match parse_model_file(text)? {
        ModelFile::Quantized(q) => Ok(q),
        ModelFile::Float(_) => Err(parse_err(1, "expected a quantized model, found float")),
    }
}

fn with_magic(magic: [u8; 8], body: impl FnOnce(&mut Writer)) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(&magic);
    body(&mut w);
    w.finish()
}

fn strip_magic<'a>(
    bytes: &'a [u8],
    magic: [u8; 8],
    what: &'static str,
) -> Result<Reader<'a>, FormatError> {
    match bytes.strip_prefix(&magic[..]) {
        Some(rest) => Ok(Reader::new(rest)),
        None => Err(FormatError::Magic(what)),
    }
}

pub fn encode_secret_key(sk: &SecretKey) -> Vec<u8> {
    with_magic(KEY_MAGIC, |w| {
        w.bytes(&sk.to_bytes());
    })
}

pub fn decode_keys(bytes: &[u8]) -> Result<KeyPair, FormatError> {
    let mut r = strip_magic(bytes, KEY_MAGIC, "secret key")?;
    let sk = SecretKey::from_bytes(r.bytes()?)?;
    r.finish()?;
    Ok(KeyPair {
        pk: sk.public(),
        sk,
    })
}

/// Provider state: layout, secret key, threshold, then the quantized model
/// in its text form.
pub fn encode_provider_state(state: &ProviderState) -> Result<Vec<u8>, FormatError> {
    let model = write_quantized(&state.model)?;
    Ok(with_magic(PROVIDER_MAGIC, |w| {
        state.layout.encode(w);
        w.bytes(&state.keys.sk.to_bytes());
        w.i64(state.tau_q);
        w.str(&model);
    }))
}

pub fn decode_provider_state(bytes: &[u8]) -> Result<ProviderState, FormatError> {
    let mut r = strip_magic(bytes, PROVIDER_MAGIC, "provider state")?;
    let layout = PackingLayout::decode(&mut r)?;
    let sk = SecretKey::from_bytes(r.bytes()?)?;
    let tau_q = r.i64()?;
    let model = parse_quantized(&r.string()?)?;
    r.finish()?;
    if sk.params() != &layout.params {
        return Err(FormatError::Packing(PackingError::Layout(
            "key parameters differ from the layout",
        )));
    }
    Ok(ProviderState {
        layout,
        model,
        keys: KeyPair {
            pk: sk.public(),
            sk,
        },
        tau_q,
    })
}

pub fn encode_client_model(m: &ClientModel) -> Result<Vec<u8>, FormatError> {
    let body = m.encode()?;
    Ok(with_magic(CLIENT_MAGIC, |w| {
        w.raw(&body);
    }))
}

pub fn decode_client_model(bytes: &[u8]) -> Result<ClientModel, FormatError> {
    let r = strip_magic(bytes, CLIENT_MAGIC, "client model")?;
    let rest = &bytes[bytes.len() - r.remaining()..];
    Ok(ClientModel::decode(rest)?)
}

pub fn encode_search_index(idx: &SearchIndex) -> Vec<u8> {
    with_magic(INDEX_MAGIC, |w| {
        w.raw(&idx.encode());
    })
}

pub fn decode_search_index(bytes: &[u8]) -> Result<SearchIndex, FormatError> {
    strip_magic(bytes, INDEX_MAGIC, "search index")?;
    Ok(SearchIndex::decode(&bytes[INDEX_MAGIC.len()..])?)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LinearModel {
        let vocab = Vocabulary::from_tokens(["aa", "bb", "cc"]).unwrap();
        LinearModel::new(
            ModelKind::Logistic,
            vec!["x".into(), "y".into()],
            vocab,
            vec![vec![0.1, -2.5, 1e-300], vec![3.0, 0.0, -0.333]],
            vec![0.5, -0.25],
        )
        .unwrap()
    }

    #[test]
    fn float_model_round_trips_exactly() {
        let m = toy();
        let text = write_model(&m).unwrap();
        assert!(text.starts_with("pretzel-model v1 kind=logistic N=3 B=2\n"));
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn quantized_round_trip() {
        let q = pretzel_core::model::quantize(&toy(), 10, 6).unwrap();
        let text = write_quantized(&q).unwrap();
        assert!(text.lines().next().unwrap().contains("b_in=10 scale=6"));
        assert_eq!(parse_quantized(&text).unwrap(), q);
        assert!(parse_model(&text).is_err());
    }

    #[test]
    fn wrong_row_width_is_reported_with_line() {
        let text = "pretzel-model v1 kind=svm N=1 B=2\nlabels a b\npriors 0 0\ntok 1.0\n";
        match parse_model(text) {
            Err(FormatError::Parse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(parse_model("hello"), Err(FormatError::Magic(_))));
        assert!(matches!(
            decode_search_index(b"nope"),
            Err(FormatError::Magic(_))
        ));
    }
}
