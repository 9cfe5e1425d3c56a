//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pretzel_core::ahe::{keygen, BackendParams, DEFAULT_ERROR_STDDEV, DEFAULT_LOG_Q};
use pretzel_core::model::{
    quantize, quantize_auto, quantize_threshold, select_features, train_nb, Corpus, Decision,
    LinearModel, ModelKind, QuantizedModel,
};
use pretzel_core::packing::{
    make_layout, PackingLayout, PackingMode, DEFAULT_B_IN, DEFAULT_F_IN, DEFAULT_LAMBDA,
    DEFAULT_L_MAX,
};
use pretzel_core::protocol::{
    clamp_threshold, client_setup, select_candidates, ClientModel, ProviderState, Served,
};
use pretzel_core::search::SearchIndex;
use pretzel_core::seed_from_u64;

use crate::bench::{self, BenchConfig, MIN_ITERATIONS};
use crate::corpus;
use crate::cost::{self, CostModel, Phase, System, Task};
use crate::formats::{self, ModelFile};
use crate::session::{self, Request};
use crate::transport::{Listener, TcpChannel};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Parser, Debug)]
#[command(name = "pretzel", version, about = "Private classification of email")]
struct Cli {
    /// File of `key = value` lines supplying defaults for flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print JSON instead of tab-separated tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a naive Bayes model.
    Train(TrainArgs),
    /// Convert a float model to fixed point.
    Quantize(QuantizeArgs),
    /// Keep the N' most informative features.
    SelectFeatures(SelectArgs),
    /// Generate keys, encrypt the model and hand it to a client.
    Setup(SetupArgs),
    /// Provider: answer sessions over TCP, one thread per connection.
    Serve(ServeArgs),
    /// Spam verdicts for email files.
    Classify(ClassifyArgs),
    /// Topic extraction for email files.
    Extract(ExtractArgs),
    /// Measure cryptographic micro-costs.
    Bench(BenchArgs),
    /// Evaluate the cost model.
    Estimate(EstimateArgs),
    /// Client-side keyword search.
    #[command(subcommand)]
    Search(SearchCmd),
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Directory with one subdirectory of documents per label.
    #[arg(long, value_name = "DIR", conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Use a generated corpus instead.
    #[arg(long, value_enum)]
    synthetic: Option<Synthetic>,
    /// Documents in the generated spam corpus, or per topic.
    #[arg(long, default_value_t = 500)]
    docs: usize,
    #[arg(long, default_value_t = 1)]
    corpus_seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Synthetic {
    Spam,
    Topics,
}

impl CorpusArgs {
    fn load(&self) -> Result<Corpus> {
        match (&self.corpus, self.synthetic) {
            (Some(dir), _) => Ok(corpus::load_dir(dir)?),
            (None, Some(Synthetic::Spam)) => {
                Ok(corpus::synthetic_spam(self.docs, self.corpus_seed))
            }
            (None, Some(Synthetic::Topics)) => Ok(corpus::synthetic_topics(
                corpus::TOPIC_NAMES.len(),
                self.docs,
                self.corpus_seed,
            )),
            (None, None) => Err("one of --corpus or --synthetic is required".into()),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    GrnbSpam,
    MultinomialNb,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QuantizeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_B_IN)]
    b_in: u32,
    /// Fixed-point scale; the largest that fits is chosen when omitted.
    #[arg(long)]
    scale: Option<u32>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    n_prime: usize,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum BackendArg {
    Paillier,
    Bv,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    WithinRow,
    AcrossRow,
}

#[derive(Args, Debug, Clone)]
struct LayoutArgs {
    #[arg(long, value_enum, default_value = "bv")]
    backend: BackendArg,
    /// Defaults to across-row for bv and within-row for paillier.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, default_value_t = DEFAULT_B_IN)]
    b_in: u32,
    #[arg(long, default_value_t = DEFAULT_F_IN)]
    f_in: u32,
    #[arg(long, default_value_t = DEFAULT_L_MAX)]
    l_max: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: u32,
    #[arg(long, default_value_t = 1024)]
    paillier_bits: u32,
    #[arg(long, default_value_t = 1024)]
    ring_degree: usize,
}

impl LayoutArgs {
    fn layout(&self) -> Result<PackingLayout> {
        let backend = match self.backend {
            BackendArg::Paillier => BackendParams::Paillier {
                modulus_bits: self.paillier_bits,
            },
            BackendArg::Bv => BackendParams::Bv {
                ring_degree: self.ring_degree,
                log_q: DEFAULT_LOG_Q,
                error_stddev: DEFAULT_ERROR_STDDEV,
            },
        };
        let mode = match (self.mode, self.backend) {
            (Some(ModeArg::WithinRow), _) | (None, BackendArg::Paillier) => PackingMode::WithinRow,
            (Some(ModeArg::AcrossRow), _) | (None, BackendArg::Bv) => PackingMode::AcrossRow,
        };
        Ok(make_layout(
            self.b_in,
            self.f_in,
            self.l_max,
            self.lambda,
            backend,
            mode,
        )?)
    }
}

#[derive(Args, Debug)]
struct SetupArgs {
    #[command(flatten)]
    layout: LayoutArgs,
    /// Model file (float models are quantized at --b-in).
    #[arg(long, required_unless_present = "connect")]
    model: Option<PathBuf>,
    /// Spam threshold on log alpha.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tau: f64,
    /// Provider state file to write.
    #[arg(long, required_unless_present = "connect")]
    state: Option<PathBuf>,
    /// Client model file to write.
    #[arg(long)]
    client_model: Option<PathBuf>,
    /// Fetch the encrypted model from a serving provider instead.
    #[arg(long, value_name = "ADDR", requires = "client_model")]
    connect: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    /// Stop after this many connections.
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct PeerArgs {
    /// Client model from setup.
    #[arg(long, required_unless_present = "noprivacy")]
    client_model: Option<PathBuf>,
    /// Provider state for an in-process run; the provider half runs in a
    /// second thread.
    #[arg(long, conflicts_with = "connect")]
    state: Option<PathBuf>,
    /// Serving provider address.
    #[arg(long, value_name = "ADDR")]
    connect: Option<String>,
    /// Plaintext reference using the provider state's model.
    #[arg(long)]
    noprivacy: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Email files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    peer: PeerArgs,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[command(flatten)]
    peer: PeerArgs,
    /// Candidate count for decomposed extraction; full extraction when
    /// omitted.
    #[arg(long)]
    b_prime: Option<usize>,
    /// Client's own model used to pick candidates (defaults to the
    /// provider's model in --noprivacy and in-process runs).
    #[arg(long)]
    candidate_model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = MIN_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write measured constants in estimator format.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Constants file (`key = value`), e.g. written by `bench --out`.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Extra constants, `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum)]
    system: Option<SystemArg>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, value_enum)]
    phase: Option<PhaseArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SystemArg {
    Nonprivate,
    Baseline,
    Pretzel,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TaskArg {
    Spam,
    Topics,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PhaseArg {
    Setup,
    PerEmail,
}

#[derive(Subcommand, Debug)]
enum SearchCmd {
    /// Index every file under a directory; document ids follow sorted paths.
    Index {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Documents containing every query token.
    Query {
        #[arg(long)]
        index: PathBuf,
        query: String,
    },
}

/// Append `--key value` for config entries whose flag is absent.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=").map(String::from).or_else(|| {
            (a == "--config")
                .then(|| strs.get(i + 1).cloned())
                .flatten()
        })
    });
    let Some(path) = path else {
        return Ok(args);
    };
    let text = formats::read_text(Path::new(&path))?;
    let split_at = strs.iter().position(|a| a == "--").unwrap_or(strs.len());
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", n + 1))?;
        let key = k.trim().replace('_', "-");
        let v = v.trim().trim_matches('"');
        let flag = format!("--{key}");
        let present = strs[..split_at]
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if present {
            continue;
        }
        match v {
            "true" => extra.push(flag),
            "false" => {}
            _ => extra.push(format!("{flag}={v}")),
        }
    }
    let mut out = args;
    out.splice(split_at..split_at, extra.into_iter().map(OsString::from));
    Ok(out)
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.cmd {
        Command::Train(a) => train(a),
        Command::Quantize(a) => quantize_cmd(a),
        Command::SelectFeatures(a) => select(a),
        Command::Setup(a) => setup(a, json),
        Command::Serve(a) => serve(a),
        Command::Classify(a) => classify(a, json),
        Command::Extract(a) => extract(a, json),
        Command::Bench(a) => bench_cmd(a, json),
        Command::Estimate(a) => estimate(a, json),
        Command::Search(c) => search(c, json),
    }
}

/// Rows of string cells, printed as TSV or a JSON array of objects.
fn emit(json: bool, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    if json {
        let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
            .iter()
            .map(|r| {
                header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| (h.to_string(), serde_json::Value::String(v.clone())))
                    .collect()
            })
            .collect();
        serde_json::to_writer_pretty(&mut out, &objs)?;
        writeln!(out)?;
    } else {
        writeln!(out, "{}", header.join("\t"))?;
        for r in rows {
            writeln!(out, "{}", r.join("\t"))?;
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let kind = match a.kind {
        KindArg::GrnbSpam => ModelKind::GrnbSpam,
        KindArg::MultinomialNb => ModelKind::MultinomialNb,
    };
    let model = train_nb(&corpus, kind, None)?;
    formats::write_file(&a.out, formats::write_model(&model)?.as_bytes())?;
    eprintln!(
        "trained {} model: N={} B={} from {} documents",
        kind.name(),
        model.num_features(),
        model.num_categories(),
        corpus.len()
    );
    Ok(())
}

fn load_float(path: &Path) -> Result<LinearModel> {
    Ok(formats::parse_model(&formats::read_text(path)?)?)
}

fn load_quantized(path: &Path, b_in: u32) -> Result<QuantizedModel> {
    Ok(
        match formats::parse_model_file(&formats::read_text(path)?)? {
            ModelFile::Float(m) => quantize_auto(&m, b_in)?,
            ModelFile::Quantized(q) => q,
        },
    )
}

fn quantize_cmd(a: QuantizeArgs) -> Result<()> {
    let m = load_float(&a.model)?;
    let q = match a.scale {
        Some(s) => quantize(&m, a.b_in, s)?,
        None => quantize_auto(&m, a.b_in)?,
    };
    formats::write_file(&a.out, formats::write_quantized(&q)?.as_bytes())?;
    eprintln!(
        "quantized at b_in={} scale={}; max parameter error {:.3e}",
        q.b_in,
        q.scale,
        q.max_parameter_error(&m)
    );
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let m = load_float(&a.model)?;
    let corpus = a.corpus.load()?;
    let reduced = select_features(&m, &corpus, a.n_prime)?;
    formats::write_file(&a.out, formats::write_model(&reduced)?.as_bytes())?;
    Ok(())
}

fn setup(a: SetupArgs, json: bool) -> Result<()> {
    let layout = a.layout.layout()?;
    if let Some(addr) = &a.connect {
        let mut ch = TcpChannel::connect(addr.as_str())?;
        let model = client_setup(&mut ch, &layout)?;
        let path = a.client_model.as_ref().expect("clap requires client_model");
        formats::write_file(path, &formats::encode_client_model(&model)?)?;
        let st = ch.stats();
        return emit(
            json,
            &["ciphertexts", "bytes_received"],
            &[vec![
                model.model.ciphertext_count().to_string(),
                st.bytes_received.to_string(),
            ]],
        );
    }
    let model_path = a.model.as_ref().expect("clap requires model");
    let qmodel = load_quantized(model_path, layout.b_in)?;
    if qmodel.b_in != layout.b_in {
        return Err(format!(
            "model uses b_in={} but the layout uses b_in={}",
            qmodel.b_in, layout.b_in
        )
        .into());
    }
    let keys = keygen(&layout.params, seed_from_u64(a.seed))?;
    let tau_q = clamp_threshold(quantize_threshold(a.tau, qmodel.scale), &layout);
    let state = ProviderState {
        layout,
        model: qmodel,
        keys,
        tau_q,
    };
    let state_path = a.state.as_ref().expect("clap requires state");
    formats::write_file(state_path, &formats::encode_provider_state(&state)?)?;
    if let Some(path) = &a.client_model {
        let (model, stats) = session::loopback_setup(&state, a.seed)?;
        formats::write_file(path, &formats::encode_client_model(&model)?)?;
        emit(
            json,
            &["N", "B", "ciphertexts", "ciphertext_bytes", "network_bytes"],
            &[vec![
                model.model.num_features.to_string(),
                model.model.num_categories.to_string(),
                model.model.ciphertext_count().to_string(),
                layout.params.ciphertext_size().to_string(),
                (stats.bytes_sent + stats.bytes_received).to_string(),
            ]],
        )?;
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let state = formats::decode_provider_state(&formats::read_file(&a.state)?)?;
    let listener = Listener::bind(a.listen.as_str())?;
    eprintln!("listening on {}", listener.local_addr()?);
    thread::scope(|s| -> Result<()> {
        let mut n = 0usize;
        while a.sessions.is_none_or(|max| n < max) {
            let mut ch = listener.accept()?;
            let state = &state;
            let seed = a.seed.wrapping_add(n as u64);
            let peer = ch
                .peer_addr()
                .map(|p| p.to_string())
                .unwrap_or_else(|| "?".into());
            s.spawn(move || match session::serve_one(&mut ch, state, seed) {
                Ok(Served::Setup) => eprintln!("{peer}: setup"),
                Ok(Served::Spam) => eprintln!("{peer}: spam verdict delivered"),
                Ok(Served::Topic { function, topic }) => {
                    let label = state.model.labels.get(topic).map_or("?", String::as_str);
                    println!("{peer}\t{}\t{label}", function.name());
                }
                Err(e) => eprintln!("{peer}: {e}"),
            });
            n += 1;
        }
        Ok(())
    })
}

fn read_email(path: &Path) -> Result<String> {
    Ok(String::from_utf8_lossy(&formats::read_file(path)?).into_owned())
}

fn decision_name(d: Decision, labels: &[String]) -> String {
    match d {
        Decision::Spam => "spam".into(),
        Decision::NotSpam => "not-spam".into(),
        Decision::Category(j) => labels.get(j).cloned().unwrap_or_else(|| j.to_string()),
    }
}

struct Peers {
    state: Option<ProviderState>,
    client: Option<ClientModel>,
}

fn load_peers(p: &PeerArgs) -> Result<Peers> {
    let state = match &p.state {
        Some(path) => Some(formats::decode_provider_state(&formats::read_file(path)?)?),
        None => None,
    };
    let client = match &p.client_model {
        Some(path) if !p.noprivacy => {
            Some(formats::decode_client_model(&formats::read_file(path)?)?)
        }
        _ => None,
    };
    if p.noprivacy && state.is_none() {
        return Err("--noprivacy needs --state".into());
    }
    if !p.noprivacy && state.is_none() && p.connect.is_none() {
        return Err("need --state for an in-process run or --connect".into());
    }
    Ok(Peers { state, client })
}

fn classify(a: ClassifyArgs, json: bool) -> Result<()> {
    let p = &a.peer;
    let peers = load_peers(p)?;
    let mut rows = Vec::new();
    for (i, f) in p.files.iter().enumerate() {
        let text = read_email(f)?;
        let verdict = if p.noprivacy {
            let st = peers.state.as_ref().unwrap();
            let fv =
                pretzel_core::model::extract_features(&text, Some(&st.model.vocab), st.layout.f_in);
            st.model.classify(&fv, st.tau_q)?
        } else {
            let cm = peers.client.as_ref().unwrap();
            let fv = cm.features(&text);
            let req = Request::Spam(&fv);
            let seed = p.seed.wrapping_add(i as u64);
            let d = match (&peers.state, &p.connect) {
                (Some(st), _) => session::loopback(st, cm, &req, seed)?.client,
                (None, Some(addr)) => {
                    let mut ch = TcpChannel::connect(addr.as_str())?;
                    session::client_request(&mut ch, cm, &req, seed)?
                }
                (None, None) => unreachable!(),
            };
            d.ok_or("no verdict")?
        };
        rows.push(vec![f.display().to_string(), decision_name(verdict, &[])]);
    }
    emit(json, &["file", "verdict"], &rows)
}

fn extract(a: ExtractArgs, json: bool) -> Result<()> {
    let p = &a.peer;
    let peers = load_peers(p)?;
    let cand_model = match &a.candidate_model {
        Some(path) => Some(load_float(path)?),
        None => None,
    };
    let mut rows = Vec::new();
    for (i, f) in p.files.iter().enumerate() {
        let text = read_email(f)?;
        let seed = p.seed.wrapping_add(i as u64);
        let (vocab, f_in, labels) = match (&peers.state, &peers.client) {
            (_, Some(cm)) => (&cm.vocab, cm.model.layout.f_in, &cm.labels),
            (Some(st), None) => (&st.model.vocab, st.layout.f_in, &st.model.labels),
            (None, None) => unreachable!(),
        };
        let fv = pretzel_core::model::extract_features(&text, Some(vocab), f_in);
        let candidates = match a.b_prime {
            None => None,
            Some(bp) => {
                let m = match (&cand_model, &peers.state) {
                    (Some(m), _) => m.clone(),
                    (None, Some(st)) => dequantized(&st.model),
                    (None, None) => return Err("--b-prime over TCP needs --candidate-model".into()),
                };
                let cfv = pretzel_core::model::extract_features(&text, Some(&m.vocab), f_in);
                Some(select_candidates(&m, &cfv, bp)?)
            }
        };
        let topic = if p.noprivacy {
            let st = peers.state.as_ref().unwrap();
            let scores = st.model.scores(&fv)?;
            let pool: Vec<usize> = match &candidates {
                Some(c) => c.indexes().iter().map(|&j| j - 1).collect(),
                None => (0..scores.len()).collect(),
            };
            let mut best = pool[0];
            for &j in &pool[1..] {
                if scores[j] > scores[best] {
                    best = j;
                }
            }
            Some(best)
        } else {
            let cm = peers.client.as_ref().unwrap();
            let req = match &candidates {
                Some(c) => Request::TopicDecomposed(&fv, c),
                None => Request::TopicFull(&fv),
            };
            match (&peers.state, &p.connect) {
                (Some(st), _) => session::loopback(st, cm, &req, seed)?.provider_topic,
                (None, Some(addr)) => {
                    let mut ch = TcpChannel::connect(addr.as_str())?;
                    session::client_request(&mut ch, cm, &req, seed)?;
                    None
                }
                (None, None) => unreachable!(),
            }
        };
        let shown = match topic {
            Some(j) => decision_name(Decision::Category(j), labels),
            // Over TCP only the provider learns the topic.
            None => "(sent to provider)".into(),
        };
        rows.push(vec![f.display().to_string(), shown]);
    }
    emit(json, &["file", "topic"], &rows)
}

/// Float view of a quantized model; same argmax as the quantized scores.
fn dequantized(q: &QuantizedModel) -> LinearModel {
    let unit = (-(q.scale as f64)).exp2();
    let f = |v: u64| v as f64 * unit + q.offset;
    LinearModel {
        kind: q.kind,
        labels: q.labels.clone(),
        vocab: q.vocab.clone(),
        weights: q
            .qweights
            .iter()
            .map(|w| w.iter().map(|&v| f(v)).collect())
            .collect(),
        priors: q.qpriors.iter().map(|&v| f(v)).collect(),
    }
}

#[derive(Serialize)]
struct BenchJson {
    measurements: Vec<(String, f64)>,
    paillier_ciphertext_bytes: usize,
    bv_ciphertext_bytes: usize,
    bv_over_paillier_decrypt: f64,
    constants: std::collections::BTreeMap<&'static str, String>,
}

fn bench_cmd(a: BenchArgs, json: bool) -> Result<()> {
    if a.iterations < MIN_ITERATIONS {
        return Err(format!("--iterations must be at least {MIN_ITERATIONS}").into());
    }
    let report = bench::run(&BenchConfig {
        iterations: a.iterations,
        seed: a.seed,
        ..Default::default()
    });
    let cm = report.cost_model();
    if let Some(path) = &a.out {
        formats::write_file(path, cm.to_string().as_bytes())?;
    }
    let ratio =
        report.get("bv_dec").unwrap_or(f64::NAN) / report.get("paillier_dec").unwrap_or(f64::NAN);
    if json {
        let j = BenchJson {
            measurements: report
                .measurements
                .iter()
                .map(|m| (m.name.to_string(), m.median_us))
                .collect(),
            paillier_ciphertext_bytes: report.paillier_ciphertext_bytes,
            bv_ciphertext_bytes: report.bv_ciphertext_bytes,
            bv_over_paillier_decrypt: ratio,
            constants: cm.entries(),
        };
        println!("{}", serde_json::to_string_pretty(&j)?);
        return Ok(());
    }
    let mut rows: Vec<Vec<String>> = report
        .measurements
        .iter()
        .map(|m| vec![m.name.to_string(), format!("{:.3}", m.median_us)])
        .collect();
    rows.push(vec![
        "paillier_ciphertext_bytes".into(),
        report.paillier_ciphertext_bytes.to_string(),
    ]);
    rows.push(vec![
        "bv_ciphertext_bytes".into(),
        report.bv_ciphertext_bytes.to_string(),
    ]);
    rows.push(vec![
        "yao_bytes_per_input".into(),
        format!("{:.1}", report.yao_bytes_per_input),
    ]);
    rows.push(vec!["bv_dec/paillier_dec".into(), format!("{ratio:.4}")]);
    emit(false, &["measurement", "median_us_or_bytes"], &rows)
}

fn estimate(a: EstimateArgs, json: bool) -> Result<()> {
    let mut cm = match &a.constants {
        Some(p) => CostModel::parse(&formats::read_text(p)?)?,
        None => CostModel::default(),
    };
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cm.set(k.trim(), v.trim())?;
    }
    let systems: Vec<System> = match a.system {
        None => System::ALL.to_vec(),
        Some(SystemArg::Nonprivate) => vec![System::NonPrivate],
        Some(SystemArg::Baseline) => vec![System::Baseline],
        Some(SystemArg::Pretzel) => vec![System::Pretzel],
    };
    let tasks: Vec<Task> = match a.task {
        None => Task::ALL.to_vec(),
        Some(TaskArg::Spam) => vec![Task::Spam],
        Some(TaskArg::Topics) => vec![Task::Topics],
    };
    let phases: Vec<Phase> = match a.phase {
        None => Phase::ALL.to_vec(),
        Some(PhaseArg::Setup) => vec![Phase::Setup],
        Some(PhaseArg::PerEmail) => vec![Phase::PerEmail],
    };
    let mut rows = Vec::new();
    for &task in &tasks {
        for &phase in &phases {
            for &system in &systems {
                let row = cost::estimate_costs(&cm, system, task, phase)?;
                for (metric, v) in row.metrics() {
                    let (exact, approx) = match v {
                        Some(q) => (
                            cost::format_rational(&q),
                            format!("{:.6e}", cost::to_f64(&q)),
                        ),
                        None => ("N/A".into(), "N/A".into()),
                    };
                    rows.push(vec![
                        task.name().into(),
                        phase.name().into(),
                        system.name().into(),
                        metric.into(),
                        exact,
                        approx,
                    ]);
                }
            }
        }
    }
    emit(
        json,
        &["task", "phase", "system", "metric", "exact", "approx"],
        &rows,
    )
}

fn files_under(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn search(c: SearchCmd, json: bool) -> Result<()> {
    match c {
        SearchCmd::Index { dir, out } => {
            let mut idx = SearchIndex::new();
            let files = files_under(&dir)?;
            let mut rows = Vec::new();
            for (id, f) in files.iter().enumerate() {
                idx.add(id as u64, &read_email(f)?)?;
                rows.push(vec![id.to_string(), f.display().to_string()]);
            }
            formats::write_file(&out, &formats::encode_search_index(&idx))?;
            emit(json, &["doc_id", "path"], &rows)
        }
        SearchCmd::Query { index, query } => {
            let idx = formats::decode_search_index(&formats::read_file(&index)?)?;
            let rows: Vec<Vec<String>> = idx
                .search(&query)
                .into_iter()
                .map(|d| vec![d.to_string()])
                .collect();
            emit(json, &["doc_id"], &rows)
        }
    }
}
