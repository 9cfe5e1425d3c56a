use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use pretzel::corpus;

const BIN: &str = env!("CARGO_BIN_EXE_pretzel");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Second column of a TSV table, header dropped.
fn column(tsv: &str) -> Vec<String> {
    tsv.lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().to_string())
        .collect()
}

fn emails<S: AsRef<str>>(dir: &Path, texts: &[S]) -> Vec<PathBuf> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let f = dir.join(format!("m{i}.eml"));
            std::fs::write(&f, t.as_ref()).unwrap();
            f
        })
        .collect()
}

/// Held-out documents from a generated corpus, so the vocabulary overlaps.
fn held_out(c: pretzel_core::model::Corpus, n: usize) -> Vec<String> {
    c.documents.into_iter().take(n).map(|(t, _)| t).collect()
}

#[test]
fn usage_and_runtime_errors() {
    assert_eq!(run(&["estimate", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["train", "--kind", "grnb-spam"]).status.code(), Some(2));
    let out = run(&["quantize", "--model", "/nonexistent/m.txt", "-o", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(
        run(&["estimate", "--set", "B=2", "--system", "pretzel"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn spam_pipeline_private_equals_plaintext() {
    let d = tempfile::tempdir().unwrap();
    let model = d.path().join("spam.model");
    let reduced = d.path().join("spam.reduced");
    let quant = d.path().join("spam.q");
    let state = d.path().join("provider.state");
    let cm = d.path().join("client.model");
    ok(&[
        "train", "--synthetic", "spam", "--docs", "120", "--kind", "grnb-spam", "-o", p(&model),
    ]);
    ok(&[
        "select-features", "--model", p(&model), "--synthetic", "spam", "--docs", "120",
        "--n-prime", "200", "-o", p(&reduced),
    ]);
    let header = std::fs::read_to_string(&reduced).unwrap();
    assert!(header.starts_with("pretzel-model v1 kind=grnb_spam N=200 B=2"));
    ok(&["quantize", "--model", p(&reduced), "-o", p(&quant)]);
    let setup = ok(&[
        "setup", "--ring-degree", "64", "--model", p(&quant), "--state", p(&state),
        "--client-model", p(&cm),
    ]);
    assert!(setup.starts_with("N\tB\tciphertexts\tciphertext_bytes\tnetwork_bytes\n200\t2\t"));

    let files = emails(d.path(), &held_out(corpus::synthetic_spam(12, 99), 12));
    let mut args = vec!["classify", "--state", p(&state), "--client-model", p(&cm)];
    args.extend(files.iter().map(|f| p(f)));
    let private = column(&ok(&args));
    let mut plain = vec!["classify", "--state", p(&state), "--noprivacy"];
    plain.extend(files.iter().map(|f| p(f)));
    let reference = column(&ok(&plain));
    assert_eq!(private, reference);
    assert!(private.iter().all(|v| v == "spam" || v == "not-spam"));
    assert!(private.iter().any(|v| v == "not-spam"));
}

#[test]
fn topic_pipeline_and_tcp_serving() {
    let d = tempfile::tempdir().unwrap();
    let model = d.path().join("topics.model");
    let state = d.path().join("provider.state");
    let cm = d.path().join("client.model");
    ok(&[
        "train", "--synthetic", "topics", "--docs", "8", "--kind", "multinomial-nb", "-o",
        p(&model),
    ]);
    ok(&[
        "setup", "--ring-degree", "64", "--model", p(&model), "--state", p(&state),
        "--client-model", p(&cm),
    ]);
    let files = emails(d.path(), &held_out(corpus::synthetic_topics(20, 1, 99), 6));
    let names: Vec<&str> = files.iter().map(|f| p(f)).collect();

    let mut full = vec!["extract", "--state", p(&state), "--client-model", p(&cm)];
    full.extend(&names);
    let mut plain = vec!["extract", "--state", p(&state), "--noprivacy"];
    plain.extend(&names);
    assert_eq!(column(&ok(&full)), column(&ok(&plain)));
    let mut dec = full.clone();
    dec.extend(["--b-prime", "3"]);
    let mut dec_plain = plain.clone();
    dec_plain.extend(["--b-prime", "3"]);
    assert_eq!(column(&ok(&dec)), column(&ok(&dec_plain)));

    // provider over TCP: one setup session, then one topic session
    let mut server = Command::new(BIN)
        .args([
            "serve", "--state", p(&state), "--listen", "127.0.0.1:0", "--sessions", "2",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stderr.as_mut().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let cm2 = d.path().join("client2.model");
    ok(&["setup", "--ring-degree", "64", "--connect", &addr, "--client-model", p(&cm2)]);
    let out = ok(&["extract", "--connect", &addr, "--client-model", p(&cm2), names[0]]);
    assert!(out.contains("(sent to provider)"));
    let served = server.wait_with_output().unwrap();
    assert!(served.status.success());
    let log = String::from_utf8(served.stdout).unwrap();
    let want = column(&ok(&["extract", "--state", p(&state), "--noprivacy", names[0]]));
    let fields: Vec<&str> = log.trim().split('\t').collect();
    assert_eq!(fields[1], "topic-full", "{log}");
    assert_eq!(fields[2], want[0]);
}

#[test]
fn estimate_table_shape() {
    let out = ok(&[
        "estimate", "--set", "N=5", "--set", "B=2", "--set", "p_xpir=1024", "--set",
        "e_xpir=3", "--set", "c_xpir=5", "--system", "pretzel", "--task", "spam", "--phase",
        "setup",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "task\tphase\tsystem\tmetric\texact\tapprox");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("spam\tsetup\tpretzel\tprovider_cpu\t0.029296875\t"));
    let json = ok(&[
        "--json", "estimate", "--set", "L=10", "--set", "B=4", "--set", "h=1", "--set",
        "s=0", "--set", "sz_email=7", "--system", "nonprivate", "--phase", "per-email",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2 * 4);
    assert_eq!(v[0]["exact"], "10");
}

#[test]
fn search_index_and_query() {
    let d = tempfile::tempdir().unwrap();
    let mail = d.path().join("mail");
    std::fs::create_dir(&mail).unwrap();
    std::fs::write(mail.join("a.txt"), "budget review tomorrow").unwrap();
    std::fs::write(mail.join("b.txt"), "holiday photos").unwrap();
    std::fs::write(mail.join("c.txt"), "the budget for holiday").unwrap();
    let idx = d.path().join("idx.bin");
    let listing = ok(&["search", "index", "--dir", p(&mail), "-o", p(&idx)]);
    assert_eq!(listing.lines().count(), 4);
    assert_eq!(ok(&["search", "query", "--index", p(&idx), "budget"]), "doc_id\n0\n2\n");
    assert_eq!(
        ok(&["search", "query", "--index", p(&idx), "holiday budget"]),
        "doc_id\n2\n"
    );
    assert_eq!(ok(&["search", "query", "--index", p(&idx), "absent"]), "doc_id\n");
}
