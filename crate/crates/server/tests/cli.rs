use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sample(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../sample").join(file)
}

fn cogkit(kb: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogkit"))
        .arg("--kb")
        .arg(kb)
        .args(args)
        .env_remove("COGKIT_KB")
        .env_remove("COGKIT_BIND")
        .output()
        .unwrap()
}

fn json_ok(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn built(dir: &Path) -> PathBuf {
    let kb = dir.join("kb.json");
    let na = dir.join("na.tsv");
    let manifest = sample("manifest.json");
    let out = cogkit(
        &kb,
        &["build", "--manifest", manifest.to_str().unwrap(), "--needs-annotation", na.to_str().unwrap()],
    );
    let report = json_ok(&out);
    assert_eq!(report["needsAnnotation"]["count"], 3);
    assert!(na.exists());
    kb
}

#[test]
fn build_then_search() {
    let dir = tempfile::tempdir().unwrap();
    let kb = built(dir.path());
    let hits = json_ok(&cogkit(&kb, &["search", "buy"]));
    assert_eq!(hits[0]["node"], "sf:Commerce_buy");
    assert_eq!(hits[0]["score"], 0.9);
    assert_eq!(hits[0]["matchType"], "lexicalUnit");

    let limited = json_ok(&cogkit(&kb, &["search", "buy", "--limit", "2"]));
    assert_eq!(limited.as_array().unwrap()[..], hits.as_array().unwrap()[..2]);
}

#[test]
fn search_output_equals_library_search() {
    let dir = tempfile::tempdir().unwrap();
    let kb = built(dir.path());
    let store = cogkit::pipeline::build(&sample("manifest.json"), Some(&dir.path().join("na2.tsv")))
        .unwrap()
        .store;
    for q in ["Hamlet", "bookstor", "go to"] {
        let cli = json_ok(&cogkit(&kb, &["search", q, "--min-sim", "0.3"]));
        let lib = cogkit::query::search(&store, q, 20, 0.3).unwrap();
        assert_eq!(cli, serde_json::to_value(lib).unwrap(), "{q}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let out = cogkit(&kb, &["search"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(cogkit(&kb, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(cogkit(&kb, &["pattern"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cogkit(&dir.path().join("absent.json"), &["stats"]);
    assert_eq!(missing.status.code(), Some(1));
    let body: Value = serde_json::from_slice(&missing.stdout).unwrap();
    assert!(body["error"]["code"].is_string());

    let kb = built(dir.path());
    let bad = cogkit(&kb, &["pattern", "SELECT ?y\n?x rdf:type sf:Motion\n"]);
    assert_eq!(bad.status.code(), Some(1));
    let body: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(body["error"]["code"], "UnboundProjection");

    let bad = cogkit(&kb, &["search", "buy", "--min-sim", "2"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn stats_match_sample_counts() {
    let dir = tempfile::tempdir().unwrap();
    let kb = built(dir.path());
    let stats = json_ok(&cogkit(&kb, &["stats"]));
    let nodes = &stats["nodes"];
    for (kind, n) in [("sf", 7), ("fe", 31), ("fer", 13), ("fi", 17), ("en", 15), ("tx", 40)] {
        assert_eq!(nodes[kind], n, "{kind}");
    }
    assert_eq!(stats["edges"]["concretizes"], 45);
    assert_eq!(stats["edgeTotal"], 60);
    assert_eq!(stats["retiredEntities"], 3);
    assert_eq!(stats["triples"], 680);
}

#[test]
fn staged_commands_match_build() {
    let dir = tempfile::tempdir().unwrap();
    let reference = json_ok(&cogkit(&built(dir.path()), &["stats"]));
    let kb = dir.path().join("staged.json");
    let na = dir.path().join("staged_na.tsv");
    let s = |f: &str| sample(f).to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["ingest-frames".into(), s("frames.tsv")],
        vec!["ingest-taxonomy".into(), s("taxonomy.tsv")],
        vec![
            "ingest-assertions".into(),
            s("assertions.tsv"),
            "--needs-annotation".into(),
            na.to_str().unwrap().into(),
        ],
        vec!["import-annotations".into(), s("annotations.tsv")],
        vec!["ingest-world".into(), s("world.tsv"), "--rules".into(), s("rules.tsv")],
        vec!["merge-entities".into(), s("sameas.tsv")],
        vec!["link".into()],
        vec!["freeze".into()],
    ];
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        json_ok(&cogkit(&kb, &args));
    }
    assert_eq!(json_ok(&cogkit(&kb, &["stats"])), reference);
    assert_eq!(std::fs::read_to_string(&na).unwrap().lines().count(), 4);
}

#[test]
fn rdf_export_serves_as_read_only_kb() {
    let dir = tempfile::tempdir().unwrap();
    let kb = built(dir.path());
    let nt = dir.path().join("kb.nt");
    let stats = json_ok(&cogkit(&kb, &["export-rdf", "--out", nt.to_str().unwrap()]));
    assert_eq!(stats["tripleCount"], 680);
    assert_eq!(stats["bytes"].as_u64(), Some(std::fs::metadata(&nt).unwrap().len()));

    assert_eq!(json_ok(&cogkit(&nt, &["stats"]))["triples"], 680);
    assert_eq!(
        json_ok(&cogkit(&nt, &["search", "Hamlet"])),
        json_ok(&cogkit(&kb, &["search", "Hamlet"]))
    );
    assert_eq!(json_ok(&cogkit(&nt, &["catalog"])), json_ok(&cogkit(&kb, &["catalog"])));
    assert_eq!(cogkit(&nt, &["link"]).status.code(), Some(1));

    let reimported = dir.path().join("re.json");
    json_ok(&cogkit(&reimported, &["import-rdf", nt.to_str().unwrap()]));
    let again = dir.path().join("again.nt");
    json_ok(&cogkit(&reimported, &["export-rdf", "--out", again.to_str().unwrap()]));
    assert_eq!(std::fs::read(&nt).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn serve_reports_bind_errors() {
    let dir = tempfile::tempdir().unwrap();
    let kb = built(dir.path());
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let out = cogkit(&kb, &["serve", "--bind", &addr]);
    assert_eq!(out.status.code(), Some(1));
    let body: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["error"]["code"], "BindError");
}

#[test]
fn serve_answers_over_tcp() {
    use std::io::{BufRead, BufReader, Read, Write};
    let dir = tempfile::tempdir().unwrap();
    let kb = built(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_cogkit"))
        .arg("--kb")
        .arg(&kb)
        .arg("serve")
        .env("COGKIT_BIND", "127.0.0.1:0")
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = serde_json::from_str::<Value>(&line).unwrap()["listening"]
        .as_str()
        .unwrap()
        .to_string();
    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /api/stats HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.to_ascii_lowercase().contains("x-api-version: 1"));
    let body: Value = serde_json::from_str(response.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["triples"], 680);
}
