use std::path::Path;
use std::process::{Command, Output};

use pentanodal_cli::certfile::CertificateFile;
use pentanodal_cli::config::Overrides;
use pentanodal_cli::exit;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pentanodal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> u8 {
    o.status.code().expect("exited normally") as u8
}

fn certify(out: &Path, jobs: &str) -> Output {
    run(&[
        "certify-all",
        "--method",
        "interval-ldlt",
        "--jobs",
        jobs,
        "--out",
        out.to_str().unwrap(),
    ])
}

fn without_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["header"]["timestamp"] = Value::Null;
    v
}

#[test]
fn certify_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = certify(dir.path(), "1");
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("certificates.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let file = CertificateFile::parse(&text).unwrap();
    assert_eq!(file.summary.passed, 20);
    assert!(file.summary.verdict);
    // Reading and writing back is byte-for-byte stable.
    assert_eq!(file.to_json().unwrap(), text.trim_end());

    let o = run(&["check-cert", path.to_str().unwrap()]);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn parallel_runs_match_serial_ones() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&certify(a.path(), "1")), exit::OK);
    assert_eq!(code(&certify(b.path(), "2")), exit::OK);
    assert_eq!(
        without_timestamp(&a.path().join("certificates.json")),
        without_timestamp(&b.path().join("certificates.json"))
    );
}

#[test]
fn tampering_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&certify(dir.path(), "1")), exit::OK);
    let path = dir.path().join("certificates.json");
    let original: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();

    let write = |v: &Value| {
        let p = dir.path().join("tampered.json");
        std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
        run(&["check-cert", p.to_str().unwrap()])
    };

    let mut v = original.clone();
    let signs = v["certificates"][4]["certificate"]["evidence"]["pivot_signs"]
        .as_str()
        .unwrap()
        .to_string();
    v["certificates"][4]["certificate"]["evidence"]["pivot_signs"] =
        Value::String(signs.replacen('+', "-", 1));
    let o = write(&v);
    assert_eq!(code(&o), exit::CHECK_FAILED);
    assert!(String::from_utf8_lossy(&o.stdout).contains("pivot_signs"));

    let mut v = original.clone();
    v["certificates"][0]["certificate"]["verdict"] = Value::String("false".into());
    assert_eq!(code(&write(&v)), exit::CHECK_FAILED);

    let mut v = original.clone();
    v["certificates"].as_array_mut().unwrap().pop();
    assert_eq!(code(&write(&v)), exit::CHECK_FAILED);

    // A timestamp change alone is not a disagreement.
    let mut v = original;
    v["header"]["timestamp"] = Value::from(1u64);
    assert_eq!(code(&write(&v)), exit::OK);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        code(&run(&["certify-all", "--threshold-v", "13", "--out", out])),
        exit::GATE_FAILED
    );
    assert_eq!(
        code(&run(&["certify-all", "--grid", "16", "--out", out])),
        exit::GATE_FAILED
    );
    assert_eq!(
        code(&run(&["certify-all", "--method", "guess", "--out", out])),
        exit::USAGE
    );
    assert_eq!(
        code(&run(&["certify-all", "--lambda", "-1", "--out", out])),
        exit::USAGE
    );
    assert_eq!(
        code(&run(&[
            "check-cert",
            dir.path().join("missing.json").to_str().unwrap()
        ])),
        exit::IO
    );
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"not\": 1}").unwrap();
    assert_eq!(
        code(&run(&["check-cert", junk.to_str().unwrap()])),
        exit::CHECK_FAILED
    );
    assert_eq!(code(&run(&["closedform"])), exit::OK);

    let o = run(&[
        "certify-all",
        "--method",
        "interval-ldlt",
        "--lambda",
        "20",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), exit::CERTIFICATION_FAILED);
    assert!(String::from_utf8_lossy(&o.stdout).contains("not certified: lower-"));
}

#[test]
fn render_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("pics/upper-0.svg");
    assert_eq!(
        code(&run(&["render", "upper-0", svg.to_str().unwrap()])),
        exit::OK
    );
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    assert_eq!(
        code(&run(&["render", "sideways-3", svg.to_str().unwrap()])),
        exit::USAGE
    );
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# coarse run\nmethod = interval-ldlt\njobs = 2\nthreshold-v = 13\n",
    )
    .unwrap();
    let merged = Overrides::load(&cfg).unwrap().merge(Overrides {
        v: Some("49/4".into()),
        ..Default::default()
    });
    let rc = merged.resolve().unwrap();
    assert_eq!(rc.jobs, 2);
    assert_eq!(rc.method.as_str(), "interval-ldlt");
    assert!(rc.check_gate().is_ok());
    // The file alone trips the gate; the flag overrides it.
    let out = dir.path().join("o");
    let base = [
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(
        code(&run(&[&base[..], &["certify-all"]].concat())),
        exit::GATE_FAILED
    );
    assert_eq!(
        code(&run(&[
            &base[..],
            &["certify-all", "--threshold-v", "49/4"]
        ]
        .concat())),
        exit::OK
    );
    assert!(Overrides::parse("colour = blue").is_err());
}
