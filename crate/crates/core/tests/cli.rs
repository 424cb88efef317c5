use std::path::Path;
use std::process::{Command, Output};

use skfb_core::{load_vol1, save_vol1, Volume};

fn skfb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skfb"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("skfb runs")
}

#[test]
fn phantom_slice_and_filter_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = skfb(
        &["phantom", "--size", "128", "--depth", "8", "-o", "vol.vol"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let vol = load_vol1(dir.path().join("vol.vol")).unwrap();
    assert_eq!(vol.dims(), &[8, 128, 128]);

    let out = skfb(
        &["slice", "-i", "vol.vol", "--index", "4", "-o", "s.pgm"],
        dir.path(),
    );
    assert!(out.status.success());
    let pgm = std::fs::read(dir.path().join("s.pgm")).unwrap();
    let header = b"P5\n128 128\n255\n";
    assert!(pgm.starts_with(header));
    assert_eq!(pgm.len() - header.len(), 16384);

    let out = skfb(
        &["slice", "-i", "vol.vol", "--index", "4", "-o", "s.vol"],
        dir.path(),
    );
    assert!(out.status.success());
    let s = load_vol1(dir.path().join("s.vol")).unwrap();

    let op = r#"{"op":"gaussian","sigma":1.0,"boundary":"reflect"}"#;
    let out = skfb(
        &["filter", "--op", op, "-i", "s.vol", "-o", "g.vol"],
        dir.path(),
    );
    assert!(out.status.success());
    let g = load_vol1(dir.path().join("g.vol")).unwrap();
    assert_eq!(g.dims(), s.dims());
    assert_ne!(g, s);

    std::fs::write(dir.path().join("op.json"), r#"{"op":"identity"}"#).unwrap();
    let out = skfb(
        &["filter", "--op", "@op.json", "-i", "s.vol", "-o", "i.vol"],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(load_vol1(dir.path().join("i.vol")).unwrap(), s);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    save_vol1(
        dir.path().join("v.vol"),
        &Volume::filled(vec![4, 4], 1.0).unwrap(),
    )
    .unwrap();

    let bad_op = skfb(
        &[
            "filter",
            "--op",
            r#"{"op":"median"}"#,
            "-i",
            "v.vol",
            "-o",
            "o.vol",
        ],
        dir.path(),
    );
    assert_eq!(bad_op.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_op.stderr).contains("config error"));

    let missing = skfb(
        &[
            "filter",
            "--op",
            r#"{"op":"identity"}"#,
            "-i",
            "nope.vol",
            "-o",
            "o.vol",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(1));

    let bad_kind = skfb(&["convergence", "--kind", "median"], dir.path());
    assert_eq!(bad_kind.status.code(), Some(2));

    let odd = skfb(&["mse-table", "--resolutions", "18"], dir.path());
    assert_eq!(odd.status.code(), Some(2));

    let usage = skfb(&["roi-table", "--no-such-flag"], dir.path());
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn tables_on_stdout_and_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = skfb(&["convergence", "--kind", "wavelet"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "kind,param,error,ratio");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("wavelet,1,"));

    let out = skfb(
        &[
            "roi-table",
            "--with-identity",
            "--filter-scope",
            "roi",
            "-o",
            "t.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 30);
    assert_eq!(rows[0]["roi"], "White Matter (WM)");
    assert_eq!(rows[4]["operator"], "identity");
    assert_eq!(rows[4]["ssi"], 1.0);
    assert_eq!(rows[4]["psnr"], "inf");
    assert_eq!(doc["provenance"]["filter_scope"], "roi");

    let out = skfb(&["roi-table", "--kantorovich", "true-operator"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(r#""kernel":"bspline3","form":"cell""#));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 25);
}
