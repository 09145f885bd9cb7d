use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn kdecomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdecomp"))
        .args(args)
        .output()
        .expect("failed to launch kdecomp")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

const TOY: &str = "value,paper,cat\n0.0,P1,a\n2.0,P2,b\n";

#[test]
fn density_grid_riemann_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", TOY);
    let out = kdecomp(&[
        "density",
        "--input",
        &input,
        "--kernel",
        "normal",
        "--bandwidth",
        "fixed=1",
        "--grid",
        "-5:10:16",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,pdf,cdf");
    assert_eq!(rows.len(), 17, "header + 16 grid rows");
    let parsed: Vec<(f64, f64, f64)> = rows[1..]
        .iter()
        .map(|r| {
            let c: Vec<f64> = r.split(',').map(|v| v.parse().unwrap()).collect();
            (c[0], c[1], c[2])
        })
        .collect();
    let dx = 1.0;
    let riemann: f64 = parsed.iter().map(|(_, pdf, _)| pdf * dx).sum();
    let mass = parsed.last().unwrap().2 - parsed.first().unwrap().2;
    assert!((riemann - mass).abs() < 0.05, "riemann {riemann} vs cdf mass {mass}");
}

#[test]
fn density_single_point_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", TOY);
    let out = kdecomp(&[
        "density", "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1", "--grid",
        "3:3:1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("3,"));
}

#[test]
fn weibull_rejects_negative_observation() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "neg.csv", "value,paper\n-3.0,P1\n5.0,P2\n");
    let out = kdecomp(&[
        "density", "--input", &input, "--kernel", "weibull", "--bandwidth", "fixed=1", "--grid",
        "0:10:5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("observation 0") || err.contains("-3"), "{err}");
}

#[test]
fn decompose_components_sum_to_composite() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "toy.csv",
        "value,paper,cat\n0.0,P1,a\n1.0,P2,a\n4.0,P3,b\n6.0,P4,b\n",
    );
    let common = [
        "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1", "--grid", "-3:9:25",
        "--label-column", "cat=cat",
    ];
    let composite = kdecomp(&[&["density"], &common[..]].concat());
    assert!(composite.status.success());
    let long = kdecomp(&[&["decompose"], &common[..], &["--by", "cat"]].concat());
    assert!(long.status.success(), "{}", String::from_utf8_lossy(&long.stderr));

    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for line in stdout(&long).lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        *sums.entry(cells[1].to_string()).or_insert(0.0) += cells[2].parse::<f64>().unwrap();
    }
    for line in stdout(&composite).lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let pdf: f64 = cells[1].parse().unwrap();
        let summed = sums[cells[0]];
        assert!((summed - pdf).abs() < 1e-9, "x={}: {summed} vs {pdf}", cells[0]);
    }

    // weights report on stderr
    let err = String::from_utf8_lossy(&long.stderr);
    assert!(err.contains("component,weight"), "{err}");
    assert!(err.contains("a,0.5"), "{err}");
}

#[test]
fn decompose_single_category_equals_composite() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", "value,paper,cat\n1.0,P1,only\n3.0,P2,only\n");
    let out = kdecomp(&[
        "decompose", "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1",
        "--grid", "-2:6:9", "--label-column", "cat=cat", "--by", "cat",
    ]);
    assert!(out.status.success());
    let lines: Vec<&str> = stdout(&out).lines().skip(1).map(str::to_string).collect::<Vec<_>>()
        .leak().iter().map(String::as_str).collect();
    assert_eq!(lines.len(), 9);
    assert!(lines.iter().all(|l| l.starts_with("only,")));
}

#[test]
fn decompose_missing_dimension_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", TOY);
    let out = kdecomp(&[
        "decompose", "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1",
        "--grid", "-2:6:9", "--by", "missing",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn test_proportional_toy_data() {
    let dir = tempfile::tempdir().unwrap();
    // both categories hold identical values, so the components coincide
    let input = write_file(
        dir.path(),
        "toy.csv",
        "value,paper,cat\n1.0,P1,a\n5.0,P2,a\n1.0,P3,b\n5.0,P4,b\n",
    );
    let out = kdecomp(&[
        "test", "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1",
        "--label-column", "cat=cat", "--by", "cat", "--quantiles", "5", "--effective-n", "auto",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let stat: f64 = extract(&text, "statistic");
    let p: f64 = extract(&text, "p_value");
    assert!(stat < 1e-6, "statistic {stat}");
    assert!(p > 0.999, "p {p}");
}

fn extract(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("missing {key} in report:\n{report}"))
        .parse()
        .unwrap()
}

#[test]
fn test_share_matrix_mode_matches_published_statistics() {
    let period = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/table_period.csv");
    let out = kdecomp(&[
        "test",
        "--share-matrix",
        period.to_str().unwrap(),
        "--effective-n",
        "185",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let stat = extract(&text, "statistic");
    let dof = extract(&text, "dof");
    let p = extract(&text, "p_value");
    assert!((stat - 4.14).abs() < 0.15, "statistic {stat}");
    assert_eq!(dof, 16.0);
    assert!((p - 0.999).abs() < 0.002, "p {p}");

    let author = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/table_author.csv");
    let out2 = kdecomp(&[
        "test",
        "--share-matrix",
        author.to_str().unwrap(),
        "--effective-n",
        "185",
    ]);
    assert!(out2.status.success());
    let text2 = stdout(&out2);
    assert_eq!(extract(&text2, "dof"), 16.0);
    let ratio = extract(&text2, "statistic") / stat;
    assert!((ratio / (19.2 / 4.14) - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn test_requires_two_components() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", "value,paper,cat\n1.0,P1,only\n2.0,P2,only\n");
    let out = kdecomp(&[
        "test", "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1",
        "--label-column", "cat=cat", "--by", "cat",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("two components"), "{err}");
}

#[test]
fn export_svg_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", TOY);
    let curve = dir.path().join("curve.csv");
    let out = kdecomp(&[
        "density", "--input", &input, "--kernel", "normal", "--bandwidth", "fixed=1",
        "--grid", "-4:6:40", "--output", curve.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let svg1 = dir.path().join("a.svg");
    let svg2 = dir.path().join("b.svg");
    for svg in [&svg1, &svg2] {
        let out = kdecomp(&[
            "export-svg", "--input", curve.to_str().unwrap(), "--output", svg.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&svg1).unwrap();
    let b = std::fs::read(&svg2).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("</svg>"));
}

#[test]
fn export_svg_empty_curve_axes_only() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_file(dir.path(), "empty.csv", "x,pdf,cdf\n");
    let svg = dir.path().join("empty.svg");
    let out = kdecomp(&["export-svg", "--input", &curve, "--output", svg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<line"), "axes expected");
    assert!(!text.contains("<path"), "no curve paths for empty input");
}

#[test]
fn export_svg_component_area() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_file(
        dir.path(),
        "long.csv",
        "component,x,pdf\na,0,0.1\na,1,0.3\na,2,0.1\n",
    );
    let svg = dir.path().join("one.svg");
    let out = kdecomp(&["export-svg", "--input", &curve, "--output", svg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.matches("fill-opacity").count() >= 1, "one filled area expected");
}

#[test]
fn export_svg_malformed_curve_fails() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_file(dir.path(), "bad.csv", "x,pdf,cdf\n1,notanumber,0\n");
    let svg = dir.path().join("bad.svg");
    let out = kdecomp(&["export-svg", "--input", &curve, "--output", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_error_exits_2() {
    let out = kdecomp(&["density", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "toy.csv", TOY);
    let config = write_file(
        dir.path(),
        "run.conf",
        &format!("input={input}\nkernel=normal\nbandwidth=fixed=1\n"),
    );
    let out = kdecomp(&["density", "--config", &config, "--grid", "0:2:3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let baseline = stdout(&out);

    // flag overrides the config kernel; gumbel is right-skewed so the
    // curve must differ
    let out2 = kdecomp(&[
        "density", "--config", &config, "--kernel", "gumbel", "--grid", "0:2:3",
    ]);
    assert!(out2.status.success());
    assert_ne!(baseline, stdout(&out2));
}
