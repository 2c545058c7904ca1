use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dynsamp_core::io::{read_samples, write_samples};
use dynsamp_core::{observe, ReportSummary, SampleData, SampleMask, Tensor3};

fn dynsamp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynsamp"))
        .args(args)
        .current_dir(dir)
        .env_remove("DYNSAMP_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: [&str; 6] = ["--m", "6", "--p", "4", "--n", "3"];

fn simulate_small(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate"];
    args.extend(SMALL);
    args.extend(extra);
    let out = dynsamp(dir, &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn simulate_writes_the_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dynsamp(tmp.path(), &["simulate", "--out", "d"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let d = tmp.path().join("d");
    for name in [
        "A.t3",
        "F.t3",
        "mask.t3",
        "mask.json",
        "meta.json",
        "manifest.json",
    ] {
        assert!(d.join(name).exists(), "{name}");
    }
    for t in 0..5 {
        assert!(d.join(format!("obs_{t}.t3")).exists());
    }
    assert!(!d.join("obs_5.t3").exists());
    let samples = read_samples(&d).unwrap();
    assert_eq!(samples.mask().dims().as_array(), [20, 15, 5]);
    assert_eq!(samples.horizon(), 5);
    let provenance = fs::read_to_string(d.join("mask.json")).unwrap();
    assert!(
        provenance.contains("\"bernoulli\"") && provenance.contains("0.4"),
        "{provenance}"
    );
    let manifest = fs::read_to_string(d.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"simulate\""), "{manifest}");
}

#[test]
fn reconstruct_reports_error_against_truth() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path(), &["--alpha", "0.6", "--out", "d"]);
    let out = dynsamp(tmp.path(), &["reconstruct", "--data", "d", "--out", "r"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: ReportSummary =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/report.json")).unwrap())
            .unwrap();
    assert!(report.rel_error.unwrap() < 1e-9, "{report:?}");
    assert_eq!(report.kappa.len(), 4);
    assert!(report.wall_ms.is_none());
    assert!(tmp.path().join("r/estimate.t3").exists());

    let out = dynsamp(
        tmp.path(),
        &["reconstruct", "--data", "d", "--out", "r2", "--timing"],
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(tmp.path().join("r2/report.json")).unwrap();
    assert!(text.contains("wall_ms"));
}

#[test]
fn empty_column_exits_two_unless_partial() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path(), &["--out", "d"]);
    let d = tmp.path().join("d");
    // Replace the sampling set by a lattice that never touches column 2.
    let samples = read_samples(&d).unwrap();
    let dims = samples.mask().dims();
    let lattice = SampleMask::lattice(dims, &[0, 1, 2, 3, 4, 5], &[0, 1, 3]).unwrap();
    let truth: Vec<Tensor3> = (0..samples.horizon())
        .map(|t| dynsamp_core::io::read_t3(&d.join(format!("obs_{t}.t3"))).unwrap())
        .collect();
    let relabelled: SampleData = observe(&truth, &lattice, 0.0, 1).unwrap();
    write_samples(&d, &relabelled).unwrap();

    let out = dynsamp(tmp.path(), &["reconstruct", "--data", "d", "--out", "r"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("[2]"), "{}", stderr(&out));

    let out = dynsamp(
        tmp.path(),
        &[
            "reconstruct",
            "--data",
            "d",
            "--out",
            "r",
            "--allow-partial",
            "--project-real",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: ReportSummary =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/report.json")).unwrap())
            .unwrap();
    assert_eq!(report.failed_columns, vec![2]);
    assert_eq!(report.kappa[2], None);
}

#[test]
fn config_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        "{\n  \"kind\": \"pointwise-gap\",\n  \"alpah\": 0.3\n}\n",
    )
    .unwrap();
    let out = dynsamp(tmp.path(), &["experiment", "--config", "bad.json"]);
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("bad.json:3:") && stderr(&out).contains("alpah"),
        "{}",
        stderr(&out)
    );

    for args in [
        &["experiment", "--kind", "nonsense"][..],
        &["experiment", "--m", "4"][..],
        &["simulate", "--alpha", "2"][..],
        &["simulate", "--T", "x"][..],
        &["simulate", "--unknown-flag"][..],
    ] {
        let out = dynsamp(tmp.path(), args);
        assert_eq!(code(&out), 3, "{args:?}: {}", stderr(&out));
    }

    let out = Command::new(env!("CARGO_BIN_EXE_dynsamp"))
        .args(["simulate", "--out", "x"])
        .current_dir(tmp.path())
        .env("DYNSAMP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn io_errors_exit_four() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dynsamp(tmp.path(), &["reconstruct", "--data", "missing"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let out = dynsamp(tmp.path(), &["experiment", "--config", "missing.json"]);
    assert_eq!(code(&out), 4);

    simulate_small(tmp.path(), &["--out", "d"]);
    fs::write(
        tmp.path().join("d/obs_1.t3"),
        "T3 1 6 4 3 real\n1.0\nnot-a-number\n",
    )
    .unwrap();
    let out = dynsamp(tmp.path(), &["reconstruct", "--data", "d"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("obs_1.t3:3:"), "{}", stderr(&out));

    fs::write(tmp.path().join("r.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(code(&dynsamp(tmp.path(), &["plot", "r.csv"])), 4);
}

#[test]
fn config_file_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"kind": "condition-vs-T", "m": 6, "p": 4, "n": 3, "T_grid": [1, 2, 3, 4], "seed": 3, "out": "from-config"}"#,
    )
    .unwrap();
    let out = dynsamp(
        tmp.path(),
        &["experiment", "--config", "c.json", "--seed", "5"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let dir = tmp.path().join("from-config");
    let csv = fs::read_to_string(dir.join("condition-vs-T.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("T,K\n1,"));
    let manifest = fs::read_to_string(dir.join("manifest.json")).unwrap();
    assert!(
        manifest.contains("\"seed\": 5") && manifest.contains("\"m\": 6"),
        "{manifest}"
    );
    assert!(dir.join("condition-vs-T.svg").exists());
}

#[test]
fn experiment_csv_layouts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &str, usize); 6] = [
        (
            "recovery-vs-alpha",
            &["--alpha", "0.5,1", "--trials", "2"],
            "alpha,mean_rel_err,std_rel_err",
            2,
        ),
        ("pointwise-gap", &[], "index,i,j,k,abs_gap", 72),
        (
            "optimal-T",
            &["--T", "1..3", "--sigma", "0,0.01", "--trials", "1"],
            "T,sigma,mean_rel_err",
            6,
        ),
        ("condition-vs-T", &["--T", "2,4"], "T,K", 2),
        ("conjecture-dim2", &[], "excluded_j,rel_err", 4),
        ("slab-dim1-dim3", &[], "mode,excluded_index,rel_err", 9),
    ];
    for (kind, extra, header, rows) in cases {
        let mut args = vec!["experiment", "--kind", kind, "--out", kind];
        args.extend(SMALL);
        args.extend(extra);
        let out = dynsamp(tmp.path(), &args);
        assert_eq!(code(&out), 0, "{kind}: {}", stderr(&out));
        let csv = fs::read_to_string(tmp.path().join(kind).join(format!("{kind}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some(header), "{kind}");
        assert_eq!(csv.lines().count(), rows + 1, "{kind}");

        let svg_path = tmp.path().join(kind).join(format!("{kind}.svg"));
        let original = fs::read(&svg_path).unwrap();
        let csv_arg = format!("{kind}/{kind}.csv");
        let out = dynsamp(tmp.path(), &["plot", &csv_arg, "--out", "again.svg"]);
        assert_eq!(code(&out), 0);
        assert_eq!(
            fs::read(tmp.path().join("again.svg")).unwrap(),
            original,
            "{kind}"
        );
    }
    let slab = fs::read_to_string(tmp.path().join("slab-dim1-dim3/slab-dim1-dim3.csv")).unwrap();
    assert!(slab.contains("\n1,0,") && slab.contains("\n3,2,"), "{slab}");
}
