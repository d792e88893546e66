//! End-to-end checks of the `dxml` binary: subcommands, exit codes, config
//! file handling, and a socket-based worker/master run.

use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command, Stdio};

use dxml::data::write_xmlc_file;
use dxml::synth::{clustered_dataset, SynthConfig};

fn dxml() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dxml"))
}

fn write_fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let (train, test) = clustered_dataset(&SynthConfig {
        groups: 4,
        train_per_group: 30,
        test_per_group: 8,
        d_x: 32,
        d_y: 16,
        feature_support: 5,
        labels_per_group: 2,
        noise: 0.3,
        seed: 5,
    })
    .unwrap();
    let train_path = dir.join("train.txt");
    let test_path = dir.join("test.txt");
    write_xmlc_file(&train, &train_path).unwrap();
    write_xmlc_file(&test, &test_path).unwrap();
    (train_path, test_path)
}

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, test_path) = write_fixture(dir.path());
    let model_path = dir.path().join("model.bin");

    let output = dxml()
        .args(["train", "--data"])
        .arg(&train_path)
        .arg("--out")
        .arg(&model_path)
        .args(["--trees", "6", "--k", "3", "--nleaf", "5", "--seed", "9"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{:?}", output);
    assert!(model_path.exists());

    let output = dxml()
        .args(["eval", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&test_path)
        .args(["--at", "1,3", "--json"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{:?}", output);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("P@1"), "missing table: {}", stdout);
    let json_line = stdout.lines().last().unwrap();
    let value: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(value["type"], "eval");
    assert_eq!(value["n_test"], 32);

    let output = dxml()
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&test_path)
        .args(["--topk", "3"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 32);
    for line in stdout.lines() {
        assert_eq!(line.split_whitespace().count(), 3);
    }
}

#[test]
fn bench_reports_a_timing_row() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, test_path) = write_fixture(dir.path());
    let output = dxml()
        .args(["bench", "--data"])
        .arg(&train_path)
        .arg("--test")
        .arg(&test_path)
        .args(["--trees", "4", "--k", "3", "--nleaf", "5"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{:?}", output);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("bench row:"), "{}", stdout);
    assert!(stdout.contains("ms/sample"), "{}", stdout);
    assert!(stdout.contains("model"), "{}", stdout);
}

#[test]
fn missing_data_file_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let output = dxml()
        .args(["train", "--data", "/no/such/file.txt", "--out"])
        .arg(dir.path().join("model.bin"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("/no/such/file.txt"), "{}", stderr);
}

#[test]
fn unknown_flag_exits_1() {
    let output = dxml().args(["train", "--no-such-flag"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let output = dxml().arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    for subcommand in ["train", "predict", "eval", "bench", "worker", "master"] {
        assert!(stdout.contains(subcommand), "{}", stdout);
    }
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, _) = write_fixture(dir.path());
    let config_path = dir.path().join("dxml.conf");
    fs::write(&config_path, "trees = 3\nk = 3\nnleaf = 5\nseed = 4\n").unwrap();
    let output = dxml()
        .args(["train", "--data"])
        .arg(&train_path)
        .arg("--out")
        .arg(dir.path().join("model.bin"))
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{:?}", output);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("trained 3 trees"), "{}", stdout);
}

#[test]
fn dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, _) = write_fixture(dir.path());
    let model_path = dir.path().join("model.bin");
    assert!(dxml()
        .args(["train", "--data"])
        .arg(&train_path)
        .arg("--out")
        .arg(&model_path)
        .args(["--trees", "2", "--k", "2"])
        .status()
        .unwrap()
        .success());

    let other = dir.path().join("other.txt");
    fs::write(&other, "1 99 16\n0 0:1\n").unwrap();
    let output = dxml()
        .args(["eval", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&other)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

fn wait_success(child: Child, what: &str) -> String {
    let output = child.wait_with_output().unwrap();
    assert!(
        output.status.success(),
        "{} failed: status {:?}\nstdout: {}\nstderr: {}",
        what,
        output.status,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn worker_master_gather_over_sockets_matches_local_train() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, _) = write_fixture(dir.path());

    // Single-process reference with the same configuration.
    let reference_path = dir.path().join("reference.bin");
    let train_flags = ["--trees", "6", "--k", "3", "--nleaf", "5", "--seed", "21"];
    assert!(dxml()
        .args(["train", "--data"])
        .arg(&train_path)
        .arg("--out")
        .arg(&reference_path)
        .args(train_flags)
        .status()
        .unwrap()
        .success());

    let port = free_port();
    let roster_path = dir.path().join("roster.txt");
    fs::write(
        &roster_path,
        format!("0 127.0.0.1:{}\n1 127.0.0.1:0\n2 127.0.0.1:0\n", port),
    )
    .unwrap();

    let gathered_path = dir.path().join("gathered.bin");
    let master = dxml()
        .args(["master", "--roster"])
        .arg(&roster_path)
        .args(["--workers", "2", "--out"])
        .arg(&gathered_path)
        .args(train_flags)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();

    let workers: Vec<Child> = [1, 2]
        .iter()
        .map(|rank| {
            dxml()
                .args(["worker", "--rank", &rank.to_string(), "--roster"])
                .arg(&roster_path)
                .args(["--workers", "2", "--data"])
                .arg(&train_path)
                .args(train_flags)
                .stdout(Stdio::piped())
                .stderr(Stdio::piped())
                .spawn()
                .unwrap()
        })
        .collect();

    for (i, worker) in workers.into_iter().enumerate() {
        wait_success(worker, &format!("worker {}", i + 1));
    }
    let master_stdout = wait_success(master, "master");
    assert!(master_stdout.contains("messages:"), "{}", master_stdout);
    assert!(
        master_stdout.contains("assembled model written"),
        "{}",
        master_stdout
    );

    let reference = fs::read(&reference_path).unwrap();
    let gathered = fs::read(&gathered_path).unwrap();
    assert_eq!(reference, gathered, "gathered model must be byte-identical");
}
