use std::path::Path;
use std::process::{Command, Output};

use serde::Deserialize;

const FIXTURE: &str = "tests/fixtures/brunel_2e5_seed1_0.1s.raster";

fn snn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snn")).args(args).output().expect("spawn snn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[derive(Debug, Deserialize)]
struct BenchRow {
    model: String,
    neurons: usize,
    synapses: usize,
    plasticity: String,
    delivery: String,
    chunk_size: usize,
    history_bits: u32,
    dt_ms: f64,
    bio_seconds: f64,
    wall_ms: f64,
    setup_ms: f64,
    total_spikes: u64,
    seed: u64,
    workers: usize,
}

#[derive(Debug, Deserialize)]
struct SetupRow {
    synapses: usize,
    setup_ms: f64,
    graph_hash: String,
}

fn rows<T: serde::de::DeserializeOwned>(text: &str) -> Vec<T> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().map(|r| r.unwrap()).collect()
}

#[test]
fn bench_emits_one_row_per_run() {
    let o = snn(&["bench", "--model", "brunel", "--synapses", "1e5", "--plasticity", "event", "--delivery", "sliced", "--duration", "0.02"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert_eq!(
        text.lines().next().unwrap(),
        "model,neurons,synapses,plasticity,delivery,chunk_size,history_bits,dt_ms,bio_seconds,wall_ms,setup_ms,total_spikes,seed,workers"
    );
    let r: Vec<BenchRow> = rows(&text);
    assert_eq!(r.len(), 1);
    let r = &r[0];
    assert_eq!((r.model.as_str(), r.plasticity.as_str(), r.delivery.as_str()), ("brunel", "event", "sliced"));
    assert_eq!((r.chunk_size, r.history_bits, r.seed, r.workers), (1024, 64, 1, 1));
    assert!((r.synapses as f64 / 1e5 - 1.0).abs() < 0.05 && r.neurons > 0);
    assert!((r.dt_ms - 0.1).abs() < 1e-12 && (r.bio_seconds - 0.02).abs() < 1e-9);
    assert!(r.wall_ms > 0.0 && r.setup_ms > 0.0 && r.total_spikes > 0);
}

#[test]
fn size_sweep_wall_time_grows() {
    let o = snn(&["bench", "--model", "brunel", "--synapses", "1e4,1e5,1e6", "--duration", "0.05"]);
    assert!(o.status.success(), "{o:?}");
    let r: Vec<BenchRow> = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    assert!(r.windows(2).all(|w| w[0].wall_ms <= w[1].wall_ms), "{r:?}");
}

#[test]
fn spike_totals_repeat_exactly() {
    let o = snn(&[
        "bench", "--model", "brunel+", "--synapses", "2e5", "--plasticity", "naive,lazy,event",
        "--delivery", "naive,sliced", "--repeats", "2", "--duration", "0.05",
    ]);
    assert!(o.status.success(), "{o:?}");
    let r: Vec<BenchRow> = rows(&stdout(&o));
    assert_eq!(r.len(), 12);
    for pair in r.chunks(2) {
        assert_eq!(pair[0].total_spikes, pair[1].total_spikes, "{pair:?}");
    }
    // Delivery order never changes the result.
    for plast in r.chunks(4) {
        assert_eq!(plast[0].total_spikes, plast[2].total_spikes);
    }
}

#[test]
fn bench_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = snn(&["bench", "--model", "vogels", "--synapses", "5e4", "--duration", "0.01", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let r: Vec<BenchRow> = rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(r[0].model, "vogels");
}

#[test]
fn setup_bench_hash_is_stable() {
    let o = snn(&["setup-bench", "--model", "vogels", "--synapses", "1e5", "--repeats", "3", "--seed", "9"]);
    assert!(o.status.success(), "{o:?}");
    let r: Vec<SetupRow> = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    assert!(r.iter().all(|x| x.graph_hash == r[0].graph_hash && x.setup_ms > 0.0 && x.synapses > 0));
    let other = snn(&["setup-bench", "--model", "vogels", "--synapses", "1e5", "--seed", "10"]);
    let r2: Vec<SetupRow> = rows(&stdout(&other));
    assert_ne!(r2[0].graph_hash, r[0].graph_hash);
}

fn run_raster(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let mut args = vec!["run", "--model", "brunel", "--synapses", "2e5", "--seed", "1", "--record-spikes", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = snn(&args);
    assert!(o.status.success(), "{o:?}");
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn zero_duration_gives_empty_raster() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_raster(dir.path(), "r", &["--duration", "0"]), "");
}

#[test]
fn fixed_seed_rasters_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_raster(dir.path(), "a", &["--duration", "0.05"]);
    let b = run_raster(dir.path(), "b", &["--duration", "0.05"]);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn brunel_matches_reference_fixture() {
    let reference = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join(FIXTURE)).unwrap();
    let ref_count = reference.lines().count();
    let dir = tempfile::tempdir().unwrap();
    let got = run_raster(dir.path(), "r", &["--duration", "0.1"]);
    let count = got.lines().count();
    assert!(
        count * 2 >= ref_count && count <= ref_count * 2,
        "{count} spikes vs reference {ref_count}"
    );
    // Same seed and model: the default strategies reproduce the naive run.
    assert_eq!(got, reference);
}

#[test]
fn unwritable_raster_path_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("r.txt");
    let o = snn(&["run", "--duration", "0.01", "--record-spikes", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("error:") && !err.contains("panicked"), "{err}");
    let o = snn(&["run", "--duration", "0.01", "--record-spikes", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["bench", "--plasticity", "sometimes"][..],
        &["bench", "--history", "48"],
        &["bench", "--slice-width", "100"],
        &["bench", "--synapses", "many"],
        &["run", "--duration", "-1"],
        &["verify", "--module", "everything"],
        &["frobnicate"],
    ] {
        assert_eq!(snn(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_overrides_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    std::fs::write(&cfg, "# silence the drive\nbrunel.nu_ext_over_thresh = 0\n").unwrap();
    let o = snn(&["run", "--model", "brunel", "--synapses", "1e5", "--duration", "0.05", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("total_spikes=0"), "{}", stdout(&o));
    std::fs::write(&cfg, "brunel.no_such_key = 1\n").unwrap();
    assert_eq!(snn(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_module_filter_and_fault_injection() {
    let o = snn(&["verify", "--module", "history"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("[PASS] history/") && !text.contains("pivots/"), "{text}");

    let o = snn(&["verify", "--module", "pivots"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| !l.starts_with('[') || l.contains("pivots/")));

    let o = snn(&["verify", "--module", "plasticity", "--inject-fault", "off-by-one-window"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("[FAIL] plasticity/exact equivalence") && text.contains("seed 1"), "{text}");
}
