use std::fs;
use std::path::{Path, PathBuf};

use tarmac::cli::run;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn arg(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn tarmac(args: &[&str]) -> i32 {
    run(std::iter::once("tarmac").chain(args.iter().copied()))
}

fn strip_header(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_is_reproducible_from_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = arg(&root().join("configs/laguardia.json"));
    let cache = arg(&dir.path().join("cache"));
    let outs: Vec<PathBuf> = (0..3).map(|i| dir.path().join(format!("sim{i}.csv"))).collect();
    for (out, seed) in outs.iter().zip(["7", "7", "8"]) {
        let code = tarmac(&[
            "simulate", "--airport", &cfg, "--cache-dir", &cache, "--controller", "threshold:6", "--steps", "30000",
            "--warmup", "1000", "--batches", "20", "--seed", seed, "--out", &arg(out),
        ]);
        assert_eq!(code, 0);
    }
    let read = |p: &Path| fs::read(p).unwrap();
    assert_eq!(read(&outs[0]), read(&outs[1]));
    assert_ne!(read(&outs[0]), read(&outs[2]));

    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("sim0.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let text = String::from_utf8(read(&outs[0])).unwrap();
    assert!(text.starts_with(&format!("# config_hash={}", manifest["config_hash"].as_str().unwrap())));
}

#[test]
fn sweep_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = arg(&root().join("configs/laguardia.json"));
    let cache = arg(&dir.path().join("cache"));
    let th = arg(&dir.path().join("th.csv"));
    let opt = arg(&dir.path().join("opt.csv"));
    let red = arg(&dir.path().join("red.csv"));
    let common = ["--airport", cfg.as_str(), "--cache-dir", cache.as_str()];
    let sweep = |kind: &str, grid: &str, out: &str| {
        let mut a = vec!["sweep"];
        a.extend(common);
        a.extend(["--kind", kind, "--grid", grid, "--out", out]);
        tarmac(&a)
    };
    assert_eq!(sweep("threshold", "0,1,2,3,4,5,6,7,8,9,10,11,12", &th), 0);
    assert_eq!(sweep("beta", "log:1:1000:13+lin:4.5:7.5:7", &opt), 0);
    assert_eq!(tarmac(&["compare", "--optimal", &opt, "--benchmark", &th, "--out", &red]), 0);

    let text = fs::read_to_string(&red).unwrap();
    let rows = strip_header(&text);
    assert_eq!(rows[0], "rate,pct_reduction");
    assert_eq!(rows.len(), 1 + tarmac::evaluator::REDUCTION_SAMPLES);
    let rates: Vec<f64> = rows[1..].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[0] < w[1]));
    let table = tarmac::evaluator::read_frontier_csv(fs::read(&opt).unwrap().as_slice()).unwrap();
    assert_eq!(table.points.len(), 20);
    assert_eq!(table.ramp_names, vec!["ramp1", "ramp2"]);
}

#[test]
fn calibrate_and_validate_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let fix = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let flights = arg(&fix.join("lga_flights.csv"));
    let counts = arg(&fix.join("lga_counts.csv"));
    let cal = dir.path().join("cal.json");
    assert_eq!(tarmac(&["calibrate", "--flights", &flights, "--counts", &counts, "--out", &arg(&cal)]), 0);
    let c: serde_json::Value = serde_json::from_slice(&fs::read(&cal).unwrap()).unwrap();
    let close = |key: &str, want: f64, tol: f64| (c[key].as_f64().unwrap() - want).abs() <= tol;
    assert!(close("m", 0.9084, 0.03), "{c}");
    assert!(close("c1", 0.514, 0.03), "{c}");
    assert!(close("c2", 0.0929, 0.03), "{c}");
    assert_eq!(c["ramps"][0]["path_length"], 9);

    let val = dir.path().join("val.csv");
    let code = tarmac(&[
        "validate", "--airport", &arg(&root().join("configs/laguardia.json")), "--cache-dir",
        &arg(&dir.path().join("cache")), "--flights", &flights, "--counts", &counts, "--out", &arg(&val),
    ]);
    assert_eq!(code, 0);
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("val.csv.manifest.json")).unwrap()).unwrap();
    let shift = m["details"]["shift"].as_i64().unwrap();
    assert!((2..=4).contains(&shift), "shift {shift}");
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = arg(&dir.path().join("x.csv"));
    assert_eq!(tarmac(&["sweep", "--kind", "beta"]), 2);
    assert_eq!(tarmac(&["frobnicate"]), 2);
    let missing = arg(&dir.path().join("missing.json"));
    assert_eq!(tarmac(&["build", "--airport", &missing, "--out", &out]), 1);
    let cfg = arg(&root().join("configs/laguardia.json"));
    assert_eq!(tarmac(&["sweep", "--airport", &cfg, "--kind", "beta", "--grid", "lin:2:1:3", "--out", &out]), 1);
}
