//! End-to-end tests of the `ffp` binary: file formats, exit codes,
//! pipe behavior and the streaming-memory contract.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn ffp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ffp"))
}

fn run(args: &[&str]) -> Output {
    ffp().args(args).output().expect("spawn ffp")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

fn tmpdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn simulate_ar_change_point_rows() {
    let dir = tmpdir();
    let out = dir.path().join("ar.csv");
    let res = run(&[
        "simulate",
        "ar",
        "--segments",
        "1:1.46,-0.81,1;10000:-1.46,-0.81,1",
        "--T",
        "20000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&res);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x");
    assert_eq!(lines.len(), 20_001);
}

#[test]
fn simulate_sine_has_bounded_g_prime() {
    let dir = tmpdir();
    let out = dir.path().join("sine.csv");
    assert_ok(&run(&[
        "simulate",
        "sine",
        "--gamma",
        "0.001",
        "--T",
        "5000",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]));
    let gp = read_csv_column(&out, "g_prime");
    assert_eq!(gp.len(), 5000);
    assert!(gp.iter().all(|&g| (0.1..=0.4).contains(&g)));
}

#[test]
fn simulate_car1_from_latitude() {
    let dir = tmpdir();
    let lat_path = dir.path().join("lat.csv");
    let mut f = fs::File::create(&lat_path).unwrap();
    writeln!(f, "t,lat").unwrap();
    for t in 1..=500 {
        writeln!(f, "{t},{}", 30.0 + 0.01 * t as f64).unwrap();
    }
    drop(f);
    let out = dir.path().join("car1.csv");
    assert_ok(&run(&[
        "simulate",
        "car1",
        "--r",
        "0.97",
        "--lat-path",
        lat_path.to_str().unwrap(),
        "--coriolis-k",
        "0.2",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]));
    let omega = read_csv_column(&out, "omega");
    assert_eq!(omega.len(), 500);
    let expect = -0.2 * (30.01f64.to_radians()).sin();
    assert!((omega[0] - expect).abs() < 1e-12, "{} vs {expect}", omega[0]);
    // complex sample columns exist
    let re = read_csv_column(&out, "x_re");
    let im = read_csv_column(&out, "x_im");
    assert!(re.iter().zip(&im).any(|(a, b)| *a != 0.0 || *b != 0.0));
}

#[test]
fn estimate_white_noise_recovers_variance() {
    let dir = tmpdir();
    let data = dir.path().join("wn.csv");
    assert_ok(&run(&[
        "simulate",
        "ar",
        "--segments",
        "1:1.7",
        "--T",
        "20000",
        "--seed",
        "11",
        "--out",
        data.to_str().unwrap(),
    ]));
    let xs = read_csv_column(&data, "x");
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() as f64 - 1.0);
    let out = dir.path().join("est.csv");
    assert_ok(&run(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--model",
        "white",
        "--estimator",
        "ffwe",
        "--lambda",
        "0.999",
        "--out",
        out.to_str().unwrap(),
    ]));
    let logs2 = read_csv_column(&out, "log_sigma2");
    let sigma2 = logs2.last().unwrap().exp();
    assert!(
        (sigma2 - var).abs() <= 0.05 * var,
        "sigma2 {sigma2} vs sample variance {var}"
    );
}

#[test]
fn estimate_empty_input_is_a_data_error() {
    let dir = tmpdir();
    let data = dir.path().join("empty.csv");
    fs::write(&data, "t,x\n").unwrap();
    let out_path = dir.path().join("est.csv");
    let res = run(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("no samples"));
    assert!(!out_path.exists(), "no output file should be created");
}

#[test]
fn estimate_is_pipe_safe() {
    let dir = tmpdir();
    let data = dir.path().join("wn.csv");
    assert_ok(&run(&[
        "simulate", "ar", "--segments", "1:1", "--T", "3000", "--seed", "2", "--out",
        data.to_str().unwrap(),
    ]));
    let out_file = dir.path().join("from_file.csv");
    assert_ok(&run(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--model",
        "ar:1",
        "--out",
        out_file.to_str().unwrap(),
    ]));
    let out_stdin = dir.path().join("from_stdin.csv");
    let mut child = ffp()
        .args(["estimate", "--model", "ar:1", "--out", out_stdin.to_str().unwrap()])
        .stdin(Stdio::from(fs::File::open(&data).unwrap()))
        .spawn()
        .unwrap();
    assert!(child.wait().unwrap().success());
    assert_eq!(fs::read(&out_file).unwrap(), fs::read(&out_stdin).unwrap());
}

#[test]
fn exit_codes_are_stable() {
    // usage error
    let res = run(&["estimate", "--no-such-flag"]);
    assert_eq!(res.status.code(), Some(1));
    let dir = tmpdir();
    let out = dir.path().join("o.csv");
    // config error: bad model name
    let data = dir.path().join("d.csv");
    fs::write(&data, "t,x\n1,0.5\n").unwrap();
    let res = run(&[
        "estimate", "--input", data.to_str().unwrap(), "--model", "bogus", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    // config error: lambda outside (0, 1]
    let res = run(&[
        "estimate", "--input", data.to_str().unwrap(), "--lambda", "1.5", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
    // data error: malformed row with --on-error abort
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,x\n1,0.5\n2,oops\n3,0.1\n").unwrap();
    let res = run(&[
        "estimate", "--input", bad.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn on_error_skip_continues() {
    let dir = tmpdir();
    let bad = dir.path().join("bad.csv");
    let mut f = fs::File::create(&bad).unwrap();
    writeln!(f, "t,x").unwrap();
    for t in 1..=50 {
        if t == 25 {
            writeln!(f, "{t},oops").unwrap();
        } else {
            writeln!(f, "{t},0.5").unwrap();
        }
    }
    drop(f);
    let out = dir.path().join("o.csv");
    let res = run(&[
        "estimate",
        "--input",
        bad.to_str().unwrap(),
        "--estimator",
        "ffp",
        "--lambda",
        "0.9",
        "--record-stride",
        "7",
        "--on-error",
        "skip",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&res);
    assert!(String::from_utf8_lossy(&res.stderr).contains("skipping row"));
    assert!(out.exists());
    let ghat = read_csv_column(&out, "g_hat");
    assert_eq!(ghat.len(), 49 / 7);
}

#[test]
fn estimate_affwe_emits_lambda_trajectory() {
    let dir = tmpdir();
    let data = dir.path().join("ar.csv");
    assert_ok(&run(&[
        "simulate", "ar", "--segments", "1:0.6,1", "--T", "4000", "--seed", "6", "--out",
        data.to_str().unwrap(),
    ]));
    let out = dir.path().join("fit.csv");
    assert_ok(&run(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--model",
        "ar:1",
        "--estimator",
        "affwe",
        "--lambda",
        "0.99",
        "--learn-rate-lambda",
        "0.01",
        "--prior-alpha",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]));
    let lambda = read_csv_column(&out, "lambda");
    assert!(!lambda.is_empty());
    assert!(lambda.iter().all(|&l| (0.5..1.0).contains(&l)));
    let phi1 = read_csv_column(&out, "phi1");
    let last = *phi1.last().unwrap();
    assert!((last - 0.6).abs() < 0.25, "phi1 estimate {last}");
}

#[test]
fn estimate_ocean_reports_raw_parameters() {
    let dir = tmpdir();
    let data = dir.path().join("car1.csv");
    assert_ok(&run(&[
        "simulate", "car1", "--r", "0.95", "--beta", "0.9424777960769379", "--T", "6000",
        "--seed", "8", "--out", data.to_str().unwrap(),
    ]));
    let out = dir.path().join("fit.csv");
    assert_ok(&run(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--model",
        "ocean",
        "--estimator",
        "ffwe",
        "--lambda",
        "0.999",
        "--grid-m",
        "128",
        "--out",
        out.to_str().unwrap(),
    ]));
    let header = fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,amp_a,damp,back_b,back_h,slope_alpha,omega,lambda");
    let omega = read_csv_column(&out, "omega");
    // rotation 0.9425 rad/sample = 0.15 cycles/sample
    let last = *omega.last().unwrap();
    assert!((last - 0.15).abs() < 0.03, "omega estimate {last}");
    let amp = read_csv_column(&out, "amp_a");
    assert!(amp.iter().all(|a| *a > 0.0));
}

#[test]
fn surface_matrix_shape() {
    let dir = tmpdir();
    let data = dir.path().join("ar2.csv");
    assert_ok(&run(&[
        "simulate", "ar", "--segments", "1:1.46,-0.81,1", "--T", "4000", "--seed", "9",
        "--out", data.to_str().unwrap(),
    ]));
    let est_out = dir.path().join("est.csv");
    assert_ok(&run(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--estimator",
        "ffp",
        "--lambda",
        "0.999",
        "--dump-sdf-at",
        "4000",
        "--out",
        est_out.to_str().unwrap(),
    ]));
    let snapshot = dir.path().join("est_sdf_4000.csv");
    assert!(snapshot.exists());
    let surf = dir.path().join("surface.csv");
    assert_ok(&run(&[
        "surface",
        "--est",
        snapshot.to_str().unwrap(),
        "--model",
        "ar:2",
        "--axis1",
        "phi1:-2:2:81",
        "--axis2",
        "phi2:-1:1:41",
        "--fixed",
        "log_sigma2=0",
        "--out",
        surf.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&surf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 82); // header + 81 axis1 rows
    assert!(lines[0].starts_with("phi1\\phi2,"));
    assert_eq!(lines[1].split(',').count(), 42); // axis1 value + 41 cells
    // the maximizing cell should sit near the generating parameters
    let header: Vec<f64> = lines[0]
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    let mut best = (0.0, 0.0, f64::MIN);
    for line in &lines[1..] {
        let mut it = line.split(',');
        let phi1: f64 = it.next().unwrap().parse().unwrap();
        for (j, cell) in it.enumerate() {
            if let Ok(v) = cell.parse::<f64>() {
                if v.is_finite() && v > best.2 {
                    best = (phi1, header[j], v);
                }
            }
        }
    }
    assert!((best.0 - 1.46).abs() < 0.3, "phi1 argmax {}", best.0);
    assert!((best.1 + 0.81).abs() < 0.3, "phi2 argmax {}", best.1);
}

fn write_tiny_suite(dir: &Path) -> PathBuf {
    let cfg = dir.join("suite.json");
    fs::write(
        &cfg,
        r#"{
  "name": "tiny",
  "generator": { "type": "sine", "len": 400, "gamma": 0.001, "noise_sd": 0.5, "seed": 0 },
  "grid_m": 32,
  "replications": 3,
  "record_stride": 10,
  "seed": 42,
  "estimators": {
    "ffp_0.95": { "type": "ffp", "lambda": 0.95 },
    "ffp_1.00": { "type": "ffp", "lambda": 1.0 }
  }
}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn experiment_writes_summaries_and_manifest() {
    let dir = tmpdir();
    let cfg = write_tiny_suite(dir.path());
    let out_dir = dir.path().join("results");
    assert_ok(&run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]));
    for label in ["ffp_0.95", "ffp_1.00"] {
        let path = out_dir.join(format!("{label}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,quantity,mean,std\n"));
        assert_eq!(text.lines().count(), 41); // header + 40 recorded times
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 42);
    assert!(manifest["runtime_seconds"].as_f64().unwrap() >= 0.0);
    assert!(manifest["start_time"].as_str().unwrap().contains('T'));
    assert_eq!(manifest["config"]["name"], "tiny");
    assert!(!manifest["version"].as_str().unwrap().is_empty());
}

#[test]
fn bundled_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in ["fig3.json", "fig8.json"] {
        let cfg = root.join("configs").join(name);
        assert!(cfg.exists(), "missing bundled config {name}");
        let dir = tmpdir();
        let out_dir = dir.path().join("results");
        let res = run(&[
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--replications",
            "1",
        ]);
        assert_ok(&res);
        assert!(out_dir.join("manifest.json").exists());
        let entries = fs::read_dir(&out_dir).unwrap().count();
        assert_eq!(entries, 5, "{name}: 4 estimator summaries + manifest");
    }
}

#[cfg(unix)]
fn max_rss_kb(mut cmd: Command) -> i64 {
    let child = cmd
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn");
    let pid = child.id() as i32;
    let mut status: libc::c_int = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    assert_eq!(rc, pid, "wait4 failed");
    std::mem::forget(child);
    usage.ru_maxrss
}

/// Peak memory of `estimate` must not grow with the input length.
#[cfg(unix)]
#[test]
fn estimate_memory_is_stream_length_independent() {
    let dir = tmpdir();
    let small = dir.path().join("small.csv");
    let big = dir.path().join("big.csv");
    assert_ok(&run(&[
        "simulate", "ar", "--segments", "1:1", "--T", "10000", "--seed", "4", "--out",
        small.to_str().unwrap(),
    ]));
    assert_ok(&run(&[
        "simulate", "ar", "--segments", "1:1", "--T", "1000000", "--seed", "4", "--out",
        big.to_str().unwrap(),
    ]));
    let rss = |input: &Path, out: &Path| {
        let mut cmd = ffp();
        cmd.args([
            "estimate",
            "--input",
            input.to_str().unwrap(),
            "--model",
            "white",
            "--grid-m",
            "128",
            "--record-stride",
            "100",
            "--out",
            out.to_str().unwrap(),
        ]);
        max_rss_kb(cmd)
    };
    let rss_small = rss(&small, &dir.path().join("o1.csv"));
    let rss_big = rss(&big, &dir.path().join("o2.csv"));
    // identical fixed state; allow generous slack for allocator noise
    assert!(
        rss_big <= rss_small + 16 * 1024,
        "peak RSS grew with stream length: {rss_small} KB -> {rss_big} KB"
    );
}
