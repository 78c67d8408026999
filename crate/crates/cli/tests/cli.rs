use std::fs;
use std::process::Command;

fn sdperc(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sdperc")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn csv_to_stdout_is_thread_independent() {
    let args = ["crossing", "--p", "0.6", "--n", "8,16", "--samples", "300", "--seed", "4"];
    let one = sdperc(&[&args[..], &["--threads", "1"]].concat()).stdout;
    let two = sdperc(&[&args[..], &["--threads", "2"]].concat()).stdout;
    assert_eq!(one, two);
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("n,width,height,p,delta,hits,samples,p_hat,ci_lo,ci_hi\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn out_dir_and_config_file() {
    let dir = std::env::temp_dir().join(format!("sdperc-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("arms.cfg");
    fs::write(&cfg, "# arm scaling\nsamples = 50\nsigma = Arm3hp\nouter = 8,16,32\np_c = 0.5927\n").unwrap();
    let out = dir.join("run");
    sdperc(&["arms", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("arms.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,N,hits,samples,p_hat,ci_lo,ci_hi"));
    assert_eq!(csv.lines().count(), 4);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("arms.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["samples"], 50);
    assert!(meta["runtime_seconds"].is_number());
    assert!(meta.get("git_revision").is_some());

    sdperc(&["forest-fire", "--box", "5", "--threshold", "8", "--tmax", "1.5", "--samples", "2", "--out", out.to_str().unwrap()]);
    let events = fs::read_to_string(out.join("events.jsonl")).unwrap();
    assert!(events.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_parameter_is_an_error() {
    let dir = std::env::temp_dir().join(format!("sdperc-cli-bad-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "sigma = Arm5\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sdperc"))
        .args(["merger", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    fs::remove_dir_all(&dir).unwrap();
}
