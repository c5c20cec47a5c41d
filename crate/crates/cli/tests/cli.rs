use std::path::Path;
use std::process::Command;

use resteer_core::engine::{read_wav_mono, write_wav_f32};

const MODEL: &str = "440 1.0 0.2\n880 0.5 0.1\n";
const MAP: &str = "n 6\n0 0 : 1 440 0.2 0.5 880 0.1\n1 0 : 0.5 400 0.1 1 900 0.2\n0 1 : 1 500 0.3 0.2 800 0.1\n";
const TRAJ: &str = "time_s,vx,vy,vz,vyaw,vpitch,vroll,bx,by,bz,byaw,bpitch,broll\n\
                    0,0,0,1,0,0,0,0,0,0,0,0,0\n0.5,0.5,0.2,1,0,0,0,0,0,0,0,0,0\n";

fn resteer() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resteer"))
}

fn files(dir: &Path) {
    std::fs::write(dir.join("m.res"), MODEL).unwrap();
    std::fs::write(dir.join("m.map"), MAP).unwrap();
    std::fs::write(dir.join("t.csv"), TRAJ).unwrap();
    let input: Vec<f64> = (0..22_050).map(|i| (i as f64 * 0.0627).sin() * 0.3).collect();
    write_wav_f32(&dir.join("in.wav"), &input, 44_100).unwrap();
}

#[test]
fn render_writes_wav_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    files(d);
    let run = |out: &str| {
        resteer()
            .current_dir(d)
            .args(["render", "--in", "in.wav", "--traj", "t.csv", "--model", "m.res", "--map", "m.map"])
            .args(["--out", out, "--seed", "9", "--log", "log.csv"])
            .status()
            .unwrap()
    };
    assert!(run("a.wav").success());
    assert!(run("b.wav").success());
    assert_eq!(std::fs::read(d.join("a.wav")).unwrap(), std::fs::read(d.join("b.wav")).unwrap());
    assert_eq!(read_wav_mono(&d.join("a.wav")).unwrap().0.len(), 22_050);
    let log = std::fs::read_to_string(d.join("log.csv")).unwrap();
    assert!(log.starts_with("# resteer parameter log v1"));
    assert!(log.lines().nth(1).unwrap().starts_with("time_s,f0_hz,amplitude,centroid_hz,pos_x,pos_y,p0"));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    files(d);
    let ok = resteer().current_dir(d).args(["validate", "--model", "m.res", "--map", "m.map"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("status: OK"));

    std::fs::write(d.join("short.map"), "n 5\n0 0 : 1 2 3 4 5\n1 0 : 1 2 3 4 5\n0 1 : 1 2 3 4 5\n").unwrap();
    let bad = resteer().current_dir(d).args(["validate", "--model", "m.res", "--map", "short.map"]).output().unwrap();
    assert!(!bad.status.success());
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("expected 3 x 2 = 6") && text.contains('5'), "{text}");

    let missing = resteer().current_dir(d).args(["validate", "--model", "nope.res", "--map", "m.map"]).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.res"));
}

#[test]
fn render_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    files(d);
    let out = resteer()
        .current_dir(d)
        .args(["render", "--in", "in.wav", "--traj", "m.map", "--model", "m.res", "--map", "m.map", "--out", "o.wav"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trajectory line"));
    assert!(!d.join("o.wav").exists());
}
