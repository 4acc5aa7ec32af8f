//! End-to-end runs of the command-line tool: exit codes, CSV layout and
//! reproducible manifests.

use std::path::Path;
use std::process::{Command, Output};

use pulsatile_loop::bench::{read_csv, RunManifest};

const SMALL: &str = r#"
label = "small"

[waveform]
kind = "sinusoidal"
mean_velocity = 1e-4
amplitude = 0.5
frequency = 0.5

[pbs]
particles = 2000
timestep = 1e-3
duration = 2.0
seed = 9
sample_interval = 0.01
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsatile-loop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Manifest text with the wall-clock fields blanked out.
fn stable_manifest(path: &Path) -> RunManifest {
    let mut m: RunManifest = toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    m.created_unix = 0;
    for run in &mut m.pbs_runs {
        run.elapsed_seconds = 0.0;
    }
    m
}

#[test]
fn cir_writes_analytical_and_steady_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "s.toml", SMALL);
    let out_dir = dir.path().display().to_string();
    let out = run(&[
        "cir",
        "--config",
        &config,
        "--out",
        &out_dir,
        "--grid-points",
        "200",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let series = read_csv(&dir.path().join("small.csv")).unwrap();
    let labels: Vec<_> = series.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["analytical", "steady"]);
    // Grid from the [pbs] section: 2 s.
    assert_eq!(series[0].len(), 200);
    assert!((series[0].t[199] - 2.0).abs() < 1e-12);
    let manifest = stable_manifest(&dir.path().join("small.manifest.toml"));
    assert_eq!(manifest.csv, "small.csv");
    assert_eq!(manifest.scenarios[0].label, "small");
}

#[test]
fn compare_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "s.toml", SMALL);
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        std::fs::create_dir(&out_dir).unwrap();
        let out = run(&[
            "compare",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("rmse"));
        let csv = std::fs::read(out_dir.join("small.csv")).unwrap();
        outputs.push((csv, stable_manifest(&out_dir.join("small.manifest.toml"))));
    }
    assert_eq!(outputs[0], outputs[1]);
    let (csv, manifest) = &outputs[0];
    let header = String::from_utf8_lossy(csv)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "t_s,analytical,steady,pbs");
    assert_eq!(manifest.seed, Some(9));
    assert_eq!(manifest.pbs_runs[0].particles, 2000);
    assert_eq!(manifest.agreement.len(), 1);

    let other = dir.path().join("c");
    std::fs::create_dir(&other).unwrap();
    let out = run(&[
        "compare",
        "--config",
        &config,
        "--seed",
        "10",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_ne!(std::fs::read(other.join("small.csv")).unwrap(), *csv);
}

#[test]
fn pbs_snapshot_dumps_positions() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "s.toml", SMALL);
    let out_dir = dir.path().display().to_string();
    let out = run(&["pbs", "--config", &config, "--out", &out_dir, "--snapshot"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let positions = std::fs::read_to_string(dir.path().join("small.positions.csv")).unwrap();
    assert_eq!(positions.lines().count(), 2001);
    let series = read_csv(&dir.path().join("small.csv")).unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0].label, "pbs");
}

#[test]
fn preset_sweep_checks_its_trend() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().display().to_string();
    let out = run(&[
        "sweep",
        "--preset",
        "fig_pbs_ubar",
        "--assert",
        "--grid-points",
        "1000",
        "--out",
        &out_dir,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let series = read_csv(&dir.path().join("fig_pbs_ubar.csv")).unwrap();
    // Analytical and steady column per swept value.
    assert_eq!(series.len(), 6);
    assert!(
        series[0].label.starts_with("analytical@mean_velocity="),
        "{}",
        series[0].label
    );
    let manifest = stable_manifest(&dir.path().join("fig_pbs_ubar.manifest.toml"));
    assert_eq!(manifest.scenarios.len(), 3);
    assert!(manifest.assertions[0].passed);

    let listing = run(&["presets"]);
    assert_eq!(code(&listing), 0);
    let text = String::from_utf8_lossy(&listing.stdout);
    for name in ["fig_sin_f", "fig_pulse_f", "fig_pbs_xrx", "fig_pbs_d"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn failed_trend_exits_with_status_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "s.toml",
        "[waveform]\nkind = \"physiological\"\n",
    );
    let out_dir = dir.path().display().to_string();
    // Deviation grows as diffusion shrinks, so this order must fail.
    let out = run(&[
        "sweep",
        "--config",
        &config,
        "--param",
        "diffusion",
        "--values",
        "1e-8,5e-9,2.5e-9",
        "--expect",
        "deviation_decreasing",
        "--assert",
        "--out",
        &out_dir,
        "--grid-points",
        "500",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAILS"));
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().display().to_string();

    let unknown = write_config(
        dir.path(),
        "u.toml",
        "[waveform]\nkind = \"steady\"\nspeed = 2\n",
    );
    let out = run(&["cir", "--config", &unknown, "--out", &out_dir]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("waveform.speed"));

    let thick = write_config(
        dir.path(),
        "t.toml",
        "[geometry]\nradius = 2e-3\n[waveform]\nkind = \"steady\"\n",
    );
    assert_eq!(
        code(&run(&["cir", "--config", &thick, "--out", &out_dir])),
        3
    );

    let fine = write_config(dir.path(), "f.toml", "[waveform]\nkind = \"steady\"\n");
    // The output "directory" is an existing regular file.
    assert_eq!(code(&run(&["cir", "--config", &fine, "--out", &fine])), 1);
    assert_eq!(code(&run(&["cir", "--config", "/nonexistent.toml"])), 1);

    assert_eq!(code(&run(&["sweep", "--preset", "no_such_figure"])), 2);
    assert_eq!(code(&run(&["cir"])), 2);
}
