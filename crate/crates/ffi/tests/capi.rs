use std::ffi::{CStr, CString};
use std::ptr;

use pulsatile_loop_ffi::*;

const SINE: &str =
    "[waveform]\nkind = \"sinusoidal\"\nmean_velocity = 1e-4\namplitude = 0.5\nfrequency = 0.5\n";

fn scenario(text: &str) -> *mut PlScenario {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { pl_scenario_from_toml(c.as_ptr(), &mut out) },
        PlStatus::Ok
    );
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = pl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn moments_and_signal_match_the_library() {
    let s = scenario(SINE);
    let (mut mean, mut var) = (0.0, 0.0);
    assert_eq!(
        unsafe { pl_moments(s, 3.0, &mut mean, &mut var) },
        PlStatus::Ok
    );
    let series = pulsatile_loop::waveform::make_sinusoidal(1e-4, 0.5, 0.5).unwrap();
    let m =
        pulsatile_loop::dispersion::moments(&series, &Default::default(), &Default::default(), 3.0);
    assert_eq!((mean, var), (m.mean, m.variance));

    let mut fraction = 0.0;
    assert_eq!(
        unsafe { pl_received_signal(s, 3.0, &mut fraction) },
        PlStatus::Ok
    );
    let t = [1.0, 3.0, 5.0];
    let mut values = [0.0; 3];
    assert_eq!(
        unsafe { pl_cir(s, t.as_ptr(), 3, false, values.as_mut_ptr()) },
        PlStatus::Ok
    );
    assert!((values[1] - fraction / 0.1).abs() < 1e-12);
    let mut steady = [0.0; 3];
    assert_eq!(
        unsafe { pl_cir(s, t.as_ptr(), 3, true, steady.as_mut_ptr()) },
        PlStatus::Ok
    );
    assert_ne!(values, steady);
    assert!(!unsafe { pl_scenario_has_advisory(s) });
    unsafe { pl_scenario_free(s) };
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut out = ptr::null_mut();
    let bad = CString::new("[geometry]\nradius = 2e-3\n[waveform]\nkind = \"steady\"\n").unwrap();
    assert_eq!(
        unsafe { pl_scenario_from_toml(bad.as_ptr(), &mut out) },
        PlStatus::Regime
    );
    assert!(last_error().contains("slender"));
    assert!(out.is_null());

    let bad = CString::new("[waveform]\nkind = \"steady\"\nspeed = 1\n").unwrap();
    assert_eq!(
        unsafe { pl_scenario_from_toml(bad.as_ptr(), &mut out) },
        PlStatus::Config
    );
    assert!(last_error().contains("waveform.speed"));

    assert_eq!(
        unsafe { pl_scenario_from_toml(ptr::null(), &mut out) },
        PlStatus::NullPointer
    );
    let mut x = 0.0;
    assert_eq!(
        unsafe { pl_moments(ptr::null(), 1.0, &mut x, &mut x) },
        PlStatus::NullPointer
    );

    let s = scenario(SINE);
    let t = [2.0, 1.0];
    let mut v = [0.0; 2];
    assert_eq!(
        unsafe { pl_cir(s, t.as_ptr(), 2, false, v.as_mut_ptr()) },
        PlStatus::Config
    );
    assert!(last_error().contains("increasing"));
    unsafe { pl_scenario_free(s) };
    unsafe { pl_scenario_free(ptr::null_mut()) };
}

#[test]
fn small_simulation_round_trip() {
    let s = scenario(SINE);
    let config = PlPbsConfig {
        particles: 2000,
        timestep: 1e-3,
        duration: 0.5,
        seed: 4,
        sample_interval: 0.1,
        workers: 1,
    };
    let t = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mut run = ptr::null_mut();
    assert_eq!(
        unsafe { pl_pbs_run(s, &config, t.as_ptr(), t.len(), &mut run) },
        PlStatus::Ok
    );
    assert_eq!(unsafe { pl_pbs_run_len(run) }, 5);
    let mut normalized = [0.0; 5];
    let mut counts = [0u64; 5];
    assert_eq!(
        unsafe { pl_pbs_run_copy(run, normalized.as_mut_ptr(), counts.as_mut_ptr(), 5) },
        PlStatus::Ok
    );
    for (v, c) in normalized.iter().zip(counts) {
        assert!((v - c as f64 / 2000.0 / 0.1).abs() < 1e-12);
    }
    assert_eq!(
        unsafe { pl_pbs_run_copy(run, normalized.as_mut_ptr(), ptr::null_mut(), 4) },
        PlStatus::BufferTooSmall
    );
    assert_eq!(unsafe { pl_pbs_run_wall_clamps(run) }, 0);
    unsafe { pl_pbs_run_free(run) };
    unsafe { pl_scenario_free(s) };

    let desk = pl_pbs_config_desk();
    assert_eq!(
        (desk.particles, desk.timestep, desk.duration),
        (50_000, 5e-4, 10.0)
    );
    assert_eq!(pl_pbs_config_full().particles, 500_000);
    assert!(unsafe { CStr::from_ptr(pl_version()) }
        .to_str()
        .unwrap()
        .starts_with("0."));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/pulsatile_loop.h"
    ))
    .unwrap();
    for name in [
        "pl_last_error",
        "pl_version",
        "pl_scenario_from_toml",
        "pl_scenario_free",
        "pl_moments",
        "pl_received_signal",
        "pl_cir",
        "pl_pbs_config_desk",
        "pl_pbs_run",
        "pl_pbs_run_copy",
        "pl_pbs_run_free",
        "typedef struct PlScenario PlScenario",
        "PlStatus_Regime = 3",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C program against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_against_static_library() {
    let target = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"))
        .parent()
        .unwrap()
        .to_path_buf();
    let archive = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libpulsatile_loop_ffi.a"))
        .find(|p| p.exists());
    let (Some(archive), Ok(_)) = (
        archive,
        std::process::Command::new("cc").arg("--version").output(),
    ) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let dir = tempfile_dir();
    let source = dir.join("main.c");
    std::fs::write(
        &source,
        r#"
#include <stdio.h>
#include "pulsatile_loop.h"
int main(void) {
    PlScenario *s = NULL;
    if (pl_scenario_from_toml("[waveform]\nkind = \"physiological\"\n", &s) != PlStatus_Ok) return 1;
    double mean = 0, var = 0;
    if (pl_moments(s, 2.0, &mean, &var) != PlStatus_Ok) return 2;
    if (!(mean > 2e-4 && mean < 6e-4 && var > 0)) return 3;
    if (pl_scenario_from_toml("[waveform]\nkind = \"nope\"\n", &s) != PlStatus_Config) return 4;
    if (pl_last_error() == NULL) return 5;
    pl_scenario_free(s);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("capi_smoke");
    let status = std::process::Command::new("cc")
        .arg(&source)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join(format!("capi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
