use std::process::Command;

fn mm(args: &[&str], cwd: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mm"))
        .args(args)
        .current_dir(cwd)
        .env("MM_LOG", "off")
        .output()
        .unwrap()
}

#[test]
fn missing_config_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = mm(&["register", "--config", "nope.json", "--out", "reg"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("nope.json"), "{err}");
}

#[test]
fn geometric_pipeline_on_the_t_junction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let steps: [&[&str]; 6] = [
        &["fixture", "--layout", "t_junction", "--seed", "2", "--out", "fx", "--frame-width", "64"],
        &["register", "--config", "fx/area.json", "--out", "reg"],
        &["detect", "--registered", "reg", "--out", "int.json", "--no-visual"],
        &["assemble", "--registered", "reg", "--intersections", "int.json", "--out", "map.json"],
        &["turns", "--map", "map.json", "--registered", "reg", "--out", "turns", "--frames-per-turn", "5", "--method", "B"],
        &["export", "--registered", "reg", "--map", "map.json", "--turns", "turns", "--out", "pkg"],
    ];
    for s in steps {
        let out = mm(s, d);
        assert!(out.status.success(), "{s:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // frames stay reachable when a later stage runs from somewhere else
    let abs = |p: &str| d.join(p).to_string_lossy().into_owned();
    let elsewhere = tempfile::tempdir().unwrap();
    let out = mm(
        &["turns", "--map", &abs("map.json"), "--registered", &abs("reg"), "--out", &abs("turns2"), "--frames-per-turn", "2"],
        elsewhere.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pkg = moviemap::package::load_package(&d.join("pkg")).unwrap();
    assert_eq!(pkg.manifest.nodes.len(), 1);
    assert_eq!(pkg.manifest.turns.len(), 4);
    assert_eq!(pkg.manifest.turn_method, moviemap_core::turning::TurnMethod::BRotateOnly);
    assert!(pkg.manifest.turns.iter().all(|t| t.frames.len() == 5));
}

#[test]
fn bad_layout_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mm(&["fixture", "--layout", "hexagon", "--out", "fx"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
