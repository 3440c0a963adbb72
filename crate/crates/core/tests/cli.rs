use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mobo-osd"))
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    let out = tmp.path().join("out");
    fs::write(
        &conf,
        "# comment\nproblem = vlmop2\nalgo = random\nbudget = 50\nseeds = 0..3\n",
    )
    .unwrap();
    let status = bin()
        .args([
            "--config",
            conf.to_str().unwrap(),
            "--budget",
            "12",
            "--seeds",
            "5",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = fs::read_to_string(out.join("seed_5.csv")).unwrap();
    assert_eq!(rows.lines().count(), 13);
    assert!(!out.join("seed_0.csv").exists());
}

#[test]
fn bad_arguments_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["--problem", "unknown"],
        vec!["--algo", "sgd"],
        vec!["--budget", "ten"],
    ] {
        let status = bin()
            .args(&args)
            .arg("--out")
            .arg(tmp.path())
            .status()
            .unwrap();
        assert!(!status.success(), "{args:?}");
    }
}
