use std::path::PathBuf;
use std::process::{Command, Output};

use clap::Parser;
use lacuna_cli::{parse_plane, run, RunConfig};

fn lacuna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacuna")).args(args).output().unwrap()
}

fn body_file(name: &str, text: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Fields are '.'-decimal with 17 significant digits.
fn assert_full_precision(field: &str) {
    let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18, "{field}");
    assert!(!field.contains(','));
}

#[test]
fn volume_on_a_ball() {
    let ball = body_file("cli_ball.body", "body ball radius=1.0 center=0,0,0\n");
    let o = lacuna(&[
        "volume",
        "--body",
        &ball,
        "--plane",
        "1,0,0;-0.5",
        "--samples",
        "1000000",
        "--seed",
        "0",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.ends_with('\n'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "side,value,std_error,samples,seed,generator");
    assert!(lines[1].starts_with("Vplus,") && lines[2].starts_with("Vminus,"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_full_precision(fields[1]);
    // plus side {x > 0.5} is the small cap pi h^2 (3 - h) / 3 with h = 0.5
    let cap = std::f64::consts::PI * 0.25 * 2.5 / 3.0;
    let v: f64 = fields[1].parse().unwrap();
    let se: f64 = fields[2].parse().unwrap();
    assert!((v - cap).abs() <= 4.0 * se);
}

#[test]
fn tube_verify_flags_beta_independence() {
    let o = lacuna(&["tube-verify", "--gamma", "0.1", "--alpha", "1,0,0", "--beta", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("check,expected,observed,tolerance,status\n"));
    for row in ["beta_formula", "beta_mc", "domain_check", "Vplus", "Vminus"] {
        let line = text.lines().find(|l| l.starts_with(row)).unwrap();
        assert!(line.ends_with(",PASS"), "{line}");
    }
}

#[test]
fn scan_of_a_ball_finds_no_obstruction() {
    let ball = body_file("cli_scan_ball.body", "body ball radius=1.0 center=0,0,0\n");
    let o = lacuna(&["scan", "--body", &ball, "--directions", "50"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no obstruction found"));
}

#[test]
fn tangency_schema() {
    let disk = body_file("cli_disk.body", "body ball radius=1.0 center=0,0\n");
    let o = lacuna(&["tangency", "--body", &disk, "--direction", "0,2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dir_1,dir_2,offset,u_1,u_2,index_plus,index_minus,verdict_plus,verdict_minus,morse_margin"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(
        rows[1][..3],
        ["0.0000000000000000e0", "1.0000000000000000e0", "1.0000000000000000e0"]
    );
    assert_eq!(rows[1][5..9], ["0", "1", "true", "false"]);
}

#[test]
fn sweep_and_probe_schemas() {
    let ball = body_file("cli_sweep_ball.body", "body ball radius=1.0 center=0,0,0\n");
    let o = lacuna(&[
        "sweep", "--body", &ball, "--plane", "1,0,0;0", "--steps", "3", "--exact",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("lambda,Vplus,Vminus,stderr\n"));
    assert_eq!(text.lines().count(), 4);
    let mid: Vec<f64> = text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(mid[1], mid[2]);

    let o = lacuna(&["probe", "--body", &ball, "--plane", "1,0,0;-0.5", "--degree-max", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("degree,columns,sigma_ratio,verdict\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("verdict: relation-found(2)"));
}

#[test]
fn exit_codes() {
    let ball = body_file("cli_exit_ball.body", "body ball radius=1.0 center=0,0,0\n");
    assert_eq!(
        lacuna(&["volume", "--body", &ball, "--plane", "0,0,0;1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lacuna(&["volume", "--body", "/nonexistent", "--plane", "1,0,0;0"])
            .status
            .code(),
        Some(1)
    );
    let bad = body_file("cli_bad_eps.body", "body tube m=1 eps=1.5 psi=quadratic diag=1\n");
    let o = lacuna(&["volume", "--body", &bad, "--plane", "1,0,0,0;0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn help_documents_conventions() {
    for cmd in [
        "volume",
        "section",
        "cap",
        "tube-verify",
        "tangency",
        "scan",
        "probe",
        "sweep",
    ] {
        let text = stdout(&lacuna(&[cmd, "--help"]));
        assert!(text.contains("gamma = -b"), "{cmd}");
        assert!(text.contains("Tube validity"), "{cmd}");
    }
}

#[test]
fn output_file_matches_stdout() {
    let ball = body_file("cli_out_ball.body", "body ball radius=1.0 center=0,0,0\n");
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli_out.csv");
    let args = ["volume", "--body", &ball, "--plane", "1,1,0;0.2", "--samples", "10000"];
    let direct = lacuna(&args);
    let o = lacuna(&[&args[..], &["--out", out.to_str().unwrap()]].concat());
    assert!(o.status.success() && o.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
}

#[test]
fn plane_literals() {
    let h = parse_plane("1,-2.5,0;-0.5").unwrap();
    assert_eq!(h.coeffs(), &[1.0, -2.5, 0.0, -0.5]);
    assert!(parse_plane("1,0,0").is_err());
    assert!(parse_plane("1,x;0").is_err());
    let cfg = RunConfig::parse_from(["lacuna", "cap", "--dim", "3", "--t", "0"]);
    let out = run(&cfg).unwrap();
    assert_eq!(
        out.output.lines().nth(1).unwrap().split(',').nth(3).unwrap(),
        "2.0943951023931953e0"
    );
}
