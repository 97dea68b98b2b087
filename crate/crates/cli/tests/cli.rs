//! End-to-end tests of the batch front end: exit codes, CSV shape and
//! byte-stability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_indivol")
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn indivol")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn missing_config_exits_2() {
    let out = run(&["price", "--config", "/nonexistent/nowhere.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = std::env::temp_dir().join("indivol_cli_bad");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.toml");
    std::fs::write(&path, "model = 3\n").unwrap();
    let out = run(&["price", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_model_prices_have_zero_corrections() {
    let out = run(&["price", "--config", repo_config("constant_table.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        // u1, u2_lin, u2_ind
        for idx in [5usize, 6, 7] {
            let v: f64 = cells[idx].parse().unwrap();
            assert_eq!(v, 0.0, "{line}");
        }
        rows += 1;
    }
    assert_eq!(rows, 3 * 2 * 2);
}

#[test]
fn surface_buyer_below_seller_and_stable_bytes() {
    let cfg = repo_config("heston_figure.toml");
    let out1 = run(&["iv-surface", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out1.status.code(), Some(0), "{}", String::from_utf8_lossy(&out1.stderr));
    let out2 = run(&["iv-surface", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out1.stdout, out2.stdout, "output not byte-stable");

    let text = stdout(&out1);
    let mut buyer = std::collections::BTreeMap::new();
    let mut seller = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let key = (cells[0].to_string(), cells[1].to_string());
        let iv: f64 = cells[8].parse().unwrap();
        match cells[3] {
            "buyer" => {
                buyer.insert(key, iv);
            }
            "seller" => {
                seller.insert(key, iv);
            }
            _ => {}
        }
    }
    assert!(!buyer.is_empty());
    for (key, b) in &buyer {
        let s = seller[key];
        assert!(s >= *b, "seller below buyer at {key:?}");
    }
    // the four-curve dataset carries mid2 and exact rows for the builtin
    assert!(text.lines().any(|l| l.contains(",mid2,")));
    assert!(text.lines().any(|l| l.contains(",exact,")));
}

#[test]
fn price_rows_buyer_below_seller() {
    let out = run(&["price", "--config", repo_config("heston_figure.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut buyer = std::collections::BTreeMap::new();
    let mut seller = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let key = (cells[0].to_string(), cells[1].to_string());
        let ubar2: f64 = cells[10].parse().unwrap();
        match cells[2] {
            "buyer" => buyer.insert(key, ubar2),
            "seller" => seller.insert(key, ubar2),
            _ => None,
        };
    }
    assert!(!buyer.is_empty());
    for (key, b) in &buyer {
        assert!(seller[key] > *b, "no spread at {key:?}");
    }
}

#[test]
fn spread_grows_with_maturity() {
    let out = run(&["spread", "--config", repo_config("heston_spread.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut atm: Vec<(f64, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let l: f64 = cells[2].parse().unwrap();
        if l == 0.0 {
            atm.push((cells[1].parse().unwrap(), cells[3].parse().unwrap()));
        }
    }
    assert_eq!(atm.len(), 3);
    assert!(atm[0].1 < atm[1].1 && atm[1].1 < atm[2].1, "{atm:?}");
}

#[test]
fn off_point_surface_exits_3() {
    let dir = std::env::temp_dir().join("indivol_cli_offpoint");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("off.toml");
    // table pinned at xbar = 0 but evaluated at x = 0.5: every row fails
    std::fs::write(
        &path,
        r#"
[model.table]
xbar = 0.0
ybar = 0.0
rho = 0.0
a = { c00 = 0.02 }
b = { c00 = 0.0008 }

[setting]
gamma_nu = 10.0
x = 0.5
y = 0.0

[sweep]
strikes = [0.0]
maturities = [0.5]
"#,
    )
    .unwrap();
    let out = run(&["iv-surface", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn nontraded_error_columns_decrease() {
    let out = run(&[
        "nontraded-price",
        "--config",
        repo_config("reciprocal_heston_figure.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut ordered = 0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (u0, u1, u2, exact) = (cells[3], cells[4], cells[5], cells[6]);
        rows += 1;
        if (u0 - exact).abs() >= (u1 - exact).abs() && (u1 - exact).abs() >= (u2 - exact).abs() {
            ordered += 1;
        }
    }
    assert!(rows >= 13);
    assert!(ordered * 10 >= rows * 9, "{ordered}/{rows}");
}

#[test]
fn order_check_passes_band() {
    let out = run(&[
        "order-check",
        "--config",
        repo_config("order_check.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("\"pass\": true"), "{text}");
}

#[test]
fn json_config_is_accepted() {
    let dir = std::env::temp_dir().join("indivol_cli_json");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.json");
    std::fs::write(
        &path,
        r#"{
  "model": {"table": {"xbar": 0.0, "ybar": 0.0, "rho": -0.4,
    "a": {"c00": 0.02}, "b": {"c00": 0.0008}, "f": {"c00": 0.046},
    "g": {"c00": -0.0032}, "h": {"c00": 0.125}}},
  "setting": {"gamma_nu": 25.0, "x": 0.0, "y": 0.0},
  "sweep": {"strikes": [0.0], "maturities": [0.5]}
}"#,
    )
    .unwrap();
    let out = run(&["iv-surface", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // flat surface at sigma0 = 0.2
    let row = text.lines().nth(1).unwrap();
    let iv: f64 = row.split(',').nth(8).unwrap().parse().unwrap();
    assert!((iv - 0.2).abs() < 1e-15);
}

#[test]
fn verify_reports_pass() {
    let out = run(&["verify", "--config", repo_config("constant_table.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!text.contains("FAIL"));
}
