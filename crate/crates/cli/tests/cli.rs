use std::path::{Path, PathBuf};
use std::process::Command;

use spp_cli::{run_from, CliError};
use spp_core::channel::{fidelity_vs_distance, Reference};
use spp_core::constants::hz_to_omega;
use spp_core::coupling::CouplerSpec;
use spp_core::prism::{atr_solve, PrismGeometry};
use spp_core::{Complex64, GrapheneParams, Polarization};

fn spp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spp"))
}

/// Data rows (header comments and column line removed), split into fields.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(str::to_string).collect();
    (cols, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn out(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn sigma_row_count_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "s.csv");
    let s = run_from(["spp", "sigma", "--points", "17", "--out", &o]).unwrap();
    assert_eq!(s.rows, 17);
    let (cols, data) = rows(&s.output);
    assert_eq!(cols, ["freq_hz", "sigma_re_S", "sigma_im_S", "sigma_re_over_min", "sigma_im_over_min"]);
    assert_eq!(data.len(), 17);
    let text = std::fs::read_to_string(&s.output).unwrap();
    assert!(text.contains("# mu_c = 0.5") && text.contains("# temperature = 300.0"));
    let manifest: toml::Table = std::fs::read_to_string(&s.manifest).unwrap().parse().unwrap();
    assert_eq!(manifest["command"].as_str(), Some("sigma"));
    assert_eq!(manifest["rows"].as_integer(), Some(17));
    assert!(manifest["parameters"].get("f_max").is_some());
}

#[test]
fn empty_range_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let st = spp()
        .args(["sigma", "--f-min", "1e12", "--f-max", "1e12", "--out", &out(dir.path(), "x.csv")])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists());
    let st = spp().args(["qec"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2), "missing --seed");
    let st = spp().args(["sigma", "--eps-r=-1", "--out", &out(dir.path(), "y.csv")]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn below_critical_angle_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "b.csv");
    let st = spp().args(["prism", "beta-sweep", "--theta-deg", "40", "--out", &o]).output().unwrap();
    assert_eq!(st.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&st.stderr).contains("reflectance minimum"));
    let err = run_from(["spp", "prism", "beta-sweep", "--theta-deg", "40", "--out", &o]).unwrap_err();
    assert!(matches!(err, CliError::Core(spp_core::Error::NotResonant { .. })));
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "points = 9\nmu_c = 0.3\nbeta = [0.5]\n").unwrap();
    let o = out(dir.path(), "s.csv");
    let err = run_from(["spp", "sigma", "--config", cfg.to_str().unwrap(), "--out", &o]).unwrap_err();
    assert!(matches!(err, CliError::Config { .. }), "beta is not a sigma key");

    std::fs::write(&cfg, "points = 9\nmu_c = 0.3\n").unwrap();
    let s = run_from(["spp", "sigma", "--config", cfg.to_str().unwrap(), "--points", "4", "--out", &o]).unwrap();
    assert_eq!(s.rows, 4);
    assert!(std::fs::read_to_string(&s.output).unwrap().contains("# mu_c = 0.3"));

    std::fs::write(&cfg, "beta = [1.0, 0.9, 0.8]\npoints = 3\n").unwrap();
    let o = out(dir.path(), "p.csv");
    let s = run_from(["spp", "propagate", "--config", cfg.to_str().unwrap(), "--beta", "0.95", "--out", &o]).unwrap();
    assert_eq!(s.rows, 3, "list flags replace the file's list");
}

#[test]
fn checked_in_configs_parse() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let sub: &[&str] = match name.as_str() {
            "fig2a" => &["sigma"],
            "fig2b" => &["dispersion"],
            "fig4-fid" => &["propagate"],
            n if n.starts_with("fig4b") => &["prism", "beta-sweep"],
            n if n.starts_with("fig5") => &["qec", "--seed", "1"],
            n if n.starts_with("fig6") => &["prism", "reflectance-map"],
            other => panic!("unexpected config {other}"),
        };
        let mut argv = vec!["spp"];
        argv.extend(sub);
        argv.extend(["--config", path.to_str().unwrap()]);
        spp_cli::config::parse(argv).unwrap_or_else(|e| panic!("{name}: {e}"));
        n += 1;
    }
    assert!(n >= 10);
}

#[test]
fn reflectance_grid_point_matches_direct_solve() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "r.csv");
    let s = run_from([
        "spp", "prism", "reflectance-map", "--mu-c", "1.24", "--temperature", "0", "--theta-points", "5",
        "--f-points", "7", "--out", &o,
    ])
    .unwrap();
    assert_eq!(s.rows, 35);
    let (_, data) = rows(&s.output);
    let row = &data[3 * 5 + 2];
    let f: f64 = row[0].parse().unwrap();
    let th: f64 = row[1].parse().unwrap();
    let r: f64 = row[2].parse().unwrap();
    let params = GrapheneParams::new(1.24, 0.0, 1.0 / spp_core::material::TAU_INTRA_0K, 1.0 / spp_core::material::TAU_INTER, 1.0, 1).unwrap();
    let geom = PrismGeometry::new(1.5, 620e-9, th.to_radians(), Polarization::TE).unwrap();
    let direct = atr_solve(&geom, &params, hz_to_omega(f)).unwrap().reflectance();
    assert!((r - direct).abs() <= 1e-11 * direct.max(1e-3), "{r} vs {direct}");
}

#[test]
fn propagate_rows_equal_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "p.csv");
    let s = run_from(["spp", "propagate", "--points", "7", "--out", &o]).unwrap();
    assert_eq!(s.rows, 35);
    let (cols, data) = rows(&s.output);
    assert_eq!(cols, ["beta", "g", "k0kappa2_x", "F_initial", "F_matched"]);
    assert_eq!(data[0][0].parse::<f64>().unwrap(), 1.0);
    assert_eq!(data[0][3].parse::<f64>().unwrap(), 1.0);
    assert_eq!(data[0][4].parse::<f64>().unwrap(), 1.0);
    let c = CouplerSpec::from_beta(Complex64::new(0.9, 0.0)).unwrap();
    let ys = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let fm = fidelity_vs_distance(Complex64::new(3.0, 0.0), &c, &ys, Reference::AmplitudeMatched).unwrap();
    for (j, row) in data.iter().filter(|r| r[0].parse::<f64>().unwrap() == 0.9).enumerate() {
        assert_eq!(row[4], format!("{:.12e}", fm[j]));
    }
}

#[test]
fn dispersion_flags_unbound_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "d.csv");
    let s = run_from(["spp", "dispersion", "--points", "5", "--out", &o]).unwrap();
    assert_eq!(s.rows, 10);
    let (cols, data) = rows(&s.output);
    let sup = cols.iter().position(|c| c == "supported").unwrap();
    let pol = cols.iter().position(|c| c == "pol").unwrap();
    // One polarization binds at each frequency away from the switching point.
    for pair in data.chunks(2) {
        assert_eq!(pair[0][pol], "TM");
        assert_ne!(pair[0][sup], pair[1][sup]);
    }
    assert!(!s.warnings.is_empty());
}

#[test]
fn qec_runs_are_byte_identical_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &str, t: &str| {
        vec![
            "qec".to_string(), "--seed".into(), "11".into(), "--trajectories".into(), "12".into(), "--p".into(), "0,1".into(),
            "--checkpoints".into(), "3".into(), "--threads".into(), t.into(), "--out".into(), o.into(),
        ]
    };
    let (a, b) = (out(dir.path(), "a.csv"), out(dir.path(), "b.csv"));
    assert!(spp().args(args(&a, "1")).status().unwrap().success());
    assert!(spp().args(args(&b, "2")).status().unwrap().success());
    let strip = |p: &str| std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    let (_, data) = rows(Path::new(&a));
    assert_eq!(data.len(), 8);
    let manifest: toml::Table = std::fs::read_to_string(dir.path().join("a.manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["seed"].as_str(), Some("11"));
    assert!(dir.path().join("a.orth.csv").exists());
}
