//! End-to-end command behavior: artifacts, expected dimensions, exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

use lieder::json::{self, family_to_dto, MapFamilyDto};
use lieder::maps::{LinMap, MapFamily};
use lieder::structure::adjoint_map;
use lieder::{scalar, Algebra, Scalar};
use num_traits::{One, Zero};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lieder")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lieder-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String) {
    let output = Command::new(bin()).args(args).output().unwrap();
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
    )
}

fn report_json(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn transpose_family(alg: &Algebra) -> MapFamily {
    let s = alg.blocks().unwrap()[0].size;
    let m = LinMap::from_fn(alg.dim(), |e| {
        let mut out = lieder::Element::zero(alg.dim());
        for i in 0..s {
            for j in 0..s {
                out.coords[j * s + i] = e.coords[i * s + j].clone();
            }
        }
        out
    })
    .unwrap();
    MapFamily::from_upper_levels(alg.dim(), vec![m]).unwrap()
}

fn trace_to_unit_family(alg: &Algebra) -> MapFamily {
    let unit = alg.unit();
    let m = LinMap::from_fn(alg.dim(), |e| {
        let tr = &e.coords[0] + &e.coords[3];
        unit.scale(&tr)
    })
    .unwrap();
    MapFamily::from_upper_levels(alg.dim(), vec![m]).unwrap()
}

fn write_family(dir: &Path, alg: &Algebra, fam: &MapFamily, name: &str) -> PathBuf {
    let path = dir.join(name);
    json::write_json(&path, &family_to_dto(fam, alg.name())).unwrap();
    path
}

#[test]
fn solve_on_the_field_has_vacuous_constraints() {
    let dir = workdir("field");
    let (code, _) = run(&[
        "solve", "--algebra", "matrix:1", "--xi", "1", "--levels", "2",
        "--seed", "1", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = report_json(&dir);
    let levels = report["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    for row in levels {
        assert_eq!(row["solution_dim"], 1);
        assert_eq!(row["constraints"], 0);
    }
}

#[test]
fn verify_passes_on_a_solved_family_and_fails_on_transpose() {
    let dir = workdir("verify");
    let alg = Algebra::matrix(2).unwrap();

    // an inner family passes everything
    let t = alg.basis_element(1);
    let fam = MapFamily::from_upper_levels(4, vec![adjoint_map(&alg, &t).unwrap()]).unwrap();
    let good = write_family(&dir, &alg, &fam, "good.json");
    let (code, _) = run(&[
        "verify", "--algebra", "matrix:2", "--xi", "1", "--family",
        good.to_str().unwrap(), "--seed", "3", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = report_json(&dir);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"].as_bool().unwrap()));

    // transpose violates the bracket rule on zero products: exit 2
    let bad = write_family(&dir, &alg, &transpose_family(&alg), "bad.json");
    let (code, _) = run(&[
        "verify", "--algebra", "matrix:2", "--xi", "1", "--family",
        bad.to_str().unwrap(), "--seed", "3", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let report = report_json(&dir);
    let row = &report["checks"].as_array().unwrap()[0];
    assert_eq!(row["name"], "xi_condition_span_pairs");
    assert_eq!(row["pass"], false);
    assert!(row["witness"].as_str().unwrap().contains("level 1"));
}

#[test]
fn verify_reports_leibniz_failure_without_failing_the_run() {
    // A ξ=1 family built from the unit-valued trace passes the zero-product
    // checks but fails the unrestricted product rule; the run still exits 0.
    let dir = workdir("trace");
    let alg = Algebra::matrix(2).unwrap();
    let path = write_family(&dir, &alg, &trace_to_unit_family(&alg), "trace.json");
    let (code, _) = run(&[
        "verify", "--algebra", "matrix:2", "--xi", "1", "--family",
        path.to_str().unwrap(), "--seed", "5", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = report_json(&dir);
    let checks = report["checks"].as_array().unwrap();
    let by_name = |name: &str| {
        checks
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("missing check {name}"))
    };
    assert_eq!(by_name("xi_condition_span_pairs")["pass"], true);
    assert_eq!(by_name("lie_higher_derivation")["pass"], true);
    assert_eq!(by_name("higher_derivation")["pass"], false);
}

#[test]
fn decompose_emits_the_trace_functional() {
    let dir = workdir("decompose");
    let alg = Algebra::matrix(2).unwrap();
    let t = alg.basis_element(1); // E_12
    let c = scalar(3);
    let l1 = adjoint_map(&alg, &t)
        .unwrap()
        .add(&trace_to_unit_family(&alg).level(1).scale(&c));
    let fam = MapFamily::from_upper_levels(4, vec![l1]).unwrap();
    let path = write_family(&dir, &alg, &fam, "family.json");
    let (code, _) = run(&[
        "decompose", "--algebra", "matrix:2", "--family", path.to_str().unwrap(),
        "--seed", "11", "--samples", "100", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.join("decomposition.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let h = value["blocks"][0]["h"][0].as_array().unwrap();
    // 3·trace on the matrix-unit basis: (3, 0, 0, 3)
    assert_eq!(h[0], "3");
    assert_eq!(h[1], "0");
    assert_eq!(h[2], "0");
    assert_eq!(h[3], "3");
}

#[test]
fn classify_generalized_at_xi_zero() {
    let dir = workdir("classify");
    let alg = Algebra::matrix(2).unwrap();
    let t = alg.basis_element(1);
    let delta = adjoint_map(&alg, &t).unwrap();
    let l1 = delta.add(&LinMap::identity(4));
    let fam = MapFamily::from_upper_levels(4, vec![l1]).unwrap();
    let path = write_family(&dir, &alg, &fam, "family.json");
    let (code, stdout) = run(&[
        "classify", "--algebra", "matrix:2", "--xi", "0", "--family",
        path.to_str().unwrap(), "--seed", "13", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("GeneralizedHigherDerivation"));
    let text = std::fs::read_to_string(dir.join("classification.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["verdict"], "GeneralizedHigherDerivation");
    assert!(value["associate"].is_object());
}

#[test]
fn classify_rejects_xi_one_as_config_error() {
    let dir = workdir("xione");
    let alg = Algebra::matrix(2).unwrap();
    let fam = MapFamily::identity_family(4, 1);
    let path = write_family(&dir, &alg, &fam, "family.json");
    let (code, _) = run(&[
        "classify", "--algebra", "matrix:2", "--xi", "1", "--family",
        path.to_str().unwrap(), "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn inconsistent_prefix_exits_three() {
    // Extending a non-admissible prefix dead-ends with a distinct exit code.
    let dir = workdir("inconsistent");
    let alg = Algebra::matrix(2).unwrap();
    let path = write_family(&dir, &alg, &transpose_family(&alg), "prefix.json");
    let (code, _) = run(&[
        "solve", "--algebra", "matrix:2", "--xi", "2", "--levels", "1",
        "--family", path.to_str().unwrap(), "--seed", "1",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn io_and_parse_errors_exit_four() {
    let dir = workdir("io");
    let (code, _) = run(&[
        "solve", "--algebra", "file:/nonexistent/algebra.json", "--xi", "1",
        "--levels", "1", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);

    let garbled = dir.join("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    let (code, _) = run(&[
        "verify", "--algebra", "matrix:2", "--xi", "1", "--family",
        garbled.to_str().unwrap(), "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);

    let (code, _) = run(&[
        "solve", "--algebra", "matrix:0", "--xi", "1", "--levels", "1",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn algebra_files_round_trip_through_solve() {
    // `solve` writes the algebra it used; `file:` must load it back and
    // produce the same solution dimensions.
    let dir = workdir("algfile");
    let out1 = dir.join("builtin");
    let (code, _) = run(&[
        "solve", "--algebra", "blocks:2,1", "--xi", "1", "--levels", "1",
        "--seed", "9", "--out", out1.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let alg_file = out1.join("algebra.json");
    let out2 = dir.join("fromfile");
    let spec = format!("file:{}", alg_file.display());
    let (code, _) = run(&[
        "solve", "--algebra", &spec, "--xi", "1", "--levels", "1",
        "--seed", "9", "--out", out2.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        std::fs::read(out1.join("level1.json")).unwrap(),
        std::fs::read(out2.join("level1.json")).unwrap()
    );
}

#[test]
fn emitted_family_reparses_and_reverifies() {
    // write → read → verify is a fixed point
    let dir = workdir("fixedpoint");
    let out = dir.join("solve");
    let (code, _) = run(&[
        "solve", "--algebra", "matrix:2", "--xi", "1/2", "--levels", "2",
        "--seed", "21", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let family_path = out.join("family.json");
    let (code, _) = run(&[
        "verify", "--algebra", "matrix:2", "--xi", "1/2", "--family",
        family_path.to_str().unwrap(), "--seed", "22",
        "--out", dir.join("verify").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    // reparse as a typed artifact too
    let dto: MapFamilyDto = json::read_json(&family_path).unwrap();
    let alg = Algebra::matrix(2).unwrap();
    let fam = json::family_from_dto(&dto, &alg).unwrap();
    assert_eq!(fam.order(), 2);
    assert!(fam.level(0).is_identity());
}

#[test]
fn solution_files_carry_exact_rationals() {
    let dir = workdir("rationals");
    let (code, _) = run(&[
        "solve", "--algebra", "matrix:2", "--xi", "1/3", "--levels", "1",
        "--seed", "2", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.join("level1.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["xi"], "1/3");
    let dto: lieder::json::SolutionSpaceDto = serde_json::from_str(&text).unwrap();
    let space = lieder::json::solution_from_dto(&dto).unwrap();
    assert_eq!(space.xi, lieder::frac(1, 3));
    assert!(space
        .homogeneous
        .iter()
        .all(|m| m.rows().iter().all(|r| r.len() == 4)));
    let _ = Scalar::one(); // keep the trait imports honest
    let _ = Scalar::zero();
}
