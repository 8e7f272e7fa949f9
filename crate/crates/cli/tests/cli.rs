use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use entropath_cli::store::read_store;
use entropath_cli::PipelineConfig;
use entropath_core::generate_pair;

fn entropath(cmd: &str, config: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_entropath"))
        .args([cmd, "--config"])
        .arg(config)
        .output()
        .expect("binary runs");
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    (out.status.code().unwrap_or(-1), text)
}

fn run_ok(cmd: &str, config: &Path) {
    let (code, text) = entropath(cmd, config);
    assert_eq!(code, 0, "{cmd}: {text}");
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Relative path -> contents for every file under `root`.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn full_workflow_is_deterministic_and_hash_stamped() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    for cmd in ["synth", "ingest", "run", "report"] {
        run_ok(cmd, &cfg);
    }
    let hash = PipelineConfig::default().hash();
    let first = snapshot(dir.path());

    for (path, bytes) in &first {
        if path.ends_with("cfg.toml") {
            continue;
        }
        let text = String::from_utf8(bytes.clone()).unwrap();
        let stamped = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("dot") => text.starts_with(&format!("# config_hash: {hash}\n"))
                || text.starts_with(&format!("// config_hash: {hash}\n")),
            Some("json") => text.contains(&format!("\"config_hash\": \"{hash}\"")),
            _ => false,
        };
        assert!(stamped, "{} lacks the config hash", path.display());
    }

    for cmd in ["synth", "ingest", "run", "report"] {
        run_ok(cmd, &cfg);
    }
    assert_eq!(snapshot(dir.path()), first, "rerun changed the artifact tree");

    run_ok("dag", &cfg);
    assert_eq!(snapshot(dir.path()), first, "dag rebuild differs from the run's graphs");

    let (_, path) = csv_rows(&dir.path().join("out/dag/path.csv"));
    assert!(path.len() >= 2);
    assert_eq!((path[0][1].as_str(), path[0][2].as_str()), ("AEROD_v", "Tropical"));
    let last = path.last().unwrap();
    assert_eq!((last[1].as_str(), last[2].as_str()), ("TREFHT", "Temperate North"));
    assert!(last[3].as_str() <= "1992-06-01" && "1992-06-01" <= last[4].as_str());
}

#[test]
fn report_bundles_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[synth]
variables = [\"TREFHT\"]
regions = [\"Temperate North\", \"Tropical\"]

[[synth.impacts]]
variable = \"TREFHT\"
region = \"Temperate North\"
start_day = 300
end_day = 499
amplitude = -0.6
onset_width = 10
variability = 3.0

[pathway]
source_variable = \"TREFHT\"
source_region = \"Temperate North\"
");
    for cmd in ["synth", "ingest", "run", "report"] {
        run_ok(cmd, &cfg);
    }
    let bundle = dir.path().join("out/report/trefht__temperate_north");
    for f in ["signal.csv", "difference.csv", "entropy.csv", "granularity.csv", "stability.csv"] {
        assert!(bundle.join(f).exists(), "{f} missing");
    }

    let (_, rows) = csv_rows(&bundle.join("difference.csv"));
    assert_eq!(rows.len(), 1461);
    for r in &rows {
        let [mean, lo, hi] = [3, 4, 5].map(|i| r[i].parse::<f64>().unwrap());
        assert!(lo <= mean && mean <= hi, "{r:?}");
    }

    let (_, rows) = csv_rows(&bundle.join("signal.csv"));
    for r in &rows {
        let v: Vec<f64> = r[2..].iter().map(|s| s.parse().unwrap()).collect();
        assert!(v[0] <= v[1] && v[1] <= v[2] && v[3] <= v[4] && v[4] <= v[5]);
    }

    let (header, rows) = csv_rows(&bundle.join("stability.csv"));
    assert_eq!(header.len(), 3 + 9);
    assert!(!rows.is_empty());
    for r in &rows {
        let hits: Vec<u32> = r[3..].iter().map(|s| s.parse().unwrap()).collect();
        assert!(hits.iter().all(|&h| h <= 1));
        assert_eq!(r[2].parse::<u32>().unwrap(), hits.iter().sum::<u32>());
    }

    let (_, rows) = csv_rows(&bundle.join("entropy.csv"));
    let (_, cps) = csv_rows(&dir.path().join("out/changepoints/trefht__temperate_north.csv"));
    let marked: Vec<&String> = rows.iter().filter(|r| r[3] == "1").map(|r| &r[0]).collect();
    assert_eq!(marked, cps.iter().map(|r| &r[0]).collect::<Vec<_>>());

    let (_, rows) = csv_rows(&bundle.join("granularity.csv"));
    for mode in ["daily", "monthly", "entropy"] {
        assert!(rows.iter().any(|r| r[0] == mode));
    }
}

#[test]
fn synth_output_round_trips_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[synth]\nseed = 5\nensemble_size = 4\ndays = 200\nimpacts = []\n");
    run_ok("synth", &cfg);
    run_ok("ingest", &cfg);
    let config = PipelineConfig::from_toml(&fs::read_to_string(&cfg).unwrap()).unwrap();
    let expected = generate_pair(&config.synth).unwrap().pairs;
    let (_, stored) = read_store(&dir.path().join("store")).unwrap();
    let key = |p: &entropath_core::EnsemblePair| (p.variable.clone(), p.region.clone());
    let mut expected = expected;
    expected.sort_by_key(key);
    assert_eq!(stored, expected);
}

#[test]
fn zero_forcing_has_identical_scenarios_and_no_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[synth]\nmagnitude_scale = 0.0\n");
    run_ok("synth", &cfg);
    let (_, rows) = csv_rows(&dir.path().join("data/synth.csv"));
    let mut by_key: BTreeMap<(String, String, String, String), BTreeMap<String, String>> = BTreeMap::new();
    for r in rows {
        by_key
            .entry((r[0].clone(), r[1].clone(), r[2].clone(), r[3].clone()))
            .or_default()
            .insert(r[4].clone(), r[5].clone());
    }
    for v in by_key.values() {
        assert_eq!(v["forced"], v["counterfactual"]);
    }

    run_ok("ingest", &cfg);
    let (code, text) = entropath("run", &cfg);
    assert_eq!(code, 4, "{text}");
    // Artifacts are still written so the failure can be inspected.
    let dot = fs::read_to_string(dir.path().join("out/dag/source_impact.dot")).unwrap();
    assert!(dot.contains("no source-impact path"));
    let (code, _) = entropath("dag", &cfg);
    assert_eq!(code, 4);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["[entropy]\nn = 2\n", "[nonsense]\n", "[pathway]\nsource_region = \"Atlantis\"\n"] {
        let cfg = write_config(dir.path(), text);
        let (code, out) = entropath("synth", &cfg);
        assert_eq!(code, 2, "{text}: {out}");
    }
    let (code, _) = entropath("run", &dir.path().join("missing.toml"));
    assert_eq!(code, 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[paths]\ninputs = [\"in.csv\"]\n");

    let (code, out) = entropath("run", &cfg);
    assert_eq!(code, 3, "missing store: {out}");
    let (code, _) = entropath("ingest", &cfg);
    assert_eq!(code, 3, "missing input");

    let mut csv = String::from("date,variable,region,member,scenario,value\n");
    for (m, s) in [(1, "forced"), (1, "counterfactual")] {
        for d in 1..=9 {
            csv.push_str(&format!("1991-06-0{d},TREFHT,Tropical,{m},{s},1.0\n"));
        }
    }
    csv.push_str("1991-06-03,TREFHT,Tropical,1,forced,2.0\n");
    fs::write(dir.path().join("in.csv"), &csv).unwrap();
    let (code, out) = entropath("ingest", &cfg);
    assert_eq!(code, 3);
    assert!(out.contains("duplicate"), "{out}");

    let (code, out) = entropath("report", &write_config(dir.path(), ""));
    assert_eq!(code, 3, "report before run: {out}");
}
