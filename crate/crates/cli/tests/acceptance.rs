use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

/// Every JSON and CSV file of an output directory, by name.
fn tabular_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "csv")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn run(args: &[&str], out: &Path, threads: &str) {
    let o = Command::new(env!("CARGO_BIN_EXE_scissor"))
        .args(args)
        .arg("--out")
        .arg(out)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env("SCISSOR_THREADS", threads)
        .output()
        .unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let design_dir = root.path().join("design");
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("morph", vec!["morph", "--target", "spiral:c=1.5", "--units", "16", "--iterations", "600", "--seed", "3"]),
        (
            "write",
            vec![
                "write", "--target", "../../data/letter_d.csv", "--grid", "6:10:2", "--restarts", "3", "--sections", "3",
                "--iterations", "150", "--samples", "100", "--optimize-psi", "--seed", "7",
            ],
        ),
        ("closure", vec!["analyze", "closure", "--alpha", "0.55,0.7", "--units", "4:12"]),
        ("sensitivity", vec!["analyze", "sensitivity", "--units", "20,40", "--samples", "60", "--seed", "5"]),
        ("perturbation", vec!["analyze", "perturbation"]),
    ];
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for (name, args) in &commands {
        let a = root.path().join(format!("{name}-a"));
        let b = root.path().join(format!("{name}-b"));
        run(args, &a, "1");
        run(args, &b, "3");
        let (fa, fb) = (tabular_outputs(&a), tabular_outputs(&b));
        if fa.keys().ne(fb.keys()) {
            mismatched.push(format!("{name}: file sets differ"));
        }
        for (file, bytes) in &fa {
            compared += 1;
            if fb.get(file) != Some(bytes) {
                mismatched.push(format!("{name}/{file}"));
            }
        }
        if *name == "write" {
            fs::create_dir_all(&design_dir).unwrap();
            fs::copy(a.join("design.json"), design_dir.join("design.json")).unwrap();
        }
    }
    let design = design_dir.join("design.json");
    let sim = ["simulate", "--design", design.to_str().unwrap()];
    let (a, b) = (root.path().join("sim-a"), root.path().join("sim-b"));
    run(&sim, &a, "1");
    run(&sim, &b, "2");
    for (file, bytes) in tabular_outputs(&a) {
        compared += 1;
        if tabular_outputs(&b).get(&file) != Some(&bytes) {
            mismatched.push(format!("simulate/{file}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = mismatched.is_empty() && compared > 0;
    println!(
        "{} criterion 10 (determinism): {compared} JSON/CSV files compared across reruns with 1 vs 2-3 threads, {} differ{}; {elapsed:.2} s",
        if ok { "PASS" } else { "FAIL" },
        mismatched.len(),
        if mismatched.is_empty() { String::new() } else { format!(" ({})", mismatched.join(", ")) }
    );
    assert!(ok);
}
