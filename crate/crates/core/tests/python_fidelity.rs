//! Executes the rendered Python objectives with a real interpreter and
//! compares them against `ProblemInstance::evaluate`. Skipped when
//! `python3` with numpy is not available.

use std::io::Write;
use std::process::{Command, Stdio};

use optforge::problem::{synthesize_instance, BasicFunction, ProblemInstance, SynthParams, TransformSpec};
use optforge::render::{render_constraints, render_objective, WritingStyle};
use optforge::seed;
use rand::Rng;

const HARNESS: &str = r#"
import json, sys
pts = json.loads(sys.stdin.read())
names = [n for n in sorted(globals()) if n[:1] in "gh" and n[1:].isdigit()]
names.sort(key=lambda n: (n[0], int(n[1:])))
out = []
for p in pts:
    out.append([objective(p)] + [globals()[n](p) for n in names])
print(json.dumps(out))
"#;

fn python_ok() -> bool {
    Command::new("python3")
        .args(["-c", "import numpy"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn run_python(source: &str, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let file = tempfile::Builder::new().suffix(".py").tempfile().unwrap();
    std::fs::write(file.path(), format!("{source}\n{HARNESS}")).unwrap();
    let mut child = Command::new("python3")
        .arg(file.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(serde_json::to_string(points).unwrap().as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(
        out.status.success(),
        "python failed:\n{}\n--- source ---\n{source}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn check(inst: &ProblemInstance, rng: &mut seed::Rng) {
    let points: Vec<Vec<f64>> = (0..50)
        .map(|_| inst.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let expected: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            let e = inst.evaluate(x).unwrap();
            let mut row = vec![e.f];
            row.extend(e.g);
            row.extend(e.h);
            row
        })
        .collect();
    for style in [WritingStyle::PY_LOOP, WritingStyle::PY_VECTOR, WritingStyle::PY_MODULAR] {
        let mut source = render_objective(inst, style, 0);
        if let Some(c) = render_constraints(inst, style, 0) {
            source.push('\n');
            source.push_str(&c);
        }
        let got = run_python(&source, &points);
        for (row, want) in got.iter().zip(&expected) {
            assert_eq!(row.len(), want.len(), "{} {style}", inst.id);
            for (a, b) in row.iter().zip(want) {
                assert!(close(*a, *b), "{} {style}: python {a} vs {b}\n{source}", inst.id);
            }
        }
    }
}

#[test]
fn rendered_python_matches_evaluate() {
    if !python_ok() {
        eprintln!("python3 with numpy not found; skipping");
        return;
    }
    let mut rng = seed::rng(2024);
    for f in BasicFunction::ALL {
        let mut t = TransformSpec::identity(5);
        t.shift = vec![0.3, -0.2, 0.1, 0.0, 0.4];
        check(&ProblemInstance::single(f.name(), f, t, 1000).unwrap(), &mut rng);
    }
    for i in 0..24u64 {
        let d = 2 + (i as usize * 7) % 12;
        let k = 1 + (i as usize) % 4;
        let inst = synthesize_instance(SynthParams::new(d, k.min(d), i % 2 == 0), 500 + i).unwrap();
        check(&inst, &mut rng);
    }
}
