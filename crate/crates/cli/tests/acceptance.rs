//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Artifacts land in the cargo target tmp
//! directory under `acceptance/`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use epsinit::init::{q_epsilon_fast, q_epsilon_naive, w_epsilon};
use epsinit::linalg::{gram_schmidt_qr, j_epsilon, Matrix};
use epsinit::nn::{build, Activation, Gradients, Network, NetworkConfig};
use epsinit::props::{check_w_sum_constancy, run_figure1, SignalMatrix, InputDistribution};
use epsinit::rng::RngStream;
use epsinit::{InitKind, InitMethod};

const EXAMPLE1_3X2: [[f64; 2]; 3] = [[-0.0829, 0.9097], [0.9081, -0.0993], [0.4106, 0.4032]];

const EXAMPLE2_8X5: [[f64; 5]; 8] = [
    [0.8581, -0.1419, -0.1419, -0.1419, 0.3581],
    [-0.1419, 0.8581, -0.1419, -0.1419, 0.3581],
    [-0.1419, -0.1419, 0.8581, -0.1419, 0.3581],
    [-0.1419, -0.1419, -0.1419, 0.8581, 0.3581],
    [0.3581, 0.3581, 0.3581, 0.3581, -0.6419],
    [0.1581, 0.1581, 0.1581, 0.1581, 0.1581],
    [0.1581, 0.1581, 0.1581, 0.1581, 0.1581],
    [0.1581, 0.1581, 0.1581, 0.1581, 0.1581],
];

const GRID_DIMS: [usize; 8] = [1, 2, 3, 5, 8, 16, 64, 200];
const GRID_EPS: [f64; 2] = [1e-4, 0.1];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn artifacts() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the binary from the workspace root; returns (success, stderr).
fn epsinit(args: &[&str]) -> (bool, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_epsinit")).args(args).current_dir(root()).output().unwrap();
    (o.status.success(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn max_diff<const C: usize>(m: &Matrix, expected: &[[f64; C]]) -> f64 {
    let mut worst: f64 = if m.shape() == (expected.len(), C) { 0.0 } else { f64::INFINITY };
    for (i, row) in expected.iter().enumerate().take(m.rows()) {
        for (j, &e) in row.iter().enumerate().take(m.cols()) {
            worst = worst.max((m[(i, j)] - e).abs());
        }
    }
    worst
}

fn c1_worked_examples(out: &Path) -> Verdict {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (args, file) in [(["3", "2", "0.01"], "example1_3x2.csv"), (["8", "5", "0.0001"], "example2_8x5.csv")] {
        let path = out.join(file);
        let ((ok, err), t) = timed(|| {
            epsinit(&["gen-matrix", args[0], args[1], args[2], "--out", path.to_str().unwrap()])
        });
        if !ok {
            return verdict(false, format!("gen-matrix {} failed: {err}", args.join(" ")));
        }
        slowest = slowest.max(t);
        let m = Matrix::read_csv(&path).unwrap();
        let d = if args[0] == "3" { max_diff(&m, &EXAMPLE1_3X2) } else { max_diff(&m, &EXAMPLE2_8X5) };
        worst = worst.max(d);
    }
    let passed = worst <= 1e-3 && slowest < Duration::from_secs(1);
    verdict(passed, format!("max |Δ| {worst:.2e} (≤ 1e-3), slowest call {:.3}s (< 1 s)", slowest.as_secs_f64()))
}

fn c2_orthogonality() -> Verdict {
    let (worst, t) = timed(|| {
        let mut worst = 0.0f64;
        for eps in GRID_EPS {
            for m in GRID_DIMS {
                for n in GRID_DIMS {
                    let w = w_epsilon(m, n, eps).unwrap();
                    let tall = if m >= n { w } else { w.transpose() };
                    let g = tall.gram();
                    worst = worst.max(g.max_abs_diff(&Matrix::identity(g.rows())));
                }
            }
        }
        worst
    });
    let passed = worst <= 1e-9 && t < Duration::from_secs(10);
    verdict(passed, format!("max ‖GᵀG − I‖ {worst:.2e} (≤ 1e-9), {:.2}s (< 10 s)", t.as_secs_f64()))
}

fn c3_column_sums() -> Verdict {
    let ((first, rest, refined), t) = timed(|| {
        let (mut first, mut rest, mut refined) = (0.0f64, 0.0f64, 0.0f64);
        for eps in [1e-4, 1e-2, 0.1] {
            for m in 2..=64usize {
                let mf = m as f64;
                let closed = (mf + eps) / (eps * eps + 2.0 * eps + mf).sqrt();
                let naive = gram_schmidt_qr(&j_epsilon(m, eps).unwrap()).unwrap().q;
                for q in [naive, q_epsilon_fast(m, eps).unwrap()] {
                    let s = q.column_sums();
                    first = first.max((s[0] - closed).abs());
                    for (j, &v) in s.iter().enumerate().skip(1) {
                        // j is 0-based, so column j+1 has bound ε/√j
                        rest = rest.max(v.abs() / eps);
                        refined = refined.max(v.abs() / (eps / (j as f64).sqrt()));
                    }
                }
            }
        }
        (first, rest, refined)
    });
    let passed = first <= 1e-10 && rest <= 1.0 && refined <= 1.0 && t < Duration::from_secs(5);
    verdict(
        passed,
        format!(
            "⟨q₁,1⟩ error {first:.2e} (≤ 1e-10), max |⟨q_j,1⟩|/ε {rest:.3} (≤ 1), refined ratio {refined:.3} (≤ 1), {:.2}s (< 5 s)",
            t.as_secs_f64()
        ),
    )
}

fn best_time(m: usize, reps: usize) -> Duration {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(q_epsilon_fast(m, 0.1).unwrap());
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn c4_oracle_equivalence() -> Verdict {
    let ((worst, ratio), t) = timed(|| {
        let mut worst = 0.0f64;
        for eps in [1e-4, 1e-2, 0.1] {
            for m in 2..=256 {
                let fast = q_epsilon_fast(m, eps).unwrap();
                let naive = q_epsilon_naive(m, eps).unwrap();
                worst = worst.max(fast.max_abs_diff(&naive));
            }
        }
        let ratio = best_time(256, 50).as_secs_f64() / best_time(128, 50).as_secs_f64();
        (worst, ratio)
    });
    let passed = worst <= 1e-8 && ratio < 5.0 && t < Duration::from_secs(30);
    verdict(
        passed,
        format!(
            "max |fast − naive| {worst:.2e} (≤ 1e-8), time(256)/time(128) {ratio:.2} (< 5), {:.2}s (< 30 s)",
            t.as_secs_f64()
        ),
    )
}

fn c5_sum_bound() -> Verdict {
    let mut worst_ratio = 0.0f64;
    let mut failed = Vec::new();
    for eps in GRID_EPS {
        for m in GRID_DIMS {
            for n in GRID_DIMS {
                let r = check_w_sum_constancy(m, n, eps).unwrap();
                if r.bound > 0.0 {
                    worst_ratio = worst_ratio.max(r.max_violation / r.bound);
                }
                if !r.passed {
                    failed.push(format!("({m},{n},{eps})"));
                }
            }
        }
    }
    let detail = format!("worst deviation/bound {worst_ratio:.3}, failing cells: {}", failed.len());
    verdict(failed.is_empty(), detail)
}

fn c6_signal(out: &Path) -> Verdict {
    let path = out.join("propagate.csv");
    let ((ok, err), t) = timed(|| epsinit(&["propagate", "--eps", "0.1", "--seed", "0", "--out", path.to_str().unwrap()]));
    if !ok {
        return verdict(false, format!("propagate failed: {err}"));
    }
    let rows = run_figure1(0.1, 0).unwrap();
    let pick = |m: SignalMatrix| {
        rows.iter().filter(move |r| r.matrix == m && r.distribution == InputDistribution::Uniform).map(|r| r.stats)
    };
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let prop_mean = mean(pick(SignalMatrix::Proposed).map(|s| s.mean_out).collect());
    let prop_pos = mean(pick(SignalMatrix::Proposed).map(|s| s.positive_fraction).collect());
    let prop_min = pick(SignalMatrix::Proposed).map(|s| s.positive_fraction).fold(1.0, f64::min);
    let gauss_pos = mean(pick(SignalMatrix::Gaussian).map(|s| s.positive_fraction).collect());
    let orth_pos = mean(pick(SignalMatrix::Orthogonal).map(|s| s.positive_fraction).collect());
    let passed = (prop_mean - 0.35).abs() <= 0.05
        && prop_pos >= 0.95
        && (gauss_pos - 0.5).abs() <= 0.1
        && (orth_pos - 0.5).abs() <= 0.1
        && t < Duration::from_secs(5);
    verdict(
        passed,
        format!(
            "proposed mean(Wx) {prop_mean:.4} (0.35 ± 0.05), positive fraction {prop_pos:.3} (≥ 0.95, trial minimum {prop_min:.3}); \
             gaussian {gauss_pos:.3}, orthogonal {orth_pos:.3} (0.5 ± 0.1); {:.2}s (< 5 s)",
            t.as_secs_f64()
        ),
    )
}

fn numeric_grad(net: &Network, x: &Matrix, y: &[usize], h: f64) -> Gradients {
    let loss = |n: &Network| n.loss(&n.forward(x).unwrap(), y);
    let mut g = Gradients { weights: net.weights.clone(), biases: net.biases.clone() };
    for l in 0..net.weights.len() {
        for i in 0..net.weights[l].rows() {
            for j in 0..net.weights[l].cols() {
                let (mut p, mut m) = (net.clone(), net.clone());
                p.weights[l] = bump(&net.weights[l], i, j, h);
                m.weights[l] = bump(&net.weights[l], i, j, -h);
                g.weights[l] = bump(&g.weights[l], i, j, (loss(&p) - loss(&m)) / (2.0 * h) - g.weights[l][(i, j)]);
            }
        }
        for k in 0..net.biases[l].len() {
            let (mut p, mut m) = (net.clone(), net.clone());
            p.biases[l][k] += h;
            m.biases[l][k] -= h;
            g.biases[l][k] = (loss(&p) - loss(&m)) / (2.0 * h);
        }
    }
    g
}

fn bump(w: &Matrix, i: usize, j: usize, delta: f64) -> Matrix {
    Matrix::from_fn(w.rows(), w.cols(), |a, b| w[(a, b)] + if (a, b) == (i, j) { delta } else { 0.0 })
}

fn c7_gradient_check() -> Verdict {
    let (per_act, t) = timed(|| {
        let mut out = Vec::new();
        for act in Activation::ALL {
            let cfg = NetworkConfig::new(vec![7, 5, 4, 3], act, InitMethod::new(InitKind::Xavier).with_seed(11));
            let net = build(&cfg).unwrap();
            let y = [0, 1, 2, 2, 1, 0];
            // random batches until no hidden pre-activation sits within 1e-3 of a kink
            let (x, pass) = (0u64..)
                .map(|s| {
                    let mut r = RngStream::new(1000 + s);
                    let x = Matrix::from_fn(6, 7, |_, _| r.standard_normal());
                    let pass = net.forward(&x).unwrap();
                    (x, pass)
                })
                .find(|(_, p)| p.z[..2].iter().flat_map(|z| z.as_slice()).all(|v| v.abs() > 1e-3))
                .unwrap();
            let g = net.backward(&pass, &y).unwrap();
            let n = numeric_grad(&net, &x, &y, 1e-5);
            let pairs = g
                .weights
                .iter()
                .zip(&n.weights)
                .flat_map(|(a, b)| a.as_slice().iter().zip(b.as_slice()))
                .chain(g.biases.iter().zip(&n.biases).flat_map(|(a, b)| a.iter().zip(b)));
            let rel = pairs.map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-6)).fold(0.0, f64::max);
            out.push((act, rel));
        }
        out
    });
    let worst = per_act.iter().map(|p| p.1).fold(0.0, f64::max);
    let list: Vec<String> = per_act.iter().map(|(a, r)| format!("{a} {r:.1e}")).collect();
    verdict(
        worst <= 1e-4 && t < Duration::from_secs(5),
        format!("max relative error {} (≤ 1e-4), {:.2}s (< 5 s)", list.join(", "), t.as_secs_f64()),
    )
}

/// Runs a built-in experiment through the binary; returns the summary
/// medians keyed by method, or an error string.
fn experiment(name: &str, sets: &[&str], out: &Path, tag: &str) -> Result<(Vec<(String, f64)>, Duration), String> {
    let table = out.join(format!("{tag}.csv"));
    let summary = out.join(format!("{tag}.summary.csv"));
    let mut args = vec!["experiment", "--spec", name];
    for s in sets {
        args.extend(["--set", s]);
    }
    let (t_s, s_s) = (table.to_str().unwrap().to_string(), summary.to_str().unwrap().to_string());
    args.extend(["--out", &t_s, "--summary", &s_s]);
    let ((ok, err), t) = timed(|| epsinit(&args));
    if !ok {
        return Err(format!("experiment {name} failed: {err}"));
    }
    let text = fs::read_to_string(&summary).map_err(|e| e.to_string())?;
    let medians = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[f.len() - 1].parse().unwrap())
        })
        .collect();
    Ok((medians, t))
}

fn get(medians: &[(String, f64)], method: &str) -> f64 {
    medians.iter().find(|(m, _)| m == method).map_or(f64::NAN, |p| p.1)
}

fn c8_iris(out: &Path) -> Verdict {
    let (med, t) = match experiment("iris-deep", &[], out, "iris-deep") {
        Ok(v) => v,
        Err(e) => return verdict(false, e),
    };
    let p = get(&med, "proposed");
    let others = ["orthogonal", "he", "rai"].map(|m| (m, get(&med, m)));
    let gap = others.iter().map(|o| p - o.1).fold(f64::INFINITY, f64::min);
    let list: Vec<String> = others.iter().map(|(m, v)| format!("{m} {v:.3}")).collect();
    verdict(
        p >= 0.85 && gap >= 0.20 && t < Duration::from_secs(600),
        format!(
            "median val_acc proposed {p:.3} (≥ 0.85), {}; min gap {gap:.3} (≥ 0.20); zero {:.3}; {:.0}s (< 10 min)",
            list.join(", "),
            get(&med, "zero"),
            t.as_secs_f64()
        ),
    )
}

const C9_SETS: [&str; 2] = ["grid.methods=proposed, xavier, he, orthogonal", "grid.per_class=4"];

fn c9_few_shot(out: &Path) -> Verdict {
    let (med, t) = match experiment("table1-smoke", &C9_SETS, out, "few-shot") {
        Ok(v) => v,
        Err(e) => return verdict(false, e),
    };
    let p = get(&med, "proposed");
    let others = ["xavier", "he", "orthogonal"].map(|m| (m, get(&med, m)));
    let gap = others.iter().map(|o| p - o.1).fold(f64::INFINITY, f64::min);
    let list: Vec<String> = others.iter().map(|(m, v)| format!("{m} {v:.3}")).collect();
    verdict(
        gap >= 0.10 && t < Duration::from_secs(600),
        format!(
            "k=4, 2000 validation rows: median val_acc proposed {p:.3}, {}; min gap {gap:.3} (≥ 0.10); {:.0}s (< 10 min)",
            list.join(", "),
            t.as_secs_f64()
        ),
    )
}

const C10_SETS: [&str; 2] = ["grid.methods=proposed, xavier, he, orthogonal, identity", "network.activations=relu"];

fn c10_depth(out: &Path) -> Verdict {
    let (med, t) = match experiment("table2-activation", &C10_SETS, out, "depth") {
        Ok(v) => v,
        Err(e) => return verdict(false, e),
    };
    let p = get(&med, "proposed");
    let others = ["xavier", "he", "orthogonal", "identity"].map(|m| (m, get(&med, m)));
    let worst = others.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
    let list: Vec<String> = others.iter().map(|(m, v)| format!("{m} {v:.3}")).collect();
    verdict(
        p >= 0.60 && worst <= 0.25 && t < Duration::from_secs(1800),
        format!("val_acc proposed {p:.3} (≥ 0.60), {} (each ≤ 0.25); {:.0}s (< 30 min)", list.join(", "), t.as_secs_f64()),
    )
}

/// Reruns every artifact-producing command into a second directory and
/// compares bytes.
fn c11_determinism(first: &Path) -> Verdict {
    let second = first.join("rerun");
    fs::create_dir_all(&second).unwrap();
    let s = |p: PathBuf| p.to_str().unwrap().to_string();
    let runs: Vec<(Vec<String>, Vec<&str>)> = vec![
        (
            vec!["gen-matrix".into(), "3".into(), "2".into(), "0.01".into(), "--out".into(), s(second.join("example1_3x2.csv"))],
            vec!["example1_3x2.csv"],
        ),
        (
            vec!["gen-matrix".into(), "8".into(), "5".into(), "0.0001".into(), "--out".into(), s(second.join("example2_8x5.csv"))],
            vec!["example2_8x5.csv"],
        ),
        (
            vec!["propagate".into(), "--eps".into(), "0.1".into(), "--seed".into(), "0".into(), "--out".into(), s(second.join("propagate.csv"))],
            vec!["propagate.csv"],
        ),
    ];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for (args, files) in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (ok, err) = epsinit(&args);
        if !ok {
            return verdict(false, format!("rerun of {} failed: {err}", args[0]));
        }
        for f in files {
            compared += 1;
            if fs::read(first.join(f)).ok() != fs::read(second.join(f)).ok() {
                mismatched.push(f.to_string());
            }
        }
    }
    // experiments are rerun on a different worker count
    for (name, sets, tag) in [
        ("iris-deep", &[][..], "iris-deep"),
        ("table1-smoke", &C9_SETS[..], "few-shot"),
        ("table2-activation", &C10_SETS[..], "depth"),
    ] {
        let mut sets: Vec<&str> = sets.to_vec();
        sets.push("name=rerun");
        let mut args = vec!["experiment", "--spec", name, "--threads", "2"];
        for x in &sets {
            args.extend(["--set", x]);
        }
        let (t_s, s_s) = (s(second.join(format!("{tag}.csv"))), s(second.join(format!("{tag}.summary.csv"))));
        args.extend(["--out", &t_s, "--summary", &s_s]);
        let (ok, err) = epsinit(&args);
        if !ok {
            return verdict(false, format!("rerun of {name} failed: {err}"));
        }
        // the experiment column carries the spec name; compare everything else
        let strip = |p: PathBuf| -> Option<Vec<String>> {
            let text = fs::read_to_string(p).ok()?;
            Some(text.lines().map(|l| l.split_once(',').map_or(l, |x| x.1).to_string()).collect())
        };
        compared += 2;
        if strip(first.join(format!("{tag}.csv"))) != strip(second.join(format!("{tag}.csv"))) {
            mismatched.push(format!("{tag}.csv"));
        }
        if fs::read(first.join(format!("{tag}.summary.csv"))).ok() != fs::read(second.join(format!("{tag}.summary.csv"))).ok() {
            mismatched.push(format!("{tag}.summary.csv"));
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{compared} artifacts compared, mismatches: {}", if mismatched.is_empty() { "none".into() } else { mismatched.join(", ") }),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let out = artifacts();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("1 worked-example fidelity", Box::new(|| c1_worked_examples(&out))),
        ("2 orthogonality", Box::new(c2_orthogonality)),
        ("3 column sums of Q", Box::new(c3_column_sums)),
        ("4 fast path equals naive QR", Box::new(c4_oracle_equivalence)),
        ("5 row/column sum bound", Box::new(c5_sum_bound)),
        ("6 positive signal propagation", Box::new(|| c6_signal(&out))),
        ("7 gradient check", Box::new(c7_gradient_check)),
        ("8 iris deep-narrow", Box::new(|| c8_iris(&out))),
        ("9 few-shot MNIST", Box::new(|| c9_few_shot(&out))),
        ("10 depth-failure contrast", Box::new(|| c10_depth(&out))),
        ("11 determinism", Box::new(|| c11_determinism(&out))),
    ];
    let mut failures = 0;
    for (name, check) in &criteria {
        let v = check();
        if !v.passed {
            failures += 1;
        }
        println!("{} criterion {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failures} failed, artifacts in {}", criteria.len() - failures, out.display());
    if failures > 0 {
        std::process::exit(1);
    }
}
