//! Acceptance suite. Run with `cargo test -p hlv-cli --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hlv_core::agreement::{f1_score, ConfusionCounts};
use hlv_core::disagreement::{bernoulli_jsd, brier, jsd};
use hlv_core::frames::{plan_frames, SamplingMode};
use hlv_core::ingest::{parse_annotations, parse_predictions};
use hlv_core::model::{AnnotationTable, QuestionSpec, SoftLabelPair};
use hlv_core::reliability::{krippendorff_alpha, partition_questions, ReliabilityMethod, ReliabilityScore};
use hlv_core::report::{emit_machine, parse_machine};
use hlv_core::synth::{generate_panel, PanelSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

const MODEL_FILES: [&str; 3] = ["gemma-3-4b.jsonl", "gemma-3-12b.jsonl", "qwen2.5-vl-7b.jsonl"];

fn evaluate(dir: &Path, format: &str) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hlv"));
    cmd.arg("evaluate").arg(dir.join("annotations.csv"));
    for f in MODEL_FILES {
        cmd.arg(dir.join(f));
    }
    cmd.arg("--config")
        .arg(dir.join("config.toml"))
        .args(["--format", format]);
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("evaluate failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

// Criterion 1 oracle: alpha straight from ordered value pairs, no coincidence matrix.
fn pairwise_alpha(rows: &[Vec<Option<bool>>]) -> Option<f64> {
    let units: Vec<Vec<bool>> = rows
        .iter()
        .map(|r| r.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|u| u.len() >= 2)
        .collect();
    if units.is_empty() {
        return None;
    }
    let pooled: Vec<bool> = units.concat();
    let n = pooled.len() as f64;
    let mut observed = 0.0;
    for u in &units {
        let mut mismatched = 0.0;
        for (i, a) in u.iter().enumerate() {
            for (j, b) in u.iter().enumerate() {
                if i != j && a != b {
                    mismatched += 1.0;
                }
            }
        }
        observed += mismatched / (u.len() - 1) as f64;
    }
    let mut expected = 0.0;
    for (i, a) in pooled.iter().enumerate() {
        for (j, b) in pooled.iter().enumerate() {
            if i != j && a != b {
                expected += 1.0;
            }
        }
    }
    if expected == 0.0 {
        return Some(1.0);
    }
    Some(1.0 - (observed / n) / (expected / (n * (n - 1.0))))
}

fn to_table(rows: &[Vec<Option<bool>>]) -> AnnotationTable {
    let labels: Vec<Vec<Option<&str>>> = rows
        .iter()
        .map(|r| r.iter().map(|c| c.map(|v| if v { "yes" } else { "no" })).collect())
        .collect();
    AnnotationTable::from_options(
        "q",
        (0..rows.len()).map(|i| format!("i{i}")).collect(),
        (0..rows[0].len()).map(|a| format!("a{a}")).collect(),
        &labels,
    )
    .unwrap()
}

fn alpha_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut compared, mut undefined, mut worst) = (0, 0, 0.0f64);
    for case in 0..1000 {
        let items = rng.gen_range(1..=10);
        let annotators = rng.gen_range(1..=5);
        let missing = rng.gen_range(0.0..=0.4);
        let rows: Vec<Vec<Option<bool>>> = (0..items)
            .map(|_| {
                (0..annotators)
                    .map(|_| (!rng.gen_bool(missing)).then(|| rng.gen_bool(0.5)))
                    .collect()
            })
            .collect();
        match (pairwise_alpha(&rows), krippendorff_alpha(&to_table(&rows))) {
            (Some(want), Ok(got)) => {
                let err = (want - got.value).abs();
                ensure!(err <= 1e-12, "case {case}: oracle {want}, got {}", got.value);
                worst = worst.max(err);
                compared += 1;
            }
            (None, Err(_)) => undefined += 1,
            (want, got) => return Err(format!("case {case}: oracle {want:?}, got {got:?}")),
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{compared} compared, {undefined} undefined on both sides, max error {worst:.1e}, {elapsed:.2?}"
    ))
}

fn alpha_boundaries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..200 {
        let items = rng.gen_range(1..=20);
        let annotators = rng.gen_range(2..=6);
        let rows: Vec<Vec<Option<bool>>> = (0..items)
            .map(|_| {
                let v = rng.gen_bool(0.5);
                let mut row: Vec<Option<bool>> = (0..annotators).map(|_| (!rng.gen_bool(0.3)).then_some(v)).collect();
                row[0] = Some(v);
                row[1] = Some(v);
                row
            })
            .collect();
        let a = krippendorff_alpha(&to_table(&rows)).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(a.value == 1.0, "unanimous case {case}: alpha {}", a.value);
    }
    let q = QuestionSpec::binary("chance");
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let spec = PanelSpec::uniform(500, 5, 0.5, 0.0, seed);
        let table = generate_panel(&q, &spec).map_err(|e| e.to_string())?;
        let a = krippendorff_alpha(&table).map_err(|e| e.to_string())?.value;
        ensure!(a.abs() < 0.1, "chance panel seed {seed}: alpha {a}");
        worst = worst.max(a.abs());
    }
    Ok(format!(
        "200 unanimous tables at 1.0, 20 chance panels max |alpha| {worst:.4}"
    ))
}

fn partition_reproduction() -> Outcome {
    let alphas = [
        ("is_political", 0.81),
        ("is_saxony", 0.74),
        ("is_hedonic_entertainment", 0.55),
        ("is_intolerant", 0.48),
        ("is_eudaimonic_entertainment", 0.38),
        ("on_the_boundary", 0.667),
    ];
    let scores: Vec<ReliabilityScore> = alphas
        .iter()
        .map(|&(q, v)| ReliabilityScore {
            question: q.into(),
            method: ReliabilityMethod::KrippendorffAlpha,
            value: v,
            n_pairable: 0,
            n_units: 0,
        })
        .collect();
    let p = partition_questions(&scores, 0.667);
    ensure!(
        p.agreement == ["is_political", "is_saxony", "on_the_boundary"],
        "agreement {:?}",
        p.agreement
    );
    ensure!(
        p.disagreement
            == [
                "is_hedonic_entertainment",
                "is_intolerant",
                "is_eudaimonic_entertainment"
            ],
        "disagreement {:?}",
        p.disagreement
    );
    Ok("2 agree + boundary, 3 disagree".into())
}

fn metric_hand_values() -> Outcome {
    let b = brier(&[SoftLabelPair::from_fractions("x", 0.6, 1.0)]).map_err(|e| e.to_string())?;
    ensure!((b - 0.16).abs() <= 1e-9, "brier {b}");
    let d = jsd(&[SoftLabelPair::from_fractions("x", 0.4, 0.6)]).map_err(|e| e.to_string())?;
    ensure!((d - 0.029_049_405_545_331_364).abs() <= 1e-9, "jsd {d}");
    let s1 = bernoulli_jsd(1.0, 0.0);
    let s2 = bernoulli_jsd(0.0, 1.0);
    ensure!(
        (s1 - 1.0).abs() <= 1e-9 && (s2 - 1.0).abs() <= 1e-9,
        "saturation {s1} {s2}"
    );
    Ok(format!("brier {b}, jsd {d:.6}, saturation {s1}"))
}

fn f1_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let mut draw = || if rng.gen_bool(0.1) { 0 } else { rng.gen_range(0..500) };
        let c = ConfusionCounts::new(draw(), draw(), draw(), draw());
        let (p, r, f) = (c.precision(), c.recall(), c.f1());
        ensure!(p.is_finite() && r.is_finite() && f.is_finite(), "case {case}: {c:?}");
        ensure!(
            p.min(r) - 1e-12 <= f && f <= p.max(r) + 1e-12,
            "case {case}: p {p} r {r} f1 {f}"
        );
    }
    let zero = ConfusionCounts::new(0, 0, 0, 7);
    ensure!(
        zero.precision() == 0.0 && zero.recall() == 0.0 && zero.f1() == 0.0,
        "{zero:?}"
    );
    let no_pred = ConfusionCounts::new(0, 0, 4, 1);
    ensure!(no_pred.precision() == 0.0 && no_pred.f1() == 0.0, "{no_pred:?}");
    let no_pos = ConfusionCounts::new(0, 3, 0, 1);
    ensure!(no_pos.recall() == 0.0 && no_pos.f1() == 0.0, "{no_pos:?}");
    ensure!(f1_score(0.0, 0.0) == 0.0, "f1_score(0, 0)");
    Ok("1000 random counts within bounds, zero denominators give 0".into())
}

fn frame_plan_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut down, mut one) = (0, 0);
    for case in 0..1000 {
        // Log-uniform length so both branches get exercised.
        let total = (10f64.powf(rng.gen_range(0.0..=6.0)).round() as u64).clamp(1, 1_000_000);
        let fps = rng.gen_range(1.0..=120.0);
        let budget = rng.gen_range(1..=256u64);
        let plan = plan_frames(total, fps, budget).map_err(|e| format!("case {case}: {e}"))?;
        let idx = &plan.indices;
        ensure!(
            idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&i| i < total),
            "case {case} ({total}, {fps}, {budget}): indices out of order or range"
        );
        match plan.mode {
            SamplingMode::Downsample => {
                ensure!(idx.len() as u64 == budget, "case {case}: {} of {budget}", idx.len());
                down += 1;
            }
            SamplingMode::OnePerSecond => {
                let bound = (total as f64 / fps).ceil() as usize;
                ensure!(idx.len() <= bound, "case {case}: {} > ceil(D) {bound}", idx.len());
                one += 1;
            }
        }
    }
    let short = plan_frames(300, 30.0, 20).map_err(|e| e.to_string())?;
    ensure!(
        short.indices == (0..10).map(|k| k * 30).collect::<Vec<u64>>(),
        "300/30/20: {:?}",
        short.indices
    );
    let long = plan_frames(1000, 10.0, 20).map_err(|e| e.to_string())?;
    ensure!(
        long.indices == (0..20).map(|k| k * 50).collect::<Vec<u64>>(),
        "1000/10/20: {:?}",
        long.indices
    );
    Ok(format!(
        "{down} downsampled, {one} one-per-second, worked examples exact"
    ))
}

fn shuffled_copy(src: &Path, dst: &Path, rng: &mut ChaCha8Rng) -> Result<(), String> {
    std::fs::create_dir_all(dst).map_err(|e| e.to_string())?;
    std::fs::copy(src.join("config.toml"), dst.join("config.toml")).map_err(|e| e.to_string())?;
    let csv = std::fs::read_to_string(src.join("annotations.csv")).map_err(|e| e.to_string())?;
    let mut lines: Vec<&str> = csv.lines().collect();
    lines[1..].shuffle(rng);
    std::fs::write(dst.join("annotations.csv"), lines.join("\n") + "\n").map_err(|e| e.to_string())?;
    for f in MODEL_FILES {
        let text = std::fs::read_to_string(src.join(f)).map_err(|e| e.to_string())?;
        let mut lines: Vec<&str> = text.lines().collect();
        lines.shuffle(rng);
        std::fs::write(dst.join(f), lines.join("\n") + "\n").map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn end_to_end_determinism() -> Outcome {
    let bundle = fixtures().join("bundle");
    let golden_json = std::fs::read(fixtures().join("golden/report.json")).map_err(|e| e.to_string())?;
    let golden_txt = std::fs::read(fixtures().join("golden/report.txt")).map_err(|e| e.to_string())?;
    for run in 0..2 {
        ensure!(
            evaluate(&bundle, "machine")? == golden_json,
            "run {run}: machine report differs from golden"
        );
        ensure!(
            evaluate(&bundle, "table")? == golden_txt,
            "run {run}: table report differs from golden"
        );
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for perm in 0..5 {
        let dir = tmp.path().join(format!("perm{perm}"));
        shuffled_copy(&bundle, &dir, &mut rng)?;
        ensure!(
            evaluate(&dir, "machine")? == golden_json,
            "permutation {perm}: machine report differs"
        );
        ensure!(
            evaluate(&dir, "table")? == golden_txt,
            "permutation {perm}: table report differs"
        );
    }
    Ok("2 runs and 5 row permutations byte-identical to golden".into())
}

fn format_round_trip() -> Outcome {
    let golden = std::fs::read_to_string(fixtures().join("golden/report.json")).map_err(|e| e.to_string())?;
    let report = parse_machine(&golden).map_err(|e| e.to_string())?;
    let again = emit_machine(&report);
    ensure!(again == golden, "golden emit -> parse -> emit differs");
    ensure!(
        emit_machine(&parse_machine(&again).map_err(|e| e.to_string())?) == again,
        "second round differs"
    );

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path();
    let status = Command::new(env!("CARGO_BIN_EXE_hlv"))
        .args([
            "synth",
            "--items",
            "60",
            "--missing",
            "0.1",
            "--model",
            "synthetic",
            "--seed",
            "8",
            "--out",
        ])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "synth failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );

    let config = hlv_core::Config::load(out.join("config.toml")).map_err(|e| e.to_string())?;
    let qs = config.question_set().map_err(|e| e.to_string())?;
    let csv = std::fs::read_to_string(out.join("annotations.csv")).map_err(|e| e.to_string())?;
    let jsonl = std::fs::read_to_string(out.join("synthetic.jsonl")).map_err(|e| e.to_string())?;
    let anns = parse_annotations(&csv, Some(&qs)).map_err(|e| e.to_string())?;
    let preds = parse_predictions(&jsonl, &qs).map_err(|e| e.to_string())?;
    ensure!(
        anns.diagnostics.is_empty(),
        "annotation diagnostics: {:?}",
        anns.diagnostics
    );
    ensure!(
        preds.diagnostics.is_empty(),
        "prediction diagnostics: {:?}",
        preds.diagnostics
    );

    let run = Command::new(env!("CARGO_BIN_EXE_hlv"))
        .arg("evaluate")
        .arg(out.join("annotations.csv"))
        .arg(out.join("synthetic.jsonl"))
        .arg("--config")
        .arg(out.join("config.toml"))
        .args(["--format", "machine"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        run.status.success(),
        "evaluate failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    let text = String::from_utf8(run.stdout).map_err(|e| e.to_string())?;
    let report = parse_machine(&text).map_err(|e| e.to_string())?;
    ensure!(
        report.diagnostics.is_empty(),
        "report diagnostics: {:?}",
        report.diagnostics
    );
    ensure!(
        emit_machine(&report) == text,
        "synthetic report emit -> parse -> emit differs"
    );
    Ok(format!(
        "golden and synthetic reports stable, synth bundle has 0 diagnostics ({} exclusions)",
        report.exclusions.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 alpha oracle equivalence", alpha_oracle_equivalence),
        ("2 alpha boundary behavior", alpha_boundaries),
        ("3 partition reproduction", partition_reproduction),
        ("4 metric hand values", metric_hand_values),
        ("5 F1 suite", f1_suite),
        ("6 frame-plan properties", frame_plan_properties),
        ("7 end-to-end determinism", end_to_end_determinism),
        ("8 format round trip", format_round_trip),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
