//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p arrhythmia-risk-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use arrhythmia_risk::dataset::{
    generate_synthetic_cohort, standardize, HubComposition, SignalShape, SynthSpec,
};
use arrhythmia_risk::evaluation::{
    cross_test, cross_validate_complexity, make_folds, metrics, Architecture, ConfusionMatrix,
    CvScoring, NeuralPipeline, ProtocolConfig,
};
use arrhythmia_risk::neural::{cost, gradient, Network, NetworkSpec, TrainingSet};
use arrhythmia_risk::rhythm::{self, FeatureConfig};
use arrhythmia_risk::selection::{
    centered_target, draw_probe, gram_schmidt_rank, probe_rank, probe_risk, SelectionConfig,
};
use arrhythmia_risk::stats::{derive_seed, rng};
use rand::Rng;

use common::*;
use oracles::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_metric_oracle() -> Outcome {
    let r =
        |v: Option<f64>, d: i32| (v.unwrap_or(f64::NAN) * 10f64.powi(d)).round() / 10f64.powi(d);
    let a = metrics(&ConfusionMatrix::new(39, 39, 16, 13));
    let b = metrics(&ConfusionMatrix::new(48, 30, 15, 14));
    let got = [
        r(a.npv, 0),
        r(a.ppv, 0),
        r(a.implant_reduction, 1),
        r(b.npv, 0),
        r(b.ppv, 0),
        r(b.implant_reduction, 1),
    ];
    let want = [71.0, 25.0, 51.4, 76.0, 32.0, 58.9];
    check(
        got == want,
        format!("NPV/PPV/reduction {got:?}, expected {want:?}"),
    )
}

fn c2_non_reproducibility() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md");
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let needles = [
        "NPV 77 ± 13 %",
        "PPV 31 ± 19 %",
        "6.2 ± 1.5",
        "not reproduction targets",
    ];
    let missing: Vec<&str> = needles
        .iter()
        .copied()
        .filter(|n| !text.contains(n))
        .collect();
    check(
        missing.is_empty(),
        if missing.is_empty() {
            "README states the clinical figures are not reproduction targets".into()
        } else {
            format!("README lacks {missing:?}")
        },
    )
}

fn c3_gradients() -> Outcome {
    let mut worst = 0.0f64;
    let mut adhoc = 0;
    for seed in 0..100 {
        let (net, data, lambda) = gradient_case(seed);
        if matches!(net.spec(), NetworkSpec::Adhoc { .. }) {
            adhoc += 1;
        }
        let analytic = gradient(&net, &data, lambda).map_err(|e| e.to_string())?;
        let spec = net.spec().clone();
        let numeric = fd_gradient(
            |p| {
                cost(
                    &Network::new(spec.clone(), p.to_vec()).unwrap(),
                    &data,
                    lambda,
                )
                .unwrap()
            },
            net.params(),
            1e-6,
        );
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    check(
        worst < 1e-6,
        format!("100 cases ({adhoc} ad hoc), max relative error {worst:.2e} (< 1e-6)"),
    )
}

fn c4_gram_schmidt() -> Outcome {
    let mut worst = 0.0f64;
    let mut largest = (0, 0);
    for seed in 0..200 {
        let (cols, y) = selection_instance(derive_seed(4, seed));
        largest = (largest.0.max(y.len()), largest.1.max(cols.len()));
        let names: Vec<String> = (0..cols.len()).map(|j| j.to_string()).collect();
        let got = gram_schmidt_rank(&cols, &names, &y).map_err(|e| e.to_string())?;
        let want = gs_rank_oracle(&cols, &y, 1e-10);
        let same_order = got.len() == want.len()
            && got
                .iter()
                .zip(&want)
                .all(|(g, (j, _))| g.name == j.to_string());
        if !same_order {
            return Err(format!("instance {seed}: order differs from the oracle"));
        }
        for (g, (_, r)) in got.iter().zip(&want) {
            worst = worst.max((g.relevance - r).abs());
        }
    }
    check(
        worst <= 1e-10,
        format!("200 instances (up to {} rows, {} columns), identical order, max relevance gap {worst:.1e}", largest.0, largest.1),
    )
}

fn c5_probe_calibration() -> Outcome {
    let n_triples = 2000;
    let mut first = 0usize;
    for t in 0..n_triples {
        let base = derive_seed(5, t);
        let mut g = rng(base);
        let mut labels: Vec<u8> = (0..20).map(|_| u8::from(g.random_bool(0.5))).collect();
        labels[0] = 0;
        labels[1] = 1;
        let y = centered_target(&labels);
        let x: Vec<Vec<f64>> = (0..10)
            .map(|j| draw_probe(20, derive_seed(base, 1 + j)))
            .collect();
        let probe = draw_probe(20, derive_seed(base, 0));
        if probe_rank(&x, &y, &probe).map_err(|e| e.to_string())? == Some(1) {
            first += 1;
        }
    }
    let p = 1.0 / 11.0;
    let rho1 = first as f64 / n_triples as f64;
    let se = (p * (1.0 - p) / n_triples as f64).sqrt();
    let calibrated = (rho1 - p).abs() <= 3.0 * se;

    let mut monotone = true;
    for run in 0..5u64 {
        let x: Vec<Vec<f64>> = (0..10)
            .map(|j| draw_probe(20, derive_seed(50 + run, j)))
            .collect();
        let labels: Vec<u8> = (0..20)
            .map(|i| u8::from((i * 7 + run as usize).is_multiple_of(3)))
            .collect();
        let cfg = SelectionConfig {
            n_probe_realizations: 2000,
            seed: run,
            ..SelectionConfig::default()
        };
        let rho = probe_risk(&x, &centered_target(&labels), &cfg)
            .map_err(|e| e.to_string())?
            .rho;
        monotone &= rho.windows(2).all(|w| w[0] <= w[1]);
    }
    check(
        calibrated && monotone,
        format!(
            "rho_1 = {rho1:.4} vs 1/11 = {p:.4} (3 SE = {:.4}) over {n_triples} noise triples; rho_k non-decreasing on 5 runs of 2000 probes: {monotone}",
            3.0 * se
        ),
    )
}

fn c6_protocol_invariants() -> Outcome {
    for run in 0..50u64 {
        let cohort = planted_cohort(derive_seed(6, run));
        let m = &cohort.matrix;
        let plan =
            make_folds(m.labels(), 10, true, derive_seed(60, run)).map_err(|e| e.to_string())?;
        for class in [0u8, 1] {
            let counts: Vec<usize> = (0..10)
                .map(|f| {
                    plan.test_rows(f)
                        .iter()
                        .filter(|&&r| m.labels()[r] == class)
                        .count()
                })
                .collect();
            if counts.iter().max().unwrap() - counts.iter().min().unwrap() > 1 {
                return Err(format!("run {run}: class {class} fold counts {counts:?}"));
            }
        }
        let arch = if run % 2 == 0 {
            Architecture::Conventional
        } else {
            Architecture::Adhoc
        };
        let cfg = light_protocol(run);
        let fold = (run % 10) as usize;
        let held = plan.test_rows(fold);
        let row = held[rng(run).random_range(0..held.len())];
        let perturbed = perturb_row(&cohort, row);

        let base = RecordingPipeline::new(NeuralPipeline::new(arch, cfg.clone()));
        let moved = RecordingPipeline::new(NeuralPipeline::new(arch, cfg));
        let r0 = cross_test(m, &plan, &base, 0.5, run).map_err(|e| format!("run {run}: {e}"))?;
        let r1 = cross_test(&perturbed, &plan, &moved, 0.5, run)
            .map_err(|e| format!("run {run}: {e}"))?;

        let mut seen = vec![0usize; m.n_rows()];
        for f in &r0.folds {
            for &r in &f.test_rows {
                seen[r] += 1;
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(format!("run {run}: a row is not held out exactly once"));
        }
        let (a, b) = (&base.fitted.borrow()[fold], &moved.fitted.borrow()[fold]);
        if a.network.params() != b.network.params()
            || a.scaling != b.scaling
            || a.selection != b.selection
        {
            return Err(format!(
                "run {run} ({arch}): perturbing held-out row {row} changed fold {fold}'s model"
            ));
        }
        let (p0, p1) = (&r0.folds[fold], &r1.folds[fold]);
        for (i, &r) in p0.test_rows.iter().enumerate() {
            if r != row && p0.probabilities[i].to_bits() != p1.probabilities[i].to_bits() {
                return Err(format!("run {run}: probability of row {r} changed"));
            }
        }
    }
    Ok("50 runs (186x25, K'=10, both architectures): rows held out once, class counts within 1, held-out perturbation leaves the fold model bit-identical".into())
}

/// Share of `seeds` runs whose cross-validated hidden-neuron count satisfies `accept`.
fn complexity_rate(
    spec: &SynthSpec,
    accept: fn(usize) -> bool,
    tag: u64,
) -> Result<(usize, Vec<usize>), String> {
    let protocol = ProtocolConfig::default();
    let mut hits = 0;
    let mut chosen = Vec::new();
    for s in 0..20u64 {
        let seed = derive_seed(tag, s);
        let cohort = generate_synthetic_cohort(spec, seed).map_err(|e| e.to_string())?;
        let (scaled, _) = standardize(&cohort.matrix).map_err(|e| e.to_string())?;
        let rows = scaled
            .dense_rows(scaled.feature_names())
            .map_err(|e| e.to_string())?;
        let data = TrainingSet::new(rows, scaled.labels()).map_err(|e| e.to_string())?;
        let plan = make_folds(
            scaled.labels(),
            protocol.cv_folds,
            true,
            derive_seed(seed, 1),
        )
        .map_err(|e| e.to_string())?;
        let training = arrhythmia_risk::neural::TrainingConfig {
            seed: derive_seed(seed, 2),
            ..protocol.training.clone()
        };
        let choice = cross_validate_complexity(
            &data,
            &protocol.candidates(),
            &plan,
            &training,
            CvScoring::TrainingCost,
        )
        .map_err(|e| e.to_string())?;
        chosen.push(choice.best.n_hidden);
        if accept(choice.best.n_hidden) {
            hits += 1;
        }
    }
    Ok((hits, chosen))
}

fn c7_complexity_selection() -> Outcome {
    let one_hub = |informative, noise, delta, signal| SynthSpec {
        hubs: [
            HubComposition { informative, noise },
            HubComposition::default(),
            HubComposition::default(),
        ],
        delta,
        signal,
        ..SynthSpec::default()
    };
    let (lin, lin_h) = complexity_rate(&one_hub(4, 2, 1.0, SignalShape::Linear), |h| h == 0, 70)?;
    let (xor, xor_h) = complexity_rate(&one_hub(2, 2, 3.0, SignalShape::Xor), |h| h >= 2, 71)?;
    check(
        lin >= 16 && xor >= 16,
        format!("linear chose 0 hidden in {lin}/20 (choices {lin_h:?}); XOR chose >= 2 hidden in {xor}/20 (choices {xor_h:?}); need >= 16/20 each"),
    )
}

fn arrisk(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_arrisk"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "arrisk {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const E2E_CONFIG: &str = "\
cv_folds = 5
hidden_candidates = 0,1
weight_decays = 0.001,0.01
restarts = 2
";

/// Fold-mean NPV of one architecture from `report.csv`'s summary block.
fn summary_npv(report: &str, arch: &str) -> Option<f64> {
    report
        .lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f.len() >= 3 && f[0] == arch && f[1] == "npv")
        .and_then(|f| f[2].parse().ok())
}

fn c8_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("e2e.cfg");
    fs::write(&cfg, E2E_CONFIG).map_err(|e| e.to_string())?;
    let baseline = 100.0 * 142.0 / 186.0;
    let mut conv = Vec::new();
    let mut adhoc = Vec::new();
    for seed in 0..20u64 {
        let run = dir.path().join(format!("seed{seed}"));
        let s = seed.to_string();
        let common = ["--seed", &s, "--config", p(&cfg), "--out", p(&run), "-q"];
        arrisk(
            &[
                &["synth", "--patients", "186", "--positives", "44"][..],
                &common,
            ]
            .concat(),
        )?;
        let cohort = run.join("cohort.csv");
        let hubs = run.join("hubs.map");
        arrisk(
            &[
                &["select", "--cohort", p(&cohort), "--hubs", p(&hubs)][..],
                &common,
            ]
            .concat(),
        )?;
        arrisk(
            &[
                &["evaluate", "--cohort", p(&cohort), "--hubs", p(&hubs)][..],
                &common,
            ]
            .concat(),
        )?;
        let report = fs::read_to_string(run.join("report.csv")).map_err(|e| e.to_string())?;
        for block in ["# per_fold", "# overall", "# summary", "# comparison"] {
            if !report.lines().any(|l| l == block) {
                return Err(format!("seed {seed}: report lacks {block}"));
            }
        }
        conv.push(
            summary_npv(&report, "conventional")
                .ok_or(format!("seed {seed}: no conventional NPV"))?,
        );
        adhoc.push(summary_npv(&report, "adhoc").ok_or(format!("seed {seed}: no ad hoc NPV"))?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (mc, ma) = (mean(&conv), mean(&adhoc));
    check(
        mc >= baseline + 5.0 && ma >= baseline + 5.0,
        format!(
            "20 seeds, fold-mean NPV averaged over seeds: conventional {mc:.1} (min {:.1}), ad hoc {ma:.1} (min {:.1}); need >= {:.1}",
            min(&conv),
            min(&adhoc),
            baseline + 5.0
        ),
    )
}

fn c9_rhythm_oracles() -> Outcome {
    let cfg = FeatureConfig::default();
    let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0),
        (None, None) => true,
        _ => false,
    };
    let mut compared = 0usize;
    for seed in 0..100 {
        let series = random_beat_series(derive_seed(9, seed));
        let beats = beats_of(&series);
        let row = rhythm::compute_feature_row(&series, &cfg);
        let t = triggers_oracle(
            &beats,
            cfg.nsvt_min_beats,
            cfg.nsvt_max_beats,
            60_000.0 / cfg.nsvt_min_rate_bpm,
        );
        let poincare = poincare_oracle(&beats);
        let expected = [
            (
                rhythm::MIN_HEART_RATE,
                min_heart_rate_oracle(&beats, cfg.min_hr_window_s),
            ),
            (rhythm::MEAN_RR, mean_rr_oracle(&beats)),
            (rhythm::SDANN, sdann_oracle(&beats, cfg.sdann_segment_s)),
            (rhythm::POINCARE_SD2, poincare.map(|p| p.1)),
            (
                rhythm::HRV_INDEX,
                hrv_index_oracle(&beats, cfg.hrv_index_threshold_ms),
            ),
            (rhythm::TURBULENCE_ONSET, turbulence_onset_oracle(&beats)),
            (rhythm::BIGEMINY, Some(t.bigeminy as f64)),
            (rhythm::TRIGEMINY, Some(t.trigeminy as f64)),
            (rhythm::NSVT, Some(t.nsvt as f64)),
            (rhythm::PAC, Some(t.pac as f64)),
            (rhythm::PAC_COUPLETS, Some(t.pac_couplets as f64)),
        ];
        for (name, want) in expected {
            if !close(row[name], want) {
                return Err(format!(
                    "series {seed}: {name} = {:?}, oracle {want:?}",
                    row[name]
                ));
            }
            compared += usize::from(want.is_some());
        }
        if let Some((sd1, _, cov)) = poincare {
            let got = rhythm::poincare(&rhythm::to_rr(&series).unwrap()).unwrap();
            if !close(Some(got.sd1), Some(sd1))
                || !poincare_eigen_consistent(got.sd1, got.sd2, &cov, 1e-9)
            {
                return Err(format!(
                    "series {seed}: SD1/SD2 disagree with the covariance eigen-decomposition"
                ));
            }
        }
    }
    Ok(format!("100 series, {compared} defined feature values match their oracles (relative 1e-9, counts exact)"))
}

fn list_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("light.cfg");
    fs::write(
        &cfg,
        "cv_folds = 3\nhidden_candidates = 0,1\nweight_decays = 0.001\nrestarts = 2\n",
    )
    .map_err(|e| e.to_string())?;
    let runs: Vec<PathBuf> = ["first", "second"]
        .iter()
        .map(|n| dir.path().join(n))
        .collect();
    for out in &runs {
        let common = [
            "--seed",
            "17",
            "--config",
            p(&cfg),
            "--out",
            p(out),
            "--no-timestamp",
            "-q",
        ];
        arrisk(
            &[
                &["synth", "--patients", "60", "--positives", "15", "--beats"][..],
                &common,
            ]
            .concat(),
        )?;
        let cohort = out.join("cohort.csv");
        let hubs = out.join("hubs.map");
        arrisk(
            &[
                &["select", "--cohort", p(&cohort), "--hubs", p(&hubs)][..],
                &common,
            ]
            .concat(),
        )?;
        arrisk(
            &[
                &["evaluate", "--cohort", p(&cohort), "--hubs", p(&hubs)][..],
                &common,
            ]
            .concat(),
        )?;
        let feat_out = out.join("features");
        let feat_common = [
            "--seed",
            "17",
            "--out",
            p(&feat_out),
            "--no-timestamp",
            "-q",
        ];
        arrisk(
            &[
                &[
                    "features",
                    "--beats",
                    p(&out.join("beats")),
                    "--morphology",
                    p(&cohort),
                ][..],
                &feat_common,
            ]
            .concat(),
        )?;
    }
    let files = list_files(&runs[0]);
    if files != list_files(&runs[1]) {
        return Err("the two runs wrote different file sets".into());
    }
    for f in &files {
        if fs::read(runs[0].join(f)).ok() != fs::read(runs[1].join(f)).ok() {
            return Err(format!("{} differs between runs", f.display()));
        }
    }
    Ok(format!(
        "synth, select, evaluate and features re-run: {} files byte-identical",
        files.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("metric oracle", c1_metric_oracle),
        (
            "clinical figures stated as non-reproducible",
            c2_non_reproducibility,
        ),
        ("gradient correctness", c3_gradients),
        ("selection oracle", c4_gram_schmidt),
        ("probe-risk calibration", c5_probe_calibration),
        ("protocol invariants", c6_protocol_invariants),
        ("complexity selection behavior", c7_complexity_selection),
        ("end-to-end synth, select, evaluate", c8_end_to_end),
        ("rhythm-feature oracles", c9_rhythm_oracles),
        ("determinism", c10_determinism),
    ];
    let only: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}, {secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}, {secs:.1} s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
