//! `arrisk`: feature computation, feature selection, evaluation and synthetic
//! cohorts from the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use arrhythmia_risk::config::KeyValues;
use arrhythmia_risk::dataset::{
    assign_hubs, filter_complete, generate_synthetic_cohort, load_beat_series, load_cohort,
    synthesize_beat_series, write_beat_series, write_cohort, BeatSynthSpec, FeatureMatrix, HubMap,
    SignalShape, SynthSpec,
};
use arrhythmia_risk::evaluation::{
    features_or_fallback, run_full_protocol, ProtocolConfig, SelectionMode,
};
use arrhythmia_risk::neural::TrainingConfig;
use arrhythmia_risk::rhythm::{compute_feature_row, FeatureConfig, RHYTHM_FEATURES};
use arrhythmia_risk::selection::{select_per_hub, SelectionConfig};
use arrhythmia_risk::stats::derive_seed;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

/// Config keys that are not owned by a library configuration type.
const PATH_KEYS: &[&str] = &[
    "cohort",
    "beats_dir",
    "morphology",
    "labels",
    "hub_map",
    "features_file",
    "out",
    "seed",
    "synth_beats",
];

#[derive(Parser, Debug)]
#[command(
    name = "arrisk",
    version,
    about = "Arrhythmia risk stratification pipeline"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory receiving every output file.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Only warnings and errors on stderr, nothing on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Omit the timestamp line from text reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute rhythm features from beat files into a cohort CSV.
    Features(FeaturesArgs),
    /// Rank features per hub and select them by random-probe risk.
    Select(CohortArgs),
    /// Run complexity selection and cross-test for both network architectures.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic cohort with planted signal.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    /// Directory of `<patient_id>.csv` beat files.
    #[arg(long, value_name = "DIR")]
    beats: Option<PathBuf>,
    /// Cohort CSV with precomputed (e.g. morphology) columns and labels.
    #[arg(long, value_name = "FILE")]
    morphology: Option<PathBuf>,
    /// `patient_id,label` CSV, overriding labels from the morphology file.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CohortArgs {
    #[arg(long, value_name = "FILE")]
    cohort: Option<PathBuf>,
    /// Feature-to-hub map; defaults to the built-in 18-feature map.
    #[arg(long, value_name = "FILE")]
    hubs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    cohort: CohortArgs,
    /// Fixed feature list (one per line, e.g. `selected.txt` from `select`);
    /// switches to global selection mode.
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    patients: Option<usize>,
    #[arg(long)]
    positives: Option<usize>,
    /// Class separation of informative features, in noise standard deviations.
    #[arg(long)]
    delta: Option<f64>,
    /// `linear` or `xor`.
    #[arg(long)]
    signal: Option<SignalShape>,
    /// Fraction of patients with missing cells.
    #[arg(long)]
    missing: Option<f64>,
    /// Also write one synthetic beat file per patient under `beats/`.
    #[arg(long)]
    beats: bool,
}

/// Misuse of the command line or configuration.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Maps an error chain to the exit code contract: 1 usage or configuration,
/// 2 input data, 3 pipeline failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<arrhythmia_risk::Error>() {
            return if e.is_config_error() {
                1
            } else if e.is_data_error() {
                2
            } else {
                3
            };
        }
    }
    3
}

struct RunContext {
    kv: KeyValues,
    out: PathBuf,
    quiet: bool,
    timestamp: bool,
}

impl RunContext {
    fn path(&self, flag: &Option<PathBuf>, key: &str) -> anyhow::Result<Option<PathBuf>> {
        let p = flag.clone().or_else(|| self.kv.get(key).map(PathBuf::from));
        if let Some(p) = &p {
            if !p.exists() {
                return Err(usage(format!(
                    "{key} path `{}` does not exist",
                    p.display()
                )));
            }
        }
        Ok(p)
    }

    fn required_path(&self, flag: &Option<PathBuf>, key: &str) -> anyhow::Result<PathBuf> {
        self.path(flag, key)?.ok_or_else(|| {
            usage(format!(
                "missing `--{}` (or `{key}` in the config)",
                key.replace('_', "-")
            ))
        })
    }

    fn seed(&self) -> anyhow::Result<u64> {
        self.kv
            .parsed("seed")?
            .ok_or_else(|| usage("a seed is required: pass --seed or set `seed` in the config"))
    }

    /// Writes `name` under the run directory; text reports get the timestamp
    /// line unless suppressed.
    fn write(&self, name: &str, contents: &str, text_report: bool) -> anyhow::Result<PathBuf> {
        let path = self.out.join(name);
        let mut body = String::new();
        if text_report && self.timestamp {
            body.push_str(&format!(
                "# generated {}\n",
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            ));
        }
        body.push_str(contents);
        fs::write(&path, body).map_err(|e| arrhythmia_risk::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn print(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
        }
    }

    fn hub_map(&self, flag: &Option<PathBuf>) -> anyhow::Result<HubMap> {
        Ok(match self.path(flag, "hub_map")? {
            Some(p) => HubMap::load(&p)?,
            None => HubMap::table1(),
        })
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<KeyValues> {
    let mut kv = match &cli.config {
        Some(p) => KeyValues::load(p).map_err(|e| match e {
            arrhythmia_risk::Error::Io { .. } => {
                usage(format!("cannot read config `{}`: {e}", p.display()))
            }
            other => usage(other.to_string()),
        })?,
        None => KeyValues::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
        kv.set(k.trim(), v.trim());
    }
    if let Some(seed) = cli.seed {
        kv.set("seed", seed.to_string());
    }
    let known: Vec<&str> = PATH_KEYS
        .iter()
        .chain(ProtocolConfig::KEYS)
        .chain(SelectionConfig::KEYS)
        .chain(TrainingConfig::KEYS)
        .chain(SynthSpec::KEYS)
        .chain(FeatureConfig::KEYS)
        .copied()
        .collect();
    kv.reject_unknown(&known)?;
    Ok(kv)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let kv = load_config(&cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| kv.get("out").map(PathBuf::from))
        .ok_or_else(|| usage("missing --out (the run directory)"))?;
    fs::create_dir_all(&out).map_err(|e| arrhythmia_risk::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let ctx = RunContext {
        kv,
        out,
        quiet: cli.quiet,
        timestamp: !cli.no_timestamp,
    };
    match &cli.command {
        Command::Features(a) => cmd_features(&ctx, a),
        Command::Select(a) => cmd_select(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
    }
}

fn cmd_features(ctx: &RunContext, args: &FeaturesArgs) -> anyhow::Result<()> {
    let feature_cfg = FeatureConfig::from_key_values(&ctx.kv.subset(FeatureConfig::KEYS))?;
    let beats_dir = ctx.path(&args.beats, "beats_dir")?;
    let morphology = ctx.path(&args.morphology, "morphology")?;
    let labels_path = ctx.path(&args.labels, "labels")?;
    if beats_dir.is_none() && morphology.is_none() {
        return Err(usage("features needs --beats and/or --morphology"));
    }

    let mut ids: Vec<String> = Vec::new();
    let mut labels: BTreeMap<String, u8> = BTreeMap::new();
    let mut ingested: Option<FeatureMatrix> = None;
    if let Some(p) = &morphology {
        let (m, _) = load_cohort(p)?;
        for (id, &l) in m.patient_ids().iter().zip(m.labels()) {
            ids.push(id.clone());
            labels.insert(id.clone(), l);
        }
        ingested = Some(m);
    }
    if let Some(p) = &labels_path {
        let (m, _) = load_cohort(p)?;
        for (id, &l) in m.patient_ids().iter().zip(m.labels()) {
            labels.insert(id.clone(), l);
        }
    }

    let mut computed: BTreeMap<String, BTreeMap<String, Option<f64>>> = BTreeMap::new();
    if let Some(dir) = &beats_dir {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| arrhythmia_risk::Error::Io {
                path: dir.clone(),
                source: e,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        let mut failures = Vec::new();
        for f in files {
            let id = f
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            match load_beat_series(&f) {
                Ok(series) => {
                    let row = compute_feature_row(&series, &feature_cfg);
                    if row.values().all(Option::is_none) {
                        warn!("{}: too few beats, rhythm features left empty", f.display());
                    }
                    computed.insert(id, row);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    failures.push(e);
                }
            }
        }
        if let Some(first) = failures.into_iter().next() {
            return Err(
                anyhow::Error::new(first).context("unreadable beat files (see diagnostics above)")
            );
        }
    }
    for id in computed.keys() {
        if !ids.contains(id) {
            ids.push(id.clone());
        }
    }
    if let Some(m) = &ingested {
        for id in m.patient_ids() {
            if !computed.contains_key(id) && beats_dir.is_some() {
                warn!("patient {id} has no beat file; rhythm features left empty");
            }
        }
    }

    let mut names: Vec<String> = ingested
        .as_ref()
        .map(|m| m.feature_names().to_vec())
        .unwrap_or_default();
    if !computed.is_empty() {
        for r in RHYTHM_FEATURES {
            if names.iter().any(|n| n == r) {
                warn!("column `{r}` is recomputed from the beat files");
            } else {
                names.push(r.to_string());
            }
        }
    }
    let unlabeled: Vec<&String> = ids.iter().filter(|id| !labels.contains_key(*id)).collect();
    if !unlabeled.is_empty() {
        return Err(arrhythmia_risk::Error::InsufficientData(format!(
            "no label for patient(s): {}",
            unlabeled
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))
        .into());
    }
    let mut rows = Vec::with_capacity(ids.len());
    for id in &ids {
        let row_idx = ingested
            .as_ref()
            .and_then(|m| m.patient_ids().iter().position(|p| p == id));
        let row: Vec<Option<f64>> = names
            .iter()
            .map(|n| {
                if !computed.is_empty() && RHYTHM_FEATURES.contains(&n.as_str()) {
                    return computed.get(id).and_then(|r| r.get(n)).copied().flatten();
                }
                match (&ingested, row_idx) {
                    (Some(m), Some(r)) => m.column_index(n).and_then(|c| m.get(r, c)),
                    _ => None,
                }
            })
            .collect();
        rows.push(row);
    }
    let row_labels = ids.iter().map(|id| labels[id]).collect();
    let matrix = FeatureMatrix::new(ids, names, rows, row_labels)?;
    let path = ctx.out.join("features.csv");
    write_cohort(&path, &matrix)?;
    ctx.print(&format!(
        "{} patients x {} features written to {}\n",
        matrix.n_rows(),
        matrix.n_features(),
        path.display()
    ));
    Ok(())
}

/// Loads, hub-tags and filters a cohort for selection or evaluation.
fn prepared_cohort(ctx: &RunContext, args: &CohortArgs) -> anyhow::Result<FeatureMatrix> {
    let path = ctx.required_path(&args.cohort, "cohort")?;
    let (matrix, _) = load_cohort(&path)?;
    let map = ctx.hub_map(&args.hubs)?;
    let tagged = assign_hubs(&matrix, &map)?;
    let names = tagged.feature_names().to_vec();
    let complete = filter_complete(&tagged, &names)?;
    if complete.n_rows() < tagged.n_rows() {
        warn!(
            "{} of {} patients dropped for missing values",
            tagged.n_rows() - complete.n_rows(),
            tagged.n_rows()
        );
    }
    Ok(complete)
}

fn cmd_select(ctx: &RunContext, args: &CohortArgs) -> anyhow::Result<()> {
    let matrix = prepared_cohort(ctx, args)?;
    let mut cfg = SelectionConfig::default();
    cfg.update_from(&ctx.kv)?;
    cfg.seed = derive_seed(ctx.seed()?, 2);
    let report = select_per_hub(&matrix, &cfg).context("feature selection")?;
    let features = features_or_fallback(&report)?;
    let mut text = report.to_text();
    if report.selected().is_empty() {
        text.push_str(&format!(
            "No feature passed; falling back to {}\n",
            features.join(", ")
        ));
    }
    ctx.write("selection.csv", &report.to_csv(), false)?;
    ctx.write("selection.txt", &text, true)?;
    ctx.write("selected.txt", &(features.join("\n") + "\n"), false)?;
    ctx.print(&text);
    Ok(())
}

fn read_feature_list(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| arrhythmia_risk::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let list: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if list.is_empty() {
        return Err(arrhythmia_risk::Error::InsufficientData(format!(
            "{} lists no feature",
            path.display()
        ))
        .into());
    }
    Ok(list)
}

fn cmd_evaluate(ctx: &RunContext, args: &EvaluateArgs) -> anyhow::Result<()> {
    let matrix = prepared_cohort(ctx, &args.cohort)?;
    let mut cfg = ProtocolConfig::default();
    cfg.update_from(&ctx.kv)?;
    cfg.seed = ctx.seed()?;
    let features = match ctx.path(&args.features, "features_file")? {
        Some(p) => {
            cfg.selection_mode = SelectionMode::Global;
            let list = read_feature_list(&p)?;
            let missing: Vec<String> = list
                .iter()
                .filter(|f| matrix.column_index(f).is_none())
                .cloned()
                .collect();
            if !missing.is_empty() {
                bail!(arrhythmia_risk::Error::Config(format!(
                    "features not in the cohort: {}",
                    missing.join(", ")
                )));
            }
            Some(list)
        }
        None => None,
    };
    let report = run_full_protocol(&matrix, &cfg, features)?;
    let text = report.to_text();
    ctx.write("report.txt", &text, true)?;
    ctx.write("report.csv", &report.to_csv(), false)?;
    if let Some(sel) = &report.global_selection {
        ctx.write("selection.csv", &sel.to_csv(), false)?;
    }
    ctx.print(&headline(&report));
    Ok(())
}

/// The per-architecture summary table printed after evaluation.
fn headline(r: &arrhythmia_risk::evaluation::EvaluationReport) -> String {
    let pct = |v: Option<f64>| v.map_or_else(|| "NA".into(), |x| format!("{x:.1}"));
    let pm =
        |s: &arrhythmia_risk::evaluation::Summary| format!("{} ± {}", pct(s.mean), pct(s.std_dev));
    let mut out = String::new();
    out.push_str(&format!(
        "{:<13} {:>14} {:>14} {:>14} {:>8} {:>8} {:>10}\n",
        "", "NPV %", "PPV %", "reduction %", "NPV*", "PPV*", "reduction*"
    ));
    for c in [&r.conventional, &r.adhoc] {
        out.push_str(&format!(
            "{:<13} {:>14} {:>14} {:>14} {:>8} {:>8} {:>10}\n",
            c.name,
            pm(&c.npv),
            pm(&c.ppv),
            pm(&c.implant_reduction),
            pct(c.pooled_metrics.npv),
            pct(c.pooled_metrics.ppv),
            pct(c.pooled_metrics.implant_reduction)
        ));
    }
    out.push_str("mean ± std over folds; * pooled confusion matrix\n");
    out.push_str(&format!(
        "sign-flip p-value (ad hoc > conventional): {:.4}\n",
        r.p_value
    ));
    out
}

fn cmd_synth(ctx: &RunContext, args: &SynthArgs) -> anyhow::Result<()> {
    let mut spec = SynthSpec::from_key_values(&ctx.kv)?;
    if let Some(v) = args.patients {
        spec.n_patients = v;
    }
    if let Some(v) = args.positives {
        spec.n_positives = v;
    }
    if let Some(v) = args.delta {
        spec.delta = v;
    }
    if let Some(v) = args.signal {
        spec.signal = v;
    }
    if let Some(v) = args.missing {
        spec.missing_fraction = v;
    }
    spec.validate()?;
    let seed = ctx.seed()?;
    let cohort = generate_synthetic_cohort(&spec, seed)?;
    write_cohort(&ctx.out.join("cohort.csv"), &cohort.matrix)?;
    ctx.write("hubs.map", &cohort.hub_map.to_text(), false)?;
    let mut truth = format!(
        "# planted informative features (signal = {:?}, delta = {})\n",
        spec.signal, spec.delta
    );
    for f in &cohort.informative {
        truth.push_str(f);
        truth.push('\n');
    }
    ctx.write("truth.txt", &truth, false)?;

    let beats = args.beats || ctx.kv.parsed::<bool>("synth_beats")?.unwrap_or(false);
    if beats {
        let dir = ctx.out.join("beats");
        fs::create_dir_all(&dir).map_err(|e| arrhythmia_risk::Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        for (i, rec) in cohort.records.iter().enumerate() {
            let mut bs = BeatSynthSpec::default();
            if rec.label == 1 {
                bs.pvc_probability *= 2.0;
                bs.pac_probability *= 2.0;
            }
            let series = synthesize_beat_series(&bs, derive_seed(derive_seed(seed, 7), i as u64))?;
            write_beat_series(&dir.join(format!("{}.csv", rec.patient_id)), &series)?;
        }
    }
    ctx.print(&format!(
        "{} patients ({} positive), {} features, written to {}\n",
        cohort.matrix.n_rows(),
        cohort.matrix.n_positive(),
        cohort.matrix.n_features(),
        ctx.out.display()
    ));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
