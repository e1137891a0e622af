use std::fmt::Write as _;

use super::metrics::{Metrics, Summary};
use super::protocol::{CrossTestResult, EvaluationReport};

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

fn summary_text(s: &Summary, digits: usize) -> String {
    let mut out = format!("{} ± {}", opt(s.mean, digits), opt(s.std_dev, digits));
    if s.n_undefined > 0 {
        let _ = write!(out, " ({} fold(s) undefined)", s.n_undefined);
    }
    out
}

fn metrics_csv(m: &Metrics) -> String {
    format!(
        "{},{},{},{}",
        opt(m.npv, 6),
        opt(m.ppv, 6),
        opt(m.implant_reduction, 6),
        m.correctly_classified
    )
}

impl EvaluationReport {
    /// Human-readable report.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "Evaluation report");
        let _ = writeln!(
            out,
            "patients: {} ({} positive, {} negative)",
            self.n_patients,
            self.n_positive,
            self.n_patients - self.n_positive
        );
        let _ = writeln!(
            out,
            "cross-test folds K' = {}{}, complexity cross-validation K = {}, seed = {}",
            c.test_folds,
            if c.stratified { " (stratified)" } else { "" },
            c.cv_folds,
            c.seed
        );
        let _ = writeln!(
            out,
            "complexity grid: hidden {:?} x weight decay {:?}; restarts {}; fold score {}; threshold {}",
            c.hidden_candidates,
            c.weight_decays,
            c.training.n_restarts,
            c.cv_scoring.as_str(),
            c.threshold
        );
        let _ = writeln!(out, "feature selection: {}", c.selection_mode.as_str());
        if let Some(f) = &self.global_features {
            let _ = writeln!(out, "features ({}): {}", f.len(), f.join(", "));
        }
        for r in [&self.conventional, &self.adhoc] {
            out.push('\n');
            result_text(&mut out, r);
        }
        let _ = writeln!(
            out,
            "\nconventional vs ad hoc (correctly classified per fold, one-sided exact sign-flip): p = {:.4}",
            self.p_value
        );
        out
    }

    /// Machine-readable report: CSV blocks, each introduced by a `# name` line
    /// and followed by a blank line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# per_fold");
        let _ = writeln!(
            out,
            "architecture,fold,n_test,tn,fp,fn,tp,npv,ppv,implant_reduction,correct,complexity,features"
        );
        for r in [&self.conventional, &self.adhoc] {
            for f in &r.folds {
                let cm = f.confusion;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.name,
                    f.fold + 1,
                    f.test_rows.len(),
                    cm.tn,
                    cm.fp,
                    cm.fn_,
                    cm.tp,
                    metrics_csv(&f.metrics),
                    f.complexity,
                    f.features.join(";")
                );
            }
        }
        let _ = writeln!(out, "\n# overall");
        let _ = writeln!(
            out,
            "architecture,tn,fp,fn,tp,npv,ppv,implant_reduction,correct"
        );
        for r in [&self.conventional, &self.adhoc] {
            let cm = r.pooled;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.name,
                cm.tn,
                cm.fp,
                cm.fn_,
                cm.tp,
                metrics_csv(&r.pooled_metrics)
            );
        }
        let _ = writeln!(out, "\n# summary");
        let _ = writeln!(out, "architecture,metric,mean,std,n_defined,n_undefined");
        for r in [&self.conventional, &self.adhoc] {
            for (name, s) in [
                ("npv", &r.npv),
                ("ppv", &r.ppv),
                ("implant_reduction", &r.implant_reduction),
                ("correct", &r.correct),
            ] {
                let _ = writeln!(
                    out,
                    "{},{name},{},{},{},{}",
                    r.name,
                    opt(s.mean, 6),
                    opt(s.std_dev, 6),
                    s.n_defined,
                    s.n_undefined
                );
            }
        }
        let _ = writeln!(out, "\n# comparison");
        let _ = writeln!(out, "test,a,b,p_value");
        let _ = writeln!(
            out,
            "sign_flip_one_sided,conventional,adhoc,{}",
            self.p_value
        );
        out
    }
}

fn result_text(out: &mut String, r: &CrossTestResult) {
    let _ = writeln!(out, "== {} network ==", r.name);
    let _ = writeln!(
        out,
        "{:>4} {:>5} {:>4} {:>4} {:>4} {:>4} {:>7} {:>7} {:>9} {:>7}  complexity",
        "fold", "n", "tn", "fp", "fn", "tp", "NPV%", "PPV%", "reduct.%", "correct"
    );
    for f in &r.folds {
        let cm = f.confusion;
        let _ = writeln!(
            out,
            "{:>4} {:>5} {:>4} {:>4} {:>4} {:>4} {:>7} {:>7} {:>9} {:>7}  {}",
            f.fold + 1,
            f.test_rows.len(),
            cm.tn,
            cm.fp,
            cm.fn_,
            cm.tp,
            opt(f.metrics.npv, 1),
            opt(f.metrics.ppv, 1),
            opt(f.metrics.implant_reduction, 1),
            f.metrics.correctly_classified,
            f.complexity
        );
    }
    let cm = r.pooled;
    let m = &r.pooled_metrics;
    let _ = writeln!(out, "overall (pooled) confusion matrix:");
    let _ = writeln!(out, "                 actual 0  actual 1");
    let _ = writeln!(out, "  predicted 0   {:>8}  {:>8}", cm.tn, cm.fn_);
    let _ = writeln!(out, "  predicted 1   {:>8}  {:>8}", cm.fp, cm.tp);
    let _ = writeln!(
        out,
        "  NPV {}%  PPV {}%  implant reduction {}%  correct {}/{}",
        opt(m.npv, 1),
        opt(m.ppv, 1),
        opt(m.implant_reduction, 1),
        m.correctly_classified,
        cm.total()
    );
    let _ = writeln!(out, "mean ± std (per-fold):");
    let _ = writeln!(out, "  NPV {}%", summary_text(&r.npv, 1));
    let _ = writeln!(out, "  PPV {}%", summary_text(&r.ppv, 1));
    let _ = writeln!(
        out,
        "  implant reduction {}%",
        summary_text(&r.implant_reduction, 1)
    );
    let _ = writeln!(
        out,
        "  correctly classified {}",
        summary_text(&r.correct, 2)
    );
}
