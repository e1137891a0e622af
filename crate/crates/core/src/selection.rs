//! Orthogonal forward feature ranking with random-probe risk estimation.
//!
//! Features are ranked greedily by their squared cosine with the part of the
//! target not yet explained by the features ranked before them (modified
//! Gram–Schmidt). The risk ρₖ of accepting the k-th ranked feature is the
//! fraction of random probe realizations that reach rank k or better; the
//! selection keeps the longest ranking prefix whose risk stays below `rho_max`.

use std::fmt::Write as _;

use log::warn;
use rand_distr::{Distribution, StandardNormal};

use crate::config::KeyValues;
use crate::dataset::{FeatureMatrix, Hub};
use crate::stats::{self, derive_seed, rng};
use crate::{Error, Result};

/// Relative norm under which an orthogonalized column counts as collinear.
pub const COLLINEARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub name: String,
    /// 1-based.
    pub rank: usize,
    /// Squared cosine with the residual target when the feature was picked.
    pub relevance: f64,
}

/// `rho[k - 1]` is the risk of accepting the feature ranked k.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub rho: Vec<f64>,
}

impl RiskCurve {
    pub fn at_rank(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1).and_then(|k| self.rho.get(k)).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub rho_max: f64,
    pub n_probe_realizations: usize,
    /// Rank and select within each hub rather than over all features at once.
    pub per_hub: bool,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            rho_max: 0.10,
            n_probe_realizations: 100,
            per_hub: true,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub const KEYS: &'static [&'static str] = &["rho_max", "n_probes", "per_hub"];

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_max > 0.0 && self.rho_max < 1.0) {
            return Err(Error::Config(format!(
                "rho_max must lie in (0, 1), got {}",
                self.rho_max
            )));
        }
        if self.n_probe_realizations < 10 {
            return Err(Error::Config(format!(
                "need at least 10 probe realizations, got {}",
                self.n_probe_realizations
            )));
        }
        Ok(())
    }

    /// Applies `rho_max`, `n_probes` and `per_hub` overrides.
    pub fn update_from(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(v) = kv.parsed("rho_max")? {
            self.rho_max = v;
        }
        if let Some(v) = kv.parsed("n_probes")? {
            self.n_probe_realizations = v;
        }
        if let Some(v) = kv.parsed("per_hub")? {
            self.per_hub = v;
        }
        self.validate()
    }
}

/// Labels mapped to {0, 1} and centered.
pub fn centered_target(labels: &[u8]) -> Vec<f64> {
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let m = stats::mean(&y).unwrap_or(0.0);
    y.iter().map(|v| v - m).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy orthogonal forward ranking over column indices. Stops after
/// `stop_after` has been picked, when the residual target vanishes, or when
/// every column is ranked or dropped as collinear.
fn rank_indices(
    columns: &[Vec<f64>],
    target: &[f64],
    stop_after: Option<usize>,
) -> Result<Vec<(usize, f64)>> {
    let n = target.len();
    for c in columns {
        if c.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: c.len(),
            });
        }
    }
    let target_norm = dot(target, target).sqrt();
    if !(target_norm > 0.0) {
        return Err(Error::ZeroTarget);
    }
    let mut cols: Vec<Vec<f64>> = columns.to_vec();
    let orig_norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut residual = target.to_vec();
    let mut active: Vec<usize> = (0..cols.len()).collect();
    let mut ranked = Vec::with_capacity(cols.len());

    while !active.is_empty() {
        let r2 = dot(&residual, &residual);
        if r2.sqrt() <= COLLINEARITY_TOL * target_norm {
            break;
        }
        active.retain(|&j| {
            let norm = dot(&cols[j], &cols[j]).sqrt();
            let keep = norm > COLLINEARITY_TOL * orig_norms[j] && norm > 0.0;
            if !keep {
                warn!("column {j} is collinear with the columns ranked before it; dropped");
            }
            keep
        });
        let mut best: Option<(usize, f64)> = None;
        for &j in &active {
            let c = &cols[j];
            let xr = dot(c, &residual);
            let cos2 = xr * xr / (dot(c, c) * r2);
            if best.is_none_or(|(_, b)| cos2 > b) {
                best = Some((j, cos2));
            }
        }
        let Some((pick, cos2)) = best else { break };
        ranked.push((pick, cos2.clamp(0.0, 1.0)));
        if stop_after == Some(pick) {
            break;
        }
        active.retain(|&j| j != pick);

        let norm = dot(&cols[pick], &cols[pick]).sqrt();
        let q: Vec<f64> = cols[pick].iter().map(|v| v / norm).collect();
        let proj = dot(&q, &residual);
        for (r, qi) in residual.iter_mut().zip(&q) {
            *r -= proj * qi;
        }
        for &j in &active {
            let proj = dot(&q, &cols[j]);
            for (v, qi) in cols[j].iter_mut().zip(&q) {
                *v -= proj * qi;
            }
        }
    }
    Ok(ranked)
}

/// Ranks `columns` by orthogonal forward selection against `target`.
///
/// Columns should be standardized and the target centered. Collinear
/// columns are dropped (with a warning) and do not appear in the result.
pub fn gram_schmidt_rank(
    columns: &[Vec<f64>],
    names: &[String],
    target: &[f64],
) -> Result<Vec<RankedFeature>> {
    if names.len() != columns.len() {
        return Err(Error::Dimension {
            expected: columns.len(),
            got: names.len(),
        });
    }
    Ok(rank_indices(columns, target, None)?
        .into_iter()
        .enumerate()
        .map(|(k, (j, relevance))| RankedFeature {
            name: names[j].clone(),
            rank: k + 1,
            relevance,
        })
        .collect())
}

/// Rank reached by `probe` when appended to `columns`, or `None` if the
/// ranking stopped before reaching it.
pub fn probe_rank(columns: &[Vec<f64>], target: &[f64], probe: &[f64]) -> Result<Option<usize>> {
    let mut all = columns.to_vec();
    all.push(probe.to_vec());
    let probe_idx = columns.len();
    let ranked = rank_indices(&all, target, Some(probe_idx))?;
    Ok(ranked
        .iter()
        .position(|&(j, _)| j == probe_idx)
        .map(|p| p + 1))
}

/// Standard normal probe of length `n`, standardized to sample mean 0 and
/// unit sample standard deviation like the candidate features.
pub fn draw_probe(n: usize, seed: u64) -> Vec<f64> {
    let mut g = rng(seed);
    let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut g)).collect();
    let m = stats::mean(&raw).unwrap_or(0.0);
    let sd = stats::std_dev(&raw).filter(|s| *s > 0.0).unwrap_or(1.0);
    raw.iter().map(|v| (v - m) / sd).collect()
}

/// Estimates the risk curve from `n_probe_realizations` seeded probes.
/// Realization `r` uses seed `derive_seed(config.seed, r)`, so the curve does
/// not depend on evaluation order.
pub fn probe_risk(
    columns: &[Vec<f64>],
    target: &[f64],
    config: &SelectionConfig,
) -> Result<RiskCurve> {
    config.validate()?;
    let n_features = columns.len();
    let mut hits = vec![0usize; n_features + 1];
    for r in 0..config.n_probe_realizations {
        let probe = draw_probe(target.len(), derive_seed(config.seed, r as u64));
        if let Some(rank) = probe_rank(columns, target, &probe)? {
            hits[rank - 1] += 1;
        }
    }
    let total = config.n_probe_realizations as f64;
    let mut cumulative = 0usize;
    let rho = hits[..n_features]
        .iter()
        .map(|h| {
            cumulative += h;
            cumulative as f64 / total
        })
        .collect();
    Ok(RiskCurve { rho })
}

/// Longest ranking prefix whose every risk is at most `rho_max`.
pub fn select_features(ranking: &[RankedFeature], risk: &RiskCurve, rho_max: f64) -> Vec<String> {
    ranking
        .iter()
        .take_while(|f| risk.at_rank(f.rank).is_some_and(|rho| rho <= rho_max))
        .map(|f| f.name.clone())
        .collect()
}

/// Ranking, risk and selection for one feature group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSelection {
    /// `None` when all features were ranked together.
    pub hub: Option<Hub>,
    pub candidates: Vec<String>,
    /// Constant columns, excluded before ranking.
    pub constant: Vec<String>,
    pub ranking: Vec<RankedFeature>,
    pub risk: RiskCurve,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub per_hub: bool,
    pub rho_max: f64,
    pub groups: Vec<GroupSelection>,
}

impl SelectionReport {
    /// Union of the selected features, in group order.
    pub fn selected(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|g| g.selected.iter().cloned())
            .collect()
    }

    pub fn selected_in(&self, hub: Hub) -> Vec<String> {
        self.groups
            .iter()
            .filter(|g| g.hub == Some(hub))
            .flat_map(|g| g.selected.iter().cloned())
            .collect()
    }

    /// First-ranked feature over all groups (highest relevance among group
    /// leaders), used when nothing passes the risk threshold.
    pub fn best_ranked(&self) -> Option<String> {
        self.groups
            .iter()
            .filter_map(|g| g.ranking.first())
            .fold(None::<&RankedFeature>, |best, f| match best {
                Some(b) if b.relevance >= f.relevance => Some(b),
                _ => Some(f),
            })
            .map(|f| f.name.clone())
    }

    /// CSV with one line per ranked feature:
    /// `group,rank,feature,relevance,rho,selected`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,rank,feature,relevance,rho,selected\n");
        for g in &self.groups {
            let group = g.hub.map_or("ALL", Hub::as_str);
            for f in &g.ranking {
                let rho = g
                    .risk
                    .at_rank(f.rank)
                    .map(|r| r.to_string())
                    .unwrap_or_default();
                let sel = u8::from(g.selected.contains(&f.name));
                let _ = writeln!(
                    out,
                    "{group},{},{},{},{rho},{sel}",
                    f.rank, f.name, f.relevance
                );
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Feature selection ({}, rho_max = {})",
            if self.per_hub { "per hub" } else { "global" },
            self.rho_max
        );
        for g in &self.groups {
            let group = g.hub.map_or("ALL", Hub::as_str);
            let _ = writeln!(
                out,
                "\n[{group}] {} candidates, {} selected",
                g.candidates.len(),
                g.selected.len()
            );
            if g.selected.is_empty() {
                let _ = writeln!(out, "  no feature passes the risk threshold");
            }
            let _ = writeln!(
                out,
                "  {:>4}  {:<28} {:>10} {:>7}",
                "rank", "feature", "relevance", "rho"
            );
            for f in &g.ranking {
                let rho = g.risk.at_rank(f.rank).unwrap_or(f64::NAN);
                let mark = if g.selected.contains(&f.name) {
                    "*"
                } else {
                    " "
                };
                let _ = writeln!(
                    out,
                    "{mark} {:>4}  {:<28} {:>10.4} {:>7.3}",
                    f.rank, f.name, f.relevance, rho
                );
            }
            if !g.constant.is_empty() {
                let _ = writeln!(out, "  constant (skipped): {}", g.constant.join(", "));
            }
        }
        let _ = writeln!(out, "\nSelected: {}", self.selected().join(", "));
        out
    }
}

/// Runs ranking, probe risk and prefix selection on each hub's columns (or on
/// all columns when `per_hub` is off). Columns are standardized within the
/// group; constant columns are skipped.
pub fn select_per_hub(matrix: &FeatureMatrix, config: &SelectionConfig) -> Result<SelectionReport> {
    config.validate()?;
    let target = centered_target(matrix.labels());
    let groups: Vec<(Option<Hub>, Vec<String>, u64)> = if config.per_hub {
        Hub::ALL
            .iter()
            .map(|&h| (Some(h), matrix.features_in_hub(h), h.index() as u64))
            .collect()
    } else {
        vec![(None, matrix.feature_names().to_vec(), 3)]
    };
    if config.per_hub {
        let untagged: Vec<&String> = matrix
            .feature_names()
            .iter()
            .zip(matrix.hubs())
            .filter(|(_, h)| h.is_none())
            .map(|(n, _)| n)
            .collect();
        if !untagged.is_empty() {
            return Err(Error::UnmappedFeatures(
                untagged.into_iter().cloned().collect(),
            ));
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for (hub, candidates, tag) in groups {
        let mut names = Vec::new();
        let mut columns = Vec::new();
        let mut constant = Vec::new();
        for name in &candidates {
            let col = matrix.column(matrix.column_index(name).unwrap_or_default())?;
            match stats::std_dev(&col) {
                Some(sd) if sd > 0.0 => {
                    let m = stats::mean(&col).unwrap_or(0.0);
                    columns.push(col.iter().map(|v| (v - m) / sd).collect::<Vec<f64>>());
                    names.push(name.clone());
                }
                _ => {
                    warn!("feature `{name}` is constant on these rows; skipped");
                    constant.push(name.clone());
                }
            }
        }
        let (ranking, risk, selected) = if columns.is_empty() {
            (Vec::new(), RiskCurve { rho: Vec::new() }, Vec::new())
        } else {
            let ranking = gram_schmidt_rank(&columns, &names, &target)?;
            let group_config = SelectionConfig {
                seed: derive_seed(config.seed, tag),
                ..config.clone()
            };
            let risk = probe_risk(&columns, &target, &group_config)?;
            let selected = select_features(&ranking, &risk, config.rho_max);
            (ranking, risk, selected)
        };
        out.push(GroupSelection {
            hub,
            candidates,
            constant,
            ranking,
            risk,
            selected,
        });
    }
    Ok(SelectionReport {
        per_hub: config.per_hub,
        rho_max: config.rho_max,
        groups: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn perfect_predictor_first() {
        let y = centered_target(&[0, 1, 1, 0, 1, 0]);
        let cols = vec![
            vec![1.0, -2.0, 0.5, 0.3, -1.0, 2.0],
            y.clone(),
            vec![0.1, 0.2, -0.3, 0.4, 0.0, -0.5],
        ];
        let r = gram_schmidt_rank(&cols, &names(3), &y).unwrap();
        assert_eq!(r[0].name, "f2");
        assert!((r[0].relevance - 1.0).abs() < 1e-12);
        // residual vanishes after the perfect predictor
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn orthogonal_columns() {
        let a = vec![1.0, -1.0, 0.0, 0.0];
        let b = vec![0.0, 0.0, 1.0, -1.0];
        let y = vec![0.2, -0.2, 1.0, -1.0];
        let r = gram_schmidt_rank(&[a, b], &names(2), &y).unwrap();
        let order: Vec<&str> = r.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(order, vec!["f2", "f1"]);
    }

    #[test]
    fn zero_target_is_error() {
        let cols = vec![vec![1.0, 2.0, 3.0]];
        assert!(matches!(
            gram_schmidt_rank(&cols, &names(1), &[0.0; 3]),
            Err(Error::ZeroTarget)
        ));
    }

    #[test]
    fn collinear_column_dropped() {
        let a = vec![1.0, 2.0, -1.0, -2.0, 0.5];
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let c = vec![0.3, -0.1, 0.7, 0.2, -1.1];
        let y = vec![1.0, 1.5, -1.0, -2.0, 0.5];
        let r = gram_schmidt_rank(&[a, b, c], &names(3), &y).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|f| f.relevance >= 0.0 && f.relevance <= 1.0));
    }

    #[test]
    fn prefix_rule() {
        let ranking: Vec<RankedFeature> = (1..=4)
            .map(|k| RankedFeature {
                name: format!("f{k}"),
                rank: k,
                relevance: 0.5,
            })
            .collect();
        let risk = RiskCurve {
            rho: vec![0.0, 0.05, 0.12, 0.08],
        };
        assert_eq!(select_features(&ranking, &risk, 0.10), vec!["f1", "f2"]);
        let risk = RiskCurve {
            rho: vec![0.2, 0.3, 0.4, 0.5],
        };
        assert!(select_features(&ranking, &risk, 0.10).is_empty());
    }

    #[test]
    fn perfect_predictor_has_zero_risk() {
        let labels = [0u8, 1, 1, 0, 1, 0, 0, 1, 0, 0];
        let y = centered_target(&labels);
        let noise = vec![0.3, -0.2, 0.9, -1.2, 0.4, 0.1, -0.7, 0.8, -0.5, 0.1];
        let cfg = SelectionConfig {
            n_probe_realizations: 50,
            ..SelectionConfig::default()
        };
        let risk = probe_risk(&[noise, y.clone()], &y, &cfg).unwrap();
        assert_eq!(risk.rho[0], 0.0);
        assert!(risk.rho.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn config_bounds() {
        let mut cfg = SelectionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rho_max = 1.0;
        assert!(cfg.validate().is_err());
        cfg.rho_max = 0.1;
        cfg.n_probe_realizations = 5;
        assert!(cfg.validate().is_err());
    }
}
