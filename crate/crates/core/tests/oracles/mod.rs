//! Brute-force reference implementations shared by the integration tests
//! and the acceptance harness. Each one recomputes a quantity from scratch
//! by a different route than the library code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2};
use regex::Regex;

// ---------------------------------------------------------------- selection

/// Residual of `v` after least-squares projection onto the span of `basis`.
fn residual(basis: &[&Vec<f64>], v: &[f64]) -> DVector<f64> {
    let n = v.len();
    let b = DVector::from_column_slice(v);
    if basis.is_empty() {
        return b;
    }
    let a = DMatrix::from_fn(n, basis.len(), |i, j| basis[j][i]);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-13)
        .expect("svd solve");
    b - a * coef
}

/// Greedy forward ranking where every step re-projects the original
/// columns and target onto the orthogonal complement of the columns picked
/// so far. Returns `(column index, squared cosine)` in rank order. Columns
/// whose residual falls below `tol` of their norm are dropped; ranking
/// stops when the target residual falls below `tol` of its norm.
pub fn gs_rank_oracle(columns: &[Vec<f64>], target: &[f64], tol: f64) -> Vec<(usize, f64)> {
    let y_norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut picked: Vec<usize> = Vec::new();
    let mut dropped = vec![false; columns.len()];
    let mut out = Vec::new();
    loop {
        let basis: Vec<&Vec<f64>> = picked.iter().map(|&j| &columns[j]).collect();
        let ry = residual(&basis, target);
        if ry.norm() <= tol * y_norm {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..columns.len() {
            if picked.contains(&j) || dropped[j] {
                continue;
            }
            let x_norm = columns[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            let rx = residual(&basis, &columns[j]);
            if rx.norm() <= tol * x_norm || x_norm == 0.0 {
                dropped[j] = true;
                continue;
            }
            let c = rx.dot(&ry);
            let cos2 = c * c / (rx.norm_squared() * ry.norm_squared());
            if best.is_none_or(|(_, b)| cos2 > b) {
                best = Some((j, cos2));
            }
        }
        let Some((j, cos2)) = best else { break };
        picked.push(j);
        out.push((j, cos2.clamp(0.0, 1.0)));
    }
    out
}

/// 1-based rank of `probe` among `columns` under the oracle ranking.
pub fn probe_rank_oracle(columns: &[Vec<f64>], target: &[f64], probe: &[f64]) -> Option<usize> {
    let mut all = columns.to_vec();
    all.push(probe.to_vec());
    gs_rank_oracle(&all, target, 1e-10)
        .iter()
        .position(|&(j, _)| j == columns.len())
        .map(|p| p + 1)
}

// ------------------------------------------------------------------ rhythm

/// Beat list as `(time in ms, code)` with codes `N`, `V`, `A`, `O`.
pub type Beats = Vec<(f64, char)>;

struct Interval {
    onset: f64,
    rr: f64,
    nn: bool,
}

fn intervals(beats: &Beats) -> Vec<Interval> {
    beats
        .windows(2)
        .map(|w| Interval {
            onset: w[0].0,
            rr: w[1].0 - w[0].0,
            nn: w[0].1 == 'N' && w[1].1 == 'N',
        })
        .collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sample_sd(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v)?;
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

pub fn mean_rr_oracle(beats: &Beats) -> Option<f64> {
    let nn: Vec<f64> = intervals(beats)
        .iter()
        .filter(|i| i.nn)
        .map(|i| i.rr)
        .collect();
    mean(&nn)
}

/// Exhaustive window scan: every window starting at an NN onset and ending
/// inside the record, each averaged by a fresh pass over all intervals.
pub fn min_heart_rate_oracle(beats: &Beats, window_s: f64) -> Option<f64> {
    let w = window_s * 1000.0;
    let first = beats.first()?.0;
    let last = beats.last()?.0;
    if beats.len() < 2 || last - first < w {
        return None;
    }
    let iv = intervals(beats);
    let mut slowest: Option<f64> = None;
    for start in iv.iter().filter(|i| i.nn) {
        let end = start.onset + w;
        if end > last {
            continue;
        }
        let inside: Vec<f64> = iv
            .iter()
            .filter(|i| i.nn && i.onset >= start.onset && i.onset + i.rr <= end)
            .map(|i| i.rr)
            .collect();
        if let Some(m) = mean(&inside) {
            slowest = Some(slowest.map_or(m, |s: f64| s.max(m)));
        }
    }
    slowest.map(|m| 60_000.0 / m)
}

pub fn sdann_oracle(beats: &Beats, segment_s: f64) -> Option<f64> {
    let seg = segment_s * 1000.0;
    let first = beats.first()?.0;
    let last = beats.last()?.0;
    let n_full = ((last - first) / seg).floor() as usize;
    if n_full < 2 {
        return None;
    }
    let iv = intervals(beats);
    let means: Vec<f64> = (0..n_full)
        .filter_map(|k| {
            let lo = first + k as f64 * seg;
            let hi = lo + seg;
            let rr: Vec<f64> = iv
                .iter()
                .filter(|i| i.nn && i.onset >= lo && i.onset < hi)
                .map(|i| i.rr)
                .collect();
            mean(&rr)
        })
        .collect();
    sample_sd(&means)
}

/// Poincaré SD1/SD2 from the 2x2 sample covariance of the NN-pair scatter:
/// the variances along the anti-identity and identity directions.
pub fn poincare_oracle(beats: &Beats) -> Option<(f64, f64, Matrix2<f64>)> {
    let iv = intervals(beats);
    let pairs: Vec<(f64, f64)> = iv
        .windows(2)
        .filter(|w| w[0].nn && w[1].nn)
        .map(|w| (w[0].rr, w[1].rr))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut c = Matrix2::zeros();
    for &(x, y) in &pairs {
        let d = nalgebra::Vector2::new(x - mx, y - my);
        c += d * d.transpose();
    }
    c /= n - 1.0;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let minor = nalgebra::Vector2::new(-h, h);
    let major = nalgebra::Vector2::new(h, h);
    let sd1 = (minor.transpose() * c * minor)[(0, 0)].max(0.0).sqrt();
    let sd2 = (major.transpose() * c * major)[(0, 0)].max(0.0).sqrt();
    Some((sd1, sd2, c))
}

/// Checks SD1/SD2 against the eigen-decomposition of the scatter
/// covariance: the two dispersions sum (squared) to the trace and each lies
/// between the smallest and largest eigenvalue.
pub fn poincare_eigen_consistent(sd1: f64, sd2: f64, cov: &Matrix2<f64>, tol: f64) -> bool {
    let eig = cov.symmetric_eigen();
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    let scale = hi.abs().max(1.0);
    let (a, b) = (sd1 * sd1, sd2 * sd2);
    ((a + b) - (lo + hi)).abs() <= tol * scale
        && a >= lo - tol * scale
        && a <= hi + tol * scale
        && b >= lo - tol * scale
        && b <= hi + tol * scale
}

pub fn hrv_index_oracle(beats: &Beats, threshold_ms: f64) -> Option<f64> {
    let iv = intervals(beats);
    let diffs: Vec<f64> = iv
        .windows(2)
        .filter(|w| w[0].nn && w[1].nn)
        .map(|w| (w[1].rr - w[0].rr).abs())
        .collect();
    (!diffs.is_empty()).then(|| {
        100.0 * diffs.iter().filter(|&&d| d > threshold_ms).count() as f64 / diffs.len() as f64
    })
}

/// Turbulence onset straight from beat times: for each PVC at `p` with
/// three normal beats on each side, compare the two intervals ending at
/// `p-1` with the two starting at `p+1`.
pub fn turbulence_onset_oracle(beats: &Beats) -> Option<f64> {
    let t = |k: usize| beats[k].0;
    let mut values = Vec::new();
    for p in 3..beats.len().saturating_sub(3) {
        if beats[p].1 != 'V' {
            continue;
        }
        let context = [p - 3, p - 2, p - 1, p + 1, p + 2, p + 3];
        if context.iter().any(|&k| beats[k].1 != 'N') {
            continue;
        }
        let before = t(p - 1) - t(p - 3);
        let after = t(p + 3) - t(p + 1);
        values.push(100.0 * (after - before) / before);
    }
    mean(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerOracle {
    pub bigeminy: usize,
    pub trigeminy: usize,
    pub nsvt: usize,
    pub pac: usize,
    pub pac_couplets: usize,
}

/// Pattern counts by regular expressions over the beat code string.
pub fn triggers_oracle(
    beats: &Beats,
    nsvt_min: usize,
    nsvt_max: usize,
    nsvt_max_rr_ms: f64,
) -> TriggerOracle {
    let codes: String = beats.iter().map(|b| b.1).collect();
    let count = |pattern: &str| Regex::new(pattern).unwrap().find_iter(&codes).count();
    let nsvt = Regex::new("V+")
        .unwrap()
        .find_iter(&codes)
        .filter(|m| (nsvt_min..=nsvt_max).contains(&m.len()))
        .filter(|m| (m.start() + 1..m.end()).all(|k| beats[k].0 - beats[k - 1].0 < nsvt_max_rr_ms))
        .count();
    TriggerOracle {
        bigeminy: count("(NV){3,}"),
        trigeminy: count("(NNV){3,}"),
        nsvt,
        pac: codes.matches('A').count(),
        pac_couplets: Regex::new("A+")
            .unwrap()
            .find_iter(&codes)
            .filter(|m| m.len() == 2)
            .count(),
    }
}

// ---------------------------------------------------------------- gradients

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error of `g` against the reference `r`, componentwise:
/// `max_i |g_i - r_i| / max(|g|_inf, |r|_inf)`.
pub fn max_relative_error(g: &[f64], r: &[f64]) -> f64 {
    let scale = g.iter().chain(r).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    g.iter()
        .zip(r)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

// --------------------------------------------------------------- sign flips

/// One-sided sign-flip p-value for integer paired differences, from the
/// exact null distribution of `Σ ±d_i` built by convolution.
pub fn sign_flip_p_oracle(d: &[i64]) -> f64 {
    let span: i64 = d.iter().map(|v| v.abs()).sum();
    let offset = span as usize;
    let mut counts = vec![0u64; 2 * offset + 1];
    counts[offset] = 1;
    for &v in d {
        let v = v.unsigned_abs() as usize;
        let mut next = vec![0u64; counts.len()];
        for (s, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            next[s + v] += c;
            next[s - v] += c;
        }
        counts = next;
    }
    let observed = (d.iter().sum::<i64>() + span) as usize;
    let total: u64 = counts.iter().sum();
    counts[observed..].iter().sum::<u64>() as f64 / total as f64
}
