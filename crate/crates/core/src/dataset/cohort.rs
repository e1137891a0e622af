use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use log::warn;

use super::hubs::{Hub, HubMap};
use crate::stats;
use crate::{Error, Result};

/// One patient of a cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    /// 1 = treated ventricular arrhythmia during follow-up, 0 otherwise.
    pub label: u8,
    pub beat_series_ref: Option<PathBuf>,
    pub precomputed_features: BTreeMap<String, Option<f64>>,
}

/// Patients × named features, with a per-cell missing mask and hub tags.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    patient_ids: Vec<String>,
    feature_names: Vec<String>,
    hubs: Vec<Option<Hub>>,
    // row-major, `None` = missing
    values: Vec<Option<f64>>,
    labels: Vec<u8>,
}

impl FeatureMatrix {
    pub fn new(
        patient_ids: Vec<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if rows.len() != patient_ids.len() || labels.len() != patient_ids.len() {
            return Err(Error::format(
                "feature matrix",
                None,
                format!(
                    "{} ids, {} rows and {} labels disagree",
                    patient_ids.len(),
                    rows.len(),
                    labels.len()
                ),
            ));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::format(
                    "feature matrix",
                    None,
                    format!("duplicate feature `{name}`"),
                ));
            }
        }
        let mut seen = HashSet::new();
        for id in &patient_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::format(
                    "feature matrix",
                    None,
                    format!("duplicate patient_id `{id}`"),
                ));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::format(
                "feature matrix",
                None,
                format!("label {l} is not 0 or 1"),
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::format(
                    "feature matrix",
                    None,
                    format!("row {r} has {} cells, expected {n_features}", row.len()),
                ));
            }
            values.extend(row.into_iter().map(|v| v.filter(|x| x.is_finite())));
        }
        Ok(FeatureMatrix {
            patient_ids,
            hubs: vec![None; n_features],
            feature_names,
            values,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.patient_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn patient_ids(&self) -> &[String] {
        &self.patient_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn hub_of(&self, name: &str) -> Option<Hub> {
        self.column_index(name).and_then(|c| self.hubs[c])
    }

    pub fn hubs(&self) -> &[Option<Hub>] {
        &self.hubs
    }

    /// Names of the features tagged with `hub`, in column order.
    pub fn features_in_hub(&self, hub: Hub) -> Vec<String> {
        self.feature_names
            .iter()
            .zip(&self.hubs)
            .filter(|(_, h)| **h == Some(hub))
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.n_features() + col]
    }

    pub fn row_cells(&self, row: usize) -> &[Option<f64>] {
        let n = self.n_features();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Column values; fails if any cell is missing.
    pub fn column(&self, col: usize) -> Result<Vec<f64>> {
        (0..self.n_rows())
            .map(|r| {
                self.get(r, col).ok_or_else(|| {
                    Error::InsufficientData(format!(
                        "feature `{}` missing for patient `{}`",
                        self.feature_names[col], self.patient_ids[r]
                    ))
                })
            })
            .collect()
    }

    /// Dense rows over the named columns, in the order given.
    pub fn dense_rows(&self, features: &[String]) -> Result<Vec<Vec<f64>>> {
        let cols = self.column_indices(features)?;
        (0..self.n_rows())
            .map(|r| {
                cols.iter()
                    .map(|&c| {
                        self.get(r, c).ok_or_else(|| {
                            Error::InsufficientData(format!(
                                "feature `{}` missing for patient `{}`",
                                self.feature_names[c], self.patient_ids[r]
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn column_indices(&self, features: &[String]) -> Result<Vec<usize>> {
        features
            .iter()
            .map(|f| {
                self.column_index(f)
                    .ok_or_else(|| Error::Config(format!("unknown feature `{f}`")))
            })
            .collect()
    }

    /// Sub-matrix of the given rows (in the order given).
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let n = self.n_features();
        let mut values = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            values.extend_from_slice(self.row_cells(r));
        }
        FeatureMatrix {
            patient_ids: rows.iter().map(|&r| self.patient_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            hubs: self.hubs.clone(),
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Sub-matrix of the named columns, keeping hub tags.
    pub fn select_columns(&self, features: &[String]) -> Result<FeatureMatrix> {
        let cols = self.column_indices(features)?;
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for r in 0..self.n_rows() {
            values.extend(cols.iter().map(|&c| self.get(r, c)));
        }
        Ok(FeatureMatrix {
            patient_ids: self.patient_ids.clone(),
            feature_names: features.to_vec(),
            hubs: cols.iter().map(|&c| self.hubs[c]).collect(),
            values,
            labels: self.labels.clone(),
        })
    }

    /// Overwrites one cell. Used to build perturbed copies in tests and tools.
    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        let n = self.n_features();
        self.values[row * n + col] = value.filter(|v| v.is_finite());
    }

    /// Patient records carrying this matrix's cells as precomputed features.
    pub fn records(&self) -> Vec<PatientRecord> {
        (0..self.n_rows())
            .map(|r| PatientRecord {
                patient_id: self.patient_ids[r].clone(),
                label: self.labels[r],
                beat_series_ref: None,
                precomputed_features: self
                    .feature_names
                    .iter()
                    .cloned()
                    .zip(self.row_cells(r).iter().copied())
                    .collect(),
            })
            .collect()
    }

    fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> FeatureMatrix {
        let n = self.n_features();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v.map(|x| f(i % n, x)))
            .collect();
        FeatureMatrix {
            values,
            ..self.clone()
        }
    }
}

/// Reads a cohort-CSV file. The first column holds the patient id and a
/// column named `label` holds the 0/1 class; every other column is a feature.
/// Empty, `NA` and unparseable cells become missing.
pub fn load_cohort(path: &Path) -> Result<(FeatureMatrix, Vec<PatientRecord>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cohort(file, &path.display().to_string())
}

pub fn read_cohort<R: std::io::Read>(
    reader: R,
    context: &str,
) -> Result<(FeatureMatrix, Vec<PatientRecord>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::format(context, Some(1), e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(Error::format(
            context,
            Some(1),
            "header needs an id column and a `label` column",
        ));
    }
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::format(context, Some(1), "missing `label` column"))?;
    if label_col == 0 {
        return Err(Error::format(
            context,
            Some(1),
            "first column must be the patient id",
        ));
    }
    let feature_cols: Vec<usize> = (1..header.len()).filter(|&c| c != label_col).collect();
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&c| header[c].to_string())
        .collect();

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let lineno = i + 2;
        let rec = rec.map_err(|e| Error::format(context, Some(lineno), e.to_string()))?;
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::format(
                context,
                Some(lineno),
                format!("duplicate patient_id `{id}`"),
            ));
        }
        let label = match &rec[label_col] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::format(
                    context,
                    Some(lineno),
                    format!("label `{other}` is not 0 or 1"),
                ))
            }
        };
        let row: Vec<Option<f64>> = feature_cols.iter().map(|&c| parse_cell(&rec[c])).collect();
        ids.push(id);
        labels.push(label);
        rows.push(row);
    }
    let matrix = FeatureMatrix::new(ids, feature_names, rows, labels)?;
    let records = matrix.records();
    Ok((matrix, records))
}

fn parse_cell(cell: &str) -> Option<f64> {
    if cell.is_empty() || cell == "NA" {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes a cohort-CSV file. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_cohort(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_cohort_to(file, matrix).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path.display().to_string(), None, message),
        other => other,
    })
}

pub fn write_cohort_to<W: std::io::Write>(writer: W, matrix: &FeatureMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::format("cohort output", None, e.to_string());
    let mut header = vec!["patient_id".to_string(), "label".to_string()];
    header.extend(matrix.feature_names().iter().cloned());
    wtr.write_record(&header).map_err(csv_err)?;
    for r in 0..matrix.n_rows() {
        let mut rec = vec![
            matrix.patient_ids()[r].clone(),
            matrix.labels()[r].to_string(),
        ];
        rec.extend(
            matrix
                .row_cells(r)
                .iter()
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
        );
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::format("cohort output", None, e.to_string()))
}

/// Keeps only the rows with every `required` feature present.
pub fn filter_complete(matrix: &FeatureMatrix, required: &[String]) -> Result<FeatureMatrix> {
    let cols = matrix.column_indices(required)?;
    let keep: Vec<usize> = (0..matrix.n_rows())
        .filter(|&r| cols.iter().all(|&c| matrix.get(r, c).is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(matrix.select_rows(&keep))
}

/// Per-feature location and scale fitted by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl ScalingParams {
    /// Fits mean and sample standard deviation of the named columns.
    pub fn fit(matrix: &FeatureMatrix, features: &[String]) -> Result<Self> {
        let cols = matrix.column_indices(features)?;
        let mut means = Vec::with_capacity(cols.len());
        let mut std_devs = Vec::with_capacity(cols.len());
        for (&c, name) in cols.iter().zip(features) {
            let column = matrix.column(c)?;
            let sd = stats::std_dev(&column).ok_or_else(|| {
                Error::InsufficientData("standardization needs at least two rows".into())
            })?;
            if !(sd > 0.0) {
                return Err(Error::ZeroVariance(name.clone()));
            }
            means.push(stats::mean(&column).unwrap_or(0.0));
            std_devs.push(sd);
        }
        Ok(ScalingParams {
            feature_names: features.to_vec(),
            means,
            std_devs,
        })
    }

    fn lookup(&self, matrix: &FeatureMatrix) -> HashMap<usize, usize> {
        self.feature_names
            .iter()
            .enumerate()
            .filter_map(|(k, name)| matrix.column_index(name).map(|c| (c, k)))
            .collect()
    }

    /// Standardizes the fitted columns of `matrix`; other columns pass through.
    pub fn apply(&self, matrix: &FeatureMatrix) -> FeatureMatrix {
        let map = self.lookup(matrix);
        matrix.map_values(|c, x| match map.get(&c) {
            Some(&k) => (x - self.means[k]) / self.std_devs[k],
            None => x,
        })
    }

    pub fn invert(&self, matrix: &FeatureMatrix) -> FeatureMatrix {
        let map = self.lookup(matrix);
        matrix.map_values(|c, x| match map.get(&c) {
            Some(&k) => x * self.std_devs[k] + self.means[k],
            None => x,
        })
    }

    /// Standardizes a dense vector laid out in `feature_names` order.
    pub fn apply_dense(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// Rescales every column to sample mean 0 and sample standard deviation 1.
pub fn standardize(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, ScalingParams)> {
    let params = ScalingParams::fit(matrix, matrix.feature_names())?;
    Ok((params.apply(matrix), params))
}

/// Tags each feature with its hub. Mapping entries for features absent from
/// the matrix are ignored with a warning.
pub fn assign_hubs(matrix: &FeatureMatrix, mapping: &HubMap) -> Result<FeatureMatrix> {
    let unmapped: Vec<String> = matrix
        .feature_names()
        .iter()
        .filter(|n| mapping.get(n).is_none())
        .cloned()
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::UnmappedFeatures(unmapped));
    }
    let unused: Vec<&str> = mapping
        .iter()
        .map(|(n, _)| n)
        .filter(|n| matrix.column_index(n).is_none())
        .collect();
    if !unused.is_empty() {
        warn!(
            "hub mapping names features absent from the cohort: {}",
            unused.join(", ")
        );
    }
    let mut out = matrix.clone();
    out.hubs = matrix
        .feature_names()
        .iter()
        .map(|n| mapping.get(n))
        .collect();
    Ok(out)
}
