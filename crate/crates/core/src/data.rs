//! Dataset ingestion and activity preprocessing: z-score outlier removal,
//! log transform, median binning and categorical labels.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vectorplus_chem::{canonical, parse_smiles};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    Log,
}

/// Scale on which the z-score filter measures outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZScale {
    Raw,
    #[default]
    Log,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub raw_count: usize,
    pub removed_invalid: usize,
    pub removed_outliers: usize,
    /// Removal count of every z-score pass, in order.
    pub outlier_passes: Vec<usize>,
    pub removed_duplicates: usize,
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRow {
    pub smiles: String,
    /// nM
    pub ic50: f64,
    pub log_ic50: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityTable {
    pub rows: Vec<ActivityRow>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub smiles: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    pub rows: Vec<LabelRow>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub smiles: String,
    /// 1-based class id
    pub label: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub records: Vec<Record>,
    pub class_names: Vec<String>,
    pub provenance: Provenance,
}

impl LabeledDataset {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for r in &self.records {
            counts[r.label - 1] += 1;
        }
        counts
    }

    pub fn smiles(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.smiles.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks the dataset invariants: valid SMILES, C ≥ 2, labels in range.
    pub fn validate(&self) -> Result<()> {
        if self.class_count() < 2 {
            return Err(Error::InvalidClassCount(self.class_count()));
        }
        for r in &self.records {
            parse_smiles(&r.smiles).map_err(|_| Error::InvalidSmiles(r.smiles.clone()))?;
            if r.label == 0 || r.label > self.class_count() {
                return Err(Error::UnknownLabel(r.label.to_string()));
            }
        }
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ds: LabeledDataset = serde_json::from_str(&text)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["smiles", "label", "class", "value"])?;
        for r in &self.records {
            let value = r.value.map(|v| format!("{v:.16e}")).unwrap_or_default();
            w.write_record([
                &r.smiles,
                &r.label.to_string(),
                &self.class_names[r.label - 1],
                &value,
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    Activity {
        smiles_col: String,
        value_col: String,
    },
    Labels {
        smiles_col: String,
        label_col: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Activity(ActivityTable),
    Labels(LabelTable),
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<Loaded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let loaded = match schema {
        Schema::Activity {
            smiles_col,
            value_col,
        } => Loaded::Activity(read_activity(
            file,
            smiles_col,
            value_col,
            &path.display().to_string(),
        )?),
        Schema::Labels {
            smiles_col,
            label_col,
        } => Loaded::Labels(read_labels(
            file,
            smiles_col,
            label_col,
            &path.display().to_string(),
        )?),
    };
    Ok(loaded)
}

fn column(headers: &csv::StringRecord, name: &str, source: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("{source}: missing column {name:?}")))
}

pub fn read_activity(
    input: impl Read,
    smiles_col: &str,
    value_col: &str,
    source: &str,
) -> Result<ActivityTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let si = column(&headers, smiles_col, source)?;
    let vi = column(&headers, value_col, source)?;
    let mut provenance = Provenance::default();
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        provenance.raw_count += 1;
        let smiles = rec.get(si).unwrap_or("").to_string();
        let raw = rec.get(vi).unwrap_or("");
        let ic50: f64 = raw.parse().map_err(|_| {
            Error::Schema(format!("{source}: line {}: bad value {raw:?}", line + 2))
        })?;
        if parse_smiles(&smiles).is_err() {
            log::warn!(
                "{source}: line {}: dropping unparseable SMILES {smiles:?}",
                line + 2
            );
            provenance.removed_invalid += 1;
            continue;
        }
        rows.push(ActivityRow {
            smiles,
            ic50,
            log_ic50: None,
        });
    }
    Ok(ActivityTable { rows, provenance })
}

pub fn read_labels(
    input: impl Read,
    smiles_col: &str,
    label_col: &str,
    source: &str,
) -> Result<LabelTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let si = column(&headers, smiles_col, source)?;
    let li = column(&headers, label_col, source)?;
    let mut provenance = Provenance::default();
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        provenance.raw_count += 1;
        let smiles = rec.get(si).unwrap_or("").to_string();
        if parse_smiles(&smiles).is_err() {
            log::warn!(
                "{source}: line {}: dropping unparseable SMILES {smiles:?}",
                line + 2
            );
            provenance.removed_invalid += 1;
            continue;
        }
        rows.push(LabelRow {
            smiles,
            label: rec.get(li).unwrap_or("").to_string(),
        });
    }
    Ok(LabelTable { rows, provenance })
}

/// Drops rows whose |z| exceeds `threshold`. Mean and population standard
/// deviation are computed once on the input.
pub fn zscore_filter(
    table: &ActivityTable,
    threshold: f64,
    scale: ZScale,
) -> Result<ActivityTable> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "z threshold must be positive, got {threshold}"
        )));
    }
    if table.rows.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "z-score needs 2 rows, have {}",
            table.rows.len()
        )));
    }
    let values = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| match scale {
            ZScale::Raw => Ok(r.ic50),
            ZScale::Log if r.ic50 > 0.0 => Ok(r.ic50.ln()),
            ZScale::Log => Err(Error::NonPositiveValue { row: i }),
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if std == 0.0 {
        return Err(Error::DegenerateData(
            "all values equal, standard deviation is 0".into(),
        ));
    }
    let mut out = table.clone();
    out.rows = table
        .rows
        .iter()
        .zip(&values)
        .filter(|(_, v)| ((*v - mean) / std).abs() <= threshold)
        .map(|(r, _)| r.clone())
        .collect();
    let removed = table.rows.len() - out.rows.len();
    out.provenance.removed_outliers += removed;
    out.provenance.outlier_passes.push(removed);
    log::info!("z-score filter (|z| > {threshold}) removed {removed} rows");
    Ok(out)
}

pub fn log_transform(table: &ActivityTable) -> Result<ActivityTable> {
    let mut out = table.clone();
    for (i, r) in out.rows.iter_mut().enumerate() {
        if !(r.ic50 > 0.0) {
            return Err(Error::NonPositiveValue { row: i });
        }
        r.log_ic50 = Some(r.ic50.ln());
    }
    out.provenance.transform = Transform::Log;
    Ok(out)
}

pub const MEDIAN_CLASS_NAMES: [&str; 2] = ["high activity", "low activity"];

/// Splits at the median log value. Even counts use the lower middle element,
/// and values equal to the median go to class 1.
pub fn median_bin(table: &ActivityTable, dedup: bool) -> Result<LabeledDataset> {
    if table.rows.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "median binning needs 2 rows, have {}",
            table.rows.len()
        )));
    }
    let logs = table
        .rows
        .iter()
        .map(|r| r.log_ic50)
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| {
            Error::InvalidConfig("median binning needs log-transformed values".into())
        })?;
    let median = lower_median(&logs);
    let records = table
        .rows
        .iter()
        .zip(&logs)
        .map(|(r, &v)| Record {
            smiles: r.smiles.clone(),
            label: if v <= median { 1 } else { 2 },
            value: Some(v),
        })
        .collect();
    let class_names = MEDIAN_CLASS_NAMES.iter().map(|s| s.to_string()).collect();
    finish(records, class_names, table.provenance.clone(), dedup)
}

pub fn lower_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(sorted.len() - 1) / 2]
}

/// Maps categorical labels to class ids. With no `class_names` given, the
/// distinct labels in sorted order become the classes.
pub fn from_class_labels(
    table: &LabelTable,
    class_names: &[String],
    dedup: bool,
) -> Result<LabeledDataset> {
    let names: Vec<String> = if class_names.is_empty() {
        let set: BTreeSet<&str> = table.rows.iter().map(|r| r.label.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    } else {
        class_names.to_vec()
    };
    if names.len() < 2 {
        return Err(Error::InvalidClassCount(names.len()));
    }
    let records = table
        .rows
        .iter()
        .map(|r| {
            let idx = names
                .iter()
                .position(|n| *n == r.label)
                .ok_or_else(|| Error::UnknownLabel(r.label.clone()))?;
            Ok(Record {
                smiles: r.smiles.clone(),
                label: idx + 1,
                value: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(records, names, table.provenance.clone(), dedup)
}

fn finish(
    records: Vec<Record>,
    class_names: Vec<String>,
    mut provenance: Provenance,
    dedup: bool,
) -> Result<LabeledDataset> {
    let records = if dedup {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(records.len());
        for r in records {
            let canon = canonical(&parse_smiles(&r.smiles)?);
            if seen.insert((r.label, canon)) {
                kept.push(r);
            } else {
                log::warn!("dropping duplicate {:?} in class {}", r.smiles, r.label);
                provenance.removed_duplicates += 1;
            }
        }
        kept
    } else {
        records
    };
    let ds = LabeledDataset {
        records,
        class_names,
        provenance,
    };
    if ds.class_count() < 2 {
        return Err(Error::InvalidClassCount(ds.class_count()));
    }
    Ok(ds)
}
