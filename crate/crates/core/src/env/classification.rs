use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{BanditEnvironment, InteractionStream};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Preprocessed classification table, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularData {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabularOptions {
    /// Columns forced to be treated as categorical even if they parse as numbers.
    pub categorical: Vec<String>,
    /// Columns dropped before preprocessing.
    pub drop: Vec<String>,
    /// Seed for the row shuffle.
    pub seed: u64,
}

enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl TabularData {
    /// Reads a CSV with a header row. Numeric columns are min-max scaled to
    /// [0, 1] (constant columns become all 0), categorical columns are
    /// one-hot expanded with levels in sorted order, and labels are mapped to
    /// `0..K` (numeric labels in numeric order, otherwise lexicographic).
    ///
    /// A column is categorical when listed in `options.categorical` or when
    /// none of its cells parse as a number. Otherwise any unparseable cell is
    /// an error.
    pub fn from_csv(path: impl AsRef<Path>, label_column: &str, options: &TabularOptions) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers: Vec<String> = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
        let label_idx = headers
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| Error::Format(format!("{}: no column named {label_column:?}", path.display())))?;
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            for (col, cell) in cells.iter_mut().zip(record.iter()) {
                col.push(cell.to_string());
            }
        }
        let n = cells[label_idx].len();
        if n == 0 {
            return Err(Error::NoData);
        }

        let mut feature_names = Vec::new();
        let mut columns = Vec::new();
        for (j, name) in headers.iter().enumerate() {
            if j == label_idx || options.drop.contains(name) {
                continue;
            }
            let col = std::mem::take(&mut cells[j]);
            let forced = options.categorical.contains(name);
            columns.push((name.clone(), classify_column(path, name, col, forced)?));
        }

        let mut features = vec![Vec::new(); n];
        for (name, col) in columns {
            match col {
                Column::Numeric(v) => {
                    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    for (row, x) in features.iter_mut().zip(&v) {
                        row.push(if hi > lo { (x - lo) / (hi - lo) } else { 0.0 });
                    }
                    feature_names.push(name);
                }
                Column::Categorical(v) => {
                    let levels: Vec<&String> = v.iter().collect::<BTreeSet<_>>().into_iter().collect();
                    for row in features.iter_mut().zip(&v) {
                        let (row, cell) = row;
                        row.extend(levels.iter().map(|l| if *l == cell { 1.0 } else { 0.0 }));
                    }
                    feature_names.extend(levels.iter().map(|l| format!("{name}={l}")));
                }
            }
        }

        let (labels, class_names) = factorize(&cells[label_idx]);
        if class_names.len() < 2 {
            return Err(Error::Format(format!(
                "{}: label column {label_column:?} has a single class",
                path.display()
            )));
        }
        Ok(TabularData {
            feature_names,
            features,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column: String::new(),
        msg: e.to_string(),
    }
}

fn classify_column(path: &Path, name: &str, col: Vec<String>, forced: bool) -> Result<Column> {
    if forced {
        return Ok(Column::Categorical(col));
    }
    let parsed: Vec<Option<f64>> = col.iter().map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
    if parsed.iter().all(Option::is_none) {
        return Ok(Column::Categorical(col));
    }
    if let Some(i) = parsed.iter().position(Option::is_none) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            // header is line 1
            row: i + 2,
            column: name.to_string(),
            msg: format!("cannot parse {:?} as a number", col[i]),
        });
    }
    Ok(Column::Numeric(parsed.into_iter().map(Option::unwrap).collect()))
}

fn factorize(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let numeric: Option<Vec<f64>> = names.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(vals) = numeric {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        names = order.into_iter().map(|i| names[i].clone()).collect();
    }
    let labels = raw.iter().map(|s| names.iter().position(|n| n == s).unwrap()).collect();
    (labels, names)
}

/// A classification table served as a bandit: each class is an arm and the
/// reward is 1 for the correct class.
#[derive(Clone, Debug)]
pub struct ClassificationBanditEnv {
    pub data: Arc<TabularData>,
    pub order: Vec<usize>,
}

impl ClassificationBanditEnv {
    /// Shuffles rows with `seed`.
    pub fn new(data: Arc<TabularData>, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut stream(seed));
        ClassificationBanditEnv { data, order }
    }

    pub fn context(&self, t: usize) -> Result<&[f64]> {
        let row = self.row(t)?;
        Ok(&self.data.features[row])
    }

    fn row(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.order.len() {
            return Err(Error::Exhausted(t));
        }
        Ok(self.order[t - 1])
    }

    /// Reward and regret of playing `action` at round `t` (1-based).
    pub fn step(&self, t: usize, action: usize) -> Result<(f64, f64)> {
        let label = self.data.labels[self.row(t)?];
        let reward = if action == label { 1.0 } else { 0.0 };
        Ok((reward, 1.0 - reward))
    }
}

/// Loads a CSV and shuffles its rows with `options.seed`.
pub fn load_tabular_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    options: &TabularOptions,
) -> Result<ClassificationBanditEnv> {
    let data = TabularData::from_csv(path, label_column, options)?;
    Ok(ClassificationBanditEnv::new(Arc::new(data), options.seed))
}

impl BanditEnvironment for ClassificationBanditEnv {
    fn n_arms(&self) -> usize {
        self.data.n_classes()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Serves the first `horizon` rows of a fresh shuffle drawn from `seed`.
    fn materialize(&self, horizon: usize, seed: u64) -> Result<InteractionStream> {
        if horizon > self.data.len() {
            return Err(Error::Exhausted(self.data.len() + 1));
        }
        let env = ClassificationBanditEnv::new(self.data.clone(), seed);
        let k = self.n_arms();
        let mut contexts = Vec::with_capacity(horizon);
        let mut means = Vec::with_capacity(horizon);
        for &row in &env.order[..horizon] {
            contexts.push(self.data.features[row].clone());
            let mut m = vec![0.0; k];
            m[self.data.labels[row]] = 1.0;
            means.push(m);
        }
        let rewards = means.clone();
        Ok(InteractionStream { contexts, means, rewards })
    }

    fn mean_rewards(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}
