//! Precomputed question feature vectors, stored as JSONL:
//! `{"id": "...", "features": [f floats]}` per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SprintError};
use crate::outcomes::OutcomeMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionFeatures {
    ids: Vec<String>,
    data: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct FeatureLine {
    id: String,
    features: Vec<f64>,
}

impl QuestionFeatures {
    pub fn new(ids: Vec<String>, data: Array2<f64>) -> Result<Self> {
        if ids.len() != data.nrows() {
            return Err(SprintError::Alignment(format!(
                "{} ids for {} feature rows",
                ids.len(),
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(SprintError::Dimension("feature dimension must be >= 1".into()));
        }
        if let Some(((i, _), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(SprintError::Numeric(format!("features of {:?} are not finite", ids[i])));
        }
        Ok(Self { ids, data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            data: Array2::from_shape_fn((rows.len(), self.dim()), |(r, c)| self.data[[rows[r], c]]),
        }
    }

    /// Reorders rows to follow the question order of `z`. Fails if the two
    /// files do not cover exactly the same question ids.
    pub fn align_to(&self, z: &OutcomeMatrix) -> Result<Self> {
        if self.n() != z.n() {
            return Err(SprintError::Alignment(format!(
                "features have {} rows, outcomes have {}",
                self.n(),
                z.n()
            )));
        }
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let rows = z
            .question_ids()
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| SprintError::Alignment(format!("question {id:?} has no feature vector")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_rows(&rows))
    }

    pub fn read_jsonl<R: BufRead>(reader: R, location: &str) -> Result<Self> {
        let mut ids = Vec::new();
        let mut flat = Vec::new();
        let mut dim = None;
        let mut seen = std::collections::HashSet::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| SprintError::io(location, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = || format!("{location}:{}", lineno + 1);
            let parsed: FeatureLine = serde_json::from_str(&line).map_err(|e| SprintError::parse(at(), e))?;
            match dim {
                None => dim = Some(parsed.features.len()),
                Some(d) if d != parsed.features.len() => {
                    return Err(SprintError::parse(
                        at(),
                        format!("{} features, earlier lines have {d}", parsed.features.len()),
                    ))
                }
                _ => {}
            }
            if !seen.insert(parsed.id.clone()) {
                return Err(SprintError::DuplicateQuestion(parsed.id));
            }
            ids.push(parsed.id);
            flat.extend(parsed.features);
        }
        let dim = dim.ok_or_else(|| SprintError::parse(location, "no feature lines"))?;
        let data = Array2::from_shape_vec((ids.len(), dim), flat).expect("row lengths checked");
        Self::new(ids, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| SprintError::io(path, e))?;
        Self::read_jsonl(BufReader::new(file), &path.display().to_string())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, row) in self.ids.iter().zip(self.data.rows()) {
            let line = FeatureLine {
                id: id.clone(),
                features: row.to_vec(),
            };
            let text = serde_json::to_string(&line).expect("finite features serialize");
            writeln!(w, "{text}").map_err(|e| SprintError::io("features writer", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| SprintError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| SprintError::io(path, e))
    }
}
